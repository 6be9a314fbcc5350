//! Constitutive closure: stress, fluxes, reaction and entropy production.
//!
//! Kinematics are planar: `D` is the symmetric part of a 2×2 velocity
//! gradient and `|D|²` its squared Frobenius norm. Pass `reg.model()` of a
//! [`crate::regularization::RegularizedModel`] to get the regularized
//! variants with `ψ1^ε` substituted.

use serde::{Deserialize, Serialize};

use crate::constitutive::model::{check_b, check_theta, check_theta_closed};
use crate::constitutive::{FreeEnergyModel, MaterialCoefficients};
use crate::error::Result;

pub type Vec2 = [f64; 2];
pub type Sym2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateGradients {
    pub grad_theta: Vec2,
    pub grad_b: Vec2,
    /// Symmetric velocity gradient.
    pub d: Sym2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxSet {
    pub j_e: Vec2,
    pub j_eta: Vec2,
}

/// The four terms of `θζ` and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DissipationBreakdown {
    pub thermal: f64,
    pub viscous: f64,
    pub relaxation: f64,
    pub stress_diffusion: f64,
    pub total: f64,
}

impl DissipationBreakdown {
    pub fn new(thermal: f64, viscous: f64, relaxation: f64, stress_diffusion: f64) -> Self {
        Self {
            thermal,
            viscous,
            relaxation,
            stress_diffusion,
            total: thermal + viscous + relaxation + stress_diffusion,
        }
    }

    pub fn min_term(&self) -> f64 {
        self.thermal
            .min(self.viscous)
            .min(self.relaxation)
            .min(self.stress_diffusion)
    }
}

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn frobenius_sq(d: &Sym2) -> f64 {
    d[0][0] * d[0][0] + d[0][1] * d[0][1] + d[1][0] * d[1][0] + d[1][1] * d[1][1]
}

/// `T_δ = 2ν D`.
pub fn deviatoric_stress(nu: f64, d: &Sym2) -> Sym2 {
    let k = 2.0 * nu;
    [[k * d[0][0], k * d[0][1]], [k * d[1][0], k * d[1][1]]]
}

/// `j_e = -κ∇θ - (ψ1 - θψ1') ψ2'(b) α ∇b`.
pub fn energy_flux(
    model: &FreeEnergyModel,
    coeffs: &MaterialCoefficients,
    theta: f64,
    b: f64,
    g: &StateGradients,
) -> Result<Vec2> {
    check_theta(theta)?;
    check_b(b)?;
    let kappa = coeffs.kappa(theta, b);
    let cross = model.psi1.energy_part(theta) * model.psi2.d1(b) * coeffs.alpha(theta, b);
    Ok([
        -kappa * g.grad_theta[0] - cross * g.grad_b[0],
        -kappa * g.grad_theta[1] - cross * g.grad_b[1],
    ])
}

/// `j_η = -κ∇θ/θ + ψ1'(θ) ψ2'(b) α ∇b`.
pub fn entropy_flux(
    model: &FreeEnergyModel,
    coeffs: &MaterialCoefficients,
    theta: f64,
    b: f64,
    g: &StateGradients,
) -> Result<Vec2> {
    check_theta(theta)?;
    check_b(b)?;
    let k = coeffs.kappa(theta, b) / theta;
    let cross = model.psi1.d1(theta) * model.psi2.d1(b) * coeffs.alpha(theta, b);
    Ok([
        -k * g.grad_theta[0] + cross * g.grad_b[0],
        -k * g.grad_theta[1] + cross * g.grad_b[1],
    ])
}

pub fn fluxes(
    model: &FreeEnergyModel,
    coeffs: &MaterialCoefficients,
    theta: f64,
    b: f64,
    g: &StateGradients,
) -> Result<FluxSet> {
    Ok(FluxSet {
        j_e: energy_flux(model, coeffs, theta, b, g)?,
        j_eta: entropy_flux(model, coeffs, theta, b, g)?,
    })
}

/// `h(θ, b)`, defined for `θ ≥ 0`.
pub fn reaction(
    model: &FreeEnergyModel,
    coeffs: &MaterialCoefficients,
    theta: f64,
    b: f64,
) -> Result<f64> {
    check_theta_closed(theta)?;
    check_b(b)?;
    Ok(coeffs.h(theta, b, model.psi2.d1(b)))
}

/// `θζ = κ|∇θ|²/θ + 2ν|D|² + h ψ1 ψ2' + ψ1 ψ2'' α |∇b|²`.
///
/// The relaxation term is written with `h` so that directly specified
/// reactions are covered; for `h = Cψ2'` it equals `C ψ1 (ψ2')²`.
pub fn entropy_production(
    model: &FreeEnergyModel,
    coeffs: &MaterialCoefficients,
    theta: f64,
    b: f64,
    g: &StateGradients,
) -> Result<DissipationBreakdown> {
    check_theta(theta)?;
    check_b(b)?;
    let psi1 = model.psi1.value(theta);
    let dpsi2 = model.psi2.d1(b);
    let thermal = coeffs.kappa(theta, b) * dot(g.grad_theta, g.grad_theta) / theta;
    let viscous = 2.0 * coeffs.nu(theta, b) * frobenius_sq(&g.d);
    let relaxation = coeffs.h(theta, b, dpsi2) * psi1 * dpsi2;
    let stress_diffusion =
        psi1 * model.psi2.d2(b) * coeffs.alpha(theta, b) * dot(g.grad_b, g.grad_b);
    Ok(DissipationBreakdown::new(
        thermal,
        viscous,
        relaxation,
        stress_diffusion,
    ))
}

/// Relaxation heating of the scalar Oldroyd-B model,
/// `(3μ²/2ν1)(b + 1/b - 2)`.
pub fn scalar_oldroyd_heating(mu_elastic: f64, nu1: f64, b: f64) -> f64 {
    1.5 * mu_elastic * mu_elastic / nu1 * (b + 1.0 / b - 2.0)
}
