//! Scalar Oldroyd-B and Giesekus models with stress diffusion.

use serde::{Deserialize, Serialize};

use super::functions::ScalarFunction;
use super::model::{CoefficientFn, FreeEnergyModel, MaterialCoefficients, Relaxation};
use crate::error::{param, Result};

fn default_b_min() -> f64 {
    0.5
}

fn default_b_max() -> f64 {
    2.0
}

/// Parameters of the scalar Oldroyd-B model with stress diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OldroydB {
    pub c_v: f64,
    pub theta_ref: f64,
    /// Elastic modulus `μ`; the coupling function is `ψ1 ≡ 3μ/2`.
    pub mu_elastic: f64,
    /// Relaxation viscosity `ν1`.
    pub nu1: f64,
    /// Stress-diffusion coefficient `μ̃`; the mobility is `α = μ̃/ν1`.
    pub mu_tilde: f64,
    pub nu_visc: f64,
    pub kappa_heat: f64,
    #[serde(default = "default_b_min")]
    pub b_min: f64,
    #[serde(default = "default_b_max")]
    pub b_max: f64,
}

impl OldroydB {
    pub fn new(
        c_v: f64,
        theta_ref: f64,
        mu_elastic: f64,
        nu1: f64,
        mu_tilde: f64,
        nu_visc: f64,
        kappa_heat: f64,
    ) -> Self {
        Self {
            c_v,
            theta_ref,
            mu_elastic,
            nu1,
            mu_tilde,
            nu_visc,
            kappa_heat,
            b_min: default_b_min(),
            b_max: default_b_max(),
        }
    }

    pub fn with_bounds(mut self, b_min: f64, b_max: f64) -> Self {
        self.b_min = b_min;
        self.b_max = b_max;
        self
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("c_v", self.c_v),
            ("theta_ref", self.theta_ref),
            ("mu_elastic", self.mu_elastic),
            ("nu1", self.nu1),
            ("mu_tilde", self.mu_tilde),
            ("nu_visc", self.nu_visc),
            ("kappa_heat", self.kappa_heat),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(param(name, v, "must be positive and finite"));
            }
        }
        if !(self.b_min > 0.0 && self.b_min < 1.0) {
            return Err(param("b_min", self.b_min, "need 0 < b_min < 1"));
        }
        if !(self.b_max > 1.0 && self.b_max.is_finite()) {
            return Err(param("b_max", self.b_max, "need 1 < b_max < inf"));
        }
        Ok(())
    }

    /// Relaxation rate `μ/ν1`.
    pub fn rate(&self) -> f64 {
        self.mu_elastic / self.nu1
    }

    pub fn free_energy(&self) -> FreeEnergyModel {
        FreeEnergyModel::new(
            ScalarFunction::ThermalLog {
                c_v: self.c_v,
                theta_ref: self.theta_ref,
            },
            ScalarFunction::constant(1.5 * self.mu_elastic),
            ScalarFunction::Stretch {
                log_weight: 1.0,
                quad_weight: 0.0,
            },
        )
    }

    fn coefficients(&self, relaxation: Relaxation, h_max: f64) -> MaterialCoefficients {
        let alpha = self.mu_tilde / self.nu1;
        let values = [self.c_v, self.nu_visc, self.kappa_heat, alpha];
        let c1 = values.iter().copied().fold(f64::INFINITY, f64::min);
        let c2 = values.iter().copied().chain([h_max]).fold(0.0, f64::max);
        MaterialCoefficients {
            nu: CoefficientFn::constant(self.nu_visc),
            kappa: CoefficientFn::constant(self.kappa_heat),
            alpha: CoefficientFn::constant(alpha),
            relaxation,
            c1,
            c2,
            b_min: self.b_min,
            b_max: self.b_max,
        }
    }
}

/// Parameters of the scalar Giesekus model: Oldroyd-B free energy with
/// `h = (μ/ν1)(a b² + (1 - 2a) b - (1 - a))`, `a ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Giesekus {
    #[serde(flatten)]
    pub base: OldroydB,
    pub a_g: f64,
}

/// Scalar Oldroyd-B preset: `ψ1 ≡ 3μ/2`, `ψ2 = b - 1 - ln b`, `C = (μ/ν1) b`.
pub fn preset_oldroyd_b(p: &OldroydB) -> Result<(FreeEnergyModel, MaterialCoefficients)> {
    p.check()?;
    let r = p.rate();
    let relaxation = Relaxation::Coefficient {
        c: CoefficientFn::PolynomialB {
            coeffs: vec![0.0, r],
        },
    };
    let h_max = r * (1.0 - p.b_min).max(p.b_max - 1.0);
    Ok((p.free_energy(), p.coefficients(relaxation, h_max)))
}

/// Scalar Giesekus preset.
///
/// `h` factors as `(μ/ν1)(b - 1)(a b + 1 - a)`, so `C = h/ψ2'` is the
/// polynomial `(μ/ν1)(a b² + (1 - a) b)` with no singularity at `b = 1`.
pub fn preset_giesekus(p: &Giesekus) -> Result<(FreeEnergyModel, MaterialCoefficients)> {
    p.base.check()?;
    if !(0.0..=1.0).contains(&p.a_g) {
        return Err(param("a_g", p.a_g, "mobility parameter must lie in [0, 1]"));
    }
    let r = p.base.rate();
    let a = p.a_g;
    let relaxation = Relaxation::Coefficient {
        c: CoefficientFn::PolynomialB {
            coeffs: vec![0.0, r * (1.0 - a), r * a],
        },
    };
    let h = |b: f64| r * (b - 1.0) * (a * b + 1.0 - a);
    let h_max = h(p.base.b_min).abs().max(h(p.base.b_max).abs());
    Ok((p.base.free_energy(), p.base.coefficients(relaxation, h_max)))
}
