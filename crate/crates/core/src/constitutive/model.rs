use serde::{Deserialize, Serialize};

use super::functions::ScalarFunction;
use crate::error::{Error, Result};

/// Helmholtz free energy `ψ(θ, b) = ψ0(θ) + ψ1(θ) ψ2(b)` with unit density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyModel {
    pub psi0: ScalarFunction,
    pub psi1: ScalarFunction,
    pub psi2: ScalarFunction,
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity: "theta",
            value: theta,
            domain: "(0, inf)",
        })
    }
}

pub(crate) fn check_theta_closed(theta: f64) -> Result<()> {
    if theta >= 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity: "theta",
            value: theta,
            domain: "[0, inf)",
        })
    }
}

pub(crate) fn check_b(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity: "b",
            value: b,
            domain: "(0, inf)",
        })
    }
}

impl FreeEnergyModel {
    pub fn new(psi0: ScalarFunction, psi1: ScalarFunction, psi2: ScalarFunction) -> Self {
        Self { psi0, psi1, psi2 }
    }

    pub fn psi(&self, theta: f64, b: f64) -> Result<f64> {
        check_theta(theta)?;
        check_b(b)?;
        Ok(self.psi0.value(theta) + self.psi1.value(theta) * self.psi2.value(b))
    }

    /// Entropy density `η = -∂ψ/∂θ`.
    pub fn eta(&self, theta: f64, b: f64) -> Result<f64> {
        check_theta(theta)?;
        check_b(b)?;
        Ok(self.eta_unchecked(theta, b))
    }

    #[inline]
    pub(crate) fn eta_unchecked(&self, theta: f64, b: f64) -> f64 {
        -self.psi0.d1(theta) - self.psi1.d1(theta) * self.psi2.value(b)
    }

    /// `ẽ0(θ) = ψ0 - θψ0'`; equals its limit `0` at `θ = 0`.
    pub fn e0(&self, theta: f64) -> Result<f64> {
        check_theta_closed(theta)?;
        Ok(self.psi0.energy_part(theta))
    }

    /// `ẽ1(θ) = ψ1 - θψ1'`.
    pub fn e1(&self, theta: f64) -> Result<f64> {
        check_theta_closed(theta)?;
        Ok(self.psi1.energy_part(theta))
    }

    /// Internal energy `ẽ(θ, b) = ẽ0(θ) + ẽ1(θ) ψ2(b)`.
    pub fn internal_energy(&self, theta: f64, b: f64) -> Result<f64> {
        check_theta(theta)?;
        check_b(b)?;
        Ok(self.energy_unchecked(theta, b))
    }

    #[inline]
    pub(crate) fn energy_unchecked(&self, theta: f64, b: f64) -> f64 {
        self.psi0.energy_part(theta) + self.psi1.energy_part(theta) * self.psi2.value(b)
    }

    /// Specific heat at constant volume, `∂ẽ/∂θ = -θψ0'' - θψ1''ψ2`.
    pub fn heat_capacity(&self, theta: f64, b: f64) -> Result<f64> {
        check_theta(theta)?;
        check_b(b)?;
        Ok(self.heat_capacity_unchecked(theta, b))
    }

    #[inline]
    pub(crate) fn heat_capacity_unchecked(&self, theta: f64, b: f64) -> f64 {
        self.psi0.energy_slope(theta) + self.psi1.energy_slope(theta) * self.psi2.value(b)
    }
}

/// A material coefficient as a function of `(θ, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientFn {
    Constant {
        value: f64,
    },
    /// `Σ_k coeffs[k] b^k`, independent of temperature.
    PolynomialB {
        coeffs: Vec<f64>,
    },
    /// `low + (high - low) θ / (θ + scale)`: bounded, monotone in `θ`.
    ThermalRamp {
        low: f64,
        high: f64,
        scale: f64,
    },
}

impl CoefficientFn {
    pub fn constant(value: f64) -> Self {
        CoefficientFn::Constant { value }
    }

    #[inline]
    pub fn eval(&self, theta: f64, b: f64) -> f64 {
        match self {
            CoefficientFn::Constant { value } => *value,
            CoefficientFn::PolynomialB { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * b + c)
            }
            CoefficientFn::ThermalRamp { low, high, scale } => {
                low + (high - low) * theta / (theta + scale)
            }
        }
    }
}

/// The right-hand side `h(θ, b)` of the evolution equation for `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Relaxation {
    /// `h = C(θ, b) ψ2'(b)`.
    Coefficient { c: CoefficientFn },
    /// `h` given directly.
    Direct { h: CoefficientFn },
}

/// Transport and relaxation coefficients with their admissibility constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialCoefficients {
    pub nu: CoefficientFn,
    pub kappa: CoefficientFn,
    pub alpha: CoefficientFn,
    pub relaxation: Relaxation,
    pub c1: f64,
    pub c2: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl MaterialCoefficients {
    #[inline]
    pub fn nu(&self, theta: f64, b: f64) -> f64 {
        self.nu.eval(theta, b)
    }

    #[inline]
    pub fn kappa(&self, theta: f64, b: f64) -> f64 {
        self.kappa.eval(theta, b)
    }

    #[inline]
    pub fn alpha(&self, theta: f64, b: f64) -> f64 {
        self.alpha.eval(theta, b)
    }

    /// `h(θ, b)` given `ψ2'(b)`.
    #[inline]
    pub fn h(&self, theta: f64, b: f64, psi2_prime: f64) -> f64 {
        match &self.relaxation {
            Relaxation::Coefficient { c } => c.eval(theta, b) * psi2_prime,
            Relaxation::Direct { h } => h.eval(theta, b),
        }
    }

    pub fn check_bounds(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 >= self.c1) {
            return Err(crate::error::param(
                "c1/c2",
                self.c1,
                "need 0 < c1 <= c2",
            ));
        }
        if !(self.b_min > 0.0 && self.b_min < 1.0 && self.b_max > 1.0 && self.b_max.is_finite()) {
            return Err(crate::error::param(
                "b_min/b_max",
                self.b_min,
                "need 0 < b_min < 1 < b_max",
            ));
        }
        Ok(())
    }
}
