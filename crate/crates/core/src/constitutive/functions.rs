//! Built-in scalar functions with analytic first and second derivatives.
//!
//! Models are assembled from this closed table so that configuration files
//! can name them without executing code.

use serde::{Deserialize, Serialize};

use crate::regularization::Psi1Blend;

/// Where a scalar function may be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// `(0, ∞)`
    Positive,
    /// `[0, ∞)`
    NonNegative,
}

impl Domain {
    pub fn contains(self, s: f64) -> bool {
        match self {
            Domain::Positive => s > 0.0 && s.is_finite(),
            Domain::NonNegative => s >= 0.0 && s.is_finite(),
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Domain::Positive => "(0, inf)",
            Domain::NonNegative => "[0, inf)",
        }
    }
}

/// A real function of one variable together with its first two derivatives.
///
/// Besides `value`, `d1` and `d2`, every variant provides the Legendre-type
/// combinations `energy_part(s) = f(s) - s f'(s)` and
/// `energy_slope(s) = -s f''(s)` in closed form; those are what the internal
/// energy and the heat capacity are built from, and evaluating them directly
/// avoids cancellation near `s = 0` and for large `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFunction {
    /// `f(s) = value`
    Constant { value: f64 },
    /// `f(s) = -c_v s (ln(s / theta_ref) - 1)`, constant heat capacity `c_v`.
    ThermalLog { c_v: f64, theta_ref: f64 },
    /// Thermal part whose heat capacity `-s f''(s) = c_low + c_rise s/(1+s)`
    /// rises monotonically from `c_low` to `c_low + c_rise`.
    ThermalTwoLevel {
        c_low: f64,
        c_rise: f64,
        theta_ref: f64,
    },
    /// `f(s) = base + rise (1 - exp(-s/scale))`: nondecreasing and concave.
    Saturating { base: f64, rise: f64, scale: f64 },
    /// `f(s) = log_weight (s - 1 - ln s) + quad_weight (s - 1)^2`.
    Stretch {
        log_weight: f64,
        #[serde(default)]
        quad_weight: f64,
    },
    /// `f(s) = -weight ln s`.
    Logarithmic { weight: f64 },
    /// Regularized coupling function built by [`crate::regularization`].
    #[serde(skip)]
    Blended(Box<Psi1Blend>),
}

impl ScalarFunction {
    pub fn constant(value: f64) -> Self {
        ScalarFunction::Constant { value }
    }

    pub fn domain(&self) -> Domain {
        match self {
            ScalarFunction::Constant { .. }
            | ScalarFunction::Saturating { .. }
            | ScalarFunction::Blended(_) => Domain::NonNegative,
            ScalarFunction::ThermalLog { .. }
            | ScalarFunction::ThermalTwoLevel { .. }
            | ScalarFunction::Stretch { .. }
            | ScalarFunction::Logarithmic { .. } => Domain::Positive,
        }
    }

    /// Function value. Thermal variants return their limit `0` at `s = 0`.
    pub fn value(&self, s: f64) -> f64 {
        match self {
            ScalarFunction::Constant { value } => *value,
            ScalarFunction::ThermalLog { c_v, theta_ref } => {
                if s == 0.0 {
                    0.0
                } else {
                    -c_v * s * ((s / theta_ref).ln() - 1.0)
                }
            }
            ScalarFunction::ThermalTwoLevel {
                c_low,
                c_rise,
                theta_ref,
            } => {
                if s == 0.0 {
                    0.0
                } else {
                    -c_low * s * ((s / theta_ref).ln() - 1.0)
                        - c_rise * ((1.0 + s) * s.ln_1p() - s)
                }
            }
            ScalarFunction::Saturating { base, rise, scale } => base - rise * (-s / scale).exp_m1(),
            ScalarFunction::Stretch {
                log_weight,
                quad_weight,
            } => {
                let dev = s - 1.0;
                log_weight * (dev - s.ln()) + quad_weight * dev * dev
            }
            ScalarFunction::Logarithmic { weight } => -weight * s.ln(),
            ScalarFunction::Blended(blend) => blend.value(s),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match self {
            ScalarFunction::Constant { .. } => 0.0,
            ScalarFunction::ThermalLog { c_v, theta_ref } => -c_v * (s / theta_ref).ln(),
            ScalarFunction::ThermalTwoLevel {
                c_low,
                c_rise,
                theta_ref,
            } => -c_low * (s / theta_ref).ln() - c_rise * s.ln_1p(),
            ScalarFunction::Saturating { rise, scale, .. } => rise / scale * (-s / scale).exp(),
            ScalarFunction::Stretch {
                log_weight,
                quad_weight,
            } => log_weight * (1.0 - 1.0 / s) + 2.0 * quad_weight * (s - 1.0),
            ScalarFunction::Logarithmic { weight } => -weight / s,
            ScalarFunction::Blended(blend) => blend.d1(s),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match self {
            ScalarFunction::Constant { .. } => 0.0,
            ScalarFunction::ThermalLog { c_v, .. } => -c_v / s,
            ScalarFunction::ThermalTwoLevel { c_low, c_rise, .. } => -c_low / s - c_rise / (1.0 + s),
            ScalarFunction::Saturating { rise, scale, .. } => {
                -rise / (scale * scale) * (-s / scale).exp()
            }
            ScalarFunction::Stretch {
                log_weight,
                quad_weight,
            } => log_weight / (s * s) + 2.0 * quad_weight,
            ScalarFunction::Logarithmic { weight } => weight / (s * s),
            ScalarFunction::Blended(blend) => blend.d2(s),
        }
    }

    /// `f(s) - s f'(s)`, with the `s → 0+` limit at `s = 0`.
    pub fn energy_part(&self, s: f64) -> f64 {
        match self {
            ScalarFunction::Constant { value } => *value,
            ScalarFunction::ThermalLog { c_v, .. } => c_v * s,
            ScalarFunction::ThermalTwoLevel { c_low, c_rise, .. } => {
                c_low * s + c_rise * (s - s.ln_1p())
            }
            ScalarFunction::Saturating { base, rise, scale } => {
                let x = s / scale;
                base + rise * (-(-x).exp_m1() - x * (-x).exp())
            }
            ScalarFunction::Blended(blend) => blend.energy_part(s),
            _ => {
                if s == 0.0 {
                    self.value(0.0)
                } else {
                    self.value(s) - s * self.d1(s)
                }
            }
        }
    }

    /// `-s f''(s)`, with the `s → 0+` limit at `s = 0`.
    pub fn energy_slope(&self, s: f64) -> f64 {
        match self {
            ScalarFunction::Constant { .. } => 0.0,
            ScalarFunction::ThermalLog { c_v, .. } => *c_v,
            ScalarFunction::ThermalTwoLevel { c_low, c_rise, .. } => c_low + c_rise * s / (1.0 + s),
            ScalarFunction::Saturating { rise, scale, .. } => {
                let x = s / scale;
                rise / scale * x * (-x).exp()
            }
            ScalarFunction::Blended(blend) => -s * blend.d2(s),
            _ => -s * self.d2(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<ScalarFunction> {
        vec![
            ScalarFunction::constant(1.5),
            ScalarFunction::ThermalLog {
                c_v: 2.0,
                theta_ref: 0.7,
            },
            ScalarFunction::ThermalTwoLevel {
                c_low: 1.0,
                c_rise: 0.5,
                theta_ref: 1.3,
            },
            ScalarFunction::Saturating {
                base: 0.4,
                rise: 0.8,
                scale: 2.0,
            },
            ScalarFunction::Stretch {
                log_weight: 1.0,
                quad_weight: 0.25,
            },
            ScalarFunction::Logarithmic { weight: 1.0 },
        ]
    }

    #[test]
    fn derivatives_match_central_differences() {
        for f in samples() {
            for &s in &[0.05f64, 0.3, 1.0, 2.7, 40.0] {
                let h = 1e-5 * s.max(1.0);
                let fd1 = (f.value(s + h) - f.value(s - h)) / (2.0 * h);
                let fd2 = (f.d1(s + h) - f.d1(s - h)) / (2.0 * h);
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
                assert!(rel(fd1, f.d1(s)) < 1e-6, "{f:?} d1 at {s}");
                assert!(rel(fd2, f.d2(s)) < 1e-6, "{f:?} d2 at {s}");
            }
        }
    }

    #[test]
    fn closed_forms_agree_with_definitions() {
        for f in samples() {
            for &s in &[0.01, 0.5, 3.0, 100.0] {
                let direct = f.value(s) - s * f.d1(s);
                assert!((f.energy_part(s) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
                let slope = -s * f.d2(s);
                assert!((f.energy_slope(s) - slope).abs() <= 1e-12 * slope.abs().max(1.0));
            }
        }
    }

    #[test]
    fn thermal_limits_at_zero() {
        let f = ScalarFunction::ThermalLog {
            c_v: 1.0,
            theta_ref: 1.0,
        };
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.energy_part(0.0), 0.0);
        assert_eq!(f.energy_slope(0.0), 1.0);
        assert!(f.d1(1e-300) > 600.0);
    }

    #[test]
    fn parses_from_json_table() {
        let f: ScalarFunction =
            serde_json::from_str(r#"{"kind": "stretch", "log_weight": 1.0}"#).unwrap();
        assert_eq!(
            f,
            ScalarFunction::Stretch {
                log_weight: 1.0,
                quad_weight: 0.0
            }
        );
        assert!(serde_json::from_str::<ScalarFunction>(r#"{"kind": "blended"}"#).is_err());
    }
}
