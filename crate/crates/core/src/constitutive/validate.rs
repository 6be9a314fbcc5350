//! Sampling-based verification of the structural assumptions on a model.
//!
//! Each inequality becomes one [`ValidationRow`] holding the worst sample
//! found. Limit conditions at `θ → 0+` are judged by trend over
//! `θ ∈ {1e-6, 1e-8, 1e-10}`; the integral condition on `ψ1` is estimated by
//! composite Gauss–Legendre quadrature over `[0, 1e6]` (the tail beyond
//! `1e6` is not included, which the row notes).

use serde::{Deserialize, Serialize};

use super::model::{FreeEnergyModel, MaterialCoefficients};
use crate::error::Result;
use crate::spectral::quadrature::GaussLegendre;

/// Absolute slack for sign conditions that hold with equality somewhere.
const SIGN_SLACK: f64 = 1e-14;
/// Tolerance for the exact conditions `ψ2(1) = ψ2'(1) = 0`.
const EXACT_TOL: f64 = 1e-12;
/// Threshold for limits that must vanish as `θ → 0+`.
const LIMIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub n_theta: usize,
    pub n_b: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            theta_lo: 1e-6,
            theta_hi: 1e6,
            n_theta: 256,
            n_b: 64,
        }
    }
}

impl SampleSpec {
    pub fn thetas(&self) -> Vec<f64> {
        log_space(self.theta_lo, self.theta_hi, self.n_theta)
    }

    pub fn bs(&self, b_min: f64, b_max: f64) -> Vec<f64> {
        lin_space(b_min, b_max, self.n_b)
    }
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub assumption: String,
    pub check: String,
    /// `(θ, b)` of the worst sample, where applicable.
    pub point: Option<[f64; 2]>,
    pub passed: bool,
    pub measured: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
}

impl std::fmt::Display for ValidationRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: measured {:e}", self.assumption, self.check, self.measured)?;
        if let Some([theta, b]) = self.point {
            write!(f, " at theta = {theta:e}, b = {b:e}")?;
        }
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationRow> {
        self.rows.iter().filter(|r| !r.passed)
    }
}

/// Tracks the sample with the smallest margin of an inequality `margin ≥ 0`.
struct Worst {
    margin: f64,
    measured: f64,
    point: Option<[f64; 2]>,
    samples: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            measured: f64::NAN,
            point: None,
            samples: 0,
        }
    }

    fn push(&mut self, margin: f64, measured: f64, point: [f64; 2]) {
        self.samples += 1;
        // A NaN margin is a failure and, once recorded, is kept.
        if self.margin.is_nan() {
            return;
        }
        if margin.is_nan() || margin < self.margin {
            self.margin = margin;
            self.measured = measured;
            self.point = Some(point);
        }
    }

    fn row(self, assumption: &str, check: &str, slack: f64) -> ValidationRow {
        ValidationRow {
            assumption: assumption.into(),
            check: check.into(),
            point: self.point,
            passed: self.samples > 0 && self.margin >= -slack,
            measured: self.measured,
            samples: self.samples,
            note: None,
        }
    }
}

fn single(assumption: &str, check: &str, passed: bool, measured: f64) -> ValidationRow {
    ValidationRow {
        assumption: assumption.into(),
        check: check.into(),
        point: None,
        passed,
        measured,
        samples: 1,
        note: None,
    }
}

/// Checks the structural assumptions on the model on sampled grids: shape
/// and sign conditions, normalization at `b = 1`, low-temperature limits,
/// heat-capacity bounds and coefficient bounds.
pub fn validate_assumptions(
    model: &FreeEnergyModel,
    coeffs: &MaterialCoefficients,
    spec: &SampleSpec,
) -> ValidationReport {
    let thetas = spec.thetas();
    let bs = spec.bs(coeffs.b_min, coeffs.b_max);
    let (c1, c2) = (coeffs.c1, coeffs.c2);
    let mut rows = Vec::new();

    // convexity/concavity signs
    let mut w = Worst::new();
    for &t in &thetas {
        let v = model.psi0.d2(t);
        w.push(-v, v, [t, f64::NAN]);
    }
    let mut r = w.row("shape", "psi0''(theta) < 0", 0.0);
    r.passed = r.passed && r.measured < 0.0;
    rows.push(r);

    let mut w = Worst::new();
    for &t in &thetas {
        let v = model.psi1.d2(t);
        w.push(-v, v, [t, f64::NAN]);
    }
    rows.push(w.row("shape", "psi1''(theta) <= 0", SIGN_SLACK));

    let mut w = Worst::new();
    for &t in &thetas {
        let v = model.psi1.d1(t);
        w.push(v, v, [t, f64::NAN]);
    }
    rows.push(w.row("shape", "psi1'(theta) >= 0", SIGN_SLACK));

    let mut w = Worst::new();
    for &b in &bs {
        let v = model.psi2.d2(b);
        w.push(v, v, [f64::NAN, b]);
    }
    rows.push(w.row("shape", "psi2''(b) >= 0", SIGN_SLACK));

    // normalization
    let psi1_at_zero = if model.psi1.domain().contains(0.0) {
        model.psi1.value(0.0)
    } else {
        f64::NAN
    };
    let mut r = single("normalization", "psi1(0) >= 0", psi1_at_zero >= 0.0, psi1_at_zero);
    if psi1_at_zero.is_nan() {
        r.note = Some("psi1 is not defined at 0".into());
    }
    rows.push(r);
    let v = model.psi2.value(1.0);
    rows.push(single("normalization", "psi2(1) = 0", v.abs() <= EXACT_TOL, v));
    let v = model.psi2.d1(1.0);
    rows.push(single("normalization", "psi2'(1) = 0", v.abs() <= EXACT_TOL, v));
    let mut w = Worst::new();
    for &t in &thetas {
        let v = -t * t * model.psi1.d2(t);
        w.push(c2 - v, v, [t, f64::NAN]);
    }
    let mut r = w.row("normalization", "-s^2 psi1''(s) <= C (C = c2)", 0.0);
    r.note = Some("the constant C is taken to be c2".into());
    rows.push(r);

    // limits at 0+ judged by trend
    let probes = [1e-6, 1e-8, 1e-10];
    let d1: Vec<f64> = probes.iter().map(|&t| model.psi0.d1(t)).collect();
    let ok = d1[0] > 0.0 && d1[1] > d1[0] && d1[2] > d1[1];
    rows.push(single("low_temperature", "psi0'(theta) -> +inf as theta -> 0+", ok, d1[2]));
    let tp: Vec<f64> = probes
        .iter()
        .zip(&d1)
        .map(|(&t, &d)| (t * d).abs())
        .collect();
    let ok = tp[1] <= tp[0] && tp[2] <= tp[1] && tp[2] <= LIMIT_TOL;
    rows.push(single("low_temperature", "theta psi0'(theta) -> 0 as theta -> 0+", ok, tp[2]));
    let vals: Vec<f64> = probes.iter().map(|&t| model.psi0.value(t).abs()).collect();
    let ok = vals[1] <= vals[0] && vals[2] <= vals[1] && vals[2] <= LIMIT_TOL;
    rows.push(single("low_temperature", "psi0(theta) -> 0 as theta -> 0+", ok, vals[2]));

    // heat capacity
    let mut lo = Worst::new();
    let mut hi = Worst::new();
    for &t in &thetas {
        let v = model.psi0.energy_slope(t);
        lo.push(v - c1, v, [t, f64::NAN]);
        hi.push(c2 - v, v, [t, f64::NAN]);
    }
    rows.push(lo.row("heat_capacity", "c1 <= -s psi0''(s)", SIGN_SLACK * c1.max(1.0)));
    rows.push(hi.row("heat_capacity", "-s psi0''(s) <= c2", SIGN_SLACK * c2.max(1.0)));
    let integral = integrate_energy_slope(model);
    let mut r = single(
        "heat_capacity",
        "int_0^inf -s psi1''(s) ds <= c2",
        integral <= c2 * (1.0 + 1e-12),
        integral,
    );
    r.note = Some("composite Gauss-Legendre on [0, 1e6]; tail beyond 1e6 truncated".into());
    rows.push(r);

    // coefficients on θ ∈ {0} ∪ samples, b ∈ [b_min, b_max]
    let thetas5: Vec<f64> = std::iter::once(0.0).chain(thetas.iter().copied()).collect();
    type Coef = fn(&MaterialCoefficients, f64, f64) -> f64;
    let named: [(&str, Coef); 3] = [
        ("nu", MaterialCoefficients::nu),
        ("kappa", MaterialCoefficients::kappa),
        ("alpha", MaterialCoefficients::alpha),
    ];
    for (name, f) in named {
        let mut lo = Worst::new();
        let mut hi = Worst::new();
        for &t in &thetas5 {
            for &b in &bs {
                let v = f(coeffs, t, b);
                lo.push(v - c1, v, [t, b]);
                hi.push(c2 - v, v, [t, b]);
            }
        }
        rows.push(lo.row("coefficients", &format!("c1 <= {name}(theta, b)"), 0.0));
        rows.push(hi.row("coefficients", &format!("{name}(theta, b) <= c2"), 0.0));
    }
    let mut sign = Worst::new();
    let mut bound = Worst::new();
    for &t in &thetas5 {
        for &b in &bs {
            let h = coeffs.h(t, b, model.psi2.d1(b));
            let s = h * (b - 1.0);
            sign.push(s, s, [t, b]);
            bound.push(c2 - h.abs(), h, [t, b]);
        }
    }
    rows.push(sign.row("coefficients", "h(theta, b)(b - 1) >= 0", SIGN_SLACK));
    rows.push(bound.row("coefficients", "|h(theta, b)| <= c2", 0.0));

    ValidationReport { rows }
}

fn integrate_energy_slope(model: &FreeEnergyModel) -> f64 {
    let rule = GaussLegendre::new(8);
    let mut edges = vec![0.0];
    edges.extend(log_space(1e-6, 1e6, 121));
    edges
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |s| model.psi1.energy_slope(s)))
        .sum()
}

/// Both sides of the entropy bound `η(s, b) ≤ -c1 |ln s| + C (1 + s)` with
/// `C = max(c1 + c2, |ψ0'(1)|)`. Returns `(lhs, rhs)`.
pub fn entropy_upper_bound(
    model: &FreeEnergyModel,
    c1: f64,
    c2: f64,
    s: f64,
    b: f64,
) -> Result<(f64, f64)> {
    let lhs = model.eta(s, b)?;
    let c = (c1 + c2).max(model.psi0.d1(1.0).abs());
    Ok((lhs, -c1 * s.ln().abs() + c * (1.0 + s)))
}
