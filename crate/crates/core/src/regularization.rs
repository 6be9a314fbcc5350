//! The ε-regularized free energy, temperature inversion, cut-offs, the
//! clamped initial energy and the stick-slip maps.

use serde::{Deserialize, Serialize};

use crate::constitutive::model::{check_b, check_theta, check_theta_closed};
use crate::constitutive::{FreeEnergyModel, ScalarFunction};
use crate::error::{param, Error, Result};

/// Number of interior samples used to certify the blend.
const CERT_SAMPLES: usize = 64;
const INVERSION_BUDGET: usize = 200;

/// Which lower bound on the slope of `ψ1^ε` was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlopeBound {
    /// `(ψ1^ε)' ≥ ψ1'` on the samples.
    Full,
    /// Only `(ψ1^ε)' ≥ ½ ψ1'` holds.
    Half,
}

/// `ψ1^ε`: linear on `[0, ε/2]`, a quintic Hermite blend on `[ε/2, ε]`,
/// and `ψ1` itself from `ε` on.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi1Blend {
    eps: f64,
    slope: f64,
    /// Coefficients of `p(t) = Σ c_k t^k`, `t = (s - ε/2) / (ε/2)`.
    poly: [f64; 6],
    base: ScalarFunction,
}

impl Psi1Blend {
    fn new(base: &ScalarFunction, eps: f64) -> Result<Self> {
        let anchor = base.value(0.75 * eps);
        if !anchor.is_finite() || anchor < 0.0 {
            return Err(Error::Construction(format!(
                "psi1(3 eps/4) = {anchor} is negative; the linear branch would leave [0, inf)"
            )));
        }
        let slope = anchor / (0.75 * eps);
        let h = 0.5 * eps;
        let (p0, v0, a0) = (slope * h, slope * h, 0.0);
        let (p1, v1, a1) = (base.value(eps), h * base.d1(eps), h * h * base.d2(eps));
        let delta = p1 - p0 - v0 - 0.5 * a0;
        let dv = v1 - v0 - a0;
        let da = a1 - a0;
        let poly = [
            p0,
            v0,
            0.5 * a0,
            10.0 * delta - 4.0 * dv + 0.5 * da,
            -15.0 * delta + 7.0 * dv - da,
            6.0 * delta - 3.0 * dv + 0.5 * da,
        ];
        Ok(Self {
            eps,
            slope,
            poly,
            base: base.clone(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    /// Slope of the linear branch on `[0, ε/2]`.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    #[inline]
    fn local(&self, s: f64) -> f64 {
        (s - 0.5 * self.eps) / (0.5 * self.eps)
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= 0.5 * self.eps {
            self.slope * s
        } else if s < self.eps {
            let t = self.local(s);
            let c = &self.poly;
            c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))))
        } else {
            self.base.value(s)
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        if s <= 0.5 * self.eps {
            self.slope
        } else if s < self.eps {
            let t = self.local(s);
            let c = &self.poly;
            let dp = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
            dp / (0.5 * self.eps)
        } else {
            self.base.d1(s)
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        if s <= 0.5 * self.eps {
            0.0
        } else if s < self.eps {
            let t = self.local(s);
            let c = &self.poly;
            let ddp = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
            let h = 0.5 * self.eps;
            ddp / (h * h)
        } else {
            self.base.d2(s)
        }
    }

    /// `ψ1^ε - s (ψ1^ε)'`; exactly zero on the linear branch.
    pub fn energy_part(&self, s: f64) -> f64 {
        if s <= 0.5 * self.eps {
            0.0
        } else if s < self.eps {
            self.value(s) - s * self.d1(s)
        } else {
            self.base.energy_part(s)
        }
    }
}

/// Builds `ψ1^ε` from `base.psi1` and certifies it on sampled points.
///
/// Fails if the anchor value `ψ1(3ε/4)` is negative, or if the blend is not
/// nondecreasing and concave, or if its slope falls below `½ ψ1'`.
pub fn build_psi1_eps(base: &FreeEnergyModel, eps: f64) -> Result<(ScalarFunction, SlopeBound)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(param("epsilon", eps, "regularization scale must be positive"));
    }
    let blend = Psi1Blend::new(&base.psi1, eps)?;
    let scale = base.psi1.value(eps).abs().max(blend.slope * eps).max(1e-300);
    let mut bound = SlopeBound::Full;
    for k in 0..=CERT_SAMPLES {
        let s = 0.5 * eps * (1.0 + k as f64 / CERT_SAMPLES as f64);
        let d2 = blend.d2(s);
        if d2 > 1e-10 * scale / (eps * eps) {
            return Err(Error::Construction(format!(
                "blend on [eps/2, eps] is not concave: second derivative {d2:e} at s = {s:e}"
            )));
        }
        let d1 = blend.d1(s);
        if d1 < -1e-12 * scale / eps {
            return Err(Error::Construction(format!(
                "blend on [eps/2, eps] decreases: slope {d1:e} at s = {s:e}"
            )));
        }
    }
    let slack = 1e-10 * scale / eps;
    for k in 1..=2 * CERT_SAMPLES {
        let s = eps * k as f64 / (2 * CERT_SAMPLES) as f64;
        let (reg, orig) = (blend.d1(s), base.psi1.d1(s));
        if reg + slack < orig {
            bound = SlopeBound::Half;
            if reg + slack < 0.5 * orig {
                return Err(Error::Construction(format!(
                    "slope {reg:e} at s = {s:e} is below half of psi1' = {orig:e}"
                )));
            }
        }
    }
    Ok((ScalarFunction::Blended(Box::new(blend)), bound))
}

/// A free-energy model with `ψ1` replaced by `ψ1^ε`; `ε = 0` keeps the base
/// model and selects the unregularized inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedModel {
    base: FreeEnergyModel,
    epsilon: f64,
    model: FreeEnergyModel,
    bound: Option<SlopeBound>,
}

impl RegularizedModel {
    pub fn new(base: FreeEnergyModel, epsilon: f64) -> Result<Self> {
        if epsilon == 0.0 {
            return Ok(Self::plain(base));
        }
        let (psi1_eps, bound) = build_psi1_eps(&base, epsilon)?;
        let model = FreeEnergyModel::new(base.psi0.clone(), psi1_eps, base.psi2.clone());
        Ok(Self {
            base,
            epsilon,
            model,
            bound: Some(bound),
        })
    }

    pub fn plain(base: FreeEnergyModel) -> Self {
        Self {
            model: base.clone(),
            base,
            epsilon: 0.0,
            bound: None,
        }
    }

    pub fn base(&self) -> &FreeEnergyModel {
        &self.base
    }

    /// The model with `ψ1^ε` substituted.
    pub fn model(&self) -> &FreeEnergyModel {
        &self.model
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_regularized(&self) -> bool {
        self.epsilon > 0.0
    }

    pub fn psi1_eps(&self) -> &ScalarFunction {
        &self.model.psi1
    }

    /// Certified slope bound; `None` for the unregularized model.
    pub fn slope_bound(&self) -> Option<SlopeBound> {
        self.bound
    }

    /// `ẽ^ε(θ, b) = ẽ0(θ) + ẽ1^ε(θ) ψ2(b)`, defined for `θ ≥ 0`.
    pub fn e_eps(&self, theta: f64, b: f64) -> Result<f64> {
        check_theta_closed(theta)?;
        check_b(b)?;
        Ok(self.model.energy_unchecked(theta, b))
    }

    pub fn eta_eps(&self, theta: f64, b: f64) -> Result<f64> {
        check_theta(theta)?;
        check_b(b)?;
        Ok(self.model.eta_unchecked(theta, b))
    }

    /// `ẽ1^ε(θ) = ψ1^ε - θ (ψ1^ε)'`.
    pub fn e1_eps(&self, theta: f64) -> Result<f64> {
        check_theta_closed(theta)?;
        Ok(self.model.psi1.energy_part(theta))
    }

    pub fn heat_capacity_eps(&self, theta: f64, b: f64) -> Result<f64> {
        check_theta_closed(theta)?;
        check_b(b)?;
        Ok(self.model.heat_capacity_unchecked(theta, b))
    }

    /// Inverts `ẽ^ε(·, b)`. Nonpositive energies map to `θ = e`; the
    /// unregularized model (`ε = 0`) uses [`theta_from_e_plain`] instead.
    pub fn theta_from_e(&self, e: f64, b: f64) -> Result<f64> {
        if !self.is_regularized() {
            return theta_from_e_plain(&self.model, e, b);
        }
        check_b(b)?;
        if !e.is_finite() {
            return Err(Error::Inversion {
                e,
                b,
                reason: "energy is not finite".into(),
            });
        }
        if e <= 0.0 {
            return Ok(e);
        }
        invert(&self.model, e, b, 0.0)
    }
}

/// Unique `θ > 0` with `ẽ(θ, b) = e`. Requires `e > ẽ(0+, b)`.
pub fn theta_from_e_plain(model: &FreeEnergyModel, e: f64, b: f64) -> Result<f64> {
    check_b(b)?;
    let floor = model.psi0.energy_part(0.0) + model.psi1.energy_part(0.0) * model.psi2.value(b);
    if !(e.is_finite() && e > floor) {
        return Err(Error::Inversion {
            e,
            b,
            reason: format!("energy must exceed the zero-temperature limit {floor}"),
        });
    }
    invert(model, e, b, 0.0)
}

/// Safeguarded Newton on `[lo, hi]` with `ẽ(lo) < e`; `hi` is found by
/// doubling. Iterates to a few ulp, then checks the residual contract.
fn invert(model: &FreeEnergyModel, e: f64, b: f64, lo: f64) -> Result<f64> {
    let f = |th: f64| model.energy_unchecked(th, b) - e;
    let fail = |reason: String| Error::Inversion { e, b, reason };

    let mut lo = lo;
    let c_ref = model.heat_capacity_unchecked(1.0, b);
    let mut hi = if c_ref > 0.0 && c_ref.is_finite() {
        e / c_ref
    } else {
        e
    }
    .max(f64::MIN_POSITIVE);
    let mut expansions = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 2100 || !hi.is_finite() {
            return Err(fail("could not bracket the root".into()));
        }
    }

    // Newton from the initial guess when it already brackets the root.
    let mut th = if expansions == 0 { hi } else { 0.5 * (lo + hi) };
    let mut converged = false;
    for _ in 0..INVERSION_BUDGET {
        let r = f(th);
        if r == 0.0 {
            converged = true;
            break;
        }
        if r < 0.0 {
            lo = th;
        } else {
            hi = th;
        }
        let slope = model.heat_capacity_unchecked(th, b);
        let mut next = th - r / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - th).abs();
        th = next;
        if step <= 2.0 * f64::EPSILON * th || hi - lo <= 4.0 * f64::EPSILON * hi {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(fail(format!(
            "no convergence within {INVERSION_BUDGET} iterations"
        )));
    }
    let residual = f(th).abs();
    if residual > 1e-12 * e.abs().max(1.0) {
        return Err(fail(format!("residual {residual:e} exceeds tolerance")));
    }
    Ok(th)
}

/// Cut-off configuration: convective level `k` (or none) and the clamp
/// interval for `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub k: Option<u32>,
    pub b_min: f64,
    pub b_max: f64,
}

/// Master profile `G`: `1` on `[0, 1]`, `0` on `[2, ∞)`, and the
/// smoothstep blend `1 - (6u⁵ - 15u⁴ + 10u³)`, `u = t - 1`, in between.
pub fn master_profile(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let u = t - 1.0;
        1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// `b_M = max(b_min, min(b, b_max))`.
#[inline]
pub fn clamp_b(b: f64, spec: &CutoffSpec) -> f64 {
    b.min(spec.b_max).max(spec.b_min)
}

/// `G_k(s) = G(s/k)`; identically `1` when the cut-off is off.
#[inline]
pub fn convective_cutoff(s: f64, spec: &CutoffSpec) -> f64 {
    match spec.k {
        Some(k) => master_profile(s / k as f64),
        None => 1.0,
    }
}

/// Pointwise `ẽ^ε(max(ε, min(θ0, 1/ε)), b0)`, or `ẽ(θ0, b0)` when `ε = 0`.
pub fn clamp_initial_energy(
    theta0: &[f64],
    b0: &[f64],
    reg: &RegularizedModel,
    b_bounds: (f64, f64),
) -> Result<Vec<f64>> {
    if theta0.len() != b0.len() {
        return Err(Error::Dimension {
            what: "initial fields",
            expected: theta0.len(),
            got: b0.len(),
        });
    }
    let eps = reg.epsilon();
    theta0
        .iter()
        .zip(b0)
        .map(|(&th, &b)| {
            check_theta(th)?;
            if !(b >= b_bounds.0 && b <= b_bounds.1) {
                return Err(Error::Domain {
                    quantity: "b0",
                    value: b,
                    domain: "[b_min, b_max]",
                });
            }
            if eps > 0.0 {
                reg.e_eps(th.min(1.0 / eps).max(eps), b)
            } else {
                reg.model().internal_energy(th, b)
            }
        })
        .collect()
}

/// Stick-slip wall law parameters. `gamma_star = 0` together with
/// `s_star = 0` is free slip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickSlipParams {
    pub s_star: f64,
    pub gamma_star: f64,
    pub epsilon: f64,
}

impl StickSlipParams {
    pub fn free_slip() -> Self {
        Self {
            s_star: 0.0,
            gamma_star: 0.0,
            epsilon: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("s_star", self.s_star),
            ("gamma_star", self.gamma_star),
            ("epsilon", self.epsilon),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(param(name, v, "must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    pub fn is_free_slip(&self) -> bool {
        self.s_star == 0.0 && self.gamma_star == 0.0
    }
}

/// Wall traction `s_* v/(ε + |v|) + γ_* v`. With `ε = 0` this is the exact
/// law `s_* v/|v| + γ_* v`, taking the value `0` at `v = 0`.
#[inline]
pub fn stick_slip_mollified(v: [f64; 2], p: &StickSlipParams) -> [f64; 2] {
    let norm = v[0].hypot(v[1]);
    let denom = p.epsilon + norm;
    let k = if denom > 0.0 { p.s_star / denom } else { 0.0 };
    [(k + p.gamma_star) * v[0], (k + p.gamma_star) * v[1]]
}

/// Inverse law: `γ_* v = ((|s| - s_*)₊ / |s|) s`.
pub fn stick_slip_graph(s: [f64; 2], p: &StickSlipParams) -> Result<[f64; 2]> {
    if !(p.gamma_star > 0.0) {
        return Err(param(
            "gamma_star",
            p.gamma_star,
            "the graph form needs a positive slip friction",
        ));
    }
    let norm = s[0].hypot(s[1]);
    if norm <= p.s_star || norm == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let k = (norm - p.s_star) / (norm * p.gamma_star);
    Ok([k * s[0], k * s[1]])
}
