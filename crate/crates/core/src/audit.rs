//! Budgets and invariant monitors evaluated on the discrete solution.
//!
//! Every quantity here is recomputed from the Galerkin coefficients through
//! the public closure relations, independently of the right-hand side
//! assembly, so that the solver's own accounting can be cross-checked.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closure::{entropy_production, DissipationBreakdown, StateGradients};
use crate::constitutive::MaterialCoefficients;
use crate::error::{Error, Result};
use crate::regularization::{clamp_b, RegularizedModel};
use crate::solver::{
    Accumulators, IntegrationStats, Problem, SimState, SimulationConfig, StepReport, SweepSpec,
};

/// Pointwise dissipation terms may dip below zero by at most this much.
pub const DISSIPATION_FLOOR: f64 = -1e-14;
/// Round-trip tolerance `|ẽ^ε(θ, b) - e| / max(1, |e|)`.
pub const ROUNDTRIP_TOL: f64 = 1e-10;
/// Relative agreement of the solver and audit mass/energy law rates.
pub const LAW_TOL: f64 = 1e-12;
pub const ENERGY_TOL: f64 = 1e-6;
pub const ENTROPY_SLACK: f64 = 1e-8;
/// `tol_b = B_TOL_FRACTION · (b_max - b_min)`.
pub const B_TOL_FRACTION: f64 = 5e-3;
/// `tol_floor = FLOOR_TOL_FRACTION · ẽ0(ε/2)`.
pub const FLOOR_TOL_FRACTION: f64 = 1e-3;

/// One row of the budget time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSample {
    pub t: f64,
    pub kinetic: f64,
    pub internal: f64,
    pub total: f64,
    pub entropy: f64,
    /// `θζ` terms integrated over the domain.
    pub dissipation: DissipationBreakdown,
    /// `∮ s̃(v_τ)·v_τ`
    pub boundary_work: f64,
    /// `∫ f·v`
    pub body_power: f64,
    pub min_b: f64,
    pub max_b: f64,
    pub min_e: f64,
    pub min_theta: f64,
}

/// Instantaneous rates and residuals recorded alongside a [`BudgetSample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `dS/dt` from the right-hand side at the sample.
    pub entropy_rate: f64,
    /// `∫ζ`
    pub entropy_production: f64,
    /// `d/dt ∫b` from the solver coefficients.
    pub mass_rate_solver: f64,
    /// `-∫h` recomputed from the fields.
    pub mass_rate_audit: f64,
    /// `d/dt ∫e` from the solver coefficients.
    pub energy_rate_solver: f64,
    /// `∫2ν|D|²` recomputed from the fields.
    pub energy_rate_audit: f64,
    /// Worst `|ẽ^ε(θ, b_M) - e| / max(1, |e|)` over the nodes.
    pub inversion_residual: f64,
    /// Smallest pointwise dissipation term.
    pub min_dissipation_term: f64,
    pub accumulators: Accumulators,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSample {
    pub budget: BudgetSample,
    pub diagnostics: Diagnostics,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    /// Violation magnitude; `0` when the check holds strictly.
    pub measured: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    pub fn new(check: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{tag} {}: measured {:e}, tolerance {:e}",
            self.check, self.measured, self.tolerance
        )?;
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}

/// Verdicts in a fixed order plus informational measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub verdicts: Vec<Verdict>,
    /// Largest `|dS/dt - ∫ζ|` over the samples; informational.
    pub entropy_identity_residual: f64,
    pub samples: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }
}

/// `|ẽ^ε(θ, b) - e| / max(1, |e|)`; zero where a regularized run has
/// `e ≤ 0` and the temperature is pinned at `0`.
pub fn roundtrip_error(reg: &RegularizedModel, theta: f64, b: f64, e: f64) -> Result<f64> {
    if reg.is_regularized() && e <= 0.0 {
        return Ok(0.0);
    }
    Ok((reg.e_eps(theta, b)? - e).abs() / e.abs().max(1.0))
}

/// Node values needed by the budgets.
struct NodeSample {
    kinetic: f64,
    internal: f64,
    entropy: f64,
    terms: DissipationBreakdown,
    zeta: f64,
    entropy_rate: f64,
    h: f64,
    viscous: f64,
    body_power: f64,
    residual: f64,
    theta: f64,
}

/// Samples the budgets of `state`; `dy` is the right-hand side at `state`.
pub fn sample_budgets(problem: &Problem, state: &SimState, dy: &[f64]) -> Result<AuditSample> {
    let disc = problem.discretization();
    let nv = disc.n_velocity();
    let ns = disc.n_scalar();
    if dy.len() != problem.state_len() {
        return Err(Error::Dimension {
            what: "state derivative",
            expected: problem.state_len(),
            got: dy.len(),
        });
    }
    let reg = problem.regularized();
    let model = reg.model();
    let coeffs = problem.coefficients();
    let cutoff = problem.cutoff();
    let vel = disc.velocity_fields(&state.c)?;
    let b = disc.scalar_values(&state.d)?;
    let (bx, by) = disc.scalar_gradient(&state.d)?;
    let e = disc.scalar_values(&state.e_c)?;
    let (ex, ey) = disc.scalar_gradient(&state.e_c)?;
    let b_dot = disc.scalar_values(&dy[nv..nv + ns])?;
    let e_dot = disc.scalar_values(&dy[nv + ns..nv + 2 * ns])?;
    let (fx, fy) = problem.body_force_nodes();

    let nodes: Vec<NodeSample> = (0..disc.n_nodes())
        .into_par_iter()
        .with_min_len(64)
        .map(|k| {
            let b_m = clamp_b(b[k], cutoff);
            let inside = b[k] > cutoff.b_min && b[k] < cutoff.b_max;
            let theta = problem.node_temperature(e[k], b_m)?;
            let fail = |what| {
                let (x, y) = disc.node(k);
                Error::NonFinite { what, x, y }
            };
            let residual = roundtrip_error(reg, theta, b_m, e[k])?;
            if !(theta > 0.0) {
                return Err(fail("temperature"));
            }
            let psi1 = model.psi1.value(theta);
            let dpsi2 = model.psi2.d1(b_m);
            let grad_b = if inside { [bx[k], by[k]] } else { [0.0, 0.0] };
            let cv = reg.heat_capacity_eps(theta, b_m)?;
            let e1 = reg.e1_eps(theta)?;
            let grad_theta = [
                (ex[k] - e1 * dpsi2 * grad_b[0]) / cv,
                (ey[k] - e1 * dpsi2 * grad_b[1]) / cv,
            ];
            let d = vel.sym_grad(k);
            let terms = entropy_production(
                model,
                coeffs,
                theta,
                b_m,
                &StateGradients {
                    grad_theta,
                    grad_b: [bx[k], by[k]],
                    d,
                },
            )?;
            let b_m_dot = if inside { b_dot[k] } else { 0.0 };
            let (vx, vy) = (vel.vx[k], vel.vy[k]);
            let out = NodeSample {
                kinetic: 0.5 * (vx * vx + vy * vy),
                internal: e[k],
                entropy: reg.eta_eps(theta, b_m)?,
                zeta: terms.total / theta,
                entropy_rate: (e_dot[k] - psi1 * dpsi2 * b_m_dot) / theta,
                h: coeffs.h(theta, b_m, dpsi2),
                viscous: terms.viscous,
                body_power: fx[k] * vx + fy[k] * vy,
                residual,
                theta,
                terms,
            };
            let vals = [
                out.kinetic,
                out.entropy,
                out.zeta,
                out.entropy_rate,
                out.h,
                out.terms.total,
                out.body_power,
            ];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(fail("budget integrand"));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let q = disc.quadrature();
    let integral = |f: fn(&NodeSample) -> f64| {
        let vals: Vec<f64> = nodes.iter().map(f).collect();
        q.integrate_grid(&vals)
    };
    let kinetic = integral(|n| n.kinetic);
    let internal = integral(|n| n.internal);
    let dissipation = DissipationBreakdown::new(
        integral(|n| n.terms.thermal),
        integral(|n| n.terms.viscous),
        integral(|n| n.terms.relaxation),
        integral(|n| n.terms.stress_diffusion),
    );
    let trace = disc.boundary_trace(&state.c)?;
    let boundary_work = disc.boundary_integral(&problem.tractions(&trace), &trace);

    let area = disc.rect().area();
    let budget = BudgetSample {
        t: state.t,
        kinetic,
        internal,
        total: kinetic + internal,
        entropy: integral(|n| n.entropy),
        dissipation,
        boundary_work,
        body_power: integral(|n| n.body_power),
        min_b: b.iter().copied().fold(f64::INFINITY, f64::min),
        max_b: b.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_e: e.iter().copied().fold(f64::INFINITY, f64::min),
        min_theta: nodes.iter().map(|n| n.theta).fold(f64::INFINITY, f64::min),
    };
    let diagnostics = Diagnostics {
        entropy_rate: integral(|n| n.entropy_rate),
        entropy_production: integral(|n| n.zeta),
        mass_rate_solver: dy[nv] * area,
        mass_rate_audit: -integral(|n| n.h),
        energy_rate_solver: dy[nv + ns] * area,
        energy_rate_audit: integral(|n| n.viscous),
        inversion_residual: nodes.iter().map(|n| n.residual).fold(0.0, f64::max),
        min_dissipation_term: nodes
            .iter()
            .map(|n| n.terms.min_term())
            .fold(f64::INFINITY, f64::min),
        accumulators: state.acc,
    };
    Ok(AuditSample {
        budget,
        diagnostics,
    })
}

/// `max |E(t) + W_b(t) - W_f(t) - W_p(t) - E(0)| / max(|E(0)|, 1)` with the
/// boundary work `W_b`, body work `W_f` and prescribed-flow work `W_p`
/// accumulated since the start.
pub fn check_energy_conservation(samples: &[AuditSample], tol: f64) -> Verdict {
    let Some(first) = samples.first() else {
        return Verdict::new("energy_conservation", 0.0, tol);
    };
    let e0 = first.budget.total;
    let a0 = first.diagnostics.accumulators;
    let drift = samples
        .iter()
        .map(|s| {
            let a = s.diagnostics.accumulators;
            (s.budget.total + (a.boundary_work - a0.boundary_work)
                - (a.body_work - a0.body_work)
                - (a.prescribed_work - a0.prescribed_work)
                - e0)
                .abs()
        })
        .fold(0.0, f64::max);
    Verdict::new("energy_conservation", nan_max(drift / e0.abs().max(1.0)), tol)
}

/// Largest decrease of `S` below its running maximum, relative to the
/// slack `1e-8·max(1, |S|)`.
pub fn check_entropy_monotone(samples: &[AuditSample]) -> Verdict {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for s in samples {
        let st = s.budget.entropy;
        scale = scale.max(st.abs());
        peak = peak.max(st);
        worst = worst.max(peak - st);
        if st.is_nan() {
            worst = f64::NAN;
            break;
        }
    }
    Verdict::new("entropy_monotone", nan_max(worst), ENTROPY_SLACK * scale)
}

/// Excursion of `b` outside `[b_min, b_max]`.
pub fn check_b_bounds(samples: &[AuditSample], b_min: f64, b_max: f64) -> Verdict {
    let worst = samples
        .iter()
        .map(|s| (b_min - s.budget.min_b).max(s.budget.max_b - b_max).max(0.0))
        .fold(0.0, nan_fold);
    Verdict::new("b_bounds", worst, B_TOL_FRACTION * (b_max - b_min))
}

/// Energy and temperature floors; `floor = Some((ẽ0(ε/2), ε/2))` for
/// regularized runs, `None` for strict positivity.
pub fn check_positivity(samples: &[AuditSample], floor: Option<(f64, f64)>) -> Verdict {
    match floor {
        Some((e_floor, theta_floor)) => {
            let worst = samples
                .iter()
                .map(|s| {
                    (e_floor - s.budget.min_e)
                        .max(theta_floor - s.budget.min_theta)
                        .max(0.0)
                })
                .fold(0.0, nan_fold);
            Verdict::new("positivity", worst, FLOOR_TOL_FRACTION * e_floor.abs())
                .with_note(format!("floors e >= {e_floor:e}, theta >= {theta_floor:e}"))
        }
        None => {
            let worst = samples
                .iter()
                .map(|s| (-s.budget.min_e).max(-s.budget.min_theta))
                .fold(f64::NEG_INFINITY, nan_fold);
            // strict: the largest of -min_e, -min_theta must be negative
            let mut v = Verdict::new("positivity", worst.max(0.0), 0.0);
            v.passed = worst < 0.0;
            v.with_note("unregularized: strict positivity of e and theta")
        }
    }
}

pub fn check_inversion_roundtrip(samples: &[AuditSample]) -> Verdict {
    let worst = samples
        .iter()
        .map(|s| s.diagnostics.inversion_residual)
        .fold(0.0, nan_fold);
    Verdict::new("inversion_roundtrip", worst, ROUNDTRIP_TOL)
}

pub fn check_dissipation_nonnegative(samples: &[AuditSample]) -> Verdict {
    let worst = samples
        .iter()
        .map(|s| (-s.diagnostics.min_dissipation_term).max(0.0))
        .fold(0.0, nan_fold);
    Verdict::new("dissipation_nonnegative", worst, -DISSIPATION_FLOOR)
}

/// Solver and audit rates of `∫b` and `∫e` agree.
pub fn check_law_agreement(samples: &[AuditSample]) -> Verdict {
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let worst = samples
        .iter()
        .map(|s| {
            let d = &s.diagnostics;
            rel(d.mass_rate_solver, d.mass_rate_audit)
                .max(rel(d.energy_rate_solver, d.energy_rate_audit))
        })
        .fold(0.0, nan_fold);
    Verdict::new("law_agreement", worst, LAW_TOL)
}

fn nan_fold(acc: f64, v: f64) -> f64 {
    if acc.is_nan() || v.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

fn nan_max(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Positivity floors `(ẽ0(ε/2), ε/2)` of a regularized model.
pub fn positivity_floor(reg: &RegularizedModel) -> Option<(f64, f64)> {
    reg.is_regularized().then(|| {
        let half = 0.5 * reg.epsilon();
        (reg.model().psi0.energy_part(half), half)
    })
}

/// All verdicts for a sample series.
pub fn audit_series(
    reg: &RegularizedModel,
    co: &MaterialCoefficients,
    samples: &[AuditSample],
) -> AuditReport {
    AuditReport {
        verdicts: vec![
            check_energy_conservation(samples, ENERGY_TOL),
            check_entropy_monotone(samples),
            check_b_bounds(samples, co.b_min, co.b_max),
            check_positivity(samples, positivity_floor(reg)),
            check_inversion_roundtrip(samples),
            check_dissipation_nonnegative(samples),
            check_law_agreement(samples),
        ],
        entropy_identity_residual: samples
            .iter()
            .map(|s| (s.diagnostics.entropy_rate - s.diagnostics.entropy_production).abs())
            .fold(0.0, nan_fold),
        samples: samples.len(),
    }
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub samples: Vec<AuditSample>,
    pub report: AuditReport,
    /// States at the requested snapshot times, in time order.
    pub snapshots: Vec<SimState>,
    pub final_state: SimState,
    pub stats: IntegrationStats,
}

/// Integrates a problem while sampling budgets every `output.budget_stride`
/// accepted steps and at every checkpoint. In strict mode the first failing
/// verdict aborts the run with [`Error::Invariant`].
pub fn run(problem: &Problem) -> Result<RunOutcome> {
    let cfg = problem.config();
    let stride = cfg.output.budget_stride;
    let strict = cfg.strict;
    let snaps = &cfg.output.snapshots;
    let state0 = problem.project_initial()?;
    let mut samples = Vec::new();
    let mut snapshots = Vec::new();
    let mut observe = |r: &StepReport| -> Result<()> {
        let state = problem.unpack(r.t, r.y)?;
        let take = r.checkpoint || r.step % stride == 0;
        if take {
            samples.push(sample_budgets(problem, &state, r.dy)?);
            if strict {
                let report = audit_series(problem.regularized(), problem.coefficients(), &samples);
                let failing = report.failures().next().cloned();
                if let Some(v) = failing {
                    let msg = format!(
                        "{} violated at t = {}: measured {:e} > tolerance {:e}",
                        v.check, r.t, v.measured, v.tolerance
                    );
                    return Err(Error::Invariant(msg));
                }
            }
        }
        if r.checkpoint && snaps.contains(&r.t) {
            snapshots.push(state);
        }
        Ok(())
    };
    let (final_state, stats) = problem.integrate(&state0, snaps, &mut observe)?;
    let report = audit_series(problem.regularized(), problem.coefficients(), &samples);
    Ok(RunOutcome {
        samples,
        report,
        snapshots,
        final_state,
        stats,
    })
}

/// One entry of a sweep.
#[derive(Debug)]
pub struct SweepRun {
    pub value: f64,
    pub label: String,
    pub config: SimulationConfig,
    pub outcome: Result<RunOutcome>,
}

/// Runs every value of the sweep in parallel; individual failures are
/// recorded, not propagated.
pub fn run_sweep(base: &SimulationConfig, spec: &SweepSpec) -> Result<Vec<SweepRun>> {
    let configs = spec
        .values
        .iter()
        .map(|&v| spec.apply(base, v).map(|c| (v, c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(configs
        .into_par_iter()
        .map(|(value, config)| {
            let outcome = Problem::new(config.clone()).and_then(|p| run(&p));
            SweepRun {
                value,
                label: spec.label(value),
                config,
                outcome,
            }
        })
        .collect())
}
