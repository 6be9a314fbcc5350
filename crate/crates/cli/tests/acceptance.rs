//! Acceptance suite. Every test prints one `PASS`/`FAIL` line with the
//! measured quantity, its threshold and the wall time, then asserts.
//!
//! Run with `cargo test -p viscotherm --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::fs;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use viscotherm_cli::commands::{self, RunOptions};
use viscotherm_core::audit::{self, AuditSample, RunOutcome};
use viscotherm_core::closure::{entropy_production, StateGradients};
use viscotherm_core::constitutive::{
    preset_giesekus, preset_oldroyd_b, validate_assumptions, CoefficientFn, FreeEnergyModel,
    Giesekus, MaterialCoefficients, OldroydB, Relaxation, SampleSpec, ScalarFunction,
};
use viscotherm_core::regularization::{stick_slip_graph, stick_slip_mollified};
use viscotherm_core::solver::{
    BodyForce, CutoffLevel, InitialData, Mode, ModelSpec, OdeSettings, OutputSettings, Problem,
    ScalarField, SimulationConfig, VelocitySpec,
};
use viscotherm_core::{RegularizedModel, Rectangle, StickSlipParams};

fn report(n: u32, name: &str, ok: bool, detail: &str, elapsed: Duration, limit: Duration) -> bool {
    let in_time = elapsed <= limit;
    let pass = ok && in_time;
    println!(
        "criterion {n:2} {:4} {name}: {detail}; {:.2}s (limit {}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn oldroyd() -> OldroydB {
    OldroydB::new(1.0, 1.0, 0.5, 1.0, 0.02, 0.02, 0.02)
}

/// A random model that passes the assumption checks.
fn random_admissible(rng: &mut StdRng) -> (FreeEnergyModel, MaterialCoefficients) {
    loop {
        let psi0 = if rng.random_bool(0.5) {
            ScalarFunction::ThermalLog {
                c_v: rng.random_range(0.5..2.0),
                theta_ref: rng.random_range(0.5..2.0),
            }
        } else {
            ScalarFunction::ThermalTwoLevel {
                c_low: rng.random_range(0.5..1.5),
                c_rise: rng.random_range(0.0..1.0),
                theta_ref: rng.random_range(0.5..2.0),
            }
        };
        let model = FreeEnergyModel::new(
            psi0,
            ScalarFunction::Saturating {
                base: rng.random_range(0.2..2.0),
                rise: rng.random_range(0.0..1.0),
                scale: rng.random_range(0.5..2.0),
            },
            ScalarFunction::Stretch {
                log_weight: rng.random_range(0.5..2.0),
                quad_weight: rng.random_range(0.0..0.5),
            },
        );
        let coeffs = MaterialCoefficients {
            nu: CoefficientFn::ThermalRamp {
                low: rng.random_range(0.01..0.05),
                high: rng.random_range(0.05..0.1),
                scale: 1.0,
            },
            kappa: CoefficientFn::constant(rng.random_range(0.01..0.1)),
            alpha: CoefficientFn::constant(rng.random_range(0.01..0.1)),
            relaxation: Relaxation::Coefficient {
                c: CoefficientFn::constant(rng.random_range(0.1..1.0)),
            },
            c1: 0.01,
            c2: 10.0,
            b_min: 0.5,
            b_max: 2.0,
        };
        if validate_assumptions(&model, &coeffs, &SampleSpec::default()).passed() {
            return (model, coeffs);
        }
    }
}

fn test_models() -> Vec<(String, FreeEnergyModel, MaterialCoefficients)> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let (m, c) = preset_oldroyd_b(&oldroyd()).unwrap();
    let mut out = vec![("oldroyd_b".to_string(), m, c)];
    for k in 0..2 {
        let (m, c) = random_admissible(&mut rng);
        out.push((format!("random_{k}"), m, c));
    }
    out
}

fn regularized(model: &FreeEnergyModel, eps: f64) -> RegularizedModel {
    if eps == 0.0 {
        RegularizedModel::plain(model.clone())
    } else {
        RegularizedModel::new(model.clone(), eps).unwrap()
    }
}

#[test]
fn c01_inversion_round_trip() {
    let start = Instant::now();
    let thetas = log_space(1e-3, 1e3, 256);
    let mut worst = 0.0f64;
    for (_, model, coeffs) in test_models() {
        let bs = lin_space(coeffs.b_min, coeffs.b_max, 64);
        for eps in [0.0, 1e-2] {
            let reg = regularized(&model, eps);
            for &b in &bs {
                for &theta in &thetas {
                    let e = if eps == 0.0 {
                        model.internal_energy(theta, b).unwrap()
                    } else {
                        reg.e_eps(theta, b).unwrap()
                    };
                    let back = reg.theta_from_e(e, b).unwrap();
                    worst = worst.max((back - theta).abs());
                }
            }
        }
    }
    let ok = report(
        1,
        "inversion round trip",
        worst <= 1e-10,
        &format!("max |theta' - theta| = {worst:.3e} (<= 1e-10)"),
        start.elapsed(),
        Duration::from_secs(5),
    );
    assert!(ok);
}

#[test]
fn c02_derivative_identities() {
    let start = Instant::now();
    let thetas = log_space(1e-3, 1e3, 256);
    let (mut worst_eta, mut worst_e) = (0.0f64, 0.0f64);
    for (_, model, coeffs) in test_models() {
        let bs = lin_space(coeffs.b_min, coeffs.b_max, 64);
        for eps in [0.0, 1e-2] {
            let reg = regularized(&model, eps);
            let m = reg.model();
            for &b in &bs {
                for &theta in &thetas {
                    // fourth-order central difference
                    let h = 1e-3 * theta;
                    let psi = |t: f64| m.psi(t, b).unwrap();
                    let dpsi = (8.0 * (psi(theta + h) - psi(theta - h))
                        - (psi(theta + 2.0 * h) - psi(theta - 2.0 * h)))
                        / (12.0 * h);
                    let eta_fd = -dpsi;
                    let eta = m.eta(theta, b).unwrap();
                    let e = m.internal_energy(theta, b).unwrap();
                    let e_fd = psi(theta) + theta * eta_fd;
                    worst_eta = worst_eta.max((eta - eta_fd).abs() / eta.abs().max(1.0));
                    worst_e = worst_e.max((e - e_fd).abs() / e.abs().max(1.0));
                }
            }
        }
    }
    let ok = report(
        2,
        "derivative identities",
        worst_eta <= 1e-6 && worst_e <= 1e-6,
        &format!("eta rel err {worst_eta:.3e}, e rel err {worst_e:.3e} (<= 1e-6)"),
        start.elapsed(),
        Duration::from_secs(5),
    );
    assert!(ok);
}

#[test]
fn c03_entropy_production_nonnegative() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    let mut models = test_models();
    let (gm, gc) = preset_giesekus(&Giesekus {
        base: oldroyd(),
        a_g: 0.4,
    })
    .unwrap();
    models.push(("giesekus".into(), gm, gc));
    let regs: Vec<_> = models
        .iter()
        .flat_map(|(_, m, c)| [(regularized(m, 0.0), c), (regularized(m, 1e-2), c)])
        .collect();
    let p = oldroyd();
    let (om, oc) = preset_oldroyd_b(&p).unwrap();

    let mut min_term = f64::INFINITY;
    let mut identity = 0.0f64;
    let n = 100_000;
    for k in 0..n {
        let (reg, coeffs) = &regs[k % regs.len()];
        let theta = 10f64.powf(rng.random_range(-3.0..3.0));
        // every tenth state sits at or next to equilibrium with no gradients
        let edge = k % 10 == 0;
        let b = if edge {
            1.0 + rng.random_range(-1e-8..1e-8) * (k % 20) as f64
        } else {
            rng.random_range(coeffs.b_min..=coeffs.b_max)
        };
        let mut r = || if edge { 0.0 } else { rng.random_range(-10.0..10.0) };
        let dxy = r();
        let g = StateGradients {
            grad_theta: [r(), r()],
            grad_b: [r(), r()],
            d: [[r(), dxy], [dxy, r()]],
        };
        let d = entropy_production(reg.model(), coeffs, theta, b, &g).unwrap();
        for v in [d.thermal, d.viscous, d.relaxation, d.stress_diffusion, d.total] {
            min_term = min_term.min(v);
        }
        let d = entropy_production(&om, &oc, theta, b, &g).unwrap();
        let expected = 1.5 * p.mu_elastic * p.mu_elastic / p.nu1 * (b + 1.0 / b - 2.0);
        identity = identity.max((d.relaxation - expected).abs() / expected.abs().max(1.0));
    }
    let ok = report(
        3,
        "entropy production nonnegative",
        min_term >= -1e-14 && identity <= 1e-12,
        &format!(
            "min term {min_term:.3e} (>= -1e-14), relaxation identity {identity:.3e} (<= 1e-12) over {n} states"
        ),
        start.elapsed(),
        Duration::from_secs(10),
    );
    assert!(ok);
}

#[test]
fn c04_regularization_certificate() {
    let start = Instant::now();
    let bases = [
        ScalarFunction::constant(1.5),
        ScalarFunction::Saturating {
            base: 0.5,
            rise: 0.5,
            scale: 1.0,
        },
        ScalarFunction::Saturating {
            base: 0.0,
            rise: 1.0,
            scale: 1.0,
        },
    ];
    let mut all_ok = true;
    let mut details = Vec::new();
    for (k, psi1) in bases.iter().enumerate() {
        let model = FreeEnergyModel::new(
            ScalarFunction::ThermalLog {
                c_v: 1.0,
                theta_ref: 1.0,
            },
            psi1.clone(),
            ScalarFunction::Stretch {
                log_weight: 1.0,
                quad_weight: 0.0,
            },
        );
        // One constant for all ε: 16 times the scale of ψ1 and its scaled
        // derivatives on [0, 1], which does not depend on ε.
        let scale = lin_space(0.0, 1.0, 1001)
            .into_iter()
            .map(|s| psi1.value(s).abs() + s * psi1.d1(s).abs() + s * s * psi1.d2(s).abs())
            .fold(0.0, f64::max);
        let c_shared = 16.0 * scale;
        let (mut match_err, mut lin_err, mut concave_err, mut bound) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for eps in [1e-1, 1e-2, 1e-3] {
            let reg = RegularizedModel::new(model.clone(), eps).unwrap();
            let f = reg.psi1_eps();
            for s in log_space(eps, 1e2, 400) {
                let rel = (f.value(s) - psi1.value(s)).abs() / psi1.value(s).abs().max(1.0);
                match_err = match_err.max(rel);
            }
            let half = 0.5 * eps;
            let slope = f.value(half) / half;
            for s in lin_space(0.0, half, 200) {
                lin_err = lin_err.max((f.value(s) - slope * s).abs() / (slope * half).max(1e-300));
                lin_err = lin_err.max(f.d2(s).abs() * eps * eps / scale);
            }
            // concavity: second differences on a grid spanning both joins
            let grid = lin_space(1e-6 * eps, 3.0 * eps, 3001);
            for w in grid.windows(3) {
                let dd = f.value(w[0]) - 2.0 * f.value(w[1]) + f.value(w[2]);
                concave_err = concave_err.max(dd / scale);
            }
            for s in lin_space(0.0, eps, 2001).into_iter().skip(1) {
                bound = bound.max(eps * f.d1(s).abs() + eps * eps * f.d2(s).abs());
            }
        }
        let ok = match_err <= 1e-12 && lin_err <= 1e-12 && concave_err <= 1e-14 && bound <= c_shared;
        all_ok &= ok;
        details.push(format!(
            "psi1[{k}]: match {match_err:.1e}, linear {lin_err:.1e}, convexity {concave_err:.1e}, bound {bound:.3} <= C = {c_shared:.3}"
        ));
    }
    let ok = report(
        4,
        "regularization certificate",
        all_ok,
        &details.join("; "),
        start.elapsed(),
        Duration::from_secs(5),
    );
    assert!(ok);
}

fn base_config(nv: usize, ns: usize) -> SimulationConfig {
    SimulationConfig {
        domain: Rectangle { lx: 1.0, ly: 1.0 },
        velocity_modes: [nv, nv],
        scalar_modes: [ns, ns],
        quadrature_nodes: None,
        model: ModelSpec::OldroydB(oldroyd()),
        reg_epsilon: 0.0,
        cutoff_k: CutoffLevel(None),
        elliptic_mu: 0.0,
        stickslip: StickSlipParams::free_slip(),
        body_force: BodyForce::Zero,
        mode: Mode::Dynamic,
        prescribed_velocity: None,
        t_span: [0.0, 0.5],
        ode: OdeSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-11,
            ..OdeSettings::default()
        },
        initial: InitialData {
            theta0: ScalarField::Bump {
                base: 1.0,
                amplitude: 0.3,
                center: [0.4, 0.5],
                width: 0.2,
            },
            b0: ScalarField::Bump {
                base: 1.0,
                amplitude: 0.3,
                center: [0.6, 0.5],
                width: 0.2,
            },
            v0: VelocitySpec::Vortex { amplitude: 1.0 },
        },
        output: OutputSettings::default(),
        strict: false,
        threads: None,
    }
}

fn stick_slip(cfg: &mut SimulationConfig) {
    cfg.stickslip = StickSlipParams {
        s_star: 0.1,
        gamma_star: 0.5,
        epsilon: 0.01,
    };
}

fn run(cfg: SimulationConfig) -> RunOutcome {
    audit::run(&Problem::new(cfg).unwrap()).unwrap()
}

/// `max |E(t) - E(0) + W_b(t)| / |E(0)|` over the recorded samples.
fn energy_drift(out: &RunOutcome) -> f64 {
    let e0 = out.samples[0].budget.total;
    out.samples
        .iter()
        .map(|s| {
            let w = s.diagnostics.accumulators.boundary_work;
            (s.budget.total - e0 + w).abs() / e0.abs()
        })
        .fold(0.0, f64::max)
}

/// Largest decrease of the total entropy between samples, relative to the
/// slack `1e-8 max(1, |S|)`.
fn entropy_decrease_ratio(samples: &[AuditSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].budget.entropy, w[1].budget.entropy);
            (a - b).max(0.0) / (1e-8 * b.abs().max(1.0))
        })
        .fold(0.0, f64::max)
}

/// Interval form of the entropy identity: over each pair of consecutive
/// samples, `|ΔS - Δ∫ζ| / Δt`, with `∫ζ dt` taken from the integrated
/// production so that time-quadrature error does not mask the defect.
fn entropy_identity_residual(samples: &[AuditSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let dt = w[1].budget.t - w[0].budget.t;
            let ds = w[1].budget.entropy - w[0].budget.entropy;
            let prod = w[1].diagnostics.accumulators.entropy_production
                - w[0].diagnostics.accumulators.entropy_production;
            (ds - prod).abs() / dt
        })
        .fold(0.0, f64::max)
}

#[test]
fn c05_energy_conservation() {
    let start = Instant::now();
    let isolated = run(base_config(16, 24));
    let drift = energy_drift(&isolated);
    let w_iso = isolated.final_state.acc.boundary_work;

    let mut cfg = base_config(16, 24);
    stick_slip(&mut cfg);
    let slip = run(cfg);
    let slip_drift = energy_drift(&slip);
    let work = slip.final_state.acc.boundary_work;

    let ok = report(
        5,
        "energy conservation",
        drift <= 1e-6 && w_iso == 0.0 && slip_drift <= 1e-6 && work > 1e-3,
        &format!(
            "isolated drift {drift:.3e}, stick-slip |dE + W_b|/E0 {slip_drift:.3e} with W_b = {work:.4} (<= 1e-6)"
        ),
        start.elapsed(),
        Duration::from_secs(300),
    );
    assert!(ok);
}

#[test]
fn c06_entropy_monotonicity() {
    let start = Instant::now();
    let isolated = run(base_config(16, 24));
    let mut cfg = base_config(16, 24);
    stick_slip(&mut cfg);
    let slip = run(cfg);
    let mono = entropy_decrease_ratio(&isolated.samples).max(entropy_decrease_ratio(&slip.samples));

    let ladder: Vec<f64> = [(8, 12), (16, 24), (32, 48)]
        .into_iter()
        .map(|(nv, ns)| {
            if nv == 16 {
                entropy_identity_residual(&isolated.samples)
            } else {
                entropy_identity_residual(&run(base_config(nv, ns)).samples)
            }
        })
        .collect();
    let halves = ladder.windows(2).all(|w| w[1] <= 0.5 * w[0]);
    let ok = report(
        6,
        "entropy monotonicity",
        mono <= 1.0 && halves,
        &format!(
            "largest decrease / slack {mono:.3e} (<= 1); identity residual at 8/12, 16/24, 32/48 modes: {:.3e}, {:.3e}, {:.3e} (halving)",
            ladder[0], ladder[1], ladder[2]
        ),
        start.elapsed(),
        Duration::from_secs(900),
    );
    assert!(ok);
}

fn kinematic(nv: usize, ns: usize) -> SimulationConfig {
    let mut cfg = base_config(nv, ns);
    cfg.mode = Mode::Kinematic;
    cfg.prescribed_velocity = Some(VelocitySpec::Vortex { amplitude: 0.5 });
    cfg.initial.v0 = VelocitySpec::Zero;
    cfg.t_span = [0.0, 1.0];
    cfg.ode.rel_tol = 1e-7;
    cfg.ode.abs_tol = 1e-10;
    cfg
}

#[test]
fn c07_b_min_max_principle() {
    let start = Instant::now();
    let (b_min, b_max) = (0.7, 1.5);
    let tol = 5e-3 * (b_max - b_min);
    let violation = |nv: usize| {
        let mut cfg = kinematic(nv, 2 * nv);
        let mut p = oldroyd().with_bounds(b_min, b_max);
        p.mu_tilde = 0.005;
        p.kappa_heat = 0.005;
        cfg.model = ModelSpec::OldroydB(p);
        cfg.initial.b0 = ScalarField::Plateau {
            base: 0.7,
            amplitude: 0.8,
            center: [0.5, 0.5],
            radius: 0.05,
            width: 0.4,
        };
        let out = run(cfg);
        out.samples
            .iter()
            .map(|s| (b_min - s.budget.min_b).max(s.budget.max_b - b_max).max(0.0))
            .fold(0.0, f64::max)
    };
    let v: Vec<f64> = [8, 16, 32].into_iter().map(violation).collect();
    let ok = report(
        7,
        "b min/max principle",
        v.iter().all(|&x| x <= tol) && v.windows(2).all(|w| w[1] <= 0.5 * w[0]),
        &format!(
            "violation at 8/16/32 velocity modes: {:.3e}, {:.3e}, {:.3e} (<= {tol:.0e}, halving)",
            v[0], v[1], v[2]
        ),
        start.elapsed(),
        Duration::from_secs(300),
    );
    assert!(ok);
}

#[test]
fn c08_positivity_floors() {
    let start = Instant::now();
    let eps = 1e-2;
    let c_v = oldroyd().c_v;
    // ẽ0(θ) = c_v θ for the logarithmic thermal part
    let e_floor = c_v * 0.5 * eps;
    let theta_floor = 0.5 * eps;
    let tol = 1e-3 * e_floor;
    let level = |(nv, ns): (usize, usize)| {
        let mut cfg = kinematic(nv, ns);
        cfg.reg_epsilon = eps;
        cfg.initial.theta0 = ScalarField::Bump {
            base: 1e-3,
            amplitude: 1.0,
            center: [0.4, 0.5],
            width: 0.25,
        };
        let out = run(cfg);
        let min_e = out.samples.iter().map(|s| s.budget.min_e).fold(f64::INFINITY, f64::min);
        let min_t = out
            .samples
            .iter()
            .map(|s| s.budget.min_theta)
            .fold(f64::INFINITY, f64::min);
        let violation = (e_floor - min_e).max(theta_floor - min_t).max(0.0);
        // the clamped initial energy is at least c_v ε pointwise (ψ2 ≥ 0 and
        // ψ1 is a positive constant), so anything below is discretization
        let undershoot = (c_v * eps - min_e).max(0.0);
        (min_e, min_t, violation, undershoot)
    };
    let r: Vec<_> = [(8, 12), (16, 24), (32, 48)].into_iter().map(level).collect();
    let ok = r.iter().all(|&(_, _, v, _)| v <= tol)
        && r.windows(2).all(|w| w[1].2 <= w[0].2 && w[1].3 < w[0].3);
    let ok = report(
        8,
        "positivity floors",
        ok,
        &format!(
            "min e {:.5}/{:.5}/{:.5}, min theta {:.5}/{:.5}/{:.5} vs floors {e_floor}, {theta_floor}; violations {:.1e}/{:.1e}/{:.1e} (<= {tol:.0e}, nonincreasing); shortfall below c_v eps {:.2e}/{:.2e}/{:.2e} (decreasing)",
            r[0].0, r[1].0, r[2].0, r[0].1, r[1].1, r[2].1, r[0].2, r[1].2, r[2].2, r[0].3, r[1].3, r[2].3
        ),
        start.elapsed(),
        Duration::from_secs(300),
    );
    assert!(ok);
}

#[test]
fn c09_stick_slip_graph_consistency() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed_0009);
    let delta = 0.1;
    let mut worst = 0.0f64;
    for eps in [1e-1, 1e-2, 1e-3] {
        let p = StickSlipParams {
            s_star: 0.3,
            gamma_star: 0.7,
            epsilon: eps,
        };
        let bound = p.s_star * eps / (eps + delta);
        for _ in 0..10_000 {
            let r = rng.random_range(delta..10.0);
            let phi = rng.random_range(0.0..2.0 * PI);
            let v = [r * phi.cos(), r * phi.sin()];
            let s = stick_slip_mollified(v, &p);
            let w = stick_slip_graph(s, &p).unwrap();
            let err = (p.gamma_star * (w[0] - v[0])).hypot(p.gamma_star * (w[1] - v[1]));
            worst = worst.max(err / bound);
        }
    }
    let ok = report(
        9,
        "stick-slip graph consistency",
        worst <= 1.0,
        &format!("max error / (s* eps/(eps + delta)) = {worst:.6} (<= 1)"),
        start.elapsed(),
        Duration::from_secs(5),
    );
    assert!(ok);
}

#[test]
fn c10_heat_equation_oracle() {
    let start = Instant::now();
    let alpha = 0.05;
    let rel_tol = 1e-8;
    let coefficients = MaterialCoefficients {
        nu: CoefficientFn::constant(0.02),
        kappa: CoefficientFn::constant(0.02),
        alpha: CoefficientFn::constant(alpha),
        relaxation: Relaxation::Direct {
            h: CoefficientFn::constant(0.0),
        },
        c1: 0.02,
        c2: 1.0,
        b_min: 0.5,
        b_max: 2.0,
    };
    let (lx, ly, i, j, t_end) = (2.0, 1.0, 3usize, 2usize, 1.0);
    let mut cfg = base_config(4, 6);
    cfg.domain = Rectangle { lx, ly };
    cfg.model = ModelSpec::Custom {
        free_energy: oldroyd().free_energy(),
        coefficients,
    };
    cfg.mode = Mode::Kinematic;
    cfg.prescribed_velocity = Some(VelocitySpec::Zero);
    cfg.t_span = [0.0, t_end];
    cfg.ode.rel_tol = rel_tol;
    cfg.ode.abs_tol = 1e-3 * rel_tol;
    cfg.initial = InitialData {
        theta0: ScalarField::Constant { value: 1.0 },
        b0: ScalarField::CosineMode {
            mean: 1.0,
            amplitude: 0.2,
            i,
            j,
        },
        v0: VelocitySpec::Zero,
    };
    let p = Problem::new(cfg).unwrap();
    let s0 = p.project_initial().unwrap();
    let (s1, _) = p.integrate(&s0, &[], |_| Ok(())).unwrap();
    let k = p.discretization().scalar_basis().index(i, j);
    let lambda = (i as f64 * PI / lx).powi(2) + (j as f64 * PI / ly).powi(2);
    let expected = (-alpha * lambda * t_end).exp();
    let rel = (s1.d[k] / s0.d[k] - expected).abs() / expected;
    let ok = report(
        10,
        "heat-equation oracle",
        rel <= 10.0 * rel_tol,
        &format!("mode ({i},{j}) decay rel err {rel:.3e} (<= {:.0e})", 10.0 * rel_tol),
        start.elapsed(),
        Duration::from_secs(30),
    );
    assert!(ok);
}

#[test]
fn c11_determinism_across_threads() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(8, 12);
    cfg.t_span = [0.0, 0.2];
    cfg.output.snapshots = vec![0.2];
    cfg.output.plot_grid = [16, 16];
    let config = dir.path().join("config.json");
    fs::write(&config, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();

    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut counts = vec![1, 2, max.max(2)];
    counts.dedup();
    let outputs: Vec<Vec<u8>> = counts
        .iter()
        .flat_map(|&n| {
            (0..2).map(move |rep| (n, rep))
        })
        .map(|(n, rep)| {
            let out = dir.path().join(format!("run_{n}_{rep}"));
            let opts = RunOptions {
                threads: Some(n),
                ..RunOptions::default()
            };
            commands::cmd_run(&config, &out, &opts).unwrap();
            fs::read(out.join(commands::BUDGETS)).unwrap()
        })
        .collect();
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let ok = report(
        11,
        "determinism",
        identical && !outputs[0].is_empty(),
        &format!(
            "budgets.csv byte-identical over threads {:?} x 2 runs: {identical}",
            counts
        ),
        start.elapsed(),
        Duration::from_secs(600),
    );
    assert!(ok);
}
