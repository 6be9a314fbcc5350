//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use viscotherm_core::constitutive::OldroydB;
use viscotherm_core::solver::{
    InitialData, ModelSpec, OdeSettings, OutputSettings, Problem, ScalarField, SimulationConfig,
    VelocitySpec,
};
use viscotherm_core::spectral::kernels;
use viscotherm_core::{Rectangle, StickSlipParams};

pub fn oldroyd() -> OldroydB {
    OldroydB::new(1.0, 1.0, 0.5, 1.0, 0.02, 0.02, 0.02)
}

/// Unit square with a vortex and off-center temperature and stretch bumps.
pub fn stirred_config(nv: usize, ns: usize) -> SimulationConfig {
    SimulationConfig {
        domain: Rectangle { lx: 1.0, ly: 1.0 },
        velocity_modes: [nv, nv],
        scalar_modes: [ns, ns],
        quadrature_nodes: None,
        model: ModelSpec::OldroydB(oldroyd()),
        reg_epsilon: 0.0,
        cutoff_k: Default::default(),
        elliptic_mu: 0.0,
        stickslip: StickSlipParams::free_slip(),
        body_force: Default::default(),
        mode: Default::default(),
        prescribed_velocity: None,
        t_span: [0.0, 0.05],
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

/// A problem together with its projected initial state vector.
pub fn stirred_state(nv: usize, ns: usize) -> (Problem, Vec<f64>) {
    let p = Problem::new(stirred_config(nv, ns)).expect("fixture config is valid");
    let y = p.project_initial().expect("fixture data is admissible").to_vec();
    (p, y)
}

/// Cosine tables for `n` modes on `m` uniformly spaced points of `[0, 1]`,
/// plus a deterministic coefficient block of size `n × n`.
pub struct TransformFixture {
    pub n: usize,
    pub m: usize,
    pub table: Vec<f64>,
    pub coef: Vec<f64>,
    pub grid: Vec<f64>,
}

impl TransformFixture {
    pub fn new(n: usize, m: usize) -> Self {
        let x: Vec<f64> = (0..m).map(|p| (p as f64 + 0.5) / m as f64).collect();
        let table = kernels::table(n, &x, |k, xp| (k as f64 * PI * xp).cos());
        let coef = (0..n * n).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let grid = (0..m * m).map(|k| (0.37 * k as f64).sin()).collect();
        Self {
            n,
            m,
            table,
            coef,
            grid,
        }
    }
}
