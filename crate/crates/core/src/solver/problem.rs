//! The assembled Galerkin system: initial projection and right-hand side.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Mode, SimulationConfig, VelocitySpec};
use super::integrator::{dopri5, IntegrationStats, StepReport};
use crate::closure::frobenius_sq;
use crate::constitutive::{FreeEnergyModel, MaterialCoefficients};
use crate::error::{Error, Result};
use crate::regularization::{
    clamp_b, clamp_initial_energy, convective_cutoff, theta_from_e_plain, CutoffSpec,
    RegularizedModel, StickSlipParams,
};
use crate::spectral::{
    Discretization, EdgeTraces, Rectangle, ScalarBasis, VelocityBasis, VelocityGrid,
};

/// Number of running integrals carried with the state.
pub const N_ACCUMULATORS: usize = 4;

/// Time integrals carried as extra ODE components so that budgets close to
/// integrator accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Accumulators {
    /// `∫₀ᵗ ∮ s̃(v_τ)·v_τ`
    pub boundary_work: f64,
    /// `∫₀ᵗ ∫ f·v`
    pub body_work: f64,
    /// `∫₀ᵗ ∫ ζ`
    pub entropy_production: f64,
    /// Work done by a prescribed velocity field (kinematic mode), which
    /// balances viscous heating, wall friction and body forces.
    pub prescribed_work: f64,
}

/// Galerkin coefficients at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// velocity coefficients
    pub c: Vec<f64>,
    /// `b` coefficients
    pub d: Vec<f64>,
    /// internal-energy coefficients
    pub e_c: Vec<f64>,
    pub acc: Accumulators,
}

impl SimState {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.c.len() + 2 * self.d.len() + N_ACCUMULATORS);
        y.extend_from_slice(&self.c);
        y.extend_from_slice(&self.d);
        y.extend_from_slice(&self.e_c);
        y.extend([
            self.acc.boundary_work,
            self.acc.body_work,
            self.acc.entropy_production,
            self.acc.prescribed_work,
        ]);
        y
    }

    pub fn from_slice(t: f64, y: &[f64], nv: usize, ns: usize) -> Result<Self> {
        let expected = nv + 2 * ns + N_ACCUMULATORS;
        if y.len() != expected {
            return Err(Error::Dimension {
                what: "state vector",
                expected,
                got: y.len(),
            });
        }
        let a = &y[nv + 2 * ns..];
        Ok(Self {
            t,
            c: y[..nv].to_vec(),
            d: y[nv..nv + ns].to_vec(),
            e_c: y[nv + ns..nv + 2 * ns].to_vec(),
            acc: Accumulators {
                boundary_work: a[0],
                body_work: a[1],
                entropy_production: a[2],
                prescribed_work: a[3],
            },
        })
    }

    pub fn is_finite(&self) -> bool {
        self.c
            .iter()
            .chain(&self.d)
            .chain(&self.e_c)
            .all(|v| v.is_finite())
    }
}

/// Per-node results of the constitutive evaluation.
#[derive(Debug, Clone, Copy, Default)]
struct NodeOut {
    fbx: f64,
    fby: f64,
    src_b: f64,
    fex: f64,
    fey: f64,
    src_e: f64,
    sdiff: f64,
    sxy: f64,
    body_power: f64,
    zeta: f64,
}

/// A fully resolved simulation: discretization, model and forcing.
#[derive(Debug, Clone)]
pub struct Problem {
    config: SimulationConfig,
    disc: Discretization,
    reg: RegularizedModel,
    coeffs: MaterialCoefficients,
    cutoff: CutoffSpec,
    stick: StickSlipParams,
    mu: f64,
    force_x: Vec<f64>,
    force_y: Vec<f64>,
    /// Prescribed velocity coefficients and their node values (kinematic mode).
    frozen: Option<(Vec<f64>, VelocityGrid)>,
}

impl Problem {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let (model, coeffs) = config.model.build()?;
        let reg = if config.reg_epsilon > 0.0 {
            RegularizedModel::new(model, config.reg_epsilon)?
        } else {
            RegularizedModel::plain(model)
        };
        let [nx, ny] = config.velocity_modes;
        let [mx, my] = config.scalar_modes;
        let disc = Discretization::new(
            config.domain,
            ScalarBasis { mx, my },
            VelocityBasis { nx, ny },
            config.quadrature_nodes.map(|[a, b]| (a, b)),
        )?;
        let cutoff = CutoffSpec {
            k: config.cutoff_k.0,
            b_min: coeffs.b_min,
            b_max: coeffs.b_max,
        };
        let n = disc.n_nodes();
        let mut force_x = vec![0.0; n];
        let mut force_y = vec![0.0; n];
        for k in 0..n {
            let (x, y) = disc.node(k);
            let f = config.body_force.eval(&config.domain, x, y);
            force_x[k] = f[0];
            force_y[k] = f[1];
        }
        let mut problem = Self {
            stick: config.stickslip,
            mu: config.elliptic_mu,
            config,
            disc,
            reg,
            coeffs,
            cutoff,
            force_x,
            force_y,
            frozen: None,
        };
        if problem.config.mode == Mode::Kinematic {
            let spec = problem
                .config
                .prescribed_velocity
                .clone()
                .unwrap_or_else(|| problem.config.initial.v0.clone());
            let c = problem.velocity_coefficients(&spec)?;
            let grid = problem.disc.velocity_fields(&c)?;
            problem.frozen = Some((c, grid));
        }
        Ok(problem)
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn regularized(&self) -> &RegularizedModel {
        &self.reg
    }

    /// The model actually evolved (with `ψ1^ε` when regularized).
    pub fn model(&self) -> &FreeEnergyModel {
        self.reg.model()
    }

    pub fn coefficients(&self) -> &MaterialCoefficients {
        &self.coeffs
    }

    pub fn cutoff(&self) -> &CutoffSpec {
        &self.cutoff
    }

    pub fn stickslip(&self) -> &StickSlipParams {
        &self.stick
    }

    pub fn body_force_nodes(&self) -> (&[f64], &[f64]) {
        (&self.force_x, &self.force_y)
    }

    pub fn is_kinematic(&self) -> bool {
        self.frozen.is_some()
    }

    pub fn state_len(&self) -> usize {
        self.disc.n_velocity() + 2 * self.disc.n_scalar() + N_ACCUMULATORS
    }

    pub fn unpack(&self, t: f64, y: &[f64]) -> Result<SimState> {
        SimState::from_slice(t, y, self.disc.n_velocity(), self.disc.n_scalar())
    }

    fn velocity_coefficients(&self, spec: &VelocitySpec) -> Result<Vec<f64>> {
        let basis = *self.disc.velocity_basis();
        match spec {
            VelocitySpec::Zero => Ok(vec![0.0; basis.len()]),
            VelocitySpec::Modes { modes } => {
                let mut c = vec![0.0; basis.len()];
                for m in modes {
                    if m.i == 0 || m.j == 0 || m.i > basis.nx || m.j > basis.ny {
                        return Err(Error::Config(format!(
                            "velocity mode ({}, {}) outside 1..={} x 1..={}",
                            m.i, m.j, basis.nx, basis.ny
                        )));
                    }
                    c[basis.index(m.i, m.j)] += m.c;
                }
                Ok(c)
            }
            VelocitySpec::Vortex { .. } => {
                let rect: Rectangle = self.config.domain;
                let n = self.disc.n_nodes();
                let (mut vx, mut vy) = (vec![0.0; n], vec![0.0; n]);
                for k in 0..n {
                    let (x, y) = self.disc.node(k);
                    let v = spec.eval(&rect, x, y);
                    vx[k] = v[0];
                    vy[k] = v[1];
                }
                self.disc.project_velocity(&vx, &vy)
            }
        }
    }

    /// Projects the initial data; the energy is clamped when regularized.
    pub fn project_initial(&self) -> Result<SimState> {
        let rect = self.config.domain;
        let init = &self.config.initial;
        let n = self.disc.n_nodes();
        let mut theta0 = vec![0.0; n];
        let mut b0 = vec![0.0; n];
        for k in 0..n {
            let (x, y) = self.disc.node(k);
            theta0[k] = init.theta0.eval(&rect, x, y);
            b0[k] = init.b0.eval(&rect, x, y);
            if !(theta0[k] > 0.0 && theta0[k].is_finite()) {
                return Err(Error::Config(format!(
                    "initial.theta0 = {} at ({x}, {y}) must be positive",
                    theta0[k]
                )));
            }
            if !(b0[k] >= self.coeffs.b_min && b0[k] <= self.coeffs.b_max) {
                return Err(Error::Config(format!(
                    "initial.b0 = {} at ({x}, {y}) lies outside [{}, {}]",
                    b0[k], self.coeffs.b_min, self.coeffs.b_max
                )));
            }
        }
        let e0 = clamp_initial_energy(
            &theta0,
            &b0,
            &self.reg,
            (self.coeffs.b_min, self.coeffs.b_max),
        )?;
        let c = match &self.frozen {
            Some((c, _)) => c.clone(),
            None => self.velocity_coefficients(&init.v0)?,
        };
        Ok(SimState {
            t: self.config.t_span[0],
            c,
            d: self.disc.project_scalar(&b0)?,
            e_c: self.disc.project_scalar(&e0)?,
            acc: Accumulators::default(),
        })
    }

    /// Temperature from `(e, b)` at one node: `θ̃^ε(e₊, b_M)`, or the plain
    /// inverse when unregularized.
    #[inline]
    pub fn node_temperature(&self, e: f64, b_m: f64) -> Result<f64> {
        if self.reg.is_regularized() {
            self.reg.theta_from_e(e.max(0.0), b_m)
        } else {
            theta_from_e_plain(self.reg.model(), e, b_m)
        }
    }

    /// Solver-side temperatures at the quadrature nodes.
    pub fn node_temperatures(&self, state: &SimState) -> Result<Vec<f64>> {
        let b = self.disc.scalar_values(&state.d)?;
        let e = self.disc.scalar_values(&state.e_c)?;
        b.par_iter()
            .zip(e.par_iter())
            .map(|(&b, &e)| self.node_temperature(e, clamp_b(b, &self.cutoff)))
            .collect()
    }

    /// Tangential tractions `s̃^ε(v_τ)` on the edges.
    pub fn tractions(&self, trace: &EdgeTraces) -> EdgeTraces {
        let map = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|&vt| {
                    let k = if self.stick.epsilon + vt.abs() > 0.0 {
                        self.stick.s_star / (self.stick.epsilon + vt.abs())
                    } else {
                        0.0
                    };
                    (k + self.stick.gamma_star) * vt
                })
                .collect()
        };
        EdgeTraces {
            bottom: map(&trace.bottom),
            top: map(&trace.top),
            left: map(&trace.left),
            right: map(&trace.right),
        }
    }

    /// Evaluates the Galerkin right-hand side into `dy`.
    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let nv = self.disc.n_velocity();
        let ns = self.disc.n_scalar();
        let n = self.disc.n_nodes();
        if y.len() != self.state_len() || dy.len() != self.state_len() {
            return Err(Error::Dimension {
                what: "state vector",
                expected: self.state_len(),
                got: y.len(),
            });
        }
        let c = &y[..nv];
        let d = &y[nv..nv + ns];
        let ec = &y[nv + ns..nv + 2 * ns];

        let owned;
        let vel = match &self.frozen {
            Some((_, grid)) => grid,
            None => {
                owned = self.disc.velocity_fields(c)?;
                &owned
            }
        };
        let mut b = vec![0.0; n];
        let mut bx = vec![0.0; n];
        let mut by = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut ex = vec![0.0; n];
        let mut ey = vec![0.0; n];
        self.disc.scalar_values_into(d, &mut b);
        self.disc.scalar_gradient_into(d, &mut bx, &mut by);
        self.disc.scalar_values_into(ec, &mut e);
        self.disc.scalar_gradient_into(ec, &mut ex, &mut ey);

        let dynamic = self.frozen.is_none();
        let model = self.reg.model();
        let co = &self.coeffs;
        let out: Vec<NodeOut> = (0..n)
            .into_par_iter()
            .with_min_len(64)
            .map(|k| {
                let bk = b[k];
                let b_m = clamp_b(bk, &self.cutoff);
                let theta = self.node_temperature(e[k], b_m)?;
                let th = theta.max(0.0);
                let dpsi2 = model.psi2.d1(b_m);
                let e1 = model.psi1.energy_part(th);
                let inside = bk > self.cutoff.b_min && bk < self.cutoff.b_max;
                let gbm = if inside { [bx[k], by[k]] } else { [0.0, 0.0] };
                let gth = if e[k] > 0.0 || !self.reg.is_regularized() {
                    let cv = model.heat_capacity_unchecked(th, b_m);
                    [
                        (ex[k] - e1 * dpsi2 * gbm[0]) / cv,
                        (ey[k] - e1 * dpsi2 * gbm[1]) / cv,
                    ]
                } else {
                    [ex[k], ey[k]]
                };
                let nu = co.nu(th, b_m);
                let kappa = co.kappa(th, b_m);
                let alpha = co.alpha(th, b_m);
                let h = co.h(th, b_m, dpsi2);
                let (vx, vy) = (vel.vx[k], vel.vy[k]);
                let dmat = vel.sym_grad(k);
                let dd = frobenius_sq(&dmat);
                let cross = alpha * e1 * dpsi2;
                let mut o = NodeOut {
                    fbx: alpha * bx[k] - bk * vx,
                    fby: alpha * by[k] - bk * vy,
                    src_b: -h,
                    fex: self.mu * ex[k] + kappa * gth[0] - e[k] * vx + cross * bx[k],
                    fey: self.mu * ey[k] + kappa * gth[1] - e[k] * vy + cross * by[k],
                    src_e: 2.0 * nu * dd,
                    ..NodeOut::default()
                };
                if dynamic {
                    let g = convective_cutoff(vx.hypot(vy), &self.cutoff);
                    o.sdiff = 4.0 * nu * dmat[0][0] - g * (vx * vx - vy * vy);
                    o.sxy = 2.0 * nu * dmat[0][1] - g * vx * vy;
                }
                o.body_power = self.force_x[k] * vx + self.force_y[k] * vy;
                if theta > 0.0 {
                    let psi1 = model.psi1.value(th);
                    let gb2 = bx[k] * bx[k] + by[k] * by[k];
                    let gt2 = gth[0] * gth[0] + gth[1] * gth[1];
                    o.zeta = (kappa * gt2 / th
                        + 2.0 * nu * dd
                        + h * psi1 * dpsi2
                        + psi1 * model.psi2.d2(b_m) * alpha * gb2)
                        / th;
                }
                let all = [
                    o.fbx, o.fby, o.src_b, o.fex, o.fey, o.src_e, o.sdiff, o.sxy, o.body_power,
                    o.zeta,
                ];
                if all.iter().any(|v| !v.is_finite()) {
                    let (x, y) = self.disc.node(k);
                    return Err(Error::NonFinite {
                        what: "constitutive evaluation",
                        x,
                        y,
                    });
                }
                Ok(o)
            })
            .collect::<Result<Vec<_>>>()?;

        let col = |f: fn(&NodeOut) -> f64| out.iter().map(f).collect::<Vec<f64>>();
        let q = self.disc.quadrature();

        let mut rows_b = self.disc.scalar_weak(&col(|o| o.fbx), &col(|o| o.fby), &col(|o| o.src_b));
        self.disc.scalar_mass_solve(&mut rows_b);
        dy[nv..nv + ns].copy_from_slice(&rows_b);

        let heating = col(|o| o.src_e);
        let mut rows_e = self.disc.scalar_weak(&col(|o| o.fex), &col(|o| o.fey), &heating);
        self.disc.scalar_mass_solve(&mut rows_e);
        dy[nv + ns..nv + 2 * ns].copy_from_slice(&rows_e);

        let trace = self.disc.boundary_trace(match &self.frozen {
            Some((cf, _)) => cf,
            None => c,
        })?;
        let traction = self.tractions(&trace);
        let boundary_rate = self.disc.boundary_integral(&traction, &trace);

        if dynamic {
            let mut rows = self
                .disc
                .velocity_weak(&col(|o| o.sdiff), &col(|o| o.sxy), &self.force_x, &self.force_y);
            let brows = self.disc.boundary_rows(&traction);
            for (r, bnd) in rows.iter_mut().zip(&brows) {
                *r -= bnd;
            }
            self.disc.gram_solve(&mut rows);
            dy[..nv].copy_from_slice(&rows);
        } else {
            dy[..nv].fill(0.0);
        }
        let a = nv + 2 * ns;
        dy[a] = boundary_rate;
        dy[a + 1] = q.integrate_grid(&col(|o| o.body_power));
        dy[a + 2] = q.integrate_grid(&col(|o| o.zeta));
        dy[a + 3] = if dynamic {
            0.0
        } else {
            q.integrate_grid(&heating) + boundary_rate - dy[a + 1]
        };
        Ok(())
    }

    /// Integrates from the configured start to end time, landing on
    /// `checkpoints`; the observer sees every accepted step.
    pub fn integrate<O>(
        &self,
        state0: &SimState,
        checkpoints: &[f64],
        observe: O,
    ) -> Result<(SimState, IntegrationStats)>
    where
        O: FnMut(&StepReport) -> Result<()>,
    {
        let t_end = self.config.t_span[1];
        let (y, stats) = dopri5(
            |_, y, dy| self.rhs(y, dy),
            state0.t,
            state0.to_vec(),
            t_end,
            checkpoints,
            &self.config.ode,
            observe,
        )?;
        Ok((self.unpack(t_end, &y)?, stats))
    }
}
