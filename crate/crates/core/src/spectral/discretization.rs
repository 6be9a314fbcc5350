use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::basis::{Rectangle, ScalarBasis, VelocityBasis};
use super::kernels::{analyze, synthesize, table, weighted};
use super::quadrature::TensorQuadrature;
use crate::error::{Error, Result};

/// Velocity and its first derivatives at grid points (row-major `P × Q`).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub dxvx: Vec<f64>,
    pub dyvx: Vec<f64>,
    pub dxvy: Vec<f64>,
}

impl VelocityGrid {
    fn zeros(n: usize) -> Self {
        Self {
            vx: vec![0.0; n],
            vy: vec![0.0; n],
            dxvx: vec![0.0; n],
            dyvx: vec![0.0; n],
            dxvy: vec![0.0; n],
        }
    }

    /// Symmetric gradient at node `k`; `∂y v_y = -∂x v_x` exactly.
    #[inline]
    pub fn sym_grad(&self, k: usize) -> [[f64; 2]; 2] {
        let off = 0.5 * (self.dyvx[k] + self.dxvy[k]);
        [[self.dxvx[k], off], [off, -self.dxvx[k]]]
    }
}

/// Tangential velocity on the four edges at the edge quadrature nodes:
/// `v_x` on the bottom (`y = 0`) and top (`y = ly`) edges at the `x` nodes,
/// `v_y` on the left (`x = 0`) and right (`x = lx`) edges at the `y` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTraces {
    pub bottom: Vec<f64>,
    pub top: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// 1D tables for one direction.
#[derive(Debug, Clone)]
struct Tables {
    /// scalar `cos(k π s / L)`, `k < m`
    cos: Vec<f64>,
    /// scalar `d/ds cos(k π s / L)`
    dcos: Vec<f64>,
    /// velocity `sin(k π s / L)`, `1 ≤ k ≤ n`
    vsin: Vec<f64>,
    /// velocity `cos(k π s / L)`, `1 ≤ k ≤ n`
    vcos: Vec<f64>,
}

impl Tables {
    fn new(len: f64, m: usize, n: usize, pts: &[f64]) -> Self {
        let wave = |k: usize| k as f64 * PI / len;
        Self {
            cos: table(m, pts, |k, s| (wave(k) * s).cos()),
            dcos: table(m, pts, |k, s| -wave(k) * (wave(k) * s).sin()),
            vsin: table(n, pts, |k, s| (wave(k + 1) * s).sin()),
            vcos: table(n, pts, |k, s| (wave(k + 1) * s).cos()),
        }
    }

    fn weighted(&self, w: &[f64]) -> Self {
        Self {
            cos: weighted(&self.cos, w),
            dcos: weighted(&self.dcos, w),
            vsin: weighted(&self.vsin, w),
            vcos: weighted(&self.vcos, w),
        }
    }
}

/// Bases, quadrature and precomputed tables for one resolution.
#[derive(Debug, Clone)]
pub struct Discretization {
    rect: Rectangle,
    scalar: ScalarBasis,
    velocity: VelocityBasis,
    quad: TensorQuadrature,
    tx: Tables,
    ty: Tables,
    wtx: Tables,
    wty: Tables,
    /// velocity wave numbers `a_i = iπ/lx`, `b_j = jπ/ly`
    a: Vec<f64>,
    b: Vec<f64>,
    mass: Vec<f64>,
    gram: DMatrix<f64>,
    gram_chol: Cholesky<f64, Dyn>,
}

/// Default node count per direction for a largest wave number `k`.
pub fn default_nodes(max_index: usize) -> usize {
    3 * max_index + 8
}

/// Smallest accepted node count per direction.
pub fn min_nodes(max_index: usize) -> usize {
    2 * max_index + 2
}

impl Discretization {
    /// `nodes = None` selects [`default_nodes`] in each direction.
    pub fn new(
        rect: Rectangle,
        scalar: ScalarBasis,
        velocity: VelocityBasis,
        nodes: Option<(usize, usize)>,
    ) -> Result<Self> {
        rect.validate()?;
        if scalar.is_empty() || velocity.is_empty() {
            return Err(Error::Config("mode counts must be at least 1".into()));
        }
        let kx = (scalar.mx - 1).max(velocity.nx);
        let ky = (scalar.my - 1).max(velocity.ny);
        let (px, py) = nodes.unwrap_or((default_nodes(kx), default_nodes(ky)));
        if px < min_nodes(kx) || py < min_nodes(ky) {
            return Err(Error::Resolution(format!(
                "{px}x{py} nodes for largest wave numbers ({kx}, {ky}); need at least {}x{}",
                min_nodes(kx),
                min_nodes(ky)
            )));
        }
        let quad = TensorQuadrature::new(rect.lx, rect.ly, px, py);
        let tx = Tables::new(rect.lx, scalar.mx, velocity.nx, &quad.x);
        let ty = Tables::new(rect.ly, scalar.my, velocity.ny, &quad.y);
        let wtx = tx.weighted(&quad.wx);
        let wty = ty.weighted(&quad.wy);
        let a: Vec<f64> = (1..=velocity.nx).map(|i| i as f64 * PI / rect.lx).collect();
        let b: Vec<f64> = (1..=velocity.ny).map(|j| j as f64 * PI / rect.ly).collect();
        let mut mass = Vec::with_capacity(scalar.len());
        for i in 0..scalar.mx {
            for j in 0..scalar.my {
                mass.push(scalar.mass(&rect, i, j));
            }
        }

        // Separable Gram matrix from 1D quadrature products.
        let prod = |t: &[f64], wt: &[f64], n: usize| {
            let m = t.len() / n;
            DMatrix::from_fn(n, n, |i, k| {
                (0..m).map(|p| wt[i * m + p] * t[k * m + p]).sum::<f64>()
            })
        };
        let ssx = prod(&tx.vsin, &wtx.vsin, velocity.nx);
        let ccx = prod(&tx.vcos, &wtx.vcos, velocity.nx);
        let ssy = prod(&ty.vsin, &wty.vsin, velocity.ny);
        let ccy = prod(&ty.vcos, &wty.vcos, velocity.ny);
        let nv = velocity.len();
        let ny = velocity.ny;
        let gram = DMatrix::from_fn(nv, nv, |r, s| {
            let (i, j) = (r / ny, r % ny);
            let (k, l) = (s / ny, s % ny);
            b[j] * b[l] * ssx[(i, k)] * ccy[(j, l)] + a[i] * a[k] * ccx[(i, k)] * ssy[(j, l)]
        });
        let gram_chol = Cholesky::new(gram.clone()).ok_or(Error::SingularGram)?;

        Ok(Self {
            rect,
            scalar,
            velocity,
            quad,
            tx,
            ty,
            wtx,
            wty,
            a,
            b,
            mass,
            gram,
            gram_chol,
        })
    }

    pub fn rect(&self) -> &Rectangle {
        &self.rect
    }

    pub fn scalar_basis(&self) -> &ScalarBasis {
        &self.scalar
    }

    pub fn velocity_basis(&self) -> &VelocityBasis {
        &self.velocity
    }

    pub fn quadrature(&self) -> &TensorQuadrature {
        &self.quad
    }

    pub fn n_scalar(&self) -> usize {
        self.scalar.len()
    }

    pub fn n_velocity(&self) -> usize {
        self.velocity.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.quad.len()
    }

    /// Analytic scalar mode norms `‖u_k‖²`.
    pub fn scalar_mass(&self) -> &[f64] {
        &self.mass
    }

    /// Velocity Gram matrix `G_kl = Q[w_k · w_l]`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Node coordinates `(x_p, y_q)` for row-major index `k = p * Q + q`.
    pub fn node(&self, k: usize) -> (f64, f64) {
        let q_len = self.quad.ny();
        (self.quad.x[k / q_len], self.quad.y[k % q_len])
    }

    fn check_len(&self, what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension {
                what,
                expected,
                got,
            })
        }
    }

    /// Scalar field values at the quadrature nodes.
    pub fn scalar_values(&self, coef: &[f64]) -> Result<Vec<f64>> {
        self.check_len("scalar coefficients", self.n_scalar(), coef.len())?;
        let mut out = vec![0.0; self.n_nodes()];
        self.scalar_values_into(coef, &mut out);
        Ok(out)
    }

    pub(crate) fn scalar_values_into(&self, coef: &[f64], out: &mut [f64]) {
        let (mx, my) = (self.scalar.mx, self.scalar.my);
        synthesize(coef, mx, my, &self.tx.cos, &self.ty.cos, out);
    }

    /// Scalar field gradient `(∂x, ∂y)` at the quadrature nodes.
    pub fn scalar_gradient(&self, coef: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len("scalar coefficients", self.n_scalar(), coef.len())?;
        let mut gx = vec![0.0; self.n_nodes()];
        let mut gy = vec![0.0; self.n_nodes()];
        self.scalar_gradient_into(coef, &mut gx, &mut gy);
        Ok((gx, gy))
    }

    pub(crate) fn scalar_gradient_into(&self, coef: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        let (mx, my) = (self.scalar.mx, self.scalar.my);
        synthesize(coef, mx, my, &self.tx.dcos, &self.ty.cos, gx);
        synthesize(coef, mx, my, &self.tx.cos, &self.ty.dcos, gy);
    }

    /// Velocity and first derivatives at the quadrature nodes.
    pub fn velocity_fields(&self, c: &[f64]) -> Result<VelocityGrid> {
        self.check_len("velocity coefficients", self.n_velocity(), c.len())?;
        let mut g = VelocityGrid::zeros(self.n_nodes());
        self.velocity_fields_into(c, &mut g);
        Ok(g)
    }

    fn scaled(&self, c: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let ny = self.velocity.ny;
        c.iter()
            .enumerate()
            .map(|(k, &ck)| ck * f(self.a[k / ny], self.b[k % ny]))
            .collect()
    }

    pub(crate) fn velocity_fields_into(&self, c: &[f64], g: &mut VelocityGrid) {
        let (nx, ny) = (self.velocity.nx, self.velocity.ny);
        let (tx, ty) = (&self.tx, &self.ty);
        synthesize(&self.scaled(c, |_, b| b), nx, ny, &tx.vsin, &ty.vcos, &mut g.vx);
        synthesize(&self.scaled(c, |a, _| -a), nx, ny, &tx.vcos, &ty.vsin, &mut g.vy);
        synthesize(&self.scaled(c, |a, b| a * b), nx, ny, &tx.vcos, &ty.vcos, &mut g.dxvx);
        synthesize(&self.scaled(c, |_, b| -b * b), nx, ny, &tx.vsin, &ty.vsin, &mut g.dyvx);
        synthesize(&self.scaled(c, |a, _| a * a), nx, ny, &tx.vsin, &ty.vsin, &mut g.dxvy);
    }

    /// Weak-form rows `Q[s u_k] - Q[F · ∇u_k]` for the scalar basis.
    pub fn scalar_weak(&self, fx: &[f64], fy: &[f64], source: &[f64]) -> Vec<f64> {
        let (mx, my) = (self.scalar.mx, self.scalar.my);
        let n = self.n_scalar();
        let (mut r1, mut r2, mut r3) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        analyze(fx, &self.wtx.dcos, &self.wty.cos, mx, my, &mut r1);
        analyze(fy, &self.wtx.cos, &self.wty.dcos, mx, my, &mut r2);
        analyze(source, &self.wtx.cos, &self.wty.cos, mx, my, &mut r3);
        (0..n).map(|k| r3[k] - (r1[k] + r2[k])).collect()
    }

    /// `Q[f u_k]` for every scalar mode.
    pub fn scalar_moments(&self, values: &[f64]) -> Vec<f64> {
        let (mx, my) = (self.scalar.mx, self.scalar.my);
        let mut out = vec![0.0; self.n_scalar()];
        analyze(values, &self.wtx.cos, &self.wty.cos, mx, my, &mut out);
        out
    }

    /// Divides weak-form rows by the diagonal mass.
    pub fn scalar_mass_solve(&self, rows: &mut [f64]) {
        for (r, m) in rows.iter_mut().zip(&self.mass) {
            *r /= m;
        }
    }

    /// L² projection of nodal values onto the scalar basis.
    pub fn project_scalar(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_len("scalar grid", self.n_nodes(), values.len())?;
        let mut c = self.scalar_moments(values);
        self.scalar_mass_solve(&mut c);
        Ok(c)
    }

    /// Weak-form momentum rows `-Q[Σ : ∇w_k] + Q[f · w_k]` for a symmetric
    /// `Σ` given by `Σxx - Σyy` and `Σxy`.
    pub fn velocity_weak(&self, sdiff: &[f64], sxy: &[f64], fx: &[f64], fy: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.velocity.nx, self.velocity.ny);
        let n = self.n_velocity();
        let mut cc = vec![0.0; n];
        let mut ss = vec![0.0; n];
        let mut sc = vec![0.0; n];
        let mut cs = vec![0.0; n];
        analyze(sdiff, &self.wtx.vcos, &self.wty.vcos, nx, ny, &mut cc);
        analyze(sxy, &self.wtx.vsin, &self.wty.vsin, nx, ny, &mut ss);
        analyze(fx, &self.wtx.vsin, &self.wty.vcos, nx, ny, &mut sc);
        analyze(fy, &self.wtx.vcos, &self.wty.vsin, nx, ny, &mut cs);
        (0..n)
            .map(|k| {
                let (a, b) = (self.a[k / ny], self.b[k % ny]);
                -(a * b * cc[k] + (a * a - b * b) * ss[k]) + (b * sc[k] - a * cs[k])
            })
            .collect()
    }

    /// `Q[v · w_k]` for a nodal vector field.
    pub fn velocity_moments(&self, vx: &[f64], vy: &[f64]) -> Vec<f64> {
        let zeros = vec![0.0; self.n_nodes()];
        self.velocity_weak(&zeros, &zeros, vx, vy)
    }

    /// Solves `G x = rows` in place.
    pub fn gram_solve(&self, rows: &mut [f64]) {
        let mut v = DVector::from_column_slice(rows);
        self.gram_chol.solve_mut(&mut v);
        rows.copy_from_slice(v.as_slice());
    }

    /// Gram projection of a nodal vector field onto the velocity basis.
    pub fn project_velocity(&self, vx: &[f64], vy: &[f64]) -> Result<Vec<f64>> {
        self.check_len("velocity grid", self.n_nodes(), vx.len())?;
        self.check_len("velocity grid", self.n_nodes(), vy.len())?;
        let mut rows = self.velocity_moments(vx, vy);
        self.gram_solve(&mut rows);
        Ok(rows)
    }

    /// Tangential velocity at the edge nodes; the normal component vanishes
    /// identically.
    pub fn boundary_trace(&self, c: &[f64]) -> Result<EdgeTraces> {
        self.check_len("velocity coefficients", self.n_velocity(), c.len())?;
        let (nx, ny) = (self.velocity.nx, self.velocity.ny);
        // Edge sums over the other index: y = 0 / y = ly use Σ_j c_ij b_j (±1)^j.
        let mut xs_bottom = vec![0.0; nx];
        let mut xs_top = vec![0.0; nx];
        let mut ys_left = vec![0.0; ny];
        let mut ys_right = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                let ck = c[i * ny + j];
                let bj = self.b[j] * ck;
                let ai = self.a[i] * ck;
                xs_bottom[i] += bj;
                xs_top[i] += if (j + 1) % 2 == 0 { bj } else { -bj };
                ys_left[j] -= ai;
                ys_right[j] -= if (i + 1) % 2 == 0 { ai } else { -ai };
            }
        }
        let eval = |coef: &[f64], t: &[f64], n: usize| {
            let m = t.len() / n;
            (0..m)
                .map(|p| (0..n).map(|k| coef[k] * t[k * m + p]).sum::<f64>())
                .collect::<Vec<f64>>()
        };
        Ok(EdgeTraces {
            bottom: eval(&xs_bottom, &self.tx.vsin, nx),
            top: eval(&xs_top, &self.tx.vsin, nx),
            left: eval(&ys_left, &self.ty.vsin, ny),
            right: eval(&ys_right, &self.ty.vsin, ny),
        })
    }

    /// Rows `∮ s · w_k` for tangential tractions given at the edge nodes.
    pub fn boundary_rows(&self, s: &EdgeTraces) -> Vec<f64> {
        let (nx, ny) = (self.velocity.nx, self.velocity.ny);
        let moments = |vals: &[f64], wt: &[f64], n: usize| {
            let m = vals.len();
            (0..n)
                .map(|k| (0..m).map(|p| wt[k * m + p] * vals[p]).sum::<f64>())
                .collect::<Vec<f64>>()
        };
        let xb = moments(&s.bottom, &self.wtx.vsin, nx);
        let xt = moments(&s.top, &self.wtx.vsin, nx);
        let yl = moments(&s.left, &self.wty.vsin, ny);
        let yr = moments(&s.right, &self.wty.vsin, ny);
        let mut rows = vec![0.0; self.n_velocity()];
        for i in 0..nx {
            let si = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..ny {
                let sj = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
                rows[i * ny + j] =
                    self.b[j] * (xb[i] + sj * xt[i]) - self.a[i] * (yl[j] + si * yr[j]);
            }
        }
        rows
    }

    /// `∮ f g` over the four edges for edge-node values.
    pub fn boundary_integral(&self, f: &EdgeTraces, g: &EdgeTraces) -> f64 {
        let dot = |a: &[f64], b: &[f64], w: &[f64]| {
            a.iter()
                .zip(b)
                .zip(w)
                .map(|((x, y), w)| w * x * y)
                .sum::<f64>()
        };
        let q = &self.quad;
        dot(&f.bottom, &g.bottom, &q.wx)
            + dot(&f.top, &g.top, &q.wx)
            + dot(&f.left, &g.left, &q.wy)
            + dot(&f.right, &g.right, &q.wy)
    }

    /// Evaluation tables for a uniform `px × py` grid including the edges.
    pub fn sampler(&self, px: usize, py: usize) -> Result<PlotSampler> {
        if px < 2 || py < 2 {
            return Err(Error::Config(format!(
                "plot grid {px}x{py} must be at least 2x2"
            )));
        }
        let xs: Vec<f64> = (0..px)
            .map(|k| self.rect.lx * k as f64 / (px - 1) as f64)
            .collect();
        let ys: Vec<f64> = (0..py)
            .map(|k| self.rect.ly * k as f64 / (py - 1) as f64)
            .collect();
        let tx = Tables::new(self.rect.lx, self.scalar.mx, self.velocity.nx, &xs);
        let ty = Tables::new(self.rect.ly, self.scalar.my, self.velocity.ny, &ys);
        Ok(PlotSampler {
            xs,
            ys,
            tx,
            ty,
            scalar: self.scalar,
            velocity: self.velocity,
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }
}

/// Synthesizes fields on a uniform plot grid (row-major, `x` outer).
#[derive(Debug, Clone)]
pub struct PlotSampler {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    tx: Tables,
    ty: Tables,
    scalar: ScalarBasis,
    velocity: VelocityBasis,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PlotSampler {
    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        let q = self.ys.len();
        (self.xs[k / q], self.ys[k % q])
    }

    pub fn scalar(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        synthesize(
            coef,
            self.scalar.mx,
            self.scalar.my,
            &self.tx.cos,
            &self.ty.cos,
            &mut out,
        );
        out
    }

    pub fn scalar_gradient(&self, coef: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mx, my) = (self.scalar.mx, self.scalar.my);
        let mut gx = vec![0.0; self.len()];
        let mut gy = vec![0.0; self.len()];
        synthesize(coef, mx, my, &self.tx.dcos, &self.ty.cos, &mut gx);
        synthesize(coef, mx, my, &self.tx.cos, &self.ty.dcos, &mut gy);
        (gx, gy)
    }

    pub fn velocity(&self, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (nx, ny) = (self.velocity.nx, self.velocity.ny);
        let scaled = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            c.iter()
                .enumerate()
                .map(|(k, &ck)| ck * f(self.a[k / ny], self.b[k % ny]))
                .collect()
        };
        let mut vx = vec![0.0; self.len()];
        let mut vy = vec![0.0; self.len()];
        synthesize(&scaled(&|_, b| b), nx, ny, &self.tx.vsin, &self.ty.vcos, &mut vx);
        synthesize(&scaled(&|a, _| -a), nx, ny, &self.tx.vcos, &self.ty.vsin, &mut vy);
        (vx, vy)
    }
}
