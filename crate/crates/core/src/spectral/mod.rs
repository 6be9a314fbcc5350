//! Rectangle domain, divergence-free velocity and Neumann scalar bases,
//! tensor quadrature and the transforms between coefficients and nodes.

mod basis;
mod discretization;
pub mod kernels;
pub mod quadrature;

pub use basis::{Rectangle, ScalarBasis, VelocityBasis};
pub use discretization::{
    default_nodes, min_nodes, Discretization, EdgeTraces, PlotSampler, VelocityGrid,
};
pub use quadrature::{GaussLegendre, TensorQuadrature};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use std::f64::consts::PI;

    fn disc(mx: usize, nx: usize) -> Discretization {
        Discretization::new(
            Rectangle::new(1.0, 1.5).unwrap(),
            ScalarBasis { mx, my: mx + 1 },
            VelocityBasis { nx, ny: nx + 2 },
            None,
        )
        .unwrap()
    }

    fn pseudo_random(n: usize, seed: f64) -> Vec<f64> {
        (0..n).map(|k| ((k as f64 + 1.0) * seed).sin()).collect()
    }

    #[test]
    fn constant_mode_synthesizes_constant() {
        let d = disc(5, 4);
        let mut c = vec![0.0; d.n_scalar()];
        c[0] = 2.5;
        let v = d.scalar_values(&c).unwrap();
        assert!(v.iter().all(|&x| (x - 2.5).abs() < 1e-15));
        let p = d.project_scalar(&vec![1.0; d.n_nodes()]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-14);
        assert!(p[1..].iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn projection_round_trips() {
        let d = disc(9, 7);
        let c = pseudo_random(d.n_scalar(), 0.713);
        let back = d.project_scalar(&d.scalar_values(&c).unwrap()).unwrap();
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let cv = pseudo_random(d.n_velocity(), 1.37);
        let g = d.velocity_fields(&cv).unwrap();
        let back = d.project_velocity(&g.vx, &g.vy).unwrap();
        for (a, b) in cv.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut unit = vec![0.0; d.n_scalar()];
        unit[7] = 1.0;
        let back = d.project_scalar(&d.scalar_values(&unit).unwrap()).unwrap();
        for (k, v) in back.iter().enumerate() {
            assert!((v - if k == 7 { 1.0 } else { 0.0 }).abs() < 1e-13);
        }
    }

    #[test]
    fn velocity_is_divergence_free_and_derivatives_match_basis() {
        let d = disc(4, 6);
        let c = pseudo_random(d.n_velocity(), 0.917);
        let g = d.velocity_fields(&c).unwrap();
        let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let basis = d.velocity_basis();
        let rect = *d.rect();
        for k in (0..d.n_nodes()).step_by(37) {
            let (x, y) = d.node(k);
            // div v = dxvx + dyvy, with dyvy computed independently by differences
            let h = 1e-6;
            let field = |x: f64, y: f64| {
                let mut v = [0.0; 2];
                for i in 1..=basis.nx {
                    for j in 1..=basis.ny {
                        let w = basis.eval(&rect, i, j, x, y);
                        let ck = c[basis.index(i, j)];
                        v[0] += ck * w[0];
                        v[1] += ck * w[1];
                    }
                }
                v
            };
            let v = field(x, y);
            assert!((v[0] - g.vx[k]).abs() < 1e-12 && (v[1] - g.vy[k]).abs() < 1e-12);
            let dx = |f: usize| (field(x + h, y)[f] - field(x - h, y)[f]) / (2.0 * h);
            let dy = |f: usize| (field(x, y + h)[f] - field(x, y - h)[f]) / (2.0 * h);
            let scale = 1e-6 * norm * 100.0;
            assert!((dx(0) - g.dxvx[k]).abs() < scale);
            assert!((dy(0) - g.dyvx[k]).abs() < scale);
            assert!((dx(1) - g.dxvy[k]).abs() < scale);
            assert!((dy(1) + g.dxvx[k]).abs() < scale);
            assert!((dx(0) + dy(1)).abs() < scale);
        }
    }

    #[test]
    fn gram_matches_analytic_diagonal() {
        let d = disc(3, 5);
        let (rect, basis) = (*d.rect(), *d.velocity_basis());
        for i in 1..=basis.nx {
            for j in 1..=basis.ny {
                let a = i as f64 * PI / rect.lx;
                let b = j as f64 * PI / rect.ly;
                let k = basis.index(i, j);
                let exact = (a * a + b * b) * rect.area() / 4.0;
                assert!((d.gram()[(k, k)] - exact).abs() < 1e-11 * exact);
            }
        }
        let off: f64 = (0..d.n_velocity())
            .flat_map(|r| (0..d.n_velocity()).filter(move |&s| s != r).map(move |s| (r, s)))
            .map(|(r, s)| d.gram()[(r, s)].abs())
            .fold(0.0, f64::max);
        assert!(off < 1e-10);
    }

    #[test]
    fn boundary_trace_of_first_mode() {
        let d = disc(3, 3);
        let mut c = vec![0.0; d.n_velocity()];
        c[0] = 1.0;
        let t = d.boundary_trace(&c).unwrap();
        let q = d.quadrature();
        let (lx, ly) = (d.rect().lx, d.rect().ly);
        for (p, &x) in q.x.iter().enumerate() {
            let expected = PI / ly * (PI * x / lx).sin();
            assert!((t.bottom[p] - expected).abs() < 1e-13);
            assert!((t.top[p] + expected).abs() < 1e-13);
        }
        let zero = d.boundary_trace(&vec![0.0; d.n_velocity()]).unwrap();
        assert!(zero.bottom.iter().chain(&zero.left).all(|&v| v == 0.0));
        // normal component: v_y on y = 0 vanishes identically
        let basis = d.velocity_basis();
        let w = basis.eval(d.rect(), 2, 3, 0.3, 0.0);
        assert!(w[1].abs() < 1e-15);
    }

    #[test]
    fn boundary_rows_pair_with_trace() {
        // Σ_k c_k ∮ s·w_k = ∮ s·v
        let d = disc(3, 4);
        let c = pseudo_random(d.n_velocity(), 0.51);
        let t = d.boundary_trace(&c).unwrap();
        let s = EdgeTraces {
            bottom: t.bottom.iter().map(|v| v * 0.5 + 1.0).collect(),
            top: t.top.iter().map(|v| v * v).collect(),
            left: t.left.iter().map(|v| v.sin()).collect(),
            right: t.right.clone(),
        };
        let rows = d.boundary_rows(&s);
        let lhs: f64 = rows.iter().zip(&c).map(|(r, c)| r * c).sum();
        assert!((lhs - d.boundary_integral(&s, &t)).abs() < 1e-11);
    }

    #[test]
    fn neumann_compatible_on_edges() {
        let d = disc(6, 3);
        let c = pseudo_random(d.n_scalar(), 0.33);
        let s = d.sampler(9, 11).unwrap();
        let (gx, gy) = s.scalar_gradient(&c);
        let ny = s.ys.len();
        for q in 0..ny {
            assert!(gx[q].abs() < 1e-12);
            assert!(gx[(s.xs.len() - 1) * ny + q].abs() < 1e-12);
        }
        for p in 0..s.xs.len() {
            assert!(gy[p * ny].abs() < 1e-12);
            assert!(gy[p * ny + ny - 1].abs() < 1e-12);
        }
    }

    #[test]
    fn sampler_agrees_with_nodes() {
        let d = disc(4, 4);
        let c = pseudo_random(d.n_scalar(), 0.2);
        let s = d.sampler(5, 4).unwrap();
        let v = s.scalar(&c);
        let (x, y) = s.point(7);
        let basis = d.scalar_basis();
        let mut expected = 0.0;
        for i in 0..basis.mx {
            for j in 0..basis.my {
                expected += c[basis.index(i, j)] * basis.eval(d.rect(), i, j, x, y);
            }
        }
        assert!((v[7] - expected).abs() < 1e-13);
    }

    #[test]
    fn resolution_guard() {
        let r = Discretization::new(
            Rectangle::new(1.0, 1.0).unwrap(),
            ScalarBasis { mx: 8, my: 8 },
            VelocityBasis { nx: 4, ny: 4 },
            Some((15, 40)),
        );
        assert!(matches!(r, Err(Error::Resolution(_))));
        let wrong = disc(3, 3).scalar_values(&[1.0; 3]);
        assert!(matches!(wrong, Err(Error::Dimension { .. })));
    }
}
