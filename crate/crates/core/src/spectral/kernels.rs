//! Sum-factorized transforms between separable mode coefficients and tensor
//! grids.
//!
//! Coefficients are `n1 × n2` row-major, grids are `P × Q` row-major, and a
//! 1D table `t` of `n` modes on `m` points is stored as `t[k * m + p]`.
//! Parallel work is split over output rows only; every output entry is a
//! sequential sum in a fixed index order, so results do not depend on the
//! number of worker threads.

use rayon::prelude::*;

/// Rows per parallel task; small grids stay on the calling thread.
const MIN_ROWS: usize = 8;

/// `out[p, q] = Σ_i Σ_j coef[i, j] tx[i, p] ty[j, q]`.
pub fn synthesize(
    coef: &[f64],
    n1: usize,
    n2: usize,
    tx: &[f64],
    ty: &[f64],
    out: &mut [f64],
) {
    let p_len = tx.len() / n1.max(1);
    let q_len = ty.len() / n2.max(1);
    debug_assert_eq!(coef.len(), n1 * n2);
    debug_assert_eq!(out.len(), p_len * q_len);
    // tmp[i, q] = Σ_j coef[i, j] ty[j, q]
    let mut tmp = vec![0.0; n1 * q_len];
    tmp.par_chunks_mut(q_len.max(1))
        .with_min_len(MIN_ROWS)
        .enumerate()
        .for_each(|(i, row)| {
            for j in 0..n2 {
                let c = coef[i * n2 + j];
                if c == 0.0 {
                    continue;
                }
                let t = &ty[j * q_len..(j + 1) * q_len];
                for (r, tv) in row.iter_mut().zip(t) {
                    *r += c * tv;
                }
            }
        });
    out.par_chunks_mut(q_len.max(1))
        .with_min_len(MIN_ROWS)
        .enumerate()
        .for_each(|(p, row)| {
            row.fill(0.0);
            for i in 0..n1 {
                let a = tx[i * p_len + p];
                let t = &tmp[i * q_len..(i + 1) * q_len];
                for (r, tv) in row.iter_mut().zip(t) {
                    *r += a * tv;
                }
            }
        });
}

/// `out[i, j] = Σ_p Σ_q tx[i, p] ty[j, q] grid[p, q]`. Quadrature weights
/// are expected to be folded into the tables.
pub fn analyze(
    grid: &[f64],
    tx: &[f64],
    ty: &[f64],
    n1: usize,
    n2: usize,
    out: &mut [f64],
) {
    let p_len = tx.len() / n1.max(1);
    let q_len = ty.len() / n2.max(1);
    debug_assert_eq!(grid.len(), p_len * q_len);
    debug_assert_eq!(out.len(), n1 * n2);
    // tmp[i, q] = Σ_p tx[i, p] grid[p, q]
    let mut tmp = vec![0.0; n1 * q_len];
    tmp.par_chunks_mut(q_len.max(1))
        .with_min_len(1)
        .enumerate()
        .for_each(|(i, row)| {
            let t = &tx[i * p_len..(i + 1) * p_len];
            for (p, a) in t.iter().enumerate() {
                let g = &grid[p * q_len..(p + 1) * q_len];
                for (r, gv) in row.iter_mut().zip(g) {
                    *r += a * gv;
                }
            }
        });
    out.par_chunks_mut(n2.max(1))
        .with_min_len(1)
        .enumerate()
        .for_each(|(i, row)| {
            let u = &tmp[i * q_len..(i + 1) * q_len];
            for (j, r) in row.iter_mut().enumerate() {
                let t = &ty[j * q_len..(j + 1) * q_len];
                let mut acc = 0.0;
                for (a, b) in t.iter().zip(u) {
                    acc += a * b;
                }
                *r = acc;
            }
        });
}

/// Evaluates `n` modes on `m` points: `table[k * m + p] = f(k, x[p])`.
pub fn table<F: Fn(usize, f64) -> f64>(n: usize, x: &[f64], f: F) -> Vec<f64> {
    let mut t = Vec::with_capacity(n * x.len());
    for k in 0..n {
        t.extend(x.iter().map(|&xp| f(k, xp)));
    }
    t
}

/// Multiplies every row of a table pointwise by `w`.
pub fn weighted(table: &[f64], w: &[f64]) -> Vec<f64> {
    table
        .chunks(w.len())
        .flat_map(|row| row.iter().zip(w).map(|(a, b)| a * b))
        .collect()
}
