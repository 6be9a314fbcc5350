use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// The domain `[0, lx] × [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub lx: f64,
    pub ly: f64,
}

impl Rectangle {
    pub fn new(lx: f64, ly: f64) -> Result<Self> {
        let r = Self { lx, ly };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lx", self.lx), ("ly", self.ly)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(param(name, v, "side length must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }
}

/// Cosine modes `cos(iπx/lx) cos(jπy/ly)`, `0 ≤ i < mx`, `0 ≤ j < my`,
/// indexed `i * my + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarBasis {
    pub mx: usize,
    pub my: usize,
}

impl ScalarBasis {
    pub fn len(&self) -> usize {
        self.mx * self.my
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.my + j
    }

    /// `‖u_ij‖²` on the rectangle.
    pub fn mass(&self, rect: &Rectangle, i: usize, j: usize) -> f64 {
        let fx = if i == 0 { rect.lx } else { 0.5 * rect.lx };
        let fy = if j == 0 { rect.ly } else { 0.5 * rect.ly };
        fx * fy
    }

    pub fn eval(&self, rect: &Rectangle, i: usize, j: usize, x: f64, y: f64) -> f64 {
        (i as f64 * PI * x / rect.lx).cos() * (j as f64 * PI * y / rect.ly).cos()
    }
}

/// Divergence-free modes `w_ij = (∂yφ_ij, -∂xφ_ij)` built from the
/// streamfunctions `φ_ij = sin(iπx/lx) sin(jπy/ly)`, `1 ≤ i ≤ nx`,
/// `1 ≤ j ≤ ny`, indexed `(i - 1) * ny + (j - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VelocityBasis {
    pub nx: usize,
    pub ny: usize,
}

impl VelocityBasis {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of mode `(i, j)` with 1-based wave numbers.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.ny + (j - 1)
    }

    pub fn eval(&self, rect: &Rectangle, i: usize, j: usize, x: f64, y: f64) -> [f64; 2] {
        let a = i as f64 * PI / rect.lx;
        let b = j as f64 * PI / rect.ly;
        [
            b * (a * x).sin() * (b * y).cos(),
            -a * (a * x).cos() * (b * y).sin(),
        ]
    }
}
