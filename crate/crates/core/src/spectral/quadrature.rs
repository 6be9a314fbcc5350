//! Gauss–Legendre rules and their tensor products on a rectangle.

/// `n`-point Gauss–Legendre rule on `[-1, 1]`, exact for polynomials of
/// degree `2n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

impl GaussLegendre {
    /// Nodes in increasing order; the rule is exactly symmetric.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        if n == 1 {
            return Self {
                nodes: vec![0.0],
                weights: vec![2.0],
            };
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // k-th largest root
            nodes[n - 1 - k] = x;
            nodes[k] = -x;
            weights[n - 1 - k] = w;
            weights[k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        (
            self.nodes.iter().map(|x| mid + half * x).collect(),
            self.weights.iter().map(|w| half * w).collect(),
        )
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

/// Tensor Gauss–Legendre rule on `[0, lx] × [0, ly]`. The 1D factors double
/// as the edge rules: `x`/`wx` on the bottom and top edges, `y`/`wy` on the
/// left and right edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorQuadrature {
    pub x: Vec<f64>,
    pub wx: Vec<f64>,
    pub y: Vec<f64>,
    pub wy: Vec<f64>,
}

impl TensorQuadrature {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        let (x, wx) = GaussLegendre::new(nx).mapped(0.0, lx);
        let (y, wy) = GaussLegendre::new(ny).mapped(0.0, ly);
        Self { x, wx, y, wy }
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight of node `(p, q)`, stored row-major as `p * ny + q`.
    #[inline]
    pub fn weight(&self, p: usize, q: usize) -> f64 {
        self.wx[p] * self.wy[q]
    }

    /// `Σ w_pq f_pq` in fixed row-major order.
    pub fn integrate_grid(&self, values: &[f64]) -> f64 {
        let ny = self.ny();
        let mut total = 0.0;
        for (p, wx) in self.wx.iter().enumerate() {
            let row = &values[p * ny..(p + 1) * ny];
            let mut acc = 0.0;
            for (v, wy) in row.iter().zip(&self.wy) {
                acc += wy * v;
            }
            total += wx * acc;
        }
        total
    }
}
