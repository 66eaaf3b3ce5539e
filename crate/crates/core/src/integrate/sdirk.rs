//! Four-stage, order-4 L-stable SDIRK (γ = 1/4) with an embedded order-3
//! solution, for `y' = A y` with `A` tridiagonal.
//!
//! Each stage solves `(I − hγA) k = A(y + h Σ a_ij k_j)` by the Thomas
//! algorithm without pivoting, which requires `I − hγA` to be diagonally
//! dominant by columns. That holds for any generator of a continuous-time
//! Markov chain (non-negative off-diagonals, zero column sums).

/// Tridiagonal matrix. `lower[i]` is entry `(i, i−1)` and `upper[i]` is entry
/// `(i, i+1)`; `lower[0]` and `upper[n−1]` are ignored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            out[i] = v;
        }
    }
}

const GAMMA: f64 = 0.25;
const STAGES: usize = 5;
const A: [[f64; STAGES]; STAGES] = [
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.25, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
];
const B: [f64; STAGES] = A[STAGES - 1];
const B_HAT: [f64; STAGES] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0];

/// Stepper with scratch buffers sized for one system dimension.
#[derive(Debug, Clone, Default)]
pub struct Sdirk4 {
    k: Vec<Vec<f64>>,
    arg: Vec<f64>,
    rhs: Vec<f64>,
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl Sdirk4 {
    pub fn new(n: usize) -> Self {
        let mut s = Self::default();
        s.resize(n);
        s
    }

    pub fn resize(&mut self, n: usize) {
        self.k.resize(STAGES, Vec::new());
        for k in &mut self.k {
            k.resize(n, 0.0);
        }
        self.arg.resize(n, 0.0);
        self.rhs.resize(n, 0.0);
        self.c_prime.resize(n, 0.0);
        self.inv_denom.resize(n, 0.0);
    }

    /// One step of size `h`. Writes the order-4 solution to `y_out` and the
    /// difference to the embedded order-3 solution to `err_out`.
    pub fn step(&mut self, a: &Tridiagonal, y: &[f64], h: f64, y_out: &mut [f64], err_out: &mut [f64]) {
        let n = a.len();
        if self.arg.len() != n {
            self.resize(n);
        }
        self.factor(a, h * GAMMA);
        for s in 0..STAGES {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * self.k[j][i];
                }
                self.arg[i] = y[i] + h * acc;
            }
            a.apply(&self.arg, &mut self.rhs);
            self.solve(a, h * GAMMA, s);
        }
        for i in 0..n {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..STAGES {
                hi += B[s] * self.k[s][i];
                lo += B_HAT[s] * self.k[s][i];
            }
            y_out[i] = y[i] + h * hi;
            err_out[i] = h * (hi - lo);
        }
    }

    fn factor(&mut self, a: &Tridiagonal, c: f64) {
        let n = a.len();
        for i in 0..n {
            let sub = if i > 0 { -c * a.lower[i] } else { 0.0 };
            let prev = if i > 0 { sub * self.c_prime[i - 1] } else { 0.0 };
            let denom = 1.0 - c * a.diag[i] - prev;
            self.inv_denom[i] = 1.0 / denom;
            self.c_prime[i] = if i + 1 < n { -c * a.upper[i] * self.inv_denom[i] } else { 0.0 };
        }
    }

    fn solve(&mut self, a: &Tridiagonal, c: f64, stage: usize) {
        let n = a.len();
        let x = &mut self.k[stage];
        for i in 0..n {
            let sub = if i > 0 { -c * a.lower[i] } else { 0.0 };
            let prev = if i > 0 { x[i - 1] } else { 0.0 };
            x[i] = (self.rhs[i] - sub * prev) * self.inv_denom[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
    }
}
