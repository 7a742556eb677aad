//! Stochastic objective oracles.

use std::fmt::Debug;

use rand::{Rng, RngCore};

use crate::constraints::dot;

/// A convex objective `f` exposed through an unbiased stochastic subgradient.
pub trait Objective: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// Overwrites `out` with a stochastic subgradient `ĝ` at `w`, `E[ĝ] ∈ ∂f(w)`.
    fn sample_subgradient(&self, w: &[f64], rng: &mut dyn RngCore, out: &mut [f64]);

    /// Overwrites `out` with a deterministic subgradient of `f` at `w`.
    fn full_subgradient(&self, w: &[f64], out: &mut [f64]);

    /// Exact objective value. Only used for traces and tests.
    fn value(&self, w: &[f64]) -> f64;

    /// Strong convexity modulus `λ` (0 if merely convex).
    fn strong_convexity(&self) -> f64 {
        0.0
    }

    /// Nominal cost of drawing one stochastic subgradient, in abstract units.
    fn sample_cost(&self) -> f64 {
        self.dim() as f64
    }
}

/// `f(w) = <c, w>`, with an exact (noise-free) gradient.
#[derive(Debug, Clone)]
pub struct Linear {
    pub coefficients: Vec<f64>,
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }

    fn sample_subgradient(&self, w: &[f64], _rng: &mut dyn RngCore, out: &mut [f64]) {
        self.full_subgradient(w, out);
    }

    fn full_subgradient(&self, _w: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.coefficients);
    }

    fn value(&self, w: &[f64]) -> f64 {
        dot(&self.coefficients, w)
    }
}

/// Separable quadratic `f(w) = Σ_i ½ h_i (w_i - c_i)²` plus a zero-mean
/// linear perturbation: the stochastic gradient adds one uniformly chosen
/// row of `noise`, whose rows sum to zero.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub curvature: Vec<f64>,
    pub noise: Vec<Vec<f64>>,
}

impl Quadratic {
    pub fn isotropic(center: Vec<f64>, curvature: f64) -> Self {
        let d = center.len();
        Self {
            center,
            curvature: vec![curvature; d],
            noise: Vec::new(),
        }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn sample_subgradient(&self, w: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) {
        self.full_subgradient(w, out);
        if !self.noise.is_empty() {
            let row = &self.noise[rng.random_range(0..self.noise.len())];
            for (o, e) in out.iter_mut().zip(row) {
                *o += e;
            }
        }
    }

    fn full_subgradient(&self, w: &[f64], out: &mut [f64]) {
        for (((o, x), c), h) in out.iter_mut().zip(w).zip(&self.center).zip(&self.curvature) {
            *o = h * (x - c);
        }
    }

    fn value(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(&self.center)
            .zip(&self.curvature)
            .map(|((x, c), h)| 0.5 * h * (x - c) * (x - c))
            .sum()
    }

    fn strong_convexity(&self) -> f64 {
        self.curvature.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `f(w) = (1/n) Σ_j ½ (<x_j, w> - y_j)²`; one example per sample.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Smallest eigenvalue of the empirical Gram matrix.
    pub lambda: f64,
}

impl Objective for LeastSquares {
    fn dim(&self) -> usize {
        self.rows[0].len()
    }

    fn sample_subgradient(&self, w: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) {
        let j = rng.random_range(0..self.rows.len());
        let row = &self.rows[j];
        let r = dot(row, w) - self.targets[j];
        for (o, x) in out.iter_mut().zip(row) {
            *o = r * x;
        }
    }

    fn full_subgradient(&self, w: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let inv_n = 1.0 / self.rows.len() as f64;
        for (row, y) in self.rows.iter().zip(&self.targets) {
            let r = (dot(row, w) - y) * inv_n;
            for (o, x) in out.iter_mut().zip(row) {
                *o += r * x;
            }
        }
    }

    fn value(&self, w: &[f64]) -> f64 {
        let sum: f64 = self
            .rows
            .iter()
            .zip(&self.targets)
            .map(|(row, y)| {
                let r = dot(row, w) - y;
                0.5 * r * r
            })
            .sum();
        sum / self.rows.len() as f64
    }

    fn strong_convexity(&self) -> f64 {
        self.lambda
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, v)| v * w[i])
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Average pairwise hinge loss `(1/n) Σ_j max(0, 1 - <w, x_j>)` where each
/// `x_j = Φ(x⁺) - Φ(x⁻)` is sparse.
#[derive(Debug, Clone)]
pub struct PairwiseHinge {
    pub dim: usize,
    pub differences: Vec<SparseVector>,
}

impl PairwiseHinge {
    fn add_example_subgradient(&self, x: &SparseVector, w: &[f64], scale: f64, out: &mut [f64]) {
        if 1.0 - x.dot(w) > 0.0 {
            for (&i, v) in x.indices.iter().zip(&x.values) {
                out[i] -= scale * v;
            }
        }
    }
}

impl Objective for PairwiseHinge {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_subgradient(&self, w: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) {
        out.fill(0.0);
        let x = &self.differences[rng.random_range(0..self.differences.len())];
        self.add_example_subgradient(x, w, 1.0, out);
    }

    fn full_subgradient(&self, w: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let inv_n = 1.0 / self.differences.len() as f64;
        for x in &self.differences {
            self.add_example_subgradient(x, w, inv_n, out);
        }
    }

    fn value(&self, w: &[f64]) -> f64 {
        let sum: f64 = self
            .differences
            .iter()
            .map(|x| (1.0 - x.dot(w)).max(0.0))
            .sum();
        sum / self.differences.len() as f64
    }

    fn sample_cost(&self) -> f64 {
        let nnz: usize = self.differences.iter().map(|x| x.indices.len()).sum();
        (nnz as f64 / self.differences.len() as f64).max(1.0)
    }
}
