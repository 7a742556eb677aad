//! Synthetic problem generators with exact metadata.
//!
//! Every generated problem carries the constants the solvers need, computed
//! from the generated data, and a strictly feasible interior point.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::constraints::ConstraintSet;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::objective::{LeastSquares, Objective, PairwiseHinge, Quadratic, SparseVector};
use crate::problem::{gamma_for_known_family, ConstraintFamilyKind, Problem, ProblemMetadata};

/// Ranking weights live in `[-RANKING_BOX, RANKING_BOX]^d`.
pub const RANKING_BOX: f64 = 10.0;
/// Fraction of ranking pairs whose preference is flipped.
pub const RANKING_LABEL_NOISE: f64 = 0.1;
/// Half-width of the ordering-regression domain.
pub const REGRESSION_BOX: f64 = 2.0;
/// Half-width of the box-QP domain; the constraints are `|w_i| <= 1`.
pub const QP_DOMAIN: f64 = 2.0;
/// Noise rows of the box-QP stochastic gradient.
pub const QP_NOISE_ROWS: usize = 8;
pub const QP_NOISE_SD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairStructure {
    /// `w_0 <= w_1 <= ... <= w_{d-1}`.
    Chain,
    /// `d = r²` coordinates on an `r × r` lattice, nondecreasing along
    /// rows and columns: `2r(r-1)` pairs.
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    OrderingRegression {
        d: usize,
        n: usize,
        noise_sd: f64,
    },
    MonotonicRanking {
        d: usize,
        n: usize,
        sparsity: usize,
        pairs: PairStructure,
    },
    BoxQp {
        d: usize,
        condition: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match self.kind {
            GeneratorKind::OrderingRegression { d, n, noise_sd } => {
                if d < 2 {
                    return bad(format!("ordering regression needs d >= 2, got {d}"));
                }
                if n == 0 {
                    return bad("ordering regression needs n >= 1".into());
                }
                if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
                    return bad(format!(
                        "noise_sd must be finite and nonnegative, got {noise_sd}"
                    ));
                }
            }
            GeneratorKind::MonotonicRanking {
                d,
                n,
                sparsity,
                pairs,
            } => {
                if n == 0 {
                    return bad("ranking needs n >= 1".into());
                }
                if d < 2 {
                    return bad(format!("ranking needs d >= 2, got {d}"));
                }
                if sparsity == 0 || sparsity > d {
                    return bad(format!("sparsity must be in 1..={d}, got {sparsity}"));
                }
                if pairs == PairStructure::Grid && grid_side(d).is_none() {
                    return bad(format!("grid pairs need d = r² with r >= 2, got {d}"));
                }
            }
            GeneratorKind::BoxQp { d, condition } => {
                if d == 0 {
                    return bad("box QP needs d >= 1".into());
                }
                if !(condition >= 1.0) || !condition.is_finite() {
                    return bad(format!(
                        "condition must be finite and >= 1, got {condition}"
                    ));
                }
            }
        }
        Ok(())
    }
}

fn grid_side(d: usize) -> Option<usize> {
    let r = (d as f64).sqrt().round() as usize;
    (r >= 2 && r * r == d).then_some(r)
}

/// Monotonicity pairs `(i, j)`, meaning `w_i <= w_j`.
pub fn monotone_pairs(d: usize, structure: PairStructure) -> Result<Vec<(usize, usize)>> {
    match structure {
        PairStructure::Chain => {
            if d < 2 {
                return Err(Error::InvalidArgument("chain needs d >= 2".into()));
            }
            Ok((0..d - 1).map(|i| (i, i + 1)).collect())
        }
        PairStructure::Grid => {
            let r = grid_side(d).ok_or_else(|| {
                Error::InvalidArgument(format!("grid pairs need d = r² with r >= 2, got {d}"))
            })?;
            let mut pairs = Vec::with_capacity(2 * r * (r - 1));
            for a in 0..r {
                for b in 0..r {
                    let i = a * r + b;
                    if b + 1 < r {
                        pairs.push((i, i + 1));
                    }
                    if a + 1 < r {
                        pairs.push((i, i + r));
                    }
                }
            }
            Ok(pairs)
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Problem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GeneratorKind::OrderingRegression { d, n, noise_sd } => {
            ordering_regression(d, n, noise_sd, &mut rng)
        }
        GeneratorKind::MonotonicRanking {
            d,
            n,
            sparsity,
            pairs,
        } => monotonic_ranking(d, n, sparsity, pairs, &mut rng),
        GeneratorKind::BoxQp { d, condition } => box_qp(d, condition, &mut rng),
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn ordering_regression(d: usize, n: usize, noise_sd: f64, rng: &mut ChaCha8Rng) -> Result<Problem> {
    let mut truth: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    truth.sort_by(f64::total_cmp);
    let scale = 1.0 / (d as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let targets: Vec<f64> = rows
        .iter()
        .map(|x| {
            let clean: f64 = x.iter().zip(&truth).map(|(a, b)| a * b).sum();
            clean + noise_sd * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();

    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let gram = x.transpose() * &x / n as f64;
    let eig = gram.symmetric_eigenvalues();
    let lambda = eig.min().max(0.0);
    let lambda_max = eig.max();
    let mut linear = vec![0.0; d];
    for (row, y) in rows.iter().zip(&targets) {
        for (l, v) in linear.iter_mut().zip(row) {
            *l += y * v / n as f64;
        }
    }
    let w_max = REGRESSION_BOX * (d as f64).sqrt();
    let lipschitz_f = lambda_max * w_max + norm(&linear);
    let grad_bound_f = rows
        .iter()
        .zip(&targets)
        .map(|(x, y)| {
            let nx = norm(x);
            nx * (nx * w_max + y.abs())
        })
        .fold(0.0, f64::max);

    let metadata = ProblemMetadata {
        lipschitz_f,
        lipschitz_g: 1.0,
        grad_bound_f,
        grad_bound_g: 1.0,
        lambda,
    };
    let objective = LeastSquares {
        rows,
        targets,
        lambda,
    };
    let interior = (0..d)
        .map(|i| -1.5 + 3.0 * i as f64 / (d - 1) as f64)
        .collect();
    let gamma = gamma_for_known_family(ConstraintFamilyKind::Ordering { d }, lipschitz_f)?;
    Problem::new(
        Arc::new(objective),
        ConstraintSet::ordering_chain(d)?,
        Domain::cube(d, -REGRESSION_BOX, REGRESSION_BOX)?,
        metadata,
    )?
    .with_gamma_estimate(gamma)
    .with_interior_point(interior)
}

fn monotonic_ranking(
    d: usize,
    n: usize,
    sparsity: usize,
    structure: PairStructure,
    rng: &mut ChaCha8Rng,
) -> Result<Problem> {
    let pairs = monotone_pairs(d, structure)?;
    // Planted monotone weights: a linear ramp along the pair structure.
    let (level, levels): (Vec<f64>, f64) = match structure {
        PairStructure::Chain => ((0..d).map(|i| i as f64).collect(), (d - 1) as f64),
        PairStructure::Grid => {
            let r = grid_side(d).expect("validated");
            (
                (0..d).map(|i| (i / r + i % r) as f64).collect(),
                (2 * (r - 1)) as f64,
            )
        }
    };
    let truth: Vec<f64> = level.iter().map(|l| 2.0 * l / levels - 1.0).collect();

    let mut differences = Vec::with_capacity(n);
    for _ in 0..n {
        let mut indices = index::sample(rng, d, sparsity).into_vec();
        indices.sort_unstable();
        let mut values: Vec<f64> = indices
            .iter()
            .map(|_| {
                let magnitude = rng.random_range(0.5..1.0);
                if rng.random_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect();
        let x = SparseVector {
            indices,
            values: values.clone(),
        };
        let mut flip = x.dot(&truth) < 0.0;
        if rng.random_bool(RANKING_LABEL_NOISE) {
            flip = !flip;
        }
        if flip {
            values.iter_mut().for_each(|v| *v = -*v);
        }
        differences.push(SparseVector {
            indices: x.indices,
            values,
        });
    }
    let lipschitz_f = differences
        .iter()
        .map(SparseVector::norm)
        .fold(0.0, f64::max);
    let metadata = ProblemMetadata {
        lipschitz_f,
        lipschitz_g: 1.0,
        grad_bound_f: lipschitz_f,
        grad_bound_g: 1.0,
        lambda: 0.0,
    };
    // Widest strictly increasing ramp that fits the box.
    let interior: Vec<f64> = level
        .iter()
        .map(|l| RANKING_BOX * (2.0 * l / levels - 1.0))
        .collect();
    let problem = Problem::new(
        Arc::new(PairwiseHinge {
            dim: d,
            differences,
        }),
        ConstraintSet::ordering_pairs(d, &pairs)?,
        Domain::cube(d, -RANKING_BOX, RANKING_BOX)?,
        metadata,
    )?;
    let problem = match structure {
        PairStructure::Chain => problem.with_gamma_estimate(gamma_for_known_family(
            ConstraintFamilyKind::Ordering { d },
            lipschitz_f,
        )?),
        PairStructure::Grid => problem,
    };
    problem.with_interior_point(interior)
}

fn box_qp(d: usize, condition: f64, rng: &mut ChaCha8Rng) -> Result<Problem> {
    let curvature: Vec<f64> = (0..d)
        .map(|i| {
            let frac = if d > 1 {
                i as f64 / (d - 1) as f64
            } else {
                0.0
            };
            condition.powf(frac)
        })
        .collect();
    let center: Vec<f64> = (0..d)
        .map(|_| rng.random_range(-QP_DOMAIN..QP_DOMAIN))
        .collect();
    let mut noise: Vec<Vec<f64>> = (0..QP_NOISE_ROWS)
        .map(|_| {
            (0..d)
                .map(|_| QP_NOISE_SD * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    for j in 0..d {
        let mean = noise.iter().map(|row| row[j]).sum::<f64>() / QP_NOISE_ROWS as f64;
        noise.iter_mut().for_each(|row| row[j] -= mean);
    }
    let lipschitz_f = curvature
        .iter()
        .zip(&center)
        .map(|(h, c)| (h * (QP_DOMAIN + c.abs())).powi(2))
        .sum::<f64>()
        .sqrt();
    let noise_bound = noise.iter().map(|row| norm(row)).fold(0.0, f64::max);
    let metadata = ProblemMetadata {
        lipschitz_f,
        lipschitz_g: 1.0,
        grad_bound_f: lipschitz_f + noise_bound,
        grad_bound_g: 1.0,
        lambda: 1.0,
    };
    let objective = Quadratic {
        center,
        curvature,
        noise,
    };
    let gamma = gamma_for_known_family(ConstraintFamilyKind::Box { d }, lipschitz_f)?;
    Problem::new(
        Arc::new(objective) as Arc<dyn Objective>,
        ConstraintSet::box_faces(d, 1.0)?,
        Domain::cube(d, -QP_DOMAIN, QP_DOMAIN)?,
        metadata,
    )?
    .with_gamma_estimate(gamma)
    .with_interior_point(vec![0.0; d])
}
