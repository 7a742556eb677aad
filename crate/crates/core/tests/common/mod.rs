#![allow(dead_code)]

use std::sync::Arc;

use heavytouch::objective::{Linear, Quadratic};
use heavytouch::solvers::{
    recommended_eta_full, recommended_eta_light, recommended_eta_p_mid, schedule_from_tau,
};
use heavytouch::{
    generate, Algorithm, Constraint, ConstraintSet, Domain, GammaEstimate, GammaProvenance,
    GeneratorKind, GeneratorSpec, PairStructure, Problem, ProblemMetadata, SolverConfig,
    StepSchedule,
};

/// `min w` over `[-1, 1]` subject to `-w <= 0`; the optimum is `w = 0`.
pub fn linear_1d() -> Problem {
    let metadata = ProblemMetadata {
        lipschitz_f: 1.0,
        lipschitz_g: 1.0,
        grad_bound_f: 1.0,
        grad_bound_g: 1.0,
        lambda: 0.0,
    };
    Problem::new(
        Arc::new(Linear {
            coefficients: vec![1.0],
        }),
        ConstraintSet::new(
            1,
            vec![Constraint::LinearRow {
                a: vec![-1.0],
                b: 0.0,
            }],
        )
        .unwrap(),
        Domain::cube(1, -1.0, 1.0).unwrap(),
        metadata,
    )
    .unwrap()
    .with_gamma_estimate(GammaEstimate::from_rho(
        1.0,
        1.0,
        GammaProvenance::UserSupplied,
    ))
}

/// `min (w - 1)²` over `[-2, 2]` subject to `w <= 0`, with zero-mean gradient
/// noise; the optimum is `w = 0`.
pub fn quadratic_1d() -> Problem {
    let objective = Quadratic {
        center: vec![1.0],
        curvature: vec![2.0],
        noise: vec![vec![0.5], vec![-0.5]],
    };
    let metadata = ProblemMetadata {
        lipschitz_f: 6.0,
        lipschitz_g: 1.0,
        grad_bound_f: 6.5,
        grad_bound_g: 1.0,
        lambda: 2.0,
    };
    Problem::new(
        Arc::new(objective),
        ConstraintSet::new(
            1,
            vec![Constraint::LinearRow {
                a: vec![1.0],
                b: 0.0,
            }],
        )
        .unwrap(),
        Domain::cube(1, -2.0, 2.0).unwrap(),
        metadata,
    )
    .unwrap()
    .with_gamma_estimate(GammaEstimate::from_rho(
        1.0,
        6.0,
        GammaProvenance::UserSupplied,
    ))
}

pub fn full_config(problem: &Problem, iterations: usize, gamma: f64) -> SolverConfig {
    let eta = recommended_eta_full(&problem.metadata, &problem.domain, iterations, gamma).unwrap();
    SolverConfig::new(Algorithm::Full, iterations, gamma, eta)
}

pub fn light_config(problem: &Problem, iterations: usize, gamma: f64) -> SolverConfig {
    let m = problem.constraints.len();
    let eta =
        recommended_eta_light(&problem.metadata, &problem.domain, m, iterations, gamma).unwrap();
    SolverConfig::new(Algorithm::Light, iterations, gamma, eta)
}

pub fn mid_config(problem: &Problem, tau: f64, gamma: f64) -> SolverConfig {
    let m = problem.constraints.len();
    let mut c = SolverConfig::new(Algorithm::Mid, 0, gamma, 0.0);
    c.phases = schedule_from_tau(tau, m).unwrap();
    c.eta_p = recommended_eta_p_mid(&problem.metadata, gamma).unwrap();
    c.trace_every = c.total_iterations();
    c
}

/// Config for `algorithm` with the analysis step sizes and the problem's
/// default penalty.
pub fn recommended_config(
    problem: &Problem,
    algorithm: Algorithm,
    iterations: usize,
) -> SolverConfig {
    let gamma = problem.default_gamma().unwrap();
    let mut c = match algorithm {
        Algorithm::Light => light_config(problem, iterations, gamma),
        Algorithm::Mid => {
            let mut c = mid_config(problem, 1.0, gamma);
            c.phases = (iterations / 2, iterations - iterations / 2);
            c
        }
        _ => full_config(problem, iterations, gamma),
    };
    c.algorithm = algorithm;
    if algorithm == Algorithm::Practical {
        c.eta_w *= (iterations as f64).sqrt();
        c.schedule = StepSchedule::InvSqrt;
        c.eta_p = c.eta_w;
    }
    if algorithm == Algorithm::Light && c.k == 0 {
        c.k = problem.constraints.len().min(4);
    }
    c.trace_every = (iterations / 10).max(1);
    c
}

pub fn small_generators() -> Vec<GeneratorSpec> {
    vec![
        GeneratorSpec::new(
            GeneratorKind::OrderingRegression {
                d: 6,
                n: 60,
                noise_sd: 0.1,
            },
            11,
        ),
        GeneratorSpec::new(
            GeneratorKind::MonotonicRanking {
                d: 16,
                n: 200,
                sparsity: 4,
                pairs: PairStructure::Grid,
            },
            12,
        ),
        GeneratorSpec::new(
            GeneratorKind::MonotonicRanking {
                d: 8,
                n: 100,
                sparsity: 3,
                pairs: PairStructure::Chain,
            },
            13,
        ),
        GeneratorSpec::new(
            GeneratorKind::BoxQp {
                d: 5,
                condition: 10.0,
            },
            14,
        ),
    ]
}

pub fn small_problems() -> Vec<Problem> {
    small_generators()
        .iter()
        .map(|s| generate(s).unwrap())
        .collect()
}

pub fn ranking_64(seed: u64) -> Problem {
    generate(&GeneratorSpec::new(
        GeneratorKind::MonotonicRanking {
            d: 64,
            n: 5000,
            sparsity: 8,
            pairs: PairStructure::Grid,
        },
        seed,
    ))
    .unwrap()
}
