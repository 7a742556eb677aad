use std::time::Instant;

use crate::autotune::{allocate, warmup_sizes, EstimatorState, WARMUP_ITERATIONS};
use crate::distribution::{
    centered_supergradient, multiplicative_update, sample_constraint, sample_without_replacement,
    SamplingState,
};
use crate::error::Result;
use crate::problem::Problem;

use super::{Algorithm, Family, Run, SolverConfig, SolverResult, SolverRng, Timing};

/// LightTouch with a decreasing `w` step, minibatches `(k_f, k_g, k_p)`
/// sized online from variance and cost estimates, and optional constraint
/// aggregation.
pub fn solve_practical(
    problem: &Problem,
    config: &SolverConfig,
    rng: &mut SolverRng,
) -> Result<SolverResult> {
    let mut run = Run::new(problem, config)?;
    let family = Family::new(problem, config)?;
    let family = family.get();
    let m = family.count();
    let d = problem.dim();
    let gamma = config.gamma;
    let sample_cost = problem.objective.sample_cost();
    let t_max = config.iterations;

    let mut state = SamplingState::new(family, &run.w, &mut run.counter);
    let mut estimator = EstimatorState::new(config.decay)?;
    let mut f_samples: Vec<Vec<f64>> = Vec::new();
    let mut g_samples: Vec<Vec<f64>> = Vec::new();
    let mut diffs = Vec::new();
    let mut previous = run.w.clone();

    for t in 1..=t_max {
        run.accumulate();
        previous.copy_from_slice(&run.w);
        let eta = config.schedule.step(config.eta_w, t);
        let sizes = if t <= WARMUP_ITERATIONS {
            warmup_sizes(m)
        } else {
            allocate(&estimator.estimates(), eta, config.eta_p, m)?
        };
        grow(&mut f_samples, sizes.k_f, d);
        grow(&mut g_samples, sizes.k_g, d);

        run.grad.fill(0.0);
        let started = Instant::now();
        for sample in &mut f_samples[..sizes.k_f] {
            problem.objective.sample_subgradient(&run.w, rng, sample);
            for (g, s) in run.grad.iter_mut().zip(sample.iter()) {
                *g += s / sizes.k_f as f64;
            }
        }
        let cost_f = match config.timing {
            Timing::Modeled => sample_cost * sizes.k_f as f64,
            Timing::Wall => started.elapsed().as_nanos() as f64,
        };
        run.objective_samples += sizes.k_f as u64;
        run.charge(sample_cost * sizes.k_f as f64);

        let started = Instant::now();
        let checks_before = run.counter.total();
        for sample in &mut g_samples[..sizes.k_g] {
            sample.fill(0.0);
            let i = sample_constraint(&state, rng);
            let (value, active) = family.check(i, &run.w, &mut run.counter);
            if value > 0.0 {
                family.add_gradient(active, gamma, sample);
                for (g, s) in run.grad.iter_mut().zip(sample.iter()) {
                    *g += s / sizes.k_g as f64;
                }
            }
        }
        let cost_g = match config.timing {
            Timing::Modeled => (run.counter.total() - checks_before) as f64,
            Timing::Wall => started.elapsed().as_nanos() as f64,
        };
        run.step(eta, t)?;

        let started = Instant::now();
        let checks_before = run.counter.total();
        let subset = sample_without_replacement(m, sizes.k_p, rng)?;
        let descriptor = centered_supergradient(
            &mut state,
            family,
            &previous,
            &subset,
            gamma,
            t as u64,
            &mut run.counter,
        );
        let cost_p = match config.timing {
            Timing::Modeled => (run.counter.total() - checks_before) as f64,
            Timing::Wall => started.elapsed().as_nanos() as f64,
        };
        multiplicative_update(&mut state, &descriptor, config.eta_p)?;
        run.charge(m as f64);

        diffs.clear();
        diffs.extend(
            descriptor
                .corrections
                .iter()
                .map(|c| c.previous - state.memory()[c.index]),
        );
        estimator.observe_f(&f_samples[..sizes.k_f], cost_f)?;
        estimator.observe_g(&g_samples[..sizes.k_g], cost_g)?;
        estimator.observe_p(&diffs, gamma, m, cost_p)?;

        run.maybe_trace(t, t_max, sizes, state.entropy())?;
    }
    run.max_staleness = state.max_staleness_seen();
    run.finish(Algorithm::Practical)
}

fn grow(buffers: &mut Vec<Vec<f64>>, n: usize, d: usize) {
    while buffers.len() < n {
        buffers.push(vec![0.0; d]);
    }
}
