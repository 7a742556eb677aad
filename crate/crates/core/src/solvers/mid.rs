use crate::autotune::MinibatchSizes;
use crate::distribution::{
    centered_supergradient, multiplicative_update, sample_constraint, sample_without_replacement,
    SamplingState,
};
use crate::error::{Error, Result};
use crate::problem::Problem;

use super::{Algorithm, Family, Run, SolverConfig, SolverResult, SolverRng, StepSchedule};

/// Two phases with step `1/(λt)`: `T1` FullTouch iterations, then `T2`
/// iterations from their average that check one sampled constraint for the
/// `w` step and one uniformly drawn constraint for the distribution update.
/// Only phase-2 iterates are averaged.
pub fn solve_mid(
    problem: &Problem,
    config: &SolverConfig,
    rng: &mut SolverRng,
) -> Result<SolverResult> {
    let lambda = problem.metadata.lambda;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "MidTouch needs lambda > 0, got {lambda}"
        )));
    }
    let schedule = StepSchedule::InvT { lambda };
    let mut run = Run::new(problem, config)?;
    let family = Family::new(problem, config)?;
    let family = family.get();
    let m = family.count();
    let (t1, t2) = config.phases;
    let t_max = t1 + t2;

    let full_sizes = MinibatchSizes {
        k_f: 1,
        k_g: m,
        k_p: 0,
    };
    for t in 1..=t1 {
        run.accumulate();
        run.sample_objective(rng);
        run.add_max_penalty(family, config.gamma)?;
        run.step(schedule.step(0.0, t), t)?;
        run.maybe_trace(t, t_max, full_sizes, 0.0)?;
    }

    run.w = run.average();
    problem.domain.project_in_place(&mut run.w);
    run.reset_average();
    let mut state = SamplingState::new(family, &run.w, &mut run.counter);
    let sizes = MinibatchSizes {
        k_f: 1,
        k_g: 1,
        k_p: 1,
    };
    let mut previous = run.w.clone();
    for t in t1 + 1..=t_max {
        run.accumulate();
        previous.copy_from_slice(&run.w);
        run.sample_objective(rng);
        let i = sample_constraint(&state, rng);
        run.add_penalty(family, i, config.gamma);
        run.step(schedule.step(0.0, t), t)?;

        let subset = sample_without_replacement(m, 1, rng)?;
        let descriptor = centered_supergradient(
            &mut state,
            family,
            &previous,
            &subset,
            config.gamma,
            t as u64,
            &mut run.counter,
        );
        multiplicative_update(&mut state, &descriptor, config.eta_p)?;
        run.charge(m as f64);
        run.maybe_trace(t, t_max, sizes, state.entropy())?;
    }
    run.max_staleness = state.max_staleness_seen();
    run.finish(Algorithm::Mid)
}
