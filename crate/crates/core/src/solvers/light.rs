use crate::autotune::MinibatchSizes;
use crate::distribution::{
    centered_supergradient, multiplicative_update, sample_constraint, sample_without_replacement,
    SamplingState,
};
use crate::error::Result;
use crate::problem::Problem;

use super::{
    recommended_k_uncapped, solve_full, Algorithm, Family, Run, SolverConfig, SolverResult,
    SolverRng,
};

/// One sampled constraint per `w` step, `k` constraints per update of the
/// constraint distribution. Falls back to [`solve_full`] when `k > m`.
pub fn solve_light(
    problem: &Problem,
    config: &SolverConfig,
    rng: &mut SolverRng,
) -> Result<SolverResult> {
    config.validate()?;
    let family = Family::new(problem, config)?;
    let family = family.get();
    let m = family.count();
    let t_max = config.iterations;
    let k = match config.k {
        0 => recommended_k_uncapped(m, t_max, config.delta)?,
        k => k,
    };
    if k > m {
        let mut result = solve_full(problem, config, rng)?;
        result
            .warnings
            .push(format!("k = {k} exceeds m = {m}; ran FullTouch instead"));
        return Ok(result);
    }

    let mut run = Run::new(problem, config)?;
    let mut state = SamplingState::new(family, &run.w, &mut run.counter);
    let sizes = MinibatchSizes {
        k_f: 1,
        k_g: 1,
        k_p: k,
    };
    let mut previous = run.w.clone();
    for t in 1..=t_max {
        run.accumulate();
        previous.copy_from_slice(&run.w);
        run.sample_objective(rng);
        let i = sample_constraint(&state, rng);
        run.add_penalty(family, i, config.gamma);
        run.step(config.schedule.step(config.eta_w, t), t)?;

        let subset = sample_without_replacement(m, k, rng)?;
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
    run.finish(Algorithm::Light)
}
