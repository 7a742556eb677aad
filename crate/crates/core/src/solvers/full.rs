use crate::autotune::MinibatchSizes;
use crate::error::Result;
use crate::problem::Problem;

use super::{Algorithm, Family, Run, SolverConfig, SolverResult, SolverRng};

/// Stochastic subgradient descent on `f + γ max(0, g)`, checking every
/// constraint at every iteration.
pub fn solve_full(
    problem: &Problem,
    config: &SolverConfig,
    rng: &mut SolverRng,
) -> Result<SolverResult> {
    let mut run = Run::new(problem, config)?;
    let family = Family::new(problem, config)?;
    let family = family.get();
    let sizes = MinibatchSizes {
        k_f: 1,
        k_g: family.count(),
        k_p: 0,
    };
    let t_max = config.iterations;
    for t in 1..=t_max {
        run.accumulate();
        run.sample_objective(rng);
        run.add_max_penalty(family, config.gamma)?;
        run.step(config.schedule.step(config.eta_w, t), t)?;
        run.maybe_trace(t, t_max, sizes, 0.0)?;
    }
    run.finish(Algorithm::Full)
}
