use crate::autotune::MinibatchSizes;
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::projections::project_feasible;

use super::{Algorithm, Run, SolverConfig, SolverResult, SolverRng};

/// Baseline: projects onto the feasible set after every stochastic step.
/// Projection work is counted in `projection_calls`, not as constraint checks.
pub fn solve_projected_sgd(
    problem: &Problem,
    config: &SolverConfig,
    rng: &mut SolverRng,
) -> Result<SolverResult> {
    let mut run = Run::new(problem, config)?;
    run.w = project_feasible(problem, &run.w, config.projection)?;
    run.projection_calls += 1;
    let sizes = MinibatchSizes {
        k_f: 1,
        k_g: 0,
        k_p: 0,
    };
    let t_max = config.iterations;
    for t in 1..=t_max {
        run.accumulate();
        run.sample_objective(rng);
        let eta = config.schedule.step(config.eta_w, t);
        for (x, g) in run.w.iter_mut().zip(&run.grad) {
            *x -= eta * g;
        }
        if run.w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { iteration: t });
        }
        run.w = project_feasible(problem, &run.w, config.projection)?;
        run.projection_calls += 1;
        run.charge(problem.dim() as f64);
        run.maybe_trace(t, t_max, sizes, 0.0)?;
    }
    run.finish(Algorithm::ProjectedSgd)
}
