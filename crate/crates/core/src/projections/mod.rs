//! Euclidean projections: onto the domain, onto ordering constraints, and
//! onto the full feasible region.

mod dykstra;
mod oracle;
mod ordering;

pub use dykstra::{dykstra, project_ordering_general, DykstraOptions, Halfspace};
pub use oracle::{oracle_project, OracleMode, EXHAUSTIVE_MAX_CONSTRAINTS, EXHAUSTIVE_MAX_DIM};
pub use ordering::{
    project_ordering, project_ordering_with_stats, DisjointSetClusters, OrderingStats,
    ViolationQueue,
};

use crate::domain::Domain;
use crate::error::Result;
use crate::problem::Problem;

pub fn project_domain(domain: &Domain, w: &[f64]) -> Result<Vec<f64>> {
    domain.project(w)
}

/// Projects onto `{w in domain : g_i(w) <= 0 for all i}`.
///
/// Ordering constraints are projected by cluster averaging (exact for a chain)
/// or pairwise Dykstra; anything else, or a result the domain projection
/// pushed back out, goes through Dykstra over all halfspaces and the domain.
pub fn project_feasible(
    problem: &Problem,
    target: &[f64],
    opts: DykstraOptions,
) -> Result<Vec<f64>> {
    let cs = &problem.constraints;
    let domain = &problem.domain;
    let mut w = domain.project(target)?;

    if let Some(pairs) = cs.ordering_pair_list() {
        let is_chain = pairs.len() + 1 == w.len()
            && pairs
                .iter()
                .enumerate()
                .all(|(k, &(i, j))| i == k && j == k + 1);
        let mut ordered = if is_chain {
            project_ordering(target)?
        } else {
            project_ordering_general(&pairs, target, opts)?
        };
        domain.project_in_place(&mut ordered);
        if cs.violation(&ordered) <= opts.tol {
            return Ok(ordered);
        }
    }

    if cs.violation(&w) > 0.0 {
        w = dykstra(&Halfspace::from_constraints(cs), Some(domain), target, opts)?;
        domain.project_in_place(&mut w);
    }
    Ok(w)
}
