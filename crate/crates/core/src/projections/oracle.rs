//! Reference projection used to check the fast paths.
//!
//! Exhaustive mode enumerates every active set of the constraint family,
//! solves the equality-constrained least-squares problem for each, and keeps
//! the nearest candidate that is primal feasible with nonnegative multipliers.

use nalgebra::{DMatrix, DVector};

use crate::constraints::ConstraintSet;
use crate::domain::Domain;
use crate::error::{check_dim, Error, Result};

use super::dykstra::{dykstra, DykstraOptions, Halfspace};

pub const EXHAUSTIVE_MAX_DIM: usize = 12;
pub const EXHAUSTIVE_MAX_CONSTRAINTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Exhaustive,
    Iterative,
}

const ITERATIVE: DykstraOptions = DykstraOptions {
    tol: 1e-10,
    max_sweeps: 1_000_000,
};
const KKT_TOL: f64 = 1e-9;

pub fn oracle_project(
    cs: &ConstraintSet,
    domain: &Domain,
    target: &[f64],
    mode: OracleMode,
) -> Result<Vec<f64>> {
    check_dim(cs.dim(), target.len())?;
    check_dim(domain.dim(), target.len())?;
    match mode {
        OracleMode::Iterative => dykstra(
            &Halfspace::from_constraints(cs),
            Some(domain),
            target,
            ITERATIVE,
        ),
        OracleMode::Exhaustive => {
            let w = exhaustive(cs, target)?;
            // the projection onto the constraints alone is also the projection
            // onto constraints ∩ domain whenever it lies in the domain
            if domain.contains(&w, 0.0) {
                Ok(w)
            } else {
                dykstra(
                    &Halfspace::from_constraints(cs),
                    Some(domain),
                    target,
                    ITERATIVE,
                )
            }
        }
    }
}

fn exhaustive(cs: &ConstraintSet, target: &[f64]) -> Result<Vec<f64>> {
    let d = target.len();
    let m = cs.len();
    if d > EXHAUSTIVE_MAX_DIM || m > EXHAUSTIVE_MAX_CONSTRAINTS {
        return Err(Error::InvalidArgument(format!(
            "exhaustive oracle limited to d <= {EXHAUSTIVE_MAX_DIM}, m <= {EXHAUSTIVE_MAX_CONSTRAINTS}"
        )));
    }
    let rows: Vec<(Vec<f64>, f64)> = cs
        .constraints()
        .iter()
        .map(|c| {
            let (terms, rhs) = c.halfspace();
            let mut a = vec![0.0; d];
            for (i, x) in terms {
                a[i] += x;
            }
            (a, rhs)
        })
        .collect();
    let feasible = |w: &[f64]| {
        rows.iter()
            .all(|(a, b)| dot(a, w) - b <= KKT_TOL * (1.0 + b.abs()))
    };

    if feasible(target) {
        return Ok(target.to_vec());
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut active = Vec::with_capacity(m);
    for mask in 1u32..(1u32 << m) {
        active.clear();
        active.extend((0..m).filter(|k| mask & (1 << k) != 0));
        if active.len() > d {
            continue;
        }
        let s = active.len();
        let gram = DMatrix::from_fn(s, s, |r, c| dot(&rows[active[r]].0, &rows[active[c]].0));
        let rhs = DVector::from_fn(s, |r, _| {
            dot(&rows[active[r]].0, target) - rows[active[r]].1
        });
        let Some(chol) = gram.cholesky() else {
            continue;
        };
        let multipliers = chol.solve(&rhs);
        if multipliers.iter().any(|&l| l < -KKT_TOL) {
            continue;
        }
        let mut w = target.to_vec();
        for (r, &k) in active.iter().enumerate() {
            for (wi, a) in w.iter_mut().zip(&rows[k].0) {
                *wi -= multipliers[r] * a;
            }
        }
        if !feasible(&w) {
            continue;
        }
        let dist: f64 = w.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
            best = Some((dist, w));
        }
    }
    best.map(|(_, w)| w)
        .ok_or_else(|| Error::InvalidArgument("no active set satisfied the KKT conditions".into()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Constraint;

    fn wide(d: usize) -> Domain {
        Domain::cube(d, -1e6, 1e6).unwrap()
    }

    #[test]
    fn chain_example() {
        let cs = ConstraintSet::ordering_chain(3).unwrap();
        let w = oracle_project(&cs, &wide(3), &[3.0, 1.0, 2.0], OracleMode::Exhaustive).unwrap();
        for x in w {
            assert!((x - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn feasible_is_fixed() {
        let cs = ConstraintSet::ordering_chain(3).unwrap();
        let w = oracle_project(&cs, &wide(3), &[1.0, 2.0, 3.0], OracleMode::Exhaustive).unwrap();
        assert_eq!(w, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn single_halfspace() {
        let cs = ConstraintSet::new(
            1,
            vec![Constraint::BoxFace {
                i: 0,
                sign: 1.0,
                bound: 0.0,
            }],
        )
        .unwrap();
        for mode in [OracleMode::Exhaustive, OracleMode::Iterative] {
            let w = oracle_project(&cs, &wide(1), &[1.0], mode).unwrap();
            assert!(w[0].abs() < 1e-10);
        }
    }

    #[test]
    fn falls_back_when_domain_binds() {
        let cs = ConstraintSet::ordering_chain(2).unwrap();
        let dom = Domain::cube(2, 0.0, 1.0).unwrap();
        let w = oracle_project(&cs, &dom, &[3.0, 1.0], OracleMode::Exhaustive).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-9 && (w[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_large_for_enumeration() {
        let cs = ConstraintSet::ordering_chain(13).unwrap();
        assert!(oracle_project(&cs, &wide(13), &[0.0; 13], OracleMode::Exhaustive).is_err());
    }
}
