//! Dykstra's alternating projections over halfspaces (and optionally the domain).

use crate::constraints::ConstraintSet;
use crate::domain::Domain;
use crate::error::{Error, Result};

use super::ordering::project_ordering;

/// `Σ coef · w_coord <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    terms: Vec<(usize, f64)>,
    rhs: f64,
    norm2: f64,
}

impl Halfspace {
    pub fn new(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        let norm2 = terms.iter().map(|(_, a)| a * a).sum();
        Self { terms, rhs, norm2 }
    }

    pub fn from_constraints(cs: &ConstraintSet) -> Vec<Self> {
        cs.constraints()
            .iter()
            .map(|c| {
                let (terms, rhs) = c.halfspace();
                Self::new(terms, rhs)
            })
            .collect()
    }

    fn dot(&self, w: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, a)| a * w[i]).sum()
    }

    fn violation(&self, w: &[f64]) -> f64 {
        (self.dot(w) - self.rhs).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraOptions {
    /// Stop once the maximum violation and the per-sweep change are both below this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 1_000_000,
        }
    }
}

/// Projects `start` onto the intersection of `halfspaces` and `domain`.
pub fn dykstra(
    halfspaces: &[Halfspace],
    domain: Option<&Domain>,
    start: &[f64],
    opts: DykstraOptions,
) -> Result<Vec<f64>> {
    let d = start.len();
    let mut x = start.to_vec();
    let mut prev = x.clone();
    // halfspace corrections are multiples of their normals
    let mut corr = vec![0.0; halfspaces.len()];
    let mut domain_corr = vec![0.0; if domain.is_some() { d } else { 0 }];
    let mut residual = f64::INFINITY;

    for _ in 0..opts.max_sweeps {
        prev.copy_from_slice(&x);
        for (h, c) in halfspaces.iter().zip(corr.iter_mut()) {
            if h.norm2 == 0.0 {
                continue;
            }
            // z = x + c·a; project z onto the halfspace
            let mut az = 0.0;
            for &(i, a) in &h.terms {
                x[i] += *c * a;
                az += a * x[i];
            }
            let excess = az - h.rhs;
            let t = if excess > 0.0 { excess / h.norm2 } else { 0.0 };
            if t != 0.0 {
                for &(i, a) in &h.terms {
                    x[i] -= t * a;
                }
            }
            *c = t;
        }
        if let Some(dom) = domain {
            for (xi, q) in x.iter_mut().zip(&domain_corr) {
                *xi += q;
            }
            let z = x.clone();
            dom.project_in_place(&mut x);
            for ((q, zi), xi) in domain_corr.iter_mut().zip(&z).zip(&x) {
                *q = zi - xi;
            }
        }
        let change = x
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let violation = halfspaces
            .iter()
            .map(|h| h.violation(&x))
            .fold(0.0, f64::max);
        residual = change.max(violation);
        if residual <= opts.tol {
            return Ok(x);
        }
    }
    Err(Error::NotConverged {
        sweeps: opts.max_sweeps,
        residual,
    })
}

/// Checks that the directed graph `i -> j` over `d` vertices is acyclic.
fn ensure_acyclic(d: usize, pairs: &[(usize, usize)]) -> Result<()> {
    let mut indegree = vec![0usize; d];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); d];
    for &(i, j) in pairs {
        if i == j {
            return Err(Error::CyclicPairs);
        }
        out[i].push(j);
        indegree[j] += 1;
    }
    let mut stack: Vec<usize> = (0..d).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &u in &out[v] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                stack.push(u);
            }
        }
    }
    if seen == d {
        Ok(())
    } else {
        Err(Error::CyclicPairs)
    }
}

/// The vertex sequence of `pairs` when they form one directed path.
fn as_single_chain(d: usize, pairs: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut next = vec![None; d];
    let mut has_pred = vec![false; d];
    let mut involved = vec![false; d];
    for &(i, j) in pairs {
        if next[i].is_some() || has_pred[j] {
            return None;
        }
        next[i] = Some(j);
        has_pred[j] = true;
        involved[i] = true;
        involved[j] = true;
    }
    let vertices = involved.iter().filter(|&&b| b).count();
    if vertices != pairs.len() + 1 {
        return None;
    }
    let start = (0..d).find(|&v| involved[v] && !has_pred[v])?;
    let mut path = vec![start];
    let mut cur = start;
    while let Some(n) = next[cur] {
        path.push(n);
        cur = n;
    }
    (path.len() == vertices).then_some(path)
}

/// Projection onto `{w : w_i <= w_j for all (i, j) in pairs}`.
///
/// A single chain is projected exactly by cluster averaging; any other
/// acyclic pair structure goes through Dykstra's method.
pub fn project_ordering_general(
    pairs: &[(usize, usize)],
    target: &[f64],
    opts: DykstraOptions,
) -> Result<Vec<f64>> {
    let d = target.len();
    if d == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(&(i, j)) = pairs.iter().find(|(i, j)| *i >= d || *j >= d) {
        return Err(Error::InvalidArgument(format!(
            "pair ({i}, {j}) out of range for d = {d}"
        )));
    }
    ensure_acyclic(d, pairs)?;
    if pairs.is_empty() {
        return Ok(target.to_vec());
    }
    if let Some(path) = as_single_chain(d, pairs) {
        let chain: Vec<f64> = path.iter().map(|&i| target[i]).collect();
        let projected = project_ordering(&chain)?;
        let mut out = target.to_vec();
        for (&i, v) in path.iter().zip(projected) {
            out[i] = v;
        }
        return Ok(out);
    }
    let halfspaces: Vec<_> = pairs
        .iter()
        .map(|&(i, j)| Halfspace::new(vec![(i, 1.0), (j, -1.0)], 0.0))
        .collect();
    dykstra(&halfspaces, None, target, opts)
}
