//! Indexed families of convex inequality constraints `g_i(w) <= 0`.
//!
//! Every constraint kind supported here is affine, so subgradients do not
//! depend on the evaluation point. Evaluations made through [`ConstraintFamily::check`]
//! are charged to a [`CheckCounter`], which is the main cost observable of a
//! solver run.

use std::ops::Range;

use crate::error::{check_dim, Error, Result};

/// A single affine constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `scale * (w_i - w_j) <= 0`.
    Ordering { i: usize, j: usize, scale: f64 },
    /// `<a, w> - b <= 0`.
    LinearRow { a: Vec<f64>, b: f64 },
    /// `sign * w_i - bound <= 0` with `sign` in {-1, +1}.
    BoxFace { i: usize, sign: f64, bound: f64 },
}

impl Constraint {
    pub fn value(&self, w: &[f64]) -> f64 {
        match self {
            Constraint::Ordering { i, j, scale } => scale * (w[*i] - w[*j]),
            Constraint::LinearRow { a, b } => dot(a, w) - b,
            Constraint::BoxFace { i, sign, bound } => sign * w[*i] - bound,
        }
    }

    /// `out += coef * grad g`.
    pub fn add_gradient(&self, coef: f64, out: &mut [f64]) {
        match self {
            Constraint::Ordering { i, j, scale } => {
                out[*i] += coef * scale;
                out[*j] -= coef * scale;
            }
            Constraint::LinearRow { a, .. } => {
                for (o, x) in out.iter_mut().zip(a) {
                    *o += coef * x;
                }
            }
            Constraint::BoxFace { i, sign, .. } => out[*i] += coef * sign,
        }
    }

    pub fn gradient_norm(&self) -> f64 {
        match self {
            Constraint::Ordering { scale, .. } => scale.abs() * std::f64::consts::SQRT_2,
            Constraint::LinearRow { a, .. } => dot(a, a).sqrt(),
            Constraint::BoxFace { .. } => 1.0,
        }
    }

    /// Sparse `(coordinate, coefficient)` form of the gradient and the offset,
    /// so that the constraint reads `sum coef * w_coord <= rhs`.
    pub fn halfspace(&self) -> (Vec<(usize, f64)>, f64) {
        match self {
            Constraint::Ordering { i, j, scale } => (vec![(*i, *scale), (*j, -*scale)], 0.0),
            Constraint::LinearRow { a, b } => (
                a.iter()
                    .enumerate()
                    .filter(|(_, x)| **x != 0.0)
                    .map(|(k, x)| (k, *x))
                    .collect(),
                *b,
            ),
            Constraint::BoxFace { i, sign, bound } => (vec![(*i, *sign)], *bound),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Constraint::Ordering { i, j, scale } => {
                if *i >= dim || *j >= dim || i == j {
                    return Err(Error::InvalidArgument(format!(
                        "ordering pair ({i}, {j}) invalid for dimension {dim}"
                    )));
                }
                if !(*scale > 0.0) {
                    return Err(Error::InvalidArgument(
                        "ordering scale must be positive".into(),
                    ));
                }
            }
            Constraint::LinearRow { a, b } => {
                check_dim(dim, a.len())?;
                if !b.is_finite() || a.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument("linear row must be finite".into()));
                }
            }
            Constraint::BoxFace { i, sign, bound } => {
                if *i >= dim {
                    return Err(Error::InvalidArgument(format!(
                        "box face index {i} invalid for dimension {dim}"
                    )));
                }
                if *sign != 1.0 && *sign != -1.0 {
                    return Err(Error::InvalidArgument(
                        "box face sign must be +1 or -1".into(),
                    ));
                }
                if !bound.is_finite() {
                    return Err(Error::InvalidArgument(
                        "box face bound must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Running tally of single-constraint evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckCounter {
    checks: u64,
}

impl CheckCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, n: u64) {
        self.checks += n;
    }

    pub fn total(&self) -> u64 {
        self.checks
    }
}

/// Result of evaluating the most-violated constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxConstraint {
    pub value: f64,
    /// Index within the family (group index for aggregated families).
    pub index: usize,
    /// Base constraint whose gradient is a subgradient of the maximum.
    pub active: usize,
}

/// Anything a solver can sample constraints from.
pub trait ConstraintFamily: Send + Sync {
    fn dim(&self) -> usize;
    fn count(&self) -> usize;
    fn base(&self) -> &ConstraintSet;
    /// Raw base-constraint evaluations one call to `check(i, ..)` costs.
    fn checks_per_eval(&self, i: usize) -> u64;
    /// Evaluates constraint `i`, charging the counter. Returns the value and
    /// the base index whose gradient is a subgradient at `w`.
    fn check(&self, i: usize, w: &[f64], counter: &mut CheckCounter) -> (f64, usize);

    /// `out += coef * grad g_active` for a base index returned by `check`.
    fn add_gradient(&self, active: usize, coef: f64, out: &mut [f64]) {
        self.base().constraints[active].add_gradient(coef, out);
    }
}

/// Evaluates `max_i g_i(w)`, charging one check per raw constraint. Ties
/// resolve to the lowest index.
pub fn eval_max_constraint<F: ConstraintFamily + ?Sized>(
    cs: &F,
    w: &[f64],
    counter: &mut CheckCounter,
) -> Result<MaxConstraint> {
    check_dim(cs.dim(), w.len())?;
    let mut best = MaxConstraint {
        value: f64::NEG_INFINITY,
        index: 0,
        active: 0,
    };
    for i in 0..cs.count() {
        let (value, active) = cs.check(i, w, counter);
        if value > best.value {
            best = MaxConstraint {
                value,
                index: i,
                active,
            };
        }
    }
    Ok(best)
}

/// An indexed family `g_1, ..., g_m` over `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    dim: usize,
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(dim: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput);
        }
        if constraints.is_empty() {
            return Err(Error::InvalidArgument(
                "constraint set must be nonempty".into(),
            ));
        }
        for c in &constraints {
            c.validate(dim)?;
        }
        Ok(Self { dim, constraints })
    }

    /// `w_0 <= w_1 <= ... <= w_{d-1}` as `(w_i - w_{i+1}) / sqrt(2) <= 0`.
    pub fn ordering_chain(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("ordering chain needs d >= 2".into()));
        }
        let pairs: Vec<_> = (0..dim - 1).map(|i| (i, i + 1)).collect();
        Self::ordering_pairs(dim, &pairs)
    }

    /// `w_i <= w_j` for every `(i, j)`, each with unit-norm gradient.
    pub fn ordering_pairs(dim: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            dim,
            pairs
                .iter()
                .map(|&(i, j)| Constraint::Ordering { i, j, scale })
                .collect(),
        )
    }

    /// `|w_i| <= bound`, ordered as the `d` lower faces followed by the `d` upper faces.
    pub fn box_faces(dim: usize, bound: f64) -> Result<Self> {
        let lower = (0..dim).map(|i| Constraint::BoxFace {
            i,
            sign: -1.0,
            bound,
        });
        let upper = (0..dim).map(|i| Constraint::BoxFace {
            i,
            sign: 1.0,
            bound,
        });
        Self::new(dim, lower.chain(upper).collect())
    }

    /// `A w <= b`.
    pub fn linear_rows(rows: Vec<Vec<f64>>, b: &[f64]) -> Result<Self> {
        check_dim(rows.len(), b.len())?;
        let dim = rows.first().map_or(0, Vec::len);
        Self::new(
            dim,
            rows.into_iter()
                .zip(b)
                .map(|(a, &b)| Constraint::LinearRow { a, b })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Uncounted evaluation, for tests and traces.
    pub fn value(&self, i: usize, w: &[f64]) -> f64 {
        self.constraints[i].value(w)
    }

    pub fn subgradient(&self, i: usize, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, w.len())?;
        let mut g = vec![0.0; self.dim];
        self.constraints[i].add_gradient(1.0, &mut g);
        Ok(g)
    }

    /// Uncounted `max_i g_i(w)`, lowest index on ties.
    pub fn max_value(&self, w: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, c) in self.constraints.iter().enumerate() {
            let v = c.value(w);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// `max(0, max_i g_i(w))`.
    pub fn violation(&self, w: &[f64]) -> f64 {
        self.max_value(w).0.max(0.0)
    }

    /// The `(i, j)` pairs when every constraint is an ordering constraint.
    pub fn ordering_pair_list(&self) -> Option<Vec<(usize, usize)>> {
        self.constraints
            .iter()
            .map(|c| match c {
                Constraint::Ordering { i, j, .. } => Some((*i, *j)),
                _ => None,
            })
            .collect()
    }

    /// Largest gradient norm over the family: a valid `L_g` and `G_g`.
    pub fn max_gradient_norm(&self) -> f64 {
        self.constraints
            .iter()
            .map(Constraint::gradient_norm)
            .fold(0.0, f64::max)
    }
}

impl ConstraintFamily for ConstraintSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn count(&self) -> usize {
        self.constraints.len()
    }

    fn base(&self) -> &ConstraintSet {
        self
    }

    fn checks_per_eval(&self, _i: usize) -> u64 {
        1
    }

    fn check(&self, i: usize, w: &[f64], counter: &mut CheckCounter) -> (f64, usize) {
        counter.add(1);
        (self.constraints[i].value(w), i)
    }
}

/// Contiguous groups of base constraints, each replaced by its maximum.
#[derive(Debug, Clone)]
pub struct AggregatedConstraintSet<'a> {
    base: &'a ConstraintSet,
    groups: Vec<Range<usize>>,
}

/// Partitions `cs` into at most `groups` contiguous blocks of size `ceil(m / groups)`.
pub fn aggregate(cs: &ConstraintSet, groups: usize) -> Result<AggregatedConstraintSet<'_>> {
    let m = cs.len();
    if groups == 0 || groups > m {
        return Err(Error::InvalidArgument(format!(
            "aggregate count must be in 1..={m}, got {groups}"
        )));
    }
    let size = m.div_ceil(groups);
    let groups = (0..groups)
        .map(|g| g * size..((g + 1) * size).min(m))
        .filter(|r| !r.is_empty())
        .collect();
    Ok(AggregatedConstraintSet { base: cs, groups })
}

impl AggregatedConstraintSet<'_> {
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    /// Uncounted group maximum.
    pub fn value(&self, i: usize, w: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, self.groups[i].start);
        for j in self.groups[i].clone() {
            let v = self.base.value(j, w);
            if v > best.0 {
                best = (v, j);
            }
        }
        best
    }
}

impl ConstraintFamily for AggregatedConstraintSet<'_> {
    fn dim(&self) -> usize {
        self.base.dim
    }

    fn count(&self) -> usize {
        self.groups.len()
    }

    fn base(&self) -> &ConstraintSet {
        self.base
    }

    fn checks_per_eval(&self, i: usize) -> u64 {
        self.groups[i].len() as u64
    }

    fn check(&self, i: usize, w: &[f64], counter: &mut CheckCounter) -> (f64, usize) {
        counter.add(self.groups[i].len() as u64);
        self.value(i, w)
    }
}
