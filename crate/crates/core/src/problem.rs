//! Problem bundles, known constants and the choice of penalty weight `γ`.

use std::sync::Arc;

use crate::constraints::ConstraintSet;
use crate::domain::Domain;
use crate::error::{check_dim, Error, Result};
use crate::objective::Objective;

/// Multiplier applied on top of the strict lower bound `L_f / ρ`.
pub const GAMMA_SAFETY: f64 = 1.01;

/// Constants describing the objective and constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemMetadata {
    /// Lipschitz constant of `f` on the domain.
    pub lipschitz_f: f64,
    /// Common Lipschitz constant of the `g_i`.
    pub lipschitz_g: f64,
    /// Bound on stochastic subgradient norms of `f`.
    pub grad_bound_f: f64,
    /// Bound on subgradient norms of `max(0, g_i)`.
    pub grad_bound_g: f64,
    /// Strong convexity modulus of `f`.
    pub lambda: f64,
}

impl ProblemMetadata {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lipschitz_f,
            self.lipschitz_g,
            self.grad_bound_f,
            self.grad_bound_g,
            self.lambda,
        ];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument(
                "metadata must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintFamilyKind {
    /// `|w_i| <= 1` in `d` dimensions.
    Box { d: usize },
    /// A chain `w_1 <= ... <= w_d`.
    Ordering { d: usize },
    /// Unit-norm rows `A w <= b` over a ball of radius `r`.
    LinearRows { radius: f64, b_min: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaProvenance {
    LemmaGamma { interior_point: Vec<f64> },
    KnownFamily(ConstraintFamilyKind),
    UserSupplied,
}

/// A boundary-gradient bound `ρ` and the penalty weight derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    pub rho: f64,
    pub gamma: f64,
    pub provenance: GammaProvenance,
}

impl GammaEstimate {
    pub fn from_rho(rho: f64, lipschitz_f: f64, provenance: GammaProvenance) -> Self {
        Self {
            rho,
            gamma: GAMMA_SAFETY * lipschitz_f / rho,
            provenance,
        }
    }

    /// Whether `gamma` exceeds `L_f / ρ`, the condition under which minimizers
    /// of the penalized objective are feasible.
    pub fn admits(&self, gamma: f64, lipschitz_f: f64) -> bool {
        gamma > lipschitz_f / self.rho
    }
}

/// `ρ = -g(v) / D_w` for a strictly feasible `v`.
pub fn rho_from_interior_point(cs: &ConstraintSet, domain: &Domain, v: &[f64]) -> Result<f64> {
    check_dim(cs.dim(), v.len())?;
    let (g, _) = cs.max_value(v);
    if !(g < 0.0) {
        return Err(Error::NotStrictlyFeasible { value: g });
    }
    Ok(-g / domain.diameter_bound())
}

pub fn gamma_for_known_family(
    family: ConstraintFamilyKind,
    lipschitz_f: f64,
) -> Result<GammaEstimate> {
    let rho = match &family {
        ConstraintFamilyKind::Box { d } if *d > 0 => 1.0 / (*d as f64).sqrt(),
        ConstraintFamilyKind::Ordering { d } if *d > 1 => 1.0 / (*d - 1) as f64,
        ConstraintFamilyKind::LinearRows { radius, b_min } if *radius > 0.0 && *b_min > 0.0 => {
            b_min / (2.0 * radius)
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "invalid family parameters: {family:?}"
            )))
        }
    };
    Ok(GammaEstimate::from_rho(
        rho,
        lipschitz_f,
        GammaProvenance::KnownFamily(family),
    ))
}

/// A constrained stochastic optimization problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Arc<dyn Objective>,
    pub constraints: ConstraintSet,
    pub domain: Domain,
    pub metadata: ProblemMetadata,
    /// Strictly feasible point, when one is known.
    pub interior_point: Option<Vec<f64>>,
    pub gamma_estimate: Option<GammaEstimate>,
    /// `w^{(1)}`; defaults to the domain center.
    pub initial_point: Vec<f64>,
}

impl Problem {
    pub fn new(
        objective: Arc<dyn Objective>,
        constraints: ConstraintSet,
        domain: Domain,
        metadata: ProblemMetadata,
    ) -> Result<Self> {
        check_dim(domain.dim(), objective.dim())?;
        check_dim(domain.dim(), constraints.dim())?;
        metadata.validate()?;
        let initial_point = domain.center();
        Ok(Self {
            objective,
            constraints,
            domain,
            metadata,
            interior_point: None,
            gamma_estimate: None,
            initial_point,
        })
    }

    pub fn with_interior_point(mut self, v: Vec<f64>) -> Result<Self> {
        let rho = rho_from_interior_point(&self.constraints, &self.domain, &v)?;
        if self.gamma_estimate.is_none() {
            self.gamma_estimate = Some(GammaEstimate::from_rho(
                rho,
                self.metadata.lipschitz_f,
                GammaProvenance::LemmaGamma {
                    interior_point: v.clone(),
                },
            ));
        }
        self.interior_point = Some(v);
        Ok(self)
    }

    pub fn with_gamma_estimate(mut self, estimate: GammaEstimate) -> Self {
        self.gamma_estimate = Some(estimate);
        self
    }

    pub fn with_initial_point(mut self, w: Vec<f64>) -> Result<Self> {
        check_dim(self.dim(), w.len())?;
        if !self.domain.contains(&w, 0.0) {
            return Err(Error::InvalidArgument(
                "initial point lies outside the domain".into(),
            ));
        }
        self.initial_point = w;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Recommended penalty weight, if an estimate is attached.
    pub fn default_gamma(&self) -> Option<f64> {
        self.gamma_estimate.as_ref().map(|g| g.gamma)
    }
}

/// `h(w) = f(w) + γ max(0, g(w))`.
pub fn penalized_objective(problem: &Problem, gamma: f64, w: &[f64]) -> Result<f64> {
    check_dim(problem.dim(), w.len())?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument("gamma must be positive".into()));
    }
    Ok(problem.objective.value(w) + gamma * problem.constraints.violation(w))
}
