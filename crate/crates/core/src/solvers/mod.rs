//! Training loops and the bookkeeping they share.

mod formulas;
mod full;
mod light;
mod mid;
mod practical;
mod projected;

pub use formulas::{
    recommended_eta_full, recommended_eta_light, recommended_eta_p_mid, recommended_k,
    recommended_k_uncapped, schedule_from_tau,
};
pub use full::solve_full;
pub use light::solve_light;
pub use mid::solve_mid;
pub use practical::solve_practical;
pub use projected::solve_projected_sgd;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autotune::{MinibatchSizes, DEFAULT_DECAY};
use crate::constraints::{
    aggregate, eval_max_constraint, AggregatedConstraintSet, CheckCounter, ConstraintFamily,
};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::projections::{project_feasible, DykstraOptions};

/// Seeded generator used for every solver run.
pub type SolverRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Full,
    Light,
    Mid,
    Practical,
    ProjectedSgd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Full,
        Algorithm::Light,
        Algorithm::Mid,
        Algorithm::Practical,
        Algorithm::ProjectedSgd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Full => "full",
            Algorithm::Light => "light",
            Algorithm::Mid => "mid",
            Algorithm::Practical => "practical",
            Algorithm::ProjectedSgd => "projected-sgd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver '{s}'")))
    }
}

/// Per-iteration `w` step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `η_w`.
    Constant,
    /// `η_w / √t`.
    InvSqrt,
    /// `1 / (λ t)`; ignores `η_w`.
    InvT { lambda: f64 },
}

impl StepSchedule {
    pub fn step(&self, eta_w: f64, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant => eta_w,
            StepSchedule::InvSqrt => eta_w / (t as f64).sqrt(),
            StepSchedule::InvT { lambda } => 1.0 / (lambda * t as f64),
        }
    }
}

/// How time is measured for minibatch sizing and trace timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// Deterministic operation counts: one unit per raw constraint check,
    /// the objective's nominal sample cost per stochastic gradient, and `m`
    /// units per distribution update. Traces made this way are reproducible.
    Modeled,
    /// Monotonic wall clock, in nanoseconds.
    Wall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// `T` for every algorithm except MidTouch.
    pub iterations: usize,
    /// MidTouch phase lengths `(T1, T2)`.
    pub phases: (usize, usize),
    pub eta_w: f64,
    pub eta_p: f64,
    pub gamma: f64,
    /// LightTouch subset size; 0 selects the recommended value.
    pub k: usize,
    pub delta: f64,
    pub schedule: StepSchedule,
    pub final_projection: bool,
    pub seed: u64,
    pub trace_every: usize,
    /// Number of constraint groups, if aggregating.
    pub aggregate: Option<usize>,
    pub timing: Timing,
    /// Variance decay `ν` for automatic minibatching.
    pub decay: f64,
    pub projection: DykstraOptions,
    /// Keep every averaged iterate in the result. Memory grows with `T`.
    pub record_iterates: bool,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, iterations: usize, gamma: f64, eta_w: f64) -> Self {
        Self {
            algorithm,
            iterations,
            phases: (iterations, iterations),
            eta_w,
            eta_p: eta_w,
            gamma,
            k: 0,
            delta: 0.1,
            schedule: StepSchedule::Constant,
            final_projection: true,
            seed: 0,
            trace_every: iterations.max(1),
            aggregate: None,
            timing: Timing::Modeled,
            decay: DEFAULT_DECAY,
            projection: DykstraOptions::default(),
            record_iterates: false,
        }
    }

    /// Iterations actually run.
    pub fn total_iterations(&self) -> usize {
        match self.algorithm {
            Algorithm::Mid => self.phases.0 + self.phases.1,
            _ => self.iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.algorithm == Algorithm::Mid {
            if self.phases.0 == 0 || self.phases.1 == 0 {
                return bad("MidTouch needs T1 >= 1 and T2 >= 1");
            }
        } else if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad("gamma must be positive");
        }
        let uses_eta_w =
            self.algorithm != Algorithm::Mid && !matches!(self.schedule, StepSchedule::InvT { .. });
        if uses_eta_w && !(self.eta_w > 0.0 && self.eta_w.is_finite()) {
            return bad("eta_w must be positive");
        }
        let uses_p = matches!(
            self.algorithm,
            Algorithm::Light | Algorithm::Mid | Algorithm::Practical
        );
        if uses_p && !(self.eta_p > 0.0 && self.eta_p.is_finite()) {
            return bad("eta_p must be positive");
        }
        if let StepSchedule::InvT { lambda } = self.schedule {
            if !(lambda > 0.0) {
                return bad("1/(lambda t) schedule requires lambda > 0");
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if self.trace_every == 0 {
            return bad("trace_every must be positive");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        if self.aggregate == Some(0) {
            return bad("aggregate must be positive");
        }
        Ok(())
    }
}

/// One sampled point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub checks: u64,
    pub objective: f64,
    pub violation: f64,
    pub k_f: usize,
    pub k_g: usize,
    pub k_p: usize,
    pub p_entropy: f64,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub algorithm: Algorithm,
    pub average_iterate: Vec<f64>,
    pub projected_iterate: Vec<f64>,
    pub final_objective: f64,
    pub final_violation: f64,
    pub total_constraint_checks: u64,
    pub total_objective_samples: u64,
    /// Calls to the feasible-set projection made during the iterations.
    pub projection_calls: u64,
    pub max_staleness: u64,
    pub wall_time: Duration,
    pub trace: Vec<TraceRecord>,
    /// The averaged iterates, when `record_iterates` is set.
    pub iterates: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Runs the configured algorithm with a generator seeded from `config.seed`.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolverResult> {
    let mut rng = rng_from_seed(config.seed);
    match config.algorithm {
        Algorithm::Full => solve_full(problem, config, &mut rng),
        Algorithm::Light => solve_light(problem, config, &mut rng),
        Algorithm::Mid => solve_mid(problem, config, &mut rng),
        Algorithm::Practical => solve_practical(problem, config, &mut rng),
        Algorithm::ProjectedSgd => solve_projected_sgd(problem, config, &mut rng),
    }
}

/// Either the base constraints or an aggregation of them.
pub(crate) enum Family<'a> {
    Base(&'a crate::constraints::ConstraintSet),
    Aggregated(AggregatedConstraintSet<'a>),
}

impl<'a> Family<'a> {
    pub(crate) fn new(problem: &'a Problem, config: &SolverConfig) -> Result<Self> {
        Ok(match config.aggregate {
            Some(groups) => Family::Aggregated(aggregate(&problem.constraints, groups)?),
            None => Family::Base(&problem.constraints),
        })
    }

    pub(crate) fn get(&self) -> &dyn ConstraintFamily {
        match self {
            Family::Base(cs) => *cs,
            Family::Aggregated(agg) => agg,
        }
    }
}

enum Clock {
    Modeled {
        units: f64,
    },
    Wall {
        accumulated: Duration,
        since: Option<Instant>,
    },
}

impl Clock {
    fn new(timing: Timing) -> Self {
        match timing {
            Timing::Modeled => Clock::Modeled { units: 0.0 },
            Timing::Wall => Clock::Wall {
                accumulated: Duration::ZERO,
                since: Some(Instant::now()),
            },
        }
    }

    fn charge(&mut self, units: f64) {
        if let Clock::Modeled { units: u } = self {
            *u += units;
        }
    }

    fn pause(&mut self) {
        if let Clock::Wall { accumulated, since } = self {
            if let Some(s) = since.take() {
                *accumulated += s.elapsed();
            }
        }
    }

    fn resume(&mut self) {
        if let Clock::Wall { since, .. } = self {
            *since = Some(Instant::now());
        }
    }

    fn elapsed_ns(&self, checks: u64) -> u64 {
        match self {
            Clock::Modeled { units } => (units + checks as f64).round() as u64,
            Clock::Wall { accumulated, since } => {
                let live = since.map_or(Duration::ZERO, |s| s.elapsed());
                (*accumulated + live).as_nanos() as u64
            }
        }
    }
}

/// State shared by every training loop: the iterate, its running sum, the
/// check counter, the clock and the trace.
pub(crate) struct Run<'a> {
    pub problem: &'a Problem,
    pub config: &'a SolverConfig,
    pub counter: CheckCounter,
    pub objective_samples: u64,
    pub projection_calls: u64,
    pub max_staleness: u64,
    pub w: Vec<f64>,
    pub grad: Vec<f64>,
    sum: Vec<f64>,
    averaged: usize,
    iterates: Vec<Vec<f64>>,
    clock: Clock,
    started: Instant,
    trace: Vec<TraceRecord>,
    pub warnings: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn new(problem: &'a Problem, config: &'a SolverConfig) -> Result<Self> {
        config.validate()?;
        let d = problem.dim();
        let mut warnings = Vec::new();
        if let Some(est) = &problem.gamma_estimate {
            if !est.admits(config.gamma, problem.metadata.lipschitz_f) {
                warnings.push(format!(
                    "gamma = {} does not exceed L_f / rho = {}; the averaged iterate may stay infeasible",
                    config.gamma,
                    problem.metadata.lipschitz_f / est.rho
                ));
            }
        }
        Ok(Self {
            problem,
            config,
            counter: CheckCounter::new(),
            objective_samples: 0,
            projection_calls: 0,
            max_staleness: 0,
            w: problem.initial_point.clone(),
            grad: vec![0.0; d],
            sum: vec![0.0; d],
            averaged: 0,
            iterates: Vec::new(),
            clock: Clock::new(config.timing),
            started: Instant::now(),
            trace: Vec::new(),
            warnings,
        })
    }

    /// Adds the current iterate to the running average.
    pub fn accumulate(&mut self) {
        for (s, x) in self.sum.iter_mut().zip(&self.w) {
            *s += x;
        }
        self.averaged += 1;
        if self.config.record_iterates {
            self.iterates.push(self.w.clone());
        }
    }

    pub fn reset_average(&mut self) {
        self.sum.fill(0.0);
        self.averaged = 0;
        self.iterates.clear();
    }

    pub fn average(&self) -> Vec<f64> {
        let n = self.averaged.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Overwrites `grad` with one stochastic objective subgradient at `w`.
    pub fn sample_objective(&mut self, rng: &mut SolverRng) {
        self.problem
            .objective
            .sample_subgradient(&self.w, rng, &mut self.grad);
        self.objective_samples += 1;
        self.clock.charge(self.problem.objective.sample_cost());
    }

    /// Checks constraint `i` of `family` at `w` and, when it is violated, adds
    /// `coef ∇g_i` to `grad`. Returns the constraint value.
    pub fn add_penalty(&mut self, family: &dyn ConstraintFamily, i: usize, coef: f64) -> f64 {
        let (value, active) = family.check(i, &self.w, &mut self.counter);
        if value > 0.0 {
            family.add_gradient(active, coef, &mut self.grad);
        }
        value
    }

    /// Checks every constraint and adds `coef ∇g` of the most violated one
    /// when it is positive.
    pub fn add_max_penalty(&mut self, family: &dyn ConstraintFamily, coef: f64) -> Result<f64> {
        let worst = eval_max_constraint(family, &self.w, &mut self.counter)?;
        if worst.value > 0.0 {
            family.add_gradient(worst.active, coef, &mut self.grad);
        }
        Ok(worst.value)
    }

    /// Charges modeled time that is not a constraint check.
    pub fn charge(&mut self, units: f64) {
        self.clock.charge(units);
    }

    /// `w ← Π_W(w - η grad)`.
    pub fn step(&mut self, eta: f64, iteration: usize) -> Result<()> {
        for (x, g) in self.w.iter_mut().zip(&self.grad) {
            *x -= eta * g;
        }
        self.problem.domain.project_in_place(&mut self.w);
        if self.w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { iteration });
        }
        Ok(())
    }

    fn projected(&self, point: &[f64]) -> Result<Vec<f64>> {
        project_feasible(self.problem, point, self.config.projection)
    }

    /// Records a trace row every `trace_every` iterations and at the last one.
    pub fn maybe_trace(
        &mut self,
        iteration: usize,
        last: usize,
        sizes: MinibatchSizes,
        p_entropy: f64,
    ) -> Result<()> {
        if !iteration.is_multiple_of(self.config.trace_every) && iteration != last {
            return Ok(());
        }
        self.clock.pause();
        let avg = self.average();
        let projected = self.projected(&avg)?;
        self.trace.push(TraceRecord {
            iteration,
            checks: self.counter.total(),
            objective: self.problem.objective.value(&projected),
            violation: self.problem.constraints.violation(&avg),
            k_f: sizes.k_f,
            k_g: sizes.k_g,
            k_p: sizes.k_p,
            p_entropy,
            elapsed_ns: self.clock.elapsed_ns(self.counter.total()),
        });
        self.clock.resume();
        Ok(())
    }

    pub fn finish(self, algorithm: Algorithm) -> Result<SolverResult> {
        let average_iterate = self.average();
        let projected_iterate = if self.config.final_projection {
            self.projected(&average_iterate)?
        } else {
            average_iterate.clone()
        };
        Ok(SolverResult {
            algorithm,
            final_objective: self.problem.objective.value(&projected_iterate),
            final_violation: self.problem.constraints.violation(&projected_iterate),
            average_iterate,
            projected_iterate,
            total_constraint_checks: self.counter.total(),
            total_objective_samples: self.objective_samples,
            projection_calls: self.projection_calls,
            max_staleness: self.max_staleness,
            wall_time: self.started.elapsed(),
            trace: self.trace,
            iterates: self.iterates,
            warnings: self.warnings,
        })
    }
}
