//! Run settings shared by the command line and JSON config files.
//!
//! Every field is optional so that a config file and the flags can be merged
//! with the flags taking precedence.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use heavytouch::solvers::{
    recommended_eta_full, recommended_eta_light, recommended_eta_p_mid, schedule_from_tau,
};
use heavytouch::{
    Algorithm, GeneratorKind, GeneratorSpec, PairStructure, Problem, SolverConfig, StepSchedule,
    Timing,
};
use serde::Deserialize;

pub const DEFAULT_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    OrderingRegression,
    Ranking,
    BoxQp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairs {
    Chain,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Constant,
    InvSqrt,
    InvT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingArg {
    Modeled,
    Wall,
}

/// A single name or a list, so `"solver": "full"` and `["full", "light"]`
/// are both accepted in config files.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

fn one_or_many<'de, D>(deserializer: D) -> Result<Option<Vec<String>>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    Ok(
        Option::<OneOrMany>::deserialize(deserializer)?.map(|v| match v {
            OneOrMany::One(s) => vec![s],
            OneOrMany::Many(v) => v,
        }),
    )
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Solver name(s): full, light, mid, practical, projected-sgd. `compare`
    /// accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub solver: Option<Vec<String>>,

    /// Generated problem family.
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    /// Dimension (ranking with grid pairs needs a perfect square).
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of training examples.
    #[arg(long)]
    pub n: Option<usize>,
    /// Nonzeros per ranking feature difference.
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Ranking monotonicity pairs.
    #[arg(long, value_enum)]
    pub pairs: Option<Pairs>,
    /// Label noise for ordering regression.
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Curvature ratio for the box QP.
    #[arg(long)]
    pub condition: Option<f64>,
    /// Seed for the generated data; defaults to --seed.
    #[arg(long)]
    pub problem_seed: Option<u64>,

    /// Iterations (MidTouch: T1 + T2 when neither phases nor tau are given).
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<usize>,
    /// MidTouch first phase length.
    #[arg(long = "T1")]
    #[serde(rename = "T1")]
    pub t1: Option<usize>,
    /// MidTouch second phase length.
    #[arg(long = "T2")]
    #[serde(rename = "T2")]
    pub t2: Option<usize>,
    /// MidTouch phases from tau: T1 = ceil(m tau^2), T2 = ceil(tau^3).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Step size for w.
    #[arg(long)]
    pub eta_w: Option<f64>,
    /// Step size for the constraint distribution.
    #[arg(long)]
    pub eta_p: Option<f64>,
    /// Penalty weight; defaults to the problem's recommended value.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// LightTouch subset size; defaults to the recommended value.
    #[arg(long)]
    pub k: Option<usize>,
    /// Confidence parameter for the recommended k.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Group constraints into this many aggregated constraints.
    #[arg(long)]
    pub aggregate: Option<usize>,
    /// Step schedule for w.
    #[arg(long, value_enum)]
    pub schedule: Option<Schedule>,
    /// Clock used for minibatch sizing and trace timestamps.
    #[arg(long, value_enum)]
    pub timing: Option<TimingArg>,
    /// Skip the final projection onto the feasible set.
    #[arg(long)]
    #[serde(default)]
    pub no_final_projection: bool,
    /// Run seed.
    #[arg(long, env = "HEAVYTOUCH_SEED")]
    pub seed: Option<u64>,
    /// Trace every this many iterations.
    #[arg(long)]
    pub trace_every: Option<usize>,

    /// Repetitions per solver (`compare`).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Output path: trace CSV for `solve`, directory for `compare`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Concurrent runs for `compare`; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Settings {
    /// Fills every unset field from `file`.
    pub fn merged_over(self, file: Settings) -> Settings {
        Settings {
            solver: self.solver.or(file.solver),
            problem: self.problem.or(file.problem),
            d: self.d.or(file.d),
            n: self.n.or(file.n),
            sparsity: self.sparsity.or(file.sparsity),
            pairs: self.pairs.or(file.pairs),
            noise_sd: self.noise_sd.or(file.noise_sd),
            condition: self.condition.or(file.condition),
            problem_seed: self.problem_seed.or(file.problem_seed),
            t: self.t.or(file.t),
            t1: self.t1.or(file.t1),
            t2: self.t2.or(file.t2),
            tau: self.tau.or(file.tau),
            eta_w: self.eta_w.or(file.eta_w),
            eta_p: self.eta_p.or(file.eta_p),
            gamma: self.gamma.or(file.gamma),
            k: self.k.or(file.k),
            delta: self.delta.or(file.delta),
            aggregate: self.aggregate.or(file.aggregate),
            schedule: self.schedule.or(file.schedule),
            timing: self.timing.or(file.timing),
            no_final_projection: self.no_final_projection || file.no_final_projection,
            seed: self.seed.or(file.seed),
            trace_every: self.trace_every.or(file.trace_every),
            reps: self.reps.or(file.reps),
            out: self.out.or(file.out),
            jobs: self.jobs.or(file.jobs),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn solvers(&self) -> anyhow::Result<Vec<Algorithm>> {
        let names = self.solver.clone().unwrap_or_else(|| vec!["light".into()]);
        if names.is_empty() {
            bail!("no solver given");
        }
        names
            .iter()
            .map(|s| s.trim().parse::<Algorithm>().map_err(anyhow::Error::from))
            .collect()
    }

    pub fn generator(&self) -> anyhow::Result<GeneratorSpec> {
        let kind = match self.problem.unwrap_or(ProblemKind::Ranking) {
            ProblemKind::OrderingRegression => GeneratorKind::OrderingRegression {
                d: self.d.unwrap_or(20),
                n: self.n.unwrap_or(200),
                noise_sd: self.noise_sd.unwrap_or(0.1),
            },
            ProblemKind::Ranking => GeneratorKind::MonotonicRanking {
                d: self.d.unwrap_or(64),
                n: self.n.unwrap_or(5000),
                sparsity: self.sparsity.unwrap_or(8),
                pairs: match self.pairs.unwrap_or(Pairs::Grid) {
                    Pairs::Chain => PairStructure::Chain,
                    Pairs::Grid => PairStructure::Grid,
                },
            },
            ProblemKind::BoxQp => GeneratorKind::BoxQp {
                d: self.d.unwrap_or(10),
                condition: self.condition.unwrap_or(10.0),
            },
        };
        let spec = GeneratorSpec::new(kind, self.problem_seed.unwrap_or(self.seed()));
        spec.validate()?;
        Ok(spec)
    }

    /// Solver configuration with recommended defaults for unset values.
    pub fn config(&self, problem: &Problem, algorithm: Algorithm) -> anyhow::Result<SolverConfig> {
        let m = problem.constraints.len();
        let t = self.t.unwrap_or(DEFAULT_ITERATIONS);
        if t == 0 {
            bail!("--T must be positive");
        }
        let gamma = match self.gamma.or(problem.default_gamma()) {
            Some(g) => g,
            None => bail!("problem has no recommended gamma; pass --gamma"),
        };
        let meta = &problem.metadata;
        let domain = &problem.domain;

        let default_schedule = match algorithm {
            Algorithm::Practical => Schedule::InvSqrt,
            _ => Schedule::Constant,
        };
        let schedule = match self.schedule.unwrap_or(default_schedule) {
            Schedule::Constant => StepSchedule::Constant,
            Schedule::InvSqrt => StepSchedule::InvSqrt,
            Schedule::InvT => StepSchedule::InvT {
                lambda: meta.lambda,
            },
        };

        let eta_w = match self.eta_w {
            Some(eta) => eta,
            None => match algorithm {
                Algorithm::Light => recommended_eta_light(meta, domain, m, t, gamma)?,
                Algorithm::Practical => {
                    recommended_eta_full(meta, domain, t, gamma)? * (t as f64).sqrt()
                }
                _ => recommended_eta_full(meta, domain, t, gamma)?,
            },
        };
        let eta_p = match (self.eta_p, algorithm) {
            (Some(eta), _) => eta,
            (None, Algorithm::Mid) => recommended_eta_p_mid(meta, gamma)
                .context("MidTouch needs a strongly convex objective (lambda > 0)")?,
            (None, _) => eta_w,
        };

        let mut config = SolverConfig::new(algorithm, t, gamma, eta_w);
        config.eta_p = eta_p;
        config.schedule = schedule;
        config.k = self.k.unwrap_or(0);
        config.delta = self.delta.unwrap_or(config.delta);
        config.aggregate = self.aggregate;
        config.final_projection = !self.no_final_projection;
        config.seed = self.seed();
        config.timing = match self.timing.unwrap_or(TimingArg::Modeled) {
            TimingArg::Modeled => Timing::Modeled,
            TimingArg::Wall => Timing::Wall,
        };
        if algorithm == Algorithm::Mid {
            config.phases = match (self.t1, self.t2, self.tau) {
                (Some(a), Some(b), None) => (a, b),
                (None, None, Some(tau)) => schedule_from_tau(tau, m)?,
                (None, None, None) => (t / 2, t - t / 2),
                _ => bail!("give either --T1 and --T2 together, or --tau"),
            };
        } else if self.t1.is_some() || self.t2.is_some() || self.tau.is_some() {
            bail!("--T1, --T2 and --tau apply only to the mid solver");
        }
        config.trace_every = self
            .trace_every
            .unwrap_or((config.total_iterations() / 100).max(1));
        config.validate()?;
        Ok(config)
    }
}

pub fn load_config_file(path: &Path) -> anyhow::Result<Settings> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
