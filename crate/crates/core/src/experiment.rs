//! Repeated solver runs on one generated problem, written out as CSV traces.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generate::{generate, GeneratorSpec};
use crate::problem::Problem;
use crate::solvers::{solve, SolverConfig, SolverResult, TraceRecord};

pub const TRACE_HEADER: [&str; 9] = [
    "iteration",
    "checks",
    "objective",
    "violation",
    "k_f",
    "k_g",
    "k_p",
    "p_entropy",
    "elapsed_ns",
];

pub const AGGREGATE_FILE: &str = "aggregate.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledConfig {
    pub label: String,
    pub config: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub problem: GeneratorSpec,
    pub runs: Vec<LabeledConfig>,
    pub repetitions: usize,
    pub output_dir: PathBuf,
    /// Base seed; repetition `r` of every label uses `derive_seed(seed, r)`.
    pub seed: u64,
    /// Maximum concurrent runs; 0 uses every available core.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub repetition: usize,
    pub seed: u64,
    pub path: PathBuf,
    pub final_objective: f64,
    pub final_violation: f64,
    pub total_constraint_checks: u64,
    pub total_objective_samples: u64,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSummary {
    pub label: String,
    pub mean_final_objective: f64,
    pub mean_final_violation: f64,
    pub mean_constraint_checks: f64,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub labels: Vec<LabelSummary>,
    pub aggregate_path: PathBuf,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.runs.is_empty() {
            return Err(Error::Config("plan has no runs".into()));
        }
        let mut seen = HashSet::new();
        for run in &self.runs {
            if !seen.insert(file_stem(&run.label)) {
                return Err(Error::Config(format!("duplicate label '{}'", run.label)));
            }
            run.config.validate()?;
        }
        self.problem.validate()
    }
}

/// SplitMix64 step: well-spread seeds from `(base, index)`.
pub fn derive_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x094D_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn trace_row(r: &TraceRecord) -> [String; 9] {
    [
        r.iteration.to_string(),
        r.checks.to_string(),
        format_float(r.objective),
        format_float(r.violation),
        r.k_f.to_string(),
        r.k_g.to_string(),
        r.k_p.to_string(),
        format_float(r.p_entropy),
        r.elapsed_ns.to_string(),
    ]
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(TRACE_HEADER).map_err(csv_error(path))?;
    for r in trace {
        w.write_record(trace_row(r)).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Writes the trace to any writer, e.g. stdout.
pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> Result<()> {
    let path = Path::new("<stream>");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_error(path))?;
    for r in trace {
        w.write_record(trace_row(r)).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

struct Job<'a> {
    label: &'a str,
    config: &'a SolverConfig,
    repetition: usize,
    seed: u64,
    path: PathBuf,
}

fn run_job(problem: &Problem, job: &Job<'_>) -> Result<(RunSummary, SolverResult)> {
    let mut config = job.config.clone();
    config.seed = job.seed;
    let result = solve(problem, &config)?;
    write_trace_csv(&job.path, &result.trace)?;
    let summary = RunSummary {
        label: job.label.to_string(),
        repetition: job.repetition,
        seed: job.seed,
        path: job.path.clone(),
        final_objective: result.final_objective,
        final_violation: result.final_violation,
        total_constraint_checks: result.total_constraint_checks,
        total_objective_samples: result.total_objective_samples,
        wall_time: result.wall_time,
        warnings: result.warnings.clone(),
    };
    Ok((summary, result))
}

/// Runs every label for every repetition on one generated problem, writes
/// `<label>_rep<r>.csv` per run plus `aggregate.csv` with mean curves.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentSummary> {
    plan.validate()?;
    let problem = generate(&plan.problem)?;
    fs::create_dir_all(&plan.output_dir).map_err(io_error(&plan.output_dir))?;

    let jobs: Vec<Job<'_>> = plan
        .runs
        .iter()
        .flat_map(|run| {
            (0..plan.repetitions).map(move |r| Job {
                label: &run.label,
                config: &run.config,
                repetition: r,
                seed: derive_seed(plan.seed, r),
                path: plan
                    .output_dir
                    .join(format!("{}_rep{r}.csv", file_stem(&run.label))),
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<(RunSummary, SolverResult)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(&problem, job))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut labels = Vec::new();
    let mut curves: Vec<(String, Vec<Vec<TraceRecord>>)> = Vec::new();
    for run in &plan.runs {
        let mine: Vec<&(RunSummary, SolverResult)> = outcomes
            .iter()
            .filter(|(s, _)| s.label == run.label)
            .collect();
        let n = mine.len() as f64;
        labels.push(LabelSummary {
            label: run.label.clone(),
            mean_final_objective: mine.iter().map(|(s, _)| s.final_objective).sum::<f64>() / n,
            mean_final_violation: mine.iter().map(|(s, _)| s.final_violation).sum::<f64>() / n,
            mean_constraint_checks: mine
                .iter()
                .map(|(s, _)| s.total_constraint_checks as f64)
                .sum::<f64>()
                / n,
            runs: mine.iter().map(|(s, _)| s.clone()).collect(),
        });
        curves.push((
            run.label.clone(),
            mine.iter().map(|(_, r)| r.trace.clone()).collect(),
        ));
    }

    let aggregate_path = plan.output_dir.join(AGGREGATE_FILE);
    write_aggregate(&aggregate_path, &curves)?;
    Ok(ExperimentSummary {
        labels,
        aggregate_path,
    })
}

/// Mean of every trace column across repetitions, per label and iteration.
/// Iterations missing from some repetitions average over those present.
fn write_aggregate(path: &Path, curves: &[(String, Vec<Vec<TraceRecord>>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    let mut header = vec!["label", "runs"];
    header.extend(TRACE_HEADER);
    w.write_record(&header).map_err(csv_error(path))?;
    for (label, traces) in curves {
        let mut rows: BTreeMap<usize, (usize, [f64; 8])> = BTreeMap::new();
        for trace in traces {
            for r in trace {
                let entry = rows.entry(r.iteration).or_insert((0, [0.0; 8]));
                entry.0 += 1;
                let values = [
                    r.checks as f64,
                    r.objective,
                    r.violation,
                    r.k_f as f64,
                    r.k_g as f64,
                    r.k_p as f64,
                    r.p_entropy,
                    r.elapsed_ns as f64,
                ];
                for (acc, v) in entry.1.iter_mut().zip(values) {
                    *acc += v;
                }
            }
        }
        for (iteration, (count, sums)) in rows {
            let mut record = vec![label.clone(), count.to_string(), iteration.to_string()];
            record.extend(sums.iter().map(|s| format_float(s / count as f64)));
            w.write_record(&record).map_err(csv_error(path))?;
        }
    }
    w.flush().map_err(io_error(path))
}
