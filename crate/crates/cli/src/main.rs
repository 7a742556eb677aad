#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod settings;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use heavytouch::distribution::staleness_bound;
use heavytouch::projections::project_ordering;
use heavytouch::solvers::{recommended_eta_full, recommended_eta_light, recommended_k};
use heavytouch::{
    gamma_for_known_family, generate, run_experiment, solve, ConstraintFamilyKind, Domain,
    ExperimentPlan, GammaEstimate, GammaProvenance, LabeledConfig, ProblemMetadata,
};

use settings::{load_config_file, Settings};

const DEFAULT_OUT_DIR: &str = "heavytouch-results";

#[derive(Debug, Parser)]
#[command(
    name = "heavytouch",
    version,
    about = "Stochastic optimization under many constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solver on a generated problem and print a summary.
    Solve(RunArgs),
    /// Run several solvers with repetitions and write CSV traces.
    Compare(RunArgs),
    /// Project a vector onto w_1 <= w_2 <= ... <= w_d.
    Project(ProjectArgs),
    /// Print recommended k, step sizes, gamma and the staleness bound.
    Formulas(FormulaArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file with the same keys as the long flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    /// Whitespace-separated numbers; `-` reads stdin.
    input: PathBuf,
    /// Output file; defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FormulaArgs {
    /// Number of constraints.
    #[arg(long)]
    m: usize,
    /// Iterations.
    #[arg(long = "T")]
    t: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Subset size for the staleness bound; defaults to the recommended k.
    #[arg(long)]
    k: Option<usize>,
    /// Lipschitz constant of f.
    #[arg(long, default_value_t = 1.0)]
    lf: f64,
    /// Lipschitz constant of each constraint.
    #[arg(long, default_value_t = 1.0)]
    lg: f64,
    /// Bound on stochastic gradient norms of f.
    #[arg(long, default_value_t = 1.0)]
    gf: f64,
    /// Bound on constraint subgradient norms.
    #[arg(long, default_value_t = 1.0)]
    gg: f64,
    /// Domain diameter (values below 1 are raised to 1).
    #[arg(long, default_value_t = 1.0)]
    diameter: f64,
    /// Boundary-gradient bound used for gamma when no family is given.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Known constraint family for gamma: box or ordering (with --d).
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    d: Option<usize>,
}

/// Errors are split by exit code: bad input is a usage error.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn usage<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn runtime<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Runtime)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Project(args) => cmd_project(args),
        Command::Formulas(args) => cmd_formulas(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            eprintln!("run with --help for usage");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn resolve(args: RunArgs) -> Result<Settings, Failure> {
    match args.config {
        Some(path) => {
            let file = usage(load_config_file(&path))?;
            Ok(args.settings.merged_over(file))
        }
        None => Ok(args.settings),
    }
}

fn cmd_solve(args: RunArgs) -> Outcome {
    let s = resolve(args)?;
    let solvers = usage(s.solvers())?;
    let [algorithm] = solvers[..] else {
        return Err(Failure::Usage(anyhow::anyhow!(
            "solve takes exactly one --solver"
        )));
    };
    let spec = usage(s.generator())?;
    let problem = runtime(generate(&spec).context("generating problem"))?;
    let config = usage(s.config(&problem, algorithm))?;
    let result = runtime(solve(&problem, &config).context("solver failed"))?;
    if let Some(path) = &s.out {
        runtime(
            heavytouch::experiment::write_trace_csv(path, &result.trace).context("writing trace"),
        )?;
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = io::stdout().lock();
    let lines = [
        format!("algorithm={}", result.algorithm),
        format!("constraints={}", problem.constraints.len()),
        format!("iterations={}", config.total_iterations()),
        format!("gamma={}", config.gamma),
        format!("eta_w={}", config.eta_w),
        format!("eta_p={}", config.eta_p),
        format!("final_objective={}", result.final_objective),
        format!("final_violation={}", result.final_violation),
        format!("constraint_checks={}", result.total_constraint_checks),
        format!("objective_samples={}", result.total_objective_samples),
        format!("projection_calls={}", result.projection_calls),
        format!("max_staleness={}", result.max_staleness),
        format!("wall_time_s={:.6}", result.wall_time.as_secs_f64()),
    ];
    runtime(
        lines
            .iter()
            .try_for_each(|l| writeln!(out, "{l}"))
            .context("writing summary"),
    )
}

fn cmd_compare(args: RunArgs) -> Outcome {
    let s = resolve(args)?;
    let solvers = usage(s.solvers())?;
    let spec = usage(s.generator())?;
    let problem = runtime(generate(&spec).context("generating problem"))?;
    let mut runs = Vec::new();
    for algorithm in solvers {
        let config = usage(s.config(&problem, algorithm))?;
        runs.push(LabeledConfig {
            label: algorithm.name().to_string(),
            config,
        });
    }
    let plan = ExperimentPlan {
        problem: spec,
        runs,
        repetitions: s.reps.unwrap_or(1),
        output_dir: s.out.clone().unwrap_or_else(|| DEFAULT_OUT_DIR.into()),
        seed: s.seed(),
        jobs: s.jobs.unwrap_or(0),
    };
    usage(plan.validate().map_err(anyhow::Error::from))?;
    let summary = runtime(run_experiment(&plan).context("experiment failed"))?;
    println!("label,runs,mean_final_objective,mean_final_violation,mean_constraint_checks");
    for l in &summary.labels {
        println!(
            "{},{},{},{},{}",
            l.label,
            l.runs.len(),
            l.mean_final_objective,
            l.mean_final_violation,
            l.mean_constraint_checks
        );
        for r in &l.runs {
            for w in &r.warnings {
                eprintln!("warning: {} rep {}: {w}", l.label, r.repetition);
            }
        }
    }
    eprintln!("aggregate written to {}", summary.aggregate_path.display());
    Ok(())
}

fn parse_vector(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .with_context(|| format!("'{tok}' is not a number"))
        })
        .collect()
}

fn format_vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    parts.join(" ")
}

fn cmd_project(args: ProjectArgs) -> Outcome {
    let text = runtime(if args.input.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map(|_| s)
            .context("reading stdin")
    } else {
        fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))
    })?;
    let target = runtime(parse_vector(&text))?;
    let projected = runtime(project_ordering(&target).map_err(anyhow::Error::from))?;
    let line = format_vector(&projected) + "\n";
    runtime(match &args.out {
        Some(path) => fs::write(path, line).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .write_all(line.as_bytes())
            .context("writing stdout"),
    })
}

fn cmd_formulas(a: FormulaArgs) -> Outcome {
    let meta = ProblemMetadata {
        lipschitz_f: a.lf,
        lipschitz_g: a.lg,
        grad_bound_f: a.gf,
        grad_bound_g: a.gg,
        lambda: 0.0,
    };
    usage(meta.validate().map_err(anyhow::Error::from))?;
    let gamma = match (a.family.as_deref(), a.d) {
        (None, _) => {
            if !(a.rho > 0.0) {
                return Err(Failure::Usage(anyhow::anyhow!("--rho must be positive")));
            }
            GammaEstimate::from_rho(a.rho, a.lf, GammaProvenance::UserSupplied)
        }
        (Some(name), Some(d)) => {
            let family = match name {
                "box" => ConstraintFamilyKind::Box { d },
                "ordering" => ConstraintFamilyKind::Ordering { d },
                other => {
                    return Err(Failure::Usage(anyhow::anyhow!(
                        "unknown family '{other}'; expected box or ordering"
                    )))
                }
            };
            usage(gamma_for_known_family(family, a.lf).map_err(anyhow::Error::from))?
        }
        (Some(_), None) => return Err(Failure::Usage(anyhow::anyhow!("--family needs --d"))),
    };
    let domain = usage(Domain::cube(1, 0.0, a.diameter).map_err(anyhow::Error::from))?;
    let k = usage(recommended_k(a.m, a.t, a.delta).map_err(anyhow::Error::from))?;
    let eta_light = usage(
        recommended_eta_light(&meta, &domain, a.m, a.t, gamma.gamma).map_err(anyhow::Error::from),
    )?;
    let eta_full =
        usage(recommended_eta_full(&meta, &domain, a.t, gamma.gamma).map_err(anyhow::Error::from))?;
    let k_stale = a.k.unwrap_or(k);
    let bound = usage(staleness_bound(a.m, k_stale, a.t, a.delta).map_err(anyhow::Error::from))?;
    println!("k={k}");
    println!("eta_light={eta_light}");
    println!("eta_full={eta_full}");
    println!("rho={}", gamma.rho);
    println!("gamma={}", gamma.gamma);
    println!("staleness_bound={bound} (k={k_stale})");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_round_trip_as_text() {
        let v = parse_vector(" 3\n1\t2.5 ").unwrap();
        assert_eq!(v, vec![3.0, 1.0, 2.5]);
        assert_eq!(format_vector(&[2.0, 2.0, -0.5]), "2 2 -0.5");
        assert!(parse_vector("1 x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
