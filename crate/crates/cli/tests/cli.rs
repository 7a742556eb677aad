use std::fs;
use std::process::{Command, Output};

fn heavytouch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heavytouch"))
        .args(args)
        .env_remove("HEAVYTOUCH_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing {key} in {text}"))
}

#[test]
fn help_exits_zero() {
    for args in [
        &["--help"][..],
        &["solve", "--help"],
        &["compare", "--help"],
    ] {
        let o = heavytouch(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = heavytouch(&["solve", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(heavytouch(&[]).status.code(), Some(1));
}

#[test]
fn bad_values_are_usage_errors() {
    let unknown_solver = heavytouch(&["solve", "--solver", "heavy", "--T", "10"]);
    assert_eq!(unknown_solver.status.code(), Some(1));
    let two = heavytouch(&["solve", "--solver", "full,light", "--T", "10"]);
    assert_eq!(two.status.code(), Some(1));
    let bad_grid = heavytouch(&["solve", "--problem", "ranking", "--d", "10", "--T", "10"]);
    assert_eq!(bad_grid.status.code(), Some(1));
}

#[test]
fn formulas_prints_recommended_k() {
    let o = heavytouch(&["formulas", "--m", "100", "--T", "1000000", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(value(&text, "k"), "81");
    for key in ["eta_light", "eta_full", "gamma", "staleness_bound"] {
        let v = value(&text, key);
        let number: f64 = v.split_whitespace().next().unwrap().parse().unwrap();
        assert!(number > 0.0, "{key}={v}");
    }
}

#[test]
fn formulas_known_family_gamma() {
    let o = heavytouch(&[
        "formulas", "--m", "4", "--T", "100", "--family", "ordering", "--d", "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let gamma: f64 = value(&stdout(&o), "gamma").parse().unwrap();
    assert!((gamma - 4.04).abs() < 1e-12);
}

#[test]
fn project_file_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("v.txt");
    fs::write(&input, "3 1 2\n").unwrap();
    let o = heavytouch(&["project", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "2 2 2\n");

    let output = dir.path().join("out.txt");
    let o = heavytouch(&[
        "project",
        input.to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(output).unwrap(), "2 2 2\n");
}

#[test]
fn project_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(
        heavytouch(&["project", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let garbage = dir.path().join("bad.txt");
    fs::write(&garbage, "1 two 3").unwrap();
    assert_eq!(
        heavytouch(&["project", garbage.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn solve_writes_summary_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = heavytouch(&[
        "solve",
        "--solver",
        "light",
        "--problem",
        "ordering-regression",
        "--d",
        "8",
        "--T",
        "2000",
        "--k",
        "2",
        "--trace-every",
        "500",
        "--seed",
        "4",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert_eq!(value(&text, "algorithm"), "light");
    assert_eq!(value(&text, "constraints"), "7");
    let violation: f64 = value(&text, "final_violation").parse().unwrap();
    assert!(violation <= 1e-6);
    let csv = fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,checks,objective,violation,k_f,k_g,k_p,p_entropy,elapsed_ns"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn seed_env_var_is_a_fallback() {
    let args = [
        "solve",
        "--solver",
        "full",
        "--problem",
        "box-qp",
        "--d",
        "4",
        "--T",
        "300",
    ];
    let run = |seed: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_heavytouch"));
        cmd.args(args).args(extra);
        match seed {
            Some(s) => cmd.env("HEAVYTOUCH_SEED", s),
            None => cmd.env_remove("HEAVYTOUCH_SEED"),
        };
        let o = cmd.output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        value(&stdout(&o), "final_objective").to_string()
    };
    assert_eq!(run(Some("9"), &[]), run(None, &["--seed", "9"]));
    assert_eq!(
        run(Some("1"), &["--seed", "9"]),
        run(None, &["--seed", "9"])
    );
    assert_ne!(run(None, &["--seed", "1"]), run(None, &["--seed", "9"]));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        r#"{"solver": "full", "problem": "box-qp", "d": 4, "T": 200, "eta-w": 0.25, "seed": 2}"#,
    )
    .unwrap();
    let from_file = heavytouch(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0));
    let text = stdout(&from_file);
    assert_eq!(value(&text, "eta_w"), "0.25");
    assert_eq!(value(&text, "iterations"), "200");

    let overridden = heavytouch(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--eta-w",
        "0.5",
    ]);
    assert_eq!(value(&stdout(&overridden), "eta_w"), "0.5");

    fs::write(&config, r#"{"solvr": "full"}"#).unwrap();
    let bad = heavytouch(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn compare_writes_runs_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let o = heavytouch(&[
        "compare",
        "--solver",
        "full,practical",
        "--problem",
        "ranking",
        "--d",
        "16",
        "--n",
        "500",
        "--T",
        "1000",
        "--reps",
        "2",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let mut files: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        [
            "aggregate.csv",
            "full_rep0.csv",
            "full_rep1.csv",
            "practical_rep0.csv",
            "practical_rep1.csv"
        ]
    );
    let table = stdout(&o);
    assert!(table.lines().any(|l| l.starts_with("full,2,")));
    assert!(table.lines().any(|l| l.starts_with("practical,2,")));
}

#[test]
fn compare_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = heavytouch(&[
            "compare",
            "--solver",
            "light,mid",
            "--problem",
            "box-qp",
            "--d",
            "6",
            "--T",
            "400",
            "--k",
            "3",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        fs::read(out.join("aggregate.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
