mod common;

use std::fs;

use heavytouch::experiment::{run_experiment, ExperimentPlan, LabeledConfig, TRACE_HEADER};
use heavytouch::{generate, Algorithm, GeneratorKind, GeneratorSpec, PairStructure};

fn plan(dir: &std::path::Path, jobs: usize) -> ExperimentPlan {
    let spec = GeneratorSpec::new(
        GeneratorKind::MonotonicRanking {
            d: 16,
            n: 300,
            sparsity: 4,
            pairs: PairStructure::Grid,
        },
        5,
    );
    let problem = generate(&spec).unwrap();
    let mut full = common::recommended_config(&problem, Algorithm::Full, 400);
    full.trace_every = 50;
    let mut light = common::recommended_config(&problem, Algorithm::Light, 400);
    light.trace_every = 50;
    ExperimentPlan {
        problem: spec,
        runs: vec![
            LabeledConfig {
                label: "full".into(),
                config: full,
            },
            LabeledConfig {
                label: "light k=4".into(),
                config: light,
            },
        ],
        repetitions: 3,
        output_dir: dir.to_path_buf(),
        seed: 17,
        jobs,
    }
}

fn read_rows(path: &std::path::Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn writes_one_file_per_run_plus_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&plan(dir.path(), 2)).unwrap();
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 7);
    assert_eq!(summary.labels.len(), 2);
    for label in &summary.labels {
        assert_eq!(label.runs.len(), 3);
        for run in &label.runs {
            let (header, rows) = read_rows(&run.path);
            assert_eq!(header, TRACE_HEADER);
            let mut last_checks = 0u64;
            for row in rows {
                row[0].parse::<usize>().unwrap();
                let checks = row[1].parse::<u64>().unwrap();
                assert!(checks >= last_checks);
                last_checks = checks;
                row[2].parse::<f64>().unwrap();
                row[3].parse::<f64>().unwrap();
                for c in &row[4..7] {
                    c.parse::<usize>().unwrap();
                }
                row[7].parse::<f64>().unwrap();
                row[8].parse::<u64>().unwrap();
            }
        }
    }
}

#[test]
fn aggregate_is_mean_of_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&plan(dir.path(), 0)).unwrap();
    let (header, rows) = read_rows(&summary.aggregate_path);
    assert_eq!(&header[..3], ["label", "runs", "iteration"]);
    let full = &summary.labels[0];
    let at_200: Vec<f64> = full
        .runs
        .iter()
        .map(|r| {
            let (_, rows) = read_rows(&r.path);
            rows.iter().find(|x| x[0] == "200").unwrap()[2]
                .parse()
                .unwrap()
        })
        .collect();
    let row = rows
        .iter()
        .find(|r| r[0] == "full" && r[2] == "200")
        .unwrap();
    assert_eq!(row[1], "3");
    let mean: f64 = row[4].parse().unwrap();
    assert!((mean - at_200.iter().sum::<f64>() / 3.0).abs() <= 1e-15 * mean.abs().max(1.0));
}

#[test]
fn rerun_is_byte_identical_regardless_of_parallelism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&plan(a.path(), 1)).unwrap();
    run_experiment(&plan(b.path(), 4)).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn repetitions_share_seeds_across_labels() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&plan(dir.path(), 0)).unwrap();
    let seeds = |i: usize| {
        summary.labels[i]
            .runs
            .iter()
            .map(|r| r.seed)
            .collect::<Vec<_>>()
    };
    assert_eq!(seeds(0), seeds(1));
}

#[test]
fn invalid_plans_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = plan(dir.path(), 1);
    p.repetitions = 0;
    assert!(run_experiment(&p).is_err());
    let mut p = plan(dir.path(), 1);
    p.runs[1].label = "full".into();
    assert!(run_experiment(&p).is_err());
}

#[test]
fn unwritable_output_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = run_experiment(&plan(&blocker.join("sub"), 1)).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}
