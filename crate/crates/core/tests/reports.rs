use std::process::Command;

use semismooth::freq_elements::FreqConfig;
use semismooth::rarity::RarityConfig;
use semismooth::similarity::SimilarityConfig;
use semismooth::stream_io::{
    run_experiment, write_ids, Checkpoints, Experiment, Format, GeneratorSpec, RunReport, Source,
    TaskConfig, Workload, RUN_REPORT_SCHEMA,
};

fn validator() -> jsonschema::Validator {
    let schema: serde_json::Value = serde_json::from_str(RUN_REPORT_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(report: &RunReport) {
    let value = serde_json::to_value(report).unwrap();
    let v = validator();
    let errors: Vec<String> = v.iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn experiments() -> Vec<Experiment> {
    let zipf: GeneratorSpec = "zipf:s=1.2,u=500,len=600".parse().unwrap();
    vec![
        Experiment {
            task: TaskConfig::HeavyHitters(FreqConfig {
                gamma: 0.3,
                eps: 0.2,
                delta: 0.1,
                window: 256,
                universe: 500,
                seed: 1,
            }),
            workload: Workload::Stream(Source::Generated(zipf)),
            trials: 2,
            checkpoints: Checkpoints::QuarterWindow,
        },
        Experiment {
            task: TaskConfig::Rarity(RarityConfig::new(2, 0.2, 0.1, 64, 500, 2)),
            workload: Workload::Stream(Source::Generated(zipf)),
            trials: 3,
            checkpoints: Checkpoints::Count(3),
        },
        Experiment {
            task: TaskConfig::Similarity(SimilarityConfig::new(0.2, 0.1, 64, 500, 3)),
            workload: Workload::Pair(
                Source::Generated(zipf),
                Source::Generated(zipf.with_seed(99)),
            ),
            trials: 2,
            checkpoints: Checkpoints::QuarterWindow,
        },
    ]
}

#[test]
fn reports_validate_against_schema() {
    for experiment in experiments() {
        assert_valid(&run_experiment(&experiment).unwrap());
    }
}

#[test]
fn schema_rejects_malformed_reports() {
    let report = run_experiment(&experiments()[1]).unwrap();
    let v = validator();
    let mut value = serde_json::to_value(&report).unwrap();
    value["summary"]["success_rate"] = 1.5.into();
    assert!(!v.is_valid(&value));
    let mut value = serde_json::to_value(&report).unwrap();
    value["trials"][0]["checkpoints"][0]["checks"][0]
        .as_object_mut()
        .unwrap()
        .remove("tolerance");
    assert!(!v.is_valid(&value));
}

#[test]
fn every_comparison_names_guarantee_and_tolerance() {
    for experiment in experiments() {
        let report = run_experiment(&experiment).unwrap();
        let checks: Vec<_> = report
            .trials
            .iter()
            .flat_map(|t| &t.checkpoints)
            .flat_map(|c| &c.checks)
            .collect();
        assert!(!checks.is_empty());
        for check in checks {
            assert!(!check.guarantee.is_empty() && !check.tolerance.is_empty());
            assert_eq!(check.passed, check.value <= check.bound);
        }
    }
}

#[test]
fn success_rate_is_exact_ratio() {
    let report = run_experiment(&experiments()[1]).unwrap();
    let s = &report.summary;
    let passed = report.trials.iter().filter(|t| t.passed).count();
    assert_eq!(s.trials_passed, passed);
    assert_eq!(s.success_rate, passed as f64 / report.trials.len() as f64);
    for t in &report.trials {
        let all = t
            .checkpoints
            .iter()
            .flat_map(|c| &c.checks)
            .all(|c| c.passed);
        assert_eq!(t.passed, all);
    }
}

#[test]
fn reports_are_deterministic() {
    for experiment in experiments() {
        let mut a = run_experiment(&experiment).unwrap();
        let mut b = run_experiment(&experiment).unwrap();
        a.summary.wall_time_seconds = 0.0;
        b.summary.wall_time_seconds = 0.0;
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semismooth"))
}

#[test]
fn cli_writes_valid_report_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let status = cli()
        .args([
            "rarity",
            "--window",
            "64",
            "--gen",
            "uniform:u=32,len=300",
            "--trials",
            "4",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid(&report);
    assert_eq!(report.trials.len(), 4);
    assert_eq!(report.summary.passed, status.success());
}

#[test]
fn cli_reads_both_input_formats() {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<u64> = (0..500).map(|i| 1 + (i * 7919) % 40).collect();
    let mut reports = Vec::new();
    for format in [Format::Text, Format::U64le] {
        let path = dir.path().join(format!("ids.{format}"));
        std::fs::write(&path, write_ids(&ids, format)).unwrap();
        let output = cli()
            .args(["heavy-hitters", "--window", "100", "--gamma", "0.3"])
            .arg("--input")
            .arg(&path)
            .args(["--format", &format.to_string()])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
        let mut report: RunReport = serde_json::from_slice(&output.stdout).unwrap();
        report.summary.wall_time_seconds = 0.0;
        reports.push(report);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn cli_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "1\n2\nthree\n").unwrap();
    let output = cli()
        .arg("rarity")
        .arg("--input")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 3"));

    let output = cli().args(["similarity", "--eps", "1.5"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn cli_verify_and_similarity_twin() {
    let status = cli()
        .args([
            "verify",
            "--window",
            "64",
            "--gen",
            "alternating:b=30,u=100,len=1500",
        ])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let output = cli()
        .args([
            "similarity",
            "--window",
            "64",
            "--gen",
            "zipf:u=100,len=300",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: RunReport = serde_json::from_slice(&output.stdout).unwrap();
    assert!(report.trials[0]
        .checkpoints
        .iter()
        .all(|c| c.sketch == semismooth::stream_io::SketchOutput::Similarity { estimate: 1.0 }));
}
