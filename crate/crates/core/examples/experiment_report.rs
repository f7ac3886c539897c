//! A seeded multi-trial experiment checked against the oracle, printed as the
//! JSON report the command-line tool writes.

use semismooth::rarity::RarityConfig;
use semismooth::stream_io::{
    run_experiment, Checkpoints, Experiment, Source, TaskConfig, Workload,
};

fn main() -> semismooth::Result<()> {
    let experiment = Experiment {
        task: TaskConfig::Rarity(RarityConfig::new(1, 0.2, 0.1, 64, 32, 0)),
        workload: Workload::Stream(Source::Generated("uniform:u=32,len=256".parse()?)),
        trials: 10,
        checkpoints: Checkpoints::QuarterWindow,
    };
    let mut report = run_experiment(&experiment)?;
    let summary = report.summary.clone();
    // keep the printout short: one trial in full, the rest in the summary
    report.trials.truncate(1);
    println!("{}", report.to_json()?);
    eprintln!(
        "{}/{} trials passed, success rate {:.2} (needs {:.2})",
        summary.trials_passed, summary.trials, summary.success_rate, summary.required_rate
    );
    Ok(())
}
