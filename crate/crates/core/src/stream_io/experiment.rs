//! Seeded multi-trial experiments against the exact oracle.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::{overlap_pair, GeneratorSpec};
use super::report::{
    Check, CheckpointRecord, OracleOutput, RunReport, SketchOutput, Summary, TaskConfig,
    TrialRecord,
};
use crate::error::{Error, Result};
use crate::freq_elements::FrequentElements;
use crate::oracle::ExactWindow;
use crate::rarity::Rarity;
use crate::similarity::{Side, Similarity};
use crate::stats::slope;

/// Where a trial's ids come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Regenerated per trial with a trial-specific seed.
    Generated(GeneratorSpec),
    /// The same ids in every trial; only the sketch seeds change.
    Fixed(Vec<u64>),
}

impl Source {
    fn ids(&self, trial_seed: u64) -> Result<Vec<u64>> {
        match self {
            Source::Generated(spec) => spec.with_seed(mix(spec.seed, trial_seed)).generate(),
            Source::Fixed(ids) => Ok(ids.clone()),
        }
    }

    fn describe(&self) -> String {
        match self {
            Source::Generated(spec) => spec.to_string(),
            Source::Fixed(ids) => format!("fixed input of {} ids", ids.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    Stream(Source),
    /// Two streams for similarity.
    Pair(Source, Source),
    /// Similarity of a stream with an identical copy of itself.
    Twin(Source),
    /// Similarity of two constructed windows; see [`overlap_pair`].
    Overlap {
        m: u64,
        c: u64,
        warmup: u64,
    },
}

impl Workload {
    fn describe(&self) -> String {
        match self {
            Workload::Stream(s) => s.describe(),
            Workload::Pair(x, y) => format!("{} | {}", x.describe(), y.describe()),
            Workload::Twin(s) => format!("twin {}", s.describe()),
            Workload::Overlap { m, c, warmup } => format!("overlap:m={m},c={c},warmup={warmup}"),
        }
    }
}

/// When to compare against the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Checkpoints {
    /// Every `N/4` arrivals once the window is full.
    #[default]
    QuarterWindow,
    /// `count` evenly spaced positions after saturation, ending at the last arrival.
    Count(usize),
}

impl Checkpoints {
    /// Checkpoint timestamps for a stream of `length` arrivals. A stream
    /// shorter than the window is checked once at its end.
    pub fn positions(self, length: u64, window: u64) -> Vec<u64> {
        if length == 0 {
            return Vec::new();
        }
        if length <= window {
            return vec![length];
        }
        match self {
            Checkpoints::QuarterWindow => {
                let step = (window / 4).max(1);
                (0..)
                    .map(|i| window + i * step)
                    .take_while(|&t| t <= length)
                    .collect()
            }
            Checkpoints::Count(count) => {
                let count = count.max(1) as u64;
                let span = length - window;
                let mut ts: Vec<u64> = (1..=count).map(|j| window + j * span / count).collect();
                ts.dedup();
                ts
            }
        }
    }

    fn describe(self) -> String {
        match self {
            Checkpoints::QuarterWindow => "every N/4 after saturation".into(),
            Checkpoints::Count(n) => format!("{n} evenly spaced after saturation"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub task: TaskConfig,
    pub workload: Workload,
    pub trials: usize,
    pub checkpoints: Checkpoints,
}

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    mix(base, trial as u64 + 1)
}

const INCLUSION: &str = "inclusion";
const INCLUSION_TOL: &str = "0 misses among ids with n_i >= (1+eps)*gamma*L2(W)";
const EXCLUSION: &str = "exclusion";
const EXCLUSION_TOL: &str = "0 reported ids with n_i < (1-4*eps)*gamma*L2(W)";
const RARITY: &str = "rarity-error";
const RARITY_TOL: &str = "|rho_hat - rho| <= eps*rho + 1.5*eps";
const SIMILARITY: &str = "similarity-error";
const SIMILARITY_TOL: &str = "|sigma_hat - S| <= eps*S + 2*eps";

/// Feeds every trial to the sketch and the oracle, in parallel over trials.
pub fn run_experiment(experiment: &Experiment) -> Result<RunReport> {
    check_workload(&experiment.task, &experiment.workload)?;
    let base = match experiment.task {
        TaskConfig::HeavyHitters(c) => c.seed,
        TaskConfig::Rarity(c) => c.seed,
        TaskConfig::Similarity(c) => c.seed,
    };
    let started = Instant::now();
    let trials = (0..experiment.trials)
        .into_par_iter()
        .map(|trial| run_trial(experiment, trial, trial_seed(base, trial)))
        .collect::<Result<Vec<_>>>()?;
    let summary = Summary::from_trials(
        &trials,
        experiment.task.delta(),
        started.elapsed().as_secs_f64(),
    );
    Ok(RunReport {
        config: experiment.task,
        workload: experiment.workload.describe(),
        checkpoints: experiment.checkpoints.describe(),
        trials,
        summary,
    })
}

fn check_workload(task: &TaskConfig, workload: &Workload) -> Result<()> {
    let pair = !matches!(workload, Workload::Stream(_));
    match (task, pair) {
        (TaskConfig::Similarity(_), false) => {
            Err(Error::invalid("workload", "similarity needs two streams"))
        }
        (TaskConfig::HeavyHitters(_) | TaskConfig::Rarity(_), true) => Err(Error::invalid(
            "workload",
            "heavy hitters and rarity take a single stream",
        )),
        _ => Ok(()),
    }
}

fn run_trial(experiment: &Experiment, trial: usize, seed: u64) -> Result<TrialRecord> {
    let task = experiment.task.with_seed(seed);
    let mut record = TrialRecord {
        trial,
        seed,
        passed: true,
        peak_counters: 0,
        peak_buckets: 0,
        checkpoints: Vec::new(),
    };
    match (&task, &experiment.workload) {
        (TaskConfig::HeavyHitters(config), Workload::Stream(source)) => {
            let ids = source.ids(seed)?;
            let marks = experiment
                .checkpoints
                .positions(ids.len() as u64, config.window);
            let mut sketch = FrequentElements::new(*config)?;
            let mut oracle = ExactWindow::new(config.window)?;
            let mut next = marks.iter().peekable();
            for &id in &ids {
                let e = sketch.push(id)?;
                oracle.push(e);
                record.peak(sketch.counters(), sketch.histogram().len());
                if next.next_if_eq(&&e.ts).is_none() {
                    continue;
                }
                let report = sketch.query()?;
                let l2 = oracle.l2();
                let bar = config.gamma * l2;
                let reported = report.ids();
                let misses = oracle
                    .counts()
                    .iter()
                    .filter(|&(id, &n)| {
                        n as f64 >= (1.0 + config.eps) * bar && !reported.contains(id)
                    })
                    .count();
                let false_reports = reported
                    .iter()
                    .filter(|&&id| (oracle.frequency(id) as f64) < (1.0 - 4.0 * config.eps) * bar)
                    .count();
                let heavy = oracle
                    .heavy(config.gamma)
                    .into_iter()
                    .map(|id| (id, oracle.frequency(id)))
                    .collect();
                record.push(CheckpointRecord {
                    timestamp: e.ts,
                    sketch: SketchOutput::HeavyHitters {
                        reported: report.reported().copied().collect(),
                        l2_estimate: report.l2_estimate,
                        threshold: report.threshold,
                    },
                    oracle: OracleOutput::HeavyHitters { heavy, l2 },
                    checks: vec![
                        Check::at_most(INCLUSION, INCLUSION_TOL, misses as f64, 0.0),
                        Check::at_most(EXCLUSION, EXCLUSION_TOL, false_reports as f64, 0.0),
                    ],
                    counters: sketch.counters(),
                    buckets: sketch.histogram().len(),
                });
            }
        }
        (TaskConfig::Rarity(config), Workload::Stream(source)) => {
            let ids = source.ids(seed)?;
            let marks = experiment
                .checkpoints
                .positions(ids.len() as u64, config.window);
            let mut sketch = Rarity::new(*config)?;
            let mut oracle = ExactWindow::new(config.window)?;
            let mut next = marks.iter().peekable();
            for &id in &ids {
                let e = sketch.push(id)?;
                oracle.push(e);
                record.peak(sketch.counters(), sketch.histogram().len());
                if next.next_if_eq(&&e.ts).is_none() {
                    continue;
                }
                let estimate = sketch.query()?;
                let rarity = oracle.rarity(config.alpha)?;
                record.push(CheckpointRecord {
                    timestamp: e.ts,
                    sketch: SketchOutput::Rarity { estimate },
                    oracle: OracleOutput::Rarity {
                        rarity,
                        distinct: oracle.distinct(),
                    },
                    checks: vec![Check::at_most(
                        RARITY,
                        RARITY_TOL,
                        (estimate - rarity).abs(),
                        config.eps * rarity + 1.5 * config.eps,
                    )],
                    counters: sketch.counters(),
                    buckets: sketch.histogram().len(),
                });
            }
        }
        (TaskConfig::Similarity(config), workload) => {
            let (x, y) = match workload {
                Workload::Pair(x, y) => (x.ids(seed)?, y.ids(mix(seed, 0x59))?),
                Workload::Twin(x) => {
                    let ids = x.ids(seed)?;
                    (ids.clone(), ids)
                }
                Workload::Overlap { m, c, warmup } => {
                    overlap_pair(*m, *c, config.window, *warmup, config.universe, seed)?
                }
                Workload::Stream(_) => unreachable!("rejected by check_workload"),
            };
            let length = x.len().max(y.len()) as u64;
            let marks = experiment.checkpoints.positions(length, config.window);
            let mut sketch = Similarity::new(*config)?;
            let mut wx = ExactWindow::new(config.window)?;
            let mut wy = ExactWindow::new(config.window)?;
            let mut next = marks.iter().peekable();
            for t in 0..length as usize {
                if let Some(&id) = x.get(t) {
                    wx.push(sketch.push(Side::X, id)?);
                }
                if let Some(&id) = y.get(t) {
                    wy.push(sketch.push(Side::Y, id)?);
                }
                let buckets = sketch.side(Side::X).len() + sketch.side(Side::Y).len();
                record.peak(sketch.counters(), buckets);
                if next.next_if_eq(&&(t as u64 + 1)).is_none() {
                    continue;
                }
                let estimate = sketch.query()?;
                let jaccard = wx.similarity(&wy)?;
                record.push(CheckpointRecord {
                    timestamp: t as u64 + 1,
                    sketch: SketchOutput::Similarity { estimate },
                    oracle: OracleOutput::Similarity { jaccard },
                    checks: vec![Check::at_most(
                        SIMILARITY,
                        SIMILARITY_TOL,
                        (estimate - jaccard).abs(),
                        config.eps * jaccard + 2.0 * config.eps,
                    )],
                    counters: sketch.counters(),
                    buckets,
                });
            }
        }
        _ => unreachable!("rejected by check_workload"),
    }
    Ok(record)
}

impl TrialRecord {
    fn peak(&mut self, counters: usize, buckets: usize) {
        self.peak_counters = self.peak_counters.max(counters);
        self.peak_buckets = self.peak_buckets.max(buckets);
    }

    fn push(&mut self, checkpoint: CheckpointRecord) {
        self.passed &= checkpoint.checks.iter().all(|c| c.passed);
        self.checkpoints.push(checkpoint);
    }
}

/// Model memory at one window size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub window: u64,
    pub elements: u64,
    pub peak_counters: usize,
    pub peak_buckets: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: TaskConfig,
    pub workload: String,
    pub points: Vec<BenchPoint>,
    /// Least-squares slope of `ln(counters)` against `ln(ln N)`.
    pub exponent: f64,
    pub check: Check,
}

/// Runs one trial per window size and fits how the peak counter count grows
/// with `log N`. Each stream has `length_factor * N` arrivals.
pub fn run_bench(
    task: TaskConfig,
    source: &GeneratorSpec,
    windows: &[u64],
    length_factor: u64,
    max_exponent: f64,
) -> Result<BenchReport> {
    if windows.len() < 2 {
        return Err(Error::invalid(
            "window",
            "a scaling fit needs at least two sizes",
        ));
    }
    let mut points = Vec::with_capacity(windows.len());
    for &window in windows {
        let started = Instant::now();
        let spec = GeneratorSpec {
            length: length_factor * window,
            ..*source
        };
        let workload = match task {
            TaskConfig::Similarity(_) => Workload::Twin(Source::Generated(spec)),
            _ => Workload::Stream(Source::Generated(spec)),
        };
        let experiment = Experiment {
            task: task.with_window(window),
            workload,
            trials: 1,
            checkpoints: Checkpoints::Count(1),
        };
        let report = run_experiment(&experiment)?;
        points.push(BenchPoint {
            window,
            elements: spec.length,
            peak_counters: report.summary.peak_counters,
            peak_buckets: report.summary.peak_buckets,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.window as f64).ln().ln()).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| (p.peak_counters as f64).ln())
        .collect();
    let exponent = slope(&xs, &ys);
    Ok(BenchReport {
        config: task,
        workload: source.to_string(),
        points,
        exponent,
        check: Check::at_most(
            "memory-scaling",
            "fit exponent of counters vs log N",
            exponent,
            max_exponent,
        ),
    })
}
