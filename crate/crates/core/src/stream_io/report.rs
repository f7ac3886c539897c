//! JSON run reports.

use serde::{Deserialize, Serialize};

use crate::freq_elements::{FreqConfig, HeavyHitter};
use crate::rarity::RarityConfig;
use crate::similarity::SimilarityConfig;
use crate::stream::Timestamp;

/// The schema every [`RunReport`] validates against.
pub const RUN_REPORT_SCHEMA: &str = include_str!("../../schema/run_report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum TaskConfig {
    HeavyHitters(FreqConfig),
    Rarity(RarityConfig),
    Similarity(SimilarityConfig),
}

impl TaskConfig {
    pub fn window(&self) -> u64 {
        match self {
            TaskConfig::HeavyHitters(c) => c.window,
            TaskConfig::Rarity(c) => c.window,
            TaskConfig::Similarity(c) => c.window,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            TaskConfig::HeavyHitters(c) => c.delta,
            TaskConfig::Rarity(c) => c.delta,
            TaskConfig::Similarity(c) => c.delta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::HeavyHitters(_) => "heavy-hitters",
            TaskConfig::Rarity(_) => "rarity",
            TaskConfig::Similarity(_) => "similarity",
        }
    }

    pub(crate) fn with_seed(self, seed: u64) -> Self {
        match self {
            TaskConfig::HeavyHitters(c) => TaskConfig::HeavyHitters(FreqConfig { seed, ..c }),
            TaskConfig::Rarity(c) => TaskConfig::Rarity(RarityConfig { seed, ..c }),
            TaskConfig::Similarity(c) => TaskConfig::Similarity(SimilarityConfig { seed, ..c }),
        }
    }

    pub(crate) fn with_window(self, window: u64) -> Self {
        match self {
            TaskConfig::HeavyHitters(c) => TaskConfig::HeavyHitters(FreqConfig { window, ..c }),
            TaskConfig::Rarity(c) => TaskConfig::Rarity(RarityConfig { window, ..c }),
            TaskConfig::Similarity(c) => TaskConfig::Similarity(SimilarityConfig { window, ..c }),
        }
    }
}

/// One numeric comparison: `value <= bound` under the named guarantee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub guarantee: String,
    pub tolerance: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(guarantee: &str, tolerance: &str, value: f64, bound: f64) -> Self {
        Check {
            guarantee: guarantee.to_owned(),
            tolerance: tolerance.to_owned(),
            value,
            bound,
            passed: value <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum SketchOutput {
    HeavyHitters {
        reported: Vec<HeavyHitter>,
        l2_estimate: f64,
        threshold: f64,
    },
    Rarity {
        estimate: f64,
    },
    Similarity {
        estimate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum OracleOutput {
    HeavyHitters {
        /// `(id, n_i)` for every id with `n_i > γ·L2(W)`.
        heavy: Vec<(u64, u64)>,
        l2: f64,
    },
    Rarity {
        rarity: f64,
        distinct: usize,
    },
    Similarity {
        jaccard: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub timestamp: Timestamp,
    pub sketch: SketchOutput,
    pub oracle: OracleOutput,
    pub checks: Vec<Check>,
    pub counters: usize,
    pub buckets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub passed: bool,
    pub peak_counters: usize,
    pub peak_buckets: usize,
    pub checkpoints: Vec<CheckpointRecord>,
}

/// Per-guarantee pass counts over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeSummary {
    pub guarantee: String,
    pub tolerance: String,
    pub trials_passed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub trials_passed: usize,
    pub success_rate: f64,
    /// Success rate needed to pass: `1 - δ`.
    pub required_rate: f64,
    pub passed: bool,
    pub guarantees: Vec<GuaranteeSummary>,
    pub peak_counters: usize,
    pub peak_buckets: usize,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: TaskConfig,
    pub workload: String,
    pub checkpoints: String,
    pub trials: Vec<TrialRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl Summary {
    pub(crate) fn from_trials(trials: &[TrialRecord], delta: f64, wall_time_seconds: f64) -> Self {
        let passed = trials.iter().filter(|t| t.passed).count();
        let rate = if trials.is_empty() {
            0.0
        } else {
            passed as f64 / trials.len() as f64
        };
        let mut guarantees: Vec<GuaranteeSummary> = Vec::new();
        for trial in trials {
            let mut seen: Vec<(&str, &str, bool)> = Vec::new();
            for check in trial.checkpoints.iter().flat_map(|c| &c.checks) {
                match seen.iter_mut().find(|(g, _, _)| *g == check.guarantee) {
                    Some(entry) => entry.2 &= check.passed,
                    None => seen.push((&check.guarantee, &check.tolerance, check.passed)),
                }
            }
            for (guarantee, tolerance, ok) in seen {
                let index = match guarantees.iter().position(|g| g.guarantee == guarantee) {
                    Some(i) => i,
                    None => {
                        guarantees.push(GuaranteeSummary {
                            guarantee: guarantee.to_owned(),
                            tolerance: tolerance.to_owned(),
                            trials_passed: 0,
                        });
                        guarantees.len() - 1
                    }
                };
                guarantees[index].trials_passed += ok as usize;
            }
        }
        let required = 1.0 - delta;
        Summary {
            trials: trials.len(),
            trials_passed: passed,
            success_rate: rate,
            required_rate: required,
            passed: !trials.is_empty() && rate >= required - 1e-12,
            guarantees,
            peak_counters: trials.iter().map(|t| t.peak_counters).max().unwrap_or(0),
            peak_buckets: trials.iter().map(|t| t.peak_buckets).max().unwrap_or(0),
            wall_time_seconds,
        }
    }
}
