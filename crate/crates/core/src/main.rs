use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use semismooth::freq_elements::FreqConfig;
use semismooth::rarity::{functions_for, RarityConfig};
use semismooth::similarity::SimilarityConfig;
use semismooth::stream_io::{
    ingest_file, run_bench, run_experiment, verify_histograms, Checkpoints, Experiment, Format,
    GeneratorSpec, Source, TaskConfig, Workload,
};
use semismooth::{Error, Result};

#[derive(Parser)]
#[command(
    version,
    about = "Sliding-window heavy hitters, rarity and similarity sketches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// L2 heavy hitters over the last N elements.
    HeavyHitters {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.2)]
        gamma: f64,
    },
    /// Fraction of distinct window ids occurring exactly alpha times.
    Rarity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        alpha: u64,
        /// Number of min-hash functions (default: the smallest admissible).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Jaccard similarity of the windows of two streams.
    Similarity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<usize>,
        /// Generator for the second stream (default: a copy of the first).
        #[arg(long, value_name = "SPEC")]
        gen_y: Option<GeneratorSpec>,
        #[arg(long, value_name = "PATH")]
        input_y: Option<PathBuf>,
        /// Constructed windows with m ids each, c shared: `m,c`.
        #[arg(long, value_name = "M,C")]
        overlap: Option<String>,
    },
    /// Peak model memory of one task as the window doubles.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Task::HeavyHitters)]
        task: Task,
        #[arg(long, default_value_t = 0.2)]
        gamma: f64,
        #[arg(long, default_value_t = 1)]
        alpha: u64,
        #[arg(long)]
        k: Option<usize>,
        /// Number of doublings of the starting window.
        #[arg(long, default_value_t = 4)]
        doublings: u32,
        /// Stream length as a multiple of the window.
        #[arg(long, default_value_t = 2)]
        length_factor: u64,
        #[arg(long, default_value_t = 1.3)]
        max_exponent: f64,
    },
    /// Oracle-mode smooth-histogram invariants (sandwich, bucket bound).
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    HeavyHitters,
    Rarity,
    Similarity,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1024)]
    window: u64,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Synthetic stream, e.g. `zipf:s=1.2,u=10000,len=20000`.
    #[arg(
        long,
        value_name = "SPEC",
        default_value = "zipf:s=1.2,u=10000,len=20000"
    )]
    gen: GeneratorSpec,
    /// Read ids from a file instead of generating them.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    format: Format,
    /// Universe size; defaults to the generator's, or the largest input id.
    #[arg(long)]
    universe: Option<u64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Evenly spaced checkpoints after saturation (default: every N/4).
    #[arg(long)]
    checkpoints: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl Common {
    fn source(&self, input: Option<&PathBuf>, gen: GeneratorSpec) -> Result<(Source, u64)> {
        match input {
            Some(path) => {
                let ids = ingest_file(path, self.format, None)?;
                let max = ids.iter().copied().max().unwrap_or(1);
                Ok((Source::Fixed(ids), max))
            }
            None => Ok((Source::Generated(gen), gen.universe)),
        }
    }

    fn checkpoints(&self) -> Checkpoints {
        self.checkpoints
            .map_or(Checkpoints::QuarterWindow, Checkpoints::Count)
    }

    fn emit<T: Serialize>(&self, report: &T) -> Result<()> {
        let json = serde_json::to_string_pretty(report)?;
        match &self.out {
            Some(path) => fs::write(path, json + "\n").map_err(|source| Error::Io {
                path: path.clone(),
                source,
            }),
            None => {
                println!("{json}");
                Ok(())
            }
        }
    }
}

fn parse_overlap(text: &str) -> Result<(u64, u64)> {
    let bad = || Error::Parse {
        location: format!("--overlap `{text}`"),
        reason: "expected m,c".into(),
    };
    let (m, c) = text.split_once(',').ok_or_else(bad)?;
    Ok((
        m.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    ))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::HeavyHitters { common, gamma } => {
            let (source, u) = common.source(common.input.as_ref(), common.gen)?;
            let task = TaskConfig::HeavyHitters(FreqConfig {
                gamma,
                eps: common.eps,
                delta: common.delta,
                window: common.window,
                universe: common.universe.unwrap_or(u),
                seed: common.seed,
            });
            experiment(&common, task, Workload::Stream(source))
        }
        Command::Rarity { common, alpha, k } => {
            let (source, u) = common.source(common.input.as_ref(), common.gen)?;
            let mut config = RarityConfig::new(
                alpha,
                common.eps,
                common.delta,
                common.window,
                common.universe.unwrap_or(u),
                common.seed,
            );
            config.k = k.unwrap_or(config.k);
            experiment(
                &common,
                TaskConfig::Rarity(config),
                Workload::Stream(source),
            )
        }
        Command::Similarity {
            common,
            k,
            gen_y,
            input_y,
            overlap,
        } => {
            let (workload, u) = match overlap {
                Some(text) => {
                    let (m, c) = parse_overlap(&text)?;
                    let u = common.universe.unwrap_or(2 * m);
                    (
                        Workload::Overlap {
                            m,
                            c,
                            warmup: 3 * common.window,
                        },
                        u,
                    )
                }
                None => {
                    let (x, ux) = common.source(common.input.as_ref(), common.gen)?;
                    if gen_y.is_none() && input_y.is_none() {
                        (Workload::Twin(x), ux)
                    } else {
                        let (y, uy) =
                            common.source(input_y.as_ref(), gen_y.unwrap_or(common.gen))?;
                        (Workload::Pair(x, y), ux.max(uy))
                    }
                }
            };
            let mut config = SimilarityConfig::new(
                common.eps,
                common.delta,
                common.window,
                common.universe.unwrap_or(u),
                common.seed,
            );
            config.k = k.unwrap_or(config.k);
            experiment(&common, TaskConfig::Similarity(config), workload)
        }
        Command::Bench {
            common,
            task,
            gamma,
            alpha,
            k,
            doublings,
            length_factor,
            max_exponent,
        } => {
            let u = common.universe.unwrap_or(common.gen.universe);
            let (eps, delta, window, seed) = (common.eps, common.delta, common.window, common.seed);
            let task = match task {
                Task::HeavyHitters => TaskConfig::HeavyHitters(FreqConfig {
                    gamma,
                    eps,
                    delta,
                    window,
                    universe: u,
                    seed,
                }),
                Task::Rarity => TaskConfig::Rarity(RarityConfig {
                    k: k.unwrap_or(functions_for(eps, delta)),
                    ..RarityConfig::new(alpha, eps, delta, window, u, seed)
                }),
                Task::Similarity => TaskConfig::Similarity(SimilarityConfig {
                    k: k.unwrap_or(functions_for(eps, delta)),
                    ..SimilarityConfig::new(eps, delta, window, u, seed)
                }),
            };
            let windows: Vec<u64> = (0..=doublings).map(|i| window << i).collect();
            let report = run_bench(task, &common.gen, &windows, length_factor, max_exponent)?;
            eprintln!(
                "bench {}: counter exponent vs log N = {:.3} (bound {})",
                task.name(),
                report.exponent,
                max_exponent
            );
            common.emit(&report)?;
            Ok(report.check.passed)
        }
        Command::Verify { common } => {
            let ids = match &common.input {
                Some(path) => ingest_file(path, common.format, None)?,
                None => common.gen.with_seed(common.seed).generate()?,
            };
            let report = verify_histograms(&ids, common.window, common.eps)?;
            eprintln!(
                "verify: {} steps, {} l2 and {} distinct violations",
                report.elements,
                report.l2.violations(),
                report.distinct.violations()
            );
            common.emit(&report)?;
            Ok(report.passed)
        }
    }
}

fn experiment(common: &Common, task: TaskConfig, workload: Workload) -> Result<bool> {
    let report = run_experiment(&Experiment {
        task,
        workload,
        trials: common.trials,
        checkpoints: common.checkpoints(),
    })?;
    let s = &report.summary;
    eprintln!(
        "{}: {}/{} trials passed (required rate {:.3}), peak {} counters, {} buckets, {:.2}s",
        task.name(),
        s.trials_passed,
        s.trials,
        s.required_rate,
        s.peak_counters,
        s.peak_buckets,
        s.wall_time_seconds
    );
    common.emit(&report)?;
    Ok(s.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
