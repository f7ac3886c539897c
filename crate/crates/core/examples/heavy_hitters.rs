//! Sliding-window L2 heavy hitters on a Zipf stream whose hot ids change
//! halfway through.

use semismooth::freq_elements::{FreqConfig, FrequentElements};
use semismooth::oracle::ExactWindow;
use semismooth::stream_io::GeneratorSpec;

fn main() -> semismooth::Result<()> {
    let config = FreqConfig {
        gamma: 0.2,
        eps: 0.2,
        delta: 0.1,
        window: 1024,
        universe: 4000,
        seed: 11,
    };
    let mut sketch = FrequentElements::new(config)?;
    let mut exact = ExactWindow::new(config.window)?;
    let first = "zipf:s=1.3,u=2000,len=3000,seed=1"
        .parse::<GeneratorSpec>()?
        .generate()?;
    // the second half uses ids 2001..=4000
    let second = first.iter().map(|id| id + 2000);

    for id in first.iter().copied().chain(second) {
        let e = sketch.push(id)?;
        exact.push(e);
        if e.ts % 1500 == 0 {
            let report = sketch.query()?;
            println!(
                "t={:>5} L2 estimate {:.1} (exact {:.1}), {} buckets",
                e.ts,
                report.l2_estimate,
                exact.l2(),
                report.bucket_count
            );
            for h in report.reported() {
                println!(
                    "    id {:>5}: estimate {:>6.1}, true {}",
                    h.id,
                    h.estimate,
                    exact.frequency(h.id)
                );
            }
            println!("    exact heavy set: {:?}", exact.heavy(config.gamma));
        }
    }
    Ok(())
}
