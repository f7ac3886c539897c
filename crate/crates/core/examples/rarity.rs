//! Fraction of window ids seen exactly once or twice.

use semismooth::oracle::ExactWindow;
use semismooth::rarity::{Rarity, RarityConfig};
use semismooth::stream_io::GeneratorSpec;

fn main() -> semismooth::Result<()> {
    let ids = "uniform:u=64,len=600,seed=2"
        .parse::<GeneratorSpec>()?
        .generate()?;
    for alpha in [1, 2] {
        let config = RarityConfig::new(alpha, 0.2, 0.1, 128, 64, 5);
        let mut sketch = Rarity::new(config)?;
        let mut exact = ExactWindow::new(config.window)?;
        println!("alpha = {alpha}, k = {}", config.k);
        for &id in &ids {
            let e = sketch.push(id)?;
            exact.push(e);
            if e.ts % 128 == 0 {
                println!(
                    "  t={:>4} estimate {:.3}, exact {:.3}",
                    e.ts,
                    sketch.query()?,
                    exact.rarity(alpha)?
                );
            }
        }
    }
    Ok(())
}
