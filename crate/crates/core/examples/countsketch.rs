//! CountSketch top-k on a skewed stream, compared with the true counts.

use std::collections::HashMap;

use semismooth::countsketch::{CountSketch, CountSketchParams};
use semismooth::hash::seeded_rng;
use semismooth::stream_io::GeneratorSpec;
use semismooth::Universe;

fn main() -> semismooth::Result<()> {
    let ids = "zipf:s=1.2,u=10000,len=10000,seed=3"
        .parse::<GeneratorSpec>()?
        .generate()?;
    let params = CountSketchParams::new(0.2, 0.2, 0.1, ids.len() as u64)?;
    let mut sketch = CountSketch::new(params, Universe::new(10_000)?, &mut seeded_rng(3, 0));
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for &id in &ids {
        sketch.update(id)?;
        *counts.entry(id).or_default() += 1;
    }
    println!("k = {}, b = {}, t = {}", params.k, params.b, params.t);
    println!("{:>6} {:>10} {:>8}", "id", "estimate", "true");
    for c in sketch.topk().iter().take(10) {
        println!(
            "{:>6} {:>10.1} {:>8}",
            c.id,
            c.estimate,
            counts.get(&c.id).unwrap_or(&0)
        );
    }
    Ok(())
}
