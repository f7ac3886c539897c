//! Fast-AMS estimate of the L2 norm of a whole stream against the exact value.

use semismooth::hash::seeded_rng;
use semismooth::l2_sketch::{L2Params, L2Sketch};
use semismooth::oracle::l2_of;
use semismooth::stream_io::GeneratorSpec;
use semismooth::Universe;
use std::collections::HashMap;

fn main() -> semismooth::Result<()> {
    let ids = "zipf:s=1.1,u=5000,len=50000"
        .parse::<GeneratorSpec>()?
        .generate()?;
    let params = L2Params::new(0.1, 0.05)?;
    println!("{} groups x {} counters", params.groups, params.width);

    let mut sketch = L2Sketch::new(params, Universe::new(5000)?, &mut seeded_rng(1, 0));
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for &id in &ids {
        sketch.update(id)?;
        *counts.entry(id).or_default() += 1;
    }
    let exact = l2_of(counts.values().copied());
    let est = sketch.estimate();
    println!(
        "exact L2 {exact:.1}, estimate {est:.1}, relative error {:.4}",
        (est - exact).abs() / exact
    );
    Ok(())
}
