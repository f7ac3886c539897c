use semismooth::distinct_sketch::{DistinctParams, DistinctSketch};
use semismooth::hash::seeded_rng;
use semismooth::Universe;

fn main() -> semismooth::Result<()> {
    let params = DistinctParams::new(0.1, 0.05)?;
    let mut sketch = DistinctSketch::new(params, Universe::new(1 << 40)?, &mut seeded_rng(7, 0));
    for n in 1..=200_000u64 {
        // every id arrives twice
        sketch.update(n * 7_919)?;
        sketch.update(n * 7_919)?;
        if n.is_power_of_two() && n >= 1024 {
            println!("{n:>7} distinct, estimate {:>9.0}", sketch.estimate());
        }
    }
    Ok(())
}
