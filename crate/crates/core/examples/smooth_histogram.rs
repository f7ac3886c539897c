//! A smooth histogram with an exact distinct count plugged in: watch buckets
//! open, collapse and expire while `A1` keeps covering the window.

use semismooth::oracle::{ExactDistinct, ExactWindow};
use semismooth::smooth_histogram::{SmoothHistogram, SmoothSpec};
use semismooth::stream_io::GeneratorSpec;
use semismooth::Universe;

fn main() -> semismooth::Result<()> {
    let window = 200;
    let ids = "alternating:b=150,u=500,len=1200"
        .parse::<GeneratorSpec>()?
        .generate()?;
    let mut hist = SmoothHistogram::new(
        window,
        SmoothSpec::distinct(0.2)?,
        Universe::new(500)?,
        ExactDistinct::default(),
    )?;
    let mut exact = ExactWindow::new(window)?;

    println!(
        "{:>6} {:>8} {:>8} {:>8}  first bucket starts",
        "t", "|W|", "f(A1)", "buckets"
    );
    for &id in &ids {
        let e = hist.push(id)?;
        exact.push(e);
        if e.ts % 100 == 0 {
            let starts: Vec<_> = hist.starts().iter().take(4).collect();
            println!(
                "{:>6} {:>8} {:>8} {:>8}  {:?}",
                e.ts,
                exact.distinct(),
                hist.window_estimate()?,
                hist.len(),
                starts
            );
        }
    }
    Ok(())
}
