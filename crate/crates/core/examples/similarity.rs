//! Jaccard similarity of two windows built to share a known fraction of ids.

use semismooth::oracle::ExactWindow;
use semismooth::similarity::{Side, Similarity, SimilarityConfig};
use semismooth::stream_io::overlap_pair;

fn main() -> semismooth::Result<()> {
    let window = 64;
    for (m, c) in [(48, 0), (40, 16), (48, 32), (48, 48)] {
        let (x, y) = overlap_pair(m, c, window, 3 * window, 128, m + c)?;
        let mut sketch = Similarity::new(SimilarityConfig::new(0.2, 0.1, window, 128, 9))?;
        let mut wx = ExactWindow::new(window)?;
        let mut wy = ExactWindow::new(window)?;
        for (&a, &b) in x.iter().zip(&y) {
            wx.push(sketch.push(Side::X, a)?);
            wy.push(sketch.push(Side::Y, b)?);
        }
        println!(
            "m={m:>2} c={c:>2}: exact {:.3}, estimate {:.3}",
            wx.similarity(&wy)?,
            sketch.query()?
        );
    }
    Ok(())
}
