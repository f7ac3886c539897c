//! Oracle-mode checks of the smooth-histogram invariants.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::{ExactDistinct, ExactL2, ExactWindow};
use crate::smooth_histogram::{SmoothHistogram, SmoothSpec, SuffixEstimator};
use crate::stream::Universe;

/// Violation counts for one smooth function over one stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantCounts {
    pub function: String,
    pub alpha: f64,
    pub beta: f64,
    pub steps: u64,
    /// Steps where `f(A2) <= f(W) <= f(A1)` failed.
    pub sandwich: u64,
    /// Steps where `f(A2) >= (1 - alpha) f(A1)` failed although `A2` does not
    /// start right after `A1` (when it does, `W = A1`).
    pub smoothness: u64,
    /// Steps with more than `4 (1/beta) log2(t) + 2` buckets.
    pub bucket_bound: u64,
    pub max_buckets: usize,
}

impl InvariantCounts {
    pub fn violations(&self) -> u64 {
        self.sandwich + self.smoothness + self.bucket_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub window: u64,
    pub elements: u64,
    pub l2: InvariantCounts,
    pub distinct: InvariantCounts,
    pub passed: bool,
}

/// Bucket-count ceiling after `t` arrivals.
pub fn bucket_bound(beta: f64, t: u64) -> f64 {
    4.0 / beta * (t as f64).log2() + 2.0
}

fn check<E: SuffixEstimator>(
    name: &str,
    ids: &[u64],
    window: u64,
    spec: SmoothSpec,
    universe: Universe,
    estimator: E,
    exact: impl Fn(&ExactWindow) -> f64,
) -> Result<InvariantCounts> {
    let mut hist = SmoothHistogram::new(window, spec, universe, estimator)?;
    let mut oracle = ExactWindow::new(window)?;
    let mut counts = InvariantCounts {
        function: name.to_owned(),
        alpha: spec.alpha(),
        beta: spec.beta(),
        ..Default::default()
    };
    let slack = |v: f64| 1e-9 * v.max(1.0);
    for &id in ids {
        let e = hist.push(id)?;
        oracle.push(e);
        let est = hist.estimates();
        let fw = exact(&oracle);
        let f1 = est[0];
        let f2 = est.get(1).copied();
        counts.steps += 1;
        if fw > f1 + slack(f1) || f2.is_some_and(|f2| f2 > fw + slack(fw)) {
            counts.sandwich += 1;
        }
        let starts = hist.starts();
        let adjacent = starts.len() >= 2 && starts[1] == starts[0] + 1;
        if !adjacent && f2.is_some_and(|f2| f2 < (1.0 - spec.alpha()) * f1 - slack(f1)) {
            counts.smoothness += 1;
        }
        if hist.len() as f64 > bucket_bound(spec.beta(), e.ts) {
            counts.bucket_bound += 1;
        }
        counts.max_buckets = counts.max_buckets.max(hist.len());
    }
    Ok(counts)
}

/// Runs exact-L2 and exact-distinct histograms with parameter `alpha` over
/// `ids` and counts every invariant violation.
pub fn verify_histograms(ids: &[u64], window: u64, alpha: f64) -> Result<VerifyReport> {
    let universe = Universe::new(ids.iter().copied().max().unwrap_or(1))?;
    let l2 = check(
        "l2",
        ids,
        window,
        SmoothSpec::l2(alpha)?,
        universe,
        ExactL2::default(),
        ExactWindow::l2,
    )?;
    let distinct = check(
        "distinct",
        ids,
        window,
        SmoothSpec::distinct(alpha)?,
        universe,
        ExactDistinct::default(),
        |w| w.distinct() as f64,
    )?;
    let passed = l2.violations() == 0 && distinct.violations() == 0;
    Ok(VerifyReport {
        window,
        elements: ids.len() as u64,
        l2,
        distinct,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream_io::GeneratorSpec;

    #[test]
    fn random_streams_have_no_violations() {
        for text in [
            "uniform:u=40,len=2000",
            "zipf:s=1.1,u=500,len=2000",
            "alternating:b=50,u=300,len=2000",
        ] {
            let ids = text.parse::<GeneratorSpec>().unwrap().generate().unwrap();
            let report = verify_histograms(&ids, 128, 0.2).unwrap();
            assert!(report.passed, "{text}: {report:?}");
            assert_eq!(report.l2.steps, 2000);
        }
    }

    #[test]
    fn bound_grows_with_log_t() {
        assert_eq!(bucket_bound(0.5, 1), 2.0);
        assert_eq!(bucket_bound(0.5, 1024), 82.0);
    }
}
