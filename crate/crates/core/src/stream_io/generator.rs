//! Seeded synthetic streams.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::seeded_rng;

const GENERATOR_STREAM: u64 = 0x4745_4e53;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    Uniform,
    Zipf {
        s: f64,
    },
    /// Id 1 appears `m` times at random positions; every other position holds
    /// a fresh id that occurs nowhere else.
    Planted {
        m: u64,
    },
    /// Runs of `block` copies of id 1 alternating with runs of `block` uniform
    /// draws from `[2, u]`: the window norm swings up and down, so buckets are
    /// opened, collapsed and expired all the time.
    Alternating {
        block: u64,
    },
}

/// A generator with its length, universe and seed.
///
/// The textual form is `kind[:key=value,...]`, for example
/// `zipf:s=1.2,u=10000,len=20000` or `planted:m=100,len=10000`. Keys are
/// `s`, `m`, `b` (alternating block), `u` (universe), `len` and `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub length: u64,
    pub universe: u64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, length: u64, universe: u64, seed: u64) -> Self {
        GeneratorSpec {
            kind,
            length,
            universe,
            seed,
        }
    }

    /// The planted stream of length `length` with `m` copies of id 1. Its
    /// universe is exactly large enough for the singletons.
    pub fn planted(m: u64, length: u64, seed: u64) -> Self {
        let universe = (length - m.min(length) + 1).max(1);
        GeneratorSpec::new(GeneratorKind::Planted { m }, length, universe, seed)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GeneratorSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.universe == 0 {
            return Err(Error::invalid("u", "must be positive"));
        }
        match self.kind {
            GeneratorKind::Uniform => {}
            GeneratorKind::Zipf { s } => {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::invalid(
                        "s",
                        format!("{s} is not a positive exponent"),
                    ));
                }
            }
            GeneratorKind::Planted { m } => {
                if m > self.length {
                    return Err(Error::invalid("m", "exceeds the stream length"));
                }
                if self.universe < self.length - m + 1 {
                    return Err(Error::invalid("u", "too small for the planted singletons"));
                }
            }
            GeneratorKind::Alternating { block } => {
                if block == 0 {
                    return Err(Error::invalid("b", "must be positive"));
                }
                if self.universe < 2 {
                    return Err(Error::invalid("u", "alternating streams need u >= 2"));
                }
            }
        }
        Ok(())
    }

    /// The id sequence. Deterministic in the spec.
    pub fn generate(&self) -> Result<Vec<u64>> {
        self.validate()?;
        let mut rng = seeded_rng(self.seed, GENERATOR_STREAM);
        let n = self.length as usize;
        let u = self.universe;
        let ids = match self.kind {
            GeneratorKind::Uniform => (0..n).map(|_| rng.random_range(1..=u)).collect(),
            GeneratorKind::Zipf { s } => {
                let zipf =
                    Zipf::new(u as f64, s).map_err(|e| Error::invalid("s", e.to_string()))?;
                (0..n).map(|_| zipf.sample(&mut rng) as u64).collect()
            }
            GeneratorKind::Planted { m } => {
                let mut slots: Vec<bool> = (0..n).map(|i| (i as u64) < m).collect();
                slots.shuffle(&mut rng);
                let mut fresh = 1;
                slots
                    .into_iter()
                    .map(|heavy| {
                        if heavy {
                            1
                        } else {
                            fresh += 1;
                            fresh
                        }
                    })
                    .collect()
            }
            GeneratorKind::Alternating { block } => (0..self.length)
                .map(|i| {
                    if (i / block) % 2 == 0 {
                        1
                    } else {
                        rng.random_range(2..=u)
                    }
                })
                .collect(),
        };
        Ok(ids)
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse {
            location: format!("generator spec `{text}`"),
            reason,
        };
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let (mut s, mut m, mut b) = (None, None, None);
        let (mut u, mut len, mut seed) = (None, 10_000u64, 0u64);
        for pair in rest.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| parse_err(format!("`{pair}` is not key=value")))?;
            let int = || {
                value
                    .parse::<u64>()
                    .map_err(|e| parse_err(format!("{key}: {e}")))
            };
            match key.trim() {
                "s" => {
                    s = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| parse_err(format!("s: {e}")))?,
                    )
                }
                "m" => m = Some(int()?),
                "b" => b = Some(int()?),
                "u" => u = Some(int()?),
                "len" => len = int()?,
                "seed" => seed = int()?,
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        let kind = match kind.trim() {
            "uniform" => GeneratorKind::Uniform,
            "zipf" => GeneratorKind::Zipf {
                s: s.unwrap_or(1.2),
            },
            "planted" => GeneratorKind::Planted {
                m: m.unwrap_or_else(|| (len as f64).sqrt().round() as u64),
            },
            "alternating" => GeneratorKind::Alternating {
                block: b.unwrap_or(64),
            },
            other => return Err(parse_err(format!("unknown generator `{other}`"))),
        };
        let universe = match (kind, u) {
            (_, Some(u)) => u,
            (GeneratorKind::Planted { m }, None) => (len - m.min(len) + 1).max(1),
            (_, None) => 10_000,
        };
        let spec = GeneratorSpec::new(kind, len, universe, seed);
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GeneratorKind::Uniform => write!(f, "uniform:")?,
            GeneratorKind::Zipf { s } => write!(f, "zipf:s={s},")?,
            GeneratorKind::Planted { m } => write!(f, "planted:m={m},")?,
            GeneratorKind::Alternating { block } => write!(f, "alternating:b={block},")?,
        }
        write!(
            f,
            "u={},len={},seed={}",
            self.universe, self.length, self.seed
        )
    }
}

/// Two streams whose final windows of size `window` have `m` distinct ids
/// each, `c` of them shared, so their Jaccard similarity is `c / (2m - c)`.
///
/// Each window lists its ids once in random order and fills the remaining
/// positions with repeats; `warmup` uniform arrivals over the whole universe
/// precede it so that expiry is exercised.
pub fn overlap_pair(
    m: u64,
    c: u64,
    window: u64,
    warmup: u64,
    universe: u64,
    seed: u64,
) -> Result<(Vec<u64>, Vec<u64>)> {
    if m == 0 || m > window {
        return Err(Error::invalid("m", "must lie in [1, window]"));
    }
    if c > m {
        return Err(Error::invalid("c", "cannot exceed m"));
    }
    if 2 * m - c > universe {
        return Err(Error::invalid("u", "too small for the two id sets"));
    }
    let mut rng = seeded_rng(seed, GENERATOR_STREAM + 1);
    let mut pool: Vec<u64> = (1..=universe).collect();
    pool.shuffle(&mut rng);
    let shared = &pool[..c as usize];
    let only_x = &pool[c as usize..m as usize];
    let only_y = &pool[m as usize..(2 * m - c) as usize];

    let mut side = |own: &[u64]| {
        let set: Vec<u64> = shared.iter().chain(own).copied().collect();
        let mut stream: Vec<u64> = (0..warmup)
            .map(|_| rng.random_range(1..=universe))
            .collect();
        let mut tail = set.clone();
        tail.extend((m..window).map(|_| set[rng.random_range(0..set.len())]));
        tail.shuffle(&mut rng);
        stream.extend(tail);
        stream
    };
    let x = side(only_x);
    let y = side(only_y);
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashMap};

    fn counts(ids: &[u64]) -> HashMap<u64, u64> {
        let mut c = HashMap::new();
        for &id in ids {
            *c.entry(id).or_insert(0) += 1;
        }
        c
    }

    #[test]
    fn planted_counts() {
        let ids = GeneratorSpec::planted(100, 10_000, 3).generate().unwrap();
        let c = counts(&ids);
        assert_eq!(ids.len(), 10_000);
        assert_eq!(c[&1], 100);
        assert_eq!(c.len(), 9_901);
        assert!(c.iter().all(|(&id, &n)| id == 1 || n == 1));
    }

    #[test]
    fn zipf_chi_square() {
        let u = 100;
        let s = 1.2;
        let ids = GeneratorSpec::new(GeneratorKind::Zipf { s }, 100_000, u, 7)
            .generate()
            .unwrap();
        let c = counts(&ids);
        let weights: Vec<f64> = (1..=u).map(|k| (k as f64).powf(-s)).collect();
        let total: f64 = weights.iter().sum();
        // ranks 1..=30 individually, the tail pooled; 30 degrees of freedom
        let mut chi = 0.0;
        let mut tail_obs = 0.0;
        let mut tail_exp = 0.0;
        for k in 1..=u {
            let expected = 1e5 * weights[k as usize - 1] / total;
            let observed = *c.get(&k).unwrap_or(&0) as f64;
            if k <= 30 {
                chi += (observed - expected).powi(2) / expected;
            } else {
                tail_obs += observed;
                tail_exp += expected;
            }
        }
        chi += (tail_obs - tail_exp).powi(2) / tail_exp;
        // the 0.999 quantile of chi-square(30) is 59.7
        assert!(chi < 59.7, "chi-square {chi}");
    }

    #[test]
    fn uniform_counts_within_three_sigma() {
        let ids = GeneratorSpec::new(GeneratorKind::Uniform, 16_000, 16, 1)
            .generate()
            .unwrap();
        let sigma = (16_000.0f64 * (1.0 / 16.0) * (15.0 / 16.0)).sqrt();
        for (_, n) in counts(&ids) {
            assert!((n as f64 - 1000.0).abs() <= 3.0 * sigma, "{n}");
        }
    }

    #[test]
    fn alternating_blocks() {
        let ids = GeneratorSpec::new(GeneratorKind::Alternating { block: 4 }, 16, 9, 0)
            .generate()
            .unwrap();
        assert!(ids[..4].iter().all(|&id| id == 1));
        assert!(ids[4..8].iter().all(|&id| (2..=9).contains(&id)));
        assert!(ids[8..12].iter().all(|&id| id == 1));
    }

    #[test]
    fn parse_and_display() {
        let spec: GeneratorSpec = "zipf:s=1.5,u=50,len=300,seed=4".parse().unwrap();
        assert_eq!(spec.kind, GeneratorKind::Zipf { s: 1.5 });
        assert_eq!((spec.universe, spec.length, spec.seed), (50, 300, 4));
        assert_eq!(spec.to_string().parse::<GeneratorSpec>().unwrap(), spec);

        let planted: GeneratorSpec = "planted:len=10000".parse().unwrap();
        assert_eq!(planted, GeneratorSpec::planted(100, 10_000, 0));

        assert!("zipf:s=-1".parse::<GeneratorSpec>().is_err());
        assert!("gauss".parse::<GeneratorSpec>().is_err());
        assert!("uniform:u".parse::<GeneratorSpec>().is_err());
        assert!("planted:m=20,len=10".parse::<GeneratorSpec>().is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec: GeneratorSpec = "uniform:u=1000,len=500,seed=9".parse().unwrap();
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
        assert_ne!(
            spec.generate().unwrap(),
            spec.with_seed(10).generate().unwrap()
        );
    }

    #[test]
    fn overlap_pair_jaccard() {
        for (m, c) in [(48, 0), (40, 16), (48, 32), (48, 48)] {
            let (x, y) = overlap_pair(m, c, 64, 100, 128, m + c).unwrap();
            assert_eq!((x.len(), y.len()), (164, 164));
            let wx: BTreeSet<u64> = x[100..].iter().copied().collect();
            let wy: BTreeSet<u64> = y[100..].iter().copied().collect();
            assert_eq!(wx.len() as u64, m);
            assert_eq!(wx.intersection(&wy).count() as u64, c);
        }
        assert!(overlap_pair(100, 0, 64, 0, 128, 0).is_err());
        assert!(overlap_pair(48, 0, 64, 0, 90, 0).is_err());
    }
}
