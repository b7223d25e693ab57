//! Cluster censuses produced by the simulators, and the Poisson-band
//! comparisons used to check them against `zeta` and against each other.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::ClusterSize;

/// Number of clusters observed per composition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterCensus {
    k: usize,
    counts: BTreeMap<ClusterSize, u64>,
}

impl ClusterCensus {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            counts: BTreeMap::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn add(&mut self, x: ClusterSize, count: u64) {
        assert_eq!(x.k(), self.k);
        if count > 0 {
            *self.counts.entry(x).or_insert(0) += count;
        }
    }

    pub fn get(&self, x: &ClusterSize) -> u64 {
        self.counts.get(x).copied().unwrap_or(0)
    }

    /// Entries in graded order.
    pub fn iter(&self) -> impl Iterator<Item = (&ClusterSize, u64)> {
        self.counts.iter().map(|(x, &c)| (x, c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn cluster_count(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `sum_x count(x) x`
    pub fn particles(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.k];
        for (x, c) in self.iter() {
            for (o, &xi) in out.iter_mut().zip(x.counts()) {
                *o += c * u64::from(xi);
            }
        }
        out
    }

    /// Adds another census into this one (commutative).
    pub fn merge(&mut self, other: &ClusterCensus) {
        for (x, c) in other.iter() {
            self.add(x.clone(), c);
        }
    }

    /// Counts divided by `n`.
    pub fn scaled(&self, n: u64) -> BTreeMap<ClusterSize, f64> {
        self.iter()
            .map(|(x, c)| (x.clone(), c as f64 / n as f64))
            .collect()
    }
}

/// Observed count against `expected = n zeta_x` with a Poisson-scale band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCheck {
    pub x: ClusterSize,
    pub expected: f64,
    pub observed: f64,
    pub half_width: f64,
    pub pass: bool,
}

impl BandCheck {
    pub fn z_score(&self) -> f64 {
        (self.observed - self.expected).abs() / (self.half_width / BAND_SIGMAS)
    }
}

pub const BAND_SIGMAS: f64 = 5.0;
pub const BAND_MIN_EXPECTED: f64 = 50.0;

/// For every candidate with `n zeta_x >= 50`: is the observed count within
/// `5 sqrt(n zeta_x)` of `n zeta_x`?
pub fn band_against_expected(
    census: &ClusterCensus,
    n: u64,
    candidates: &[ClusterSize],
    density: impl Fn(&ClusterSize) -> f64,
) -> Vec<BandCheck> {
    candidates
        .iter()
        .filter_map(|x| {
            let expected = density(x) * n as f64;
            (expected >= BAND_MIN_EXPECTED).then(|| {
                let observed = census.get(x) as f64;
                let half_width = BAND_SIGMAS * expected.sqrt();
                BandCheck {
                    x: x.clone(),
                    expected,
                    observed,
                    half_width,
                    pass: (observed - expected).abs() <= half_width,
                }
            })
        })
        .collect()
}

/// Two independent censuses at the same scale: the difference of two counts
/// with common mean `n zeta_x` has variance about `2 n zeta_x`, so the band is
/// `5 sqrt(2 n zeta_x)`. `observed` holds `a - b + expected` so the check reads
/// like [`band_against_expected`].
pub fn band_between(
    a: &ClusterCensus,
    b: &ClusterCensus,
    n: u64,
    candidates: &[ClusterSize],
    density: impl Fn(&ClusterSize) -> f64,
) -> Vec<BandCheck> {
    candidates
        .iter()
        .filter_map(|x| {
            let expected = density(x) * n as f64;
            (expected >= BAND_MIN_EXPECTED).then(|| {
                let diff = a.get(x) as f64 - b.get(x) as f64;
                let half_width = BAND_SIGMAS * (2.0 * expected).sqrt();
                BandCheck {
                    x: x.clone(),
                    expected,
                    observed: expected + diff,
                    half_width,
                    pass: diff.abs() <= half_width,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(x: &[u32]) -> ClusterSize {
        ClusterSize::new(x.to_vec()).unwrap()
    }

    #[test]
    fn scaled_counts() {
        let mut c = ClusterCensus::new(2);
        c.add(cs(&[1, 0]), 500);
        let phi = c.scaled(1000);
        assert_eq!(phi[&cs(&[1, 0])], 0.5);
    }

    #[test]
    fn particles_and_merge() {
        let mut a = ClusterCensus::new(2);
        a.add(cs(&[1, 0]), 3);
        a.add(cs(&[2, 1]), 2);
        let mut b = ClusterCensus::new(2);
        b.add(cs(&[2, 1]), 1);
        b.add(cs(&[0, 1]), 4);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.particles(), vec![3 + 6, 3 + 4]);
        assert_eq!(ab.get(&cs(&[2, 1])), 3);
        a.add(cs(&[5, 5]), 0);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn bands() {
        let mut c = ClusterCensus::new(1);
        c.add(cs(&[1]), 110);
        c.add(cs(&[2]), 10);
        let cands = [cs(&[1]), cs(&[2])];
        let checks =
            band_against_expected(
                &c,
                1000,
                &cands,
                |x| {
                    if x.total() == 1 {
                        0.1
                    } else {
                        0.01
                    }
                },
            );
        // size 2 expects 10 < 50 and is skipped
        assert_eq!(checks.len(), 1);
        assert!(checks[0].pass);
        assert!((checks[0].z_score() - 10.0 / 10.0).abs() < 1e-12);
    }
}
