//! Random multipartite graph at scale `n`: part `i` holds about `alpha_i n`
//! vertices and each potential edge between parts `i` and `j` (including
//! `i = j`) is present independently with probability `1 - exp(-v_ij t / n)`.
//!
//! Edges are generated per part pair by geometric skipping over the
//! linearized pair index. Because `ln(1 - p) = -v_ij t / n` exactly, the gap to
//! the next present edge is `floor(E / (v_ij t / n))` with `E ~ Exp(1)`, so the
//! work is proportional to the number of edges.
//!
//! The sample is driven by a single `ChaCha8Rng::seed_from_u64(seed)`; part
//! pairs are visited in the order `(0,0), (0,1), …, (0,k-1), (1,1), …`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::census::ClusterCensus;
use crate::error::{Error, Result};
use crate::model::{ClusterSize, ModelParams};
use crate::unionfind::DisjointSets;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Giant {
    pub size: u64,
    pub composition: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub n: u64,
    pub t: f64,
    pub seed: u64,
    pub part_sizes: Vec<u64>,
    pub edges: u64,
    /// Every component except the giant.
    pub census: ClusterCensus,
    /// The largest component (lowest root index on ties).
    pub giant: Giant,
}

impl GraphSample {
    pub fn vertex_count(&self) -> u64 {
        self.part_sizes.iter().sum()
    }

    pub fn giant_fraction(&self) -> f64 {
        self.giant.size as f64 / self.vertex_count() as f64
    }
}

/// Draws one graph. Fails if `n < k` or if some part pair is dense
/// (`v_ij t >= n`, i.e. edge probability above `1 - 1/e`).
pub fn sample_graph(params: &ModelParams, t: f64, n: u64, seed: u64) -> Result<GraphSample> {
    let k = params.k();
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be >= 0, got {t}"
        )));
    }
    if n < k as u64 {
        return Err(Error::InvalidArgument(format!(
            "need n >= k, got n = {n}, k = {k}"
        )));
    }
    for i in 0..k {
        for j in i..k {
            if params.v()[(i, j)] * t >= n as f64 {
                return Err(Error::InvalidArgument(format!(
                    "v[{i}][{j}] t = {} is not small against n = {n}; graph would be dense",
                    params.v()[(i, j)] * t
                )));
            }
        }
    }

    let part_sizes = params.part_sizes(n);
    let mut offsets = Vec::with_capacity(k + 1);
    offsets.push(0u64);
    for &s in &part_sizes {
        offsets.push(offsets.last().unwrap() + s);
    }
    let total = *offsets.last().unwrap() as usize;
    let type_of = |v: usize| offsets.partition_point(|&o| o <= v as u64) - 1;

    let mut dsu = DisjointSets::new(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = 0u64;

    for i in 0..k {
        for j in i..k {
            let rate = params.v()[(i, j)] * t / n as f64;
            if rate <= 0.0 {
                continue;
            }
            let (oi, oj) = (offsets[i] as usize, offsets[j] as usize);
            if i == j {
                edges += skip_within(&mut rng, rate, part_sizes[i], |a, b| {
                    dsu.union(oi + a, oi + b);
                });
            } else {
                let nj = part_sizes[j];
                edges += skip_linear(&mut rng, rate, part_sizes[i] * nj, |idx| {
                    dsu.union(oi + (idx / nj) as usize, oj + (idx % nj) as usize);
                });
            }
        }
    }

    let comps = dsu.compositions(k, type_of);
    let (census, giant) = split_giant(k, comps);
    Ok(GraphSample {
        n,
        t,
        seed,
        part_sizes,
        edges,
        census,
        giant,
    })
}

/// Gap to the next success in a Bernoulli stream with `p = 1 - e^{-rate}`.
#[inline]
fn geometric_gap(rng: &mut impl Rng, rate: f64) -> f64 {
    // 1 - U lies in (0, 1]
    let u: f64 = 1.0 - rng.random::<f64>();
    (-u.ln() / rate).floor()
}

/// Visits successes among indices `0..space`; returns how many.
fn skip_linear(rng: &mut impl Rng, rate: f64, space: u64, mut hit: impl FnMut(u64)) -> u64 {
    let mut count = 0;
    let mut next = 0.0f64;
    loop {
        next += geometric_gap(rng, rate);
        if next >= space as f64 {
            return count;
        }
        hit(next as u64);
        count += 1;
        next += 1.0;
    }
}

/// Successes among unordered pairs `{a, b}` of `0..m`, indexed row by row as
/// `b (b - 1) / 2 + a` for `a < b`.
fn skip_within(rng: &mut impl Rng, rate: f64, m: u64, mut hit: impl FnMut(usize, usize)) -> u64 {
    let space = m * m.saturating_sub(1) / 2;
    let mut row = 1u64;
    let mut row_start = 0u64;
    skip_linear(rng, rate, space, |idx| {
        while idx >= row_start + row {
            row_start += row;
            row += 1;
        }
        hit((idx - row_start) as usize, row as usize);
    })
}

/// Separates the largest component from the rest.
pub(crate) fn split_giant(k: usize, comps: Vec<(usize, Vec<u32>)>) -> (ClusterCensus, Giant) {
    let mut census = ClusterCensus::new(k);
    let mut giant_idx = None;
    let mut best = 0u64;
    for (idx, (_, c)) in comps.iter().enumerate() {
        let size: u64 = c.iter().map(|&x| u64::from(x)).sum();
        if size > best {
            best = size;
            giant_idx = Some(idx);
        }
    }
    let mut giant = Giant {
        size: 0,
        composition: vec![0; k],
    };
    for (idx, (_, c)) in comps.into_iter().enumerate() {
        if Some(idx) == giant_idx {
            giant.size = best;
            giant.composition = c.iter().map(|&x| u64::from(x)).collect();
        } else {
            census.add(ClusterSize::from_vec_unchecked(c), 1);
        }
    }
    (census, giant)
}

/// Census counts over `n`, giant excluded.
pub fn empirical_phi(sample: &GraphSample) -> BTreeMap<ClusterSize, f64> {
    sample.census.scaled(sample.n)
}

/// Independent samples with seeds `base_seed ^ r`, in replica order.
pub fn sample_graph_replicas(
    params: &ModelParams,
    t: f64,
    n: u64,
    base_seed: u64,
    replicas: u64,
) -> Result<Vec<GraphSample>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| sample_graph(params, t, n, base_seed ^ r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(x: &[u32]) -> ClusterSize {
        ClusterSize::new(x.to_vec()).unwrap()
    }

    fn conserved(s: &GraphSample) -> bool {
        let mut p = s.census.particles();
        for (a, g) in p.iter_mut().zip(&s.giant.composition) {
            *a += g;
        }
        p == s.part_sizes && s.giant.composition.iter().sum::<u64>() == s.giant.size
    }

    #[test]
    fn time_zero_has_no_edges() {
        let p = ModelParams::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[15.0, 2.0]).unwrap();
        let s = sample_graph(&p, 0.0, 100, 1).unwrap();
        assert_eq!(s.edges, 0);
        assert_eq!(s.giant.size, 1);
        assert_eq!(s.census.get(&cs(&[1, 0])) + s.giant.composition[0], 1500);
        assert_eq!(s.census.get(&cs(&[0, 1])) + s.giant.composition[1], 200);
        assert!(conserved(&s));
    }

    #[test]
    fn deterministic_per_seed() {
        let p = ModelParams::from_rows(&[vec![1.0, 2.0], vec![2.0, 0.5]], &[0.6, 0.4]).unwrap();
        let a = sample_graph(&p, 0.8, 5_000, 11).unwrap();
        let b = sample_graph(&p, 0.8, 5_000, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_graph(&p, 0.8, 5_000, 12).unwrap();
        assert_ne!(a.census, c.census);
        assert!(conserved(&a) && conserved(&c));
    }

    #[test]
    fn within_part_pairs_decode_to_distinct_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = std::collections::HashSet::new();
        // rate large enough that nearly every pair is hit
        let hits = skip_within(&mut rng, 30.0, 40, |a, b| {
            assert!(a < b && b < 40);
            assert!(seen.insert((a, b)));
        });
        assert_eq!(hits as usize, seen.len());
        assert_eq!(hits, 40 * 39 / 2);
    }

    #[test]
    fn edge_count_matches_expectation() {
        // E[edges] = sum over blocks of pairs * (1 - e^{-v t / n})
        let p = ModelParams::from_rows(&[vec![1.0, 2.0], vec![2.0, 0.5]], &[0.6, 0.4]).unwrap();
        let n = 50_000u64;
        let t = 1.3;
        let s = sample_graph(&p, t, n, 3).unwrap();
        let sizes = &s.part_sizes;
        let pr = |v: f64| 1.0 - (-v * t / n as f64).exp();
        let expected = (sizes[0] * (sizes[0] - 1) / 2) as f64 * pr(1.0)
            + (sizes[0] * sizes[1]) as f64 * pr(2.0)
            + (sizes[1] * (sizes[1] - 1) / 2) as f64 * pr(0.5);
        assert!((s.edges as f64 - expected).abs() < 5.0 * expected.sqrt());
    }

    #[test]
    fn empirical_phi_divides_by_n() {
        let p = ModelParams::single_type();
        let s = sample_graph(&p, 0.0, 1000, 0).unwrap();
        let phi = empirical_phi(&s);
        assert_eq!(phi[&cs(&[1])], 0.999);
    }

    #[test]
    fn dense_regime_rejected() {
        let p = ModelParams::single_type();
        assert!(sample_graph(&p, 20.0, 10, 0).is_err());
        let q = ModelParams::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[1.0, 1.0]).unwrap();
        assert!(sample_graph(&q, 1.0, 1, 0).is_err());
    }
}
