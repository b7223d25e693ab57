//! Marcus–Lushnikov simulation of the vector multiplicative coalescent.
//!
//! Clusters `x` and `y` merge at rate `⟨x|V|y⟩ / n`. By bilinearity this is
//! the sum over particle pairs `p ∈ x, q ∈ y` of `v_{type p, type q} / n`, so
//! we run a Poisson stream of particle-pair proposals at the constant total
//! rate
//!
//! ```text
//! R = ⟨S|V|S⟩ / (2n),      S_i = number of type-i particles,
//! ```
//!
//! choose an ordered type pair `(i, j)` with probability `∝ v_ij S_i S_j`
//! (alias table), then one uniform particle of each type. The unordered pair
//! `{p, q}` is then proposed at rate exactly `v_ij / n`. A proposal is
//! rejected when both particles already share a cluster; this includes the
//! self-pair `p = q`, which carries the diagonal part of `⟨x|V|x⟩`. Rejected
//! proposals still advance the clock. The accepted stream therefore merges
//! each pair of distinct clusters at `⟨x|V|y⟩ / n`, with no further rate
//! correction.
//!
//! Each state owns a `ChaCha8Rng::seed_from_u64(seed)` and pre-draws its next
//! event time, so `run_until(t1); run_until(t2)` follows the same trajectory
//! as `run_until(t2)` alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, Exp1};
use rayon::prelude::*;

use crate::census::ClusterCensus;
use crate::error::{Error, Result};
use crate::model::{ClusterSize, ModelParams};
use crate::unionfind::DisjointSets;

pub struct CoalescentState {
    n: u64,
    k: usize,
    /// `offsets[i]..offsets[i+1]` are the type-i particles.
    offsets: Vec<u64>,
    clusters: DisjointSets,
    time: f64,
    next_event: f64,
    proposal_rate: f64,
    pairs: Option<WeightedAliasIndex<f64>>,
    rng: ChaCha8Rng,
    proposals: u64,
    merges: u64,
}

impl CoalescentState {
    /// `floor(alpha_i n)` singletons of each type (largest-remainder rounding),
    /// at time 0.
    pub fn new(params: &ModelParams, n: u64, seed: u64) -> Result<Self> {
        let k = params.k();
        if params.alpha().iter().any(|a| a * (n as f64) < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "every alpha_i n must be >= 1 (n = {n})"
            )));
        }
        let sizes = params.part_sizes(n);
        let mut offsets = vec![0u64];
        for &s in &sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        let total = *offsets.last().unwrap() as usize;

        let mut weights = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                weights.push(params.v()[(i, j)] * sizes[i] as f64 * sizes[j] as f64);
            }
        }
        let sum: f64 = weights.iter().sum();
        let proposal_rate = sum / (2.0 * n as f64);
        let pairs = if sum > 0.0 {
            Some(
                WeightedAliasIndex::new(weights)
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?,
            )
        } else {
            None
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next_event = draw_wait(&mut rng, proposal_rate);
        Ok(Self {
            n,
            k,
            offsets,
            clusters: DisjointSets::new(total),
            time: 0.0,
            next_event,
            proposal_rate,
            pairs,
            rng,
            proposals: 0,
            merges: 0,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `S`: particles per type (constant).
    pub fn particles_per_type(&self) -> Vec<u64> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn proposal_rate(&self) -> f64 {
        self.proposal_rate
    }

    pub fn proposals(&self) -> u64 {
        self.proposals
    }

    pub fn merges(&self) -> u64 {
        self.merges
    }

    fn type_of(&self, p: usize) -> usize {
        self.offsets.partition_point(|&o| o <= p as u64) - 1
    }

    /// One particle-pair proposal, without touching the clock or the clusters.
    pub fn propose_pair(&mut self) -> Option<(usize, usize)> {
        let idx = self.pairs.as_ref()?.sample(&mut self.rng);
        let (i, j) = (idx / self.k, idx % self.k);
        let p = self.rng.random_range(self.offsets[i]..self.offsets[i + 1]) as usize;
        let q = self.rng.random_range(self.offsets[j]..self.offsets[j + 1]) as usize;
        Some((p, q))
    }

    /// Advances to `t_stop`, processing every proposal with time `<= t_stop`.
    pub fn run_until(&mut self, t_stop: f64) -> Result<()> {
        if !(t_stop >= self.time) {
            return Err(Error::InvalidArgument(format!(
                "cannot run backwards from {} to {t_stop}",
                self.time
            )));
        }
        while self.next_event <= t_stop {
            self.time = self.next_event;
            if let Some((p, q)) = self.propose_pair() {
                self.proposals += 1;
                if self.clusters.union(p, q) {
                    self.merges += 1;
                }
            }
            self.next_event = self.time + draw_wait(&mut self.rng, self.proposal_rate);
        }
        self.time = t_stop;
        Ok(())
    }

    pub fn census(&mut self) -> ClusterCensus {
        let offsets = self.offsets.clone();
        let type_of = |p: usize| offsets.partition_point(|&o| o <= p as u64) - 1;
        let mut census = ClusterCensus::new(self.k);
        for (_, c) in self.clusters.compositions(self.k, type_of) {
            census.add(ClusterSize::from_vec_unchecked(c), 1);
        }
        census
    }

    /// Composition of the cluster holding particle `p`.
    pub fn cluster_of(&mut self, p: usize) -> ClusterSize {
        let root = self.clusters.find(p);
        let mut counts = vec![0u32; self.k];
        for q in 0..self.clusters.len() {
            if self.clusters.find(q) == root {
                counts[self.type_of(q)] += 1;
            }
        }
        ClusterSize::from_vec_unchecked(counts)
    }
}

fn draw_wait(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate > 0.0 {
        let e: f64 = Exp1.sample(rng);
        e / rate
    } else {
        f64::INFINITY
    }
}

/// Runs `replicas` trajectories (seed `base_seed ^ r`) and returns, per
/// replica, the census at each snapshot time.
pub fn run_replicas(
    params: &ModelParams,
    n: u64,
    snapshots: &[f64],
    base_seed: u64,
    replicas: u64,
) -> Result<Vec<Vec<ClusterCensus>>> {
    if snapshots.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument(
            "snapshot times must be nondecreasing".into(),
        ));
    }
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut state = CoalescentState::new(params, n, base_seed ^ r)?;
            snapshots
                .iter()
                .map(|&t| {
                    state.run_until(t)?;
                    Ok(state.census())
                })
                .collect()
        })
        .collect()
}
