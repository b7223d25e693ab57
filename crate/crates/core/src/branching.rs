//! Multi-type Poisson branching processes.
//!
//! A type-i individual has `Poisson(m_ij)` children of type j, independently
//! across j. The offspring generating function is
//! `f_i(s) = exp(sum_j m_ij (s_j - 1))`, and the extinction vector is the
//! least fixed point of `f` in `[0,1]^k`, which equals `1` iff `ρ(M) <= 1`.
//!
//! With `M = V D[alpha] t` the pgf fixed-point equations become the
//! Lambert–Euler equations under `s_i = y_i / (alpha_i t)`, which gives a
//! second route to `eta` through the cluster densities:
//! `eta_l = (1/alpha_l) sum_x zeta_x(t) x_l` (see [`extinction_series`]).
//! Written purely in terms of `M`, the same series reads
//!
//! ```text
//! eta_l = (1/alpha_l) sum_x alpha^1 / (x! x^1) tau(K_k, x_i x_j m_ij / alpha_j) exp(-⟨x|M|1⟩) x_l
//! ```
//!
//! but the `zeta` form is the one evaluated here.
//!
//! # Simulation RNG
//!
//! Each replica owns a `ChaCha8Rng` seeded with `seed_from_u64(base_seed ^ r)`
//! for replica index `r`, so a sweep depends only on the seed set and not on
//! thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::{spectral_radius, ModelParams, TOL_PHASE};
use crate::smoluchowski::total_mass;

pub use crate::lambert_euler::{INV_MAX_ITER, TOL_INV};

/// Mean offspring matrix: `m_ij` children of type j per type-i parent.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix(SquareMatrix);

impl MeanMatrix {
    /// Rejects negative or non-finite entries and reducible support.
    pub fn new(m: SquareMatrix) -> Result<Self> {
        let k = m.dim();
        if k == 0 {
            return Err(Error::InvalidArgument("empty mean matrix".into()));
        }
        for i in 0..k {
            for j in 0..k {
                let x = m[(i, j)];
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(Error::NegativeEntry {
                        path: format!("$.M[{i}][{j}]"),
                    });
                }
            }
        }
        if let Some(unreachable) = not_strongly_connected(&m) {
            return Err(Error::ReducibleMatrix {
                path: "$.M".into(),
                unreachable,
            });
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = SquareMatrix::from_rows(rows).ok_or_else(|| Error::Shape {
            path: "$.M".into(),
            reason: "mean matrix must be square".into(),
        })?;
        Self::new(m)
    }

    /// `M = V D[alpha] t`, i.e. `m_ij = v_ij alpha_j t`.
    pub fn from_model(params: &ModelParams, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be > 0, got {t}")));
        }
        let k = params.k();
        let mut m = SquareMatrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = params.v()[(i, j)] * params.alpha()[j] * t;
            }
        }
        Self::new(m)
    }

    pub fn k(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.0)
    }
}

/// Every type reachable from type 0 and able to reach it.
fn not_strongly_connected(m: &SquareMatrix) -> Option<usize> {
    let k = m.dim();
    let reach = |forward: bool| {
        let mut seen = vec![false; k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..k {
                let w = if forward { m[(i, j)] } else { m[(j, i)] };
                if !seen[j] && w > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    (0..k).find(|&i| !fwd[i] || !bwd[i])
}

/// `f_i(s) = exp(sum_j m_ij (s_j - 1))`
pub fn pgf(m: &MeanMatrix, s: &[f64]) -> Vec<f64> {
    assert_eq!(s.len(), m.k());
    let shifted: Vec<f64> = s.iter().map(|x| x - 1.0).collect();
    m.0.mul_vec(&shifted).into_iter().map(f64::exp).collect()
}

/// Iterates `s ↦ f(s)` from `s = 0`; componentwise nondecreasing.
pub fn pgf_iterates(m: &MeanMatrix) -> impl Iterator<Item = Vec<f64>> + '_ {
    std::iter::successors(Some(vec![0.0; m.k()]), move |s| Some(pgf(m, s)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionVector {
    pub eta: Vec<f64>,
    pub iterations: usize,
    /// `max_i |f_i(eta) - eta_i|`
    pub residual: f64,
}

pub fn extinction_fixed_point(m: &MeanMatrix) -> Result<ExtinctionVector> {
    extinction_fixed_point_with(m, INV_MAX_ITER)
}

pub fn extinction_fixed_point_with(m: &MeanMatrix, max_iter: usize) -> Result<ExtinctionVector> {
    let k = m.k();
    if m.spectral_radius()? <= 1.0 + TOL_PHASE {
        return Ok(ExtinctionVector {
            eta: vec![1.0; k],
            iterations: 0,
            residual: 0.0,
        });
    }
    let residual = |s: &[f64]| {
        pgf(m, s)
            .iter()
            .zip(s)
            .map(|(f, x)| (f - x).abs())
            .fold(0.0, f64::max)
    };
    let mut s = vec![0.0; k];
    for iter in 1..=max_iter {
        let next = pgf(m, &s);
        let settled = next
            .iter()
            .zip(&s)
            .all(|(n, o)| (n - o).abs() <= 4.0 * f64::EPSILON * n);
        s = next;
        if settled {
            let res = residual(&s);
            if res <= TOL_INV {
                return Ok(ExtinctionVector {
                    eta: s,
                    iterations: iter,
                    residual: res,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        what: "extinction fixed point",
        iterations: max_iter,
        residual: residual(&s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    pub eta: Vec<f64>,
    /// Top-level mass over the smallest `alpha_l`; heuristic, not certified.
    pub tail_bound: f64,
}

/// `eta_l = (1/alpha_l) sum_{⟨x|1⟩ <= nmax} zeta_x(t) x_l`.
pub fn extinction_series(params: &ModelParams, t: f64, nmax: usize) -> Result<SeriesResult> {
    let report = total_mass(params, t, nmax)?;
    let alpha = params.alpha();
    let min_alpha = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SeriesResult {
        eta: report.mass.iter().zip(alpha).map(|(m, a)| m / a).collect(),
        tail_bound: report.tail_bound / min_alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum BranchOutcome {
    /// The population was empty after `generation` generations.
    Extinct { generation: u64 },
    /// Censored: a cap was hit while the population was still alive.
    Survived { generation: u64, population: u64 },
}

impl BranchOutcome {
    pub fn is_extinct(&self) -> bool {
        matches!(self, BranchOutcome::Extinct { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchingCaps {
    pub max_generations: u64,
    pub population_cap: u64,
}

impl Default for BranchingCaps {
    fn default() -> Self {
        Self {
            max_generations: 10_000,
            population_cap: 1_000_000,
        }
    }
}

/// One lineage from a single individual of `start_type`.
///
/// The type-j offspring of a generation with `z_i` type-i members is drawn as
/// one `Poisson(sum_i z_i m_ij)` variate, which has the same law as summing
/// independent per-individual `Poisson(m_ij)` draws.
pub fn simulate_branching(
    m: &MeanMatrix,
    start_type: usize,
    seed: u64,
    caps: BranchingCaps,
) -> BranchOutcome {
    assert!(start_type < m.k(), "start type out of range");
    let k = m.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0u64; k];
    z[start_type] = 1;
    for generation in 1..=caps.max_generations {
        let mut next = vec![0u64; k];
        for (j, slot) in next.iter_mut().enumerate() {
            let mean: f64 = (0..k).map(|i| z[i] as f64 * m.0[(i, j)]).sum();
            if mean > 0.0 {
                let draw: f64 = Poisson::new(mean)
                    .expect("finite positive mean")
                    .sample(&mut rng);
                *slot = draw as u64;
            }
        }
        let population: u64 = next.iter().sum();
        if population == 0 {
            return BranchOutcome::Extinct { generation };
        }
        if population >= caps.population_cap {
            return BranchOutcome::Survived {
                generation,
                population,
            };
        }
        z = next;
    }
    BranchOutcome::Survived {
        generation: caps.max_generations,
        population: z.iter().sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BranchingTally {
    pub extinct: u64,
    pub survived: u64,
}

impl BranchingTally {
    pub fn replicas(&self) -> u64 {
        self.extinct + self.survived
    }

    pub fn frequency(&self) -> f64 {
        self.extinct as f64 / self.replicas() as f64
    }

    /// Binomial standard error of the frequency at a reference probability.
    pub fn sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.replicas() as f64).sqrt()
    }

    fn merge(self, other: Self) -> Self {
        Self {
            extinct: self.extinct + other.extinct,
            survived: self.survived + other.survived,
        }
    }
}

/// Replica `r` uses seed `base_seed ^ r`; the merge is a plain count sum.
pub fn simulate_branching_replicas(
    m: &MeanMatrix,
    start_type: usize,
    base_seed: u64,
    replicas: u64,
    caps: BranchingCaps,
) -> BranchingTally {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            if simulate_branching(m, start_type, base_seed ^ r, caps).is_extinct() {
                BranchingTally {
                    extinct: 1,
                    survived: 0,
                }
            } else {
                BranchingTally {
                    extinct: 0,
                    survived: 1,
                }
            }
        })
        .reduce(BranchingTally::default, BranchingTally::merge)
}
