//! Closed-form cluster densities `zeta_x(t)` for the vector multiplicative
//! kernel, truncated moment sums, and a residual check against the modified
//! Smoluchowski equations.
//!
//! ```text
//! zeta_x(t) = alpha^x / x! * T_x * exp(-⟨x|V|alpha⟩ t) * t^(⟨x|1⟩ - 1)
//! ```
//!
//! Everything is assembled in log space; `T_x` comes from
//! [`crate::spanning_tree::log_tree_factor`].

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ClusterSize, ModelParams};
use crate::spanning_tree::log_tree_factor;
use crate::special::ln_factorial;

/// Upper bound on the number of sizes [`enumerate_sizes`] will materialize.
pub const SIZE_CAP: usize = 5_000_000;

/// Default truncation level for a `k`-type model.
pub fn default_nmax(k: usize) -> usize {
    match k {
        0..=2 => 40,
        3..=4 => 20,
        5..=8 => 10,
        _ => 6,
    }
}

/// `ln zeta_x(t)` for `t > 0`; `-inf` for unreachable compositions.
pub fn log_zeta(params: &ModelParams, x: &ClusterSize, t: f64) -> f64 {
    assert_eq!(x.k(), params.k(), "cluster size has the wrong dimension");
    debug_assert!(t > 0.0);
    let log_t = log_tree_factor(params, x);
    if log_t == f64::NEG_INFINITY {
        return log_t;
    }
    let alpha = params.alpha();
    let v_alpha = params.v_alpha();
    let mut acc = log_t;
    let mut rate = 0.0;
    for i in x.support() {
        let xi = x.counts()[i];
        acc += f64::from(xi) * alpha[i].ln() - ln_factorial(u64::from(xi));
        rate += f64::from(xi) * v_alpha[i];
    }
    acc - rate * t + (x.total() as f64 - 1.0) * t.ln()
}

/// Limiting density of clusters with composition `x` at time `t`.
pub fn zeta(params: &ModelParams, x: &ClusterSize, t: f64) -> f64 {
    assert!(t >= 0.0, "time must be nonnegative");
    if t == 0.0 {
        return match x.singleton_type() {
            Some(i) => params.alpha()[i],
            None => 0.0,
        };
    }
    let l = log_zeta(params, x, t);
    if l < -745.0 {
        0.0
    } else {
        l.exp()
    }
}

/// `d zeta_x / dt = zeta_x(t) ((⟨x|1⟩ - 1)/t - ⟨x|V|alpha⟩)`.
pub fn zeta_derivative(params: &ModelParams, x: &ClusterSize, t: f64) -> f64 {
    let z = zeta(params, x, t);
    if z == 0.0 {
        return 0.0;
    }
    let rate = params.v().bilinear(&x.as_f64(), params.alpha());
    z * ((x.total() as f64 - 1.0) / t - rate)
}

/// Number of `x` in `Z_+^k` with `1 <= ⟨x|1⟩ <= nmax`: `C(nmax + k, k) - 1`.
pub fn size_count(k: usize, nmax: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        c = c.saturating_mul(nmax as u128 + i) / i;
    }
    c - 1
}

/// Every `x` with `1 <= ⟨x|1⟩ <= nmax`, by total size then lexicographically.
pub fn enumerate_sizes(k: usize, nmax: usize) -> Result<Vec<ClusterSize>> {
    if k == 0 || nmax == 0 {
        return Err(Error::InvalidArgument("k and nmax must be positive".into()));
    }
    let count = size_count(k, nmax);
    if count > SIZE_CAP as u128 {
        return Err(Error::SizeOverflow {
            k,
            nmax,
            count,
            cap: SIZE_CAP,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut buf = vec![0u32; k];
    for level in 1..=nmax as u32 {
        fill_level(&mut buf, 0, level, &mut out);
    }
    Ok(out)
}

fn fill_level(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<ClusterSize>) {
    if pos == buf.len() - 1 {
        buf[pos] = remaining;
        out.push(ClusterSize::from_vec_unchecked(buf.to_vec()));
        return;
    }
    for c in 0..=remaining {
        buf[pos] = c;
        fill_level(buf, pos + 1, remaining - c, out);
    }
}

/// `zeta_x(t)` for every `x` up to a total size of `nmax`.
#[derive(Debug, Clone)]
pub struct ClusterDistribution {
    pub params: ModelParams,
    pub t: f64,
    pub nmax: usize,
    /// In [`enumerate_sizes`] order; zeros are kept.
    pub entries: Vec<(ClusterSize, f64)>,
}

impl ClusterDistribution {
    pub fn compute(params: &ModelParams, t: f64, nmax: usize) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time must be >= 0, got {t}"
            )));
        }
        let sizes = enumerate_sizes(params.k(), nmax)?;
        let entries = sizes
            .into_par_iter()
            .map(|x| {
                let z = zeta(params, &x, t);
                (x, z)
            })
            .collect();
        Ok(Self {
            params: params.clone(),
            t,
            nmax,
            entries,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ClusterSize, f64)> {
        self.entries.iter()
    }

    /// `sum_x zeta_x x` and the largest per-type contribution of the top level.
    pub fn mass(&self) -> MassReport {
        let k = self.params.k();
        let mut mass = vec![0.0; k];
        let mut last = vec![0.0; k];
        for (x, z) in &self.entries {
            let top = x.total() == self.nmax as u64;
            for (i, &c) in x.counts().iter().enumerate() {
                let term = z * f64::from(c);
                mass[i] += term;
                if top {
                    last[i] += term;
                }
            }
        }
        MassReport {
            t: self.t,
            mass,
            tail_bound: last.into_iter().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassReport {
    pub t: f64,
    pub mass: Vec<f64>,
    /// Heuristic: mass carried by clusters of total size exactly `nmax`.
    pub tail_bound: f64,
}

/// Truncated total mass `sum_{⟨x|1⟩ <= nmax} zeta_x(t) x`.
pub fn total_mass(params: &ModelParams, t: f64, nmax: usize) -> Result<MassReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time must be > 0, got {t}")));
    }
    Ok(ClusterDistribution::compute(params, t, nmax)?.mass())
}

/// The three terms of the modified Smoluchowski equation at one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseTerms {
    /// Analytic `d zeta_x / dt`.
    pub derivative: f64,
    /// `-zeta_x ⟨x|V|alpha⟩`
    pub loss: f64,
    /// `1/2 sum_{y+z=x} ⟨y|V|z⟩ zeta_y zeta_z`
    pub gain: f64,
}

impl MseTerms {
    pub fn residual(&self) -> f64 {
        self.derivative - (self.loss + self.gain)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.derivative
            .abs()
            .max(self.loss.abs())
            .max(self.gain.abs())
    }
}

pub fn mse_terms(params: &ModelParams, x: &ClusterSize, t: f64) -> MseTerms {
    assert!(t > 0.0, "time must be positive");
    let xf = x.as_f64();
    let z = zeta(params, x, t);
    let loss = -z * params.v().bilinear(&xf, params.alpha());
    let derivative = zeta_derivative(params, x, t);

    // odometer over 0 <= y <= x, skipping y = 0 and y = x
    let bound = x.counts();
    let k = bound.len();
    let mut y = vec![0u32; k];
    let mut sum = 0.0;
    loop {
        let mut pos = 0;
        while pos < k {
            if y[pos] < bound[pos] {
                y[pos] += 1;
                break;
            }
            y[pos] = 0;
            pos += 1;
        }
        if pos == k || y.as_slice() == bound {
            break;
        }
        let zv: Vec<u32> = bound.iter().zip(&y).map(|(a, b)| a - b).collect();
        let ys = ClusterSize::from_vec_unchecked(y.clone());
        let zs = ClusterSize::from_vec_unchecked(zv);
        let zy = zeta(params, &ys, t);
        if zy == 0.0 {
            continue;
        }
        let zz = zeta(params, &zs, t);
        if zz == 0.0 {
            continue;
        }
        sum += params.v().bilinear(&ys.as_f64(), &zs.as_f64()) * zy * zz;
    }
    MseTerms {
        derivative,
        loss,
        gain: 0.5 * sum,
    }
}

/// `d zeta_x/dt - [-zeta_x ⟨x|V|alpha⟩ + 1/2 sum_{y+z=x} ⟨y|V|z⟩ zeta_y zeta_z]`.
pub fn mse_residual(params: &ModelParams, x: &ClusterSize, t: f64) -> f64 {
    mse_terms(params, x, t).residual()
}
