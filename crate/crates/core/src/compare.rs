//! Cross-validation of the four analytic routes to the post-gel vector `y(t)`:
//!
//! ```text
//! inversion      y
//! fixed point    alpha_i t eta_i     (eta from the branching pgf, M = V D[alpha] t)
//! series         alpha_i t eta_i     (eta from the truncated cluster series)
//! mass           t * sum_x zeta_x(t) x
//! ```
//!
//! Below the gelation time all four collapse to `alpha t`.

use serde::Serialize;

use crate::branching::{extinction_fixed_point, extinction_series, MeanMatrix};
use crate::error::Result;
use crate::lambert_euler::invert;
use crate::model::{ModelParams, Phase};
use crate::smoluchowski::total_mass;

/// Absolute part of the agreement tolerance; the truncation tail is added on top.
pub const TOL_COMPARE: f64 = 1e-6;

pub const ROUTES: [&str; 4] = ["inversion", "fixed_point", "series", "mass"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub phase: Phase,
    pub rho: f64,
    /// The four estimates of `y`, in [`ROUTES`] order.
    pub routes: [Vec<f64>; 4],
    /// `t` times the truncated-mass tail bound.
    pub tail_bound: f64,
    /// Max-norm distance for each pair `(a, b)` with `a < b`, row-major.
    pub discrepancies: [f64; 6],
    pub tolerance: f64,
    pub pass: bool,
}

impl CompareRow {
    pub fn max_discrepancy(&self) -> f64 {
        self.discrepancies.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub nmax: usize,
    pub rows: Vec<CompareRow>,
    pub pass: bool,
}

pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn compare_at(params: &ModelParams, t: f64, nmax: usize) -> Result<CompareRow> {
    let inv = invert(params, t)?;
    let fp = extinction_fixed_point(&MeanMatrix::from_model(params, t)?)?;
    let series = extinction_series(params, t, nmax)?;
    let mass = total_mass(params, t, nmax)?;

    let scale = |eta: &[f64]| -> Vec<f64> {
        eta.iter()
            .zip(params.alpha())
            .map(|(e, a)| e * a * t)
            .collect()
    };
    let routes = [
        inv.y.clone(),
        scale(&fp.eta),
        scale(&series.eta),
        mass.mass.iter().map(|m| m * t).collect(),
    ];
    let tail_bound = mass.tail_bound * t;
    let tolerance = TOL_COMPARE + tail_bound;
    let discrepancies = PAIRS.map(|(a, b)| {
        routes[a]
            .iter()
            .zip(&routes[b])
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    });
    let pass = discrepancies.iter().all(|&d| d <= tolerance);
    Ok(CompareRow {
        t,
        phase: inv.region.phase,
        rho: inv.region.rho,
        routes,
        tail_bound,
        discrepancies,
        tolerance,
        pass,
    })
}

pub fn compare(params: &ModelParams, t_grid: &[f64], nmax: usize) -> Result<CompareReport> {
    let rows = t_grid
        .iter()
        .map(|&t| compare_at(params, t, nmax))
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(CompareReport { nmax, rows, pass })
}
