//! Multidimensional Lambert–Euler inversion: for `alpha t` given, find the
//! unique `y` in the closed subcritical region with
//!
//! ```text
//! y_i exp(-(V y)_i) = alpha_i t exp(-(V alpha t)_i)    for every i.
//! ```
//!
//! When `alpha t` is itself subcritical the answer is `y = alpha t`. Otherwise
//! we want the smallest solution, which the map
//! `y ↦ alpha t ⊙ exp(V y - V alpha t)` reaches monotonically from `y = 0`:
//! the map is increasing in `y`, so its iterates from zero climb to the least
//! fixed point and never overshoot onto the trivial root `alpha t`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{classify, ModelParams, PhaseRegion};

/// Absolute tolerance on the inversion residual.
pub const TOL_INV: f64 = 1e-12;
pub const INV_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionResult {
    pub t: f64,
    pub y: Vec<f64>,
    pub iterations: usize,
    /// `max_i |y_i e^{-(Vy)_i} - alpha_i t e^{-(V alpha t)_i}|`
    pub residual: f64,
    pub region: PhaseRegion,
}

pub fn invert(params: &ModelParams, t: f64) -> Result<InversionResult> {
    invert_with(params, t, INV_MAX_ITER)
}

/// [`invert`] with an explicit iteration cap.
pub fn invert_with(params: &ModelParams, t: f64, max_iter: usize) -> Result<InversionResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be > 0, got {t}")));
    }
    let region = classify(params, t)?;
    let alpha_t: Vec<f64> = params.alpha().iter().map(|a| a * t).collect();
    let v_alpha_t = params.v().mul_vec(&alpha_t);

    if region.in_closure() {
        let residual = residual(params, &alpha_t, &alpha_t, &v_alpha_t);
        return Ok(InversionResult {
            t,
            y: alpha_t,
            iterations: 0,
            residual,
            region,
        });
    }

    let k = params.k();
    let mut y = vec![0.0; k];
    let mut next = vec![0.0; k];
    for iter in 1..=max_iter {
        let vy = params.v().mul_vec(&y);
        let mut settled = true;
        for i in 0..k {
            next[i] = alpha_t[i] * (vy[i] - v_alpha_t[i]).exp();
            let step = next[i] - y[i];
            debug_assert!(
                step >= -4.0 * f64::EPSILON * y[i],
                "iteration must be monotone"
            );
            if step.abs() > 4.0 * f64::EPSILON * next[i] {
                settled = false;
            }
        }
        std::mem::swap(&mut y, &mut next);
        if settled {
            let res = residual(params, &y, &alpha_t, &v_alpha_t);
            if res <= TOL_INV {
                return Ok(InversionResult {
                    t,
                    y,
                    iterations: iter,
                    residual: res,
                    region,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        what: "Lambert-Euler inversion",
        iterations: max_iter,
        residual: residual(params, &y, &alpha_t, &v_alpha_t),
    })
}

fn residual(params: &ModelParams, y: &[f64], alpha_t: &[f64], v_alpha_t: &[f64]) -> f64 {
    let vy = params.v().mul_vec(y);
    (0..y.len())
        .map(|i| (y[i] * (-vy[i]).exp() - alpha_t[i] * (-v_alpha_t[i]).exp()).abs())
        .fold(0.0, f64::max)
}

/// `min {x >= 0 : x e^{-x} = t e^{-t}}`.
///
/// Equal to `t` on `(0, 1]`; for `t > 1` the smaller root lies in `(0, 1)`
/// where `x e^{-x}` is increasing, so plain bisection finds it.
pub fn invert_1d(t: f64) -> f64 {
    assert!(t > 0.0, "time must be positive");
    if t <= 1.0 {
        return t;
    }
    let target = t * (-t).exp();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mid * (-mid).exp() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// [`invert`] at each point of a strictly increasing grid.
pub fn trace_post_gel(params: &ModelParams, t_grid: &[f64]) -> Result<Vec<InversionResult>> {
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "time grid must be strictly increasing".into(),
        ));
    }
    t_grid.par_iter().map(|&t| invert(params, t)).collect()
}
