//! Model parameters for the vector multiplicative coalescent: the symmetric
//! interaction matrix `V`, the initial density per type `alpha`, and the
//! quantities derived from them (spectral radius, gelation time, phase).

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Relative tolerance on the Collatz–Wielandt bracket in [`spectral_radius`].
pub const TOL_RHO: f64 = 1e-12;
/// Iteration cap for [`spectral_radius`].
pub const RHO_MAX_ITER: usize = 100_000;
/// Half-width of the band around `rho * t == 1` classified as critical.
pub const TOL_PHASE: f64 = 1e-9;

/// One coalescent family: `k` types, interaction matrix `V`, initial densities `alpha`.
#[derive(Clone, PartialEq)]
pub struct ModelParams {
    v: SquareMatrix,
    alpha: Vec<f64>,
}

/// JSON form of a model: `{"k": 2, "V": [[0,1],[1,0]], "alpha": [15,2]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub k: usize,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

impl ModelParams {
    /// Builds and validates.
    pub fn new(v: SquareMatrix, alpha: Vec<f64>) -> Result<Self> {
        Self::new_unchecked(v, alpha)?.validate()
    }

    pub fn from_rows(v: &[Vec<f64>], alpha: &[f64]) -> Result<Self> {
        ModelConfig {
            k: alpha.len(),
            v: v.to_vec(),
            alpha: alpha.to_vec(),
        }
        .into_params()
    }

    /// Checks only the shapes. Use [`ModelParams::validate`] before computing anything.
    pub fn new_unchecked(v: SquareMatrix, alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Shape {
                path: "$.k".into(),
                reason: "need at least one type".into(),
            });
        }
        if v.dim() != alpha.len() {
            return Err(Error::Shape {
                path: "$.V".into(),
                reason: format!("expected {0}x{0}, got {1}x{1}", alpha.len(), v.dim()),
            });
        }
        Ok(Self { v, alpha })
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let cfg: ModelConfig =
            serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
        cfg.into_params()
    }

    /// The one-type model `V = [[1]]`, `alpha = [1]` (Erdős–Rényi scaling).
    pub fn single_type() -> Self {
        Self::from_rows(&[vec![1.0]], &[1.0]).expect("valid")
    }

    /// Returns `self` unchanged iff `V` is nonnegative, symmetric and
    /// irreducible and every `alpha` is positive.
    pub fn validate(self) -> Result<Self> {
        let k = self.k();
        for i in 0..k {
            for j in 0..k {
                let x = self.v[(i, j)];
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(Error::NegativeEntry {
                        path: format!("$.V[{i}][{j}]"),
                    });
                }
            }
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::NonpositiveAlpha {
                    path: format!("$.alpha[{i}]"),
                });
            }
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if self.v[(i, j)] != self.v[(j, i)] {
                    return Err(Error::AsymmetricMatrix {
                        path: format!("$.V[{i}][{j}]"),
                    });
                }
            }
        }
        if let Some(unreachable) = first_unreachable(&self.v) {
            return Err(Error::ReducibleMatrix {
                path: "$.V".into(),
                unreachable,
            });
        }
        Ok(self)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    #[inline]
    pub fn v(&self) -> &SquareMatrix {
        &self.v
    }

    #[inline]
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `V · D[alpha]`
    pub fn v_d_alpha(&self) -> SquareMatrix {
        self.v.scale_columns(&self.alpha)
    }

    /// `(V alpha)_i`, the per-particle interaction rate of a type-i particle
    /// with the initial population.
    pub fn v_alpha(&self) -> Vec<f64> {
        self.v.mul_vec(&self.alpha)
    }

    pub fn to_config(&self) -> ModelConfig {
        ModelConfig {
            k: self.k(),
            v: self.v.rows(),
            alpha: self.alpha.clone(),
        }
    }

    /// Relabels types: type `i` becomes type `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut alpha = vec![0.0; self.k()];
        for (i, &p) in perm.iter().enumerate() {
            alpha[p] = self.alpha[i];
        }
        Self {
            v: self.v.permuted(perm),
            alpha,
        }
    }

    /// Number of vertices/particles of each type at scale `n`: `floor(alpha_i n)`
    /// with leftover units handed out by largest fractional remainder so the
    /// total is `round(n · sum(alpha))`.
    pub fn part_sizes(&self, n: u64) -> Vec<u64> {
        let exact: Vec<f64> = self.alpha.iter().map(|a| a * n as f64).collect();
        let mut sizes: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
        let target = exact.iter().sum::<f64>().round() as u64;
        let assigned: u64 = sizes.iter().sum();
        let mut order: Vec<usize> = (0..self.k()).collect();
        // ties go to the lower type index
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.partial_cmp(&ra)
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(target.saturating_sub(assigned) as usize) {
            sizes[i] += 1;
        }
        sizes
    }
}

impl fmt::Debug for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelParams")
            .field("k", &self.k())
            .field("V", &self.v)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl ModelConfig {
    /// Shape-checks against the JSON layout, then validates.
    pub fn into_params(self) -> Result<ModelParams> {
        if self.alpha.len() != self.k {
            return Err(Error::Shape {
                path: "$.alpha".into(),
                reason: format!("expected {} entries, got {}", self.k, self.alpha.len()),
            });
        }
        if self.v.len() != self.k {
            return Err(Error::Shape {
                path: "$.V".into(),
                reason: format!("expected {} rows, got {}", self.k, self.v.len()),
            });
        }
        for (i, row) in self.v.iter().enumerate() {
            if row.len() != self.k {
                return Err(Error::Shape {
                    path: format!("$.V[{i}]"),
                    reason: format!("expected {} entries, got {}", self.k, row.len()),
                });
            }
        }
        let v = SquareMatrix::from_rows(&self.v).expect("shape checked");
        ModelParams::new(v, self.alpha)
    }
}

/// BFS over the support graph `{(i, j) : v_ij > 0}` from type 0.
fn first_unreachable(v: &SquareMatrix) -> Option<usize> {
    let k = v.dim();
    let mut seen = vec![false; k];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in 0..k {
            if !seen[j] && v[(i, j)] > 0.0 {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.iter().position(|s| !s)
}

/// Cluster composition: `x_i` particles of type `i`.
///
/// Ordered by total size first and lexicographically within a size, which is
/// the order [`crate::smoluchowski::enumerate_sizes`] produces.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterSize(Vec<u32>);

impl ClusterSize {
    /// Fails on an all-zero vector.
    pub fn new(x: Vec<u32>) -> Result<Self> {
        if x.iter().all(|&c| c == 0) {
            return Err(Error::InvalidArgument(
                "cluster size must contain at least one particle".into(),
            ));
        }
        Ok(Self(x))
    }

    pub(crate) fn from_vec_unchecked(x: Vec<u32>) -> Self {
        debug_assert!(x.iter().any(|&c| c > 0));
        Self(x)
    }

    /// The unit vector `e_i` in dimension `k`.
    pub fn unit(k: usize, i: usize) -> Self {
        let mut x = vec![0; k];
        x[i] = 1;
        Self(x)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    /// `⟨x|1⟩`
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| f64::from(c)).collect()
    }

    /// Indices with a nonzero count.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0).collect()
    }

    /// `Some(i)` if this is the singleton `e_i`.
    pub fn singleton_type(&self) -> Option<usize> {
        (self.total() == 1).then(|| self.0.iter().position(|&c| c == 1).unwrap())
    }
}

impl Ord for ClusterSize {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ClusterSize {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ClusterSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Subcritical,
    Critical,
    Supercritical,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Subcritical => "subcritical",
            Phase::Critical => "critical",
            Phase::Supercritical => "supercritical",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Phase of `alpha t` together with `rho = ρ(V D[alpha] t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRegion {
    pub phase: Phase,
    pub rho: f64,
}

impl PhaseRegion {
    pub fn from_rho(rho: f64) -> Self {
        let phase = if (rho - 1.0).abs() <= TOL_PHASE {
            Phase::Critical
        } else if rho < 1.0 {
            Phase::Subcritical
        } else {
            Phase::Supercritical
        };
        Self { phase, rho }
    }

    /// Membership in the closed subcritical region (`rho <= 1` up to the band).
    pub fn in_closure(&self) -> bool {
        self.phase != Phase::Supercritical
    }
}

/// Perron root of a nonnegative matrix.
///
/// Power iteration on `A + sI` (with `s` the largest row sum) from the
/// all-ones vector. The shift makes an irreducible matrix primitive, so
/// periodic matrices such as bipartite kernels converge too. Stops once the
/// Collatz–Wielandt bounds `min (Ax)_i/x_i <= rho <= max (Ax)_i/x_i` agree to
/// [`TOL_RHO`] relative to `rho`.
pub fn spectral_radius(a: &SquareMatrix) -> Result<f64> {
    let k = a.dim();
    if k == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if let Some(bad) = a
        .as_slice()
        .iter()
        .find(|x| !(**x >= 0.0) || !x.is_finite())
    {
        return Err(Error::InvalidArgument(format!(
            "spectral_radius needs a nonnegative finite matrix, found {bad}"
        )));
    }
    let a = balance(a.clone());
    let shift = a.max_row_sum();
    if shift == 0.0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0; k];
    let mut gap = f64::INFINITY;
    for _ in 0..RHO_MAX_ITER {
        let mut y = a.mul_vec(&x);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..k {
            y[i] += shift * x[i];
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let rho = 0.5 * (lo + hi) - shift;
        gap = hi - lo;
        if gap <= TOL_RHO * rho {
            return Ok(rho);
        }
        let norm = y.iter().copied().fold(0.0, f64::max);
        if !(norm > 0.0) {
            break;
        }
        for i in 0..k {
            // a zero coordinate means the support is reducible
            x[i] = (y[i] / norm).max(f64::MIN_POSITIVE);
        }
    }
    Err(Error::NoConvergence {
        what: "spectral radius",
        iterations: RHO_MAX_ITER,
        residual: gap,
    })
}

/// Osborne balancing: a diagonal similarity `D^-1 A D` that equalizes each
/// off-diagonal row sum with the matching column sum. The spectrum is
/// unchanged, but matrices like `[[0, 1e-19], [2.7, 0]]` become
/// `[[0, r], [r, 0]]`, on which the shifted power iteration converges at once.
fn balance(mut a: SquareMatrix) -> SquareMatrix {
    let k = a.dim();
    for _ in 0..100 {
        let mut done = true;
        for i in 0..k {
            let (mut row, mut col) = (0.0, 0.0);
            for j in 0..k {
                if j != i {
                    row += a[(i, j)];
                    col += a[(j, i)];
                }
            }
            if row == 0.0 || col == 0.0 {
                continue;
            }
            let f = (col / row).sqrt();
            if (f - 1.0).abs() > 1e-3 {
                done = false;
                for j in 0..k {
                    if j != i {
                        a[(i, j)] *= f;
                        a[(j, i)] /= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
    a
}

/// `T_gel = 1 / ρ(V D[alpha])`; infinite when there is no interaction at all.
pub fn gelation_time(params: &ModelParams) -> Result<f64> {
    let rho = spectral_radius(&params.v_d_alpha())?;
    Ok(if rho > 0.0 { 1.0 / rho } else { f64::INFINITY })
}

/// Classifies `alpha t` against the closed subcritical region.
pub fn classify(params: &ModelParams, t: f64) -> Result<PhaseRegion> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be >= 0, got {t}"
        )));
    }
    let rho = spectral_radius(&params.v_d_alpha())?;
    Ok(PhaseRegion::from_rho(rho * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bipartite() -> ModelParams {
        ModelParams::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[15.0, 2.0]).unwrap()
    }

    fn m(rows: &[&[f64]]) -> SquareMatrix {
        SquareMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(ModelParams::from_rows(&[vec![1.0]], &[1.0]).is_ok());
        assert!(ModelParams::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[15.0, 2.0]).is_ok());
        let err = ModelParams::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[1.0, 1.0]);
        assert!(matches!(
            err,
            Err(Error::ReducibleMatrix { unreachable: 1, .. })
        ));
    }

    #[test]
    fn validate_error_paths() {
        let e = ModelParams::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]], &[1.0, 1.0]).unwrap_err();
        assert_eq!(
            e,
            Error::AsymmetricMatrix {
                path: "$.V[0][1]".into()
            }
        );
        let e =
            ModelParams::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]], &[1.0, 1.0]).unwrap_err();
        assert_eq!(
            e,
            Error::NegativeEntry {
                path: "$.V[0][1]".into()
            }
        );
        let e = ModelParams::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 0.0]).unwrap_err();
        assert_eq!(
            e,
            Error::NonpositiveAlpha {
                path: "$.alpha[1]".into()
            }
        );
        let e = ModelParams::from_rows(&[vec![1.0, f64::NAN], vec![f64::NAN, 1.0]], &[1.0, 1.0])
            .unwrap_err();
        assert!(matches!(e, Error::NegativeEntry { .. }));
        // type 2 isolated from {0, 1}
        let e = ModelParams::from_rows(
            &[
                vec![0.0, 1.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 3.0],
            ],
            &[1.0, 1.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(e, Error::ReducibleMatrix { unreachable: 2, .. }));
    }

    #[test]
    fn json_shape_errors_name_the_field() {
        let e = ModelParams::from_json_str(r#"{"k":2,"V":[[0,1],[1]],"alpha":[1,1]}"#).unwrap_err();
        assert!(matches!(e, Error::Shape { ref path, .. } if path == "$.V[1]"));
        let e = ModelParams::from_json_str(r#"{"k":2,"V":[[0,1],[1,0]],"alpha":[1]}"#).unwrap_err();
        assert!(matches!(e, Error::Shape { ref path, .. } if path == "$.alpha"));
        let ok = ModelParams::from_json_str(r#"{"k":2,"V":[[0,1],[1,0]],"alpha":[15,2]}"#).unwrap();
        assert_eq!(ok, bipartite());
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(spectral_radius(&m(&[&[1.0]])).unwrap(), 1.0);
        let r = spectral_radius(&m(&[&[0.0, 2.0], &[15.0, 0.0]])).unwrap();
        assert!((r - 30f64.sqrt()).abs() < 1e-11 * r);
        let r = spectral_radius(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((r - 3.0).abs() < 1e-11);
        assert_eq!(spectral_radius(&m(&[&[0.0]])).unwrap(), 0.0);
    }

    #[test]
    fn nilpotent_input_does_not_converge() {
        // reducible, rho = 0 but nonzero
        let e = spectral_radius(&m(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap_err();
        assert!(matches!(e, Error::NoConvergence { .. }));
    }

    #[test]
    fn gelation_time_examples() {
        assert!((gelation_time(&ModelParams::single_type()).unwrap() - 1.0).abs() < 1e-14);
        let tg = gelation_time(&bipartite()).unwrap();
        assert!((tg - 1.0 / 30f64.sqrt()).abs() < 1e-12);
        let p = ModelParams::from_rows(&[vec![2.0]], &[3.0]).unwrap();
        assert!((gelation_time(&p).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let p = bipartite();
        let r = classify(&p, 0.1).unwrap();
        assert_eq!(r.phase, Phase::Subcritical);
        assert!((r.rho - 0.1 * 30f64.sqrt()).abs() < 1e-10);
        assert_eq!(
            classify(&p, 1.0 / 30f64.sqrt()).unwrap().phase,
            Phase::Critical
        );
        assert_eq!(classify(&p, 1.0).unwrap().phase, Phase::Supercritical);
        assert!(classify(&p, -1.0).is_err());
    }

    #[test]
    fn part_sizes_largest_remainder() {
        assert_eq!(bipartite().part_sizes(100), vec![1500, 200]);
        let p = ModelParams::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[0.5, 0.5]).unwrap();
        assert_eq!(p.part_sizes(10), vec![5, 5]);
        let p = ModelParams::from_rows(
            &[
                vec![1.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0],
            ],
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap();
        let s = p.part_sizes(10);
        assert_eq!(s.iter().sum::<u64>(), 10);
        assert_eq!(s, vec![4, 3, 3]);
    }

    #[test]
    fn cluster_size_order_is_graded() {
        let a = ClusterSize::new(vec![2, 0]).unwrap();
        let b = ClusterSize::new(vec![0, 3]).unwrap();
        let c = ClusterSize::new(vec![1, 1]).unwrap();
        assert!(a < b);
        assert!(c < a);
        assert!(ClusterSize::new(vec![0, 0]).is_err());
    }

    fn arb_nonneg(max_k: usize) -> impl Strategy<Value = SquareMatrix> {
        (1..=max_k).prop_flat_map(|k| {
            prop::collection::vec(0.01f64..5.0, k * k)
                .prop_map(move |d| SquareMatrix::from_row_major(k, d).unwrap())
        })
    }

    fn arb_model() -> impl Strategy<Value = ModelParams> {
        (1usize..=5).prop_flat_map(|k| {
            (
                prop::collection::vec(0.0f64..3.0, k * k),
                prop::collection::vec(0.1f64..4.0, k),
            )
                .prop_map(move |(raw, alpha)| {
                    let mut v = SquareMatrix::zeros(k);
                    for i in 0..k {
                        for j in i..k {
                            // keep a path 0-1-2-... so the support stays connected
                            let w = raw[i * k + j] + if j == i + 1 { 0.5 } else { 0.0 };
                            v[(i, j)] = w;
                            v[(j, i)] = w;
                        }
                    }
                    ModelParams::new(v, alpha).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn spectral_radius_is_homogeneous(a in arb_nonneg(6), c in 0.01f64..100.0) {
            let r = spectral_radius(&a).unwrap();
            let rc = spectral_radius(&a.scaled(c)).unwrap();
            prop_assert!((rc - c * r).abs() <= 1e-11 * c * r);
        }

        #[test]
        fn gelation_time_permutation_invariant(p in arb_model(), seed in any::<u64>()) {
            let k = p.k();
            let mut perm: Vec<usize> = (0..k).collect();
            // Fisher-Yates driven by the seed
            let mut s = seed;
            for i in (1..k).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let q = p.permuted(&perm).validate().unwrap();
            let a = gelation_time(&p).unwrap();
            let b = gelation_time(&q).unwrap();
            prop_assert!((a - b).abs() <= 1e-11 * a);
        }

        #[test]
        fn classification_switches_at_gelation_time(p in arb_model(), f in 0.01f64..3.0) {
            let tg = gelation_time(&p).unwrap();
            let phase = classify(&p, f * tg).unwrap().phase;
            if f < 1.0 - 1e-8 {
                prop_assert_eq!(phase, Phase::Subcritical);
            } else if f > 1.0 + 1e-8 {
                prop_assert_eq!(phase, Phase::Supercritical);
            }
            prop_assert_eq!(classify(&p, tg).unwrap().phase, Phase::Critical);
        }
    }
}
