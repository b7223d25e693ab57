//! Weighted spanning-tree enumerator of a complete graph and the tree-weight
//! factor `T_x` used by the exact cluster densities.
//!
//! `tau(K_m, w)` is the sum over spanning trees of the product of edge
//! weights. By the weighted matrix-tree theorem it equals any cofactor of the
//! weighted Laplacian; we delete the first row and column and factor the rest
//! by LU with partial pivoting.
//!
//! `T_x` is the total weight of spanning trees of the complete graph on
//! `⟨x|1⟩` vertices (`x_i` of type `i`, edge weight `v_ij` between types `i`
//! and `j`):
//!
//! ```text
//! T_x = tau(K_S, x_i x_j v_ij) / prod_{i in S} x_i * prod_{i in S} (Vx)_i^(x_i - 1)
//! ```
//!
//! where `S` is the support of `x`. Restricting to the support keeps the
//! formula finite when some `x_i = 0`; on a full support it is the usual one.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::{ClusterSize, ModelParams};

/// Complete graph on `m` vertices with symmetric nonnegative edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCompleteGraph {
    w: SquareMatrix,
}

impl WeightedCompleteGraph {
    pub fn new(w: SquareMatrix) -> Result<Self> {
        let m = w.dim();
        if m == 0 {
            return Err(Error::InvalidArgument(
                "graph needs at least one vertex".into(),
            ));
        }
        for i in 0..m {
            if w[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("w[{i}][{i}] must be 0")));
            }
            for j in (i + 1)..m {
                let a = w[(i, j)];
                if !(a >= 0.0) || !a.is_finite() || a != w[(j, i)] {
                    return Err(Error::InvalidArgument(format!(
                        "w[{i}][{j}] must be finite, nonnegative and symmetric"
                    )));
                }
            }
        }
        Ok(Self { w })
    }

    /// Complete graph with every edge weighted `c`.
    pub fn uniform(m: usize, c: f64) -> Self {
        let mut w = SquareMatrix::filled(m, c);
        for i in 0..m {
            w[(i, i)] = 0.0;
        }
        Self { w }
    }

    pub fn m(&self) -> usize {
        self.w.dim()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    pub fn weights(&self) -> &SquareMatrix {
        &self.w
    }

    fn is_connected(&self) -> bool {
        let m = self.m();
        let mut seen = vec![false; m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..m {
                if !seen[j] && self.w[(i, j)] > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Laplacian with row and column 0 removed.
    fn reduced_laplacian(&self) -> SquareMatrix {
        let m = self.m();
        let mut l = SquareMatrix::zeros(m - 1);
        for i in 1..m {
            let mut deg = 0.0;
            for j in 0..m {
                if j != i {
                    deg += self.w[(i, j)];
                    if j > 0 {
                        l[(i - 1, j - 1)] = -self.w[(i, j)];
                    }
                }
            }
            l[(i - 1, i - 1)] = deg;
        }
        l
    }
}

/// `tau(K_m, w)`.
pub fn tree_enumerator(g: &WeightedCompleteGraph) -> f64 {
    let log = log_tree_enumerator(g);
    if log == f64::NEG_INFINITY {
        0.0
    } else {
        log.exp()
    }
}

/// `ln tau(K_m, w)`, or `-inf` if the positive-weight support is disconnected.
pub fn log_tree_enumerator(g: &WeightedCompleteGraph) -> f64 {
    if g.m() == 1 {
        return 0.0;
    }
    if !g.is_connected() {
        return f64::NEG_INFINITY;
    }
    log_abs_det(g.reduced_laplacian())
}

/// `ln |det A|` by LU with partial pivoting.
fn log_abs_det(mut a: SquareMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[(r, col)].abs().total_cmp(&a[(s, col)].abs()))
            .unwrap();
        let pivot = a[(pivot_row, col)];
        if pivot == 0.0 {
            return f64::NEG_INFINITY;
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
            }
        }
        acc += pivot.abs().ln();
        for r in (col + 1)..n {
            let f = a[(r, col)] / pivot;
            if f != 0.0 {
                for j in (col + 1)..n {
                    a[(r, j)] -= f * a[(col, j)];
                }
            }
        }
    }
    acc
}

/// `ln T_x` for the model's kernel, evaluated on the support of `x`;
/// `-inf` when no spanning tree has positive weight.
pub fn log_tree_factor(params: &ModelParams, x: &ClusterSize) -> f64 {
    let support = x.support();
    let xf = x.as_f64();
    let vx = params.v().mul_vec(&xf);
    let v = params.v();

    let mut log_t = if support.len() == 1 {
        0.0
    } else {
        let s = support.len();
        let mut w = SquareMatrix::zeros(s);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                if a != b {
                    w[(a, b)] = xf[i] * xf[j] * v[(i, j)];
                }
            }
        }
        log_tree_enumerator(&WeightedCompleteGraph { w })
    };
    if log_t == f64::NEG_INFINITY {
        return log_t;
    }
    for &i in &support {
        log_t -= xf[i].ln();
        let exponent = xf[i] - 1.0;
        if exponent > 0.0 {
            if vx[i] == 0.0 {
                return f64::NEG_INFINITY;
            }
            log_t += exponent * vx[i].ln();
        }
    }
    log_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(m: usize, edges: &[(usize, usize, f64)]) -> WeightedCompleteGraph {
        let mut w = SquareMatrix::zeros(m);
        for &(i, j, c) in edges {
            w[(i, j)] = c;
            w[(j, i)] = c;
        }
        WeightedCompleteGraph::new(w).unwrap()
    }

    /// Sum over all labelled trees, decoded from Prüfer sequences.
    fn brute_force(g: &WeightedCompleteGraph) -> f64 {
        let m = g.m();
        if m == 1 {
            return 1.0;
        }
        if m == 2 {
            return g.weight(0, 1);
        }
        let len = m - 2;
        let total = m.pow(len as u32);
        let mut sum = 0.0;
        for code in 0..total {
            let mut seq = Vec::with_capacity(len);
            let mut c = code;
            for _ in 0..len {
                seq.push(c % m);
                c /= m;
            }
            let mut degree = vec![1usize; m];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut weight = 1.0;
            for &s in &seq {
                let leaf = (0..m).find(|&v| degree[v] == 1).unwrap();
                weight *= g.weight(leaf, s);
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let rest: Vec<usize> = (0..m).filter(|&v| degree[v] == 1).collect();
            weight *= g.weight(rest[0], rest[1]);
            sum += weight;
        }
        sum
    }

    #[test]
    fn cayley_counts() {
        assert!((tree_enumerator(&WeightedCompleteGraph::uniform(3, 1.0)) - 3.0).abs() < 1e-12);
        assert!((tree_enumerator(&WeightedCompleteGraph::uniform(4, 1.0)) - 16.0).abs() < 1e-12);
        assert_eq!(
            tree_enumerator(&WeightedCompleteGraph::uniform(1, 1.0)),
            1.0
        );
    }

    #[test]
    fn triangle_with_distinct_weights() {
        let g = graph(3, &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)]);
        assert!((tree_enumerator(&g) - 11.0).abs() < 1e-12);
        assert!((brute_force(&g) - 11.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_support_is_zero() {
        let g = graph(4, &[(0, 1, 1.0), (2, 3, 2.0)]);
        assert_eq!(tree_enumerator(&g), 0.0);
        assert_eq!(log_tree_enumerator(&g), f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_weights() {
        let mut w = SquareMatrix::zeros(2);
        w[(0, 0)] = 1.0;
        assert!(WeightedCompleteGraph::new(w).is_err());
        let mut w = SquareMatrix::zeros(2);
        w[(0, 1)] = 1.0;
        assert!(WeightedCompleteGraph::new(w).is_err());
    }

    #[test]
    fn weighted_cayley() {
        for m in 1..=6usize {
            for c in [0.5f64, 1.0, 2.0] {
                let want = c.powi(m as i32 - 1) * (m as f64).powi(m as i32 - 2);
                let got = tree_enumerator(&WeightedCompleteGraph::uniform(m, c));
                assert!(
                    (got - want).abs() <= 1e-10 * want,
                    "m={m} c={c}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn tree_factor_examples() {
        let p = ModelParams::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[15.0, 2.0]).unwrap();
        assert_eq!(log_tree_factor(&p, &ClusterSize::unit(2, 0)), 0.0);
        assert_eq!(log_tree_factor(&p, &ClusterSize::unit(2, 1)), 0.0);
        let x = ClusterSize::new(vec![1, 1]).unwrap();
        assert!(log_tree_factor(&p, &x).abs() < 1e-15);
        // no within-part edges: two type-0 particles cannot form a tree
        let x = ClusterSize::new(vec![2, 0]).unwrap();
        assert_eq!(log_tree_factor(&p, &x), f64::NEG_INFINITY);
        // complete bipartite K_{a,b} has a^(b-1) b^(a-1) spanning trees
        let x = ClusterSize::new(vec![3, 4]).unwrap();
        let want = (3f64.powi(3) * 4f64.powi(2)).ln();
        assert!((log_tree_factor(&p, &x) - want).abs() < 1e-12);
    }

    #[test]
    fn tree_factor_one_type_is_cayley() {
        let p = ModelParams::single_type();
        for l in 1..=12u32 {
            let x = ClusterSize::new(vec![l]).unwrap();
            let want = if l == 1 {
                0.0
            } else {
                (l as f64 - 2.0) * (l as f64).ln()
            };
            assert!((log_tree_factor(&p, &x) - want).abs() < 1e-12, "l={l}");
        }
    }

    #[test]
    fn tree_factor_matches_expanded_graph() {
        // T_x against tau of the explicit graph on <x|1> vertices
        let v = vec![
            vec![0.5, 1.5, 0.0],
            vec![1.5, 2.0, 0.7],
            vec![0.0, 0.7, 0.3],
        ];
        let p = ModelParams::from_rows(&v, &[1.0, 1.0, 1.0]).unwrap();
        for counts in [[1u32, 1, 1], [2, 1, 0], [0, 2, 2], [1, 2, 1], [2, 0, 1]] {
            let x = ClusterSize::new(counts.to_vec()).unwrap();
            let types: Vec<usize> = counts
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
                .collect();
            let m = types.len();
            let mut w = SquareMatrix::zeros(m);
            for a in 0..m {
                for b in 0..m {
                    if a != b {
                        w[(a, b)] = v[types[a]][types[b]];
                    }
                }
            }
            let want = brute_force(&WeightedCompleteGraph::new(w).unwrap());
            let got = log_tree_factor(&p, &x).exp();
            if want == 0.0 {
                assert_eq!(got, 0.0, "{counts:?}");
            } else {
                assert!(
                    (got - want).abs() <= 1e-10 * want,
                    "{counts:?}: {got} vs {want}"
                );
            }
        }
    }

    fn arb_graph(max_m: usize) -> impl Strategy<Value = WeightedCompleteGraph> {
        (1..=max_m).prop_flat_map(|m| {
            prop::collection::vec(0.0f64..3.0, m * m).prop_map(move |raw| {
                let mut w = SquareMatrix::zeros(m);
                for i in 0..m {
                    for j in (i + 1)..m {
                        w[(i, j)] = raw[i * m + j];
                        w[(j, i)] = raw[i * m + j];
                    }
                }
                WeightedCompleteGraph::new(w).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn matches_pruefer_enumeration(g in arb_graph(5)) {
            let want = brute_force(&g);
            let got = tree_enumerator(&g);
            prop_assert!((got - want).abs() <= 1e-10 * want.max(1e-300));
        }

        #[test]
        fn multilinear_in_each_edge(g in arb_graph(5), a in 0.0f64..3.0, b in 0.0f64..3.0, e in any::<usize>()) {
            let m = g.m();
            prop_assume!(m >= 2);
            let pairs: Vec<(usize, usize)> =
                (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
            let (i, j) = pairs[e % pairs.len()];
            let with = |c: f64| {
                let mut w = g.weights().clone();
                w[(i, j)] = c;
                w[(j, i)] = c;
                tree_enumerator(&WeightedCompleteGraph::new(w).unwrap())
            };
            let lhs = with(a + b);
            let rhs = with(a) + with(b) - with(0.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        }

        #[test]
        fn permutation_invariant(g in arb_graph(6), seed in any::<u64>()) {
            let m = g.m();
            let mut perm: Vec<usize> = (0..m).collect();
            let mut s = seed;
            for i in (1..m).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let h = WeightedCompleteGraph::new(g.weights().permuted(&perm)).unwrap();
            let (a, b) = (tree_enumerator(&g), tree_enumerator(&h));
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
        }
    }
}
