//! Exact cluster-size densities, gelation times and Lambert–Euler inversion
//! for the vector multiplicative coalescent, extinction probabilities of
//! multi-type Poisson branching processes, and three Monte Carlo simulators
//! (random multipartite graphs, the Marcus–Lushnikov coalescent, branching
//! lineages) to check them against.

// `!(x >= 0.0)` is how NaN gets rejected along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod branching;
pub mod census;
pub mod cli;
pub mod coalescent_sim;
pub mod compare;
pub mod error;
pub mod graph_sim;
pub mod lambert_euler;
pub mod matrix;
pub mod model;
pub mod smoluchowski;
pub mod spanning_tree;
pub mod special;
pub mod unionfind;

pub use error::{Error, Result};
pub use matrix::SquareMatrix;
pub use model::{
    classify, gelation_time, spectral_radius, ClusterSize, ModelParams, Phase, PhaseRegion,
};
