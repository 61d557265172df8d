//! Balanced graph cuts with a concave-in-volume penalty, the iteratively
//! reweighted embedding that relaxes them, and the rounding and image
//! segmentation built on top.
//!
//! ```
//! use ccb_core::{brute_force_min, classify_toy, toy_graph, BalanceMode, CostKind, ToyClass};
//!
//! let g = toy_graph(0.1).unwrap();
//! let kind = CostKind::Ccb { tau: 2.0, mode: BalanceMode::Normalized };
//! let (best, _) = brute_force_min(&g, kind, 2).unwrap();
//! assert_eq!(classify_toy(&best), ToyClass::Balanced);
//! ```

pub mod costs;
pub mod eigen;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod formats;
pub mod graph;
pub mod imgseg;
pub mod irrq;
pub mod partition;
pub mod synthetic;

/// Matrix types in the public API come from this crate.
pub use nalgebra;

pub use costs::{
    bh_cost, bifurcation_sweep, brute_force_min, ccb_cost, ccb_cost_matrix_form, classify_toy,
    cut_cost, multiway_cut, phi_p, psi_tau, toy_balanced_partition, toy_crossover, toy_graph,
    toy_singleton_partition, CostEvaluator, CostKind, PartitionK, SweepFamily, SweepRow, ToyClass,
};
pub use eigen::{eigensolve_smallest, EigenOptions, EigenResult, SymmetricOperator};
pub use embedding::{
    apply_reduced_operator, solve_weighted_step, ConstraintEliminator, Embedding, ReducedOperator,
};
pub use error::{Error, ErrorCategory, Result};
pub use eval::{covering, pri, voi, ContingencyTable, Metrics, MetricsRow};
pub use graph::{
    balance_weights, barbell, path_graph, triangle_pair, BalanceMode, BalanceWeights, Edge, Graph,
};
pub use imgseg::{
    degree_spread, lab_affinity, rgb_to_lab, segment_image, AffinityParams, LabelMap, SegmentMethod,
};
pub use irrq::{
    irrq_solve, irrq_solve_with, j_tau, InitialWeights, IrrqConfig, IrrqResult, ReweightState,
    StopReason,
};
pub use partition::{
    hierarchical_segment, kmeans, multiway_segment, HierarchicalSegmentation, Segmentation,
    SplitOrder,
};
