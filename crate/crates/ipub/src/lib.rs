//! Guaranteed prediction-uncertainty intervals for penalized linear models
//! trained on data whose missing entries are only known to lie in intervals.
//!
//! Given elementwise bounds `[lower, upper]` on the training matrix, the
//! library trains a single model on an imputed matrix, bounds the worst-case
//! primal/dual objective spread `delta` over every imputation in `O(M)` time
//! (`M` = number of missing entries), and turns it into a Euclidean ball that
//! provably contains every model trainable from any imputation. Prediction
//! bounds for a test point follow from the ball in `O(d)`.
//!
//! The crate also ships an interval-Newton enclosure baseline, a brute-force
//! imputation oracle used by the test suite, a CSV preprocessing pipeline,
//! and the experiment harness behind the `ipub` CLI.

// index loops follow the matrix math; negated comparisons deliberately fail
// closed on NaN
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]

pub mod bound;
pub mod error;
pub mod harness;
pub mod inewton;
pub mod interval;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod pipeline;
pub mod solver;
pub mod synth;

pub use bound::{
    classify_interval, compute_delta, compute_extreme_scores, predict_interval, uncertainty_ball,
    DeltaBreakdown, ExtremeScores,
};
pub use error::IpubError;
pub use model::{
    build_missing_index, validate, IntervalMatrix, Label, Link, Loss, MissingIndex, ModelSpec,
    Penalty, PredictionInterval, PrimalDualSolution, TrainingSet, UncertaintyBall,
};
pub use objective::{dual_objective, primal_objective};
pub use solver::{dual_residual_gap, impute_midpoint, train, SolverConfig};
