//! Shared domain types: interval-valued training data, model specification,
//! trained primal/dual pairs, uncertainty balls, and prediction intervals.
//!
//! Missing entries are encoded purely by `lower < upper`; an entry with
//! `lower == upper` is observed. All types are immutable after construction.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::IpubError;
use crate::linalg::DenseMatrix;

/// Elementwise lower/upper bounds on an n-by-d training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    lower: DenseMatrix,
    upper: DenseMatrix,
    n: usize,
    d: usize,
}

impl IntervalMatrix {
    /// Builds the matrix, checking finiteness and `lower <= upper` everywhere.
    pub fn new(lower: DenseMatrix, upper: DenseMatrix) -> Result<Self, IpubError> {
        if lower.n != upper.n || lower.d != upper.d {
            return Err(IpubError::DimensionMismatch {
                expected: lower.n * lower.d,
                got: upper.n * upper.d,
            });
        }
        let (n, d) = (lower.n, lower.d);
        for i in 0..n {
            for j in 0..d {
                let (lo, hi) = (lower.get(i, j), upper.get(i, j));
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(IpubError::InvalidData(format!(
                        "non-finite entry at ({i},{j})"
                    )));
                }
                if lo > hi {
                    return Err(IpubError::InvalidData(format!(
                        "interval ordering at ({i},{j}): {lo} > {hi}"
                    )));
                }
            }
        }
        Ok(Self { lower, upper, n, d })
    }

    /// Fully observed matrix (every interval degenerate).
    pub fn observed(x: DenseMatrix) -> Self {
        let (n, d) = (x.n, x.d);
        Self { lower: x.clone(), upper: x, n, d }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn lo(&self, i: usize, j: usize) -> f64 {
        self.lower.get(i, j)
    }

    #[inline]
    pub fn hi(&self, i: usize, j: usize) -> f64 {
        self.upper.get(i, j)
    }

    #[inline]
    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.lower.get(i, j) < self.upper.get(i, j)
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    pub fn upper(&self) -> &DenseMatrix {
        &self.upper
    }

    /// Returns a copy with every interval half-width scaled by `t` about its
    /// midpoint. `t = 0` collapses all intervals to their midpoints.
    pub fn scale_widths(&self, t: f64) -> Self {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for i in 0..self.n {
            for j in 0..self.d {
                let (lo, hi) = (self.lo(i, j), self.hi(i, j));
                if lo < hi {
                    let mid = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo) * t;
                    lower.set(i, j, mid - half);
                    upper.set(i, j, mid + half);
                }
            }
        }
        Self { lower, upper, n: self.n, d: self.d }
    }
}

/// Index structures over the missing set, stored in `O(n + d + M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingIndex {
    pub missing_set: Vec<(usize, usize)>,
    pub rows_with_missing: Vec<usize>,
    pub cols_with_missing: Vec<usize>,
    pub rows_per_col: BTreeMap<usize, Vec<usize>>,
    pub cols_per_row: BTreeMap<usize, Vec<usize>>,
}

impl MissingIndex {
    pub fn count(&self) -> usize {
        self.missing_set.len()
    }
}

/// Scans the interval matrix once and builds all missing-entry index lists.
pub fn build_missing_index(x: &IntervalMatrix) -> MissingIndex {
    let mut missing_set = Vec::new();
    let mut rows_per_col: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut cols_per_row: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..x.n() {
        for j in 0..x.d() {
            if x.is_missing(i, j) {
                missing_set.push((i, j));
                rows_per_col.entry(j).or_default().push(i);
                cols_per_row.entry(i).or_default().push(j);
            }
        }
    }
    let rows_with_missing = cols_per_row.keys().copied().collect();
    let cols_with_missing = rows_per_col.keys().copied().collect();
    MissingIndex {
        missing_set,
        rows_with_missing,
        cols_with_missing,
        rows_per_col,
        cols_per_row,
    }
}

/// Loss function choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Squared,
    Hinge,
    Logistic,
}

/// Penalty function choices. `lambda` is the strong-convexity modulus and must
/// be positive; `kappa` only applies to the elastic net.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Penalty {
    L2 { lambda: f64 },
    ElasticNet { lambda: f64, kappa: f64 },
}

impl Penalty {
    pub fn lambda(&self) -> f64 {
        match *self {
            Penalty::L2 { lambda } => lambda,
            Penalty::ElasticNet { lambda, .. } => lambda,
        }
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            Penalty::L2 { .. } => 0.0,
            Penalty::ElasticNet { kappa, .. } => kappa,
        }
    }
}

/// Monotone link from the linear score to the output scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Sign,
    Sigmoid,
}

impl Link {
    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        match self {
            Link::Identity => t,
            Link::Sign => {
                if t > 0.0 {
                    1.0
                } else if t < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Link::Sigmoid => sigmoid(t),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Loss/penalty/link bundle defining the learning problem.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelSpec {
    pub loss: Loss,
    pub penalty: Penalty,
    pub link: Link,
}

impl ModelSpec {
    /// Pairs the loss with its conventional link (identity for squared, sign
    /// for hinge, sigmoid for logistic).
    pub fn new(loss: Loss, penalty: Penalty) -> Result<Self, IpubError> {
        let link = match loss {
            Loss::Squared => Link::Identity,
            Loss::Hinge => Link::Sign,
            Loss::Logistic => Link::Sigmoid,
        };
        Self { loss, penalty, link }.checked()
    }

    /// Overrides the default link.
    pub fn with_link(mut self, link: Link) -> Self {
        self.link = link;
        self
    }

    fn checked(self) -> Result<Self, IpubError> {
        let lambda = self.penalty.lambda();
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(IpubError::InvalidData(format!("lambda must be positive, got {lambda}")));
        }
        let kappa = self.penalty.kappa();
        if kappa < 0.0 || !kappa.is_finite() {
            return Err(IpubError::InvalidData(format!("kappa must be nonnegative, got {kappa}")));
        }
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.penalty.lambda()
    }
}

/// Interval training matrix, its missing index, and outputs.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub x: IntervalMatrix,
    pub index: MissingIndex,
    pub y: Vec<f64>,
}

impl TrainingSet {
    pub fn new(x: IntervalMatrix, y: Vec<f64>) -> Result<Self, IpubError> {
        if y.len() != x.n() {
            return Err(IpubError::DimensionMismatch { expected: x.n(), got: y.len() });
        }
        let index = build_missing_index(&x);
        Ok(Self { x, index, y })
    }
}

/// A single validation finding from [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    IntervalOrdering { row: usize, col: usize },
    NonFinite { row: usize, col: usize },
    LabelDomain { row: usize, value: f64 },
    OutputNonFinite { row: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IntervalOrdering { row, col } => {
                write!(f, "interval ordering at ({row},{col})")
            }
            Violation::NonFinite { row, col } => write!(f, "non-finite value at ({row},{col})"),
            Violation::LabelDomain { row, value } => {
                write!(f, "label domain at row {row}: {value} not in {{-1,+1}}")
            }
            Violation::OutputNonFinite { row, value } => {
                write!(f, "non-finite output at row {row}: {value}")
            }
        }
    }
}

/// Report-only check of a training set against a model spec. Never errors;
/// an empty violation list means the data is usable.
pub fn validate(trainset: &TrainingSet, spec: &ModelSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let x = &trainset.x;
    for i in 0..x.n() {
        for j in 0..x.d() {
            let (lo, hi) = (x.lo(i, j), x.hi(i, j));
            if !lo.is_finite() || !hi.is_finite() {
                out.push(Violation::NonFinite { row: i, col: j });
            } else if lo > hi {
                out.push(Violation::IntervalOrdering { row: i, col: j });
            }
        }
    }
    for (i, &yi) in trainset.y.iter().enumerate() {
        if !yi.is_finite() {
            out.push(Violation::OutputNonFinite { row: i, value: yi });
            continue;
        }
        match spec.loss {
            Loss::Squared => {}
            Loss::Hinge | Loss::Logistic => {
                if yi != 1.0 && yi != -1.0 {
                    out.push(Violation::LabelDomain { row: i, value: yi });
                }
            }
        }
    }
    out
}

/// Primal/dual pair trained on one concrete imputation, with the cached
/// inner products the delta computation reads.
#[derive(Debug, Clone)]
pub struct PrimalDualSolution {
    /// Trained weights.
    pub w: Vec<f64>,
    /// Dual variables, one per instance.
    pub alpha: Vec<f64>,
    /// `w . x'_i` per row of the imputed matrix.
    pub row_scores: Vec<f64>,
    /// `alpha . x'_col` per column of the imputed matrix.
    pub col_scores: Vec<f64>,
    /// Numerical duality gap `P(w) - D(alpha)` at the imputation, floored at 0.
    pub residual_gap: f64,
    /// The concrete imputed matrix the solution was trained on.
    pub imputed: DenseMatrix,
    pub converged: bool,
    pub iterations: usize,
    /// Solver merit per accepted iteration: primal objective for descent
    /// solvers, dual objective for dual coordinate methods.
    pub objective_trace: Vec<f64>,
    pub trace_is_dual: bool,
}

/// Euclidean ball guaranteed to contain every trainable weight vector.
#[derive(Debug, Clone, serde::Serialize)]
pub struct UncertaintyBall {
    pub center: Vec<f64>,
    pub delta: f64,
    pub lambda: f64,
    pub radius: f64,
}

impl UncertaintyBall {
    pub fn new(center: Vec<f64>, delta: f64, lambda: f64) -> Self {
        let radius = (2.0 * delta / lambda).sqrt();
        Self { center, delta, lambda, radius }
    }
}

/// Classification outcome under interval uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Plus,
    Minus,
    Unknown,
}

/// Guaranteed prediction interval on the linear and output scales.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PredictionInterval {
    pub linear_lo: f64,
    pub linear_hi: f64,
    pub value_lo: f64,
    pub value_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}
