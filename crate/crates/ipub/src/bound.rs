//! Worst-case objective spread over all interval imputations, the weight
//! ball it induces, and per-test-point prediction intervals.
//!
//! Given a trained pair on any imputation inside the intervals, the spread
//! `delta = max_X P_X(w') - min_X D_X(alpha')` decomposes into per-row loss
//! extremes and per-column penalty-conjugate extremes plus the numerical
//! residual gap, and is computable in `O(M)` from the cached scores. The ball
//! `{w : ||w - w'|| <= sqrt(2 delta / lambda)}` contains every weight vector
//! trainable from any imputation; prediction bounds follow per test point in
//! `O(d)` by Cauchy-Schwarz through the monotone link.

use crate::error::IpubError;
use crate::linalg::{dot, norm2, KahanSum};
use crate::model::{
    IntervalMatrix, Label, Link, MissingIndex, ModelSpec, PredictionInterval, PrimalDualSolution,
    UncertaintyBall,
};
use crate::objective::{loss_value, penalty_conjugate_component};

/// Rows or columns with more missing entries than this accumulate their
/// endpoint corrections in compensated summation.
const KAHAN_THRESHOLD: usize = 64;

/// Allowed numerical undershoot before a delta summand is treated as
/// corrupted caches rather than rounding.
const NEGATIVE_SUMMAND_TOL: f64 = -1e-10;

/// Extremes of the row scores `w'.x''_i` over rows with missing entries and
/// of the column scores `alpha'.x''_col` over columns with missing entries,
/// aligned with `index.rows_with_missing` / `index.cols_with_missing`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeScores {
    pub p_minus: Vec<f64>,
    pub p_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
    pub q_plus: Vec<f64>,
}

/// Per-term breakdown of the spread bound.
#[derive(Debug, Clone)]
pub struct DeltaBreakdown {
    pub loss_term: f64,
    pub penalty_term: f64,
    pub residual_gap: f64,
    pub delta_total: f64,
    pub scores: ExtremeScores,
}

/// Accumulates the min-side and max-side endpoint corrections of one row or
/// column in a single sweep, compensated past [`KAHAN_THRESHOLD`] entries.
/// Each term also validates its cell against the interval matrix, which costs
/// nothing extra on the already-loaded values.
struct CorrectionSweep {
    plain_lo: f64,
    plain_hi: f64,
    kahan_lo: KahanSum,
    kahan_hi: KahanSum,
    compensated: bool,
}

impl CorrectionSweep {
    fn new(base: f64, len: usize) -> Self {
        Self {
            plain_lo: base,
            plain_hi: base,
            kahan_lo: KahanSum::new(base),
            kahan_hi: KahanSum::new(base),
            compensated: len > KAHAN_THRESHOLD,
        }
    }

    #[inline]
    fn add(&mut self, coef: f64, lo: f64, hi: f64, nominal: f64) {
        let (min_end, max_end) = if coef > 0.0 { (coef * lo, coef * hi) } else { (coef * hi, coef * lo) };
        let at_nominal = coef * nominal;
        if self.compensated {
            self.kahan_lo.add(min_end - at_nominal);
            self.kahan_hi.add(max_end - at_nominal);
        } else {
            self.plain_lo += min_end - at_nominal;
            self.plain_hi += max_end - at_nominal;
        }
    }

    fn finish(self) -> (f64, f64) {
        if self.compensated {
            (self.kahan_lo.value(), self.kahan_hi.value())
        } else {
            (self.plain_lo, self.plain_hi)
        }
    }
}

#[inline]
fn checked_cell(
    x: &IntervalMatrix,
    imputed: &crate::linalg::DenseMatrix,
    i: usize,
    j: usize,
) -> Result<(f64, f64, f64), IpubError> {
    let lo = x.lo(i, j);
    let hi = x.hi(i, j);
    if !(lo < hi) {
        return Err(IpubError::IndexMismatch(format!("({i},{j}) indexed but observed")));
    }
    let nominal = imputed.get(i, j);
    if nominal < lo || nominal > hi {
        return Err(IpubError::IndexMismatch(format!(
            "imputed value {nominal} at ({i},{j}) outside [{lo}, {hi}]"
        )));
    }
    Ok((lo, hi, nominal))
}

/// Computes the row-score and column-score extremes over the interval box in
/// `O(M)` from the cached nominal scores.
pub fn compute_extreme_scores(
    solution: &PrimalDualSolution,
    x: &IntervalMatrix,
    index: &MissingIndex,
) -> Result<ExtremeScores, IpubError> {
    if solution.imputed.n != x.n() || solution.imputed.d != x.d() {
        return Err(IpubError::IndexMismatch(format!(
            "solution imputed on {}x{}, intervals are {}x{}",
            solution.imputed.n,
            solution.imputed.d,
            x.n(),
            x.d()
        )));
    }

    // the missing set is row-major sorted, so the row side is one contiguous
    // scan segmented at row changes; rows appear in rows_with_missing order
    let mut p_minus = Vec::with_capacity(index.rows_with_missing.len());
    let mut p_plus = Vec::with_capacity(index.rows_with_missing.len());
    let entries = &index.missing_set;
    let mut pos = 0;
    while pos < entries.len() {
        let i = entries[pos].0;
        let start = pos;
        while pos < entries.len() && entries[pos].0 == i {
            pos += 1;
        }
        let mut sweep = CorrectionSweep::new(solution.row_scores[i], pos - start);
        for &(_, j) in &entries[start..pos] {
            let (lo, hi, nominal) = checked_cell(x, &solution.imputed, i, j)?;
            sweep.add(solution.w[j], lo, hi, nominal);
        }
        let (p_lo, p_hi) = sweep.finish();
        p_minus.push(p_lo);
        p_plus.push(p_hi);
    }

    let mut q_minus = Vec::with_capacity(index.cols_with_missing.len());
    let mut q_plus = Vec::with_capacity(index.cols_with_missing.len());
    for (&j, rows) in &index.rows_per_col {
        let mut sweep = CorrectionSweep::new(solution.col_scores[j], rows.len());
        for &i in rows {
            let (lo, hi, nominal) = checked_cell(x, &solution.imputed, i, j)?;
            sweep.add(solution.alpha[i], lo, hi, nominal);
        }
        let (q_lo, q_hi) = sweep.finish();
        q_minus.push(q_lo);
        q_plus.push(q_hi);
    }

    Ok(ExtremeScores { p_minus, p_plus, q_minus, q_plus })
}

/// The `O(M)` spread bound: per-row worst-case loss increase plus per-column
/// worst-case penalty-conjugate increase plus the solution's residual gap.
pub fn compute_delta(
    spec: &ModelSpec,
    solution: &PrimalDualSolution,
    x: &IntervalMatrix,
    index: &MissingIndex,
    y: &[f64],
) -> Result<DeltaBreakdown, IpubError> {
    let scores = compute_extreme_scores(solution, x, index)?;
    let n = x.n() as f64;

    let mut loss_term = 0.0;
    for (pos, &i) in index.rows_with_missing.iter().enumerate() {
        let worst = loss_value(spec.loss, y[i], scores.p_minus[pos])?
            .max(loss_value(spec.loss, y[i], scores.p_plus[pos])?);
        let nominal = loss_value(spec.loss, y[i], solution.row_scores[i])?;
        let summand = worst - nominal;
        if summand < NEGATIVE_SUMMAND_TOL {
            return Err(IpubError::NegativeSummand { value: summand, place: format!("row {i}") });
        }
        loss_term += summand.max(0.0);
    }
    loss_term /= n;

    let mut penalty_term = 0.0;
    for (pos, &j) in index.cols_with_missing.iter().enumerate() {
        let worst = penalty_conjugate_component(spec.penalty, scores.q_minus[pos] / n)
            .max(penalty_conjugate_component(spec.penalty, scores.q_plus[pos] / n));
        let nominal = penalty_conjugate_component(spec.penalty, solution.col_scores[j] / n);
        let summand = worst - nominal;
        if summand < NEGATIVE_SUMMAND_TOL {
            return Err(IpubError::NegativeSummand {
                value: summand,
                place: format!("column {j}"),
            });
        }
        penalty_term += summand.max(0.0);
    }

    let residual_gap = solution.residual_gap;
    Ok(DeltaBreakdown {
        loss_term,
        penalty_term,
        residual_gap,
        delta_total: loss_term + penalty_term + residual_gap,
        scores,
    })
}

/// Ball with center `w'` and radius `sqrt(2 delta / lambda)`.
pub fn uncertainty_ball(delta: &DeltaBreakdown, lambda: f64, w: &[f64]) -> UncertaintyBall {
    UncertaintyBall::new(w.to_vec(), delta.delta_total, lambda)
}

/// Prediction interval for a test point: the linear score can move by at most
/// `||x|| * radius` in either direction over the ball, and the monotone link
/// maps the endpoints.
pub fn predict_interval(ball: &UncertaintyBall, x: &[f64], link: Link) -> PredictionInterval {
    debug_assert_eq!(ball.center.len(), x.len());
    let center = dot(&ball.center, x);
    let spread = norm2(x) * ball.radius;
    let (linear_lo, linear_hi) = (center - spread, center + spread);
    let label = match link {
        Link::Sign => Some(label_from_linear(linear_lo, linear_hi)),
        _ => None,
    };
    PredictionInterval {
        linear_lo,
        linear_hi,
        value_lo: link.apply(linear_lo),
        value_hi: link.apply(linear_hi),
        label,
    }
}

fn label_from_linear(linear_lo: f64, linear_hi: f64) -> Label {
    if linear_lo > 0.0 {
        Label::Plus
    } else if linear_hi < 0.0 {
        Label::Minus
    } else {
        Label::Unknown
    }
}

/// Classification under uncertainty: a sign is only assigned when the whole
/// linear interval lies strictly on one side of zero.
pub fn classify_interval(ball: &UncertaintyBall, x: &[f64]) -> Label {
    let center = dot(&ball.center, x);
    let spread = norm2(x) * ball.radius;
    label_from_linear(center - spread, center + spread)
}
