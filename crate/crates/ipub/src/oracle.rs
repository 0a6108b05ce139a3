//! Brute-force ground truth at desk scale: enumerates or samples imputations,
//! retrains on each, and reports empirical solution and prediction ranges.
//!
//! The empirical prediction range is an inner approximation: corners need not
//! be extremal for the retrained predictor, so interior samples are included.
//! Objective extremes over corner imputations, by contrast, are exact for the
//! separable primal/dual terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::IpubError;
use crate::linalg::{dot, DenseMatrix};
use crate::model::{IntervalMatrix, ModelSpec, PrimalDualSolution, TrainingSet};
use crate::objective::{dual_objective, primal_objective};
use crate::solver::{train, SolverConfig};

/// Enumeration budget. All `2^M` corners are visited iff
/// `M <= max_corner_bits`, otherwise `2^max_corner_bits` random corners are
/// sampled; `interior_samples` uniform draws are appended either way.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub max_corner_bits: u32,
    pub interior_samples: usize,
    pub seed: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_corner_bits: 10, interior_samples: 50, seed: 0 }
    }
}

impl OracleBudget {
    pub fn check(&self) -> Result<(), IpubError> {
        if self.max_corner_bits > 20 {
            return Err(IpubError::InvalidData(format!(
                "max_corner_bits {} exceeds 20",
                self.max_corner_bits
            )));
        }
        Ok(())
    }
}

/// Lazy sequence of concrete imputed matrices: corners first, interior
/// samples after. Deterministic under the budget seed.
pub struct ImputationIter {
    midpoint: DenseMatrix,
    lows: Vec<f64>,
    highs: Vec<f64>,
    missing: Vec<(usize, usize)>,
    exhaustive: bool,
    corner_count: usize,
    interior_count: usize,
    next_idx: usize,
    rng: ChaCha8Rng,
}

impl ImputationIter {
    pub fn corner_count(&self) -> usize {
        self.corner_count
    }

    pub fn len_total(&self) -> usize {
        self.corner_count + self.interior_count
    }
}

impl Iterator for ImputationIter {
    type Item = DenseMatrix;

    fn next(&mut self) -> Option<DenseMatrix> {
        if self.next_idx >= self.corner_count + self.interior_count {
            return None;
        }
        let idx = self.next_idx;
        self.next_idx += 1;
        let mut out = self.midpoint.clone();
        if idx < self.corner_count {
            if self.exhaustive {
                for (bit, &(i, j)) in self.missing.iter().enumerate() {
                    let v = if idx >> bit & 1 == 1 { self.highs[bit] } else { self.lows[bit] };
                    out.set(i, j, v);
                }
            } else {
                for (bit, &(i, j)) in self.missing.iter().enumerate() {
                    let v = if self.rng.gen_bool(0.5) { self.highs[bit] } else { self.lows[bit] };
                    out.set(i, j, v);
                }
            }
        } else {
            for (bit, &(i, j)) in self.missing.iter().enumerate() {
                out.set(i, j, self.rng.gen_range(self.lows[bit]..=self.highs[bit]));
            }
        }
        Some(out)
    }
}

/// Builds the corner/interior imputation sequence for `x` under `budget`.
/// With no missing entries the sequence is exactly the observed matrix.
pub fn enumerate_imputations(
    x: &IntervalMatrix,
    budget: &OracleBudget,
) -> Result<ImputationIter, IpubError> {
    budget.check()?;
    let mut missing = Vec::new();
    let mut lows = Vec::new();
    let mut highs = Vec::new();
    for i in 0..x.n() {
        for j in 0..x.d() {
            if x.is_missing(i, j) {
                missing.push((i, j));
                lows.push(x.lo(i, j));
                highs.push(x.hi(i, j));
            }
        }
    }
    let m = missing.len() as u32;
    let exhaustive = m <= budget.max_corner_bits;
    let corner_count = if exhaustive { 1usize << m } else { 1usize << budget.max_corner_bits };
    let interior_count = if m == 0 { 0 } else { budget.interior_samples };

    let mut midpoint = DenseMatrix::zeros(x.n(), x.d());
    for i in 0..x.n() {
        for j in 0..x.d() {
            midpoint.set(i, j, 0.5 * (x.lo(i, j) + x.hi(i, j)));
        }
    }

    Ok(ImputationIter {
        midpoint,
        lows,
        highs,
        missing,
        exhaustive,
        corner_count,
        interior_count,
        next_idx: 0,
        rng: ChaCha8Rng::seed_from_u64(budget.seed),
    })
}

/// One retraining outcome.
#[derive(Debug, Clone)]
pub struct OracleRecord {
    pub imputation: usize,
    pub w: Vec<f64>,
    pub residual_gap: f64,
    pub converged: bool,
}

/// Retrains on every imputation in the budget and returns the weight vectors
/// in imputation order. Non-convergence is recorded, not fatal.
pub fn oracle_solutions(
    spec: &ModelSpec,
    ts: &TrainingSet,
    budget: &OracleBudget,
    cfg: &SolverConfig,
) -> Result<Vec<OracleRecord>, IpubError> {
    let iter = enumerate_imputations(&ts.x, budget)?;
    let mut records = Vec::with_capacity(iter.len_total());
    for (idx, xm) in iter.enumerate() {
        let sol = train(spec, &xm, &ts.y, cfg)?;
        records.push(OracleRecord {
            imputation: idx,
            w: sol.w,
            residual_gap: sol.residual_gap,
            converged: sol.converged,
        });
    }
    Ok(records)
}

/// Empirical prediction range over retrained models.
#[derive(Debug, Clone)]
pub struct OracleRange {
    pub min: f64,
    pub max: f64,
    pub predictions: Vec<f64>,
    pub all_converged: bool,
}

/// Retrains per imputation and evaluates `g(w''.x_test)` for each; the
/// returned range is an inner approximation of the true prediction range.
pub fn oracle_prediction_range(
    spec: &ModelSpec,
    ts: &TrainingSet,
    x_test: &[f64],
    budget: &OracleBudget,
    cfg: &SolverConfig,
) -> Result<OracleRange, IpubError> {
    let records = oracle_solutions(spec, ts, budget, cfg)?;
    range_from_records(spec, &records, x_test)
}

/// Range of `g(w.x_test)` over already-retrained records; lets callers reuse
/// one retraining sweep across many test points.
pub fn range_from_records(
    spec: &ModelSpec,
    records: &[OracleRecord],
    x_test: &[f64],
) -> Result<OracleRange, IpubError> {
    if records.is_empty() {
        return Err(IpubError::InvalidData("no oracle records".into()));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut predictions = Vec::with_capacity(records.len());
    let mut all_converged = true;
    for rec in records {
        let value = spec.link.apply(dot(&rec.w, x_test));
        predictions.push(value);
        min = min.min(value);
        max = max.max(value);
        all_converged &= rec.converged;
    }
    Ok(OracleRange { min, max, predictions, all_converged })
}

/// Corner-enumerated objective extremes for a fixed trained pair:
/// `(max_X P_X(w') - P(w'), D(alpha') - min_X D_X(alpha'))`. Exact whenever
/// the corner sweep is exhaustive, since both terms are convex in each
/// missing entry and extremal at interval endpoints.
pub fn oracle_delta(
    spec: &ModelSpec,
    solution: &PrimalDualSolution,
    x: &IntervalMatrix,
    y: &[f64],
    budget: &OracleBudget,
) -> Result<(f64, f64), IpubError> {
    let corners_only = OracleBudget { interior_samples: 0, ..*budget };
    let iter = enumerate_imputations(x, &corners_only)?;
    let mut max_p = f64::NEG_INFINITY;
    let mut min_d = f64::INFINITY;
    for xm in iter {
        max_p = max_p.max(primal_objective(spec, &xm, y, &solution.w)?);
        min_d = min_d.min(dual_objective(spec, &xm, y, &solution.alpha)?);
    }
    let p_nominal = primal_objective(spec, &solution.imputed, y, &solution.w)?;
    let d_nominal = dual_objective(spec, &solution.imputed, y, &solution.alpha)?;
    Ok(((max_p - p_nominal).max(0.0), (d_nominal - min_d).max(0.0)))
}
