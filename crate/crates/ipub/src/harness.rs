//! Experiment orchestration behind the CLI: end-to-end bound computation,
//! the grid experiment with the interval-Newton baseline, and the randomized
//! oracle check.

use std::time::Instant;

use serde::Serialize;

use crate::bound::{compute_delta, predict_interval, uncertainty_ball};
use crate::error::IpubError;
use crate::inewton::{inewton_enclose, inewton_predict_interval, initial_box, InewtonConfig};
use crate::linalg::norm2;
use crate::model::{Label, Loss, ModelSpec, Penalty, PredictionInterval, UncertaintyBall};
use crate::oracle::{oracle_delta, oracle_solutions, range_from_records, OracleBudget};
use crate::pipeline::{
    run_pipeline, run_pipeline_pair, PipelineConfig, PipelineManifest, PipelineOutput, RawTable,
};
use crate::solver::{impute_midpoint, train, SolverConfig};
use crate::synth::random_small_instance;

/// Ball summary serialized into every bound report.
#[derive(Debug, Clone, Serialize)]
pub struct BallSummary {
    pub center: Vec<f64>,
    pub radius: f64,
    pub delta_total: f64,
    pub loss_term: f64,
    pub penalty_term: f64,
    pub residual_gap: f64,
    pub solver_converged: bool,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointInterval {
    pub id: usize,
    pub point_prediction: f64,
    pub linear_lo: f64,
    pub linear_hi: f64,
    pub value_lo: f64,
    pub value_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub spec: ModelSpec,
    pub solver_tol: f64,
    pub ball: BallSummary,
    pub intervals: Vec<PointInterval>,
}

/// End-to-end bound run on separate train/test tables: preprocess, train on
/// the midpoint imputation, bound the spread, and emit one interval per test
/// row. Every emitted interval is recomputed from the ball before returning.
pub fn run_bound(
    train_table: RawTable,
    test_table: RawTable,
    spec: &ModelSpec,
    pipeline_cfg: &PipelineConfig,
    solver_cfg: &SolverConfig,
) -> Result<(BoundReport, PipelineManifest), IpubError> {
    let out = run_pipeline_pair(train_table, test_table, pipeline_cfg)?;
    let report = bound_from_pipeline(&out, spec, solver_cfg)?;
    Ok((report, out.manifest))
}

fn bound_from_pipeline(
    out: &PipelineOutput,
    spec: &ModelSpec,
    solver_cfg: &SolverConfig,
) -> Result<BoundReport, IpubError> {
    let violations = crate::model::validate(&out.train, spec);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(IpubError::InvalidData(msgs.join("; ")));
    }
    let xm = impute_midpoint(&out.train.x);
    let sol = train(spec, &xm, &out.train.y, solver_cfg)?;
    let delta = compute_delta(spec, &sol, &out.train.x, &out.train.index, &out.train.y)?;
    let ball = uncertainty_ball(&delta, spec.lambda(), &sol.w);

    let mut intervals = Vec::with_capacity(out.test_x.len());
    for (id, x) in out.test_x.iter().enumerate() {
        let pi = predict_interval(&ball, x, spec.link);
        let point = spec.link.apply(crate::linalg::dot(&sol.w, x));
        // recomputation self-check: the stored interval must match a fresh
        // evaluation from the ball exactly
        let again = predict_interval(&ball, x, spec.link);
        debug_assert_eq!(pi, again);
        if !(pi.value_lo <= point && point <= pi.value_hi) {
            return Err(IpubError::InvalidData(format!(
                "point prediction {point} escaped its own interval [{}, {}]",
                pi.value_lo, pi.value_hi
            )));
        }
        intervals.push(PointInterval {
            id,
            point_prediction: point,
            linear_lo: pi.linear_lo,
            linear_hi: pi.linear_hi,
            value_lo: pi.value_lo,
            value_hi: pi.value_hi,
            label: pi.label,
        });
    }

    Ok(BoundReport {
        spec: *spec,
        solver_tol: solver_cfg.grad_tol,
        ball: BallSummary {
            center: ball.center.clone(),
            radius: ball.radius,
            delta_total: delta.delta_total,
            loss_term: delta.loss_term,
            penalty_term: delta.penalty_term,
            residual_gap: delta.residual_gap,
            solver_converged: sol.converged,
            solver_iterations: sol.iterations,
        },
        intervals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramRow {
    pub method: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingRecord {
    pub train_seconds: f64,
    pub ipub_seconds: f64,
    pub inewton_seconds: f64,
    pub time_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub id: usize,
    pub point_prediction: f64,
    pub ipub_lo: f64,
    pub ipub_hi: f64,
    pub inewton_lo: f64,
    pub inewton_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub missing_rate: f64,
    pub coverage_alpha: f64,
    pub lambda: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_missing: usize,
    pub median_ipub_length: f64,
    pub median_inewton_length: f64,
    /// Mean of (empirical oracle range / sphere-bound length) over the
    /// spot-checked points: the measured looseness of the bound, reported
    /// rather than assumed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_tightness_mean: Option<f64>,
    pub timing: TimingRecord,
    pub inewton_contracted: bool,
    pub inewton_verified: bool,
    pub points: Vec<PointRecord>,
    pub histogram: Vec<HistogramRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub missing_rate: f64,
    pub coverage_alpha: f64,
    pub lambda: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub timing_note: String,
    pub bin_width: f64,
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub missing_rates: Vec<f64>,
    pub coverage_alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub bin_width: f64,
    /// Test points (from the start of the test set) that also get oracle
    /// sample ranges; zero disables the oracle.
    pub oracle_spot_points: usize,
    pub oracle_budget: OracleBudget,
    pub timing_reps: usize,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            missing_rates: vec![0.01, 0.001],
            coverage_alphas: vec![0.5, 0.9],
            lambdas: vec![0.1, 1.0],
            bin_width: 0.02,
            oracle_spot_points: 0,
            oracle_budget: OracleBudget { max_corner_bits: 6, interior_samples: 30, seed: 0 },
            timing_reps: 5,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if values.is_empty() {
        return f64::NAN;
    }
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn normalized_histogram(lengths: &[f64], method: &str, bin_width: f64) -> Vec<HistogramRow> {
    let n_bins = (1.0 / bin_width).ceil() as usize;
    let mut counts = vec![0usize; n_bins];
    for &len in lengths {
        let bin = ((len / bin_width).floor() as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    let total = lengths.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| HistogramRow {
            method: method.to_string(),
            bin_lo: b as f64 * bin_width,
            bin_hi: (b + 1) as f64 * bin_width,
            mass: c as f64 / total,
        })
        .collect()
}

/// Grid experiment: for each `(b, alpha, lambda)` cell, preprocess, bound
/// with the sphere method, enclose with interval Newton, histogram the
/// interval lengths of both, and time both ends of the comparison. Logistic
/// loss with L2 penalty throughout (the baseline supports nothing else).
/// Cell failures are reported per cell and the run continues.
pub fn run_experiment(
    table: &RawTable,
    base_cfg: &PipelineConfig,
    grid: &ExperimentGrid,
    solver_cfg: &SolverConfig,
    inewton_cfg: &InewtonConfig,
) -> ExperimentReport {
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for &b in &grid.missing_rates {
        for &alpha in &grid.coverage_alphas {
            for &lambda in &grid.lambdas {
                let mut cfg = base_cfg.clone();
                cfg.missing_rate = b;
                cfg.coverage_alpha = alpha;
                match run_cell(table, &cfg, lambda, grid, solver_cfg, inewton_cfg) {
                    Ok(cell) => cells.push(cell),
                    Err(e) => failures.push(CellFailure {
                        missing_rate: b,
                        coverage_alpha: alpha,
                        lambda,
                        error: e.to_string(),
                    }),
                }
            }
        }
    }
    ExperimentReport {
        timing_note: format!(
            "wall-clock of (train + delta + bounds) vs (interval-newton enclosure + interval \
             predictions); median of {} repetitions",
            grid.timing_reps
        ),
        bin_width: grid.bin_width,
        cells,
        failures,
    }
}

fn run_cell(
    table: &RawTable,
    cfg: &PipelineConfig,
    lambda: f64,
    grid: &ExperimentGrid,
    solver_cfg: &SolverConfig,
    inewton_cfg: &InewtonConfig,
) -> Result<CellResult, IpubError> {
    let spec = ModelSpec::new(Loss::Logistic, Penalty::L2 { lambda })?;
    let out = run_pipeline(table, cfg)?;
    let violations = crate::model::validate(&out.train, &spec);
    if !violations.is_empty() {
        return Err(IpubError::InvalidData(
            violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
        ));
    }

    let reps = grid.timing_reps.max(1);
    let mut train_times = Vec::with_capacity(reps);
    let mut ipub_times = Vec::with_capacity(reps);
    let mut inewton_times = Vec::with_capacity(reps);
    struct CellArtifacts {
        ball: UncertaintyBall,
        ipub_intervals: Vec<PredictionInterval>,
        enclosure: crate::inewton::InewtonResult,
        inewton_intervals: Vec<PredictionInterval>,
        init_verified: bool,
    }
    let mut kept: Option<CellArtifacts> = None;

    for _ in 0..reps {
        let t0 = Instant::now();
        let xm = impute_midpoint(&out.train.x);
        let sol = train(&spec, &xm, &out.train.y, solver_cfg)?;
        let train_s = t0.elapsed().as_secs_f64();

        let delta = compute_delta(&spec, &sol, &out.train.x, &out.train.index, &out.train.y)?;
        let ball = uncertainty_ball(&delta, lambda, &sol.w);
        let ipub_intervals: Vec<PredictionInterval> =
            out.test_x.iter().map(|x| predict_interval(&ball, x, spec.link)).collect();
        let ipub_s = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let (init, verified) = initial_box(&out.train, lambda, &ball.center, ball.radius, inewton_cfg);
        let enclosure = inewton_enclose(&out.train, lambda, &init, inewton_cfg)?;
        let inewton_intervals: Vec<PredictionInterval> = out
            .test_x
            .iter()
            .map(|x| inewton_predict_interval(&enclosure.enclosure, x, spec.link))
            .collect();
        let inewton_s = t1.elapsed().as_secs_f64();

        train_times.push(train_s);
        ipub_times.push(ipub_s);
        inewton_times.push(inewton_s);
        kept = Some(CellArtifacts {
            ball,
            ipub_intervals,
            enclosure,
            inewton_intervals,
            init_verified: verified,
        });
    }
    let CellArtifacts { ball, ipub_intervals, enclosure, inewton_intervals, init_verified } =
        kept.expect("at least one repetition");

    let oracle_ranges = if grid.oracle_spot_points > 0 {
        let records = oracle_solutions(&spec, &out.train, &grid.oracle_budget, solver_cfg)?;
        let k = grid.oracle_spot_points.min(out.test_x.len());
        let mut ranges = Vec::with_capacity(k);
        for x in out.test_x.iter().take(k) {
            ranges.push(range_from_records(&spec, &records, x)?);
        }
        Some(ranges)
    } else {
        None
    };

    let mut points = Vec::with_capacity(out.test_x.len());
    let mut ipub_lengths = Vec::new();
    let mut inewton_lengths = Vec::new();
    for (id, x) in out.test_x.iter().enumerate() {
        let ip = &ipub_intervals[id];
        let iv = &inewton_intervals[id];
        let point = spec.link.apply(crate::linalg::dot(&ball.center, x));
        if !(ip.value_lo <= point && point <= ip.value_hi) {
            return Err(IpubError::InvalidData(format!(
                "point prediction {point} escaped its interval at test row {id}"
            )));
        }
        ipub_lengths.push(ip.value_hi - ip.value_lo);
        inewton_lengths.push(iv.value_hi - iv.value_lo);
        let (oracle_min, oracle_max) = match &oracle_ranges {
            Some(ranges) if id < ranges.len() => (Some(ranges[id].min), Some(ranges[id].max)),
            _ => (None, None),
        };
        points.push(PointRecord {
            id,
            point_prediction: point,
            ipub_lo: ip.value_lo,
            ipub_hi: ip.value_hi,
            inewton_lo: iv.value_lo,
            inewton_hi: iv.value_hi,
            oracle_min,
            oracle_max,
        });
    }

    let ratios: Vec<f64> = points
        .iter()
        .filter_map(|p| match (p.oracle_min, p.oracle_max) {
            (Some(lo), Some(hi)) if p.ipub_hi > p.ipub_lo => {
                Some((hi - lo) / (p.ipub_hi - p.ipub_lo))
            }
            _ => None,
        })
        .collect();
    let oracle_tightness_mean = if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    };

    let mut histogram = normalized_histogram(&ipub_lengths, "ipub", grid.bin_width);
    histogram.extend(normalized_histogram(&inewton_lengths, "inewton", grid.bin_width));

    let train_seconds = median(&mut train_times);
    let ipub_seconds = median(&mut ipub_times);
    let inewton_seconds = median(&mut inewton_times);
    Ok(CellResult {
        missing_rate: cfg.missing_rate,
        coverage_alpha: cfg.coverage_alpha,
        lambda,
        n_train: out.train.x.n(),
        n_test: out.test_x.len(),
        n_missing: out.train.index.count(),
        median_ipub_length: median(&mut ipub_lengths.clone()),
        median_inewton_length: median(&mut inewton_lengths.clone()),
        oracle_tightness_mean,
        timing: TimingRecord {
            train_seconds,
            ipub_seconds,
            inewton_seconds,
            time_ratio: ipub_seconds / inewton_seconds,
        },
        inewton_contracted: enclosure.contracted,
        inewton_verified: init_verified,
        points,
        histogram,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheckReport {
    pub instances: usize,
    pub violations: Vec<String>,
    pub pass: bool,
}

/// Randomized property check over seeded small instances: ball containment
/// of every corner/interior retraining, prediction containment, exactness of
/// the fast delta against corner enumeration, and the empirical-range /
/// bound-interval sandwich. `radius_factor` deliberately scales the ball for
/// checker sanity tests (1.0 in real runs).
pub fn run_oracle_check(
    instances: usize,
    seed0: u64,
    radius_factor: f64,
    solver_cfg: &SolverConfig,
) -> Result<OracleCheckReport, IpubError> {
    let mut violations = Vec::new();
    for k in 0..instances {
        let seed = seed0 + k as u64;
        let inst = random_small_instance(seed);
        let spec = inst.spec;
        let ts = &inst.trainset;
        let xm = impute_midpoint(&ts.x);
        let sol = train(&spec, &xm, &ts.y, solver_cfg)?;
        let delta = compute_delta(&spec, &sol, &ts.x, &ts.index, &ts.y)?;
        let mut ball = uncertainty_ball(&delta, spec.lambda(), &sol.w);
        ball.radius *= radius_factor;

        // delta exactness against the corner oracle
        let budget = OracleBudget { max_corner_bits: 10, interior_samples: 50, seed };
        let (max_p, min_d) = oracle_delta(&spec, &sol, &ts.x, &ts.y, &budget)?;
        if (delta.loss_term - max_p).abs() > 1e-10 {
            violations.push(format!(
                "seed {seed}: loss_term {} vs corner oracle {max_p}",
                delta.loss_term
            ));
        }
        if (delta.penalty_term - min_d).abs() > 1e-10 {
            violations.push(format!(
                "seed {seed}: penalty_term {} vs corner oracle {min_d}",
                delta.penalty_term
            ));
        }

        // containment of retrained solutions and their predictions
        let records = oracle_solutions(&spec, ts, &budget, solver_cfg)?;
        for rec in &records {
            let dist = norm2(
                &rec.w.iter().zip(&sol.w).map(|(a, b)| a - b).collect::<Vec<f64>>(),
            );
            if dist > ball.radius + 1e-7 {
                violations.push(format!(
                    "seed {seed}: retrained model {} at distance {dist} > radius {}",
                    rec.imputation, ball.radius
                ));
                break;
            }
        }
        for x in &inst.test_points {
            let pi = predict_interval(&ball, x, spec.link);
            let range = range_from_records(&spec, &records, x)?;
            if range.min < pi.value_lo - 1e-7 || range.max > pi.value_hi + 1e-7 {
                violations.push(format!(
                    "seed {seed}: oracle range [{}, {}] outside bound [{}, {}]",
                    range.min, range.max, pi.value_lo, pi.value_hi
                ));
                break;
            }
        }
    }
    let pass = violations.is_empty();
    Ok(OracleCheckReport { instances, violations, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::logistic_table;

    #[test]
    fn bound_report_is_deterministic_and_self_consistent() {
        let table = logistic_table(120, 4, 3);
        let (train, test) = crate::pipeline::split(&table, &PipelineConfig::default()).unwrap();
        let spec = ModelSpec::new(Loss::Logistic, Penalty::L2 { lambda: 1.0 }).unwrap();
        let mut cfg = PipelineConfig { missing_rate: 0.02, ..Default::default() };
        cfg.seed = 11;
        let solver_cfg = SolverConfig::default();
        let (r1, m1) =
            run_bound(train.clone(), test.clone(), &spec, &cfg, &solver_cfg).unwrap();
        let (r2, m2) = run_bound(train, test, &spec, &cfg, &solver_cfg).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
        assert_eq!(serde_json::to_string(&m1).unwrap(), serde_json::to_string(&m2).unwrap());
        for p in &r1.intervals {
            assert!(p.value_lo <= p.point_prediction && p.point_prediction <= p.value_hi);
            assert!(p.value_lo >= 0.0 && p.value_hi <= 1.0); // sigmoid scale
        }
        assert!(r1.ball.radius >= 0.0);
    }

    #[test]
    fn experiment_histogram_masses_sum_to_one() {
        let table = logistic_table(150, 3, 5);
        let grid = ExperimentGrid {
            missing_rates: vec![0.02],
            coverage_alphas: vec![0.5],
            lambdas: vec![1.0],
            timing_reps: 1,
            ..Default::default()
        };
        let report = run_experiment(
            &table,
            &PipelineConfig::default(),
            &grid,
            &SolverConfig::default(),
            &InewtonConfig::default(),
        );
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        let cell = &report.cells[0];
        for method in ["ipub", "inewton"] {
            let mass: f64 = cell
                .histogram
                .iter()
                .filter(|r| r.method == method)
                .map(|r| r.mass)
                .sum();
            assert!((mass - 1.0).abs() < 1e-12, "{method} mass {mass}");
        }
        // logistic outputs stay within [0, 1]
        for p in &cell.points {
            assert!(p.ipub_lo >= 0.0 && p.ipub_hi <= 1.0);
            assert!(p.inewton_lo >= 0.0 && p.inewton_hi <= 1.0);
        }
    }

    #[test]
    fn failed_cells_are_reported_not_fatal() {
        let table = logistic_table(40, 3, 6);
        let grid = ExperimentGrid {
            missing_rates: vec![2.0], // invalid rate: cell must fail
            coverage_alphas: vec![0.5],
            lambdas: vec![1.0],
            timing_reps: 1,
            ..Default::default()
        };
        let report = run_experiment(
            &table,
            &PipelineConfig::default(),
            &grid,
            &SolverConfig::default(),
            &InewtonConfig::default(),
        );
        assert!(report.cells.is_empty());
        assert_eq!(report.failures.len(), 1);
    }

    #[test]
    fn oracle_check_passes_and_detects_corruption() {
        let solver_cfg = SolverConfig::default();
        let ok = run_oracle_check(6, 9000, 1.0, &solver_cfg).unwrap();
        assert!(ok.pass, "{:?}", ok.violations);

        // a deliberately halved radius must trip the containment check on
        // instances with missing entries
        let bad = run_oracle_check(12, 9000, 0.01, &solver_cfg).unwrap();
        assert!(!bad.pass);
    }
}
