//! CSV ingestion and the preprocessing pipeline: train/test split, outlier
//! clipping, min-max normalization, synthetic missing-entry injection, and
//! quantile-based interval assignment.
//!
//! The pipeline order is fixed: split -> clip -> normalize -> inject ->
//! assign, so intervals and data share one scale. Clip bounds, affine maps,
//! and quantiles are always computed on training data only and applied to
//! both tables. Quantiles interpolate linearly between order statistics.
//! Every random choice is driven by one seed; a run is byte-reproducible and
//! is described by the emitted manifest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::IpubError;
use crate::linalg::DenseMatrix;
use crate::model::{IntervalMatrix, TrainingSet};

/// Features with more distinct observed training values than this are
/// treated as diverse numerical features and clipped; the rest are left
/// alone. The rule is echoed in the manifest.
pub const DIVERSE_DISTINCT_THRESHOLD: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub test_fraction: f64,
    pub clip_lo_pct: f64,
    pub clip_hi_pct: f64,
    /// Missing-entry rate `b`: exactly `round(n*d*b)` observed cells are
    /// re-marked missing.
    pub missing_rate: f64,
    /// Interval length parameter: missing cells get the feature's
    /// `[(1-alpha)/2, (1+alpha)/2]` quantile interval.
    pub coverage_alpha: f64,
    pub seed: u64,
    pub missing_markers: Vec<String>,
    pub has_header: bool,
    /// Zero-based label column; `None` means the last column.
    pub label_col: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.1,
            clip_lo_pct: 0.5,
            clip_hi_pct: 99.5,
            missing_rate: 0.0,
            coverage_alpha: 0.5,
            seed: 0,
            missing_markers: vec!["NA".into(), "".into(), "?".into()],
            has_header: false,
            label_col: None,
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<(), IpubError> {
        let ok = self.test_fraction > 0.0
            && self.test_fraction < 1.0
            && (0.0..=1.0).contains(&self.missing_rate)
            && self.clip_lo_pct < self.clip_hi_pct
            && self.coverage_alpha > 0.0
            && self.coverage_alpha <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(IpubError::InvalidData("invalid pipeline config".into()))
        }
    }
}

/// Parsed table: features with native-missing holes, plus the label column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub features: Vec<Vec<Option<f64>>>,
    pub y: Vec<f64>,
    pub n_features: usize,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.features.len()
    }
}

/// Reads a comma-separated file. Marker cells become native-missing feature
/// entries; a marker in the label column is an error.
pub fn load_csv(path: &std::path::Path, cfg: &PipelineConfig) -> Result<RawTable, IpubError> {
    let content = std::fs::read_to_string(path)?;
    parse_csv(&content, cfg)
}

/// CSV parsing on an in-memory string; see [`load_csv`].
pub fn parse_csv(content: &str, cfg: &PipelineConfig) -> Result<RawTable, IpubError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(cfg.has_header)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(content.as_bytes());

    let mut features: Vec<Vec<Option<f64>>> = Vec::new();
    let mut y = Vec::new();
    let mut width: Option<usize> = None;
    for (rec_idx, record) in reader.records().enumerate() {
        let line = rec_idx + 1 + usize::from(cfg.has_header);
        let record = record.map_err(|e| IpubError::CsvParse { line, msg: e.to_string() })?;
        let w = record.len();
        match width {
            None => {
                if w < 2 {
                    return Err(IpubError::CsvParse {
                        line,
                        msg: format!("need at least one feature and a label, got {w} cells"),
                    });
                }
                width = Some(w);
            }
            Some(prev) if prev != w => {
                return Err(IpubError::CsvParse {
                    line,
                    msg: format!("ragged row: {w} cells, expected {prev}"),
                });
            }
            _ => {}
        }
        let label_col = cfg.label_col.unwrap_or(w - 1);
        if label_col >= w {
            return Err(IpubError::CsvParse {
                line,
                msg: format!("label column {label_col} out of range for {w} cells"),
            });
        }
        let mut row = Vec::with_capacity(w - 1);
        for (col, cell) in record.iter().enumerate() {
            let is_marker = cfg.missing_markers.iter().any(|m| m == cell);
            if col == label_col {
                if is_marker {
                    return Err(IpubError::CsvParse { line, msg: "missing label".into() });
                }
                y.push(cell.parse::<f64>().map_err(|_| IpubError::CsvParse {
                    line,
                    msg: format!("non-numeric label {cell:?}"),
                })?);
            } else if is_marker {
                row.push(None);
            } else {
                row.push(Some(cell.parse::<f64>().map_err(|_| IpubError::CsvParse {
                    line,
                    msg: format!("non-numeric cell {cell:?} in column {col}"),
                })?));
            }
        }
        features.push(row);
    }
    if features.is_empty() {
        return Err(IpubError::InvalidData("empty csv".into()));
    }
    let n_features = width.unwrap() - 1;
    Ok(RawTable { features, y, n_features })
}

/// Seeded uniform split without replacement. The test side gets
/// `round(n * test_fraction)` rows, at least one row staying on each side.
pub fn split(table: &RawTable, cfg: &PipelineConfig) -> Result<(RawTable, RawTable), IpubError> {
    cfg.check()?;
    let n = table.n_rows();
    if n < 2 {
        return Err(IpubError::InvalidData(format!("need >= 2 rows to split, got {n}")));
    }
    let n_test = ((n as f64 * cfg.test_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded(cfg.seed, 0);
    for k in (1..n).rev() {
        order.swap(k, rng.gen_range(0..=k));
    }
    let mut test_idx: Vec<usize> = order[..n_test].to_vec();
    test_idx.sort_unstable();
    let mut train_idx: Vec<usize> = order[n_test..].to_vec();
    train_idx.sort_unstable();
    let pick = |idx: &[usize]| RawTable {
        features: idx.iter().map(|&i| table.features[i].clone()).collect(),
        y: idx.iter().map(|&i| table.y[i]).collect(),
        n_features: table.n_features,
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Linear-interpolation quantile over a sorted slice, `q` in `[0, 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn observed_sorted(table: &RawTable, j: usize) -> Vec<f64> {
    let mut vals: Vec<f64> =
        table.features.iter().filter_map(|row| row[j]).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Replaces values outside the training percentile bounds with the bounds,
/// in both tables, for diverse features only. Returns per-feature bounds
/// (`None` for features left unclipped).
pub fn clip_outliers(
    train: &mut RawTable,
    test: &mut RawTable,
    cfg: &PipelineConfig,
) -> Result<Vec<Option<(f64, f64)>>, IpubError> {
    let mut bounds = Vec::with_capacity(train.n_features);
    for j in 0..train.n_features {
        let vals = observed_sorted(train, j);
        if vals.is_empty() {
            return Err(IpubError::InvalidData(format!(
                "feature {j} has no observed training values"
            )));
        }
        let mut distinct = 1;
        for pair in vals.windows(2) {
            if pair[1] > pair[0] {
                distinct += 1;
            }
        }
        if distinct <= DIVERSE_DISTINCT_THRESHOLD {
            bounds.push(None);
            continue;
        }
        let lo = quantile(&vals, cfg.clip_lo_pct / 100.0);
        let hi = quantile(&vals, cfg.clip_hi_pct / 100.0);
        for table in [&mut *train, &mut *test] {
            for row in &mut table.features {
                if let Some(v) = row[j].as_mut() {
                    *v = v.clamp(lo, hi);
                }
            }
        }
        bounds.push(Some((lo, hi)));
    }
    Ok(bounds)
}

/// Affine map `(v - min) * scale` sending the training min/max to 0/1;
/// constant features map to 0 via `scale = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineMap {
    pub min: f64,
    pub scale: f64,
}

impl AffineMap {
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) * self.scale
    }
}

/// Min-max normalization from training statistics, applied to both tables.
pub fn normalize(
    train: &mut RawTable,
    test: &mut RawTable,
) -> Result<Vec<AffineMap>, IpubError> {
    let mut maps = Vec::with_capacity(train.n_features);
    for j in 0..train.n_features {
        let vals = observed_sorted(train, j);
        if vals.is_empty() {
            return Err(IpubError::InvalidData(format!(
                "feature {j} has no observed training values"
            )));
        }
        let (min, max) = (vals[0], vals[vals.len() - 1]);
        let scale = if max > min { 1.0 / (max - min) } else { 0.0 };
        let map = AffineMap { min, scale };
        for table in [&mut *train, &mut *test] {
            for row in &mut table.features {
                if let Some(v) = row[j].as_mut() {
                    *v = map.apply(*v);
                }
            }
        }
        maps.push(map);
    }
    Ok(maps)
}

/// Outcome of synthetic missing-entry injection: the selected cells in
/// row-major order and their original (post-preprocessing) values.
#[derive(Debug, Clone, Serialize)]
pub struct Injection {
    pub mask: Vec<(usize, usize)>,
    pub ground_truth: Vec<f64>,
}

/// Marks exactly `round(n * d * b)` distinct observed cells missing, chosen
/// uniformly under the seed; original values are retained as ground truth.
pub fn inject_missing(train: &mut RawTable, cfg: &PipelineConfig) -> Result<Injection, IpubError> {
    cfg.check()?;
    let n = train.n_rows();
    let d = train.n_features;
    let count = (n as f64 * d as f64 * cfg.missing_rate).round() as usize;
    let mut observed: Vec<(usize, usize)> = Vec::new();
    for (i, row) in train.features.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if cell.is_some() {
                observed.push((i, j));
            }
        }
    }
    if count > observed.len() {
        return Err(IpubError::InvalidData(format!(
            "cannot inject {count} missing cells: only {} observed",
            observed.len()
        )));
    }
    let mut rng = seeded(cfg.seed, 1);
    for k in (1..observed.len()).rev() {
        observed.swap(k, rng.gen_range(0..=k));
    }
    let mut mask: Vec<(usize, usize)> = observed[..count].to_vec();
    mask.sort_unstable();
    let mut ground_truth = Vec::with_capacity(count);
    for &(i, j) in &mask {
        ground_truth.push(train.features[i][j].take().expect("selected cell was observed"));
    }
    Ok(Injection { mask, ground_truth })
}

/// Per-feature quantile interval assigned to missing cells; `None` for
/// features without missing entries.
pub type FeatureIntervals = Vec<Option<(f64, f64)>>;

/// Builds the interval matrix: observed cells get degenerate intervals,
/// missing cells get the feature's `[(1-alpha)/2, (1+alpha)/2]` quantile
/// interval over its observed values.
pub fn assign_intervals(
    train: &RawTable,
    cfg: &PipelineConfig,
) -> Result<(IntervalMatrix, FeatureIntervals), IpubError> {
    let n = train.n_rows();
    let d = train.n_features;
    let mut feature_intervals: FeatureIntervals = vec![None; d];
    for j in 0..d {
        let has_missing = train.features.iter().any(|row| row[j].is_none());
        if !has_missing {
            continue;
        }
        let vals = observed_sorted(train, j);
        if vals.len() < 2 {
            return Err(IpubError::InvalidData(format!(
                "feature {j} has missing cells but fewer than 2 observed values"
            )));
        }
        let a = cfg.coverage_alpha;
        feature_intervals[j] = Some((quantile(&vals, (1.0 - a) / 2.0), quantile(&vals, (1.0 + a) / 2.0)));
    }

    let mut lower = DenseMatrix::zeros(n, d);
    let mut upper = DenseMatrix::zeros(n, d);
    for (i, row) in train.features.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            match cell {
                Some(v) => {
                    lower.set(i, j, *v);
                    upper.set(i, j, *v);
                }
                None => {
                    let (lo, hi) = feature_intervals[j].expect("interval computed above");
                    lower.set(i, j, lo);
                    upper.set(i, j, hi);
                }
            }
        }
    }
    Ok((IntervalMatrix::new(lower, upper)?, feature_intervals))
}

/// Reproducibility manifest for one pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineManifest {
    pub seed: u64,
    pub config: PipelineConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub clip_bounds: Vec<Option<(f64, f64)>>,
    pub affine_maps: Vec<AffineMap>,
    pub injected_mask: Vec<(usize, usize)>,
    pub native_missing_train: usize,
    pub test_cells_filled: usize,
    pub feature_intervals: Vec<Option<(f64, f64)>>,
    /// Count of injected ground-truth values covered by their intervals; the
    /// quantile intervals carry no coverage guarantee, so this is recorded,
    /// not asserted.
    pub ground_truth_covered: usize,
    pub ground_truth_total: usize,
    pub diverse_feature_rule: String,
}

/// Everything downstream stages need from one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub train: TrainingSet,
    pub test_x: Vec<Vec<f64>>,
    pub test_y: Vec<f64>,
    pub ground_truth: Vec<((usize, usize), f64)>,
    pub manifest: PipelineManifest,
}

/// Runs split -> clip -> normalize -> inject -> assign on a parsed table.
/// Native-missing test cells are filled with the feature's observed training
/// median so test vectors are complete; the count is recorded.
pub fn run_pipeline(table: &RawTable, cfg: &PipelineConfig) -> Result<PipelineOutput, IpubError> {
    cfg.check()?;
    let (train, test) = split(table, cfg)?;
    run_pipeline_pair(train, test, cfg)
}

/// Pipeline variant for callers that already hold separate train and test
/// tables; identical to [`run_pipeline`] minus the split stage.
pub fn run_pipeline_pair(
    mut train: RawTable,
    mut test: RawTable,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput, IpubError> {
    cfg.check()?;
    if train.n_features != test.n_features {
        return Err(IpubError::DimensionMismatch {
            expected: train.n_features,
            got: test.n_features,
        });
    }
    let native_missing_train =
        train.features.iter().flatten().filter(|c| c.is_none()).count();
    let clip_bounds = clip_outliers(&mut train, &mut test, cfg)?;
    let affine_maps = normalize(&mut train, &mut test)?;
    let injection = inject_missing(&mut train, cfg)?;
    let (x, feature_intervals) = assign_intervals(&train, cfg)?;

    let covered = injection
        .mask
        .iter()
        .zip(&injection.ground_truth)
        .filter(|(&(i, j), &v)| x.lo(i, j) <= v && v <= x.hi(i, j))
        .count();

    let mut test_cells_filled = 0;
    let medians: Vec<f64> = (0..train.n_features)
        .map(|j| {
            let vals = observed_sorted(&train, j);
            quantile(&vals, 0.5)
        })
        .collect();
    let mut test_x: Vec<Vec<f64>> = Vec::with_capacity(test.n_rows());
    for row in &test.features {
        let mut out_row = Vec::with_capacity(row.len());
        for (j, cell) in row.iter().enumerate() {
            match cell {
                Some(v) => out_row.push(*v),
                None => {
                    test_cells_filled += 1;
                    out_row.push(medians[j]);
                }
            }
        }
        test_x.push(out_row);
    }

    let manifest = PipelineManifest {
        seed: cfg.seed,
        config: cfg.clone(),
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        n_features: train.n_features,
        clip_bounds,
        affine_maps,
        injected_mask: injection.mask.clone(),
        native_missing_train,
        test_cells_filled,
        feature_intervals,
        ground_truth_covered: covered,
        ground_truth_total: injection.ground_truth.len(),
        diverse_feature_rule: format!(
            "clip features with more than {DIVERSE_DISTINCT_THRESHOLD} distinct observed values"
        ),
    };

    let train_y = train.y.clone();
    Ok(PipelineOutput {
        train: TrainingSet::new(x, train_y)?,
        test_x,
        test_y: test.y.clone(),
        ground_truth: injection
            .mask
            .into_iter()
            .zip(injection.ground_truth)
            .collect(),
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> PipelineConfig {
        PipelineConfig::default()
    }

    fn table_from(features: Vec<Vec<Option<f64>>>, y: Vec<f64>) -> RawTable {
        let n_features = features[0].len();
        RawTable { features, y, n_features }
    }

    #[test]
    fn parses_basic_rows() {
        let t = parse_csv("1.0,2.0,+1\n3.0,4.0,-1\n", &cfg()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.n_features, 2);
        assert_eq!(t.features[0], vec![Some(1.0), Some(2.0)]);
        assert_eq!(t.y, vec![1.0, -1.0]);
    }

    #[test]
    fn marker_cells_become_native_missing() {
        let t = parse_csv("NA,2.0,1\n?,,-1\n", &cfg()).unwrap();
        assert_eq!(t.features[0][0], None);
        assert_eq!(t.features[1], vec![None, None]);
    }

    #[test]
    fn header_skipped_with_flag() {
        let mut c = cfg();
        c.has_header = true;
        let t = parse_csv("f1,f2,label\n1,2,1\n", &c).unwrap();
        assert_eq!(t.n_rows(), 1);
    }

    #[test]
    fn ragged_and_non_numeric_rows_error() {
        assert!(matches!(
            parse_csv("1,2,1\n3,4\n", &cfg()),
            Err(IpubError::CsvParse { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv("1,abc,1\n", &cfg()),
            Err(IpubError::CsvParse { line: 1, .. })
        ));
        assert!(parse_csv("", &cfg()).is_err());
    }

    #[test]
    fn split_examples() {
        let rows: Vec<Vec<Option<f64>>> = (0..10).map(|i| vec![Some(i as f64)]).collect();
        let t = table_from(rows, (0..10).map(|i| i as f64).collect());
        let (train, test) = split(&t, &cfg()).unwrap();
        assert_eq!(test.n_rows(), 1);
        assert_eq!(train.n_rows(), 9);
        // partition exactly
        let mut all: Vec<f64> = train.y.iter().chain(test.y.iter()).copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());
        // same seed, same split
        let (train2, test2) = split(&t, &cfg()).unwrap();
        assert_eq!(train.y, train2.y);
        assert_eq!(test.y, test2.y);
    }

    #[test]
    fn quantile_clip_example_on_uniform_ramp() {
        let rows: Vec<Vec<Option<f64>>> = (0..200).map(|i| vec![Some(i as f64)]).collect();
        let mut train = table_from(rows, vec![0.0; 200]);
        let mut test = table_from(vec![vec![Some(500.0)]], vec![0.0]);
        let bounds = clip_outliers(&mut train, &mut test, &cfg()).unwrap();
        let (lo, hi) = bounds[0].unwrap();
        assert_abs_diff_eq!(lo, 0.995, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 198.005, epsilon = 1e-12);
        assert_eq!(train.features[0][0], Some(0.995));
        assert_eq!(train.features[199][0], Some(198.005));
        // test value beyond train max clips to the train bound
        assert_eq!(test.features[0][0], Some(198.005));
    }

    #[test]
    fn constant_and_low_diversity_features_not_clipped() {
        let rows: Vec<Vec<Option<f64>>> = (0..50).map(|_| vec![Some(3.0)]).collect();
        let mut train = table_from(rows, vec![0.0; 50]);
        let mut test = table_from(vec![vec![Some(3.0)]], vec![0.0]);
        let bounds = clip_outliers(&mut train, &mut test, &cfg()).unwrap();
        assert_eq!(bounds[0], None);
        assert!(train.features.iter().all(|r| r[0] == Some(3.0)));
    }

    #[test]
    fn normalize_affine_examples() {
        let mut train = table_from(vec![vec![Some(2.0)], vec![Some(4.0)]], vec![0.0, 0.0]);
        let mut test = table_from(vec![vec![Some(3.0)]], vec![0.0]);
        let maps = normalize(&mut train, &mut test).unwrap();
        assert_eq!(train.features[0][0], Some(0.0));
        assert_eq!(train.features[1][0], Some(1.0));
        assert_eq!(test.features[0][0], Some(0.5));
        assert_eq!(maps[0], AffineMap { min: 2.0, scale: 0.5 });
    }

    #[test]
    fn constant_feature_normalizes_to_zero() {
        let mut train = table_from(vec![vec![Some(7.0)], vec![Some(7.0)]], vec![0.0, 0.0]);
        let mut test = table_from(vec![vec![Some(9.0)]], vec![0.0]);
        normalize(&mut train, &mut test).unwrap();
        assert_eq!(train.features[0][0], Some(0.0));
        assert_eq!(test.features[0][0], Some(0.0));
    }

    #[test]
    fn already_unit_feature_keeps_values() {
        let mut train = table_from(vec![vec![Some(0.0)], vec![Some(0.25)], vec![Some(1.0)]], vec![0.0; 3]);
        let mut test = table_from(vec![vec![Some(0.5)]], vec![0.0]);
        normalize(&mut train, &mut test).unwrap();
        assert_abs_diff_eq!(train.features[1][0].unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(test.features[0][0].unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn injection_count_rate_and_determinism() {
        let rows: Vec<Vec<Option<f64>>> =
            (0..100).map(|i| (0..10).map(|j| Some((i * 10 + j) as f64)).collect()).collect();
        let mut c = cfg();
        c.missing_rate = 0.01;
        let mut t1 = table_from(rows.clone(), vec![0.0; 100]);
        let inj1 = inject_missing(&mut t1, &c).unwrap();
        assert_eq!(inj1.mask.len(), 10); // 100 * 10 * 0.01
        let mut t2 = table_from(rows.clone(), vec![0.0; 100]);
        let inj2 = inject_missing(&mut t2, &c).unwrap();
        assert_eq!(inj1.mask, inj2.mask);
        // b = 0 injects nothing
        let mut t3 = table_from(rows, vec![0.0; 100]);
        let inj3 = inject_missing(&mut t3, &cfg()).unwrap();
        assert!(inj3.mask.is_empty());
    }

    #[test]
    fn injection_respects_observed_budget() {
        let mut t = table_from(vec![vec![Some(1.0), None]], vec![0.0]);
        let mut c = cfg();
        c.missing_rate = 1.0; // wants 2 cells, only 1 observed
        assert!(inject_missing(&mut t, &c).is_err());
    }

    #[test]
    fn interval_assignment_quantiles() {
        // feature uniform on {0, 1/9, ..., 1}: Q(0.25) = 0.25, Q(0.75) = 0.75
        let mut rows: Vec<Vec<Option<f64>>> =
            (0..10).map(|i| vec![Some(i as f64 / 9.0)]).collect();
        rows.push(vec![None]);
        let train = table_from(rows, vec![0.0; 11]);
        let (x, intervals) = assign_intervals(&train, &cfg()).unwrap();
        let (lo, hi) = intervals[0].unwrap();
        assert_abs_diff_eq!(lo, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 0.75, epsilon = 1e-12);
        assert_eq!(x.lo(10, 0), lo);
        assert_eq!(x.hi(10, 0), hi);
        // observed rows get zero-width intervals
        assert_eq!(x.lo(0, 0), x.hi(0, 0));
    }

    #[test]
    fn alpha_one_reaches_observed_min_max() {
        let mut rows: Vec<Vec<Option<f64>>> =
            (0..10).map(|i| vec![Some(i as f64)]).collect();
        rows.push(vec![None]);
        let train = table_from(rows, vec![0.0; 11]);
        let mut c = cfg();
        c.coverage_alpha = 1.0;
        let (_, intervals) = assign_intervals(&train, &c).unwrap();
        assert_eq!(intervals[0].unwrap(), (0.0, 9.0));
    }

    #[test]
    fn full_pipeline_is_deterministic_and_normalized() {
        let mut rng = Lcg::new(17);
        let rows: Vec<Vec<Option<f64>>> = (0..60)
            .map(|_| (0..4).map(|_| Some(rng.next_f64() * 20.0 - 10.0)).collect())
            .collect();
        let y: Vec<f64> = (0..60).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let table = table_from(rows, y);
        let mut c = cfg();
        c.missing_rate = 0.05;
        c.seed = 5;
        let out1 = run_pipeline(&table, &c).unwrap();
        let out2 = run_pipeline(&table, &c).unwrap();
        let m1 = serde_json::to_string(&out1.manifest).unwrap();
        let m2 = serde_json::to_string(&out2.manifest).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(out1.manifest.injected_mask, out2.manifest.injected_mask);

        // all normalized observed training values lie in [0, 1]
        let x = &out1.train.x;
        for i in 0..x.n() {
            for j in 0..x.d() {
                if !x.is_missing(i, j) {
                    let v = x.lo(i, j);
                    assert!((-1e-12..=1.0 + 1e-12).contains(&v), "value {v}");
                }
            }
        }
        assert_eq!(out1.manifest.ground_truth_total, out1.ground_truth.len());
        assert!(out1.manifest.ground_truth_covered <= out1.manifest.ground_truth_total);
    }

    // tiny deterministic generator for test data; avoids pulling rand into
    // scope just for fixtures
    struct Lcg {
        state: u64,
    }

    impl Lcg {
        fn new(seed: u64) -> Self {
            Self { state: seed.wrapping_mul(6364136223846793005).wrapping_add(1) }
        }

        fn next_f64(&mut self) -> f64 {
            self.state = self.state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (self.state >> 11) as f64 / (1u64 << 53) as f64
        }
    }
}
