//! Seeded synthetic data: a logistic ground-truth dataset for the experiment
//! harness (no external downloads) and small random interval instances for
//! the property and acceptance checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::DenseMatrix;
use crate::model::{IntervalMatrix, Loss, ModelSpec, Penalty, TrainingSet};
use crate::pipeline::RawTable;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on two uniforms
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Logistic ground-truth dataset: features uniform on `[0, 1]`, labels drawn
/// from `Bernoulli(sigma(w_true . (x - 1/2)))` with a seeded weight vector
/// scaled so classes are informative but not separable.
pub fn logistic_table(n: usize, d: usize, seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 6.0 / (d as f64).sqrt();
    let w_true: Vec<f64> = (0..d).map(|_| normal(&mut rng) * scale).collect();
    let mut features = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let t: f64 = x.iter().zip(&w_true).map(|(xi, wi)| (xi - 0.5) * wi).sum();
        let p = crate::model::sigmoid(t);
        y.push(if rng.gen_bool(p.clamp(0.0, 1.0)) { 1.0 } else { -1.0 });
        features.push(x.into_iter().map(Some).collect());
    }
    RawTable { features, y, n_features: d }
}

/// The same dataset rendered as CSV rows `x_1,...,x_d,label`.
pub fn logistic_csv(n: usize, d: usize, seed: u64) -> String {
    let table = logistic_table(n, d, seed);
    let mut out = String::new();
    for (row, yi) in table.features.iter().zip(&table.y) {
        for cell in row {
            out.push_str(&format!("{},", cell.unwrap()));
        }
        out.push_str(&format!("{}\n", *yi as i64));
    }
    out
}

/// The loss/penalty combinations covered by the acceptance sweeps.
pub const COMBOS: [(Loss, bool); 6] = [
    (Loss::Squared, false),
    (Loss::Squared, true),
    (Loss::Hinge, false),
    (Loss::Hinge, true),
    (Loss::Logistic, false),
    (Loss::Logistic, true),
];

/// One random desk-scale instance with interval-valued missing entries.
#[derive(Debug, Clone)]
pub struct SmallInstance {
    pub spec: ModelSpec,
    pub trainset: TrainingSet,
    pub test_points: Vec<Vec<f64>>,
}

/// Deterministic small instance: `n <= 30`, `d <= 5`, `M <= 8`, cycling
/// through every loss/penalty combination by seed.
pub fn random_small_instance(seed: u64) -> SmallInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (loss, elastic) = COMBOS[(seed % 6) as usize];
    let lambda = [0.5, 1.0, 4.0][rng.gen_range(0..3)];
    let penalty = if elastic {
        Penalty::ElasticNet { lambda, kappa: [0.05, 0.3][rng.gen_range(0..2)] }
    } else {
        Penalty::L2 { lambda }
    };
    let spec = ModelSpec::new(loss, penalty).expect("valid parameters");

    let n = rng.gen_range(4..=30);
    let d = rng.gen_range(1..=5);
    let m = rng.gen_range(0..=8.min(n * d));

    let base: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut lower = DenseMatrix::from_vec(n, d, base.clone());
    let mut upper = lower.clone();
    let mut cells: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..d).map(move |j| (i, j))).collect();
    for k in (1..cells.len()).rev() {
        cells.swap(k, rng.gen_range(0..=k));
    }
    for &(i, j) in &cells[..m] {
        let v = base[i * d + j];
        let h = rng.gen_range(0.05..0.6);
        lower.set(i, j, v - h);
        upper.set(i, j, v + h);
    }
    let x = IntervalMatrix::new(lower, upper).expect("ordered intervals");

    let w_true: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let t: f64 = (0..d).map(|j| base[i * d + j] * w_true[j]).sum();
            match loss {
                Loss::Squared => t + 0.3 * normal(&mut rng),
                _ => {
                    if t + 0.5 * normal(&mut rng) >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }
        })
        .collect();

    let test_points: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();

    SmallInstance {
        spec,
        trainset: TrainingSet::new(x, y).expect("consistent dimensions"),
        test_points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_table_is_deterministic_and_labeled() {
        let a = logistic_table(50, 4, 7);
        let b = logistic_table(50, 4, 7);
        assert_eq!(a, b);
        assert_eq!(a.n_rows(), 50);
        assert!(a.y.iter().all(|&v| v == 1.0 || v == -1.0));
        assert!(a.y.contains(&1.0));
        assert!(a.y.contains(&-1.0));
        assert!(a
            .features
            .iter()
            .flatten()
            .all(|c| { let v = c.unwrap(); (0.0..=1.0).contains(&v) }));
    }

    #[test]
    fn csv_roundtrips_through_the_parser() {
        let csv = logistic_csv(20, 3, 11);
        let cfg = crate::pipeline::PipelineConfig::default();
        let parsed = crate::pipeline::parse_csv(&csv, &cfg).unwrap();
        let direct = logistic_table(20, 3, 11);
        assert_eq!(parsed.y, direct.y);
        assert_eq!(parsed.n_features, 3);
    }

    #[test]
    fn small_instances_cover_all_combos_and_bounds() {
        let mut seen = [false; 6];
        for seed in 0..24 {
            let inst = random_small_instance(seed);
            seen[(seed % 6) as usize] = true;
            let n = inst.trainset.x.n();
            let d = inst.trainset.x.d();
            assert!((4..=30).contains(&n));
            assert!((1..=5).contains(&d));
            assert!(inst.trainset.index.count() <= 8);
            assert_eq!(inst.test_points.len(), 3);
            let repeat = random_small_instance(seed);
            assert_eq!(inst.trainset.y, repeat.trainset.y);
        }
        assert!(seen.iter().all(|&s| s));
    }
}
