//! Interval-Newton enclosure of every trainable weight vector, the
//! comparison baseline. Logistic loss with L2 penalty only.
//!
//! One step evaluates `N(W) = m(W) - IGA(H(W, X), g)` where `m` is the box
//! midpoint, `H` the interval Hessian over the weight box and the data
//! intervals, `IGA` interval Gaussian elimination, and `g` the interval
//! gradient; the result is intersected with the running box. The gradient can
//! be expanded at the box midpoint (classic Hansen form) or over the whole
//! weight box (every operation on intervals, including the parameters). Box
//! initialization is verified by a midpoint-form step: `N(W)` inside `W`
//! certifies that every imputation's optimum lies in the box.

use crate::error::IpubError;
use crate::interval::{dot, dot_scalar, point_box, Interval, IntervalBox};
use crate::model::{IntervalMatrix, Label, Link, PredictionInterval, TrainingSet};

/// How the gradient argument is intervalized inside a Newton step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientExpansion {
    /// Gradient at the box midpoint; only the data stays interval-valued.
    Midpoint,
    /// Gradient over the full weight box; parameters and data are intervals
    /// in every operation.
    FullBox,
}

#[derive(Debug, Clone, Copy)]
pub struct InewtonConfig {
    /// Newton iteration budget `K`.
    pub max_iter: usize,
    /// Shrink threshold for the stall stop.
    pub shrink_tol: f64,
    /// Stop early once no component shrinks by more than `shrink_tol`. Off by
    /// default: the baseline's cost model is `K` full interval steps.
    pub stop_on_stall: bool,
    pub expansion: GradientExpansion,
    /// Relative margin added to the verified initial half-width.
    pub init_margin: f64,
    /// Absolute floor on the initial half-width.
    pub init_floor: f64,
    /// Initial-box doublings attempted when verification fails.
    pub max_doublings: usize,
}

impl Default for InewtonConfig {
    fn default() -> Self {
        Self {
            max_iter: 30,
            shrink_tol: 1e-12,
            stop_on_stall: false,
            expansion: GradientExpansion::FullBox,
            init_margin: 0.1,
            init_floor: 1e-4,
            max_doublings: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InewtonResult {
    pub enclosure: IntervalBox,
    pub iterations: usize,
    /// False when an IGA pivot contained zero or an intersection emptied.
    pub contracted: bool,
}

fn check_logistic_l2(ts: &TrainingSet) -> Result<(), IpubError> {
    for &yi in &ts.y {
        if yi != 1.0 && yi != -1.0 {
            return Err(IpubError::Unsupported(format!(
                "interval Newton baseline needs labels in {{-1,+1}}, got {yi}"
            )));
        }
    }
    Ok(())
}

fn row_intervals(x: &IntervalMatrix, i: usize) -> Vec<Interval> {
    (0..x.d()).map(|j| Interval::new(x.lo(i, j), x.hi(i, j))).collect()
}

/// Componentwise enclosure of the logistic-loss gradient
/// `(1/n) sum_i -y_i x_i / (1 + exp(y_i w.x_i)) + lambda w`
/// over all data matrices in the intervals and all weights in the box.
pub fn interval_gradient(
    x: &IntervalMatrix,
    y: &[f64],
    w_box: &[Interval],
    lambda: f64,
) -> Result<IntervalBox, IpubError> {
    let (n, d) = (x.n(), x.d());
    let nf = n as f64;
    let mut grad: IntervalBox = w_box.iter().map(|w| w.mul_scalar(lambda)).collect();
    for i in 0..n {
        let xi = row_intervals(x, i);
        let u = dot(w_box, &xi).mul_scalar(y[i]);
        let denom = u.exp().add_scalar(1.0);
        let coef = Interval::point(-y[i]).div(&denom)?.mul_scalar(1.0 / nf);
        for j in 0..d {
            grad[j] = grad[j].add(&coef.mul(&xi[j]));
        }
    }
    Ok(grad)
}

/// Componentwise enclosure of the logistic Hessian
/// `(1/n) sum_i s_i x_i x_i^T + lambda I` with `s_i = sigma(u)*sigma(-u)`.
fn interval_hessian(
    x: &IntervalMatrix,
    y: &[f64],
    w_box: &[Interval],
    lambda: f64,
) -> Result<Vec<IntervalBox>, IpubError> {
    let (n, d) = (x.n(), x.d());
    let nf = n as f64;
    let one = Interval::point(1.0);
    let mut h: Vec<IntervalBox> = vec![vec![Interval::point(0.0); d]; d];
    for i in 0..n {
        let xi = row_intervals(x, i);
        let u = dot(w_box, &xi).mul_scalar(y[i]);
        let sig_pos = one.div(&u.neg().exp().add_scalar(1.0))?;
        let sig_neg = one.div(&u.exp().add_scalar(1.0))?;
        let s = sig_pos.mul(&sig_neg).mul_scalar(1.0 / nf);
        for j in 0..d {
            let sj = s.mul(&xi[j]);
            for k in j..d {
                h[j][k] = h[j][k].add(&sj.mul(&xi[k]));
            }
        }
    }
    for j in 0..d {
        h[j][j] = h[j][j].add_scalar(lambda);
        for k in 0..j {
            h[j][k] = h[k][j];
        }
    }
    Ok(h)
}

fn mignitude(iv: &Interval) -> f64 {
    if iv.contains_zero() {
        0.0
    } else {
        iv.lo.abs().min(iv.hi.abs())
    }
}

/// Interval Gaussian elimination with mignitude pivoting. Fails when every
/// pivot candidate contains zero.
fn iga_solve(mut h: Vec<IntervalBox>, mut g: IntervalBox) -> Result<IntervalBox, IpubError> {
    let d = g.len();
    for k in 0..d {
        let pivot_row = (k..d)
            .max_by(|&a, &b| {
                mignitude(&h[a][k]).partial_cmp(&mignitude(&h[b][k])).unwrap()
            })
            .unwrap();
        if mignitude(&h[pivot_row][k]) == 0.0 {
            return Err(IpubError::EnclosureFailure(format!(
                "gaussian elimination pivot {k} contains zero"
            )));
        }
        h.swap(k, pivot_row);
        g.swap(k, pivot_row);
        for i in (k + 1)..d {
            let factor = h[i][k].div(&h[k][k])?;
            for j in (k + 1)..d {
                let hkj = h[k][j];
                h[i][j] = h[i][j].sub(&factor.mul(&hkj));
            }
            let gk = g[k];
            g[i] = g[i].sub(&factor.mul(&gk));
            h[i][k] = Interval::point(0.0);
        }
    }
    let mut z = vec![Interval::point(0.0); d];
    for i in (0..d).rev() {
        let mut acc = g[i];
        for j in (i + 1)..d {
            acc = acc.sub(&h[i][j].mul(&z[j]));
        }
        z[i] = acc.div(&h[i][i])?;
    }
    Ok(z)
}

fn newton_image(
    ts: &TrainingSet,
    lambda: f64,
    w_box: &[Interval],
    expansion: GradientExpansion,
) -> Result<IntervalBox, IpubError> {
    let mid: Vec<f64> = w_box.iter().map(Interval::midpoint).collect();
    let grad = match expansion {
        GradientExpansion::Midpoint => interval_gradient(&ts.x, &ts.y, &point_box(&mid), lambda)?,
        GradientExpansion::FullBox => interval_gradient(&ts.x, &ts.y, w_box, lambda)?,
    };
    let hess = interval_hessian(&ts.x, &ts.y, w_box, lambda)?;
    let z = iga_solve(hess, grad)?;
    Ok(mid.iter().zip(&z).map(|(m, zi)| Interval::point(*m).sub(zi)).collect())
}

/// Builds an initial box around `center` with half-width
/// `radius * (1 + margin) + floor` per coordinate and verifies it with one
/// midpoint-form step (`N(W)` inside `W`); on failure the half-widths double,
/// up to `max_doublings` times.
pub fn initial_box(
    ts: &TrainingSet,
    lambda: f64,
    center: &[f64],
    radius: f64,
    cfg: &InewtonConfig,
) -> (IntervalBox, bool) {
    let mut half = radius * (1.0 + cfg.init_margin) + cfg.init_floor;
    for _ in 0..=cfg.max_doublings {
        let w_box: IntervalBox =
            center.iter().map(|&c| Interval::new(c - half, c + half)).collect();
        if let Ok(image) = newton_image(ts, lambda, &w_box, GradientExpansion::Midpoint) {
            let inside = image.iter().zip(&w_box).all(|(n, w)| w.contains_interval(n));
            if inside {
                return (w_box, true);
            }
        }
        half *= 2.0;
    }
    let w_box = center.iter().map(|&c| Interval::new(c - half, c + half)).collect();
    (w_box, false)
}

/// Iterates the interval Newton step from `init`, intersecting with the
/// running box, for at most `cfg.max_iter` rounds.
pub fn inewton_enclose(
    ts: &TrainingSet,
    lambda: f64,
    init: &IntervalBox,
    cfg: &InewtonConfig,
) -> Result<InewtonResult, IpubError> {
    check_logistic_l2(ts)?;
    let mut w_box = init.clone();
    let mut iterations = 0;
    let mut contracted = true;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let image = match newton_image(ts, lambda, &w_box, cfg.expansion) {
            Ok(image) => image,
            Err(_) => {
                contracted = false;
                break;
            }
        };
        let mut next = Vec::with_capacity(w_box.len());
        let mut emptied = false;
        for (w, n) in w_box.iter().zip(&image) {
            match w.intersect(n) {
                Some(iv) => next.push(iv),
                None => {
                    emptied = true;
                    break;
                }
            }
        }
        if emptied {
            contracted = false;
            break;
        }
        let max_shrink = w_box
            .iter()
            .zip(&next)
            .map(|(a, b)| a.width() - b.width())
            .fold(0.0_f64, f64::max);
        w_box = next;
        if cfg.stop_on_stall && max_shrink <= cfg.shrink_tol {
            break;
        }
    }
    Ok(InewtonResult { enclosure: w_box, iterations, contracted })
}

/// Interval dot product of the enclosure with a test point, mapped through
/// the monotone link endpoints.
pub fn inewton_predict_interval(
    enclosure: &IntervalBox,
    x: &[f64],
    link: Link,
) -> PredictionInterval {
    let lin = dot_scalar(enclosure, x);
    let label = match link {
        Link::Sign => Some(if lin.lo > 0.0 {
            Label::Plus
        } else if lin.hi < 0.0 {
            Label::Minus
        } else {
            Label::Unknown
        }),
        _ => None,
    };
    PredictionInterval {
        linear_lo: lin.lo,
        linear_hi: lin.hi,
        value_lo: link.apply(lin.lo),
        value_hi: link.apply(lin.hi),
        label,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::model::{Loss, ModelSpec, Penalty};
    use crate::objective::primal_gradient;
    use crate::solver::{impute_midpoint, train, SolverConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn logistic_trainset(
        rng: &mut ChaCha8Rng,
        n: usize,
        d: usize,
        n_missing: usize,
    ) -> TrainingSet {
        let base: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut lower = DenseMatrix::from_vec(n, d, base.clone());
        let mut upper = lower.clone();
        let mut cells: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..d).map(move |j| (i, j))).collect();
        for k in (1..cells.len()).rev() {
            cells.swap(k, rng.gen_range(0..=k));
        }
        for &(i, j) in &cells[..n_missing] {
            let v = base[i * d + j];
            let h = rng.gen_range(0.05..0.3);
            lower.set(i, j, v - h);
            upper.set(i, j, v + h);
        }
        let x = IntervalMatrix::new(lower, upper).unwrap();
        let y: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        TrainingSet::new(x, y).unwrap()
    }

    #[test]
    fn degenerate_boxes_collapse_to_point_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ts = logistic_trainset(&mut rng, 8, 3, 0);
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda = 0.9;
        let enclosure = interval_gradient(&ts.x, &ts.y, &point_box(&w), lambda).unwrap();
        let spec = ModelSpec::new(Loss::Logistic, Penalty::L2 { lambda }).unwrap();
        let xm = impute_midpoint(&ts.x);
        let point = primal_gradient(&spec, &xm, &ts.y, &w).unwrap();
        for (iv, g) in enclosure.iter().zip(&point) {
            assert!((iv.midpoint() - g).abs() <= 1e-12, "{} vs {g}", iv.midpoint());
            assert!(iv.width() <= 1e-9);
            assert!(iv.contains(*g));
        }
    }

    #[test]
    fn gradient_enclosure_contains_sampled_evaluations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ts = logistic_trainset(&mut rng, 6, 3, 4);
        let lambda = 0.8;
        let spec = ModelSpec::new(Loss::Logistic, Penalty::L2 { lambda }).unwrap();
        let w_box: Vec<Interval> =
            (0..3).map(|_| Interval::new(rng.gen_range(-0.5..0.0), rng.gen_range(0.0..0.5))).collect();
        let enclosure = interval_gradient(&ts.x, &ts.y, &w_box, lambda).unwrap();
        for _ in 0..100 {
            let w: Vec<f64> =
                w_box.iter().map(|iv| rng.gen_range(iv.lo..=iv.hi)).collect();
            let mut xm = impute_midpoint(&ts.x);
            for &(i, j) in &ts.index.missing_set {
                xm.set(i, j, rng.gen_range(ts.x.lo(i, j)..=ts.x.hi(i, j)));
            }
            let g = primal_gradient(&spec, &xm, &ts.y, &w).unwrap();
            for (iv, gj) in enclosure.iter().zip(&g) {
                assert!(iv.contains(*gj), "{gj} outside [{}, {}]", iv.lo, iv.hi);
            }
        }
    }

    #[test]
    fn gradient_enclosure_at_trained_center_contains_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ts = logistic_trainset(&mut rng, 10, 3, 0);
        let lambda = 1.0;
        let spec = ModelSpec::new(Loss::Logistic, Penalty::L2 { lambda }).unwrap();
        let sol = train(&spec, &impute_midpoint(&ts.x), &ts.y, &SolverConfig::default()).unwrap();
        let w_box: Vec<Interval> =
            sol.w.iter().map(|&c| Interval::new(c - 1e-4, c + 1e-4)).collect();
        let enclosure = interval_gradient(&ts.x, &ts.y, &w_box, lambda).unwrap();
        for iv in &enclosure {
            assert!(iv.contains(0.0));
        }
    }

    #[test]
    fn zero_width_data_contracts_to_trained_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ts = logistic_trainset(&mut rng, 12, 3, 0);
        let lambda = 1.0;
        let spec = ModelSpec::new(Loss::Logistic, Penalty::L2 { lambda }).unwrap();
        let sol = train(&spec, &impute_midpoint(&ts.x), &ts.y, &SolverConfig::default()).unwrap();
        let cfg = InewtonConfig { expansion: GradientExpansion::Midpoint, ..Default::default() };
        let (init, verified) = initial_box(&ts, lambda, &sol.w, 0.0, &cfg);
        assert!(verified);
        let result = inewton_enclose(&ts, lambda, &init, &cfg).unwrap();
        assert!(result.contracted);
        for (iv, wj) in result.enclosure.iter().zip(&sol.w) {
            assert!(iv.contains(*wj));
            assert!((iv.midpoint() - wj).abs() <= 1e-6);
        }
    }

    #[test]
    fn corner_retrained_solutions_stay_inside_enclosure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lambda = 1.0;
        let spec = ModelSpec::new(Loss::Logistic, Penalty::L2 { lambda }).unwrap();
        let solver_cfg = SolverConfig::default();
        for expansion in [GradientExpansion::Midpoint, GradientExpansion::FullBox] {
            let ts = logistic_trainset(&mut rng, 8, 2, 3);
            let sol = train(&spec, &impute_midpoint(&ts.x), &ts.y, &solver_cfg).unwrap();
            let delta =
                crate::bound::compute_delta(&spec, &sol, &ts.x, &ts.index, &ts.y).unwrap();
            let cfg = InewtonConfig { expansion, ..Default::default() };
            let radius = (2.0 * delta.delta_total / lambda).sqrt();
            let (init, verified) = initial_box(&ts, lambda, &sol.w, radius, &cfg);
            assert!(verified);
            let result = inewton_enclose(&ts, lambda, &init, &cfg).unwrap();
            let missing = &ts.index.missing_set;
            for corner in 0..(1usize << missing.len()) {
                let mut xm = sol.imputed.clone();
                for (bit, &(i, j)) in missing.iter().enumerate() {
                    let v = if corner >> bit & 1 == 1 { ts.x.hi(i, j) } else { ts.x.lo(i, j) };
                    xm.set(i, j, v);
                }
                let retrained = train(&spec, &xm, &ts.y, &solver_cfg).unwrap();
                for (iv, wj) in result.enclosure.iter().zip(&retrained.w) {
                    assert!(
                        iv.lo - 1e-9 <= *wj && *wj <= iv.hi + 1e-9,
                        "{expansion:?}: {wj} outside [{}, {}]",
                        iv.lo,
                        iv.hi
                    );
                }
            }
        }
    }

    #[test]
    fn zero_iterations_return_initial_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ts = logistic_trainset(&mut rng, 6, 2, 2);
        let init = vec![Interval::new(-1.0, 1.0), Interval::new(-0.5, 0.5)];
        let cfg = InewtonConfig { max_iter: 0, ..Default::default() };
        let result = inewton_enclose(&ts, 1.0, &init, &cfg).unwrap();
        assert_eq!(result.enclosure, init);
        assert_eq!(result.iterations, 0);
    }

    #[test]
    fn predict_interval_examples() {
        // zero-width box: point prediction
        let point = point_box(&[0.5, -0.5]);
        let pi = inewton_predict_interval(&point, &[1.0, 1.0], Link::Identity);
        assert!((pi.value_lo - 0.0).abs() <= 1e-10 && (pi.value_hi - 0.0).abs() <= 1e-10);

        // unit box with x = (1, -1): linear interval [-1, 1]
        let unit = vec![Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)];
        let pi = inewton_predict_interval(&unit, &[1.0, -1.0], Link::Identity);
        assert!((pi.linear_lo + 1.0).abs() <= 1e-10);
        assert!((pi.linear_hi - 1.0).abs() <= 1e-10);

        // sigmoid of [-1, 1]
        let pi = inewton_predict_interval(&unit, &[1.0, -1.0], Link::Sigmoid);
        assert!((pi.value_lo - 0.2689414213699951).abs() <= 1e-9);
        assert!((pi.value_hi - 0.7310585786300049).abs() <= 1e-9);
    }

    #[test]
    fn non_logistic_labels_rejected() {
        let x = IntervalMatrix::observed(DenseMatrix::from_vec(1, 1, vec![1.0]));
        let ts = TrainingSet::new(x, vec![0.5]).unwrap();
        let init = vec![Interval::new(-1.0, 1.0)];
        assert!(inewton_enclose(&ts, 1.0, &init, &InewtonConfig::default()).is_err());
    }
}
