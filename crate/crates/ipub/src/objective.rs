//! Losses, penalties, their convex conjugates and subderivatives, and the
//! primal/dual objective values built from them.
//!
//! Every function here is pure. The logistic loss is evaluated in the
//! overflow-safe `log1p(exp(-|t|)) + max(0, -t)` form, and its conjugate in
//! the binary-entropy form `t*log(t) + (1-t)*log(1-t)` with `0*log(0) = 0`,
//! which matches the closed-form conjugate exactly on the feasible domain.

use crate::error::IpubError;
use crate::linalg::{dot, DenseMatrix};
use crate::model::{Loss, Penalty, ModelSpec};

/// Absolute slack allowed when clamping dual variables onto the feasible
/// domain boundary; KKT-recovered duals can sit exactly on it.
pub const DUAL_FEASIBILITY_SLACK: f64 = 1e-12;

/// Closed subderivative interval; degenerate for differentiable losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubderivativeInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SubderivativeInterval {
    fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }
}

#[inline]
fn log1p_exp(t: f64) -> f64 {
    // log(1 + e^t), safe for large |t|
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn check_label(loss: Loss, y: f64) -> Result<(), IpubError> {
    match loss {
        Loss::Squared => {
            if y.is_finite() {
                Ok(())
            } else {
                Err(IpubError::InvalidData(format!("non-finite output {y}")))
            }
        }
        Loss::Hinge | Loss::Logistic => {
            if y == 1.0 || y == -1.0 {
                Ok(())
            } else {
                Err(IpubError::InvalidData(format!("label {y} not in {{-1,+1}}")))
            }
        }
    }
}

/// Loss value at a linear score `v`.
pub fn loss_value(loss: Loss, y: f64, v: f64) -> Result<f64, IpubError> {
    check_label(loss, y)?;
    Ok(match loss {
        Loss::Squared => (y - v) * (y - v),
        Loss::Hinge => (1.0 - y * v).max(0.0),
        Loss::Logistic => log1p_exp(-y * v),
    })
}

/// Clamps `alpha` into the dual-feasible domain for the loss, allowing an
/// absolute slack of [`DUAL_FEASIBILITY_SLACK`] before erroring.
pub fn clamp_dual(loss: Loss, y: f64, alpha: f64) -> Result<f64, IpubError> {
    match loss {
        Loss::Squared => {
            if alpha.is_finite() {
                Ok(alpha)
            } else {
                Err(IpubError::DualInfeasible { value: alpha, bound: "finite" })
            }
        }
        Loss::Hinge | Loss::Logistic => {
            let t = alpha / y; // y in {-1,+1}
            if !(-DUAL_FEASIBILITY_SLACK..=1.0 + DUAL_FEASIBILITY_SLACK).contains(&t) {
                return Err(IpubError::DualInfeasible {
                    value: alpha,
                    bound: "0 <= alpha/y <= 1",
                });
            }
            Ok(t.clamp(0.0, 1.0) * y)
        }
    }
}

/// Convex conjugate of the loss in its second argument, evaluated at `-alpha`.
pub fn loss_conjugate(loss: Loss, y: f64, alpha: f64) -> Result<f64, IpubError> {
    check_label(loss, y)?;
    let alpha = clamp_dual(loss, y, alpha)?;
    Ok(match loss {
        Loss::Squared => 0.25 * alpha * (alpha - 4.0 * y),
        Loss::Hinge => -alpha / y,
        Loss::Logistic => {
            // entropy form of (1 - a/y) log|y - a| + (a/y) log|a| - log|y|
            let t = alpha / y;
            let mut s = 0.0;
            if t > 0.0 {
                s += t * t.ln();
            }
            if t < 1.0 {
                s += (1.0 - t) * (1.0 - t).ln();
            }
            s
        }
    })
}

/// Subderivative interval of the loss at a linear score `v`.
pub fn loss_subderivative(loss: Loss, y: f64, v: f64) -> Result<SubderivativeInterval, IpubError> {
    check_label(loss, y)?;
    Ok(match loss {
        Loss::Squared => SubderivativeInterval::point(2.0 * (v - y)),
        Loss::Logistic => {
            SubderivativeInterval::point(-y / (1.0 + (y * v).exp().min(f64::MAX)))
        }
        Loss::Hinge => {
            let margin = y * v;
            if margin > 1.0 {
                SubderivativeInterval::point(0.0)
            } else if margin < 1.0 {
                SubderivativeInterval::point(-y)
            } else {
                // the interval between -y and 0, kept lo <= hi
                SubderivativeInterval { lo: (-y).min(0.0), hi: (-y).max(0.0) }
            }
        }
    })
}

/// Penalty value.
pub fn penalty_value(penalty: Penalty, w: &[f64]) -> f64 {
    let l2: f64 = w.iter().map(|v| v * v).sum();
    match penalty {
        Penalty::L2 { lambda } => 0.5 * lambda * l2,
        Penalty::ElasticNet { lambda, kappa } => {
            let l1: f64 = w.iter().map(|v| v.abs()).sum();
            0.5 * lambda * l2 + kappa * l1
        }
    }
}

/// Per-coordinate conjugate of the penalty at `s = (1/n) alpha . x_col`.
#[inline]
pub fn penalty_conjugate_component(penalty: Penalty, s: f64) -> f64 {
    match penalty {
        Penalty::L2 { lambda } => s * s / (2.0 * lambda),
        Penalty::ElasticNet { lambda, kappa } => {
            let t = (s.abs() - kappa).max(0.0);
            t * t / (2.0 * lambda)
        }
    }
}

#[inline]
pub(crate) fn soft_threshold(s: f64, kappa: f64) -> f64 {
    (s - kappa).max(0.0) - (-s - kappa).max(0.0)
}

/// Gradient of the penalty conjugate; maps the dual image back to the primal.
pub fn penalty_conjugate_gradient(penalty: Penalty, s_vec: &[f64]) -> Vec<f64> {
    match penalty {
        Penalty::L2 { lambda } => s_vec.iter().map(|s| s / lambda).collect(),
        Penalty::ElasticNet { lambda, kappa } => {
            s_vec.iter().map(|&s| soft_threshold(s, kappa) / lambda).collect()
        }
    }
}

/// Primal objective `(1/n) sum_i loss(y_i, w.x_i) + penalty(w)`.
pub fn primal_objective(
    spec: &ModelSpec,
    x: &DenseMatrix,
    y: &[f64],
    w: &[f64],
) -> Result<f64, IpubError> {
    if x.n != y.len() {
        return Err(IpubError::DimensionMismatch { expected: x.n, got: y.len() });
    }
    if x.d != w.len() {
        return Err(IpubError::DimensionMismatch { expected: x.d, got: w.len() });
    }
    let n = x.n as f64;
    let mut acc = 0.0;
    for i in 0..x.n {
        acc += loss_value(spec.loss, y[i], dot(x.row(i), w))?;
    }
    Ok(acc / n + penalty_value(spec.penalty, w))
}

/// Gradient of the primal objective. For the hinge loss and at elastic-net
/// kinks this picks the subgradient with `sign(0) = 0` and the lower end of
/// the hinge interval.
pub fn primal_gradient(
    spec: &ModelSpec,
    x: &DenseMatrix,
    y: &[f64],
    w: &[f64],
) -> Result<Vec<f64>, IpubError> {
    if x.d != w.len() {
        return Err(IpubError::DimensionMismatch { expected: x.d, got: w.len() });
    }
    let n = x.n as f64;
    let mut grad = vec![0.0; x.d];
    for i in 0..x.n {
        let v = dot(x.row(i), w);
        let g = loss_subderivative(spec.loss, y[i], v)?.lo;
        if g != 0.0 {
            for (gj, xj) in grad.iter_mut().zip(x.row(i)) {
                *gj += g * xj;
            }
        }
    }
    let lambda = spec.penalty.lambda();
    let kappa = spec.penalty.kappa();
    for (gj, &wj) in grad.iter_mut().zip(w) {
        let l1_sub = if wj != 0.0 { kappa * wj.signum() } else { 0.0 };
        *gj = *gj / n + lambda * wj + l1_sub;
    }
    Ok(grad)
}

/// Dual objective `-(1/n) sum_i l*(y_i, -a_i) - sum_j rho*_j((1/n) a.x_col_j)`.
pub fn dual_objective(
    spec: &ModelSpec,
    x: &DenseMatrix,
    y: &[f64],
    alpha: &[f64],
) -> Result<f64, IpubError> {
    if x.n != alpha.len() {
        return Err(IpubError::DimensionMismatch { expected: x.n, got: alpha.len() });
    }
    let n = x.n as f64;
    let mut loss_part = 0.0;
    for i in 0..x.n {
        loss_part += loss_conjugate(spec.loss, y[i], alpha[i])?;
    }
    let xta = x.t_mul_vec(alpha);
    let mut pen_part = 0.0;
    for &s in &xta {
        pen_part += penalty_conjugate_component(spec.penalty, s / n);
    }
    Ok(-loss_part / n - pen_part)
}
