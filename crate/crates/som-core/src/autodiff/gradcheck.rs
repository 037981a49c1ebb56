//! Central finite-difference gradient verification.
//!
//! The closure is the complete forward: it receives a flat parameter
//! vector and returns the loss together with the analytic gradient
//! (usually obtained by building a graph and calling `backward`). The
//! checker perturbs one coordinate at a time, so the closure must be a
//! deterministic function of its argument; sample any noise once outside
//! and close over it.

/// Result of a gradient check: the largest relative error and where it
/// occurred.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
}

/// Default step for central differences.
pub const FD_EPS: f64 = 1e-5;

/// Tolerance used by the correctness gates in this crate.
pub const GRAD_CHECK_TOL: f64 = 1e-4;

/// Compare the analytic gradient of `f` at `params` against central
/// finite differences with step `eps`.
///
/// Relative error per coordinate is `|a - n| / max(1, |a| + |n|)`, which
/// behaves like absolute error near zero and relative error for large
/// gradients.
pub fn grad_check<F>(mut f: F, params: &[f64], eps: f64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let (_, analytic) = f(params);
    assert_eq!(
        analytic.len(),
        params.len(),
        "analytic gradient length mismatch"
    );

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_index: 0,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
    };
    let mut theta = params.to_vec();
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + eps;
        let (plus, _) = f(&theta);
        theta[i] = orig - eps;
        let (minus, _) = f(&theta);
        theta[i] = orig;

        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i];
        let rel = (a - numeric).abs() / 1.0f64.max(a.abs() + numeric.abs());
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_index = i;
            report.analytic_at_worst = a;
            report.numeric_at_worst = numeric;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_passes() {
        // f(x) = sum(x^2), grad 2x.
        let f = |x: &[f64]| {
            let loss: f64 = x.iter().map(|v| v * v).sum();
            let grad: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            (loss, grad)
        };
        let report = grad_check(f, &[0.3, -1.2, 2.0], FD_EPS);
        assert!(report.max_rel_err < 1e-9, "{report:?}");
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let f = |x: &[f64]| {
            let loss: f64 = x.iter().map(|v| v * v).sum();
            let grad: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
            (loss, grad)
        };
        let report = grad_check(f, &[1.0, 2.0], FD_EPS);
        assert!(report.max_rel_err > 1e-2, "{report:?}");
    }
}
