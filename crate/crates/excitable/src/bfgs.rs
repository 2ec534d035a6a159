//! BFGS quasi-Newton minimisation with a strong-Wolfe line search.
//!
//! The inverse-Hessian update is only applied when the curvature condition
//! holds, which the strong Wolfe conditions (c1 = 1e-4, c2 = 0.9 by default)
//! guarantee away from numerical floors.

use nalgebra::DVector;

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Euclidean gradient-norm stopping threshold.
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iters: 500, grad_tol: 1e-10, c1: 1e-4, c2: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfgsStatus {
    /// Gradient norm fell below `grad_tol`.
    GradientConverged,
    /// Iteration cap reached.
    MaxIterations,
    /// No step satisfying the Wolfe conditions could be found.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: BfgsStatus,
}

impl BfgsResult {
    pub fn converged(&self) -> bool {
        self.status == BfgsStatus::GradientConverged
    }
}

/// Minimises `f`, which returns value and gradient together.
pub fn minimize<F>(f: F, x0: &DVector<f64>, opts: &BfgsOptions) -> BfgsResult
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut x = x0.clone();
    let (mut fx, mut g) = f(&x);
    let mut h = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut first_update = true;

    for iter in 0..opts.max_iters {
        let gnorm = g.norm();
        if gnorm <= opts.grad_tol {
            return BfgsResult { x, value: fx, grad_norm: gnorm, iterations: iter, status: BfgsStatus::GradientConverged };
        }
        let mut d = -(&h * &g);
        let mut dg = d.dot(&g);
        if dg >= 0.0 {
            // Stale curvature; restart from steepest descent.
            h.fill_with_identity();
            first_update = true;
            d = -g.clone();
            dg = d.dot(&g);
            if dg >= 0.0 {
                return BfgsResult { x, value: fx, grad_norm: gnorm, iterations: iter, status: BfgsStatus::GradientConverged };
            }
        }

        match wolfe_search(&f, &x, fx, &g, &d, dg, opts) {
            Some((alpha, x_new, f_new, g_new)) => {
                let s = alpha * &d;
                let y = &g_new - &g;
                let sy = s.dot(&y);
                if sy > 1e-10 * s.norm() * y.norm() {
                    if first_update {
                        let yy = y.norm_squared();
                        if yy > 0.0 {
                            h.fill_with_identity();
                            h *= sy / yy;
                        }
                        first_update = false;
                    }
                    let rho = 1.0 / sy;
                    let hy = &h * &y;
                    let yhy = y.dot(&hy);
                    h.ger(-rho, &s, &hy, 1.0);
                    h.ger(-rho, &hy, &s, 1.0);
                    h.ger(rho * rho * yhy + rho, &s, &s, 1.0);
                }
                x = x_new;
                fx = f_new;
                g = g_new;
            }
            None => {
                return BfgsResult {
                    grad_norm: g.norm(),
                    x,
                    value: fx,
                    iterations: iter,
                    status: BfgsStatus::LineSearchFailed,
                };
            }
        }
    }
    BfgsResult { grad_norm: g.norm(), x, value: fx, iterations: opts.max_iters, status: BfgsStatus::MaxIterations }
}

/// Strong-Wolfe line search (bracket then zoom). Returns the accepted step
/// and the point/value/gradient at it.
#[allow(clippy::too_many_arguments)]
fn wolfe_search<F>(
    f: &F,
    x: &DVector<f64>,
    phi0: f64,
    g0: &DVector<f64>,
    d: &DVector<f64>,
    dphi0: f64,
    opts: &BfgsOptions,
) -> Option<(f64, DVector<f64>, f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let _ = g0;
    let eval = |a: f64| {
        let xa = x + a * d;
        let (fa, ga) = f(&xa);
        let da = ga.dot(d);
        (xa, fa, ga, da)
    };

    let a_max = 1e10;
    let mut a_prev = 0.0;
    let mut phi_prev = phi0;
    let mut dphi_prev = dphi0;
    let mut a = 1.0;

    for i in 0..60 {
        let (xa, phi_a, ga, dphi_a) = eval(a);
        if phi_a > phi0 + opts.c1 * a * dphi0 || (i > 0 && phi_a >= phi_prev) {
            return zoom(f, x, phi0, dphi0, d, (a_prev, phi_prev, dphi_prev), (a, phi_a, dphi_a), opts);
        }
        if dphi_a.abs() <= -opts.c2 * dphi0 {
            return Some((a, xa, phi_a, ga));
        }
        if dphi_a >= 0.0 {
            return zoom(f, x, phi0, dphi0, d, (a, phi_a, dphi_a), (a_prev, phi_prev, dphi_prev), opts);
        }
        a_prev = a;
        phi_prev = phi_a;
        dphi_prev = dphi_a;
        a = (2.0 * a).min(a_max);
        if a >= a_max {
            return Some((a, xa, phi_a, ga));
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    f: &F,
    x: &DVector<f64>,
    phi0: f64,
    dphi0: f64,
    d: &DVector<f64>,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    opts: &BfgsOptions,
) -> Option<(f64, DVector<f64>, f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    for _ in 0..60 {
        let (alo, philo, dlo) = lo;
        let (ahi, phihi, dhi) = hi;
        let width = (ahi - alo).abs();
        if width <= 1e-16 * alo.abs().max(1.0) {
            return None;
        }
        let a = cubic_trial(alo, philo, dlo, ahi, phihi, dhi)
            .unwrap_or_else(|| 0.5 * (alo + ahi));
        let xa = x + a * d;
        let (phi_a, ga) = f(&xa);
        let dphi_a = ga.dot(d);
        if phi_a > phi0 + opts.c1 * a * dphi0 || phi_a >= philo {
            hi = (a, phi_a, dphi_a);
        } else {
            if dphi_a.abs() <= -opts.c2 * dphi0 {
                return Some((a, xa, phi_a, ga));
            }
            if dphi_a * (ahi - alo) >= 0.0 {
                hi = lo;
            }
            lo = (a, phi_a, dphi_a);
        }
    }
    None
}

/// Minimiser of the cubic interpolant through two points with derivatives,
/// clamped away from the interval edges; `None` when ill-conditioned.
fn cubic_trial(a0: f64, f0: f64, d0: f64, a1: f64, f1: f64, d1: f64) -> Option<f64> {
    let h = a1 - a0;
    if h == 0.0 {
        return None;
    }
    let g1 = d0 + d1 - 3.0 * (f0 - f1) / (a0 - a1);
    let disc = g1 * g1 - d0 * d1;
    if disc < 0.0 {
        return None;
    }
    let g2 = h.signum() * disc.sqrt();
    let denom = d1 - d0 + 2.0 * g2;
    if denom == 0.0 {
        return None;
    }
    let a = a1 - h * (d1 + g2 - g1) / denom;
    let (lo, hi) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
    let margin = 0.1 * (hi - lo);
    if a.is_finite() && a > lo + margin && a < hi - margin {
        Some(a)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &DVector<f64>| {
            let v = 0.5 * x.dot(x);
            (v, x.clone())
        };
        let x0 = DVector::from_vec(vec![3.0, -4.0, 1.0]);
        let r = minimize(f, &x0, &BfgsOptions::default());
        assert!(r.converged());
        assert!(r.x.norm() < 1e-9);
    }

    #[test]
    fn anisotropic_quadratic() {
        let scales = [1.0, 10.0, 100.0, 1000.0];
        let f = |x: &DVector<f64>| {
            let mut v = 0.0;
            let mut g = DVector::zeros(4);
            for i in 0..4 {
                v += 0.5 * scales[i] * x[i] * x[i];
                g[i] = scales[i] * x[i];
            }
            (v, g)
        };
        let x0 = DVector::from_element(4, 1.0);
        let r = minimize(f, &x0, &BfgsOptions::default());
        assert!(r.converged(), "{:?}", r.status);
        assert!(r.value < 1e-18);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &DVector<f64>| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = DVector::from_vec(vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ]);
            (v, g)
        };
        let x0 = DVector::from_vec(vec![-1.2, 1.0]);
        let r = minimize(f, &x0, &BfgsOptions { grad_tol: 1e-9, ..Default::default() });
        assert!(r.converged(), "{:?} after {} iters", r.status, r.iterations);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn starts_at_minimum() {
        let f = |x: &DVector<f64>| (0.5 * x.dot(x), x.clone());
        let r = minimize(f, &DVector::zeros(5), &BfgsOptions::default());
        assert!(r.converged());
        assert_eq!(r.iterations, 0);
    }
}
