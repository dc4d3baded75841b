//! Deterministic limited-memory BFGS minimizer with Armijo backtracking.
//!
//! The objective callback returns the loss and writes the gradient. All
//! reductions inside the callback are expected to use a fixed summation
//! order; the optimizer itself is free of any randomness, so identical
//! inputs produce bitwise-identical iterates.

#[derive(Debug, Clone, Copy)]
pub struct LbfgsParams {
    /// Number of (s, y) correction pairs kept.
    pub memory: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the gradient max-norm.
    pub grad_tolerance: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Step shrink factor per backtracking round.
    pub shrink: f64,
    pub max_line_steps: usize,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        LbfgsParams {
            memory: 10,
            max_iterations: 2000,
            grad_tolerance: 1e-8,
            c1: 1e-4,
            shrink: 0.5,
            max_line_steps: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub loss: f64,
    pub grad_max_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss after every accepted step, starting with the initial loss.
    pub loss_trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which must return the objective value and fill `grad`.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, params: &LbfgsParams) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut loss = f(&x, &mut grad);
    let mut trace = vec![loss];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..params.max_iterations {
        let gnorm = max_norm(&grad);
        if gnorm <= params.grad_tolerance {
            return LbfgsOutcome {
                x,
                loss,
                grad_max_norm: gnorm,
                iterations,
                converged: true,
                loss_trace: trace,
            };
        }
        // two-loop recursion
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let m = s_hist.len();
        let mut alphas = vec![0.0; m];
        for i in (0..m).rev() {
            let a = rho_hist[i] * dot(&s_hist[i], &dir);
            alphas[i] = a;
            for (d, y) in dir.iter_mut().zip(&y_hist[i]) {
                *d -= a * y;
            }
        }
        if m > 0 {
            let last = m - 1;
            let yy = dot(&y_hist[last], &y_hist[last]);
            if yy > 0.0 {
                let gamma = 1.0 / (rho_hist[last] * yy);
                for d in dir.iter_mut() {
                    *d *= gamma;
                }
            }
        }
        for i in 0..m {
            let b = rho_hist[i] * dot(&y_hist[i], &dir);
            for (d, s) in dir.iter_mut().zip(&s_hist[i]) {
                *d += (alphas[i] - b) * s;
            }
        }
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            // not a descent direction: drop the history and fall back to
            // steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
        }
        // Armijo backtracking. Near the optimum the true decrease drops
        // below the f64 evaluation noise of the loss; a step whose loss
        // change is at rounding level is still accepted when it shrinks the
        // gradient max-norm, which stays measurable much longer.
        let mut step = 1.0f64;
        let mut accepted = false;
        let mut new_x = vec![0.0; n];
        let mut new_grad = vec![0.0; n];
        let mut new_loss = loss;
        let noise = 1e-12 * (1.0 + loss.abs());
        for _ in 0..params.max_line_steps {
            for ((nx, xv), dv) in new_x.iter_mut().zip(&x).zip(&dir) {
                *nx = xv + step * dv;
            }
            new_loss = f(&new_x, &mut new_grad);
            if new_loss.is_finite() {
                if new_loss <= loss + params.c1 * step * slope {
                    accepted = true;
                    break;
                }
                if new_loss <= loss + noise && max_norm(&new_grad) <= 0.9 * gnorm {
                    accepted = true;
                    break;
                }
            }
            step *= params.shrink;
        }
        if !accepted {
            // line search exhausted; cannot make progress
            return LbfgsOutcome {
                x,
                loss,
                grad_max_norm: gnorm,
                iterations,
                converged: false,
                loss_trace: trace,
            };
        }
        let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        // curvature guard keeps the inverse-Hessian estimate positive definite
        if sy > 1e-12 * max_norm(&s).max(1e-300) * max_norm(&y).max(1e-300) {
            if s_hist.len() == params.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
            rho_hist.push(1.0 / sy);
        }
        x = new_x;
        grad = new_grad;
        loss = new_loss;
        trace.push(loss);
        iterations += 1;
    }
    let gnorm = max_norm(&grad);
    LbfgsOutcome {
        x,
        loss,
        grad_max_norm: gnorm,
        iterations,
        converged: gnorm <= params.grad_tolerance,
        loss_trace: trace,
    }
}
