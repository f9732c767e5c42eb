//! Limited-memory BFGS with Armijo backtracking.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Relative change in `J` treated as roundoff by the line search.
pub const FLAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when `‖∇J‖ ≤ grad_tol`.
    pub grad_tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iterations: 500,
            grad_tol: 1e-8,
            armijo: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step along the search direction decreased the objective.
    LineSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `J` given `eval(x, grad) -> J(x)` (writing `∇J(x)` into `grad`).
pub fn minimize<E>(
    mut eval: impl FnMut(&[f64], &mut [f64]) -> Result<f64, E>,
    x0: Vec<f64>,
    opts: LbfgsOptions,
) -> Result<LbfgsResult, E> {
    let d = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; d];
    let mut fx = eval(&x, &mut g)?;
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut dir = vec![0.0; d];
    let mut alpha = vec![0.0; opts.memory];
    let mut x_new = vec![0.0; d];
    let mut g_new = vec![0.0; d];

    for iteration in 0..opts.max_iterations {
        let gn = crate::math::sqrt(dot(&g, &g));
        if gn <= opts.grad_tol {
            return Ok(LbfgsResult {
                x,
                value: fx,
                grad_norm: gn,
                iterations: iteration,
                evaluations,
                termination: Termination::Converged,
            });
        }
        // two-loop recursion
        dir.copy_from_slice(&g);
        for (idx, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha[idx] = a;
            dir.iter_mut().zip(y).for_each(|(q, yi)| *q -= a * yi);
        }
        let gamma = history
            .back()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .unwrap_or(1.0);
        dir.iter_mut().for_each(|q| *q *= gamma);
        for (idx, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &dir);
            let a = alpha[idx];
            dir.iter_mut().zip(s).for_each(|(r, si)| *r += (a - b) * si);
        }
        dir.iter_mut().for_each(|r| *r = -*r);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            history.clear();
            dir.iter_mut().zip(&g).for_each(|(r, gi)| *r = -gi);
            slope = -gn * gn;
        }
        let mut step: f64 = if history.is_empty() { (1.0 / gn).min(1.0) } else { 1.0 };
        let mut accepted = false;
        for _ in 0..opts.max_backtracks {
            for i in 0..d {
                x_new[i] = x[i] + step * dir[i];
            }
            let f_new = eval(&x_new, &mut g_new)?;
            evaluations += 1;
            let armijo = f_new <= fx + opts.armijo * step * slope;
            // near the optimum the decrease drops below roundoff in J; the
            // gradient still resolves it (approximate Armijo, Hager–Zhang)
            let approx = f_new <= fx + FLAT_TOL * fx.abs() && dot(&g_new, &dir) <= (2.0 * opts.armijo - 1.0) * slope;
            if f_new.is_finite() && (armijo || approx) {
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-300 {
                    if history.len() == opts.memory {
                        history.pop_front();
                    }
                    history.push_back((s, y, 1.0 / sy));
                }
                core::mem::swap(&mut x, &mut x_new);
                core::mem::swap(&mut g, &mut g_new);
                fx = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Ok(LbfgsResult {
                x,
                value: fx,
                grad_norm: gn,
                iterations: iteration,
                evaluations,
                termination: Termination::LineSearch,
            });
        }
    }
    let gn = crate::math::sqrt(dot(&g, &g));
    let termination = if gn <= opts.grad_tol {
        Termination::Converged
    } else {
        Termination::MaxIterations
    };
    Ok(LbfgsResult {
        x,
        value: fx,
        grad_norm: gn,
        iterations: opts.max_iterations,
        evaluations,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ill_conditioned_quadratic() {
        let scales = [1.0, 10.0, 100.0, 1000.0, 1e4];
        let res = minimize(
            |x, g| {
                let mut f = 0.0;
                for i in 0..x.len() {
                    let d = x[i] - 1.0;
                    f += 0.5 * scales[i] * d * d;
                    g[i] = scales[i] * d;
                }
                Ok::<f64, ()>(f)
            },
            vec![0.0; 5],
            LbfgsOptions::default(),
        )
        .unwrap();
        assert_eq!(res.termination, Termination::Converged);
        assert!(res.x.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn rosenbrock() {
        let res = minimize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                Ok::<f64, ()>((1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a))
            },
            vec![-1.2, 1.0],
            LbfgsOptions::default(),
        )
        .unwrap();
        assert_eq!(res.termination, Termination::Converged);
        assert!((res.x[0] - 1.0).abs() < 1e-6 && (res.x[1] - 1.0).abs() < 1e-6);
    }
}
