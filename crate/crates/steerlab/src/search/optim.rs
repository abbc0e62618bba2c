//! Derivative-free and finite-difference local optimizers.
//!
//! Both optimizers are deterministic given their inputs; randomness only
//! enters through the caller's choice of start points. `multi_start` runs
//! the same local method from many starts in parallel and merges the
//! outcomes deterministically by (value, then lexicographic minimizer), so
//! parallel and serial runs report the same optimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Budget and stopping configuration shared by the local optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    pub max_evaluations: usize,
    /// Convergence tolerance: simplex spread for Nelder-Mead, gradient
    /// norm for descent.
    pub tolerance: f64,
    /// Initial simplex edge / initial descent step.
    pub initial_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { max_evaluations: 400, tolerance: 1e-8, initial_step: 0.25 }
    }
}

/// Outcome of one local optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out first; the result is then
    /// best-so-far.
    pub converged: bool,
}

/// Nelder-Mead downhill simplex minimization.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    options: &OptimOptions,
) -> OptimResult {
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };

    // Initial simplex: x0 plus a step along each coordinate.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evaluations);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += options.initial_step;
        let v = eval(&x, &mut evaluations);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evaluations < options.max_evaluations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if spread.abs() <= options.tolerance && diameter <= options.tolerance.sqrt() {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let mix = |t: f64| -> Vec<f64> {
            (0..n).map(|i| centroid[i] + t * (centroid[i] - worst.0[i])).collect()
        };

        let reflected = mix(alpha);
        let fr = eval(&reflected, &mut evaluations);
        if fr < simplex[0].1 {
            let expanded = mix(gamma);
            let fe = eval(&expanded, &mut evaluations);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 { mix(rho) } else { mix(-rho) };
            let fc = eval(&contracted, &mut evaluations);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        entry.0[i] = best[i] + sigma * (entry.0[i] - best[i]);
                    }
                    entry.1 = eval(&entry.0, &mut evaluations);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    OptimResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        evaluations,
        converged,
    }
}

/// Gradient descent with central finite differences and backtracking line
/// search.
pub fn finite_difference_gradient_descent<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    options: &OptimOptions,
) -> OptimResult {
    let n = x0.len();
    let h = 1e-5;
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };
    let mut x = x0.to_vec();
    let mut fx = eval(&x, &mut evaluations);
    let mut step = options.initial_step;
    let mut converged = false;
    while evaluations + 2 * n < options.max_evaluations {
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            grad[i] =
                (eval(&xp, &mut evaluations) - eval(&xm, &mut evaluations)) / (2.0 * h);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= options.tolerance {
            converged = true;
            break;
        }
        // Backtracking along the normalized negative gradient.
        let mut improved = false;
        while evaluations < options.max_evaluations {
            let candidate: Vec<f64> =
                (0..n).map(|i| x[i] - step * grad[i] / gnorm).collect();
            let fc = eval(&candidate, &mut evaluations);
            if fc < fx {
                x = candidate;
                fx = fc;
                step *= 1.3;
                improved = true;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
        if !improved {
            converged = step < 1e-12;
            break;
        }
    }
    OptimResult { x, value: fx, evaluations, converged }
}

/// Runs a local optimizer from every start in parallel and merges
/// deterministically: the smallest value wins, ties broken by
/// lexicographic comparison of the minimizers.
pub fn multi_start<F>(f: F, starts: &[Vec<f64>], options: &OptimOptions) -> Vec<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut results: Vec<OptimResult> = starts
        .par_iter()
        .map(|start| nelder_mead(|x| f(x), start, options))
        .collect();
    results.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    results
}
