//! Entropic mirror descent over the probability simplex, optionally with
//! per-coordinate caps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tolerances as tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SimplexStatus {
    Converged,
    IterationCap,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimplexReport {
    pub status: SimplexStatus,
    pub point: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Best iterate has a coordinate below the boundary threshold, so the
    /// infimum may only be approached at the simplex boundary.
    pub boundary_suspect: bool,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub stall_window: usize,
    pub stall_rel: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: tol::MIRROR_ITERATION_CAP,
            stall_window: tol::MIRROR_STALL_WINDOW,
            stall_rel: tol::MIRROR_STALL_REL,
        }
    }
}

/// KL projection onto {sigma >= 0, sum sigma = 1, sigma <= cap}.
pub fn project_capped(tau: &[f64], caps: Option<&[f64]>) -> Vec<f64> {
    let total: f64 = tau.iter().sum();
    let mut sigma: Vec<f64> = tau.iter().map(|t| t / total).collect();
    let Some(caps) = caps else { return sigma };
    let n = tau.len();
    let mut capped = vec![false; n];
    loop {
        let capped_mass: f64 = (0..n).filter(|&k| capped[k]).map(|k| caps[k]).sum();
        let free_mass: f64 = (0..n).filter(|&k| !capped[k]).map(|k| tau[k]).sum();
        if free_mass <= 0.0 {
            for k in 0..n {
                sigma[k] = if capped[k] { caps[k] } else { 0.0 };
            }
            return sigma;
        }
        let c = (1.0 - capped_mass).max(0.0) / free_mass;
        let mut changed = false;
        for k in 0..n {
            if !capped[k] && c * tau[k] > caps[k] {
                capped[k] = true;
                changed = true;
            }
        }
        if !changed {
            for k in 0..n {
                sigma[k] = if capped[k] { caps[k] } else { c * tau[k] };
            }
            return sigma;
        }
    }
}

fn md_step(sigma: &[f64], grad: &[f64], eta: f64, caps: Option<&[f64]>) -> Vec<f64> {
    let shift = grad.iter().cloned().fold(f64::INFINITY, f64::min);
    let tau: Vec<f64> = sigma
        .iter()
        .zip(grad)
        .map(|(s, g)| s * (-(eta * (g - shift)).min(700.0)).exp().max(f64::MIN_POSITIVE))
        .collect();
    project_capped(&tau, caps)
}

/// Minimize a convex function over the (capped) simplex.
///
/// `f` returns the value and a (sub)gradient. Steps adapt by backtracking
/// while the objective decreases; once backtracking stalls the method falls
/// back to diminishing steps eta0/sqrt(t), keeping the best iterate.
pub fn minimize_over_simplex<F>(
    f: F,
    start: &[f64],
    caps: Option<&[f64]>,
    opts: &SimplexOptions,
) -> Result<SimplexReport>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = start.len();
    if n == 0 {
        return Err(Error::Dimension("empty simplex".into()));
    }
    if let Some(c) = caps {
        if c.len() != n {
            return Err(Error::Dimension("cap vector length differs".into()));
        }
        if c.iter().sum::<f64>() < 1.0 - 1e-12 {
            return Err(Error::Infeasible("capped simplex is empty".into()));
        }
    }
    let mut x = project_capped(&start.iter().map(|v| v.max(1e-300)).collect::<Vec<_>>(), caps);
    let (mut fx, mut gx) = f(&x);
    if fx.is_nan() || gx.iter().any(|g| g.is_nan()) {
        return Err(Error::Numeric("objective returned NaN at the starting point".into()));
    }
    let mut best = (fx, x.clone());
    let gmax = gx.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let mut eta = 1.0 / (1.0 + gmax);
    let eta0 = eta;
    let mut diminishing = false;
    let mut t_dim = 1usize;
    let mut history: Vec<f64> = Vec::with_capacity(opts.max_iterations);
    let mut status = SimplexStatus::IterationCap;
    let mut iterations = 0usize;

    while iterations < opts.max_iterations {
        iterations += 1;
        if !diminishing {
            let mut accepted = false;
            for _ in 0..60 {
                let cand = md_step(&x, &gx, eta, caps);
                let (fc, gc) = f(&cand);
                if fc.is_nan() || gc.iter().any(|g| g.is_nan()) {
                    return Err(Error::Numeric("objective returned NaN".into()));
                }
                if fc <= fx {
                    let decreased = fc < fx;
                    x = cand;
                    fx = fc;
                    gx = gc;
                    eta *= 1.5;
                    accepted = decreased;
                    break;
                }
                eta *= 0.5;
            }
            if !accepted {
                diminishing = true;
            }
        } else {
            let step = eta0 / (t_dim as f64).sqrt();
            t_dim += 1;
            let cand = md_step(&x, &gx, step, caps);
            let (fc, gc) = f(&cand);
            if fc.is_nan() || gc.iter().any(|g| g.is_nan()) {
                return Err(Error::Numeric("objective returned NaN".into()));
            }
            x = cand;
            fx = fc;
            gx = gc;
        }
        if fx < best.0 {
            best = (fx, x.clone());
        }
        history.push(best.0);
        let w = opts.stall_window;
        if history.len() > w {
            let old = history[history.len() - 1 - w];
            let gain = old - best.0;
            if gain <= opts.stall_rel * (1.0 + best.0.abs()) {
                status = SimplexStatus::Converged;
                break;
            }
        }
    }
    let boundary_suspect = best.1.iter().any(|&v| v < tol::BOUNDARY_MASS);
    Ok(SimplexReport { status, point: best.1, objective: best.0, iterations, boundary_suspect, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum() {
        let target = [0.2, 0.3, 0.5];
        let f = |s: &[f64]| {
            let v = s.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum();
            let g = s.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            (v, g)
        };
        let r = minimize_over_simplex(f, &[1.0 / 3.0; 3], None, &SimplexOptions::default()).unwrap();
        assert!(r.objective < 1e-12, "{}", r.objective);
        assert_eq!(r.status, SimplexStatus::Converged);
    }

    #[test]
    fn linear_objective_hits_boundary() {
        let f = |s: &[f64]| (s[0] - s[1], vec![1.0, -1.0]);
        let r = minimize_over_simplex(f, &[0.5, 0.5], None, &SimplexOptions::default()).unwrap();
        assert!(r.objective < -1.0 + 1e-6);
        assert!(r.boundary_suspect);
    }

    #[test]
    fn capped_projection() {
        let s = project_capped(&[10.0, 1.0, 1.0], Some(&[0.5, 1.0, 1.0]));
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!((s[1] - 0.25).abs() < 1e-15);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nan_is_an_error() {
        let f = |_: &[f64]| (f64::NAN, vec![0.0, 0.0]);
        assert!(minimize_over_simplex(f, &[0.5, 0.5], None, &SimplexOptions::default()).is_err());
    }
}
