//! Derivative-free local search, used to optimize dual parameterizations.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;

use crate::error::{Error, Result};

struct Cost<F> {
    f: F,
}

impl<F: Fn(&[f64]) -> f64> CostFunction for Cost<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, ArgminError> {
        let v = (self.f)(p);
        // Nelder-Mead only compares values; map infinities to large finite ones
        Ok(if v.is_nan() { f64::MAX } else { v.clamp(-f64::MAX, f64::MAX) })
    }
}

/// Minimize `f` from `x0` with an axis-aligned initial simplex of size `step`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, max_iters: u64) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-13)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let res = Executor::new(Cost { f }, solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let state = res.state();
    let best = state.get_best_param().cloned().ok_or_else(|| Error::Numeric("no best parameter".into()))?;
    Ok((best, state.get_best_cost()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_like_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let (x, v) = nelder_mead(f, &[0.0, 0.0], 0.5, 2000).unwrap();
        assert!(v < 1e-10);
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] + 2.0).abs() < 1e-4);
    }
}
