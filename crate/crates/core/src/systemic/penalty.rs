//! Systemic penalty alpha^sys(Q, w) and the dual values built on it.
//!
//! With scenario weights sigma_k = P(k) dS/dP(k) and u_ik = w_i P(k) dQ_i/dP(k),
//! alpha^sys(Q, w) = inf_sigma alpha(sigma) + sum_k sigma_k g(u_k / sigma_k)
//! over the open simplex. The second term is the perspective of g, so the
//! objective is jointly convex and, for the built-in models, separable in k
//! apart from the simplex constraint.

use serde::Serialize;

use super::{check_weights, dot, SystemicModel};
use crate::aggregation::{AggregationModel, ConjugateShape};
use crate::error::{dimension, Error, Result};
use crate::extended::ExtendedReal;
use crate::model::{change_of_measure, expectation, Density, DualVariable, ScenarioSpace};
use crate::risk::BaseRiskMeasure;
use crate::tolerances as tol;

/// Relative slack for the equality constraints of indicator conjugates.
const INDICATOR_TOL: f64 = 1e-9;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMethod {
    /// The constraint set of S is a single measure or empty.
    Determined,
    /// Water-filling or a one-dimensional multiplier search.
    WaterFilling,
    /// Exact greedy fill of piecewise-linear convex costs.
    Greedy,
    MirrorDescent,
}

#[derive(Debug, Clone, Serialize)]
pub struct PenaltyReport {
    pub value: ExtendedReal,
    /// Minimizing (or best found) society weights sigma_k = P(k) s_k.
    pub weights: Option<Vec<f64>>,
    pub method: PenaltyMethod,
    /// Mass below the boundary threshold: the infimum may not be attained.
    pub boundary_suspect: bool,
    pub iterations: usize,
}

impl PenaltyReport {
    fn infeasible(method: PenaltyMethod) -> Self {
        Self { value: ExtendedReal::PosInf, weights: None, method, boundary_suspect: false, iterations: 0 }
    }

    /// Density of the minimizing society measure, when it is equivalent to P.
    pub fn society_density(&self, space: &ScenarioSpace) -> Option<Density> {
        let sigma = self.weights.as_ref()?;
        if sigma.iter().any(|&s| s <= 0.0) {
            return None;
        }
        let total: f64 = sigma.iter().sum();
        let dm: Vec<f64> = sigma.iter().zip(space.probs()).map(|(s, p)| s / total / p).collect();
        Density::new(space, dm).ok()
    }
}

/// u[k][i] = w_i P(k) dQ_i/dP(k).
fn weighted_masses(space: &ScenarioSpace, q: &[Density], w: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_weights(w, q.len())?;
    let p = space.probs();
    if q.iter().any(|d| d.len() != p.len()) {
        return Err(dimension("densities live on a different scenario space"));
    }
    Ok((0..p.len()).map(|k| q.iter().zip(w).map(|(qi, wi)| wi * p[k] * qi.values()[k]).collect()).collect())
}

/// sigma g(u / sigma), closed at sigma = 0 by the recession function.
fn perspective(agg: &AggregationModel, u: &[f64], sigma: f64) -> Result<ExtendedReal> {
    if sigma > 0.0 {
        let z: Vec<f64> = u.iter().map(|v| v / sigma).collect();
        return Ok(match agg.conjugate(&z)? {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(sigma * v),
            other => other,
        });
    }
    if u.iter().all(|&v| v == 0.0) {
        return Ok(ExtendedReal::Finite(0.0));
    }
    Ok(match agg.piecewise_linear_terms() {
        Some(terms) => ExtendedReal::Finite(terms.iter().map(|(a, _)| dot(a, u).max(0.0)).sum()),
        None => ExtendedReal::PosInf,
    })
}

/// alpha(sigma) + sum_k sigma_k g(u_k / sigma_k).
pub fn penalty_objective(
    agg: &AggregationModel,
    base: &BaseRiskMeasure,
    p: &[f64],
    u: &[Vec<f64>],
    sigma: &[f64],
) -> Result<ExtendedReal> {
    let mut total = match base.penalty_weights(p, sigma) {
        ExtendedReal::Finite(v) => v,
        other => return Ok(other),
    };
    for (uk, &sk) in u.iter().zip(sigma) {
        match perspective(agg, uk, sk)? {
            ExtendedReal::Finite(v) => total += v,
            other => return Ok(other),
        }
    }
    Ok(ExtendedReal::Finite(total))
}

/// alpha^sys(Q, w); the measure S of a dual variable plays no role.
pub fn alpha_sys(
    agg: &AggregationModel,
    base: &BaseRiskMeasure,
    space: &ScenarioSpace,
    q: &[Density],
    w: &[f64],
) -> Result<PenaltyReport> {
    if q.len() != agg.dim() {
        return Err(dimension(format!("{} measures for dimension {}", q.len(), agg.dim())));
    }
    let u = weighted_masses(space, q, w)?;
    let p = space.probs();
    let candidate = match agg.conjugate_shape() {
        ConjugateShape::UnitVector => unit_vector(&u),
        ConjugateShape::PathUnit => match agg {
            AggregationModel::MaxFlow(mf) => path_unit(&u, &mf.paths),
            _ => return Err(Error::Numeric("path conjugate without paths".into())),
        },
        ConjugateShape::UnitBox => {
            let lower: Vec<f64> = u.iter().map(|uk| uk.iter().cloned().fold(0.0, f64::max)).collect();
            lower_bounded(base, p, &lower)
        }
        ConjugateShape::Covering => match agg {
            AggregationModel::ResourceAllocation(r) => {
                let upper: Vec<f64> = u
                    .iter()
                    .map(|uk| {
                        (0..r.profit.len())
                            .filter(|&j| r.profit[j] > 0.0)
                            .map(|j| (0..r.dim()).map(|i| r.consumption[i][j] * uk[i]).sum::<f64>() / r.profit[j])
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                upper_bounded(base, p, &upper)
            }
            _ => return Err(Error::Numeric("covering conjugate without a resource model".into())),
        },
        ConjugateShape::Entropy => entropy(base, p, &u),
        ConjugateShape::PiecewiseLinear => {
            let terms = agg.piecewise_linear_terms().expect("piecewise-linear conjugate");
            piecewise_linear(base, p, &u, &terms)?
        }
    };
    let Some((sigma, method, iterations)) = candidate else {
        return Ok(PenaltyReport::infeasible(PenaltyMethod::Determined));
    };
    // The reported value is the objective at an explicit sigma, so it never
    // undercuts the infimum beyond rounding.
    let value = penalty_objective(agg, base, p, &u, &sigma)?;
    if !value.is_finite() {
        return Ok(PenaltyReport::infeasible(method));
    }
    let boundary_suspect = sigma.iter().any(|&s| s < tol::BOUNDARY_MASS);
    Ok(PenaltyReport { value, weights: Some(sigma), method, boundary_suspect, iterations })
}

pub fn alpha_sys_dual(
    agg: &AggregationModel,
    base: &BaseRiskMeasure,
    space: &ScenarioSpace,
    dual: &DualVariable,
) -> Result<ExtendedReal> {
    Ok(alpha_sys(agg, base, space, &dual.q, &dual.w)?.value)
}

type Candidate = Option<(Vec<f64>, PenaltyMethod, usize)>;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= INDICATOR_TOL * (1.0 + a.abs().max(b.abs()))
}

/// g = indicator{z = 1}: sigma_k must equal every u_ik.
fn unit_vector(u: &[Vec<f64>]) -> Candidate {
    let sigma: Vec<f64> = u.iter().map(|uk| uk[0]).collect();
    let ok = u.iter().all(|uk| uk.iter().all(|&v| close(v, uk[0]))) && close(sigma.iter().sum(), 1.0);
    (ok && sigma.iter().all(|&s| s > 0.0)).then_some((sigma, PenaltyMethod::Determined, 0))
}

/// g = indicator{every path sums to 1}: sigma_k is the common path sum.
fn path_unit(u: &[Vec<f64>], paths: &[Vec<usize>]) -> Candidate {
    let mut sigma = Vec::with_capacity(u.len());
    for uk in u {
        let sums: Vec<f64> = paths.iter().map(|p| p.iter().map(|&a| uk[a]).sum()).collect();
        if !sums.iter().all(|&s| close(s, sums[0])) || sums[0] <= 0.0 {
            return None;
        }
        sigma.push(sums[0]);
    }
    close(sigma.iter().sum(), 1.0).then_some((sigma, PenaltyMethod::Determined, 0))
}

/// Find c with sum_k f(c, k) = 1 for f nondecreasing in c, c in [lo, hi].
fn bisect_mass(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Constraints sigma_k >= lower_k (total loss).
fn lower_bounded(base: &BaseRiskMeasure, p: &[f64], lower: &[f64]) -> Candidate {
    let need: f64 = lower.iter().sum();
    if need > 1.0 + 1e-12 {
        return None;
    }
    match *base {
        BaseRiskMeasure::Expectation { .. } => {
            lower.iter().zip(p).all(|(l, pk)| *l <= pk * (1.0 + 1e-12)).then(|| (p.to_vec(), PenaltyMethod::Determined, 0))
        }
        BaseRiskMeasure::Avar { beta } => {
            let caps: Vec<f64> = p.iter().map(|pk| pk / beta).collect();
            if lower.iter().zip(&caps).any(|(l, c)| l > c) {
                return None;
            }
            let room: f64 = lower.iter().zip(&caps).map(|(l, c)| c - l).sum();
            let theta = if room > 0.0 { ((1.0 - need) / room).clamp(0.0, 1.0) } else { 0.0 };
            let sigma = lower.iter().zip(&caps).map(|(l, c)| l + theta * (c - l)).collect();
            Some((sigma, PenaltyMethod::WaterFilling, 0))
        }
        BaseRiskMeasure::Entropic => {
            // KKT: sigma_k = max(lower_k, c p_k)
            let c = bisect_mass(0.0, 1.0, |c| lower.iter().zip(p).map(|(l, pk)| l.max(c * pk)).sum());
            let sigma = lower.iter().zip(p).map(|(l, pk)| l.max(c * pk)).collect();
            Some((sigma, PenaltyMethod::WaterFilling, BISECTION_STEPS))
        }
    }
}

/// Constraints 0 < sigma_k <= upper_k (resource allocation).
fn upper_bounded(base: &BaseRiskMeasure, p: &[f64], upper: &[f64]) -> Candidate {
    if upper.iter().any(|&m| m <= 0.0) || upper.iter().sum::<f64>() < 1.0 - 1e-12 {
        return None;
    }
    match *base {
        BaseRiskMeasure::Expectation { .. } => {
            upper.iter().zip(p).all(|(m, pk)| *pk <= m * (1.0 + 1e-12)).then(|| (p.to_vec(), PenaltyMethod::Determined, 0))
        }
        BaseRiskMeasure::Avar { beta } => {
            let caps: Vec<f64> = upper.iter().zip(p).map(|(m, pk)| m.min(pk / beta)).collect();
            let total: f64 = caps.iter().sum();
            if total < 1.0 - 1e-12 {
                return None;
            }
            Some((caps.iter().map(|c| c / total).collect(), PenaltyMethod::WaterFilling, 0))
        }
        BaseRiskMeasure::Entropic => {
            // KKT: sigma_k = min(upper_k, c p_k)
            let hi = upper.iter().zip(p).map(|(m, pk)| m / pk).fold(1.0, f64::max);
            let c = bisect_mass(0.0, hi, |c| upper.iter().zip(p).map(|(m, pk)| m.min(c * pk)).sum());
            let sigma = upper.iter().zip(p).map(|(m, pk)| m.min(c * pk)).collect();
            Some((sigma, PenaltyMethod::WaterFilling, BISECTION_STEPS))
        }
    }
}

/// g(z) = sum z log z: the perspective is sum_i u_i log u_i - U log sigma.
fn entropy(base: &BaseRiskMeasure, p: &[f64], u: &[Vec<f64>]) -> Candidate {
    let mass: Vec<f64> = u.iter().map(|uk| uk.iter().sum()).collect();
    match *base {
        BaseRiskMeasure::Expectation { .. } => Some((p.to_vec(), PenaltyMethod::Determined, 0)),
        BaseRiskMeasure::Avar { beta } => {
            // KKT: sigma_k = min(cap_k, U_k / nu)
            let caps: Vec<f64> = p.iter().map(|pk| pk / beta).collect();
            let charged: f64 = mass.iter().zip(&caps).filter(|(m, _)| **m > 0.0).map(|(_, c)| c).sum();
            if charged <= 1.0 {
                // every charged scenario sits at its cap; the rest takes the remainder
                let free: f64 = mass.iter().zip(&caps).filter(|(m, _)| **m == 0.0).map(|(_, c)| c).sum();
                let fill = if free > 0.0 { (1.0 - charged) / free } else { 0.0 };
                let sigma = mass.iter().zip(&caps).map(|(m, c)| if *m > 0.0 { *c } else { c * fill }).collect();
                return Some((sigma, PenaltyMethod::WaterFilling, 0));
            }
            // sum_k min(cap_k, U_k t) = 1 in t = 1/nu
            let hi = mass.iter().zip(&caps).filter(|(m, _)| **m > 0.0).map(|(m, c)| c / m).fold(0.0, f64::max);
            let t = bisect_mass(0.0, hi, |t| mass.iter().zip(&caps).map(|(m, c)| c.min(m * t)).sum());
            let sigma = mass.iter().zip(&caps).map(|(m, c)| c.min(m * t)).collect();
            Some((sigma, PenaltyMethod::WaterFilling, BISECTION_STEPS))
        }
        BaseRiskMeasure::Entropic => {
            // KKT: log(sigma_k / p_k) + 1 - U_k / sigma_k = nu, solved per k
            // for fixed nu, with nu set by sum sigma = 1.
            let solve = |nu: f64| -> Vec<f64> { p.iter().zip(&mass).map(|(pk, m)| entropic_kkt(*pk, *m, nu)).collect() };
            let total = |nu: f64| solve(nu).iter().sum::<f64>();
            let (mut lo, mut hi) = (-1.0, 1.0);
            while total(lo) > 1.0 {
                lo *= 2.0;
            }
            while total(hi) < 1.0 {
                hi *= 2.0;
            }
            let nu = bisect_mass(lo, hi, total);
            let sigma = solve(nu);
            let s: f64 = sigma.iter().sum();
            Some((sigma.iter().map(|v| v / s).collect(), PenaltyMethod::WaterFilling, BISECTION_STEPS))
        }
    }
}

/// Root of t - log p + 1 - m e^{-t} = nu in t = log sigma; returns sigma.
fn entropic_kkt(p: f64, m: f64, nu: f64) -> f64 {
    let t0 = nu - 1.0 + p.ln();
    if m == 0.0 {
        return t0.exp();
    }
    let h = |t: f64| t - t0 - m * (-t).exp();
    let mut lo = t0;
    let mut hi = t0.max(m.ln()) + 1.0;
    while h(hi) < 0.0 {
        hi += 2.0 * (hi - lo);
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = h(t);
        if v == 0.0 {
            break;
        }
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - v / (1.0 + m * (-t).exp());
        t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            break;
        }
    }
    t.exp()
}

/// h_k(sigma) = sum_r (a_r'u_k + b_r sigma)^+.
fn pl_cost(terms: &[(Vec<f64>, f64)], uk: &[f64], sigma: f64) -> f64 {
    terms.iter().map(|(a, b)| (dot(a, uk) + b * sigma).max(0.0)).sum()
}

fn piecewise_linear(
    base: &BaseRiskMeasure,
    p: &[f64],
    u: &[Vec<f64>],
    terms: &[(Vec<f64>, f64)],
) -> Result<Candidate> {
    Ok(match *base {
        BaseRiskMeasure::Expectation { .. } => Some((p.to_vec(), PenaltyMethod::Determined, 0)),
        BaseRiskMeasure::Avar { beta } => Some(greedy_fill(terms, u, &p.iter().map(|pk| pk / beta).collect::<Vec<_>>())),
        BaseRiskMeasure::Entropic => {
            let (sigma, iterations) = entropic_pl(p, u, terms);
            Some((sigma, PenaltyMethod::WaterFilling, iterations))
        }
    })
}

/// Minimize sum_k sigma_k log(sigma_k / p_k) + h_k(sigma_k) over the
/// simplex, h_k convex piecewise linear. For a multiplier nu each sigma_k
/// solves log(sigma_k / p_k) + 1 + h_k'(sigma_k) = nu, either inside a
/// linear piece or at a kink; the total is nondecreasing in nu, so a
/// bisection on nu meets sum sigma = 1.
fn entropic_pl(p: &[f64], u: &[Vec<f64>], terms: &[(Vec<f64>, f64)]) -> (Vec<f64>, usize) {
    // per scenario: kinks and the slope to the right of each kink
    let pieces: Vec<Vec<(f64, f64)>> = u
        .iter()
        .map(|uk| {
            let mut knots: Vec<f64> = terms
                .iter()
                .filter(|(_, b)| *b != 0.0)
                .map(|(a, b)| -dot(a, uk) / b)
                .filter(|s| *s > 0.0 && s.is_finite())
                .collect();
            knots.push(0.0);
            knots.sort_by(f64::total_cmp);
            knots.dedup();
            knots
                .iter()
                .map(|&k| {
                    let slope: f64 = terms
                        .iter()
                        .filter(|(a, b)| {
                            let at = dot(a, uk) + b * k;
                            at > 0.0 || (at == 0.0 && *b > 0.0)
                        })
                        .map(|(_, b)| b)
                        .sum();
                    (k, slope)
                })
                .collect()
        })
        .collect();
    let sigma_at = |nu: f64| -> Vec<f64> {
        pieces
            .iter()
            .zip(p)
            .map(|(kinks, &pk)| {
                for (j, &(lo, slope)) in kinks.iter().enumerate() {
                    let cand = pk * (nu - 1.0 - slope).exp();
                    if cand < lo {
                        return lo;
                    }
                    match kinks.get(j + 1) {
                        Some(&(hi, _)) if cand > hi => continue,
                        _ => return cand,
                    }
                }
                unreachable!("the last piece is unbounded")
            })
            .collect()
    };
    let total = |nu: f64| sigma_at(nu).iter().sum::<f64>();
    let (mut lo, mut hi) = (-1.0, 1.0);
    while total(lo) > 1.0 {
        lo *= 2.0;
    }
    while total(hi) < 1.0 {
        hi *= 2.0;
    }
    let mut iterations = 0;
    while hi - lo > 1e-15 * (1.0 + hi.abs()) && iterations < 400 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let sigma = sigma_at(hi);
    let sum: f64 = sigma.iter().sum();
    (sigma.iter().map(|s| s / sum).collect(), iterations)
}

/// Minimize sum_k h_k(sigma_k) over sum sigma = 1, 0 <= sigma <= cap.
/// Each h_k is convex piecewise linear, so filling the cheapest marginal
/// segments first is exact.
fn greedy_fill(terms: &[(Vec<f64>, f64)], u: &[Vec<f64>], caps: &[f64]) -> (Vec<f64>, PenaltyMethod, usize) {
    let mut segments: Vec<(f64, usize, f64)> = Vec::new();
    for (k, uk) in u.iter().enumerate() {
        let offsets: Vec<f64> = terms.iter().map(|(a, _)| dot(a, uk)).collect();
        let mut knots: Vec<f64> = terms
            .iter()
            .zip(&offsets)
            .filter(|((_, b), _)| *b != 0.0)
            .map(|((_, b), c)| -c / b)
            .filter(|s| *s > 0.0 && *s < caps[k])
            .collect();
        knots.push(0.0);
        knots.push(caps[k]);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        for win in knots.windows(2) {
            let len = win[1] - win[0];
            if len <= 0.0 {
                continue;
            }
            let slope = (pl_cost(terms, uk, win[1]) - pl_cost(terms, uk, win[0])) / len;
            segments.push((slope, k, len));
        }
    }
    segments.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut sigma = vec![0.0; u.len()];
    let mut remaining = 1.0f64;
    for (_, k, len) in &segments {
        if remaining <= 0.0 {
            break;
        }
        let take = len.min(remaining);
        sigma[*k] += take;
        remaining -= take;
    }
    (sigma, PenaltyMethod::Greedy, segments.len())
}

/// alpha~^sys(Q, w) = inf_{lambda > 0} alpha^sys(Q, lambda w) / lambda,
/// over a geometric grid refined by golden-section search around the best
/// grid point. Grid search can only overestimate the infimum.
pub fn alpha_sys_tilde(
    agg: &AggregationModel,
    base: &BaseRiskMeasure,
    space: &ScenarioSpace,
    q: &[Density],
    w: &[f64],
) -> Result<ExtendedReal> {
    check_weights(w, q.len())?;
    let eval = |lambda: f64| -> Result<f64> {
        let lw: Vec<f64> = w.iter().map(|v| v * lambda).collect();
        Ok(alpha_sys(agg, base, space, q, &lw)?.value.to_f64() / lambda)
    };
    let mut grid: Vec<f64> = (0..64).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 63.0)).collect();
    grid.push(1.0);
    // lambdas at which indicator conjugates can be finite
    let u = weighted_masses(space, q, w)?;
    match (agg.conjugate_shape(), agg) {
        (ConjugateShape::UnitVector, _) => grid.push(1.0 / w[0]),
        (ConjugateShape::PathUnit, AggregationModel::MaxFlow(mf)) => {
            let total: f64 = u.iter().map(|uk| mf.paths[0].iter().map(|&a| uk[a]).sum::<f64>()).sum();
            if total > 0.0 {
                grid.push(1.0 / total);
            }
        }
        _ => {}
    }
    grid.sort_by(f64::total_cmp);
    let values: Vec<f64> = grid.iter().map(|&l| eval(l)).collect::<Result<_>>()?;
    let (best_i, best) = values.iter().cloned().enumerate().fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
    if !best.is_finite() {
        return Ok(ExtendedReal::PosInf);
    }
    // golden section on log lambda between the neighbours of the best point
    let lo = grid[best_i.saturating_sub(1)].ln();
    let hi = grid[(best_i + 1).min(grid.len() - 1)].ln();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut best = best;
    for _ in 0..60 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        let (fc, fd) = (eval(c.exp())?, eval(d.exp())?);
        best = best.min(fc).min(fd);
        if fc <= fd {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(ExtendedReal::Finite(best))
}

/// w'E^Q[-X] - alpha^sys(Q, w): a lower bound on rho^ins(X).
pub fn dual_value(model: &SystemicModel, q: &[Density], w: &[f64]) -> Result<ExtendedReal> {
    let a = alpha_sys(model.aggregation(), model.base(), model.space(), q, w)?.value;
    Ok(match a {
        ExtendedReal::Finite(v) => ExtendedReal::Finite(linear_part(model, q, w)? - v),
        _ => ExtendedReal::NegInf,
    })
}

/// w'E^Q[-X].
pub fn linear_part(model: &SystemicModel, q: &[Density], w: &[f64]) -> Result<f64> {
    check_weights(w, model.dim())?;
    Ok(-dot(w, &expectation(model.wealth(), q)?))
}

/// The S-explicit bound w'E^Q[-X] - alpha(S) - E^S[g(w dQ/dS)].
pub fn dual_value_at(model: &SystemicModel, dual: &DualVariable) -> Result<ExtendedReal> {
    let space = model.space();
    let lin = linear_part(model, &dual.q, &dual.w)?;
    let alpha = match model.base().penalty(space, &dual.s)? {
        ExtendedReal::Finite(v) => v,
        _ => return Ok(ExtendedReal::NegInf),
    };
    let ratios: Vec<Vec<f64>> = dual.q.iter().map(|qi| change_of_measure(qi, &dual.s)).collect::<Result<_>>()?;
    let p = space.probs();
    let mut divergence = 0.0;
    for k in 0..p.len() {
        let z: Vec<f64> = dual.w.iter().zip(&ratios).map(|(wi, r)| wi * r[k]).collect();
        match model.aggregation().conjugate(&z)? {
            ExtendedReal::Finite(g) => divergence += p[k] * dual.s.values()[k] * g,
            _ => return Ok(ExtendedReal::NegInf),
        }
    }
    Ok(ExtendedReal::Finite(lin - alpha - divergence))
}

/// Relative entropy H(Q || S) = E^Q[log dQ/dS] of measures given by
/// densities with respect to P; w scales Q to a finite measure.
pub fn relative_entropy(space: &ScenarioSpace, q: &Density, s: &Density, w: f64) -> Result<ExtendedReal> {
    let ratio = change_of_measure(q, s)?;
    let p = space.probs();
    let mut h = 0.0;
    for k in 0..p.len() {
        let z = w * ratio[k];
        if z > 0.0 {
            h += p[k] * s.values()[k] * z * z.ln();
        }
    }
    Ok(ExtendedReal::Finite(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{minimize_over_simplex, SimplexOptions};

    fn space(n: usize) -> ScenarioSpace {
        ScenarioSpace::uniform(n).unwrap()
    }

    #[test]
    fn total_pl_requires_unit_weights() {
        let sp = space(2);
        let agg = AggregationModel::total_pl(2).unwrap();
        let q = vec![Density::reference(&sp), Density::reference(&sp)];
        let a = alpha_sys(&agg, &BaseRiskMeasure::Entropic, &sp, &q, &[1.0, 1.0]).unwrap();
        assert_eq!(a.value, ExtendedReal::Finite(0.0));
        let b = alpha_sys(&agg, &BaseRiskMeasure::Entropic, &sp, &q, &[1.0, 2.0]).unwrap();
        assert_eq!(b.value, ExtendedReal::PosInf);
    }

    #[test]
    fn entropic_kkt_matches_mirror_descent() {
        let sp = ScenarioSpace::new(vec![0.3, 0.7]).unwrap();
        let agg = AggregationModel::entropic(2).unwrap();
        let q = vec![Density::new(&sp, vec![2.0, 4.0 / 7.0]).unwrap(), Density::reference(&sp)];
        let w = [0.7, 1.3];
        let exact = alpha_sys(&agg, &BaseRiskMeasure::Entropic, &sp, &q, &w).unwrap();
        let u = weighted_masses(&sp, &q, &w).unwrap();
        let p = sp.probs().to_vec();
        let f = |s: &[f64]| {
            let v = penalty_objective(&agg, &BaseRiskMeasure::Entropic, &p, &u, s).unwrap().to_f64();
            let mass: Vec<f64> = u.iter().map(|uk| uk.iter().sum()).collect();
            let g = (0..2).map(|k| (s[k] / p[k]).ln() + 1.0 - mass[k] / s[k]).collect();
            (v, g)
        };
        let md = minimize_over_simplex(f, &p, None, &SimplexOptions::default()).unwrap();
        assert!((md.objective - exact.value.to_f64()).abs() < 1e-8, "{} vs {:?}", md.objective, exact.value);
    }

    #[test]
    fn greedy_fill_respects_caps() {
        let terms = vec![(vec![-1.0], 1.0)];
        let u = vec![vec![0.2], vec![0.4]];
        let (s, _, _) = greedy_fill(&terms, &u, &[0.8, 0.8]);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(s.iter().all(|&v| v <= 0.8));
    }

    #[test]
    fn relative_entropy_scaling_identity() {
        let sp = ScenarioSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let q = Density::new(&sp, vec![1.5, 1.0, 0.8]).unwrap();
        let s = Density::new(&sp, vec![0.5, 1.5, 0.9]).unwrap();
        let w = 2.5;
        let lhs = relative_entropy(&sp, &q, &s, w).unwrap().to_f64();
        let rhs = w * relative_entropy(&sp, &q, &s, 1.0).unwrap().to_f64() + w * w.ln();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    /// The kink-aware multiplier search against mirror descent on the same
    /// separable objective.
    #[test]
    fn entropic_piecewise_linear_matches_mirror_descent() {
        let net = crate::model::LiabilityNetwork::new(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 0.5, 0.0],
        ])
        .unwrap();
        let agg = AggregationModel::eisenberg_noe(net);
        let terms = agg.piecewise_linear_terms().unwrap();
        let p = vec![0.2, 0.5, 0.3];
        let u = vec![vec![0.3, 0.1], vec![0.2, 0.6], vec![0.05, 0.4]];
        let (sigma, _) = entropic_pl(&p, &u, &terms);
        let cost = |s: &[f64]| -> f64 {
            s.iter().zip(&p).map(|(a, b)| a * (a / b).ln()).sum::<f64>()
                + s.iter().zip(&u).map(|(a, uk)| pl_cost(&terms, uk, *a)).sum::<f64>()
        };
        let f = |s: &[f64]| {
            let mut g = vec![0.0; s.len()];
            for k in 0..s.len() {
                let h = 1e-7;
                let mut up = s.to_vec();
                up[k] += h;
                g[k] = (cost(&up) - cost(s)) / h;
            }
            (cost(s), g)
        };
        let md = minimize_over_simplex(f, &p, None, &SimplexOptions::default()).unwrap();
        assert!(cost(&sigma) <= md.objective + 1e-9, "{} vs {}", cost(&sigma), md.objective);
        assert!((sigma.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
