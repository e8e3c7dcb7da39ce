//! Numerical checks of the dual representations and derived results.

use rayon::prelude::*;
use serde::Serialize;

use super::{check_vector, check_weights, dot, dual_value, dual_value_at, r_sen_membership, rho_ins, SystemicModel};
use crate::aggregation::{AggEval, AggregationModel};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::model::{Density, DualVariable, WealthProcess};
use crate::optimizer::nelder_mead;
use crate::sampling::sample_duals;
use crate::tolerances as tol;

#[derive(Debug, Clone, Serialize)]
pub struct WeakDualityReport {
    pub rho_ins: ExtendedReal,
    pub samples: usize,
    /// Largest dual bound over both the infimal and the S-explicit forms.
    pub max_dual_value: ExtendedReal,
    /// min over samples of rho_ins - dual bound.
    pub min_slack: ExtendedReal,
    pub violations: usize,
    pub finite_bounds: usize,
    pub tolerance: f64,
}

impl WeakDualityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// dual_value <= rho^ins + tol for every dual, in both forms.
pub fn weak_duality_check(model: &SystemicModel, duals: &[DualVariable]) -> Result<WeakDualityReport> {
    let rho = rho_ins(model)?;
    let bounds: Vec<(ExtendedReal, ExtendedReal)> = duals
        .par_iter()
        .map(|d| Ok((dual_value(model, &d.q, &d.w)?, dual_value_at(model, d)?)))
        .collect::<Result<_>>()?;
    let mut max_dual = ExtendedReal::NegInf;
    let mut finite = 0;
    let mut violations = 0;
    for (a, b) in &bounds {
        for v in [a, b] {
            if v.is_finite() {
                finite += 1;
            }
            if *v > max_dual {
                max_dual = *v;
            }
            if let (ExtendedReal::Finite(r), ExtendedReal::Finite(x)) = (rho, *v) {
                if x > r + tol::WEAK_DUALITY {
                    violations += 1;
                }
            } else if rho == ExtendedReal::NegInf && *v != ExtendedReal::NegInf {
                violations += 1;
            }
        }
    }
    let min_slack = match (rho, max_dual) {
        (ExtendedReal::Finite(r), ExtendedReal::Finite(m)) => ExtendedReal::Finite(r - m),
        (ExtendedReal::PosInf, _) | (_, ExtendedReal::NegInf) => ExtendedReal::PosInf,
        _ => ExtendedReal::NegInf,
    };
    Ok(WeakDualityReport {
        rho_ins: rho,
        samples: duals.len(),
        max_dual_value: max_dual,
        min_slack,
        violations,
        finite_bounds: finite,
        tolerance: tol::WEAK_DUALITY,
    })
}

/// Mixing weight towards P that keeps constructed society measures equivalent.
const EQUIVALENCE_MIX: f64 = 1e-12;

/// The dual supporting rho(Lambda(X + z)): S maximizes E^S[-Y] - alpha(S)
/// at Y = Lambda(X + z) and Z_k is a supergradient of Lambda at X_k + z,
/// so w = E^S[Z] and dQ_i/dS = Z_i / w_i. Its S-explicit bound equals
/// w'z + rho(Lambda(X + z)) up to the equivalence mixing. None when some
/// scenario is infeasible or all weights vanish.
pub fn fenchel_dual(model: &SystemicModel, z: Option<&[f64]>) -> Result<Option<DualVariable>> {
    let evals = model.aggregate_full(z)?;
    let mut y = Vec::with_capacity(evals.len());
    let mut grads = Vec::with_capacity(evals.len());
    for e in evals {
        match e {
            AggEval::Finite { value, supergradient } => {
                y.push(value);
                grads.push(supergradient.iter().map(|g| g.max(0.0)).collect::<Vec<f64>>());
            }
            AggEval::Infeasible(_) => return Ok(None),
        }
    }
    let space = model.space();
    let p = space.probs();
    let (_, sigma) = model.base().rho_with_measure(space, &y)?;
    let sigma: Vec<f64> = sigma.iter().zip(p).map(|(s, pk)| (1.0 - EQUIVALENCE_MIX) * s + EQUIVALENCE_MIX * pk).collect();
    let total: f64 = sigma.iter().sum();
    let s = Density::new(space, sigma.iter().zip(p).map(|(v, pk)| v / total / pk).collect())?;
    let d = model.dim();
    let w: Vec<f64> = (0..d).map(|i| (0..p.len()).map(|k| p[k] * s.values()[k] * grads[k][i]).sum()).collect();
    if w.iter().all(|&v| v <= 0.0) {
        return Ok(None);
    }
    let q = (0..d)
        .map(|i| {
            if w[i] > 0.0 {
                Density::new(space, (0..p.len()).map(|k| s.values()[k] * grads[k][i] / w[i]).collect())
            } else {
                Ok(s.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(DualVariable::new(q, w, s)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct DualOptimum {
    pub q: Vec<Density>,
    pub w: Vec<f64>,
    /// Best value of dual_value(Q, w) - w'z.
    pub value: ExtendedReal,
    pub start_value: ExtendedReal,
    pub restarts: usize,
}

fn encode(dual_q: &[Density], w: &[f64], probs: &[f64]) -> Vec<f64> {
    let mut theta = Vec::new();
    for q in dual_q {
        theta.extend(q.values().iter().zip(probs).map(|(v, p)| (v * p).max(1e-300).ln()));
    }
    theta.extend(w.iter().map(|v| v.max(1e-300).ln()));
    theta
}

fn decode(model: &SystemicModel, theta: &[f64]) -> Result<(Vec<Density>, Vec<f64>)> {
    let n = model.space().len();
    let d = model.dim();
    let probs = model.space().probs();
    let mut q = Vec::with_capacity(d);
    for i in 0..d {
        let logits = &theta[i * n..(i + 1) * n];
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = e.iter().sum();
        q.push(Density::new(model.space(), e.iter().zip(probs).map(|(v, p)| v / s / p).collect())?);
    }
    let w = theta[d * n..].iter().map(|v| v.clamp(-700.0, 700.0).exp()).collect();
    Ok((q, w))
}

/// Maximize dual_value(Q, w) - w'z over softmax-parameterized Q and
/// log-parameterized w by Nelder-Mead, started from the best of the
/// reference dual (P, 1) and `starts`.
pub fn optimize_dual(
    model: &SystemicModel,
    z: Option<&[f64]>,
    starts: &[DualVariable],
    max_iters: u64,
) -> Result<DualOptimum> {
    let d = model.dim();
    let zero = vec![0.0; d];
    let z = z.unwrap_or(&zero);
    check_vector(z, d, "capital vector")?;
    let objective = |q: &[Density], w: &[f64]| -> f64 {
        match dual_value(model, q, w) {
            Ok(ExtendedReal::Finite(v)) => v - dot(w, z),
            _ => f64::NEG_INFINITY,
        }
    };
    let probs = model.space().probs();
    let reference = vec![Density::reference(model.space()); d];
    let mut best_theta = encode(&reference, &vec![1.0; d], probs);
    let mut best = objective(&reference, &vec![1.0; d]);
    for s in starts {
        let v = objective(&s.q, &s.w);
        if v > best {
            best = v;
            best_theta = encode(&s.q, &s.w, probs);
        }
    }
    let start_value = best;
    let f = |theta: &[f64]| -> f64 {
        match decode(model, theta) {
            Ok((q, w)) => -objective(&q, &w),
            Err(_) => f64::INFINITY,
        }
    };
    let mut restarts = 0;
    for step in [1.0, 0.3, 0.1, 0.03, 0.01] {
        let (theta, v) = nelder_mead(f, &best_theta, step, max_iters)?;
        restarts += 1;
        if -v > best {
            best = -v;
            best_theta = theta;
        }
    }
    let (q, w) = decode(model, &best_theta)?;
    let to_ext = |v: f64| if v.is_finite() { ExtendedReal::Finite(v) } else { ExtendedReal::NegInf };
    Ok(DualOptimum { q, w, value: to_ext(best), start_value: to_ext(start_value), restarts })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationWitness {
    pub q: Vec<Density>,
    pub w: Vec<f64>,
    /// dual_value(Q, w) - w'z > 0.
    pub margin: f64,
    pub source: &'static str,
}

/// Look for (Q, w) with w'z < w'E^Q[-X] - alpha^sys(Q, w): the supporting
/// dual at z first, then `samples` seeded duals, then one optimizer run.
pub fn separation_search(
    model: &SystemicModel,
    z: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Option<SeparationWitness>> {
    check_vector(z, model.dim(), "capital vector")?;
    let margin = |q: &[Density], w: &[f64]| -> Result<f64> {
        Ok(match dual_value(model, q, w)? {
            ExtendedReal::Finite(v) => v - dot(w, z),
            ExtendedReal::PosInf => f64::INFINITY,
            ExtendedReal::NegInf => f64::NEG_INFINITY,
        })
    };
    if let Some(d) = fenchel_dual(model, Some(z))? {
        let m = margin(&d.q, &d.w)?;
        if m > 0.0 {
            return Ok(Some(SeparationWitness { q: d.q, w: d.w, margin: m, source: "supporting" }));
        }
    }
    let duals = sample_duals(model.space(), model.aggregation(), model.base(), samples, seed)?;
    if let Some(w) = recession_witness(model, z, &duals)? {
        return Ok(Some(w));
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, d) in duals.iter().enumerate() {
        let m = margin(&d.q, &d.w)?;
        if m > 0.0 {
            return Ok(Some(SeparationWitness { q: d.q.clone(), w: d.w.clone(), margin: m, source: "sampled" }));
        }
        if best.map_or(true, |(b, _)| m > b) {
            best = Some((m, i));
        }
    }
    let starts: Vec<DualVariable> = best.map(|(_, i)| duals[i].clone()).into_iter().collect();
    let opt = optimize_dual(model, Some(z), &starts, 2000)?;
    if let ExtendedReal::Finite(m) = opt.value {
        if m > 0.0 {
            return Ok(Some(SeparationWitness { q: opt.q, w: opt.w, margin: m, source: "optimized" }));
        }
    }
    Ok(None)
}

/// When some scenario k is infeasible at z, its certificate r satisfies
/// r'(x) + c <= 0 on the domain but not at X_k + z. Moving mass t * max(-r, 0)
/// onto scenario k of a dual with finite penalty keeps the penalty finite
/// and raises the margin linearly in t, so escalating t finds a witness.
fn recession_witness(model: &SystemicModel, z: &[f64], duals: &[DualVariable]) -> Result<Option<SeparationWitness>> {
    let evals = model.aggregate_full(Some(z))?;
    let Some((k, cert)) = evals.iter().enumerate().find_map(|(k, e)| match e {
        AggEval::Infeasible(c) => Some((k, c)),
        _ => None,
    }) else {
        return Ok(None);
    };
    let dir: Vec<f64> = cert.row_weights.iter().take(model.dim()).map(|r| (-r).max(0.0)).collect();
    if dir.iter().all(|&v| v <= 0.0) {
        return Ok(None);
    }
    let space = model.space();
    let p = space.probs();
    let reference = DualVariable::new(vec![Density::reference(space); model.dim()], vec![1.0; model.dim()], Density::reference(space))?;
    let bases = std::iter::once(&reference).chain(duals.iter());
    for base in bases {
        if !dual_value(model, &base.q, &base.w)?.is_finite() {
            continue;
        }
        for e in 0..13 {
            let t = 10f64.powi(e - 3);
            let mut q = Vec::with_capacity(model.dim());
            let mut w = Vec::with_capacity(model.dim());
            for i in 0..model.dim() {
                let wi = base.w[i] + t * dir[i];
                let vals: Vec<f64> = (0..p.len())
                    .map(|j| {
                        let extra = if j == k { t * dir[i] / p[k] } else { 0.0 };
                        (base.w[i] * base.q[i].values()[j] + extra) / wi
                    })
                    .collect();
                q.push(Density::new(space, vals)?);
                w.push(wi);
            }
            if let ExtendedReal::Finite(v) = dual_value(model, &q, &w)? {
                let m = v - dot(&w, z);
                if m > 0.0 {
                    return Ok(Some(SeparationWitness { q, w, margin: m, source: "recession" }));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarizationDual {
    pub q: Vec<Density>,
    /// w'E^Q[-X] - alpha~^sys(Q, w), a lower bound on rho^sen_w.
    pub value: ExtendedReal,
    pub start_value: ExtendedReal,
}

/// Maximize w'E^Q[-X] - alpha~^sys(Q, w) over Q for fixed w: the best of
/// `samples` seeded duals and the supporting dual at the minimizer of the
/// primal, refined by Nelder-Mead on softmax logits.
pub fn scalarization_dual(
    model: &SystemicModel,
    w: &[f64],
    point: Option<&[f64]>,
    samples: usize,
    seed: u64,
) -> Result<ScalarizationDual> {
    check_weights(w, model.dim())?;
    let objective = |q: &[Density]| -> f64 {
        let a = match super::alpha_sys_tilde(model.aggregation(), model.base(), model.space(), q, w) {
            Ok(ExtendedReal::Finite(a)) => a,
            _ => return f64::NEG_INFINITY,
        };
        match super::linear_part(model, q, w) {
            Ok(l) => l - a,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut qs: Vec<Vec<Density>> = vec![vec![Density::reference(model.space()); model.dim()]];
    qs.extend(sample_duals(model.space(), model.aggregation(), model.base(), samples, seed)?.into_iter().map(|d| d.q));
    if point.is_some() {
        if let Some(d) = fenchel_dual(model, point)? {
            qs.push(d.q);
        }
    }
    let values: Vec<f64> = qs.par_iter().map(|q| objective(q)).collect();
    let (best_i, mut best) = values.iter().cloned().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    let start_value = best;
    let probs = model.space().probs();
    let mut best_q = qs.swap_remove(best_i);
    if best.is_finite() {
        let unit = vec![1.0; model.dim()];
        let mut theta = encode(&best_q, &unit, probs);
        theta.truncate(model.dim() * probs.len());
        let f = |th: &[f64]| -> f64 {
            let mut full = th.to_vec();
            full.extend(std::iter::repeat(0.0).take(model.dim()));
            match decode(model, &full) {
                Ok((q, _)) => -objective(&q),
                Err(_) => f64::INFINITY,
            }
        };
        for step in [1.0, 0.3, 0.1, 0.03, 0.01, 0.003] {
            let (th, v) = nelder_mead(f, &theta, step, 400)?;
            if -v > best {
                best = -v;
                theta = th;
            }
        }
        let mut full = theta;
        full.extend(std::iter::repeat(0.0).take(model.dim()));
        best_q = decode(model, &full)?.0;
    }
    let to_ext = |v: f64| if v.is_finite() { ExtendedReal::Finite(v) } else { ExtendedReal::NegInf };
    Ok(ScalarizationDual { q: best_q, value: to_ext(best), start_value: to_ext(start_value) })
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityCheck {
    pub gamma: f64,
    pub scaled: ExtendedReal,
    pub expected: ExtendedReal,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherentReport {
    pub homogeneity: Vec<HomogeneityCheck>,
    pub penalties_checked: usize,
    pub zero_penalties: usize,
    pub infinite_penalties: usize,
    /// Finite penalties farther than the tolerance from zero.
    pub off_zero: Vec<f64>,
    pub passed: bool,
}

pub const HOMOGENEITY_TOL: f64 = 1e-8;
pub const COHERENT_PENALTY_TOL: f64 = 1e-6;
pub const HOMOGENEITY_FACTORS: [f64; 3] = [0.5, 2.0, 7.0];

/// Positive homogeneity of rho^ins and the indicator form of alpha^sys.
pub fn coherent_dual_check(model: &SystemicModel, samples: usize, seed: u64) -> Result<CoherentReport> {
    if !model.base().is_coherent() || !model.aggregation().positively_homogeneous() {
        return Err(Error::Precondition(format!(
            "coherent check needs a coherent risk measure and a positively homogeneous aggregation, got {} with {}",
            model.base().name(),
            model.aggregation().name()
        )));
    }
    let base_value = rho_ins(model)?;
    let mut homogeneity = Vec::new();
    for gamma in HOMOGENEITY_FACTORS {
        let scaled = rho_ins(&model.with_wealth(model.wealth().scaled(gamma))?)?;
        let expected = match base_value {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(gamma * v),
            other => other,
        };
        let error = match (scaled, expected) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs(),
            (a, b) if a == b => 0.0,
            _ => f64::INFINITY,
        };
        homogeneity.push(HomogeneityCheck { gamma, scaled, expected, error });
    }
    let duals = sample_duals(model.space(), model.aggregation(), model.base(), samples, seed)?;
    let values: Vec<ExtendedReal> = duals
        .par_iter()
        .map(|d| Ok(super::alpha_sys(model.aggregation(), model.base(), model.space(), &d.q, &d.w)?.value))
        .collect::<Result<_>>()?;
    let mut zero = 0;
    let mut inf = 0;
    let mut off = Vec::new();
    for v in values {
        match v {
            ExtendedReal::Finite(a) if a.abs() < COHERENT_PENALTY_TOL => zero += 1,
            ExtendedReal::Finite(a) => off.push(a),
            _ => inf += 1,
        }
    }
    let passed = off.is_empty() && homogeneity.iter().all(|h| h.error <= HOMOGENEITY_TOL);
    Ok(CoherentReport {
        homogeneity,
        penalties_checked: duals.len(),
        zero_penalties: zero,
        infinite_penalties: inf,
        off_zero: off,
        passed,
    })
}

/// E^S[-Lambda(X + z)] <= lambda0, for lambda0 interior to -Lambda(R^d).
pub fn shortfall_membership(
    x: &WealthProcess,
    agg: &AggregationModel,
    lambda0: f64,
    s: &Density,
    z: &[f64],
) -> Result<bool> {
    if !agg.value_range().interior_contains(-lambda0) {
        return Err(Error::Precondition(format!(
            "threshold {lambda0} is not interior to the range of -Lambda"
        )));
    }
    check_vector(z, agg.dim(), "capital vector")?;
    if s.len() != x.len() {
        return Err(Error::Dimension("society measure lives on a different space".into()));
    }
    let p = x.space().probs();
    let mut total = 0.0;
    for k in 0..x.len() {
        let shifted: Vec<f64> = x.scenario(k).iter().zip(z).map(|(a, b)| a + b).collect();
        let weight = p[k] * s.values()[k];
        match agg.evaluate(&shifted)? {
            ExtendedReal::Finite(v) => total -= weight * v,
            _ if weight > 0.0 => return Ok(false),
            _ => {}
        }
    }
    Ok(total <= lambda0)
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub z: Vec<f64>,
    pub kind: &'static str,
    pub measure: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelUncertaintyReport {
    pub points: usize,
    pub measures: usize,
    pub members: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl ModelUncertaintyReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// R^sen(X) equals the intersection over S of the shortfall sets with
/// threshold alpha(S) when Lambda(R^d) = R. Members must pass every
/// sampled shortfall test; non-members must fail at least one, where the
/// risk-maximizing measure at z joins the sampled ones.
pub fn model_uncertainty_check(
    model: &SystemicModel,
    points: &[Vec<f64>],
    measures: &[Density],
) -> Result<ModelUncertaintyReport> {
    if !model.aggregation().value_range().is_whole_line() {
        return Err(Error::Precondition(format!(
            "the {} aggregation does not map onto the whole real line",
            model.aggregation().name()
        )));
    }
    model.require_assumption()?;
    let space = model.space();
    let thresholds: Vec<Option<f64>> = measures
        .iter()
        .map(|s| Ok(model.base().penalty(space, s)?.finite()))
        .collect::<Result<_>>()?;
    let results: Vec<(bool, Vec<Counterexample>)> = points
        .par_iter()
        .map(|z| -> Result<(bool, Vec<Counterexample>)> {
            let member = r_sen_membership(model, z)?;
            let mut found = Vec::new();
            let mut witnessed = false;
            for (j, (s, t)) in measures.iter().zip(&thresholds).enumerate() {
                let Some(t) = t else { continue };
                let ok = shortfall_membership(model.wealth(), model.aggregation(), *t, s, z)?;
                if member && !ok {
                    found.push(Counterexample { z: z.clone(), kind: "member_fails_shortfall", measure: Some(j) });
                }
                witnessed |= !ok;
            }
            if !member && !witnessed {
                if let Some(d) = fenchel_dual(model, Some(z))? {
                    if let Some(t) = model.base().penalty(space, &d.s)?.finite() {
                        witnessed = !shortfall_membership(model.wealth(), model.aggregation(), t, &d.s, z)?;
                    }
                }
                if !witnessed {
                    found.push(Counterexample { z: z.clone(), kind: "non_member_without_witness", measure: None });
                }
            }
            Ok((member, found))
        })
        .collect::<Result<_>>()?;
    let members = results.iter().filter(|r| r.0).count();
    Ok(ModelUncertaintyReport {
        points: points.len(),
        measures: measures.len(),
        members,
        counterexamples: results.into_iter().flat_map(|r| r.1).collect(),
    })
}
