//! Insensitive and sensitive systemic risk measures.
//!
//! R^ins(X) = {z : rho(Lambda(X) + sum z) <= 0} and
//! R^sen(X) = {z : rho(Lambda(X + z)) <= 0}, with scalar values
//! rho^ins(X) = rho(Lambda(X)) and rho^sen_w(X) = inf {w'z : z in R^sen(X)}.

mod checks;
mod penalty;

pub use checks::*;
pub use penalty::*;

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregation::{AggEval, AggregationModel};
use crate::error::{dimension, validation, Error, Result};
use crate::extended::ExtendedReal;
use crate::model::{ScenarioSpace, WealthProcess};
use crate::optimizer::{
    lagrange_dual_scalarization, solve_lp, ConvexOracle, LinearProgram, LpStatus, OracleValue, RowKind,
    ScalarizationOptions, ScalarizationStatus, Sense,
};
use crate::risk::BaseRiskMeasure;
use crate::tolerances as tol;

/// Scenario count above which per-scenario LPs run on the rayon pool.
const PARALLEL_SCENARIOS: usize = 16;
/// Size limit for the joint exact LP used to cross-check polyhedral pairs.
const EXACT_LP_MAX_VARS: usize = 4000;

#[derive(Debug, Clone, Serialize)]
pub struct SystemicModel {
    x: WealthProcess,
    agg: AggregationModel,
    base: BaseRiskMeasure,
    assumption: bool,
}

impl SystemicModel {
    pub fn new(x: WealthProcess, agg: AggregationModel, base: BaseRiskMeasure) -> Result<Self> {
        if x.dim() != agg.dim() {
            return Err(dimension(format!("wealth has {} institutions, aggregation expects {}", x.dim(), agg.dim())));
        }
        let base = base.validated()?;
        let assumption = assumption_holds(&agg, &base);
        Ok(Self { x, agg, base, assumption })
    }

    pub fn wealth(&self) -> &WealthProcess {
        &self.x
    }

    pub fn aggregation(&self) -> &AggregationModel {
        &self.agg
    }

    pub fn base(&self) -> &BaseRiskMeasure {
        &self.base
    }

    pub fn space(&self) -> &ScenarioSpace {
        self.x.space()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// rho(0) lies in the interior of Lambda(R^d).
    pub fn assumption_holds(&self) -> bool {
        self.assumption
    }

    pub fn require_assumption(&self) -> Result<()> {
        if self.assumption {
            Ok(())
        } else {
            Err(Error::Assumption)
        }
    }

    /// Same aggregation and risk measure, different wealth.
    pub fn with_wealth(&self, x: WealthProcess) -> Result<Self> {
        Self::new(x, self.agg.clone(), self.base)
    }

    /// Lambda(X_k + z) per scenario with first-order data.
    pub fn aggregate_full(&self, z: Option<&[f64]>) -> Result<Vec<AggEval>> {
        if let Some(z) = z {
            check_vector(z, self.dim(), "capital vector")?;
        }
        let eval = |k: usize| -> Result<AggEval> {
            let row = self.x.scenario(k);
            match z {
                Some(z) => {
                    let shifted: Vec<f64> = row.iter().zip(z).map(|(a, b)| a + b).collect();
                    self.agg.evaluate_full(&shifted)
                }
                None => self.agg.evaluate_full(row),
            }
        };
        if self.x.len() >= PARALLEL_SCENARIOS && self.agg.is_polyhedral() {
            (0..self.x.len()).into_par_iter().map(eval).collect()
        } else {
            (0..self.x.len()).map(eval).collect()
        }
    }

    /// Lambda(X_k + z) per scenario, -inf where the aggregation is infeasible.
    pub fn aggregate(&self, z: Option<&[f64]>) -> Result<Vec<f64>> {
        Ok(self
            .aggregate_full(z)?
            .into_iter()
            .map(|e| match e {
                AggEval::Finite { value, .. } => value,
                AggEval::Infeasible(_) => f64::NEG_INFINITY,
            })
            .collect())
    }

    /// rho(Lambda(X + z)), the constraint function of R^sen.
    pub fn sensitive_constraint(&self, z: &[f64]) -> Result<ExtendedReal> {
        self.base.rho(self.space(), &self.aggregate(Some(z))?)
    }
}

pub fn assumption_holds(agg: &AggregationModel, base: &BaseRiskMeasure) -> bool {
    agg.value_range().interior_contains(base.rho_zero())
}

pub(crate) fn check_vector(v: &[f64], d: usize, what: &str) -> Result<()> {
    if v.len() != d {
        return Err(dimension(format!("{what} has length {}, expected {d}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(validation(format!("{what} must be finite")));
    }
    Ok(())
}

pub(crate) fn check_weights(w: &[f64], d: usize) -> Result<()> {
    check_vector(w, d, "weight vector")?;
    if w.iter().any(|&v| v < 0.0) {
        return Err(validation("weights must be nonnegative"));
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err(validation("weight vector must be nonzero"));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rho_ins(model: &SystemicModel) -> Result<ExtendedReal> {
    model.base.rho(model.space(), &model.aggregate(None)?)
}

/// z in R^ins(X) iff sum z >= rho^ins(X).
pub fn r_ins_membership(model: &SystemicModel, z: &[f64]) -> Result<bool> {
    check_vector(z, model.dim(), "capital vector")?;
    Ok(rho_ins(model)? <= ExtendedReal::Finite(z.iter().sum()))
}

pub fn r_sen_membership(model: &SystemicModel, z: &[f64]) -> Result<bool> {
    model.require_assumption()?;
    Ok(model.sensitive_constraint(z)? <= ExtendedReal::Finite(0.0))
}

/// Cutting-plane oracle for c(z) = rho(Lambda(X + z)).
struct SensitiveOracle<'a> {
    model: &'a SystemicModel,
}

impl ConvexOracle for SensitiveOracle<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn eval(&self, z: &[f64]) -> Result<OracleValue> {
        let m = self.model;
        let evals = m.aggregate_full(Some(z))?;
        let d = m.dim();
        let mut y = Vec::with_capacity(evals.len());
        let mut grads = Vec::with_capacity(evals.len());
        for (k, e) in evals.into_iter().enumerate() {
            match e {
                AggEval::Finite { value, supergradient } => {
                    y.push(value);
                    grads.push(supergradient);
                }
                AggEval::Infeasible(cert) => {
                    if cert.row_weights.len() != d {
                        return Err(Error::Numeric("certificate length differs from the dimension".into()));
                    }
                    // r'(X_k + z) + C <= 0 on the domain
                    let b = -cert.constant - dot(&cert.row_weights, m.x.scenario(k));
                    return Ok(OracleValue::Outside { a: cert.row_weights, b });
                }
            }
        }
        let (value, sigma) = m.base.rho_with_measure(m.space(), &y)?;
        let mut subgradient = vec![0.0; d];
        for (s, g) in sigma.iter().zip(&grads) {
            for (acc, gi) in subgradient.iter_mut().zip(g) {
                *acc -= s * gi;
            }
        }
        Ok(OracleValue::Finite { value, subgradient })
    }
}

/// z = (||X_1||, ..., ||X_d||) + t 1 for t = 1, 2, 4, ..., 2^20 with
/// rho(Lambda(X + z)) < -margin; None when no such point is found.
pub fn find_slater_point(model: &SystemicModel) -> Result<Option<Vec<f64>>> {
    model.require_assumption()?;
    let base = model.x.sup_norms();
    for e in 0..=20 {
        let t = (1u64 << e) as f64;
        let z: Vec<f64> = base.iter().map(|b| b + t).collect();
        if let ExtendedReal::Finite(v) = model.sensitive_constraint(&z)? {
            if v < -tol::SLATER_MARGIN {
                return Ok(Some(z));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitiveReport {
    pub value: ExtendedReal,
    /// A point of R^sen with w'z within the reported gap of the value.
    pub point: Option<Vec<f64>>,
    /// Recession direction certifying an infinite value.
    pub unbounded_direction: Option<Vec<f64>>,
    pub slater_point: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub dual_bound: Option<f64>,
    pub gap: Option<f64>,
    pub cutting_plane_value: Option<f64>,
    pub exact_lp_value: Option<f64>,
    pub accepted_with_loose_gap: bool,
    pub iterations: usize,
    pub cuts: usize,
    pub box_active: bool,
}

impl SensitiveReport {
    fn unbounded(r: Vec<f64>) -> Self {
        Self {
            value: ExtendedReal::NegInf,
            point: None,
            unbounded_direction: Some(r),
            slater_point: None,
            lambda: None,
            dual_bound: None,
            gap: None,
            cutting_plane_value: None,
            exact_lp_value: None,
            accepted_with_loose_gap: false,
            iterations: 0,
            cuts: 0,
            box_active: false,
        }
    }
}

pub fn rho_sen(model: &SystemicModel, w: &[f64]) -> Result<ExtendedReal> {
    Ok(rho_sen_report(model, w)?.value)
}

/// rho^sen_w with solver diagnostics.
pub fn rho_sen_report(model: &SystemicModel, w: &[f64]) -> Result<SensitiveReport> {
    rho_sen_with(model, w, &ScalarizationOptions::default())
}

pub fn rho_sen_with(model: &SystemicModel, w: &[f64], opts: &ScalarizationOptions) -> Result<SensitiveReport> {
    model.require_assumption()?;
    check_weights(w, model.dim())?;
    if let Some(r) = model.agg.unbounded_direction(w)? {
        return Ok(SensitiveReport::unbounded(r));
    }
    let slater = find_slater_point(model)?
        .ok_or_else(|| Error::Precondition("no Slater point found for the sensitive constraint".into()))?;
    let rep = lagrange_dual_scalarization(&SensitiveOracle { model }, w, &slater, opts)?;
    let mut out = SensitiveReport {
        value: ExtendedReal::Finite(rep.value),
        point: Some(rep.point.clone()),
        unbounded_direction: None,
        slater_point: Some(slater),
        lambda: Some(rep.lambda),
        dual_bound: Some(rep.dual_bound),
        gap: Some(rep.gap),
        cutting_plane_value: Some(rep.value),
        exact_lp_value: None,
        accepted_with_loose_gap: rep.status == ScalarizationStatus::Accepted,
        iterations: rep.iterations,
        cuts: rep.cuts,
        box_active: rep.box_active,
    };
    if let Some(exact) = exact_sensitive_lp(model, w)? {
        match exact {
            ExtendedReal::Finite(v) => {
                if (v - rep.value).abs() > tol::SCALARIZATION_AGREEMENT * (1.0 + v.abs()) {
                    return Err(Error::Numeric(format!(
                        "cutting-plane value {} and exact LP value {v} disagree",
                        rep.value
                    )));
                }
                out.exact_lp_value = Some(v);
                out.value = ExtendedReal::Finite(v);
            }
            other => {
                return Err(Error::Numeric(format!(
                    "exact LP reports {other} but the cutting-plane method found {}",
                    rep.value
                )))
            }
        }
    }
    Ok(out)
}

/// One LP for polyhedral pairs: min w'z subject to y_k <= Lambda(X_k + z)
/// and the risk constraint written linearly in y. None when the pair is
/// not polyhedral or the LP would be too large for the dense solver.
pub fn exact_sensitive_lp(model: &SystemicModel, w: &[f64]) -> Result<Option<ExtendedReal>> {
    if !(model.agg.is_polyhedral() && model.base.is_polyhedral()) {
        return Ok(None);
    }
    check_weights(w, model.dim())?;
    let p = model.space().probs();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let z: Vec<usize> = w.iter().map(|&wi| lp.add_free_var(wi)).collect();
    let mut y = Vec::with_capacity(p.len());
    for k in 0..p.len() {
        y.push(model.agg.add_hypograph(&mut lp, model.x.scenario(k), &z)?);
        if lp.num_vars() > EXACT_LP_MAX_VARS {
            return Ok(None);
        }
    }
    match model.base {
        BaseRiskMeasure::Expectation { lambda0 } => {
            lp.add_row(y.iter().zip(p).map(|(&j, pk)| (j, -pk)).collect(), RowKind::Le, lambda0);
        }
        BaseRiskMeasure::Avar { beta } => {
            // t + E[u]/beta <= 0 with u >= -y - t, u >= 0
            let t = lp.add_free_var(0.0);
            let mut row = vec![(t, 1.0)];
            for (&yk, pk) in y.iter().zip(p) {
                let u = lp.add_var(0.0, f64::INFINITY, 0.0);
                lp.add_row(vec![(u, -1.0), (yk, -1.0), (t, -1.0)], RowKind::Le, 0.0);
                row.push((u, pk / beta));
            }
            lp.add_row(row, RowKind::Le, 0.0);
        }
        BaseRiskMeasure::Entropic => unreachable!("entropic risk is not polyhedral"),
    }
    if lp.num_vars() > EXACT_LP_MAX_VARS {
        return Ok(None);
    }
    let sol = solve_lp(&lp)?;
    Ok(Some(match sol.status {
        LpStatus::Optimal => ExtendedReal::Finite(sol.objective),
        LpStatus::Unbounded => ExtendedReal::NegInf,
        LpStatus::Infeasible => ExtendedReal::PosInf,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionStatus {
    Finite,
    Unbounded,
    Failed,
}

/// Supporting halfspace {z : normal'z >= offset}.
#[derive(Debug, Clone, Serialize)]
pub struct HalfspaceEntry {
    pub normal: Vec<f64>,
    pub offset: ExtendedReal,
    pub status: DirectionStatus,
    /// Minimizer on the boundary of R^sen, for finite offsets.
    pub point: Option<Vec<f64>>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfspaceSet {
    pub entries: Vec<HalfspaceEntry>,
}

impl HalfspaceSet {
    /// z satisfies every finite halfspace up to `slack`.
    pub fn contains(&self, z: &[f64], slack: f64) -> bool {
        self.entries.iter().all(|e| match e.offset {
            ExtendedReal::Finite(b) => dot(&e.normal, z) >= b - slack,
            _ => true,
        })
    }

    /// Boundary points in direction order, skipping non-finite directions.
    pub fn polyline(&self) -> Vec<Vec<f64>> {
        self.entries.iter().filter_map(|e| e.point.clone()).collect()
    }

    pub fn all_failed(&self) -> bool {
        self.entries.iter().all(|e| e.status == DirectionStatus::Failed)
    }
}

/// K evenly spaced directions (1 - t, t), t = i/(K-1), on the 2-simplex.
pub fn simplex_directions(k: usize) -> Result<Vec<Vec<f64>>> {
    match k {
        0 => Err(validation("at least one direction is required")),
        1 => Ok(vec![vec![0.5, 0.5]]),
        _ => Ok((0..k)
            .map(|i| {
                let t = i as f64 / (k - 1) as f64;
                vec![1.0 - t, t]
            })
            .collect()),
    }
}

/// Directions for region output: the 2-simplex grid rescaled to max-norm 1,
/// so the diagonal (present for odd K) is (1, 1). For d != 2: the
/// all-ones vector, the unit vectors, then seeded Dirichlet draws, all
/// rescaled the same way, K in total.
pub fn region_directions(d: usize, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(validation("at least one direction is required"));
    }
    let scale = |w: Vec<f64>| {
        let m = w.iter().cloned().fold(0.0, f64::max);
        w.into_iter().map(|v| v / m).collect::<Vec<f64>>()
    };
    if d == 1 {
        return Ok(vec![vec![1.0]]);
    }
    if d == 2 {
        return Ok(simplex_directions(k)?.into_iter().map(scale).collect());
    }
    let mut out = vec![vec![1.0; d]];
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        out.push(e);
    }
    let mut rng = crate::sampling::stream_rng(seed, 0x5245_4749);
    while out.len() < k {
        out.push(scale(crate::sampling::dirichlet(&mut rng, d)));
    }
    out.truncate(k);
    Ok(out)
}

/// {z : sum z >= rho^ins(X)}.
pub fn r_ins_halfspace(model: &SystemicModel) -> Result<HalfspaceSet> {
    let v = rho_ins(model)?;
    Ok(HalfspaceSet {
        entries: vec![HalfspaceEntry {
            normal: vec![1.0; model.dim()],
            offset: v,
            status: if v.is_finite() { DirectionStatus::Finite } else { DirectionStatus::Failed },
            point: None,
            message: (!v.is_finite()).then(|| "R^ins is empty".to_string()),
        }],
    })
}

/// Outer description of R^sen from the scalarizations in the given
/// directions; exact in those directions.
pub fn r_sen_outer_approx(model: &SystemicModel, directions: &[Vec<f64>]) -> Result<HalfspaceSet> {
    model.require_assumption()?;
    if directions.is_empty() {
        return Err(validation("no directions given"));
    }
    for w in directions {
        check_weights(w, model.dim())?;
    }
    let entries = directions
        .par_iter()
        .map(|w| match rho_sen_report(model, w) {
            Ok(rep) => HalfspaceEntry {
                normal: w.clone(),
                offset: rep.value,
                status: if rep.value.is_finite() { DirectionStatus::Finite } else { DirectionStatus::Unbounded },
                point: rep.point,
                message: rep.unbounded_direction.map(|_| "unbounded direction".to_string()),
            },
            Err(e) => HalfspaceEntry {
                normal: w.clone(),
                offset: ExtendedReal::NegInf,
                status: DirectionStatus::Failed,
                point: None,
                message: Some(e.to_string()),
            },
        })
        .collect();
    Ok(HalfspaceSet { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(values: Vec<Vec<f64>>) -> WealthProcess {
        WealthProcess::new(ScenarioSpace::uniform(values.len()).unwrap(), values).unwrap()
    }

    #[test]
    fn total_pl_expectation() {
        let x = two_point(vec![vec![1.0, 1.0], vec![-3.0, -1.0]]);
        let m = SystemicModel::new(x, AggregationModel::total_pl(2).unwrap(), BaseRiskMeasure::expectation(0.0).unwrap())
            .unwrap();
        assert_eq!(rho_ins(&m).unwrap(), ExtendedReal::Finite(1.0));
        assert!(r_ins_membership(&m, &[1.0, 0.0]).unwrap());
        assert!(!r_ins_membership(&m, &[0.5, 0.4]).unwrap());
        let v = rho_sen(&m, &[1.0, 1.0]).unwrap().to_f64();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
        assert_eq!(rho_sen(&m, &[1.0, 2.0]).unwrap(), ExtendedReal::NegInf);
    }

    #[test]
    fn shifted_entropic_aggregation_one_dimensional() {
        // e^{-z-1} <= 1 iff z >= -1
        let x = WealthProcess::deterministic(vec![0.0]).unwrap();
        let m = SystemicModel::new(x, AggregationModel::entropic(1).unwrap(), BaseRiskMeasure::expectation(1.0).unwrap())
            .unwrap();
        let v = rho_sen(&m, &[1.0]).unwrap().to_f64();
        assert!((v + 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn entropic_pair_fails_assumption() {
        let x = WealthProcess::deterministic(vec![0.0]).unwrap();
        let m = SystemicModel::new(x, AggregationModel::entropic(1).unwrap(), BaseRiskMeasure::Entropic).unwrap();
        assert!(!m.assumption_holds());
        assert!(matches!(rho_sen(&m, &[1.0]), Err(Error::Assumption)));
        assert!(rho_ins(&m).is_ok());
    }

    #[test]
    fn total_loss_shifted_zero_wealth() {
        let x = WealthProcess::deterministic(vec![0.0, 0.0]).unwrap();
        let m = SystemicModel::new(x, AggregationModel::total_loss(2).unwrap(), BaseRiskMeasure::expectation(0.5).unwrap())
            .unwrap();
        let rep = rho_sen_report(&m, &[1.0, 1.0]).unwrap();
        assert!((rep.value.to_f64() + 0.5).abs() < 1e-9);
        assert!(rep.exact_lp_value.is_some());
        let z = rep.point.unwrap();
        let shifted: Vec<f64> = z.iter().map(|v| v + 1e-4).collect();
        assert!(r_sen_membership(&m, &shifted).unwrap());
    }

    #[test]
    fn region_directions_are_max_normalized() {
        let d = region_directions(2, 5, 42).unwrap();
        assert_eq!(d[2], vec![1.0, 1.0]);
        assert_eq!(d[1], vec![1.0, 1.0 / 3.0]);
        let d3 = region_directions(3, 6, 42).unwrap();
        assert_eq!(d3.len(), 6);
        assert!(d3.iter().all(|w| w.iter().cloned().fold(0.0, f64::max) == 1.0));
        assert_eq!(d3, region_directions(3, 6, 42).unwrap());
    }

    #[test]
    fn directions_include_endpoints() {
        let d = simplex_directions(5).unwrap();
        assert_eq!(d[0], vec![1.0, 0.0]);
        assert_eq!(d[2], vec![0.5, 0.5]);
        assert_eq!(d[4], vec![0.0, 1.0]);
    }
}
