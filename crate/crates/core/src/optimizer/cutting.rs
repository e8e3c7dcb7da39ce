//! Scalarization of a convex constraint: minimize w'z subject to c(z) <= 0.
//!
//! Supporting-hyperplane cutting planes: the master LP over accumulated cuts
//! gives a lower bound and, through its duals, the Lagrange multiplier; a
//! bisection from a Slater point towards the master solution gives feasible
//! points and the upper bound, as does lifting the master solution along
//! the all-ones direction.

use serde::Serialize;

use super::lp::{solve_lp, LinearProgram, LpStatus, RowKind, Sense};
use crate::error::{Error, Result};
use crate::tolerances as tol;

/// Result of querying the constraint function at a point.
#[derive(Debug, Clone)]
pub enum OracleValue {
    Finite { value: f64, subgradient: Vec<f64> },
    /// The point lies outside the domain; every point of the domain
    /// satisfies `a'z <= b` while the queried point does not.
    Outside { a: Vec<f64>, b: f64 },
}

pub trait ConvexOracle {
    fn dim(&self) -> usize;
    fn eval(&self, z: &[f64]) -> Result<OracleValue>;
}

#[derive(Debug, Clone)]
pub struct ScalarizationOptions {
    /// Relative gap at which the method stops.
    pub target_gap: f64,
    /// Relative gap accepted when the iteration budget runs out.
    pub accept_gap: f64,
    pub max_iterations: usize,
    pub max_radius: f64,
}

impl Default for ScalarizationOptions {
    fn default() -> Self {
        Self { target_gap: 1e-8, accept_gap: tol::SCALARIZATION, max_iterations: 3000, max_radius: 1e9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScalarizationStatus {
    Optimal,
    /// Gap is within the acceptance tolerance but above the target.
    Accepted,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarizationReport {
    pub status: ScalarizationStatus,
    /// w'z at the best feasible point found.
    pub value: f64,
    pub point: Vec<f64>,
    /// Lagrange multiplier of the constraint.
    pub lambda: f64,
    /// Lower bound from the cut model (Lagrangian dual of the model).
    pub dual_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub cuts: usize,
    /// The search box was still binding at termination; the bound is then
    /// only certified inside the box.
    pub box_active: bool,
}

/// a'z <= b, stored with unit max-norm; `norm` is the original scale.
struct Cut {
    a: Vec<f64>,
    b: f64,
    norm: f64,
    objective: bool,
    /// Last iteration with a nonzero multiplier in the master LP.
    last_active: usize,
}

impl Cut {
    fn new(a: Vec<f64>, b: f64, objective: bool) -> Self {
        let norm = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > 0.0 {
            Self { a: a.iter().map(|v| v / norm).collect(), b: b / norm, norm, objective, last_active: 0 }
        } else {
            Self { a, b, norm: 1.0, objective, last_active: 0 }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cut_from(z: &[f64], v: &OracleValue) -> Cut {
    match v {
        OracleValue::Finite { value, subgradient } => {
            // c(z) + g'(y - z) <= 0
            Cut::new(subgradient.clone(), dot(subgradient, z) - value, true)
        }
        OracleValue::Outside { a, b } => Cut::new(a.clone(), *b, false),
    }
}

fn feasible(v: &OracleValue) -> bool {
    matches!(v, OracleValue::Finite { value, .. } if *value <= 0.0)
}

/// Iterations without a cut multiplier after which a cut is dropped.
const PRUNE_AFTER: usize = 50;
/// Iterations without gap progress after which the method stops; the
/// master LP cannot resolve gaps much below its feasibility tolerance.
const STALL_WINDOW: usize = 25;

/// Smallest t in (0, max_shift] with z + t 1 feasible, for constraints
/// nonincreasing along 1. The master solution is nearly optimal, so this
/// gives an upper bound within c(z)/|g'1| of the cut model.
fn lift_to_feasible(oracle: &dyn ConvexOracle, z: &[f64], max_shift: f64) -> Result<Option<(Vec<f64>, OracleValue)>> {
    let at = |t: f64| -> Result<(Vec<f64>, OracleValue)> {
        let p: Vec<f64> = z.iter().map(|v| v + t).collect();
        let v = oracle.eval(&p)?;
        Ok((p, v))
    };
    let scale = z.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut hi = 1e-12 * scale;
    let mut found = loop {
        let (p, v) = at(hi)?;
        if feasible(&v) {
            break (p, v);
        }
        hi *= 4.0;
        if hi > max_shift {
            return Ok(None);
        }
    };
    let mut lo = if hi > 1e-12 * scale { hi / 4.0 } else { 0.0 };
    while hi - lo > 1e-15 * scale {
        let mid = 0.5 * (lo + hi);
        let (p, v) = at(mid)?;
        if feasible(&v) {
            hi = mid;
            found = (p, v);
        } else {
            lo = mid;
        }
    }
    Ok(Some(found))
}

/// Minimize w'z over {c <= 0} given a strict Slater point.
pub fn lagrange_dual_scalarization(
    oracle: &dyn ConvexOracle,
    w: &[f64],
    slater: &[f64],
    opts: &ScalarizationOptions,
) -> Result<ScalarizationReport> {
    let d = oracle.dim();
    if w.len() != d || slater.len() != d {
        return Err(Error::Dimension("direction or Slater point has the wrong length".into()));
    }
    let at_slater = oracle.eval(slater)?;
    match &at_slater {
        OracleValue::Finite { value, .. } if *value < 0.0 => {}
        _ => return Err(Error::Precondition("Slater point is not strictly feasible".into())),
    }
    let mut cuts = vec![cut_from(slater, &at_slater)];
    let scale = slater.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut radius = 4.0 * scale;
    let mut best_point = slater.to_vec();
    let mut ub = dot(w, slater);
    let mut lb = f64::NEG_INFINITY;
    let mut lambda = 0.0;
    let mut iterations = 0usize;
    let mut box_active = false;
    let mut expanded_at_ub = f64::NAN;
    let mut best_gap = f64::INFINITY;
    let mut improved_at = 0usize;

    while iterations < opts.max_iterations {
        iterations += 1;
        let mut lp = LinearProgram::new(Sense::Minimize);
        for i in 0..d {
            lp.add_var(slater[i] - radius, slater[i] + radius, w[i]);
        }
        for c in &cuts {
            lp.add_row(c.a.iter().cloned().enumerate().filter(|(_, v)| *v != 0.0).collect(), RowKind::Le, c.b);
        }
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numeric(format!("cutting-plane master LP is {:?}", sol.status)));
        }
        let zm = sol.x.clone();
        lb = sol.objective;
        lambda = cuts.iter().zip(&sol.duals).filter(|(c, _)| c.objective).map(|(c, y)| -y / c.norm).sum::<f64>().max(0.0);
        for (c, y) in cuts.iter_mut().zip(&sol.duals) {
            if *y != 0.0 || c.last_active == 0 {
                c.last_active = iterations;
            }
        }
        // the Slater cut stays; long-inactive cuts only slow the master
        let mut first = true;
        cuts.retain(|c| std::mem::replace(&mut first, false) || iterations - c.last_active <= PRUNE_AFTER);
        box_active = (0..d).any(|i| {
            let slack = 1e-9 * radius;
            zm[i] <= slater[i] - radius + slack || zm[i] >= slater[i] + radius - slack
        });

        let at_m = oracle.eval(&zm)?;
        if feasible(&at_m) {
            let v = dot(w, &zm);
            if v < ub {
                ub = v;
                best_point = zm.clone();
            }
        } else {
            cuts.push(cut_from(&zm, &at_m));
            // largest step from the Slater point that stays feasible
            let dir: Vec<f64> = zm.iter().zip(slater).map(|(a, b)| a - b).collect();
            let len = dir.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let mut last_feasible = at_slater.clone();
            while (hi - lo) * len > 1e-14 * scale.max(len) && hi - lo > 1e-16 {
                let mid = 0.5 * (lo + hi);
                let p: Vec<f64> = slater.iter().zip(&dir).map(|(s, v)| s + mid * v).collect();
                let at_p = oracle.eval(&p)?;
                if feasible(&at_p) {
                    lo = mid;
                    last_feasible = at_p;
                } else {
                    hi = mid;
                }
            }
            if lo > 0.0 {
                let zb: Vec<f64> = slater.iter().zip(&dir).map(|(s, v)| s + lo * v).collect();
                let v = dot(w, &zb);
                if v < ub {
                    ub = v;
                    best_point = zb.clone();
                }
                cuts.push(cut_from(&zb, &last_feasible));
            }
            if let Some((zs, at_s)) = lift_to_feasible(oracle, &zm, 4.0 * radius)? {
                let v = dot(w, &zs);
                if v < ub {
                    ub = v;
                    best_point = zs.clone();
                }
                cuts.push(cut_from(&zs, &at_s));
            }
        }

        let gap = ub - lb;
        if gap < 0.999 * best_gap {
            best_gap = gap;
            improved_at = iterations;
        } else if !box_active && iterations - improved_at >= STALL_WINDOW {
            break;
        }
        if gap <= opts.target_gap * (1.0 + ub.abs()) {
            if box_active && radius < opts.max_radius && !(ub >= expanded_at_ub - opts.target_gap * (1.0 + ub.abs())) {
                expanded_at_ub = ub;
                radius *= 8.0;
                continue;
            }
            return Ok(ScalarizationReport {
                status: ScalarizationStatus::Optimal,
                value: ub,
                point: best_point,
                lambda,
                dual_bound: lb,
                gap: gap.max(0.0),
                iterations,
                cuts: cuts.len(),
                box_active,
            });
        }
    }
    let gap = ub - lb;
    if gap <= opts.accept_gap * (1.0 + ub.abs()) {
        return Ok(ScalarizationReport {
            status: ScalarizationStatus::Accepted,
            value: ub,
            point: best_point,
            lambda,
            dual_bound: lb,
            gap,
            iterations,
            cuts: cuts.len(),
            box_active,
        });
    }
    Err(Error::Numeric(format!(
        "scalarization gap {gap:e} after {iterations} iterations exceeds tolerance"
    )))
}
