//! Clearing payments in Eisenberg-Noe networks, with and without a central
//! counterparty.

use serde::Serialize;

use crate::error::{dimension, Error, Result};
use crate::model::LiabilityNetwork;
use crate::optimizer::{solve_lp, FarkasCertificate, LinearProgram, LpSolution, LpStatus, RowKind, Sense};
use crate::tolerances as tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClearingMethod {
    FixedPoint,
    LinearProgram,
    CcpRepaired,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClearingResult {
    /// Payments of the institutions (and of the CCP last, if present).
    pub payments: Vec<f64>,
    /// Total payment reaching society.
    pub society_equity: f64,
    pub method: ClearingMethod,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClearingOutcome {
    Cleared(ClearingResult),
    /// No payment vector in [0, pbar] satisfies the budget constraints.
    Infeasible {
        #[serde(skip)]
        certificate: Option<FarkasCertificate>,
    },
}

impl ClearingOutcome {
    pub fn cleared(&self) -> Option<&ClearingResult> {
        match self {
            ClearingOutcome::Cleared(r) => Some(r),
            ClearingOutcome::Infeasible { .. } => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, ClearingOutcome::Infeasible { .. })
    }
}

fn check_len(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(dimension(format!("wealth of length {} for {d} institutions", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("wealth must be finite".into()));
    }
    Ok(())
}

/// Picard iteration p <- min(pbar, x + A'p) started at pbar.
///
/// The iterates decrease monotonically and dominate every feasible payment
/// vector, so a negative component proves infeasibility.
pub fn clear_fixed_point(net: &LiabilityNetwork, x: &[f64]) -> Result<ClearingOutcome> {
    let d = net.dim();
    check_len(x, d)?;
    let pbar = net.pbar();
    let mut p = pbar.clone();
    let mut next = vec![0.0; d];
    for it in 1..=tol::FIXED_POINT_ITERATION_CAP {
        let mut change = 0.0f64;
        for i in 0..d {
            let inflow: f64 = (0..d).map(|j| net.relative(j + 1, i + 1) * p[j]).sum();
            next[i] = pbar[i].min(x[i] + inflow);
            change = change.max((next[i] - p[i]).abs());
        }
        std::mem::swap(&mut p, &mut next);
        if p.iter().any(|&v| v < 0.0) {
            return Ok(ClearingOutcome::Infeasible { certificate: None });
        }
        if change < tol::FIXED_POINT_STEP {
            let society_equity = (0..d).map(|i| net.relative(i + 1, 0) * p[i]).sum();
            return Ok(ClearingOutcome::Cleared(ClearingResult {
                payments: p,
                society_equity,
                method: ClearingMethod::FixedPoint,
                iterations: it,
            }));
        }
    }
    Err(Error::Numeric(format!(
        "fixed-point iteration did not converge in {} steps",
        tol::FIXED_POINT_ITERATION_CAP
    )))
}

/// LP P(x): max sum a_i0 p_i s.t. p_i - sum_j a_ji p_j <= x_i, 0 <= p <= pbar.
/// Row i has right-hand side x_i.
pub fn en_program(net: &LiabilityNetwork, x: &[f64]) -> LinearProgram {
    let d = net.dim();
    let mut lp = LinearProgram::new(Sense::Maximize);
    for i in 0..d {
        lp.add_var(0.0, net.total_liability(i + 1), net.relative(i + 1, 0));
    }
    for i in 0..d {
        let mut row = vec![(i, 1.0)];
        for j in 0..d {
            let a = net.relative(j + 1, i + 1);
            if j != i && a != 0.0 {
                row.push((j, -a));
            }
        }
        lp.add_row(row, RowKind::Le, x[i]);
    }
    lp
}

fn outcome_from_lp(sol: LpSolution, method: ClearingMethod) -> Result<ClearingOutcome> {
    match sol.status {
        LpStatus::Optimal => Ok(ClearingOutcome::Cleared(ClearingResult {
            society_equity: sol.objective,
            payments: sol.x,
            method,
            iterations: sol.iterations,
        })),
        LpStatus::Infeasible => Ok(ClearingOutcome::Infeasible { certificate: sol.farkas }),
        LpStatus::Unbounded => Err(Error::Numeric("clearing LP reported unbounded on a bounded box".into())),
    }
}

pub fn clear_lp(net: &LiabilityNetwork, x: &[f64]) -> Result<ClearingOutcome> {
    check_len(x, net.dim())?;
    outcome_from_lp(solve_lp(&en_program(net, x))?, ClearingMethod::LinearProgram)
}

/// Network in which every interbank position is replaced by its net
/// position against a central counterparty (index d+1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcpNetwork {
    /// l_{i0}
    pub to_society: Vec<f64>,
    /// l_{i,d+1}
    pub to_ccp: Vec<f64>,
    /// l_{d+1,i}
    pub from_ccp: Vec<f64>,
}

/// Net every bilateral position through a CCP; liabilities to society are kept.
pub fn ccp_transform(net: &LiabilityNetwork) -> CcpNetwork {
    let d = net.dim();
    let mut to_ccp = vec![0.0; d];
    let mut from_ccp = vec![0.0; d];
    for i in 1..=d {
        let owed: f64 = (1..=d).map(|j| net.liability(i, j)).sum();
        let due: f64 = (1..=d).map(|j| net.liability(j, i)).sum();
        let netted = owed - due;
        to_ccp[i - 1] = netted.max(0.0);
        from_ccp[i - 1] = (-netted).max(0.0);
    }
    CcpNetwork { to_society: (1..=d).map(|i| net.liability(i, 0)).collect(), to_ccp, from_ccp }
}

impl CcpNetwork {
    /// Number of institutions, CCP excluded.
    pub fn dim(&self) -> usize {
        self.to_society.len()
    }

    pub fn pbar(&self, i: usize) -> f64 {
        self.to_society[i] + self.to_ccp[i]
    }

    pub fn ccp_pbar(&self) -> f64 {
        self.from_ccp.iter().sum()
    }

    /// Share of the CCP's payments owed to institution i; zero under perfect netting.
    pub fn ccp_share(&self, i: usize) -> f64 {
        let t = self.ccp_pbar();
        if t > 0.0 {
            self.from_ccp[i] / t
        } else {
            0.0
        }
    }

    pub fn society_fraction(&self, i: usize) -> f64 {
        self.to_society[i] / self.pbar(i)
    }

    pub fn ccp_fraction(&self, i: usize) -> f64 {
        self.to_ccp[i] / self.pbar(i)
    }

    pub fn max_society_payment(&self) -> f64 {
        self.to_society.iter().sum()
    }

    /// The (d+2)x(d+2) liability matrix, index 0 society and d+1 the CCP.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut m = vec![vec![0.0; d + 2]; d + 2];
        for i in 0..d {
            m[i + 1][0] = self.to_society[i];
            m[i + 1][d + 1] = self.to_ccp[i];
            m[d + 1][i + 1] = self.from_ccp[i];
        }
        m
    }
}

/// LP P~(x) over (p_1..p_d, p_ccp). Rows have right-hand sides x_1..x_{d+1}.
pub fn ccp_program(ccp: &CcpNetwork, x: &[f64]) -> LinearProgram {
    let d = ccp.dim();
    let mut lp = LinearProgram::new(Sense::Maximize);
    for i in 0..d {
        lp.add_var(0.0, ccp.pbar(i), ccp.society_fraction(i));
    }
    let c = lp.add_var(0.0, ccp.ccp_pbar(), 0.0);
    for i in 0..d {
        let mut row = vec![(i, 1.0)];
        let s = ccp.ccp_share(i);
        if s != 0.0 {
            row.push((c, -s));
        }
        lp.add_row(row, RowKind::Le, x[i]);
    }
    let mut row = vec![(c, 1.0)];
    for i in 0..d {
        let f = ccp.ccp_fraction(i);
        if f != 0.0 {
            row.push((i, -f));
        }
    }
    lp.add_row(row, RowKind::Le, x[d]);
    lp
}

/// Residuals of the two CCP clearing equations at p.
pub fn ccp_fixed_point_residual(ccp: &CcpNetwork, x: &[f64], p: &[f64]) -> f64 {
    let d = ccp.dim();
    let pc = p[d];
    let mut r = 0.0f64;
    for i in 0..d {
        let target = ccp.pbar(i).min(x[i] + ccp.ccp_share(i) * pc);
        r = r.max((p[i] - target).abs());
    }
    let inflow: f64 = (0..d).map(|i| ccp.ccp_fraction(i) * p[i]).sum();
    r.max((pc - ccp.ccp_pbar().min(x[d] + inflow)).abs())
}

/// Solve P~(x), then reset the CCP payment to min(its obligations, x_ccp +
/// inflow) so that the result is a clearing vector.
pub fn clear_ccp(ccp: &CcpNetwork, x: &[f64]) -> Result<ClearingOutcome> {
    let d = ccp.dim();
    check_len(x, d + 1)?;
    let sol = solve_lp(&ccp_program(ccp, x))?;
    let lp_objective = sol.objective;
    let outcome = outcome_from_lp(sol, ClearingMethod::CcpRepaired)?;
    let ClearingOutcome::Cleared(mut res) = outcome else { return Ok(outcome) };
    let inflow: f64 = (0..d).map(|i| ccp.ccp_fraction(i) * res.payments[i]).sum();
    res.payments[d] = ccp.ccp_pbar().min(x[d] + inflow);
    let residual = ccp_fixed_point_residual(ccp, x, &res.payments);
    if residual > tol::CCP_REPAIR {
        return Err(Error::Numeric(format!("CCP repair left a fixed-point residual of {residual:e}")));
    }
    res.society_equity = (0..d).map(|i| ccp.society_fraction(i) * res.payments[i]).sum();
    if (res.society_equity - lp_objective).abs() > 1e-10 * (1.0 + lp_objective.abs()) {
        return Err(Error::Numeric("CCP repair changed the society payment".into()));
    }
    Ok(ClearingOutcome::Cleared(res))
}
