//! Aggregation functions Lambda: R^d -> R u {-inf} and their conjugates
//! g(z) = sup_x (Lambda(x) - z'x).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clearing::{ccp_program, ccp_transform, en_program, CcpNetwork};
use crate::error::{dimension, validation, Error, Result};
use crate::extended::ExtendedReal;
use crate::model::LiabilityNetwork;
use crate::optimizer::{solve_lp, FarkasCertificate, LinearProgram, LpStatus, RowKind, Sense};
use crate::tolerances as tol;

/// Production economy: Lambda(x) = max p'u s.t. Au <= x, u >= 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceAllocation {
    /// d x m consumption matrix, A[i][j] = resource i used per unit of task j.
    pub consumption: Vec<Vec<f64>>,
    pub profit: Vec<f64>,
}

impl ResourceAllocation {
    pub fn new(consumption: Vec<Vec<f64>>, profit: Vec<f64>) -> Result<Self> {
        let d = consumption.len();
        let m = profit.len();
        if d == 0 || m == 0 {
            return Err(validation("resource allocation needs at least one resource and one task"));
        }
        if d > tol::MAX_DIM {
            return Err(validation(format!("{d} resources exceeds the limit of {}", tol::MAX_DIM)));
        }
        if consumption.iter().any(|r| r.len() != m) {
            return Err(dimension("consumption matrix rows must have one entry per task"));
        }
        if consumption.iter().flatten().chain(&profit).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(validation("consumption and profit must be nonnegative and finite"));
        }
        for j in 0..m {
            if profit[j] > 0.0 && consumption.iter().all(|r| r[j] == 0.0) {
                return Err(validation(format!(
                    "task {j} has positive profit but consumes nothing, so the aggregation is unbounded"
                )));
            }
        }
        if profit.iter().all(|&p| p == 0.0) {
            return Err(validation("all profits are zero; the aggregation would be constant"));
        }
        Ok(Self { consumption, profit })
    }

    pub fn dim(&self) -> usize {
        self.consumption.len()
    }

    fn program(&self, x: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Maximize);
        for &p in &self.profit {
            lp.add_var(0.0, f64::INFINITY, p);
        }
        for (i, r) in self.consumption.iter().enumerate() {
            lp.add_row(r.iter().cloned().enumerate().filter(|(_, v)| *v != 0.0).collect(), RowKind::Le, x[i]);
        }
        lp
    }
}

/// Network flow: Lambda(x) = max sum_p u_p over path flows u (free in sign)
/// with arc loads sum_{p ∋ a} u_p <= x_a.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxFlowPaths {
    pub arcs: Vec<(usize, usize)>,
    pub source: usize,
    pub sink: usize,
    /// Simple source-sink paths as lists of arc indices.
    pub paths: Vec<Vec<usize>>,
    /// A point of the conjugate domain {z >= 0 : every path sums to 1}.
    #[serde(skip)]
    domain_point: Vec<f64>,
}

impl MaxFlowPaths {
    pub fn new(arcs: Vec<(usize, usize)>, source: usize, sink: usize) -> Result<Self> {
        if arcs.is_empty() {
            return Err(validation("arc set is empty"));
        }
        if arcs.len() > tol::MAX_DIM {
            return Err(validation(format!("{} arcs exceeds the limit of {}", arcs.len(), tol::MAX_DIM)));
        }
        if source == sink {
            return Err(validation("source and sink must differ"));
        }
        for (k, &(a, b)) in arcs.iter().enumerate() {
            if a == b {
                return Err(validation(format!("arc {k} is a self-loop")));
            }
            if arcs[..k].contains(&(a, b)) {
                return Err(validation(format!("arc {k} ({a},{b}) is duplicated")));
            }
        }
        let paths = enumerate_paths(&arcs, source, sink)?;
        if paths.is_empty() {
            return Err(validation("no path from source to sink"));
        }
        let mut on_path = vec![false; arcs.len()];
        for p in &paths {
            for &a in p {
                on_path[a] = true;
            }
        }
        if let Some(a) = on_path.iter().position(|b| !b) {
            return Err(validation(format!("arc {a} lies on no simple source-sink path")));
        }
        let mut me = Self { arcs, source, sink, paths, domain_point: Vec::new() };
        me.domain_point = me
            .domain_vertex(&vec![1.0; me.arcs.len()])?
            .ok_or_else(|| validation("no arc prices make every path cost exactly one; the flow value is unbounded"))?;
        Ok(me)
    }

    pub fn dim(&self) -> usize {
        self.arcs.len()
    }

    fn program(&self, x: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Maximize);
        for _ in &self.paths {
            lp.add_free_var(1.0);
        }
        for a in 0..self.arcs.len() {
            let row: Vec<(usize, f64)> =
                self.paths.iter().enumerate().filter(|(_, p)| p.contains(&a)).map(|(k, _)| (k, 1.0)).collect();
            lp.add_row(row, RowKind::Le, x[a]);
        }
        lp
    }

    /// Vertex of {z >= 0 : each path sums to 1} minimizing c'z.
    fn domain_vertex(&self, c: &[f64]) -> Result<Option<Vec<f64>>> {
        let mut lp = LinearProgram::new(Sense::Minimize);
        for &ci in c {
            lp.add_var(0.0, f64::INFINITY, ci);
        }
        for p in &self.paths {
            lp.add_row(p.iter().map(|&a| (a, 1.0)).collect(), RowKind::Eq, 1.0);
        }
        let sol = solve_lp(&lp)?;
        Ok(match sol.status {
            LpStatus::Optimal => Some(sol.x.iter().map(|v| v.max(0.0)).collect()),
            _ => None,
        })
    }
}

fn enumerate_paths(arcs: &[(usize, usize)], source: usize, sink: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut stack_arcs = Vec::new();
    let mut visited = vec![source];
    fn dfs(
        arcs: &[(usize, usize)],
        node: usize,
        sink: usize,
        visited: &mut Vec<usize>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        if node == sink {
            if out.len() >= tol::MAX_PATHS {
                return Err(validation(format!("more than {} simple paths", tol::MAX_PATHS)));
            }
            out.push(path.clone());
            return Ok(());
        }
        for (k, &(a, b)) in arcs.iter().enumerate() {
            if a == node && !visited.contains(&b) {
                visited.push(b);
                path.push(k);
                dfs(arcs, b, sink, visited, path, out)?;
                path.pop();
                visited.pop();
            }
        }
        Ok(())
    }
    dfs(arcs, source, sink, &mut visited, &mut stack_arcs, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregationModel {
    TotalPl { d: usize },
    TotalLoss { d: usize },
    Entropic { d: usize },
    EisenbergNoe { network: LiabilityNetwork },
    EisenbergNoeCcp { network: CcpNetwork },
    ResourceAllocation(ResourceAllocation),
    MaxFlow(MaxFlowPaths),
}

/// Set of finite values of Lambda, plus whether -inf is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueRange {
    pub lower: ExtendedReal,
    pub upper: ExtendedReal,
    pub lower_attained: bool,
    pub upper_attained: bool,
    pub takes_neg_infinity: bool,
}

impl ValueRange {
    pub fn interior_contains(&self, v: f64) -> bool {
        self.lower.to_f64() < v && v < self.upper.to_f64()
    }

    pub fn is_whole_line(&self) -> bool {
        self.lower == ExtendedReal::NegInf && self.upper == ExtendedReal::PosInf
    }
}

/// Lambda at a point together with first-order information.
#[derive(Debug, Clone)]
pub enum AggEval {
    Finite { value: f64, supergradient: Vec<f64> },
    /// Lambda(x) = -inf; any x in the domain satisfies the certificate.
    Infeasible(FarkasCertificate),
}

/// Shape of the conjugate, used to pick closed forms for penalties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConjugateShape {
    /// Indicator of z = 1.
    UnitVector,
    /// Indicator of z in [0,1]^d.
    UnitBox,
    /// sum z log z.
    Entropy,
    /// sum_r (a_r'z + b_r)^+ on z >= 0.
    PiecewiseLinear,
    /// Indicator of {z >= 0 : A'z >= p}.
    Covering,
    /// Indicator of {z >= 0 : every path sums to 1}.
    PathUnit,
}

fn indicator(ok: bool) -> ExtendedReal {
    if ok {
        ExtendedReal::Finite(0.0)
    } else {
        ExtendedReal::PosInf
    }
}

impl AggregationModel {
    pub fn total_pl(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(AggregationModel::TotalPl { d })
    }

    pub fn total_loss(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(AggregationModel::TotalLoss { d })
    }

    pub fn entropic(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(AggregationModel::Entropic { d })
    }

    pub fn eisenberg_noe(network: LiabilityNetwork) -> Self {
        AggregationModel::EisenbergNoe { network }
    }

    pub fn eisenberg_noe_ccp(network: &LiabilityNetwork) -> Self {
        AggregationModel::EisenbergNoeCcp { network: ccp_transform(network) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AggregationModel::TotalPl { .. } => "total_pl",
            AggregationModel::TotalLoss { .. } => "total_loss",
            AggregationModel::Entropic { .. } => "entropic",
            AggregationModel::EisenbergNoe { .. } => "eisenberg_noe",
            AggregationModel::EisenbergNoeCcp { .. } => "eisenberg_noe_ccp",
            AggregationModel::ResourceAllocation(_) => "resource_allocation",
            AggregationModel::MaxFlow(_) => "max_flow",
        }
    }

    /// Number of inputs d (for the CCP model: institutions plus the CCP).
    pub fn dim(&self) -> usize {
        match self {
            AggregationModel::TotalPl { d } | AggregationModel::TotalLoss { d } | AggregationModel::Entropic { d } => *d,
            AggregationModel::EisenbergNoe { network } => network.dim(),
            AggregationModel::EisenbergNoeCcp { network } => network.dim() + 1,
            AggregationModel::ResourceAllocation(r) => r.dim(),
            AggregationModel::MaxFlow(m) => m.dim(),
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        !matches!(self, AggregationModel::Entropic { .. })
    }

    pub fn positively_homogeneous(&self) -> bool {
        matches!(
            self,
            AggregationModel::TotalPl { .. }
                | AggregationModel::TotalLoss { .. }
                | AggregationModel::ResourceAllocation(_)
                | AggregationModel::MaxFlow(_)
        )
    }

    pub fn conjugate_shape(&self) -> ConjugateShape {
        match self {
            AggregationModel::TotalPl { .. } => ConjugateShape::UnitVector,
            AggregationModel::TotalLoss { .. } => ConjugateShape::UnitBox,
            AggregationModel::Entropic { .. } => ConjugateShape::Entropy,
            AggregationModel::EisenbergNoe { .. } | AggregationModel::EisenbergNoeCcp { .. } => {
                ConjugateShape::PiecewiseLinear
            }
            AggregationModel::ResourceAllocation(_) => ConjugateShape::Covering,
            AggregationModel::MaxFlow(_) => ConjugateShape::PathUnit,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(dimension(format!("input of length {} for dimension {}", x.len(), self.dim())));
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("NaN input".into()));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ExtendedReal> {
        self.check_input(x)?;
        Ok(match self {
            AggregationModel::TotalPl { .. } => ExtendedReal::Finite(x.iter().sum()),
            AggregationModel::TotalLoss { .. } => ExtendedReal::Finite(-x.iter().map(|v| (-v).max(0.0)).sum::<f64>()),
            AggregationModel::Entropic { .. } => {
                ExtendedReal::Finite(-x.iter().map(|v| (-v - 1.0).exp()).sum::<f64>())
            }
            _ => match self.evaluate_full(x)? {
                AggEval::Finite { value, .. } => ExtendedReal::Finite(value),
                AggEval::Infeasible(_) => ExtendedReal::NegInf,
            },
        })
    }

    /// Lambda(x) with a supergradient, or an infeasibility certificate.
    pub fn evaluate_full(&self, x: &[f64]) -> Result<AggEval> {
        self.check_input(x)?;
        let lp = match self {
            AggregationModel::TotalPl { d } => {
                return Ok(AggEval::Finite { value: x.iter().sum(), supergradient: vec![1.0; *d] })
            }
            AggregationModel::TotalLoss { .. } => {
                return Ok(AggEval::Finite {
                    value: -x.iter().map(|v| (-v).max(0.0)).sum::<f64>(),
                    supergradient: x.iter().map(|&v| if v < 0.0 { 1.0 } else { 0.0 }).collect(),
                })
            }
            AggregationModel::Entropic { .. } => {
                let e: Vec<f64> = x.iter().map(|v| (-v - 1.0).exp()).collect();
                return Ok(AggEval::Finite { value: -e.iter().sum::<f64>(), supergradient: e });
            }
            AggregationModel::EisenbergNoe { network } => en_program(network, x),
            AggregationModel::EisenbergNoeCcp { network } => ccp_program(network, x),
            AggregationModel::ResourceAllocation(r) => r.program(x),
            AggregationModel::MaxFlow(m) => m.program(x),
        };
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok(AggEval::Finite { value: sol.objective, supergradient: sol.duals }),
            LpStatus::Infeasible => sol
                .farkas
                .map(AggEval::Infeasible)
                .ok_or_else(|| Error::Numeric("infeasible aggregation LP without certificate".into())),
            LpStatus::Unbounded => Err(Error::Numeric(format!("{} aggregation LP is unbounded", self.name()))),
        }
    }

    /// g(z) = sup_x (Lambda(x) - z'x), +inf off the nonnegative orthant.
    pub fn conjugate(&self, z: &[f64]) -> Result<ExtendedReal> {
        if z.len() != self.dim() {
            return Err(dimension(format!("dual point of length {} for dimension {}", z.len(), self.dim())));
        }
        if z.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("NaN dual point".into()));
        }
        let t = tol::CONJUGATE;
        if z.iter().any(|&v| v < -t) {
            return Ok(ExtendedReal::PosInf);
        }
        Ok(match self {
            AggregationModel::TotalPl { .. } => indicator(z.iter().all(|v| (v - 1.0).abs() <= t)),
            AggregationModel::TotalLoss { .. } => indicator(z.iter().all(|&v| v <= 1.0 + t)),
            AggregationModel::Entropic { .. } => {
                ExtendedReal::Finite(z.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum())
            }
            AggregationModel::EisenbergNoe { .. } | AggregationModel::EisenbergNoeCcp { .. } => {
                let terms = self.piecewise_linear_terms().expect("network conjugate is piecewise linear");
                ExtendedReal::Finite(
                    terms.iter().map(|(a, b)| (a.iter().zip(z).map(|(x, y)| x * y).sum::<f64>() + b).max(0.0)).sum(),
                )
            }
            AggregationModel::ResourceAllocation(r) => {
                let m = r.profit.len();
                indicator((0..m).all(|j| {
                    let cover: f64 = (0..r.dim()).map(|i| r.consumption[i][j] * z[i]).sum();
                    cover >= r.profit[j] - t * (1.0 + r.profit[j])
                }))
            }
            AggregationModel::MaxFlow(mf) => {
                indicator(mf.paths.iter().all(|p| (p.iter().map(|&a| z[a]).sum::<f64>() - 1.0).abs() <= t))
            }
        })
    }

    /// For network models, g(z) = sum_r (a_r'z + b_r)^+ on z >= 0.
    pub fn piecewise_linear_terms(&self) -> Option<Vec<(Vec<f64>, f64)>> {
        match self {
            AggregationModel::EisenbergNoe { network } => {
                let d = network.dim();
                Some(
                    (1..=d)
                        .map(|i| {
                            let mut a = vec![0.0; d];
                            for j in 1..=d {
                                let l = network.liability(i, j);
                                a[j - 1] += l;
                                a[i - 1] -= l;
                            }
                            let l0 = network.liability(i, 0);
                            a[i - 1] -= l0;
                            (a, l0)
                        })
                        .collect(),
                )
            }
            AggregationModel::EisenbergNoeCcp { network } => {
                let d = network.dim();
                let mut terms: Vec<(Vec<f64>, f64)> = (0..d)
                    .map(|i| {
                        let mut a = vec![0.0; d + 1];
                        a[i] = -(network.to_society[i] + network.to_ccp[i]);
                        a[d] = network.to_ccp[i];
                        (a, network.to_society[i])
                    })
                    .collect();
                let mut a = vec![0.0; d + 1];
                for i in 0..d {
                    a[i] = network.from_ccp[i];
                }
                a[d] = -network.ccp_pbar();
                terms.push((a, 0.0));
                Some(terms)
            }
            _ => None,
        }
    }

    pub fn value_range(&self) -> ValueRange {
        use ExtendedReal::*;
        match self {
            AggregationModel::TotalPl { .. } | AggregationModel::MaxFlow(_) => ValueRange {
                lower: NegInf,
                upper: PosInf,
                lower_attained: false,
                upper_attained: false,
                takes_neg_infinity: false,
            },
            AggregationModel::TotalLoss { .. } => ValueRange {
                lower: NegInf,
                upper: Finite(0.0),
                lower_attained: false,
                upper_attained: true,
                takes_neg_infinity: false,
            },
            AggregationModel::Entropic { .. } => ValueRange {
                lower: NegInf,
                upper: Finite(0.0),
                lower_attained: false,
                upper_attained: false,
                takes_neg_infinity: false,
            },
            AggregationModel::EisenbergNoe { network } => ValueRange {
                lower: Finite(0.0),
                upper: Finite(network.max_society_payment()),
                lower_attained: true,
                upper_attained: true,
                takes_neg_infinity: true,
            },
            AggregationModel::EisenbergNoeCcp { network } => ValueRange {
                lower: Finite(0.0),
                upper: Finite(network.max_society_payment()),
                lower_attained: true,
                upper_attained: true,
                takes_neg_infinity: true,
            },
            AggregationModel::ResourceAllocation(_) => ValueRange {
                lower: Finite(0.0),
                upper: PosInf,
                lower_attained: true,
                upper_attained: false,
                takes_neg_infinity: true,
            },
        }
    }

    /// Add a variable y with y <= Lambda(c + z) to an LP in which `z`
    /// holds the indices of the shift variables. Returns y's index.
    pub fn add_hypograph(&self, lp: &mut LinearProgram, c: &[f64], z: &[usize]) -> Result<usize> {
        let d = self.dim();
        if c.len() != d || z.len() != d {
            return Err(dimension("hypograph data has the wrong length"));
        }
        let y = lp.add_free_var(0.0);
        match self {
            AggregationModel::TotalPl { .. } => {
                let mut row = vec![(y, 1.0)];
                row.extend(z.iter().map(|&j| (j, -1.0)));
                lp.add_row(row, RowKind::Le, c.iter().sum());
            }
            AggregationModel::TotalLoss { .. } => {
                let mut top = vec![(y, 1.0)];
                for i in 0..d {
                    let s = lp.add_var(0.0, f64::INFINITY, 0.0);
                    lp.add_row(vec![(s, -1.0), (z[i], -1.0)], RowKind::Le, c[i]);
                    top.push((s, 1.0));
                }
                lp.add_row(top, RowKind::Le, 0.0);
            }
            AggregationModel::Entropic { .. } => {
                return Err(Error::Precondition("entropic aggregation is not polyhedral".into()))
            }
            AggregationModel::EisenbergNoe { network } => {
                let p: Vec<usize> =
                    (1..=d).map(|i| lp.add_var(0.0, network.total_liability(i), 0.0)).collect();
                for i in 0..d {
                    let mut row = vec![(p[i], 1.0), (z[i], -1.0)];
                    for j in 0..d {
                        let a = network.relative(j + 1, i + 1);
                        if a != 0.0 {
                            row.push((p[j], -a));
                        }
                    }
                    lp.add_row(row, RowKind::Le, c[i]);
                }
                let mut top = vec![(y, 1.0)];
                top.extend((0..d).map(|i| (p[i], -network.relative(i + 1, 0))));
                lp.add_row(top, RowKind::Le, 0.0);
            }
            AggregationModel::EisenbergNoeCcp { network } => {
                let n = network.dim();
                let p: Vec<usize> = (0..n).map(|i| lp.add_var(0.0, network.pbar(i), 0.0)).collect();
                let pc = lp.add_var(0.0, network.ccp_pbar(), 0.0);
                for i in 0..n {
                    let mut row = vec![(p[i], 1.0), (z[i], -1.0)];
                    let s = network.ccp_share(i);
                    if s != 0.0 {
                        row.push((pc, -s));
                    }
                    lp.add_row(row, RowKind::Le, c[i]);
                }
                let mut row = vec![(pc, 1.0), (z[n], -1.0)];
                for i in 0..n {
                    let f = network.ccp_fraction(i);
                    if f != 0.0 {
                        row.push((p[i], -f));
                    }
                }
                lp.add_row(row, RowKind::Le, c[n]);
                let mut top = vec![(y, 1.0)];
                top.extend((0..n).map(|i| (p[i], -network.society_fraction(i))));
                lp.add_row(top, RowKind::Le, 0.0);
            }
            AggregationModel::ResourceAllocation(r) => {
                let u: Vec<usize> = r.profit.iter().map(|_| lp.add_var(0.0, f64::INFINITY, 0.0)).collect();
                for i in 0..d {
                    let mut row = vec![(z[i], -1.0)];
                    row.extend(
                        r.consumption[i].iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (u[j], *v)),
                    );
                    lp.add_row(row, RowKind::Le, c[i]);
                }
                let mut top = vec![(y, 1.0)];
                top.extend(r.profit.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (u[j], -v)));
                lp.add_row(top, RowKind::Le, 0.0);
            }
            AggregationModel::MaxFlow(mf) => {
                let u: Vec<usize> = mf.paths.iter().map(|_| lp.add_free_var(0.0)).collect();
                for a in 0..d {
                    let mut row = vec![(z[a], -1.0)];
                    row.extend(mf.paths.iter().enumerate().filter(|(_, p)| p.contains(&a)).map(|(k, _)| (u[k], 1.0)));
                    lp.add_row(row, RowKind::Le, c[a]);
                }
                let mut top = vec![(y, 1.0)];
                top.extend(u.iter().map(|&k| (k, -1.0)));
                lp.add_row(top, RowKind::Le, 0.0);
            }
        }
        Ok(y)
    }

    /// A direction r with w'r < 0 along which Lambda does not decrease
    /// asymptotically (Lambda_inf(r) >= 0), if one exists. Its existence
    /// makes every scalarization in direction w equal to -inf.
    pub fn unbounded_direction(&self, w: &[f64]) -> Result<Option<Vec<f64>>> {
        let d = self.dim();
        if w.len() != d {
            return Err(dimension("direction has the wrong length"));
        }
        match self {
            AggregationModel::TotalPl { .. } => {
                let (imax, wmax) = w.iter().cloned().enumerate().fold((0, f64::MIN), |a, (i, v)| if v > a.1 { (i, v) } else { a });
                let (imin, wmin) = w.iter().cloned().enumerate().fold((0, f64::MAX), |a, (i, v)| if v < a.1 { (i, v) } else { a });
                if wmax - wmin > 1e-12 * wmax.abs().max(1.0) {
                    let mut r = vec![0.0; d];
                    r[imax] = -1.0;
                    r[imin] = 1.0;
                    Ok(Some(r))
                } else {
                    Ok(None)
                }
            }
            AggregationModel::MaxFlow(mf) => {
                let mut lp = LinearProgram::new(Sense::Minimize);
                let r: Vec<usize> = w.iter().map(|&wi| lp.add_var(-1.0, 1.0, wi)).collect();
                let u: Vec<usize> = mf.paths.iter().map(|_| lp.add_free_var(0.0)).collect();
                for a in 0..d {
                    let mut row = vec![(r[a], -1.0)];
                    row.extend(mf.paths.iter().enumerate().filter(|(_, p)| p.contains(&a)).map(|(k, _)| (u[k], 1.0)));
                    lp.add_row(row, RowKind::Le, 0.0);
                }
                lp.add_row(u.iter().map(|&k| (k, 1.0)).collect(), RowKind::Ge, 0.0);
                let sol = solve_lp(&lp)?;
                if sol.status == LpStatus::Optimal && sol.objective < -1e-9 {
                    Ok(Some(sol.x[..d].to_vec()))
                } else {
                    Ok(None)
                }
            }
            // Lambda_inf is -inf outside the nonnegative orthant and w >= 0
            _ => Ok(None),
        }
    }

    /// A random point of dom g.
    pub fn sample_conjugate_domain<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let d = self.dim();
        Ok(match self {
            AggregationModel::TotalPl { .. } => vec![1.0; d],
            AggregationModel::TotalLoss { .. } => (0..d).map(|_| rng.gen::<f64>()).collect(),
            AggregationModel::Entropic { .. } => (0..d).map(|_| (rng.gen_range(0.1f64.ln()..10f64.ln())).exp()).collect(),
            AggregationModel::EisenbergNoe { .. } | AggregationModel::EisenbergNoeCcp { .. } => {
                (0..d).map(|_| 2.0 * rng.gen::<f64>()).collect()
            }
            AggregationModel::ResourceAllocation(r) => {
                let v: Vec<f64> = (0..d).map(|_| 0.1 + rng.gen::<f64>()).collect();
                let mut kappa = 0.0f64;
                for (j, &p) in r.profit.iter().enumerate() {
                    if p > 0.0 {
                        let cover: f64 = (0..d).map(|i| r.consumption[i][j] * v[i]).sum();
                        kappa = kappa.max(p / cover);
                    }
                }
                let scale = kappa * (1.0 + rng.gen::<f64>());
                v.iter().map(|x| x * scale).collect()
            }
            AggregationModel::MaxFlow(mf) => {
                let mut acc = vec![0.0; d];
                let mut total = 0.0;
                for _ in 0..3 {
                    let c: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                    let v = mf.domain_vertex(&c)?.unwrap_or_else(|| mf.domain_point.clone());
                    let t: f64 = rng.gen::<f64>() + 0.1;
                    for (a, b) in acc.iter_mut().zip(&v) {
                        *a += t * b;
                    }
                    total += t;
                }
                acc.iter().map(|v| v / total).collect()
            }
        })
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > tol::MAX_DIM {
        return Err(validation(format!("dimension must be in 1..={}", tol::MAX_DIM)));
    }
    Ok(())
}

/// JSON configuration of an aggregation model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AggregationConfig {
    TotalPl { d: Option<usize> },
    TotalLoss { d: Option<usize> },
    Entropic { d: Option<usize> },
    EisenbergNoe { liabilities: Option<Vec<Vec<f64>>> },
    EisenbergNoeCcp { liabilities: Option<Vec<Vec<f64>>> },
    ResourceAllocation { consumption: Vec<Vec<f64>>, profit: Vec<f64> },
    MaxFlow { arcs: Vec<(usize, usize)>, source: usize, sink: usize },
}

impl AggregationConfig {
    /// Build the model. `d` is the wealth dimension and `network` a
    /// liability matrix supplied separately (used when the config omits it).
    pub fn build(&self, d: usize, network: Option<&[Vec<f64>]>) -> Result<AggregationModel> {
        let net = |inline: &Option<Vec<Vec<f64>>>| -> Result<LiabilityNetwork> {
            let m = inline
                .clone()
                .or_else(|| network.map(|n| n.to_vec()))
                .ok_or_else(|| validation("network aggregation needs a liability matrix"))?;
            LiabilityNetwork::new(m)
        };
        let model = match self {
            AggregationConfig::TotalPl { d: k } => AggregationModel::total_pl(k.unwrap_or(d))?,
            AggregationConfig::TotalLoss { d: k } => AggregationModel::total_loss(k.unwrap_or(d))?,
            AggregationConfig::Entropic { d: k } => AggregationModel::entropic(k.unwrap_or(d))?,
            AggregationConfig::EisenbergNoe { liabilities } => AggregationModel::eisenberg_noe(net(liabilities)?),
            AggregationConfig::EisenbergNoeCcp { liabilities } => {
                AggregationModel::eisenberg_noe_ccp(&net(liabilities)?)
            }
            AggregationConfig::ResourceAllocation { consumption, profit } => {
                AggregationModel::ResourceAllocation(ResourceAllocation::new(consumption.clone(), profit.clone())?)
            }
            AggregationConfig::MaxFlow { arcs, source, sink } => {
                AggregationModel::MaxFlow(MaxFlowPaths::new(arcs.clone(), *source, *sink)?)
            }
        };
        if model.dim() != d {
            return Err(dimension(format!(
                "{} aggregation expects {} components but wealth has {d}",
                model.name(),
                model.dim()
            )));
        }
        Ok(model)
    }
}
