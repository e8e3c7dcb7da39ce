//! Dense two-phase revised simplex.
//!
//! Problems are stated with bounded variables and `<=`, `>=`, `=` rows and
//! converted to standard form `min c'x, Ax = b, x >= 0` internally.
//! Pricing is Dantzig's rule; after a run of degenerate pivots the solver
//! switches to Bland's rule until progress resumes, which rules out cycling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tolerances as tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self { sense, objective: Vec::new(), lower: Vec::new(), upper: Vec::new(), rows: Vec::new() }
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_free_var(&mut self, cost: f64) -> usize {
        self.add_var(f64::NEG_INFINITY, f64::INFINITY, cost)
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, kind, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Proof of infeasibility: every right-hand side `b` for which the program
/// (same matrix and bounds) is feasible satisfies
/// `row_weights . b + constant <= 0`. The solved rhs violates it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarkasCertificate {
    pub row_weights: Vec<f64>,
    pub constant: f64,
}

impl FarkasCertificate {
    pub fn evaluate(&self, rhs: &[f64]) -> f64 {
        self.row_weights.iter().zip(rhs).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// d objective / d rhs for each row, in the problem's own sense.
    pub duals: Vec<f64>,
    pub farkas: Option<FarkasCertificate>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub complementarity_residual: f64,
}

#[derive(Clone, Copy)]
enum VarMap {
    Shift { col: usize, at: f64 },
    Reflect { col: usize, at: f64 },
    Split { pos: usize, neg: usize },
}

struct Standard {
    m: usize,
    ncols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    first_artificial: usize,
    row_sign: Vec<f64>,
    row_const: Vec<f64>,
    /// For upper-bound rows, (row index, u - l).
    bound_rows: Vec<(usize, f64)>,
    map: Vec<VarMap>,
    basis: Vec<usize>,
    cost_offset: f64,
}

impl Standard {
    fn col(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |i| self.a[i * self.ncols + j])
    }
}

fn validate(lp: &LinearProgram) -> Result<()> {
    let n = lp.num_vars();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::Dimension("bound vectors differ from variable count".into()));
    }
    for j in 0..n {
        if lp.objective[j].is_nan() || !lp.objective[j].is_finite() {
            return Err(Error::Numeric(format!("objective coefficient {j} is not finite")));
        }
        if lp.lower[j].is_nan() || lp.upper[j].is_nan() || lp.lower[j] == f64::INFINITY || lp.upper[j] == f64::NEG_INFINITY {
            return Err(Error::Numeric(format!("bounds of variable {j} are invalid")));
        }
    }
    for (i, r) in lp.rows.iter().enumerate() {
        if !r.rhs.is_finite() {
            return Err(Error::Numeric(format!("rhs of row {i} is not finite")));
        }
        for &(j, v) in &r.coeffs {
            if j >= n {
                return Err(Error::Dimension(format!("row {i} references variable {j}")));
            }
            if !v.is_finite() {
                return Err(Error::Numeric(format!("coefficient ({i},{j}) is not finite")));
            }
        }
    }
    Ok(())
}

fn standardize(lp: &LinearProgram) -> std::result::Result<Standard, ()> {
    let n = lp.num_vars();
    let internal_cost: Vec<f64> = match lp.sense {
        Sense::Minimize => lp.objective.clone(),
        Sense::Maximize => lp.objective.iter().map(|c| -c).collect(),
    };
    let mut map = Vec::with_capacity(n);
    let mut ncols_struct = 0usize;
    let mut bound_vars = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l > u {
            return Err(());
        }
        if l.is_finite() {
            map.push(VarMap::Shift { col: ncols_struct, at: l });
            if u.is_finite() {
                bound_vars.push((ncols_struct, u - l));
            }
            ncols_struct += 1;
        } else if u.is_finite() {
            map.push(VarMap::Reflect { col: ncols_struct, at: u });
            ncols_struct += 1;
        } else {
            map.push(VarMap::Split { pos: ncols_struct, neg: ncols_struct + 1 });
            ncols_struct += 2;
        }
    }
    let m_orig = lp.rows.len();
    let m = m_orig + bound_vars.len();
    let n_slack = lp.rows.iter().filter(|r| r.kind != RowKind::Eq).count() + bound_vars.len();

    // dense rows before slacks
    let mut dense = vec![vec![0.0; ncols_struct]; m];
    let mut rhs = vec![0.0; m];
    let mut row_const = vec![0.0; m];
    for (i, r) in lp.rows.iter().enumerate() {
        let mut c0 = 0.0;
        for &(j, v) in &r.coeffs {
            match map[j] {
                VarMap::Shift { col, at } => {
                    dense[i][col] += v;
                    c0 += v * at;
                }
                VarMap::Reflect { col, at } => {
                    dense[i][col] -= v;
                    c0 += v * at;
                }
                VarMap::Split { pos, neg } => {
                    dense[i][pos] += v;
                    dense[i][neg] -= v;
                }
            }
        }
        row_const[i] = c0;
        rhs[i] = r.rhs - c0;
    }
    let mut bound_rows = Vec::new();
    for (k, &(col, width)) in bound_vars.iter().enumerate() {
        let i = m_orig + k;
        dense[i][col] = 1.0;
        rhs[i] = width;
        bound_rows.push((i, width));
    }

    // slacks: +1 for <=, -1 for >=
    let mut slack_coef: Vec<Option<(usize, f64)>> = vec![None; m];
    let mut next = ncols_struct;
    for i in 0..m {
        let kind = if i < m_orig { lp.rows[i].kind } else { RowKind::Le };
        match kind {
            RowKind::Le => {
                slack_coef[i] = Some((next, 1.0));
                next += 1;
            }
            RowKind::Ge => {
                slack_coef[i] = Some((next, -1.0));
                next += 1;
            }
            RowKind::Eq => {}
        }
    }
    debug_assert_eq!(next, ncols_struct + n_slack);
    let mut row_sign = vec![1.0; m];
    for i in 0..m {
        if rhs[i] < 0.0 {
            row_sign[i] = -1.0;
        }
    }
    let needs_art: Vec<bool> = (0..m)
        .map(|i| match slack_coef[i] {
            Some((_, s)) => s * row_sign[i] < 0.0,
            None => true,
        })
        .collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let first_artificial = ncols_struct + n_slack;
    let ncols = first_artificial + n_art;

    let mut a = vec![0.0; m * ncols];
    let mut b = vec![0.0; m];
    let mut basis = vec![0usize; m];
    let mut art = first_artificial;
    for i in 0..m {
        let s = row_sign[i];
        for (j, v) in dense[i].iter().enumerate() {
            a[i * ncols + j] = s * v;
        }
        if let Some((col, coef)) = slack_coef[i] {
            a[i * ncols + col] = s * coef;
            if !needs_art[i] {
                basis[i] = col;
            }
        }
        if needs_art[i] {
            a[i * ncols + art] = 1.0;
            basis[i] = art;
            art += 1;
        }
        b[i] = s * rhs[i];
    }

    let mut cost = vec![0.0; ncols];
    let mut cost_offset = 0.0;
    for j in 0..n {
        let c = internal_cost[j];
        match map[j] {
            VarMap::Shift { col, at } => {
                cost[col] += c;
                cost_offset += c * at;
            }
            VarMap::Reflect { col, at } => {
                cost[col] -= c;
                cost_offset += c * at;
            }
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }
    Ok(Standard { m, ncols, a, b, cost, first_artificial, row_sign, row_const, bound_rows, map, basis, cost_offset })
}

struct Tableau<'a> {
    s: &'a Standard,
    binv: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    iterations: usize,
    since_refactor: usize,
}

enum StepOutcome {
    Optimal,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(s: &'a Standard) -> Self {
        let m = s.m;
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut in_basis = vec![false; s.ncols];
        for &j in &s.basis {
            in_basis[j] = true;
        }
        Self { s, binv, xb: s.b.clone(), basis: s.basis.clone(), in_basis, iterations: 0, since_refactor: 0 }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.s.m;
        let mut y = vec![0.0; m];
        for (r, &bj) in self.basis.iter().enumerate() {
            let c = cost[bj];
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for i in 0..m {
                    y[i] += c * row[i];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[f64], y: &[f64], j: usize) -> f64 {
        let n = self.s.ncols;
        let mut d = cost[j];
        for i in 0..self.s.m {
            let aij = self.s.a[i * n + j];
            if aij != 0.0 {
                d -= y[i] * aij;
            }
        }
        d
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let m = self.s.m;
        let aj: Vec<f64> = self.s.col(j).collect();
        let mut out = vec![0.0; m];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for k in 0..m {
                if aj[k] != 0.0 {
                    acc += row[k] * aj[k];
                }
            }
            *o = acc;
        }
        out
    }

    fn pivot(&mut self, r: usize, j: usize, alpha: &[f64]) {
        let m = self.s.m;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        self.xb[r] /= piv;
        let (xr, row_r): (f64, Vec<f64>) = (self.xb[r], self.binv[r * m..(r + 1) * m].to_vec());
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * row_r[k];
                }
                self.xb[i] -= f * xr;
            }
        }
        self.in_basis[self.basis[r]] = false;
        self.basis[r] = j;
        self.in_basis[j] = true;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= 100 {
            self.refactor();
        }
    }

    /// Recompute B^{-1} and x_B from scratch by Gauss-Jordan elimination.
    fn refactor(&mut self) {
        let m = self.s.m;
        let n = self.s.ncols;
        let mut bmat = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                bmat[i * m + c] = self.s.a[i * n + j];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m).max_by(|&x, &y| bmat[x * m + c].abs().total_cmp(&bmat[y * m + c].abs())).unwrap();
            if bmat[p * m + c].abs() < 1e-14 {
                // singular basis: keep the product-form inverse
                self.since_refactor = 0;
                return;
            }
            if p != c {
                for k in 0..m {
                    bmat.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = bmat[c * m + c];
            for k in 0..m {
                bmat[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for i in 0..m {
                if i != c {
                    let f = bmat[i * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            bmat[i * m + k] -= f * bmat[c * m + k];
                            inv[i * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.xb[i] = row.iter().zip(&self.s.b).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        }
        self.since_refactor = 0;
    }

    fn run(&mut self, cost: &[f64], allow_artificial: bool) -> Result<StepOutcome> {
        let n_enter = if allow_artificial { self.s.ncols } else { self.s.first_artificial };
        let scale = 1.0 + cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let opt_tol = tol::LP * scale;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= tol::LP_ITERATION_CAP {
                return Err(Error::Numeric(format!(
                    "simplex iteration cap of {} reached",
                    tol::LP_ITERATION_CAP
                )));
            }
            let y = self.duals(cost);
            let bland = degenerate_run > 50;
            let mut enter = None;
            let mut best = -opt_tol;
            for j in 0..n_enter {
                if self.in_basis[j] {
                    continue;
                }
                let d = self.reduced_cost(cost, &y, j);
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(j) = enter else { return Ok(StepOutcome::Optimal) };
            let alpha = self.column(j);
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            for i in 0..self.s.m {
                let artificial = self.basis[i] >= self.s.first_artificial;
                // a zero-level artificial left on a redundant row must not move
                let t = if alpha[i] > 1e-10 {
                    self.xb[i].max(0.0) / alpha[i]
                } else if !allow_artificial && artificial && alpha[i].abs() > 1e-10 {
                    0.0
                } else {
                    continue;
                };
                let eps = 1e-12 * (1.0 + theta.abs());
                let take = match leave {
                    None => true,
                    Some(_) if t < theta - eps => true,
                    Some(r) if t <= theta + eps => {
                        let art_r = self.basis[r] >= self.s.first_artificial;
                        (artificial && !art_r) || (artificial == art_r && self.basis[i] < self.basis[r])
                    }
                    _ => false,
                };
                if take {
                    leave = Some(i);
                    theta = theta.min(t);
                }
            }
            let Some(r) = leave else { return Ok(StepOutcome::Unbounded) };
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, j, &alpha);
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis.iter().zip(&self.xb).map(|(&j, x)| cost[j] * x).sum()
    }

    /// Pivot zero-level artificials out of the basis where possible.
    fn expel_artificials(&mut self) {
        let m = self.s.m;
        let n = self.s.ncols;
        for r in 0..m {
            if self.basis[r] < self.s.first_artificial {
                continue;
            }
            let row = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.s.first_artificial {
                if self.in_basis[j] {
                    continue;
                }
                let v: f64 = (0..m).map(|i| row[i] * self.s.a[i * n + j]).sum();
                if v.abs() > 1e-9 && best.map_or(true, |(_, b)| v.abs() > b.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.column(j);
                self.pivot(r, j, &alpha);
            }
        }
    }
}

/// Solve a linear program. Errors are reserved for malformed input and
/// numerical breakdown; infeasibility and unboundedness are statuses.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    validate(lp)?;
    let n = lp.num_vars();
    let m_orig = lp.rows.len();
    let Ok(s) = standardize(lp) else {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            objective: f64::NAN,
            duals: vec![0.0; m_orig],
            farkas: None,
            iterations: 0,
            primal_residual: f64::INFINITY,
            complementarity_residual: 0.0,
        });
    };
    let mut t = Tableau::new(&s);

    let has_art = s.first_artificial < s.ncols;
    if has_art {
        let mut c1 = vec![0.0; s.ncols];
        for c in c1.iter_mut().skip(s.first_artificial) {
            *c = 1.0;
        }
        t.run(&c1, true)?;
        let w = t.objective(&c1);
        let bscale = 1.0 + s.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if w > tol::LP * bscale {
            let y1 = t.duals(&c1);
            let mut row_weights = vec![0.0; m_orig];
            let mut constant = 0.0;
            for i in 0..m_orig {
                row_weights[i] = y1[i] * s.row_sign[i];
                constant -= row_weights[i] * s.row_const[i];
            }
            for &(i, width) in &s.bound_rows {
                constant += y1[i] * s.row_sign[i] * width;
            }
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                duals: vec![0.0; m_orig],
                farkas: Some(FarkasCertificate { row_weights, constant }),
                iterations: t.iterations,
                primal_residual: w,
                complementarity_residual: 0.0,
            });
        }
        t.expel_artificials();
    }

    let outcome = t.run(&s.cost, false)?;
    let mut xs = vec![0.0; s.ncols];
    for (r, &j) in t.basis.iter().enumerate() {
        xs[j] = t.xb[r].max(0.0);
    }
    let x: Vec<f64> = s
        .map
        .iter()
        .map(|vm| match *vm {
            VarMap::Shift { col, at } => at + xs[col],
            VarMap::Reflect { col, at } => at - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();
    if let StepOutcome::Unbounded = outcome {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: match lp.sense {
                Sense::Minimize => f64::NEG_INFINITY,
                Sense::Maximize => f64::INFINITY,
            },
            x,
            duals: vec![0.0; m_orig],
            farkas: None,
            iterations: t.iterations,
            primal_residual: 0.0,
            complementarity_residual: 0.0,
        });
    }
    let _ = s.cost_offset;
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let y = t.duals(&s.cost);
    let sense_sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let duals: Vec<f64> = (0..m_orig).map(|i| sense_sign * s.row_sign[i] * y[i]).collect();

    let mut primal_residual = 0.0f64;
    let mut complementarity_residual = 0.0f64;
    for (i, r) in lp.rows.iter().enumerate() {
        let ax: f64 = r.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
        let viol = match r.kind {
            RowKind::Le => (ax - r.rhs).max(0.0),
            RowKind::Ge => (r.rhs - ax).max(0.0),
            RowKind::Eq => (ax - r.rhs).abs(),
        };
        primal_residual = primal_residual.max(viol);
        if r.kind != RowKind::Eq {
            complementarity_residual = complementarity_residual.max((duals[i] * (ax - r.rhs)).abs());
        }
    }
    for j in 0..n {
        primal_residual = primal_residual.max((lp.lower[j] - x[j]).max(0.0)).max((x[j] - lp.upper[j]).max(0.0));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        duals,
        farkas: None,
        iterations: t.iterations,
        primal_residual,
        complementarity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_single_variable() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(0.0, f64::INFINITY, 1.0);
        lp.add_row(vec![(x, 1.0)], RowKind::Le, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_with_certificate() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(0.0, f64::INFINITY, 1.0);
        lp.add_row(vec![(x, 1.0)], RowKind::Le, -1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        let f = s.farkas.unwrap();
        assert!(f.evaluate(&[-1.0]) > 0.0);
        assert!(f.evaluate(&[0.5]) <= 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(0.0, f64::INFINITY, 1.0);
        let y = lp.add_var(0.0, f64::INFINITY, 0.0);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], RowKind::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_reflected_variables() {
        // min x + y s.t. x + y >= -3, x <= 2 (upper only), y free, y >= -10
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(f64::NEG_INFINITY, 2.0, 1.0);
        let y = lp.add_free_var(1.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowKind::Ge, -3.0);
        lp.add_row(vec![(y, 1.0)], RowKind::Ge, -10.0);
        lp.add_row(vec![(x, 1.0)], RowKind::Ge, -5.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 3.0).abs() < 1e-10);
        assert!((s.duals[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn equality_and_redundant_rows() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(0.0, 4.0, -1.0);
        let y = lp.add_var(0.0, f64::INFINITY, -2.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowKind::Eq, 3.0);
        lp.add_row(vec![(x, 2.0), (y, 2.0)], RowKind::Eq, 6.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 6.0).abs() < 1e-10);
        assert!(s.primal_residual < 1e-10);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling instance (min form)
        let mut lp = LinearProgram::new(Sense::Minimize);
        let v: Vec<usize> = [-0.75, 150.0, -0.02, 6.0].iter().map(|&c| lp.add_var(0.0, f64::INFINITY, c)).collect();
        lp.add_row(vec![(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)], RowKind::Le, 0.0);
        lp.add_row(vec![(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)], RowKind::Le, 0.0);
        lp.add_row(vec![(v[2], 1.0)], RowKind::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-10);
    }
}
