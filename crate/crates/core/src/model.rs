//! Probability spaces, wealth processes, densities and liability networks.

use std::fmt;

use serde::Serialize;

use crate::error::{dimension, validation, Error, Result};
use crate::tolerances as tol;

/// A finite probability space with strictly positive scenario weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpace {
    probs: Vec<f64>,
}

impl ScenarioSpace {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let n = probs.len();
        if n == 0 {
            return Err(validation("scenario space must contain at least one scenario"));
        }
        if n > tol::MAX_SCENARIOS {
            return Err(validation(format!(
                "{n} scenarios exceeds the limit of {}",
                tol::MAX_SCENARIOS
            )));
        }
        for (k, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(validation(format!(
                    "scenario {k} has probability {p}; probabilities must be positive"
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol::PROB_SUM {
            return Err(validation(format!(
                "probabilities sum to {total:.17}, not 1 within {:e}",
                tol::PROB_SUM
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(validation("scenario space must contain at least one scenario"));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// E^P[f] for a per-scenario vector.
    pub fn mean(&self, f: &[f64]) -> f64 {
        self.probs.iter().zip(f).map(|(p, v)| p * v).sum()
    }
}

/// A random vector X: one row of `d` values per scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthProcess {
    space: ScenarioSpace,
    values: Vec<Vec<f64>>,
}

impl WealthProcess {
    pub fn new(space: ScenarioSpace, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(dimension(format!(
                "{} wealth rows for {} scenarios",
                values.len(),
                space.len()
            )));
        }
        let d = values[0].len();
        if d == 0 {
            return Err(validation("wealth vectors must have at least one component"));
        }
        if d > tol::MAX_DIM {
            return Err(validation(format!("dimension {d} exceeds the limit of {}", tol::MAX_DIM)));
        }
        for (k, row) in values.iter().enumerate() {
            if row.len() != d {
                return Err(dimension(format!(
                    "scenario {k} has {} components, expected {d}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(validation(format!("scenario {k} has a non-finite wealth value")));
            }
        }
        Ok(Self { space, values })
    }

    /// Deterministic wealth on the one-point space.
    pub fn deterministic(x: Vec<f64>) -> Result<Self> {
        Self::new(ScenarioSpace::new(vec![1.0])?, vec![x])
    }

    pub fn space(&self) -> &ScenarioSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scenario(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// X + z, with z added to every scenario.
    pub fn shifted(&self, z: &[f64]) -> Result<Self> {
        if z.len() != self.dim() {
            return Err(dimension(format!("shift of length {} for dimension {}", z.len(), self.dim())));
        }
        let values = self
            .values
            .iter()
            .map(|row| row.iter().zip(z).map(|(a, b)| a + b).collect())
            .collect();
        Ok(Self { space: self.space.clone(), values })
    }

    pub fn scaled(&self, gamma: f64) -> Self {
        let values = self
            .values
            .iter()
            .map(|row| row.iter().map(|v| gamma * v).collect())
            .collect();
        Self { space: self.space.clone(), values }
    }

    /// Componentwise ||X_i||_inf.
    pub fn sup_norms(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.values.iter().map(|r| r[i].abs()).fold(0.0, f64::max))
            .collect()
    }
}

/// A Radon-Nikodym derivative dQ/dP on a scenario space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Density {
    dm: Vec<f64>,
}

impl Density {
    pub fn new(space: &ScenarioSpace, mut dm: Vec<f64>) -> Result<Self> {
        if dm.len() != space.len() {
            return Err(dimension(format!(
                "density of length {} on {} scenarios",
                dm.len(),
                space.len()
            )));
        }
        for (k, v) in dm.iter_mut().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(validation(format!("density entry {k} is {v}; must be nonnegative")));
            }
            if *v < tol::DENSITY_ZERO {
                *v = 0.0;
            }
        }
        let mass = space.mean(&dm);
        if (mass - 1.0).abs() > tol::DENSITY_NORM {
            return Err(validation(format!("density has expectation {mass}, expected 1")));
        }
        Ok(Self { dm })
    }

    /// The density of a probability vector `q` (weights per scenario).
    pub fn from_probability(space: &ScenarioSpace, q: &[f64]) -> Result<Self> {
        if q.len() != space.len() {
            return Err(dimension("probability vector length differs from the scenario count"));
        }
        Self::new(space, q.iter().zip(space.probs()).map(|(a, p)| a / p).collect())
    }

    pub fn reference(space: &ScenarioSpace) -> Self {
        Self { dm: vec![1.0; space.len()] }
    }

    pub fn values(&self) -> &[f64] {
        &self.dm
    }

    pub fn len(&self) -> usize {
        self.dm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dm.is_empty()
    }

    /// Scenario weights Q({omega_k}) = p_k dQ/dP(omega_k).
    pub fn probability(&self, space: &ScenarioSpace) -> Vec<f64> {
        self.dm.iter().zip(space.probs()).map(|(d, p)| d * p).collect()
    }

    pub fn is_equivalent(&self) -> bool {
        self.dm.iter().all(|&v| v > tol::DENSITY_ZERO)
    }

    pub fn is_reference(&self) -> bool {
        self.dm.iter().all(|v| (v - 1.0).abs() <= tol::MEASURE_EQ)
    }
}

/// A dual element (Q, w) together with an equivalent measure S.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualVariable {
    pub q: Vec<Density>,
    pub w: Vec<f64>,
    pub s: Density,
}

impl DualVariable {
    pub fn new(q: Vec<Density>, w: Vec<f64>, s: Density) -> Result<Self> {
        if q.len() != w.len() {
            return Err(dimension(format!("{} measures but {} weights", q.len(), w.len())));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(validation("dual weights must be nonnegative and finite"));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(validation("dual weight vector must be nonzero"));
        }
        if q.iter().any(|d| d.len() != s.len()) {
            return Err(dimension("densities live on different scenario spaces"));
        }
        if !s.is_equivalent() {
            return Err(validation("S must be equivalent to P"));
        }
        Ok(Self { q, w, s })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// Vector of E^{Q_i}[X_i].
pub fn expectation(x: &WealthProcess, q: &[Density]) -> Result<Vec<f64>> {
    if q.len() != x.dim() {
        return Err(dimension(format!("{} densities for dimension {}", q.len(), x.dim())));
    }
    let probs = x.space().probs();
    q.iter()
        .enumerate()
        .map(|(i, qi)| {
            if qi.len() != x.len() {
                return Err(dimension("density and wealth live on different spaces"));
            }
            Ok((0..x.len()).map(|k| probs[k] * qi.values()[k] * x.scenario(k)[i]).sum())
        })
        .collect()
}

/// dQ/dS as a per-scenario vector.
pub fn change_of_measure(q: &Density, s: &Density) -> Result<Vec<f64>> {
    if q.len() != s.len() {
        return Err(dimension("densities live on different scenario spaces"));
    }
    q.values()
        .iter()
        .zip(s.values())
        .enumerate()
        .map(|(k, (a, b))| {
            if *b <= tol::DENSITY_ZERO {
                Err(Error::Domain(format!("S has no mass at scenario {k}")))
            } else {
                Ok(a / b)
            }
        })
        .collect()
}

/// A structural defect in a liability matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NonFinite { from: usize, to: usize },
    Negative { from: usize, to: usize },
    SocietyHasLiability { to: usize },
    SelfLiability { node: usize },
    NoLiabilityToSociety { node: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { from, to } => write!(f, "liability {from}->{to} is not finite"),
            Violation::Negative { from, to } => write!(f, "liability {from}->{to} is negative"),
            Violation::SocietyHasLiability { to } => {
                write!(f, "assumption (i) violated: society owes node {to}")
            }
            Violation::SelfLiability { node } => {
                write!(f, "assumption (i) violated: node {node} owes itself")
            }
            Violation::NoLiabilityToSociety { node } => {
                write!(f, "assumption (ii) violated: nonzero liability to society, node {node}")
            }
        }
    }
}

/// List every structural violation of a square liability matrix.
/// Row and column 0 stand for society.
pub fn validate_network(liab: &[Vec<f64>]) -> Result<Vec<Violation>> {
    let m = liab.len();
    if m < 2 {
        return Err(dimension("liability matrix needs society plus at least one institution"));
    }
    if m - 1 > tol::MAX_DIM {
        return Err(validation(format!("{} institutions exceeds the limit of {}", m - 1, tol::MAX_DIM)));
    }
    if let Some((i, r)) = liab.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(dimension(format!("liability matrix is not square: row {i} has {} entries, expected {m}", r.len())));
    }
    let mut out = Vec::new();
    for (i, row) in liab.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation::NonFinite { from: i, to: j });
            } else if v < 0.0 {
                out.push(Violation::Negative { from: i, to: j });
            }
        }
    }
    for j in 0..m {
        if liab[0][j] != 0.0 {
            out.push(Violation::SocietyHasLiability { to: j });
        }
    }
    for i in 1..m {
        if liab[i][i] != 0.0 {
            out.push(Violation::SelfLiability { node: i });
        }
        if !(liab[i][0] > 0.0) {
            out.push(Violation::NoLiabilityToSociety { node: i });
        }
    }
    Ok(out)
}

/// Nominal liabilities l_ij (i owes j), index 0 = society.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiabilityNetwork {
    liab: Vec<Vec<f64>>,
    total: Vec<f64>,
    relative: Vec<Vec<f64>>,
}

impl LiabilityNetwork {
    pub fn new(liab: Vec<Vec<f64>>) -> Result<Self> {
        let violations = validate_network(&liab)?;
        if !violations.is_empty() {
            return Err(Error::Network(violations));
        }
        let total: Vec<f64> = liab.iter().map(|r| r.iter().sum()).collect();
        let relative = liab
            .iter()
            .zip(&total)
            .map(|(r, t)| r.iter().map(|v| if *t > 0.0 { v / t } else { 0.0 }).collect())
            .collect();
        Ok(Self { liab, total, relative })
    }

    /// Number of institutions d (society excluded).
    pub fn dim(&self) -> usize {
        self.liab.len() - 1
    }

    pub fn liabilities(&self) -> &[Vec<f64>] {
        &self.liab
    }

    /// l_ij with 0 = society.
    pub fn liability(&self, i: usize, j: usize) -> f64 {
        self.liab[i][j]
    }

    /// Total liabilities pbar_i for institution i in 1..=d.
    pub fn total_liability(&self, i: usize) -> f64 {
        self.total[i]
    }

    /// pbar for the institutions, indexed 0..d.
    pub fn pbar(&self) -> Vec<f64> {
        self.total[1..].to_vec()
    }

    /// Relative liability a_ij = l_ij / pbar_i.
    pub fn relative(&self, i: usize, j: usize) -> f64 {
        self.relative[i][j]
    }

    /// Maximal payment to society, sum_i a_i0 pbar_i = sum_i l_i0.
    pub fn max_society_payment(&self) -> f64 {
        (1..self.liab.len()).map(|i| self.liab[i][0]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bank() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]
    }

    #[test]
    fn probabilities_are_not_renormalized() {
        assert!(ScenarioSpace::new(vec![0.5, 0.5]).is_ok());
        assert!(ScenarioSpace::new(vec![0.5, 0.5 + 1e-9]).is_err());
        assert!(ScenarioSpace::new(vec![1.0, 0.0]).is_err());
        assert!(ScenarioSpace::new(vec![]).is_err());
    }

    #[test]
    fn expectation_under_q() {
        let space = ScenarioSpace::new(vec![0.5, 0.5]).unwrap();
        let x = WealthProcess::new(space.clone(), vec![vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let q1 = Density::new(&space, vec![1.0, 1.0]).unwrap();
        let q2 = Density::new(&space, vec![2.0, 0.0]).unwrap();
        let e = expectation(&x, &[q1.clone(), q2.clone()]).unwrap();
        assert!((e[0] - 1.5).abs() < 1e-15);
        assert_eq!(e[1], 0.0);
        assert!(q1.is_equivalent());
        assert!(!q2.is_equivalent());
        assert!(change_of_measure(&q1, &q2).is_err());
        assert_eq!(change_of_measure(&q2, &q1).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn density_must_integrate_to_one() {
        let space = ScenarioSpace::new(vec![0.5, 0.5]).unwrap();
        assert!(Density::new(&space, vec![1.0, 2.0]).is_err());
        assert!(Density::new(&space, vec![1.0, -0.0 - 1.0]).is_err());
    }

    #[test]
    fn network_derived_quantities() {
        let net = LiabilityNetwork::new(two_bank()).unwrap();
        assert_eq!(net.pbar(), vec![2.0, 1.0]);
        assert_eq!(net.relative(1, 0), 0.5);
        assert_eq!(net.relative(1, 2), 0.5);
        assert_eq!(net.relative(2, 0), 1.0);
        assert_eq!(net.max_society_payment(), 2.0);
    }

    #[test]
    fn network_violations_are_named() {
        let mut l = two_bank();
        l[2][0] = 0.0;
        let v = validate_network(&l).unwrap();
        assert_eq!(v, vec![Violation::NoLiabilityToSociety { node: 2 }]);
        assert!(v[0].to_string().contains("assumption (ii)"));
        let err = LiabilityNetwork::new(l).unwrap_err();
        assert!(err.to_string().contains("node 2"));
        assert!(validate_network(&[vec![0.0, 0.0], vec![1.0]]).is_err());
    }
}
