//! Scalar convex risk measures on finite spaces and their penalty functions.

use serde::{Deserialize, Serialize};

use crate::error::{dimension, validation, Error, Result};
use crate::extended::ExtendedReal;
use crate::model::{Density, ScenarioSpace};
use crate::tolerances as tol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseRiskMeasure {
    /// rho(Y) = E[-Y] - lambda0.
    Expectation { lambda0: f64 },
    /// rho(Y) = log E[exp(-Y)].
    Entropic,
    /// Average value at risk at level beta in (0, 1].
    Avar { beta: f64 },
}

impl BaseRiskMeasure {
    pub fn expectation(lambda0: f64) -> Result<Self> {
        Self::Expectation { lambda0 }.validated()
    }

    pub fn avar(beta: f64) -> Result<Self> {
        Self::Avar { beta }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            BaseRiskMeasure::Expectation { lambda0 } if !lambda0.is_finite() => {
                Err(validation("lambda0 must be finite"))
            }
            BaseRiskMeasure::Avar { beta } if !(beta > 0.0 && beta <= 1.0) => {
                Err(validation(format!("AV@R level beta={beta} must lie in (0, 1]")))
            }
            _ => Ok(self),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseRiskMeasure::Expectation { .. } => "expectation",
            BaseRiskMeasure::Entropic => "entropic",
            BaseRiskMeasure::Avar { .. } => "avar",
        }
    }

    pub fn rho_zero(&self) -> f64 {
        match self {
            BaseRiskMeasure::Expectation { lambda0 } => -lambda0,
            _ => 0.0,
        }
    }

    pub fn is_coherent(&self) -> bool {
        match self {
            BaseRiskMeasure::Expectation { lambda0 } => *lambda0 == 0.0,
            BaseRiskMeasure::Entropic => false,
            BaseRiskMeasure::Avar { .. } => true,
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        !matches!(self, BaseRiskMeasure::Entropic)
    }

    /// rho(Y); +inf as soon as some scenario is -inf.
    pub fn rho(&self, space: &ScenarioSpace, y: &[f64]) -> Result<ExtendedReal> {
        if y.len() != space.len() {
            return Err(dimension(format!("{} outcomes for {} scenarios", y.len(), space.len())));
        }
        if y.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Domain("outcomes must be finite or -inf".into()));
        }
        if y.iter().any(|v| *v == f64::NEG_INFINITY) {
            return Ok(ExtendedReal::PosInf);
        }
        Ok(ExtendedReal::Finite(self.rho_with_measure(space, y)?.0))
    }

    /// Finite rho(Y) with a maximizing measure sigma in
    /// rho(Y) = max_S (E^S[-Y] - alpha(S)), as scenario weights.
    /// -sigma is a subgradient of rho at Y.
    pub fn rho_with_measure(&self, space: &ScenarioSpace, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = space.probs();
        if y.len() != p.len() {
            return Err(dimension("outcome vector length differs from the scenario count"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("finite outcomes required".into()));
        }
        match *self {
            BaseRiskMeasure::Expectation { lambda0 } => Ok((-space.mean(y) - lambda0, p.to_vec())),
            BaseRiskMeasure::Entropic => {
                let m = y.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = p.iter().zip(y).map(|(pk, v)| pk * (-v - m).exp()).collect();
                let s: f64 = e.iter().sum();
                Ok((m + s.ln(), e.iter().map(|v| v / s).collect()))
            }
            BaseRiskMeasure::Avar { beta } => Ok(avar(p, y, beta)),
        }
    }

    /// alpha(S) for a density S = dS/dP.
    pub fn penalty(&self, space: &ScenarioSpace, s: &Density) -> Result<ExtendedReal> {
        if s.len() != space.len() {
            return Err(dimension("density lives on a different space"));
        }
        Ok(self.penalty_weights(space.probs(), &s.probability(space)))
    }

    /// alpha at scenario weights sigma (sigma_k = p_k s_k).
    pub fn penalty_weights(&self, p: &[f64], sigma: &[f64]) -> ExtendedReal {
        match *self {
            BaseRiskMeasure::Expectation { lambda0 } => {
                if sigma.iter().zip(p).all(|(s, pk)| (s / pk - 1.0).abs() <= tol::MEASURE_EQ) {
                    ExtendedReal::Finite(lambda0)
                } else {
                    ExtendedReal::PosInf
                }
            }
            BaseRiskMeasure::Entropic => ExtendedReal::Finite(
                sigma.iter().zip(p).map(|(s, pk)| if *s > 0.0 { s * (s / pk).ln() } else { 0.0 }).sum(),
            ),
            BaseRiskMeasure::Avar { beta } => {
                if sigma.iter().zip(p).all(|(s, pk)| *s <= pk / beta * (1.0 + 1e-12)) {
                    ExtendedReal::Finite(0.0)
                } else {
                    ExtendedReal::PosInf
                }
            }
        }
    }

    /// Upper bounds on scenario weights implied by a finite penalty.
    pub fn weight_caps(&self, p: &[f64]) -> Option<Vec<f64>> {
        match *self {
            BaseRiskMeasure::Avar { beta } => Some(p.iter().map(|pk| pk / beta).collect()),
            _ => None,
        }
    }

    pub fn acceptable(&self, space: &ScenarioSpace, y: &[f64]) -> Result<bool> {
        Ok(self.rho(space, y)? <= ExtendedReal::Finite(0.0))
    }
}

/// AV@R by Rockafellar-Uryasev: min_t t + E[(L - t)^+]/beta with L = -Y.
/// The objective is piecewise linear with kinks at the losses, so the
/// minimum is attained at one of them; all kinks are scanned exactly.
fn avar(p: &[f64], y: &[f64], beta: f64) -> (f64, Vec<f64>) {
    let n = p.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    // order is by decreasing loss
    let mut best = f64::INFINITY;
    let mut mass = 0.0;
    let mut weighted = 0.0;
    let mut k = 0;
    while k < n {
        let t = -y[order[k]];
        let obj = t + (weighted - t * mass) / beta;
        best = best.min(obj);
        // absorb every scenario with this loss
        while k < n && -y[order[k]] == t {
            mass += p[order[k]];
            weighted += p[order[k]] * t;
            k += 1;
        }
    }
    let mut sigma = vec![0.0; n];
    let mut remaining = 1.0f64;
    for &k in &order {
        let take = (p[k] / beta).min(remaining);
        sigma[k] = take;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    (best, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn avar_two_point() {
        let space = ScenarioSpace::new(vec![0.5, 0.5]).unwrap();
        let r = BaseRiskMeasure::avar(0.5).unwrap();
        assert_eq!(r.rho(&space, &[0.0, -2.0]).unwrap(), ExtendedReal::Finite(2.0));
        let full = BaseRiskMeasure::avar(1.0).unwrap();
        assert_eq!(full.rho(&space, &[0.0, -2.0]).unwrap(), ExtendedReal::Finite(1.0));
    }

    #[test]
    fn neg_infinity_is_unacceptable() {
        let space = ScenarioSpace::new(vec![0.5, 0.5]).unwrap();
        for r in [BaseRiskMeasure::Entropic, BaseRiskMeasure::expectation(1.0).unwrap(), BaseRiskMeasure::avar(0.3).unwrap()] {
            assert_eq!(r.rho(&space, &[1.0, f64::NEG_INFINITY]).unwrap(), ExtendedReal::PosInf);
        }
    }

    #[test]
    fn entropic_penalty_is_relative_entropy() {
        let space = ScenarioSpace::new(vec![0.25, 0.75]).unwrap();
        let s = Density::new(&space, vec![2.0, 2.0 / 3.0]).unwrap();
        let a = BaseRiskMeasure::Entropic.penalty(&space, &s).unwrap().to_f64();
        let expect = 0.5 * (2.0f64).ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((a - expect).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BaseRiskMeasure::avar(0.0).is_err());
        assert!(BaseRiskMeasure::avar(1.5).is_err());
        assert!(BaseRiskMeasure::expectation(f64::NAN).is_err());
        let c: BaseRiskMeasure = serde_json::from_str(r#"{"kind":"avar","beta":0.5}"#).unwrap();
        assert_eq!(c, BaseRiskMeasure::Avar { beta: 0.5 });
    }
}
