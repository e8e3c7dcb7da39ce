//! JSON input files.
//!
//! Model file:
//! `{"scenarios": [{"prob": 0.5, "wealth": [1.0, -2.0]}, ...],
//!   "aggregation": {"kind": "total_pl"}, "risk_measure": {"kind": "entropic"}}`.
//! Network file: `{"liabilities": [[0, 0, 0], [1, 0, 1], [1, 0, 0]]}` with
//! node 0 the society.

use serde::{Deserialize, Serialize};

use crate::aggregation::AggregationConfig;
use crate::error::{validation, Error, Result};
use crate::model::{validate_network, LiabilityNetwork, ScenarioSpace, WealthProcess};
use crate::risk::BaseRiskMeasure;
use crate::systemic::SystemicModel;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub prob: f64,
    pub wealth: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub scenarios: Vec<ScenarioEntry>,
    #[serde(default)]
    pub aggregation: Option<AggregationConfig>,
    #[serde(default)]
    pub risk_measure: Option<BaseRiskMeasure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub liabilities: Vec<Vec<f64>>,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| validation(format!("{what}: {e}")))
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse(text, "model file")
    }

    pub fn wealth(&self) -> Result<WealthProcess> {
        if self.scenarios.is_empty() {
            return Err(validation("model file: scenarios must be nonempty"));
        }
        let space = ScenarioSpace::new(self.scenarios.iter().map(|s| s.prob).collect())
            .map_err(|e| validation(format!("model file: scenarios[].prob: {e}")))?;
        WealthProcess::new(space, self.scenarios.iter().map(|s| s.wealth.clone()).collect())
            .map_err(|e| validation(format!("model file: scenarios[].wealth: {e}")))
    }

    pub fn build(&self, network: Option<&[Vec<f64>]>) -> Result<SystemicModel> {
        let x = self.wealth()?;
        let agg = self
            .aggregation
            .as_ref()
            .ok_or_else(|| validation("model file: missing field `aggregation`"))?
            .build(x.dim(), network)?;
        let base = self.risk_measure.ok_or_else(|| validation("model file: missing field `risk_measure`"))?;
        SystemicModel::new(x, agg, base)
    }
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse(text, "network file")
    }

    /// Validated network; every violated assumption is reported.
    pub fn network(&self) -> Result<LiabilityNetwork> {
        let violations = validate_network(&self.liabilities)?;
        if !violations.is_empty() {
            return Err(Error::Network(violations));
        }
        LiabilityNetwork::new(self.liabilities.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_model_file() {
        let text = r#"{"scenarios":[{"prob":0.5,"wealth":[1,-1]},{"prob":0.5,"wealth":[0,2]}],
            "aggregation":{"kind":"total_pl"},"risk_measure":{"kind":"expectation","lambda0":0}}"#;
        let m = ModelFile::parse(text).unwrap().build(None).unwrap();
        assert_eq!(m.dim(), 2);
        assert!(m.assumption_holds());
    }

    #[test]
    fn reports_position_of_errors() {
        let err = ModelFile::parse("{\"scenarios\": [\n {\"prob\": \"x\"}]}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = NetworkFile::parse(r#"{"liabilities":[[0,0,0],[0,0,1],[1,0,0]]}"#).unwrap().network().unwrap_err();
        assert!(err.to_string().contains("assumption (ii)"), "{err}");
    }
}
