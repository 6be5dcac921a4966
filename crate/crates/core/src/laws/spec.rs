//! JSON law specifications.
//!
//! ```json
//! {"kind": "filippov_power", "params": {"lambda": 2.0, "theta": 1.0}}
//! {"kind": "stick_breaking_lossy"}
//! {"kind": "atomic", "params": {"outcomes": [{"probability": 1.0, "sizes": [0.5, 0.25]}]},
//!  "overrides": {"arithmetic_flag": true}}
//! ```

use super::{AtomicOutcome, Component, IntensityTerm, ReproductionLaw};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default)]
    pub arithmetic_flag: Option<bool>,
    #[serde(default)]
    pub beta_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletTerm {
    pub lambda: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawParams {
    BinaryUniformConservative,
    StickBreakingLossy,
    StickBreakingConservative,
    FilippovPower { lambda: f64, theta: f64 },
    DirichletPolynomial { terms: Vec<DirichletTerm> },
    Atomic { outcomes: Vec<AtomicOutcome> },
    Poisson { first: Component, intensity: Vec<IntensityTerm> },
    LogSquaredPower { c: f64 },
}

/// A law specification: kind, parameters and optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawSpec {
    #[serde(flatten)]
    pub params: LawParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<Overrides>,
}

impl LawSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        // flatten and deny_unknown_fields do not combine, so check top-level keys by hand
        if let Some(obj) = value.as_object() {
            if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "kind" | "params" | "overrides")) {
                return Err(Error::Spec(format!("unknown field `{k}`; expected kind, params, overrides")));
            }
        }
        serde_json::from_value(value).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn build(&self) -> Result<ReproductionLaw> {
        let law = match &self.params {
            LawParams::BinaryUniformConservative => ReproductionLaw::binary_uniform_conservative(),
            LawParams::StickBreakingLossy => ReproductionLaw::stick_breaking_lossy(),
            LawParams::StickBreakingConservative => ReproductionLaw::stick_breaking_conservative(),
            LawParams::FilippovPower { lambda, theta } => ReproductionLaw::filippov(*lambda, *theta)?,
            LawParams::DirichletPolynomial { terms } => {
                ReproductionLaw::dirichlet_polynomial(terms.iter().map(|t| (t.lambda, t.theta)).collect())?
            }
            LawParams::Atomic { outcomes } => ReproductionLaw::atomic(outcomes.clone())?,
            LawParams::Poisson { first, intensity } => ReproductionLaw::poisson_reproduction(first.clone(), intensity.clone())?,
            LawParams::LogSquaredPower { c } => ReproductionLaw::log_squared_power(*c)?,
        };
        Ok(match &self.overrides {
            Some(o) => law.with_overrides(o.arithmetic_flag, o.beta_a),
            None => law,
        })
    }
}

/// Parse and build a law from JSON text.
pub fn parse_law(text: &str) -> Result<ReproductionLaw> {
    LawSpec::from_json(text)?.build()
}
