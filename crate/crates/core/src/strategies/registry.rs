use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CrossMa, KalmanOptimal, MisspecifiedOptimal, Strategy};
use crate::analytics::CrossMaConfig;
use crate::error::ParamError;
use crate::filters::KalmanConfig;

/// Named numeric parameters of a strategy. Durations are in years.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyParams(BTreeMap<String, f64>);

impl StrategyParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        Self(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.0.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn require(&self, strategy: &'static str, name: &'static str) -> Result<f64, ParamError> {
        self.get(name).ok_or(ParamError::Missing { strategy, name })
    }

    fn only(&self, strategy: &'static str, allowed: &[&str]) -> Result<(), ParamError> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ParamError::Unexpected {
                strategy,
                name: k.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// A strategy selected by registry name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub name: String,
    #[serde(default)]
    pub params: StrategyParams,
}

impl StrategySpec {
    pub fn new(name: &str, params: StrategyParams) -> Self {
        Self {
            name: name.to_string(),
            params,
        }
    }
}

pub type StrategyBuilder = fn(&StrategyParams) -> Result<Box<dyn Strategy>, ParamError>;

/// Maps strategy names to constructors.
#[derive(Debug, Clone)]
pub struct StrategyRegistry {
    builders: BTreeMap<&'static str, StrategyBuilder>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("optimal", build_optimal);
        r.register("kalman", build_kalman);
        r.register("crossma", build_crossma);
        r
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    /// Adds or replaces a builder.
    pub fn register(&mut self, name: &'static str, builder: StrategyBuilder) {
        self.builders.insert(name, builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }

    pub fn build(&self, spec: &StrategySpec) -> Result<Box<dyn Strategy>, ParamError> {
        let builder = self
            .builders
            .get(spec.name.as_str())
            .ok_or_else(|| ParamError::UnknownStrategy(spec.name.clone()))?;
        builder(&spec.params)
    }
}

fn build_optimal(p: &StrategyParams) -> Result<Box<dyn Strategy>, ParamError> {
    const NAME: &str = "optimal";
    p.only(NAME, &["m", "tau"])?;
    Ok(Box::new(MisspecifiedOptimal::new(
        p.require(NAME, "m")?,
        p.require(NAME, "tau")?,
    )?))
}

fn build_kalman(p: &StrategyParams) -> Result<Box<dyn Strategy>, ParamError> {
    const NAME: &str = "kalman";
    p.only(NAME, &["lambda_a", "sigma_mu_a", "prior_var"])?;
    let mut agent = KalmanConfig::new(p.require(NAME, "lambda_a")?, p.require(NAME, "sigma_mu_a")?)?;
    agent.prior_var = p.get("prior_var");
    Ok(Box::new(KalmanOptimal::new(agent)?))
}

fn build_crossma(p: &StrategyParams) -> Result<Box<dyn Strategy>, ParamError> {
    const NAME: &str = "crossma";
    p.only(NAME, &["gamma", "alpha", "l1", "l2"])?;
    let c = CrossMaConfig::new(
        p.require(NAME, "gamma")?,
        p.require(NAME, "alpha")?,
        p.require(NAME, "l1")?,
        p.require(NAME, "l2")?,
    )?;
    Ok(Box::new(CrossMa::new(c)?))
}
