//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "model": { "r": 0.01, "mu": 0.2, "sigma": 3.0, "alpha": 0.2,
//!              "eta": 0.4, "theta": 0.6, "kappa": 4.47, "T": 10.0,
//!              "x0": 100.0, "lambdas": [2, 4, 5], "pi": [0.4, 0.4, 0.2],
//!              "beta": { "1": 8, "2": 7, "1,2": 5 } },
//!   "claims": { "kind": "trunc_exp", "rate": 1.0, "cutoff": 3.0,
//!               "identical": true },
//!   "strategies": [ { "investment": "merton", "retention": "full" } ],
//!   "simulate": { "n_paths": 1000, "dt_max": 0.01, "seed": 1,
//!                 "pin_lambda": 4.0, "pin_alpha": [0.38, 0.48, 0.14] },
//!   "options": { "grid": 100, "seeds": [1, 2] }
//! }
//! ```
//!
//! `kappa` defaults to the prior expected claim rate. The line count is the
//! largest line index among the `beta` keys.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use reinsure_core::claims::{ClaimLaw, ClaimModel, DeterministicClaim, TruncatedExponential};
use reinsure_core::model::default_kappa;
use reinsure_core::strategy::{InvestmentRule, RetentionRule, StrategySpec};
use reinsure_core::{DirichletPrior, IntensityPrior, LineSet, Model, ModelParams, SimulationSettings};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub claims: ClaimsBlock,
    #[serde(default)]
    pub strategy: Option<StrategyBlock>,
    #[serde(default)]
    pub strategies: Vec<StrategyBlock>,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub options: OptionsBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub r: f64,
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub eta: f64,
    pub theta: f64,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub x0: f64,
    pub lambdas: Vec<f64>,
    pub pi: Vec<f64>,
    pub beta: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ClaimsBlock {
    Single(ClaimEntry),
    PerLine(Vec<ClaimEntry>),
}

#[derive(Debug, Clone, Deserialize)]
pub struct ClaimEntry {
    #[serde(flatten)]
    pub law: ClaimLawBlock,
    #[serde(default)]
    pub identical: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClaimLawBlock {
    TruncExp { rate: f64, cutoff: f64 },
    Deterministic { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyBlock {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub investment: InvestmentBlock,
    pub retention: RetentionBlock,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InvestmentBlock {
    Named(InvestmentName),
    Constant { constant: f64 },
}

impl Default for InvestmentBlock {
    fn default() -> Self {
        InvestmentBlock::Named(InvestmentName::Merton)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvestmentName {
    Merton,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RetentionBlock {
    Named(RetentionName),
    Constant { constant: f64 },
    CompleteInfo { complete_info: CompleteInfoBlock },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetentionName {
    Full,
    CertaintyEquivalent,
    AprioriLower,
    AprioriUpper,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompleteInfoBlock {
    pub lambda: f64,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub n_paths: Option<usize>,
    pub dt_max: Option<f64>,
    pub seed: Option<u64>,
    pub pin_lambda: Option<f64>,
    pub pin_alpha: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsBlock {
    /// Number of time points of the bounds grid.
    pub grid: Option<usize>,
    /// Scenario seeds of the bounds command.
    pub seeds: Option<Vec<u64>>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PATHS: usize = 1000;
pub const DEFAULT_GRID: usize = 100;

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: Model,
    /// Strategies with their display labels, in config order.
    pub strategies: Vec<(String, StrategySpec)>,
    pub settings: SimulationSettings,
    pub grid: usize,
    pub bound_seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(origin, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Builds and validates every block.
    pub fn resolve(&self, overrides: &Overrides) -> Result<Experiment, CliError> {
        let model = self.model.build(&self.claims)?;
        let blocks: Vec<&StrategyBlock> = self.strategy.iter().chain(&self.strategies).collect();
        let strategies = if blocks.is_empty() {
            default_strategies()
        } else {
            blocks.iter().map(|b| b.build()).collect()
        };
        for (label, spec) in &strategies {
            spec.validate(&model).map_err(|e| CliError::config(format!("strategy `{label}`"), e.to_string()))?;
        }
        let sim = &self.simulate;
        let seed = overrides.seed.or(sim.seed).unwrap_or(DEFAULT_SEED);
        let settings = SimulationSettings {
            n_paths: overrides.paths.or(sim.n_paths).unwrap_or(DEFAULT_PATHS),
            dt_max: sim.dt_max.unwrap_or(1e-3 * model.params.horizon),
            seed,
            pin_lambda: sim.pin_lambda,
            pin_alpha: sim.pin_alpha.clone(),
        };
        settings.validate(&model)?;
        let grid = overrides.grid.or(self.options.grid).unwrap_or(DEFAULT_GRID);
        if grid < 2 {
            return Err(CliError::config("options.grid", format!("need at least 2 points, got {grid}")));
        }
        let bound_seeds = match (&self.options.seeds, overrides.seed) {
            (Some(seeds), None) if !seeds.is_empty() => seeds.clone(),
            _ => vec![seed, seed + 1],
        };
        Ok(Experiment {
            model,
            strategies,
            settings,
            grid,
            bound_seeds,
            output_dir: overrides.out.clone().or_else(|| self.output_dir.clone()),
        })
    }
}

/// Full reinsurance, half retention and the certainty-equivalent rule,
/// all with Merton investment.
pub fn default_strategies() -> Vec<(String, StrategySpec)> {
    vec![
        ("full_reinsurance".into(), StrategySpec::merton_with(RetentionRule::FullReinsurance)),
        ("constant_0.5".into(), StrategySpec::merton_with(RetentionRule::Constant(0.5))),
        ("certainty_equivalent".into(), StrategySpec::merton_with(RetentionRule::CertaintyEquivalent)),
    ]
}

impl ModelBlock {
    fn build(&self, claims: &ClaimsBlock) -> Result<Model, CliError> {
        let mut entries = Vec::with_capacity(self.beta.len());
        for (key, value) in &self.beta {
            let set: LineSet = key
                .parse()
                .map_err(|e: reinsure_core::Error| CliError::config(format!("model.beta.\"{key}\""), e.to_string()))?;
            entries.push((set, *value));
        }
        let lines = entries.iter().map(|(s, _)| s.max_line()).max().unwrap_or(0);
        if lines == 0 {
            return Err(CliError::config("model.beta", "at least one subset required"));
        }
        let thinning = DirichletPrior::from_subsets(lines, &entries)?;
        let intensity = IntensityPrior::new(self.lambdas.clone(), self.pi.clone())?;
        let claims = claims.build(lines)?;
        let kappa = match self.kappa {
            Some(k) => k,
            None => default_kappa(&intensity, &thinning, &claims)?,
        };
        let params = ModelParams {
            r: self.r,
            mu: self.mu,
            sigma: self.sigma,
            alpha: self.alpha,
            eta: self.eta,
            theta: self.theta,
            kappa,
            horizon: self.horizon,
            x0: self.x0,
        };
        Ok(Model::new(params, intensity, thinning, claims)?)
    }
}

impl ClaimLawBlock {
    fn build(&self) -> Result<Arc<dyn ClaimLaw>, CliError> {
        Ok(match *self {
            ClaimLawBlock::TruncExp { rate, cutoff } => Arc::new(TruncatedExponential::new(rate, cutoff)?),
            ClaimLawBlock::Deterministic { value } => Arc::new(DeterministicClaim::new(value)?),
        })
    }
}

impl ClaimsBlock {
    fn build(&self, lines: usize) -> Result<ClaimModel, CliError> {
        match self {
            ClaimsBlock::Single(entry) if entry.identical || lines == 1 => {
                let law = entry.law.build()?;
                Ok(ClaimModel::product(vec![law; lines])?)
            }
            ClaimsBlock::Single(_) => Err(CliError::config(
                "claims",
                format!("a single law for {lines} lines must be marked \"identical\": true"),
            )),
            ClaimsBlock::PerLine(entries) => {
                if entries.len() != lines {
                    return Err(CliError::config(
                        "claims",
                        format!("{} laws given but `beta` implies {lines} lines", entries.len()),
                    ));
                }
                let laws = entries.iter().map(|e| e.law.build()).collect::<Result<Vec<_>, _>>()?;
                Ok(ClaimModel::product(laws)?)
            }
        }
    }
}

impl StrategyBlock {
    fn build(&self) -> (String, StrategySpec) {
        let investment = match self.investment {
            InvestmentBlock::Named(InvestmentName::Merton) => InvestmentRule::Merton,
            InvestmentBlock::Constant { constant } => InvestmentRule::Constant(constant),
        };
        let retention = match &self.retention {
            RetentionBlock::Named(RetentionName::Full) => RetentionRule::FullReinsurance,
            RetentionBlock::Named(RetentionName::CertaintyEquivalent) => RetentionRule::CertaintyEquivalent,
            RetentionBlock::Named(RetentionName::AprioriLower) => RetentionRule::AprioriLower,
            RetentionBlock::Named(RetentionName::AprioriUpper) => RetentionRule::AprioriUpper,
            RetentionBlock::Constant { constant } => RetentionRule::Constant(*constant),
            RetentionBlock::CompleteInfo { complete_info } => RetentionRule::CompleteInfo {
                lambda: complete_info.lambda,
                c: complete_info.c.clone(),
            },
        };
        let spec = StrategySpec::new(investment, retention);
        let label = self.label.clone().unwrap_or_else(|| spec.label());
        (label, spec)
    }
}
