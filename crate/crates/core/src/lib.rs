//! Investment and proportional reinsurance under Bayesian learning of the
//! claim intensity and of common-shock thinning probabilities.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: market/premium constants, priors and business-line subsets.
//! - [`claims`]: per-line claim-size laws and the shock-level functional γ.
//! - [`filter`]: the exact intensity filter `p` and the subset counts `q`.
//! - [`strategy`]: Merton investment, complete-information retention,
//!   a-priori bounds and the certainty-equivalent retention.
//! - [`simulate`]: scenario sampling, surplus paths and Monte Carlo
//!   estimators of the value function and of `g`.

pub mod claims;
pub mod error;
pub mod filter;
pub mod model;
pub mod quadrature;
pub mod roots;
pub mod simulate;
pub mod strategy;

pub use claims::{ClaimLaw, ClaimModel, DeterministicClaim, DensityClaim, TruncatedExponential};
pub use error::{Error, Result};
pub use filter::FilterState;
pub use model::{DirichletPrior, IntensityPrior, LineSet, Model, ModelParams};
pub use simulate::{Estimate, PathRecord, Scenario, SimulationSettings};
pub use strategy::{InvestmentRule, RetentionRule, StrategySpec};
