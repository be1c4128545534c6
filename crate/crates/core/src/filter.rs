//! Exact Bayesian state for the unknown intensity and thinning
//! probabilities.
//!
//! Between claim events the intensity posterior evolves deterministically
//! by exponential reweighting, `p_j ∝ p_j e^{-λ_j dt}`, which is the exact
//! solution of the inter-jump filter ODE. At an event it jumps to
//! `p_j ∝ λ_j p_j`. The subset counts `q` are the Dirichlet sufficient
//! statistics.

use crate::claims::ClaimModel;
use crate::error::{Error, Result};
use crate::model::{dot, DirichletPrior, IntensityPrior, LineSet};

/// Simplex tolerance maintained by every filter operation.
pub const FILTER_SIMPLEX_TOL: f64 = 1e-10;

/// Filter state `(t, p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub t: f64,
    p: Vec<f64>,
    q: Vec<u64>,
}

impl FilterState {
    /// State at time zero: `p = π`, `q = 0`.
    pub fn initial(prior: &IntensityPrior, dir: &DirichletPrior) -> Self {
        FilterState {
            t: 0.0,
            p: prior.pi().to_vec(),
            q: vec![0; dir.beta().len()],
        }
    }

    /// Arbitrary state; `p` is renormalised after validation.
    pub fn new(t: f64, p: Vec<f64>, q: Vec<u64>) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
        }
        crate::model::check_simplex("p", &p, 1e-9)?;
        if q.is_empty() {
            return Err(Error::invalid("q", "needs one count per subset"));
        }
        let mut state = FilterState { t, p, q };
        state.renormalize();
        Ok(state)
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[u64] {
        &self.q
    }

    /// Number of processed events `Σ_D q_D`.
    pub fn event_count(&self) -> u64 {
        self.q.iter().sum()
    }

    fn renormalize(&mut self) {
        let sum: f64 = self.p.iter().sum();
        self.p.iter_mut().for_each(|x| *x /= sum);
    }

    fn check_dims(&self, prior: &IntensityPrior) -> Result<()> {
        if self.p.len() != prior.len() {
            return Err(Error::DimensionMismatch(format!(
                "filter has {} intensity weights but the prior has {}",
                self.p.len(),
                prior.len()
            )));
        }
        Ok(())
    }

    /// Advances the filter by `dt` with no event in `(t, t + dt]`.
    pub fn propagate(&self, dt: f64, prior: &IntensityPrior) -> Result<FilterState> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::invalid("dt", format!("must be finite and >= 0, got {dt}")));
        }
        self.check_dims(prior)?;
        let lambda_min = prior.min_lambda();
        let mut next = self.clone();
        for (pj, lj) in next.p.iter_mut().zip(prior.lambdas()) {
            *pj *= (-(lj - lambda_min) * dt).exp();
        }
        next.renormalize();
        next.t = self.t + dt;
        Ok(next)
    }

    /// Event at the current time affecting the lines in `set`.
    pub fn jump_update(&self, set: LineSet, prior: &IntensityPrior) -> Result<FilterState> {
        self.check_dims(prior)?;
        if set.index() >= self.q.len() {
            return Err(Error::DimensionMismatch(format!(
                "subset {{{set}}} has no count slot among {}",
                self.q.len()
            )));
        }
        let rate = self.lambda_hat(prior);
        if rate.is_nan() || rate <= 0.0 {
            return Err(Error::Domain(format!("posterior mean intensity {rate} is not positive")));
        }
        let mut next = self.clone();
        for (pj, lj) in next.p.iter_mut().zip(prior.lambdas()) {
            *pj *= lj / rate;
        }
        next.renormalize();
        next.q[set.index()] += 1;
        Ok(next)
    }

    /// Posterior mean intensity `Σ_k λ_k p_k`.
    pub fn lambda_hat(&self, prior: &IntensityPrior) -> f64 {
        dot(prior.lambdas(), &self.p)
    }

    /// Posterior mean of the thinning probabilities,
    /// `(β_D + q_D) / ‖β + q‖`.
    pub fn thinning_posterior_mean(&self, dir: &DirichletPrior) -> Vec<f64> {
        let total: f64 = dir.norm() + self.event_count() as f64;
        dir.beta()
            .iter()
            .zip(&self.q)
            .map(|(b, q)| (b + *q as f64) / total)
            .collect()
    }

    /// Posterior parameter `β + q` of the Dirichlet law of the thinning
    /// probabilities.
    pub fn thinning_posterior(&self, dir: &DirichletPrior) -> Vec<f64> {
        dir.beta()
            .iter()
            .zip(&self.q)
            .map(|(b, q)| b + *q as f64)
            .collect()
    }
}

/// Compensator rate of the aggregate claim process under the observable
/// filtration: `Λ̂ Σ_D w_D(q) Σ_{i∈D} E[Y^i]`. Multiplied by the retention
/// it is the drift correction in the compensated surplus dynamics.
pub fn expected_claim_rate(
    state: &FilterState,
    prior: &IntensityPrior,
    dir: &DirichletPrior,
    claims: &ClaimModel,
) -> f64 {
    let means = claims.means();
    let weights = state.thinning_posterior_mean(dir);
    let per_shock: f64 = weights
        .iter()
        .enumerate()
        .map(|(idx, w)| {
            let set = LineSet::from_index(idx).expect("canonical index");
            w * set.lines().map(|i| means[i]).sum::<f64>()
        })
        .sum();
    state.lambda_hat(prior) * per_shock
}
