//! Control laws: Merton-type investment, complete-information retention,
//! a-priori retention bounds and the certainty-equivalent retention.
//!
//! Every retention rule here is a root of a first-order condition
//! `(1 + θ) κ = h(t, a)` with `h` strictly increasing in `a`, clipped to
//! `[0, 1]`. The rules differ only in which `h` they use:
//!
//! | rule                  | `h(t, a)`                                   |
//! |-----------------------|---------------------------------------------|
//! | complete information  | `λ Σ_D c_D γ(t, a, D)`                       |
//! | certainty equivalent  | same with `λ = Σ λ_k p_k`, `c = w(q)`        |
//! | a-priori lower bound  | `λ_m max_D γ(t, a, D)`                       |
//! | a-priori upper bound  | `λ_1 min_D γ(t, a, D)`                       |

use crate::claims::{tilt, ClaimModel, ShockTransforms};
use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::model::{
    check_retention, check_simplex, enumerate_linesets, IntensityPrior, LineSet, Model,
    ModelParams,
};
use crate::roots::solve_increasing;

/// Merton-type investment amount `((μ - r) / σ²) (1 / α) e^{-r (T - t)}`.
pub fn xi_star(params: &ModelParams, t: f64) -> f64 {
    (params.mu - params.r) / (params.sigma * params.sigma) / params.alpha
        * (-params.r * (params.horizon - t)).exp()
}

/// Default bound on admissible investment: ten times the largest
/// `|ξ*(t)|` over `[0, T]`.
pub fn investment_bound(params: &ModelParams) -> f64 {
    10.0 * xi_star(params, 0.0).abs().max(xi_star(params, params.horizon).abs())
}

fn transforms_at(claims: &ClaimModel, params: &ModelParams, t: f64, a: f64) -> Result<ShockTransforms> {
    claims.transforms(tilt(params, t, a))
}

fn check_weights(c: &[f64], claims: &ClaimModel) -> Result<()> {
    let expected = crate::model::subset_count(claims.lines());
    if c.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "thinning weights have {} entries, expected {expected}",
            c.len()
        )));
    }
    check_simplex("c", c, 1e-9)
}

fn check_intensity(lam: f64) -> Result<()> {
    if !(lam.is_finite() && lam > 0.0) {
        return Err(Error::invalid("lambda", format!("must be finite and > 0, got {lam}")));
    }
    Ok(())
}

fn weighted_gamma(transforms: &ShockTransforms, c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(idx, w)| w * transforms.gamma(LineSet::from_index(idx).expect("canonical index")))
        .sum()
}

fn finite(value: f64, what: &str, t: f64, a: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{what} not finite at t = {t}, a = {a}")))
    }
}

/// Complete-information first-order function `λ Σ_D c_D γ(t, a, D)`.
pub fn h_lambda_c(
    claims: &ClaimModel,
    params: &ModelParams,
    t: f64,
    a: f64,
    lam: f64,
    c: &[f64],
) -> Result<f64> {
    params.check_time(t)?;
    check_intensity(lam)?;
    check_weights(c, claims)?;
    h_lambda_c_unchecked(claims, params, t, a, lam, c)
}

fn h_lambda_c_unchecked(
    claims: &ClaimModel,
    params: &ModelParams,
    t: f64,
    a: f64,
    lam: f64,
    c: &[f64],
) -> Result<f64> {
    let transforms = transforms_at(claims, params, t, a)?;
    finite(lam * weighted_gamma(&transforms, c), "h", t, a)
}

/// Unique `a` with `h_{λ,c}(t, a) = (1 + θ) κ`.
pub fn solve_retention_root(
    claims: &ClaimModel,
    params: &ModelParams,
    t: f64,
    lam: f64,
    c: &[f64],
) -> Result<f64> {
    params.check_time(t)?;
    check_intensity(lam)?;
    check_weights(c, claims)?;
    solve_increasing(
        |a| h_lambda_c_unchecked(claims, params, t, a, lam, c),
        params.foc_target(),
    )
}

/// Clips a first-order condition to `[0, 1]` using the threshold tests on
/// `A = h(0)` and `B = h(1)`, solving for the interior root only when
/// needed.
fn clipped_retention<F>(params: &ModelParams, h: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let at_zero = h(0.0)?;
    if params.theta <= at_zero / params.kappa - 1.0 {
        return Ok(0.0);
    }
    let at_one = h(1.0)?;
    if params.theta >= at_one / params.kappa - 1.0 {
        return Ok(1.0);
    }
    Ok(solve_increasing(h, params.foc_target())?.clamp(0.0, 1.0))
}

/// Optimal complete-information retention `b*_{λ,c}(t)`.
pub fn b_star_complete(
    claims: &ClaimModel,
    params: &ModelParams,
    t: f64,
    lam: f64,
    c: &[f64],
) -> Result<f64> {
    params.check_time(t)?;
    check_intensity(lam)?;
    check_weights(c, claims)?;
    clipped_retention(params, |a| h_lambda_c_unchecked(claims, params, t, a, lam, c))
}

/// Complete-information retention evaluated at the posterior means
/// `u(p) = Σ λ_k p_k` and `w(q) = (β + q) / ‖β + q‖`. Upper bound for the
/// optimal partially observed retention.
pub fn certainty_equivalent_retention(model: &Model, t: f64, state: &FilterState) -> Result<f64> {
    let lam = state.lambda_hat(&model.intensity);
    let c = state.thinning_posterior_mean(&model.thinning);
    b_star_complete(&model.claims, &model.params, t, lam, &c)
}

/// `λ_1 min_D γ(t, a, D)`.
pub fn h_min(claims: &ClaimModel, params: &ModelParams, prior: &IntensityPrior, t: f64, a: f64) -> Result<f64> {
    let transforms = transforms_at(claims, params, t, a)?;
    let lowest = enumerate_linesets(claims.lines())?
        .into_iter()
        .map(|set| transforms.gamma(set))
        .fold(f64::INFINITY, f64::min);
    finite(prior.min_lambda() * lowest, "h_min", t, a)
}

/// `λ_m max_D γ(t, a, D)`.
pub fn h_max(claims: &ClaimModel, params: &ModelParams, prior: &IntensityPrior, t: f64, a: f64) -> Result<f64> {
    let transforms = transforms_at(claims, params, t, a)?;
    let highest = enumerate_linesets(claims.lines())?
        .into_iter()
        .map(|set| transforms.gamma(set))
        .fold(f64::NEG_INFINITY, f64::max);
    finite(prior.max_lambda() * highest, "h_max", t, a)
}

/// Retention bounds valid for every filter state at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Raw roots `(a_max, a_min)` of `h_max = (1+θ)κ` and `h_min = (1+θ)κ`.
pub fn apriori_roots(
    claims: &ClaimModel,
    params: &ModelParams,
    prior: &IntensityPrior,
    t: f64,
) -> Result<(f64, f64)> {
    params.check_time(t)?;
    let target = params.foc_target();
    let a_max = solve_increasing(|a| h_max(claims, params, prior, t, a), target)?;
    let a_min = solve_increasing(|a| h_min(claims, params, prior, t, a), target)?;
    Ok((a_max, a_min))
}

/// `max{0, a_max(t)} <= b(t) <= min{1, a_min(t)}`.
pub fn apriori_bounds(
    claims: &ClaimModel,
    params: &ModelParams,
    prior: &IntensityPrior,
    t: f64,
) -> Result<RetentionBounds> {
    let (a_max, a_min) = apriori_roots(claims, params, prior, t)?;
    Ok(RetentionBounds {
        lower: a_max.clamp(0.0, 1.0),
        upper: a_min.clamp(0.0, 1.0),
    })
}

/// Single-line retention from `c'(b) = λ E[Y e^{α b Y}]`, clipped to
/// `[0, 1]`. Ignores discounting, so it agrees with [`b_star_complete`]
/// only when `r = 0`.
pub fn euler_retention_cramer_lundberg(claims: &ClaimModel, params: &ModelParams, lam: f64) -> Result<f64> {
    if claims.lines() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "requires a single line, got {}",
            claims.lines()
        )));
    }
    check_intensity(lam)?;
    let law = claims.marginal(0);
    let marginal_claim_cost = |b: f64| {
        let value = lam * law.tilted_mean(params.alpha * b);
        finite(value, "λ E[Y e^{αbY}]", 0.0, b)
    };
    let root = solve_increasing(marginal_claim_cost, params.foc_target())?;
    Ok(root.clamp(0.0, 1.0))
}

/// Ratios `g(t, J(p), v(q, D)) / g(t, p, q)` entering the partially
/// observed first-order condition.
pub trait GRatio {
    fn ratio(&self, t: f64, state: &FilterState, set: LineSet) -> Result<f64>;
}

/// Replaces every ratio by one; the first-order condition then reduces to
/// the certainty-equivalent one.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitGRatio;

impl GRatio for UnitGRatio {
    fn ratio(&self, _t: f64, _state: &FilterState, _set: LineSet) -> Result<f64> {
        Ok(1.0)
    }
}

/// Per-subset weights `w_D(q) · ratio_D` of the partially observed
/// first-order function.
fn partial_weights<G: GRatio + ?Sized>(model: &Model, t: f64, state: &FilterState, oracle: &G) -> Result<Vec<f64>> {
    let w = state.thinning_posterior_mean(&model.thinning);
    w.iter()
        .enumerate()
        .map(|(idx, wd)| {
            let ratio = oracle.ratio(t, state, LineSet::from_index(idx)?)?;
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(Error::Domain(format!("g ratio {ratio} for subset index {idx}")));
            }
            Ok(wd * ratio)
        })
        .collect()
}

/// Partially observed first-order function
/// `Σ_k λ_k p_k Σ_D w_D(q) [g(t,J(p),v(q,D)) / g(t,p,q)] γ(t, a, D)`.
pub fn h_partial<G: GRatio + ?Sized>(model: &Model, t: f64, state: &FilterState, a: f64, oracle: &G) -> Result<f64> {
    model.params.check_time(t)?;
    let weights = partial_weights(model, t, state, oracle)?;
    let transforms = transforms_at(&model.claims, &model.params, t, a)?;
    finite(
        state.lambda_hat(&model.intensity) * weighted_gamma(&transforms, &weights),
        "h",
        t,
        a,
    )
}

/// Retention solving the partially observed first-order condition with
/// the supplied `g` ratios, clipped like the complete-information rule.
pub fn partial_info_retention<G: GRatio + ?Sized>(model: &Model, t: f64, state: &FilterState, oracle: &G) -> Result<f64> {
    model.params.check_time(t)?;
    let weights = partial_weights(model, t, state, oracle)?;
    let lam = state.lambda_hat(&model.intensity);
    clipped_retention(&model.params, |a| {
        let transforms = transforms_at(&model.claims, &model.params, t, a)?;
        finite(lam * weighted_gamma(&transforms, &weights), "h", t, a)
    })
}

/// Investment component of a strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum InvestmentRule {
    /// `ξ*(t)`
    Merton,
    Constant(f64),
}

/// Reinsurance component of a strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum RetentionRule {
    /// `b ≡ 0`
    FullReinsurance,
    Constant(f64),
    /// `b*_{λ,c}(t)` for fixed parameters.
    CompleteInfo { lambda: f64, c: Vec<f64> },
    /// `b*_{u(p_{t-}), w(q_{t-})}(t)`.
    CertaintyEquivalent,
    AprioriLower,
    AprioriUpper,
}

/// Investment and reinsurance rule evaluated in feedback form on the
/// pre-event state.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub investment: InvestmentRule,
    pub retention: RetentionRule,
}

/// Control values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub xi: f64,
    pub b: f64,
}

impl StrategySpec {
    pub fn new(investment: InvestmentRule, retention: RetentionRule) -> Self {
        StrategySpec { investment, retention }
    }

    pub fn merton_with(retention: RetentionRule) -> Self {
        StrategySpec::new(InvestmentRule::Merton, retention)
    }

    /// Checks admissibility against the model: constant retention in
    /// `[0, 1]`, `|ξ| <= K`, complete-information parameters inside the
    /// prior's range.
    pub fn validate(&self, model: &Model) -> Result<()> {
        if let InvestmentRule::Constant(xi) = self.investment {
            let bound = investment_bound(&model.params);
            if !(xi.is_finite() && xi.abs() <= bound) {
                return Err(Error::invalid(
                    "investment",
                    format!("constant investment {xi} exceeds bound {bound}"),
                ));
            }
        }
        match &self.retention {
            RetentionRule::Constant(b) => check_retention(*b),
            RetentionRule::CompleteInfo { lambda, c } => {
                let prior = &model.intensity;
                if !(prior.min_lambda()..=prior.max_lambda()).contains(lambda) {
                    return Err(Error::invalid(
                        "lambda",
                        format!(
                            "complete-information intensity {lambda} outside [{}, {}]",
                            prior.min_lambda(),
                            prior.max_lambda()
                        ),
                    ));
                }
                check_weights(c, &model.claims)
            }
            _ => Ok(()),
        }
    }

    /// Whether the rule reads the filter state (and hence changes at
    /// events).
    pub fn is_adaptive(&self) -> bool {
        matches!(self.retention, RetentionRule::CertaintyEquivalent)
    }

    /// Controls at time `t` given the left-limit filter state.
    pub fn controls(&self, model: &Model, t: f64, state: &FilterState) -> Result<Controls> {
        let xi = match self.investment {
            InvestmentRule::Merton => xi_star(&model.params, t),
            InvestmentRule::Constant(xi) => xi,
        };
        let b = match &self.retention {
            RetentionRule::FullReinsurance => 0.0,
            RetentionRule::Constant(b) => *b,
            RetentionRule::CompleteInfo { lambda, c } => {
                b_star_complete(&model.claims, &model.params, t, *lambda, c)?
            }
            RetentionRule::CertaintyEquivalent => certainty_equivalent_retention(model, t, state)?,
            RetentionRule::AprioriLower => {
                apriori_bounds(&model.claims, &model.params, &model.intensity, t)?.lower
            }
            RetentionRule::AprioriUpper => {
                apriori_bounds(&model.claims, &model.params, &model.intensity, t)?.upper
            }
        };
        Ok(Controls { xi, b })
    }

    /// Short label used in file names and tables.
    pub fn label(&self) -> String {
        let inv = match self.investment {
            InvestmentRule::Merton => "merton".to_string(),
            InvestmentRule::Constant(x) => format!("xi{x}"),
        };
        let ret = match &self.retention {
            RetentionRule::FullReinsurance => "full".to_string(),
            RetentionRule::Constant(b) => format!("b{b}"),
            RetentionRule::CompleteInfo { lambda, .. } => format!("complete{lambda}"),
            RetentionRule::CertaintyEquivalent => "ce".to_string(),
            RetentionRule::AprioriLower => "lower".to_string(),
            RetentionRule::AprioriUpper => "upper".to_string(),
        };
        format!("{inv}_{ret}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::{DeterministicClaim, TruncatedExponential};
    use crate::model::DirichletPrior;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Golden values from `tests/golden/generate.py`.
    fn golden(key: &str) -> f64 {
        let text = include_str!("../tests/golden/strategy_golden.json");
        let json: serde_json::Value = serde_json::from_str(text).unwrap();
        json[key].as_f64().unwrap()
    }

    fn unit_claim_setup(theta: f64) -> (ClaimModel, ModelParams) {
        let claims = ClaimModel::identical(DeterministicClaim::new(1.0).unwrap(), 1).unwrap();
        let params = ModelParams {
            r: 0.0,
            alpha: 1.0,
            kappa: 1.0,
            eta: 0.1,
            theta,
            ..ModelParams::reference_example()
        };
        (claims, params)
    }

    const PRIOR_WEIGHTS: [f64; 3] = [0.40, 0.35, 0.25];

    #[test]
    fn xi_star_values() {
        let params = ModelParams::reference_example();
        assert_relative_eq!(xi_star(&params, params.horizon), 0.19 / 1.8, max_relative = 1e-14);
        assert_relative_eq!(xi_star(&params, params.horizon), 0.105556, epsilon = 1e-6);
        assert_relative_eq!(xi_star(&params, 0.0), 0.19 / 1.8 * (-0.1f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(xi_star(&params, 0.0), 0.095511, epsilon = 1e-6);
        let flat = ModelParams { mu: params.r, ..params };
        assert_eq!(xi_star(&flat, 3.0), 0.0);
    }

    #[test]
    fn h_unit_claim_is_exponential() {
        let (claims, params) = unit_claim_setup(1.0);
        for a in [-3.0, 0.0, 0.5, 2.0] {
            let h = h_lambda_c(&claims, &params, 1.0, a, 1.0, &[1.0]).unwrap();
            assert_relative_eq!(h, f64::exp(a), max_relative = 1e-14);
        }
    }

    #[test]
    fn h_at_zero_is_time_independent_claim_rate() {
        let model = Model::reference_example();
        let mean = model.claims.marginal(0).mean();
        let expected = 3.4 * (0.40 * mean + 0.35 * mean + 0.25 * 2.0 * mean);
        for t in [0.0, 2.5, 10.0] {
            let h = h_lambda_c(&model.claims, &model.params, t, 0.0, 3.4, &PRIOR_WEIGHTS).unwrap();
            assert_relative_eq!(h, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn h_decays_for_very_negative_retention() {
        let model = Model::reference_example();
        let at = |a: f64| h_lambda_c(&model.claims, &model.params, 0.0, a, 3.4, &PRIOR_WEIGHTS).unwrap();
        assert_relative_eq!(at(-50.0), golden("h_ce_a_minus50"), max_relative = 1e-9);
        // bounded support: decay is like 1/a², not exponential
        let grid = [-50.0, -500.0, -5000.0, -50000.0];
        let values: Vec<f64> = grid.iter().map(|a| at(*a)).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        let scaled: Vec<f64> = grid.iter().zip(&values).map(|(a, h)| a * a * h).collect();
        assert!((scaled[3] / scaled[2] - 1.0).abs() < 0.01);
        assert!(values[3] < 1e-7);
    }

    #[test]
    fn h_is_strictly_increasing_and_convex() {
        let model = Model::reference_example();
        let grid: Vec<f64> = (0..400).map(|k| -5.0 + 0.025 * k as f64).collect();
        let h: Vec<f64> = grid
            .iter()
            .map(|a| h_lambda_c(&model.claims, &model.params, 1.0, *a, 3.4, &PRIOR_WEIGHTS).unwrap())
            .collect();
        assert!(h.windows(2).all(|w| w[1] > w[0]));
        assert!(h.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] > 0.0));
    }

    #[test]
    fn analytic_root_for_unit_claim() {
        let e = std::f64::consts::E;
        let (claims, params) = unit_claim_setup(e - 1.0);
        let root = solve_retention_root(&claims, &params, 0.0, 1.0, &[1.0]).unwrap();
        assert!((root - 1.0).abs() < 1e-10);
        assert_eq!(b_star_complete(&claims, &params, 0.0, 1.0, &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn zero_root_when_foc_holds_at_zero() {
        // (1 + θ) κ = h(t, 0) = 1  ⇒  θ = 0; keep η below it
        let (claims, mut params) = unit_claim_setup(0.0);
        params.eta = -0.5;
        let root = solve_retention_root(&claims, &params, 0.0, 1.0, &[1.0]).unwrap();
        assert!(root.abs() < 1e-10);
    }

    #[test]
    fn reference_setup_roots_match_golden() {
        let model = Model::reference_example();
        let (claims, params) = (&model.claims, &model.params);
        let r0 = solve_retention_root(claims, params, 0.0, 3.4, &PRIOR_WEIGHTS).unwrap();
        let r_t = solve_retention_root(claims, params, 10.0, 3.4, &PRIOR_WEIGHTS).unwrap();
        assert!((r0 - golden("root_ce_prior_t0")).abs() < 1e-9);
        assert!((r_t - golden("root_ce_prior_tT")).abs() < 1e-9);
        let (a_max, a_min) = apriori_roots(claims, params, &model.intensity, 0.0).unwrap();
        assert!((a_max - golden("a_max_t0")).abs() < 1e-9);
        assert!((a_min - golden("a_min_t0")).abs() < 1e-9);
        let (a_max, a_min) = apriori_roots(claims, params, &model.intensity, 10.0).unwrap();
        assert!((a_max - golden("a_max_tT")).abs() < 1e-9);
        assert!((a_min - golden("a_min_tT")).abs() < 1e-9);
    }

    #[test]
    fn root_residual_is_small() {
        let model = Model::reference_example();
        let target = model.params.foc_target();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = rng.random_range(0.0..=10.0);
            let lam = rng.random_range(2.0..=5.0);
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let c: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let root = solve_retention_root(&model.claims, &model.params, t, lam, &c).unwrap();
            let h = h_lambda_c(&model.claims, &model.params, t, root, lam, &c).unwrap();
            assert!((h - target).abs() <= 1e-8 * target);
        }
    }

    #[test]
    fn root_increases_with_reinsurer_loading() {
        let model = Model::reference_example();
        let roots: Vec<f64> = (0..50)
            .map(|k| {
                let params = ModelParams {
                    theta: 0.45 + 0.05 * k as f64,
                    ..model.params.clone()
                };
                solve_retention_root(&model.claims, &params, 2.0, 3.4, &PRIOR_WEIGHTS).unwrap()
            })
            .collect();
        assert!(roots.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn full_retention_branch_for_expensive_reinsurance() {
        let model = Model::reference_example();
        let params = ModelParams { theta: 50.0, ..model.params.clone() };
        assert!(h_lambda_c(&model.claims, &params, 0.0, 1.0, 3.4, &PRIOR_WEIGHTS).unwrap() < params.foc_target());
        assert_eq!(b_star_complete(&model.claims, &params, 0.0, 3.4, &PRIOR_WEIGHTS).unwrap(), 1.0);
    }

    #[test]
    fn zero_retention_on_lower_threshold() {
        let model = Model::reference_example();
        let a0 = h_lambda_c(&model.claims, &model.params, 0.0, 0.0, 3.4, &PRIOR_WEIGHTS).unwrap();
        let params = ModelParams {
            eta: 0.01,
            theta: a0 / model.params.kappa - 1.0,
            ..model.params.clone()
        };
        assert_eq!(b_star_complete(&model.claims, &params, 0.0, 3.4, &PRIOR_WEIGHTS).unwrap(), 0.0);
    }

    #[test]
    fn complete_info_retention_is_nonincreasing_in_lambda() {
        let model = Model::reference_example();
        let params = ModelParams { kappa: 3.0, ..model.params.clone() };
        let b: Vec<f64> = (0..60)
            .map(|k| b_star_complete(&model.claims, &params, 5.0, 2.0 + 0.05 * k as f64, &PRIOR_WEIGHTS).unwrap())
            .collect();
        assert!(b.windows(2).all(|w| w[1] <= w[0]));
        assert!(b[0] > b[59]);
    }

    #[test]
    fn complete_info_retention_is_continuous_in_time() {
        let model = Model::reference_example();
        let params = ModelParams { kappa: 3.0, ..model.params.clone() };
        let eval = |n: usize| -> Vec<f64> {
            (0..=n)
                .map(|k| {
                    let t = 10.0 * k as f64 / n as f64;
                    b_star_complete(&model.claims, &params, t, 3.4, &PRIOR_WEIGHTS).unwrap()
                })
                .collect()
        };
        let coarse = eval(100);
        let lipschitz = coarse.windows(2).map(|w| (w[1] - w[0]).abs() / 0.1).fold(0.0, f64::max);
        assert!(coarse.iter().any(|b| *b > 0.0 && *b < 1.0));
        let fine = eval(1000);
        let step = fine.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(step <= 1.5 * lipschitz * 0.01 + 1e-12, "{step} vs {lipschitz}");
    }

    #[test]
    fn single_intensity_single_line_bounds_collapse() {
        let claims = ClaimModel::identical(TruncatedExponential::new(1.0, 3.0).unwrap(), 1).unwrap();
        let prior = IntensityPrior::new(vec![1.5], vec![1.0]).unwrap();
        let params = ModelParams { kappa: 1.0, ..ModelParams::reference_example() };
        for t in [0.0, 5.0, 10.0] {
            let bounds = apriori_bounds(&claims, &params, &prior, t).unwrap();
            let b = b_star_complete(&claims, &params, t, 1.5, &[1.0]).unwrap();
            assert!((bounds.lower - b).abs() < 1e-10);
            assert!((bounds.upper - b).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_marginal_extremes_are_singleton_and_full_set() {
        let model = Model::reference_example();
        let claims = ClaimModel::identical(TruncatedExponential::new(1.0, 3.0).unwrap(), 3).unwrap();
        let params = &model.params;
        let sets = enumerate_linesets(3).unwrap();
        for a in [0.0, 0.3, 1.0, 2.0] {
            let transforms = claims.transforms(tilt(params, 4.0, a)).unwrap();
            let gammas: Vec<f64> = sets.iter().map(|s| transforms.gamma(*s)).collect();
            let imax = (0..gammas.len()).max_by(|i, j| gammas[*i].total_cmp(&gammas[*j])).unwrap();
            let imin = (0..gammas.len()).min_by(|i, j| gammas[*i].total_cmp(&gammas[*j])).unwrap();
            assert_eq!(sets[imax].len(), 3);
            assert_eq!(sets[imin].len(), 1);
        }
    }

    #[test]
    fn bounds_sandwich_certainty_equivalent() {
        let model = Model::reference_example();
        let params = ModelParams { kappa: 3.0, ..model.params.clone() };
        let model = Model { params, ..model };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 0..=20 {
            let t = 0.5 * k as f64;
            let bounds = apriori_bounds(&model.claims, &model.params, &model.intensity, t).unwrap();
            assert!(bounds.lower <= bounds.upper);
            for _ in 0..50 {
                let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                let p = raw.iter().map(|x| x / s).collect();
                let q = (0..3).map(|_| rng.random_range(0..40)).collect();
                let state = FilterState::new(t, p, q).unwrap();
                let b = certainty_equivalent_retention(&model, t, &state).unwrap();
                assert!(bounds.lower <= b && b <= bounds.upper);
            }
        }
    }

    #[test]
    fn certainty_equivalent_at_prior() {
        let model = Model::reference_example();
        let state = FilterState::initial(&model.intensity, &model.thinning);
        let b = certainty_equivalent_retention(&model, 0.0, &state).unwrap();
        let direct = b_star_complete(&model.claims, &model.params, 0.0, 3.4, &PRIOR_WEIGHTS).unwrap();
        assert_eq!(b, direct);
    }

    #[test]
    fn certainty_equivalent_concentrates_on_complete_information() {
        let model = Model::reference_example();
        let params = ModelParams { kappa: 2.5, ..model.params.clone() };
        let model = Model { params, ..model };
        for (j, mask) in [(0usize, 1u32), (1, 3), (2, 2)] {
            let mut p = vec![0.0; 3];
            p[j] = 1.0;
            let mut q = vec![0u64; 3];
            q[mask as usize - 1] = 1_000_000;
            let state = FilterState::new(3.0, p, q).unwrap();
            let ce = certainty_equivalent_retention(&model, 3.0, &state).unwrap();
            let mut e = vec![0.0; 3];
            e[mask as usize - 1] = 1.0;
            let exact = b_star_complete(&model.claims, &model.params, 3.0, model.intensity.lambdas()[j], &e).unwrap();
            assert!((ce - exact).abs() < 1e-4, "{ce} vs {exact}");
        }
    }

    #[test]
    fn cramer_lundberg_unit_claim() {
        let e = std::f64::consts::E;
        let (claims, params) = unit_claim_setup(e - 1.0);
        let b = euler_retention_cramer_lundberg(&claims, &params, 1.0).unwrap();
        assert!((b - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cramer_lundberg_agrees_with_complete_info_without_discounting() {
        let claims = ClaimModel::identical(TruncatedExponential::new(1.0, 3.0).unwrap(), 1).unwrap();
        let params = ModelParams { r: 0.0, kappa: 1.0, ..ModelParams::reference_example() };
        let b = euler_retention_cramer_lundberg(&claims, &params, 1.5).unwrap();
        assert!(b > 0.0 && b < 1.0);
        for k in 0..=10 {
            let t = k as f64;
            let complete = b_star_complete(&claims, &params, t, 1.5, &[1.0]).unwrap();
            assert!((b - complete).abs() < 1e-10);
        }
    }

    #[test]
    fn cramer_lundberg_retention_falls_with_intensity() {
        let claims = ClaimModel::identical(TruncatedExponential::new(1.0, 3.0).unwrap(), 1).unwrap();
        let params = ModelParams { r: 0.0, kappa: 1.0, ..ModelParams::reference_example() };
        let b1 = euler_retention_cramer_lundberg(&claims, &params, 1.5).unwrap();
        let b2 = euler_retention_cramer_lundberg(&claims, &params, 3.0).unwrap();
        assert!(b2 < b1);
        let two = ClaimModel::identical(TruncatedExponential::new(1.0, 3.0).unwrap(), 2).unwrap();
        assert!(euler_retention_cramer_lundberg(&two, &params, 1.5).is_err());
    }

    #[test]
    fn unit_ratio_reduces_partial_condition_to_certainty_equivalent() {
        let model = Model::reference_example();
        let prior = &model.intensity;
        let state = FilterState::initial(prior, &model.thinning)
            .propagate(1.2, prior)
            .unwrap()
            .jump_update(LineSet::new(3).unwrap(), prior)
            .unwrap();
        let w = state.thinning_posterior_mean(&model.thinning);
        let lam = state.lambda_hat(prior);
        for a in [-1.0, 0.0, 0.8] {
            let partial = h_partial(&model, 1.2, &state, a, &UnitGRatio).unwrap();
            let full = h_lambda_c(&model.claims, &model.params, 1.2, a, lam, &w).unwrap();
            assert_relative_eq!(partial, full, max_relative = 1e-14);
        }
        assert_eq!(
            partial_info_retention(&model, 1.2, &state, &UnitGRatio).unwrap(),
            certainty_equivalent_retention(&model, 1.2, &state).unwrap()
        );
    }

    struct Scaled(f64);

    impl GRatio for Scaled {
        fn ratio(&self, _t: f64, _s: &FilterState, set: LineSet) -> Result<f64> {
            Ok(if set.len() > 1 { self.0 } else { 1.0 })
        }
    }

    #[test]
    fn larger_ratios_lower_the_partial_retention() {
        let model = Model::reference_example();
        let params = ModelParams { kappa: 2.5, ..model.params.clone() };
        let model = Model { params, ..model };
        let state = FilterState::initial(&model.intensity, &model.thinning);
        let base = partial_info_retention(&model, 0.0, &state, &UnitGRatio).unwrap();
        let heavier = partial_info_retention(&model, 0.0, &state, &Scaled(1.5)).unwrap();
        assert!(base > 0.0 && base < 1.0);
        assert!(heavier < base);
        assert!(partial_info_retention(&model, 0.0, &state, &Scaled(-1.0)).is_err());
    }

    #[test]
    fn spec_validation() {
        let model = Model::reference_example();
        let ok = StrategySpec::merton_with(RetentionRule::Constant(0.5));
        assert!(ok.validate(&model).is_ok());
        assert!(StrategySpec::merton_with(RetentionRule::Constant(1.5)).validate(&model).is_err());
        let too_big = StrategySpec::new(InvestmentRule::Constant(100.0), RetentionRule::FullReinsurance);
        assert!(too_big.validate(&model).is_err());
        let outside = RetentionRule::CompleteInfo { lambda: 6.0, c: PRIOR_WEIGHTS.to_vec() };
        assert!(StrategySpec::merton_with(outside).validate(&model).is_err());
        let bad_c = RetentionRule::CompleteInfo { lambda: 3.0, c: vec![0.5, 0.5] };
        assert!(StrategySpec::merton_with(bad_c).validate(&model).is_err());
        let good = RetentionRule::CompleteInfo { lambda: 3.0, c: PRIOR_WEIGHTS.to_vec() };
        assert!(StrategySpec::merton_with(good).validate(&model).is_ok());
    }

    #[test]
    fn controls_dispatch() {
        let model = Model::reference_example();
        let state = FilterState::initial(&model.intensity, &model.thinning);
        let full = StrategySpec::merton_with(RetentionRule::FullReinsurance)
            .controls(&model, 0.0, &state)
            .unwrap();
        assert_eq!(full.b, 0.0);
        assert_relative_eq!(full.xi, xi_star(&model.params, 0.0));
        let lower = StrategySpec::merton_with(RetentionRule::AprioriLower).controls(&model, 0.0, &state).unwrap();
        let upper = StrategySpec::merton_with(RetentionRule::AprioriUpper).controls(&model, 0.0, &state).unwrap();
        assert!(lower.b <= upper.b);
        let constant = StrategySpec::new(InvestmentRule::Constant(0.0), RetentionRule::Constant(0.25))
            .controls(&model, 0.0, &state)
            .unwrap();
        assert_eq!(constant, Controls { xi: 0.0, b: 0.25 });
    }

    #[test]
    fn dirichlet_prior_unused_import_guard() {
        // beta enters the certainty-equivalent rule only through w(q)
        let dir = DirichletPrior::new(2, vec![8.0, 7.0, 5.0]).unwrap();
        assert_eq!(dir.mean(), PRIOR_WEIGHTS.to_vec());
    }
}
