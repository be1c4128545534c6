//! Scenario sampling, surplus paths and Monte Carlo estimators.
//!
//! A [`Scenario`] fixes everything random except the Brownian motion: the
//! realised intensity, the realised thinning probabilities and the claim
//! events. Its `brownian_seed` drives the diffusion, so running several
//! strategies on one scenario gives common random numbers.
//!
//! Path `i` of a Monte Carlo run draws its scenario from a ChaCha8 stream
//! selected by `(seed, i)`, so results do not depend on the number of
//! worker threads.
//!
//! Between grid points the surplus is stepped by the exponential Euler
//! scheme
//!
//! ```text
//! X_{k+1} = e^{r h} (X_k + ((μ - r) ξ_k + c(b_k)) h + ξ_k σ √h Z_k)
//! ```
//!
//! which has first-order weak and strong error like plain Euler–Maruyama
//! but maps a shift of the initial capital by `δ` to a terminal shift of
//! exactly `δ e^{rT}` (up to rounding).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::FilterState;
use crate::model::{check_simplex, LineSet, Model};
use crate::strategy::{Controls, GRatio, StrategySpec};

/// Monte Carlo settings shared by all estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    pub n_paths: usize,
    /// Largest time step of the surplus grid.
    pub dt_max: f64,
    pub seed: u64,
    /// Realised intensity; drawn from the prior when absent.
    pub pin_lambda: Option<f64>,
    /// Realised thinning probabilities; drawn from the Dirichlet prior
    /// when absent.
    pub pin_alpha: Option<Vec<f64>>,
}

impl SimulationSettings {
    /// `n_paths` paths with `dt_max = T / 1000` and nothing pinned.
    pub fn new(model: &Model, n_paths: usize, seed: u64) -> Self {
        SimulationSettings {
            n_paths,
            dt_max: 1e-3 * model.params.horizon,
            seed,
            pin_lambda: None,
            pin_alpha: None,
        }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        check_dt(self.dt_max)?;
        if let Some(lam) = self.pin_lambda {
            if !(lam.is_finite() && lam > 0.0) {
                return Err(Error::invalid("pin_lambda", format!("must be finite and > 0, got {lam}")));
            }
        }
        if let Some(alpha) = &self.pin_alpha {
            if alpha.len() != model.subsets() {
                return Err(Error::DimensionMismatch(format!(
                    "pin_alpha has {} entries, expected {}",
                    alpha.len(),
                    model.subsets()
                )));
            }
            check_simplex("pin_alpha", alpha, 1e-9)?;
        }
        Ok(())
    }
}

fn check_dt(dt_max: f64) -> Result<()> {
    if !(dt_max.is_finite() && dt_max > 0.0) {
        return Err(Error::invalid("dt_max", format!("must be finite and > 0, got {dt_max}")));
    }
    Ok(())
}

/// Independent generator for path `index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One shock: its time, the lines it hits and a full claim vector (only
/// the coordinates in `set` are charged).
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimEvent {
    pub time: f64,
    pub set: LineSet,
    pub claims: Vec<f64>,
}

impl ClaimEvent {
    /// `Σ_{i∈Z} Y^i`.
    pub fn charged(&self) -> f64 {
        self.set.lines().map(|i| self.claims[i]).sum()
    }
}

/// Realised randomness of one path apart from the Brownian increments.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Time from which events are generated.
    pub start: f64,
    pub lambda_true: f64,
    pub alpha_true: Vec<f64>,
    pub events: Vec<ClaimEvent>,
    pub brownian_seed: u64,
}

fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    // rounding can leave u == total; take the last positive weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

fn dirichlet<R: Rng + ?Sized>(params: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut draws = params
        .iter()
        .map(|shape| {
            Gamma::new(*shape, 1.0)
                .map(|g| g.sample(rng))
                .map_err(|e| Error::invalid("beta", e.to_string()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let sum: f64 = draws.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        // every gamma draw underflowed; fall back to the mean
        let total: f64 = params.iter().sum();
        return Ok(params.iter().map(|b| b / total).collect());
    }
    draws.iter_mut().for_each(|x| *x /= sum);
    Ok(draws)
}

fn draw_events<R: Rng + ?Sized>(
    model: &Model,
    start: f64,
    lambda: f64,
    alpha: &[f64],
    rng: &mut R,
) -> Result<Vec<ClaimEvent>> {
    let gap = Exp::new(lambda).map_err(|e| Error::invalid("lambda", e.to_string()))?;
    let horizon = model.params.horizon;
    let mut events = Vec::new();
    let mut t = start;
    loop {
        t += gap.sample(rng);
        if t > horizon {
            break;
        }
        let set = LineSet::from_index(categorical(alpha, rng))?;
        let claims = model.claims.sample_vector(&mut RngAdapter(rng));
        events.push(ClaimEvent { time: t, set, claims });
    }
    Ok(events)
}

/// Lets a `?Sized` generic generator be passed where `&mut dyn RngCore`
/// is expected.
struct RngAdapter<'a, R: Rng + ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Draws `Λ ~ π`, `ᾱ ~ Dir(β)` (unless pinned), a Poisson(`Λ`) stream of
/// shocks on `(0, T]`, categorical subsets and claim vectors.
pub fn draw_scenario<R: Rng + ?Sized>(
    model: &Model,
    pin_lambda: Option<f64>,
    pin_alpha: Option<&[f64]>,
    rng: &mut R,
) -> Result<Scenario> {
    let lambda_true = match pin_lambda {
        Some(lam) => lam,
        None => model.intensity.lambdas()[categorical(model.intensity.pi(), rng)],
    };
    let alpha_true = match pin_alpha {
        Some(alpha) => alpha.to_vec(),
        None => dirichlet(model.thinning.beta(), rng)?,
    };
    let events = draw_events(model, 0.0, lambda_true, &alpha_true, rng)?;
    Ok(Scenario {
        start: 0.0,
        lambda_true,
        alpha_true,
        events,
        brownian_seed: rng.next_u64(),
    })
}

/// Scenario on `(t, T]` drawn from the posterior encoded by a filter
/// state: `Λ ~ p`, `ᾱ ~ Dir(β + q)`.
pub fn draw_conditional_scenario<R: Rng + ?Sized>(
    model: &Model,
    state: &FilterState,
    rng: &mut R,
) -> Result<Scenario> {
    let lambda_true = model.intensity.lambdas()[categorical(state.p(), rng)];
    let alpha_true = dirichlet(&state.thinning_posterior(&model.thinning), rng)?;
    let events = draw_events(model, state.t, lambda_true, &alpha_true, rng)?;
    Ok(Scenario {
        start: state.t,
        lambda_true,
        alpha_true,
        events,
        brownian_seed: rng.next_u64(),
    })
}

/// Filter state and controls at one grid time.
struct Row {
    t: f64,
    state: FilterState,
    controls: Controls,
    event: Option<usize>,
}

/// Grid from `scenario.start` to `T` hitting every event time, with the
/// filter advanced along it and controls evaluated at every row. Row `k`
/// holds the state after any jump at `t_k`; its controls apply on
/// `(t_k, t_{k+1}]`, including a jump at `t_{k+1}`.
fn walk(model: &Model, spec: &StrategySpec, scenario: &Scenario, start: FilterState, dt_max: f64) -> Result<Vec<Row>> {
    check_dt(dt_max)?;
    let horizon = model.params.horizon;
    let prior = &model.intensity;
    let mut rows = Vec::new();
    let controls = spec.controls(model, start.t, &start)?;
    rows.push(Row { t: start.t, state: start, controls, event: None });
    let stops = scenario
        .events
        .iter()
        .enumerate()
        .map(|(k, e)| (e.time, Some(k)))
        .chain(std::iter::once((horizon, None)));
    for (stop, event) in stops {
        let from = rows.last().expect("nonempty").t;
        let span = stop - from;
        if span < 0.0 {
            return Err(Error::Domain(format!("event time {stop} precedes {from}")));
        }
        let steps = ((span / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for k in 1..=steps {
            let last = rows.last().expect("nonempty");
            let t = if k == steps { stop } else { from + h * k as f64 };
            let mut state = last.state.propagate(t - last.t, prior)?;
            state.t = t;
            let hit = if k == steps { event } else { None };
            if let Some(idx) = hit {
                state = state.jump_update(scenario.events[idx].set, prior)?;
            }
            let controls = spec.controls(model, t, &state)?;
            rows.push(Row { t, state, controls, event: hit });
        }
    }
    Ok(rows)
}

/// One simulated path on its time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub grid: Vec<f64>,
    /// Surplus after any jump at each grid time.
    pub x: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<u64>>,
    /// Retention evaluated at each row; applied on the following step.
    pub b: Vec<f64>,
    pub xi: Vec<f64>,
    /// Mask of the subset hit at each row, 0 if none.
    pub event: Vec<u32>,
    /// Charged claims `Σ_{i∈Z} Y^i` at each row, 0 if none.
    pub charged: Vec<f64>,
    /// Jump of `x` at each row, `-b · charged` with the preceding row's `b`.
    pub jump: Vec<f64>,
    pub terminal_utility: f64,
}

impl PathRecord {
    pub fn terminal_wealth(&self) -> f64 {
        *self.x.last().expect("nonempty grid")
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Surplus path from `x0` under `spec` on a fixed scenario.
pub fn simulate_path(model: &Model, scenario: &Scenario, spec: &StrategySpec, dt_max: f64) -> Result<PathRecord> {
    simulate_path_from(model, scenario, spec, dt_max, model.params.x0)
}

/// As [`simulate_path`] with a given initial capital.
pub fn simulate_path_from(
    model: &Model,
    scenario: &Scenario,
    spec: &StrategySpec,
    dt_max: f64,
    x0: f64,
) -> Result<PathRecord> {
    if scenario.start != 0.0 {
        return Err(Error::invalid("scenario", "surplus paths start at time 0"));
    }
    spec.validate(model)?;
    let params = &model.params;
    let start = FilterState::initial(&model.intensity, &model.thinning);
    let rows = walk(model, spec, scenario, start, dt_max)?;
    let mut brownian = ChaCha8Rng::seed_from_u64(scenario.brownian_seed);
    let n = rows.len();
    let mut record = PathRecord {
        grid: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        p: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        xi: Vec::with_capacity(n),
        event: Vec::with_capacity(n),
        charged: Vec::with_capacity(n),
        jump: Vec::with_capacity(n),
        terminal_utility: 0.0,
    };
    let mut x = x0;
    let mut prev: Option<(f64, Controls)> = None;
    for row in rows {
        let (mut charged, mut jump) = (0.0, 0.0);
        if let Some((t_prev, c)) = prev {
            let h = row.t - t_prev;
            let z: f64 = StandardNormal.sample(&mut brownian);
            let drift = (params.mu - params.r) * c.xi + params.premium_rate_unchecked(c.b);
            x = (params.r * h).exp() * (x + drift * h + c.xi * params.sigma * h.sqrt() * z);
            if let Some(idx) = row.event {
                charged = scenario.events[idx].charged();
                jump = -c.b * charged;
                x += jump;
            }
        }
        record.grid.push(row.t);
        record.x.push(x);
        record.p.push(row.state.p().to_vec());
        record.q.push(row.state.q().to_vec());
        record.b.push(row.controls.b);
        record.xi.push(row.controls.xi);
        record.event.push(row.event.map_or(0, |i| scenario.events[i].set.mask()));
        record.charged.push(charged);
        record.jump.push(jump);
        prev = Some((row.t, row.controls));
    }
    record.terminal_utility = -(-params.alpha * x).exp();
    Ok(record)
}

fn scenario_for_path(model: &Model, settings: &SimulationSettings, index: usize) -> Result<Scenario> {
    let mut rng = path_rng(settings.seed, index as u64);
    draw_scenario(model, settings.pin_lambda, settings.pin_alpha.as_deref(), &mut rng)
}

/// Scenarios `0..n_paths` of a run, in path order.
pub fn draw_scenarios(model: &Model, settings: &SimulationSettings) -> Result<Vec<Scenario>> {
    settings.validate(model)?;
    (0..settings.n_paths)
        .into_par_iter()
        .map(|i| scenario_for_path(model, settings, i))
        .collect()
}

/// All paths of a run, in path order.
pub fn run_paths(model: &Model, spec: &StrategySpec, settings: &SimulationSettings) -> Result<Vec<PathRecord>> {
    settings.validate(model)?;
    spec.validate(model)?;
    (0..settings.n_paths)
        .into_par_iter()
        .map(|i| simulate_path(model, &scenario_for_path(model, settings, i)?, spec, settings.dt_max))
        .collect()
}

/// Terminal surplus of every path of a run, in path order.
pub fn terminal_wealth(model: &Model, spec: &StrategySpec, settings: &SimulationSettings, x0: f64) -> Result<Vec<f64>> {
    settings.validate(model)?;
    spec.validate(model)?;
    (0..settings.n_paths)
        .into_par_iter()
        .map(|i| {
            let scenario = scenario_for_path(model, settings, i)?;
            Ok(simulate_path_from(model, &scenario, spec, settings.dt_max, x0)?.terminal_wealth())
        })
        .collect()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Mean and `sd / √n` of the samples, summed in order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("n_paths", format!("need at least 2 samples, got {}", samples.len())));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Estimate { mean, std_err: (var / n).sqrt() })
    }
}

/// Expected utility estimate together with the entropic risk of the same
/// terminal wealth sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueEstimate {
    pub n_paths: usize,
    pub mean_utility: f64,
    pub std_err: f64,
    pub entropic_risk: f64,
}

/// Monte Carlo estimate of `E[-e^{-α X_T}]` from the initial state.
pub fn estimate_value(model: &Model, spec: &StrategySpec, settings: &SimulationSettings) -> Result<ValueEstimate> {
    estimate_value_from(model, spec, settings, model.params.x0)
}

/// As [`estimate_value`] with a given initial capital.
pub fn estimate_value_from(
    model: &Model,
    spec: &StrategySpec,
    settings: &SimulationSettings,
    x0: f64,
) -> Result<ValueEstimate> {
    let wealth = terminal_wealth(model, spec, settings, x0)?;
    let alpha = model.params.alpha;
    let utilities: Vec<f64> = wealth.iter().map(|x| -(-alpha * x).exp()).collect();
    let estimate = Estimate::from_samples(&utilities)?;
    Ok(ValueEstimate {
        n_paths: settings.n_paths,
        mean_utility: estimate.mean,
        std_err: estimate.std_err,
        entropic_risk: entropic_risk(&wealth, alpha)?,
    })
}

/// `-(1/α) log mean e^{-α X}`, evaluated with a max shift.
pub fn entropic_risk(samples: &[f64], alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be finite and > 0, got {alpha}")));
    }
    let shift = samples.iter().map(|x| -alpha * x).fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Domain(format!("non-finite sample exponent {shift}")));
    }
    let sum: f64 = samples.iter().map(|x| (-alpha * x - shift).exp()).sum();
    Ok(-(shift + (sum / samples.len() as f64).ln()) / alpha)
}

/// `∫_a^b e^{k (T - s)} ds`.
fn discount_integral(k: f64, horizon: f64, a: f64, b: f64) -> f64 {
    let h = b - a;
    let tail = (k * (horizon - b)).exp();
    if (k * h).abs() < 1e-8 {
        tail * h * (1.0 + 0.5 * k * h)
    } else {
        tail * (k * h).exp_m1() / k
    }
}

/// Exponent of the `g^{ξ,b}` functional along one conditional scenario.
/// Controls are piecewise constant on the grid and the kernel
/// `e^{r(T-s)}` is integrated exactly, so only the control
/// discretisation enters.
fn g_exponent(model: &Model, spec: &StrategySpec, state: &FilterState, scenario: &Scenario, dt_max: f64) -> Result<f64> {
    let params = &model.params;
    let (alpha, r, horizon) = (params.alpha, params.r, params.horizon);
    let rows = walk(model, spec, scenario, state.clone(), dt_max)?;
    let mut brownian = ChaCha8Rng::seed_from_u64(scenario.brownian_seed);
    let mut exponent = 0.0;
    for pair in rows.windows(2) {
        let (from, to) = (&pair[0], &pair[1]);
        let c = from.controls;
        let z: f64 = StandardNormal.sample(&mut brownian);
        let drift = (params.mu - params.r) * c.xi + params.premium_rate_unchecked(c.b);
        exponent -= alpha * drift * discount_integral(r, horizon, from.t, to.t);
        let var = discount_integral(2.0 * r, horizon, from.t, to.t);
        exponent -= alpha * params.sigma * c.xi * var.sqrt() * z;
        if let Some(idx) = to.event {
            let charged = scenario.events[idx].charged();
            exponent += alpha * c.b * (r * (horizon - to.t)).exp() * charged;
        }
    }
    Ok(exponent)
}

/// Monte Carlo estimate of `g^{ξ,b}(t, p, q)` with `t = state.t`. Each
/// path draws `Λ ~ p` and `ᾱ ~ Dir(β + q)`; pinned values in `settings`
/// are ignored.
pub fn estimate_g(model: &Model, spec: &StrategySpec, state: &FilterState, settings: &SimulationSettings) -> Result<Estimate> {
    model.params.check_time(state.t)?;
    check_dt(settings.dt_max)?;
    spec.validate(model)?;
    if state.p().len() != model.intensity.len() || state.q().len() != model.subsets() {
        return Err(Error::DimensionMismatch(format!(
            "filter state has {} weights and {} counts, model expects {} and {}",
            state.p().len(),
            state.q().len(),
            model.intensity.len(),
            model.subsets()
        )));
    }
    let samples = (0..settings.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(settings.seed, i as u64);
            let scenario = draw_conditional_scenario(model, state, &mut rng)?;
            Ok(g_exponent(model, spec, state, &scenario, settings.dt_max)?.exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    Estimate::from_samples(&samples)
}

/// `g` ratios estimated by Monte Carlo under a fixed strategy, with common
/// random numbers between numerator and denominator.
#[derive(Debug, Clone)]
pub struct MonteCarloGRatio<'a> {
    pub model: &'a Model,
    pub spec: StrategySpec,
    pub settings: SimulationSettings,
}

impl GRatio for MonteCarloGRatio<'_> {
    fn ratio(&self, t: f64, state: &FilterState, set: LineSet) -> Result<f64> {
        let mut base = state.clone();
        base.t = t;
        let jumped = base.jump_update(set, &self.model.intensity)?;
        let num = estimate_g(self.model, &self.spec, &jumped, &self.settings)?;
        let den = estimate_g(self.model, &self.spec, &base, &self.settings)?;
        Ok(num.mean / den.mean)
    }
}
