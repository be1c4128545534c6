//! Claim-size laws and the shock-level claim functional γ.
//!
//! Claim vectors are products of independent per-line marginals. Every
//! marginal exposes its moment generating function `M(z) = E[e^{zY}]` and
//! the tilted mean `E[Y e^{zY}] = M'(z)`, which is all the retention
//! formulas need.

use std::fmt;
use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::model::{LineSet, ModelParams};
use crate::quadrature::adaptive_simpson;

/// A claim-size distribution on `(0, ∞)` with a finite MGF.
pub trait ClaimLaw: fmt::Debug + Send + Sync {
    /// `E[e^{zY}]`.
    fn mgf(&self, z: f64) -> f64;

    /// `E[Y e^{zY}]`.
    fn tilted_mean(&self, z: f64) -> f64;

    fn mean(&self) -> f64 {
        self.tilted_mean(0.0)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64;
}

/// Exponential law with the given rate conditioned on `Y < cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedExponential {
    rate: f64,
    cutoff: f64,
    /// `1 - e^{-rate * cutoff}`
    mass: f64,
}

impl TruncatedExponential {
    pub fn new(rate: f64, cutoff: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::invalid("rate", format!("must be finite and > 0, got {rate}")));
        }
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::invalid("cutoff", format!("must be finite and > 0, got {cutoff}")));
        }
        Ok(TruncatedExponential {
            rate,
            cutoff,
            mass: -(-rate * cutoff).exp_m1(),
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// `∫_0^c e^{s y} dy`
    fn exp_integral(&self, s: f64) -> f64 {
        let c = self.cutoff;
        let x = s * c;
        if x.abs() < 1e-6 {
            c * (1.0 + x / 2.0 + x * x / 6.0)
        } else {
            x.exp_m1() / s
        }
    }

    /// `∫_0^c y e^{s y} dy`
    fn weighted_exp_integral(&self, s: f64) -> f64 {
        let c = self.cutoff;
        let x = s * c;
        if x.abs() < 1e-2 {
            // Σ_k x^k / (k! (k + 2)) times c²
            let mut term = 1.0;
            let mut sum = 0.5;
            for k in 1..12 {
                term *= x / k as f64;
                sum += term / (k + 2) as f64;
            }
            c * c * sum
        } else {
            (c * x.exp() - x.exp_m1() / s) / s
        }
    }
}

impl ClaimLaw for TruncatedExponential {
    fn mgf(&self, z: f64) -> f64 {
        self.rate / self.mass * self.exp_integral(z - self.rate)
    }

    fn tilted_mean(&self, z: f64) -> f64 {
        self.rate / self.mass * self.weighted_exp_integral(z - self.rate)
    }

    /// Inverse-CDF draw `-ln(1 - U (1 - e^{-rate c})) / rate` with `U ∈ (0, 1)`.
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.sample(Open01);
        -(-u * self.mass).ln_1p() / self.rate
    }
}

/// Point mass at a positive value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterministicClaim {
    value: f64,
}

impl DeterministicClaim {
    pub fn new(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::invalid("value", format!("must be finite and > 0, got {value}")));
        }
        Ok(DeterministicClaim { value })
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

impl ClaimLaw for DeterministicClaim {
    fn mgf(&self, z: f64) -> f64 {
        (z * self.value).exp()
    }

    fn tilted_mean(&self, z: f64) -> f64 {
        self.value * (z * self.value).exp()
    }

    fn mean(&self) -> f64 {
        self.value
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
        self.value
    }
}

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const DENSITY_TOL: f64 = 1e-10;
const CDF_PANELS: usize = 256;

/// Law given by a (possibly unnormalised) density on a bounded interval.
/// Transforms come from adaptive Simpson quadrature; sampling inverts the
/// CDF by bisection.
#[derive(Clone)]
pub struct DensityClaim {
    density: Density,
    lower: f64,
    upper: f64,
    norm: f64,
    /// Cumulative unnormalised mass at the panel boundaries.
    cdf: Vec<f64>,
}

impl DensityClaim {
    pub fn new<F>(density: F, lower: f64, upper: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower < upper) {
            return Err(Error::invalid(
                "support",
                format!("need 0 <= lower < upper < ∞, got [{lower}, {upper}]"),
            ));
        }
        let width = (upper - lower) / CDF_PANELS as f64;
        let mut cdf = Vec::with_capacity(CDF_PANELS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for k in 0..CDF_PANELS {
            let a = lower + width * k as f64;
            let b = if k + 1 == CDF_PANELS { upper } else { a + width };
            let piece = adaptive_simpson(&density, a, b, DENSITY_TOL / CDF_PANELS as f64);
            if !(piece.is_finite() && piece >= 0.0) {
                return Err(Error::Domain(format!("density integrates to {piece} on [{a}, {b}]")));
            }
            acc += piece;
            cdf.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::Domain("density has zero mass".into()));
        }
        Ok(DensityClaim {
            density: Arc::new(density),
            lower,
            upper,
            norm: acc,
            cdf,
        })
    }

    fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let f = &self.density;
        adaptive_simpson(|y| g(y) * f(y), self.lower, self.upper, DENSITY_TOL) / self.norm
    }
}

impl fmt::Debug for DensityClaim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityClaim")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("norm", &self.norm)
            .finish_non_exhaustive()
    }
}

impl ClaimLaw for DensityClaim {
    fn mgf(&self, z: f64) -> f64 {
        self.integrate(|y| (z * y).exp())
    }

    fn tilted_mean(&self, z: f64) -> f64 {
        self.integrate(|y| y * (z * y).exp())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.sample(Open01);
        let target = u * self.norm;
        let panel = self.cdf.partition_point(|&c| c < target).clamp(1, CDF_PANELS) - 1;
        let width = (self.upper - self.lower) / CDF_PANELS as f64;
        let base = self.lower + width * panel as f64;
        let need = target - self.cdf[panel];
        let (mut lo, mut hi) = (base, (base + width).min(self.upper));
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let mass = adaptive_simpson(&*self.density, base, mid, 1e-14);
            if mass < need {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Per-line claim laws combined under independence.
#[derive(Debug, Clone)]
pub struct ClaimModel {
    laws: Vec<Arc<dyn ClaimLaw>>,
    identical: bool,
}

impl ClaimModel {
    /// `lines` independent copies of one law.
    pub fn identical<L: ClaimLaw + 'static>(law: L, lines: usize) -> Result<Self> {
        check_lines(lines)?;
        let law: Arc<dyn ClaimLaw> = Arc::new(law);
        Ok(ClaimModel {
            laws: vec![law; lines],
            identical: true,
        })
    }

    /// One law per line, in line order.
    pub fn product(laws: Vec<Arc<dyn ClaimLaw>>) -> Result<Self> {
        check_lines(laws.len())?;
        Ok(ClaimModel {
            laws,
            identical: false,
        })
    }

    pub fn lines(&self) -> usize {
        self.laws.len()
    }

    /// Whether all lines share one marginal law.
    pub fn is_identical(&self) -> bool {
        self.identical
    }

    pub fn marginal(&self, line: usize) -> &dyn ClaimLaw {
        self.laws[line].as_ref()
    }

    pub fn means(&self) -> Vec<f64> {
        self.laws.iter().map(|l| l.mean()).collect()
    }

    /// Per-line transforms at tilt `u`, for evaluating γ over many subsets.
    pub fn transforms(&self, u: f64) -> Result<ShockTransforms> {
        let eval = |law: &Arc<dyn ClaimLaw>| {
            let m = law.mgf(u);
            let tm = law.tilted_mean(u);
            if !(m.is_finite() && tm.is_finite()) || m <= 0.0 {
                return Err(Error::Domain(format!(
                    "claim transforms not finite at tilt {u}: mgf = {m}, tilted mean = {tm}"
                )));
            }
            Ok((m, tm))
        };
        let (mgf, tilted) = if self.identical {
            let (m, tm) = eval(&self.laws[0])?;
            (vec![m; self.lines()], vec![tm; self.lines()])
        } else {
            self.laws.iter().map(eval).collect::<Result<Vec<_>>>()?.into_iter().unzip()
        };
        Ok(ShockTransforms { mgf, tilted })
    }

    /// Independent per-line draws; all `d` coordinates are drawn even when
    /// only some lines are hit.
    pub fn sample_vector(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.laws.iter().map(|law| law.sample(rng)).collect()
    }
}

fn check_lines(lines: usize) -> Result<()> {
    if lines == 0 || lines > crate::model::MAX_LINES {
        return Err(Error::invalid(
            "claims",
            format!("line count {lines} outside 1..={}", crate::model::MAX_LINES),
        ));
    }
    Ok(())
}

/// MGF and tilted mean of every line at one tilt.
#[derive(Debug, Clone)]
pub struct ShockTransforms {
    mgf: Vec<f64>,
    tilted: Vec<f64>,
}

impl ShockTransforms {
    /// `Σ_{i∈D} E[Y_i e^{uY_i}] Π_{j∈D, j≠i} M_j(u)`.
    pub fn gamma(&self, set: LineSet) -> f64 {
        let mut product = 1.0;
        let mut ratio_sum = 0.0;
        for i in set.lines() {
            product *= self.mgf[i];
            ratio_sum += self.tilted[i] / self.mgf[i];
        }
        product * ratio_sum
    }
}

/// Tilt `u = α a e^{r (T - t)}` used by γ at time `t` and retention-like `a`.
pub fn tilt(params: &ModelParams, t: f64, a: f64) -> f64 {
    params.alpha * a * params.growth_to_horizon(t)
}

/// γ(t, a, D): expected retained-claim weight of one shock hitting `set`
/// under the exponential tilt at `(t, a)`.
pub fn gamma_factor(
    claims: &ClaimModel,
    params: &ModelParams,
    t: f64,
    a: f64,
    set: LineSet,
) -> Result<f64> {
    params.check_time(t)?;
    if set.max_line() > claims.lines() {
        return Err(Error::DimensionMismatch(format!(
            "subset {{{set}}} references a line beyond d = {}",
            claims.lines()
        )));
    }
    let value = claims.transforms(tilt(params, t, a))?.gamma(set);
    if !value.is_finite() {
        return Err(Error::Domain(format!("γ not finite at t = {t}, a = {a}")));
    }
    Ok(value)
}

/// Draws one claim vector.
pub fn sample_claim_vector(claims: &ClaimModel, rng: &mut dyn RngCore) -> Vec<f64> {
    claims.sample_vector(rng)
}
