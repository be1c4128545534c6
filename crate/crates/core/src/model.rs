//! Static model data: market and premium constants, the two priors and the
//! enumeration of business-line subsets.
//!
//! Subsets of the lines `{1, ..., d}` are stored as bitmasks. The canonical
//! slot of a subset in every `ℓ = 2^d - 1` sized vector (Dirichlet
//! parameters, counts, thinning weights) is `mask - 1`.

use std::fmt;
use std::str::FromStr;

use crate::claims::ClaimModel;
use crate::error::{Error, Result};

/// Largest supported number of business lines.
pub const MAX_LINES: usize = 16;

/// Tolerance for probability vectors summing to one.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A nonempty subset of business lines, stored as a bitmask over lines
/// `1..=d` (bit `i - 1` set when line `i` is affected).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineSet(u32);

impl LineSet {
    pub fn new(mask: u32) -> Result<Self> {
        if mask == 0 {
            return Err(Error::invalid("line set", "empty subset"));
        }
        if mask >= 1 << MAX_LINES {
            return Err(Error::invalid(
                "line set",
                format!("mask {mask} exceeds {MAX_LINES} lines"),
            ));
        }
        Ok(LineSet(mask))
    }

    /// Builds a subset from 1-based line numbers.
    pub fn from_lines(lines: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        for &line in lines {
            if line == 0 || line > MAX_LINES {
                return Err(Error::invalid(
                    "line set",
                    format!("line {line} outside 1..={MAX_LINES}"),
                ));
            }
            mask |= 1 << (line - 1);
        }
        LineSet::new(mask)
    }

    /// The subset whose canonical slot is `index`.
    pub fn from_index(index: usize) -> Result<Self> {
        LineSet::new(index as u32 + 1)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    /// Position of this subset in ℓ-indexed vectors.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    /// Cardinality |D|.
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Whether the 0-based line `line` belongs to the subset.
    pub fn contains(self, line: usize) -> bool {
        line < 32 && self.0 & (1 << line) != 0
    }

    /// 0-based indices of the affected lines, ascending.
    pub fn lines(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |i| mask & (1 << i) != 0)
    }

    /// Highest 1-based line number in the subset.
    pub fn max_line(self) -> usize {
        32 - self.0.leading_zeros() as usize
    }

    fn fits(self, d: usize) -> bool {
        self.max_line() <= d
    }
}

impl fmt::Display for LineSet {
    /// Comma-joined 1-based line numbers, e.g. `1,2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for line in self.lines() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{}", line + 1)?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for LineSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lines = s
            .split(',')
            .map(|part| {
                part.trim().parse::<usize>().map_err(|_| {
                    Error::invalid("line set", format!("cannot parse `{s}` as line list"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LineSet::from_lines(&lines)
    }
}

/// Number of nonempty subsets of `d` lines.
pub fn subset_count(d: usize) -> usize {
    (1usize << d) - 1
}

/// All nonempty subsets of `{1, ..., d}` in increasing mask order.
pub fn enumerate_linesets(d: usize) -> Result<Vec<LineSet>> {
    check_line_count(d)?;
    Ok((1..=subset_count(d) as u32).map(LineSet).collect())
}

fn check_line_count(d: usize) -> Result<()> {
    if d == 0 || d > MAX_LINES {
        return Err(Error::invalid(
            "d",
            format!("line count {d} outside 1..={MAX_LINES}"),
        ));
    }
    Ok(())
}

/// Market, utility and premium constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Risk-free rate.
    pub r: f64,
    /// Drift of the risky asset.
    pub mu: f64,
    /// Volatility of the risky asset.
    pub sigma: f64,
    /// Absolute risk aversion of the exponential utility.
    pub alpha: f64,
    /// Safety loading of the first-line insurer.
    pub eta: f64,
    /// Safety loading of the reinsurer.
    pub theta: f64,
    /// Premium scale; the gross premium rate is `(1 + eta) * kappa`.
    pub kappa: f64,
    /// Terminal time.
    pub horizon: f64,
    /// Initial capital.
    pub x0: f64,
}

impl ModelParams {
    /// Parameter table of the two-line numerical study. `kappa` is pinned to
    /// `17 / (4 - 4e^{-3})`.
    pub fn reference_example() -> Self {
        ModelParams {
            r: 0.01,
            mu: 0.2,
            sigma: 3.0,
            alpha: 0.2,
            eta: 0.4,
            theta: 0.6,
            kappa: 17.0 / (4.0 - 4.0 * (-3.0f64).exp()),
            horizon: 10.0,
            x0: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("r", self.r),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("eta", self.eta),
            ("theta", self.theta),
            ("kappa", self.kappa),
            ("T", self.horizon),
            ("x0", self.x0),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        for (name, value) in [
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("eta", self.eta),
            ("kappa", self.kappa),
            ("T", self.horizon),
        ] {
            if value <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {value}")));
            }
        }
        if self.theta <= self.eta {
            return Err(Error::invalid(
                "theta",
                format!(
                    "reinsurer loading {} must exceed insurer loading {}",
                    self.theta, self.eta
                ),
            ));
        }
        Ok(())
    }

    /// Net income rate `c(b) = (eta - theta) kappa + (1 + theta) kappa b`.
    pub fn premium_rate(&self, b: f64) -> Result<f64> {
        check_retention(b)?;
        Ok(self.premium_rate_unchecked(b))
    }

    pub(crate) fn premium_rate_unchecked(&self, b: f64) -> f64 {
        (self.eta - self.theta) * self.kappa + (1.0 + self.theta) * self.kappa * b
    }

    /// Right-hand side `(1 + theta) kappa` of every retention first-order
    /// condition.
    pub fn foc_target(&self) -> f64 {
        (1.0 + self.theta) * self.kappa
    }

    /// `e^{r (T - t)}`, the capitalisation factor from `t` to the horizon.
    pub fn growth_to_horizon(&self, t: f64) -> f64 {
        (self.r * (self.horizon - t)).exp()
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::invalid(
                "t",
                format!("time {t} outside [0, {}]", self.horizon),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_retention(b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::invalid("b", format!("retention {b} outside [0, 1]")));
    }
    Ok(())
}

/// Finite prior on the unknown claim intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPrior {
    lambdas: Vec<f64>,
    pi: Vec<f64>,
}

impl IntensityPrior {
    pub fn new(lambdas: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::invalid("lambdas", "at least one intensity required"));
        }
        if lambdas.len() != pi.len() {
            return Err(Error::DimensionMismatch(format!(
                "`lambdas` has {} entries but `pi` has {}",
                lambdas.len(),
                pi.len()
            )));
        }
        if lambdas.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::invalid("lambdas", "intensities must be finite and > 0"));
        }
        if lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("lambdas", "intensities must be strictly increasing"));
        }
        check_simplex("pi", &pi, SIMPLEX_TOL)?;
        Ok(IntensityPrior { lambdas, pi })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Number of candidate intensities `m`.
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn min_lambda(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambdas[self.lambdas.len() - 1]
    }

    /// Prior mean `Σ λ_k π_k`.
    pub fn mean(&self) -> f64 {
        dot(&self.lambdas, &self.pi)
    }
}

/// Dirichlet prior on the thinning probabilities, one parameter per
/// nonempty subset in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    lines: usize,
    beta: Vec<f64>,
}

impl DirichletPrior {
    pub fn new(lines: usize, beta: Vec<f64>) -> Result<Self> {
        check_line_count(lines)?;
        if beta.len() != subset_count(lines) {
            return Err(Error::DimensionMismatch(format!(
                "`beta` needs {} entries for {} lines, got {}",
                subset_count(lines),
                lines,
                beta.len()
            )));
        }
        if beta.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(Error::invalid("beta", "all entries must be finite and > 0"));
        }
        Ok(DirichletPrior { lines, beta })
    }

    /// Builds the prior from `(subset, value)` pairs covering every subset
    /// exactly once.
    pub fn from_subsets(lines: usize, entries: &[(LineSet, f64)]) -> Result<Self> {
        check_line_count(lines)?;
        let mut beta = vec![f64::NAN; subset_count(lines)];
        for &(set, value) in entries {
            if !set.fits(lines) {
                return Err(Error::DimensionMismatch(format!(
                    "subset {{{set}}} references a line beyond d = {lines}"
                )));
            }
            if !beta[set.index()].is_nan() {
                return Err(Error::invalid("beta", format!("subset {{{set}}} given twice")));
            }
            beta[set.index()] = value;
        }
        if let Some(missing) = beta.iter().position(|b| b.is_nan()) {
            let set = LineSet::from_index(missing)?;
            return Err(Error::invalid("beta", format!("subset {{{set}}} missing")));
        }
        DirichletPrior::new(lines, beta)
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// ‖β̄‖, the l1 norm.
    pub fn norm(&self) -> f64 {
        self.beta.iter().sum()
    }

    /// Prior mean β / ‖β‖.
    pub fn mean(&self) -> Vec<f64> {
        let norm = self.norm();
        self.beta.iter().map(|b| b / norm).collect()
    }
}

/// Everything a strategy or simulation needs: constants, both priors and
/// the claim-size model.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub intensity: IntensityPrior,
    pub thinning: DirichletPrior,
    pub claims: ClaimModel,
}

impl Model {
    pub fn new(
        params: ModelParams,
        intensity: IntensityPrior,
        thinning: DirichletPrior,
        claims: ClaimModel,
    ) -> Result<Self> {
        params.validate()?;
        if claims.lines() != thinning.lines() {
            return Err(Error::DimensionMismatch(format!(
                "claim model has {} lines but the Dirichlet prior has {}",
                claims.lines(),
                thinning.lines()
            )));
        }
        Ok(Model {
            params,
            intensity,
            thinning,
            claims,
        })
    }

    /// The two-line study: λ ∈ {2, 4, 5} with prior (2/5, 2/5, 1/5),
    /// β = ({1}: 8, {2}: 7, {1,2}: 5), identical exponential claims
    /// truncated at 3 and the pinned premium scale.
    pub fn reference_example() -> Self {
        let claims = ClaimModel::identical(
            crate::claims::TruncatedExponential::new(1.0, 3.0).expect("valid law"),
            2,
        )
        .expect("two lines");
        Model::new(
            ModelParams::reference_example(),
            IntensityPrior::new(vec![2.0, 4.0, 5.0], vec![0.4, 0.4, 0.2]).expect("valid prior"),
            DirichletPrior::new(2, vec![8.0, 7.0, 5.0]).expect("valid beta"),
            claims,
        )
        .expect("valid model")
    }

    pub fn lines(&self) -> usize {
        self.thinning.lines()
    }

    pub fn subsets(&self) -> usize {
        subset_count(self.lines())
    }
}

/// Premium scale equal to the prior expected claim rate:
/// `Σ_k λ_k π_k Σ_D (β_D / ‖β‖) Σ_{i∈D} E[Y^i]`.
pub fn default_kappa(
    prior: &IntensityPrior,
    dir: &DirichletPrior,
    claims: &ClaimModel,
) -> Result<f64> {
    if claims.lines() != dir.lines() {
        return Err(Error::DimensionMismatch(format!(
            "claim model has {} lines but the Dirichlet prior has {}",
            claims.lines(),
            dir.lines()
        )));
    }
    let norm = dir.norm();
    let means = claims.means();
    let per_shock: f64 = dir
        .beta()
        .iter()
        .enumerate()
        .map(|(idx, beta)| {
            let set = LineSet(idx as u32 + 1);
            beta / norm * set.lines().map(|i| means[i]).sum::<f64>()
        })
        .sum();
    Ok(prior.mean() * per_shock)
}

pub(crate) fn check_simplex(name: &str, v: &[f64], tol: f64) -> Result<()> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid(name, "entries must be finite and nonnegative"));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::invalid(name, format!("entries sum to {sum}, expected 1")));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
