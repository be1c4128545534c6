//! Root finding for strictly increasing functions.

use crate::error::{Error, Result};

/// Absolute tolerance on the returned root.
pub const ROOT_TOL: f64 = 1e-12;

const MAX_EXPANSIONS: usize = 64;
const MAX_BISECTIONS: usize = 200;

/// Solves `f(a) = target` for a strictly increasing `f`.
///
/// Starts from the bracket `[-1, 2]` and doubles whichever end fails to
/// straddle the target, then bisects to width [`ROOT_TOL`].
pub fn solve_increasing<F>(f: F, target: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (-1.0f64, 2.0f64);
    let mut f_lo = f(lo)?;
    let mut expansions = 0;
    while f_lo > target {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Domain(format!(
                "no lower bracket for target {target}: f({lo}) = {f_lo}"
            )));
        }
        hi = lo;
        lo *= 2.0;
        f_lo = f(lo)?;
    }
    let mut f_hi = f(hi)?;
    while f_hi < target {
        expansions += 1;
        if expansions > MAX_EXPANSIONS || !f_hi.is_finite() {
            return Err(Error::Domain(format!(
                "no upper bracket for target {target}: f({hi}) = {f_hi}"
            )));
        }
        lo = hi;
        hi *= 2.0;
        f_hi = f(hi)?;
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= ROOT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let value = f(mid)?;
        if value == target {
            return Ok(mid);
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
