//! Exact-arithmetic reference for interval coding.
//!
//! Computes the final coding interval of a message with `BigRational`
//! arithmetic, with no rounding anywhere. The integer coder in the parent
//! module approximates this interval at 32-bit precision: any payload it
//! emits is a binary expansion of a number inside it. These functions exist
//! for tests and are far too slow for real payloads.

use num::rational::BigRational;
use num::{BigInt, One, Zero};

use crate::error::{Error, Result};

/// Convenience constructor for a rational from two machine integers.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn validate_model(model: &[(u32, BigRational)]) -> Result<()> {
    if model.is_empty() {
        return Err(Error::InvalidArgument("empty probability model".into()));
    }
    let mut sum = BigRational::zero();
    for (i, (sym, p)) in model.iter().enumerate() {
        if *p <= BigRational::zero() {
            return Err(Error::InvalidArgument(format!(
                "symbol {sym} has non-positive probability"
            )));
        }
        if model[..i].iter().any(|(other, _)| other == sym) {
            return Err(Error::InvalidArgument(format!("symbol {sym} listed twice")));
        }
        sum += p;
    }
    if !sum.is_one() {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Final half-open interval `[low, high)` after coding `message` against
/// `model`, computed exactly. Cumulative spans follow the order symbols are
/// listed in the model.
pub fn ac_interval_exact(
    message: &[u32],
    model: &[(u32, BigRational)],
) -> Result<(BigRational, BigRational)> {
    validate_model(model)?;
    let mut cumulative = Vec::with_capacity(model.len());
    let mut acc = BigRational::zero();
    for (sym, p) in model {
        cumulative.push((*sym, acc.clone(), &acc + p));
        acc += p;
    }

    let mut low = BigRational::zero();
    let mut high = BigRational::one();
    for &sym in message {
        let (_, cum_lo, cum_hi) = cumulative
            .iter()
            .find(|(s, _, _)| *s == sym)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("symbol {sym} missing from the model"))
            })?;
        let width = &high - &low;
        high = &low + &width * cum_hi;
        low = &low + &width * cum_lo;
    }
    Ok((low, high))
}

/// Center of an interval; any number strictly inside the interval identifies
/// the message, and the midpoint is a convenient canonical pick.
pub fn interval_midpoint(low: &BigRational, high: &BigRational) -> BigRational {
    (low + high) / BigRational::from(BigInt::from(2))
}
