//! Scalar continuity bounds relating approximate bisimilarity, the CK
//! distance, and finite-horizon total variation. None of these look at a
//! chain; they turn a known bound into a conclusion.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("OutOfRange: {what} = {value} must lie in {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
}

fn open_unit(what: &'static str, x: f64) -> Result<(), BoundError> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(BoundError::OutOfRange {
            what,
            value: x,
            range: "(0, 1)",
        })
    }
}

fn alphabet(m: usize) -> Result<(), BoundError> {
    if m >= 2 {
        Ok(())
    } else {
        Err(BoundError::OutOfRange {
            what: "m",
            value: m as f64,
            range: "[2, inf)",
        })
    }
}

/// Upper bound `m delta / (m - 1 + delta)` on the CK distance between two
/// `delta`-approximately bisimilar chains.
pub fn ck_upper_bound(delta: f64, m: usize) -> Result<f64, BoundError> {
    open_unit("delta", delta)?;
    alphabet(m)?;
    let m = m as f64;
    Ok(m * delta / (m - 1.0 + delta))
}

/// Inverse of [`ck_upper_bound`]: given `d >= d_lower`, the chains cannot be
/// `delta`-approximately bisimilar for any `delta <= (m-1) d_lower / (m - d_lower)`.
pub fn bisim_impossibility_threshold(d_lower: f64, m: usize) -> Result<f64, BoundError> {
    if !(d_lower > 0.0 && d_lower <= 1.0) {
        return Err(BoundError::OutOfRange {
            what: "d_lower",
            value: d_lower,
            range: "(0, 1]",
        });
    }
    alphabet(m)?;
    let m = m as f64;
    Ok((m - 1.0) * d_lower / (m - d_lower))
}

/// `1 - (1 - delta)^k`: TV bound at horizon `k` for `delta`-approximately bisimilar chains.
pub fn tv_bisim_bound(delta: f64, k: usize) -> Result<f64, BoundError> {
    open_unit("delta", delta)?;
    let k = i32::try_from(k).map_err(|_| BoundError::OutOfRange {
        what: "k",
        value: k as f64,
        range: "[0, 2^31)",
    })?;
    Ok(1.0 - (1.0 - delta).powi(k))
}

/// `min(1, m^{k-1} d_upper)`: TV bound at horizon `k` given `d <= d_upper`.
pub fn tv_from_ck_bound(d_upper: f64, k: usize, m: usize) -> Result<f64, BoundError> {
    open_unit("d_upper", d_upper)?;
    alphabet(m)?;
    if k == 0 {
        return Err(BoundError::OutOfRange {
            what: "k",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let scaled = (m as f64).powi((k - 1).min(i32::MAX as usize) as i32) * d_upper;
    Ok(scaled.min(1.0))
}

/// Largest `k` with `m^{k-1} d_upper <= epsilon`, or 0 when even `k = 1` fails.
pub fn max_safe_horizon(epsilon: f64, d_upper: f64, m: usize) -> Result<usize, BoundError> {
    open_unit("epsilon", epsilon)?;
    open_unit("d_upper", d_upper)?;
    alphabet(m)?;
    let safe = |k: usize| (m as f64).powi(k as i32 - 1) * d_upper <= epsilon;
    if !safe(1) {
        return Ok(0);
    }
    let guess = 1
        + ((epsilon / d_upper).ln() / (m as f64).ln())
            .floor()
            .max(0.0) as usize;
    // Snap the log-ratio estimate to exact powers.
    let mut k = guess.max(1);
    while k > 1 && !safe(k) {
        k -= 1;
    }
    while safe(k + 1) {
        k += 1;
    }
    Ok(k)
}
