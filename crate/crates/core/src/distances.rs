//! Distance kernels: the Cantor ultrametric on words, the finite-horizon
//! Kantorovich distance under it (closed form over the `M_i` sums), and the
//! truncated Cantor-Kantorovich series with its certified error bound.
//!
//! The Cantor base is always the alphabet size `m`. Every bound in this crate
//! assumes that base, so it is not configurable.

use thiserror::Error;

use crate::model::{LabeledMarkovChain, Symbol};
use crate::trace::{EngineConfig, TraceEngine, TraceError};

/// Slack allowed when checking that `M_{i+1} <= M_i`.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("LengthMismatch: words of length {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("NonMonotoneM: M_{next} = {next_value} exceeds M_{index} = {value}", next = index + 1)]
    NonMonotoneM {
        index: usize,
        value: f64,
        next_value: f64,
    },
    #[error("OutOfRange: {what} = {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("TooLarge: support size {size} exceeds the oracle limit {max}")]
    TooLarge { size: usize, max: usize },
    #[error("InvalidWord: {0}")]
    InvalidWord(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// `m^{-(i-1)}` where `i` is the first (1-based) position at which the words
/// differ; 0 for equal words.
pub fn cantor_distance(w1: &[Symbol], w2: &[Symbol], m: usize) -> Result<f64, DistanceError> {
    if w1.len() != w2.len() {
        return Err(DistanceError::LengthMismatch {
            left: w1.len(),
            right: w2.len(),
        });
    }
    check_alphabet(m)?;
    Ok(match w1.iter().zip(w2).position(|(a, b)| a != b) {
        None => 0.0,
        Some(j) => inv_pow(m, j),
    })
}

/// Finite-horizon Kantorovich distance between the `k`-long trace
/// distributions, from `M_1..M_k`:
/// `1 - M_1 + sum_{i=1}^{k-1} m^{-i} (M_i - M_{i+1})`.
pub fn kantorovich_closed_form(m_sums: &[f64], m: usize) -> Result<f64, DistanceError> {
    check_alphabet(m)?;
    let Some(&first) = m_sums.first() else {
        return Err(DistanceError::OutOfRange {
            what: "horizon",
            value: 0.0,
        });
    };
    for &x in m_sums {
        if !(0.0..=1.0 + MONOTONE_TOLERANCE).contains(&x) {
            return Err(DistanceError::OutOfRange {
                what: "M_i",
                value: x,
            });
        }
    }
    let mut k = 1.0 - first;
    for (i, pair) in m_sums.windows(2).enumerate() {
        let (cur, next) = (pair[0], pair[1]);
        if next > cur + MONOTONE_TOLERANCE {
            return Err(DistanceError::NonMonotoneM {
                index: i + 1,
                value: cur,
                next_value: next,
            });
        }
        k += inv_pow(m, i + 1) * (cur - next);
    }
    Ok(k)
}

/// One term of the truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonTerm {
    pub horizon: usize,
    pub m_sum: f64,
    pub tv: f64,
    /// `(m - 1) / m^i`.
    pub weight: f64,
    /// `S_i`.
    pub partial_sum: f64,
}

/// Truncated CK sum with its certified interval.
#[derive(Debug, Clone, PartialEq)]
pub struct CkReport {
    pub alphabet_size: usize,
    pub per_horizon: Vec<HorizonTerm>,
    pub horizon: usize,
    pub s_k: f64,
    /// `m^{-k}`: the distance lies in `[s_k, s_k + error_bound]`.
    pub error_bound: f64,
    /// False when threshold pruning dropped positive mass.
    pub certified: bool,
}

impl CkReport {
    /// `S_i`, with `S_0 = 0`.
    pub fn partial_sum(&self, i: usize) -> f64 {
        match i {
            0 => 0.0,
            _ => self.per_horizon[i - 1].partial_sum,
        }
    }

    pub fn tv(&self, i: usize) -> f64 {
        self.per_horizon[i - 1].tv
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.s_k, self.s_k + self.error_bound)
    }

    pub fn m_sums(&self) -> Vec<f64> {
        self.per_horizon.iter().map(|t| t.m_sum).collect()
    }

    /// `K_C(p_1^i, p_2^i) = S_{i-1} + m^{1-i} TV_i`.
    pub fn finite_horizon_kantorovich(&self, i: usize) -> f64 {
        self.partial_sum(i - 1) + inv_pow(self.alphabet_size, i - 1) * self.tv(i)
    }
}

/// `S_k = sum_{i=1}^k ((m-1)/m^i) TV_i` with the default engine configuration.
pub fn ck_truncated(
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
    horizon: usize,
) -> Result<CkReport, DistanceError> {
    ck_truncated_with(chain1, chain2, horizon, &EngineConfig::default())
}

pub fn ck_truncated_with(
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
    horizon: usize,
    config: &EngineConfig,
) -> Result<CkReport, DistanceError> {
    if horizon == 0 {
        return Err(DistanceError::OutOfRange {
            what: "horizon",
            value: 0.0,
        });
    }
    let engine = TraceEngine::new(chain1, chain2, *config)?;
    let m = engine.alphabet_size();
    let levels = engine.summaries(horizon)?;
    let mut partial = 0.0;
    let mut per_horizon = Vec::with_capacity(horizon);
    for l in &levels {
        let weight = (m - 1) as f64 * inv_pow(m, l.horizon);
        partial += weight * l.tv;
        per_horizon.push(HorizonTerm {
            horizon: l.horizon,
            m_sum: l.m_sum,
            tv: l.tv,
            weight,
            partial_sum: partial,
        });
    }
    Ok(CkReport {
        alphabet_size: m,
        per_horizon,
        horizon,
        s_k: partial,
        error_bound: inv_pow(m, horizon),
        certified: levels.iter().all(|l| l.lossless),
    })
}

/// Smallest `k` with `m^{-k} <= epsilon`.
pub fn horizon_for_precision(epsilon: f64, m: usize) -> Result<usize, DistanceError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(DistanceError::OutOfRange {
            what: "epsilon",
            value: epsilon,
        });
    }
    check_alphabet(m)?;
    let guess = ((1.0 / epsilon).ln() / (m as f64).ln()).ceil().max(1.0) as usize;
    // The logarithm ratio can land one ulp off an integer; settle on exact powers.
    let mut k = guess;
    while k > 1 && inv_pow(m, k - 1) <= epsilon {
        k -= 1;
    }
    while inv_pow(m, k) > epsilon {
        k += 1;
    }
    Ok(k)
}

/// `m^{-exp}`.
pub(crate) fn inv_pow(m: usize, exp: usize) -> f64 {
    1.0 / (m as f64).powi(exp as i32)
}

fn check_alphabet(m: usize) -> Result<(), DistanceError> {
    if m < 2 {
        return Err(DistanceError::OutOfRange {
            what: "alphabet size",
            value: m as f64,
        });
    }
    Ok(())
}
