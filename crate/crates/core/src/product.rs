//! Product distributions over `{0,1}^k` encoded as labeled Markov chains,
//! and three independent routes to their total variation distance:
//! brute-force enumeration, the difference of two truncated CK sums, and a
//! triangular system over the CK distances of prefix encoders.

use thiserror::Error;

use crate::distances::{ck_truncated, inv_pow, DistanceError};
use crate::model::LabeledMarkovChain;

/// Largest `k` enumerated by [`product_tv_bruteforce`].
pub const MAX_BRUTEFORCE_LEN: usize = 20;
/// Largest `k` accepted by [`tv_via_linear_system`].
pub const MAX_LINEAR_SYSTEM_LEN: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProductError {
    #[error("empty product specification")]
    Empty,
    #[error("OutOfRange: parameter {index} = {value} is not in [0, 1]")]
    ParamOutOfRange { index: usize, value: f64 },
    #[error("LengthMismatch: specifications of length {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("TooLarge: length {len} exceeds {max}")]
    TooLarge { len: usize, max: usize },
    #[error("invalid parameter list: {0}")]
    Parse(String),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

/// Parameters `p_1..p_k`: `p_i` is the probability that coordinate `i` is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpec {
    params: Vec<f64>,
}

impl ProductSpec {
    pub fn new(params: Vec<f64>) -> Result<Self, ProductError> {
        if params.is_empty() {
            return Err(ProductError::Empty);
        }
        for (index, &value) in params.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ProductError::ParamOutOfRange { index, value });
            }
        }
        Ok(Self { params })
    }

    /// Parses a comma-separated list such as `"0.3,0.9"`.
    pub fn parse(text: &str) -> Result<Self, ProductError> {
        let params = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| ProductError::Parse(format!("`{}`: {e}", t.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(params)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// The first `i` parameters.
    pub fn prefix(&self, i: usize) -> ProductSpec {
        ProductSpec {
            params: self.params[..i].to_vec(),
        }
    }

    /// Probability of the outcome `bits` (coordinate `i` is bit `i`).
    pub fn probability(&self, bits: &[bool]) -> f64 {
        self.params
            .iter()
            .zip(bits)
            .map(|(&p, &b)| if b { p } else { 1.0 - p })
            .product()
    }
}

/// The `2k`-state encoder chain over `{0, 1}`.
///
/// States `0_i`/`1_i` emit the value of coordinate `i`; from either state at
/// layer `i - 1` the chain moves to `1_i` with probability `p_i`. After layer
/// `k` all mass is absorbed in `0_k`, so every longer word is padded with 0s.
/// States are ordered `0_1, 1_1, 0_2, 1_2, ...`.
pub fn encode_product(spec: &ProductSpec) -> LabeledMarkovChain {
    let k = spec.len();
    let p = spec.params();
    let zero = |i: usize| 2 * (i - 1);
    let one = |i: usize| 2 * (i - 1) + 1;
    let n = 2 * k;

    let mut names = Vec::with_capacity(n);
    for i in 1..=k {
        names.push(format!("0_{i}"));
        names.push(format!("1_{i}"));
    }
    let mut initial = vec![0.0; n];
    initial[zero(1)] = 1.0 - p[0];
    initial[one(1)] = p[0];

    let mut rows = vec![vec![0.0; n]; n];
    for i in 2..=k {
        for from in [zero(i - 1), one(i - 1)] {
            rows[from][one(i)] = p[i - 1];
            rows[from][zero(i)] = 1.0 - p[i - 1];
        }
    }
    rows[zero(k)][zero(k)] = 1.0;
    rows[one(k)][zero(k)] = 1.0;

    LabeledMarkovChain::new(
        names,
        vec!["0".into(), "1".into()],
        initial,
        rows,
        (0..n).map(|s| s % 2).collect(),
    )
    .expect("encoder chain is stochastic by construction")
}

fn same_len(a: &ProductSpec, b: &ProductSpec) -> Result<usize, ProductError> {
    if a.len() != b.len() {
        return Err(ProductError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.len())
}

/// `1/2 sum over {0,1}^k of |prod p - prod q|` by full enumeration.
pub fn product_tv_bruteforce(
    spec1: &ProductSpec,
    spec2: &ProductSpec,
) -> Result<f64, ProductError> {
    let k = same_len(spec1, spec2)?;
    if k > MAX_BRUTEFORCE_LEN {
        return Err(ProductError::TooLarge {
            len: k,
            max: MAX_BRUTEFORCE_LEN,
        });
    }
    let mut bits = vec![false; k];
    let mut total = 0.0;
    for code in 0u32..1 << k {
        for (i, b) in bits.iter_mut().enumerate() {
            *b = code >> (k - 1 - i) & 1 == 1;
        }
        total += (spec1.probability(&bits) - spec2.probability(&bits)).abs();
    }
    Ok(0.5 * total)
}

/// `TV_k = m^k (S_k - S_{k-1}) / (m - 1)` on the two encoder chains, `m = 2`.
pub fn tv_via_sk_difference(spec1: &ProductSpec, spec2: &ProductSpec) -> Result<f64, ProductError> {
    let k = same_len(spec1, spec2)?;
    let (c1, c2) = (encode_product(spec1), encode_product(spec2));
    let report = ck_truncated(&c1, &c2, k)?;
    let m = report.alphabet_size;
    let diff = report.partial_sum(k) - report.partial_sum(k - 1);
    Ok(diff / (inv_pow(m, k) * (m - 1) as f64))
}

/// CK distance between two encoder chains of length `i`. TV is constant from
/// horizon `i` on, so the series tail sums in closed form:
/// `d_i = S_{i-1} + m^{1-i} TV_i`.
pub fn encoder_ck_distance(spec1: &ProductSpec, spec2: &ProductSpec) -> Result<f64, ProductError> {
    let i = same_len(spec1, spec2)?;
    let (c1, c2) = (encode_product(spec1), encode_product(spec2));
    let report = ck_truncated(&c1, &c2, i)?;
    Ok(report.partial_sum(i - 1) + inv_pow(report.alphabet_size, i - 1) * report.tv(i))
}

/// Recovers `TV_k` from `d_1..d_k`, the CK distances of the prefix encoders,
/// by forward substitution in the lower-triangular system
/// `d_i = sum_{j<i} ((m-1)/m^j) TV_j + m^{1-i} TV_i`.
pub fn tv_via_linear_system(spec1: &ProductSpec, spec2: &ProductSpec) -> Result<f64, ProductError> {
    let k = same_len(spec1, spec2)?;
    if k > MAX_LINEAR_SYSTEM_LEN {
        return Err(ProductError::TooLarge {
            len: k,
            max: MAX_LINEAR_SYSTEM_LEN,
        });
    }
    let m = 2;
    let d: Vec<f64> = (1..=k)
        .map(|i| encoder_ck_distance(&spec1.prefix(i), &spec2.prefix(i)))
        .collect::<Result<_, _>>()?;
    let mut tv = Vec::with_capacity(k);
    for i in 1..=k {
        let known: f64 = (1..i)
            .map(|j| (m - 1) as f64 * inv_pow(m, j) * tv[j - 1])
            .sum();
        let diagonal = inv_pow(m, i - 1);
        tv.push((d[i - 1] - known) / diagonal);
    }
    Ok(tv[k - 1])
}
