//! Data series for the two figures: the bisimilarity bound as a function of
//! `delta` for several alphabet sizes, and the truncated CK sums between the
//! vowel/consonant chain and its biased variants. Written as CSV with a header
//! row and 17 significant digits.

use std::io::{self, Write};

use crate::bounds::ck_upper_bound;
use crate::distances::{ck_truncated, DistanceError};
use crate::format::format_sig;
use crate::model::{bias_onegin, onegin};

/// Alphabet sizes swept for the bound curves.
pub const BOUND_ALPHABETS: std::ops::RangeInclusive<usize> = 2..=10;
/// Number of uniformly spaced `delta` points in `(0, 1)`.
pub const BOUND_POINTS: usize = 200;
/// Biases compared against the unbiased chain.
pub const ONEGIN_BIASES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
/// Largest horizon of the truncated sums.
pub const ONEGIN_HORIZON: usize = 15;

pub const CSV_DIGITS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub m: usize,
    pub delta: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRow {
    pub epsilon: f64,
    pub k: usize,
    pub s_k: f64,
    pub bound: f64,
}

/// `delta_j = j / (BOUND_POINTS + 1)` for `j = 1..=BOUND_POINTS`, per alphabet size.
pub fn bound_rows() -> Vec<BoundRow> {
    let mut rows = Vec::with_capacity(BOUND_ALPHABETS.count() * BOUND_POINTS);
    for m in BOUND_ALPHABETS {
        for j in 1..=BOUND_POINTS {
            let delta = j as f64 / (BOUND_POINTS + 1) as f64;
            let bound = ck_upper_bound(delta, m).expect("delta in (0, 1)");
            rows.push(BoundRow { m, delta, bound });
        }
    }
    rows
}

/// `S_k` between the unbiased chain and each biased one, `k = 1..=15`, next
/// to the bisimilarity bound `2 eps / (1 + eps)`.
pub fn truncation_rows() -> Result<Vec<TruncationRow>, DistanceError> {
    let reference = onegin();
    let mut rows = Vec::with_capacity(ONEGIN_BIASES.len() * ONEGIN_HORIZON);
    for epsilon in ONEGIN_BIASES {
        let biased = bias_onegin(epsilon).expect("bias within range");
        let report = ck_truncated(&reference, &biased, ONEGIN_HORIZON)?;
        let bound = ck_upper_bound(epsilon, 2).expect("epsilon in (0, 1)");
        for term in &report.per_horizon {
            rows.push(TruncationRow {
                epsilon,
                k: term.horizon,
                s_k: term.partial_sum,
                bound,
            });
        }
    }
    Ok(rows)
}

pub fn write_bound_csv(rows: &[BoundRow], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "m,delta,bound")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{}",
            r.m,
            format_sig(r.delta, CSV_DIGITS),
            format_sig(r.bound, CSV_DIGITS)
        )?;
    }
    Ok(())
}

pub fn write_truncation_csv(rows: &[TruncationRow], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "epsilon,k,s_k,bound")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            format_sig(r.epsilon, CSV_DIGITS),
            r.k,
            format_sig(r.s_k, CSV_DIGITS),
            format_sig(r.bound, CSV_DIGITS)
        )?;
    }
    Ok(())
}
