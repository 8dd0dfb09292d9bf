//! Verification of epsilon-approximate probabilistic bisimulation relations.
//!
//! A relation `R` between the states of two chains is an epsilon-approximate
//! bisimulation when related states share a label and, for every R-closed
//! product set `A1 x A2` (that is, `R(A1) ⊆ A2` and `R^-1(A2) ⊆ A1`), the
//! initial masses of `A1` and `A2` differ by at most epsilon, as do the
//! transition masses into `A1` and `A2` from every related pair.
//!
//! Closed sets are enumerated exhaustively over all subset pairs, so the
//! checker is limited to [`MAX_TOTAL_STATES`] states across both chains.
//!
//! The definition is applied literally. In particular the empty relation makes
//! every subset pair closed, including `(S1, ∅)`, whose initial gap is 1; the
//! empty relation therefore never qualifies for any epsilon below 1.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::LabeledMarkovChain;

pub const MAX_TOTAL_STATES: usize = 20;

/// Slack on `gap <= epsilon` absorbing the rounding in stored probabilities.
pub const GAP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BisimError {
    #[error("TooManyStates: {total} states in total, at most {max} can be enumerated")]
    TooManyStates { total: usize, max: usize },
    #[error("LabelMismatch: related states `{left}` and `{right}` carry different labels")]
    LabelMismatch { left: String, right: String },
    #[error("UnknownState: `{0}`")]
    UnknownState(String),
    #[error("state index ({0}, {1}) out of range")]
    IndexOutOfRange(usize, usize),
    #[error("OutOfRange: epsilon = {0} must lie in (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Relation file contents: pairs of state names, first chain first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRelation {
    pub pairs: Vec<(String, String)>,
}

/// A set of state pairs `(s1, s2)` with `s1` in the first chain.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BisimRelation {
    pairs: BTreeSet<(usize, usize)>,
}

impl BisimRelation {
    pub fn new(
        pairs: impl IntoIterator<Item = (usize, usize)>,
        chain1: &LabeledMarkovChain,
        chain2: &LabeledMarkovChain,
    ) -> Result<Self, BisimError> {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        for &(a, b) in &pairs {
            if a >= chain1.num_states() || b >= chain2.num_states() {
                return Err(BisimError::IndexOutOfRange(a, b));
            }
        }
        Ok(Self { pairs })
    }

    /// `{(s, s)}` for chains with the same number of states.
    pub fn identity(
        chain1: &LabeledMarkovChain,
        chain2: &LabeledMarkovChain,
    ) -> Result<Self, BisimError> {
        let n = chain1.num_states().min(chain2.num_states());
        Self::new((0..n).map(|s| (s, s)), chain1, chain2)
    }

    pub fn from_raw(
        raw: &RawRelation,
        chain1: &LabeledMarkovChain,
        chain2: &LabeledMarkovChain,
    ) -> Result<Self, BisimError> {
        let mut pairs = Vec::with_capacity(raw.pairs.len());
        for (a, b) in &raw.pairs {
            let i = chain1
                .state_index(a)
                .ok_or_else(|| BisimError::UnknownState(a.clone()))?;
            let j = chain2
                .state_index(b)
                .ok_or_else(|| BisimError::UnknownState(b.clone()))?;
            pairs.push((i, j));
        }
        Self::new(pairs, chain1, chain2)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// First pair whose states carry different labels, if any.
    pub fn label_violation(
        &self,
        chain1: &LabeledMarkovChain,
        chain2: &LabeledMarkovChain,
    ) -> Option<(usize, usize)> {
        self.pairs()
            .find(|&(a, b)| chain1.label_of(a) != chain2.label_of(b))
    }
}

pub fn load_relation(
    path: impl AsRef<Path>,
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
) -> Result<BisimRelation, BisimError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| BisimError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let raw: RawRelation = serde_json::from_str(&text).map_err(|e| BisimError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    BisimRelation::from_raw(&raw, chain1, chain2)
}

/// A subset of states stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct StateSet(pub u32);

impl StateSet {
    pub fn contains(self, s: usize) -> bool {
        self.0 >> s & 1 == 1
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&s| self.contains(s))
    }

    pub fn is_subset(self, other: StateSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn names(self, chain: &LabeledMarkovChain) -> Vec<String> {
        self.iter().map(|s| chain.states()[s].clone()).collect()
    }
}

/// `A1 x A2` with `R(A1) ⊆ A2` and `R^-1(A2) ⊆ A1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClosedSetPair {
    pub set1: StateSet,
    pub set2: StateSet,
}

/// What failed in a rejected check.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Condition 1: a related pair with different labels.
    Label { pair: (usize, usize) },
    /// Condition 2: initial masses of a closed pair differ by `gap`.
    Initial { closed: ClosedSetPair, gap: f64 },
    /// Condition 3: transition masses from a related pair into a closed pair differ by `gap`.
    Transition {
        pair: (usize, usize),
        closed: ClosedSetPair,
        gap: f64,
    },
}

impl Violation {
    pub fn gap(&self) -> Option<f64> {
        match self {
            Violation::Label { .. } => None,
            Violation::Initial { gap, .. } | Violation::Transition { gap, .. } => Some(*gap),
        }
    }

    pub fn describe(&self, chain1: &LabeledMarkovChain, chain2: &LabeledMarkovChain) -> String {
        let sets = |c: &ClosedSetPair| {
            format!(
                "({{{}}}, {{{}}})",
                c.set1.names(chain1).join(","),
                c.set2.names(chain2).join(",")
            )
        };
        match self {
            Violation::Label { pair } => format!(
                "label mismatch on ({}, {})",
                chain1.states()[pair.0],
                chain2.states()[pair.1]
            ),
            Violation::Initial { closed, .. } => {
                format!("initial mass on closed set {}", sets(closed))
            }
            Violation::Transition { pair, closed, .. } => format!(
                "transition from ({}, {}) into closed set {}",
                chain1.states()[pair.0],
                chain2.states()[pair.1],
                sets(closed)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisimVerdict {
    pub accepted: bool,
    pub epsilon: f64,
    /// Largest gap over conditions 2 and 3 (0 if there are no closed sets to check).
    pub max_gap: f64,
    /// Smallest violator in enumeration order, when rejected.
    pub witness: Option<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalEpsilon {
    pub value: f64,
    /// True when every gap is exactly zero: the relation is a probabilistic bisimulation.
    pub exact_bisimulation: bool,
    /// Where the maximum gap is attained.
    pub argmax: Option<Violation>,
}

impl fmt::Display for MinimalEpsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        if self.exact_bisimulation {
            write!(f, " (exact bisimulation)")?;
        }
        Ok(())
    }
}

/// Precomputed subset sums for one chain pair.
struct GapTables {
    closed: Vec<ClosedSetPair>,
    init1: Vec<f64>,
    init2: Vec<f64>,
    /// Transition sums `P(s, A)` for every related source state, indexed by mask.
    rows1: Vec<(usize, Vec<f64>)>,
    rows2: Vec<(usize, Vec<f64>)>,
}

fn check_size(chain1: &LabeledMarkovChain, chain2: &LabeledMarkovChain) -> Result<(), BisimError> {
    let total = chain1.num_states() + chain2.num_states();
    if total > MAX_TOTAL_STATES {
        return Err(BisimError::TooManyStates {
            total,
            max: MAX_TOTAL_STATES,
        });
    }
    Ok(())
}

/// Subset sums of `weights` for every mask, built incrementally in mask order.
fn subset_sums(weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << weights.len()];
    for mask in 1..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] + weights[low];
    }
    out
}

/// Images `R(A)` for every mask `A`, given the image of each singleton.
fn images(singletons: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32; 1 << singletons.len()];
    for mask in 1..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] | singletons[low];
    }
    out
}

/// All R-closed pairs `(A1, A2)`, ordered by `A1` then `A2` as bit masks.
pub fn enumerate_closed_sets(
    relation: &BisimRelation,
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
) -> Result<Vec<ClosedSetPair>, BisimError> {
    check_size(chain1, chain2)?;
    let (n1, n2) = (chain1.num_states(), chain2.num_states());
    let mut fwd = vec![0u32; n1];
    let mut bwd = vec![0u32; n2];
    for (a, b) in relation.pairs() {
        fwd[a] |= 1 << b;
        bwd[b] |= 1 << a;
    }
    let img1 = images(&fwd);
    let img2 = images(&bwd);
    let mut out = Vec::new();
    for a1 in 0..1u32 << n1 {
        let need2 = img1[a1 as usize];
        for a2 in 0..1u32 << n2 {
            if need2 & !a2 == 0 && img2[a2 as usize] & !a1 == 0 {
                out.push(ClosedSetPair {
                    set1: StateSet(a1),
                    set2: StateSet(a2),
                });
            }
        }
    }
    Ok(out)
}

fn gap_tables(
    relation: &BisimRelation,
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
) -> Result<GapTables, BisimError> {
    let closed = enumerate_closed_sets(relation, chain1, chain2)?;
    let sources1: BTreeSet<usize> = relation.pairs().map(|(a, _)| a).collect();
    let sources2: BTreeSet<usize> = relation.pairs().map(|(_, b)| b).collect();
    Ok(GapTables {
        closed,
        init1: subset_sums(chain1.initial()),
        init2: subset_sums(chain2.initial()),
        rows1: sources1
            .into_iter()
            .map(|s| (s, subset_sums(chain1.row(s))))
            .collect(),
        rows2: sources2
            .into_iter()
            .map(|s| (s, subset_sums(chain2.row(s))))
            .collect(),
    })
}

impl GapTables {
    fn row1(&self, s: usize) -> &[f64] {
        &self
            .rows1
            .iter()
            .find(|(x, _)| *x == s)
            .expect("related source")
            .1
    }

    fn row2(&self, s: usize) -> &[f64] {
        &self
            .rows2
            .iter()
            .find(|(x, _)| *x == s)
            .expect("related source")
            .1
    }

    /// Visits every condition-2 and condition-3 gap in enumeration order
    /// until `visit` returns false.
    fn for_each_gap(&self, relation: &BisimRelation, mut visit: impl FnMut(Violation) -> bool) {
        let pairs: Vec<_> = relation
            .pairs()
            .map(|(a, b)| (a, b, self.row1(a), self.row2(b)))
            .collect();
        for &c in &self.closed {
            let (m1, m2) = (c.set1.0 as usize, c.set2.0 as usize);
            let gap = (self.init1[m1] - self.init2[m2]).abs();
            if !visit(Violation::Initial { closed: c, gap }) {
                return;
            }
            for &(a, b, r1, r2) in &pairs {
                let gap = (r1[m1] - r2[m2]).abs();
                if !visit(Violation::Transition {
                    pair: (a, b),
                    closed: c,
                    gap,
                }) {
                    return;
                }
            }
        }
    }
}

/// Checks the three conditions at tolerance `epsilon`. On rejection the
/// witness is the first violation in enumeration order: label mismatches
/// first, then closed pairs in mask order with the initial condition before
/// the related pairs.
pub fn check_bisim(
    relation: &BisimRelation,
    epsilon: f64,
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
) -> Result<BisimVerdict, BisimError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BisimError::EpsilonOutOfRange(epsilon));
    }
    check_size(chain1, chain2)?;
    if let Some(pair) = relation.label_violation(chain1, chain2) {
        return Ok(BisimVerdict {
            accepted: false,
            epsilon,
            max_gap: f64::NAN,
            witness: Some(Violation::Label { pair }),
        });
    }
    let tables = gap_tables(relation, chain1, chain2)?;
    let mut max_gap = 0.0f64;
    let mut witness = None;
    tables.for_each_gap(relation, |v| {
        let gap = v.gap().unwrap_or(0.0);
        max_gap = max_gap.max(gap);
        if witness.is_none() && gap > epsilon + GAP_TOLERANCE {
            witness = Some(v);
        }
        true
    });
    Ok(BisimVerdict {
        accepted: witness.is_none(),
        epsilon,
        max_gap,
        witness,
    })
}

/// The largest gap over conditions 2 and 3: the smallest epsilon at which the
/// relation qualifies.
pub fn minimal_epsilon(
    relation: &BisimRelation,
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
) -> Result<MinimalEpsilon, BisimError> {
    check_size(chain1, chain2)?;
    if let Some((a, b)) = relation.label_violation(chain1, chain2) {
        return Err(BisimError::LabelMismatch {
            left: chain1.states()[a].clone(),
            right: chain2.states()[b].clone(),
        });
    }
    let tables = gap_tables(relation, chain1, chain2)?;
    let mut best: Option<Violation> = None;
    let mut value = 0.0f64;
    tables.for_each_gap(relation, |v| {
        let gap = v.gap().unwrap_or(0.0);
        if best.is_none() || gap > value {
            value = gap;
            best = Some(v);
        }
        true
    });
    Ok(MinimalEpsilon {
        value,
        exact_bisimulation: value == 0.0,
        argmax: best,
    })
}
