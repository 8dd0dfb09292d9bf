//! Joint prefix-tree enumeration of the trace distributions of two chains.
//!
//! Level `i` of the tree holds every word `w` of length `i` that has positive
//! probability under at least one chain, together with the forward state-mass
//! vectors `mass_j(w)[s] = P_j(first i labels = w, state_i = s)`. The trace
//! probability of `w` under chain `j` is the total of its mass vector.
//!
//! Words are stored as links into their parent level (an arena per level
//! shared through `Arc`), so a level costs a parent index and a label per word
//! plus the two mass vectors. Entries are kept in lexicographic word order and
//! every reduction runs in that order, so results are bit-stable.

use std::sync::Arc;

use thiserror::Error;

use crate::model::{LabelCompatibility, LabeledMarkovChain, ModelError, Symbol};

/// Default cap on the number of candidate words generated for one level.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("AlphabetMismatch: {left:?} vs {right:?}")]
    AlphabetMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("NodeBudgetExceeded: level needs {requested} candidate words, cap is {cap}")]
    NodeBudgetExceeded { requested: usize, cap: usize },
    #[error("level was built for a different chain pair")]
    LevelMismatch,
}

impl From<ModelError> for TraceError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::AlphabetMismatch { left, right } => {
                TraceError::AlphabetMismatch { left, right }
            }
            // LabelCompatibility::check only raises AlphabetMismatch.
            other => unreachable!("unexpected model error {other}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Maximum number of candidate child words (`live words x m`) per level.
    pub node_budget: usize,
    /// Drop words whose probability is below this threshold under both
    /// chains. Any positive-mass pruning voids the certified error bound.
    pub prune_below: Option<f64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            node_budget: DEFAULT_NODE_BUDGET,
            prune_below: None,
        }
    }
}

impl EngineConfig {
    pub fn with_budget(node_budget: usize) -> Self {
        Self {
            node_budget,
            ..Self::default()
        }
    }
}

#[derive(Debug)]
struct Links {
    up: Option<Arc<Links>>,
    parent: Vec<u32>,
    label: Vec<Symbol>,
}

/// One level of the joint prefix tree.
#[derive(Debug, Clone)]
pub struct PrefixLevel {
    horizon: usize,
    alphabet_size: usize,
    n1: usize,
    n2: usize,
    links: Arc<Links>,
    mass1: Vec<f64>,
    mass2: Vec<f64>,
    total1: Vec<f64>,
    total2: Vec<f64>,
    m_sum: f64,
    sum1: f64,
    sum2: f64,
    tv: f64,
    lossless: bool,
}

/// Borrowed view of one surviving word of a level.
#[derive(Debug, Clone, Copy)]
pub struct PrefixEntry<'a> {
    pub index: usize,
    pub label: Symbol,
    pub mass1: &'a [f64],
    pub mass2: &'a [f64],
    /// `p_1^i(w)`.
    pub p1: f64,
    /// `p_2^i(w)`.
    pub p2: f64,
}

impl PrefixLevel {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Number of surviving words.
    pub fn len(&self) -> usize {
        self.total1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total1.is_empty()
    }

    /// `M_i`: sum over words of `min(p_1(w), p_2(w))`.
    pub fn m_sum(&self) -> f64 {
        self.m_sum
    }

    /// `TV_i`, evaluated as `(T_1 + T_2)/2 - M_i` where `T_j` is the total
    /// trace mass of chain `j`. Since `T_j = 1` this is `1 - M_i`; the
    /// symmetric form is exactly zero whenever the two distributions agree bitwise.
    pub fn tv(&self) -> f64 {
        self.tv
    }

    /// Total trace mass of each chain at this horizon.
    pub fn totals(&self) -> (f64, f64) {
        (self.sum1, self.sum2)
    }

    /// False once a word with positive mass has been dropped by threshold pruning.
    pub fn is_lossless(&self) -> bool {
        self.lossless
    }

    pub fn entry(&self, index: usize) -> PrefixEntry<'_> {
        PrefixEntry {
            index,
            label: self.links.label[index],
            mass1: &self.mass1[index * self.n1..(index + 1) * self.n1],
            mass2: &self.mass2[index * self.n2..(index + 1) * self.n2],
            p1: self.total1[index],
            p2: self.total2[index],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = PrefixEntry<'_>> + '_ {
        (0..self.len()).map(move |i| self.entry(i))
    }

    /// Reconstructs the word of entry `index` by walking up the tree.
    pub fn word(&self, index: usize) -> Vec<Symbol> {
        let mut word = vec![0; self.horizon];
        let mut node = Some(&self.links);
        let mut idx = index;
        let mut pos = self.horizon;
        while let Some(links) = node {
            pos -= 1;
            word[pos] = links.label[idx];
            idx = links.parent[idx] as usize;
            node = links.up.as_ref();
        }
        debug_assert_eq!(pos, 0);
        word
    }

    /// All surviving words with their two trace probabilities, in lexicographic order.
    pub fn distribution(&self) -> Vec<(Vec<Symbol>, f64, f64)> {
        (0..self.len())
            .map(|i| (self.word(i), self.total1[i], self.total2[i]))
            .collect()
    }

    fn matches(&self, c1: &LabeledMarkovChain, c2: &LabeledMarkovChain) -> bool {
        self.n1 == c1.num_states()
            && self.n2 == c2.num_states()
            && self.alphabet_size == c1.alphabet_size()
    }
}

/// `TV` by the half-sum `1/2 sum_w |p_1(w) - p_2(w)|` over the level's words.
pub fn tv_direct(level: &PrefixLevel) -> f64 {
    let half: f64 = level
        .total1
        .iter()
        .zip(&level.total2)
        .map(|(a, b)| (a - b).abs())
        .sum();
    0.5 * half
}

/// Builds prefix levels for a fixed pair of compatible chains.
#[derive(Debug, Clone)]
pub struct TraceEngine<'a> {
    chain1: &'a LabeledMarkovChain,
    chain2: &'a LabeledMarkovChain,
    config: EngineConfig,
}

impl<'a> TraceEngine<'a> {
    pub fn new(
        chain1: &'a LabeledMarkovChain,
        chain2: &'a LabeledMarkovChain,
        config: EngineConfig,
    ) -> Result<Self, TraceError> {
        LabelCompatibility::check(chain1, chain2)?;
        Ok(Self {
            chain1,
            chain2,
            config,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn alphabet_size(&self) -> usize {
        self.chain1.alphabet_size()
    }

    /// Horizon-1 level: one word per label, mass `mu_j` restricted to the
    /// states carrying that label.
    pub fn initial_level(&self) -> Result<PrefixLevel, TraceError> {
        let m = self.alphabet_size();
        self.check_budget(m)?;
        let (c1, c2) = (self.chain1, self.chain2);
        let mut b = LevelBuilder::new(1, m, c1.num_states(), c2.num_states(), None, m);
        for a in 0..m as Symbol {
            b.push_child(
                0,
                a,
                |s| c1.initial()[s],
                c1.states_with_label(a),
                |s| c2.initial()[s],
                c2.states_with_label(a),
                self.config.prune_below,
            );
        }
        Ok(b.finish(true))
    }

    /// Extends every surviving word by every label. A child's mass on
    /// state `s'` is `sum_s mass(w)[s] P(s, s')` for `s'` carrying the new
    /// label, and zero elsewhere.
    pub fn extend(&self, level: &PrefixLevel) -> Result<PrefixLevel, TraceError> {
        if !level.matches(self.chain1, self.chain2) {
            return Err(TraceError::LevelMismatch);
        }
        let m = self.alphabet_size();
        let requested = level.len().saturating_mul(m);
        self.check_budget(requested)?;
        let (c1, c2) = (self.chain1, self.chain2);
        let mut b = LevelBuilder::new(
            level.horizon + 1,
            m,
            c1.num_states(),
            c2.num_states(),
            Some(level.links.clone()),
            requested,
        );
        for e in level.entries() {
            // Only states carrying the word's last label hold mass.
            let src1 = c1.states_with_label(e.label);
            let src2 = c2.states_with_label(e.label);
            for a in 0..m as Symbol {
                b.push_child(
                    e.index as u32,
                    a,
                    |t| src1.iter().map(|&s| e.mass1[s] * c1.transition(s, t)).sum(),
                    c1.states_with_label(a),
                    |t| src2.iter().map(|&s| e.mass2[s] * c2.transition(s, t)).sum(),
                    c2.states_with_label(a),
                    self.config.prune_below,
                );
            }
        }
        Ok(b.finish(level.lossless))
    }

    /// Builds levels `1..=horizon` and returns their scalar summaries.
    pub fn summaries(&self, horizon: usize) -> Result<Vec<LevelSummary>, TraceError> {
        let mut out = Vec::with_capacity(horizon);
        if horizon == 0 {
            return Ok(out);
        }
        let mut level = self.initial_level()?;
        out.push(LevelSummary::of(&level));
        while level.horizon < horizon {
            level = self.extend(&level)?;
            out.push(LevelSummary::of(&level));
        }
        Ok(out)
    }

    fn check_budget(&self, requested: usize) -> Result<(), TraceError> {
        let cap = self.config.node_budget.min(u32::MAX as usize);
        if requested > cap {
            return Err(TraceError::NodeBudgetExceeded { requested, cap });
        }
        Ok(())
    }
}

/// Scalars of one level, retained after the level itself is dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSummary {
    pub horizon: usize,
    pub words: usize,
    pub m_sum: f64,
    pub tv: f64,
    pub tv_direct: f64,
    pub total1: f64,
    pub total2: f64,
    pub lossless: bool,
}

impl LevelSummary {
    pub fn of(level: &PrefixLevel) -> Self {
        Self {
            horizon: level.horizon,
            words: level.len(),
            m_sum: level.m_sum,
            tv: level.tv,
            tv_direct: tv_direct(level),
            total1: level.sum1,
            total2: level.sum2,
            lossless: level.lossless,
        }
    }
}

/// Horizon-1 level with the default configuration.
pub fn initial_level(
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
) -> Result<PrefixLevel, TraceError> {
    TraceEngine::new(chain1, chain2, EngineConfig::default())?.initial_level()
}

/// One extension step with the default configuration.
pub fn extend(
    level: &PrefixLevel,
    chain1: &LabeledMarkovChain,
    chain2: &LabeledMarkovChain,
) -> Result<PrefixLevel, TraceError> {
    TraceEngine::new(chain1, chain2, EngineConfig::default())?.extend(level)
}

struct LevelBuilder {
    horizon: usize,
    m: usize,
    n1: usize,
    n2: usize,
    up: Option<Arc<Links>>,
    parent: Vec<u32>,
    label: Vec<Symbol>,
    mass1: Vec<f64>,
    mass2: Vec<f64>,
    total1: Vec<f64>,
    total2: Vec<f64>,
    pruned_positive: bool,
}

impl LevelBuilder {
    fn new(
        horizon: usize,
        m: usize,
        n1: usize,
        n2: usize,
        up: Option<Arc<Links>>,
        capacity: usize,
    ) -> Self {
        Self {
            horizon,
            m,
            n1,
            n2,
            up,
            parent: Vec::with_capacity(capacity),
            label: Vec::with_capacity(capacity),
            mass1: Vec::with_capacity(capacity * n1),
            mass2: Vec::with_capacity(capacity * n2),
            total1: Vec::with_capacity(capacity),
            total2: Vec::with_capacity(capacity),
            pruned_positive: false,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_child(
        &mut self,
        parent: u32,
        label: Symbol,
        into1: impl Fn(usize) -> f64,
        targets1: &[usize],
        into2: impl Fn(usize) -> f64,
        targets2: &[usize],
        prune_below: Option<f64>,
    ) {
        let base1 = self.mass1.len();
        let base2 = self.mass2.len();
        self.mass1.resize(base1 + self.n1, 0.0);
        self.mass2.resize(base2 + self.n2, 0.0);
        let mut t1 = 0.0;
        for &t in targets1 {
            let x = into1(t);
            self.mass1[base1 + t] = x;
            t1 += x;
        }
        let mut t2 = 0.0;
        for &t in targets2 {
            let x = into2(t);
            self.mass2[base2 + t] = x;
            t2 += x;
        }
        let drop = if t1 == 0.0 && t2 == 0.0 {
            true
        } else if let Some(th) = prune_below {
            let small = t1 < th && t2 < th;
            self.pruned_positive |= small;
            small
        } else {
            false
        };
        if drop {
            self.mass1.truncate(base1);
            self.mass2.truncate(base2);
            return;
        }
        self.parent.push(parent);
        self.label.push(label);
        self.total1.push(t1);
        self.total2.push(t2);
    }

    fn finish(self, parent_lossless: bool) -> PrefixLevel {
        let mut m_sum = 0.0;
        let mut sum1 = 0.0;
        let mut sum2 = 0.0;
        for (&a, &b) in self.total1.iter().zip(&self.total2) {
            m_sum += a.min(b);
            sum1 += a;
            sum2 += b;
        }
        let tv = (0.5 * (sum1 + sum2) - m_sum).clamp(0.0, 1.0);
        PrefixLevel {
            horizon: self.horizon,
            alphabet_size: self.m,
            n1: self.n1,
            n2: self.n2,
            links: Arc::new(Links {
                up: self.up,
                parent: self.parent,
                label: self.label,
            }),
            mass1: self.mass1,
            mass2: self.mass2,
            total1: self.total1,
            total2: self.total2,
            m_sum,
            sum1,
            sum2,
            tv,
            lossless: parent_lossless && !self.pruned_positive,
        }
    }
}
