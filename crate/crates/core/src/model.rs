//! Labeled Markov chains: validated domain type, file format, and the
//! vowel/consonant chain used throughout the examples and figures.
//!
//! A chain is the tuple `(S, A, mu, P, L)`: an ordered list of states, an
//! ordered alphabet of labels, an initial distribution over states, a
//! row-stochastic transition matrix, and a deterministic labeling of each
//! state. Values are immutable once validated.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a label in a chain's alphabet.
pub type Symbol = u16;

/// Maximum deviation from 1 accepted for the initial mass and each transition row.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Transition probabilities of the vowel/consonant chain, rows `(V, C)`.
pub const ONEGIN_VV: f64 = 0.128;
pub const ONEGIN_VC: f64 = 0.872;
pub const ONEGIN_CV: f64 = 0.663;
pub const ONEGIN_CC: f64 = 0.337;

/// Largest bias accepted by [`bias_onegin`]; keeps `P(V,V) + eps <= 1` and `P(C,C) - eps >= 0`
/// with margin.
pub const ONEGIN_MAX_BIAS: f64 = 0.128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("NonStochasticRow: transitions of state `{state}` sum to {sum}")]
    NonStochasticRow { state: String, sum: f64 },
    #[error("BadInitialMass: initial distribution sums to {sum}")]
    BadInitialMass { sum: f64 },
    #[error("UnknownLabel: state `{state}` carries label `{label}` which is not in the alphabet")]
    UnknownLabel { state: String, label: String },
    #[error("AlphabetTooSmall: alphabet has {m} label(s), at least 2 are required")]
    AlphabetTooSmall { m: usize },
    #[error("AlphabetTooLarge: alphabet has {m} labels, at most {max} are supported")]
    AlphabetTooLarge { m: usize, max: usize },
    #[error("ProbabilityOutOfRange: {field} = {value} is not in [0, 1]")]
    ProbabilityOutOfRange { field: String, value: f64 },
    #[error("DimensionMismatch: {field} has length {found}, expected {expected}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("DuplicateName: {kind} `{name}` appears more than once")]
    DuplicateName { kind: &'static str, name: String },
    #[error("EmptyChain: a chain needs at least one state")]
    EmptyChain,
    #[error("OutOfRange: bias {epsilon} is not in [0, {max}]", max = ONEGIN_MAX_BIAS)]
    BiasOutOfRange { epsilon: f64 },
    #[error("AlphabetMismatch: {left:?} vs {right:?}")]
    AlphabetMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },
}

impl ModelError {
    /// True for errors raised while reading or decoding input rather than
    /// while checking chain semantics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, ModelError::Parse { .. } | ModelError::Io { .. })
    }
}

/// Serialized chain description, exactly as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChain {
    pub labels: Vec<String>,
    pub states: Vec<RawState>,
    pub initial: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawState {
    pub name: String,
    pub label: String,
}

/// A validated labeled Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMarkovChain {
    states: Vec<String>,
    labels: Vec<String>,
    initial: Vec<f64>,
    /// Row-major `n x n`.
    transitions: Vec<f64>,
    labeling: Vec<Symbol>,
    /// States carrying each label, in state order.
    by_label: Vec<Vec<usize>>,
}

impl LabeledMarkovChain {
    /// Validates the parts of a chain. Nothing is renormalized: a row or an
    /// initial vector off by more than [`STOCHASTIC_TOLERANCE`] is rejected.
    pub fn new(
        states: Vec<String>,
        labels: Vec<String>,
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
        labeling: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let n = states.len();
        let m = labels.len();
        if m < 2 {
            return Err(ModelError::AlphabetTooSmall { m });
        }
        if m > Symbol::MAX as usize {
            return Err(ModelError::AlphabetTooLarge {
                m,
                max: Symbol::MAX as usize,
            });
        }
        if n == 0 {
            return Err(ModelError::EmptyChain);
        }
        check_unique("label", &labels)?;
        check_unique("state", &states)?;
        check_len("labeling", n, labeling.len())?;
        for (s, &l) in labeling.iter().enumerate() {
            if l >= m {
                return Err(ModelError::UnknownLabel {
                    state: states[s].clone(),
                    label: format!("#{l}"),
                });
            }
        }

        check_len("initial", n, initial.len())?;
        for (s, &p) in initial.iter().enumerate() {
            check_probability(|| format!("initial[{}]", states[s]), p)?;
        }
        let mass: f64 = initial.iter().sum();
        if (mass - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(ModelError::BadInitialMass { sum: mass });
        }

        check_len("transitions", n, transitions.len())?;
        let mut flat = Vec::with_capacity(n * n);
        for (s, row) in transitions.iter().enumerate() {
            check_len(&format!("transitions[{}]", states[s]), n, row.len())?;
            for (t, &p) in row.iter().enumerate() {
                check_probability(|| format!("transitions[{}][{}]", states[s], states[t]), p)?;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(ModelError::NonStochasticRow {
                    state: states[s].clone(),
                    sum,
                });
            }
            flat.extend_from_slice(row);
        }

        let mut by_label = vec![Vec::new(); m];
        for (s, &l) in labeling.iter().enumerate() {
            by_label[l].push(s);
        }

        Ok(Self {
            states,
            labels,
            initial,
            transitions: flat,
            labeling: labeling.into_iter().map(|l| l as Symbol).collect(),
            by_label,
        })
    }

    /// Validates a decoded chain file.
    pub fn validate(raw: &RawChain) -> Result<Self, ModelError> {
        let mut labeling = Vec::with_capacity(raw.states.len());
        for st in &raw.states {
            match raw.labels.iter().position(|l| *l == st.label) {
                Some(i) => labeling.push(i),
                None => {
                    return Err(ModelError::UnknownLabel {
                        state: st.name.clone(),
                        label: st.label.clone(),
                    })
                }
            }
        }
        Self::new(
            raw.states.iter().map(|s| s.name.clone()).collect(),
            raw.labels.clone(),
            raw.initial.clone(),
            raw.transitions.clone(),
            labeling,
        )
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let raw: RawChain = serde_json::from_str(text).map_err(parse_error)?;
        Self::validate(&raw)
    }

    pub fn to_raw(&self) -> RawChain {
        RawChain {
            labels: self.labels.clone(),
            states: self
                .states
                .iter()
                .zip(&self.labeling)
                .map(|(name, &l)| RawState {
                    name: name.clone(),
                    label: self.labels[l as usize].clone(),
                })
                .collect(),
            initial: self.initial.clone(),
            transitions: (0..self.num_states())
                .map(|s| self.row(s).to_vec())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        // Serializing plain vectors and strings cannot fail.
        serde_json::to_string_pretty(&self.to_raw()).expect("chain serialization")
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Alphabet size `m`.
    pub fn alphabet_size(&self) -> usize {
        self.labels.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn label_of(&self, state: usize) -> Symbol {
        self.labeling[state]
    }

    pub fn labeling(&self) -> &[Symbol] {
        &self.labeling
    }

    /// States whose label is `label`.
    pub fn states_with_label(&self, label: Symbol) -> &[usize] {
        &self.by_label[label as usize]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let n = self.num_states();
        &self.transitions[state * n..(state + 1) * n]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * self.num_states() + to]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Pushes a distribution over states one step forward: `x' = x P`.
    pub fn step(&self, dist: &[f64]) -> Vec<f64> {
        let n = self.num_states();
        let mut out = vec![0.0; n];
        for (s, &x) in dist.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(s)) {
                *o += x * p;
            }
        }
        out
    }
}

/// Two chains can be compared when their label lists are identical, order included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCompatibility {
    pub shared_alphabet: Vec<String>,
}

impl LabelCompatibility {
    pub fn check(
        a: &LabeledMarkovChain,
        b: &LabeledMarkovChain,
    ) -> Result<LabelCompatibility, ModelError> {
        if a.labels != b.labels {
            return Err(ModelError::AlphabetMismatch {
                left: a.labels.clone(),
                right: b.labels.clone(),
            });
        }
        Ok(LabelCompatibility {
            shared_alphabet: a.labels.clone(),
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.shared_alphabet.len()
    }
}

/// Reads and validates a chain file.
pub fn load_chain(path: impl AsRef<Path>) -> Result<LabeledMarkovChain, ModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    LabeledMarkovChain::from_json(&text)
}

pub fn save_chain(chain: &LabeledMarkovChain, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let mut text = chain.to_json();
    text.push('\n');
    fs::write(path, text).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// The vowel/consonant chain with transitions shifted by `epsilon`:
/// `P(V,V) = 0.128 + eps`, `P(V,C) = 0.872 - eps`, `P(C,V) = 0.663 + eps`,
/// `P(C,C) = 0.337 - eps`. The initial distribution is uniform over `{V, C}`.
pub fn bias_onegin(epsilon: f64) -> Result<LabeledMarkovChain, ModelError> {
    if !(0.0..=ONEGIN_MAX_BIAS).contains(&epsilon) {
        return Err(ModelError::BiasOutOfRange { epsilon });
    }
    LabeledMarkovChain::new(
        vec!["v".into(), "c".into()],
        vec!["V".into(), "C".into()],
        vec![0.5, 0.5],
        vec![
            vec![ONEGIN_VV + epsilon, ONEGIN_VC - epsilon],
            vec![ONEGIN_CV + epsilon, ONEGIN_CC - epsilon],
        ],
        vec![0, 1],
    )
}

/// The unbiased vowel/consonant chain.
pub fn onegin() -> LabeledMarkovChain {
    bias_onegin(0.0).expect("unbiased chain is valid")
}

fn parse_error(e: serde_json::Error) -> ModelError {
    ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn check_len(field: &str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected != found {
        return Err(ModelError::DimensionMismatch {
            field: field.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

fn check_probability(field: impl FnOnce() -> String, value: f64) -> Result<(), ModelError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(ModelError::ProbabilityOutOfRange {
            field: field(),
            value,
        });
    }
    Ok(())
}

fn check_unique(kind: &'static str, names: &[String]) -> Result<(), ModelError> {
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(ModelError::DuplicateName {
                kind,
                name: a.clone(),
            });
        }
    }
    Ok(())
}

impl fmt::Display for LabeledMarkovChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LMC({} states, alphabet [{}])",
            self.num_states(),
            self.labels.join(", ")
        )
    }
}
