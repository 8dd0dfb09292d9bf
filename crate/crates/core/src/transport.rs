//! Exact Kantorovich distance between two small distributions over words,
//! by min-cost flow on rational numbers.
//!
//! This solver shares nothing with the `M_i` closed form: it builds the full
//! transport problem with Cantor costs and solves it by successive shortest
//! paths. Float inputs are first mapped to the nearest rational with
//! denominator at most [`DENOMINATOR_CAP`]; flows are exact from there on.
//! Costs are scaled by `m^{k-1}` so they become integers.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::distances::DistanceError;
use crate::model::Symbol;

/// Largest support the oracle accepts (`m^k`).
pub const MAX_SUPPORT: usize = 64;

/// Denominator cap used when reconstructing rationals from floats.
pub const DENOMINATOR_CAP: u64 = 1_000_000_000_000;

/// Coupling tolerance on the marginals.
pub const COUPLING_TOLERANCE: f64 = 1e-9;

pub type WordDistribution = BTreeMap<Vec<Symbol>, f64>;

/// A joint distribution over `(word of p, word of q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub rows: Vec<Vec<Symbol>>,
    pub cols: Vec<Vec<Symbol>>,
    pub joint: Vec<Vec<f64>>,
}

impl Coupling {
    /// Checks non-negativity and both marginals within [`COUPLING_TOLERANCE`].
    pub fn is_coupling_of(&self, p: &WordDistribution, q: &WordDistribution) -> bool {
        let nonneg = self.joint.iter().flatten().all(|&x| x >= 0.0);
        let rows_ok = self.rows.iter().enumerate().all(|(i, w)| {
            let s: f64 = self.joint[i].iter().sum();
            (s - p.get(w).copied().unwrap_or(0.0)).abs() <= COUPLING_TOLERANCE
        });
        let cols_ok = self.cols.iter().enumerate().all(|(j, w)| {
            let s: f64 = self.joint.iter().map(|r| r[j]).sum();
            (s - q.get(w).copied().unwrap_or(0.0)).abs() <= COUPLING_TOLERANCE
        });
        let covers = p.iter().all(|(w, &x)| x == 0.0 || self.rows.contains(w))
            && q.iter().all(|(w, &x)| x == 0.0 || self.cols.contains(w));
        nonneg && rows_ok && cols_ok && covers
    }

    /// `sum C(w1, w2) pi(w1, w2)` with the Cantor cost of base `m`.
    pub fn cost(&self, m: usize) -> f64 {
        let mut total = 0.0;
        for (i, w1) in self.rows.iter().enumerate() {
            for (j, w2) in self.cols.iter().enumerate() {
                if let Some(d) = w1.iter().zip(w2).position(|(a, b)| a != b) {
                    total += self.joint[i][j] / (m as f64).powi(d as i32);
                }
            }
        }
        total
    }
}

/// Optimal value and an optimal coupling.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub value: f64,
    pub exact_value: BigRational,
    pub coupling: Coupling,
}

/// Exact minimum of the transport cost over all couplings of `p` and `q`.
pub fn kantorovich_oracle(
    p: &WordDistribution,
    q: &WordDistribution,
    m: usize,
) -> Result<f64, DistanceError> {
    Ok(solve_transport(p, q, m)?.value)
}

pub fn solve_transport(
    p: &WordDistribution,
    q: &WordDistribution,
    m: usize,
) -> Result<TransportSolution, DistanceError> {
    if m < 2 {
        return Err(DistanceError::OutOfRange {
            what: "alphabet size",
            value: m as f64,
        });
    }
    let k = word_length(p, q)?;
    let support = (m as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if support > MAX_SUPPORT as u128 {
        return Err(DistanceError::TooLarge {
            size: support.min(usize::MAX as u128) as usize,
            max: MAX_SUPPORT,
        });
    }
    for (w, &x) in p.iter().chain(q.iter()) {
        if w.iter().any(|&a| a as usize >= m) {
            return Err(DistanceError::InvalidWord(format!(
                "{w:?} uses a label >= {m}"
            )));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(DistanceError::OutOfRange {
                what: "probability",
                value: x,
            });
        }
    }

    let rows: Vec<(Vec<Symbol>, BigRational)> = p
        .iter()
        .filter(|(_, &x)| x > 0.0)
        .map(|(w, &x)| (w.clone(), nearest_rational(x, DENOMINATOR_CAP)))
        .collect();
    let cols: Vec<(Vec<Symbol>, BigRational)> = q
        .iter()
        .filter(|(_, &x)| x > 0.0)
        .map(|(w, &x)| (w.clone(), nearest_rational(x, DENOMINATOR_CAP)))
        .collect();

    let scale = (m as i64).pow(k.saturating_sub(1) as u32);
    let mut net = FlowNetwork::new(rows.len() + cols.len() + 2);
    let source = 0;
    let sink = rows.len() + cols.len() + 1;
    for (i, (_, x)) in rows.iter().enumerate() {
        net.add_edge(source, 1 + i, Some(x.clone()), 0);
    }
    for (j, (_, y)) in cols.iter().enumerate() {
        net.add_edge(1 + rows.len() + j, sink, Some(y.clone()), 0);
    }
    let mut middle = Vec::with_capacity(rows.len() * cols.len());
    for (i, (w1, _)) in rows.iter().enumerate() {
        for (j, (w2, _)) in cols.iter().enumerate() {
            let cost = scaled_cantor_cost(w1, w2, m, k);
            let e = net.add_edge(1 + i, 1 + rows.len() + j, None, cost);
            middle.push((i, j, e));
        }
    }
    net.min_cost_flow(source, sink);

    let mut joint = vec![vec![0.0; cols.len()]; rows.len()];
    let mut exact = BigRational::zero();
    for &(i, j, e) in &middle {
        let flow = &net.edges[e].flow;
        if flow.is_zero() {
            continue;
        }
        joint[i][j] = flow.to_f64().unwrap_or(0.0);
        exact += flow * BigRational::from_integer(BigInt::from(net.edges[e].cost));
    }
    exact /= BigRational::from_integer(BigInt::from(scale));

    Ok(TransportSolution {
        value: exact.to_f64().unwrap_or(f64::NAN),
        exact_value: exact,
        coupling: Coupling {
            rows: rows.into_iter().map(|(w, _)| w).collect(),
            cols: cols.into_iter().map(|(w, _)| w).collect(),
            joint,
        },
    })
}

fn word_length(p: &WordDistribution, q: &WordDistribution) -> Result<usize, DistanceError> {
    let mut lens = p.keys().chain(q.keys()).map(Vec::len);
    let Some(k) = lens.next() else {
        return Err(DistanceError::InvalidWord("empty distributions".into()));
    };
    if let Some(other) = lens.find(|&l| l != k) {
        return Err(DistanceError::LengthMismatch {
            left: k,
            right: other,
        });
    }
    if k == 0 {
        return Err(DistanceError::InvalidWord("words must be non-empty".into()));
    }
    Ok(k)
}

/// `m^{k-1} C(w1, w2) = m^{k-i}` for first difference at 1-based position `i`.
fn scaled_cantor_cost(w1: &[Symbol], w2: &[Symbol], m: usize, k: usize) -> i64 {
    match w1.iter().zip(w2).position(|(a, b)| a != b) {
        None => 0,
        Some(j) => (m as i64).pow((k - 1 - j) as u32),
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`.
pub fn nearest_rational(x: f64, max_den: u64) -> BigRational {
    let exact = BigRational::from_float(x).expect("finite probability");
    let max_den = BigInt::from(max_den);
    if exact.denom() <= &max_den {
        return exact;
    }
    let (mut p0, mut q0, mut p1, mut q1) =
        (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (exact.numer().clone(), exact.denom().clone());
    loop {
        let a = &n / &d;
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let r = &n - &a * &d;
        n = std::mem::replace(&mut d, r);
    }
    let t = (&max_den - &q0) / &q1;
    let bound1 = BigRational::new(&p0 + &t * &p1, &q0 + &t * &q1);
    let bound2 = BigRational::new(p1, q1);
    if (&bound2 - &exact).abs() <= (&bound1 - &exact).abs() {
        bound2
    } else {
        bound1
    }
}

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    /// `None` is an uncapacitated arc.
    cap: Option<BigRational>,
    flow: BigRational,
    cost: i64,
    rev: usize,
}

impl Edge {
    fn residual(&self) -> Option<BigRational> {
        self.cap.as_ref().map(|c| c - &self.flow)
    }

    fn has_residual(&self) -> bool {
        match &self.cap {
            None => true,
            Some(c) => c > &self.flow,
        }
    }
}

struct FlowNetwork {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: Option<BigRational>, cost: i64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge {
            to,
            cap,
            flow: BigRational::zero(),
            cost,
            rev: id + 1,
        });
        // Reverse arc: its residual is the forward flow.
        self.edges.push(Edge {
            to: from,
            cap: Some(BigRational::zero()),
            flow: BigRational::zero(),
            cost: -cost,
            rev: id,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    fn push(&mut self, e: usize, amount: &BigRational) {
        self.edges[e].flow += amount;
        let r = self.edges[e].rev;
        self.edges[r].flow -= amount;
    }

    /// Successive shortest paths with Bellman-Ford on the residual graph.
    fn min_cost_flow(&mut self, source: usize, sink: usize) {
        let n = self.adj.len();
        loop {
            let mut dist: Vec<Option<i64>> = vec![None; n];
            let mut via: Vec<Option<usize>> = vec![None; n];
            dist[source] = Some(0);
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    let Some(du) = dist[u] else { continue };
                    for &e in &self.adj[u] {
                        let edge = &self.edges[e];
                        if !self.edge_open(e) {
                            continue;
                        }
                        let nd = du + edge.cost;
                        if dist[edge.to].is_none_or(|dv| nd < dv) {
                            dist[edge.to] = Some(nd);
                            via[edge.to] = Some(e);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[sink].is_none() {
                return;
            }
            let mut path = Vec::new();
            let mut v = sink;
            while v != source {
                let e = via[v].expect("path to sink");
                path.push(e);
                v = self.edges[self.edges[e].rev].to;
            }
            // Source and sink arcs are capacitated, so the bottleneck is finite.
            let bottleneck = path
                .iter()
                .filter_map(|&e| self.residual_of(e))
                .min()
                .expect("finite bottleneck");
            for &e in &path {
                self.push(e, &bottleneck);
            }
        }
    }

    fn edge_open(&self, e: usize) -> bool {
        self.edges[e].has_residual()
    }

    fn residual_of(&self, e: usize) -> Option<BigRational> {
        self.edges[e].residual()
    }
}
