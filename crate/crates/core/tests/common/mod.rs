//! Independent oracles and seeded generators shared by the integration tests.
//!
//! The oracle walks every state path of length k, so it shares no code with
//! the prefix-tree engine. Keep |S|^k small.

#![allow(dead_code)]

use std::collections::BTreeMap;

use ckdist::model::{LabeledMarkovChain, Symbol};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Dist = BTreeMap<Vec<Symbol>, f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Trace distribution over words of length `k` by enumerating state paths.
pub fn path_distribution(chain: &LabeledMarkovChain, k: usize) -> Dist {
    assert!(k >= 1);
    let n = chain.num_states();
    let mut dist = Dist::new();
    let mut path = vec![0usize; k];
    loop {
        let mut p = chain.initial()[path[0]];
        for w in path.windows(2) {
            if p == 0.0 {
                break;
            }
            p *= chain.transition(w[0], w[1]);
        }
        if p > 0.0 {
            let word: Vec<Symbol> = path.iter().map(|&s| chain.label_of(s)).collect();
            *dist.entry(word).or_insert(0.0) += p;
        }
        // odometer increment
        let mut pos = k;
        loop {
            if pos == 0 {
                return dist;
            }
            pos -= 1;
            path[pos] += 1;
            if path[pos] < n {
                break;
            }
            path[pos] = 0;
        }
    }
}

/// `1/2 sum |p - q|` over the union of supports.
pub fn half_sum_tv(p: &Dist, q: &Dist) -> f64 {
    let mut total = 0.0;
    for (w, a) in p {
        total += (a - q.get(w).copied().unwrap_or(0.0)).abs();
    }
    for (w, b) in q {
        if !p.contains_key(w) {
            total += b.abs();
        }
    }
    0.5 * total
}

/// `sum min(p, q)` over the common support.
pub fn min_sum(p: &Dist, q: &Dist) -> f64 {
    p.iter()
        .filter_map(|(w, a)| q.get(w).map(|b| a.min(*b)))
        .sum()
}

/// TV at horizons 1..=k from the path oracle.
pub fn oracle_tvs(c1: &LabeledMarkovChain, c2: &LabeledMarkovChain, k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| half_sum_tv(&path_distribution(c1, i), &path_distribution(c2, i)))
        .collect()
}

/// `S_k = sum_{i<=k} ((m-1)/m^i) TV_i` from the path oracle.
pub fn oracle_s_k(c1: &LabeledMarkovChain, c2: &LabeledMarkovChain, k: usize) -> f64 {
    let m = c1.alphabet_size() as f64;
    oracle_tvs(c1, c2, k)
        .iter()
        .enumerate()
        .map(|(j, tv)| (m - 1.0) / m.powi(j as i32 + 1) * tv)
        .sum()
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                if sparse && rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let total: f64 = v.iter().sum();
        if total > 1e-3 {
            v.iter_mut().for_each(|x| *x /= total);
            return v;
        }
    }
}

/// Random chain with `n` states over `m` labels; some entries are exact zeros.
pub fn random_chain(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LabeledMarkovChain {
    let labels: Vec<String> = (0..m).map(|a| format!("l{a}")).collect();
    let names: Vec<String> = (0..n).map(|s| format!("s{s}")).collect();
    let labeling: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
    let initial = random_simplex(rng, n, true);
    let rows = (0..n).map(|_| random_simplex(rng, n, true)).collect();
    LabeledMarkovChain::new(names, labels, initial, rows, labeling).expect("valid random chain")
}

/// Random chain with between 1 and `max_states` states.
pub fn random_chain_upto(rng: &mut ChaCha8Rng, max_states: usize, m: usize) -> LabeledMarkovChain {
    let n = rng.gen_range(1..=max_states);
    random_chain(rng, n, m)
}

/// Random distribution over `{0..m}^k` with full or partial support.
pub fn random_word_distribution(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Dist {
    let words = m.pow(k as u32);
    let weights = random_simplex(rng, words, true);
    let mut dist = Dist::new();
    for (code, w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            dist.insert(decode(code, m, k), w);
        }
    }
    dist
}

/// Word of length `k` whose base-`m` digits are `code`, most significant first.
pub fn decode(mut code: usize, m: usize, k: usize) -> Vec<Symbol> {
    let mut word = vec![0; k];
    for slot in word.iter_mut().rev() {
        *slot = (code % m) as Symbol;
        code /= m;
    }
    word
}

/// Marginal of `dist` on prefixes of length `i`.
pub fn marginal(dist: &Dist, i: usize) -> Dist {
    let mut out = Dist::new();
    for (w, p) in dist {
        *out.entry(w[..i].to_vec()).or_insert(0.0) += p;
    }
    out
}

/// `M_1..M_k` of two distributions over words of length `k`.
pub fn prefix_min_sums(p: &Dist, q: &Dist, k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| min_sum(&marginal(p, i), &marginal(q, i)))
        .collect()
}

/// Random chain whose initial distribution and rows each have at most
/// `max_out` positive entries.
pub fn random_sparse_chain(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    max_out: usize,
) -> LabeledMarkovChain {
    let sparse = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut v = vec![0.0; n];
        for _ in 0..max_out {
            v[rng.gen_range(0..n)] += rng.gen_range(0.05..1.0);
        }
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        v
    };
    let labels: Vec<String> = (0..m).map(|a| format!("l{a}")).collect();
    let names: Vec<String> = (0..n).map(|s| format!("s{s}")).collect();
    let labeling: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
    let initial = sparse(rng);
    let rows = (0..n).map(|_| sparse(rng)).collect();
    LabeledMarkovChain::new(names, labels, initial, rows, labeling).expect("valid random chain")
}
