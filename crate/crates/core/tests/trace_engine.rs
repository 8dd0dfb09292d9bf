mod common;

use ckdist::model::{bias_onegin, onegin};
use ckdist::trace::{tv_direct, EngineConfig, TraceEngine, TraceError, DEFAULT_NODE_BUDGET};
use common::{path_distribution, random_chain_upto, rng};
use proptest::prelude::*;

fn levels_match_oracle(seed: u64, m: usize, max_states: usize, k: usize) {
    let mut r = rng(seed);
    let c1 = random_chain_upto(&mut r, max_states, m);
    let c2 = random_chain_upto(&mut r, max_states, m);
    let engine = TraceEngine::new(&c1, &c2, EngineConfig::default()).unwrap();
    let mut level = engine.initial_level().unwrap();
    for i in 1..=k {
        if i > 1 {
            level = engine.extend(&level).unwrap();
        }
        let (o1, o2) = (path_distribution(&c1, i), path_distribution(&c2, i));
        let got = level.distribution();
        for (w, p1, p2) in &got {
            let (e1, e2) = (
                o1.get(w).copied().unwrap_or(0.0),
                o2.get(w).copied().unwrap_or(0.0),
            );
            assert!(
                (p1 - e1).abs() < 1e-12,
                "seed {seed} i {i} {w:?}: {p1} vs {e1}"
            );
            assert!(
                (p2 - e2).abs() < 1e-12,
                "seed {seed} i {i} {w:?}: {p2} vs {e2}"
            );
        }
        // Every oracle word with positive mass appears in the level.
        for w in o1.keys().chain(o2.keys()) {
            assert!(
                got.iter().any(|(g, _, _)| g == w),
                "seed {seed}: missing {w:?}"
            );
        }
    }
}

#[test]
fn engine_matches_path_enumeration() {
    for seed in 0..30 {
        levels_match_oracle(seed, 2, 4, 6);
        levels_match_oracle(1000 + seed, 3, 4, 5);
    }
}

#[test]
fn onegin_pair_hand_values() {
    let (a, b) = (onegin(), bias_onegin(0.1).unwrap());
    let engine = TraceEngine::new(&a, &b, EngineConfig::default()).unwrap();
    let l1 = engine.initial_level().unwrap();
    assert_eq!(l1.tv(), 0.0);
    let l2 = engine.extend(&l1).unwrap();
    // Each chain moves 0.1 of mass from VC to VV and from CC to CV.
    assert!((l2.tv() - 0.1).abs() < 1e-15);
    assert!((l2.m_sum() - 0.9).abs() < 1e-15);
}

#[test]
fn identical_chains_have_zero_tv_at_every_level() {
    let mut r = rng(7);
    for _ in 0..10 {
        let c = random_chain_upto(&mut r, 5, 3);
        let engine = TraceEngine::new(&c, &c, EngineConfig::default()).unwrap();
        for s in engine.summaries(8).unwrap() {
            assert_eq!(s.tv, 0.0);
        }
    }
}

#[test]
fn default_budget_stops_full_support_pair() {
    // Full support: level i holds 2^i words, so building level 23 needs
    // 2^23 > 2^22 candidate nodes.
    let (a, b) = (onegin(), bias_onegin(0.05).unwrap());
    let engine = TraceEngine::new(&a, &b, EngineConfig::default()).unwrap();
    match engine.summaries(25) {
        Err(TraceError::NodeBudgetExceeded { requested, cap }) => {
            assert_eq!(cap, DEFAULT_NODE_BUDGET);
            assert_eq!(requested, 1 << 23);
        }
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn small_budget_is_reported() {
    let (a, b) = (onegin(), bias_onegin(0.05).unwrap());
    let engine = TraceEngine::new(&a, &b, EngineConfig::with_budget(100)).unwrap();
    assert!(engine.summaries(6).is_ok());
    assert!(matches!(
        engine.summaries(7),
        Err(TraceError::NodeBudgetExceeded {
            requested: 128,
            cap: 100
        })
    ));
}

#[test]
fn pruning_loses_certification_only_when_mass_is_dropped() {
    let (a, b) = (onegin(), bias_onegin(0.1).unwrap());
    let cfg = EngineConfig {
        prune_below: Some(1e-3),
        ..EngineConfig::default()
    };
    let engine = TraceEngine::new(&a, &b, cfg).unwrap();
    let s = engine.summaries(12).unwrap();
    assert!(s.iter().any(|l| !l.lossless));
    let cfg = EngineConfig {
        prune_below: Some(0.0),
        ..EngineConfig::default()
    };
    let engine = TraceEngine::new(&a, &b, cfg).unwrap();
    assert!(engine.summaries(8).unwrap().iter().all(|l| l.lossless));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn levels_are_normalized(seed in any::<u64>(), m in 2usize..=3, k in 1usize..=7) {
        let mut r = rng(seed);
        let c1 = random_chain_upto(&mut r, 4, m);
        let c2 = random_chain_upto(&mut r, 4, m);
        let engine = TraceEngine::new(&c1, &c2, EngineConfig::default()).unwrap();
        let mut level = engine.initial_level().unwrap();
        for _ in 1..k {
            level = engine.extend(&level).unwrap();
        }
        let (t1, t2) = level.totals();
        prop_assert!((t1 - 1.0).abs() < 1e-12);
        prop_assert!((t2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn m_sums_are_non_increasing(seed in any::<u64>(), m in 2usize..=3) {
        let mut r = rng(seed);
        let c1 = random_chain_upto(&mut r, 4, m);
        let c2 = random_chain_upto(&mut r, 4, m);
        let engine = TraceEngine::new(&c1, &c2, EngineConfig::default()).unwrap();
        let s = engine.summaries(8).unwrap();
        for w in s.windows(2) {
            prop_assert!(w[1].m_sum <= w[0].m_sum + 1e-12);
        }
    }

    #[test]
    fn two_tv_formulas_agree(seed in any::<u64>(), m in 2usize..=3) {
        let mut r = rng(seed);
        let c1 = random_chain_upto(&mut r, 4, m);
        let c2 = random_chain_upto(&mut r, 4, m);
        let engine = TraceEngine::new(&c1, &c2, EngineConfig::default()).unwrap();
        let mut level = engine.initial_level().unwrap();
        for _ in 1..6 {
            prop_assert!((level.tv() - tv_direct(&level)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&level.tv()));
            level = engine.extend(&level).unwrap();
        }
    }
}
