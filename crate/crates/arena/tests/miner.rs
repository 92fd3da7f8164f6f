use std::collections::BTreeMap;

use duel_arena::config::{AgentSpec, MatchConfig};
use duel_arena::harness::run_match;
use duel_arena::miner::{count_ngrams, extract_logs, mine_logs, mine_tactics, top_k, BandClassifier, LogRun, SideFilter};
use duel_core::engine::{Action, Side};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ACTIONS: [&str; 5] = ["attack:punch", "block", "grab", "move_left", "move_right"];

/// Counts every window of every log whose labels are all the same.
fn brute_force(logs: &[LogRun], max_len: usize) -> BTreeMap<(String, Vec<String>), u64> {
    let mut out = BTreeMap::new();
    for log in logs {
        for i in 0..log.len() {
            for n in 1..=max_len {
                let Some(w) = log.get(i..i + n) else { break };
                if w.iter().all(|(l, _)| *l == w[0].0) {
                    let gram = w.iter().map(|(_, a)| a.clone()).collect();
                    *out.entry((w[0].0.clone(), gram)).or_insert(0) += 1;
                }
            }
        }
    }
    out
}

fn flatten(counts: &duel_arena::miner::NgramCounts) -> BTreeMap<(String, Vec<String>), u64> {
    counts
        .iter()
        .flat_map(|(l, m)| m.iter().map(move |(g, c)| ((l.clone(), g.clone()), *c)))
        .collect()
}

/// A log that lingers in each analysis state for a few ticks.
fn synthetic_log(seed: u64, labels: &[String]) -> LogRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(20..200);
    let mut label = rng.gen_range(0..labels.len());
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.15) {
                label = rng.gen_range(0..labels.len());
            }
            // Skewed so that some sequences are clearly favoured.
            let a = if rng.gen_bool(0.4) { label % ACTIONS.len() } else { rng.gen_range(0..ACTIONS.len()) };
            (labels[label].clone(), ACTIONS[a].to_string())
        })
        .collect()
}

#[test]
fn twenty_synthetic_logs_match_the_brute_force_counter() {
    let classifier = BandClassifier::default();
    let labels = classifier.labels();
    let logs: Vec<LogRun> = (0..20).map(|s| synthetic_log(s, &labels)).collect();
    for max_len in 1..=4 {
        let counts = count_ngrams(&logs, max_len);
        assert_eq!(flatten(&counts), brute_force(&logs, max_len), "max_len {max_len}");
    }
    let mined = mine_logs(&logs, &classifier, 3, 4).unwrap();
    let oracle = brute_force(&logs, 3);
    for state in &mined.fsm.states {
        let mut expected: Vec<(u64, Vec<String>)> = oracle
            .iter()
            .filter(|((l, _), _)| *l == state.id)
            .map(|((_, g), c)| (*c, g.clone()))
            .collect();
        // Most frequent first, then lexicographic.
        expected.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        expected.truncate(4);
        let pool: Vec<(u64, Vec<String>)> = state.tactics.iter().map(|t| (t.weight as u64, t.actions.clone())).collect();
        assert_eq!(pool, expected, "state {}", state.id);
    }
    // Same input, same output.
    let again = mine_logs(&logs, &classifier, 3, 4).unwrap();
    assert_eq!(serde_json::to_string(&again.fsm).unwrap(), serde_json::to_string(&mined.fsm).unwrap());
}

proptest! {
    #[test]
    fn counts_agree_with_brute_force(
        logs in prop::collection::vec(
            prop::collection::vec((0usize..3, 0usize..3), 0..40),
            1..5,
        ),
        max_len in 1usize..5,
    ) {
        let logs: Vec<LogRun> = logs
            .into_iter()
            .map(|l| l.into_iter().map(|(s, a)| (format!("s{s}"), ACTIONS[a].to_string())).collect())
            .collect();
        prop_assert_eq!(flatten(&count_ngrams(&logs, max_len)), brute_force(&logs, max_len));
    }

    #[test]
    fn top_k_is_a_sorted_prefix(counts in prop::collection::btree_map(prop::collection::vec(0usize..3, 1..3), 1u64..6, 1..12), k in 1usize..8) {
        let counts: BTreeMap<Vec<String>, u64> = counts
            .into_iter()
            .map(|(g, c)| (g.into_iter().map(|a| ACTIONS[a].to_string()).collect(), c))
            .collect();
        let top = top_k(&counts, k);
        prop_assert_eq!(top.len(), k.min(counts.len()));
        for w in top.windows(2) {
            prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        }
        if let Some(last) = top.last() {
            let better = counts.iter().filter(|(g, c)| **c > last.1 || (**c == last.1 && **g <= last.0)).count();
            prop_assert_eq!(better, top.len());
        }
    }
}

/// Re-derives one side's (label, action) log straight from the engine.
fn replay_log_oracle(cfg: &MatchConfig, actions: &[[Action; 2]], side: Side, classifier: &BandClassifier) -> Vec<(String, String)> {
    let engine = cfg.engine().unwrap();
    let mut state = engine.initial_state(cfg.seed);
    let mut out = Vec::new();
    for &[l, r] in actions {
        let obs = engine.observe(&state, side);
        if obs.can_act {
            let a = if side == Side::Left { l } else { r };
            out.push((classifier.label(&obs), a.oriented(obs.facing).label(engine.character(side))));
        }
        state = engine.step(&state, l, r).unwrap();
        if engine.round_result(&state).is_some() {
            state = engine.finish_round(&state).unwrap().0;
        }
    }
    out
}

#[test]
fn replay_logs_match_a_direct_simulation() {
    let classifier = BandClassifier::default();
    for seed in 0..5 {
        let cfg = MatchConfig::new(AgentSpec::Random, AgentSpec::InputReading { difficulty: 0.5 }, seed);
        let replay = run_match(&cfg).unwrap().replay;
        let engine = replay.engine().unwrap();
        let actions = replay.actions(&engine).unwrap();
        let logs = extract_logs(&replay, &classifier, SideFilter::All).unwrap();
        // Runs alternate left, right for each round.
        for side in Side::BOTH {
            let got: Vec<(String, String)> = logs.iter().skip(side.index()).step_by(2).flatten().cloned().collect();
            assert_eq!(got, replay_log_oracle(&cfg, &actions, side, &classifier), "seed {seed} {side:?}");
        }
    }
}

#[test]
fn empty_inputs_are_rejected() {
    let classifier = BandClassifier::default();
    assert!(mine_tactics(&[], &classifier, 2, 2, SideFilter::All).is_err());
    assert!(mine_logs(&[vec![]], &classifier, 2, 2).is_err());
}
