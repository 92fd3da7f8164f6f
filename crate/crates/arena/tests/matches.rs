use duel_arena::config::{AgentSpec, MatchConfig};
use duel_arena::harness::run_match;
use duel_core::engine::{Side, Winner};
use duel_core::mcts::MctsConfig;

fn reader(difficulty: f64) -> AgentSpec {
    AgentSpec::InputReading { difficulty }
}

#[test]
fn perfect_reader_beats_random_on_every_seed() {
    for seed in 0..100 {
        let reader_side = if seed % 2 == 0 { Side::Left } else { Side::Right };
        let cfg = match reader_side {
            Side::Left => MatchConfig::new(reader(1.0), AgentSpec::Random, seed),
            Side::Right => MatchConfig::new(AgentSpec::Random, reader(1.0), seed),
        };
        let report = run_match(&cfg).unwrap();
        assert_eq!(report.winner(), Some(Winner::from(reader_side)), "seed {seed}");
        assert_eq!(report.replay.result.round_wins[reader_side.index()], 2, "seed {seed}");
    }
}

#[test]
fn decided_matches_give_the_winner_two_rounds() {
    let mut decided = 0;
    for seed in 0..40 {
        let report = run_match(&MatchConfig::new(AgentSpec::Random, reader(0.5), seed)).unwrap();
        let r = &report.replay.result;
        let w = r.winner.expect("every match ends").side();
        if let Some(side) = w {
            if r.round_wins[side.index()] == 2 {
                decided += 1;
            } else {
                // Only a round cap reached through drawn rounds ends it early.
                assert_eq!(r.rounds.len() as u8, cfg_rounds_cap(), "seed {seed}");
            }
        }
    }
    assert!(decided >= 35);
}

fn cfg_rounds_cap() -> u8 {
    MatchConfig::new(AgentSpec::Random, AgentSpec::Random, 0).rules().max_rounds
}

#[test]
fn every_pairing_is_deterministic() {
    let mcts = AgentSpec::Mcts {
        mcts: MctsConfig {
            iteration_budget: 30,
            rollout_depth: 10,
            ..MctsConfig::default()
        },
    };
    let kinds = [AgentSpec::Random, reader(0.3), mcts];
    for (i, l) in kinds.iter().enumerate() {
        for r in &kinds[i..] {
            let cfg = MatchConfig::new(l.clone(), r.clone(), 99);
            let a = run_match(&cfg).unwrap();
            let b = run_match(&cfg).unwrap();
            assert_eq!(a.replay.digest, b.replay.digest, "{} vs {}", l.kind(), r.kind());
            assert_eq!(a.replay.to_jsonl(), b.replay.to_jsonl());
        }
    }
}

#[test]
fn seeds_change_the_match() {
    let a = run_match(&MatchConfig::new(AgentSpec::Random, AgentSpec::Random, 1)).unwrap();
    let b = run_match(&MatchConfig::new(AgentSpec::Random, AgentSpec::Random, 2)).unwrap();
    assert_ne!(a.replay.digest, b.replay.digest);
}

#[test]
fn latency_grows_with_the_iteration_budget() {
    let mean = |budget: u32| {
        let mcts = AgentSpec::Mcts {
            mcts: MctsConfig {
                iteration_budget: budget,
                rollout_depth: 20,
                ..MctsConfig::default()
            },
        };
        let r = run_match(&MatchConfig::new(mcts, AgentSpec::Random, 5)).unwrap();
        r.stats[0].mean_latency_us()
    };
    let (small, large) = (mean(10), mean(400));
    assert!(small < large, "{small} vs {large}");
}
