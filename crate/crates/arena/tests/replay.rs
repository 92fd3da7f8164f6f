use duel_arena::config::{AgentSpec, MatchConfig};
use duel_arena::harness::run_match;
use duel_arena::replay::{verify_replay, Replay, ReplayError};
use duel_core::mcts::MctsConfig;
use proptest::prelude::*;

fn quick_mcts() -> AgentSpec {
    AgentSpec::Mcts {
        mcts: MctsConfig {
            iteration_budget: 40,
            rollout_depth: 10,
            ..MctsConfig::default()
        },
    }
}

fn sample(seed: u64) -> Replay {
    run_match(&MatchConfig::new(AgentSpec::Random, AgentSpec::InputReading { difficulty: 0.5 }, seed))
        .unwrap()
        .replay
}

/// Index of the first tick line in the JSON-lines text.
fn first_tick_line(text: &str) -> usize {
    text.lines().position(|l| l.contains(r#""type":"tick""#)).unwrap()
}

fn edit_line(text: &str, n: usize, f: impl Fn(&str) -> String) -> String {
    text.lines()
        .enumerate()
        .map(|(i, l)| if i == n { f(l) } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn save_load_verify_round_trip(seed in any::<u64>(), kind in 0usize..3) {
        let right = match kind {
            0 => AgentSpec::Random,
            1 => AgentSpec::InputReading { difficulty: 0.75 },
            _ => quick_mcts(),
        };
        let replay = run_match(&MatchConfig::new(AgentSpec::Random, right, seed)).unwrap().replay;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        replay.save(&path).unwrap();
        let loaded = Replay::load(&path).unwrap();
        prop_assert_eq!(&loaded.digest, &replay.digest);
        prop_assert_eq!(loaded.to_jsonl(), replay.to_jsonl());
        prop_assert!(verify_replay(&loaded).unwrap());
    }
}

#[test]
fn flipped_action_byte_fails_verification() {
    let text = sample(1).to_jsonl();
    let n = first_tick_line(&text);
    // Flip the low bit of the last byte of the first action label.
    let garbled = edit_line(&text, n, |l| {
        let start = l.find(r#""actions":[""#).unwrap() + r#""actions":[""#.len();
        let end = start + l[start..].find('"').unwrap();
        let mut bytes = l.as_bytes().to_vec();
        bytes[end - 1] ^= 1;
        String::from_utf8(bytes).unwrap()
    });
    assert_ne!(garbled.lines().nth(n), text.lines().nth(n));
    assert!(!verify_replay(&Replay::from_jsonl(&garbled).unwrap()).unwrap());
}

#[test]
fn any_changed_action_fails_verification() {
    let replay = sample(2);
    for i in [0, 5, replay.ticks.len() / 2, replay.ticks.len() - 1] {
        let mut r = replay.clone();
        let a = &mut r.ticks[i].actions[0];
        *a = if a == "block" { "idle".into() } else { "block".into() };
        assert!(!verify_replay(&r).unwrap(), "tick {i}");
    }
}

#[test]
fn tampered_result_or_digest_fails() {
    let replay = sample(3);
    let mut r = replay.clone();
    r.result.ticks += 1;
    assert!(!verify_replay(&r).unwrap());
    let mut r = replay.clone();
    r.digest.replace_range(0..1, if r.digest.starts_with('0') { "1" } else { "0" });
    assert!(!verify_replay(&r).unwrap());
    let mut r = replay.clone();
    r.ticks.pop();
    assert!(!verify_replay(&r).unwrap());
    let mut r = replay;
    r.ticks[0].annotations[0] = Some("forged".into());
    assert!(!verify_replay(&r).unwrap());
}

#[test]
fn other_engine_config_is_a_version_mismatch() {
    let replay = sample(4);
    let mut r = replay.clone();
    r.header.config.round_length += 1;
    assert!(matches!(verify_replay(&r), Err(ReplayError::VersionMismatch { .. })));
    let mut r = replay.clone();
    r.header.engine_version += 1;
    assert!(matches!(verify_replay(&r), Err(ReplayError::VersionMismatch { .. })));
    let mut r = replay;
    r.header.format_version += 1;
    let text = r.to_jsonl();
    assert!(matches!(Replay::from_jsonl(&text).and_then(|r| verify_replay(&r)), Err(ReplayError::VersionMismatch { .. })));
}

#[test]
fn malformed_files_are_format_errors() {
    let text = sample(5).to_jsonl();
    let no_footer: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
    let n = first_tick_line(&text);
    let broken = edit_line(&text, n, |l| l[..l.len() / 2].to_string());
    for bad in ["", "{}", "not json", no_footer.as_str(), broken.as_str()] {
        assert!(matches!(Replay::from_jsonl(bad), Err(ReplayError::Format(_))), "{bad:.40}");
    }
}
