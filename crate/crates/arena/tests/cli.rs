use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn arena(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arena")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn match_verify_and_mine() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    std::fs::create_dir(&logs).unwrap();
    for seed in ["1", "2"] {
        let out = logs.join(format!("m{seed}.jsonl"));
        let o = arena(&["match", "--config", &cfg("match_fsm_vs_bt.json"), "--seed", seed, "--out", p(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v = arena(&["verify", p(&out)]);
        assert_eq!(v.status.code(), Some(0));
        assert!(String::from_utf8_lossy(&v.stdout).starts_with("ok "));
    }

    let fsm = dir.path().join("mined.json");
    let o = arena(&["mine", "--logs", p(&logs), "--out", p(&fsm), "--max-len", "2", "--pool-size", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let def: duel_core::fsm::FsmDef = serde_json::from_str(&std::fs::read_to_string(&fsm).unwrap()).unwrap();
    assert!(def.states.iter().all(|s| !s.tactics.is_empty() && s.tactics.len() <= 3));
    assert!(def.states.iter().flat_map(|s| &s.tactics).all(|t| t.actions.len() <= 2));

    // The mined machine plays straight away.
    let mcfg = dir.path().join("mined_match.json");
    let text = format!(
        r#"{{"left": {{"kind": "fsm", "fsm": "mined.json"}}, "right": {{"kind": "random"}}, "seed": 4}}"#
    );
    std::fs::write(&mcfg, text).unwrap();
    assert!(arena(&["match", "--config", p(&mcfg)]).status.success());
}

#[test]
fn tampered_replay_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    assert!(arena(&["match", "--config", &cfg("match_fsm_vs_bt.json"), "--out", p(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let tick = text.lines().nth(3).unwrap();
    let mut line: serde_json::Value = serde_json::from_str(tick).unwrap();
    line["actions"][0] = if line["actions"][0] == "block" { "idle" } else { "block" }.into();
    let flipped = line.to_string();
    assert_ne!(flipped, tick);
    std::fs::write(&out, text.replacen(tick, &flipped, 1)).unwrap();
    assert_eq!(arena(&["verify", p(&out)]).status.code(), Some(3));

    let r = std::fs::read_to_string(&out).unwrap().replacen("\"round_length\":990", "\"round_length\":500", 1);
    std::fs::write(&out, r).unwrap();
    assert_eq!(arena(&["verify", p(&out)]).status.code(), Some(3));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"left": {"kind": "telepath"}, "right": {"kind": "random"}}"#).unwrap();
    assert_eq!(arena(&["match", "--config", p(&bad)]).status.code(), Some(2));
    assert_eq!(arena(&["match", "--config", p(&dir.path().join("missing.json"))]).status.code(), Some(2));
    let human = arena(&["match", "--config", &cfg("serve_human.json")]);
    assert_eq!(human.status.code(), Some(2));
    std::fs::write(&bad, "garbage").unwrap();
    assert_eq!(arena(&["verify", p(&bad)]).status.code(), Some(2));
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = arena(&["mine", "--logs", p(&empty), "--out", p(&dir.path().join("x.json"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = arena(&["serve", "--config", &cfg("match_fsm_vs_bt.json"), "--port", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tournament_writes_both_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let roster = dir.path().join("roster.json");
    std::fs::write(
        &roster,
        r#"{"agents": [{"name": "r", "agent": {"kind": "random"}}, {"name": "ir", "agent": {"kind": "input_reading", "difficulty": 1.0}}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = arena(&["tournament", "--roster", p(&roster), "--games", "2", "--seed", "3", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("standings.txt")).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("ir"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(v["matches"].as_array().unwrap().len(), 4);
    assert_eq!(v["table"][0]["wins"], 4);
}

#[test]
fn bundled_configs_load() {
    for name in ["match_mcts_vs_random.json", "match_fsm_vs_bt.json", "match_hybrids.json", "serve_human.json"] {
        let c = duel_arena::config::MatchConfig::load(&configs().join(name)).unwrap();
        let engine = c.engine().unwrap();
        c.build_agents(&engine).unwrap();
    }
    duel_arena::tournament::Roster::load(&configs().join("roster.json")).unwrap();
}
