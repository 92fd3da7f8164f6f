//! Builds FSM tactic pools from recorded matches.
//!
//! Every tick on which a mined fighter could act is labelled with an
//! analysis state by a [`BandClassifier`]. Within each run of equally
//! labelled ticks the action n-grams of length `1..=L` are counted. The `k`
//! most frequent n-grams of a state become its tactic pool, weighted by
//! count. Frequent sequences are kept even when they are poor play: the goal
//! is an opponent that plays like people do.
//!
//! Actions are stored as seen from a fighter facing right, matching how
//! tactics are written.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use duel_core::condition::{CmpOp, Condition};
use duel_core::engine::{Observation, Side};
use duel_core::fsm::{FsmDef, StateDef, Tactic, TacticSelection, Transition};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::Referee;
use crate::replay::{Replay, ReplayError};

#[derive(Debug, Error)]
pub enum MineError {
    #[error("no actionable ticks to mine")]
    EmptyLog,
    #[error("max_len and pool_size must both be at least 1")]
    InvalidParams,
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("replay {0} does not re-simulate")]
    BadReplay(String),
}

/// Distance bands crossed with health-lead bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandClassifier {
    /// Closer than this is `close`.
    pub close_below: i32,
    /// Further than this is `far`.
    pub far_above: i32,
    /// A health lead within this margin either way is `even`.
    pub even_margin: i32,
}

impl Default for BandClassifier {
    fn default() -> Self {
        Self {
            close_below: 10,
            far_above: 30,
            even_margin: 10,
        }
    }
}

const DISTANCE_BANDS: [&str; 3] = ["close", "mid", "far"];
const HEALTH_BANDS: [&str; 3] = ["behind", "even", "ahead"];

impl BandClassifier {
    fn bands(&self, obs: &Observation) -> (usize, usize) {
        let d = if obs.distance < self.close_below {
            0
        } else if obs.distance <= self.far_above {
            1
        } else {
            2
        };
        let lead = obs.own_health - obs.opponent_health;
        let h = if lead < -self.even_margin {
            0
        } else if lead <= self.even_margin {
            1
        } else {
            2
        };
        (d, h)
    }

    pub fn label(&self, obs: &Observation) -> String {
        let (d, h) = self.bands(obs);
        format!("{}_{}", DISTANCE_BANDS[d], HEALTH_BANDS[h])
    }

    /// All labels, distance-major.
    pub fn labels(&self) -> Vec<String> {
        DISTANCE_BANDS
            .iter()
            .flat_map(|d| HEALTH_BANDS.iter().map(move |h| format!("{d}_{h}")))
            .collect()
    }

    fn parse(label: &str) -> Option<(usize, usize)> {
        let (d, h) = label.split_once('_')?;
        Some((
            DISTANCE_BANDS.iter().position(|x| *x == d)?,
            HEALTH_BANDS.iter().position(|x| *x == h)?,
        ))
    }

    /// Labels one band step apart on exactly one axis.
    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        match (Self::parse(a), Self::parse(b)) {
            (Some((d1, h1)), Some((d2, h2))) => d1.abs_diff(d2) + h1.abs_diff(h2) == 1,
            _ => false,
        }
    }

    /// Predicate over observation facts that holds exactly when `label` applies.
    pub fn condition(&self, label: &str) -> Option<Condition> {
        let (d, h) = Self::parse(label)?;
        let dist = match d {
            0 => vec![Condition::compare("distance", CmpOp::Lt, self.close_below as f64)],
            1 => vec![
                Condition::compare("distance", CmpOp::Ge, self.close_below as f64),
                Condition::compare("distance", CmpOp::Le, self.far_above as f64),
            ],
            _ => vec![Condition::compare("distance", CmpOp::Gt, self.far_above as f64)],
        };
        let m = self.even_margin as f64;
        let health = match h {
            0 => vec![Condition::compare("health_lead", CmpOp::Lt, -m)],
            1 => vec![
                Condition::compare("health_lead", CmpOp::Ge, -m),
                Condition::compare("health_lead", CmpOp::Le, m),
            ],
            _ => vec![Condition::compare("health_lead", CmpOp::Gt, m)],
        };
        Some(Condition::All(dist.into_iter().chain(health).collect()))
    }
}

/// Actionable ticks of one fighter in one round: (state label, action label).
pub type LogRun = Vec<(String, String)>;

/// n-gram counts per state label.
pub type NgramCounts = BTreeMap<String, BTreeMap<Vec<String>, u64>>;

/// Which fighters of a replay to learn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideFilter {
    /// Human sides when the replay has any, otherwise both.
    #[default]
    PreferHumans,
    All,
}

/// One log per round and mined side.
pub fn extract_logs(replay: &Replay, classifier: &BandClassifier, filter: SideFilter) -> Result<Vec<LogRun>, MineError> {
    let engine = replay.engine()?;
    let actions = replay.actions(&engine).ok_or_else(|| MineError::BadReplay(replay.id().into()))?;
    let cfg = &replay.header.config;
    let humans: Vec<Side> = Side::BOTH.into_iter().filter(|s| cfg.agent(*s).is_human()).collect();
    let sides: Vec<Side> = match filter {
        SideFilter::PreferHumans if !humans.is_empty() => humans,
        _ => Side::BOTH.to_vec(),
    };
    let mut referee = Referee::new(&engine, cfg.seed, cfg.training);
    let mut current: Vec<LogRun> = vec![Vec::new(); sides.len()];
    let mut out = Vec::new();
    for [l, r] in actions {
        for (slot, &side) in current.iter_mut().zip(&sides) {
            let obs = engine.observe(referee.state(), side);
            if obs.can_act {
                let played = if side == Side::Left { l } else { r };
                // Facing left, walking directions mirror back to the facing-right view.
                let normalized = played.oriented(obs.facing);
                slot.push((classifier.label(&obs), normalized.label(engine.character(side))));
            }
        }
        let step = referee.step(l, r).map_err(|_| MineError::BadReplay(replay.id().into()))?;
        if step.round_end.is_some() {
            out.extend(current.iter_mut().map(std::mem::take));
        }
    }
    out.extend(current);
    out.retain(|run| !run.is_empty());
    Ok(out)
}

/// Counts every contiguous n-gram of length `1..=max_len` that lies inside a
/// run of equal labels.
pub fn count_ngrams(logs: &[LogRun], max_len: usize) -> NgramCounts {
    let mut counts = NgramCounts::new();
    for log in logs {
        let mut start = 0;
        while start < log.len() {
            let label = &log[start].0;
            let end = start + log[start..].iter().take_while(|(l, _)| l == label).count();
            let actions: Vec<&String> = log[start..end].iter().map(|(_, a)| a).collect();
            let per_state = counts.entry(label.clone()).or_default();
            for i in 0..actions.len() {
                for n in 1..=max_len.min(actions.len() - i) {
                    let gram: Vec<String> = actions[i..i + n].iter().map(|s| s.to_string()).collect();
                    *per_state.entry(gram).or_insert(0) += 1;
                }
            }
            start = end;
        }
    }
    counts
}

/// The `k` most frequent n-grams, most frequent first, ties in lexicographic order.
pub fn top_k(counts: &BTreeMap<Vec<String>, u64>, k: usize) -> Vec<(Vec<String>, u64)> {
    let mut v: Vec<(Vec<String>, u64)> = counts.iter().map(|(g, c)| (g.clone(), *c)).collect();
    v.sort_by(|a, b| (Reverse(a.1), &a.0).cmp(&(Reverse(b.1), &b.0)));
    v.truncate(k);
    v
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinedFsm {
    pub fsm: FsmDef,
    pub counts: NgramCounts,
}

/// Builds an FSM skeleton from per-round logs.
pub fn mine_logs(logs: &[LogRun], classifier: &BandClassifier, max_len: usize, pool_size: usize) -> Result<MinedFsm, MineError> {
    if max_len == 0 || pool_size == 0 {
        return Err(MineError::InvalidParams);
    }
    let initial = logs
        .iter()
        .find_map(|l| l.first())
        .map(|(label, _)| label.clone())
        .ok_or(MineError::EmptyLog)?;
    let counts = count_ngrams(logs, max_len);
    let present: Vec<String> = classifier
        .labels()
        .into_iter()
        .filter(|l| counts.contains_key(l))
        .chain(counts.keys().filter(|l| !classifier.labels().contains(l)).cloned())
        .collect();
    let states = present
        .iter()
        .map(|label| StateDef {
            id: label.clone(),
            tactics: top_k(&counts[label], pool_size)
                .into_iter()
                .map(|(gram, count)| Tactic {
                    name: gram.join(" "),
                    actions: gram,
                    abort_on: Default::default(),
                    weight: count as f64,
                })
                .collect(),
        })
        .collect();
    // Band predicates are disjoint, so at most one transition out of a state
    // holds at a time; adjacent moves are simply listed first.
    let mut transitions = Vec::new();
    for from in &present {
        for to in &present {
            if from == to {
                continue;
            }
            if let Some(condition) = classifier.condition(to) {
                transitions.push(Transition {
                    from: from.clone(),
                    to: to.clone(),
                    condition,
                    priority: classifier.adjacent(from, to) as i32,
                });
            }
        }
    }
    let fsm = FsmDef {
        states,
        transitions,
        initial,
        selection: TacticSelection::Weighted,
    };
    Ok(MinedFsm { fsm, counts })
}

/// Mines tactic pools from replays.
pub fn mine_tactics(
    replays: &[Replay],
    classifier: &BandClassifier,
    max_len: usize,
    pool_size: usize,
    filter: SideFilter,
) -> Result<MinedFsm, MineError> {
    let mut logs = Vec::new();
    for r in replays {
        logs.extend(extract_logs(r, classifier, filter)?);
    }
    mine_logs(&logs, classifier, max_len, pool_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(distance: i32, own: i32, opp: i32) -> Observation {
        Observation {
            distance,
            own_health: own,
            opponent_health: opp,
            ..Default::default()
        }
    }

    #[test]
    fn nine_bands() {
        let c = BandClassifier::default();
        assert_eq!(c.label(&obs(9, 100, 100)), "close_even");
        assert_eq!(c.label(&obs(10, 100, 100)), "mid_even");
        assert_eq!(c.label(&obs(30, 100, 89)), "mid_ahead");
        assert_eq!(c.label(&obs(31, 80, 91)), "far_behind");
        assert_eq!(c.label(&obs(31, 80, 90)), "far_even");
        assert_eq!(c.labels().len(), 9);
        assert!(c.adjacent("close_even", "mid_even"));
        assert!(c.adjacent("mid_even", "mid_ahead"));
        assert!(!c.adjacent("close_even", "far_even"));
        assert!(!c.adjacent("close_even", "mid_ahead"));
    }

    #[test]
    fn conditions_agree_with_labels() {
        let c = BandClassifier::default();
        for d in 0..60 {
            for lead in -40..=40 {
                let o = obs(d, 50 + lead.max(0), 50 - lead.min(0));
                let label = c.label(&o);
                for l in c.labels() {
                    assert_eq!(c.condition(&l).unwrap().eval(&o), l == label, "{l} at d={d} lead={lead}");
                }
            }
        }
    }

    fn run(entries: &[(&str, &str)]) -> LogRun {
        entries.iter().map(|(l, a)| (l.to_string(), a.to_string())).collect()
    }

    #[test]
    fn single_action_state() {
        let logs = vec![run(&[("close_even", "grab"), ("close_even", "grab"), ("mid_even", "move_right")])];
        let m = mine_logs(&logs, &BandClassifier::default(), 2, 3).unwrap();
        let close = m.fsm.states.iter().find(|s| s.id == "close_even").unwrap();
        assert_eq!(close.tactics[0].actions, vec!["grab"]);
        assert_eq!(close.tactics[0].weight, 2.0);
        assert_eq!(close.tactics[1].actions, vec!["grab", "grab"]);
        assert_eq!(m.fsm.initial, "close_even");
        // Runs do not leak across a label change.
        assert!(!m.counts["close_even"].keys().any(|g| g.contains(&"move_right".to_string())));
    }

    #[test]
    fn boundary_k1_l1() {
        let logs = vec![run(&[
            ("far_even", "move_right"),
            ("far_even", "move_right"),
            ("far_even", "block"),
            ("far_even", "attack:punch"),
            ("far_even", "attack:punch"),
        ])];
        let m = mine_logs(&logs, &BandClassifier::default(), 1, 1).unwrap();
        let t = &m.fsm.states[0].tactics;
        assert_eq!(t.len(), 1);
        // Tie between punch and move_right goes to the lexicographically smaller n-gram.
        assert_eq!(t[0].actions, vec!["attack:punch"]);
    }

    #[test]
    fn errors() {
        let c = BandClassifier::default();
        assert!(matches!(mine_logs(&[], &c, 2, 2), Err(MineError::EmptyLog)));
        assert!(matches!(mine_logs(&[run(&[("far_even", "idle")])], &c, 0, 2), Err(MineError::InvalidParams)));
    }

    #[test]
    fn skeleton_is_a_valid_machine() {
        let logs = vec![run(&[
            ("far_even", "move_right"),
            ("mid_even", "attack:punch"),
            ("close_even", "grab"),
            ("close_ahead", "block"),
        ])];
        let m = mine_logs(&logs, &BandClassifier::default(), 2, 2).unwrap();
        m.fsm.validate().unwrap();
        m.fsm.bind(&duel_core::engine::CharacterSpec::default_fighter()).unwrap();
        assert_eq!(m.fsm.transitions.len(), 4 * 3);
        let adjacent = m.fsm.transitions.iter().filter(|t| t.priority == 1).count();
        // far-mid, mid-close, close_even-close_ahead, each both ways.
        assert_eq!(adjacent, 6);
    }
}
