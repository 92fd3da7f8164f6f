//! Plays matches tick by tick and records them.

use std::time::Instant;

use duel_core::agents::{Agent, AgentView};
use duel_core::engine::{Action, Engine, EngineError, GameState, RoundResult, Side, Winner};
use duel_core::reading::opponent_intent;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, MatchConfig};
use crate::replay::{action_labels, MatchResult, Replay, ReplayHeader, TickRecord};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("match did not finish within {0} ticks")]
    Runaway(u64),
}

/// What happened on one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TickOutcome {
    pub round_end: Option<RoundResult>,
    pub match_end: Option<Winner>,
}

/// Applies the match format around the engine: rounds, scores, the winner.
#[derive(Debug, Clone)]
pub struct Referee<'e> {
    engine: &'e Engine,
    state: GameState,
    rounds: Vec<RoundResult>,
    winner: Option<Winner>,
    ticks: u64,
}

impl<'e> Referee<'e> {
    pub fn new(engine: &'e Engine, seed: u64, training: bool) -> Self {
        let state = if training {
            engine.training_state(seed)
        } else {
            engine.initial_state(seed)
        };
        Self {
            engine,
            state,
            rounds: Vec::new(),
            winner: None,
            ticks: 0,
        }
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn engine(&self) -> &'e Engine {
        self.engine
    }

    pub fn is_over(&self) -> bool {
        self.winner.is_some()
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// `action` if `side` may play it now, Idle otherwise.
    pub fn sanitize(&self, side: Side, action: Action) -> Action {
        if self.engine.is_legal(&self.state, side, action) {
            action
        } else {
            Action::Idle
        }
    }

    pub fn step(&mut self, left: Action, right: Action) -> Result<TickOutcome, EngineError> {
        if self.is_over() {
            return Err(EngineError::RoundOver);
        }
        self.state = self.engine.step(&self.state, left, right)?;
        self.ticks += 1;
        let mut out = TickOutcome::default();
        if self.engine.round_result(&self.state).is_some() {
            let (next, result) = self.engine.finish_round(&self.state)?;
            self.rounds.push(result);
            out.round_end = Some(result);
            self.winner = self.engine.match_result(&next);
            out.match_end = self.winner;
            // The final frame keeps the finished round on screen.
            self.state = if self.winner.is_some() {
                GameState {
                    round_wins: next.round_wins,
                    rounds_played: next.rounds_played,
                    ..self.state
                }
            } else {
                next
            };
        }
        Ok(out)
    }

    pub fn result(&self) -> MatchResult {
        MatchResult {
            winner: self.winner,
            round_wins: self.state.round_wins,
            rounds: self.rounds.clone(),
            ticks: self.ticks,
        }
    }
}

/// Who supplies a side's action on a tick.
pub enum Decider<'a> {
    Agent(&'a mut dyn Agent),
    /// Already chosen, e.g. a human's buffered input.
    Fixed(Action),
}

/// Per-agent decision accounting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentStats {
    /// Calls made while the fighter could act.
    pub decisions: u64,
    pub total_ns: u64,
    pub max_ns: u64,
    /// Decisions that ran a search.
    pub searches: u64,
    pub root_branching_sum: u64,
    pub iterations_sum: u64,
    /// Actions the agent proposed that were not legal and became Idle.
    pub sanitized: u64,
}

impl AgentStats {
    pub fn mean_latency_us(&self) -> f64 {
        if self.decisions == 0 {
            0.0
        } else {
            self.total_ns as f64 / self.decisions as f64 / 1e3
        }
    }

    pub fn mean_root_branching(&self) -> f64 {
        if self.searches == 0 {
            0.0
        } else {
            self.root_branching_sum as f64 / self.searches as f64
        }
    }

    pub fn merge(&mut self, o: &AgentStats) {
        self.decisions += o.decisions;
        self.total_ns += o.total_ns;
        self.max_ns = self.max_ns.max(o.max_ns);
        self.searches += o.searches;
        self.root_branching_sum += o.root_branching_sum;
        self.iterations_sum += o.iterations_sum;
        self.sanitized += o.sanitized;
    }
}

/// Both sides' legal actions for this tick.
///
/// Agents that read inputs decide last and are shown the other side's intent
/// for the same tick. If both sides read inputs neither gets a read.
pub fn decide(
    referee: &Referee<'_>,
    mut deciders: [Decider<'_>; 2],
    stats: &mut [AgentStats; 2],
    annotations: &mut [Option<String>; 2],
) -> [Action; 2] {
    let engine = referee.engine();
    let state = referee.state();
    let obs = [engine.observe(state, Side::Left), engine.observe(state, Side::Right)];
    let reads = |d: &Decider<'_>| matches!(d, Decider::Agent(a) if a.reads_inputs());
    let both_read = reads(&deciders[0]) && reads(&deciders[1]);
    let mut order = [Side::Left, Side::Right];
    if reads(&deciders[0]) && !both_read {
        order = [Side::Right, Side::Left];
    }
    let mut chosen: [Option<Action>; 2] = [None, None];
    for side in order {
        let i = side.index();
        let opp = side.opponent();
        let action = match &mut deciders[i] {
            Decider::Fixed(a) => *a,
            Decider::Agent(agent) => {
                let mut view = AgentView::new(engine, state, side, &obs[i]);
                if agent.reads_inputs() && !both_read {
                    let theirs = chosen[opp.index()].expect("non-reader decided first");
                    view.opponent_intent = Some(opponent_intent(engine, state, opp, theirs));
                }
                let start = Instant::now();
                let a = agent.act(&view);
                let ns = start.elapsed().as_nanos() as u64;
                let s = &mut stats[i];
                if obs[i].can_act {
                    s.decisions += 1;
                    s.total_ns += ns;
                    s.max_ns = s.max_ns.max(ns);
                }
                if let Some(search) = agent.last_search() {
                    if search.iterations > 0 {
                        s.searches += 1;
                        s.root_branching_sum += search.root_branching as u64;
                        s.iterations_sum += search.iterations as u64;
                    }
                }
                annotations[i] = agent.annotation();
                a
            }
        };
        let applied = referee.sanitize(side, action);
        if applied != action {
            stats[i].sanitized += 1;
        }
        chosen[i] = Some(applied);
    }
    [chosen[0].expect("decided"), chosen[1].expect("decided")]
}

/// A played match with its replay and the decision accounting.
#[derive(Debug, Clone)]
pub struct MatchReport {
    pub replay: Replay,
    pub stats: [AgentStats; 2],
}

impl MatchReport {
    pub fn winner(&self) -> Option<Winner> {
        self.replay.result.winner
    }
}

/// Upper bound on match length; a match cannot legitimately exceed it.
pub fn tick_limit(engine: &Engine) -> u64 {
    let r = engine.rules();
    (r.round_length as u64 + 1) * r.max_rounds as u64
}

/// Plays a whole match between two non-human agents.
pub fn run_match(cfg: &MatchConfig) -> Result<MatchReport, HarnessError> {
    cfg.validate()?;
    if cfg.training {
        return Err(ConfigError::Invalid("training matches need a live session".into()).into());
    }
    let engine = cfg.engine()?;
    let [left, right] = cfg.build_agents(&engine)?;
    let (Some(mut left), Some(mut right)) = (left, right) else {
        return Err(ConfigError::Invalid("human sides need a live session; use serve".into()).into());
    };
    let mut referee = Referee::new(&engine, cfg.seed, false);
    let mut stats = [AgentStats::default(); 2];
    let mut ticks = Vec::new();
    let limit = tick_limit(&engine);
    while !referee.is_over() {
        if referee.ticks() >= limit {
            return Err(HarnessError::Runaway(limit));
        }
        let mut annotations = [None, None];
        let actions = decide(
            &referee,
            [Decider::Agent(left.as_mut()), Decider::Agent(right.as_mut())],
            &mut stats,
            &mut annotations,
        );
        ticks.push(TickRecord {
            tick: referee.ticks(),
            actions: action_labels(&engine, actions),
            annotations,
        });
        referee.step(actions[0], actions[1])?;
    }
    let replay = Replay::seal(ReplayHeader::new(cfg.clone(), &engine), ticks, referee.result());
    Ok(MatchReport { replay, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AgentSpec;

    #[test]
    fn referee_scores_rounds_until_two_wins() {
        let e = Engine::standard();
        let mut r = Referee::new(&e, 0, false);
        let mut ends = 0;
        while !r.is_over() {
            // Left walks in and jabs; right stands still.
            let s = r.state();
            let a = if s.distance() > 8 { Action::MoveRight } else { Action::parse("attack:punch", e.character(Side::Left)).unwrap() };
            let a = r.sanitize(Side::Left, a);
            let out = r.step(a, Action::Idle).unwrap();
            ends += out.round_end.is_some() as u32;
        }
        let res = r.result();
        assert_eq!(res.winner, Some(Winner::Left));
        assert_eq!(res.round_wins, [2, 0]);
        assert_eq!(ends, 2);
        assert!(r.step(Action::Idle, Action::Idle).is_err());
    }

    #[test]
    fn random_match_is_reproducible() {
        let cfg = MatchConfig::new(AgentSpec::Random, AgentSpec::Random, 42);
        let a = run_match(&cfg).unwrap();
        let b = run_match(&cfg).unwrap();
        assert_eq!(a.replay.digest, b.replay.digest);
        let res = &a.replay.result;
        let w = a.winner().unwrap();
        // Either someone reached two wins or the round cap decided it.
        if let Some(side) = w.side() {
            let decisive = res.round_wins[side.index()] == 2;
            assert!(decisive || res.rounds.len() as u8 == cfg.rules().max_rounds, "{res:?}");
        }
    }

    #[test]
    fn human_configs_are_rejected() {
        let cfg = MatchConfig::new(AgentSpec::Human, AgentSpec::Random, 0);
        assert!(matches!(run_match(&cfg), Err(HarnessError::Config(_))));
    }
}
