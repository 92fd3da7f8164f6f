//! Budgeted Monte-Carlo tree search over engine states.
//!
//! The engine is simultaneous-move; the tree serializes each tick into a
//! planner level followed by an opponent level. Planner levels select with
//! UCB1. Opponent levels are chance nodes sampled from an [`OpponentModel`];
//! the sampled pair is then handed to [`Engine::step`].
//!
//! Each node is credited from the point of view of whoever chose the action
//! leading into it: nodes reached by a planner action accumulate the payoff,
//! nodes reached by an opponent action (and the root) accumulate `1 - payoff`.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Action, Engine, EngineError, GameState, RoundResult, Side};
use crate::reading::{input_read_policy, opponent_intent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MctsError {
    #[error("the round is already decided")]
    TerminalState,
    #[error("no legal action for the planning side")]
    NoLegalActions,
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// How the opponent is assumed to play during search.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpponentModel {
    #[default]
    UniformRandom,
    AlwaysBlock,
    InputReading { difficulty: f64 },
    /// Cycles through the given action labels, one per tick from the search root.
    Scripted { sequence: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalWeights {
    pub health: f64,
    pub position: f64,
    pub time: f64,
}

impl Default for EvalWeights {
    fn default() -> Self {
        Self {
            health: 0.8,
            position: 0.1,
            time: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MctsConfig {
    /// Iterations per decision; 0 means "until the time budget runs out".
    pub iteration_budget: u32,
    pub time_budget_ms: Option<u64>,
    pub exploration_c: f64,
    pub rollout_depth: u32,
    pub opponent_model: OpponentModel,
    pub eval_weights: EvalWeights,
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self {
            iteration_budget: 300,
            time_budget_ms: None,
            exploration_c: std::f64::consts::SQRT_2,
            rollout_depth: 60,
            opponent_model: OpponentModel::UniformRandom,
            eval_weights: EvalWeights::default(),
        }
    }
}

impl MctsConfig {
    pub fn with_budget(iterations: u32) -> Self {
        Self {
            iteration_budget: iterations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MctsError> {
        let fail = |m: &str| Err(MctsError::InvalidConfig(m.to_string()));
        if self.iteration_budget == 0 && self.time_budget_ms.is_none() {
            return fail("need iteration_budget >= 1 or a time budget");
        }
        if !(self.exploration_c >= 0.0) {
            return fail("exploration_c must be >= 0");
        }
        if self.rollout_depth == 0 {
            return fail("rollout_depth must be >= 1");
        }
        let w = self.eval_weights;
        if [w.health, w.position, w.time].iter().any(|x| !(*x >= 0.0)) {
            return fail("eval weights must be non-negative");
        }
        if (w.health + w.position + w.time - 1.0).abs() > 1e-6 {
            return fail("eval weights must sum to 1");
        }
        if let OpponentModel::InputReading { difficulty } = self.opponent_model {
            if !(0.0..=1.0).contains(&difficulty) {
                return fail("difficulty must be within [0, 1]");
            }
        }
        Ok(())
    }
}

/// UCB1 score; unvisited children score +infinity.
pub fn ucb1(child_wins: f64, child_visits: u32, parent_visits: u32, c: f64) -> f64 {
    if child_visits == 0 {
        return f64::INFINITY;
    }
    let n = child_visits as f64;
    child_wins / n + c * ((parent_visits.max(1) as f64).ln() / n).sqrt()
}

/// 1 for a round won by `side`, 0 for a loss, 0.5 for a draw.
pub fn terminal_payoff(result: RoundResult, side: Side) -> f64 {
    match result.winner.side() {
        Some(s) if s == side => 1.0,
        Some(_) => 0.0,
        None => 0.5,
    }
}

/// Heuristic value of a non-terminal state for `side`, in [0, 1].
///
/// Each term is 0.5 at parity: health lead over twice the max health, centre
/// control over the stage length, and the health term scaled by how much of
/// the round has elapsed.
pub fn evaluate(engine: &Engine, state: &GameState, side: Side, w: &EvalWeights) -> f64 {
    let me = state.fighter(side);
    let opp = state.fighter(side.opponent());
    let h_me = me.health as f64 / engine.character(side).max_health as f64;
    let h_opp = opp.health as f64 / engine.character(side.opponent()).max_health as f64;
    let lead = (h_me - h_opp) / 2.0;
    let health = 0.5 + lead;
    let rules = engine.rules();
    let centre = rules.stage_length as f64 / 2.0;
    let position =
        0.5 + ((opp.position as f64 - centre).abs() - (me.position as f64 - centre).abs()) / (2.0 * centre);
    let elapsed = 1.0 - state.timer as f64 / rules.round_length as f64;
    let time = 0.5 + lead * elapsed.clamp(0.0, 1.0);
    (w.health * health + w.position * position + w.time * time).clamp(0.0, 1.0)
}

/// Opponent model bound to a search.
pub(crate) struct OpponentSampler {
    model: OpponentModel,
    scripted: Vec<Action>,
    root_tick: u32,
    buf: Vec<Action>,
}

impl OpponentSampler {
    pub(crate) fn new(engine: &Engine, side: Side, model: &OpponentModel, root_tick: u32) -> Self {
        let scripted = match model {
            OpponentModel::Scripted { sequence } => sequence
                .iter()
                .map(|l| Action::parse(l, engine.character(side.opponent())).unwrap_or(Action::Idle))
                .collect(),
            _ => vec![],
        };
        Self {
            model: model.clone(),
            scripted,
            root_tick,
            buf: Vec::new(),
        }
    }

    /// Opponent's action at `state`, given the planner's (`side`) action this tick.
    pub(crate) fn sample<R: Rng + ?Sized>(
        &mut self,
        engine: &Engine,
        state: &GameState,
        side: Side,
        planner_action: Action,
        rng: &mut R,
    ) -> Action {
        let opp = side.opponent();
        if !state.fighter(opp).can_act() {
            return Action::Idle;
        }
        match &self.model {
            OpponentModel::UniformRandom => {
                engine.legal_actions_into(state, opp, &mut self.buf);
                self.buf[rng.gen_range(0..self.buf.len())]
            }
            OpponentModel::AlwaysBlock => Action::Block,
            OpponentModel::InputReading { difficulty } => {
                let intent = opponent_intent(engine, state, side, planner_action);
                input_read_policy(intent, *difficulty, engine, state, opp, rng)
            }
            OpponentModel::Scripted { .. } => {
                if self.scripted.is_empty() {
                    return Action::Idle;
                }
                let i = state.tick.wrapping_sub(self.root_tick) as usize % self.scripted.len();
                let a = self.scripted[i];
                if engine.is_legal(state, opp, a) {
                    a
                } else {
                    Action::Idle
                }
            }
        }
    }
}

/// Planner actions at `state`: legal ones, narrowed to `pool` when that leaves any.
pub(crate) fn planner_actions(engine: &Engine, state: &GameState, side: Side, pool: Option<&[Action]>, out: &mut Vec<Action>) {
    engine.legal_actions_into(state, side, out);
    if let Some(pool) = pool {
        if out.iter().any(|a| pool.contains(a)) {
            out.retain(|a| pool.contains(a));
        }
    }
}

pub(crate) fn pair(side: Side, mine: Action, theirs: Action) -> (Action, Action) {
    match side {
        Side::Left => (mine, theirs),
        Side::Right => (theirs, mine),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// The planner chooses next; holds the state it chooses in.
    Planner(Box<GameState>),
    /// The opponent responds to the planner action on the edge above.
    Opponent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctsNode {
    pub action_from_parent: Option<Action>,
    pub parent: Option<usize>,
    pub wins: f64,
    pub visits: u32,
    pub children: Vec<usize>,
    pub untried: Vec<Action>,
    pub kind: NodeKind,
    /// Whether the edge into this node was a planner choice.
    pub by_planner: bool,
}

/// A finished search.
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<MctsNode>,
    pub iterations: u32,
    pub elapsed: Duration,
}

impl SearchTree {
    pub fn root(&self) -> &MctsNode {
        &self.nodes[0]
    }

    pub fn root_children(&self) -> impl Iterator<Item = &MctsNode> {
        self.nodes[0].children.iter().map(|&i| &self.nodes[i])
    }

    /// Most visited root child; ties go to the smallest action label.
    pub fn best_action(&self, engine: &Engine, side: Side) -> Option<Action> {
        let ch = engine.character(side);
        self.root_children()
            .max_by(|a, b| {
                a.visits.cmp(&b.visits).then_with(|| {
                    let la = a.action_from_parent.map(|x| x.label(ch));
                    let lb = b.action_from_parent.map(|x| x.label(ch));
                    lb.cmp(&la)
                })
            })
            .and_then(|n| n.action_from_parent)
    }
}

/// Adds one visit and the side-appropriate payoff to every node on `path`.
pub fn backpropagate(nodes: &mut [MctsNode], path: &[usize], payoff: f64) {
    for &i in path {
        let n = &mut nodes[i];
        n.visits += 1;
        n.wins += if n.by_planner { payoff } else { 1.0 - payoff };
    }
}

/// Search statistics of one decision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub iterations: u32,
    /// Actions considered at the root.
    pub root_branching: usize,
    pub nodes: usize,
    pub elapsed_us: u64,
}

impl SearchStats {
    pub fn of(tree: &SearchTree) -> Self {
        Self {
            iterations: tree.iterations,
            root_branching: tree.root().children.len() + tree.root().untried.len(),
            nodes: tree.nodes.len(),
            elapsed_us: tree.elapsed.as_micros() as u64,
        }
    }
}

struct Searcher<'a> {
    engine: &'a Engine,
    side: Side,
    cfg: &'a MctsConfig,
    pool: Option<&'a [Action]>,
    opponent: OpponentSampler,
    buf: Vec<Action>,
}

impl Searcher<'_> {
    fn planner_node(&mut self, state: GameState, parent: usize, action: Action) -> MctsNode {
        let mut untried = Vec::new();
        if self.engine.round_result(&state).is_none() {
            planner_actions(self.engine, &state, self.side, self.pool, &mut untried);
        }
        MctsNode {
            action_from_parent: Some(action),
            parent: Some(parent),
            wins: 0.0,
            visits: 0,
            children: vec![],
            untried,
            kind: NodeKind::Planner(Box::new(state)),
            by_planner: false,
        }
    }

    fn iterate<R: Rng + ?Sized>(&mut self, nodes: &mut Vec<MctsNode>, rng: &mut R) -> Result<(), MctsError> {
        let mut path = vec![0usize];
        let mut cur = 0usize;
        let payoff = loop {
            match &nodes[cur].kind {
                NodeKind::Planner(state) => {
                    if let Some(r) = self.engine.round_result(state) {
                        break terminal_payoff(r, self.side);
                    }
                    let next = if !nodes[cur].untried.is_empty() {
                        let node = &mut nodes[cur];
                        let a = node.untried.swap_remove(rng.gen_range(0..node.untried.len()));
                        let child = nodes.len();
                        nodes[cur].children.push(child);
                        nodes.push(MctsNode {
                            action_from_parent: Some(a),
                            parent: Some(cur),
                            wins: 0.0,
                            visits: 0,
                            children: vec![],
                            untried: vec![],
                            kind: NodeKind::Opponent,
                            by_planner: true,
                        });
                        child
                    } else {
                        let node = &nodes[cur];
                        let parent_visits = node.visits;
                        let c = self.cfg.exploration_c;
                        let mut best = None;
                        let mut best_score = f64::NEG_INFINITY;
                        for &ch in &node.children {
                            let n = &nodes[ch];
                            let s = ucb1(n.wins, n.visits, parent_visits, c);
                            if s > best_score {
                                best_score = s;
                                best = Some(ch);
                            }
                        }
                        best.ok_or(MctsError::NoLegalActions)?
                    };
                    path.push(next);
                    cur = next;
                }
                NodeKind::Opponent => {
                    let parent = nodes[cur].parent.expect("opponent nodes have a parent");
                    let NodeKind::Planner(state) = &nodes[parent].kind else {
                        unreachable!("levels alternate")
                    };
                    let state = **state;
                    let mine = nodes[cur].action_from_parent.expect("edge action");
                    let theirs = self.opponent.sample(self.engine, &state, self.side, mine, rng);
                    let existing = nodes[cur]
                        .children
                        .iter()
                        .copied()
                        .find(|&c| nodes[c].action_from_parent == Some(theirs));
                    match existing {
                        Some(c) => {
                            path.push(c);
                            cur = c;
                        }
                        None => {
                            let (l, r) = pair(self.side, mine, theirs);
                            let next = self.engine.step_unchecked(&state, l, r);
                            let node = self.planner_node(next, cur, theirs);
                            let idx = nodes.len();
                            nodes.push(node);
                            nodes[cur].children.push(idx);
                            path.push(idx);
                            break self.rollout(next, rng)?;
                        }
                    }
                }
            }
        };
        backpropagate(nodes, &path, payoff);
        Ok(())
    }

    fn rollout<R: Rng + ?Sized>(&mut self, mut state: GameState, rng: &mut R) -> Result<f64, MctsError> {
        for _ in 0..self.cfg.rollout_depth {
            if let Some(r) = self.engine.round_result(&state) {
                return Ok(terminal_payoff(r, self.side));
            }
            planner_actions(self.engine, &state, self.side, self.pool, &mut self.buf);
            let mine = self.buf[rng.gen_range(0..self.buf.len())];
            let theirs = self.opponent.sample(self.engine, &state, self.side, mine, rng);
            let (l, r) = pair(self.side, mine, theirs);
            state = self.engine.step_unchecked(&state, l, r);
        }
        Ok(match self.engine.round_result(&state) {
            Some(r) => terminal_payoff(r, self.side),
            None => evaluate(self.engine, &state, self.side, &self.cfg.eval_weights),
        })
    }
}

/// Runs the search loop from `state` for `side`, planner actions optionally
/// narrowed to `pool`.
pub fn search<R: Rng + ?Sized>(
    engine: &Engine,
    state: &GameState,
    side: Side,
    cfg: &MctsConfig,
    pool: Option<&[Action]>,
    rng: &mut R,
) -> Result<SearchTree, MctsError> {
    cfg.validate()?;
    if engine.round_result(state).is_some() {
        return Err(MctsError::TerminalState);
    }
    let start = Instant::now();
    let mut s = Searcher {
        engine,
        side,
        cfg,
        pool,
        opponent: OpponentSampler::new(engine, side, &cfg.opponent_model, state.tick),
        buf: Vec::with_capacity(16),
    };
    let mut untried = Vec::new();
    planner_actions(engine, state, side, pool, &mut untried);
    if untried.is_empty() {
        return Err(MctsError::NoLegalActions);
    }
    let mut nodes = Vec::with_capacity(2 * cfg.iteration_budget as usize + 1);
    nodes.push(MctsNode {
        action_from_parent: None,
        parent: None,
        wins: 0.0,
        visits: 0,
        children: vec![],
        untried,
        kind: NodeKind::Planner(Box::new(*state)),
        by_planner: false,
    });
    let deadline = cfg.time_budget_ms.map(|ms| start + Duration::from_millis(ms));
    let mut iterations = 0u32;
    loop {
        if cfg.iteration_budget > 0 && iterations >= cfg.iteration_budget {
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        s.iterate(&mut nodes, rng)?;
        iterations += 1;
    }
    Ok(SearchTree {
        nodes,
        iterations,
        elapsed: start.elapsed(),
    })
}

/// Chooses an action for `side`. A single available action is returned without searching.
pub fn plan_in_pool<R: Rng + ?Sized>(
    engine: &Engine,
    state: &GameState,
    side: Side,
    cfg: &MctsConfig,
    pool: Option<&[Action]>,
    rng: &mut R,
) -> Result<(Action, SearchStats), MctsError> {
    cfg.validate()?;
    if engine.round_result(state).is_some() {
        return Err(MctsError::TerminalState);
    }
    let mut actions = Vec::new();
    planner_actions(engine, state, side, pool, &mut actions);
    match actions.len() {
        0 => Err(MctsError::NoLegalActions),
        1 => Ok((
            actions[0],
            SearchStats {
                root_branching: 1,
                ..Default::default()
            },
        )),
        _ => {
            let tree = search(engine, state, side, cfg, pool, rng)?;
            let a = tree.best_action(engine, side).ok_or(MctsError::NoLegalActions)?;
            Ok((a, SearchStats::of(&tree)))
        }
    }
}

/// Plain search over every legal action.
pub fn plan<R: Rng + ?Sized>(
    engine: &Engine,
    state: &GameState,
    side: Side,
    cfg: &MctsConfig,
    rng: &mut R,
) -> Result<Action, MctsError> {
    plan_in_pool(engine, state, side, cfg, None, rng).map(|(a, _)| a)
}

/// Plays a rollout from `state` and returns its payoff for `side`.
pub fn simulate<R: Rng + ?Sized>(
    engine: &Engine,
    state: &GameState,
    side: Side,
    cfg: &MctsConfig,
    rng: &mut R,
) -> Result<f64, MctsError> {
    let mut s = Searcher {
        engine,
        side,
        cfg,
        pool: None,
        opponent: OpponentSampler::new(engine, side, &cfg.opponent_model, state.tick),
        buf: Vec::new(),
    };
    s.rollout(*state, rng)
}
