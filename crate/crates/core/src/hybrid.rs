//! Combinations of the FSM, BT and MCTS models.
//!
//! * Pooled FSM: the machine picks the state, search picks a move from that
//!   state's pool ([`fsm_mcts_act`]).
//! * Transition search: search picks which transition to take, each one a
//!   macro action that plays the target state's tactic for `k` ticks
//!   ([`mcts_transition_act`]).
//! * MCTS leaf: a behavior-tree leaf that searches over its own pool and then
//!   plays the chosen move out ([`bt_mcts_leaf_tick`]).

use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bt::Status;
use crate::engine::{Action, CharacterSpec, Engine, GameState, Observation, Side};
use crate::fsm::{BoundFsm, FsmAgentState, FsmError};
use crate::mcts::{
    evaluate, pair, plan_in_pool, terminal_payoff, ucb1, MctsConfig, MctsError, OpponentSampler, SearchStats,
};

/// Default execution horizon of a macro action, in ticks.
pub const DEFAULT_MACRO_TICKS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Succeeds when at least one hit connected.
    #[default]
    Offensive,
    /// Succeeds when no damage was taken.
    Defensive,
}

/// MCTS leaf as written in a tree file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MctsLeafSpec {
    pub pool: Vec<String>,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default)]
    pub config: MctsConfig,
}

impl MctsLeafSpec {
    pub fn bind(&self, ch: &CharacterSpec) -> Result<MctsLeaf, FsmError> {
        if self.pool.is_empty() {
            return Err(FsmError::EmptyPool("mcts leaf".into()));
        }
        let pool = self
            .pool
            .iter()
            .map(|l| {
                Action::parse(l, ch).ok_or_else(|| FsmError::UnknownAction {
                    tactic: "mcts leaf".into(),
                    action: l.clone(),
                })
            })
            .collect::<Result<_, _>>()?;
        self.config
            .validate()
            .map_err(|e| FsmError::Malformed(e.to_string()))?;
        Ok(MctsLeaf {
            pool,
            objective: self.objective,
            config: self.config.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctsLeaf {
    pub pool: Vec<Action>,
    pub objective: Objective,
    pub config: MctsConfig,
}

/// What an MCTS leaf remembers between ticks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MctsLeafProgress {
    pub chosen: Option<Action>,
    pub landed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafTick {
    pub status: Status,
    pub action: Option<Action>,
    pub stats: Option<SearchStats>,
}

impl LeafTick {
    fn of(status: Status) -> Self {
        Self {
            status,
            action: None,
            stats: None,
        }
    }
}

/// One tick of an MCTS leaf.
///
/// On entry, once the fighter can act, it plans over `pool ∩ legal` and
/// emits the choice (Running). It then stays Running until the fighter can
/// act again, failing early if one of its hits was blocked or it got hit.
/// On completion the objective decides Success or Failure.
pub fn bt_mcts_leaf_tick(
    leaf: &MctsLeaf,
    progress: &mut MctsLeafProgress,
    obs: &Observation,
    game: Option<(&Engine, &GameState, Side)>,
    rng: &mut ChaCha8Rng,
) -> LeafTick {
    let Some(_) = progress.chosen else {
        let Some((engine, state, side)) = game else {
            return LeafTick::of(Status::Failure);
        };
        if !obs.can_act {
            return LeafTick::of(Status::Running);
        }
        if !leaf.pool.iter().any(|a| engine.is_legal(state, side, *a)) {
            return LeafTick::of(Status::Failure);
        }
        return match plan_in_pool(engine, state, side, &leaf.config, Some(&leaf.pool), rng) {
            Ok((a, stats)) => {
                *progress = MctsLeafProgress {
                    chosen: Some(a),
                    landed: false,
                };
                LeafTick {
                    status: Status::Running,
                    action: Some(a),
                    stats: Some(stats),
                }
            }
            Err(_) => LeafTick::of(Status::Failure),
        };
    };
    progress.landed |= obs.landed_hit;
    if obs.hit_blocked || obs.took_hit || obs.in_hitstun {
        return LeafTick::of(Status::Failure);
    }
    if !obs.can_act {
        return LeafTick::of(Status::Running);
    }
    let met = match leaf.objective {
        Objective::Offensive => progress.landed,
        Objective::Defensive => true,
    };
    LeafTick::of(if met { Status::Success } else { Status::Failure })
}

/// An FSM whose states double as MCTS action pools: a state's pool is every
/// action appearing in its tactics.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledFsm {
    pub fsm: BoundFsm,
    pub pools: Vec<Vec<Action>>,
}

impl PooledFsm {
    pub fn new(fsm: BoundFsm) -> Self {
        let pools = (0..fsm.def.states.len()).map(|i| fsm.pool_actions(i)).collect();
        Self { fsm, pools }
    }
}

/// One hybrid decision, with what the search saw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridDecision {
    pub action: Action,
    pub stats: Option<SearchStats>,
    /// The state's pool had no legal action; Idle was played instead.
    pub empty_pool: bool,
}

/// The FSM picks the state from the observation, then search picks the move
/// among the state's pool that is legal right now.
pub fn fsm_mcts_act(
    def: &PooledFsm,
    st: &mut FsmAgentState,
    engine: &Engine,
    state: &GameState,
    side: Side,
    cfg: &MctsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<HybridDecision, MctsError> {
    let obs = engine.observe(state, side);
    st.update(&def.fsm, &obs);
    if !obs.can_act {
        return Ok(HybridDecision {
            action: Action::Idle,
            stats: None,
            empty_pool: false,
        });
    }
    let pool = &def.pools[st.current.expect("update initialises")];
    if !pool.iter().any(|a| engine.is_legal(state, side, *a)) {
        return Ok(HybridDecision {
            action: Action::Idle,
            stats: None,
            empty_pool: true,
        });
    }
    let (action, stats) = plan_in_pool(engine, state, side, cfg, Some(pool), rng)?;
    Ok(HybridDecision {
        action,
        stats: Some(stats),
        empty_pool: false,
    })
}

/// A search arm of the transition search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MacroAction {
    /// Remain in the current state and keep playing its tactic.
    Stay,
    /// Take the transition with this index in the definition.
    Take(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroNode {
    pub edge: Option<MacroAction>,
    /// FSM state the planner is in after the edge.
    pub fsm_state: usize,
    pub wins: f64,
    pub visits: u32,
    pub children: Vec<usize>,
    /// Filled on first visit from the state that reached the node.
    pub untried: Option<Vec<MacroAction>>,
}

#[derive(Debug, Clone)]
pub struct MacroTree {
    pub nodes: Vec<MacroNode>,
    pub iterations: u32,
    pub elapsed: Duration,
}

impl MacroTree {
    pub fn root_branching(&self) -> usize {
        self.nodes[0].children.len() + self.nodes[0].untried.as_ref().map_or(0, Vec::len)
    }

    /// Most visited root arm; ties go to Stay, then the lowest transition index.
    pub fn best(&self) -> Option<MacroAction> {
        let key = |m: MacroAction| match m {
            MacroAction::Stay => 0,
            MacroAction::Take(i) => i + 1,
        };
        self.nodes[0]
            .children
            .iter()
            .map(|&c| &self.nodes[c])
            .max_by(|a, b| {
                a.visits
                    .cmp(&b.visits)
                    .then_with(|| key(b.edge.unwrap()).cmp(&key(a.edge.unwrap())))
            })
            .and_then(|n| n.edge)
    }
}

/// Arms available in FSM state `fsm_state`: Stay, plus every transition out of
/// it whose condition holds for `side` in `state`.
pub fn enabled_macros(fsm: &BoundFsm, fsm_state: usize, engine: &Engine, state: &GameState, side: Side) -> Vec<MacroAction> {
    let obs = engine.observe(state, side);
    let from = &fsm.def.states[fsm_state].id;
    let mut out = vec![MacroAction::Stay];
    out.extend(
        fsm.def
            .transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| &t.from == from && t.condition.eval(&obs))
            .map(|(i, _)| MacroAction::Take(i)),
    );
    out
}

struct MacroSearch<'a> {
    fsm: &'a BoundFsm,
    engine: &'a Engine,
    side: Side,
    cfg: &'a MctsConfig,
    k: u32,
    opponent: OpponentSampler,
    /// Tactic and cursor the agent is in at the root, continued by a root Stay.
    root_tactic: (usize, usize),
}

impl MacroSearch<'_> {
    fn target(&self, from: usize, m: MacroAction) -> usize {
        match m {
            MacroAction::Stay => from,
            MacroAction::Take(t) => self
                .fsm
                .def
                .state_index(&self.fsm.def.transitions[t].to)
                .expect("validated"),
        }
    }

    /// Plays `ticks` ticks of a tactic; stops early at the end of the round.
    fn play(
        &mut self,
        state: &mut GameState,
        fsm_state: usize,
        tactic: usize,
        mut cursor: usize,
        ticks: u32,
        rng: &mut ChaCha8Rng,
    ) -> Result<u32, MctsError> {
        let actions = &self.fsm.pools[fsm_state][tactic].actions;
        for played in 0..ticks {
            if self.engine.round_result(state).is_some() {
                return Ok(played);
            }
            let mine = if state.fighter(self.side).can_act() {
                let a = actions[cursor % actions.len()].oriented(state.fighter(self.side).facing);
                cursor += 1;
                if self.engine.is_legal(state, self.side, a) {
                    a
                } else {
                    Action::Idle
                }
            } else {
                Action::Idle
            };
            let theirs = self.opponent.sample(self.engine, state, self.side, mine, rng);
            let (l, r) = pair(self.side, mine, theirs);
            *state = self.engine.step_unchecked(state, l, r);
        }
        Ok(ticks)
    }

    fn run_macro(
        &mut self,
        state: &mut GameState,
        from: usize,
        m: MacroAction,
        at_root: bool,
        ticks: u32,
        rng: &mut ChaCha8Rng,
    ) -> Result<(usize, u32), MctsError> {
        let to = self.target(from, m);
        let (tactic, cursor) = if at_root && m == MacroAction::Stay { self.root_tactic } else { (0, 0) };
        let played = self.play(state, to, tactic, cursor, ticks, rng)?;
        Ok((to, played))
    }

    fn iterate(&mut self, nodes: &mut Vec<MacroNode>, root: &GameState, rng: &mut ChaCha8Rng) -> Result<(), MctsError> {
        let mut state = *root;
        let mut path = vec![0usize];
        let mut cur = 0usize;
        let payoff = loop {
            if let Some(r) = self.engine.round_result(&state) {
                break terminal_payoff(r, self.side);
            }
            if nodes[cur].untried.is_none() {
                nodes[cur].untried = Some(enabled_macros(self.fsm, nodes[cur].fsm_state, self.engine, &state, self.side));
            }
            let from = nodes[cur].fsm_state;
            let untried = nodes[cur].untried.as_mut().expect("just filled");
            if !untried.is_empty() {
                let m = untried.swap_remove(rng.gen_range(0..untried.len()));
                let (to, _) = self.run_macro(&mut state, from, m, cur == 0, self.k, rng)?;
                let child = nodes.len();
                nodes.push(MacroNode {
                    edge: Some(m),
                    fsm_state: to,
                    wins: 0.0,
                    visits: 0,
                    children: vec![],
                    untried: None,
                });
                nodes[cur].children.push(child);
                path.push(child);
                break self.rollout(state, to, rng)?;
            }
            let parent_visits = nodes[cur].visits;
            let next = nodes[cur]
                .children
                .iter()
                .copied()
                .fold((None, f64::NEG_INFINITY), |(b, bs), c| {
                    let s = ucb1(nodes[c].wins, nodes[c].visits, parent_visits, self.cfg.exploration_c);
                    if s > bs {
                        (Some(c), s)
                    } else {
                        (b, bs)
                    }
                })
                .0
                .ok_or(MctsError::NoLegalActions)?;
            let m = nodes[next].edge.expect("children have edges");
            self.run_macro(&mut state, from, m, cur == 0, self.k, rng)?;
            path.push(next);
            cur = next;
        };
        for &i in &path {
            nodes[i].visits += 1;
            nodes[i].wins += payoff;
        }
        Ok(())
    }

    fn rollout(&mut self, mut state: GameState, mut fsm_state: usize, rng: &mut ChaCha8Rng) -> Result<f64, MctsError> {
        let mut left = self.cfg.rollout_depth;
        while left > 0 {
            if let Some(r) = self.engine.round_result(&state) {
                return Ok(terminal_payoff(r, self.side));
            }
            let arms = enabled_macros(self.fsm, fsm_state, self.engine, &state, self.side);
            let m = arms[rng.gen_range(0..arms.len())];
            let (to, played) = self.run_macro(&mut state, fsm_state, m, false, self.k.min(left), rng)?;
            fsm_state = to;
            left -= played.max(1).min(left);
        }
        Ok(match self.engine.round_result(&state) {
            Some(r) => terminal_payoff(r, self.side),
            None => evaluate(self.engine, &state, self.side, &self.cfg.eval_weights),
        })
    }
}

/// Open-loop search over macro actions from FSM state `st.current`.
#[allow(clippy::too_many_arguments)]
pub fn transition_search(
    fsm: &BoundFsm,
    st: &FsmAgentState,
    engine: &Engine,
    state: &GameState,
    side: Side,
    cfg: &MctsConfig,
    k: u32,
    rng: &mut ChaCha8Rng,
) -> Result<MacroTree, MctsError> {
    cfg.validate()?;
    if k == 0 {
        return Err(MctsError::InvalidConfig("macro horizon must be >= 1".into()));
    }
    if engine.round_result(state).is_some() {
        return Err(MctsError::TerminalState);
    }
    let start = Instant::now();
    let current = st
        .current
        .unwrap_or_else(|| fsm.def.state_index(&fsm.def.initial).expect("validated"));
    let mut s = MacroSearch {
        fsm,
        engine,
        side,
        cfg,
        k,
        opponent: OpponentSampler::new(engine, side, &cfg.opponent_model, state.tick),
        root_tactic: if st.current.is_some() { (st.tactic, st.cursor) } else { (0, 0) },
    };
    let mut nodes = vec![MacroNode {
        edge: None,
        fsm_state: current,
        wins: 0.0,
        visits: 0,
        children: vec![],
        untried: Some(enabled_macros(fsm, current, engine, state, side)),
    }];
    let deadline = cfg.time_budget_ms.map(|ms| start + Duration::from_millis(ms));
    let mut iterations = 0;
    while (cfg.iteration_budget == 0 || iterations < cfg.iteration_budget)
        && !deadline.is_some_and(|d| Instant::now() >= d)
    {
        s.iterate(&mut nodes, state, rng)?;
        iterations += 1;
    }
    Ok(MacroTree {
        nodes,
        iterations,
        elapsed: start.elapsed(),
    })
}

/// Decision of the transition-search agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroDecision {
    pub action: Action,
    pub chosen: MacroAction,
    pub stats: Option<SearchStats>,
}

/// Searches over the enabled transitions, commits the agent to the winning
/// arm and returns that arm's first primitive action.
#[allow(clippy::too_many_arguments)]
pub fn mcts_transition_act(
    fsm: &BoundFsm,
    st: &mut FsmAgentState,
    engine: &Engine,
    state: &GameState,
    side: Side,
    cfg: &MctsConfig,
    k: u32,
    rng: &mut ChaCha8Rng,
) -> Result<MacroDecision, MctsError> {
    if st.current.is_none() {
        let init = fsm.def.state_index(&fsm.def.initial).expect("validated");
        st.current = Some(init);
        st.tactic = 0;
        st.cursor = 0;
    }
    if !state.fighter(side).can_act() {
        return Ok(MacroDecision {
            action: Action::Idle,
            chosen: MacroAction::Stay,
            stats: None,
        });
    }
    let cur = st.current.expect("set above");
    let arms = enabled_macros(fsm, cur, engine, state, side);
    let (chosen, stats) = if arms.len() == 1 {
        (
            arms[0],
            Some(SearchStats {
                root_branching: 1,
                ..Default::default()
            }),
        )
    } else {
        let tree = transition_search(fsm, st, engine, state, side, cfg, k, rng)?;
        let stats = SearchStats {
            iterations: tree.iterations,
            root_branching: tree.root_branching(),
            nodes: tree.nodes.len(),
            elapsed_us: tree.elapsed.as_micros() as u64,
        };
        (tree.best().ok_or(MctsError::NoLegalActions)?, Some(stats))
    };
    if let MacroAction::Take(t) = chosen {
        let to = fsm.def.state_index(&fsm.def.transitions[t].to).expect("validated");
        st.current = Some(to);
        st.tactic = 0;
        st.cursor = 0;
    }
    let mut action = st.next_action(fsm).oriented(state.fighter(side).facing);
    if !engine.is_legal(state, side, action) {
        action = Action::Idle;
    }
    Ok(MacroDecision { action, chosen, stats })
}
