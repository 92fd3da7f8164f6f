//! A common interface over every decision model so matches can pit any two
//! against each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bt::{self, BehaviorTree, BtContext, BtRuntime, Status};
use crate::engine::{Action, Engine, GameState, IntentClass, Observation, Side};
use crate::fsm::{fsm_agent_act, BoundFsm, FsmAgentState};
use crate::hybrid::{fsm_mcts_act, mcts_transition_act, PooledFsm};
use crate::mcts::{plan_in_pool, MctsConfig, SearchStats};
use crate::reading::{input_read_policy, opponent_intent};

/// What an agent is shown on a tick.
///
/// Reactive agents look at `obs` only. Search agents also use the engine and
/// state as a forward model. `opponent_intent` is filled in only for agents
/// that declare [`Agent::reads_inputs`].
pub struct AgentView<'a> {
    pub engine: &'a Engine,
    pub state: &'a GameState,
    pub side: Side,
    pub obs: &'a Observation,
    pub opponent_intent: Option<IntentClass>,
}

impl<'a> AgentView<'a> {
    pub fn new(engine: &'a Engine, state: &'a GameState, side: Side, obs: &'a Observation) -> Self {
        Self {
            engine,
            state,
            side,
            obs,
            opponent_intent: None,
        }
    }
}

pub trait Agent: Send {
    fn act(&mut self, view: &AgentView<'_>) -> Action;

    /// Label of the internal state after the last decision, if the model has one.
    fn annotation(&self) -> Option<String> {
        None
    }

    /// True if the agent wants the opponent's same-tick intent.
    fn reads_inputs(&self) -> bool {
        false
    }

    /// Statistics of the search run during the last decision, if any.
    fn last_search(&self) -> Option<SearchStats> {
        None
    }
}

/// Never does anything. The training dummy.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdleAgent;

impl Agent for IdleAgent {
    fn act(&mut self, _: &AgentView<'_>) -> Action {
        Action::Idle
    }
}

/// Uniform over the legal actions.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
    buf: Vec<Action>,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            buf: Vec::new(),
        }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, v: &AgentView<'_>) -> Action {
        v.engine.legal_actions_into(v.state, v.side, &mut self.buf);
        self.buf[self.rng.gen_range(0..self.buf.len())]
    }
}

/// Counters the opponent's same-tick intent with probability `difficulty`.
#[derive(Debug, Clone)]
pub struct InputReadingAgent {
    pub difficulty: f64,
    rng: ChaCha8Rng,
}

impl InputReadingAgent {
    pub fn new(difficulty: f64, seed: u64) -> Self {
        Self {
            difficulty,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Agent for InputReadingAgent {
    fn act(&mut self, v: &AgentView<'_>) -> Action {
        // Without a same-tick read, only what the opponent already committed to is visible.
        let intent = v
            .opponent_intent
            .unwrap_or_else(|| opponent_intent(v.engine, v.state, v.side.opponent(), Action::Idle));
        input_read_policy(intent, self.difficulty, v.engine, v.state, v.side, &mut self.rng)
    }

    fn reads_inputs(&self) -> bool {
        true
    }
}

/// Plays an FSM's tactics. Hierarchical machines run through their flattened form.
#[derive(Debug, Clone)]
pub struct FsmAgent {
    fsm: BoundFsm,
    st: FsmAgentState,
}

impl FsmAgent {
    pub fn new(fsm: BoundFsm, seed: u64) -> Self {
        Self {
            fsm,
            st: FsmAgentState::new(seed),
        }
    }
}

impl Agent for FsmAgent {
    fn act(&mut self, v: &AgentView<'_>) -> Action {
        fsm_agent_act(&self.fsm, &mut self.st, v.obs)
    }

    fn annotation(&self) -> Option<String> {
        self.st.current_id(&self.fsm).map(str::to_string)
    }
}

/// Ticks a behavior tree once per decision.
#[derive(Debug, Clone)]
pub struct BtAgent {
    tree: BehaviorTree,
    rt: BtRuntime,
    rng: ChaCha8Rng,
}

impl BtAgent {
    pub fn new(tree: BehaviorTree, seed: u64) -> Self {
        let rt = BtRuntime::new(&tree);
        Self {
            tree,
            rt,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Agent for BtAgent {
    fn act(&mut self, v: &AgentView<'_>) -> Action {
        let mut search = None;
        // A tick that finishes a branch without emitting gets one fresh pass
        // from the root, so finishing a tactic does not cost a tick.
        for _ in 0..2 {
            let mut ctx = BtContext {
                obs: v.obs,
                game: Some((v.engine, v.state, v.side)),
                rng: &mut self.rng,
            };
            let out = bt::tick(&self.tree, &mut self.rt, &mut ctx);
            search = search.or(self.rt.search);
            if let Some(a) = out.action {
                self.rt.search = search;
                return a;
            }
            if out.status == Status::Running {
                break;
            }
        }
        self.rt.search = search;
        Action::Idle
    }

    fn last_search(&self) -> Option<SearchStats> {
        self.rt.search
    }
}

/// Plain MCTS over every legal action.
#[derive(Debug, Clone)]
pub struct MctsAgent {
    cfg: MctsConfig,
    rng: ChaCha8Rng,
    last: Option<SearchStats>,
}

impl MctsAgent {
    pub fn new(cfg: MctsConfig, seed: u64) -> Self {
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
        }
    }
}

impl Agent for MctsAgent {
    fn act(&mut self, v: &AgentView<'_>) -> Action {
        self.last = None;
        if !v.obs.can_act {
            return Action::Idle;
        }
        match plan_in_pool(v.engine, v.state, v.side, &self.cfg, None, &mut self.rng) {
            Ok((a, stats)) => {
                self.last = Some(stats);
                a
            }
            Err(_) => Action::Idle,
        }
    }

    fn last_search(&self) -> Option<SearchStats> {
        self.last
    }
}

/// FSM picks the state, MCTS picks a move from its pool.
#[derive(Debug, Clone)]
pub struct FsmMctsAgent {
    def: PooledFsm,
    st: FsmAgentState,
    cfg: MctsConfig,
    rng: ChaCha8Rng,
    last: Option<SearchStats>,
    /// Decisions where the state's pool had no legal action.
    pub empty_pool_count: u64,
}

impl FsmMctsAgent {
    pub fn new(def: PooledFsm, cfg: MctsConfig, seed: u64) -> Self {
        Self {
            def,
            st: FsmAgentState::new(seed),
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            last: None,
            empty_pool_count: 0,
        }
    }

    /// The pool of the current state, once the agent has acted.
    pub fn current_pool(&self) -> Option<&[Action]> {
        self.st.current.map(|i| self.def.pools[i].as_slice())
    }
}

impl Agent for FsmMctsAgent {
    fn act(&mut self, v: &AgentView<'_>) -> Action {
        match fsm_mcts_act(&self.def, &mut self.st, v.engine, v.state, v.side, &self.cfg, &mut self.rng) {
            Ok(d) => {
                self.last = d.stats;
                self.empty_pool_count += d.empty_pool as u64;
                d.action
            }
            Err(_) => {
                self.last = None;
                Action::Idle
            }
        }
    }

    fn annotation(&self) -> Option<String> {
        self.st.current_id(&self.def.fsm).map(str::to_string)
    }

    fn last_search(&self) -> Option<SearchStats> {
        self.last
    }
}

/// MCTS picks which FSM transition to take.
#[derive(Debug, Clone)]
pub struct MctsTransitionAgent {
    fsm: BoundFsm,
    st: FsmAgentState,
    cfg: MctsConfig,
    macro_ticks: u32,
    rng: ChaCha8Rng,
    last: Option<SearchStats>,
}

impl MctsTransitionAgent {
    pub fn new(fsm: BoundFsm, cfg: MctsConfig, macro_ticks: u32, seed: u64) -> Self {
        Self {
            fsm,
            st: FsmAgentState::new(seed),
            cfg,
            macro_ticks: macro_ticks.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            last: None,
        }
    }
}

impl Agent for MctsTransitionAgent {
    fn act(&mut self, v: &AgentView<'_>) -> Action {
        let r = mcts_transition_act(
            &self.fsm,
            &mut self.st,
            v.engine,
            v.state,
            v.side,
            &self.cfg,
            self.macro_ticks,
            &mut self.rng,
        );
        match r {
            Ok(d) => {
                self.last = d.stats;
                d.action
            }
            Err(_) => {
                self.last = None;
                Action::Idle
            }
        }
    }

    fn annotation(&self) -> Option<String> {
        self.st.current_id(&self.fsm).map(str::to_string)
    }

    fn last_search(&self) -> Option<SearchStats> {
        self.last
    }
}
