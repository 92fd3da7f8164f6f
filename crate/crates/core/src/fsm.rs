//! Finite-state machines with prioritized transitions and per-state tactic
//! pools, their hierarchical extension, and the agent that runs them.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::{Condition, Facts};
use crate::engine::{Action, CharacterSpec, Observation};

/// Longest tactic accepted.
pub const MAX_TACTIC_LEN: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsmError {
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("duplicate state {0:?}")]
    DuplicateState(String),
    #[error("state {0:?} has an empty tactic pool")]
    EmptyPool(String),
    #[error("tactic {0:?} is empty or longer than 20 actions")]
    BadTactic(String),
    #[error("unknown action {action:?} in tactic {tactic:?}")]
    UnknownAction { tactic: String, action: String },
    #[error("malformed definition: {0}")]
    Malformed(String),
}

/// Which events cut a running tactic short.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbortOn {
    /// One of our hits was blocked: the combo is dropped.
    pub blocked_hit: bool,
    pub took_hit: bool,
}

impl AbortOn {
    pub fn triggered(&self, obs: &Observation) -> bool {
        (self.blocked_hit && obs.hit_blocked) || (self.took_hit && obs.took_hit)
    }
}

fn one() -> f64 {
    1.0
}

fn is_one(w: &f64) -> bool {
    *w == 1.0
}

/// A named action sequence, stored with action labels so it can be bound to any character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tactic {
    pub name: String,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "is_default_abort")]
    pub abort_on: AbortOn,
    /// Relative weight under weighted selection.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub weight: f64,
}

fn is_default_abort(a: &AbortOn) -> bool {
    *a == AbortOn::default()
}

impl Tactic {
    pub fn new(name: &str, actions: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
            abort_on: AbortOn::default(),
            weight: 1.0,
        }
    }

    pub fn bind(&self, ch: &CharacterSpec) -> Result<BoundTactic, FsmError> {
        if self.actions.is_empty() || self.actions.len() > MAX_TACTIC_LEN || !(self.weight >= 0.0) {
            return Err(FsmError::BadTactic(self.name.clone()));
        }
        let actions = self
            .actions
            .iter()
            .map(|l| {
                Action::parse(l, ch).ok_or_else(|| FsmError::UnknownAction {
                    tactic: self.name.clone(),
                    action: l.clone(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(BoundTactic {
            name: self.name.clone(),
            actions,
            abort_on: self.abort_on,
            weight: self.weight,
        })
    }
}

/// A tactic resolved against a character.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTactic {
    pub name: String,
    pub actions: Vec<Action>,
    pub abort_on: AbortOn,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDef {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tactics: Vec<Tactic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub condition: Condition,
    #[serde(default)]
    pub priority: i32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TacticSelection {
    #[default]
    RoundRobin,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsmDef {
    pub states: Vec<StateDef>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
    pub initial: String,
    #[serde(default)]
    pub selection: TacticSelection,
}

/// Outcome of one machine step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmStep<'a> {
    pub next: &'a str,
    /// Index into the definition's transitions.
    pub fired: Option<usize>,
}

impl FsmDef {
    pub fn from_json(text: &str) -> Result<Self, FsmError> {
        let def: FsmDef = serde_json::from_str(text).map_err(|e| FsmError::Malformed(e.to_string()))?;
        def.validate()?;
        Ok(def)
    }

    /// Structural checks: unique states, known initial and transition endpoints.
    pub fn validate(&self) -> Result<(), FsmError> {
        let mut seen = std::collections::HashSet::new();
        for s in &self.states {
            if !seen.insert(s.id.as_str()) {
                return Err(FsmError::DuplicateState(s.id.clone()));
            }
        }
        let known = |id: &str| {
            if seen.contains(id) {
                Ok(())
            } else {
                Err(FsmError::UnknownState(id.to_string()))
            }
        };
        known(&self.initial)?;
        for t in &self.transitions {
            known(&t.from)?;
            known(&t.to)?;
        }
        Ok(())
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s.id == id)
    }

    /// Fires the highest-priority satisfied transition out of `current`
    /// (first declared wins ties); stays put when none is satisfied.
    pub fn step<F: Facts + ?Sized>(&self, current: &str, facts: &F) -> Result<FsmStep<'_>, FsmError> {
        let Some(idx) = self.state_index(current) else {
            return Err(FsmError::UnknownState(current.to_string()));
        };
        let mut best: Option<usize> = None;
        for (i, t) in self.transitions.iter().enumerate() {
            if t.from != current || best.is_some_and(|b| self.transitions[b].priority >= t.priority) {
                continue;
            }
            if t.condition.eval(facts) {
                best = Some(i);
            }
        }
        Ok(FsmStep {
            next: best.map_or(self.states[idx].id.as_str(), |i| self.transitions[i].to.as_str()),
            fired: best,
        })
    }

    /// Resolves every state's tactic pool against `ch`. Every pool must be non-empty.
    pub fn bind(&self, ch: &CharacterSpec) -> Result<BoundFsm, FsmError> {
        self.validate()?;
        let mut pools = Vec::with_capacity(self.states.len());
        for s in &self.states {
            if s.tactics.is_empty() {
                return Err(FsmError::EmptyPool(s.id.clone()));
            }
            pools.push(s.tactics.iter().map(|t| t.bind(ch)).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(BoundFsm {
            def: self.clone(),
            pools,
        })
    }
}

/// Free-function form of [`FsmDef::step`].
pub fn fsm_step<'a, F: Facts + ?Sized>(def: &'a FsmDef, current: &str, facts: &F) -> Result<FsmStep<'a>, FsmError> {
    def.step(current, facts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superstate {
    pub id: String,
    pub children: FsmDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HfsmDef {
    pub superstates: Vec<Superstate>,
    /// Transitions between superstates.
    #[serde(default)]
    pub transitions: Vec<Transition>,
    pub initial: String,
    #[serde(default)]
    pub selection: TacticSelection,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HfsmState {
    pub superstate: String,
    pub child: String,
}

impl HfsmState {
    pub fn new(superstate: &str, child: &str) -> Self {
        Self {
            superstate: superstate.to_string(),
            child: child.to_string(),
        }
    }

    /// `"Super/child"`, the id used by the flattened machine.
    pub fn flat_id(&self) -> String {
        format!("{}/{}", self.superstate, self.child)
    }
}

impl HfsmDef {
    pub fn from_json(text: &str) -> Result<Self, FsmError> {
        let def: HfsmDef = serde_json::from_str(text).map_err(|e| FsmError::Malformed(e.to_string()))?;
        def.validate()?;
        Ok(def)
    }

    pub fn validate(&self) -> Result<(), FsmError> {
        let outer = FsmDef {
            states: self
                .superstates
                .iter()
                .map(|s| StateDef {
                    id: s.id.clone(),
                    tactics: vec![],
                })
                .collect(),
            transitions: self.transitions.clone(),
            initial: self.initial.clone(),
            selection: self.selection,
        };
        outer.validate()?;
        for s in &self.superstates {
            s.children.validate()?;
        }
        Ok(())
    }

    fn superstate(&self, id: &str) -> Result<&Superstate, FsmError> {
        self.superstates
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| FsmError::UnknownState(id.to_string()))
    }

    pub fn initial_state(&self) -> Result<HfsmState, FsmError> {
        let s = self.superstate(&self.initial)?;
        Ok(HfsmState::new(&s.id, &s.children.initial))
    }

    /// Outer transitions first; if one fires the target superstate starts at its
    /// initial child, otherwise the active child machine steps.
    pub fn step<F: Facts + ?Sized>(&self, current: &HfsmState, facts: &F) -> Result<HfsmState, FsmError> {
        let sup = self.superstate(&current.superstate)?;
        let mut best: Option<&Transition> = None;
        for t in &self.transitions {
            if t.from != current.superstate || best.is_some_and(|b| b.priority >= t.priority) {
                continue;
            }
            if t.condition.eval(facts) {
                best = Some(t);
            }
        }
        if let Some(t) = best {
            let target = self.superstate(&t.to)?;
            return Ok(HfsmState::new(&target.id, &target.children.initial));
        }
        let inner = sup.children.step(&current.child, facts)?;
        Ok(HfsmState::new(&sup.id, inner.next))
    }

    /// Equivalent flat machine: one state per (superstate, child) pair, named
    /// `"Super/child"`, with the outer transitions copied onto every child.
    ///
    /// Outer transitions come first and are shifted above every inner priority,
    /// so they keep precedence while their relative order is preserved.
    pub fn flatten(&self) -> Result<FsmDef, FsmError> {
        self.validate()?;
        let inner_max = self
            .superstates
            .iter()
            .flat_map(|s| s.children.transitions.iter().map(|t| t.priority))
            .max();
        let outer_min = self.transitions.iter().map(|t| t.priority).min();
        let shift = match (inner_max, outer_min) {
            (Some(hi), Some(lo)) if lo <= hi => hi - lo + 1,
            _ => 0,
        };

        let mut states = Vec::new();
        let mut transitions = Vec::new();
        for sup in &self.superstates {
            for child in &sup.children.states {
                let from = format!("{}/{}", sup.id, child.id);
                states.push(StateDef {
                    id: from.clone(),
                    tactics: child.tactics.clone(),
                });
                for t in self.transitions.iter().filter(|t| t.from == sup.id) {
                    let target = self.superstate(&t.to)?;
                    transitions.push(Transition {
                        from: from.clone(),
                        to: format!("{}/{}", target.id, target.children.initial),
                        condition: t.condition.clone(),
                        priority: t.priority + shift,
                    });
                }
            }
            for t in &sup.children.transitions {
                transitions.push(Transition {
                    from: format!("{}/{}", sup.id, t.from),
                    to: format!("{}/{}", sup.id, t.to),
                    condition: t.condition.clone(),
                    priority: t.priority,
                });
            }
        }
        Ok(FsmDef {
            states,
            transitions,
            initial: self.initial_state()?.flat_id(),
            selection: self.selection,
        })
    }
}

/// Free-function form of [`HfsmDef::step`].
pub fn hfsm_step<F: Facts + ?Sized>(def: &HfsmDef, current: &HfsmState, facts: &F) -> Result<HfsmState, FsmError> {
    def.step(current, facts)
}

/// An [`FsmDef`] whose tactics are resolved to concrete actions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundFsm {
    pub def: FsmDef,
    /// Indexed like `def.states`.
    pub pools: Vec<Vec<BoundTactic>>,
}

impl BoundFsm {
    /// Every action that appears in some tactic of state `idx`.
    pub fn pool_actions(&self, idx: usize) -> Vec<Action> {
        let mut out: Vec<Action> = Vec::new();
        for t in &self.pools[idx] {
            for a in &t.actions {
                if !out.contains(a) {
                    out.push(*a);
                }
            }
        }
        out
    }
}

/// Mutable side of an FSM agent: current state, active tactic and cursor.
#[derive(Debug, Clone)]
pub struct FsmAgentState {
    pub current: Option<usize>,
    pub tactic: usize,
    pub cursor: usize,
    /// Round-robin counters, one per state.
    next_tactic: HashMap<usize, usize>,
    rng: ChaCha8Rng,
}

impl FsmAgentState {
    pub fn new(seed: u64) -> Self {
        Self {
            current: None,
            tactic: 0,
            cursor: 0,
            next_tactic: HashMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn current_id<'a>(&self, fsm: &'a BoundFsm) -> Option<&'a str> {
        self.current.map(|i| fsm.def.states[i].id.as_str())
    }

    fn select(&mut self, fsm: &BoundFsm, state: usize) {
        let pool = &fsm.pools[state];
        self.current = Some(state);
        self.cursor = 0;
        self.tactic = match fsm.def.selection {
            TacticSelection::RoundRobin => {
                let n = self.next_tactic.entry(state).or_insert(0);
                let t = *n % pool.len();
                *n += 1;
                t
            }
            TacticSelection::Weighted => {
                let total: f64 = pool.iter().map(|t| t.weight).sum();
                if total <= 0.0 {
                    self.rng.gen_range(0..pool.len())
                } else {
                    let mut x = self.rng.gen::<f64>() * total;
                    pool.iter()
                        .position(|t| {
                            x -= t.weight;
                            x < 0.0
                        })
                        .unwrap_or(pool.len() - 1)
                }
            }
        };
    }

    /// Steps the machine on `obs` and updates tactic bookkeeping without
    /// emitting anything. Returns true if a transition fired.
    pub fn update(&mut self, fsm: &BoundFsm, obs: &Observation) -> bool {
        let Some(cur) = self.current else {
            let init = fsm.def.state_index(&fsm.def.initial).expect("validated");
            self.select(fsm, init);
            return false;
        };
        let step = fsm
            .def
            .step(&fsm.def.states[cur].id, obs)
            .expect("current state comes from the definition");
        if step.fired.is_some() {
            let next = fsm.def.state_index(step.next).expect("validated");
            self.select(fsm, next);
            true
        } else {
            if self.cursor > 0 && fsm.pools[cur][self.tactic].abort_on.triggered(obs) {
                self.select(fsm, cur);
            }
            false
        }
    }

    /// Next action of the active tactic, rolling over to a fresh tactic when it is used up.
    pub fn next_action(&mut self, fsm: &BoundFsm) -> Action {
        let cur = self.current.expect("update runs first");
        if self.cursor >= fsm.pools[cur][self.tactic].actions.len() {
            self.select(fsm, cur);
        }
        let a = fsm.pools[cur][self.tactic].actions[self.cursor];
        self.cursor += 1;
        a
    }
}

/// One decision of an FSM agent. A fighter that cannot act idles and the
/// tactic cursor stays where it is. Tactics are written facing right and
/// mirrored when facing left.
pub fn fsm_agent_act(fsm: &BoundFsm, st: &mut FsmAgentState, obs: &Observation) -> Action {
    st.update(fsm, obs);
    if !obs.can_act {
        return Action::Idle;
    }
    st.next_action(fsm).oriented(obs.facing)
}
