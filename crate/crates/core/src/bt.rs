//! Behavior trees: selectors, sequencers, condition and action leaves, and
//! the MCTS leaf.
//!
//! Composites have memory. When a child returns Running the composite records
//! its index and the next tick resumes there instead of re-evaluating earlier
//! siblings, so a multi-tick tactic is never dropped halfway by a condition
//! that was only true when it started.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::Condition;
use crate::engine::{Action, CharacterSpec, Engine, GameState, Observation, Side};
use crate::fsm::{BoundTactic, FsmError, Tactic};
use crate::hybrid::{bt_mcts_leaf_tick, MctsLeaf, MctsLeafProgress, MctsLeafSpec};
use crate::mcts::SearchStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Failure,
    Running,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BtError {
    #[error("composite node with no children")]
    MalformedTree,
    #[error(transparent)]
    Tactic(#[from] FsmError),
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("malformed tree file: {0}")]
    Format(String),
}

/// Serialized tree shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BtNode {
    Selector(Vec<BtNode>),
    Sequencer(Vec<BtNode>),
    Condition(Condition),
    /// A single primitive action, by label.
    Action(String),
    Tactic(Tactic),
    Mcts(MctsLeafSpec),
}

impl BtNode {
    pub fn success() -> Self {
        BtNode::Condition(Condition::Always)
    }

    pub fn failure() -> Self {
        BtNode::Condition(Condition::Never)
    }

    pub fn from_json(text: &str) -> Result<Self, BtError> {
        let node: BtNode = serde_json::from_str(text).map_err(|e| BtError::Format(e.to_string()))?;
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<(), BtError> {
        match self {
            BtNode::Selector(cs) | BtNode::Sequencer(cs) => {
                if cs.is_empty() {
                    return Err(BtError::MalformedTree);
                }
                cs.iter().try_for_each(BtNode::validate)
            }
            _ => Ok(()),
        }
    }
}

/// Status of a tree whose leaves are all constant conditions, by direct
/// recursion. `None` if some leaf is not constant.
pub fn bt_oracle(node: &BtNode) -> Option<Status> {
    match node {
        BtNode::Condition(Condition::Always) => Some(Status::Success),
        BtNode::Condition(Condition::Never) => Some(Status::Failure),
        BtNode::Selector(cs) => {
            for c in cs {
                if bt_oracle(c)? == Status::Success {
                    return Some(Status::Success);
                }
            }
            Some(Status::Failure)
        }
        BtNode::Sequencer(cs) => {
            for c in cs {
                if bt_oracle(c)? == Status::Failure {
                    return Some(Status::Failure);
                }
            }
            Some(Status::Success)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Compiled {
    Selector(Vec<usize>),
    Sequencer(Vec<usize>),
    Condition(Condition),
    Tactic(BoundTactic),
    Mcts(MctsLeaf),
}

/// A tree bound to a character, nodes numbered in preorder (root is 0).
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorTree {
    nodes: Vec<Compiled>,
}

impl BehaviorTree {
    pub fn new(root: &BtNode, ch: &CharacterSpec) -> Result<Self, BtError> {
        root.validate()?;
        let mut nodes = Vec::new();
        compile(root, ch, &mut nodes)?;
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        !matches!(self.nodes[id], Compiled::Selector(_) | Compiled::Sequencer(_))
    }

    /// Every action any leaf can emit (MCTS leaves contribute their pools).
    pub fn leaf_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        for n in &self.nodes {
            let acts: &[Action] = match n {
                Compiled::Tactic(t) => &t.actions,
                Compiled::Mcts(m) => &m.pool,
                _ => &[],
            };
            for a in acts {
                if !out.contains(a) {
                    out.push(*a);
                }
            }
        }
        out
    }
}

fn compile(node: &BtNode, ch: &CharacterSpec, out: &mut Vec<Compiled>) -> Result<usize, BtError> {
    let id = out.len();
    match node {
        BtNode::Selector(cs) | BtNode::Sequencer(cs) => {
            out.push(Compiled::Selector(vec![]));
            let kids = cs.iter().map(|c| compile(c, ch, out)).collect::<Result<Vec<_>, _>>()?;
            out[id] = if matches!(node, BtNode::Selector(_)) {
                Compiled::Selector(kids)
            } else {
                Compiled::Sequencer(kids)
            };
        }
        BtNode::Condition(c) => out.push(Compiled::Condition(c.clone())),
        BtNode::Action(label) => {
            let a = Action::parse(label, ch).ok_or_else(|| BtError::UnknownAction(label.clone()))?;
            out.push(Compiled::Tactic(BoundTactic {
                name: label.clone(),
                actions: vec![a],
                abort_on: Default::default(),
                weight: 1.0,
            }));
        }
        BtNode::Tactic(t) => out.push(Compiled::Tactic(t.bind(ch)?)),
        BtNode::Mcts(spec) => out.push(Compiled::Mcts(spec.bind(ch)?)),
    }
    Ok(id)
}

#[derive(Debug, Clone, Default, PartialEq)]
enum LeafProgress {
    #[default]
    Fresh,
    Tactic {
        cursor: usize,
    },
    Mcts(MctsLeafProgress),
}

/// Per-agent mutable state of a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BtRuntime {
    resume: Vec<Option<usize>>,
    leaves: Vec<LeafProgress>,
    /// Leaves evaluated during the last tick, in order.
    pub trace: Vec<usize>,
    /// Search statistics if an MCTS leaf planned during the last tick.
    pub search: Option<SearchStats>,
}

impl BtRuntime {
    pub fn new(tree: &BehaviorTree) -> Self {
        Self {
            resume: vec![None; tree.len()],
            leaves: vec![LeafProgress::Fresh; tree.len()],
            trace: vec![],
            search: None,
        }
    }

    /// `(composite, running child position)` pairs along the running path, root first.
    pub fn resume_path(&self) -> Vec<(usize, usize)> {
        self.resume
            .iter()
            .enumerate()
            .filter_map(|(n, r)| r.map(|i| (n, i)))
            .collect()
    }
}

/// Everything a tick may look at.
pub struct BtContext<'a> {
    pub obs: &'a Observation,
    /// Needed by MCTS leaves only; they fail without it.
    pub game: Option<(&'a Engine, &'a GameState, Side)>,
    pub rng: &'a mut ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtTick {
    pub status: Status,
    pub action: Option<Action>,
}

/// One tick from the root (or from the recorded resume path).
pub fn tick(tree: &BehaviorTree, rt: &mut BtRuntime, ctx: &mut BtContext<'_>) -> BtTick {
    rt.trace.clear();
    rt.search = None;
    let mut action = None;
    let status = eval(tree, 0, rt, ctx, &mut action);
    if status != Status::Running {
        rt.resume.iter_mut().for_each(|r| *r = None);
    }
    BtTick { status, action }
}

fn eval(tree: &BehaviorTree, id: usize, rt: &mut BtRuntime, ctx: &mut BtContext<'_>, action: &mut Option<Action>) -> Status {
    match &tree.nodes[id] {
        Compiled::Selector(kids) | Compiled::Sequencer(kids) => {
            let is_selector = matches!(tree.nodes[id], Compiled::Selector(_));
            let (stop_on, finish) = if is_selector {
                (Status::Success, Status::Failure)
            } else {
                (Status::Failure, Status::Success)
            };
            let start = rt.resume[id].take().unwrap_or(0);
            for (i, &k) in kids.iter().enumerate().skip(start) {
                match eval(tree, k, rt, ctx, action) {
                    Status::Running => {
                        rt.resume[id] = Some(i);
                        return Status::Running;
                    }
                    s if s == stop_on => return s,
                    _ => {}
                }
            }
            finish
        }
        Compiled::Condition(c) => {
            rt.trace.push(id);
            if c.eval(ctx.obs) {
                Status::Success
            } else {
                Status::Failure
            }
        }
        Compiled::Tactic(t) => {
            rt.trace.push(id);
            let cursor = match rt.leaves[id] {
                LeafProgress::Tactic { cursor } => cursor,
                _ => 0,
            };
            if cursor > 0 && t.abort_on.triggered(ctx.obs) {
                rt.leaves[id] = LeafProgress::Fresh;
                return Status::Failure;
            }
            if !ctx.obs.can_act {
                rt.leaves[id] = LeafProgress::Tactic { cursor };
                return Status::Running;
            }
            if cursor < t.actions.len() {
                *action = Some(t.actions[cursor].oriented(ctx.obs.facing));
                rt.leaves[id] = LeafProgress::Tactic { cursor: cursor + 1 };
                return Status::Running;
            }
            rt.leaves[id] = LeafProgress::Fresh;
            Status::Success
        }
        Compiled::Mcts(leaf) => {
            rt.trace.push(id);
            let mut progress = match std::mem::take(&mut rt.leaves[id]) {
                LeafProgress::Mcts(p) => p,
                _ => MctsLeafProgress::default(),
            };
            let out = bt_mcts_leaf_tick(leaf, &mut progress, ctx.obs, ctx.game, ctx.rng);
            if out.status == Status::Running {
                rt.leaves[id] = LeafProgress::Mcts(progress);
            }
            if out.stats.is_some() {
                rt.search = out.stats;
            }
            *action = out.action.or(*action);
            out.status
        }
    }
}

#[cfg(test)]
mod tests;
