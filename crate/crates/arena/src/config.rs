//! Match configuration files and agent construction.
//!
//! Definitions an agent needs (machines, trees, characters) can be written
//! inline or as a path relative to the config file. [`MatchConfig::load`]
//! inlines every path so a loaded config, and any replay recorded from it,
//! is self-contained.

use std::fs;
use std::path::{Path, PathBuf};

use duel_core::agents::{
    Agent, BtAgent, FsmAgent, FsmMctsAgent, IdleAgent, InputReadingAgent, MctsAgent, MctsTransitionAgent,
    RandomAgent,
};
use duel_core::bt::{BehaviorTree, BtNode};
use duel_core::engine::{CharacterSpec, Engine, Rules, Side};
use duel_core::fsm::{FsmDef, HfsmDef};
use duel_core::hybrid::{PooledFsm, DEFAULT_MACRO_TICKS};
use duel_core::mcts::MctsConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("cannot parse {what}: {message}")]
    Parse { what: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot build {kind} agent: {message}")]
    AgentInit { kind: &'static str, message: String },
}

impl ConfigError {
    fn invalid(e: impl std::fmt::Display) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

/// A definition given inline or by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Inline(T),
    Path(PathBuf),
}

impl<T: DeserializeOwned> Source<T> {
    /// Loads a path source, relative paths taken from `base`.
    pub fn resolve(&mut self, base: &Path) -> Result<(), ConfigError> {
        if let Source::Path(p) = self {
            let path = base.join(p);
            let value = read_json(&path)?;
            *self = Source::Inline(value);
        }
        Ok(())
    }

    pub fn get(&self) -> Result<&T, ConfigError> {
        match self {
            Source::Inline(v) => Ok(v),
            Source::Path(p) => Err(ConfigError::Invalid(format!("unresolved path {}", p.display()))),
        }
    }
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        what: path.display().to_string(),
        message: e.to_string(),
    })
}

fn default_macro_ticks() -> u32 {
    DEFAULT_MACRO_TICKS
}

/// Which decision model plays a side, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    Random,
    InputReading {
        difficulty: f64,
    },
    Fsm {
        fsm: Source<FsmDef>,
    },
    Hfsm {
        hfsm: Source<HfsmDef>,
    },
    Bt {
        tree: Source<BtNode>,
    },
    Mcts {
        #[serde(default)]
        mcts: MctsConfig,
    },
    FsmMcts {
        fsm: Source<FsmDef>,
        #[serde(default)]
        mcts: MctsConfig,
    },
    MctsTransitions {
        fsm: Source<FsmDef>,
        #[serde(default)]
        mcts: MctsConfig,
        #[serde(default = "default_macro_ticks")]
        macro_ticks: u32,
    },
    BtMcts {
        tree: Source<BtNode>,
    },
    /// Driven by a live client; only the server can run it.
    Human,
}

impl AgentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            AgentSpec::Random => "random",
            AgentSpec::InputReading { .. } => "input_reading",
            AgentSpec::Fsm { .. } => "fsm",
            AgentSpec::Hfsm { .. } => "hfsm",
            AgentSpec::Bt { .. } => "bt",
            AgentSpec::Mcts { .. } => "mcts",
            AgentSpec::FsmMcts { .. } => "fsm_mcts",
            AgentSpec::MctsTransitions { .. } => "mcts_transitions",
            AgentSpec::BtMcts { .. } => "bt_mcts",
            AgentSpec::Human => "human",
        }
    }

    pub fn resolve(&mut self, base: &Path) -> Result<(), ConfigError> {
        match self {
            AgentSpec::Fsm { fsm } | AgentSpec::FsmMcts { fsm, .. } | AgentSpec::MctsTransitions { fsm, .. } => {
                fsm.resolve(base)
            }
            AgentSpec::Hfsm { hfsm } => hfsm.resolve(base),
            AgentSpec::Bt { tree } | AgentSpec::BtMcts { tree } => tree.resolve(base),
            _ => Ok(()),
        }
    }

    /// Checks parameters without building anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mcts = |c: &MctsConfig| c.validate().map_err(ConfigError::invalid);
        match self {
            AgentSpec::InputReading { difficulty } if !(0.0..=1.0).contains(difficulty) => Err(ConfigError::Invalid(
                format!("difficulty {difficulty} outside [0, 1]"),
            )),
            AgentSpec::Fsm { fsm } => fsm.get()?.validate().map_err(ConfigError::invalid),
            AgentSpec::Hfsm { hfsm } => hfsm.get()?.validate().map_err(ConfigError::invalid),
            AgentSpec::Bt { tree } | AgentSpec::BtMcts { tree } => tree.get()?.validate().map_err(ConfigError::invalid),
            AgentSpec::Mcts { mcts: c } => mcts(c),
            AgentSpec::FsmMcts { fsm, mcts: c } => {
                fsm.get()?.validate().map_err(ConfigError::invalid)?;
                mcts(c)
            }
            AgentSpec::MctsTransitions { fsm, mcts: c, macro_ticks } => {
                fsm.get()?.validate().map_err(ConfigError::invalid)?;
                if *macro_ticks == 0 {
                    return Err(ConfigError::Invalid("macro_ticks must be at least 1".into()));
                }
                mcts(c)
            }
            _ => Ok(()),
        }
    }

    pub fn is_human(&self) -> bool {
        matches!(self, AgentSpec::Human)
    }
}

/// Builds the agent for `side` of `engine`, seeded with `seed`.
pub fn build_agent(spec: &AgentSpec, engine: &Engine, side: Side, seed: u64) -> Result<Box<dyn Agent>, ConfigError> {
    let kind = spec.kind();
    let fail = |e: &dyn std::fmt::Display| ConfigError::AgentInit {
        kind,
        message: e.to_string(),
    };
    let ch = engine.character(side);
    spec.validate().map_err(|e| fail(&e))?;
    let agent: Box<dyn Agent> = match spec {
        AgentSpec::Random => Box::new(RandomAgent::new(seed)),
        AgentSpec::InputReading { difficulty } => Box::new(InputReadingAgent::new(*difficulty, seed)),
        AgentSpec::Fsm { fsm } => Box::new(FsmAgent::new(fsm.get()?.bind(ch).map_err(|e| fail(&e))?, seed)),
        AgentSpec::Hfsm { hfsm } => {
            let flat = hfsm.get()?.flatten().map_err(|e| fail(&e))?;
            Box::new(FsmAgent::new(flat.bind(ch).map_err(|e| fail(&e))?, seed))
        }
        AgentSpec::Bt { tree } | AgentSpec::BtMcts { tree } => {
            let t = BehaviorTree::new(tree.get()?, ch).map_err(|e| fail(&e))?;
            Box::new(BtAgent::new(t, seed))
        }
        AgentSpec::Mcts { mcts } => Box::new(MctsAgent::new(mcts.clone(), seed)),
        AgentSpec::FsmMcts { fsm, mcts } => {
            let bound = fsm.get()?.bind(ch).map_err(|e| fail(&e))?;
            Box::new(FsmMctsAgent::new(PooledFsm::new(bound), mcts.clone(), seed))
        }
        AgentSpec::MctsTransitions { fsm, mcts, macro_ticks } => {
            let bound = fsm.get()?.bind(ch).map_err(|e| fail(&e))?;
            Box::new(MctsTransitionAgent::new(bound, mcts.clone(), *macro_ticks, seed))
        }
        AgentSpec::Human => {
            return Err(fail(&"human players join through the live server"));
        }
    };
    Ok(agent)
}

/// The agent standing in for a human in training mode.
pub fn training_dummy() -> Box<dyn Agent> {
    Box::new(IdleAgent)
}

fn default_round_length() -> u32 {
    Rules::default().round_length
}

fn default_rounds_to_win() -> u8 {
    2
}

fn default_characters() -> [Source<CharacterSpec>; 2] {
    let ch = CharacterSpec::default_fighter();
    [Source::Inline(ch.clone()), Source::Inline(ch)]
}

/// Everything needed to play one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub left: AgentSpec,
    pub right: AgentSpec,
    #[serde(default = "default_characters")]
    pub characters: [Source<CharacterSpec>; 2],
    /// Ticks per round.
    #[serde(default = "default_round_length")]
    pub round_length: u32,
    #[serde(default = "default_rounds_to_win")]
    pub rounds_to_win: u8,
    #[serde(default)]
    pub seed: u64,
    /// Health and timer frozen, the round never ends.
    #[serde(default)]
    pub training: bool,
}

impl MatchConfig {
    pub fn new(left: AgentSpec, right: AgentSpec, seed: u64) -> Self {
        Self {
            left,
            right,
            characters: default_characters(),
            round_length: default_round_length(),
            rounds_to_win: default_rounds_to_win(),
            seed,
            training: false,
        }
    }

    /// Reads a config file and inlines every path in it.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: MatchConfig = read_json(path)?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) -> Result<(), ConfigError> {
        self.left.resolve(base)?;
        self.right.resolve(base)?;
        for c in &mut self.characters {
            c.resolve(base)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.left.validate()?;
        self.right.validate()?;
        if self.rounds_to_win == 0 {
            return Err(ConfigError::Invalid("rounds_to_win must be at least 1".into()));
        }
        self.engine().map(|_| ())
    }

    pub fn agent(&self, side: Side) -> &AgentSpec {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn rules(&self) -> Rules {
        let defaults = Rules::default();
        Rules {
            round_length: self.round_length,
            rounds_to_win: self.rounds_to_win,
            max_rounds: defaults.max_rounds.max(2 * self.rounds_to_win + 1),
            ..defaults
        }
    }

    pub fn engine(&self) -> Result<Engine, ConfigError> {
        let [l, r] = &self.characters;
        Engine::new(self.rules(), [l.get()?.clone(), r.get()?.clone()]).map_err(ConfigError::invalid)
    }

    /// Seed of the agent playing `side`.
    pub fn agent_seed(&self, side: Side) -> u64 {
        derive_seed(self.seed, &[0xa6e7, side.index() as u64])
    }

    /// Builds both agents; a human side gets `None`.
    pub fn build_agents(&self, engine: &Engine) -> Result<[Option<Box<dyn Agent>>; 2], ConfigError> {
        let build = |side: Side| -> Result<Option<Box<dyn Agent>>, ConfigError> {
            let spec = self.agent(side);
            if spec.is_human() {
                return Ok(None);
            }
            build_agent(spec, engine, side, self.agent_seed(side)).map(Some)
        };
        Ok([build(Side::Left)?, build(Side::Right)?])
    }
}
