//! Versioned JSON-lines replays.
//!
//! A replay is one header line (format and engine version, engine
//! fingerprint, resolved config), one line per tick with both applied
//! actions and any state annotations, and one footer line with the result
//! and digest. The digest is SHA-256 over the canonical serialization of the
//! header, tick and result lines, so a replay can be checked by
//! re-simulating its actions.

use std::fs;
use std::path::Path;

use duel_core::engine::{Action, Engine, EngineError, RoundResult, Side, Winner, ENGINE_VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, MatchConfig};
use crate::harness::Referee;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("malformed replay: {0}")]
    Format(String),
    #[error("replay was recorded with {found}, this build runs {expected}")]
    VersionMismatch { expected: String, found: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub format_version: u32,
    pub engine_version: u32,
    /// SHA-256 of the rules and both characters.
    pub engine_fingerprint: String,
    pub config: MatchConfig,
}

impl ReplayHeader {
    pub fn new(config: MatchConfig, engine: &Engine) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            engine_version: ENGINE_VERSION,
            engine_fingerprint: engine_fingerprint(engine),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    /// Applied actions, left then right, as action labels.
    pub actions: [String; 2],
    /// Internal state of each agent after deciding, when it has one.
    #[serde(default, skip_serializing_if = "no_annotations")]
    pub annotations: [Option<String>; 2],
}

fn no_annotations(a: &[Option<String>; 2]) -> bool {
    a.iter().all(Option::is_none)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `None` for sessions that stopped before a winner was decided.
    pub winner: Option<Winner>,
    pub round_wins: [u8; 2],
    pub rounds: Vec<RoundResult>,
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(ReplayHeader),
    Tick(TickRecord),
    Footer { result: MatchResult, digest: String },
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum DigestLine<'a> {
    Header(&'a ReplayHeader),
    Tick(&'a TickRecord),
    Result(&'a MatchResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub header: ReplayHeader,
    pub ticks: Vec<TickRecord>,
    pub result: MatchResult,
    /// Hex SHA-256, see [`Replay::compute_digest`].
    pub digest: String,
}

pub fn engine_fingerprint(engine: &Engine) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(engine.rules()).expect("rules serialize"));
    for c in engine.characters() {
        h.update(serde_json::to_vec(c).expect("characters serialize"));
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn action_labels(engine: &Engine, actions: [Action; 2]) -> [String; 2] {
    [
        actions[0].label(engine.character(Side::Left)),
        actions[1].label(engine.character(Side::Right)),
    ]
}

impl Replay {
    /// Assembles a replay and stamps its digest.
    pub fn seal(header: ReplayHeader, ticks: Vec<TickRecord>, result: MatchResult) -> Self {
        let mut r = Self {
            header,
            ticks,
            result,
            digest: String::new(),
        };
        r.digest = r.compute_digest();
        r
    }

    pub fn compute_digest(&self) -> String {
        digest_of(&self.header, &self.ticks, &self.result)
    }

    /// Short identifier derived from the digest.
    pub fn id(&self) -> &str {
        &self.digest[..self.digest.len().min(16)]
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("replay lines serialize"));
            out.push('\n');
        };
        push(&Line::Header(self.header.clone()));
        for t in &self.ticks {
            push(&Line::Tick(t.clone()));
        }
        push(&Line::Footer {
            result: self.result.clone(),
            digest: self.digest.clone(),
        });
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ReplayError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).enumerate();
        let parse = |n: usize, l: &str| -> Result<Line, ReplayError> {
            serde_json::from_str(l).map_err(|e| ReplayError::Format(format!("line {}: {e}", n + 1)))
        };
        let header = match lines.next() {
            Some((n, l)) => match parse(n, l)? {
                Line::Header(h) => h,
                _ => return Err(ReplayError::Format("first line is not a header".into())),
            },
            None => return Err(ReplayError::Format("empty replay".into())),
        };
        let mut ticks = Vec::new();
        for (n, l) in lines {
            match parse(n, l)? {
                Line::Tick(t) => ticks.push(t),
                Line::Footer { result, digest } => {
                    return Ok(Self {
                        header,
                        ticks,
                        result,
                        digest,
                    });
                }
                Line::Header(_) => return Err(ReplayError::Format(format!("line {}: second header", n + 1))),
            }
        }
        Err(ReplayError::Format("missing footer".into()))
    }

    pub fn save(&self, path: &Path) -> Result<(), ReplayError> {
        fs::write(path, self.to_jsonl()).map_err(|e| ReplayError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ReplayError> {
        let text = fs::read_to_string(path).map_err(|e| ReplayError::Io(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    /// Engine for this replay after the version checks.
    pub fn engine(&self) -> Result<Engine, ReplayError> {
        let h = &self.header;
        if h.format_version != FORMAT_VERSION {
            return Err(ReplayError::VersionMismatch {
                expected: format!("format {FORMAT_VERSION}"),
                found: format!("format {}", h.format_version),
            });
        }
        if h.engine_version != ENGINE_VERSION {
            return Err(ReplayError::VersionMismatch {
                expected: format!("engine {ENGINE_VERSION}"),
                found: format!("engine {}", h.engine_version),
            });
        }
        let engine = h.config.engine()?;
        let fp = engine_fingerprint(&engine);
        if fp != h.engine_fingerprint {
            return Err(ReplayError::VersionMismatch {
                expected: format!("engine fingerprint {fp}"),
                found: format!("engine fingerprint {}", h.engine_fingerprint),
            });
        }
        Ok(engine)
    }

    /// Actions of every tick, parsed against the replay's characters.
    /// `None` if some label is not a valid action.
    pub fn actions(&self, engine: &Engine) -> Option<Vec<[Action; 2]>> {
        self.ticks
            .iter()
            .map(|t| {
                Some([
                    Action::parse(&t.actions[0], engine.character(Side::Left))?,
                    Action::parse(&t.actions[1], engine.character(Side::Right))?,
                ])
            })
            .collect()
    }
}

fn digest_of(header: &ReplayHeader, ticks: &[TickRecord], result: &MatchResult) -> String {
    let mut h = Sha256::new();
    let mut line = |l: &DigestLine| {
        h.update(serde_json::to_vec(l).expect("replay lines serialize"));
        h.update(b"\n");
    };
    line(&DigestLine::Header(header));
    for t in ticks {
        line(&DigestLine::Tick(t));
    }
    line(&DigestLine::Result(result));
    hex(&h.finalize())
}

/// Re-simulates the recorded actions and checks that they reproduce the
/// recorded result and digest bit for bit.
pub fn verify_replay(replay: &Replay) -> Result<bool, ReplayError> {
    let engine = replay.engine()?;
    let Some(actions) = replay.actions(&engine) else {
        return Ok(false);
    };
    let mut referee = Referee::new(&engine, replay.header.config.seed, replay.header.config.training);
    for (i, (rec, [l, r])) in replay.ticks.iter().zip(actions).enumerate() {
        if rec.tick != i as u64 || referee.is_over() {
            return Ok(false);
        }
        match referee.step(l, r) {
            Ok(_) => {}
            Err(EngineError::IllegalAction { .. }) | Err(EngineError::RoundOver) => return Ok(false),
            Err(e) => return Err(ReplayError::Format(e.to_string())),
        }
    }
    let result = referee.result();
    Ok(result == replay.result && digest_of(&replay.header, &replay.ticks, &result) == replay.digest)
}
