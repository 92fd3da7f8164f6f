//! Live-match wire protocol: JSON text frames over WebSocket.
//!
//! Client to server: `join` once, then `input` at most once per tick.
//! Server to client: `state` every tick, `round_end` when a round is decided,
//! `match_end` once, and `error` before closing on a protocol violation.

use duel_core::engine::{Engine, Facing, GameState, Phase, RoundCause, Side, Winner};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Join { name: String },
    /// `action` is an action label such as `move_left` or `special:fireball`.
    Input { tick: u64, action: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FighterFrame {
    pub position: i32,
    pub health: i32,
    pub max_health: i32,
    pub facing: Facing,
    pub phase: Phase,
    /// Hits taken in the combo currently landing on this fighter.
    pub combo_hits_taken: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectileFrame {
    pub owner: Side,
    pub position: i32,
    pub velocity: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServerMessage {
    State {
        tick: u64,
        fighters: [FighterFrame; 2],
        projectiles: Vec<ProjectileFrame>,
        /// Ticks left in the round.
        timer: u32,
        round_wins: [u8; 2],
        /// Combo counter shown over each fighter, left then right.
        combo: [u16; 2],
    },
    RoundEnd {
        winner: Winner,
        cause: RoundCause,
    },
    MatchEnd {
        /// `None` when the session ended before the match was decided.
        winner: Option<Winner>,
        replay_id: String,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// The frame was not a valid client message.
    ProtocolViolation,
    /// The action label is not an action of the human's character.
    UnknownAction,
    /// `input` before `join`, or a second `join`.
    UnexpectedMessage,
}

impl ServerMessage {
    pub fn state(engine: &Engine, state: &GameState, tick: u64) -> Self {
        let fighter = |i: usize| {
            let f = &state.fighters[i];
            FighterFrame {
                position: f.position,
                health: f.health,
                max_health: engine.characters()[i].max_health,
                facing: f.facing,
                phase: f.phase,
                combo_hits_taken: f.combo_hits_taken,
            }
        };
        ServerMessage::State {
            tick,
            fighters: [fighter(0), fighter(1)],
            projectiles: state
                .projectiles()
                .map(|p| ProjectileFrame {
                    owner: p.owner,
                    position: p.position,
                    velocity: p.velocity,
                })
                .collect(),
            timer: state.timer,
            round_wins: state.round_wins,
            combo: [state.fighters[0].combo_hits_taken, state.fighters[1].combo_hits_taken],
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("client messages serialize")
    }
}
