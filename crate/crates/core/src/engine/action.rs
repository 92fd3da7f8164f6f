//! Per-tick commands, their combat classes and the input tokens they leave in
//! a fighter's buffer.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::character::CharacterSpec;

/// One of the two fighters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    #[inline]
    pub fn opponent(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facing {
    Left,
    Right,
}

impl Facing {
    /// +1 when facing towards larger positions.
    #[inline]
    pub fn sign(self) -> i32 {
        match self {
            Facing::Left => -1,
            Facing::Right => 1,
        }
    }
}

/// Resolved combat category of an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentClass {
    Attack,
    Block,
    Grab,
    Move,
    Idle,
}

impl IntentClass {
    pub const ALL: [IntentClass; 5] = [
        IntentClass::Attack,
        IntentClass::Block,
        IntentClass::Grab,
        IntentClass::Move,
        IntentClass::Idle,
    ];

    /// The class that beats `self` in the attack/grab/block triad, if any.
    pub fn counter(self) -> Option<IntentClass> {
        match self {
            IntentClass::Attack => Some(IntentClass::Block),
            IntentClass::Grab => Some(IntentClass::Attack),
            IntentClass::Block => Some(IntentClass::Grab),
            IntentClass::Move | IntentClass::Idle => None,
        }
    }
}

/// Index of a move inside its owner's [`CharacterSpec::moves`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MoveId(pub u8);

/// Stick motions that only feed the input buffer (no displacement).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Down,
    DownForward,
}

/// A per-tick player command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    MoveLeft,
    MoveRight,
    Motion(Motion),
    Attack(MoveId),
    Special(MoveId),
    Block,
    Grab,
    Idle,
}

impl Action {
    pub fn intent(self) -> IntentClass {
        match self {
            Action::MoveLeft | Action::MoveRight | Action::Motion(_) => IntentClass::Move,
            Action::Attack(_) | Action::Special(_) => IntentClass::Attack,
            Action::Block => IntentClass::Block,
            Action::Grab => IntentClass::Grab,
            Action::Idle => IntentClass::Idle,
        }
    }

    /// Token this action leaves in the input buffer when performed while facing `facing`.
    pub fn input_token(self, facing: Facing) -> InputToken {
        match (self, facing) {
            (Action::MoveRight, Facing::Right) | (Action::MoveLeft, Facing::Left) => {
                InputToken::Forward
            }
            (Action::MoveRight, Facing::Left) | (Action::MoveLeft, Facing::Right) => {
                InputToken::Back
            }
            (Action::Motion(Motion::Down), _) => InputToken::Down,
            (Action::Motion(Motion::DownForward), _) => InputToken::DownForward,
            (Action::Attack(_), _) => InputToken::Attack,
            (Action::Special(_), _) => InputToken::ForwardAttack,
            (Action::Block, _) => InputToken::Block,
            (Action::Grab, _) => InputToken::Grab,
            (Action::Idle, _) => InputToken::Neutral,
        }
    }

    /// Maps a move written from the left side (facing right) onto a fighter
    /// facing `facing`: walking directions swap when facing left.
    pub fn oriented(self, facing: Facing) -> Action {
        match (self, facing) {
            (Action::MoveLeft, Facing::Left) => Action::MoveRight,
            (Action::MoveRight, Facing::Left) => Action::MoveLeft,
            (a, _) => a,
        }
    }

    /// Stable textual identifier, e.g. `attack:punch`, `block`, `motion:down`.
    pub fn label(self, character: &CharacterSpec) -> String {
        match self {
            Action::MoveLeft => "move_left".into(),
            Action::MoveRight => "move_right".into(),
            Action::Motion(Motion::Down) => "motion:down".into(),
            Action::Motion(Motion::DownForward) => "motion:down_forward".into(),
            Action::Attack(id) => format!("attack:{}", character.move_spec(id).id),
            Action::Special(id) => format!("special:{}", character.move_spec(id).id),
            Action::Block => "block".into(),
            Action::Grab => "grab".into(),
            Action::Idle => "idle".into(),
        }
    }

    /// Inverse of [`Action::label`].
    pub fn parse(label: &str, character: &CharacterSpec) -> Option<Action> {
        let action = match label {
            "move_left" => Action::MoveLeft,
            "move_right" => Action::MoveRight,
            "motion:down" => Action::Motion(Motion::Down),
            "motion:down_forward" => Action::Motion(Motion::DownForward),
            "block" => Action::Block,
            "grab" => Action::Grab,
            "idle" => Action::Idle,
            other => {
                let (kind, name) = other.split_once(':')?;
                let id = character.find_move(name)?;
                let spec = character.move_spec(id);
                match kind {
                    "attack" if !spec.is_special && !spec.is_grab => Action::Attack(id),
                    "special" if spec.is_special => Action::Special(id),
                    _ => return None,
                }
            }
        };
        Some(action)
    }
}

/// Tokens recorded in the input buffer, one per tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputToken {
    Neutral,
    Forward,
    Back,
    Down,
    DownForward,
    Attack,
    /// Forward + attack, the button press that completes a special motion.
    ForwardAttack,
    Block,
    Grab,
}
