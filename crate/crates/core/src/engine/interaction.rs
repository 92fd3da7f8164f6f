use serde::{Deserialize, Serialize};

use super::action::IntentClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionOutcome {
    LeftWins,
    RightWins,
    /// Both attacks land.
    Trade,
    Neutral,
}

impl InteractionOutcome {
    pub fn mirror(self) -> Self {
        match self {
            InteractionOutcome::LeftWins => InteractionOutcome::RightWins,
            InteractionOutcome::RightWins => InteractionOutcome::LeftWins,
            other => other,
        }
    }
}

/// Attack beats Grab, Grab beats Block, Block beats Attack. An aggressive
/// intent (Attack or Grab) beats an opponent who is only moving or idle;
/// Move and Idle never beat anything.
pub fn resolve_interaction(left: IntentClass, right: IntentClass) -> InteractionOutcome {
    use IntentClass::*;
    use InteractionOutcome::*;
    match (left, right) {
        (Attack, Attack) => Trade,
        (Attack, Grab) | (Grab, Block) | (Block, Attack) => LeftWins,
        (Grab, Attack) | (Block, Grab) | (Attack, Block) => RightWins,
        (Attack | Grab, Move | Idle) => LeftWins,
        (Move | Idle, Attack | Grab) => RightWins,
        _ => Neutral,
    }
}
