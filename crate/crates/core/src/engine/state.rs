use serde::{Deserialize, Serialize};

use super::action::{Facing, MoveId, Side};
use super::input::InputHistory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Neutral,
    Startup,
    Active,
    Recovery,
    Hitstun,
    Blockstun,
    Blocking,
}

impl Phase {
    /// Phases in which the fighter accepts a new command.
    #[inline]
    pub fn can_act(self) -> bool {
        matches!(self, Phase::Neutral | Phase::Blocking)
    }

    #[inline]
    pub fn is_timed(self) -> bool {
        !matches!(self, Phase::Neutral | Phase::Blocking)
    }
}

/// Things that happened to a fighter during the most recent tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TickEvents {
    /// One of our attacks or projectiles connected.
    pub landed_hit: bool,
    /// One of our attacks or projectiles was blocked.
    pub hit_blocked: bool,
    /// We were hit.
    pub took_hit: bool,
    /// We blocked an attack.
    pub blocked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FighterState {
    pub position: i32,
    pub health: i32,
    pub facing: Facing,
    pub phase: Phase,
    pub phase_timer: u16,
    pub current_move: Option<MoveId>,
    /// The current move already hit, was blocked, whiffed against a counter or spawned its projectile.
    pub move_spent: bool,
    /// Tick on which the current move was input; earlier commitments win ties.
    pub move_started: u32,
    pub combo_hits_taken: u16,
    pub damage_dealt: i32,
    pub input_history: InputHistory,
    pub events: TickEvents,
}

impl FighterState {
    pub fn new(position: i32, health: i32, facing: Facing) -> Self {
        Self {
            position,
            health,
            facing,
            phase: Phase::Neutral,
            phase_timer: 0,
            current_move: None,
            move_spent: false,
            move_started: 0,
            combo_hits_taken: 0,
            damage_dealt: 0,
            input_history: InputHistory::default(),
            events: TickEvents::default(),
        }
    }

    #[inline]
    pub fn can_act(&self) -> bool {
        self.phase.can_act()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Projectile {
    pub owner: Side,
    pub position: i32,
    /// Signed displacement per tick.
    pub velocity: i32,
    pub damage: i32,
    pub hitstun: u16,
    pub blockstun: u16,
}

/// Full simulation snapshot. A plain value: [`crate::engine::Engine::step`]
/// returns a new one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub tick: u32,
    /// Ticks remaining in the current round.
    pub timer: u32,
    pub fighters: [FighterState; 2],
    /// At most one live projectile per owner, indexed by [`Side::index`].
    pub projectiles: [Option<Projectile>; 2],
    pub round_wins: [u8; 2],
    /// Rounds completed so far, including drawn ones.
    pub rounds_played: u8,
    /// Damage dealt over the whole match, used as the final tiebreak.
    pub match_damage: [i32; 2],
    pub rng_seed: u64,
    /// Training mode: health and timer are frozen and the round never ends.
    pub training: bool,
}

impl GameState {
    #[inline]
    pub fn fighter(&self, side: Side) -> &FighterState {
        &self.fighters[side.index()]
    }

    #[inline]
    pub fn fighter_mut(&mut self, side: Side) -> &mut FighterState {
        &mut self.fighters[side.index()]
    }

    pub fn projectiles(&self) -> impl Iterator<Item = &Projectile> {
        self.projectiles.iter().flatten()
    }

    pub fn distance(&self) -> i32 {
        (self.fighters[0].position - self.fighters[1].position).abs()
    }
}
