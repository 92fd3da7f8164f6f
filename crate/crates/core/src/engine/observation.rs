use serde::{Deserialize, Serialize};

use super::action::{Facing, IntentClass, Side};
use super::state::{FighterState, GameState, Phase};
use super::{CharacterSpec, Rules};

/// What one fighter knows about the situation when deciding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub distance: i32,
    /// Opponent is in startup or active frames of a strike or special.
    pub opponent_attacking: bool,
    /// Opponent is in startup or active frames of a grab.
    pub opponent_grabbing: bool,
    pub opponent_blocking: bool,
    pub projectile_on_screen: bool,
    /// An opponent projectile is travelling towards us.
    pub incoming_projectile: bool,
    pub damage_dealt: i32,
    pub facing: Facing,
    pub against_wall: bool,
    pub own_health: i32,
    pub opponent_health: i32,
    pub timer: u32,
    pub opponent_in_hitstun: bool,
    pub can_act: bool,
    pub in_hitstun: bool,
    pub landed_hit: bool,
    pub hit_blocked: bool,
    pub took_hit: bool,
    /// Hits in the combo we are currently inflicting.
    pub combo: u16,
}

impl Default for Observation {
    /// Fighters at distance zero, full health, free to act, nothing going on.
    fn default() -> Self {
        Self {
            distance: 0,
            opponent_attacking: false,
            opponent_grabbing: false,
            opponent_blocking: false,
            projectile_on_screen: false,
            incoming_projectile: false,
            damage_dealt: 0,
            facing: Facing::Right,
            against_wall: false,
            own_health: 100,
            opponent_health: 100,
            timer: 0,
            opponent_in_hitstun: false,
            can_act: true,
            in_hitstun: false,
            landed_hit: false,
            hit_blocked: false,
            took_hit: false,
            combo: 0,
        }
    }
}

/// Names accepted by [`Observation::fact`].
pub const OBSERVATION_FACTS: &[&str] = &[
    "distance",
    "opponent_attacking",
    "opponent_grabbing",
    "opponent_blocking",
    "projectile_on_screen",
    "incoming_projectile",
    "damage_dealt",
    "facing_right",
    "against_wall",
    "own_health",
    "opponent_health",
    "health_lead",
    "timer",
    "opponent_in_hitstun",
    "can_act",
    "in_hitstun",
    "landed_hit",
    "hit_blocked",
    "took_hit",
    "combo",
];

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Observation {
    /// Numeric view of a named field; booleans are 0 or 1.
    pub fn fact(&self, name: &str) -> Option<f64> {
        let v = match name {
            "distance" => self.distance as f64,
            "opponent_attacking" => flag(self.opponent_attacking),
            "opponent_grabbing" => flag(self.opponent_grabbing),
            "opponent_blocking" => flag(self.opponent_blocking),
            "projectile_on_screen" => flag(self.projectile_on_screen),
            "incoming_projectile" => flag(self.incoming_projectile),
            "damage_dealt" => self.damage_dealt as f64,
            "facing_right" => flag(self.facing == Facing::Right),
            "against_wall" => flag(self.against_wall),
            "own_health" => self.own_health as f64,
            "opponent_health" => self.opponent_health as f64,
            "health_lead" => (self.own_health - self.opponent_health) as f64,
            "timer" => self.timer as f64,
            "opponent_in_hitstun" => flag(self.opponent_in_hitstun),
            "can_act" => flag(self.can_act),
            "in_hitstun" => flag(self.in_hitstun),
            "landed_hit" => flag(self.landed_hit),
            "hit_blocked" => flag(self.hit_blocked),
            "took_hit" => flag(self.took_hit),
            "combo" => self.combo as f64,
            _ => return None,
        };
        Some(v)
    }
}

/// Class of what `fighter` is committed to, judged from its phase alone.
pub fn committed_class(fighter: &FighterState, character: &CharacterSpec) -> Option<IntentClass> {
    match fighter.phase {
        Phase::Startup | Phase::Active => fighter.current_move.map(|m| {
            if character.move_spec(m).is_grab {
                IntentClass::Grab
            } else {
                IntentClass::Attack
            }
        }),
        Phase::Blocking | Phase::Blockstun => Some(IntentClass::Block),
        _ => None,
    }
}

pub(crate) fn observe(
    rules: &Rules,
    characters: &[CharacterSpec; 2],
    state: &GameState,
    side: Side,
) -> Observation {
    let me = state.fighter(side);
    let opp = state.fighter(side.opponent());
    let opp_class = committed_class(opp, &characters[side.opponent().index()]);
    let incoming_projectile = state.projectiles[side.opponent().index()]
        .map(|p| (me.position - p.position).signum() == p.velocity.signum() || me.position == p.position)
        .unwrap_or(false);
    Observation {
        distance: (me.position - opp.position).abs(),
        opponent_attacking: matches!(opp.phase, Phase::Startup | Phase::Active)
            && opp_class == Some(IntentClass::Attack),
        opponent_grabbing: opp_class == Some(IntentClass::Grab),
        opponent_blocking: opp_class == Some(IntentClass::Block),
        projectile_on_screen: state.projectiles().next().is_some(),
        incoming_projectile,
        damage_dealt: me.damage_dealt,
        facing: me.facing,
        against_wall: me.position <= rules.wall_epsilon
            || me.position >= rules.stage_length - rules.wall_epsilon,
        own_health: me.health,
        opponent_health: opp.health,
        timer: state.timer,
        opponent_in_hitstun: opp.phase == Phase::Hitstun,
        can_act: me.can_act(),
        in_hitstun: me.phase == Phase::Hitstun,
        landed_hit: me.events.landed_hit,
        hit_blocked: me.events.hit_blocked,
        took_hit: me.events.took_hit,
        combo: opp.combo_hits_taken,
    }
}
