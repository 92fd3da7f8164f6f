//! Character and move definitions, loaded from JSON.
//!
//! ```json
//! {
//!   "name": "ryu", "max_health": 100, "walk_speed": 2,
//!   "moves": [
//!     { "id": "punch", "startup": 3, "active": 2, "recovery": 4, "damage": 10,
//!       "range": 10, "hitstun": 6, "blockstun": 3 },
//!     { "id": "grab", "is_grab": true, ... },
//!     { "id": "fireball", "is_special": true,
//!       "input_pattern": ["down", "down_forward", "forward_attack"],
//!       "projectile": { "speed": 4, "damage": 15 }, ... }
//!   ]
//! }
//! ```
//!
//! Durations are in ticks, distances in stage units, damage in health points.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::action::{Action, InputToken, Motion, MoveId};
use super::EngineError;

const DEFAULT_FIGHTER: &str = include_str!("../../data/characters/ryu.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectileSpec {
    pub speed: i32,
    pub damage: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveSpec {
    pub id: String,
    pub startup: u16,
    pub active: u16,
    pub recovery: u16,
    pub damage: i32,
    pub range: i32,
    #[serde(default)]
    pub hitstun: u16,
    #[serde(default)]
    pub blockstun: u16,
    #[serde(default)]
    pub is_special: bool,
    #[serde(default)]
    pub is_grab: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_pattern: Option<Vec<InputToken>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projectile: Option<ProjectileSpec>,
}

impl MoveSpec {
    fn validate(&self) -> Result<(), String> {
        if self.active < 1 {
            return Err(format!("move `{}`: active must be >= 1", self.id));
        }
        if self.damage < 0 {
            return Err(format!("move `{}`: damage must be >= 0", self.id));
        }
        if self.range <= 0 {
            return Err(format!("move `{}`: range must be > 0", self.id));
        }
        match (&self.input_pattern, self.is_special) {
            (Some(p), true) if p.is_empty() => {
                return Err(format!("move `{}`: empty input pattern", self.id))
            }
            (Some(_), true) | (None, false) => {}
            _ => {
                return Err(format!(
                    "move `{}`: input_pattern must be present iff is_special",
                    self.id
                ))
            }
        }
        if self.is_special && self.is_grab {
            return Err(format!("move `{}`: cannot be both special and grab", self.id));
        }
        if let Some(p) = self.projectile {
            if p.speed <= 0 || p.damage < 0 {
                return Err(format!("move `{}`: bad projectile", self.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterSpec {
    pub name: String,
    pub max_health: i32,
    pub walk_speed: i32,
    pub moves: Vec<MoveSpec>,
}

impl CharacterSpec {
    /// The bundled default character.
    pub fn default_fighter() -> Self {
        Self::from_json(DEFAULT_FIGHTER).expect("bundled character is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, EngineError> {
        let spec: CharacterSpec =
            serde_json::from_str(text).map_err(|e| EngineError::InvalidCharacter(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::InvalidCharacter(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |m: String| Err(EngineError::InvalidCharacter(m));
        if self.max_health <= 0 {
            return fail(format!("{}: max_health must be > 0", self.name));
        }
        if self.walk_speed <= 0 {
            return fail(format!("{}: walk_speed must be > 0", self.name));
        }
        if self.moves.len() > u8::MAX as usize {
            return fail(format!("{}: too many moves", self.name));
        }
        for (i, m) in self.moves.iter().enumerate() {
            m.validate().map_err(EngineError::InvalidCharacter)?;
            if self.moves[..i].iter().any(|o| o.id == m.id) {
                return fail(format!("{}: duplicate move id `{}`", self.name, m.id));
            }
        }
        if self.normal_attacks().next().is_none() {
            return fail(format!("{}: needs at least one normal attack", self.name));
        }
        if self.grab_move().is_none() {
            return fail(format!("{}: needs a grab", self.name));
        }
        Ok(())
    }

    #[inline]
    pub fn move_spec(&self, id: MoveId) -> &MoveSpec {
        &self.moves[id.0 as usize]
    }

    pub fn find_move(&self, name: &str) -> Option<MoveId> {
        self.moves
            .iter()
            .position(|m| m.id == name)
            .map(|i| MoveId(i as u8))
    }

    pub fn normal_attacks(&self) -> impl Iterator<Item = MoveId> + '_ {
        self.moves
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_special && !m.is_grab)
            .map(|(i, _)| MoveId(i as u8))
    }

    pub fn specials(&self) -> impl Iterator<Item = MoveId> + '_ {
        self.moves
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_special)
            .map(|(i, _)| MoveId(i as u8))
    }

    /// The move performed by [`Action::Grab`]: the first grab in the list.
    pub fn grab_move(&self) -> Option<MoveId> {
        self.moves
            .iter()
            .position(|m| m.is_grab)
            .map(|i| MoveId(i as u8))
    }

    /// Normal attack with the shortest startup (first on ties).
    pub fn fastest_attack(&self) -> MoveId {
        self.normal_attacks()
            .min_by_key(|id| self.move_spec(*id).startup)
            .expect("validated character has a normal attack")
    }

    /// Every action this character can ever express, in canonical order.
    pub fn all_actions(&self) -> Vec<Action> {
        let mut out = vec![
            Action::MoveLeft,
            Action::MoveRight,
            Action::Motion(Motion::Down),
            Action::Motion(Motion::DownForward),
        ];
        out.extend(self.normal_attacks().map(Action::Attack));
        out.push(Action::Block);
        out.push(Action::Grab);
        out.extend(self.specials().map(Action::Special));
        out.push(Action::Idle);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fighter_matches_documented_frame_data() {
        let ch = CharacterSpec::default_fighter();
        assert_eq!(ch.max_health, 100);
        assert_eq!(ch.walk_speed, 2);
        let punch = ch.move_spec(ch.find_move("punch").unwrap());
        assert_eq!(
            (punch.startup, punch.active, punch.recovery, punch.damage, punch.range),
            (3, 2, 4, 10, 10)
        );
        assert_eq!((punch.hitstun, punch.blockstun), (6, 3));
        let heavy = ch.move_spec(ch.find_move("heavy").unwrap());
        assert_eq!(
            (heavy.startup, heavy.active, heavy.recovery, heavy.damage, heavy.range),
            (6, 2, 8, 18, 12)
        );
        let grab = ch.move_spec(ch.grab_move().unwrap());
        assert_eq!(
            (grab.startup, grab.active, grab.recovery, grab.damage, grab.range),
            (2, 1, 6, 12, 5)
        );
        let fb = ch.move_spec(ch.find_move("fireball").unwrap());
        assert_eq!(fb.recovery, 12);
        assert_eq!(fb.projectile, Some(ProjectileSpec { speed: 4, damage: 15 }));
        assert_eq!(ch.fastest_attack(), ch.find_move("punch").unwrap());
    }

    #[test]
    fn rejects_pattern_without_special_flag() {
        let mut ch = CharacterSpec::default_fighter();
        ch.moves[0].input_pattern = Some(vec![InputToken::Down]);
        assert!(matches!(ch.validate(), Err(EngineError::InvalidCharacter(_))));
    }

    #[test]
    fn rejects_duplicate_ids_and_missing_grab() {
        let mut ch = CharacterSpec::default_fighter();
        ch.moves[1].id = "punch".into();
        assert!(ch.validate().is_err());

        let mut ch = CharacterSpec::default_fighter();
        ch.moves.retain(|m| !m.is_grab);
        assert!(ch.validate().is_err());
    }

    #[test]
    fn rejects_zero_range_and_active() {
        let mut ch = CharacterSpec::default_fighter();
        ch.moves[0].range = 0;
        assert!(ch.validate().is_err());
        let mut ch = CharacterSpec::default_fighter();
        ch.moves[0].active = 0;
        assert!(ch.validate().is_err());
    }
}
