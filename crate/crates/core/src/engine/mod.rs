//! Deterministic tick-based two-fighter combat on a one-dimensional stage.
//!
//! Each tick both commands are collected, then resolved together:
//!
//! 1. input tokens are appended to each fighter's buffer;
//! 2. fighters that can act start moves, block or walk (no walking through
//!    the opponent, no leaving the stage);
//! 3. active moves in range are resolved against the defender's committed
//!    class with [`resolve_interaction`]; a move committed earlier beats one
//!    committed later, simultaneous commitments follow the triad;
//! 4. projectiles advance and collide;
//! 5. phase timers count down, except for phases entered this tick.
//!
//! A phase timer is the number of future ticks the phase still lasts.

mod action;
mod character;
mod input;
mod interaction;
mod observation;
mod state;

pub use action::{Action, Facing, InputToken, IntentClass, Motion, MoveId, Side};
pub use character::{CharacterSpec, MoveSpec, ProjectileSpec};
pub use input::{match_input_pattern, InputHistory, DEFAULT_MAX_GAP, INPUT_BUFFER_LEN};
pub use interaction::{resolve_interaction, InteractionOutcome};
pub use observation::{committed_class, Observation, OBSERVATION_FACTS};
pub use state::{FighterState, GameState, Phase, Projectile, TickEvents};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bumped whenever a rule change would make old replays play out differently.
pub const ENGINE_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("illegal action {action:?} for {side} fighter")]
    IllegalAction { side: Side, action: Action },
    #[error("round is already over")]
    RoundOver,
    #[error("round is not over yet")]
    RoundNotOver,
    #[error("input pattern is empty")]
    EmptyPattern,
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
    #[error("invalid rules: {0}")]
    InvalidRules(String),
}

/// Stage geometry, timing and match format.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Rules {
    pub stage_length: i32,
    pub wall_epsilon: i32,
    pub ticks_per_second: u32,
    pub round_length: u32,
    pub max_gap: u32,
    pub rounds_to_win: u8,
    /// Hard cap on rounds (drawn rounds are replayed until this cap).
    pub max_rounds: u8,
    pub start_positions: [i32; 2],
}

impl Default for Rules {
    fn default() -> Self {
        Self {
            stage_length: 100,
            wall_epsilon: 2,
            ticks_per_second: 10,
            round_length: 990,
            max_gap: DEFAULT_MAX_GAP,
            rounds_to_win: 2,
            max_rounds: 5,
            start_positions: [30, 70],
        }
    }
}

impl Rules {
    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |m: &str| Err(EngineError::InvalidRules(m.to_string()));
        if self.stage_length <= 0 {
            return fail("stage_length must be > 0");
        }
        if self.round_length == 0 {
            return fail("round_length must be > 0");
        }
        if self.rounds_to_win == 0 || self.max_rounds < self.rounds_to_win {
            return fail("need 0 < rounds_to_win <= max_rounds");
        }
        let [l, r] = self.start_positions;
        if !(0 <= l && l <= r && r <= self.stage_length) {
            return fail("start positions must be ordered and on stage");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Left,
    Right,
    Draw,
}

impl From<Side> for Winner {
    fn from(side: Side) -> Self {
        match side {
            Side::Left => Winner::Left,
            Side::Right => Winner::Right,
        }
    }
}

impl Winner {
    pub fn side(self) -> Option<Side> {
        match self {
            Winner::Left => Some(Side::Left),
            Winner::Right => Some(Side::Right),
            Winner::Draw => None,
        }
    }

    fn by_higher<T: Ord>(left: T, right: T) -> Self {
        match left.cmp(&right) {
            std::cmp::Ordering::Greater => Winner::Left,
            std::cmp::Ordering::Less => Winner::Right,
            std::cmp::Ordering::Equal => Winner::Draw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundCause {
    #[serde(rename = "ko")]
    Ko,
    #[serde(rename = "timeout")]
    TimeOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoundResult {
    pub winner: Winner,
    pub cause: RoundCause,
}

#[derive(Debug, Clone, Copy)]
enum Exchange {
    Hit,
    Blocked,
    /// Beaten by the triad or teched: the move is spent without effect.
    Whiff,
}

/// Immutable match context: rules plus both characters.
#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    rules: Rules,
    characters: [CharacterSpec; 2],
    actions: [Vec<Action>; 2],
}

impl Engine {
    pub fn new(rules: Rules, characters: [CharacterSpec; 2]) -> Result<Self, EngineError> {
        rules.validate()?;
        for c in &characters {
            c.validate()?;
        }
        let actions = [characters[0].all_actions(), characters[1].all_actions()];
        Ok(Self {
            rules,
            characters,
            actions,
        })
    }

    /// Default rules, default fighter on both sides.
    pub fn standard() -> Self {
        let ch = CharacterSpec::default_fighter();
        Self::new(Rules::default(), [ch.clone(), ch]).expect("defaults are valid")
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn character(&self, side: Side) -> &CharacterSpec {
        &self.characters[side.index()]
    }

    pub fn characters(&self) -> &[CharacterSpec; 2] {
        &self.characters
    }

    /// Every action `side` could ever express, canonical order.
    pub fn action_space(&self, side: Side) -> &[Action] {
        &self.actions[side.index()]
    }

    fn fresh_fighters(&self) -> [FighterState; 2] {
        let [l, r] = self.rules.start_positions;
        [
            FighterState::new(l, self.characters[0].max_health, Facing::Right),
            FighterState::new(r, self.characters[1].max_health, Facing::Left),
        ]
    }

    pub fn initial_state(&self, seed: u64) -> GameState {
        GameState {
            tick: 0,
            timer: self.rules.round_length,
            fighters: self.fresh_fighters(),
            projectiles: [None, None],
            round_wins: [0, 0],
            rounds_played: 0,
            match_damage: [0, 0],
            rng_seed: seed,
            training: false,
        }
    }

    /// A state where health and timer are frozen and the round never ends.
    pub fn training_state(&self, seed: u64) -> GameState {
        GameState {
            training: true,
            ..self.initial_state(seed)
        }
    }

    pub fn is_legal(&self, state: &GameState, side: Side, action: Action) -> bool {
        let f = state.fighter(side);
        if !f.can_act() {
            return action == Action::Idle;
        }
        let ch = self.character(side);
        match action {
            Action::Attack(id) => ch
                .moves
                .get(id.0 as usize)
                .is_some_and(|m| !m.is_special && !m.is_grab),
            Action::Special(id) => {
                let Some(m) = ch.moves.get(id.0 as usize) else {
                    return false;
                };
                let Some(pattern) = m.input_pattern.as_deref().filter(|_| m.is_special) else {
                    return false;
                };
                if m.projectile.is_some() && state.projectiles[side.index()].is_some() {
                    return false;
                }
                input::completes_pattern(&f.input_history, pattern, self.rules.max_gap)
            }
            _ => true,
        }
    }

    /// Appends the legal actions for `side` to `out` (cleared first), canonical order.
    pub fn legal_actions_into(&self, state: &GameState, side: Side, out: &mut Vec<Action>) {
        out.clear();
        if !state.fighter(side).can_act() {
            out.push(Action::Idle);
            return;
        }
        out.extend(
            self.action_space(side)
                .iter()
                .copied()
                .filter(|a| self.is_legal(state, side, *a)),
        );
    }

    /// Stunned or busy fighters get `[Idle]`; otherwise everything except
    /// specials whose input pattern is not buffered.
    pub fn legal_actions(&self, state: &GameState, side: Side) -> Vec<Action> {
        let mut out = Vec::with_capacity(self.action_space(side).len());
        self.legal_actions_into(state, side, &mut out);
        out
    }

    pub fn observe(&self, state: &GameState, side: Side) -> Observation {
        observation::observe(&self.rules, &self.characters, state, side)
    }

    pub fn round_result(&self, state: &GameState) -> Option<RoundResult> {
        if state.training {
            return None;
        }
        let [l, r] = [state.fighters[0].health, state.fighters[1].health];
        if l <= 0 || r <= 0 {
            let winner = match (l <= 0, r <= 0) {
                (true, true) => Winner::Draw,
                (false, true) => Winner::Left,
                _ => Winner::Right,
            };
            return Some(RoundResult {
                winner,
                cause: RoundCause::Ko,
            });
        }
        (state.timer == 0).then(|| RoundResult {
            winner: Winner::by_higher(l, r),
            cause: RoundCause::TimeOut,
        })
    }

    /// Scores a finished round and sets up the next one. Drawn rounds score nothing.
    pub fn finish_round(&self, state: &GameState) -> Result<(GameState, RoundResult), EngineError> {
        let result = self.round_result(state).ok_or(EngineError::RoundNotOver)?;
        let mut next = *state;
        if let Some(side) = result.winner.side() {
            next.round_wins[side.index()] += 1;
        }
        next.rounds_played += 1;
        next.fighters = self.fresh_fighters();
        next.projectiles = [None, None];
        next.timer = self.rules.round_length;
        Ok((next, result))
    }

    /// Winner once a side reached `rounds_to_win`, or after `max_rounds` by
    /// round wins, then total damage dealt.
    pub fn match_result(&self, state: &GameState) -> Option<Winner> {
        let [l, r] = state.round_wins;
        let need = self.rules.rounds_to_win;
        if l >= need || r >= need {
            return Some(Winner::by_higher(l, r));
        }
        if state.rounds_played >= self.rules.max_rounds {
            return Some(match Winner::by_higher(l, r) {
                Winner::Draw => Winner::by_higher(state.match_damage[0], state.match_damage[1]),
                w => w,
            });
        }
        None
    }

    pub fn step(&self, state: &GameState, left: Action, right: Action) -> Result<GameState, EngineError> {
        if self.round_result(state).is_some() {
            return Err(EngineError::RoundOver);
        }
        let actions = [left, right];
        for side in Side::BOTH {
            let action = actions[side.index()];
            if !self.is_legal(state, side, action) {
                return Err(EngineError::IllegalAction { side, action });
            }
        }

        Ok(self.step_unchecked(state, left, right))
    }

    /// `step` without the round-over and legality checks, for callers that
    /// only feed it actions drawn from `legal_actions`.
    pub(crate) fn step_unchecked(&self, state: &GameState, left: Action, right: Action) -> GameState {
        debug_assert!(self.round_result(state).is_none());
        let actions = [left, right];
        let mut s = *state;
        let mut fresh = [false; 2];
        for (f, a) in s.fighters.iter_mut().zip(actions) {
            f.events = TickEvents::default();
            f.input_history.push(a.input_token(f.facing));
        }

        self.apply_commands(&mut s, actions, &mut fresh);
        self.resolve_melee(&mut s, &mut fresh);
        self.advance_projectiles(&mut s, &mut fresh);

        for i in 0..2 {
            if !fresh[i] {
                self.tick_phase(&mut s.fighters[i], &self.characters[i]);
            }
        }

        let [l, r] = [s.fighters[0].position, s.fighters[1].position];
        if l != r {
            let left_faces = if l < r { Facing::Right } else { Facing::Left };
            s.fighters[0].facing = left_faces;
            s.fighters[1].facing = if left_faces == Facing::Right { Facing::Left } else { Facing::Right };
        }

        if !s.training {
            s.timer = s.timer.saturating_sub(1);
        }
        s.tick += 1;
        s
    }

    fn apply_commands(&self, s: &mut GameState, actions: [Action; 2], fresh: &mut [bool; 2]) {
        let old = [s.fighters[0].position, s.fighters[1].position];
        let mut pos = old;
        for i in 0..2 {
            let ch = &self.characters[i];
            let tick = s.tick;
            let f = &mut s.fighters[i];
            if !f.can_act() {
                continue;
            }
            match actions[i] {
                Action::MoveLeft => {
                    pos[i] -= ch.walk_speed;
                    f.phase = Phase::Neutral;
                }
                Action::MoveRight => {
                    pos[i] += ch.walk_speed;
                    f.phase = Phase::Neutral;
                }
                Action::Motion(_) | Action::Idle => f.phase = Phase::Neutral,
                Action::Block => f.phase = Phase::Blocking,
                Action::Attack(id) => {
                    start_move(f, ch, id, tick);
                    fresh[i] = true;
                }
                Action::Special(id) => {
                    start_move(f, ch, id, tick);
                    f.input_history.clear();
                    fresh[i] = true;
                }
                Action::Grab => {
                    let id = ch.grab_move().expect("validated character has a grab");
                    start_move(f, ch, id, tick);
                    fresh[i] = true;
                }
            }
        }

        let stage = self.rules.stage_length;
        let mut l = pos[0].clamp(0, stage);
        let mut r = pos[1].clamp(0, stage);
        if l > r {
            match (l != old[0], r != old[1]) {
                (true, false) => l = r,
                (false, true) => r = l,
                _ => {
                    let mid = (l + r) / 2;
                    l = mid;
                    r = mid;
                }
            }
        }
        s.fighters[0].position = l;
        s.fighters[1].position = r;
    }

    /// Class the defender presents against a move committed on `attacker_started`.
    fn defender_class(&self, def: &FighterState, side: usize, attacker_started: Option<u32>) -> IntentClass {
        match def.phase {
            Phase::Startup | Phase::Active => {
                if attacker_started.is_some_and(|t| def.move_started > t) {
                    IntentClass::Idle
                } else {
                    committed_class(def, &self.characters[side]).unwrap_or(IntentClass::Idle)
                }
            }
            Phase::Blocking | Phase::Blockstun => IntentClass::Block,
            _ => IntentClass::Idle,
        }
    }

    fn resolve_melee(&self, s: &mut GameState, fresh: &mut [bool; 2]) {
        let snap = *s;
        let distance = snap.distance();
        for i in 0..2 {
            let att = &snap.fighters[i];
            if att.phase != Phase::Active || att.move_spent {
                continue;
            }
            let Some(mid) = att.current_move else { continue };
            let mv = self.characters[i].move_spec(mid);
            if let Some(p) = mv.projectile {
                let side = if i == 0 { Side::Left } else { Side::Right };
                s.projectiles[i] = Some(Projectile {
                    owner: side,
                    position: att.position,
                    velocity: p.speed * att.facing.sign(),
                    damage: p.damage,
                    hitstun: mv.hitstun,
                    blockstun: mv.blockstun,
                });
                s.fighters[i].move_spent = true;
                continue;
            }
            if distance > mv.range {
                continue;
            }
            let d = 1 - i;
            let a_class = if mv.is_grab { IntentClass::Grab } else { IntentClass::Attack };
            let d_class = self.defender_class(&snap.fighters[d], d, Some(att.move_started));
            let exchange = match resolve_interaction(a_class, d_class) {
                InteractionOutcome::LeftWins | InteractionOutcome::Trade => Exchange::Hit,
                InteractionOutcome::RightWins if d_class == IntentClass::Block => Exchange::Blocked,
                _ => Exchange::Whiff,
            };
            s.fighters[i].move_spent = true;
            let was_in_hitstun = snap.fighters[d].phase == Phase::Hitstun;
            self.apply_exchange(s, i, exchange, mv.damage, mv.hitstun, mv.blockstun, was_in_hitstun);
            if !matches!(exchange, Exchange::Whiff) {
                fresh[d] = true;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_exchange(
        &self,
        s: &mut GameState,
        attacker: usize,
        exchange: Exchange,
        damage: i32,
        hitstun: u16,
        blockstun: u16,
        was_in_hitstun: bool,
    ) {
        let d = 1 - attacker;
        let training = s.training;
        match exchange {
            Exchange::Hit => {
                let def = &mut s.fighters[d];
                let applied = if training { damage } else { damage.min(def.health) };
                if !training {
                    def.health -= applied;
                }
                def.combo_hits_taken = if was_in_hitstun { def.combo_hits_taken + 1 } else { 1 };
                def.current_move = None;
                def.events.took_hit = true;
                set_phase(def, Phase::Hitstun, hitstun);
                if def.phase == Phase::Neutral {
                    def.combo_hits_taken = 0;
                }
                let att = &mut s.fighters[attacker];
                att.damage_dealt += applied;
                att.events.landed_hit = true;
                s.match_damage[attacker] += applied;
            }
            Exchange::Blocked => {
                let def = &mut s.fighters[d];
                def.events.blocked = true;
                if blockstun > 0 {
                    set_phase(def, Phase::Blockstun, blockstun);
                }
                s.fighters[attacker].events.hit_blocked = true;
            }
            Exchange::Whiff => {}
        }
    }

    fn advance_projectiles(&self, s: &mut GameState, fresh: &mut [bool; 2]) {
        let stage = self.rules.stage_length;
        for i in 0..2 {
            let Some(mut p) = s.projectiles[i] else { continue };
            let d = 1 - i;
            let old = p.position;
            let new = old + p.velocity;
            let target = s.fighters[d].position;
            if old.min(new) <= target && target <= old.max(new) {
                let d_class = self.defender_class(&s.fighters[d], d, None);
                let exchange = match resolve_interaction(IntentClass::Attack, d_class) {
                    InteractionOutcome::RightWins => Exchange::Blocked,
                    _ => Exchange::Hit,
                };
                let was_in_hitstun = s.fighters[d].phase == Phase::Hitstun;
                self.apply_exchange(s, i, exchange, p.damage, p.hitstun, p.blockstun, was_in_hitstun);
                fresh[d] = true;
                s.projectiles[i] = None;
            } else if new < 0 || new > stage {
                s.projectiles[i] = None;
            } else {
                p.position = new;
                s.projectiles[i] = Some(p);
            }
        }
    }

    fn tick_phase(&self, f: &mut FighterState, ch: &CharacterSpec) {
        if !f.phase.is_timed() {
            return;
        }
        f.phase_timer = f.phase_timer.saturating_sub(1);
        if f.phase_timer > 0 {
            return;
        }
        match f.phase {
            Phase::Startup => {
                let mv = ch.move_spec(f.current_move.expect("startup has a move"));
                set_phase(f, Phase::Active, mv.active);
            }
            Phase::Active => {
                let mv = ch.move_spec(f.current_move.expect("active has a move"));
                set_phase(f, Phase::Recovery, mv.recovery);
            }
            Phase::Hitstun => {
                f.combo_hits_taken = 0;
                set_phase(f, Phase::Neutral, 0);
            }
            _ => set_phase(f, Phase::Neutral, 0),
        }
    }
}

fn start_move(f: &mut FighterState, ch: &CharacterSpec, id: MoveId, tick: u32) {
    let mv = ch.move_spec(id);
    f.current_move = Some(id);
    f.move_spent = false;
    f.move_started = tick;
    if mv.startup > 0 {
        set_phase(f, Phase::Startup, mv.startup);
    } else {
        set_phase(f, Phase::Active, mv.active);
    }
}

/// Enters `phase` for `ticks`; a zero-length recovery or stun collapses to Neutral.
fn set_phase(f: &mut FighterState, phase: Phase, ticks: u16) {
    if phase.is_timed() && ticks == 0 {
        f.phase = Phase::Neutral;
        f.phase_timer = 0;
        f.current_move = None;
        f.move_spent = false;
        return;
    }
    f.phase = phase;
    f.phase_timer = if phase.is_timed() { ticks } else { 0 };
    if matches!(phase, Phase::Neutral | Phase::Blocking | Phase::Hitstun | Phase::Blockstun) {
        f.current_move = None;
        f.move_spent = false;
    }
}
