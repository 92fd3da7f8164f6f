//! The input-reading baseline: peek at the opponent's same-tick intent and
//! play its triad counter with probability `difficulty`.

use rand::Rng;

use crate::engine::{committed_class, Action, Engine, GameState, IntentClass, Side};

/// Classes drawn when the read is skipped.
pub const RANDOM_CLASSES: [IntentClass; 4] =
    [IntentClass::Attack, IntentClass::Block, IntentClass::Grab, IntentClass::Move];

/// What the opponent is doing this tick, as an input reader would see it:
/// a committed strike or grab first, then an incoming projectile (read as an
/// attack), then the class of the action it just chose.
pub fn opponent_intent(engine: &Engine, state: &GameState, opponent: Side, action: Action) -> IntentClass {
    let f = state.fighter(opponent);
    if let Some(class @ (IntentClass::Attack | IntentClass::Grab)) = committed_class(f, engine.character(opponent)) {
        return class;
    }
    let me = state.fighter(opponent.opponent());
    let incoming = state.projectiles[opponent.index()]
        .is_some_and(|p| (me.position - p.position).signum() == p.velocity.signum() || me.position == p.position);
    if incoming {
        return IntentClass::Attack;
    }
    action.intent()
}

/// The class the reader decides on, and whether it came from a read.
///
/// With probability `difficulty` the counter of `opponent` (Move when there
/// is none, meaning "approach"); otherwise uniform over [`RANDOM_CLASSES`].
pub fn input_read_class<R: Rng + ?Sized>(opponent: IntentClass, difficulty: f64, rng: &mut R) -> (IntentClass, bool) {
    if rng.gen_bool(difficulty.clamp(0.0, 1.0)) {
        (opponent.counter().unwrap_or(IntentClass::Move), true)
    } else {
        (RANDOM_CLASSES[rng.gen_range(0..RANDOM_CLASSES.len())], false)
    }
}

/// One step towards the opponent, or Idle when already on top of it.
pub fn approach(state: &GameState, side: Side) -> Action {
    let me = state.fighter(side).position;
    let them = state.fighter(side.opponent()).position;
    match me.cmp(&them) {
        std::cmp::Ordering::Less => Action::MoveRight,
        std::cmp::Ordering::Greater => Action::MoveLeft,
        std::cmp::Ordering::Equal => Action::Idle,
    }
}

/// Turns a class into a concrete action for `side`.
///
/// A read counter is range-aware: the quickest normal attack that reaches, a
/// grab only in grab range, otherwise step in. A random class is realized
/// literally (any normal attack, any walking direction).
pub fn realize<R: Rng + ?Sized>(
    class: IntentClass,
    read: bool,
    engine: &Engine,
    state: &GameState,
    side: Side,
    rng: &mut R,
) -> Action {
    if !state.fighter(side).can_act() {
        return Action::Idle;
    }
    let ch = engine.character(side);
    let dist = state.distance();
    match (class, read) {
        (IntentClass::Block, _) => Action::Block,
        (IntentClass::Attack, true) => ch
            .normal_attacks()
            .filter(|&m| ch.move_spec(m).range >= dist)
            .min_by_key(|&m| (ch.move_spec(m).startup, m.0))
            .map_or_else(|| approach(state, side), Action::Attack),
        (IntentClass::Attack, false) => {
            let attacks: Vec<_> = ch.normal_attacks().collect();
            Action::Attack(attacks[rng.gen_range(0..attacks.len())])
        }
        (IntentClass::Grab, true) => match ch.grab_move() {
            Some(g) if ch.move_spec(g).range >= dist => Action::Grab,
            _ => approach(state, side),
        },
        (IntentClass::Grab, false) => Action::Grab,
        (IntentClass::Move | IntentClass::Idle, true) => approach(state, side),
        (IntentClass::Move | IntentClass::Idle, false) => {
            if rng.gen_bool(0.5) {
                Action::MoveLeft
            } else {
                Action::MoveRight
            }
        }
    }
}

/// Full input-reading decision for `side` given the opponent's intent.
pub fn input_read_policy<R: Rng + ?Sized>(
    opponent: IntentClass,
    difficulty: f64,
    engine: &Engine,
    state: &GameState,
    side: Side,
    rng: &mut R,
) -> Action {
    let (class, read) = input_read_class(opponent, difficulty, rng);
    realize(class, read, engine, state, side, rng)
}
