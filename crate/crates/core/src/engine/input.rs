//! Input buffer and special-move pattern matching.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::action::InputToken;
use super::EngineError;

/// Ticks of input kept per fighter.
pub const INPUT_BUFFER_LEN: usize = 20;

/// Default maximum tick gap between consecutive pattern tokens.
pub const DEFAULT_MAX_GAP: u32 = 8;

/// Fixed-capacity record of the last [`INPUT_BUFFER_LEN`] input tokens, one per tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InputHistory {
    buf: [InputToken; INPUT_BUFFER_LEN],
    start: u8,
    len: u8,
}

impl Default for InputHistory {
    fn default() -> Self {
        Self {
            buf: [InputToken::Neutral; INPUT_BUFFER_LEN],
            start: 0,
            len: 0,
        }
    }
}

impl InputHistory {
    pub fn push(&mut self, token: InputToken) {
        if (self.len as usize) < INPUT_BUFFER_LEN {
            let idx = (self.start as usize + self.len as usize) % INPUT_BUFFER_LEN;
            self.buf[idx] = token;
            self.len += 1;
        } else {
            self.buf[self.start as usize] = token;
            self.start = ((self.start as usize + 1) % INPUT_BUFFER_LEN) as u8;
        }
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = InputToken> + '_ {
        (0..self.len as usize).map(move |i| self.buf[(self.start as usize + i) % INPUT_BUFFER_LEN])
    }

    pub fn to_vec(&self) -> Vec<InputToken> {
        self.iter().collect()
    }
}

impl Serialize for InputHistory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for InputHistory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let tokens = Vec::<InputToken>::deserialize(d)?;
        let mut h = InputHistory::default();
        for t in tokens {
            h.push(t);
        }
        Ok(h)
    }
}

/// Latest end index of a match of the full pattern, scanning `history` in order.
///
/// Keeping only the latest end of each prefix is sufficient: a later end can
/// only shrink the gap to the next token.
fn latest_match_end(
    history: impl Iterator<Item = InputToken>,
    pattern: &[InputToken],
    max_gap: u32,
) -> Option<usize> {
    const INLINE: usize = 16;
    let mut inline = [None; INLINE];
    let mut heap = Vec::new();
    let best: &mut [Option<usize>] = if pattern.len() <= INLINE {
        &mut inline[..pattern.len()]
    } else {
        heap.resize(pattern.len(), None);
        &mut heap
    };
    for (j, token) in history.enumerate() {
        for k in (0..pattern.len()).rev() {
            if token != pattern[k] {
                continue;
            }
            let reachable = k == 0
                || matches!(best[k - 1], Some(i) if i < j && j - i <= max_gap as usize);
            if reachable {
                best[k] = Some(j);
            }
        }
    }
    best[pattern.len() - 1]
}

/// True iff `pattern` occurs in order within `history` with at most `max_gap`
/// ticks between consecutive matched tokens.
pub fn match_input_pattern(
    history: &[InputToken],
    pattern: &[InputToken],
    max_gap: u32,
) -> Result<bool, EngineError> {
    if pattern.is_empty() {
        return Err(EngineError::EmptyPattern);
    }
    Ok(latest_match_end(history.iter().copied(), pattern, max_gap).is_some())
}

/// True iff pressing `pattern`'s final token now (appended after `history`)
/// completes the pattern.
pub(crate) fn completes_pattern(history: &InputHistory, pattern: &[InputToken], max_gap: u32) -> bool {
    let Some(&last) = pattern.last() else {
        return false;
    };
    let n = history.len();
    let mut linear = [InputToken::Neutral; INPUT_BUFFER_LEN + 1];
    for (slot, t) in linear.iter_mut().zip(history.iter()) {
        *slot = t;
    }
    linear[n] = last;
    // The second-to-last token has to sit within one gap of now.
    if pattern.len() >= 2 {
        let want = pattern[pattern.len() - 2];
        let from = n.saturating_sub(max_gap as usize);
        if !linear[from..n].contains(&want) {
            return false;
        }
    }
    latest_match_end(linear[..=n].iter().copied(), pattern, max_gap) == Some(n)
}
