//! Round-robin tournaments.
//!
//! Every pair plays `games_per_pair` games in each side assignment. Each
//! match gets its own seed derived from the master seed, the pair and the
//! game, so matches are independent and can run on any number of workers
//! without changing the outcome.

use std::cmp::Ordering;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use duel_core::engine::{CharacterSpec, Winner};
use serde::{Deserialize, Serialize};

use crate::config::{read_json, AgentSpec, ConfigError, MatchConfig, Source};
use crate::harness::{run_match, AgentStats, HarnessError};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub name: String,
    pub agent: AgentSpec,
}

/// Tournament roster file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    pub agents: Vec<RosterEntry>,
    /// Character every entry plays; the default fighter when absent.
    #[serde(default)]
    pub character: Option<Source<CharacterSpec>>,
    #[serde(default)]
    pub round_length: Option<u32>,
}

impl Roster {
    pub fn new(agents: Vec<RosterEntry>) -> Self {
        Self {
            agents,
            character: None,
            round_length: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut r: Roster = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut r.agents {
            e.agent.resolve(base)?;
        }
        if let Some(c) = &mut r.character {
            c.resolve(base)?;
        }
        Ok(r)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.agents.len() < 2 {
            return Err(ConfigError::Invalid("a tournament needs at least two entries".into()));
        }
        for (i, e) in self.agents.iter().enumerate() {
            if self.agents[..i].iter().any(|o| o.name == e.name) {
                return Err(ConfigError::Invalid(format!("duplicate entry name {:?}", e.name)));
            }
            if e.agent.is_human() {
                return Err(ConfigError::Invalid(format!("{:?} is human; tournaments are agent only", e.name)));
            }
            e.agent.validate()?;
        }
        Ok(())
    }

    fn match_config(&self, left: usize, right: usize, seed: u64) -> MatchConfig {
        let mut cfg = MatchConfig::new(self.agents[left].agent.clone(), self.agents[right].agent.clone(), seed);
        if let Some(c) = &self.character {
            cfg.characters = [c.clone(), c.clone()];
        }
        if let Some(n) = self.round_length {
            cfg.round_length = n;
        }
        cfg
    }
}

/// One scheduled match: roster indices per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub left: usize,
    pub right: usize,
    pub game: u32,
    pub seed: u64,
}

/// Round-robin schedule, both side assignments per game.
pub fn schedule(entries: usize, games_per_pair: u32, master_seed: u64) -> Vec<Fixture> {
    let mut out = Vec::new();
    for a in 0..entries {
        for b in a + 1..entries {
            for g in 0..games_per_pair {
                for (swap, (left, right)) in [(a, b), (b, a)].into_iter().enumerate() {
                    out.push(Fixture {
                        left,
                        right,
                        game: g,
                        seed: derive_seed(master_seed, &[a as u64, b as u64, g as u64, swap as u64]),
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchRecord {
    pub left: String,
    pub right: String,
    pub seed: u64,
    pub winner: Option<Winner>,
    pub round_wins: [u8; 2],
    pub ticks: u64,
    pub digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairResult {
    pub a: String,
    pub b: String,
    pub a_wins: u32,
    pub b_wins: u32,
    pub draws: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standing {
    pub name: String,
    pub played: u32,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    /// (wins + draws / 2) / played.
    pub win_rate: f64,
    pub mean_latency_us: f64,
    pub mean_root_branching: f64,
    pub stats: AgentStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standings {
    pub master_seed: u64,
    pub games_per_pair: u32,
    /// Sorted by win rate, best first; ties by name.
    pub table: Vec<Standing>,
    pub pairs: Vec<PairResult>,
    pub matches: Vec<MatchRecord>,
}

impl Standings {
    pub fn render_table(&self) -> String {
        let w = self.table.iter().map(|s| s.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!(
            "{:<w$}  {:>6}  {:>5}  {:>5}  {:>5}  {:>8}  {:>12}\n",
            "name", "played", "wins", "loss", "draw", "win_rate", "latency_us"
        );
        for s in &self.table {
            out.push_str(&format!(
                "{:<w$}  {:>6}  {:>5}  {:>5}  {:>5}  {:>8.3}  {:>12.1}\n",
                s.name, s.played, s.wins, s.losses, s.draws, s.win_rate, s.mean_latency_us
            ));
        }
        out
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs the full round robin on up to `threads` workers (all cores when `None`).
pub fn run_tournament(
    roster: &Roster,
    games_per_pair: u32,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<Standings, HarnessError> {
    roster.validate()?;
    if games_per_pair == 0 {
        return Err(ConfigError::Invalid("games_per_pair must be at least 1".into()).into());
    }
    // Fail before any match runs if an entry cannot be built.
    for i in 0..roster.agents.len() {
        let cfg = roster.match_config(i, i, master_seed);
        cfg.build_agents(&cfg.engine()?)?;
    }
    let fixtures = schedule(roster.agents.len(), games_per_pair, master_seed);
    let results: Mutex<Vec<Option<Result<_, HarnessError>>>> = Mutex::new((0..fixtures.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let n = threads.unwrap_or_else(workers).clamp(1, fixtures.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..n {
            s.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                let Some(f) = fixtures.get(i) else { break };
                let r = run_match(&roster.match_config(f.left, f.right, f.seed));
                results.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let reports = results
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every fixture ran"))
        .collect::<Result<Vec<_>, _>>()?;

    let names: Vec<&str> = roster.agents.iter().map(|e| e.name.as_str()).collect();
    let mut table: Vec<Standing> = names
        .iter()
        .map(|n| Standing {
            name: n.to_string(),
            played: 0,
            wins: 0,
            losses: 0,
            draws: 0,
            win_rate: 0.0,
            mean_latency_us: 0.0,
            mean_root_branching: 0.0,
            stats: AgentStats::default(),
        })
        .collect();
    let mut pairs: Vec<PairResult> = Vec::new();
    for a in 0..names.len() {
        for b in a + 1..names.len() {
            pairs.push(PairResult {
                a: names[a].into(),
                b: names[b].into(),
                a_wins: 0,
                b_wins: 0,
                draws: 0,
            });
        }
    }
    // Pairs are listed row by row of the upper triangle.
    let n = names.len();
    let pair_index = |x: usize, y: usize| {
        let (a, b) = (x.min(y), x.max(y));
        a * (2 * n - a - 1) / 2 + (b - a - 1)
    };
    let mut matches = Vec::with_capacity(reports.len());
    for (f, rep) in fixtures.iter().zip(&reports) {
        let sides = [f.left, f.right];
        for (i, &e) in sides.iter().enumerate() {
            table[e].played += 1;
            table[e].stats.merge(&rep.stats[i]);
        }
        let p = pair_index(f.left, f.right);
        let winner = rep.winner().and_then(|w| w.side()).map(|s| sides[s.index()]);
        match winner {
            Some(w) => {
                table[w].wins += 1;
                let l = if w == f.left { f.right } else { f.left };
                table[l].losses += 1;
                if names[w] == pairs[p].a {
                    pairs[p].a_wins += 1;
                } else {
                    pairs[p].b_wins += 1;
                }
            }
            None => {
                table[f.left].draws += 1;
                table[f.right].draws += 1;
                pairs[p].draws += 1;
            }
        }
        let r = &rep.replay;
        matches.push(MatchRecord {
            left: names[f.left].into(),
            right: names[f.right].into(),
            seed: f.seed,
            winner: r.result.winner,
            round_wins: r.result.round_wins,
            ticks: r.result.ticks,
            digest: r.digest.clone(),
        });
    }
    for s in &mut table {
        s.win_rate = (s.wins as f64 + 0.5 * s.draws as f64) / s.played.max(1) as f64;
        s.mean_latency_us = s.stats.mean_latency_us();
        s.mean_root_branching = s.stats.mean_root_branching();
    }
    table.sort_by(|x, y| {
        y.win_rate
            .partial_cmp(&x.win_rate)
            .unwrap_or(Ordering::Equal)
            .then_with(|| x.name.cmp(&y.name))
    });
    Ok(Standings {
        master_seed,
        games_per_pair,
        table,
        pairs,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_counts_and_swaps() {
        let s = schedule(2, 10, 1);
        assert_eq!(s.len(), 20);
        assert_eq!(s.iter().filter(|f| f.left == 0).count(), 10);
        let s = schedule(4, 3, 1);
        assert_eq!(s.len(), 6 * 3 * 2);
        let mut seeds: Vec<u64> = s.iter().map(|f| f.seed).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), s.len());
    }

    #[test]
    fn roster_validation() {
        let one = Roster::new(vec![RosterEntry {
            name: "a".into(),
            agent: AgentSpec::Random,
        }]);
        assert!(run_tournament(&one, 1, 0, None).is_err());
        let dup = Roster::new(vec![
            RosterEntry { name: "a".into(), agent: AgentSpec::Random },
            RosterEntry { name: "a".into(), agent: AgentSpec::Random },
        ]);
        assert!(run_tournament(&dup, 1, 0, None).is_err());
    }
}
