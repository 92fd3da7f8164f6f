use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use duel_arena::config::{ConfigError, MatchConfig};
use duel_arena::harness::{run_match, HarnessError};
use duel_arena::miner::{mine_tactics, BandClassifier, MineError, SideFilter};
use duel_arena::replay::{verify_replay, Replay, ReplayError};
use duel_arena::server::{ServeError, ServeOptions, Server};
use duel_arena::tournament::{run_tournament, Roster};

#[derive(Parser)]
#[command(name = "arena", version, about = "Run, verify and mine fighting-game AI matches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one match between two agents.
    Match {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round-robin between every pair of roster entries.
    Tournament {
        #[arg(long)]
        roster: PathBuf,
        #[arg(long, default_value_t = 10)]
        games: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; all cores by default.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Build an FSM skeleton from recorded replays.
    Mine {
        /// Directory of `.jsonl` replays.
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        #[arg(long, default_value_t = 4)]
        pool_size: usize,
        /// Mine agent sides too, not only human ones.
        #[arg(long)]
        all_sides: bool,
    },
    /// Re-simulate a replay and check its digest.
    Verify { replay: PathBuf },
    /// Host live matches for the play client.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Practice against a static dummy; health and timer are frozen.
        #[arg(long)]
        training: bool,
        #[arg(long, default_value = "replays")]
        replay_dir: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        tick_rate: f64,
        /// Stop after this many sessions.
        #[arg(long)]
        sessions: Option<usize>,
        /// Training sessions end after this many ticks.
        #[arg(long)]
        max_training_ticks: Option<u64>,
    },
}

const CONFIG_ERROR: u8 = 2;
const VERIFY_FAILURE: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self {
            code: CONFIG_ERROR,
            message: e.to_string(),
        }
    }

    fn verify(e: impl std::fmt::Display) -> Self {
        Self {
            code: VERIFY_FAILURE,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e)
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => Failure::config(e),
            _ => Failure { code: 1, message: e.to_string() },
        }
    }
}

impl From<ReplayError> for Failure {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::VersionMismatch { .. } => Failure::verify(e),
            ReplayError::Io(_) => Failure { code: 1, message: e.to_string() },
            _ => Failure::config(e),
        }
    }
}

impl From<MineError> for Failure {
    fn from(e: MineError) -> Self {
        match e {
            MineError::Replay(r) => r.into(),
            MineError::BadReplay(_) => Failure::verify(e),
            _ => Failure::config(e),
        }
    }
}

impl From<ServeError> for Failure {
    fn from(e: ServeError) -> Self {
        match e {
            ServeError::Config(_) | ServeError::PortInUse(_) => Failure::config(e),
            _ => Failure { code: 1, message: e.to_string() },
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Match { config, seed, out } => {
            let mut cfg = MatchConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_match(&cfg)?;
            let r = &report.replay.result;
            let winner = r.winner.map_or("none".to_string(), |w| format!("{w:?}").to_lowercase());
            println!(
                "{} vs {}: winner {winner}, rounds {}-{}, {} ticks, replay {}",
                cfg.left.kind(),
                cfg.right.kind(),
                r.round_wins[0],
                r.round_wins[1],
                r.ticks,
                report.replay.id()
            );
            for (side, s) in ["left", "right"].iter().zip(&report.stats) {
                println!("  {side}: {} decisions, mean {:.1} us, max {:.1} us", s.decisions, s.mean_latency_us(), s.max_ns as f64 / 1e3);
            }
            if let Some(out) = out {
                report.replay.save(&out)?;
            }
        }
        Command::Tournament {
            roster,
            games,
            seed,
            out,
            threads,
        } => {
            let roster = Roster::load(&roster)?;
            let standings = run_tournament(&roster, games, seed, threads)?;
            std::fs::create_dir_all(&out).map_err(|e| Failure {
                code: 1,
                message: format!("cannot create {}: {e}", out.display()),
            })?;
            let table = standings.render_table();
            print!("{table}");
            write(&out.join("standings.txt"), &table)?;
            let json = serde_json::to_string_pretty(&standings).expect("standings serialize");
            write(&out.join("results.json"), &json)?;
        }
        Command::Mine {
            logs,
            out,
            max_len,
            pool_size,
            all_sides,
        } => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&logs)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", logs.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            paths.sort();
            let replays = paths.iter().map(|p| Replay::load(p)).collect::<Result<Vec<_>, _>>()?;
            let filter = if all_sides { SideFilter::All } else { SideFilter::PreferHumans };
            let mined = mine_tactics(&replays, &BandClassifier::default(), max_len, pool_size, filter)?;
            let json = serde_json::to_string_pretty(&mined.fsm).expect("fsm serializes");
            write(&out, &json)?;
            println!("mined {} states from {} replays into {}", mined.fsm.states.len(), replays.len(), out.display());
        }
        Command::Verify { replay } => {
            let r = Replay::load(&replay)?;
            if verify_replay(&r)? {
                println!("ok {}", r.id());
            } else {
                return Err(Failure::verify(format!("{} does not reproduce its digest", replay.display())));
            }
        }
        Command::Serve {
            config,
            port,
            host,
            training,
            replay_dir,
            tick_rate,
            sessions,
            max_training_ticks,
        } => {
            let mut cfg = MatchConfig::load(&config)?;
            cfg.training |= training;
            let opts = ServeOptions {
                tick_rate_hz: tick_rate,
                replay_dir: Some(replay_dir),
                join_timeout: Duration::from_secs(30),
                max_training_ticks,
            };
            let server = Server::bind((host.as_str(), port), cfg, opts)?;
            eprintln!("listening on ws://{}", server.local_addr());
            server.serve(sessions, |res| match res {
                Ok(o) => eprintln!(
                    "session {}: {} after {} ticks, replay {}",
                    o.player,
                    if o.completed { "finished" } else { "left" },
                    o.replay.result.ticks,
                    o.replay_path.as_deref().map_or("-".into(), |p| p.display().to_string())
                ),
                Err(e) => eprintln!("session failed: {e}"),
            });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
