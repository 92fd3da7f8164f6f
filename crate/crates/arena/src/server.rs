//! Live matches between a human client and an agent.
//!
//! One session per connection. The engine loop is single threaded: before
//! each tick it drains every frame the client sent, keeping only the most
//! recent input (last writer wins), applies it or Idle if there was none,
//! and broadcasts the new state. Finished sessions are saved as replays that
//! `verify` and `mine` accept like any other.

use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use duel_core::agents::Agent;
use duel_core::engine::{Action, Side};
use thiserror::Error;
use tungstenite::protocol::frame::coding::CloseCode;
use tungstenite::protocol::CloseFrame;
use tungstenite::{Message, WebSocket};

use crate::config::{training_dummy, ConfigError, MatchConfig};
use crate::harness::{decide, tick_limit, AgentStats, Decider, Referee};
use crate::protocol::{ClientMessage, ErrorCode, ServerMessage};
use crate::replay::{action_labels, Replay, ReplayError, ReplayHeader, TickRecord};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("port already in use: {0}")]
    PortInUse(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("client did not join within {0:?}")]
    JoinTimeout(Duration),
    #[error("websocket: {0}")]
    Socket(String),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

impl From<tungstenite::Error> for ServeError {
    fn from(e: tungstenite::Error) -> Self {
        ServeError::Socket(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Engine ticks per second.
    pub tick_rate_hz: f64,
    /// Where finished sessions are saved; nothing is saved when `None`.
    pub replay_dir: Option<PathBuf>,
    pub join_timeout: Duration,
    /// Training sessions end after this many ticks (or when the client leaves).
    pub max_training_ticks: Option<u64>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            tick_rate_hz: 10.0,
            replay_dir: None,
            join_timeout: Duration::from_secs(10),
            max_training_ticks: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub player: String,
    pub replay: Replay,
    pub replay_path: Option<PathBuf>,
    /// False when the client left before the match was decided.
    pub completed: bool,
}

/// The side the human plays; the config must have exactly one.
pub fn human_side(cfg: &MatchConfig) -> Result<Side, ConfigError> {
    match (cfg.left.is_human(), cfg.right.is_human()) {
        (true, false) => Ok(Side::Left),
        (false, true) => Ok(Side::Right),
        _ => Err(ConfigError::Invalid("a live match needs exactly one human side".into())),
    }
}

pub struct Server {
    listener: TcpListener,
    cfg: MatchConfig,
    opts: ServeOptions,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, cfg: MatchConfig, opts: ServeOptions) -> Result<Self, ServeError> {
        cfg.validate()?;
        human_side(&cfg)?;
        if opts.tick_rate_hz.is_nan() || opts.tick_rate_hz <= 0.0 {
            return Err(ConfigError::Invalid("tick rate must be positive".into()).into());
        }
        let listener = TcpListener::bind(addr).map_err(|e| match e.kind() {
            ErrorKind::AddrInUse => ServeError::PortInUse(e.to_string()),
            _ => ServeError::Socket(e.to_string()),
        })?;
        Ok(Self { listener, cfg, opts })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Accepts one connection and plays its session to the end.
    pub fn serve_one(&self) -> Result<SessionOutcome, ServeError> {
        let (stream, _) = self.listener.accept().map_err(|e| ServeError::Socket(e.to_string()))?;
        run_session(stream, &self.cfg, &self.opts)
    }

    /// Serves `sessions` connections (forever when `None`), each on its own thread.
    pub fn serve(&self, sessions: Option<usize>, mut on_done: impl FnMut(Result<SessionOutcome, ServeError>)) {
        let mut handles = Vec::new();
        let mut accepted = 0;
        for stream in self.listener.incoming() {
            let Ok(stream) = stream else { continue };
            let cfg = self.cfg.clone();
            let opts = self.opts.clone();
            handles.push(thread::spawn(move || run_session(stream, &cfg, &opts)));
            accepted += 1;
            if sessions.is_some_and(|n| accepted >= n) {
                break;
            }
        }
        for h in handles {
            on_done(h.join().unwrap_or_else(|_| Err(ServeError::Socket("session thread panicked".into()))));
        }
    }
}

fn send(ws: &mut WebSocket<TcpStream>, msg: &ServerMessage) -> Result<(), ServeError> {
    flush_after(ws, |ws| ws.send(Message::text(msg.to_text())))
}

/// Runs a write and flushes, waiting out a full socket buffer.
fn flush_after(
    ws: &mut WebSocket<TcpStream>,
    op: impl FnOnce(&mut WebSocket<TcpStream>) -> Result<(), tungstenite::Error>,
) -> Result<(), ServeError> {
    let mut res = op(ws);
    loop {
        match res {
            Ok(()) => return Ok(()),
            Err(tungstenite::Error::Io(e)) if e.kind() == ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(1));
                res = ws.flush();
            }
            Err(e) => return Err(e.into()),
        }
    }
}

fn reject(ws: &mut WebSocket<TcpStream>, code: ErrorCode, message: String) -> ServeError {
    let _ = send(ws, &ServerMessage::Error { code, message: message.clone() });
    close(ws, CloseCode::Policy);
    ServeError::ProtocolViolation(message)
}

fn close(ws: &mut WebSocket<TcpStream>, code: CloseCode) {
    let frame = CloseFrame {
        code,
        reason: "".into(),
    };
    let _ = flush_after(ws, |ws| ws.close(Some(frame)));
    // Give the client a moment to read the close frame.
    let _ = ws.get_mut().set_read_timeout(Some(Duration::from_millis(50)));
    let deadline = Instant::now() + Duration::from_millis(200);
    while Instant::now() < deadline {
        match ws.read() {
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                thread::sleep(Duration::from_millis(2))
            }
            Err(_) => break,
        }
    }
}

/// Waits for the opening `join` and returns the player's name.
fn await_join(ws: &mut WebSocket<TcpStream>, timeout: Duration) -> Result<String, ServeError> {
    ws.get_mut()
        .set_read_timeout(Some(timeout))
        .map_err(|e| ServeError::Socket(e.to_string()))?;
    loop {
        let msg = match ws.read() {
            Ok(m) => m,
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                close(ws, CloseCode::Policy);
                return Err(ServeError::JoinTimeout(timeout));
            }
            Err(e) => return Err(e.into()),
        };
        match msg {
            Message::Text(t) => {
                return match ClientMessage::parse(&t) {
                    Ok(ClientMessage::Join { name }) => Ok(name),
                    Ok(ClientMessage::Input { .. }) => {
                        Err(reject(ws, ErrorCode::UnexpectedMessage, "input before join".into()))
                    }
                    Err(e) => Err(reject(ws, ErrorCode::ProtocolViolation, e)),
                }
            }
            Message::Ping(_) | Message::Pong(_) => {}
            Message::Close(_) => return Err(ServeError::Socket("client left before joining".into())),
            _ => return Err(reject(ws, ErrorCode::ProtocolViolation, "binary frames are not accepted".into())),
        }
    }
}

enum Inbox {
    Open,
    Closed,
}

/// Reads every pending frame, keeping the last input in `latest`.
fn drain(
    ws: &mut WebSocket<TcpStream>,
    referee: &Referee<'_>,
    human: Side,
    latest: &mut Option<Action>,
) -> Result<Inbox, ServeError> {
    loop {
        let msg = match ws.read() {
            Ok(m) => m,
            Err(tungstenite::Error::Io(e)) if e.kind() == ErrorKind::WouldBlock => return Ok(Inbox::Open),
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(Inbox::Closed),
            Err(tungstenite::Error::Protocol(_)) | Err(tungstenite::Error::Io(_)) => return Ok(Inbox::Closed),
            Err(e) => return Err(e.into()),
        };
        match msg {
            Message::Text(t) => match ClientMessage::parse(&t) {
                Ok(ClientMessage::Input { action, .. }) => {
                    let ch = referee.engine().character(human);
                    match Action::parse(&action, ch) {
                        Some(a) => *latest = Some(a),
                        None => {
                            return Err(reject(ws, ErrorCode::UnknownAction, format!("unknown action {action:?}")));
                        }
                    }
                }
                Ok(ClientMessage::Join { .. }) => {
                    return Err(reject(ws, ErrorCode::UnexpectedMessage, "already joined".into()));
                }
                Err(e) => return Err(reject(ws, ErrorCode::ProtocolViolation, e)),
            },
            Message::Close(_) => return Ok(Inbox::Closed),
            Message::Ping(_) | Message::Pong(_) | Message::Frame(_) => {}
            Message::Binary(_) => {
                return Err(reject(ws, ErrorCode::ProtocolViolation, "binary frames are not accepted".into()));
            }
        }
    }
}

/// Plays one live session on an accepted connection.
pub fn run_session(stream: TcpStream, cfg: &MatchConfig, opts: &ServeOptions) -> Result<SessionOutcome, ServeError> {
    let human = human_side(cfg)?;
    let engine = cfg.engine()?;
    let mut agent: Box<dyn Agent> = if cfg.training {
        training_dummy()
    } else {
        let [l, r] = cfg.build_agents(&engine)?;
        [l, r][human.opponent().index()].take().expect("the non-human side builds an agent")
    };
    let _ = stream.set_nodelay(true);
    let mut ws = tungstenite::accept(stream).map_err(|e| ServeError::Socket(e.to_string()))?;
    let player = await_join(&mut ws, opts.join_timeout)?;
    ws.get_mut()
        .set_nonblocking(true)
        .map_err(|e| ServeError::Socket(e.to_string()))?;

    let mut referee = Referee::new(&engine, cfg.seed, cfg.training);
    let period = Duration::from_secs_f64(1.0 / opts.tick_rate_hz);
    let limit = if cfg.training {
        opts.max_training_ticks.unwrap_or(u64::MAX)
    } else {
        tick_limit(&engine)
    };
    let mut stats = [AgentStats::default(); 2];
    let mut ticks = Vec::new();
    let mut latest: Option<Action> = None;
    let mut connected = true;
    send(&mut ws, &ServerMessage::state(&engine, referee.state(), 0))?;
    let mut next = Instant::now() + period;
    while !referee.is_over() && referee.ticks() < limit {
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        }
        next += period;
        if let Inbox::Closed = drain(&mut ws, &referee, human, &mut latest)? {
            connected = false;
            break;
        }
        let human_action = latest.take().unwrap_or(Action::Idle);
        let mut deciders = [Decider::Fixed(human_action), Decider::Fixed(human_action)];
        deciders[human.opponent().index()] = Decider::Agent(agent.as_mut());
        let mut annotations = [None, None];
        let actions = decide(&referee, deciders, &mut stats, &mut annotations);
        ticks.push(TickRecord {
            tick: referee.ticks(),
            actions: action_labels(&engine, actions),
            annotations,
        });
        let out = referee.step(actions[0], actions[1]).expect("decide only returns legal actions");
        let frames = std::iter::once(ServerMessage::state(&engine, referee.state(), referee.ticks())).chain(
            out.round_end.map(|r| ServerMessage::RoundEnd {
                winner: r.winner,
                cause: r.cause,
            }),
        );
        for f in frames {
            if send(&mut ws, &f).is_err() {
                connected = false;
            }
        }
        if !connected {
            break;
        }
    }

    let replay = Replay::seal(ReplayHeader::new(cfg.clone(), &engine), ticks, referee.result());
    let replay_path = match &opts.replay_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| ReplayError::Io(e.to_string()))?;
            let path = dir.join(format!("{}.jsonl", replay.id()));
            replay.save(&path)?;
            Some(path)
        }
        None => None,
    };
    if connected {
        let _ = send(
            &mut ws,
            &ServerMessage::MatchEnd {
                winner: replay.result.winner,
                replay_id: replay.id().to_string(),
            },
        );
        close(&mut ws, CloseCode::Normal);
    }
    Ok(SessionOutcome {
        player,
        completed: referee.is_over(),
        replay,
        replay_path,
    })
}
