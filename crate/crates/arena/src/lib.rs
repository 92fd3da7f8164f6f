//! Runs matches between agents and keeps their records.
//!
//! - [`config`]: match configs and agent construction.
//! - [`harness`]: the referee and the match loop.
//! - [`replay`]: hashed replay logs and verification.
//! - [`tournament`]: round-robin tournaments.
//! - [`miner`]: tactic mining from replays.
//! - [`protocol`] and [`server`]: live matches over WebSocket.

pub mod config;
pub mod harness;
pub mod miner;
pub mod protocol;
pub mod replay;
pub mod seed;
pub mod server;
pub mod tournament;
