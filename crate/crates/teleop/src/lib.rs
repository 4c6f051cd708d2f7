//! Teleoperation service for the navsim simulator: wire protocol, control
//! session and socket server.

pub mod config;
pub mod protocol;
pub mod server;
pub mod session;

pub use config::SimConfig;
pub use protocol::{decode, encode, ControlMessage, DecodeError, DriveDir, ServerMessage};
pub use session::{Session, WATCHDOG_MS};
