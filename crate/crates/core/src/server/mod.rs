//! Human play: an instructor and an executor share one side against a bot.
//!
//! [`session`] holds the rules and is plain synchronous code; [`net`] (behind
//! the `server` feature) runs each session as a task behind websockets.

#[cfg(feature = "server")]
pub mod net;
pub mod protocol;
pub mod session;
pub mod state;

pub use protocol::{Audience, Body, ErrorCode, Frame, Outbound, SessionId, PROTOCOL_VERSION};
pub use session::{Session, SessionConfig, SessionError, Status, HUMAN};
pub use state::{StateDiff, TeamSnapshot};
