//! Wire frames. Every frame is one JSON object with a `type` tag and the
//! game `tick` it was produced at (clients may omit `tick`).

use super::state::StateDiff;
use crate::action::ActionRecord;
use crate::game::Outcome;
use crate::replay::Role;
use crate::types::EntityId;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: &str = "1.0.0";

pub type SessionId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    #[serde(default)]
    pub tick: u32,
    #[serde(flatten)]
    pub body: Body,
}

impl Frame {
    pub fn new(tick: u32, body: Body) -> Frame {
        Frame { tick, body }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }

    pub fn from_json(text: &str) -> Result<Frame, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Body {
    /// Server greeting on connect.
    Hello {
        version: String,
        session: SessionId,
        free_roles: Vec<Role>,
    },
    /// Client claims a seat; the server echoes it back once granted.
    Join { role: Role },
    StateDiff { diff: StateDiff },
    Command { unit: EntityId, action: ActionRecord },
    Instruction { text: String },
    Pause,
    Resume,
    Warn,
    Ask { text: String },
    Chat {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<Role>,
        text: String,
    },
    GameOver { outcome: Outcome },
    Error { code: ErrorCode, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    WrongRole,
    RoleTaken,
    InvalidCommand,
    NotRunning,
    NotJoined,
    BadMessage,
    CapacityExceeded,
    UnknownSession,
    SlowConsumer,
}

/// Who a server frame goes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audience {
    Both,
    Only(Role),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub to: Audience,
    pub frame: Frame,
}

impl Outbound {
    pub fn both(frame: Frame) -> Outbound {
        Outbound { to: Audience::Both, frame }
    }

    pub fn to(role: Role, frame: Frame) -> Outbound {
        Outbound {
            to: Audience::Only(role),
            frame,
        }
    }

    pub fn reaches(&self, role: Role) -> bool {
        match self.to {
            Audience::Both => true,
            Audience::Only(r) => r == role,
        }
    }
}
