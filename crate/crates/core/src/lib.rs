//! A deterministic real-time strategy engine modelled on MiniRTS: seven
//! army types with a rock-paper-scissors attack graph, six buildings, a
//! 32x32 procedurally generated map with fog of war, scripted opponents,
//! an RL-style environment, replays with dataset export, an instruction
//! validator and a session server for instructor/executor play.

pub mod action;
pub mod arena;
pub mod bots;
pub mod config;
pub mod env;
pub mod harness;
pub mod game;
pub mod map;
pub mod mapgen;
pub mod path;
pub mod replay;
pub mod server;
pub mod types;
pub mod validator;
pub mod view;

pub use action::{ActionRecord, ActionType};
pub use config::{Balance, BalanceConfig};
pub use game::{Command, CommandError, Game, GameError, GameEvent, GameOptions, Outcome};
pub use map::{MapGrid, MapParams, Terrain};
pub use mapgen::{generate_map, MapGenError};
pub use types::{Cell, EntityId, PlayerId, Pos, UnitType, MAP_SIZE};
