//! Replay recording, the binary replay format, and re-simulation checks.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! "MRTR" major:u16 minor:u16 patch:u16
//! record*   where record = tag:u8 len:u32 payload[len]
//! ```
//!
//! | tag  | record      | payload                                              |
//! |------|-------------|------------------------------------------------------|
//! | 0x01 | header      | UTF-8 JSON of [`ReplayHeader`]                       |
//! | 0x10 | command     | tick:u32 player:u8 unit:u32 action                   |
//! | 0x11 | instruction | tick:u32 player:u8 text:utf8                         |
//! | 0x12 | pause       | tick:u32                                             |
//! | 0x13 | resume      | tick:u32                                             |
//! | 0x14 | warn        | tick:u32                                             |
//! | 0x15 | ask         | tick:u32 text:utf8                                   |
//! | 0x16 | chat        | tick:u32 player:u8 text:utf8                         |
//! | 0x17 | outcome     | tick:u32 kind:u8 (1 win, 2 draw) winner:u8           |
//! | 0x18 | checkpoint  | tick:u32 hash:u64                                    |
//!
//! An action is `type:u8` followed by its output: gather/attack a `u32` id,
//! train a `u8` unit type, build a `u8` unit type and two `u8` cell
//! coordinates, move two `u8` cell coordinates. Type codes follow
//! [`ActionType`] order and unit codes follow [`UnitType`] order.
//!
//! A command recorded at tick `t` was submitted in the step that took the
//! game from tick `t` to `t + 1`. A checkpoint at tick `t` hashes the state
//! once the game clock reads `t`.

pub mod export;

use crate::action::{ActionRecord, ActionType};
use crate::bots::StrategyId;
use crate::config::{BalanceConfig, ConfigError};
use crate::game::{Command, Game, GameError, GameOptions, Outcome};
use crate::map::{MapError, MapGrid};
use crate::types::{Cell, EntityId, PlayerId, UnitType};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

pub const REPLAY_MAGIC: &[u8; 4] = b"MRTR";
pub const FORMAT_VERSION: [u16; 3] = [1, 0, 0];
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CHECKPOINT_INTERVAL: u32 = 500;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("replay storage failed: {0}")]
    StorageFailure(#[from] std::io::Error),
    #[error("not a replay file (bad magic)")]
    BadMagic,
    #[error("version mismatch: replay {found}, this build {expected}")]
    VersionMismatch { expected: String, found: String },
    #[error("config hash mismatch: header {header}, embedded config {actual}")]
    ConfigMismatch { header: String, actual: String },
    #[error("corrupt replay: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Who controlled a side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "strategy", rename_all = "snake_case")]
pub enum Controller {
    Bot(StrategyId),
    Human,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Instructor,
    Executor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerInfo {
    pub controller: Controller,
    /// Human roles sharing this side (empty for bots).
    pub roles: Vec<Role>,
    pub resource_scaling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub engine_version: String,
    pub config_hash: String,
    pub config_toml: String,
    pub map: String,
    pub seed: u64,
    pub players: [PlayerInfo; 2],
}

impl ReplayHeader {
    pub fn new(config: &BalanceConfig, map: &MapGrid, seed: u64, players: [PlayerInfo; 2]) -> Self {
        ReplayHeader {
            engine_version: ENGINE_VERSION.to_string(),
            config_hash: config.content_hash(),
            config_toml: config.to_toml_string(),
            map: map.to_text(),
            seed,
            players,
        }
    }

    /// The opponent strategy, when exactly one side is a bot.
    pub fn opponent(&self) -> Option<StrategyId> {
        self.players.iter().find_map(|p| match p.controller {
            Controller::Bot(s) => Some(s),
            _ => None,
        })
    }

    /// Rebuilds the initial game this replay starts from.
    pub fn new_game(&self) -> Result<Game, ReplayError> {
        let config = BalanceConfig::from_toml_str(&self.config_toml)?;
        let actual = config.content_hash();
        if actual != self.config_hash {
            return Err(ReplayError::ConfigMismatch {
                header: self.config_hash.clone(),
                actual,
            });
        }
        let map = MapGrid::from_text(&self.map)?;
        let options = GameOptions {
            resource_scaling: [self.players[0].resource_scaling, self.players[1].resource_scaling],
        };
        Ok(Game::new(Arc::new(config.compile()?), options, map, self.seed)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ReplayEvent {
    Command { tick: u32, command: Command },
    Instruction { tick: u32, player: PlayerId, text: String },
    Pause { tick: u32 },
    Resume { tick: u32 },
    Warn { tick: u32 },
    Ask { tick: u32, text: String },
    Chat { tick: u32, player: PlayerId, text: String },
    Outcome { tick: u32, outcome: Outcome },
    Checkpoint { tick: u32, hash: u64 },
}

impl ReplayEvent {
    pub fn tick(&self) -> u32 {
        match self {
            ReplayEvent::Command { tick, .. }
            | ReplayEvent::Instruction { tick, .. }
            | ReplayEvent::Pause { tick }
            | ReplayEvent::Resume { tick }
            | ReplayEvent::Warn { tick }
            | ReplayEvent::Ask { tick, .. }
            | ReplayEvent::Chat { tick, .. }
            | ReplayEvent::Outcome { tick, .. }
            | ReplayEvent::Checkpoint { tick, .. } => *tick,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub header: ReplayHeader,
    pub events: Vec<ReplayEvent>,
}

impl Replay {
    pub fn commands(&self) -> impl Iterator<Item = (u32, &Command)> {
        self.events.iter().filter_map(|e| match e {
            ReplayEvent::Command { tick, command } => Some((*tick, command)),
            _ => None,
        })
    }

    pub fn instructions(&self) -> impl Iterator<Item = (u32, &str)> {
        self.events.iter().filter_map(|e| match e {
            ReplayEvent::Instruction { tick, text, .. } => Some((*tick, text.as_str())),
            _ => None,
        })
    }

    pub fn checkpoints(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.events.iter().filter_map(|e| match e {
            ReplayEvent::Checkpoint { tick, hash } => Some((*tick, *hash)),
            _ => None,
        })
    }

    pub fn outcome(&self) -> Option<(u32, Outcome)> {
        self.events.iter().rev().find_map(|e| match e {
            ReplayEvent::Outcome { tick, outcome } => Some((*tick, *outcome)),
            _ => None,
        })
    }

    pub fn warnings(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, ReplayEvent::Warn { .. })).count()
    }

    /// The last tick mentioned by any event.
    pub fn last_tick(&self) -> u32 {
        self.events.iter().map(|e| e.tick()).max().unwrap_or(0)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.events.len() * 16);
        out.extend_from_slice(REPLAY_MAGIC);
        for v in FORMAT_VERSION {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        push_record(&mut out, 0x01, &header);
        let mut buf = Vec::with_capacity(32);
        for e in &self.events {
            buf.clear();
            let tag = encode_event(e, &mut buf);
            push_record(&mut out, tag, &buf);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Replay, ReplayError> {
        let corrupt = |m: &str| ReplayError::Corrupt(m.to_string());
        if bytes.len() < 10 || &bytes[..4] != REPLAY_MAGIC {
            return Err(ReplayError::BadMagic);
        }
        let version: Vec<u16> = (0..3)
            .map(|i| u16::from_le_bytes([bytes[4 + 2 * i], bytes[5 + 2 * i]]))
            .collect();
        if version[0] != FORMAT_VERSION[0] {
            return Err(ReplayError::VersionMismatch {
                expected: fmt_version(&FORMAT_VERSION),
                found: fmt_version(&version),
            });
        }
        let mut r = Reader { buf: &bytes[10..] };
        let mut header = None;
        let mut events = Vec::new();
        while !r.buf.is_empty() {
            let tag = r.u8()?;
            let len = r.u32()? as usize;
            let payload = r.take(len)?;
            if tag == 0x01 {
                header = Some(serde_json::from_slice(payload).map_err(|e| ReplayError::Corrupt(e.to_string()))?);
            } else {
                events.push(decode_event(tag, payload)?);
            }
        }
        let header = header.ok_or_else(|| corrupt("missing header"))?;
        Ok(Replay { header, events })
    }

    pub fn save(&self, path: &Path) -> Result<(), ReplayError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Replay, ReplayError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Replay::from_bytes(&bytes)
    }
}

fn fmt_version(v: &[u16]) -> String {
    format!("{}.{}.{}", v[0], v[1], v[2])
}

fn push_record(out: &mut Vec<u8>, tag: u8, payload: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
}

fn encode_action(a: &ActionRecord, out: &mut Vec<u8>) {
    out.push(a.action_type().index() as u8);
    match *a {
        ActionRecord::Idle | ActionRecord::Continue => {}
        ActionRecord::Gather { resource: id } | ActionRecord::Attack { target: id } => {
            out.extend_from_slice(&id.0.to_le_bytes())
        }
        ActionRecord::TrainUnit { unit_type } => out.push(unit_type.index() as u8),
        ActionRecord::BuildBuilding { unit_type, cell } => {
            out.extend_from_slice(&[unit_type.index() as u8, cell.x as u8, cell.y as u8])
        }
        ActionRecord::Move { cell } => out.extend_from_slice(&[cell.x as u8, cell.y as u8]),
    }
}

fn encode_event(e: &ReplayEvent, out: &mut Vec<u8>) -> u8 {
    out.extend_from_slice(&e.tick().to_le_bytes());
    match e {
        ReplayEvent::Command { command, .. } => {
            out.push(command.player.0);
            out.extend_from_slice(&command.unit.0.to_le_bytes());
            encode_action(&command.action, out);
            0x10
        }
        ReplayEvent::Instruction { player, text, .. } => {
            out.push(player.0);
            out.extend_from_slice(text.as_bytes());
            0x11
        }
        ReplayEvent::Pause { .. } => 0x12,
        ReplayEvent::Resume { .. } => 0x13,
        ReplayEvent::Warn { .. } => 0x14,
        ReplayEvent::Ask { text, .. } => {
            out.extend_from_slice(text.as_bytes());
            0x15
        }
        ReplayEvent::Chat { player, text, .. } => {
            out.push(player.0);
            out.extend_from_slice(text.as_bytes());
            0x16
        }
        ReplayEvent::Outcome { outcome, .. } => {
            let (kind, winner) = match outcome {
                Outcome::Win(p) => (1, p.0),
                Outcome::Draw => (2, 0),
                Outcome::Ongoing => (0, 0),
            };
            out.extend_from_slice(&[kind, winner]);
            0x17
        }
        ReplayEvent::Checkpoint { hash, .. } => {
            out.extend_from_slice(&hash.to_le_bytes());
            0x18
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ReplayError> {
        if self.buf.len() < n {
            return Err(ReplayError::Corrupt("truncated record".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, ReplayError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ReplayError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ReplayError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn unit_type(&mut self) -> Result<UnitType, ReplayError> {
        let i = self.u8()?;
        UnitType::from_index(i as usize).ok_or_else(|| ReplayError::Corrupt(format!("unit type {i}")))
    }

    fn cell(&mut self) -> Result<Cell, ReplayError> {
        let b = self.take(2)?;
        Ok(Cell::new(b[0] as i32, b[1] as i32))
    }

    fn text(&mut self) -> Result<String, ReplayError> {
        let rest = std::mem::take(&mut self.buf);
        String::from_utf8(rest.to_vec()).map_err(|e| ReplayError::Corrupt(e.to_string()))
    }

    fn action(&mut self) -> Result<ActionRecord, ReplayError> {
        let t = self.u8()?;
        let ty = ActionType::from_index(t as usize).ok_or_else(|| ReplayError::Corrupt(format!("action type {t}")))?;
        Ok(match ty {
            ActionType::Idle => ActionRecord::Idle,
            ActionType::Continue => ActionRecord::Continue,
            ActionType::Gather => ActionRecord::Gather {
                resource: EntityId(self.u32()?),
            },
            ActionType::Attack => ActionRecord::Attack {
                target: EntityId(self.u32()?),
            },
            ActionType::TrainUnit => ActionRecord::TrainUnit {
                unit_type: self.unit_type()?,
            },
            ActionType::BuildBuilding => ActionRecord::BuildBuilding {
                unit_type: self.unit_type()?,
                cell: self.cell()?,
            },
            ActionType::Move => ActionRecord::Move { cell: self.cell()? },
        })
    }
}

fn decode_event(tag: u8, payload: &[u8]) -> Result<ReplayEvent, ReplayError> {
    let mut r = Reader { buf: payload };
    let tick = r.u32()?;
    let e = match tag {
        0x10 => {
            let player = PlayerId(r.u8()?);
            let unit = EntityId(r.u32()?);
            let action = r.action()?;
            ReplayEvent::Command {
                tick,
                command: Command { player, unit, action },
            }
        }
        0x11 => ReplayEvent::Instruction {
            tick,
            player: PlayerId(r.u8()?),
            text: r.text()?,
        },
        0x12 => ReplayEvent::Pause { tick },
        0x13 => ReplayEvent::Resume { tick },
        0x14 => ReplayEvent::Warn { tick },
        0x15 => ReplayEvent::Ask { tick, text: r.text()? },
        0x16 => ReplayEvent::Chat {
            tick,
            player: PlayerId(r.u8()?),
            text: r.text()?,
        },
        0x17 => {
            let kind = r.u8()?;
            let winner = r.u8()?;
            let outcome = match kind {
                1 => Outcome::Win(PlayerId(winner)),
                2 => Outcome::Draw,
                _ => Outcome::Ongoing,
            };
            ReplayEvent::Outcome { tick, outcome }
        }
        0x18 => ReplayEvent::Checkpoint { tick, hash: r.u64()? },
        other => return Err(ReplayError::Corrupt(format!("unknown record tag {other:#04x}"))),
    };
    if !r.buf.is_empty() {
        return Err(ReplayError::Corrupt(format!("trailing bytes in record {tag:#04x}")));
    }
    Ok(e)
}

/// Captures a live game: accepted commands, side-channel events, periodic
/// state-hash checkpoints and the final outcome.
#[derive(Debug, Clone)]
pub struct Recorder {
    replay: Replay,
    last_tick: u32,
    finished: bool,
}

impl Recorder {
    /// Starts recording `game`, which must be at tick 0.
    pub fn new(game: &Game, players: [PlayerInfo; 2]) -> Self {
        let header = ReplayHeader::new(&game.balance.config, &game.state.map, game.state.seed, players);
        let mut replay = Replay {
            header,
            events: Vec::new(),
        };
        replay.events.push(ReplayEvent::Checkpoint {
            tick: game.tick(),
            hash: game.content_hash(),
        });
        Recorder {
            replay,
            last_tick: game.tick(),
            finished: false,
        }
    }

    /// Records one completed step: the commands accepted at `tick` and the
    /// resulting state.
    pub fn record_step(&mut self, tick: u32, accepted: &[Command], game: &Game) {
        for c in accepted {
            self.replay.events.push(ReplayEvent::Command { tick, command: *c });
        }
        self.last_tick = game.tick();
        if game.tick().is_multiple_of(CHECKPOINT_INTERVAL) {
            self.checkpoint(game);
        }
        if game.is_over() && !self.finished {
            self.finish(game);
        }
    }

    pub fn push(&mut self, event: ReplayEvent) {
        self.replay.events.push(event);
    }

    fn checkpoint(&mut self, game: &Game) {
        let already = matches!(self.replay.events.last(), Some(ReplayEvent::Checkpoint { tick, .. }) if *tick == game.tick());
        if !already {
            self.replay.events.push(ReplayEvent::Checkpoint {
                tick: game.tick(),
                hash: game.content_hash(),
            });
        }
    }

    /// Closes the log with a final checkpoint and, for finished games, the
    /// single outcome event.
    pub fn finish(&mut self, game: &Game) {
        if self.finished {
            return;
        }
        self.checkpoint(game);
        if game.is_over() {
            self.replay.events.push(ReplayEvent::Outcome {
                tick: game.tick(),
                outcome: game.outcome(),
            });
        }
        self.finished = true;
    }

    pub fn replay(&self) -> &Replay {
        &self.replay
    }

    pub fn into_replay(mut self, game: &Game) -> Replay {
        self.finish(game);
        self.replay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Verdict {
    Pass { ticks: u32, checkpoints: usize },
    /// First tick whose state no longer matches the log.
    Diverged { tick: u32 },
}

/// Re-simulates a replay from its header and command log and compares every
/// checkpoint. A recorded command the engine now rejects also counts as a
/// divergence at its tick.
pub fn replay_verify(replay: &Replay) -> Result<Verdict, ReplayError> {
    if replay.header.engine_version != ENGINE_VERSION {
        return Err(ReplayError::VersionMismatch {
            expected: ENGINE_VERSION.to_string(),
            found: replay.header.engine_version.clone(),
        });
    }
    let mut game = replay.header.new_game()?;
    let mut commands: Vec<(u32, Command)> = replay.commands().map(|(t, c)| (t, *c)).collect();
    commands.sort_by_key(|(t, _)| *t);
    let checkpoints: Vec<(u32, u64)> = replay.checkpoints().collect();
    let end = checkpoints.iter().map(|(t, _)| *t).max().unwrap_or(0).max(replay.last_tick());
    let mut ci = 0;
    let mut ki = 0;
    let mut batch = Vec::new();
    loop {
        let tick = game.tick();
        if ki < checkpoints.len() && checkpoints[ki].0 < tick {
            // A checkpoint for a tick the game skipped over can never match.
            return Ok(Verdict::Diverged { tick: checkpoints[ki].0 });
        }
        while ki < checkpoints.len() && checkpoints[ki].0 == tick {
            if checkpoints[ki].1 != game.content_hash() {
                return Ok(Verdict::Diverged { tick });
            }
            ki += 1;
        }
        if tick >= end || game.is_over() {
            break;
        }
        batch.clear();
        while ci < commands.len() && commands[ci].0 == tick {
            batch.push(commands[ci].1);
            ci += 1;
        }
        let res = game.step(&batch)?;
        if !res.rejected.is_empty() {
            return Ok(Verdict::Diverged { tick });
        }
    }
    if ki < checkpoints.len() || ci < commands.len() {
        let t = checkpoints.get(ki).map(|c| c.0).into_iter().chain(commands.get(ci).map(|c| c.0)).min();
        return Ok(Verdict::Diverged { tick: t.unwrap_or(game.tick()) });
    }
    if let Some((t, o)) = replay.outcome() {
        if t != game.tick() || o != game.outcome() {
            return Ok(Verdict::Diverged { tick: game.tick().min(t) });
        }
    }
    Ok(Verdict::Pass {
        ticks: game.tick(),
        checkpoints: checkpoints.len(),
    })
}

#[cfg(test)]
mod tests;
