//! Supervised dataset export: one candidate frame every `k` ticks.
//!
//! Every action a side's units receive in `[tk, (t+1)k)` is moved onto frame
//! `tk` when its unit already exists at `tk`; actions of units created later
//! in the window are dropped. A unit given several actions in one window
//! keeps the last. The continue label is 1 exactly when no action survives.
//! Action-less frames strictly between an instruction and the side's next
//! action are filtered out.
//!
//! Output is a JSON-lines file (a header line, then one frame per line) plus
//! a binary sidecar of concatenated observation dumps; each frame line
//! carries the byte offset of its dump.

use super::{Replay, ReplayError};
use crate::action::ActionRecord;
use crate::env::dump::write_observation;
use crate::env::{EnemyAverage, InstructionHistory, Observation};
use crate::game::{Command, Outcome};
use crate::replay::Controller;
use crate::types::{EntityId, PlayerId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

pub const DEFAULT_K: u32 = 50;
pub const DATASET_FORMAT: &str = "minirts-dataset";
pub const DATASET_VERSION: &str = "1.0.0";

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("frame interval must be at least 1")]
    ZeroInterval,
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitAction {
    pub unit: EntityId,
    pub action: ActionRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFrame {
    pub frame_tick: u32,
    pub observation: Observation,
    /// Sorted by unit id.
    pub actions: Vec<UnitAction>,
    pub continue_label: u8,
}

/// The side a replay's dataset is cut for: the first non-bot side, else
/// the side that received instructions, else side 0.
pub fn learner_side(replay: &Replay) -> PlayerId {
    if let Some(i) = replay.header.players.iter().position(|p| !matches!(p.controller, Controller::Bot(_))) {
        return PlayerId(i as u8);
    }
    replay
        .events
        .iter()
        .find_map(|e| match e {
            super::ReplayEvent::Instruction { player, .. } => Some(*player),
            _ => None,
        })
        .unwrap_or(PlayerId(0))
}

pub fn export_dataset(replay: &Replay, k: u32) -> Result<Vec<DatasetFrame>, ExportError> {
    export_dataset_for(replay, k, learner_side(replay))
}

/// A command counts as a new action unless it is an explicit Continue.
fn is_new_action(c: &Command, player: PlayerId) -> bool {
    c.player == player && !matches!(c.action, ActionRecord::Continue)
}

pub fn export_dataset_for(replay: &Replay, k: u32, player: PlayerId) -> Result<Vec<DatasetFrame>, ExportError> {
    if k == 0 {
        return Err(ExportError::ZeroInterval);
    }
    let mut commands: Vec<(u32, Command)> = replay.commands().map(|(t, c)| (t, *c)).collect();
    commands.sort_by_key(|(t, _)| *t);
    let action_ticks: Vec<u32> = commands.iter().filter(|(_, c)| is_new_action(c, player)).map(|(t, _)| *t).collect();
    let mut instructions: Vec<(u32, String)> = replay
        .events
        .iter()
        .filter_map(|e| match e {
            super::ReplayEvent::Instruction { tick, player: p, text } if *p == player => Some((*tick, text.clone())),
            _ => None,
        })
        .collect();
    instructions.sort_by_key(|(t, _)| *t);

    let mut game = replay.header.new_game()?;
    let end = replay.last_tick();
    let mut average = EnemyAverage::default();
    average.update(&game.view(player));
    let mut history = InstructionHistory::default();
    let mut next_instr = 0;
    let mut next_cmd = 0;
    let mut frames = Vec::new();
    let mut batch = Vec::new();

    while game.tick() < end && !game.is_over() {
        let tick = game.tick();
        while next_instr < instructions.len() && instructions[next_instr].0 <= tick {
            let (t, text) = &instructions[next_instr];
            history.push(*t, text.clone());
            next_instr += 1;
        }
        if tick % k == 0 {
            let window_end = tick.saturating_add(k);
            let lo = commands.partition_point(|(t, _)| *t < tick);
            let hi = commands.partition_point(|(t, _)| *t < window_end);
            let mut last: BTreeMap<EntityId, ActionRecord> = BTreeMap::new();
            for (_, c) in &commands[lo..hi] {
                let exists = game.state.unit(c.unit).is_some_and(|u| u.owner == player);
                if is_new_action(c, player) && exists {
                    last.insert(c.unit, c.action);
                }
            }
            let continue_label = last.is_empty() as u8;
            let pending = continue_label == 1 && awaiting_response(&instructions, &action_ticks, tick);
            if !pending {
                frames.push(DatasetFrame {
                    frame_tick: tick,
                    observation: Observation::encode(&game.view(player), &average, &history),
                    actions: last.into_iter().map(|(unit, action)| UnitAction { unit, action }).collect(),
                    continue_label,
                });
            }
        }
        batch.clear();
        while next_cmd < commands.len() && commands[next_cmd].0 == tick {
            batch.push(commands[next_cmd].1);
            next_cmd += 1;
        }
        game.step(&batch).map_err(ReplayError::from)?;
        average.update(&game.view(player));
    }
    Ok(frames)
}

/// True when the latest instruction strictly before `frame` has not yet been
/// followed by an action at or before `frame`.
fn awaiting_response(instructions: &[(u32, String)], action_ticks: &[u32], frame: u32) -> bool {
    let n = instructions.partition_point(|(t, _)| *t < frame);
    let Some((i, _)) = n.checked_sub(1).map(|j| &instructions[j]) else {
        return false;
    };
    let first = action_ticks.partition_point(|t| t < i);
    action_ticks.get(first).is_none_or(|&a| a > frame)
}

#[derive(Debug, Serialize)]
struct DatasetHeader<'a> {
    format: &'a str,
    version: &'a str,
    k: u32,
    learner: PlayerId,
    frames: usize,
}

#[derive(Debug, Serialize)]
struct FrameLine<'a> {
    sidecar_offset: u64,
    #[serde(flatten)]
    frame: &'a DatasetFrame,
}

/// Writes the JSON-lines dataset and its observation sidecar. Output depends
/// only on the frames, so re-exporting a replay is byte-identical.
pub fn write_dataset(
    frames: &[DatasetFrame],
    k: u32,
    learner: PlayerId,
    jsonl: &mut impl Write,
    sidecar: &mut impl Write,
) -> Result<(), ExportError> {
    let header = DatasetHeader {
        format: DATASET_FORMAT,
        version: DATASET_VERSION,
        k,
        learner,
        frames: frames.len(),
    };
    writeln!(jsonl, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    let mut offset = 0u64;
    let mut buf = Vec::new();
    for frame in frames {
        buf.clear();
        write_observation(&frame.observation, &mut buf);
        sidecar.write_all(&buf)?;
        let line = FrameLine {
            sidecar_offset: offset,
            frame,
        };
        writeln!(jsonl, "{}", serde_json::to_string(&line).expect("frame serializes"))?;
        offset += buf.len() as u64;
    }
    Ok(())
}

/// Corpus-level statistics in the shape of the human dataset's summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_games: usize,
    pub win_rate: f64,
    pub total_instructions: usize,
    pub unique_instructions: usize,
    pub total_words: usize,
    pub unique_words: usize,
    pub words_per_instruction: f64,
    pub instructions_per_game: f64,
    pub frames: usize,
    pub actions_per_frame: f64,
    pub actions_per_instruction: f64,
}

#[derive(Debug, Default)]
pub struct StatsBuilder {
    games: usize,
    wins: usize,
    instructions: usize,
    unique_instructions: BTreeSet<String>,
    words: usize,
    unique_words: BTreeSet<String>,
    frames: usize,
    actions: usize,
}

impl StatsBuilder {
    pub fn add(&mut self, replay: &Replay, learner: PlayerId, frames: &[DatasetFrame]) {
        self.games += 1;
        if matches!(replay.outcome(), Some((_, Outcome::Win(p))) if p == learner) {
            self.wins += 1;
        }
        for (_, text) in replay.instructions() {
            self.instructions += 1;
            self.unique_instructions.insert(text.to_string());
            for w in text.split_whitespace() {
                self.words += 1;
                self.unique_words.insert(w.to_lowercase());
            }
        }
        self.frames += frames.len();
        self.actions += frames.iter().map(|f| f.actions.len()).sum::<usize>();
    }

    pub fn finish(&self) -> DatasetStats {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        DatasetStats {
            total_games: self.games,
            win_rate: ratio(self.wins, self.games),
            total_instructions: self.instructions,
            unique_instructions: self.unique_instructions.len(),
            total_words: self.words,
            unique_words: self.unique_words.len(),
            words_per_instruction: ratio(self.words, self.instructions),
            instructions_per_game: ratio(self.instructions, self.games),
            frames: self.frames,
            actions_per_frame: ratio(self.actions, self.frames),
            actions_per_instruction: ratio(self.actions, self.instructions),
        }
    }
}
