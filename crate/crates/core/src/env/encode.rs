//! Raw observation features: the 32-channel spatial tensor, per-entity
//! attribute rows, the enemy running average and the instruction window.

use crate::action::ActionType;
use crate::game::{EnemySnapshot, Unit, Visibility};
use crate::map::Terrain;
use crate::types::{EntityId, UnitType, MAP_SIZE, NUM_CELLS};
use crate::view::PlayerView;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

pub const NUM_CHANNELS: usize = 32;
/// First channel of each block.
pub const CH_VISIBILITY: usize = 0;
pub const CH_TERRAIN: usize = 3;
pub const CH_OWN: usize = 5;
pub const CH_ENEMY: usize = 18;
pub const CH_RESOURCE: usize = 31;
pub const SPATIAL_LEN: usize = NUM_CHANNELS * NUM_CELLS;

/// type one-hot, hp fraction, current and previous action one-hot,
/// cooldown fraction, x, y.
pub const UNIT_FEATURES: usize = UnitType::COUNT + 1 + 2 * ActionType::COUNT + 1 + 2;

pub const INSTRUCTION_WINDOW: usize = 5;
pub const EMA_DECAY: f64 = 0.997;

/// Index into a `[channel][y][x]` spatial buffer.
pub fn spatial_index(channel: usize, x: i32, y: i32) -> usize {
    channel * NUM_CELLS + (y * MAP_SIZE + x) as usize
}

/// The 32x32x32 spatial tensor, channel-major. Enemy channels count
/// last-seen snapshots, so nothing outside the player's memory shows up.
pub fn encode_spatial(view: &PlayerView) -> Vec<f32> {
    let mut t = vec![0.0f32; SPATIAL_LEN];
    for (i, v) in view.memory().grid().iter().enumerate() {
        let ch = match v {
            Visibility::Invisible => 0,
            Visibility::Seen => 1,
            Visibility::Visible => 2,
        };
        t[(CH_VISIBILITY + ch) * NUM_CELLS + i] = 1.0;
    }
    for c in crate::map::MapGrid::cells() {
        let ch = match view.terrain(c) {
            Terrain::Grass => 0,
            Terrain::Water => 1,
        };
        t[spatial_index(CH_TERRAIN + ch, c.x, c.y)] = 1.0;
    }
    for u in view.own_units() {
        let c = u.cell();
        t[spatial_index(CH_OWN + u.kind.index(), c.x, c.y)] += 1.0;
    }
    for e in view.enemies() {
        let c = e.cell();
        t[spatial_index(CH_ENEMY + e.kind.index(), c.x, c.y)] += 1.0;
    }
    for r in view.resources().iter().filter(|r| r.remaining > 0) {
        t[spatial_index(CH_RESOURCE, r.cell.x, r.cell.y)] += 1.0;
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRow {
    pub id: EntityId,
    pub features: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub id: EntityId,
    pub x: f32,
    pub y: f32,
    pub remaining: u32,
}

struct RowSource {
    kind: UnitType,
    hp: u32,
    current: ActionType,
    previous: ActionType,
    cooldown: u32,
    pos: (f32, f32),
}

impl From<&Unit> for RowSource {
    fn from(u: &Unit) -> Self {
        RowSource {
            kind: u.kind,
            hp: u.hp,
            current: u.current_action.action_type(),
            previous: u.previous_action.action_type(),
            cooldown: u.cooldown,
            pos: u.pos.to_f32(),
        }
    }
}

impl From<&EnemySnapshot> for RowSource {
    fn from(e: &EnemySnapshot) -> Self {
        RowSource {
            kind: e.kind,
            hp: e.hp,
            current: e.current_action.action_type(),
            previous: e.previous_action.action_type(),
            cooldown: e.cooldown,
            pos: e.pos.to_f32(),
        }
    }
}

fn row(view: &PlayerView, s: RowSource) -> Vec<f32> {
    let stats = view.balance.stats(s.kind);
    let mut f = vec![0.0f32; UNIT_FEATURES];
    f[s.kind.index()] = 1.0;
    let mut i = UnitType::COUNT;
    f[i] = s.hp as f32 / stats.hp as f32;
    i += 1;
    f[i + s.current.index()] = 1.0;
    i += ActionType::COUNT;
    f[i + s.previous.index()] = 1.0;
    i += ActionType::COUNT;
    f[i] = if stats.cooldown > 0 {
        s.cooldown as f32 / stats.cooldown as f32
    } else {
        0.0
    };
    f[i + 1] = s.pos.0;
    f[i + 2] = s.pos.1;
    f
}

/// Attribute rows for own units, then for remembered enemies (their
/// snapshot at the last tick they were seen).
pub fn encode_units(view: &PlayerView) -> (Vec<EntityRow>, Vec<EntityRow>) {
    let own = view
        .own_units()
        .map(|u| EntityRow {
            id: u.id,
            features: row(view, u.into()),
        })
        .collect();
    let enemy = view
        .enemies()
        .map(|e| EntityRow {
            id: e.id,
            features: row(view, e.into()),
        })
        .collect();
    (own, enemy)
}

pub fn encode_resources(view: &PlayerView) -> Vec<ResourceRow> {
    view.resources()
        .iter()
        .filter(|r| r.remaining > 0)
        .map(|r| ResourceRow {
            id: r.id,
            x: r.cell.x as f32 + 0.5,
            y: r.cell.y as f32 + 0.5,
            remaining: r.remaining,
        })
        .collect()
}

/// Exponential moving average of visible enemy counts per type, updated
/// once per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct EnemyAverage {
    values: [f64; UnitType::COUNT],
    decay: f64,
}

impl Default for EnemyAverage {
    fn default() -> Self {
        EnemyAverage::new(EMA_DECAY)
    }
}

impl EnemyAverage {
    pub fn new(decay: f64) -> Self {
        EnemyAverage {
            values: [0.0; UnitType::COUNT],
            decay,
        }
    }

    pub fn update_counts(&mut self, counts: &[u32; UnitType::COUNT]) {
        for (v, &c) in self.values.iter_mut().zip(counts) {
            *v = self.decay * *v + (1.0 - self.decay) * c as f64;
        }
    }

    pub fn update(&mut self, view: &PlayerView) {
        let mut counts = [0u32; UnitType::COUNT];
        for e in view.visible_enemies() {
            counts[e.kind.index()] += 1;
        }
        self.update_counts(&counts);
    }

    pub fn values(&self) -> [f32; UnitType::COUNT] {
        self.values.map(|v| v as f32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub text: String,
    pub age_ticks: u32,
    /// 1 for the newest instruction.
    pub order_index: u8,
}

/// The last few instructions with their issue ticks, newest last.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstructionHistory {
    entries: VecDeque<(u32, String)>,
}

impl InstructionHistory {
    pub fn push(&mut self, tick: u32, text: impl Into<String>) {
        if self.entries.len() == INSTRUCTION_WINDOW {
            self.entries.pop_front();
        }
        self.entries.push_back((tick, text.into()));
    }

    /// The window as seen at `now`, newest first.
    pub fn window(&self, now: u32) -> Vec<InstructionRecord> {
        self.entries
            .iter()
            .rev()
            .enumerate()
            .map(|(i, (t, text))| InstructionRecord {
                text: text.clone(),
                age_ticks: now.saturating_sub(*t),
                order_index: (i + 1) as u8,
            })
            .collect()
    }

    /// Ticks since the newest instruction, or -1 if none was given.
    pub fn since_current(&self, now: u32) -> i64 {
        self.entries.back().map_or(-1, |(t, _)| now.saturating_sub(*t) as i64)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Everything the agent gets to see at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub tick: u32,
    #[serde(skip)]
    pub spatial: Vec<f32>,
    pub my_units: Vec<EntityRow>,
    pub enemy_units: Vec<EntityRow>,
    pub resources: Vec<ResourceRow>,
    pub money: u32,
    pub enemy_average: [f32; UnitType::COUNT],
    /// -1 when no instruction has been issued.
    pub ticks_since_instruction: i64,
    pub instructions: Vec<InstructionRecord>,
}

impl Observation {
    pub fn encode(view: &PlayerView, average: &EnemyAverage, history: &InstructionHistory) -> Self {
        let (my_units, enemy_units) = encode_units(view);
        Observation {
            tick: view.tick,
            spatial: encode_spatial(view),
            my_units,
            enemy_units,
            resources: encode_resources(view),
            money: view.money,
            enemy_average: average.values(),
            ticks_since_instruction: history.since_current(view.tick),
            instructions: history.window(view.tick),
        }
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.spatial[c * NUM_CELLS..(c + 1) * NUM_CELLS]
    }
}
