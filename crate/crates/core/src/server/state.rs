//! The human team's view of the game as sent over the wire, and the diffs
//! between consecutive views.
//!
//! Only what the team may know goes in: own units, remembered enemy
//! snapshots, the public resource list, and the team's visibility grid.

use crate::action::ActionRecord;
use crate::game::Visibility;
use crate::types::{Cell, EntityId, UnitType, NUM_CELLS};
use crate::view::PlayerView;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitState {
    pub id: EntityId,
    pub kind: UnitType,
    pub hp: u32,
    pub x: f32,
    pub y: f32,
    pub action: ActionRecord,
    pub cooldown: u32,
    pub carry: u32,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<UnitType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyState {
    pub id: EntityId,
    pub kind: UnitType,
    pub hp: u32,
    pub x: f32,
    pub y: f32,
    pub action: ActionRecord,
    pub complete: bool,
    pub visible: bool,
    pub last_seen_tick: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceState {
    pub id: EntityId,
    pub cell: Cell,
    pub remaining: u32,
}

/// Everything a client holds. Rebuilt from diffs on the client side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeamSnapshot {
    pub tick: u32,
    pub money: u32,
    pub units: BTreeMap<EntityId, UnitState>,
    pub enemies: BTreeMap<EntityId, EnemyState>,
    pub resources: BTreeMap<EntityId, ResourceState>,
    /// One entry per cell, row-major; empty until the first full update.
    pub visibility: Vec<Visibility>,
    /// Terrain in the map text format.
    pub map: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateDiff {
    /// Replace the client cache rather than patch it.
    #[serde(default)]
    pub full: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub money: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<UnitState>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed_units: Vec<EntityId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enemies: Vec<EnemyState>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed_enemies: Vec<EntityId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resources: Vec<ResourceState>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed_resources: Vec<EntityId>,
    /// Changed cells as `(index, visibility)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub visibility: Vec<(u16, Visibility)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
}

impl StateDiff {
    pub fn is_empty(&self) -> bool {
        *self == StateDiff::default()
    }
}

impl TeamSnapshot {
    pub fn from_view(view: &PlayerView) -> TeamSnapshot {
        let units = view
            .own_units()
            .map(|u| {
                let (x, y) = u.pos.to_f32();
                let s = UnitState {
                    id: u.id,
                    kind: u.kind,
                    hp: u.hp,
                    x,
                    y,
                    action: u.current_action,
                    cooldown: u.cooldown,
                    carry: u.carry,
                    complete: u.complete,
                    training: u.training(),
                };
                (u.id, s)
            })
            .collect();
        let enemies = view
            .enemies()
            .map(|e| {
                let (x, y) = e.pos.to_f32();
                let s = EnemyState {
                    id: e.id,
                    kind: e.kind,
                    hp: e.hp,
                    x,
                    y,
                    action: e.current_action,
                    complete: e.complete,
                    visible: e.visible,
                    last_seen_tick: e.last_seen_tick,
                };
                (e.id, s)
            })
            .collect();
        let resources = view
            .resources()
            .iter()
            .map(|r| {
                let s = ResourceState {
                    id: r.id,
                    cell: r.cell,
                    remaining: r.remaining,
                };
                (r.id, s)
            })
            .collect();
        TeamSnapshot {
            tick: view.tick,
            money: view.money,
            units,
            enemies,
            resources,
            visibility: view.memory().grid().to_vec(),
            map: view.terrain_map().to_text(),
        }
    }

    /// The diff that turns a client holding `prev` into one holding `self`;
    /// with no `prev` it is a full update.
    pub fn diff_from(&self, prev: Option<&TeamSnapshot>) -> StateDiff {
        let Some(prev) = prev else {
            return StateDiff {
                full: true,
                money: Some(self.money),
                units: self.units.values().cloned().collect(),
                enemies: self.enemies.values().cloned().collect(),
                resources: self.resources.values().cloned().collect(),
                visibility: self.visibility.iter().enumerate().map(|(i, v)| (i as u16, *v)).collect(),
                map: Some(self.map.clone()),
                ..StateDiff::default()
            };
        };
        let (units, removed_units) = map_diff(&prev.units, &self.units);
        let (enemies, removed_enemies) = map_diff(&prev.enemies, &self.enemies);
        let (resources, removed_resources) = map_diff(&prev.resources, &self.resources);
        let visibility = self
            .visibility
            .iter()
            .enumerate()
            .filter(|&(i, v)| prev.visibility.get(i) != Some(v))
            .map(|(i, v)| (i as u16, *v))
            .collect();
        StateDiff {
            full: false,
            money: (self.money != prev.money).then_some(self.money),
            units,
            removed_units,
            enemies,
            removed_enemies,
            resources,
            removed_resources,
            visibility,
            map: (self.map != prev.map).then(|| self.map.clone()),
        }
    }

    /// Client-side application of a diff received at `tick`.
    pub fn apply(&mut self, tick: u32, diff: &StateDiff) {
        if diff.full {
            *self = TeamSnapshot::default();
            self.visibility = vec![Visibility::Invisible; NUM_CELLS];
        }
        self.tick = tick;
        if let Some(m) = diff.money {
            self.money = m;
        }
        for u in &diff.units {
            self.units.insert(u.id, u.clone());
        }
        for id in &diff.removed_units {
            self.units.remove(id);
        }
        for e in &diff.enemies {
            self.enemies.insert(e.id, e.clone());
        }
        for id in &diff.removed_enemies {
            self.enemies.remove(id);
        }
        for r in &diff.resources {
            self.resources.insert(r.id, r.clone());
        }
        for id in &diff.removed_resources {
            self.resources.remove(id);
        }
        for &(i, v) in &diff.visibility {
            if let Some(slot) = self.visibility.get_mut(i as usize) {
                *slot = v;
            }
        }
        if let Some(m) = &diff.map {
            self.map = m.clone();
        }
    }
}

fn map_diff<T: Clone + PartialEq>(prev: &BTreeMap<EntityId, T>, next: &BTreeMap<EntityId, T>) -> (Vec<T>, Vec<EntityId>) {
    let changed = next
        .iter()
        .filter(|(id, v)| prev.get(id) != Some(v))
        .map(|(_, v)| v.clone())
        .collect();
    let removed = prev.keys().filter(|id| !next.contains_key(id)).copied().collect();
    (changed, removed)
}
