//! Three-state fog of war and last-seen enemy memory.

use crate::action::ActionRecord;
use crate::types::{Cell, EntityId, PlayerId, Pos, UnitType, NUM_CELLS};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Invisible,
    Seen,
    Visible,
}

/// What a player remembers about an enemy unit: its attributes at the last
/// tick it stood in a visible cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnemySnapshot {
    pub id: EntityId,
    pub owner: PlayerId,
    pub kind: UnitType,
    pub hp: u32,
    pub pos: Pos,
    pub current_action: ActionRecord,
    pub previous_action: ActionRecord,
    pub cooldown: u32,
    pub complete: bool,
    pub last_seen_tick: u32,
    /// Whether the unit is in a visible cell right now.
    pub visible: bool,
}

impl EnemySnapshot {
    fn capture(u: &Unit, tick: u32) -> Self {
        EnemySnapshot {
            id: u.id,
            owner: u.owner,
            kind: u.kind,
            hp: u.hp,
            pos: u.pos,
            current_action: u.current_action,
            previous_action: u.previous_action,
            cooldown: u.cooldown,
            complete: u.complete,
            last_seen_tick: tick,
            visible: true,
        }
    }

    pub fn cell(&self) -> Cell {
        self.pos.cell()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlayerMemory {
    grid: Vec<Visibility>,
    pub snapshots: BTreeMap<EntityId, EnemySnapshot>,
}

impl Default for PlayerMemory {
    fn default() -> Self {
        PlayerMemory {
            grid: vec![Visibility::Invisible; NUM_CELLS],
            snapshots: BTreeMap::new(),
        }
    }
}

impl PlayerMemory {
    pub fn get(&self, cell: Cell) -> Visibility {
        if cell.in_bounds() {
            self.grid[cell.index()]
        } else {
            Visibility::Invisible
        }
    }

    pub fn is_visible(&self, cell: Cell) -> bool {
        self.get(cell) == Visibility::Visible
    }

    pub fn grid(&self) -> &[Visibility] {
        &self.grid
    }

    /// Recomputes the grid from the player's live units, then refreshes
    /// enemy snapshots. Visible cells that lose coverage become Seen; Seen
    /// never reverts to Invisible.
    pub(crate) fn update(&mut self, player: PlayerId, units: &[Unit], sight: i32, tick: u32) {
        for v in self.grid.iter_mut() {
            if *v == Visibility::Visible {
                *v = Visibility::Seen;
            }
        }
        for u in units.iter().filter(|u| u.owner == player) {
            let c = u.pos.cell();
            for y in (c.y - sight).max(0)..=(c.y + sight).min(crate::types::MAP_SIZE - 1) {
                for x in (c.x - sight).max(0)..=(c.x + sight).min(crate::types::MAP_SIZE - 1) {
                    self.grid[Cell::new(x, y).index()] = Visibility::Visible;
                }
            }
        }
        for s in self.snapshots.values_mut() {
            s.visible = false;
        }
        for u in units.iter().filter(|u| u.owner != player) {
            if self.is_visible(u.pos.cell()) {
                self.snapshots.insert(u.id, EnemySnapshot::capture(u, tick));
            }
        }
        // A remembered unit whose last position is in plain view but which is
        // not itself visible has left (or died): forget it.
        let grid = &self.grid;
        self.snapshots
            .retain(|_, s| s.visible || grid[s.cell().index()] != Visibility::Visible);
    }
}
