//! Fog-filtered, player-centric read access to a game.
//!
//! Bots, the observation encoder and the session server only ever see a
//! [`PlayerView`]: own units in full, enemies through last-seen snapshots,
//! plus the public map and resource nodes.

use crate::config::Balance;
use crate::game::{EnemySnapshot, Game, PlayerMemory, ResourceNode, Unit, Visibility};
use crate::map::{MapGrid, Terrain};
use crate::path;
use crate::types::{Cell, EntityId, PlayerId, UnitType};

#[derive(Clone, Copy)]
pub struct PlayerView<'a> {
    pub player: PlayerId,
    pub tick: u32,
    pub money: u32,
    pub balance: &'a Balance,
    map: &'a MapGrid,
    units: &'a [Unit],
    memory: &'a PlayerMemory,
    resources: &'a [ResourceNode],
}

impl<'a> PlayerView<'a> {
    pub(crate) fn new(game: &'a Game, player: PlayerId) -> Self {
        let st = &game.state;
        PlayerView {
            player,
            tick: st.tick,
            money: st.money[player.index()],
            balance: &game.balance,
            map: &st.map,
            units: &st.units,
            memory: &st.memory[player.index()],
            resources: &st.resources,
        }
    }

    pub fn own_units(&self) -> impl Iterator<Item = &'a Unit> + 'a {
        let p = self.player;
        self.units.iter().filter(move |u| u.owner == p)
    }

    pub fn own_unit(&self, id: EntityId) -> Option<&'a Unit> {
        self.units
            .binary_search_by_key(&id, |u| u.id)
            .ok()
            .map(|i| &self.units[i])
            .filter(|u| u.owner == self.player)
    }

    pub fn own_of_kind(&self, kind: UnitType) -> impl Iterator<Item = &'a Unit> + 'a {
        self.own_units().filter(move |u| u.kind == kind)
    }

    /// Every remembered enemy, visible or not.
    pub fn enemies(&self) -> impl Iterator<Item = &'a EnemySnapshot> + 'a {
        self.memory.snapshots.values()
    }

    /// Enemies standing in currently visible cells.
    pub fn visible_enemies(&self) -> impl Iterator<Item = &'a EnemySnapshot> + 'a {
        self.enemies().filter(|s| s.visible)
    }

    pub fn enemy(&self, id: EntityId) -> Option<&'a EnemySnapshot> {
        self.memory.snapshots.get(&id)
    }

    pub fn visibility(&self, cell: Cell) -> Visibility {
        self.memory.get(cell)
    }

    pub fn memory(&self) -> &'a PlayerMemory {
        self.memory
    }

    /// Own town hall spawn (the opponent's spawn is not exposed).
    pub fn own_spawn(&self) -> Cell {
        self.map.townhall_spawns[self.player.index()]
    }

    pub fn terrain(&self, cell: Cell) -> Terrain {
        self.map.terrain(cell)
    }

    pub fn is_grass(&self, cell: Cell) -> bool {
        self.map.is_grass(cell)
    }

    /// Terrain-only copy of the map (no spawn or resource placements).
    pub fn terrain_map(&self) -> MapGrid {
        let mut m = MapGrid::empty();
        for c in MapGrid::cells() {
            m.set_terrain(c, self.map.terrain(c));
        }
        m
    }

    pub fn find_path(&self, from: Cell, to: Cell, flying: bool) -> Option<Vec<Cell>> {
        path::find_path(self.map, from, to, flying)
    }

    pub fn distance_field(&self, from: Cell, flying: bool) -> Vec<u16> {
        path::distance_field(self.map, from, flying)
    }

    pub fn resources(&self) -> &'a [ResourceNode] {
        self.resources
    }

    /// Whether a build order on `cell` looks legal from what this player
    /// knows (terrain, resources, own buildings, remembered enemy buildings).
    pub fn looks_buildable(&self, cell: Cell) -> bool {
        self.map.is_grass(cell)
            && !self.resources.iter().any(|r| r.cell == cell)
            && !self.own_units().any(|u| u.kind.is_building() && u.cell() == cell)
            && !self.enemies().any(|s| s.kind.is_building() && s.cell() == cell)
    }
}
