//! Primitive domain types shared across the engine.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Side length of the square game map, in cells.
pub const MAP_SIZE: i32 = 32;
/// Number of cells on the map.
pub const NUM_CELLS: usize = (MAP_SIZE * MAP_SIZE) as usize;
/// Fixed-point subdivisions per cell.
pub const CELL_UNITS: i32 = 256;

/// Identifier of a unit, building or resource node. Unique within one game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Player index, 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub u8);

impl PlayerId {
    pub const ZERO: PlayerId = PlayerId(0);
    pub const ONE: PlayerId = PlayerId(1);

    pub fn opponent(self) -> PlayerId {
        PlayerId(1 - self.0)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// A map cell in integer grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn in_bounds(self) -> bool {
        (0..MAP_SIZE).contains(&self.x) && (0..MAP_SIZE).contains(&self.y)
    }

    /// Row-major index; caller guarantees the cell is in bounds.
    pub fn index(self) -> usize {
        (self.y * MAP_SIZE + self.x) as usize
    }

    pub fn from_index(idx: usize) -> Self {
        Cell::new(idx as i32 % MAP_SIZE, idx as i32 / MAP_SIZE)
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn center(self) -> Pos {
        Pos {
            x: self.x * CELL_UNITS + CELL_UNITS / 2,
            y: self.y * CELL_UNITS + CELL_UNITS / 2,
        }
    }

    /// In-bounds 8-neighbours in lexicographic `(dx, dy)` order.
    pub fn neighbors(self) -> impl Iterator<Item = Cell> {
        const OFFSETS: [(i32, i32); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        OFFSETS
            .iter()
            .map(move |&(dx, dy)| Cell::new(self.x + dx, self.y + dy))
            .filter(|c| c.in_bounds())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Continuous position in fixed point, 1/256 of a cell per unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub fn cell(self) -> Cell {
        Cell::new(self.x.div_euclid(CELL_UNITS), self.y.div_euclid(CELL_UNITS))
    }

    /// Position in cell units as floats, for feature encoding.
    pub fn to_f32(self) -> (f32, f32) {
        (
            self.x as f32 / CELL_UNITS as f32,
            self.y as f32 / CELL_UNITS as f32,
        )
    }

    /// Steps toward `target` moving at most `speed` along each axis.
    pub fn step_toward(self, target: Pos, speed: i32) -> Pos {
        Pos {
            x: self.x + (target.x - self.x).clamp(-speed, speed),
            y: self.y + (target.y - self.y).clamp(-speed, speed),
        }
    }
}

/// The 13 player-ownable unit kinds: 7 army types followed by 6 buildings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitType {
    Peasant,
    Spearman,
    Swordman,
    Cavalry,
    Dragon,
    Archer,
    Catapult,
    TownHall,
    Barrack,
    Blacksmith,
    Stable,
    Workshop,
    GuardTower,
}

impl UnitType {
    pub const COUNT: usize = 13;

    pub const ALL: [UnitType; 13] = [
        UnitType::Peasant,
        UnitType::Spearman,
        UnitType::Swordman,
        UnitType::Cavalry,
        UnitType::Dragon,
        UnitType::Archer,
        UnitType::Catapult,
        UnitType::TownHall,
        UnitType::Barrack,
        UnitType::Blacksmith,
        UnitType::Stable,
        UnitType::Workshop,
        UnitType::GuardTower,
    ];

    pub const ARMY: [UnitType; 7] = [
        UnitType::Peasant,
        UnitType::Spearman,
        UnitType::Swordman,
        UnitType::Cavalry,
        UnitType::Dragon,
        UnitType::Archer,
        UnitType::Catapult,
    ];

    pub const BUILDINGS: [UnitType; 6] = [
        UnitType::TownHall,
        UnitType::Barrack,
        UnitType::Blacksmith,
        UnitType::Stable,
        UnitType::Workshop,
        UnitType::GuardTower,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<UnitType> {
        Self::ALL.get(idx).copied()
    }

    pub fn is_building(self) -> bool {
        self.index() >= UnitType::TownHall.index()
    }

    pub fn is_army(self) -> bool {
        !self.is_building()
    }

    pub fn is_flying(self) -> bool {
        self == UnitType::Dragon
    }

    /// Unit kinds this building can train.
    pub fn produces(self) -> &'static [UnitType] {
        match self {
            UnitType::TownHall => &[UnitType::Peasant],
            UnitType::Barrack => &[UnitType::Spearman],
            UnitType::Blacksmith => &[UnitType::Swordman],
            UnitType::Stable => &[UnitType::Cavalry],
            UnitType::Workshop => &[UnitType::Catapult, UnitType::Dragon, UnitType::Archer],
            _ => &[],
        }
    }

    /// The building that trains this army type.
    pub fn producer(self) -> Option<UnitType> {
        Self::BUILDINGS
            .iter()
            .copied()
            .find(|b| b.produces().contains(&self))
    }

    pub fn name(self) -> &'static str {
        match self {
            UnitType::Peasant => "peasant",
            UnitType::Spearman => "spearman",
            UnitType::Swordman => "swordman",
            UnitType::Cavalry => "cavalry",
            UnitType::Dragon => "dragon",
            UnitType::Archer => "archer",
            UnitType::Catapult => "catapult",
            UnitType::TownHall => "town_hall",
            UnitType::Barrack => "barrack",
            UnitType::Blacksmith => "blacksmith",
            UnitType::Stable => "stable",
            UnitType::Workshop => "workshop",
            UnitType::GuardTower => "guard_tower",
        }
    }
}

impl UnitType {
    /// Words used in natural-language text, e.g. "guard tower".
    pub fn words(self) -> &'static str {
        match self {
            UnitType::TownHall => "town hall",
            UnitType::GuardTower => "guard tower",
            other => other.name(),
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            UnitType::Peasant => "peasants",
            UnitType::Spearman => "spearmen",
            UnitType::Swordman => "swordmen",
            UnitType::Cavalry => "cavalry",
            UnitType::Dragon => "dragons",
            UnitType::Archer => "archers",
            UnitType::Catapult => "catapults",
            UnitType::TownHall => "town halls",
            UnitType::Barrack => "barracks",
            UnitType::Blacksmith => "blacksmiths",
            UnitType::Stable => "stables",
            UnitType::Workshop => "workshops",
            UnitType::GuardTower => "guard towers",
        }
    }
}

impl fmt::Display for UnitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown unit type `{0}`")]
pub struct UnknownUnitType(pub String);

impl FromStr for UnitType {
    type Err = UnknownUnitType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        UnitType::ALL
            .iter()
            .copied()
            .find(|t| t.name() == norm || t.name().replace('_', "") == norm)
            .ok_or_else(|| UnknownUnitType(s.to_string()))
    }
}
