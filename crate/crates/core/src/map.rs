//! The 32x32 terrain lattice with spawn and resource placements, plus its
//! text serialization.
//!
//! Text format: a header line followed by 32 rows of 32 characters.
//!
//! ```text
//! # minirts-map v1 seed=7 water_fraction=0.2 n_resources=5 tolerance=4
//! ................................
//! ...T......~~~...................
//! ```
//!
//! `.` grass, `~` water, `T` town hall spawn (grass), `R` resource node
//! (grass). Spawns are listed in row-major order; the first `T` belongs to
//! player 0.

use crate::path;
use crate::types::{Cell, MAP_SIZE, NUM_CELLS};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terrain {
    Grass,
    Water,
}

/// Generation parameters recorded alongside a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub water_fraction: f64,
    pub n_resources: usize,
    pub equidistance_tolerance: i32,
}

impl Default for MapParams {
    fn default() -> Self {
        MapParams {
            water_fraction: 0.2,
            n_resources: 5,
            equidistance_tolerance: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("map text: {0}")]
    Parse(String),
    #[error("invalid map: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapGrid {
    pub seed: u64,
    pub params: MapParams,
    terrain: Vec<Terrain>,
    pub townhall_spawns: Vec<Cell>,
    pub resource_spawns: Vec<Cell>,
}

impl MapGrid {
    /// An all-grass map with no spawns.
    pub fn empty() -> Self {
        MapGrid {
            seed: 0,
            params: MapParams::default(),
            terrain: vec![Terrain::Grass; NUM_CELLS],
            townhall_spawns: Vec::new(),
            resource_spawns: Vec::new(),
        }
    }

    pub fn terrain(&self, cell: Cell) -> Terrain {
        self.terrain[cell.index()]
    }

    pub fn set_terrain(&mut self, cell: Cell, t: Terrain) {
        self.terrain[cell.index()] = t;
    }

    pub fn is_grass(&self, cell: Cell) -> bool {
        cell.in_bounds() && self.terrain[cell.index()] == Terrain::Grass
    }

    pub fn passable(&self, cell: Cell, flying: bool) -> bool {
        cell.in_bounds() && (flying || self.terrain[cell.index()] == Terrain::Grass)
    }

    pub fn water_fraction(&self) -> f64 {
        self.terrain.iter().filter(|t| **t == Terrain::Water).count() as f64 / NUM_CELLS as f64
    }

    pub fn cells() -> impl Iterator<Item = Cell> {
        (0..NUM_CELLS).map(Cell::from_index)
    }

    /// Checks the structural invariants required to start a game.
    pub fn validate(&self) -> Result<(), MapError> {
        let invalid = |m: &str| Err(MapError::Invalid(m.to_string()));
        if self.townhall_spawns.len() != 2 {
            return invalid("exactly two town hall spawns required");
        }
        let [a, b] = [self.townhall_spawns[0], self.townhall_spawns[1]];
        if a == b {
            return invalid("town hall spawns coincide");
        }
        for &s in &self.townhall_spawns {
            if !self.is_grass(s) {
                return invalid("town hall spawn not on grass");
            }
            if s.neighbors().all(|n| !self.is_grass(n)) {
                return invalid("town hall spawn enclosed by water");
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &r in &self.resource_spawns {
            if !self.is_grass(r) {
                return invalid("resource not on grass");
            }
            if self.townhall_spawns.contains(&r) || !seen.insert(r) {
                return invalid("resource cells must be distinct and off spawns");
            }
        }
        if !path::connected(self, a, b) {
            return invalid("no ground path between town halls");
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(NUM_CELLS + 128);
        writeln!(
            out,
            "# minirts-map v1 seed={} water_fraction={} n_resources={} tolerance={}",
            self.seed, self.params.water_fraction, self.params.n_resources, self.params.equidistance_tolerance
        )
        .unwrap();
        for y in 0..MAP_SIZE {
            for x in 0..MAP_SIZE {
                let c = Cell::new(x, y);
                let ch = if self.townhall_spawns.contains(&c) {
                    'T'
                } else if self.resource_spawns.contains(&c) {
                    'R'
                } else if self.terrain(c) == Terrain::Water {
                    '~'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MapError> {
        let err = |m: String| MapError::Parse(m);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err("empty input".into()))?;
        let rest = header
            .strip_prefix("# minirts-map v1")
            .ok_or_else(|| err(format!("bad header `{header}`")))?;
        let mut map = MapGrid::empty();
        for kv in rest.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| err(format!("bad header field `{kv}`")))?;
            let bad = |_| err(format!("bad value for `{k}`"));
            match k {
                "seed" => map.seed = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "water_fraction" => {
                    map.params.water_fraction = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?
                }
                "n_resources" => {
                    map.params.n_resources = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                "tolerance" => {
                    map.params.equidistance_tolerance =
                        v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                _ => return Err(err(format!("unknown header field `{k}`"))),
            }
        }
        let mut rows = 0;
        for (y, line) in lines.enumerate() {
            if y as i32 >= MAP_SIZE {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(err("too many rows".into()));
            }
            let chars: Vec<char> = line.chars().collect();
            if chars.len() != MAP_SIZE as usize {
                return Err(err(format!("row {y} has {} columns", chars.len())));
            }
            for (x, ch) in chars.into_iter().enumerate() {
                let c = Cell::new(x as i32, y as i32);
                match ch {
                    '.' => {}
                    '~' => map.set_terrain(c, Terrain::Water),
                    'T' => map.townhall_spawns.push(c),
                    'R' => map.resource_spawns.push(c),
                    other => return Err(err(format!("unexpected character `{other}` at {c}"))),
                }
            }
            rows += 1;
        }
        if rows != MAP_SIZE {
            return Err(err(format!("expected {MAP_SIZE} rows, found {rows}")));
        }
        Ok(map)
    }
}
