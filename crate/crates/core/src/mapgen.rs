//! Procedural map generation.
//!
//! Town halls are placed at least [`MIN_SPAWN_SEPARATION`] cells apart
//! (Chebyshev), then 2–6 rectangular or elliptical water blobs are dropped,
//! preferring the band around the perpendicular bisector of the two halls so
//! that chokepoints form between the bases. A blob is rejected when it
//! would disconnect the halls, touch the 3x3 block around a hall, or push
//! the water share over `water_fraction`. Resources go on grass cells whose
//! ground-path distances to the two halls differ by at most the tolerance.

use crate::map::{MapGrid, MapParams, Terrain};
use crate::path::{self, UNREACHABLE};
use crate::types::{Cell, MAP_SIZE, NUM_CELLS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MIN_SPAWN_SEPARATION: i32 = 16;
/// Halls keep this many cells from the map edge.
pub const SPAWN_MARGIN: i32 = 2;
pub const MAX_WATER_FRACTION: f64 = 0.35;
pub const MAX_RESOURCES: usize = 16;
const MAX_ATTEMPTS: usize = 64;
const MIN_RESOURCE_SPACING: i32 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapGenError {
    #[error("map parameters out of range: {0}")]
    InvalidParams(String),
    #[error("map generation failed after {attempts} attempts for seed {seed}")]
    GenerationFailed { seed: u64, attempts: usize },
}

/// Whether an 8-connected ground path joins `a` and `b`.
pub fn verify_connectivity(map: &MapGrid, a: Cell, b: Cell) -> bool {
    path::connected(map, a, b)
}

pub fn check_params(params: &MapParams) -> Result<(), MapGenError> {
    let bad = |m: String| Err(MapGenError::InvalidParams(m));
    if !(0.0..=MAX_WATER_FRACTION).contains(&params.water_fraction) {
        return bad(format!("water_fraction must be in [0, {MAX_WATER_FRACTION}]"));
    }
    if params.n_resources > MAX_RESOURCES {
        return bad(format!("n_resources must be at most {MAX_RESOURCES}"));
    }
    if params.equidistance_tolerance < 0 {
        return bad("equidistance_tolerance must be non-negative".into());
    }
    Ok(())
}

/// Generates a map; the same `(seed, params)` always yields the same map.
pub fn generate_map(seed: u64, params: MapParams) -> Result<MapGrid, MapGenError> {
    check_params(&params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(map) = attempt(&mut rng, seed, params) {
            return Ok(map);
        }
    }
    Err(MapGenError::GenerationFailed {
        seed,
        attempts: MAX_ATTEMPTS,
    })
}

fn attempt(rng: &mut ChaCha8Rng, seed: u64, params: MapParams) -> Option<MapGrid> {
    let mut map = MapGrid::empty();
    map.seed = seed;
    map.params = params;

    let (a, b) = place_halls(rng)?;
    let mut spawns = [a, b];
    spawns.sort_by_key(|c| (c.y, c.x));
    map.townhall_spawns = spawns.to_vec();

    let budget = (params.water_fraction * NUM_CELLS as f64).floor() as usize;
    if budget > 0 {
        add_water(rng, &mut map, spawns, budget);
    }

    map.resource_spawns = place_resources(rng, &map, spawns, params)?;
    map.resource_spawns.sort_by_key(|c| (c.y, c.x));
    debug_assert!(map.validate().is_ok());
    Some(map)
}

fn place_halls(rng: &mut ChaCha8Rng) -> Option<(Cell, Cell)> {
    let lo = SPAWN_MARGIN;
    let hi = MAP_SIZE - 1 - SPAWN_MARGIN;
    let a = Cell::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi));
    for _ in 0..200 {
        let b = Cell::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi));
        if a.chebyshev(b) >= MIN_SPAWN_SEPARATION {
            return Some((a, b));
        }
    }
    None
}

fn near_spawn(c: Cell, spawns: [Cell; 2]) -> bool {
    spawns.iter().any(|s| s.chebyshev(c) <= 1)
}

fn add_water(rng: &mut ChaCha8Rng, map: &mut MapGrid, spawns: [Cell; 2], budget: usize) {
    let blobs = rng.random_range(2..=6usize);
    let per_blob = (budget / blobs).max(1);
    let (ax, ay) = (spawns[0].x as f64, spawns[0].y as f64);
    let (bx, by) = (spawns[1].x as f64, spawns[1].y as f64);
    let (mx, my) = ((ax + bx) / 2.0, (ay + by) / 2.0);
    let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
    // Unit vector along the hall axis and its perpendicular.
    let (ux, uy) = ((bx - ax) / len, (by - ay) / len);
    let (px, py) = (-uy, ux);

    let mut water = 0usize;
    let mut placed = 0;
    let mut tries = 0;
    while placed < blobs && tries < blobs * 8 && water < budget {
        tries += 1;
        let (cx, cy) = if rng.random_bool(0.75) {
            let along = rng.random_range(-3.0..=3.0);
            let across = rng.random_range(-16.0..=16.0);
            (mx + ux * along + px * across, my + uy * along + py * across)
        } else {
            (rng.random_range(0.0..MAP_SIZE as f64), rng.random_range(0.0..MAP_SIZE as f64))
        };
        // Blob area roughly tracks the per-blob share of the budget.
        let side = ((per_blob as f64).sqrt() * rng.random_range(0.6..=1.4)).max(1.0);
        let aspect = rng.random_range(0.5..=2.0f64).sqrt();
        let hw = (side * aspect / 2.0).max(0.5);
        let hh = (side / aspect / 2.0).max(0.5);
        let ellipse = rng.random_bool(0.5);

        let mut cells = Vec::new();
        for c in MapGrid::cells() {
            let (dx, dy) = (c.x as f64 + 0.5 - cx, c.y as f64 + 0.5 - cy);
            let inside = if ellipse {
                (dx / hw).powi(2) + (dy / hh).powi(2) <= 1.0
            } else {
                dx.abs() <= hw && dy.abs() <= hh
            };
            if inside && map.is_grass(c) {
                cells.push(c);
            }
        }
        if cells.is_empty() || water + cells.len() > budget || cells.iter().any(|&c| near_spawn(c, spawns)) {
            continue;
        }
        for &c in &cells {
            map.set_terrain(c, Terrain::Water);
        }
        if verify_connectivity(map, spawns[0], spawns[1]) {
            water += cells.len();
            placed += 1;
        } else {
            for &c in &cells {
                map.set_terrain(c, Terrain::Grass);
            }
        }
    }
}

fn place_resources(rng: &mut ChaCha8Rng, map: &MapGrid, spawns: [Cell; 2], params: MapParams) -> Option<Vec<Cell>> {
    if params.n_resources == 0 {
        return Some(Vec::new());
    }
    let da = path::distance_field(map, spawns[0], false);
    let db = path::distance_field(map, spawns[1], false);
    let mut candidates: Vec<Cell> = MapGrid::cells()
        .filter(|&c| {
            let (x, y) = (da[c.index()], db[c.index()]);
            map.is_grass(c)
                && x != UNREACHABLE
                && y != UNREACHABLE
                && spawns.iter().all(|s| s.chebyshev(c) >= 3)
                && (x as i32 - y as i32).abs() <= params.equidistance_tolerance
        })
        .collect();
    let mut out = Vec::with_capacity(params.n_resources);
    while out.len() < params.n_resources {
        if candidates.is_empty() {
            return None;
        }
        let c = candidates.swap_remove(rng.random_range(0..candidates.len()));
        out.push(c);
        candidates.retain(|o| o.chebyshev(c) >= MIN_RESOURCE_SPACING);
    }
    Some(out)
}
