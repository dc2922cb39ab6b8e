//! Grid search on the 8-connected cell lattice.

use crate::map::MapGrid;
use crate::types::{Cell, NUM_CELLS};
use std::collections::VecDeque;

pub const UNREACHABLE: u16 = u16::MAX;

/// Whether a unit may step from `from` to the adjacent cell `to`. Ground
/// units may not squeeze diagonally between two water cells' corners:
/// a diagonal step needs both orthogonal cells to be grass as well.
pub fn can_step(map: &MapGrid, from: Cell, to: Cell, flying: bool) -> bool {
    if flying {
        return to.in_bounds();
    }
    if !map.is_grass(to) {
        return false;
    }
    from.x == to.x
        || from.y == to.y
        || (map.is_grass(Cell::new(to.x, from.y)) && map.is_grass(Cell::new(from.x, to.y)))
}

/// Shortest 8-connected path from `from` to `to`, excluding `from` and
/// including `to`. Ground units avoid water; flying units ignore terrain.
/// Ties are broken by visiting neighbours in lexicographic `(dx, dy)` order.
pub fn find_path(map: &MapGrid, from: Cell, to: Cell, flying: bool) -> Option<Vec<Cell>> {
    if !from.in_bounds() || !to.in_bounds() {
        return None;
    }
    if from == to {
        return Some(Vec::new());
    }
    if !map.passable(to, flying) {
        return None;
    }
    let mut parent = [u16::MAX; NUM_CELLS];
    let mut queue = VecDeque::with_capacity(64);
    parent[from.index()] = from.index() as u16;
    queue.push_back(from);
    while let Some(cur) = queue.pop_front() {
        for n in cur.neighbors() {
            let ni = n.index();
            if parent[ni] != u16::MAX || !can_step(map, cur, n, flying) {
                continue;
            }
            parent[ni] = cur.index() as u16;
            if n == to {
                let mut path = vec![to];
                let mut at = cur;
                while at != from {
                    path.push(at);
                    at = Cell::from_index(parent[at.index()] as usize);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(n);
        }
    }
    None
}

/// Breadth-first step counts from `from` to every cell; `UNREACHABLE` marks
/// cells with no path.
pub fn distance_field(map: &MapGrid, from: Cell, flying: bool) -> Vec<u16> {
    let mut dist = vec![UNREACHABLE; NUM_CELLS];
    if !from.in_bounds() {
        return dist;
    }
    let mut queue = VecDeque::with_capacity(NUM_CELLS);
    dist[from.index()] = 0;
    queue.push_back(from);
    while let Some(cur) = queue.pop_front() {
        let d = dist[cur.index()] + 1;
        for n in cur.neighbors() {
            if dist[n.index()] == UNREACHABLE && can_step(map, cur, n, flying) {
                dist[n.index()] = d;
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Whether an 8-connected grass path joins `a` and `b` (stack flood fill,
/// same diagonal rule as [`can_step`]).
pub fn connected(map: &MapGrid, a: Cell, b: Cell) -> bool {
    if a == b {
        return true;
    }
    if !map.is_grass(a) || !map.is_grass(b) {
        return false;
    }
    let mut seen = [false; NUM_CELLS];
    let mut stack = vec![a];
    seen[a.index()] = true;
    while let Some(cur) = stack.pop() {
        for n in cur.neighbors() {
            if seen[n.index()] || !can_step(map, cur, n, false) {
                continue;
            }
            if n == b {
                return true;
            }
            seen[n.index()] = true;
            stack.push(n);
        }
    }
    false
}
