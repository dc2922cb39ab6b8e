//! The per-tick phases. Each phase iterates units in id order.

use super::{Game, GameEvent, GameState, Job, Outcome, Unit};
use crate::action::ActionRecord;
use crate::config::Balance;
use crate::map::MapGrid;
use crate::path::find_path;
use crate::types::{Cell, PlayerId, UnitType};
use rand::Rng;

pub(super) fn advance(game: &mut Game, events: &mut Vec<GameEvent>) {
    movement(game);
    combat(game, events);
    gather(game, events);
    production(game, events);

    let st = &mut game.state;
    st.tick += 1;
    let sight = game.balance.config.sight_radius;
    for p in 0..2 {
        st.memory[p].update(PlayerId(p as u8), &st.units, sight, st.tick);
    }
    let outcome = check_outcome(st, game.balance.config.max_ticks);
    if outcome != Outcome::Ongoing {
        st.outcome = outcome;
        events.push(GameEvent::Finished { outcome });
    }
}

/// Win when the opponent has no town hall (finished or under construction);
/// draw when both lose their last one on the same tick or the tick limit
/// is reached.
pub(super) fn check_outcome(st: &GameState, max_ticks: u32) -> Outcome {
    let mut halls = [0usize; 2];
    for u in st.units.iter().filter(|u| u.kind == UnitType::TownHall) {
        halls[u.owner.index()] += 1;
    }
    match (halls[0] > 0, halls[1] > 0) {
        (false, false) => Outcome::Draw,
        (true, false) => Outcome::Win(PlayerId(0)),
        (false, true) => Outcome::Win(PlayerId(1)),
        (true, true) if st.tick >= max_ticks => Outcome::Draw,
        (true, true) => Outcome::Ongoing,
    }
}

/// Ends the unit's current action, returning any money held for an
/// unplaced building.
fn finish(st: &mut GameState, idx: usize) {
    let u = &mut st.units[idx];
    let refund = std::mem::take(&mut u.reserved);
    st.money[u.owner.index()] += refund;
    u.set_action(ActionRecord::Idle);
}

enum Intent {
    Stay,
    Travel { goal: Cell, within: i32 },
    Finish,
}

fn nearest_hall(st: &GameState, u: &Unit) -> Option<usize> {
    st.units
        .iter()
        .enumerate()
        .filter(|(_, h)| h.owner == u.owner && h.kind == UnitType::TownHall && h.complete)
        .min_by_key(|(_, h)| (h.cell().chebyshev(u.cell()), h.id))
        .map(|(i, _)| i)
}

fn intent(st: &GameState, balance: &Balance, u: &Unit) -> Intent {
    if u.kind.is_building() || !u.complete {
        return Intent::Stay;
    }
    match u.current_action {
        ActionRecord::Move { cell } => {
            if u.cell() == cell {
                Intent::Finish
            } else {
                Intent::Travel { goal: cell, within: 0 }
            }
        }
        ActionRecord::Attack { target } => {
            let Some(t) = st.unit(target) else {
                return Intent::Finish;
            };
            let mem = &st.memory[u.owner.index()];
            if mem.is_visible(t.cell()) {
                Intent::Travel {
                    goal: t.cell(),
                    within: balance.stats(u.kind).range,
                }
            } else if let Some(s) = mem.snapshots.get(&target) {
                if u.cell() == s.cell() {
                    Intent::Finish
                } else {
                    Intent::Travel { goal: s.cell(), within: 0 }
                }
            } else {
                Intent::Finish
            }
        }
        ActionRecord::Gather { resource } => {
            if u.carry == 0 {
                match st.resource(resource) {
                    Some(r) => Intent::Travel { goal: r.cell, within: 1 },
                    None => Intent::Finish,
                }
            } else {
                match nearest_hall(st, u) {
                    Some(h) => Intent::Travel {
                        goal: st.units[h].cell(),
                        within: 1,
                    },
                    None => Intent::Stay,
                }
            }
        }
        ActionRecord::BuildBuilding { cell, .. } => match u.job {
            Job::Constructing { .. } => Intent::Stay,
            _ => Intent::Travel { goal: cell, within: 1 },
        },
        _ => Intent::Stay,
    }
}

/// Moves `u` one tick toward `goal`. Ground units follow a cached
/// centre-to-centre path so they never clip water corners. Returns false
/// when the goal is unreachable.
fn travel(u: &mut Unit, map: &MapGrid, speed: i32, goal: Cell) -> bool {
    if u.kind.is_flying() {
        u.pos = u.pos.step_toward(goal.center(), speed);
        return true;
    }
    if u.path_goal != Some(goal) {
        let from = u.cell();
        let Some(mut p) = find_path(map, from, goal, false) else {
            return false;
        };
        p.reverse();
        if u.pos != from.center() {
            p.push(from);
        }
        u.path = p;
        u.path_goal = Some(goal);
    }
    let mut budget = speed;
    while budget > 0 {
        let Some(&w) = u.path.last() else { break };
        let c = w.center();
        let dist = (c.x - u.pos.x).abs().max((c.y - u.pos.y).abs());
        if dist <= budget {
            u.pos = c;
            u.path.pop();
            budget -= dist;
        } else {
            u.pos = u.pos.step_toward(c, budget);
            budget = 0;
        }
    }
    true
}

fn movement(game: &mut Game) {
    let balance = game.balance.clone();
    let st = &mut game.state;
    for i in 0..st.units.len() {
        match intent(st, &balance, &st.units[i]) {
            Intent::Stay => {}
            Intent::Finish => finish(st, i),
            Intent::Travel { goal, within } => {
                if st.units[i].cell().chebyshev(goal) <= within {
                    continue;
                }
                let speed = balance.speed(st.units[i].kind);
                let map = st.map.clone();
                if !travel(&mut st.units[i], &map, speed, goal) {
                    finish(st, i);
                }
            }
        }
    }
}

/// Nearest visible enemy in range that this unit can damage; ties by id.
fn auto_target(st: &GameState, balance: &Balance, u: &Unit) -> Option<usize> {
    let mem = &st.memory[u.owner.index()];
    let range = balance.stats(u.kind).range;
    let here = u.cell();
    st.units
        .iter()
        .enumerate()
        .filter(|(_, t)| t.owner != u.owner)
        .filter(|(_, t)| balance.damage(u.kind, t.kind).is_some())
        .map(|(j, t)| (j, t.cell().chebyshev(here), t))
        .filter(|&(_, d, t)| d <= range && mem.is_visible(t.cell()))
        .min_by_key(|&(_, d, t)| (d, t.id))
        .map(|(j, _, _)| j)
}

/// Simultaneous combat: every attack is chosen against the pre-phase state,
/// then all damage is applied, then the dead are removed.
fn combat(game: &mut Game, events: &mut Vec<GameEvent>) {
    let balance = game.balance.clone();
    let st = &mut game.state;
    for u in st.units.iter_mut() {
        u.cooldown = u.cooldown.saturating_sub(1);
    }
    let mut hits: Vec<(usize, usize, u32)> = Vec::new();
    for (i, u) in st.units.iter().enumerate() {
        if !u.complete || u.cooldown > 0 || !balance.can_attack(u.kind) {
            continue;
        }
        let target = match u.current_action {
            ActionRecord::Attack { target } => st.unit_index(target).filter(|&j| {
                let t = &st.units[j];
                st.memory[u.owner.index()].is_visible(t.cell()) && super::resolve_attack(&balance, u, t).is_ok()
            }),
            ActionRecord::Idle => auto_target(st, &balance, u),
            _ => None,
        };
        if let Some(j) = target {
            let dmg = super::resolve_attack(&balance, u, &st.units[j]).expect("checked above");
            hits.push((i, j, dmg));
        }
    }
    if hits.is_empty() {
        return;
    }
    for &(i, j, dmg) in &hits {
        let (attacker, attacker_kind) = (st.units[i].id, st.units[i].kind);
        st.units[i].cooldown = balance.stats(attacker_kind).cooldown;
        let t = &mut st.units[j];
        t.hp = t.hp.saturating_sub(dmg);
        events.push(GameEvent::Damage {
            attacker,
            attacker_kind,
            target: t.id,
            target_kind: t.kind,
            amount: dmg,
        });
    }
    for u in st.units.iter().filter(|u| u.hp == 0) {
        events.push(GameEvent::Died {
            id: u.id,
            owner: u.owner,
            kind: u.kind,
        });
    }
    st.units.retain(|u| u.hp > 0);
}

fn gather(game: &mut Game, events: &mut Vec<GameEvent>) {
    let cfg = &game.balance.config;
    let (mine_ticks, amount) = (cfg.mine_ticks, cfg.mine_amount);
    let scaling = game.state.options.resource_scaling;
    let st = &mut game.state;
    let mut depleted = false;
    for i in 0..st.units.len() {
        let u = &st.units[i];
        let ActionRecord::Gather { resource } = u.current_action else {
            continue;
        };
        if u.kind != UnitType::Peasant {
            continue;
        }
        let ridx = st.resources.binary_search_by_key(&resource, |r| r.id).ok();
        if u.carry == 0 {
            let Some(ridx) = ridx else {
                finish(st, i);
                continue;
            };
            if u.cell().chebyshev(st.resources[ridx].cell) > 1 {
                continue;
            }
            let u = &mut st.units[i];
            let left = match u.job {
                Job::Mining { left } => left,
                _ => mine_ticks,
            }
            .saturating_sub(1);
            if left > 0 {
                u.job = Job::Mining { left };
                continue;
            }
            u.job = Job::None;
            let r = &mut st.resources[ridx];
            if r.remaining < amount {
                finish(st, i);
                continue;
            }
            r.remaining -= amount;
            u.carry = amount;
            events.push(GameEvent::Mined {
                unit: u.id,
                resource,
                amount,
            });
            if r.remaining == 0 {
                events.push(GameEvent::ResourceDepleted { resource });
                depleted = true;
            }
        } else {
            let Some(h) = nearest_hall(st, u) else { continue };
            if u.cell().chebyshev(st.units[h].cell()) > 1 {
                continue;
            }
            let player = u.owner;
            let credit = crate::config::round_half_up(u.carry as f64 * scaling[player.index()]);
            st.money[player.index()] += credit;
            let u = &mut st.units[i];
            u.carry = 0;
            events.push(GameEvent::Deposited {
                unit: u.id,
                player,
                amount: credit,
            });
            let gone = ridx.is_none_or(|r| st.resources[r].remaining == 0);
            if gone {
                finish(st, i);
            }
        }
    }
    if depleted {
        st.resources.retain(|r| r.remaining > 0);
    }
}

fn production(game: &mut Game, events: &mut Vec<GameEvent>) {
    let balance = game.balance.clone();
    let n = game.state.units.len();
    for i in 0..n {
        let u = &game.state.units[i];
        match (u.job, u.current_action) {
            (Job::Training { kind, left }, _) => {
                if left > 1 {
                    game.state.units[i].job = Job::Training { kind, left: left - 1 };
                    continue;
                }
                let (owner, home) = (u.owner, u.cell());
                let st = &mut game.state;
                let spots: Vec<Cell> = home.neighbors().filter(|c| st.map.is_grass(*c)).collect();
                let at = if spots.is_empty() {
                    home
                } else {
                    spots[st.rng.random_range(0..spots.len())]
                };
                let new = super::new_unit(st, &balance, owner, kind, at.center());
                events.push(GameEvent::Spawned {
                    id: new.id,
                    owner,
                    kind,
                });
                st.units.push(new);
                st.units[i].set_action(ActionRecord::Idle);
            }
            (Job::Constructing { site }, _) => {
                let Some(s) = game.state.unit_index(site) else {
                    finish(&mut game.state, i);
                    continue;
                };
                let st = &mut game.state;
                let b = &mut st.units[s];
                b.build_progress += 1;
                if b.build_progress >= balance.stats(b.kind).build_time {
                    b.complete = true;
                    events.push(GameEvent::ConstructionCompleted {
                        id: b.id,
                        owner: b.owner,
                        kind: b.kind,
                    });
                    finish(st, i);
                }
            }
            (Job::None, ActionRecord::BuildBuilding { unit_type, cell }) if u.complete => {
                if u.cell().chebyshev(cell) > 1 {
                    continue;
                }
                let owner = u.owner;
                if !game.cell_buildable(cell) {
                    finish(&mut game.state, i);
                    continue;
                }
                let st = &mut game.state;
                let mut b = super::new_unit(st, &balance, owner, unit_type, cell.center());
                b.complete = false;
                b.build_progress = 0;
                let site = b.id;
                events.push(GameEvent::ConstructionStarted {
                    id: site,
                    owner,
                    kind: unit_type,
                    cell,
                });
                st.units.push(b);
                let p = &mut st.units[i];
                p.reserved = 0;
                p.job = Job::Constructing { site };
            }
            _ => {}
        }
    }
}
