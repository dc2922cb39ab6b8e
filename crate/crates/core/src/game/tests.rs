use super::*;
use crate::config::BalanceConfig;
use crate::map::Terrain;

fn map() -> MapGrid {
    let mut m = MapGrid::empty();
    m.townhall_spawns = vec![Cell::new(4, 4), Cell::new(27, 27)];
    m.resource_spawns = vec![Cell::new(7, 4), Cell::new(16, 16)];
    m.set_terrain(Cell::new(6, 8), Terrain::Water);
    m
}

fn game() -> Game {
    Game::new(Arc::new(Balance::default()), GameOptions::default(), map(), 7).unwrap()
}

fn count(g: &Game, p: u8, kind: UnitType) -> usize {
    g.state.units_of(PlayerId(p)).filter(|u| u.kind == kind).count()
}

fn hall(g: &Game, p: u8) -> EntityId {
    g.state
        .units_of(PlayerId(p))
        .find(|u| u.kind == UnitType::TownHall)
        .unwrap()
        .id
}

fn run(g: &mut Game, ticks: u32) -> Vec<GameEvent> {
    let mut ev = Vec::new();
    for _ in 0..ticks {
        if g.is_over() {
            break;
        }
        ev.extend(g.step(&[]).unwrap().events);
    }
    ev
}

#[test]
fn new_game_initial_state() {
    let g = game();
    assert_eq!(g.state.units.iter().filter(|u| u.kind == UnitType::TownHall).count(), 2);
    assert_eq!(g.state.units.iter().filter(|u| u.kind == UnitType::Peasant).count(), 6);
    for p in 0..2 {
        assert_eq!(count(&g, p, UnitType::Peasant), 3);
        assert_eq!(g.state.money[p as usize], 300);
        let h = g.state.unit(hall(&g, p)).unwrap().cell();
        for u in g.state.units_of(PlayerId(p)).filter(|u| u.kind == UnitType::Peasant) {
            assert_eq!(u.cell().chebyshev(h), 1);
        }
    }
    assert_eq!(g.tick(), 0);
    assert_eq!(g.outcome(), Outcome::Ongoing);
    assert_eq!(g.state.resources.iter().map(|r| r.remaining).collect::<Vec<_>>(), vec![500, 500]);
}

#[test]
fn new_game_is_deterministic() {
    assert_eq!(game().content_hash(), game().content_hash());
    let other = Game::new(Arc::new(Balance::default()), GameOptions::default(), map(), 8).unwrap();
    assert_ne!(game().content_hash(), other.content_hash());
}

#[test]
fn new_game_rejects_missing_spawn() {
    let mut m = map();
    m.townhall_spawns.truncate(1);
    let r = Game::new(Arc::new(Balance::default()), GameOptions::default(), m, 7);
    assert!(matches!(r, Err(GameError::InvalidMap(_))));
}

#[test]
fn new_game_rejects_bad_config() {
    let mut balance = Balance::default();
    balance.config.units.get_mut(&UnitType::Peasant).unwrap().hp = 0;
    let r = Game::new(Arc::new(balance), GameOptions::default(), map(), 7);
    assert!(matches!(r, Err(GameError::InvalidConfig(_))));
}

#[test]
fn ground_unit_cannot_attack_dragon() {
    let mut g = game();
    let spear = spawn_unit(&mut g, PlayerId(0), UnitType::Spearman, Cell::new(10, 10));
    let dragon = spawn_unit(&mut g, PlayerId(1), UnitType::Dragon, Cell::new(11, 10));
    assert_eq!(
        g.issue_command(PlayerId(0), spear, ActionRecord::Attack { target: dragon }),
        Err(CommandError::TargetUnattackable)
    );
    let archer = spawn_unit(&mut g, PlayerId(0), UnitType::Archer, Cell::new(10, 11));
    assert_eq!(g.issue_command(PlayerId(0), archer, ActionRecord::Attack { target: dragon }), Ok(()));
}

#[test]
fn attack_needs_visible_target() {
    let mut g = game();
    let spear = spawn_unit(&mut g, PlayerId(0), UnitType::Spearman, Cell::new(10, 10));
    let far = spawn_unit(&mut g, PlayerId(1), UnitType::Spearman, Cell::new(20, 25));
    assert_eq!(
        g.issue_command(PlayerId(0), spear, ActionRecord::Attack { target: far }),
        Err(CommandError::TargetNotVisible)
    );
    let own = hall(&g, 0);
    assert_eq!(
        g.issue_command(PlayerId(0), spear, ActionRecord::Attack { target: own }),
        Err(CommandError::InvalidTarget)
    );
}

#[test]
fn build_on_water_is_illegal() {
    let mut g = game();
    let peasant = g.state.units_of(PlayerId(0)).find(|u| u.kind == UnitType::Peasant).unwrap().id;
    let water = ActionRecord::BuildBuilding {
        unit_type: UnitType::Workshop,
        cell: Cell::new(6, 8),
    };
    assert_eq!(g.issue_command(PlayerId(0), peasant, water), Err(CommandError::IllegalCell));
    let occupied = ActionRecord::BuildBuilding {
        unit_type: UnitType::Workshop,
        cell: Cell::new(7, 4),
    };
    assert_eq!(g.issue_command(PlayerId(0), peasant, occupied), Err(CommandError::IllegalCell));
    assert_eq!(g.state.money[0], 300);
}

#[test]
fn workshop_trains_archer_and_debits() {
    let mut g = game();
    let ws = spawn_unit(&mut g, PlayerId(0), UnitType::Workshop, Cell::new(6, 6));
    assert_eq!(
        g.issue_command(PlayerId(0), ws, ActionRecord::TrainUnit { unit_type: UnitType::Archer }),
        Ok(())
    );
    assert_eq!(g.state.money[0], 300 - 90);
    assert_eq!(
        g.issue_command(PlayerId(0), ws, ActionRecord::TrainUnit { unit_type: UnitType::Dragon }),
        Err(CommandError::ProducerBusy)
    );
    let ev = run(&mut g, 90);
    assert!(ev.iter().any(|e| matches!(e, GameEvent::Spawned { kind: UnitType::Archer, .. })));
    assert_eq!(count(&g, 0, UnitType::Archer), 1);
}

#[test]
fn wrong_producer_and_funds() {
    let mut g = game();
    let barrack = spawn_unit(&mut g, PlayerId(0), UnitType::Barrack, Cell::new(6, 6));
    assert_eq!(
        g.issue_command(PlayerId(0), barrack, ActionRecord::TrainUnit { unit_type: UnitType::Dragon }),
        Err(CommandError::WrongProducer)
    );
    g.state.money[0] = 10;
    assert_eq!(
        g.issue_command(PlayerId(0), barrack, ActionRecord::TrainUnit { unit_type: UnitType::Spearman }),
        Err(CommandError::InsufficientFunds { need: 80, have: 10 })
    );
    assert_eq!(
        g.issue_command(PlayerId(1), barrack, ActionRecord::Idle),
        Err(CommandError::NotOwned)
    );
    assert_eq!(
        g.issue_command(PlayerId(0), EntityId(9999), ActionRecord::Idle),
        Err(CommandError::UnknownUnit)
    );
}

#[test]
fn continue_keeps_action_and_new_command_shifts_previous() {
    let mut g = game();
    let p = g.state.units_of(PlayerId(0)).find(|u| u.kind == UnitType::Peasant).unwrap().id;
    let mv = ActionRecord::Move { cell: Cell::new(2, 2) };
    g.issue_command(PlayerId(0), p, mv).unwrap();
    g.issue_command(PlayerId(0), p, ActionRecord::Continue).unwrap();
    let u = g.state.unit(p).unwrap();
    assert_eq!(u.current_action, mv);
    assert_eq!(u.previous_action, ActionRecord::Idle);
    let gather = ActionRecord::Gather { resource: EntityId(0) };
    g.issue_command(PlayerId(0), p, gather).unwrap();
    let u = g.state.unit(p).unwrap();
    assert_eq!((u.current_action, u.previous_action), (gather, mv));
}

#[test]
fn replaced_build_order_is_refunded() {
    let mut g = game();
    let p = g.state.units_of(PlayerId(0)).find(|u| u.kind == UnitType::Peasant).unwrap().id;
    let build = ActionRecord::BuildBuilding {
        unit_type: UnitType::Barrack,
        cell: Cell::new(12, 12),
    };
    g.issue_command(PlayerId(0), p, build).unwrap();
    assert_eq!(g.state.money[0], 150);
    g.issue_command(PlayerId(0), p, ActionRecord::Idle).unwrap();
    assert_eq!(g.state.money[0], 300);
}

#[test]
fn peasant_constructs_building() {
    let mut g = game();
    let p = g.state.units_of(PlayerId(0)).find(|u| u.kind == UnitType::Peasant).unwrap().id;
    let cell = Cell::new(8, 8);
    g.issue_command(PlayerId(0), p, ActionRecord::BuildBuilding { unit_type: UnitType::Stable, cell })
        .unwrap();
    let ev = run(&mut g, 400);
    assert!(ev.iter().any(|e| matches!(e, GameEvent::ConstructionStarted { kind: UnitType::Stable, .. })));
    assert!(ev.iter().any(|e| matches!(e, GameEvent::ConstructionCompleted { kind: UnitType::Stable, .. })));
    let stable = g.state.units_of(PlayerId(0)).find(|u| u.kind == UnitType::Stable).unwrap();
    assert!(stable.complete);
    assert_eq!(stable.cell(), cell);
    assert_eq!(g.state.money[0], 150);
    assert_eq!(g.state.unit(p).unwrap().current_action, ActionRecord::Idle);
}

#[test]
fn simultaneous_kill_both_die() {
    let mut g = game();
    let a = spawn_unit(&mut g, PlayerId(0), UnitType::Spearman, Cell::new(15, 15));
    let b = spawn_unit(&mut g, PlayerId(1), UnitType::Spearman, Cell::new(16, 15));
    g.state.units.iter_mut().filter(|u| u.id == a || u.id == b).for_each(|u| u.hp = 5);
    let cmds = [
        Command::new(PlayerId(0), a, ActionRecord::Attack { target: b }),
        Command::new(PlayerId(1), b, ActionRecord::Attack { target: a }),
    ];
    let r = g.step(&cmds).unwrap();
    assert!(r.rejected.is_empty());
    let died: Vec<_> = r
        .events
        .iter()
        .filter_map(|e| match e {
            GameEvent::Died { id, .. } => Some(*id),
            _ => None,
        })
        .collect();
    assert_eq!(died, vec![a, b]);
    assert!(g.state.unit(a).is_none() && g.state.unit(b).is_none());
}

#[test]
fn mining_takes_ten_points() {
    let mut g = game();
    // Peasants start next to the hall at (4, 4); the node at (7, 4) is two cells away.
    let p = spawn_unit(&mut g, PlayerId(0), UnitType::Peasant, Cell::new(6, 4));
    g.issue_command(PlayerId(0), p, ActionRecord::Gather { resource: EntityId(0) }).unwrap();
    run(&mut g, 19);
    assert_eq!(g.state.resource(EntityId(0)).unwrap().remaining, 500);
    let ev = run(&mut g, 1);
    assert!(ev.contains(&GameEvent::Mined { unit: p, resource: EntityId(0), amount: 10 }));
    assert_eq!(g.state.resource(EntityId(0)).unwrap().remaining, 490);
    assert_eq!(g.state.unit(p).unwrap().carry, 10);
    // Walks back to the hall and deposits.
    for _ in 0..60 {
        let ev = run(&mut g, 1);
        if ev.iter().any(|e| matches!(e, GameEvent::Deposited { amount: 10, .. })) {
            break;
        }
    }
    assert_eq!(g.state.money[0], 310);
    assert_eq!(g.state.unit(p).unwrap().carry, 0);
}

#[test]
fn tick_limit_is_a_draw() {
    let mut cfg = BalanceConfig::default();
    cfg.max_ticks = 5;
    let mut g = Game::new(Arc::new(cfg.compile().unwrap()), GameOptions::default(), map(), 1).unwrap();
    let ev = run(&mut g, 10);
    assert_eq!(g.tick(), 5);
    assert_eq!(g.outcome(), Outcome::Draw);
    assert_eq!(ev, vec![GameEvent::Finished { outcome: Outcome::Draw }]);
    assert!(matches!(g.step(&[]), Err(GameError::GameOver)));
}

#[test]
fn losing_last_hall_loses() {
    let mut g = game();
    let h1 = hall(&g, 1);
    g.state.units.retain(|u| u.id != h1);
    assert_eq!(g.check_outcome(), Outcome::Win(PlayerId(0)));
    let h0 = hall(&g, 0);
    g.state.units.retain(|u| u.id != h0);
    assert_eq!(g.check_outcome(), Outcome::Draw);
}

#[test]
fn hall_destroyed_in_combat_ends_game() {
    let mut g = game();
    let h1 = hall(&g, 1);
    let cata = spawn_unit(&mut g, PlayerId(0), UnitType::Catapult, Cell::new(27, 24));
    g.state.units.iter_mut().filter(|u| u.id == h1).for_each(|u| u.hp = 40);
    let r = g
        .step(&[Command::new(PlayerId(0), cata, ActionRecord::Attack { target: h1 })])
        .unwrap();
    assert!(r.events.contains(&GameEvent::Finished { outcome: Outcome::Win(PlayerId(0)) }));
    assert_eq!(g.outcome(), Outcome::Win(PlayerId(0)));
}

#[test]
fn resolve_attack_examples() {
    let b = Balance::default();
    let mut g = game();
    let archer = spawn_unit(&mut g, PlayerId(0), UnitType::Archer, Cell::new(10, 10));
    let dragon = spawn_unit(&mut g, PlayerId(1), UnitType::Dragon, Cell::new(12, 12));
    let sword = spawn_unit(&mut g, PlayerId(0), UnitType::Swordman, Cell::new(20, 10));
    let spear = spawn_unit(&mut g, PlayerId(1), UnitType::Spearman, Cell::new(21, 11));
    let u = |id| g.state.unit(id).unwrap();
    assert_eq!(resolve_attack(&b, u(archer), u(dragon)), Ok(16));
    assert_eq!(resolve_attack(&b, u(sword), u(spear)), Ok(20));
    assert_eq!(resolve_attack(&b, u(spear), u(dragon)), Err(AttackError::TargetUnattackable));
    assert_eq!(resolve_attack(&b, u(sword), u(dragon)), Err(AttackError::TargetUnattackable));
    assert_eq!(resolve_attack(&b, u(archer), u(spear)), Err(AttackError::OutOfRange));
    let mut busy = u(archer).clone();
    busy.cooldown = 3;
    assert_eq!(resolve_attack(&b, &busy, u(dragon)), Err(AttackError::OnCooldown));
}

/// Independent oracle: count attacks in a plain hp-subtraction loop.
fn attacks_to_destroy(hp: u32, damage: u32) -> u32 {
    let mut hp = hp as i64;
    let mut n = 0;
    while hp > 0 {
        hp -= damage as i64;
        n += 1;
    }
    n
}

#[test]
fn catapult_destroys_tower_in_oracle_count() {
    let b = Balance::default();
    let tower_hp = b.stats(UnitType::GuardTower).hp;
    let expected = attacks_to_destroy(tower_hp, b.stats(UnitType::Catapult).damage * 2);
    assert_eq!(expected, 4);

    let mut g = game();
    let tower = spawn_unit(&mut g, PlayerId(1), UnitType::GuardTower, Cell::new(20, 10));
    let cata = spawn_unit(&mut g, PlayerId(0), UnitType::Catapult, Cell::new(20, 15));
    // Sight radius is 4, the tower is 5 rows away: a sturdy spotter keeps it visible.
    spawn_unit(&mut g, PlayerId(0), UnitType::Cavalry, Cell::new(20, 14));
    let mut hits = 0;
    let mut cmds = vec![Command::new(PlayerId(0), cata, ActionRecord::Attack { target: tower })];
    for _ in 0..400 {
        let r = g.step(&cmds).unwrap();
        cmds.clear();
        hits += r
            .events
            .iter()
            .filter(|e| matches!(e, GameEvent::Damage { attacker, target, .. } if *attacker == cata && *target == tower))
            .count() as u32;
        if g.state.unit(tower).is_none() {
            break;
        }
    }
    assert!(g.state.unit(tower).is_none());
    assert_eq!(hits, expected);
}

#[test]
fn initial_visibility_is_local() {
    let g = game();
    let mem = g.compute_visibility(PlayerId(0));
    assert_eq!(mem.get(Cell::new(4, 4)), Visibility::Visible);
    assert_eq!(mem.get(Cell::new(27, 27)), Visibility::Invisible);
    assert_eq!(mem.get(Cell::new(16, 16)), Visibility::Invisible);
    assert!(mem.grid().iter().all(|v| *v != Visibility::Seen));
    assert!(mem.snapshots.is_empty());
}

#[test]
fn scouted_cells_become_seen_not_invisible() {
    let mut g = game();
    let scout = spawn_unit(&mut g, PlayerId(0), UnitType::Cavalry, Cell::new(15, 4));
    let probe = Cell::new(18, 4);
    assert_eq!(g.compute_visibility(PlayerId(0)).get(probe), Visibility::Visible);
    g.issue_command(PlayerId(0), scout, ActionRecord::Move { cell: Cell::new(15, 25) }).unwrap();
    let mut states = vec![];
    for _ in 0..200 {
        g.step(&[]).unwrap();
        states.push(g.compute_visibility(PlayerId(0)).get(probe));
    }
    assert_eq!(*states.last().unwrap(), Visibility::Seen);
    assert!(!states.contains(&Visibility::Invisible));
}

#[test]
fn hidden_enemy_keeps_last_seen_hp() {
    let mut g = game();
    let spotter = spawn_unit(&mut g, PlayerId(0), UnitType::Spearman, Cell::new(15, 15));
    let enemy = spawn_unit(&mut g, PlayerId(1), UnitType::Swordman, Cell::new(17, 15));
    assert_eq!(g.compute_visibility(PlayerId(0)).snapshots[&enemy].hp, 80);
    // Spotter leaves, then the enemy is damaged out of sight.
    g.state.units.iter_mut().filter(|u| u.id == spotter).for_each(|u| u.pos = Cell::new(2, 28).center());
    g.step(&[]).unwrap();
    g.state.units.iter_mut().filter(|u| u.id == enemy).for_each(|u| u.hp = 20);
    g.step(&[]).unwrap();
    let snap = &g.compute_visibility(PlayerId(0)).snapshots[&enemy];
    assert_eq!(snap.hp, 80);
    assert!(!snap.visible);
}

#[test]
fn command_to_unreachable_cell_goes_idle() {
    let mut m = map();
    for y in 0..MAP_SIZE_T {
        m.set_terrain(Cell::new(12, y), Terrain::Water);
    }
    m.set_terrain(Cell::new(12, 0), Terrain::Grass);
    let mut g = Game::new(Arc::new(Balance::default()), GameOptions::default(), m, 3).unwrap();
    let p = g.state.units_of(PlayerId(0)).find(|u| u.kind == UnitType::Peasant).unwrap().id;
    g.issue_command(PlayerId(0), p, ActionRecord::Move { cell: Cell::new(12, 5) }).unwrap();
    g.step(&[]).unwrap();
    assert_eq!(g.state.unit(p).unwrap().current_action, ActionRecord::Idle);
}

const MAP_SIZE_T: i32 = crate::types::MAP_SIZE;

#[test]
fn dragon_flies_over_water() {
    let mut m = map();
    for y in 0..MAP_SIZE_T {
        m.set_terrain(Cell::new(12, y), Terrain::Water);
    }
    m.set_terrain(Cell::new(12, 0), Terrain::Grass);
    let mut g = Game::new(Arc::new(Balance::default()), GameOptions::default(), m, 3).unwrap();
    let d = spawn_unit(&mut g, PlayerId(0), UnitType::Dragon, Cell::new(10, 10));
    g.issue_command(PlayerId(0), d, ActionRecord::Move { cell: Cell::new(14, 10) }).unwrap();
    run(&mut g, 60);
    let u = g.state.unit(d).unwrap();
    assert_eq!(u.cell(), Cell::new(14, 10));
    assert_eq!(u.current_action, ActionRecord::Idle);
    assert_eq!(u.previous_action, ActionRecord::Move { cell: Cell::new(14, 10) });
}

#[test]
fn ground_units_never_stand_in_water() {
    let mut m = map();
    for y in 3..20 {
        m.set_terrain(Cell::new(12, y), Terrain::Water);
        m.set_terrain(Cell::new(y, 20), Terrain::Water);
    }
    let mut g = Game::new(Arc::new(Balance::default()), GameOptions::default(), m.clone(), 3).unwrap();
    let ids: Vec<_> = (0..4)
        .map(|i| spawn_unit(&mut g, PlayerId(0), UnitType::Cavalry, Cell::new(5 + i, 10)))
        .collect();
    for (i, &id) in ids.iter().enumerate() {
        g.issue_command(PlayerId(0), id, ActionRecord::Move { cell: Cell::new(20 + i as i32, 25 - i as i32) })
            .unwrap();
    }
    for _ in 0..500 {
        g.step(&[]).unwrap();
        for u in g.state.units.iter() {
            assert!(m.is_grass(u.cell()), "{:?} stands in water at {:?} {:?} path {:?} tick {}", u.id, u.pos, u.cell(), u.path, g.tick());
        }
    }
}
