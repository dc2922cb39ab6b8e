use super::*;
use crate::arena::{Match, MatchSetup};
use crate::config::Balance;
use crate::map::MapParams;

fn recorded_game(seed: u64, strategies: [StrategyId; 2], tick_limit: u32) -> (Replay, Vec<(u32, u64)>) {
    let balance = Arc::new(Balance::default());
    let mut setup = MatchSetup::generated(balance, seed, MapParams::default(), strategies).unwrap();
    setup.record = true;
    setup.instructor = Some(PlayerId(0));
    let mut m = Match::new(setup).unwrap();
    let mut live = vec![(0, m.game.content_hash())];
    while !m.game.is_over() && m.game.tick() < tick_limit {
        m.step().unwrap();
        live.push((m.game.tick(), m.game.content_hash()));
    }
    (m.finish().replay.unwrap(), live)
}

#[test]
fn bytes_round_trip() {
    let (replay, _) = recorded_game(1, [StrategyId::Simple, StrategyId::Medium], 1500);
    assert!(replay.instructions().count() > 0);
    let back = Replay::from_bytes(&replay.to_bytes()).unwrap();
    assert_eq!(back, replay);
}

#[test]
fn side_channel_events_round_trip() {
    let (mut replay, _) = recorded_game(2, [StrategyId::Simple, StrategyId::Simple], 100);
    replay.events.extend([
        ReplayEvent::Pause { tick: 100 },
        ReplayEvent::Resume { tick: 100 },
        ReplayEvent::Warn { tick: 100 },
        ReplayEvent::Ask {
            tick: 100,
            text: "where are the dragons?".into(),
        },
        ReplayEvent::Chat {
            tick: 100,
            player: PlayerId(1),
            text: "gl hf".into(),
        },
        ReplayEvent::Outcome {
            tick: 100,
            outcome: Outcome::Draw,
        },
    ]);
    let back = Replay::from_bytes(&replay.to_bytes()).unwrap();
    assert_eq!(back, replay);
    assert_eq!(back.warnings(), 1);
}

#[test]
fn finished_game_has_exactly_one_outcome() {
    let (replay, _) = recorded_game(3, [StrategyId::Strong, StrategyId::PeasantRush], 25_000);
    let outcomes: Vec<_> = replay
        .events
        .iter()
        .filter(|e| matches!(e, ReplayEvent::Outcome { .. }))
        .collect();
    assert_eq!(outcomes.len(), 1);
    assert!(matches!(replay.events.last(), Some(ReplayEvent::Outcome { .. })));
    assert_ne!(replay.outcome().unwrap().1, Outcome::Ongoing);
}

#[test]
fn checkpoints_match_live_hashes() {
    let (replay, live) = recorded_game(4, [StrategyId::Medium, StrategyId::Simple], 2000);
    let live: std::collections::HashMap<u32, u64> = live.into_iter().collect();
    let cps: Vec<(u32, u64)> = replay.checkpoints().collect();
    assert!(cps.len() >= 2);
    for (t, h) in cps {
        assert_eq!(live[&t], h, "tick {t}");
        assert!(t % CHECKPOINT_INTERVAL == 0 || t == replay.last_tick());
    }
}

#[test]
fn events_are_sorted_by_tick() {
    let (replay, _) = recorded_game(5, [StrategyId::TowerRush, StrategyId::Simple], 3000);
    assert!(replay.events.windows(2).all(|w| w[0].tick() <= w[1].tick()));
}

#[test]
fn untampered_replay_passes() {
    let (replay, _) = recorded_game(6, [StrategyId::Simple, StrategyId::Strong], 3000);
    assert!(matches!(replay_verify(&replay).unwrap(), Verdict::Pass { .. }));
}

#[test]
fn edited_move_target_diverges_at_or_after_its_tick() {
    let (mut replay, _) = recorded_game(7, [StrategyId::Strong, StrategyId::Simple], 3000);
    let (idx, tick) = replay
        .events
        .iter()
        .enumerate()
        .find_map(|(i, e)| match e {
            ReplayEvent::Command { tick, command } if matches!(command.action, ActionRecord::Move { .. }) => {
                Some((i, *tick))
            }
            _ => None,
        })
        .expect("the scout moves");
    if let ReplayEvent::Command { command, .. } = &mut replay.events[idx] {
        if let ActionRecord::Move { cell } = &mut command.action {
            *cell = Cell::new((cell.x + 7) % 32, (cell.y + 11) % 32);
        }
    }
    match replay_verify(&replay).unwrap() {
        Verdict::Diverged { tick: t } => assert!(t >= tick, "{t} < {tick}"),
        v => panic!("tampering went unnoticed: {v:?}"),
    }
}

#[test]
fn dropped_command_diverges() {
    let (mut replay, _) = recorded_game(8, [StrategyId::Simple, StrategyId::Simple], 1200);
    let idx = replay
        .events
        .iter()
        .position(|e| matches!(e, ReplayEvent::Command { .. }))
        .unwrap();
    replay.events.remove(idx);
    assert!(matches!(replay_verify(&replay).unwrap(), Verdict::Diverged { .. }));
}

#[test]
fn engine_version_mismatch_is_an_error() {
    let (mut replay, _) = recorded_game(9, [StrategyId::Simple, StrategyId::Simple], 10);
    replay.header.engine_version = "0.0.0-other".into();
    assert!(matches!(replay_verify(&replay), Err(ReplayError::VersionMismatch { .. })));
}

#[test]
fn config_hash_mismatch_is_an_error() {
    let (mut replay, _) = recorded_game(10, [StrategyId::Simple, StrategyId::Simple], 10);
    replay.header.config_hash = "deadbeef".into();
    assert!(matches!(replay_verify(&replay), Err(ReplayError::ConfigMismatch { .. })));
}

#[test]
fn format_errors() {
    let (replay, _) = recorded_game(11, [StrategyId::Simple, StrategyId::Simple], 10);
    let bytes = replay.to_bytes();
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(Replay::from_bytes(&bad), Err(ReplayError::BadMagic)));
    let mut newer = bytes.clone();
    newer[4] = 9;
    assert!(matches!(Replay::from_bytes(&newer), Err(ReplayError::VersionMismatch { .. })));
    let truncated = &bytes[..bytes.len() - 3];
    assert!(matches!(Replay::from_bytes(truncated), Err(ReplayError::Corrupt(_))));
}

#[test]
fn save_and_load() {
    let (replay, _) = recorded_game(12, [StrategyId::Medium, StrategyId::Medium], 800);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("game.mrtr");
    replay.save(&path).unwrap();
    assert_eq!(Replay::load(&path).unwrap(), replay);
    assert!(matches!(
        Replay::load(&dir.path().join("missing.mrtr")),
        Err(ReplayError::StorageFailure(_))
    ));
}

#[test]
fn header_names_the_opponent() {
    let (replay, _) = recorded_game(13, [StrategyId::Medium, StrategyId::Strong], 10);
    assert_eq!(replay.header.opponent(), Some(StrategyId::Medium));
    assert_eq!(replay.header.engine_version, ENGINE_VERSION);
}
