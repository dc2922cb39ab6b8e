//! Bot-vs-bot matches: drives two bots against one game, optionally
//! recording a replay and voicing one side through the scripted instructor.

use crate::bots::{Bot, Phase, ScriptedInstructor, StrategyId};
use crate::config::Balance;
use crate::game::{Command, Game, GameError, GameEvent, GameOptions, Outcome, StepResult};
use crate::map::{MapGrid, MapParams};
use crate::mapgen::{generate_map, MapGenError};
use crate::replay::{Controller, PlayerInfo, Recorder, Replay, ReplayEvent};
use crate::action::ActionRecord;
use crate::types::{Cell, EntityId, PlayerId, UnitType};
use serde::Serialize;
use std::sync::Arc;

/// SplitMix64 step, used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, thiserror::Error)]
pub enum MatchError {
    #[error(transparent)]
    Map(#[from] MapGenError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone)]
pub struct MatchSetup {
    pub balance: Arc<Balance>,
    pub map: MapGrid,
    pub seed: u64,
    pub strategies: [StrategyId; 2],
    pub resource_scaling: [f64; 2],
    pub record: bool,
    /// Voice this side's phase changes as instructions in the replay.
    pub instructor: Option<PlayerId>,
}

impl MatchSetup {
    /// A match on a freshly generated map; map and bot seeds derive from
    /// `seed`.
    pub fn generated(
        balance: Arc<Balance>,
        seed: u64,
        params: MapParams,
        strategies: [StrategyId; 2],
    ) -> Result<Self, MapGenError> {
        let map = generate_map(derive_seed(seed, 1), params)?;
        Ok(MatchSetup {
            balance,
            map,
            seed,
            strategies,
            resource_scaling: [1.0, 1.0],
            record: false,
            instructor: None,
        })
    }

    /// The same map and seed with the two sides exchanged.
    pub fn swapped(&self) -> Self {
        let mut s = self.clone();
        s.strategies.swap(0, 1);
        s.resource_scaling.swap(0, 1);
        s.map.townhall_spawns.swap(0, 1);
        s.instructor = s.instructor.map(|p| p.opponent());
        s
    }
}

/// Per-side tallies gathered from step events.
#[derive(Debug, Clone, Default, Serialize)]
pub struct MatchStats {
    pub spawned: [[u32; UnitType::COUNT]; 2],
    pub died: [[u32; UnitType::COUNT]; 2],
    pub commands: [u32; 2],
    pub rejected: [u32; 2],
    /// Damage events with a Dragon target and an attacker that may not
    /// target air.
    pub air_violations: u32,
    pub constructions: Vec<(u32, PlayerId, UnitType, Cell)>,
    pub deposited: [u32; 2],
    pub instructions: u32,
}

impl MatchStats {
    fn absorb(&mut self, tick: u32, res: &StepResult, balance: &Balance) {
        for c in &res.accepted {
            self.commands[c.player.index()] += 1;
        }
        for (c, _) in &res.rejected {
            self.rejected[c.player.index()] += 1;
        }
        for e in &res.events {
            match *e {
                GameEvent::Spawned { owner, kind, .. } => self.spawned[owner.index()][kind.index()] += 1,
                GameEvent::Died { owner, kind, .. } => self.died[owner.index()][kind.index()] += 1,
                GameEvent::Damage {
                    attacker_kind,
                    target_kind,
                    ..
                } => {
                    if target_kind == UnitType::Dragon && !balance.stats(attacker_kind).can_target_air {
                        self.air_violations += 1;
                    }
                }
                GameEvent::ConstructionStarted { owner, kind, cell, .. } => {
                    self.constructions.push((tick, owner, kind, cell));
                }
                GameEvent::Deposited { player, amount, .. } => self.deposited[player.index()] += amount,
                _ => {}
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    pub outcome: Outcome,
    pub ticks: u32,
    pub strategies: [StrategyId; 2],
    pub stats: MatchStats,
    #[serde(skip)]
    pub replay: Option<Replay>,
}

pub struct Match {
    pub game: Game,
    pub bots: [Bot; 2],
    pub stats: MatchStats,
    strategies: [StrategyId; 2],
    recorder: Option<Recorder>,
    instructor: Option<(PlayerId, ScriptedInstructor)>,
    /// Phase changes seen this step, per side.
    pub last_phases: [Vec<Phase>; 2],
}

impl Match {
    pub fn new(setup: MatchSetup) -> Result<Match, GameError> {
        let options = GameOptions {
            resource_scaling: setup.resource_scaling,
        };
        let game = Game::new(setup.balance, options, setup.map, setup.seed)?;
        let bots = [0, 1].map(|p| Bot::new(setup.strategies[p], derive_seed(setup.seed, 10 + p as u64)));
        let recorder = setup.record.then(|| {
            let players = [0, 1].map(|p| PlayerInfo {
                controller: Controller::Bot(setup.strategies[p]),
                roles: Vec::new(),
                resource_scaling: setup.resource_scaling[p],
            });
            Recorder::new(&game, players)
        });
        Ok(Match {
            game,
            bots,
            stats: MatchStats::default(),
            strategies: setup.strategies,
            recorder,
            instructor: setup.instructor.map(|p| (p, ScriptedInstructor::new())),
            last_phases: [Vec::new(), Vec::new()],
        })
    }

    /// One tick: both bots decide, then the game advances.
    pub fn step(&mut self) -> Result<StepResult, GameError> {
        let tick = self.game.tick();
        let mut commands: Vec<Command> = Vec::new();
        for p in 0..2 {
            let view = self.game.view(PlayerId(p as u8));
            let out = self.bots[p].act(&view);
            commands.extend(out.commands);
            self.last_phases[p] = out.phases;
        }
        if let Some((p, instr)) = self.instructor.as_mut() {
            if let Some(text) = instr.step(&self.last_phases[p.index()]) {
                self.stats.instructions += 1;
                if let Some(rec) = self.recorder.as_mut() {
                    rec.push(ReplayEvent::Instruction { tick, player: *p, text });
                }
            }
        }
        let res = self.game.step(&commands)?;
        self.stats.absorb(tick, &res, &self.game.balance);
        if let Some(rec) = self.recorder.as_mut() {
            rec.record_step(tick, &res.accepted, &self.game);
        }
        Ok(res)
    }

    /// Steps until the game ends or the clock reaches `tick_limit`.
    pub fn run(&mut self, tick_limit: u32) -> Result<Outcome, GameError> {
        while !self.game.is_over() && self.game.tick() < tick_limit {
            self.step()?;
        }
        Ok(self.game.outcome())
    }

    pub fn finish(self) -> MatchReport {
        let replay = self.recorder.map(|r| r.into_replay(&self.game));
        MatchReport {
            outcome: self.game.outcome(),
            ticks: self.game.tick(),
            strategies: self.strategies,
            stats: self.stats,
            replay,
        }
    }
}

/// Plays one match to completion (or `tick_limit`).
pub fn play(setup: MatchSetup, tick_limit: u32) -> Result<MatchReport, GameError> {
    let mut m = Match::new(setup)?;
    m.run(tick_limit)?;
    Ok(m.finish())
}

/// Ticks after which an undecided duel is called a draw.
pub const DUEL_TICK_LIMIT: u32 = 3000;

/// `n` units of `a` (player 0) against `n` of `b` (player 1) on an open map.
/// The two groups start as loose clusters about eight cells apart with
/// seeded jitter. Each tick, a fighter without a visible target attacks the
/// nearest visible enemy fighter, or walks towards the nearest one when
/// idle. Returns the side with fighters left, or `None` on a draw.
pub fn duel(balance: Arc<Balance>, a: UnitType, b: UnitType, n: usize, seed: u64) -> Result<Option<PlayerId>, GameError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut map = MapGrid::empty();
    map.townhall_spawns = vec![Cell::new(1, 1), Cell::new(30, 30)];
    let mut game = Game::new(balance, GameOptions::default(), map, seed)?;
    let (cx, cy) = (rng.random_range(10..=14), rng.random_range(12..=19));
    for (p, kind, x0) in [(0u8, a, cx), (1, b, cx + 8)] {
        let mut used = Vec::new();
        while used.len() < n {
            let c = Cell::new(x0 + rng.random_range(-1..=1), cy + rng.random_range(-2..=2));
            if !used.contains(&c) {
                used.push(c);
                crate::game::spawn_unit(&mut game, PlayerId(p), kind, c);
            }
        }
    }
    let fighters = |g: &Game, p: u8| -> Vec<(EntityId, Cell, ActionRecord)> {
        g.state
            .units
            .iter()
            .filter(|u| u.owner == PlayerId(p) && u.kind.is_army() && u.kind != UnitType::Peasant)
            .map(|u| (u.id, u.cell(), u.current_action))
            .collect()
    };
    while game.tick() < DUEL_TICK_LIMIT {
        let sides = [fighters(&game, 0), fighters(&game, 1)];
        match (sides[0].is_empty(), sides[1].is_empty()) {
            (true, true) => return Ok(None),
            (false, true) => return Ok(Some(PlayerId(0))),
            (true, false) => return Ok(Some(PlayerId(1))),
            _ => {}
        }
        let mut commands = Vec::new();
        for p in 0..2 {
            let view = game.view(PlayerId(p as u8));
            let seen: Vec<(EntityId, Cell)> = view
                .visible_enemies()
                .filter(|e| e.kind.is_army() && e.kind != UnitType::Peasant)
                .map(|e| (e.id, e.cell()))
                .collect();
            for &(id, cell, current) in &sides[p] {
                let nearest = |set: &[(EntityId, Cell)]| set.iter().copied().min_by_key(|e| (e.1.chebyshev(cell), e.0));
                let action = match (current, nearest(&seen)) {
                    (ActionRecord::Attack { target }, _) if seen.iter().any(|e| e.0 == target) => continue,
                    (_, Some((target, _))) => ActionRecord::Attack { target },
                    // Nothing in sight: close in on the nearest fighter.
                    (ActionRecord::Idle, None) => {
                        let all: Vec<(EntityId, Cell)> = sides[1 - p].iter().map(|e| (e.0, e.1)).collect();
                        let (_, c) = nearest(&all).expect("both sides alive");
                        ActionRecord::Move { cell: c }
                    }
                    _ => continue,
                };
                commands.push(Command::new(PlayerId(p as u8), id, action));
            }
        }
        game.step(&commands)?;
    }
    Ok(None)
}
