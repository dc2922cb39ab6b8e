//! Scripted opponents and the scripted instructor.
//!
//! Bots act only through a [`PlayerView`], so they see exactly what a human
//! on that side would: own units, remembered enemies, public terrain and
//! resource nodes. A bot thinks every few ticks and returns per-unit
//! commands plus the phase changes it went through; the
//! [`ScriptedInstructor`] turns phase changes into instruction text.

mod instructor;

pub use instructor::{instruction_for, ScriptedInstructor};

use crate::action::ActionRecord;
use crate::config::Balance;
use crate::game::{Command, Unit};
use crate::mapgen::MIN_SPAWN_SEPARATION;
use crate::path::UNREACHABLE;
use crate::types::{Cell, EntityId, UnitType};
use crate::view::PlayerView;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    Simple,
    Medium,
    Strong,
    SecondBase,
    TowerRush,
    PeasantRush,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::Simple,
        StrategyId::Medium,
        StrategyId::Strong,
        StrategyId::SecondBase,
        StrategyId::TowerRush,
        StrategyId::PeasantRush,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::Simple => "simple",
            StrategyId::Medium => "medium",
            StrategyId::Strong => "strong",
            StrategyId::SecondBase => "second_base",
            StrategyId::TowerRush => "tower_rush",
            StrategyId::PeasantRush => "peasant_rush",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = BotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        StrategyId::ALL
            .iter()
            .copied()
            .find(|t| t.name() == norm || t.name().replace('_', "") == norm)
            .ok_or_else(|| BotError::UnknownStrategy(s.to_string()))
    }
}

/// A strategy together with the resource scaling applied to its deposits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Opponent {
    pub strategy: StrategyId,
    pub resource_scaling: f64,
}

impl Opponent {
    pub fn new(strategy: StrategyId, resource_scaling: f64) -> Result<Self, BotError> {
        if !(resource_scaling > 0.0 && resource_scaling.is_finite()) {
            return Err(BotError::InvalidScaling(resource_scaling));
        }
        Ok(Opponent {
            strategy,
            resource_scaling,
        })
    }
}

impl Default for Opponent {
    fn default() -> Self {
        Opponent {
            strategy: StrategyId::Simple,
            resource_scaling: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BotError {
    #[error("no enemy army unit has been seen yet")]
    NoEnemySeen,
    #[error("no buildable site available")]
    NoSiteAvailable,
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("resource scaling must be a positive number, got {0}")]
    InvalidScaling(f64),
}

/// Coarse bot phases. Every change of phase yields one instructor line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Mining,
    Scouting,
    BuildProducer { building: UnitType },
    /// Train `count` units, or keep training when `count` is `None`.
    Train { unit_type: UnitType, count: Option<u32> },
    Attack,
    Defend,
    BuildTower,
    BuildTownHall,
}

#[derive(Debug, Clone, Default)]
pub struct BotOutput {
    pub commands: Vec<Command>,
    pub phases: Vec<Phase>,
}

/// Army types the Simple family picks from (Catapult excluded).
pub const SIMPLE_ARMY: [UnitType; 5] = [
    UnitType::Spearman,
    UnitType::Swordman,
    UnitType::Cavalry,
    UnitType::Archer,
    UnitType::Dragon,
];

/// Strong gives up waiting for a sighting after this many ticks.
pub const STRONG_FALLBACK_TICK: u32 = 2500;
pub const DEFAULT_THINK_INTERVAL: u32 = 5;
/// How far around a found enemy hall the scout looks for production.
pub const PATROL_RADIUS: i32 = 6;
/// Ticks without army growth after which a waiting army attacks anyway.
pub const STALL_TICKS: u32 = 1500;
/// Enemies this close to one of our buildings trigger a defence.
const THREAT_RADIUS: i32 = 5;

#[derive(Debug, Clone, Default)]
pub struct BotState {
    pub army_type: Option<UnitType>,
    pub target_size: u32,
    pub scout: Option<EntityId>,
    pub attacking: bool,
    pub defending: bool,
    pub phase: Option<Phase>,
    /// Last known enemy town hall.
    pub enemy_hall: Option<(EntityId, Cell)>,
    /// Every enemy id ever seen, with the type that counts for countering.
    pub seen_enemies: BTreeMap<EntityId, UnitType>,
    /// Strong: the counter choice came from actual army sightings.
    pub counter_locked: bool,
    /// Peasant Rush: the initial peasants, kept mining.
    pub miners: BTreeSet<EntityId>,
    pub second_base: Option<Cell>,
    pub towers_ordered: u32,
    /// Largest army so far and when it was reached.
    pub army_peak: u32,
    pub peak_tick: u32,
}

pub struct Bot {
    pub strategy: StrategyId,
    pub state: BotState,
    rng: ChaCha8Rng,
    think_every: u32,
    home: Cell,
    started: bool,
    last_visible: Vec<i64>,
    dist_cache: HashMap<Cell, Vec<u16>>,
}

/// Working context for one decision pass.
struct Pass<'v, 'a> {
    view: &'v PlayerView<'a>,
    money: u32,
    out: BotOutput,
    /// Units already given an order this pass.
    busy: BTreeSet<EntityId>,
}

impl<'v, 'a> Pass<'v, 'a> {
    fn order(&mut self, unit: EntityId, action: ActionRecord) {
        self.busy.insert(unit);
        self.out.commands.push(Command::new(self.view.player, unit, action));
    }
}

impl Bot {
    pub fn new(strategy: StrategyId, seed: u64) -> Self {
        Bot {
            strategy,
            state: BotState::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            think_every: DEFAULT_THINK_INTERVAL,
            home: Cell::new(0, 0),
            started: false,
            last_visible: Vec::new(),
            dist_cache: HashMap::new(),
        }
    }

    pub fn with_think_interval(mut self, ticks: u32) -> Self {
        self.think_every = ticks.max(1);
        self
    }

    /// Decides this tick's orders. Returns nothing between thinking ticks.
    pub fn act(&mut self, view: &PlayerView) -> BotOutput {
        if !self.started {
            self.start(view);
        }
        if !view.tick.is_multiple_of(self.think_every) {
            return BotOutput::default();
        }
        self.observe(view);
        let mut pass = Pass {
            view,
            money: view.money,
            out: BotOutput::default(),
            busy: BTreeSet::new(),
        };
        match self.strategy {
            StrategyId::Simple | StrategyId::Medium => self.play_standard(&mut pass),
            StrategyId::Strong => self.play_strong(&mut pass),
            StrategyId::SecondBase => self.play_second_base(&mut pass),
            StrategyId::TowerRush => self.play_tower_rush(&mut pass),
            StrategyId::PeasantRush => self.play_peasant_rush(&mut pass),
        }
        pass.out
    }

    fn start(&mut self, view: &PlayerView) {
        self.started = true;
        self.home = view
            .own_of_kind(UnitType::TownHall)
            .next()
            .map(|h| h.cell())
            .unwrap_or_else(|| view.own_spawn());
        self.last_visible = vec![-1; crate::types::NUM_CELLS];
        let s = &mut self.state;
        match self.strategy {
            StrategyId::Simple => {
                s.army_type = Some(*SIMPLE_ARMY.choose(&mut self.rng).expect("non-empty"));
                s.target_size = 3;
            }
            StrategyId::Medium => {
                s.army_type = Some(*SIMPLE_ARMY.choose(&mut self.rng).expect("non-empty"));
                s.target_size = self.rng.random_range(3..=7);
            }
            StrategyId::Strong => s.target_size = self.rng.random_range(3..=5),
            StrategyId::SecondBase => {
                s.army_type = Some(*SIMPLE_ARMY.choose(&mut self.rng).expect("non-empty"));
                s.target_size = self.rng.random_range(6..=10);
            }
            StrategyId::TowerRush => {}
            StrategyId::PeasantRush => {
                s.army_type = Some(UnitType::Peasant);
                s.miners = view.own_of_kind(UnitType::Peasant).map(|u| u.id).collect();
            }
        }
    }

    fn observe(&mut self, view: &PlayerView) {
        for (i, v) in view.memory().grid().iter().enumerate() {
            if *v == crate::game::Visibility::Visible {
                self.last_visible[i] = view.tick as i64;
            }
        }
        for e in view.visible_enemies() {
            let counted = if e.kind == UnitType::Peasant && !matches!(e.current_action, ActionRecord::Attack { .. }) {
                None
            } else {
                Some(e.kind)
            };
            match (self.state.seen_enemies.get(&e.id), counted) {
                (None, Some(k)) => {
                    self.state.seen_enemies.insert(e.id, k);
                }
                // A peasant seen mining and later attacking becomes an attacker.
                (Some(_), Some(k)) => {
                    self.state.seen_enemies.insert(e.id, k);
                }
                _ => {}
            }
        }
        let remembered = |id: EntityId| view.enemy(id).is_some();
        if let Some((id, _)) = self.state.enemy_hall {
            if !remembered(id) {
                self.state.enemy_hall = None;
            }
        }
        if self.state.enemy_hall.is_none() {
            self.state.enemy_hall = view
                .enemies()
                .find(|e| e.kind == UnitType::TownHall)
                .map(|e| (e.id, e.cell()));
        }
    }

    fn set_phase(&mut self, pass: &mut Pass, phase: Phase) {
        if self.state.phase != Some(phase) {
            self.state.phase = Some(phase);
            pass.out.phases.push(phase);
        }
    }

    fn dist_from(&mut self, view: &PlayerView, from: Cell) -> &Vec<u16> {
        self.dist_cache
            .entry(from)
            .or_insert_with(|| view.distance_field(from, false))
    }

    // ---- strategies -------------------------------------------------------

    fn play_standard(&mut self, pass: &mut Pass) {
        self.mine_with_idle(pass, &BTreeSet::new());
        self.build_army(pass);
        self.command_army(pass);
    }

    fn play_strong(&mut self, pass: &mut Pass) {
        self.update_counter(pass.view);
        let scout = self.keep_scout(pass);
        let exclude: BTreeSet<EntityId> = scout.into_iter().collect();
        self.mine_with_idle(pass, &exclude);
        // Rebuild a broken economy before anything else.
        self.train_peasants(pass, 3 + scout.is_some() as usize, 0);
        if let Some(kind) = self.state.army_type {
            self.build_army(pass);
            let reserve = pass.view.balance.stats(kind).cost;
            self.train_peasants(pass, 5, reserve);
        }
        self.command_army(pass);
    }

    fn play_second_base(&mut self, pass: &mut Pass) {
        self.mine_with_idle(pass, &BTreeSet::new());
        let view = pass.view;
        let halls = view.own_of_kind(UnitType::TownHall).count();
        if halls < 2 && own_orders(view, UnitType::TownHall) == 0 {
            // Expansion comes first; save up for it while a site exists.
            if let Ok(site) = second_base_site(view) {
                let cost = view.balance.stats(UnitType::TownHall).cost;
                if pass.money >= cost {
                    if let Some(b) = self.pick_builder(pass, site) {
                        pass.order(
                            b,
                            ActionRecord::BuildBuilding {
                                unit_type: UnitType::TownHall,
                                cell: site,
                            },
                        );
                        pass.money -= cost;
                        self.state.second_base = Some(site);
                        self.set_phase(pass, Phase::BuildTownHall);
                    }
                }
                self.command_army(pass);
                return;
            }
        }
        self.build_army(pass);
        let reserve = self.state.army_type.map_or(0, |k| view.balance.stats(k).cost);
        self.train_peasants(pass, 6, reserve);
        self.command_army(pass);
    }

    fn play_tower_rush(&mut self, pass: &mut Pass) {
        let view = pass.view;
        let scout = self.keep_scout(pass);
        let exclude: BTreeSet<EntityId> = scout.into_iter().collect();
        self.mine_with_idle(pass, &exclude);
        if let (Some(builder), Some((_, hall))) = (scout, self.state.enemy_hall) {
            let cost = view.balance.stats(UnitType::GuardTower).cost;
            let u = view.own_unit(builder).expect("scout is alive");
            let building = matches!(u.current_action, ActionRecord::BuildBuilding { .. });
            if !building && pass.money >= cost {
                if let Some(site) = tower_site(view, hall, u.cell()) {
                    pass.order(
                        builder,
                        ActionRecord::BuildBuilding {
                            unit_type: UnitType::GuardTower,
                            cell: site,
                        },
                    );
                    pass.money -= cost;
                    self.state.towers_ordered += 1;
                    self.set_phase(pass, Phase::BuildTower);
                }
            }
        }
        // Towers fire on their own; Tower Rush keeps no army.
        self.train_peasants(pass, 3, view.balance.stats(UnitType::GuardTower).cost);
    }

    fn play_peasant_rush(&mut self, pass: &mut Pass) {
        let miners = self.state.miners.clone();
        self.mine_with_idle_only(pass, &miners);
        let cost = pass.view.balance.stats(UnitType::Peasant).cost;
        for hall in pass.view.own_of_kind(UnitType::TownHall) {
            if hall.complete && hall.training().is_none() && pass.money >= cost {
                pass.order(
                    hall.id,
                    ActionRecord::TrainUnit {
                        unit_type: UnitType::Peasant,
                    },
                );
                pass.money -= cost;
                self.set_phase(
                    pass,
                    Phase::Train {
                        unit_type: UnitType::Peasant,
                        count: None,
                    },
                );
            }
        }
        let attackers: Vec<&Unit> = pass
            .view
            .own_of_kind(UnitType::Peasant)
            .filter(|u| !miners.contains(&u.id))
            .collect();
        if !attackers.is_empty() {
            self.state.attacking = true;
            self.set_phase(pass, Phase::Attack);
        }
        self.steer(pass, &attackers, true);
    }

    // ---- shared behaviours ------------------------------------------------

    fn update_counter(&mut self, view: &PlayerView) {
        if self.state.counter_locked {
            return;
        }
        let mut units: BTreeMap<UnitType, u32> = BTreeMap::new();
        for k in self.state.seen_enemies.values() {
            *units.entry(*k).or_default() += 1;
        }
        let army: BTreeMap<UnitType, u32> = units.into_iter().filter(|(k, _)| k.is_army()).collect();
        if let Ok(c) = strong_counter(view.balance, &army) {
            // A provisional pick that does as well as the counter is kept, so
            // the producer already built is not wasted.
            let modal = modal_type(&army).expect("counter found");
            let m = |k: UnitType| view.balance.config.multiplier(k, modal);
            let keep = self.state.army_type.is_some_and(|p| m(p).is_some() && m(p) == m(c));
            if !keep {
                self.state.army_type = Some(c);
            }
            self.state.counter_locked = true;
            return;
        }
        // Production buildings give the army away before it shows up.
        let implied: BTreeMap<UnitType, u32> = view
            .enemies()
            .filter_map(|e| implied_army(e.kind))
            .map(|k| (k, 1))
            .collect();
        if let Ok(c) = strong_counter(view.balance, &implied) {
            self.state.army_type = Some(c);
        } else if view.tick >= STRONG_FALLBACK_TICK && self.state.army_type.is_none() {
            self.state.army_type = Some(*SIMPLE_ARMY.choose(&mut self.rng).expect("non-empty"));
            self.state.counter_locked = true;
        }
    }

    /// Sends idle peasants (outside `exclude`) to the best resource.
    fn mine_with_idle(&mut self, pass: &mut Pass, exclude: &BTreeSet<EntityId>) {
        let view = pass.view;
        let idle: Vec<EntityId> = view
            .own_of_kind(UnitType::Peasant)
            .filter(|u| u.complete && u.current_action == ActionRecord::Idle && !exclude.contains(&u.id))
            .filter(|u| !pass.busy.contains(&u.id))
            .map(|u| u.id)
            .collect();
        self.assign_miners(pass, &idle);
    }

    /// Like [`Self::mine_with_idle`], restricted to the `only` set.
    fn mine_with_idle_only(&mut self, pass: &mut Pass, only: &BTreeSet<EntityId>) {
        let view = pass.view;
        let idle: Vec<EntityId> = view
            .own_of_kind(UnitType::Peasant)
            .filter(|u| u.complete && u.current_action == ActionRecord::Idle && only.contains(&u.id))
            .map(|u| u.id)
            .collect();
        self.assign_miners(pass, &idle);
    }

    fn assign_miners(&mut self, pass: &mut Pass, idle: &[EntityId]) {
        if idle.is_empty() {
            return;
        }
        let view = pass.view;
        let halls: Vec<Cell> = view
            .own_of_kind(UnitType::TownHall)
            .filter(|h| h.complete)
            .map(|h| h.cell())
            .collect();
        if halls.is_empty() || view.resources().is_empty() {
            return;
        }
        let mut load: BTreeMap<EntityId, u32> = BTreeMap::new();
        for u in view.own_of_kind(UnitType::Peasant) {
            if let ActionRecord::Gather { resource } = u.current_action {
                *load.entry(resource).or_default() += 1;
            }
        }
        let mut base_cost: Vec<(EntityId, u32)> = Vec::new();
        for r in view.resources() {
            let d = halls
                .iter()
                .map(|&h| self.dist_from(view, h)[r.cell.index()])
                .min()
                .unwrap_or(UNREACHABLE);
            if d != UNREACHABLE {
                base_cost.push((r.id, d as u32));
            }
        }
        if base_cost.is_empty() {
            return;
        }
        for &p in idle {
            let (rid, _) = base_cost
                .iter()
                .map(|&(rid, d)| {
                    let l = load.get(&rid).copied().unwrap_or(0);
                    (rid, d + 3 * l.saturating_sub(2))
                })
                .min_by_key(|&(rid, score)| (score, rid))
                .expect("non-empty");
            *load.entry(rid).or_default() += 1;
            pass.order(p, ActionRecord::Gather { resource: rid });
        }
        self.set_phase(pass, Phase::Mining);
    }

    /// Trains peasants up to `want`, keeping `reserve` money untouched.
    fn train_peasants(&mut self, pass: &mut Pass, want: usize, reserve: u32) {
        let view = pass.view;
        let cost = view.balance.stats(UnitType::Peasant).cost;
        let have = count_with_training(view, UnitType::Peasant);
        if have >= want {
            return;
        }
        let mut missing = want - have;
        for hall in view.own_of_kind(UnitType::TownHall) {
            if missing == 0 || pass.money < cost + reserve {
                break;
            }
            if hall.complete && hall.training().is_none() && !pass.busy.contains(&hall.id) {
                pass.order(
                    hall.id,
                    ActionRecord::TrainUnit {
                        unit_type: UnitType::Peasant,
                    },
                );
                pass.money -= cost;
                missing -= 1;
            }
        }
    }

    /// Keeps one peasant exploring. Returns its id.
    fn keep_scout(&mut self, pass: &mut Pass) -> Option<EntityId> {
        let view = pass.view;
        if let Some(id) = self.state.scout {
            if view.own_unit(id).is_none() {
                self.state.scout = None;
            }
        }
        // Once Strong knows what it faces, a lost scout is not replaced.
        let replace = !(self.strategy == StrategyId::Strong && self.state.counter_locked);
        if self.state.scout.is_none() && replace {
            self.state.scout = view
                .own_of_kind(UnitType::Peasant)
                .filter(|u| u.complete && u.constructing().is_none() && !pass.busy.contains(&u.id))
                .filter(|u| !matches!(u.current_action, ActionRecord::BuildBuilding { .. }))
                .max_by_key(|u| (u.carry == 0, u.id))
                .map(|u| u.id);
            if self.state.scout.is_some() {
                self.set_phase(pass, Phase::Scouting);
            }
        }
        let id = self.state.scout?;
        let u = view.own_unit(id)?;
        // Tower Rush stops scouting once the enemy base is known.
        if self.strategy == StrategyId::TowerRush && self.state.enemy_hall.is_some() {
            return Some(id);
        }
        let stale = match u.current_action {
            ActionRecord::Move { cell } => view.memory().is_visible(cell),
            ActionRecord::Idle | ActionRecord::Gather { .. } => true,
            _ => false,
        };
        // Strong circles a found base until its production gives the army away.
        let focus = match self.state.enemy_hall {
            Some((_, hall)) if self.strategy == StrategyId::Strong && self.state.army_type.is_none() => Some(hall),
            _ => None,
        };
        if stale {
            let target = match focus {
                Some(hall) => self.patrol_target(view, hall, u.cell()),
                None => self.explore_target(view, u.cell()),
            };
            if let Some(t) = target {
                if u.current_action != (ActionRecord::Move { cell: t }) {
                    pass.order(id, ActionRecord::Move { cell: t });
                }
            }
        }
        Some(id)
    }

    /// Builds the producer for the chosen army type, then trains up to the
    /// target size, replacing losses.
    fn build_army(&mut self, pass: &mut Pass) {
        let Some(kind) = self.state.army_type else { return };
        let view = pass.view;
        let producer = kind.producer().expect("army types have producers");
        let have_producer = view.own_of_kind(producer).next().is_some() || own_orders(view, producer) > 0;
        if !have_producer {
            let cost = view.balance.stats(producer).cost;
            if pass.money < cost {
                return;
            }
            let Some(site) = self.site_near_home(view) else { return };
            let Some(b) = self.pick_builder(pass, site) else { return };
            pass.order(
                b,
                ActionRecord::BuildBuilding {
                    unit_type: producer,
                    cell: site,
                },
            );
            pass.money -= cost;
            self.set_phase(pass, Phase::BuildProducer { building: producer });
            return;
        }
        let cost = view.balance.stats(kind).cost;
        let mut have = count_with_training(view, kind) as u32;
        for b in view.own_of_kind(producer) {
            if have >= self.state.target_size || pass.money < cost {
                break;
            }
            if b.complete && b.training().is_none() && !pass.busy.contains(&b.id) {
                pass.order(b.id, ActionRecord::TrainUnit { unit_type: kind });
                pass.money -= cost;
                have += 1;
                self.set_phase(
                    pass,
                    Phase::Train {
                        unit_type: kind,
                        count: Some(self.state.target_size),
                    },
                );
            }
        }
    }

    /// Attack once the army reaches its target size; defend the base when
    /// enemies come close.
    fn command_army(&mut self, pass: &mut Pass) {
        let view = pass.view;
        let Some(kind) = self.state.army_type.filter(|k| *k != UnitType::Peasant) else {
            return;
        };
        let army: Vec<&Unit> = view.own_of_kind(kind).collect();
        let n = army.len() as u32;
        if n > self.state.army_peak {
            self.state.army_peak = n;
            self.state.peak_tick = view.tick;
        }
        // An army that has stopped growing attacks with what it has.
        let stalled = n >= 3 && view.tick.saturating_sub(self.state.peak_tick) >= STALL_TICKS;
        if !self.state.attacking && (n >= self.state.target_size || stalled) {
            self.state.attacking = true;
            self.set_phase(pass, Phase::Attack);
        }
        let threatened = !threats(view).is_empty();
        if threatened && !self.state.attacking && !self.state.defending && !army.is_empty() {
            self.set_phase(pass, Phase::Defend);
        }
        self.state.defending = threatened;
        let attacking = self.state.attacking;
        self.steer(pass, &army, attacking);
    }

    /// Per-unit engagement: fight visible enemies (near the base when only
    /// defending), otherwise march on the enemy base or explore.
    fn steer(&mut self, pass: &mut Pass, units: &[&Unit], attacking: bool) {
        let view = pass.view;
        let threat_ids: BTreeSet<EntityId> = threats(view).into_iter().collect();
        let mut objective: Option<Option<Cell>> = None;
        for u in units {
            if !u.complete || pass.busy.contains(&u.id) {
                continue;
            }
            let candidates = view.visible_enemies().filter(|e| {
                view.balance.damage(u.kind, e.kind).is_some() && (attacking || threat_ids.contains(&e.id))
            });
            let best = candidates.min_by_key(|e| (target_class(e.kind), e.cell().chebyshev(u.cell()), e.id));
            let current = match u.current_action {
                ActionRecord::Attack { target } => view.enemy(target).filter(|e| e.visible),
                _ => None,
            };
            match (best, current) {
                (Some(b), Some(c)) if target_class(b.kind) < target_class(c.kind) => {
                    pass.order(u.id, ActionRecord::Attack { target: b.id });
                }
                (_, Some(_)) => {}
                (Some(b), None) => pass.order(u.id, ActionRecord::Attack { target: b.id }),
                (None, None) if attacking => {
                    let moving = matches!(u.current_action, ActionRecord::Move { .. });
                    if !moving {
                        let goal = *objective.get_or_insert_with(|| self.objective(view, u.cell()));
                        if let Some(g) = goal {
                            pass.order(u.id, ActionRecord::Move { cell: g });
                        }
                    }
                }
                (None, None) => {}
            }
        }
    }

    /// Where the army should march when nothing is in sight.
    fn objective(&mut self, view: &PlayerView, from: Cell) -> Option<Cell> {
        let remembered = view
            .enemies()
            .filter(|e| e.kind.is_building())
            .min_by_key(|e| (e.kind != UnitType::TownHall, e.id))
            .map(|e| e.cell());
        remembered.or_else(|| self.explore_target(view, from))
    }

    /// Among the reachable cells unseen the longest, the one whose sight
    /// would uncover the most such cells where the enemy hall could stand,
    /// discounted by the distance from `from`.
    fn explore_target(&mut self, view: &PlayerView, from: Cell) -> Option<Cell> {
        let home = self.home;
        let last = std::mem::take(&mut self.last_visible);
        let dist = self.dist_from(view, home);
        let reachable = |c: &Cell| dist[c.index()] != UNREACHABLE;
        let oldest = crate::map::MapGrid::cells().filter(reachable).map(|c| last[c.index()]).min();
        let best = oldest.and_then(|oldest| {
            let stale = |c: Cell| c.in_bounds() && last[c.index()] == oldest;
            let likely = |c: Cell| c.chebyshev(home) >= MIN_SPAWN_SEPARATION;
            let r = view.balance.config.sight_radius;
            crate::map::MapGrid::cells()
                .filter(|c| reachable(c) && stale(*c))
                .max_by_key(|c| {
                    let mut gain = 0;
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let n = Cell::new(c.x + dx, c.y + dy);
                            if stale(n) {
                                gain += if likely(n) { 4 } else { 1 };
                            }
                        }
                    }
                    (gain - c.chebyshev(from), std::cmp::Reverse(c.index()))
                })
        });
        self.last_visible = last;
        best
    }

    /// The stalest reachable cell near `centre`, nearest to `from` on ties.
    fn patrol_target(&mut self, view: &PlayerView, centre: Cell, from: Cell) -> Option<Cell> {
        let home = self.home;
        let last = std::mem::take(&mut self.last_visible);
        let dist = self.dist_from(view, home);
        let best = crate::map::MapGrid::cells()
            .filter(|c| dist[c.index()] != UNREACHABLE && c.chebyshev(centre) <= PATROL_RADIUS)
            .min_by_key(|c| (last[c.index()], c.chebyshev(from), c.index()));
        self.last_visible = last;
        best
    }

    fn site_near_home(&mut self, view: &PlayerView) -> Option<Cell> {
        let home = self.home;
        let pending = pending_sites(view);
        let dist = self.dist_from(view, home).clone();
        for ring in 2..=5 {
            let ring_cells: Vec<Cell> = crate::map::MapGrid::cells()
                .filter(|c| c.chebyshev(home) == ring)
                .filter(|c| dist[c.index()] != UNREACHABLE && view.looks_buildable(*c))
                .filter(|c| !pending.contains(c))
                .filter(|c| view.resources().iter().all(|r| r.cell.chebyshev(*c) > 1))
                .collect();
            if let Some(c) = ring_cells.choose(&mut self.rng) {
                return Some(*c);
            }
        }
        None
    }

    /// The nearest peasant free to build.
    fn pick_builder(&self, pass: &Pass, site: Cell) -> Option<EntityId> {
        pass.view
            .own_of_kind(UnitType::Peasant)
            .filter(|u| u.complete && Some(u.id) != self.state.scout && !pass.busy.contains(&u.id))
            .filter(|u| !matches!(u.current_action, ActionRecord::BuildBuilding { .. }))
            .filter(|u| self.strategy != StrategyId::PeasantRush || self.state.miners.contains(&u.id))
            .min_by_key(|u| (u.carry > 0, u.cell().chebyshev(site), u.id))
            .map(|u| u.id)
    }
}

/// Buildings under order but not yet placed, plus placed ones.
fn own_orders(view: &PlayerView, kind: UnitType) -> usize {
    view.own_of_kind(UnitType::Peasant)
        .filter(|u| matches!(u.current_action, ActionRecord::BuildBuilding { unit_type, .. } if unit_type == kind))
        .count()
}

fn pending_sites(view: &PlayerView) -> Vec<Cell> {
    view.own_units()
        .filter_map(|u| match u.current_action {
            ActionRecord::BuildBuilding { cell, .. } => Some(cell),
            _ => None,
        })
        .collect()
}

/// Live units of `kind` plus those being trained.
fn count_with_training(view: &PlayerView, kind: UnitType) -> usize {
    view.own_of_kind(kind).count() + view.own_units().filter(|u| u.training() == Some(kind)).count()
}

/// Visible enemy units (not buildings) close to one of our buildings or
/// attacking one of our units.
fn threats(view: &PlayerView) -> Vec<EntityId> {
    let buildings: Vec<Cell> = view.own_units().filter(|u| u.kind.is_building()).map(|u| u.cell()).collect();
    view.visible_enemies()
        .filter(|e| !e.kind.is_building())
        .filter(|e| {
            let hitting_us = matches!(e.current_action, ActionRecord::Attack { target } if view.own_unit(target).is_some());
            hitting_us || buildings.iter().any(|b| b.chebyshev(e.cell()) <= THREAT_RADIUS)
        })
        .map(|e| e.id)
        .collect()
}

/// Lower is more urgent: fighters, then the town hall, then the rest.
fn target_class(kind: UnitType) -> u8 {
    match kind {
        UnitType::Peasant => 2,
        UnitType::TownHall => 1,
        k if k.is_army() || k == UnitType::GuardTower => 0,
        _ => 3,
    }
}

fn implied_army(building: UnitType) -> Option<UnitType> {
    match building {
        UnitType::Barrack => Some(UnitType::Spearman),
        UnitType::Blacksmith => Some(UnitType::Swordman),
        UnitType::Stable => Some(UnitType::Cavalry),
        UnitType::Workshop => Some(UnitType::Dragon),
        _ => None,
    }
}

/// The army type with the largest damage multiplier against the most
/// numerous seen enemy type; ties go to the cheaper type, then to roster
/// order. Peasants are never picked as a counter.
pub fn strong_counter(balance: &Balance, seen: &BTreeMap<UnitType, u32>) -> Result<UnitType, BotError> {
    let modal = modal_type(seen).ok_or(BotError::NoEnemySeen)?;
    UnitType::ARMY
        .iter()
        .copied()
        .filter(|k| *k != UnitType::Peasant)
        .filter_map(|k| balance.config.multiplier(k, modal).map(|m| (k, m)))
        .max_by(|(a, ma), (b, mb)| {
            ma.total_cmp(mb)
                .then(balance.stats(*b).cost.cmp(&balance.stats(*a).cost))
                .then(b.cmp(a))
        })
        .map(|(k, _)| k)
        .ok_or(BotError::NoEnemySeen)
}

/// The most numerous type; ties go to the earlier roster entry.
fn modal_type(seen: &BTreeMap<UnitType, u32>) -> Option<UnitType> {
    seen.iter()
        .filter(|(_, n)| **n > 0)
        .max_by_key(|(k, n)| (**n, std::cmp::Reverse(**k)))
        .map(|(k, _)| *k)
}

/// A buildable cell within two cells (Chebyshev) of the resource that is
/// second closest, by ground path, to this player's first town hall.
pub fn second_base_site(view: &PlayerView) -> Result<Cell, BotError> {
    let home = view.own_spawn();
    let dist = view.distance_field(home, false);
    let mut nodes: Vec<(u16, EntityId, Cell)> = view
        .resources()
        .iter()
        .filter(|r| dist[r.cell.index()] != UNREACHABLE)
        .map(|r| (dist[r.cell.index()], r.id, r.cell))
        .collect();
    nodes.sort();
    let &(_, _, target) = nodes.get(1).ok_or(BotError::NoSiteAvailable)?;
    crate::map::MapGrid::cells()
        .filter(|c| c.chebyshev(target) <= 2 && *c != target)
        .filter(|c| view.looks_buildable(*c) && dist[c.index()] != UNREACHABLE)
        .min_by_key(|c| (c.chebyshev(target), dist[c.index()], c.y, c.x))
        .ok_or(BotError::NoSiteAvailable)
}

/// Next Guard Tower site against the enemy hall at `hall`: buildable,
/// within tower range + 2 of the hall, preferring 3–4 cells out, then
/// proximity to the builder.
pub fn tower_site(view: &PlayerView, hall: Cell, builder: Cell) -> Option<Cell> {
    let reach = view.balance.stats(UnitType::GuardTower).range + 2;
    let dist = view.distance_field(builder, false);
    let pending = pending_sites(view);
    crate::map::MapGrid::cells()
        .filter(|c| c.chebyshev(hall) <= reach && c.chebyshev(hall) >= 2)
        .filter(|c| view.looks_buildable(*c) && dist[c.index()] != UNREACHABLE && !pending.contains(c))
        .filter(|c| !view.own_units().any(|u| u.kind.is_building() && u.cell() == *c))
        .min_by_key(|c| {
            let d = c.chebyshev(hall);
            let band = if (3..=4).contains(&d) { 0 } else { (d - 3).abs().min((d - 4).abs()) };
            (band, dist[c.index()], c.y, c.x)
        })
}
