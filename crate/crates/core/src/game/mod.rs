//! Deterministic tick-based simulation.
//!
//! One call to [`Game::step`] advances exactly one tick through a fixed
//! phase order: command intake, movement, combat, gather/deposit,
//! production/construction, visibility, outcome. State evolution depends only
//! on the previous state and the submitted commands.

mod sim;
pub mod visibility;

use crate::action::ActionRecord;
use crate::config::{round_half_up, Balance, ConfigError};
use crate::map::{MapError, MapGrid};
use crate::types::{Cell, EntityId, PlayerId, Pos, UnitType};
use fnv::FnvHasher;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use visibility::{EnemySnapshot, PlayerMemory, Visibility};

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error(transparent)]
    InvalidMap(#[from] MapError),
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    #[error("invalid game options: {0}")]
    InvalidOptions(String),
    #[error("game is already over")]
    GameOver,
}

/// Why a command was refused. A refused command never changes state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum CommandError {
    #[error("no such unit")]
    UnknownUnit,
    #[error("unit is not owned by this player")]
    NotOwned,
    #[error("unit is still under construction")]
    NotCompleted,
    #[error("this unit cannot perform that action")]
    WrongActor,
    #[error("target does not exist")]
    UnknownTarget,
    #[error("cannot target a friendly unit")]
    InvalidTarget,
    #[error("target cannot be attacked by this unit")]
    TargetUnattackable,
    #[error("target is not visible")]
    TargetNotVisible,
    #[error("insufficient funds: need {need}, have {have}")]
    InsufficientFunds { need: u32, have: u32 },
    #[error("cell is out of bounds, water or occupied")]
    IllegalCell,
    #[error("building cannot produce that unit type")]
    WrongProducer,
    #[error("building is busy producing")]
    ProducerBusy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "winner", rename_all = "snake_case")]
pub enum Outcome {
    Ongoing,
    Win(PlayerId),
    Draw,
}

/// A per-unit order submitted by a player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Command {
    pub player: PlayerId,
    pub unit: EntityId,
    pub action: ActionRecord,
}

impl Command {
    pub fn new(player: PlayerId, unit: EntityId, action: ActionRecord) -> Self {
        Command { player, unit, action }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum GameEvent {
    Spawned { id: EntityId, owner: PlayerId, kind: UnitType },
    Died { id: EntityId, owner: PlayerId, kind: UnitType },
    Damage {
        attacker: EntityId,
        attacker_kind: UnitType,
        target: EntityId,
        target_kind: UnitType,
        amount: u32,
    },
    Mined { unit: EntityId, resource: EntityId, amount: u32 },
    ResourceDepleted { resource: EntityId },
    Deposited { unit: EntityId, player: PlayerId, amount: u32 },
    ConstructionStarted { id: EntityId, owner: PlayerId, kind: UnitType, cell: Cell },
    ConstructionCompleted { id: EntityId, owner: PlayerId, kind: UnitType },
    Finished { outcome: Outcome },
}

#[derive(Debug, Clone, Default)]
pub struct StepResult {
    pub accepted: Vec<Command>,
    pub rejected: Vec<(Command, CommandError)>,
    pub events: Vec<GameEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Job {
    None,
    Mining { left: u32 },
    Training { kind: UnitType, left: u32 },
    Constructing { site: EntityId },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Unit {
    pub id: EntityId,
    pub owner: PlayerId,
    pub kind: UnitType,
    pub hp: u32,
    pub pos: Pos,
    pub current_action: ActionRecord,
    pub previous_action: ActionRecord,
    pub cooldown: u32,
    pub carry: u32,
    /// Construction ticks completed (buildings only).
    pub build_progress: u32,
    pub complete: bool,
    pub(crate) job: Job,
    /// Remaining waypoints, next one last.
    pub(crate) path: Vec<Cell>,
    pub(crate) path_goal: Option<Cell>,
    /// Money held by an accepted build order that has not been placed yet.
    pub(crate) reserved: u32,
}

impl Unit {
    pub fn cell(&self) -> Cell {
        self.pos.cell()
    }

    /// Construction progress in `[0, 1]`.
    pub fn build_fraction(&self, balance: &Balance) -> f32 {
        if self.complete {
            1.0
        } else {
            self.build_progress as f32 / balance.stats(self.kind).build_time as f32
        }
    }

    /// The unit type currently in production, if this building is training.
    pub fn training(&self) -> Option<UnitType> {
        match self.job {
            Job::Training { kind, .. } => Some(kind),
            _ => None,
        }
    }

    /// Whether a peasant has placed its building and is constructing it.
    pub fn constructing(&self) -> Option<EntityId> {
        match self.job {
            Job::Constructing { site } => Some(site),
            _ => None,
        }
    }

    fn set_action(&mut self, action: ActionRecord) {
        self.previous_action = self.current_action;
        self.current_action = action;
        self.job = Job::None;
        self.path.clear();
        self.path_goal = None;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceNode {
    pub id: EntityId,
    pub cell: Cell,
    pub remaining: u32,
}

/// Per-game rule options outside the balance table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameOptions {
    /// Multiplier on deposited resources, per player.
    pub resource_scaling: [f64; 2],
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions {
            resource_scaling: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct GameState {
    pub tick: u32,
    pub seed: u64,
    pub map: Arc<MapGrid>,
    /// Live units and buildings, sorted by id.
    pub units: Vec<Unit>,
    /// Remaining resource nodes, sorted by id.
    pub resources: Vec<ResourceNode>,
    pub money: [u32; 2],
    pub options: GameOptions,
    pub memory: [PlayerMemory; 2],
    pub rng: ChaCha8Rng,
    pub outcome: Outcome,
    next_id: u32,
}

impl GameState {
    pub fn unit(&self, id: EntityId) -> Option<&Unit> {
        self.units
            .binary_search_by_key(&id, |u| u.id)
            .ok()
            .map(|i| &self.units[i])
    }

    pub(crate) fn unit_index(&self, id: EntityId) -> Option<usize> {
        self.units.binary_search_by_key(&id, |u| u.id).ok()
    }

    pub fn resource(&self, id: EntityId) -> Option<&ResourceNode> {
        self.resources
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.resources[i])
    }

    pub fn units_of(&self, player: PlayerId) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(move |u| u.owner == player)
    }

    fn alloc_id(&mut self) -> EntityId {
        let id = EntityId(self.next_id);
        self.next_id += 1;
        id
    }

    /// 64-bit FNV digest over the full simulation state.
    pub fn content_hash(&self) -> u64 {
        let mut h = FnvHasher::default();
        self.tick.hash(&mut h);
        self.seed.hash(&mut h);
        self.units.hash(&mut h);
        self.resources.hash(&mut h);
        self.money.hash(&mut h);
        for s in self.options.resource_scaling {
            s.to_bits().hash(&mut h);
        }
        self.memory.hash(&mut h);
        self.rng.get_seed().hash(&mut h);
        self.rng.get_word_pos().hash(&mut h);
        self.outcome.hash(&mut h);
        self.next_id.hash(&mut h);
        h.finish()
    }
}

/// A game instance: balance tables plus mutable state.
#[derive(Debug, Clone)]
pub struct Game {
    pub balance: Arc<Balance>,
    pub state: GameState,
}

impl Game {
    /// Starts a game: one town hall per spawn, three peasants next to each,
    /// and starting money for both players.
    pub fn new(balance: Arc<Balance>, options: GameOptions, map: MapGrid, seed: u64) -> Result<Game, GameError> {
        balance.config.validate()?;
        map.validate()?;
        if options.resource_scaling.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(GameError::InvalidOptions("resource_scaling must be positive".into()));
        }
        let map = Arc::new(map);
        let mut state = GameState {
            tick: 0,
            seed,
            map: map.clone(),
            units: Vec::new(),
            resources: Vec::new(),
            money: [balance.config.start_money; 2],
            options,
            memory: Default::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            outcome: Outcome::Ongoing,
            next_id: 0,
        };
        for &cell in &map.resource_spawns {
            let id = state.alloc_id();
            state.resources.push(ResourceNode {
                id,
                cell,
                remaining: balance.config.resource_capacity,
            });
        }
        for (p, &spawn) in map.townhall_spawns.iter().enumerate() {
            let owner = PlayerId(p as u8);
            let hall = new_unit(&mut state, &balance, owner, UnitType::TownHall, spawn.center());
            state.units.push(hall);
            let mut spots: Vec<Cell> = spawn.neighbors().filter(|c| map.is_grass(*c)).collect();
            while spots.len() < 3 {
                spots.push(spawn);
            }
            for &c in spots.iter().take(3) {
                let u = new_unit(&mut state, &balance, owner, UnitType::Peasant, c.center());
                state.units.push(u);
            }
        }
        let sight = balance.config.sight_radius;
        for p in 0..2 {
            state.memory[p].update(PlayerId(p as u8), &state.units, sight, 0);
        }
        Ok(Game { balance, state })
    }

    pub fn tick(&self) -> u32 {
        self.state.tick
    }

    pub fn outcome(&self) -> Outcome {
        self.state.outcome
    }

    pub fn is_over(&self) -> bool {
        self.state.outcome != Outcome::Ongoing
    }

    pub fn content_hash(&self) -> u64 {
        self.state.content_hash()
    }

    pub fn view(&self, player: PlayerId) -> crate::view::PlayerView<'_> {
        crate::view::PlayerView::new(self, player)
    }

    /// The fog-of-war memory for `player`, as refreshed at the end of the
    /// last tick.
    pub fn compute_visibility(&self, player: PlayerId) -> &PlayerMemory {
        &self.state.memory[player.index()]
    }

    /// Checks a command against the current state and applies it if legal.
    /// Legal commands replace the unit's current action; `Continue` leaves
    /// it untouched. Train and build costs are debited here.
    pub fn issue_command(&mut self, player: PlayerId, unit_id: EntityId, action: ActionRecord) -> Result<(), CommandError> {
        let st = &self.state;
        let idx = st.unit_index(unit_id).ok_or(CommandError::UnknownUnit)?;
        let unit = &st.units[idx];
        if unit.owner != player {
            return Err(CommandError::NotOwned);
        }
        if !unit.complete {
            return Err(CommandError::NotCompleted);
        }
        if action == ActionRecord::Continue {
            return Ok(());
        }
        if unit.training().is_some() {
            return Err(CommandError::ProducerBusy);
        }
        let stats = self.balance.stats(unit.kind);
        let money = st.money[player.index()];
        let mut debit = 0;
        match action {
            ActionRecord::Idle | ActionRecord::Continue => {}
            ActionRecord::Gather { resource } => {
                if unit.kind != UnitType::Peasant {
                    return Err(CommandError::WrongActor);
                }
                st.resource(resource).ok_or(CommandError::UnknownTarget)?;
            }
            ActionRecord::Attack { target } => {
                if !self.balance.can_attack(unit.kind) {
                    return Err(CommandError::WrongActor);
                }
                let t = st.unit(target).ok_or(CommandError::UnknownTarget)?;
                if t.owner == player {
                    return Err(CommandError::InvalidTarget);
                }
                if self.balance.damage(unit.kind, t.kind).is_none() {
                    return Err(CommandError::TargetUnattackable);
                }
                if !st.memory[player.index()].is_visible(t.cell()) {
                    return Err(CommandError::TargetNotVisible);
                }
            }
            ActionRecord::TrainUnit { unit_type } => {
                if !unit.kind.produces().contains(&unit_type) {
                    return Err(CommandError::WrongProducer);
                }
                debit = self.balance.stats(unit_type).cost;
            }
            ActionRecord::BuildBuilding { unit_type, cell } => {
                if unit.kind != UnitType::Peasant {
                    return Err(CommandError::WrongActor);
                }
                if !unit_type.is_building() {
                    return Err(CommandError::WrongProducer);
                }
                if !self.cell_buildable(cell) {
                    return Err(CommandError::IllegalCell);
                }
                debit = self.balance.stats(unit_type).cost;
            }
            ActionRecord::Move { cell } => {
                if stats.speed <= 0.0 {
                    return Err(CommandError::WrongActor);
                }
                if !cell.in_bounds() {
                    return Err(CommandError::IllegalCell);
                }
            }
        }
        if debit > money {
            return Err(CommandError::InsufficientFunds { need: debit, have: money });
        }

        let st = &mut self.state;
        let unit = &mut st.units[idx];
        let refund = std::mem::take(&mut unit.reserved);
        unit.set_action(action);
        match action {
            ActionRecord::TrainUnit { unit_type } => {
                unit.job = Job::Training {
                    kind: unit_type,
                    left: self.balance.stats(unit_type).build_time,
                };
            }
            ActionRecord::BuildBuilding { .. } => unit.reserved = debit,
            _ => {}
        }
        st.money[player.index()] = money - debit + refund;
        Ok(())
    }

    /// In bounds, grass, and not occupied by a building or resource.
    pub fn cell_buildable(&self, cell: Cell) -> bool {
        self.state.map.is_grass(cell)
            && !self.state.resources.iter().any(|r| r.cell == cell)
            && !self
                .state
                .units
                .iter()
                .any(|u| u.kind.is_building() && u.cell() == cell)
    }

    /// Advances one tick. Commands are validated in order; rejected ones are
    /// reported and have no effect.
    pub fn step(&mut self, commands: &[Command]) -> Result<StepResult, GameError> {
        if self.is_over() {
            return Err(GameError::GameOver);
        }
        let mut result = StepResult::default();
        for &cmd in commands {
            match self.issue_command(cmd.player, cmd.unit, cmd.action) {
                Ok(()) => result.accepted.push(cmd),
                Err(e) => result.rejected.push((cmd, e)),
            }
        }
        sim::advance(self, &mut result.events);
        Ok(result)
    }

    /// Amount credited for depositing `carry` under `player`'s scaling.
    pub fn deposit_amount(&self, player: PlayerId, carry: u32) -> u32 {
        round_half_up(carry as f64 * self.state.options.resource_scaling[player.index()])
    }

    pub fn check_outcome(&self) -> Outcome {
        sim::check_outcome(&self.state, self.balance.config.max_ticks)
    }
}

fn new_unit(state: &mut GameState, balance: &Balance, owner: PlayerId, kind: UnitType, pos: Pos) -> Unit {
    Unit {
        id: state.alloc_id(),
        owner,
        kind,
        hp: balance.stats(kind).hp,
        pos,
        current_action: ActionRecord::Idle,
        previous_action: ActionRecord::Idle,
        cooldown: 0,
        carry: 0,
        build_progress: balance.stats(kind).build_time,
        complete: true,
        job: Job::None,
        path: Vec::new(),
        path_goal: None,
        reserved: 0,
    }
}

/// Outcome of a single attack attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AttackError {
    #[error("target out of range")]
    OutOfRange,
    #[error("attacker on cooldown")]
    OnCooldown,
    #[error("target cannot be attacked by this unit")]
    TargetUnattackable,
}

/// Damage one attack would deal: base damage times the type multiplier,
/// rounded half-up. Checks range (Chebyshev cells), cooldown and the
/// air-targeting rule.
pub fn resolve_attack(balance: &Balance, attacker: &Unit, target: &Unit) -> Result<u32, AttackError> {
    let dmg = balance
        .damage(attacker.kind, target.kind)
        .ok_or(AttackError::TargetUnattackable)?;
    if attacker.cell().chebyshev(target.cell()) > balance.stats(attacker.kind).range {
        return Err(AttackError::OutOfRange);
    }
    if attacker.cooldown > 0 {
        return Err(AttackError::OnCooldown);
    }
    Ok(dmg)
}

/// Test and tooling hook: places a unit directly, bypassing production.
pub fn spawn_unit(game: &mut Game, owner: PlayerId, kind: UnitType, cell: Cell) -> EntityId {
    let balance = game.balance.clone();
    let u = new_unit(&mut game.state, &balance, owner, kind, cell.center());
    let id = u.id;
    game.state.units.push(u);
    let sight = balance.config.sight_radius;
    let tick = game.state.tick;
    for p in 0..2 {
        game.state.memory[p].update(PlayerId(p as u8), &game.state.units, sight, tick);
    }
    id
}

#[cfg(test)]
mod tests;
