//! RL-style environment: the agent plays side 0 against a scripted bot.
//!
//! Each [`Env::step`] applies the agent's per-unit actions, then advances
//! `frame_skip` ticks with the bot acting on every tick. The reward is 1 on
//! the step that ends in a win and 0 otherwise; the losing terminal reward
//! can be overridden in the config.

pub mod dump;
mod encode;

pub use encode::*;

use crate::action::ActionRecord;
use crate::arena::derive_seed;
use crate::bots::{Bot, Opponent};
use crate::config::Balance;
use crate::game::{Command, CommandError, Game, GameError, GameOptions, Outcome};
use crate::map::MapParams;
use crate::mapgen::{generate_map, MapGenError};
use crate::types::{EntityId, PlayerId};
use rayon::prelude::*;
use std::sync::Arc;

pub const DEFAULT_FRAME_SKIP: u32 = 25;
pub const AGENT: PlayerId = PlayerId(0);

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub frame_skip: u32,
    pub opponent: Opponent,
    pub seed: u64,
    pub map_params: MapParams,
    pub balance: Arc<Balance>,
    /// Reward on a losing terminal step.
    pub loss_reward: f32,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            frame_skip: DEFAULT_FRAME_SKIP,
            opponent: Opponent::default(),
            seed: 0,
            map_params: MapParams::default(),
            balance: Arc::new(Balance::default()),
            loss_reward: 0.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("episode already finished; call reset")]
    EpisodeFinished,
    #[error("invalid env config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    MapGen(#[from] MapGenError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub observation: Observation,
    pub reward: f32,
    pub done: bool,
    pub outcome: Outcome,
    /// Agent actions the engine refused, with the reason.
    pub rejected: Vec<(EntityId, CommandError)>,
}

pub struct Env {
    config: EnvConfig,
    game: Game,
    bot: Bot,
    average: EnemyAverage,
    history: InstructionHistory,
}

impl Env {
    /// Fresh game from the config: map seed and bot seed derive from `seed`.
    pub fn reset(config: EnvConfig) -> Result<(Env, Observation), EnvError> {
        if config.frame_skip == 0 {
            return Err(EnvError::InvalidConfig("frame_skip must be at least 1".into()));
        }
        let scaling = config.opponent.resource_scaling;
        if !(scaling > 0.0 && scaling.is_finite()) {
            return Err(EnvError::InvalidConfig("resource_scaling must be positive".into()));
        }
        let map = generate_map(derive_seed(config.seed, 1), config.map_params)?;
        let options = GameOptions {
            resource_scaling: [1.0, scaling],
        };
        let game = Game::new(config.balance.clone(), options, map, config.seed)?;
        let bot = Bot::new(config.opponent.strategy, derive_seed(config.seed, 11));
        let mut env = Env {
            config,
            game,
            bot,
            average: EnemyAverage::default(),
            history: InstructionHistory::default(),
        };
        env.average.update(&env.game.view(AGENT));
        let obs = env.observe();
        Ok((env, obs))
    }

    pub fn observe(&self) -> Observation {
        Observation::encode(&self.game.view(AGENT), &self.average, &self.history)
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn is_done(&self) -> bool {
        self.game.is_over()
    }

    pub fn step(&mut self, actions: &[(EntityId, ActionRecord)], instruction: Option<&str>) -> Result<StepOutput, EnvError> {
        if self.game.is_over() {
            return Err(EnvError::EpisodeFinished);
        }
        if let Some(text) = instruction {
            self.history.push(self.game.tick(), text);
        }
        let mut pending: Vec<Command> = actions.iter().map(|&(u, a)| Command::new(AGENT, u, a)).collect();
        let mut rejected = Vec::new();
        for _ in 0..self.config.frame_skip {
            if self.game.is_over() {
                break;
            }
            let mut commands = std::mem::take(&mut pending);
            commands.extend(self.bot.act(&self.game.view(AGENT.opponent())).commands);
            let res = self.game.step(&commands)?;
            rejected.extend(
                res.rejected
                    .into_iter()
                    .filter(|(c, _)| c.player == AGENT)
                    .map(|(c, e)| (c.unit, e)),
            );
            self.average.update(&self.game.view(AGENT));
        }
        let outcome = self.game.outcome();
        let reward = match outcome {
            Outcome::Win(p) if p == AGENT => 1.0,
            Outcome::Win(_) => self.config.loss_reward,
            _ => 0.0,
        };
        Ok(StepOutput {
            observation: self.observe(),
            reward,
            done: self.game.is_over(),
            outcome,
            rejected,
        })
    }
}

/// Independent environments stepped in parallel.
pub struct VecEnv {
    pub envs: Vec<Env>,
}

impl VecEnv {
    /// One env per config.
    pub fn new(configs: Vec<EnvConfig>) -> Result<(VecEnv, Vec<Observation>), EnvError> {
        let made: Result<Vec<(Env, Observation)>, EnvError> = configs.into_par_iter().map(Env::reset).collect();
        let (envs, obs) = made?.into_iter().unzip();
        Ok((VecEnv { envs }, obs))
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    /// Steps every env with its own action list; finished envs are reset
    /// with their seed advanced by one.
    pub fn step(&mut self, actions: &[Vec<(EntityId, ActionRecord)>]) -> Result<Vec<StepOutput>, EnvError> {
        assert_eq!(actions.len(), self.envs.len(), "one action list per env");
        self.envs
            .par_iter_mut()
            .zip(actions.par_iter())
            .map(|(env, acts)| {
                if env.is_done() {
                    let mut cfg = env.config.clone();
                    cfg.seed = cfg.seed.wrapping_add(1);
                    *env = Env::reset(cfg)?.0;
                }
                env.step(acts, None)
            })
            .collect()
    }
}
