//! One human team (instructor + executor) against a bot: the authoritative
//! game, the role rules, and the replay being written.
//!
//! Everything here is synchronous; the network layer owns a `Session` per
//! task and feeds it joins, frames and clock ticks in order.

use super::protocol::{Body, ErrorCode, Frame, Outbound, SessionId};
use super::state::TeamSnapshot;
use crate::arena::derive_seed;
use crate::bots::{Bot, Opponent};
use crate::config::Balance;
use crate::game::{Command, CommandError, Game, GameError, GameOptions};
use crate::map::MapParams;
use crate::mapgen::{generate_map, MapGenError};
use crate::replay::{Controller, PlayerInfo, Recorder, Replay, ReplayEvent, Role};
use crate::types::PlayerId;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// The human team's side; the bot plays the other.
pub const HUMAN: PlayerId = PlayerId(0);

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub opponent: Opponent,
    pub seed: u64,
    pub map_params: MapParams,
    pub balance: Arc<Balance>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            opponent: Opponent::default(),
            seed: 0,
            map_params: MapParams::default(),
            balance: Arc::new(Balance::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Lobby,
    Running,
    Paused,
    Finished,
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("the {role:?} may not send {what}")]
    WrongRole { role: Role, what: &'static str },
    #[error("the {0:?} seat is taken")]
    RoleTaken(Role),
    #[error("command rejected: {0}")]
    InvalidCommand(CommandError),
    #[error("session is {0:?}")]
    NotRunning(Status),
    #[error("{0} is not a client message")]
    BadMessage(&'static str),
    #[error(transparent)]
    MapGen(#[from] MapGenError),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl SessionError {
    pub fn code(&self) -> ErrorCode {
        match self {
            SessionError::WrongRole { .. } => ErrorCode::WrongRole,
            SessionError::RoleTaken(_) => ErrorCode::RoleTaken,
            SessionError::InvalidCommand(_) => ErrorCode::InvalidCommand,
            SessionError::NotRunning(_) => ErrorCode::NotRunning,
            SessionError::BadMessage(_) | SessionError::MapGen(_) | SessionError::Game(_) => ErrorCode::BadMessage,
        }
    }

    pub fn to_frame(&self, tick: u32) -> Frame {
        Frame::new(
            tick,
            Body::Error {
                code: self.code(),
                message: self.to_string(),
            },
        )
    }
}

fn seat(role: Role) -> usize {
    match role {
        Role::Instructor => 0,
        Role::Executor => 1,
    }
}

pub struct Session {
    id: SessionId,
    status: Status,
    game: Game,
    bot: Bot,
    opponent: Opponent,
    seats: [bool; 2],
    queue: Vec<Command>,
    recorder: Recorder,
    warnings: u32,
    last_sent: Option<TeamSnapshot>,
}

impl Session {
    pub fn new(id: SessionId, config: SessionConfig) -> Result<Session, SessionError> {
        let map = generate_map(derive_seed(config.seed, 1), config.map_params)?;
        let scaling = config.opponent.resource_scaling;
        let options = GameOptions {
            resource_scaling: [1.0, scaling],
        };
        let game = Game::new(config.balance, options, map, config.seed)?;
        let players = [
            PlayerInfo {
                controller: Controller::Human,
                roles: vec![Role::Instructor, Role::Executor],
                resource_scaling: 1.0,
            },
            PlayerInfo {
                controller: Controller::Bot(config.opponent.strategy),
                roles: Vec::new(),
                resource_scaling: scaling,
            },
        ];
        let recorder = Recorder::new(&game, players);
        Ok(Session {
            id,
            status: Status::Lobby,
            bot: Bot::new(config.opponent.strategy, derive_seed(config.seed, 11)),
            opponent: config.opponent,
            game,
            seats: [false; 2],
            queue: Vec::new(),
            recorder,
            warnings: 0,
            last_sent: None,
        })
    }

    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn opponent(&self) -> Opponent {
        self.opponent
    }

    pub fn warnings(&self) -> u32 {
        self.warnings
    }

    pub fn tick_count(&self) -> u32 {
        self.game.tick()
    }

    pub fn free_roles(&self) -> Vec<Role> {
        [Role::Instructor, Role::Executor].into_iter().filter(|r| !self.seats[seat(*r)]).collect()
    }

    pub fn hello(&self) -> Frame {
        Frame::new(
            self.game.tick(),
            Body::Hello {
                version: super::protocol::PROTOCOL_VERSION.to_string(),
                session: self.id,
                free_roles: self.free_roles(),
            },
        )
    }

    /// Seats a client. The game starts once both seats are filled.
    pub fn join(&mut self, role: Role) -> Result<Vec<Outbound>, SessionError> {
        if self.status == Status::Finished {
            return Err(SessionError::NotRunning(self.status));
        }
        if self.seats[seat(role)] {
            return Err(SessionError::RoleTaken(role));
        }
        self.seats[seat(role)] = true;
        let tick = self.game.tick();
        let mut out = Vec::new();
        // Bring the seated client up to date before moving the baseline.
        let other = match role {
            Role::Instructor => Role::Executor,
            Role::Executor => Role::Instructor,
        };
        if let Some(update) = self.state_update().filter(|_| self.seats[seat(other)]) {
            out.push(Outbound::to(other, update.frame));
        }
        out.push(Outbound::to(role, Frame::new(tick, Body::Join { role })));
        out.push(Outbound::to(role, self.full_state()));
        if self.status == Status::Lobby && self.seats == [true, true] {
            self.status = Status::Running;
            out.push(Outbound::both(Frame::new(tick, Body::Resume)));
        }
        Ok(out)
    }

    /// Frees a seat. A running game pauses so the team is not left exposed.
    pub fn leave(&mut self, role: Role) -> Vec<Outbound> {
        self.seats[seat(role)] = false;
        if self.status == Status::Running {
            self.status = Status::Paused;
            let tick = self.game.tick();
            self.recorder.push(ReplayEvent::Pause { tick });
            return vec![Outbound::both(Frame::new(tick, Body::Pause))];
        }
        Vec::new()
    }

    /// Applies one client frame from `role`.
    pub fn handle(&mut self, role: Role, body: Body) -> Result<Vec<Outbound>, SessionError> {
        let tick = self.game.tick();
        let live = matches!(self.status, Status::Running | Status::Paused);
        let wrong = |what| SessionError::WrongRole { role, what };
        match body {
            Body::Hello { .. } => Err(SessionError::BadMessage("hello")),
            Body::Join { .. } => Err(SessionError::BadMessage("join")),
            Body::StateDiff { .. } => Err(SessionError::BadMessage("state_diff")),
            Body::GameOver { .. } => Err(SessionError::BadMessage("game_over")),
            Body::Error { .. } => Err(SessionError::BadMessage("error")),
            _ if !live => Err(SessionError::NotRunning(self.status)),
            Body::Command { unit, action } => {
                if role != Role::Executor {
                    return Err(wrong("unit commands"));
                }
                if self.status != Status::Running {
                    return Err(SessionError::NotRunning(self.status));
                }
                self.queue.push(Command::new(HUMAN, unit, action));
                Ok(Vec::new())
            }
            Body::Instruction { text } => {
                if role != Role::Instructor {
                    return Err(wrong("instructions"));
                }
                self.recorder.push(ReplayEvent::Instruction {
                    tick,
                    player: HUMAN,
                    text: text.clone(),
                });
                Ok(vec![Outbound::both(Frame::new(tick, Body::Instruction { text }))])
            }
            Body::Pause | Body::Resume => {
                if role != Role::Instructor {
                    return Err(wrong("pause or resume"));
                }
                let pause = matches!(body, Body::Pause);
                let target = if pause { Status::Paused } else { Status::Running };
                if self.status == target {
                    return Ok(Vec::new());
                }
                if !pause && self.seats != [true, true] {
                    return Err(SessionError::NotRunning(self.status));
                }
                self.status = target;
                self.recorder.push(if pause {
                    ReplayEvent::Pause { tick }
                } else {
                    ReplayEvent::Resume { tick }
                });
                Ok(vec![Outbound::both(Frame::new(tick, body))])
            }
            Body::Warn => {
                if role != Role::Instructor {
                    return Err(wrong("warnings"));
                }
                self.warnings += 1;
                self.recorder.push(ReplayEvent::Warn { tick });
                Ok(vec![Outbound::to(Role::Executor, Frame::new(tick, Body::Warn))])
            }
            Body::Ask { text } => {
                if role != Role::Executor {
                    return Err(wrong("questions"));
                }
                self.recorder.push(ReplayEvent::Ask { tick, text: text.clone() });
                Ok(vec![Outbound::to(Role::Instructor, Frame::new(tick, Body::Ask { text }))])
            }
            Body::Chat { text, .. } => {
                self.recorder.push(ReplayEvent::Chat {
                    tick,
                    player: HUMAN,
                    text: text.clone(),
                });
                Ok(vec![Outbound::both(Frame::new(tick, Body::Chat { from: Some(role), text }))])
            }
        }
    }

    /// One game tick: queued executor commands in arrival order, then the
    /// bot's. Does nothing unless running.
    pub fn tick(&mut self) -> Result<Vec<Outbound>, SessionError> {
        if self.status != Status::Running {
            return Ok(Vec::new());
        }
        let tick = self.game.tick();
        let mut commands = std::mem::take(&mut self.queue);
        let bot_side = HUMAN.opponent();
        commands.extend(self.bot.act(&self.game.view(bot_side)).commands);
        let res = self.game.step(&commands)?;
        self.recorder.record_step(tick, &res.accepted, &self.game);
        let mut out: Vec<Outbound> = res
            .rejected
            .iter()
            .filter(|(c, _)| c.player == HUMAN)
            .map(|(_, e)| Outbound::to(Role::Executor, SessionError::InvalidCommand(e.clone()).to_frame(tick)))
            .collect();
        if self.game.is_over() {
            self.status = Status::Finished;
            if let Some(diff) = self.state_update() {
                out.push(diff);
            }
            out.push(Outbound::both(Frame::new(
                self.game.tick(),
                Body::GameOver {
                    outcome: self.game.outcome(),
                },
            )));
        }
        Ok(out)
    }

    /// The team's state change since the previous update, identical for both
    /// roles; `None` when nothing changed.
    pub fn state_update(&mut self) -> Option<Outbound> {
        let now = TeamSnapshot::from_view(&self.game.view(HUMAN));
        let diff = now.diff_from(self.last_sent.as_ref());
        let first = self.last_sent.is_none();
        self.last_sent = Some(now);
        (first || !diff.is_empty()).then(|| Outbound::both(Frame::new(self.game.tick(), Body::StateDiff { diff })))
    }

    /// A full update from the current state. Callers must first flush
    /// [`Session::state_update`] to seated clients, since the shared diff
    /// baseline moves here.
    pub fn full_state(&mut self) -> Frame {
        let now = TeamSnapshot::from_view(&self.game.view(HUMAN));
        let diff = now.diff_from(None);
        self.last_sent = Some(now);
        Frame::new(self.game.tick(), Body::StateDiff { diff })
    }

    #[cfg(test)]
    pub(crate) fn game_mut_for_tests(&mut self) -> &mut Game {
        &mut self.game
    }

    /// The replay so far, closed with a final checkpoint.
    pub fn replay(&self) -> Replay {
        self.recorder.clone().into_replay(&self.game)
    }
}
