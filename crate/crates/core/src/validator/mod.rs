//! Quality control over recorded games: does the executor's play match the
//! instructions, is the game substantial enough to keep, and how does a
//! player perform across games.

mod grammar;

pub use grammar::{parse_instruction, tokenize, Intent, Object, Quantity, Verb};

use crate::action::ActionRecord;
use crate::game::Outcome;
use crate::replay::export::learner_side;
use crate::replay::{Replay, ReplayError, ReplayEvent, Role};
use crate::types::{EntityId, PlayerId, UnitType};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};

/// Ticks after an instruction in which its execution must show up.
pub const DEFAULT_WINDOW: u32 = 750;
pub const MIN_INSTRUCTIONS: usize = 3;
pub const MIN_ACTIONS: usize = 25;

#[derive(Debug, thiserror::Error)]
pub enum ValidatorError {
    #[error("a profile needs at least one game")]
    NoGames,
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// One command as the validator sees it, with the kinds resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedAction {
    pub tick: u32,
    pub unit: EntityId,
    pub unit_kind: UnitType,
    pub action: ActionRecord,
    /// Kind of the attacked unit, for attacks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_kind: Option<UnitType>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fulfilled,
    Violated,
    Unverifiable,
}

fn required(count: Option<Quantity>) -> usize {
    match count {
        Some(Quantity::N(n)) => n as usize,
        _ => 1,
    }
}

/// Checks `intent`, issued at `issued`, against the actions in
/// `[issued, issued + window)`.
pub fn check_execution(intent: &Intent, actions: &[ObservedAction], issued: u32, window: u32) -> Verdict {
    let Some(verb) = intent.verb.filter(|_| !intent.unparsed) else {
        return Verdict::Unverifiable;
    };
    let end = issued.saturating_add(window);
    let live = actions.iter().filter(|a| a.tick >= issued && a.tick < end);
    let by_actor = |a: &&ObservedAction| intent.actor.is_none_or(|k| a.unit_kind == k);
    let wanted = |k: UnitType| match &intent.object {
        Some(Object::Unit(u)) => *u == k,
        _ => false,
    };
    let ok = match verb {
        Verb::Build => {
            live.filter(|a| matches!(a.action, ActionRecord::BuildBuilding { unit_type, .. } if wanted(unit_type)))
                .count()
                >= required(intent.count)
        }
        Verb::Train => {
            live.filter(|a| matches!(a.action, ActionRecord::TrainUnit { unit_type } if wanted(unit_type)))
                .count()
                >= required(intent.count)
        }
        Verb::Attack => live.filter(by_actor).any(|a| {
            matches!(a.action, ActionRecord::Attack { .. })
                && match &intent.object {
                    Some(Object::Unit(u)) => a.target_kind == Some(*u),
                    _ => true,
                }
        }),
        Verb::Mine => {
            let miners: BTreeSet<EntityId> = live
                .filter(by_actor)
                .filter(|a| matches!(a.action, ActionRecord::Gather { .. }))
                .map(|a| a.unit)
                .collect();
            miners.len() >= required(intent.count)
        }
        Verb::Move | Verb::Scout => live.filter(by_actor).any(|a| matches!(a.action, ActionRecord::Move { .. })),
        Verb::Stop => live.filter(by_actor).any(|a| matches!(a.action, ActionRecord::Idle)),
    };
    if ok {
        Verdict::Fulfilled
    } else {
        Verdict::Violated
    }
}

/// Re-simulates the replay and resolves the kinds behind every command
/// `player` issued.
pub fn observe_actions(replay: &Replay, player: PlayerId) -> Result<Vec<ObservedAction>, ReplayError> {
    let mut game = replay.header.new_game()?;
    let mut commands: Vec<_> = replay.commands().map(|(t, c)| (t, *c)).collect();
    commands.sort_by_key(|(t, _)| *t);
    let end = replay.last_tick();
    let mut out = Vec::new();
    let mut next = 0;
    let mut batch = Vec::new();
    while game.tick() < end && !game.is_over() {
        let tick = game.tick();
        batch.clear();
        while next < commands.len() && commands[next].0 == tick {
            let c = commands[next].1;
            next += 1;
            batch.push(c);
            if c.player != player {
                continue;
            }
            let Some(unit) = game.state.unit(c.unit) else {
                continue;
            };
            let target_kind = match c.action {
                ActionRecord::Attack { target } => game.state.unit(target).map(|u| u.kind),
                _ => None,
            };
            out.push(ObservedAction {
                tick,
                unit: c.unit,
                unit_kind: unit.kind,
                action: c.action,
                target_kind,
            });
        }
        game.step(&batch)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionCheck {
    pub tick: u32,
    pub intent: Intent,
    pub verdict: Verdict,
}

fn instructions_for(replay: &Replay, player: PlayerId) -> Vec<(u32, &str)> {
    replay
        .events
        .iter()
        .filter_map(|e| match e {
            ReplayEvent::Instruction { tick, player: p, text } if *p == player => Some((*tick, text.as_str())),
            _ => None,
        })
        .collect()
}

/// Verdicts for every instruction given to `player`'s side.
pub fn validate_replay(replay: &Replay, player: PlayerId, window: u32) -> Result<Vec<InstructionCheck>, ReplayError> {
    let actions = observe_actions(replay, player)?;
    Ok(instructions_for(replay, player)
        .into_iter()
        .map(|(tick, text)| {
            let intent = parse_instruction(text);
            let verdict = check_execution(&intent, &actions, tick, window);
            InstructionCheck { tick, intent, verdict }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum FilterDecision {
    Keep,
    Drop { reason: DropReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DropReason {
    TooFewInstructions { found: usize },
    TooFewActions { found: usize },
}

/// Keeps games with at least [`MIN_INSTRUCTIONS`] instructions and at least
/// [`MIN_ACTIONS`] control actions.
pub fn filter_counts(instructions: usize, actions: usize) -> FilterDecision {
    if instructions < MIN_INSTRUCTIONS {
        FilterDecision::Drop {
            reason: DropReason::TooFewInstructions { found: instructions },
        }
    } else if actions < MIN_ACTIONS {
        FilterDecision::Drop {
            reason: DropReason::TooFewActions { found: actions },
        }
    } else {
        FilterDecision::Keep
    }
}

/// Applies [`filter_counts`] to the learner side of a replay.
pub fn filter_game(replay: &Replay) -> FilterDecision {
    let side = learner_side(replay);
    let instructions = instructions_for(replay, side).len();
    let actions = replay.commands().filter(|(_, c)| c.player == side).count();
    filter_counts(instructions, actions)
}

/// One game in a player's history, with the seat they held.
#[derive(Debug, Clone, Copy)]
pub struct ProfileGame<'a> {
    pub replay: &'a Replay,
    pub side: PlayerId,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerProfile {
    pub games: usize,
    pub wins: usize,
    pub win_rate: f64,
    /// Over games played as instructor.
    pub instructions_per_game: f64,
    /// Unique over total instruction strings; 0 without instructions.
    pub unique_instruction_ratio: f64,
    /// Over games played as executor.
    pub warnings_received: usize,
    /// Fulfilled over verifiable instructions in executor games; 0 when
    /// nothing was verifiable.
    pub validator_pass_rate: f64,
    /// Set when instructor games carried no instructions at all.
    pub flagged: bool,
}

pub fn player_profile(games: &[ProfileGame], window: u32) -> Result<PlayerProfile, ValidatorError> {
    if games.is_empty() {
        return Err(ValidatorError::NoGames);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut wins = 0;
    let mut instructor_games = 0;
    let mut texts: Vec<&str> = Vec::new();
    let mut warnings = 0;
    let (mut fulfilled, mut verifiable) = (0, 0);
    for g in games {
        if matches!(g.replay.outcome(), Some((_, Outcome::Win(p))) if p == g.side) {
            wins += 1;
        }
        match g.role {
            Role::Instructor => {
                instructor_games += 1;
                texts.extend(instructions_for(g.replay, g.side).into_iter().map(|(_, t)| t));
            }
            Role::Executor => {
                warnings += g.replay.warnings();
                for c in validate_replay(g.replay, g.side, window)? {
                    match c.verdict {
                        Verdict::Fulfilled => {
                            fulfilled += 1;
                            verifiable += 1;
                        }
                        Verdict::Violated => verifiable += 1,
                        Verdict::Unverifiable => {}
                    }
                }
            }
        }
    }
    let unique: HashSet<&str> = texts.iter().copied().collect();
    Ok(PlayerProfile {
        games: games.len(),
        wins,
        win_rate: ratio(wins, games.len()),
        instructions_per_game: ratio(texts.len(), instructor_games),
        unique_instruction_ratio: ratio(unique.len(), texts.len()),
        warnings_received: warnings,
        validator_pass_rate: ratio(fulfilled, verifiable),
        flagged: instructor_games > 0 && texts.is_empty(),
    })
}
