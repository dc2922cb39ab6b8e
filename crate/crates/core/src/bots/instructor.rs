//! Template instructions for bot phase changes.

use super::Phase;
use crate::types::UnitType;
use std::collections::VecDeque;

/// The instruction text for entering `phase`. Wording follows the most
/// frequent human instructions ("send all peasants to mine", "build a
/// workshop", "build 3 dragons", "attack").
pub fn instruction_for(phase: Phase) -> String {
    match phase {
        Phase::Mining => "send all peasants to mine".into(),
        Phase::Scouting => "send a peasant to scout".into(),
        Phase::BuildProducer { building } => format!("build a {}", building.words()),
        Phase::Train { unit_type, count: None } => format!("make more {}", unit_type.plural()),
        Phase::Train { unit_type, count: Some(1) } => format!("build {} {}", article(unit_type), unit_type.words()),
        Phase::Train { unit_type, count: Some(n) } => format!("build {n} {}", unit_type.plural()),
        Phase::Attack => "attack".into(),
        Phase::Defend => "defend base".into(),
        Phase::BuildTower => "build a guard tower".into(),
        Phase::BuildTownHall => "build a town hall".into(),
    }
}

fn article(t: UnitType) -> &'static str {
    if t.words().starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

/// Turns a bot's phase changes into instructions, one per change, at most
/// one per call so a burst of changes is spread over consecutive steps.
#[derive(Debug, Clone, Default)]
pub struct ScriptedInstructor {
    pending: VecDeque<String>,
}

impl ScriptedInstructor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(&mut self, changes: &[Phase]) -> Option<String> {
        self.pending.extend(changes.iter().map(|p| instruction_for(*p)));
        self.pending.pop_front()
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}
