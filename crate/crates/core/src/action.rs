//! Per-unit actions: the seven action types and their typed outputs.

use crate::types::{Cell, EntityId, UnitType};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Idle,
    Continue,
    Gather,
    Attack,
    TrainUnit,
    BuildBuilding,
    Move,
}

impl ActionType {
    pub const COUNT: usize = 7;

    pub const ALL: [ActionType; 7] = [
        ActionType::Idle,
        ActionType::Continue,
        ActionType::Gather,
        ActionType::Attack,
        ActionType::TrainUnit,
        ActionType::BuildBuilding,
        ActionType::Move,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<ActionType> {
        Self::ALL.get(idx).copied()
    }
}

/// An action together with its output. The payload shape is fixed by the
/// action type, so it is encoded directly in the enum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[derive(Default)]
pub enum ActionRecord {
    #[default]
    Idle,
    Continue,
    Gather { resource: EntityId },
    Attack { target: EntityId },
    TrainUnit { unit_type: UnitType },
    BuildBuilding { unit_type: UnitType, cell: Cell },
    Move { cell: Cell },
}


impl ActionRecord {
    pub fn action_type(&self) -> ActionType {
        match self {
            ActionRecord::Idle => ActionType::Idle,
            ActionRecord::Continue => ActionType::Continue,
            ActionRecord::Gather { .. } => ActionType::Gather,
            ActionRecord::Attack { .. } => ActionType::Attack,
            ActionRecord::TrainUnit { .. } => ActionType::TrainUnit,
            ActionRecord::BuildBuilding { .. } => ActionType::BuildBuilding,
            ActionRecord::Move { .. } => ActionType::Move,
        }
    }
}

impl fmt::Display for ActionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionRecord::Idle => f.write_str("idle"),
            ActionRecord::Continue => f.write_str("continue"),
            ActionRecord::Gather { resource } => write!(f, "gather {resource}"),
            ActionRecord::Attack { target } => write!(f, "attack {target}"),
            ActionRecord::TrainUnit { unit_type } => write!(f, "train {unit_type}"),
            ActionRecord::BuildBuilding { unit_type, cell } => write!(f, "build {unit_type} at {cell}"),
            ActionRecord::Move { cell } => write!(f, "move {cell}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_follows_action_type() {
        let a = ActionRecord::BuildBuilding {
            unit_type: UnitType::Workshop,
            cell: Cell::new(3, 4),
        };
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(
            s,
            r#"{"type":"build_building","unit_type":"workshop","cell":{"x":3,"y":4}}"#
        );
        let back: ActionRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        assert_eq!(
            serde_json::to_string(&ActionRecord::Idle).unwrap(),
            r#"{"type":"idle"}"#
        );
    }

    #[test]
    fn index_round_trip() {
        for t in ActionType::ALL {
            assert_eq!(ActionType::from_index(t.index()), Some(t));
        }
        assert_eq!(ActionType::COUNT, 7);
    }
}
