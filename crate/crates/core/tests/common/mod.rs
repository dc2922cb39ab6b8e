//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use minirts::validator::{check_execution, parse_instruction, Intent, ObservedAction, Object, Quantity, Verdict, DEFAULT_WINDOW};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Deserialize)]
pub struct GoldenCase {
    pub text: String,
    pub issued: u32,
    pub expect: Value,
    pub actions: Vec<ObservedAction>,
    pub verdict: Verdict,
}

pub fn golden_cases() -> Vec<GoldenCase> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden_instructions.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn snake<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap()
}

/// The parse in the label's flat vocabulary.
fn flatten(i: &Intent) -> Value {
    if i.unparsed {
        return serde_json::json!({ "unparsed": true });
    }
    let object = match &i.object {
        None => Value::Null,
        Some(Object::Unit(u)) => snake(u),
        Some(Object::Peasants) => "peasants".into(),
        Some(Object::Enemy) => "enemy".into(),
        Some(Object::Target(_)) => "target".into(),
    };
    let count = match i.count {
        None => Value::Null,
        Some(Quantity::All) => "all".into(),
        Some(Quantity::N(n)) => n.into(),
    };
    serde_json::json!({
        "unparsed": false,
        "verb": snake(&i.verb.unwrap()),
        "object": object,
        "count": count,
        "actor": i.actor.map_or(Value::Null, |a| snake(&a)),
    })
}

/// Scores parse and verdict against the hand labels; returns the number of
/// fully matching cases and a description of each miss.
pub fn score_golden(cases: &[GoldenCase]) -> (usize, Vec<String>) {
    let mut misses = Vec::new();
    for c in cases {
        let intent = parse_instruction(&c.text);
        let parsed = flatten(&intent);
        let verdict = check_execution(&intent, &c.actions, c.issued, DEFAULT_WINDOW);
        if parsed != c.expect || verdict != c.verdict {
            misses.push(format!("{:?}: parsed {parsed} / {verdict:?}, labelled {} / {:?}", c.text, c.expect, c.verdict));
        }
    }
    (cases.len() - misses.len(), misses)
}
