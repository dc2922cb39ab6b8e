//! A small controlled grammar over the most frequent instruction shapes.
//!
//! Parsing never fails: anything outside the grammar (conditionals,
//! pronoun-only targets, chained orders) comes back with `unparsed` set.

use crate::types::UnitType;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Build,
    Train,
    Attack,
    Mine,
    Move,
    Scout,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Object {
    Unit(UnitType),
    Peasants,
    /// The enemy at large ("attack", "attack the enemy").
    Enemy,
    /// A place or other free-form target phrase.
    Target(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    N(u32),
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub verb: Option<Verb>,
    pub object: Option<Object>,
    pub count: Option<Quantity>,
    /// Who should carry it out ("attack with cavalry").
    pub actor: Option<UnitType>,
    pub unparsed: bool,
    pub raw: String,
}

impl Intent {
    fn unparsed(raw: &str) -> Intent {
        Intent {
            verb: None,
            object: None,
            count: None,
            actor: None,
            unparsed: true,
            raw: raw.to_string(),
        }
    }
}

fn number(word: &str) -> Option<Quantity> {
    let n = match word {
        "a" | "an" | "one" | "another" | "single" => 1,
        "two" | "couple" | "pair" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "all" | "every" | "everyone" | "everybody" => return Some(Quantity::All),
        _ => word.parse().ok().filter(|&n| n >= 1)?,
    };
    Some(Quantity::N(n))
}

/// Unit nouns, including the common misspellings and slang seen in play.
fn unit_noun(word: &str) -> Option<UnitType> {
    use UnitType::*;
    let w = word.strip_suffix("'s").unwrap_or(word);
    Some(match w {
        "peasant" | "peasants" | "worker" | "workers" | "miner" | "miners" | "peon" | "peons" | "peaons" | "peaas"
        | "peasent" | "peasents" | "villager" | "villagers" => Peasant,
        "spearman" | "spearmen" | "spear" | "spears" | "spearmans" => Spearman,
        "swordman" | "swordmen" | "swordsman" | "swordsmen" | "sword" | "swords" | "swordmans" => Swordman,
        "cavalry" | "cavalries" | "calvary" | "cav" | "cavs" | "horse" | "horses" | "knight" | "knights" => Cavalry,
        "dragon" | "dragons" | "drag" | "drags" => Dragon,
        "archer" | "archers" => Archer,
        "catapult" | "catapults" | "cata" | "catas" | "cat" | "cats" => Catapult,
        "townhall" | "townhalls" | "hall" | "halls" | "base" | "bases" => TownHall,
        "barrack" | "barracks" => Barrack,
        "blacksmith" | "blacksmiths" | "smith" => Blacksmith,
        "stable" | "stables" => Stable,
        "workshop" | "workshops" => Workshop,
        "tower" | "towers" => GuardTower,
        _ => return None,
    })
}

const BUILD: &[&str] = &["build", "make", "create", "train", "produce", "construct", "get"];
const ATTACK: &[&str] = &["attack", "kill", "fight", "destroy", "hit", "attacking", "charge", "target"];
const MINE: &[&str] = &["mine", "mining", "gather", "gathering", "collect", "collecting", "harvest", "minerals", "ore"];
const MOVE: &[&str] = &["move", "go", "retreat", "return", "back", "flee", "run", "bring", "come"];
const SCOUT: &[&str] = &["scout", "scouting", "explore", "find", "search"];
const STOP: &[&str] = &["stop", "halt", "hold"];
/// Words that make an instruction depend on context we do not model.
const OUT_OF_GRAMMAR: &[&str] = &["if", "it", "them", "him", "her", "they", "then", "unless", "when", "lure"];
const ENEMY: &[&str] = &["enemy", "enemies", "enemey", "opponent", "u", "their", "em"];

fn has(tokens: &[&str], set: &[&str]) -> bool {
    tokens.iter().any(|t| set.contains(t))
}

fn position(tokens: &[&str], set: &[&str]) -> Option<usize> {
    tokens.iter().position(|t| set.contains(t))
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses one instruction. Total and deterministic.
pub fn parse_instruction(text: &str) -> Intent {
    let owned = tokenize(text);
    let t: Vec<&str> = owned.iter().map(String::as_str).collect();
    let deictic = t.windows(2).any(|w| matches!(w[0], "that" | "this") && w[1] == "one");
    if t.is_empty() || deictic || has(&t, OUT_OF_GRAMMAR) {
        return Intent::unparsed(text);
    }
    let intent = |verb, object, count, actor| Intent {
        verb: Some(verb),
        object,
        count,
        actor,
        unparsed: false,
        raw: text.to_string(),
    };
    let noun_in = |ws: &[&str]| ws.iter().find_map(|w| unit_noun(w));
    // "attack dragons with archers": the noun after "with" is the actor.
    let (head, tail) = match t.iter().position(|&w| w == "with") {
        Some(i) => (&t[..i], &t[i + 1..]),
        None => (&t[..], &t[..0]),
    };

    if let Some(i) = position(head, ATTACK) {
        let after = &head[i + 1..];
        let object = match noun_in(after) {
            Some(u) => Object::Unit(u),
            None if after.is_empty() || has(after, ENEMY) => Object::Enemy,
            None => return Intent::unparsed(text),
        };
        // "use cavalry to attack" names the actor before the verb.
        let actor = noun_in(tail).or(noun_in(&head[..i]));
        return intent(Verb::Attack, Some(object), None, actor);
    }
    if let Some(i) = position(&t, BUILD) {
        let rest = &t[i + 1..];
        if let Some(noun) = noun_in(rest) {
            let explicit = rest.iter().take_while(|w| unit_noun(w).is_none()).find_map(|w| number(w));
            // "make more peasants" gives no usable count.
            let count = match explicit {
                Some(q) => Some(q),
                None if rest.contains(&"more") => None,
                None => Some(Quantity::N(1)),
            };
            let verb = if noun.is_building() { Verb::Build } else { Verb::Train };
            return intent(verb, Some(Object::Unit(noun)), count, None);
        }
    }
    let scout = t
        .iter()
        .enumerate()
        .position(|(i, w)| SCOUT.contains(w) && (i == 0 || matches!(t[i - 1], "to" | "and")));
    if let Some(i) = scout {
        // Nouns after the verb are what to look for, not who looks.
        return intent(Verb::Scout, None, None, noun_in(&t[..i]).filter(|u| !u.is_building()));
    }
    if has(&t, STOP) {
        return intent(Verb::Stop, None, None, noun_in(&t).filter(|u| !u.is_building()));
    }
    if has(&t, MINE) {
        let count = t.iter().find_map(|w| number(w));
        return intent(Verb::Mine, Some(Object::Peasants), count, Some(UnitType::Peasant));
    }
    if let Some(i) = position(&t, MOVE) {
        let dest: Vec<&str> = t[i + 1..].iter().copied().filter(|w| !matches!(*w, "to" | "the")).collect();
        let mover = t.iter().find_map(|w| unit_noun(w)).filter(|u| !u.is_building());
        let object = (!dest.is_empty()).then(|| Object::Target(dest.join(" ")));
        return intent(Verb::Move, object, None, mover);
    }
    Intent::unparsed(text)
}
