//! Balance configuration: hit points, damage, ranges, speeds, costs and the
//! attack multiplier table. Loaded from a versioned TOML file; every field
//! has a default so an empty file yields the stock balance.

use crate::types::{UnitType, CELL_UNITS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitStats {
    pub hp: u32,
    pub damage: u32,
    /// Attack range in cells (Chebyshev).
    pub range: i32,
    /// Ticks between attacks.
    pub cooldown: u32,
    /// Cells per tick.
    pub speed: f64,
    pub cost: u32,
    /// Ticks to train (army) or construct (buildings).
    pub build_time: u32,
    #[serde(default)]
    pub can_target_air: bool,
}

impl UnitStats {
    #[allow(clippy::too_many_arguments)]
    fn new(hp: u32, damage: u32, range: i32, cooldown: u32, speed: f64, cost: u32, build_time: u32) -> Self {
        UnitStats {
            hp,
            damage,
            range,
            cooldown,
            speed,
            cost,
            build_time,
            can_target_air: false,
        }
    }

    fn air(mut self) -> Self {
        self.can_target_air = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceConfig {
    pub version: u32,
    pub start_money: u32,
    pub sight_radius: i32,
    pub max_ticks: u32,
    pub mine_ticks: u32,
    pub mine_amount: u32,
    pub carry_capacity: u32,
    pub resource_capacity: u32,
    pub units: BTreeMap<UnitType, UnitStats>,
    /// Sparse `attacker -> target -> factor`; missing pairs are 1.0.
    pub multipliers: BTreeMap<UnitType, BTreeMap<UnitType, f64>>,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        use UnitType::*;
        let units = BTreeMap::from([
            (Peasant, UnitStats::new(40, 3, 1, 10, 0.075, 50, 50)),
            (Spearman, UnitStats::new(80, 10, 1, 10, 0.075, 80, 80)),
            (Swordman, UnitStats::new(80, 10, 1, 10, 0.075, 80, 80)),
            (Cavalry, UnitStats::new(100, 12, 1, 10, 0.125, 120, 120)),
            (Dragon, UnitStats::new(90, 10, 3, 12, 0.1, 150, 150)),
            (Archer, UnitStats::new(60, 8, 4, 12, 0.075, 90, 90).air()),
            (Catapult, UnitStats::new(70, 20, 6, 30, 0.05, 150, 150)),
            (TownHall, UnitStats::new(300, 0, 0, 0, 0.0, 250, 200)),
            (Barrack, UnitStats::new(200, 0, 0, 0, 0.0, 150, 150)),
            (Blacksmith, UnitStats::new(200, 0, 0, 0, 0.0, 150, 150)),
            (Stable, UnitStats::new(200, 0, 0, 0, 0.0, 150, 150)),
            (Workshop, UnitStats::new(200, 0, 0, 0, 0.0, 150, 150)),
            (GuardTower, UnitStats::new(150, 12, 5, 15, 0.0, 120, 120).air()),
        ]);

        let mut multipliers: BTreeMap<UnitType, BTreeMap<UnitType, f64>> = BTreeMap::new();
        let mut set = |a: UnitType, t: UnitType, m: f64| {
            multipliers.entry(a).or_default().insert(t, m);
        };
        for (strong, weak) in [
            (Spearman, Cavalry),
            (Swordman, Spearman),
            (Cavalry, Swordman),
            (Archer, Dragon),
        ] {
            set(strong, weak, 2.0);
            set(weak, strong, 0.5);
        }
        for b in UnitType::BUILDINGS {
            set(Catapult, b, 2.0);
        }

        BalanceConfig {
            version: CONFIG_VERSION,
            start_money: 300,
            sight_radius: 4,
            max_ticks: 25_000,
            mine_ticks: 20,
            mine_amount: 10,
            carry_capacity: 10,
            resource_capacity: 500,
            units,
            multipliers,
        }
    }
}

impl BalanceConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: BalanceConfig = toml::from_str(s)?;
        if cfg.version != CONFIG_VERSION {
            return Err(ConfigError::Version(cfg.version));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form; the content hash is computed over this.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("balance config is always serializable")
    }

    /// Hex SHA-256 prefix of the canonical serialization.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn stats(&self, kind: UnitType) -> &UnitStats {
        &self.units[&kind]
    }

    /// Damage factor for `attacker` hitting `target`. `None` when the target
    /// is airborne and the attacker cannot hit air.
    pub fn multiplier(&self, attacker: UnitType, target: UnitType) -> Option<f64> {
        if target.is_flying() && !self.units.get(&attacker).is_some_and(|s| s.can_target_air) {
            return None;
        }
        Some(
            self.multipliers
                .get(&attacker)
                .and_then(|m| m.get(&target))
                .copied()
                .unwrap_or(1.0),
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        for kind in UnitType::ALL {
            let Some(s) = self.units.get(&kind) else {
                return bad(format!("missing stats for {kind}"));
            };
            if s.hp == 0 {
                return bad(format!("{kind}: hp must be positive"));
            }
            if kind.is_army() && s.speed <= 0.0 {
                return bad(format!("{kind}: army units need positive speed"));
            }
            if kind.is_building() && s.speed != 0.0 {
                return bad(format!("{kind}: buildings cannot move"));
            }
            if s.range < 0 || !(s.speed.is_finite() && s.speed < 1.0) {
                return bad(format!("{kind}: range/speed out of range"));
            }
            if s.build_time == 0 {
                return bad(format!("{kind}: build_time must be positive"));
            }
            if s.can_target_air && !matches!(kind, UnitType::Archer | UnitType::GuardTower) {
                return bad(format!("{kind}: only archers and guard towers can hit air"));
            }
        }
        for (attacker, row) in &self.multipliers {
            for (target, &m) in row {
                if !(m > 0.0 && m.is_finite()) {
                    return bad(format!("multiplier {attacker}->{target} must be positive"));
                }
                if target.is_flying() && !self.units[attacker].can_target_air {
                    return bad(format!("{attacker} cannot target air; multiplier vs {target} not allowed"));
                }
            }
        }
        use UnitType::*;
        for (a, t) in [(Spearman, Cavalry), (Swordman, Spearman), (Cavalry, Swordman), (Archer, Dragon)] {
            if self.multiplier(a, t).unwrap_or(0.0) <= 1.0 {
                return bad(format!("attack cycle edge {a}->{t} must have multiplier > 1"));
            }
        }
        for b in UnitType::BUILDINGS {
            if self.multiplier(Catapult, b).unwrap_or(0.0) <= 1.0 {
                return bad(format!("catapult multiplier vs {b} must be > 1"));
            }
        }
        if self.sight_radius < 1 || self.mine_amount == 0 || self.resource_capacity == 0 {
            return bad("sight_radius, mine_amount and resource_capacity must be positive".into());
        }
        if self.carry_capacity != self.mine_amount {
            return bad("carry_capacity must equal mine_amount".into());
        }
        if !self.resource_capacity.is_multiple_of(self.mine_amount) {
            return bad("resource_capacity must be a multiple of mine_amount".into());
        }
        Ok(())
    }

    /// Validates and precomputes the integer tables used by the simulation.
    pub fn compile(&self) -> Result<Balance, ConfigError> {
        self.validate()?;
        let mut damage = [[None; UnitType::COUNT]; UnitType::COUNT];
        for a in UnitType::ALL {
            let base = self.stats(a).damage;
            if base == 0 {
                continue;
            }
            for t in UnitType::ALL {
                damage[a.index()][t.index()] = self
                    .multiplier(a, t)
                    .map(|m| round_half_up(base as f64 * m));
            }
        }
        let speed = UnitType::ALL.map(|k| (self.stats(k).speed * CELL_UNITS as f64).round() as i32);
        Ok(Balance {
            hash: self.content_hash(),
            config: self.clone(),
            damage,
            speed,
        })
    }
}

pub fn round_half_up(v: f64) -> u32 {
    (v + 0.5).floor().max(0.0) as u32
}

/// A validated config with derived lookup tables.
#[derive(Debug, Clone)]
pub struct Balance {
    pub config: BalanceConfig,
    pub hash: String,
    damage: [[Option<u32>; UnitType::COUNT]; UnitType::COUNT],
    speed: [i32; UnitType::COUNT],
}

impl Default for Balance {
    fn default() -> Self {
        BalanceConfig::default().compile().expect("default config is valid")
    }
}

impl Balance {
    pub fn stats(&self, kind: UnitType) -> &UnitStats {
        self.config.stats(kind)
    }

    /// Damage per hit, already rounded. `None` if the attacker cannot hit the target.
    pub fn damage(&self, attacker: UnitType, target: UnitType) -> Option<u32> {
        self.damage[attacker.index()][target.index()]
    }

    /// Speed in fixed-point units per tick.
    pub fn speed(&self, kind: UnitType) -> i32 {
        self.speed[kind.index()]
    }

    pub fn can_attack(&self, kind: UnitType) -> bool {
        self.stats(kind).damage > 0
    }
}
