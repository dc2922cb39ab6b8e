//! C ABI over the minirts engine.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `_free`. Every function returns a [`MrtsStatus`]; on failure a
//! human-readable message is kept per thread for
//! [`mrts_last_error_message`]. Panics never cross the boundary.

use minirts::action::{ActionRecord, ActionType};
use minirts::bots::{Opponent, StrategyId};
use minirts::env::{dump, Env, EnvConfig, EnvError, Observation, AGENT, SPATIAL_LEN, UNIT_FEATURES};
use minirts::game::Outcome;
use minirts::replay::{replay_verify, Replay, Verdict};
use minirts::types::{Cell, EntityId, UnitType};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Floats in one spatial observation (channels x 32 x 32, channel-major).
pub const MRTS_SPATIAL_LEN: usize = 32768;
/// Floats per unit feature row.
pub const MRTS_UNIT_FEATURES: usize = 31;

// The header needs literals; keep them tied to the engine.
const _: () = assert!(MRTS_SPATIAL_LEN == SPATIAL_LEN);
const _: () = assert!(MRTS_UNIT_FEATURES == UNIT_FEATURES);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrtsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    EpisodeFinished = 4,
    GameError = 5,
    IoError = 6,
    ReplayDiverged = 7,
    Panic = 8,
}

/// One per-unit order. `action_type` uses the engine's action indices:
/// 0 idle, 1 continue, 2 gather, 3 attack, 4 train_unit, 5 build_building,
/// 6 move. `target` is the resource or enemy id, `unit_type` the unit
/// index to train or build, and `x`/`y` the cell for build and move.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MrtsAction {
    pub unit: u32,
    pub action_type: u32,
    pub target: u32,
    pub unit_type: u32,
    pub x: i32,
    pub y: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MrtsStepResult {
    pub reward: f32,
    pub done: bool,
    pub tick: u32,
    /// -1 ongoing, 0 or 1 for the winning side, 2 for a draw.
    pub outcome: i32,
    /// Actions the game refused this step.
    pub rejected: u32,
}

/// One of the agent's own units.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MrtsUnit {
    pub id: u32,
    pub unit_type: u32,
    pub hp: u32,
    pub x: i32,
    pub y: i32,
}

/// An environment: the agent plays side 0 against a scripted bot.
pub struct MrtsEnv {
    env: Env,
    last: Observation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn fail(status: MrtsStatus, msg: impl Into<String>) -> MrtsStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into [`MrtsStatus::Panic`].
fn guard(f: impl FnOnce() -> MrtsStatus) -> MrtsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(MrtsStatus::Panic, msg)
        }
    }
}

fn env_error(e: EnvError) -> MrtsStatus {
    let status = match e {
        EnvError::EpisodeFinished => MrtsStatus::EpisodeFinished,
        EnvError::InvalidConfig(_) => MrtsStatus::InvalidArgument,
        EnvError::MapGen(_) | EnvError::Game(_) => MrtsStatus::GameError,
    };
    fail(status, e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, MrtsStatus> {
    if p.is_null() {
        return Err(fail(MrtsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MrtsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mrts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// without the terminator; 0 when there is none.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn mrts_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates an environment and resets it.
///
/// `opponent` is a strategy name (`simple`, `medium`, `strong`,
/// `second_base`, `tower_rush`, `peasant_rush`). `frame_skip` 0 picks the
/// default.
///
/// # Safety
/// `opponent` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mrts_env_new(
    seed: u64,
    opponent: *const c_char,
    resource_scaling: f64,
    frame_skip: u32,
    out: *mut *mut MrtsEnv,
) -> MrtsStatus {
    guard(|| {
        if out.is_null() {
            return fail(MrtsStatus::NullPointer, "out is null");
        }
        let name = match str_arg(opponent, "opponent") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let strategy: StrategyId = match name.parse() {
            Ok(s) => s,
            Err(e) => return fail(MrtsStatus::InvalidArgument, format!("{e}")),
        };
        let opponent = match Opponent::new(strategy, resource_scaling) {
            Ok(o) => o,
            Err(e) => return fail(MrtsStatus::InvalidArgument, e.to_string()),
        };
        let mut config = EnvConfig {
            seed,
            opponent,
            ..EnvConfig::default()
        };
        if frame_skip > 0 {
            config.frame_skip = frame_skip;
        }
        match Env::reset(config) {
            Ok((env, last)) => {
                *out = Box::into_raw(Box::new(MrtsEnv { env, last }));
                MrtsStatus::Ok
            }
            Err(e) => env_error(e),
        }
    })
}

/// Releases an environment. Null is ignored.
///
/// # Safety
/// `env` must come from [`mrts_env_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mrts_env_free(env: *mut MrtsEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

fn decode_action(a: &MrtsAction) -> Result<(EntityId, ActionRecord), MrtsStatus> {
    let kind = ActionType::ALL
        .get(a.action_type as usize)
        .copied()
        .ok_or_else(|| fail(MrtsStatus::InvalidArgument, format!("unknown action type {}", a.action_type)))?;
    let unit_type = || {
        UnitType::from_index(a.unit_type as usize)
            .ok_or_else(|| fail(MrtsStatus::InvalidArgument, format!("unknown unit type {}", a.unit_type)))
    };
    let cell = Cell::new(a.x, a.y);
    let action = match kind {
        ActionType::Idle => ActionRecord::Idle,
        ActionType::Continue => ActionRecord::Continue,
        ActionType::Gather => ActionRecord::Gather {
            resource: EntityId(a.target),
        },
        ActionType::Attack => ActionRecord::Attack {
            target: EntityId(a.target),
        },
        ActionType::TrainUnit => ActionRecord::TrainUnit { unit_type: unit_type()? },
        ActionType::BuildBuilding => ActionRecord::BuildBuilding {
            unit_type: unit_type()?,
            cell,
        },
        ActionType::Move => ActionRecord::Move { cell },
    };
    Ok((EntityId(a.unit), action))
}

fn outcome_code(o: Outcome) -> i32 {
    match o {
        Outcome::Ongoing => -1,
        Outcome::Win(p) => p.0 as i32,
        Outcome::Draw => 2,
    }
}

/// Applies `n` actions (plus an optional instruction) and advances one
/// agent step. Rejected actions are counted, not fatal.
///
/// # Safety
/// `env` must be live; `actions` must point to `n` items (or be null with
/// `n == 0`); `instruction` is null or NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mrts_env_step(
    env: *mut MrtsEnv,
    actions: *const MrtsAction,
    n: usize,
    instruction: *const c_char,
    out: *mut MrtsStepResult,
) -> MrtsStatus {
    guard(|| {
        if env.is_null() || out.is_null() || (actions.is_null() && n > 0) {
            return fail(MrtsStatus::NullPointer, "null argument");
        }
        let env = &mut *env;
        let raw = if n == 0 { &[][..] } else { std::slice::from_raw_parts(actions, n) };
        let mut decoded = Vec::with_capacity(n);
        for a in raw {
            match decode_action(a) {
                Ok(d) => decoded.push(d),
                Err(s) => return s,
            }
        }
        let text = if instruction.is_null() {
            None
        } else {
            match str_arg(instruction, "instruction") {
                Ok(s) => Some(s),
                Err(s) => return s,
            }
        };
        match env.env.step(&decoded, text) {
            Ok(step) => {
                *out = MrtsStepResult {
                    reward: step.reward,
                    done: step.done,
                    tick: step.observation.tick,
                    outcome: outcome_code(step.outcome),
                    rejected: step.rejected.len() as u32,
                };
                env.last = step.observation;
                MrtsStatus::Ok
            }
            Err(e) => env_error(e),
        }
    })
}

/// Current game tick.
///
/// # Safety
/// `env` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mrts_env_tick(env: *const MrtsEnv, out: *mut u32) -> MrtsStatus {
    if env.is_null() || out.is_null() {
        return fail(MrtsStatus::NullPointer, "null argument");
    }
    *out = (*env).env.game().tick();
    MrtsStatus::Ok
}

/// Copies the latest spatial observation ([`MRTS_SPATIAL_LEN`] floats).
///
/// # Safety
/// `env` must be live; `buf` must hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn mrts_env_spatial(env: *const MrtsEnv, buf: *mut f32, len: usize) -> MrtsStatus {
    if env.is_null() || buf.is_null() {
        return fail(MrtsStatus::NullPointer, "null argument");
    }
    let spatial = &(*env).last.spatial;
    if len < spatial.len() {
        return fail(MrtsStatus::BufferTooSmall, format!("need {} floats", spatial.len()));
    }
    std::ptr::copy_nonoverlapping(spatial.as_ptr(), buf, spatial.len());
    MrtsStatus::Ok
}

/// Lists the agent's units. Writes up to `cap` entries and the total count
/// to `count`; returns `BufferTooSmall` when `cap < count`.
///
/// # Safety
/// `env` must be live; `buf` must hold `cap` items (or be null with
/// `cap == 0`); `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mrts_env_units(env: *const MrtsEnv, buf: *mut MrtsUnit, cap: usize, count: *mut usize) -> MrtsStatus {
    if env.is_null() || count.is_null() || (buf.is_null() && cap > 0) {
        return fail(MrtsStatus::NullPointer, "null argument");
    }
    let units: Vec<MrtsUnit> = (*env)
        .env
        .game()
        .state
        .units_of(AGENT)
        .map(|u| {
            let c = u.cell();
            MrtsUnit {
                id: u.id.0,
                unit_type: u.kind.index() as u32,
                hp: u.hp,
                x: c.x,
                y: c.y,
            }
        })
        .collect();
    *count = units.len();
    let n = units.len().min(cap);
    if n > 0 {
        std::ptr::copy_nonoverlapping(units.as_ptr(), buf, n);
    }
    if cap < units.len() {
        return fail(MrtsStatus::BufferTooSmall, format!("need {} units", units.len()));
    }
    MrtsStatus::Ok
}

/// Serializes the full latest observation in the binary dump format. Call
/// with `cap == 0` to learn the size through `len`.
///
/// # Safety
/// `env` must be live; `buf` must hold `cap` bytes (or be null with
/// `cap == 0`); `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mrts_env_observation_dump(env: *const MrtsEnv, buf: *mut u8, cap: usize, len: *mut usize) -> MrtsStatus {
    if env.is_null() || len.is_null() || (buf.is_null() && cap > 0) {
        return fail(MrtsStatus::NullPointer, "null argument");
    }
    let mut bytes = Vec::new();
    dump::write_observation(&(*env).last, &mut bytes);
    *len = bytes.len();
    if cap < bytes.len() {
        return fail(MrtsStatus::BufferTooSmall, format!("need {} bytes", bytes.len()));
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    MrtsStatus::Ok
}

/// Re-simulates a replay file and checks every checkpoint. On success
/// `ticks` holds the replay length; a mismatch returns `ReplayDiverged`
/// with the first bad tick in `ticks`.
///
/// # Safety
/// `path` must be NUL-terminated and `ticks` writable.
#[no_mangle]
pub unsafe extern "C" fn mrts_replay_verify(path: *const c_char, ticks: *mut u32) -> MrtsStatus {
    guard(|| {
        if ticks.is_null() {
            return fail(MrtsStatus::NullPointer, "ticks is null");
        }
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let replay = match Replay::load(std::path::Path::new(path)) {
            Ok(r) => r,
            Err(e) => return fail(MrtsStatus::IoError, e.to_string()),
        };
        match replay_verify(&replay) {
            Ok(Verdict::Pass { ticks: t, .. }) => {
                *ticks = t;
                MrtsStatus::Ok
            }
            Ok(Verdict::Diverged { tick }) => {
                *ticks = tick;
                fail(MrtsStatus::ReplayDiverged, format!("diverged at tick {tick}"))
            }
            Err(e) => fail(MrtsStatus::GameError, e.to_string()),
        }
    })
}
