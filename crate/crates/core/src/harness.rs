//! Batch jobs behind the command line: self-play, tournaments, throughput
//! benchmarks, dataset export and replay validation.
//!
//! Games run on a worker pool but results are always reduced in game-index
//! order, so everything except wall-clock fields is a function of the seed.

use crate::arena::{derive_seed, play, Match, MatchError, MatchSetup};
use crate::bots::StrategyId;
use crate::config::Balance;
use crate::game::{GameError, Outcome};
use crate::map::MapParams;
use crate::replay::export::{export_dataset_for, learner_side, write_dataset, DatasetStats, ExportError, StatsBuilder};
use crate::replay::{Replay, ReplayError, Role};
use crate::types::PlayerId;
use crate::validator::{
    filter_game, player_profile, validate_replay, FilterDecision, InstructionCheck, PlayerProfile, ProfileGame, Verdict,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("need at least one game")]
    NoGames,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Export(#[from] ExportError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Shared settings for bot-vs-bot batches.
#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub balance: Arc<Balance>,
    pub map_params: MapParams,
    pub seed: u64,
    /// Stop undecided games here (they count as draws); `None` uses the
    /// configured game length.
    pub tick_limit: Option<u32>,
    /// Write one replay per game here.
    pub replay_dir: Option<PathBuf>,
    /// Voice side 0's plan as instructions in recorded replays.
    pub instructor: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            balance: Arc::new(Balance::default()),
            map_params: MapParams::default(),
            seed: 0,
            tick_limit: None,
            replay_dir: None,
            instructor: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameResult {
    pub index: usize,
    pub seed: u64,
    /// Strategies by side, as actually seated.
    pub sides: [StrategyId; 2],
    /// From the point of view of the first strategy of the batch.
    pub result: GameVerdict,
    pub ticks: u32,
    #[serde(skip)]
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GameVerdict {
    Win,
    Lose,
    Draw,
}

/// Win/lose/draw percentages for the first strategy against the second.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultsTable {
    pub strategies: [StrategyId; 2],
    pub games: usize,
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
    pub win_pct: f64,
    pub lose_pct: f64,
    pub draw_pct: f64,
    pub mean_ticks: f64,
    pub total_ticks: u64,
    /// Game ticks per second of single-worker time.
    pub ticks_per_sec: f64,
}

impl ResultsTable {
    fn from_results(strategies: [StrategyId; 2], results: &[GameResult]) -> ResultsTable {
        let n = results.len();
        let count = |v| results.iter().filter(|r| r.result == v).count();
        let (wins, losses, draws) = (count(GameVerdict::Win), count(GameVerdict::Lose), count(GameVerdict::Draw));
        let total_ticks: u64 = results.iter().map(|r| r.ticks as u64).sum();
        let busy: f64 = results.iter().map(|r| r.elapsed_secs).sum();
        let pct = |k: usize| 100.0 * k as f64 / n as f64;
        ResultsTable {
            strategies,
            games: n,
            wins,
            losses,
            draws,
            win_pct: pct(wins),
            lose_pct: pct(losses),
            draw_pct: pct(draws),
            mean_ticks: total_ticks as f64 / n as f64,
            total_ticks,
            ticks_per_sec: if busy > 0.0 { total_ticks as f64 / busy } else { 0.0 },
        }
    }
}

fn verdict(outcome: Outcome, side_of_first: PlayerId) -> GameVerdict {
    match outcome {
        Outcome::Win(p) if p == side_of_first => GameVerdict::Win,
        Outcome::Win(_) => GameVerdict::Lose,
        _ => GameVerdict::Draw,
    }
}

/// Plays one seated game; `first` is the side the batch's first strategy
/// holds.
fn run_one(cfg: &BatchConfig, index: usize, setup: MatchSetup, first: PlayerId) -> Result<GameResult, HarnessError> {
    let seed = setup.seed;
    let sides = setup.strategies;
    let limit = cfg.tick_limit.unwrap_or(u32::MAX);
    let started = Instant::now();
    let report = play(setup, limit)?;
    let elapsed_secs = started.elapsed().as_secs_f64();
    if let (Some(dir), Some(replay)) = (&cfg.replay_dir, &report.replay) {
        let path = dir.join(format!("game-{index:05}.mrtr"));
        replay.save(&path)?;
    }
    Ok(GameResult {
        index,
        seed,
        sides,
        result: verdict(report.outcome, first),
        ticks: report.ticks,
        elapsed_secs,
    })
}

fn setup_for(cfg: &BatchConfig, seed: u64, strategies: [StrategyId; 2]) -> Result<MatchSetup, HarnessError> {
    let mut setup = MatchSetup::generated(cfg.balance.clone(), seed, cfg.map_params, strategies)
        .map_err(MatchError::from)?;
    setup.record = cfg.replay_dir.is_some();
    setup.instructor = cfg.instructor.then_some(PlayerId(0));
    Ok(setup)
}

fn prepare_dir(cfg: &BatchConfig) -> Result<(), HarnessError> {
    if let Some(dir) = &cfg.replay_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(())
}

/// `n` games of `a` (side 0) against `b` (side 1), each on its own seeded
/// map.
pub fn run_selfplay(
    cfg: &BatchConfig,
    a: StrategyId,
    b: StrategyId,
    n: usize,
) -> Result<(ResultsTable, Vec<GameResult>), HarnessError> {
    if n == 0 {
        return Err(HarnessError::NoGames);
    }
    prepare_dir(cfg)?;
    let results = (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, 1000 + i as u64);
            run_one(cfg, i, setup_for(cfg, seed, [a, b])?, PlayerId(0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ResultsTable::from_results([a, b], &results), results))
}

/// `maps` maps, each played twice with sides swapped; results are from
/// `a`'s point of view.
pub fn run_tournament(
    cfg: &BatchConfig,
    a: StrategyId,
    b: StrategyId,
    maps: usize,
) -> Result<(ResultsTable, Vec<GameResult>), HarnessError> {
    if maps == 0 {
        return Err(HarnessError::NoGames);
    }
    prepare_dir(cfg)?;
    let results = (0..2 * maps)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, 1000 + (i / 2) as u64);
            let setup = setup_for(cfg, seed, [a, b])?;
            if i % 2 == 0 {
                run_one(cfg, i, setup, PlayerId(0))
            } else {
                run_one(cfg, i, setup.swapped(), PlayerId(1))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ResultsTable::from_results([a, b], &results), results))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub workers: usize,
    pub ticks_per_worker: u64,
    pub elapsed_secs: f64,
    /// Slowest worker's rate.
    pub min_ticks_per_sec: f64,
    pub mean_ticks_per_sec: f64,
    pub aggregate_ticks_per_sec: f64,
}

/// Each worker thread runs Simple-vs-Simple games back to back until it
/// has simulated `ticks` ticks.
pub fn run_bench(cfg: &BatchConfig, workers: usize, ticks: u64) -> Result<BenchReport, HarnessError> {
    let workers = workers.max(1);
    let started = Instant::now();
    let rates = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || -> Result<f64, HarnessError> {
                    let t0 = Instant::now();
                    let mut done = 0u64;
                    let mut game = 0u64;
                    while done < ticks {
                        let seed = derive_seed(cfg.seed, (w as u64) << 32 | game);
                        let mut m = Match::new(setup_for(
                            &BatchConfig {
                                replay_dir: None,
                                ..cfg.clone()
                            },
                            seed,
                            [StrategyId::Simple, StrategyId::Simple],
                        )?)?;
                        while !m.game.is_over() && done < ticks {
                            m.step()?;
                            done += 1;
                        }
                        game += 1;
                    }
                    Ok(done as f64 / t0.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect::<Result<Vec<_>, _>>()
    })?;
    let elapsed_secs = started.elapsed().as_secs_f64();
    Ok(BenchReport {
        workers,
        ticks_per_worker: ticks,
        elapsed_secs,
        min_ticks_per_sec: rates.iter().cloned().fold(f64::INFINITY, f64::min),
        mean_ticks_per_sec: rates.iter().sum::<f64>() / workers as f64,
        aggregate_ticks_per_sec: (ticks * workers as u64) as f64 / elapsed_secs,
    })
}

/// Replay files (`*.mrtr`) in a directory, sorted by name.
pub fn replay_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "mrtr") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub file: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportedGame {
    pub file: PathBuf,
    pub learner: PlayerId,
    pub frames: usize,
    pub dataset: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportSummary {
    pub k: u32,
    pub games: Vec<ExportedGame>,
    pub skipped: Vec<Skipped>,
    pub stats: DatasetStats,
}

/// Exports every replay in `replay_dir` into `out`: per game a
/// `<name>.jsonl` dataset with its `<name>.mrto` observation sidecar, plus
/// `stats.json` for the corpus. Unreadable replays are skipped with a
/// warning.
pub fn run_export(replay_dir: &Path, k: u32, out: &Path) -> Result<ExportSummary, HarnessError> {
    if k == 0 {
        return Err(ExportError::ZeroInterval.into());
    }
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut games = Vec::new();
    let mut skipped = Vec::new();
    let mut stats = StatsBuilder::default();
    for file in replay_files(replay_dir)? {
        let loaded = Replay::load(&file).map_err(ExportError::from).and_then(|replay| {
            let learner = learner_side(&replay);
            export_dataset_for(&replay, k, learner).map(|frames| (replay, learner, frames))
        });
        let (replay, learner, frames) = match loaded {
            Ok(v) => v,
            Err(e) => {
                log::warn!("skipping {}: {e}", file.display());
                skipped.push(Skipped {
                    file,
                    error: e.to_string(),
                });
                continue;
            }
        };
        let stem = file.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let dataset = out.join(format!("{stem}.jsonl"));
        let sidecar = out.join(format!("{stem}.mrto"));
        let mut jsonl = BufWriter::new(File::create(&dataset).map_err(io_err(&dataset))?);
        let mut obs = BufWriter::new(File::create(&sidecar).map_err(io_err(&sidecar))?);
        write_dataset(&frames, k, learner, &mut jsonl, &mut obs)?;
        std::io::Write::flush(&mut jsonl).map_err(io_err(&dataset))?;
        std::io::Write::flush(&mut obs).map_err(io_err(&sidecar))?;
        stats.add(&replay, learner, &frames);
        games.push(ExportedGame {
            file,
            learner,
            frames: frames.len(),
            dataset,
        });
    }
    let summary = ExportSummary {
        k,
        games,
        skipped,
        stats: stats.finish(),
    };
    let stats_path = out.join("stats.json");
    let text = serde_json::to_string_pretty(&summary.stats).expect("stats serialize");
    std::fs::write(&stats_path, text + "\n").map_err(io_err(&stats_path))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameValidation {
    pub file: PathBuf,
    pub learner: PlayerId,
    pub decision: FilterDecision,
    pub fulfilled: usize,
    pub violated: usize,
    pub unverifiable: usize,
    pub checks: Vec<InstructionCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub window: u32,
    pub games: Vec<GameValidation>,
    pub skipped: Vec<Skipped>,
    /// The learner team over all readable games, once per seat.
    pub instructor_profile: Option<PlayerProfile>,
    pub executor_profile: Option<PlayerProfile>,
}

/// Per-instruction verdicts, keep/drop decisions and team profiles for a
/// set of replays. Unreadable replays are skipped with a warning.
pub fn run_validate(files: &[PathBuf], window: u32) -> ValidationReport {
    let mut games = Vec::new();
    let mut skipped = Vec::new();
    let mut replays = Vec::new();
    for file in files {
        let checked = Replay::load(file).and_then(|replay| {
            let learner = learner_side(&replay);
            validate_replay(&replay, learner, window).map(|checks| (replay, learner, checks))
        });
        let (replay, learner, checks) = match checked {
            Ok(v) => v,
            Err(e) => {
                log::warn!("skipping {}: {e}", file.display());
                skipped.push(Skipped {
                    file: file.clone(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        let count = |v: Verdict| checks.iter().filter(|c| c.verdict == v).count();
        games.push(GameValidation {
            file: file.clone(),
            learner,
            decision: filter_game(&replay),
            fulfilled: count(Verdict::Fulfilled),
            violated: count(Verdict::Violated),
            unverifiable: count(Verdict::Unverifiable),
            checks,
        });
        replays.push((replay, learner));
    }
    let profile = |role| {
        let seated: Vec<ProfileGame> = replays
            .iter()
            .map(|(replay, side)| ProfileGame {
                replay,
                side: *side,
                role,
            })
            .collect();
        player_profile(&seated, window).ok()
    };
    ValidationReport {
        window,
        instructor_profile: profile(Role::Instructor),
        executor_profile: profile(Role::Executor),
        games,
        skipped,
    }
}
