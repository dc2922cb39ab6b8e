//! `minirts` command line: self-play, tournaments, maps, dataset export,
//! validation, serving and benchmarks.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use minirts::arena::derive_seed;
use minirts::bots::{Opponent, StrategyId};
use minirts::config::{Balance, BalanceConfig};
use minirts::harness::{self, BatchConfig, GameResult, ResultsTable};
use minirts::map::MapParams;
use minirts::mapgen::generate_map;
use minirts::replay::export::DEFAULT_K;
use minirts::validator::DEFAULT_WINDOW;
use serde::Serialize;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "minirts", version, about = "Headless tools for the MiniRTS engine")]
struct Cli {
    /// Master seed; every subcommand is deterministic given it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Balance config (TOML) replacing the built-in unit table.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MapArgs {
    #[arg(long, default_value_t = MapParams::default().water_fraction)]
    water_fraction: f64,
    #[arg(long, default_value_t = MapParams::default().n_resources)]
    resources: usize,
    #[arg(long, default_value_t = MapParams::default().equidistance_tolerance)]
    tolerance: i32,
}

impl MapArgs {
    fn params(&self) -> MapParams {
        MapParams {
            water_fraction: self.water_fraction,
            n_resources: self.resources,
            equidistance_tolerance: self.tolerance,
        }
    }
}

#[derive(Args)]
struct BatchArgs {
    /// Strategy of the first side.
    #[arg(short = 'a', long, default_value = "simple")]
    a: StrategyId,
    /// Strategy of the second side.
    #[arg(short = 'b', long, default_value = "simple")]
    b: StrategyId,
    /// Stop games here and score them as draws.
    #[arg(long)]
    tick_limit: Option<u32>,
    /// Write one replay per game into this directory.
    #[arg(long)]
    replay_dir: Option<PathBuf>,
    /// Record the first side's plan as instructions.
    #[arg(long)]
    instructor: bool,
    /// Print every game, not just the summary.
    #[arg(long)]
    games: bool,
    #[command(flatten)]
    map: MapArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Bot against bot on freshly generated maps.
    Selfplay {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(short = 'n', long, default_value_t = 100)]
        n_games: usize,
    },
    /// Each map played twice with sides swapped.
    Tournament {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long, default_value_t = 50)]
        maps: usize,
    },
    /// Generate maps and print them in the text format.
    Genmap {
        #[arg(short = 'n', long, default_value_t = 1)]
        count: usize,
        /// Write `map-<i>.txt` files here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Turn a directory of replays into a training dataset.
    Export {
        replay_dir: PathBuf,
        #[arg(short = 'k', long, default_value_t = DEFAULT_K)]
        k: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check instruction execution and data filters for replays.
    Validate {
        #[arg(required = true)]
        replays: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: u32,
        /// Write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the websocket game server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "simple")]
        opponent: StrategyId,
        #[arg(long, default_value_t = 1.0)]
        resource_scaling: f64,
        #[arg(long)]
        replay_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        tick_hz: u32,
        #[arg(long, default_value_t = 10)]
        update_hz: u32,
        #[arg(long, default_value_t = 64)]
        max_sessions: usize,
    },
    /// Measure simulation throughput.
    Bench {
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 50_000)]
        ticks: u64,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let balance = Arc::new(match &cli.config {
        Some(path) => {
            let cfg = BalanceConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
            cfg.compile()?
        }
        None => Balance::default(),
    });
    match cli.command {
        Command::Selfplay { batch, n_games } => {
            let cfg = batch_config(cli.seed, &balance, &batch);
            let (table, results) = harness::run_selfplay(&cfg, batch.a, batch.b, n_games)?;
            print_results(cli.json, &table, batch.games.then_some(&results))
        }
        Command::Tournament { batch, maps } => {
            let cfg = batch_config(cli.seed, &balance, &batch);
            let (table, results) = harness::run_tournament(&cfg, batch.a, batch.b, maps)?;
            print_results(cli.json, &table, batch.games.then_some(&results))
        }
        Command::Genmap { count, out, map } => genmap(cli.seed, cli.json, count, out, map.params()),
        Command::Export { replay_dir, k, out } => {
            let summary = harness::run_export(&replay_dir, k, &out)?;
            if cli.json {
                println!("{}", serde_json::to_string(&summary)?);
            } else {
                for s in &summary.skipped {
                    println!("skipped {}: {}", s.file.display(), s.error);
                }
                let st = &summary.stats;
                println!("games                   {}", st.total_games);
                println!("win rate                {:.3}", st.win_rate);
                println!("instructions            {}", st.total_instructions);
                println!("unique instructions     {}", st.unique_instructions);
                println!("words                   {}", st.total_words);
                println!("unique words            {}", st.unique_words);
                println!("words / instruction     {:.2}", st.words_per_instruction);
                println!("instructions / game     {:.2}", st.instructions_per_game);
                println!("frames                  {}", st.frames);
                println!("actions / frame         {:.3}", st.actions_per_frame);
                println!("actions / instruction   {:.3}", st.actions_per_instruction);
            }
            Ok(())
        }
        Command::Validate { replays, window, report } => {
            let rep = harness::run_validate(&replays, window);
            if let Some(path) = &report {
                std::fs::write(path, serde_json::to_string_pretty(&rep)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if cli.json {
                println!("{}", serde_json::to_string(&rep)?);
            } else {
                for s in &rep.skipped {
                    println!("skipped {}: {}", s.file.display(), s.error);
                }
                for g in &rep.games {
                    let decision = match g.decision {
                        minirts::validator::FilterDecision::Keep => "keep".to_string(),
                        minirts::validator::FilterDecision::Drop { reason } => format!("drop ({reason:?})"),
                    };
                    println!(
                        "{}  fulfilled {}  violated {}  unverifiable {}  {}",
                        g.file.display(),
                        g.fulfilled,
                        g.violated,
                        g.unverifiable,
                        decision
                    );
                }
                if let Some(p) = &rep.executor_profile {
                    println!("executor pass rate {:.3}, warnings {}", p.validator_pass_rate, p.warnings_received);
                }
            }
            Ok(())
        }
        Command::Serve {
            port,
            host,
            opponent,
            resource_scaling,
            replay_dir,
            tick_hz,
            update_hz,
            max_sessions,
        } => {
            let session = minirts::server::SessionConfig {
                opponent: Opponent::new(opponent, resource_scaling)?,
                seed: cli.seed,
                map_params: MapParams::default(),
                balance,
            };
            let config = minirts::server::net::ServerConfig {
                session,
                tick_hz,
                update_hz,
                max_sessions,
                replay_dir,
                ..Default::default()
            };
            serve(&host, port, config)
        }
        Command::Bench { workers, ticks } => {
            let cfg = BatchConfig {
                balance,
                seed: cli.seed,
                ..BatchConfig::default()
            };
            let r = harness::run_bench(&cfg, workers, ticks)?;
            if cli.json {
                println!("{}", serde_json::to_string(&r)?);
            } else {
                println!(
                    "{} worker(s) x {} ticks in {:.2}s: {:.0} ticks/s per worker (slowest {:.0}), {:.0} ticks/s total",
                    r.workers, r.ticks_per_worker, r.elapsed_secs, r.mean_ticks_per_sec, r.min_ticks_per_sec, r.aggregate_ticks_per_sec
                );
            }
            Ok(())
        }
    }
}

fn batch_config(seed: u64, balance: &Arc<Balance>, batch: &BatchArgs) -> BatchConfig {
    BatchConfig {
        balance: balance.clone(),
        map_params: batch.map.params(),
        seed,
        tick_limit: batch.tick_limit,
        replay_dir: batch.replay_dir.clone(),
        instructor: batch.instructor,
    }
}

#[derive(Serialize)]
struct ResultsOut<'a> {
    summary: &'a ResultsTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    games: Option<&'a [GameResult]>,
}

fn print_results(json: bool, table: &ResultsTable, games: Option<&Vec<GameResult>>) -> Result<()> {
    if json {
        let out = ResultsOut {
            summary: table,
            games: games.map(|g| g.as_slice()),
        };
        println!("{}", serde_json::to_string(&out)?);
        return Ok(());
    }
    if let Some(games) = games {
        println!("{:>5} {:>20} {:>24} {:>6} {:>6}", "game", "seed", "sides", "result", "ticks");
        for g in games {
            let sides = format!("{} v {}", g.sides[0], g.sides[1]);
            let result = format!("{:?}", g.result).to_lowercase();
            println!("{:>5} {:>20} {:>24} {:>6} {:>6}", g.index, g.seed, sides, result, g.ticks);
        }
    }
    let [a, b] = table.strategies;
    println!("{a} vs {b}, {} games", table.games);
    println!("  win  {:6.2}%", table.win_pct);
    println!("  lose {:6.2}%", table.lose_pct);
    println!("  draw {:6.2}%", table.draw_pct);
    println!("  mean ticks  {:.1}", table.mean_ticks);
    println!("  ticks/sec   {:.0} per worker", table.ticks_per_sec);
    Ok(())
}

#[derive(Serialize)]
struct MapOut {
    index: usize,
    seed: u64,
    map: String,
}

fn genmap(seed: u64, json: bool, count: usize, out: Option<PathBuf>, params: MapParams) -> Result<()> {
    if count == 0 {
        bail!("--count must be at least 1");
    }
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    for index in 0..count {
        let map_seed = if count == 1 { seed } else { derive_seed(seed, index as u64) };
        let map = generate_map(map_seed, params)?;
        let text = map.to_text();
        match &out {
            Some(dir) => {
                let path = dir.join(format!("map-{index:05}.txt"));
                std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            }
            None if json => println!("{}", serde_json::to_string(&MapOut { index, seed: map_seed, map: text })?),
            None => print!("{text}"),
        }
    }
    Ok(())
}

fn serve(host: &str, port: u16, config: minirts::server::net::ServerConfig) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        log::warn!("listening on {}", listener.local_addr()?);
        let hub = minirts::server::net::Hub::new(config);
        minirts::server::net::serve(listener, hub).await?;
        Ok(())
    })
}
