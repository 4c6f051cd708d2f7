use std::error::Error;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use navsim_core::planner::astar_traced;
use navsim_core::sim::{
    run_episode, BehaviorMode, EpisodeOptions, JsonlSink, NullSink, WorldState,
};
use navsim_core::{maps, parse_map, render_overlay, simplify, to_waypoints, AsciiMap, GridMap};
use navsim_teleop::{server, Session, SimConfig};

type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(
    name = "navsim",
    version,
    about = "Differential-drive robot simulator and teleop service"
)]
struct Cli {
    /// JSON file overriding robot, tracker and avoidance settings and adding targets.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the control protocol on a socket (plain NDJSON or WebSocket).
    Serve {
        /// Map file, or the name of a bundled map.
        #[arg(long)]
        map: String,
        #[arg(long, env = "NAVSIM_PORT", default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 100)]
        tick_ms: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the map with the A* path overlaid as '*'.
    Plan {
        #[arg(long)]
        map: String,
    },
    /// Run one episode headless and optionally log telemetry as JSON lines.
    Run {
        #[arg(long)]
        map: String,
        #[arg(long, value_parser = parse_mode)]
        mode: BehaviorMode,
        #[arg(long, default_value_t = 1000)]
        max_ticks: u64,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        tick_ms: u64,
    },
}

fn parse_mode(s: &str) -> Result<BehaviorMode, String> {
    s.parse().map_err(|e: navsim_core::Error| e.to_string())
}

fn load_map_text(map_arg: &str) -> CliResult<String> {
    let path = FsPath::new(map_arg);
    if path.exists() {
        return Ok(std::fs::read_to_string(path).map_err(|e| format!("reading {map_arg}: {e}"))?);
    }
    maps::by_name(map_arg).map(str::to_string).ok_or_else(|| {
        format!(
            "no map file {map_arg:?} and no bundled map by that name (bundled: {})",
            maps::NAMES.join(", ")
        )
        .into()
    })
}

fn load_map(map_arg: &str) -> CliResult<GridMap> {
    Ok(parse_map(&load_map_text(map_arg)?).map_err(|e| format!("{map_arg}: {e}"))?)
}

fn build_world(map: GridMap, cfg: &SimConfig, seed: u64) -> CliResult<WorldState> {
    let mut world = WorldState::new(map, cfg.robot.clone(), seed)?;
    world.targets = cfg.targets.clone();
    world.encoder_noise = cfg.encoder_noise;
    Ok(world)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("navsim: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    match cli.command {
        Command::Plan { map } => plan(&map),
        Command::Run {
            map,
            mode,
            max_ticks,
            log,
            seed,
            tick_ms,
        } => run(&cfg, &map, mode, max_ticks, log.as_deref(), seed, tick_ms),
        Command::Serve {
            map,
            port,
            host,
            tick_ms,
            seed,
        } => serve(&cfg, &map, &host, port, tick_ms, seed),
    }
}

fn plan(map_arg: &str) -> CliResult<()> {
    let ascii = AsciiMap::parse(&load_map_text(map_arg)?).map_err(|e| format!("{map_arg}: {e}"))?;
    let map = ascii.to_grid(navsim_core::grid::DEFAULT_RESOLUTION)?;
    let trace = astar_traced(&map)?;
    println!("{}", render_overlay(&ascii, &trace.path));
    let turns = simplify(&trace.path);
    eprintln!(
        "steps: {}  turn points: {}  expanded: {}",
        trace.path.steps(),
        turns.len(),
        trace.expanded.len()
    );
    for p in to_waypoints(&trace.path, &map)?.nodes {
        eprintln!("  ({:.0}, {:.0})", p.x, p.y);
    }
    Ok(())
}

fn run(
    cfg: &SimConfig,
    map_arg: &str,
    mode: BehaviorMode,
    max_ticks: u64,
    log: Option<&FsPath>,
    seed: u64,
    tick_ms: u64,
) -> CliResult<()> {
    let world = build_world(load_map(map_arg)?, cfg, seed)?;
    let options = EpisodeOptions {
        mode,
        tick_ms,
        max_ticks,
        tracker: cfg.tracker.clone(),
        avoid: cfg.avoid.clone(),
        waypoints: None,
    };
    let report = match log {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| format!("creating {}: {e}", path.display()))?;
            let mut sink = JsonlSink::new(BufWriter::new(file));
            let report = run_episode(world, &options, &mut sink);
            sink.into_inner().flush()?;
            report
        }
        None => run_episode(world, &options, &mut NullSink),
    };
    let p = report.final_pose;
    println!("mode: {mode}");
    println!("ticks: {}", report.ticks_used);
    println!("collisions: {}", report.collisions);
    println!("goal_reached: {}", report.goal_reached);
    println!("halted: {}", report.halted);
    println!("events: {}", report.events.len());
    println!("final_pose: {:.1} {:.1} {:.4}", p.x, p.y, p.theta);
    match report.error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn serve(
    cfg: &SimConfig,
    map_arg: &str,
    host: &str,
    port: u16,
    tick_ms: u64,
    seed: u64,
) -> CliResult<()> {
    let world = build_world(load_map(map_arg)?, cfg, seed)?;
    let session = Session::new(world, cfg.tracker.clone(), cfg.avoid.clone(), tick_ms)?;
    let listener = TcpListener::bind((host, port))?;
    eprintln!("navsim: listening on {}", listener.local_addr()?);
    server::serve(listener, session, Arc::new(AtomicBool::new(false)))?;
    Ok(())
}
