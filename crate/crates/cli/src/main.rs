use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use snakenav_cli::commands::{
    cmd_bench, cmd_eval, cmd_maze, cmd_navigate, cmd_train, load_policy, parse_cell, random_task, task_from_cells,
    NavigateSummary,
};
use snakenav_cli::config::RunConfig;
use snakenav_cli::{exit, exit_code};
use snakenav_core::navigator::{Outcome, TaskFile};
use snakenav_core::planner::OccupancyGrid;
use snakenav_core::{Error, Result};

/// Hierarchical navigation for a modular snake robot.
#[derive(Parser)]
#[command(name = "snakenav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Forces the deterministic sequential mode.
    #[arg(long)]
    single_thread: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train a local navigation policy.
    Train {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the number of training episodes.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Navigate a maze with a trained policy.
    Navigate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Grid file.
        #[arg(long, conflicts_with_all = ["random_maze", "task"])]
        maze: Option<PathBuf>,
        /// Generate a random maze from this seed instead of reading one.
        #[arg(long, conflicts_with = "task")]
        random_maze: Option<u64>,
        /// Task file with grid, start, goal and budget.
        #[arg(long)]
        task: Option<PathBuf>,
        /// Start cell `x,y`.
        #[arg(long)]
        start: Option<String>,
        /// Heading at the start, rad.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        start_yaw: f64,
        /// Goal cell `x,y`.
        #[arg(long)]
        goal: Option<String>,
        /// Overrides the time budget, s.
        #[arg(long)]
        time_budget: Option<f64>,
        /// Output directory for the trace files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a perfect maze and write it as a grid file.
    Maze {
        /// Corridor cells along x.
        #[arg(long)]
        width: usize,
        /// Corridor cells along y.
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero-shot evaluation on random mazes.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of mazes.
        #[arg(long)]
        mazes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare oscillator-level and joint-level learning cost.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common, fallback: Option<RunConfig>) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => fallback.unwrap_or_default(),
    };
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if common.single_thread {
        cfg.single_threaded();
    }
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Train { common, out, episodes } => {
            let mut cfg = load_config(&common, None)?;
            if let Some(n) = episodes {
                cfg.train.episodes = n;
            }
            let summary = cmd_train(&cfg, &out)?;
            print_json(&summary)?;
        }
        Command::Navigate {
            common,
            checkpoint,
            maze,
            random_maze,
            task,
            start,
            start_yaw,
            goal,
            time_budget,
            out,
        } => {
            let policy = load_policy(&checkpoint)?;
            let mut cfg = load_config(&common, policy.config.clone())?;
            if let Some(t) = time_budget {
                cfg.navigation.time_budget = t;
            }
            let start = start.as_deref().map(parse_cell).transpose()?;
            let goal = goal.as_deref().map(parse_cell).transpose()?;
            let mut nav_task = if let Some(path) = task {
                TaskFile::load(&path).map_err(input_error(&path))?
            } else if let Some(seed) = random_maze {
                let mut t = random_task(seed, start, goal, &cfg)?;
                if start.is_some() {
                    t.start.yaw = start_yaw;
                }
                t
            } else if let Some(path) = maze {
                let grid = OccupancyGrid::load(&path).map_err(input_error(&path))?;
                let (Some(s), Some(g)) = (start, goal) else {
                    return Err(Error::Config("--maze needs --start and --goal".into()));
                };
                task_from_cells(grid, s, start_yaw, g, &cfg)?
            } else {
                return Err(Error::Config("one of --maze, --random-maze or --task is required".into()));
            };
            if let Some(t) = time_budget {
                nav_task.time_budget = t;
            }
            let result = cmd_navigate(&cfg, &policy.actor, &nav_task, &out)?;
            print_json(&NavigateSummary::of(&result))?;
            if result.outcome == Outcome::Aborted {
                return Ok(exit::RUNTIME);
            }
        }
        Command::Maze {
            width,
            height,
            seed,
            out,
        } => {
            let grid = cmd_maze(width, height, seed, &out)?;
            print!("{grid}");
        }
        Command::Eval {
            common,
            checkpoint,
            mazes,
            out,
        } => {
            let policy = load_policy(&checkpoint)?;
            let mut cfg = load_config(&common, policy.config.clone())?;
            if let Some(n) = mazes {
                cfg.eval.mazes = n;
            }
            let stats = cmd_eval(&cfg, &policy.actor, out.as_deref())?;
            print_json(&stats)?;
        }
        Command::Bench { common, out } => {
            let cfg = load_config(&common, None)?;
            let report = cmd_bench(&cfg, out.as_deref())?;
            print!("{}", report.to_text());
        }
    }
    Ok(exit::SUCCESS)
}

fn input_error(path: &Path) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
        other => other,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
