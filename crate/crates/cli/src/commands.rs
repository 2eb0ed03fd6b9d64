//! File-level behaviour of each subcommand.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;
use snakenav_core::navigator::{
    navigate, random_maze_task, zero_shot_eval, EvalStats, NavigationResult, NavigationTask, Outcome, StartPose,
};
use snakenav_core::planner::{kruskal_maze, Cell, OccupancyGrid};
use snakenav_core::rl::{train, write_reward_csv, Checkpoint, Mlp, Observation};
use snakenav_core::{Error, Result};

use crate::bench::{bench, BenchReport};
use crate::config::RunConfig;

pub const CHECKPOINT_FILE: &str = "policy.ckpt";
pub const REWARD_FILE: &str = "reward.csv";
pub const CONFIG_FILE: &str = "config.toml";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub episodes: usize,
    pub updates: u64,
    pub aborted_episodes: usize,
    pub first_mean: f64,
    pub last_mean: f64,
    pub checkpoint: PathBuf,
}

/// Trains a policy and writes the checkpoint, the reward curve and the
/// effective configuration into `out`.
pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<TrainSummary> {
    cfg.validate()?;
    create_dir(out)?;
    let snapshot = cfg.to_toml();
    fs::write(out.join(CONFIG_FILE), &snapshot)?;
    let settings = cfg.sim_settings()?;
    let episodes = cfg.train.episodes;
    let step = (episodes / 20).max(1);
    let outcome = train(&settings, &cfg.env, &cfg.ddpg, &cfg.train, |e, agent| {
        if (e.episode + 1) % step == 0 {
            info!("episode {} return {:.3} updates {}", e.episode + 1, e.ret, agent.updates);
        }
    })?;
    write_reward_csv(writer(&out.join(REWARD_FILE))?, &outcome.log)?;
    let ckpt = Checkpoint {
        metadata: json!({
            "kind": "ddpg",
            "episodes": outcome.log.len(),
            "updates": outcome.agent.updates,
            "seed": cfg.train.seed,
            "obs_dim": outcome.agent.obs_dim(),
            "config": snapshot,
        }),
        networks: vec![
            ("actor".into(), outcome.agent.actor.clone()),
            ("critic".into(), outcome.agent.critic.clone()),
        ],
    };
    let path = out.join(CHECKPOINT_FILE);
    ckpt.save(&path)?;
    let window = 20.min(outcome.log.len()).max(1);
    let mean = |rows: &[snakenav_core::rl::EpisodeLog]| rows.iter().map(|r| r.ret).sum::<f64>() / rows.len().max(1) as f64;
    let n = outcome.log.len();
    Ok(TrainSummary {
        episodes: n,
        updates: outcome.agent.updates,
        aborted_episodes: outcome.aborted_episodes,
        first_mean: mean(&outcome.log[..window.min(n)]),
        last_mean: mean(&outcome.log[n.saturating_sub(window)..]),
        checkpoint: path,
    })
}

/// A loaded policy with the configuration it was trained under, if any.
pub struct Policy {
    pub actor: Mlp,
    pub config: Option<RunConfig>,
}

pub fn load_policy(path: &Path) -> Result<Policy> {
    if !path.is_file() {
        return Err(Error::Config(format!("checkpoint {} not found", path.display())));
    }
    let ckpt = Checkpoint::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read checkpoint {}: {io}", path.display())),
        other => other,
    })?;
    let actor = ckpt.network("actor")?.clone();
    let config = match ckpt.metadata.get("config").and_then(|v| v.as_str()) {
        Some(text) => Some(RunConfig::parse(text)?),
        None => None,
    };
    Ok(Policy { actor, config })
}

/// Checks that the actor fits the robot of `cfg`.
pub fn check_policy(actor: &Mlp, cfg: &RunConfig) -> Result<()> {
    let expected = Observation::dim_for(cfg.robot.n_joints);
    if actor.input_dim() != expected || actor.output_dim() != snakenav_core::rl::ACTION_DIM {
        return Err(Error::Checkpoint(format!(
            "actor maps {} -> {}, robot needs {} -> {}",
            actor.input_dim(),
            actor.output_dim(),
            expected,
            snakenav_core::rl::ACTION_DIM
        )));
    }
    Ok(())
}

/// Parses `"x,y"`.
pub fn parse_pair(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => match (x.parse(), y.parse()) {
            (Ok(x), Ok(y)) => Ok([x, y]),
            _ => Err(Error::Config(format!("expected two numbers, got `{s}`"))),
        },
        _ => Err(Error::Config(format!("expected `x,y`, got `{s}`"))),
    }
}

pub fn parse_cell(s: &str) -> Result<Cell> {
    s.parse::<Cell>()
        .map_err(|_| Error::Config(format!("expected a cell `x,y` with non-negative integers, got `{s}`")))
}

/// Task from a grid and start/goal cells. The chain is centred on the start
/// cell with the given heading.
pub fn task_from_cells(
    grid: OccupancyGrid,
    start: Cell,
    start_yaw: f64,
    goal: Cell,
    cfg: &RunConfig,
) -> Result<NavigationTask> {
    if !grid.contains(start) {
        return Err(Error::BlockedEndpoint(start.x, start.y));
    }
    let [x, y] = grid.cell_center(start);
    let task = NavigationTask {
        grid,
        start: StartPose { x, y, yaw: start_yaw },
        goal,
        arrival_radius: cfg.navigation.arrival_radius,
        time_budget: cfg.navigation.time_budget,
    };
    task.validate()?;
    Ok(task)
}

/// Random maze task; `start` and `goal` override the drawn endpoints.
pub fn random_task(seed: u64, start: Option<Cell>, goal: Option<Cell>, cfg: &RunConfig) -> Result<NavigationTask> {
    let (mut task, _, _) = random_maze_task(seed, &cfg.eval.config(), cfg.navigation.arrival_radius)?;
    task.time_budget = cfg.navigation.time_budget;
    if let Some(s) = start {
        if !task.grid.contains(s) {
            return Err(Error::BlockedEndpoint(s.x, s.y));
        }
        let [x, y] = task.grid.cell_center(s);
        task.start.x = x;
        task.start.y = y;
    }
    if let Some(g) = goal {
        task.goal = g;
    }
    task.validate()?;
    Ok(task)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigateSummary {
    pub outcome: Outcome,
    pub elapsed: f64,
    pub waypoint_index: usize,
    pub waypoints: usize,
    pub decisions: usize,
    pub control_ticks: u64,
    pub physics_steps: u64,
    pub error: Option<String>,
}

impl NavigateSummary {
    pub fn of(r: &NavigationResult) -> Self {
        Self {
            outcome: r.outcome,
            elapsed: r.elapsed,
            waypoint_index: r.waypoint_index,
            waypoints: r.plan.len(),
            decisions: r.trace.decisions.len(),
            control_ticks: r.trace.control_ticks,
            physics_steps: r.trace.physics_steps,
            error: r.error.clone(),
        }
    }
}

/// Runs a navigation task and writes `trace.csv`, `decisions.csv`,
/// `trace.jsonl`, `plan.json` and `summary.json` into `out`.
pub fn cmd_navigate(cfg: &RunConfig, actor: &Mlp, task: &NavigationTask, out: &Path) -> Result<NavigationResult> {
    check_policy(actor, cfg)?;
    let settings = cfg.sim_settings()?;
    let mut policy = actor.clone();
    let result = navigate(task, &mut policy, &settings, &cfg.nav_config())?;
    create_dir(out)?;
    result.trace.write_csv(writer(&out.join("trace.csv"))?)?;
    result.trace.write_decisions_csv(writer(&out.join("decisions.csv"))?)?;
    result.trace.write_jsonl(writer(&out.join("trace.jsonl"))?)?;
    serde_json::to_writer_pretty(writer(&out.join("plan.json"))?, &result.plan)?;
    serde_json::to_writer_pretty(writer(&out.join("summary.json"))?, &NavigateSummary::of(&result))?;
    Ok(result)
}

/// Generates a maze of `cells_x` by `cells_y` corridor cells.
pub fn cmd_maze(cells_x: usize, cells_y: usize, seed: u64, out: &Path) -> Result<OccupancyGrid> {
    let grid = kruskal_maze(cells_x, cells_y, seed).map_err(|e| match e {
        Error::InvalidParam { name, reason } => Error::Config(format!("{name}: {reason}")),
        other => other,
    })?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    grid.save(out)?;
    Ok(grid)
}

/// Zero-shot evaluation on freshly generated mazes; writes `eval.json`.
pub fn cmd_eval(cfg: &RunConfig, actor: &Mlp, out: Option<&Path>) -> Result<EvalStats> {
    check_policy(actor, cfg)?;
    let settings = cfg.sim_settings()?;
    let stats = zero_shot_eval(
        actor,
        cfg.eval.mazes,
        cfg.eval.seed,
        &settings,
        &cfg.nav_config(),
        &cfg.eval.config(),
    )?;
    if let Some(dir) = out {
        create_dir(dir)?;
        serde_json::to_writer_pretty(writer(&dir.join("eval.json"))?, &stats)?;
    }
    Ok(stats)
}

/// Timing comparison; writes `bench.json` when `out` is given.
pub fn cmd_bench(cfg: &RunConfig, out: Option<&Path>) -> Result<BenchReport> {
    let report = bench(cfg)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        serde_json::to_writer_pretty(writer(&dir.join("bench.json"))?, &report)?;
    }
    Ok(report)
}
