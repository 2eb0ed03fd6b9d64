//! The full stack on a navigation task: plan once, then drive the robot
//! from waypoint to waypoint with the local policy.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::thread;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact::GroundParams;
use crate::dynamics::{wrap_angle, ConfigState, RobotModel};
use crate::error::{invalid, Error, Result};
use crate::planner::{kruskal_maze, maze_cell, plan, Cell, OccupancyGrid, Spacing, WallField, WaypointPath};
use crate::rl::{
    build_observation, planar_distance, reward, Action, Mlp, Observation, RewardWeights, WaypointPose,
};
use crate::sim::{SimSettings, Simulator};

/// Chooses an action for an observation.
pub trait Policy {
    fn act(&mut self, obs: &Observation) -> Result<Action>;
}

impl Policy for Mlp {
    fn act(&mut self, obs: &Observation) -> Result<Action> {
        crate::rl::actor_forward(self, obs)
    }
}

impl<F: FnMut(&Observation) -> Action> Policy for F {
    fn act(&mut self, obs: &Observation) -> Result<Action> {
        Ok(self(obs))
    }
}

/// Planar pose of the chain's midpoint and heading of the head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Resting straight chain whose midpoint sits at `(x, y)`.
pub fn centered_state(model: &RobotModel, pose: &StartPose) -> ConfigState {
    let half = (model.n_bodies() - 1) as f64 * model.link_length / 2.0;
    let (s, c) = pose.yaw.sin_cos();
    ConfigState::resting(model, pose.x + half * c, pose.y + half * s, pose.yaw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigationTask {
    pub grid: OccupancyGrid,
    pub start: StartPose,
    pub goal: Cell,
    pub arrival_radius: f64,
    pub time_budget: f64,
}

impl NavigationTask {
    pub fn validate(&self) -> Result<()> {
        let start = self
            .grid
            .world_to_cell(self.start.x, self.start.y)
            .ok_or_else(|| invalid("task.start", "outside the grid"))?;
        if self.grid.is_occupied(start) {
            return Err(Error::BlockedEndpoint(start.x, start.y));
        }
        if self.grid.is_occupied(self.goal) {
            return Err(Error::BlockedEndpoint(self.goal.x, self.goal.y));
        }
        if !(self.arrival_radius > 0.0) {
            return Err(invalid("task.arrival_radius", "must be > 0"));
        }
        if !(self.time_budget > 0.0) {
            return Err(invalid("task.time_budget", "must be > 0"));
        }
        Ok(())
    }

    pub fn start_cell(&self) -> Option<Cell> {
        self.grid.world_to_cell(self.start.x, self.start.y)
    }
}

/// On-disk task description; the grid path is relative to the task file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub grid: String,
    /// `[x, y, yaw]` in m and rad.
    pub start: [f64; 3],
    /// Goal cell `[x, y]`.
    pub goal: [usize; 2],
    #[serde(default = "default_radius")]
    pub arrival_radius: f64,
    pub time_budget: f64,
}

fn default_radius() -> f64 {
    0.3
}

impl TaskFile {
    pub fn load(path: &Path) -> Result<NavigationTask> {
        let text = std::fs::read_to_string(path)?;
        let file: TaskFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let grid = OccupancyGrid::load(&dir.join(&file.grid))?;
        let task = NavigationTask {
            grid,
            start: StartPose {
                x: file.start[0],
                y: file.start[1],
                yaw: file.start[2],
            },
            goal: Cell::new(file.goal[0], file.goal[1]),
            arrival_radius: file.arrival_radius,
            time_budget: file.time_budget,
        };
        task.validate()?;
        Ok(task)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Reached,
    Timeout,
    Aborted,
}

/// State recorded once per control tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub tick: u64,
    pub time: f64,
    pub com: [f64; 3],
    pub head: [f64; 3],
    pub yaw_joints: Vec<f64>,
    pub pitch_joints: Vec<f64>,
    pub waypoint: usize,
    pub cumulative_reward: f64,
}

/// Record of one policy decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub index: usize,
    pub time: f64,
    /// Control tick at which the decision was taken.
    pub tick: u64,
    pub action: Action,
    pub waypoint: usize,
    /// Planar distance to the active waypoint when the decision was taken.
    pub distance: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NavigationTrace {
    pub samples: Vec<TraceSample>,
    pub decisions: Vec<DecisionRecord>,
    pub physics_steps: u64,
    pub control_ticks: u64,
}

#[derive(Debug, Clone)]
pub struct NavigationResult {
    pub outcome: Outcome,
    pub plan: WaypointPath,
    pub trace: NavigationTrace,
    /// Index of the waypoint being pursued at the end; equals the number of
    /// waypoints on success.
    pub waypoint_index: usize,
    pub elapsed: f64,
    pub error: Option<String>,
}

/// Navigation tunables besides the task itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavConfig {
    pub arrival_radius: f64,
    pub spacing: Spacing,
    pub reward: RewardWeights,
    /// Wall penalty parameters; only `k1` and `k2` are used.
    pub walls: GroundParams,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            arrival_radius: 0.3,
            spacing: Spacing::default(),
            reward: RewardWeights::default(),
            walls: GroundParams::default(),
        }
    }
}

/// Waypoint frames: each faces the next waypoint, the last keeps the
/// previous heading.
pub fn waypoint_poses(plan: &WaypointPath, height: f64, initial_yaw: f64) -> Vec<WaypointPose> {
    let w = &plan.waypoints;
    let mut yaw = initial_yaw;
    (0..w.len())
        .map(|i| {
            if i + 1 < w.len() {
                yaw = (w[i + 1][1] - w[i][1]).atan2(w[i + 1][0] - w[i][0]);
            }
            WaypointPose {
                position: [w[i][0], w[i][1], height],
                yaw: wrap_angle(yaw),
            }
        })
        .collect()
}

/// Runs the four-layer stack on a task. Planning errors are returned before
/// any simulation; simulation failures end the run with
/// [`Outcome::Aborted`] and the trace recorded so far.
pub fn navigate(
    task: &NavigationTask,
    policy: &mut dyn Policy,
    settings: &SimSettings,
    config: &NavConfig,
) -> Result<NavigationResult> {
    task.validate()?;
    let start_cell = task.start_cell().expect("validated");
    let plan = plan(&task.grid, start_cell, task.goal, config.spacing)?;
    let model = &settings.model;
    let poses = waypoint_poses(&plan, model.link_height / 2.0, task.start.yaw);
    let init = centered_state(model, &task.start);
    let walls = Arc::new(WallField::new(task.grid.clone(), config.walls));
    let mut sim = Simulator::new(settings.clone(), init)?.with_obstacles(walls);
    let mut trace = NavigationTrace::default();
    // The first waypoint is the start cell itself.
    let mut idx = 1;
    let ticks_per_decision = settings.timing.ticks_per_decision();
    let mut cumulative = 0.0;
    let mut prev_action: Option<Action> = None;
    let mut outcome = if idx >= poses.len() { Outcome::Reached } else { Outcome::Timeout };
    let mut error = None;
    'run: while outcome == Outcome::Timeout && sim.time() < task.time_budget - 1e-9 {
        let active = idx;
        let d_start = planar_distance(model, &sim.state, &poses[active]);
        let obs = build_observation(&sim.state, model, &sim.head_accel(), &poses[active]);
        let action = policy.act(&obs)?;
        if !action.to_array().iter().all(|v| v.is_finite()) {
            warn!("navigation aborted at t = {:.3} s: non-finite action", sim.time());
            error = Some(Error::NonFinite("policy action").to_string());
            outcome = Outcome::Aborted;
            break;
        }
        let action = Action::from_slice(&action.to_array());
        sim.set_command(action.gait_command());
        let decision = trace.decisions.len();
        trace.decisions.push(DecisionRecord {
            index: decision,
            time: sim.time(),
            tick: sim.control_ticks,
            action,
            waypoint: active,
            distance: d_start,
            reward: 0.0,
        });
        for _ in 0..ticks_per_decision {
            if let Err(e) = sim.control_tick() {
                warn!("navigation aborted at t = {:.3} s: {e}", sim.time());
                error = Some(e.to_string());
                outcome = Outcome::Aborted;
                break 'run;
            }
            while idx < poses.len() && planar_distance(model, &sim.state, &poses[idx]) < task.arrival_radius {
                info!("waypoint {idx} reached at t = {:.2} s", sim.time());
                idx += 1;
            }
            let c = sim.com();
            let head = sim.state.head_position(model);
            let q = sim.state.joints(model.n_joints);
            trace.samples.push(TraceSample {
                tick: sim.control_ticks,
                time: sim.time(),
                com: c.into(),
                head: head.into(),
                yaw_joints: sim.yaw_joints().iter().map(|&j| q[j]).collect(),
                pitch_joints: sim.pitch_joints().iter().map(|&j| q[j]).collect(),
                waypoint: idx,
                cumulative_reward: cumulative,
            });
            if idx >= poses.len() {
                outcome = Outcome::Reached;
                break;
            }
        }
        let d_end = planar_distance(model, &sim.state, &poses[active]);
        let r = reward(d_end, d_start, &action, &prev_action.unwrap_or(action), &config.reward);
        cumulative += r;
        if let Some(last) = trace.samples.last_mut() {
            last.cumulative_reward = cumulative;
        }
        trace.decisions[decision].reward = r;
        prev_action = Some(action);
    }
    trace.physics_steps = sim.physics_steps;
    trace.control_ticks = sim.control_ticks;
    Ok(NavigationResult {
        outcome,
        waypoint_index: idx,
        elapsed: sim.time(),
        plan,
        trace,
        error,
    })
}

impl NavigationTrace {
    /// One row per control tick.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n_yaw = self.samples.first().map_or(0, |s| s.yaw_joints.len());
        let n_pitch = self.samples.first().map_or(0, |s| s.pitch_joints.len());
        let mut header: Vec<String> = ["tick", "time", "com_x", "com_y", "com_z", "head_x", "head_y", "head_z", "waypoint", "cumulative_reward"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..n_yaw).map(|i| format!("yaw_{i}")));
        header.extend((0..n_pitch).map(|i| format!("pitch_{i}")));
        out.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.tick.to_string(), s.time.to_string()];
            row.extend(s.com.iter().chain(&s.head).map(|v| v.to_string()));
            row.push(s.waypoint.to_string());
            row.push(s.cumulative_reward.to_string());
            row.extend(s.yaw_joints.iter().chain(&s.pitch_joints).map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// One row per decision.
    pub fn write_decisions_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "index", "time", "tick", "waypoint", "distance", "reward", "r1", "r2", "omega", "theta1", "theta2",
            "delta1", "delta2",
        ])?;
        for d in &self.decisions {
            let mut row = vec![
                d.index.to_string(),
                d.time.to_string(),
                d.tick.to_string(),
                d.waypoint.to_string(),
                d.distance.to_string(),
                d.reward.to_string(),
            ];
            row.extend(d.action.to_array().iter().map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Line-delimited JSON: `{"type":"tick",...}` and `{"type":"decision",...}`
    /// records in time order.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        #[serde(tag = "type", rename_all = "lowercase")]
        enum Record<'a> {
            Tick(&'a TraceSample),
            Decision(&'a DecisionRecord),
        }
        let mut decisions = self.decisions.iter().peekable();
        for s in &self.samples {
            while let Some(d) = decisions.next_if(|d| d.tick < s.tick) {
                serde_json::to_writer(&mut w, &Record::Decision(d))?;
                writeln!(w)?;
            }
            serde_json::to_writer(&mut w, &Record::Tick(s))?;
            writeln!(w)?;
        }
        for d in decisions {
            serde_json::to_writer(&mut w, &Record::Decision(d))?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Per-maze result of a zero-shot evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub maze_seed: u64,
    pub cells_x: usize,
    pub cells_y: usize,
    pub start: Cell,
    pub goal: Cell,
    pub outcome: Outcome,
    pub time: f64,
    pub waypoints_reached: usize,
    pub waypoints_total: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalStats {
    pub runs: Vec<EvalRun>,
    pub success_rate: f64,
    /// Mean simulated time of successful runs, s.
    pub mean_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub min_cells: usize,
    pub max_cells: usize,
    /// Time allowed per planned waypoint, s.
    pub time_per_waypoint: f64,
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            min_cells: 2,
            max_cells: 5,
            time_per_waypoint: 40.0,
            workers: 1,
        }
    }
}

/// Random maze task for evaluation: size, endpoints and heading drawn from
/// the seed.
pub fn random_maze_task(seed: u64, cfg: &EvalConfig, arrival_radius: f64) -> Result<(NavigationTask, usize, usize)> {
    if cfg.min_cells < 2 || cfg.max_cells < cfg.min_cells {
        return Err(invalid("eval.min_cells", "require 2 <= min_cells <= max_cells"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cx = rng.random_range(cfg.min_cells..=cfg.max_cells);
    let cy = rng.random_range(cfg.min_cells..=cfg.max_cells);
    let grid = kruskal_maze(cx, cy, seed)?;
    let start = maze_cell(rng.random_range(0..cx), rng.random_range(0..cy));
    let goal = maze_cell(rng.random_range(0..cx), rng.random_range(0..cy));
    let [x, y] = grid.cell_center(start);
    let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let task = NavigationTask {
        grid,
        start: StartPose { x, y, yaw },
        goal,
        arrival_radius,
        time_budget: 1.0,
    };
    Ok((task, cx, cy))
}

/// Navigates `n_mazes` freshly generated mazes with one policy.
pub fn zero_shot_eval(
    policy: &Mlp,
    n_mazes: usize,
    seed: u64,
    settings: &SimSettings,
    nav: &NavConfig,
    cfg: &EvalConfig,
) -> Result<EvalStats> {
    let run_one = |k: usize| -> Result<EvalRun> {
        let maze_seed = seed.wrapping_add(k as u64);
        let (mut task, cx, cy) = random_maze_task(maze_seed, cfg, nav.arrival_radius)?;
        let path = plan(&task.grid, task.start_cell().expect("in grid"), task.goal, nav.spacing)?;
        task.time_budget = cfg.time_per_waypoint * path.len().max(1) as f64;
        let mut actor = policy.clone();
        let result = navigate(&task, &mut actor, settings, nav)?;
        Ok(EvalRun {
            maze_seed,
            cells_x: cx,
            cells_y: cy,
            start: task.start_cell().expect("in grid"),
            goal: task.goal,
            outcome: result.outcome,
            time: result.elapsed,
            waypoints_reached: result.waypoint_index.min(result.plan.len()),
            waypoints_total: result.plan.len(),
        })
    };
    let runs: Vec<EvalRun> = if cfg.workers <= 1 {
        (0..n_mazes).map(run_one).collect::<Result<_>>()?
    } else {
        let mut runs = Vec::with_capacity(n_mazes);
        for chunk in (0..n_mazes).collect::<Vec<_>>().chunks(cfg.workers) {
            let results: Vec<Result<EvalRun>> = thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|&k| s.spawn(move || run_one(k))).collect();
                handles.into_iter().map(|h| h.join().expect("eval thread panicked")).collect()
            });
            for r in results {
                runs.push(r?);
            }
        }
        runs
    };
    let successes: Vec<&EvalRun> = runs.iter().filter(|r| r.outcome == Outcome::Reached).collect();
    let success_rate = if runs.is_empty() { 0.0 } else { successes.len() as f64 / runs.len() as f64 };
    let mean_time = if successes.is_empty() {
        0.0
    } else {
        successes.iter().map(|r| r.time).sum::<f64>() / successes.len() as f64
    };
    Ok(EvalStats {
        runs,
        success_rate,
        mean_time,
    })
}
