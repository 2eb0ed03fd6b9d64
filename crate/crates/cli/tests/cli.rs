use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use snakenav_cli::bench::bench;
use snakenav_cli::commands::{cmd_maze, load_policy, CHECKPOINT_FILE, CONFIG_FILE, REWARD_FILE};
use snakenav_cli::config::RunConfig;
use snakenav_core::planner::{kruskal_maze, OccupancyGrid};
use snakenav_core::rl::{Activation, Checkpoint, Mlp};

fn snakenav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snakenav"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TINY_TRAIN: &str = r#"
[env]
episode_secs = 4.0
arena_size = 3.0

[ddpg]
hidden = [16, 16]
batch_size = 4

[train]
episodes = 3
update_after = 4
"#;

/// Untrained actor without an embedded configuration.
fn write_tiny_checkpoint(path: &Path) {
    let actor = Mlp::new(&[21, 8, 7], Activation::Relu, Activation::Tanh, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
    Checkpoint {
        metadata: serde_json::json!({"kind": "test"}),
        networks: vec![("actor".into(), actor)],
    }
    .save(path)
    .unwrap();
}

#[test]
fn maze_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.grid");
    let r = snakenav(&["maze", "--width", "2", "--height", "2", "--seed", "1", "--out", p(&out)]);
    assert_eq!(code(&r), 0);
    let expected = std::fs::read_to_string(golden("maze_2x2_seed1.grid")).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), expected);
}

#[test]
fn maze_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let path = dir.path().join(format!("{seed}.grid"));
        let grid = cmd_maze(4, 3, seed, &path).unwrap();
        assert_eq!(OccupancyGrid::load(&path).unwrap(), grid);
        assert_eq!(grid, kruskal_maze(4, 3, seed).unwrap());
    }
}

#[test]
fn distinct_seeds_give_distinct_mazes() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = HashSet::new();
    for seed in 0..100 {
        let path = dir.path().join("m.grid");
        cmd_maze(8, 8, seed, &path).unwrap();
        seen.insert(std::fs::read(&path).unwrap());
    }
    assert_eq!(seen.len(), 100);
}

#[test]
fn bad_maze_dimensions_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let r = snakenav(&["maze", "--width", "1", "--height", "4", "--out", p(&dir.path().join("m.grid"))]);
    assert_eq!(code(&r), 2);
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[pid]\nkp = 10.0\nspeed_boost = 3.0\n").unwrap();
    let r = snakenav(&["train", "--config", p(&cfg), "--out", p(&dir.path().join("run"))]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("speed_boost"));
}

#[test]
fn invalid_config_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[timing]\ncontrol_dt = 0.0205\n").unwrap();
    let r = snakenav(&["train", "--config", p(&cfg), "--out", p(&dir.path().join("run"))]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("control_dt"));
}

#[test]
fn missing_checkpoint_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let r = snakenav(&[
        "navigate",
        "--checkpoint",
        p(&dir.path().join("nope.ckpt")),
        "--random-maze",
        "1",
        "--out",
        p(&dir.path().join("nav")),
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn start_equal_goal_exits_0_reached() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("p.ckpt");
    write_tiny_checkpoint(&ckpt);
    let maze = dir.path().join("m.grid");
    cmd_maze(3, 3, 5, &maze).unwrap();
    let out = dir.path().join("nav");
    let r = snakenav(&[
        "navigate", "--checkpoint", p(&ckpt), "--maze", p(&maze), "--start", "3,3", "--goal", "3,3", "--out", p(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["outcome"], "reached");
    for f in ["trace.csv", "decisions.csv", "trace.jsonl", "plan.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn unreachable_goal_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("p.ckpt");
    write_tiny_checkpoint(&ckpt);
    let grid = dir.path().join("split.grid");
    std::fs::write(&grid, "7 3 2\n#######\n#..#..#\n#######\n").unwrap();
    let r = snakenav(&[
        "navigate", "--checkpoint", p(&ckpt), "--maze", p(&grid), "--start", "1,1", "--goal", "5,1", "--out",
        p(&dir.path().join("nav")),
    ]);
    assert_eq!(code(&r), 4);
    let blocked = snakenav(&[
        "navigate", "--checkpoint", p(&ckpt), "--maze", p(&grid), "--start", "1,1", "--goal", "3,1", "--out",
        p(&dir.path().join("nav")),
    ]);
    assert_eq!(code(&blocked), 4);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&snakenav(&["navigate"])), 2);
    assert_eq!(code(&snakenav(&["frobnicate"])), 2);
}

#[test]
fn train_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY_TRAIN).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let r = snakenav(&["train", "--config", p(&cfg), "--seed", "11", "--single-thread", "--out", p(&out)]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in [CHECKPOINT_FILE, REWARD_FILE, CONFIG_FILE] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let csv_a = std::fs::read(a.join(REWARD_FILE)).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join(REWARD_FILE)).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("episode,return,steps,seed\n"));
    assert_eq!(text.lines().count(), 4);
    assert_eq!(std::fs::read(a.join(CHECKPOINT_FILE)).unwrap(), std::fs::read(b.join(CHECKPOINT_FILE)).unwrap());

    let snapshot = RunConfig::load(&a.join(CONFIG_FILE)).unwrap();
    assert_eq!(snapshot.train.seed, 11);
    let policy = load_policy(&a.join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(policy.config, Some(snapshot));
    assert_eq!(policy.actor.sizes(), vec![21, 16, 16, 7]);
}

#[test]
fn bench_reports_both_modes_with_ratio_100() {
    let mut cfg = RunConfig::default();
    cfg.bench.sim_seconds = 4.0;
    cfg.ddpg.hidden = vec![32, 32];
    cfg.ddpg.batch_size = 16;
    let report = bench(&cfg).unwrap();
    assert_eq!(report.update_ratio, 100.0);
    assert_eq!(report.rl_cpg.action_dim, 7);
    assert_eq!(report.joint_space.action_dim, 11);
    assert_eq!(report.rl_cpg.env_steps, 2);
    assert_eq!(report.joint_space.env_steps, 200);
    assert!(report.to_text().contains("joint"));
}

#[test]
fn seed_flag_changes_training() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY_TRAIN).unwrap();
    let mut csvs = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let r = snakenav(&["train", "--config", p(&cfg), "--seed", seed, "--single-thread", "--out", p(&out)]);
        assert_eq!(code(&r), 0);
        csvs.push(std::fs::read(out.join(REWARD_FILE)).unwrap());
    }
    assert_ne!(csvs[0], csvs[1]);
}
