use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snakenav_core::dynamics::{ConfigState, RobotModel, GRAVITY};
use snakenav_core::rl::*;
use snakenav_core::sim::SimSettings;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn actor_net(seed: u64) -> Mlp {
    Mlp::new(&[21, 256, 256, 7], Activation::Relu, Activation::Tanh, 0.5, &mut rng(seed))
}

fn critic_net(seed: u64) -> Mlp {
    Mlp::new(&[28, 256, 256, 1], Activation::Relu, Activation::Identity, 0.5, &mut rng(seed))
}

fn random_obs(r: &mut ChaCha8Rng) -> Observation {
    let mut axis = Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    axis /= axis.norm();
    Observation {
        joint_positions: (0..11).map(|_| r.random_range(-1.0..1.0)).collect(),
        imu_accel: [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), GRAVITY + r.random_range(-2.0..2.0)],
        displacement: [r.random_range(-4.0..4.0), r.random_range(-4.0..4.0), 0.0],
        relative_rotation: [axis.x, axis.y, axis.z, r.random_range(0.0..3.0)],
    }
}

fn random_action(r: &mut ChaCha8Rng) -> Action {
    let u: Vec<f64> = (0..ACTION_DIM).map(|_| r.random_range(-0.95..0.95)).collect();
    Action::from_unit(&u)
}

/// `L = Σ c ⊙ net(x)` over a batch.
fn weighted_output(net: &Mlp, x: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    net.forward(x).unwrap().component_mul(c).sum()
}

fn param(net: &mut Mlp, layer: usize, idx: usize) -> &mut f64 {
    let l = &mut net.layers[layer];
    let nw = l.weight.len();
    if idx < nw {
        &mut l.weight.as_mut_slice()[idx]
    } else {
        &mut l.bias.as_mut_slice()[idx - nw]
    }
}

fn grad_entry(g: &Gradients, layer: usize, idx: usize) -> f64 {
    let nw = g.weight[layer].len();
    if idx < nw {
        g.weight[layer].as_slice()[idx]
    } else {
        g.bias[layer].as_slice()[idx - nw]
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Analytic parameter and input gradients against central differences on
/// a random subset of coordinates.
fn check_network_gradients(mut net: Mlp, seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = DMatrix::from_fn(3, net.input_dim(), |_, _| r.random_range(-1.5..1.5));
    let c = DMatrix::from_fn(3, net.output_dim(), |_, _| r.random_range(-1.0..1.0));
    let cache = net.forward_cached(&x).unwrap();
    let (g, gx) = net.backward(&cache, &c);
    let h = 1e-6;
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for _ in 0..40 {
        let layer = r.random_range(0..net.layers.len());
        let n = net.layers[layer].weight.len() + net.layers[layer].bias.len();
        let idx = r.random_range(0..n);
        let orig = *param(&mut net, layer, idx);
        *param(&mut net, layer, idx) = orig + h;
        let up = weighted_output(&net, &x, &c);
        *param(&mut net, layer, idx) = orig - h;
        let down = weighted_output(&net, &x, &c);
        *param(&mut net, layer, idx) = orig;
        analytic.push(grad_entry(&g, layer, idx));
        numeric.push((up - down) / (2.0 * h));
    }
    for _ in 0..10 {
        let (i, j) = (r.random_range(0..x.nrows()), r.random_range(0..x.ncols()));
        let mut xp = x.clone();
        xp[(i, j)] += h;
        let mut xm = x.clone();
        xm[(i, j)] -= h;
        analytic.push(gx[(i, j)]);
        numeric.push((weighted_output(&net, &xp, &c) - weighted_output(&net, &xm, &c)) / (2.0 * h));
    }
    rel_err(&analytic, &numeric)
}

#[test]
fn network_gradients_match_central_differences() {
    let mut worst: f64 = 0.0;
    for point in 0..50 {
        worst = worst.max(check_network_gradients(actor_net(point), 1000 + point));
        worst = worst.max(check_network_gradients(critic_net(point), 2000 + point));
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn critic_action_gradient_matches_central_differences() {
    let mut r = rng(3);
    let critic = critic_net(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let obs = random_obs(&mut r);
        let act = random_action(&mut r);
        let g = critic_action_gradient(&critic, &obs, &act).unwrap();
        let widths = Action::range_widths();
        let numeric: Vec<f64> = (0..ACTION_DIM)
            .map(|i| {
                let h = 1e-7 * widths[i];
                let mut up = act.to_array();
                up[i] += h;
                let mut down = act.to_array();
                down[i] -= h;
                let qu = critic_forward(&critic, &obs, &Action::from_slice(&up)).unwrap();
                let qd = critic_forward(&critic, &obs, &Action::from_slice(&down)).unwrap();
                (qu - qd) / (2.0 * h)
            })
            .collect();
        worst = worst.max(rel_err(&g, &numeric));
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn actor_objective_gradient_matches_central_differences() {
    // d/dθ mean_s Q(s, π_θ(s)) composed from the two backward passes.
    let mut r = rng(4);
    let critic = critic_net(5);
    let mut worst: f64 = 0.0;
    for point in 0..50 {
        let mut actor = actor_net(100 + point);
        let s = DMatrix::from_fn(4, 21, |_, _| r.random_range(-1.0..1.0));
        let objective = |a: &Mlp| -> f64 {
            let u = a.forward(&s).unwrap();
            let mut x = DMatrix::zeros(4, 28);
            x.columns_mut(0, 21).copy_from(&s);
            x.columns_mut(21, 7).copy_from(&u);
            critic.forward(&x).unwrap().mean()
        };
        let ac = actor.forward_cached(&s).unwrap();
        let mut x = DMatrix::zeros(4, 28);
        x.columns_mut(0, 21).copy_from(&s);
        x.columns_mut(21, 7).copy_from(ac.output());
        let cc = critic.forward_cached(&x).unwrap();
        let (_, gx) = critic.backward(&cc, &DMatrix::from_element(4, 1, 0.25));
        let (ga, _) = actor.backward(&ac, &gx.columns(21, 7).into_owned());
        let h = 1e-6;
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for _ in 0..20 {
            let layer = r.random_range(0..actor.layers.len());
            let n = actor.layers[layer].weight.len() + actor.layers[layer].bias.len();
            let idx = r.random_range(0..n);
            let orig = *param(&mut actor, layer, idx);
            *param(&mut actor, layer, idx) = orig + h;
            let up = objective(&actor);
            *param(&mut actor, layer, idx) = orig - h;
            let down = objective(&actor);
            *param(&mut actor, layer, idx) = orig;
            analytic.push(grad_entry(&ga, layer, idx));
            numeric.push((up - down) / (2.0 * h));
        }
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn batch_evaluation_equals_per_sample() {
    let mut r = rng(6);
    let critic = critic_net(6);
    let x = DMatrix::from_fn(16, 28, |_, _| r.random_range(-2.0..2.0));
    let batch = critic.forward(&x).unwrap();
    for i in 0..16 {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let one = critic.forward_one(&row).unwrap()[0];
        assert!((batch[(i, 0)] - one).abs() <= 1e-12);
    }
}

#[test]
fn zero_output_layers_give_midpoint_and_zero_q() {
    let mut r = rng(7);
    let mut actor = actor_net(7);
    let mut critic = critic_net(7);
    actor.zero_output_layer();
    critic.zero_output_layer();
    let obs = random_obs(&mut r);
    assert_eq!(actor_forward(&actor, &obs).unwrap(), Action::midpoint());
    assert_eq!(critic_forward(&critic, &obs, &random_action(&mut r)).unwrap(), 0.0);
}

#[test]
fn actor_output_is_deterministic() {
    let mut r = rng(8);
    let obs = random_obs(&mut r);
    assert_eq!(actor_forward(&actor_net(9), &obs).unwrap(), actor_forward(&actor_net(9), &obs).unwrap());
}

fn small_agent(tau: f64, gamma: f64, seed: u64) -> Agent {
    let cfg = DdpgConfig {
        hidden: vec![32, 32],
        tau,
        gamma,
        ..DdpgConfig::default()
    };
    Agent::new(21, cfg, &mut rng(seed)).unwrap()
}

fn transition(r: &mut ChaCha8Rng, reward: f64) -> Transition {
    Transition {
        obs: random_obs(r).to_vec(),
        action: random_action(r),
        reward,
        next_obs: random_obs(r).to_vec(),
        done: false,
    }
}

#[test]
fn soft_update_contracts_geometrically() {
    let mut agent = small_agent(0.05, 0.99, 10);
    let mut r = rng(10);
    for layer in &mut agent.actor_target.layers {
        layer.weight.apply(|w| *w += r.random_range(-1.0..1.0));
    }
    for layer in &mut agent.critic_target.layers {
        layer.bias.apply(|b| *b += r.random_range(-1.0..1.0));
    }
    let a0 = agent.actor_target.param_distance(&agent.actor);
    let c0 = agent.critic_target.param_distance(&agent.critic);
    for k in 1..=60 {
        agent.soft_update(0.05);
        let factor = 0.95f64.powi(k);
        assert!((agent.actor_target.param_distance(&agent.actor) - a0 * factor).abs() < 1e-10);
        assert!((agent.critic_target.param_distance(&agent.critic) - c0 * factor).abs() < 1e-10);
    }
}

#[test]
fn unit_tau_copies_online_networks() {
    let mut agent = small_agent(1.0, 0.99, 11);
    let mut r = rng(11);
    let batch: Vec<Transition> = (0..8).map(|_| transition(&mut r, 1.0)).collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    agent.update(&refs).unwrap();
    assert_eq!(agent.actor_target, agent.actor);
    assert_eq!(agent.critic_target, agent.critic);
}

#[test]
fn zero_discount_regresses_to_reward() {
    let mut agent = small_agent(0.005, 0.0, 12);
    let mut r = rng(12);
    let t = transition(&mut r, 1.7);
    let obs = Observation {
        joint_positions: t.obs[..11].to_vec(),
        imu_accel: [t.obs[11], t.obs[12], t.obs[13]],
        displacement: [t.obs[14], t.obs[15], t.obs[16]],
        relative_rotation: [t.obs[17], t.obs[18], t.obs[19], t.obs[20]],
    };
    let mut first = None;
    for _ in 0..3000 {
        let stats = agent.update(&[&t]).unwrap();
        first.get_or_insert(stats.critic_loss);
    }
    let q = critic_forward(&agent.critic, &obs, &t.action).unwrap();
    assert!((q - 1.7).abs() < 1e-3, "Q = {q}");
    assert!(first.unwrap() > 1.0);
}

#[test]
fn zero_discount_target_is_reward() {
    // With γ = 0 the bootstrap term drops: the first loss is (Q − r)².
    let mut agent = small_agent(0.005, 0.0, 13);
    let mut r = rng(13);
    let t = transition(&mut r, -0.4);
    let x: Vec<f64> = t.obs.iter().copied().chain(t.action.to_unit()).collect();
    let q = agent.critic.forward_one(&x).unwrap()[0];
    let stats = agent.update(&[&t]).unwrap();
    assert!((stats.critic_loss - (q + 0.4).powi(2)).abs() < 1e-12);
}

#[test]
fn updates_keep_parameters_finite() {
    let mut agent = small_agent(0.005, 0.99, 14);
    let mut r = rng(14);
    let batch: Vec<Transition> = (0..64)
        .map(|_| {
            let reward = r.random_range(-5.0..5.0);
            transition(&mut r, reward)
        })
        .collect();
    for _ in 0..50 {
        let refs: Vec<&Transition> = batch.iter().collect();
        agent.update(&refs).unwrap();
        assert!(agent.actor.is_finite() && agent.critic.is_finite());
    }
    assert_eq!(agent.updates, 50);
}

#[test]
fn non_finite_reward_aborts_update() {
    let mut agent = small_agent(0.005, 0.99, 15);
    let mut r = rng(15);
    let t = transition(&mut r, f64::NAN);
    assert!(agent.update(&[&t]).is_err());
}

#[test]
fn replay_sampling_is_uniform() {
    let n = 50;
    let mut buffer = ReplayBuffer::new(n, 16);
    let mut r = rng(16);
    for i in 0..n {
        buffer.push(transition(&mut r, i as f64));
    }
    let mut counts = vec![0usize; n];
    let draws = 100_000;
    let batch = 10;
    for _ in 0..draws / batch {
        for i in buffer.sample_indices(batch) {
            counts[i] += 1;
        }
    }
    let expected = draws as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // Upper 1% point of χ² with 49 degrees of freedom.
    assert!(chi2 < 74.92, "chi2 = {chi2}");
}

#[test]
fn replay_size_never_exceeds_capacity() {
    let mut buffer = ReplayBuffer::new(7, 17);
    let mut r = rng(17);
    for i in 0..30 {
        buffer.push(transition(&mut r, i as f64));
        assert!(buffer.len() <= 7);
    }
}

#[test]
fn exploration_noise_std_matches_sigma() {
    let mut r = rng(18);
    let a = Action::midpoint();
    let widths = Action::range_widths();
    let sigma: [f64; ACTION_DIM] = std::array::from_fn(|i| 0.02 * widths[i]);
    let n = 100_000;
    let mut sum = [0.0; ACTION_DIM];
    let mut sq = [0.0; ACTION_DIM];
    for _ in 0..n {
        let b = exploration_noise(&a, &sigma, &mut r).to_array();
        for i in 0..ACTION_DIM {
            sum[i] += b[i];
            sq[i] += b[i] * b[i];
        }
    }
    for i in 0..ACTION_DIM {
        let mean = sum[i] / n as f64;
        let std = (sq[i] / n as f64 - mean * mean).sqrt();
        assert!((std / sigma[i] - 1.0).abs() < 0.05, "dim {i}: {std} vs {}", sigma[i]);
    }
}

#[test]
fn observation_of_resting_robot() {
    let model = RobotModel::cobra();
    let state = ConfigState::resting(&model, 0.0, 0.0, 0.0);
    let head = state.head_position(&model);
    let coincident = WaypointPose {
        position: head.into(),
        yaw: 0.0,
    };
    let obs = build_observation(&state, &model, &Vector3::zeros(), &coincident);
    assert_eq!(obs.dim(), 21);
    assert_eq!(obs.displacement, [0.0; 3]);
    assert_eq!(obs.relative_rotation[3], 0.0);
    assert!((obs.imu_accel[2] - GRAVITY).abs() < 1e-12);
    assert!(obs.imu_accel[0].abs() < 1e-12 && obs.imu_accel[1].abs() < 1e-12);

    let ahead = WaypointPose {
        position: [head.x + 2.0, head.y, head.z],
        yaw: 0.0,
    };
    let obs = build_observation(&state, &model, &Vector3::zeros(), &ahead);
    assert!((obs.displacement[0] - 2.0).abs() < 1e-12);
    assert!(obs.displacement[1].abs() < 1e-12 && obs.displacement[2].abs() < 1e-12);
    assert_eq!(obs.relative_rotation[3], 0.0);
}

#[test]
fn reward_examples() {
    let a = Action::midpoint();
    let w = RewardWeights::default();
    assert!((reward(0.0, 0.0, &a, &a, &w) - 10.0).abs() < 1e-12);
    assert!((reward(0.9, 1.0, &a, &a, &w) - 1.1).abs() < 1e-12);
}

#[test]
fn reward_terms_are_complementary() {
    let a = Action::midpoint();
    let w = RewardWeights {
        w1: 1.0,
        w2: 0.0,
        w3: 0.0,
    };
    assert!(reward(100.0, 100.0, &a, &a, &w) < 0.01);
    let near = reward(0.01, 0.01, &a, &a, &w);
    assert!((near - 1.0 / 0.11).abs() < 1e-12);
    // Progress per decision is bounded by the distance the head can cover,
    // about a metre, far below the near-field proximity reward.
    let progress_only = RewardWeights {
        w1: 0.0,
        w2: 1.0,
        w3: 0.0,
    };
    assert!(reward(0.01, 1.0, &a, &a, &progress_only) < near / 9.0);
    let mut prev = f64::INFINITY;
    for k in 0..1000 {
        let r1 = proximity(k as f64 * 0.01);
        assert!(r1 < prev);
        prev = r1;
    }
}

proptest! {
    #[test]
    fn actions_always_within_ranges(seed in 0u64..1000, scale in 0.0f64..100.0) {
        let mut r = rng(seed);
        let obs = random_obs(&mut r);
        let net = Mlp::new(&[21, 8, 7], Activation::Relu, Activation::Tanh, scale, &mut r);
        prop_assert!(actor_forward(&net, &obs).unwrap().is_within_ranges());
        let sigma = [scale; ACTION_DIM];
        prop_assert!(exploration_noise(&random_action(&mut r), &sigma, &mut r).is_within_ranges());
    }

    #[test]
    fn progress_term_is_translation_invariant(d in 0.0f64..50.0, step in -1.0f64..1.0, shift in 0.0f64..50.0) {
        let a = Action::midpoint();
        let w = RewardWeights { w1: 0.0, w2: 1.0, w3: 0.0 };
        let d_t = (d - step).max(0.0);
        let r = reward(d_t, d, &a, &a, &w);
        let shifted = reward(d_t + shift, d + shift, &a, &a, &w);
        prop_assert!((r - shifted).abs() < 1e-9);
        prop_assert!(r.abs() <= step.abs() + 1e-12);
    }

    #[test]
    fn observation_is_21_dimensional_with_unit_axis(
        x in -5.0f64..5.0, y in -5.0f64..5.0, yaw in -3.0f64..3.0, wyaw in -3.0f64..3.0,
    ) {
        let model = RobotModel::cobra();
        let state = ConfigState::resting(&model, x, y, yaw);
        let wp = WaypointPose { position: [1.0, -2.0, 0.0], yaw: wyaw };
        let obs = build_observation(&state, &model, &Vector3::new(0.3, -0.2, 0.1), &wp);
        prop_assert_eq!(obs.to_vec().len(), 21);
        let r = obs.relative_rotation;
        prop_assert!(((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn episode_has_80_decisions_of_100_ticks() {
    let mut env = LocalNavEnv::new(SimSettings::default(), EnvConfig::default(), 19).unwrap();
    assert_eq!(env.decisions_per_episode(), 80);
    let step = env.step(&Action::midpoint()).unwrap();
    assert_eq!(step.control_ticks, 100);
    assert_eq!(env.sim.control_ticks, 100);
    assert_eq!(env.sim.physics_steps, 2000);
    assert!(!step.done);
}

#[test]
fn training_is_deterministic_for_a_seed() {
    let env = EnvConfig {
        episode_secs: 4.0,
        arena_size: 3.0,
        ..EnvConfig::default()
    };
    let ddpg = DdpgConfig {
        hidden: vec![16, 16],
        batch_size: 2,
        ..DdpgConfig::default()
    };
    let cfg = TrainConfig {
        episodes: 2,
        seed: 20,
        update_after: 2,
        ..TrainConfig::default()
    };
    let run = || train(&SimSettings::default(), &env, &ddpg, &cfg, |_, _| {}).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.log, b.log);
    assert_eq!(a.agent.actor, b.agent.actor);
    assert_eq!(a.log.len(), 2);
    assert!(a.log.iter().all(|l| l.steps == 2));
    assert_eq!(a.agent.updates, 3);
}

#[test]
fn reward_csv_has_documented_header() {
    let log = vec![EpisodeLog {
        episode: 0,
        ret: 1.5,
        steps: 80,
        seed: 7,
    }];
    let mut out = Vec::new();
    write_reward_csv(&mut out, &log).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "episode,return,steps,seed\n0,1.5,80,7\n");
}

#[test]
fn checkpoint_round_trip() {
    let ck = Checkpoint {
        metadata: serde_json::json!({"kind": "test"}),
        networks: vec![("actor".into(), actor_net(21)), ("critic".into(), critic_net(21))],
    };
    let mut bytes = Vec::new();
    ck.write_to(&mut bytes).unwrap();
    let back = Checkpoint::read_from(&mut bytes.as_slice()).unwrap();
    assert_eq!(back.network("actor").unwrap(), &actor_net(21));
    assert_eq!(back.network("critic").unwrap(), &critic_net(21));
    assert_eq!(back.metadata, ck.metadata);
    assert!(Checkpoint::read_from(&mut &bytes[..bytes.len() / 2]).is_err());
}
