use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snakenav_core::cpg::{coupling_matrices, cpg_step, reset, CpgConfig, CpgParams, Oscillator};

const DT: f64 = 0.02;

fn params(amplitude: f64, omega: f64, theta: f64, delta: f64) -> CpgParams {
    CpgParams {
        amplitude,
        omega,
        theta,
        delta,
    }
}

/// Continuous critically damped approach from rest.
fn closed_form(r_target: f64, a: f64, t: f64) -> f64 {
    r_target * (1.0 - (1.0 + a * t / 2.0) * (-a * t / 2.0).exp())
}

#[test]
fn amplitude_follows_discrete_transition_matrix() {
    let a = 10.0;
    let cfg = CpgConfig::uniform(3, a, 5.0);
    let mut osc = Oscillator::new(cfg).unwrap();
    let p = params(1.0, 0.05, 0.3, 0.0);
    // Error dynamics e = r - R under explicit Euler: [e, ė]' = M [e, ė].
    let m = Matrix2::new(1.0, DT, -a * a / 4.0 * DT, 1.0 - a * DT);
    for n in 1..=150u32 {
        osc.step(&p, DT);
        let e = m.pow(n) * Vector2::new(-1.0, 0.0);
        for i in 0..3 {
            assert!((osc.state.r[i] - 1.0 - e[0]).abs() < 1e-12, "step {n}");
        }
    }
}

#[test]
fn fine_step_converges_to_closed_form() {
    let a = 10.0;
    let dt = 1e-5;
    let mut osc = Oscillator::new(CpgConfig::uniform(2, a, 5.0)).unwrap();
    let p = params(1.2, 0.0, 0.0, 0.0);
    let mut worst: f64 = 0.0;
    for n in 1..=100_000 {
        osc.step(&p, dt);
        worst = worst.max((osc.state.r[0] - closed_form(1.2, a, n as f64 * dt)).abs());
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn amplitude_settles_within_two_seconds() {
    let mut osc = Oscillator::new(CpgConfig::uniform(6, 10.0, 5.0)).unwrap();
    let p = params(1.0, 0.1, 1.0, 0.0);
    for _ in 0..100 {
        osc.step(&p, DT);
    }
    for r in osc.state.r.iter() {
        assert!((r - 1.0).abs() < 1e-3, "{r}");
    }
}

#[test]
fn amplitude_error_is_monotone_from_rest() {
    let mut osc = Oscillator::new(CpgConfig::uniform(2, 10.0, 5.0)).unwrap();
    let p = params(0.8, 0.1, 0.0, 0.0);
    let mut prev = f64::INFINITY;
    for _ in 0..500 {
        osc.step(&p, DT);
        let e = (osc.state.r[0] - 0.8).abs();
        assert!(e <= prev);
        prev = e;
    }
}

#[test]
fn two_channel_phase_lock_is_theta_over_mu() {
    for (mu, theta) in [(1.0, std::f64::consts::FRAC_PI_2), (5.0, 2.0), (2.5, -1.0)] {
        let cfg = CpgConfig::uniform(2, 10.0, mu);
        let mut osc = Oscillator::new(cfg).unwrap();
        let p = params(1.0, 0.07, theta, 0.0);
        for _ in 0..2000 {
            osc.step(&p, DT);
        }
        let d = osc.state.phi[0] - osc.state.phi[1];
        assert!((d - theta / mu).abs() < 1e-9, "mu {mu}: {d}");
    }
}

/// Steady phase differences from `A φ + B θ = c 1`, `Σ φ = 0`.
fn locked_differences(a: &DMatrix<f64>, b: &DMatrix<f64>, theta: f64) -> DVector<f64> {
    let k = a.nrows();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    m.view_mut((0, 0), (k, k)).copy_from(a);
    for i in 0..k {
        m[(i, k)] = -1.0;
        m[(k, i)] = 1.0;
    }
    let rhs_top = -(b * DVector::from_element(k - 1, theta));
    let mut rhs = DVector::zeros(k + 1);
    rhs.rows_mut(0, k).copy_from(&rhs_top);
    let sol = m.lu().solve(&rhs).expect("bordered Laplacian is invertible");
    DVector::from_fn(k - 1, |i, _| sol[i] - sol[i + 1])
}

#[test]
fn phase_lock_matches_linear_solve_for_any_channel_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 2..=8 {
        let mu: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..6.0)).collect();
        let cfg = CpgConfig {
            a: 10.0,
            mu,
            omega_scale: 1.0,
        };
        let (a, b) = coupling_matrices(&cfg).unwrap();
        let theta = rng.random_range(-3.0..3.0);
        let want = locked_differences(&a, &b, theta);
        let mut osc = Oscillator::new(cfg).unwrap();
        let p = params(1.0, 0.1, theta, 0.0);
        for _ in 0..5000 {
            osc.step(&p, DT);
        }
        for i in 0..k - 1 {
            let got = osc.state.phi[i] - osc.state.phi[i + 1];
            assert!((got - want[i]).abs() < 1e-8, "k {k} slot {i}: {got} vs {}", want[i]);
        }
    }
}

#[test]
fn output_bound_over_a_million_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = CpgConfig::uniform(6, 10.0, 5.0);
    let mut state = reset(&cfg, 0.0);
    let mut p = params(1.0, 0.1, 0.5, 0.05);
    for n in 0..1_000_000 {
        if n % 97 == 0 {
            p = params(
                rng.random_range(0.0..=1.5),
                rng.random_range(-0.1..=0.1),
                rng.random_range(-3.14..=3.14),
                rng.random_range(-0.1..=0.1),
            );
        }
        let (next, x) = cpg_step(&state, &p, &cfg, DT);
        for i in 0..6 {
            assert!(x[i].abs() <= next.r[i].abs() + p.delta.abs() + 1e-12);
        }
        state = next;
    }
    assert!(state.is_finite());
}

/// Magnitude of the discrete-time Fourier transform at frequency `f`, Hz.
fn dtft(samples: &[f64], dt: f64, f: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f * dt;
    let (re, im) = samples.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, x)| {
        (re + x * (w * n as f64).cos(), im - x * (w * n as f64).sin())
    });
    re.hypot(im)
}

#[test]
fn waveform_period_matches_effective_frequency() {
    for (omega, scale) in [(0.1, 40.0), (-0.06, 50.0), (0.08, 30.0)] {
        let cfg = CpgConfig {
            omega_scale: scale,
            ..CpgConfig::uniform(5, 10.0, 5.0)
        };
        let mut osc = Oscillator::new(cfg).unwrap();
        let p = params(0.7, omega, 1.0, 0.0);
        let samples: Vec<f64> = (0..500).map(|_| osc.step(&p, DT)[2]).collect();
        let steady = &samples[100..];
        let f_eff = (omega * scale).abs() / (2.0 * std::f64::consts::PI);
        let peak = (1..2000)
            .map(|i| i as f64 * 0.002)
            .max_by(|a, b| dtft(steady, DT, *a).total_cmp(&dtft(steady, DT, *b)))
            .unwrap();
        assert!((peak - f_eff).abs() < 0.01 * f_eff + 0.002, "{peak} vs {f_eff}");
    }
}

#[test]
fn parameter_steps_keep_the_output_continuous() {
    let cfg = CpgConfig {
        omega_scale: 50.0,
        ..CpgConfig::uniform(6, 10.0, 5.0)
    };
    let mut osc = Oscillator::new(cfg).unwrap();
    let mut p = params(0.4, 0.1, 1.0, 0.0);
    let mut x_prev = osc.state.output(p.delta);
    for n in 0..600 {
        if n == 200 {
            p.amplitude = 1.5;
        }
        if n == 400 {
            p.theta = -2.5;
        }
        let before = osc.state.clone();
        let x = osc.step(&p, DT);
        let phi_rate = (&osc.state.phi - &before.phi) / DT;
        for i in 0..6 {
            let slew = DT * (before.rdot[i].abs() + osc.state.r[i].abs() * phi_rate[i].abs()) + 1e-12;
            assert!((x[i] - x_prev[i]).abs() <= slew, "step {n} channel {i}");
        }
        x_prev = x;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn states_stay_finite_and_bounded(
        r in 0.0f64..=1.5, omega in -0.1f64..=0.1, theta in -3.14f64..=3.14, delta in -0.1f64..=0.1,
        k in 2usize..8,
    ) {
        let cfg = CpgConfig::uniform(k, 10.0, 5.0);
        let mut osc = Oscillator::new(cfg).unwrap();
        let p = params(r, omega, theta, delta);
        for _ in 0..1000 {
            let x = osc.step(&p, DT);
            prop_assert!(osc.state.is_finite());
            prop_assert!(osc.state.r.iter().all(|ri| *ri >= -1e-12 && *ri <= r + 1e-12));
            prop_assert!(x.iter().all(|xi| xi.abs() <= r + delta.abs() + 1e-12));
        }
    }
}
