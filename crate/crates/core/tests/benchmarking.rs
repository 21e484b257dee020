use bistable::clifford::CliffordGroup;
use bistable::fit::fit_exponential_binomial;
use bistable::protocol::{Environment, ExecutionModel};
use bistable::rb::{run_rb_interleaved, RbConfig};
use bistable::rng::StreamSeeder;
use bistable::{Mode, QubitParams};
use rand::Rng;

fn depths(max_exp: u32) -> Vec<f64> {
    RbConfig::power_of_two_depths(max_exp).iter().map(|&d| d as f64).collect()
}

#[test]
fn synthetic_binomial_data_recovers_decay() {
    // 100 sequences × 1 shot per depth; the true p falls inside 3 standard
    // errors in nearly every replicate.
    let x = depths(11);
    let (a, p, b) = (0.5, 0.998f64, 0.5);
    let mut rng = StreamSeeder::new(11).stream("synthetic", &[]);
    let (trials, mut covered, mut failed) = (60, 0, 0);
    for _ in 0..trials {
        let surv: Vec<f64> = x
            .iter()
            .map(|&l| {
                let s = a * p.powf(l) + b;
                (0..100).filter(|_| rng.random::<f64>() < s).count() as f64 / 100.0
            })
            .collect();
        match fit_exponential_binomial(&x, &surv, &vec![100.0; x.len()], 1.0) {
            Ok(f) => covered += usize::from((f.decay - p).abs() < 3.0 * f.decay_se),
            Err(_) => failed += 1,
        }
    }
    assert!(failed <= 2, "{failed} fits failed");
    assert!(covered >= trials * 9 / 10, "{covered}/{trials}");
}

#[test]
fn noiseless_survival_is_the_readout_floor() {
    let eps01 = 0.05;
    let q = QubitParams {
        readout_eps_0to1: eps01,
        readout_eps_1to0: 0.02,
        ..QubitParams::default().noiseless()
    };
    let env = Environment::pinned(q, Mode::High);
    let cfg = RbConfig {
        depths: RbConfig::power_of_two_depths(6),
        n_sequences: 50,
        shots_per_sequence: 20,
        windows: 1,
        window_dead_time: 0.0,
        depolarizing: 0.0,
    };
    let mut rng = StreamSeeder::new(3).stream("floor", &[]);
    let res = run_rb_interleaved(&env, &cfg, 0.5 / q.delta_tls(), &mut rng).unwrap();
    let w = &res.windows[0];
    let n = 1000.0;
    let sigma = (eps01 * (1.0 - eps01) / n).sqrt();
    for arm in [&w.no_feedback, &w.feedback] {
        for &s in &arm.survival {
            assert!((s - (1.0 - eps01)).abs() < 4.0 * sigma, "{s}");
        }
    }
}

#[test]
fn all_noise_off_gives_zero_infidelity() {
    let q = QubitParams::default().noiseless();
    for exec in [ExecutionModel::default(), ExecutionModel::instantaneous()] {
        let env = Environment::pinned(q, Mode::High).with_exec(exec);
        let cfg = RbConfig {
            depths: RbConfig::power_of_two_depths(8),
            n_sequences: 20,
            windows: 1,
            window_dead_time: 0.0,
            ..RbConfig::default()
        };
        let mut rng = StreamSeeder::new(4).stream("clean", &[]);
        let res = run_rb_interleaved(&env, &cfg, 0.5 / q.delta_tls(), &mut rng).unwrap();
        for arm in [&res.windows[0].no_feedback, &res.windows[0].feedback] {
            let f = arm.fit.expect("fit");
            assert_eq!(f.r, 0.0);
        }
    }
}

#[test]
fn injected_depolarizing_error_is_recovered() {
    // Per-Clifford depolarizing λ contracts the Bloch vector by 1 − λ, so
    // p = 1 − λ and r = λ/2.
    let lambda = 0.01;
    let q = QubitParams::default().noiseless();
    let env = Environment::pinned(q, Mode::High).with_exec(ExecutionModel::instantaneous());
    let cfg = RbConfig {
        depths: RbConfig::power_of_two_depths(8),
        n_sequences: 100,
        shots_per_sequence: 5,
        windows: 1,
        window_dead_time: 0.0,
        depolarizing: lambda,
    };
    let mut rng = StreamSeeder::new(5).stream("depol", &[]);
    let res = run_rb_interleaved(&env, &cfg, 0.5 / q.delta_tls(), &mut rng).unwrap();
    for arm in [&res.windows[0].no_feedback, &res.windows[0].feedback] {
        let f = arm.fit.expect("fit");
        assert!((f.r - lambda / 2.0).abs() < 3.0 * f.r_se, "r = {} ± {}", f.r, f.r_se);
    }
}

#[test]
fn wrong_frame_costs_fidelity() {
    // Pinned in L: the fixed H frame detunes every pulse by Δ, the feedback
    // arm finds the right frame almost every time.
    let q = QubitParams::default();
    let env = Environment::pinned(q, Mode::Low);
    let cfg = RbConfig {
        depths: RbConfig::power_of_two_depths(11),
        n_sequences: 100,
        shots_per_sequence: 4,
        windows: 1,
        window_dead_time: 0.0,
        depolarizing: 0.0,
    };
    let mut rng = StreamSeeder::new(6).stream("wrong-frame", &[]);
    let res = run_rb_interleaved(&env, &cfg, 0.5 / q.delta_tls(), &mut rng).unwrap();
    let w = &res.windows[0];
    let (a, b) = (w.no_feedback.fit.expect("fit"), w.feedback.fit.expect("fit"));
    assert!(a.r_native > 1.5e-3 && a.r_native < 4e-3, "{}", a.r_native);
    assert!(b.r_native < 1e-3, "{}", b.r_native);
    assert!(w.low_fraction == 1.0);
    assert!((res.gates_per_clifford - CliffordGroup::shared().gates_per_clifford()).abs() < 1e-15);
}

#[test]
fn same_seed_same_result() {
    let q = QubitParams::default();
    let env = Environment::new(q, bistable::TelegraphParams::with_mean_dwell(0.5).unwrap(), None);
    let cfg = RbConfig {
        depths: vec![1, 4, 16, 64],
        n_sequences: 10,
        windows: 2,
        window_dead_time: 0.1,
        ..RbConfig::default()
    };
    let run = || run_rb_interleaved(&env, &cfg, 1.3e-6, &mut StreamSeeder::new(9).stream("det", &[])).unwrap();
    assert_eq!(run(), run());
}
