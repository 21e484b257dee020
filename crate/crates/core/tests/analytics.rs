use std::f64::consts::{PI, TAU};

use bistable::analytics::{
    active_x_infidelity, ak_coherence, blind_coherent_bound, blind_x_infidelity, contrast, max_contrast,
    optimal_blind_frequency, p_err_static, simulate_coherence, tau_opt,
};
use bistable::numeric::golden_section_max;
use bistable::protocol::{Environment, ExecutionModel, Lab};
use bistable::rng::{SimRng, StreamSeeder};
use bistable::tls::stationary_distribution;
use bistable::{Mode, QubitParams, TelegraphParams};
use proptest::prelude::*;

const D: f64 = 374e3;

fn rng(label: &str) -> SimRng {
    StreamSeeder::new(31).stream(label, &[])
}

proptest! {
    #[test]
    fn tau_opt_is_the_contrast_argmax(log_dt2 in -2.0..4.0f64, alpha in 0.5..1.0f64) {
        let t2 = 10f64.powf(log_dt2) / D;
        let closed = tau_opt(D, t2).unwrap();
        let numeric = golden_section_max(|t| contrast(D, t, alpha, t2, 0.0), 0.0, 1.0 / D, 1e-18);
        prop_assert!((closed / numeric - 1.0).abs() < 1e-4, "{closed} vs {numeric}");
    }

    #[test]
    fn p_err_is_half_the_missing_contrast(log_dt2 in -2.0..4.0f64, alpha in 0.5..1.0f64) {
        let t2 = 10f64.powf(log_dt2) / D;
        let s = contrast(D, tau_opt(D, t2).unwrap(), alpha, t2, 0.0);
        prop_assert!((max_contrast(D, t2, alpha).unwrap() - s).abs() < 1e-12);
        prop_assert!((p_err_static(D, t2, alpha).unwrap() - (1.0 - s) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn midpoint_blind_error_is_the_small_splitting_bound(x in 1e-3..0.05f64) {
        let base = QubitParams::default();
        let delta = x * base.rabi_rate / TAU;
        let q = QubitParams { f_low: base.f_high - delta, ..base };
        let blind = blind_x_infidelity(q.midpoint_frequency(), (0.5, 0.5), &q).unwrap();
        let bound = blind_coherent_bound(&q);
        prop_assert!((blind.coherent / bound - 1.0).abs() < 0.01);
    }

    #[test]
    fn feedback_wins_iff_p_err_below_a_quarter(p in 0.0..0.5f64) {
        let q = QubitParams::default();
        let active = active_x_infidelity(p, &q).unwrap().coherent;
        let blind = blind_coherent_bound(&q);
        if (p - 0.25).abs() > 1e-12 {
            prop_assert_eq!(active < blind, p < 0.25);
        }
    }
}

#[test]
fn contrast_matches_propagated_and_sampled_syndromes() {
    let q = QubitParams::default();
    let exec = ExecutionModel::instantaneous();
    let n = 100_000;
    for tau in [0.3e-6, 0.9e-6, tau_opt(D, q.t2()).unwrap(), 2.1e-6] {
        let mut exact = [0.0; 2];
        let mut sampled = [0.0; 2];
        for (k, mode) in [Mode::High, Mode::Low].into_iter().enumerate() {
            let env = Environment::pinned(q, mode).with_exec(exec);
            let mut lab = Lab::new(&env, tau, rng(&format!("contrast-{tau}-{k}"))).unwrap();
            let mut ones = 0u32;
            for _ in 0..n {
                let shot = lab.ramsey_cycle_at(q.f_high, tau, 0.0).unwrap();
                exact[k] = shot.p_report_one;
                ones += u32::from(shot.m);
            }
            sampled[k] = f64::from(ones) / f64::from(n);
        }
        let s = contrast(q.delta_tls(), tau, q.alpha(), q.t2(), 0.0);
        // Relaxation toward the ground state moves both modes alike.
        assert!(((exact[0] - exact[1]).abs() - s).abs() < 1e-9, "τ={tau}");
        let sigma = (exact[0] * (1.0 - exact[0]) / n as f64 + exact[1] * (1.0 - exact[1]) / n as f64).sqrt();
        assert!(((sampled[0] - sampled[1]).abs() - s).abs() < 3.0 * sigma, "τ={tau}");
    }
}

#[test]
fn syndrome_error_rate_matches_static_formula() {
    let q = QubitParams::default();
    let exec = ExecutionModel::instantaneous();
    let probe = tau_opt(q.delta_tls(), q.t2()).unwrap();
    let n = 200_000;
    let mut errors = 0;
    for mode in [Mode::High, Mode::Low] {
        let env = Environment::pinned(q, mode).with_exec(exec);
        let mut lab = Lab::new(&env, probe, rng(&format!("perr-{mode:?}"))).unwrap();
        errors += (0..n).filter(|_| lab.syndrome_cycle().is_error()).count();
    }
    let p = errors as f64 / (2 * n) as f64;
    let expected = p_err_static(q.delta_tls(), q.t2(), q.alpha()).unwrap();
    let sigma = (expected * (1.0 - expected) / (2 * n) as f64).sqrt();
    assert!((p - expected).abs() < 3.0 * sigma, "{p} vs {expected}");
}

#[test]
fn blind_drive_on_unequal_populations() {
    // Quick mixing with long gaps between shots, so each shot sees an
    // independent stationary mode with P(L) = 0.3.
    let q = QubitParams::default().without_decoherence();
    let tls = TelegraphParams::new(300.0, 700.0).unwrap();
    let pops = stationary_distribution(&tls).unwrap();
    assert!((pops.0 - 0.3).abs() < 1e-12);
    let f_blind = optimal_blind_frequency(pops, &q).unwrap();
    let mut lab = Lab::new(&Environment::new(q, tls, None), 1e-6, rng("blind")).unwrap();
    let n = 100_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let truth = q.frequency(lab.mode());
        let miss = lab.xgate_cycle(truth).p_excited - lab.xgate_cycle(f_blind).p_excited;
        sum += miss;
        sum_sq += miss * miss;
        lab.idle(0.02);
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    let expected = blind_x_infidelity(f_blind, pops, &q).unwrap().coherent;
    assert!((mean - expected).abs() < 3.0 * se, "{mean} ± {se} vs {expected}");
}

#[test]
fn random_syndrome_active_error_matches_closed_form() {
    // Small splitting keeps the closed form's small-angle expansion exact to
    // well below the statistical error.
    let base = QubitParams::default().without_decoherence();
    let q = QubitParams {
        f_low: base.f_high - 50e3,
        ..base
    };
    let mut lab = Lab::new(&Environment::pinned(q, Mode::High), 1e-6, rng("random")).unwrap();
    lab.set_forced_random_syndrome(true);
    let n = 200_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        lab.syndrome_cycle();
        let miss = 1.0 - lab.xgate_cycle(lab.controller().f_c).p_excited;
        sum += miss;
        sum_sq += miss * miss;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    let expected = active_x_infidelity(0.5, &q).unwrap().coherent;
    assert!((mean - expected).abs() < 3.0 * se, "{mean} ± {se} vs {expected}");
}

#[test]
fn anderson_kubo_against_trajectories() {
    let n = 20_000;
    let times: Vec<f64> = (0..=24).map(|k| k as f64 * 0.125 / D).collect();
    for gamma in [0.4 * PI * D, 2.0 * PI * D, 6.0 * PI * D] {
        let mc = simulate_coherence(&times, D, gamma, n, &mut rng(&format!("ak-{gamma}"))).unwrap();
        for (&t, z) in times.iter().zip(&mc) {
            let c = ak_coherence(t, D, gamma).unwrap().c_eq;
            // Each trajectory contributes a value of modulus ½.
            let bound = 3.0 * 0.5 / (n as f64).sqrt();
            assert!((z.re - c).abs() < bound, "γ={gamma} t={t}: {} vs {c}", z.re);
        }
    }
}
