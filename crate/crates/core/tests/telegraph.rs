use bistable::rng::{SimRng, StreamSeeder};
use bistable::tls::{evolve, flip_probability, stationary_distribution, Telegraph};
use bistable::{Mode, TelegraphParams, TlsState};
use proptest::prelude::*;
use rand_distr::{Distribution, Exp1};

fn rng(label: &str) -> SimRng {
    StreamSeeder::new(20240611).stream(label, &[])
}

fn binomial_sigma(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

#[test]
fn long_run_occupancy_matches_stationary_law() {
    let params = TelegraphParams::new(3.0, 1.0).unwrap();
    let (pl, _) = stationary_distribution(&params).unwrap();
    assert!((pl - 0.75).abs() < 1e-15);

    // 10^7 equal steps of 0.1/γ_tot. Consecutive samples are correlated, so
    // the binomial width is inflated by the integrated autocorrelation
    // (1 + ρ)/(1 − ρ) with ρ = e^{−γ_tot·dt}.
    let mut r = rng("occupancy");
    let mut tel = Telegraph::new(params, None, &mut r).unwrap();
    let (steps, dt) = (10_000_000u64, 0.025);
    let mut low = 0u64;
    for _ in 0..steps {
        tel.advance(dt, &mut r);
        low += u64::from(tel.mode() == Mode::Low);
    }
    let frac = low as f64 / steps as f64;
    let rho = (-params.total_rate() * dt).exp();
    let sigma = binomial_sigma(pl, steps as f64) * ((1.0 + rho) / (1.0 - rho)).sqrt();
    assert!((frac - pl).abs() < 3.0 * sigma, "{frac} vs {pl} ± {sigma}");
    // Time-weighted occupancy from the driver agrees too.
    let tw = tel.time_in_low() / tel.now();
    assert!((tw - pl).abs() < 3.0 * sigma, "{tw}");
}

#[test]
fn flip_fraction_matches_closed_form() {
    let gamma = 2.0e3;
    let params = TelegraphParams::symmetric(gamma).unwrap();
    let dt = std::f64::consts::LN_2 / gamma;
    let p = flip_probability(&params, Mode::High, dt).unwrap();
    assert!((p - 0.25).abs() < 1e-15);

    let mut r = rng("flip");
    let n = 1_000_000;
    let start = TlsState::new(Mode::High, 0.0);
    let flips = (0..n)
        .filter(|_| evolve(start, &params, dt, &mut r).unwrap().mode != Mode::High)
        .count();
    let frac = flips as f64 / n as f64;
    assert!((frac - p).abs() < 3.0 * binomial_sigma(p, n as f64), "{frac}");
}

#[test]
fn asymmetric_flip_fraction_from_each_mode() {
    let params = TelegraphParams::new(500.0, 1500.0).unwrap();
    let dt = 4e-4;
    let mut r = rng("asym");
    let n = 200_000;
    for from in [Mode::High, Mode::Low] {
        let p = flip_probability(&params, from, dt).unwrap();
        let start = TlsState::new(from, 0.0);
        let flips = (0..n).filter(|_| evolve(start, &params, dt, &mut r).unwrap().mode != from).count();
        let frac = flips as f64 / n as f64;
        assert!((frac - p).abs() < 3.0 * binomial_sigma(p, n as f64), "{from:?}: {frac} vs {p}");
    }
}

#[test]
fn dwell_times_are_exponential() {
    // One-sample Kolmogorov–Smirnov test against Exp(γ_hl) at the 1% level.
    let params = TelegraphParams::new(40.0, 7.0).unwrap();
    let mut r = rng("dwell");
    let mut tel = Telegraph::new(params, Some(Mode::Low), &mut r).unwrap();
    let n = 100_000;
    let mut dwells = Vec::with_capacity(n);
    // Constant-mode pieces arrive in order; merge runs across calls and keep
    // the H runs that are bounded by switches on both sides.
    let (mut run_mode, mut run_len, mut started) = (Mode::Low, 0.0, false);
    while dwells.len() < n {
        tel.advance_with(1.0, &mut r, |mode, piece| {
            if mode != run_mode {
                if run_mode == Mode::High && started {
                    dwells.push(run_len);
                }
                started = true;
                run_mode = mode;
                run_len = 0.0;
            }
            run_len += piece;
        });
    }
    ks_exponential(&mut dwells, params.gamma_hl);
}

fn ks_exponential(sample: &mut [f64], rate: f64) {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let d = sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-rate * x).exp();
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.628 / n.sqrt();
    assert!(d < critical, "KS distance {d} above {critical}");
}

#[test]
fn ks_rejects_wrong_rate() {
    // The test above has teeth: exponential draws at a 3% higher rate fail.
    let mut r = rng("ks-teeth");
    let mut xs: Vec<f64> = (0..100_000)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut r);
            e / 41.2
        })
        .collect();
    let result = std::panic::catch_unwind(move || ks_exponential(&mut xs, 40.0));
    assert!(result.is_err());
}

#[test]
fn chapman_kolmogorov_split() {
    let params = TelegraphParams::new(800.0, 300.0).unwrap();
    let (dt1, dt2) = (3e-4, 9e-4);
    let n = 400_000;
    let mut r = rng("ck");
    let start = TlsState::new(Mode::High, 0.0);
    let split = (0..n)
        .filter(|_| {
            let s = evolve(start, &params, dt1, &mut r).unwrap();
            evolve(s, &params, dt2, &mut r).unwrap().mode == Mode::Low
        })
        .count() as f64
        / n as f64;
    let p = flip_probability(&params, Mode::High, dt1 + dt2).unwrap();
    assert!((split - p).abs() < 3.0 * binomial_sigma(p, n as f64), "{split} vs {p}");
}

proptest! {
    #[test]
    fn flip_probability_is_monotone(
        ghl in 0.0..1e4f64,
        glh in 0.0..1e4f64,
        a in 0.0..1e-2f64,
        b in 0.0..1e-2f64,
        high in any::<bool>(),
    ) {
        let params = TelegraphParams::new(ghl, glh).unwrap();
        let from = if high { Mode::High } else { Mode::Low };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = flip_probability(&params, from, lo).unwrap();
        let p_hi = flip_probability(&params, from, hi).unwrap();
        prop_assert!(p_lo <= p_hi + 1e-15);
        prop_assert!((0.0..=1.0).contains(&p_hi));
    }

    #[test]
    fn stationary_law_sums_to_one(ghl in 0.0..1e6f64, glh in 1e-6..1e6f64) {
        let (pl, ph) = stationary_distribution(&TelegraphParams::new(ghl, glh).unwrap()).unwrap();
        prop_assert!((pl + ph - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&pl) && (0.0..=1.0).contains(&ph));
    }

    #[test]
    fn evolve_is_reproducible(seed in any::<u64>(), dt in 0.0..1.0f64) {
        let params = TelegraphParams::symmetric(5.0).unwrap();
        let start = TlsState::new(Mode::Low, 0.0);
        let a = evolve(start, &params, dt, &mut StreamSeeder::new(seed).stream("e", &[])).unwrap();
        let b = evolve(start, &params, dt, &mut StreamSeeder::new(seed).stream("e", &[])).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((a.time - dt).abs() < 1e-15);
    }
}
