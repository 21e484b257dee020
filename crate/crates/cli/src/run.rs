//! Experiment dispatch. Every experiment writes its tables, a `summary.json`
//! and finally `manifest.json`, which lists the checksum of every other file.

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use bistable::analytics::{
    self, ak_coherence, blind_coherent_bound, contrast, improvement_map, log_axis, p_err_bandwidth,
    p_err_bandwidth_exact, p_err_static, simulate_coherence,
};
use bistable::fit::{fit_sinusoids, Frequency};
use bistable::protocol::{
    cycle_bandwidth, ramsey_excited_probability, run_mitigation, CycleTiming, Environment, Lab,
    MitigationConfig,
};
use bistable::rb::{run_rb_interleaved, RbConfig, RbResult};
use bistable::rng::{SimRng, StreamSeeder};
use bistable::tls::stationary_distribution;
use bistable::{Mode, TelegraphParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};
use crate::output::{num, FileRecord, OutputDir};

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: Experiment,
    pub seed: u64,
    pub replicas: usize,
    pub wall_time_s: f64,
    pub derived: Value,
    pub config: &'a RunConfig,
    pub files: Vec<FileRecord>,
}

/// Runs the configured experiment and writes everything under `out`.
/// Returns the names of the files written, manifest last.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let start = Instant::now();
    let mut dir = OutputDir::create(out)?;
    let seeder = StreamSeeder::new(cfg.seed);
    let summary = match cfg.experiment {
        Experiment::SyndromeSweep => syndrome_sweep(cfg, &seeder, &mut dir)?,
        Experiment::Ramsey => ramsey(cfg, &seeder, &mut dir)?,
        Experiment::Mitigate => mitigate(cfg, &seeder, &mut dir)?,
        Experiment::Rb => rb(cfg, &seeder, &mut dir)?,
        Experiment::Heatmap => heatmap(cfg, &mut dir)?,
        Experiment::Perr => perr(cfg, &seeder, &mut dir)?,
        Experiment::Ak => ak(cfg, &seeder, &mut dir)?,
    };
    dir.json("summary.json", &summary)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        seed: cfg.seed,
        replicas: cfg.replicas,
        wall_time_s: start.elapsed().as_secs_f64(),
        derived: derived(cfg)?,
        config: cfg,
        files: dir.files().to_vec(),
    };
    dir.json("manifest.json", &manifest)?;
    Ok(dir.files().iter().map(|f| f.name.clone()).collect())
}

/// Closed-form quantities for the configured device.
fn derived(cfg: &RunConfig) -> Result<Value> {
    let q = cfg.qubit_params();
    let (delta, t2, alpha) = (q.delta_tls(), q.t2(), q.alpha());
    let tau = analytics::tau_opt(delta, t2)?;
    let timing = CycleTiming {
        t_gate: cfg.qubit.t_gate,
        tau,
        t_readout: q.t_readout,
        t_reset: q.t_reset,
    };
    let gamma = cfg.tls.gamma_hl + cfg.tls.gamma_lh;
    Ok(json!({
        "delta_tls_hz": delta,
        "t2_s": finite_or_null(t2),
        "alpha": alpha,
        "tau_opt_s": tau,
        "tau_probe_s": cfg.probe()?,
        "p_err_static": p_err_static(delta, t2, alpha)?,
        "p_err_bandwidth_at_config_gamma": p_err_bandwidth(delta, gamma, alpha, t2, q.t_wall())?,
        "cycle_bandwidth_hz": cycle_bandwidth(&timing)?,
        "blind_coherent_bound": blind_coherent_bound(&q),
    }))
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Runs `f` once per replica, in parallel, keeping replica order.
fn per_replica<T: Send>(cfg: &RunConfig, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..cfg.replicas as u64).into_par_iter().map(f).collect()
}

fn stream(seeder: &StreamSeeder, cfg: &RunConfig, idx: &[u64]) -> SimRng {
    seeder.stream(cfg.experiment.name(), idx)
}

fn mode_label(m: Mode) -> String {
    m.label().to_string()
}

// ---------------------------------------------------------------------------

fn syndrome_sweep(cfg: &RunConfig, seeder: &StreamSeeder, dir: &mut OutputDir) -> Result<Value> {
    let s = &cfg.syndrome_sweep;
    let q = cfg.qubit_params();
    let exec = cfg.qubit.exec();
    let grid = linspace(s.tau_min, s.tau_max, s.points);
    // Each point uses both pinned modes with equal weight.
    let results = per_replica(cfg, |r| {
        Ok(grid
            .iter()
            .enumerate()
            .map(|(i, &tau)| {
                let mut rates = [f64::NAN; 2];
                for (k, mode) in [Mode::High, Mode::Low].into_iter().enumerate() {
                    let env = Environment::pinned(q, mode).with_exec(exec);
                    let Ok(mut lab) = Lab::new(&env, tau, stream(seeder, cfg, &[r, i as u64, k as u64])) else {
                        return (rates, "undecodable probe time");
                    };
                    let errs = (0..s.shots).filter(|_| lab.syndrome_cycle().is_error()).count();
                    rates[k] = errs as f64 / s.shots as f64;
                }
                (rates, "")
            })
            .collect::<Vec<_>>())
    })?;
    let n = 2.0 * s.shots as f64;
    let (delta, t2, alpha) = (q.delta_tls(), q.t2(), q.alpha());
    let mut rows = Vec::new();
    let mut best = Vec::new();
    for (r, pts) in results.iter().enumerate() {
        let mut b = (f64::NAN, f64::INFINITY);
        for (&tau, (rates, flag)) in grid.iter().zip(pts) {
            let p = 0.5 * (rates[0] + rates[1]);
            if p < b.1 {
                b = (tau, p);
            }
            rows.push(vec![
                r.to_string(),
                num(tau),
                num(p),
                num((p * (1.0 - p) / n).sqrt()),
                num(rates[0]),
                num(rates[1]),
                num((1.0 - contrast(delta, tau, alpha, t2, 0.0)) / 2.0),
                flag.to_string(),
            ]);
        }
        best.push(json!({"replica": r, "tau_s": b.0, "p_err": b.1}));
    }
    dir.csv(
        "syndrome_sweep.csv",
        &["replica", "tau_s", "p_err", "p_err_se", "p_err_given_h", "p_err_given_l", "p_err_analytic", "flag"],
        rows,
    )?;
    Ok(json!({
        "shots_per_mode": s.shots,
        "best_point": best,
        "tau_opt_s": analytics::tau_opt(delta, t2)?,
        "p_err_static": p_err_static(delta, t2, alpha)?,
    }))
}

/// Two free frequencies sharing one envelope; the beat node sits at
/// `1/(2|f1 − f2|)`.
fn beat_fit(tau: &[f64], p: &[f64], f0: f64, split: f64) -> Value {
    match fit_sinusoids(
        tau,
        p,
        &vec![1.0; p.len()],
        &[Frequency::Free(f0), Frequency::Free(f0 + 1.1 * split)],
        2e4,
    ) {
        Ok(f) => {
            let (a, b) = (f.components[0], f.components[1]);
            json!({
                "frequencies_hz": [a.frequency, b.frequency],
                "amplitudes": [a.amplitude(), b.amplitude()],
                "beat_node_s": 0.5 / (a.frequency - b.frequency).abs(),
                "decay_rate_per_s": f.decay_rate,
            })
        }
        Err(e) => json!({"error": e.to_string()}),
    }
}

/// Principal frequency free, with fixed side components at `f ± split`.
fn suppression_fit(tau: &[f64], p: &[f64], f0: f64, split: f64) -> Value {
    match fit_sinusoids(
        tau,
        p,
        &vec![1.0; p.len()],
        &[Frequency::Free(f0), Frequency::Fixed(f0 + split), Frequency::Fixed(f0 - split)],
        2e4,
    ) {
        Ok(f) => {
            let c = &f.components;
            json!({
                "principal_frequency_hz": c[0].frequency,
                "principal_amplitude": c[0].amplitude(),
                "side_amplitudes": [c[1].amplitude(), c[2].amplitude()],
                "second_component_ratio": c[1].amplitude().hypot(c[2].amplitude()) / c[0].amplitude(),
            })
        }
        Err(e) => json!({"error": e.to_string()}),
    }
}

fn ramsey(cfg: &RunConfig, seeder: &StreamSeeder, dir: &mut OutputDir) -> Result<Value> {
    let c = &cfg.ramsey;
    let env = cfg.environment()?;
    let q = env.qubit;
    let probe = cfg.probe()?;
    let grid = linspace(0.0, c.tau_max, c.points);
    let pops = match cfg.tls.pinned {
        Some(Mode::Low) => (1.0, 0.0),
        Some(Mode::High) => (0.0, 1.0),
        None => stationary_distribution(&TelegraphParams::new(cfg.tls.gamma_hl, cfg.tls.gamma_lh)?)?,
    };
    let model: Vec<f64> = grid
        .iter()
        .map(|&tau| {
            [(Mode::Low, pops.0), (Mode::High, pops.1)]
                .iter()
                .map(|&(m, w)| {
                    w * q.report_one_probability(ramsey_excited_probability(
                        &q,
                        &env.exec,
                        q.f_high,
                        m,
                        tau,
                        c.virtual_detuning,
                    ))
                })
                .sum()
        })
        .collect();
    let runs = per_replica(cfg, |r| {
        let mut lab = Lab::new(&env, probe, stream(seeder, cfg, &[r]))?;
        grid.iter()
            .map(|&tau| {
                let t0 = lab.now();
                let mut ones = 0usize;
                for _ in 0..c.shots {
                    ones += usize::from(lab.ramsey_cycle_at(q.f_high, tau, c.virtual_detuning)?.m);
                    lab.idle(c.shot_dead_time);
                }
                Ok((t0, ones as f64 / c.shots as f64))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (r, pts) in runs.iter().enumerate() {
        for ((&tau, &(t0, p)), &m) in grid.iter().zip(pts).zip(&model) {
            rows.push(vec![
                r.to_string(),
                num(tau),
                num(t0),
                num(p),
                num((p * (1.0 - p) / c.shots as f64).sqrt()),
                num(m),
            ]);
        }
        let p: Vec<f64> = pts.iter().map(|x| x.1).collect();
        fits.push(beat_fit(&grid, &p, c.virtual_detuning, q.delta_tls()));
    }
    dir.csv("ramsey.csv", &["replica", "tau_s", "lab_time_s", "p_one", "p_one_se", "p_one_mixture_model"], rows)?;
    Ok(json!({
        "shots_per_point": c.shots,
        "stationary_populations": {"L": pops.0, "H": pops.1},
        "beat_fit": fits,
        "expected_beat_node_s": 0.5 / q.delta_tls(),
    }))
}

fn mitigate(cfg: &RunConfig, seeder: &StreamSeeder, dir: &mut OutputDir) -> Result<Value> {
    let c = &cfg.mitigate;
    let env = cfg.environment()?;
    let probe = cfg.probe()?;
    let mcfg = MitigationConfig {
        tau_grid: MitigationConfig::linear_grid(c.points, c.tau_max),
        reps: c.reps,
        rows: c.rows,
        det_nofb: c.det_nofb,
        det_fb: c.det_fb,
        block_size: c.block_size,
        row_dead_time: c.row_dead_time,
    };
    let results = per_replica(cfg, |r| {
        let mut lab = Lab::new(&env, probe, stream(seeder, cfg, &[r]))?;
        Ok(run_mitigation(&mut lab, &mcfg)?)
    })?;
    let header = ["replica", "row", "col", "tau_s", "row_start_s", "p_one", "mode_at_row_start"];
    for (name, pick) in [
        ("fringe_no_feedback.csv", 0),
        ("fringe_feedback.csv", 1),
    ] {
        let mut rows = Vec::new();
        for (r, res) in results.iter().enumerate() {
            let m = if pick == 0 { &res.no_feedback } else { &res.feedback };
            for (i, vals) in m.values.iter().enumerate() {
                for (j, &v) in vals.iter().enumerate() {
                    rows.push(vec![
                        r.to_string(),
                        i.to_string(),
                        j.to_string(),
                        num(m.tau[j]),
                        num(m.row_start[i]),
                        num(v),
                        mode_label(res.trace[i].mode_at_start),
                    ]);
                }
            }
        }
        dir.csv(name, &header, rows)?;
    }
    let trace = results.iter().enumerate().flat_map(|(r, res)| {
        res.trace.iter().map(move |t| {
            vec![
                r.to_string(),
                t.row.to_string(),
                num(t.t_start),
                num(t.t_end),
                mode_label(t.mode_at_start),
                num(t.low_fraction),
            ]
        })
    });
    dir.csv(
        "mode_trace.csv",
        &["replica", "row", "t_start_s", "t_end_s", "mode_at_start", "low_fraction"],
        trace,
    )?;
    let delta = env.qubit.delta_tls();
    let per: Vec<Value> = results
        .iter()
        .map(|res| {
            json!({
                "syndromes": res.syndromes,
                "syndrome_errors": res.syndrome_errors,
                "p_err": res.syndrome_errors as f64 / res.syndromes.max(1) as f64,
                "no_feedback_beat_fit": beat_fit(&mcfg.tau_grid, &res.no_feedback.column_means(), c.det_nofb, delta),
                "feedback_fit": suppression_fit(&mcfg.tau_grid, &res.feedback.column_means(), c.det_fb, delta),
            })
        })
        .collect();
    Ok(json!({
        "matrix_shape": {"rows": c.rows, "points": c.points, "shots_per_cell": c.reps},
        "replicas": per,
    }))
}

fn rb(cfg: &RunConfig, seeder: &StreamSeeder, dir: &mut OutputDir) -> Result<Value> {
    let c = &cfg.rb;
    let env = cfg.environment()?;
    let probe = cfg.probe()?;
    let rcfg = RbConfig {
        depths: RbConfig::power_of_two_depths(c.max_depth_exp),
        n_sequences: c.n_sequences,
        shots_per_sequence: c.shots_per_sequence,
        windows: c.windows,
        window_dead_time: c.window_dead_time,
        depolarizing: c.depolarizing,
    };
    let results: Vec<RbResult> =
        per_replica(cfg, |r| Ok(run_rb_interleaved(&env, &rcfg, probe, &mut stream(seeder, cfg, &[r]))?))?;
    let fit_cols = |a: &bistable::rb::ArmWindow| match a.fit {
        Some(f) => [num(f.r_native), num(f.r_native_se), String::new()],
        None => [num(f64::NAN), num(f64::NAN), a.fit_error.clone().unwrap_or_default()],
    };
    let mut rows = Vec::new();
    let mut surv = Vec::new();
    for (r, res) in results.iter().enumerate() {
        for w in &res.windows {
            let mut row = vec![
                r.to_string(),
                w.index.to_string(),
                num(w.t_start),
                num(w.t_end),
                num(w.low_fraction),
                w.syndromes.to_string(),
                w.syndrome_errors.to_string(),
            ];
            let [a, b, c] = fit_cols(&w.no_feedback);
            let [d, e, f] = fit_cols(&w.feedback);
            row.extend([a, b, d, e, c, f]);
            rows.push(row);
            for (k, &depth) in res.depths.iter().enumerate() {
                surv.push(vec![
                    r.to_string(),
                    w.index.to_string(),
                    depth.to_string(),
                    num(w.no_feedback.survival[k]),
                    num(w.feedback.survival[k]),
                ]);
            }
        }
    }
    dir.csv(
        "rb_windows.csv",
        &[
            "replica",
            "window",
            "t_start_s",
            "t_end_s",
            "low_fraction",
            "syndromes",
            "syndrome_errors",
            "r_native_no_feedback",
            "r_native_no_feedback_se",
            "r_native_feedback",
            "r_native_feedback_se",
            "fit_error_no_feedback",
            "fit_error_feedback",
        ],
        rows,
    )?;
    dir.csv(
        "rb_survival.csv",
        &["replica", "window", "depth_cliffords", "survival_no_feedback", "survival_feedback"],
        surv,
    )?;
    let q = env.qubit;
    let mean = |pick: fn(&bistable::rb::RbWindow) -> Option<f64>| {
        let v: Vec<f64> = results.iter().flat_map(|r| r.windows.iter().filter_map(pick)).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(json!({
        "gates_per_clifford": results[0].gates_per_clifford,
        "decoherence_floor_r_native": cfg.qubit.t_gate * (1.0 / q.t1 + 1.0 / q.t_phi) / 3.0,
        "mean_r_native_no_feedback": finite_or_null(mean(|w| w.no_feedback.fit.map(|f| f.r_native))),
        "mean_r_native_feedback": finite_or_null(mean(|w| w.feedback.fit.map(|f| f.r_native))),
        "flagged_windows": results.iter().flat_map(|r| &r.windows)
            .filter(|w| w.no_feedback.fit.is_none() || w.feedback.fit.is_none()).count(),
    }))
}

fn heatmap(cfg: &RunConfig, dir: &mut OutputDir) -> Result<Value> {
    let h = &cfg.heatmap;
    let q = cfg.qubit_params();
    let t2 = h.t2.unwrap_or(q.t2());
    let (alpha, t_pi, t_wall) = (q.alpha(), q.t_pi(), q.t_wall());
    let x = log_axis(h.x_min, h.x_max, h.nx);
    let y = log_axis(h.y_min, h.y_max, h.ny);
    let map = improvement_map(&x, &y, alpha, t_pi, t2, t_wall)?;
    let mut rows = Vec::new();
    for (j, &yj) in y.iter().enumerate() {
        for (i, &xi) in x.iter().enumerate() {
            let delta = xi * q.rabi_rate / std::f64::consts::TAU;
            let t_cyc = analytics::tau_opt(delta, t2)? + t_wall;
            rows.push(vec![num(xi), num(yj), num(map.values[j][i]), num(delta), num(yj / t_cyc)]);
        }
    }
    dir.csv(
        "heatmap.csv",
        &["x_2pi_delta_over_omega", "y_gamma_t_cyc", "log10_improvement", "delta_tls_hz", "gamma_per_s"],
        rows,
    )?;
    dir.csv(
        "heatmap_contour.csv",
        &["x_2pi_delta_over_omega", "y_gamma_t_cyc"],
        map.zero_contour.iter().map(|&(a, b)| vec![num(a), num(b)]),
    )?;
    let best = map.values.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({
        "t2_s": t2,
        "alpha": alpha,
        "t_pi_s": t_pi,
        "t_wall_s": t_wall,
        "max_log10_improvement": best,
        "zero_contour_points": map.zero_contour.len(),
    }))
}

fn perr(cfg: &RunConfig, seeder: &StreamSeeder, dir: &mut OutputDir) -> Result<Value> {
    let p = &cfg.perr;
    let q = cfg.qubit_params();
    let exec = cfg.qubit.exec();
    let probe = cfg.probe()?;
    let runs = per_replica(cfg, |r| {
        p.gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let count = |env: &Environment, k: u64, n: usize| -> Result<usize> {
                    let mut lab = Lab::new(env, probe, stream(seeder, cfg, &[r, i as u64, k]))?;
                    Ok((0..n).filter(|_| lab.syndrome_cycle().is_error()).count())
                };
                let errors = if g == 0.0 {
                    // No switching: half the cycles in each mode.
                    let half = p.cycles / 2;
                    count(&Environment::pinned(q, Mode::High).with_exec(exec), 0, half)?
                        + count(&Environment::pinned(q, Mode::Low).with_exec(exec), 1, p.cycles - half)?
                } else {
                    let env = Environment::new(q, TelegraphParams::symmetric(g)?, None).with_exec(exec);
                    count(&env, 0, p.cycles)?
                };
                Ok(errors as f64 / p.cycles as f64)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (delta, t2, alpha, t_wall) = (q.delta_tls(), q.t2(), q.alpha(), q.t_wall());
    let mut rows = Vec::new();
    for (r, rates) in runs.iter().enumerate() {
        for (&g, &rate) in p.gammas.iter().zip(rates) {
            rows.push(vec![
                r.to_string(),
                num(g),
                num(g * t_wall),
                num(rate),
                num((rate * (1.0 - rate) / p.cycles as f64).sqrt()),
                num(p_err_static(delta, t2, alpha)?),
                num(p_err_bandwidth(delta, g, alpha, t2, t_wall)?),
                num(p_err_bandwidth_exact(delta, g, alpha, t2, t_wall)?),
            ]);
        }
    }
    dir.csv(
        "perr.csv",
        &[
            "replica",
            "gamma_per_s",
            "gamma_t_wall",
            "p_err",
            "p_err_se",
            "p_err_static",
            "p_err_bandwidth",
            "p_err_bandwidth_exact",
        ],
        rows,
    )?;
    Ok(json!({
        "cycles_per_point": p.cycles,
        "t_wall_s": t_wall,
        "tau_probe_s": probe,
        "crossing_quarter": "feedback beats the best blind drive while p_err < 0.25",
    }))
}

fn ak(cfg: &RunConfig, seeder: &StreamSeeder, dir: &mut OutputDir) -> Result<Value> {
    let a = &cfg.ak;
    let delta = cfg.qubit_params().delta_tls();
    let times = linspace(0.0, a.t_max.unwrap_or(3.0 / delta), a.points);
    let mc = per_replica(cfg, |r| {
        a.gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| Ok(simulate_coherence(&times, delta, g, a.trajectories, &mut stream(seeder, cfg, &[r, i as u64]))?))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    let mut regimes = Vec::new();
    for &g in &a.gammas {
        regimes.push(json!({"gamma_per_s": g, "regime": ak_coherence(0.0, delta, g)?.regime}));
    }
    for (r, per_gamma) in mc.iter().enumerate() {
        for (&g, curve) in a.gammas.iter().zip(per_gamma) {
            for (&t, z) in times.iter().zip(curve) {
                let c = ak_coherence(t, delta, g)?;
                rows.push(vec![r.to_string(), num(g), num(t), num(c.c_eq), num(c.s_ak), num(z.re), num(z.im)]);
            }
        }
    }
    dir.csv(
        "ak.csv",
        &["replica", "gamma_per_s", "t_s", "c_eq", "s_ak", "c_mc_re", "c_mc_im"],
        rows,
    )?;
    Ok(json!({
        "delta_tls_hz": delta,
        "trajectories": a.trajectories,
        "critical_gamma_per_s": std::f64::consts::TAU * delta,
        "regimes": regimes,
    }))
}
