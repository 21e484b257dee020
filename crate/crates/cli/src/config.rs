//! Run configuration: a JSON document with defaults for everything except the
//! experiment name. Unknown keys are rejected at every level.
//!
//! Times are in seconds, frequencies in Hz, rates in 1/s. A `null` T1 or Tφ
//! means that channel is switched off.

use std::f64::consts::PI;
use std::fmt;

use anyhow::{anyhow, bail, Context, Result};
use bistable::protocol::{Environment, ExecutionModel};
use bistable::{Mode, QubitParams, TelegraphParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SyndromeSweep,
    Ramsey,
    Mitigate,
    Rb,
    Heatmap,
    Perr,
    Ak,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::SyndromeSweep,
        Experiment::Ramsey,
        Experiment::Mitigate,
        Experiment::Rb,
        Experiment::Heatmap,
        Experiment::Perr,
        Experiment::Ak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SyndromeSweep => "syndrome-sweep",
            Experiment::Ramsey => "ramsey",
            Experiment::Mitigate => "mitigate",
            Experiment::Rb => "rb",
            Experiment::Heatmap => "heatmap",
            Experiment::Perr => "perr",
            Experiment::Ak => "ak",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|e| e.name()).collect();
            anyhow!("experiment: must be one of {}, got {s:?}", names.join(", "))
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn d_f_high() -> f64 {
    QubitParams::DEFAULT_F_HIGH
}
fn d_f_low() -> f64 {
    QubitParams::DEFAULT_F_HIGH - QubitParams::DEFAULT_DELTA_TLS
}
fn d_t_pi() -> f64 {
    QubitParams::DEFAULT_T_PI
}
fn d_t1() -> Option<f64> {
    Some(QubitParams::DEFAULT_T1)
}
fn d_t_phi() -> Option<f64> {
    Some(QubitParams::DEFAULT_T_PHI)
}
fn d_eps() -> f64 {
    QubitParams::DEFAULT_READOUT_EPS
}
fn d_t_readout() -> f64 {
    QubitParams::DEFAULT_T_READOUT
}
fn d_t_reset() -> f64 {
    QubitParams::DEFAULT_T_RESET
}
fn d_t_gate() -> f64 {
    ExecutionModel::DEFAULT_T_GATE
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    #[serde(default = "d_f_high")]
    pub f_high: f64,
    #[serde(default = "d_f_low")]
    pub f_low: f64,
    /// π-pulse length; sets the Rabi rate `π/t_pi`.
    #[serde(default = "d_t_pi")]
    pub t_pi: f64,
    #[serde(default = "d_t1")]
    pub t1: Option<f64>,
    #[serde(default = "d_t_phi")]
    pub t_phi: Option<f64>,
    #[serde(default = "d_eps")]
    pub readout_eps_0to1: f64,
    #[serde(default = "d_eps")]
    pub readout_eps_1to0: f64,
    #[serde(default = "d_t_readout")]
    pub t_readout: f64,
    #[serde(default = "d_t_reset")]
    pub t_reset: f64,
    /// Slot per physical pulse.
    #[serde(default = "d_t_gate")]
    pub t_gate: f64,
    #[serde(default = "d_true")]
    pub finite_pulses: bool,
}

impl Default for QubitConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl QubitConfig {
    pub fn params(&self) -> QubitParams {
        QubitParams {
            f_low: self.f_low,
            f_high: self.f_high,
            rabi_rate: PI / self.t_pi,
            t1: self.t1.unwrap_or(f64::INFINITY),
            t_phi: self.t_phi.unwrap_or(f64::INFINITY),
            readout_eps_0to1: self.readout_eps_0to1,
            readout_eps_1to0: self.readout_eps_1to0,
            t_readout: self.t_readout,
            t_reset: self.t_reset,
        }
    }

    pub fn exec(&self) -> ExecutionModel {
        ExecutionModel {
            finite_pulses: self.finite_pulses,
            t_gate: self.t_gate,
        }
    }
}

fn d_rate() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsConfig {
    /// `H → L` rate. The default mean dwell is 20 s in each mode.
    #[serde(default = "d_rate")]
    pub gamma_hl: f64,
    #[serde(default = "d_rate")]
    pub gamma_lh: f64,
    /// Freeze the TLS in `"H"` or `"L"`.
    #[serde(default)]
    pub pinned: Option<Mode>,
}

impl Default for TlsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

macro_rules! section {
    ($name:ident { $($(#[$doc:meta])* $field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            $($(#[$doc])* pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $($field: $default,)* }
            }
        }
    };
}

section!(SyndromeSweepConfig {
    tau_min: f64 = 0.1e-6,
    tau_max: f64 = 4e-6,
    points: usize = 40,
    /// Syndrome cycles per point and per mode.
    shots: usize = 20_000,
});

section!(RamseyConfig {
    tau_max: f64 = 8e-6,
    points: usize = 50,
    shots: usize = 400,
    virtual_detuning: f64 = 2.0e6,
    /// Idle time after each shot.
    shot_dead_time: f64 = 0.0,
});

section!(MitigateConfig {
    tau_max: f64 = 8e-6,
    /// M.
    points: usize = 50,
    /// N, shots per point per row.
    reps: usize = 10,
    rows: usize = 20,
    det_nofb: f64 = 2.0e6,
    det_fb: f64 = 2.33e6,
    block_size: usize = 1,
    row_dead_time: f64 = 0.0,
});

section!(RbSection {
    /// Depths `2^0 .. 2^max_depth_exp`.
    max_depth_exp: u32 = 11,
    n_sequences: usize = 100,
    shots_per_sequence: usize = 1,
    windows: usize = 10,
    window_dead_time: f64 = 10.0,
    depolarizing: f64 = 0.0,
});

section!(HeatmapConfig {
    /// `2πΔ/Ω` axis.
    x_min: f64 = 1e-3,
    x_max: f64 = 1.0,
    nx: usize = 60,
    /// `γ·t_cyc` axis.
    y_min: f64 = 1e-4,
    y_max: f64 = 10.0,
    ny: usize = 60,
    /// Coherence time for this map; `null` takes T2 from the qubit section.
    t2: Option<f64> = Some(61e-6),
});

section!(PerrConfig {
    /// Total switching rates; each direction runs at half of it.
    gammas: Vec<f64> = vec![0.0, 1e3, 1e4, 3e4, 6e4, 1e5],
    cycles: usize = 100_000,
});

section!(AkConfig {
    gammas: Vec<f64> = vec![4.7e5, 2.35e6, 1.2e7],
    /// `null` means `3/Δ`.
    t_max: Option<f64> = None,
    points: usize = 61,
    trajectories: usize = 10_000,
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    #[serde(default = "d_seed")]
    seed: u64,
    #[serde(default = "d_replicas")]
    replicas: usize,
    #[serde(default)]
    tau_probe: Option<f64>,
    #[serde(default)]
    qubit: QubitConfig,
    #[serde(default)]
    tls: TlsConfig,
    #[serde(default)]
    syndrome_sweep: SyndromeSweepConfig,
    #[serde(default)]
    ramsey: RamseyConfig,
    #[serde(default)]
    mitigate: MitigateConfig,
    #[serde(default)]
    rb: RbSection,
    #[serde(default)]
    heatmap: HeatmapConfig,
    #[serde(default)]
    perr: PerrConfig,
    #[serde(default)]
    ak: AkConfig,
}

fn d_seed() -> u64 {
    1
}
fn d_replicas() -> usize {
    1
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub replicas: usize,
    /// Syndrome probe time; `null` picks the contrast optimum.
    pub tau_probe: Option<f64>,
    pub qubit: QubitConfig,
    pub tls: TlsConfig,
    pub syndrome_sweep: SyndromeSweepConfig,
    pub ramsey: RamseyConfig,
    pub mitigate: MitigateConfig,
    pub rb: RbSection,
    pub heatmap: HeatmapConfig,
    pub perr: PerrConfig,
    pub ak: AkConfig,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).context("config")?;
    let cfg = RunConfig {
        experiment: Experiment::from_name(&raw.experiment)?,
        seed: raw.seed,
        replicas: raw.replicas,
        tau_probe: raw.tau_probe,
        qubit: raw.qubit,
        tls: raw.tls,
        syndrome_sweep: raw.syndrome_sweep,
        ramsey: raw.ramsey,
        mitigate: raw.mitigate,
        rb: raw.rb,
        heatmap: raw.heatmap,
        perr: raw.perr,
        ak: raw.ak,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Defaults for one experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        parse_config(&format!(r#"{{"experiment": "{experiment}"}}"#)).expect("defaults are valid")
    }

    pub fn qubit_params(&self) -> QubitParams {
        self.qubit.params()
    }

    pub fn environment(&self) -> Result<Environment> {
        let q = self.qubit_params();
        let env = match self.tls.pinned {
            Some(mode) => Environment::pinned(q, mode),
            None => Environment::new(q, TelegraphParams::new(self.tls.gamma_hl, self.tls.gamma_lh)?, None),
        };
        let env = env.with_exec(self.qubit.exec());
        env.validate().context("tls")?;
        Ok(env)
    }

    /// Probe time for syndrome cycles.
    pub fn probe(&self) -> Result<f64> {
        match self.tau_probe {
            Some(t) => Ok(t),
            None => {
                let q = self.qubit_params();
                Ok(bistable::analytics::tau_opt(q.delta_tls(), q.t2())?)
            }
        }
    }

    /// Applies `--shots` to whichever count the experiment uses.
    pub fn set_shots(&mut self, n: usize) -> Result<()> {
        match self.experiment {
            Experiment::SyndromeSweep => self.syndrome_sweep.shots = n,
            Experiment::Ramsey => self.ramsey.shots = n,
            Experiment::Mitigate => self.mitigate.reps = n,
            Experiment::Rb => self.rb.shots_per_sequence = n,
            Experiment::Perr => self.perr.cycles = n,
            Experiment::Ak => self.ak.trajectories = n,
            Experiment::Heatmap => bail!("shots: heatmap is deterministic and takes no shot count"),
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.qubit_params();
        q.validate().context("qubit: invariant violated")?;
        if !(self.qubit.t_pi > 0.0) {
            bail!("qubit.t_pi: must be > 0");
        }
        self.qubit.exec().validate(&q).context("qubit")?;
        for (k, v) in [("qubit.t1", self.qubit.t1), ("qubit.t_phi", self.qubit.t_phi)] {
            if v.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
                bail!("{k}: must be positive or null");
            }
        }
        if self.tls.pinned.is_none() {
            TelegraphParams::new(self.tls.gamma_hl, self.tls.gamma_lh).context("tls")?;
            if self.tls.gamma_hl + self.tls.gamma_lh == 0.0 {
                bail!("tls: both rates are zero; set tls.pinned to choose a mode");
            }
        }
        if self.replicas == 0 {
            bail!("replicas: must be ≥ 1");
        }
        if let Some(t) = self.tau_probe {
            if !(t > 0.0 && t.is_finite()) {
                bail!("tau_probe: must be positive or null");
            }
        }
        let positive = |k: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(anyhow!("{k}: must be positive and finite, got {v}"))
            }
        };
        let nonneg = |k: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(anyhow!("{k}: must be finite and ≥ 0, got {v}"))
            }
        };
        let count = |k: &str, v: usize| if v >= 1 { Ok(()) } else { Err(anyhow!("{k}: must be ≥ 1")) };

        let s = &self.syndrome_sweep;
        positive("syndrome_sweep.tau_min", s.tau_min)?;
        positive("syndrome_sweep.tau_max", s.tau_max)?;
        if s.tau_max < s.tau_min {
            bail!("syndrome_sweep: tau_max must be ≥ tau_min");
        }
        count("syndrome_sweep.points", s.points)?;
        count("syndrome_sweep.shots", s.shots)?;

        let r = &self.ramsey;
        nonneg("ramsey.tau_max", r.tau_max)?;
        count("ramsey.points", r.points)?;
        count("ramsey.shots", r.shots)?;
        nonneg("ramsey.shot_dead_time", r.shot_dead_time)?;
        if !r.virtual_detuning.is_finite() {
            bail!("ramsey.virtual_detuning: must be finite");
        }

        let m = &self.mitigate;
        nonneg("mitigate.tau_max", m.tau_max)?;
        count("mitigate.points", m.points)?;
        count("mitigate.reps", m.reps)?;
        count("mitigate.rows", m.rows)?;
        count("mitigate.block_size", m.block_size)?;
        nonneg("mitigate.row_dead_time", m.row_dead_time)?;

        let b = &self.rb;
        if b.max_depth_exp > 20 {
            bail!("rb.max_depth_exp: must be ≤ 20");
        }
        count("rb.n_sequences", b.n_sequences)?;
        count("rb.shots_per_sequence", b.shots_per_sequence)?;
        count("rb.windows", b.windows)?;
        nonneg("rb.window_dead_time", b.window_dead_time)?;
        if !(0.0..1.0).contains(&b.depolarizing) {
            bail!("rb.depolarizing: must lie in [0, 1)");
        }

        let h = &self.heatmap;
        positive("heatmap.x_min", h.x_min)?;
        positive("heatmap.x_max", h.x_max)?;
        positive("heatmap.y_min", h.y_min)?;
        positive("heatmap.y_max", h.y_max)?;
        if h.x_max < h.x_min || h.y_max <= h.y_min {
            bail!("heatmap: need x_min ≤ x_max and y_min < y_max");
        }
        count("heatmap.nx", h.nx)?;
        if h.ny < 2 {
            bail!("heatmap.ny: must be ≥ 2");
        }
        if let Some(t2) = h.t2 {
            positive("heatmap.t2", t2)?;
        }

        let p = &self.perr;
        if p.gammas.is_empty() {
            bail!("perr.gammas: must not be empty");
        }
        for &g in &p.gammas {
            nonneg("perr.gammas", g)?;
        }
        count("perr.cycles", p.cycles)?;

        let a = &self.ak;
        if a.gammas.is_empty() {
            bail!("ak.gammas: must not be empty");
        }
        for &g in &a.gammas {
            nonneg("ak.gammas", g)?;
        }
        if let Some(t) = a.t_max {
            positive("ak.t_max", t)?;
        }
        count("ak.points", a.points)?;
        count("ak.trajectories", a.trajectories)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_device() {
        let c = RunConfig::defaults(Experiment::Mitigate);
        let q = c.qubit_params();
        assert_eq!(q, QubitParams::default());
        assert!((q.t2() - 43.2e-6).abs() < 0.1e-6);
        assert!((c.probe().unwrap() - 1.33e-6).abs() < 0.01e-6);
        assert_eq!(c.mitigate.points, 50);
    }

    #[test]
    fn null_coherence_times_are_infinite() {
        let c = parse_config(r#"{"experiment": "ramsey", "qubit": {"t1": null, "t_phi": null}}"#).unwrap();
        assert!(c.qubit_params().t2().is_infinite());
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse_config(r#"{"experiment": ""}"#).unwrap_err();
        assert!(format!("{e:#}").contains("experiment"));
        let e = parse_config(r#"{"experiment": "rb", "qubit": {"f_low": 5.2e9}}"#).unwrap_err();
        assert!(format!("{e:#}").contains("invariant"), "{e:#}");
        let e = parse_config(r#"{"experiment": "rb", "rb": {"depth": 3}}"#).unwrap_err();
        assert!(format!("{e:#}").contains("depth"), "{e:#}");
        let e = parse_config(r#"{"seed": 3}"#).unwrap_err();
        assert!(format!("{e:#}").contains("experiment"), "{e:#}");
    }

    #[test]
    fn shots_override_targets_the_experiment() {
        let mut c = RunConfig::defaults(Experiment::Mitigate);
        c.set_shots(7).unwrap();
        assert_eq!(c.mitigate.reps, 7);
        assert!(c.set_shots(0).is_err());
        assert!(RunConfig::defaults(Experiment::Heatmap).set_shots(5).is_err());
    }
}
