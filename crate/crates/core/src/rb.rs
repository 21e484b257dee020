//! Interleaved randomized benchmarking with and without feedback.
//!
//! Every random sequence runs twice per shot: once in the fixed H frame, and
//! once right after a syndrome cycle in the frame of the estimated mode.
//! Physical pulses occupy gate slots during which the TLS keeps switching;
//! virtual Z gates are exact frame updates and take no time.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use serde::Serialize;

use crate::clifford::{CliffordGroup, NativeOp};
use crate::fit::{fit_exponential_binomial, FitResult};
use crate::protocol::{slot_map, Environment, Lab};
use crate::qubit::{self, AffineMap, BlochState};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbConfig {
    /// Sequence lengths, strictly increasing.
    pub depths: Vec<usize>,
    pub n_sequences: usize,
    /// Repetitions of each sequence per arm.
    pub shots_per_sequence: usize,
    /// Number of consecutive fit windows, each one full depth sweep.
    pub windows: usize,
    /// Idle time after each window (s).
    pub window_dead_time: f64,
    /// Optional depolarizing strength applied after every Clifford.
    pub depolarizing: f64,
}

impl RbConfig {
    /// `1, 2, 4, …, 2^max_exp`.
    pub fn power_of_two_depths(max_exp: u32) -> Vec<usize> {
        (0..=max_exp).map(|k| 1usize << k).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() {
            return Err(Error::invalid("depths", "must not be empty"));
        }
        if self.depths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("depths", "must be strictly increasing"));
        }
        if self.n_sequences == 0 || self.shots_per_sequence == 0 || self.windows == 0 {
            return Err(Error::invalid(
                "n_sequences/shots_per_sequence/windows",
                "must all be ≥ 1",
            ));
        }
        if !(self.window_dead_time >= 0.0 && self.window_dead_time.is_finite()) {
            return Err(Error::invalid("window_dead_time", "must be finite and ≥ 0"));
        }
        if !(0.0..1.0).contains(&self.depolarizing) {
            return Err(Error::invalid("depolarizing", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

impl Default for RbConfig {
    fn default() -> Self {
        Self {
            depths: Self::power_of_two_depths(11),
            n_sequences: 100,
            shots_per_sequence: 1,
            windows: 10,
            window_dead_time: 10.0,
            depolarizing: 0.0,
        }
    }
}

/// One arm's data in one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmWindow {
    /// Mean survival (`m = 0`) per depth.
    pub survival: Vec<f64>,
    pub shots_per_depth: usize,
    pub fit: Option<FitResult>,
    /// Why the fit was rejected, if it was.
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbWindow {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Fraction of the window spent in `L`.
    pub low_fraction: f64,
    pub no_feedback: ArmWindow,
    pub feedback: ArmWindow,
    pub syndromes: u64,
    pub syndrome_errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbResult {
    pub depths: Vec<usize>,
    pub gates_per_clifford: f64,
    pub windows: Vec<RbWindow>,
}

/// Precomputed slot maps per (detuning, effective axis, angle).
#[derive(Debug, Default)]
struct SlotCache {
    entries: Vec<(u64, [AffineMap; 12])>,
}

fn angle_index(angle: f64) -> usize {
    if (angle - FRAC_PI_2).abs() < 1e-12 {
        0
    } else if (angle + FRAC_PI_2).abs() < 1e-12 {
        1
    } else {
        2
    }
}

const ANGLES: [f64; 3] = [FRAC_PI_2, -FRAC_PI_2, PI];

impl SlotCache {
    fn get(&mut self, lab: &Lab, delta: f64, quarter: u8, angle: f64) -> AffineMap {
        let key = delta.to_bits();
        let pos = match self.entries.iter().position(|(k, _)| *k == key) {
            Some(p) => p,
            None => {
                let maps = std::array::from_fn(|i| {
                    let (q, a) = (i / 3, ANGLES[i % 3]);
                    slot_map(&lab.qubit, &lab.exec, q as f64 * FRAC_PI_2, a, delta)
                });
                self.entries.push((key, maps));
                self.entries.len() - 1
            }
        };
        self.entries[pos].1[usize::from(quarter) * 3 + angle_index(angle)]
    }
}

impl Lab {
    /// Runs `seq` plus `recovery` in the frame `f_c` and reads out.
    /// Returns the reported outcome.
    fn run_clifford_sequence(
        &mut self,
        group: &CliffordGroup,
        seq: &[usize],
        recovery: usize,
        f_c: f64,
        depolarizing: f64,
        cache: &mut SlotCache,
    ) -> u8 {
        let mut s = BlochState::GROUND;
        // Frame phase in quarter turns; every virtual Z here is a multiple of π/2.
        let mut frame: i32 = 0;
        let shrink = AffineMap::depolarizing(1.0 - depolarizing);
        let slot = self.exec.slot();
        for &g in seq.iter().chain(std::iter::once(&recovery)) {
            for op in &group.element(g).decomposition {
                match *op {
                    NativeOp::VirtualZ(a) => {
                        frame += (a / FRAC_PI_2).round() as i32;
                    }
                    NativeOp::Pulse { quarter, angle } => {
                        let d = qubit::detuning(&self.qubit, f_c, self.tls.mode());
                        let eff = (i32::from(quarter) - frame).rem_euclid(4) as u8;
                        s = cache.get(self, d, eff, angle).apply(s);
                        self.tls.advance(slot, &mut self.rng);
                    }
                }
            }
            if depolarizing > 0.0 {
                s = shrink.apply(s);
            }
        }
        self.ctrl.frame_phase = f64::from(frame.rem_euclid(4)) * FRAC_PI_2;
        let (m, _) = qubit::measure(s, &self.qubit, &mut self.rng);
        self.idle(self.qubit.t_wall());
        m
    }
}

fn fit_arm(depths: &[usize], survival: Vec<f64>, shots: usize, gpc: f64) -> ArmWindow {
    let x: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    let n = vec![shots as f64; x.len()];
    let (fit, fit_error) = match fit_exponential_binomial(&x, &survival, &n, gpc) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    ArmWindow {
        survival,
        shots_per_depth: shots,
        fit,
        fit_error,
    }
}

/// Interleaved RB over consecutive windows on one TLS trajectory.
///
/// `rng` drives sequence selection; the lab gets its own stream derived from
/// it. Failed fits are kept as flagged windows.
pub fn run_rb_interleaved(
    env: &Environment,
    cfg: &RbConfig,
    tau_probe: f64,
    rng: &mut SimRng,
) -> Result<RbResult> {
    cfg.validate()?;
    let group = CliffordGroup::shared();
    let gpc = group.gates_per_clifford();
    let mut lab = Lab::new(env, tau_probe, SimRng::from_rng(rng))?;
    let mut cache = SlotCache::default();
    let mut windows = Vec::with_capacity(cfg.windows);
    let f_high = env.qubit.f_high;
    let shots_per_depth = cfg.n_sequences * cfg.shots_per_sequence;
    for index in 0..cfg.windows {
        let (t_start, low0) = (lab.now(), lab.time_in_low());
        let (mut syndromes, mut errors) = (0u64, 0u64);
        let mut surv_a = Vec::with_capacity(cfg.depths.len());
        let mut surv_b = Vec::with_capacity(cfg.depths.len());
        for &depth in &cfg.depths {
            let (mut ok_a, mut ok_b) = (0usize, 0usize);
            for _ in 0..cfg.n_sequences {
                let (seq, rec) = group.random_sequence(depth, rng);
                for _ in 0..cfg.shots_per_sequence {
                    let m = lab.run_clifford_sequence(group, &seq, rec, f_high, cfg.depolarizing, &mut cache);
                    ok_a += usize::from(m == 0);
                    let syn = lab.syndrome_cycle();
                    syndromes += 1;
                    errors += u64::from(syn.is_error());
                    let f = lab.ctrl.f_c;
                    let m = lab.run_clifford_sequence(group, &seq, rec, f, cfg.depolarizing, &mut cache);
                    ok_b += usize::from(m == 0);
                }
            }
            surv_a.push(ok_a as f64 / shots_per_depth as f64);
            surv_b.push(ok_b as f64 / shots_per_depth as f64);
        }
        let t_end = lab.now();
        windows.push(RbWindow {
            index,
            t_start,
            t_end,
            low_fraction: (lab.time_in_low() - low0) / (t_end - t_start),
            no_feedback: fit_arm(&cfg.depths, surv_a, shots_per_depth, gpc),
            feedback: fit_arm(&cfg.depths, surv_b, shots_per_depth, gpc),
            syndromes,
            syndrome_errors: errors,
        });
        lab.idle(cfg.window_dead_time);
    }
    Ok(RbResult {
        depths: cfg.depths.clone(),
        gates_per_clifford: gpc,
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ExecutionModel;
    use crate::qubit::QubitParams;
    use crate::rng::StreamSeeder;
    use crate::tls::Mode;

    #[test]
    fn config_validation() {
        let mut c = RbConfig::default();
        assert!(c.validate().is_ok());
        c.depths = vec![1, 4, 4];
        assert!(c.validate().is_err());
        c.depths.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_sequences_return_to_ground() {
        let q = QubitParams::default().noiseless();
        let group = CliffordGroup::shared();
        for exec in [ExecutionModel::default(), ExecutionModel::instantaneous()] {
            let env = Environment::pinned(q, Mode::High).with_exec(exec);
            let seeder = StreamSeeder::new(7);
            let mut lab = Lab::new(&env, 1e-6, seeder.stream("lab", &[])).unwrap();
            let mut rng = seeder.stream("seq", &[]);
            let mut cache = SlotCache::default();
            for k in 0..1000 {
                let (seq, rec) = group.random_sequence(k % 33, &mut rng);
                let m = lab.run_clifford_sequence(group, &seq, rec, q.f_high, 0.0, &mut cache);
                assert_eq!(m, 0, "sequence {seq:?}");
            }
        }
    }
}
