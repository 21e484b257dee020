//! Feedback cycles on a simulated bistable qubit.
//!
//! A [`Lab`] owns one TLS trajectory, one controller and one random stream,
//! and runs cycles back to back on a shared clock. The TLS keeps evolving
//! during pulses, free evolution, readout and reset, so estimates go stale
//! exactly as they would on hardware.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::Serialize;

use crate::qubit::{self, AffineMap, BlochState, PulseSpec, QubitParams};
use crate::rng::SimRng;
use crate::tls::{Mode, Telegraph, TelegraphParams};
use crate::{Error, Result};

/// How physical pulses are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExecutionModel {
    /// Finite pulses last `|θ|/Ω` inside a slot of `t_gate`; otherwise pulses
    /// are ideal and take no time.
    pub finite_pulses: bool,
    /// Slot length per physical pulse (s).
    pub t_gate: f64,
}

impl ExecutionModel {
    pub const DEFAULT_T_GATE: f64 = 48e-9;

    pub fn instantaneous() -> Self {
        Self {
            finite_pulses: false,
            t_gate: Self::DEFAULT_T_GATE,
        }
    }

    /// Wall time consumed by one pulse slot.
    pub fn slot(&self) -> f64 {
        if self.finite_pulses {
            self.t_gate
        } else {
            0.0
        }
    }

    pub fn validate(&self, q: &QubitParams) -> Result<()> {
        if !(self.t_gate >= 0.0 && self.t_gate.is_finite()) {
            return Err(Error::invalid("t_gate", "must be finite and ≥ 0"));
        }
        if self.finite_pulses && self.t_gate < q.t_pi() * (1.0 - 1e-12) {
            return Err(Error::invalid(
                "t_gate",
                format!("slot {} s is shorter than a π pulse ({} s)", self.t_gate, q.t_pi()),
            ));
        }
        Ok(())
    }
}

impl Default for ExecutionModel {
    fn default() -> Self {
        Self {
            finite_pulses: true,
            t_gate: Self::DEFAULT_T_GATE,
        }
    }
}

/// Map for one pulse slot: the pulse, then idle precession for the rest of
/// the slot.
pub fn slot_map(
    q: &QubitParams,
    exec: &ExecutionModel,
    axis_phase: f64,
    angle: f64,
    delta_q: f64,
) -> AffineMap {
    let pulse = PulseSpec::build(axis_phase, angle, exec.finite_pulses, q.rabi_rate);
    let map = qubit::pulse_map(&pulse, delta_q, q);
    let rest = exec.slot() - pulse.duration;
    if exec.finite_pulses && rest > 0.0 {
        map.then(&qubit::free_map(delta_q, rest, q))
    } else {
        map
    }
}

/// Excited-state population after a Ramsey sequence with the mode held fixed
/// and no sampling: `X_{−π/2}`, free evolution for `tau`, then `X_{−π/2}`
/// about an axis advanced by `2π·virtual_detuning·tau`.
pub fn ramsey_excited_probability(
    q: &QubitParams,
    exec: &ExecutionModel,
    f_c: f64,
    mode: Mode,
    tau: f64,
    virtual_detuning: f64,
) -> f64 {
    let d = qubit::detuning(q, f_c, mode);
    let s = slot_map(q, exec, 0.0, -FRAC_PI_2, d)
        .then(&qubit::free_map(d, tau, q))
        .then(&slot_map(q, exec, TAU * virtual_detuning * tau, -FRAC_PI_2, d))
        .apply(BlochState::GROUND);
    s.p_excited()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerState {
    /// Control (rotating-frame) frequency (Hz).
    pub f_c: f64,
    /// Accumulated virtual-Z phase (rad).
    pub frame_phase: f64,
    /// Laboratory time (s).
    pub clock: f64,
    pub last_syndrome: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleTiming {
    pub t_gate: f64,
    pub tau: f64,
    pub t_readout: f64,
    pub t_reset: f64,
}

impl CycleTiming {
    pub fn cycle_total(&self) -> f64 {
        2.0 * self.t_gate + self.tau + self.t_readout + self.t_reset
    }
}

/// `1/(τ + t_readout + t_reset)`; gate slots are not counted.
pub fn cycle_bandwidth(timing: &CycleTiming) -> Result<f64> {
    let parts = [timing.t_gate, timing.tau, timing.t_readout, timing.t_reset];
    if parts.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("timing", "all durations must be ≥ 0"));
    }
    let span = timing.tau + timing.t_readout + timing.t_reset;
    if !(timing.cycle_total() > 0.0) || span <= 0.0 {
        return Err(Error::invalid("timing", "cycle has zero length"));
    }
    Ok(1.0 / span)
}

/// Which mode a syndrome outcome points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SyndromeDecoder {
    /// The mode indicated by outcome 1.
    pub one_means: Mode,
}

impl SyndromeDecoder {
    /// Calibrates against the noiseless, deterministic H-frame probe.
    pub fn calibrate(q: &QubitParams, exec: &ExecutionModel, tau_probe: f64) -> Result<Self> {
        let clean = q.noiseless();
        let p = |m| ramsey_excited_probability(&clean, exec, clean.f_high, m, tau_probe, 0.0);
        let (ph, pl) = (p(Mode::High), p(Mode::Low));
        if (ph - pl).abs() < 1e-9 {
            return Err(Error::invalid(
                "tau_probe",
                format!("probe at {tau_probe} s cannot separate the modes"),
            ));
        }
        let one_means = if ph > pl { Mode::High } else { Mode::Low };
        Ok(Self { one_means })
    }

    pub fn decode(&self, m: u8) -> Mode {
        if m == 1 {
            self.one_means
        } else {
            self.one_means.other()
        }
    }
}

/// Static description of a simulated setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    pub qubit: QubitParams,
    pub tls: TelegraphParams,
    /// Starting mode. Required when both rates vanish; otherwise `None`
    /// draws from the stationary law.
    pub initial_mode: Option<Mode>,
    pub exec: ExecutionModel,
}

impl Environment {
    pub fn new(qubit: QubitParams, tls: TelegraphParams, initial_mode: Option<Mode>) -> Self {
        Self {
            qubit,
            tls,
            initial_mode,
            exec: ExecutionModel::default(),
        }
    }

    /// The TLS frozen in `mode`.
    pub fn pinned(qubit: QubitParams, mode: Mode) -> Self {
        Self::new(qubit, TelegraphParams::frozen(), Some(mode))
    }

    pub fn with_exec(mut self, exec: ExecutionModel) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.qubit.validate()?;
        self.tls.validate()?;
        self.exec.validate(&self.qubit)?;
        if self.tls.total_rate() == 0.0 && self.initial_mode.is_none() {
            return Err(Error::DegenerateProcess);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyndromeRecord {
    pub m: u8,
    pub estimate: Mode,
    pub mode_at_start: Mode,
    /// True mode once readout and reset are over, when the estimate is used.
    pub mode_at_use: Mode,
    pub t_start: f64,
    pub t_end: f64,
}

impl SyndromeRecord {
    pub fn is_error(&self) -> bool {
        self.estimate != self.mode_at_use
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotRecord {
    pub m: u8,
    /// Excited population just before readout.
    pub p_excited: f64,
    /// `P(report 1)` given that population.
    pub p_report_one: f64,
    pub mode_at_start: Mode,
    pub t_start: f64,
}

/// One simulated experiment: TLS trajectory, controller and qubit.
#[derive(Debug, Clone)]
pub struct Lab {
    pub(crate) qubit: QubitParams,
    pub(crate) exec: ExecutionModel,
    pub(crate) tls: Telegraph,
    pub(crate) ctrl: ControllerState,
    pub(crate) rng: SimRng,
    decoder: SyndromeDecoder,
    tau_probe: f64,
    forced_random_syndrome: bool,
}

impl Lab {
    pub fn new(env: &Environment, tau_probe: f64, mut rng: SimRng) -> Result<Self> {
        env.validate()?;
        if !(tau_probe > 0.0 && tau_probe.is_finite()) {
            return Err(Error::invalid("tau_probe", format!("must be > 0, got {tau_probe}")));
        }
        let tls = if env.tls.total_rate() == 0.0 {
            Telegraph::pinned(env.initial_mode.ok_or(Error::DegenerateProcess)?)
        } else {
            Telegraph::new(env.tls, env.initial_mode, &mut rng)?
        };
        let decoder = SyndromeDecoder::calibrate(&env.qubit, &env.exec, tau_probe)?;
        Ok(Self {
            qubit: env.qubit,
            exec: env.exec,
            tls,
            ctrl: ControllerState {
                f_c: env.qubit.f_high,
                frame_phase: 0.0,
                clock: 0.0,
                last_syndrome: None,
            },
            rng,
            decoder,
            tau_probe,
            forced_random_syndrome: false,
        })
    }

    /// Replace every syndrome estimate by a fair coin (the cycle still runs).
    pub fn set_forced_random_syndrome(&mut self, on: bool) {
        self.forced_random_syndrome = on;
    }

    pub fn controller(&self) -> &ControllerState {
        &self.ctrl
    }

    pub fn qubit(&self) -> &QubitParams {
        &self.qubit
    }

    pub fn decoder(&self) -> SyndromeDecoder {
        self.decoder
    }

    pub fn tau_probe(&self) -> f64 {
        self.tau_probe
    }

    pub fn mode(&self) -> Mode {
        self.tls.mode()
    }

    pub fn now(&self) -> f64 {
        self.tls.now()
    }

    pub fn time_in_low(&self) -> f64 {
        self.tls.time_in_low()
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    /// Lets laboratory time pass with the qubit idle.
    pub fn idle(&mut self, dt: f64) {
        self.tls.advance(dt, &mut self.rng);
        self.ctrl.clock = self.tls.now();
    }

    fn free(&mut self, state: BlochState, f_c: f64, dt: f64) -> BlochState {
        let q = &self.qubit;
        let mut s = state;
        self.tls.advance_with(dt, &mut self.rng, |mode, piece| {
            s = qubit::free_map(qubit::detuning(q, f_c, mode), piece, q).apply(s);
        });
        self.ctrl.clock = self.tls.now();
        s
    }

    /// One pulse slot; the mode at the start of the slot applies throughout.
    fn pulse(&mut self, state: BlochState, f_c: f64, axis: f64, angle: f64) -> BlochState {
        let d = qubit::detuning(&self.qubit, f_c, self.tls.mode());
        let s = slot_map(&self.qubit, &self.exec, axis, angle, d).apply(state);
        self.idle(self.exec.slot());
        s
    }

    /// Measurement followed by readout and reset dead time.
    fn readout(&mut self, state: BlochState) -> (u8, f64) {
        let (m, _) = qubit::measure(state, &self.qubit, &mut self.rng);
        self.idle(self.qubit.t_wall());
        (m, state.p_excited())
    }

    /// TLS-syndrome cycle, always probing in the H frame. Updates `f_c` to
    /// the frequency of the estimated mode.
    pub fn syndrome_cycle(&mut self) -> SyndromeRecord {
        let (t_start, mode_at_start) = (self.now(), self.mode());
        let f = self.qubit.f_high;
        let s = self.pulse(BlochState::GROUND, f, 0.0, -FRAC_PI_2);
        let s = self.free(s, f, self.tau_probe);
        let s = self.pulse(s, f, 0.0, -FRAC_PI_2);
        let (m, _) = self.readout(s);
        let estimate = if self.forced_random_syndrome {
            if self.rng.random::<bool>() {
                Mode::High
            } else {
                Mode::Low
            }
        } else {
            self.decoder.decode(m)
        };
        self.ctrl.f_c = self.qubit.frequency(estimate);
        self.ctrl.frame_phase = 0.0;
        self.ctrl.last_syndrome = Some(m);
        SyndromeRecord {
            m,
            estimate,
            mode_at_start,
            mode_at_use: self.mode(),
            t_start,
            t_end: self.now(),
        }
    }

    /// Ramsey cycle at the controller's current `f_c`.
    pub fn ramsey_cycle(&mut self, tau: f64, virtual_detuning: f64) -> Result<ShotRecord> {
        self.ramsey_cycle_at(self.ctrl.f_c, tau, virtual_detuning)
    }

    /// Ramsey cycle in the frame `f_c`; the second pulse axis is advanced by
    /// `2π·virtual_detuning·tau`.
    pub fn ramsey_cycle_at(&mut self, f_c: f64, tau: f64, virtual_detuning: f64) -> Result<ShotRecord> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be ≥ 0, got {tau}")));
        }
        let (t_start, mode_at_start) = (self.now(), self.mode());
        let s = self.pulse(BlochState::GROUND, f_c, 0.0, -FRAC_PI_2);
        let s = self.free(s, f_c, tau);
        let s = self.pulse(s, f_c, TAU * virtual_detuning * tau, -FRAC_PI_2);
        let (m, p) = self.readout(s);
        Ok(ShotRecord {
            m,
            p_excited: p,
            p_report_one: self.qubit.report_one_probability(p),
            mode_at_start,
            t_start,
        })
    }

    /// A single `X_π` from the ground state in the frame `f_c`.
    pub fn xgate_cycle(&mut self, f_c: f64) -> ShotRecord {
        let (t_start, mode_at_start) = (self.now(), self.mode());
        let s = self.pulse(BlochState::GROUND, f_c, 0.0, PI);
        let (m, p) = self.readout(s);
        ShotRecord {
            m,
            p_excited: p,
            p_report_one: self.qubit.report_one_probability(p),
            mode_at_start,
            t_start,
        }
    }
}

// ---------------------------------------------------------------------------
// Interleaved mitigation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitigationConfig {
    pub tau_grid: Vec<f64>,
    /// Shots per τ point per row.
    pub reps: usize,
    pub rows: usize,
    /// Virtual detuning of the fixed-frame Ramsey cycles (Hz).
    pub det_nofb: f64,
    /// Virtual detuning of the feedback Ramsey cycles (Hz).
    pub det_fb: f64,
    /// Shots per arm before switching arms.
    pub block_size: usize,
    /// Idle time between rows (s).
    pub row_dead_time: f64,
}

impl MitigationConfig {
    pub const DEFAULT_M: usize = 50;
    pub const DEFAULT_N: usize = 10;
    pub const DEFAULT_DET_NOFB: f64 = 2.0e6;
    pub const DEFAULT_DET_FB: f64 = 2.33e6;

    /// `m` evenly spaced points on `[0, tau_max]`.
    pub fn linear_grid(m: usize, tau_max: f64) -> Vec<f64> {
        if m == 1 {
            return vec![0.0];
        }
        (0..m).map(|i| tau_max * i as f64 / (m - 1) as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_grid.is_empty() {
            return Err(Error::invalid("tau_grid", "M must be ≥ 1"));
        }
        if self.tau_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::invalid("tau_grid", "entries must be finite and ≥ 0"));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps", "N must be ≥ 1"));
        }
        if self.rows == 0 {
            return Err(Error::invalid("rows", "must be ≥ 1"));
        }
        if self.block_size == 0 {
            return Err(Error::invalid("block_size", "must be ≥ 1"));
        }
        if !(self.row_dead_time >= 0.0 && self.row_dead_time.is_finite()) {
            return Err(Error::invalid("row_dead_time", "must be finite and ≥ 0"));
        }
        Ok(())
    }
}

impl Default for MitigationConfig {
    fn default() -> Self {
        Self {
            tau_grid: Self::linear_grid(Self::DEFAULT_M, 8e-6),
            reps: Self::DEFAULT_N,
            rows: 20,
            det_nofb: Self::DEFAULT_DET_NOFB,
            det_fb: Self::DEFAULT_DET_FB,
            block_size: 1,
            row_dead_time: 0.0,
        }
    }
}

/// Fraction of `m = 1` outcomes per (row, τ) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeMatrix {
    pub tau: Vec<f64>,
    pub shots_per_cell: usize,
    pub row_start: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl FringeMatrix {
    fn new(tau: &[f64], shots: usize) -> Self {
        Self {
            tau: tau.to_vec(),
            shots_per_cell: shots,
            row_start: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    /// Average over rows (laboratory time).
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.values.len().max(1) as f64;
        (0..self.tau.len())
            .map(|j| self.values.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeTraceEntry {
    pub row: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub mode_at_start: Mode,
    pub low_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitigationResult {
    pub no_feedback: FringeMatrix,
    pub feedback: FringeMatrix,
    pub trace: Vec<ModeTraceEntry>,
    pub syndromes: u64,
    pub syndrome_errors: u64,
}

/// The interleaved experiment: per τ point and shot, a fixed-frame Ramsey
/// cycle, a syndrome cycle, and a Ramsey cycle at the estimated frequency.
pub fn run_mitigation(lab: &mut Lab, cfg: &MitigationConfig) -> Result<MitigationResult> {
    cfg.validate()?;
    let m = cfg.tau_grid.len();
    let mut nofb = FringeMatrix::new(&cfg.tau_grid, cfg.reps);
    let mut fb = FringeMatrix::new(&cfg.tau_grid, cfg.reps);
    let mut trace = Vec::with_capacity(cfg.rows);
    let (mut syndromes, mut errors) = (0u64, 0u64);
    let f_high = lab.qubit.f_high;
    for row in 0..cfg.rows {
        let (t0, low0, mode0) = (lab.now(), lab.time_in_low(), lab.mode());
        let mut ones_nofb = vec![0usize; m];
        let mut ones_fb = vec![0usize; m];
        for (i, &tau) in cfg.tau_grid.iter().enumerate() {
            let mut done = 0;
            while done < cfg.reps {
                let k = cfg.block_size.min(cfg.reps - done);
                for _ in 0..k {
                    ones_nofb[i] += usize::from(lab.ramsey_cycle_at(f_high, tau, cfg.det_nofb)?.m);
                }
                for _ in 0..k {
                    let syn = lab.syndrome_cycle();
                    syndromes += 1;
                    errors += u64::from(syn.is_error());
                    ones_fb[i] += usize::from(lab.ramsey_cycle(tau, cfg.det_fb)?.m);
                }
                done += k;
            }
        }
        let n = cfg.reps as f64;
        nofb.values.push(ones_nofb.iter().map(|&c| c as f64 / n).collect());
        fb.values.push(ones_fb.iter().map(|&c| c as f64 / n).collect());
        nofb.row_start.push(t0);
        fb.row_start.push(t0);
        let t1 = lab.now();
        trace.push(ModeTraceEntry {
            row,
            t_start: t0,
            t_end: t1,
            mode_at_start: mode0,
            low_fraction: if t1 > t0 { (lab.time_in_low() - low0) / (t1 - t0) } else { 0.0 },
        });
        lab.idle(cfg.row_dead_time);
    }
    Ok(MitigationResult {
        no_feedback: nofb,
        feedback: fb,
        trace,
        syndromes,
        syndrome_errors: errors,
    })
}

// ---------------------------------------------------------------------------
// Active versus blind X gates

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn estimate(&self) -> Estimate {
        let n = self.n.max(1) as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XGateComparison {
    pub shots: u64,
    /// Fraction of syndrome estimates that disagree with the mode at use.
    pub p_err: Estimate,
    /// `1 − P(|1⟩)` after `X_π` at the estimated frequency.
    pub active: Estimate,
    /// Same at the fixed blind frequency.
    pub blind: Estimate,
    /// Same at the true mode's frequency (intrinsic floor).
    pub ideal: Estimate,
}

impl XGateComparison {
    pub fn active_coherent(&self) -> f64 {
        self.active.mean - self.ideal.mean
    }

    pub fn blind_coherent(&self) -> f64 {
        self.blind.mean - self.ideal.mean
    }
}

/// Per shot: syndrome, `X_π` at the estimate, `X_π` at `blind_frequency`,
/// and `X_π` at the true frequency. Errors are exact pre-readout
/// populations, so only the mode and syndrome statistics are sampled.
pub fn run_xgate_comparison(lab: &mut Lab, shots: u64, blind_frequency: f64) -> XGateComparison {
    let (mut perr, mut active, mut blind, mut ideal) = Default::default();
    let acc = |a: &mut Accumulator, x: f64| a.push(x);
    for _ in 0..shots {
        let syn = lab.syndrome_cycle();
        let mode = lab.mode();
        acc(&mut perr, f64::from(u8::from(syn.estimate != mode)));
        let f = lab.ctrl.f_c;
        acc(&mut active, 1.0 - lab.xgate_cycle(f).p_excited);
        acc(&mut blind, 1.0 - lab.xgate_cycle(blind_frequency).p_excited);
        let truth = lab.qubit.frequency(lab.mode());
        acc(&mut ideal, 1.0 - lab.xgate_cycle(truth).p_excited);
    }
    let est = |a: Accumulator| a.estimate();
    XGateComparison {
        shots,
        p_err: est(perr),
        active: est(active),
        blind: est(blind),
        ideal: est(ideal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeeder;

    fn probe(q: &QubitParams) -> f64 {
        0.5 / q.delta_tls()
    }

    #[test]
    fn bandwidth_examples() {
        let t = CycleTiming {
            t_gate: 48e-9,
            tau: 1.33e-6,
            t_readout: 2e-6,
            t_reset: 6e-6,
        };
        let bw = cycle_bandwidth(&t).unwrap();
        assert!((bw - 107.2e3).abs() < 0.1e3, "{bw}");
        let t = CycleTiming {
            t_gate: 0.0,
            tau: 0.5 / 374e3,
            t_readout: 0.0,
            t_reset: 0.0,
        };
        assert!((cycle_bandwidth(&t).unwrap() - 748e3).abs() < 1e-6);
        let zero = CycleTiming {
            t_gate: 0.0,
            tau: 0.0,
            t_readout: 0.0,
            t_reset: 0.0,
        };
        assert!(cycle_bandwidth(&zero).is_err());
    }

    #[test]
    fn decoder_maps_one_to_high() {
        let q = QubitParams::default();
        for exec in [ExecutionModel::default(), ExecutionModel::instantaneous()] {
            let d = SyndromeDecoder::calibrate(&q, &exec, probe(&q)).unwrap();
            assert_eq!(d.one_means, Mode::High);
        }
        assert!(SyndromeDecoder::calibrate(&q, &ExecutionModel::instantaneous(), 1.0 / q.delta_tls()).is_err());
    }

    #[test]
    fn ideal_syndrome_is_always_right() {
        let q = QubitParams::default().noiseless();
        for mode in [Mode::High, Mode::Low] {
            let env = Environment::pinned(q, mode).with_exec(ExecutionModel::instantaneous());
            let mut lab = Lab::new(&env, probe(&q), StreamSeeder::new(1).stream("t", &[])).unwrap();
            for _ in 0..500 {
                let rec = lab.syndrome_cycle();
                assert_eq!(rec.estimate, mode);
                assert_eq!(lab.controller().f_c, q.frequency(mode));
            }
        }
    }

    #[test]
    fn clock_accounts_for_every_interval() {
        let q = QubitParams::default();
        let env = Environment::pinned(q, Mode::High);
        let mut lab = Lab::new(&env, 1.3e-6, StreamSeeder::new(2).stream("t", &[])).unwrap();
        let rec = lab.syndrome_cycle();
        let expected = 2.0 * 48e-9 + 1.3e-6 + q.t_wall();
        assert!((rec.t_end - rec.t_start - expected).abs() < 1e-15);
        assert_eq!(lab.controller().clock, lab.now());
    }

    #[test]
    fn bad_probe_and_tau_rejected() {
        let env = Environment::pinned(QubitParams::default(), Mode::High);
        let rng = StreamSeeder::new(3).stream("t", &[]);
        assert!(Lab::new(&env, 0.0, rng.clone()).is_err());
        let mut lab = Lab::new(&env, 1e-6, rng).unwrap();
        assert!(lab.ramsey_cycle(-1e-9, 0.0).is_err());
    }

    #[test]
    fn zero_delay_ramsey_is_a_full_flip() {
        let mut q = QubitParams::default().without_decoherence();
        q.readout_eps_1to0 = 0.1;
        q.readout_eps_0to1 = 0.0;
        let env = Environment::pinned(q, Mode::High).with_exec(ExecutionModel::instantaneous());
        let mut lab = Lab::new(&env, 1e-6, StreamSeeder::new(4).stream("t", &[])).unwrap();
        let rec = lab.ramsey_cycle_at(q.f_high, 0.0, 2e6).unwrap();
        assert!((rec.p_report_one - 0.9).abs() < 1e-15);
    }

    #[test]
    fn unpinned_frozen_environment_is_degenerate() {
        let env = Environment::new(QubitParams::default(), TelegraphParams::frozen(), None);
        assert_eq!(env.validate(), Err(Error::DegenerateProcess));
    }
}
