//! Bloch-vector dynamics of the qubit in the controller's rotating frame.
//!
//! Conventions:
//!
//! * `z = +1` is the ground state `|0⟩`; relaxation pulls `z` towards `+1`.
//! * The detuning `δ_q = f_c − f_q` (Hz) is the control frequency minus the
//!   instantaneous qubit frequency. The rotating-frame Hamiltonian
//!   `H/h = −(δ_q/2)σ_z` rotates the Bloch vector about `z` by `−2π·δ_q·t`.
//! * A drive with Rabi rate `Ω` and phase `φ` rotates about
//!   `(cos φ, sin φ, 0)` right-handedly; negative nominal angles flip the sign
//!   of `Ω`.
//!
//! With these choices the two-pulse Ramsey sequence
//! `X_{−π/2} → τ → X_{−π/2}` yields `P(1) = ½[1 + cos(2π δ_q τ)]`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::Serialize;

use crate::tls::Mode;
use crate::{Error, Result};

/// Physical constants of the two-mode qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitParams {
    /// Qubit frequency in the `L` mode (Hz).
    pub f_low: f64,
    /// Qubit frequency in the `H` mode (Hz).
    pub f_high: f64,
    /// Rabi rate `Ω` (rad/s).
    pub rabi_rate: f64,
    /// Energy relaxation time (s). `f64::INFINITY` disables relaxation.
    pub t1: f64,
    /// Pure dephasing time (s). `f64::INFINITY` disables dephasing.
    pub t_phi: f64,
    /// Probability of reporting 1 when the qubit is in `|0⟩`.
    pub readout_eps_0to1: f64,
    /// Probability of reporting 0 when the qubit is in `|1⟩`.
    pub readout_eps_1to0: f64,
    /// Readout duration (s).
    pub t_readout: f64,
    /// Resonator reset duration (s).
    pub t_reset: f64,
}

impl QubitParams {
    pub const DEFAULT_F_HIGH: f64 = 5.10e9;
    pub const DEFAULT_DELTA_TLS: f64 = 374e3;
    pub const DEFAULT_T_PI: f64 = 48e-9;
    pub const DEFAULT_T1: f64 = 74e-6;
    pub const DEFAULT_T_PHI: f64 = 61e-6;
    pub const DEFAULT_READOUT_EPS: f64 = 0.03;
    pub const DEFAULT_T_READOUT: f64 = 2e-6;
    pub const DEFAULT_T_RESET: f64 = 6e-6;

    pub fn validate(&self) -> Result<()> {
        if !(self.f_low.is_finite() && self.f_high.is_finite()) {
            return Err(Error::invalid("f_low/f_high", "frequencies must be finite"));
        }
        if !(self.f_high > self.f_low) {
            return Err(Error::invalid(
                "f_high",
                format!("must exceed f_low ({} ≤ {})", self.f_high, self.f_low),
            ));
        }
        if !(self.rabi_rate > 0.0 && self.rabi_rate.is_finite()) {
            return Err(Error::invalid("rabi_rate", "must be positive and finite"));
        }
        for (name, t) in [("t1", self.t1), ("t_phi", self.t_phi)] {
            if !(t > 0.0) {
                return Err(Error::invalid(name, format!("must be > 0, got {t}")));
            }
        }
        for (name, e) in [
            ("readout_eps_0to1", self.readout_eps_0to1),
            ("readout_eps_1to0", self.readout_eps_1to0),
        ] {
            if !(0.0..0.5).contains(&e) {
                return Err(Error::invalid(name, format!("must lie in [0, 0.5), got {e}")));
            }
        }
        for (name, t) in [("t_readout", self.t_readout), ("t_reset", self.t_reset)] {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::invalid(name, format!("must be finite and ≥ 0, got {t}")));
            }
        }
        Ok(())
    }

    pub fn delta_tls(&self) -> f64 {
        self.f_high - self.f_low
    }

    /// `1/T2 = 1/(2T1) + 1/Tφ`.
    pub fn t2(&self) -> f64 {
        let rate = 0.5 / self.t1 + 1.0 / self.t_phi;
        if rate == 0.0 {
            f64::INFINITY
        } else {
            1.0 / rate
        }
    }

    /// Readout visibility `α = 1 − ε01 − ε10`.
    pub fn alpha(&self) -> f64 {
        1.0 - self.readout_eps_0to1 - self.readout_eps_1to0
    }

    pub fn t_pi(&self) -> f64 {
        PI / self.rabi_rate
    }

    /// Dead time after each measurement.
    pub fn t_wall(&self) -> f64 {
        self.t_readout + self.t_reset
    }

    pub fn frequency(&self, mode: Mode) -> f64 {
        match mode {
            Mode::High => self.f_high,
            Mode::Low => self.f_low,
        }
    }

    pub fn midpoint_frequency(&self) -> f64 {
        0.5 * (self.f_low + self.f_high)
    }

    pub fn without_decoherence(mut self) -> Self {
        self.t1 = f64::INFINITY;
        self.t_phi = f64::INFINITY;
        self
    }

    pub fn without_readout_error(mut self) -> Self {
        self.readout_eps_0to1 = 0.0;
        self.readout_eps_1to0 = 0.0;
        self
    }

    pub fn noiseless(self) -> Self {
        self.without_decoherence().without_readout_error()
    }

    pub fn with_symmetric_readout_error(mut self, eps: f64) -> Self {
        self.readout_eps_0to1 = eps;
        self.readout_eps_1to0 = eps;
        self
    }

    /// `P(report 1)` given the probability of the qubit being in `|1⟩`.
    pub fn report_one_probability(&self, p_excited: f64) -> f64 {
        self.readout_eps_0to1 + self.alpha() * p_excited
    }
}

impl Default for QubitParams {
    fn default() -> Self {
        Self {
            f_low: Self::DEFAULT_F_HIGH - Self::DEFAULT_DELTA_TLS,
            f_high: Self::DEFAULT_F_HIGH,
            rabi_rate: PI / Self::DEFAULT_T_PI,
            t1: Self::DEFAULT_T1,
            t_phi: Self::DEFAULT_T_PHI,
            readout_eps_0to1: Self::DEFAULT_READOUT_EPS,
            readout_eps_1to0: Self::DEFAULT_READOUT_EPS,
            t_readout: Self::DEFAULT_T_READOUT,
            t_reset: Self::DEFAULT_T_RESET,
        }
    }
}

/// Control frequency minus instantaneous qubit frequency (Hz).
pub fn detuning(params: &QubitParams, f_c: f64, mode: Mode) -> f64 {
    f_c - params.frequency(mode)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    pub const GROUND: BlochState = BlochState {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Probability of projecting onto `|1⟩`.
    pub fn p_excited(&self) -> f64 {
        (0.5 * (1.0 - self.z)).clamp(0.0, 1.0)
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// An equatorial drive pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Drive phase in the equatorial plane; 0 is the X axis.
    pub axis_phase: f64,
    /// Signed rotation angle.
    pub nominal_angle: f64,
    pub finite_duration: bool,
    /// `|nominal_angle|/Ω` for finite pulses, 0 otherwise.
    pub duration: f64,
}

impl PulseSpec {
    pub fn instantaneous(axis_phase: f64, nominal_angle: f64) -> Self {
        Self {
            axis_phase,
            nominal_angle,
            finite_duration: false,
            duration: 0.0,
        }
    }

    pub fn finite(axis_phase: f64, nominal_angle: f64, rabi_rate: f64) -> Self {
        Self {
            axis_phase,
            nominal_angle,
            finite_duration: true,
            duration: nominal_angle.abs() / rabi_rate,
        }
    }

    /// Finite or instantaneous depending on `finite`.
    pub fn build(axis_phase: f64, nominal_angle: f64, finite: bool, rabi_rate: f64) -> Self {
        if finite {
            Self::finite(axis_phase, nominal_angle, rabi_rate)
        } else {
            Self::instantaneous(axis_phase, nominal_angle)
        }
    }

    pub fn validate(&self, params: &QubitParams) -> Result<()> {
        if !(self.duration >= 0.0) {
            return Err(Error::invalid("duration", "must be ≥ 0"));
        }
        if self.finite_duration {
            let expected = self.nominal_angle.abs() / params.rabi_rate;
            if (self.duration - expected).abs() > 1e-12 * expected.max(1e-30) {
                return Err(Error::invalid(
                    "duration",
                    format!("finite pulse must last |angle|/Ω = {expected}, got {}", self.duration),
                ));
            }
        }
        Ok(())
    }
}

/// An affine map `v ↦ M v + b` on Bloch vectors.
///
/// Every operation of the engine is affine, so fixed gate slots can be
/// precomputed and composed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub m: [[f64; 3]; 3],
    pub b: [f64; 3],
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        b: [0.0; 3],
    };

    /// Right-handed rotation by `|w|` about `w/|w|`.
    pub fn rotation(w: [f64; 3]) -> Self {
        let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if theta == 0.0 {
            return Self::IDENTITY;
        }
        let k = [w[0] / theta, w[1] / theta, w[2] / theta];
        let (s, c) = theta.sin_cos();
        let t = 1.0 - c;
        let m = [
            [c + t * k[0] * k[0], t * k[0] * k[1] - s * k[2], t * k[0] * k[2] + s * k[1]],
            [t * k[1] * k[0] + s * k[2], c + t * k[1] * k[1], t * k[1] * k[2] - s * k[0]],
            [t * k[2] * k[0] - s * k[1], t * k[2] * k[1] + s * k[0], c + t * k[2] * k[2]],
        ];
        Self { m, b: [0.0; 3] }
    }

    /// Transverse decay over `dt` and relaxation of `z` towards `+1`.
    pub fn relaxation(dt: f64, params: &QubitParams) -> Self {
        let e2 = decay(dt, params.t2());
        let e1 = decay(dt, params.t1);
        Self {
            m: [[e2, 0.0, 0.0], [0.0, e2, 0.0], [0.0, 0.0, e1]],
            b: [0.0, 0.0, 1.0 - e1],
        }
    }

    /// Uniform contraction towards the origin.
    pub fn depolarizing(shrink: f64) -> Self {
        Self {
            m: [[shrink, 0.0, 0.0], [0.0, shrink, 0.0], [0.0, 0.0, shrink]],
            b: [0.0; 3],
        }
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &AffineMap) -> AffineMap {
        let mut m = [[0.0; 3]; 3];
        let mut b = other.b;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| other.m[i][k] * self.m[k][j]).sum();
            }
            b[i] += (0..3).map(|k| other.m[i][k] * self.b[k]).sum::<f64>();
        }
        AffineMap { m, b }
    }

    #[inline]
    pub fn apply(&self, s: BlochState) -> BlochState {
        let v = s.to_array();
        let mut out = self.b;
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.m[i][0] * v[0] + self.m[i][1] * v[1] + self.m[i][2] * v[2];
        }
        BlochState::from_array(out)
    }
}

fn decay(dt: f64, t: f64) -> f64 {
    if t.is_infinite() {
        1.0
    } else {
        (-dt / t).exp()
    }
}

/// Map for free precession at detuning `delta_q` for `dt`, with decoherence.
pub fn free_map(delta_q: f64, dt: f64, params: &QubitParams) -> AffineMap {
    AffineMap::rotation([0.0, 0.0, -TAU * delta_q * dt]).then(&AffineMap::relaxation(dt, params))
}

/// Map for a drive pulse at detuning `delta_q`.
pub fn pulse_map(pulse: &PulseSpec, delta_q: f64, params: &QubitParams) -> AffineMap {
    let (s, c) = pulse.axis_phase.sin_cos();
    if !pulse.finite_duration {
        let a = pulse.nominal_angle;
        return AffineMap::rotation([a * c, a * s, 0.0]);
    }
    let omega = params.rabi_rate.copysign(pulse.nominal_angle);
    let t = pulse.duration;
    AffineMap::rotation([omega * c * t, omega * s * t, -TAU * delta_q * t])
        .then(&AffineMap::relaxation(t, params))
}

/// Free precession for `dt` at detuning `delta_q`, then decoherence.
///
/// Panics if `dt` is negative.
pub fn free_evolve(state: BlochState, delta_q: f64, dt: f64, params: &QubitParams) -> BlochState {
    assert!(dt >= 0.0, "free evolution needs dt ≥ 0, got {dt}");
    free_map(delta_q, dt, params).apply(state)
}

/// Applies `pulse` with the qubit detuned by `delta_q` from the drive.
///
/// Finite pulses rotate at the generalized Rabi rate about an axis tilted out
/// of the equator; decoherence over the pulse is applied afterwards.
pub fn apply_pulse(
    state: BlochState,
    pulse: &PulseSpec,
    delta_q: f64,
    params: &QubitParams,
) -> BlochState {
    pulse_map(pulse, delta_q, params).apply(state)
}

/// Excited-state population after a finite `X_π` from `|0⟩` at detuning
/// `delta_q` (Hz).
pub fn rabi_transition_probability(delta_q: f64, params: &QubitParams) -> f64 {
    let omega2 = params.rabi_rate * params.rabi_rate;
    let d = TAU * delta_q;
    let gen2 = omega2 + d * d;
    let s = (PI * gen2.sqrt() / (2.0 * params.rabi_rate)).sin();
    omega2 / gen2 * s * s
}

/// Projective `z` measurement followed by a classical assignment error.
///
/// Returns the reported outcome and the post-measurement state, which is the
/// pole of the *true* projection.
pub fn measure<R: Rng + ?Sized>(
    state: BlochState,
    params: &QubitParams,
    rng: &mut R,
) -> (u8, BlochState) {
    let excited = rng.random::<f64>() < state.p_excited();
    let flip = if excited {
        params.readout_eps_1to0
    } else {
        params.readout_eps_0to1
    };
    let misreport = flip > 0.0 && rng.random::<f64>() < flip;
    let reported = u8::from(excited != misreport);
    let collapsed = if excited {
        BlochState::new(0.0, 0.0, -1.0)
    } else {
        BlochState::GROUND
    };
    (reported, collapsed)
}

/// Ideal re-initialisation into `|0⟩`. The caller advances the clock by the
/// readout and reset times.
pub fn reset(_params: &QubitParams) -> BlochState {
    BlochState::GROUND
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeeder;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: BlochState, b: BlochState, tol: f64) -> bool {
        (a.x - b.x).abs() < tol && (a.y - b.y).abs() < tol && (a.z - b.z).abs() < tol
    }

    #[test]
    fn defaults_reproduce_derived_constants() {
        let p = QubitParams::default();
        p.validate().unwrap();
        assert!((p.t2() - 43.2e-6).abs() < 0.1e-6, "t2 = {}", p.t2());
        assert!((p.alpha() - 0.94).abs() < 1e-15);
        assert!((p.t_pi() - 48e-9).abs() < 1e-20);
        assert!((p.delta_tls() - 374e3).abs() < 1e-6);
    }

    #[test]
    fn validation_errors() {
        let mut p = QubitParams::default();
        p.f_low = p.f_high;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "f_high", .. })));
        let mut p = QubitParams::default();
        p.readout_eps_1to0 = 0.5;
        assert!(p.validate().is_err());
        let mut p = QubitParams::default();
        p.t1 = 0.0;
        assert!(p.validate().is_err());
        assert!(QubitParams::default().noiseless().validate().is_ok());
    }

    #[test]
    fn detuning_examples() {
        let p = QubitParams::default();
        assert_eq!(detuning(&p, p.f_high, Mode::High), 0.0);
        assert!((detuning(&p, p.f_high, Mode::Low) - p.delta_tls()).abs() < 1e-6);
        let mid = p.midpoint_frequency();
        assert!((detuning(&p, mid, Mode::High) + p.delta_tls() / 2.0).abs() < 1e-6);
    }

    #[test]
    fn free_evolution_examples() {
        let p = QubitParams::default().noiseless();
        let s = BlochState::new(1.0, 0.0, 0.0);
        assert_eq!(free_evolve(s, 0.0, 1e-6, &p), s);
        let half = free_evolve(s, 0.5e6, 1e-6, &p);
        assert!(close(half, BlochState::new(-1.0, 0.0, 0.0), 1e-12));

        let p = QubitParams::default();
        let t2 = p.t2();
        let d = free_evolve(s, 0.0, t2, &p);
        assert!((d.x - (-1.0f64).exp()).abs() < 1e-12);
        assert!(d.y.abs() < 1e-15);
    }

    #[test]
    fn relaxation_targets_ground() {
        let p = QubitParams::default();
        let excited = BlochState::new(0.0, 0.0, -1.0);
        let s = free_evolve(excited, 0.0, p.t1, &p);
        assert!((s.z - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_and_resonant_flip() {
        let p = QubitParams::default().noiseless();
        let s = apply_pulse(BlochState::GROUND, &PulseSpec::instantaneous(0.0, -FRAC_PI_2), 0.0, &p);
        assert!(close(s, BlochState::new(0.0, 1.0, 0.0), 1e-15));
        let flip = apply_pulse(BlochState::GROUND, &PulseSpec::finite(0.0, PI, p.rabi_rate), 0.0, &p);
        assert!((flip.z + 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_rabi_full_turn() {
        let p = QubitParams::default().noiseless();
        let delta = 3f64.sqrt() * p.rabi_rate / TAU;
        let s = apply_pulse(BlochState::GROUND, &PulseSpec::finite(0.0, PI, p.rabi_rate), delta, &p);
        assert!((s.z - 1.0).abs() < 1e-12);
        assert!(rabi_transition_probability(delta, &p).abs() < 1e-30);
    }

    #[test]
    fn rabi_formula_examples() {
        let p = QubitParams::default();
        assert!((rabi_transition_probability(0.0, &p) - 1.0).abs() < 1e-15);
        // Midpoint drive detunes each mode by Δ/2 = 187 kHz.
        let err = 1.0 - rabi_transition_probability(187e3, &p);
        assert!((err - 3.2e-4).abs() < 0.05e-4, "err = {err}");
    }

    #[test]
    fn rabi_formula_matches_engine_flip() {
        let p = QubitParams::default().noiseless();
        for k in 0..40 {
            let delta = -5e6 + 0.25e6 * k as f64;
            let s = apply_pulse(BlochState::GROUND, &PulseSpec::finite(0.3, PI, p.rabi_rate), delta, &p);
            assert!((s.p_excited() - rabi_transition_probability(delta, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_statistics_edge_cases() {
        let mut rng = StreamSeeder::new(3).stream("measure", &[]);
        let clean = QubitParams::default().without_readout_error();
        for _ in 0..1000 {
            assert_eq!(measure(BlochState::GROUND, &clean, &mut rng).0, 0);
        }
        let (m, post) = measure(BlochState::new(0.0, 0.0, -1.0), &clean, &mut rng);
        assert_eq!((m, post), (1, BlochState::new(0.0, 0.0, -1.0)));
    }

    #[test]
    fn collapse_follows_true_projection() {
        let mut p = QubitParams::default();
        p.readout_eps_0to1 = 0.49;
        let mut rng = StreamSeeder::new(5).stream("measure", &[]);
        for _ in 0..200 {
            let (_, post) = measure(BlochState::GROUND, &p, &mut rng);
            assert_eq!(post, BlochState::GROUND);
        }
    }

    #[test]
    fn reset_compositions() {
        let p = QubitParams::default().noiseless();
        assert_eq!(reset(&p), BlochState::GROUND);
        let s = apply_pulse(reset(&p), &PulseSpec::instantaneous(0.0, PI), 0.0, &p);
        assert!((s.z + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pulse_spec_validation() {
        let p = QubitParams::default();
        assert!(PulseSpec::finite(0.0, -FRAC_PI_2, p.rabi_rate).validate(&p).is_ok());
        let mut bad = PulseSpec::finite(0.0, PI, p.rabi_rate);
        bad.duration *= 2.0;
        assert!(bad.validate(&p).is_err());
    }
}
