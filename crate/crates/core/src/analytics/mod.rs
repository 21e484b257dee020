//! Closed-form fidelity and estimation-error expressions.
//!
//! These are the oracles the simulator is checked against. Frequencies are in
//! Hz, times in s, `Ω` in rad/s.
//!
//! Sign convention: the frame offset `delta_f` is `f_c − f_H`, so a qubit in
//! mode `ξ` sees the detuning `delta_f + ξ·Δ`, exactly as in
//! [`crate::qubit::detuning`]. In the H frame (`delta_f = 0`) the in-phase
//! contrast between the modes is `α e^{−τ/T2} sin²(πΔτ)`, and that is the
//! curve [`tau_opt`] maximises.

mod ak;
mod heatmap;

pub use ak::{ak_coherence, simulate_coherence, AkCoherence, AkRegime};
pub use heatmap::{improvement_cell, improvement_map, log_axis, ImprovementMap};

use std::f64::consts::PI;

use serde::Serialize;

use crate::qubit::{rabi_transition_probability, QubitParams};
use crate::tls::Mode;
use crate::{Error, Result};

fn envelope(tau: f64, t2: f64) -> f64 {
    if t2.is_infinite() {
        1.0
    } else {
        (-tau / t2).exp()
    }
}

/// `P(m | ξ, τ)` for the Ramsey sequence with visibility `α` and dephasing.
///
/// Exact for the engine when the readout error is symmetric; otherwise the
/// engine's curve is offset by `(ε01 − ε10)/2`.
pub fn ramsey_likelihood(m: u8, mode: Mode, tau: f64, delta_f: f64, q: &QubitParams) -> f64 {
    let sign = if m == 1 { 1.0 } else { -1.0 };
    let detuning = delta_f + f64::from(mode.xi()) * q.delta_tls();
    let osc = (2.0 * PI * detuning * tau).cos();
    0.5 + sign * 0.5 * q.alpha() * envelope(tau, q.t2()) * osc
}

/// `|P(1|H) − P(1|L)| = α e^{−τ/T2} |sin[2π(Δf + Δ/2)τ] sin(πΔτ)|`.
pub fn contrast(delta_tls: f64, tau: f64, alpha: f64, t2: f64, delta_f: f64) -> f64 {
    let a = (2.0 * PI * (delta_f + 0.5 * delta_tls) * tau).sin();
    let b = (PI * delta_tls * tau).sin();
    (alpha * envelope(tau, t2) * a * b).abs()
}

/// Contrast when the projection pulse is turned by a quarter turn:
/// `α e^{−τ/T2} |cos[2π(Δf + Δ/2)τ] sin(πΔτ)|`. In the midpoint frame this
/// is `α e^{−τ/T2}|sin(πΔτ)|`.
pub fn quadrature_contrast(delta_tls: f64, tau: f64, alpha: f64, t2: f64, delta_f: f64) -> f64 {
    let a = (2.0 * PI * (delta_f + 0.5 * delta_tls) * tau).cos();
    let b = (PI * delta_tls * tau).sin();
    (alpha * envelope(tau, t2) * a * b).abs()
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be > 0, got {v}")))
    }
}

/// Probe time maximising the H-frame contrast:
/// `arccos(1/√(1 + 4π²Δ²T2²)) / (πΔ)`.
///
/// Tends to `1/(2Δ)` for long `T2` and to `2T2` for short `T2`.
pub fn tau_opt(delta_tls: f64, t2: f64) -> Result<f64> {
    check_positive("delta_tls", delta_tls)?;
    check_positive("t2", t2)?;
    if t2.is_infinite() {
        return Ok(0.5 / delta_tls);
    }
    let x = 2.0 * PI * delta_tls * t2;
    Ok((1.0 / x.hypot(1.0)).acos() / (PI * delta_tls))
}

/// Argmax of the midpoint-frame quadrature contrast `e^{−τ/T2}|sin(πΔτ)|`:
/// `arctan(πΔT2)/(πΔ)`.
pub fn tau_opt_quadrature(delta_tls: f64, t2: f64) -> Result<f64> {
    check_positive("delta_tls", delta_tls)?;
    check_positive("t2", t2)?;
    Ok((PI * delta_tls * t2).atan() / (PI * delta_tls))
}

/// `S(τ_opt) = α·x²/(1 + x²)·e^{−arctan(x)/(πΔT2)}` with `x = 2πΔT2`.
pub fn max_contrast(delta_tls: f64, t2: f64, alpha: f64) -> Result<f64> {
    check_positive("delta_tls", delta_tls)?;
    check_positive("t2", t2)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    if t2.is_infinite() {
        return Ok(alpha);
    }
    let x = 2.0 * PI * delta_tls * t2;
    Ok(alpha * x * x / (1.0 + x * x) * (-x.atan() / (PI * delta_tls * t2)).exp())
}

/// Single-shot mode-assignment error at the optimal probe, `(1 − S)/2`.
pub fn p_err_static(delta_tls: f64, t2: f64, alpha: f64) -> Result<f64> {
    Ok(((1.0 - max_contrast(delta_tls, t2, alpha)?) / 2.0).clamp(0.0, 0.5))
}

/// X-gate infidelity split into its intrinsic and coherent parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XInfidelity {
    /// `1 − α e^{−t_π/T2}`: SPAM and decoherence during the pulse.
    pub intrinsic: f64,
    /// Loss from driving off resonance.
    pub coherent: f64,
}

impl XInfidelity {
    pub fn total(&self) -> f64 {
        self.intrinsic + self.coherent
    }
}

pub fn intrinsic_x_infidelity(q: &QubitParams) -> f64 {
    1.0 - q.alpha() * envelope(q.t_pi(), q.t2())
}

fn check_pops(pops: (f64, f64)) -> Result<()> {
    let (pl, ph) = pops;
    if !(0.0..=1.0).contains(&pl) || !(0.0..=1.0).contains(&ph) || (pl + ph - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("pops", format!("({pl}, {ph}) is not a distribution")));
    }
    Ok(())
}

/// Infidelity of `X_π` driven at `f_c` on a qubit found in `L` with
/// probability `pops.0` and in `H` with `pops.1`, using the exact Rabi
/// formula for each mode.
pub fn blind_x_infidelity(f_c: f64, pops: (f64, f64), q: &QubitParams) -> Result<XInfidelity> {
    check_pops(pops)?;
    let miss = |f: f64| 1.0 - rabi_transition_probability(f_c - f, q);
    Ok(XInfidelity {
        intrinsic: intrinsic_x_infidelity(q),
        coherent: pops.0 * miss(q.f_low) + pops.1 * miss(q.f_high),
    })
}

/// `P_L f_L + P_H f_H`. Only meaningful while `2πΔ < Ω`; beyond that the
/// mixture fidelity has two separate peaks and this returns
/// [`Error::StrongSplitting`].
pub fn optimal_blind_frequency(pops: (f64, f64), q: &QubitParams) -> Result<f64> {
    check_pops(pops)?;
    let ratio = 2.0 * PI * q.delta_tls() / q.rabi_rate;
    if ratio >= 1.0 {
        return Err(Error::StrongSplitting { ratio });
    }
    Ok(pops.0 * q.f_low + pops.1 * q.f_high)
}

/// Worst-case (equal populations) coherent error of the optimal blind drive,
/// `π²Δ²/Ω²`.
pub fn blind_coherent_bound(q: &QubitParams) -> f64 {
    let r = PI * q.delta_tls() / q.rabi_rate;
    r * r
}

/// `(1 − α e^{−t_π/T2}) + p_err·4π²Δ²/Ω²`.
pub fn active_x_infidelity(p_err: f64, q: &QubitParams) -> Result<XInfidelity> {
    if !(0.0..=0.5).contains(&p_err) {
        return Err(Error::invalid("p_err", format!("must lie in [0, 0.5], got {p_err}")));
    }
    Ok(XInfidelity {
        intrinsic: intrinsic_x_infidelity(q),
        coherent: p_err * 4.0 * blind_coherent_bound(q),
    })
}

/// Variance of the frame phase error from one gate of length `t_g` under
/// blind frame tracking, `(2πΔ t_g)²/4`.
pub fn z_phase_error_variance(delta_tls: f64, t_g: f64) -> Result<f64> {
    if !(t_g >= 0.0) {
        return Err(Error::invalid("t_g", format!("must be ≥ 0, got {t_g}")));
    }
    let phi = 2.0 * PI * delta_tls * t_g;
    Ok(phi * phi / 4.0)
}

/// Midpoint-frame contrast with rectangular pulses of Rabi rate `omega`.
///
/// Without `echo` the two pulses add an effective delay of `2/Ω` to the free
/// evolution. With `echo` the delay is dropped, which gives back the ideal
/// `α e^{−τ/T2}|sin(πΔτ)|`. Note that the simulator (and an exact unitary
/// calculation) shows the `2/Ω` delay for `+X_{π/2} … X_{−π/2}` as well, so
/// the echo form only describes a sequence whose projection phase really
/// cancels the preparation phase.
pub fn finite_pulse_contrast(
    delta_tls: f64,
    tau: f64,
    alpha: f64,
    t2: f64,
    omega: f64,
    echo: bool,
) -> Result<f64> {
    check_positive("omega", omega)?;
    let offset = if echo { 0.0 } else { 2.0 / omega };
    Ok((alpha * envelope(tau, t2) * (PI * delta_tls * (tau + offset)).sin()).abs())
}

/// Argmax of the no-echo finite-pulse contrast:
/// `arctan(πΔT2)/(πΔ) − 2/Ω`.
pub fn tau_opt_finite_pulse(delta_tls: f64, t2: f64, omega: f64) -> Result<f64> {
    check_positive("omega", omega)?;
    Ok(tau_opt_quadrature(delta_tls, t2)? - 2.0 / omega)
}

fn check_bw_inputs(delta_tls: f64, gamma: f64, alpha: f64, t2: f64, t_wall: f64) -> Result<()> {
    check_positive("delta_tls", delta_tls)?;
    check_positive("t2", t2)?;
    for (name, v) in [("gamma", gamma), ("alpha", alpha), ("t_wall", t_wall)] {
        if !(v >= 0.0) {
            return Err(Error::invalid(name, format!("must be ≥ 0, got {v}")));
        }
    }
    if alpha > 1.0 {
        return Err(Error::invalid("alpha", "must be ≤ 1"));
    }
    Ok(())
}

/// First-order error budget
/// `½[(1 − α) + Γ̃/(2Δ) + γ t_wall]`, `Γ̃ = 1/T2 + γ/2`, clamped to
/// `[0, ½]`.
pub fn p_err_bandwidth(delta_tls: f64, gamma: f64, alpha: f64, t2: f64, t_wall: f64) -> Result<f64> {
    check_bw_inputs(delta_tls, gamma, alpha, t2, t_wall)?;
    let g = 1.0 / t2 + gamma / 2.0;
    Ok((0.5 * ((1.0 - alpha) + g / (2.0 * delta_tls) + gamma * t_wall)).clamp(0.0, 0.5))
}

/// The unexpanded form `½[1 − α e^{−Γ̃/(2Δ) − γ t_wall}]`.
pub fn p_err_bandwidth_exact(
    delta_tls: f64,
    gamma: f64,
    alpha: f64,
    t2: f64,
    t_wall: f64,
) -> Result<f64> {
    check_bw_inputs(delta_tls, gamma, alpha, t2, t_wall)?;
    let g = 1.0 / t2 + gamma / 2.0;
    Ok((0.5 * (1.0 - alpha * (-g / (2.0 * delta_tls) - gamma * t_wall).exp())).clamp(0.0, 0.5))
}
