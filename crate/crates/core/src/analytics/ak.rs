//! Coherence of a qubit whose frequency telegraphs between `±Δ/2` around
//! the midpoint frame, with symmetric switching (rate `γ/2` each way).
//!
//! The ensemble coherence obeys `C̈ + γĊ + π²Δ²C = 0`. The solutions are
//! written with a complex `β = √((πΔ)² − (γ/2)²)`, so the overdamped side
//! (`γ > 2πΔ`) follows by analytic continuation: `cos(βt)` and
//! `sin(βt)/β` stay real when `β` is imaginary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::tls::{Mode, Telegraph, TelegraphParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AkRegime {
    Underdamped,
    Critical,
    Overdamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AkCoherence {
    pub regime: AkRegime,
    /// Coherence for equal initial populations.
    pub c_eq: f64,
    pub c_eq_dot: f64,
    /// Coherence given the qubit starts in the `+πΔ` branch.
    #[serde(skip)]
    pub c_plus: Complex64,
    #[serde(skip)]
    pub c_minus: Complex64,
    /// `C_+ − C_−` from `−2iĊ_eq/(πΔ)`.
    #[serde(skip)]
    pub delta_c: Complex64,
    /// `|ΔC| = (πΔ/|β|) e^{−γt/2} |sin βt|` (hyperbolic when overdamped).
    pub s_ak: f64,
}

/// `sin(βt)/β`, continuous through `β = 0`.
fn sin_over(beta: Complex64, t: f64) -> Complex64 {
    let bt = beta * t;
    if bt.norm() < 1e-4 {
        let b2t2 = bt * bt;
        t * (Complex64::new(1.0, 0.0) - b2t2 / 6.0 + b2t2 * b2t2 / 120.0)
    } else {
        bt.sin() / beta
    }
}

pub fn ak_coherence(t: f64, delta_tls: f64, gamma: f64) -> Result<AkCoherence> {
    if !(delta_tls > 0.0) {
        return Err(Error::invalid("delta_tls", format!("must be > 0, got {delta_tls}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma", format!("must be finite and ≥ 0, got {gamma}")));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("must be ≥ 0, got {t}")));
    }
    let w = PI * delta_tls;
    let h = gamma / 2.0;
    let beta = Complex64::new(w * w - h * h, 0.0).sqrt();
    let rel = (w - h) / w;
    let regime = if rel.abs() < 1e-9 {
        AkRegime::Critical
    } else if rel > 0.0 {
        AkRegime::Underdamped
    } else {
        AkRegime::Overdamped
    };

    let env = (-h * t).exp();
    let cos = (beta * t).cos();
    let so = sin_over(beta, t);
    let c_eq = 0.5 * env * (cos + h * so).re;
    let c_eq_dot = -0.5 * env * w * w * so.re;
    let i = Complex64::i();
    let delta_c = -2.0 * i * c_eq_dot / w;

    // Branch solutions C_± = e^{−γt/2}[A e^{−iβt} + (½ − A) e^{iβt}].
    let (c_plus, c_minus) = if regime == AkRegime::Critical {
        (c_eq + delta_c / 2.0, c_eq - delta_c / 2.0)
    } else {
        let branch = |sign: f64| {
            let a = 0.25 * (1.0 - sign * w / beta + i * h / beta);
            env * (a * (-i * beta * t).exp() + (0.5 - a) * (i * beta * t).exp())
        };
        (branch(1.0), branch(-1.0))
    };

    Ok(AkCoherence {
        regime,
        c_eq,
        c_eq_dot,
        c_plus,
        c_minus,
        delta_c,
        s_ak: (w * env * so).norm(),
    })
}

/// Monte Carlo estimate of `½⟨e^{iφ(t)}⟩` over `trajectories` telegraph
/// phase histories, with `φ' = ±πΔ` and a stationary start.
pub fn simulate_coherence<R: Rng + ?Sized>(
    times: &[f64],
    delta_tls: f64,
    gamma: f64,
    trajectories: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::invalid("times", "must be nonnegative and sorted"));
    }
    let params = TelegraphParams::symmetric(gamma)?;
    let w = PI * delta_tls;
    let mut acc = vec![Complex64::new(0.0, 0.0); times.len()];
    for _ in 0..trajectories {
        let mut tel = if gamma > 0.0 {
            Telegraph::new(params, None, rng)?
        } else {
            Telegraph::pinned(if rng.random::<bool>() { Mode::High } else { Mode::Low })
        };
        let mut phi = 0.0;
        let mut now = 0.0;
        for (slot, &t) in acc.iter_mut().zip(times) {
            tel.advance_with(t - now, rng, |mode, piece| {
                phi += if mode == Mode::High { w } else { -w } * piece;
            });
            now = t;
            *slot += Complex64::from_polar(0.5, phi);
        }
    }
    let n = trajectories.max(1) as f64;
    Ok(acc.into_iter().map(|c| c / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = 374e3;

    #[test]
    fn no_switching_limit() {
        for k in 0..50 {
            let t = k as f64 * 0.1e-6;
            let c = ak_coherence(t, D, 0.0).unwrap();
            assert!((c.c_eq - 0.5 * (PI * D * t).cos()).abs() < 1e-12);
            assert!((c.s_ak - (PI * D * t).sin().abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_conditions_and_identities() {
        for gamma in [0.0, 1e5, 2.0 * PI * D, 5e6] {
            let c0 = ak_coherence(0.0, D, gamma).unwrap();
            assert!((c0.c_eq - 0.5).abs() < 1e-15);
            assert!(c0.c_eq_dot.abs() < 1e-9);
            for k in 1..40 {
                let c = ak_coherence(k as f64 * 0.2e-6, D, gamma).unwrap();
                let direct = c.c_plus - c.c_minus;
                assert!((direct - c.delta_c).norm() < 1e-10, "{gamma}: {direct} vs {}", c.delta_c);
                assert!(((c.c_plus + c.c_minus) / 2.0 - c.c_eq).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn regimes() {
        let crit = 2.0 * PI * D;
        assert_eq!(ak_coherence(1e-6, D, crit).unwrap().regime, AkRegime::Critical);
        assert_eq!(ak_coherence(1e-6, D, 0.5 * crit).unwrap().regime, AkRegime::Underdamped);
        assert_eq!(ak_coherence(1e-6, D, 2.0 * crit).unwrap().regime, AkRegime::Overdamped);
        // Continuity across the critical point.
        let a = ak_coherence(1e-6, D, crit * (1.0 - 1e-7)).unwrap().c_eq;
        let b = ak_coherence(1e-6, D, crit).unwrap().c_eq;
        let c = ak_coherence(1e-6, D, crit * (1.0 + 1e-7)).unwrap().c_eq;
        assert!((a - b).abs() < 1e-6 && (c - b).abs() < 1e-6);
    }
}
