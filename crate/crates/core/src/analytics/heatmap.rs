//! Relative improvement of active over blind state preparation across
//! splitting and switching rate.
//!
//! Axes: `x = 2πΔ/Ω` and `y = γ·t_cyc`, with `t_cyc = τ_opt + t_wall` the
//! time of one estimation cycle (`τ_opt` at the given `T2`). Each cell is
//! `log10[(1 − F_blind)/(1 − F_active)]`, where the active error uses the
//! first-order bandwidth budget for `p_err`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{p_err_bandwidth, tau_opt};
use crate::numeric::bisect;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementMap {
    /// `2πΔ/Ω`.
    pub x: Vec<f64>,
    /// `γ·t_cyc`.
    pub y: Vec<f64>,
    /// `values[j][i]` belongs to `(x[i], y[j])`.
    pub values: Vec<Vec<f64>>,
    /// Points `(x, y)` where the improvement crosses zero, one per column
    /// that has a crossing.
    pub zero_contour: Vec<(f64, f64)>,
}

/// One cell of the map.
pub fn improvement_cell(x: f64, y: f64, alpha: f64, t_pi: f64, t2: f64, t_wall: f64) -> Result<f64> {
    if !(x > 0.0) || !(y >= 0.0) || !(t_pi > 0.0) {
        return Err(Error::invalid("grid", "need x > 0, y ≥ 0 and t_pi > 0"));
    }
    let omega = PI / t_pi;
    let delta = x * omega / (2.0 * PI);
    let t_cyc = tau_opt(delta, t2)? + t_wall;
    let gamma = y / t_cyc;
    let p_err = p_err_bandwidth(delta, gamma, alpha, t2, t_wall)?;
    let floor = 1.0 - alpha * (-t_pi / t2).exp();
    let bound = (PI * delta / omega).powi(2);
    let blind = floor + bound;
    let active = floor + p_err * 4.0 * bound;
    Ok((blind / active).log10())
}

pub fn improvement_map(
    x: &[f64],
    y: &[f64],
    alpha: f64,
    t_pi: f64,
    t2: f64,
    t_wall: f64,
) -> Result<ImprovementMap> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("grid", "axes must not be empty"));
    }
    if y.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "y axis must be strictly increasing"));
    }
    let values = y
        .iter()
        .map(|&yj| x.iter().map(|&xi| improvement_cell(xi, yj, alpha, t_pi, t2, t_wall)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mut zero_contour = Vec::new();
    for (i, &xi) in x.iter().enumerate() {
        for j in 1..y.len() {
            let (a, b) = (values[j - 1][i], values[j][i]);
            if a > 0.0 && b <= 0.0 {
                let f = |yy: f64| improvement_cell(xi, yy, alpha, t_pi, t2, t_wall).unwrap_or(f64::NAN);
                let root = bisect(f, y[j - 1], y[j], 1e-12 * y[j].max(1.0)).unwrap_or(y[j]);
                zero_contour.push((xi, root));
                break;
            }
        }
    }
    Ok(ImprovementMap {
        x: x.to_vec(),
        y: y.to_vec(),
        values,
        zero_contour,
    })
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}
