//! Weighted nonlinear least squares.
//!
//! [`levenberg_marquardt`] is a small dense solver for models with a handful
//! of parameters. On top of it sit the randomized-benchmarking decay fit
//! ([`fit_exponential`]) and the Ramsey-fringe fits ([`fit_sinusoids`]).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::TAU;

use crate::{Error, Result};

/// A model `y = f(x; p)` with analytic gradient in `p`.
pub trait Model {
    fn n_params(&self) -> usize;
    /// Returns `f(x; p)` and writes `∂f/∂p` into `grad`.
    fn eval(&self, p: &[f64], x: f64, grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub params: Vec<f64>,
    /// Covariance scaled by the reduced chi-square.
    pub covariance: DMatrix<f64>,
    /// `(JᵀWJ)⁻¹` without the scaling; the covariance when the weights are
    /// true inverse variances.
    pub curvature_inverse: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
}

impl LeastSquares {
    pub fn std_err(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    /// Standard error from [`LeastSquares::curvature_inverse`].
    pub fn absolute_std_err(&self, i: usize) -> f64 {
        self.curvature_inverse[(i, i)].max(0.0).sqrt()
    }
}

fn chi2<M: Model>(model: &M, p: &[f64], x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let mut g = vec![0.0; model.n_params()];
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| {
            let r = yi - model.eval(p, xi, &mut g);
            wi * r * r
        })
        .sum()
}

/// Normal-equation pieces `JᵀWJ` and `JᵀWr`.
fn normal_equations<M: Model>(
    model: &M,
    p: &[f64],
    x: &[f64],
    y: &[f64],
    w: &[f64],
) -> (DMatrix<f64>, DVector<f64>) {
    let k = model.n_params();
    let mut a = DMatrix::zeros(k, k);
    let mut g = DVector::zeros(k);
    let mut grad = vec![0.0; k];
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        let r = yi - model.eval(p, xi, &mut grad);
        for i in 0..k {
            g[i] += wi * grad[i] * r;
            for j in 0..=i {
                a[(i, j)] += wi * grad[i] * grad[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
        }
    }
    (a, g)
}

/// Levenberg–Marquardt from `p0`.
///
/// Fails if the normal matrix is singular at the solution or the iteration
/// does not settle within the iteration budget.
pub fn levenberg_marquardt<M: Model>(
    model: &M,
    x: &[f64],
    y: &[f64],
    w: &[f64],
    p0: &[f64],
) -> Result<LeastSquares> {
    let k = model.n_params();
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::FitFailed("mismatched data lengths".into()));
    }
    if x.len() < k {
        return Err(Error::FitFailed(format!("{} points for {k} parameters", x.len())));
    }
    if y.iter().chain(w).any(|v| !v.is_finite()) || w.iter().any(|&v| v < 0.0) {
        return Err(Error::FitFailed("non-finite data or negative weights".into()));
    }
    let mut p = p0.to_vec();
    let mut cost = chi2(model, &p, x, y, w);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 1000 {
        iterations += 1;
        let (a, g) = normal_equations(model, &p, x, y, w);
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for i in 0..k {
                damped[(i, i)] += lambda * a[(i, i)].max(1e-300);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_cost = chi2(model, &trial, x, y, w);
            if trial_cost.is_finite() && trial_cost <= cost {
                let small_step = step
                    .iter()
                    .zip(&p)
                    .all(|(s, v)| s.abs() <= 1e-13 * (v.abs() + 1e-13));
                let small_gain = cost - trial_cost <= 1e-15 * cost.max(1e-300);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if small_step || small_gain || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !improved {
            // No downhill step at any damping: we sit at a minimum.
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FitFailed("iteration budget exhausted".into()));
    }
    let (a, _) = normal_equations(model, &p, x, y, w);
    let inv = invert_spd(&a).ok_or_else(|| Error::FitFailed("singular normal matrix".into()))?;
    let dof = x.len().saturating_sub(k);
    let scale = if dof > 0 { cost / dof as f64 } else { 0.0 };
    Ok(LeastSquares {
        params: p,
        covariance: &inv * scale,
        curvature_inverse: inv,
        chi2: cost,
        dof,
        iterations,
    })
}

/// Inverse of a symmetric positive-definite matrix, rejecting ill-conditioned
/// ones.
fn invert_spd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = a.nrows();
    // Jacobi scaling so the condition check ignores parameter units.
    let d: Vec<f64> = (0..k).map(|i| a[(i, i)]).collect();
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let scaled = DMatrix::from_fn(k, k, |i, j| a[(i, j)] / (d[i] * d[j]).sqrt());
    let eig = scaled.clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 1e-13 * hi) {
        return None;
    }
    let inv = scaled.cholesky()?.inverse();
    Some(DMatrix::from_fn(k, k, |i, j| inv[(i, j)] / (d[i] * d[j]).sqrt()))
}

/// Linear weighted least squares `y ≈ X β`.
fn linear_lsq(design: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Option<DVector<f64>> {
    let k = design.ncols();
    let mut a = DMatrix::zeros(k, k);
    let mut g = DVector::zeros(k);
    for (row, (&yi, &wi)) in y.iter().zip(w).enumerate() {
        for i in 0..k {
            g[i] += wi * design[(row, i)] * yi;
            for j in 0..k {
                a[(i, j)] += wi * design[(row, i)] * design[(row, j)];
            }
        }
    }
    a.cholesky().map(|c| c.solve(&g))
}

// ---------------------------------------------------------------------------
// Randomized-benchmarking decay

struct ExpDecay;

impl Model for ExpDecay {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, p: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        let (a, decay, _) = (p[0], p[1], p[2]);
        let pl = decay.powf(x);
        grad[0] = pl;
        grad[1] = if x == 0.0 { 0.0 } else { a * x * decay.powf(x - 1.0) };
        grad[2] = 1.0;
        a * pl + p[2]
    }
}

/// Fit of `A·p^L + B` to survival data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub amplitude: f64,
    pub decay: f64,
    pub offset: f64,
    pub amplitude_se: f64,
    pub decay_se: f64,
    pub offset_se: f64,
    /// Per-Clifford infidelity `(1 − p)/2`.
    pub r: f64,
    pub r_se: f64,
    pub gates_per_clifford: f64,
    /// `r / gates_per_clifford`.
    pub r_native: f64,
    pub r_native_se: f64,
    pub chi2: f64,
    pub dof: usize,
}

impl FitResult {
    fn from_params(a: f64, p: f64, b: f64, se: [f64; 3], gpc: f64, chi2: f64, dof: usize) -> Self {
        let r = (1.0 - p) / 2.0;
        let r_se = se[1] / 2.0;
        Self {
            amplitude: a,
            decay: p,
            offset: b,
            amplitude_se: se[0],
            decay_se: se[1],
            offset_se: se[2],
            r,
            r_se,
            gates_per_clifford: gpc,
            r_native: r / gpc,
            r_native_se: r_se / gpc,
            chi2,
            dof,
        }
    }
}

/// Weighted fit of `A·p^L + B`.
///
/// The offset starts at 0.5. Constant survivals are the `p = 1` boundary and
/// return `r = 0`. A decay outside `(0, 1]` or a singular fit is reported as
/// [`Error::FitFailed`]. Standard errors are scaled by the reduced
/// chi-square, so only the relative size of the weights matters.
pub fn fit_exponential(
    depths: &[f64],
    survivals: &[f64],
    weights: &[f64],
    gates_per_clifford: f64,
) -> Result<FitResult> {
    check_decay_data(depths, survivals, weights, gates_per_clifford)?;
    if let Some(flat) = flat_fit(depths, survivals, gates_per_clifford) {
        return Ok(flat);
    }
    let p0 = seed_decay(depths, survivals, weights);
    decay_fit(depths, survivals, weights, gates_per_clifford, p0, false)
}

/// Fit of survival fractions measured with `shots[i]` shots each.
///
/// Weights are binomial inverse variances `n/(s(1 − s))` evaluated on the
/// fitted curve (refined over a few passes), and the standard errors come
/// from the unscaled curvature because the noise level is known.
pub fn fit_exponential_binomial(
    depths: &[f64],
    survivals: &[f64],
    shots: &[f64],
    gates_per_clifford: f64,
) -> Result<FitResult> {
    check_decay_data(depths, survivals, shots, gates_per_clifford)?;
    if let Some(flat) = flat_fit(depths, survivals, gates_per_clifford) {
        return Ok(flat);
    }
    let mut p = seed_decay(depths, survivals, shots);
    let mut fit = decay_fit(depths, survivals, shots, gates_per_clifford, p, true)?;
    for _ in 0..3 {
        let w: Vec<f64> = depths
            .iter()
            .zip(shots)
            .map(|(&l, &n)| {
                let floor = 0.5 / n.max(1.0);
                let s = (fit.amplitude * fit.decay.powf(l) + fit.offset).clamp(floor, 1.0 - floor);
                n / (s * (1.0 - s))
            })
            .collect();
        p = [fit.amplitude, fit.decay, fit.offset];
        fit = decay_fit(depths, survivals, &w, gates_per_clifford, p, true)?;
    }
    Ok(fit)
}

fn check_decay_data(depths: &[f64], survivals: &[f64], weights: &[f64], gpc: f64) -> Result<()> {
    if depths.len() != survivals.len() || depths.len() != weights.len() {
        return Err(Error::FitFailed("mismatched data lengths".into()));
    }
    let mut distinct: Vec<f64> = depths.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::FitFailed("need at least three distinct depths".into()));
    }
    if survivals.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::FitFailed("survival outside [0, 1]".into()));
    }
    if !(gpc > 0.0) {
        return Err(Error::invalid("gates_per_clifford", "must be positive"));
    }
    Ok(())
}

/// Constant data sits on the `p = 1` boundary.
fn flat_fit(depths: &[f64], survivals: &[f64], gpc: f64) -> Option<FitResult> {
    let (lo, hi) = survivals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    (hi - lo < 1e-12).then(|| FitResult::from_params(0.0, 1.0, lo, [0.0; 3], gpc, 0.0, depths.len() - 3))
}

/// Scans the decay with `(A, B)` solved linearly.
fn seed_decay(depths: &[f64], survivals: &[f64], weights: &[f64]) -> [f64; 3] {
    let design_for = |p: f64| DMatrix::from_fn(depths.len(), 2, |i, j| if j == 0 { p.powf(depths[i]) } else { 1.0 });
    let max_depth = depths.iter().cloned().fold(1.0, f64::max);
    let mut best: Option<([f64; 3], f64)> = None;
    for i in 0..=400 {
        // Decay constants from 1e-3/L_max to 10.
        let k = (1e-3 / max_depth) * (1e4 * max_depth).powf(i as f64 / 400.0);
        let p = (-k).exp();
        let Some(beta) = linear_lsq(&design_for(p), survivals, weights) else { continue };
        let params = [beta[0], p, beta[1]];
        let cost = chi2(&ExpDecay, &params, depths, survivals, weights);
        if best.is_none_or(|b| cost < b.1) {
            best = Some((params, cost));
        }
    }
    best.map_or([0.5, 0.99, 0.5], |b| b.0)
}

fn decay_fit(
    depths: &[f64],
    survivals: &[f64],
    weights: &[f64],
    gpc: f64,
    p0: [f64; 3],
    absolute: bool,
) -> Result<FitResult> {
    let fit = levenberg_marquardt(&ExpDecay, depths, survivals, weights, &p0)?;
    let (a, p, b) = (fit.params[0], fit.params[1], fit.params[2]);
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::FitFailed(format!("decay {p} outside (0, 1]")));
    }
    let se = |i| if absolute { fit.absolute_std_err(i) } else { fit.std_err(i) };
    Ok(FitResult::from_params(a, p, b, [se(0), se(1), se(2)], gpc, fit.chi2, fit.dof))
}

// ---------------------------------------------------------------------------
// Fringe fits

/// Frequency of one sinusoidal component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    /// Fitted, starting from the given value (Hz).
    Free(f64),
    /// Held at the given value (Hz).
    Fixed(f64),
}

/// `c + e^{−gτ} Σ_j [a_j cos(2πf_jτ) + b_j sin(2πf_jτ)]`.
struct Sinusoids {
    freqs: Vec<Frequency>,
    free_index: Vec<Option<usize>>,
    n_free: usize,
}

impl Sinusoids {
    fn new(freqs: &[Frequency]) -> Self {
        let mut n_free = 0;
        let free_index = freqs
            .iter()
            .map(|f| match f {
                Frequency::Free(_) => {
                    n_free += 1;
                    Some(n_free - 1)
                }
                Frequency::Fixed(_) => None,
            })
            .collect();
        Self {
            freqs: freqs.to_vec(),
            free_index,
            n_free,
        }
    }

    // Layout: [c, g, free freqs..., (a_j, b_j)...]
    fn amp_offset(&self) -> usize {
        2 + self.n_free
    }

    fn freq(&self, p: &[f64], j: usize) -> f64 {
        match (self.freqs[j], self.free_index[j]) {
            (_, Some(i)) => p[2 + i],
            (Frequency::Fixed(f), None) | (Frequency::Free(f), None) => f,
        }
    }
}

impl Model for Sinusoids {
    fn n_params(&self) -> usize {
        2 + self.n_free + 2 * self.freqs.len()
    }

    fn eval(&self, p: &[f64], t: f64, grad: &mut [f64]) -> f64 {
        let env = (-p[1] * t).exp();
        let off = self.amp_offset();
        let mut osc = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for j in 0..self.freqs.len() {
            let f = self.freq(p, j);
            let (s, c) = (TAU * f * t).sin_cos();
            let (a, b) = (p[off + 2 * j], p[off + 2 * j + 1]);
            osc += a * c + b * s;
            grad[off + 2 * j] = env * c;
            grad[off + 2 * j + 1] = env * s;
            if let Some(i) = self.free_index[j] {
                grad[2 + i] = env * TAU * t * (b * c - a * s);
            }
        }
        grad[0] = 1.0;
        grad[1] = -t * env * osc;
        p[0] + env * osc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Component {
    pub frequency: f64,
    /// Zero for fixed frequencies.
    pub frequency_se: f64,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

impl Component {
    pub fn amplitude(&self) -> f64 {
        self.cos_amp.hypot(self.sin_amp)
    }

    /// Phase `φ` in `A cos(2πfτ − φ)`.
    pub fn phase(&self) -> f64 {
        self.sin_amp.atan2(self.cos_amp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinusoidFit {
    pub offset: f64,
    /// Envelope decay rate `g` (1/s).
    pub decay_rate: f64,
    pub components: Vec<Component>,
    pub chi2: f64,
    pub dof: usize,
}

/// Fits a damped sum of sinusoids sharing one envelope.
///
/// `decay_rate` seeds the envelope rate; amplitudes are seeded by a linear
/// solve at the initial frequencies.
pub fn fit_sinusoids(
    tau: &[f64],
    values: &[f64],
    weights: &[f64],
    freqs: &[Frequency],
    decay_rate: f64,
) -> Result<SinusoidFit> {
    let model = Sinusoids::new(freqs);
    let n_comp = freqs.len();
    let f0: Vec<f64> = freqs
        .iter()
        .map(|f| match *f {
            Frequency::Free(v) | Frequency::Fixed(v) => v,
        })
        .collect();
    let design = DMatrix::from_fn(tau.len(), 1 + 2 * n_comp, |i, j| {
        if j == 0 {
            return 1.0;
        }
        let comp = (j - 1) / 2;
        let env = (-decay_rate * tau[i]).exp();
        let phase = TAU * f0[comp] * tau[i];
        env * if (j - 1) % 2 == 0 { phase.cos() } else { phase.sin() }
    });
    let beta = linear_lsq(&design, values, weights)
        .ok_or_else(|| Error::FitFailed("singular linear seed".into()))?;
    let mut p0 = vec![beta[0], decay_rate];
    p0.extend(freqs.iter().filter_map(|f| match *f {
        Frequency::Free(v) => Some(v),
        Frequency::Fixed(_) => None,
    }));
    p0.extend(beta.iter().skip(1));
    let fit = levenberg_marquardt(&model, tau, values, weights, &p0)?;
    let off = model.amp_offset();
    let components = (0..n_comp)
        .map(|j| Component {
            frequency: model.freq(&fit.params, j),
            frequency_se: model.free_index[j].map_or(0.0, |i| fit.std_err(2 + i)),
            cos_amp: fit.params[off + 2 * j],
            sin_amp: fit.params[off + 2 * j + 1],
        })
        .collect();
    Ok(SinusoidFit {
        offset: fit.params[0],
        decay_rate: fit.params[1],
        components,
        chi2: fit.chi2,
        dof: fit.dof,
    })
}
