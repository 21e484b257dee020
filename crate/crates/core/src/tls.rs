//! The two-state telegraph process `ξ(t)` that shifts the qubit frequency.
//!
//! `ξ = 0` is the high-frequency mode `H`, `ξ = 1` the low-frequency mode `L`.
//! Switching is a continuous-time Markov chain with rate `gamma_hl` for
//! `H → L` and `gamma_lh` for `L → H`. A single rate `γ` in the symmetric
//! convention corresponds to `gamma_hl = gamma_lh = γ/2`, so that mode
//! correlations decay as `e^{-γt}`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "H")]
    High,
    #[serde(rename = "L")]
    Low,
}

impl Mode {
    /// The telegraph variable: 0 for `H`, 1 for `L`.
    pub fn xi(self) -> u8 {
        match self {
            Mode::High => 0,
            Mode::Low => 1,
        }
    }

    pub fn from_xi(xi: u8) -> Self {
        if xi == 0 {
            Mode::High
        } else {
            Mode::Low
        }
    }

    pub fn other(self) -> Self {
        match self {
            Mode::High => Mode::Low,
            Mode::Low => Mode::High,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::High => "H",
            Mode::Low => "L",
        }
    }
}

/// Switching rates in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelegraphParams {
    /// Rate of `H → L` transitions.
    pub gamma_hl: f64,
    /// Rate of `L → H` transitions.
    pub gamma_lh: f64,
}

impl TelegraphParams {
    pub fn new(gamma_hl: f64, gamma_lh: f64) -> Result<Self> {
        let p = Self { gamma_hl, gamma_lh };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric switching with total correlation rate `gamma`.
    pub fn symmetric(gamma: f64) -> Result<Self> {
        Self::new(gamma / 2.0, gamma / 2.0)
    }

    /// A process that never switches.
    pub fn frozen() -> Self {
        Self {
            gamma_hl: 0.0,
            gamma_lh: 0.0,
        }
    }

    /// Symmetric process with the given mean dwell time in each mode.
    pub fn with_mean_dwell(dwell: f64) -> Result<Self> {
        if !(dwell > 0.0) {
            return Err(Error::invalid("dwell", "mean dwell time must be positive"));
        }
        Self::new(1.0 / dwell, 1.0 / dwell)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_hl", self.gamma_hl), ("gamma_lh", self.gamma_lh)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("rate must be finite and ≥ 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn total_rate(&self) -> f64 {
        self.gamma_hl + self.gamma_lh
    }

    /// Rate of leaving `mode`.
    pub fn exit_rate(&self, mode: Mode) -> f64 {
        match mode {
            Mode::High => self.gamma_hl,
            Mode::Low => self.gamma_lh,
        }
    }
}

/// Instantaneous configuration of the defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsState {
    pub mode: Mode,
    /// Time of the most recent switch (or of initialisation).
    pub t_last_flip: f64,
    /// Current time of this state.
    pub time: f64,
}

impl TlsState {
    pub fn new(mode: Mode, time: f64) -> Self {
        Self {
            mode,
            t_last_flip: time,
            time,
        }
    }

    pub fn xi(&self) -> u8 {
        self.mode.xi()
    }
}

/// Stationary occupation `(P(L), P(H))`.
pub fn stationary_distribution(params: &TelegraphParams) -> Result<(f64, f64)> {
    let total = params.total_rate();
    if total <= 0.0 {
        return Err(Error::DegenerateProcess);
    }
    Ok((params.gamma_hl / total, params.gamma_lh / total))
}

/// Probability that the mode after `dt` differs from `from`.
pub fn flip_probability(params: &TelegraphParams, from: Mode, dt: f64) -> Result<f64> {
    if !(dt >= 0.0) {
        return Err(Error::invalid("dt", format!("must be ≥ 0, got {dt}")));
    }
    let total = params.total_rate();
    if total <= 0.0 || dt == 0.0 {
        return Ok(0.0);
    }
    // Stationary weight of the mode we might flip into.
    let other = params.exit_rate(from) / total;
    Ok(other * -(-total * dt).exp_m1())
}

/// Exact jump simulation of the process over `[t, t + dt]`.
pub fn evolve<R: Rng + ?Sized>(
    state: TlsState,
    params: &TelegraphParams,
    dt: f64,
    rng: &mut R,
) -> Result<TlsState> {
    if !(dt >= 0.0) {
        return Err(Error::invalid("dt", format!("must be ≥ 0, got {dt}")));
    }
    let mut s = state;
    let end = state.time + dt;
    loop {
        let rate = params.exit_rate(s.mode);
        if rate <= 0.0 {
            break;
        }
        let dwell: f64 = Exp1.sample(rng);
        let t_flip = s.time + dwell / rate;
        if t_flip > end {
            break;
        }
        s.mode = s.mode.other();
        s.t_last_flip = t_flip;
        s.time = t_flip;
    }
    s.time = end;
    Ok(s)
}

/// Event-driven driver for long trajectories.
///
/// Keeps the absolute time of the next switch, so advancing by many tiny
/// steps costs one comparison per step. Statistically identical to repeated
/// [`evolve`] calls because dwell times are memoryless.
#[derive(Debug, Clone)]
pub struct Telegraph {
    params: TelegraphParams,
    state: TlsState,
    next_flip: f64,
    time_low: f64,
    flips: u64,
}

impl Telegraph {
    /// Starts at time 0 in `initial`, or in a stationary draw when `None`.
    pub fn new<R: Rng + ?Sized>(
        params: TelegraphParams,
        initial: Option<Mode>,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        let mode = match initial {
            Some(m) => m,
            None => {
                let (p_low, _) = stationary_distribution(&params)?;
                if rng.random::<f64>() < p_low {
                    Mode::Low
                } else {
                    Mode::High
                }
            }
        };
        let mut t = Self {
            params,
            state: TlsState::new(mode, 0.0),
            next_flip: f64::INFINITY,
            time_low: 0.0,
            flips: 0,
        };
        t.schedule(rng);
        Ok(t)
    }

    /// A defect frozen in `mode`.
    pub fn pinned(mode: Mode) -> Self {
        Self {
            params: TelegraphParams::frozen(),
            state: TlsState::new(mode, 0.0),
            next_flip: f64::INFINITY,
            time_low: 0.0,
            flips: 0,
        }
    }

    fn schedule<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let rate = self.params.exit_rate(self.state.mode);
        self.next_flip = if rate > 0.0 {
            let e: f64 = Exp1.sample(rng);
            self.state.time + e / rate
        } else {
            f64::INFINITY
        };
    }

    pub fn params(&self) -> &TelegraphParams {
        &self.params
    }

    pub fn state(&self) -> TlsState {
        self.state
    }

    pub fn mode(&self) -> Mode {
        self.state.mode
    }

    pub fn now(&self) -> f64 {
        self.state.time
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    /// Total time spent in `L` since creation.
    pub fn time_in_low(&self) -> f64 {
        self.time_low
    }

    /// Advances by `dt`, reporting each constant-mode segment to `segment`.
    pub fn advance_with<R, F>(&mut self, dt: f64, rng: &mut R, mut segment: F)
    where
        R: Rng + ?Sized,
        F: FnMut(Mode, f64),
    {
        debug_assert!(dt >= 0.0);
        let end = self.state.time + dt;
        while self.next_flip <= end {
            let piece = self.next_flip - self.state.time;
            self.account(piece);
            segment(self.state.mode, piece);
            self.state.mode = self.state.mode.other();
            self.state.time = self.next_flip;
            self.state.t_last_flip = self.next_flip;
            self.flips += 1;
            self.schedule(rng);
        }
        let piece = end - self.state.time;
        self.account(piece);
        segment(self.state.mode, piece);
        self.state.time = end;
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        self.advance_with(dt, rng, |_, _| {});
    }

    fn account(&mut self, piece: f64) {
        if self.state.mode == Mode::Low {
            self.time_low += piece;
        }
    }
}
