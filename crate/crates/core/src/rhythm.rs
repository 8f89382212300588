//! Rhythm generator: two coupled phase oscillators, one per leg.
//!
//! Between touchdowns each phase obeys
//!
//! ```text
//! dφ_R/dt = π / T_e + ε · sin((φ_L − φ_R) − π)
//! dφ_L/dt = π / T_e + ε · sin((φ_R − φ_L) − π)
//! ```
//!
//! so the left/right phase difference is attracted to π. A touchdown resets
//! the landing leg's phase to zero (fast adaptation), and the estimated
//! half-period `T_e` is corrected once per step from the measured half-period
//! (slow adaptation).

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::SimError;
use crate::params::ControllerParams;

/// Lower bound on the estimated half-period [s].
pub const MIN_HALF_PERIOD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    Right,
    Left,
}

impl Leg {
    /// Leg that lands at step `n` (1-based). Running starts on the right leg.
    pub fn of_step(n: u64) -> Leg {
        if n % 2 == 1 {
            Leg::Right
        } else {
            Leg::Left
        }
    }

    pub fn other(self) -> Leg {
        match self {
            Leg::Right => Leg::Left,
            Leg::Left => Leg::Right,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Leg::Right => "R",
            Leg::Left => "L",
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Oscillator phases plus the slow-adaptation state.
///
/// Phases are stored wrapped into `[0, 2π)`. The number of wraps since the
/// leg's last reset is kept so the phase accumulated over the current cycle
/// can be recovered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorPair {
    pub phi_r: f64,
    pub phi_l: f64,
    pub wraps_r: i32,
    pub wraps_l: i32,
    /// Estimated half-period T_e [s].
    pub t_e: f64,
    /// Period error of the previous step, if any step has been measured.
    pub dt_prev: Option<f64>,
}

impl OscillatorPair {
    pub fn new(phi_r: f64, phi_l: f64, t_e: f64) -> Self {
        let mut osc = OscillatorPair {
            phi_r,
            phi_l,
            wraps_r: 0,
            wraps_l: 0,
            t_e,
            dt_prev: None,
        };
        osc.wrap();
        osc.wraps_r = 0;
        osc.wraps_l = 0;
        osc
    }

    pub fn phase(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Right => self.phi_r,
            Leg::Left => self.phi_l,
        }
    }

    /// Phase advanced since the leg's last reset, without wrapping.
    pub fn phase_since_reset(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Right => self.phi_r + TAU * f64::from(self.wraps_r),
            Leg::Left => self.phi_l + TAU * f64::from(self.wraps_l),
        }
    }

    fn wrap(&mut self) {
        wrap_phase(&mut self.phi_r, &mut self.wraps_r);
        wrap_phase(&mut self.phi_l, &mut self.wraps_l);
    }
}

fn wrap_phase(phi: &mut f64, wraps: &mut i32) {
    while *phi >= TAU {
        *phi -= TAU;
        *wraps += 1;
    }
    while *phi < 0.0 {
        *phi += TAU;
        *wraps -= 1;
    }
}

fn rates(phi_r: f64, phi_l: f64, t_e: f64, epsilon: f64) -> (f64, f64) {
    let base = PI / t_e;
    (
        base + epsilon * ((phi_l - phi_r) - PI).sin(),
        base + epsilon * ((phi_r - phi_l) - PI).sin(),
    )
}

/// Continuous part of the oscillator dynamics, `(dφ_R/dt, dφ_L/dt)` [rad/s].
/// The touchdown reset is applied separately by [`apply_phase_reset`].
pub fn phase_derivatives(osc: &OscillatorPair, params: &ControllerParams) -> (f64, f64) {
    rates(osc.phi_r, osc.phi_l, osc.t_e, params.epsilon)
}

/// Resets the landing leg's phase to zero; the other leg is untouched.
pub fn apply_phase_reset(osc: &OscillatorPair, leg: Leg) -> OscillatorPair {
    let mut out = *osc;
    match leg {
        Leg::Right => {
            out.phi_r = 0.0;
            out.wraps_r = 0;
        }
        Leg::Left => {
            out.phi_l = 0.0;
            out.wraps_l = 0;
        }
    }
    out
}

/// One slow-adaptation update of the estimated half-period:
///
/// `T_e' = T_e − Kp·ΔT_n − Kd·(ΔT_n − ΔT_{n−1}) / T_n`, floored at
/// [`MIN_HALF_PERIOD`].
pub fn update_estimated_half_period(
    t_e: f64,
    dt_n: f64,
    dt_prev: f64,
    t_n: f64,
    params: &ControllerParams,
) -> Result<f64, SimError> {
    for (quantity, value) in [
        ("estimated half-period", t_e),
        ("period error", dt_n),
        ("previous period error", dt_prev),
        ("half-period", t_n),
    ] {
        if !value.is_finite() {
            return Err(SimError::NonFiniteController { quantity, value });
        }
    }
    let next = t_e - params.kp * dt_n - params.kd * (dt_n - dt_prev) / t_n;
    if !next.is_finite() {
        return Err(SimError::NonFiniteController {
            quantity: "updated half-period",
            value: next,
        });
    }
    Ok(next.max(MIN_HALF_PERIOD))
}

impl OscillatorPair {
    /// Applies the half-period update for a measured half-period `t_n` and
    /// returns the period error `ΔT_n = T_e − T_n` that was used.
    ///
    /// The first measured step has no predecessor; it uses `ΔT_{n−1} = ΔT_n`,
    /// which zeroes the derivative term.
    pub fn adapt(&mut self, t_n: f64, params: &ControllerParams) -> Result<f64, SimError> {
        let dt_n = self.t_e - t_n;
        let dt_prev = self.dt_prev.unwrap_or(dt_n);
        self.t_e = update_estimated_half_period(self.t_e, dt_n, dt_prev, t_n, params)?;
        self.dt_prev = Some(dt_n);
        Ok(dt_n)
    }
}

/// Integrates both phases over `dt` with one classical Runge–Kutta step and
/// wraps the result into `[0, 2π)`.
pub fn advance(osc: &OscillatorPair, dt: f64, params: &ControllerParams) -> OscillatorPair {
    let (t_e, eps) = (osc.t_e, params.epsilon);
    let (r0, l0) = (osc.phi_r, osc.phi_l);
    let (a1, b1) = rates(r0, l0, t_e, eps);
    let (a2, b2) = rates(r0 + 0.5 * dt * a1, l0 + 0.5 * dt * b1, t_e, eps);
    let (a3, b3) = rates(r0 + 0.5 * dt * a2, l0 + 0.5 * dt * b2, t_e, eps);
    let (a4, b4) = rates(r0 + dt * a3, l0 + dt * b3, t_e, eps);
    let mut out = *osc;
    out.phi_r = r0 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    out.phi_l = l0 + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    out.wrap();
    out
}
