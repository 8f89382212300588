//! Spring-loaded inverted pendulum with an axial damper and a hip torque.
//!
//! In flight the point mass is ballistic and the massless leg is held at the
//! touchdown angle. In stance the foot is a frictionless pivot; the leg pushes
//! along its axis with `k (l0 − r) − c ṙ` and the hip torque `τ` acts on the
//! mass as a tangential force `τ / r`.
//!
//! Angles: the sweep angle `γ` is measured from the vertical, positive when
//! the mass is ahead of the foot. A leg placed at the touchdown angle
//! `gamma_td` therefore lands at `γ = −gamma_td`, and a positive torque does
//! work `τ·γ̇` while the body vaults forward.

use std::fmt;

use crate::error::SimError;
use crate::params::PhysicalParams;

/// Target accuracy of the event function at a refined event [m].
pub const EVENT_TOLERANCE: f64 = 1e-10;
/// Fall when the mass sinks below this fraction of `l0`.
pub const MIN_HEIGHT_FRACTION: f64 = 0.2;
/// Fall when the stance leg is compressed below this fraction of `l0`.
pub const MIN_LEG_FRACTION: f64 = 0.5;

const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Flight,
    Stance,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Flight => "flight",
            Mode::Stance => "stance",
        }
    }
}

/// Hybrid state of the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub mode: Mode,
    /// Horizontal foot position; meaningful only in stance.
    pub foothold: f64,
    /// Shortest leg length reached in the current stance.
    pub min_leg_length: f64,
}

pub type Derivative = [f64; 4];

impl SlipState {
    /// Flight state at the apex of a ballistic arc.
    pub fn apex(y0: f64, vx0: f64) -> Self {
        SlipState {
            t: 0.0,
            x: 0.0,
            y: y0,
            vx: vx0,
            vy: 0.0,
            mode: Mode::Flight,
            foothold: 0.0,
            min_leg_length: f64::INFINITY,
        }
    }

    fn vector(&self) -> [f64; 4] {
        [self.x, self.y, self.vx, self.vy]
    }

    fn with_vector(&self, v: [f64; 4], t: f64) -> Self {
        SlipState {
            t,
            x: v[0],
            y: v[1],
            vx: v[2],
            vy: v[3],
            ..*self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.vector().iter().all(|v| v.is_finite()) && self.t.is_finite()
    }

    /// Leg length `r` [m]; the unloaded length `l0` in flight.
    pub fn leg_length(&self, p: &PhysicalParams) -> f64 {
        match self.mode {
            Mode::Flight => p.l0,
            Mode::Stance => (self.x - self.foothold).hypot(self.y),
        }
    }

    /// Leg extension rate `ṙ` [m/s]; zero in flight.
    pub fn leg_rate(&self, p: &PhysicalParams) -> f64 {
        match self.mode {
            Mode::Flight => 0.0,
            Mode::Stance => {
                let r = self.leg_length(p);
                ((self.x - self.foothold) * self.vx + self.y * self.vy) / r
            }
        }
    }

    /// Sweep angle `γ` [rad]; `−gamma_td` in flight.
    pub fn sweep_angle(&self, p: &PhysicalParams) -> f64 {
        match self.mode {
            Mode::Flight => -p.gamma_td,
            Mode::Stance => (self.x - self.foothold).atan2(self.y),
        }
    }

    /// Sweep rate `γ̇` [rad/s]; zero in flight.
    pub fn sweep_rate(&self, _p: &PhysicalParams) -> f64 {
        match self.mode {
            Mode::Flight => 0.0,
            Mode::Stance => {
                let dx = self.x - self.foothold;
                (self.y * self.vx - dx * self.vy) / (dx * dx + self.y * self.y)
            }
        }
    }

    /// Height of the held foot above the ground during flight [m].
    pub fn foot_height(&self, p: &PhysicalParams) -> f64 {
        self.y - p.l0 * p.gamma_td.cos()
    }

    /// Kinetic, gravitational and spring energy [J].
    pub fn energy(&self, p: &PhysicalParams) -> f64 {
        let kinetic = 0.5 * p.m * (self.vx * self.vx + self.vy * self.vy);
        let potential = p.m * p.g * self.y;
        let spring = match self.mode {
            Mode::Flight => 0.0,
            Mode::Stance => {
                let s = p.l0 - self.leg_length(p);
                0.5 * p.k * s * s
            }
        };
        kinetic + potential + spring
    }
}

/// Ballistic flight: no horizontal force, gravity only.
pub fn flight_derivatives(s: &SlipState, p: &PhysicalParams) -> Derivative {
    [s.vx, s.vy, 0.0, -p.g]
}

/// Stance dynamics about the foot pivot with hip torque `tau` [N·m].
pub fn stance_derivatives(s: &SlipState, tau: f64, p: &PhysicalParams) -> Derivative {
    stance_rhs(&s.vector(), s.foothold, tau, p)
}

fn stance_rhs(v: &[f64; 4], foothold: f64, tau: f64, p: &PhysicalParams) -> Derivative {
    let [x, y, vx, vy] = *v;
    let dx = x - foothold;
    let r = dx.hypot(y);
    // axis from foot to mass, and the forward tangent
    let (ux, uy) = (dx / r, y / r);
    let (tx, ty) = (uy, -ux);
    let r_dot = ux * vx + uy * vy;
    let axial = (p.k * (p.l0 - r) - p.c * r_dot) / p.m;
    let tangential = tau / (r * p.m);
    [
        vx,
        vy,
        axial * ux + tangential * tx,
        axial * uy + tangential * ty - p.g,
    ]
}

fn rhs(mode: Mode, v: &[f64; 4], foothold: f64, tau: f64, p: &PhysicalParams) -> Derivative {
    match mode {
        Mode::Flight => [v[2], v[3], 0.0, -p.g],
        Mode::Stance => stance_rhs(v, foothold, tau, p),
    }
}

/// One classical fourth-order Runge–Kutta step of the active mode, ignoring
/// events.
pub fn rk4(s: &SlipState, tau: f64, h: f64, p: &PhysicalParams) -> SlipState {
    let y0 = s.vector();
    let f = |v: &[f64; 4]| rhs(s.mode, v, s.foothold, tau, p);
    let axpy = |a: &[f64; 4], k: &[f64; 4], c: f64| {
        [
            a[0] + c * k[0],
            a[1] + c * k[1],
            a[2] + c * k[2],
            a[3] + c * k[3],
        ]
    };
    let k1 = f(&y0);
    let k2 = f(&axpy(&y0, &k1, 0.5 * h));
    let k3 = f(&axpy(&y0, &k2, 0.5 * h));
    let k4 = f(&axpy(&y0, &k3, h));
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    s.with_vector(out, s.t + h)
}

/// Bisects on the step length for the first sub-step at which `crossed`
/// holds, stopping once `|event(state)| < EVENT_TOLERANCE`.
fn refine(
    start: &SlipState,
    tau: f64,
    dt: f64,
    p: &PhysicalParams,
    event: impl Fn(&SlipState) -> f64,
    crossed: impl Fn(f64) -> bool,
) -> f64 {
    let (mut lo, mut hi) = (0.0, dt);
    for _ in 0..MAX_BISECTIONS {
        if event(&rk4(start, tau, hi, p)).abs() < EVENT_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if crossed(event(&rk4(start, tau, mid, p))) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Time offset within the next step of length `dt` at which the descending
/// foot reaches the ground, if it does.
pub fn detect_touchdown(start: &SlipState, dt: f64, p: &PhysicalParams) -> Option<f64> {
    if start.mode != Mode::Flight {
        return None;
    }
    let h0 = start.foot_height(p);
    if h0 <= 0.0 {
        return (h0 == 0.0 && start.vy < 0.0).then_some(0.0);
    }
    if rk4(start, 0.0, dt, p).foot_height(p) > 0.0 {
        return None;
    }
    Some(refine(
        start,
        0.0,
        dt,
        p,
        |s| s.foot_height(p),
        |h| h <= 0.0,
    ))
}

/// Time offset within the next step at which a compressed stance leg
/// regains its rest length, if it does.
pub fn detect_liftoff(start: &SlipState, tau: f64, dt: f64, p: &PhysicalParams) -> Option<f64> {
    if start.mode != Mode::Stance {
        return None;
    }
    let r0 = start.leg_length(p);
    if start.min_leg_length.min(r0) >= p.l0 || r0 >= p.l0 {
        return None;
    }
    if rk4(start, tau, dt, p).leg_length(p) < p.l0 {
        return None;
    }
    Some(refine(
        start,
        tau,
        dt,
        p,
        |s| s.leg_length(p) - p.l0,
        |g| g >= 0.0,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FallCause {
    /// The mass sank to `0.2·l0`.
    BodyTooLow,
    /// Flight began with the held foot already below ground.
    FootBelowGround,
    /// The stance leg was compressed to `0.5·l0`.
    LegCollapsed,
    /// Forward speed stayed non-positive for a whole step.
    Reversed,
    /// No touchdown within the allowed step duration.
    Stalled,
}

impl FallCause {
    pub fn name(self) -> &'static str {
        match self {
            FallCause::BodyTooLow => "body_too_low",
            FallCause::FootBelowGround => "foot_below_ground",
            FallCause::LegCollapsed => "leg_collapsed",
            FallCause::Reversed => "reversed",
            FallCause::Stalled => "stalled",
        }
    }
}

impl fmt::Display for FallCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Touchdown,
    Liftoff,
    Fall(FallCause),
}

/// A mode switch or a fall, with the state at the event (after the switch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub state: SlipState,
}

impl Event {
    pub fn time(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: SlipState,
    /// Time actually advanced; shorter than `dt` when an event split the step.
    pub elapsed: f64,
    pub event: Option<Event>,
}

fn touch_down(s: &SlipState, p: &PhysicalParams) -> SlipState {
    let mut out = *s;
    out.mode = Mode::Stance;
    out.foothold = s.x + p.l0 * p.gamma_td.sin();
    out.min_leg_length = out.leg_length(p);
    out
}

fn lift_off(s: &SlipState) -> SlipState {
    let mut out = *s;
    out.mode = Mode::Flight;
    out.min_leg_length = f64::INFINITY;
    out
}

fn fall_check(s: &SlipState, p: &PhysicalParams) -> Option<FallCause> {
    if s.y <= MIN_HEIGHT_FRACTION * p.l0 {
        Some(FallCause::BodyTooLow)
    } else if s.mode == Mode::Stance && s.leg_length(p) <= MIN_LEG_FRACTION * p.l0 {
        Some(FallCause::LegCollapsed)
    } else {
        None
    }
}

/// Advances the plant by at most `dt`.
///
/// If a touchdown or liftoff occurs inside the step, the step stops at the
/// refined event time, the mode is switched and the event is returned; the
/// caller resumes from there with a fresh step.
pub fn integrate_step(
    s: &SlipState,
    tau: f64,
    dt: f64,
    p: &PhysicalParams,
) -> Result<StepOutcome, SimError> {
    let split = match s.mode {
        Mode::Flight => detect_touchdown(s, dt, p),
        Mode::Stance => detect_liftoff(s, tau, dt, p),
    };
    let (state, elapsed, mut event) = match split {
        Some(h) => {
            let at = if h > 0.0 { rk4(s, tau, h, p) } else { *s };
            match s.mode {
                Mode::Flight => {
                    let next = touch_down(&at, p);
                    let ev = Event {
                        kind: EventKind::Touchdown,
                        state: next,
                    };
                    (next, h, Some(ev))
                }
                Mode::Stance => {
                    let next = lift_off(&at);
                    let kind = if next.foot_height(p) < 0.0 {
                        EventKind::Fall(FallCause::FootBelowGround)
                    } else {
                        EventKind::Liftoff
                    };
                    (next, h, Some(Event { kind, state: next }))
                }
            }
        }
        None => {
            let mut next = rk4(s, tau, dt, p);
            if next.mode == Mode::Stance {
                next.min_leg_length = next.min_leg_length.min(next.leg_length(p));
            }
            (next, dt, None)
        }
    };
    if !state.is_finite() {
        return Err(SimError::NonFiniteState {
            last_good: Box::new(*s),
        });
    }
    if let Some(cause) = fall_check(&state, p) {
        event = Some(Event {
            kind: EventKind::Fall(cause),
            state,
        });
    }
    Ok(StepOutcome {
        state,
        elapsed,
        event,
    })
}
