//! Closed-loop episodes: plant, oscillators and pattern formulator advanced
//! together on one fixed time grid.
//!
//! Step `n` is the half-period that ends with the `n`-th touchdown. Odd steps
//! end on the right leg and even steps on the left, and the oscillator of the
//! leg that will land at the end of a step is the one that drives the hip
//! torque during that step. At each touchdown the landing leg's oscillator is
//! reset first, then the estimated half-period (and, if enabled, μ) is
//! updated from the half-period just measured.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::SimError;
use crate::params::ValidatedConfig;
use crate::pattern::{HipCommand, PatternState, PhaseCategory, VastusCommand};
use crate::rhythm::{advance, apply_phase_reset, Leg, OscillatorPair};
use crate::slip::{integrate_step, EventKind, FallCause, Mode, SlipState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Step index, starting at 1 with the first (right) touchdown.
    pub n: u64,
    pub t_td: f64,
    /// Leg that touched down and whose oscillator was reset.
    pub leg: Leg,
    /// Measured half-period `t_td(n) − t_td(n−1)`; absent for the first step.
    pub half_period: Option<f64>,
    /// Estimated half-period in force during this step.
    pub estimated_half_period: f64,
    /// μ after this touchdown's update.
    pub mu: f64,
}

/// Oscillator phases sampled just before a right-leg touchdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrideRecord {
    /// Stride index `N = (n + 1) / 2`.
    pub stride: u64,
    pub n: u64,
    pub t_td: f64,
    /// Right phase accumulated since its last reset [rad].
    pub phi_r: f64,
    /// Left phase accumulated since its last reset [rad].
    pub phi_l: f64,
    /// Phase difference, reduced into `[0, 2π)`.
    pub phi_minus: f64,
    /// Phase sum, reduced into `[0, 4π)`.
    pub psi_minus: f64,
}

impl StrideRecord {
    pub fn new(n: u64, t_td: f64, phi_r: f64, phi_l: f64) -> Self {
        StrideRecord {
            stride: n.div_ceil(2),
            n,
            t_td,
            phi_r,
            phi_l,
            phi_minus: (phi_r - phi_l).rem_euclid(TAU),
            psi_minus: (phi_r + phi_l).rem_euclid(2.0 * TAU),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaitTimeline {
    pub steps: Vec<StepRecord>,
    pub strides: Vec<StrideRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub mode: Mode,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub r: f64,
    pub gamma: f64,
    /// Hip torque applied over the integration step that ended here.
    pub tau: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandRecord {
    pub t: f64,
    /// Leg whose oscillator drives the hip.
    pub leg: Leg,
    pub phase: f64,
    pub category: PhaseCategory,
    pub hip: HipCommand,
    pub vastus: VastusCommand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    /// Steps completed when the event fired.
    pub step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed {
        steps: u64,
    },
    Fell {
        steps: u64,
        t: f64,
        cause: FallCause,
    },
}

impl Termination {
    pub fn steps(&self) -> u64 {
        match *self {
            Termination::Completed { steps } | Termination::Fell { steps, .. } => steps,
        }
    }

    pub fn fell(&self) -> bool {
        matches!(self, Termination::Fell { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub timeline: GaitTimeline,
    pub trajectory: Vec<TrajectorySample>,
    pub commands: Vec<CommandRecord>,
    pub events: Vec<EventRecord>,
    pub termination: Termination,
    /// Simulated time at the end of the episode [s].
    pub duration: f64,
}

/// Plant and controller state between integration steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridState {
    pub plant: SlipState,
    pub oscillators: OscillatorPair,
    pub pattern: PatternState,
    /// Touchdowns so far.
    pub step: u64,
    pub last_touchdown: Option<f64>,
    reversed_since: Option<f64>,
}

impl HybridState {
    pub fn initial(cfg: &ValidatedConfig) -> Self {
        let sim = cfg.simulation();
        HybridState {
            plant: SlipState::apex(sim.y0, sim.vx0),
            oscillators: OscillatorPair::new(0.0, 0.0, cfg.controller().t0_e),
            pattern: PatternState::new(cfg.controller()),
            step: 0,
            last_touchdown: None,
            reversed_since: None,
        }
    }

    /// Leg whose oscillator drives the hip until the next touchdown.
    pub fn controlling_leg(&self) -> Leg {
        Leg::of_step(self.step + 1)
    }
}

struct Episode<'a> {
    cfg: &'a ValidatedConfig,
    state: HybridState,
    timeline: GaitTimeline,
    trajectory: Vec<TrajectorySample>,
    commands: Vec<CommandRecord>,
    events: Vec<EventRecord>,
    ticks: u64,
}

impl<'a> Episode<'a> {
    fn new(cfg: &'a ValidatedConfig) -> Self {
        let mut ep = Episode {
            cfg,
            state: HybridState::initial(cfg),
            timeline: GaitTimeline::default(),
            trajectory: Vec::new(),
            commands: Vec::new(),
            events: Vec::new(),
            ticks: 0,
        };
        ep.sample(0.0);
        ep
    }

    fn sample(&mut self, tau: f64) {
        let p = self.cfg.physical();
        let s = &self.state.plant;
        self.trajectory.push(TrajectorySample {
            t: s.t,
            mode: s.mode,
            x: s.x,
            y: s.y,
            vx: s.vx,
            vy: s.vy,
            r: s.leg_length(p),
            gamma: s.sweep_angle(p),
            tau,
            energy: s.energy(p),
        });
    }

    fn fell(&mut self, cause: FallCause) -> Termination {
        let t = self.state.plant.t;
        if !matches!(self.events.last(), Some(e) if e.kind == EventKind::Fall(cause)) {
            self.events.push(EventRecord {
                t,
                kind: EventKind::Fall(cause),
                step: self.state.step,
            });
        }
        Termination::Fell {
            steps: self.state.step,
            t,
            cause,
        }
    }

    /// Checks the starting apex before anything is integrated.
    fn initial_check(&mut self) -> Option<Termination> {
        let p = self.cfg.physical();
        let s = self.state.plant;
        if s.y <= crate::slip::MIN_HEIGHT_FRACTION * p.l0 {
            Some(self.fell(FallCause::BodyTooLow))
        } else if s.foot_height(p) < 0.0 {
            Some(self.fell(FallCause::FootBelowGround))
        } else {
            None
        }
    }

    fn hip_torque(&mut self) -> f64 {
        let p = self.cfg.physical();
        let ctrl = self.cfg.controller();
        let st = &mut self.state;
        let leg = st.controlling_leg();
        let grounded = st.plant.mode == Mode::Stance;
        st.pattern.theta = -st.plant.sweep_angle(p).to_degrees();
        st.pattern
            .observe(st.oscillators.phi_r, st.oscillators.phi_l, ctrl.beta);
        let cmd = st.pattern.command(leg, grounded, p.tau_c, ctrl);
        let category = st.pattern.category(leg);
        let changed = match self.commands.last() {
            Some(c) => {
                c.leg != leg || c.category != category || c.hip != cmd.hip || c.vastus != cmd.vastus
            }
            None => true,
        };
        if changed {
            self.commands.push(CommandRecord {
                t: st.plant.t,
                leg,
                phase: st.oscillators.phase(leg),
                category,
                hip: cmd.hip,
                vastus: cmd.vastus,
            });
        }
        // the massless leg only transmits the kick while the foot is planted
        match cmd.hip {
            HipCommand::KickTorque(tau) if grounded => tau,
            _ => 0.0,
        }
    }

    fn on_touchdown(&mut self) -> Result<Option<Termination>, SimError> {
        let ctrl = self.cfg.controller();
        let p = self.cfg.physical();
        let st = &mut self.state;
        let t = st.plant.t;
        let n = st.step + 1;
        let leg = Leg::of_step(n);
        if leg == Leg::Right {
            self.timeline.strides.push(StrideRecord::new(
                n,
                t,
                st.oscillators.phase_since_reset(Leg::Right),
                st.oscillators.phase_since_reset(Leg::Left),
            ));
        }
        st.oscillators = apply_phase_reset(&st.oscillators, leg);
        let estimated = st.oscillators.t_e;
        let half_period = st.last_touchdown.map(|t0| t - t0);
        if let Some(t_n) = half_period {
            if ctrl.kp != 0.0 || ctrl.kd != 0.0 {
                st.oscillators.adapt(t_n, ctrl)?;
            }
        }
        if ctrl.mu_feedback {
            // the held leg angle is the only swing angle a massless leg has
            st.pattern.adapt(p.gamma_td.to_degrees(), ctrl)?;
        }
        self.timeline.steps.push(StepRecord {
            n,
            t_td: t,
            leg,
            half_period,
            estimated_half_period: estimated,
            mu: st.pattern.mu,
        });
        st.step = n;
        st.last_touchdown = Some(t);
        if n >= self.cfg.simulation().max_steps {
            return Ok(Some(Termination::Completed { steps: n }));
        }
        Ok(None)
    }

    /// One integration step of the closed loop.
    fn tick(&mut self) -> Result<Option<Termination>, SimError> {
        let p = *self.cfg.physical();
        let sim = *self.cfg.simulation();
        let tau = self.hip_torque();
        let out = integrate_step(&self.state.plant, tau, sim.dt, &p)?;
        if out.elapsed > 0.0 {
            self.state.oscillators =
                advance(&self.state.oscillators, out.elapsed, self.cfg.controller());
        }
        self.state.plant = out.state;
        self.ticks += 1;
        if out.event.is_some() || self.ticks.is_multiple_of(sim.trajectory_decimation) {
            self.sample(tau);
        }
        if let Some(ev) = out.event {
            match ev.kind {
                EventKind::Fall(cause) => return Ok(Some(self.fell(cause))),
                kind => self.events.push(EventRecord {
                    t: ev.time(),
                    kind,
                    step: self.state.step,
                }),
            }
            if ev.kind == EventKind::Touchdown {
                if let Some(done) = self.on_touchdown()? {
                    return Ok(Some(done));
                }
            }
        }
        let t = self.state.plant.t;
        if self.state.plant.vx <= 0.0 {
            let since = *self.state.reversed_since.get_or_insert(t);
            if t - since >= self.state.oscillators.t_e {
                return Ok(Some(self.fell(FallCause::Reversed)));
            }
        } else {
            self.state.reversed_since = None;
        }
        if t - self.state.last_touchdown.unwrap_or(0.0) > sim.max_step_duration {
            return Ok(Some(self.fell(FallCause::Stalled)));
        }
        Ok(None)
    }

    fn finish(self, termination: Termination) -> EpisodeResult {
        EpisodeResult {
            duration: self.state.plant.t,
            timeline: self.timeline,
            trajectory: self.trajectory,
            commands: self.commands,
            events: self.events,
            termination,
        }
    }
}

/// Outcome of dropping from the initial apex to the first touchdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bootstrap {
    /// State just after the first (right) touchdown has been processed.
    Running(HybridState),
    /// The model fell before its first touchdown.
    Fell(Termination),
}

/// Drops from the configured apex to the first touchdown, which is step 1
/// on the right leg.
pub fn first_touchdown_bootstrap(cfg: &ValidatedConfig) -> Result<Bootstrap, SimError> {
    let mut cfg1 = cfg.into_inner();
    cfg1.simulation.max_steps = 1;
    let cfg1 = cfg1
        .validate()
        .expect("narrowing the step budget keeps a config valid");
    let mut ep = Episode::new(&cfg1);
    if let Some(fell) = ep.initial_check() {
        return Ok(Bootstrap::Fell(fell));
    }
    loop {
        match ep.tick()? {
            None => continue,
            Some(t @ Termination::Fell { .. }) => return Ok(Bootstrap::Fell(t)),
            Some(Termination::Completed { .. }) => return Ok(Bootstrap::Running(ep.state)),
        }
    }
}

/// Runs one episode until a fall or until `max_steps` touchdowns.
pub fn run_episode(cfg: &ValidatedConfig) -> Result<EpisodeResult, SimError> {
    let mut ep = Episode::new(cfg);
    if cfg.simulation().max_steps == 0 {
        return Ok(ep.finish(Termination::Completed { steps: 0 }));
    }
    if let Some(fell) = ep.initial_check() {
        return Ok(ep.finish(fell));
    }
    loop {
        if let Some(done) = ep.tick()? {
            return Ok(ep.finish(done));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinPoint {
    pub y0: f64,
    pub vx0: f64,
    pub termination: Termination,
}

/// Runs one episode per `(y0, vx0)` pair, in parallel, and reports how each
/// ended. Results are in row-major order over `y0s` × `vx0s`.
pub fn basin_scan(
    cfg: &ValidatedConfig,
    y0s: &[f64],
    vx0s: &[f64],
) -> Result<Vec<BasinPoint>, SimError> {
    let grid: Vec<(f64, f64)> = y0s
        .iter()
        .flat_map(|&y| vx0s.iter().map(move |&v| (y, v)))
        .collect();
    grid.par_iter()
        .map(|&(y0, vx0)| {
            let mut c = cfg.into_inner();
            c.simulation.y0 = y0;
            c.simulation.vx0 = vx0;
            let c = c.validate().expect("apex heights in a scan are positive");
            run_episode(&c).map(|r| BasinPoint {
                y0,
                vx0,
                termination: r.termination,
            })
        })
        .collect()
}
