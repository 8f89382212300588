//! Physical, controller and simulation parameters, presets and validation.
//!
//! Angles that the controller reasons about in degrees (`theta_s_d`,
//! `theta_pretension`) stay in degrees; every oscillator phase and the
//! touchdown angle `gamma_td` are radians.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Plant parameters of the spring-loaded inverted pendulum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Point mass [kg].
    pub m: f64,
    /// Nominal leg length [m].
    pub l0: f64,
    /// Leg stiffness [N/m].
    pub k: f64,
    /// Axial leg damping [N·s/m].
    pub c: f64,
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    /// Hip torque applied while the controlling oscillator is in stance [N·m].
    pub tau_c: f64,
    /// Leg angle from vertical held during flight [rad].
    pub gamma_td: f64,
}

/// Rhythm-generator and pattern-formulator gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    /// Phase coupling gain [1/s].
    pub epsilon: f64,
    /// Proportional gain of the half-period update.
    #[serde(rename = "Kp")]
    pub kp: f64,
    /// Derivative gain of the half-period update.
    #[serde(rename = "Kd")]
    pub kd: f64,
    /// Initial estimated half-period [s].
    #[serde(rename = "T0_e")]
    pub t0_e: f64,
    /// Duty rate, fraction of the cycle assigned to stance.
    pub beta: f64,
    /// Initial late-swing onset rate.
    pub mu0: f64,
    /// μ gain when the swing angle overshoots the target [1/deg].
    #[serde(rename = "K_mu_over")]
    pub k_mu_over: f64,
    /// μ gain when the swing angle undershoots the target [1/deg].
    #[serde(rename = "K_mu_under")]
    pub k_mu_under: f64,
    /// Target thigh swing angle [deg].
    pub theta_s_d: f64,
    /// Thigh angle above which the vastus is pretensioned for landing [deg].
    pub theta_pretension: f64,
    /// Apply the μ update at every touchdown.
    pub mu_feedback: bool,
}

/// Integration and episode settings, including the apex initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationParams {
    /// Fixed integration step [s].
    pub dt: f64,
    /// Step budget; the episode completes after this many touchdowns.
    pub max_steps: u64,
    /// Apex height of the initial flight [m].
    pub y0: f64,
    /// Forward speed at the initial apex [m/s].
    pub vx0: f64,
    /// Keep every n-th integration step in the trajectory log.
    pub trajectory_decimation: u64,
    /// Longest allowed interval between touchdowns before the run counts as stalled [s].
    pub max_step_duration: f64,
}

/// Complete, not yet validated, configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub physical: PhysicalParams,
    pub controller: ControllerParams,
    pub simulation: SimulationParams,
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// SLIP simulation with slow adaptation, (Kp, Kd) = (0.8, 0.1).
    WithFeedback,
    /// SLIP simulation without slow adaptation, (Kp, Kd) = (0, 0).
    WithoutFeedback,
    /// Controller constants of the robot experiment; no plant is simulated.
    RobotControllerUnit,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::WithFeedback,
        Preset::WithoutFeedback,
        Preset::RobotControllerUnit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::WithFeedback => "with-feedback",
            Preset::WithoutFeedback => "without-feedback",
            Preset::RobotControllerUnit => "robot-controller-unit",
        }
    }

    pub fn config(self) -> SimConfig {
        match self {
            Preset::WithFeedback => SimConfig::default(),
            Preset::WithoutFeedback => {
                let mut cfg = SimConfig::default();
                cfg.controller.kp = 0.0;
                cfg.controller.kd = 0.0;
                cfg
            }
            Preset::RobotControllerUnit => {
                let mut cfg = SimConfig::default();
                cfg.physical.tau_c = 3.0;
                cfg.controller = ControllerParams {
                    epsilon: 4.0,
                    kp: 0.1,
                    kd: 0.0,
                    t0_e: 0.55,
                    beta: 0.25,
                    mu0: 0.6,
                    k_mu_over: 0.005,
                    k_mu_under: 0.1,
                    theta_s_d: 35.0,
                    theta_pretension: 20.0,
                    mu_feedback: true,
                };
                cfg
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}`"))
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            m: 50.0,
            l0: 1.0,
            k: 8000.0,
            c: 20.0,
            g: 9.8,
            tau_c: 52.0,
            gamma_td: PI / 6.0,
        }
    }
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            epsilon: 4.0,
            kp: 0.8,
            kd: 0.1,
            t0_e: 0.5,
            beta: 0.6,
            // not used by the point-mass plant; any value in (beta, 1) is inert
            mu0: 0.8,
            k_mu_over: 0.005,
            k_mu_under: 0.1,
            theta_s_d: 35.0,
            theta_pretension: 20.0,
            mu_feedback: false,
        }
    }
}

impl Default for SimulationParams {
    fn default() -> Self {
        SimulationParams {
            dt: 1e-4,
            max_steps: 3000,
            y0: 0.93,
            vx0: 5.2,
            trajectory_decimation: 100,
            max_step_duration: 5.0,
        }
    }
}

/// A configuration whose invariants have been checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedConfig(SimConfig);

impl ValidatedConfig {
    pub fn get(&self) -> &SimConfig {
        &self.0
    }

    pub fn physical(&self) -> &PhysicalParams {
        &self.0.physical
    }

    pub fn controller(&self) -> &ControllerParams {
        &self.0.controller
    }

    pub fn simulation(&self) -> &SimulationParams {
        &self.0.simulation
    }

    pub fn into_inner(self) -> SimConfig {
        self.0
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = SimConfig;

    fn deref(&self) -> &SimConfig {
        &self.0
    }
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

fn finite(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("{field} must be finite")))
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if finite(field, v)? > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{field} must be positive")))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if finite(field, v)? >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{field} must be non-negative")))
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("m", self.m)?;
        positive("l0", self.l0)?;
        positive("k", self.k)?;
        non_negative("c", self.c)?;
        positive("g", self.g)?;
        finite("tau_c", self.tau_c)?;
        let gamma = finite("gamma_td", self.gamma_td)?;
        if !(gamma > 0.0 && gamma < FRAC_PI_2) {
            return Err(invalid("gamma_td", "gamma_td must lie in (0, pi/2)"));
        }
        Ok(())
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        non_negative("epsilon", self.epsilon)?;
        non_negative("Kp", self.kp)?;
        non_negative("Kd", self.kd)?;
        positive("T0_e", self.t0_e)?;
        let beta = finite("beta", self.beta)?;
        let mu0 = finite("mu0", self.mu0)?;
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid("beta", "beta must lie in (0, 1)"));
        }
        if mu0 <= beta {
            return Err(invalid("mu0", "mu0 must exceed beta"));
        }
        if mu0 >= 1.0 {
            return Err(invalid("mu0", "mu0 must be below 1"));
        }
        non_negative("K_mu_over", self.k_mu_over)?;
        non_negative("K_mu_under", self.k_mu_under)?;
        finite("theta_s_d", self.theta_s_d)?;
        finite("theta_pretension", self.theta_pretension)?;
        Ok(())
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("dt", self.dt)?;
        positive("y0", self.y0)?;
        finite("vx0", self.vx0)?;
        positive("max_step_duration", self.max_step_duration)?;
        if self.trajectory_decimation == 0 {
            return Err(invalid(
                "trajectory_decimation",
                "trajectory_decimation must be at least 1",
            ));
        }
        Ok(())
    }
}

impl SimConfig {
    /// Checks every parameter invariant and returns the first violation.
    pub fn validate(self) -> Result<ValidatedConfig, ConfigError> {
        self.physical.validate()?;
        self.controller.validate()?;
        self.simulation.validate()?;
        Ok(ValidatedConfig(self))
    }
}
