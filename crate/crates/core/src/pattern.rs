//! Pattern formulator: maps an oscillator phase to a gait sub-phase and the
//! actuator commands for that sub-phase, and adapts the late-swing onset
//! rate μ from the thigh swing angle.

use std::f64::consts::TAU;
use std::fmt;

use crate::error::SimError;
use crate::params::ControllerParams;
use crate::rhythm::Leg;

/// Margin kept between μ and β at the lower clamp.
pub const MU_MARGIN: f64 = 0.02;
/// Upper clamp of μ.
pub const MU_MAX: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseCategory {
    Stance,
    EarlySwing,
    LateSwing,
}

impl PhaseCategory {
    pub fn name(self) -> &'static str {
        match self {
            PhaseCategory::Stance => "stance",
            PhaseCategory::EarlySwing => "early_swing",
            PhaseCategory::LateSwing => "late_swing",
        }
    }
}

impl fmt::Display for PhaseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HipCommand {
    /// Constant torque pushing the body over the stance foot [N·m].
    KickTorque(f64),
    /// Motor idle; the rubber band swings the leg forward.
    PassiveSwing,
    /// Constant torque retracting the swing leg [N·m].
    RetractTorque(f64),
}

impl HipCommand {
    /// Torque the motor produces, in the kick direction.
    pub fn torque(self) -> f64 {
        match self {
            HipCommand::KickTorque(t) | HipCommand::RetractTorque(t) => t,
            HipCommand::PassiveSwing => 0.0,
        }
    }
}

impl fmt::Display for HipCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HipCommand::KickTorque(t) => write!(f, "kick({t})"),
            HipCommand::PassiveSwing => f.write_str("passive"),
            HipCommand::RetractTorque(t) => write!(f, "retract({t})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VastusCommand {
    Tighten,
    Relax,
    Pretension,
}

impl fmt::Display for VastusCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VastusCommand::Tighten => "tighten",
            VastusCommand::Relax => "relax",
            VastusCommand::Pretension => "pretension",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorCommand {
    pub hip: HipCommand,
    pub vastus: VastusCommand,
}

/// Stance for `phi < 2πβ`, early swing up to `2πμ`, late swing after.
pub fn categorize_phase(phi: f64, beta: f64, mu: f64) -> PhaseCategory {
    if phi < TAU * beta {
        PhaseCategory::Stance
    } else if phi < TAU * mu {
        PhaseCategory::EarlySwing
    } else {
        PhaseCategory::LateSwing
    }
}

pub fn hip_command(category: PhaseCategory, tau_c: f64) -> HipCommand {
    match category {
        PhaseCategory::Stance => HipCommand::KickTorque(tau_c),
        PhaseCategory::EarlySwing => HipCommand::PassiveSwing,
        PhaseCategory::LateSwing => HipCommand::RetractTorque(tau_c),
    }
}

/// The vastus is tightened only while the phase says stance and the foot is
/// on the ground; a lifted leg relaxes it whatever the phase says. A lifted
/// leg swung past `theta_pretension` [deg] is pretensioned for landing.
pub fn vastus_command(
    category: PhaseCategory,
    grounded: bool,
    theta: f64,
    theta_pretension: f64,
) -> VastusCommand {
    if grounded {
        if category == PhaseCategory::Stance {
            VastusCommand::Tighten
        } else {
            VastusCommand::Relax
        }
    } else if theta > theta_pretension {
        VastusCommand::Pretension
    } else {
        VastusCommand::Relax
    }
}

/// Gain of the μ update: weak when the swing overshoots the target, strong
/// when it falls short.
pub fn mu_gain(theta_s: f64, params: &ControllerParams) -> f64 {
    if theta_s > params.theta_s_d {
        params.k_mu_over
    } else {
        params.k_mu_under
    }
}

/// `μ' = μ − K_μ·(θ_s − θ_d)` with the angle error in degrees, before clamping.
pub fn raw_mu_update(mu: f64, theta_s: f64, params: &ControllerParams) -> f64 {
    mu - mu_gain(theta_s, params) * (theta_s - params.theta_s_d)
}

/// Lower and upper bound applied to μ. For β within the margin of the upper
/// clamp both bounds collapse onto the midpoint of (β, 1).
pub fn mu_bounds(beta: f64) -> (f64, f64) {
    let mid = 0.5 * (beta + 1.0);
    ((beta + MU_MARGIN).min(mid), MU_MAX.max(mid))
}

/// Slow adaptation of the late-swing onset rate from the swing angle
/// `theta_s` [deg] measured at the start of late swing.
pub fn update_mu(mu: f64, theta_s: f64, params: &ControllerParams) -> Result<f64, SimError> {
    if !theta_s.is_finite() {
        return Err(SimError::NonFiniteController {
            quantity: "swing angle",
            value: theta_s,
        });
    }
    let (lo, hi) = mu_bounds(params.beta);
    Ok(raw_mu_update(mu, theta_s, params).clamp(lo, hi))
}

/// Per-leg sub-phases plus the adaptive μ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternState {
    pub mu: f64,
    /// Current thigh angle [deg], positive forward.
    pub theta: f64,
    /// Swing angle sampled at the most recent late-swing onset [deg].
    pub theta_s_last: Option<f64>,
    pub right: PhaseCategory,
    pub left: PhaseCategory,
}

impl PatternState {
    pub fn new(params: &ControllerParams) -> Self {
        PatternState {
            mu: params.mu0,
            theta: 0.0,
            theta_s_last: None,
            right: PhaseCategory::Stance,
            left: PhaseCategory::Stance,
        }
    }

    pub fn category(&self, leg: Leg) -> PhaseCategory {
        match leg {
            Leg::Right => self.right,
            Leg::Left => self.left,
        }
    }

    /// Recategorizes both legs from the given phases.
    pub fn observe(&mut self, phi_r: f64, phi_l: f64, beta: f64) {
        self.right = categorize_phase(phi_r, beta, self.mu);
        self.left = categorize_phase(phi_l, beta, self.mu);
    }

    /// Records a swing-angle sample and adapts μ from it.
    pub fn adapt(&mut self, theta_s: f64, params: &ControllerParams) -> Result<f64, SimError> {
        self.mu = update_mu(self.mu, theta_s, params)?;
        self.theta_s_last = Some(theta_s);
        Ok(self.mu)
    }

    pub fn command(
        &self,
        leg: Leg,
        grounded: bool,
        tau_c: f64,
        params: &ControllerParams,
    ) -> ActuatorCommand {
        let category = self.category(leg);
        ActuatorCommand {
            hip: hip_command(category, tau_c),
            vastus: vastus_command(category, grounded, self.theta, params.theta_pretension),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn robot() -> ControllerParams {
        crate::params::Preset::RobotControllerUnit
            .config()
            .controller
    }

    #[test]
    fn categories_at_tabulated_phases() {
        assert_eq!(
            categorize_phase(0.1 * TAU, 0.25, 0.6),
            PhaseCategory::Stance
        );
        assert_eq!(
            categorize_phase(0.5 * TAU, 0.25, 0.6),
            PhaseCategory::EarlySwing
        );
        assert_eq!(
            categorize_phase(0.9 * TAU, 0.25, 0.6),
            PhaseCategory::LateSwing
        );
    }

    #[test]
    fn boundaries_belong_to_the_later_category() {
        assert_eq!(categorize_phase(0.0, 0.25, 0.6), PhaseCategory::Stance);
        assert_eq!(
            categorize_phase(TAU * 0.25, 0.25, 0.6),
            PhaseCategory::EarlySwing
        );
        assert_eq!(
            categorize_phase(TAU * 0.6, 0.25, 0.6),
            PhaseCategory::LateSwing
        );
    }

    #[test]
    fn hip_commands() {
        assert_eq!(
            hip_command(PhaseCategory::Stance, 3.0),
            HipCommand::KickTorque(3.0)
        );
        assert_eq!(
            hip_command(PhaseCategory::Stance, 52.0),
            HipCommand::KickTorque(52.0)
        );
        assert_eq!(
            hip_command(PhaseCategory::EarlySwing, 52.0),
            HipCommand::PassiveSwing
        );
        assert_eq!(HipCommand::PassiveSwing.torque(), 0.0);
        assert_eq!(
            hip_command(PhaseCategory::LateSwing, 3.0),
            HipCommand::RetractTorque(3.0)
        );
    }

    #[test]
    fn vastus_rules() {
        use PhaseCategory::*;
        assert_eq!(
            vastus_command(Stance, true, 0.0, 20.0),
            VastusCommand::Tighten
        );
        assert_eq!(
            vastus_command(EarlySwing, false, 10.0, 20.0),
            VastusCommand::Relax
        );
        assert_eq!(
            vastus_command(LateSwing, false, 25.0, 20.0),
            VastusCommand::Pretension
        );
        // liftoff wins over the phase category
        assert_eq!(
            vastus_command(Stance, false, 0.0, 20.0),
            VastusCommand::Relax
        );
        assert_eq!(
            vastus_command(EarlySwing, true, 30.0, 20.0),
            VastusCommand::Relax
        );
        assert_eq!(
            vastus_command(LateSwing, false, 20.0, 20.0),
            VastusCommand::Relax
        );
    }

    #[test]
    fn mu_on_target_is_unchanged() {
        assert_eq!(update_mu(0.6, 35.0, &robot()).unwrap(), 0.6);
    }

    #[test]
    fn mu_undershoot_uses_strong_gain_and_clamps() {
        let p = robot();
        assert_eq!(mu_gain(30.0, &p), 0.1);
        assert_relative_eq!(raw_mu_update(0.6, 30.0, &p), 1.1, epsilon = 1e-12);
        assert_eq!(update_mu(0.6, 30.0, &p).unwrap(), 0.98);
    }

    #[test]
    fn mu_overshoot_uses_weak_gain() {
        let p = robot();
        assert_eq!(mu_gain(37.0, &p), 0.005);
        assert_relative_eq!(update_mu(0.6, 37.0, &p).unwrap(), 0.59, epsilon = 1e-12);
    }

    #[test]
    fn mu_rejects_non_finite_angle() {
        assert!(update_mu(0.6, f64::NAN, &robot()).is_err());
    }

    #[test]
    fn state_adapts_and_commands() {
        let p = robot();
        let mut st = PatternState::new(&p);
        st.observe(0.1, 0.9 * TAU, p.beta);
        assert_eq!(st.category(Leg::Right), PhaseCategory::Stance);
        assert_eq!(st.category(Leg::Left), PhaseCategory::LateSwing);
        let cmd = st.command(Leg::Right, true, 3.0, &p);
        assert_eq!(cmd.hip, HipCommand::KickTorque(3.0));
        assert_eq!(cmd.vastus, VastusCommand::Tighten);
        st.adapt(37.0, &p).unwrap();
        assert_relative_eq!(st.mu, 0.59, epsilon = 1e-12);
        assert_eq!(st.theta_s_last, Some(37.0));
    }

    proptest! {
        #[test]
        fn overshoot_lowers_and_undershoot_raises_mu(
            mu in 0.3f64..0.95, err in 1e-3f64..30.0,
        ) {
            let p = robot();
            prop_assert!(raw_mu_update(mu, p.theta_s_d + err, &p) < mu);
            prop_assert!(raw_mu_update(mu, p.theta_s_d - err, &p) > mu);
        }

        #[test]
        fn undershoot_correction_is_twenty_times_overshoot(err in 1e-3f64..30.0) {
            let p = robot();
            let up = raw_mu_update(0.6, p.theta_s_d - err, &p) - 0.6;
            let down = 0.6 - raw_mu_update(0.6, p.theta_s_d + err, &p);
            prop_assert!((up / down - 20.0).abs() < 1e-6);
        }

        #[test]
        fn clamped_mu_stays_inside_beta_and_one(
            beta in 0.05f64..0.999,
            angles in proptest::collection::vec(-90.0f64..180.0, 1..60),
        ) {
            let mut p = robot();
            p.beta = beta;
            let mut mu = (beta + 1.0) / 2.0;
            for theta in angles {
                mu = update_mu(mu, theta, &p).unwrap();
                prop_assert!(mu > beta && mu < 1.0);
            }
        }
    }
}
