//! Plant-free check of the controller laws under a given parameter set:
//! phase categories, actuator commands, μ adaptation, half-period
//! adaptation and the antiphase coupling, each against a hand-computed
//! expectation.

use std::f64::consts::{PI, TAU};

use crate::params::{ControllerParams, PhysicalParams};
use crate::pattern::{
    categorize_phase, hip_command, mu_bounds, update_mu, vastus_command, HipCommand, PhaseCategory,
    VastusCommand,
};
use crate::rhythm::{advance, update_estimated_half_period, OscillatorPair};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

fn line(
    name: impl Into<String>,
    expected: impl ToString,
    actual: impl ToString,
    pass: bool,
) -> CheckLine {
    CheckLine {
        name: name.into(),
        expected: expected.to_string(),
        actual: actual.to_string(),
        pass,
    }
}

fn close(name: &str, expected: f64, actual: Result<f64, impl ToString>, tol: f64) -> CheckLine {
    match actual {
        Ok(a) => line(name, expected, a, (a - expected).abs() <= tol),
        Err(e) => line(name, expected, e.to_string(), false),
    }
}

/// Runs every vector for the given parameters.
pub fn run_checks(ctrl: &ControllerParams, phys: &PhysicalParams) -> Vec<CheckLine> {
    let (beta, mu) = (ctrl.beta, ctrl.mu0);
    let mut out = Vec::new();

    for (frac, want) in [
        (beta / 2.0, PhaseCategory::Stance),
        ((beta + mu) / 2.0, PhaseCategory::EarlySwing),
        ((mu + 1.0) / 2.0, PhaseCategory::LateSwing),
    ] {
        let got = categorize_phase(frac * TAU, beta, mu);
        out.push(line(
            format!("category at {frac:.3} cycle"),
            want,
            got,
            got == want,
        ));
    }

    for (cat, want) in [
        (PhaseCategory::Stance, HipCommand::KickTorque(phys.tau_c)),
        (PhaseCategory::EarlySwing, HipCommand::PassiveSwing),
        (
            PhaseCategory::LateSwing,
            HipCommand::RetractTorque(phys.tau_c),
        ),
    ] {
        let got = hip_command(cat, phys.tau_c);
        out.push(line(
            format!("hip command in {cat}"),
            want,
            got,
            got == want,
        ));
    }

    let pre = ctrl.theta_pretension;
    for (cat, grounded, theta, want) in [
        (PhaseCategory::Stance, true, 0.0, VastusCommand::Tighten),
        (
            PhaseCategory::EarlySwing,
            false,
            pre - 10.0,
            VastusCommand::Relax,
        ),
        (
            PhaseCategory::LateSwing,
            false,
            pre + 5.0,
            VastusCommand::Pretension,
        ),
    ] {
        let got = vastus_command(cat, grounded, theta, pre);
        out.push(line(
            format!("vastus in {cat}, grounded {grounded}, theta {theta}"),
            want,
            got,
            got == want,
        ));
    }

    let (lo, hi) = mu_bounds(beta);
    let td = ctrl.theta_s_d;
    out.push(close(
        "mu at target swing angle",
        mu,
        update_mu(mu, td, ctrl),
        0.0,
    ));
    let over = (mu - ctrl.k_mu_over * 2.0).clamp(lo, hi);
    out.push(close(
        "mu after 2 deg overshoot",
        over,
        update_mu(mu, td + 2.0, ctrl),
        1e-15,
    ));
    let under = (mu + ctrl.k_mu_under * 5.0).clamp(lo, hi);
    out.push(close(
        "mu after 5 deg undershoot",
        under,
        update_mu(mu, td - 5.0, ctrl),
        1e-15,
    ));
    let ratio = ctrl.k_mu_under / ctrl.k_mu_over;
    out.push(line("mu gain asymmetry", 20.0, ratio, ratio == 20.0));

    // constant measured half-period: the recurrence settles on it
    let target = 0.44;
    let mut te = ctrl.t0_e;
    let mut prev = None;
    let mut settled = Ok(te);
    for _ in 0..200 {
        let d = te - target;
        settled = update_estimated_half_period(te, d, prev.unwrap_or(d), target, ctrl);
        match settled {
            Ok(v) => te = v,
            Err(_) => break,
        }
        prev = Some(d);
    }
    let converges = ctrl.kp > 0.0 || ctrl.kd > 0.0;
    let expected = if converges { target } else { ctrl.t0_e };
    out.push(close(
        "half-period estimate after 200 steps",
        expected,
        settled.map(|_| te),
        1e-6,
    ));

    let mut osc = OscillatorPair::new(0.5, 0.0, ctrl.t0_e);
    let dt = 1e-4;
    for _ in 0..50_000 {
        osc = advance(&osc, dt, ctrl);
    }
    let diff = (osc.phase_since_reset(crate::rhythm::Leg::Right)
        - osc.phase_since_reset(crate::rhythm::Leg::Left))
    .rem_euclid(TAU);
    out.push(close(
        "phase difference after 5 s",
        PI,
        Ok::<f64, String>(diff),
        1e-3,
    ));

    out
}

pub fn report(lines: &[CheckLine]) -> String {
    let mut s = String::new();
    for l in lines {
        s.push_str(&format!(
            "{} {}: expected {}, got {}\n",
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.expected,
            l.actual
        ));
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    s.push_str(&format!("{passed}/{} checks passed\n", lines.len()));
    s
}
