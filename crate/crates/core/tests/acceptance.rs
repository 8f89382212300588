//! Acceptance suite. Every criterion is evaluated and reported on its own
//! line; the process exits non-zero if any of them fails.

use std::f64::consts::{PI, TAU};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use slip_cpg::analysis::{apex_map, period_convergence, phase_statistics};
use slip_cpg::harness::{run_episode, EpisodeResult, Termination};
use slip_cpg::params::ControllerParams;
use slip_cpg::pattern::{categorize_phase, mu_gain, update_mu, PhaseCategory};
use slip_cpg::rhythm::{advance, update_estimated_half_period, Leg, OscillatorPair};
use slip_cpg::slip::{integrate_step, rk4, EventKind, Mode, SlipState};
use slip_cpg::{PhysicalParams, Preset};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Runs {
    without: EpisodeResult,
    without_time: Duration,
    with: EpisodeResult,
    with_time: Duration,
}

fn timed(p: Preset) -> (EpisodeResult, Duration) {
    let start = Instant::now();
    let r = run_episode(&p.config().validate().unwrap()).unwrap();
    (r, start.elapsed())
}

fn falls_without_feedback(runs: &Runs) -> Outcome {
    let t = runs.without.termination;
    let fell_early = matches!(t, Termination::Fell { steps, .. } if steps <= 40);
    let fast = runs.without_time < Duration::from_secs(5);
    outcome(
        fell_early && fast,
        format!("{t:?} in {:.2?}", runs.without_time),
    )
}

fn runs_3000_steps_with_feedback(runs: &Runs) -> Outcome {
    let t = runs.with.termination;
    let fast = runs.with_time < Duration::from_secs(300);
    outcome(
        t == Termination::Completed { steps: 3000 } && fast,
        format!("{t:?} in {:.2?}", runs.with_time),
    )
}

fn antiphase_at_touchdown(runs: &Runs) -> Outcome {
    match phase_statistics(&runs.with.timeline).ready() {
        Some(s) => {
            let dphi = (s.phi_mean - PI).abs();
            let dpsi = (s.psi_mean - 3.0 * PI).abs();
            outcome(
                dphi <= 0.05 && dpsi <= 0.05,
                format!("phi mean off pi by {dphi:.2e}, psi mean off 3pi by {dpsi:.2e}"),
            )
        }
        None => outcome(false, "fewer than 3 strides".into()),
    }
}

fn half_period_tracking(runs: &Runs) -> Outcome {
    let steps = &runs.with.timeline.steps;
    let tail: Vec<f64> = steps[steps.len() - 10..]
        .iter()
        .map(|s| (s.estimated_half_period - s.half_period.unwrap()).abs())
        .collect();
    let worst = tail.iter().cloned().fold(0.0, f64::max);
    let frozen = runs
        .without
        .timeline
        .steps
        .iter()
        .all(|s| s.estimated_half_period.to_bits() == 0.5f64.to_bits());
    outcome(
        worst < 5e-3 && frozen,
        format!("worst |Te-T| over last 10 steps {worst:.2e} s; estimate frozen at 0.5 without feedback: {frozen}"),
    )
}

fn recurrence_oracle() -> Outcome {
    let ctrl = Preset::WithFeedback.config().controller;
    let target = 0.4;
    let mut worst_iters = 0;
    let mut agree = true;
    for t0 in [0.2, 0.5, 1.0] {
        // the recurrence written out independently of the library
        let (mut te, mut prev) = (t0, None::<f64>);
        let mut lib = t0;
        let mut lib_prev = None::<f64>;
        let mut hit = None;
        for i in 1..=30 {
            let d = te - target;
            let dp = prev.unwrap_or(d);
            te = (te - 0.8 * d - 0.1 * (d - dp) / target).max(0.05);
            prev = Some(d);

            let ld = lib - target;
            lib = update_estimated_half_period(lib, ld, lib_prev.unwrap_or(ld), target, &ctrl)
                .unwrap();
            lib_prev = Some(ld);
            agree &= (lib - te).abs() <= 1e-15;
            if hit.is_none() && (te - target).abs() < 1e-3 {
                hit = Some(i);
            }
        }
        match hit {
            Some(i) => worst_iters = worst_iters.max(i),
            None => {
                return outcome(
                    false,
                    format!("from {t0} not within 1 ms after 30 iterations"),
                )
            }
        }
    }
    outcome(
        agree,
        format!("all starts within 1 ms by iteration {worst_iters}; library agrees with the hand recurrence: {agree}"),
    )
}

fn touchdown_state(p: &PhysicalParams, dt: f64) -> SlipState {
    let mut s = SlipState::apex(0.93, 5.2);
    loop {
        let out = integrate_step(&s, 0.0, dt, p).unwrap();
        s = out.state;
        if let Some(ev) = out.event {
            assert_eq!(ev.kind, EventKind::Touchdown);
            return s;
        }
    }
}

/// Integrates one stance at a constant hip torque and returns the energy
/// change, the hip work and the damper loss, each by the trapezoidal rule
/// over the step end points.
fn stance_energy_budget(p: &PhysicalParams, tau: f64, dt: f64) -> (f64, f64, f64, f64) {
    let td = touchdown_state(p, dt);
    let e0 = td.energy(p);
    let power = |s: &SlipState| {
        let st = SlipState {
            mode: Mode::Stance,
            ..*s
        };
        let rd = st.leg_rate(p);
        (tau * st.sweep_rate(p), p.c * rd * rd)
    };
    let (mut work, mut loss) = (0.0, 0.0);
    let mut s = td;
    loop {
        let out = integrate_step(&s, tau, dt, p).unwrap();
        let (w0, l0) = power(&s);
        let (w1, l1) = power(&out.state);
        work += 0.5 * (w0 + w1) * out.elapsed;
        loss += 0.5 * (l0 + l1) * out.elapsed;
        s = out.state;
        if let Some(ev) = out.event {
            assert_eq!(ev.kind, EventKind::Liftoff);
            break;
        }
    }
    (e0, s.energy(p) - e0, work, loss)
}

fn energy_audit() -> Outcome {
    let p = PhysicalParams::default();
    let dt = 1e-5;
    let (e0, de, work, loss) = stance_energy_budget(&p, p.tau_c, dt);
    let driven = (de - (work - loss)).abs() / e0.abs();
    let free = PhysicalParams { c: 0.0, ..p };
    let (f0, fde, _, _) = stance_energy_budget(&free, 0.0, dt);
    let conservative = fde.abs() / f0.abs();
    outcome(
        driven < 1e-6 && conservative < 1e-8,
        format!("driven stance residual {driven:.2e} (dE {de:.3} J, hip work {work:.3} J, damper loss {loss:.3} J); conservative drift {conservative:.2e}"),
    )
}

fn flight_error(dt: f64, horizon: f64, p: &PhysicalParams) -> f64 {
    let start = SlipState {
        vy: 1.5,
        ..SlipState::apex(0.9, 5.0)
    };
    let n = (horizon / dt).round() as usize;
    let mut s = start;
    for _ in 0..n {
        s = rk4(&s, 0.0, dt, p);
    }
    let t = n as f64 * dt;
    let exact = [
        start.x + start.vx * t,
        start.y + start.vy * t - 0.5 * p.g * t * t,
        start.vx,
        start.vy - p.g * t,
    ];
    [s.x, s.y, s.vx, s.vy]
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn flight_integrator_order() -> Outcome {
    let p = PhysicalParams::default();
    let coarse = flight_error(1e-3, 0.3, &p);
    let fine = flight_error(5e-4, 0.3, &p);
    let ratio = coarse / fine;
    outcome(
        ratio >= 12.0,
        format!("error {coarse:.3e} at dt 1e-3, {fine:.3e} at dt 5e-4, ratio {ratio:.3}"),
    )
}

fn coupling_fixed_point() -> Outcome {
    let ctrl = ControllerParams {
        epsilon: 4.0,
        ..Preset::WithFeedback.config().controller
    };
    let mut osc = OscillatorPair::new(0.5, 0.0, 0.5);
    for _ in 0..50_000 {
        osc = advance(&osc, 1e-4, &ctrl);
    }
    let lib =
        (osc.phase_since_reset(Leg::Right) - osc.phase_since_reset(Leg::Left)).rem_euclid(TAU);
    // reference: the scalar difference equation at a much finer step
    let mut d = 0.5f64;
    let h = 1e-6;
    for _ in 0..5_000_000 {
        d += h * 2.0 * 4.0 * d.sin();
    }
    let pass = (lib - PI).abs() < 1e-3 && (d - PI).abs() < 1e-3 && (lib - d).abs() < 1e-3;
    outcome(
        pass,
        format!(
            "simulated difference off pi by {:.2e}, reference off pi by {:.2e}",
            (lib - PI).abs(),
            (d - PI).abs()
        ),
    )
}

fn pattern_formulator_suite() -> Outcome {
    let ctrl = Preset::RobotControllerUnit.config().controller;
    let mu = 0.6;
    let same = update_mu(mu, 35.0, &ctrl).unwrap() == 0.6;
    let under = update_mu(mu, 30.0, &ctrl).unwrap() == 0.98;
    let over = update_mu(mu, 37.0, &ctrl).unwrap() == 0.6 - 0.005 * 2.0;

    let (beta, m) = (ctrl.beta, ctrl.mu0);
    let n = 1_000_000;
    let mut partition = true;
    let mut last = PhaseCategory::Stance;
    for i in 0..n {
        let phi = TAU * i as f64 / n as f64;
        let c = categorize_phase(phi, beta, m);
        let want = if phi < TAU * beta {
            PhaseCategory::Stance
        } else if phi < TAU * m {
            PhaseCategory::EarlySwing
        } else {
            PhaseCategory::LateSwing
        };
        let ordered = !matches!(
            (last, c),
            (PhaseCategory::EarlySwing, PhaseCategory::Stance)
                | (
                    PhaseCategory::LateSwing,
                    PhaseCategory::Stance | PhaseCategory::EarlySwing
                )
        );
        partition &= c == want && ordered;
        last = c;
    }
    let ratio = mu_gain(30.0, &ctrl) / mu_gain(40.0, &ctrl);
    let asym = ratio == 20.0;
    outcome(
        same && under && over && partition && asym,
        format!("tabulated updates {same}/{under}/{over}; partition over {n} phases {partition}; gain ratio {ratio}"),
    )
}

fn cli_outputs(preset: Preset, dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_slip-cpg"))
        .args(["run", "--quiet", "--preset", preset.name(), "--out"])
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.code().is_some());
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let mut compared = 0;
    for preset in Preset::ALL {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = cli_outputs(preset, a.path());
        let fb = cli_outputs(preset, b.path());
        if fa.is_empty() || fa != fb {
            return outcome(false, format!("{preset} outputs differ between runs"));
        }
        compared += fa.len();
    }
    outcome(
        true,
        format!("{compared} files byte-identical across repeated runs of every preset"),
    )
}

fn limit_cycle_cooccurrence(runs: &Runs) -> Outcome {
    let tl = &runs.with.timeline;
    let converged = period_convergence(tl, 5e-3, 10)
        .ready()
        .is_some_and(|p| p.converged);
    let phases = phase_statistics(tl)
        .ready()
        .is_some_and(|s| (s.phi_mean - PI).abs() <= 0.05 && (s.psi_mean - 3.0 * PI).abs() <= 0.05);
    let residual = apex_map(&runs.with.trajectory).ready().map(|a| a.residual);
    let settled = residual.is_some_and(|r| r < 1e-3);
    outcome(
        converged && phases && settled,
        format!(
            "period converged {converged}, phases in band {phases}, apex residual {residual:?}"
        ),
    )
}

fn main() -> ExitCode {
    let (without, without_time) = timed(Preset::WithoutFeedback);
    let (with, with_time) = timed(Preset::WithFeedback);
    let runs = Runs {
        without,
        without_time,
        with,
        with_time,
    };
    let results = [
        (
            "1",
            "without feedback the runner falls within 40 steps",
            falls_without_feedback(&runs),
        ),
        (
            "2",
            "with feedback the runner completes 3000 steps",
            runs_3000_steps_with_feedback(&runs),
        ),
        (
            "3",
            "pre-touchdown phase difference and sum settle at pi and 3pi",
            antiphase_at_touchdown(&runs),
        ),
        (
            "4",
            "estimated half-period tracks the measured one",
            half_period_tracking(&runs),
        ),
        (
            "5",
            "half-period recurrence converges within 30 iterations",
            recurrence_oracle(),
        ),
        ("6", "stance energy balance", energy_audit()),
        (
            "7",
            "flight error shrinks at fourth order",
            flight_integrator_order(),
        ),
        (
            "8",
            "coupled oscillators settle in antiphase",
            coupling_fixed_point(),
        ),
        ("9", "pattern formulator laws", pattern_formulator_suite()),
        ("10", "repeated runs write identical files", determinism()),
        (
            "joint",
            "limit cycle and converged coupling co-occur",
            limit_cycle_cooccurrence(&runs),
        ),
    ];
    let mut failed = 0;
    for (id, name, o) in &results {
        println!(
            "criterion {id:>5}: {} {name} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
