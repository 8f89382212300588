//! Reductions of a finished episode: period convergence, pre-touchdown phase
//! statistics and the apex return map.

use std::fmt::Write as _;

use crate::harness::{EpisodeResult, GaitTimeline, Termination, TrajectorySample};
use crate::slip::Mode;

pub const CONVERGENCE_TOLERANCE: f64 = 5e-3;
pub const CONVERGENCE_WINDOW: usize = 10;
pub const MIN_STRIDES: usize = 3;
pub const TERMINAL_STRIDES: usize = 10;
pub const APEX_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict<T> {
    Ready(T),
    NotEnoughData { needed: usize, available: usize },
}

impl<T> Verdict<T> {
    pub fn ready(&self) -> Option<&T> {
        match self {
            Verdict::Ready(v) => Some(v),
            Verdict::NotEnoughData { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodConvergence {
    pub converged: bool,
    /// First step from which every later step stays inside the tolerance.
    pub step_of_convergence: Option<u64>,
    /// Mean `|T_e − T|` over the final window [s].
    pub residual: f64,
}

/// Compares estimated and measured half-periods over the final `window`
/// measured steps.
pub fn period_convergence(
    timeline: &GaitTimeline,
    tolerance: f64,
    window: usize,
) -> Verdict<PeriodConvergence> {
    let errors: Vec<(u64, f64)> = timeline
        .steps
        .iter()
        .filter_map(|s| {
            s.half_period
                .map(|t| (s.n, (s.estimated_half_period - t).abs()))
        })
        .collect();
    if window == 0 || errors.len() < window {
        return Verdict::NotEnoughData {
            needed: window.max(1),
            available: errors.len(),
        };
    }
    let tail = &errors[errors.len() - window..];
    let residual = tail.iter().map(|e| e.1).sum::<f64>() / window as f64;
    let converged = tail.iter().all(|e| e.1 < tolerance);
    let step_of_convergence = if converged {
        let settled = errors.iter().rev().take_while(|e| e.1 < tolerance).count();
        Some(errors[errors.len() - settled].0)
    } else {
        None
    };
    Verdict::Ready(PeriodConvergence {
        converged,
        step_of_convergence,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStatistics {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Means over the last [`TERMINAL_STRIDES`] strides [rad].
    pub phi_mean: f64,
    pub psi_mean: f64,
}

pub fn phase_statistics(timeline: &GaitTimeline) -> Verdict<PhaseStatistics> {
    let strides = &timeline.strides;
    if strides.len() < MIN_STRIDES {
        return Verdict::NotEnoughData {
            needed: MIN_STRIDES,
            available: strides.len(),
        };
    }
    let phi: Vec<f64> = strides.iter().map(|s| s.phi_minus).collect();
    let psi: Vec<f64> = strides.iter().map(|s| s.psi_minus).collect();
    let tail = |v: &[f64]| {
        let w = &v[v.len().saturating_sub(TERMINAL_STRIDES)..];
        w.iter().sum::<f64>() / w.len() as f64
    };
    Verdict::Ready(PhaseStatistics {
        phi_mean: tail(&phi),
        psi_mean: tail(&psi),
        phi,
        psi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Apex {
    pub t: f64,
    pub y: f64,
    pub vx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApexMap {
    pub apexes: Vec<Apex>,
    /// Largest distance between consecutive apexes among the last
    /// [`APEX_WINDOW`], in the unweighted (m, m/s) plane.
    pub residual: f64,
}

/// Apex states found between consecutive trajectory samples.
///
/// A flight sample with `vy ≥ 0` followed by one with `vy < 0` brackets an
/// apex. Flight is ballistic, so the apex is extrapolated exactly from the
/// first sample using the deceleration measured across the pair.
pub fn find_apexes(trajectory: &[TrajectorySample]) -> Vec<Apex> {
    trajectory
        .windows(2)
        .filter(|w| w[0].mode == Mode::Flight && w[0].vy >= 0.0 && w[1].vy < 0.0)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let g = (a.vy - b.vy) / (b.t - a.t);
            Apex {
                t: a.t + a.vy / g,
                y: a.y + a.vy * a.vy / (2.0 * g),
                vx: a.vx,
            }
        })
        .collect()
}

pub fn apex_map(trajectory: &[TrajectorySample]) -> Verdict<ApexMap> {
    let apexes = find_apexes(trajectory);
    if apexes.len() < 2 {
        return Verdict::NotEnoughData {
            needed: 2,
            available: apexes.len(),
        };
    }
    let tail = &apexes[apexes.len().saturating_sub(APEX_WINDOW)..];
    let residual = tail
        .windows(2)
        .map(|w| (w[1].y - w[0].y).hypot(w[1].vx - w[0].vx))
        .fold(0.0, f64::max);
    Verdict::Ready(ApexMap { apexes, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub run_id: String,
    pub preset: String,
    pub termination: Termination,
    pub duration: f64,
    pub period: Verdict<PeriodConvergence>,
    pub phases: Verdict<PhaseStatistics>,
    pub apex: Verdict<ApexMap>,
    pub final_half_period: Option<f64>,
    pub final_estimated_half_period: Option<f64>,
    pub final_mu: Option<f64>,
}

pub fn summarize(run_id: &str, preset: &str, result: &EpisodeResult) -> Summary {
    let last = result.timeline.steps.last();
    Summary {
        run_id: run_id.to_string(),
        preset: preset.to_string(),
        termination: result.termination,
        duration: result.duration,
        period: period_convergence(&result.timeline, CONVERGENCE_TOLERANCE, CONVERGENCE_WINDOW),
        phases: phase_statistics(&result.timeline),
        apex: apex_map(&result.trajectory),
        final_half_period: last.and_then(|s| s.half_period),
        final_estimated_half_period: last.map(|s| s.estimated_half_period),
        final_mu: last.map(|s| s.mu),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| x.to_string())
}

impl Summary {
    /// `key value` pairs in a fixed order.
    pub fn metrics(&self) -> Vec<(&'static str, String)> {
        let (status, cause, fall_time) = match self.termination {
            Termination::Completed { .. } => ("completed", "none".to_string(), None),
            Termination::Fell { cause, t, .. } => ("fell", cause.name().to_string(), Some(t)),
        };
        let period = self.period.ready();
        let phases = self.phases.ready();
        let apex = self.apex.ready();
        vec![
            ("run_id", self.run_id.clone()),
            ("preset", self.preset.clone()),
            ("termination", status.to_string()),
            ("steps", self.termination.steps().to_string()),
            ("fall_cause", cause),
            ("fall_time_s", opt(fall_time)),
            ("duration_s", self.duration.to_string()),
            (
                "period_converged",
                period.map_or("not_enough_data".to_string(), |p| p.converged.to_string()),
            ),
            (
                "period_step_of_convergence",
                period
                    .and_then(|p| p.step_of_convergence)
                    .map_or("na".to_string(), |n| n.to_string()),
            ),
            ("period_residual_s", opt(period.map(|p| p.residual))),
            ("final_half_period_s", opt(self.final_half_period)),
            (
                "final_estimated_half_period_s",
                opt(self.final_estimated_half_period),
            ),
            ("final_mu", opt(self.final_mu)),
            ("strides", phases.map_or(0, |p| p.phi.len()).to_string()),
            ("phi_terminal_mean_rad", opt(phases.map(|p| p.phi_mean))),
            ("psi_terminal_mean_rad", opt(phases.map(|p| p.psi_mean))),
            ("apex_count", apex.map_or(0, |a| a.apexes.len()).to_string()),
            ("apex_residual", opt(apex.map(|a| a.residual))),
        ]
    }

    pub fn metrics_text(&self) -> String {
        self.metrics()
            .into_iter()
            .fold(String::new(), |mut s, (k, v)| {
                let _ = writeln!(s, "{k} {v}");
                s
            })
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run {} ({})", self.run_id, self.preset);
        match self.termination {
            Termination::Completed { steps } => {
                let _ = writeln!(s, "termination: Completed({steps})");
            }
            Termination::Fell { steps, t, cause } => {
                let _ = writeln!(
                    s,
                    "termination: Fell at step {steps}, t = {t:.3} s ({cause})"
                );
            }
        }
        let _ = writeln!(s, "simulated time: {:.3} s", self.duration);
        match &self.period {
            Verdict::Ready(p) => {
                let _ = writeln!(
                    s,
                    "half-period: converged = {} (tol {} ms over {} steps), residual {:.3e} s{}",
                    p.converged,
                    CONVERGENCE_TOLERANCE * 1e3,
                    CONVERGENCE_WINDOW,
                    p.residual,
                    p.step_of_convergence
                        .map(|n| format!(", settled from step {n}"))
                        .unwrap_or_default()
                );
            }
            Verdict::NotEnoughData { needed, available } => {
                let _ = writeln!(
                    s,
                    "half-period: not enough data ({available} of {needed} steps)"
                );
            }
        }
        if let (Some(t), Some(te)) = (self.final_half_period, self.final_estimated_half_period) {
            let _ = writeln!(s, "final T = {t:.5} s, T_e = {te:.5} s");
        }
        match &self.phases {
            Verdict::Ready(p) => {
                let pi = std::f64::consts::PI;
                let _ = writeln!(
                    s,
                    "pre-touchdown phases (last {} strides): phi = {:.5} rad ({:.4} pi), psi = {:.5} rad ({:.4} pi)",
                    p.phi.len().min(TERMINAL_STRIDES),
                    p.phi_mean,
                    p.phi_mean / pi,
                    p.psi_mean,
                    p.psi_mean / pi
                );
            }
            Verdict::NotEnoughData { needed, available } => {
                let _ = writeln!(
                    s,
                    "pre-touchdown phases: not enough data ({available} of {needed} strides)"
                );
            }
        }
        match &self.apex {
            Verdict::Ready(a) => {
                let _ = writeln!(
                    s,
                    "apex map: {} apexes, residual {:.3e}",
                    a.apexes.len(),
                    a.residual
                );
            }
            Verdict::NotEnoughData { available, .. } => {
                let _ = writeln!(s, "apex map: not enough data ({available} apexes)");
            }
        }
        s
    }
}
