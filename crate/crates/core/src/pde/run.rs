//! Integration to blow-up with step halving and threshold-time extrapolation.

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::problem::{EvolutionProblem, FieldState};
use super::stepper::Stepper;
use crate::error::{Error, Result};
use crate::numeric::fit_line;

/// Levels `M` of `max |u|` whose crossing times are recorded.
pub const THRESHOLDS: [f64; 4] = [1e3, 1e4, 1e5, 1e6];

fn default_dt_min() -> f64 {
    1e-15
}

fn default_increment() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunControls {
    /// Initial (and largest) time step.
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    /// A step raising `max |u|` by more than this fraction is redone at half size.
    #[serde(default = "default_increment")]
    pub max_increment: f64,
    /// Spacing of stored `|u|` snapshots; none are kept when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_dt: Option<f64>,
}

impl RunControls {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max > 0.0) {
            out.push(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt) {
            out.push(format!("dt_min must lie in (0, dt), got {}", self.dt_min));
        }
        if !(self.max_increment > 0.0) {
            out.push(format!("max_increment must be positive, got {}", self.max_increment));
        }
        if let Some(s) = self.snapshot_dt {
            if !(s > 0.0) {
                out.push(format!("snapshot_dt must be positive, got {s}"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Blowup,
    Survived,
    Stalled,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Blowup => "blowup",
            RunStatus::Survived => "survived",
            RunStatus::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupRecord {
    pub epsilon: f64,
    pub p: f64,
    pub tau: u8,
    pub alpha: f64,
    pub zeta: f64,
    pub status: RunStatus,
    /// Crossing times of [`THRESHOLDS`].
    pub t_at: [Option<f64>; 4],
    pub t_extrapolated: Option<f64>,
    pub dt_final: f64,
    pub h: f64,
    pub steps: u64,
}

/// Stored moduli `|u|` at selected times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshots {
    pub times: Vec<f64>,
    pub moduli: Vec<Vec<f64>>,
}

impl Snapshots {
    fn push(&mut self, state: &FieldState) {
        self.times.push(state.t);
        self.moduli.push(state.u.iter().map(|z| z.norm()).collect());
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: BlowupRecord,
    pub snapshots: Snapshots,
    /// `max |u|` over nodes next to the truncation boundary at the final time.
    pub boundary_final: f64,
    /// The same maximum over the whole run.
    pub boundary_peak: f64,
    pub final_state: FieldState,
}

/// Rate `k` of the comparison law `T - t ~ u^{-k}`: `p - 1` for `u' = u^p`,
/// `(p - 1) / 2` for `u'' = u^p`.
pub fn blowup_rate(p: f64, tau: u8) -> f64 {
    (p - 1.0) / (1.0 + tau as f64)
}

/// `T_M = T_inf - c M^{-k}` fitted by least squares; returns `T_inf`.
pub fn extrapolate_blowup_time(levels: &[f64], times: &[f64], k: f64) -> Result<f64> {
    let m0 = levels.first().copied().unwrap_or(1.0);
    let xs: Vec<f64> = levels.iter().map(|m| (m / m0).powf(-k)).collect();
    Ok(fit_line(&xs, times)?.intercept)
}

// crossing time of level m between (t0, a0) and (t1, a1), linear in a^{-k}
fn crossing_time(t0: f64, a0: f64, t1: f64, a1: f64, m: f64, k: f64) -> f64 {
    if !a1.is_finite() || a0 <= 0.0 {
        return t1;
    }
    let g = |a: f64| a.powf(-k);
    let (g0, g1, gm) = (g(a0), g(a1), g(m));
    if g0 == g1 {
        return t1;
    }
    t0 + (t1 - t0) * ((g0 - gm) / (g0 - g1)).clamp(0.0, 1.0)
}

fn outer_max(grid: &Grid, state: &FieldState) -> f64 {
    grid.outer_nodes().iter().map(|&i| state.u[i].norm()).fold(0.0, f64::max)
}

/// Integrates until `max |u|` reaches the last threshold (blowup), `t_max`
/// (survived), or the step falls below `dt_min` (stalled).
pub fn run_until_blowup(problem: &EvolutionProblem, controls: &RunControls) -> Result<RunOutcome> {
    let mut v = problem.violations();
    v.extend(controls.violations());
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    let grid = Grid::new(problem.grid)?;
    let mut stepper = Stepper::new(&grid, problem.coefficients)?;
    if controls.dt > stepper.max_stable_dt() {
        return Err(Error::Precondition(format!(
            "dt = {} exceeds the CFL limit {}",
            controls.dt,
            stepper.max_stable_dt()
        )));
    }
    let p = problem.coefficients.p;
    let rate = blowup_rate(p, problem.coefficients.tau);
    let mut state = FieldState::initial(problem, &grid);
    let mut snapshots = Snapshots::default();
    let mut next_snapshot = 0.0;
    if let Some(sdt) = controls.snapshot_dt {
        snapshots.push(&state);
        next_snapshot = sdt;
    }
    let mut t_at = [None; 4];
    let mut amax = state.max_abs();
    let mut boundary_peak = outer_max(&grid, &state);
    let mut dt = controls.dt;
    let mut steps = 0u64;
    let mut trial = state.clone();
    let status = loop {
        if amax >= THRESHOLDS[3] {
            break RunStatus::Blowup;
        }
        if state.t >= controls.t_max * (1.0 - 1e-12) {
            break RunStatus::Survived;
        }
        if dt < controls.dt_min {
            break RunStatus::Stalled;
        }
        let h = dt.min(controls.t_max - state.t);
        trial.clone_from(&state);
        stepper.step(&mut trial, h)?;
        let new_max = trial.max_abs();
        if !new_max.is_finite() || new_max > amax * (1.0 + controls.max_increment) {
            dt *= 0.5;
            continue;
        }
        for (k, m) in THRESHOLDS.iter().enumerate() {
            if t_at[k].is_none() && amax < *m && new_max >= *m {
                t_at[k] = Some(crossing_time(state.t, amax, trial.t, new_max, *m, rate));
            }
        }
        std::mem::swap(&mut state, &mut trial);
        amax = new_max;
        steps += 1;
        boundary_peak = boundary_peak.max(outer_max(&grid, &state));
        if let Some(every) = controls.snapshot_dt {
            if state.t >= next_snapshot * (1.0 - 1e-12) {
                snapshots.push(&state);
                while next_snapshot <= state.t * (1.0 + 1e-12) {
                    next_snapshot += every;
                }
            }
        }
    };
    if controls.snapshot_dt.is_some() && snapshots.times.last() != Some(&state.t) {
        snapshots.push(&state);
    }
    let t_extrapolated = if t_at.iter().all(|t| t.is_some()) {
        let times: Vec<f64> = t_at.iter().map(|t| t.unwrap()).collect();
        Some(extrapolate_blowup_time(&THRESHOLDS, &times, rate)?)
    } else {
        None
    };
    let coef = &problem.coefficients;
    Ok(RunOutcome {
        record: BlowupRecord {
            epsilon: problem.initial.epsilon,
            p,
            tau: coef.tau,
            alpha: coef.alpha(),
            zeta: coef.zeta(),
            status,
            t_at,
            t_extrapolated,
            dt_final: dt,
            h: grid.spacing(),
            steps,
        },
        snapshots,
        boundary_final: outer_max(&grid, &state),
        boundary_peak,
        final_state: state,
    })
}
