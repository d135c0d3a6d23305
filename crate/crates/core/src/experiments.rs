//! Epsilon sweeps and the two competing lifespan laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::make_domain;
use crate::cutoff::CutoffFamily;
use crate::error::{Error, Result};
use crate::lifespan::{
    criterion_check, key_lemma_bound, predicted_regime, y_transform, BoundForm, BoundInputs, CriterionReport,
    FunctionalTrace, Regime, RegimeInputs,
};
use crate::numeric::fit_line;
use crate::pde::{
    functional_trace, initial_mass, phi_weights, run_until_blowup, BlowupRecord, Damping, EvolutionProblem, Grid,
    RunControls, RunOutcome, RunStatus,
};
use crate::verify::spread_about_mean;

/// Fewest blowup rows a fit accepts.
pub const MIN_FIT_ROWS: usize = 5;

/// Least-squares line through the transformed rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    NoBlowupObserved,
    InsufficientData,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Inconsistent => "inconsistent",
            Verdict::NoBlowupObserved => "no blowup observed",
            Verdict::InsufficientData => "insufficient data",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub id: String,
    /// One record per epsilon, sorted by epsilon.
    pub rows: Vec<BlowupRecord>,
    pub power: Option<LawFit>,
    pub exponential: Option<LawFit>,
    /// Why the fits are absent, if they are.
    pub fit_status: Option<String>,
}

impl SweepResult {
    /// `(eps, T_extrapolated)` of the rows that blew up.
    pub fn blowup_points(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.status == RunStatus::Blowup)
            .filter_map(|r| r.t_extrapolated.map(|t| (r.epsilon, t)))
            .collect()
    }
}

fn check_rows(rows: &[(f64, f64)]) -> Result<()> {
    if rows.len() < MIN_FIT_ROWS {
        return Err(Error::Fit(format!("{} rows, at least {MIN_FIT_ROWS} needed", rows.len())));
    }
    if rows.iter().any(|(e, t)| !(*e > 0.0) || !(*t > 0.0)) {
        return Err(Error::Fit("epsilon and T must be positive".into()));
    }
    Ok(())
}

fn fit(xs: &[f64], ys: &[f64]) -> Result<LawFit> {
    let l = fit_line(xs, ys)?;
    Ok(LawFit { slope: l.slope, intercept: l.intercept, r2: l.r2 })
}

/// `log T = intercept + slope log eps`.
pub fn fit_power_law(rows: &[(f64, f64)]) -> Result<LawFit> {
    check_rows(rows)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    fit(&xs, &ys)
}

/// `log T = intercept + slope eps^{-(p-1)}`.
pub fn fit_exponential_law(rows: &[(f64, f64)], p: f64) -> Result<LawFit> {
    check_rows(rows)?;
    if !(p > 1.0) {
        return Err(Error::arg("p", format!("must exceed 1, got {p}")));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0.powf(1.0 - p)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    fit(&xs, &ys)
}

/// Attaches both fits when enough rows blew up.
pub fn assemble(id: &str, mut rows: Vec<BlowupRecord>, p: f64) -> SweepResult {
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let mut out = SweepResult { id: id.to_string(), rows, power: None, exponential: None, fit_status: None };
    let pts = out.blowup_points();
    if pts.is_empty() {
        out.fit_status = Some("no blowup observed".into());
        return out;
    }
    match (fit_power_law(&pts), fit_exponential_law(&pts, p)) {
        (Ok(a), Ok(b)) => {
            out.power = Some(a);
            out.exponential = Some(b);
        }
        (Err(e), _) | (_, Err(e)) => out.fit_status = Some(format!("fit skipped: {e}")),
    }
    out
}

/// Runs `template` at every epsilon, in parallel on `jobs` workers (all
/// cores when `None`). Rows come back in epsilon order whatever the
/// scheduling, so the result does not depend on the worker count.
pub fn sweep(
    id: &str,
    template: &EvolutionProblem,
    controls: &RunControls,
    epsilons: &[f64],
    jobs: Option<usize>,
) -> Result<SweepResult> {
    if epsilons.len() < MIN_FIT_ROWS {
        return Err(Error::arg("epsilons", format!("at least {MIN_FIT_ROWS} values are needed")));
    }
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    if eps.windows(2).any(|w| w[0] == w[1]) || !(eps[0] > 0.0) {
        return Err(Error::arg("epsilons", "values must be positive and distinct"));
    }
    let run = |e: &f64| {
        let mut prob = template.clone();
        prob.initial.epsilon = *e;
        run_until_blowup(&prob, controls).map(|o| o.record)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::arg("jobs", e.to_string()))?;
    let rows = pool.install(|| eps.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    Ok(assemble(id, rows, template.coefficients.p))
}

/// Picks the better-fitting law and compares it with the predicted regime.
/// `tolerance` is relative, applied to the predicted exponent of the power-type rows.
pub fn regime_verdict(sr: &SweepResult, predicted: &Regime, tolerance: f64) -> Verdict {
    let (Some(pw), Some(ex)) = (sr.power, sr.exponential) else {
        return if sr.blowup_points().is_empty() { Verdict::NoBlowupObserved } else { Verdict::InsufficientData };
    };
    let exp_wins = ex.r2 > pw.r2;
    let ok = match (predicted.form, predicted.exponent) {
        (BoundForm::Exponential, _) => exp_wins && ex.slope > 0.0 && ex.r2 >= 0.95,
        (_, Some(e)) => !exp_wins && (pw.slope - e).abs() <= tolerance * e.abs(),
        (_, None) => false,
    };
    if ok {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    }
}

fn default_r1() -> f64 {
    2.0
}

fn default_fraction() -> f64 {
    0.95
}

fn default_radii() -> usize {
    120
}

/// Radii at which a run's functional trace is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    /// Lower end `R1` of the criterion check.
    #[serde(default = "default_r1")]
    pub r1: f64,
    /// Largest radius as a fraction of the extrapolated blowup time.
    #[serde(default = "default_fraction")]
    pub r_max_fraction: f64,
    /// Number of radii above 1.
    #[serde(default = "default_radii")]
    pub radii: usize,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self { r1: default_r1(), r_max_fraction: default_fraction(), radii: default_radii() }
    }
}

impl TraceSpec {
    /// `1` followed by `1 + (R_max - 1)(i / n)^2`, dense near 1 where `y` switches on.
    pub fn radii_for(&self, r_max: f64) -> Vec<f64> {
        let n = self.radii;
        let mut out = vec![1.0];
        out.extend((1..=n).map(|i| 1.0 + (r_max - 1.0) * (i as f64 / n as f64).powi(2)));
        out
    }

    pub fn violations(&self, out: &mut Vec<String>) {
        if !(self.r1 > 1.0 && self.r1.is_finite()) {
            out.push(format!("trace.r1 must exceed 1, got {}", self.r1));
        }
        if !(self.r_max_fraction > 0.0 && self.r_max_fraction < 1.0) {
            out.push(format!("trace.r_max_fraction must lie in (0, 1), got {}", self.r_max_fraction));
        }
        if self.radii < 8 {
            out.push(format!("trace.radii must be at least 8, got {}", self.radii));
        }
    }
}

/// A run's functional trace together with the criterion and the lemma bound it implies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceAnalysis {
    /// Extrapolated blowup time of the run.
    pub t_blowup: f64,
    /// Weighted initial mass, the lemma's `delta`.
    pub delta: f64,
    pub theta: f64,
    pub trace: FunctionalTrace,
    pub report: CriterionReport,
    /// Largest relative deviation of the required `C0` from its mean over the checked radii.
    pub c0_spread: f64,
    /// `key_lemma_bound` at the measured `delta` and minimal `C0`.
    pub bound: f64,
}

/// Traces a finished run on the radii of `spec`, checks the criterion there
/// and evaluates the lemma. `theta` comes from the predicted regime.
pub fn analyze_trace(problem: &EvolutionProblem, outcome: &RunOutcome, spec: &TraceSpec) -> Result<TraceAnalysis> {
    let t_blowup = match (outcome.record.status, outcome.record.t_extrapolated) {
        (RunStatus::Blowup, Some(t)) => t,
        _ => return Err(Error::Precondition("the run did not blow up; there is no lifespan to trace".into())),
    };
    let coef = &problem.coefficients;
    let grid = Grid::new(problem.grid)?;
    let domain = make_domain(problem.grid.geometry.cone()?)?;
    let phi = phi_weights(&grid, &domain)?;
    let delta = initial_mass(problem, &grid, &phi);
    let r_max = spec.r_max_fraction * t_blowup;
    if r_max <= spec.r1 {
        return Err(Error::Precondition(format!("the traced range ends at R = {r_max}, below R1 = {}", spec.r1)));
    }
    let family = CutoffFamily::new(1.0, coef.alpha(), coef.p, domain.dim())?;
    let trace = functional_trace(&grid, &outcome.snapshots, &phi, &family, &spec.radii_for(r_max))?;
    y_transform(&trace)?;
    let regime = predicted_regime(&RegimeInputs {
        dim: domain.dim(),
        gamma: domain.gamma(),
        alpha: coef.alpha(),
        p: coef.p,
        singular: matches!(coef.damping, Damping::Singular { .. }),
    })?;
    let inputs = BoundInputs { delta, c0: 1.0, r1: spec.r1, theta: regime.theta, p: coef.p };
    let report = criterion_check(&trace, &inputs)?;
    let c0_spread = spread_about_mean(&report.required_c0);
    let bound = key_lemma_bound(&BoundInputs { c0: report.min_c0, ..inputs })?;
    Ok(TraceAnalysis { t_blowup, delta, theta: regime.theta, trace, report, c0_spread, bound })
}
