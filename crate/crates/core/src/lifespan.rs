//! Upper bounds for the lifespan: the closed form of the differential
//! inequality lemma, an ODE oracle for it, the `Y` transform of a functional
//! trace, the criterion checker and the per-regime theorem bounds.

use std::f64::consts::LN_2;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::cone::fujita_threshold;
use crate::error::{Error, Result};
use crate::numeric::Dopri5;

/// Inputs `(delta, C0, R1, theta, p)` of the lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub delta: f64,
    pub c0: f64,
    pub r1: f64,
    pub theta: f64,
    pub p: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::arg(name, format!("must be positive and finite, got {v}")))
            }
        };
        pos("delta", self.delta)?;
        pos("C0", self.c0)?;
        pos("R1", self.r1)?;
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::arg("theta", format!("must be >= 0, got {}", self.theta)));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::arg("p", format!("must exceed 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// Logarithm of the lemma's upper bound for `T`.
pub fn key_lemma_log_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let pm1 = b.p - 1.0;
    if b.theta > 0.0 {
        let k = pm1 * b.theta;
        // log(R1^k + log2 C0^p theta delta^{-(p-1)}) without overflow
        let a = k * b.r1.ln();
        let c = LN_2.ln() + b.p * b.c0.ln() + b.theta.ln() - pm1 * b.delta.ln();
        let (hi, lo) = if a > c { (a, c) } else { (c, a) };
        Ok((hi + (lo - hi).exp().ln_1p()) / k)
    } else {
        Ok(b.r1.ln() + LN_2 / pm1 * (b.p * b.c0.ln() - pm1 * b.delta.ln()).exp())
    }
}

/// The lemma's upper bound for `T` (may be `inf` when it exceeds `f64`).
pub fn key_lemma_bound(b: &BoundInputs) -> Result<f64> {
    Ok(key_lemma_log_bound(b)?.exp())
}

/// Saturation radius `rho*` of `dZ/drho = (log2 delta + Z)^p / ((log2)^p C0^p)`
/// with `Z(0) = 0`, and the radius `R` reached at `rho*` through
/// `d(log R)/drho = R^{-(p-1) theta}`. Returns `log R`.
fn saturation_log_radius(b: &BoundInputs, rtol: f64) -> Result<f64> {
    let pm1 = b.p - 1.0;
    let l_delta = LN_2 * b.delta;
    let k = (LN_2 * b.c0).powf(b.p);
    // time to blow up, written as int_0^inf K / (L delta + Z)^p dZ and
    // integrated in sigma with Z = L delta (e^sigma - 1)
    let ode = Dopri5::with_tolerance(rtol);
    let sigma_max = 60.0 / pm1;
    let scale = k * l_delta.powf(-pm1);
    let (_, rho) =
        ode.solve(|sigma, _| [scale * (-pm1 * sigma).exp()], 0.0, [0.0], sigma_max, |_, _| ControlFlow::Continue(()))?;
    let rho_star = rho[0];
    let decay = pm1 * b.theta;
    let (_, log_r) =
        ode.solve(|_, y| [(-decay * y[0]).exp()], 0.0, [b.r1.ln()], rho_star, |_, _| ControlFlow::Continue(()))?;
    Ok(log_r[0])
}

/// Independent ODE evaluation of the lemma's bound, returned as `log T`.
/// `rtol` is the integrator tolerance; a run at `rtol / 100` must agree to
/// `1e-6` in `log T` (i.e. relative in `T`).
pub fn ode_saturation_oracle_log(b: &BoundInputs, rtol: f64) -> Result<f64> {
    b.validate()?;
    if !(rtol > 0.0 && rtol < 1e-3) {
        return Err(Error::arg("step", format!("tolerance must lie in (0, 1e-3), got {rtol}")));
    }
    let coarse = saturation_log_radius(b, rtol)?;
    let fine = saturation_log_radius(b, rtol * 1e-2)?;
    if (coarse - fine).abs() > 1e-6 * fine.abs().max(1.0) {
        return Err(Error::InsufficientResolution(format!("oracle refinements disagree: log T = {coarse} vs {fine}")));
    }
    Ok(fine)
}

pub fn ode_saturation_oracle(b: &BoundInputs, rtol: f64) -> Result<f64> {
    Ok(ode_saturation_oracle_log(b, rtol)?.exp())
}

/// Radii with the space-time masses `y_i` (against `psi*`) and `m_i` (against `psi`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalTrace {
    pub radii: Vec<f64>,
    pub y: Vec<f64>,
    pub m: Vec<f64>,
}

impl FunctionalTrace {
    pub fn validate(&self) -> Result<()> {
        let n = self.radii.len();
        if self.y.len() != n || self.m.len() != n {
            return Err(Error::InconsistentTrace("radii, y and m differ in length".into()));
        }
        if n == 0 {
            return Err(Error::InconsistentTrace("empty trace".into()));
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) || !(self.radii[0] > 0.0) {
            return Err(Error::InconsistentTrace("radii must be positive and increasing".into()));
        }
        if self.y.iter().chain(&self.m).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InconsistentTrace("masses must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// `Y(R_i)` with its refinement error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct YTransform {
    pub values: Vec<f64>,
    /// Richardson estimate of the trapezoid error at the even-indexed radii.
    pub error: Vec<f64>,
}

/// Relative tolerance on the quadrature error of `Y` and on the contract.
pub const Y_QUADRATURE_TOL: f64 = 0.01;

fn log_trapezoid(radii: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..radii.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (radii[i] / radii[i - 1]).ln();
        out.push(acc);
    }
    out
}

/// `Y(R) = int_0^R y(r) dr / r` by the trapezoid rule in `log r`. The trace
/// must start at a radius `R_0 <= 1`, below which `y` vanishes identically
/// (`<x>^{2-alpha} + t >= 1`). The rule is checked against the same rule on
/// every other radius; the contract `Y(R_i) <= (log 2) m_i` is enforced.
pub fn y_transform(tr: &FunctionalTrace) -> Result<YTransform> {
    tr.validate()?;
    if tr.radii[0] > 1.0 {
        return Err(Error::Precondition(format!(
            "trace must start at a radius <= 1 where y vanishes, first radius is {}",
            tr.radii[0]
        )));
    }
    let values = log_trapezoid(&tr.radii, &tr.y);
    let even_r: Vec<f64> = tr.radii.iter().step_by(2).cloned().collect();
    let even_y: Vec<f64> = tr.y.iter().step_by(2).cloned().collect();
    let coarse = log_trapezoid(&even_r, &even_y);
    let mut error = Vec::with_capacity(coarse.len());
    // errors are judged against max(Y_i, Y_final / 100): early radii where
    // y switches on steeply carry a large relative but negligible absolute error
    let floor = 1e-2 * values.last().copied().unwrap_or(0.0);
    for (j, c) in coarse.iter().enumerate() {
        let f = values[2 * j];
        let est = (f - c).abs() / 3.0;
        if est > Y_QUADRATURE_TOL * f.max(floor) && est > 1e-300 {
            return Err(Error::InsufficientResolution(format!(
                "Y({}) = {f:e} has estimated quadrature error {est:e}",
                tr.radii[2 * j]
            )));
        }
        error.push(est);
    }
    for (i, (yv, mv)) in values.iter().zip(&tr.m).enumerate() {
        if *yv > LN_2 * mv * (1.0 + Y_QUADRATURE_TOL) + 1e-300 {
            return Err(Error::InconsistentTrace(format!(
                "Y({}) = {yv:e} exceeds (log 2) m = {:e}",
                tr.radii[i],
                LN_2 * mv
            )));
        }
    }
    Ok(YTransform { values, error })
}

/// Per-radius outcome of the criterion inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    /// Radii of the trace that lie in `[R1, inf)`.
    pub radii: Vec<f64>,
    pub verdicts: Vec<bool>,
    /// Smallest `C0` satisfying the inequality at each radius.
    pub required_c0: Vec<f64>,
    /// Smallest `C0` satisfying it at every radius.
    pub min_c0: f64,
}

/// Tests `delta + m_i <= C0 R_i^{-theta/p'} y_i^{1/p}` at every radius `>= R1`.
/// `delta = 0` is accepted here.
pub fn criterion_check(tr: &FunctionalTrace, b: &BoundInputs) -> Result<CriterionReport> {
    tr.validate()?;
    if !(b.delta >= 0.0) || !(b.c0 >= 0.0) || !(b.r1 > 0.0) || !(b.theta >= 0.0) || !(b.p > 1.0) {
        return Err(Error::arg("bound inputs", format!("{b:?} out of range")));
    }
    let p_conj = b.p / (b.p - 1.0);
    let mut report = CriterionReport { radii: Vec::new(), verdicts: Vec::new(), required_c0: Vec::new(), min_c0: 0.0 };
    for i in 0..tr.radii.len() {
        let r = tr.radii[i];
        if r < b.r1 {
            continue;
        }
        let lhs = b.delta + tr.m[i];
        let weight = r.powf(-b.theta / p_conj) * tr.y[i].powf(1.0 / b.p);
        let need = if lhs == 0.0 {
            0.0
        } else if weight == 0.0 {
            f64::INFINITY
        } else {
            lhs / weight
        };
        report.radii.push(r);
        report.verdicts.push(lhs <= b.c0 * weight);
        report.required_c0.push(need);
        report.min_c0 = report.min_c0.max(need);
    }
    if report.radii.is_empty() {
        return Err(Error::Precondition(format!(
            "trace ends at R = {} before R1 = {}",
            tr.radii.last().unwrap(),
            b.r1
        )));
    }
    Ok(report)
}

/// Row of the lifespan table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundForm {
    /// `exp(C eps^{-(p-1)})`.
    Exponential,
    /// `C eps^{-k}`.
    Power,
    /// `C_delta eps^{-(p-1)-delta}`.
    PowerLogLoss,
    /// `C eps^{-(p-1)}`.
    Linear,
}

impl BoundForm {
    pub fn name(&self) -> &'static str {
        match self {
            BoundForm::Exponential => "exponential",
            BoundForm::Power => "power",
            BoundForm::PowerLogLoss => "power-log-loss",
            BoundForm::Linear => "linear",
        }
    }
}

/// Parameters selecting the regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInputs {
    #[serde(rename = "N")]
    pub dim: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub p: f64,
    /// Damping `V0 |x|^{-1}` on `R^N`, `N >= 3`; forces `gamma = 0`, `alpha = 1`.
    #[serde(default)]
    pub singular: bool,
}

/// Predicted form and, for the power-type rows, the exponent `e` of `eps^e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub form: BoundForm,
    pub exponent: Option<f64>,
    /// `theta` to feed the lemma at this `p`.
    pub theta: f64,
}

const EXPONENT_MATCH: f64 = 1e-9;

pub fn predicted_regime(r: &RegimeInputs) -> Result<Regime> {
    let pc = fujita_threshold(r.dim, r.gamma, r.alpha)?;
    if !(r.p > 1.0) {
        return Err(Error::arg("p", format!("must exceed 1, got {}", r.p)));
    }
    if r.p > pc * (1.0 + EXPONENT_MATCH) {
        return Err(Error::Precondition(format!(
            "p = {} exceeds the critical exponent {pc}; no lifespan bound is asserted there",
            r.p
        )));
    }
    let d = r.dim as f64 + r.gamma - r.alpha;
    let pm1 = r.p - 1.0;
    if r.singular {
        if r.dim < 3 || r.gamma != 0.0 || r.alpha != 1.0 {
            return Err(Error::arg("singular", "requires N >= 3, gamma = 0 and alpha = 1"));
        }
        let lo = r.dim as f64 / (r.dim as f64 - 1.0);
        if r.p <= lo * (1.0 + EXPONENT_MATCH) {
            return Err(Error::Precondition(format!("singular damping needs p > N/(N-1) = {lo}, got {}", r.p)));
        }
    }
    if (r.p - pc).abs() <= EXPONENT_MATCH * pc {
        return Ok(Regime { form: BoundForm::Exponential, exponent: None, theta: 0.0 });
    }
    let split = 1.0 + r.alpha / d;
    if r.singular || r.p > split * (1.0 + EXPONENT_MATCH) {
        let theta = 2.0 / (2.0 - r.alpha) * (1.0 / pm1 - 0.5 * d);
        return Ok(Regime { form: BoundForm::Power, exponent: Some(-1.0 / theta), theta });
    }
    let form = if (r.p - split).abs() <= EXPONENT_MATCH * split { BoundForm::PowerLogLoss } else { BoundForm::Linear };
    Ok(Regime { form, exponent: Some(-pm1), theta: 1.0 / pm1 })
}

/// The regime's bound evaluated for a given constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremBound {
    pub regime: Regime,
    pub value: f64,
}

/// Evaluates the regime's bound at `eps` with constant `c`; `loss` is the
/// `delta > 0` of the log-loss row (ignored elsewhere).
pub fn theorem_bound(r: &RegimeInputs, epsilon: f64, c: f64, loss: f64) -> Result<TheoremBound> {
    if !(epsilon > 0.0) {
        return Err(Error::arg("epsilon", format!("must be positive, got {epsilon}")));
    }
    if !(c > 0.0) {
        return Err(Error::arg("C", format!("must be positive, got {c}")));
    }
    let regime = predicted_regime(r)?;
    let pm1 = r.p - 1.0;
    let value = match regime.form {
        BoundForm::Exponential => (c * epsilon.powf(-pm1)).exp(),
        BoundForm::Power | BoundForm::Linear => c * epsilon.powf(regime.exponent.unwrap()),
        BoundForm::PowerLogLoss => {
            if !(loss > 0.0) {
                return Err(Error::arg("loss", "the log-loss row needs delta > 0"));
            }
            c * epsilon.powf(-pm1 - loss)
        }
    };
    Ok(TheoremBound { regime, value })
}
