//! Small numerical kernels shared across modules: an embedded Dormand-Prince
//! 5(4) integrator, adaptive Simpson quadrature and an ordinary least-squares
//! line fit.

use std::ops::ControlFlow;

use crate::error::{Error, Result};

/// Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 1_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const D: usize>(y: &[f64; D], terms: &[(f64, &[f64; D])], h: f64) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl Dopri5 {
    pub fn with_tolerance(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-2, ..Self::default() }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (which may be smaller than
    /// `t0`). `observe` sees every accepted step and may stop the integration
    /// early; the state at the stopping point is returned together with its
    /// time.
    pub fn solve<const D: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; D],
        t1: f64,
        mut observe: O,
    ) -> Result<(f64, [f64; D])>
    where
        F: FnMut(f64, &[f64; D]) -> [f64; D],
        O: FnMut(f64, &[f64; D]) -> ControlFlow<()>,
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok((t0, y0));
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut h = dir * span.abs() * 1e-3;
        let mut k1 = f(t, &y);
        let mut steps = 0usize;
        while dir * (t1 - t) > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::NonConvergence(format!(
                    "Dormand-Prince exceeded {} steps at t = {t}",
                    self.max_steps
                )));
            }
            let last = dir * (t + h - t1) >= 0.0;
            if last {
                h = t1 - t;
            }
            let k2 = f(t + C2 * h, &axpy(&y, &[(A21, &k1)], h));
            let k3 = f(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = f(t + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
            let k5 = f(t + C5 * h, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
            let k6 = f(t + h, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
            let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
            let k7 = f(t + h, &y_new);
            let mut err = 0.0f64;
            for i in 0..D {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                h *= 0.25;
                if h.abs() < f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::NonConvergence(format!("non-finite derivative near t = {t}")));
                }
                continue;
            }
            if err <= 1.0 {
                // land exactly on t1 so rounding cannot leave a sliver behind
                t = if last { t1 } else { t + h };
                y = y_new;
                k1 = k7;
                if observe(t, &y).is_break() {
                    return Ok((t, y));
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::NonConvergence(format!("step size underflow at t = {t}")));
            }
        }
        Ok((t, y))
    }
}

/// Classical fourth-order Runge-Kutta over `n` equal steps, recording every node.
pub fn rk4_trajectory<const D: usize, F>(mut f: F, t0: f64, y0: [f64; D], t1: f64, n: usize) -> Vec<(f64, [f64; D])>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let h = (t1 - t0) / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0;
    out.push((t0, y));
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &[(0.5, &k1)], h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &[(0.5, &k2)], h));
        let k4 = f(t + h, &axpy(&y, &[(1.0, &k3)], h));
        y = axpy(&y, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)], h);
        out.push((t0 + (i + 1) as f64 * h, y));
    }
    out
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped into [0, 1].
    pub r2: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit(format!("need at least two paired samples, got {} and {}", xs.len(), ys.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(span > 1e-12 * mx.abs().max(1.0)) || sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissa span".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if ss_tot <= f64::MIN_POSITIVE {
        if ss_res <= f64::MIN_POSITIVE {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LineFit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dopri_exponential() {
        let (t, y) = Dopri5::with_tolerance(1e-12)
            .solve(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, |_, _| ControlFlow::Continue(()))
            .unwrap();
        assert_eq!(t, 2.0);
        assert_relative_eq!(y[0], 2.0f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn dopri_stops_on_event() {
        // harmonic oscillator, first zero of cos at pi/2
        let mut prev = (0.0, 1.0);
        let mut crossing = None;
        Dopri5::with_tolerance(1e-12)
            .solve(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                10.0,
                |t, y| {
                    if y[0] <= 0.0 {
                        crossing = Some(prev.0 + (t - prev.0) * prev.1 / (prev.1 - y[0]));
                        return ControlFlow::Break(());
                    }
                    prev = (t, y[0]);
                    ControlFlow::Continue(())
                },
            )
            .unwrap();
        let c = crossing.unwrap();
        assert!((c - std::f64::consts::FRAC_PI_2).abs() < 1e-2);
    }

    #[test]
    fn simpson_polynomial_and_log() {
        assert_relative_eq!(adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12), 9.0, epsilon = 1e-12);
        assert_relative_eq!(adaptive_simpson(|s| 1.0 / s, 0.5, 1.0, 1e-12), std::f64::consts::LN_2, epsilon = 1e-11);
    }

    #[test]
    fn rk4_matches_exponential() {
        let traj = rk4_trajectory(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 1.0, 100);
        assert_eq!(traj.len(), 101);
        assert_relative_eq!(traj[100].1[0], (-1.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn line_fit_exact_and_degenerate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-14);
        assert_relative_eq!(fit.intercept, 3.0, epsilon = 1e-14);
        assert_eq!(fit.r2, 1.0);
        assert!(fit_line(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
