//! Ground state of the Laplace-Beltrami operator on a spherical cap in
//! `S^2`, by shooting on the zonal ODE `u'' + cot(theta) u' + lambda u = 0`.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::numeric::Dopri5;

const TABLE_NODES: usize = 2048;

/// Tabulated zonal eigenfunction with `u(0) = 1`, vanishing at `theta0`.
#[derive(Debug, Clone)]
pub struct CapProfile {
    theta0: f64,
    lambda: f64,
    start: f64,
    step: f64,
    // (u, u') at start + i * step
    table: Vec<(f64, f64)>,
}

fn start_angle(theta0: f64) -> f64 {
    (1e-3 * theta0).min(1e-4)
}

fn rhs(lambda: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |th, y| [y[1], -y[1] / th.tan() - lambda * y[0]]
}

fn series(lambda: f64, th: f64) -> [f64; 2] {
    [1.0 - 0.25 * lambda * th * th, -0.5 * lambda * th]
}

fn integrator() -> Dopri5 {
    Dopri5 { rtol: 1e-12, atol: 1e-14, max_steps: 1_000_000 }
}

/// True when the zonal solution for `lambda` changes sign before `theta0`.
fn crosses_zero(theta0: f64, lambda: f64) -> Result<bool> {
    let s = start_angle(theta0);
    let (t, y) = integrator().solve(rhs(lambda), s, series(lambda, s), theta0, |_, y| {
        if y[0] <= 0.0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(t < theta0 || y[0] <= 0.0)
}

/// First Dirichlet eigenvalue of the cap `{theta < theta0}` in `S^2`.
pub fn cap_eigenvalue(theta0: f64) -> Result<f64> {
    if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
        return Err(Error::arg("theta0", format!("must lie in (0, pi), got {theta0}")));
    }
    // lambda = nu (nu + 1); the crossing predicate is monotone in nu
    let lam = |nu: f64| nu * (nu + 1.0);
    let mut lo = 0.0;
    let mut hi = 2.0 / theta0;
    let mut guard = 0;
    while !crosses_zero(theta0, lam(hi))? {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::NonConvergence(format!("no sign change bracketed for theta0 = {theta0}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if crosses_zero(theta0, lam(mid))? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lam(0.5 * (lo + hi)))
}

impl CapProfile {
    pub fn solve(theta0: f64) -> Result<Self> {
        let lambda = cap_eigenvalue(theta0)?;
        let start = start_angle(theta0);
        let step = (theta0 - start) / TABLE_NODES as f64;
        let mut table = Vec::with_capacity(TABLE_NODES + 1);
        let mut y = series(lambda, start);
        table.push((y[0], y[1]));
        let ode = integrator();
        for i in 0..TABLE_NODES {
            let a = start + i as f64 * step;
            let (_, next) = ode.solve(rhs(lambda), a, y, a + step, |_, _| ControlFlow::Continue(()))?;
            y = next;
            table.push((y[0], y[1]));
        }
        Ok(Self { theta0, lambda, start, step, table })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `phi(theta)`, cubic Hermite between table nodes, zero outside the cap.
    pub fn eval(&self, th: f64) -> f64 {
        if th >= self.theta0 {
            return 0.0;
        }
        if th <= self.start {
            return series(self.lambda, th)[0];
        }
        let pos = (th - self.start) / self.step;
        let i = (pos.floor() as usize).min(TABLE_NODES - 1);
        let s = pos - i as f64;
        let (u0, d0) = self.table[i];
        let (u1, d1) = self.table[i + 1];
        let h = self.step;
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * u0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * u1
            + (s3 - s2) * h * d1;
        v.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn hemisphere_is_two() {
        let lam = cap_eigenvalue(FRAC_PI_2).unwrap();
        assert!((lam - 2.0).abs() < 1e-8, "{lam}");
    }

    #[test]
    fn monotone_in_angle() {
        let small = cap_eigenvalue(PI / 3.0).unwrap();
        let mid = cap_eigenvalue(FRAC_PI_2).unwrap();
        let big = cap_eigenvalue(2.0 * PI / 3.0).unwrap();
        assert!(small > mid && mid > big, "{small} {mid} {big}");
    }

    #[test]
    fn small_cap_matches_flat_disk() {
        // the cap looks like a flat disk of radius theta0 as theta0 -> 0
        let j0 = 2.404_825_557_695_773;
        let th = 0.01;
        let lam = cap_eigenvalue(th).unwrap();
        let flat = (j0 / th).powi(2);
        assert!((lam / flat - 1.0).abs() < 1e-3, "{lam} vs {flat}");
    }

    #[test]
    fn hemisphere_profile_is_cosine() {
        let p = CapProfile::solve(FRAC_PI_2).unwrap();
        for k in 0..50 {
            let th = k as f64 * FRAC_PI_2 / 50.0;
            assert!((p.eval(th) - th.cos()).abs() < 1e-7, "theta {th}");
        }
        assert_eq!(p.eval(FRAC_PI_2), 0.0);
    }

    #[test]
    fn rejects_bad_angles() {
        assert!(cap_eigenvalue(0.0).is_err());
        assert!(cap_eigenvalue(PI).is_err());
        assert!(cap_eigenvalue(f64::NAN).is_err());
    }
}
