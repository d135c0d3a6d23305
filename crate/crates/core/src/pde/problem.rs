//! Problem data: coefficients, initial data and the discrete field state.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{Geometry, Grid, GridSpec, RadialOrigin};
use crate::cone::CrossSectionSpec;
use crate::error::{Error, Result};

/// Form of the coefficient `a(x)` of `u_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Damping {
    /// `a = e^{i zeta}` (first order in time).
    Phase { zeta: f64 },
    /// `a(x) = a0 <x>^{-alpha}` (second order in time).
    Profile { a0: f64, alpha: f64 },
    /// `a(x) = V0 |x|^{-1}` (second order in time, whole space `N >= 3`).
    Singular { v0: f64 },
}

/// `tau`, `a(x)`, `lambda` and `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub tau: u8,
    pub damping: Damping,
    pub lambda: Complex64,
    pub p: f64,
}

impl Coefficients {
    pub fn heat(p: f64) -> Self {
        Self { tau: 0, damping: Damping::Phase { zeta: 0.0 }, lambda: Complex64::new(1.0, 0.0), p }
    }

    /// `i u_t + Delta u = |u|^p`, i.e. `a = -i`, `lambda = -1`.
    pub fn schrodinger(p: f64) -> Self {
        Self { tau: 0, damping: Damping::Phase { zeta: -FRAC_PI_2 }, lambda: Complex64::new(-1.0, 0.0), p }
    }

    pub fn damped_wave(a0: f64, alpha: f64, p: f64) -> Self {
        Self { tau: 1, damping: Damping::Profile { a0, alpha }, lambda: Complex64::new(1.0, 0.0), p }
    }

    /// All violations, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.tau > 1 {
            out.push(format!("tau must be 0 or 1, got {}", self.tau));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            out.push(format!("p must exceed 1, got {}", self.p));
        }
        if !self.lambda.is_finite() {
            out.push("lambda must be finite".into());
        }
        match self.damping {
            Damping::Phase { zeta } => {
                if self.tau != 0 {
                    out.push("the phase form a = e^{i zeta} requires tau = 0".into());
                }
                if !(-FRAC_PI_2..=FRAC_PI_2).contains(&zeta) {
                    out.push(format!("zeta must lie in [-pi/2, pi/2], got {zeta}"));
                }
            }
            Damping::Profile { a0, alpha } => {
                if self.tau != 1 {
                    out.push("the profile form a0 <x>^{-alpha} requires tau = 1".into());
                }
                if !(a0 >= 0.0 && a0.is_finite()) {
                    out.push(format!("a0 must be >= 0, got {a0}"));
                }
                if !(0.0..=1.0).contains(&alpha) {
                    out.push(format!("alpha must lie in [0,1], got {alpha}"));
                }
            }
            Damping::Singular { v0 } => {
                if self.tau != 1 {
                    out.push("the singular form V0 |x|^{-1} requires tau = 1".into());
                }
                if !(v0 >= 0.0 && v0.is_finite()) {
                    out.push(format!("V0 must be >= 0, got {v0}"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Decay rate `alpha` of the coefficient (0 for the phase form).
    pub fn alpha(&self) -> f64 {
        match self.damping {
            Damping::Phase { .. } => 0.0,
            Damping::Profile { alpha, .. } => alpha,
            Damping::Singular { .. } => 1.0,
        }
    }

    /// `zeta` of the phase form, 0 otherwise.
    pub fn zeta(&self) -> f64 {
        match self.damping {
            Damping::Phase { zeta } => zeta,
            _ => 0.0,
        }
    }

    /// Real coefficient `a(x)` of the second-order forms at `|x|^2`.
    pub fn damping_at(&self, r2: f64) -> f64 {
        match self.damping {
            Damping::Phase { .. } => 0.0,
            Damping::Profile { a0, alpha } => a0 * (1.0 + r2).powf(-0.5 * alpha),
            Damping::Singular { v0 } => v0 / r2.sqrt(),
        }
    }

    /// `a(x)` as a complex number (the phase form is constant).
    pub fn a_complex(&self, r2: f64) -> Complex64 {
        match self.damping {
            Damping::Phase { zeta } => Complex64::from_polar(1.0, zeta),
            _ => Complex64::new(self.damping_at(r2), 0.0),
        }
    }
}

/// `A exp(1 - 1/(1 - rho^2))`, `rho = |x - c| / width`, so `sup = |A|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    #[serde(default)]
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: Complex64,
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut d2 = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let c = self.center.get(i).copied().unwrap_or(0.0);
            d2 += (xi - c).powi(2);
        }
        let rho2 = d2 / (self.width * self.width);
        if rho2 >= 1.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - rho2)).exp()
        }
    }

    fn violations(&self, name: &str, out: &mut Vec<String>) {
        if !(self.width > 0.0 && self.width.is_finite()) {
            out.push(format!("{name}.width must be positive, got {}", self.width));
        }
        if !self.amplitude.is_finite() {
            out.push(format!("{name}.amplitude must be finite"));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            out.push(format!("{name}.center must be finite"));
        }
    }
}

/// `u(0) = eps f`, `u_t(0) = eps g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub f: Bump,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Bump>,
    pub epsilon: f64,
}

impl InitialData {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.f.violations("f", &mut out);
        if let Some(g) = &self.g {
            g.violations("g", &mut out);
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            out.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        out
    }
}

/// The full problem for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionProblem {
    pub coefficients: Coefficients,
    pub grid: GridSpec,
    pub initial: InitialData,
}

impl Geometry {
    /// The cone whose truncation this mesh discretizes.
    pub fn cone(&self) -> Result<CrossSectionSpec> {
        match *self {
            Geometry::Line => Ok(CrossSectionSpec::full_line()),
            Geometry::HalfLine => Ok(CrossSectionSpec::half_line()),
            Geometry::Radial { dim, origin: RadialOrigin::Symmetric } => CrossSectionSpec::full_sphere(dim),
            Geometry::Radial { origin: RadialOrigin::Dirichlet, .. } => {
                Err(Error::InvalidDomain("a radial mesh with u(0) = 0 does not discretize a cone".into()))
            }
            Geometry::PolarSector { omega, .. } => CrossSectionSpec::planar_sector(omega),
        }
    }
}

impl EvolutionProblem {
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.coefficients.violations();
        if let Err(e) = self.grid.validate() {
            out.push(e.to_string());
        }
        out.extend(self.initial.violations());
        if self.coefficients.tau == 0 && self.initial.g.is_some() {
            out.push("initial velocity g is only meaningful for tau = 1".into());
        }
        if let Damping::Singular { .. } = self.coefficients.damping {
            match self.grid.geometry {
                Geometry::Radial { dim, origin: RadialOrigin::Symmetric } if dim >= 3 => {}
                _ => out.push("singular damping needs a symmetric radial mesh with N >= 3".into()),
            }
        }
        let ext = self.grid.extent;
        let reach = self.initial.f.center.iter().map(|c| c * c).sum::<f64>().sqrt() + self.initial.f.width;
        if reach >= ext {
            out.push(format!("support of f reaches the truncation boundary ({reach} >= {ext})"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Discrete state. `v` is the velocity half a step behind `t` for `tau = 1`
/// (at `t` itself before the first step).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub u: Vec<Complex64>,
    pub v: Option<Vec<Complex64>>,
    /// Last accepted step (0 before the first).
    pub dt_prev: f64,
}

impl FieldState {
    pub fn initial(problem: &EvolutionProblem, grid: &Grid) -> Self {
        let eps = problem.initial.epsilon;
        let sample = |b: &Bump| -> Vec<Complex64> {
            (0..grid.len())
                .map(|i| if grid.is_dirichlet(i) { Complex64::new(0.0, 0.0) } else { b.eval(grid.point(i)) * eps })
                .collect()
        };
        let u = sample(&problem.initial.f);
        let v = if problem.coefficients.tau == 1 {
            Some(match &problem.initial.g {
                Some(g) => sample(g),
                None => vec![Complex64::new(0.0, 0.0); grid.len()],
            })
        } else {
            None
        };
        Self { t: 0.0, u, v, dt_prev: 0.0 }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for z in &self.u {
            let a = z.norm();
            if !a.is_finite() {
                return f64::INFINITY;
            }
            m = m.max(a);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        let b = Bump { center: vec![1.0], width: 0.5, amplitude: Complex64::new(0.0, -2.0) };
        assert_eq!(b.eval(&[1.0]), Complex64::new(0.0, -2.0));
        assert_eq!(b.eval(&[1.5]), Complex64::new(0.0, 0.0));
        assert!(b.eval(&[1.25]).norm() < 2.0);
    }

    #[test]
    fn coefficient_forms() {
        assert!(Coefficients::heat(2.0).validate().is_ok());
        assert!(Coefficients::schrodinger(2.0).validate().is_ok());
        assert!(Coefficients::damped_wave(1.0, 0.0, 2.0).validate().is_ok());
        let bad = Coefficients { tau: 1, ..Coefficients::heat(2.0) };
        assert!(bad.validate().is_err());
        let bad = Coefficients::damped_wave(1.0, 1.5, 0.5);
        match bad.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
        let a = Coefficients::schrodinger(2.0).a_complex(0.0);
        assert!((a - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn geometry_cones() {
        assert_eq!(Geometry::Line.cone().unwrap(), CrossSectionSpec::full_line());
        let g = Geometry::Radial { dim: 3, origin: RadialOrigin::Symmetric };
        assert_eq!(g.cone().unwrap(), CrossSectionSpec::full_sphere(3).unwrap());
        assert!(Geometry::Radial { dim: 3, origin: RadialOrigin::Dirichlet }.cone().is_err());
    }
}
