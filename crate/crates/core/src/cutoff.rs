//! Space-time cutoffs `psi_R = eta(s_R)^{2p'}` built on the anisotropic
//! variable `s_R(x, t) = (<x>^{2-alpha} + t) / R`.

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

/// Transition profile: 1 on `[0, 1/2]`, decreasing on `(1/2, 1)`, 0 from 1 on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransitionProfile {
    /// `g(2 - 2s) / (g(2 - 2s) + g(2s - 1))` with `g(t) = exp(-1/t)`.
    #[default]
    Smooth,
    /// `1 - (3x^2 - 2x^3)` with `x = 2s - 1`; only `C^1`.
    Smoothstep,
}

// g and its first two derivatives, zero for t <= 0
fn g3(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let g = (-1.0 / t).exp();
    let t2 = t * t;
    (g, g / t2, g * (1.0 - 2.0 * t) / (t2 * t2))
}

impl TransitionProfile {
    /// `(eta, eta', eta'')` at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        if s <= 0.5 {
            return (1.0, 0.0, 0.0);
        }
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        match self {
            TransitionProfile::Smooth => {
                let (ga, ga1, ga2) = g3(2.0 - 2.0 * s);
                let (gb, gb1, gb2) = g3(2.0 * s - 1.0);
                let (a1, a2) = (-2.0 * ga1, 4.0 * ga2);
                let (b1, b2) = (2.0 * gb1, 4.0 * gb2);
                let d = ga + gb;
                let d1 = a1 + b1;
                let num = a1 * gb - ga * b1;
                let num1 = a2 * gb - ga * b2;
                let eta = ga / d;
                let eta1 = num / (d * d);
                let eta2 = num1 / (d * d) - 2.0 * num * d1 / (d * d * d);
                (eta, eta1, eta2)
            }
            TransitionProfile::Smoothstep => {
                let x = 2.0 * s - 1.0;
                (1.0 - x * x * (3.0 - 2.0 * x), -12.0 * x * (1.0 - x), -4.0 * (6.0 - 12.0 * x))
            }
        }
    }

    pub fn eta(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    /// `eta*`: zero on `[0, 1/2)`, `eta` from `1/2` on.
    pub fn eta_star(&self, s: f64) -> f64 {
        if s < 0.5 {
            0.0
        } else {
            self.eta(s)
        }
    }
}

/// The cutoff pair `(psi_R, psi_R*)` for one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFamily {
    profile: TransitionProfile,
    radius: f64,
    alpha: f64,
    p: f64,
    dim: usize,
    power: f64,
}

/// Values and derivatives of `psi_R` at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffJet {
    pub s: f64,
    pub psi: f64,
    pub psi_star: f64,
    pub dt: f64,
    pub dtt: f64,
    pub laplacian: f64,
}

impl CutoffFamily {
    pub fn new(radius: f64, alpha: f64, p: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::arg("R", format!("must be positive, got {radius}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::arg("alpha", format!("must lie in [0,1], got {alpha}")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::arg("p", format!("must exceed 1, got {p}")));
        }
        if dim == 0 {
            return Err(Error::arg("N", "must be at least 1"));
        }
        Ok(Self { profile: TransitionProfile::Smooth, radius, alpha, p, dim, power: 2.0 * p / (p - 1.0) })
    }

    pub fn with_profile(mut self, profile: TransitionProfile) -> Self {
        self.profile = profile;
        self
    }

    /// Replaces the exponent `2p'`; only meaningful for negative controls.
    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::arg("R", format!("must be positive, got {radius}")));
        }
        self.radius = radius;
        Ok(self)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> TransitionProfile {
        self.profile
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Conjugate exponent `p' = p / (p - 1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `<x>^{2-alpha}` from `|x|^2`.
    fn bracket(&self, r2: f64) -> f64 {
        (1.0 + r2).powf(0.5 * (2.0 - self.alpha))
    }

    pub fn s_value(&self, x: &[f64], t: f64) -> f64 {
        self.s_radial(norm2(x), t)
    }

    /// `s_R` from `|x|^2`.
    pub fn s_radial(&self, r2: f64, t: f64) -> f64 {
        (self.bracket(r2) + t) / self.radius
    }

    /// Membership in `P(R)`.
    pub fn in_region(&self, x: &[f64], t: f64) -> bool {
        t >= 0.0 && self.bracket(norm2(x)) + t <= self.radius
    }

    pub fn psi(&self, x: &[f64], t: f64) -> f64 {
        self.psi_from_s(self.s_value(x, t))
    }

    pub fn psi_star(&self, x: &[f64], t: f64) -> f64 {
        self.psi_star_from_s(self.s_value(x, t))
    }

    pub fn psi_from_s(&self, s: f64) -> f64 {
        if s <= 0.5 {
            1.0
        } else {
            self.profile.eta(s).powf(self.power)
        }
    }

    pub fn psi_star_from_s(&self, s: f64) -> f64 {
        if s < 0.5 {
            0.0
        } else {
            self.psi_from_s(s)
        }
    }

    // F(s) = eta^k and its first two derivatives
    fn outer(&self, s: f64) -> (f64, f64, f64) {
        let (e, e1, e2) = self.profile.eval(s);
        if e1 == 0.0 && e2 == 0.0 {
            return (e.powf(self.power), 0.0, 0.0);
        }
        let k = self.power;
        let f1 = k * e.powf(k - 1.0) * e1;
        let mut f2 = k * e.powf(k - 1.0) * e2;
        if k != 1.0 {
            f2 += k * (k - 1.0) * e.powf(k - 2.0) * e1 * e1;
        }
        (e.powf(k), f1, f2)
    }

    /// `(d/dt psi_R, d^2/dt^2 psi_R)`.
    pub fn psi_time_derivs(&self, x: &[f64], t: f64) -> (f64, f64) {
        let j = self.jet_radial(norm2(x), t);
        (j.dt, j.dtt)
    }

    pub fn psi_laplacian(&self, x: &[f64], t: f64) -> f64 {
        self.jet_radial(norm2(x), t).laplacian
    }

    /// Spatial gradient of `psi_R`.
    pub fn psi_gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        let r2 = norm2(x);
        let (_, f1, _) = self.outer(self.s_radial(r2, t));
        let beta = 2.0 - self.alpha;
        let w1_over_rho = beta * (1.0 + r2).powf(0.5 * beta - 1.0);
        x.iter().map(|xi| f1 * w1_over_rho * xi / self.radius).collect()
    }

    /// All derivatives at a point given through `|x|^2`, using the radial
    /// form of the Laplacian applied to `w(rho) = (1 + rho^2)^{(2-alpha)/2}`.
    pub fn jet_radial(&self, r2: f64, t: f64) -> CutoffJet {
        let s = self.s_radial(r2, t);
        let (f, f1, f2) = self.outer(s);
        let r = self.radius;
        let beta = 2.0 - self.alpha;
        let q = 1.0 + r2;
        let w1_over_rho = beta * q.powf(0.5 * beta - 1.0);
        let w2 = w1_over_rho + beta * (beta - 2.0) * r2 * q.powf(0.5 * beta - 2.0);
        let lap_s = (w2 + (self.dim as f64 - 1.0) * w1_over_rho) / r;
        let grad_s2 = w1_over_rho * w1_over_rho * r2 / (r * r);
        let psi = if s <= 0.5 { 1.0 } else { f };
        CutoffJet {
            s,
            psi,
            psi_star: if s < 0.5 { 0.0 } else { psi },
            dt: f1 / r,
            dtt: f2 / (r * r),
            laplacian: f1 * lap_s + f2 * grad_s2,
        }
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Sampling of `P(R)` in the coordinates `(s, q)`, where `s` is the level of
/// `s_R` and `q` splits `s R` between `<x>^{2-alpha}` (from 1 up) and `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellGrid {
    pub s_max: f64,
    pub s_nodes: usize,
    pub q_nodes: usize,
}

impl Default for ShellGrid {
    fn default() -> Self {
        Self { s_max: 1.0, s_nodes: 400, q_nodes: 40 }
    }
}

impl ShellGrid {
    pub fn refined(&self) -> Self {
        Self { s_nodes: 2 * self.s_nodes, q_nodes: 2 * self.q_nodes, ..*self }
    }
}

/// Empirical constants of the derivative bounds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

fn sup_ratios(fam: &CutoffFamily, grid: &ShellGrid) -> BoundConstants {
    let r = fam.radius;
    let inv_p = 1.0 / fam.p;
    let mut out = BoundConstants { c1: 0.0, c2: 0.0, c3: 0.0 };
    let ratio = |num: f64, den: f64| {
        if num == 0.0 {
            0.0
        } else if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        }
    };
    for i in 1..=grid.s_nodes {
        let s = grid.s_max * i as f64 / grid.s_nodes as f64;
        let level = s * r;
        if level < 1.0 {
            continue;
        }
        for j in 0..=grid.q_nodes {
            let q = j as f64 / grid.q_nodes as f64;
            let spatial = 1.0 + q * (level - 1.0);
            let t = level - spatial;
            let r2 = (spatial.powf(2.0 / (2.0 - fam.alpha)) - 1.0).max(0.0);
            let jet = fam.jet_radial(r2, t);
            let den = jet.psi_star.powf(inv_p);
            let bracket_alpha = (1.0 + r2).powf(0.5 * fam.alpha);
            out.c1 = out.c1.max(ratio(r * jet.dt.abs(), den));
            out.c2 = out.c2.max(ratio(r * r * jet.dtt.abs(), den));
            out.c3 = out.c3.max(ratio(r * bracket_alpha * jet.laplacian.abs(), den));
        }
    }
    out
}

/// Refined-over-coarse growth of a sup above which it is declared divergent.
pub const DIVERGENCE_GROWTH: f64 = 1.25;

/// Suprema over the sampled part of `P(R)` of `R |d_t psi| / psi*^{1/p}`,
/// `R^2 |d_t^2 psi| / psi*^{1/p}` and `R <x>^alpha |Delta psi| / psi*^{1/p}`.
/// The grid is refined once; growth of any sup beyond
/// [`DIVERGENCE_GROWTH`] is reported as divergence.
pub fn bound_constants(fam: &CutoffFamily, grid: &ShellGrid) -> Result<BoundConstants> {
    if grid.s_nodes < 2 || grid.q_nodes < 1 || !(grid.s_max > 0.0 && grid.s_max <= 1.0) {
        return Err(Error::arg("grid", "needs s_nodes >= 2, q_nodes >= 1, 0 < s_max <= 1"));
    }
    let coarse = sup_ratios(fam, grid);
    let fine = sup_ratios(fam, &grid.refined());
    for (name, a, b) in [("C1", coarse.c1, fine.c1), ("C2", coarse.c2, fine.c2), ("C3", coarse.c3, fine.c3)] {
        if !b.is_finite() || (a > 0.0 && b > DIVERGENCE_GROWTH * a) {
            return Err(Error::Divergence(format!("{name} grows from {a:e} to {b:e} under grid refinement")));
        }
    }
    Ok(fine)
}

/// Both sides of `int_sigma^inf eta*(s)^k ds / s <= (log 2) eta(sigma)^k`,
/// the left by adaptive Simpson to absolute tolerance `tol`.
pub fn log2_sides(profile: TransitionProfile, power: f64, sigma: f64, tol: f64) -> (f64, f64) {
    let rhs = std::f64::consts::LN_2 * profile.eta(sigma).powf(power);
    if sigma >= 1.0 {
        return (0.0, rhs);
    }
    let lo = sigma.max(0.5);
    let lhs = adaptive_simpson(|s| profile.eta(s).powf(power) / s, lo, 1.0, tol);
    (lhs, rhs)
}
