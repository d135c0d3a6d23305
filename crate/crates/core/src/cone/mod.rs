//! Cone-like domains `C = int{ r w : r >= 0, w in S }` for the supported
//! cross-sections `S`, together with the spectral data that drives every
//! weighted functional: the first Dirichlet eigenvalue of the Laplace-Beltrami
//! operator on `S`, the homogeneity exponent `gamma`, and the positive harmonic
//! weight `Phi(x) = |x|^gamma phi(x / |x|)`.

mod cap;
mod hardy;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cap::{cap_eigenvalue, CapProfile};
pub use hardy::{hardy_constant, hardy_ratio, random_bump, BumpField, TestField};

/// Shape of the cross-section `S` on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SectionKind {
    /// `S = S^{N-1}`, the whole space.
    FullSphere,
    /// `(0, inf)` in one dimension.
    HalfLine,
    /// The whole real line.
    FullLine,
    /// Planar sector `0 < theta < omega`.
    PlanarSector { omega: f64 },
    /// Spherical cap of polar angle `theta0` about the `x_3` axis.
    SphericalCap { theta0: f64 },
    /// `R_+^k x R^{N-k}`.
    HalfSpaceProduct { k: usize },
}

/// Validated cross-section together with the ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSection", into = "RawSection")]
pub struct CrossSectionSpec {
    kind: SectionKind,
    dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    kind: String,
    #[serde(rename = "N")]
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
}

impl TryFrom<RawSection> for CrossSectionSpec {
    type Error = Error;

    fn try_from(raw: RawSection) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidDomain(format!("kind `{}` requires `{name}`", raw.kind)))
        };
        let kind = match raw.kind.as_str() {
            "full-sphere" => SectionKind::FullSphere,
            "half-line" => SectionKind::HalfLine,
            "full-line" => SectionKind::FullLine,
            "planar-sector" => SectionKind::PlanarSector { omega: need(raw.omega, "omega")? },
            "spherical-cap" => SectionKind::SphericalCap { theta0: need(raw.theta0, "theta0")? },
            "half-space-product" => SectionKind::HalfSpaceProduct {
                k: raw.k.ok_or_else(|| Error::InvalidDomain("kind `half-space-product` requires `k`".into()))?,
            },
            other => return Err(Error::InvalidDomain(format!("unknown kind `{other}`"))),
        };
        CrossSectionSpec::new(kind, raw.dim)
    }
}

impl From<CrossSectionSpec> for RawSection {
    fn from(spec: CrossSectionSpec) -> Self {
        let mut raw =
            RawSection { kind: spec.kind_name().to_string(), dim: spec.dim, omega: None, theta0: None, k: None };
        match spec.kind {
            SectionKind::PlanarSector { omega } => raw.omega = Some(omega),
            SectionKind::SphericalCap { theta0 } => raw.theta0 = Some(theta0),
            SectionKind::HalfSpaceProduct { k } => raw.k = Some(k),
            _ => {}
        }
        raw
    }
}

impl CrossSectionSpec {
    /// Validates the kind/dimension pairing. One-dimensional products and the
    /// one-dimensional "sphere" are rewritten to the half-line or full line.
    pub fn new(kind: SectionKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDomain("dimension N must be at least 1".into()));
        }
        let kind = match (kind, dim) {
            (SectionKind::FullSphere, 1) => SectionKind::FullLine,
            (SectionKind::HalfSpaceProduct { k: 0 }, 1) => SectionKind::FullLine,
            (SectionKind::HalfSpaceProduct { k: 1 }, 1) => SectionKind::HalfLine,
            (k, _) => k,
        };
        match kind {
            SectionKind::HalfLine | SectionKind::FullLine if dim != 1 => {
                return Err(Error::InvalidDomain(format!("{} requires N = 1, got N = {dim}", kind_name(&kind))))
            }
            SectionKind::PlanarSector { omega } => {
                if dim != 2 {
                    return Err(Error::InvalidDomain(format!("planar-sector requires N = 2, got N = {dim}")));
                }
                if !(omega > 0.0 && omega <= 2.0 * PI) {
                    return Err(Error::InvalidDomain(format!("sector angle omega must lie in (0, 2pi], got {omega}")));
                }
            }
            SectionKind::SphericalCap { theta0 } => {
                if dim != 3 {
                    return Err(Error::InvalidDomain(format!("spherical-cap requires N = 3, got N = {dim}")));
                }
                if !(theta0 > 0.0 && theta0 <= PI) {
                    return Err(Error::InvalidDomain(format!("cap angle theta0 must lie in (0, pi], got {theta0}")));
                }
            }
            SectionKind::HalfSpaceProduct { k } if k > dim => {
                return Err(Error::InvalidDomain(format!("half-space-product needs k <= N, got k = {k}, N = {dim}")))
            }
            _ => {}
        }
        Ok(Self { kind, dim })
    }

    pub fn full_sphere(dim: usize) -> Result<Self> {
        Self::new(SectionKind::FullSphere, dim)
    }

    pub fn half_line() -> Self {
        Self { kind: SectionKind::HalfLine, dim: 1 }
    }

    pub fn full_line() -> Self {
        Self { kind: SectionKind::FullLine, dim: 1 }
    }

    pub fn planar_sector(omega: f64) -> Result<Self> {
        Self::new(SectionKind::PlanarSector { omega }, 2)
    }

    pub fn spherical_cap(theta0: f64) -> Result<Self> {
        Self::new(SectionKind::SphericalCap { theta0 }, 3)
    }

    pub fn half_space_product(k: usize, dim: usize) -> Result<Self> {
        Self::new(SectionKind::HalfSpaceProduct { k }, dim)
    }

    pub fn kind(&self) -> SectionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind_name(&self) -> &'static str {
        kind_name(&self.kind)
    }
}

fn kind_name(kind: &SectionKind) -> &'static str {
    match kind {
        SectionKind::FullSphere => "full-sphere",
        SectionKind::HalfLine => "half-line",
        SectionKind::FullLine => "full-line",
        SectionKind::PlanarSector { .. } => "planar-sector",
        SectionKind::SphericalCap { .. } => "spherical-cap",
        SectionKind::HalfSpaceProduct { .. } => "half-space-product",
    }
}

/// Angular profile `phi` on the cross-section.
#[derive(Debug, Clone)]
enum AngularProfile {
    Constant,
    HalfLine,
    Sine { omega: f64 },
    Cap(CapProfile),
    Product { k: usize },
}

/// A cone with its spectral constants and harmonic weight.
#[derive(Debug, Clone)]
pub struct ConeDomain {
    spec: CrossSectionSpec,
    lambda_sigma: f64,
    gamma: f64,
    profile: AngularProfile,
}

/// Builds the domain, computing `lambda_sigma` in closed form where one exists
/// and by shooting for spherical caps.
pub fn make_domain(spec: CrossSectionSpec) -> Result<ConeDomain> {
    let n = spec.dim;
    let (lambda_sigma, profile) = match spec.kind {
        SectionKind::FullSphere => (0.0, AngularProfile::Constant),
        SectionKind::FullLine => (0.0, AngularProfile::Constant),
        SectionKind::HalfLine => (0.0, AngularProfile::HalfLine),
        SectionKind::PlanarSector { omega } => (sector_eigenvalue(omega)?, AngularProfile::Sine { omega }),
        SectionKind::SphericalCap { theta0 } => {
            if theta0 >= PI {
                // a sphere punctured at one point has the constant as ground state
                (0.0, AngularProfile::Constant)
            } else {
                let cap = CapProfile::solve(theta0)?;
                (cap.lambda(), AngularProfile::Cap(cap))
            }
        }
        SectionKind::HalfSpaceProduct { k } => {
            if k == 0 {
                (0.0, AngularProfile::Constant)
            } else {
                ((k * (n - 2 + k)) as f64, AngularProfile::Product { k })
            }
        }
    };
    let gamma = match spec.kind {
        SectionKind::FullLine => 0.0,
        _ => gamma_root(n, lambda_sigma)?,
    };
    Ok(ConeDomain { spec, lambda_sigma, gamma, profile })
}

/// Positive root of `gamma^2 + (N - 2) gamma - lambda = 0` (zero when
/// `lambda = 0` and `N >= 2`; one for the half-line).
pub fn gamma_root(dim: usize, lambda_sigma: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::arg("N", "must be at least 1"));
    }
    if !(lambda_sigma >= 0.0) {
        return Err(Error::arg("lambda_sigma", format!("must be >= 0, got {lambda_sigma}")));
    }
    let b = dim as f64 - 2.0;
    let disc = (b * b + 4.0 * lambda_sigma).sqrt();
    // cancellation-free form of (-b + disc) / 2 when b > 0
    let gamma = if b > 0.0 { 2.0 * lambda_sigma / (b + disc) } else { 0.5 * (disc - b) };
    Ok(gamma)
}

/// First Dirichlet eigenvalue of `-d^2/dtheta^2` on `(0, omega)`.
pub fn sector_eigenvalue(omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega <= 2.0 * PI) {
        return Err(Error::arg("omega", format!("must lie in (0, 2pi], got {omega}")));
    }
    Ok((PI / omega).powi(2))
}

/// Critical exponent `1 + 2 / (N + gamma - alpha)`.
pub fn fujita_threshold(dim: usize, gamma: f64, alpha: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::arg("N", "must be at least 1"));
    }
    if !(gamma >= 0.0) {
        return Err(Error::arg("gamma", format!("must be >= 0, got {gamma}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::arg("alpha", format!("must lie in [0,1], got {alpha}")));
    }
    let denom = dim as f64 + gamma - alpha;
    if denom <= 0.0 {
        return Err(Error::arg("N + gamma - alpha", format!("must be positive, got {denom}")));
    }
    Ok(1.0 + 2.0 / denom)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Angle from the positive `x_1` axis mapped into `[0, 2pi)`.
fn polar_angle(x: &[f64]) -> f64 {
    let a = x[1].atan2(x[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Distance from `r w` to a ray at angular separation `delta` from it.
fn ray_distance(r: f64, delta: f64) -> f64 {
    if delta >= 0.5 * PI {
        r
    } else {
        r * delta.sin()
    }
}

impl ConeDomain {
    pub fn spec(&self) -> &CrossSectionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn lambda_sigma(&self) -> f64 {
        self.lambda_sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Residual of the defining quadratic for `gamma`.
    pub fn gamma_residual(&self) -> f64 {
        let g = self.gamma;
        g * g + (self.spec.dim as f64 - 2.0) * g - self.lambda_sigma
    }

    /// Angular eigenfunction at a unit direction.
    pub fn eigenfunction(&self, w: &[f64]) -> Result<f64> {
        let r = norm(w);
        if (r - 1.0).abs() > 1e-9 {
            return Err(Error::arg("w", format!("expected a unit vector, |w| = {r}")));
        }
        self.phi(w)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.dim {
            return Err(Error::arg("x", format!("expected {} coordinates, got {}", self.spec.dim, x.len())));
        }
        Ok(())
    }

    /// Membership in the closed cone.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.spec.dim {
            return false;
        }
        match &self.profile {
            AngularProfile::Constant => true,
            AngularProfile::HalfLine => x[0] >= 0.0,
            AngularProfile::Sine { omega } => norm(x) == 0.0 || polar_angle(x) <= *omega,
            AngularProfile::Cap(cap) => {
                let r = norm(x);
                r == 0.0 || (x[2] / r).clamp(-1.0, 1.0).acos() <= cap.theta0()
            }
            AngularProfile::Product { k } => x[..*k].iter().all(|&v| v >= 0.0),
        }
    }

    /// Distance from `x` to the cone boundary, counting the vertex as boundary
    /// whenever `gamma > 0`. Infinite for the whole space.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let r = norm(x);
        match &self.profile {
            AngularProfile::Constant => f64::INFINITY,
            AngularProfile::HalfLine => x[0],
            AngularProfile::Sine { omega } => {
                let th = polar_angle(x);
                ray_distance(r, th).min(ray_distance(r, omega - th))
            }
            AngularProfile::Cap(cap) => {
                if r == 0.0 {
                    return 0.0;
                }
                let th = (x[2] / r).clamp(-1.0, 1.0).acos();
                ray_distance(r, cap.theta0() - th)
            }
            AngularProfile::Product { k } => x[..*k].iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Harmonic weight `Phi(x)`; errors for points outside the closed cone.
    pub fn phi_eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if !self.contains(x) {
            return Err(Error::OutsideCone(x.to_vec()));
        }
        self.phi(x)
    }

    fn phi(&self, x: &[f64]) -> Result<f64> {
        let value = match &self.profile {
            AngularProfile::Constant => 1.0,
            AngularProfile::HalfLine => x[0].max(0.0),
            AngularProfile::Sine { omega } => {
                let r = norm(x);
                if r == 0.0 {
                    0.0
                } else {
                    let th = polar_angle(x).min(*omega);
                    r.powf(self.gamma) * (PI * th / omega).sin().max(0.0)
                }
            }
            AngularProfile::Cap(cap) => {
                let r = norm(x);
                if r == 0.0 {
                    0.0
                } else {
                    let th = (x[2] / r).clamp(-1.0, 1.0).acos();
                    r.powf(self.gamma) * cap.eval(th)
                }
            }
            AngularProfile::Product { k } => x[..*k].iter().map(|v| v.max(0.0)).product(),
        };
        Ok(value)
    }

    /// Centered-difference residuals `|Delta_h Phi(x)|` and
    /// `|x . grad_h Phi(x) - gamma Phi(x)|`.
    pub fn harmonic_residual(&self, x: &[f64], h: f64) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        if !(h > 0.0) {
            return Err(Error::arg("h", format!("must be positive, got {h}")));
        }
        if !(self.clearance(x) > h) || !(norm(x) > h) {
            return Err(Error::StencilOutsideCone { point: x.to_vec(), h });
        }
        let center = self.phi(x)?;
        let mut lap = 0.0;
        let mut euler = 0.0;
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            probe[i] = x[i] + h;
            let plus = self.phi(&probe)?;
            probe[i] = x[i] - h;
            let minus = self.phi(&probe)?;
            probe[i] = x[i];
            lap += (plus - 2.0 * center + minus) / (h * h);
            euler += x[i] * (plus - minus) / (2.0 * h);
        }
        Ok((lap.abs(), (euler - self.gamma * center).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn make_domain_examples() {
        let d = make_domain(CrossSectionSpec::full_sphere(3).unwrap()).unwrap();
        assert_eq!((d.lambda_sigma(), d.gamma()), (0.0, 0.0));

        let d = make_domain(CrossSectionSpec::half_space_product(2, 2).unwrap()).unwrap();
        assert_eq!(d.lambda_sigma(), 4.0);
        assert_relative_eq!(d.gamma(), 2.0, epsilon = 1e-15);

        let d = make_domain(CrossSectionSpec::planar_sector(FRAC_PI_2).unwrap()).unwrap();
        assert_relative_eq!(d.lambda_sigma(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(d.gamma(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(CrossSectionSpec::new(SectionKind::HalfLine, 2).is_err());
        assert!(CrossSectionSpec::new(SectionKind::FullLine, 3).is_err());
        assert!(CrossSectionSpec::planar_sector(0.0).is_err());
        assert!(CrossSectionSpec::planar_sector(-1.0).is_err());
        assert!(CrossSectionSpec::new(SectionKind::PlanarSector { omega: 1.0 }, 3).is_err());
        assert!(CrossSectionSpec::spherical_cap(0.0).is_err());
        assert!(CrossSectionSpec::new(SectionKind::SphericalCap { theta0: 1.0 }, 2).is_err());
        assert!(CrossSectionSpec::half_space_product(3, 2).is_err());
        assert!(CrossSectionSpec::new(SectionKind::FullSphere, 0).is_err());
    }

    #[test]
    fn one_dimensional_reductions() {
        let s = CrossSectionSpec::half_space_product(1, 1).unwrap();
        assert_eq!(s.kind(), SectionKind::HalfLine);
        let s = CrossSectionSpec::half_space_product(0, 1).unwrap();
        assert_eq!(s.kind(), SectionKind::FullLine);
        let d = make_domain(CrossSectionSpec::half_line()).unwrap();
        assert_eq!(d.gamma(), 1.0);
        let d = make_domain(CrossSectionSpec::full_line()).unwrap();
        assert_eq!(d.gamma(), 0.0);
    }

    #[test]
    fn gamma_root_examples() {
        assert_eq!(gamma_root(1, 0.0).unwrap(), 1.0);
        assert_eq!(gamma_root(3, 2.0).unwrap(), 1.0);
        assert_eq!(gamma_root(5, 0.0).unwrap(), 0.0);
        assert!(gamma_root(3, -1.0).is_err());
    }

    #[test]
    fn sector_eigenvalue_examples() {
        assert_relative_eq!(sector_eigenvalue(PI).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(sector_eigenvalue(FRAC_PI_2).unwrap(), 4.0, epsilon = 1e-14);
        for omega in [0.1, 1.0, 2.5, 6.0] {
            assert_relative_eq!(sector_eigenvalue(omega).unwrap() * omega * omega, PI * PI, max_relative = 1e-15);
        }
        assert!(sector_eigenvalue(0.0).is_err());
        assert!(sector_eigenvalue(7.0).is_err());
    }

    #[test]
    fn phi_examples() {
        let q = make_domain(CrossSectionSpec::half_space_product(2, 2).unwrap()).unwrap();
        assert_eq!(q.phi_eval(&[1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(q.phi_eval(&[-1.0, 1.0]), Err(Error::OutsideCone(_))));
        let h = make_domain(CrossSectionSpec::half_line()).unwrap();
        assert_eq!(h.phi_eval(&[3.0]).unwrap(), 3.0);
        assert!(h.phi_eval(&[-3.0]).is_err());
        let f = make_domain(CrossSectionSpec::full_sphere(2).unwrap()).unwrap();
        assert_eq!(f.phi_eval(&[-4.0, 0.3]).unwrap(), 1.0);
        assert_eq!(f.phi_eval(&[0.0, 0.0]).unwrap(), 1.0);
        let s = make_domain(CrossSectionSpec::planar_sector(FRAC_PI_2).unwrap()).unwrap();
        assert_eq!(s.phi_eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(s.phi_eval(&[1.0, 0.0]).unwrap().abs() < 1e-15);
        assert!(s.phi_eval(&[1.0, -0.1]).is_err());
    }

    #[test]
    fn residual_examples() {
        let q = make_domain(CrossSectionSpec::half_space_product(2, 2).unwrap()).unwrap();
        for h in [0.1, 0.01, 1e-3] {
            let (lap, euler) = q.harmonic_residual(&[1.0, 2.0], h).unwrap();
            assert!(lap < 1e-9, "lap {lap}");
            assert!(euler < 1e-9);
        }
        let hl = make_domain(CrossSectionSpec::half_line()).unwrap();
        let (_, euler) = hl.harmonic_residual(&[2.0], 0.1).unwrap();
        assert!(euler < 1e-14);
        assert!(matches!(hl.harmonic_residual(&[0.05], 0.1), Err(Error::StencilOutsideCone { .. })));
    }

    #[test]
    fn sector_residual_second_order() {
        let omega = 3.0 * PI / 4.0;
        let d = make_domain(CrossSectionSpec::planar_sector(omega).unwrap()).unwrap();
        let x = [(omega / 2.0).cos(), (omega / 2.0).sin()];
        let (l1, e1) = d.harmonic_residual(&x, 0.1).unwrap();
        let (l2, e2) = d.harmonic_residual(&x, 0.05).unwrap();
        // at least second order; the bisector point is more accurate still
        assert!(l1 / l2 > 3.8, "ratio {}", l1 / l2);
        assert!(e1 / e2 > 3.8, "euler ratio {}", e1 / e2);
        let off = [0.9_f64.cos(), 0.9_f64.sin()];
        let (a, _) = d.harmonic_residual(&off, 0.1).unwrap();
        let (b, _) = d.harmonic_residual(&off, 0.05).unwrap();
        assert!(a / b > 3.8 && a < 1e-2, "{a} {b}");
    }

    #[test]
    fn fujita_threshold_examples() {
        assert_eq!(fujita_threshold(1, 0.0, 0.0).unwrap(), 3.0);
        assert_eq!(fujita_threshold(3, 0.0, 1.0).unwrap(), 2.0);
        assert_eq!(fujita_threshold(2, 2.0, 0.0).unwrap(), 1.5);
        assert!(fujita_threshold(1, 0.0, 1.0).is_err());
        assert!(fujita_threshold(2, 0.0, 1.5).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: CrossSectionSpec = serde_json::from_str(r#"{"kind":"planar-sector","N":2,"omega":1.5}"#).unwrap();
        assert_eq!(spec.kind(), SectionKind::PlanarSector { omega: 1.5 });
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(back, r#"{"kind":"planar-sector","N":2,"omega":1.5}"#);
        assert!(serde_json::from_str::<CrossSectionSpec>(r#"{"kind":"planar-sector","N":2}"#).is_err());
        assert!(serde_json::from_str::<CrossSectionSpec>(r#"{"kind":"cube","N":2}"#).is_err());
        assert!(serde_json::from_str::<CrossSectionSpec>(r#"{"kind":"full-line","N":1,"extra":1}"#).is_err());
    }
}
