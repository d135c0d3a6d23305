//! Discrete Hardy quotient `int |grad u|^2 / int u^2 / |x|^2` over a cone.

use rand::Rng;

use super::ConeDomain;
use crate::error::{Error, Result};

/// Compactly supported field with an analytic gradient.
pub trait TestField {
    fn dim(&self) -> usize;
    /// Axis-aligned box containing the support.
    fn support_box(&self) -> (Vec<f64>, Vec<f64>);
    /// Value at `x`, writing the gradient into `grad`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// `exp(-1/(1-rho^2)) (1 + a . (x - c) / r)` with `rho = |x - c| / r`.
#[derive(Debug, Clone)]
pub struct BumpField {
    pub center: Vec<f64>,
    pub radius: f64,
    pub tilt: Vec<f64>,
}

impl TestField for BumpField {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.center.iter().map(|c| c - self.radius).collect();
        let hi = self.center.iter().map(|c| c + self.radius).collect();
        (lo, hi)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let r = self.radius;
        let mut rho2 = 0.0;
        let mut lin = 1.0;
        for i in 0..x.len() {
            let d = x[i] - self.center[i];
            rho2 += d * d;
            lin += self.tilt[i] * d / r;
        }
        rho2 /= r * r;
        if rho2 >= 1.0 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return 0.0;
        }
        let q = 1.0 - rho2;
        let b = (-1.0 / q).exp();
        let db = -2.0 * b / (q * q * r * r);
        for i in 0..x.len() {
            grad[i] = db * (x[i] - self.center[i]) * lin + b * self.tilt[i] / r;
        }
        b * lin
    }
}

/// Sharp Hardy constant `((N - 2) / 2 + gamma)^2` of the cone.
pub fn hardy_constant(domain: &ConeDomain) -> f64 {
    (0.5 * (domain.dim() as f64 - 2.0) + domain.gamma()).powi(2)
}

/// Midpoint-rule Hardy quotient on a tensor grid of `cells` cells per axis
/// spanning the support box of `field`.
pub fn hardy_ratio(domain: &ConeDomain, field: &dyn TestField, cells: usize) -> Result<f64> {
    let n = domain.dim();
    if field.dim() != n {
        return Err(Error::arg("field", format!("dimension {} does not match the cone dimension {n}", field.dim())));
    }
    if cells == 0 {
        return Err(Error::arg("cells", "must be positive"));
    }
    let (lo, hi) = field.support_box();
    let h: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / cells as f64).collect();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut num = 0.0;
    let mut den = 0.0;
    loop {
        for i in 0..n {
            x[i] = lo[i] + (idx[i] as f64 + 0.5) * h[i];
        }
        let u = field.value_grad(&x, &mut grad);
        if u != 0.0 {
            if !domain.contains(&x) {
                return Err(Error::Precondition(format!("test field is nonzero outside the cone at {x:?}")));
            }
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2 == 0.0 {
                return Err(Error::Precondition("test field is nonzero at the vertex".into()));
            }
            num += grad.iter().map(|g| g * g).sum::<f64>();
            den += u * u / r2;
        }
        let mut axis = 0;
        loop {
            if axis == n {
                return if den > 0.0 {
                    Ok(num / den)
                } else {
                    Err(Error::Precondition("test field vanishes on the grid".into()))
                };
            }
            idx[axis] += 1;
            if idx[axis] < cells {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Random bump supported in a ball that sits inside the open cone and away
/// from the vertex.
pub fn random_bump<R: Rng + ?Sized>(domain: &ConeDomain, rng: &mut R) -> Result<BumpField> {
    let n = domain.dim();
    for _ in 0..100_000 {
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let r = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let room = domain.clearance(&c).min(r);
        if room < 0.05 {
            continue;
        }
        let radius = rng.gen_range(0.3..0.95) * room;
        let tilt = (0..n).map(|_| rng.gen_range(-0.9..0.9) / (n as f64).sqrt()).collect();
        return Ok(BumpField { center: c, radius, tilt });
    }
    Err(Error::NonConvergence("could not place a test bump inside the cone".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{make_domain, CrossSectionSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constants() {
        let d = make_domain(CrossSectionSpec::full_sphere(3).unwrap()).unwrap();
        assert_eq!(hardy_constant(&d), 0.25);
        let d = make_domain(CrossSectionSpec::half_space_product(2, 2).unwrap()).unwrap();
        assert!((hardy_constant(&d) - 4.0).abs() < 1e-14);
        let d = make_domain(CrossSectionSpec::half_line()).unwrap();
        assert_eq!(hardy_constant(&d), 0.25);
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let f = BumpField { center: vec![1.0, 2.0], radius: 0.7, tilt: vec![0.3, -0.4] };
        let x = [1.2, 1.75];
        let mut g = [0.0; 2];
        f.value_grad(&x, &mut g);
        let mut scratch = [0.0; 2];
        for i in 0..2 {
            let mut p = x;
            let mut m = x;
            p[i] += 1e-6;
            m[i] -= 1e-6;
            let fd = (f.value_grad(&p, &mut scratch) - f.value_grad(&m, &mut scratch)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-7, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn random_bumps_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = make_domain(CrossSectionSpec::half_space_product(2, 2).unwrap()).unwrap();
        for _ in 0..20 {
            let b = random_bump(&d, &mut rng).unwrap();
            let ratio = hardy_ratio(&d, &b, 48).unwrap();
            assert!(ratio >= 4.0, "{ratio}");
        }
    }

    #[test]
    fn outside_support_rejected() {
        let d = make_domain(CrossSectionSpec::half_line()).unwrap();
        let f = BumpField { center: vec![0.2], radius: 0.5, tilt: vec![0.0] };
        assert!(matches!(hardy_ratio(&d, &f, 100), Err(Error::Precondition(_))));
    }
}
