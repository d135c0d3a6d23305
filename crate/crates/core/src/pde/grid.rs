//! Finite-volume meshes of the truncated domains. Each mesh carries the
//! symmetric stiffness matrix `K` and the cell volumes `V` so that the
//! discrete Laplacian is `-V^{-1} K` with homogeneous Dirichlet data at every
//! finite boundary.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::banded::Banded;
use crate::error::{Error, Result};

/// Treatment of `r = 0` on radial meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialOrigin {
    /// Smooth radial functions on the whole space: no flux through `r = 0`.
    #[default]
    Symmetric,
    /// `u(0) = 0`.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Geometry {
    /// `[-L, L]`.
    Line,
    /// `[0, L]`.
    HalfLine,
    /// Radial functions on a ball of radius `L` in `R^N`.
    Radial {
        #[serde(rename = "N")]
        dim: usize,
        #[serde(default)]
        origin: RadialOrigin,
    },
    /// `{0 < r < L, 0 < theta < omega}` on a polar mesh.
    PolarSector { omega: f64, angular_nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub geometry: Geometry,
    /// Truncation extent `L`.
    pub extent: f64,
    /// Node count along `x` or `r`.
    pub nodes: usize,
}

impl GridSpec {
    /// Mesh spacing in `x` or `r` implied by the node count.
    pub fn spacing(&self) -> f64 {
        match self.geometry {
            Geometry::Line => 2.0 * self.extent / (self.nodes as f64 - 1.0),
            Geometry::HalfLine => self.extent / (self.nodes as f64 - 1.0),
            Geometry::Radial { origin: RadialOrigin::Symmetric, .. } => self.extent / self.nodes as f64,
            Geometry::Radial { origin: RadialOrigin::Dirichlet, .. } => self.extent / (self.nodes as f64 - 1.0),
            Geometry::PolarSector { .. } => self.extent / self.nodes as f64,
        }
    }

    /// Node count giving spacing at most `h` on `[-L, L]` or `[0, L]`.
    pub fn with_spacing(geometry: Geometry, extent: f64, h: f64) -> Self {
        let cells = (match geometry {
            Geometry::Line => 2.0 * extent,
            _ => extent,
        } / h)
            .ceil() as usize;
        let nodes = match geometry {
            Geometry::Radial { origin: RadialOrigin::Symmetric, .. } | Geometry::PolarSector { .. } => cells,
            _ => cells + 1,
        };
        Self { geometry, extent, nodes }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::arg("extent", format!("must be positive, got {}", self.extent)));
        }
        if self.nodes < 5 {
            return Err(Error::arg("nodes", format!("need at least 5, got {}", self.nodes)));
        }
        match self.geometry {
            Geometry::Radial { dim: 0, .. } => Err(Error::arg("N", "must be at least 1")),
            Geometry::PolarSector { omega, angular_nodes } => {
                if !(omega > 0.0 && omega <= 2.0 * PI) {
                    Err(Error::arg("omega", format!("must lie in (0, 2pi], got {omega}")))
                } else if angular_nodes < 4 {
                    Err(Error::arg("angular_nodes", "need at least 4"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Area of the unit sphere `S^{N-1}` (2 for `N = 1`).
pub fn sphere_area(dim: usize) -> f64 {
    // 2 pi^{N/2} / Gamma(N/2), with Gamma by the half-integer recursion
    let mut gamma_half = if dim.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut k = if dim.is_multiple_of(2) { 2 } else { 1 };
    while k < dim {
        gamma_half *= k as f64 / 2.0;
        k += 2;
    }
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half
}

#[derive(Debug, Clone)]
pub struct Grid {
    spec: GridSpec,
    h: f64,
    /// Cartesian coordinates of each node in the cone (radial meshes use `(r, 0, ..)`).
    points: Vec<Vec<f64>>,
    radius2: Vec<f64>,
    volume: Vec<f64>,
    dirichlet: Vec<bool>,
    outer: Vec<usize>,
    stiffness: Banded<f64>,
}

struct Builder {
    k: Banded<f64>,
}

impl Builder {
    fn face(&mut self, i: usize, j: usize, c: f64) {
        self.k.add(i, i, c);
        self.k.add(j, j, c);
        self.k.add(i, j, -c);
        self.k.add(j, i, -c);
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.nodes;
        let h = spec.spacing();
        let mut points = Vec::new();
        let mut volume = Vec::new();
        let mut dirichlet;
        let mut outer = Vec::new();
        let mut b;
        match spec.geometry {
            Geometry::Line | Geometry::HalfLine => {
                let x0 = if spec.geometry == Geometry::Line { -spec.extent } else { 0.0 };
                b = Builder { k: Banded::zeros(n, 1) };
                for i in 0..n {
                    points.push(vec![x0 + i as f64 * h]);
                    volume.push(h);
                }
                for i in 0..n - 1 {
                    b.face(i, i + 1, 1.0 / h);
                }
                dirichlet = vec![false; n];
                dirichlet[0] = true;
                dirichlet[n - 1] = true;
                outer.push(n - 2);
                if spec.geometry == Geometry::Line {
                    outer.push(1);
                }
            }
            Geometry::Radial { dim, origin } => {
                let area = sphere_area(dim);
                let nd = dim as f64;
                b = Builder { k: Banded::zeros(n, 1) };
                let r_at = |i: usize| match origin {
                    RadialOrigin::Symmetric => (i as f64 + 0.5) * h,
                    RadialOrigin::Dirichlet => i as f64 * h,
                };
                for i in 0..n {
                    let r = r_at(i);
                    let lo = (r - 0.5 * h).max(0.0);
                    let hi = r + 0.5 * h;
                    points.push({
                        let mut p = vec![0.0; dim];
                        p[0] = r;
                        p
                    });
                    volume.push(area * (hi.powf(nd) - lo.powf(nd)) / nd);
                }
                for i in 0..n - 1 {
                    let rf = 0.5 * (r_at(i) + r_at(i + 1));
                    b.face(i, i + 1, area * rf.powf(nd - 1.0) / h);
                }
                dirichlet = vec![false; n];
                dirichlet[n - 1] = true;
                if origin == RadialOrigin::Dirichlet {
                    dirichlet[0] = true;
                }
                outer.push(n - 2);
            }
            Geometry::PolarSector { omega, angular_nodes } => {
                let nt = angular_nodes;
                let dth = omega / nt as f64;
                let stride = nt + 1;
                let total = n * stride;
                b = Builder { k: Banded::zeros(total, stride) };
                dirichlet = vec![false; total];
                for i in 1..=n {
                    let r = i as f64 * h;
                    for j in 0..=nt {
                        let th = j as f64 * dth;
                        points.push(vec![r * th.cos(), r * th.sin()]);
                        volume.push(r * h * dth);
                        let id = (i - 1) * stride + j;
                        if j == 0 || j == nt || i == n {
                            dirichlet[id] = true;
                        } else if i == n - 1 {
                            outer.push(id);
                        }
                    }
                }
                for i in 1..=n {
                    let r = i as f64 * h;
                    for j in 0..=nt {
                        let id = (i - 1) * stride + j;
                        if j < nt {
                            b.face(id, id + 1, h / (r * dth));
                        }
                        if i < n {
                            b.face(id, id + stride, (r + 0.5 * h) * dth / h);
                        } else {
                            // nothing beyond the outer arc
                        }
                        if i == 1 {
                            // flux towards the vertex, where u = 0
                            b.k.add(id, id, 0.5 * h * dth / h);
                        }
                    }
                }
            }
        }
        let mut k = b.k;
        for (i, &d) in dirichlet.iter().enumerate() {
            if d {
                k.clear_cross(i);
            }
        }
        let radius2 = points.iter().map(|p| p.iter().map(|v| v * v).sum()).collect();
        Ok(Self { spec, h, points, radius2, volume, dirichlet, outer, stiffness: k })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn radius2(&self, i: usize) -> f64 {
        self.radius2[i]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volume
    }

    pub fn is_dirichlet(&self, i: usize) -> bool {
        self.dirichlet[i]
    }

    pub fn dirichlet(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Interior nodes next to the truncation boundary.
    pub fn outer_nodes(&self) -> &[usize] {
        &self.outer
    }

    pub fn stiffness(&self) -> &Banded<f64> {
        &self.stiffness
    }

    /// Largest eigenvalue bound of `V^{-1} K` (Gershgorin).
    pub fn spectral_radius_bound(&self) -> f64 {
        self.stiffness.gershgorin_scaled(&self.volume)
    }

    /// `Delta_h u`, zero on Dirichlet nodes.
    pub fn laplacian(&self, u: &[Complex64], out: &mut [Complex64]) {
        self.stiffness.apply(u, out);
        for i in 0..out.len() {
            out[i] = if self.dirichlet[i] { Complex64::new(0.0, 0.0) } else { -out[i] / self.volume[i] };
        }
    }

    /// `sum V_i f_i`.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.len()).map(|i| self.volume[i] * f(i)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn sphere_areas() {
        assert_eq!(sphere_area(1), 2.0);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn line_eigenfunction() {
        let mut errs = Vec::new();
        for nodes in [101, 201] {
            let g = Grid::new(GridSpec { geometry: Geometry::HalfLine, extent: 2.0, nodes }).unwrap();
            let k = PI / 2.0;
            let u: Vec<Complex64> = (0..g.len()).map(|i| c((k * g.point(i)[0]).sin())).collect();
            let mut lu = vec![c(0.0); g.len()];
            g.laplacian(&u, &mut lu);
            let err = (1..g.len() - 1).map(|i| (lu[i] + u[i] * k * k).norm()).fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] < 5e-4);
        assert!(errs[0] / errs[1] > 3.6, "{errs:?}");
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = Grid::new(GridSpec { geometry: Geometry::Line, extent: 1.0, nodes: 11 }).unwrap();
        let u = vec![c(0.0); 11];
        let mut out = vec![c(1.0); 11];
        g.laplacian(&u, &mut out);
        assert!(out.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn radial_three_d_eigenfunction() {
        // sin(k r) / r is an eigenfunction of the 3-D radial Laplacian
        let mut errs = Vec::new();
        for nodes in [200, 400] {
            let spec =
                GridSpec { geometry: Geometry::Radial { dim: 3, origin: RadialOrigin::Symmetric }, extent: 4.0, nodes };
            let g = Grid::new(spec).unwrap();
            let k = PI / 4.0;
            let u: Vec<Complex64> = (0..g.len())
                .map(|i| {
                    let r = g.point(i)[0];
                    c((k * r).sin() / r)
                })
                .collect();
            let mut lu = vec![c(0.0); g.len()];
            g.laplacian(&u, &mut lu);
            let err = (0..g.len())
                .filter(|&i| (1.0..3.0).contains(&g.point(i)[0]))
                .map(|i| (lu[i] + u[i] * k * k).norm())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 1.8, "{errs:?}");
    }

    #[test]
    fn symmetric_radial_one_d_matches_line() {
        let g = Grid::new(GridSpec {
            geometry: Geometry::Radial { dim: 1, origin: RadialOrigin::Symmetric },
            extent: 2.0,
            nodes: 100,
        })
        .unwrap();
        let u: Vec<Complex64> = (0..g.len()).map(|i| c((-g.point(i)[0].powi(2)).exp())).collect();
        let mut lu = vec![c(0.0); g.len()];
        g.laplacian(&u, &mut lu);
        let h = g.spacing();
        // the first cell sees its mirror image across the origin
        let expect = (u[1].re - u[0].re) / (h * h);
        assert!((lu[0].re - expect).abs() < 1e-9);
    }

    #[test]
    fn polar_sector_harmonic() {
        let omega = 3.0 * PI / 4.0;
        let mut errs = Vec::new();
        for (nodes, nt) in [(40, 24), (80, 48)] {
            let g = Grid::new(GridSpec {
                geometry: Geometry::PolarSector { omega, angular_nodes: nt },
                extent: 2.0,
                nodes,
            })
            .unwrap();
            let gam = PI / omega;
            let u: Vec<Complex64> = (0..g.len())
                .map(|i| {
                    let p = g.point(i);
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    let th = p[1].atan2(p[0]);
                    c(r.powf(gam) * (gam * th).sin().max(0.0))
                })
                .collect();
            let mut lu = vec![c(0.0); g.len()];
            g.laplacian(&u, &mut lu);
            let err = (0..g.len())
                .filter(|&i| {
                    !g.is_dirichlet(i) && {
                        let r = g.radius2(i).sqrt();
                        (0.5..1.5).contains(&r)
                    }
                })
                .map(|i| lu[i].norm())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
        assert!(errs[1] < 1e-2, "{errs:?}");
    }

    #[test]
    fn spectral_bound_line() {
        let g = Grid::new(GridSpec::with_spacing(Geometry::Line, 1.0, 0.01)).unwrap();
        let h = g.spacing();
        assert!((g.spectral_radius_bound() - 4.0 / (h * h)).abs() < 1e-6 / (h * h));
    }
}
