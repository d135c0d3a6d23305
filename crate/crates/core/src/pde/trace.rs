//! Space-time functionals of a stored run, as consumed by the criterion check.

use rayon::prelude::*;

use super::grid::Grid;
use super::problem::EvolutionProblem;
use super::run::Snapshots;
use crate::cone::ConeDomain;
use crate::cutoff::CutoffFamily;
use crate::error::{Error, Result};
use crate::lifespan::FunctionalTrace;

/// Relative tolerance for the time quadrature, checked against every other snapshot.
pub const TRACE_QUADRATURE_TOL: f64 = 0.01;

/// The harmonic weight at every node.
pub fn phi_weights(grid: &Grid, domain: &ConeDomain) -> Result<Vec<f64>> {
    (0..grid.len()).map(|i| domain.phi_eval(grid.point(i))).collect()
}

/// `|eps int (tau g + a f) Phi dx|`, the weighted initial mass.
pub fn initial_mass(problem: &EvolutionProblem, grid: &Grid, phi: &[f64]) -> f64 {
    let coef = &problem.coefficients;
    let init = &problem.initial;
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    let vol = grid.volumes();
    for i in 0..grid.len() {
        let x = grid.point(i);
        let mut v = coef.a_complex(grid.radius2(i)) * init.f.eval(x);
        if let (1, Some(g)) = (coef.tau, &init.g) {
            v += g.eval(x);
        }
        acc += v * vol[i] * phi[i];
    }
    (acc * init.epsilon).norm()
}

// radius with (value, refinement error) of m and of y
type MassPair = (f64, [(f64, f64); 2]);

fn trapezoid(times: &[f64], vals: &[f64], stride: usize) -> f64 {
    let idx: Vec<usize> = {
        let mut v: Vec<usize> = (0..times.len()).step_by(stride).collect();
        if *v.last().unwrap() != times.len() - 1 {
            v.push(times.len() - 1);
        }
        v
    };
    idx.windows(2).map(|w| 0.5 * (vals[w[0]] + vals[w[1]]) * (times[w[1]] - times[w[0]])).sum()
}

/// Masses `m(R) = int int w psi_R` and `y(R) = int int w psi_R*` of
/// `w = |u|^p Phi`, with `p` and `alpha` taken from `family`. Space uses the
/// grid volumes, time the trapezoid rule over the snapshots.
pub fn functional_trace(
    grid: &Grid,
    snapshots: &Snapshots,
    phi: &[f64],
    family: &CutoffFamily,
    radii: &[f64],
) -> Result<FunctionalTrace> {
    let times = &snapshots.times;
    if times.len() < 3 {
        return Err(Error::InsufficientResolution(format!("{} snapshots, at least 3 are needed", times.len())));
    }
    if phi.len() != grid.len() || snapshots.moduli.iter().any(|u| u.len() != grid.len()) {
        return Err(Error::arg("snapshots", "sizes do not match the grid"));
    }
    let t_end = *times.last().unwrap();
    for &r in radii {
        // psi_R vanishes for t >= R - 1
        if times[0] > 0.0 && times[0] >= r - 1.0 {
            return Err(Error::Precondition(format!(
                "support of psi_R for R = {r} lies before the first snapshot at t = {}",
                times[0]
            )));
        }
        if r - 1.0 > t_end {
            return Err(Error::Precondition(format!(
                "support of psi_R for R = {r} extends past the last snapshot at t = {t_end}"
            )));
        }
    }
    if times[0] > 0.0 {
        return Err(Error::Precondition(format!("snapshots start at t = {} > 0", times[0])));
    }
    let p = family.p();
    let vol = grid.volumes();
    let weights: Vec<Vec<f64>> = snapshots
        .moduli
        .iter()
        .map(|u| u.iter().zip(phi).zip(vol).map(|((a, f), v)| a.powf(p) * f * v).collect())
        .collect();
    let rows: Vec<Result<MassPair>> = radii
        .par_iter()
        .map(|&r| {
            let fam = family.with_radius(r)?;
            let mut sm = vec![0.0; times.len()];
            let mut sy = vec![0.0; times.len()];
            for (k, &t) in times.iter().enumerate() {
                if t >= r - 1.0 {
                    continue;
                }
                for (i, w) in weights[k].iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let s = fam.s_radial(grid.radius2(i), t);
                    if s >= 1.0 {
                        continue;
                    }
                    sm[k] += w * fam.psi_from_s(s);
                    sy[k] += w * fam.psi_star_from_s(s);
                }
            }
            let mut out = [(0.0, 0.0); 2];
            for (j, series) in [&sm, &sy].into_iter().enumerate() {
                let fine = trapezoid(times, series, 1);
                let coarse = trapezoid(times, series, 2);
                out[j] = (fine, (fine - coarse).abs() / 3.0);
            }
            Ok((r, out))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    // judged against max(mass, largest mass / 100), as in the Y transform
    let scale = rows.iter().map(|(_, o)| o[0].0).fold(0.0, f64::max);
    for (r, o) in &rows {
        for (fine, est) in o {
            if *est > TRACE_QUADRATURE_TOL * fine.max(1e-2 * scale) && *est > 1e-300 {
                return Err(Error::InsufficientResolution(format!(
                    "time quadrature at R = {r} has estimated error {est:e} against {fine:e}; store snapshots more densely"
                )));
            }
        }
    }
    let mut tr = FunctionalTrace { radii: radii.to_vec(), y: Vec::new(), m: Vec::new() };
    for (_, o) in rows {
        tr.m.push(o[0].0);
        tr.y.push(o[1].0);
    }
    tr.validate()?;
    Ok(tr)
}
