//! One-step maps for both orders in time.
//!
//! `tau = 0`: `u_t = a^{-1}(Delta u + lambda |u|^p)` by Crank-Nicolson for the
//! diffusion and the source evaluated at the half step (predictor-corrector).
//!
//! `tau = 1`: staggered leapfrog `u^{n+1} = u^n + dt v^{n+1/2}` with the
//! damping averaged over `v^{n-1/2}, v^{n+1/2}`; steps may vary in length.

use num_complex::Complex64;

use super::banded::{Banded, BandedLu};
use super::grid::Grid;
use super::problem::{Coefficients, FieldState};
use crate::error::{Error, Result};

/// Fraction of the leapfrog stability limit `2 / sqrt(rho(V^{-1} K))` allowed.
pub const CFL_FRACTION: f64 = 0.9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `|z|^p`, skipping `hypot` and `pow` for the common exponents 2 and 3.
#[inline]
fn modulus_power(z: Complex64, p: f64) -> f64 {
    let n2 = z.norm_sqr();
    if p == 2.0 {
        n2
    } else if p == 3.0 {
        n2 * n2.sqrt()
    } else if n2 == 0.0 {
        0.0
    } else {
        n2.powf(0.5 * p)
    }
}

pub struct Stepper<'g> {
    grid: &'g Grid,
    coef: Coefficients,
    /// `a^{-1}` for the first-order form.
    inv_a: Complex64,
    damping: Vec<f64>,
    dt_limit: f64,
    cache: Vec<(u64, BandedLu)>,
    ku: Vec<Complex64>,
    base: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl<'g> Stepper<'g> {
    pub fn new(grid: &'g Grid, coef: Coefficients) -> Result<Self> {
        coef.validate()?;
        let n = grid.len();
        let damping = (0..n).map(|i| coef.damping_at(grid.radius2(i))).collect();
        let dt_limit =
            if coef.tau == 1 { CFL_FRACTION * 2.0 / grid.spectral_radius_bound().sqrt() } else { f64::INFINITY };
        Ok(Self {
            grid,
            coef,
            inv_a: coef.a_complex(0.0).inv(),
            damping,
            dt_limit,
            cache: Vec::new(),
            ku: vec![ZERO; n],
            base: vec![ZERO; n],
            work: vec![ZERO; n],
        })
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coef
    }

    /// Largest admissible step (infinite for the implicit first-order scheme).
    pub fn max_stable_dt(&self) -> f64 {
        self.dt_limit
    }

    pub fn step(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::arg("dt", format!("must be positive, got {dt}")));
        }
        if self.coef.tau == 0 {
            self.step_parabolic(state, dt)
        } else {
            self.step_hyperbolic(state, dt)
        }
    }

    fn factor(&mut self, dt: f64) -> Result<usize> {
        let key = dt.to_bits();
        if let Some(pos) = self.cache.iter().position(|(k, _)| *k == key) {
            return Ok(pos);
        }
        let k = self.grid.stiffness();
        let vol = self.grid.volumes();
        let shift = self.inv_a * (0.5 * dt);
        let n = k.size();
        let mut m = Banded::<Complex64>::zeros(n, k.bandwidth());
        for i in 0..n {
            if self.grid.is_dirichlet(i) {
                m.set(i, i, Complex64::new(1.0, 0.0));
                continue;
            }
            let (lo, hi) = k.cols(i);
            for j in lo..hi {
                let kij = k.get(i, j);
                if kij != 0.0 {
                    m.set(i, j, shift * kij);
                }
            }
            m.add(i, i, Complex64::new(vol[i], 0.0));
        }
        if self.cache.len() >= 64 {
            self.cache.remove(0);
        }
        self.cache.push((key, BandedLu::factor(m)?));
        Ok(self.cache.len() - 1)
    }

    fn source(&self, z: Complex64) -> Complex64 {
        self.coef.lambda * modulus_power(z, self.coef.p)
    }

    /// One Crank-Nicolson step of the first-order equation.
    pub fn step_parabolic(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        if self.coef.tau != 0 {
            return Err(Error::Precondition("parabolic step needs tau = 0".into()));
        }
        let slot = self.factor(dt)?;
        let vol = self.grid.volumes();
        let half = self.inv_a * (0.5 * dt);
        let full = self.inv_a * dt;
        self.grid.stiffness().apply(&state.u, &mut self.ku);
        for i in 0..self.base.len() {
            self.base[i] = state.u[i] * vol[i] - half * self.ku[i];
        }
        // predictor with the source at t_n
        for i in 0..self.work.len() {
            self.work[i] =
                if self.grid.is_dirichlet(i) { ZERO } else { self.base[i] + full * vol[i] * self.source(state.u[i]) };
        }
        self.cache[slot].1.solve(&mut self.work);
        // corrector with the source at the midpoint state
        for i in 0..self.work.len() {
            let mid = 0.5 * (state.u[i] + self.work[i]);
            self.work[i] =
                if self.grid.is_dirichlet(i) { ZERO } else { self.base[i] + full * vol[i] * self.source(mid) };
        }
        self.cache[slot].1.solve(&mut self.work);
        std::mem::swap(&mut state.u, &mut self.work);
        state.t += dt;
        state.dt_prev = dt;
        Ok(())
    }

    /// One staggered leapfrog step of the second-order equation.
    pub fn step_hyperbolic(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        if self.coef.tau != 1 {
            return Err(Error::Precondition("hyperbolic step needs tau = 1".into()));
        }
        if dt > self.dt_limit {
            return Err(Error::Precondition(format!("dt = {dt} violates the CFL limit {}", self.dt_limit)));
        }
        let v = state.v.as_mut().ok_or_else(|| Error::Precondition("second-order state without velocity".into()))?;
        let span = 0.5 * (state.dt_prev + dt);
        self.grid.laplacian(&state.u, &mut self.ku);
        for i in 0..v.len() {
            if self.grid.is_dirichlet(i) {
                v[i] = ZERO;
                continue;
            }
            let force = self.ku[i] + self.coef.lambda * modulus_power(state.u[i], self.coef.p);
            let ad = 0.5 * span * self.damping[i];
            v[i] = (v[i] * (1.0 - ad) + force * span) / (1.0 + ad);
            state.u[i] += v[i] * dt;
        }
        state.t += dt;
        state.dt_prev = dt;
        Ok(())
    }

    /// Staggered energy `1/2 |v|_V^2 + 1/2 Re <u^{n+1}, K u^n>` of the linear part.
    pub fn energy(&mut self, state: &FieldState) -> f64 {
        let Some(v) = &state.v else {
            return f64::NAN;
        };
        let vol = self.grid.volumes();
        for i in 0..self.work.len() {
            self.work[i] = state.u[i] - v[i] * state.dt_prev;
        }
        self.grid.stiffness().apply(&self.work, &mut self.ku);
        let mut e = 0.0;
        for i in 0..v.len() {
            e += 0.5 * vol[i] * v[i].norm_sqr() + 0.5 * (state.u[i].conj() * self.ku[i]).re;
        }
        e
    }
}

/// Discrete `L^2` norm `sqrt(sum V |u|^2)`.
pub fn l2_norm(grid: &Grid, u: &[Complex64]) -> f64 {
    grid.integrate(|i| u[i].norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::{Geometry, GridSpec};
    use crate::pde::problem::{Bump, Damping, EvolutionProblem, InitialData};

    fn problem(coef: Coefficients, geometry: Geometry, extent: f64, h: f64, g: bool) -> EvolutionProblem {
        EvolutionProblem {
            coefficients: coef,
            grid: GridSpec::with_spacing(geometry, extent, h),
            initial: InitialData {
                f: Bump { center: vec![0.0], width: 2.0, amplitude: Complex64::new(1.0, 0.0) },
                g: g.then(|| Bump { center: vec![0.5], width: 1.0, amplitude: Complex64::new(0.5, 0.0) }),
                epsilon: 1.0,
            },
        }
    }

    #[test]
    fn heat_max_norm_non_increasing_and_positive() {
        let pr = problem(Coefficients { lambda: ZERO, ..Coefficients::heat(2.0) }, Geometry::Line, 10.0, 0.02, false);
        let grid = Grid::new(pr.grid).unwrap();
        let mut st = FieldState::initial(&pr, &grid);
        let mut s = Stepper::new(&grid, pr.coefficients).unwrap();
        let mut last = st.max_abs();
        for _ in 0..500 {
            s.step(&mut st, 0.01).unwrap();
            let m = st.max_abs();
            assert!(m <= last * (1.0 + 1e-14));
            assert!(st.u.iter().all(|z| z.re >= -1e-12));
            last = m;
        }
    }

    #[test]
    fn free_schrodinger_conserves_mass() {
        let coef = Coefficients { lambda: ZERO, ..Coefficients::schrodinger(2.0) };
        let pr = problem(coef, Geometry::Line, 10.0, 0.02, false);
        let grid = Grid::new(pr.grid).unwrap();
        let mut st = FieldState::initial(&pr, &grid);
        let mut s = Stepper::new(&grid, pr.coefficients).unwrap();
        let mut last = l2_norm(&grid, &st.u);
        for _ in 0..200 {
            s.step(&mut st, 0.01).unwrap();
            let n = l2_norm(&grid, &st.u);
            assert!((n / last - 1.0).abs() < 1e-12, "{n} {last}");
            last = n;
        }
    }

    #[test]
    fn symmetric_data_stays_symmetric() {
        let pr = problem(Coefficients::heat(2.0), Geometry::Line, 8.0, 0.02, false);
        let grid = Grid::new(pr.grid).unwrap();
        let mut st = FieldState::initial(&pr, &grid);
        let mut s = Stepper::new(&grid, pr.coefficients).unwrap();
        for _ in 0..100 {
            s.step(&mut st, 0.01).unwrap();
        }
        let n = st.u.len();
        for i in 0..n {
            assert!((st.u[i] - st.u[n - 1 - i]).norm() <= 1e-14 * st.max_abs());
        }
    }

    #[test]
    fn wave_energy_conserved() {
        let coef = Coefficients { lambda: ZERO, ..Coefficients::damped_wave(0.0, 0.0, 2.0) };
        let pr = problem(coef, Geometry::Line, 30.0, 0.05, true);
        let grid = Grid::new(pr.grid).unwrap();
        let mut st = FieldState::initial(&pr, &grid);
        let mut s = Stepper::new(&grid, pr.coefficients).unwrap();
        let dt = 0.5 * s.max_stable_dt();
        s.step(&mut st, dt).unwrap();
        let e0 = s.energy(&st);
        for _ in 0..10_000 {
            s.step(&mut st, dt).unwrap();
        }
        let e1 = s.energy(&st);
        assert!(((e1 - e0) / e0).abs() < 1e-10, "{e0} {e1}");
    }

    #[test]
    fn damped_energy_decreases() {
        let pr = problem(
            Coefficients { lambda: ZERO, ..Coefficients::damped_wave(1.0, 0.5, 2.0) },
            Geometry::Line,
            20.0,
            0.05,
            true,
        );
        let grid = Grid::new(pr.grid).unwrap();
        let mut st = FieldState::initial(&pr, &grid);
        let mut s = Stepper::new(&grid, pr.coefficients).unwrap();
        let dt = 0.8 * s.max_stable_dt();
        s.step(&mut st, dt).unwrap();
        let mut last = s.energy(&st);
        for k in 0..2000 {
            s.step(&mut st, dt).unwrap();
            let e = s.energy(&st);
            assert!(e <= last * (1.0 + 1e-12), "step {k}: {e} > {last}");
            last = e;
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let pr = problem(Coefficients::damped_wave(1.0, 0.0, 2.0), Geometry::Line, 5.0, 0.05, true);
        let grid = Grid::new(pr.grid).unwrap();
        let mut st = FieldState::initial(&pr, &grid);
        let mut s = Stepper::new(&grid, pr.coefficients).unwrap();
        assert!((s.max_stable_dt() - 0.9 * grid.spacing()).abs() < 1e-12);
        assert!(matches!(s.step(&mut st, 0.06), Err(Error::Precondition(_))));
    }

    #[test]
    fn singular_damping_runs_off_origin() {
        let coef = Coefficients { tau: 1, damping: Damping::Singular { v0: 1.0 }, lambda: ZERO, p: 2.0 };
        let mut pr = problem(coef, Geometry::Radial { dim: 3, origin: Default::default() }, 10.0, 0.05, true);
        pr.initial.f.center = vec![];
        let grid = Grid::new(pr.grid).unwrap();
        let mut st = FieldState::initial(&pr, &grid);
        let mut s = Stepper::new(&grid, pr.coefficients).unwrap();
        let dt = s.max_stable_dt();
        s.step(&mut st, dt).unwrap();
        let mut last = s.energy(&st);
        for _ in 0..500 {
            s.step(&mut st, dt).unwrap();
            let e = s.energy(&st);
            assert!(e.is_finite() && e <= last * (1.0 + 1e-12));
            last = e;
        }
    }
}
