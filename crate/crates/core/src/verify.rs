//! Property suites behind the `verify` command, each a table of named checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cone::{hardy_constant, hardy_ratio, make_domain, random_bump, ConeDomain, CrossSectionSpec};
use crate::cutoff::{bound_constants, log2_sides, CutoffFamily, ShellGrid, TransitionProfile};
use crate::error::{Error, Result};
use crate::lifespan::{key_lemma_bound, key_lemma_log_bound, ode_saturation_oracle_log, BoundInputs};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        Self { suite: suite.to_string(), checks: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const SUITES: [&str; 4] = ["cutoff", "hardy", "harmonic", "lemma-oracle"];

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "cutoff" => cutoff_suite(seed),
        "hardy" => hardy_suite(seed, 1000),
        "harmonic" => harmonic_suite(seed),
        "lemma-oracle" => lemma_oracle_suite(seed, 100),
        _ => Err(Error::arg("suite", format!("unknown suite {name:?}, expected one of {SUITES:?}"))),
    }
}

/// Largest relative spread `|v / mean - 1|` of a positive sample.
pub fn spread_about_mean(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max)
}

/// Tolerance of the cross-radius stability of the cutoff bound constants.
pub const CONSTANT_STABILITY: f64 = 0.10;

/// Quadrature tolerance of the log-2 inequality.
pub const LOG2_TOL: f64 = 1e-10;

pub fn cutoff_suite(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("cutoff");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // exact values on dyadic sample points, where s_R is computed without rounding for alpha = 0
    let mut bad = Vec::new();
    let mut count = 0;
    for &alpha in &[0.0, 0.5, 1.0] {
        for &r in &[2.0, 4.0, 8.0, 16.0] {
            let fam = CutoffFamily::new(r, alpha, 2.0, 1)?;
            for i in 0..=64 {
                for j in 0..=64 {
                    let x = [i as f64 / 4.0];
                    let t = j as f64 / 4.0;
                    let s = fam.s_value(&x, t);
                    let (psi, star) = (fam.psi(&x, t), fam.psi_star(&x, t));
                    // eta* switches on at s = 1/2 itself
                    let ok = if s < 0.5 {
                        psi == 1.0 && star == 0.0 && fam.in_region(&x, t)
                    } else if s == 0.5 {
                        psi == 1.0 && star == 1.0
                    } else if s >= 1.0 {
                        psi == 0.0 && star == 0.0
                    } else {
                        star == psi && (0.0..=1.0).contains(&psi)
                    };
                    count += 1;
                    if !ok {
                        bad.push(format!("R={r} alpha={alpha} x={} t={t}", x[0]));
                    }
                }
            }
        }
    }
    rep.push(
        "support identities",
        bad.is_empty(),
        format!(
            "{} of {count} dyadic points off{}",
            bad.len(),
            bad.first().map(|b| format!("; first at {b}")).unwrap_or_default()
        ),
    );

    let mut worst = 0.0f64;
    let mut fails = 0;
    for _ in 0..1000 {
        let (ok, rel) = derivative_probe(&mut rng)?;
        worst = worst.max(rel);
        if !ok {
            fails += 1;
        }
    }
    rep.push(
        "derivatives vs finite differences",
        fails == 0,
        format!("1000 points, {fails} failures, largest gap {worst:.2} of the allowed error"),
    );

    let mut viol = 0;
    let mut tail_nonzero = 0;
    let mut worst_margin = f64::INFINITY;
    for &p in &[1.5, 2.0, 3.0] {
        let power = 2.0 * p / (p - 1.0);
        for k in 0..100 {
            let sigma = 1.2 * k as f64 / 99.0;
            let (lhs, rhs) = log2_sides(TransitionProfile::Smooth, power, sigma, LOG2_TOL);
            if lhs > rhs + LOG2_TOL {
                viol += 1;
            }
            if sigma >= 1.0 && lhs != 0.0 {
                tail_nonzero += 1;
            }
            if sigma < 1.0 {
                worst_margin = worst_margin.min(rhs - lhs);
            }
        }
    }
    rep.push(
        "log-2 inequality",
        viol == 0 && tail_nonzero == 0,
        format!("100 sigma in [0, 1.2] x p in {{1.5, 2, 3}}: {viol} violations, smallest margin below sigma = 1 {worst_margin:.3e}"),
    );

    let mut worst_spread = 0.0f64;
    let mut problems = Vec::new();
    for &p in &[1.5, 2.0, 3.0] {
        for &alpha in &[0.0, 0.5, 1.0] {
            for &dim in &[1usize, 2, 3] {
                let mut cs = Vec::new();
                for &r in &[10.0, 100.0, 1000.0] {
                    match bound_constants(&CutoffFamily::new(r, alpha, p, dim)?, &ShellGrid::default()) {
                        Ok(c) => cs.push(c),
                        Err(e) => problems.push(format!("p={p} alpha={alpha} N={dim} R={r}: {e}")),
                    }
                }
                if cs.len() < 3 {
                    continue;
                }
                for (name, vals) in [
                    ("C1", cs.iter().map(|c| c.c1).collect::<Vec<_>>()),
                    ("C2", cs.iter().map(|c| c.c2).collect()),
                    ("C3", cs.iter().map(|c| c.c3).collect()),
                ] {
                    let s = spread_about_mean(&vals);
                    worst_spread = worst_spread.max(s);
                    if !(s <= CONSTANT_STABILITY) || vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                        problems.push(format!("p={p} alpha={alpha} N={dim} {name}: {vals:?}"));
                    }
                }
            }
        }
    }
    rep.push(
        "bound constants stable across R",
        problems.is_empty(),
        format!(
            "largest spread about the mean over R in {{10, 100, 1000}}: {:.1}%{}",
            100.0 * worst_spread,
            problems.first().map(|p| format!("; {p}")).unwrap_or_default()
        ),
    );

    let control = CutoffFamily::new(10.0, 0.0, 2.0, 1)?.with_profile(TransitionProfile::Smoothstep).with_power(1.0);
    let diverged = matches!(bound_constants(&control, &ShellGrid::default()), Err(Error::Divergence(_)));
    rep.push("power-one negative control diverges", diverged, "smoothstep profile with psi = eta");
    Ok(rep)
}

// one random point of the transition shell; returns (within tolerance, largest gap / allowed)
fn derivative_probe(rng: &mut ChaCha8Rng) -> Result<(bool, f64)> {
    let h = 1e-5;
    loop {
        let dim = rng.gen_range(1..=3);
        let alpha = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
        let p = rng.gen_range(1.2..4.0);
        let radius = 10f64.powf(rng.gen_range(0.5..3.0));
        let fam = CutoffFamily::new(radius, alpha, p, dim)?;
        let level = rng.gen_range(0.52..0.98) * radius;
        if level < 1.5 {
            continue;
        }
        let spatial = 1.0 + rng.gen_range(0.05..0.95) * (level - 1.0);
        let t = level - spatial;
        let rho = (spatial.powf(2.0 / (2.0 - alpha)) - 1.0).sqrt();
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v *= rho / n);

        let (dt, dtt) = fam.psi_time_derivs(&x, t);
        let lap = fam.psi_laplacian(&x, t);
        // centered differences at h and h/2 combined by Richardson
        let rich = |d: &dyn Fn(f64) -> f64| (4.0 * d(0.5 * h) - d(h)) / 3.0;
        let fd_t = rich(&|h| (fam.psi(&x, t + h) - fam.psi(&x, t - h)) / (2.0 * h));
        let fd_tt = rich(&|h| (fam.psi_time_derivs(&x, t + h).0 - fam.psi_time_derivs(&x, t - h).0) / (2.0 * h));
        let fd_lap = rich(&|h| {
            (0..dim)
                .map(|i| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    (fam.psi_gradient(&xp, t)[i] - fam.psi_gradient(&xm, t)[i]) / (2.0 * h)
                })
                .sum()
        });
        let grad = fam.psi_gradient(&x, t).iter().map(|g| g * g).sum::<f64>().sqrt();
        // relative 1e-6 plus the rounding floor of a difference quotient
        let mut ok = true;
        let mut worst = 0.0f64;
        for (fd, ex, f) in [(fd_t, dt, fam.psi(&x, t)), (fd_tt, dtt, dt), (fd_lap, lap, grad)] {
            let allowed = 1e-6 * ex.abs() + 100.0 * f64::EPSILON * f.abs() / h;
            let gap = (fd - ex).abs();
            ok &= gap <= allowed;
            if gap > 0.0 {
                worst = worst.max(gap / allowed);
            }
        }
        return Ok((ok, worst));
    }
}

/// Sharpness margin allowed below the Hardy constant.
pub const HARDY_SLACK: f64 = 1e-6;

/// The three Hardy domains of the suite with their quadrature resolution.
pub fn hardy_domains() -> Result<Vec<(&'static str, ConeDomain, usize)>> {
    Ok(vec![
        ("full sphere N=3", make_domain(CrossSectionSpec::full_sphere(3)?)?, 24),
        ("quarter plane", make_domain(CrossSectionSpec::planar_sector(0.5 * PI)?)?, 64),
        ("half-line", make_domain(CrossSectionSpec::half_line())?, 4000),
    ])
}

pub fn hardy_suite(seed: u64, fields: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("hardy");
    for (k, (name, dom, cells)) in hardy_domains()?.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let c = hardy_constant(&dom);
        let mut viol = 0;
        let mut lowest = f64::INFINITY;
        for _ in 0..fields {
            let b = random_bump(&dom, &mut rng)?;
            let ratio = hardy_ratio(&dom, &b, cells)?;
            lowest = lowest.min(ratio);
            if ratio < c - HARDY_SLACK {
                viol += 1;
            }
        }
        rep.push(
            format!("hardy {name}"),
            viol == 0,
            format!("{fields} fields, constant {c}, {viol} violations, smallest ratio {lowest:.6}"),
        );
    }
    Ok(rep)
}

/// Observed convergence order required of the harmonic residual.
pub const HARMONIC_ORDER: f64 = 1.8;

pub fn harmonic_suite(seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("harmonic");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = [
        CrossSectionSpec::half_line(),
        CrossSectionSpec::planar_sector(0.5 * PI)?,
        CrossSectionSpec::planar_sector(0.75 * PI)?,
        CrossSectionSpec::planar_sector(1.5 * PI)?,
        CrossSectionSpec::spherical_cap(PI / 3.0)?,
        CrossSectionSpec::spherical_cap(0.5 * PI)?,
        CrossSectionSpec::spherical_cap(2.0 * PI / 3.0)?,
        CrossSectionSpec::half_space_product(2, 3)?,
    ];
    let (h1, h2) = (0.1, 0.05);
    for spec in specs {
        let dom = make_domain(spec)?;
        let n = dom.dim();
        let mut worst = f64::INFINITY;
        let mut points = 0;
        let mut fails = 0;
        while points < 20 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            if dom.clearance(&x) < 0.3 || x.iter().map(|v| v * v).sum::<f64>() < 0.25 {
                continue;
            }
            points += 1;
            let phi = dom.phi_eval(&x)?;
            let (l1, e1) = dom.harmonic_residual(&x, h1)?;
            let (l2, e2) = dom.harmonic_residual(&x, h2)?;
            // residuals already at rounding level count as exact
            let floor = 1e-9 * phi.abs().max(1.0);
            for (a, b) in [(l1, l2), (e1, e2)] {
                if a <= floor && b <= floor {
                    continue;
                }
                let order = (a / b).log2();
                worst = worst.min(order);
                if !(order >= HARMONIC_ORDER) {
                    fails += 1;
                }
            }
        }
        let order = if worst.is_finite() { format!("{worst:.2}") } else { "exact".into() };
        rep.push(
            format!("harmonic {}", describe(&spec)),
            fails == 0,
            format!("gamma {:.6}, 20 points, lowest observed order {order}", dom.gamma()),
        );
    }
    Ok(rep)
}

fn describe(spec: &CrossSectionSpec) -> String {
    use crate::cone::SectionKind::*;
    match spec.kind() {
        PlanarSector { omega } => format!("sector omega={omega:.4}"),
        SphericalCap { theta0 } => format!("cap theta0={theta0:.4}"),
        HalfSpaceProduct { k } => format!("half-space product k={k} N={}", spec.dim()),
        _ => spec.kind_name().to_string(),
    }
}

/// Relative agreement required between the closed form and the oracle.
pub const ORACLE_TOL: f64 = 1e-6;

/// Integrator tolerance handed to the oracle.
pub const ORACLE_RTOL: f64 = 1e-9;

pub fn lemma_oracle_suite(seed: u64, samples: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("lemma-oracle");
    let unit = BoundInputs { delta: 1.0, c0: 1.0, r1: 1.0, theta: 0.0, p: 2.0 };
    let t0 = key_lemma_bound(&unit)?;
    let t1 = key_lemma_bound(&BoundInputs { theta: 1.0, ..unit })?;
    rep.push("unit inputs theta=0 give 2", (t0 - 2.0).abs() <= 4.0 * f64::EPSILON, format!("{t0}"));
    let target = 1.0 + std::f64::consts::LN_2;
    rep.push("unit inputs theta=1 give 1 + log 2", (t1 - target).abs() <= 4.0 * f64::EPSILON, format!("{t1}"));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    for _ in 0..samples {
        let b = BoundInputs {
            delta: rng.gen_range(0.1..10.0),
            c0: rng.gen_range(0.5..2.0),
            r1: rng.gen_range(1.0..10.0),
            theta: rng.gen_range(0.0..2.0),
            p: rng.gen_range(1.2..4.0),
        };
        let closed = key_lemma_log_bound(&b)?;
        // log-domain difference is the relative difference of T
        let gap = match ode_saturation_oracle_log(&b, ORACLE_RTOL) {
            Ok(o) => (closed - o).abs(),
            Err(e) => {
                fails.push(format!("{b:?}: {e}"));
                continue;
            }
        };
        worst = worst.max(gap);
        if gap > ORACLE_TOL {
            fails.push(format!("{b:?}: gap {gap:e}"));
        }
    }
    rep.push(
        "closed form vs ODE oracle",
        fails.is_empty(),
        format!(
            "{samples} random inputs, largest relative gap {worst:.2e}{}",
            fails.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    );
    Ok(rep)
}
