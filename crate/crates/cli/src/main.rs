//! `blowup`: cone spectra, lemma bounds, blowup runs, epsilon sweeps and the
//! property suites from the command line.
//!
//! Exit status is 0 on success, 1 when the input is invalid (or a property
//! suite fails) and 2 when a computation breaks down.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blowup_core::cone::{fujita_threshold, make_domain, CrossSectionSpec};
use blowup_core::config::{parse_config, RunConfig};
use blowup_core::emit::{self, SweepSummary};
use blowup_core::experiments::{analyze_trace, sweep};
use blowup_core::lifespan::{
    key_lemma_bound, ode_saturation_oracle, predicted_regime, BoundInputs, Regime, RegimeInputs,
};
use blowup_core::pde::{run_until_blowup, Damping};
use blowup_core::verify::{run_suite, SUITES};
use blowup_core::Error;

#[derive(Parser)]
#[command(name = "blowup", version, about = "Lifespan estimates for semilinear equations on cones")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output.dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed for randomized checks; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet eigenvalue and harmonic exponent of a cone's cross-section.
    Eigen {
        /// Cross-section as JSON, e.g. '{"kind":"planar-sector","N":2,"omega":1.5707963267948966}'.
        /// Defaults to the config's domain.
        #[arg(long)]
        domain: Option<String>,
        /// Damping decay rate used for the critical exponent.
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
    },
    /// Closed-form lemma bound, both branches, with the ODE cross-check.
    #[command(allow_negative_numbers = true)]
    Bound {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        c0: f64,
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        p: f64,
    },
    /// One run at the config's epsilon; traces it when the config asks for it.
    Simulate,
    /// Runs the config at every epsilon and fits both lifespan laws.
    Sweep,
    /// Property suites; all of them when none is named.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suites: Vec<String>,
    },
}

enum Failure {
    Invalid(String),
    Fault(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Fault(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Fault(m)) => {
            eprintln!("fault: {m}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Eigen { domain, alpha } => eigen(&cli.global, domain.as_deref(), *alpha),
        Command::Bound { delta, c0, r1, theta, p } => {
            bound(BoundInputs { delta: *delta, c0: *c0, r1: *r1, theta: *theta, p: *p })
        }
        Command::Simulate => simulate(&cli.global),
        Command::Sweep => run_sweep(&cli.global),
        Command::Verify { suites } => verify(&cli.global, suites),
    }
}

fn load(g: &Global) -> Result<RunConfig, Failure> {
    let path = g.config.as_deref().ok_or_else(|| Failure::Invalid("this subcommand needs --config".into()))?;
    let mut cfg = match parse_config(path) {
        Ok(c) => c,
        // a missing or unreadable file is bad input, not a breakdown
        Err(e @ Error::Io { .. }) => return Err(Failure::Invalid(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(g: &Global, cfg: &RunConfig) -> PathBuf {
    g.out_dir.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."))
}

fn write(dir: &Path, id: &str, suffix: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    let path = emit::output_path(dir, id, suffix);
    emit::write_file(&path, bytes).map_err(|e| Failure::Fault(e.to_string()))?;
    Ok(path)
}

fn eigen(g: &Global, domain: Option<&str>, alpha: f64) -> Outcome {
    let spec: CrossSectionSpec = match domain {
        Some(text) => serde_json::from_str(text).map_err(|e| Failure::Invalid(format!("--domain: {e}")))?,
        None => {
            let cfg = load(g)?;
            match cfg.domain {
                Some(d) => d,
                None => cfg.grid.geometry.cone()?,
            }
        }
    };
    let dom = make_domain(spec)?;
    let pc = fujita_threshold(dom.dim(), dom.gamma(), alpha)?;
    let out = serde_json::json!({
        "domain": spec,
        "lambda_sigma": dom.lambda_sigma(),
        "gamma": dom.gamma(),
        "alpha": alpha,
        "critical_p": pc,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn bound(b: BoundInputs) -> Outcome {
    b.validate()?;
    let here = key_lemma_bound(&b)?;
    let flat = key_lemma_bound(&BoundInputs { theta: 0.0, ..b })?;
    let oracle = ode_saturation_oracle(&b, 1e-9)?;
    if b.theta > 0.0 {
        println!("theta = {}: {here}", b.theta);
        println!("theta = 0: {flat}");
    } else {
        let unit = key_lemma_bound(&BoundInputs { theta: 1.0, ..b })?;
        println!("theta = 0: {here}");
        println!("theta = 1: {unit}");
    }
    println!("ode oracle at theta = {}: {oracle}", b.theta);
    Ok(())
}

fn regime(cfg: &RunConfig) -> Option<Regime> {
    let cone = cfg.grid.geometry.cone().ok()?;
    let dom = make_domain(cone).ok()?;
    let c = &cfg.coefficients;
    predicted_regime(&RegimeInputs {
        dim: dom.dim(),
        gamma: dom.gamma(),
        alpha: c.alpha(),
        p: c.p,
        singular: matches!(c.damping, Damping::Singular { .. }),
    })
    .ok()
}

fn simulate(g: &Global) -> Outcome {
    let cfg = load(g)?;
    let dir = out_dir(g, &cfg);
    let problem = cfg.problem();
    let outcome = run_until_blowup(&problem, &cfg.controls)?;
    let rec = &outcome.record;
    write(&dir, &cfg.id, "_record.csv", &emit::records_csv(std::slice::from_ref(rec)))?;
    if cfg.output.snapshots {
        write(&dir, &cfg.id, "_snapshots.csv", &emit::snapshots_csv(&outcome.snapshots))?;
    }
    println!("status: {}", rec.status.name());
    match rec.t_extrapolated {
        Some(t) => println!("T_extrapolated: {t}"),
        None => println!("T_extrapolated: none"),
    }
    println!("steps: {}, final dt: {}", rec.steps, rec.dt_final);
    println!("boundary |u|: final {:e}, peak {:e}", outcome.boundary_final, outcome.boundary_peak);
    if let Some(spec) = &cfg.trace {
        let a = analyze_trace(&problem, &outcome, spec)?;
        write(&dir, &cfg.id, "_trace.csv", &emit::trace_csv(&a.trace))?;
        write(&dir, &cfg.id, "_criterion.csv", &emit::criterion_csv(&a))?;
        let summary = serde_json::json!({
            "id": cfg.id,
            "T_extrapolated": a.t_blowup,
            "delta": a.delta,
            "theta": a.theta,
            "R1": spec.r1,
            "min_C0": a.report.min_c0,
            "C0_spread": a.c0_spread,
            "lemma_bound": a.bound,
            "bound_holds": a.bound >= a.t_blowup,
        });
        write(&dir, &cfg.id, "_trace.json", &emit::json_bytes(&summary))?;
        println!(
            "delta {} min C0 {} (spread {:.3}), lemma bound {} vs T {}",
            a.delta, a.report.min_c0, a.c0_spread, a.bound, a.t_blowup
        );
    }
    Ok(())
}

fn run_sweep(g: &Global) -> Outcome {
    let cfg = load(g)?;
    if cfg.epsilons.is_empty() {
        return Err(Failure::Invalid("sweep needs a non-empty `epsilons` list in the config".into()));
    }
    let dir = out_dir(g, &cfg);
    let sr = sweep(&cfg.id, &cfg.problem(), &cfg.controls, &cfg.epsilons, g.jobs)?;
    let reg = regime(&cfg);
    let summary = SweepSummary::new(&sr, reg.as_ref(), cfg.slope_tolerance, cfg.seed);
    write(&dir, &cfg.id, "_sweep.csv", &emit::records_csv(&sr.rows))?;
    write(&dir, &cfg.id, "_summary.json", &emit::json_bytes(&summary))?;
    write(&dir, &cfg.id, ".dat", &emit::sweep_dat(&sr))?;
    for r in &sr.rows {
        let t = r.t_extrapolated.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        println!("eps {:<8} {:<8} T {t}", r.epsilon, r.status.name());
    }
    if let Some(f) = sr.power {
        println!("power law: slope {} R^2 {}", f.slope, f.r2);
    }
    if let Some(f) = sr.exponential {
        println!("exponential law: slope {} R^2 {}", f.slope, f.r2);
    }
    if let Some(s) = &sr.fit_status {
        println!("fit: {s}");
    }
    println!("verdict: {}", summary.verdict);
    Ok(())
}

fn verify(g: &Global, suites: &[String]) -> Outcome {
    let seed = g.seed.unwrap_or(0);
    let names: Vec<&str> =
        if suites.is_empty() { SUITES.to_vec() } else { suites.iter().map(String::as_str).collect() };
    let mut all = true;
    for name in names {
        let rep = run_suite(name, seed)?;
        println!("[{name}]");
        for c in &rep.checks {
            println!("  {:<4} {:<36} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        all &= rep.passed();
    }
    if all {
        Ok(())
    } else {
        Err(Failure::Invalid("property suite failed".into()))
    }
}
