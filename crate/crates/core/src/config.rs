//! JSON run configurations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cone::CrossSectionSpec;
use crate::error::{Error, Result};
pub use crate::experiments::TraceSpec;
use crate::pde::{Coefficients, EvolutionProblem, GridSpec, InitialData, RunControls};

fn default_id() -> String {
    "run".into()
}

fn default_tolerance() -> f64 {
    0.15
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for every emitted file; `--out-dir` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write every stored snapshot, one row per node (large).
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Prefix of the output files.
    #[serde(default = "default_id")]
    pub id: String,
    /// Cone being truncated; must agree with the grid geometry when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<CrossSectionSpec>,
    pub coefficients: Coefficients,
    pub grid: GridSpec,
    pub initial: InitialData,
    pub controls: RunControls,
    /// Sweep values of epsilon.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSpec>,
    /// Relative tolerance on a fitted exponent in the regime verdict.
    #[serde(default = "default_tolerance")]
    pub slope_tolerance: f64,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn problem(&self) -> EvolutionProblem {
        EvolutionProblem { coefficients: self.coefficients, grid: self.grid, initial: self.initial.clone() }
    }

    /// Every violation found, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            out.push(format!("id must be a non-empty name of [A-Za-z0-9._-], got {:?}", self.id));
        }
        out.extend(self.problem().violations());
        out.extend(self.controls.violations());
        if let Some(d) = &self.domain {
            match self.grid.geometry.cone() {
                Ok(c) if c == *d => {}
                Ok(c) => out.push(format!(
                    "domain {} does not match the grid geometry, which discretizes {}",
                    d.kind_name(),
                    c.kind_name()
                )),
                Err(e) => out.push(e.to_string()),
            }
        }
        if !self.epsilons.is_empty() {
            if self.epsilons.len() < crate::experiments::MIN_FIT_ROWS {
                out.push(format!(
                    "epsilons needs at least {} values, got {}",
                    crate::experiments::MIN_FIT_ROWS,
                    self.epsilons.len()
                ));
            }
            if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                out.push("epsilons must be positive".into());
            }
            let mut sorted = self.epsilons.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                out.push("epsilons must be distinct".into());
            }
        }
        if let Some(t) = &self.trace {
            t.violations(&mut out);
            if self.controls.snapshot_dt.is_none() {
                out.push("trace needs controls.snapshot_dt".into());
            }
        }
        if !(self.slope_tolerance > 0.0 && self.slope_tolerance < 1.0) {
            out.push(format!("slope_tolerance must lie in (0, 1), got {}", self.slope_tolerance));
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

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configs serialize");
        s.push('\n');
        s
    }
}

/// Parses and validates; schema errors name the offending field path.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(vec![format!("at `{path}`: {}", e.inner())])
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "coefficients": {"tau": 0, "damping": {"form": "phase", "zeta": 0.0}, "lambda": [1.0, 0.0], "p": 2.0},
        "grid": {"geometry": {"kind": "line"}, "extent": 20.0, "nodes": 2001},
        "initial": {"f": {"width": 1.0, "amplitude": [1.0, 0.0]}, "epsilon": 0.5},
        "controls": {"dt": 0.01, "t_max": 100.0}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.id, "run");
        assert_eq!(c.controls.dt_min, 1e-15);
        assert_eq!(c.controls.max_increment, 0.2);
        assert_eq!(c.slope_tolerance, 0.15);
        assert_eq!(c.seed, 0);
        assert!(c.trace.is_none() && c.epsilons.is_empty());
    }

    #[test]
    fn alpha_out_of_range_rejected() {
        let text = MINIMAL.replace(
            r#""tau": 0, "damping": {"form": "phase", "zeta": 0.0}"#,
            r#""tau": 1, "damping": {"form": "profile", "a0": 1.0, "alpha": 1.5}"#,
        );
        let Err(Error::Config(v)) = parse_config_str(&text) else { panic!() };
        assert!(v.iter().any(|m| m.contains("alpha must lie in [0,1]")), "{v:?}");
    }

    #[test]
    fn phase_form_with_tau_one_rejected() {
        let text = MINIMAL.replace(r#""tau": 0"#, r#""tau": 1"#);
        let Err(Error::Config(v)) = parse_config_str(&text) else { panic!() };
        assert!(v.iter().any(|m| m.contains("requires tau = 0")), "{v:?}");
    }

    #[test]
    fn all_violations_reported() {
        let text = MINIMAL
            .replace(r#""p": 2.0"#, r#""p": 0.5"#)
            .replace(r#""epsilon": 0.5"#, r#""epsilon": -1.0"#)
            .replace(r#""dt": 0.01"#, r#""dt": -0.01"#);
        let Err(Error::Config(v)) = parse_config_str(&text) else { panic!() };
        assert!(v.len() >= 3, "{v:?}");
    }

    #[test]
    fn unknown_key_named_with_path() {
        let text = MINIMAL.replace(r#""epsilon": 0.5"#, r#""epsilon": 0.5, "colour": 1"#);
        let Err(Error::Config(v)) = parse_config_str(&text) else { panic!() };
        assert!(v[0].contains("initial") && v[0].contains("colour"), "{v:?}");
    }

    #[test]
    fn domain_must_match_geometry() {
        let text = MINIMAL.replace(r#""coefficients""#, r#""domain": {"kind": "half-line", "N": 1}, "coefficients""#);
        let Err(Error::Config(v)) = parse_config_str(&text) else { panic!() };
        assert!(v[0].contains("does not match"), "{v:?}");
        let ok = MINIMAL.replace(r#""coefficients""#, r#""domain": {"kind": "full-line", "N": 1}, "coefficients""#);
        parse_config_str(&ok).unwrap();
    }

    #[test]
    fn round_trip() {
        let mut c = parse_config_str(MINIMAL).unwrap();
        c.epsilons = vec![0.1, 0.2, 0.3, 0.4, 0.7];
        c.trace = Some(TraceSpec::default());
        c.controls.snapshot_dt = Some(0.1 / 3.0);
        c.initial.epsilon = 0.1 + 0.2;
        let back = parse_config_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
