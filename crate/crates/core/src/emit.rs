//! CSV, JSON and `.dat` output. Floats use Rust's shortest round-trip
//! formatting, lines end in LF and every CSV starts with its header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{regime_verdict, SweepResult, TraceAnalysis, Verdict};
use crate::lifespan::{FunctionalTrace, Regime};
use crate::pde::{BlowupRecord, Snapshots, THRESHOLDS};

pub const RECORD_HEADER: [&str; 14] = [
    "epsilon",
    "p",
    "tau",
    "alpha",
    "zeta",
    "status",
    "T_at_1e3",
    "T_at_1e4",
    "T_at_1e5",
    "T_at_1e6",
    "T_extrapolated",
    "dt_final",
    "h",
    "steps",
];

pub const TRACE_HEADER: [&str; 3] = ["R", "y", "m"];

pub const SNAPSHOT_HEADER: [&str; 3] = ["t", "node", "abs_u"];

pub const CRITERION_HEADER: [&str; 3] = ["R", "required_C0", "holds"];

const _: () = assert!(THRESHOLDS.len() == 4);

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record_row(r: &BlowupRecord) -> Vec<String> {
    let mut row = vec![
        r.epsilon.to_string(),
        r.p.to_string(),
        r.tau.to_string(),
        r.alpha.to_string(),
        r.zeta.to_string(),
        r.status.name().to_string(),
    ];
    row.extend(r.t_at.iter().map(|t| opt(*t)));
    row.push(opt(r.t_extrapolated));
    row.push(r.dt_final.to_string());
    row.push(r.h.to_string());
    row.push(r.steps.to_string());
    row
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn records_csv(rows: &[BlowupRecord]) -> Vec<u8> {
    csv_bytes(&RECORD_HEADER, rows.iter().map(record_row))
}

pub fn trace_csv(tr: &FunctionalTrace) -> Vec<u8> {
    csv_bytes(
        &TRACE_HEADER,
        (0..tr.radii.len()).map(|i| [tr.radii[i].to_string(), tr.y[i].to_string(), tr.m[i].to_string()]),
    )
}

/// Long format, one row per node and snapshot.
pub fn snapshots_csv(s: &Snapshots) -> Vec<u8> {
    csv_bytes(
        &SNAPSHOT_HEADER,
        s.times
            .iter()
            .zip(&s.moduli)
            .flat_map(|(t, u)| u.iter().enumerate().map(move |(i, v)| [t.to_string(), i.to_string(), v.to_string()])),
    )
}

pub fn criterion_csv(a: &TraceAnalysis) -> Vec<u8> {
    let r = &a.report;
    csv_bytes(
        &CRITERION_HEADER,
        (0..r.radii.len()).map(|i| [r.radii[i].to_string(), r.required_c0[i].to_string(), r.verdicts[i].to_string()]),
    )
}

/// `log eps` and `log T` of the blowup rows, for gnuplot.
pub fn sweep_dat(sr: &SweepResult) -> Vec<u8> {
    let mut out = String::from("# log_epsilon log_T\n");
    for (e, t) in sr.blowup_points() {
        out.push_str(&format!("{} {}\n", e.ln(), t.ln()));
    }
    out.into_bytes()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub id: String,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2_power: Option<f64>,
    pub exp_slope: Option<f64>,
    pub r2_exp: Option<f64>,
    pub predicted_form: Option<&'static str>,
    pub predicted_exponent: Option<f64>,
    pub verdict: &'static str,
    pub fit_status: Option<String>,
    pub seed: u64,
}

impl SweepSummary {
    /// Without a predicted regime the verdict reads "not assessed".
    pub fn new(sr: &SweepResult, regime: Option<&Regime>, tolerance: f64, seed: u64) -> Self {
        let verdict = match regime {
            Some(r) => regime_verdict(sr, r, tolerance).name(),
            None if sr.power.is_none() => Verdict::InsufficientData.name(),
            None => "not assessed",
        };
        Self {
            id: sr.id.clone(),
            slope: sr.power.map(|f| f.slope),
            intercept: sr.power.map(|f| f.intercept),
            r2_power: sr.power.map(|f| f.r2),
            exp_slope: sr.exponential.map(|f| f.slope),
            r2_exp: sr.exponential.map(|f| f.r2),
            predicted_form: regime.map(|r| r.form.name()),
            predicted_exponent: regime.and_then(|r| r.exponent),
            verdict: if sr.rows.iter().all(|r| r.status != crate::pde::RunStatus::Blowup) {
                Verdict::NoBlowupObserved.name()
            } else {
                verdict
            },
            fit_status: sr.fit_status.clone(),
            seed,
        }
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("summaries serialize");
    v.push(b'\n');
    v
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(bytes).map_err(io)?;
    w.flush().map_err(io)
}

/// File names used for a run or sweep `id` under `dir`.
pub fn output_path(dir: &Path, id: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{id}{suffix}"))
}

/// Reads a trace CSV back.
pub fn read_trace_csv(path: &Path) -> Result<FunctionalTrace> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(Error::InconsistentTrace(format!(
            "{}: expected columns R,y,m, found {}",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut tr = FunctionalTrace::default();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::InconsistentTrace(format!("{}: bad number {:?}: {e}", path.display(), &rec[i])))
        };
        tr.radii.push(num(0)?);
        tr.y.push(num(1)?);
        tr.m.push(num(2)?);
    }
    tr.validate()?;
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::assemble;
    use crate::pde::RunStatus;

    fn record(eps: f64) -> BlowupRecord {
        BlowupRecord {
            epsilon: eps,
            p: 2.0,
            tau: 0,
            alpha: 0.0,
            zeta: 0.0,
            status: RunStatus::Blowup,
            t_at: [Some(0.1 + 0.2), Some(1.0 / 3.0), None, Some(2.5)],
            t_extrapolated: Some(eps.powi(-2)),
            dt_final: 1e-7,
            h: 0.02,
            steps: 1234,
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let sr = assemble("e", Vec::new(), 2.0);
        let text = String::from_utf8(records_csv(&sr.rows)).unwrap();
        assert_eq!(text, RECORD_HEADER.join(",") + "\n");
    }

    #[test]
    fn three_radius_trace_has_four_lines() {
        let tr = FunctionalTrace { radii: vec![1.0, 2.0, 3.0], y: vec![0.0, 0.5, 1.0], m: vec![0.1, 0.6, 1.1] };
        let text = String::from_utf8(trace_csv(&tr)).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn floats_round_trip_shortest() {
        let text = String::from_utf8(records_csv(&[record(0.7)])).unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[6], "0.30000000000000004");
        assert_eq!(row[7].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(row[8], "");
        assert_eq!(row[5], "blowup");
        assert_eq!(row[11], "0.0000001");
    }

    #[test]
    fn reemit_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<_> = [0.3, 0.5, 0.7].map(record).to_vec();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("sub/b.csv");
        write_file(&a, &records_csv(&rows)).unwrap();
        write_file(&b, &records_csv(&rows)).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tr =
            FunctionalTrace { radii: vec![1.0, 1.5, 2.0 / 3.0 + 2.0], y: vec![0.0, 0.1, 0.7], m: vec![0.2, 0.3, 0.9] };
        let path = dir.path().join("t.csv");
        write_file(&path, &trace_csv(&tr)).unwrap();
        assert_eq!(read_trace_csv(&path).unwrap(), tr);
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let err = write_file(&blocker.join("x.csv"), b"").unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }

    #[test]
    fn dat_has_logs() {
        let rows: Vec<_> = [0.3, 0.4, 0.5, 0.7, 1.0].map(record).to_vec();
        let sr = assemble("d", rows, 2.0);
        let text = String::from_utf8(sweep_dat(&sr)).unwrap();
        assert_eq!(text.lines().count(), 6);
        let last: Vec<f64> = text.lines().last().unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
        assert_eq!(last, vec![0.0, 0.0]);
        let s = SweepSummary::new(&sr, None, 0.15, 7);
        assert!((s.slope.unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(s.seed, 7);
    }
}
