//! Command implementations behind the thin argument parser.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use halflight_core::exec::Exec;
use halflight_core::forms::forms_at;
use halflight_core::report::{ReportError, VerificationReport};
use halflight_core::spaceform;
use halflight_core::suite::{self, SuiteError};
use halflight_core::error::GeomError;

use crate::config::{Config, SuiteKind};

/// How a command finished, before mapping to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CheckFail,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::CheckFail => 1,
        }
    }
}

/// Errors that map to exit code 2: the run could not produce a verdict.
#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CommandError> {
    let wrap = |source: std::io::Error| CommandError::Write {
        path: dir.join(name).display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(wrap)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| wrap(e.error))?;
    Ok(target)
}

/// Run the selected suites and write `report.csv` and `report.json` into
/// `out_dir` (write-then-rename, so a failed run never leaves a partial
/// file).
pub fn verify(
    cfg: &Config,
    out_dir: &Path,
    tol_scale: f64,
) -> Result<Outcome, CommandError> {
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        return Err(CommandError::Invalid(format!(
            "tolerance scale must be positive and finite, got {tol_scale}"
        )));
    }
    let tols = cfg.tolerances.scaled(tol_scale);
    let exec = Exec::preferred();
    let mut rows = Vec::new();
    for kind in &cfg.suites {
        match kind {
            SuiteKind::Structure => {
                rows.extend(suite::structure_suite(&cfg.immersion, &cfg.points, &tols, &exec)?)
            }
            SuiteKind::Integrability => rows.extend(suite::integrability_suite(
                &cfg.immersion,
                &cfg.points,
                &tols,
                &exec,
            )?),
            SuiteKind::Newton => rows.extend(suite::newton_suite(cfg.seed, 200, &tols)),
            SuiteKind::Foliation => rows.extend(suite::foliation_suite(
                &cfg.immersion,
                &cfg.gauge,
                &cfg.points,
                &tols,
                &exec,
            )?),
            SuiteKind::Lemma3 => rows.extend(suite::lemma3_suite(
                &cfg.immersion,
                &cfg.gauge,
                &cfg.points,
                &tols,
                &exec,
            )?),
            SuiteKind::Theorems12 => rows.extend(suite::theorems_suite(
                &cfg.immersion,
                &cfg.gauge,
                &cfg.points,
                2,
                &tols,
                &exec,
            )?),
            SuiteKind::Spaceform => rows.extend(suite::spaceform_suite()?),
            SuiteKind::Umbilic => rows.extend(suite::umbilic_suite(
                &cfg.immersion,
                &cfg.points,
                cfg.c_value,
                &tols,
                &exec,
            )?),
        }
    }
    let report = VerificationReport::new(rows)?;
    write_atomic(out_dir, "report.csv", report.to_csv().as_bytes())?;
    write_atomic(out_dir, "report.json", report.to_json().as_bytes())?;
    let mut checks: Vec<_> = report.summary.max_residual.iter().collect();
    checks.sort_by(|a, b| a.0.cmp(b.0));
    for (check, max) in checks {
        let failing = report
            .rows
            .iter()
            .any(|r| &r.check_id == check && !r.pass);
        println!(
            "{} {check}: max residual {max:.3e}",
            if failing { "FAIL" } else { "pass" }
        );
    }
    if report.summary.overall_pass {
        println!("verify: {} rows, overall PASS", report.rows.len());
        Ok(Outcome::Pass)
    } else {
        println!("verify: {} rows, overall FAIL", report.rows.len());
        Ok(Outcome::CheckFail)
    }
}

#[derive(Serialize)]
struct AnalyzeEntry {
    point: Vec<f64>,
    radical: Vec<f64>,
    screen: Vec<Vec<f64>>,
    screen_signs: Vec<f64>,
    lightlike_transversal: Vec<f64>,
    screen_transversal: Vec<f64>,
    screen_transversal_sign: f64,
    frame_gram_worst: f64,
    tau: Vec<f64>,
    rho: Vec<f64>,
    phi: Vec<f64>,
    transversal_shape: Vec<Vec<f64>>,
}

fn values(field: &[halflight_core::jets::Jet3]) -> Vec<f64> {
    field.iter().map(|j| j.value()).collect()
}

/// Dump the computed frame and connection scalars at every sample point to
/// `analysis.json`.
pub fn analyze(cfg: &Config, out_dir: &Path) -> Result<Outcome, CommandError> {
    let exec = Exec::preferred();
    let nested: Vec<Result<AnalyzeEntry, SuiteError>> = exec.map(&cfg.points, |p| {
        let frame = cfg.immersion.frame_at(p).map_err(|source| SuiteError::AtPoint {
            point: p.to_vec(),
            source,
        })?;
        let forms = forms_at(&frame).map_err(|source| SuiteError::AtPoint {
            point: p.to_vec(),
            source,
        })?;
        let n = frame.n;
        Ok(AnalyzeEntry {
            point: p.to_vec(),
            radical: values(&frame.e),
            screen: frame.screen.iter().map(|z| values(z)).collect(),
            screen_signs: frame.screen_signs.clone(),
            lightlike_transversal: values(&frame.nvec),
            screen_transversal: values(&frame.w),
            screen_transversal_sign: frame.w_sign,
            frame_gram_worst: frame
                .gram_residuals()
                .into_iter()
                .fold(0.0f64, |m, (_, v)| m.max(v)),
            tau: forms.tau.iter().map(|j| j.value()).collect(),
            rho: forms.rho.iter().map(|j| j.value()).collect(),
            phi: forms.phi.iter().map(|j| j.value()).collect(),
            transversal_shape: (0..=n)
                .map(|i| (0..=n).map(|x| forms.a_n.at(i, x).value()).collect())
                .collect(),
        })
    });
    let mut entries = Vec::with_capacity(nested.len());
    for e in nested {
        entries.push(e?);
    }
    let mut body = serde_json::to_string_pretty(&entries).expect("analysis serializes");
    body.push('\n');
    write_atomic(out_dir, "analysis.json", body.as_bytes())?;
    println!("analyze: {} points written", entries.len());
    Ok(Outcome::Pass)
}

/// Print the space-form integral table as CSV: one row per order with the
/// exact rational and its decimal rendering.
pub fn recurrence(n: usize, c: &str, volume: &str) -> Result<Outcome, CommandError> {
    let c = BigRational::from_str(c.trim())
        .map_err(|e| CommandError::Invalid(format!("curvature `{c}` is not a rational: {e}")))?;
    let volume = BigRational::from_str(volume.trim()).map_err(|e| {
        CommandError::Invalid(format!("volume `{volume}` is not a rational: {e}"))
    })?;
    let table = spaceform::recurrence_table(n, &c, &volume)?;
    let mut out = String::from("r,exact,decimal\n");
    for (r, entry) in table.entries.iter().enumerate() {
        let decimal = entry.to_f64().unwrap_or(f64::NAN);
        out.push_str(&format!("{r},{entry},{decimal:.16e}\n"));
    }
    print!("{out}");
    Ok(Outcome::Pass)
}

/// Merge previously written JSON reports and print the combined CSV;
/// duplicate `(check_id, point)` pairs across inputs are an error.
pub fn report_merge(inputs: &[PathBuf], out_dir: Option<&Path>) -> Result<Outcome, CommandError> {
    let mut reports = Vec::with_capacity(inputs.len());
    for path in inputs {
        let text = fs::read_to_string(path).map_err(|source| CommandError::Read {
            path: path.display().to_string(),
            source,
        })?;
        reports.push(VerificationReport::from_json(&text)?);
    }
    let merged = VerificationReport::merge(reports)?;
    print!("{}", merged.to_csv());
    if let Some(dir) = out_dir {
        write_atomic(dir, "merged.csv", merged.to_csv().as_bytes())?;
        write_atomic(dir, "merged.json", merged.to_json().as_bytes())?;
    }
    Ok(if merged.summary.overall_pass {
        Outcome::Pass
    } else {
        Outcome::CheckFail
    })
}
