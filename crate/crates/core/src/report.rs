//! Residual bookkeeping and serialization shared by every verification
//! suite.
//!
//! A report is a flat list of rows, each naming a check, the identity it
//! verifies, the chart point it was evaluated at, and the residual against
//! its tolerance.  Rows are kept in a canonical order (check id, then
//! insertion order within a check) so that serialization is byte
//! deterministic and golden-file comparisons are meaningful.  Rows whose
//! tolerance is infinite are descriptive: they record a measured value
//! without asserting anything about it.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub check_id: String,
    pub anchor: String,
    pub point: Vec<f64>,
    #[serde(with = "float_repr")]
    pub residual: f64,
    #[serde(with = "float_repr")]
    pub tolerance: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(
        check_id: impl Into<String>,
        anchor: impl Into<String>,
        point: &[f64],
        residual: f64,
        tolerance: f64,
    ) -> ReportRow {
        ReportRow {
            check_id: check_id.into(),
            anchor: anchor.into(),
            point: point.to_vec(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(with = "float_map_repr")]
    pub max_residual: BTreeMap<String, f64>,
    pub overall_pass: bool,
}

/// JSON has no literal for non-finite floats, and the default behavior of
/// writing them as `null` loses the value on the way back in.  Descriptive
/// rows carry an infinite tolerance by design, so non-finite values are
/// written as strings (`"inf"`, `"-inf"`, `"NaN"`) and parsed back through
/// the standard float parser.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FloatRepr {
    Num(f64),
    Text(String),
}

impl FloatRepr {
    fn pack(v: f64) -> FloatRepr {
        if v.is_finite() {
            FloatRepr::Num(v)
        } else {
            FloatRepr::Text(format!("{v}"))
        }
    }

    fn unpack<E: serde::de::Error>(self) -> Result<f64, E> {
        match self {
            FloatRepr::Num(v) => Ok(v),
            FloatRepr::Text(s) => s
                .parse::<f64>()
                .map_err(|e| E::custom(format!("bad float `{s}`: {e}"))),
        }
    }
}

mod float_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::FloatRepr::pack(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        super::FloatRepr::deserialize(d)?.unpack()
    }
}

mod float_map_repr {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<String, f64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let proxy: BTreeMap<&String, super::FloatRepr> =
            map.iter().map(|(k, v)| (k, super::FloatRepr::pack(*v))).collect();
        proxy.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, f64>, D::Error> {
        let proxy = BTreeMap::<String, super::FloatRepr>::deserialize(d)?;
        proxy.into_iter().map(|(k, v)| Ok((k, v.unpack()?))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("duplicate row for check `{check_id}` at point {point:?}")]
    Duplicate { check_id: String, point: Vec<f64> },
    #[error("malformed report csv at line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("malformed report json: {0}")]
    Json(String),
}

fn point_key(point: &[f64]) -> Vec<u64> {
    point.iter().map(|v| v.to_bits()).collect()
}

impl VerificationReport {
    /// Canonicalize rows and compute the summary, rejecting duplicate
    /// `(check_id, point)` pairs.
    pub fn new(mut rows: Vec<ReportRow>) -> Result<VerificationReport, ReportError> {
        let mut seen: HashSet<(String, Vec<u64>)> = HashSet::new();
        for row in &rows {
            let key = (row.check_id.clone(), point_key(&row.point));
            if !seen.insert(key) {
                return Err(ReportError::Duplicate {
                    check_id: row.check_id.clone(),
                    point: row.point.clone(),
                });
            }
        }
        rows.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        let mut max_residual = BTreeMap::new();
        let mut overall_pass = true;
        for row in &rows {
            let slot = max_residual.entry(row.check_id.clone()).or_insert(0.0f64);
            *slot = slot.max(row.residual);
            overall_pass &= row.pass;
        }
        Ok(VerificationReport {
            rows,
            summary: Summary {
                max_residual,
                overall_pass,
            },
        })
    }

    pub fn empty() -> VerificationReport {
        VerificationReport::new(Vec::new()).expect("empty report cannot collide")
    }

    /// Concatenate reports into one, recomputing the summary.  Idempotent
    /// on singletons; duplicate `(check_id, point)` pairs across inputs are
    /// rejected.
    pub fn merge(
        reports: impl IntoIterator<Item = VerificationReport>,
    ) -> Result<VerificationReport, ReportError> {
        let mut rows = Vec::new();
        for r in reports {
            rows.extend(r.rows);
        }
        VerificationReport::new(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check_id,anchor,point,residual,tolerance,pass\n");
        for row in &self.rows {
            let point = row
                .point
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                out,
                "{},{},{},{:.16e},{:.16e},{}",
                csv_quote(&row.check_id),
                csv_quote(&row.anchor),
                point,
                row.residual,
                row.tolerance,
                row.pass
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<VerificationReport, ReportError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "check_id,anchor,point,residual,tolerance,pass")) => {}
            other => {
                return Err(ReportError::Csv {
                    line: 1,
                    reason: format!("unexpected header {:?}", other.map(|(_, l)| l)),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let fields = split_csv_line(line).map_err(|reason| ReportError::Csv {
                line: lineno,
                reason,
            })?;
            if fields.len() != 6 {
                return Err(ReportError::Csv {
                    line: lineno,
                    reason: format!("expected 6 fields, found {}", fields.len()),
                });
            }
            let parse_f64 = |s: &str, what: &str| -> Result<f64, ReportError> {
                s.parse::<f64>().map_err(|e| ReportError::Csv {
                    line: lineno,
                    reason: format!("bad {what} `{s}`: {e}"),
                })
            };
            let point = if fields[2].is_empty() {
                Vec::new()
            } else {
                fields[2]
                    .split(';')
                    .map(|s| parse_f64(s, "point coordinate"))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let pass = match fields[5].as_str() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(ReportError::Csv {
                        line: lineno,
                        reason: format!("bad pass flag `{other}`"),
                    })
                }
            };
            rows.push(ReportRow {
                check_id: fields[0].clone(),
                anchor: fields[1].clone(),
                point,
                residual: parse_f64(&fields[3], "residual")?,
                tolerance: parse_f64(&fields[4], "tolerance")?,
                pass,
            });
        }
        VerificationReport::new(rows)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<VerificationReport, ReportError> {
        let report: VerificationReport =
            serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))?;
        VerificationReport::new(report.rows)
    }
}

fn csv_quote(field: &str) -> String {
    let mut out = String::with_capacity(field.len() + 2);
    out.push('"');
    for ch in field.chars() {
        if ch == '"' {
            out.push('"');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

fn split_csv_line(line: &str) -> Result<Vec<String>, String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    loop {
        match chars.peek() {
            Some('"') => {
                chars.next();
                loop {
                    match chars.next() {
                        Some('"') => {
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                cur.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => cur.push(c),
                        None => return Err("unterminated quoted field".into()),
                    }
                }
            }
            _ => {
                while let Some(&c) = chars.peek() {
                    if c == ',' {
                        break;
                    }
                    cur.push(c);
                    chars.next();
                }
            }
        }
        fields.push(std::mem::take(&mut cur));
        match chars.next() {
            Some(',') => continue,
            None => break,
            Some(c) => return Err(format!("unexpected `{c}` after field")),
        }
    }
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, point: &[f64], residual: f64, tol: f64) -> ReportRow {
        ReportRow::new(id, format!("anchor for {id}"), point, residual, tol)
    }

    #[test]
    fn merge_of_empty_list_is_an_empty_passing_report() {
        let merged = VerificationReport::merge(Vec::new()).unwrap();
        assert!(merged.rows.is_empty());
        assert!(merged.summary.overall_pass);
        assert_eq!(merged.to_csv(), "check_id,anchor,point,residual,tolerance,pass\n");
    }

    #[test]
    fn merge_of_a_singleton_is_identity() {
        let report =
            VerificationReport::new(vec![row("a/one", &[0.5, 1.0], 1e-12, 1e-8)]).unwrap();
        let merged = VerificationReport::merge([report.clone()]).unwrap();
        assert_eq!(merged, report);
    }

    #[test]
    fn merge_preserves_both_verdicts_and_fails_overall() {
        let good = VerificationReport::new(vec![row("a/one", &[0.0], 1e-12, 1e-8)]).unwrap();
        let bad = VerificationReport::new(vec![row("b/two", &[0.0], 1.0, 1e-8)]).unwrap();
        let merged = VerificationReport::merge([good, bad]).unwrap();
        assert_eq!(merged.rows.len(), 2);
        assert!(!merged.summary.overall_pass);
        assert!(merged.rows.iter().any(|r| r.pass));
        assert!(merged.rows.iter().any(|r| !r.pass));
    }

    #[test]
    fn duplicate_check_and_point_is_rejected() {
        let a = VerificationReport::new(vec![row("a/one", &[0.25], 1e-12, 1e-8)]).unwrap();
        let b = VerificationReport::new(vec![row("a/one", &[0.25], 2e-12, 1e-8)]).unwrap();
        let err = VerificationReport::merge([a, b]).unwrap_err();
        assert!(matches!(err, ReportError::Duplicate { .. }));
    }

    #[test]
    fn csv_round_trips_awkward_values_exactly() {
        let rows = vec![
            ReportRow::new(
                "suite/check",
                "g(A X, Y) = g(X, \"A\" Y), with commas",
                &[0.1, -2.5e-17, 3.0],
                1.2345678901234567e-9,
                1e-8,
            ),
            ReportRow::new("suite/other", "plain", &[], 0.0, 0.0),
        ];
        let report = VerificationReport::new(rows).unwrap();
        let csv = report.to_csv();
        let back = VerificationReport::from_csv(&csv).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_csv(), csv);
    }

    #[test]
    fn json_round_trips_and_rows_sort_by_check_id() {
        let report = VerificationReport::new(vec![
            row("z/last", &[1.0], 1e-9, 1e-8),
            row("a/first", &[2.0], 1e-11, 1e-8),
            row("a/first", &[3.0], 5e-11, 1e-8),
            row("m/descriptive", &[4.0], 0.5, f64::INFINITY),
        ])
        .unwrap();
        assert_eq!(report.rows[0].check_id, "a/first");
        assert_eq!(report.rows[1].point, vec![3.0]);
        let back = VerificationReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back, report);
        assert!(back.rows.iter().any(|r| r.tolerance == f64::INFINITY));
        assert_eq!(report.summary.max_residual["a/first"], 5e-11);
    }

    #[test]
    fn descriptive_rows_with_infinite_tolerance_always_pass() {
        let report =
            VerificationReport::new(vec![row("desc/only", &[0.0], 123.0, f64::INFINITY)])
                .unwrap();
        assert!(report.summary.overall_pass);
    }
}
