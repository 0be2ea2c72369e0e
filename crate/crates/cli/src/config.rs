//! JSON configuration: schema, validation, and resolution into core types.
//!
//! Every error names the offending location as a JSON pointer, so a bad
//! config can be fixed without reading this source.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Deserialize;
use thiserror::Error;

use halflight_core::expr::{self, Expr};
use halflight_core::foliation::NormalGauge;
use halflight_core::halflightlike::Immersion;
use halflight_core::sample::{self, Domain};
use halflight_core::suite::Tolerances;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub ambient: AmbientSpec,
    pub params: Vec<String>,
    pub immersion: Vec<String>,
    pub domain: Vec<DomainSpec>,
    #[serde(default)]
    pub screen_override: Option<Vec<Vec<String>>>,
    #[serde(default, rename = "L")]
    pub gauge: GaugeSpec,
    #[serde(default = "zero_rational")]
    pub c_curvature: String,
    #[serde(default = "all_suites")]
    pub suites: Vec<String>,
    #[serde(default)]
    pub samples: SamplesSpec,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub dim: usize,
    pub signature: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub margin: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    #[serde(default = "one")]
    pub a: String,
    #[serde(default = "half")]
    pub b: String,
    #[serde(default = "zero")]
    pub c: String,
}

impl Default for GaugeSpec {
    fn default() -> GaugeSpec {
        GaugeSpec {
            a: one(),
            b: half(),
            c: zero(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesSpec {
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for SamplesSpec {
    fn default() -> SamplesSpec {
        SamplesSpec {
            mode: default_mode(),
            count: default_count(),
            seed: None,
        }
    }
}

fn one() -> String {
    "1".into()
}
fn half() -> String {
    "0.5".into()
}
fn zero() -> String {
    "0".into()
}
fn zero_rational() -> String {
    "0".into()
}
fn default_mode() -> String {
    "default".into()
}
fn default_count() -> usize {
    50
}
fn all_suites() -> Vec<String> {
    SUITE_NAMES.iter().map(|s| s.to_string()).collect()
}

pub const SUITE_NAMES: [&str; 8] = [
    "structure",
    "integrability",
    "newton",
    "foliation",
    "lemma3",
    "theorems12",
    "spaceform",
    "umbilic",
];

/// Fallback seed for the default sample plan when the config leaves it
/// unset; explicit `random` plans must name their own.
pub const DEFAULT_SEED: u64 = 2026;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Structure,
    Integrability,
    Newton,
    Foliation,
    Lemma3,
    Theorems12,
    Spaceform,
    Umbilic,
}

impl SuiteKind {
    fn parse(name: &str) -> Option<SuiteKind> {
        match name {
            "structure" => Some(SuiteKind::Structure),
            "integrability" => Some(SuiteKind::Integrability),
            "newton" => Some(SuiteKind::Newton),
            "foliation" => Some(SuiteKind::Foliation),
            "lemma3" => Some(SuiteKind::Lemma3),
            "theorems12" => Some(SuiteKind::Theorems12),
            "spaceform" => Some(SuiteKind::Spaceform),
            "umbilic" => Some(SuiteKind::Umbilic),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub struct Config {
    pub immersion: Immersion,
    pub domains: Vec<Domain>,
    pub gauge: NormalGauge,
    pub c_exact: BigRational,
    pub c_value: f64,
    pub suites: Vec<SuiteKind>,
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("config error at {pointer}: {message}")]
    Invalid { pointer: String, message: String },
}

fn invalid(pointer: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn path_to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => {
                let _ = write!(out, "/{index}");
            }
            Segment::Map { key } => {
                let _ = write!(out, "/{key}");
            }
            Segment::Enum { variant } => {
                let _ = write!(out, "/{variant}");
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let file: ConfigFile =
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
            pointer: path_to_pointer(e.path()),
            message: e.inner().to_string(),
        })?;
    resolve(file)
}

fn parse_expr(src: &str, pointer: String) -> Result<Expr, ConfigError> {
    expr::parse(src).map_err(|e| invalid(pointer, e.to_string()))
}

pub fn resolve(file: ConfigFile) -> Result<Config, ConfigError> {
    let dim = file.ambient.dim;
    if file.ambient.signature.len() != dim {
        return Err(invalid(
            "/ambient/signature",
            format!(
                "signature lists {} signs for ambient dimension {dim}",
                file.ambient.signature.len()
            ),
        ));
    }
    for (i, s) in file.ambient.signature.iter().enumerate() {
        if *s != 1.0 && *s != -1.0 {
            return Err(invalid(
                format!("/ambient/signature/{i}"),
                format!("signature entries must be 1 or -1, found {s}"),
            ));
        }
    }
    if file.params.len() < 2 {
        return Err(invalid("/params", "need at least two chart parameters"));
    }
    if file.params.len() + 2 != dim {
        return Err(invalid(
            "/params",
            format!(
                "a half-lightlike chart needs ambient dim = params + 2, got {} params for dim {dim}",
                file.params.len()
            ),
        ));
    }
    if file.immersion.len() != dim {
        return Err(invalid(
            "/immersion",
            format!(
                "{} component expressions for ambient dimension {dim}",
                file.immersion.len()
            ),
        ));
    }
    let components = file
        .immersion
        .iter()
        .enumerate()
        .map(|(i, src)| parse_expr(src, format!("/immersion/{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let screen_override = match &file.screen_override {
        None => None,
        Some(vectors) => {
            let n = file.params.len() - 1;
            if vectors.len() != n {
                return Err(invalid(
                    "/screen_override",
                    format!("expected {n} screen vectors, found {}", vectors.len()),
                ));
            }
            let mut parsed = Vec::with_capacity(n);
            for (i, vector) in vectors.iter().enumerate() {
                if vector.len() != dim {
                    return Err(invalid(
                        format!("/screen_override/{i}"),
                        format!("expected {dim} components, found {}", vector.len()),
                    ));
                }
                parsed.push(
                    vector
                        .iter()
                        .enumerate()
                        .map(|(j, src)| parse_expr(src, format!("/screen_override/{i}/{j}")))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            Some(parsed)
        }
    };
    if file.domain.len() != file.params.len() {
        return Err(invalid(
            "/domain",
            format!(
                "{} domain entries for {} parameters",
                file.domain.len(),
                file.params.len()
            ),
        ));
    }
    let mut domains = Vec::with_capacity(file.domain.len());
    for (i, d) in file.domain.iter().enumerate() {
        if !(d.lo.is_finite() && d.hi.is_finite() && d.lo < d.hi) {
            return Err(invalid(
                format!("/domain/{i}"),
                format!("domain must be finite with lo < hi, got [{}, {}]", d.lo, d.hi),
            ));
        }
        let span = d.hi - d.lo;
        let margin = d.margin.unwrap_or(0.05 * span);
        if !(margin >= 0.0 && 2.0 * margin < span) {
            return Err(invalid(
                format!("/domain/{i}/margin"),
                format!("margin {margin} leaves no interior in [{}, {}]", d.lo, d.hi),
            ));
        }
        domains.push(Domain::new(d.lo, d.hi, margin));
    }
    parse_expr(&file.gauge.a, "/L/a".into())?;
    parse_expr(&file.gauge.b, "/L/b".into())?;
    parse_expr(&file.gauge.c, "/L/c".into())?;
    let gauge = NormalGauge::parse(&file.gauge.a, &file.gauge.b, &file.gauge.c)
        .map_err(|e| invalid("/L", e.to_string()))?;
    let c_exact = BigRational::from_str(file.c_curvature.trim())
        .map_err(|e| invalid("/c_curvature", format!("not a rational: {e}")))?;
    let c_value = c_exact.to_f64().ok_or_else(|| {
        invalid("/c_curvature", "rational does not fit in a double")
    })?;
    let mut suites = Vec::new();
    for (i, name) in file.suites.iter().enumerate() {
        let kind = SuiteKind::parse(name).ok_or_else(|| {
            invalid(
                format!("/suites/{i}"),
                format!("unknown suite `{name}`; expected one of {SUITE_NAMES:?}"),
            )
        })?;
        if suites.contains(&kind) {
            return Err(invalid(
                format!("/suites/{i}"),
                format!("suite `{name}` listed twice"),
            ));
        }
        suites.push(kind);
    }
    let seed = match (file.samples.mode.as_str(), file.samples.seed) {
        ("random", None) => {
            return Err(invalid(
                "/samples/seed",
                "random sampling requires an explicit seed",
            ))
        }
        (_, seed) => seed.unwrap_or(DEFAULT_SEED),
    };
    let points = match file.samples.mode.as_str() {
        "default" => sample::default_plan(&domains, file.samples.count, seed),
        "random" => sample::random_points(&domains, file.samples.count, seed),
        "grid" => {
            if file.samples.count < 2 {
                return Err(invalid(
                    "/samples/count",
                    "grid sampling needs at least two points per axis",
                ));
            }
            sample::axis_grid(&domains, file.samples.count)
        }
        other => {
            return Err(invalid(
                "/samples/mode",
                format!("unknown mode `{other}`; expected default, grid, or random"),
            ))
        }
    };
    let points = dedupe(points);
    let mut tolerances = Tolerances::default();
    for (key, value) in &file.tolerances {
        if !(value.is_finite() && *value > 0.0) {
            return Err(invalid(
                format!("/tolerances/{key}"),
                format!("tolerance must be a positive finite number, got {value}"),
            ));
        }
        match key.as_str() {
            "structure" => {
                tolerances.structure = *value;
                tolerances.frame = *value;
            }
            "integrability" => tolerances.integrability = *value,
            "newton" => tolerances.newton = *value,
            "foliation" => {
                tolerances.lemma1 = *value;
                tolerances.lemma2 = *value;
            }
            "lemma3" => tolerances.lemma3 = *value,
            "theorems12" => tolerances.theorems = *value,
            "umbilic" => {
                tolerances.umbilic_fit = *value;
                tolerances.ingredients = *value;
            }
            _ => {
                return Err(invalid(
                    format!("/tolerances/{key}"),
                    format!("unknown suite `{key}`; expected one of {SUITE_NAMES:?}"),
                ))
            }
        }
    }
    let immersion = Immersion {
        params: file.params,
        components,
        eps: file.ambient.signature,
        screen_override,
    };
    Ok(Config {
        immersion,
        domains,
        gauge,
        c_exact,
        c_value,
        suites,
        points,
        seed,
        tolerances,
    })
}

fn dedupe(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(immersion: &[&str]) -> ConfigFile {
        ConfigFile {
            ambient: AmbientSpec {
                dim: 5,
                signature: vec![-1.0, 1.0, 1.0, 1.0, 1.0],
            },
            params: vec!["p1".into(), "p2".into(), "p3".into()],
            immersion: immersion.iter().map(|s| s.to_string()).collect(),
            domain: vec![
                DomainSpec { lo: -1.0, hi: 1.0, margin: None },
                DomainSpec { lo: 0.0, hi: 6.0, margin: None },
                DomainSpec { lo: 0.1, hi: 1.5, margin: None },
            ],
            screen_override: None,
            gauge: GaugeSpec::default(),
            c_curvature: "0".into(),
            suites: vec!["structure".into()],
            samples: SamplesSpec::default(),
            tolerances: BTreeMap::new(),
        }
    }

    #[test]
    fn resolves_a_minimal_config_with_default_plan() {
        let cfg = resolve(minimal(&[
            "p1",
            "sin(p2) * sin(p3)",
            "p1",
            "cos(p2) * sin(p3)",
            "cos(p3)",
        ]))
        .unwrap();
        let len = cfg.points.len();
        assert!(
            (81..=83).contains(&len),
            "50 random + 33 grid points, minus exact axis-center collisions, got {len}"
        );
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.suites, vec![SuiteKind::Structure]);
    }

    #[test]
    fn malformed_expression_is_located_by_pointer_and_byte() {
        let err = resolve(minimal(&["p1", "sin(", "p1", "0", "0"])).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("/immersion/1"), "{text}");
        assert!(text.contains("byte"), "{text}");
    }

    #[test]
    fn random_mode_without_seed_is_rejected() {
        let mut file = minimal(&["p1", "p1", "p2", "p3", "0"]);
        file.samples = SamplesSpec {
            mode: "random".into(),
            count: 10,
            seed: None,
        };
        let err = resolve(file).unwrap_err();
        assert!(err.to_string().contains("/samples/seed"));
    }

    #[test]
    fn schema_errors_carry_json_pointers() {
        let text = r#"{"ambient": {"dim": 5, "signature": [-1, 1, 1, 1, "x"]}}"#;
        let de = &mut serde_json::Deserializer::from_str(text);
        let err = serde_path_to_error::deserialize::<_, ConfigFile>(de).unwrap_err();
        assert_eq!(path_to_pointer(err.path()), "/ambient/signature/4");
    }
}
