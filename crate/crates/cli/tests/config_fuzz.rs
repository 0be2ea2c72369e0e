//! The config loader under fuzzed input: arbitrary JSON documents and
//! single-field mutations of a valid config must produce located errors,
//! never panics.

use halflight_cli::config::{self, ConfigError};
use proptest::prelude::*;
use serde_json::{json, Value};

fn json_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::from),
        any::<i32>().prop_map(Value::from),
        (-1.0e6f64..1.0e6).prop_map(Value::from),
        "[ -~]{0,16}".prop_map(Value::from),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 0..4).prop_map(Value::from),
            proptest::collection::btree_map("[a-z_]{1,8}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

fn valid_base() -> Value {
    json!({
        "ambient": { "dim": 5, "signature": [-1, 1, 1, 1, 1] },
        "params": ["p1", "p2", "p3"],
        "immersion": ["p1", "p1", "p2", "p3", "0"],
        "domain": [
            { "lo": -1.0, "hi": 1.0 },
            { "lo": -1.0, "hi": 1.0 },
            { "lo": -1.0, "hi": 1.0 }
        ],
        "suites": ["structure"]
    })
}

fn load_text(text: &str) -> Result<config::Config, ConfigError> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, text).unwrap();
    config::load(&path)
}

fn pointer_is_sane(err: &ConfigError) {
    match err {
        ConfigError::Schema { pointer, .. } | ConfigError::Invalid { pointer, .. } => {
            assert!(
                pointer.is_empty() || pointer.starts_with('/'),
                "pointer `{pointer}` is not a JSON pointer"
            );
        }
        ConfigError::Io { .. } => {}
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_documents_never_panic(v in json_value()) {
        if let Err(e) = load_text(&serde_json::to_string(&v).unwrap()) {
            pointer_is_sane(&e);
        }
    }

    #[test]
    fn arbitrary_text_never_panics(text in "[ -~]{0,180}") {
        if let Err(e) = load_text(&text) {
            pointer_is_sane(&e);
        }
    }

    #[test]
    fn single_field_mutations_fail_with_a_located_error_or_resolve(
        key in prop_oneof![
            Just("ambient"), Just("params"), Just("immersion"), Just("domain"),
            Just("screen_override"), Just("L"), Just("c_curvature"),
            Just("suites"), Just("samples"), Just("tolerances"),
        ],
        v in json_value(),
    ) {
        let mut base = valid_base();
        base[key] = v;
        if let Err(e) = load_text(&serde_json::to_string(&base).unwrap()) {
            pointer_is_sane(&e);
        }
    }
}
