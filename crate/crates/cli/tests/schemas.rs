mod common;

use common::{read_json, run_ok};
use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let path = format!("{}/schema/{name}.schema.json", env!("CARGO_MANIFEST_DIR"));
    jsonschema::validator_for(&read_json(path)).unwrap()
}

fn assert_valid(schema_name: &str, doc: &Value) {
    let v = schema(schema_name);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:#?}");
}

#[test]
fn every_output_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["--shots", "500", "scenario", "all"]);
    for (sub, file, name) in [
        ("design", "design.json", "design"),
        ("design", "run_record.json", "run_record"),
        ("fig2a", "propagate.json", "propagate"),
        ("fig2b", "propagate.json", "propagate"),
        ("transfer-table", "transfer_table.json", "transfer_table"),
        ("qpt", "qpt.json", "qpt"),
        ("bell", "bell.json", "bell"),
        ("decohere", "decohere.json", "decohere"),
        ("decohere", "run_record.json", "run_record"),
    ] {
        let doc = read_json(dir.path().join(sub).join(file));
        assert_valid(name, &doc);
        if file == "run_record.json" {
            assert_valid("config", &doc["config"]);
        }
    }
}

#[test]
fn design_summary_reports_transfer_length() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &["design"]);
    let record = read_json(dir.path().join("run_record.json"));
    let summary = record["summary"].as_array().unwrap();
    assert_eq!(summary[0]["name"], "z_pst");
    assert_eq!(summary[0]["unit"], "mm");
}

#[test]
fn config_schema_accepts_defaults_and_rejects_unknown_keys() {
    let v = schema("config");
    assert!(v.is_valid(&serde_json::to_value(pstlab_cli::config::ScenarioConfig::default()).unwrap()));
    assert!(v.is_valid(&serde_json::json!({"model": {"coupling": "full"}})));
    assert!(!v.is_valid(&serde_json::json!({"model": {"coupling": "all-pairs"}})));
    assert!(!v.is_valid(&serde_json::json!({"design": {"n_sites": 11, "extra": true}})));
    assert!(!v.is_valid(&serde_json::json!({"measurement": {"bootstrap_resamples": 10}})));
}
