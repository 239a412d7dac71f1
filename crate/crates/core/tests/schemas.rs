use serde_json::Value;
use symop_core::det_eqs::generate_det_system;
use symop_core::report::{emit_detsystem, DetFormat, Report, Summary, SCHEMA_VERSION};

fn schema(name: &str) -> Value {
    let path = format!("{}/../../schemas/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn keys_conform(value: &Value, schema: &Value) {
    let obj = value.as_object().unwrap();
    let props = schema["properties"].as_object().unwrap();
    for req in schema["required"].as_array().unwrap() {
        assert!(obj.contains_key(req.as_str().unwrap()), "missing {req}");
    }
    if schema["additionalProperties"] == Value::Bool(false) {
        for k in obj.keys() {
            assert!(props.contains_key(k), "unexpected key {k}");
        }
    }
}

#[test]
fn report_matches_schema() {
    let s = schema("report.v1.schema.json");
    assert_eq!(s["properties"]["schema_version"]["const"], SCHEMA_VERSION);
    let r = Report::new("test", &(), &[1], Summary::from_checks([("x", true)]))
        .unwrap()
        .with_timing(std::time::Duration::from_millis(3));
    let v: Value = serde_json::from_str(&r.to_json()).unwrap();
    keys_conform(&v, &s);
    keys_conform(&v["conventions"], &s["properties"]["conventions"]);
    keys_conform(&v["summary"], &s["properties"]["summary"]);
    keys_conform(&v["timing"], &s["properties"]["timing"]);
}

#[test]
fn detsystem_matches_schema() {
    let s = schema("detsystem.v1.schema.json");
    let kinds: Vec<Value> = s["$defs"]["term"]["properties"]["kind"]["enum"].as_array().unwrap().clone();
    for st in [false, true] {
        let v: Value = serde_json::from_str(&emit_detsystem(&generate_det_system(3, 2, st), DetFormat::Json)).unwrap();
        keys_conform(&v, &s);
        for eq in v["equations"].as_array().unwrap() {
            keys_conform(eq, &s["$defs"]["equation"]);
            for t in eq["terms"].as_array().unwrap() {
                keys_conform(t, &s["$defs"]["term"]);
                assert!(kinds.contains(&t["kind"]));
            }
        }
    }
}
