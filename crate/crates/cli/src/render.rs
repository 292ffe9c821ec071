//! CSV rendering: `#` metadata lines, then one header row and data rows.
//!
//! Floats use Rust's shortest round-trip formatting.

use serde::Serialize;
use serde_json::Value;

use crate::record::{
    CompareConfig, ComparePayload, ExactConfig, ExactPayload, LimitConfig, LimitPayload,
    OutputRecord, SimulateConfig, SimulatePayload,
};

pub(crate) fn float(x: f64) -> String {
    format!("{x:?}")
}

fn scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// `prefix.key=value` for every leaf of `value`; arrays are kept as JSON.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (key, inner) in map {
                let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
                flatten(&path, inner, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn header<C: Serialize, P>(record: &OutputRecord<C, P>) -> String {
    let mut pairs = vec![
        ("schema_version".to_string(), record.schema_version.clone()),
        ("command".to_string(), record.command.clone()),
    ];
    let config = serde_json::to_value(&record.config).expect("config serializes");
    flatten("config", &config, &mut pairs);
    meta_lines(&pairs)
}

fn meta_lines(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

fn table(columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(columns).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn exact_csv(record: &OutputRecord<ExactConfig, ExactPayload>) -> String {
    let p = &record.payload;
    let mut pairs = vec![
        ("tail_mass".to_string(), p.tail_mass.to_string()),
        ("expected_time".to_string(), p.expected_time.to_string()),
        ("expected_visited".to_string(), p.expected_visited.to_string()),
    ];
    pairs.extend(
        p.visit_probabilities
            .iter()
            .map(|v| (format!("visit_probability.{}", v.m), v.p.to_string())),
    );
    let rows = p.pmf.iter().map(|r| vec![r.t.to_string(), r.p.to_string()]);
    header(record) + &meta_lines(&pairs) + &table(&["t", "p"], rows)
}

pub fn simulate_csv(record: &OutputRecord<SimulateConfig, SimulatePayload>) -> String {
    let stats = &record.payload;
    let mut rows = Vec::new();
    let value = serde_json::to_value(stats).expect("summary serializes");
    for (key, inner) in value.as_object().expect("summary is an object") {
        match key.as_str() {
            "visit_frequencies" | "quantiles" => {}
            _ => rows.push(vec![key.clone(), scalar(inner)]),
        }
    }
    rows.extend(
        stats
            .visit_frequencies
            .iter()
            .enumerate()
            .map(|(i, f)| vec![format!("visit_frequency.{}", i + 2), float(*f)]),
    );
    rows.extend(
        stats
            .quantiles
            .iter()
            .map(|q| vec![format!("quantile.{}", float(q.p)), float(q.value)]),
    );
    header(record) + &table(&["key", "value"], rows)
}

pub fn limit_csv(record: &OutputRecord<LimitConfig, LimitPayload>) -> String {
    let body = match &record.payload {
        LimitPayload::Series(rows) => table(
            &["x", "value", "error_bound", "terms_used"],
            rows.iter().map(|r| {
                vec![
                    float(r.x),
                    float(r.value),
                    float(r.error_bound),
                    r.terms_used.to_string(),
                ]
            }),
        ),
        LimitPayload::Charfn(rows) => table(
            &["t", "re", "im"],
            rows.iter()
                .map(|r| vec![float(r.t), float(r.re), float(r.im)]),
        ),
    };
    header(record) + &body
}

pub fn compare_csv(record: &OutputRecord<CompareConfig, ComparePayload>) -> String {
    let report = serde_json::to_value(&record.payload).expect("report serializes");
    let mut rows = Vec::new();
    for (key, inner) in report.as_object().expect("report is an object") {
        if key != "verdicts" {
            rows.push(vec![key.clone(), scalar(inner)]);
        }
    }
    for verdict in &record.payload.verdicts {
        let value = serde_json::to_value(verdict).expect("verdict serializes");
        let check = scalar(&value["check"]);
        for (key, inner) in value.as_object().expect("verdict is an object") {
            if key != "check" {
                rows.push(vec![format!("verdict.{check}.{key}"), scalar(inner)]);
            }
        }
    }
    header(record) + &table(&["key", "value"], rows)
}
