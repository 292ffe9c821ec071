use coalesce_cli::record::{
    CompareConfig, ComparePayload, ErrorKind, ErrorRecord, ExactConfig, ExactPayload,
    LimitConfig, LimitPayload, OutputRecord, ProbValue, SimulateConfig, SimulatePayload,
    SCHEMA_VERSION,
};
use coalesce_cli::{execute, Outcome, EXIT_CEILING, EXIT_OK, EXIT_USAGE, EXIT_VERDICT};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn run(args: &str) -> Outcome {
    execute(std::iter::once("coalesce").chain(args.split_whitespace()))
}

fn parse<T: DeserializeOwned>(out: &Outcome) -> T {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", out.stdout))
}

fn error_of(out: &Outcome) -> ErrorRecord {
    parse(out)
}

/// Rows of the CSV table after the `#` metadata lines.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn meta(text: &str, key: &str) -> Option<String> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(String::from))
}

#[test]
fn exact_two_point_rows() {
    let out = run("exact --n 2");
    assert_eq!(out.code, EXIT_OK);
    let (header, rows) = csv_rows(&out.stdout);
    assert_eq!(header, ["t", "p"]);
    for (i, row) in rows.iter().enumerate().take(40) {
        assert_eq!(row[0], (i + 1).to_string());
        assert_eq!(row[1], format!("1/{}", 1u64 << (i + 1)));
    }
    let tail = meta(&out.stdout, "tail_mass").unwrap();
    assert_eq!(tail, format!("1/{}", 1u64 << rows.len()));
}

#[test]
fn exact_single_point() {
    let out = run("exact --n 1");
    let (_, rows) = csv_rows(&out.stdout);
    assert_eq!(rows, vec![vec!["1".to_string(), "1/1".to_string()]]);
}

#[test]
fn exact_json_keeps_rationals() {
    let out = run("exact --n 3 --format json");
    let record: OutputRecord<ExactConfig, ExactPayload> = parse(&out);
    assert_eq!(record.payload.pmf[0].p, ProbValue::Exact("1/9".into()));
    assert!(out.stdout.contains("\"1/9\""));
    assert_eq!(record.payload.expected_visited, ProbValue::Exact("68/63".into()));
}

#[test]
fn exact_float_mode_and_ceiling() {
    let out = run("exact --n 60 --format json");
    let record: OutputRecord<ExactConfig, ExactPayload> = parse(&out);
    assert!(matches!(record.payload.pmf[0].p, ProbValue::Float(_)));
    assert_eq!(record.config.tail_tol, 1e-9);
    let refused = run("exact --n 401");
    assert_eq!(refused.code, EXIT_CEILING);
    assert_eq!(error_of(&refused).error.kind, ErrorKind::Ceiling);
}

#[test]
fn simulate_is_reproducible() {
    let first = run("simulate --n 2 --samples 100000 --seed 42");
    assert_eq!(first.code, EXIT_OK);
    assert_eq!(first, run("simulate --n 2 --samples 100000 --seed 42"));
    assert_eq!(first, run("simulate --n 2 --samples 100000 --seed 42 --workers 3"));
    assert_ne!(first, run("simulate --n 2 --samples 100000 --seed 43"));
}

#[test]
fn simulate_desk_scale_mean() {
    let out = run("simulate --n 2000 --samples 20000 --sampler chain --seed 7 --format json");
    let record: OutputRecord<SimulateConfig, SimulatePayload> = parse(&out);
    let mean = record.payload.mean_t_over_n;
    assert!((1.85..=2.15).contains(&mean), "{mean}");
}

#[test]
fn simulate_guards() {
    let out = run("simulate --n 100001 --sampler direct");
    assert_eq!(out.code, EXIT_CEILING);
    let err = error_of(&out);
    assert_eq!(err.error.kind, ErrorKind::Ceiling);
    assert_eq!(err.command.as_deref(), Some("simulate"));
    assert_eq!(run("simulate --n 10 --samples 0").code, EXIT_USAGE);
    assert_eq!(run("simulate --n 10 --xi 11").code, EXIT_USAGE);
    assert_eq!(run("simulate --n 10 --workers 0").code, EXIT_USAGE);
}

#[test]
fn emitted_samples_match_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    let args = format!("simulate --n 20 --samples 500 --seed 5 --format json --emit-samples {}", path.display());
    let out = run(&args);
    assert_eq!(out.code, EXIT_OK);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.ends_with('\n'));
    let values: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 500);
    let record: OutputRecord<SimulateConfig, SimulatePayload> = parse(&out);
    let mean = values.iter().sum::<f64>() / 500.0;
    assert!((mean - record.payload.mean_t_over_n).abs() < 1e-12);
    assert!(values.iter().all(|v| (v * 20.0).fract() == 0.0));

    let too_many = format!("simulate --n 2 --samples 1000001 --emit-samples {}", path.display());
    assert_eq!(run(&too_many).code, EXIT_USAGE);
}

#[test]
fn limit_values() {
    let (_, rows) = csv_rows(&run("limit --what cdf --x 1.0").stdout);
    let value: f64 = rows[0][1].parse().unwrap();
    assert!((value - 0.128351).abs() < 1e-6);
    let (header, rows) = csv_rows(&run("limit --what charfn --t 0").stdout);
    assert_eq!(header, ["t", "re", "im"]);
    assert_eq!(rows[0][1..], ["1.0".to_string(), "0.0".to_string()]);

    let refused = run("limit --what density --x 0.0001");
    assert_eq!(refused.code, EXIT_USAGE);
    assert!(error_of(&refused).error.message.contains("x_min"));

    let out = run("limit --what density --grid 0.5:5:10 --format json");
    let record: OutputRecord<LimitConfig, LimitPayload> = parse(&out);
    assert_eq!(record.config.points.len(), 10);
    let LimitPayload::Series(rows) = record.payload else { panic!("series rows") };
    assert!(rows.iter().all(|r| r.value > 0.0 && r.error_bound < 1e-12));

    assert_eq!(run("limit --what charfn --x 1").code, EXIT_USAGE);
    assert_eq!(run("limit --what cdf").code, EXIT_USAGE);
    assert_eq!(run("limit --what cdf --grid 1:2").code, EXIT_USAGE);
}

#[test]
fn charfn_negative_arguments() {
    let out = run("limit --what charfn --t -1,1 --format json");
    let record: OutputRecord<LimitConfig, LimitPayload> = parse(&out);
    let LimitPayload::Charfn(rows) = record.payload else { panic!("charfn rows") };
    assert_eq!(rows[0].re, rows[1].re);
    assert_eq!(rows[0].im, -rows[1].im);
}

#[test]
fn compare_negative_control() {
    let out = run("compare --n 2 --samples 10000 --format json");
    assert_eq!(out.code, EXIT_VERDICT);
    let record: OutputRecord<CompareConfig, ComparePayload> = parse(&out);
    assert!(!record.payload.passed());
}

#[test]
fn usage_errors_are_structured() {
    for args in ["", "frobnicate", "exact", "exact --n two", "simulate --n 5 --sampler fast"] {
        let out = run(args);
        assert_eq!(out.code, EXIT_USAGE, "{args}");
        assert_eq!(error_of(&out).error.kind, ErrorKind::Usage);
    }
    assert_eq!(run("compare --n 5 --alpha 2").code, EXIT_USAGE);
    assert_eq!(run("--help").code, EXIT_OK);
}

fn assert_round_trip<C, P>(args: &str)
where
    C: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug,
    P: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug,
{
    let out = run(args);
    let record: OutputRecord<C, P> = parse(&out);
    let again = format!("{}\n", serde_json::to_string_pretty(&record).unwrap());
    assert_eq!(again, out.stdout, "{args}");
    let reparsed: OutputRecord<C, P> = serde_json::from_str(&again).unwrap();
    assert_eq!(reparsed, record);
}

#[test]
fn json_round_trips() {
    assert_round_trip::<ExactConfig, ExactPayload>("exact --n 4 --format json");
    assert_round_trip::<ExactConfig, ExactPayload>("exact --n 30 --format json");
    assert_round_trip::<SimulateConfig, SimulatePayload>("simulate --n 30 --samples 300 --format json");
    assert_round_trip::<LimitConfig, LimitPayload>("limit --what cdf --grid 0:3:7 --format json");
    assert_round_trip::<LimitConfig, LimitPayload>("limit --what charfn --t 0.5,2 --format json");
    assert_round_trip::<CompareConfig, ComparePayload>("compare --n 40 --samples 300 --format json");
}

fn keys(value: &serde_json::Value) -> Vec<String> {
    let mut keys: Vec<String> = value.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    keys
}

#[test]
fn schema_is_pinned() {
    assert_eq!(SCHEMA_VERSION, "1");
    let expect = |args: &str, config: &[&str], payload: &[&str]| {
        let value: serde_json::Value = serde_json::from_str(&run(args).stdout).unwrap();
        assert_eq!(keys(&value), ["command", "config", "payload", "schema_version"]);
        assert_eq!(value["schema_version"], "1");
        assert_eq!(keys(&value["config"]), config, "{args}");
        if !payload.is_empty() {
            assert_eq!(keys(&value["payload"]), payload, "{args}");
        }
        value
    };
    expect(
        "exact --n 3 --format json",
        &["arithmetic", "n", "tail_tol"],
        &["arithmetic", "expected_time", "expected_visited", "pmf", "tail_mass", "visit_probabilities"],
    );
    let sim_config = ["emit_samples", "n", "sampler", "samples", "seed", "xi", "xi_source"];
    expect(
        "simulate --n 5 --samples 10 --format json",
        &sim_config,
        &[
            "a_frequency", "mean_draws", "mean_t2_over_n", "mean_t_over_n", "mean_visited", "n",
            "quantiles", "sampler", "samples", "seed", "store", "var_t_over_n", "var_visited",
            "visit_frequencies", "xi",
        ],
    );
    let limit = expect(
        "limit --what cdf --x 1 --format json",
        &["points", "product_k", "tol", "what", "x_min"],
        &[],
    );
    assert_eq!(keys(&limit["payload"][0]), ["error_bound", "terms_used", "value", "x"]);
    let mut compare_config: Vec<&str> = sim_config.to_vec();
    compare_config.extend(["alpha", "checks", "tol"]);
    compare_config.sort();
    let compare = expect(
        "compare --n 5 --samples 10 --format json",
        &compare_config,
        &[
            "alpha", "dkw_epsilon", "dkw_vacuous", "en_ratio", "ks_statistic", "ks_threshold",
            "mean_error", "mean_t_over_n", "n", "samples", "seed", "sketch_resolution", "verdicts",
        ],
    );
    assert_eq!(keys(&compare["payload"]["verdicts"][0]), ["check", "lower", "pass", "upper", "value"]);
    let err: serde_json::Value = serde_json::from_str(&run("exact --n 0").stdout).unwrap();
    assert_eq!(keys(&err), ["command", "error", "schema_version"]);
    assert_eq!(keys(&err["error"]), ["kind", "message"]);
}
