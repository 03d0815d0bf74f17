use std::fs;
use std::path::Path;

use lambda_flows::cli::main_with_args;
use lambda_flows::lookdown::LookdownGraph;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["lambda-flows"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn classify_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), "b.json", r#"{"measure":{"family":"beta","alpha":1.5}}"#);
    let out = tmp.path().join("out");
    assert_eq!(run(&["classify", "--config", &good, "--out", out.to_str().unwrap()]), 0);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("classify.json")).unwrap()).unwrap();
    assert!(v.to_string().contains("CDI"), "{v}");

    let typo = write_config(tmp.path(), "t.json", r#"{"measure":{"family":"beta","alpha":1.5},"nn":3}"#);
    assert_eq!(run(&["classify", "--config", &typo]), 1);
    assert_eq!(run(&["classify", "--config", tmp.path().join("missing.json").to_str().unwrap()]), 1);
}

#[test]
fn sampling_commands_need_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"measure":{"family":"lebesgue"},"n":10,"replicates":5}"#);
    assert_eq!(run(&["coalescent", "--config", &cfg]), 1);
    let out = tmp.path().join("o");
    assert_eq!(run(&["coalescent", "--config", &cfg, "--seed", "1", "--out", out.to_str().unwrap()]), 0);
    let csv = fs::read_to_string(out.join("coalescent.csv")).unwrap();
    assert!(csv.starts_with("# config_sha256="));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5);
}

#[test]
fn lookdown_jsonl_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "l.json", r#"{"measure":{"family":"dirac","x":0.5,"mass":1.0},"n":12,"window":[0.0,3.0]}"#);
    let out = tmp.path().join("o");
    assert_eq!(run(&["lookdown", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap()]), 0);
    let path = out.join("graph.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let meta: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(meta["meta"]["n"], 12);
    let g = LookdownGraph::read_events(text.as_bytes(), 12, (0.0, 3.0)).unwrap();
    assert!(g.len() > 0);
    let mut again = Vec::new();
    g.write_events(&mut again).unwrap();
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    assert_eq!(String::from_utf8(again).unwrap(), body);
}

#[test]
fn eves_without_input_fails() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["eves"]), 1);
    assert_eq!(run(&["eves", "--input", tmp.path().join("nope.jsonl").to_str().unwrap()]), 1);
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "v.json",
        r#"{"tests":[{"test":"rate_match","measure":{"family":"lebesgue"},"n":3,"replicates":200}]}"#,
    );
    let out = tmp.path().join("ok");
    assert_eq!(run(&["validate", "--config", &cfg, "--seed", "2", "--out", out.to_str().unwrap()]), 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("validate.json")).unwrap()).unwrap();
    assert_eq!(report["reports"].as_array().unwrap().len(), 1);

    let weak = tmp.path().join("weak");
    assert_eq!(run(&["validate", "--seed", "2", "--replicates", "10", "--out", weak.to_str().unwrap()]), 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(weak.join("validate.json")).unwrap()).unwrap();
    assert!(report["reports"].as_array().unwrap().iter().any(|r| r["verdict"] == "UNDECIDED"));

    let neg = write_config(tmp.path(), "n.json", r#"{"suite":"negative_controls"}"#);
    let out = tmp.path().join("neg");
    assert_eq!(run(&["validate", "--config", &neg, "--seed", "2", "--replicates", "20000", "--out", out.to_str().unwrap()]), 3);
}

#[test]
fn flags_override_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"measure":{"family":"lebesgue"},"n":8,"replicates":3,"seed":1}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["coalescent", "--config", &cfg, "--out", a.to_str().unwrap()]), 0);
    assert_eq!(run(&["coalescent", "--config", &cfg, "--seed", "1", "--out", b.to_str().unwrap()]), 0);
    assert_eq!(fs::read(a.join("coalescent.csv")).unwrap(), fs::read(b.join("coalescent.csv")).unwrap());
    let c = tmp.path().join("c");
    assert_eq!(run(&["coalescent", "--config", &cfg, "--seed", "9", "--replicates", "4", "--out", c.to_str().unwrap()]), 0);
    let csv = fs::read_to_string(c.join("coalescent.csv")).unwrap();
    assert!(csv.contains("seed=9"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}
