use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn incmeter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incmeter"))
        .args(args)
        .env_remove("INCMETER_BUDGET_MIS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn analyze(cases: &Path, extra: &[&str]) -> Output {
    let rules = data("m1.rules");
    let mut args = vec![
        "analyze",
        "--rules",
        rules.to_str().unwrap(),
        "--cases",
        cases.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    incmeter(&args)
}

#[test]
fn running_example_report() {
    let v: Value = serde_json::from_str(&stdout(&analyze(&data("m1.jsonl"), &[]))).unwrap();
    assert_eq!(v["overall"]["value"], "5");
    let rules = v["rules"].as_array().unwrap();
    assert_eq!(rules[0]["rule"], "a -> b");
    assert_eq!(rules[0]["rank"], 1);
    let cd: Vec<&str> = rules.iter().map(|r| r["values"]["cd"].as_str().unwrap()).collect();
    let chash: Vec<&str> = rules.iter().map(|r| r["values"]["chash"].as_str().unwrap()).collect();
    assert_eq!(cd, ["4", "3", "2", "2", "2"]);
    assert_eq!(chash, ["5", "3", "2", "2", "2"]);
}

#[test]
fn csv_input_matches_jsonl_input() {
    assert_eq!(
        stdout(&analyze(&data("m1.jsonl"), &[])),
        stdout(&analyze(&data("m1.csv"), &[]))
    );
}

#[test]
fn csv_report_and_top() {
    let text = stdout(&analyze(
        &data("m1.jsonl"),
        &["--output-format", "csv", "--top", "1", "--measures", "cd"],
    ));
    assert_eq!(text, "rule,rank,cd,cd_decimal\na -> b,1,4,4.000000\n");
}

#[test]
fn report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = analyze(&data("m1.jsonl"), &["--output", path.to_str().unwrap()]);
    assert!(stdout(&out).is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["overall"]["measure"], "mi");
}

#[test]
fn zero_cases_is_an_empty_report() {
    let v: Value = serde_json::from_str(&stdout(&analyze(&data("empty.jsonl"), &[]))).unwrap();
    assert_eq!(v["overall"]["value"], "0");
    assert_eq!(v["cases"].as_array().unwrap().len(), 0);
    assert_eq!(v["rules"].as_array().unwrap().len(), 5);
}

#[test]
fn contradictory_facts_are_rejected_with_the_line() {
    let out = analyze(&data("contradictory.jsonl"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    let ok = analyze(&data("contradictory.jsonl"), &["--allow-contradictory-facts"]);
    assert!(ok.status.success());
}

#[test]
fn missing_file_and_unknown_measure_exit_1() {
    assert_eq!(analyze(&data("absent.jsonl"), &[]).status.code(), Some(1));
    assert_eq!(
        analyze(&data("m1.jsonl"), &["--measures", "nope"]).status.code(),
        Some(1)
    );
}

#[test]
fn budget_exhaustion_exits_2() {
    assert_eq!(analyze(&data("m1.jsonl"), &["--max-mis", "1"]).status.code(), Some(2));
    let rules = data("m1.rules");
    let cases = data("m1.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_incmeter"))
        .args([
            "analyze",
            "--rules",
            rules.to_str().unwrap(),
            "--cases",
            cases.to_str().unwrap(),
        ])
        .env("INCMETER_BUDGET_MIS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_ignores_case_order_and_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let gen_rules = dir.path().join("rules.txt");
    let gen_cases = dir.path().join("cases.jsonl");
    stdout(&incmeter(&[
        "generate",
        "--rules",
        "8",
        "--cases",
        "300",
        "--p",
        "0.4",
        "--seed",
        "5",
        "--rules-out",
        gen_rules.to_str().unwrap(),
        "--cases-out",
        gen_cases.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&gen_cases).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.reverse();
    lines.rotate_left(17);
    let shuffled = dir.path().join("shuffled.jsonl");
    std::fs::write(&shuffled, lines.join("\n") + "\n").unwrap();

    let run = |cases: &Path, workers: &str| {
        stdout(&incmeter(&[
            "analyze",
            "--rules",
            gen_rules.to_str().unwrap(),
            "--cases",
            cases.to_str().unwrap(),
            "--workers",
            workers,
        ]))
    };
    let reference = run(&gen_cases, "1");
    assert_eq!(reference, run(&gen_cases, "8"));
    assert_eq!(reference, run(&shuffled, "1"));
    assert_eq!(reference, run(&shuffled, "8"));
}

#[test]
fn generate_writes_parseable_files() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("r.txt");
    let cases = dir.path().join("c.jsonl");
    stdout(&incmeter(&[
        "generate",
        "--rules",
        "3",
        "--cases",
        "4",
        "--p",
        "1",
        "--rules-out",
        rules.to_str().unwrap(),
        "--cases-out",
        cases.to_str().unwrap(),
    ]));
    let parsed = incmeter::parse_rules(&std::fs::read_to_string(&rules).unwrap()).unwrap();
    assert_eq!(parsed, incmeter::parse_rules("a -> -b. b -> -c. c -> -d.").unwrap());
    let text = std::fs::read_to_string(&cases).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text
        .lines()
        .all(|l| l == format!(r#"{{"case_id":"{}","facts":["a","b","c","d"]}}"#, &l[12..14])));

    let bad = incmeter(&["generate", "--p", "2", "--rules-out", "x", "--cases-out", "y"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn check_prints_the_table() {
    let text = stdout(&incmeter(&[
        "check",
        "--postulate",
        "fm,dis",
        "--measure",
        "cd,chash",
        "--trials",
        "500",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0].split_whitespace().collect::<Vec<_>>(),
        ["measure", "FM", "DIS"]
    );
    assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["cd", "✗", "n/a"]);
    assert_eq!(lines[2].split_whitespace().collect::<Vec<_>>(), ["chash", "✗", "n/a"]);

    let json = stdout(&incmeter(&[
        "check",
        "--postulate",
        "rs",
        "--measure",
        "cd",
        "--trials",
        "50",
        "--format",
        "json",
    ]));
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rows"][0]["results"][0]["verdict"], "no-counterexample");
}

#[test]
fn check_rejects_unknown_postulate() {
    let out = incmeter(&["check", "--postulate", "XX"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown postulate"));
}

#[test]
fn bench_grid_shape() {
    let text = stdout(&incmeter(&["bench", "--sizes", "10,20", "--cases", "100,200"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "size,cases,seconds");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("10,100,"));
    assert!(lines[4].starts_with("20,200,"));
}
