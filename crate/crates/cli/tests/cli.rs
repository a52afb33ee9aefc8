use std::path::PathBuf;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_arith-mm"));
    cmd.env_remove("ARITH_MM_CAPS");
    cmd
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn invoke(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn status(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn schema() -> JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    JSONSchema::compile(&raw).expect("schema compiles")
}

fn assert_valid(schema: &JSONSchema, args: &[&str]) -> Value {
    let out = invoke(args);
    assert_eq!(status(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let value: Value = serde_json::from_str(&stdout(&out)).unwrap();
    if let Err(errors) = schema.validate(&value) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{args:?} violates the schema: {msgs:?}");
    }
    value
}

fn error_kind(out: &Output) -> String {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let last = stderr.lines().last().expect("error line");
    let value: Value = serde_json::from_str(last).unwrap();
    value["error"].as_str().unwrap().to_string()
}

#[test]
fn exact_examples() {
    assert_eq!(stdout(&invoke(&["jacobsthal", "30"])), "{\"d\":30,\"g\":6,\"kanold\":8}\n");
    assert_eq!(
        stdout(&invoke(&["coprime-shift", "2", "3", "10"])),
        "{\"k\":3,\"value\":11,\"bound\":4}\n"
    );
    assert_eq!(
        stdout(&invoke(&["--format", "csv", "jacobsthal", "30"])),
        "d,g,kanold\n30,6,8\n"
    );
    assert_eq!(
        stdout(&invoke(&["--format", "text", "jacobsthal", "30"])),
        "d: 30\ng: 6\nkanold: 8\n"
    );
}

#[test]
fn fixture_outputs() {
    let keyprop: Value =
        serde_json::from_str(&stdout(&invoke(&["keyprop-witness", &fixture("keyprop.json")]))).unwrap();
    assert_eq!(keyprop["coset"]["dim"], 1);
    assert_eq!(keyprop["coset"]["basis"], serde_json::json!([[1, 0], [0, 1]]));
    assert_eq!(keyprop["coset"]["order"], 1);
    assert_eq!(keyprop["within_cap"], true);

    let lift: Value =
        serde_json::from_str(&stdout(&invoke(&["idempotent-lift", &fixture("lift.json")]))).unwrap();
    assert_eq!(lift["v"], serde_json::json!([[[["1", "1"]]], [[["0", "1"]]]]));

    let central: Value = serde_json::from_str(&stdout(&invoke(&[
        "idempotent-lift-central",
        &fixture("lift_central.json"),
    ])))
    .unwrap();
    assert_eq!(central["v"], serde_json::json!([[[["0", "1"]]]]));
}

#[test]
fn every_report_matches_the_schema() {
    let schema = schema();
    let cases: Vec<Vec<String>> = vec![
        vec!["jacobsthal".into(), "30".into()],
        vec!["coprime-shift".into(), "2".into(), "3".into(), "10".into()],
        vec!["delta-bound".into(), "--D".into(), "2".into(), "--Delta".into(), "1".into(), "--c".into(), "1".into()],
        vec!["delta-bound".into(), "--D".into(), "3".into(), "--Delta".into(), "2".into(), "--c".into(), "1".into(), "--doubled-x".into()],
        vec!["sigma-set".into(), "--D".into(), "2".into(), "--c".into(), "1".into(), "--d".into(), "1".into(), "--p".into(), "0".into()],
        vec!["lang-orbit".into(), "--N".into(), "5".into(), "--g".into(), "1".into(), "--c".into(), "2".into(), "--point".into(), "1,2".into()],
        vec!["special-closure".into(), fixture("closure.json")],
        vec!["keyprop-witness".into(), fixture("keyprop.json")],
        vec!["gl-verify".into(), fixture("gl.json")],
        vec!["idempotent-lift".into(), fixture("lift.json")],
        vec!["idempotent-lift-central".into(), fixture("lift_central.json")],
        vec!["selftest".into(), "--quick".into()],
    ];
    for case in &cases {
        let args: Vec<&str> = case.iter().map(String::as_str).collect();
        assert_valid(&schema, &args);
    }
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["gl-verify".to_string(), fixture("gl.json")],
        vec!["special-closure".to_string(), fixture("closure.json")],
        vec!["delta-bound".into(), "--D".into(), "2".into(), "--Delta".into(), "1".into(), "--c".into(), "1".into()],
    ] {
        let first = invoke(&args.iter().map(String::as_str).collect::<Vec<_>>());
        let second = invoke(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(first.stdout, second.stdout);
        assert!(!first.stdout.is_empty());
    }
}

#[test]
fn exit_codes() {
    let out = invoke(&["jacobsthal", "0"]);
    assert_eq!(status(&out), 1);
    assert_eq!(error_kind(&out), "invalid_input");
    assert!(out.stdout.is_empty());

    let out = invoke(&["coprime-shift", "0", "2", "2"]);
    assert_eq!(status(&out), 1);
    assert_eq!(error_kind(&out), "no_solution");

    let out = invoke(&["delta-bound", "--D", "2", "--Delta", "3", "--c", "1"]);
    assert_eq!(status(&out), 2);
    assert_eq!(error_kind(&out), "cap_exceeded");

    let out = invoke(&["no-such-command"]);
    assert_eq!(status(&out), 1);
    assert_eq!(error_kind(&out), "invalid_input");

    assert_eq!(status(&invoke(&["--help"])), 0);
}

#[test]
fn caps_from_environment_and_flag() {
    let gl = fixture("gl.json");
    let out = bin().env("ARITH_MM_CAPS", "lattice=4").args(["gl-verify", &gl]).output().unwrap();
    assert_eq!(status(&out), 2);
    assert_eq!(error_kind(&out), "cap_exceeded");

    // The flag is applied after the environment.
    let out = bin()
        .env("ARITH_MM_CAPS", "lattice=4")
        .args(["--caps", "lattice=100", "gl-verify", &gl])
        .output()
        .unwrap();
    assert_eq!(status(&out), 0);

    let out = bin().env("ARITH_MM_CAPS", "colour=1").args(["jacobsthal", "6"]).output().unwrap();
    assert_eq!(status(&out), 1);
}

#[test]
fn unknown_fields_and_stdin() {
    use std::io::Write;

    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "{{\"N\": 6, \"g\": 1, \"c\": 1, \"points\": [[1, 0]], \"extra\": 1}}").unwrap();
    let out = invoke(&["special-closure", file.path().to_str().unwrap()]);
    assert_eq!(status(&out), 1);
    assert_eq!(error_kind(&out), "invalid_input");

    let mut child = bin()
        .args(["special-closure", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(std::fs::read_to_string(fixture("closure.json")).unwrap().as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(status(&out), 0);
    let from_file = invoke(&["special-closure", &fixture("closure.json")]);
    assert_eq!(out.stdout, from_file.stdout);
}
