use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SCHEMAS: &[&str] = &[
    "instance",
    "driver",
    "gap-summary",
    "detect",
    "lens",
    "reduce",
    "scaling",
    "reproduce",
    "error",
];

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gapscope"));
    c.env_remove("GAPSCOPE_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: impl AsRef<Path>) -> Value {
    let text =
        std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{:?}: {e}", p.as_ref()));
    serde_json::from_str(&text).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn schema_id(name: &str) -> String {
    format!("https://gapscope.invalid/schemas/{name}.schema.json")
}

fn assert_schema(name: &str, doc: &Value) {
    let mut opts = jsonschema::options();
    for s in SCHEMAS {
        let contents = read(schema_dir().join(format!("{s}.schema.json")));
        opts = opts.with_resource(
            schema_id(s),
            jsonschema::Resource::from_contents(contents).unwrap(),
        );
    }
    let schema = read(schema_dir().join(format!("{name}.schema.json")));
    let v = opts.build(&schema).expect("schema compiles");
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{}: {e}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_valid_instances() {
    let dir = TempDir::new().unwrap();
    for name in ["chain5", "chain7", "loop"] {
        let printed = ok(&["generate", name, "--out", arg(dir.path())]);
        let path = dir.path().join(format!("{name}.json"));
        assert_eq!(printed.trim(), path.to_str().unwrap());
        assert_schema("instance", &read(&path));
    }
    let chain7 = read(dir.path().join("chain7.json"));
    assert_eq!(chain7["n"], 7);
    let custom = dir.path().join("sub/custom.json");
    ok(&[
        "generate",
        "loop",
        "--n",
        "6",
        "--R",
        "5",
        "-o",
        arg(&custom),
    ]);
    assert_eq!(read(&custom)["kind"], "ising");
}

#[test]
fn sweep_is_deterministic_and_schema_valid() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&[
            "sweep",
            "--gen",
            "chain5",
            "--J",
            "1.52",
            "--grid-step",
            "0.01",
            "--out",
            arg(out),
        ]);
    }
    for f in ["sweep.csv", "traces.csv", "summary.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    let summary = read(a.join("summary.json"));
    assert_schema("gap-summary", &summary);
    assert!((summary["s_star"].as_f64().unwrap() - 0.7479).abs() < 0.01);
    let header = std::fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert!(header.starts_with("s,"));
}

#[test]
fn sweep_with_alpha_embeds_scaling() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "sweep",
        "--gen",
        "chain5",
        "--grid-step",
        "0.01",
        "--alpha",
        "2",
        "--out",
        arg(dir.path()),
    ]);
    let summary = read(dir.path().join("summary.json"));
    assert_schema("gap-summary", &summary);
    assert_eq!(summary["scaling"]["alpha"], 2.0);
}

#[test]
fn detect_reports_strong_crossing() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "detect",
        "--gen",
        "chain5",
        "--w4",
        "1.51",
        "--J",
        "10",
        "--grid-step",
        "0.01",
        "--out",
        arg(dir.path()),
    ]);
    let rep = read(dir.path().join("detect.json"));
    assert_schema("detect", &rep);
    assert_eq!(rep["detection"]["verdict"], "strong");
}

#[test]
fn lens_prints_table_and_prediction() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&[
        "lens",
        "--gen",
        "chain5",
        "--J",
        "4",
        "--out",
        arg(dir.path()),
    ]);
    assert!(stdout.contains("prediction: no-anti-crossing"), "{stdout}");
    let rep = read(dir.path().join("lens.json"));
    assert_schema("lens", &rep);
    assert_eq!(rep["prediction"], "no-anti-crossing");
    let windowed = dir.path().join("w");
    ok(&[
        "lens",
        "--gen",
        "chain5",
        "--window",
        "3",
        "--out",
        arg(&windowed),
    ]);
    assert_schema("lens", &read(windowed.join("lens.json")));
}

#[test]
fn reduce_loop_gives_path() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "reduce",
        "--gen",
        "loop",
        "--detect",
        "--out",
        arg(dir.path()),
    ]);
    let rep = read(dir.path().join("reduce.json"));
    assert_schema("reduce", &rep);
    assert_eq!(rep["verification"]["mis_weight"], 12.0);
    assert_eq!(rep["decoded_bits"], "1111");
    assert_eq!(rep["detection"]["verdict"], "none");
    let graph = read(dir.path().join("reduced.json"));
    assert_schema("instance", &graph);
    assert_eq!(graph["n"], 7);
    assert_eq!(graph["edges"].as_array().unwrap().len(), 6);
    let dot = std::fs::read_to_string(dir.path().join("conflict.dot")).unwrap();
    assert!(dot.starts_with("graph"));

    // the reduced graph is itself a valid input
    let again = dir.path().join("again");
    ok(&[
        "sweep",
        "--instance",
        arg(&dir.path().join("reduced.json")),
        "--grid-step",
        "0.05",
        "--out",
        arg(&again),
    ]);
}

#[test]
fn reduce_rules_parse() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "reduce",
        "--gen",
        "loop",
        "--rule",
        "uniform:6",
        "--out",
        arg(dir.path()),
    ]);
    let rep = read(dir.path().join("reduce.json"));
    assert_eq!(rep["penalty_rule"]["uniform"], 6.0);
    let bad = run(&[
        "reduce",
        "--gen",
        "loop",
        "--rule",
        "uniform",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn scalecheck_passes_on_sharp_instance() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "scalecheck",
        "--gen",
        "chain5",
        "--w4",
        "1.51",
        "--J",
        "10",
        "--scale",
        "0.1",
        "--alpha",
        "10",
        "--out",
        arg(dir.path()),
    ]);
    let rep = read(dir.path().join("scaling.json"));
    assert_schema("scaling", &rep);
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["claims"]["sharp_factor"], true);
}

#[test]
fn scalecheck_rejects_unit_alpha() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "scalecheck",
        "--gen",
        "chain5",
        "--alpha",
        "1",
        "--out",
        arg(dir.path()),
    ]);
    assert_ne!(out.status.code(), Some(0));
    assert_schema("error", &serde_json::from_slice(&out.stderr).unwrap());
}

#[test]
fn reproduce_writes_comparison() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&["reproduce", "fig4", "--out", arg(dir.path())]);
    assert!(!stdout.is_empty());
    let rep = read(dir.path().join("fig4/comparison.json"));
    assert_schema("reproduce", &rep);
    assert_eq!(rep["passed"], true);
    assert!(dir.path().join("fig4/energies.csv").exists());
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .args(["generate", "chain5"])
        .env("GAPSCOPE_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("chain5.json").exists());
}

#[test]
fn exit_codes_and_error_json() {
    let dir = TempDir::new().unwrap();
    let out = run(&["reproduce", "fig99", "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_schema("error", &err);
    assert_eq!(err["exit_code"], 1);
    assert!(err["message"].as_str().unwrap().contains("fig7"));

    assert_eq!(run(&["sweep", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["sweep"]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    let out = run(&[
        "sweep",
        "--instance",
        arg(&missing),
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_schema("error", &serde_json::from_slice(&out.stderr).unwrap());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kind":"graph","n":2,"weights":[1.0],"edges":[]}"#).unwrap();
    assert_eq!(
        run(&["sweep", "--instance", arg(&bad), "--out", arg(dir.path())])
            .status
            .code(),
        Some(1)
    );

    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("reproduce"));
}

#[test]
fn driver_file_and_xx_driver() {
    let dir = TempDir::new().unwrap();
    let driver = dir.path().join("driver.json");
    std::fs::write(
        &driver,
        r#"{"driver":"XX","lambda":-1.0,"edges":"same-as-problem"}"#,
    )
    .unwrap();
    assert_schema("driver", &read(&driver));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&[
        "sweep",
        "--gen",
        "chain5",
        "--driver-file",
        arg(&driver),
        "--grid-step",
        "0.02",
        "--out",
        arg(&a),
    ]);
    ok(&[
        "sweep",
        "--gen",
        "chain5",
        "--driver",
        "xx",
        "--grid-step",
        "0.02",
        "--out",
        arg(&b),
    ]);
    assert_eq!(
        std::fs::read(a.join("sweep.csv")).unwrap(),
        std::fs::read(b.join("sweep.csv")).unwrap()
    );
    assert_eq!(read(a.join("summary.json"))["driver"]["driver"], "XX");
}
