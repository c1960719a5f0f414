//! End-to-end runs of the `einkit` binary: scene parsing, verdict lines,
//! report files, exit codes, and byte determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workdir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_einkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_scene(dir: &Path, name: &str, json: &serde_json::Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(json).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Future cone of the chart origin as four exact axis-direction planes.
fn cone_lambda() -> serde_json::Value {
    serde_json::json!({
        "planes": [
            {"v": [1.0, 0.0, 1.0], "s": 0.0},
            {"v": [-1.0, 0.0, 1.0], "s": 0.0},
            {"v": [0.0, 1.0, 1.0], "s": 0.0},
            {"v": [0.0, -1.0, 1.0], "s": 0.0},
        ],
        "orientation": "Future",
    })
}

#[test]
fn classify_reports_the_affine_chart_diamond() {
    let dir = workdir("classify-affine");
    let tau = std::f64::consts::TAU;
    let scene = write_scene(
        &dir,
        "scene.json",
        &serde_json::json!({
            "p": {"x": [1.0, 0.0, 0.0], "t": tau},
            "q": {"x": [1.0, 0.0, 0.0], "t": 0.0},
        }),
    );
    let out_prefix = format!("{}/", dir.display());
    let out = run(&["classify", "--scene", &scene, "--out", &out_prefix, "--oracle"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("AffineChart"));
    let report = fs::read_to_string(dir.join("report.json")).unwrap();
    assert!(report.contains("\"kind\": \"AffineChart\""));
    assert!(report.contains("\"consistent\": true"));
    assert!(report.contains("\"version\""));
}

#[test]
fn classify_sees_an_empty_interior() {
    let dir = workdir("classify-empty");
    // Null-separated vertices: time span equals foot distance, no interior.
    let scene = write_scene(
        &dir,
        "scene.json",
        &serde_json::json!({
            "p": {"x": [0.1f64.cos(), 0.1f64.sin(), 0.0], "t": 0.1},
            "q": {"x": [1.0, 0.0, 0.0], "t": 0.0},
        }),
    );
    let out_prefix = format!("{}/", dir.display());
    let out = run(&["classify", "--scene", &scene, "--out", &out_prefix]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("EmptyInterior"));

    // Spacelike vertices cannot bound a diamond at all.
    let spacelike = write_scene(
        &dir,
        "spacelike.json",
        &serde_json::json!({
            "p": {"x": [0.0, 1.0, 0.0], "t": 0.1},
            "q": {"x": [1.0, 0.0, 0.0], "t": 0.0},
        }),
    );
    let out = run(&["classify", "--scene", &spacelike, "--out", &out_prefix]);
    assert_eq!(code(&out), 3);
}

#[test]
fn malformed_scenes_exit_with_schema_code() {
    let dir = workdir("schema");
    let scene = write_scene(
        &dir,
        "scene.json",
        &serde_json::json!({
            "p": {"x": [1.0, 0.0, 0.0], "t": 0.0},
            "q": {"x": [1.0, 0.0, 0.0], "t": 1.0},
            "surprise": 1,
        }),
    );
    let out = run(&["classify", "--scene", &scene]);
    assert_eq!(code(&out), 2);
    let missing = run(&["classify", "--scene", "/nonexistent/scene.json"]);
    assert_eq!(code(&missing), 2);
    let required = run(&["classify"]);
    assert_eq!(code(&required), 2);
}

#[test]
fn member_labels_a_boundary_probe() {
    let dir = workdir("member");
    let scene = write_scene(
        &dir,
        "scene.json",
        &serde_json::json!({
            "lambda": cone_lambda(),
            "probe": [0.0, 0.0, 0.0],
        }),
    );
    let out_prefix = format!("{}/", dir.display());
    let out = run(&["domain", "member", "--scene", &scene, "--out", &out_prefix]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Boundary"));

    let inside = write_scene(
        &dir,
        "inside.json",
        &serde_json::json!({
            "lambda": cone_lambda(),
            "probe": [0.0, 0.0, 1.0],
        }),
    );
    let out = run(&["domain", "member", "--scene", &inside, "--out", &out_prefix]);
    assert!(stdout(&out).contains("Interior"));
}

#[test]
fn regular_flags_a_truncated_family() {
    let dir = workdir("regular");
    let mut lambda = cone_lambda();
    lambda["truncated_unbounded"] = serde_json::json!(true);
    let scene = write_scene(&dir, "scene.json", &serde_json::json!({ "lambda": lambda }));
    let out_prefix = format!("{}/", dir.display());
    let out = run(&["domain", "regular", "--scene", &scene, "--out", &out_prefix]);
    assert_eq!(code(&out), 4);
    assert!(stdout(&out).contains("not regular"));

    let fine = write_scene(
        &dir,
        "fine.json",
        &serde_json::json!({ "lambda": cone_lambda() }),
    );
    let out = run(&["domain", "regular", "--scene", &fine, "--out", &out_prefix]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("regular, height bound 0"));
}

#[test]
fn reconstruct_audits_the_cone_fixture() {
    let dir = workdir("reconstruct");
    let scene = write_scene(
        &dir,
        "scene.json",
        &serde_json::json!({
            "lambda": cone_lambda(),
            "base": [0.0, 0.0, 1.0],
            "probes": 800,
            "seed": 3,
        }),
    );
    let out_prefix = format!("{}/", dir.display());
    let out = run(&["domain", "reconstruct", "--scene", &scene, "--out", &out_prefix]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("mismatches: 0"));

    // A base outside the domain violates the precondition.
    let outside = write_scene(
        &dir,
        "outside.json",
        &serde_json::json!({
            "lambda": cone_lambda(),
            "base": [0.0, 0.0, -5.0],
        }),
    );
    let out = run(&["domain", "reconstruct", "--scene", &outside, "--out", &out_prefix]);
    assert_eq!(code(&out), 3);
}

#[test]
fn convexity_finds_the_wedge_witness() {
    let dir = workdir("convexity");
    let scene = write_scene(
        &dir,
        "scene.json",
        &serde_json::json!({
            "lambda": {
                "planes": [
                    {"v": [1.0, 0.0, 1.0], "s": 0.0},
                    {"v": [-1.0, 0.0, 1.0], "s": 0.0},
                ],
                "orientation": "Future",
            },
            "trials": 2000,
            "seed": 8,
        }),
    );
    let out_prefix = format!("{}/", dir.display());
    let out = run(&["domain", "convexity", "--scene", &scene, "--out", &out_prefix]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("witness found"));
    let report = fs::read_to_string(dir.join("report.json")).unwrap();
    assert!(report.contains("\"witness\": ["));
}

#[test]
fn counterexample_is_byte_deterministic() {
    let dir_a = workdir("ce-a");
    let dir_b = workdir("ce-b");
    let scene_json = serde_json::json!({
        "k": 0, "samples": 4000, "seed": 9,
    });
    let scene_a = write_scene(&dir_a, "scene.json", &scene_json);
    let scene_b = write_scene(&dir_b, "scene.json", &scene_json);
    let out_a = run(&[
        "counterexample",
        "--scene",
        &scene_a,
        "--out",
        &format!("{}/", dir_a.display()),
    ]);
    assert_eq!(code(&out_a), 0, "stderr: {}", String::from_utf8_lossy(&out_a.stderr));
    assert!(stdout(&out_a).contains("components: 1"));
    let out_b = run(&[
        "counterexample",
        "--scene",
        &scene_b,
        "--out",
        &format!("{}/", dir_b.display()),
    ]);
    assert_eq!(code(&out_b), 0);
    for file in ["cloud.csv", "slices.json", "report.json"] {
        let a = fs::read(dir_a.join(file)).unwrap();
        let b = fs::read(dir_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    let cloud = fs::read_to_string(dir_a.join("cloud.csv")).unwrap();
    assert!(cloud.starts_with("x1,x2,x3,label\n"));
}

#[test]
fn seed_flag_overrides_the_scene() {
    let dir = workdir("seed-override");
    let scene_json = serde_json::json!({ "k": 0, "samples": 4000, "seed": 9 });
    let scene = write_scene(&dir, "scene.json", &scene_json);
    let out_prefix = format!("{}/", dir.display());
    let out = run(&[
        "counterexample",
        "--scene",
        &scene,
        "--seed",
        "10",
        "--out",
        &out_prefix,
    ]);
    assert_eq!(code(&out), 0);
    let report = fs::read_to_string(dir.join("report.json")).unwrap();
    assert!(report.contains("\"seed\": 10"));
}

#[test]
fn chart_commands_pass_their_thresholds() {
    let dir = workdir("chart");
    let out_prefix = format!("{}/", dir.display());
    let out = run(&["chart", "conformality", "--out", &out_prefix]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("max conformality defect"));

    let scene = write_scene(
        &dir,
        "endpoint.json",
        &serde_json::json!({
            "x0": [0.2, -0.1, 0.05],
            "w": [0.6, 0.8, 1.0],
        }),
    );
    let out = run(&["chart", "endpoint", "--scene", &scene, "--out", &out_prefix]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("angular gap"));
}
