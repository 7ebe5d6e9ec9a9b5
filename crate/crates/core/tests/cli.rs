use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quasidisc::disc::TriMesh;
use quasidisc::geom::Isometry;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasidisc")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(run(&["sweep", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--family", "q7"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "unknown_key = 1\n").unwrap();
    let out = run(&["sweep", "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));
}

#[test]
fn generate_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["generate", "--t", "0,0.1", "-o", arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..2 {
        for name in ["map_{}.txt", "quasicircle_{}.csv", "infinity_{}.csv", "width_{}.json"] {
            assert!(dir.path().join(name.replace("{}", &i.to_string())).exists(), "{name} {i}");
        }
    }
    let width: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("width_1.json")).unwrap()).unwrap();
    assert!((width["width"].as_f64().unwrap() - 0.3f64.atanh()).abs() < 1e-9);
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    // the command line overrides the file's vertex count
    fs::write(&cfg, "# small disc\nvertices = 100000\nt = 0.05\n").unwrap();
    let out = run(&["solve", "--config", arg(&cfg), "--vertices", "2500", "-o", arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["vertices"].as_u64().unwrap() < 3000);
    assert_eq!(summary["converged"], true);
    let curv = fs::read_to_string(dir.path().join("curvature.csv")).unwrap();
    assert!(curv.starts_with("vertexId,lambda,flag"));

    let mesh = dir.path().join("disc.off");
    let out = run(&["verify", "--config", arg(&cfg), "--mesh", arg(&mesh)]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("hull_violation") && text.contains("harmonic_residual"), "{text}");
    assert!(matches!(out.status.code(), Some(0) | Some(1)));

    // a boosted copy leaves the hull of its boundary
    let mut moved = TriMesh::from_off(&fs::read_to_string(&mesh).unwrap()).unwrap();
    let boost = Isometry::boost(2, 0.5);
    moved.vertices = moved.vertices.iter().map(|x| boost.apply(x)).collect();
    let moved_path = dir.path().join("moved.off");
    fs::write(&moved_path, moved.to_off()).unwrap();
    let out = run(&["verify", "--config", arg(&cfg), "--mesh", arg(&moved_path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL hull_violation"));
}

#[test]
fn circle_sweep_is_a_vacuous_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--t", "0", "--vertices", "2000", "-o", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "0");
    assert_eq!(row[1], "0");
    assert!(row[4].parse::<f64>().unwrap() < 5e-3);
    assert_eq!(row[5], "0");
    assert_eq!(row[9], "true");
    let verify: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(verify["vacuous"], true);
}
