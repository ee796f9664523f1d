use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfg_app::Scenario;
use mfg_core::mesh::make_icosphere;

const SMALL: &str = r#"
name = "small"
time_steps = 4
metric = "sphere"

[mesh]
kind = "icosphere"
subdivisions = 2

[initial]
background = 0.5
bumps = [{ center = [1.0, 0.0, 0.0], width = 0.5 }]

[target]
background = 0.5
bumps = [{ center = [0.0, 0.0, 1.0], width = 0.5 }]

[terminal]
kind = "kl"
weight = 1.0

[[variants]]
name = "vanilla"
interaction = { kind = "vanilla" }

[[variants]]
name = "entropy"
interaction = { kind = "entropy", weight = 0.1 }

[solver]
iterations = 20
step_size = 0.01
"#;

fn mfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfg")).args(args).output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path
}

fn solve(dir: &Path, format: &str) -> PathBuf {
    let scenario = write_scenario(dir, SMALL);
    let out = dir.join("out");
    let res = mfg(&[
        "solve",
        scenario.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--format",
        format,
        "--deterministic",
    ]);
    assert!(res.status.success(), "{}", text(&res.stderr));
    assert!(text(&res.stdout).contains("entropy"));
    out
}

#[test]
fn validate_accepts_shipped_scenarios() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let res = mfg(&["validate", path.to_str().unwrap()]);
        assert!(res.status.success(), "{}: {}", path.display(), text(&res.stderr));
        assert!(text(&res.stdout).contains(": ok"));
    }
}

#[test]
fn invalid_scenarios_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for (from, to) in [
        ("step_size = 0.01", "step_size = 0.0"),
        ("step_size = 0.01", "step_size = -1.0"),
        ("time_steps = 4", "time_steps = 4\nunknown_key = 1"),
        ("kind = \"kl\"", "kind = \"wasserstein\""),
    ] {
        let path = write_scenario(dir.path(), &SMALL.replace(from, to));
        let res = mfg(&["validate", path.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(1), "{to}: {}", text(&res.stderr));
        assert!(text(&res.stderr).starts_with("error: "));
    }
    let path = write_scenario(dir.path(), SMALL);
    let res = mfg(&["solve", path.to_str().unwrap(), "--eta=-0.5", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1), "{}", text(&res.stderr));
    assert_eq!(mfg(&["solve"]).status.code(), Some(1));
}

#[test]
fn missing_files_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(mfg(&["validate", missing.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(mfg(&["report", dir.path().to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(mfg(&["mesh-info", missing.with_extension("off").to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn csv_snapshots_cover_every_step_with_unit_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve(dir.path(), "csv");
    let mesh = make_icosphere::<f64>(2, 1.0);
    let h = mesh.num_vertices();
    for variant in ["vanilla", "entropy"] {
        let mut files: Vec<PathBuf> = fs::read_dir(out.join(variant))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        assert_eq!(files.len(), 5, "n + 1 snapshots");
        assert!(files[0].ends_with("density_000.csv"));
        for file in &files {
            let body = fs::read_to_string(file).unwrap();
            let mut lines = body.lines();
            assert_eq!(lines.next(), Some("vertex_index,x,y,z,density"));
            let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
            assert_eq!(rows.len(), h);
            let density: Vec<f64> = rows.iter().map(|r| r[4]).collect();
            let mass = mesh.mass(&density);
            assert!((mass - 1.0).abs() <= 1e-6, "{}: mass {mass}", file.display());
        }
        assert!(out.join(variant).join("report.json").exists());
    }
    let costs = fs::read_to_string(out.join("costs.csv")).unwrap();
    assert_eq!(costs.lines().count(), 3);
    assert!(costs.starts_with("variant,dynamic,running_interaction"));
    let dumped = fs::read_to_string(out.join("scenario.toml")).unwrap();
    assert_eq!(Scenario::from_toml(&dumped).unwrap().name, "small");

    let res = mfg(&["report", out.to_str().unwrap()]);
    assert!(res.status.success());
    let report = text(&res.stdout);
    assert!(report.starts_with("small: 162 vertices, 320 triangles, n = 4"));
    assert!(report.contains("vanilla") && report.contains("entropy"));
}

#[test]
fn vtk_snapshots_have_consistent_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve(dir.path(), "vtk");
    let body = fs::read_to_string(out.join("vanilla").join("density_004.vtk")).unwrap();
    assert!(body.contains("POINTS 162 "));
    assert!(body.contains("POLYGONS 320 1280"));
    assert!(body.contains("POINT_DATA 162"));
    assert!(body.contains("SCALARS density"));
}

#[test]
fn dump_round_trips() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let res = mfg(&["dump", path.to_str().unwrap()]);
        assert!(res.status.success());
        let original = Scenario::load(&path).unwrap().scenario;
        assert_eq!(Scenario::from_toml(&text(&res.stdout)).unwrap(), original, "{}", path.display());
    }
}

#[test]
fn mesh_info_reports_topology() {
    let res = mfg(&["mesh-info", "icosphere:1"]);
    assert!(res.status.success());
    let out = text(&res.stdout);
    assert!(out.contains("vertices        42"));
    assert!(out.contains("triangles       80"));
    assert!(out.contains("euler           2"));
    assert!(out.contains("boundary edges  0"));

    let grid = text(&mfg(&["mesh-info", "grid:3x2"]).stdout);
    assert!(grid.contains("vertices        12"));
    assert!(grid.contains("boundary edges  10"));

    let dir = tempfile::tempdir().unwrap();
    let off = dir.path().join("tri.off");
    fs::write(&off, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    let single = text(&mfg(&["mesh-info", off.to_str().unwrap()]).stdout);
    assert!(single.contains("triangles       1"));
    assert!(single.contains("total area      0.5"));

    assert_eq!(mfg(&["mesh-info", "grid:3"]).status.code(), Some(1));
}
