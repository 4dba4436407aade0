use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn circnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circnet")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value printed after `key` on a summary line.
fn field(out: &str, key: &str) -> Vec<f64> {
    let line = out.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no `{key}` in\n{out}"));
    line[key.len()..].split_whitespace().filter_map(|t| t.parse().ok()).collect()
}

#[test]
fn principal_moebius_on_torus_is_exact() {
    let o = circnet(&[
        "principal",
        "--surface",
        "torus:R=2,r=1",
        "--uv",
        "0.3,0.7",
        "--eps",
        "0.05",
        "--method",
        "moebius",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let errs = field(&stdout(&o), "angle_err");
    assert_eq!(errs.len(), 2);
    assert!(errs.iter().all(|e| *e < 1e-6), "{errs:?}");
}

#[test]
fn principal_at_umbilic_exits_2() {
    let o = circnet(&["principal", "--surface", "sphere", "--uv", "0.5,0.5", "--eps", "0.05"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("UmbilicRegion"), "{}", stderr(&o));
}

#[test]
fn principal_euclidean_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est.json");
    let o = circnet(&[
        "principal",
        "--surface",
        "cubic-graph",
        "--eps",
        "0.05",
        "--method",
        "euclidean",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["dir1", "dir2", "angle_err_1", "angle_err_2", "eps_eff"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn circular_net_on_torus() {
    let dir = tempfile::tempdir().unwrap();
    let o = circnet(&[
        "build-net",
        "--kind",
        "circular",
        "--surface",
        "torus:R=2,r=1",
        "--eps",
        "0.05",
        "--n",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let obj = fs::read_to_string(dir.path().join("net.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 21 * 21);
    assert!(field(&stdout(&o), "max circularity")[0] < 1e-8);
    assert!(dir.path().join("net.json").exists());
    assert!(fs::read_to_string(dir.path().join("deviations.csv")).unwrap().starts_with("i,j,du,dv,dist,sublattice"));
}

#[test]
fn projection_net_on_revolve_is_planar() {
    let dir = tempfile::tempdir().unwrap();
    let o = circnet(&[
        "build-net",
        "--kind",
        "projection",
        "--surface",
        "revolve",
        "--eps",
        "0.05",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(field(&stdout(&o), "max planarity")[0] < 1e-12);
}

#[test]
fn onsurface_net_at_parabolic_point_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = circnet(&[
        "build-net",
        "--kind",
        "onsurface",
        "--surface",
        "cylinder-graph",
        "--eps",
        "0.05",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ParabolicPoint"), "{}", stderr(&o));
}

#[test]
fn unknown_experiment_exits_2() {
    let o = circnet(&["sweep", "--experiment", "nonexistent"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("UnknownExperiment"));
}

#[test]
fn non_positive_eps_is_rejected() {
    let o = circnet(&["principal", "--surface", "torus", "--eps", "-0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

fn sweep_into(dir: &Path) -> Output {
    circnet(&["sweep", "--experiment", "thm5-circular-fourth", "--out", dir.to_str().unwrap()])
}

#[test]
fn sweep_writes_reproducible_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = sweep_into(a.path());
    assert!(oa.status.success(), "{}", stderr(&oa));
    assert!(stdout(&oa).contains("thm5-circular-fourth PASS"));
    assert!(sweep_into(b.path()).status.success());
    for name in ["thm5-circular-fourth.csv", "thm5-circular-fourth.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn sweep_lists_experiments() {
    let o = circnet(&["sweep", "--list"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("lemma1-bisectors") && out.contains("primitives"));
}
