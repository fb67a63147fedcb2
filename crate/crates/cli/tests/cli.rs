use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn peridyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peridyn")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_command_is_deterministic() {
    let root = tempfile::tempdir().unwrap();
    for cmd in ["validate", "dispersion", "evolve", "ray-scan", "kernels", "compare"] {
        let a = root.path().join(format!("{cmd}-a"));
        let b = root.path().join(format!("{cmd}-b"));
        for dir in [&a, &b] {
            let out = peridyn(&[cmd, "--out", &out_arg(dir)]);
            assert_eq!(
                out.status.code(),
                Some(0),
                "{cmd}: {}",
                String::from_utf8_lossy(&out.stdout)
            );
        }
        let (ta, tb) = (tree(&a), tree(&b));
        assert_eq!(ta, tb, "{cmd} output differs between runs");
        assert!(ta.iter().any(|(n, _)| n == "summary.json"));
    }
}

#[test]
fn csvs_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    assert!(peridyn(&["dispersion", "--out", &out_arg(dir.path())]).status.success());
    let text = fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi,fourier_j,phi,omega,psi,psi_prime"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 6);
    assert_eq!(first[0], "-5.0000000000000000e0");
    assert_eq!(text.lines().count(), 202);
}

#[test]
fn summary_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    assert!(peridyn(&["validate", "--out", &out_arg(dir.path())]).status.success());
    let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"command\": \"validate\""));
    assert!(summary.contains("\"passed\": true"));
    assert!(summary.contains("\"operator_consistency\""));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = peridyn(&["evolve", "--out", &out_arg(dir.path()), "--tolerance-scale", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"passed\": false"));
}

#[test]
fn invalid_config_lists_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[kernel]\nwidth = -1.0\n[evolve]\nn = 1000\nspeed = 3\n").unwrap();
    let out = peridyn(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for key in ["kernel.width", "evolve.n", "evolve.speed"] {
        assert!(err.contains(key), "{key} missing from: {err}");
    }
}

#[test]
fn stage_failure_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, "[evolve]\ntimes = [50.0]\nn = 256\ndx = 0.125\n").unwrap();
    let out = peridyn(&[
        "evolve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("evolve:") && err.contains("too small"), "{err}");
    let summary = fs::read_to_string(dir.path().join("o/summary.json")).unwrap();
    assert!(summary.contains("too small"));
}

#[test]
fn relative_table_path_resolves_against_config() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..=400)
        .map(|i| {
            let x = -5.0 + i as f64 * 0.025;
            format!("{x},{}\n", (-x * x).exp())
        })
        .collect();
    fs::write(dir.path().join("kernel.csv"), format!("x,j\n{rows}")).unwrap();
    let cfg = dir.path().join("tab.toml");
    fs::write(&cfg, "[kernel]\nfamily = \"tabulated\"\ntable = \"kernel.csv\"\n").unwrap();
    let out = peridyn(&[
        "dispersion",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(&dir.path().join("o")),
    ]);
    assert!(
        out.status.code().is_some_and(|c| c < 2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
