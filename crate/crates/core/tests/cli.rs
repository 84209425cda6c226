use std::path::Path;
use std::process::{Command, Output};

fn lowmach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowmach"))
        .args(args)
        .output()
        .unwrap()
}

fn run_in(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    lowmach(&args)
}

fn snapshots(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("snap_"))
        .collect();
    names.sort();
    names
}

#[test]
fn sod_run_writes_log_config_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "--case",
            "riemann",
            "--ni",
            "50",
            "--tend",
            "0.1",
            "--set",
            "output.cadence=0.05",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let snaps = snapshots(tmp.path());
    assert_eq!(
        snaps,
        [
            "snap_riemann_0.000000.csv",
            "snap_riemann_0.050000.csv",
            "snap_riemann_0.100000.csv"
        ]
    );
    let snap = std::fs::read_to_string(tmp.path().join(&snaps[2])).unwrap();
    let mut lines = snap.lines();
    assert_eq!(lines.next(), Some("x,y,rho,u,v,p"));
    assert_eq!(lines.count(), 50);
    let log = std::fs::read_to_string(tmp.path().join("run_log.csv")).unwrap();
    assert!(log.starts_with("step,t,dt,min_p,max_speed,fallback_count\n"));
    let cfg = std::fs::read_to_string(tmp.path().join("config.ini")).unwrap();
    assert!(cfg.contains("name = riemann"));
    assert!(!tmp.path().join("failure.csv").exists());
}

#[test]
fn written_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "--case",
        "uniform_low_mach",
        "--ni",
        "16",
        "--nj",
        "8",
        "--tend",
        "0.05",
        "--seed",
        "7",
    ];
    assert_eq!(run_in(a.path(), &args).status.code(), Some(0));
    let cfg = a.path().join("config.ini");
    let out = run_in(b.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in snapshots(a.path()) {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn config_errors_exit_64_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let cases: [&[&str]; 5] = [
        &["--case", "nowhere"],
        &["--case", "khi", "--cfl", "-0.5"],
        &["--case", "khi", "--solver", "hllc"],
        &["--case", "khi", "--set", "time.nonsense=1"],
        &["--case", "khi", "--ni", "0"],
    ];
    for args in cases {
        let out = run_in(&dir, args);
        assert_eq!(out.status.code(), Some(64), "{args:?}");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
        assert!(!dir.exists(), "{args:?} created output");
    }
    assert_eq!(lowmach(&["run", "--bogus"]).status.code(), Some(64));
    assert_eq!(lowmach(&["run"]).status.code(), Some(64));
}

#[test]
fn unwritable_output_exits_74() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let out = run_in(
        &file.join("sub"),
        &["--case", "riemann", "--ni", "10", "--tend", "0.01"],
    );
    assert_eq!(out.status.code(), Some(74));
}

#[test]
fn dry_run_prints_resolved_config() {
    let out = lowmach(&["run", "--case", "khi", "--integrator", "ab2", "--dry-run"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("integrator = ab2"));
    assert!(text.contains("[grid]"));
}

#[test]
fn list_cases_names_every_builtin() {
    let out = lowmach(&["list-cases"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "blunt_body",
        "cylinder",
        "khi",
        "riemann",
        "rmi",
        "uniform_low_mach",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn stability_and_spectrum_csv() {
    let out = lowmach(&["stability", "--method", "euler", "--samples", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind,method,re,im"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 4);
        let (re, im): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert!(((re + 1.0).hypot(im) - 1.0).abs() < 1e-10);
    }

    let out = lowmach(&["spectrum", "--n", "8", "--eps", "1"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 9);
    assert_eq!(lowmach(&["stability", "--method", "rk9"]).status.code(), Some(64));

    let out = lowmach(&["maxcfl", "--method", "ab2"]);
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 0.5).abs() < 1e-3, "{v}");
}
