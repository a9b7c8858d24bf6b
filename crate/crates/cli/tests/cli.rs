//! End-to-end tests of the `manifold-ddm` binary: flag validation and exit
//! codes, CSV shape, determinism, the memory guard, and config-file merging.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_manifold-ddm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("manifold-ddm-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn rejects_radius_below_one() {
    let out = run(&["solve", "--manifold", "s4", "--r", "0.5", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("r > 1"), "stderr: {}", stderr(&out));
}

#[test]
fn requires_manifold() {
    let out = run(&["solve", "--r", "1.2", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--manifold"));
}

#[test]
fn rejects_unknown_flag() {
    let out = run(&["solve", "--manifold", "s4", "--r", "1.2", "--n", "4", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn memory_guard_refuses_oversized_run() {
    let out = run(&[
        "solve", "--manifold", "s4", "--r", "1.2", "--n", "40", "--mem-cap-gib", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("cap"));
}

#[test]
fn small_study_emits_csv_row() {
    let out = run(&["solve", "--manifold", "s4", "--r", "2.0", "--n", "4", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let csv = stdout(&out);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "manifold,n,h,r,b,cg_tol,quad,linf,l2,l2_flat,h1_semi,h1_semi_metric,energy,n0,cg_total,wall_seconds"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 16);
    assert_eq!(row[0], "s4");
    assert_eq!(row[1], "4");
    assert_eq!(row[2], "1.00000e0"); // h = 2r/N = 1
    assert_eq!(row[4], "1.00000e0"); // default b for s4
    assert!(lines.next().is_none());
    // progress log goes to stderr
    assert!(stderr(&out).contains("sweep"));
}

#[test]
fn csv_is_deterministic_modulo_wall_clock() {
    let args = ["solve", "--manifold", "s4", "--r", "2.0", "--n", "4", "--threads", "1"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let strip_wall = |csv: String| -> Vec<String> {
        csv.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
            .collect()
    };
    assert_eq!(strip_wall(stdout(&a)), strip_wall(stdout(&b)));
}

#[test]
fn out_flag_writes_file() {
    let path = tmp_path("out.csv");
    let out = run(&[
        "solve", "--manifold", "s4", "--r", "2.0", "--n", "4", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("manifold,"));
    assert_eq!(csv.lines().count(), 2);
    std::fs::remove_file(&path).ok();
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let path = tmp_path("config.txt");
    std::fs::write(&path, "manifold = s4\nr = 2.0\nn = 8 # comment\nmax_sweeps = 200\n").unwrap();
    // flag --n overrides the file's n = 8
    let out = run(&[
        "solve", "--config", path.to_str().unwrap(), "--n", "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let csv = stdout(&out);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "4");
    std::fs::remove_file(&path).ok();
}

#[test]
fn config_file_rejects_unknown_keys() {
    let path = tmp_path("bad-config.txt");
    std::fs::write(&path, "manifold = s4\nwibble = 3\n").unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap(), "--r", "2.0", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("wibble"));
    std::fs::remove_file(&path).ok();
}
