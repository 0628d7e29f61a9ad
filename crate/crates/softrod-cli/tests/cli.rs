//! End-to-end checks of the command-line interface: subcommands, exit
//! codes, and the exported file layout.

use std::process::Command;

fn softrod() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softrod"))
}

#[test]
fn write_config_round_trips_through_static_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("scenario.toml");
    let status = softrod()
        .args(["write-config", "--path"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(config_path.exists());

    let out = dir.path().join("sweep");
    let output = softrod()
        .args(["static-sweep", "--config"])
        .arg(&config_path)
        .args(["--case", "a", "--start-bar", "0.2", "--end-bar", "0.3", "--step-bar", "0.1"])
        .args(["--nodes", "25", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let tcp = std::fs::read_to_string(out.join("static_case_a_tcp.csv")).unwrap();
    assert!(tcp.starts_with("pressure_bar,status,"));
    assert_eq!(tcp.lines().count(), 3, "header + two levels");
    let backbone = std::fs::read_to_string(out.join("static_case_a_backbone.csv")).unwrap();
    assert!(backbone.starts_with("t,node_index,s,x,y,z,h1,h2,h3,h4,P1,P2,P3,iters,step_wall_ms"));
}

#[test]
fn dynamic_run_exports_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let output = softrod()
        .args(["dynamic", "--nodes", "25", "--timeframe", "0.1", "--scheme", "bdf1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,node_index,s,x,y,z,h1,h2,h3,h4,P1,P2,P3,iters,step_wall_ms"
    );
    // 4 frames (t = 0 plus 3 steps) at 25 nodes each.
    assert_eq!(lines.count(), 4 * 25);
}

#[test]
fn unstable_scheme_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let output = softrod()
        .args(["dynamic", "--scheme", "trapezoidal", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stderr).contains("instability"));
}

#[test]
fn malformed_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    std::fs::write(&config_path, "[discretization]\nnoodles = 3\n").unwrap();
    let output = softrod()
        .args(["dynamic", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("noodles"));
}

#[test]
fn rpe_fit_reports_slope() {
    let dir = tempfile::tempdir().unwrap();
    let output = softrod()
        .args(["rpe-fit", "--start-bar", "0.2", "--end-bar", "0.3", "--step-bar", "0.05", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("v3 = "));
    assert!(dir.path().join("rpe_fit.csv").exists());
}

#[test]
fn benchmark_caches_its_reference() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        softrod()
            .args([
                "benchmark",
                "--timeframe",
                "0.2",
                "--initial-state",
                "static",
                "--out",
            ])
            .arg(dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(dir.path().join("benchmark.csv").exists());
    assert!(dir.path().join("benchmark.txt").exists());
    let cached: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("reference_cache_"))
        .collect();
    assert_eq!(cached.len(), 1, "one reference cache file");
    let second = run();
    assert_eq!(second.status.code(), Some(0));
    assert!(
        String::from_utf8_lossy(&second.stdout).contains("reference loaded from cache"),
        "second run must reuse the cache"
    );
}
