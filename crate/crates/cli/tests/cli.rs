use std::fs;
use std::process::Command;

fn relaybeam() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relaybeam"))
}

const SMALL: &str = "monte_carlo_runs = 2\n\
                     [topology]\nnode_count = 12\nside = 40.0\nnominal_aues = 2\n\
                     [swarm]\nparticles = 4\niterations = 5\n";

#[test]
fn simulate_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("scenario.toml");
    fs::write(&config, SMALL).unwrap();
    let out = tmp.path().join("out");
    let status = relaybeam()
        .args(["simulate", "--mac", "all-on", "--iters", "3", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("n2-all-on"), "{stdout}");

    for f in ["summary.json", "trace.csv", "topology.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 4);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"]["mac"], "all-on");
    assert_eq!(summary["scenario"]["swarm"]["iterations"], 3);
}

#[test]
fn sweep_runs_every_cell() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("base.toml"), SMALL).unwrap();
    let grid = tmp.path().join("grid.toml");
    fs::write(
        &grid,
        "base_config = \"base.toml\"\nnominal_aues = [1, 2]\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let status = relaybeam()
        .arg("sweep")
        .arg("--grid")
        .arg(&grid)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
    for cell in ["n1-tdma", "n1-all-on", "n2-tdma", "n2-all-on"] {
        assert!(out.join(cell).join("summary.json").exists(), "{cell}");
    }
}

#[test]
fn failing_cell_sets_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("base.toml"), SMALL).unwrap();
    let grid = tmp.path().join("grid.toml");
    fs::write(
        &grid,
        "base_config = \"base.toml\"\nnominal_aues = [1, 40]\nmacs = [\"tdma\"]\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let res = relaybeam()
        .arg("sweep")
        .arg("--grid")
        .arg(&grid)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("n40-tdma"));
    assert!(out.join("n1-tdma").join("summary.json").exists());
    assert!(out.join("summary.csv").exists());
}

#[test]
fn bad_input_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "[swarm]\nparticles = 0\n").unwrap();
    let res = relaybeam()
        .args(["simulate", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("error"));

    let res = relaybeam()
        .args(["simulate", "--mac", "csma"])
        .output()
        .unwrap();
    assert!(!res.status.success());
    let res = relaybeam()
        .args(["sweep", "--grid", "/nonexistent/grid.toml"])
        .output()
        .unwrap();
    assert!(!res.status.success());
}
