use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn drlimac(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drlimac"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, topology: &str, mode: &str) -> String {
    let path = dir.join(name);
    fs::write(
        &path,
        format!(
            r#"{{"name": "{topology}", "topology": "{topology}", "loads": 0.2, "mode": "{mode}",
                "epochs": 20, "packets_per_epoch": 200, "seed": 3}}"#
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_tables_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "line3.json", "line3", "drli-mac");
    let stdout = ok(&drlimac(&["run", &cfg, "--out-dir", "o", "--trace", "--epochs", "12"], dir.path()));
    assert!(stdout.contains("S = "));
    let o = dir.path().join("o");
    for f in ["epochs.csv", "network.csv", "learning.csv", "summary.csv", "transmissions.csv", "ledgers.csv", "convergence.svg"] {
        assert!(o.join(f).exists(), "{f} missing");
    }
    let epochs = fs::read_to_string(o.join("epochs.csv")).unwrap();
    assert_eq!(epochs.lines().count(), 1 + 3 * 12);
    let tx = fs::read_to_string(o.join("transmissions.csv")).unwrap();
    assert!(tx.starts_with("run,time,sender,receiver,outcome\n"));
}

#[test]
fn seed_flag_controls_output_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", "line3", "drli-mac");
    ok(&drlimac(&["run", &cfg, "--out-dir", "a", "--seed", "9"], dir.path()));
    ok(&drlimac(&["run", &cfg, "--out-dir", "b", "--seed", "9"], dir.path()));
    ok(&drlimac(&["run", &cfg, "--out-dir", "c", "--seed", "10"], dir.path()));
    let read = |d: &str| fs::read(dir.path().join(d).join("epochs.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn ground_truth_flag_switches_information_source() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", "line3", "drli-mac");
    ok(&drlimac(&["run", &cfg, "--out-dir", "gt", "--ground-truth-info"], dir.path()));
    let text = fs::read_to_string(dir.path().join("gt/epochs.csv")).unwrap();
    let mut rdr = text.lines();
    let header: Vec<&str> = rdr.next().unwrap().split(',').collect();
    let col = |name| header.iter().position(|h| *h == name).unwrap();
    let (s, k) = (col("throughput"), col("known_throughput"));
    for line in rdr {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[s], f[k]);
    }
}

#[test]
fn sweep_then_replot_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", "line3", "aloha-baseline");
    let stdout = ok(&drlimac(&["sweep", &cfg, "--grid", "0.05:0.5:0.05", "--out-dir", "s"], dir.path()));
    assert_eq!(stdout.matches("S = ").count(), 10);
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10 * 3);
    let original = fs::read(dir.path().join("s/load-throughput.svg")).unwrap();
    ok(&drlimac(&["plot", "s/sweep.csv", "--kind", "load-throughput", "--out-dir", "p"], dir.path()));
    assert_eq!(fs::read(dir.path().join("p/load-throughput.svg")).unwrap(), original);
}

#[test]
fn sweep_both_modes_and_node_subset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", "line3", "aloha-baseline");
    ok(&drlimac(
        &["sweep", &cfg, "--grid", "0.1,0.4", "--nodes", "1", "--both-modes", "--out-dir", "s"],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 3);
    assert!(csv.contains("line3 aloha-baseline") && csv.contains("line3 drli-mac"));
}

#[test]
fn surface_and_replot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", "line4", "aloha-baseline");
    let stdout = ok(&drlimac(
        &["surface", &cfg, "--g14", "0.1,0.2,0.3", "--g23", "0.1:0.3:0.1", "--out-dir", "f"],
        dir.path(),
    ));
    assert!(stdout.contains("max S"));
    let csv = fs::read_to_string(dir.path().join("f/surface.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
    let original = fs::read(dir.path().join("f/surface.svg")).unwrap();
    ok(&drlimac(&["plot", "f/surface.csv", "--kind", "surface"], dir.path()));
    assert_eq!(fs::read(dir.path().join("f/surface.svg")).unwrap(), original);

    let wrong = write_config(dir.path(), "w.json", "line3", "aloha-baseline");
    assert!(!drlimac(&["surface", &wrong, "--g14", "0.1", "--g23", "0.1"], dir.path()).status.success());
}

#[test]
fn degrade_over_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("set");
    fs::create_dir(&set).unwrap();
    write_config(&set, "a.json", "line3", "aloha-baseline");
    write_config(&set, "b.json", "star5", "aloha-baseline");
    fs::write(set.join("notes.txt"), "ignored").unwrap();
    let stdout = ok(&drlimac(&["degrade", "set", "--grid", "0.1,0.3", "--out-dir", "d"], dir.path()));
    assert_eq!(stdout.matches("max two-hop degree").count(), 2);
    for f in ["degradation.csv", "sweep.csv", "collision.csv", "load-throughput.svg"] {
        assert!(dir.path().join("d").join(f).exists(), "{f} missing");
    }
}

#[test]
fn degrade_over_a_json_array() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("set.json"),
        r#"[{"topology": "line3", "loads": 0.2, "mode": "aloha-baseline", "epochs": 5, "packets_per_epoch": 100}]"#,
    )
    .unwrap();
    ok(&drlimac(&["degrade", "set.json", "--grid", "0.2"], dir.path()));
    assert!(dir.path().join("out/degradation.csv").exists());
    fs::write(dir.path().join("empty.json"), "[]").unwrap();
    assert!(!drlimac(&["degrade", "empty.json"], dir.path()).status.success());
}

#[test]
fn errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", "line3", "aloha-baseline");
    let bad_grid = drlimac(&["sweep", &cfg, "--grid", "0.5:0.1:0.1"], dir.path());
    assert!(!bad_grid.status.success());
    assert!(!drlimac(&["run", "missing.json"], dir.path()).status.success());
    assert!(!drlimac(&["plot", "missing.csv", "--kind", "surface"], dir.path()).status.success());
    assert!(!drlimac(&["plot", &cfg, "--kind", "pie"], dir.path()).status.success());

    // a header-only CSV is an empty result set
    fs::write(dir.path().join("empty.csv"), "run,epoch,network_throughput\n").unwrap();
    let out = drlimac(&["plot", "empty.csv", "--kind", "convergence"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
    fs::write(dir.path().join("bad.json"), r#"{"topology": "line3", "loads": 0.2, "epochs": 0}"#).unwrap();
    assert!(!drlimac(&["run", "bad.json"], dir.path()).status.success());
}
