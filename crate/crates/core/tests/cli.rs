use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn topoprov(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topoprov")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn learn_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let g = topoprov(&["generate", "--nodes", "10", "--edges", "16", "--seed", "4"], p);
    assert!(g.status.success());
    fs::write(p.join("g.topo"), &g.stdout).unwrap();
    let k = topoprov(&["keygen", "--nodes", "10", "--seed", "9"], p);
    fs::write(p.join("keys.txt"), &k.stdout).unwrap();

    // a filter this large essentially never misfires
    let o = topoprov(
        &["learn-ssmp", "--graph", "g.topo", "--keys", "keys.txt", "--m", "1024", "--k", "8", "--runs", "3", "--learned", "l.topo"],
        p,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "run,seq,false_positive,extra_edges");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(2) == Some("0")));
    assert_eq!(fs::read_to_string(p.join("l.topo")).unwrap(), fs::read_to_string(p.join("g.topo")).unwrap());

    let o = topoprov(&["learn-mssp", "--graph", "g.topo", "--m", "16", "--k", "4", "--runs", "2"], p);
    assert!(o.status.success());
    // a 16-bit shared filter is saturated: every run reports extra edges
    assert!(stdout(&o).lines().skip(1).all(|l| l.split(',').nth(2) == Some("1")));
}

#[test]
fn short_key_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("g.topo"), stdout(&topoprov(&["generate", "--nodes", "6", "--edges", "7"], p))).unwrap();
    fs::write(p.join("keys.txt"), stdout(&topoprov(&["keygen", "--nodes", "4"], p))).unwrap();
    let o = topoprov(&["learn-ssmp", "--graph", "g.topo", "--keys", "keys.txt"], p);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn payload_single_packet_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("line.topo"), "n 4 dest 3\n0 1\n1 2\n2 3\n").unwrap();
    let o = topoprov(&["payload", "--graph", "line.topo", "--path", "0,1,2,3", "--h", "3", "--m", "32", "--k", "2"], p);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("outcome = recovered 0,1,2,3"), "{out}");
    assert!(out.lines().next().unwrap().starts_with("packet = 0000"));

    let o = topoprov(
        &["payload", "--random", "20", "34", "--mode", "dde", "--beta", "1..3", "--topology", "complete", "--k", "3", "--trials", "300"],
        p,
    );
    assert!(o.status.success());
    let rows: Vec<Vec<String>> =
        stdout(&o).lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 3);
    let errors: Vec<u64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[0] >= w[1]));

    let o = topoprov(&["payload", "--random", "20", "34", "--no-chain", "--k", "3", "--trials", "300"], p);
    assert!(o.status.success());
}

#[test]
fn analyze_optimize_simulate_delay_emit_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = topoprov(&["analyze", "--random", "8", "14", "--scheme", "mssp", "--m", "224", "--k", "1..3"], p);
    assert_eq!(stdout(&o).lines().next(), Some("scheme,m,k,beta,fpr_exact,fpr_bound"));
    assert_eq!(stdout(&o).lines().count(), 4);

    let o = topoprov(
        &["optimize", "--scheme", "ssmp-equal", "--msum", "280", "--profile", "5,3,4,1,4,2,4", "--rsu", "5", "--scan", "scan.csv"],
        p,
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("m = 40,40,40,40,40,40,40"));
    assert!(fs::read_to_string(p.join("scan.csv")).unwrap().starts_with("k,objective\n"));

    let o = topoprov(&["simulate", "--random", "8", "14", "--k", "3", "--trials", "200"], p);
    assert_eq!(stdout(&o).lines().next(), Some("k,fpr,stderr"));

    let o = topoprov(&["delay", "--random", "10", "26"], p);
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("phase,component,seconds"));
    assert!(out.contains("mssp,total,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let infeasible = topoprov(&["optimize", "--scheme", "ssmp-var", "--msum", "20", "--profile", "2,2,2", "--rsu", "2"], p);
    assert_eq!(infeasible.status.code(), Some(2));
    assert_eq!(topoprov(&["generate", "--nodes", "5", "--edges", "2"], p).status.code(), Some(2));
    assert_eq!(topoprov(&["frobnicate"], p).status.code(), Some(1));
    assert_eq!(topoprov(&["--help"], p).status.code(), Some(0));
}

#[test]
fn experiment_writes_directory_or_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.cfg"), "experiment = fig4\nk = 1..oops\n").unwrap();
    let o = topoprov(&["experiment", "--config", "bad.cfg", "--out", "bad"], p);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.cfg:2"));
    assert!(!p.join("bad").exists());
    assert_eq!(fs::read_dir(p).unwrap().count(), 1);

    fs::write(p.join("ok.cfg"), "experiment = fig4\nk = 1..5\nm = 32\n").unwrap();
    let o = topoprov(&["experiment", "--config", "ok.cfg", "--out", "ok", "--check"], p);
    assert!(o.status.success());
    for f in ["fig4.csv", "fig4.gp", "manifest.txt", "checks.txt", "fixture.topo"] {
        assert!(p.join("ok").join(f).is_file(), "{f}");
    }
    let first = fs::read_to_string(p.join("ok/fig4.csv")).unwrap();
    topoprov(&["experiment", "--config", "ok.cfg", "--out", "ok"], p);
    assert_eq!(first, fs::read_to_string(p.join("ok/fig4.csv")).unwrap());
}

#[test]
fn failing_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // MSSP beats SSMP at this k on the default fixture, so the ordering check fails
    fs::write(p.join("f6.cfg"), "experiment = fig6\nk = 10\ntrials = 0\n").unwrap();
    let o = topoprov(&["experiment", "--config", "f6.cfg", "--out", "f6", "--check"], p);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(p.join("f6/checks.txt").is_file());
}
