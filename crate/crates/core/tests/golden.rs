//! Byte-level golden files for experiment outputs. Set `UPDATE_GOLDEN=1` to
//! rewrite the expected files after an intentional change.

use std::fs;
use std::path::{Path, PathBuf};

use topoprov::experiment::{run_experiment, ExperimentConfig, ExperimentReport};

const CONFIGS: &[&str] = &["fig4_small", "fig5", "fig6_small", "fig7_small", "fig9_small", "delay", "custom_mssp"];

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run(name: &str, threads: usize) -> ExperimentReport {
    let cfg = ExperimentConfig::load(&golden_dir().join(format!("{name}.cfg"))).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| run_experiment(&cfg)).unwrap()
}

/// Every file of a report except the manifest, which records wall time.
fn artifacts(r: &ExperimentReport) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = r.tables.iter().map(|t| (format!("{}.csv", t.name), t.to_csv())).collect();
    out.push((format!("{}.gp", r.manifest.experiment), r.plot_script.clone()));
    out.extend(r.attachments.iter().cloned());
    out
}

#[test]
fn outputs_match_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for name in CONFIGS {
        let report = run(name, 2);
        let dir = golden_dir().join("expected").join(name);
        if update {
            fs::create_dir_all(&dir).unwrap();
        }
        for (file, body) in artifacts(&report) {
            let path = dir.join(&file);
            if update {
                fs::write(&path, &body).unwrap();
                continue;
            }
            let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(want == body, "{name}/{file} differs from golden copy");
        }
    }
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    for name in ["fig4_small", "fig7_small"] {
        let a = run(name, 1);
        let b = run(name, 3);
        assert_eq!(artifacts(&a), artifacts(&b), "{name}");
        assert_eq!(a.manifest.config_hash, b.manifest.config_hash);
    }
}

#[test]
fn written_directory_holds_manifest_and_tables() {
    let report = run("delay", 1);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("delay");
    let files = report.write(&out).unwrap();
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains(&format!("config_sha256 = {}", report.manifest.config_hash)));
    assert!(manifest.contains("seed = 1"));
    for f in files {
        assert!(out.join(&f).is_file(), "{f}");
    }
    assert_eq!(fs::read_to_string(out.join("delay.csv")).unwrap(), report.table("delay").unwrap().to_csv());
}
