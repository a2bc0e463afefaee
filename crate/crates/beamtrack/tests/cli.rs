//! End-to-end contracts of the installed binary: exit codes, diagnostics,
//! override echoing, and byte-level determinism of the data files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beamtrack"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("beamtrack_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

// Small, fast profile shared by the tests below.
fn fast_args(out_dir: &Path) -> Vec<String> {
    vec![
        "--out".into(),
        out_dir.display().to_string(),
        "--episodes".into(),
        "2".into(),
        "--set".into(),
        "run.horizon=40".into(),
        "--set".into(),
        "policy.mi_table_points=21".into(),
    ]
}

#[test]
fn missing_config_file_fails_with_path() {
    let out = bin()
        .args(["simulate", "--config", "/no/such/config.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("/no/such/config.toml"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn unknown_config_key_fails_by_name() {
    let dir = tmp("unknown_key");
    let out = bin()
        .arg("simulate")
        .args(fast_args(&dir))
        .args(["--set", "policy.gama=0.5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("gama"), "stderr: {}", stderr(&out));
}

#[test]
fn simulate_echoes_overrides_and_is_byte_deterministic() {
    let dir_a = tmp("det_a");
    let dir_b = tmp("det_b");
    for dir in [&dir_a, &dir_b] {
        let out = bin()
            .arg("simulate")
            .args(fast_args(dir))
            .args(["--set", "policy.gamma=0.005", "--quiet"])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    let csv_a = std::fs::read(dir_a.join("episodes.csv")).unwrap();
    let csv_b = std::fs::read(dir_b.join("episodes.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "episode CSVs must be byte-identical");
    let json_a = std::fs::read(dir_a.join("metrics.json")).unwrap();
    let json_b = std::fs::read(dir_b.join("metrics.json")).unwrap();
    assert_eq!(json_a, json_b);

    let doc: serde_json::Value = serde_json::from_slice(&json_a).unwrap();
    assert_eq!(doc["config"]["policy"]["gamma"], 0.005);
    assert_eq!(doc["seed"], 7);
}

#[test]
fn config_file_and_mitable_cache_round_trip() {
    let dir = tmp("config_file");
    let config_path = dir.join("exp.toml");
    std::fs::write(
        &config_path,
        "[run]\nhorizon = 30\nepisodes = 2\nseed = 11\n\n[policy]\nmi_table_points = 21\n",
    )
    .unwrap();

    // Build the cache, then simulate against it.
    let out = bin()
        .args(["mitable", "--config"])
        .arg(&config_path)
        .args(["--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let cache = dir.join("mitable.csv");
    assert!(cache.is_file());

    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .args(["--out"])
        .arg(&dir)
        .args(["--mitable"])
        .arg(&cache)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["run"]["seed"], 11);

    // A cache built for a different σ² must be rejected.
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config_path)
        .args(["--set", "channel.snr_db=20", "--out"])
        .arg(&dir)
        .args(["--mitable"])
        .arg(&cache)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("table"), "stderr: {}", stderr(&out));
}

#[test]
fn sweep_and_plot_pipeline() {
    let dir = tmp("sweep_plot");
    let out = bin()
        .arg("sweep")
        .args(fast_args(&dir))
        .args([
            "--axis",
            "gamma",
            "--values",
            "0.01,0.3",
            "--algorithms",
            "proposed,scan-wide",
            "--quiet",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let sweep_csv = dir.join("sweep.csv");
    let text = std::fs::read_to_string(&sweep_csv).unwrap();
    let data_rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .count();
    assert_eq!(data_rows, 1 + 4, "header + 2 values × 2 algorithms");

    let out = bin()
        .arg("plot")
        .arg(&sweep_csv)
        .args(["--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for name in ["sweep_overhead.svg", "sweep_gain.svg", "sweep_se.svg"] {
        let svg = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("scan-wide"));
    }
}

#[test]
fn sweep_requires_two_values() {
    let dir = tmp("sweep_short");
    let out = bin()
        .arg("sweep")
        .args(fast_args(&dir))
        .args(["--axis", "gamma", "--values", "0.3"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("2 sweep values"));
}

#[test]
fn plot_rejects_empty_and_malformed_csv() {
    let dir = tmp("plot_bad");
    let empty = dir.join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = bin().arg("plot").arg(&empty).output().unwrap();
    assert!(!out.status.success());

    let junk = dir.join("junk.csv");
    std::fs::write(&junk, "a,b,c\n1,2,3\n").unwrap();
    let out = bin().arg("plot").arg(&junk).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn episode_plot_pipeline() {
    let dir = tmp("episode_plot");
    let out = bin()
        .arg("simulate")
        .args(fast_args(&dir))
        .arg("--quiet")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let out = bin()
        .arg("plot")
        .arg(dir.join("episodes.csv"))
        .args(["--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(dir.join("episodes_gain.svg").is_file());
    assert!(dir.join("episodes_trace.svg").is_file());
}

#[test]
fn codebook_export_has_the_documented_columns() {
    let dir = tmp("codebook");
    let out = bin()
        .args(["codebook", "--out"])
        .arg(&dir)
        .arg("--quiet")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(dir.join("codebook.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "level,index,bin,gain_sq,phase_rad");
    // 126 beams × 64 bins data rows
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .count()
        - 1;
    assert_eq!(rows, 126 * 64);
}

#[test]
fn posterior_trace_export() {
    let dir = tmp("trace");
    let out = bin()
        .arg("simulate")
        .args([
            "--out",
            &dir.display().to_string(),
            "--episodes",
            "1",
            "--set",
            "run.horizon=40",
            "--set",
            "policy.mi_table_points=21",
            "--trace-posterior",
            "--quiet",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(dir.join("posterior_trace.csv")).unwrap();
    let data: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .collect();
    // header + horizon × Δ rows
    assert_eq!(data.len(), 1 + 40 * 64);
    assert_eq!(data[0], "episode,t,bin,prob");
    // each slot's belief sums to one
    let first_slot: f64 = data[1..=64]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((first_slot - 1.0).abs() < 1e-9);
}
