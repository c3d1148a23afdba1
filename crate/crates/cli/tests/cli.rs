//! End-to-end tests of the `dtc` binary: exit codes, file outputs,
//! overrides, sweeps, and the preset registry.

use std::path::Path;
use std::process::{Command, Output};

use dtc_cli::config::RunConfig;
use dtc_cli::runner::simulate;

fn dtc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtc"))
        .args(args)
        .current_dir(dir)
        .env_remove("DTC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn list_presets_names_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = dtc(&["list-presets"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for needle in [
        "fig2-perfect",
        "fig2-fermion-imperfect",
        "fig2-boson-imperfect",
        "fig4-noninteracting-ideal-lossless",
        "fig4-interacting-inhomogeneous-noisy",
    ] {
        assert!(text.contains(needle), "missing {needle} in:\n{text}");
    }
}

#[test]
fn run_preset_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dtc(
        &["run", "--preset", "fig2-perfect", "--out-dir", "."],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    for suffix in [
        "timeseries.csv",
        "spectrum.csv",
        "peaks.json",
        "metadata.json",
    ] {
        let path = dir.path().join(format!("fig2-perfect_{suffix}"));
        assert!(path.exists(), "missing {}", path.display());
    }
    let peaks: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig2-perfect_peaks.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(peaks["peak_frequency_over_fd"].as_f64().unwrap(), 0.5);
    assert!(peaks["subharmonic_weight"].as_f64().unwrap() > 0.9);
    assert!(!peaks["split_detected"].as_bool().unwrap());

    // the time-series header is part of the file contract
    let csv = std::fs::read_to_string(dir.path().join("fig2-perfect_timeseries.csv")).unwrap();
    assert!(csv.starts_with("t,t_over_td,m_normalized,m_raw,overlap\n"));
    // 64 periods × 32 samples + the initial sample
    assert_eq!(csv.lines().count(), 1 + 64 * 32 + 1);
}

#[test]
fn metadata_records_every_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = dtc(
        &["run", "--preset", "fig2-perfect", "--out-dir", "."],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig2-perfect_metadata.json")).unwrap(),
    )
    .unwrap();
    let config = &meta["config"];
    // defaults are materialized
    assert_eq!(config["schedule"]["sample_rate"].as_u64().unwrap(), 32);
    assert_eq!(config["model"]["alpha"].as_array().unwrap().len(), 4);
    assert_eq!(
        config["noise"]["channels"].as_array().unwrap()[0],
        serde_json::json!("relaxation")
    );
    assert_eq!(config["seed"].as_u64().unwrap(), 0);
    assert!(meta["units"]["zeta"].is_string());
    assert!(meta["conventions"]["magnetization"].is_string());
    assert!(meta["version"].is_string());
}

#[test]
fn binary_runs_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = dtc(
            &["run", "--preset", "fig2-fermion-imperfect", "--out-dir", "."],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for suffix in [
        "timeseries.csv",
        "spectrum.csv",
        "peaks.json",
        "metadata.json",
    ] {
        let name = format!("fig2-fermion-imperfect_{suffix}");
        let a = std::fs::read(dir_a.path().join(&name)).unwrap();
        let b = std::fs::read(dir_b.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn set_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dtc(
        &[
            "run",
            "--preset",
            "fig2-perfect",
            "--set",
            "schedule.n_periods=16",
            "--set",
            "label=short",
            "--out-dir",
            ".",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("short_timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16 * 32 + 1);
}

#[test]
fn dump_config_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    for preset in dtc_cli::presets::PRESETS {
        let out = dtc(
            &["run", "--preset", preset.name, "--dump-config"],
            dir.path(),
        );
        assert!(out.status.success(), "{}: {}", preset.name, stderr(&out));
        let dumped = RunConfig::from_json(&stdout(&out)).unwrap();
        // dumping the dumped config is a fixed point
        let path = dir.path().join("dump.json");
        std::fs::write(&path, dumped.to_json()).unwrap();
        let again = dtc(
            &["run", "--config", "dump.json", "--dump-config"],
            dir.path(),
        );
        assert!(again.status.success(), "{}", stderr(&again));
        assert_eq!(
            stdout(&out).trim(),
            stdout(&again).trim(),
            "{} dump not idempotent",
            preset.name
        );
    }
}

#[test]
fn invalid_inputs_exit_nonzero_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();

    let out = dtc(&["run", "--preset", "no-such-preset"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no-such-preset"));

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"model": {"kind": "cold_atom", "g": -3, "kappa": 1.0},
            "schedule": {"t_d": 1.0, "n_periods": 16}}"#,
    )
    .unwrap();
    let out = dtc(&["run", "--config", "bad.json"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("model.g"), "{}", stderr(&out));

    std::fs::write(dir.path().join("garbled.json"), "{ not json").unwrap();
    let out = dtc(&["run", "--config", "garbled.json"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));

    let out = dtc(&["run"], dir.path());
    assert!(!out.status.success());

    // output path that cannot be created
    std::fs::write(dir.path().join("blocker"), "not a directory").unwrap();
    let out = dtc(
        &[
            "run",
            "--preset",
            "fig2-perfect",
            "--out-dir",
            "blocker/nested",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("blocker"), "{}", stderr(&out));
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_dtc"))
        .args([
            "run",
            "--preset",
            "fig2-perfect",
            "--set",
            "schedule.n_periods=8",
            "--set",
            "outputs=[\"magnetization\"]",
        ])
        .current_dir(dir.path())
        .env("DTC_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(target.join("fig2-perfect_timeseries.csv").exists());
}

#[test]
fn sweep_single_point_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = dtc_cli::presets::preset_config("fig2-boson-imperfect").unwrap();
    let sweep = serde_json::json!({
        "base": serde_json::to_value(&base).unwrap(),
        "axes": [{"param": "kappa", "values": [0.1]}],
        "reduce": ["subharmonic_weight", "peak_frequency", "split_detected"]
    });
    std::fs::write(dir.path().join("sweep.json"), sweep.to_string()).unwrap();
    let out = dtc(
        &["sweep", "--config", "sweep.json", "--out-dir", "."],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv =
        std::fs::read_to_string(dir.path().join("fig2-boson-imperfect_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "kappa,subharmonic_weight,peak_frequency,split_detected"
    );
    let fields: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();

    let products = simulate(&base).unwrap();
    let peaks = products.peaks.unwrap();
    assert_eq!(fields[0], 0.1);
    assert_eq!(fields[1], peaks.subharmonic_weight);
    assert_eq!(fields[2], peaks.peak_frequency);
    assert_eq!(fields[3], if peaks.split_detected { 1.0 } else { 0.0 });
}

#[test]
fn kappa_sweep_shows_melting_trend() {
    // with imperfect pulses the subharmonic weight is largest deep in the
    // Ising-dominated regime and smallest at the isotropic-exchange end
    let dir = tempfile::tempdir().unwrap();
    let base = dtc_cli::presets::preset_config("fig2-boson-imperfect").unwrap();
    let sweep = serde_json::json!({
        "base": serde_json::to_value(&base).unwrap(),
        "axes": [{"param": "kappa", "values": [0.1, 0.5, 1.0, 2.0, 10.0, 100.0]}],
        "reduce": ["subharmonic_weight"]
    });
    std::fs::write(dir.path().join("sweep.json"), sweep.to_string()).unwrap();
    let out = dtc(
        &["sweep", "--config", "sweep.json", "--out-dir", "."],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv =
        std::fs::read_to_string(dir.path().join("fig2-boson-imperfect_sweep.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 6);
    // row order is the axis order
    let kappas: Vec<f64> = rows.iter().map(|r| r.0).collect();
    assert_eq!(kappas, vec![0.1, 0.5, 1.0, 2.0, 10.0, 100.0]);
    let weights: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let max_at = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    assert_eq!(max_at, 0, "weights: {weights:?}");
    // the crystal has fully melted by the exchange-dominated end; in between
    // the weight is not monotone (resonances between the Ising scale and the
    // pulse-error beat dig deeper minima at intermediate kappa)
    assert!(
        *weights.last().unwrap() < 0.1 * weights[0],
        "weights: {weights:?}"
    );
}

#[test]
fn zero_epsilon_axis_keeps_subharmonic_weight_high() {
    let dir = tempfile::tempdir().unwrap();
    let base = dtc_cli::presets::preset_config("fig2-boson-imperfect").unwrap();
    let sweep = serde_json::json!({
        "base": serde_json::to_value(&base).unwrap(),
        "axes": [{"param": "epsilon", "values": [0.0]}, {"param": "kappa", "values": [0.1, "inf"]}],
        "reduce": ["subharmonic_weight"]
    });
    std::fs::write(dir.path().join("sweep.json"), sweep.to_string()).unwrap();
    let out = dtc(
        &["sweep", "--config", "sweep.json", "--out-dir", "."],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv =
        std::fs::read_to_string(dir.path().join("fig2-boson-imperfect_sweep.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let weight: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(weight > 0.9, "{line}");
    }
}
