//! Deterministic CSV/JSON writers. Floats are printed with 17 significant
//! digits so identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use dtc_core::observables::{PeakReport, Spectrum, TimeSeries};

use crate::CliError;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_timeseries_csv(
    path: &Path,
    magnetization: &TimeSeries,
    raw: &[f64],
    overlap: &TimeSeries,
) -> Result<(), CliError> {
    let mut text = String::from("t,t_over_td,m_normalized,m_raw,overlap\n");
    let t_d = magnetization.driving_period;
    for (((t, m), r), f) in magnetization
        .times
        .iter()
        .zip(&magnetization.values)
        .zip(raw)
        .zip(&overlap.values)
    {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(*t),
            fmt_f64(*t / t_d),
            fmt_f64(*m),
            fmt_f64(*r),
            fmt_f64(*f)
        ));
    }
    write_file(path, &text)
}

pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum, f_d: f64) -> Result<(), CliError> {
    let mut text = String::from("f_over_fd,density\n");
    for (f, d) in spectrum.frequencies.iter().zip(&spectrum.density) {
        text.push_str(&format!("{},{}\n", fmt_f64(*f / f_d), fmt_f64(*d)));
    }
    write_file(path, &text)
}

pub fn write_peaks_json(path: &Path, report: &PeakReport) -> Result<(), CliError> {
    let doc = serde_json::json!({
        "peak_frequency_over_fd": report.peak_frequency,
        "peak_height": report.peak_height,
        "subharmonic_weight": report.subharmonic_weight,
        "split_detected": report.split_detected,
        "split_separation_over_fd": report.split_separation,
    });
    write_file(path, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

pub fn write_json(path: &Path, doc: &serde_json::Value) -> Result<(), CliError> {
    write_file(path, &format!("{}\n", serde_json::to_string_pretty(doc).unwrap()))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// Output directory precedence: CLI flag, then the `DTC_OUT_DIR` environment
/// variable, then the config's `out_dir`, then the working directory.
pub fn out_dir(flag: Option<&str>, config_dir: Option<&str>) -> PathBuf {
    if let Some(d) = flag {
        return PathBuf::from(d);
    }
    if let Ok(d) = std::env::var("DTC_OUT_DIR") {
        if !d.is_empty() {
            return PathBuf::from(d);
        }
    }
    if let Some(d) = config_dir {
        return PathBuf::from(d);
    }
    PathBuf::from(".")
}
