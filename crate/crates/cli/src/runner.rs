//! Execute a resolved configuration and collect or write its products.

use std::path::{Path, PathBuf};

use dtc_core::evolve::{evolve_closed, evolve_lindblad, Trajectory};
use dtc_core::observables::{
    magnetization_raw, magnetization_series, overlap_series, spectral_density,
    subharmonic_metrics, PeakReport, Spectrum, TimeSeries,
};
use dtc_core::spin::DensityMatrix;

use crate::config::{resolve, OutputKind, RunConfig};
use crate::output;
use crate::CliError;

/// Everything a run produces, kept in memory (sweeps reduce these without
/// touching the filesystem).
pub struct RunProducts {
    pub config: RunConfig,
    pub magnetization: TimeSeries,
    pub magnetization_raw: Vec<f64>,
    pub overlap: TimeSeries,
    pub strobe_magnetization: Vec<f64>,
    pub spectrum: Option<Spectrum>,
    pub peaks: Option<PeakReport>,
    pub f_drive: f64,
    pub warnings: Vec<String>,
}

pub fn simulate(config: &RunConfig) -> Result<RunProducts, CliError> {
    let resolved = resolve(config)?;
    let trajectory: Trajectory = if resolved.noise.is_trivial() {
        evolve_closed(
            &resolved.initial_state,
            &resolved.hamiltonian,
            &resolved.schedule,
        )?
    } else {
        let rho0 = DensityMatrix::from_pure(&resolved.initial_state);
        evolve_lindblad(
            &rho0,
            &resolved.hamiltonian,
            &resolved.noise,
            &resolved.schedule,
        )?
    };

    let t_d = resolved.schedule.period;
    let m_series = magnetization_series(&trajectory, t_d)?;
    let raw: Vec<f64> = trajectory.states.iter().map(magnetization_raw).collect();
    let f_series = overlap_series(&trajectory, &resolved.initial_state, t_d)?;
    let strobe: Vec<f64> = trajectory
        .stroboscopic_indices
        .iter()
        .map(|&i| m_series.values[i])
        .collect();

    let needs_spectrum = resolved.config.wants(OutputKind::Spectrum)
        || resolved.config.wants(OutputKind::Peaks);
    let (spectrum, peaks) = if needs_spectrum {
        // drop the closing sample so the transform spans whole periods
        let n = m_series.len() - 1;
        let windowed = TimeSeries::new(
            m_series.times[..n].to_vec(),
            m_series.values[..n].to_vec(),
            t_d,
        )?;
        let spec = spectral_density(&windowed)?;
        let report = subharmonic_metrics(&spec, resolved.f_drive())?;
        (Some(spec), Some(report))
    } else {
        (None, None)
    };

    Ok(RunProducts {
        config: resolved.config,
        magnetization: m_series,
        magnetization_raw: raw,
        overlap: f_series,
        strobe_magnetization: strobe,
        spectrum,
        peaks,
        f_drive: 1.0 / t_d,
        warnings: resolved.warnings,
    })
}

pub struct RunSummary {
    pub label: String,
    pub files: Vec<PathBuf>,
    pub peaks: Option<PeakReport>,
    pub final_strobe_m: f64,
    pub warnings: Vec<String>,
}

/// Run and write the requested artifacts into `dir`.
pub fn run_to_files(config: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let products = simulate(config)?;
    let label = products.config.label.clone();
    let mut files = Vec::new();

    let wants_series = products.config.wants(OutputKind::Magnetization)
        || products.config.wants(OutputKind::Overlap);
    if wants_series {
        let path = dir.join(format!("{label}_timeseries.csv"));
        output::write_timeseries_csv(
            &path,
            &products.magnetization,
            &products.magnetization_raw,
            &products.overlap,
        )?;
        files.push(path);
    }
    if products.config.wants(OutputKind::Spectrum) {
        let spectrum = products.spectrum.as_ref().expect("computed when requested");
        let path = dir.join(format!("{label}_spectrum.csv"));
        output::write_spectrum_csv(&path, spectrum, products.f_drive)?;
        files.push(path);
    }
    if products.config.wants(OutputKind::Peaks) {
        let peaks = products.peaks.as_ref().expect("computed when requested");
        let path = dir.join(format!("{label}_peaks.json"));
        output::write_peaks_json(&path, peaks)?;
        files.push(path);
    }

    let metadata_path = dir.join(format!("{label}_metadata.json"));
    output::write_json(&metadata_path, &metadata(&products))?;
    files.push(metadata_path);

    Ok(RunSummary {
        label,
        files,
        peaks: products.peaks.clone(),
        final_strobe_m: *products
            .strobe_magnetization
            .last()
            .expect("at least the initial sample exists"),
        warnings: products.warnings,
    })
}

/// The full resolved configuration plus unit conventions; everything that
/// influenced the numbers is in here.
pub fn metadata(products: &RunProducts) -> serde_json::Value {
    let time_unit = match products.config.model.kind_name() {
        "circuit" => "ns",
        _ => "harmonic-oscillator time, 1/omega",
    };
    serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "label": products.config.label,
        "config": serde_json::to_value(&products.config).expect("config serializes"),
        "units": {
            "time": time_unit,
            "couplings": "angular frequency, rad per time unit",
            "circuit_inputs": "omega in GHz and jz in MHz, multiplied by 2*pi internally",
            "zeta": "decay rate in inverse time units",
        },
        "conventions": {
            "magnetization": "m_normalized = 0.5 * <sum_i sigma_z_i>; m_raw is the bare sum",
            "initial_state": "antiferromagnetic product state up-down-up-...",
            "basis": "site 1 is the most significant bit; up maps to bit 0",
            "pulse_axis": "instantaneous pulses rotate about x, finite pulses about y",
            "sampling": "uniform grid of sample_rate points per period; the sample at n*T_D holds the post-pulse state",
            "spectrum": "rectangular window, zero-padded to the next power of two, one-sided; sum(density * df) equals the mean square of the series",
            "subharmonic_window_over_fd": dtc_core::observables::SUBHARMONIC_WINDOW,
            "split_separation_over_fd": dtc_core::observables::SPLIT_SEPARATION,
            "split_height_ratio": dtc_core::observables::SPLIT_HEIGHT_RATIO,
        },
        "warnings": products.warnings,
    })
}
