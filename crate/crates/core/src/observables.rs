//! Diagnostics: magnetization m(t), initial-state overlap F(t), the spectral
//! density S(f) of the magnetization, and subharmonic-peak metrics.
//!
//! Conventions fixed here: the emitted magnetization is m = ½⟨Σσᶻ⟩, so the
//! five-site antiferromagnet reads +0.5 (the unnormalized ⟨Σσᶻ⟩ is available
//! separately). Spectra use a rectangular window on a uniformly resampled
//! series, zero-padded to the next power of two, scaled so that summing
//! density × bin width over all bins recovers the mean square of the series.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::spin::{State, StateVector};

/// Half-width of the subharmonic integration window, as a fraction of f_D.
pub const SUBHARMONIC_WINDOW: f64 = 1.0 / 40.0;
/// Minimum separation of split peaks, as a fraction of f_D.
pub const SPLIT_SEPARATION: f64 = 1.0 / 20.0;
/// Split peaks must exceed this multiple of the height at exactly f_D/2.
pub const SPLIT_HEIGHT_RATIO: f64 = 5.0;

/// A sampled scalar observable with its driving period.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub driving_period: f64,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, driving_period: f64) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times vs {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
        if driving_period.is_nan() || driving_period <= 0.0 {
            return Err(Error::InvalidParameter(
                "driving period must be positive".into(),
            ));
        }
        Ok(Self {
            times,
            values,
            driving_period,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One-sided spectral density on a uniform frequency grid.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Frequencies in inverse time units, ascending from 0.
    pub frequencies: Vec<f64>,
    /// Non-negative density per frequency bin.
    pub density: Vec<f64>,
}

/// Quantitative summary of the response peak near f_D/2.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakReport {
    /// Location of the strongest bin in (0, f_D], in multiples of f_D.
    pub peak_frequency: f64,
    pub peak_height: f64,
    /// Fraction of the non-DC density in (0, f_D] lying within
    /// |f − f_D/2| ≤ f_D/40.
    pub subharmonic_weight: f64,
    pub split_detected: bool,
    /// Separation of the split maxima in multiples of f_D, when detected.
    pub split_separation: Option<f64>,
}

/// m = ½⟨Σᵢσᵢᶻ⟩.
pub fn magnetization(state: &State) -> f64 {
    0.5 * magnetization_raw(state)
}

/// The unnormalized ⟨Σᵢσᵢᶻ⟩.
pub fn magnetization_raw(state: &State) -> f64 {
    let space = state.space();
    match state {
        State::Pure(psi) => psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * space.total_sz(b))
            .sum(),
        State::Mixed(rho) => rho
            .matrix()
            .diag()
            .iter()
            .enumerate()
            .map(|(b, d)| d.re * space.total_sz(b))
            .sum(),
    }
}

/// Overlap with the initial state: |⟨ψ₀|ψ⟩|² for pure states and ⟨ψ₀|ρ|ψ₀⟩
/// for density matrices.
pub fn overlap(psi0: &StateVector, state: &State) -> Result<f64> {
    if psi0.space() != state.space() {
        return Err(Error::DimensionMismatch(
            "overlap of states on different spaces".into(),
        ));
    }
    Ok(match state {
        State::Pure(psi) => psi0.inner(psi).norm_sqr(),
        State::Mixed(rho) => {
            let v = rho.matrix().dot(psi0.amplitudes());
            psi0.amplitudes()
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a.conj() * b).re)
                .sum()
        }
    })
}

/// Magnetization trace of a trajectory.
pub fn magnetization_series(traj: &Trajectory, driving_period: f64) -> Result<TimeSeries> {
    let values = traj.states.iter().map(magnetization).collect();
    TimeSeries::new(traj.times.clone(), values, driving_period)
}

/// Overlap trace of a trajectory against a reference state.
pub fn overlap_series(
    traj: &Trajectory,
    psi0: &StateVector,
    driving_period: f64,
) -> Result<TimeSeries> {
    let values = traj
        .states
        .iter()
        .map(|s| overlap(psi0, s))
        .collect::<Result<Vec<f64>>>()?;
    TimeSeries::new(traj.times.clone(), values, driving_period)
}

fn is_uniform(times: &[f64], tol: f64) -> bool {
    if times.len() < 2 {
        return true;
    }
    let dt = times[1] - times[0];
    times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= tol)
}

/// Linear interpolation onto a uniform grid with `per_period` samples per
/// driving period, spanning the same range.
fn resample_uniform(series: &TimeSeries, per_period: usize) -> TimeSeries {
    let t0 = series.times[0];
    let t1 = *series.times.last().unwrap();
    let dt = series.driving_period / per_period as f64;
    let n = ((t1 - t0) / dt).floor() as usize + 1;
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut k = 0usize;
    for j in 0..n {
        let t = t0 + j as f64 * dt;
        while k + 1 < series.times.len() && series.times[k + 1] < t {
            k += 1;
        }
        let v = if k + 1 >= series.times.len() {
            series.values[k]
        } else {
            let (ta, tb) = (series.times[k], series.times[k + 1]);
            let (va, vb) = (series.values[k], series.values[k + 1]);
            if tb > ta {
                va + (vb - va) * ((t - ta) / (tb - ta)).clamp(0.0, 1.0)
            } else {
                va
            }
        };
        times.push(t);
        values.push(v);
    }
    TimeSeries {
        times,
        values,
        driving_period: series.driving_period,
    }
}

/// Discrete one-sided spectral density S(f) of the series. Non-uniform input
/// is first resampled onto 32 points per driving period. The density is
/// normalized so that Σ S·Δf equals the mean square of the samples.
pub fn spectral_density(series: &TimeSeries) -> Result<Spectrum> {
    if series.len() < 16 {
        return Err(Error::Spectral(format!(
            "need at least 16 samples, got {}",
            series.len()
        )));
    }
    let uniform;
    let work = if is_uniform(&series.times, 1e-9) {
        series
    } else {
        uniform = resample_uniform(series, 32);
        &uniform
    };
    if work.len() < 16 {
        return Err(Error::Spectral(
            "resampled series is too short".into(),
        ));
    }

    let k = work.len();
    let dt = work.times[1] - work.times[0];
    let m = k.next_power_of_two();

    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = work
        .values
        .iter()
        .map(|v| C64::new(*v, 0.0))
        .chain(std::iter::repeat_n(C64::new(0.0, 0.0), m - k))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let duration = k as f64 * dt;
    let df = 1.0 / (m as f64 * dt);
    let half = m / 2;
    let mut frequencies = Vec::with_capacity(half + 1);
    let mut density = Vec::with_capacity(half + 1);
    for (j, value) in buf.iter().take(half + 1).enumerate() {
        let fold = if j == 0 || j == half { 1.0 } else { 2.0 };
        let amp = value.norm_sqr() * dt * dt;
        frequencies.push(j as f64 * df);
        density.push(fold * amp / duration);
    }
    Ok(Spectrum {
        frequencies,
        density,
    })
}

/// Locate the response peak and quantify how much weight sits at f_D/2.
/// The analysis band is (0, f_D]; the spectrum must reach f_D.
pub fn subharmonic_metrics(spectrum: &Spectrum, f_d: f64) -> Result<PeakReport> {
    if f_d.is_nan() || f_d <= 0.0 {
        return Err(Error::InvalidParameter(
            "driving frequency must be positive".into(),
        ));
    }
    let f_max = spectrum.frequencies.last().copied().unwrap_or(0.0);
    if f_max < f_d * (1.0 - 1e-9) {
        return Err(Error::Spectral(format!(
            "spectrum reaches {f_max}, but the analysis band needs f_D = {f_d}"
        )));
    }

    let band: Vec<usize> = spectrum
        .frequencies
        .iter()
        .enumerate()
        .filter(|(_, f)| **f > 0.0 && **f <= f_d * (1.0 + 1e-9))
        .map(|(i, _)| i)
        .collect();
    if band.is_empty() {
        return Err(Error::Spectral("no bins inside (0, f_D]".into()));
    }

    let total: f64 = band.iter().map(|&i| spectrum.density[i]).sum();
    let half_f = 0.5 * f_d;
    let window: f64 = band
        .iter()
        .filter(|&&i| (spectrum.frequencies[i] - half_f).abs() <= f_d * SUBHARMONIC_WINDOW)
        .map(|&i| spectrum.density[i])
        .sum();
    let weight = if total > 0.0 { window / total } else { 0.0 };

    let &peak_idx = band
        .iter()
        .max_by(|&&a, &&b| {
            spectrum.density[a]
                .partial_cmp(&spectrum.density[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("band is non-empty");

    // split detection: the two tallest local maxima in (0.3, 0.7) f_D must be
    // far apart and dwarf the bin at exactly f_D/2
    let half_idx = nearest_bin(&spectrum.frequencies, half_f);
    let height_at_half = spectrum.density[half_idx];
    let mut maxima: Vec<(usize, f64)> = Vec::new();
    for i in 1..spectrum.frequencies.len() - 1 {
        let f = spectrum.frequencies[i];
        if f <= 0.3 * f_d || f >= 0.7 * f_d {
            continue;
        }
        let d = spectrum.density[i];
        if d > spectrum.density[i - 1] && d >= spectrum.density[i + 1] {
            maxima.push((i, d));
        }
    }
    maxima.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let (split_detected, split_separation) = if maxima.len() >= 2 {
        let (ia, ha) = maxima[0];
        let (ib, hb) = maxima[1];
        let sep = (spectrum.frequencies[ia] - spectrum.frequencies[ib]).abs();
        let detected = sep > f_d * SPLIT_SEPARATION
            && ha > SPLIT_HEIGHT_RATIO * height_at_half
            && hb > SPLIT_HEIGHT_RATIO * height_at_half;
        (detected, detected.then_some(sep / f_d))
    } else {
        (false, None)
    };

    Ok(PeakReport {
        peak_frequency: spectrum.frequencies[peak_idx] / f_d,
        peak_height: spectrum.density[peak_idx],
        subharmonic_weight: weight,
        split_detected,
        split_separation,
    })
}

fn nearest_bin(frequencies: &[f64], target: f64) -> usize {
    let mut best = 0usize;
    let mut dist = f64::INFINITY;
    for (i, f) in frequencies.iter().enumerate() {
        let d = (f - target).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{
        antiferromagnetic_state, embed_single, expectation, pauli, product_state, DensityMatrix,
        HilbertSpace, Pauli, SpinDir,
    };
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn magnetization_reference_values() {
        let space = HilbertSpace::new(5).unwrap();
        let af = antiferromagnetic_state(space);
        assert_abs_diff_eq!(
            magnetization(&State::Pure(af.clone())),
            0.5,
            epsilon = 1e-14
        );
        let mirrored = product_state(
            space,
            &[
                SpinDir::Down,
                SpinDir::Up,
                SpinDir::Down,
                SpinDir::Up,
                SpinDir::Down,
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(
            magnetization(&State::Pure(mirrored)),
            -0.5,
            epsilon = 1e-14
        );
        let up = product_state(space, &[SpinDir::Up; 5]).unwrap();
        assert_abs_diff_eq!(magnetization(&State::Pure(up)), 2.5, epsilon = 1e-14);
    }

    #[test]
    fn magnetization_matches_expectation_sum() {
        let space = HilbertSpace::new(4).unwrap();
        // a non-trivial superposition
        let dim = space.dim();
        let amps: ndarray::Array1<C64> = (0..dim)
            .map(|k| C64::new(((k * 7 + 3) % 11) as f64 + 0.5, ((k * 5) % 7) as f64 - 3.0))
            .collect();
        let psi = StateVector::normalized(space, amps).unwrap();
        let state = State::Pure(psi.clone());
        let mut direct = 0.0;
        for site in 1..=4 {
            let z = embed_single(&pauli(Pauli::Z), site, space).unwrap();
            direct += z.expect_state(&psi).unwrap().re;
        }
        assert_abs_diff_eq!(magnetization_raw(&state), direct, epsilon = 1e-12);
        assert_abs_diff_eq!(magnetization(&state), 0.5 * direct, epsilon = 1e-12);

        // and on the corresponding density matrix
        let rho = DensityMatrix::from_pure(&psi);
        assert_abs_diff_eq!(
            magnetization_raw(&State::Mixed(rho)),
            direct,
            epsilon = 1e-12
        );
    }

    #[test]
    fn overlap_reference_values() {
        let space = HilbertSpace::new(5).unwrap();
        let af = antiferromagnetic_state(space);
        assert_abs_diff_eq!(
            overlap(&af, &State::Pure(af.clone())).unwrap(),
            1.0,
            epsilon = 1e-14
        );

        // perfect π pulse sends the antiferromagnet to its mirror: F = 0
        let u = crate::drive::global_pulse_operator(PI, space, &[1.0; 5]).unwrap();
        let flipped =
            StateVector::new(space, u.matrix().dot(af.amplitudes())).unwrap();
        assert!(overlap(&af, &State::Pure(flipped)).unwrap() < 1e-24);

        // imperfect pulse: F = |cos(θ/2)|^{2N} = sin(ε/2)^{10}
        let eps = 0.1 * PI;
        let u = crate::drive::global_pulse_operator(PI - eps, space, &[1.0; 5]).unwrap();
        let partial =
            StateVector::new(space, u.matrix().dot(af.amplitudes())).unwrap();
        let f = overlap(&af, &State::Pure(partial)).unwrap();
        assert_abs_diff_eq!(f, (eps / 2.0).sin().powi(10), epsilon = 1e-12);
    }

    #[test]
    fn overlap_is_symmetric() {
        let space = HilbertSpace::new(3).unwrap();
        let a = StateVector::normalized(
            space,
            (0..8).map(|k| C64::new(k as f64 + 1.0, -(k as f64))).collect(),
        )
        .unwrap();
        let b = StateVector::normalized(
            space,
            (0..8).map(|k| C64::new(1.0, (k * k) as f64 * 0.1)).collect(),
        )
        .unwrap();
        let fab = overlap(&a, &State::Pure(b.clone())).unwrap();
        let fba = overlap(&b, &State::Pure(a)).unwrap();
        assert_abs_diff_eq!(fab, fba, epsilon = 1e-12);
    }

    #[test]
    fn expectation_of_hermitian_is_real() {
        let space = HilbertSpace::new(3).unwrap();
        let psi = StateVector::normalized(
            space,
            (0..8).map(|k| C64::new((k % 3) as f64, (k % 5) as f64)).collect(),
        )
        .unwrap();
        let y = embed_single(&pauli(Pauli::Y), 2, space).unwrap();
        let e = expectation(&y, &State::Pure(psi)).unwrap();
        assert!(e.im.abs() < 1e-10);
    }

    fn tone_series(freq_over_fd: f64, periods: usize, rate: usize) -> TimeSeries {
        let t_d = 1.0;
        let n = rate * periods;
        let times: Vec<f64> = (0..n).map(|j| j as f64 * t_d / rate as f64).collect();
        let values = times
            .iter()
            .map(|t| (2.0 * PI * freq_over_fd / t_d * t).cos())
            .collect();
        TimeSeries::new(times, values, t_d).unwrap()
    }

    #[test]
    fn pure_tone_lands_in_single_bin() {
        let s = tone_series(0.5, 64, 32);
        let spec = spectral_density(&s).unwrap();
        let total: f64 = spec.density[1..].iter().sum();
        let peak = spec
            .density
            .iter()
            .enumerate()
            .skip(1)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert_abs_diff_eq!(spec.frequencies[peak.0], 0.5, epsilon = 1e-12);
        assert!(*peak.1 / total > 0.99);
    }

    #[test]
    fn constant_series_is_all_dc() {
        let t_d = 1.0;
        let times: Vec<f64> = (0..128).map(|j| j as f64 * t_d / 8.0).collect();
        let values = vec![0.7; 128];
        let s = TimeSeries::new(times, values, t_d).unwrap();
        let spec = spectral_density(&s).unwrap();
        let non_dc: f64 = spec.density[1..].iter().sum();
        assert!(non_dc < 1e-20 * spec.density[0].max(1.0));
        assert!(spec.density[0] > 0.0);
    }

    #[test]
    fn two_tone_splits_symmetrically() {
        let t_d = 1.0;
        let rate = 32;
        let n = rate * 64;
        let times: Vec<f64> = (0..n).map(|j| j as f64 * t_d / rate as f64).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| {
                (2.0 * PI * 0.45 * t).cos() + (2.0 * PI * 0.55 * t).cos()
            })
            .collect();
        let s = TimeSeries::new(times, values, t_d).unwrap();
        let spec = spectral_density(&s).unwrap();
        let report = subharmonic_metrics(&spec, 1.0).unwrap();
        assert!(report.subharmonic_weight < 0.1);
        assert!(report.split_detected);
        let sep = report.split_separation.unwrap();
        assert_abs_diff_eq!(sep, 0.1, epsilon = 0.02);

        // the two lobes are equal up to interference of leakage tails
        let at = |f: f64| {
            let i = nearest_bin(&spec.frequencies, f);
            spec.density[i]
        };
        assert_abs_diff_eq!(at(0.45), at(0.55), epsilon = 0.02 * at(0.45));
    }

    #[test]
    fn parseval_consistency() {
        // power-of-two length, no padding: Σ S Δf = mean square exactly
        let t_d = 1.0;
        let rate = 16;
        let n = rate * 32; // 512
        let times: Vec<f64> = (0..n).map(|j| j as f64 * t_d / rate as f64).collect();
        let values: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(k, t)| {
                0.3 + (2.0 * PI * 0.5 * t).cos() + 0.2 * ((k * 37 % 101) as f64 / 101.0 - 0.5)
            })
            .collect();
        let s = TimeSeries::new(times, values.clone(), t_d).unwrap();
        let spec = spectral_density(&s).unwrap();
        let df = spec.frequencies[1] - spec.frequencies[0];
        let lhs: f64 = spec.density.iter().sum::<f64>() * df;
        let meansq = values.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(lhs, meansq, epsilon = 1e-6 * meansq);

        // excluding DC matches the detrended mean square
        let mean = values.iter().sum::<f64>() / n as f64;
        let detrended: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let lhs_ac: f64 = spec.density[1..].iter().sum::<f64>() * df;
        assert_abs_diff_eq!(lhs_ac, detrended, epsilon = 1e-6 * detrended.max(1e-12));
    }

    #[test]
    fn subharmonic_weight_of_clean_alternation() {
        // ±0.5 square wave: everything in (0, f_D] sits at f_D/2
        let t_d = 1.0;
        let rate = 32;
        let periods = 64;
        let times: Vec<f64> = (0..rate * periods)
            .map(|j| j as f64 * t_d / rate as f64)
            .collect();
        let values: Vec<f64> = (0..rate * periods)
            .map(|j| if (j / rate) % 2 == 0 { 0.5 } else { -0.5 })
            .collect();
        let s = TimeSeries::new(times, values, t_d).unwrap();
        let spec = spectral_density(&s).unwrap();
        let report = subharmonic_metrics(&spec, 1.0).unwrap();
        assert_abs_diff_eq!(report.peak_frequency, 0.5, epsilon = 1e-12);
        assert!(report.subharmonic_weight > 0.999);
        assert!(!report.split_detected);
    }

    #[test]
    fn spectral_density_rejects_short_series() {
        let t = (0..8).map(|j| j as f64).collect::<Vec<_>>();
        let v = vec![0.0; 8];
        let s = TimeSeries::new(t, v, 1.0).unwrap();
        assert!(spectral_density(&s).is_err());
    }

    #[test]
    fn metrics_require_band_coverage() {
        let s = tone_series(0.5, 64, 32);
        let spec = spectral_density(&s).unwrap();
        assert!(subharmonic_metrics(&spec, 1.0).is_ok());
        // ask for a band beyond Nyquist
        assert!(subharmonic_metrics(&spec, 1e6).is_err());
    }

    #[test]
    fn resampling_nonuniform_grid() {
        // same tone, but with jittered sample times: after internal
        // resampling the peak still lands at f_D/2
        let t_d = 1.0;
        let n = 1024;
        let mut times = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for j in 0..n {
            let jitter = if j % 2 == 0 { 0.0 } else { 0.004 };
            let t = j as f64 * t_d / 16.0 + jitter;
            times.push(t);
            values.push((2.0 * PI * 0.5 * t).cos());
        }
        let s = TimeSeries::new(times, values, t_d).unwrap();
        let spec = spectral_density(&s).unwrap();
        let report = subharmonic_metrics(&spec, 1.0).unwrap();
        assert_abs_diff_eq!(report.peak_frequency, 0.5, epsilon = 0.02);
        assert!(report.subharmonic_weight > 0.8);
    }
}
