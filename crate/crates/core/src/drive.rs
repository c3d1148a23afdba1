//! Pulse operators and driving schedules.
//!
//! Pulses rotate every spin by θ = π − ε once per period T_D. Instantaneous
//! pulses are global rotations about x, O = Π exp(−i θᵢ/2 σᵢˣ). Finite pulses
//! realize the rotation through a resonant drive of amplitude A over
//! Δt = θ/A: either the averaged resonant form (A/2)Σσᵢʸ or the full
//! carrier-resolved drive H_d(t) with its counter-rotating terms.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::CircuitParams;
use crate::spin::{HilbertSpace, SpinOperator};

/// Rotation generator axis for global pulses.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Y,
}

/// How a pulse is realized in time.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PulseKind {
    /// Applied as a unitary at a single instant.
    Instantaneous,
    /// Constant resonant drive (A/2)Σσʸ for Δt = θ/A.
    FiniteRwa,
    /// Full drive H_d(t) with carrier factors, integrated over Δt = θ/A.
    FiniteLab,
}

/// One pulse: rotation angle θ = π − ε, realization kind, drive amplitude A
/// (finite kinds), per-site scale factors (inhomogeneous driving), and the
/// per-site carrier frequencies needed by the lab-frame kind.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSpec {
    pub theta: f64,
    pub kind: PulseKind,
    pub amplitude: Option<f64>,
    pub per_site_scale: Vec<f64>,
    pub carrier: Option<Vec<f64>>,
}

impl PulseSpec {
    pub fn new(
        theta: f64,
        kind: PulseKind,
        amplitude: Option<f64>,
        per_site_scale: Vec<f64>,
        carrier: Option<Vec<f64>>,
    ) -> Result<Self> {
        if theta.is_nan() || theta <= 0.0 || theta > PI {
            return Err(Error::InvalidParameter(format!(
                "pulse angle must lie in (0, pi], got {theta}"
            )));
        }
        if per_site_scale
            .iter()
            .any(|s| s.is_nan() || *s <= 0.0 || s.is_infinite())
        {
            return Err(Error::InvalidParameter(
                "per-site scale entries must be positive and finite".into(),
            ));
        }
        match kind {
            PulseKind::Instantaneous => {}
            PulseKind::FiniteRwa | PulseKind::FiniteLab => {
                let a = amplitude.ok_or_else(|| {
                    Error::InvalidParameter("finite pulses need an amplitude".into())
                })?;
                if a.is_nan() || a <= 0.0 || a.is_infinite() {
                    return Err(Error::InvalidParameter(format!(
                        "pulse amplitude must be positive, got {a}"
                    )));
                }
                if kind == PulseKind::FiniteLab {
                    let carrier = carrier.as_ref().ok_or_else(|| {
                        Error::InvalidParameter(
                            "lab-frame pulses need per-site carrier frequencies".into(),
                        )
                    })?;
                    if carrier.len() != per_site_scale.len() {
                        return Err(Error::DimensionMismatch(format!(
                            "carrier has length {}, scale has length {}",
                            carrier.len(),
                            per_site_scale.len()
                        )));
                    }
                }
            }
        }
        Ok(Self {
            theta,
            kind,
            amplitude,
            per_site_scale,
            carrier,
        })
    }

    /// Instantaneous θ-pulse with uniform scale on `n` sites.
    pub fn instantaneous(theta: f64, n_sites: usize) -> Result<Self> {
        Self::new(
            theta,
            PulseKind::Instantaneous,
            None,
            vec![1.0; n_sites],
            None,
        )
    }

    /// Time occupied by the pulse: 0 for instantaneous, θ/A otherwise
    /// (Δt = (π − ε)/A for θ = π − ε).
    pub fn duration(&self) -> f64 {
        match self.kind {
            PulseKind::Instantaneous => 0.0,
            _ => self.theta / self.amplitude.expect("validated at construction"),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.per_site_scale.len()
    }
}

/// The linear inhomogeneity profile scaleᵢ = 1 + δ(i − (N+1)/2)/N,
/// a deterministic symmetric-breaking gradient across the chain.
pub fn linear_gradient_scale(n_sites: usize, delta: f64) -> Vec<f64> {
    let center = (n_sites as f64 + 1.0) / 2.0;
    (1..=n_sites)
        .map(|i| 1.0 + delta * (i as f64 - center) / n_sites as f64)
        .collect()
}

/// One element of a driving timeline.
#[derive(Clone, Debug, PartialEq)]
pub enum Segment {
    Free { duration: f64 },
    Pulse(PulseSpec),
}

/// Alternating free-evolution and pulse segments covering
/// `n_periods × period`, with pulses ending exactly at t = nT_D.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    pub period: f64,
    pub n_periods: usize,
    pub segments: Vec<Segment>,
    /// Observable samples per period (uniform grid; the grid point at each
    /// period boundary records the post-pulse state).
    pub sample_rate: usize,
}

impl PulseSchedule {
    pub fn total_duration(&self) -> f64 {
        self.period * self.n_periods as f64
    }
}

/// Global rotation Π exp(−i θ·scaleᵢ/2 σᵢᵃ) about x or y, built from
/// closed-form single-site rotations.
pub fn global_rotation(
    theta: f64,
    axis: RotationAxis,
    space: HilbertSpace,
    per_site_scale: &[f64],
) -> Result<SpinOperator> {
    if per_site_scale.len() != space.n_sites() {
        return Err(Error::DimensionMismatch(format!(
            "scale vector has length {}, space has {} sites",
            per_site_scale.len(),
            space.n_sites()
        )));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidParameter("rotation angle must be finite".into()));
    }
    let mut u = linalg::eye(1);
    for scale in per_site_scale {
        let half = theta * scale / 2.0;
        let c = C64::new(half.cos(), 0.0);
        let s = half.sin();
        // exp(-i φ σ) = cos φ − i sin φ σ
        let site = match axis {
            RotationAxis::X => ndarray::array![
                [c, C64::new(0.0, -s)],
                [C64::new(0.0, -s), c]
            ],
            RotationAxis::Y => ndarray::array![
                [c, C64::new(-s, 0.0)],
                [C64::new(s, 0.0), c]
            ],
        };
        u = kron(&u, &site);
    }
    SpinOperator::from_matrix(space, u)
}

/// The spin-flip operator O = Π exp(−i θ·scaleᵢ/2 σᵢˣ).
pub fn global_pulse_operator(
    theta: f64,
    space: HilbertSpace,
    per_site_scale: &[f64],
) -> Result<SpinOperator> {
    global_rotation(theta, RotationAxis::X, space, per_site_scale)
}

fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for ((i, j), va) in a.indexed_iter() {
        if va.norm() == 0.0 {
            continue;
        }
        for ((k, l), vb) in b.indexed_iter() {
            out[[i * rb + k, j * cb + l]] = va * vb;
        }
    }
    out
}

/// The drive at time t,
///   H_d(t) = i Σᵢ Aᵢ cos(ωᵢt + φᵢ)(σᵢ⁺ e^{iΩᵢt} − σᵢ⁻ e^{−iΩᵢt}),
/// with resonance ωᵢ = Ωᵢ taken from the circuit parameters and Aᵢ = A·scaleᵢ.
/// In the {|↑⟩,|↓⟩} basis used here its t = 0 value is −A Σᵢ scaleᵢ σᵢʸ.
pub fn drive_hamiltonian_scaled(
    t: f64,
    p: &CircuitParams,
    site_phases: &[f64],
    per_site_scale: &[f64],
) -> Result<SpinOperator> {
    let n = p.n_sites();
    if site_phases.len() != n || per_site_scale.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} site phases and scales, got {} and {}",
            site_phases.len(),
            per_site_scale.len()
        )));
    }
    let space = HilbertSpace::new(n)?;
    let dim = space.dim();
    let mut h: Array2<C64> = Array2::zeros((dim, dim));
    for site in 1..=n {
        let omega = p.omega_q[site - 1];
        let a = p.amplitude * per_site_scale[site - 1];
        let envelope = a * (omega * t + site_phases[site - 1]).cos();
        if envelope == 0.0 {
            continue;
        }
        // i·envelope·(σ⁺e^{iΩt} − σ⁻e^{−iΩt}); the σ⁻ part is the adjoint.
        let upper = C64::new(0.0, envelope) * C64::from_polar(1.0, omega * t);
        let shift = n - site;
        for col in 0..dim {
            if (col >> shift) & 1 == 1 {
                let row = col & !(1 << shift);
                h[[row, col]] += upper;
                h[[col, row]] += upper.conj();
            }
        }
    }
    SpinOperator::hermitian(space, h)
}

/// [`drive_hamiltonian_scaled`] with uniform unit scale.
pub fn drive_hamiltonian(t: f64, p: &CircuitParams, site_phases: &[f64]) -> Result<SpinOperator> {
    let scale = vec![1.0; p.n_sites()];
    drive_hamiltonian_scaled(t, p, site_phases, &scale)
}

/// Build the alternating free/pulse timeline. Finite pulses occupy
/// [nT_D − Δt, nT_D], so the free stretch of each period is shortened to
/// T_D − Δt and every pulse ends exactly on a period boundary.
pub fn make_schedule(
    period: f64,
    n_periods: usize,
    pulse: PulseSpec,
    sample_rate: usize,
) -> Result<PulseSchedule> {
    if period.is_nan() || period <= 0.0 || period.is_infinite() {
        return Err(Error::Schedule(format!(
            "period must be positive and finite, got {period}"
        )));
    }
    if n_periods == 0 {
        return Err(Error::Schedule("n_periods must be at least 1".into()));
    }
    if sample_rate == 0 {
        return Err(Error::Schedule("sample_rate must be at least 1".into()));
    }
    let dt = pulse.duration();
    if dt >= period {
        return Err(Error::Schedule(format!(
            "pulse duration {dt} does not fit in period {period}"
        )));
    }
    let free = period - dt;
    let mut segments = Vec::with_capacity(2 * n_periods);
    for _ in 0..n_periods {
        segments.push(Segment::Free { duration: free });
        segments.push(Segment::Pulse(pulse.clone()));
    }
    Ok(PulseSchedule {
        period,
        n_periods,
        segments,
        sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CircuitParams;
    use crate::spin::{antiferromagnetic_state, embed_single, pauli, Pauli};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pi_pulse_flips_antiferromagnet() {
        let space = HilbertSpace::new(5).unwrap();
        let af = antiferromagnetic_state(space);
        let u = global_pulse_operator(PI, space, &[1.0; 5]).unwrap();
        let flipped = u.matrix().dot(af.amplitudes());
        // exp(−iπσˣ/2) = −iσˣ per site, so the amplitude lands on the
        // mirrored configuration with global phase (−i)⁵ = −i
        let target = 0b10101;
        assert_abs_diff_eq!(flipped[target].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(flipped[target].im, -1.0, epsilon = 1e-12);
        let weight: f64 = flipped
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != target)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        assert!(weight < 1e-24);
    }

    #[test]
    fn zero_angle_is_identity() {
        let space = HilbertSpace::new(3).unwrap();
        let u = global_rotation(0.0, RotationAxis::X, space, &[1.0; 3]).unwrap();
        assert!(linalg::max_abs(&(u.matrix() - &linalg::eye(8))) < 1e-15);
    }

    #[test]
    fn imperfect_pulse_transfer_probability() {
        // |⟨flipped|U(θ)|AF⟩|² = sin(θ/2)^{2N} = cos(ε/2)^{2N}
        let space = HilbertSpace::new(5).unwrap();
        let af = antiferromagnetic_state(space);
        let eps = 0.1 * PI;
        let theta = PI - eps;
        let u = global_pulse_operator(theta, space, &[1.0; 5]).unwrap();
        let flipped = u.matrix().dot(af.amplitudes());
        let p = flipped[0b10101].norm_sqr();
        let expected = (eps / 2.0).cos().powi(10);
        assert_abs_diff_eq!(p, expected, epsilon = 1e-12);
    }

    #[test]
    fn rotation_composition() {
        let space = HilbertSpace::new(3).unwrap();
        let scale = [1.0; 3];
        let u1 = global_pulse_operator(0.7, space, &scale).unwrap();
        let u2 = global_pulse_operator(1.9, space, &scale).unwrap();
        let u12 = global_pulse_operator(2.6, space, &scale).unwrap();
        let prod = u1.compose(&u2).unwrap();
        assert!(linalg::max_abs(&(prod.matrix() - u12.matrix())) < 1e-10);
    }

    proptest! {
        #[test]
        fn pulse_operator_is_unitary(
            theta in -6.0..6.0f64,
            s1 in 0.1..2.0f64,
            s2 in 0.1..2.0f64,
            s3 in 0.1..2.0f64,
        ) {
            let space = HilbertSpace::new(3).unwrap();
            let u = global_pulse_operator(theta, space, &[s1, s2, s3]).unwrap();
            prop_assert!(linalg::unitarity_deviation(u.matrix()) < 1e-12);
        }
    }

    fn test_circuit(n: usize, amplitude: f64) -> CircuitParams {
        CircuitParams::from_table_ghz_mhz(
            n,
            &crate::models::TABLE_OMEGA_GHZ[..n.div_ceil(2).min(3)],
            &crate::models::TABLE_JZ_MHZ[..(n - 1).div_ceil(2).min(2)],
            amplitude,
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn drive_at_time_zero() {
        // H_d(0) = iA Σ(σ⁺ − σ⁻) = −A Σ σʸ in this basis
        let p = test_circuit(5, 2.5);
        let h = drive_hamiltonian(0.0, &p, &[0.0; 5]).unwrap();
        let space = h.space();
        let mut expected: Array2<C64> = Array2::zeros((space.dim(), space.dim()));
        for site in 1..=5 {
            let y = embed_single(&pauli(Pauli::Y), site, space).unwrap();
            expected.scaled_add(C64::new(-p.amplitude, 0.0), y.matrix());
        }
        assert!(linalg::max_abs(&(h.matrix() - &expected)) < 1e-12);
    }

    #[test]
    fn drive_is_hermitian_at_random_times() {
        let p = test_circuit(3, 1.3);
        for t in [0.0, 0.037, 0.41, 3.3, 17.9] {
            let h = drive_hamiltonian(t, &p, &[0.0; 3]).unwrap();
            assert!(h.is_hermitian());
            assert!(linalg::hermiticity_deviation(h.matrix()) < 1e-12);
        }
    }

    #[test]
    fn drive_time_average_is_half_amplitude_y() {
        // averaged over one carrier period the drive reduces to its resonant
        // part i(A/2)(σ⁺ − σ⁻) = −(A/2)σʸ; trapezoid sampling reproduces it
        let a = 0.8;
        let p = CircuitParams::new(vec![50.0, 50.0], vec![0.0], a, 0.0, 0.0).unwrap();
        let omega = 50.0;
        let period = 2.0 * PI / omega;
        let steps = 4000;
        let space = HilbertSpace::new(2).unwrap();
        let mut avg: Array2<C64> = Array2::zeros((space.dim(), space.dim()));
        for k in 0..=steps {
            let t = period * k as f64 / steps as f64;
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            avg.scaled_add(
                C64::new(w / steps as f64, 0.0),
                drive_hamiltonian(t, &p, &[0.0; 2]).unwrap().matrix(),
            );
        }
        let mut expected: Array2<C64> = Array2::zeros((space.dim(), space.dim()));
        for site in 1..=2 {
            let y = embed_single(&pauli(Pauli::Y), site, space).unwrap();
            expected.scaled_add(C64::new(-a / 2.0, 0.0), y.matrix());
        }
        let rel = linalg::max_abs(&(&avg - &expected)) / (a / 2.0);
        assert!(rel < 2.0 / omega, "relative deviation {rel:e}");
    }

    #[test]
    fn schedule_layout_instantaneous() {
        let pulse = PulseSpec::instantaneous(PI, 5).unwrap();
        let s = make_schedule(1.0, 3, pulse, 32).unwrap();
        assert_eq!(s.segments.len(), 6);
        for (k, seg) in s.segments.iter().enumerate() {
            match seg {
                Segment::Free { duration } if k % 2 == 0 => {
                    assert_abs_diff_eq!(*duration, 1.0, epsilon = 1e-15)
                }
                Segment::Pulse(_) if k % 2 == 1 => {}
                other => panic!("unexpected segment {other:?} at {k}"),
            }
        }
        assert_abs_diff_eq!(s.total_duration(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn finite_pulse_duration_formula() {
        // ε = 0, A = π rad/ns gives Δt = 1 ns
        let pulse = PulseSpec::new(
            PI,
            PulseKind::FiniteRwa,
            Some(PI),
            vec![1.0; 5],
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(pulse.duration(), 1.0, epsilon = 1e-15);

        let s = make_schedule(10.0, 4, pulse.clone(), 32).unwrap();
        let mut total = 0.0;
        for seg in &s.segments {
            total += match seg {
                Segment::Free { duration } => *duration,
                Segment::Pulse(p) => p.duration(),
            };
        }
        assert_abs_diff_eq!(total, 40.0, epsilon = 1e-9);

        // a pulse that does not fit is rejected
        assert!(make_schedule(0.5, 4, pulse, 32).is_err());
    }

    #[test]
    fn gradient_scale_profile() {
        let s = linear_gradient_scale(5, 0.1);
        assert_abs_diff_eq!(s[2], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[0], 1.0 - 0.1 * 2.0 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[4], 1.0 + 0.1 * 2.0 / 5.0, epsilon = 1e-15);
        // symmetric about the center
        assert_abs_diff_eq!(s[0] + s[4], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn pulse_spec_validation() {
        assert!(PulseSpec::instantaneous(0.0, 3).is_err());
        assert!(PulseSpec::instantaneous(3.2, 3).is_err());
        assert!(PulseSpec::new(PI, PulseKind::FiniteRwa, None, vec![1.0; 3], None).is_err());
        assert!(PulseSpec::new(
            PI,
            PulseKind::FiniteLab,
            Some(1.0),
            vec![1.0; 3],
            None
        )
        .is_err());
        assert!(PulseSpec::new(
            PI,
            PulseKind::Instantaneous,
            None,
            vec![1.0, -1.0, 1.0],
            None
        )
        .is_err());
    }
}
