//! Chain Hamiltonian builders.
//!
//! The general chain is
//!   H = Σᵢ (ηᵢ⁰ + ηᵢˣσᵢˣσᵢ₊₁ˣ + ηᵢʸσᵢʸσᵢ₊₁ʸ + ηᵢᶻσᵢᶻσᵢ₊₁ᶻ) − ½ Σᵢ Ωᵢσᵢᶻ,
//! with site-dependent coefficients. Two concrete parameterizations are
//! provided: a strongly interacting two-component trapped gas (couplings set
//! by contact-interaction strengths g, κ and trap-geometry coefficients αᵢ,
//! in harmonic-oscillator units), and a qubit circuit reduced to Ising
//! couplings Jᵢᶻ with per-qubit frequencies Ωᵢ (angular units, time in ns).

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spin::{embed_pair, embed_single, pauli, HilbertSpace, Pauli, SpinOperator};

/// Trap-geometry exchange coefficients for five sites in a harmonic trap.
pub const ALPHA_N5: [f64; 4] = [2.16612, 3.17738, 3.17738, 2.16612];

/// Measured frequencies Ωᵢ/2π in GHz for the first three qubits; the rest
/// follow by mirror symmetry.
pub const TABLE_OMEGA_GHZ: [f64; 3] = [17.0, 35.6, 43.361];
/// Ising couplings Jᵢᶻ/2π in MHz for the first two bonds (mirror-completed).
pub const TABLE_JZ_MHZ: [f64; 2] = [168.9, -29.07];
/// Fabrication uncertainties, stored as metadata only.
pub const TABLE_OMEGA_UNC_GHZ: [f64; 3] = [0.048, 0.21, 0.048];
pub const TABLE_JZ_UNC_MHZ: [f64; 2] = [1.1, 0.18];

/// GHz → rad/ns.
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    TAU * f_ghz
}

/// MHz → rad/ns.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e-3
}

/// Full parameterization of the chain: bond coefficients η⁰, ηˣ, ηʸ, ηᶻ
/// (length N−1) and field frequencies Ω (length N).
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSet {
    pub eta0: Vec<f64>,
    pub etax: Vec<f64>,
    pub etay: Vec<f64>,
    pub etaz: Vec<f64>,
    pub omega: Vec<f64>,
}

impl CouplingSet {
    pub fn new(
        eta0: Vec<f64>,
        etax: Vec<f64>,
        etay: Vec<f64>,
        etaz: Vec<f64>,
        omega: Vec<f64>,
    ) -> Result<Self> {
        let n = omega.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "a chain needs at least 2 sites".into(),
            ));
        }
        for (name, v) in [
            ("eta0", &eta0),
            ("etax", &etax),
            ("etay", &etay),
            ("etaz", &etaz),
        ] {
            if v.len() != n - 1 {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has length {}, expected {} for {} sites",
                    v.len(),
                    n - 1,
                    n
                )));
            }
        }
        for v in eta0
            .iter()
            .chain(&etax)
            .chain(&etay)
            .chain(&etaz)
            .chain(&omega)
        {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(
                    "coupling values must be finite".into(),
                ));
            }
        }
        Ok(Self {
            eta0,
            etax,
            etay,
            etaz,
            omega,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.omega.len()
    }

    /// Largest |coupling| over all bond channels.
    pub fn max_bond_coupling(&self) -> f64 {
        self.etax
            .iter()
            .chain(&self.etay)
            .chain(&self.etaz)
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Trapped two-component gas with contact interactions: interspecies
/// strength g, intra/inter ratio κ (κ = ∞ reproduces spinless fermions),
/// and trap-determined exchange coefficients αᵢ. Harmonic-oscillator units.
#[derive(Clone, Debug, PartialEq)]
pub struct ColdAtomParams {
    pub n_sites: usize,
    pub g: f64,
    pub kappa: f64,
    pub alpha: Vec<f64>,
}

impl ColdAtomParams {
    pub fn new(n_sites: usize, g: f64, kappa: f64, alpha: Vec<f64>) -> Result<Self> {
        if g.is_nan() || g <= 0.0 || g.is_infinite() {
            return Err(Error::InvalidParameter(format!(
                "g must be positive and finite, got {g}"
            )));
        }
        if kappa.is_nan() || kappa <= 0.0 {
            // infinity is allowed: the fermionic limit is exact
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive (or infinite), got {kappa}"
            )));
        }
        if n_sites < 2 {
            return Err(Error::InvalidParameter(
                "a chain needs at least 2 sites".into(),
            ));
        }
        if alpha.len() != n_sites - 1 {
            return Err(Error::DimensionMismatch(format!(
                "alpha has length {}, expected {}",
                alpha.len(),
                n_sites - 1
            )));
        }
        Ok(Self {
            n_sites,
            g,
            kappa,
            alpha,
        })
    }

    /// Defaults for the five-site harmonic trap.
    pub fn n5(g: f64, kappa: f64) -> Result<Self> {
        Self::new(5, g, kappa, ALPHA_N5.to_vec())
    }

    /// The effective chain description holds for strong coupling (g ≫ 1);
    /// below g = 5 the mapping is dubious but not rejected.
    pub fn validity_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.g < 5.0 {
            w.push(format!(
                "g = {} is below the strong-coupling regime (g >> 1); the spin-chain mapping is first order in 1/g",
                self.g
            ));
        }
        w
    }
}

/// Qubit-circuit parameters in angular units (rad/ns): frequencies Ωᵢ, Ising
/// couplings Jᵢᶻ, drive amplitude A, pulse imperfection ε, noise rate ζ.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitParams {
    pub omega_q: Vec<f64>,
    pub jz: Vec<f64>,
    pub amplitude: f64,
    pub epsilon: f64,
    pub zeta: f64,
    /// Fabrication spread, carried as metadata; never enters the dynamics.
    pub omega_unc: Option<Vec<f64>>,
    pub jz_unc: Option<Vec<f64>>,
}

impl CircuitParams {
    pub fn new(omega_q: Vec<f64>, jz: Vec<f64>, amplitude: f64, epsilon: f64, zeta: f64) -> Result<Self> {
        let n = omega_q.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "a chain needs at least 2 sites".into(),
            ));
        }
        if jz.len() != n - 1 {
            return Err(Error::DimensionMismatch(format!(
                "jz has length {}, expected {}",
                jz.len(),
                n - 1
            )));
        }
        if amplitude.is_nan() || amplitude <= 0.0 || amplitude.is_infinite() {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        if !(0.0..std::f64::consts::PI).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, pi), got {epsilon}"
            )));
        }
        if zeta.is_nan() || zeta < 0.0 || zeta.is_infinite() {
            return Err(Error::InvalidParameter(format!(
                "zeta must be finite and non-negative, got {zeta}"
            )));
        }
        Ok(Self {
            omega_q,
            jz,
            amplitude,
            epsilon,
            zeta,
            omega_unc: None,
            jz_unc: None,
        })
    }

    /// Build from table values in GHz/MHz, completing the missing sites by
    /// mirror symmetry about the chain center (Ω₄=Ω₂, Ω₅=Ω₁, J₃=J₂, J₄=J₁).
    pub fn from_table_ghz_mhz(
        n_sites: usize,
        omega_ghz: &[f64],
        jz_mhz: &[f64],
        amplitude: f64,
        epsilon: f64,
        zeta: f64,
    ) -> Result<Self> {
        let omega: Vec<f64> = mirror_complete(omega_ghz, n_sites)?
            .into_iter()
            .map(ghz_to_angular)
            .collect();
        let jz: Vec<f64> = mirror_complete(jz_mhz, n_sites - 1)?
            .into_iter()
            .map(mhz_to_angular)
            .collect();
        Self::new(omega, jz, amplitude, epsilon, zeta)
    }

    pub fn n_sites(&self) -> usize {
        self.omega_q.len()
    }

    pub fn max_jz(&self) -> f64 {
        self.jz.iter().map(|j| j.abs()).fold(0.0, f64::max)
    }

    /// Holds when the couplings are symmetric across the chain center.
    pub fn is_mirror_symmetric(&self) -> bool {
        let n = self.omega_q.len();
        let omega_ok = (0..n).all(|i| (self.omega_q[i] - self.omega_q[n - 1 - i]).abs() < 1e-12);
        let nb = self.jz.len();
        let jz_ok = (0..nb).all(|i| (self.jz[i] - self.jz[nb - 1 - i]).abs() < 1e-12);
        omega_ok && jz_ok
    }
}

/// Extend the first ceil(n/2) values of a mirror-symmetric vector to length n.
/// A full-length input is passed through unchanged.
pub fn mirror_complete(half: &[f64], n: usize) -> Result<Vec<f64>> {
    if half.len() == n {
        return Ok(half.to_vec());
    }
    let need = n.div_ceil(2);
    if half.len() != need {
        return Err(Error::DimensionMismatch(format!(
            "expected {need} (half, mirror-completed) or {n} (full) values, got {}",
            half.len()
        )));
    }
    let mut full = Vec::with_capacity(n);
    for i in 0..n {
        let k = i.min(n - 1 - i);
        full.push(half[k]);
    }
    Ok(full)
}

/// Which frame the circuit Hamiltonian lives in: the rotating frame keeps
/// only the Ising couplings; the lab frame adds the qubit field −½ΣΩᵢσᵢᶻ.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    Rotating,
    Lab,
}

/// Assemble H = Σᵢ(ηᵢ⁰ + ηᵢˣσσ + ηᵢʸσσ + ηᵢᶻσσ) − ½ΣᵢΩᵢσᵢᶻ.
pub fn build_xxz(couplings: &CouplingSet, space: HilbertSpace) -> Result<SpinOperator> {
    if couplings.n_sites() != space.n_sites() {
        return Err(Error::DimensionMismatch(format!(
            "couplings for {} sites, space has {}",
            couplings.n_sites(),
            space.n_sites()
        )));
    }
    let dim = space.dim();
    let mut h: Array2<C64> = Array2::zeros((dim, dim));
    let shift: f64 = couplings.eta0.iter().sum();
    for d in 0..dim {
        h[[d, d]] += C64::new(shift, 0.0);
    }
    for bond in 0..space.n_sites() - 1 {
        let (i, j) = (bond + 1, bond + 2);
        for (eta, p) in [
            (couplings.etax[bond], Pauli::X),
            (couplings.etay[bond], Pauli::Y),
            (couplings.etaz[bond], Pauli::Z),
        ] {
            if eta != 0.0 {
                let term = embed_pair(&pauli(p), &pauli(p), i, j, space)?;
                h.scaled_add(C64::new(eta, 0.0), term.matrix());
            }
        }
    }
    for (site, omega) in couplings.omega.iter().enumerate() {
        if *omega != 0.0 {
            let term = embed_single(&pauli(Pauli::Z), site + 1, space)?;
            h.scaled_add(C64::new(-0.5 * omega, 0.0), term.matrix());
        }
    }
    SpinOperator::hermitian(space, h)
}

/// Effective chain couplings of the trapped gas:
/// η⁰ = −½(α/g)(1 + 2/κ), ηˣ = ηʸ = ½(α/g), ηᶻ = ½(α/g)(1 − 2/κ), Ω = 0.
pub fn cold_atom_couplings(p: &ColdAtomParams) -> Result<CouplingSet> {
    // 2/κ evaluates to exactly 0 at κ = ∞, so the fermionic limit is exact.
    let two_over_kappa = 2.0 / p.kappa;
    let mut eta0 = Vec::with_capacity(p.n_sites - 1);
    let mut etaxy = Vec::with_capacity(p.n_sites - 1);
    let mut etaz = Vec::with_capacity(p.n_sites - 1);
    for a in &p.alpha {
        let base = 0.5 * a / p.g;
        eta0.push(-base * (1.0 + two_over_kappa));
        etaxy.push(base);
        etaz.push(base * (1.0 - two_over_kappa));
    }
    CouplingSet::new(eta0, etaxy.clone(), etaxy, etaz, vec![0.0; p.n_sites])
}

/// The κ → ∞ limit of [`cold_atom_couplings`]: an isotropic exchange chain,
/// η⁰ = −½α/g and ηˣ = ηʸ = ηᶻ = ½α/g.
pub fn fermionic_couplings(g: f64, alpha: &[f64]) -> Result<CouplingSet> {
    let p = ColdAtomParams::new(alpha.len() + 1, g, f64::INFINITY, alpha.to_vec())?;
    cold_atom_couplings(&p)
}

/// H = −Σᵢ (αᵢ/g)(1 − P_{i,i+1}) with P = ½(1 + σᵢ·σᵢ₊₁) the neighbor
/// exchange operator. Hermitian and negative semidefinite.
pub fn permutation_hamiltonian(g: f64, alpha: &[f64], space: HilbertSpace) -> Result<SpinOperator> {
    if g.is_nan() || g <= 0.0 || g.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "g must be positive and finite, got {g}"
        )));
    }
    if alpha.len() != space.n_sites() - 1 {
        return Err(Error::DimensionMismatch(format!(
            "alpha has length {}, expected {}",
            alpha.len(),
            space.n_sites() - 1
        )));
    }
    let dim = space.dim();
    let mut h: Array2<C64> = Array2::zeros((dim, dim));
    for (bond, a) in alpha.iter().enumerate() {
        let (i, j) = (bond + 1, bond + 2);
        // 1 - P = ½(1 - σ·σ)
        let mut one_minus_p: Array2<C64> = Array2::from_diag_elem(dim, C64::new(0.5, 0.0));
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let term = embed_pair(&pauli(p), &pauli(p), i, j, space)?;
            one_minus_p.scaled_add(C64::new(-0.5, 0.0), term.matrix());
        }
        h.scaled_add(C64::new(-a / g, 0.0), &one_minus_p);
    }
    SpinOperator::hermitian(space, h)
}

/// Circuit chain couplings: the rotating frame keeps only ηᶻ = Jᶻ; the lab
/// frame adds Ωᵢ so that H_lab − H_rot = −½ΣΩᵢσᵢᶻ.
pub fn circuit_couplings(p: &CircuitParams, frame: Frame) -> Result<CouplingSet> {
    let nb = p.jz.len();
    let omega = match frame {
        Frame::Rotating => vec![0.0; p.n_sites()],
        Frame::Lab => p.omega_q.clone(),
    };
    CouplingSet::new(
        vec![0.0; nb],
        vec![0.0; nb],
        vec![0.0; nb],
        p.jz.clone(),
        omega,
    )
}
