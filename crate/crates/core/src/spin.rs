//! Operators and states on an N-spin Hilbert space.
//!
//! Basis convention, fixed once for reproducible output: site 1 is the most
//! significant bit of the basis index, and |↑⟩ maps to bit 0 (so |↑⟩ is the
//! +1 eigenvector of σᶻ and the all-up configuration is basis index 0).
//! Matrices are dense; the dimension is capped at 4096 (12 sites).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;

/// Hard cap on the Hilbert-space dimension (12 sites).
pub const MAX_SITES: usize = 12;

const HERMITIAN_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const POSITIVITY_TOL: f64 = 1e-8;

/// The N-spin product space. `dim == 2^n_sites`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    n_sites: usize,
    dim: usize,
}

impl HilbertSpace {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::InvalidParameter(format!(
                "n_sites must be in 1..={MAX_SITES}, got {n_sites}"
            )));
        }
        Ok(Self {
            n_sites,
            dim: 1 << n_sites,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bit of `basis_index` belonging to 1-based `site` (0 = up, 1 = down).
    pub fn site_bit(&self, basis_index: usize, site: usize) -> usize {
        debug_assert!(site >= 1 && site <= self.n_sites);
        (basis_index >> (self.n_sites - site)) & 1
    }

    /// σᶻ eigenvalue (±1) of 1-based `site` in `basis_index`.
    pub fn site_sz(&self, basis_index: usize, site: usize) -> f64 {
        1.0 - 2.0 * self.site_bit(basis_index, site) as f64
    }

    /// Sum of σᶻ eigenvalues over all sites of a basis configuration.
    pub fn total_sz(&self, basis_index: usize) -> f64 {
        self.n_sites as f64 - 2.0 * (basis_index.count_ones() as f64)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            })
        } else {
            Ok(())
        }
    }
}

/// Single-site spin orientation used to spell out product states.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SpinDir {
    Up,
    Down,
}

/// The single-site Pauli/ladder matrices in the {|↑⟩, |↓⟩} basis.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
    Identity,
}

/// Standard 2×2 Pauli or ladder matrix. σ⁺ maps |↓⟩ to |↑⟩.
pub fn pauli(p: Pauli) -> Array2<C64> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let (a, b, c, d) = match p {
        Pauli::X => (z, one, one, z),
        Pauli::Y => (z, -i, i, z),
        Pauli::Z => (one, z, z, -one),
        Pauli::Plus => (z, one, z, z),
        Pauli::Minus => (z, z, one, z),
        Pauli::Identity => (one, z, z, one),
    };
    ndarray::array![[a, b], [c, d]]
}

/// Normalized pure state on an N-spin space.
#[derive(Clone, Debug)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: Array1<C64>,
}

impl StateVector {
    /// Wrap an amplitude vector, requiring unit norm within 1e-10.
    pub fn new(space: HilbertSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector has length {}, space dimension is {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let dev = (vec_norm(&amplitudes) - 1.0).abs();
        if dev > NORM_TOL {
            return Err(Error::NotNormalized(dev));
        }
        Ok(Self { space, amplitudes })
    }

    /// Wrap and rescale an arbitrary nonzero amplitude vector to unit norm.
    pub fn normalized(space: HilbertSpace, mut amplitudes: Array1<C64>) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(f64::INFINITY));
        }
        amplitudes.mapv_inplace(|z| z / n);
        Self::new(space, amplitudes)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

fn vec_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian, unit-trace, positive-semidefinite operator for noisy evolution.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    /// Full validation: hermiticity (1e-10), unit trace (1e-8), smallest
    /// eigenvalue ≥ -1e-8.
    pub fn new(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let rho = Self::from_parts(space, matrix)?;
        let (vals, _) = linalg::eigh(&rho.matrix)?;
        let min = vals.first().copied().unwrap_or(0.0);
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix {
                what: "positivity",
                dev: -min,
            });
        }
        Ok(rho)
    }

    /// Hermiticity and trace checks only; positivity is the caller's problem
    /// (used by integrators that certify positivity at the end of a run).
    pub(crate) fn from_parts(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix is {}x{}, space dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                space.dim()
            )));
        }
        let hdev = linalg::hermiticity_deviation(&matrix);
        if hdev > 1e-10 {
            return Err(Error::InvalidDensityMatrix {
                what: "hermiticity",
                dev: hdev,
            });
        }
        let tdev = (trace(&matrix).re - 1.0).abs().max(trace(&matrix).im.abs());
        if tdev > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix {
                what: "unit trace",
                dev: tdev,
            });
        }
        Ok(Self { space, matrix })
    }

    /// |ψ⟩⟨ψ|.
    pub fn from_pure(psi: &StateVector) -> Self {
        let d = psi.space().dim();
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = psi.amplitudes[i] * psi.amplitudes[j].conj();
            }
        }
        Self {
            space: psi.space(),
            matrix: m,
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        trace(&self.matrix)
    }

    /// Smallest eigenvalue (negative values signal loss of positivity).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = linalg::eigh(&self.matrix)?;
        Ok(vals.first().copied().unwrap_or(0.0))
    }
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().iter().sum()
}

/// Dense operator on the full space, with a hermiticity tag.
#[derive(Clone, Debug)]
pub struct SpinOperator {
    space: HilbertSpace,
    matrix: Array2<C64>,
    hermitian: bool,
}

impl SpinOperator {
    /// Wrap a matrix; the hermitian flag is detected within 1e-12.
    pub fn from_matrix(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, space dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                space.dim()
            )));
        }
        let hermitian = linalg::hermiticity_deviation(&matrix) <= HERMITIAN_TOL;
        Ok(Self {
            space,
            matrix,
            hermitian,
        })
    }

    /// Like [`from_matrix`](Self::from_matrix) but errors unless hermitian.
    pub fn hermitian(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let op = Self::from_matrix(space, matrix)?;
        if !op.hermitian {
            return Err(Error::NotHermitian(linalg::hermiticity_deviation(
                &op.matrix,
            )));
        }
        Ok(op)
    }

    pub fn identity(space: HilbertSpace) -> Self {
        Self {
            space,
            matrix: linalg::eye(space.dim()),
            hermitian: true,
        }
    }

    pub fn zero(space: HilbertSpace) -> Self {
        Self {
            space,
            matrix: Array2::zeros((space.dim(), space.dim())),
            hermitian: true,
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Matrix product self·other.
    pub fn compose(&self, other: &SpinOperator) -> Result<SpinOperator> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch(
                "operator spaces differ".into(),
            ));
        }
        SpinOperator::from_matrix(self.space, self.matrix.dot(&other.matrix))
    }

    /// ⟨ψ|O|ψ⟩.
    pub fn expect_state(&self, psi: &StateVector) -> Result<C64> {
        if psi.space() != self.space {
            return Err(Error::DimensionMismatch(
                "state and operator spaces differ".into(),
            ));
        }
        let opsi = self.matrix.dot(psi.amplitudes());
        Ok(psi
            .amplitudes()
            .iter()
            .zip(opsi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tr(ρO).
    pub fn expect_density(&self, rho: &DensityMatrix) -> Result<C64> {
        if rho.space() != self.space {
            return Err(Error::DimensionMismatch(
                "density matrix and operator spaces differ".into(),
            ));
        }
        Ok(trace(&rho.matrix().dot(&self.matrix)))
    }
}

impl std::ops::Add<&SpinOperator> for &SpinOperator {
    type Output = SpinOperator;
    fn add(self, rhs: &SpinOperator) -> SpinOperator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        SpinOperator {
            space: self.space,
            matrix: &self.matrix + &rhs.matrix,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl std::ops::Sub<&SpinOperator> for &SpinOperator {
    type Output = SpinOperator;
    fn sub(self, rhs: &SpinOperator) -> SpinOperator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        SpinOperator {
            space: self.space,
            matrix: &self.matrix - &rhs.matrix,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl std::ops::Mul<f64> for &SpinOperator {
    type Output = SpinOperator;
    fn mul(self, rhs: f64) -> SpinOperator {
        SpinOperator {
            space: self.space,
            matrix: self.matrix.mapv(|z| z * rhs),
            hermitian: self.hermitian,
        }
    }
}

/// Pure or mixed state; lets observables accept either.
#[derive(Clone, Debug)]
pub enum State {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl State {
    pub fn space(&self) -> HilbertSpace {
        match self {
            State::Pure(psi) => psi.space(),
            State::Mixed(rho) => rho.space(),
        }
    }
}

/// Embed a 2×2 operator at 1-based `site`: 1 ⊗ … ⊗ op ⊗ … ⊗ 1.
pub fn embed_single(op: &Array2<C64>, site: usize, space: HilbertSpace) -> Result<SpinOperator> {
    space.check_site(site)?;
    check_2x2(op)?;
    let n = space.n_sites();
    let dim = space.dim();
    let shift = n - site; // bit position of `site` (from LSB)
    let mut m = Array2::zeros((dim, dim));
    for col in 0..dim {
        let bit = (col >> shift) & 1;
        for row_bit in 0..2usize {
            let entry = op[[row_bit, bit]];
            if entry != C64::new(0.0, 0.0) {
                let row = (col & !(1 << shift)) | (row_bit << shift);
                m[[row, col]] += entry;
            }
        }
    }
    SpinOperator::from_matrix(space, m)
}

/// Embed 2×2 operators at two distinct 1-based sites.
pub fn embed_pair(
    op_a: &Array2<C64>,
    op_b: &Array2<C64>,
    i: usize,
    j: usize,
    space: HilbertSpace,
) -> Result<SpinOperator> {
    space.check_site(i)?;
    space.check_site(j)?;
    if i == j {
        return Err(Error::InvalidParameter(format!(
            "embed_pair requires distinct sites, got {i} and {j}"
        )));
    }
    check_2x2(op_a)?;
    check_2x2(op_b)?;
    let n = space.n_sites();
    let dim = space.dim();
    let si = n - i;
    let sj = n - j;
    let mut m = Array2::zeros((dim, dim));
    for col in 0..dim {
        let bi = (col >> si) & 1;
        let bj = (col >> sj) & 1;
        for ri in 0..2usize {
            let ea = op_a[[ri, bi]];
            if ea == C64::new(0.0, 0.0) {
                continue;
            }
            for rj in 0..2usize {
                let eb = op_b[[rj, bj]];
                if eb == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = (col & !(1 << si) & !(1 << sj)) | (ri << si) | (rj << sj);
                m[[row, col]] += ea * eb;
            }
        }
    }
    SpinOperator::from_matrix(space, m)
}

fn check_2x2(op: &Array2<C64>) -> Result<()> {
    if op.nrows() != 2 || op.ncols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a 2x2 single-site operator, got {}x{}",
            op.nrows(),
            op.ncols()
        )));
    }
    Ok(())
}

/// Basis product state for the given up/down pattern (site 1 first).
pub fn product_state(space: HilbertSpace, pattern: &[SpinDir]) -> Result<StateVector> {
    if pattern.len() != space.n_sites() {
        return Err(Error::DimensionMismatch(format!(
            "pattern has {} entries, space has {} sites",
            pattern.len(),
            space.n_sites()
        )));
    }
    let mut index = 0usize;
    for dir in pattern {
        index <<= 1;
        if *dir == SpinDir::Down {
            index |= 1;
        }
    }
    let mut amps = Array1::zeros(space.dim());
    amps[index] = C64::new(1.0, 0.0);
    StateVector::new(space, amps)
}

/// The antiferromagnetic pattern ↑↓↑↓… used as the driven initial state.
pub fn antiferromagnetic_state(space: HilbertSpace) -> StateVector {
    let pattern: Vec<SpinDir> = (0..space.n_sites())
        .map(|k| if k % 2 == 0 { SpinDir::Up } else { SpinDir::Down })
        .collect();
    product_state(space, &pattern).expect("pattern length matches by construction")
}

/// ⟨O⟩ on a pure or mixed state. Hermitian operators give a real result
/// within 1e-10; the full complex value is returned.
pub fn expectation(op: &SpinOperator, state: &State) -> Result<C64> {
    match state {
        State::Pure(psi) => op.expect_state(psi),
        State::Mixed(rho) => op.expect_density(rho),
    }
}

/// The site-reversal (parity) permutation operator R: site i ↔ site N+1-i.
pub fn site_reversal(space: HilbertSpace) -> SpinOperator {
    let n = space.n_sites();
    let dim = space.dim();
    let mut m = Array2::zeros((dim, dim));
    for col in 0..dim {
        let mut row = 0usize;
        for site in 1..=n {
            if space.site_bit(col, site) == 1 {
                row |= 1 << (site - 1);
            }
        }
        m[[row, col]] = C64::new(1.0, 0.0);
    }
    SpinOperator::from_matrix(space, m).expect("permutation matrix is square")
}

/// Σᵢ σᵢᶻ as a full operator.
pub fn total_sz_operator(space: HilbertSpace) -> SpinOperator {
    let dim = space.dim();
    let mut m = Array2::zeros((dim, dim));
    for b in 0..dim {
        m[[b, b]] = C64::new(space.total_sz(b), 0.0);
    }
    SpinOperator::from_matrix(space, m).expect("diagonal matrix is square")
}
