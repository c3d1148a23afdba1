//! Independent reference implementations used only by test suites.
//!
//! Everything here is deliberately built on different numerics than the main
//! crate: a Padé matrix exponential instead of hermitian eigendecomposition,
//! a vectorized-Liouvillian exponential instead of step integration, and a
//! plain RK4 Schrödinger stepper. Tests compare the production paths against
//! these.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;

/// exp(A) for a general complex square matrix, by scaling-and-squaring with
/// a Padé(13) approximant.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }

    let norm = one_norm(a);
    let theta13 = 5.371920351148152;
    let squarings = if norm > theta13 {
        (norm / theta13).log2().ceil() as u32
    } else {
        0
    };
    let scale = C64::new(1.0 / (1u64 << squarings) as f64, 0.0);
    let mut result = pade13(&(a * scale));
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade13(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let eye = Array2::from_diag_elem(n, C64::new(1.0, 0.0));
    let a2 = matmul(a, a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a2, &a4);

    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let u_inner = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = matmul(
        a,
        &(matmul(&a6, &u_inner) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &eye * b(1)),
    );
    let v_inner = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = matmul(&a6, &v_inner) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &eye * b(0);

    let denom = &v - &u;
    let numer = &v + &u;
    solve(denom, numer)
}

/// Solve AX = B by Gaussian elimination with partial pivoting.
fn solve(a: Array2<C64>, b: Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug: Array2<C64> = Array2::zeros((n, n + m));
    aug.slice_mut(s![.., ..n]).assign(&a);
    aug.slice_mut(s![.., n..]).assign(&b);

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = aug[[col, col]].norm();
        for row in col + 1..n {
            let mag = aug[[row, col]].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        assert!(pivot_mag > 1e-300, "singular matrix in Padé solve");
        if pivot_row != col {
            for j in 0..n + m {
                let tmp = aug[[col, j]];
                aug[[col, j]] = aug[[pivot_row, j]];
                aug[[pivot_row, j]] = tmp;
            }
        }
        let pivot = aug[[col, col]];
        for row in col + 1..n {
            let factor = aug[[row, col]] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..n + m {
                let v = aug[[col, j]];
                aug[[row, j]] -= factor * v;
            }
        }
    }

    let mut x: Array2<C64> = Array2::zeros((n, m));
    for col in (0..n).rev() {
        let pivot = aug[[col, col]];
        for j in 0..m {
            let mut sum = aug[[col, n + j]];
            for k in col + 1..n {
                sum -= aug[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = sum / pivot;
        }
    }
    x
}

fn one_norm(a: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let col: f64 = (0..a.nrows()).map(|i| a[[i, j]].norm()).sum();
        best = best.max(col);
    }
    best
}

fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Plain triple-loop matrix product; keeps this crate off the BLAS path the
/// main crate uses.
fn matmul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (n, k) = a.dim();
    let (k2, m) = b.dim();
    assert_eq!(k, k2, "matmul shape mismatch");
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        for p in 0..k {
            let aip = a[[i, p]];
            if aip.norm() == 0.0 {
                continue;
            }
            for j in 0..m {
                out[[i, j]] += aip * b[[p, j]];
            }
        }
    }
    out
}

fn matvec(a: &Array2<C64>, v: &Array1<C64>) -> Array1<C64> {
    let (n, k) = a.dim();
    assert_eq!(k, v.len(), "matvec shape mismatch");
    let mut out = Array1::zeros(n);
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..k {
            acc += a[[i, p]] * v[p];
        }
        out[i] = acc;
    }
    out
}

/// Column-major vectorization.
pub fn vec_of(rho: &Array2<C64>) -> Array1<C64> {
    let n = rho.nrows();
    let mut v = Array1::zeros(n * n);
    for j in 0..n {
        for i in 0..n {
            v[j * n + i] = rho[[i, j]];
        }
    }
    v
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &Array1<C64>, n: usize) -> Array2<C64> {
    let mut m = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            m[[i, j]] = v[j * n + i];
        }
    }
    m
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

/// The Liouvillian superoperator in column-major vectorization:
/// vec(dρ/dt) = 𝓛 vec(ρ) with
/// 𝓛 = −i(1⊗H − Hᵀ⊗1) + Σ_k [L̄⊗L − ½ 1⊗L†L − ½ (L†L)ᵀ⊗1].
pub fn liouvillian(h: &Array2<C64>, collapse: &[Array2<C64>]) -> Array2<C64> {
    let n = h.nrows();
    let eye = Array2::from_diag_elem(n, C64::new(1.0, 0.0));
    let minus_i = C64::new(0.0, -1.0);
    let mut sup = (kron(&eye, h) - kron(&h.t().to_owned(), &eye)).mapv(|z| z * minus_i);
    let half = C64::new(0.5, 0.0);
    for l in collapse {
        let l_conj = l.mapv(|z| z.conj());
        let ldl = matmul(&adjoint(l), l);
        sup += &kron(&l_conj, l);
        sup.scaled_add(-half, &kron(&eye, &ldl));
        sup.scaled_add(-half, &kron(&ldl.t().to_owned(), &eye));
    }
    sup
}

/// Exact master-equation evolution: ρ(t) = unvec(e^{𝓛t} vec ρ₀).
pub fn lindblad_expm(
    rho0: &Array2<C64>,
    h: &Array2<C64>,
    collapse: &[Array2<C64>],
    t: f64,
) -> Array2<C64> {
    let n = rho0.nrows();
    let sup = liouvillian(h, collapse).mapv(|z| z * t);
    let propagated = matvec(&expm(&sup), &vec_of(rho0));
    unvec(&propagated, n)
}

/// Fixed-step RK4 integration of i dψ/dt = H ψ for constant H.
pub fn rk4_schrodinger(
    psi0: &Array1<C64>,
    h: &Array2<C64>,
    t: f64,
    steps: usize,
) -> Array1<C64> {
    assert!(steps > 0);
    let dt = t / steps as f64;
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |psi: &Array1<C64>| matvec(h, psi).mapv(|z| z * minus_i);
    let mut psi = psi0.clone();
    for _ in 0..steps {
        let k1 = rhs(&psi);
        let k2 = rhs(&(&psi + &(&k1 * C64::new(dt / 2.0, 0.0))));
        let k3 = rhs(&(&psi + &(&k2 * C64::new(dt / 2.0, 0.0))));
        let k4 = rhs(&(&psi + &(&k3 * C64::new(dt, 0.0))));
        psi = &psi
            + &((&k1 + &(&k2 * C64::new(2.0, 0.0)) + &(&k3 * C64::new(2.0, 0.0)) + &k4)
                * C64::new(dt / 6.0, 0.0));
    }
    psi
}
