//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. Spectral
//! functions (square roots, generalized inverse square roots, support
//! projectors) all go through [`hermitian_eig`], which symmetrizes its input
//! and returns eigenvalues in descending order with a deterministic phase
//! convention on the eigenvectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Seeded generator used for every random instance in the crate.
pub type SeededRng = ChaCha8Rng;

/// Tolerance on `||M - M^dagger||_F`, relative to `max(1, ||M||_F)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default absolute tolerance for PSD checks and rank decisions.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Eigenvalues at or below `RELATIVE_RANK_CUTOFF * lambda_max` are treated as zero.
pub const RELATIVE_RANK_CUTOFF: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn from_real_diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| cr(v)),
    ))
}

/// Row-major constructor, mostly for tests and fixtures.
pub fn from_rows(rows: &[&[Complex64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Real row-major constructor.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| cr(rows[i][j]))
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn basis_vector(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = cr(1.0);
    v
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.norm()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().sum()
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// `||U^dagger U - I||_F`; small for isometries and unitaries.
pub fn isometry_residual(u: &CMatrix) -> f64 {
    (u.adjoint() * u - identity(u.ncols())).norm()
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    (a * b - b * a).norm()
}

/// A square matrix known to be Hermitian within [`HERMITIAN_TOL`].
///
/// Construction symmetrizes the input, so downstream spectral routines see an
/// exactly Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        check_finite(&m)?;
        let deviation = hermitian_deviation(&m);
        if deviation > HERMITIAN_TOL * m.norm().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// Hermitian part `(M + M^dagger) / 2` without a tolerance check.
    pub fn symmetrized(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()) * cr(0.5);
        Self(h)
    }

    pub fn identity(d: usize) -> Self {
        Self(identity(d))
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        Self(from_real_diagonal(values))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }
}

impl AsRef<CMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigendecomposition `M = V diag(values) V^dagger` with values descending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    /// `V diag(f(values)) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let s = f(v);
            for i in 0..d {
                scaled[(i, k)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Eigenvalues strictly above `max(tol, RELATIVE_RANK_CUTOFF * lambda_max)`.
    pub fn rank(&self, tol: f64) -> usize {
        let cutoff = rank_cutoff(self.max_value(), tol);
        self.values.iter().filter(|&&v| v > cutoff).count()
    }
}

pub fn rank_cutoff(lambda_max: f64, tol: f64) -> f64 {
    tol.max(RELATIVE_RANK_CUTOFF * lambda_max)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending. Each eigenvector is rescaled by a phase
/// so that its first entry of largest modulus is real and positive.
pub fn hermitian_eig(m: &HermitianMatrix) -> Eigh {
    let d = m.dim();
    if d == 0 {
        return Eigh {
            values: Vec::new(),
            vectors: zeros(0, 0),
        };
    }
    let eig = m.as_matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        let mut best = -1.0;
        for i in 0..d {
            // small slack so near-ties resolve to the lowest index
            if col[i].norm() > best * (1.0 + 1e-9) {
                best = col[i].norm();
                pivot = i;
            }
        }
        let phase = if best > 0.0 {
            col[pivot].conj() / best
        } else {
            cr(1.0)
        };
        for i in 0..d {
            vectors[(i, dst)] = col[i] * phase;
        }
    }
    Eigh { values, vectors }
}

fn checked_psd_eig(m: &HermitianMatrix, tol: f64) -> Result<Eigh> {
    let eig = hermitian_eig(m);
    if eig.min_value() < -tol {
        return Err(Error::NotPsd {
            eigenvalue: eig.min_value(),
        });
    }
    Ok(eig)
}

/// PSD square root; eigenvalues in `[-tol, 0)` are clipped to zero.
pub fn psd_sqrt(m: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let eig = checked_psd_eig(m, tol)?;
    Ok(HermitianMatrix::symmetrized(eig.map(|v| v.max(0.0).sqrt())))
}

/// Generalized inverse square root: `lambda^{-1/2}` on the support, zero on the kernel.
pub fn psd_pinv_sqrt(m: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let eig = checked_psd_eig(m, tol)?;
    let cutoff = rank_cutoff(eig.max_value(), tol);
    Ok(HermitianMatrix::symmetrized(eig.map(|v| {
        if v > cutoff {
            1.0 / v.sqrt()
        } else {
            0.0
        }
    })))
}

/// Orthogonal projector onto the span of eigenvectors above the rank cutoff.
pub fn support_projector(m: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let eig = checked_psd_eig(m, tol)?;
    let cutoff = rank_cutoff(eig.max_value(), tol);
    Ok(HermitianMatrix::symmetrized(eig.map(|v| {
        if v > cutoff {
            1.0
        } else {
            0.0
        }
    })))
}

/// Deterministic child seed for stream `index` of a parent seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Standard complex Gaussian entry: real and imaginary parts N(0, 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill order is part of the reproducibility contract
    let mut m = zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Q factor of a thin QR decomposition, with column phases chosen so that R has
/// a positive real diagonal. Requires `rows >= cols`.
pub fn orthonormalize(m: &CMatrix) -> CMatrix {
    let cols = m.ncols();
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..cols {
        let rkk = r[(k, k)];
        let n = rkk.norm();
        let phase = if n > 0.0 { rkk / n } else { cr(1.0) };
        for i in 0..q.nrows() {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Haar-distributed isometry (`rows >= cols`) drawn from `rng`.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    orthonormalize(&gaussian_matrix(rows, cols, rng))
}

/// Haar-random unitary of size `d`, deterministic in `seed`.
pub fn haar_unitary(d: usize, seed: u64) -> CMatrix {
    let mut rng = seeded_rng(seed);
    random_isometry(d, d, &mut rng)
}

/// Random PSD matrix `G G^dagger` with `G` a `d x rank` complex Gaussian matrix.
pub fn random_psd<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> HermitianMatrix {
    let g = gaussian_matrix(d, rank, rng);
    HermitianMatrix::symmetrized(&g * g.adjoint())
}

/// Random Hermitian matrix `(G + G^dagger) / 2`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianMatrix {
    HermitianMatrix::symmetrized(gaussian_matrix(d, d, rng))
}

/// Probability vector drawn uniformly from the simplex.
pub fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
