//! States, ensembles and completely positive maps.
//!
//! Choi convention: `J = sum_{kl} |k><l| (x) A(|k><l|)` with the input factor
//! first. Under column-stacking `vec`, `vec(A)[k * d_out + a] = A[a, k]` and
//! `J = sum_i vec(A_i) vec(A_i)^dagger`, so row index `k * d_out + a` pairs
//! input basis state `k` with output basis state `a`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    self, basis_vector, cr, hermitian_eig, identity, isometry_residual, kron, outer,
    random_isometry, random_probabilities, seeded_rng, zeros, CMatrix, CVector, Eigh,
    HermitianMatrix, DEFAULT_TOL,
};

/// `||sum A_i^dagger A_i - I||_F` allowed for a channel flagged trace-preserving.
pub const TP_TOL: f64 = 1e-8;

/// Kraus operators with Frobenius norm below this are dropped by [`KrausChannel::normalized`].
pub const NULL_OPERATOR_TOL: f64 = 1e-12;

/// Pairwise commutator norm below which an ensemble counts as commuting.
pub const COMMUTING_TOL: f64 = 1e-8;

const DENSITY_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-9;

/// Positive semi-definite, unit-trace Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::from_hermitian(HermitianMatrix::new(m)?)
    }

    pub fn from_hermitian(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::TraceNotOne { trace: tr });
        }
        let min = hermitian_eig(&h).min_value();
        if min < -DENSITY_TOL {
            return Err(Error::NotPsd { eigenvalue: min });
        }
        Ok(Self(h))
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("zero or non-finite state vector".into()));
        }
        let v = psi.unscale(n);
        Ok(Self(HermitianMatrix::symmetrized(outer(&v, &v))))
    }

    pub fn basis(d: usize, k: usize) -> Self {
        Self(HermitianMatrix::symmetrized(outer(
            &basis_vector(d, k),
            &basis_vector(d, k),
        )))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(HermitianMatrix::symmetrized(identity(d) * cr(1.0 / d as f64)))
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::from_hermitian(HermitianMatrix::from_real_diagonal(probabilities))
    }

    /// Normalizes a PSD matrix by its trace.
    pub fn from_psd(m: &HermitianMatrix) -> Result<Self> {
        let tr = m.trace();
        if tr <= 0.0 {
            return Err(Error::TraceNotOne { trace: tr });
        }
        Self::from_hermitian(HermitianMatrix::symmetrized(m.as_matrix() * cr(1.0 / tr)))
    }

    /// `U diag(p) U^dagger`.
    pub fn with_spectrum(unitary: &CMatrix, probabilities: &[f64]) -> Result<Self> {
        let d = linalg::from_real_diagonal(probabilities);
        Self::new(unitary * d * unitary.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        self.0.as_matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn eig(&self) -> Eigh {
        hermitian_eig(&self.0)
    }
}

/// Random density matrix of the given rank (Hilbert-Schmidt-type measure).
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let psd = linalg::random_psd(d, rank, rng);
    DensityMatrix::from_psd(&psd).expect("Gaussian PSD has positive trace")
}

/// Probability-weighted list of density matrices of a common dimension.
#[derive(Clone, Debug)]
pub struct Ensemble {
    members: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyEnsemble)?;
        let d = first.1.dim();
        check_probabilities(members.iter().map(|m| m.0))?;
        for (_, rho) in &members {
            if rho.dim() != d {
                return Err(Error::DimensionMismatch {
                    context: "ensemble member dimension",
                    expected: d,
                    found: rho.dim(),
                });
            }
        }
        Ok(Self { members })
    }

    pub fn single(rho: DensityMatrix) -> Self {
        Self {
            members: vec![(1.0, rho)],
        }
    }

    /// `{lambda_k, |v_k><v_k|}` from the eigendecomposition of `rho`.
    pub fn eigen_ensemble(rho: &DensityMatrix) -> Self {
        Self::in_basis(rho, &rho.eig().vectors)
            .expect("eigenbasis of a density matrix yields a valid ensemble")
    }

    /// `{<b_k|rho|b_k>, |b_k><b_k|}` for the orthonormal columns `b_k` of `basis`.
    pub fn in_basis(rho: &DensityMatrix, basis: &CMatrix) -> Result<Self> {
        if basis.nrows() != rho.dim() || basis.ncols() != rho.dim() {
            return Err(Error::DimensionMismatch {
                context: "basis size",
                expected: rho.dim(),
                found: basis.ncols(),
            });
        }
        let residual = isometry_residual(basis);
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        let mut members = Vec::with_capacity(rho.dim());
        let mut weights = Vec::with_capacity(rho.dim());
        for k in 0..basis.ncols() {
            let b = basis.column(k).into_owned();
            let w = (b.adjoint() * rho.as_matrix() * &b)[(0, 0)].re.max(0.0);
            weights.push(w);
            members.push(DensityMatrix::pure(&b)?);
        }
        let total: f64 = weights.iter().sum();
        Self::new(
            weights
                .into_iter()
                .map(|w| w / total)
                .zip(members)
                .collect(),
        )
    }

    pub fn members(&self) -> &[(f64, DensityMatrix)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    pub fn average(&self) -> DensityMatrix {
        let d = self.dim();
        let mut acc = zeros(d, d);
        for (p, rho) in &self.members {
            acc += rho.as_matrix() * cr(*p);
        }
        DensityMatrix::new(acc).expect("convex combination of density matrices")
    }

    pub fn max_commutator_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (_, a)) in self.members.iter().enumerate() {
            for (_, b) in &self.members[i + 1..] {
                worst = worst.max(linalg::commutator_norm(a.as_matrix(), b.as_matrix()));
            }
        }
        worst
    }

    pub fn is_commuting(&self) -> bool {
        self.max_commutator_norm() <= COMMUTING_TOL
    }
}

pub(crate) fn check_probabilities(ps: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for p in ps {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::InvalidProbabilities(format!("negative or non-finite weight {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidProbabilities(format!("weights sum to {total}")));
    }
    Ok(())
}

/// Ensemble of `members` density matrices that share one random eigenbasis.
pub fn random_commuting_ensemble<R: Rng + ?Sized>(d: usize, members: usize, rng: &mut R) -> Ensemble {
    let u = random_isometry(d, d, rng);
    let weights = random_probabilities(members, rng);
    let list = weights
        .into_iter()
        .map(|p| {
            let spectrum = random_probabilities(d, rng);
            (p, DensityMatrix::with_spectrum(&u, &spectrum).expect("valid spectrum"))
        })
        .collect();
    Ensemble::new(list).expect("valid random ensemble")
}

/// Completely positive map `rho -> sum_i A_i rho A_i^dagger` given by Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    d_in: usize,
    d_out: usize,
    operators: Vec<CMatrix>,
    trace_preserving: bool,
}

impl KrausChannel {
    /// Trace-preserving channel; fails if `sum A_i^dagger A_i` deviates from the identity.
    pub fn new(d_in: usize, d_out: usize, operators: Vec<CMatrix>) -> Result<Self> {
        let mut ch = Self::new_subnormalized(d_in, d_out, operators)?;
        let residual = ch.tp_residual();
        if residual > TP_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        ch.trace_preserving = true;
        Ok(ch)
    }

    /// Completely positive map with no trace condition; not flagged trace-preserving.
    pub fn new_subnormalized(d_in: usize, d_out: usize, operators: Vec<CMatrix>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::EmptyChannel);
        }
        for op in &operators {
            if op.nrows() != d_out {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator rows (d_out)",
                    expected: d_out,
                    found: op.nrows(),
                });
            }
            if op.ncols() != d_in {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator columns (d_in)",
                    expected: d_in,
                    found: op.ncols(),
                });
            }
            linalg::check_finite(op)?;
        }
        Ok(Self {
            d_in,
            d_out,
            operators,
            trace_preserving: false,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(identity(d)).expect("identity is unitary")
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        let residual = isometry_residual(&u);
        if u.nrows() != u.ncols() {
            return Err(Error::NotSquare {
                rows: u.nrows(),
                cols: u.ncols(),
            });
        }
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        let d = u.nrows();
        Self::new(d, d, vec![u])
    }

    /// Qubit depolarizing channel `{sqrt(1-3p/4) I, sqrt(p/4) X, sqrt(p/4) Y, sqrt(p/4) Z}`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=4.0 / 3.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing parameter {p} outside [0, 4/3]")));
        }
        let [i, x, y, z] = paulis();
        let a = (1.0 - 0.75 * p).sqrt();
        let b = (p / 4.0).sqrt();
        Self::new(2, 2, vec![i * cr(a), x * cr(b), y * cr(b), z * cr(b)])
    }

    /// Qubit dephasing `{sqrt(1-q) I, sqrt(q) Z}`.
    pub fn dephasing(q: f64) -> Result<Self> {
        check_unit_interval(q)?;
        let [i, _, _, z] = paulis();
        Self::new(2, 2, vec![i * cr((1.0 - q).sqrt()), z * cr(q.sqrt())])
    }

    /// Qubit bit flip `{sqrt(1-p) I, sqrt(p) X}`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        check_unit_interval(p)?;
        let [i, x, _, _] = paulis();
        Self::new(2, 2, vec![i * cr((1.0 - p).sqrt()), x * cr(p.sqrt())])
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn is_square(&self) -> bool {
        self.d_in == self.d_out
    }

    /// `sum_i A_i^dagger A_i`.
    pub fn gram(&self) -> CMatrix {
        self.operators
            .iter()
            .fold(zeros(self.d_in, self.d_in), |acc, a| acc + a.adjoint() * a)
    }

    pub fn tp_residual(&self) -> f64 {
        (self.gram() - identity(self.d_in)).norm()
    }

    /// Drops operators with `||A_i||_F < NULL_OPERATOR_TOL`, keeping at least one.
    pub fn normalized(&self) -> Self {
        let mut ops: Vec<CMatrix> = self
            .operators
            .iter()
            .filter(|a| a.norm() >= NULL_OPERATOR_TOL)
            .cloned()
            .collect();
        if ops.is_empty() {
            ops.push(zeros(self.d_out, self.d_in));
        }
        Self {
            operators: ops,
            ..self.clone()
        }
    }

    /// `sum_i A_i X A_i^dagger` for an arbitrary `d_in x d_in` matrix.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.d_in || x.ncols() != self.d_in {
            return Err(Error::DimensionMismatch {
                context: "channel input dimension",
                expected: self.d_in,
                found: x.nrows(),
            });
        }
        Ok(self
            .operators
            .iter()
            .fold(zeros(self.d_out, self.d_out), |acc, a| acc + a * x * a.adjoint()))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply_matrix(rho.as_matrix())?)
    }

    /// Output as a PSD matrix without requiring unit trace.
    pub fn apply_psd(&self, rho: &DensityMatrix) -> Result<HermitianMatrix> {
        Ok(HermitianMatrix::symmetrized(self.apply_matrix(rho.as_matrix())?))
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let n = self.d_in * self.d_out;
        let mut j = zeros(n, n);
        for a in &self.operators {
            let v = vec_columns(a);
            j += &v * v.adjoint();
        }
        ChoiMatrix {
            d_in: self.d_in,
            d_out: self.d_out,
            matrix: HermitianMatrix::symmetrized(j),
        }
    }

    /// `B_i = sum_j u_ij A_j` after padding the operator list with `pad` zero operators.
    pub fn kraus_remix(&self, u: &CMatrix, pad: usize) -> Result<Self> {
        let n = self.operators.len() + pad;
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "remixing unitary size (operators + padding)",
                expected: n,
                found: u.nrows(),
            });
        }
        let residual = isometry_residual(u);
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        let ops = (0..n)
            .map(|i| {
                self.operators
                    .iter()
                    .enumerate()
                    .fold(zeros(self.d_out, self.d_in), |acc, (j, a)| acc + a * u[(i, j)])
            })
            .collect();
        Ok(Self {
            operators: ops,
            ..self.clone()
        })
    }

    /// Stinespring isometry `V = sum_j A_j (x) |j>` into `output (x) environment`;
    /// row `a * n_ops + j` holds `<a|A_j`.
    pub fn stinespring(&self) -> CMatrix {
        let k = self.operators.len();
        let mut v = zeros(self.d_out * k, self.d_in);
        for (j, a) in self.operators.iter().enumerate() {
            for r in 0..self.d_out {
                for c in 0..self.d_in {
                    v[(r * k + j, c)] = a[(r, c)];
                }
            }
        }
        v
    }
}

fn check_unit_interval(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("parameter {p} outside [0, 1]")));
    }
    Ok(())
}

/// Pauli matrices `[I, X, Y, Z]`.
pub fn paulis() -> [CMatrix; 4] {
    use linalg::{c, from_rows};
    let o = cr(0.0);
    let l = cr(1.0);
    [
        identity(2),
        from_rows(&[&[o, l], &[l, o]]),
        from_rows(&[&[o, c(0.0, -1.0)], &[c(0.0, 1.0), o]]),
        from_rows(&[&[l, o], &[o, -l]]),
    ]
}

/// Column-stacking `vec`.
pub fn vec_columns(a: &CMatrix) -> CVector {
    CVector::from_iterator(a.len(), a.iter().copied())
}

/// Inverse of [`vec_columns`].
pub fn unvec_columns(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_iterator(rows, cols, v.iter().copied())
}

/// `R compose A`: operators `{R_i A_j}`, ordered with the inner index fastest.
pub fn compose(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
    if inner.d_out != outer.d_in {
        return Err(Error::DimensionMismatch {
            context: "composition: inner output vs outer input",
            expected: outer.d_in,
            found: inner.d_out,
        });
    }
    let ops = outer
        .operators
        .iter()
        .flat_map(|r| inner.operators.iter().map(move |a| r * a))
        .collect();
    Ok(KrausChannel {
        d_in: inner.d_in,
        d_out: outer.d_out,
        operators: ops,
        trace_preserving: outer.trace_preserving && inner.trace_preserving,
    })
}

/// `||J_a - J_b||_F`.
pub fn choi_distance(a: &KrausChannel, b: &KrausChannel) -> Result<f64> {
    if a.d_in != b.d_in {
        return Err(Error::DimensionMismatch {
            context: "choi_distance input dimension",
            expected: a.d_in,
            found: b.d_in,
        });
    }
    if a.d_out != b.d_out {
        return Err(Error::DimensionMismatch {
            context: "choi_distance output dimension",
            expected: a.d_out,
            found: b.d_out,
        });
    }
    Ok((a.to_choi().matrix.as_matrix() - b.to_choi().matrix.as_matrix()).norm())
}

/// Trace-preserving channel sliced from a Haar-random isometry `d_in -> d_out * kraus_rank`.
pub fn random_channel(d_in: usize, d_out: usize, kraus_rank: usize, seed: u64) -> KrausChannel {
    let mut rng = seeded_rng(seed);
    random_channel_from_rng(d_in, d_out, kraus_rank, &mut rng)
}

pub fn random_channel_from_rng<R: Rng + ?Sized>(
    d_in: usize,
    d_out: usize,
    kraus_rank: usize,
    rng: &mut R,
) -> KrausChannel {
    assert!(kraus_rank >= 1, "Kraus rank must be positive");
    assert!(
        d_out * kraus_rank >= d_in,
        "d_out * kraus_rank must be at least d_in for a trace-preserving map"
    );
    let v = random_isometry(d_out * kraus_rank, d_in, rng);
    KrausChannel::from_stacked_isometry(&v, d_out, kraus_rank)
        .expect("Haar isometry slices into a trace-preserving channel")
}

impl KrausChannel {
    /// Channel whose `k`-th operator is the row block `k * d_out .. (k + 1) * d_out` of `v`.
    pub fn from_stacked_isometry(v: &CMatrix, d_out: usize, rank: usize) -> Result<Self> {
        if v.nrows() != d_out * rank {
            return Err(Error::DimensionMismatch {
                context: "stacked isometry rows",
                expected: d_out * rank,
                found: v.nrows(),
            });
        }
        let ops = (0..rank)
            .map(|k| v.rows(k * d_out, d_out).into_owned())
            .collect();
        Self::new(v.ncols(), d_out, ops)
    }

    /// Inverse of [`KrausChannel::from_stacked_isometry`], padding with zero blocks up to `rank`.
    pub fn stacked_isometry(&self, rank: usize) -> CMatrix {
        let mut v = zeros(self.d_out * rank, self.d_in);
        for (k, a) in self.operators.iter().take(rank).enumerate() {
            v.rows_mut(k * self.d_out, self.d_out).copy_from(a);
        }
        v
    }
}

/// Choi matrix of a completely positive map, input factor first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    d_in: usize,
    d_out: usize,
    matrix: HermitianMatrix,
}

impl ChoiMatrix {
    pub fn new(d_in: usize, d_out: usize, matrix: HermitianMatrix) -> Result<Self> {
        if matrix.dim() != d_in * d_out {
            return Err(Error::DimensionMismatch {
                context: "Choi matrix size",
                expected: d_in * d_out,
                found: matrix.dim(),
            });
        }
        Ok(Self { d_in, d_out, matrix })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `tr_out J`, a `d_in x d_in` matrix equal to `(sum A_i^dagger A_i)^T`.
    pub fn partial_trace_output(&self) -> CMatrix {
        partial_trace_output(self.matrix.as_matrix(), self.d_in, self.d_out)
    }

    pub fn tp_residual(&self) -> f64 {
        (self.partial_trace_output() - identity(self.d_in)).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eig(&self.matrix).min_value()
    }

    /// `tr_in [J (X^T (x) I)]`.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.d_in || x.ncols() != self.d_in {
            return Err(Error::DimensionMismatch {
                context: "channel input dimension",
                expected: self.d_in,
                found: x.nrows(),
            });
        }
        let prod = self.matrix.as_matrix() * kron(&x.transpose(), &identity(self.d_out));
        let mut out = zeros(self.d_out, self.d_out);
        for k in 0..self.d_in {
            out += prod.view((k * self.d_out, k * self.d_out), (self.d_out, self.d_out));
        }
        Ok(out)
    }

    /// Minimal Kraus decomposition from the eigendecomposition of `J`.
    ///
    /// Eigenvalues at or below the rank cutoff (and any negative roundoff) are discarded.
    pub fn to_kraus(&self) -> KrausChannel {
        let eig = hermitian_eig(&self.matrix);
        let cutoff = linalg::rank_cutoff(eig.max_value(), DEFAULT_TOL * 1e-2);
        let mut ops: Vec<CMatrix> = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > cutoff)
            .map(|(k, &v)| unvec_columns(&eig.vector(k), self.d_out, self.d_in) * cr(v.sqrt()))
            .collect();
        if ops.is_empty() {
            ops.push(zeros(self.d_out, self.d_in));
        }
        let tp = self.tp_residual() <= TP_TOL;
        KrausChannel {
            d_in: self.d_in,
            d_out: self.d_out,
            operators: ops,
            trace_preserving: tp,
        }
    }
}

pub(crate) fn partial_trace_output(j: &CMatrix, d_in: usize, d_out: usize) -> CMatrix {
    CMatrix::from_fn(d_in, d_in, |k, l| {
        (0..d_out).map(|a| j[(k * d_out + a, l * d_out + a)]).sum()
    })
}
