//! Fidelity measures for channels acting on states and ensembles.
//!
//! Each measure has a direct Kraus-trace formula and, where it matters, an
//! independent route through purifications and the Stinespring dilation:
//!
//! * `F_e(rho, A) = sum_i |tr(A_i rho)|^2`
//! * `avg F_e(E, A) = sum_l p_l F_e(rho_l, A)`
//! * `F_cl(rho, A) = sum_i p_i <i|A(|i><i|)|i>` over an eigenbasis of `rho`
//! * `F_BU(s1, s2) = tr sqrt(s1^{1/2} s2 s1^{1/2})`

use crate::channels::{DensityMatrix, Ensemble, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{self, cr, psd_sqrt, trace, CMatrix, CVector, HermitianMatrix, DEFAULT_TOL};

/// Amplitude budget for the tripartite oracle: `dim_R * dim_Q * members * n_kraus`.
pub const ORACLE_CAP: usize = 4096;

fn require_square_on(rho_dim: usize, channel: &KrausChannel) -> Result<()> {
    if !channel.is_square() {
        return Err(Error::NonSquareChannel {
            d_in: channel.d_in(),
            d_out: channel.d_out(),
        });
    }
    if channel.d_in() != rho_dim {
        return Err(Error::DimensionMismatch {
            context: "state dimension vs channel input",
            expected: channel.d_in(),
            found: rho_dim,
        });
    }
    Ok(())
}

pub fn entanglement_fidelity(rho: &DensityMatrix, channel: &KrausChannel) -> Result<f64> {
    require_square_on(rho.dim(), channel)?;
    Ok(channel
        .operators()
        .iter()
        .map(|a| trace(&(a * rho.as_matrix())).norm_sqr())
        .sum())
}

pub fn avg_entanglement_fidelity(ensemble: &Ensemble, channel: &KrausChannel) -> Result<f64> {
    ensemble
        .members()
        .iter()
        .map(|(p, rho)| Ok(p * entanglement_fidelity(rho, channel)?))
        .sum()
}

/// Classical fidelity over the eigenbasis returned by [`linalg::hermitian_eig`].
///
/// Within a degenerate eigenspace of `rho` the value depends on which basis is
/// chosen; use [`classical_fidelity_in_basis`] to pin one explicitly.
pub fn classical_fidelity(rho: &DensityMatrix, channel: &KrausChannel) -> Result<f64> {
    classical_fidelity_in_basis(rho, channel, &rho.eig().vectors)
}

/// `sum_i <b_i|rho|b_i> <b_i|A(|b_i><b_i|)|b_i>` for the orthonormal columns of `basis`.
pub fn classical_fidelity_in_basis(
    rho: &DensityMatrix,
    channel: &KrausChannel,
    basis: &CMatrix,
) -> Result<f64> {
    require_square_on(rho.dim(), channel)?;
    let ensemble = Ensemble::in_basis(rho, basis)?;
    let mut total = 0.0;
    for (k, (p, _)) in ensemble.members().iter().enumerate() {
        let b = basis.column(k).into_owned();
        let out = channel.apply_matrix(&(&b * b.adjoint()))?;
        total += p * (b.adjoint() * out * &b)[(0, 0)].re;
    }
    Ok(total)
}

fn require_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "fidelity arguments",
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Bures-Uhlmann (root) fidelity, computed as the trace norm of `s1^{1/2} s2^{1/2}`.
///
/// The singular values of `X` and `X^dagger` coincide, so the result is
/// symmetric in its arguments to roundoff.
pub fn bures_fidelity(s1: &DensityMatrix, s2: &DensityMatrix) -> Result<f64> {
    require_same_dim(s1, s2)?;
    let r1 = psd_sqrt(s1.hermitian(), DEFAULT_TOL)?;
    let r2 = psd_sqrt(s2.hermitian(), DEFAULT_TOL)?;
    Ok(linalg::trace_norm(&(r1.as_matrix() * r2.as_matrix())))
}

/// `tr sqrt(s1^{1/2} s2 s1^{1/2})` evaluated literally.
pub fn bures_fidelity_direct(s1: &DensityMatrix, s2: &DensityMatrix) -> Result<f64> {
    require_same_dim(s1, s2)?;
    let r1 = psd_sqrt(s1.hermitian(), DEFAULT_TOL)?;
    let inner = HermitianMatrix::symmetrized(r1.as_matrix() * s2.as_matrix() * r1.as_matrix());
    Ok(psd_sqrt(&inner, DEFAULT_TOL)?.trace())
}

/// Pure state on `R (x) Q`; amplitude index `r * dim_q + q`.
#[derive(Clone, Debug)]
pub struct PurifiedState {
    dim_r: usize,
    dim_q: usize,
    amplitudes: CVector,
}

impl PurifiedState {
    pub fn new(dim_r: usize, dim_q: usize, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != dim_r * dim_q {
            return Err(Error::DimensionMismatch {
                context: "purification amplitude count",
                expected: dim_r * dim_q,
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            dim_r,
            dim_q,
            amplitudes,
        })
    }

    pub fn dim_r(&self) -> usize {
        self.dim_r
    }

    pub fn dim_q(&self) -> usize {
        self.dim_q
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// Amplitudes as a `dim_r x dim_q` matrix.
    fn as_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.dim_r, self.dim_q, |r, q| {
            self.amplitudes[r * self.dim_q + q]
        })
    }

    /// `tr_R |psi><psi|`.
    pub fn reduced_system(&self) -> CMatrix {
        let m = self.as_matrix();
        m.transpose() * m.conjugate()
    }

    /// `(U (x) I)|psi>`: another purification of the same system state.
    pub fn rotate_reference(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim_r || u.ncols() != self.dim_r {
            return Err(Error::DimensionMismatch {
                context: "reference unitary",
                expected: self.dim_r,
                found: u.nrows(),
            });
        }
        let m = u * self.as_matrix();
        Self::new(
            self.dim_r,
            self.dim_q,
            CVector::from_fn(self.dim_r * self.dim_q, |k, _| {
                m[(k / self.dim_q, k % self.dim_q)]
            }),
        )
    }
}

/// `sum_k sqrt(lambda_k) |k^R>|v_k^Q>` from the eigendecomposition of `rho`.
pub fn purify(rho: &DensityMatrix) -> PurifiedState {
    let eig = rho.eig();
    let d = rho.dim();
    let amplitudes = CVector::from_fn(d * d, |k, _| {
        let (r, q) = (k / d, k % d);
        eig.vectors[(q, r)] * eig.values[r].max(0.0).sqrt()
    });
    PurifiedState {
        dim_r: d,
        dim_q: d,
        amplitudes,
    }
}

/// `(I^R (x) V)|psi>` on `R (x) Q' (x) E`, as a `dim_r x (d_out * n_kraus)` matrix.
fn evolve(psi: &PurifiedState, stinespring: &CMatrix) -> CMatrix {
    psi.as_matrix() * stinespring.transpose()
}

/// Squared norm of `(<psi| (x) I^E) |Psi_f>` where `|Psi_f>` is the evolved state.
fn projected_weight(psi: &PurifiedState, evolved: &CMatrix, n_env: usize) -> f64 {
    let bra = psi.as_matrix();
    let dim_q = psi.dim_q;
    (0..n_env)
        .map(|j| {
            let mut amp = cr(0.0);
            for r in 0..psi.dim_r {
                for a in 0..dim_q {
                    amp += bra[(r, a)].conj() * evolved[(r, a * n_env + j)];
                }
            }
            amp.norm_sqr()
        })
        .sum()
}

/// `F_e` as the squared norm of the projection of the dilated final state onto
/// the initial purification (system-environment evolution route).
pub fn entanglement_fidelity_dilated(rho: &DensityMatrix, channel: &KrausChannel) -> Result<f64> {
    require_square_on(rho.dim(), channel)?;
    let psi = purify(rho);
    let v = channel.stinespring();
    Ok(projected_weight(&psi, &evolve(&psi, &v), channel.len()))
}

fn check_oracle_inputs(
    ensemble: &Ensemble,
    channel: &KrausChannel,
    purifications: &[PurifiedState],
) -> Result<()> {
    require_square_on(ensemble.dim(), channel)?;
    if purifications.len() != ensemble.len() {
        return Err(Error::DimensionMismatch {
            context: "one purification per ensemble member",
            expected: ensemble.len(),
            found: purifications.len(),
        });
    }
    let size: usize = purifications
        .iter()
        .map(|p| p.dim_r * p.dim_q * channel.len())
        .sum();
    if size > ORACLE_CAP {
        return Err(Error::OracleTooLarge {
            size,
            cap: ORACLE_CAP,
        });
    }
    for (psi, (_, rho)) in purifications.iter().zip(ensemble.members()) {
        if psi.dim_q != ensemble.dim() {
            return Err(Error::DimensionMismatch {
                context: "purification system dimension",
                expected: ensemble.dim(),
                found: psi.dim_q,
            });
        }
        let residual = (psi.reduced_system() - rho.as_matrix()).norm();
        if residual > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "purification does not reproduce its member state (residual {residual:.3e})"
            )));
        }
    }
    Ok(())
}

/// Average entanglement fidelity from the classically correlated `S R Q` state
/// `sum_l p_l |l><l|_S (x) |psi_l><psi_l|_RQ`, evolved through the Stinespring
/// dilation of the channel on `Q` and measured with
/// `P_c = sum_l |l><l|_S (x) |psi_l><psi_l|_RQ` (identity on the environment).
pub fn avg_fidelity_rqs_oracle(ensemble: &Ensemble, channel: &KrausChannel) -> Result<f64> {
    let purifications: Vec<_> = ensemble.members().iter().map(|(_, r)| purify(r)).collect();
    avg_fidelity_rqs_oracle_with(ensemble, channel, &purifications)
}

/// [`avg_fidelity_rqs_oracle`] with caller-supplied purifications of each member.
pub fn avg_fidelity_rqs_oracle_with(
    ensemble: &Ensemble,
    channel: &KrausChannel,
    purifications: &[PurifiedState],
) -> Result<f64> {
    check_oracle_inputs(ensemble, channel, purifications)?;
    let v = channel.stinespring();
    let n_env = channel.len();
    let mut total = 0.0;
    for (psi, (p, _)) in purifications.iter().zip(ensemble.members()) {
        let evolved = evolve(psi, &v);
        // the S label is diagonal in both the state and P_c, so only the
        // matching block survives
        total += p * projected_weight(psi, &evolved, n_env);
    }
    Ok(total)
}

/// Same quantity from the coherent superposition `sum_l sqrt(p_l) |l^S>|psi_l^RQ>`.
///
/// The full `S R Q' E` vector is assembled and `P_c (x) I^E` is applied to it
/// before taking the squared norm.
pub fn avg_fidelity_rqs_entangled(ensemble: &Ensemble, channel: &KrausChannel) -> Result<f64> {
    let purifications: Vec<_> = ensemble.members().iter().map(|(_, r)| purify(r)).collect();
    check_oracle_inputs(ensemble, channel, &purifications)?;
    let v = channel.stinespring();
    let n_env = channel.len();
    let d = ensemble.dim();
    let block = d * d * n_env;
    let n = ensemble.len();

    let mut state = CVector::zeros(n * block);
    for (l, (psi, (p, _))) in purifications.iter().zip(ensemble.members()).enumerate() {
        let evolved = evolve(psi, &v);
        for r in 0..d {
            for col in 0..d * n_env {
                state[l * block + r * d * n_env + col] = evolved[(r, col)] * cr(p.sqrt());
            }
        }
    }

    let mut projected = CVector::zeros(n * block);
    for (l, psi) in purifications.iter().enumerate() {
        let bra = psi.as_matrix();
        for j in 0..n_env {
            let mut amp = cr(0.0);
            for r in 0..d {
                for a in 0..d {
                    amp += bra[(r, a)].conj() * state[l * block + r * d * n_env + a * n_env + j];
                }
            }
            for r in 0..d {
                for a in 0..d {
                    projected[l * block + r * d * n_env + a * n_env + j] += bra[(r, a)] * amp;
                }
            }
        }
    }
    Ok(projected.norm_squared())
}
