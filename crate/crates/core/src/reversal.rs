//! The near-optimal reversal channel `R_{A,rho}` with Kraus operators
//! `rho^{1/2} A_i^dagger A(rho)^{-1/2}`, and perfectly reversible code channels.
//!
//! `A(rho)^{-1/2}` is a generalized inverse on `supp A(rho)`, so the raw
//! operators satisfy `sum R_i^dagger R_i = P_supp(A(rho))`. The returned
//! channel is completed to a trace-preserving map by sending the orthogonal
//! complement of that support to the top eigenvector of `rho`. Inputs of the
//! form `A(sigma)` with `supp sigma` inside `supp rho` never reach the
//! complement, so the completion does not change any fidelity computed on them.

use crate::channels::{choi_distance, DensityMatrix, Ensemble, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, derive_seed, haar_unitary, hermitian_eig, identity, rank_cutoff, CMatrix,
    HermitianMatrix, DEFAULT_TOL,
};

/// Choi distance below which two reversal constructions count as equal.
pub const DECOMPOSITION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ReversalResult {
    /// Trace-preserving reversal from the channel's output space back to its input space.
    pub channel: KrausChannel,
    /// The operators `rho^{1/2} A_i^dagger A(rho)^{-1/2}` alone, trace-preserving only on the support.
    pub support_channel: KrausChannel,
    /// Projector onto `supp A(rho)`.
    pub support_in: HermitianMatrix,
    /// Projector onto `supp rho`.
    pub support_out: HermitianMatrix,
    pub completion_used: bool,
    /// `||sum R_i^dagger R_i - P_supp(A(rho))||_F` before completion.
    pub support_residual: f64,
    /// Set when the reversal was built for an ensemble: whether its members commute.
    pub ensemble_commuting: Option<bool>,
}

pub fn near_optimal_reversal(channel: &KrausChannel, rho: &DensityMatrix) -> Result<ReversalResult> {
    if channel.d_in() != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "state dimension vs channel input",
            expected: channel.d_in(),
            found: rho.dim(),
        });
    }
    let output = channel.apply_psd(rho)?;
    let out_eig = hermitian_eig(&output);
    if out_eig.max_value() <= DEFAULT_TOL {
        return Err(Error::ZeroOutput);
    }
    if out_eig.min_value() < -DEFAULT_TOL {
        return Err(Error::NotPsd {
            eigenvalue: out_eig.min_value(),
        });
    }
    let out_cutoff = rank_cutoff(out_eig.max_value(), DEFAULT_TOL);
    let inv_sqrt = out_eig.map(|v| if v > out_cutoff { 1.0 / v.sqrt() } else { 0.0 });
    let support_in =
        HermitianMatrix::symmetrized(out_eig.map(|v| if v > out_cutoff { 1.0 } else { 0.0 }));

    let rho_eig = rho.eig();
    let rho_cutoff = rank_cutoff(rho_eig.max_value(), DEFAULT_TOL);
    let sqrt_rho = rho_eig.map(|v| v.max(0.0).sqrt());
    let support_out =
        HermitianMatrix::symmetrized(rho_eig.map(|v| if v > rho_cutoff { 1.0 } else { 0.0 }));

    let ops: Vec<CMatrix> = channel
        .operators()
        .iter()
        .map(|a| &sqrt_rho * a.adjoint() * &inv_sqrt)
        .collect();
    let support_channel =
        KrausChannel::new_subnormalized(channel.d_out(), channel.d_in(), ops)?.normalized();
    let support_residual = (support_channel.gram() - support_in.as_matrix()).norm();

    let top = rho_eig.vector(0);
    let mut completed: Vec<CMatrix> = support_channel.operators().to_vec();
    let mut completion_used = false;
    for (k, &v) in out_eig.values.iter().enumerate() {
        if v <= out_cutoff {
            completed.push(&top * out_eig.vector(k).adjoint());
            completion_used = true;
        }
    }
    let channel = KrausChannel::new(channel.d_out(), channel.d_in(), completed)?;

    Ok(ReversalResult {
        channel,
        support_channel,
        support_in,
        support_out,
        completion_used,
        support_residual,
        ensemble_commuting: None,
    })
}

/// Reversal for the ensemble average `rho = sum_l p_l rho_l`.
///
/// The result records whether the members commute; near-optimality is only
/// established in the commuting case.
pub fn reversal_for_ensemble(channel: &KrausChannel, ensemble: &Ensemble) -> Result<ReversalResult> {
    let mut result = near_optimal_reversal(channel, &ensemble.average())?;
    result.ensemble_commuting = Some(ensemble.is_commuting());
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompositionCheck {
    pub distance: f64,
    pub pass: bool,
}

/// Builds the reversal from the given Kraus list and from a remixed list
/// (seeded Haar unitary over the operator index, two null operators padded in)
/// and compares the two channels.
pub fn check_decomposition_independence(
    channel: &KrausChannel,
    rho: &DensityMatrix,
    seed: u64,
) -> Result<DecompositionCheck> {
    let pad = 2;
    let u = haar_unitary(channel.len() + pad, seed);
    check_decomposition_independence_with(channel, rho, &u, pad)
}

pub fn check_decomposition_independence_with(
    channel: &KrausChannel,
    rho: &DensityMatrix,
    u: &CMatrix,
    pad: usize,
) -> Result<DecompositionCheck> {
    let remixed = channel.kraus_remix(u, pad)?;
    let a = near_optimal_reversal(channel, rho)?;
    let b = near_optimal_reversal(&remixed, rho)?;
    let distance = choi_distance(&a.channel, &b.channel)?;
    Ok(DecompositionCheck {
        distance,
        pass: distance < DECOMPOSITION_TOL,
    })
}

/// Channel that is perfectly reversible on a code subspace `C`:
/// `A_i P_C = sqrt(p_i) W_i` with `W_i^dagger W_j = delta_ij P_C`.
#[derive(Clone, Debug)]
pub struct CodeInstance {
    pub channel: KrausChannel,
    pub code_projector: HermitianMatrix,
    /// The partial isometries `W_i`.
    pub isometries: Vec<CMatrix>,
    pub probabilities: Vec<f64>,
    /// True when an extra operator was appended to make the map trace-preserving off `C`.
    pub off_code_completion: bool,
}

impl CodeInstance {
    /// `P_C / tr P_C`.
    pub fn code_state(&self) -> DensityMatrix {
        DensityMatrix::from_psd(&self.code_projector).expect("nonzero code projector")
    }
}

pub fn reversible_code_channel(
    dim: usize,
    code_dim: usize,
    probabilities: &[f64],
    seed: u64,
) -> Result<CodeInstance> {
    let n = probabilities.len();
    if code_dim == 0 || n == 0 || code_dim * n > dim {
        return Err(Error::CodeTooLarge {
            dim,
            code_dim,
            n_isometries: n,
        });
    }
    crate::channels::check_probabilities(probabilities.iter().copied())?;

    let ranges = haar_unitary(dim, derive_seed(seed, 0));
    let code_basis = haar_unitary(dim, derive_seed(seed, 1))
        .columns(0, code_dim)
        .into_owned();
    let code_projector = HermitianMatrix::symmetrized(&code_basis * code_basis.adjoint());

    let isometries: Vec<CMatrix> = (0..n)
        .map(|i| ranges.columns(i * code_dim, code_dim) * code_basis.adjoint())
        .collect();
    let mut ops: Vec<CMatrix> = isometries
        .iter()
        .zip(probabilities)
        .map(|(w, &p)| w * cr(p.sqrt()))
        .collect();
    let off_code_completion = code_dim < dim;
    if off_code_completion {
        ops.push(identity(dim) - code_projector.as_matrix());
    }
    let channel = KrausChannel::new(dim, dim, ops)?;
    Ok(CodeInstance {
        channel,
        code_projector,
        isometries,
        probabilities: probabilities.to_vec(),
        off_code_completion,
    })
}

/// `||W_i^dagger W_j - delta_ij P_C||_F` maximized over pairs.
pub fn code_orthogonality_residual(code: &CodeInstance) -> f64 {
    let p = code.code_projector.as_matrix();
    let mut worst: f64 = 0.0;
    for (i, wi) in code.isometries.iter().enumerate() {
        for (j, wj) in code.isometries.iter().enumerate() {
            let target = if i == j { p.clone() } else { linalg::zeros(p.nrows(), p.ncols()) };
            worst = worst.max((wi.adjoint() * wj - target).norm());
        }
    }
    worst
}
