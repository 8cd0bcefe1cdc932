//! Classical-fidelity bounds for labeled ensembles.
//!
//! All quantities derive from the overlap table
//! `T_ij = tr(rho_out^{-1/2} rho_i rho_out^{-1/2} rho_j) = tr(X_i rho_j)`,
//! whose diagonal sums to the PGM classical fidelity and whose full sum is one.

use crate::error::{Error, Result};
use crate::fidelities::bures_fidelity;
use crate::linalg::{psd_sqrt, trace, trace_norm, HermitianMatrix, DEFAULT_TOL};
use crate::pgm::{pgm_povm, LabeledEnsemble};

/// `T_ij = tr(X_i rho_j)` with `rho_j = p_j rho_hat_j` unnormalized.
pub fn overlap_table(ensemble: &LabeledEnsemble) -> Result<Vec<Vec<f64>>> {
    let povm = pgm_povm(ensemble)?;
    let unnormalized: Vec<_> = (0..ensemble.len()).map(|j| ensemble.unnormalized(j)).collect();
    Ok(povm
        .elements()
        .iter()
        .map(|x| {
            unnormalized
                .iter()
                .map(|rho| trace(&(x.as_matrix() * rho)).re)
                .collect()
        })
        .collect())
}

/// `sum_j tr(rho_out^{-1/2} rho_j rho_out^{-1/2} rho_j)`, the classical fidelity of the PGM reversal.
pub fn pgm_fcl_value(ensemble: &LabeledEnsemble) -> Result<f64> {
    let t = overlap_table(ensemble)?;
    Ok((0..t.len()).map(|j| t[j][j]).sum())
}

/// `|sum_{i,j} T_ij - 1|`.
pub fn normalization_identity_residual(ensemble: &LabeledEnsemble) -> Result<f64> {
    let t = overlap_table(ensemble)?;
    Ok((t.iter().flatten().sum::<f64>() - 1.0).abs())
}

/// `2 sum_{i != j} T_ij`, an upper bound on the PGM error probability.
pub fn error_probability_bound(ensemble: &LabeledEnsemble) -> Result<f64> {
    let t = overlap_table(ensemble)?;
    let mut off = 0.0;
    for (i, row) in t.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                off += v;
            }
        }
    }
    Ok(2.0 * off)
}

/// `1 - sum_{i != j} sqrt(p_i p_j) F_BU(rho_hat_i, rho_hat_j)`, unclipped; negative values are vacuous.
pub fn bures_lower_bound(ensemble: &LabeledEnsemble) -> Result<f64> {
    let members = ensemble.members();
    let mut total = 0.0;
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let (pi, ri) = &members[i];
            let (pj, rj) = &members[j];
            total += 2.0 * (pi * pj).sqrt() * bures_fidelity(ri, rj)?;
        }
    }
    Ok(1.0 - total)
}

/// Outcome of the block square-root inequality `|y|_2^2 <= |b|_1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockCheck {
    /// Squared Frobenius norm of the lower-left block of `M^{1/2}`.
    pub lhs: f64,
    /// Trace norm of the lower-left block of `M`.
    pub rhs: f64,
    pub pass: bool,
}

/// Slack allowed in [`block_sqrt_inequality_check`].
pub const BLOCK_SLACK: f64 = 1e-9;

/// Splits `M` and `M^{1/2}` after row/column `split` and compares the lower-left blocks.
pub fn block_sqrt_inequality_check(m: &HermitianMatrix, split: usize) -> Result<BlockCheck> {
    block_sqrt_inequality_check_with(m, split, BLOCK_SLACK)
}

pub fn block_sqrt_inequality_check_with(
    m: &HermitianMatrix,
    split: usize,
    slack: f64,
) -> Result<BlockCheck> {
    let d = m.dim();
    if split == 0 || split >= d {
        return Err(Error::InvalidArgument(format!(
            "block split must lie in 1..{d}, got {split}"
        )));
    }
    let root = psd_sqrt(m, DEFAULT_TOL)?;
    let rows = d - split;
    let y = root.as_matrix().view((split, 0), (rows, split)).into_owned();
    let b = m.as_matrix().view((split, 0), (rows, split)).into_owned();
    let lhs = y.norm_squared();
    let rhs = trace_norm(&b);
    Ok(BlockCheck {
        lhs,
        rhs,
        pass: lhs <= rhs + slack,
    })
}
