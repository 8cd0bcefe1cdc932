//! Reports for single instances and random instance generation.

use serde::Serialize;
use revquant_core::bounds::{
    bures_lower_bound, error_probability_bound, normalization_identity_residual, pgm_fcl_value,
};
use revquant_core::channels::{compose, random_channel, random_commuting_ensemble, DensityMatrix, Ensemble};
use revquant_core::fidelities::{avg_entanglement_fidelity, entanglement_fidelity};
use revquant_core::io::{ChannelJson, EnsembleJson, Instance, InstanceJson, MatrixJson};
use revquant_core::linalg::{derive_seed, seeded_rng};
use revquant_core::pgm::{
    classicizing_channel, classicizing_reversal, discrimination_success, pgm_povm,
    random_labeled_ensemble, LabeledEnsemble,
};
use revquant_core::reversal::near_optimal_reversal;
use revquant_core::Result;

/// Which state the reversal is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RhoSelector {
    /// `rho` from the file, else the ensemble average, else the maximally mixed state.
    Instance,
    /// Maximally mixed state on the channel input.
    Mixed,
    /// Average of the instance ensemble (falls back as for `instance`).
    Average,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReverseReport {
    pub reversal: ChannelJson,
    pub support_in: MatrixJson,
    pub support_out: MatrixJson,
    pub completion_used: bool,
    pub support_residual: f64,
    pub ensemble_commuting: bool,
    /// `F_e(rho, A)`; absent when the channel is not square.
    pub fe_before: Option<f64>,
    /// `F_e(rho, R o A)`.
    pub fe_after: f64,
    pub avg_fe_before: Option<f64>,
    pub avg_fe_after: f64,
}

pub fn reverse(instance: &Instance, selector: RhoSelector) -> Result<ReverseReport> {
    let ensemble = match selector {
        RhoSelector::Mixed => Ensemble::single(DensityMatrix::maximally_mixed(instance.channel.d_in())),
        _ => instance.input_ensemble(),
    };
    let rho = match selector {
        RhoSelector::Instance => instance.reference_state(),
        RhoSelector::Mixed | RhoSelector::Average => ensemble.average(),
    };
    let a = &instance.channel;
    let rev = near_optimal_reversal(a, &rho)?;
    let after = compose(&rev.channel, a)?;
    let (fe_before, avg_fe_before) = if a.is_square() {
        (
            Some(entanglement_fidelity(&rho, a)?),
            Some(avg_entanglement_fidelity(&ensemble, a)?),
        )
    } else {
        (None, None)
    };
    Ok(ReverseReport {
        reversal: ChannelJson::from_channel(&rev.channel),
        support_in: MatrixJson::from_matrix(rev.support_in.as_matrix()),
        support_out: MatrixJson::from_matrix(rev.support_out.as_matrix()),
        completion_used: rev.completion_used,
        support_residual: rev.support_residual,
        ensemble_commuting: ensemble.is_commuting(),
        fe_before,
        fe_after: entanglement_fidelity(&rho, &after)?,
        avg_fe_before,
        avg_fe_after: avg_entanglement_fidelity(&ensemble, &after)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PgmReport {
    pub members: usize,
    pub dim: usize,
    pub discrimination_success: f64,
    pub pgm_fcl_value: f64,
    pub bures_lower_bound: f64,
    pub error_probability_bound: f64,
    pub normalization_residual: f64,
    pub completeness_residual: f64,
    pub povm: Vec<MatrixJson>,
    pub classicizing_channel: ChannelJson,
    pub reversal: ChannelJson,
}

pub fn pgm(ensemble: &LabeledEnsemble) -> Result<PgmReport> {
    let povm = pgm_povm(ensemble)?;
    Ok(PgmReport {
        members: ensemble.len(),
        dim: ensemble.dim(),
        discrimination_success: discrimination_success(ensemble, &povm)?,
        pgm_fcl_value: pgm_fcl_value(ensemble)?,
        bures_lower_bound: bures_lower_bound(ensemble)?,
        error_probability_bound: error_probability_bound(ensemble)?,
        normalization_residual: normalization_identity_residual(ensemble)?,
        completeness_residual: povm.completeness_residual(),
        povm: povm
            .elements()
            .iter()
            .map(|x| MatrixJson::from_matrix(x.as_matrix()))
            .collect(),
        classicizing_channel: ChannelJson::from_channel(&classicizing_channel(ensemble)?),
        reversal: ChannelJson::from_channel(&classicizing_reversal(ensemble)?.channel),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    /// Random channel with a commuting input ensemble.
    Channel,
    /// Random labeled ensemble for `pgm`.
    Labeled,
}

#[derive(Clone, Copy, Debug)]
pub struct GenOptions {
    pub kind: GenKind,
    pub dim: usize,
    pub seed: u64,
    pub members: usize,
    pub kraus_rank: Option<usize>,
}

/// JSON document for a seeded random instance.
pub fn generate(opts: &GenOptions) -> Result<serde_json::Value> {
    if opts.dim == 0 || opts.members == 0 {
        return Err(revquant_core::Error::InvalidArgument(
            "dimension and member count must be positive".into(),
        ));
    }
    let mut rng = seeded_rng(opts.seed);
    let value = match opts.kind {
        GenKind::Channel => {
            let rank = opts.kraus_rank.unwrap_or(opts.dim);
            if rank == 0 {
                return Err(revquant_core::Error::InvalidArgument("Kraus rank must be positive".into()));
            }
            let ch = random_channel(opts.dim, opts.dim, rank, derive_seed(opts.seed, 0));
            let ensemble = random_commuting_ensemble(opts.dim, opts.members, &mut rng);
            serde_json::to_value(InstanceJson {
                channel: ChannelJson::from_channel(&ch),
                rho: None,
                ensemble: Some(EnsembleJson::from_ensemble(&ensemble)),
            })
        }
        GenKind::Labeled => {
            let e = random_labeled_ensemble(opts.dim, opts.members, &mut rng);
            serde_json::to_value(EnsembleJson::from_labeled(&e))
        }
    };
    Ok(value.expect("plain data serializes"))
}
