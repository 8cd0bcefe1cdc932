//! Seeded verification suites.
//!
//! Trial `t` of a suite run with seed `s` draws everything from
//! `derive_seed(s, t)` and uses dimension `dims[t % dims.len()]`, so a row
//! depends only on `(suite, s, t, dims)`. Trials may run on any thread; rows
//! are sorted by trial index before they are returned.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use revquant_core::bounds::{
    block_sqrt_inequality_check_with, bures_lower_bound, error_probability_bound,
    normalization_identity_residual, pgm_fcl_value,
};
use revquant_core::channels::{
    choi_distance, compose, random_channel_from_rng, random_commuting_ensemble,
    random_density_matrix, DensityMatrix, Ensemble, KrausChannel,
};
use revquant_core::fidelities::{
    avg_entanglement_fidelity, avg_fidelity_rqs_entangled, avg_fidelity_rqs_oracle,
    classical_fidelity_in_basis, entanglement_fidelity,
};
use revquant_core::linalg::{derive_seed, identity, random_probabilities, random_psd, seeded_rng};
use revquant_core::optimizer::{
    identity_completion, optimize_reversal_with_observer, Iterate, OptimizerOptions,
};
use revquant_core::pgm::{
    classicizing_channel, classicizing_reversal, discrimination_success, grouping_residual,
    pgm_povm, projective_residual, random_labeled_ensemble, random_pure_labeled_ensemble,
    refinement_residual,
};
use revquant_core::reversal::{check_decomposition_independence_with, near_optimal_reversal};
use revquant_core::{Error, Result};

/// Slack on the squared-fidelity inequalities.
pub const SQUARE_BOUND_SLACK: f64 = 1e-8;
/// Decomposition-independence and Choi-equality tolerance.
pub const CHOI_TOL: f64 = 1e-9;
/// Tolerance on algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-9;
/// POVM completeness and projectivity tolerance.
pub const POVM_TOL: f64 = 1e-8;
/// Slack on the block square-root inequality.
pub const BLOCK_TOL: f64 = 1e-9;
/// Feasibility tolerance for optimizer iterates.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    SquaredBound,
    BuresBound,
    Decomposition,
    Pgm,
    Identities,
    BlockSqrt,
    Noncommuting,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::SquaredBound,
        Suite::BuresBound,
        Suite::Decomposition,
        Suite::Pgm,
        Suite::Identities,
        Suite::BlockSqrt,
        Suite::Noncommuting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SquaredBound => "theorem1",
            Suite::BuresBound => "theorem2",
            Suite::Decomposition => "lemma1",
            Suite::Pgm => "pgm",
            Suite::Identities => "identities",
            Suite::BlockSqrt => "block-lemma",
            Suite::Noncommuting => "noncommuting",
        }
    }

    pub fn default_dims(self) -> Vec<usize> {
        match self {
            Suite::BlockSqrt => (2..=8).collect(),
            Suite::Identities => vec![2, 3],
            _ => vec![2, 3, 4],
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Suite::SquaredBound => &[
                "trial", "seed", "d", "kraus_rank", "members", "f_reversal", "f_adversary_max",
                "fe_reversal", "fe_adversary_max", "fcl_reversal", "fcl_adversary_max",
                "adversaries", "max_tp_residual", "min_choi_eigenvalue", "margin", "pass",
            ],
            Suite::BuresBound => &[
                "trial", "seed", "d", "members", "pgm_fcl", "best_fcl", "bures_bound",
                "normalization_residual", "error_bound", "error_bound_gap", "margin", "pass",
            ],
            Suite::Decomposition => &["trial", "seed", "d", "kraus_rank", "pad", "choi_distance", "margin", "pass"],
            Suite::Pgm => &[
                "trial", "seed", "d", "members", "refinement_residual", "grouping_residual",
                "completeness_residual", "reversal_choi_distance", "fcl_success_gap",
                "projective_residual", "margin", "pass",
            ],
            Suite::Identities => &[
                "trial", "seed", "d", "members", "oracle_gap", "entangled_oracle_gap",
                "normalization_residual", "error_bound_gap", "margin", "pass",
            ],
            Suite::BlockSqrt => &["trial", "seed", "d", "split", "lhs", "rhs", "margin", "pass"],
            Suite::Noncommuting => &[
                "trial", "seed", "d", "members", "commutator_norm", "f_reversal", "f_optimized",
                "ratio", "margin", "pass",
            ],
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::SquaredBound => "squared adversary fidelities never exceed the reversal's, for ensembles, single states and eigen-ensembles",
            Suite::BuresBound => "best classical fidelity squared dominates the Bures bound; overlap identities",
            Suite::Decomposition => "reversal is unchanged under Kraus remixing with null padding",
            Suite::Pgm => "PGM coarse-graining, completeness, reversal equality and projectivity",
            Suite::Identities => "tripartite oracle equals the Kraus formula; overlap normalization",
            Suite::BlockSqrt => "|y|_2^2 <= |b|_1 for random PSD block splits",
            Suite::Noncommuting => "reports F_opt^2 / F_reversal on non-commuting ensembles (no assertion)",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                format!("unknown suite \"{s}\" (expected one of: {})", names.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    /// Multiplies every suite tolerance.
    pub tol_scale: f64,
    /// Optimizer iterations per start.
    pub budget: usize,
    /// Random optimizer starts per run.
    pub restarts: usize,
}

impl SuiteConfig {
    pub fn new(suite: Suite, trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            dims: suite.default_dims(),
            tol_scale: 1.0,
            budget: 40,
            restarts: 1,
        }
    }

    fn tol(&self, base: f64) -> f64 {
        base * self.tol_scale
    }
}

/// One CSV row. `values` align with the suite's columns after `trial`, `seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub trial: usize,
    pub seed: u64,
    pub values: Vec<Cell>,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(usize),
    Real(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => write!(f, "{}", format_real(*v)),
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub rows: Vec<Row>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    pub fn failed(&self) -> usize {
        self.rows.len() - self.passed()
    }

    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    /// Smallest margin; `None` without trials.
    pub fn worst_margin(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.margin).reduce(f64::min)
    }

    pub fn worst_trial(&self) -> Option<&Row> {
        self.rows
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin).then(a.trial.cmp(&b.trial)))
    }

    /// Numeric value of a named per-trial column (`margin` included).
    pub fn value(&self, row: &Row, column: &str) -> Option<f64> {
        if column == "margin" {
            return Some(row.margin);
        }
        let idx = self.suite.columns().iter().position(|c| *c == column)?;
        match row.values.get(idx.checked_sub(2)?)? {
            Cell::Int(v) => Some(*v as f64),
            Cell::Real(v) => Some(*v),
        }
    }

    /// Largest value of a column over all rows.
    pub fn max_of(&self, column: &str) -> Option<f64> {
        self.rows.iter().filter_map(|r| self.value(r, column)).reduce(f64::max)
    }

    /// CSV body: header plus one line per trial in trial order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.suite.columns()).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.trial.to_string(), row.seed.to_string()];
            rec.extend(row.values.iter().map(Cell::to_string));
            rec.push(format_real(row.margin));
            rec.push(row.pass.to_string());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("ascii output")
    }
}

pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<SuiteOutcome> {
    if config.dims.is_empty() {
        return Err(Error::InvalidArgument("dimension list is empty".into()));
    }
    let min_dim = if suite == Suite::BlockSqrt { 2 } else { 1 };
    if let Some(&bad) = config.dims.iter().find(|&&d| d < min_dim || d > 16) {
        return Err(Error::InvalidArgument(format!("unsupported dimension {bad}")));
    }
    if !(config.tol_scale > 0.0 && config.tol_scale.is_finite()) {
        return Err(Error::InvalidArgument("tolerance scale must be positive".into()));
    }
    let mut rows = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(config.seed, t as u64);
            let d = config.dims[t % config.dims.len()];
            let (values, margin, pass) = match suite {
                Suite::SquaredBound => squared_bound_trial(config, seed, d)?,
                Suite::BuresBound => bures_bound_trial(config, seed, d)?,
                Suite::Decomposition => decomposition_trial(config, seed, d)?,
                Suite::Pgm => pgm_trial(config, seed, d)?,
                Suite::Identities => identities_trial(config, seed, d)?,
                Suite::BlockSqrt => block_trial(config, seed, d)?,
                Suite::Noncommuting => noncommuting_trial(config, seed, d)?,
            };
            Ok(Row {
                trial: t,
                seed,
                values,
                margin,
                pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.trial);
    Ok(SuiteOutcome {
        suite,
        config: config.clone(),
        rows,
    })
}

type TrialResult = Result<(Vec<Cell>, f64, bool)>;

/// Largest fidelity found among adversaries, with feasibility data.
#[derive(Clone, Copy, Debug)]
struct AdversaryScan {
    best: f64,
    count: usize,
    max_tp_residual: f64,
    min_choi_eigenvalue: f64,
}

/// Runs random, identity-completion and every optimizer iterate against `score`.
fn scan_adversaries<F>(
    config: &SuiteConfig,
    channel: &KrausChannel,
    ensemble: &Ensemble,
    seed: u64,
    score: F,
) -> Result<AdversaryScan>
where
    F: Fn(&KrausChannel) -> Result<f64>,
{
    let (n, m) = (channel.d_in(), channel.d_out());
    let mut rng = seeded_rng(derive_seed(seed, 1));
    let mut scan = AdversaryScan {
        best: f64::NEG_INFINITY,
        count: 0,
        max_tp_residual: 0.0,
        min_choi_eigenvalue: f64::INFINITY,
    };
    let mut fixed = vec![identity_completion(m, n)];
    for _ in 0..2 {
        let rank = rng.random_range(1..=m * n).max(m.div_ceil(n));
        fixed.push(random_channel_from_rng(m, n, rank, &mut rng));
    }
    for r in &fixed {
        scan.best = scan.best.max(score(r)?);
        scan.count += 1;
    }
    let options = OptimizerOptions {
        budget: config.budget,
        restarts: config.restarts,
        seed: derive_seed(seed, 2),
        ..OptimizerOptions::default()
    };
    let mut failure = None;
    optimize_reversal_with_observer(channel, ensemble, &options, |it: &Iterate<'_>| {
        if failure.is_some() {
            return;
        }
        let result = it.channel().and_then(|r| {
            let choi_min = r.to_choi().min_eigenvalue();
            Ok((r.tp_residual(), choi_min, score(&r)?))
        });
        match result {
            Ok((tp, choi_min, f)) => {
                scan.best = scan.best.max(f);
                scan.count += 1;
                scan.max_tp_residual = scan.max_tp_residual.max(tp);
                scan.min_choi_eigenvalue = scan.min_choi_eigenvalue.min(choi_min);
            }
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(scan),
    }
}

fn random_channel_for_trial(rng: &mut impl Rng, d: usize) -> (KrausChannel, usize) {
    let rank = rng.random_range(1..=d * d);
    (random_channel_from_rng(d, d, rank, rng), rank)
}

fn squared_bound_trial(config: &SuiteConfig, seed: u64, d: usize) -> TrialResult {
    let mut rng = seeded_rng(seed);
    let (a, rank) = random_channel_for_trial(&mut rng, d);
    let members = rng.random_range(1..=3);
    let ensemble = random_commuting_ensemble(d, members, &mut rng);
    let rho = ensemble.average();
    let rev = near_optimal_reversal(&a, &rho)?;
    let composed_rev = compose(&rev.channel, &a)?;

    // ensemble form
    let f_rev = avg_entanglement_fidelity(&ensemble, &composed_rev)?;
    let scan = scan_adversaries(config, &a, &ensemble, derive_seed(seed, 10), |r| {
        avg_entanglement_fidelity(&ensemble, &compose(r, &a)?)
    })?;

    // single state
    let single = Ensemble::single(rho.clone());
    let fe_rev = entanglement_fidelity(&rho, &composed_rev)?;
    let scan_fe = scan_adversaries(config, &a, &single, derive_seed(seed, 11), |r| {
        entanglement_fidelity(&rho, &compose(r, &a)?)
    })?;

    // eigen-ensemble, scored by the classical fidelity in the same eigenbasis
    let basis = rho.eig().vectors;
    let eigen = Ensemble::in_basis(&rho, &basis)?;
    let fcl_rev = classical_fidelity_in_basis(&rho, &composed_rev, &basis)?;
    let scan_cl = scan_adversaries(config, &a, &eigen, derive_seed(seed, 12), |r| {
        classical_fidelity_in_basis(&rho, &compose(r, &a)?, &basis)
    })?;

    let margin = (f_rev - scan.best.powi(2))
        .min(fe_rev - scan_fe.best.powi(2))
        .min(fcl_rev - scan_cl.best.powi(2));
    let max_tp = scan.max_tp_residual.max(scan_fe.max_tp_residual).max(scan_cl.max_tp_residual);
    let min_eig = scan
        .min_choi_eigenvalue
        .min(scan_fe.min_choi_eigenvalue)
        .min(scan_cl.min_choi_eigenvalue);
    let feasible = max_tp <= config.tol(FEASIBILITY_TOL) && min_eig >= -config.tol(FEASIBILITY_TOL);
    let pass = margin >= -config.tol(SQUARE_BOUND_SLACK) && feasible;
    Ok((
        vec![
            Cell::Int(d),
            Cell::Int(rank),
            Cell::Int(members),
            Cell::Real(f_rev),
            Cell::Real(scan.best),
            Cell::Real(fe_rev),
            Cell::Real(scan_fe.best),
            Cell::Real(fcl_rev),
            Cell::Real(scan_cl.best),
            Cell::Int(scan.count + scan_fe.count + scan_cl.count),
            Cell::Real(max_tp),
            Cell::Real(min_eig),
        ],
        margin,
        pass,
    ))
}

fn bures_bound_trial(config: &SuiteConfig, seed: u64, d: usize) -> TrialResult {
    let mut rng = seeded_rng(seed);
    let members = rng.random_range(1..=3);
    let e = random_labeled_ensemble(d, members, &mut rng);
    let fcl = pgm_fcl_value(&e)?;
    let bound = bures_lower_bound(&e)?;
    let norm = normalization_identity_residual(&e)?;
    let err = error_probability_bound(&e)?;
    let gap = (err - 2.0 * (1.0 - fcl)).abs();

    // optimize the classical fidelity of reversing the classicizing channel
    let a = classicizing_channel(&e)?;
    let input = e.input_state();
    let labels = identity(members);
    let ensemble = Ensemble::in_basis(&input, &labels)?;
    let options = OptimizerOptions {
        budget: config.budget,
        restarts: config.restarts,
        seed: derive_seed(seed, 2),
        ..OptimizerOptions::default()
    };
    let report = optimize_reversal_with_observer(&a, &ensemble, &options, |_| {})?;
    let optimized = classical_fidelity_in_basis(&input, &compose(&report.best_channel, &a)?, &labels)?;
    let best = fcl.max(optimized);

    let margin = (best * best - bound)
        .min(config.tol(IDENTITY_TOL) - norm)
        .min(config.tol(IDENTITY_TOL) - gap);
    let pass = best * best >= bound - config.tol(SQUARE_BOUND_SLACK)
        && norm < config.tol(IDENTITY_TOL)
        && gap < config.tol(IDENTITY_TOL);
    Ok((
        vec![
            Cell::Int(d),
            Cell::Int(members),
            Cell::Real(fcl),
            Cell::Real(best),
            Cell::Real(bound),
            Cell::Real(norm),
            Cell::Real(err),
            Cell::Real(gap),
        ],
        margin,
        pass,
    ))
}

fn decomposition_trial(config: &SuiteConfig, seed: u64, d: usize) -> TrialResult {
    let mut rng = seeded_rng(seed);
    let (a, rank) = random_channel_for_trial(&mut rng, d);
    let rho = random_density_matrix(d, rng.random_range(1..=d), &mut rng);
    let pad = rng.random_range(0..=2);
    let u = revquant_core::linalg::haar_unitary(a.len() + pad, derive_seed(seed, 1));
    let check = check_decomposition_independence_with(&a, &rho, &u, pad)?;
    let tol = config.tol(CHOI_TOL);
    let margin = tol - check.distance;
    Ok((
        vec![Cell::Int(d), Cell::Int(rank), Cell::Int(pad), Cell::Real(check.distance)],
        margin,
        check.distance < tol,
    ))
}

fn pgm_trial(config: &SuiteConfig, seed: u64, d: usize) -> TrialResult {
    let mut rng = seeded_rng(seed);
    let members = rng.random_range(1..=3);
    let e = random_labeled_ensemble(d, members, &mut rng);
    let povm = pgm_povm(&e)?;
    let refinement = refinement_residual(&e, derive_seed(seed, 1))?;
    let rev = classicizing_reversal(&e)?;
    let grouping = grouping_residual(&rev, &povm);
    let completeness = povm.completeness_residual();
    let a = classicizing_channel(&e)?;
    let general = near_optimal_reversal(&a, &e.input_state())?;
    let distance = choi_distance(&general.support_channel, &rev.channel)?;
    let fcl = classical_fidelity_in_basis(&e.input_state(), &compose(&rev.channel, &a)?, &identity(members))?;
    let success = discrimination_success(&e, &povm)?;
    let fcl_gap = (fcl - success).abs();
    let pure = random_pure_labeled_ensemble(d, rng.random_range(1..=d), &mut rng);
    let projective = projective_residual(&pgm_povm(&pure)?);

    let id_tol = config.tol(IDENTITY_TOL);
    let povm_tol = config.tol(POVM_TOL);
    let choi_tol = config.tol(CHOI_TOL);
    let margin = (id_tol - refinement)
        .min(id_tol - grouping)
        .min(povm_tol - completeness)
        .min(choi_tol - distance)
        .min(id_tol - fcl_gap)
        .min(povm_tol - projective);
    Ok((
        vec![
            Cell::Int(d),
            Cell::Int(members),
            Cell::Real(refinement),
            Cell::Real(grouping),
            Cell::Real(completeness),
            Cell::Real(distance),
            Cell::Real(fcl_gap),
            Cell::Real(projective),
        ],
        margin,
        margin > 0.0,
    ))
}

fn random_general_ensemble(rng: &mut impl Rng, d: usize, members: usize) -> Ensemble {
    let weights = random_probabilities(members, rng);
    let list: Vec<(f64, DensityMatrix)> = weights
        .into_iter()
        .map(|p| {
            let rank = rng.random_range(1..=d);
            (p, random_density_matrix(d, rank, rng))
        })
        .collect();
    Ensemble::new(list).expect("valid random ensemble")
}

fn identities_trial(config: &SuiteConfig, seed: u64, d: usize) -> TrialResult {
    let mut rng = seeded_rng(seed);
    let (a, _) = random_channel_for_trial(&mut rng, d);
    let members = rng.random_range(1..=3);
    let ensemble = random_general_ensemble(&mut rng, d, members);
    let direct = avg_entanglement_fidelity(&ensemble, &a)?;
    let oracle_gap = (direct - avg_fidelity_rqs_oracle(&ensemble, &a)?).abs();
    let entangled_gap = (direct - avg_fidelity_rqs_entangled(&ensemble, &a)?).abs();
    let labeled = random_labeled_ensemble(d, members, &mut rng);
    let norm = normalization_identity_residual(&labeled)?;
    let err_gap = (error_probability_bound(&labeled)? - 2.0 * (1.0 - pgm_fcl_value(&labeled)?)).abs();
    let tol = config.tol(IDENTITY_TOL);
    let margin = (tol - oracle_gap)
        .min(tol - entangled_gap)
        .min(tol - norm)
        .min(tol - err_gap);
    Ok((
        vec![
            Cell::Int(d),
            Cell::Int(members),
            Cell::Real(oracle_gap),
            Cell::Real(entangled_gap),
            Cell::Real(norm),
            Cell::Real(err_gap),
        ],
        margin,
        margin > 0.0,
    ))
}

fn block_trial(config: &SuiteConfig, seed: u64, d: usize) -> TrialResult {
    let mut rng = seeded_rng(seed);
    let rank = rng.random_range(1..=d);
    let m = random_psd(d, rank, &mut rng);
    let split = rng.random_range(1..d);
    let check = block_sqrt_inequality_check_with(&m, split, config.tol(BLOCK_TOL))?;
    Ok((
        vec![Cell::Int(d), Cell::Int(split), Cell::Real(check.lhs), Cell::Real(check.rhs)],
        check.rhs - check.lhs,
        check.pass,
    ))
}

fn noncommuting_trial(config: &SuiteConfig, seed: u64, d: usize) -> TrialResult {
    let mut rng = seeded_rng(seed);
    let (a, _) = random_channel_for_trial(&mut rng, d);
    let members = rng.random_range(2..=3);
    let ensemble = random_general_ensemble(&mut rng, d, members);
    let rev = near_optimal_reversal(&a, &ensemble.average())?;
    let f_rev = avg_entanglement_fidelity(&ensemble, &compose(&rev.channel, &a)?)?;
    let options = OptimizerOptions {
        budget: config.budget,
        restarts: config.restarts,
        seed: derive_seed(seed, 2),
        ..OptimizerOptions::default()
    };
    let report = optimize_reversal_with_observer(&a, &ensemble, &options, |_| {})?;
    let f_opt = report.best_objective;
    Ok((
        vec![
            Cell::Int(d),
            Cell::Int(members),
            Cell::Real(ensemble.max_commutator_norm()),
            Cell::Real(f_rev),
            Cell::Real(f_opt),
            Cell::Real(f_opt * f_opt / f_rev),
        ],
        f_rev - f_opt * f_opt,
        true,
    ))
}
