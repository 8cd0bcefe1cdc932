//! Acceptance criteria, one pass/fail line each.
//!
//! Run with `cargo test -p revquant-cli --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;
use revquant_cli::suites::{run_suite, Suite, SuiteConfig, SuiteOutcome};
use revquant_core::channels::{compose, random_channel_from_rng, random_commuting_ensemble, DensityMatrix, Ensemble, KrausChannel};
use revquant_core::fidelities::{bures_fidelity, entanglement_fidelity};
use revquant_core::linalg::{derive_seed, gaussian_matrix, haar_unitary, isometry_residual, seeded_rng, CMatrix};
use revquant_core::optimizer::{
    fidelity_gradient, objective_at, optimize_reversal, optimize_reversal_with_observer, OptimizerOptions,
};
use revquant_core::reversal::{near_optimal_reversal, reversible_code_channel};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn suite(suite: Suite, trials: usize, dims: Option<Vec<usize>>, budget: usize, restarts: usize) -> SuiteOutcome {
    let mut cfg = SuiteConfig::new(suite, trials, SEED);
    if let Some(d) = dims {
        cfg.dims = d;
    }
    cfg.budget = budget;
    cfg.restarts = restarts;
    run_suite(suite, &cfg).expect("suite runs")
}

/// Smallest `reference - adversary^2` over rows.
fn worst_square_margin(out: &SuiteOutcome, reference: &str, adversary: &str) -> f64 {
    out.rows
        .iter()
        .map(|r| out.value(r, reference).unwrap() - out.value(r, adversary).unwrap().powi(2))
        .fold(f64::INFINITY, f64::min)
}

fn squared_bound_ensembles(out: &SuiteOutcome) -> Outcome {
    let margin = worst_square_margin(out, "f_reversal", "f_adversary_max");
    let tp = out.max_of("max_tp_residual").unwrap();
    let min_eig = out.rows.iter().map(|r| out.value(r, "min_choi_eigenvalue").unwrap()).fold(f64::INFINITY, f64::min);
    let adversaries: f64 = out.rows.iter().map(|r| out.value(r, "adversaries").unwrap()).sum();
    outcome(
        out.rows.len() == 200 && margin >= -1e-8 && tp <= 1e-7 && min_eig >= -1e-7,
        format!(
            "{} trials, {adversaries} adversaries, worst F_rev - F_adv^2 = {margin:.3e}, max TP residual {tp:.1e}, min Choi eigenvalue {min_eig:.1e}",
            out.rows.len()
        ),
    )
}

fn squared_bound_states(out: &SuiteOutcome) -> Outcome {
    let fe = worst_square_margin(out, "fe_reversal", "fe_adversary_max");
    let fcl = worst_square_margin(out, "fcl_reversal", "fcl_adversary_max");
    outcome(
        out.rows.len() == 200 && fe >= -1e-8 && fcl >= -1e-8,
        format!("single-state worst margin {fe:.3e}, eigen-ensemble worst margin {fcl:.3e}"),
    )
}

fn decomposition_independence() -> Outcome {
    let out = suite(Suite::Decomposition, 100, None, 1, 0);
    let worst = out.max_of("choi_distance").unwrap();
    outcome(
        out.rows.len() == 100 && worst < 1e-9,
        format!("100 trials, max Choi distance {worst:.3e}"),
    )
}

fn perfect_codes() -> Outcome {
    let mut rng = seeded_rng(derive_seed(SEED, 4));
    let mut worst: f64 = 1.0;
    for t in 0..50 {
        let code_dim = rng.random_range(1..=3);
        let n = rng.random_range(1..=3);
        let dim = code_dim * n + rng.random_range(0..=1);
        let probs = revquant_core::linalg::random_probabilities(n, &mut rng);
        let code = reversible_code_channel(dim, code_dim, &probs, derive_seed(SEED, 100 + t)).expect("code");
        let rho = code.code_state();
        let rev = near_optimal_reversal(&code.channel, &rho).expect("reversal");
        let f = entanglement_fidelity(&rho, &compose(&rev.channel, &code.channel).unwrap()).unwrap();
        worst = worst.min(f);
    }
    outcome(worst >= 1.0 - 1e-9, format!("50 code instances, min F_e = {worst:.15}"))
}

fn oracle_equivalence() -> Outcome {
    let out = suite(Suite::Identities, 100, Some(vec![2, 3]), 1, 0);
    let gap = out.max_of("oracle_gap").unwrap();
    let entangled = out.max_of("entangled_oracle_gap").unwrap();
    let members = out.max_of("members").unwrap();
    outcome(
        out.rows.len() == 100 && gap < 1e-9 && entangled < 1e-9 && members <= 3.0,
        format!("100 trials, max gap {gap:.3e} (classically correlated), {entangled:.3e} (entangled)"),
    )
}

fn pgm_properties() -> Outcome {
    let out = suite(Suite::Pgm, 200, None, 1, 0);
    let refinement = out.max_of("refinement_residual").unwrap();
    let grouping = out.max_of("grouping_residual").unwrap();
    let completeness = out.max_of("completeness_residual").unwrap();
    let distance = out.max_of("reversal_choi_distance").unwrap();
    let projective = out.max_of("projective_residual").unwrap();
    let gap = out.max_of("fcl_success_gap").unwrap();
    outcome(
        refinement < 1e-9
            && grouping < 1e-9
            && completeness < 1e-8
            && distance < 1e-9
            && projective < 1e-8
            && gap < 1e-9,
        format!(
            "200 trials, coarse-graining {:.1e}, completeness {completeness:.1e}, reversal distance {distance:.1e}, projectivity {projective:.1e}",
            refinement.max(grouping)
        ),
    )
}

fn bures_bound() -> Outcome {
    let out = suite(Suite::BuresBound, 200, None, 100, 2);
    let margin = out.rows.iter().map(|r| {
        let best = out.value(r, "best_fcl").unwrap();
        best * best - out.value(r, "bures_bound").unwrap()
    }).fold(f64::INFINITY, f64::min);
    let norm = out.max_of("normalization_residual").unwrap();
    let gap = out.max_of("error_bound_gap").unwrap();
    outcome(
        out.rows.len() == 200 && margin >= -1e-8 && norm < 1e-9 && gap < 1e-9,
        format!("200 trials, worst best_F_cl^2 - bound = {margin:.3e}, normalization {norm:.1e}, error-bound gap {gap:.1e}"),
    )
}

fn block_inequality() -> Outcome {
    let out = suite(Suite::BlockSqrt, 200, Some((2..=8).collect()), 1, 0);
    let worst = out.worst_margin().unwrap();
    outcome(
        out.all_pass() && out.rows.len() == 200,
        format!("200 PSD matrices, d <= 8, worst |b|_1 - |y|_2^2 = {worst:.3e}"),
    )
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.zip_map(b, |x, y| (x.conj() * y).re).sum()
}

fn optimizer_validity() -> Outcome {
    let mut rng = seeded_rng(derive_seed(SEED, 9));

    let mut worst_rel: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.random_range(2..=4);
        let rank = rng.random_range(1..=d * d);
        let a = random_channel_from_rng(d, d, rank, &mut rng);
        let e = random_commuting_ensemble(d, rng.random_range(1..=3), &mut rng);
        let r = random_channel_from_rng(d, d, d * d, &mut rng);
        let g = fidelity_gradient(&a, &e, &r).unwrap();
        let dir = gaussian_matrix(g.isometry.nrows(), d, &mut rng);
        let h = 1e-5;
        let plus = objective_at(&a, &e, &(&g.isometry + &dir * revquant_core::linalg::cr(h))).unwrap();
        let minus = objective_at(&a, &e, &(&g.isometry - &dir * revquant_core::linalg::cr(h))).unwrap();
        let fd = (plus - minus) / (2.0 * h);
        let analytic = inner(&g.euclidean, &dir);
        worst_rel = worst_rel.max((fd - analytic).abs() / analytic.abs().max(1e-12));
    }

    let mut monotone = true;
    let mut worst_tp: f64 = 0.0;
    let mut worst_cp: f64 = 0.0;
    let mut iterates = 0usize;
    for t in 0..30 {
        let d = rng.random_range(2..=4);
        let rank = rng.random_range(1..=d * d);
        let a = random_channel_from_rng(d, d, rank, &mut rng);
        let e = random_commuting_ensemble(d, rng.random_range(1..=3), &mut rng);
        let opts = OptimizerOptions { budget: 60, restarts: 2, seed: derive_seed(SEED, 200 + t), ..Default::default() };
        let report = optimize_reversal_with_observer(&a, &e, &opts, |it| {
            iterates += 1;
            worst_tp = worst_tp.max(isometry_residual(it.isometry));
            worst_cp = worst_cp.max(-it.channel().unwrap().to_choi().min_eigenvalue());
        })
        .unwrap();
        for rec in &report.restarts {
            monotone &= rec.objective_trace.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
        }
    }

    let mut worst_unitary: f64 = 1.0;
    let mut worst_unitary_random: f64 = 1.0;
    for t in 0..12 {
        let d = 2 + t % 3;
        let a = KrausChannel::unitary(haar_unitary(d, derive_seed(SEED, 300 + t as u64))).unwrap();
        let rho = revquant_core::channels::random_density_matrix(d, d, &mut rng);
        let e = Ensemble::single(rho);
        let full = optimize_reversal(&a, &e, &OptimizerOptions { seed: t as u64, ..Default::default() }).unwrap();
        worst_unitary = worst_unitary.min(full.best_objective);
        let random_only = OptimizerOptions {
            budget: 10_000,
            restarts: 1,
            seed: t as u64,
            include_reversal_start: false,
            include_identity_start: false,
            ..Default::default()
        };
        let report = optimize_reversal(&a, &e, &random_only).unwrap();
        worst_unitary_random = worst_unitary_random.min(report.best_objective);
    }

    outcome(
        worst_rel <= 1e-5
            && monotone
            && worst_tp <= 1e-7
            && worst_cp <= 1e-7
            && worst_unitary >= 1.0 - 1e-6
            && worst_unitary_random >= 1.0 - 1e-6,
        format!(
            "gradient rel. error {worst_rel:.1e} (50 points), monotone={monotone}, {iterates} iterates with TP {worst_tp:.1e} / CP {worst_cp:.1e}, unitary optimum {worst_unitary:.12} (random starts only {worst_unitary_random:.12})"
        ),
    )
}

fn cli_csv(dir: &std::path::Path, threads: &str) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_revquant"))
        .args(["suite", "theorem1", "--trials", "12", "--seed", "7", "--out", dir.to_str().unwrap()])
        .env("REVQUANT_THREADS", threads)
        .status()
        .expect("binary runs");
    assert!(status.success());
    std::fs::read(dir.join("theorem1.csv")).expect("csv written")
}

fn spot_regressions() -> Outcome {
    let mut worst_dep: f64 = 0.0;
    for p in [0.0, 0.3, 1.0] {
        let f = entanglement_fidelity(&DensityMatrix::maximally_mixed(2), &KrausChannel::depolarizing(p).unwrap()).unwrap();
        worst_dep = worst_dep.max((f - (1.0 - 0.75 * p)).abs());
    }
    let bures = bures_fidelity(&DensityMatrix::basis(2, 0), &DensityMatrix::maximally_mixed(2)).unwrap();
    let bures_err = (bures - std::f64::consts::FRAC_1_SQRT_2).abs();

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = cli_csv(a.path(), "1");
    let second = cli_csv(b.path(), "1");
    let threaded = cli_csv(c.path(), "4");
    let identical = first == second && first == threaded;
    outcome(
        worst_dep <= 1e-12 && bures_err <= 1e-10 && identical,
        format!(
            "depolarizing error {worst_dep:.1e}, Bures error {bures_err:.1e}, CSV byte-identical across 3 runs ({} bytes): {identical}",
            first.len()
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let squared = suite(Suite::SquaredBound, 200, Some(vec![2, 3, 4]), 100, 2);
    let results: Vec<(&str, Outcome)> = vec![
        ("squared fidelity bound against sampled adversaries (commuting ensembles)", squared_bound_ensembles(&squared)),
        ("square-root bounds for single states and eigen-ensembles", squared_bound_states(&squared)),
        ("reversal independent of Kraus decomposition", decomposition_independence()),
        ("perfect reversibility on code subspaces", perfect_codes()),
        ("tripartite oracle equals Kraus fidelity formula", oracle_equivalence()),
        ("pretty good measurement properties", pgm_properties()),
        ("Bures lower bound on classical fidelity", bures_bound()),
        ("block square-root inequality", block_inequality()),
        ("optimizer validity", optimizer_validity()),
        ("spot regressions and CLI determinism", spot_regressions()),
    ];
    let mut failures = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failures += 1;
        }
        println!("[{tag}] {:>2} {name}: {}", i + 1, o.detail);
    }
    println!(
        "acceptance: {} passed, {failures} failed in {:.1}s",
        results.len() - failures,
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
