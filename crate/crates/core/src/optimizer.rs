//! Gradient search over trace-preserving completely positive reversals.
//!
//! A candidate reversal `R` of a channel `A: C^n -> C^m` is held as a stacked
//! Stinespring isometry `V` of shape `(rank * n) x m` whose row blocks are the
//! Kraus operators `R_k`. The objective
//! `f(V) = sum_l p_l sum_{k,j} |tr(R_k A_j rho_l)|^2` is the average
//! entanglement fidelity of `R o A`. Ascent runs along the projected gradient
//! on the isometry manifold with a QR retraction, so every iterate is an exact
//! CPTP map.

use crate::channels::{
    partial_trace_output, random_channel_from_rng, ChoiMatrix, Ensemble, KrausChannel,
};
use crate::error::{Error, Result};
use crate::linalg::{
    cr, hermitian_eig, identity, isometry_residual, kron, orthonormalize, seeded_rng, zeros,
    CMatrix, HermitianMatrix,
};
use crate::reversal::near_optimal_reversal;

/// Line search gives up after this many halvings of the step.
pub const MAX_HALVINGS: usize = 60;

/// Iteration stops once the projected gradient norm falls below this.
pub const GRADIENT_TOL: f64 = 1e-10;

/// Residual target for [`cptp_project`].
pub const PROJECTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerOptions {
    /// Iterations per start.
    pub budget: usize,
    /// Number of seeded random starts.
    pub restarts: usize,
    pub seed: u64,
    /// Kraus rank of the adversary; `None` means `d_in * d_out` of the reversal.
    pub kraus_rank: Option<usize>,
    pub include_reversal_start: bool,
    pub include_identity_start: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            budget: 200,
            restarts: 2,
            seed: 0,
            kraus_rank: None,
            include_reversal_start: true,
            include_identity_start: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartKind {
    NearOptimalReversal,
    IdentityCompletion,
    Random,
}

/// One point visited by the optimizer, including every start.
#[derive(Clone, Copy, Debug)]
pub struct Iterate<'a> {
    pub start: usize,
    pub kind: StartKind,
    pub iteration: usize,
    pub objective: f64,
    pub isometry: &'a CMatrix,
    pub d_out: usize,
    pub rank: usize,
}

impl Iterate<'_> {
    pub fn channel(&self) -> Result<KrausChannel> {
        KrausChannel::from_stacked_isometry(self.isometry, self.d_out, self.rank)
    }
}

#[derive(Clone, Debug)]
pub struct RestartRecord {
    pub kind: StartKind,
    /// Seed identifying the start; `options.seed + start index`.
    pub seed: u64,
    pub objective_trace: Vec<(usize, f64)>,
    pub final_objective: f64,
    pub converged: bool,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizerReport {
    pub best_channel: KrausChannel,
    pub best_objective: f64,
    /// Trace of the winning start.
    pub objective_trace: Vec<(usize, f64)>,
    pub converged: bool,
    pub seed: u64,
    pub iterations_used: usize,
    pub rank: usize,
    pub restarts: Vec<RestartRecord>,
}

/// Quadratic form of the objective: weighted matrices `T = (A_j rho_l)^T`.
struct Objective {
    terms: Vec<(f64, CMatrix)>,
    n: usize,
    m: usize,
}

impl Objective {
    fn new(channel: &KrausChannel, ensemble: &Ensemble) -> Result<Self> {
        if ensemble.dim() != channel.d_in() {
            return Err(Error::DimensionMismatch {
                context: "ensemble dimension vs channel input",
                expected: channel.d_in(),
                found: ensemble.dim(),
            });
        }
        let mut terms = Vec::new();
        for (p, rho) in ensemble.members() {
            if *p == 0.0 {
                continue;
            }
            for a in channel.operators() {
                terms.push((*p, (a * rho.as_matrix()).transpose()));
            }
        }
        Ok(Self {
            terms,
            n: channel.d_in(),
            m: channel.d_out(),
        })
    }

    fn rank(&self, v: &CMatrix) -> usize {
        v.nrows() / self.n
    }

    fn value(&self, v: &CMatrix) -> f64 {
        let mut f = 0.0;
        for k in 0..self.rank(v) {
            let r = v.rows(k * self.n, self.n);
            for (w, t) in &self.terms {
                f += w * r.component_mul(t).sum().norm_sqr();
            }
        }
        f
    }

    fn euclidean_gradient(&self, v: &CMatrix) -> CMatrix {
        let mut g = zeros(v.nrows(), self.m);
        for k in 0..self.rank(v) {
            let r = v.rows(k * self.n, self.n);
            let mut gk = zeros(self.n, self.m);
            for (w, t) in &self.terms {
                let z = r.component_mul(t).sum();
                gk += t.map(|x| x.conj()) * (z * cr(2.0 * w));
            }
            g.rows_mut(k * self.n, self.n).copy_from(&gk);
        }
        g
    }
}

fn riemannian(v: &CMatrix, g: &CMatrix) -> CMatrix {
    let s = v.adjoint() * g;
    let herm = (&s + s.adjoint()) * cr(0.5);
    g - v * herm
}

#[derive(Clone, Debug)]
pub struct Gradient {
    /// Stacked isometry of the evaluation point.
    pub isometry: CMatrix,
    /// Gradient with respect to the real inner product `Re tr(X^dagger Y)`.
    pub euclidean: CMatrix,
    /// Projection of `euclidean` onto the tangent space at `isometry`.
    pub riemannian: CMatrix,
    pub objective: f64,
}

/// Ascent direction of `avg F_e(E, R o A)` at `reversal`, in stacked-isometry coordinates.
pub fn fidelity_gradient(
    channel: &KrausChannel,
    ensemble: &Ensemble,
    reversal: &KrausChannel,
) -> Result<Gradient> {
    check_reversal_shape(channel, reversal)?;
    let obj = Objective::new(channel, ensemble)?;
    let v = reversal.stacked_isometry(reversal.len());
    let euclidean = obj.euclidean_gradient(&v);
    let riemannian = riemannian(&v, &euclidean);
    Ok(Gradient {
        objective: obj.value(&v),
        isometry: v,
        euclidean,
        riemannian,
    })
}

/// Objective evaluated at an arbitrary (not necessarily isometric) stacked matrix.
pub fn objective_at(channel: &KrausChannel, ensemble: &Ensemble, v: &CMatrix) -> Result<f64> {
    let obj = Objective::new(channel, ensemble)?;
    if v.ncols() != obj.m || v.nrows() % obj.n != 0 {
        return Err(Error::DimensionMismatch {
            context: "stacked isometry shape",
            expected: obj.m,
            found: v.ncols(),
        });
    }
    Ok(obj.value(v))
}

fn check_reversal_shape(channel: &KrausChannel, reversal: &KrausChannel) -> Result<()> {
    if reversal.d_in() != channel.d_out() {
        return Err(Error::DimensionMismatch {
            context: "reversal input vs channel output",
            expected: channel.d_out(),
            found: reversal.d_in(),
        });
    }
    if reversal.d_out() != channel.d_in() {
        return Err(Error::DimensionMismatch {
            context: "reversal output vs channel input",
            expected: channel.d_in(),
            found: reversal.d_out(),
        });
    }
    Ok(())
}

/// Trace-preserving map `C^from -> C^to` acting as the identity on the common
/// coordinates; extra input coordinates are sent to `|0>`.
pub fn identity_completion(from: usize, to: usize) -> KrausChannel {
    let common = from.min(to);
    let mut head = zeros(to, from);
    for k in 0..common {
        head[(k, k)] = cr(1.0);
    }
    let mut ops = vec![head];
    for k in common..from {
        let mut op = zeros(to, from);
        op[(0, k)] = cr(1.0);
        ops.push(op);
    }
    KrausChannel::new(from, to, ops).expect("identity completion is trace-preserving")
}

/// Kraus form with at most `rank` operators, via the Choi matrix when the list is longer.
fn fit_rank(channel: &KrausChannel) -> KrausChannel {
    if channel.len() <= channel.d_in() * channel.d_out() {
        channel.clone()
    } else {
        channel.to_choi().to_kraus()
    }
}

pub fn optimize_reversal(
    channel: &KrausChannel,
    ensemble: &Ensemble,
    options: &OptimizerOptions,
) -> Result<OptimizerReport> {
    optimize_reversal_with_observer(channel, ensemble, options, |_| {})
}

/// As [`optimize_reversal`], calling `observer` on every start point and accepted iterate.
pub fn optimize_reversal_with_observer<F>(
    channel: &KrausChannel,
    ensemble: &Ensemble,
    options: &OptimizerOptions,
    mut observer: F,
) -> Result<OptimizerReport>
where
    F: FnMut(&Iterate<'_>),
{
    if options.budget == 0 {
        return Err(Error::InvalidArgument("optimizer budget must be at least 1".into()));
    }
    let obj = Objective::new(channel, ensemble)?;
    let (n, m) = (obj.n, obj.m);

    let mut starts: Vec<(StartKind, Option<KrausChannel>)> = Vec::new();
    if options.include_reversal_start {
        let rev = near_optimal_reversal(channel, &ensemble.average())?;
        starts.push((StartKind::NearOptimalReversal, Some(fit_rank(&rev.channel))));
    }
    if options.include_identity_start {
        starts.push((StartKind::IdentityCompletion, Some(identity_completion(m, n))));
    }
    for _ in 0..options.restarts {
        starts.push((StartKind::Random, None));
    }
    if starts.is_empty() {
        return Err(Error::InvalidArgument("optimizer has no start points".into()));
    }

    let needed = starts
        .iter()
        .filter_map(|(_, c)| c.as_ref().map(KrausChannel::len))
        .max()
        .unwrap_or(1);
    let rank = options.kraus_rank.unwrap_or(m * n).max(needed).max(1);
    if rank * n < m {
        return Err(Error::InvalidArgument(format!(
            "Kraus rank {rank} too small for a trace-preserving map from dimension {m} to {n}"
        )));
    }

    let mut records = Vec::with_capacity(starts.len());
    let mut best: Option<(f64, usize, CMatrix)> = None;
    let mut iterations_used = 0;

    for (index, (kind, init)) in starts.into_iter().enumerate() {
        let start_seed = options.seed.wrapping_add(index as u64);
        let mut v = match init {
            Some(ch) => ch.stacked_isometry(rank),
            None => {
                let mut rng = seeded_rng(start_seed);
                random_channel_from_rng(m, n, rank, &mut rng).stacked_isometry(rank)
            }
        };
        let mut f = obj.value(&v);
        let mut trace = vec![(0, f)];
        observer(&Iterate {
            start: index,
            kind,
            iteration: 0,
            objective: f,
            isometry: &v,
            d_out: n,
            rank,
        });
        let mut converged = false;
        let mut grad_norm = f64::INFINITY;
        for it in 1..=options.budget {
            iterations_used += 1;
            let xi = riemannian(&v, &obj.euclidean_gradient(&v));
            grad_norm = xi.norm();
            if grad_norm < GRADIENT_TOL {
                converged = true;
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let cand = orthonormalize(&(&v + &xi * cr(step)));
                let fc = obj.value(&cand);
                if fc > f {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc)) = accepted else {
                converged = true;
                break;
            };
            v = cand;
            f = fc;
            trace.push((it, f));
            observer(&Iterate {
                start: index,
                kind,
                iteration: it,
                objective: f,
                isometry: &v,
                d_out: n,
                rank,
            });
        }
        records.push(RestartRecord {
            kind,
            seed: start_seed,
            objective_trace: trace,
            final_objective: f,
            converged,
            gradient_norm: grad_norm,
        });
        // strict comparison keeps the earliest (lowest-seed) start on ties
        if best.as_ref().is_none_or(|(bf, _, _)| f > *bf) {
            best = Some((f, index, v));
        }
    }

    let (best_objective, best_index, v) = best.expect("at least one start");
    let best_channel = KrausChannel::from_stacked_isometry(&v, n, rank)?;
    let winner = &records[best_index];
    Ok(OptimizerReport {
        best_channel,
        best_objective,
        objective_trace: winner.objective_trace.clone(),
        converged: winner.converged,
        seed: winner.seed,
        iterations_used,
        rank,
        restarts: records,
    })
}

/// Result of [`cptp_project`].
#[derive(Clone, Debug)]
pub struct Projection {
    pub choi: ChoiMatrix,
    /// `||tr_out J - I||_F` of the returned matrix.
    pub tp_residual: f64,
    /// `max(0, -lambda_min(J))` of the returned matrix.
    pub psd_residual: f64,
    pub sweeps: usize,
}

fn tp_correct(j: &CMatrix, d_in: usize, d_out: usize) -> CMatrix {
    let defect = identity(d_in) - partial_trace_output(j, d_in, d_out);
    j + kron(&defect, &identity(d_out)) * cr(1.0 / d_out as f64)
}

fn psd_clip(j: &CMatrix) -> (CMatrix, f64) {
    let eig = hermitian_eig(&HermitianMatrix::symmetrized(j.clone()));
    let negative = (-eig.min_value()).max(0.0);
    (eig.map(|x| x.max(0.0)), negative)
}

/// Alternating projection between the trace-preserving affine set and the PSD cone.
///
/// Each sweep clips negative eigenvalues and then applies the partial-trace
/// correction `J + (I - tr_out J) (x) I / d_out`, so the result is always
/// exactly trace-preserving; the loop stops when the remaining negative
/// eigenvalue is below [`PROJECTION_TOL`].
pub fn cptp_project(j: &HermitianMatrix, d_in: usize, d_out: usize, max_sweeps: usize) -> Result<Projection> {
    if j.dim() != d_in * d_out {
        return Err(Error::DimensionMismatch {
            context: "Choi matrix size",
            expected: d_in * d_out,
            found: j.dim(),
        });
    }
    let mut current = tp_correct(j.as_matrix(), d_in, d_out);
    let mut sweeps = 0;
    let mut negative = psd_clip(&current).1;
    while negative >= PROJECTION_TOL && sweeps < max_sweeps {
        let (clipped, _) = psd_clip(&current);
        current = tp_correct(&clipped, d_in, d_out);
        negative = psd_clip(&current).1;
        sweeps += 1;
    }
    let matrix = HermitianMatrix::symmetrized(current);
    let choi = ChoiMatrix::new(d_in, d_out, matrix)?;
    Ok(Projection {
        tp_residual: choi.tp_residual(),
        psd_residual: negative,
        choi,
        sweeps,
    })
}

/// `||V^dagger V - I||_F` of a reported iterate.
pub fn iterate_tp_residual(it: &Iterate<'_>) -> f64 {
    isometry_residual(it.isometry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        compose, random_channel, random_commuting_ensemble, random_density_matrix, vec_columns,
        DensityMatrix,
    };
    use crate::fidelities::avg_entanglement_fidelity;
    use crate::linalg::{gaussian_matrix, haar_unitary, outer};
    use crate::reversal::reversible_code_channel;
    use rand::Rng;

    fn fd_directional(channel: &KrausChannel, e: &Ensemble, v: &CMatrix, dir: &CMatrix, h: f64) -> f64 {
        let plus = objective_at(channel, e, &(v + dir * cr(h))).unwrap();
        let minus = objective_at(channel, e, &(v - dir * cr(h))).unwrap();
        (plus - minus) / (2.0 * h)
    }

    fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
        a.zip_map(b, |x, y| (x.conj() * y).re).sum()
    }

    #[test]
    fn objective_matches_composed_fidelity() {
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let d = rng.random_range(2..=3);
            let a = random_channel(d, d, 2, rng.random());
            let e = random_commuting_ensemble(d, 2, &mut rng);
            let r = random_channel(d, d, 3, rng.random());
            let g = fidelity_gradient(&a, &e, &r).unwrap();
            let direct = avg_entanglement_fidelity(&e, &compose(&r, &a).unwrap()).unwrap();
            assert!((g.objective - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded_rng(2);
        for _ in 0..50 {
            let d = rng.random_range(2..=3);
            let a = random_channel(d, d, rng.random_range(1..=d * d), rng.random());
            let e = random_commuting_ensemble(d, rng.random_range(1..=3), &mut rng);
            let r = random_channel(d, d, d * d, rng.random());
            let g = fidelity_gradient(&a, &e, &r).unwrap();
            let dir = gaussian_matrix(g.isometry.nrows(), d, &mut rng);
            let fd = fd_directional(&a, &e, &g.isometry, &dir, 1e-5);
            let analytic = inner(&g.euclidean, &dir);
            assert!((fd - analytic).abs() <= 1e-5 * analytic.abs().max(1e-3), "{fd} vs {analytic}");
            // tangent directions see the same slope through the projected gradient
            let tangent = riemannian(&g.isometry, &dir);
            let fd_t = fd_directional(&a, &e, &g.isometry, &tangent, 1e-5);
            let analytic_t = inner(&g.riemannian, &tangent);
            assert!((fd_t - analytic_t).abs() <= 1e-5 * analytic_t.abs().max(1e-3));
        }
    }

    #[test]
    fn zero_weight_member_does_not_contribute() {
        let mut rng = seeded_rng(3);
        let a = random_channel(2, 2, 2, 5);
        let r = random_channel(2, 2, 4, 6);
        let rho = random_density_matrix(2, 2, &mut rng);
        let other = random_density_matrix(2, 2, &mut rng);
        let with = Ensemble::new(vec![(1.0, rho.clone()), (0.0, other)]).unwrap();
        let without = Ensemble::single(rho);
        let g1 = fidelity_gradient(&a, &with, &r).unwrap();
        let g2 = fidelity_gradient(&a, &without, &r).unwrap();
        assert!((g1.euclidean - g2.euclidean).norm() < 1e-14);
    }

    #[test]
    fn projected_gradient_vanishes_at_perfect_reversal() {
        let u = haar_unitary(3, 4);
        let a = KrausChannel::unitary(u.clone()).unwrap();
        let mut rng = seeded_rng(4);
        let e = Ensemble::single(random_density_matrix(3, 3, &mut rng));
        let r = KrausChannel::unitary(u.adjoint()).unwrap();
        let g = fidelity_gradient(&a, &e, &r).unwrap();
        assert!((g.objective - 1.0).abs() < 1e-12);
        assert!(g.riemannian.norm() < 1e-6);
    }

    #[test]
    fn identity_completion_shapes() {
        for (from, to) in [(2, 2), (2, 3), (3, 2), (4, 1)] {
            let ch = identity_completion(from, to);
            assert!(ch.is_trace_preserving());
            assert_eq!((ch.d_in(), ch.d_out()), (from, to));
        }
        assert!(choi_eq(&identity_completion(3, 3), &KrausChannel::identity(3)));
    }

    fn choi_eq(a: &KrausChannel, b: &KrausChannel) -> bool {
        crate::channels::choi_distance(a, b).unwrap() < 1e-12
    }

    #[test]
    fn traces_are_monotone_and_iterates_feasible() {
        let mut rng = seeded_rng(5);
        for _ in 0..10 {
            let d = rng.random_range(2..=3);
            let a = random_channel(d, d, rng.random_range(1..=d * d), rng.random());
            let e = random_commuting_ensemble(d, 2, &mut rng);
            let mut worst_tp: f64 = 0.0;
            let mut worst_cp: f64 = 0.0;
            let opts = OptimizerOptions {
                budget: 40,
                restarts: 1,
                seed: rng.random(),
                ..Default::default()
            };
            let report = optimize_reversal_with_observer(&a, &e, &opts, |it| {
                worst_tp = worst_tp.max(iterate_tp_residual(it));
                worst_cp = worst_cp.max(-it.channel().unwrap().to_choi().min_eigenvalue());
            })
            .unwrap();
            assert!(worst_tp < 1e-7 && worst_cp < 1e-7);
            for rec in &report.restarts {
                for w in rec.objective_trace.windows(2) {
                    assert!(w[1].1 >= w[0].1 - 1e-12);
                }
            }
            let rev = near_optimal_reversal(&a, &e.average()).unwrap();
            let base = avg_entanglement_fidelity(&e, &compose(&rev.channel, &a).unwrap()).unwrap();
            assert!(report.best_objective >= base - 1e-9);
            let direct = avg_entanglement_fidelity(&e, &compose(&report.best_channel, &a).unwrap()).unwrap();
            assert!((direct - report.best_objective).abs() < 1e-10);
        }
    }

    #[test]
    fn random_starts_reach_unitary_inverse() {
        let mut rng = seeded_rng(6);
        for trial in 0..5 {
            let d = 2 + trial % 2;
            let a = KrausChannel::unitary(haar_unitary(d, rng.random())).unwrap();
            let e = Ensemble::single(random_density_matrix(d, d, &mut rng));
            let opts = OptimizerOptions {
                budget: 500,
                restarts: 1,
                seed: trial as u64,
                include_reversal_start: false,
                include_identity_start: false,
                ..Default::default()
            };
            let report = optimize_reversal(&a, &e, &opts).unwrap();
            assert!(report.best_objective >= 1.0 - 1e-6, "{}", report.best_objective);
        }
    }

    #[test]
    fn perfect_code_reaches_one() {
        let code = reversible_code_channel(4, 2, &[0.5, 0.5], 7).unwrap();
        let e = Ensemble::single(code.code_state());
        let report = optimize_reversal(&code.channel, &e, &OptimizerOptions::default()).unwrap();
        assert!(report.best_objective >= 1.0 - 1e-6);
    }

    #[test]
    fn rectangular_channels_are_supported() {
        let a = random_channel(2, 3, 2, 8);
        let mut rng = seeded_rng(8);
        let e = random_commuting_ensemble(2, 2, &mut rng);
        let report = optimize_reversal(&a, &e, &OptimizerOptions::default()).unwrap();
        assert_eq!((report.best_channel.d_in(), report.best_channel.d_out()), (3, 2));
        assert!(report.best_channel.is_trace_preserving());
    }

    #[test]
    fn rank_bumps_to_fit_reversal_start() {
        let a = random_channel(2, 2, 4, 9);
        let e = Ensemble::single(DensityMatrix::maximally_mixed(2));
        let opts = OptimizerOptions {
            kraus_rank: Some(1),
            budget: 5,
            ..Default::default()
        };
        let report = optimize_reversal(&a, &e, &opts).unwrap();
        assert!(report.rank >= 2);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let a = KrausChannel::identity(2);
        let e = Ensemble::single(DensityMatrix::maximally_mixed(2));
        let opts = OptimizerOptions {
            budget: 0,
            ..Default::default()
        };
        assert!(optimize_reversal(&a, &e, &opts).is_err());
    }

    #[test]
    fn merge_is_deterministic() {
        let a = random_channel(2, 2, 3, 10);
        let mut rng = seeded_rng(10);
        let e = random_commuting_ensemble(2, 2, &mut rng);
        let opts = OptimizerOptions {
            restarts: 3,
            seed: 99,
            ..Default::default()
        };
        let r1 = optimize_reversal(&a, &e, &opts).unwrap();
        let r2 = optimize_reversal(&a, &e, &opts).unwrap();
        assert_eq!(r1.best_objective, r2.best_objective);
        assert_eq!(r1.seed, r2.seed);
        assert_eq!(r1.best_channel, r2.best_channel);
    }

    #[test]
    fn projection_fixes_cptp_input() {
        let ch = random_channel(2, 3, 3, 11);
        let j = ch.to_choi();
        let p = cptp_project(j.matrix(), 2, 3, 100).unwrap();
        assert_eq!(p.sweeps, 0);
        assert!((p.choi.matrix().as_matrix() - j.matrix().as_matrix()).norm() < 1e-10);
    }

    #[test]
    fn projection_of_zero_is_completely_depolarizing() {
        let p = cptp_project(&HermitianMatrix::symmetrized(zeros(6, 6)), 2, 3, 100).unwrap();
        assert!((p.choi.matrix().as_matrix() - identity(6) * cr(1.0 / 3.0)).norm() < 1e-12);
        assert!(p.tp_residual < 1e-12 && p.psd_residual < 1e-12);
    }

    #[test]
    fn projection_of_doubled_identity_converges_to_identity() {
        let omega = vec_columns(&identity(2));
        let j_id = outer(&omega, &omega);
        let p = cptp_project(&HermitianMatrix::symmetrized(j_id.clone() * cr(2.0)), 2, 2, 500).unwrap();
        assert!(p.tp_residual < 1e-12);
        assert!(p.psd_residual < PROJECTION_TOL);
        // a_{k+1} = (3 a_k + 1) / 4 from a_0 = 7/4 with the final TP step applied
        assert!((p.choi.matrix().as_matrix() - j_id).norm() < 1e-8);
    }

    #[test]
    fn projection_output_is_cptp_for_random_hermitian() {
        let mut rng = seeded_rng(12);
        for _ in 0..20 {
            let h = crate::linalg::random_hermitian(6, &mut rng);
            let p = cptp_project(&h, 3, 2, 2000).unwrap();
            assert!(p.tp_residual < 1e-9);
            assert!(p.psd_residual < PROJECTION_TOL);
        }
    }
}
