//! Pretty good measurement, the classicizing channel and its reversal.
//!
//! For a labeled ensemble `{p_j, rho_hat_j}` with unnormalized members
//! `rho_j = p_j rho_hat_j` and `rho_out = sum_j rho_j`, the PGM elements are
//! `X_j = rho_out^{-1/2} rho_j rho_out^{-1/2}`. The classicizing channel
//! measures the label basis and prepares `rho_hat_j`; its Kraus operators are
//! `sqrt(lambda_ij) |v_ij><j|` from the spectral decompositions
//! `rho_hat_j = sum_i lambda_ij |v_ij><v_ij|`.

use rand::Rng;

use crate::channels::{
    check_probabilities, random_density_matrix, DensityMatrix, KrausChannel, TP_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, hermitian_eig, identity, isometry_residual, psd_pinv_sqrt, support_projector, trace,
    zeros, CMatrix, CVector, Eigh, HermitianMatrix, DEFAULT_TOL,
};

/// Spectral weights at or below this are left out of Kraus lists.
pub const SPECTRAL_CUTOFF: f64 = 1e-12;

/// Orthonormal label states `|j>` attached to the ensemble members.
#[derive(Clone, Debug, PartialEq)]
pub enum Labels {
    Computational,
    /// Columns are the label vectors.
    Explicit(CMatrix),
}

#[derive(Clone, Debug)]
pub struct LabeledEnsemble {
    members: Vec<(f64, DensityMatrix)>,
    labels: CMatrix,
    spectra: Vec<Eigh>,
    rho_out: DensityMatrix,
}

impl LabeledEnsemble {
    pub fn new(members: Vec<(f64, DensityMatrix)>, labels: Labels) -> Result<Self> {
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
        let n = members.len();
        let labels = match labels {
            Labels::Computational => identity(n),
            Labels::Explicit(m) => {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        context: "label basis size (one label per member)",
                        expected: n,
                        found: m.ncols(),
                    });
                }
                let residual = isometry_residual(&m);
                if residual > 1e-9 {
                    return Err(Error::LabelsNotOrthonormal { residual });
                }
                m
            }
        };
        let mut out = zeros(d, d);
        for (p, rho) in &members {
            out += rho.as_matrix() * cr(*p);
        }
        let rho_out = DensityMatrix::new(out)?;
        let spectra = members.iter().map(|(_, r)| r.eig()).collect();
        Ok(Self {
            members,
            labels,
            spectra,
            rho_out,
        })
    }

    pub fn computational(members: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        Self::new(members, Labels::Computational)
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

    /// Dimension of the member states.
    pub fn dim(&self) -> usize {
        self.rho_out.dim()
    }

    pub fn label(&self, j: usize) -> CVector {
        self.labels.column(j).into_owned()
    }

    pub fn rho_out(&self) -> &DensityMatrix {
        &self.rho_out
    }

    /// `p_j rho_hat_j`.
    pub fn unnormalized(&self, j: usize) -> CMatrix {
        let (p, rho) = &self.members[j];
        rho.as_matrix() * cr(*p)
    }

    /// `sum_j p_j |j><j|` on the label space.
    pub fn input_state(&self) -> DensityMatrix {
        let n = self.len();
        let mut m = zeros(n, n);
        for (j, (p, _)) in self.members.iter().enumerate() {
            let l = self.label(j);
            m += &l * l.adjoint() * cr(*p);
        }
        DensityMatrix::new(m).expect("probabilities on orthonormal labels")
    }

    /// `(j, sqrt(lambda_ij), v_ij)` for every spectral term above [`SPECTRAL_CUTOFF`].
    fn spectral_terms(&self) -> Vec<(usize, f64, CVector)> {
        let mut terms = Vec::new();
        for (j, eig) in self.spectra.iter().enumerate() {
            for (i, &lambda) in eig.values.iter().enumerate() {
                if lambda > SPECTRAL_CUTOFF {
                    terms.push((j, lambda.sqrt(), eig.vector(i)));
                }
            }
        }
        terms
    }
}

/// Random labeled ensemble: `n` members of dimension `d`, each with a random rank in `1..=d`.
pub fn random_labeled_ensemble<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> LabeledEnsemble {
    let weights = linalg::random_probabilities(n, rng);
    let members = weights
        .into_iter()
        .map(|p| {
            let rank = rng.random_range(1..=d);
            (p, random_density_matrix(d, rank, rng))
        })
        .collect();
    LabeledEnsemble::computational(members).expect("valid random ensemble")
}

/// Positive operators summing to the projector onto `supp rho_out`.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
    support: HermitianMatrix,
}

impl Povm {
    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn support(&self) -> &HermitianMatrix {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `||sum_j X_j - P_supp||_F`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.support.dim();
        let total = self
            .elements
            .iter()
            .fold(zeros(d, d), |acc, x| acc + x.as_matrix());
        (total - self.support.as_matrix()).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(|x| hermitian_eig(x).min_value())
            .fold(f64::INFINITY, f64::min)
    }
}

/// PGM for arbitrary unnormalized PSD operators `rho_j`, with `rho_out = sum_j rho_j`.
pub fn pgm_from_unnormalized(operators: &[CMatrix]) -> Result<Povm> {
    let first = operators.first().ok_or(Error::EmptyEnsemble)?;
    let d = first.nrows();
    let mut out = zeros(d, d);
    for op in operators {
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "PGM operand size",
                expected: d,
                found: op.nrows(),
            });
        }
        out += op;
    }
    let out = HermitianMatrix::new(out)?;
    let inv = psd_pinv_sqrt(&out, DEFAULT_TOL)?;
    let support = support_projector(&out, DEFAULT_TOL)?;
    let elements = operators
        .iter()
        .map(|op| HermitianMatrix::symmetrized(inv.as_matrix() * op * inv.as_matrix()))
        .collect();
    Ok(Povm { elements, support })
}

pub fn pgm_povm(ensemble: &LabeledEnsemble) -> Result<Povm> {
    let ops: Vec<CMatrix> = (0..ensemble.len()).map(|j| ensemble.unnormalized(j)).collect();
    pgm_from_unnormalized(&ops)
}

/// `A ~ { sqrt(lambda_ij) |v_ij><j| }`, a channel from the label space to the member space.
pub fn classicizing_channel(ensemble: &LabeledEnsemble) -> Result<KrausChannel> {
    let ops = ensemble
        .spectral_terms()
        .into_iter()
        .map(|(j, s, v)| &v * ensemble.label(j).adjoint() * cr(s))
        .collect();
    KrausChannel::new(ensemble.len(), ensemble.dim(), ops)
}

/// Reversal of the classicizing channel, `{ sqrt(p_j) sqrt(lambda_ij) |j><v_ij| rho_out^{-1/2} }`,
/// with its operators grouped by label `j`.
#[derive(Clone, Debug)]
pub struct ClassicizingReversal {
    pub channel: KrausChannel,
    /// Operator indices in `channel` belonging to each label.
    pub groups: Vec<Vec<usize>>,
}

impl ClassicizingReversal {
    /// `sum_i R_ij^dagger R_ij`.
    pub fn group_gram(&self, j: usize) -> CMatrix {
        let d = self.channel.d_in();
        self.groups[j].iter().fold(zeros(d, d), |acc, &k| {
            let r = &self.channel.operators()[k];
            acc + r.adjoint() * r
        })
    }
}

pub fn classicizing_reversal(ensemble: &LabeledEnsemble) -> Result<ClassicizingReversal> {
    let inv = psd_pinv_sqrt(ensemble.rho_out().hermitian(), DEFAULT_TOL)?;
    let mut groups = vec![Vec::new(); ensemble.len()];
    let mut ops = Vec::new();
    for (j, s, v) in ensemble.spectral_terms() {
        let p = ensemble.members()[j].0;
        if p * s * s <= SPECTRAL_CUTOFF {
            continue;
        }
        groups[j].push(ops.len());
        ops.push(ensemble.label(j) * v.adjoint() * inv.as_matrix() * cr(p.sqrt() * s));
    }
    if ops.is_empty() {
        return Err(Error::ZeroOutput);
    }
    let mut channel = KrausChannel::new_subnormalized(ensemble.dim(), ensemble.len(), ops.clone())?;
    if channel.tp_residual() <= TP_TOL {
        channel = KrausChannel::new(ensemble.dim(), ensemble.len(), ops)?;
    }
    Ok(ClassicizingReversal { channel, groups })
}

/// `sum_j p_j tr(X_j rho_hat_j)`.
pub fn discrimination_success(ensemble: &LabeledEnsemble, povm: &Povm) -> Result<f64> {
    if povm.len() != ensemble.len() {
        return Err(Error::DimensionMismatch {
            context: "POVM outcomes vs ensemble members",
            expected: ensemble.len(),
            found: povm.len(),
        });
    }
    if povm.support.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            context: "POVM dimension",
            expected: ensemble.dim(),
            found: povm.support.dim(),
        });
    }
    Ok(povm
        .elements
        .iter()
        .zip(ensemble.members())
        .map(|(x, (p, rho))| p * trace(&(x.as_matrix() * rho.as_matrix())).re)
        .sum())
}

/// Splits each `rho_j` into `d` pieces `rho_j^{1/2} |u_i><u_i| rho_j^{1/2}` over a seeded
/// Haar basis, builds the PGM of the refined ensemble and returns the largest
/// `||sum_i X_ij - X_j||_F`.
pub fn refinement_residual(ensemble: &LabeledEnsemble, seed: u64) -> Result<f64> {
    let d = ensemble.dim();
    let mut refined = Vec::with_capacity(ensemble.len() * d);
    for j in 0..ensemble.len() {
        let root = linalg::psd_sqrt(&HermitianMatrix::symmetrized(ensemble.unnormalized(j)), DEFAULT_TOL)?;
        let u = linalg::haar_unitary(d, linalg::derive_seed(seed, j as u64));
        for i in 0..d {
            let ui = u.column(i).into_owned();
            refined.push(root.as_matrix() * &ui * ui.adjoint() * root.as_matrix());
        }
    }
    let fine = pgm_from_unnormalized(&refined)?;
    let coarse = pgm_povm(ensemble)?;
    let mut worst: f64 = 0.0;
    for j in 0..ensemble.len() {
        let sum = fine.elements()[j * d..(j + 1) * d]
            .iter()
            .fold(zeros(d, d), |acc, x| acc + x.as_matrix());
        worst = worst.max((sum - coarse.elements()[j].as_matrix()).norm());
    }
    Ok(worst)
}

/// `max_{i,j} ||X_i X_j - delta_ij X_i||_F`; zero for a projective measurement.
pub fn projective_residual(povm: &Povm) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, xi) in povm.elements().iter().enumerate() {
        for (j, xj) in povm.elements().iter().enumerate() {
            let prod = xi.as_matrix() * xj.as_matrix();
            let target = if i == j { xi.as_matrix().clone() } else { zeros(prod.nrows(), prod.ncols()) };
            worst = worst.max((prod - target).norm());
        }
    }
    worst
}

/// Labeled ensemble of `n <= d` Haar-random pure states, linearly independent with probability one.
pub fn random_pure_labeled_ensemble<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> LabeledEnsemble {
    let weights = linalg::random_probabilities(n, rng);
    let members = weights
        .into_iter()
        .map(|p| {
            let v = linalg::random_isometry(d, 1, rng).column(0).into_owned();
            (p, DensityMatrix::pure(&v).expect("unit vector"))
        })
        .collect();
    LabeledEnsemble::computational(members).expect("valid random ensemble")
}

/// Largest `||sum_i R_ij^dagger R_ij - X_j||_F` over labels.
pub fn grouping_residual(reversal: &ClassicizingReversal, povm: &Povm) -> f64 {
    (0..povm.len())
        .map(|j| (reversal.group_gram(j) - povm.elements()[j].as_matrix()).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{choi_distance, compose};
    use crate::fidelities::classical_fidelity_in_basis;
    use crate::linalg::seeded_rng;
    use crate::reversal::near_optimal_reversal;

    fn ket(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| cr(x)))
    }

    fn zero_plus() -> LabeledEnsemble {
        LabeledEnsemble::computational(vec![
            (0.5, DensityMatrix::basis(2, 0)),
            (0.5, DensityMatrix::pure(&ket(&[1.0, 1.0])).unwrap()),
        ])
        .unwrap()
    }

    /// Optimal two-outcome success probability `1/2 + ||p0 r0 - p1 r1||_1 / 2`,
    /// via the eigendecomposition of the weighted difference.
    fn helstrom_success(e: &LabeledEnsemble) -> f64 {
        let diff = HermitianMatrix::symmetrized(e.unnormalized(0) - e.unnormalized(1));
        let eig = hermitian_eig(&diff);
        0.5 + 0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    #[test]
    fn classicizing_channel_prepares_members() {
        let e = zero_plus();
        let ch = classicizing_channel(&e).unwrap();
        let out = ch.apply(&DensityMatrix::basis(2, 1)).unwrap();
        assert!((out.as_matrix() - e.members()[1].1.as_matrix()).norm() < 1e-12);

        let mut rng = seeded_rng(1);
        for _ in 0..10 {
            let e = random_labeled_ensemble(3, 4, &mut rng);
            let ch = classicizing_channel(&e).unwrap();
            assert!(ch.is_trace_preserving());
            for j in 0..e.len() {
                let out = ch.apply(&DensityMatrix::basis(4, j)).unwrap();
                assert!((out.as_matrix() - e.members()[j].1.as_matrix()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn classicizing_channel_on_basis_states_is_a_measurement() {
        let e = LabeledEnsemble::computational(vec![
            (0.5, DensityMatrix::basis(2, 0)),
            (0.5, DensityMatrix::basis(2, 1)),
        ])
        .unwrap();
        let ch = classicizing_channel(&e).unwrap();
        let plus = DensityMatrix::pure(&ket(&[1.0, 1.0])).unwrap();
        let out = ch.apply(&plus).unwrap();
        assert!((out.as_matrix() - identity(2) * cr(0.5)).norm() < 1e-12);
    }

    #[test]
    fn explicit_labels() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = linalg::from_real_rows(&[&[s, s], &[s, -s]]);
        let members = vec![
            (0.3, DensityMatrix::basis(2, 0)),
            (0.7, DensityMatrix::basis(2, 1)),
        ];
        let e = LabeledEnsemble::new(members.clone(), Labels::Explicit(h.clone())).unwrap();
        let ch = classicizing_channel(&e).unwrap();
        let plus = DensityMatrix::pure(&h.column(0).into_owned()).unwrap();
        assert!((ch.apply(&plus).unwrap().as_matrix() - DensityMatrix::basis(2, 0).as_matrix()).norm() < 1e-12);
        let bad = LabeledEnsemble::new(members, Labels::Explicit(identity(2) * cr(2.0)));
        assert!(matches!(bad, Err(Error::LabelsNotOrthonormal { .. })));
    }

    #[test]
    fn orthogonal_states_are_perfectly_distinguished() {
        let e = LabeledEnsemble::computational(vec![
            (0.5, DensityMatrix::basis(3, 0)),
            (0.5, DensityMatrix::basis(3, 2)),
        ])
        .unwrap();
        let povm = pgm_povm(&e).unwrap();
        assert!((discrimination_success(&e, &povm).unwrap() - 1.0).abs() < 1e-12);
        for (j, x) in povm.elements().iter().enumerate() {
            let proj = e.members()[j].1.as_matrix();
            assert!((x.as_matrix() - proj).norm() < 1e-12);
        }
        let rev = classicizing_reversal(&e).unwrap();
        let chain = compose(&rev.channel, &classicizing_channel(&e).unwrap()).unwrap();
        for j in 0..2 {
            let out = chain.apply_matrix(DensityMatrix::basis(2, j).as_matrix()).unwrap();
            assert!((out - DensityMatrix::basis(2, j).as_matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn single_member_pgm_is_support_projector() {
        let mut rng = seeded_rng(2);
        let rho = random_density_matrix(3, 2, &mut rng);
        let e = LabeledEnsemble::computational(vec![(1.0, rho.clone())]).unwrap();
        let povm = pgm_povm(&e).unwrap();
        let p = support_projector(rho.hermitian(), DEFAULT_TOL).unwrap();
        assert!((povm.elements()[0].as_matrix() - p.as_matrix()).norm() < 1e-10);
        assert!((discrimination_success(&e, &povm).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pgm_matches_helstrom_for_two_pure_states() {
        let e = zero_plus();
        let povm = pgm_povm(&e).unwrap();
        let pgm = discrimination_success(&e, &povm).unwrap();
        let opt = helstrom_success(&e);
        // equiprobable pure pair: the square-root measurement is optimal
        assert!((pgm - opt).abs() < 1e-9, "{pgm} vs {opt}");
        assert!((opt - (0.5 + 0.5 * std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn pgm_never_beats_helstrom() {
        let mut rng = seeded_rng(3);
        for _ in 0..50 {
            let e = random_labeled_ensemble(3, 2, &mut rng);
            let pgm = discrimination_success(&e, &pgm_povm(&e).unwrap()).unwrap();
            assert!(pgm <= helstrom_success(&e) + 1e-10);
        }
    }

    #[test]
    fn identical_members_give_sum_of_squared_priors() {
        let mut rng = seeded_rng(4);
        let rho = random_density_matrix(3, 3, &mut rng);
        let priors = [0.2, 0.5, 0.3];
        let e = LabeledEnsemble::computational(priors.iter().map(|&p| (p, rho.clone())).collect())
            .unwrap();
        let s = discrimination_success(&e, &pgm_povm(&e).unwrap()).unwrap();
        let expected: f64 = priors.iter().map(|p| p * p).sum();
        assert!((s - expected).abs() < 1e-10);
    }

    #[test]
    fn povm_completeness_and_positivity() {
        let mut rng = seeded_rng(5);
        for _ in 0..20 {
            let e = random_labeled_ensemble(3, 3, &mut rng);
            let povm = pgm_povm(&e).unwrap();
            assert!(povm.completeness_residual() < 1e-8);
            assert!(povm.min_eigenvalue() > -1e-9);
        }
    }

    #[test]
    fn coarse_graining_of_reversal_operators() {
        let mut rng = seeded_rng(6);
        for _ in 0..20 {
            let e = random_labeled_ensemble(3, 3, &mut rng);
            let povm = pgm_povm(&e).unwrap();
            let rev = classicizing_reversal(&e).unwrap();
            for j in 0..e.len() {
                let residual = (rev.group_gram(j) - povm.elements()[j].as_matrix()).norm();
                assert!(residual < 1e-9);
            }
        }
    }

    #[test]
    fn classicizing_reversal_matches_general_construction() {
        let mut rng = seeded_rng(7);
        for _ in 0..20 {
            let e = random_labeled_ensemble(2 + rng.random_range(0..2), 3, &mut rng);
            let a = classicizing_channel(&e).unwrap();
            let general = near_optimal_reversal(&a, &e.input_state()).unwrap();
            let special = classicizing_reversal(&e).unwrap();
            let dist = choi_distance(&general.support_channel, &special.channel).unwrap();
            assert!(dist < 1e-9, "{dist}");
        }
    }

    #[test]
    fn reversal_performs_the_pgm() {
        let mut rng = seeded_rng(8);
        for _ in 0..20 {
            let e = random_labeled_ensemble(3, 3, &mut rng);
            let a = classicizing_channel(&e).unwrap();
            let rev = classicizing_reversal(&e).unwrap();
            let chain = compose(&rev.channel, &a).unwrap();
            let f = classical_fidelity_in_basis(&e.input_state(), &chain, &identity(3)).unwrap();
            let s = discrimination_success(&e, &pgm_povm(&e).unwrap()).unwrap();
            assert!((f - s).abs() < 1e-9);
        }
    }

    #[test]
    fn linearly_independent_pure_states_give_projective_pgm() {
        let mut rng = seeded_rng(9);
        for _ in 0..20 {
            let n = 3;
            let members = linalg::random_probabilities(n, &mut rng)
                .into_iter()
                .map(|p| {
                    let v = linalg::random_isometry(4, 1, &mut rng).column(0).into_owned();
                    (p, DensityMatrix::pure(&v).unwrap())
                })
                .collect();
            let e = LabeledEnsemble::computational(members).unwrap();
            let povm = pgm_povm(&e).unwrap();
            for (i, xi) in povm.elements().iter().enumerate() {
                assert_eq!(hermitian_eig(xi).rank(1e-8), 1);
                for (j, xj) in povm.elements().iter().enumerate() {
                    let prod = xi.as_matrix() * xj.as_matrix();
                    let target = if i == j { xi.as_matrix().clone() } else { zeros(4, 4) };
                    assert!((prod - target).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn refinement_coarse_grains_to_member_elements() {
        let mut rng = seeded_rng(10);
        for _ in 0..20 {
            let e = random_labeled_ensemble(3, 3, &mut rng);
            let mut refined = Vec::new();
            let mut owner = Vec::new();
            for j in 0..e.len() {
                // rho_j = sum_i rho_j^{1/2} |u_i><u_i| rho_j^{1/2}
                let rho_j = e.unnormalized(j);
                let u = linalg::haar_unitary(3, rng.random());
                let root = linalg::psd_sqrt(&HermitianMatrix::symmetrized(rho_j), DEFAULT_TOL).unwrap();
                for i in 0..3 {
                    let ui = u.column(i).into_owned();
                    refined.push(root.as_matrix() * &ui * ui.adjoint() * root.as_matrix());
                    owner.push(j);
                }
            }
            let fine = pgm_from_unnormalized(&refined).unwrap();
            let coarse = pgm_povm(&e).unwrap();
            for j in 0..e.len() {
                let sum = fine
                    .elements()
                    .iter()
                    .zip(&owner)
                    .filter(|(_, &o)| o == j)
                    .fold(zeros(3, 3), |acc, (x, _)| acc + x.as_matrix());
                assert!((sum - coarse.elements()[j].as_matrix()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn measuring_before_rotating_destroys_coherence() {
        use crate::fidelities::entanglement_fidelity;
        let u = linalg::haar_unitary(3, 11);
        let priors = [0.5, 0.3, 0.2];
        let members = priors
            .iter()
            .enumerate()
            .map(|(j, &p)| (p, DensityMatrix::pure(&u.column(j).into_owned()).unwrap()))
            .collect();
        let e = LabeledEnsemble::computational(members).unwrap();
        let rho = e.input_state();

        let measured = classicizing_channel(&e).unwrap();
        let rev = classicizing_reversal(&e).unwrap();
        let f_measured = entanglement_fidelity(&rho, &compose(&rev.channel, &measured).unwrap()).unwrap();
        let general = near_optimal_reversal(&measured, &rho).unwrap();
        let f_general = entanglement_fidelity(&rho, &compose(&general.channel, &measured).unwrap()).unwrap();

        let coherent = KrausChannel::unitary(u).unwrap();
        let rev_u = near_optimal_reversal(&coherent, &rho).unwrap();
        let f_coherent = entanglement_fidelity(&rho, &compose(&rev_u.channel, &coherent).unwrap()).unwrap();

        let sum_sq: f64 = priors.iter().map(|p| p * p).sum();
        assert!((f_measured - sum_sq).abs() < 1e-9);
        assert!((f_general - sum_sq).abs() < 1e-9);
        assert!((f_coherent - 1.0).abs() < 1e-9);
    }

    #[test]
    fn helper_residuals() {
        let mut rng = seeded_rng(12);
        for _ in 0..10 {
            let e = random_labeled_ensemble(3, 3, &mut rng);
            assert!(refinement_residual(&e, 5).unwrap() < 1e-9);
            let povm = pgm_povm(&e).unwrap();
            assert!(grouping_residual(&classicizing_reversal(&e).unwrap(), &povm) < 1e-9);
            let pure = random_pure_labeled_ensemble(3, 3, &mut rng);
            assert!(projective_residual(&pgm_povm(&pure).unwrap()) < 1e-8);
        }
        // two non-orthogonal qubit states in three outcomes are not projective
        let e = LabeledEnsemble::computational(vec![
            (0.4, DensityMatrix::basis(2, 0)),
            (0.3, DensityMatrix::basis(2, 1)),
            (0.3, DensityMatrix::pure(&ket(&[1.0, 1.0])).unwrap()),
        ])
        .unwrap();
        assert!(projective_residual(&pgm_povm(&e).unwrap()) > 1e-3);
    }
}
