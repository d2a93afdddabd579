//! Worked examples with independent oracles and negative controls.

use hardy_blh::classify::{self, Outcome};
use hardy_blh::corpus;
use hardy_blh::linalg::{self, c, CMat};
use hardy_blh::operators::{self, Axis};
use hardy_blh::subspace::{self, SubspaceBasis, Wandering};
use hardy_blh::{
    blh, inner_product, parse_polynomial, reindex_to_disc, Error, Execution, Grade, HardyVector, MatrixPolynomial,
    PolydiscIndex, PolydiscVector,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_vector(g: Grade, rng: &mut ChaCha8Rng) -> HardyVector {
    HardyVector::from_dense(g, &random_matrix(g.ambient_dim(), 1, rng).column(0).into_owned()).unwrap()
}

fn pipeline(gens: &[&str], g: Grade) -> (SubspaceBasis, Wandering) {
    let gens: Vec<HardyVector> = gens.iter().map(|t| parse_polynomial(t, g).unwrap()).collect();
    let s = subspace::orbit_span(&gens, g, 2, Execution::Sequential).unwrap();
    let w = subspace::wandering_subspace(&s).unwrap();
    (s, w)
}

fn z_minus_z1() -> (SubspaceBasis, Wandering) {
    pipeline(&["z - z1"], Grade::new(1, 4, 4, 1).unwrap())
}

/// Real rank by singular values above `1e-10`; inputs here have real entries.
fn real_rank(m: &DMatrix<f64>) -> usize {
    m.clone().svd(false, false).singular_values.iter().filter(|&&s| s > 1e-10).count()
}

#[test]
fn reindex_preserves_norm_of_fifty_term_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = Grade::new(2, 5, 4, 2).unwrap();
    let mut p = PolydiscVector::default();
    while p.coeffs.len() < 50 {
        let exponents = vec![rng.random_range(0..=5), rng.random_range(0..=4), rng.random_range(0..=4)];
        p.coeffs.insert(PolydiscIndex { exponents, coord: rng.random_range(0..2) }, c(rng.random(), rng.random()));
    }
    let direct: f64 = p.coeffs.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let f = reindex_to_disc(&p, g).unwrap();
    assert!((f.norm_sqr().sqrt() - direct).abs() < 1e-15);
}

#[test]
fn shift_columns_on_safe_band_are_orthonormal() {
    let g = Grade::new(2, 3, 3, 2).unwrap();
    for axis in [Axis::Outer, Axis::Inner(1), Axis::Inner(2)] {
        let t = operators::shift_matrix(axis, g).unwrap();
        let cols = linalg::select_columns(t.matrix(), &g.safe_indices());
        assert!(linalg::gram_residual(&cols) < 1e-15);
    }
}

#[test]
fn adjoint_pairing_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = Grade::new(2, 3, 2, 2).unwrap();
    for axis in [Axis::Outer, Axis::Inner(1), Axis::Inner(2)] {
        let t = operators::shift_matrix(axis, g).unwrap();
        let f = random_vector(g, &mut rng);
        let h = random_vector(g, &mut rng);
        let tf = HardyVector::from_dense(g, &(t.matrix() * f.to_dense())).unwrap();
        let tsh = HardyVector::from_dense(g, &(t.adjoint().matrix() * h.to_dense())).unwrap();
        let lhs = inner_product(&tf, &h).unwrap();
        let rhs = inner_product(&f, &tsh).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }
}

#[test]
fn projection_is_idempotent_on_random_bases() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Grade::new(1, 3, 3, 1).unwrap();
    for k in [1, 5, 11] {
        let b = linalg::range_basis(&random_matrix(g.ambient_dim(), k, &mut rng), 1e-10);
        let p = operators::projection(g, &b).unwrap();
        let m = p.matrix();
        assert!((m * m - m).norm() < 1e-12);
        assert!(linalg::hermitian_defect(m) < 1e-12);
    }
}

#[test]
fn restricted_tuple_of_difference_orbit_is_not_doubly_commuting() {
    let (s, _) = z_minus_z1();
    let tuple = s.restricted_tuple();
    let rep = operators::commutation_residuals(&tuple, *s.grade(), 1e-10).unwrap();
    assert!(rep.max_commutator() < 1e-10);
    assert!(rep.max_adjoint_commutator() > 0.1);
}

/// `z^a z_1^b (z − z_1)` for all `a, b ≤ 8`, truncated to the working caps.
fn difference_orbit_oracle(g: Grade) -> DMatrix<f64> {
    let q = g.inner_dim();
    let mut cols = Vec::new();
    for a in 0..=8 {
        for b in 0..=8 {
            let mut v = nalgebra::DVector::<f64>::zeros(g.ambient_dim());
            if a + 1 <= g.outer_cap && b <= g.inner_cap {
                v[(a + 1) * q + b] += 1.0;
            }
            if a <= g.outer_cap && b + 1 <= g.inner_cap {
                v[a * q + b + 1] -= 1.0;
            }
            cols.push(v);
        }
    }
    DMatrix::from_columns(&cols)
}

#[test]
fn difference_orbit_dimension_matches_enumeration() {
    let (s, _) = z_minus_z1();
    assert_eq!(s.grade().outer_cap, 6);
    assert_eq!(s.dim(), real_rank(&difference_orbit_oracle(*s.grade())));
}

#[test]
fn rotated_invariant_subspace_is_not_invariant() {
    let (s, _) = z_minus_z1();
    let g = *s.grade();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let u = linalg::polar_unitary(&random_matrix(g.ambient_dim(), g.ambient_dim(), &mut rng));
    let rotated = SubspaceBasis::new(g, &u * s.basis(), s.provenance().clone()).unwrap();
    let rep = subspace::check_invariant(&rotated, &operators::model_tuple(g)).unwrap();
    assert!(!rep.verdict);
    assert!(rep.full_residuals.iter().copied().fold(0.0, f64::max) > 0.1);
}

#[test]
fn difference_orbit_rebuilds_from_theta() {
    let (s, w) = z_minus_z1();
    let theta = blh::extract_theta(&s, &w, false).unwrap();
    let rebuilt = subspace::build_from_theta(&theta, *s.grade()).unwrap();
    let angles = subspace::principal_angles(&s, &rebuilt).unwrap();
    assert_eq!(rebuilt.dim(), s.dim());
    assert!(angles.iter().all(|&a| a < 1e-8));
}

#[test]
fn theta_coefficients_are_outer_degree_slices() {
    let (s, w) = z_minus_z1();
    let g = *s.grade();
    let q = g.inner_dim();
    let theta = blh::extract_theta(&s, &w, false).unwrap();
    let wb = w.basis.basis();
    for m in 0..=g.outer_cap {
        assert_eq!(theta.coeff(m), Some(&wb.rows(m * q, q).into_owned()));
    }
    // isometry of M_Θ on inputs whose image is not truncated
    let deg = theta.effective_degree(1e-12);
    let t = theta.toeplitz(g.outer_cap);
    let keep = (g.outer_cap - deg + 1) * w.dim();
    let gram = t.columns(0, keep).adjoint() * t.columns(0, keep);
    assert!((gram - linalg::identity(keep)).norm() < 1e-12);
}

#[test]
fn intertwining_fails_with_foreign_multiplier() {
    let g = Grade::new(1, 4, 4, 1).unwrap();
    let (s, w) = pipeline(&["z - z1"], g);
    let (s2, w2) = pipeline(&["z - 2*z1"], g);
    assert_eq!(w.dim(), w2.dim());
    let theta = blh::extract_theta(&s, &w, false).unwrap();
    let foreign = blh::extract_phi(&s2, &w2, 1).unwrap();
    let kappa = blh::kappa(*s.grade(), 1).unwrap();
    let rep = blh::verify_intertwining(&kappa, &theta, &foreign, 3).unwrap();
    assert!(!rep.verdict);
    assert!(rep.max_residual() > 0.1);
}

#[test]
fn equal_weight_two_term_symbol_is_not_isometric() {
    let h = CMat::from_element(1, 1, c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let theta = MatrixPolynomial::new(vec![h.clone(), h]).unwrap();
    let rep = blh::is_isometric_multiplier(&theta, None);
    assert!(!rep.verdict);
    // offset-1 sum is Θ_0^* Θ_1 = 1/2
    assert!((rep.residuals[1].value - 0.5).abs() < 1e-15);
}

#[test]
fn multiplier_does_not_commute_with_random_constant() {
    let (s, w) = z_minus_z1();
    let phi = blh::extract_phi(&s, &w, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let other = MatrixPolynomial::constant(random_matrix(w.dim(), w.dim(), &mut rng));
    let rep = blh::multiplier_commutation(&phi, &other, 3).unwrap();
    assert!(rep.max_residual() > 0.1);
}

#[test]
fn difference_multiplier_decays() {
    let (s, w) = z_minus_z1();
    let phi = blh::extract_phi(&s, &w, 1).unwrap();
    let rep = blh::shift_purity_diagnostic(&phi, 4, 12).unwrap();
    assert!(rep.non_increasing);
    assert!(rep.profile.last().unwrap() < rep.profile.first().unwrap());
}

#[test]
fn perturbed_tuple_is_not_certified() {
    let (s, w) = z_minus_z1();
    let phis = blh::extract_phi_all(&s, &w, Execution::Sequential).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tau = linalg::polar_unitary(&random_matrix(w.dim(), w.dim(), &mut rng));
    let conj: Vec<MatrixPolynomial> = phis.iter().map(|p| p.map(|m| &tau * m * tau.adjoint()).unwrap()).collect();
    assert_eq!(classify::coincide(&phis, &conj).unwrap().outcome, Outcome::Certified);
    let mut coeffs = conj[0].coeffs().to_vec();
    coeffs[1][(0, 0)] += c(0.1, 0.0);
    let bumped = vec![MatrixPolynomial::new(coeffs).unwrap()];
    assert_ne!(classify::coincide(&phis, &bumped).unwrap().outcome, Outcome::Certified);
}

#[test]
fn tau_rejects_different_range() {
    let g = Grade::new(1, 4, 4, 1).unwrap();
    let (s, w) = pipeline(&["z - z1"], g);
    let (s2, w2) = pipeline(&["z + z1"], g);
    let a = blh::extract_theta(&s, &w, false).unwrap();
    let b = blh::extract_theta(&s2, &w2, false).unwrap();
    assert_eq!(classify::uniqueness_tau(&a, &b).unwrap().outcome, Outcome::Rejected);
}

#[test]
fn inner_monomial_is_isometric_module_map_onto_its_orbit() {
    let g = Grade::new(1, 4, 4, 1).unwrap();
    let one = linalg::identity(1);
    let x = classify::module_map_from_symbol(&[(vec![1, 1], one)], g, g).unwrap();
    let check = classify::module_map_check(&x).unwrap();
    assert!(check.isometric);
    let (s, _) = pipeline(&["z*z1"], g);
    // range of X on the safe band sits inside S (S lives on the working grade)
    let safe = g.safe_indices();
    let img = linalg::select_columns(x.matrix(), &safe);
    let sg = *s.grade();
    let lifted = CMat::from_fn(sg.ambient_dim(), img.ncols(), |i, j| {
        let idx = sg.multi_index(i);
        g.index_of(&idx).map_or(c(0.0, 0.0), |k| img[(k, j)])
    });
    assert!((&lifted - s.projector() * &lifted).norm() < 1e-12);
    let b = classify::bessel_diagnostics(&x).unwrap();
    assert!(b.monotone && b.within_bound && b.dimension_inequality);
    assert!(b.partial_sums.last().unwrap() <= &(1.0 + 1e-10));
}

#[test]
fn random_unitary_is_not_a_module_map() {
    let g = Grade::new(1, 3, 3, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = linalg::polar_unitary(&random_matrix(g.ambient_dim(), g.ambient_dim(), &mut rng));
    let rep = classify::module_map_check(&operators::OperatorMatrix::on(g, u).unwrap()).unwrap();
    assert!(!rep.module_map);
    assert!(rep.commutator_residuals.iter().copied().fold(0.0, f64::max) > 0.1);
}

#[test]
fn extraction_refuses_truncated_wandering_vectors() {
    let g = Grade::new(1, 4, 4, 1).unwrap();
    let gens = [parse_polynomial("z - z1", g).unwrap()];
    let s = subspace::orbit_span(&gens, g, 0, Execution::Sequential).unwrap();
    let w = subspace::wandering_subspace(&s).unwrap();
    assert!(!w.certified());
    assert!(matches!(blh::extract_theta(&s, &w, false), Err(Error::UncertifiedWandering { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_generator_pairs_satisfy_the_identities(seed in any::<u64>()) {
        for entry in corpus::random_two_generator(2, seed) {
            match corpus::evaluate(&entry, Execution::Sequential) {
                Ok(e) => {
                    prop_assert!(e.intertwining < 1e-10, "{}: {}", entry.label, e.intertwining);
                    prop_assert!(e.theta_isometry < 1e-10);
                    prop_assert!(e.phi_commutation < 1e-10);
                    prop_assert!(e.phi_agreement < 1e-12);
                    prop_assert!(e.wold < 1e-10);
                    prop_assert!(e.rebuild_angle < 1e-8);
                }
                Err(Error::UncertifiedWandering { .. }) => {}
                Err(err) => prop_assert!(false, "{}: {err}", entry.label),
            }
        }
    }
}
