use cxlab::bl::{
    bl_dimension_check_mc, bl_scaling_check, haha_inequality_check, kernel_basis, normals_wedge, random_subspace,
    surface_bl_datum, transversal, vmatrix_identity_check,
};
use cxlab::rng::substream;
use cxlab::surface::{real_parametrization_maps, HolomorphicPolynomial};
use cxlab::{sample, ComplexVector};
use proptest::prelude::*;

fn points(n: usize, seed: u64) -> Vec<ComplexVector> {
    let mut rng = substream(seed, 0);
    (0..n).map(|_| sample::point(n - 1, 1.0, &mut rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vmatrix_determinant_is_squared_normal_determinant(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = substream(seed, 1);
        let phi = sample::generic_polynomial(n - 1, 3, &mut rng);
        let pts = points(n, seed);
        let (lhs, rhs) = vmatrix_identity_check(&phi, &pts).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(rhs).max(1e-300), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn transversality_ignores_point_order(seed in any::<u64>(), n in 2usize..=4, c in 0.0f64..0.5) {
        let phi = HolomorphicPolynomial::sum_of_squares(n - 1);
        let mut pts = points(n, seed);
        let before = normals_wedge(&phi, &pts).unwrap();
        let t = transversal(&phi, &pts, c).unwrap();
        pts.rotate_left(1);
        pts.swap(0, n - 1);
        let after = normals_wedge(&phi, &pts).unwrap();
        prop_assert!((before - after).abs() <= 1e-12);
        prop_assert_eq!(t, before > c);
        prop_assert!(before <= 1.0 + 1e-12);
    }

    #[test]
    fn transversality_survives_unimodular_rescaling(seed in any::<u64>(), n in 2usize..=4, theta in 0.0f64..6.3) {
        // φ ↦ e^{iθ}φ changes each normal by a diagonal unitary, and with n
        // points the wedge is a determinant
        let phi = HolomorphicPolynomial::sum_of_squares(n - 1);
        let rot = phi.scale(cxlab::C64::from_polar(1.0, theta));
        let pts = points(n, seed);
        let a = normals_wedge(&phi, &pts).unwrap();
        let b = normals_wedge(&rot, &pts).unwrap();
        prop_assert!(a.is_finite() && b.is_finite());
        prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn kernel_basis_is_annihilated(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = substream(seed, 2);
        let phi = sample::generic_polynomial(n - 1, 3, &mut rng);
        let a = sample::point(n - 1, 1.0, &mut rng);
        let l = real_parametrization_maps(&phi, &a).unwrap();
        let (v1, v2) = kernel_basis(&phi, &a).unwrap();
        let scale = l.norm() * v1.norm();
        prop_assert!((&l * &v1).norm() <= 1e-12 * scale.max(1.0));
        prop_assert!((&l * &v2).norm() <= 1e-12 * scale.max(1.0));
        prop_assert!(v1.dot(&v2).abs() <= 1e-12 * v1.norm_squared());
    }

    #[test]
    fn haha_form_holds_for_random_subspaces(seed in any::<u64>(), n in 2usize..=3) {
        let phi = HolomorphicPolynomial::sum_of_squares(n - 1);
        let pts = points(n, seed);
        prop_assume!(normals_wedge(&phi, &pts).unwrap() > 1e-2);
        let datum = surface_bl_datum(&phi, &pts).unwrap();
        let mut rng = substream(seed, 3);
        let d = datum.dim();
        let samples: Vec<_> = (0..50).map(|_| {
            let m = rand::Rng::random_range(&mut rng, 1..=d);
            random_subspace(d, m, &mut rng)
        }).collect();
        let rep = haha_inequality_check(&datum, &samples);
        prop_assert!(rep.pass, "{:?}", rep.failures);
    }
}

#[test]
fn transversal_data_passes_and_coincident_data_fails() {
    for n in 2..=4 {
        let phi = HolomorphicPolynomial::sum_of_squares(n - 1);
        let mut seed = 0;
        let pts = loop {
            let p = points(n, seed);
            if normals_wedge(&phi, &p).unwrap() > 1e-2 {
                break p;
            }
            seed += 1;
        };
        let datum = surface_bl_datum(&phi, &pts).unwrap();
        assert!(bl_scaling_check(&datum));
        let rep = bl_dimension_check_mc(&datum, 2000, 5).unwrap();
        assert!(rep.pass, "n={n}: {:?}", rep.violation);

        let same = vec![pts[0].clone(); n];
        let bad = surface_bl_datum(&phi, &same).unwrap();
        for trials in [1, 2000] {
            let rep = bl_dimension_check_mc(&bad, trials, 5).unwrap();
            let v = rep.violation.expect("coincident points share a kernel");
            // found among the kernel subspaces, before any random trial
            assert!(v.source.starts_with("ker"), "{}", v.source);
            assert_eq!(v.dimension, 2);
        }
    }
}

#[test]
fn reports_repeat_for_a_fixed_seed() {
    let phi = HolomorphicPolynomial::sum_of_squares(2);
    let datum = surface_bl_datum(&phi, &points(3, 1)).unwrap();
    let a = bl_dimension_check_mc(&datum, 700, 9).unwrap();
    let b = bl_dimension_check_mc(&datum, 700, 9).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}
