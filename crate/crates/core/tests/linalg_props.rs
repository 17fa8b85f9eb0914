use cxlab::linalg::{block_det_identity, det, pair, realify, takagi, wedge};
use cxlab::rng::substream;
use cxlab::{sample, ComplexMatrix, ComplexVector, C64};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_det_sides_agree(seed in any::<u64>(), m in 1usize..=8) {
        let mut rng = substream(seed, 0);
        let b = sample::gaussian_matrix(m, m, &mut rng);
        let d = sample::gaussian_matrix(m, m, &mut rng);
        let (lhs, rhs) = block_det_identity(&b, &d).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn wedge_ignores_unit_phases(seed in any::<u64>(), n in 2usize..=4, k in 1usize..=4) {
        let k = k.min(n);
        let mut rng = substream(seed, 0);
        let vs: Vec<ComplexVector> = (0..k).map(|_| sample::unit_vector(n, &mut rng)).collect();
        let turned: Vec<ComplexVector> = vs
            .iter()
            .map(|v| v * C64::from_polar(1.0, rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::TAU)))
            .collect();
        prop_assert!((wedge(&vs).unwrap() - wedge(&turned).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn wedge_is_squared_determinant(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = substream(seed, 0);
        let vs: Vec<ComplexVector> = (0..n).map(|_| sample::unit_vector(n, &mut rng)).collect();
        let oracle = ComplexMatrix::from_columns(&vs).determinant().norm_sqr();
        prop_assert!((wedge(&vs).unwrap() - oracle).abs() <= 1e-10);
    }

    #[test]
    fn takagi_invariants(seed in any::<u64>(), n in 1usize..=12) {
        let mut rng = substream(seed, 0);
        let a = sample::symmetric_complex(n, &mut rng);
        let t = takagi(&a).unwrap();
        prop_assert!((t.reconstruct() - &a).norm() <= 1e-10 * a.norm());
        let uu = &t.u * t.u.adjoint();
        prop_assert!((uu - ComplexMatrix::identity(n, n)).camax() <= 1e-10);
        prop_assert!(t.d.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pair_is_realified_dot(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = substream(seed, 0);
        let a = ComplexVector::from_fn(n, |_, _| sample::complex_normal(&mut rng));
        let b = ComplexVector::from_fn(n, |_, _| sample::complex_normal(&mut rng));
        let dot = realify(&a).dot(&realify(&b));
        prop_assert!((pair(&a, &b).unwrap() - dot).abs() <= 1e-12 * (1.0 + dot.abs()));
    }
}

#[test]
fn lu_determinant_matches_nalgebra() {
    let mut rng = substream(3, 0);
    for m in 1..=10 {
        let a = sample::complex_matrix(m, m, &mut rng);
        let ours = det(&a);
        let theirs = a.clone().determinant();
        assert!((ours - theirs).norm() <= 1e-10 * theirs.norm().max(1.0));
    }
}

#[test]
fn takagi_examples() {
    let swap = ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    let t = takagi(&swap).unwrap();
    assert!((t.d[0] - 1.0).abs() < 1e-12 && (t.d[1] - 1.0).abs() < 1e-12);
    let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(&[
        C64::new(2.0, 0.0),
        C64::new(3.0, 0.0),
    ]));
    let t = takagi(&diag).unwrap();
    assert_eq!(t.d.len(), 2);
    assert!((t.d[0] - 3.0).abs() < 1e-12 && (t.d[1] - 2.0).abs() < 1e-12);
    assert!((t.reconstruct() - diag).camax() < 1e-12);
}
