use cxlab::bg::{
    build_grids, cap_coefficient, exponent_threshold, narrow_count_check, optimal_k, pipeline, BgSpec, Classification,
    ClassifyParams, CoefficientMode,
};
use cxlab::extension::{Amplitude, QuadratureSpec};
use cxlab::surface::HolomorphicPolynomial;
use num_rational::Ratio;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn coefficients_are_homogeneous(cap in 0usize..16, bx in 0usize..16, lambda in -5.0f64..5.0, definition in any::<bool>()) {
        let phi = HolomorphicPolynomial::sum_of_squares(1);
        let (caps, boxes) = build_grids(2, 4, 8).unwrap();
        let f = Amplitude::gaussian(vec![0.1, -0.2], 0.3);
        let mode = if definition { CoefficientMode::Definition { grid_per_axis: 4 } } else { CoefficientMode::Proxy };
        let quad = QuadratureSpec::default();
        let base = cap_coefficient(&phi, &f, &caps, cap, &boxes, bx, mode, &quad).unwrap();
        let scaled = cap_coefficient(&phi, &f.clone().scaled(lambda), &caps, cap, &boxes, bx, mode, &quad).unwrap();
        prop_assert!((scaled - lambda.abs() * base).abs() <= 1e-10 * (lambda.abs() * base).max(1e-300));
    }
}

#[test]
fn every_box_is_classified_once() {
    let phi = HolomorphicPolynomial::sum_of_squares(1);
    for f in [
        Amplitude::gaussian(vec![0.0, 0.0], 0.3),
        Amplitude::gaussian(vec![1.0 / 64.0; 2], 0.003),
    ] {
        let spec = BgSpec {
            n: 2,
            k_scale: 4,
            r: 8,
            params: ClassifyParams::default(),
            mode: CoefficientMode::Proxy,
            quad: QuadratureSpec::default(),
            seed: 1,
        };
        let d = pipeline(&phi, &f, &spec).unwrap();
        assert_eq!(d.reports.len(), d.boxes.len());
        for (i, r) in d.reports.iter().enumerate() {
            assert_eq!(r.bx, i);
            assert_eq!(r.small + r.large.len(), d.caps.len());
            assert!(!r.large.is_empty(), "the maximizing cap is always large");
        }
        assert_eq!(d.broad + d.narrow, d.boxes.len());
        let narrow = d
            .reports
            .iter()
            .filter(|r| matches!(r.outcome.classification, Classification::Narrow { .. }))
            .count();
        assert_eq!(narrow, d.narrow);
    }
}

#[test]
fn even_dimension_threshold() {
    for n in (4..=12).step_by(2) {
        let k = optimal_k(n).unwrap();
        assert_eq!(k, n / 2 + 1);
        assert_eq!(
            exponent_threshold(n, k).unwrap(),
            Ratio::new(2 * (n as i64 + 2), n as i64)
        );
    }
}

proptest! {
    #[test]
    fn optimal_k_minimizes(n in 3usize..=40) {
        let best = exponent_threshold(n, optimal_k(n).unwrap()).unwrap();
        for k in 2..n {
            prop_assert!(best <= exponent_threshold(n, k).unwrap());
        }
    }

    #[test]
    fn bounded_counts_pass_and_growing_counts_fail(k in 2usize..=4, c in 1usize..=10) {
        let e = 2 * k as i32 - 4;
        let scales = [8usize, 16, 32];
        let within: Vec<(usize, usize)> = scales.iter().map(|&s| (s, c * s.pow(e as u32))).collect();
        let rep = narrow_count_check(&within, k, c as f64);
        prop_assert!(rep.pass);
        prop_assert!((rep.slope.unwrap() - e as f64).abs() <= 1e-9);
        // one extra power of K breaks the slope limit whatever the constant
        let faster: Vec<(usize, usize)> = scales.iter().map(|&s| (s, s.pow(e as u32 + 1))).collect();
        let rep = narrow_count_check(&faster, k, 1e12);
        prop_assert!(!rep.pass);
        prop_assert!(rep.slope.unwrap() > rep.slope_limit);
    }
}
