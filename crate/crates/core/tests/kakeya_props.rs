use cxlab::kakeya::{
    induction_ratio, kakeya_integral, kakeya_sweep, sample_tube_family, tube_contains, ComplexLineTube, SweepSpec,
    TubeFamily,
};
use cxlab::linalg::{complexify, realify};
use cxlab::rng::substream;
use cxlab::{ComplexVector, C64};
use proptest::prelude::*;
use rand::Rng;

fn e(n: usize, j: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(n);
    v[j] = C64::new(1.0, 0.0);
    v
}

fn single(n: usize, j: usize, delta: f64) -> TubeFamily {
    TubeFamily {
        tubes: vec![ComplexLineTube::new(e(n, j), vec![0.0; 2 * n], delta).unwrap()],
        base: e(n, j),
        nu: 0.0,
    }
}

/// Permutes complex coordinates and multiplies each by a power of `i`;
/// these maps carry `[−1, 1]^{2n}` onto itself.
fn rigid(perm: &[usize], quarter_turns: &[u32], v: &ComplexVector) -> ComplexVector {
    ComplexVector::from_fn(v.len(), |j, _| v[perm[j]] * C64::i().powu(quarter_turns[j]))
}

fn rotate_family(fam: &TubeFamily, perm: &[usize], turns: &[u32]) -> TubeFamily {
    let tubes = fam
        .tubes
        .iter()
        .map(|t| {
            let anchor = realify(&rigid(perm, turns, &complexify(t.anchor())));
            ComplexLineTube::new(
                rigid(perm, turns, t.direction()),
                anchor.as_slice().to_vec(),
                t.radius(),
            )
            .unwrap()
        })
        .collect();
    TubeFamily {
        tubes,
        base: rigid(perm, turns, &fam.base),
        nu: fam.nu,
    }
}

fn families(n: usize, size: usize, delta: f64, seed: u64) -> Vec<TubeFamily> {
    (0..2)
        .map(|j| sample_tube_family(&e(n, j), 0.05, size, delta, seed + j as u64).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn adding_a_tube_never_lowers_the_estimate(seed in any::<u64>(), which in 0usize..2) {
        let fams = families(2, 8, 0.25, seed);
        let mut more = fams.clone();
        let extra = sample_tube_family(&e(2, which), 0.05, 1, 0.25, seed ^ 0x5a).unwrap();
        more[which].tubes.extend(extra.tubes);
        // same seed, same sample points: the integrand only grows
        let a = kakeya_integral(&fams, 20_000, seed).unwrap();
        let b = kakeya_integral(&more, 20_000, seed).unwrap();
        prop_assert!(b.estimate >= a.estimate);
    }

    #[test]
    fn rigid_maps_of_the_box_preserve_the_estimate(seed in any::<u64>(), swap in any::<bool>(), t0 in 0u32..4, t1 in 0u32..4) {
        let perm = if swap { [1, 0] } else { [0, 1] };
        let turns = [t0, t1];
        let fams = families(2, 6, 0.25, seed);
        let moved: Vec<TubeFamily> = fams.iter().map(|f| rotate_family(f, &perm, &turns)).collect();
        // pointwise: the moved tube contains the moved point
        let mut rng = substream(seed, 1);
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = realify(&rigid(&perm, &turns, &complexify(&x)));
            for (f, g) in fams.iter().zip(&moved) {
                for (s, t) in f.tubes.iter().zip(&g.tubes) {
                    prop_assert!((s.distance_sq(&x) - t.distance_sq(y.as_slice())).abs() <= 1e-12);
                }
            }
        }
        let a = kakeya_integral(&fams, 40_000, seed).unwrap();
        let b = kakeya_integral(&moved, 40_000, seed.wrapping_add(1)).unwrap();
        prop_assert!((a.estimate - b.estimate).abs() <= 3.0 * a.stderr.hypot(b.stderr) + 1e-12);
    }

    #[test]
    fn coincident_tubes_give_the_cylinder_volume(seed in any::<u64>(), delta in 0.1f64..0.5) {
        let mc = kakeya_integral(&[single(2, 0, delta), single(2, 0, delta)], 100_000, seed).unwrap();
        // |z₂| ≤ δ times the square |z₁| ∈ [−1, 1]²
        let exact = 4.0 * std::f64::consts::PI * delta * delta;
        prop_assert!((mc.estimate - exact).abs() <= 3.0 * mc.stderr, "{} vs {}", mc.estimate, exact);
    }
}

#[test]
fn orthogonal_tubes_meet_in_a_bidisc() {
    let delta = 0.25;
    let fams = [single(2, 0, delta), single(2, 1, delta)];
    let exact = (std::f64::consts::PI * delta * delta).powi(2);
    let mc = kakeya_integral(&fams, 400_000, 3).unwrap();
    assert!(
        (mc.estimate - exact).abs() <= 3.0 * mc.stderr,
        "{} vs {exact}",
        mc.estimate
    );

    // midpoint grid over [−δ, δ]⁴, which holds the whole intersection
    let g = 48;
    let h = 2.0 * delta / g as f64;
    let c = |i: usize| -delta + (i as f64 + 0.5) * h;
    let mut hits = 0usize;
    for a in 0..g {
        for b in 0..g {
            for p in 0..g {
                for q in 0..g {
                    let x = [c(a), c(b), c(p), c(q)];
                    if tube_contains(&fams[0].tubes[0], &x) && tube_contains(&fams[1].tubes[0], &x) {
                        hits += 1;
                    }
                }
            }
        }
    }
    let grid = hits as f64 * h.powi(4);
    assert!((grid - exact).abs() <= 0.02 * exact, "{grid} vs {exact}");
}

#[test]
fn transversal_sweep_grows_slowly() {
    for seed in [1, 2] {
        let spec = SweepSpec {
            bases: vec![e(2, 0), e(2, 1)],
            deltas: vec![0.25, 0.125, 0.0625],
            family_size: 20,
            nu: 0.05,
            floor: 0.5,
            samples: 400_000,
            seed,
        };
        let eps = kakeya_sweep(&spec).unwrap().epsilon.unwrap();
        assert!(eps <= 0.3, "seed {seed}: {eps}");
    }
}

#[test]
fn parallel_families_have_a_uniform_constant() {
    let spec = SweepSpec {
        bases: vec![e(2, 0), e(2, 1)],
        deltas: vec![0.25, 0.125, 0.0625],
        family_size: 20,
        nu: 0.0,
        floor: 0.5,
        samples: 400_000,
        seed: 4,
    };
    let rows = kakeya_sweep(&spec).unwrap().rows;
    let cs: Vec<f64> = rows.iter().map(|r| r.constant).collect();
    let (lo, hi) = cs.iter().fold((f64::MAX, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(lo > 0.0 && hi <= 4.0 * lo, "{cs:?}");
}

#[test]
fn induction_at_unit_zoom_is_exact() {
    let fams = families(2, 5, 0.5, 8);
    let r = induction_ratio(0.5, 1.0, &fams, 20_000, 8).unwrap();
    assert_eq!(r.lhs, r.rhs);
    let empty: Vec<TubeFamily> = fams
        .iter()
        .map(|f| TubeFamily {
            tubes: vec![],
            ..f.clone()
        })
        .collect();
    let z = induction_ratio(0.5, 0.75, &empty, 10, 8).unwrap();
    assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
}
