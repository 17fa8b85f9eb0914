//! Experiment pipelines, one per [`Kind`].

use std::time::Instant;

use cxlab::acs::{acs_graph_residual, random_acs, reduce_to_standard, standard_structure};
use cxlab::bg::{self, BgSpec, Classification, ClassifyParams, CoefficientMode};
use cxlab::bl::{bl_dimension_check_mc, bl_scaling_check, normals_wedge, surface_bl_datum};
use cxlab::extension::{decay_fit, parabolic_rescale_check, Amplitude, DomainBox};
use cxlab::kakeya::{
    induction_ratio, kakeya_integral, kakeya_sweep, sample_tube_family, ComplexLineTube, SweepSpec, TubeFamily,
};
use cxlab::linalg::{block_det_identity, det, realify, takagi, wedge};
use cxlab::rng::substream;
use cxlab::surface::{hessian_identity_check, real_hessian, real_hessian_fd, HolomorphicPolynomial, QuadraticSurface};
use cxlab::{bl, sample, ComplexMatrix, ComplexVector, LabError, C64};
use rand::Rng;
use serde_json::json;

use crate::config::{ExperimentConfig, Kind};
use crate::report::{fmt_f64, Check, RunReport, Table};

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

struct Output {
    checks: Vec<Check>,
    tables: Vec<Table>,
    results: serde_json::Value,
}

/// Runs one experiment on a pool of `config.workers` threads.
pub fn run(kind: Kind, config: &ExperimentConfig, seed_source: &str) -> cxlab::Result<RunReport> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| LabError::InvalidArgument(format!("workers: {e}")))?;
    let out = pool.install(|| match kind {
        Kind::Identities => identities(config),
        Kind::Decay => decay(config),
        Kind::Rescale => rescale(config),
        Kind::Kakeya => kakeya(config),
        Kind::Bg => bg_run(config),
        Kind::Acs => acs(config),
        Kind::Bl => bl_run(config),
    })?;
    let mut echo = config.clone();
    echo.kind = Some(kind);
    Ok(RunReport {
        schema_version: crate::report::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: kind.name().to_string(),
        seed: config.seed,
        seed_source: seed_source.to_string(),
        workers: config.workers,
        config: echo,
        pass: out.checks.iter().all(|c| c.pass),
        checks: out.checks,
        results: out.results,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        tables: out.tables,
    })
}

fn identities(config: &ExperimentConfig) -> cxlab::Result<Output> {
    let n = config.n;
    let ic = &config.identities;
    let mut table = Table::new("identities", &["suite", "instance", "size", "lhs", "rhs", "error"]);
    let mut checks = Vec::new();
    let mut record = |suite: &str, i: usize, size: usize, lhs: f64, rhs: f64, err: f64| {
        table.push(vec![
            suite.into(),
            i.to_string(),
            size.to_string(),
            fmt_f64(lhs),
            fmt_f64(rhs),
            fmt_f64(err),
        ]);
        err
    };

    let mut rng = substream(config.seed, 1);
    let mut worst = 0.0f64;
    for i in 0..ic.block_det {
        let m = 2 + i % 7;
        let b = sample::gaussian_matrix(m, m, &mut rng);
        let d = sample::gaussian_matrix(m, m, &mut rng);
        let (lhs, rhs) = block_det_identity(&b, &d)?;
        let err = (lhs - rhs).abs() / lhs.abs().max(1.0);
        worst = worst.max(record("block_det", i, m, lhs, rhs, err));
    }
    checks.push(Check::at_most("block_det", worst, 1e-10));

    let mut rng = substream(config.seed, 2);
    let mut worst = 0.0f64;
    for i in 0..ic.vmatrix {
        let phi = sample::generic_polynomial(n - 1, 3, &mut rng);
        let points: Vec<ComplexVector> = (0..n).map(|_| sample::point(n - 1, 1.0, &mut rng)).collect();
        let (lhs, rhs) = bl::vmatrix_identity_check(&phi, &points)?;
        worst = worst.max(record("vmatrix", i, n, lhs, rhs, rel_err(lhs, rhs)));
    }
    checks.push(Check::at_most("vmatrix", worst, 1e-9));

    let mut rng = substream(config.seed, 3);
    let (mut worst, mut worst_fd) = (0.0f64, 0.0f64);
    for i in 0..ic.hessian {
        let phi = sample::generic_polynomial(n - 1, 3, &mut rng);
        let z = sample::point(n - 1, 1.0, &mut rng);
        let (s, t) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (lhs, rhs) = hessian_identity_check(&phi, &z, s, t)?;
        worst = worst.max(record("hessian", i, n, lhs, rhs, rel_err(lhs, rhs)));
        let exact = real_hessian(&phi, &z, s, t)?;
        let fd = real_hessian_fd(&phi, realify(&z).as_slice(), s, t, 1e-4);
        worst_fd = worst_fd.max((exact - fd).amax() / phi_scale(&phi, s, t));
    }
    checks.push(Check::at_most("hessian", worst, 1e-8));
    checks.push(Check::at_most("hessian_fd", worst_fd, 1e-4));

    let mut rng = substream(config.seed, 4);
    let (mut worst, mut worst_sv) = (0.0f64, 0.0f64);
    for i in 0..ic.takagi {
        let m = 1 + i % 16;
        let a = sample::symmetric_complex(m, &mut rng);
        let fac = takagi(&a)?;
        let norm = a.norm();
        let recon = (fac.reconstruct() - &a).norm() / norm;
        let mut sv: Vec<f64> = a.clone().singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        let sv_err = fac.d.iter().zip(&sv).map(|(d, s)| (d - s).abs()).fold(0.0, f64::max) / norm;
        worst_sv = worst_sv.max(sv_err);
        worst = worst.max(record("takagi", i, m, norm, recon, recon));
    }
    checks.push(Check::at_most("takagi_reconstruction", worst, 1e-10));
    checks.push(Check::at_most("takagi_singular_values", worst_sv, 1e-10));

    let mut rng = substream(config.seed, 5);
    let mut worst = 0.0f64;
    for i in 0..ic.wedge {
        let vs: Vec<ComplexVector> = (0..n).map(|_| sample::unit_vector(n, &mut rng)).collect();
        let lhs = wedge(&vs)?;
        let rhs = det(&ComplexMatrix::from_columns(&vs)).norm_sqr();
        worst = worst.max(record("wedge", i, n, lhs, rhs, (lhs - rhs).abs()));
    }
    checks.push(Check::at_most("wedge", worst, 1e-10));

    Ok(Output {
        checks,
        tables: vec![table],
        results: json!({ "n": n }),
    })
}

/// Size of the second derivatives, used to make the difference check relative.
fn phi_scale(phi: &HolomorphicPolynomial, s: f64, t: f64) -> f64 {
    let c: f64 = phi.terms().map(|(_, c)| c.norm()).sum();
    (c * s.hypot(t)).max(1.0)
}

fn decay(config: &ExperimentConfig) -> cxlab::Result<Output> {
    let n = config.n;
    let dc = &config.decay;
    let phi = HolomorphicPolynomial::sum_of_squares(n - 1);
    let domain = DomainBox::cube(vec![0.0; 2 * n - 2], dc.side)?;
    let f = Amplitude::gaussian(vec![0.0; 2 * n - 2], dc.sigma);
    let fit = decay_fit(&phi, &domain, &f, dc.ray, &dc.t, &config.quadrature.spec())?;
    let mut table = Table::new("decay", &["t", "|E|", "log t", "log|E|"]);
    for (t, m) in fit.t_used.iter().zip(&fit.magnitudes) {
        table.push(vec![fmt_f64(*t), fmt_f64(*m), fmt_f64(t.ln()), fmt_f64(m.ln())]);
    }
    table.footer = Some(json!({ "exponent": fit.exponent, "residual": fit.residual }));
    let target = -(n as f64 - 1.0);
    let tol = 0.1 * n as f64;
    Ok(Output {
        checks: vec![Check::at_most("decay_exponent", (fit.exponent - target).abs(), tol)
            .with_detail(format!("exponent {:.4} against {target}", fit.exponent))],
        tables: vec![table],
        results: serde_json::to_value(&fit).unwrap_or_default(),
    })
}

/// Random rescaling instance: surface, cap `Q(a, r)`, amplitude and frequency.
pub fn rescale_instance<R: Rng>(
    n: usize,
    w_max: f64,
    rng: &mut R,
) -> cxlab::Result<(QuadraticSurface, Amplitude, Vec<f64>, f64, Vec<f64>)> {
    let m = n - 1;
    let surface = loop {
        let mut s = sample::symmetric_complex(m, rng) * C64::new(0.3, 0.0);
        for j in 0..m {
            s[(j, j)] += C64::new(0.5, 0.0);
        }
        if let Ok(q) = QuadraticSurface::new(s) {
            break q;
        }
    };
    let limit = 1.0 / ((2.0 * n as f64).sqrt() * (1.0 + 2.0 * surface.norm()));
    let r = limit * rng.random_range(0.3..0.95);
    let h = (1.0 - r) / 2.0;
    let a: Vec<f64> = (0..2 * m).map(|_| rng.random_range(-h..h)).collect();
    let center: Vec<f64> = a.iter().map(|x| x + rng.random_range(-r..r) / 2.0).collect();
    let f = Amplitude::gaussian(center, rng.random_range(0.2..0.6));
    let w: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-w_max..w_max)).collect();
    Ok((surface, f, a, r, w))
}

fn rescale(config: &ExperimentConfig) -> cxlab::Result<Output> {
    let n = config.n;
    let mut rng = substream(config.seed, 6);
    let quad = config.quadrature.spec();
    let mut table = Table::new("rescale", &["instance", "r", "lhs", "rhs", "error"]);
    let mut worst = 0.0f64;
    for i in 0..config.rescale.instances {
        let (surface, f, a, r, w) = rescale_instance(n, config.rescale.w_max, &mut rng)?;
        let (lhs, rhs) = parabolic_rescale_check(&surface, &f, &a, r, &w, &quad)?;
        let err = rel_err(lhs, rhs);
        worst = worst.max(err);
        table.push(vec![
            i.to_string(),
            fmt_f64(r),
            fmt_f64(lhs),
            fmt_f64(rhs),
            fmt_f64(err),
        ]);
    }
    Ok(Output {
        checks: vec![Check::at_most("rescale", worst, 1e-6)],
        tables: vec![table],
        results: json!({ "worst_relative_error": worst }),
    })
}

pub fn basis_vector(n: usize, j: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |i, _| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
}

/// `4 · vol(B^{2n−2}(δ))`: a tube along a coordinate complex line through
/// the origin, clipped to `[−1, 1]^{2n}`.
pub fn coordinate_tube_volume(n: usize, delta: f64) -> f64 {
    let d = 2 * n - 2;
    let ball =
        std::f64::consts::PI.powi(d as i32 / 2) / (1..=d / 2).map(|i| i as f64).product::<f64>() * delta.powi(d as i32);
    4.0 * ball
}

fn kakeya(config: &ExperimentConfig) -> cxlab::Result<Output> {
    let (n, k) = (config.n, config.k);
    let kc = &config.kakeya;
    let bases: Vec<ComplexVector> = (0..k).map(|j| basis_vector(n, j)).collect();
    let sweep = kakeya_sweep(&SweepSpec {
        bases: bases.clone(),
        deltas: kc.deltas.clone(),
        family_size: kc.family_size,
        nu: kc.nu,
        floor: kc.floor,
        samples: kc.samples,
        seed: config.seed,
    })?;
    let mut table = Table::new("kakeya", &["delta", "constant", "stderr", "samples", "estimate"]);
    for r in &sweep.rows {
        table.push(vec![
            fmt_f64(r.delta),
            fmt_f64(r.constant),
            fmt_f64(r.stderr),
            r.samples.to_string(),
            fmt_f64(r.estimate),
        ]);
    }
    let mut checks = Vec::new();
    if let Some(eps) = sweep.epsilon {
        checks.push(Check::at_most("sweep_epsilon", eps, kc.epsilon_max));
    }

    // one identical tube per family
    let delta = 0.125;
    let tube = ComplexLineTube::new(basis_vector(n, 0), vec![0.0; 2 * n], delta)?;
    let single = TubeFamily {
        tubes: vec![tube],
        base: basis_vector(n, 0),
        nu: 0.0,
    };
    let mc = kakeya_integral(&vec![single; k], kc.samples, config.seed)?;
    let exact = coordinate_tube_volume(n, delta);
    checks.push(
        Check::at_most("coincident_volume", (mc.estimate - exact).abs(), 3.0 * mc.stderr)
            .with_detail(format!("estimate {:.6} exact {exact:.6}", mc.estimate)),
    );

    let families: Vec<TubeFamily> = bases
        .iter()
        .enumerate()
        .map(|(j, b)| {
            sample_tube_family(
                b,
                kc.induction_nu,
                kc.family_size,
                kc.induction_delta,
                config.seed.wrapping_add(100 + j as u64),
            )
        })
        .collect::<cxlab::Result<_>>()?;
    let ind = induction_ratio(kc.induction_delta, kc.induction_nu, &families, kc.samples, config.seed)?;
    checks.push(Check::at_most("induction_ratio", ind.ratio(), kc.induction_bound));

    Ok(Output {
        checks,
        tables: vec![table],
        results: json!({
            "epsilon": sweep.epsilon,
            "min_tuple_wedge": sweep.min_tuple_wedge,
            "coincident": { "estimate": mc.estimate, "stderr": mc.stderr, "exact": exact },
            "induction": ind,
        }),
    })
}

/// Random Gaussian amplitude on `Q(0,1) ⊂ ℝ^{dim}`.
pub fn random_gaussian<R: Rng>(dim: usize, rng: &mut R) -> Amplitude {
    let center = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
    Amplitude::gaussian(center, rng.random_range(0.2..0.6))
}

/// Largest comparability ratio over random amplitudes and `(cap, box)` pairs
/// at scale `K`, with `R = 2K`.
pub fn comparability_sweep(
    phi: &HolomorphicPolynomial,
    k_scale: usize,
    amplitudes: usize,
    pairs: usize,
    quad: &cxlab::extension::QuadratureSpec,
    seed: u64,
) -> cxlab::Result<(f64, Vec<(usize, usize, usize, f64)>)> {
    let n = phi.ambient_dim();
    let (caps, boxes) = bg::build_grids(n, k_scale, 2 * k_scale)?;
    let mut rng = substream(seed, 7);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..amplitudes {
        let f = random_gaussian(2 * n - 2, &mut rng);
        for (q, b) in bg::sample_pairs(&caps, &boxes, pairs, seed.wrapping_add(i as u64)) {
            let ratio = bg::comparability_ratio(phi, &f, &caps, q, &boxes, b, 16, quad)?;
            worst = worst.max(ratio);
            rows.push((i, q, b, ratio));
        }
    }
    Ok((worst, rows))
}

/// Amplitudes for the pipeline: a spread Gaussian, which makes every box
/// broad, and one concentrated inside a single cap at every dyadic `K ≤ 32`,
/// which makes boxes narrow.
pub fn bg_amplitudes(n: usize) -> Vec<(&'static str, Amplitude)> {
    let d = 2 * n - 2;
    vec![
        ("spread", Amplitude::gaussian(vec![0.0; d], 0.3)),
        ("concentrated", Amplitude::gaussian(vec![1.0 / 64.0; d], 0.003)),
    ]
}

fn bg_run(config: &ExperimentConfig) -> cxlab::Result<Output> {
    let n = config.n;
    let bc = &config.bg;
    let phi = HolomorphicPolynomial::sum_of_squares(n - 1);
    let mode = if bc.mode == "definition" {
        CoefficientMode::definition()
    } else {
        CoefficientMode::Proxy
    };
    let params = ClassifyParams {
        k: config.k,
        c: bc.c,
        narrow_constant: bc.narrow_constant,
    };
    let mut table = Table::new(
        "bg",
        &[
            "amplitude",
            "K",
            "box",
            "small",
            "large",
            "class",
            "measure",
            "ambiguous",
        ],
    );
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for &k_scale in &bc.scales {
        let spec = BgSpec {
            n,
            k_scale,
            r: bc.r_over_k * k_scale,
            params,
            mode,
            quad: config.quadrature.spec(),
            seed: config.seed,
        };
        let mut worst = 0;
        for (label, f) in bg_amplitudes(n) {
            let dec = bg::pipeline(&phi, &f, &spec)?;
            checks.push(Check::flag(
                format!("classified_{label}_K{k_scale}"),
                dec.reports.len() == dec.boxes.len(),
            ));
            for r in &dec.reports {
                let (class, measure) = match &r.outcome.classification {
                    Classification::Broad { wedge, .. } => ("broad", *wedge),
                    Classification::Narrow { max_distance, .. } => ("narrow", *max_distance),
                };
                table.push(vec![
                    label.into(),
                    k_scale.to_string(),
                    r.bx.to_string(),
                    r.small.to_string(),
                    r.large.len().to_string(),
                    class.into(),
                    fmt_f64(measure),
                    r.outcome.ambiguous.to_string(),
                ]);
            }
            worst = worst.max(dec.max_large_narrow);
            summary.push(json!({
                "amplitude": label,
                "K": k_scale,
                "boxes": dec.boxes.len(),
                "broad": dec.broad,
                "narrow": dec.narrow,
                "ambiguous": dec.ambiguous,
                "max_large_narrow": dec.max_large_narrow,
                "tail_fraction": dec.tail_fraction,
            }));
        }
        runs.push((k_scale, worst));
    }
    let mut sweep = Table::new("bg_sweep", &["K", "max_large_narrow"]);
    for (k_scale, worst) in &runs {
        sweep.push(vec![k_scale.to_string(), worst.to_string()]);
    }
    let count = bg::narrow_count_check(&runs, config.k, bc.count_bound);
    checks.push(Check::at_most("narrow_count", count.max_count as f64, count.bound));
    if let Some(slope) = count.slope {
        checks.push(Check::at_most("narrow_count_slope", slope, count.slope_limit));
    }
    let thresholds: Vec<serde_json::Value> = (3..=12)
        .map(|dim| {
            let k = bg::optimal_k(dim)?;
            let t = bg::exponent_threshold(dim, k)?;
            Ok(json!({ "n": dim, "k": k, "threshold": t.to_string() }))
        })
        .collect::<cxlab::Result<_>>()?;
    let mut tables = vec![table, sweep];
    let mut comparability = serde_json::Value::Null;
    if bc.amplitudes > 0 {
        let k0 = bc.scales[0];
        let (worst, rows) = comparability_sweep(
            &phi,
            k0,
            bc.amplitudes,
            bc.pairs_per_amplitude,
            &config.quadrature.spec(),
            config.seed,
        )?;
        let mut t = Table::new("comparability", &["amplitude", "cap", "box", "ratio"]);
        for (i, q, b, r) in rows {
            t.push(vec![i.to_string(), q.to_string(), b.to_string(), fmt_f64(r)]);
        }
        tables.push(t);
        checks.push(Check::flag("comparability_finite", worst.is_finite() && worst > 0.0));
        comparability = json!({ "K": k0, "max_ratio": worst, "tail_fraction": bg::mollifier_tables(n).tail_fraction });
    }
    Ok(Output {
        checks,
        tables,
        results: json!({
            "runs": summary,
            "narrow_count": count,
            "comparability": comparability,
            "thresholds": thresholds,
        }),
    })
}

fn acs(config: &ExperimentConfig) -> cxlab::Result<Output> {
    let ac = &config.acs;
    let max_m = ac.size / 2;
    let mut table = Table::new("acs", &["trial", "size", "residual", "det"]);
    let mut worst = 0.0f64;
    for t in 0..ac.trials {
        let m = 1 + t % max_m;
        let j = random_acs(m, config.seed.wrapping_add(t as u64))?;
        let red = reduce_to_standard(&j)?;
        worst = worst.max(red.residual);
        table.push(vec![
            t.to_string(),
            (2 * m).to_string(),
            fmt_f64(red.residual),
            fmt_f64(red.det),
        ]);
    }
    let mut rng = substream(config.seed, 8);
    let mut worst_cr = 0.0f64;
    for m in 1..=max_m.min(4) {
        let phi = sample::generic_polynomial(m, 3, &mut rng);
        let samples: Vec<Vec<f64>> = (0..10)
            .map(|_| realify(&sample::point(m, 1.0, &mut rng)).as_slice().to_vec())
            .collect();
        worst_cr = worst_cr.max(acs_graph_residual(&phi, &standard_structure(m), &samples, 1e-4)?);
    }
    Ok(Output {
        checks: vec![
            Check::at_most("reduction_residual", worst, 1e-9),
            Check::at_most("cauchy_riemann_residual", worst_cr, 1e-6),
        ],
        tables: vec![table],
        results: json!({ "max_residual": worst, "max_cauchy_riemann": worst_cr }),
    })
}

/// Points in `Q(0,1)` whose unit normals have wedge above `floor`.
pub fn transversal_points<R: Rng>(
    phi: &HolomorphicPolynomial,
    floor: f64,
    rng: &mut R,
) -> cxlab::Result<Vec<ComplexVector>> {
    let n = phi.ambient_dim();
    loop {
        let pts: Vec<ComplexVector> = (0..n).map(|_| sample::point(n - 1, 1.0, rng)).collect();
        if normals_wedge(phi, &pts)? > floor {
            return Ok(pts);
        }
    }
}

fn bl_run(config: &ExperimentConfig) -> cxlab::Result<Output> {
    let n = config.n;
    let phi = HolomorphicPolynomial::sum_of_squares(n - 1);
    let mut rng = substream(config.seed, 9);
    let points = transversal_points(&phi, 1e-2, &mut rng)?;
    let datum = surface_bl_datum(&phi, &points)?;
    let mut checks = vec![Check::flag("scaling", bl_scaling_check(&datum))];
    let mut table = Table::new("bl", &["datum", "seed", "trials", "pass", "violation_dimension"]);
    for s in 0..config.bl.seeds as u64 {
        let seed = config.seed.wrapping_add(s);
        let rep = bl_dimension_check_mc(&datum, config.bl.trials, seed)?;
        table.push(vec![
            "transversal".into(),
            seed.to_string(),
            rep.trials.to_string(),
            rep.pass.to_string(),
            rep.violation
                .as_ref()
                .map_or(String::new(), |v| v.dimension.to_string()),
        ]);
        checks.push(Check::flag(format!("dimension_seed{seed}"), rep.pass));
    }
    let coincident = vec![points[0].clone(); n];
    let bad = surface_bl_datum(&phi, &coincident)?;
    let rep = bl_dimension_check_mc(&bad, config.bl.trials, config.seed)?;
    let kernel_hit = rep.violation.as_ref().is_some_and(|v| v.source.starts_with("ker"));
    table.push(vec![
        "coincident".into(),
        config.seed.to_string(),
        rep.trials.to_string(),
        rep.pass.to_string(),
        rep.violation
            .as_ref()
            .map_or(String::new(), |v| v.dimension.to_string()),
    ]);
    checks.push(Check::flag("coincident_rejected", !rep.pass && kernel_hit));
    Ok(Output {
        checks,
        tables: vec![table],
        results: json!({ "coincident": rep }),
    })
}
