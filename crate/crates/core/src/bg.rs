//! Desk-scale cap/box decomposition: cap coefficients, the small/large split,
//! broad/narrow classification and the exponent arithmetic.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::extension::{extend, gauss_legendre, Amplitude, DomainBox, QuadratureSpec, POINT_BUDGET};
use crate::linalg::wedge;
use crate::rng::{ordered_blocks, substream};
use crate::surface::{normal, HolomorphicPolynomial};
use crate::{ComplexMatrix, ComplexVector, LabError, Result, C64};

pub const MAX_CAPS: usize = 10_000;
/// Radius, in units of `K`, at which the `s`-integral is truncated.
pub const S_TRUNCATION: f64 = 8.0;
pub const EXHAUSTIVE_LIMIT: usize = 24;
pub const RANDOM_TUPLES: usize = 10_000;
pub const DEFAULT_C: f64 = 1e-2;
pub const DEFAULT_NARROW_CONSTANT: f64 = 4.0;

/// Caps of side `1/K` tiling `Q(0,1) ⊂ ℝ^{2n−2}`.
#[derive(Debug, Clone, Serialize)]
pub struct CapGrid {
    pub n: usize,
    pub k: usize,
}

impl CapGrid {
    pub fn dim(&self) -> usize {
        2 * self.n - 2
    }

    pub fn len(&self) -> usize {
        self.k.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn side(&self) -> f64 {
        1.0 / self.k as f64
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        grid_center(idx, self.dim(), self.k, self.side(), 1.0)
    }

    pub fn cap_box(&self, idx: usize) -> DomainBox {
        DomainBox::cube(self.center(idx), self.side()).expect("cap box")
    }

    pub fn center_complex(&self, idx: usize) -> ComplexVector {
        let c = self.center(idx);
        ComplexVector::from_iterator(self.n - 1, c.chunks_exact(2).map(|p| C64::new(p[0], p[1])))
    }
}

/// Boxes of side `K` tiling `Q(0,R) ⊂ ℝ^{2n}`, enumerated lazily.
#[derive(Debug, Clone, Serialize)]
pub struct BoxGrid {
    pub n: usize,
    pub k: usize,
    pub r: usize,
}

impl BoxGrid {
    pub fn per_axis(&self) -> usize {
        self.r / self.k
    }

    pub fn len(&self) -> usize {
        self.per_axis().pow(2 * self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        grid_center(idx, 2 * self.n, self.per_axis(), self.k as f64, self.r as f64)
    }

    /// `3^{2n}` points of the box: the centers of its `3 × ⋯ × 3` subdivision.
    pub fn samples(&self, idx: usize) -> Vec<Vec<f64>> {
        let c = self.center(idx);
        let d = c.len();
        let step = self.k as f64 / 3.0;
        (0..3usize.pow(d as u32))
            .map(|mut t| {
                c.iter()
                    .map(|&ci| {
                        let o = (t % 3) as f64 - 1.0;
                        t /= 3;
                        ci + o * step
                    })
                    .collect()
            })
            .collect()
    }
}

fn grid_center(mut idx: usize, dim: usize, per_axis: usize, side: f64, extent: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let i = idx % per_axis;
            idx /= per_axis;
            -extent / 2.0 + (i as f64 + 0.5) * side
        })
        .collect()
}

pub fn build_grids(n: usize, k: usize, r: usize) -> Result<(CapGrid, BoxGrid)> {
    if n < 2 {
        return Err(LabError::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if k < 4 {
        return Err(LabError::InvalidArgument(format!("K must be at least 4, got {k}")));
    }
    if r < k || !r.is_multiple_of(k) {
        return Err(LabError::InvalidArgument(format!(
            "R must be a positive multiple of K = {k}, got {r}"
        )));
    }
    let caps = (k as f64).powi(2 * n as i32 - 2);
    if caps > MAX_CAPS as f64 {
        return Err(LabError::BudgetExceeded {
            what: "cap count K^(2n-2)".into(),
            requested: caps,
            limit: MAX_CAPS as f64,
        });
    }
    Ok((CapGrid { n, k }, BoxGrid { n, k, r }))
}

/// `η̂`: radial, `1` on `|ξ| ≤ 1`, `0` on `|ξ| ≥ 2`, with an `exp(−1/x)`
/// transition.
pub fn eta_hat(rho: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if rho <= 1.0 {
        1.0
    } else if rho >= 2.0 {
        0.0
    } else {
        let a = f(2.0 - rho);
        a / (a + f(rho - 1.0))
    }
}

/// Bessel `J_m(x)` for integer `m` from `(1/π) ∫_0^π cos(mτ − x sin τ) dτ`.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (t, w) = NODES.get_or_init(|| gauss_legendre(96));
    let half = std::f64::consts::PI / 2.0;
    t.iter()
        .zip(w)
        .map(|(ti, wi)| {
            let tau = half * (ti + 1.0);
            wi * (m as f64 * tau - x * tau.sin()).cos()
        })
        .sum::<f64>()
        * half
        / std::f64::consts::PI
}

/// Radial tables of `η` and `ζ` in `ℝ^{2n}`.
#[derive(Debug)]
pub struct MollifierTables {
    pub n: usize,
    pub step: f64,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Share of `∫ ζ` beyond the truncation radius.
    pub tail_fraction: f64,
}

const TABLE_STEP: f64 = 0.01;
const TABLE_EXTENT: f64 = 2.0 * S_TRUNCATION;

impl MollifierTables {
    fn build(n: usize) -> Self {
        let d = 2 * n;
        let nu = (d / 2 - 1) as u32;
        let sqrt_d = (d as f64).sqrt();
        let r_max = TABLE_EXTENT + sqrt_d + 1.0;
        let len = (r_max / TABLE_STEP).ceil() as usize + 1;
        // radial Fourier inversion over ρ ∈ [0, 2], split at the bump edge
        let (gx, gw) = gauss_legendre(160);
        let mut rho = Vec::new();
        let mut wts = Vec::new();
        for (lo, hi) in [(0.0, 1.0), (1.0, 2.0)] {
            for (x, w) in gx.iter().zip(&gw) {
                rho.push(lo + (hi - lo) * (x + 1.0) / 2.0);
                wts.push(w * (hi - lo) / 2.0);
            }
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let gamma_nu1: f64 = (1..=nu).map(|i| i as f64).product();
        let eta: Vec<f64> = ordered_blocks(len, |i| {
            let r = i as f64 * TABLE_STEP;
            let s: f64 = rho
                .iter()
                .zip(&wts)
                .map(|(&p, &w)| {
                    // r^{-ν} J_ν(rρ), with its limit at r = 0
                    let kernel = if r == 0.0 {
                        (p / 2.0).powi(nu as i32) / gamma_nu1
                    } else {
                        bessel_j(nu, r * p) / r.powi(nu as i32)
                    };
                    w * eta_hat(p) * kernel * p.powi(nu as i32 + 1)
                })
                .sum();
            s / two_pi.powf(d as f64 / 2.0)
        });
        let reach = (sqrt_d / TABLE_STEP).ceil() as usize;
        let zeta: Vec<f64> = (0..len)
            .map(|i| {
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(len - 1);
                eta[lo..=hi]
                    .iter()
                    .map(|e| e.abs())
                    .fold(0.0, f64::max)
                    .powf(1.0 / n as f64)
            })
            .collect();
        let shell = |r: f64| r.powi(d as i32 - 1);
        let cut = (S_TRUNCATION / TABLE_STEP) as usize;
        let end = (TABLE_EXTENT / TABLE_STEP) as usize;
        let inner: f64 = (0..cut).map(|i| zeta[i] * shell(i as f64 * TABLE_STEP)).sum();
        let outer: f64 = (cut..end).map(|i| zeta[i] * shell(i as f64 * TABLE_STEP)).sum();
        Self {
            n,
            step: TABLE_STEP,
            eta,
            zeta,
            tail_fraction: outer / (inner + outer),
        }
    }

    fn lookup(table: &[f64], step: f64, r: f64) -> f64 {
        let u = r / step;
        let i = u.floor() as usize;
        if i + 1 >= table.len() {
            return *table.last().unwrap_or(&0.0);
        }
        let t = u - i as f64;
        table[i] * (1.0 - t) + table[i + 1] * t
    }

    pub fn eta_at(&self, r: f64) -> f64 {
        Self::lookup(&self.eta, self.step, r)
    }

    pub fn zeta_at(&self, r: f64) -> f64 {
        Self::lookup(&self.zeta, self.step, r)
    }
}

/// Tables for `ℝ^{2n}`, built once per process.
pub fn mollifier_tables(n: usize) -> Arc<MollifierTables> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<MollifierTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("table cache").get(&n) {
        return t.clone();
    }
    let built = Arc::new(MollifierTables::build(n));
    cache.lock().expect("table cache").entry(n).or_insert(built).clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoefficientMode {
    /// The defining mollified integral.
    Definition { grid_per_axis: usize },
    /// `max |E f_q|` over the `3^{2n}` box samples.
    Proxy,
}

impl CoefficientMode {
    pub fn definition() -> Self {
        CoefficientMode::Definition { grid_per_axis: 16 }
    }
}

/// `|E f_q(w)|` for the amplitude restricted to cap `q`.
fn cap_extension(
    phi: &HolomorphicPolynomial,
    f: &Amplitude,
    cap: &DomainBox,
    w: &[f64],
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(extend(phi, cap, f, w, quad)?.norm())
}

/// `C_q^Q`. In definition mode, with `s = K u`,
/// `C = (∫_{|u| ≤ 8} |E f_q(w_Q − K u)|^{1/n} ζ(u) du)^n` on a midpoint grid.
pub fn cap_coefficient(
    phi: &HolomorphicPolynomial,
    f: &Amplitude,
    caps: &CapGrid,
    cap: usize,
    boxes: &BoxGrid,
    bx: usize,
    mode: CoefficientMode,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let cap_box = caps.cap_box(cap);
    match mode {
        CoefficientMode::Proxy => {
            let mut best = 0.0f64;
            for w in boxes.samples(bx) {
                best = best.max(cap_extension(phi, f, &cap_box, &w, quad)?);
            }
            Ok(best)
        }
        CoefficientMode::Definition { grid_per_axis } => {
            let n = caps.n;
            let d = 2 * n;
            let m = grid_per_axis.max(2);
            let total = (m as f64).powi(d as i32);
            let per_eval = (16.0f64).powi(d as i32 - 2);
            if total * per_eval > POINT_BUDGET {
                return Err(LabError::BudgetExceeded {
                    what: "definition-mode cap coefficient (use proxy mode)".into(),
                    requested: total * per_eval,
                    limit: POINT_BUDGET,
                });
            }
            let tables = mollifier_tables(n);
            let wq = boxes.center(bx);
            let kf = caps.k as f64;
            let h = 2.0 * S_TRUNCATION / m as f64;
            let cell = h.powi(d as i32);
            let mut acc = 0.0;
            let mut u = vec![0.0; d];
            let mut w = vec![0.0; d];
            for flat in 0..m.pow(d as u32) {
                let mut t = flat;
                for ui in u.iter_mut() {
                    *ui = -S_TRUNCATION + (t % m) as f64 * h + h / 2.0;
                    t /= m;
                }
                let r = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                if r > S_TRUNCATION {
                    continue;
                }
                for k in 0..d {
                    w[k] = wq[k] - kf * u[k];
                }
                let e = cap_extension(phi, f, &cap_box, &w, quad)?;
                acc += e.powf(1.0 / n as f64) * tables.zeta_at(r) * cell;
            }
            Ok(acc.powi(n as i32))
        }
    }
}

/// `(Q_s, Q_l)`: caps below `K^{2−2n} · max` are small, ties are large.
pub fn split_caps(coefficients: &[f64], k: usize, n: usize) -> (Vec<usize>, Vec<usize>) {
    let max = coefficients.iter().cloned().fold(0.0, f64::max);
    let threshold = (k as f64).powi(2 - 2 * n as i32) * max;
    let (small, large): (Vec<usize>, Vec<usize>) = (0..coefficients.len()).partition(|&i| coefficients[i] < threshold);
    (small, large)
}

#[derive(Debug, Clone, Serialize)]
pub enum Classification {
    Broad {
        witnesses: Vec<usize>,
        wedge: f64,
    },
    Narrow {
        /// Orthonormal basis of the fitted `(k−1)`-dimensional complex
        /// subspace, as `(re, im)` pairs per entry.
        basis: Vec<Vec<(f64, f64)>>,
        max_distance: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyOutcome {
    pub classification: Classification,
    pub search: &'static str,
    /// Narrow, but with `max_distance > narrow_constant / K`.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassifyParams {
    pub k: usize,
    pub c: f64,
    pub narrow_constant: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self {
            k: 2,
            c: DEFAULT_C,
            narrow_constant: DEFAULT_NARROW_CONSTANT,
        }
    }
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            go(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Searches the large caps for `k` unit normals with wedge above `c / K^{2k}`;
/// otherwise fits a `(k−1)`-dimensional complex subspace to all of them.
pub fn classify(
    phi: &HolomorphicPolynomial,
    centers: &[ComplexVector],
    params: &ClassifyParams,
    big_k: usize,
    seed: u64,
) -> Result<ClassifyOutcome> {
    let n = phi.ambient_dim();
    let k = params.k;
    if k < 2 || k > n {
        return Err(LabError::InvalidArgument(format!("need 2 ≤ k ≤ n = {n}, got k = {k}")));
    }
    let normals: Vec<ComplexVector> = centers
        .iter()
        .map(|a| normal(phi, a).map(|nv| nv.unit))
        .collect::<Result<_>>()?;
    let threshold = params.c / (big_k as f64).powi(2 * k as i32);
    let m = normals.len();
    let wedge_of =
        |idx: &[usize]| -> Result<f64> { wedge(&idx.iter().map(|&i| normals[i].clone()).collect::<Vec<_>>()) };

    let mut search = "none";
    if m >= k {
        if m <= EXHAUSTIVE_LIMIT {
            search = "exhaustive";
            for tuple in combinations(m, k) {
                let w = wedge_of(&tuple)?;
                if w > threshold {
                    return Ok(broad(tuple, w, search));
                }
            }
        } else {
            search = "greedy+random";
            // greedy: grow from each of a few starting caps
            for start in 0..m.min(k + 2) {
                let mut chosen = vec![start];
                while chosen.len() < k {
                    let mut best = (f64::NEG_INFINITY, 0usize);
                    for cand in 0..m {
                        if chosen.contains(&cand) {
                            continue;
                        }
                        let mut t = chosen.clone();
                        t.push(cand);
                        let w = wedge_of(&t)?;
                        if w > best.0 {
                            best = (w, cand);
                        }
                    }
                    chosen.push(best.1);
                }
                let w = wedge_of(&chosen)?;
                if w > threshold {
                    return Ok(broad(chosen, w, search));
                }
            }
            let mut rng = substream(seed, 0);
            for _ in 0..RANDOM_TUPLES {
                let tuple: Vec<usize> = sample(&mut rng, m, k).into_vec();
                let w = wedge_of(&tuple)?;
                if w > threshold {
                    return Ok(broad(tuple, w, search));
                }
            }
        }
    }
    let (basis, max_distance) = fit_subspace(&normals, n, k - 1);
    let ambiguous = max_distance > params.narrow_constant / big_k as f64;
    Ok(ClassifyOutcome {
        classification: Classification::Narrow {
            basis: basis.iter().map(|v| v.iter().map(|z| (z.re, z.im)).collect()).collect(),
            max_distance,
        },
        search,
        ambiguous,
    })
}

fn broad(witnesses: Vec<usize>, wedge: f64, search: &'static str) -> ClassifyOutcome {
    ClassifyOutcome {
        classification: Classification::Broad { witnesses, wedge },
        search,
        ambiguous: false,
    }
}

/// Best `dim`-dimensional complex subspace for the vectors (top left
/// singular vectors) and the largest distance of a vector from it.
pub fn fit_subspace(vectors: &[ComplexVector], n: usize, dim: usize) -> (Vec<ComplexVector>, f64) {
    if vectors.is_empty() || dim == 0 {
        let worst = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
        return (Vec::new(), worst);
    }
    let a = ComplexMatrix::from_columns(vectors);
    // pad to at least n columns so the SVD yields n left vectors
    let mut padded = ComplexMatrix::zeros(n, vectors.len().max(n));
    padded.view_mut((0, 0), (n, vectors.len())).copy_from(&a);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let basis: Vec<ComplexVector> = order.iter().take(dim).map(|&i| u.column(i).clone_owned()).collect();
    let worst = vectors
        .iter()
        .map(|v| {
            let mut r = v.clone();
            for b in &basis {
                r -= b * b.dotc(v);
            }
            r.norm()
        })
        .fold(0.0, f64::max);
    (basis, worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub bx: usize,
    pub small: usize,
    pub large: Vec<usize>,
    pub outcome: ClassifyOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct BgSpec {
    pub n: usize,
    pub k_scale: usize,
    pub r: usize,
    pub params: ClassifyParams,
    pub mode: CoefficientMode,
    pub quad: QuadratureSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapDecomposition {
    pub caps: CapGrid,
    pub boxes: BoxGrid,
    /// `coefficients[bx][cap]`.
    pub coefficients: Vec<Vec<f64>>,
    pub reports: Vec<CaseReport>,
    pub broad: usize,
    pub narrow: usize,
    pub ambiguous: usize,
    /// Largest `#Q_l` over narrow boxes.
    pub max_large_narrow: usize,
    pub tail_fraction: Option<f64>,
}

/// Coefficients for every `(q, Q)`, then split and classify every box.
pub fn pipeline(phi: &HolomorphicPolynomial, f: &Amplitude, spec: &BgSpec) -> Result<CapDecomposition> {
    if phi.ambient_dim() != spec.n {
        return Err(LabError::DimensionMismatch {
            expected: spec.n,
            found: phi.ambient_dim(),
        });
    }
    let (caps, boxes) = build_grids(spec.n, spec.k_scale, spec.r)?;
    let ncaps = caps.len();
    let rows = ordered_blocks(boxes.len() * ncaps, |flat| {
        let (bx, cap) = (flat / ncaps, flat % ncaps);
        cap_coefficient(phi, f, &caps, cap, &boxes, bx, spec.mode, &spec.quad)
    });
    let flat: Vec<f64> = rows.into_iter().collect::<Result<_>>()?;
    let coefficients: Vec<Vec<f64>> = flat.chunks(ncaps).map(<[f64]>::to_vec).collect();

    let mut reports = Vec::with_capacity(boxes.len());
    for (bx, coeffs) in coefficients.iter().enumerate() {
        let (small, large) = split_caps(coeffs, spec.k_scale, spec.n);
        let centers: Vec<ComplexVector> = large.iter().map(|&q| caps.center_complex(q)).collect();
        let outcome = classify(
            phi,
            &centers,
            &spec.params,
            spec.k_scale,
            spec.seed.wrapping_add(bx as u64),
        )?;
        reports.push(CaseReport {
            bx,
            small: small.len(),
            large,
            outcome,
        });
    }
    let broad = reports
        .iter()
        .filter(|r| matches!(r.outcome.classification, Classification::Broad { .. }))
        .count();
    let narrow = reports.len() - broad;
    let ambiguous = reports.iter().filter(|r| r.outcome.ambiguous).count();
    let max_large_narrow = reports
        .iter()
        .filter(|r| matches!(r.outcome.classification, Classification::Narrow { .. }))
        .map(|r| r.large.len())
        .max()
        .unwrap_or(0);
    let tail_fraction = match spec.mode {
        CoefficientMode::Definition { .. } => Some(mollifier_tables(spec.n).tail_fraction),
        CoefficientMode::Proxy => None,
    };
    Ok(CapDecomposition {
        caps,
        boxes,
        coefficients,
        reports,
        broad,
        narrow,
        ambiguous,
        max_large_narrow,
        tail_fraction,
    })
}

/// `max_{w ∈ Q samples} |E f_q(w)| / C_q^Q` with `C` in definition mode.
pub fn comparability_ratio(
    phi: &HolomorphicPolynomial,
    f: &Amplitude,
    caps: &CapGrid,
    cap: usize,
    boxes: &BoxGrid,
    bx: usize,
    grid_per_axis: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let sup = cap_coefficient(phi, f, caps, cap, boxes, bx, CoefficientMode::Proxy, quad)?;
    let c = cap_coefficient(
        phi,
        f,
        caps,
        cap,
        boxes,
        bx,
        CoefficientMode::Definition { grid_per_axis },
        quad,
    )?;
    Ok(if c > 0.0 { sup / c } else { 0.0 })
}

/// Random `(cap, box)` pairs for comparability sampling.
pub fn sample_pairs(caps: &CapGrid, boxes: &BoxGrid, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = substream(seed, 0);
    (0..count)
        .map(|_| (rng.random_range(0..caps.len()), rng.random_range(0..boxes.len())))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct NarrowCountReport {
    pub pass: bool,
    pub bound: f64,
    pub max_count: usize,
    /// Log-log slope of the maximum count against `K`, when a sweep is given.
    pub slope: Option<f64>,
    pub slope_limit: f64,
}

/// `#Q_l ≤ C K^{2k−4}` for every narrow box in every run, plus the slope of
/// the worst count across the `K` sweep.
pub fn narrow_count_check(runs: &[(usize, usize)], k: usize, constant: f64) -> NarrowCountReport {
    let exponent = 2.0 * k as f64 - 4.0;
    let mut pass = true;
    let mut max_count = 0;
    for &(big_k, count) in runs {
        max_count = max_count.max(count);
        if count as f64 > constant * (big_k as f64).powf(exponent) {
            pass = false;
        }
    }
    let bound = runs
        .iter()
        .map(|&(big_k, _)| constant * (big_k as f64).powf(exponent))
        .fold(f64::INFINITY, f64::min);
    let positive: Vec<&(usize, usize)> = runs.iter().filter(|r| r.1 > 0).collect();
    let slope = if positive.len() >= 2 {
        let xs: Vec<f64> = positive.iter().map(|r| (r.0 as f64).ln()).collect();
        let ys: Vec<f64> = positive.iter().map(|r| (r.1 as f64).ln()).collect();
        Some(crate::extension::least_squares(&xs, &ys).0)
    } else {
        None
    };
    let slope_limit = exponent + 0.5;
    if let Some(s) = slope {
        pass &= s <= slope_limit;
    }
    NarrowCountReport {
        pass,
        bound: if bound.is_finite() { bound } else { constant },
        max_count,
        slope,
        slope_limit,
    }
}

/// `max(2(n−k+2)/(n−k+1), 2k/(k−1))` in exact arithmetic, `2 ≤ k ≤ n−1`.
pub fn exponent_threshold(n: usize, k: usize) -> Result<Ratio<i64>> {
    if n < 3 || k < 2 || k > n - 1 {
        return Err(LabError::InvalidArgument(format!(
            "need 2 ≤ k ≤ n − 1, got n = {n}, k = {k}"
        )));
    }
    let (n, k) = (n as i64, k as i64);
    let a = Ratio::new(2 * (n - k + 2), n - k + 1);
    let b = Ratio::new(2 * k, k - 1);
    Ok(a.max(b))
}

/// `n/2 + 1` for even `n`; otherwise the smallest minimizing `k`.
pub fn optimal_k(n: usize) -> Result<usize> {
    if n < 3 {
        return Err(LabError::InvalidArgument(format!("need n ≥ 3, got {n}")));
    }
    if n.is_multiple_of(2) {
        return Ok(n / 2 + 1);
    }
    let mut best = (Ratio::new(i64::MAX, 1), 2);
    for k in 2..n {
        let t = exponent_threshold(n, k)?;
        if t < best.0 {
            best = (t, k);
        }
    }
    Ok(best.1)
}
