//! Monte-Carlo overlap integrals for δ-neighborhoods of complex lines.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::extension::least_squares;
use crate::linalg::{realify, wedge};
use crate::rng::{ordered_blocks, substream};
use crate::{ComplexVector, LabError, Result, C64};

const SAMPLES_PER_BLOCK: usize = 1 << 16;
/// Tuples beyond this count are not exhaustively checked for transversality.
const TUPLE_CHECK_CAP: usize = 100_000;

/// δ-neighborhood of the real 2-plane `anchor + span_ℝ{I(v), I(iv)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexLineTube {
    direction: ComplexVector,
    anchor: Vec<f64>,
    radius: f64,
    // orthonormal plane basis, cached
    e1: Vec<f64>,
    e2: Vec<f64>,
}

impl ComplexLineTube {
    pub fn new(direction: ComplexVector, anchor: Vec<f64>, radius: f64) -> Result<Self> {
        let norm = direction.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidArgument(format!(
                "tube direction must be a unit vector, |v| = {norm}"
            )));
        }
        if anchor.len() != 2 * direction.len() {
            return Err(LabError::DimensionMismatch {
                expected: 2 * direction.len(),
                found: anchor.len(),
            });
        }
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(LabError::InvalidArgument(format!(
                "tube radius must lie in (0, 1], got {radius}"
            )));
        }
        let e1 = realify(&direction).as_slice().to_vec();
        let e2 = realify(&direction.map(|z| z * C64::i())).as_slice().to_vec();
        Ok(Self {
            direction,
            anchor,
            radius,
            e1,
            e2,
        })
    }

    pub fn direction(&self) -> &ComplexVector {
        &self.direction
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.direction.clone(), self.anchor.clone(), radius)
    }

    /// Squared distance from `x` to the tube's core plane.
    pub fn distance_sq(&self, x: &[f64]) -> f64 {
        let mut yy = 0.0;
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for k in 0..x.len() {
            let y = x[k] - self.anchor[k];
            yy += y * y;
            p1 += y * self.e1[k];
            p2 += y * self.e2[k];
        }
        (yy - p1 * p1 - p2 * p2).max(0.0)
    }
}

pub fn tube_contains(tube: &ComplexLineTube, x: &[f64]) -> bool {
    tube.distance_sq(x) <= tube.radius * tube.radius
}

#[derive(Debug, Clone)]
pub struct TubeFamily {
    pub tubes: Vec<ComplexLineTube>,
    pub base: ComplexVector,
    pub nu: f64,
}

impl TubeFamily {
    pub fn len(&self) -> usize {
        self.tubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tubes.is_empty()
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Ok(Self {
            tubes: self
                .tubes
                .iter()
                .map(|t| t.with_radius(radius))
                .collect::<Result<_>>()?,
            base: self.base.clone(),
            nu: self.nu,
        })
    }

    fn count_containing(&self, x: &[f64]) -> usize {
        self.tubes.iter().filter(|t| tube_contains(t, x)).count()
    }
}

/// Largest principal angle between the complex lines `ℂu` and `ℂv`, viewed
/// as real 2-planes: `arccos |⟨u, v⟩| / (|u||v|)`.
pub fn line_angle(u: &ComplexVector, v: &ComplexVector) -> f64 {
    let c = u.dotc(v).norm() / (u.norm() * v.norm());
    c.clamp(0.0, 1.0).acos()
}

/// Tubes whose directions lie within principal angle `ν` of `ℂ·base`.
///
/// Each direction is `cos θ · b + sin θ · u` with `b = base/|base|`, `u` a
/// random unit vector orthogonal to `b` and `θ` uniform on `[0, ν]`; anchors
/// are uniform in `[−1, 1]^{2n}`.
pub fn sample_tube_family(base: &ComplexVector, nu: f64, count: usize, delta: f64, seed: u64) -> Result<TubeFamily> {
    if count == 0 {
        return Err(LabError::InvalidArgument("tube count must be at least 1".into()));
    }
    if !(0.0..=0.5).contains(&nu) {
        return Err(LabError::InvalidArgument(format!("nu must lie in [0, 0.5], got {nu}")));
    }
    let n = base.len();
    let b = base / C64::new(base.norm(), 0.0);
    let mut rng = substream(seed, 0);
    let mut tubes = Vec::with_capacity(count);
    for _ in 0..count {
        let dir = if nu == 0.0 || n == 1 {
            b.clone()
        } else {
            let u = loop {
                let g = ComplexVector::from_fn(n, |_, _| {
                    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                let g = &g - &b * b.dotc(&g);
                let gn = g.norm();
                if gn > 1e-8 {
                    break g / C64::new(gn, 0.0);
                }
            };
            let theta = nu * rng.random::<f64>();
            let v = &b * C64::new(theta.cos(), 0.0) + u * C64::new(theta.sin(), 0.0);
            let vn = v.norm();
            v / C64::new(vn, 0.0)
        };
        let anchor: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        tubes.push(ComplexLineTube::new(dir, anchor, delta)?);
    }
    Ok(TubeFamily { tubes, base: b, nu })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// `∫_{[−1,1]^{2n}} Π_j (Σ_i χ_{U_{i,j}})^{1/(k−1)}` by uniform sampling in
/// seeded blocks, merged in block order.
pub fn kakeya_integral(families: &[TubeFamily], samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    let k = families.len();
    if k < 2 {
        return Err(LabError::InvalidArgument(format!(
            "need at least two families, got {k}"
        )));
    }
    if samples == 0 {
        return Err(LabError::InvalidArgument("samples must be positive".into()));
    }
    if families.iter().any(TubeFamily::is_empty) {
        return Ok(MonteCarloEstimate {
            estimate: 0.0,
            stderr: 0.0,
            samples,
        });
    }
    let n = families[0].base.len();
    let d = 2 * n;
    let power = 1.0 / (k - 1) as f64;
    let blocks = samples.div_ceil(SAMPLES_PER_BLOCK);
    let partial = ordered_blocks(blocks, |b| {
        let mut rng = substream(seed, b as u64);
        let count = SAMPLES_PER_BLOCK.min(samples - b * SAMPLES_PER_BLOCK);
        let mut x = vec![0.0; d];
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for _ in 0..count {
            for xi in x.iter_mut() {
                *xi = rng.random_range(-1.0..1.0);
            }
            let mut prod = 1.0;
            for fam in families {
                let c = fam.count_containing(&x);
                if c == 0 {
                    prod = 0.0;
                    break;
                }
                prod *= if k == 2 { c as f64 } else { (c as f64).powf(power) };
            }
            s1 += prod;
            s2 += prod * prod;
        }
        (s1, s2)
    });
    let (s1, s2) = partial.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = if samples > 1 {
        ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    let volume = 2f64.powi(d as i32);
    Ok(MonteCarloEstimate {
        estimate: volume * mean,
        stderr: volume * (var / nf).sqrt(),
        samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KakeyaReport {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub counts: Vec<usize>,
    pub estimate: f64,
    pub stderr: f64,
    /// `estimate / (δ^{2n} Π_j (#U_j)^{1/(k−1)})`.
    pub constant: f64,
    pub samples: usize,
    pub seed: u64,
}

impl KakeyaReport {
    pub fn normalization(k: usize, n: usize, delta: f64, counts: &[usize]) -> f64 {
        let power = 1.0 / (k - 1) as f64;
        delta.powi(2 * n as i32) * counts.iter().map(|&c| (c as f64).powf(power)).product::<f64>()
    }
}

pub fn kakeya_report(families: &[TubeFamily], delta: f64, samples: usize, seed: u64) -> Result<KakeyaReport> {
    let mc = kakeya_integral(families, samples, seed)?;
    let k = families.len();
    let n = families[0].base.len();
    let counts: Vec<usize> = families.iter().map(TubeFamily::len).collect();
    let norm = KakeyaReport::normalization(k, n, delta, &counts);
    Ok(KakeyaReport {
        k,
        n,
        delta,
        counts,
        estimate: mc.estimate,
        stderr: mc.stderr,
        constant: if norm > 0.0 { mc.estimate / norm } else { 0.0 },
        samples,
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub bases: Vec<ComplexVector>,
    pub deltas: Vec<f64>,
    pub family_size: usize,
    pub nu: f64,
    pub floor: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub rows: Vec<KakeyaReport>,
    /// Slope of `log C(δ)` against `log(1/δ)`; absent with fewer than two rows.
    pub epsilon: Option<f64>,
    pub min_tuple_wedge: f64,
}

/// Every `k`-tuple of directions, one per family, odometer order, capped.
fn min_tuple_wedge(families: &[TubeFamily]) -> Result<(f64, Vec<usize>)> {
    let sizes: Vec<usize> = families.iter().map(TubeFamily::len).collect();
    let total: usize = sizes.iter().product();
    let mut best = (f64::INFINITY, vec![0; families.len()]);
    let mut idx = vec![0usize; families.len()];
    for _ in 0..total.min(TUPLE_CHECK_CAP) {
        let dirs: Vec<ComplexVector> = idx
            .iter()
            .zip(families)
            .map(|(&i, f)| f.tubes[i].direction.clone())
            .collect();
        let w = wedge(&dirs)?;
        if w < best.0 {
            best = (w, idx.clone());
        }
        for (slot, &size) in idx.iter_mut().zip(&sizes) {
            *slot += 1;
            if *slot < size {
                break;
            }
            *slot = 0;
        }
    }
    Ok(best)
}

/// Measures `C(δ)` over a δ ladder with fixed tube directions and anchors.
pub fn kakeya_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let k = spec.bases.len();
    if k < 2 {
        return Err(LabError::InvalidArgument(format!("need k ≥ 2 families, got {k}")));
    }
    let base_wedge = wedge(
        &spec
            .bases
            .iter()
            .map(|b| b / C64::new(b.norm(), 0.0))
            .collect::<Vec<_>>(),
    )?;
    if base_wedge < spec.floor {
        return Err(LabError::TransversalityViolated {
            tuple: vec![0; k],
            wedge: base_wedge,
            floor: spec.floor,
        });
    }
    if spec.deltas.is_empty() {
        return Ok(SweepResult {
            rows: Vec::new(),
            epsilon: None,
            min_tuple_wedge: base_wedge,
        });
    }
    let families: Vec<TubeFamily> = spec
        .bases
        .iter()
        .enumerate()
        .map(|(j, b)| {
            sample_tube_family(
                b,
                spec.nu,
                spec.family_size,
                spec.deltas[0],
                spec.seed.wrapping_add(j as u64),
            )
        })
        .collect::<Result<_>>()?;
    let (worst, tuple) = min_tuple_wedge(&families)?;
    if worst < spec.floor {
        return Err(LabError::TransversalityViolated {
            tuple,
            wedge: worst,
            floor: spec.floor,
        });
    }
    let mut rows = Vec::with_capacity(spec.deltas.len());
    for &delta in &spec.deltas {
        let fams: Vec<TubeFamily> = families.iter().map(|f| f.with_radius(delta)).collect::<Result<_>>()?;
        rows.push(kakeya_report(&fams, delta, spec.samples, spec.seed)?);
    }
    let epsilon = if rows.len() >= 2 && rows.iter().all(|r| r.constant > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.delta).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.constant.ln()).collect();
        Some(least_squares(&xs, &ys).0)
    } else {
        None
    };
    Ok(SweepResult {
        rows,
        epsilon,
        min_tuple_wedge: worst,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InductionRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_stderr: f64,
    pub rhs_stderr: f64,
}

impl InductionRatio {
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// `C(δ)` against `C(δ/ν)` for the same families, the latter with every
/// tube enlarged to radius `δ/ν` (the coarse-scale replacement of a family
/// of direction spread `ν`).
pub fn induction_ratio(
    delta: f64,
    nu: f64,
    families: &[TubeFamily],
    samples: usize,
    seed: u64,
) -> Result<InductionRatio> {
    if !(nu > 0.0 && delta / nu <= 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "need 0 < δ/ν ≤ 1, got δ = {delta}, ν = {nu}"
        )));
    }
    if families.iter().any(TubeFamily::is_empty) {
        return Ok(InductionRatio {
            lhs: 0.0,
            rhs: 0.0,
            lhs_stderr: 0.0,
            rhs_stderr: 0.0,
        });
    }
    let fine: Vec<TubeFamily> = families.iter().map(|f| f.with_radius(delta)).collect::<Result<_>>()?;
    let coarse_r = delta / nu;
    let coarse: Vec<TubeFamily> = families
        .iter()
        .map(|f| f.with_radius(coarse_r))
        .collect::<Result<_>>()?;
    let a = kakeya_report(&fine, delta, samples, seed)?;
    let b = kakeya_report(&coarse, coarse_r, samples, seed)?;
    let scale = |r: &KakeyaReport| {
        let norm = KakeyaReport::normalization(r.k, r.n, r.delta, &r.counts);
        r.stderr / norm
    };
    Ok(InductionRatio {
        lhs: a.constant,
        rhs: b.constant,
        lhs_stderr: scale(&a),
        rhs_stderr: scale(&b),
    })
}
