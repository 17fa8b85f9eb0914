//! Brascamp–Lieb data built from surface points, and the scaling, dimension
//! and transversality conditions on them.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::linalg::{self, numerical_rank, orthonormal_basis, realify, RANK_TOL};
use crate::rng::{ordered_blocks, substream};
use crate::surface::{normal, real_parametrization_maps, HolomorphicPolynomial};
use crate::{ComplexMatrix, ComplexVector, LabError, RealMatrix, RealVector, Result, C64};

/// Full-row-rank tolerance for the maps of a datum.
pub const SURJECTIVE_TOL: f64 = 1e-10;
const SCALING_TOL: f64 = 1e-12;
const TRIALS_PER_BLOCK: usize = 256;

#[derive(Debug, Clone)]
pub struct BLDatum {
    maps: Vec<RealMatrix>,
    exponents: Vec<f64>,
    dim: usize,
}

impl BLDatum {
    pub fn new(maps: Vec<RealMatrix>, exponents: Vec<f64>) -> Result<Self> {
        if maps.is_empty() || maps.len() != exponents.len() {
            return Err(LabError::InvalidArgument(format!(
                "{} maps with {} exponents",
                maps.len(),
                exponents.len()
            )));
        }
        let dim = maps[0].ncols();
        for (j, l) in maps.iter().enumerate() {
            if l.ncols() != dim {
                return Err(LabError::DimensionMismatch {
                    expected: dim,
                    found: l.ncols(),
                });
            }
            if numerical_rank(l, SURJECTIVE_TOL) != l.nrows() {
                return Err(LabError::InvalidArgument(format!("map {j} is not surjective")));
            }
            if !(exponents[j] >= 0.0) {
                return Err(LabError::InvalidArgument(format!(
                    "exponent {j} is negative: {}",
                    exponents[j]
                )));
            }
        }
        Ok(Self { maps, exponents, dim })
    }

    pub fn maps(&self) -> &[RealMatrix] {
        &self.maps
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Σ_j p_j dim(L_j V)` for the subspace spanned by the columns of `basis`.
    pub fn weighted_image_dim(&self, basis: &RealMatrix) -> f64 {
        self.maps
            .iter()
            .zip(&self.exponents)
            .map(|(l, p)| p * image_dim(l, basis) as f64)
            .sum()
    }
}

fn image_dim(l: &RealMatrix, basis: &RealMatrix) -> usize {
    if basis.ncols() == 0 {
        return 0;
    }
    let img = l * basis;
    // an exactly zero image has rank zero regardless of relative tolerance
    if img.amax() <= 1e-12 * l.amax().max(1.0) {
        return 0;
    }
    numerical_rank(&img, RANK_TOL)
}

/// An orthonormal basis (as columns) of a subspace of `ℝ^d`.
#[derive(Debug, Clone)]
pub struct SubspaceSample {
    pub basis: RealMatrix,
}

impl SubspaceSample {
    pub fn new(basis: RealMatrix) -> Result<Self> {
        let gram = basis.transpose() * &basis;
        let dev = (gram - RealMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if dev > 1e-10 {
            return Err(LabError::InvalidArgument(format!(
                "subspace basis is not orthonormal (deviation {dev:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Span of arbitrary columns, orthonormalized.
    pub fn span(cols: &RealMatrix) -> Self {
        Self {
            basis: orthonormal_basis(cols, RANK_TOL),
        }
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }
}

/// Gaussian `d × m` matrix, orthonormalized.
pub fn random_subspace<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> SubspaceSample {
    loop {
        let g = RealMatrix::from_fn(d, m, |_, _| rng.sample(StandardNormal));
        let s = SubspaceSample::span(&g);
        if s.dimension() == m {
            return s;
        }
    }
}

/// Datum of the parametrization maps at `points`, with `p_j = 1/(m−1)`.
pub fn surface_bl_datum(phi: &HolomorphicPolynomial, points: &[ComplexVector]) -> Result<BLDatum> {
    if points.len() < 2 {
        return Err(LabError::InvalidArgument("a datum needs at least two points".into()));
    }
    let p = 1.0 / (points.len() - 1) as f64;
    let maps = points
        .iter()
        .map(|a| real_parametrization_maps(phi, a))
        .collect::<Result<Vec<_>>>()?;
    BLDatum::new(maps, vec![p; points.len()])
}

/// `Σ_j p_j d_j = d`.
pub fn bl_scaling_check(datum: &BLDatum) -> bool {
    let total: f64 = datum
        .maps
        .iter()
        .zip(&datum.exponents)
        .map(|(l, p)| p * l.nrows() as f64)
        .sum();
    (total - datum.dim as f64).abs() <= SCALING_TOL * datum.dim as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub dimension: usize,
    pub basis: Vec<Vec<f64>>,
    pub weighted_image_dim: f64,
    pub source: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BLReport {
    pub pass: bool,
    pub trials: usize,
    pub seed: u64,
    pub deterministic_subspaces: usize,
    pub violation: Option<Violation>,
}

fn violation_of(datum: &BLDatum, v: &SubspaceSample, source: &str) -> Option<Violation> {
    let m = v.dimension();
    if m == 0 {
        return None;
    }
    let w = datum.weighted_image_dim(&v.basis);
    if (m as f64) <= w + 1e-12 {
        return None;
    }
    Some(Violation {
        dimension: m,
        basis: v.basis.column_iter().map(|c| c.iter().copied().collect()).collect(),
        weighted_image_dim: w,
        source: source.to_string(),
    })
}

/// Kernel subspaces of every map and the sums of pairs of them.
pub fn kernel_subspaces(datum: &BLDatum) -> Vec<(String, SubspaceSample)> {
    let kernels: Vec<RealMatrix> = datum.maps.iter().map(|l| linalg::null_space(l, RANK_TOL)).collect();
    let mut out = Vec::new();
    for (i, k) in kernels.iter().enumerate() {
        out.push((format!("ker L{i}"), SubspaceSample::span(k)));
    }
    for i in 0..kernels.len() {
        for j in i + 1..kernels.len() {
            let both = RealMatrix::from_columns(
                &kernels[i]
                    .column_iter()
                    .chain(kernels[j].column_iter())
                    .map(|c| c.clone_owned())
                    .collect::<Vec<RealVector>>(),
            );
            out.push((format!("ker L{i} + ker L{j}"), SubspaceSample::span(&both)));
        }
    }
    out
}

/// Checks `dim V ≤ Σ p_j dim(L_j V)` on the kernel family and on `trials`
/// random subspaces of uniformly random dimension. Trials run in seeded
/// blocks and the first violation in trial order is reported.
pub fn bl_dimension_check_mc(datum: &BLDatum, trials: usize, seed: u64) -> Result<BLReport> {
    if trials == 0 {
        return Err(LabError::InvalidArgument("trials must be at least 1".into()));
    }
    let family = kernel_subspaces(datum);
    for (name, v) in &family {
        if let Some(viol) = violation_of(datum, v, name) {
            return Ok(BLReport {
                pass: false,
                trials,
                seed,
                deterministic_subspaces: family.len(),
                violation: Some(viol),
            });
        }
    }
    let d = datum.dim;
    let blocks = trials.div_ceil(TRIALS_PER_BLOCK);
    let found = ordered_blocks(blocks, |b| {
        let mut rng = substream(seed, b as u64);
        let end = ((b + 1) * TRIALS_PER_BLOCK).min(trials);
        for t in b * TRIALS_PER_BLOCK..end {
            let m = rng.random_range(1..=d);
            let v = random_subspace(d, m, &mut rng);
            if let Some(viol) = violation_of(datum, &v, &format!("random trial {t}")) {
                return Some(viol);
            }
        }
        None
    });
    let violation = found.into_iter().flatten().next();
    Ok(BLReport {
        pass: violation.is_none(),
        trials,
        seed,
        deterministic_subspaces: family.len(),
        violation,
    })
}

/// `(v₁, v₂) = (I(n(φ,a)), I(i·n(φ,a)))`, spanning `ker L` at `a`.
pub fn kernel_basis(phi: &HolomorphicPolynomial, a: &ComplexVector) -> Result<(RealVector, RealVector)> {
    let raw = normal(phi, a)?.raw;
    Ok((realify(&raw), realify(&raw.map(|z| z * C64::i()))))
}

/// `(|det(v_{1,1} … v_{1,n} v_{2,1} … v_{2,n})|, |det_ℂ(n(φ,a₁) … n(φ,a_n))|²)`.
pub fn vmatrix_identity_check(phi: &HolomorphicPolynomial, points: &[ComplexVector]) -> Result<(f64, f64)> {
    let n = phi.ambient_dim();
    if points.len() != n {
        return Err(LabError::DimensionMismatch {
            expected: n,
            found: points.len(),
        });
    }
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for a in points {
        let (v1, v2) = kernel_basis(phi, a)?;
        first.push(v1);
        second.push(v2);
        normals.push(normal(phi, a)?.raw);
    }
    first.extend(second);
    let lhs = linalg::det(&RealMatrix::from_columns(&first)).abs();
    let rhs = linalg::det(&ComplexMatrix::from_columns(&normals)).norm_sqr();
    Ok((lhs, rhs))
}

/// `|𝐧(a₁) ∧ ⋯ ∧ 𝐧(a_k)| > c` for unit normals.
pub fn transversal(phi: &HolomorphicPolynomial, points: &[ComplexVector], c: f64) -> Result<bool> {
    let n = phi.ambient_dim();
    if points.len() < 2 || points.len() > n {
        return Err(LabError::InvalidArgument(format!(
            "transversality needs 2 ≤ k ≤ {n} points, got {}",
            points.len()
        )));
    }
    Ok(normals_wedge(phi, points)? > c)
}

/// Wedge of the unit normals at `points`.
pub fn normals_wedge(phi: &HolomorphicPolynomial, points: &[ComplexVector]) -> Result<f64> {
    let units = points
        .iter()
        .map(|a| normal(phi, a).map(|nv| nv.unit))
        .collect::<Result<Vec<_>>>()?;
    linalg::wedge(&units)
}

#[derive(Debug, Clone, Serialize)]
pub struct HahaReport {
    pub pass: bool,
    pub checked: usize,
    pub skipped_trivial: usize,
    /// `(dim V, Σ_j dim(L_j V), (m−1)·dim V)` for every failing sample.
    pub failures: Vec<(usize, usize, usize)>,
}

/// Kernel-counting form of the dimension condition for `m` maps whose
/// kernels sit in general position: `Σ_j dim(L_j V) ≥ (m−1)·dim V`, which is
/// `Σ_j dim(ker L_j ∩ V) ≤ dim V`. The zero subspace is skipped.
pub fn haha_inequality_check(datum: &BLDatum, samples: &[SubspaceSample]) -> HahaReport {
    let m = datum.maps.len();
    let mut failures = Vec::new();
    let mut skipped = 0;
    for v in samples {
        let dv = v.dimension();
        if dv == 0 {
            skipped += 1;
            continue;
        }
        let total: usize = datum.maps.iter().map(|l| image_dim(l, &v.basis)).sum();
        let bound = (m - 1) * dv;
        if total < bound {
            failures.push((dv, total, bound));
        }
    }
    HahaReport {
        pass: failures.is_empty(),
        checked: samples.len() - skipped,
        skipped_trivial: skipped,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pts(v: &[&[C64]]) -> Vec<ComplexVector> {
        v.iter().map(|p| ComplexVector::from_column_slice(p)).collect()
    }

    #[test]
    fn datum_scaling() {
        let phi = HolomorphicPolynomial::sum_of_squares(2);
        let p = pts(&[
            &[c(0.5, 0.0), c(0.0, 0.0)],
            &[c(0.0, 0.0), c(0.5, 0.0)],
            &[c(0.1, 0.3), c(-0.2, 0.1)],
        ]);
        let datum = surface_bl_datum(&phi, &p).unwrap();
        assert_eq!(datum.dim(), 6);
        assert!(datum.maps().iter().all(|l| l.nrows() == 4));
        assert!(bl_scaling_check(&datum));

        let two = surface_bl_datum(&phi, &p[..2]).unwrap();
        assert!(!bl_scaling_check(&two));

        let at0 = pts(&[&[c(0.0, 0.0), c(0.0, 0.0)][..]; 3]);
        let flat = surface_bl_datum(&phi, &at0).unwrap();
        assert!(flat.maps().windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn hand_built_scaling() {
        let l1 = RealMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let l2 = RealMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let datum = BLDatum::new(vec![l1, l2], vec![1.0, 1.0]).unwrap();
        assert!(bl_scaling_check(&datum));
        let not_onto = RealMatrix::zeros(1, 2);
        assert!(BLDatum::new(vec![not_onto], vec![1.0]).is_err());
    }

    #[test]
    fn kernel_basis_examples() {
        let z2 = HolomorphicPolynomial::from_terms(1, [(vec![2], c(1.0, 0.0))]).unwrap();
        let a = ComplexVector::from_column_slice(&[c(1.0, 0.0)]);
        let (v1, v2) = kernel_basis(&z2, &a).unwrap();
        assert_eq!(v1.as_slice(), &[2.0, 0.0, -1.0, 0.0]);
        assert_eq!(v2.as_slice(), &[0.0, 2.0, 0.0, -1.0]);
        let l = real_parametrization_maps(&z2, &a).unwrap();
        assert!((&l * &v1).amax() < 1e-10 && (&l * &v2).amax() < 1e-10);

        let zero = ComplexVector::from_column_slice(&[c(0.0, 0.0)]);
        let (v1, v2) = kernel_basis(&z2, &zero).unwrap();
        assert_eq!(v1.as_slice(), &[0.0, 0.0, -1.0, 0.0]);
        assert_eq!(v2.as_slice(), &[0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn vmatrix_examples() {
        let phi = HolomorphicPolynomial::sum_of_squares(2);
        let origin = pts(&[&[c(0.0, 0.0), c(0.0, 0.0)][..]; 3]);
        let (l, r) = vmatrix_identity_check(&phi, &origin).unwrap();
        // all normals equal (0, 0, -1): repeated columns
        assert_eq!((l, r), (0.0, 0.0));

        let p = pts(&[
            &[c(0.5, 0.1), c(0.0, 0.2)],
            &[c(-0.3, 0.0), c(0.4, -0.1)],
            &[c(0.1, 0.3), c(-0.2, 0.1)],
        ]);
        let (l, r) = vmatrix_identity_check(&phi, &p).unwrap();
        assert_relative_eq!(l, r, max_relative = 1e-9);
        assert!(l > 0.0);
    }

    #[test]
    fn bl_detects_coincident_points() {
        let phi = HolomorphicPolynomial::sum_of_squares(2);
        let a = [c(0.3, 0.1), c(-0.2, 0.4)];
        let datum = surface_bl_datum(&phi, &pts(&[&a, &a, &a])).unwrap();
        let rep = bl_dimension_check_mc(&datum, 10, 1).unwrap();
        assert!(!rep.pass);
        let v = rep.violation.unwrap();
        assert_eq!(v.dimension, 2);
        assert_eq!(v.weighted_image_dim, 0.0);
        assert_eq!(v.source, "ker L0");
    }

    #[test]
    fn bl_full_space_is_equality() {
        let phi = HolomorphicPolynomial::sum_of_squares(1);
        let p = pts(&[&[c(0.5, 0.0)], &[c(-0.5, 0.2)]]);
        let datum = surface_bl_datum(&phi, &p).unwrap();
        let full = RealMatrix::identity(4, 4);
        assert_relative_eq!(datum.weighted_image_dim(&full), 4.0);
    }

    #[test]
    fn transversal_examples() {
        let phi = HolomorphicPolynomial::sum_of_squares(2);
        let a = [c(0.3, 0.0), c(0.0, 0.0)];
        assert!(!transversal(&phi, &pts(&[&a, &a]), 1e-12).unwrap());
        // normals at ±1 e_j are (±2, 0, -1)/√5 and (0, ±2, -1)/√5
        let p = pts(&[
            &[c(1.0, 0.0), c(0.0, 0.0)],
            &[c(0.0, 0.0), c(1.0, 0.0)],
            &[c(-1.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!(transversal(&phi, &p[..2], 0.5).unwrap());
        assert!(transversal(&phi, &p[..1], 0.5).is_err());
    }

    #[test]
    fn haha_boundaries() {
        let phi = HolomorphicPolynomial::sum_of_squares(1);
        let p = pts(&[&[c(0.5, 0.0)], &[c(-0.5, 0.2)]]);
        let datum = surface_bl_datum(&phi, &p).unwrap();
        let empty = SubspaceSample {
            basis: RealMatrix::zeros(4, 0),
        };
        let full = SubspaceSample::new(RealMatrix::identity(4, 4)).unwrap();
        let rep = haha_inequality_check(&datum, &[empty, full]);
        assert!(rep.pass);
        assert_eq!(rep.checked, 1);
        assert_eq!(rep.skipped_trivial, 1);
    }
}
