//! Linear almost complex structures on `ℝ^{2m}`.

use nalgebra::Complex;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::linalg::orthonormal_basis;
use crate::rng::substream;
use crate::surface::{fd_gradients, RealPairMap};
use crate::{ComplexMatrix, ComplexVector, LabError, RealMatrix, Result, C64};

pub const ACS_TOL: f64 = 1e-10;

/// `J₀ = diag(P, …, P)` with `P = [[0, −1], [1, 0]]`.
pub fn standard_structure(m: usize) -> RealMatrix {
    let mut j = RealMatrix::zeros(2 * m, 2 * m);
    for b in 0..m {
        j[(2 * b, 2 * b + 1)] = -1.0;
        j[(2 * b + 1, 2 * b)] = 1.0;
    }
    j
}

#[derive(Debug, Clone, Serialize)]
pub struct AcsCheck {
    pub ok: bool,
    pub reason: Option<String>,
    pub square_deviation: f64,
    pub orthogonality_deviation: f64,
    pub skew_deviation: f64,
}

/// `J² = −I`, `JᵗJ = I`, `Jᵗ = −J`, each within [`ACS_TOL`].
pub fn is_acs(j: &RealMatrix) -> AcsCheck {
    let fail = |reason: String| AcsCheck {
        ok: false,
        reason: Some(reason),
        square_deviation: f64::NAN,
        orthogonality_deviation: f64::NAN,
        skew_deviation: f64::NAN,
    };
    if !j.is_square() {
        return fail(format!("not square: {:?}", j.shape()));
    }
    if !j.nrows().is_multiple_of(2) || j.nrows() == 0 {
        return fail(format!("odd size {}", j.nrows()));
    }
    let id = RealMatrix::identity(j.nrows(), j.nrows());
    let sq = (j * j + &id).amax();
    let orth = (j.transpose() * j - &id).amax();
    let skew = (j.transpose() + j).amax();
    let ok = sq <= ACS_TOL && orth <= ACS_TOL && skew <= ACS_TOL;
    AcsCheck {
        ok,
        reason: (!ok).then(|| "invariant violated".to_string()),
        square_deviation: sq,
        orthogonality_deviation: orth,
        skew_deviation: skew,
    }
}

/// Seeded random orthogonal matrix (orthonormalized Gaussian).
pub fn random_orthogonal(size: usize, seed: u64) -> RealMatrix {
    let mut rng = substream(seed, 0);
    loop {
        let g = RealMatrix::from_fn(size, size, |_, _| StandardNormal.sample(&mut rng));
        let q = orthonormal_basis(&g, 1e-10);
        if q.ncols() == size {
            return q;
        }
    }
}

/// `Qᵗ J₀ Q` for a seeded random orthogonal `Q`.
pub fn random_acs(m: usize, seed: u64) -> Result<RealMatrix> {
    if m == 0 {
        return Err(LabError::InvalidArgument("m must be at least 1".into()));
    }
    let q = random_orthogonal(2 * m, seed);
    let j = q.transpose() * standard_structure(m) * &q;
    // restore exact skew-symmetry lost to rounding
    Ok((&j - j.transpose()) * 0.5)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionResult {
    #[serde(skip)]
    pub l: RealMatrix,
    pub residual: f64,
    pub det: f64,
}

/// Builds `L` with `L⁻¹ J L = J₀` from complex eigenvectors of `J`.
///
/// For each unit `w` with `J w = −i w`, the columns `Re w`, `Im w` satisfy
/// `J Re w = Im w` and `J Im w = −Re w`, which is the action of `P`. The
/// `−i` eigenvectors are the conjugates of the `+i` ones, found as an
/// orthonormalized basis of the column space of `J + iI`.
pub fn reduce_to_standard(j: &RealMatrix) -> Result<ReductionResult> {
    let check = is_acs(j);
    if !check.ok {
        return Err(LabError::InvalidArgument(format!(
            "not an almost complex structure: {}",
            check.reason.unwrap_or_default()
        )));
    }
    let size = j.nrows();
    let m = size / 2;
    let jc: ComplexMatrix = j.map(|x| C64::new(x, 0.0));
    let shifted = &jc + ComplexMatrix::identity(size, size) * C64::new(0.0, 1.0);
    // columns of J + iI lie in the +i eigenspace since J² = −I
    let mut plus: Vec<ComplexVector> = Vec::with_capacity(m);
    let mut cols: Vec<(f64, ComplexVector)> = shifted.column_iter().map(|c| (c.norm(), c.clone_owned())).collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, c) in cols {
        let mut v = c;
        for _ in 0..2 {
            for p in &plus {
                let proj = p.dotc(&v);
                v -= p * proj;
            }
        }
        let nv = v.norm();
        if nv > 1e-6 {
            plus.push(v / C64::new(nv, 0.0));
        }
        if plus.len() == m {
            break;
        }
    }
    if plus.len() != m {
        return Err(LabError::Eigen(format!(
            "found {} of {m} eigenvectors for +i",
            plus.len()
        )));
    }
    let plus = order_and_phase(plus);
    let mut l = RealMatrix::zeros(size, size);
    for (b, v) in plus.iter().enumerate() {
        let w = v.conjugate();
        // √2 makes the columns unit length for unit w with Re w ⟂ Im w
        for r in 0..size {
            l[(r, 2 * b)] = w[r].re * std::f64::consts::SQRT_2;
            l[(r, 2 * b + 1)] = w[r].im * std::f64::consts::SQRT_2;
        }
    }
    let det = crate::linalg::det(&l);
    if det.abs() <= 1e-10 {
        return Err(LabError::Eigen(format!("reduction matrix is singular (det {det:e})")));
    }
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| LabError::Eigen("reduction matrix is not invertible".into()))?;
    let residual = (&l_inv * j * &l - standard_structure(m)).norm();
    Ok(ReductionResult { l, residual, det })
}

/// Sorts by descending modulus of the first nonzero coordinate and rotates
/// each vector so that coordinate is positive real.
fn order_and_phase(vs: Vec<ComplexVector>) -> Vec<ComplexVector> {
    let lead = |v: &ComplexVector| -> Complex<f64> {
        v.iter()
            .copied()
            .find(|z| z.norm() > 1e-12)
            .unwrap_or(C64::new(0.0, 0.0))
    };
    let mut keyed: Vec<(f64, ComplexVector)> = vs
        .into_iter()
        .map(|v| {
            let l = lead(&v);
            let phase = if l.norm() > 0.0 {
                l.conj() / l.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            (l.norm(), v * phase)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
    keyed.into_iter().map(|(_, v)| v).collect()
}

/// `max |∇φ₂ − J ∇φ₁|` over samples, gradients by central differences.
pub fn acs_graph_residual(map: &dyn RealPairMap, j: &RealMatrix, samples: &[Vec<f64>], h: f64) -> Result<f64> {
    if j.nrows() != map.dim() || !j.is_square() {
        return Err(LabError::DimensionMismatch {
            expected: map.dim(),
            found: j.nrows(),
        });
    }
    let mut worst = 0.0f64;
    for x in samples {
        let (g1, g2) = fd_gradients(map, x, h);
        worst = worst.max((g2 - j * g1).amax());
    }
    Ok(worst)
}
