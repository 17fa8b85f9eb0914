//! Complex and real linear algebra used by every other module.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};

use crate::{ComplexMatrix, ComplexVector, LabError, RealMatrix, RealVector, Result, C64};

/// Relative rank tolerance for the wedge orthogonalization.
pub const WEDGE_RANK_TOL: f64 = 1e-10;
/// Relative singular-value tolerance used whenever a dimension is computed.
pub const RANK_TOL: f64 = 1e-8;

/// `ℜ ∑ a_j · conj(b_j)`, the real inner product of the realified vectors.
pub fn pair(a: &ComplexVector, b: &ComplexVector) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum())
}

/// Interleaves real and imaginary parts: `(a₁+ib₁, …) ↦ (a₁, b₁, …)`.
pub fn realify(v: &ComplexVector) -> RealVector {
    RealVector::from_iterator(2 * v.len(), v.iter().flat_map(|z| [z.re, z.im]))
}

/// Inverse of [`realify`]. Panics on odd length.
pub fn complexify(x: &[f64]) -> ComplexVector {
    assert!(x.len().is_multiple_of(2), "complexify needs an even-length slice");
    ComplexVector::from_iterator(x.len() / 2, x.chunks_exact(2).map(|p| C64::new(p[0], p[1])))
}

/// Determinant by partially pivoted LU, pivoting on modulus.
pub fn det<T: ComplexField>(m: &DMatrix<T>) -> T {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = T::one();
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[(col, col)].clone().modulus();
        for r in col + 1..n {
            let v = a[(r, col)].clone().modulus();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == T::zero().modulus() {
            return T::zero();
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let p = a[(col, col)].clone();
        det *= p.clone();
        for r in col + 1..n {
            let f = a[(r, col)].clone() / p.clone();
            for c in col + 1..n {
                let delta = f.clone() * a[(col, c)].clone();
                a[(r, c)] -= delta;
            }
        }
    }
    det
}

/// Both sides of `det [[B, D], [-D, B]] = |det(B + iD)|²`.
pub fn block_det_identity(b: &RealMatrix, d: &RealMatrix) -> Result<(f64, f64)> {
    if !b.is_square() || b.shape() != d.shape() {
        return Err(LabError::InvalidArgument(format!(
            "B {:?} and D {:?} must be square of the same size",
            b.shape(),
            d.shape()
        )));
    }
    let m = b.nrows();
    let mut block = RealMatrix::zeros(2 * m, 2 * m);
    block.view_mut((0, 0), (m, m)).copy_from(b);
    block.view_mut((0, m), (m, m)).copy_from(d);
    block.view_mut((m, 0), (m, m)).copy_from(&(-d));
    block.view_mut((m, m), (m, m)).copy_from(b);
    let lhs = det(&block);
    let c = ComplexMatrix::from_fn(m, m, |i, j| C64::new(b[(i, j)], d[(i, j)]));
    let rhs = det(&c).norm_sqr();
    Ok((lhs, rhs))
}

/// Householder QR with column pivoting.
///
/// `q` is the full square orthogonal factor: its first `rank` columns span
/// the column space of the input, the remaining ones its orthogonal
/// complement.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: RealMatrix,
    pub rank: usize,
    pub r_diag: Vec<f64>,
    pub permutation: Vec<usize>,
}

pub fn pivoted_qr(a: &RealMatrix, rel_tol: f64) -> PivotedQr {
    let (m, k) = a.shape();
    let mut r = a.clone();
    let mut q = RealMatrix::identity(m, m);
    let mut perm: Vec<usize> = (0..k).collect();
    let max_norm = (0..k).map(|j| r.column(j).norm()).fold(0.0, f64::max);
    let tol = rel_tol * max_norm;
    let mut r_diag = Vec::new();
    let mut rank = 0;
    for j in 0..m.min(k) {
        let (best, best_norm) = (j..k)
            .map(|c| (c, r.view((j, c), (m - j, 1)).norm()))
            .fold((j, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_norm <= tol || best_norm == 0.0 {
            break;
        }
        r.swap_columns(j, best);
        perm.swap(j, best);

        let x = r.view((j, j), (m - j, 1)).clone_owned();
        let alpha = if x[0] >= 0.0 { -best_norm } else { best_norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            // R <- H R on rows j.., Q <- Q H on columns j..
            for c in j..k {
                let s = 2.0 * (0..m - j).map(|t| v[t] * r[(j + t, c)]).sum::<f64>() / vnorm2;
                for t in 0..m - j {
                    r[(j + t, c)] -= s * v[t];
                }
            }
            for row in 0..m {
                let s = 2.0 * (0..m - j).map(|t| v[t] * q[(row, j + t)]).sum::<f64>() / vnorm2;
                for t in 0..m - j {
                    q[(row, j + t)] -= s * v[t];
                }
            }
        }
        r_diag.push(alpha.abs());
        rank += 1;
    }
    PivotedQr {
        q,
        rank,
        r_diag,
        permutation: perm,
    }
}

/// `|v₁ ∧ ⋯ ∧ v_k|`: absolute determinant of the realified vectors
/// `I(v_j), I(i v_j)` completed by an orthonormal basis of the orthogonal
/// complement of their span. Zero when the span is degenerate.
pub fn wedge(vs: &[ComplexVector]) -> Result<f64> {
    let k = vs.len();
    if k == 0 {
        return Err(LabError::InvalidArgument("wedge of zero vectors".into()));
    }
    let n = vs[0].len();
    for v in vs {
        check_len(n, v.len())?;
    }
    if k > n {
        return Err(LabError::InvalidArgument(format!(
            "wedge of {k} vectors in complex dimension {n}"
        )));
    }
    let i = C64::i();
    let mut cols = RealMatrix::zeros(2 * n, 2 * k);
    for (j, v) in vs.iter().enumerate() {
        cols.set_column(2 * j, &realify(v));
        cols.set_column(2 * j + 1, &realify(&v.map(|z| z * i)));
    }
    let qr = pivoted_qr(&cols, WEDGE_RANK_TOL);
    if qr.rank < 2 * k {
        return Ok(0.0);
    }
    let mut full = RealMatrix::zeros(2 * n, 2 * n);
    full.view_mut((0, 0), (2 * n, 2 * k)).copy_from(&cols);
    full.view_mut((0, 2 * k), (2 * n, 2 * n - 2 * k))
        .copy_from(&qr.q.view((0, 2 * k), (2 * n, 2 * n - 2 * k)));
    Ok(det(&full).abs())
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank<T: ComplexField>(m: &DMatrix<T>, rel_tol: f64) -> usize
where
    T::RealField: Into<f64>,
{
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s.clone().into())
        .collect();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn orthonormal_basis(a: &RealMatrix, rel_tol: f64) -> RealMatrix {
    let qr = pivoted_qr(a, rel_tol);
    qr.q.columns(0, qr.rank).clone_owned()
}

/// Orthonormal basis of the null space of `a` (right singular vectors with
/// singular value at most `rel_tol` times the largest).
pub fn null_space(a: &RealMatrix, rel_tol: f64) -> RealMatrix {
    let ncols = a.ncols();
    // pad so the SVD returns a full set of right singular vectors
    let mut padded = RealMatrix::zeros(a.nrows().max(ncols), ncols);
    padded.view_mut((0, 0), a.shape()).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..ncols)
        .filter(|&i| svd.singular_values[i] <= rel_tol * smax || smax == 0.0)
        .collect();
    RealMatrix::from_fn(ncols, idx.len(), |r, c| vt[(idx[c], r)])
}

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns.
pub fn principal_angles(a: &RealMatrix, b: &RealMatrix) -> Vec<f64> {
    let prod = a.transpose() * b;
    let mut angles: Vec<f64> = prod
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s.clamp(-1.0, 1.0).acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Largest principal angle between two equal-dimensional subspaces.
pub fn max_principal_angle(a: &RealMatrix, b: &RealMatrix) -> f64 {
    principal_angles(a, b).last().copied().unwrap_or(0.0)
}

/// Real orthonormal basis `(I(v)/|v|, I(iv)/|v|)` of the real 2-plane of a
/// complex line.
pub fn complex_line_plane(v: &ComplexVector) -> RealMatrix {
    let norm = v.norm();
    let a = realify(v) / norm;
    let b = realify(&v.map(|z| z * C64::i())) / norm;
    RealMatrix::from_columns(&[a, b])
}

/// `A = Uᵗ · diag(D) · U` with `U` unitary and `D` descending, nonnegative.
#[derive(Debug, Clone)]
pub struct TakagiFactorization {
    pub u: ComplexMatrix,
    pub d: Vec<f64>,
}

impl TakagiFactorization {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
            self.d.len(),
            self.d.iter().map(|&x| C64::new(x, 0.0)),
        ));
        self.u.transpose() * diag * &self.u
    }
}

/// Largest absolute entry of `A - Aᵗ`.
pub fn symmetry_deviation(a: &ComplexMatrix) -> f64 {
    (a - a.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Takagi (Autonne–Takagi) factorization of a complex symmetric matrix.
///
/// Writing `A = B + iC`, a Takagi vector `q = x + iy` with `A q̄ = σ q`
/// corresponds to an eigenpair `(σ, (x; y))` of the real symmetric matrix
/// `[[B, C], [C, -B]]`, whose spectrum is `±σ_j`. Positive eigenvectors give
/// the columns of `Uᵗ`; a null space, if any, is completed by complex
/// Gram–Schmidt.
pub fn takagi(a: &ComplexMatrix) -> Result<TakagiFactorization> {
    if !a.is_square() {
        return Err(LabError::InvalidArgument("Takagi needs a square matrix".into()));
    }
    let m = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let deviation = symmetry_deviation(a);
    if deviation > 1e-12 * scale.max(1.0) {
        return Err(LabError::NotSymmetric { deviation });
    }
    let mut emb = RealMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            // symmetrize exactly to keep the embedding symmetric
            let z = (a[(i, j)] + a[(j, i)]) * 0.5;
            emb[(i, j)] = z.re;
            emb[(i, m + j)] = z.im;
            emb[(m + i, j)] = z.im;
            emb[(m + i, m + j)] = -z.re;
        }
    }
    let eig = SymmetricEigen::new(emb);
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let lam_max = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let null_tol = 1e-12 * lam_max.max(f64::MIN_POSITIVE);

    let as_complex = |idx: usize| -> ComplexVector {
        let col = eig.eigenvectors.column(idx);
        ComplexVector::from_fn(m, |r, _| C64::new(col[r], col[m + r]))
    };

    let mut qs: Vec<ComplexVector> = Vec::with_capacity(m);
    let mut d = Vec::with_capacity(m);
    for &idx in &order {
        let lam = eig.eigenvalues[idx];
        if lam > null_tol && qs.len() < m {
            let q = as_complex(idx);
            let n = q.norm();
            qs.push(fix_sign(q / C64::new(n, 0.0)));
            d.push(lam);
        }
    }
    if qs.len() < m {
        for &idx in &order {
            if eig.eigenvalues[idx].abs() > null_tol {
                continue;
            }
            let mut q = as_complex(idx);
            for p in &qs {
                let proj = p.dotc(&q);
                q -= p * proj;
            }
            let n = q.norm();
            if n > 1e-6 {
                qs.push(q / C64::new(n, 0.0));
                d.push(0.0);
            }
            if qs.len() == m {
                break;
            }
        }
    }
    if qs.len() != m {
        return Err(LabError::Eigen(format!("recovered {} of {m} Takagi vectors", qs.len())));
    }
    let q_mat = ComplexMatrix::from_columns(&qs);
    Ok(TakagiFactorization {
        u: q_mat.transpose(),
        d,
    })
}

/// Takagi vectors are fixed up to a real sign; pick the one whose
/// dominant entry has nonnegative real part.
fn fix_sign(q: ComplexVector) -> ComplexVector {
    let big = q.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = q
        .iter()
        .find(|z| z.norm() >= big * (1.0 - 1e-9))
        .copied()
        .unwrap_or(C64::new(0.0, 0.0));
    if lead.re < 0.0 {
        -q
    } else {
        q
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(LabError::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cv(v: &[(f64, f64)]) -> ComplexVector {
        ComplexVector::from_iterator(v.len(), v.iter().map(|&(a, b)| C64::new(a, b)))
    }

    /// Leibniz expansion, used as an independent determinant oracle.
    fn leibniz(m: &RealMatrix) -> f64 {
        fn go(m: &RealMatrix, row: usize, used: &mut Vec<bool>, sign: f64) -> f64 {
            let n = m.nrows();
            if row == n {
                return sign;
            }
            let mut total = 0.0;
            let mut inversions_before = 0;
            for c in 0..n {
                if used[c] {
                    continue;
                }
                // number of unused columns to the left gives the parity step
                let s = if inversions_before % 2 == 0 { 1.0 } else { -1.0 };
                used[c] = true;
                total += m[(row, c)] * go(m, row + 1, used, sign * s);
                used[c] = false;
                inversions_before += 1;
            }
            total
        }
        go(m, 0, &mut vec![false; m.nrows()], 1.0)
    }

    #[test]
    fn pair_examples() {
        let e1 = cv(&[(1.0, 0.0)]);
        let ie1 = cv(&[(0.0, 1.0)]);
        assert_eq!(pair(&e1, &e1).unwrap(), 1.0);
        assert_eq!(pair(&ie1, &e1).unwrap(), 0.0);
        let v = cv(&[(1.0, 1.0), (0.0, 0.0)]);
        assert_eq!(pair(&v, &v).unwrap(), 2.0);
        assert!(matches!(pair(&e1, &v), Err(LabError::DimensionMismatch { .. })));
    }

    #[test]
    fn realify_examples() {
        let v = cv(&[(1.0, 2.0), (3.0, 4.0)]);
        assert_eq!(realify(&v).as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        let w = cv(&[(0.0, 1.0), (0.0, 0.0)]);
        assert_eq!(realify(&w).as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(complexify(realify(&v).as_slice()), v);
    }

    #[test]
    fn lu_matches_leibniz() {
        let m = RealMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -1.0, 0.5, 3.0, 1.0, 4.0, -2.0, 0.0, 0.3, 0.7, 1.1, -0.4, 5.0, 0.0, 1.0, 2.0,
            ],
        );
        assert_relative_eq!(det(&m), leibniz(&m), max_relative = 1e-12);
        assert_relative_eq!(det(&m), m.determinant(), max_relative = 1e-12);
        assert_eq!(det(&RealMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn block_det_trivial_cases() {
        let i2 = RealMatrix::identity(2, 2);
        let z2 = RealMatrix::zeros(2, 2);
        let (l, r) = block_det_identity(&i2, &z2).unwrap();
        assert_relative_eq!(l, 1.0);
        assert_relative_eq!(r, 1.0);
        let (l, r) = block_det_identity(&z2, &i2).unwrap();
        assert_relative_eq!(l, 1.0);
        assert_relative_eq!(r, 1.0);
        assert!(block_det_identity(&i2, &RealMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn block_det_random_3x3_against_leibniz() {
        let b = RealMatrix::from_row_slice(3, 3, &[0.3, -1.2, 0.8, 2.0, 0.1, -0.5, 0.7, 0.9, 1.4]);
        let d = RealMatrix::from_row_slice(3, 3, &[-0.6, 0.2, 1.1, 0.4, -1.3, 0.05, 1.0, 0.6, -0.2]);
        let (l, r) = block_det_identity(&b, &d).unwrap();
        let mut block = RealMatrix::zeros(6, 6);
        block.view_mut((0, 0), (3, 3)).copy_from(&b);
        block.view_mut((0, 3), (3, 3)).copy_from(&d);
        block.view_mut((3, 0), (3, 3)).copy_from(&(-&d));
        block.view_mut((3, 3), (3, 3)).copy_from(&b);
        let oracle = leibniz(&block);
        assert_relative_eq!(l, oracle, max_relative = 1e-10);
        assert_relative_eq!(l, r, max_relative = 1e-10);
    }

    #[test]
    fn wedge_examples() {
        let e1 = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let e2 = cv(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_relative_eq!(wedge(&[e1.clone(), e2.clone()]).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(wedge(&[e1.clone(), e1.clone()]).unwrap(), 0.0);
        let s = 0.5f64.sqrt();
        let u = cv(&[(s, 0.0), (s, 0.0)]);
        // direct 4x4 determinant of I(e1), I(ie1), I(u), I(iu)
        let m = RealMatrix::from_column_slice(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, s, 0.0, s, 0.0, 0.0, s, 0.0, s],
        );
        let oracle = leibniz(&m).abs();
        assert_relative_eq!(oracle, 0.5, epsilon = 1e-12);
        assert_relative_eq!(wedge(&[e1.clone(), u]).unwrap(), oracle, epsilon = 1e-12);
        assert!(wedge(&[e1.clone(), e2.clone(), e1.clone()]).is_err());
    }

    #[test]
    fn wedge_below_full_rank_matches_gram_volume() {
        // for k < n the completed determinant equals sqrt(det Gram)
        let v1 = cv(&[(0.3, 0.1), (0.5, -0.2), (0.0, 0.7)]);
        let v2 = cv(&[(-0.4, 0.2), (0.1, 0.1), (0.6, 0.0)]);
        let w = wedge(&[v1.clone(), v2.clone()]).unwrap();
        let i = C64::i();
        let cols = RealMatrix::from_columns(&[
            realify(&v1),
            realify(&v1.map(|z| z * i)),
            realify(&v2),
            realify(&v2.map(|z| z * i)),
        ]);
        let gram = cols.transpose() * &cols;
        assert_relative_eq!(w, leibniz(&gram).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn pivoted_qr_completion_is_orthogonal() {
        let a = RealMatrix::from_column_slice(4, 2, &[1.0, 2.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        let qr = pivoted_qr(&a, 1e-12);
        assert_eq!(qr.rank, 2);
        let qtq = qr.q.transpose() * &qr.q;
        assert!((qtq - RealMatrix::identity(4, 4)).camax() < 1e-12);
        let comp = qr.q.columns(2, 2);
        assert!((comp.transpose() * &a).camax() < 1e-12);
    }

    #[test]
    fn null_space_of_wide_map() {
        let l = RealMatrix::from_row_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 2.0]);
        let ns = null_space(&l, RANK_TOL);
        assert_eq!(ns.ncols(), 2);
        assert!((&l * &ns).camax() < 1e-12);
    }

    #[test]
    fn takagi_examples() {
        let id = ComplexMatrix::identity(3, 3);
        let t = takagi(&id).unwrap();
        assert!(t.d.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!((t.reconstruct() - &id).camax() < 1e-12);

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
        let sv = swap.clone().svd(false, false).singular_values;
        assert_relative_eq!(t.d[0], sv[0], epsilon = 1e-12);
        assert_relative_eq!(t.d[1], sv[1], epsilon = 1e-12);
        assert!((t.reconstruct() - &swap).camax() < 1e-12);

        let diag = ComplexMatrix::from_diagonal(&cv(&[(2.0, 0.0), (3.0, 0.0)]));
        let t = takagi(&diag).unwrap();
        assert_relative_eq!(t.d[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(t.d[1], 2.0, epsilon = 1e-12);
        assert!((t.reconstruct() - &diag).camax() < 1e-12);
    }

    #[test]
    fn takagi_rank_deficient() {
        // rank one: v vᵗ
        let v = cv(&[(1.0, 0.5), (0.0, -1.0), (0.3, 0.2)]);
        let a = &v * v.transpose();
        let t = takagi(&a).unwrap();
        assert!(t.d[1].abs() < 1e-12 && t.d[2].abs() < 1e-12);
        assert!((t.reconstruct() - &a).camax() < 1e-12);
        let uu = &t.u * t.u.adjoint();
        assert!((uu - ComplexMatrix::identity(3, 3)).camax() < 1e-12);
        assert!(takagi(&ComplexMatrix::zeros(2, 2)).is_ok());
    }

    #[test]
    fn takagi_rejects_nonsymmetric() {
        let a = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(2.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(takagi(&a), Err(LabError::NotSymmetric { .. })));
    }
}
