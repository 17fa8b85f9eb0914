//! Holomorphic polynomial surface generators `φ : ℂ^{n−1} → ℂ` and their
//! derivative data.
//!
//! Real coordinates are interleaved: `z = (x₁ + i y₁, …)` is stored as
//! `(x₁, y₁, x₂, y₂, …)`, and the graph `(z, φ(z))` lives in `ℝ^{2n}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::linalg::{self, takagi};
use crate::{ComplexMatrix, ComplexVector, LabError, RealMatrix, RealVector, Result, C64};

pub const DEGREE_CAP: u32 = 8;
/// `normalize_at` refuses Hessians with `|det|` at or below this.
pub const SINGULAR_HESSIAN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicPolynomial {
    nvars: usize,
    coeffs: BTreeMap<Vec<u32>, C64>,
}

impl HolomorphicPolynomial {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars >= 1, "a surface needs at least one complex variable");
        Self {
            nvars,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C64)>,
    {
        let mut p = Self::zero(nvars);
        for (alpha, c) in terms {
            p.add_term(alpha, c)?;
        }
        Ok(p)
    }

    /// Adds `c · z^α`, accumulating onto an existing coefficient.
    pub fn add_term(&mut self, alpha: Vec<u32>, c: C64) -> Result<()> {
        if alpha.len() != self.nvars {
            return Err(LabError::DimensionMismatch {
                expected: self.nvars,
                found: alpha.len(),
            });
        }
        let deg: u32 = alpha.iter().sum();
        if deg > DEGREE_CAP {
            return Err(LabError::InvalidArgument(format!(
                "monomial degree {deg} exceeds the cap {DEGREE_CAP}"
            )));
        }
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(LabError::InvalidArgument("non-finite coefficient".into()));
        }
        let e = self.coeffs.entry(alpha).or_insert(C64::new(0.0, 0.0));
        *e += c;
        Ok(())
    }

    /// `Σ_j z_j²`.
    pub fn sum_of_squares(nvars: usize) -> Self {
        Self::from_quadratic_form(&ComplexMatrix::identity(nvars, nvars))
    }

    /// `zᵗ M z` for a (symmetrized) square `M`.
    pub fn from_quadratic_form(m: &ComplexMatrix) -> Self {
        let nvars = m.nrows();
        let mut p = Self::zero(nvars);
        for i in 0..nvars {
            for j in 0..nvars {
                let mut alpha = vec![0; nvars];
                alpha[i] += 1;
                alpha[j] += 1;
                p.add_term(alpha, m[(i, j)]).expect("quadratic term");
            }
        }
        p.prune();
        p
    }

    /// `½ z·z`, the model surface of the normalized class.
    pub fn half_dot(nvars: usize) -> Self {
        Self::sum_of_squares(nvars).scale(C64::new(0.5, 0.0))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Ambient complex dimension `n` of the graph.
    pub fn ambient_dim(&self) -> usize {
        self.nvars + 1
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, alpha: &[u32]) -> C64 {
        self.coeffs.get(alpha).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|a| a.iter().sum()).max().unwrap_or(0)
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| *c != C64::new(0.0, 0.0));
    }

    pub fn eval(&self, z: &ComplexVector) -> Result<C64> {
        self.check_dim(z.len())?;
        Ok(self.eval_slice(z.as_slice()))
    }

    /// Evaluation through per-variable power tables.
    pub fn eval_slice(&self, z: &[C64]) -> C64 {
        let deg = self.degree() as usize;
        let mut powers = vec![C64::new(1.0, 0.0); self.nvars * (deg + 1)];
        for (j, &zj) in z.iter().enumerate() {
            for d in 1..=deg {
                powers[j * (deg + 1) + d] = powers[j * (deg + 1) + d - 1] * zj;
            }
        }
        self.coeffs
            .iter()
            .map(|(alpha, c)| {
                alpha
                    .iter()
                    .enumerate()
                    .fold(*c, |acc, (j, &a)| acc * powers[j * (deg + 1) + a as usize])
            })
            .sum()
    }

    /// Evaluation at the complex point encoded by interleaved real coordinates.
    pub fn eval_real(&self, x: &[f64]) -> C64 {
        let z: Vec<C64> = x.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        self.eval_slice(&z)
    }

    /// Exact `∂/∂z_j`.
    pub fn partial(&self, j: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (alpha, c) in &self.coeffs {
            if alpha[j] == 0 {
                continue;
            }
            let mut beta = alpha.clone();
            beta[j] -= 1;
            *out.coeffs.entry(beta).or_insert(C64::new(0.0, 0.0)) += c * alpha[j] as f64;
        }
        out.prune();
        out
    }

    /// Exact `∂^α`.
    pub fn derivative(&self, alpha: &[u32]) -> Self {
        let mut out = self.clone();
        for (j, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                out = out.partial(j);
            }
        }
        out
    }

    pub fn cgrad(&self, z: &ComplexVector) -> Result<ComplexVector> {
        self.check_dim(z.len())?;
        Ok(ComplexVector::from_fn(self.nvars, |j, _| {
            self.partial(j).eval_slice(z.as_slice())
        }))
    }

    pub fn chessian(&self, z: &ComplexVector) -> Result<ComplexMatrix> {
        self.check_dim(z.len())?;
        let m = self.nvars;
        let mut h = ComplexMatrix::zeros(m, m);
        for i in 0..m {
            let pi = self.partial(i);
            for j in i..m {
                let v = pi.partial(j).eval_slice(z.as_slice());
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        Ok(h)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.nvars)?;
        let mut out = self.clone();
        for (alpha, c) in &other.coeffs {
            *out.coeffs.entry(alpha.clone()).or_insert(C64::new(0.0, 0.0)) += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= s;
        }
        out.prune();
        out
    }

    /// Product without the degree cap (internal use during substitution).
    fn mul_uncapped(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let ab: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *out.coeffs.entry(ab).or_insert(C64::new(0.0, 0.0)) += ca * cb;
            }
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.nvars)?;
        let out = self.mul_uncapped(other);
        if out.degree() > DEGREE_CAP {
            return Err(LabError::InvalidArgument(format!(
                "product degree {} exceeds the cap {DEGREE_CAP}",
                out.degree()
            )));
        }
        Ok(out)
    }

    /// `z ↦ φ(T z + b)` with `T` of shape `nvars × m`; the result has `m`
    /// variables.
    pub fn compose_affine(&self, t: &ComplexMatrix, b: &ComplexVector) -> Result<Self> {
        self.check_dim(t.nrows())?;
        self.check_dim(b.len())?;
        let m = t.ncols();
        // linear forms ℓ_j(z) = Σ_k T_jk z_k + b_j
        let forms: Vec<Self> = (0..self.nvars)
            .map(|j| {
                let mut f = Self::zero(m);
                f.coeffs.insert(vec![0; m], b[j]);
                for k in 0..m {
                    let mut e = vec![0; m];
                    e[k] = 1;
                    f.coeffs.insert(e, t[(j, k)]);
                }
                f.prune();
                f
            })
            .collect();
        let deg = self.degree() as usize;
        let mut powers: Vec<Vec<Self>> = Vec::with_capacity(self.nvars);
        for f in &forms {
            let mut row = vec![Self::constant(m, C64::new(1.0, 0.0))];
            for d in 1..=deg {
                let next = row[d - 1].mul_uncapped(f);
                row.push(next);
            }
            powers.push(row);
        }
        let mut out = Self::zero(m);
        for (alpha, c) in &self.coeffs {
            let mut term = Self::constant(m, *c);
            for (j, &a) in alpha.iter().enumerate() {
                term = term.mul_uncapped(&powers[j][a as usize]);
            }
            for (beta, cb) in term.coeffs {
                *out.coeffs.entry(beta).or_insert(C64::new(0.0, 0.0)) += cb;
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = Self::zero(nvars);
        p.coeffs.insert(vec![0; nvars], c);
        p.prune();
        p
    }

    /// Drops every monomial of total degree below `d`.
    pub fn truncate_below(&self, d: u32) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|a, _| a.iter().sum::<u32>() >= d);
        out
    }

    /// Homogeneous part of degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|a, _| a.iter().sum::<u32>() == d);
        out
    }

    /// True when `φ(z) = Σ_j p_j(z_j)`: every monomial involves one variable.
    pub fn is_separable(&self) -> bool {
        self.coeffs.keys().all(|a| a.iter().filter(|&&e| e > 0).count() <= 1)
    }

    /// Upper bound for `sup |∇φ|` over the polydisc `|z_j| ≤ ρ`, from the
    /// coefficients.
    pub fn gradient_bound(&self, rho: f64) -> f64 {
        (0..self.nvars)
            .map(|j| {
                self.partial(j)
                    .coeffs
                    .iter()
                    .map(|(a, c)| c.norm() * rho.powi(a.iter().sum::<u32>() as i32))
                    .sum::<f64>()
                    .powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.nvars {
            return Err(LabError::DimensionMismatch {
                expected: self.nvars,
                found,
            });
        }
        Ok(())
    }
}

/// Fixture text: one monomial per line as `i₁,i₂,… re im`, `#` comments.
impl FromStr for HolomorphicPolynomial {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let mut poly: Option<Self> = None;
        for (idx, raw) in s.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| LabError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected `multi-index re im`, found {} fields",
                    fields.len()
                )));
            }
            let alpha = fields[0]
                .split(',')
                .map(|t| t.trim().parse::<u32>())
                .collect::<std::result::Result<Vec<u32>, _>>()
                .map_err(|e| parse_err(format!("bad multi-index: {e}")))?;
            let re: f64 = fields[1]
                .parse()
                .map_err(|e| parse_err(format!("bad real part: {e}")))?;
            let im: f64 = fields[2]
                .parse()
                .map_err(|e| parse_err(format!("bad imaginary part: {e}")))?;
            let p = poly.get_or_insert_with(|| Self::zero(alpha.len().max(1)));
            p.add_term(alpha, C64::new(re, im))
                .map_err(|e| parse_err(e.to_string()))?;
        }
        let mut p = poly.ok_or(LabError::Parse {
            line: 0,
            message: "fixture has no monomials".into(),
        })?;
        p.prune();
        Ok(p)
    }
}

impl fmt::Display for HolomorphicPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            let zeros = vec!["0"; self.nvars].join(",");
            return writeln!(f, "{zeros} 0 0");
        }
        for (alpha, c) in &self.coeffs {
            let idx: Vec<String> = alpha.iter().map(u32::to_string).collect();
            writeln!(f, "{} {:e} {:e}", idx.join(","), c.re, c.im)?;
        }
        Ok(())
    }
}

/// `φ(z) = zᵗ M z` with `M` symmetric and nonsingular.
#[derive(Debug, Clone)]
pub struct QuadraticSurface {
    m: ComplexMatrix,
}

impl QuadraticSurface {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(LabError::InvalidArgument("M must be square".into()));
        }
        let deviation = linalg::symmetry_deviation(&m);
        if deviation > 1e-12 {
            return Err(LabError::NotSymmetric { deviation });
        }
        let det = linalg::det(&m).norm();
        if det <= 1e-10 {
            return Err(LabError::SingularHessian { det });
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn polynomial(&self) -> HolomorphicPolynomial {
        HolomorphicPolynomial::from_quadratic_form(&self.m)
    }

    /// Operator norm `‖M‖`.
    pub fn norm(&self) -> f64 {
        self.m.clone().svd(false, false).singular_values[0]
    }
}

/// Parameters of the normalized class: functions within `delta` of `½ z·z`
/// in every derivative of order 2 through `2n + 2` on the cube of side `r`.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceClassSpec {
    pub delta: f64,
    pub r: f64,
}

impl SurfaceClassSpec {
    pub fn new(delta: f64, r: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(LabError::InvalidArgument(format!(
                "class delta must lie in (0, 1), got {delta}"
            )));
        }
        if !(r > 0.0 && r <= 2.0) {
            return Err(LabError::InvalidArgument(format!(
                "class radius must lie in (0, 2], got {r}"
            )));
        }
        Ok(Self { delta, r })
    }

    pub fn derivative_order_cap(n: usize) -> u32 {
        (2 * n + 2) as u32
    }
}

#[derive(Debug, Clone)]
pub struct NormalVector {
    pub raw: ComplexVector,
    pub unit: ComplexVector,
}

/// `n(φ, a) = (conj ∂₁φ(a), …, conj ∂_{n−1}φ(a), −1)`.
pub fn normal(phi: &HolomorphicPolynomial, a: &ComplexVector) -> Result<NormalVector> {
    let g = phi.cgrad(a)?;
    let n = phi.ambient_dim();
    let raw = ComplexVector::from_fn(n, |j, _| if j + 1 < n { g[j].conj() } else { C64::new(-1.0, 0.0) });
    let norm = raw.norm();
    let unit = raw.map(|z| z / norm);
    Ok(NormalVector { raw, unit })
}

/// Real gradients `(∇φ₁, ∇φ₂)` of `φ₁ = ℜφ`, `φ₂ = ℑφ` in interleaved
/// coordinates, from the complex gradient via Cauchy–Riemann.
pub fn real_gradients(phi: &HolomorphicPolynomial, a: &ComplexVector) -> Result<(RealVector, RealVector)> {
    let g = phi.cgrad(a)?;
    let m = phi.nvars();
    let mut g1 = RealVector::zeros(2 * m);
    let mut g2 = RealVector::zeros(2 * m);
    for j in 0..m {
        let (u, v) = (g[j].re, g[j].im);
        g1[2 * j] = u;
        g1[2 * j + 1] = -v;
        g2[2 * j] = v;
        g2[2 * j + 1] = u;
    }
    Ok((g1, g2))
}

/// `L = (dΣ(a))*`, the `(2n−2) × 2n` matrix `[I | ∇φ₁ | ∇φ₂]`.
pub fn real_parametrization_maps(phi: &HolomorphicPolynomial, a: &ComplexVector) -> Result<RealMatrix> {
    let (g1, g2) = real_gradients(phi, a)?;
    let d = 2 * phi.nvars();
    let mut l = RealMatrix::zeros(d, d + 2);
    l.view_mut((0, 0), (d, d)).fill_with_identity();
    l.set_column(d, &g1);
    l.set_column(d + 1, &g2);
    Ok(l)
}

/// A map `ℝ^{2m} → ℝ²`, read as `(φ₁, φ₂)`.
pub trait RealPairMap {
    fn dim(&self) -> usize;
    fn eval_pair(&self, x: &[f64]) -> (f64, f64);
}

impl RealPairMap for HolomorphicPolynomial {
    fn dim(&self) -> usize {
        2 * self.nvars
    }

    fn eval_pair(&self, x: &[f64]) -> (f64, f64) {
        let v = self.eval_real(x);
        (v.re, v.im)
    }
}

/// Wraps a closure as a [`RealPairMap`], for maps that need not be
/// holomorphic.
pub struct PairFn<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> (f64, f64)> RealPairMap for PairFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_pair(&self, x: &[f64]) -> (f64, f64) {
        (self.f)(x)
    }
}

/// Central-difference real gradients of both components at `x`.
pub fn fd_gradients(map: &dyn RealPairMap, x: &[f64], h: f64) -> (RealVector, RealVector) {
    let d = map.dim();
    let mut g1 = RealVector::zeros(d);
    let mut g2 = RealVector::zeros(d);
    let mut xp = x.to_vec();
    for k in 0..d {
        xp[k] = x[k] + h;
        let (p1, p2) = map.eval_pair(&xp);
        xp[k] = x[k] - h;
        let (m1, m2) = map.eval_pair(&xp);
        xp[k] = x[k];
        g1[k] = (p1 - m1) / (2.0 * h);
        g2[k] = (p2 - m2) / (2.0 * h);
    }
    (g1, g2)
}

/// `max |∂φ₁/∂x_j − ∂φ₂/∂y_j| + |∂φ₁/∂y_j + ∂φ₂/∂x_j|` over samples and `j`.
pub fn cauchy_riemann_residual(map: &dyn RealPairMap, samples: &[Vec<f64>], h: f64) -> f64 {
    let mut worst = 0.0f64;
    for x in samples {
        let (g1, g2) = fd_gradients(map, x, h);
        for j in 0..map.dim() / 2 {
            let r = (g1[2 * j] - g2[2 * j + 1]).abs() + (g1[2 * j + 1] + g2[2 * j]).abs();
            worst = worst.max(r);
        }
    }
    worst
}

/// Real Hessian of `s φ₁ + t φ₂` assembled from the complex Hessian.
pub fn real_hessian(phi: &HolomorphicPolynomial, z: &ComplexVector, s: f64, t: f64) -> Result<RealMatrix> {
    let h = phi.chessian(z)?;
    let m = phi.nvars();
    let mut out = RealMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        for k in 0..m {
            let (p, q) = (h[(j, k)].re, h[(j, k)].im);
            let xx = s * p + t * q;
            let xy = t * p - s * q;
            out[(2 * j, 2 * k)] = xx;
            out[(2 * j, 2 * k + 1)] = xy;
            out[(2 * j + 1, 2 * k)] = xy;
            out[(2 * j + 1, 2 * k + 1)] = -xx;
        }
    }
    Ok(out)
}

/// Second-order central differences of `s φ₁ + t φ₂`.
pub fn real_hessian_fd(map: &dyn RealPairMap, x: &[f64], s: f64, t: f64, h: f64) -> RealMatrix {
    let d = map.dim();
    let f = |y: &[f64]| {
        let (a, b) = map.eval_pair(y);
        s * a + t * b
    };
    let mut out = RealMatrix::zeros(d, d);
    let mut y = x.to_vec();
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                y.copy_from_slice(x);
                y[i] += si * h;
                y[j] += sj * h;
                acc += w * f(&y);
            }
            let v = acc / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `(|det Hess_ℝ(sφ₁ + tφ₂)(z)|, (s² + t²)^{n−1} |det Hφ(z)|²)`.
pub fn hessian_identity_check(phi: &HolomorphicPolynomial, z: &ComplexVector, s: f64, t: f64) -> Result<(f64, f64)> {
    let real = real_hessian(phi, z, s, t)?;
    let lhs = linalg::det(&real).abs();
    let hc = phi.chessian(z)?;
    let rhs = (s * s + t * t).powi(phi.nvars() as i32) * linalg::det(&hc).norm_sqr();
    Ok((lhs, rhs))
}

/// Evaluation grid for [`class_check`]: `points` per real axis on the cube
/// of side `r` centered at the origin, thinned so the total stays at most
/// `cap`.
fn class_grid(nvars: usize, r: f64, cap: usize) -> Vec<Vec<C64>> {
    let d = 2 * nvars;
    let mut per_axis = 5usize;
    while per_axis > 2 && per_axis.pow(d as u32) > cap {
        per_axis -= 1;
    }
    let nodes: Vec<f64> = (0..per_axis)
        .map(|i| -r / 2.0 + r * i as f64 / (per_axis - 1) as f64)
        .collect();
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for xk in x.iter_mut() {
                *xk = nodes[idx % per_axis];
                idx /= per_axis;
            }
            x.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
        })
        .collect()
}

/// All multi-indices in `nvars` variables with total degree in `lo..=hi`.
pub fn multi_indices(nvars: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    fn go(nvars: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == nvars {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=remaining).rev() {
            prefix.push(a);
            go(nvars, remaining - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in lo..=hi {
        go(nvars, d, &mut Vec::new(), &mut out);
    }
    out
}

/// Membership test for the normalized class.
///
/// The derivative bound is sampled on a grid, so `max_deviation` is a lower
/// bound for the true supremum. A nonzero constant or linear coefficient
/// fails immediately and is reported as that coefficient's modulus.
pub fn class_check(g: &HolomorphicPolynomial, spec: &SurfaceClassSpec) -> (bool, f64) {
    let low = g
        .terms()
        .filter(|(a, _)| a.iter().sum::<u32>() <= 1)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    if low > 0.0 {
        return (false, low);
    }
    let nvars = g.nvars();
    let diff = g
        .add(&HolomorphicPolynomial::half_dot(nvars).scale(C64::new(-1.0, 0.0)))
        .expect("same dimension");
    let cap = SurfaceClassSpec::derivative_order_cap(nvars + 1);
    let grid = class_grid(nvars, spec.r, 100_000);
    let mut worst = 0.0f64;
    for alpha in multi_indices(nvars, 2, cap) {
        let d = diff.derivative(&alpha);
        if d.terms().next().is_none() {
            continue;
        }
        for z in &grid {
            worst = worst.max(d.eval_slice(z).norm());
        }
    }
    (worst < spec.delta, worst)
}

/// `[g]^ε_{z₀}`: recenters at `z₀`, zooms by `ε`, strips the affine part,
/// and undoes the Takagi factorization `Hg(z₀) = Uᵗ D U` so the quadratic
/// part becomes `½ z·z`.
///
/// The recentred function is `ε⁻² (g(εz + z₀) − g(z₀) − ε ∇g(z₀)·z)`, whose
/// quadratic part is `½ zᵗ Hg(z₀) z`.
pub fn normalize_at(g: &HolomorphicPolynomial, z0: &ComplexVector, eps: f64) -> Result<HolomorphicPolynomial> {
    if !(eps > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let m = g.nvars();
    let h = g.chessian(z0)?;
    let det = linalg::det(&h).norm();
    if det <= SINGULAR_HESSIAN {
        return Err(LabError::SingularHessian { det });
    }
    let zoom = ComplexMatrix::identity(m, m) * C64::new(eps, 0.0);
    let recentred = g
        .compose_affine(&zoom, z0)?
        .truncate_below(2)
        .scale(C64::new(eps.powi(-2), 0.0));
    let tk = takagi(&h)?;
    let sqrt_d = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        m,
        tk.d.iter().map(|&x| C64::new(x.max(0.0).sqrt(), 0.0)),
    ));
    let s = sqrt_d * &tk.u;
    let s_inv = s.try_inverse().ok_or(LabError::SingularHessian { det })?;
    let out = recentred.compose_affine(&s_inv, &ComplexVector::zeros(m))?;
    Ok(out.truncate_below(2))
}
