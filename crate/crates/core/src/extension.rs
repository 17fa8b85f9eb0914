//! Oscillatory quadrature for the extension operator
//! `E f(w) = ∫_D e^{i w⊙(z, φ(z))} f(z) dz`.

use serde::Serialize;

use crate::rng::ordered_blocks;
use crate::surface::{HolomorphicPolynomial, QuadraticSurface};
use crate::{ComplexVector, LabError, Result, C64};

/// Ceiling on the number of integrand evaluations for one call.
pub const POINT_BUDGET: f64 = 4e8;
/// Smallest automatic resolution per axis.
pub const MIN_POINTS: usize = 16;

/// Largest admissible `|w|` for ambient complex dimension `n`.
pub fn frequency_cap(n: usize) -> f64 {
    match n {
        0..=2 => 256.0,
        3 => 64.0,
        _ => 16.0,
    }
}

/// Axis-aligned box in `ℝ^{2n−2}` (interleaved coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    center: Vec<f64>,
    half_widths: Vec<f64>,
}

impl DomainBox {
    pub fn new(center: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        if center.len() != half_widths.len() || center.is_empty() || !center.len().is_multiple_of(2) {
            return Err(LabError::InvalidArgument(format!(
                "box needs matching even dimensions, got {} and {}",
                center.len(),
                half_widths.len()
            )));
        }
        if let Some(h) = half_widths.iter().find(|&&h| !(h > 0.0 && h <= 2.0)) {
            return Err(LabError::InvalidArgument(format!(
                "half-widths must lie in (0, 2], got {h}"
            )));
        }
        Ok(Self { center, half_widths })
    }

    /// `Q(a, r)`: the cube centered at `a` with side length `r`.
    pub fn cube(center: Vec<f64>, side: f64) -> Result<Self> {
        let d = center.len();
        Self::new(center, vec![side / 2.0; d])
    }

    /// `Q(0, 1)` in `ℝ^dim`.
    pub fn unit_cube(dim: usize) -> Self {
        Self::cube(vec![0.0; dim], 1.0).expect("unit cube")
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn lo(&self, k: usize) -> f64 {
        self.center[k] - self.half_widths[k]
    }

    pub fn hi(&self, k: usize) -> f64 {
        self.center[k] + self.half_widths[k]
    }

    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|h| 2.0 * h).product()
    }

    pub fn contains_box(&self, other: &DomainBox) -> bool {
        const SLACK: f64 = 1e-12;
        other.dim() == self.dim()
            && (0..self.dim()).all(|k| other.lo(k) >= self.lo(k) - SLACK && other.hi(k) <= self.hi(k) + SLACK)
    }

    /// Radius `ρ` with `|z_j| ≤ ρ` for every complex coordinate in the box.
    pub fn polydisc_radius(&self) -> f64 {
        (0..self.dim() / 2)
            .map(|j| {
                let x = self.center[2 * j].abs() + self.half_widths[2 * j];
                let y = self.center[2 * j + 1].abs() + self.half_widths[2 * j + 1];
                x.hypot(y)
            })
            .fold(0.0, f64::max)
    }

    fn pair(&self, j: usize) -> DomainBox {
        DomainBox {
            center: self.center[2 * j..2 * j + 2].to_vec(),
            half_widths: self.half_widths[2 * j..2 * j + 2].to_vec(),
        }
    }
}

/// Real amplitude `f` on the parameter domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Amplitude {
    Indicator,
    /// `exp(−|x − c|² / (2σ²))`.
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
    },
    /// `Σ c_α x^α` in real coordinates.
    Polynomial {
        terms: Vec<(Vec<u32>, f64)>,
    },
    /// Multilinear interpolation of grid values over `domain`, zero outside.
    Tabulated {
        domain: DomainBox,
        shape: Vec<usize>,
        values: Vec<f64>,
    },
    /// `f_{a,r}(x) = r^{dim} f(a + r x)`.
    Rescaled {
        inner: Box<Amplitude>,
        a: Vec<f64>,
        r: f64,
    },
    Scaled {
        factor: f64,
        inner: Box<Amplitude>,
    },
}

impl Amplitude {
    pub fn gaussian(center: Vec<f64>, sigma: f64) -> Self {
        Amplitude::Gaussian { center, sigma }
    }

    pub fn rescaled(inner: Amplitude, a: Vec<f64>, r: f64) -> Self {
        Amplitude::Rescaled {
            inner: Box::new(inner),
            a,
            r,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Amplitude::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Amplitude::Indicator => 1.0,
            Amplitude::Gaussian { center, sigma } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (2.0 * sigma * sigma)).exp()
            }
            Amplitude::Polynomial { terms } => terms
                .iter()
                .map(|(alpha, c)| alpha.iter().zip(x).fold(*c, |acc, (&e, &xi)| acc * xi.powi(e as i32)))
                .sum(),
            Amplitude::Tabulated { domain, shape, values } => tabulated_eval(domain, shape, values, x),
            Amplitude::Rescaled { inner, a, r } => {
                let y: Vec<f64> = x.iter().zip(a).map(|(xi, ai)| ai + r * xi).collect();
                r.powi(x.len() as i32) * inner.eval(&y)
            }
            Amplitude::Scaled { factor, inner } => factor * inner.eval(x),
        }
    }

    /// Factors into one two-dimensional amplitude per complex variable, when
    /// the amplitude is a product of such factors.
    pub fn split(&self, nvars: usize) -> Option<Vec<Amplitude>> {
        if nvars == 1 {
            return Some(vec![self.clone()]);
        }
        match self {
            Amplitude::Indicator => Some(vec![Amplitude::Indicator; nvars]),
            Amplitude::Gaussian { center, sigma } => Some(
                (0..nvars)
                    .map(|j| Amplitude::gaussian(center[2 * j..2 * j + 2].to_vec(), *sigma))
                    .collect(),
            ),
            Amplitude::Polynomial { terms } if terms.len() == 1 => {
                let (alpha, c) = &terms[0];
                Some(
                    (0..nvars)
                        .map(|j| Amplitude::Polynomial {
                            terms: vec![(alpha[2 * j..2 * j + 2].to_vec(), if j == 0 { *c } else { 1.0 })],
                        })
                        .collect(),
                )
            }
            Amplitude::Rescaled { inner, a, r } => inner.split(nvars).map(|fs| {
                fs.into_iter()
                    .enumerate()
                    .map(|(j, f)| Amplitude::rescaled(f, a[2 * j..2 * j + 2].to_vec(), *r))
                    .collect()
            }),
            Amplitude::Scaled { factor, inner } => inner.split(nvars).map(|mut fs| {
                let first = fs[0].clone();
                fs[0] = first.scaled(*factor);
                fs
            }),
            _ => None,
        }
    }
}

fn tabulated_eval(domain: &DomainBox, shape: &[usize], values: &[f64], x: &[f64]) -> f64 {
    let d = domain.dim();
    let mut base = 0usize;
    let mut stride = 1usize;
    let mut idx = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for k in 0..d {
        let (lo, hi) = (domain.lo(k), domain.hi(k));
        if x[k] < lo || x[k] > hi {
            return 0.0;
        }
        let cells = (shape[k] - 1).max(1) as f64;
        let u = (x[k] - lo) / (hi - lo) * cells;
        let i = (u.floor() as usize).min(shape[k].saturating_sub(2));
        idx[k] = i;
        frac[k] = if shape[k] > 1 { u - i as f64 } else { 0.0 };
    }
    let strides: Vec<usize> = shape
        .iter()
        .map(|&s| {
            let cur = stride;
            stride *= s;
            cur
        })
        .collect();
    for k in 0..d {
        base += idx[k] * strides[k];
    }
    let mut total = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut off = base;
        for k in 0..d {
            let bit = (corner >> k) & 1;
            if bit == 1 {
                if shape[k] == 1 {
                    w = 0.0;
                    break;
                }
                w *= frac[k];
                off += strides[k];
            } else {
                w *= 1.0 - frac[k];
            }
        }
        if w != 0.0 {
            total += w * values[off];
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    Midpoint,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Zero selects the smallest resolution meeting the Nyquist requirement.
    pub points_per_axis: usize,
    pub rule: Rule,
    pub nyquist: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            points_per_axis: 0,
            rule: Rule::Midpoint,
            nyquist: 8.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.nyquist >= 4.0) {
            return Err(LabError::InvalidArgument(format!(
                "nyquist factor must be at least 4, got {}",
                self.nyquist
            )));
        }
        Ok(())
    }
}

/// Nodes and weights on `[lo, hi]`.
pub fn nodes(rule: Rule, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    match rule {
        Rule::Midpoint => {
            let h = (hi - lo) / n as f64;
            ((0..n).map(|i| lo + (i as f64 + 0.5) * h).collect(), vec![h; n])
        }
        Rule::GaussLegendre => {
            let (x, w) = gauss_legendre(n);
            (
                x.iter().map(|t| mid + half * t).collect(),
                w.iter().map(|v| half * v).collect(),
            )
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (t * p - pm1) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() <= 1e-15 * t.abs().max(1.0) {
                break;
            }
        }
        // recompute the derivative at the converged node
        let (mut p0, mut p1) = (1.0, t);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        if n > 1 {
            dp = nf * (t * p1 - p0) / (t * t - 1.0);
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Per-axis point counts demanded by the resolution invariant
/// `N ≥ nyq · (1 + |w|(1 + G)) / (2π) · length`, `G` bounding `|∇φ|` on `D`.
pub fn required_points(phi: &HolomorphicPolynomial, domain: &DomainBox, w: &[f64], nyquist: f64) -> Vec<usize> {
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let g = phi.gradient_bound(domain.polydisc_radius());
    let per_unit = nyquist * (1.0 + wn * (1.0 + g)) / (2.0 * std::f64::consts::PI);
    (0..domain.dim())
        .map(|k| ((per_unit * 2.0 * domain.half_widths[k]).ceil() as usize).max(1))
        .collect()
}

fn resolve_points(
    phi: &HolomorphicPolynomial,
    domain: &DomainBox,
    w: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<usize>> {
    quad.validate()?;
    let req = required_points(phi, domain, w, quad.nyquist);
    if quad.points_per_axis == 0 {
        return Ok(req.into_iter().map(|r| r.max(MIN_POINTS)).collect());
    }
    if let Some(&r) = req.iter().find(|&&r| r > quad.points_per_axis) {
        return Err(LabError::UnderResolved {
            required: r,
            provided: quad.points_per_axis,
        });
    }
    Ok(vec![quad.points_per_axis; domain.dim()])
}

/// `E_D^φ f(w)` by tensor-product quadrature.
///
/// When `φ` is a sum of one-variable polynomials and `f` factors over the
/// complex variables, the tensor sum factors into a product of
/// two-dimensional sums, which is evaluated instead.
pub fn extend(
    phi: &HolomorphicPolynomial,
    domain: &DomainBox,
    f: &Amplitude,
    w: &[f64],
    quad: &QuadratureSpec,
) -> Result<C64> {
    let points = resolve_points(phi, domain, w, quad)?;
    extend_with_points(phi, domain, f, w, quad.rule, &points)
}

/// Like [`extend`] with explicit per-axis point counts and no resolution
/// check.
pub fn extend_with_points(
    phi: &HolomorphicPolynomial,
    domain: &DomainBox,
    f: &Amplitude,
    w: &[f64],
    rule: Rule,
    points: &[usize],
) -> Result<C64> {
    let m = phi.nvars();
    let n = m + 1;
    if domain.dim() != 2 * m {
        return Err(LabError::DimensionMismatch {
            expected: 2 * m,
            found: domain.dim(),
        });
    }
    if w.len() != 2 * n {
        return Err(LabError::DimensionMismatch {
            expected: 2 * n,
            found: w.len(),
        });
    }
    let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cap = frequency_cap(n);
    if wnorm > cap {
        return Err(LabError::BudgetExceeded {
            what: format!("frequency |w| at n = {n}"),
            requested: wnorm,
            limit: cap,
        });
    }
    let wn = C64::new(w[2 * m], w[2 * m + 1]);
    let factors = if phi.is_separable() { f.split(m) } else { None };
    match factors {
        Some(fs) => {
            let cost: f64 = (0..m).map(|j| points[2 * j] as f64 * points[2 * j + 1] as f64).sum();
            check_budget(cost)?;
            let polys = univariate_parts(phi);
            let mut total = C64::new(1.0, 0.0);
            for j in 0..m {
                let sub = domain.pair(j);
                let xs = nodes(rule, sub.lo(0), sub.hi(0), points[2 * j]);
                let ys = nodes(rule, sub.lo(1), sub.hi(1), points[2 * j + 1]);
                let amp = &fs[j];
                total *= plane_sum(&polys[j], [w[2 * j], w[2 * j + 1]], wn, &xs, &ys, |x, y| {
                    amp.eval(&[x, y])
                });
            }
            Ok(total)
        }
        None => {
            let cost: f64 = points.iter().map(|&p| p as f64).product();
            check_budget(cost)?;
            Ok(tensor_sum(phi, domain, f, w, rule, points))
        }
    }
}

fn check_budget(cost: f64) -> Result<()> {
    if cost > POINT_BUDGET {
        return Err(LabError::BudgetExceeded {
            what: "quadrature points".into(),
            requested: cost,
            limit: POINT_BUDGET,
        });
    }
    Ok(())
}

/// Coefficient lists (ascending degree) of `p_j` with `φ(z) = Σ_j p_j(z_j)`;
/// the constant term goes to the first variable.
fn univariate_parts(phi: &HolomorphicPolynomial) -> Vec<Vec<C64>> {
    let m = phi.nvars();
    let deg = phi.degree() as usize;
    let mut out = vec![vec![C64::new(0.0, 0.0); deg + 1]; m];
    for (alpha, c) in phi.terms() {
        let j = alpha.iter().position(|&e| e > 0).unwrap_or(0);
        out[j][alpha[j] as usize] += c;
    }
    out
}

/// `Σ_{i,k} u_i v_k f(x_i, y_k) e^{i(w·(x,y) + ℜ(w_n conj p(x + iy)))}`,
/// rows summed in parallel and reduced in row order.
fn plane_sum<F>(p: &[C64], w: [f64; 2], wn: C64, xs: &(Vec<f64>, Vec<f64>), ys: &(Vec<f64>, Vec<f64>), amp: F) -> C64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rows = ordered_blocks(xs.0.len(), |i| {
        let x = xs.0[i];
        let mut acc = C64::new(0.0, 0.0);
        for (&y, &wy) in ys.0.iter().zip(&ys.1) {
            let a = amp(x, y);
            if a == 0.0 {
                continue;
            }
            let z = C64::new(x, y);
            let mut v = C64::new(0.0, 0.0);
            for c in p.iter().rev() {
                v = v * z + c;
            }
            let phase = w[0] * x + w[1] * y + wn.re * v.re + wn.im * v.im;
            let (s, co) = phase.sin_cos();
            acc += C64::new(co, s) * (a * wy);
        }
        acc * xs.1[i]
    });
    rows.into_iter().sum()
}

fn tensor_sum(
    phi: &HolomorphicPolynomial,
    domain: &DomainBox,
    f: &Amplitude,
    w: &[f64],
    rule: Rule,
    points: &[usize],
) -> C64 {
    let d = domain.dim();
    let m = d / 2;
    let wn = C64::new(w[d], w[d + 1]);
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
        .map(|k| nodes(rule, domain.lo(k), domain.hi(k), points[k]))
        .collect();
    let inner: usize = points[1..].iter().product();
    let rows = ordered_blocks(points[0], |i0| {
        let mut acc = C64::new(0.0, 0.0);
        let mut x = vec![0.0; d];
        let mut z = vec![C64::new(0.0, 0.0); m];
        x[0] = axes[0].0[i0];
        for mut flat in 0..inner {
            let mut weight = axes[0].1[i0];
            for k in 1..d {
                let i = flat % points[k];
                flat /= points[k];
                x[k] = axes[k].0[i];
                weight *= axes[k].1[i];
            }
            let a = f.eval(&x);
            if a == 0.0 {
                continue;
            }
            for j in 0..m {
                z[j] = C64::new(x[2 * j], x[2 * j + 1]);
            }
            let v = phi.eval_slice(&z);
            let lin: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
            let phase = lin + wn.re * v.re + wn.im * v.im;
            let (s, co) = phase.sin_cos();
            acc += C64::new(co, s) * (a * weight);
        }
        acc
    });
    rows.into_iter().sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFitResult {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub t_used: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Requested `t` values beyond the frequency cap.
    pub t_dropped: Vec<f64>,
}

pub const MIN_FIT_SAMPLES: usize = 6;

/// The default `t` ladder, ratio 1.5.
pub fn default_t_values() -> Vec<f64> {
    vec![8.0, 12.0, 18.0, 27.0, 40.0, 60.0, 91.0, 128.0]
}

/// Least-squares slope of `log|E f(0, t·ray)|` against `log t`.
pub fn decay_fit(
    phi: &HolomorphicPolynomial,
    domain: &DomainBox,
    f: &Amplitude,
    ray: [f64; 2],
    ts: &[f64],
    quad: &QuadratureSpec,
) -> Result<DecayFitResult> {
    let rn = ray[0].hypot(ray[1]);
    if (rn - 1.0).abs() > 1e-12 {
        return Err(LabError::InvalidArgument(format!(
            "ray must be a unit vector, |ray| = {rn}"
        )));
    }
    let n = phi.ambient_dim();
    let cap = frequency_cap(n);
    let (t_used, t_dropped): (Vec<f64>, Vec<f64>) = ts.iter().partition(|&&t| t <= cap);
    if t_used.len() < MIN_FIT_SAMPLES {
        return Err(LabError::InvalidArgument(format!(
            "decay fit needs at least {MIN_FIT_SAMPLES} t values within |w| ≤ {cap}, got {}",
            t_used.len()
        )));
    }
    let mut magnitudes = Vec::with_capacity(t_used.len());
    for &t in &t_used {
        let mut w = vec![0.0; 2 * n];
        w[2 * n - 2] = t * ray[0];
        w[2 * n - 1] = t * ray[1];
        let mag = extend(phi, domain, f, &w, quad)?.norm();
        if !(mag >= 1e-13) {
            return Err(LabError::UnstableFit { t, magnitude: mag });
        }
        magnitudes.push(mag);
    }
    let xs: Vec<f64> = t_used.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Ok(DecayFitResult {
        exponent: slope,
        intercept,
        residual,
        t_used,
        magnitudes,
        t_dropped,
    })
}

/// `(slope, intercept, rms residual)` of the ordinary least-squares line.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

/// Both sides of the parabolic rescaling identity for `ψ(z) = zᵗ M z`:
/// `|E_{Q(a,r)} f(w)|` and `|E_{Q(0,1)} f_{a,r}(r(w′ + w_n conj ∇ψ(a)), r² w_n)|`.
///
/// Both sides use the same per-axis resolution, the larger of the two
/// requirements, so their nodes correspond under the affine change of
/// variables.
pub fn parabolic_rescale_check(
    surface: &QuadraticSurface,
    f: &Amplitude,
    a: &[f64],
    r: f64,
    w: &[f64],
    quad: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let psi = surface.polynomial();
    let m = psi.nvars();
    let n = m + 1;
    if a.len() != 2 * m {
        return Err(LabError::DimensionMismatch {
            expected: 2 * m,
            found: a.len(),
        });
    }
    if w.len() != 2 * n {
        return Err(LabError::DimensionMismatch {
            expected: 2 * n,
            found: w.len(),
        });
    }
    let identity_case = r == 1.0 && a.iter().all(|&x| x == 0.0);
    let limit = 1.0 / ((2.0 * n as f64).sqrt() * (1.0 + 2.0 * surface.norm()));
    if !identity_case && !(r > 0.0 && r < limit) {
        return Err(LabError::RadiusTooLarge { r, limit });
    }
    let small = DomainBox::cube(a.to_vec(), r)?;
    let unit = DomainBox::unit_cube(2 * m);
    if !unit.contains_box(&small) {
        return Err(LabError::InvalidArgument("Q(a, r) must lie inside Q(0, 1)".into()));
    }
    let ac = ComplexVector::from_iterator(m, a.chunks_exact(2).map(|p| C64::new(p[0], p[1])));
    let grad = psi.cgrad(&ac)?;
    let wn = C64::new(w[2 * m], w[2 * m + 1]);
    let mut w2 = vec![0.0; 2 * n];
    for j in 0..m {
        let shifted = (C64::new(w[2 * j], w[2 * j + 1]) + wn * grad[j].conj()) * r;
        w2[2 * j] = shifted.re;
        w2[2 * j + 1] = shifted.im;
    }
    w2[2 * m] = r * r * wn.re;
    w2[2 * m + 1] = r * r * wn.im;
    let f_ar = Amplitude::rescaled(f.clone(), a.to_vec(), r);

    let points = if quad.points_per_axis == 0 {
        quad.validate()?;
        let p1 = required_points(&psi, &small, w, quad.nyquist);
        let p2 = required_points(&psi, &unit, &w2, quad.nyquist);
        p1.iter().zip(&p2).map(|(x, y)| (*x).max(*y).max(MIN_POINTS)).collect()
    } else {
        let p = resolve_points(&psi, &small, w, quad)?;
        resolve_points(&psi, &unit, &w2, quad)?;
        p
    };
    let lhs = extend_with_points(&psi, &small, f, w, quad.rule, &points)?.norm();
    let rhs = extend_with_points(&psi, &unit, &f_ar, &w2, quad.rule, &points)?.norm();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z2() -> HolomorphicPolynomial {
        HolomorphicPolynomial::from_terms(1, [(vec![2], C64::new(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        let i12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_relative_eq!(i12, 2.0 / 13.0, epsilon = 1e-14);
        let (x, w) = gauss_legendre(2000);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
        let ic: f64 = x.iter().zip(&w).map(|(x, w)| w * (50.0 * x).cos()).sum();
        assert_relative_eq!(ic, 2.0 * 50f64.sin() / 50.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_frequency_gives_measure() {
        let dom = DomainBox::new(vec![0.1, -0.2], vec![0.5, 0.25]).unwrap();
        let v = extend(
            &z2(),
            &dom,
            &Amplitude::Indicator,
            &[0.0; 4],
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_relative_eq!(v.re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(v.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_fourier_transform() {
        let sigma = 0.25;
        let c = vec![0.2, -0.1];
        let dom = DomainBox::cube(vec![0.0, 0.0], 4.0).unwrap();
        let f = Amplitude::gaussian(c.clone(), sigma);
        let w = [3.0, -5.0, 0.0, 0.0];
        let v = extend(&z2(), &dom, &f, &w, &QuadratureSpec::default()).unwrap();
        let k2 = w[0] * w[0] + w[1] * w[1];
        let amp = 2.0 * std::f64::consts::PI * sigma * sigma * (-sigma * sigma * k2 / 2.0).exp();
        let expect = C64::from_polar(amp, w[0] * c[0] + w[1] * c[1]);
        assert!((v - expect).norm() < 1e-6, "{v} vs {expect}");
    }

    /// Composite Simpson oracle for `∫_{-1}^{1} e^{i s x²} dx`.
    fn fresnel_like(s: f64) -> C64 {
        let n = 200_000;
        let h = 2.0 / n as f64;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..=n {
            let x = -1.0 + i as f64 * h;
            let wgt = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += C64::from_polar(wgt, s * x * x);
        }
        acc * (h / 3.0)
    }

    #[test]
    fn z_squared_on_square_factors() {
        let s = 7.0;
        let dom = DomainBox::cube(vec![0.0, 0.0], 2.0).unwrap();
        let quad = QuadratureSpec {
            rule: Rule::GaussLegendre,
            ..QuadratureSpec::default()
        };
        let v = extend(&z2(), &dom, &Amplitude::Indicator, &[0.0, 0.0, s, 0.0], &quad).unwrap();
        let f = fresnel_like(s);
        let expect = f * f.conj();
        assert!((v - expect).norm() < 1e-6, "{v} vs {expect}");
    }

    #[test]
    fn under_resolved_is_refused() {
        let dom = DomainBox::cube(vec![0.0, 0.0], 2.0).unwrap();
        let quad = QuadratureSpec {
            points_per_axis: 10,
            ..QuadratureSpec::default()
        };
        let err = extend(&z2(), &dom, &Amplitude::Indicator, &[0.0, 0.0, 100.0, 0.0], &quad).unwrap_err();
        assert!(matches!(err, LabError::UnderResolved { provided: 10, .. }));
    }

    #[test]
    fn frequency_cap_enforced() {
        let phi = HolomorphicPolynomial::sum_of_squares(2);
        let dom = DomainBox::cube(vec![0.0; 4], 1.0).unwrap();
        let err = extend(
            &phi,
            &dom,
            &Amplitude::Indicator,
            &[0.0, 0.0, 0.0, 0.0, 65.0, 0.0],
            &QuadratureSpec::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LabError::BudgetExceeded { .. }));
    }

    #[test]
    fn separable_path_matches_tensor_sum() {
        let phi = HolomorphicPolynomial::from_terms(
            2,
            [
                (vec![2, 0], C64::new(1.0, 0.2)),
                (vec![0, 2], C64::new(-0.5, 0.0)),
                (vec![0, 3], C64::new(0.1, 0.1)),
            ],
        )
        .unwrap();
        let dom = DomainBox::cube(vec![0.1, 0.0, -0.1, 0.05], 0.6).unwrap();
        let f = Amplitude::gaussian(vec![0.1, 0.0, -0.1, 0.0], 0.3);
        let w = [1.0, -2.0, 0.5, 0.3, 4.0, -3.0];
        let pts = [10, 9, 8, 7];
        let fast = extend_with_points(&phi, &dom, &f, &w, Rule::Midpoint, &pts).unwrap();
        let slow = tensor_sum(&phi, &dom, &f, &w, Rule::Midpoint, &pts);
        assert!((fast - slow).norm() < 1e-13 * slow.norm().max(1.0));
    }

    #[test]
    fn flat_surface_has_no_decay() {
        let phi = HolomorphicPolynomial::zero(1);
        let dom = DomainBox::cube(vec![0.0, 0.0], 4.0).unwrap();
        let f = Amplitude::gaussian(vec![0.0, 0.0], 0.5);
        let fit = decay_fit(
            &phi,
            &dom,
            &f,
            [1.0, 0.0],
            &default_t_values(),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!(fit.exponent.abs() <= 0.05);
    }

    #[test]
    fn z_squared_decay_small_sigma() {
        let dom = DomainBox::cube(vec![0.0, 0.0], 4.0).unwrap();
        let f = Amplitude::gaussian(vec![0.0, 0.0], 0.25);
        let fit = decay_fit(
            &z2(),
            &dom,
            &f,
            [1.0, 0.0],
            &default_t_values(),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((-1.2..=-0.8).contains(&fit.exponent), "{fit:?}");
    }

    #[test]
    fn rescale_identity_case() {
        let s = QuadraticSurface::new(crate::ComplexMatrix::identity(1, 1)).unwrap();
        let f = Amplitude::Indicator;
        let (l, r) = parabolic_rescale_check(
            &s,
            &f,
            &[0.0, 0.0],
            1.0,
            &[1.0, 2.0, 3.0, -1.0],
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn rescale_small_cap() {
        let s = QuadraticSurface::new(crate::ComplexMatrix::identity(1, 1)).unwrap();
        let f = Amplitude::gaussian(vec![0.3, 0.1], 0.2);
        let (l, r) = parabolic_rescale_check(
            &s,
            &f,
            &[0.3, 0.1],
            0.1,
            &[5.0, -12.0, 9.0, 13.0],
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_relative_eq!(l, r, max_relative = 1e-6);
        let (l0, r0) =
            parabolic_rescale_check(&s, &f, &[0.3, 0.1], 0.1, &[0.0; 4], &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(l0, r0, max_relative = 1e-12);
        assert!(matches!(
            parabolic_rescale_check(&s, &f, &[0.3, 0.1], 0.3, &[0.0; 4], &QuadratureSpec::default()),
            Err(LabError::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn tabulated_interpolates_linearly() {
        let dom = DomainBox::cube(vec![0.0, 0.0], 2.0).unwrap();
        let f = Amplitude::Tabulated {
            domain: dom,
            shape: vec![2, 2],
            values: vec![0.0, 1.0, 2.0, 3.0],
        };
        assert_relative_eq!(f.eval(&[0.0, 0.0]), 1.5);
        assert_relative_eq!(f.eval(&[1.0, -1.0]), 1.0);
        assert_eq!(f.eval(&[1.5, 0.0]), 0.0);
    }

    #[test]
    fn rescaled_split_keeps_jacobian() {
        let f = Amplitude::rescaled(
            Amplitude::gaussian(vec![0.1, 0.2, 0.3, 0.4], 0.5),
            vec![0.1, 0.0, 0.2, 0.0],
            0.5,
        );
        let parts = f.split(2).unwrap();
        let x = [0.3, -0.2, 0.1, 0.05];
        let prod = parts[0].eval(&x[..2]) * parts[1].eval(&x[2..]);
        assert_relative_eq!(prod, f.eval(&x), max_relative = 1e-14);
    }
}
