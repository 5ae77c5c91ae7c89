//! Scalar fields on ℝⁿ and their differential primitives: gradients,
//! Hessians, sample-relative convexity verdicts, the Jensen gap and the
//! Levi form on ℝ²ᵐ ≅ ℂᵐ.
//!
//! Catalog entries carry closed-form derivatives. Expression fields get an
//! exact gradient from dual numbers and a Hessian from central differences
//! of that gradient. [`DerivativeMode::FiniteDifference`] forces pure
//! finite differences of values for any field, which is how the analytic
//! formulas are cross-checked.

use std::fmt;

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exprlang::{self, Expr};
use crate::linalg::symmetric_eigenvalues;
use crate::par;
use crate::radial::RadialFunction;

/// Points closer than this to an `abs`/`max` locus are treated as kinks.
pub const KINK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    /// Closed forms where the body provides them, finite differences otherwise.
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldBody {
    /// `xᵀ A x`, `A` row-major.
    Quadratic(Vec<f64>),
    /// `e^{|x|²}`
    ExpNormSq,
    /// `e^{|x|}`
    ExpNorm,
    /// `|x|`
    Norm,
    /// `max_k (a_k·x + b_k)`; each row holds `n` coefficients then `b_k`.
    MaxAffine(Vec<Vec<f64>>),
    Affine {
        coeffs: Vec<f64>,
        offset: f64,
    },
    Const(f64),
    /// `g(|x|)`
    Radial(RadialFunction),
    Expr(Expr),
    Scaled(f64, Box<ScalarField>),
    Sum(Box<ScalarField>, Box<ScalarField>),
    Max(Box<ScalarField>, Box<ScalarField>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: usize,
    body: FieldBody,
    mode: DerivativeMode,
}

/// Symmetric `n×n` matrix of second derivatives, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianMatrix {
    n: usize,
    data: Vec<f64>,
}

impl HessianMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from row-major data, symmetrizing as `(H + Hᵀ)/2`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        let mut h = Self { n, data };
        h.symmetrize();
        h
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `vᵀ H v`
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| v[i] * (0..n).map(|j| self.data[i * n + j] * v[j]).sum::<f64>())
            .sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.data, self.n)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    fn scale(mut self, l: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= l);
        self
    }

    fn add(mut self, o: &Self) -> Self {
        self.data.iter_mut().zip(&o.data).for_each(|(a, b)| *a += b);
        self
    }

    /// Is `|H_ij - H_ji| ≤ tol` everywhere.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..n).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

impl ScalarField {
    pub fn new(dim: usize, body: FieldBody) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        match &body {
            FieldBody::Quadratic(a) => check_dim(dim * dim, a.len())?,
            FieldBody::MaxAffine(rows) => {
                if rows.is_empty() {
                    return Err(Error::InvalidArgument("max_affine needs at least one row".into()));
                }
                for r in rows {
                    check_dim(dim + 1, r.len())?;
                }
            }
            FieldBody::Affine { coeffs, .. } => check_dim(dim, coeffs.len())?,
            FieldBody::Expr(e) => check_dim(dim, e.dim())?,
            FieldBody::Scaled(_, f) => check_dim(dim, f.dim)?,
            FieldBody::Sum(a, b) | FieldBody::Max(a, b) => {
                check_dim(dim, a.dim)?;
                check_dim(dim, b.dim)?;
            }
            _ => {}
        }
        Ok(Self {
            dim,
            body,
            mode: DerivativeMode::Analytic,
        })
    }

    /// `|x|²` in `dim` dimensions.
    pub fn norm_sq(dim: usize) -> Self {
        let mut a = vec![0.0; dim * dim];
        (0..dim).for_each(|i| a[i * dim + i] = 1.0);
        Self::new(dim, FieldBody::Quadratic(a)).expect("valid quadratic")
    }

    pub fn quadratic(dim: usize, a: Vec<f64>) -> Result<Self> {
        Self::new(dim, FieldBody::Quadratic(a))
    }

    pub fn exp_norm_sq(dim: usize) -> Self {
        Self::new(dim, FieldBody::ExpNormSq).expect("valid")
    }

    pub fn exp_norm(dim: usize) -> Self {
        Self::new(dim, FieldBody::ExpNorm).expect("valid")
    }

    pub fn norm(dim: usize) -> Self {
        Self::new(dim, FieldBody::Norm).expect("valid")
    }

    pub fn max_affine(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(dim, FieldBody::MaxAffine(rows))
    }

    pub fn affine(coeffs: Vec<f64>, offset: f64) -> Self {
        Self::new(coeffs.len(), FieldBody::Affine { coeffs, offset }).expect("valid")
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, FieldBody::Const(c)).expect("valid")
    }

    pub fn radial(dim: usize, profile: RadialFunction) -> Self {
        Self::new(dim, FieldBody::Radial(profile)).expect("valid")
    }

    pub fn expr(text: &str, dim: usize) -> Result<Self> {
        Self::new(dim, FieldBody::Expr(exprlang::parse(text, dim)?))
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            dim: self.dim,
            body: FieldBody::Scaled(lambda, Box::new(self.clone())),
            mode: self.mode,
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            body: FieldBody::Sum(Box::new(self.clone()), Box::new(other.clone())),
            mode: self.mode,
        })
    }

    pub fn max(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            body: FieldBody::Max(Box::new(self.clone()), Box::new(other.clone())),
            mode: self.mode,
        })
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn body(&self) -> &FieldBody {
        &self.body
    }

    /// Parses a catalog spec: `quadratic:<rows>` (rows split by `;`, entries
    /// by `,`; a single number `c` means `c·I`), `exp_norm_sq`, `exp_norm`,
    /// `norm`, `max_affine:<rows>` (each row `a1,..,an,b`),
    /// `affine:a1,..,an,b`, `const:c`, `radial:<profile>`, `neg:<spec>`, or
    /// `expr:<text>`.
    pub fn from_spec(spec: &str, dim: usize) -> Result<Self> {
        let spec = spec.trim();
        let bad = |reason: String| Error::FieldSpec {
            spec: spec.to_string(),
            reason,
        };
        let numbers = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("'{s}' is not a comma-separated list of numbers")))
        };
        let rows = |s: &str| -> Result<Vec<Vec<f64>>> { s.split(';').map(numbers).collect() };
        let (head, body) = match spec.split_once(':') {
            Some((h, b)) => (h.trim(), b),
            None => (spec, ""),
        };
        let field = match head {
            "exp_norm_sq" => Self::exp_norm_sq(dim),
            "exp_norm" => Self::exp_norm(dim),
            "norm" => Self::norm(dim),
            "quadratic" => {
                let r = rows(body)?;
                if r.len() == 1 && r[0].len() == 1 {
                    let c = r[0][0];
                    let mut a = vec![0.0; dim * dim];
                    (0..dim).for_each(|i| a[i * dim + i] = c);
                    Self::quadratic(dim, a)?
                } else {
                    if r.len() != dim || r.iter().any(|row| row.len() != dim) {
                        return Err(bad(format!("quadratic form must be {dim}x{dim}")));
                    }
                    Self::quadratic(dim, r.concat())?
                }
            }
            "max_affine" => Self::max_affine(dim, rows(body)?)?,
            "affine" => {
                let mut v = numbers(body)?;
                if v.len() != dim + 1 {
                    return Err(bad(format!("affine needs {} numbers", dim + 1)));
                }
                let offset = v.pop().unwrap_or(0.0);
                Self::affine(v, offset)
            }
            "const" => {
                let v = numbers(body)?;
                if v.len() != 1 {
                    return Err(bad("const takes one number".into()));
                }
                Self::constant(dim, v[0])
            }
            "radial" => Self::radial(dim, RadialFunction::parse(body)?),
            "neg" => Self::from_spec(body, dim)?.negated(),
            "expr" => Self::expr(body, dim)?,
            other => return Err(bad(format!("unknown field kind '{other}'"))),
        };
        Ok(field)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.body {
            FieldBody::Quadratic(a) => quad_form(a, x),
            FieldBody::ExpNormSq => norm_sq(x).exp(),
            FieldBody::ExpNorm => norm(x).exp(),
            FieldBody::Norm => norm(x),
            FieldBody::MaxAffine(rows) => rows
                .iter()
                .map(|r| affine_value(r, x))
                .fold(f64::NEG_INFINITY, f64::max),
            FieldBody::Affine { coeffs, offset } => dot(coeffs, x) + offset,
            FieldBody::Const(c) => *c,
            FieldBody::Radial(g) => g.value(norm(x))?,
            FieldBody::Expr(e) => e.evaluate(x)?,
            FieldBody::Scaled(l, f) => l * f.value(x)?,
            FieldBody::Sum(a, b) => a.value(x)? + b.value(x)?,
            FieldBody::Max(a, b) => a.value(x)?.max(b.value(x)?),
        })
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        match self.mode {
            DerivativeMode::Analytic => self.gradient_analytic(x),
            DerivativeMode::FiniteDifference => self.gradient_fd(x),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Result<HessianMatrix> {
        check_dim(self.dim, x.len())?;
        match self.mode {
            DerivativeMode::Analytic => self.hessian_analytic(x),
            DerivativeMode::FiniteDifference => self.hessian_fd(x),
        }
    }

    /// Central differences of values, step `1e-6·(1 + |x|)`.
    fn gradient_fd(&self, x: &[f64]) -> Result<Vec<f64>> {
        let h = 1e-6 * (1.0 + norm(x));
        let mut y = x.to_vec();
        let mut g = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            y[i] = x[i] + h;
            let up = self.value(&y)?;
            y[i] = x[i] - h;
            let down = self.value(&y)?;
            y[i] = x[i];
            g.push((up - down) / (2.0 * h));
        }
        Ok(g)
    }

    /// Second differences of values, step `1e-4·(1 + |x|)`.
    fn hessian_fd(&self, x: &[f64]) -> Result<HessianMatrix> {
        let n = self.dim;
        let h = 1e-4 * (1.0 + norm(x));
        let mut out = vec![0.0; n * n];
        let mut y = x.to_vec();
        let f0 = self.value(x)?;
        for i in 0..n {
            y[i] = x[i] + h;
            let up = self.value(&y)?;
            y[i] = x[i] - h;
            let down = self.value(&y)?;
            y[i] = x[i];
            out[i * n + i] = (up - 2.0 * f0 + down) / (h * h);
            for j in (i + 1)..n {
                let mut corner = |si: f64, sj: f64| -> Result<f64> {
                    y[i] = x[i] + si * h;
                    y[j] = x[j] + sj * h;
                    let v = self.value(&y);
                    y[i] = x[i];
                    y[j] = x[j];
                    v
                };
                let v =
                    (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?) / (4.0 * h * h);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        Ok(HessianMatrix::from_row_major(n, out))
    }

    fn gradient_analytic(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        Ok(match &self.body {
            FieldBody::Quadratic(a) => (0..n)
                .map(|i| (0..n).map(|j| (a[i * n + j] + a[j * n + i]) * x[j]).sum())
                .collect(),
            FieldBody::ExpNormSq => {
                let e = norm_sq(x).exp();
                x.iter().map(|v| 2.0 * v * e).collect()
            }
            FieldBody::ExpNorm => {
                let r = norm(x);
                if r == 0.0 {
                    vec![0.0; n]
                } else {
                    let s = r.exp() / r;
                    x.iter().map(|v| v * s).collect()
                }
            }
            FieldBody::Norm => {
                let r = norm(x);
                if r == 0.0 {
                    vec![0.0; n]
                } else {
                    x.iter().map(|v| v / r).collect()
                }
            }
            FieldBody::MaxAffine(rows) => {
                let mut best = &rows[0];
                let mut best_v = affine_value(best, x);
                for r in &rows[1..] {
                    let v = affine_value(r, x);
                    if v > best_v {
                        best = r;
                        best_v = v;
                    }
                }
                best[..n].to_vec()
            }
            FieldBody::Affine { coeffs, .. } => coeffs.clone(),
            FieldBody::Const(_) => vec![0.0; n],
            FieldBody::Radial(g) => {
                let r = norm(x);
                if r == 0.0 {
                    vec![0.0; n]
                } else {
                    let (_, g1, _) = g.derivs(r)?;
                    x.iter().map(|v| g1 * v / r).collect()
                }
            }
            FieldBody::Expr(e) => e.gradient(x)?,
            FieldBody::Scaled(l, f) => f.gradient(x)?.into_iter().map(|v| l * v).collect(),
            FieldBody::Sum(a, b) => {
                let ga = a.gradient(x)?;
                let gb = b.gradient(x)?;
                ga.iter().zip(&gb).map(|(u, v)| u + v).collect()
            }
            FieldBody::Max(a, b) => {
                if a.value(x)? >= b.value(x)? {
                    a.gradient(x)?
                } else {
                    b.gradient(x)?
                }
            }
        })
    }

    fn hessian_analytic(&self, x: &[f64]) -> Result<HessianMatrix> {
        let n = self.dim;
        let kink = || Error::InvalidArgument(format!("field is not twice differentiable at {x:?}"));
        Ok(match &self.body {
            FieldBody::Quadratic(a) => {
                let data = (0..n * n).map(|k| a[k] + a[(k % n) * n + k / n]).collect();
                HessianMatrix::from_row_major(n, data)
            }
            FieldBody::ExpNormSq => {
                let e = norm_sq(x).exp();
                let data = (0..n * n)
                    .map(|k| {
                        let (i, j) = (k / n, k % n);
                        e * (if i == j { 2.0 } else { 0.0 } + 4.0 * x[i] * x[j])
                    })
                    .collect();
                HessianMatrix::from_row_major(n, data)
            }
            FieldBody::ExpNorm | FieldBody::Norm => {
                let r = norm(x);
                if r == 0.0 {
                    return Err(kink());
                }
                let (radial_part, tangential_part) = match self.body {
                    FieldBody::ExpNorm => (r.exp(), r.exp() / r),
                    _ => (0.0, 1.0 / r),
                };
                radial_hessian(x, r, radial_part, tangential_part)
            }
            FieldBody::MaxAffine(_) | FieldBody::Affine { .. } | FieldBody::Const(_) => HessianMatrix::zeros(n),
            FieldBody::Radial(g) => {
                let r = norm(x);
                let (_, g1, g2) = g.derivs(r)?;
                if r == 0.0 {
                    if g1 != 0.0 {
                        return Err(kink());
                    }
                    let mut h = HessianMatrix::zeros(n);
                    (0..n).for_each(|i| h.data[i * n + i] = g2);
                    h
                } else {
                    radial_hessian(x, r, g2, g1 / r)
                }
            }
            FieldBody::Expr(e) => HessianMatrix::from_row_major(n, e.hessian_fd(x)?),
            FieldBody::Scaled(l, f) => f.hessian(x)?.scale(*l),
            FieldBody::Sum(a, b) => a.hessian(x)?.add(&b.hessian(x)?),
            FieldBody::Max(a, b) => {
                if a.value(x)? >= b.value(x)? {
                    a.hessian(x)?
                } else {
                    b.hessian(x)?
                }
            }
        })
    }

    /// Distance-like gap to the nearest nondifferentiable locus;
    /// `f64::INFINITY` for smooth fields.
    pub fn kink_distance(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.body {
            FieldBody::ExpNorm | FieldBody::Norm => norm(x),
            FieldBody::MaxAffine(rows) => {
                let mut vals: Vec<f64> = rows.iter().map(|r| affine_value(r, x)).collect();
                vals.sort_by(|a, b| b.total_cmp(a));
                if vals.len() < 2 {
                    f64::INFINITY
                } else {
                    vals[0] - vals[1]
                }
            }
            FieldBody::Radial(g) => {
                let (_, g1, _) = g.derivs(0.0)?;
                if g1 != 0.0 {
                    norm(x)
                } else {
                    f64::INFINITY
                }
            }
            FieldBody::Expr(e) => e.kink_distance(x)?,
            FieldBody::Scaled(_, f) => f.kink_distance(x)?,
            FieldBody::Sum(a, b) => a.kink_distance(x)?.min(b.kink_distance(x)?),
            FieldBody::Max(a, b) => {
                let gap = (a.value(x)? - b.value(x)?).abs();
                gap.min(a.kink_distance(x)?).min(b.kink_distance(x)?)
            }
            _ => f64::INFINITY,
        })
    }

    pub fn is_kink(&self, x: &[f64]) -> Result<bool> {
        Ok(self.kink_distance(x)? < KINK_TOLERANCE)
    }

    /// Whether closed-form first and second derivatives exist for this body.
    pub fn has_analytic_hessian(&self) -> bool {
        match &self.body {
            FieldBody::Expr(_) => false,
            FieldBody::Scaled(_, f) => f.has_analytic_hessian(),
            FieldBody::Sum(a, b) | FieldBody::Max(a, b) => a.has_analytic_hessian() && b.has_analytic_hessian(),
            _ => true,
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match &self.body {
            FieldBody::Quadratic(a) => {
                let rows: Vec<String> = a.chunks(self.dim).map(list).collect();
                write!(f, "quadratic:{}", rows.join(";"))
            }
            FieldBody::ExpNormSq => f.write_str("exp_norm_sq"),
            FieldBody::ExpNorm => f.write_str("exp_norm"),
            FieldBody::Norm => f.write_str("norm"),
            FieldBody::MaxAffine(rows) => {
                let rows: Vec<String> = rows.iter().map(|r| list(r)).collect();
                write!(f, "max_affine:{}", rows.join(";"))
            }
            FieldBody::Affine { coeffs, offset } => write!(f, "affine:{},{offset}", list(coeffs)),
            FieldBody::Const(c) => write!(f, "const:{c}"),
            FieldBody::Radial(g) => write!(f, "radial:{g}"),
            FieldBody::Expr(e) => write!(f, "expr:{e}"),
            FieldBody::Scaled(l, inner) if *l == -1.0 => write!(f, "neg:{inner}"),
            FieldBody::Scaled(l, inner) => write!(f, "{l}*({inner})"),
            FieldBody::Sum(a, b) => write!(f, "({a})+({b})"),
            FieldBody::Max(a, b) => write!(f, "max({a}, {b})"),
        }
    }
}

/// `H = a·x̂x̂ᵀ + b·(I − x̂x̂ᵀ)`
fn radial_hessian(x: &[f64], r: f64, a: f64, b: f64) -> HessianMatrix {
    let n = x.len();
    let data = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let proj = x[i] * x[j] / (r * r);
            a * proj + b * (if i == j { 1.0 } else { 0.0 } - proj)
        })
        .collect();
    HessianMatrix::from_row_major(n, data)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn affine_value(row: &[f64], x: &[f64]) -> f64 {
    dot(&row[..x.len()], x) + row[x.len()]
}

fn quad_form(a: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    (0..n)
        .map(|i| x[i] * (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>())
        .sum()
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

/// ∇f(x).
pub fn gradient(f: &ScalarField, x: &[f64]) -> Result<Vec<f64>> {
    f.gradient(x)
}

/// Hessian of `f` at `x`, exactly symmetric.
pub fn hessian(f: &ScalarField, x: &[f64]) -> Result<HessianMatrix> {
    f.hessian(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Convexity {
    Convex,
    NotConvex,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityVerdict {
    pub status: Convexity,
    /// Sample point with the most negative Hessian eigenvalue (when NotConvex).
    pub witness: Option<Vec<f64>>,
    /// Smallest eigenvalue seen over the smooth sample points.
    pub min_eigenvalue: f64,
    /// First sample point that fell on a kink (when Undetermined).
    pub kink_point: Option<Vec<f64>>,
    pub points_checked: usize,
}

/// Sample-relative convexity: `Convex` when every Hessian eigenvalue at
/// every sample point is `≥ −tol`.
pub fn convexity_verdict(f: &ScalarField, sample: &[Vec<f64>], tol: f64) -> Result<ConvexityVerdict> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("convexity sample is empty".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    // None marks a kink
    let per_point: Vec<Option<f64>> = par::try_map(sample, |x| -> Result<Option<f64>> {
        if f.is_kink(x)? {
            Ok(None)
        } else {
            Ok(Some(f.hessian(x)?.min_eigenvalue()))
        }
    })?;
    let mut min_eig = f64::INFINITY;
    let mut witness = None;
    let mut kink_point = None;
    for (x, m) in sample.iter().zip(&per_point) {
        match m {
            None => {
                if kink_point.is_none() {
                    kink_point = Some(x.clone());
                }
            }
            Some(m) => {
                if *m < min_eig {
                    min_eig = *m;
                    if *m < -tol {
                        witness = Some(x.clone());
                    }
                }
            }
        }
    }
    let status = if witness.is_some() {
        Convexity::NotConvex
    } else if kink_point.is_some() {
        Convexity::Undetermined
    } else {
        Convexity::Convex
    };
    Ok(ConvexityVerdict {
        status,
        witness,
        min_eigenvalue: min_eig,
        kink_point,
        points_checked: sample.len(),
    })
}

/// `Σ wᵢ f(xᵢ) − f(Σ wᵢ xᵢ)`, nonnegative for convex `f`.
pub fn jensen_gap(f: &ScalarField, points: &[Vec<f64>], weights: &[f64]) -> Result<f64> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "need matching nonempty points and weights ({} vs {})",
            points.len(),
            weights.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightNormalization { sum });
    }
    let mut mean = vec![0.0; f.dim()];
    let mut avg_value = 0.0;
    for (x, w) in points.iter().zip(weights) {
        check_dim(f.dim(), x.len())?;
        avg_value += w * f.value(x)?;
        mean.iter_mut().zip(x).for_each(|(m, v)| *m += w * v);
    }
    Ok(avg_value - f.value(&mean)?)
}

/// Levi form `4·∂²f/∂z^α∂z̄^β` with `z^α = x_{2α−1} + i·x_{2α}`, as real and
/// imaginary `m×m` parts.
#[derive(Debug, Clone, PartialEq)]
pub struct LeviForm {
    pub m: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl LeviForm {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = self.m;
        (0..m).all(|a| {
            (0..m).all(|b| {
                (self.re[a * m + b] - self.re[b * m + a]).abs() <= tol
                    && (self.im[a * m + b] + self.im[b * m + a]).abs() <= tol
            })
        })
    }

    /// Eigenvalues, ascending, via the real embedding `[[Re, −Im], [Im, Re]]`
    /// whose spectrum is that of the Hermitian form with each value doubled.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.m;
        let n = 2 * m;
        let mut big = vec![0.0; n * n];
        for a in 0..m {
            for b in 0..m {
                let re = self.re[a * m + b];
                let im = self.im[a * m + b];
                big[a * n + b] = re;
                big[(a + m) * n + (b + m)] = re;
                big[a * n + (b + m)] = -im;
                big[(a + m) * n + b] = im;
            }
        }
        symmetric_eigenvalues(&big, n).into_iter().step_by(2).collect()
    }
}

pub fn levi_form(f: &ScalarField, x: &[f64]) -> Result<LeviForm> {
    let n = f.dim();
    if !n.is_multiple_of(2) {
        return Err(Error::OddDimension(n));
    }
    let h = f.hessian(x)?;
    let m = n / 2;
    let mut re = vec![0.0; m * m];
    let mut im = vec![0.0; m * m];
    for a in 0..m {
        let (xa, ya) = (2 * a, 2 * a + 1);
        for b in 0..m {
            let (xb, yb) = (2 * b, 2 * b + 1);
            re[a * m + b] = h.get(xa, xb) + h.get(ya, yb);
            im[a * m + b] = h.get(xa, yb) - h.get(ya, xb);
        }
    }
    Ok(LeviForm { m, re, im })
}

/// Convex catalog used by the suites: a positive-definite quadratic,
/// `e^{|x|²}`, `e^{|x|}`, `|x|`, a max of affine functions, an affine
/// function and a constant.
pub fn convex_catalog(dim: usize) -> Vec<ScalarField> {
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        a[i * dim + i] = 1.0 + i as f64;
        if i + 1 < dim {
            a[i * dim + i + 1] = 0.4;
            a[(i + 1) * dim + i] = 0.4;
        }
    }
    let rows = (0..=dim)
        .map(|k| {
            let mut row = vec![0.0; dim + 1];
            if k < dim {
                row[k] = 1.5;
            } else {
                row[..dim].iter_mut().for_each(|v| *v = -1.0);
            }
            row[dim] = 0.1 * k as f64;
            row
        })
        .collect();
    let coeffs: Vec<f64> = (0..dim).map(|i| 0.5 - 0.25 * i as f64).collect();
    vec![
        ScalarField::quadratic(dim, a).expect("valid"),
        ScalarField::exp_norm_sq(dim),
        ScalarField::exp_norm(dim),
        ScalarField::norm(dim),
        ScalarField::max_affine(dim, rows).expect("valid"),
        ScalarField::affine(coeffs, 0.3),
        ScalarField::constant(dim, 2.0),
    ]
}

/// Convex fields that are smooth away from a null set: a positive-definite
/// quadratic, `e^{|x|²}`, `e^{|x|}`, an affine function and the softplus of a
/// linear form.
pub fn smooth_convex_catalog(dim: usize) -> Vec<ScalarField> {
    let linear: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    let softplus = format!("log(1 + exp({}))", linear.join(" + "));
    let mut out: Vec<ScalarField> = convex_catalog(dim)
        .into_iter()
        .filter(|f| {
            matches!(
                f.body(),
                FieldBody::Quadratic(_) | FieldBody::ExpNormSq | FieldBody::ExpNorm | FieldBody::Affine { .. }
            )
        })
        .collect();
    out.push(ScalarField::expr(&softplus, dim).expect("valid expression"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{BoxRegion, SamplePlan};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(ScalarField::norm_sq(2).gradient(&[1.0, 2.0]).unwrap(), vec![2.0, 4.0]);
        assert_eq!(
            ScalarField::constant(3, 4.0).gradient(&[1.0, 2.0, 3.0]).unwrap(),
            vec![0.0; 3]
        );
        let g = ScalarField::exp_norm_sq(2).gradient(&[1.0, 0.0]).unwrap();
        assert!(close(g[0], 2.0 * E, 1e-15) && g[1] == 0.0);
        assert!(matches!(
            ScalarField::norm_sq(2).gradient(&[1.0]),
            Err(Error::Dimension { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn hessian_examples() {
        let h = ScalarField::norm_sq(3).hessian(&[0.3, -1.0, 2.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h.get(i, j), if i == j { 2.0 } else { 0.0 });
            }
        }
        let h = ScalarField::affine(vec![1.0, -2.0], 3.0).hessian(&[5.0, 5.0]).unwrap();
        assert!(h.as_slice().iter().all(|v| *v == 0.0));
        let h = ScalarField::exp_norm_sq(2).hessian(&[1.0, 0.0]).unwrap();
        let want = [6.0 * E, 0.0, 0.0, 2.0 * E];
        for (a, b) in h.as_slice().iter().zip(want) {
            assert!(close(*a, b, 1e-14));
        }
        assert!(ScalarField::norm(2).hessian(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn hessian_is_exactly_symmetric_after_symmetrization() {
        let f = ScalarField::expr("x1^3*x2 + exp(x1*x2) + x2^2*x3", 3).unwrap();
        let h = f.hessian(&[0.3, -0.7, 1.1]).unwrap();
        assert!(h.is_symmetric(0.0));
        let h = f
            .clone()
            .with_mode(DerivativeMode::FiniteDifference)
            .hessian(&[0.3, -0.7, 1.1])
            .unwrap();
        assert!(h.is_symmetric(0.0));
    }

    #[test]
    fn analytic_and_fd_gradients_agree_away_from_kinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in convex_catalog(3) {
            let fd = f.clone().with_mode(DerivativeMode::FiniteDifference);
            for _ in 0..50 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                if f.kink_distance(&x).unwrap() < 1e-3 {
                    continue;
                }
                let a = f.gradient(&x).unwrap();
                let b = fd.gradient(&x).unwrap();
                let scale = 1.0 + a.iter().map(|v| v.abs()).fold(0.0, f64::max);
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() <= 1e-5 * scale, "{f}: {a:?} vs {b:?} at {x:?}");
                }
            }
        }
    }

    #[test]
    fn analytic_and_fd_hessians_agree_at_smooth_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for f in convex_catalog(2).into_iter().filter(|f| f.has_analytic_hessian()) {
            let fd = f.clone().with_mode(DerivativeMode::FiniteDifference);
            let mut checked = 0;
            while checked < 50 {
                let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
                if f.kink_distance(&x).unwrap() < 1e-2 {
                    continue;
                }
                checked += 1;
                let a = f.hessian(&x).unwrap();
                let b = fd.hessian(&x).unwrap();
                let scale = 1.0 + a.as_slice().iter().map(|v| v.abs()).fold(0.0, f64::max);
                for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
                    assert!((u - v).abs() <= 1e-4 * scale, "{f}: {a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn convexity_examples() {
        let plan = SamplePlan::new(BoxRegion::cube(-3.0, 3.0, 2).unwrap(), 100, 5);
        let pts = plan.points();
        let v = convexity_verdict(&ScalarField::norm_sq(2), &pts, 1e-9).unwrap();
        assert_eq!(v.status, Convexity::Convex);
        assert_eq!(v.points_checked, 100);

        let cubic = ScalarField::expr("x1^3", 2).unwrap();
        let mut sample = pts.clone();
        sample.push(vec![-1.0, 0.5]);
        let v = convexity_verdict(&cubic, &sample, 1e-6).unwrap();
        assert_eq!(v.status, Convexity::NotConvex);
        let w = v.witness.unwrap();
        let witness_eig = cubic.hessian(&w).unwrap().min_eigenvalue();
        assert!(witness_eig < -1e-6);
        let at_minus_one = cubic.hessian(&[-1.0, 0.5]).unwrap().min_eigenvalue();
        assert!((at_minus_one + 6.0).abs() < 1e-6);
        let v = convexity_verdict(&cubic, &[vec![2.0, 0.0], vec![-1.0, 0.3], vec![0.5, -1.0]], 1e-6).unwrap();
        assert_eq!(v.witness, Some(vec![-1.0, 0.3]));
        assert!((v.min_eigenvalue + 6.0).abs() < 1e-6);

        let v = convexity_verdict(&ScalarField::exp_norm_sq(2), &pts, 1e-9).unwrap();
        assert_eq!(v.status, Convexity::Convex);

        let v = convexity_verdict(&ScalarField::norm(2), &[vec![0.0, 0.0], vec![1.0, 1.0]], 1e-9).unwrap();
        assert_eq!(v.status, Convexity::Undetermined);
        assert_eq!(v.kink_point, Some(vec![0.0, 0.0]));

        assert!(convexity_verdict(&ScalarField::norm(2), &[], 1e-9).is_err());
        assert!(convexity_verdict(&ScalarField::norm(2), &pts, 0.0).is_err());
    }

    #[test]
    fn catalog_is_convex_on_ladder_sample() {
        let plan = SamplePlan::new(BoxRegion::cube(-2.0, 2.0, 3).unwrap(), 60, 9).with_ladder(vec![0.1, 1.0, 4.0], 4);
        let pts = plan.points();
        for f in convex_catalog(3) {
            let v = convexity_verdict(&f, &pts, 1e-6).unwrap();
            assert_eq!(v.status, Convexity::Convex, "{f}");
        }
    }

    #[test]
    fn jensen_examples() {
        let exp1 = ScalarField::expr("exp(x1)", 1).unwrap();
        let g = jensen_gap(&exp1, &[vec![0.0], vec![2.0]], &[0.5, 0.5]).unwrap();
        assert!((g - 1.4762462210062792).abs() < 1e-12, "{g}");
        assert!((g - ((1.0 + E * E) / 2.0 - E)).abs() < 1e-14);

        let aff = ScalarField::affine(vec![2.0, -1.0], 0.5);
        let g = jensen_gap(
            &aff,
            &[vec![1.0, 3.0], vec![-2.0, 0.5], vec![4.0, 4.0]],
            &[0.2, 0.3, 0.5],
        )
        .unwrap();
        assert!(g.abs() < 1e-12);

        let g = jensen_gap(
            &ScalarField::norm_sq(2),
            &[vec![1.0, 0.0], vec![-1.0, 0.0]],
            &[0.5, 0.5],
        )
        .unwrap();
        assert_eq!(g, 1.0);

        assert!(matches!(
            jensen_gap(&aff, &[vec![1.0, 3.0]], &[0.9]),
            Err(Error::WeightNormalization { .. })
        ));
        assert!(jensen_gap(&aff, &[vec![1.0, 3.0], vec![0.0, 0.0]], &[1.5, -0.5]).is_err());
    }

    #[test]
    fn jensen_gap_nonnegative_for_catalog() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for f in convex_catalog(2) {
            for _ in 0..200 {
                let k = rng.random_range(2..6);
                let pts: Vec<Vec<f64>> = (0..k)
                    .map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect())
                    .collect();
                let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                let mut w: Vec<f64> = raw.iter().map(|v| v / s).collect();
                let drift: f64 = 1.0 - w.iter().sum::<f64>();
                w[0] += drift;
                assert!(jensen_gap(&f, &pts, &w).unwrap() >= -1e-9, "{f}");
            }
        }
    }

    #[test]
    fn levi_form_examples() {
        let l = levi_form(&ScalarField::norm_sq(2), &[0.3, 0.4]).unwrap();
        assert_eq!(l.m, 1);
        assert!((l.re[0] - 4.0).abs() < 1e-14 && l.im[0] == 0.0);
        let re_z2 = ScalarField::expr("x1^2 - x2^2", 2).unwrap();
        let l = levi_form(&re_z2, &[0.7, -0.2]).unwrap();
        assert!(l.re[0].abs() < 1e-6);
        assert!(matches!(
            levi_form(&ScalarField::norm_sq(3), &[0.0; 3]),
            Err(Error::OddDimension(3))
        ));
    }

    #[test]
    fn levi_form_of_hermitian_quadratic() {
        // f = |z1|² + 2|z2|² + 2 Re(z1 z̄2): Levi form 4·[[1, 1], [1, 2]], eigenvalues 2(3 ± √5)
        let f = ScalarField::expr("x1^2 + x2^2 + 2*(x3^2 + x4^2) + 2*(x1*x3 + x2*x4)", 4).unwrap();
        let l = levi_form(&f, &[0.1, 0.2, -0.3, 0.4]).unwrap();
        assert!(l.is_hermitian(1e-6));
        let e = l.eigenvalues();
        let s5 = 5f64.sqrt();
        assert!((e[0] - 2.0 * (3.0 - s5)).abs() < 1e-5, "{e:?}");
        assert!((e[1] - 2.0 * (3.0 + s5)).abs() < 1e-5, "{e:?}");
    }

    #[test]
    fn convex_implies_plurisubharmonic_on_sample() {
        let plan = SamplePlan::new(BoxRegion::cube(-1.5, 1.5, 4).unwrap(), 40, 21);
        let pts = plan.points();
        for f in convex_catalog(4) {
            let v = convexity_verdict(&f, &pts, 1e-9).unwrap();
            if v.status != Convexity::Convex {
                continue;
            }
            for x in &pts {
                let l = levi_form(&f, x).unwrap();
                assert!(l.is_hermitian(1e-9));
                assert!(l.eigenvalues()[0] >= -1e-6, "{f} at {x:?}");
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        for f in convex_catalog(2) {
            let again = ScalarField::from_spec(&f.to_string(), 2).unwrap();
            assert_eq!(f, again);
        }
        let q = ScalarField::from_spec("quadratic:2", 3).unwrap();
        assert_eq!(q.hessian(&[0.0; 3]).unwrap().trace(), 12.0);
        let neg = ScalarField::from_spec("neg:exp_norm", 2).unwrap();
        assert_eq!(neg.value(&[0.0, 0.0]).unwrap(), -1.0);
        assert!(ScalarField::from_spec("quadratic:1,2;3", 2).is_err());
        assert!(ScalarField::from_spec("affine:1,2", 2).is_err());
        assert!(ScalarField::from_spec("wat", 2).is_err());
        assert!(ScalarField::from_spec("expr:x3", 2).is_err());
        let r = ScalarField::from_spec("radial:exp_sq", 2).unwrap();
        assert!((r.value(&[1.0, 0.0]).unwrap() - E).abs() < 1e-15);
    }
}
