//! Growth classes of radial profiles on model geometries.
//!
//! Every mass is carried as a logarithm. Ball masses are accumulated on a
//! geometric grid `2^{-10} … 2^{41}` (eight nodes per octave) by summing
//! segment integrals with logsumexp, so annulus masses are sums of segment
//! integrals and never differences of large numbers. Tail behaviour is read
//! off least-squares fits of `ln y = ln c + α ln r + β r^γ`, `γ ∈ {1, 2}`,
//! on windows `[R, 4R]` with `R = 2^27, 2^31, 2^35, 2^39`.

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::quadrature::adaptive_simpson;
use crate::radial::RadialFunction;

const NODES_PER_OCTAVE: usize = 8;
const MIN_OCTAVE: i32 = -10;
const MAX_OCTAVE: i32 = 41;
/// Fit windows start at `2^27·16^k`, `k = 0..4`; each spans two octaves.
const WINDOW_OCTAVES: [i32; 4] = [27, 31, 35, 39];
const WINDOW_SAMPLES: usize = 2 * NODES_PER_OCTAVE + 1;
/// Tolerance on fitted exponents at a critical value.
pub const ALPHA_TOL: f64 = 0.02;
/// `|β|` below this counts as zero.
pub const BETA_TOL: f64 = 1e-4;
/// Exponents this close above the critical value are taken as exact.
const ALPHA_FIT_SLACK: f64 = 1e-3;
/// Fits with RMS residual above this (relative to the window's spread) are
/// not trusted.
pub const RESIDUAL_TOL: f64 = 1e-2;
/// A log-ratio that moves less than this over a window counts as bounded.
const FLAT_TOL: f64 = 1e-3;
/// Mean log-ratio of consecutive mild-series terms that counts as geometric.
pub const SERIES_RATIO_TOL: f64 = 0.01;
/// Radius ladder length for the mild test.
pub const MILD_LADDER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Euclidean,
    Hyperbolic,
}

/// Rotationally symmetric model with sphere-area weight
/// `a(r) = ω_{n−1} r^{n−1}` or `ω_{n−1} sinh^{n−1} r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelGeometry {
    pub n: usize,
    pub kind: GeometryKind,
}

impl ModelGeometry {
    pub fn new(n: usize, kind: GeometryKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self { n, kind })
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(n, GeometryKind::Euclidean).expect("positive dimension")
    }

    pub fn hyperbolic(n: usize) -> Self {
        Self::new(n, GeometryKind::Hyperbolic).expect("positive dimension")
    }

    /// `ω_{n−1} = 2π^{n/2}/Γ(n/2)`, the area of the unit sphere in ℝⁿ.
    pub fn omega(&self) -> f64 {
        2.0 * PI.powf(self.n as f64 / 2.0) / gamma_half(self.n)
    }

    pub fn ln_area(&self, r: f64) -> f64 {
        let k = self.n as f64 - 1.0;
        let shape = if self.n == 1 {
            0.0
        } else {
            match self.kind {
                GeometryKind::Euclidean => k * r.ln(),
                GeometryKind::Hyperbolic => k * ln_sinh(r),
            }
        };
        self.omega().ln() + shape
    }

    pub fn area(&self, r: f64) -> f64 {
        self.ln_area(r).exp()
    }
}

/// `Γ(n/2)` by the recurrence from `Γ(1) = 1` or `Γ(1/2) = √π`.
fn gamma_half(n: usize) -> f64 {
    let (mut g, mut x) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = n as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

fn ln_sinh(r: f64) -> f64 {
    if r > 20.0 {
        r - LN_2 + (-(-2.0 * r).exp()).ln_1p()
    } else {
        r.sinh().ln()
    }
}

fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Radial profile `|f|`, exponent `q`, growth parameter `p` and geometry;
/// the base point is the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthQuery {
    pub profile: RadialFunction,
    pub q: f64,
    pub p: f64,
    pub geometry: ModelGeometry,
}

impl GrowthQuery {
    pub fn new(profile: RadialFunction, q: f64, p: f64, geometry: ModelGeometry) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("growth tests need p > 1, got {p}")));
        }
        if !q.is_finite() {
            return Err(Error::InvalidArgument(format!("q must be finite, got {q}")));
        }
        Ok(Self {
            profile,
            q,
            p,
            geometry,
        })
    }

    /// `ln(|g(s)|^q a(s))`, with `|g|^0 = 1` even where `g` vanishes.
    pub fn ln_integrand(&self, s: f64) -> Result<f64> {
        let lg = if self.q == 0.0 {
            0.0
        } else {
            self.q * self.profile.ln_abs(s)?
        };
        Ok(lg + self.geometry.ln_area(s))
    }
}

impl fmt::Display for GrowthQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} q={} p={} n={} {:?}",
            self.profile, self.q, self.p, self.geometry.n, self.geometry.kind
        )
    }
}

/// Wraps a fallible log-integrand so quadrature closures can stay `Fn(f64) -> f64`;
/// the first error is kept and the value becomes NaN.
struct Guarded<'a> {
    query: &'a GrowthQuery,
    error: RefCell<Option<Error>>,
}

impl<'a> Guarded<'a> {
    fn new(query: &'a GrowthQuery) -> Self {
        Self {
            query,
            error: RefCell::new(None),
        }
    }

    fn eval(&self, s: f64) -> f64 {
        match self.query.ln_integrand(s) {
            Ok(v) => v,
            Err(e) => {
                self.error.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn finish<T>(self, value: T) -> Result<T> {
        match self.error.into_inner() {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }
}

/// `ln ∫_a^b e^{L(s)} ds`.
///
/// Pieces on which `L` varies by more than 8 are bisected; pieces whose
/// sampled maximum is 40 below the running estimate are dropped. Leaves are
/// integrated by adaptive Simpson on `e^{L − max L}`, to a tolerance no finer
/// than the rounding already present in `L`.
fn ln_integral(l: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    ln_piece(l, a, b, 0, f64::NEG_INFINITY)
}

fn ln_piece(l: &dyn Fn(f64) -> f64, a: f64, b: f64, depth: u32, floor: f64) -> f64 {
    if b <= a {
        return f64::NEG_INFINITY;
    }
    const K: usize = 9;
    let mut lmax = f64::NEG_INFINITY;
    let mut lmin = f64::INFINITY;
    let mut best = 0;
    for i in 0..K {
        let s = a + (b - a) * i as f64 / (K - 1) as f64;
        let v = l(s);
        if v.is_nan() || v == f64::INFINITY {
            return v;
        }
        if v > lmax {
            lmax = v;
            best = i;
        }
        lmin = lmin.min(v);
    }
    if lmax == f64::NEG_INFINITY || lmax + (b - a).ln() < floor {
        return f64::NEG_INFINITY;
    }
    if lmax - lmin <= 8.0 || depth >= 50 {
        // L itself carries rounding of order ε·|L|, so the tolerance follows it
        let tol = (b - a) * (1e-13 + 1e-14 * lmax.abs());
        let v = adaptive_simpson(&|s: f64| (l(s) - lmax).exp(), a, b, tol);
        return if v > 0.0 { v.ln() + lmax } else { f64::NEG_INFINITY };
    }
    let m = 0.5 * (a + b);
    let (first, second) = if best >= K / 2 {
        ((m, b), (a, m))
    } else {
        ((a, m), (m, b))
    };
    let e1 = ln_piece(l, first.0, first.1, depth + 1, floor);
    let e2 = ln_piece(l, second.0, second.1, depth + 1, floor.max(e1 - 40.0));
    lse(e1, e2)
}

/// Cumulative log ball masses on the geometric grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MassTable {
    /// `r_k = 2^{k/8 − 10}`.
    pub nodes: Vec<f64>,
    /// `ln M(r_k)`.
    pub ln_mass: Vec<f64>,
    /// `ln ∫_{r_k}^{r_{k+1}}`.
    pub ln_segment: Vec<f64>,
    /// Fitted power of the integrand at the inner end.
    pub head_exponent: f64,
}

fn grid_node(k: usize) -> f64 {
    let octave = (k / NODES_PER_OCTAVE) as i32 + MIN_OCTAVE;
    let frac = (k % NODES_PER_OCTAVE) as f64 / NODES_PER_OCTAVE as f64;
    2f64.powi(octave) * 2f64.powf(frac)
}

fn node_index(octave: i32) -> usize {
    ((octave - MIN_OCTAVE) as usize) * NODES_PER_OCTAVE
}

/// `ln ∫_0^s` by the local power law `I ≈ c·t^κ`; errors when `κ ≤ −1`.
fn ln_head(l: &dyn Fn(f64) -> f64, s: f64) -> Result<(f64, f64)> {
    let hi = l(s);
    let lo = l(0.5 * s);
    if hi == f64::NEG_INFINITY && lo == f64::NEG_INFINITY {
        return Ok((f64::NEG_INFINITY, f64::NAN));
    }
    let kappa = (hi - lo) / LN_2;
    if kappa.is_nan() || kappa <= -1.0 {
        return Err(Error::NonIntegrable { exponent: kappa });
    }
    Ok((hi + s.ln() - (kappa + 1.0).ln(), kappa))
}

impl MassTable {
    pub fn build(query: &GrowthQuery) -> Result<Self> {
        let count = node_index(MAX_OCTAVE) + 1;
        let nodes: Vec<f64> = (0..count).map(grid_node).collect();
        let g = Guarded::new(query);
        let l = |s: f64| g.eval(s);
        let (head, head_exponent) = ln_head(&l, nodes[0])?;
        let mut ln_mass = Vec::with_capacity(count);
        let mut ln_segment = Vec::with_capacity(count - 1);
        ln_mass.push(head);
        for k in 0..count - 1 {
            let seg = ln_integral(&l, nodes[k], nodes[k + 1]);
            ln_segment.push(seg);
            ln_mass.push(lse(ln_mass[k], seg));
        }
        if ln_mass.iter().any(|v| v.is_nan()) {
            return g
                .finish(())
                .and(Err(Error::InvalidArgument(format!("mass of {query} is not a number"))));
        }
        if ln_mass.contains(&f64::INFINITY) {
            return g.finish(()).and(Err(Error::NonIntegrable {
                exponent: f64::INFINITY,
            }));
        }
        g.finish(Self {
            nodes,
            ln_mass,
            ln_segment,
            head_exponent,
        })
    }

    pub fn max_radius(&self) -> f64 {
        *self.nodes.last().expect("nonempty grid")
    }

    /// `ln M` at the node `2^octave · 2^{i/8}`.
    fn at(&self, octave: i32, i: usize) -> f64 {
        self.ln_mass[node_index(octave) + i]
    }

    /// `ln M(r)` for `0 < r ≤ max_radius`.
    pub fn ln_mass_at(&self, query: &GrowthQuery, r: f64) -> Result<f64> {
        ln_ball_mass_from(query, Some(self), r)
    }

    /// `ln ∫_{2^j}^{2^{j+1}}` as a logsumexp of segment integrals.
    pub fn ln_annulus(&self, j: usize) -> f64 {
        let start = node_index(j as i32);
        self.ln_segment[start..start + NODES_PER_OCTAVE]
            .iter()
            .fold(f64::NEG_INFINITY, |acc, v| lse(acc, *v))
    }

    pub fn is_zero(&self) -> bool {
        self.ln_mass.last() == Some(&f64::NEG_INFINITY)
    }
}

fn ln_ball_mass_from(query: &GrowthQuery, table: Option<&MassTable>, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive and finite, got {r}"
        )));
    }
    let g = Guarded::new(query);
    let l = |s: f64| g.eval(s);
    let s0 = grid_node(0);
    if r <= s0 {
        let (v, _) = ln_head(&l, r)?;
        return g.finish(v);
    }
    let (mut acc, mut k) = match table {
        Some(t) if r <= t.max_radius() => {
            let k = t.nodes.partition_point(|x| *x <= r) - 1;
            (t.ln_mass[k], k)
        }
        _ => (ln_head(&l, s0)?.0, 0),
    };
    loop {
        let next = grid_node(k + 1);
        if next >= r {
            acc = lse(acc, ln_integral(&l, grid_node(k), r));
            break;
        }
        acc = lse(acc, ln_integral(&l, grid_node(k), next));
        k += 1;
    }
    if acc.is_nan() {
        return g
            .finish(())
            .and(Err(Error::InvalidArgument(format!("mass of {query} is not a number"))));
    }
    g.finish(acc)
}

/// `ln ∫_{B(0;r)} |f|^q dv`.
pub fn ln_ball_mass(query: &GrowthQuery, r: f64) -> Result<f64> {
    ln_ball_mass_from(query, None, r)
}

/// `∫_0^r |g(s)|^q a(s) ds`.
pub fn ball_mass(query: &GrowthQuery, r: f64) -> Result<f64> {
    Ok(ln_ball_mass(query, r)?.exp())
}

/// `|g(r)|^q a(r)`.
pub fn sphere_mass(query: &GrowthQuery, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    Ok(query.ln_integrand(r)?.exp())
}

/// Fitted `ln y ≈ log_c + α ln r + β r^γ` on `[window_start, 4·window_start]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub log_c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: u8,
    /// RMS residual over the window's spread of `ln y` (or over 1 if smaller).
    pub residual: f64,
    pub window_start: f64,
}

impl Envelope {
    pub fn trusted(&self) -> bool {
        self.residual <= RESIDUAL_TOL
    }
}

fn solve3(mut a: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                let pivot = a[col];
                for (v, pv) in a[row].iter_mut().zip(pivot).skip(col) {
                    *v -= f * pv;
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Least-squares envelope fit on window samples `y_i = ln f(R·2^{i/8})`.
/// Samples at `−∞` are skipped; needs at least five finite ones.
pub fn fit_envelope(window_start: f64, y: &[f64]) -> Option<Envelope> {
    let pts: Vec<(f64, f64)> = y
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(i, v)| (i as f64 / NODES_PER_OCTAVE as f64 * LN_2, *v))
        .collect();
    if pts.len() < 5 {
        return None;
    }
    let ymean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let spread = pts.iter().map(|p| (p.1 - ymean).abs()).fold(0.0, f64::max).max(1.0);
    let ln_r = window_start.ln();
    let mut best: Option<Envelope> = None;
    for gamma in [1u8, 2] {
        let basis = |lt: f64| [1.0, lt, (gamma as f64 * lt).exp()];
        let mut m = [[0.0; 4]; 3];
        for (lt, v) in &pts {
            let b = basis(*lt);
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += b[i] * b[j];
                }
                m[i][3] += b[i] * (v - ymean);
            }
        }
        let Some([c, alpha, b]) = solve3(m) else { continue };
        let ss: f64 = pts
            .iter()
            .map(|(lt, v)| {
                let e = basis(*lt);
                (v - ymean - (c + alpha * e[1] + b * e[2])).powi(2)
            })
            .sum();
        let residual = (ss / pts.len() as f64).sqrt() / spread;
        let beta = b / window_start.powi(gamma as i32);
        let env = Envelope {
            log_c: ymean + c - alpha * ln_r,
            alpha,
            beta,
            gamma,
            residual,
            window_start,
        };
        if best.is_none_or(|e| residual < e.residual) {
            best = Some(env);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Divergence {
    Diverges,
    Converges,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailVerdict {
    pub status: Divergence,
    pub envelope: Option<Envelope>,
    /// `α` extrapolated to `R → ∞` from the last two windows, when used.
    pub limit_alpha: Option<f64>,
    pub reason: String,
}

fn alpha_band(alpha: f64) -> Divergence {
    if alpha >= -1.0 - ALPHA_FIT_SLACK {
        Divergence::Diverges
    } else if alpha < -1.0 - ALPHA_TOL {
        Divergence::Converges
    } else {
        Divergence::Undetermined
    }
}

fn window_starts(a: f64) -> Vec<f64> {
    let base = a.max(1.0);
    WINDOW_OCTAVES.iter().map(|o| base * 2f64.powi(*o)).collect()
}

/// Decides `∫_a^∞ f = ∞` from samples of `ln f`.
///
/// Diverges for `β > 1e−4`, or `β ≈ 0` and `α ≥ −1` (with `1e−3` fit slack);
/// Converges for `β < −1e−4` or `α < −1.02`. Exponents in between are
/// Undetermined, as are fits whose residual is too large, and fits whose
/// `α` drifts across a band boundary when extrapolated as `α∞ + c/ln R`
/// (which separates `1/r` from `1/(r log r)`).
pub fn tail_divergence_ln<F>(ln_f: F, a: f64) -> Result<TailVerdict>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut windows = Vec::new();
    for start in window_starts(a) {
        let y = (0..WINDOW_SAMPLES)
            .map(|i| ln_f(start * 2f64.powf(i as f64 / NODES_PER_OCTAVE as f64)))
            .collect::<Result<Vec<f64>>>()?;
        windows.push((start, y));
    }
    let verdict = |status, envelope, limit_alpha, reason: &str| TailVerdict {
        status,
        envelope,
        limit_alpha,
        reason: reason.to_string(),
    };
    let last = &windows.last().expect("windows").1;
    if last.iter().any(|v| v.is_nan()) {
        return Ok(verdict(
            Divergence::Undetermined,
            None,
            None,
            "integrand is not a number",
        ));
    }
    if last.contains(&f64::INFINITY) {
        return Ok(verdict(Divergence::Diverges, None, None, "integrand is infinite"));
    }
    if last.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Ok(verdict(
            Divergence::Converges,
            None,
            None,
            "integrand vanishes on the tail",
        ));
    }
    let fits: Vec<Option<Envelope>> = windows.iter().map(|(s, y)| fit_envelope(*s, y)).collect();
    let Some(env) = fits.last().copied().flatten() else {
        return Ok(verdict(Divergence::Undetermined, None, None, "too few finite samples"));
    };
    if !env.trusted() {
        return Ok(verdict(
            Divergence::Undetermined,
            Some(env),
            None,
            "envelope fit residual too large",
        ));
    }
    if env.beta > BETA_TOL {
        return Ok(verdict(Divergence::Diverges, Some(env), None, "exponential growth"));
    }
    if env.beta < -BETA_TOL {
        return Ok(verdict(Divergence::Converges, Some(env), None, "exponential decay"));
    }
    let band = alpha_band(env.alpha);
    let prev = fits[fits.len() - 2].filter(|e| e.trusted() && e.beta.abs() <= BETA_TOL);
    let limit = prev.map(|p| {
        let (lp, ll) = (p.window_start.ln(), env.window_start.ln());
        (env.alpha * ll - p.alpha * lp) / (ll - lp)
    });
    if let Some(lim) = limit {
        if alpha_band(lim) != band {
            return Ok(verdict(
                Divergence::Undetermined,
                Some(env),
                limit,
                "fitted exponent drifts across the critical value",
            ));
        }
    }
    let reason = match band {
        Divergence::Diverges => "power tail with exponent at least -1",
        Divergence::Converges => "power tail with exponent below -1",
        Divergence::Undetermined => "exponent within tolerance of -1",
    };
    Ok(verdict(band, Some(env), limit, reason))
}

/// [`tail_divergence_ln`] for an explicit integrand.
pub fn tail_divergence(integrand: &RadialFunction, a: f64) -> Result<TailVerdict> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("lower limit must be positive, got {a}")));
    }
    tail_divergence_ln(|r| integrand.ln_abs(r), a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriStatus {
    Holds,
    Fails,
    Undetermined,
}

/// Members of the admissible family: `∫_a^∞ dr/(rψ(r)) = ∞` for each, since
/// the antiderivatives are `ln r`, `ln log(e+r)` and `ln log(e+log(e+r))` up
/// to bounded terms, all unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi {
    /// `1`
    One,
    /// `log(e+r)`
    Log,
    /// `log(e+r)·log(e+log(e+r))`
    LogLog,
}

impl Psi {
    pub const FAMILY: [Psi; 3] = [Psi::One, Psi::Log, Psi::LogLog];

    pub fn ln_value(self, r: f64) -> f64 {
        let l1 = (std::f64::consts::E + r).ln();
        match self {
            Psi::One => 0.0,
            Psi::Log => l1.ln(),
            Psi::LogLog => l1.ln() + (std::f64::consts::E + l1).ln().ln(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Psi::One => "1",
            Psi::Log => "log(e+r)",
            Psi::LogLog => "log(e+r)*log(e+log(e+r))",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Envelope {
        envelope: Option<Envelope>,
        limit_alpha: Option<f64>,
        reason: String,
    },
    Series {
        terms: usize,
        /// Mean of `ln t_{j+1} − ln t_j` over the tail of the series.
        mean_log_ratio: f64,
        /// Fitted `κ` in `t_j ≈ c·j^κ` when the ratio test is inconclusive.
        power: Option<f64>,
        mass_envelope: Option<Envelope>,
        reason: String,
    },
    Witness {
        psi: Option<Psi>,
        envelope: Option<Envelope>,
        reason: String,
    },
    Degenerate {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriVerdict {
    pub status: TriStatus,
    pub evidence: Evidence,
}

impl TriVerdict {
    fn degenerate(status: TriStatus, reason: &str) -> Self {
        Self {
            status,
            evidence: Evidence::Degenerate {
                reason: reason.to_string(),
            },
        }
    }

    fn from_tail(t: TailVerdict) -> Self {
        let status = match t.status {
            Divergence::Diverges => TriStatus::Holds,
            Divergence::Converges => TriStatus::Fails,
            Divergence::Undetermined => TriStatus::Undetermined,
        };
        Self {
            status,
            evidence: Evidence::Envelope {
                envelope: t.envelope,
                limit_alpha: t.limit_alpha,
                reason: t.reason,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    Finite,
    Mild,
    Obtuse,
    Moderate,
    Small,
}

impl GrowthKind {
    pub const ALL: [GrowthKind; 5] = [
        GrowthKind::Finite,
        GrowthKind::Mild,
        GrowthKind::Obtuse,
        GrowthKind::Moderate,
        GrowthKind::Small,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub finite: TriVerdict,
    pub mild: TriVerdict,
    pub obtuse: TriVerdict,
    pub moderate: TriVerdict,
    pub small: TriVerdict,
    pub balanced: TriStatus,
    pub witness_psi: Option<Psi>,
}

impl GrowthReport {
    pub fn get(&self, kind: GrowthKind) -> &TriVerdict {
        match kind {
            GrowthKind::Finite => &self.finite,
            GrowthKind::Mild => &self.mild,
            GrowthKind::Obtuse => &self.obtuse,
            GrowthKind::Moderate => &self.moderate,
            GrowthKind::Small => &self.small,
        }
    }

    pub fn statuses(&self) -> [TriStatus; 5] {
        GrowthKind::ALL.map(|k| self.get(k).status)
    }
}

/// Holds if any criterion holds, Fails if all fail, else Undetermined.
pub fn balanced_status(statuses: &[TriStatus]) -> TriStatus {
    if statuses.contains(&TriStatus::Holds) {
        TriStatus::Holds
    } else if statuses.iter().all(|s| *s == TriStatus::Fails) {
        TriStatus::Fails
    } else {
        TriStatus::Undetermined
    }
}

/// Log-mass samples on fit window `w` (index into the window ladder).
fn mass_window(table: &MassTable, w: usize) -> (f64, Vec<f64>) {
    let octave = WINDOW_OCTAVES[w];
    let y = (0..WINDOW_SAMPLES).map(|i| table.at(octave, i)).collect();
    (2f64.powi(octave), y)
}

fn last_mass_envelope(table: &MassTable) -> Option<Envelope> {
    let (start, y) = mass_window(table, WINDOW_OCTAVES.len() - 1);
    fit_envelope(start, &y)
}

/// Sampled `ln y(r)` on the last window, as `(start, samples)`.
fn last_window<F: Fn(f64, f64) -> f64>(table: &MassTable, f: F) -> (f64, Vec<f64>) {
    let w = WINDOW_OCTAVES.len() - 1;
    let octave = WINDOW_OCTAVES[w];
    let start = 2f64.powi(octave);
    let y = (0..WINDOW_SAMPLES)
        .map(|i| {
            let r = table.nodes[node_index(octave) + i];
            f(r, table.at(octave, i))
        })
        .collect();
    (start, y)
}

/// `Some(true)` when `e^y` stays bounded on the tail, `Some(false)` when it
/// does not, `None` when the fit is not trusted.
fn bounded(start: f64, y: &[f64]) -> (Option<bool>, Option<Envelope>) {
    let env = fit_envelope(start, y);
    let Some(e) = env.filter(|e| e.trusted()) else {
        return (None, env);
    };
    let verdict = if e.beta > BETA_TOL {
        false
    } else if e.beta < -BETA_TOL || e.alpha < -ALPHA_TOL {
        true
    } else if e.alpha > ALPHA_TOL {
        false
    } else {
        y[y.len() - 1] - y[0] < FLAT_TOL
    };
    (Some(verdict), env)
}

fn test_finite(query: &GrowthQuery, table: &MassTable) -> TriVerdict {
    let p = query.p;
    let (_, y) = last_window(table, |r, lm| lm - p * r.ln());
    let env = last_mass_envelope(table);
    let evidence = |reason: &str| Evidence::Envelope {
        envelope: env,
        limit_alpha: None,
        reason: reason.to_string(),
    };
    let status = match env.filter(|e| e.trusted()) {
        None => TriStatus::Undetermined,
        Some(e) if e.beta > BETA_TOL => TriStatus::Fails,
        Some(e) if e.beta < -BETA_TOL || e.alpha < p - ALPHA_TOL => TriStatus::Holds,
        Some(e) if e.alpha > p + ALPHA_TOL => TriStatus::Fails,
        Some(_) => {
            // exponent at p: finite iff M/r^p stays bounded
            if y[y.len() - 1] - y[0] < FLAT_TOL {
                TriStatus::Holds
            } else {
                TriStatus::Undetermined
            }
        }
    };
    let reason = match status {
        TriStatus::Holds => "mass grows no faster than r^p",
        TriStatus::Fails => "mass grows faster than r^p",
        TriStatus::Undetermined => "mass exponent not resolved against p",
    };
    TriVerdict {
        status,
        evidence: evidence(reason),
    }
}

fn test_mild(query: &GrowthQuery, table: &MassTable) -> TriVerdict {
    let p = query.p;
    let ln_terms: Vec<f64> = (0..MILD_LADDER)
        .map(|j| {
            let ln_dr = j as f64 * LN_2;
            (p * ln_dr - table.ln_annulus(j)) / (p - 1.0)
        })
        .collect();
    let mass_env = last_mass_envelope(table);
    let series = |status, mean: f64, power, reason: &str| TriVerdict {
        status,
        evidence: Evidence::Series {
            terms: MILD_LADDER,
            mean_log_ratio: mean,
            power,
            mass_envelope: mass_env,
            reason: reason.to_string(),
        },
    };
    if ln_terms.contains(&f64::INFINITY) {
        return series(TriStatus::Holds, f64::INFINITY, None, "an annulus has zero mass");
    }
    let tail = &ln_terms[MILD_LADDER / 2..];
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let (diverges, power) = if mean > SERIES_RATIO_TOL {
        (Some(true), None)
    } else if mean < -SERIES_RATIO_TOL {
        (Some(false), None)
    } else {
        // t_j ≈ c·j^κ; Σ j^κ diverges iff κ ≥ −1
        let js: Vec<f64> = (MILD_LADDER / 2..MILD_LADDER).map(|j| (j as f64).ln()).collect();
        let mx = js.iter().sum::<f64>() / js.len() as f64;
        let my = tail.iter().sum::<f64>() / tail.len() as f64;
        let sxy: f64 = js.iter().zip(tail).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = js.iter().map(|x| (x - mx).powi(2)).sum();
        let kappa = sxy / sxx;
        let d = match alpha_band(kappa) {
            Divergence::Diverges => Some(true),
            Divergence::Converges => Some(false),
            Divergence::Undetermined => None,
        };
        (d, Some(kappa))
    };
    match diverges {
        Some(true) => series(TriStatus::Holds, mean, power, "series over r_j = 2^j diverges"),
        None => series(TriStatus::Undetermined, mean, power, "series tail is borderline"),
        Some(false) => {
            let dominant = mass_env
                .filter(|e| e.trusted())
                .is_some_and(|e| e.beta > BETA_TOL || (e.beta.abs() <= BETA_TOL && e.alpha > p + ALPHA_TOL));
            if dominant {
                series(
                    TriStatus::Fails,
                    mean,
                    power,
                    "series converges and the mass envelope outgrows r^p for every geometric ladder",
                )
            } else {
                series(
                    TriStatus::Undetermined,
                    mean,
                    power,
                    "series over r_j = 2^j converges but another sequence may diverge",
                )
            }
        }
    }
}

fn test_obtuse(query: &GrowthQuery) -> Result<TriVerdict> {
    let p = query.p;
    let t = tail_divergence_ln(|r| Ok(-query.ln_integrand(r)? / (p - 1.0)), 1.0)?;
    Ok(TriVerdict::from_tail(t))
}

fn test_small(query: &GrowthQuery, table: &MassTable) -> Result<TriVerdict> {
    let p = query.p;
    let t = tail_divergence_ln(|r| Ok((r.ln() - table.ln_mass_at(query, r)?) / (p - 1.0)), 1.0)?;
    Ok(TriVerdict::from_tail(t))
}

fn test_moderate(query: &GrowthQuery, table: &MassTable) -> TriVerdict {
    let p = query.p;
    let mut last_env = None;
    for psi in Psi::FAMILY {
        let (start, y) = last_window(table, |r, lm| lm - p * r.ln() - (p - 1.0) * psi.ln_value(r));
        let (b, env) = bounded(start, &y);
        last_env = env;
        if b == Some(true) {
            return TriVerdict {
                status: TriStatus::Holds,
                evidence: Evidence::Witness {
                    psi: Some(psi),
                    envelope: env,
                    reason: format!("M(r)/(r^p psi^(p-1)) bounded with psi = {}", psi.name()),
                },
            };
        }
    }
    TriVerdict {
        status: TriStatus::Undetermined,
        evidence: Evidence::Witness {
            psi: None,
            envelope: last_env,
            reason: "no witness in the psi family".into(),
        },
    }
}

fn zero_mass_verdict() -> TriVerdict {
    TriVerdict::degenerate(TriStatus::Holds, "zero mass: every integrand is infinite")
}

fn run_test(kind: GrowthKind, query: &GrowthQuery, table: &MassTable) -> Result<TriVerdict> {
    if table.is_zero() {
        return Ok(zero_mass_verdict());
    }
    match kind {
        GrowthKind::Finite => Ok(test_finite(query, table)),
        GrowthKind::Mild => Ok(test_mild(query, table)),
        GrowthKind::Obtuse => test_obtuse(query),
        GrowthKind::Moderate => Ok(test_moderate(query, table)),
        GrowthKind::Small => test_small(query, table),
    }
}

/// One growth criterion.
pub fn test_growth(kind: GrowthKind, query: &GrowthQuery) -> Result<TriVerdict> {
    run_test(kind, query, &MassTable::build(query)?)
}

/// All five criteria and the balanced status.
pub fn classify(query: &GrowthQuery) -> Result<GrowthReport> {
    let table = MassTable::build(query)?;
    let finite = run_test(GrowthKind::Finite, query, &table)?;
    let mild = run_test(GrowthKind::Mild, query, &table)?;
    let obtuse = run_test(GrowthKind::Obtuse, query, &table)?;
    let moderate = run_test(GrowthKind::Moderate, query, &table)?;
    let small = run_test(GrowthKind::Small, query, &table)?;
    let balanced = balanced_status(&[finite.status, mild.status, obtuse.status, moderate.status, small.status]);
    let witness_psi = match &moderate.evidence {
        Evidence::Witness { psi, .. } => *psi,
        _ if moderate.status == TriStatus::Holds => Some(Psi::One),
        _ => None,
    };
    Ok(GrowthReport {
        finite,
        mild,
        obtuse,
        moderate,
        small,
        balanced,
        witness_psi,
    })
}

/// [`classify`] over a batch, in parallel when enabled; output follows input order.
pub fn classify_batch(queries: &[GrowthQuery]) -> Vec<Result<GrowthReport>> {
    par::map(queries, classify)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainViolation {
    SmallHoldsMildFails,
    MildHoldsObtuseFails,
    ModerateHoldsSmallFails,
    SmallHoldsModerateFails,
}

/// Violations of moderate ⇔ small ⇒ mild ⇒ obtuse; Undetermined is non-binding.
pub fn check_chain(report: &GrowthReport) -> Vec<ChainViolation> {
    use TriStatus::{Fails, Holds};
    let mut out = Vec::new();
    if report.small.status == Holds && report.mild.status == Fails {
        out.push(ChainViolation::SmallHoldsMildFails);
    }
    if report.mild.status == Holds && report.obtuse.status == Fails {
        out.push(ChainViolation::MildHoldsObtuseFails);
    }
    if report.moderate.status == Holds && report.small.status == Fails {
        out.push(ChainViolation::ModerateHoldsSmallFails);
    }
    if report.small.status == Holds && report.moderate.status == Fails {
        out.push(ChainViolation::SmallHoldsModerateFails);
    }
    out
}

/// Whether `r ↦ M(r)` has nonnegative second divided differences on `rgrid`
/// (to `−1e−9`, relative to the largest mass on the grid).
pub fn ball_mass_convexity(query: &GrowthQuery, rgrid: &[f64]) -> Result<bool> {
    if rgrid.len() < 3 || rgrid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "rgrid must be increasing with at least 3 points".into(),
        ));
    }
    let table = MassTable::build(query)?;
    let ln_m = rgrid
        .iter()
        .map(|r| {
            if *r <= table.max_radius() {
                table.ln_mass_at(query, *r)
            } else {
                ln_ball_mass(query, *r)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let top = ln_m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(true);
    }
    let m: Vec<f64> = ln_m.iter().map(|v| (v - top).exp()).collect();
    let slopes: Vec<f64> = (0..m.len() - 1)
        .map(|k| (m[k + 1] - m[k]) / (rgrid[k + 1] - rgrid[k]))
        .collect();
    Ok(slopes.windows(2).all(|w| w[1] - w[0] >= -1e-9 * (1.0 + w[0].abs())))
}
