//! Weak subsolution tests: pair the flux `|∇f|^{p−2}∇f` against gradients
//! of nonnegative mollifier bumps, plus the 1D comparison principle and the
//! closure laws under scaling, sums, maxima and increasing limits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::fields::ScalarField;
use crate::par;
use crate::plaplace::DEFAULT_EPSILON;
use crate::quadrature::composite_gauss_legendre;
use crate::region::BoxRegion;

pub const DEFAULT_ORDER: usize = 24;
pub const DEFAULT_PANELS: usize = 4;
/// Tensor quadrature cost grows as `(order·panels)^n`.
pub const MAX_DIM: usize = 4;
/// Gradients with `|∇f|² <` this get the `ε = 1e−8` regularized flux.
const DEGENERATE_GRAD_SQ: f64 = 1e-8;

/// `x ↦ exp(−1/(1−|y|²))` for `|y| < 1`, `y = (x − center)/radius`; zero outside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpFunction {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BumpFunction {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bump radius must be positive, got {radius}"
            )));
        }
        if center.is_empty() {
            return Err(Error::InvalidArgument("bump center is empty".into()));
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn scaled_sq(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| ((a - c) / self.radius).powi(2))
            .sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let t = self.scaled_sq(x);
        if t >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - t)).exp()
        }
    }

    /// `φ · (−2y/(1−|y|²)²) / radius`
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let t = self.scaled_sq(x);
        if t >= 1.0 {
            return vec![0.0; x.len()];
        }
        let u = 1.0 - t;
        let phi = (-1.0 / u).exp();
        let k = -2.0 * phi / (u * u * self.radius * self.radius);
        x.iter().zip(&self.center).map(|(a, c)| k * (a - c)).collect()
    }

    /// Smallest box containing the support.
    pub fn bounding_box(&self) -> BoxRegion {
        BoxRegion {
            lo: self.center.iter().map(|c| c - self.radius).collect(),
            hi: self.center.iter().map(|c| c + self.radius).collect(),
        }
    }
}

/// Tensor-product composite Gauss–Legendre rule on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub region: BoxRegion,
    pub order: usize,
    pub panels: usize,
    axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl QuadratureGrid {
    pub fn new(region: BoxRegion, order: usize, panels: usize) -> Result<Self> {
        if order == 0 || panels == 0 {
            return Err(Error::InvalidArgument(
                "quadrature order and panels must be positive".into(),
            ));
        }
        let axes = region
            .lo
            .iter()
            .zip(&region.hi)
            .map(|(a, b)| composite_gauss_legendre(*a, *b, order, panels))
            .collect();
        Ok(Self {
            region,
            order,
            panels,
            axes,
        })
    }

    /// Default rule over the bump's bounding box.
    pub fn for_bump(phi: &BumpFunction) -> Self {
        Self::new(phi.bounding_box(), DEFAULT_ORDER, DEFAULT_PANELS).expect("valid defaults")
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|(x, _)| x.len()).product()
    }

    pub fn covers(&self, phi: &BumpFunction) -> bool {
        let b = phi.bounding_box();
        let slack = 1e-12 * (1.0 + phi.radius);
        self.dim() == phi.dim()
            && b.lo.iter().zip(&self.region.lo).all(|(s, g)| *s >= g - slack)
            && b.hi.iter().zip(&self.region.hi).all(|(s, g)| *s <= g + slack)
    }

    /// `Σ w·f(x)` over the tensor nodes.
    pub fn integrate<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        Ok(self.integrate_many(|x| Ok([f(x)?]))?[0])
    }

    /// Several integrals over the same nodes in one pass.
    pub fn integrate_many<const K: usize, F>(&self, mut f: F) -> Result<[f64; K]>
    where
        F: FnMut(&[f64]) -> Result<[f64; K]>,
    {
        let n = self.dim();
        let mut idx = vec![0usize; n];
        let mut x: Vec<f64> = self.axes.iter().map(|(nodes, _)| nodes[0]).collect();
        let mut total = [0.0; K];
        loop {
            let w: f64 = (0..n).map(|k| self.axes[k].1[idx[k]]).product();
            for (t, v) in total.iter_mut().zip(f(&x)?) {
                *t += w * v;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return Ok(total);
                }
                idx[k] += 1;
                if idx[k] < self.axes[k].0.len() {
                    x[k] = self.axes[k].0[idx[k]];
                    break;
                }
                idx[k] = 0;
                x[k] = self.axes[k].0[0];
                k += 1;
            }
        }
    }
}

/// Pairing value and the scale `∫|flux|·|∇φ|` its tolerance is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pairing {
    pub value: f64,
    pub scale: f64,
}

impl Pairing {
    /// `1e−6·(1 + scale)`, multiplied by `tol_scale`.
    pub fn tolerance(&self, tol_scale: f64) -> f64 {
        1e-6 * tol_scale * (1.0 + self.scale)
    }
}

fn flux_at(f: &ScalarField, x: &[f64], p: f64) -> Result<Vec<f64>> {
    let g = f.gradient(x)?;
    let mut s: f64 = g.iter().map(|v| v * v).sum();
    if p == 2.0 {
        return Ok(g);
    }
    if s < DEGENERATE_GRAD_SQ {
        s += DEFAULT_EPSILON;
    }
    let w = (s.ln() * (p - 2.0) / 2.0).exp();
    Ok(g.into_iter().map(|v| w * v).collect())
}

fn check_pairing_inputs(f: &ScalarField, phi: &BumpFunction, p: f64, grid: &QuadratureGrid) -> Result<()> {
    check_dim(f.dim(), phi.dim())?;
    if f.dim() > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "weak-form tests are limited to dimension {MAX_DIM}, got {}",
            f.dim()
        )));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    if !grid.covers(phi) {
        return Err(Error::SupportNotCovered {
            center: phi.center.clone(),
            radius: phi.radius,
        });
    }
    Ok(())
}

/// Quadrature value of `∫ ⟨|∇f|^{p−2}∇f, ∇φ⟩ dx` with its scale.
pub fn weak_pairing_with_scale(f: &ScalarField, phi: &BumpFunction, p: f64, grid: &QuadratureGrid) -> Result<Pairing> {
    check_pairing_inputs(f, phi, p, grid)?;
    let [value, scale] = grid.integrate_many(|x| {
        let dphi = phi.gradient(x);
        if dphi.iter().all(|v| *v == 0.0) {
            return Ok([0.0, 0.0]);
        }
        let flux = flux_at(f, x, p)?;
        let dot: f64 = flux.iter().zip(&dphi).map(|(a, b)| a * b).sum();
        let fl = flux.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dl = dphi.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok([dot, fl * dl])
    })?;
    Ok(Pairing { value, scale })
}

/// `∫ ⟨|∇f|^{p−2}∇f, ∇φ⟩ dx`; nonpositive for weak subsolutions.
pub fn weak_pairing(f: &ScalarField, phi: &BumpFunction, p: f64, grid: &QuadratureGrid) -> Result<f64> {
    Ok(weak_pairing_with_scale(f, phi, p, grid)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeakStatus {
    Holds,
    Fails,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub bump: BumpFunction,
    pub pairing: f64,
    pub scale: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakVerdict {
    pub status: WeakStatus,
    /// Trial with the largest `pairing / tolerance`.
    pub worst: Option<TrialRecord>,
    /// Set when `status == Fails`.
    pub witness: Option<TrialRecord>,
    pub trials: usize,
    /// Trials whose integrand could not be evaluated.
    pub errors: usize,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakTestConfig {
    pub trials: usize,
    pub seed: u64,
    pub order: usize,
    pub panels: usize,
    /// Multiplies the pairing tolerance.
    pub tol_scale: f64,
}

impl Default for WeakTestConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            order: DEFAULT_ORDER,
            panels: DEFAULT_PANELS,
            tol_scale: 1.0,
        }
    }
}

/// Seeded bumps: center uniform in `region`, radius log-uniform in
/// `[0.05, 0.5]·region.size()`.
pub fn draw_bumps(region: &BoxRegion, trials: usize, seed: u64) -> Vec<BumpFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = region.size();
    let (lo, hi) = ((0.05 * size).ln(), (0.5 * size).ln());
    (0..trials)
        .map(|_| {
            let center = region.uniform_point(&mut rng);
            let radius = rng.random_range(lo..hi).exp();
            BumpFunction { center, radius }
        })
        .collect()
}

pub fn subharmonic_verdict(
    f: &ScalarField,
    p: f64,
    region: &BoxRegion,
    trials: usize,
    seed: u64,
) -> Result<WeakVerdict> {
    let config = WeakTestConfig {
        trials,
        seed,
        ..WeakTestConfig::default()
    };
    subharmonic_verdict_with(f, p, region, &config)
}

/// Runs `config.trials` bump pairings (in parallel when enabled) and
/// reports `Fails` with a witness if any exceeds its tolerance.
///
/// Bumps whose integrand raises a domain error are counted; if no trial
/// fails and any errored, the verdict is `Undetermined`.
pub fn subharmonic_verdict_with(
    f: &ScalarField,
    p: f64,
    region: &BoxRegion,
    config: &WeakTestConfig,
) -> Result<WeakVerdict> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    check_dim(f.dim(), region.dim())?;
    let bumps = draw_bumps(region, config.trials, config.seed);
    let outcomes: Vec<Result<TrialRecord>> = par::map(&bumps, |phi| {
        let grid = QuadratureGrid::new(phi.bounding_box(), config.order, config.panels)?;
        let pr = weak_pairing_with_scale(f, phi, p, &grid)?;
        Ok(TrialRecord {
            bump: phi.clone(),
            pairing: pr.value,
            scale: pr.scale,
            tolerance: pr.tolerance(config.tol_scale),
        })
    });
    let mut worst: Option<TrialRecord> = None;
    let mut errors = 0;
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(rec) => {
                let better = worst
                    .as_ref()
                    .is_none_or(|w| rec.pairing / rec.tolerance > w.pairing / w.tolerance);
                if better {
                    worst = Some(rec);
                }
            }
            Err(Error::Eval(e)) => {
                errors += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    let failed = worst.as_ref().is_some_and(|w| w.pairing > w.tolerance);
    let status = if failed {
        WeakStatus::Fails
    } else if errors > 0 {
        WeakStatus::Undetermined
    } else {
        WeakStatus::Holds
    };
    Ok(WeakVerdict {
        status,
        witness: if failed { worst.clone() } else { None },
        worst,
        trials: config.trials,
        errors,
        first_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonVerdict {
    pub status: WeakStatus,
    /// Sample with the largest `f − h`.
    pub worst_lambda: f64,
    pub worst_excess: f64,
}

/// 1D comparison against the affine interpolant `h`, which is the
/// p-harmonic function with the same boundary values for every `p > 1`.
/// Samples `λ = i/samples`, `i = 0..=samples`.
pub fn comparison_1d(f: &ScalarField, c: f64, d: f64, samples: usize) -> Result<ComparisonVerdict> {
    check_dim(1, f.dim())?;
    if !(c < d) || samples == 0 {
        return Err(Error::InvalidArgument(
            "comparison needs c < d and at least one sample".into(),
        ));
    }
    let fc = f.value(&[c])?;
    let fd = f.value(&[d])?;
    let mut worst_lambda = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    for i in 0..=samples {
        let lambda = i as f64 / samples as f64;
        let excess = f.value(&[(1.0 - lambda) * c + lambda * d])? - ((1.0 - lambda) * fc + lambda * fd);
        if excess > worst_excess {
            worst_excess = excess;
            worst_lambda = lambda;
        }
    }
    let status = if worst_excess <= 1e-9 {
        WeakStatus::Holds
    } else {
        WeakStatus::Fails
    };
    Ok(ComparisonVerdict {
        status,
        worst_lambda,
        worst_excess,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureEntry {
    pub name: String,
    pub field: String,
    pub verdict: WeakVerdict,
}

/// Increasing family `f_i = max(f1, f2 − 1/i)` with limit `max(f1, f2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneLimitCheck {
    pub members: Vec<WeakStatus>,
    /// `f_i ≤ f_{i+1}` at every sample point.
    pub increasing: bool,
    /// `0 ≤ limit − f_i ≤ 1/i` at every sample point.
    pub converges: bool,
    pub limit: WeakVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub p: f64,
    pub lambda: f64,
    pub entries: Vec<ClosureEntry>,
    pub monotone_limit: MonotoneLimitCheck,
}

impl ClosureReport {
    /// All verdicts hold and the limit family behaves.
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.verdict.status == WeakStatus::Holds)
            && self.monotone_limit.members.iter().all(|s| *s == WeakStatus::Holds)
            && self.monotone_limit.increasing
            && self.monotone_limit.converges
            && self.monotone_limit.limit.status == WeakStatus::Holds
    }
}

pub const MONOTONE_FAMILY_LEN: usize = 8;

pub fn monotone_family(f1: &ScalarField, f2: &ScalarField) -> Result<Vec<ScalarField>> {
    (1..=MONOTONE_FAMILY_LEN)
        .map(|i| {
            let shifted = f2.sum(&ScalarField::constant(f2.dim(), -1.0 / i as f64))?;
            f1.max(&shifted)
        })
        .collect()
}

/// Weak verdicts for `f1`, `f2`, `λ·f1`, `f1 + f2`, `max{f1, f2}` and an
/// increasing family converging to `max{f1, f2}`.
pub fn closure_suite(
    f1: &ScalarField,
    f2: &ScalarField,
    lambda: f64,
    p: f64,
    region: &BoxRegion,
    config: &WeakTestConfig,
) -> Result<ClosureReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let limit = f1.max(f2)?;
    let combos = [
        ("f1", f1.clone()),
        ("f2", f2.clone()),
        ("lambda*f1", f1.scaled(lambda)),
        ("f1+f2", f1.sum(f2)?),
        ("max(f1,f2)", limit.clone()),
    ];
    let mut entries = Vec::with_capacity(combos.len());
    for (name, field) in combos {
        entries.push(ClosureEntry {
            name: name.to_string(),
            field: field.to_string(),
            verdict: subharmonic_verdict_with(&field, p, region, config)?,
        });
    }

    let family = monotone_family(f1, f2)?;
    let members = family
        .iter()
        .map(|g| subharmonic_verdict_with(g, p, region, config).map(|v| v.status))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut increasing = true;
    let mut converges = true;
    for _ in 0..200 {
        let x = region.uniform_point(&mut rng);
        let lim = limit.value(&x)?;
        let vals = family.iter().map(|g| g.value(&x)).collect::<Result<Vec<_>>>()?;
        increasing &= vals.windows(2).all(|w| w[0] <= w[1]);
        converges &= vals
            .iter()
            .enumerate()
            .all(|(i, v)| lim - v >= 0.0 && lim - v <= 1.0 / (i + 1) as f64 + 1e-12);
    }
    Ok(ClosureReport {
        p,
        lambda,
        entries,
        monotone_limit: MonotoneLimitCheck {
            members,
            increasing,
            converges,
            limit: subharmonic_verdict_with(&limit, p, region, config)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{convex_catalog, smooth_convex_catalog};
    use crate::plaplace::{p_laplacian, PLaplaceParams};
    use crate::quadrature::adaptive_simpson;
    use std::f64::consts::PI;

    fn disk_bump() -> BumpFunction {
        BumpFunction::new(vec![0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn bump_basics() {
        let b = BumpFunction::new(vec![1.0, -1.0], 0.5).unwrap();
        assert_eq!(b.value(&[1.0, -1.0]), (-1.0f64).exp());
        assert_eq!(b.value(&[1.5, -1.0]), 0.0);
        assert_eq!(b.gradient(&[2.0, 0.0]), vec![0.0, 0.0]);
        assert!(b.value(&[1.2, -0.9]) > 0.0);
        let x = [1.2, -0.9];
        let g = b.gradient(&x);
        let h = 1e-6;
        let fd0 = (b.value(&[x[0] + h, x[1]]) - b.value(&[x[0] - h, x[1]])) / (2.0 * h);
        assert!((g[0] - fd0).abs() < 1e-6);
        assert!(BumpFunction::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn grid_is_exact_for_polynomials_per_axis() {
        let region = BoxRegion::new(vec![-1.0, 0.0], vec![2.0, 0.5]).unwrap();
        let grid = QuadratureGrid::new(region, 4, 1).unwrap();
        // degree 7 in x, degree 7 in y
        let v = grid.integrate(|x| Ok(x[0].powi(7) * x[1].powi(7))).unwrap();
        let want = (2f64.powi(8) - 1.0) / 8.0 * (0.5f64.powi(8) / 8.0);
        assert!((v - want).abs() < 1e-14 * want.abs().max(1.0), "{v} vs {want}");
        assert_eq!(grid.node_count(), 16);
    }

    #[test]
    fn bump_normalization_matches_radial_oracle() {
        for (n, rho) in [(1usize, 0.7), (2, 1.0), (2, 0.3), (3, 1.3)] {
            let phi = BumpFunction::new(vec![0.25; n], rho).unwrap();
            let grid = QuadratureGrid::for_bump(&phi);
            let got = grid.integrate(|x| Ok(phi.value(x))).unwrap();
            let radial = adaptive_simpson(
                &|t: f64| {
                    if t >= 1.0 {
                        0.0
                    } else {
                        (-1.0 / (1.0 - t * t)).exp() * t.powi(n as i32 - 1)
                    }
                },
                0.0,
                1.0,
                1e-14,
            );
            let omega = 2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n);
            let want = omega * rho.powi(n as i32) * radial;
            assert!(((got - want) / want).abs() < 1e-6, "n={n}: {got} vs {want}");
        }
    }

    // Γ(n/2) for small n
    fn gamma_half(n: usize) -> f64 {
        match n {
            1 => PI.sqrt(),
            2 => 1.0,
            3 => PI.sqrt() / 2.0,
            4 => 1.0,
            _ => unreachable!(),
        }
    }

    #[test]
    fn pairing_examples() {
        let phi = disk_bump();
        let grid = QuadratureGrid::for_bump(&phi);
        let aff = ScalarField::affine(vec![1.5, -0.5], 2.0);
        assert!(weak_pairing(&aff, &phi, 2.0, &grid).unwrap().abs() < 1e-9);
        let sq = ScalarField::norm_sq(2);
        let a = weak_pairing(&sq, &phi, 2.0, &grid).unwrap();
        assert!(a <= -1e-3);
        let mass = grid.integrate(|x| Ok(phi.value(x))).unwrap();
        assert!((a + 4.0 * mass).abs() < 1e-6 * a.abs(), "{a} vs {}", -4.0 * mass);
        let b = weak_pairing(&sq.negated(), &phi, 2.0, &grid).unwrap();
        assert_eq!(a, -b);

        let small = QuadratureGrid::new(BoxRegion::cube(-0.5, 0.5, 2).unwrap(), 8, 1).unwrap();
        assert!(matches!(
            weak_pairing(&sq, &phi, 2.0, &small),
            Err(Error::SupportNotCovered { .. })
        ));
    }

    #[test]
    fn antisymmetry_is_exact() {
        for f in convex_catalog(2) {
            for phi in draw_bumps(&BoxRegion::cube(-2.0, 2.0, 2).unwrap(), 5, 4) {
                let grid = QuadratureGrid::for_bump(&phi);
                let a = weak_pairing(&f, &phi, 2.0, &grid).unwrap();
                let b = weak_pairing(&f.negated(), &phi, 2.0, &grid).unwrap();
                assert_eq!(a, -b, "{f}");
            }
        }
    }

    #[test]
    fn integration_by_parts_consistency() {
        let region = BoxRegion::cube(-1.5, 1.5, 2).unwrap();
        for f in smooth_convex_catalog(2) {
            for p in [1.5, 2.0, 3.0] {
                for phi in draw_bumps(&region, 4, 17) {
                    // −∫Δ_p f·φ is a singular integral across a kink
                    if f.kink_distance(&phi.center).unwrap() <= phi.radius {
                        continue;
                    }
                    let grid = QuadratureGrid::for_bump(&phi);
                    let mut min_grad = f64::INFINITY;
                    let rhs = -grid
                        .integrate(|x| {
                            let w = phi.value(x);
                            if w == 0.0 {
                                return Ok(0.0);
                            }
                            let g = f.gradient(x)?;
                            min_grad = min_grad.min(g.iter().map(|v| v * v).sum::<f64>().sqrt());
                            Ok(p_laplacian(&f, x, PLaplaceParams::new(p, 0.0)?)? * w)
                        })
                        .unwrap();
                    if min_grad <= 0.1 {
                        continue;
                    }
                    let lhs = weak_pairing(&f, &phi, p, &grid).unwrap();
                    assert!(
                        (lhs - rhs).abs() <= 1e-3 * rhs.abs() + 1e-12,
                        "{f} p={p}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn verdict_examples() {
        let region = BoxRegion::cube(-2.0, 2.0, 2).unwrap();
        let v = subharmonic_verdict(&ScalarField::exp_norm(2), 3.0, &region, 100, 7).unwrap();
        assert_eq!(v.status, WeakStatus::Holds);
        let v = subharmonic_verdict(&ScalarField::norm_sq(2).negated(), 2.0, &region, 100, 7).unwrap();
        assert_eq!(v.status, WeakStatus::Fails);
        let w = v.witness.unwrap();
        assert!(w.pairing > w.tolerance);
        let v = subharmonic_verdict(&ScalarField::norm(2), 2.0, &region, 100, 7).unwrap();
        assert_eq!(v.status, WeakStatus::Holds);
        assert!(subharmonic_verdict(&ScalarField::norm(2), 2.0, &region, 0, 7).is_err());
    }

    #[test]
    fn domain_errors_make_the_verdict_undetermined() {
        let region = BoxRegion::cube(-1.0, 1.0, 1).unwrap();
        let f = ScalarField::expr("sqrt(x1)", 1).unwrap();
        let v = subharmonic_verdict(&f, 2.0, &region, 20, 1).unwrap();
        assert!(v.errors > 0);
        assert_ne!(v.status, WeakStatus::Holds);
    }

    #[test]
    fn verdict_is_seed_deterministic() {
        let region = BoxRegion::cube(-2.0, 2.0, 2).unwrap();
        let f = ScalarField::expr("x1^2 - x2^2", 2).unwrap();
        let a = subharmonic_verdict(&f, 3.0, &region, 30, 99).unwrap();
        let b = subharmonic_verdict(&f, 3.0, &region, 30, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn comparison_examples() {
        let sq = ScalarField::expr("x1^2", 1).unwrap();
        assert_eq!(comparison_1d(&sq, 0.0, 1.0, 100).unwrap().status, WeakStatus::Holds);
        let cube = ScalarField::expr("x1^3", 1).unwrap();
        let v = comparison_1d(&cube, -1.0, 1.0, 100).unwrap();
        assert_eq!(v.status, WeakStatus::Fails);
        // at λ = 0.25: f = −0.125, h = −0.5
        let at_quarter = cube.value(&[-0.5]).unwrap() - (-0.5);
        assert!((at_quarter - 0.375).abs() < 1e-15);
        assert!(v.worst_excess >= at_quarter);
        let aff = ScalarField::affine(vec![3.0], -2.0);
        let v = comparison_1d(&aff, -4.0, 7.0, 50).unwrap();
        assert_eq!(v.status, WeakStatus::Holds);
        assert!(v.worst_excess.abs() < 1e-12);
        assert!(comparison_1d(&aff, 1.0, 1.0, 5).is_err());
    }

    #[test]
    fn closure_examples() {
        let region = BoxRegion::cube(-2.0, 2.0, 2).unwrap();
        let config = WeakTestConfig {
            trials: 30,
            seed: 3,
            ..WeakTestConfig::default()
        };
        let r = closure_suite(
            &ScalarField::norm_sq(2),
            &ScalarField::exp_norm(2),
            3.0,
            2.0,
            &region,
            &config,
        )
        .unwrap();
        assert!(r.all_hold(), "{r:#?}");

        let a1 = ScalarField::affine(vec![1.0, 0.5], 0.0);
        let a2 = ScalarField::affine(vec![-0.5, 2.0], 1.0);
        let r = closure_suite(&a1, &a1, 2.0, 2.0, &region, &config).unwrap();
        assert!(r.all_hold());
        let worst = r.entries[3].verdict.worst.as_ref().unwrap();
        assert!(worst.pairing.abs() < 1e-9);
        assert!(closure_suite(&a1, &a2, 2.0, 2.0, &region, &config).unwrap().all_hold());

        let x1 = ScalarField::expr("abs(x1)", 2).unwrap();
        let x2 = ScalarField::expr("abs(x2)", 2).unwrap();
        let r = closure_suite(&x1, &x2, 1.0, 2.0, &region, &config).unwrap();
        assert_eq!(r.entries[4].verdict.status, WeakStatus::Holds);
    }
}
