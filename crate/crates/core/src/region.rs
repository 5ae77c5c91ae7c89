//! Axis-aligned boxes and seeded point sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidArgument(format!(
                "box bounds must be nonempty and of equal length ({} vs {})",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("box needs lo < hi on every axis".into()));
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// Parses `"lo,hi"` (replicated over `dim` axes) or `"lo,hi;lo,hi;..."`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let bad = |why: &str| Error::InvalidArgument(format!("box '{spec}': {why}"));
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for axis in spec.split(';') {
            let v: Vec<f64> = axis
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("expected numbers"))?;
            if v.len() != 2 {
                return Err(bad("each axis needs exactly 'lo,hi'"));
            }
            lo.push(v[0]);
            hi.push(v[1]);
        }
        if lo.len() == 1 && dim > 1 {
            lo = vec![lo[0]; dim];
            hi = vec![hi[0]; dim];
        }
        if lo.len() != dim {
            return Err(bad(&format!("has {} axes, dimension is {dim}", lo.len())));
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Shortest side length.
    pub fn size(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn uniform_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| rng.random_range(*a..*b))
            .collect()
    }
}

/// Sample plan for sample-relative convexity checks: uniform points in a box
/// plus a radial ladder of points at fixed radii along random directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub region: BoxRegion,
    pub uniform: usize,
    pub ladder: Vec<f64>,
    pub directions_per_radius: usize,
    pub seed: u64,
}

impl SamplePlan {
    pub fn new(region: BoxRegion, uniform: usize, seed: u64) -> Self {
        Self {
            region,
            uniform,
            ladder: Vec::new(),
            directions_per_radius: 0,
            seed,
        }
    }

    pub fn with_ladder(mut self, radii: Vec<f64>, directions_per_radius: usize) -> Self {
        self.ladder = radii;
        self.directions_per_radius = directions_per_radius;
        self
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let dim = self.region.dim();
        let mut out: Vec<Vec<f64>> = (0..self.uniform).map(|_| self.region.uniform_point(&mut rng)).collect();
        for &r in &self.ladder {
            for _ in 0..self.directions_per_radius {
                let u = random_unit(&mut rng, dim);
                out.push(u.into_iter().map(|c| c * r).collect());
            }
        }
        out
    }
}

pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        let b = BoxRegion::parse("-2,2", 3).unwrap();
        assert_eq!(b.lo, vec![-2.0; 3]);
        let b = BoxRegion::parse("-1,1; 0,4", 2).unwrap();
        assert_eq!(b.hi, vec![1.0, 4.0]);
        assert_eq!(b.size(), 2.0);
        assert!(BoxRegion::parse("1,0", 1).is_err());
        assert!(BoxRegion::parse("0,1;0,1", 3).is_err());
        assert!(BoxRegion::parse("a,b", 1).is_err());
    }

    #[test]
    fn sample_plan_is_seeded() {
        let plan = SamplePlan::new(BoxRegion::cube(-1.0, 1.0, 2).unwrap(), 10, 3).with_ladder(vec![0.5, 4.0], 3);
        let a = plan.points();
        assert_eq!(a.len(), 16);
        assert_eq!(a, plan.points());
        assert!(a[..10].iter().all(|p| plan.region.contains(p)));
        let r = a[15].iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((r - 4.0).abs() < 1e-12);
    }
}
