//! One-variable profiles `g(r)`, `r ≥ 0`, with first and second derivatives
//! and a log-magnitude evaluator for far-field growth work.

use std::fmt;

use crate::error::{Error, Result};
use crate::exprlang::Expr;

#[derive(Debug, Clone, PartialEq)]
pub enum RadialFunction {
    /// `c · r^k · e^{β r}`
    PowerExp {
        c: f64,
        k: f64,
        beta: f64,
    },
    /// `c · e^{β r²}`
    Gaussian {
        c: f64,
        beta: f64,
    },
    /// `Σ a_i r^i`, coefficients in ascending degree.
    Polynomial(Vec<f64>),
    /// Expression in `r` (parsed over one coordinate).
    Expr(Expr),
    Scaled(f64, Box<RadialFunction>),
}

impl RadialFunction {
    pub fn constant(c: f64) -> Self {
        Self::PowerExp { c, k: 0.0, beta: 0.0 }
    }

    /// `e^{r²}`
    pub fn exp_sq() -> Self {
        Self::Gaussian { c: 1.0, beta: 1.0 }
    }

    /// `e^{β r}`
    pub fn exp(beta: f64) -> Self {
        Self::PowerExp { c: 1.0, k: 0.0, beta }
    }

    /// `r^k`
    pub fn power(k: f64) -> Self {
        Self::PowerExp { c: 1.0, k, beta: 0.0 }
    }

    /// `r^k e^{β r}`
    pub fn power_exp(k: f64, beta: f64) -> Self {
        Self::PowerExp { c: 1.0, k, beta }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::Polynomial(coeffs)
    }

    pub fn from_expr(text: &str) -> Result<Self> {
        Ok(Self::Expr(Expr::parse(text, 1)?))
    }

    pub fn scaled(self, lambda: f64) -> Self {
        Self::Scaled(lambda, Box::new(self))
    }

    /// Parses a profile spec: `const:c`, `exp_sq`, `exp:β`, `power:k`,
    /// `powexp:c,k,β`, `gauss:c,β`, `poly:a0,a1,...`, or an expression in `r`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let nums = |body: &str| -> Result<Vec<f64>> {
            body.split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::FieldSpec {
                    spec: spec.to_string(),
                    reason: "expected comma-separated numbers".into(),
                })
        };
        let want = |v: Vec<f64>, n: usize| -> Result<Vec<f64>> {
            if v.len() == n {
                Ok(v)
            } else {
                Err(Error::FieldSpec {
                    spec: spec.to_string(),
                    reason: format!("expected {n} number(s), got {}", v.len()),
                })
            }
        };
        if spec == "exp_sq" {
            return Ok(Self::exp_sq());
        }
        if let Some((head, body)) = spec.split_once(':') {
            return match head.trim() {
                "const" => Ok(Self::constant(want(nums(body)?, 1)?[0])),
                "exp" => Ok(Self::exp(want(nums(body)?, 1)?[0])),
                "power" => Ok(Self::power(want(nums(body)?, 1)?[0])),
                "powexp" => {
                    let v = want(nums(body)?, 3)?;
                    Ok(Self::PowerExp {
                        c: v[0],
                        k: v[1],
                        beta: v[2],
                    })
                }
                "gauss" => {
                    let v = want(nums(body)?, 2)?;
                    Ok(Self::Gaussian { c: v[0], beta: v[1] })
                }
                "poly" => Ok(Self::Polynomial(nums(body)?)),
                "expr" => Self::from_expr(body),
                other => Err(Error::FieldSpec {
                    spec: spec.to_string(),
                    reason: format!("unknown profile kind '{other}'"),
                }),
            };
        }
        Self::from_expr(spec)
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        Ok(self.derivs(r)?.0)
    }

    /// `(g, g', g'')` at `r`. Analytic except for expressions, where `g'`
    /// is exact (dual numbers) and `g''` a central difference of `g'` with
    /// step `1e-4·(1 + r)`.
    pub fn derivs(&self, r: f64) -> Result<(f64, f64, f64)> {
        match self {
            Self::PowerExp { c, k, beta } => {
                let e = (beta * r).exp();
                // coef·r^j, with zero coefficients dropped so r = 0 never forms 0·∞
                let term = |coef: f64, j: f64| {
                    if coef == 0.0 {
                        0.0
                    } else if j == 0.0 {
                        coef
                    } else {
                        coef * r.powf(j)
                    }
                };
                let g = c * term(1.0, *k) * e;
                let g1 = c * e * (term(*k, k - 1.0) + term(*beta, *k));
                let g2 = c * e * (term(k * (k - 1.0), k - 2.0) + term(2.0 * k * beta, k - 1.0) + term(beta * beta, *k));
                Ok((g, g1, g2))
            }
            Self::Gaussian { c, beta } => {
                let g = c * (beta * r * r).exp();
                Ok((g, 2.0 * beta * r * g, (2.0 * beta + 4.0 * beta * beta * r * r) * g))
            }
            Self::Polynomial(a) => {
                let mut g = 0.0;
                let mut g1 = 0.0;
                let mut g2 = 0.0;
                for &ai in a.iter().rev() {
                    g2 = g2 * r + 2.0 * g1;
                    g1 = g1 * r + g;
                    g = g * r + ai;
                }
                Ok((g, g1, g2))
            }
            Self::Expr(e) => {
                let (g, g1) = e.directional_derivative(&[r], &[1.0])?;
                let h = 1e-4 * (1.0 + r.abs());
                let (_, up) = e.directional_derivative(&[r + h], &[1.0])?;
                let (_, down) = e.directional_derivative(&[r - h], &[1.0])?;
                Ok((g, g1, (up - down) / (2.0 * h)))
            }
            Self::Scaled(l, inner) => {
                let (g, g1, g2) = inner.derivs(r)?;
                Ok((l * g, l * g1, l * g2))
            }
        }
    }

    /// `ln|g(r)|`; `-inf` where `g` vanishes. Stays finite far beyond the
    /// range where `g` itself is representable.
    pub fn ln_abs(&self, r: f64) -> Result<f64> {
        match self {
            Self::PowerExp { c, k, beta } => {
                if *c == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let pow = if *k == 0.0 { 0.0 } else { k * r.ln() };
                Ok(c.abs().ln() + pow + beta * r)
            }
            Self::Gaussian { c, beta } => {
                if *c == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(c.abs().ln() + beta * r * r)
            }
            Self::Polynomial(_) => Ok(self.value(r)?.abs().ln()),
            Self::Expr(e) => Ok(e.evaluate_log_abs(&[r])?.ln),
            Self::Scaled(l, inner) => {
                if *l == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(l.abs().ln() + inner.ln_abs(r)?)
            }
        }
    }

    /// True when the profile is a known constant (catalog forms only).
    pub fn is_constant(&self) -> bool {
        match self {
            Self::PowerExp { c, k, beta } => *c == 0.0 || (*k == 0.0 && *beta == 0.0),
            Self::Gaussian { c, beta } => *c == 0.0 || *beta == 0.0,
            Self::Polynomial(a) => a.iter().skip(1).all(|&v| v == 0.0),
            Self::Expr(e) => matches!(e.root(), crate::exprlang::Node::Const(_)),
            Self::Scaled(l, inner) => *l == 0.0 || inner.is_constant(),
        }
    }
}

impl fmt::Display for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerExp { c, k, beta } => write!(f, "powexp:{c},{k},{beta}"),
            Self::Gaussian { c, beta } => write!(f, "gauss:{c},{beta}"),
            Self::Polynomial(a) => {
                let parts: Vec<String> = a.iter().map(|v| v.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            Self::Expr(e) => write!(f, "expr:{e}"),
            Self::Scaled(l, inner) => write!(f, "{l}*[{inner}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Vec<RadialFunction> {
        vec![
            RadialFunction::exp_sq(),
            RadialFunction::exp(1.0),
            RadialFunction::exp(-1.0),
            RadialFunction::power(3.0),
            RadialFunction::power(-1.0),
            RadialFunction::power_exp(2.0, 0.5),
            RadialFunction::Gaussian { c: 2.0, beta: -1.0 },
            RadialFunction::polynomial(vec![1.0, 0.0, 1.0]),
            RadialFunction::polynomial(vec![0.5, -2.0, 0.0, 0.25]),
            RadialFunction::from_expr("r^2 * exp(-r) + log(1 + r)").unwrap(),
            RadialFunction::exp_sq().scaled(-3.0),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for g in catalog() {
            for i in 0..40 {
                let r = 0.1 + 9.9 * i as f64 / 39.0;
                let (v, d1, d2) = g.derivs(r).unwrap();
                let h = 1e-5 * (1.0 + r);
                let fd1 = (g.value(r + h).unwrap() - g.value(r - h).unwrap()) / (2.0 * h);
                let (_, up, _) = g.derivs(r + h).unwrap();
                let (_, down, _) = g.derivs(r - h).unwrap();
                let fd2 = (up - down) / (2.0 * h);
                let scale = |x: f64| 1.0 + x.abs() + v.abs();
                assert!((d1 - fd1).abs() <= 1e-5 * scale(fd1), "{g} g' at {r}: {d1} vs {fd1}");
                assert!((d2 - fd2).abs() <= 1e-5 * scale(fd2), "{g} g'' at {r}: {d2} vs {fd2}");
            }
        }
    }

    #[test]
    fn ln_abs_matches_value() {
        for g in catalog() {
            for r in [0.3, 2.0, 7.5] {
                let v = g.value(r).unwrap();
                assert!((g.ln_abs(r).unwrap() - v.abs().ln()).abs() < 1e-10, "{g} at {r}");
            }
        }
        assert_eq!(RadialFunction::constant(0.0).ln_abs(5.0).unwrap(), f64::NEG_INFINITY);
        let far = RadialFunction::power_exp(2.0, 0.5).ln_abs(1e12).unwrap();
        assert!((far - (2.0 * 1e12f64.ln() + 0.5e12)).abs() < 1e-3);
    }

    #[test]
    fn parse_specs() {
        assert_eq!(RadialFunction::parse("const:5").unwrap(), RadialFunction::constant(5.0));
        assert_eq!(RadialFunction::parse("exp_sq").unwrap(), RadialFunction::exp_sq());
        assert_eq!(
            RadialFunction::parse("powexp:1,2,-1").unwrap(),
            RadialFunction::power_exp(2.0, -1.0)
        );
        assert!(matches!(
            RadialFunction::parse("r^2+1").unwrap(),
            RadialFunction::Expr(_)
        ));
        assert!(RadialFunction::parse("gauss:1").is_err());
        assert!(RadialFunction::parse("nope:1").is_err());
        assert!(RadialFunction::constant(3.0).is_constant());
        assert!(!RadialFunction::polynomial(vec![1.0, 0.0, 1.0]).is_constant());
    }

    #[test]
    fn power_exp_at_origin() {
        let (g, g1, g2) = RadialFunction::power(1.0).derivs(0.0).unwrap();
        assert_eq!((g, g1, g2), (0.0, 1.0, 0.0));
        let (g, g1, g2) = RadialFunction::exp(-1.0).derivs(0.0).unwrap();
        assert_eq!((g, g1, g2), (1.0, -1.0, 1.0));
    }
}
