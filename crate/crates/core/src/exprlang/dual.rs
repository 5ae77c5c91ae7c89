//! First-order forward-mode dual numbers.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// `value + deriv·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub const fn new(value: f64, deriv: f64) -> Self {
        Self { value, deriv }
    }

    pub const fn constant(value: f64) -> Self {
        Self { value, deriv: 0.0 }
    }

    pub const fn variable(value: f64) -> Self {
        Self { value, deriv: 1.0 }
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        Self::new(e, e * self.deriv)
    }

    pub fn ln(self) -> Self {
        Self::new(self.value.ln(), self.deriv / self.value)
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        Self::new(s, self.deriv / (2.0 * s))
    }

    /// `|x|` with the right-hand branch at the kink: `abs'(0) = 1`.
    pub fn abs(self) -> Self {
        if self.value < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Ties take the first argument.
    pub fn max(self, other: Self) -> Self {
        if self.value >= other.value {
            self
        } else {
            other
        }
    }

    /// Ties take the first argument.
    pub fn min(self, other: Self) -> Self {
        if self.value <= other.value {
            self
        } else {
            other
        }
    }

    /// `self^k` for a constant real exponent.
    pub fn powf(self, k: f64) -> Self {
        if k == 0.0 {
            return Self::constant(1.0);
        }
        let v = self.value.powf(k);
        // k·x^(k-1) computed without dividing by x so that x = 0 stays finite for k ≥ 1
        let dv = if k == 1.0 { 1.0 } else { k * self.value.powf(k - 1.0) };
        Self::new(v, dv * self.deriv)
    }

    /// `self^other` with both sides varying; requires a positive base.
    pub fn pow(self, other: Self) -> Self {
        if other.deriv == 0.0 {
            return self.powf(other.value);
        }
        let v = self.value.powf(other.value);
        let d = v * (other.deriv * self.value.ln() + other.value * self.deriv / self.value);
        Self::new(v, d)
    }
}

impl fmt::Display for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.value, self.deriv)
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.value * rhs.value, self.value * rhs.deriv + self.deriv * rhs.value)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let v = self.value / rhs.value;
        Self::new(v, (self.deriv - v * rhs.deriv) / rhs.value)
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kinks_take_right_branch() {
        assert_eq!(Dual::new(0.0, 3.0).abs().deriv, 3.0);
        assert_eq!(Dual::new(-1.0, 3.0).abs().deriv, -3.0);
        let a = Dual::new(2.0, 1.0);
        let b = Dual::new(2.0, 5.0);
        assert_eq!(a.max(b).deriv, 1.0);
        assert_eq!(b.min(a).deriv, 5.0);
    }

    #[test]
    fn powf_at_zero_base() {
        let x = Dual::variable(0.0);
        assert_eq!(x.powf(2.0), Dual::new(0.0, 0.0));
        assert_eq!(x.powf(1.0), Dual::new(0.0, 1.0));
        assert_eq!(x.powf(0.0), Dual::new(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn leibniz_rule_is_exact(a in -1e3f64..1e3, da in -1e3f64..1e3, b in -1e3f64..1e3, db in -1e3f64..1e3) {
            let x = Dual::new(a, da);
            let y = Dual::new(b, db);
            let prod = x * y;
            prop_assert_eq!(prod.deriv, a * db + da * b);
            prop_assert_eq!(prod.value, a * b);
        }

        #[test]
        fn quotient_matches_product_of_inverse(a in 0.5f64..10.0, b in 0.5f64..10.0) {
            let x = Dual::variable(a);
            let q = x / Dual::constant(b);
            prop_assert!((q.deriv - 1.0 / b).abs() <= 1e-15 * (1.0 / b));
        }
    }
}
