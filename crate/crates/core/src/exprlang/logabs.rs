//! Log-magnitude evaluation: `(sign, ln|value|)` with overflow-free products,
//! powers and exponentials.

use super::{domain, BinOp, EvalError, Func, Node};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAbs {
    /// -1, 0 or +1.
    pub sign: f64,
    /// `ln|value|`; `-inf` when `sign == 0`.
    pub ln: f64,
}

impl LogAbs {
    pub const ZERO: LogAbs = LogAbs {
        sign: 0.0,
        ln: f64::NEG_INFINITY,
    };

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self {
                sign: v.signum(),
                ln: v.abs().ln(),
            }
        }
    }

    /// The plain value; may overflow to ±inf or underflow to 0.
    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln.exp()
        }
    }

    fn neg(self) -> Self {
        Self {
            sign: -self.sign,
            ln: self.ln,
        }
    }

    fn mul(self, o: Self) -> Self {
        if self.sign == 0.0 || o.sign == 0.0 {
            return Self::ZERO;
        }
        Self {
            sign: self.sign * o.sign,
            ln: self.ln + o.ln,
        }
    }

    fn add(self, o: Self) -> Self {
        if self.sign == 0.0 {
            return o;
        }
        if o.sign == 0.0 {
            return self;
        }
        let (big, small) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        if big.ln == f64::INFINITY {
            return big;
        }
        let ratio = (small.ln - big.ln).exp();
        if big.sign == small.sign {
            Self {
                sign: big.sign,
                ln: big.ln + ratio.ln_1p(),
            }
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            Self {
                sign: big.sign,
                ln: big.ln + (-ratio).ln_1p(),
            }
        }
    }

    /// Ordering of the underlying signed values.
    fn ge(self, o: Self) -> bool {
        if self.sign != o.sign {
            self.sign > o.sign
        } else if self.sign > 0.0 {
            self.ln >= o.ln
        } else if self.sign < 0.0 {
            self.ln <= o.ln
        } else {
            true
        }
    }
}

pub(super) fn eval(node: &Node, point: &[f64]) -> Result<LogAbs, EvalError> {
    match node {
        Node::Const(c) => Ok(LogAbs::from_value(*c)),
        Node::Var(i) => Ok(LogAbs::from_value(point[*i])),
        Node::Radius => Ok(LogAbs::from_value(super::norm(point))),
        Node::Neg(a) => Ok(eval(a, point)?.neg()),
        Node::Binary(op, a, b) => {
            let x = eval(a, point)?;
            let y = eval(b, point)?;
            match op {
                BinOp::Add => Ok(x.add(y)),
                BinOp::Sub => Ok(x.add(y.neg())),
                BinOp::Mul => Ok(x.mul(y)),
                BinOp::Div => {
                    if y.sign == 0.0 {
                        return Err(domain(node, "division by zero"));
                    }
                    Ok(x.mul(LogAbs {
                        sign: y.sign,
                        ln: -y.ln,
                    }))
                }
                BinOp::Pow => {
                    // exponents are small in practice; the plain value keeps integers exact
                    let k = match super::eval_node::<f64>(b, point) {
                        Ok(k) if k.is_finite() => k,
                        _ => y.value(),
                    };
                    if k == 0.0 {
                        return Ok(LogAbs::from_value(1.0));
                    }
                    if x.sign == 0.0 {
                        return if k > 0.0 {
                            Ok(LogAbs::ZERO)
                        } else {
                            Err(domain(node, "zero base with negative exponent"))
                        };
                    }
                    let sign = if x.sign < 0.0 {
                        if k.fract() != 0.0 {
                            return Err(domain(node, "negative base with non-integer exponent"));
                        }
                        if (k / 2.0).fract() == 0.0 {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        1.0
                    };
                    let plain = x.value().powf(k);
                    if plain.is_finite() && plain != 0.0 {
                        return Ok(LogAbs::from_value(plain));
                    }
                    Ok(LogAbs { sign, ln: k * x.ln })
                }
            }
        }
        Node::Call(func, args) => {
            let a = eval(&args[0], point)?;
            match func {
                Func::Exp => {
                    let v = a.value();
                    Ok(LogAbs { sign: 1.0, ln: v })
                }
                Func::Log => {
                    if a.sign <= 0.0 {
                        return Err(domain(node, "log of nonpositive value"));
                    }
                    Ok(LogAbs::from_value(a.ln))
                }
                Func::Sqrt => {
                    if a.sign < 0.0 {
                        return Err(domain(node, "sqrt of negative value"));
                    }
                    Ok(LogAbs {
                        sign: a.sign,
                        ln: a.ln / 2.0,
                    })
                }
                Func::Abs => Ok(LogAbs {
                    sign: a.sign.abs(),
                    ln: a.ln,
                }),
                Func::Max | Func::Min => {
                    let b = eval(&args[1], point)?;
                    let a_wins = a.ge(b) == (*func == Func::Max);
                    Ok(if a_wins { a } else { b })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::exprlang::parse;

    #[test]
    fn agrees_with_plain_evaluation_in_range() {
        let cases = [
            "r^2 + 1",
            "exp(-r) * r^3",
            "-(x1 - 5) * 2",
            "max(x1, -x1) - min(3, x1)",
            "sqrt(r) / (1 + r)",
            "log(2 + r) ^ 3",
            "(x1 - 2)^3",
        ];
        for src in cases {
            let e = parse(src, 1).unwrap();
            for x in [0.3, 1.7, 4.0, 11.0] {
                let plain = e.evaluate(&[x]).unwrap();
                let la = e.evaluate_log_abs(&[x]).unwrap();
                assert!(
                    (la.value() - plain).abs() <= 1e-12 * (1.0 + plain.abs()),
                    "{src} at {x}"
                );
            }
        }
    }

    #[test]
    fn survives_overflow_of_the_plain_value() {
        let e = parse("r^2 * exp(0.5 * r)", 1).unwrap();
        let r = 1e12;
        let la = e.evaluate_log_abs(&[r]).unwrap();
        let want = 2.0 * r.ln() + 0.5 * r;
        assert_eq!(la.sign, 1.0);
        assert!((la.ln - want).abs() <= 1e-12 * want);
        let tiny = parse("exp(-r^2)", 1).unwrap().evaluate_log_abs(&[1e6]).unwrap();
        assert!((tiny.ln + 1e12).abs() <= 1e-12 * 1e12);
    }
}
