//! Evaluation-only closed-form expressions in one complex variable.
//!
//! Multiplier entries for every built-in bundle construction live in this
//! small DSL: constants, z, sums, products, integer powers, and exp. There is
//! no symbolic differentiation; curvature never differentiates a multiplier.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticExpr {
    Const(C64),
    Z,
    Add(Box<AnalyticExpr>, Box<AnalyticExpr>),
    Mul(Box<AnalyticExpr>, Box<AnalyticExpr>),
    PowI(Box<AnalyticExpr>, i32),
    Exp(Box<AnalyticExpr>),
}

impl AnalyticExpr {
    pub fn constant(c: C64) -> Self {
        AnalyticExpr::Const(c)
    }

    pub fn real(x: f64) -> Self {
        AnalyticExpr::Const(C64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        Self::real(0.0)
    }

    pub fn one() -> Self {
        Self::real(1.0)
    }

    pub fn z() -> Self {
        AnalyticExpr::Z
    }

    pub fn add(self, rhs: AnalyticExpr) -> Self {
        match (self, rhs) {
            (AnalyticExpr::Const(a), AnalyticExpr::Const(b)) => AnalyticExpr::Const(a + b),
            (AnalyticExpr::Const(a), other) | (other, AnalyticExpr::Const(a))
                if a == C64::new(0.0, 0.0) =>
            {
                other
            }
            (a, b) => AnalyticExpr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(self, rhs: AnalyticExpr) -> Self {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match (self, rhs) {
            (AnalyticExpr::Const(a), AnalyticExpr::Const(b)) => AnalyticExpr::Const(a * b),
            (AnalyticExpr::Const(a), _) | (_, AnalyticExpr::Const(a)) if a == zero => {
                AnalyticExpr::Const(zero)
            }
            (AnalyticExpr::Const(a), other) | (other, AnalyticExpr::Const(a)) if a == one => other,
            (a, b) => AnalyticExpr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(self) -> Self {
        AnalyticExpr::Const(C64::new(-1.0, 0.0)).mul(self)
    }

    pub fn powi(self, k: i32) -> Self {
        match self {
            AnalyticExpr::Const(c) => AnalyticExpr::Const(c.powi(k)),
            e => AnalyticExpr::PowI(Box::new(e), k),
        }
    }

    pub fn exp(self) -> Self {
        match self {
            AnalyticExpr::Const(c) => AnalyticExpr::Const(c.exp()),
            e => AnalyticExpr::Exp(Box::new(e)),
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        match self {
            AnalyticExpr::Const(c) => *c,
            AnalyticExpr::Z => z,
            AnalyticExpr::Add(a, b) => a.eval(z) + b.eval(z),
            AnalyticExpr::Mul(a, b) => a.eval(z) * b.eval(z),
            AnalyticExpr::PowI(a, k) => a.eval(z).powi(*k),
            AnalyticExpr::Exp(a) => a.eval(z).exp(),
        }
    }

    /// Symbolic reciprocal for the multiplier shapes the constructions
    /// produce (nonzero constants, exponentials, and their products/powers).
    pub fn recip(&self) -> Option<AnalyticExpr> {
        match self {
            AnalyticExpr::Const(c) => {
                if c.norm_sqr() == 0.0 {
                    None
                } else {
                    Some(AnalyticExpr::Const(C64::new(1.0, 0.0) / c))
                }
            }
            AnalyticExpr::Exp(a) => Some(AnalyticExpr::Exp(Box::new(a.as_ref().clone().neg()))),
            AnalyticExpr::Mul(a, b) => Some(a.recip()?.mul(b.recip()?)),
            AnalyticExpr::PowI(a, k) => Some(a.recip()?.powi(*k)),
            _ => None,
        }
    }
}
