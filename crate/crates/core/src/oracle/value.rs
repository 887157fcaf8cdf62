use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expr::Rational;

/// A numeric value at a sample point: exact while every operation stays in
/// the rationals, floating point otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Float(x) => write!(f, "{x:e}"),
        }
    }
}

impl Value {
    pub fn zero() -> Value {
        Value::Exact(Rational::zero())
    }

    pub fn one() -> Value {
        Value::Exact(Rational::one())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Float(x) => *x == 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Value::Exact(_) => true,
            Value::Float(x) => x.is_finite(),
        }
    }

    pub fn add(&self, o: &Value) -> Value {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Float(self.to_f64() + o.to_f64()),
        }
    }

    pub fn sub(&self, o: &Value) -> Value {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(-a),
            Value::Float(x) => Value::Float(-x),
        }
    }

    pub fn mul(&self, o: &Value) -> Value {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => Value::Float(self.to_f64() * o.to_f64()),
        }
    }

    /// `None` on division by zero.
    pub fn div(&self, o: &Value) -> Option<Value> {
        if o.is_zero() {
            return None;
        }
        Some(match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a / b),
            _ => Value::Float(self.to_f64() / o.to_f64()),
        })
    }

    pub fn powi(&self, k: i64) -> Option<Value> {
        match self {
            Value::Exact(a) => {
                if k < 0 && a.is_zero() {
                    return None;
                }
                let mut out = Rational::one();
                for _ in 0..k.unsigned_abs() {
                    out *= a;
                }
                Some(Value::Exact(if k < 0 { out.recip() } else { out }))
            }
            Value::Float(x) => {
                if k < 0 && *x == 0.0 {
                    return None;
                }
                Some(Value::Float(x.powi(k as i32)))
            }
        }
    }

    /// General power; non-integer exponents require a positive base.
    pub fn pow(&self, e: &Value) -> Option<Value> {
        if let Value::Exact(r) = e {
            if r.is_integer() {
                return self.powi(r.to_integer().to_i64()?);
            }
        }
        let b = self.to_f64();
        if b <= 0.0 {
            return None;
        }
        let out = b.powf(e.to_f64());
        out.is_finite().then_some(Value::Float(out))
    }

    pub fn ln(&self) -> Option<Value> {
        let b = self.to_f64();
        (b > 0.0).then(|| Value::Float(b.ln()))
    }

    pub fn abs(&self) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(a.abs()),
            Value::Float(x) => Value::Float(x.abs()),
        }
    }
}
