use crate::context::Context;
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr};
use crate::jet::JetCoord;

/// Solved form `u^j_{b_j x^d} = Φ^j` used as rewrite rules. A dependent
/// with order `0` has no rule.
#[derive(Clone, Debug, PartialEq)]
pub struct KovalevskayaData {
    pub direction: usize,
    pub orders: Vec<u32>,
    pub rhs: Vec<Expr>,
}

impl KovalevskayaData {
    pub fn new(direction: usize, orders: Vec<u32>, rhs: Vec<Expr>) -> Self {
        KovalevskayaData { direction, orders, rhs }
    }

    /// Whether `j` is a leading coordinate, i.e. `α_d ≥ b_j` for a dependent
    /// carrying a rule.
    pub fn is_leading(&self, j: &JetCoord) -> bool {
        match self.orders.get(j.dep) {
            Some(&b) if b > 0 => j.alpha.get(self.direction) >= b,
            _ => false,
        }
    }

    /// The leading coordinate `u^j_{b_j x^d}` owned by dependent `dep`.
    pub fn pivot(&self, dep: usize, n: usize) -> Option<JetCoord> {
        let b = *self.orders.get(dep)?;
        (b > 0).then(|| JetCoord::new(dep, crate::jet::MultiIndex::pure(n, self.direction, b)))
    }

    /// First leading coordinate found in some right-hand side, if any.
    pub fn independence_violation(&self) -> Option<(usize, JetCoord)> {
        for (i, phi) in self.rhs.iter().enumerate() {
            if self.orders[i] == 0 {
                continue;
            }
            if let Some(j) = phi.jets().into_iter().find(|j| self.is_leading(j)) {
                return Some((i, j));
            }
        }
        None
    }
}

/// Equations `F^i = 0` over a declaration context.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeSystem {
    pub context: Context,
    pub equations: Vec<Expr>,
    pub kovalevskaya: Option<KovalevskayaData>,
}

impl PdeSystem {
    pub fn new(context: Context, equations: Vec<Expr>) -> PdeSystem {
        PdeSystem { context, equations, kovalevskaya: None }
    }

    pub fn with_kovalevskaya(mut self, data: KovalevskayaData) -> PdeSystem {
        self.kovalevskaya = Some(data);
        self
    }

    pub fn is_square(&self) -> bool {
        self.equations.len() == self.context.m()
    }

    pub fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{} equations for {} dependent variables",
                self.equations.len(),
                self.context.m()
            )))
        }
    }

    pub fn kovalevskaya_data(&self) -> Result<&KovalevskayaData> {
        self.kovalevskaya.as_ref().ok_or(Error::MissingKovalevskaya)
    }

    /// Checks that every leaf of every equation is declared.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.context.n(), self.context.m());
        for e in &self.equations {
            for a in e.atoms_deep() {
                let ok = match &a {
                    Atom::Indep(i) => *i < n,
                    Atom::Const(c) => *c < self.context.constants.len(),
                    Atom::Jet(j) => j.dep < m && j.alpha.dim() == n,
                    Atom::Func(f) => f.func < self.context.functions.len(),
                    _ => true,
                };
                if !ok {
                    return Err(Error::UndeclaredVariable(format!("{a:?}")));
                }
            }
        }
        Ok(())
    }
}
