//! Declarations shared by every expression of one system description.

use crate::error::{Error, Result};
use crate::expr::{partial_derivative, Atom, Expr, Rational};
use crate::jet::{JetCoord, MultiIndex};
use crate::oracle::{Oracle, OracleConfig, PolyModel};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantDecl {
    pub name: String,
    pub positive: bool,
}

/// An opaque function symbol. For unary symbols `chain` lists the accepted
/// spellings of its derivatives (`H'`, `H''`, …).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    pub arity: usize,
    pub chain: Vec<String>,
    /// Coefficients of a unary polynomial used as the numeric test model.
    pub model: Option<Vec<Rational>>,
}

/// Independent and dependent variables, constants, function symbols and
/// positivity assumptions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    pub independents: Vec<String>,
    pub dependents: Vec<String>,
    pub constants: Vec<ConstantDecl>,
    pub functions: Vec<FunctionDecl>,
    /// Leaves (jet coordinates) assumed positive.
    pub positive: Vec<Atom>,
}

impl Context {
    pub fn new<S: AsRef<str>>(independents: &[S], dependents: &[S]) -> Context {
        Context {
            independents: independents.iter().map(|s| s.as_ref().to_string()).collect(),
            dependents: dependents.iter().map(|s| s.as_ref().to_string()).collect(),
            ..Context::default()
        }
    }

    pub fn with_constant(mut self, name: &str, positive: bool) -> Context {
        self.constants.push(ConstantDecl { name: name.to_string(), positive });
        self
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Context {
        self.functions.push(FunctionDecl { name: name.to_string(), arity, chain: Vec::new(), model: None });
        self
    }

    /// Number of independent variables.
    pub fn n(&self) -> usize {
        self.independents.len()
    }

    /// Number of dependent variables.
    pub fn m(&self) -> usize {
        self.dependents.len()
    }

    pub fn indep_index(&self, name: &str) -> Option<usize> {
        self.independents.iter().position(|s| s == name)
    }

    pub fn dep_index(&self, name: &str) -> Option<usize> {
        self.dependents.iter().position(|s| s == name)
    }

    pub fn const_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c.name == name)
    }

    pub fn func_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    /// Expression for the named jet coordinate, e.g. `u_tx`.
    pub fn jet(&self, name: &str) -> Result<Expr> {
        match self.resolve_leaf(name)? {
            a @ Atom::Jet(_) => Ok(Expr::atom(a)),
            _ => Err(Error::UndeclaredVariable(name.to_string())),
        }
    }

    pub fn var(&self, name: &str) -> Result<Expr> {
        self.resolve_leaf(name).map(Expr::atom)
    }

    pub fn jet_coord(&self, dep: usize, alpha: &[u32]) -> JetCoord {
        JetCoord::new(dep, MultiIndex::from_slice(alpha))
    }

    /// Resolves an independent variable, constant, dependent variable or
    /// jet coordinate written with letter suffixes (`u_txx`).
    pub fn resolve_leaf(&self, name: &str) -> Result<Atom> {
        if let Some(i) = self.indep_index(name) {
            return Ok(Atom::Indep(i));
        }
        if let Some(c) = self.const_index(name) {
            return Ok(Atom::Const(c));
        }
        let (base, suffix) = match name.split_once('_') {
            Some((b, s)) => (b, Some(s)),
            None => (name, None),
        };
        let dep = self.dep_index(base).ok_or_else(|| Error::UndeclaredVariable(name.to_string()))?;
        let mut alpha = vec![0; self.n()];
        if let Some(s) = suffix {
            if s.is_empty() {
                return Err(Error::UndeclaredVariable(name.to_string()));
            }
            for ch in s.chars() {
                let i = self
                    .independents
                    .iter()
                    .position(|v| v.chars().eq(std::iter::once(ch)))
                    .ok_or_else(|| Error::UndeclaredVariable(name.to_string()))?;
                alpha[i] += 1;
            }
        }
        Ok(Atom::Jet(JetCoord::new(dep, MultiIndex::from_slice(&alpha))))
    }

    /// Name of a jet coordinate in suffix notation.
    pub fn jet_name(&self, j: &JetCoord) -> String {
        let mut s = self.dependents.get(j.dep).cloned().unwrap_or_else(|| format!("u{}", j.dep));
        if !j.alpha.is_zero() {
            s.push('_');
            for (i, &a) in j.alpha.as_slice().iter().enumerate() {
                let v = self.independents.get(i).map(String::as_str).unwrap_or("?");
                for _ in 0..a {
                    s.push_str(v);
                }
            }
        }
        s
    }

    pub fn leaf_name(&self, a: &Atom) -> String {
        match a {
            Atom::Indep(i) => self.independents.get(*i).cloned().unwrap_or_else(|| format!("x{i}")),
            Atom::Const(c) => self.constants.get(*c).map(|d| d.name.clone()).unwrap_or_else(|| format!("c{c}")),
            Atom::Jet(j) => self.jet_name(j),
            other => format!("{other:?}"),
        }
    }

    /// `∂e/∂v` for a declared variable, jet coordinate or constant `v`.
    pub fn partial_derivative(&self, e: &Expr, v: &str) -> Result<Expr> {
        let atom = self.resolve_leaf(v)?;
        Ok(partial_derivative(e, &atom))
    }

    /// A context with additional dependent variables appended.
    pub fn with_dependents<S: AsRef<str>>(&self, extra: &[S]) -> Context {
        let mut c = self.clone();
        c.dependents.extend(extra.iter().map(|s| s.as_ref().to_string()));
        c
    }

    /// Atoms assumed positive: flagged constants and assumption leaves.
    pub fn positive_atoms(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = self
            .constants
            .iter()
            .enumerate()
            .filter(|(_, c)| c.positive)
            .map(|(i, _)| Atom::Const(i))
            .collect();
        out.extend(self.positive.iter().cloned());
        out
    }

    /// An oracle with this context's function models and positivity flags.
    pub fn oracle(&self, config: OracleConfig) -> Oracle {
        let mut o = Oracle::new(config);
        self.configure_oracle(&mut o);
        o
    }

    pub fn configure_oracle(&self, o: &mut Oracle) {
        for a in self.positive_atoms() {
            o.assume_positive(a);
        }
        for (i, f) in self.functions.iter().enumerate() {
            if let Some(coeffs) = &f.model {
                o.register_polynomial(i, PolyModel::unary(coeffs));
            }
        }
    }

    /// Every declared name, for uniqueness checks.
    pub fn all_names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = Vec::new();
        v.extend(self.independents.iter().map(String::as_str));
        v.extend(self.dependents.iter().map(String::as_str));
        v.extend(self.constants.iter().map(|c| c.name.as_str()));
        v.extend(self.functions.iter().map(|f| f.name.as_str()));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_jet_names() {
        let c = Context::new(&["t", "x"], &["u"]).with_constant("C", true);
        assert_eq!(c.jet_name(&c.jet_coord(0, &[1, 2])), "u_txx");
        assert_eq!(c.resolve_leaf("u_xtx").unwrap(), Atom::Jet(c.jet_coord(0, &[1, 2])));
        assert_eq!(c.resolve_leaf("C").unwrap(), Atom::Const(0));
        assert!(matches!(c.resolve_leaf("u_y"), Err(Error::UndeclaredVariable(_))));
        assert!(matches!(c.resolve_leaf("v"), Err(Error::UndeclaredVariable(_))));
    }

    #[test]
    fn partial_derivative_rejects_undeclared() {
        let c = Context::new(&["t", "x"], &["u"]);
        let e = c.jet("u_x").unwrap();
        assert!(matches!(c.partial_derivative(&e, "w"), Err(Error::UndeclaredVariable(_))));
        assert_eq!(c.partial_derivative(&e, "u_x").unwrap(), Expr::one());
    }
}
