use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::expr::{substitute, Atom, Expr};
use crate::jet::{total_derivative, JetCoord, KovalevskayaData, PdeSystem};

const MAX_DEPTH: usize = 512;

/// Rewrites leading jet coordinates by their on-shell values, memoizing
/// `D_β(Φ^j)`.
pub struct Reducer<'a> {
    data: &'a KovalevskayaData,
    memo: HashMap<JetCoord, Expr>,
    depth: usize,
}

impl<'a> Reducer<'a> {
    pub fn new(data: &'a KovalevskayaData) -> Self {
        Reducer { data, memo: HashMap::new(), depth: 0 }
    }

    pub fn data(&self) -> &KovalevskayaData {
        self.data
    }

    /// On-shell value of a single jet coordinate, expressed in internal
    /// coordinates only.
    pub fn reduce_jet(&mut self, j: &JetCoord) -> Result<Expr> {
        if !self.data.is_leading(j) {
            return Ok(Expr::jet(j.clone()));
        }
        if let Some(e) = self.memo.get(j) {
            return Ok(e.clone());
        }
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            self.depth = 0;
            return Err(Error::ReductionBound);
        }
        let d = self.data.direction;
        let b = self.data.orders[j.dep];
        let out = if j.alpha.get(d) > b {
            let prev = JetCoord::new(j.dep, j.alpha.decremented(d).unwrap());
            let r = self.reduce_jet(&prev)?;
            self.reduce(&total_derivative(&r, d))?
        } else if let Some(i) = (0..j.alpha.dim()).find(|&i| i != d && j.alpha.get(i) > 0) {
            let prev = JetCoord::new(j.dep, j.alpha.decremented(i).unwrap());
            let r = self.reduce_jet(&prev)?;
            self.reduce(&total_derivative(&r, i))?
        } else {
            let phi = self.data.rhs[j.dep].clone();
            self.reduce(&phi)?
        };
        self.depth -= 1;
        self.memo.insert(j.clone(), out.clone());
        Ok(out)
    }

    /// Replaces every leading coordinate of `e`.
    pub fn reduce(&mut self, e: &Expr) -> Result<Expr> {
        let leading: Vec<JetCoord> = e.jets().into_iter().filter(|j| self.data.is_leading(j)).collect();
        if leading.is_empty() {
            return Ok(e.clone());
        }
        let mut bindings = HashMap::with_capacity(leading.len());
        for j in leading {
            let r = self.reduce_jet(&j)?;
            bindings.insert(Atom::Jet(j), r);
        }
        substitute(e, &bindings)
    }
}

/// Reduces `e` modulo the prolonged system, using its Kovalevskaya data.
pub fn on_shell_reduce(e: &Expr, system: &PdeSystem) -> Result<Expr> {
    Reducer::new(system.kovalevskaya_data()?).reduce(e)
}
