//! Matrix operators in total derivatives.

use std::collections::BTreeMap;

use crate::context::Context;
use crate::error::{Error, Result};
use crate::expr::{equals, partial_derivative, rat, Atom, Expr, Verdict};
use crate::jet::{total_derivative, total_derivative_multi, JetCoord, KovalevskayaData, MultiIndex, PdeSystem, Reducer};
use crate::oracle::Oracle;

/// One entry `Σ_α a_α D_α`, zero coefficients absent.
pub type OpEntry = BTreeMap<MultiIndex, Expr>;

/// An `rows × cols` matrix of scalar operators in total derivatives over `n`
/// independent variables, stored with every `D_α` to the right.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalDiffOp {
    rows: usize,
    cols: usize,
    n: usize,
    entries: Vec<OpEntry>,
}

fn add_coeff(entry: &mut OpEntry, alpha: MultiIndex, c: Expr) {
    if c.is_zero() {
        return;
    }
    match entry.entry(alpha) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let s = o.get() + &c;
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

impl TotalDiffOp {
    pub fn zero(rows: usize, cols: usize, n: usize) -> Self {
        TotalDiffOp { rows, cols, n, entries: vec![OpEntry::new(); rows * cols] }
    }

    pub fn identity(m: usize, n: usize) -> Self {
        let mut op = Self::zero(m, m, n);
        for i in 0..m {
            op.add_term(i, i, MultiIndex::zero(n), Expr::one());
        }
        op
    }

    /// `1 × 1` operator `c · D_α`.
    pub fn monomial(n: usize, alpha: MultiIndex, c: Expr) -> Self {
        let mut op = Self::zero(1, 1, n);
        op.add_term(0, 0, alpha, c);
        op
    }

    /// Multiplication by `c` on the diagonal of an `m × m` matrix.
    pub fn multiplication(m: usize, n: usize, c: Expr) -> Self {
        let mut op = Self::zero(m, m, n);
        for i in 0..m {
            op.add_term(i, i, MultiIndex::zero(n), c.clone());
        }
        op
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &OpEntry {
        &self.entries[i * self.cols + j]
    }

    fn entry_mut(&mut self, i: usize, j: usize) -> &mut OpEntry {
        &mut self.entries[i * self.cols + j]
    }

    /// Adds `c · D_α` to entry `(i, j)`.
    pub fn add_term(&mut self, i: usize, j: usize, alpha: MultiIndex, c: Expr) {
        assert_eq!(alpha.dim(), self.n, "multi-index dimension");
        add_coeff(self.entry_mut(i, j), alpha, c);
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_empty())
    }

    /// Highest `|α|` with a nonzero coefficient.
    pub fn order(&self) -> u32 {
        self.entries.iter().flat_map(|e| e.keys().map(MultiIndex::order)).max().unwrap_or(0)
    }

    /// Every coefficient, entry-major.
    pub fn coefficients(&self) -> impl Iterator<Item = (usize, usize, &MultiIndex, &Expr)> {
        self.entries.iter().enumerate().flat_map(move |(k, e)| {
            let (i, j) = (k / self.cols, k % self.cols);
            e.iter().map(move |(a, c)| (i, j, a, c))
        })
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols || self.n != other.n {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (i, j, a, c) in other.coefficients() {
            out.add_term(i, j, a.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for e in out.entries.iter_mut() {
            for c in e.values_mut() {
                *c = -&*c;
            }
        }
        out
    }

    /// `c · Δ` (multiplication of every coefficient on the left).
    pub fn scale(&self, c: &Expr) -> Self {
        let mut out = Self::zero(self.rows, self.cols, self.n);
        for (i, j, a, x) in self.coefficients() {
            out.add_term(i, j, a.clone(), c * x);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.cols, self.rows, self.n);
        for (i, j, a, c) in self.coefficients() {
            out.add_term(j, i, a.clone(), c.clone());
        }
        out
    }

    /// `(Δφ)^i = Σ_j Σ_α a^{ij}_α D_α(φ^j)`.
    pub fn apply(&self, phi: &[Expr]) -> Result<Vec<Expr>> {
        if phi.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "operator has {} columns, vector has {} entries",
                self.cols,
                phi.len()
            )));
        }
        let mut cache: BTreeMap<(usize, MultiIndex), Expr> = BTreeMap::new();
        let mut out = vec![Expr::zero(); self.rows];
        for (i, j, a, c) in self.coefficients() {
            let d = cache
                .entry((j, a.clone()))
                .or_insert_with(|| total_derivative_multi(&phi[j], a))
                .clone();
            out[i] = &out[i] + &(c * &d);
        }
        Ok(out)
    }

    /// `Δ1 ∘ Δ2`, expanded by the Leibniz rule.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows || self.n != other.n {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zero(self.rows, other.cols, self.n);
        for (i, j, alpha, a) in self.coefficients() {
            for k in 0..other.cols {
                for (beta, b) in other.entry(j, k) {
                    for (gamma, db) in leibniz_terms(alpha, b) {
                        let shift = alpha.checked_sub(&gamma).unwrap().add(beta);
                        out.add_term(i, k, shift, a * &db);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Formal adjoint: transpose, with `(a D_α)^* = (−1)^{|α|} D_α ∘ a`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.cols, self.rows, self.n);
        for (i, j, alpha, a) in self.coefficients() {
            let sign = if alpha.order() % 2 == 0 { 1 } else { -1 };
            for (gamma, da) in leibniz_terms(alpha, a) {
                out.add_term(j, i, alpha.checked_sub(&gamma).unwrap(), da.scale(&rat(sign)));
            }
        }
        out
    }

    /// Entrywise exact or sampled comparison.
    pub fn equals(&self, other: &Self, oracle: &Oracle) -> Result<Verdict> {
        let diff = self.sub(other)?;
        let mut verdict = Verdict::ProvedEqual;
        for (_, _, _, c) in diff.coefficients() {
            verdict = verdict.and(equals(c, &Expr::zero(), oracle)?);
            if !verdict.holds() {
                break;
            }
        }
        Ok(verdict)
    }
}

/// `D_α ∘ b = Σ_{γ ≤ α} C(α, γ) D_γ(b) D_{α−γ}`, as pairs `(γ, C(α,γ) D_γ(b))`.
fn leibniz_terms(alpha: &MultiIndex, b: &Expr) -> Vec<(MultiIndex, Expr)> {
    let mut memo: BTreeMap<MultiIndex, Expr> = BTreeMap::new();
    memo.insert(MultiIndex::zero(alpha.dim()), b.clone());
    let mut out = Vec::new();
    let mut gammas = alpha.sub_indices();
    gammas.sort();
    for gamma in gammas {
        let d = derivative_memo(&mut memo, &gamma);
        if d.is_zero() {
            continue;
        }
        out.push((gamma.clone(), d.scale(&rat(alpha.binomial(&gamma) as i64))));
    }
    out
}

fn derivative_memo(memo: &mut BTreeMap<MultiIndex, Expr>, gamma: &MultiIndex) -> Expr {
    if let Some(d) = memo.get(gamma) {
        return d.clone();
    }
    let i = (0..gamma.dim()).find(|&i| gamma.get(i) > 0).unwrap();
    let prev = derivative_memo(memo, &gamma.decremented(i).unwrap());
    let d = total_derivative(&prev, i);
    memo.insert(gamma.clone(), d.clone());
    d
}

/// Universal linearization `l_F` with entries `Σ_α ∂F^i/∂u^j_α · D_α`.
pub fn linearize(system: &PdeSystem) -> TotalDiffOp {
    linearize_exprs(&system.equations, system.context.n(), system.context.m())
}

/// `l_F` for a vector of expressions over `m` dependent variables.
pub fn linearize_exprs(f: &[Expr], n: usize, m: usize) -> TotalDiffOp {
    let mut op = TotalDiffOp::zero(f.len(), m, n);
    for (i, fi) in f.iter().enumerate() {
        for j in fi.jets() {
            if j.dep >= m {
                continue;
            }
            let c = partial_derivative(fi, &Atom::Jet(j.clone()));
            op.add_term(i, j.dep, j.alpha.clone(), c);
        }
    }
    op
}

/// The system enlarged by test functions `φ^j` whose own solved equations
/// are the linearizations of the solved right sides.
pub struct TestVector {
    pub context: Context,
    pub data: KovalevskayaData,
    pub phi: Vec<Expr>,
    first: usize,
}

impl TestVector {
    pub fn new(system: &PdeSystem) -> Result<TestVector> {
        let data = system.kovalevskaya_data()?;
        let (n, m) = (system.context.n(), system.context.m());
        let names: Vec<String> = (0..m).map(|j| format!("phi{}", j + 1)).collect();
        let context = system.context.with_dependents(&names);
        let phi: Vec<Expr> = (0..m).map(|j| Expr::jet(JetCoord::base(m + j, n))).collect();
        let lin = linearize_exprs(&data.rhs, n, m);
        let mut rhs = data.rhs.clone();
        rhs.extend(lin.apply(&phi)?);
        let mut orders = data.orders.clone();
        orders.extend(data.orders.iter().copied());
        let data = KovalevskayaData::new(data.direction, orders, rhs);
        Ok(TestVector { context, data, phi, first: m })
    }

    pub fn is_test_jet(&self, j: &JetCoord) -> bool {
        j.dep >= self.first
    }

    /// `Δ(φ)` reduced on-shell, one expression per row.
    pub fn residual(&self, op: &TotalDiffOp) -> Result<Vec<Expr>> {
        let mut reducer = Reducer::new(&self.data);
        op.apply(&self.phi)?.iter().map(|e| reducer.reduce(e)).collect()
    }

    /// Coefficients of the `φ`-jets in a reduced, `φ`-linear expression.
    pub fn coefficients(&self, e: &Expr) -> Vec<(JetCoord, Expr)> {
        e.jets()
            .into_iter()
            .filter(|j| self.is_test_jet(j))
            .map(|j| {
                let c = partial_derivative(e, &Atom::Jet(j.clone()));
                (j, c)
            })
            .collect()
    }
}

/// `Δ(φ)` for fresh test functions `φ`, reduced modulo the prolonged system.
pub fn on_shell_residual(op: &TotalDiffOp, system: &PdeSystem) -> Result<Vec<Expr>> {
    TestVector::new(system)?.residual(op)
}

/// Decides `Δ1 = Δ2` on the system by comparing their actions on test
/// functions after on-shell reduction.
pub fn op_equals_on_shell(a: &TotalDiffOp, b: &TotalDiffOp, system: &PdeSystem, oracle: &Oracle) -> Result<Verdict> {
    let tv = TestVector::new(system)?;
    let diff = a.sub(b)?;
    if diff.cols() != system.context.m() {
        return Err(Error::ShapeMismatch(format!(
            "operator has {} columns for {} dependent variables",
            diff.cols(),
            system.context.m()
        )));
    }
    let mut verdict = Verdict::ProvedEqual;
    for row in tv.residual(&diff)? {
        for (_, c) in tv.coefficients(&row) {
            verdict = verdict.and(equals(&c, &Expr::zero(), oracle)?);
            if !verdict.holds() {
                return Ok(verdict);
            }
        }
    }
    Ok(verdict)
}

/// Currents `P^i` with `Σ_i D_i(P^i) = ψ·Δ(φ) − Δ^*(ψ)·φ`, by repeated
/// integration by parts.
pub fn lagrange_witness(op: &TotalDiffOp, psi: &[Expr], phi: &[Expr]) -> Result<Vec<Expr>> {
    if psi.len() != op.rows() || phi.len() != op.cols() {
        return Err(Error::ShapeMismatch("vectors do not match the operator".into()));
    }
    let mut currents = vec![Expr::zero(); op.dim()];
    for (i, j, alpha, a) in op.coefficients() {
        let dirs = alpha.directions();
        let mut g = &psi[i] * a;
        for (k, &d) in dirs.iter().enumerate() {
            let rest = MultiIndex::from_slice(&{
                let mut v = vec![0u32; op.dim()];
                for &r in &dirs[k + 1..] {
                    v[r] += 1;
                }
                v
            });
            let h = total_derivative_multi(&phi[j], &rest);
            currents[d] = &currents[d] + &(&g * &h);
            g = -total_derivative(&g, d);
        }
    }
    Ok(currents)
}

/// `Σ_i D_i(P^i)`.
pub fn divergence(currents: &[Expr]) -> Expr {
    currents.iter().enumerate().map(|(i, p)| total_derivative(p, i)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{KovalevskayaData, MultiIndex};

    fn ctx() -> Context {
        Context::new(&["t", "x"], &["u"])
    }

    fn d(alpha: &[u32]) -> TotalDiffOp {
        TotalDiffOp::monomial(2, MultiIndex::from_slice(alpha), Expr::one())
    }

    fn mul(c: Expr) -> TotalDiffOp {
        TotalDiffOp::monomial(2, MultiIndex::zero(2), c)
    }

    #[test]
    fn apply_examples() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        assert_eq!(TotalDiffOp::identity(1, 2).apply(&[v("u_x")]).unwrap(), vec![v("u_x")]);
        let op = d(&[1, 0]).add(&mul(v("u")).compose(&d(&[0, 1])).unwrap()).unwrap().add(&mul(v("u_x"))).unwrap();
        assert_eq!(op.apply(&[Expr::one()]).unwrap(), vec![v("u_x")]);
        let sq = &v("u") * &v("u");
        let expected = &(&Expr::int(2) * &(&v("u_x") * &v("u_x"))) + &(&Expr::int(2) * &(&v("u") * &v("u_xx")));
        assert_eq!(d(&[0, 2]).apply(&[sq]).unwrap(), vec![expected]);
        assert!(matches!(d(&[0, 1]).apply(&[]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn compose_examples() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        let lhs = d(&[0, 1]).compose(&mul(v("u"))).unwrap();
        let rhs = mul(v("u")).compose(&d(&[0, 1])).unwrap().add(&mul(v("u_x"))).unwrap();
        assert_eq!(lhs, rhs);
        let op = mul(v("u_t")).compose(&d(&[1, 1])).unwrap();
        assert_eq!(TotalDiffOp::identity(1, 2).compose(&op).unwrap(), op);
        assert_eq!(d(&[0, 1]).compose(&d(&[1, 0])).unwrap(), d(&[1, 0]).compose(&d(&[0, 1])).unwrap());
        assert_eq!(d(&[0, 1]).compose(&d(&[1, 0])).unwrap(), d(&[1, 1]));
    }

    #[test]
    fn adjoint_examples() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        assert_eq!(d(&[0, 1]).adjoint(), d(&[0, 1]).neg());
        let a = &v("x") * &v("u");
        assert_eq!(mul(a.clone()).adjoint(), mul(a));
        let op = mul(v("u")).compose(&d(&[0, 1])).unwrap();
        let expected = op.neg().sub(&mul(v("u_x"))).unwrap();
        assert_eq!(op.adjoint(), expected);
    }

    #[test]
    fn linearize_examples() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        let burgers = PdeSystem::new(c.clone(), vec![&v("u_t") + &(&v("u") * &v("u_x"))]);
        let expected = d(&[1, 0]).add(&mul(v("u")).compose(&d(&[0, 1])).unwrap()).unwrap().add(&mul(v("u_x"))).unwrap();
        assert_eq!(linearize(&burgers), expected);
        let heat = PdeSystem::new(c.clone(), vec![&v("u_t") - &v("u_xx")]);
        assert_eq!(linearize(&heat), d(&[1, 0]).sub(&d(&[0, 2])).unwrap());
        let wave = PdeSystem::new(c.clone(), vec![&v("u_tt") - &v("u_xx")]);
        let l = linearize(&wave);
        assert_eq!(l, d(&[2, 0]).sub(&d(&[0, 2])).unwrap());
        assert_eq!(l.adjoint(), l);
    }

    #[test]
    fn on_shell_comparison() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        let heat = PdeSystem::new(c.clone(), vec![&v("u_t") - &v("u_xx")])
            .with_kovalevskaya(KovalevskayaData::new(1, vec![2], vec![v("u_t")]));
        let o = Oracle::default();
        let op = d(&[0, 3]);
        assert_eq!(op_equals_on_shell(&op, &op, &heat, &o).unwrap(), Verdict::ProvedEqual);
        assert_eq!(op_equals_on_shell(&mul(v("u_xx")), &mul(v("u_t")), &heat, &o).unwrap(), Verdict::ProvedEqual);
        assert_eq!(op_equals_on_shell(&d(&[0, 2]), &d(&[1, 0]), &heat, &o).unwrap(), Verdict::ProvedEqual);
        assert!(!op_equals_on_shell(&d(&[0, 1]), &d(&[1, 0]), &heat, &o).unwrap().holds());
        let bare = PdeSystem::new(c.clone(), heat.equations.clone());
        assert_eq!(op_equals_on_shell(&op, &op, &bare, &o), Err(Error::MissingKovalevskaya));
    }

    #[test]
    fn lagrange_identity_for_a_third_order_operator() {
        let c = ctx();
        let v = |s: &str| c.var(s).unwrap();
        let op = mul(&v("u") * &v("x")).compose(&d(&[1, 2])).unwrap().add(&mul(v("u_t")).compose(&d(&[0, 1])).unwrap()).unwrap();
        let psi = vec![&v("u_x") * &v("t")];
        let phi = vec![&v("u") * &v("u")];
        let p = lagrange_witness(&op, &psi, &phi).unwrap();
        let lhs = &(&psi[0] * &op.apply(&phi).unwrap()[0]) - &(&op.adjoint().apply(&psi).unwrap()[0] * &phi[0]);
        assert!((&divergence(&p) - &lhs).is_zero());
    }
}
