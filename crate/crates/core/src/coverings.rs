//! Differential coverings: Lagrangian labels over the mass conservation
//! law, and potentials of two-dimensional conservation laws.

use crate::error::{Error, Result};
use crate::expr::{equals, Atom, Expr, Verdict};
use crate::jet::{total_derivative, JetCoord, KovalevskayaData, MultiIndex, PdeSystem, Reducer};
use crate::oracle::Oracle;

/// Current `(T^1, …, T^n)`, one component per independent variable.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservationLaw {
    pub components: Vec<Expr>,
}

impl ConservationLaw {
    pub fn new(components: Vec<Expr>) -> Self {
        ConservationLaw { components }
    }

    /// `Σ_i D_i(T^i)`.
    pub fn divergence(&self) -> Expr {
        crate::operators::divergence(&self.components)
    }

    /// Whether the divergence vanishes on-shell.
    pub fn check(&self, system: &PdeSystem, oracle: &Oracle) -> Result<Verdict> {
        if self.components.len() != system.context.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} components for {} independent variables",
                self.components.len(),
                system.context.n()
            )));
        }
        let reduced = Reducer::new(system.kovalevskaya_data()?).reduce(&self.divergence())?;
        equals(&reduced, &Expr::zero(), oracle)
    }
}

/// Dependent-variable indices of the density and velocity components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagrangianRoles {
    pub density: usize,
    pub velocity: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoveringKind {
    Lagrangian(LagrangianRoles),
    Potential(ConservationLaw),
}

/// A base system enlarged by nonlocal dependent variables (appended after
/// the base ones) and their defining equations (appended after the base
/// equations).
#[derive(Clone, Debug, PartialEq)]
pub struct CoveringSystem {
    pub system: PdeSystem,
    pub base_dependents: usize,
    pub base_equations: usize,
    pub kind: CoveringKind,
}

impl CoveringSystem {
    pub fn nonlocal(&self) -> Vec<usize> {
        (self.base_dependents..self.system.context.m()).collect()
    }

    /// Forgets the nonlocal variables and their equations.
    pub fn strip(&self) -> PdeSystem {
        let mut context = self.system.context.clone();
        context.dependents.truncate(self.base_dependents);
        context.positive.retain(|a| !matches!(a, Atom::Jet(j) if j.dep >= self.base_dependents));
        let equations = self.system.equations[..self.base_equations].to_vec();
        let mut base = PdeSystem::new(context, equations);
        if let Some(d) = &self.system.kovalevskaya {
            let orders = d.orders[..self.base_dependents].to_vec();
            if orders.iter().any(|&b| b > 0) {
                base.kovalevskaya =
                    Some(KovalevskayaData::new(d.direction, orders, d.rhs[..self.base_dependents].to_vec()));
            }
        }
        base
    }

    /// `det(∂ξ/∂x)` for a Lagrangian covering.
    pub fn jacobian(&self) -> Option<Expr> {
        match &self.kind {
            CoveringKind::Lagrangian(_) => {
                let n = self.system.context.n();
                let xi: Vec<usize> = self.nonlocal();
                Some(jacobian_determinant(&xi, n))
            }
            CoveringKind::Potential(_) => None,
        }
    }
}

fn jacobian_determinant(xi: &[usize], n: usize) -> Expr {
    let k = xi.len();
    let entry = |i: usize, s: usize| Expr::jet(JetCoord::new(xi[i], MultiIndex::unit(n, s + 1)));
    let mut det = Expr::zero();
    for perm in permutations(k) {
        let sign = if inversions(&perm) % 2 == 0 { Expr::one() } else { Expr::int(-1) };
        let mut term = sign;
        for (i, &s) in perm.iter().enumerate() {
            term = &term * &entry(i, s);
        }
        det = &det + &term;
    }
    det
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn inversions(p: &[usize]) -> usize {
    (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count()
}

fn fresh_names(base: &PdeSystem, stem: &str, k: usize) -> Vec<String> {
    let taken = base.context.all_names();
    let mut suffix = 0;
    loop {
        let names: Vec<String> = match (k, suffix) {
            (1, 0) => vec![stem.to_string()],
            (_, 0) => (1..=k).map(|i| format!("{stem}{i}")).collect(),
            _ => (1..=k).map(|i| format!("{stem}{suffix}{i}")).collect(),
        };
        if names.iter().all(|n| !taken.contains(&n.as_str())) {
            return names;
        }
        suffix += 1;
    }
}

/// Appends Lagrangian labels `ξ^i` with `ξ^i_t + Σ_s v_s ξ^i_s = 0` and the
/// constraint `ρ = det(∂ξ/∂x)`. The first independent variable is time.
pub fn build_lagrangian_covering(base: &PdeSystem, density: &str, velocity: &[&str]) -> Result<CoveringSystem> {
    let ctx = &base.context;
    let n = ctx.n();
    if !(2..=4).contains(&n) {
        return Err(Error::Invalid("Lagrangian covering needs time plus 1 to 3 spatial variables".into()));
    }
    let k = n - 1;
    let rho = ctx.dep_index(density).ok_or_else(|| Error::MissingRole(format!("density `{density}`")))?;
    if velocity.len() != k {
        return Err(Error::MissingRole(format!("{k} velocity components expected, got {}", velocity.len())));
    }
    let vel = velocity
        .iter()
        .map(|v| ctx.dep_index(v).ok_or_else(|| Error::MissingRole(format!("velocity `{v}`"))))
        .collect::<Result<Vec<_>>>()?;
    let m = ctx.m();
    let names = fresh_names(base, "xi", k);
    let mut context = ctx.with_dependents(&names);
    if !context.positive.contains(&Atom::Jet(JetCoord::base(rho, n))) {
        return Err(Error::Invalid(format!("density `{density}` must be assumed positive")));
    }
    let xi: Vec<usize> = (m..m + k).collect();
    let jet = |dep: usize, dir: Option<usize>| {
        Expr::jet(match dir {
            None => JetCoord::base(dep, n),
            Some(d) => JetCoord::new(dep, MultiIndex::unit(n, d)),
        })
    };
    let mut equations = base.equations.clone();
    let mut transports = Vec::with_capacity(k);
    for &x in &xi {
        let flux: Expr = (0..k).map(|s| &jet(vel[s], None) * &jet(x, Some(s + 1))).sum();
        transports.push(-&flux);
        equations.push(&jet(x, Some(0)) + &flux);
    }
    let det = jacobian_determinant(&xi, n);
    equations.push(&jet(rho, None) - &det);
    if k == 1 {
        context.positive.push(Atom::Jet(JetCoord::new(xi[0], MultiIndex::unit(n, 1))));
    }
    let mut system = PdeSystem::new(context, equations);
    let (mut orders, mut rhs) = match &base.kovalevskaya {
        Some(d) if d.direction == 0 => (d.orders.clone(), d.rhs.clone()),
        _ => (vec![0; m], vec![Expr::zero(); m]),
    };
    orders.extend(std::iter::repeat(1).take(k));
    rhs.extend(transports);
    system.kovalevskaya = Some(KovalevskayaData::new(0, orders, rhs));
    Ok(CoveringSystem {
        system,
        base_dependents: m,
        base_equations: base.equations.len(),
        kind: CoveringKind::Lagrangian(LagrangianRoles { density: rho, velocity: vel }),
    })
}

/// `D_t J + Σ_s D_s(v_s J)` with `J = det(∂ξ/∂x)`, reduced modulo the
/// transport equations.
pub fn covering_defect(cov: &CoveringSystem) -> Result<Expr> {
    let CoveringKind::Lagrangian(roles) = &cov.kind else {
        return Err(Error::Invalid("consistency check applies to Lagrangian coverings".into()));
    };
    let ctx = &cov.system.context;
    let n = ctx.n();
    let j = cov.jacobian().expect("Lagrangian covering");
    let mut defect = total_derivative(&j, 0);
    for (s, &v) in roles.velocity.iter().enumerate() {
        defect = &defect + &total_derivative(&(&Expr::jet(JetCoord::base(v, n)) * &j), s + 1);
    }
    let data = cov.system.kovalevskaya_data()?;
    let mut orders = vec![0; ctx.m()];
    for x in cov.nonlocal() {
        orders[x] = data.orders[x];
    }
    let transport_only = KovalevskayaData::new(0, orders, data.rhs.clone());
    Reducer::new(&transport_only).reduce(&defect)
}

/// The transport equations imply the mass conservation law for
/// `ρ = det(∂ξ/∂x)`.
pub fn verify_covering_consistency(cov: &CoveringSystem, oracle: &Oracle) -> Result<Verdict> {
    equals(&covering_defect(cov)?, &Expr::zero(), oracle)
}

/// Appends a potential `w` with `w_x = T^t`, `w_t = −T^x`.
pub fn build_potential_covering(base: &PdeSystem, law: &ConservationLaw) -> Result<CoveringSystem> {
    let ctx = &base.context;
    if ctx.n() != 2 {
        return Err(Error::PotentialCoveringDimension);
    }
    if law.components.len() != 2 {
        return Err(Error::ShapeMismatch("conservation law needs two components".into()));
    }
    let m = ctx.m();
    let name = fresh_names(base, "w", 1);
    let context = ctx.with_dependents(&name);
    let (tt, tx) = (&law.components[0], &law.components[1]);
    let w_t = Expr::jet(JetCoord::new(m, MultiIndex::unit(2, 0)));
    let w_x = Expr::jet(JetCoord::new(m, MultiIndex::unit(2, 1)));
    let mut equations = base.equations.clone();
    equations.push(&w_x - tt);
    equations.push(&w_t + tx);
    let mut system = PdeSystem::new(context, equations);
    if let Some(d) = &base.kovalevskaya {
        let mut orders = d.orders.clone();
        let mut rhs = d.rhs.clone();
        let mut r = Reducer::new(d);
        orders.push(1);
        rhs.push(if d.direction == 0 { r.reduce(&-tx)? } else { r.reduce(tt)? });
        system.kovalevskaya = Some(KovalevskayaData::new(d.direction, orders, rhs));
    }
    Ok(CoveringSystem {
        system,
        base_dependents: m,
        base_equations: base.equations.len(),
        kind: CoveringKind::Potential(law.clone()),
    })
}
