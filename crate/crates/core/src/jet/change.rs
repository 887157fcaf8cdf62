use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{substitute, Atom, Expr, Rational};
use crate::jet::{JetCoord, MultiIndex, PdeSystem};

/// Gauss-Jordan inverse of a square rational matrix.
pub fn invert_matrix(m: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch(format!("matrix must be {n}x{n}")));
    }
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(Error::SingularMatrix)?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..2 * n {
                    let sub = &f * &a[col][c];
                    a[r][c] -= sub;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Rewrites `e` for the substitution `x_new = M · x_old`. Jet coordinates
/// are expanded by the chain rule `∂_old_i = Σ_k M[k][i] ∂_new_k`.
pub fn change_independent(e: &Expr, m: &[Vec<Rational>]) -> Result<Expr> {
    let inv = invert_matrix(m)?;
    let n = m.len();
    let mut bindings: HashMap<Atom, Expr> = HashMap::new();
    for a in e.atoms_deep() {
        match &a {
            Atom::Indep(i) => {
                let img: Expr = (0..n).map(|k| Expr::indep(k).scale(&inv[*i][k])).sum();
                bindings.insert(a.clone(), img);
            }
            Atom::Jet(j) => {
                if j.alpha.dim() != n {
                    return Err(Error::ShapeMismatch(format!("jet of dimension {} under {n}x{n} change", j.alpha.dim())));
                }
                bindings.insert(a.clone(), chain_rule(j, m));
            }
            _ => {}
        }
    }
    substitute(e, &bindings)
}

fn chain_rule(j: &JetCoord, m: &[Vec<Rational>]) -> Expr {
    let n = m.len();
    let mut terms: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
    terms.insert(MultiIndex::zero(n), Rational::one());
    for i in j.alpha.directions() {
        let mut next: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
        for (beta, c) in &terms {
            for (k, row) in m.iter().enumerate() {
                if row[i].is_zero() {
                    continue;
                }
                let slot = next.entry(beta.incremented(k)).or_insert_with(Rational::zero);
                *slot += c * &row[i];
            }
        }
        next.retain(|_, c| !c.is_zero());
        terms = next;
    }
    terms
        .into_iter()
        .map(|(beta, c)| Expr::jet(JetCoord::new(j.dep, beta)).scale(&c))
        .sum()
}

/// Applies [`change_independent`] to every equation. Kovalevskaya data is
/// dropped, and so are positivity assumptions on derivatives, which are not
/// coordinates of the new jet space; `names` optionally renames the new
/// coordinates.
pub fn change_independent_system(system: &PdeSystem, m: &[Vec<Rational>], names: Option<&[String]>) -> Result<PdeSystem> {
    if m.len() != system.context.n() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix for {} independent variables",
            m.len(),
            m.len(),
            system.context.n()
        )));
    }
    let mut context = system.context.clone();
    if let Some(names) = names {
        if names.len() != context.n() {
            return Err(Error::ShapeMismatch("wrong number of new variable names".into()));
        }
        context.independents = names.to_vec();
    }
    context.positive.retain(|a| !matches!(a, Atom::Jet(j) if !j.alpha.is_zero()));
    let equations = system.equations.iter().map(|f| change_independent(f, m)).collect::<Result<_>>()?;
    Ok(PdeSystem::new(context, equations))
}
