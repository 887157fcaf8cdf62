//! Total derivatives, prolongation, on-shell reduction and linear changes
//! of independent variables.

mod change;
mod multi_index;
mod reduce;
mod system;

pub use change::{change_independent, change_independent_system, invert_matrix};
pub use multi_index::{JetCoord, MultiIndex};
pub use reduce::{on_shell_reduce, Reducer};
pub use system::{KovalevskayaData, PdeSystem};

use crate::expr::{derive_with, Atom, Expr};

/// `D_i(e) = ∂e/∂x^i + Σ u^j_{α+1_i} ∂e/∂u^j_α`.
pub fn total_derivative(e: &Expr, i: usize) -> Expr {
    derive_with(e, &|a| match a {
        Atom::Indep(k) if *k == i => Expr::one(),
        Atom::Jet(j) => Expr::jet(j.derivative(i)),
        _ => Expr::zero(),
    })
}

/// `D_α = D_{x^1}^{α_1} ∘ … ∘ D_{x^n}^{α_n}`.
pub fn total_derivative_multi(e: &Expr, alpha: &MultiIndex) -> Expr {
    let mut out = e.clone();
    for i in alpha.directions().into_iter().rev() {
        if out.is_zero() {
            break;
        }
        out = total_derivative(&out, i);
    }
    out
}

/// All `D_α(F^i)` with `|α| ≤ k`, equation-major.
pub fn prolong(system: &PdeSystem, k: u32) -> Vec<Expr> {
    let n = system.context.n();
    let alphas = MultiIndex::all_up_to(n, k);
    system
        .equations
        .iter()
        .flat_map(|f| alphas.iter().map(move |a| total_derivative_multi(f, a)))
        .collect()
}
