//! Seeded generators of random jet polynomials and operators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::jet::{JetCoord, MultiIndex};
use crate::operators::TotalDiffOp;

/// Shape of generated polynomials.
#[derive(Clone, Debug)]
pub struct PolySpec {
    pub n: usize,
    pub m: usize,
    pub max_order: u32,
    pub terms: usize,
    pub max_degree: u32,
    pub coeff_range: i64,
    /// Whether independent variables may appear explicitly.
    pub explicit: bool,
}

impl PolySpec {
    pub fn new(n: usize, m: usize) -> Self {
        PolySpec { n, m, max_order: 2, terms: 4, max_degree: 3, coeff_range: 5, explicit: true }
    }
}

fn generators(spec: &PolySpec) -> Vec<Expr> {
    let mut g = Vec::new();
    if spec.explicit {
        g.extend((0..spec.n).map(Expr::indep));
    }
    for dep in 0..spec.m {
        for alpha in MultiIndex::all_up_to(spec.n, spec.max_order) {
            g.push(Expr::jet(JetCoord::new(dep, alpha)));
        }
    }
    g
}

/// A polynomial with `spec.terms` random monomials.
pub fn random_polynomial(spec: &PolySpec, rng: &mut ChaCha8Rng) -> Expr {
    let gens = generators(spec);
    let mut acc = Expr::zero();
    for _ in 0..spec.terms {
        let mut c = 0;
        while c == 0 {
            c = rng.gen_range(-spec.coeff_range..=spec.coeff_range);
        }
        let mut term = Expr::int(c);
        let degree = rng.gen_range(0..=spec.max_degree);
        for _ in 0..degree {
            if let Some(g) = gens.choose(rng) {
                term = &term * g;
            }
        }
        acc = &acc + &term;
    }
    acc
}

/// A `rows × cols` operator whose entries have random polynomial
/// coefficients on random `D_α` with `|α| ≤ order`.
pub fn random_operator(spec: &PolySpec, rows: usize, cols: usize, order: u32, rng: &mut ChaCha8Rng) -> TotalDiffOp {
    let mut op = TotalDiffOp::zero(rows, cols, spec.n);
    let alphas = MultiIndex::all_up_to(spec.n, order);
    let coeff = PolySpec { terms: 2, max_degree: 2, ..spec.clone() };
    for i in 0..rows {
        for j in 0..cols {
            for _ in 0..rng.gen_range(0..=2) {
                let alpha = alphas.choose(rng).expect("nonempty").clone();
                op.add_term(i, j, alpha, random_polynomial(&coeff, rng));
            }
        }
    }
    op
}
