use serde::Serialize;

use super::Expr;
use crate::error::Result;
use crate::oracle::{Oracle, Witness};

/// Outcome of an equality decision.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// The difference normalizes to zero.
    ProvedEqual,
    /// Either the difference is a nonzero rational function, or the oracle
    /// found a witness point.
    ProvedUnequal { witness: Option<Witness> },
    /// Outside the rational fragment: agreement at every sampled point.
    ProbablyEqual { seed: u64, trials: usize },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        !matches!(self, Verdict::ProvedUnequal { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ProvedEqual => "ProvedEqual",
            Verdict::ProvedUnequal { .. } => "ProvedUnequal",
            Verdict::ProbablyEqual { .. } => "ProbablyEqual",
        }
    }

    /// Combines two verdicts that must both hold.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (u @ Verdict::ProvedUnequal { .. }, _) | (_, u @ Verdict::ProvedUnequal { .. }) => u,
            (p @ Verdict::ProbablyEqual { .. }, _) | (_, p @ Verdict::ProbablyEqual { .. }) => p,
            _ => Verdict::ProvedEqual,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictSummary {
    pub verdict: &'static str,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

impl From<&Verdict> for VerdictSummary {
    fn from(v: &Verdict) -> Self {
        match v {
            Verdict::ProbablyEqual { seed, trials } => {
                VerdictSummary { verdict: v.label(), seed: Some(*seed), trials: Some(*trials) }
            }
            _ => VerdictSummary { verdict: v.label(), seed: None, trials: None },
        }
    }
}

/// Decides `a = b`: exactly in the rational fragment, by oracle sampling
/// outside it.
pub fn equals(a: &Expr, b: &Expr, oracle: &Oracle) -> Result<Verdict> {
    let d = a - b;
    if d.is_zero() {
        oracle.record_proved_equal(a, b);
        return Ok(Verdict::ProvedEqual);
    }
    if d.is_rational_fragment() {
        return Ok(Verdict::ProvedUnequal { witness: None });
    }
    oracle.verdict(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{JetCoord, MultiIndex};
    use crate::oracle::OracleOutcome;

    fn u(alpha: &[u32]) -> Expr {
        Expr::jet(JetCoord::new(0, MultiIndex::from_slice(alpha)))
    }

    #[test]
    fn equality_examples() {
        let o = Oracle::default();
        let ux = u(&[0, 1]);
        assert_eq!(equals(&(&ux + &ux), &(&Expr::int(2) * &ux), &o).unwrap(), Verdict::ProvedEqual);
        assert!(matches!(equals(&ux, &u(&[1, 0]), &o).unwrap(), Verdict::ProvedUnequal { .. }));
        let x = u(&[0, 0]);
        let one = Expr::one();
        let lhs = &(&(&x * &x) - &one) / &(&x - &one);
        assert_eq!(equals(&lhs, &(&x + &one), &o).unwrap(), Verdict::ProvedEqual);
        // oracle confirmation away from the pole
        let raw_num = &(&x * &x) - &one;
        let raw_den = &x - &one;
        let mut agree = 0;
        let mut rng = o.rng();
        let leaves = x.atoms_deep();
        while agree < 25 {
            let p = o.draw_point(&leaves, &Default::default(), &mut rng);
            let (Ok(n), Ok(d), Ok(r)) = (o.evaluate(&raw_num, &p), o.evaluate(&raw_den, &p), o.evaluate(&(&x + &one), &p))
            else {
                continue;
            };
            if d.is_zero() {
                continue;
            }
            assert_eq!(n.div(&d).unwrap(), r);
            agree += 1;
        }
    }

    #[test]
    fn function_symbols_fall_back_to_oracle() {
        let o = Oracle::default();
        let h = Expr::func(0, vec![0], vec![u(&[0, 0])]);
        let a = &h * &(&u(&[0, 0]) + &Expr::one());
        let b = &(&h * &u(&[0, 0])) + &h;
        assert_eq!(equals(&a, &b, &o).unwrap(), Verdict::ProvedEqual);
        assert!(matches!(equals(&(&h + &Expr::one()), &h, &o).unwrap(), Verdict::ProvedUnequal { witness: None }));
        let c = &h * &h;
        assert!(matches!(equals(&c, &h, &o).unwrap(), Verdict::ProvedUnequal { witness: Some(_) }));
        let e = &h.pow(&Expr::constant(0)).unwrap() * &h.pow(&-&Expr::constant(0)).unwrap();
        assert_eq!(equals(&e, &Expr::one(), &o).unwrap(), Verdict::ProvedEqual);
        assert!(matches!(
            o.random_identity_test(&h, &h, 5).unwrap(),
            OracleOutcome::Agree { trials: 5 }
        ));
    }
}
