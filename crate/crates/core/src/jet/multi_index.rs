use std::cmp::Ordering;
use std::fmt;

/// Exponents `(α_1, …, α_n)` of an iterated total derivative `D_α`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn from_slice(v: &[u32]) -> Self {
        MultiIndex(v.to_vec())
    }

    /// `k · 1_i`, the pure derivative of order `k` in direction `i`.
    pub fn pure(n: usize, i: usize, k: u32) -> Self {
        let mut v = vec![0; n];
        v[i] = k;
        MultiIndex(v)
    }

    pub fn unit(n: usize, i: usize) -> Self {
        Self::pure(n, i, 1)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn incremented(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v[i] += 1;
        MultiIndex(v)
    }

    pub fn decremented(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[i] -= 1;
        Some(MultiIndex(v))
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other`, if componentwise nonnegative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `γ ≤ self` componentwise.
    pub fn dominates(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// All `γ` with `0 ≤ γ ≤ self`, in lexicographic order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::with_capacity(self.dim())];
        for &a in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
            for prefix in &out {
                for k in 0..=a {
                    let mut p = prefix.clone();
                    p.push(k);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(MultiIndex).collect()
    }

    /// Product of binomials `Π_i C(self_i, γ_i)`.
    pub fn binomial(&self, gamma: &MultiIndex) -> u64 {
        self.0
            .iter()
            .zip(&gamma.0)
            .map(|(&a, &g)| binomial(a as u64, g as u64))
            .product()
    }

    /// Every multi-index of dimension `n` with `|α| ≤ k`, ordered by `|α|`.
    pub fn all_up_to(n: usize, k: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=k {
            out.extend(Self::all_of_order(n, order));
        }
        out
    }

    pub fn all_of_order(n: usize, order: u32) -> Vec<MultiIndex> {
        fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == n {
                prefix.push(left);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=left).rev() {
                prefix.push(a);
                rec(n, left - a, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n == 0 {
            if order == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        rec(n, order, &mut Vec::new(), &mut out);
        out
    }

    /// A sequence of directions whose total derivatives compose to `D_α`,
    /// first direction first.
    pub fn directions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.order() as usize);
        for (i, &a) in self.0.iter().enumerate() {
            for _ in 0..a {
                out.push(i);
            }
        }
        out
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A jet coordinate `u^j_α`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct JetCoord {
    pub dep: usize,
    pub alpha: MultiIndex,
}

impl JetCoord {
    pub fn new(dep: usize, alpha: MultiIndex) -> Self {
        JetCoord { dep, alpha }
    }

    /// The dependent variable itself, `u^j_0`.
    pub fn base(dep: usize, n: usize) -> Self {
        JetCoord { dep, alpha: MultiIndex::zero(n) }
    }

    pub fn order(&self) -> u32 {
        self.alpha.order()
    }

    pub fn derivative(&self, i: usize) -> Self {
        JetCoord { dep: self.dep, alpha: self.alpha.incremented(i) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_binomials() {
        assert_eq!(MultiIndex::all_up_to(2, 2).len(), 6);
        assert_eq!(MultiIndex::all_up_to(4, 3).len(), 35);
        let a = MultiIndex::from_slice(&[2, 1]);
        assert_eq!(a.sub_indices().len(), 6);
        assert_eq!(a.binomial(&MultiIndex::from_slice(&[1, 1])), 2);
        assert_eq!(a.directions(), vec![0, 0, 1]);
    }

    #[test]
    fn arithmetic() {
        let a = MultiIndex::from_slice(&[1, 2]);
        let b = MultiIndex::from_slice(&[1, 0]);
        assert_eq!(a.checked_sub(&b), Some(MultiIndex::from_slice(&[0, 2])));
        assert_eq!(b.checked_sub(&a), None);
        assert_eq!(a.add(&b).order(), 4);
        assert!(a.dominates(&b));
        assert_eq!(b.decremented(1), None);
    }
}
