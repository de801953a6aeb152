//! Matching-sum expansion of pfaffians of pair-form matrices.
//!
//! For a matrix built from [`PairForms`], the term of a perfect matching
//! `σ` is the product of `f_ab^2` over every pair `(a, b)` that is *not* in
//! `σ` (each unmatched pair meets exactly two matched pairs). Expanding
//! along the last index groups the matchings that share the partner `j` of
//! the last index; every term of the group carries the squared forms of the
//! pairs meeting `{j, last}`, so that product is applied once to the
//! group's sum. The recursion visits each matching exactly once and can be
//! restricted to a contiguous range of matching indices, which is how the
//! work is cut into chunks.
//!
//! Polynomials here are sorted `(packed monomial, coefficient)` lists.
//! Multiplying by a variable adds a constant to every key, which keeps the
//! list sorted, so multiplying by a linear form is a k-way merge and no
//! hashing is needed.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::configuration::PairForms;
use crate::polynomial::{var_key, SparsePoly};

pub(crate) type Terms<C> = Vec<(u128, C)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum KernelError {
    /// A fixed-width coefficient overflowed; retry with big integers.
    Overflow,
    /// A term list outgrew the memory budget.
    Budget { needed_bytes: u64 },
}

/// Coefficient arithmetic used by the kernel.
pub(crate) trait Coeff: Clone + Send + Sync + 'static {
    /// Rough heap + inline footprint of one term, for budget checks.
    const TERM_BYTES: u64;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    fn to_bigint(&self) -> BigInt;
    fn from_bigint(v: &BigInt) -> Option<Self>;
}

impl Coeff for i128 {
    const TERM_BYTES: u64 = 32;
    fn one() -> Self {
        1
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn add(&self, other: &Self) -> Option<Self> {
        self.checked_add(*other)
    }
    fn neg(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn from_bigint(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }
}

impl Coeff for BigInt {
    const TERM_BYTES: u64 = 80;
    fn one() -> Self {
        BigInt::from(1)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Option<Self> {
        Some(self + other)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
    fn from_bigint(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
}

pub(crate) fn to_sparse<C: Coeff>(nvars: usize, terms: &Terms<C>) -> SparsePoly {
    SparsePoly::from_sorted_terms(nvars, terms.iter().map(|(k, c)| (*k, c.to_bigint())).collect())
}

pub(crate) fn from_sparse<C: Coeff>(p: &SparsePoly) -> Option<Terms<C>> {
    p.terms()
        .map(|(m, c)| C::from_bigint(c).map(|c| (m.key(), c)))
        .collect()
}

/// `a + b` or `a - b`, dropping cancelled terms.
pub(crate) fn merge_add<C: Coeff>(a: Terms<C>, b: Terms<C>, subtract: bool) -> Result<Terms<C>, KernelError> {
    if b.is_empty() {
        return Ok(a);
    }
    if a.is_empty() && !subtract {
        return Ok(b);
    }
    let mut out = Vec::with_capacity(a.len().max(b.len()) + a.len().min(b.len()) / 4);
    let mut ia = a.into_iter().peekable();
    let mut ib = b.into_iter().peekable();
    let signed = |c: C| -> Result<C, KernelError> {
        if subtract {
            c.neg().ok_or(KernelError::Overflow)
        } else {
            Ok(c)
        }
    };
    loop {
        match (ia.peek(), ib.peek()) {
            (Some(x), Some(y)) => {
                if x.0 < y.0 {
                    out.push(ia.next().unwrap());
                } else if x.0 > y.0 {
                    let (k, c) = ib.next().unwrap();
                    out.push((k, signed(c)?));
                } else {
                    let (k, cx) = ia.next().unwrap();
                    let (_, cy) = ib.next().unwrap();
                    let s = cx.add(&signed(cy)?).ok_or(KernelError::Overflow)?;
                    if !s.is_zero() {
                        out.push((k, s));
                    }
                }
            }
            (Some(_), None) => {
                out.extend(ia);
                break;
            }
            (None, Some(_)) => {
                for (k, c) in ib {
                    out.push((k, signed(c)?));
                }
                break;
            }
            (None, None) => break,
        }
    }
    Ok(out)
}

/// Multiplies by `x_{v0} + x_{v1} + ...`; an empty list is the constant 1.
pub(crate) fn mul_form<C: Coeff>(p: Terms<C>, vars: &[usize]) -> Result<Terms<C>, KernelError> {
    match vars.len() {
        0 => Ok(p),
        1 => {
            let shift = var_key(vars[0]);
            let mut p = p;
            for t in p.iter_mut() {
                t.0 += shift;
            }
            Ok(p)
        }
        k => {
            let shifts: Vec<u128> = vars.iter().map(|&v| var_key(v)).collect();
            let mut cursors = vec![0usize; k];
            let mut out: Terms<C> = Vec::with_capacity(p.len() * 2);
            let len = p.len();
            loop {
                let mut best = u128::MAX;
                for s in 0..k {
                    if cursors[s] < len {
                        let key = p[cursors[s]].0 + shifts[s];
                        if key < best {
                            best = key;
                        }
                    }
                }
                if best == u128::MAX {
                    break;
                }
                let mut acc: Option<C> = None;
                for s in 0..k {
                    let c = cursors[s];
                    if c < len && p[c].0 + shifts[s] == best {
                        acc = Some(match acc {
                            None => p[c].1.clone(),
                            Some(a) => a.add(&p[c].1).ok_or(KernelError::Overflow)?,
                        });
                        cursors[s] += 1;
                    }
                }
                let acc = acc.expect("minimum key came from some cursor");
                if !acc.is_zero() {
                    out.push((best, acc));
                }
            }
            Ok(out)
        }
    }
}

/// `(m - 1)!!` perfect matchings of `m` points (1 for `m = 0`).
pub(crate) fn matchings_of(m: usize) -> u64 {
    (1..m as u64).step_by(2).product()
}

pub(crate) struct Expander<'a> {
    pub forms: &'a PairForms,
    pub budget_bytes: Option<u64>,
    /// Called once per matching expanded.
    pub on_leaf: &'a (dyn Fn() + Sync),
}

impl Expander<'_> {
    fn check_budget<C: Coeff>(&self, live_terms: usize) -> Result<(), KernelError> {
        if let Some(b) = self.budget_bytes {
            let needed = live_terms as u64 * C::TERM_BYTES;
            if needed > b {
                return Err(KernelError::Budget { needed_bytes: needed });
            }
        }
        Ok(())
    }

    /// Signed sum of the matching terms with indices in `[lo, hi)` of the
    /// pfaffian restricted to `subset` (sorted).
    pub(crate) fn expand<C: Coeff>(&self, subset: &[usize], lo: u64, hi: u64) -> Result<Terms<C>, KernelError> {
        if subset.is_empty() {
            debug_assert!(lo == 0 && hi == 1);
            (self.on_leaf)();
            return Ok(vec![(0, C::one())]);
        }
        let len = subset.len();
        let last = subset[len - 1];
        let group = matchings_of(len - 2);
        let mut acc: Terms<C> = Vec::new();
        for t in 0..len - 1 {
            let g_lo = t as u64 * group;
            let g_hi = g_lo + group;
            if g_hi <= lo || g_lo >= hi {
                continue;
            }
            let j = subset[t];
            let sub: Vec<usize> = subset
                .iter()
                .copied()
                .filter(|&k| k != j && k != last)
                .collect();
            let mut part: Terms<C> =
                self.expand(&sub, lo.saturating_sub(g_lo), hi.min(g_hi) - g_lo)?;
            if part.is_empty() {
                continue;
            }
            // Squared forms of the pairs meeting {j, last}, fewest variables first.
            let mut factors: Vec<&[usize]> = Vec::with_capacity(4 * sub.len());
            for &k in &sub {
                for f in [self.forms.form(j, k), self.forms.form(k, last)] {
                    factors.push(f);
                    factors.push(f);
                }
            }
            factors.sort_by_key(|f| f.len());
            for f in factors {
                part = mul_form(part, f)?;
                self.check_budget::<C>(acc.len() + 2 * part.len())?;
            }
            acc = merge_add(acc, part, t % 2 == 1)?;
            self.check_budget::<C>(acc.len())?;
        }
        Ok(acc)
    }
}
