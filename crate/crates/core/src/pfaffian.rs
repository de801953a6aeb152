//! Skew-symmetric matrices over a generic ring and their pfaffians.
//!
//! Two independent algorithms are provided:
//!
//! * [`pfaffian_recursive`] expands along the last index and memoizes the
//!   pfaffians of index subsets (keyed by bitmask), `O(2^n n)` ring
//!   operations.
//! * [`pfaffian_matchings`] sums signed products over all `(n-1)!!` perfect
//!   matchings.
//!
//! They share nothing but the matrix accessor, so each checks the other.
//! Indices are 0-based throughout; the empty pfaffian is 1.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::ring::Ring;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PfaffianError {
    #[error("pfaffian undefined for odd order {0}")]
    OddOrder(usize),
    #[error("index {index} out of range for order {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("order {0} too large for subset memoization")]
    TooLarge(usize),
}

/// Square skew-symmetric matrix; only the strict upper triangle is stored.
#[derive(Clone, PartialEq)]
pub struct SkewMatrix<S> {
    n: usize,
    upper: Vec<S>,
    zero: S,
}

impl<S: Ring> SkewMatrix<S> {
    /// Builds the matrix from `entry(i, j)` for `i < j`. `zero` supplies the
    /// ring's additive identity (needed for polynomial rings).
    pub fn from_fn<F>(n: usize, zero: S, mut entry: F) -> Self
    where
        F: FnMut(usize, usize) -> S,
    {
        assert!(n >= 1, "skew matrix order must be at least 1");
        let mut upper = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                upper.push(entry(i, j));
            }
        }
        SkewMatrix {
            n,
            upper,
            zero: zero.zero_like(),
        }
    }

    /// Builds from the upper triangle listed row by row.
    pub fn from_upper(n: usize, zero: S, upper: Vec<S>) -> Self {
        assert!(n >= 1, "skew matrix order must be at least 1");
        assert_eq!(upper.len(), n * (n - 1) / 2, "wrong number of entries");
        SkewMatrix {
            n,
            upper,
            zero: zero.zero_like(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zero(&self) -> &S {
        &self.zero
    }

    pub fn one(&self) -> S {
        self.zero.one_like()
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        // Row i starts after rows 0..i, which hold (n-1) + ... + (n-i) entries.
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// Stored entry for `i < j`.
    pub fn upper(&self, i: usize, j: usize) -> &S {
        &self.upper[self.idx(i, j)]
    }

    /// Entry `(i, j)` for any pair, honoring skew-symmetry.
    pub fn get(&self, i: usize, j: usize) -> S {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper(i, j).clone(),
            Greater => self.upper(j, i).neg(),
            Equal => self.zero.clone(),
        }
    }

    pub fn upper_entries(&self) -> &[S] {
        &self.upper
    }

    /// Matrix restricted to the given indices (in the given order).
    pub fn restrict(&self, keep: &[usize]) -> SkewMatrix<S> {
        SkewMatrix::from_fn(keep.len().max(1), self.zero.clone(), |a, b| {
            self.get(keep[a], keep[b])
        })
    }

    /// Exchange rows and columns `i` and `j`.
    pub fn swap(&self, i: usize, j: usize) -> SkewMatrix<S> {
        let perm: Vec<usize> = (0..self.n)
            .map(|k| {
                if k == i {
                    j
                } else if k == j {
                    i
                } else {
                    k
                }
            })
            .collect();
        self.restrict(&perm)
    }

    pub fn map<T: Ring, F: Fn(&S) -> T>(&self, zero: T, f: F) -> SkewMatrix<T> {
        SkewMatrix {
            n: self.n,
            upper: self.upper.iter().map(f).collect(),
            zero: zero.zero_like(),
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<S>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

impl<S: Ring + fmt::Display> fmt::Display for SkewMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n.saturating_sub(1) {
            let row: Vec<String> = (i + 1..self.n).map(|j| self.upper(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<S: Ring> fmt::Debug for SkewMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SkewMatrix(n={}, upper={:?})", self.n, self.upper)
    }
}

/// One perfect matching with its sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingTerm {
    /// Pairs `(r, s)` with `r < s`, ordered by `r`.
    pub pairs: Vec<(usize, usize)>,
    pub sign: i8,
}

impl MatchingTerm {
    /// Parity of the permutation `[r1, s1, r2, s2, ...]`, computed by
    /// counting inversions.
    pub fn permutation_sign(&self) -> i8 {
        let flat: Vec<usize> = self.pairs.iter().flat_map(|&(r, s)| [r, s]).collect();
        let mut inversions = 0usize;
        for a in 0..flat.len() {
            for b in a + 1..flat.len() {
                if flat[a] > flat[b] {
                    inversions += 1;
                }
            }
        }
        if inversions.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// `(n-1)!!` for even `n`, the number of perfect matchings of `n` points.
pub fn matching_count(n: usize) -> u64 {
    assert!(n.is_multiple_of(2), "odd order has no perfect matchings");
    (1..n as u64).step_by(2).product()
}

/// All perfect matchings of `{0..n}`, in the order obtained by pairing the
/// smallest free index with each larger free index in increasing order.
pub fn perfect_matchings(n: usize) -> Result<Vec<MatchingTerm>, PfaffianError> {
    if n % 2 == 1 {
        return Err(PfaffianError::OddOrder(n));
    }
    let mut out = Vec::with_capacity(matching_count(n) as usize);
    let free: Vec<usize> = (0..n).collect();
    let mut pairs = Vec::with_capacity(n / 2);
    enumerate_matchings(&free, &mut pairs, 1, &mut out);
    Ok(out)
}

fn enumerate_matchings(
    free: &[usize],
    pairs: &mut Vec<(usize, usize)>,
    sign: i8,
    out: &mut Vec<MatchingTerm>,
) {
    if free.is_empty() {
        out.push(MatchingTerm {
            pairs: pairs.clone(),
            sign,
        });
        return;
    }
    let first = free[0];
    for t in 1..free.len() {
        // Moving free[t] next to free[0] passes over t - 1 elements.
        let s = if (t - 1) % 2 == 0 { sign } else { -sign };
        let rest: Vec<usize> = free[1..]
            .iter()
            .enumerate()
            .filter(|&(k, _)| k + 1 != t)
            .map(|(_, &v)| v)
            .collect();
        pairs.push((first, free[t]));
        enumerate_matchings(&rest, pairs, s, out);
        pairs.pop();
    }
}

/// Pfaffian by expansion along the last index with subset memoization.
pub fn pfaffian_recursive<S: Ring>(a: &SkewMatrix<S>) -> Result<S, PfaffianError> {
    let n = a.n();
    if n % 2 == 1 {
        return Err(PfaffianError::OddOrder(n));
    }
    if n > 24 {
        return Err(PfaffianError::TooLarge(n));
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut memo: Vec<Option<S>> = vec![None; 1usize << n];
    Ok(pf_mask(a, full, &mut memo))
}

fn pf_mask<S: Ring>(a: &SkewMatrix<S>, mask: u32, memo: &mut Vec<Option<S>>) -> S {
    if mask == 0 {
        return a.one();
    }
    if let Some(v) = &memo[mask as usize] {
        return v.clone();
    }
    let last = 31 - mask.leading_zeros() as usize;
    let mut rest = mask & !(1u32 << last);
    let mut acc = a.zero().clone();
    let mut t = 0usize;
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let entry = a.upper(j, last);
        if !entry.is_zero() {
            let minor = pf_mask(a, mask & !(1u32 << j) & !(1u32 << last), memo);
            let term = entry.mul(&minor);
            acc = if t.is_multiple_of(2) { acc.add(&term) } else { acc.sub(&term) };
        }
        t += 1;
    }
    memo[mask as usize] = Some(acc.clone());
    acc
}

fn matching_product<S: Ring>(a: &SkewMatrix<S>, m: &MatchingTerm) -> S {
    let mut prod = a.one();
    for &(r, s) in &m.pairs {
        prod = prod.mul(a.upper(r, s));
        if prod.is_zero() {
            break;
        }
    }
    if m.sign < 0 {
        prod.neg()
    } else {
        prod
    }
}

/// Pfaffian as the signed sum over all perfect matchings.
pub fn pfaffian_matchings<S: Ring>(a: &SkewMatrix<S>) -> Result<S, PfaffianError> {
    let matchings = perfect_matchings(a.n())?;
    let mut acc = a.zero().clone();
    for m in &matchings {
        acc = acc.add(&matching_product(a, m));
    }
    Ok(acc)
}

/// Matching-sum pfaffian split into `chunks` contiguous ranges that are
/// evaluated in parallel and combined by a fixed pairwise tree, so the
/// result does not depend on the number of threads.
pub fn pfaffian_matchings_par<S>(a: &SkewMatrix<S>, chunks: usize) -> Result<S, PfaffianError>
where
    S: Ring + Send + Sync,
{
    let matchings = perfect_matchings(a.n())?;
    let chunk_len = matchings.len().div_ceil(chunks.max(1)).max(1);
    let partials: Vec<S> = matchings
        .par_chunks(chunk_len)
        .map(|ms| {
            ms.iter()
                .fold(a.zero().clone(), |acc, m| acc.add(&matching_product(a, m)))
        })
        .collect();
    Ok(tree_reduce(partials, |x, y| x.add(&y)).unwrap_or_else(|| a.zero().clone()))
}

/// Combines neighbours pairwise, level by level. The combination order
/// depends only on `items.len()`.
pub fn tree_reduce<T, F>(mut items: Vec<T>, f: F) -> Option<T>
where
    F: Fn(T, T) -> T,
{
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(x) = it.next() {
            match it.next() {
                Some(y) => next.push(f(x, y)),
                None => next.push(x),
            }
        }
        items = next;
    }
    items.pop()
}

/// Appends a last row/column whose upper entries are all `one`.
pub fn border<S: Ring>(a: &SkewMatrix<S>, one: S) -> SkewMatrix<S> {
    let n = a.n();
    SkewMatrix::from_fn(n + 1, a.zero().clone(), |i, j| {
        if j == n {
            one.clone()
        } else {
            a.upper(i, j).clone()
        }
    })
}

/// Pfaffian of `a` with the indices in `removed` deleted.
pub fn pfaffian_minor<S: Ring>(a: &SkewMatrix<S>, removed: &[usize]) -> Result<S, PfaffianError> {
    let n = a.n();
    for &r in removed {
        if r >= n {
            return Err(PfaffianError::IndexOutOfRange { index: r, n });
        }
    }
    let keep: Vec<usize> = (0..n).filter(|k| !removed.contains(k)).collect();
    if keep.len() % 2 == 1 {
        return Err(PfaffianError::OddOrder(keep.len()));
    }
    if keep.is_empty() {
        return Ok(a.one());
    }
    pfaffian_recursive(&a.restrict(&keep))
}

/// Determinant of a dense square matrix by Laplace expansion over column
/// subsets (`O(2^n n)` ring operations, no division).
pub fn determinant<S: Ring>(m: &[Vec<S>], zero: &S) -> S {
    let n = m.len();
    if n == 0 {
        return zero.one_like();
    }
    assert!(n <= 24, "determinant order too large");
    // dp[mask] = signed sum over assignments of the first popcount(mask)
    // rows to the columns in mask.
    let mut dp: Vec<S> = vec![zero.clone(); 1 << n];
    dp[0] = zero.one_like();
    for mask in 0u32..(1u32 << n) {
        if dp[mask as usize].is_zero() {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == n {
            continue;
        }
        let cur = dp[mask as usize].clone();
        for col in 0..n {
            if mask & (1 << col) != 0 || m[row][col].is_zero() {
                continue;
            }
            // Sign: number of already-used columns to the right of `col`.
            let above = (mask >> col).count_ones();
            let term = cur.mul(&m[row][col]);
            let slot = (mask | (1 << col)) as usize;
            dp[slot] = if above % 2 == 0 {
                dp[slot].add(&term)
            } else {
                dp[slot].sub(&term)
            };
        }
    }
    dp[(1usize << n) - 1].clone()
}

/// Determinant of `a` with row `row` and column `col` removed.
pub fn det_minor<S: Ring>(a: &SkewMatrix<S>, row: usize, col: usize) -> Result<S, PfaffianError> {
    let n = a.n();
    for idx in [row, col] {
        if idx >= n {
            return Err(PfaffianError::IndexOutOfRange { index: idx, n });
        }
    }
    let dense: Vec<Vec<S>> = (0..n)
        .filter(|&i| i != row)
        .map(|i| (0..n).filter(|&j| j != col).map(|j| a.get(i, j)).collect())
        .collect();
    Ok(determinant(&dense, a.zero()))
}

pub fn det<S: Ring>(a: &SkewMatrix<S>) -> S {
    determinant(&a.to_dense(), a.zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn rq(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn m4() -> SkewMatrix<BigRational> {
        SkewMatrix::from_upper(4, r(0), (1..=6).map(r).collect())
    }

    #[test]
    fn indexing_and_skew_reads() {
        let a = m4();
        assert_eq!(a.get(0, 1), r(1));
        assert_eq!(a.get(2, 3), r(6));
        assert_eq!(a.get(3, 1), r(-5));
        assert_eq!(a.get(2, 2), r(0));
        assert_eq!(a.to_string(), "[1, 2, 3]\n[4, 5]\n[6]\n");
    }

    #[test]
    fn two_by_two() {
        let a = SkewMatrix::from_upper(2, r(0), vec![rq(7, 3)]);
        assert_eq!(pfaffian_recursive(&a).unwrap(), rq(7, 3));
        assert_eq!(pfaffian_matchings(&a).unwrap(), rq(7, 3));
    }

    #[test]
    fn four_by_four_matches_hand_sum() {
        // a12 a34 - a13 a24 + a14 a23 = 1*6 - 2*5 + 3*4
        assert_eq!(pfaffian_recursive(&m4()).unwrap(), r(8));
        assert_eq!(pfaffian_matchings(&m4()).unwrap(), r(8));
    }

    #[test]
    fn odd_order_is_rejected() {
        let a = SkewMatrix::from_upper(3, r(0), vec![r(1), r(2), r(3)]);
        assert_eq!(pfaffian_recursive(&a), Err(PfaffianError::OddOrder(3)));
        assert_eq!(pfaffian_matchings(&a), Err(PfaffianError::OddOrder(3)));
        assert_eq!(
            PfaffianError::OddOrder(3).to_string(),
            "pfaffian undefined for odd order 3"
        );
    }

    #[test]
    fn matching_counts_and_signs() {
        assert_eq!(matching_count(10), 945);
        let ms = perfect_matchings(10).unwrap();
        assert_eq!(ms.len(), 945);
        for m in &ms {
            assert_eq!(m.sign, m.permutation_sign());
        }
        assert_eq!(perfect_matchings(0).unwrap().len(), 1);
    }

    #[test]
    fn border_shape() {
        let a = SkewMatrix::from_upper(2, r(0), vec![r(5)]);
        let b = border(&a, r(1));
        assert_eq!(b.n(), 3);
        assert_eq!(b.upper_entries(), &[r(5), r(1), r(1)]);
        assert_eq!(b.get(2, 0), r(-1));
    }

    #[test]
    fn minor_down_to_a_single_entry() {
        let a = m4();
        assert_eq!(pfaffian_minor(&a, &[0, 3]).unwrap(), a.get(1, 2));
        assert_eq!(pfaffian_minor(&a, &[0, 1, 2, 3]).unwrap(), r(1));
        assert!(pfaffian_minor(&a, &[0]).is_err());
        assert!(pfaffian_minor(&a, &[9]).is_err());
    }

    #[test]
    fn laplace_expansion_reassembles_from_minors() {
        let a = m4();
        let n = a.n();
        let mut sum = r(0);
        for j in 0..n - 1 {
            let term = a.get(j, n - 1) * pfaffian_minor(&a, &[j, n - 1]).unwrap();
            if j % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        assert_eq!(sum, pfaffian_recursive(&a).unwrap());
    }

    #[test]
    fn det_minor_small_cases() {
        // [[0, a], [-a, 0]] without row 0 and column 1 leaves [[-a]].
        let a = SkewMatrix::from_upper(2, r(0), vec![r(3)]);
        assert_eq!(det_minor(&a, 0, 1).unwrap(), r(-3));
        // Halton with the empty pfaffian: -Pf(empty) * Pf(A) = -3.
        let pf = pfaffian_recursive(&a).unwrap();
        assert_eq!(det_minor(&a, 0, 1).unwrap(), -pfaffian_minor(&a, &[0, 1]).unwrap() * pf);
        // Removing row i and column i leaves an odd skew matrix.
        assert_eq!(det_minor(&m4(), 2, 2).unwrap(), r(0));
    }

    #[test]
    fn determinant_of_dense() {
        let m = vec![
            vec![r(2), r(0), r(1)],
            vec![r(1), r(3), r(2)],
            vec![r(1), r(1), r(1)],
        ];
        // 2(3-2) - 0 + 1(1-3) = 0
        assert_eq!(determinant(&m, &r(0)), r(0));
        let m = vec![vec![r(4), r(7)], vec![r(2), r(6)]];
        assert_eq!(determinant(&m, &r(0)), r(10));
        assert_eq!(det(&m4()), r(64));
    }

    #[test]
    fn parallel_sum_is_thread_count_independent() {
        let a = SkewMatrix::from_fn(8, BigInt::from(0), |i, j| BigInt::from((i * 7 + j * 3) as i64 % 5 - 2));
        let want = pfaffian_recursive(&a).unwrap();
        for chunks in [1, 2, 3, 16, 200] {
            assert_eq!(pfaffian_matchings_par(&a, chunks).unwrap(), want);
        }
    }

    #[test]
    fn tree_reduce_order() {
        let s = tree_reduce(vec!["a", "b", "c", "d", "e"].into_iter().map(String::from).collect(), |x, y| format!("({x}{y})"));
        assert_eq!(s.unwrap(), "(((ab)(cd))e)");
        assert!(tree_reduce(Vec::<i32>::new(), |x, y| x + y).is_none());
    }
}
