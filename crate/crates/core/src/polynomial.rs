//! Sparse multivariate polynomials with arbitrary-precision integer
//! coefficients.
//!
//! Monomials are packed into a single `u128`: the top [`DEGREE_BITS`] bits
//! hold the total degree and each variable owns a [`EXP_BITS`]-bit field,
//! variable 0 in the most significant field. Integer order on packed keys is
//! therefore "total degree, then exponent vectors lexicographically", which
//! is the canonical term order. Multiplying by a monomial is adding its key,
//! and integer addition preserves order, so shifted term lists stay sorted.
//!
//! Terms live in a vector sorted by key with no zero coefficients.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub const EXP_BITS: u32 = 12;
pub const DEGREE_BITS: u32 = 8;
pub const MAX_VARS: usize = 10;
pub const MAX_EXPONENT: u32 = (1 << EXP_BITS) - 1;
pub const MAX_DEGREE: u32 = (1 << DEGREE_BITS) - 1;

const DEGREE_SHIFT: u32 = 128 - DEGREE_BITS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable count mismatch: {0} vs {1}")]
    VarCountMismatch(usize, usize),
    #[error("at most {MAX_VARS} variables are supported, got {0}")]
    TooManyVariables(usize),
    #[error("exponent overflow: per-variable exponent above {MAX_EXPONENT} or degree above {MAX_DEGREE}")]
    ExponentOverflow,
    #[error("evaluation point has {got} coordinates, polynomial has {expected} variables")]
    PointLength { expected: usize, got: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[inline]
pub(crate) fn var_shift(var: usize) -> u32 {
    DEGREE_SHIFT - EXP_BITS * (var as u32 + 1)
}

/// Packed key of the monomial `x_var`.
#[inline]
pub(crate) fn var_key(var: usize) -> u128 {
    (1u128 << DEGREE_SHIFT) | (1u128 << var_shift(var))
}

#[inline]
pub(crate) fn key_degree(key: u128) -> u32 {
    (key >> DEGREE_SHIFT) as u32
}

#[inline]
pub(crate) fn key_exponent(key: u128, var: usize) -> u32 {
    ((key >> var_shift(var)) as u32) & MAX_EXPONENT
}

/// A monomial as an exponent vector, one slot per variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    key: u128,
    nvars: u8,
}

impl Monomial {
    pub fn new(exponents: &[u32]) -> Result<Self, PolyError> {
        if exponents.len() > MAX_VARS {
            return Err(PolyError::TooManyVariables(exponents.len()));
        }
        let mut key = 0u128;
        let mut degree = 0u32;
        for (v, &e) in exponents.iter().enumerate() {
            if e > MAX_EXPONENT {
                return Err(PolyError::ExponentOverflow);
            }
            degree += e;
            key |= (e as u128) << var_shift(v);
        }
        if degree > MAX_DEGREE {
            return Err(PolyError::ExponentOverflow);
        }
        key |= (degree as u128) << DEGREE_SHIFT;
        Ok(Monomial {
            key,
            nvars: exponents.len() as u8,
        })
    }

    pub(crate) fn from_key(key: u128, nvars: usize) -> Self {
        Monomial {
            key,
            nvars: nvars as u8,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn exponent(&self, var: usize) -> u32 {
        key_exponent(self.key, var)
    }

    pub fn exponents(&self) -> Vec<u32> {
        (0..self.nvars()).map(|v| self.exponent(v)).collect()
    }

    pub fn degree(&self) -> u32 {
        key_degree(self.key)
    }

    pub fn key(&self) -> u128 {
        self.key
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Monomial{:?}", self.exponents())
    }
}

/// Coefficient statistics of a polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyStats {
    pub n_terms: usize,
    pub min_coeff: BigInt,
    pub max_coeff: BigInt,
    /// Highest total degree; 0 for the zero polynomial (check `n_terms`).
    pub total_degree: u32,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SparsePoly {
    nvars: usize,
    terms: Vec<(u128, BigInt)>,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables");
        SparsePoly {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigInt::one())
    }

    pub fn constant(nvars: usize, c: BigInt) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.push((0, c));
        }
        p
    }

    /// The polynomial `x_var` (0-based index).
    pub fn var(nvars: usize, var: usize) -> Self {
        assert!(var < nvars, "variable index out of range");
        let mut p = Self::zero(nvars);
        p.terms.push((var_key(var), BigInt::one()));
        p
    }

    /// Sum of the variables `x_start, ..., x_{end-1}`.
    pub fn var_range_sum(nvars: usize, start: usize, end: usize) -> Self {
        assert!(start < end && end <= nvars, "bad variable range");
        let mut terms: Vec<(u128, BigInt)> =
            (start..end).map(|v| (var_key(v), BigInt::one())).collect();
        terms.sort_unstable_by_key(|t| t.0);
        SparsePoly { nvars, terms }
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing
    /// repeated monomials and dropping zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, BigInt)>,
    {
        if nvars > MAX_VARS {
            return Err(PolyError::TooManyVariables(nvars));
        }
        let mut acc: HashMap<u128, BigInt> = HashMap::new();
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(PolyError::VarCountMismatch(nvars, exps.len()));
            }
            let m = Monomial::new(&exps)?;
            *acc.entry(m.key).or_default() += c;
        }
        Ok(Self::from_map(nvars, acc))
    }

    fn from_map(nvars: usize, acc: HashMap<u128, BigInt>) -> Self {
        let mut terms: Vec<(u128, BigInt)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by_key(|t| t.0);
        SparsePoly { nvars, terms }
    }

    /// Wraps an already sorted, zero-free term list.
    pub(crate) fn from_sorted_terms(nvars: usize, terms: Vec<(u128, BigInt)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(terms.iter().all(|t| !t.1.is_zero()));
        SparsePoly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order (total degree, then lexicographic).
    pub fn terms(&self) -> impl Iterator<Item = (Monomial, &BigInt)> + '_ {
        let nvars = self.nvars;
        self.terms
            .iter()
            .map(move |(k, c)| (Monomial::from_key(*k, nvars), c))
    }

    pub fn coeff(&self, exponents: &[u32]) -> BigInt {
        match Monomial::new(exponents) {
            Ok(m) => match self.terms.binary_search_by_key(&m.key, |t| t.0) {
                Ok(i) => self.terms[i].1.clone(),
                Err(_) => BigInt::zero(),
            },
            Err(_) => BigInt::zero(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::VarCountMismatch(self.nvars, other.nvars));
        }
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = &a[i].1 + &b[j].1;
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(SparsePoly {
            nvars: self.nvars,
            terms: out,
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::VarCountMismatch(self.nvars, other.nvars));
        }
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.nvars));
        }
        if self.max_degree() + other.max_degree() > MAX_DEGREE {
            return Err(PolyError::ExponentOverflow);
        }
        for v in 0..self.nvars {
            if self.max_exponent(v) + other.max_exponent(v) > MAX_EXPONENT {
                return Err(PolyError::ExponentOverflow);
            }
        }
        let mut acc: HashMap<u128, BigInt> =
            HashMap::with_capacity(self.terms.len().max(other.terms.len()));
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                *acc.entry(ka + kb).or_default() += ca * cb;
            }
        }
        Ok(Self::from_map(self.nvars, acc))
    }

    pub fn negated(&self) -> Self {
        SparsePoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }

    fn max_degree(&self) -> u32 {
        self.terms.last().map(|t| key_degree(t.0)).unwrap_or(0)
    }

    fn max_exponent(&self, var: usize) -> u32 {
        self.terms
            .iter()
            .map(|t| key_exponent(t.0, var))
            .max()
            .unwrap_or(0)
    }

    pub fn stats(&self) -> PolyStats {
        let mut min = None::<&BigInt>;
        let mut max = None::<&BigInt>;
        for (_, c) in &self.terms {
            if min.is_none_or(|m| c < m) {
                min = Some(c);
            }
            if max.is_none_or(|m| c > m) {
                max = Some(c);
            }
        }
        PolyStats {
            n_terms: self.terms.len(),
            min_coeff: min.cloned().unwrap_or_default(),
            max_coeff: max.cloned().unwrap_or_default(),
            total_degree: self.max_degree(),
        }
    }

    /// True iff every stored coefficient is strictly positive.
    pub fn is_nonneg(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_positive())
    }

    pub fn eval(&self, point: &[BigRational]) -> Result<BigRational, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::PointLength {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let powers: Vec<Vec<BigRational>> = (0..self.nvars)
            .map(|v| {
                let top = self.max_exponent(v) as usize;
                let mut pw = Vec::with_capacity(top + 1);
                pw.push(BigRational::one());
                for e in 1..=top {
                    let next = &pw[e - 1] * &point[v];
                    pw.push(next);
                }
                pw
            })
            .collect();
        let mut sum = BigRational::zero();
        for (k, c) in &self.terms {
            let mut t = BigRational::from_integer(c.clone());
            for (v, pw) in powers.iter().enumerate() {
                let e = key_exponent(*k, v) as usize;
                if e > 0 {
                    t *= &pw[e];
                }
            }
            sum += t;
        }
        Ok(sum)
    }

    /// Text form: a `nvars=k nterms=N` header, then one `coeff e1 .. ek`
    /// line per term in canonical order.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(16 + self.terms.len() * (8 + 3 * self.nvars));
        self.write_text(&mut s).expect("writing to a String cannot fail");
        s
    }

    pub fn write_text<W: fmt::Write>(&self, w: &mut W) -> fmt::Result {
        writeln!(w, "nvars={} nterms={}", self.nvars, self.terms.len())?;
        for (k, c) in &self.terms {
            write!(w, "{c}")?;
            for v in 0..self.nvars {
                write!(w, " {}", key_exponent(*k, v))?;
            }
            w.write_char('\n')?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, PolyError> {
        let perr = |line: usize, msg: &str| PolyError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
        let mut nvars = None;
        let mut nterms = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("nvars", v)) => nvars = v.parse::<usize>().ok(),
                Some(("nterms", v)) => nterms = v.parse::<usize>().ok(),
                _ => return Err(perr(1, "unexpected header field")),
            }
        }
        let nvars = nvars.ok_or_else(|| perr(1, "bad nvars"))?;
        let nterms = nterms.ok_or_else(|| perr(1, "bad nterms"))?;
        if nvars > MAX_VARS {
            return Err(PolyError::TooManyVariables(nvars));
        }
        let mut terms = Vec::with_capacity(nterms);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let c: BigInt = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| perr(idx + 1, "bad coefficient"))?;
            let exps: Vec<u32> = it
                .map(|t| t.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| perr(idx + 1, "bad exponent"))?;
            if exps.len() != nvars {
                return Err(perr(idx + 1, "wrong number of exponents"));
            }
            if c.is_zero() {
                return Err(perr(idx + 1, "zero coefficient"));
            }
            let m = Monomial::new(&exps)?;
            if let Some((prev, _)) = terms.last() {
                if *prev >= m.key {
                    return Err(perr(idx + 1, "terms out of canonical order"));
                }
            }
            terms.push((m.key, c));
        }
        if terms.len() != nterms {
            return Err(perr(1, "term count does not match header"));
        }
        Ok(SparsePoly { nvars, terms })
    }
}

impl fmt::Debug for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparsePoly({self})")
    }
}

/// Human-readable form, e.g. `x1^2*x2 - 3*x3 + 1` (1-based variable names).
impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let vars: Vec<String> = (0..self.nvars)
                .filter_map(|v| match key_exponent(*k, v) {
                    0 => None,
                    1 => Some(format!("x{}", v + 1)),
                    e => Some(format!("x{}^{}", v + 1, e)),
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else {
                if !mag.is_one() {
                    write!(f, "{mag}*")?;
                }
                write!(f, "{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

pub fn poly_add(a: &SparsePoly, b: &SparsePoly) -> Result<SparsePoly, PolyError> {
    a.checked_add(b)
}

pub fn poly_mul(a: &SparsePoly, b: &SparsePoly) -> Result<SparsePoly, PolyError> {
    a.checked_mul(b)
}

pub fn poly_stats(p: &SparsePoly) -> PolyStats {
    p.stats()
}

pub fn poly_is_nonneg(p: &SparsePoly) -> bool {
    p.is_nonneg()
}

pub fn poly_eval(p: &SparsePoly, point: &[BigRational]) -> Result<BigRational, PolyError> {
    p.eval(point)
}
