//! Collinear configurations, their Q-matrices, gap coordinates and the
//! symbolic P / P̃ matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg;
use crate::pfaffian::SkewMatrix;
use crate::polynomial::SparsePoly;
use crate::ring::{rational_to_f64, Field, Ring};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("positions are not strictly decreasing")]
    NotDecreasing,
    #[error("alpha must be positive")]
    AlphaNotPositive,
    #[error("a configuration needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("non-finite value in configuration")]
    NonFinite,
    #[error("cannot parse {0:?} as a number")]
    Parse(String),
    #[error("exact arithmetic needs an integer alpha, got {0}")]
    NonIntegerAlpha(String),
    #[error("order {0} must be even and at least 4")]
    InvalidOrder(usize),
}

/// Strictly decreasing positions `q1 > ... > qn` and homogeneity `alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollinearConfig {
    q: Vec<BigRational>,
    alpha: BigRational,
}

pub fn make_config(q: Vec<BigRational>, alpha: BigRational) -> Result<CollinearConfig, ConfigError> {
    if q.len() < 2 {
        return Err(ConfigError::TooFewPoints { min: 2, got: q.len() });
    }
    if !alpha.is_positive() {
        return Err(ConfigError::AlphaNotPositive);
    }
    if q.windows(2).any(|w| w[0] <= w[1]) {
        return Err(ConfigError::NotDecreasing);
    }
    Ok(CollinearConfig { q, alpha })
}

impl CollinearConfig {
    pub fn new(q: Vec<BigRational>, alpha: BigRational) -> Result<Self, ConfigError> {
        make_config(q, alpha)
    }

    /// Float input, converted exactly to rationals.
    pub fn from_f64(q: &[f64], alpha: f64) -> Result<Self, ConfigError> {
        let conv = |v: f64| BigRational::from_float(v).ok_or(ConfigError::NonFinite);
        let q = q.iter().map(|&v| conv(v)).collect::<Result<Vec<_>, _>>()?;
        make_config(q, conv(alpha)?)
    }

    /// Parses `"3,2,1,0"`-style positions (decimals or `p/q`) and an alpha.
    pub fn parse(q: &str, alpha: &str) -> Result<Self, ConfigError> {
        let q = q
            .split(',')
            .map(|t| parse_rational(t.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        make_config(q, parse_rational(alpha.trim())?)
    }

    /// Positions `0 = q_n < ... < q_1` built from consecutive gaps.
    pub fn from_gaps(x: &[BigRational], alpha: BigRational) -> Result<Self, ConfigError> {
        let mut q = vec![BigRational::zero(); x.len() + 1];
        for k in (0..x.len()).rev() {
            q[k] = &q[k + 1] + &x[k];
        }
        make_config(q, alpha)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn positions(&self) -> &[BigRational] {
        &self.q
    }

    pub fn alpha(&self) -> &BigRational {
        &self.alpha
    }

    pub fn alpha_f64(&self) -> f64 {
        rational_to_f64(&self.alpha)
    }

    pub fn alpha_is_integer(&self) -> bool {
        self.alpha.is_integer()
    }

    pub fn positions_in<F: ConfigScalar>(&self) -> Vec<F> {
        self.q.iter().map(F::from_rational).collect()
    }

    /// `q_ij = q_i - q_j` (positive for `i < j`).
    pub fn distance(&self, i: usize, j: usize) -> BigRational {
        &self.q[i] - &self.q[j]
    }

    /// Q-matrix over the chosen scalar: `Q_ij = q_ij^(-alpha-1)` for `i < j`.
    pub fn q_matrix_in<F: ConfigScalar>(&self) -> Result<SkewMatrix<F>, ConfigError> {
        let n = self.n();
        let mut entries = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                entries.push(F::neg_power(&self.distance(i, j), &self.alpha, 1)?);
            }
        }
        let zero = F::from_rational(&BigRational::zero());
        Ok(SkewMatrix::from_upper(n, zero, entries))
    }

    /// Translated so `q_n = 0` and scaled so `q_1 - q_n = 1`.
    pub fn normalized(&self) -> CollinearConfig {
        let last = self.q[self.n() - 1].clone();
        let span = &self.q[0] - &last;
        CollinearConfig {
            q: self.q.iter().map(|v| (v - &last) / &span).collect(),
            alpha: self.alpha.clone(),
        }
    }

    /// Gaps normalized to sum to one (the point of the simplex used by the
    /// convex-hull test).
    pub fn simplex_gaps(&self) -> Vec<BigRational> {
        self.normalized().gap_coords().x
    }

    pub fn gap_coords(&self) -> GapCoords<BigRational> {
        let n = self.n();
        let sum: BigRational = self.q.iter().sum();
        GapCoords {
            x0: sum / BigRational::from_integer(BigInt::from(n)),
            x: self.q.windows(2).map(|w| &w[0] - &w[1]).collect(),
        }
    }
}

/// Either exact or float Q-matrix, depending on alpha.
#[derive(Clone, Debug)]
pub enum QMatrix {
    Exact(SkewMatrix<BigRational>),
    Float(SkewMatrix<f64>),
}

/// Exact rational entries when alpha is an integer, floats otherwise.
pub fn q_matrix(cfg: &CollinearConfig) -> QMatrix {
    if cfg.alpha_is_integer() {
        QMatrix::Exact(cfg.q_matrix_in().expect("integer alpha"))
    } else {
        QMatrix::Float(cfg.q_matrix_in().expect("float path is total"))
    }
}

/// Scalars a configuration can be evaluated in.
pub trait ConfigScalar: Field + Send + Sync {
    fn from_rational(r: &BigRational) -> Self;

    /// `d^-(alpha + extra)` for `d > 0`.
    fn neg_power(d: &BigRational, alpha: &BigRational, extra: i64) -> Result<Self, ConfigError>;
}

impl ConfigScalar for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn neg_power(d: &BigRational, alpha: &BigRational, extra: i64) -> Result<Self, ConfigError> {
        if !alpha.is_integer() {
            return Err(ConfigError::NonIntegerAlpha(alpha.to_string()));
        }
        let k = alpha.to_integer() + BigInt::from(extra);
        let k = k.to_i32().ok_or_else(|| ConfigError::NonIntegerAlpha(alpha.to_string()))?;
        Ok(d.pow(-k))
    }
}

impl ConfigScalar for f64 {
    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }

    fn neg_power(d: &BigRational, alpha: &BigRational, extra: i64) -> Result<Self, ConfigError> {
        let e = rational_to_f64(alpha) + extra as f64;
        Ok((-e * rational_to_f64(d).ln()).exp())
    }
}

/// Parses an integer, decimal (`-0.25`, `1e-3`) or fraction (`3/4`) exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, ConfigError> {
    let err = || ConfigError::Parse(s.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if Zero::is_zero(&d) {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().map_err(|_| err())? / 10;
    let scale = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut v = BigRational::from_integer(all) * ten.pow(scale);
    if neg {
        v = -v;
    }
    Ok(v)
}

/// Centroid `x0` and consecutive gaps `x_j = q_j - q_{j+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapCoords<F> {
    pub x0: F,
    pub x: Vec<F>,
}

impl GapCoords<BigRational> {
    /// Positions recovered through `q = B (x0, x1, ..., x_{n-1})`.
    pub fn to_positions(&self) -> Vec<BigRational> {
        let n = self.x.len() + 1;
        let b = b_matrix(n);
        let mut v = Vec::with_capacity(n);
        v.push(self.x0.clone());
        v.extend(self.x.iter().cloned());
        linalg::mat_vec(&b, &v)
    }
}

/// The change-of-basis matrix with `q = B x`. Column 0 is all ones and
/// entry `(i, c)` for `c >= 1` is `1 - c/n` when `i <= c` (1-based `i`),
/// `-c/n` otherwise.
pub fn b_matrix(n: usize) -> Vec<Vec<BigRational>> {
    assert!(n >= 2, "B needs n >= 2");
    let nn = BigInt::from(n);
    (1..=n)
        .map(|i| {
            (0..n)
                .map(|c| {
                    if c == 0 {
                        BigRational::one()
                    } else {
                        let frac = BigRational::new(BigInt::from(c), nn.clone());
                        if i <= c {
                            BigRational::one() - frac
                        } else {
                            -frac
                        }
                    }
                })
                .collect()
        })
        .collect()
}

/// `B^-1`: first row averages, then the difference stencil.
pub fn b_inverse(n: usize) -> Vec<Vec<BigRational>> {
    let avg = BigRational::new(BigInt::one(), BigInt::from(n));
    let mut rows = vec![vec![avg; n]];
    for j in 0..n - 1 {
        let mut row = vec![BigRational::zero(); n];
        row[j] = BigRational::one();
        row[j + 1] = -BigRational::one();
        rows.push(row);
    }
    rows
}

/// The crisscross transform `q~_j = -1 / (q_j - q_n)`, `j < n`.
pub fn crisscross(cfg: &CollinearConfig) -> Result<CollinearConfig, ConfigError> {
    let n = cfg.n();
    if n < 3 {
        return Err(ConfigError::TooFewPoints { min: 3, got: n });
    }
    let last = &cfg.q[n - 1];
    let q = cfg.q[..n - 1]
        .iter()
        .map(|qj| -(qj - last).recip())
        .collect();
    make_config(q, cfg.alpha.clone())
}

/// Linear forms attached to index pairs: each form is a sum of gap
/// variables (an empty form is the constant 1). Entry `(i, j)` of the
/// polynomial matrix is the product of the forms of every pair meeting
/// `{i, j}` other than `(i, j)` itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairForms {
    n: usize,
    nvars: usize,
    forms: Vec<Vec<usize>>,
}

impl PairForms {
    /// Forms `q_ab = x_a + ... + x_{b-1}` in the `n - 1` gap variables.
    pub fn p(n: usize) -> Self {
        let mut forms = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                forms.push((a..b).collect());
            }
        }
        PairForms {
            n,
            nvars: n.saturating_sub(1),
            forms,
        }
    }

    /// Forms of the bordered crisscross matrix: `x~_a + ... + x~_{b-1}` for
    /// `b < n - 1` and the constant 1 against the border index `n - 1`.
    pub fn p_tilde(n: usize) -> Self {
        let mut forms = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                if b == n - 1 {
                    forms.push(Vec::new());
                } else {
                    forms.push((a..b).collect());
                }
            }
        }
        PairForms {
            n,
            nvars: n.saturating_sub(2),
            forms,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Variables summed by the form of pair `(a, b)`, any order.
    pub fn form(&self, a: usize, b: usize) -> &[usize] {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        &self.forms[i * (2 * self.n - i - 1) / 2 + (j - i - 1)]
    }

    pub fn form_poly(&self, a: usize, b: usize) -> SparsePoly {
        let vars = self.form(a, b);
        if vars.is_empty() {
            return SparsePoly::one(self.nvars);
        }
        SparsePoly::var_range_sum(self.nvars, vars[0], vars[vars.len() - 1] + 1)
    }

    /// Pairs whose forms multiply into entry `(i, j)`.
    pub fn entry_factors(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.n);
        for a in 0..self.n {
            for b in a + 1..self.n {
                let meets = a == i || a == j || b == i || b == j;
                if meets && (a, b) != (i.min(j), i.max(j)) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn entry_poly(&self, i: usize, j: usize) -> SparsePoly {
        self.entry_factors(i, j)
            .into_iter()
            .fold(SparsePoly::one(self.nvars), |acc, (a, b)| {
                acc.mul(&self.form_poly(a, b))
            })
    }

    pub fn to_matrix(&self) -> SkewMatrix<SparsePoly> {
        SkewMatrix::from_fn(self.n, SparsePoly::zero(self.nvars), |i, j| self.entry_poly(i, j))
    }

    /// Value of the form of pair `(a, b)` at a point.
    pub fn eval_form(&self, a: usize, b: usize, point: &[BigRational]) -> BigRational {
        let vars = self.form(a, b);
        if vars.is_empty() {
            BigRational::one()
        } else {
            vars.iter().map(|&v| &point[v]).sum()
        }
    }
}

fn check_even_order(n: usize) -> Result<(), ConfigError> {
    if n < 4 || n % 2 == 1 {
        Err(ConfigError::InvalidOrder(n))
    } else {
        Ok(())
    }
}

/// Symbolic P-matrix in the gap variables `x_1..x_{n-1}` (alpha = 1).
pub fn p_matrix_symbolic(n: usize) -> Result<SkewMatrix<SparsePoly>, ConfigError> {
    check_even_order(n)?;
    Ok(PairForms::p(n).to_matrix())
}

/// Symbolic P̃-matrix in the variables `x~_1..x~_{n-2}` (alpha = 1).
pub fn p_tilde_matrix_symbolic(n: usize) -> Result<SkewMatrix<SparsePoly>, ConfigError> {
    check_even_order(n)?;
    Ok(PairForms::p_tilde(n).to_matrix())
}

/// Multiplier, translation and scaled masses of an inverse-problem solution.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseSolutionScalars<F> {
    pub lambda: F,
    pub c_hat: F,
    pub m_hat: Vec<F>,
}

impl<F: ConfigScalar> InverseSolutionScalars<F> {
    /// Recovers `lambda = -alpha U / I` from scaled masses and translation,
    /// where `U` is the potential and `I` the moment of inertia about
    /// `c_hat`. For an exact solution this equals `-alpha`.
    pub fn from_solution(
        cfg: &CollinearConfig,
        m_hat: Vec<F>,
        c_hat: F,
    ) -> Result<Self, ConfigError> {
        let n = cfg.n();
        let q: Vec<F> = cfg.positions_in();
        let mut potential = c_hat.zero_like();
        for i in 0..n {
            for j in i + 1..n {
                let r = F::neg_power(&cfg.distance(i, j), cfg.alpha(), 0)?;
                potential = potential.add(&m_hat[i].mul(&m_hat[j]).mul(&r));
            }
        }
        let mut inertia = c_hat.zero_like();
        for i in 0..n {
            let d = q[i].sub(&c_hat);
            inertia = inertia.add(&m_hat[i].mul(&d).mul(&d));
        }
        let alpha = F::from_rational(cfg.alpha());
        let lambda = alpha.mul(&potential).div(&inertia).neg();
        Ok(InverseSolutionScalars { lambda, c_hat, m_hat })
    }
}
