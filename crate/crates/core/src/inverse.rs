//! The inverse problem: which masses make a given collinear configuration
//! central?
//!
//! A configuration is central for masses `m` iff `Q m + c L = q` for some
//! translation `c`, with `L` the all-ones vector. The real solutions form a
//! line:
//!
//! * even `n` with `Pf Q != 0`: `Q` is invertible and `m(c) = u - c v` with
//!   `u = Q^-1 q`, `v = Q^-1 L`;
//! * odd `n`: `Q` is singular, `c` is forced, and the masses are
//!   `m0 + t w` with `w` spanning `ker Q` (signed pfaffian minors) and `m0`
//!   the solution with `m_n = 0`.
//!
//! Positive masses exist iff the parameter interval where every mass is
//! positive is nonempty. The same question is answered geometrically by the
//! convex-hull test on the projected columns of `Y`, and ruled out early by
//! the half-gap exclusion test.

use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::configuration::{CollinearConfig, ConfigError, ConfigScalar};
use crate::linalg;
use crate::pfaffian::{border, pfaffian_minor, SkewMatrix};
use crate::ring::Field;

/// Positivity threshold for float decisions, on a configuration scaled to
/// `q_1 - q_n = 1`.
pub const FLOAT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InverseError {
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("gap vector needs {expected} positive entries")]
    BadGaps { expected: usize },
    #[error("region scans support n = 4 or 5, got {0}")]
    UnsupportedOrder(usize),
    #[error("grid resolution must be at least 2, got {0}")]
    BadResolution(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Free parameter is the translation `c`.
    Even,
    /// Free parameter `t` moves the masses along `ker Q`; `c` is fixed.
    Odd,
}

/// All real solutions of `Q m + c L = q`, as a line in the free parameter
/// `s`: `m(s) = base + s dir`, `c(s) = c_base + s c_dir`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMassSolution<F> {
    pub parity: Parity,
    pub base: Vec<F>,
    pub dir: Vec<F>,
    pub c_base: F,
    pub c_dir: F,
}

impl<F: Field> RealMassSolution<F> {
    pub fn masses_at(&self, s: &F) -> Vec<F> {
        self.base.iter().zip(&self.dir).map(|(b, d)| b.add(&d.mul(s))).collect()
    }

    pub fn c_at(&self, s: &F) -> F {
        self.c_base.add(&self.c_dir.mul(s))
    }

    pub fn parameter_name(&self) -> &'static str {
        match self.parity {
            Parity::Even => "c",
            Parity::Odd => "t",
        }
    }
}

/// `Q m + c L - q` for the configuration.
pub fn residual<F: ConfigScalar>(cfg: &CollinearConfig, m: &[F], c: &F) -> Result<Vec<F>, InverseError> {
    let q = cfg.q_matrix_in::<F>()?.to_dense();
    let pos: Vec<F> = cfg.positions_in();
    Ok(linalg::mat_vec(&q, m)
        .into_iter()
        .zip(pos)
        .map(|(v, p)| v.add(c).sub(&p))
        .collect())
}

pub fn solve_real_masses<F: ConfigScalar>(cfg: &CollinearConfig) -> Result<RealMassSolution<F>, InverseError> {
    let n = cfg.n();
    let qm = cfg.q_matrix_in::<F>()?;
    let dense = qm.to_dense();
    let pos: Vec<F> = cfg.positions_in();
    let zero = qm.zero().clone();
    let one = qm.one();
    if n.is_multiple_of(2) {
        let ones = vec![one.clone(); n];
        let (u, v) = match (linalg::solve(&dense, &pos), linalg::solve(&dense, &ones)) {
            (Some(u), Some(v)) => (u, v),
            _ => return Err(InverseError::Degenerate("Pf Q vanishes".into())),
        };
        return Ok(RealMassSolution {
            parity: Parity::Even,
            base: u,
            dir: v.iter().map(|x| x.neg()).collect(),
            c_base: zero,
            c_dir: one,
        });
    }
    // Drop the last mass column: [Q_{., <n} | L] (m_1..m_{n-1}, c) = q.
    let sub: Vec<Vec<F>> = dense
        .iter()
        .map(|row| {
            let mut r = row[..n - 1].to_vec();
            r.push(one.clone());
            r
        })
        .collect();
    let sol = linalg::solve(&sub, &pos).ok_or_else(|| {
        InverseError::Degenerate("Pf border(Q) * Pf Q[1..n-1] vanishes".into())
    })?;
    let mut base = sol[..n - 1].to_vec();
    base.push(zero.clone());
    let c_base = sol[n - 1].clone();
    let dir = kernel_vector(&qm)?;
    Ok(RealMassSolution {
        parity: Parity::Odd,
        base,
        dir,
        c_base,
        c_dir: zero,
    })
}

/// `w_k = (-1)^k Pf Q[k^]` spans the kernel of an odd skew matrix of rank
/// `n - 1`.
pub fn kernel_vector<F: ConfigScalar>(q: &SkewMatrix<F>) -> Result<Vec<F>, InverseError> {
    let mut w = Vec::with_capacity(q.n());
    for k in 0..q.n() {
        let pf = pfaffian_minor(q, &[k]).map_err(|e| InverseError::Degenerate(e.to_string()))?;
        w.push(if k % 2 == 0 { pf } else { pf.neg() });
    }
    if w.iter().all(|x| x.is_zero()) {
        return Err(InverseError::Degenerate("Q has rank below n - 1".into()));
    }
    Ok(w)
}

/// `Pf Q` for even `n`, `Pf border(Q)` for odd `n`: the quantity whose
/// nonvanishing gives real solutions.
pub fn solvability_pfaffian<F: ConfigScalar>(cfg: &CollinearConfig) -> Result<F, InverseError> {
    let q = cfg.q_matrix_in::<F>()?;
    let m = if cfg.n().is_multiple_of(2) { q } else { border(&q, q.one()) };
    crate::pfaffian::pfaffian_recursive(&m).map_err(|e| InverseError::Degenerate(e.to_string()))
}

/// An interval of the free parameter, `None` meaning unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamInterval<F> {
    pub lo: Option<F>,
    pub hi: Option<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate<F> {
    /// Direct decision: the parameter range where all masses are positive
    /// (possibly empty) and, when nonempty, a witness.
    Interval {
        parity: Parity,
        interval: ParamInterval<F>,
        witness: Option<(Vec<F>, F)>,
    },
    /// `x` lies inside the facet simplex that omits column `omitted`
    /// (0-based), with these barycentric weights on the other columns.
    Hull { omitted: usize, weights: Vec<F> },
    /// `x` lies in no facet simplex.
    OutsideHull,
    /// The gap `x_{index + 1}` exceeds half the span.
    Excluded { index: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityResult<F> {
    pub feasible: bool,
    /// Infeasible only because some mass is forced to exactly zero (or
    /// within tolerance of it).
    pub boundary: bool,
    pub certificate: Certificate<F>,
}

impl<F: Field + fmt::Display> fmt::Display for FeasibilityResult<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.feasible { "feasible" } else { "infeasible" };
        write!(f, "{verdict}")?;
        if self.boundary {
            write!(f, " (boundary)")?;
        }
        match &self.certificate {
            Certificate::Interval { parity, interval, .. } => {
                let name = if *parity == Parity::Even { "c" } else { "t" };
                let lo = interval.lo.as_ref().map_or("-inf".to_string(), |v| v.to_string());
                let hi = interval.hi.as_ref().map_or("inf".to_string(), |v| v.to_string());
                write!(f, ", {name} in ({lo}, {hi})")
            }
            Certificate::Hull { omitted, .. } => write!(f, ", inside facet simplex omitting Y{}", omitted + 1),
            Certificate::OutsideHull => write!(f, ", outside every facet simplex"),
            Certificate::Excluded { index } => write!(f, ", 2 x{} > x1 + ... + x(n-1)", index + 1),
        }
    }
}

fn gt<F: Field>(a: &F, b: &F) -> bool {
    a.sub(b).signum_tol(0.0) > 0
}

fn float_scalar<F: ConfigScalar>(v: f64) -> F {
    F::from_rational(&BigRational::from_float(v).expect("finite tolerance"))
}

/// Mass threshold: zero in exact arithmetic, `FLOAT_TOL` on the
/// configuration scaled to unit span (masses scale like `span^(alpha+2)`).
fn mass_tolerance<F: ConfigScalar>(cfg: &CollinearConfig) -> F {
    if F::EXACT {
        return float_scalar(0.0);
    }
    let span = cfg.distance(0, cfg.n() - 1);
    let scale = (crate::ring::rational_to_f64(&span).ln() * (cfg.alpha_f64() + 2.0)).exp();
    float_scalar(FLOAT_TOL * scale)
}

/// Interval of `s` with `base + s dir > tol` for every mass (`>=` when
/// `strict` is false), and whether it is nonempty.
fn positivity_interval<F: Field>(sol: &RealMassSolution<F>, tol: &F, strict: bool) -> (ParamInterval<F>, bool) {
    let mut lo: Option<F> = None;
    let mut hi: Option<F> = None;
    let mut constant_ok = true;
    for (b, d) in sol.base.iter().zip(&sol.dir) {
        let sign = d.signum_tol(0.0);
        if sign == 0 {
            constant_ok &= if strict { gt(b, tol) } else { !gt(tol, b) };
            continue;
        }
        let bound = tol.sub(b).div(d);
        if sign > 0 {
            if lo.as_ref().is_none_or(|l| gt(&bound, l)) {
                lo = Some(bound);
            }
        } else if hi.as_ref().is_none_or(|h| gt(h, &bound)) {
            hi = Some(bound);
        }
    }
    let nonempty = match (&lo, &hi) {
        (Some(l), Some(h)) => {
            if strict {
                gt(h, l)
            } else {
                !gt(l, h)
            }
        }
        _ => true,
    };
    (ParamInterval { lo, hi }, constant_ok && nonempty)
}

/// Decides positive masses by intersecting the half-lines where each mass
/// is positive.
pub fn solve_positive_direct<F: ConfigScalar>(cfg: &CollinearConfig) -> Result<FeasibilityResult<F>, InverseError> {
    let sol = solve_real_masses::<F>(cfg)?;
    let tol = mass_tolerance::<F>(cfg);
    let (interval, feasible) = positivity_interval(&sol, &tol, true);
    // Infeasible, yet non-negative masses exist (within tolerance for floats).
    let boundary = !feasible && positivity_interval(&sol, &tol.neg(), false).1;
    let witness = feasible.then(|| {
        let one = tol.one_like();
        let s = match (&interval.lo, &interval.hi) {
            (Some(l), Some(h)) => l.add(h).div(&one.add(&one)),
            (Some(l), None) => l.add(&one),
            (None, Some(h)) => h.sub(&one),
            (None, None) => tol.zero_like(),
        };
        (sol.masses_at(&s), sol.c_at(&s))
    });
    Ok(FeasibilityResult {
        feasible,
        boundary,
        certificate: Certificate::Interval {
            parity: sol.parity,
            interval,
            witness,
        },
    })
}

/// Columns `Y_k` with `Y_ik = Q_ik - Q_{i+1,k}` (skew entries), their sums
/// `Q_1k + Q_kn` and the centrally projected columns.
#[derive(Clone, Debug, PartialEq)]
pub struct YMatrix<F> {
    pub n: usize,
    /// `columns[k][i] = Y_ik`.
    pub columns: Vec<Vec<F>>,
    pub column_sums: Vec<F>,
    pub projected: Vec<Vec<F>>,
}

impl<F: Field> YMatrix<F> {
    pub fn from_q(q: &SkewMatrix<F>) -> Self {
        let n = q.n();
        let columns: Vec<Vec<F>> = (0..n)
            .map(|k| (0..n - 1).map(|i| q.get(i, k).sub(&q.get(i + 1, k))).collect())
            .collect();
        let column_sums: Vec<F> = (0..n).map(|k| q.get(0, k).add(&q.get(k, n - 1))).collect();
        let projected = columns
            .iter()
            .zip(&column_sums)
            .map(|(col, s)| col.iter().map(|v| v.div(s)).collect())
            .collect();
        YMatrix {
            n,
            columns,
            column_sums,
            projected,
        }
    }

    /// Row-major `(n - 1) x n` view of `Y`.
    pub fn rows(&self) -> Vec<Vec<F>> {
        (0..self.n - 1)
            .map(|i| self.columns.iter().map(|c| c[i].clone()).collect())
            .collect()
    }
}

/// Gap vector scaled to sum to one, rejecting non-positive entries.
fn simplex_point(x: &[BigRational], n: usize) -> Result<Vec<BigRational>, InverseError> {
    if x.len() + 1 != n || x.iter().any(|v| !v.is_positive()) {
        return Err(InverseError::BadGaps { expected: n - 1 });
    }
    let sum: BigRational = x.iter().sum();
    Ok(x.iter().map(|v| v / &sum).collect())
}

fn simplex_config(x: &[BigRational], alpha: &BigRational) -> Result<CollinearConfig, InverseError> {
    let x = simplex_point(x, x.len() + 1)?;
    Ok(CollinearConfig::from_gaps(&x, alpha.clone())?)
}

/// `Y` at the configuration with gaps `x` (rescaled to sum to one).
pub fn y_vectors<F: ConfigScalar>(x: &[BigRational], alpha: &BigRational) -> Result<YMatrix<F>, InverseError> {
    let cfg = simplex_config(x, alpha)?;
    Ok(YMatrix::from_q(&cfg.q_matrix_in::<F>()?))
}

/// Facet-simplex test of `x in CH[p(Y_1), ..., p(Y_n)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HullMembership<F> {
    pub member: bool,
    /// Omitted columns (0-based) whose facet simplex contains `x`.
    pub facets: Vec<usize>,
    /// Barycentric weights per omitted column, `None` if that system is
    /// singular.
    pub weights: Vec<Option<Vec<F>>>,
    /// Set when every facet system was singular and the direct decision
    /// was used instead.
    pub fell_back: bool,
}

impl<F: Field> HullMembership<F> {
    pub fn singular(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&j| self.weights[j].is_none()).collect()
    }

    pub fn to_feasibility(&self) -> FeasibilityResult<F> {
        let certificate = match self.facets.first() {
            Some(&j) => Certificate::Hull {
                omitted: j,
                weights: self.weights[j].clone().expect("containing facet was solved"),
            },
            None => Certificate::OutsideHull,
        };
        FeasibilityResult {
            feasible: self.member,
            boundary: false,
            certificate,
        }
    }
}

pub fn hull_membership_of<F: ConfigScalar>(y: &YMatrix<F>, x: &[F]) -> HullMembership<F> {
    let n = y.n;
    let tol = if F::EXACT { 0.0 } else { FLOAT_TOL };
    let mut facets = Vec::new();
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let c: Vec<Vec<F>> = (0..n - 1)
            .map(|i| (0..n).filter(|&k| k != j).map(|k| y.projected[k][i].clone()).collect())
            .collect();
        let w = linalg::solve(&c, x);
        if let Some(w) = &w {
            if w.iter().all(|v| v.signum_tol(tol) > 0) {
                facets.push(j);
            }
        }
        weights.push(w);
    }
    HullMembership {
        member: !facets.is_empty(),
        facets,
        weights,
        fell_back: false,
    }
}

/// Convex-hull criterion at the gap vector `x` (rescaled to sum to one).
/// If every facet system is singular the direct decision is used.
pub fn hull_membership<F: ConfigScalar>(x: &[BigRational], alpha: &BigRational) -> Result<HullMembership<F>, InverseError> {
    let cfg = simplex_config(x, alpha)?;
    let y = YMatrix::from_q(&cfg.q_matrix_in::<F>()?);
    let xs: Vec<F> = cfg.normalized().gap_coords().x.iter().map(F::from_rational).collect();
    let mut h = hull_membership_of(&y, &xs);
    if h.weights.iter().all(Option::is_none) {
        h.member = solve_positive_direct::<F>(&cfg)?.feasible;
        h.fell_back = true;
    }
    Ok(h)
}

/// Gap indices `j` (0-based, interior range `1..=n-3`) with `2 x_j` larger
/// than the span; any such index rules out positive masses.
pub fn exclusion_indices(x: &[BigRational]) -> Vec<usize> {
    let n = x.len() + 1;
    if n < 4 {
        return Vec::new();
    }
    let sum: BigRational = x.iter().sum();
    (1..=n - 3)
        .filter(|&j| &x[j] + &x[j] > sum)
        .collect()
}

pub fn quick_exclusion(x: &[BigRational]) -> bool {
    !exclusion_indices(x).is_empty()
}

pub fn quick_exclusion_config(cfg: &CollinearConfig) -> bool {
    quick_exclusion(&cfg.gap_coords().x)
}

/// One grid point of a region scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub x: Vec<BigRational>,
    pub member: bool,
    pub excluded: bool,
    pub facets: Vec<usize>,
    pub feasible_direct: Option<bool>,
    pub c_lo: Option<f64>,
    pub c_hi: Option<f64>,
}

/// Interior grid of the simplex: `x_k = (i_k + 1/(n-1)) / r` with
/// `i_k >= 0` and `sum i_k = r - 1`, in lexicographic order of `i`.
pub fn simplex_grid(n: usize, r: usize) -> Vec<Vec<BigRational>> {
    let dim = n - 1;
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    fn rec(k: usize, left: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k + 1 == idx.len() {
            idx[k] = left;
            out.push(idx.clone());
            return;
        }
        for v in 0..=left {
            idx[k] = v;
            rec(k + 1, left - v, idx, out);
        }
    }
    let mut raw = Vec::new();
    rec(0, r - 1, &mut idx, &mut raw);
    let den = BigInt::from(r * dim);
    for i in raw {
        out.push(
            i.iter()
                .map(|&v| BigRational::new(BigInt::from(v * dim + 1), den.clone()))
                .collect(),
        );
    }
    out
}

/// Float scan of the simplex for `n = 4` or `5`: hull membership, containing
/// facets, the exclusion flag and the direct verdict at every grid point.
/// Rows come back in grid order whatever the worker count.
pub fn scan_region(n: usize, alpha: &BigRational, resolution: usize) -> Result<Vec<ScanRow>, InverseError> {
    if n != 4 && n != 5 {
        return Err(InverseError::UnsupportedOrder(n));
    }
    if resolution < 2 {
        return Err(InverseError::BadResolution(resolution));
    }
    simplex_grid(n, resolution)
        .into_par_iter()
        .map(|x| scan_point(&x, alpha))
        .collect()
}

fn scan_point(x: &[BigRational], alpha: &BigRational) -> Result<ScanRow, InverseError> {
    let cfg = simplex_config(x, alpha)?;
    let hull = hull_membership::<f64>(x, alpha)?;
    let direct = solve_positive_direct::<f64>(&cfg)?;
    let (c_lo, c_hi) = match &direct.certificate {
        Certificate::Interval {
            parity: Parity::Even,
            interval,
            ..
        } => (
            Some(interval.lo.unwrap_or(f64::NEG_INFINITY)),
            Some(interval.hi.unwrap_or(f64::INFINITY)),
        ),
        _ => (None, None),
    };
    Ok(ScanRow {
        x: x.to_vec(),
        member: hull.member,
        excluded: quick_exclusion(x),
        facets: hull.facets,
        feasible_direct: Some(direct.feasible),
        c_lo,
        c_hi,
    })
}

/// `x1,...,x{n-1},member,excluded,facets,feasible_direct,c_lo,c_hi`.
/// Facets are 1-based omitted columns joined by `;` (`none` if empty).
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let dim = rows.first().map_or(0, |r| r.x.len());
    let mut head: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    head.extend(
        ["member", "excluded", "facets", "feasible_direct", "c_lo", "c_hi"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&head).expect("in-memory csv");
    let opt = |v: Option<f64>| v.map_or(String::new(), format_f64);
    for r in rows {
        let mut rec: Vec<String> = r.x.iter().map(|v| format_f64(crate::ring::rational_to_f64(v))).collect();
        let facets = if r.facets.is_empty() {
            "none".to_string()
        } else {
            r.facets.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(";")
        };
        rec.extend([
            r.member.to_string(),
            r.excluded.to_string(),
            facets,
            r.feasible_direct.map_or(String::new(), |b| b.to_string()),
            opt(r.c_lo),
            opt(r.c_hi),
        ]);
        w.write_record(&rec).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// 17 significant digits, `inf` / `-inf` for unbounded ends.
pub fn format_f64(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.16e}")
}

/// Static picture of an `n = 4` scan in the `(x1, x2)` plane: members dark,
/// excluded points red, the rest light.
pub fn scan_svg(rows: &[ScanRow], resolution: usize) -> String {
    let size = 400.0;
    let cell = size / resolution as f64;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    )
    .unwrap();
    for r in rows {
        let x1 = crate::ring::rational_to_f64(&r.x[0]);
        let x2 = crate::ring::rational_to_f64(&r.x[1]);
        let color = if r.member {
            "#1f3b73"
        } else if r.excluded {
            "#c0392b"
        } else {
            "#d9d9d9"
        };
        writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{color}"/>"#,
            x1 * size - cell / 2.0,
            size - x2 * size - cell / 2.0,
            cell,
            cell
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Orthogonal projection onto `sum v_i = 0`.
pub fn project_centered<F: Field>(v: &[F]) -> Vec<F> {
    let zero = v[0].zero_like();
    let sum = v.iter().fold(zero, |a, b| a.add(b));
    let mean = sum.div(&F::from_ratio(v.len() as i64, 1));
    v.iter().map(|x| x.sub(&mean)).collect()
}

/// Centre of mass `sum m_i q_i / sum m_i`.
pub fn center_of_mass(cfg: &CollinearConfig, m: &[BigRational]) -> BigRational {
    let total: BigRational = m.iter().sum();
    let moment: BigRational = m.iter().zip(cfg.positions()).map(|(a, b)| a * b).sum();
    if total.is_zero() {
        return BigRational::zero();
    }
    moment / total
}

/// Barycentric coordinates of `y` (in `X_1`, three gap coordinates) in
/// the frame `(1,0,0), (1/2,1/2,0), (1/2,0,1/2)`, for any positive
/// multiple of such a point.
pub fn frame_coordinates<F: Field>(y: &[F]) -> [F; 3] {
    let two = F::from_ratio(2, 1);
    [
        y[0].sub(&y[1]).sub(&y[2]),
        y[1].mul(&two),
        y[2].mul(&two),
    ]
}

/// The four inequalities printed for the `n = 4` case with `x1 > 1/2`, in
/// print order. See the tests for how they fare.
pub fn printed_inequalities(x: &[f64; 3], alpha: f64) -> [bool; 4] {
    let p = |v: f64, e: f64| v.powf(-e);
    let a1 = alpha + 1.0;
    [
        p(x[0] + x[1], a1) < p(x[0], alpha),
        p(x[1] + x[2], a1) < p(x[2], alpha),
        p(x[1] + x[2], a1) > 1.0,
        p(x[0], a1) - p(1.0 - x[0], a1) < 0.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::parse_rational;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn cfg(q: &str, alpha: &str) -> CollinearConfig {
        CollinearConfig::parse(q, alpha).unwrap()
    }

    #[test]
    fn two_body_family() {
        let c = cfg("1/2,-1/2", "1");
        let sol = solve_real_masses::<BigRational>(&c).unwrap();
        assert_eq!(sol.parity, Parity::Even);
        // m(c) = (1/2 + c, 1/2 - c)
        assert_eq!(sol.masses_at(&r("0")), vec![r("1/2"), r("1/2")]);
        assert_eq!(sol.masses_at(&r("1/4")), vec![r("3/4"), r("1/4")]);
        let res = solve_positive_direct::<BigRational>(&c).unwrap();
        assert!(res.feasible);
        match res.certificate {
            Certificate::Interval { interval, witness, .. } => {
                assert_eq!(interval.lo, Some(r("-1/2")));
                assert_eq!(interval.hi, Some(r("1/2")));
                let (m, cc) = witness.unwrap();
                assert!(residual(&c, &m, &cc).unwrap().iter().all(|v| v.is_zero()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn four_equal_gaps_solve_exactly() {
        let c = cfg("3,2,1,0", "1");
        let sol = solve_real_masses::<BigRational>(&c).unwrap();
        for s in ["0", "7/3", "-5"] {
            let s = r(s);
            let res = residual(&c, &sol.masses_at(&s), &sol.c_at(&s)).unwrap();
            assert!(res.iter().all(|v| v.is_zero()));
        }
    }

    #[test]
    fn odd_family_spans_kernel() {
        for q in ["3,2,1", "5,4,2,1,0", "2,1.5,0.25"] {
            let c = cfg(q, "1");
            let sol = solve_real_masses::<BigRational>(&c).unwrap();
            assert_eq!(sol.parity, Parity::Odd);
            assert!(sol.base.last().unwrap().is_zero());
            let qd = c.q_matrix_in::<BigRational>().unwrap().to_dense();
            assert!(linalg::mat_vec(&qd, &sol.dir).iter().all(|v| v.is_zero()));
            for s in ["0", "3/2", "-4"] {
                let s = r(s);
                let res = residual(&c, &sol.masses_at(&s), &sol.c_at(&s)).unwrap();
                assert!(res.iter().all(|v| v.is_zero()));
            }
        }
    }

    #[test]
    fn three_bodies_are_always_feasible() {
        for q in ["3,2,1", "1,0.999,0", "10,1,0"] {
            for a in ["1", "2"] {
                let c = cfg(q, a);
                assert!(solve_positive_direct::<BigRational>(&c).unwrap().feasible);
                let x = c.gap_coords().x;
                let h = hull_membership::<BigRational>(&x, c.alpha()).unwrap();
                assert!(h.member);
                // Y_2 is the omitted column: x in CH[Y_1, Y_3].
                assert!(h.facets.contains(&1));
            }
        }
    }

    #[test]
    fn middle_gap_over_half_is_infeasible() {
        let c = cfg("1,0.8,0.2,0", "1");
        assert!(quick_exclusion_config(&c));
        let res = solve_positive_direct::<BigRational>(&c).unwrap();
        assert!(!res.feasible);
        let x = [r("0.2"), r("0.6"), r("0.2")];
        assert!(!hull_membership::<BigRational>(&x, &r("1")).unwrap().member);
        assert!(!hull_membership::<f64>(&x, &r("1")).unwrap().member);
    }

    #[test]
    fn first_gap_over_half_is_member() {
        let x = [r("0.6"), r("0.2"), r("0.2")];
        assert!(!quick_exclusion(&x));
        let h = hull_membership::<BigRational>(&x, &r("1")).unwrap();
        assert!(h.member);
        // Y_3 omitted: inside CH[Y_1, Y_2, Y_4].
        assert!(h.facets.contains(&2));
    }

    #[test]
    fn exclusion_examples() {
        assert!(quick_exclusion(&[r("0.1"), r("0.6"), r("0.1"), r("0.2")]));
        assert_eq!(exclusion_indices(&[r("0.1"), r("0.6"), r("0.1"), r("0.2")]), vec![1]);
        assert!(!quick_exclusion(&[r("0.6"), r("0.2"), r("0.2")]));
        assert!(!quick_exclusion(&[r("0.9"), r("0.1")]));
    }

    #[test]
    fn three_body_y_matrix() {
        // Columns: (x1^-2, 1 - x1^-2), (x1^-2, x2^-2), (1 - x2^-2, x2^-2)
        // at x = (1/4, 3/4), alpha = 1.
        let y = y_vectors::<BigRational>(&[r("1/4"), r("3/4")], &r("1")).unwrap();
        let a = r("16");
        let b = r("16/9");
        let one = r("1");
        assert_eq!(
            y.rows(),
            vec![
                vec![a.clone(), a.clone(), &one - &b],
                vec![&one - &a, b.clone(), b.clone()]
            ]
        );
        assert_eq!(y.projected[1], vec![&a / (&a + &b), &b / (&a + &b)]);
        for k in 0..3 {
            let s: BigRational = y.columns[k].iter().sum();
            assert_eq!(s, y.column_sums[k]);
            let p: BigRational = y.projected[k].iter().sum();
            assert_eq!(p, one);
        }
    }

    #[test]
    fn grid_shape() {
        let g = simplex_grid(4, 2);
        assert_eq!(g.len(), 3);
        for p in &g {
            assert_eq!(p.iter().sum::<BigRational>(), r("1"));
            assert!(p.iter().all(|v| v.is_positive()));
        }
        assert_eq!(simplex_grid(4, 200).len(), 20100);
    }

    #[test]
    fn minimal_scan_csv_is_populated() {
        let rows = scan_region(4, &r("1"), 2).unwrap();
        let csv = scan_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,x3,member,excluded,facets,feasible_direct,c_lo,c_hi");
        for line in lines {
            assert!(line.split(',').all(|f| !f.is_empty()), "{line}");
        }
        assert!(matches!(scan_region(6, &r("1"), 5), Err(InverseError::UnsupportedOrder(6))));
    }

    #[test]
    fn boundary_is_flagged() {
        let sol = RealMassSolution {
            parity: Parity::Even,
            base: vec![r("0"), r("1")],
            dir: vec![r("1"), r("0")],
            c_base: r("0"),
            c_dir: r("1"),
        };
        let (iv, ok) = positivity_interval(&sol, &r("0"), true);
        assert!(ok);
        assert_eq!(iv.lo, Some(r("0")));
        let stuck = RealMassSolution {
            base: vec![r("0"), r("1")],
            dir: vec![r("0"), r("1")],
            ..sol
        };
        assert!(!positivity_interval(&stuck, &r("0"), true).1);
        assert!(positivity_interval(&stuck, &r("0"), false).1);
    }
}
