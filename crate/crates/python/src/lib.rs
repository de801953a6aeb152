//! Python bindings. Exact values come back as `fractions.Fraction`, float
//! values as `float`.

use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::exceptions::{PyMemoryError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use collinear_core::configuration::{parse_rational, CollinearConfig, ConfigScalar};
use collinear_core::inverse::{self, Certificate, FeasibilityResult};
use collinear_core::pfaffian::{border, pfaffian_recursive};
use collinear_core::positivity::{self, PositivityError, PositivityReport, Variant, VerifyOptions};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Accepts `str` (`"3/4"`, `"0.25"`), `int` or `float` (taken exactly).
fn to_rational(v: &Bound<'_, PyAny>) -> PyResult<BigRational> {
    if let Ok(s) = v.extract::<String>() {
        return parse_rational(&s).map_err(value_err);
    }
    if let Ok(i) = v.extract::<BigInt>() {
        return Ok(BigRational::from_integer(i));
    }
    let f: f64 = v.extract()?;
    BigRational::from_float(f).ok_or_else(|| value_err(format!("{f} is not finite")))
}

fn to_rationals(v: &Bound<'_, PyAny>) -> PyResult<Vec<BigRational>> {
    v.try_iter()?.map(|item| to_rational(&item?)).collect()
}

trait ToPy {
    fn to_py<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>>;
}

impl ToPy for BigRational {
    fn to_py<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let fraction = py.import("fractions")?.getattr("Fraction")?;
        fraction.call1((self.numer().clone(), self.denom().clone()))
    }
}

impl ToPy for f64 {
    fn to_py<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        Ok(self.into_pyobject(py)?.into_any())
    }
}

fn list<'py, F: ToPy>(py: Python<'py>, v: &[F]) -> PyResult<Bound<'py, PyList>> {
    let items = v.iter().map(|x| x.to_py(py)).collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, items)
}

fn opt<'py, F: ToPy>(py: Python<'py>, v: &Option<F>) -> PyResult<Bound<'py, PyAny>> {
    match v {
        Some(x) => x.to_py(py),
        None => Ok(py.None().into_bound(py)),
    }
}

/// A strictly decreasing collinear configuration with exponent `alpha`.
#[pyclass(name = "Configuration", module = "collinear", frozen)]
struct PyConfiguration {
    inner: CollinearConfig,
}

#[pymethods]
impl PyConfiguration {
    #[new]
    #[pyo3(signature = (q, alpha = None))]
    fn new(q: &Bound<'_, PyAny>, alpha: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let alpha = match alpha {
            Some(a) => to_rational(a)?,
            None => BigRational::from_integer(1.into()),
        };
        let inner = CollinearConfig::new(to_rationals(q)?, alpha).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Configuration with the given consecutive gaps.
    #[staticmethod]
    #[pyo3(signature = (x, alpha = None))]
    fn from_gaps(x: &Bound<'_, PyAny>, alpha: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let alpha = match alpha {
            Some(a) => to_rational(a)?,
            None => BigRational::from_integer(1.into()),
        };
        let inner = CollinearConfig::from_gaps(&to_rationals(x)?, alpha).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn positions<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        list(py, self.inner.positions())
    }

    #[getter]
    fn alpha<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        self.inner.alpha().to_py(py)
    }

    #[getter]
    fn gaps<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        list(py, &self.inner.gap_coords().x)
    }

    /// Rows of `Q`, exact when alpha is an integer unless `exact=False`.
    #[pyo3(signature = (exact = None))]
    fn q_matrix<'py>(&self, py: Python<'py>, exact: Option<bool>) -> PyResult<Bound<'py, PyList>> {
        fn rows<'py, F: ConfigScalar + ToPy>(cfg: &CollinearConfig, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
            let dense = cfg.q_matrix_in::<F>().map_err(value_err)?.to_dense();
            let rows = dense.iter().map(|r| list(py, r)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, rows)
        }
        if self.exact(exact)? {
            rows::<BigRational>(&self.inner, py)
        } else {
            rows::<f64>(&self.inner, py)
        }
    }

    /// `Pf Q` for even n, `Pf border(Q)` for odd n.
    #[pyo3(signature = (exact = None))]
    fn pfaffian<'py>(&self, py: Python<'py>, exact: Option<bool>) -> PyResult<Bound<'py, PyAny>> {
        fn pf<'py, F: ConfigScalar + ToPy>(cfg: &CollinearConfig, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
            let q = cfg.q_matrix_in::<F>().map_err(value_err)?;
            let m = if cfg.n().is_multiple_of(2) { q } else { border(&q, q.one()) };
            pfaffian_recursive(&m).map_err(value_err)?.to_py(py)
        }
        if self.exact(exact)? {
            pf::<BigRational>(&self.inner, py)
        } else {
            pf::<f64>(&self.inner, py)
        }
    }

    /// Real-mass family, positivity verdict, exclusion and hull test.
    #[pyo3(signature = (exact = None))]
    fn solve<'py>(&self, py: Python<'py>, exact: Option<bool>) -> PyResult<Bound<'py, PyDict>> {
        if self.exact(exact)? {
            solve_in::<BigRational>(&self.inner, py)
        } else {
            solve_in::<f64>(&self.inner, py)
        }
    }

    /// 0-based gap indices ruling out positive masses.
    fn exclusion_indices(&self) -> Vec<usize> {
        inverse::exclusion_indices(&self.inner.gap_coords().x)
    }

    fn __repr__(&self) -> String {
        let q: Vec<String> = self.inner.positions().iter().map(ToString::to_string).collect();
        format!("Configuration([{}], alpha={})", q.join(", "), self.inner.alpha())
    }
}

impl PyConfiguration {
    fn exact(&self, exact: Option<bool>) -> PyResult<bool> {
        let integer = self.inner.alpha_is_integer();
        match exact {
            Some(true) if !integer => Err(value_err("exact arithmetic needs an integer alpha")),
            Some(e) => Ok(e),
            None => Ok(integer),
        }
    }
}

fn feasibility<'py, F: ConfigScalar + ToPy>(py: Python<'py>, r: &FeasibilityResult<F>) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("feasible", r.feasible)?;
    d.set_item("boundary", r.boundary)?;
    match &r.certificate {
        Certificate::Interval { interval, witness, .. } => {
            d.set_item("interval", (opt(py, &interval.lo)?, opt(py, &interval.hi)?))?;
            match witness {
                Some((m, c)) => d.set_item("witness", (list(py, m)?, c.to_py(py)?))?,
                None => d.set_item("witness", py.None())?,
            }
        }
        Certificate::Hull { omitted, weights } => {
            d.set_item("omitted", omitted)?;
            d.set_item("weights", list(py, weights)?)?;
        }
        Certificate::OutsideHull => {}
        Certificate::Excluded { index } => d.set_item("excluded_index", index)?,
    }
    Ok(d)
}

fn solve_in<'py, F: ConfigScalar + ToPy>(cfg: &CollinearConfig, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let sol = inverse::solve_real_masses::<F>(cfg).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("parameter", sol.parameter_name())?;
    d.set_item("base", list(py, &sol.base)?)?;
    d.set_item("dir", list(py, &sol.dir)?)?;
    d.set_item("c_base", sol.c_base.to_py(py)?)?;
    d.set_item("c_dir", sol.c_dir.to_py(py)?)?;
    let direct = inverse::solve_positive_direct::<F>(cfg).map_err(value_err)?;
    d.set_item("positive", feasibility(py, &direct)?)?;
    let x = cfg.gap_coords().x;
    d.set_item("excluded", inverse::exclusion_indices(&x))?;
    let hull = inverse::hull_membership::<F>(&x, cfg.alpha()).map_err(value_err)?;
    d.set_item("hull_member", hull.member)?;
    d.set_item("hull_facets", hull.facets)?;
    Ok(d)
}

/// Statistics of an expanded `Pf P` or `Pf P~`.
#[pyclass(name = "PositivityReport", module = "collinear", frozen, get_all)]
struct PyPositivityReport {
    n: usize,
    variant: String,
    nterms: usize,
    min: BigInt,
    max: BigInt,
    degree: u32,
    all_nonneg: bool,
    seconds: f64,
    polynomial: String,
    /// The same fields as one JSON line.
    json: String,
}

#[pymethods]
impl PyPositivityReport {
    fn __repr__(&self) -> String {
        format!(
            "PositivityReport(n={}, variant={}, nterms={}, min={}, max={}, degree={})",
            self.n, self.variant, self.nterms, self.min, self.max, self.degree
        )
    }
}

impl PyPositivityReport {
    fn new(r: &PositivityReport, polynomial: String) -> Self {
        Self {
            n: r.n,
            variant: r.variant.name().to_string(),
            nterms: r.stats.n_terms,
            min: r.stats.min_coeff.clone(),
            max: r.stats.max_coeff.clone(),
            degree: r.stats.total_degree,
            all_nonneg: r.all_nonneg,
            seconds: r.wall_time,
            polynomial,
            json: r.to_json_line(),
        }
    }
}

/// Expands `Pf P` (`variant="p"`) or `Pf P~` (`"ptilde"`) for even n.
#[pyfunction]
#[pyo3(signature = (n, variant = "p", workers = 0, memory_budget_mb = None))]
fn verify(py: Python<'_>, n: usize, variant: &str, workers: usize, memory_budget_mb: Option<u64>) -> PyResult<PyPositivityReport> {
    let variant: Variant = variant.parse().map_err(value_err)?;
    let opts = VerifyOptions {
        workers: Some(workers),
        memory_budget_bytes: memory_budget_mb.map(|mb| mb << 20),
        ..VerifyOptions::default()
    };
    let v = py
        .detach(|| positivity::verify_positivity_with(n, variant, &opts))
        .map_err(|e| match e {
            PositivityError::BudgetExceeded { .. } => PyMemoryError::new_err(e.to_string()),
            e => value_err(e),
        })?;
    Ok(PyPositivityReport::new(&v.report, v.polynomial.to_string()))
}

/// Convex-hull test at the gap vector `x` (rescaled to sum to one).
#[pyfunction]
#[pyo3(signature = (x, alpha = None, exact = None))]
fn hull_membership<'py>(
    py: Python<'py>,
    x: &Bound<'py, PyAny>,
    alpha: Option<&Bound<'py, PyAny>>,
    exact: Option<bool>,
) -> PyResult<Bound<'py, PyDict>> {
    let x = to_rationals(x)?;
    let alpha = match alpha {
        Some(a) => to_rational(a)?,
        None => BigRational::from_integer(1.into()),
    };
    fn run<'py, F: ConfigScalar + ToPy>(py: Python<'py>, x: &[BigRational], alpha: &BigRational) -> PyResult<Bound<'py, PyDict>> {
        let h = inverse::hull_membership::<F>(x, alpha).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("member", h.member)?;
        d.set_item("facets", &h.facets)?;
        d.set_item("singular", h.singular())?;
        d.set_item("fell_back", h.fell_back)?;
        Ok(d)
    }
    if exact.unwrap_or(alpha.is_integer()) {
        if !alpha.is_integer() {
            return Err(value_err("exact arithmetic needs an integer alpha"));
        }
        run::<BigRational>(py, &x, &alpha)
    } else {
        run::<f64>(py, &x, &alpha)
    }
}

/// 0-based gap indices `j` with `2 x_j` above the span.
#[pyfunction]
fn exclusion_indices(x: &Bound<'_, PyAny>) -> PyResult<Vec<usize>> {
    Ok(inverse::exclusion_indices(&to_rationals(x)?))
}

#[pymodule]
fn collinear(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PyPositivityReport>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(hull_membership, m)?)?;
    m.add_function(wrap_pyfunction!(exclusion_indices, m)?)?;
    Ok(())
}
