//! Positivity certificates: the pfaffians of the polynomial matrices `P`
//! and `P̃` (alpha = 1, gap variables) expanded to explicit polynomials.
//!
//! If every coefficient is non-negative, the pfaffian is positive at every
//! positive gap vector, which makes `Pf Q` positive for every ordered
//! configuration of that size.
//!
//! The work is a sum over the `(n - 1)!!` perfect matchings. Matchings are
//! numbered by expansion along the last index (see the kernel), split into
//! contiguous chunks, expanded independently and merged in a fixed binary
//! tree, so the output does not depend on the number of workers.

mod kernel;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configuration::PairForms;
use crate::pfaffian::tree_reduce;
use crate::polynomial::{PolyStats, SparsePoly};
use kernel::{from_sparse, matchings_of, merge_add, to_sparse, Expander, KernelError, Terms};

/// Which polynomial matrix to expand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    P,
    PTilde,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::P => "p",
            Variant::PTilde => "ptilde",
        }
    }

    pub fn forms(self, n: usize) -> PairForms {
        match self {
            Variant::P => PairForms::p(n),
            Variant::PTilde => PairForms::p_tilde(n),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = PositivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(Variant::P),
            "ptilde" | "p~" | "p_tilde" => Ok(Variant::PTilde),
            _ => Err(PositivityError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PositivityError {
    #[error("n must be even with 4 <= n <= 10, got {0}")]
    OutOfRange(usize),
    #[error("unknown variant {0:?} (expected p or ptilde)")]
    UnknownVariant(String),
    #[error("memory budget of {budget_bytes} bytes exceeded (needed about {needed_bytes}); {processed} of {total} matchings done")]
    BudgetExceeded {
        budget_bytes: u64,
        needed_bytes: u64,
        processed: u64,
        total: u64,
    },
    #[error("stopped after {chunks_done} chunks; {processed} of {total} matchings done")]
    Interrupted {
        chunks_done: usize,
        processed: u64,
        total: u64,
    },
    #[error("checkpoint directory holds a different run: {0}")]
    CheckpointMismatch(String),
    #[error("bad checkpoint {path}: {msg}")]
    BadCheckpoint { path: PathBuf, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("positivity not established: {0}")]
    NotPositive(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PositivityError + '_ {
    move |source| PositivityError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Progress {
    pub processed: u64,
    pub total: u64,
    pub percent: u32,
}

pub type ProgressFn = Arc<dyn Fn(Progress) + Send + Sync>;

/// Knobs for [`verify_positivity_with`]. The default is a full in-memory
/// run on the current rayon pool.
#[derive(Clone, Default)]
pub struct VerifyOptions {
    /// Worker threads; `None` or 0 uses the global pool.
    pub workers: Option<usize>,
    /// Abort when a single term list would exceed this many bytes.
    pub memory_budget_bytes: Option<u64>,
    /// Matchings per chunk; defaults to one chunk per partner of the last
    /// index.
    pub chunk_matchings: Option<u64>,
    /// Finished chunks are written here and reused on the next run.
    pub checkpoint_dir: Option<PathBuf>,
    /// Stop with [`PositivityError::Interrupted`] after this many newly
    /// computed chunks (chunks are taken in index order).
    pub stop_after_chunks: Option<usize>,
    /// Only expand matchings `0..limit`. The result is a partial sum, not
    /// the pfaffian.
    pub matching_limit: Option<u64>,
    pub progress: Option<ProgressFn>,
}

impl fmt::Debug for VerifyOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VerifyOptions")
            .field("workers", &self.workers)
            .field("memory_budget_bytes", &self.memory_budget_bytes)
            .field("chunk_matchings", &self.chunk_matchings)
            .field("checkpoint_dir", &self.checkpoint_dir)
            .field("stop_after_chunks", &self.stop_after_chunks)
            .field("matching_limit", &self.matching_limit)
            .field("progress", &self.progress.is_some())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    pub n: usize,
    pub variant: Variant,
    pub stats: PolyStats,
    pub all_nonneg: bool,
    pub wall_time: f64,
    pub matchings_processed: u64,
}

impl PositivityReport {
    /// One JSON object: `{n, variant, nterms, min, max, degree, seconds}`.
    pub fn to_json_line(&self) -> String {
        let big = |v: &BigInt| -> serde_json::Value {
            serde_json::from_str(&v.to_string()).expect("integer literal is valid json")
        };
        #[derive(Serialize)]
        struct Line<'a> {
            n: usize,
            variant: &'a str,
            nterms: usize,
            min: serde_json::Value,
            max: serde_json::Value,
            degree: u32,
            seconds: f64,
        }
        let line = Line {
            n: self.n,
            variant: self.variant.name(),
            nterms: self.stats.n_terms,
            min: big(&self.stats.min_coeff),
            max: big(&self.stats.max_coeff),
            degree: self.stats.total_degree,
            seconds: self.wall_time,
        };
        serde_json::to_string(&line).expect("report serializes")
    }

    /// `25 terms, min 1, max 19, degree 8`
    pub fn summary(&self) -> String {
        format!(
            "{} terms, min {}, max {}, degree {}",
            self.stats.n_terms, self.stats.min_coeff, self.stats.max_coeff, self.stats.total_degree
        )
    }
}

/// A finished expansion: the polynomial and its report.
#[derive(Clone, Debug)]
pub struct Verification {
    pub report: PositivityReport,
    pub polynomial: SparsePoly,
}

/// What a positive certificate proves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PositivityClaim {
    pub n: usize,
    pub variant: Variant,
    pub statement: String,
}

pub fn check_order(n: usize) -> Result<(), PositivityError> {
    if !(4..=10).contains(&n) || n % 2 == 1 {
        return Err(PositivityError::OutOfRange(n));
    }
    Ok(())
}

pub fn verify_positivity(n: usize, variant: Variant, workers: usize) -> Result<Verification, PositivityError> {
    verify_positivity_with(
        n,
        variant,
        &VerifyOptions {
            workers: Some(workers),
            ..VerifyOptions::default()
        },
    )
}

pub fn verify_positivity_with(
    n: usize,
    variant: Variant,
    opts: &VerifyOptions,
) -> Result<Verification, PositivityError> {
    check_order(n)?;
    match opts.workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| PositivityError::Pool(e.to_string()))?
            .install(|| run(n, variant, opts)),
        _ => run(n, variant, opts),
    }
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct Manifest {
    n: usize,
    variant: Variant,
    chunk_matchings: u64,
    total_matchings: u64,
}

struct Plan {
    forms: PairForms,
    total: u64,
    chunk: u64,
}

impl Plan {
    fn range(&self, c: usize) -> (u64, u64) {
        let lo = c as u64 * self.chunk;
        (lo, (lo + self.chunk).min(self.total))
    }
}

fn chunk_path(dir: &Path, variant: Variant, n: usize, c: usize) -> PathBuf {
    dir.join(format!("pf_{}_{}_{}.part", variant.name(), n, c))
}

fn prepare_checkpoints(dir: &Path, manifest: &Manifest) -> Result<(), PositivityError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(format!("pf_{}_{}.manifest.json", manifest.variant.name(), manifest.n));
    if path.exists() {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let old: Manifest = serde_json::from_str(&text).map_err(|e| PositivityError::BadCheckpoint {
            path: path.clone(),
            msg: e.to_string(),
        })?;
        if &old != manifest {
            return Err(PositivityError::CheckpointMismatch(format!(
                "{} has {old:?}, this run wants {manifest:?}",
                path.display()
            )));
        }
        return Ok(());
    }
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_atomic(&path, &text)
}

fn write_atomic(path: &Path, text: &str) -> Result<(), PositivityError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn load_chunk(path: &Path) -> Result<Option<SparsePoly>, PositivityError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    SparsePoly::from_text(&text)
        .map(Some)
        .map_err(|e| PositivityError::BadCheckpoint {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
}

/// Chunk result in whichever coefficient width it fit.
enum Part {
    Small(Terms<i128>),
    Big(Terms<BigInt>),
}

impl Part {
    fn into_big(self) -> Terms<BigInt> {
        match self {
            Part::Small(t) => t.into_iter().map(|(k, c)| (k, BigInt::from(c))).collect(),
            Part::Big(t) => t,
        }
    }

    fn to_sparse(&self, nvars: usize) -> SparsePoly {
        match self {
            Part::Small(t) => to_sparse(nvars, t),
            Part::Big(t) => to_sparse(nvars, t),
        }
    }

    fn from_sparse(p: &SparsePoly) -> Part {
        match from_sparse::<i128>(p) {
            Some(t) => Part::Small(t),
            None => Part::Big(from_sparse(p).expect("big integers always fit")),
        }
    }
}

fn add_parts(a: Part, b: Part) -> Result<Part, KernelError> {
    if let (Part::Small(x), Part::Small(y)) = (&a, &b) {
        if let Ok(s) = merge_add(x.clone(), y.clone(), false) {
            return Ok(Part::Small(s));
        }
    }
    merge_add(a.into_big(), b.into_big(), false).map(Part::Big)
}

struct Tracker {
    leaves: AtomicU64,
    last_percent: Mutex<u32>,
    total: u64,
    callback: Option<ProgressFn>,
}

impl Tracker {
    fn report(&self, processed: u64) {
        let Some(cb) = &self.callback else { return };
        let percent = (processed.saturating_mul(100) / self.total.max(1)) as u32;
        let mut last = self.last_percent.lock().expect("progress lock");
        if percent > *last {
            *last = percent;
            cb(Progress {
                processed,
                total: self.total,
                percent,
            });
        }
    }
}

fn expand_chunk(plan: &Plan, budget: Option<u64>, tracker: &Tracker, c: usize) -> Result<Part, KernelError> {
    let (lo, hi) = plan.range(c);
    let subset: Vec<usize> = (0..plan.forms.n()).collect();
    let local = AtomicU64::new(0);
    let on_leaf = || {
        local.fetch_add(1, Ordering::Relaxed);
        let done = tracker.leaves.fetch_add(1, Ordering::Relaxed) + 1;
        tracker.report(done);
    };
    let exp = Expander {
        forms: &plan.forms,
        budget_bytes: budget,
        on_leaf: &on_leaf,
    };
    match exp.expand::<i128>(&subset, lo, hi) {
        Ok(t) => Ok(Part::Small(t)),
        Err(KernelError::Overflow) => {
            // Redo the chunk with big integers, without double counting.
            tracker
                .leaves
                .fetch_sub(local.swap(0, Ordering::Relaxed), Ordering::Relaxed);
            exp.expand::<BigInt>(&subset, lo, hi).map(Part::Big)
        }
        Err(e) => Err(e),
    }
}

fn run(n: usize, variant: Variant, opts: &VerifyOptions) -> Result<Verification, PositivityError> {
    let start = Instant::now();
    let forms = variant.forms(n);
    let nvars = forms.nvars();
    let full = matchings_of(n);
    let total = opts.matching_limit.map_or(full, |l| l.min(full));
    let chunk = opts
        .chunk_matchings
        .filter(|&c| c > 0)
        .unwrap_or(matchings_of(n - 2))
        .min(total.max(1));
    let chunks = total.div_ceil(chunk) as usize;
    let plan = Plan {
        forms,
        total,
        chunk,
    };
    if let Some(dir) = &opts.checkpoint_dir {
        prepare_checkpoints(
            dir,
            &Manifest {
                n,
                variant,
                chunk_matchings: chunk,
                total_matchings: total,
            },
        )?;
    }
    let tracker = Tracker {
        leaves: AtomicU64::new(0),
        last_percent: Mutex::new(0),
        total,
        callback: opts.progress.clone(),
    };

    // Reuse finished chunks, then decide which ones to compute now.
    let mut parts: Vec<Option<Part>> = (0..chunks).map(|_| None).collect();
    if let Some(dir) = &opts.checkpoint_dir {
        for (c, slot) in parts.iter_mut().enumerate() {
            if let Some(p) = load_chunk(&chunk_path(dir, variant, n, c))? {
                let (lo, hi) = plan.range(c);
                tracker.leaves.fetch_add(hi - lo, Ordering::Relaxed);
                *slot = Some(Part::from_sparse(&p));
            }
        }
        tracker.report(tracker.leaves.load(Ordering::Relaxed));
    }
    let mut todo: Vec<usize> = (0..chunks).filter(|&c| parts[c].is_none()).collect();
    let interrupted = match opts.stop_after_chunks {
        Some(k) if k < todo.len() => {
            todo.truncate(k);
            true
        }
        _ => false,
    };

    let budget = opts.memory_budget_bytes;
    let computed: Vec<(usize, Result<Part, PositivityError>)> = todo
        .par_iter()
        .map(|&c| {
            let r = expand_chunk(&plan, budget, &tracker, c).map_err(|e| match e {
                KernelError::Budget { needed_bytes } => PositivityError::BudgetExceeded {
                    budget_bytes: budget.unwrap_or(0),
                    needed_bytes,
                    processed: 0,
                    total,
                },
                KernelError::Overflow => unreachable!("big integer path cannot overflow"),
            });
            let r = r.and_then(|part| {
                if let Some(dir) = &opts.checkpoint_dir {
                    let path = chunk_path(dir, variant, n, c);
                    write_atomic(&path, &part.to_sparse(nvars).to_text())?;
                }
                Ok(part)
            });
            (c, r)
        })
        .collect();

    let mut failure = None;
    for (c, r) in computed {
        match r {
            Ok(p) => parts[c] = Some(p),
            Err(e) => failure = failure.or(Some(e)),
        }
    }
    let processed: u64 = (0..chunks)
        .filter(|&c| parts[c].is_some())
        .map(|c| {
            let (lo, hi) = plan.range(c);
            hi - lo
        })
        .sum();
    if let Some(mut e) = failure {
        if let PositivityError::BudgetExceeded { processed: p, .. } = &mut e {
            *p = processed;
        }
        return Err(e);
    }
    if interrupted {
        return Err(PositivityError::Interrupted {
            chunks_done: parts.iter().filter(|p| p.is_some()).count(),
            processed,
            total,
        });
    }

    let parts: Vec<Part> = parts.into_iter().map(|p| p.expect("every chunk done")).collect();
    let sum = tree_reduce(parts, |a, b| add_parts(a, b).expect("big integer merge cannot fail"))
        .unwrap_or(Part::Small(Vec::new()));
    let polynomial = sum.to_sparse(nvars);
    let stats = polynomial.stats();
    let report = PositivityReport {
        n,
        variant,
        all_nonneg: polynomial.is_nonneg(),
        stats,
        wall_time: start.elapsed().as_secs_f64(),
        matchings_processed: total,
    };
    Ok(Verification { report, polynomial })
}

/// Turns a certificate into the statement it proves.
///
/// `Pf P = (prod q_ij^2) Pf Q` in the gaps of the configuration, and for
/// `P̃` the same holds for the bordered crisscross matrix, whose pfaffian
/// is `Pf Q` divided by a positive product. A nonzero polynomial with
/// non-negative coefficients is positive on the positive orthant.
pub fn positivity_implies(report: &PositivityReport) -> Result<PositivityClaim, PositivityError> {
    if report.stats.n_terms == 0 {
        return Err(PositivityError::NotPositive("the polynomial is zero".into()));
    }
    if !report.all_nonneg {
        return Err(PositivityError::NotPositive(format!(
            "minimum coefficient is {}",
            report.stats.min_coeff
        )));
    }
    let n = report.n;
    let route = match report.variant {
        Variant::P => format!("Pf P has {} positive coefficients in the gaps x_1..x_{}", report.stats.n_terms, n - 1),
        Variant::PTilde => format!(
            "Pf P~ has {} positive coefficients in the crisscross gaps x~_1..x~_{}",
            report.stats.n_terms,
            n - 2
        ),
    };
    Ok(PositivityClaim {
        n,
        variant: report.variant,
        statement: format!("{route}, so Pf Q > 0 for every ordered configuration q_1 > ... > q_{n} with alpha = 1"),
    })
}

/// Writes `pf_{variant}_{n}.txt` (polynomial text format) and appends the
/// report line to `report.jsonl` in `dir`.
pub fn write_artifacts(dir: &Path, v: &Verification) -> Result<(PathBuf, PathBuf), PositivityError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let poly_path = dir.join(format!("pf_{}_{}.txt", v.report.variant.name(), v.report.n));
    write_atomic(&poly_path, &v.polynomial.to_text())?;
    let report_path = dir.join("report.jsonl");
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&report_path)
        .map_err(io_err(&report_path))?;
    writeln!(f, "{}", v.report.to_json_line()).map_err(io_err(&report_path))?;
    Ok((poly_path, report_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfaffian::pfaffian_matchings;

    #[test]
    fn small_cases_match_direct_pfaffian() {
        for variant in [Variant::P, Variant::PTilde] {
            let v = verify_positivity(4, variant, 1).unwrap();
            let direct = pfaffian_matchings(&variant.forms(4).to_matrix()).unwrap();
            assert_eq!(v.polynomial, direct);
            assert_eq!(v.report.matchings_processed, 3);
        }
    }

    #[test]
    fn p4_statistics() {
        let v = verify_positivity(4, Variant::P, 1).unwrap();
        assert_eq!(v.report.summary(), "25 terms, min 1, max 19, degree 8");
        assert!(v.report.all_nonneg);
        let line = v.report.to_json_line();
        assert!(line.starts_with(r#"{"n":4,"variant":"p","nterms":25,"min":1,"max":19,"degree":8,"seconds":"#));
    }

    #[test]
    fn ptilde4_is_the_quartic() {
        let v = verify_positivity(4, Variant::PTilde, 1).unwrap();
        assert_eq!(v.polynomial.to_string(), "x1^4 + 2*x1^3*x2 + x1^2*x2^2 + 2*x1*x2^3 + x2^4");
    }

    #[test]
    fn chunk_size_does_not_change_result() {
        let whole = verify_positivity(6, Variant::PTilde, 1).unwrap().polynomial;
        for chunk in [1, 4, 15] {
            let opts = VerifyOptions {
                chunk_matchings: Some(chunk),
                ..Default::default()
            };
            assert_eq!(verify_positivity_with(6, Variant::PTilde, &opts).unwrap().polynomial, whole);
        }
    }

    #[test]
    fn order_checks() {
        for n in [2, 5, 12] {
            assert!(matches!(verify_positivity(n, Variant::P, 1), Err(PositivityError::OutOfRange(_))));
        }
        assert_eq!("PTilde".parse::<Variant>().unwrap(), Variant::PTilde);
        assert!("q".parse::<Variant>().is_err());
    }

    #[test]
    fn budget_aborts_with_progress_count() {
        let opts = VerifyOptions {
            memory_budget_bytes: Some(2_000),
            chunk_matchings: Some(1),
            ..Default::default()
        };
        match verify_positivity_with(6, Variant::P, &opts) {
            Err(PositivityError::BudgetExceeded { processed, total, .. }) => {
                assert_eq!(total, 15);
                assert!(processed < total);
            }
            other => panic!("expected budget abort, got {other:?}"),
        }
    }

    #[test]
    fn claims() {
        let v = verify_positivity(4, Variant::P, 1).unwrap();
        let claim = positivity_implies(&v.report).unwrap();
        assert!(claim.statement.contains("Pf Q > 0"));
        let mut bad = v.report.clone();
        bad.all_nonneg = false;
        bad.stats.min_coeff = BigInt::from(-1);
        assert!(positivity_implies(&bad).is_err());
        let mut zero = v.report;
        zero.stats = SparsePoly::zero(3).stats();
        assert!(positivity_implies(&zero).is_err());
    }
}
