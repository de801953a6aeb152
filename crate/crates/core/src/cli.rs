//! Command-line front end.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 parse or validation error,
//! 3 degenerate mathematics, 4 resource budget exceeded.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use crate::configuration::{parse_rational, CollinearConfig, ConfigError, ConfigScalar};
use crate::inverse::{self, format_f64, Certificate, FeasibilityResult, InverseError};
use crate::pfaffian::{border, pfaffian_recursive};
use crate::positivity::{self, PositivityError, Variant, VerifyOptions};

pub const WORKERS_ENV: &str = "COLLINEAR_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "collinear", version, about = "Pfaffians, positivity certificates and inverse problems for collinear configurations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    P,
    Ptilde,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::P => Variant::P,
            VariantArg::Ptilde => Variant::PTilde,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pf Q of a configuration (Pf border(Q) with --border, for odd n).
    Pfaffian {
        /// Strictly decreasing positions, comma separated (`3,2,1,0`, `1/2`, `0.25`).
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, default_value = "1")]
        alpha: String,
        /// Rational arithmetic (needs an integer alpha).
        #[arg(long)]
        exact: bool,
        /// Use the matrix bordered by a column of ones.
        #[arg(long)]
        border: bool,
    },
    /// Real and positive masses making the configuration central.
    Solve {
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, default_value = "1")]
        alpha: String,
        /// Force float arithmetic even for an integer alpha.
        #[arg(long)]
        float: bool,
    },
    /// Expand Pf P or Pf P~ and check its coefficients.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "p")]
        variant: VariantArg,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Abort once a term list would need more than this many MiB.
        #[arg(long)]
        memory_budget_mb: Option<u64>,
        /// Directory for the polynomial dump and report.jsonl.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Keep finished chunks here and resume from them.
        #[arg(long)]
        checkpoint_dir: Option<PathBuf>,
        /// Matchings per chunk.
        #[arg(long)]
        chunk: Option<u64>,
        /// Required for n = 10.
        #[arg(long)]
        opt_in_long: bool,
        /// Print progress to stderr every 1% of matchings.
        #[arg(long)]
        progress: bool,
    },
    /// Scan the simplex of gap vectors and write a CSV.
    Region {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long, default_value_t = 200)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also draw the n = 4 scan.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Half-gap exclusion test.
    Exclude {
        /// Positions; give either this or --x.
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        /// Consecutive gaps.
        #[arg(long)]
        x: Option<String>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Budget(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<InverseError> for CliError {
    fn from(e: InverseError) -> Self {
        match e {
            InverseError::Degenerate(_) => CliError::Degenerate(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<PositivityError> for CliError {
    fn from(e: PositivityError) -> Self {
        match e {
            PositivityError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            PositivityError::Io { .. } | PositivityError::BadCheckpoint { .. } | PositivityError::Pool(_) => {
                CliError::Io(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Parses arguments, runs, prints errors and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Pfaffian { q, alpha, exact, border } => cmd_pfaffian(&q, &alpha, exact, border, out),
        Command::Solve { q, alpha, float } => cmd_solve(&q, &alpha, float, out),
        Command::Verify {
            n,
            variant,
            workers,
            memory_budget_mb,
            out: dir,
            checkpoint_dir,
            chunk,
            opt_in_long,
            progress,
        } => {
            let opts = VerifyArgs {
                n,
                variant: variant.into(),
                workers,
                memory_budget_mb,
                dir,
                checkpoint_dir,
                chunk,
                opt_in_long,
                progress,
            };
            cmd_verify(&opts, out)
        }
        Command::Region {
            n,
            alpha,
            res,
            out: path,
            svg,
            workers,
        } => cmd_region(n, &alpha, res, &path, svg.as_deref(), workers, out),
        Command::Exclude { q, x } => cmd_exclude(q.as_deref(), x.as_deref(), out),
    }
}

fn w(out: &mut dyn Write, line: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", line.as_ref()).map_err(io)
}

trait Show {
    fn show(&self) -> String;
}

impl Show for BigRational {
    fn show(&self) -> String {
        self.to_string()
    }
}

impl Show for f64 {
    fn show(&self) -> String {
        format_f64(*self)
    }
}

fn join<F: Show>(v: &[F]) -> String {
    v.iter().map(Show::show).collect::<Vec<_>>().join(", ")
}

pub fn cmd_pfaffian(q: &str, alpha: &str, exact: bool, bordered: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = CollinearConfig::parse(q, alpha)?;
    let n = cfg.n();
    if bordered && n % 2 == 0 {
        return Err(CliError::Usage(format!("border(Q) has odd order {} for n = {n}", n + 1)));
    }
    if !bordered && n % 2 == 1 {
        return Err(CliError::Usage(format!("Pf Q is undefined for odd n = {n}; pass --border")));
    }
    fn pf<F: ConfigScalar + Show>(cfg: &CollinearConfig, bordered: bool) -> Result<String, CliError> {
        let q = cfg.q_matrix_in::<F>()?;
        let m = if bordered { border(&q, q.one()) } else { q };
        let v = pfaffian_recursive(&m).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(v.show())
    }
    let value = if exact {
        if !cfg.alpha_is_integer() {
            return Err(CliError::Usage(format!("--exact needs an integer alpha, got {alpha}")));
        }
        pf::<BigRational>(&cfg, bordered)?
    } else {
        pf::<f64>(&cfg, bordered)?
    };
    w(out, value)
}

fn print_feasibility<F: ConfigScalar + Show>(
    name: &str,
    res: &FeasibilityResult<F>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let verdict = if res.feasible { "feasible" } else { "infeasible" };
    let note = if res.boundary { " (boundary)" } else { "" };
    match &res.certificate {
        Certificate::Interval { interval, witness, .. } => {
            let lo = interval.lo.as_ref().map_or("-inf".to_string(), Show::show);
            let hi = interval.hi.as_ref().map_or("inf".to_string(), Show::show);
            w(out, format!("positive: {verdict}{note}"))?;
            w(out, format!("{name}-interval: ({lo}, {hi})"))?;
            if let Some((m, c)) = witness {
                w(out, format!("witness masses: {}", join(m)))?;
                w(out, format!("witness c: {}", c.show()))?;
            }
        }
        Certificate::Hull { omitted, weights } => {
            w(out, format!("hull: member, facet simplex omitting Y{}", omitted + 1))?;
            w(out, format!("hull weights: {}", join(weights)))?;
        }
        Certificate::OutsideHull => w(out, "hull: not a member")?,
        Certificate::Excluded { index } => w(out, format!("excluded: 2 x{} > span", index + 1))?,
    }
    Ok(())
}

fn solve_in<F: ConfigScalar + Show>(cfg: &CollinearConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sol = inverse::solve_real_masses::<F>(cfg)?;
    let p = sol.parameter_name();
    w(out, format!("n: {}", cfg.n()))?;
    match sol.parity {
        inverse::Parity::Even => {
            w(out, "family: m(c) = base + c * dir")?;
            w(out, format!("base: {}", join(&sol.base)))?;
            w(out, format!("dir: {}", join(&sol.dir)))?;
        }
        inverse::Parity::Odd => {
            w(out, format!("masses (m_n = 0): {}", join(&sol.base)))?;
            w(out, format!("c: {}", sol.c_base.show()))?;
            w(out, format!("kernel: {}", join(&sol.dir)))?;
            w(out, "family: m(t) = masses + t * kernel")?;
        }
    }
    let direct = inverse::solve_positive_direct::<F>(cfg)?;
    print_feasibility(p, &direct, out)?;
    let x = cfg.gap_coords().x;
    let ex = inverse::exclusion_indices(&x);
    if ex.is_empty() {
        w(out, "excluded: false")?;
    } else {
        let idx: Vec<String> = ex.iter().map(|j| format!("x{}", j + 1)).collect();
        w(out, format!("excluded: true ({})", idx.join(", ")))?;
    }
    let hull = inverse::hull_membership::<F>(&x, cfg.alpha())?;
    print_feasibility(p, &hull.to_feasibility(), out)
}

pub fn cmd_solve(q: &str, alpha: &str, float: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = CollinearConfig::parse(q, alpha)?;
    if cfg.alpha_is_integer() && !float {
        w(out, "mode: exact")?;
        solve_in::<BigRational>(&cfg, out)
    } else {
        w(out, "mode: float")?;
        solve_in::<f64>(&cfg, out)
    }
}

pub struct VerifyArgs {
    pub n: usize,
    pub variant: Variant,
    pub workers: Option<usize>,
    pub memory_budget_mb: Option<u64>,
    pub dir: PathBuf,
    pub checkpoint_dir: Option<PathBuf>,
    pub chunk: Option<u64>,
    pub opt_in_long: bool,
    pub progress: bool,
}

/// Rough sizes: the n = 10 P~ pfaffian has about 4.9e8 terms, 16 GB at 32
/// bytes per term before any intermediate.
pub const N10_WARNING: &str = "n = 10 expands 945 matchings into a polynomial of about 4.9e8 terms; \
expect well over 16 GB of RAM and days of CPU time. Re-run with --opt-in-long (and ideally \
--checkpoint-dir and --memory-budget-mb) to proceed.";

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    positivity::check_order(a.n)?;
    if a.n >= 10 && !a.opt_in_long {
        eprintln!("warning: {N10_WARNING}");
        return Err(CliError::Usage("refusing the n = 10 run without --opt-in-long".into()));
    }
    let progress: Option<positivity::ProgressFn> = a.progress.then(|| {
        Arc::new(|p: positivity::Progress| {
            eprintln!("progress: {}% ({}/{} matchings)", p.percent, p.processed, p.total);
        }) as positivity::ProgressFn
    });
    let opts = VerifyOptions {
        workers: a.workers,
        memory_budget_bytes: a.memory_budget_mb.map(|mb| mb.saturating_mul(1 << 20)),
        chunk_matchings: a.chunk,
        checkpoint_dir: a.checkpoint_dir.clone(),
        progress,
        ..VerifyOptions::default()
    };
    let v = positivity::verify_positivity_with(a.n, a.variant, &opts)?;
    let (poly, report) = positivity::write_artifacts(&a.dir, &v)?;
    w(out, v.report.summary())?;
    w(out, format!("nonnegative: {}", v.report.all_nonneg))?;
    w(out, format!("polynomial: {}", poly.display()))?;
    w(out, format!("report: {}", report.display()))?;
    w(out, v.report.to_json_line())
}

pub fn cmd_region(
    n: usize,
    alpha: &str,
    res: usize,
    path: &std::path::Path,
    svg: Option<&std::path::Path>,
    workers: Option<usize>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let alpha = parse_rational(alpha)?;
    let scan = || inverse::scan_region(n, &alpha, res);
    let rows = match workers.filter(|&k| k > 0) {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(scan)?,
        None => scan()?,
    };
    std::fs::write(path, inverse::scan_csv(&rows)).map_err(io)?;
    if let Some(svg) = svg {
        if n != 4 {
            return Err(CliError::Usage("--svg draws n = 4 scans only".into()));
        }
        std::fs::write(svg, inverse::scan_svg(&rows, res)).map_err(io)?;
    }
    let members = rows.iter().filter(|r| r.member).count();
    let excluded = rows.iter().filter(|r| r.excluded).count();
    w(out, format!("points: {}", rows.len()))?;
    w(out, format!("members: {members}"))?;
    w(out, format!("excluded: {excluded}"))?;
    w(out, format!("csv: {}", path.display()))
}

pub fn cmd_exclude(q: Option<&str>, x: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    let gaps = match (q, x) {
        (Some(q), None) => CollinearConfig::parse(q, "1")?.gap_coords().x,
        (None, Some(x)) => {
            let v = x
                .split(',')
                .map(|t| parse_rational(t.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            if v.iter().any(|g| g <= &BigRational::from_integer(0.into())) {
                return Err(CliError::Usage("gaps must be positive".into()));
            }
            v
        }
        _ => return Err(CliError::Usage("give exactly one of --q or --x".into())),
    };
    let idx = inverse::exclusion_indices(&gaps);
    w(out, format!("excluded: {}", !idx.is_empty()))?;
    if !idx.is_empty() {
        let names: Vec<String> = idx.iter().map(|j| format!("x{}", j + 1)).collect();
        w(out, format!("indices: {}", names.join(", ")))?;
    }
    Ok(())
}
