//! `distortion-lab`: analyse diagonal maps, sweep families, sample laminates
//! and run the invariant suite.

mod format;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use distortion_lab::lamination::{sample_laminate, LaminateSampleSet};
use distortion_lab::sweep::{linear_grid, log_grid, random_direction_sampling, sweep, Family, FamilySpec};
use distortion_lab::verify::{verify, VerifyReport};
use distortion_lab::{analyze, AnalysisBundle, DiagonalMap, Error, LaminateSequence, RunConfig};

use format::{g17, to_json};

const THREADS_ENV: &str = "DISTORTION_LAB_THREADS";

const SWEEP_HEADER: [&str; 11] = [
    "c", "a", "b", "t_minus", "t_plus", "h_minus", "h_plus", "h_lam", "jump_ratio", "gi_bound", "error",
];

#[derive(Parser, Debug)]
#[command(name = "distortion-lab", version, about = "Distortion of rank-one perturbations of diag(1, a, b)")]
struct Cli {
    /// Angle-grid resolution per axis for brute-force checks (minimum 64).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Seed for every random sample.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Write output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// JSON file with run settings; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Relative symmetry tolerance of the eigenvalue solver.
    #[arg(long, global = true, allow_hyphen_values = true)]
    sym_tol: Option<f64>,
    /// Relative singularity tolerance of the distortion computation.
    #[arg(long, global = true, allow_hyphen_values = true)]
    sing_tol: Option<f64>,
    /// Tolerance of finite-difference checks of the quadratic coefficient.
    #[arg(long, global = true, allow_hyphen_values = true)]
    fd_tol: Option<f64>,
    /// Print the tolerances in effect and what each one controls, then exit.
    #[arg(long, global = true)]
    explain: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full analysis of A = diag(1, a, b).
    Analyze {
        #[arg(allow_negative_numbers = true)]
        a: f64,
        #[arg(allow_negative_numbers = true)]
        b: f64,
    },
    /// Window analysis along a family diag(1, c, f(c)): csq, cpow:<p>, cshift:<delta>.
    Sweep {
        family: String,
        #[arg(allow_negative_numbers = true)]
        from: f64,
        #[arg(allow_negative_numbers = true)]
        to: f64,
        points: usize,
        /// Space the c values evenly instead of logarithmically.
        #[arg(long)]
        linear: bool,
    },
    /// Seeded samples of the laminate map T_nu on [-1, 1]^3.
    Laminate {
        #[arg(allow_negative_numbers = true)]
        a: f64,
        #[arg(allow_negative_numbers = true)]
        b: f64,
        nu: u64,
        samples: usize,
    },
    /// Random stationary directions compared against the optimal window.
    Probe {
        #[arg(allow_negative_numbers = true)]
        a: f64,
        #[arg(allow_negative_numbers = true)]
        b: f64,
        /// Number of directions (minimum 1000).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run the invariant suite; exits 1 if any group fails.
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::DegenerateSpectrum { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    let config = build_config(&cli)?;
    if cli.explain {
        emit(cli.out.as_deref(), explain(&config).as_bytes())?;
        return Ok(0);
    }
    let Some(command) = &cli.command else {
        return Err(Failure::usage(anyhow::anyhow!("no command given (try --help)")));
    };
    match command {
        Command::Analyze { a, b } => {
            let bundle = analyze(*a, *b)?;
            let bytes = match cli.format.unwrap_or(OutputFormat::Json) {
                OutputFormat::Json => to_json(&bundle).context("serializing analysis")?,
                OutputFormat::Csv => analysis_csv(&bundle)?,
            };
            emit(cli.out.as_deref(), &bytes)?;
            Ok(0)
        }
        Command::Sweep {
            family,
            from,
            to,
            points,
            linear,
        } => {
            let family: Family = family.parse()?;
            let grid = if *linear {
                linear_grid(*from, *to, *points)?
            } else {
                log_grid(*from, *to, *points)?
            };
            let spec = FamilySpec { family, grid };
            let rows = sweep_rows(&spec);
            let bytes = match cli.format.unwrap_or(OutputFormat::Csv) {
                OutputFormat::Csv => sweep_csv(&rows)?,
                OutputFormat::Json => to_json(&rows).context("serializing sweep")?,
            };
            emit(cli.out.as_deref(), &bytes)?;
            Ok(0)
        }
        Command::Laminate { a, b, nu, samples } => {
            let seq = LaminateSequence::new(DiagonalMap::new(*a, *b)?, *nu)?;
            let set = sample_laminate(&seq, *samples, config.seed)?;
            let bytes = match cli.format.unwrap_or(OutputFormat::Json) {
                OutputFormat::Json => to_json(&set).context("serializing laminate samples")?,
                OutputFormat::Csv => laminate_csv(&set)?,
            };
            emit(cli.out.as_deref(), &bytes)?;
            Ok(0)
        }
        Command::Probe { a, b, trials } => {
            let map = DiagonalMap::new(*a, *b)?;
            let trials = trials.unwrap_or(config.probe_trials);
            let report = random_direction_sampling(&map, trials, config.seed)?;
            if cli.format == Some(OutputFormat::Csv) {
                return Err(Failure::usage(anyhow::anyhow!("probe output is JSON only")));
            }
            emit(cli.out.as_deref(), &to_json(&report).context("serializing probe")?)?;
            Ok(0)
        }
        Command::Verify => {
            let report = verify(&config)?;
            let bytes = match cli.format {
                Some(OutputFormat::Json) => to_json(&report).context("serializing report")?,
                Some(OutputFormat::Csv) => verify_csv(&report)?,
                None => verify_text(&report).into_bytes(),
            };
            emit(cli.out.as_deref(), &bytes)?;
            Ok(if report.all_passed() { 0 } else { 1 })
        }
    }
}

/// Sizes the global worker pool from `DISTORTION_LAB_THREADS` when set.
fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(anyhow::anyhow!("{THREADS_ENV} must be a positive integer (got '{raw}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

fn build_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(Failure::usage)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))
                .map_err(Failure::usage)?
        }
        None => RunConfig::default(),
    };
    if let Some(n) = cli.grid_n {
        config.grid_n = n;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(t) = cli.sym_tol {
        config.sym_tol = t;
    }
    if let Some(t) = cli.sing_tol {
        config.sing_tol = t;
    }
    if let Some(t) = cli.fd_tol {
        config.fd_tol = t;
    }
    config
        .validate()
        .map_err(|e| Failure::usage(anyhow::anyhow!("config error: {e}")))?;
    Ok(config)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::from),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .context("writing to stdout")
                .map_err(Failure::from)
        }
    }
}

/// One sweep outcome as emitted: the record or the reason it is missing.
#[derive(Serialize)]
struct SweepRow {
    c: f64,
    a: f64,
    b: f64,
    #[serde(flatten)]
    record: Option<distortion_lab::SweepRecord>,
    error: Option<String>,
}

fn sweep_rows(spec: &FamilySpec) -> Vec<SweepRow> {
    spec.grid
        .iter()
        .zip(sweep(spec))
        .map(|(&c, outcome)| match outcome {
            Ok(record) => SweepRow {
                c,
                a: record.a,
                b: record.b,
                record: Some(record),
                error: None,
            },
            Err(e) => SweepRow {
                c,
                a: c,
                b: spec.family.b(c),
                record: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).context("writing csv")?;
    for row in rows {
        w.write_record(&row).context("writing csv")?;
    }
    Ok(w.into_inner().context("flushing csv")?)
}

fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, Failure> {
    csv_bytes(
        &SWEEP_HEADER,
        rows.iter().map(|row| {
            let mut cells = vec![g17(row.c), g17(row.a), g17(row.b)];
            match &row.record {
                Some(r) => cells.extend(
                    [r.t_minus, r.t_plus, r.h_minus, r.h_plus, r.h_lam, r.jump_ratio, r.gi_bound].map(g17),
                ),
                None => cells.extend(std::iter::repeat_n(String::new(), 7)),
            }
            cells.push(row.error.clone().unwrap_or_default());
            cells
        }),
    )
}

fn analysis_csv(r: &AnalysisBundle) -> Result<Vec<u8>, Failure> {
    let w = &r.window;
    csv_bytes(
        &[
            "a", "b", "H", "q", "t_minus", "t_plus", "h_minus", "h_plus", "h_lam", "jump_ratio",
        ],
        [[
            r.a,
            r.b,
            r.distortion.h,
            r.taylor.quadratic,
            w.t_minus,
            w.t_plus,
            w.h_minus,
            w.h_plus,
            r.h_lam,
            r.jump_ratio,
        ]
        .map(g17)
        .to_vec()],
    )
}

fn laminate_csv(set: &LaminateSampleSet) -> Result<Vec<u8>, Failure> {
    csv_bytes(
        &[
            "x1", "x2", "x3", "t1", "t2", "t3", "phase", "deviation", "jacobian_distortion",
        ],
        set.samples.iter().map(|s| {
            let mut cells: Vec<String> = s.x.iter().chain(s.t_x.iter()).map(|&v| g17(v)).collect();
            cells.push(g17(s.phase));
            cells.push(g17(s.deviation));
            cells.push(s.jacobian_distortion.map(g17).unwrap_or_default());
            cells
        }),
    )
}

fn verify_csv(report: &VerifyReport) -> Result<Vec<u8>, Failure> {
    csv_bytes(
        &["group", "passed", "checks", "failures", "worst", "tolerance"],
        report.groups.iter().map(|g| {
            vec![
                g.name.to_string(),
                g.passed.to_string(),
                g.checks.to_string(),
                g.failures.to_string(),
                g17(g.worst),
                g17(g.tolerance),
            ]
        }),
    )
}

fn verify_text(report: &VerifyReport) -> String {
    let mut s = String::new();
    for g in &report.groups {
        s.push_str(&format!(
            "{} {:<22} {:>7} checks {:>5} failures  worst {:.3e} (tol {:.1e})  {:.2}s\n",
            if g.passed { "PASS" } else { "FAIL" },
            g.name,
            g.checks,
            g.failures,
            g.worst,
            g.tolerance,
            g.seconds
        ));
    }
    let failed = report.groups.iter().filter(|g| !g.passed).count();
    s.push_str(&format!(
        "{} of {} groups passed\n",
        report.groups.len() - failed,
        report.groups.len()
    ));
    s
}

fn explain(config: &RunConfig) -> String {
    format!(
        "\
Settings in effect
  grid_n        {grid_n:<10} angle-grid resolution per axis of the brute-force minimum
  seed          {seed:<10} seed of every random sample (fixed seed => identical output)
  sym_tol       {sym:<10e} relative asymmetry allowed in eigenvalue inputs
  sing_tol      {sing:<10e} sigma_min/sigma_max below which a matrix counts as singular
  fd_tol        {fd:<10e} finite differences vs the analytic quadratic coefficient
  probe_trials  {trials:<10} random directions in the conjecture probe

Fixed tolerances of the invariant suite (verify)
  orthogonal_invariance  1e-10 relative   H(UMV) against H(M)
  eigen_vs_bisection     1e-10 relative   closed-form eigenvalues against bisection
  eigen_vs_svd           1e-9 relative    eigenvalues of M^T M against Jacobi singular values
  q_symmetry             exact swap; 1e-12 of the term magnitude under reflection
  qmin_vs_grid           {grid_tol} absolute (2e-4 at grid_n = 512, scaled by (512/grid_n)^2 below)
  stationarity_fd        first derivative <= 1e-6; quadratic coefficient within fd_tol
  window_crossings       1e-6 relative   closed-form t+- against numerical collisions
  window_interior        H < b inside the window; eigenvalue gap <= 1e-5 of the largest at t+-
  boundary / delta / remainder / laminate checks are sign or identity checks

Output
  floats are written with 17 significant digits (round-trip exact)
  {THREADS_ENV} limits the worker threads
",
        grid_n = config.grid_n,
        seed = config.seed,
        sym = config.sym_tol,
        sing = config.sing_tol,
        fd = config.fd_tol,
        trials = config.probe_trials,
        grid_tol = g17(config.grid_tolerance()),
    )
}
