//! Command-line front end.
//!
//! Exit status: 0 success, 1 usage or I/O error, 2 solver did not converge,
//! 3 verification failed, 4 certificate file unreadable or inconsistent.

pub mod file;
pub mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::rates::{solve_rate_params, RateParams};
use crate::recursion::{derive_full, FullCertificate};
use crate::solver::{
    extrapolate_init, gauss_newton_from, resample, sweep_with, SolveError, SolveOptions, SolveReport, StartOrigin,
    SweepError, SweepSchedule,
};
use crate::verifier::{check_delta_certificate, oracle_check, oracle_scale};

pub use file::{certificate_name, CertificateFile, FileError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;
pub const EXIT_CORRUPT: i32 = 4;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PEPCERT_OUT_DIR";

/// Allowed disagreement between stored and recomputed derived values.
pub const CROSS_CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "pepcert", version, about = "Performance-estimation certificates for constant-stepsize gradient descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the balancing stepsize alpha(N) and rate r(N)
    Rates {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
    /// Solve for the certificate of one N and write it to a file
    Solve {
        #[arg(value_parser = clap::value_parser!(u64).range(3..))]
        n: u64,
        /// One or two converged certificates (smaller N) to start from
        #[arg(long, num_args = 1..=2, value_name = "FILE")]
        warm: Vec<PathBuf>,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        /// Output file (default: cert_NNNNN.txt in the output directory)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Continuation sweep from N = 3, one certificate file per N
    Sweep {
        #[arg(value_parser = clap::value_parser!(u64).range(3..))]
        n_max: u64,
        /// Switch to a coarser stride after this N
        #[arg(long, requires = "stride")]
        stride_from: Option<usize>,
        #[arg(long, requires = "stride_from", value_parser = clap::value_parser!(u64).range(1..))]
        stride: Option<u64>,
        /// Stride 1 to 2240, 320 to 8960, 1600 to 20160 (clipped at N_MAX)
        #[arg(long, conflicts_with = "stride_from")]
        full_scale: bool,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-derive and check certificates stored in files
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Also run the symbolic coefficient match
        #[arg(long)]
        oracle: bool,
        /// Largest accepted total positive residual
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        /// Oracle tolerance, multiplied by max(1, |c|^2 / r)
        #[arg(long, default_value_t = 1e-10)]
        oracle_tol: f64,
    },
    /// Write a, b, c, d rescaled to [0, 1] as two-column text files
    Plotdata {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Tabulate max(quadratic, Huber) performance over a stepsize grid
    Envelope {
        #[arg(value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// lo:hi:step
        #[arg(long, default_value = "0.1:1.99:0.001")]
        grid: String,
    },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Rates { n } => cmd_rates(n as usize),
        Command::Solve {
            n,
            warm,
            tol,
            max_iter,
            out,
            out_dir: dir,
        } => {
            let opts = SolveOptions { tol, max_iter };
            let path = out.unwrap_or_else(|| out_dir(dir).join(certificate_name(n as usize)));
            cmd_solve(n as usize, &warm, &opts, &path)
        }
        Command::Sweep {
            n_max,
            stride_from,
            stride,
            full_scale,
            tol,
            max_iter,
            out_dir: dir,
        } => {
            let n_max = n_max as usize;
            let schedule = if full_scale {
                SweepSchedule::full_scale(n_max)
            } else if let (Some(from), Some(stride)) = (stride_from, stride) {
                SweepSchedule::strided(n_max, from.max(3), stride as usize)
            } else {
                SweepSchedule::unit(n_max)
            };
            match schedule {
                Ok(schedule) => cmd_sweep(&schedule, &SolveOptions { tol, max_iter }, &out_dir(dir)),
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Command::Verify {
            files,
            oracle,
            tol,
            oracle_tol,
        } => {
            let opts = VerifyOptions {
                delta_tol: tol,
                oracle: oracle.then_some(oracle_tol),
            };
            cmd_verify(&files, &opts)
        }
        Command::Plotdata { files, out_dir: dir } => cmd_plotdata(&files, &out_dir(dir)),
        Command::Envelope { n, grid } => cmd_envelope(n as usize, &grid),
    }
}

fn cmd_rates(n: usize) -> i32 {
    match solve_rate_params(n) {
        Ok(p) => {
            println!("N {}", p.n);
            println!("alpha {:?}", p.alpha);
            println!("r {:?}", p.r);
            println!("balance_residual {:e}", p.balance_gap());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn print_report(report: &SolveReport) {
    println!("N {}", report.n());
    println!("alpha {:?}", report.params.alpha);
    println!("r {:?}", report.params.r);
    println!("start {:?}", report.origin);
    println!("iterations {}", report.iterations);
    println!("residual_sup {:e}", report.residual_sup);
    println!("delta {:e}", report.delta);
    println!("positive {}", report.positive);
    println!("converged {}", report.converged);
    if report.rank_deficient_steps > 0 {
        println!("rank_deficient_steps {}", report.rank_deficient_steps);
    }
}

fn solve_failure(stage: &str, e: &SolveError) -> i32 {
    eprintln!("error during {stage}: {e}");
    match e {
        SolveError::NonConvergence { report, .. } => {
            print_report(report);
            EXIT_NONCONVERGENCE
        }
        _ => EXIT_USAGE,
    }
}

fn write_certificate(report: &SolveReport, path: &Path) -> Result<(), FileError> {
    CertificateFile::from_certificate(&report.certificate()).write(path)
}

fn cmd_solve(n: usize, warm: &[PathBuf], opts: &SolveOptions, path: &Path) -> i32 {
    let params = match solve_rate_params(n) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut sources = Vec::new();
    for p in warm {
        match CertificateFile::read(p) {
            Ok(f) => sources.push(f),
            Err(e) => {
                eprintln!("error: reading warm start {}: {e}", p.display());
                return EXIT_CORRUPT;
            }
        }
    }
    sources.sort_by_key(|f| f.n);

    let result = match sources.as_slice() {
        [] => {
            // Continuation from N = 3 without persisting the intermediate sizes.
            let schedule = match SweepSchedule::unit(n) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            };
            match sweep_with(&schedule, opts, |_| Ok(())) {
                Ok(mut reports) => Ok(reports.pop().expect("schedule ends at n")),
                Err(SweepError::Solve { n: failed, source, .. }) => {
                    return solve_failure(&format!("continuation at N = {failed}"), &source)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
        }
        [one] => {
            let start = resample(&one.d, n - 1);
            gauss_newton_from(&params, &start, opts, StartOrigin::Resampled { from: one.n })
        }
        [first, second, ..] => extrapolate_init((first.n, &first.d), (second.n, &second.d), n).and_then(|start| {
            gauss_newton_from(
                &params,
                &start,
                opts,
                StartOrigin::Extrapolated {
                    from: (first.n, second.n),
                },
            )
        }),
    };

    match result {
        Ok(report) => {
            print_report(&report);
            if let Err(e) = write_certificate(&report, path) {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            println!("wrote {}", path.display());
            EXIT_OK
        }
        Err(e) => solve_failure("Gauss-Newton solve", &e),
    }
}

fn cmd_sweep(schedule: &SweepSchedule, opts: &SolveOptions, dir: &Path) -> i32 {
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("error: creating {}: {e}", dir.display());
        return EXIT_USAGE;
    }
    println!(
        "{:>6} {:>22} {:>24} {:>5} {:>12} {:>12}",
        "N", "alpha", "r", "iters", "residual_sup", "delta"
    );
    let result = sweep_with(schedule, opts, |report| {
        let path = dir.join(certificate_name(report.n()));
        write_certificate(report, &path).map_err(|e| std::io::Error::other(e.to_string()))?;
        println!(
            "{:>6} {:>22?} {:>24?} {:>5} {:>12.3e} {:>12.3e}",
            report.n(),
            report.params.alpha,
            report.params.r,
            report.iterations,
            report.residual_sup,
            report.delta
        );
        Ok(())
    });
    match result {
        Ok(reports) => {
            let worst_sup = reports.iter().map(|r| r.residual_sup).fold(0.0, f64::max);
            let worst_delta = reports.iter().map(|r| r.delta).fold(0.0, f64::max);
            let max_iter = reports.iter().map(|r| r.iterations).max().unwrap_or(0);
            println!(
                "summary: {} certificates in {}, max residual_sup {:e}, max delta {:e}, max iterations {}",
                reports.len(),
                dir.display(),
                worst_sup,
                worst_delta,
                max_iter
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{} certificates were written before the failure", e.completed().len());
            match e {
                SweepError::Solve {
                    source: SolveError::NonConvergence { .. },
                    ..
                } => EXIT_NONCONVERGENCE,
                _ => EXIT_USAGE,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub delta_tol: f64,
    /// Oracle tolerance when the symbolic check is requested.
    pub oracle: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            delta_tol: 1e-11,
            oracle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub params: RateParams,
    pub certificate: FullCertificate,
    pub positive: bool,
    pub delta: f64,
    pub bound: f64,
    pub oracle_deviation: Option<f64>,
    pub oracle_limit: Option<f64>,
    /// Disagreements between stored and recomputed values.
    pub mismatches: Vec<String>,
    pub failures: Vec<String>,
}

impl Verification {
    pub fn exit_code(&self) -> i32 {
        if !self.failures.is_empty() {
            EXIT_VERIFY_FAILED
        } else if !self.mismatches.is_empty() {
            EXIT_CORRUPT
        } else {
            EXIT_OK
        }
    }
}

fn compare(name: &str, stored: &[f64], derived: &[f64], out: &mut Vec<String>) {
    let worst = stored
        .iter()
        .zip(derived)
        .map(|(s, d)| (s - d).abs() / d.abs().max(1.0))
        .fold(0.0, f64::max);
    if worst > CROSS_CHECK_TOL || worst.is_nan() {
        out.push(format!("stored `{name}` differs from recomputed values by {worst:e}"));
    }
}

/// Re-derives everything from the stored `d` and the recomputed `(alpha, r)`.
pub fn verify_file(file: &CertificateFile, opts: &VerifyOptions) -> Result<Verification, String> {
    let params = solve_rate_params(file.n).map_err(|e| e.to_string())?;
    let certificate = derive_full(&params, &file.d).map_err(|e| e.to_string())?;
    let verdict = check_delta_certificate(&certificate);

    let mut mismatches = Vec::new();
    compare("alpha", &[file.alpha], &[params.alpha], &mut mismatches);
    compare("r", &[file.r], &[params.r], &mut mismatches);
    compare("delta", &[file.delta], &[verdict.delta], &mut mismatches);
    for (name, stored, derived) in [
        ("a", &file.a, &certificate.a),
        ("b", &file.b, &certificate.b),
        ("c", &file.c, &certificate.c),
        ("eps", &file.eps, &certificate.eps),
    ] {
        if let Some(stored) = stored {
            compare(name, stored, derived, &mut mismatches);
        }
    }

    let mut failures = Vec::new();
    if !verdict.is_cert {
        let which: Vec<&str> = [
            ("a", &certificate.a),
            ("b", &certificate.b),
            ("c", &certificate.c),
            ("d", &certificate.d),
        ]
        .iter()
        .filter(|(_, v)| v.iter().any(|&x| !(x > 0.0)))
        .map(|(name, _)| *name)
        .collect();
        failures.push(format!("positivity failure in {}", which.join(", ")));
    }
    if !(verdict.delta <= opts.delta_tol) {
        failures.push(format!("delta {:e} exceeds {:e}", verdict.delta, opts.delta_tol));
    }

    let (oracle_deviation, oracle_limit) = match opts.oracle {
        Some(tol) => {
            let dev = oracle_check(&certificate);
            let limit = tol * oracle_scale(&certificate);
            if !(dev <= limit) {
                failures.push(format!("oracle deviation {dev:e} exceeds {limit:e}"));
            }
            (Some(dev), Some(limit))
        }
        None => (None, None),
    };

    Ok(Verification {
        params,
        positive: verdict.is_cert,
        delta: verdict.delta,
        bound: verdict.bound,
        certificate,
        oracle_deviation,
        oracle_limit,
        mismatches,
        failures,
    })
}

fn cmd_verify(files: &[PathBuf], opts: &VerifyOptions) -> i32 {
    let mut worst = EXIT_OK;
    for path in files {
        println!("file {}", path.display());
        let code = match CertificateFile::read(path) {
            Err(e) => {
                println!("verdict CORRUPT ({e})");
                EXIT_CORRUPT
            }
            Ok(file) => match verify_file(&file, opts) {
                Err(e) => {
                    println!("verdict CORRUPT ({e})");
                    EXIT_CORRUPT
                }
                Ok(v) => {
                    println!("N {}", v.params.n);
                    println!("alpha {:?}", v.params.alpha);
                    println!("r {:?}", v.params.r);
                    println!("positive {}", v.positive);
                    println!("residual_sup {:e}", v.certificate.residual_sup());
                    println!("delta {:e} (limit {:e})", v.delta, opts.delta_tol);
                    println!("bound r + delta/2 = {:?}", v.bound);
                    if let (Some(dev), Some(limit)) = (v.oracle_deviation, v.oracle_limit) {
                        println!("oracle_deviation {dev:e} (limit {limit:e})");
                    }
                    for m in &v.mismatches {
                        println!("mismatch: {m}");
                    }
                    let code = v.exit_code();
                    match code {
                        EXIT_OK => println!("verdict VERIFIED"),
                        EXIT_CORRUPT => println!("verdict CORRUPT (stored values disagree with d)"),
                        _ => println!("verdict FAILED ({})", v.failures.join("; ")),
                    }
                    code
                }
            },
        };
        worst = worst.max(code);
    }
    worst
}

fn cmd_plotdata(files: &[PathBuf], dir: &Path) -> i32 {
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("error: creating {}: {e}", dir.display());
        return EXIT_USAGE;
    }
    for path in files {
        let file = match CertificateFile::read(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CORRUPT;
            }
        };
        let cert = match solve_rate_params(file.n)
            .map_err(|e| e.to_string())
            .and_then(|p| derive_full(&p, &file.d).map_err(|e| e.to_string()))
        {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_CORRUPT;
            }
        };
        match plot::write_plot_data(&cert, dir) {
            Ok(written) => {
                for p in written {
                    println!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        }
    }
    EXIT_OK
}

fn cmd_envelope(n: usize, grid: &str) -> i32 {
    let grid = match plot::Grid::parse(grid) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let rows = plot::envelope_rows(n, &grid.points());
    let best = plot::argmin(&rows);
    println!("{:>10} {:>14} {:>14} {:>14}", "alpha", "quadratic", "huber", "envelope");
    for (i, row) in rows.iter().enumerate() {
        let mark = if Some(i) == best { " *" } else { "" };
        println!(
            "{:>10.6} {:>14.6e} {:>14.6e} {:>14.6e}{mark}",
            row.alpha, row.quadratic, row.huber, row.envelope
        );
    }
    if let Some(i) = best {
        println!("minimum at alpha {:.6} with value {:?}", rows[i].alpha, rows[i].envelope);
    }
    if let Ok(p) = solve_rate_params(n) {
        println!("alpha(N) {:?} r(N) {:?}", p.alpha, p.r);
    }
    EXIT_OK
}
