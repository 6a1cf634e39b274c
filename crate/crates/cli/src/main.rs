//! `prodform` command line: reproducible checks of the Bessel product formulas.
//!
//! Exit status: 0 when the check passes, 2 when it fails, 1 on usage or
//! numerical errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use prodform::bessel::{spherical_bessel, tau_cdf, verify_scalar_product, ScalarMethod, TauDistribution};
use prodform::conditional::{bi_invariance_check, corner_gof, estimate_kernel, h3_singularity_probe};
use prodform::hypergeometric::{hyper0f1_series, hyper0f1_stiefel_mc, DEFAULT_K_MAX};
use prodform::linalg::{psd_sqrt, sqrt_of_symmetric};
use prodform::report::{write_canonical_json, EXACT_TOL, MC_TOL, QUADRATURE_TOL};
use prodform::verify::{run_verify_matrix_one, run_verify_matrix_two};
use prodform::{Error, OrthogonalMatrix, PsdMatrix, RandomStream, RealMatrix, SymmetricMatrix, VerificationReport};

/// Tolerance of the two-argument check.
const TWO_ARG_TOL: f64 = 2e-2;

/// L¹ tolerance of the scalar kernel histogram against the τ law.
const KERNEL_L1_TOL: f64 = 0.05;

/// Tolerance on the total mass of a kernel histogram.
const MASS_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "prodform", version, about = "Verify product formulas for Bessel functions of scalar and matrix argument")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Random seed.
    #[arg(long, global = true, env = "BESSEL_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the default tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scalar product formula j(xy) j(zy) = ∫ j(uy) τ(du).
    VerifyScalar {
        #[arg(long)]
        p: u32,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Quadrature)]
        method: MethodArg,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// One-argument matrix product formula.
    VerifyMatrixOne {
        #[arg(long)]
        p: usize,
        #[arg(long, allow_hyphen_values = true)]
        h1: String,
        #[arg(long, allow_hyphen_values = true)]
        h2: String,
        /// p x m matrix.
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Two-argument matrix product formula.
    VerifyMatrixTwo {
        #[arg(long)]
        p: usize,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        /// p x m matrix.
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(long, default_value_t = 64)]
        n_haar: usize,
        #[arg(long, default_value_t = 10_000)]
        n_inner: usize,
    },
    /// Chi-square fit of Haar corners against the corner density.
    CornerGof {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Cells per coordinate (default 50 for m = 1, 10 for m = 2).
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Averaged bi-invariance of the conditional law of H3.
    BiInvariance {
        #[arg(long)]
        p: usize,
        #[arg(long, allow_hyphen_values = true)]
        h1: String,
        #[arg(long, allow_hyphen_values = true)]
        h2: String,
        /// Orthogonal matrix O3 (default identity).
        #[arg(long, conflicts_with = "angle", allow_hyphen_values = true)]
        o3: Option<String>,
        /// Use the 2x2 rotation by this angle as O3.
        #[arg(long, allow_hyphen_values = true)]
        angle: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Eigenvalue histogram of the two-argument kernel.
    KernelHist {
        #[arg(long)]
        p: usize,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        bins: usize,
        /// Also write the histogram as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Singularity of the conditional law for p = m.
    SingularityProbe {
        #[arg(long, allow_hyphen_values = true)]
        h1: String,
        #[arg(long, allow_hyphen_values = true)]
        h2: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Evaluate 0F1(p/2; S) for a symmetric m x m matrix S.
    #[command(name = "eval-0f1")]
    Eval0f1 {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
        #[arg(long, value_enum, default_value_t = RouteArg::Series)]
        route: RouteArg,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
        /// Draws for the Monte Carlo route.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Evaluate the normalized spherical Bessel function j_nu(z).
    EvalBessel {
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Quadrature,
    Mc,
    Exact,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RouteArg {
    Series,
    Mc,
}

enum Outcome {
    Report(Box<VerificationReport>),
    Value(serde_json::Value),
}

fn parse_matrix(s: &str) -> prodform::Result<RealMatrix> {
    s.parse()
}

fn parse_psd(s: &str) -> prodform::Result<PsdMatrix> {
    PsdMatrix::new(SymmetricMatrix::new(parse_matrix(s)?)?)
}

fn run(cmd: Command, seed: u64, tol: Option<f64>) -> prodform::Result<(Outcome, Option<(PathBuf, String)>)> {
    let mut rs = RandomStream::new(seed);
    let report = match cmd {
        Command::VerifyScalar { p, x, z, y, method, n } => {
            let (method, default_tol) = match method {
                MethodArg::Quadrature => (ScalarMethod::Quadrature, QUADRATURE_TOL),
                MethodArg::Mc => (ScalarMethod::Mc, MC_TOL),
                MethodArg::Exact => (ScalarMethod::Exact, EXACT_TOL),
            };
            verify_scalar_product(p, x, z, y, method, n, tol.unwrap_or(default_tol), &mut rs)?
        }
        Command::VerifyMatrixOne { p, h1, h2, c, n } => {
            run_verify_matrix_one(p, &parse_psd(&h1)?, &parse_psd(&h2)?, &parse_matrix(&c)?, n, tol.unwrap_or(MC_TOL), &mut rs)?
        }
        Command::VerifyMatrixTwo { p, a, b, c, n_haar, n_inner } => run_verify_matrix_two(
            p,
            &parse_psd(&a)?,
            &parse_psd(&b)?,
            &parse_matrix(&c)?,
            n_haar,
            n_inner,
            tol.unwrap_or(TWO_ARG_TOL),
            &mut rs,
        )?,
        Command::CornerGof { p, m, n, bins } => {
            let bins = bins.unwrap_or(if m == 1 { 50 } else { 10 });
            corner_gof(p, m, n, bins, &mut rs)?
        }
        Command::BiInvariance { p, h1, h2, o3, angle, n } => {
            let h1 = parse_psd(&h1)?;
            let h2 = parse_psd(&h2)?;
            let o3 = match (o3, angle) {
                (Some(s), _) => OrthogonalMatrix::new(parse_matrix(&s)?)?,
                (None, Some(theta)) => OrthogonalMatrix::rotation2(theta),
                (None, None) => OrthogonalMatrix::identity(h1.dim()),
            };
            bi_invariance_check(&h1, &h2, p, &o3, n, &mut rs)?
        }
        Command::KernelHist { p, a, b, n, bins, csv } => {
            let a = parse_psd(&a)?;
            let b = parse_psd(&b)?;
            let hist = estimate_kernel(&a, &b, p, n, bins, &mut rs)?;
            let mut report = VerificationReport::new("kernel-hist", seed)
                .param("p", p)
                .param("a", a.as_matrix().as_slice())
                .param("b", b.as_matrix().as_slice())
                .param("bins", bins);
            report.detail("ties", hist.ties);
            report.detail("outside", hist.outside);
            report.detail("upper", hist.upper);
            report.detail("total_mass", hist.total_mass());
            if hist.ties > 0 {
                report.warn(format!("{} draws with repeated eigenvalues", hist.ties));
            }
            let report = if hist.m == 1 {
                // compare with the τ law of radii √A, √B
                let x = psd_sqrt(&a)?[(0, 0)];
                let z = psd_sqrt(&b)?[(0, 0)];
                let t = TauDistribution::new(p as u32, x, z)?;
                let w = hist.bin_width();
                let reference: Vec<f64> = (0..bins).map(|i| tau_cdf(&t, (i + 1) as f64 * w) - tau_cdf(&t, i as f64 * w)).collect();
                report.finish(hist.l1_distance_1d(&reference), 0.0, None, tol.unwrap_or(KERNEL_L1_TOL), Some(n))
            } else {
                report.finish(hist.total_mass(), 1.0, None, tol.unwrap_or(MASS_TOL), Some(n))
            };
            let csv = csv.map(|path| (path, hist.to_csv()));
            return Ok((Outcome::Report(Box::new(report)), csv));
        }
        Command::SingularityProbe { h1, h2, n } => h3_singularity_probe(&parse_psd(&h1)?, &parse_psd(&h2)?, &mut rs, n)?,
        Command::Eval0f1 { p, m, matrix, route, k_max, n } => {
            let s = SymmetricMatrix::new(parse_matrix(&matrix)?)?;
            if s.dim() != m {
                return Err(Error::Shape(format!("matrix is {0}x{0} but --m is {m}", s.dim())));
            }
            let a = 0.5 * p as f64;
            let value = match route {
                RouteArg::Series => {
                    let v = hyper0f1_series(a, &s, k_max)?;
                    serde_json::json!({
                        "route": "series", "p": p, "m": m, "value": v.value,
                        "degree": v.degree, "last_layer": v.last_layer, "warnings": v.warnings,
                    })
                }
                RouteArg::Mc => {
                    // S = -HCᵀCH with H = I and C = [√(-S); 0]
                    let root = sqrt_of_symmetric(&s.scale(-1.0))
                        .map_err(|_| Error::Domain("the Monte Carlo route needs a negative semi-definite matrix".into()))?;
                    if p < m {
                        return Err(Error::Shape(format!("need p >= m, got p={p}, m={m}")));
                    }
                    let mut c = RealMatrix::zeros(p, m);
                    for i in 0..m {
                        for j in 0..m {
                            c.set(i, j, root[(i, j)]);
                        }
                    }
                    let e = hyper0f1_stiefel_mc(p, &PsdMatrix::identity(m), &c, n, &mut rs)?;
                    serde_json::json!({
                        "route": "mc", "p": p, "m": m, "value": e.mean, "std_error": e.std_error,
                        "imaginary": e.mean_im, "std_error_im": e.std_error_im, "n": n, "seed": seed,
                    })
                }
            };
            return Ok((Outcome::Value(value), None));
        }
        Command::EvalBessel { nu, z } => {
            let v = spherical_bessel(nu, z)?;
            let value = serde_json::json!({ "nu": nu, "z": z, "value": v.value, "terms": v.terms, "warning": v.warning });
            return Ok((Outcome::Value(value), None));
        }
    };
    Ok((Outcome::Report(Box::new(report)), None))
}

fn emit(out: &Option<PathBuf>, outcome: &Outcome) -> std::io::Result<()> {
    let mut buf = Vec::new();
    match outcome {
        Outcome::Report(r) => write_canonical_json(&mut buf, r.as_ref()),
        Outcome::Value(v) => write_canonical_json(&mut buf, v),
    }
    .map_err(std::io::Error::other)?;
    buf.push(b'\n');
    match out {
        Some(path) => fs::write(path, buf),
        None => std::io::stdout().write_all(&buf),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let GlobalArgs { seed, out, threads, tol } = cli.global;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| run(cli.command, seed, tol));
    let (outcome, csv) = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some((path, text)) = csv {
        if let Err(e) = fs::write(&path, text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if let Err(e) = emit(&out, &outcome) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    match outcome {
        Outcome::Report(r) if !r.pass => {
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    }
}
