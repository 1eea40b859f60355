//! `kazcert`: certify, verify and cross-check spectral gaps of group Laplacians.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kazcert::certify::{extract_factors, round_and_repair, verify_certificate, Certificate, CertifierConfig};
use kazcert::group::{parse_presentation, Presentation};
use kazcert::oracle::{cross_check, parse_user_module, FiniteGroup, FiniteModule, DEFAULT_BAR_CAP};
use kazcert::presets::{build_complex, preset_presentation};
use kazcert::rat;
use kazcert::resolution::ChainComplexData;
use kazcert::sdpa::{export_sdpa, import_sdpa};
use kazcert::solver::{import_solution, solve, GramSolution, SolverConfig};
use kazcert::sos::{encode, problem_ball, EncodeOptions, SosMode, SosProblem};
use kazcert::Error;

const EXIT_NO_CERTIFICATE: u8 = 1;
const EXIT_MISMATCH: u8 = 4;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "kazcert", version, about = "Exact sum-of-squares certificates for group Laplacians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode, solve, round and verify; writes certificate.txt, complex.txt and summary.txt.
    Certify(CertifyArgs),
    /// Check a certificate against a complex; exit 0 accepted, 2 identity, 3 positivity, 4 mismatch.
    Verify {
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        complex: PathBuf,
    },
    /// Compare Laplacian spectra with brute-force group (co)homology.
    Oracle(OracleArgs),
    /// Write the semidefinite program in SDPA sparse format.
    ExportSdpa {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Round an external solution of an exported problem into a certificate.
    Import(ImportArgs),
}

#[derive(Args)]
struct Source {
    /// trivial, cyclic:N, z, z2, s3 or free:K
    #[arg(long, conflicts_with = "presentation")]
    preset: Option<String>,
    /// Presentation file
    #[arg(long)]
    presentation: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ozawa,
    Bracket,
    Paren,
}

#[derive(Args)]
struct ProblemArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "ozawa")]
    mode: ModeArg,
    /// Degree k; 0 for ozawa, default 1 otherwise
    #[arg(long)]
    degree: Option<usize>,
    /// Half radius d of the support basis; defaults to the smallest admissible value
    #[arg(long)]
    radius: Option<usize>,
    /// Accept degrees the complex does not prove exact
    #[arg(long)]
    assert_resolution: bool,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-9)]
    solver_tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    source: Source,
    /// trivial, reg, reg0 or sign
    #[arg(long, default_value = "reg0")]
    module: String,
    /// Rational generator matrices, one block per generator, optional trailing `form` block
    #[arg(long)]
    module_file: Option<PathBuf>,
    /// Inclusive range `a..b` or comma-separated list
    #[arg(long, default_value = "0..2")]
    degrees: String,
    #[arg(long, default_value_t = DEFAULT_BAR_CAP)]
    cap: usize,
    /// Also write the report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ImportArgs {
    #[command(flatten)]
    source: Source,
    /// SDPA problem written by export-sdpa
    #[arg(long)]
    problem: PathBuf,
    /// Solution file: `epsilon x`, then the lower triangle of the Gram matrix
    #[arg(long)]
    solution: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::PsdFailedAfterRetries { .. } | Error::NotConverged(_) | Error::RepairSingular(_) => {
                EXIT_NO_CERTIFICATE
            }
            Error::FingerprintMismatch { .. } | Error::ConventionMismatch { .. } => EXIT_MISMATCH,
            Error::Parse { .. } | Error::DimensionMismatch(_) | Error::NotAComplex(_) => EXIT_DATA,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_IO, format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::new(EXIT_IO, format!("cannot write {}: {e}", path.display())))
}

impl Source {
    fn load(&self) -> CliResult<(String, Presentation)> {
        match (&self.preset, &self.presentation) {
            (Some(name), None) => Ok((name.clone(), preset_presentation(name)?)),
            (None, Some(path)) => Ok((path.display().to_string(), parse_presentation(&read(path)?)?)),
            _ => Err(Failure::new(EXIT_USAGE, "give exactly one of --preset and --presentation")),
        }
    }

    fn complex(&self, degree: usize) -> CliResult<(String, ChainComplexData)> {
        let (label, p) = self.load()?;
        Ok((label, build_complex(p, degree)?))
    }
}

impl ProblemArgs {
    fn mode(&self) -> CliResult<SosMode> {
        match (self.mode, self.degree) {
            (ModeArg::Ozawa, None | Some(0)) => Ok(SosMode::OzawaT),
            (ModeArg::Ozawa, Some(k)) => Err(Failure::new(EXIT_USAGE, format!("ozawa mode has degree 0, not {k}"))),
            (ModeArg::Bracket, k) => Ok(SosMode::BracketTn(k.unwrap_or(1))),
            (ModeArg::Paren, k) => Ok(SosMode::ParenTn(k.unwrap_or(1))),
        }
    }

    fn encode(&self) -> CliResult<(String, ChainComplexData, SosProblem)> {
        let mode = self.mode()?;
        let (label, c) = self.source.complex(mode.degree())?;
        let opts = EncodeOptions {
            half_radius: self.radius,
            assert_resolution: self.assert_resolution,
            eps_cap: None,
        };
        let p = encode(&c, mode, &opts)?;
        Ok((label, c, p))
    }
}

impl SolverArgs {
    fn config(&self) -> CliResult<SolverConfig> {
        let cfg = SolverConfig {
            max_iterations: self.max_iter,
            tolerance: self.solver_tol,
            seed: self.seed,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn header(&self, cert: &CertifierConfig) -> String {
        format!(
            "# solver-tol {:e}\n# max-iter {}\n# seed {}\n# rounding-bits {}\n# max-retries {}\n",
            self.solver_tol, self.max_iter, self.seed, cert.bits, cert.max_retries
        )
    }
}

/// Rounds, self-verifies and writes the artifacts of a certification run.
fn finish_certificate(
    label: &str,
    c: &ChainComplexData,
    p: &SosProblem,
    s: &GramSolution,
    solver: &SolverArgs,
    out: &Path,
    mut summary: String,
) -> CliResult<()> {
    let cfg = CertifierConfig::default();
    let start = Instant::now();
    let cert = match round_and_repair(s, p, c, &cfg) {
        Ok(cert) => cert,
        Err(e) => {
            let f = Failure::from(e);
            if f.code == EXIT_NO_CERTIFICATE {
                let _ = writeln!(summary, "result: no certificate at radius d = {}", p.half_radius());
                let _ = writeln!(summary, "reason: {}", f.message);
                write(&out.join("diagnostics.txt"), &summary)?;
                print!("{summary}");
                return Err(Failure::new(
                    EXIT_NO_CERTIFICATE,
                    format!("no certificate at radius d = {}", p.half_radius()),
                ));
            }
            return Err(f);
        }
    };
    let round_time = start.elapsed();
    let report = verify_certificate(&cert, c)?;
    if !report.accepted() {
        return Err(Failure::new(
            EXIT_NO_CERTIFICATE,
            format!(
                "internal error: rounded certificate rejected: {}",
                report.first_failure.unwrap_or_default()
            ),
        ));
    }
    let eps = rat::fmt(&cert.epsilon);
    let _ = writeln!(summary, "group: {label}");
    let _ = writeln!(summary, "certified: {}", cert.mode.identity_text(&eps));
    let _ = writeln!(summary, "epsilon: {eps} (≈ {:.12})", rat::to_f64(&cert.epsilon));
    let _ = writeln!(summary, "rounding: {:.3}s, verification: {:.3}s", round_time.as_secs_f64(), report.elapsed.as_secs_f64());
    write(&out.join("complex.txt"), &c.to_text())?;
    write(&out.join("certificate.txt"), &(solver.header(&cfg) + &cert.to_text()))?;
    write(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn problem_summary(label: &str, p: &SosProblem, c: &ChainComplexData) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "group: {label} ({} complex, ranks {:?})", c.origin().as_str(), c.ranks());
    let _ = writeln!(s, "mode: {} degree {}", p.mode.name(), p.degree());
    let _ = writeln!(
        s,
        "radii: half radius d = {}, product ball radius {}",
        p.half_radius(),
        2 * p.half_radius()
    );
    let _ = writeln!(s, "gram size N = {}, constraints {}", p.gram_size(), p.constraints.len());
    s
}

fn solve_summary(s: &GramSolution, secs: f64) -> String {
    format!(
        "solver: {:?} after {} iterations in {secs:.3}s, ε ≈ {:.12}, residual {:.3e}, PSD violation {:.3e}\n",
        s.status, s.iterations, s.epsilon, s.residuals.primal, s.residuals.psd_violation
    )
}

fn cmd_certify(a: &CertifyArgs) -> CliResult<()> {
    let (label, c, p) = a.problem.encode()?;
    let cfg = a.solver.config()?;
    let start = Instant::now();
    let s = solve(&p, &cfg);
    let mut summary = problem_summary(&label, &p, &c);
    summary += &solve_summary(&s, start.elapsed().as_secs_f64());
    finish_certificate(&label, &c, &p, &s, &a.solver, &a.out, summary)
}

fn cmd_verify(cert: &Path, complex: &Path) -> CliResult<u8> {
    let cert = Certificate::from_text(&read(cert)?)?;
    let c = ChainComplexData::from_text(&read(complex)?)?;
    let report = verify_certificate(&cert, &c)?;
    let eps = rat::fmt(&cert.epsilon);
    println!("instance: {}", cert.mode.identity_text(&eps));
    println!("gram size N = {}, half radius d = {}", cert.gram_size(), cert.basis.half_radius);
    if report.truncated {
        println!("note: degree {} lies beyond the proven part of the complex", cert.degree());
    }
    if report.accepted() {
        let ball = problem_ball(&c, cert.basis.half_radius)?;
        let factors = extract_factors(&cert, &ball)?;
        println!("identity: exact; Gram matrix: positive semidefinite, rank {}", factors.len());
        println!("accepted in {:.3}s", report.elapsed.as_secs_f64());
    } else {
        println!(
            "rejected: identity {}, positivity {}",
            if report.identity_ok { "ok" } else { "FAILED" },
            if report.psd_ok { "ok" } else { "FAILED" }
        );
        if let Some(w) = &report.first_failure {
            println!("first failure: {w}");
        }
    }
    Ok(report.exit_code() as u8)
}

fn parse_degrees(text: &str) -> CliResult<Vec<usize>> {
    let bad = || Failure::new(EXIT_USAGE, format!("bad degree list `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_oracle(a: &OracleArgs) -> CliResult<u8> {
    let degrees = parse_degrees(&a.degrees)?;
    let top = degrees.iter().copied().max().unwrap_or(0);
    let (label, c) = a.source.complex(top)?;
    let group = FiniteGroup::new(c.ball())?;
    let module = match &a.module_file {
        Some(path) => parse_user_module(&group, &path.display().to_string(), &read(path)?)?,
        None => FiniteModule::builtin(&group, &a.module)?,
    };
    let report = cross_check(&c, &module, &degrees, a.cap)?;
    println!("group: {label}");
    print!("{report}");
    if let Some(path) = &a.json {
        write(path, &report.to_json())?;
    }
    println!("{}", if report.pass() { "PASS" } else { "FAIL" });
    Ok(if report.pass() { 0 } else { 1 })
}

fn cmd_export(problem: &ProblemArgs, out: &Path) -> CliResult<()> {
    let (label, c, p) = problem.encode()?;
    write(out, &export_sdpa(&p))?;
    print!("{}", problem_summary(&label, &p, &c));
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_import(a: &ImportArgs) -> CliResult<()> {
    let p = import_sdpa(&read(&a.problem)?)?;
    let (label, c) = a.source.complex(p.degree())?;
    let fp = c.fingerprint();
    if p.fingerprint != fp {
        return Err(Error::FingerprintMismatch {
            expected: p.fingerprint.clone(),
            found: fp,
        }
        .into());
    }
    let s = import_solution(&p, &read(&a.solution)?, a.solver.solver_tol)?;
    let mut summary = problem_summary(&label, &p, &c);
    summary += &solve_summary(&s, 0.0);
    finish_certificate(&label, &c, &p, &s, &a.solver, &a.out, summary)
}

fn run(cli: Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Certify(a) => cmd_certify(a).map(|()| 0),
        Command::Verify { certificate, complex } => cmd_verify(certificate, complex),
        Command::Oracle(a) => cmd_oracle(a),
        Command::ExportSdpa { problem, out } => cmd_export(problem, out).map(|()| 0),
        Command::Import(a) => cmd_import(a).map(|()| 0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
