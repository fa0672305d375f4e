//! The `nlspec` command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 parse or usage failure,
//! 3 numerical failure, 4 nothing found.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C;

use crate::characteristic::delta_grid;
use crate::error::{Error, Result};
use crate::io::{self, EigenRecord, GapReport, RegionRecord, SpectrumReport};
use crate::ode::ToleranceSettings;
use crate::oracles::{de_delta_tilde, de_gap, de_spectrum, dexin_delta, dexin_spectrum, DeSpec, DexinSpec};
use crate::problem::Problem;
use crate::region::ContourRegion;
use crate::resolvent::{green_dirichlet_apply, resolvent_apply, tilde_resolvent_apply, SampledFunction};
use crate::rootfinder::{eigenvalue_near, find_spectrum, spectral_gap_detailed, SearchOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_FOUND: i32 = 4;

/// Relative neighbourhood searched by `mult`: `radius = MULT_RADIUS * (1 + |λ|)`.
pub const MULT_RADIUS: f64 = 1e-2;

#[derive(Debug, Parser)]
#[command(
    name = "nlspec",
    version,
    about = "Spectra of diffusion operators with nonlocal boundary conditions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub shared: Shared,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Relative tolerance of the ODE integration.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rtol: f64,

    /// Absolute tolerance of the ODE integration.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub atol: f64,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file (default: standard output).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Output format (default: json-doc for eigs, mult and gap; csv for grid and resolve).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    JsonDoc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    Dexin,
    De,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Operator {
    /// The nonlocal problem itself.
    Nonlocal,
    /// Homogeneous Dirichlet conditions.
    Dirichlet,
    /// Zero initial value and slope at 0.
    Tilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GapMethod {
    /// Closed form when the problem has the `de` shape, search otherwise.
    Auto,
    ClosedForm,
    Search,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a problem file and print one line per violation.
    Validate { problem: PathBuf },

    /// All eigenvalues in a rectangle with multiplicities.
    Eigs {
        problem: PathBuf,
        #[arg(long, num_args = 4, required = true, allow_negative_numbers = true,
              value_names = ["RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"])]
        region: Vec<f64>,
        /// Emit the closed-form spectrum of a solvable family instead of searching.
        #[arg(long, value_enum)]
        oracle: Option<Oracle>,
    },

    /// Refine the eigenvalue near a point and report its multiplicity.
    Mult {
        problem: PathBuf,
        #[arg(long, num_args = 2, required = true, allow_negative_numbers = true, value_names = ["RE", "IM"])]
        lambda: Vec<f64>,
    },

    /// Sample the characteristic determinant on a grid.
    Grid {
        problem: PathBuf,
        #[arg(long, num_args = 4, required = true, allow_negative_numbers = true,
              value_names = ["RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"])]
        region: Vec<f64>,
        #[arg(long, default_value_t = 41)]
        nx: usize,
        #[arg(long, default_value_t = 41)]
        ny: usize,
    },

    /// Apply a resolvent to a right-hand side.
    Resolve {
        problem: PathBuf,
        #[arg(long, num_args = 2, required = true, allow_negative_numbers = true, value_names = ["RE", "IM"])]
        lambda: Vec<f64>,
        /// Constant right-hand side.
        #[arg(
            long,
            allow_negative_numbers = true,
            conflicts_with = "f",
            required_unless_present = "f"
        )]
        f_const: Option<f64>,
        /// Right-hand side as CSV with columns x,re_f,im_f. Repeat an x to mark a jump.
        #[arg(long, value_name = "PATH")]
        f: Option<PathBuf>,
        /// Uniform nodes used with --f-const.
        #[arg(long, default_value_t = crate::resolvent::DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, value_enum, default_value_t = Operator::Nonlocal)]
        operator: Operator,
    },

    /// Smallest real part of the nonzero spectrum.
    Gap {
        problem: PathBuf,
        /// Search rectangle, mandatory unless the closed form applies.
        #[arg(long, num_args = 4, allow_negative_numbers = true,
              value_names = ["RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"])]
        region: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = GapMethod::Auto)]
        method: GapMethod,
    },
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidProblem(_) | Error::OracleRoute(_) => EXIT_VALIDATION,
        Error::Parse(_) | Error::Domain(_) => EXIT_PARSE,
        Error::NotFound(_) => EXIT_NOT_FOUND,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.to_string().trim_end());
            exit_code(&e)
        }
    }
}

/// Runs a parsed command. Validation reports are printed, not raised.
pub fn execute(cli: &Cli) -> Result<i32> {
    let s = &cli.shared;
    if !(s.rtol > 0.0 && s.rtol.is_finite() && s.atol > 0.0 && s.atol.is_finite()) {
        return Err(Error::Domain(format!(
            "tolerances must be positive, got rtol {} atol {}",
            s.rtol, s.atol
        )));
    }
    if let Some(n) = s.threads {
        if n == 0 {
            return Err(Error::Domain("--threads must be at least 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let tol = ToleranceSettings::new(s.rtol, s.atol);
    let opts = SearchOptions::with_tol(tol);

    match &cli.command {
        Command::Validate { problem } => {
            let report = io::read_problem_file(problem)?.validate();
            let text = report.to_string();
            if !text.is_empty() {
                emit(s.out.as_deref(), text.as_bytes())?;
            }
            Ok(if report.is_valid() { EXIT_OK } else { EXIT_VALIDATION })
        }
        Command::Eigs {
            problem,
            region,
            oracle,
        } => {
            let problem = io::load_problem(problem)?;
            let region = region_from(region)?;
            let report = match oracle {
                None => SpectrumReport::from(&find_spectrum(&problem, &region, &opts)?),
                Some(o) => oracle_spectrum(&problem, &region, *o)?,
            };
            match format(s, Format::JsonDoc) {
                Format::JsonDoc => emit(s.out.as_deref(), io::to_json_string(&report)?.as_bytes())?,
                Format::Csv => emit_with(s.out.as_deref(), |w| io::write_spectrum_csv(w, &report.eigenvalues))?,
            }
            Ok(EXIT_OK)
        }
        Command::Mult { problem, lambda } => {
            let problem = io::load_problem(problem)?;
            let z = C::new(lambda[0], lambda[1]);
            let e = eigenvalue_near(&problem, z, MULT_RADIUS * (1.0 + z.norm()), &opts)?;
            let rec = EigenRecord::from(&e);
            match format(s, Format::JsonDoc) {
                Format::JsonDoc => emit(s.out.as_deref(), io::to_json_string(&rec)?.as_bytes())?,
                Format::Csv => emit_with(s.out.as_deref(), |w| io::write_spectrum_csv(w, &[rec]))?,
            }
            Ok(EXIT_OK)
        }
        Command::Grid {
            problem,
            region,
            nx,
            ny,
        } => {
            let problem = io::load_problem(problem)?;
            let grid = delta_grid(&problem, &region_from(region)?, *nx, *ny, tol)?;
            match format(s, Format::Csv) {
                Format::JsonDoc => emit(s.out.as_deref(), io::grid_to_json(&grid)?.as_bytes())?,
                Format::Csv => emit_with(s.out.as_deref(), |w| io::write_grid_csv(w, &grid))?,
            }
            Ok(EXIT_OK)
        }
        Command::Resolve {
            problem,
            lambda,
            f_const,
            f,
            nodes,
            operator,
        } => {
            let problem = io::load_problem(problem)?;
            let z = C::new(lambda[0], lambda[1]);
            let rhs = match (f_const, f) {
                (Some(c), _) => {
                    let c = C::new(*c, 0.0);
                    SampledFunction::from_fn(*nodes, |_| c)?
                }
                (None, Some(path)) => SampledFunction::read_csv(path)?,
                (None, None) => return Err(Error::Domain("resolve needs --f-const or --f".into())),
            };
            let u = match operator {
                Operator::Nonlocal => resolvent_apply(&problem, z, &rhs, tol)?,
                Operator::Dirichlet => green_dirichlet_apply(&problem, z, &rhs, tol)?,
                Operator::Tilde => tilde_resolvent_apply(&problem, z, &rhs, tol)?,
            };
            match format(s, Format::Csv) {
                Format::JsonDoc => emit(s.out.as_deref(), io::sampled_to_json(z, &u)?.as_bytes())?,
                Format::Csv => emit_with(s.out.as_deref(), |w| u.write_csv(w))?,
            }
            Ok(EXIT_OK)
        }
        Command::Gap {
            problem,
            region,
            method,
        } => {
            let problem = io::load_problem(problem)?;
            let report = gap_report(&problem, region.as_deref(), *method, &opts)?;
            match format(s, Format::JsonDoc) {
                Format::JsonDoc => emit(s.out.as_deref(), io::to_json_string(&report)?.as_bytes())?,
                Format::Csv => emit_with(s.out.as_deref(), |w| io::write_gap_csv(w, &report))?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn format(s: &Shared, default: Format) -> Format {
    s.format.unwrap_or(default)
}

fn region_from(v: &[f64]) -> Result<ContourRegion> {
    match v {
        [a, b, c, d] => ContourRegion::new(*a, *b, *c, *d),
        _ => Err(Error::Domain(format!("a region needs 4 numbers, got {}", v.len()))),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    emit_with(out, |w| Ok(w.write_all(bytes)?))
}

fn emit_with(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            write(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// The closed-form spectrum of `problem` inside `region`.
///
/// Fails with [`Error::OracleRoute`] when the problem is not of the requested family.
pub fn oracle_spectrum(problem: &Problem, region: &ContourRegion, oracle: Oracle) -> Result<SpectrumReport> {
    let (eigenvalues, method) = match oracle {
        Oracle::Dexin => {
            let spec = DexinSpec::from_problem(problem)
                .ok_or_else(|| Error::OracleRoute("problem is not -y'' = λy with y(0) = y(a) = y(1)".into()))?;
            (dexin_records(spec, region, 1.0)?, "closed-form dexin")
        }
        Oracle::De => {
            let spec = DeSpec::from_problem(problem).ok_or_else(|| {
                Error::OracleRoute("problem does not have constant coefficients with atoms at 1/2".into())
            })?;
            if spec.b1 == 0.0 {
                let half = DexinSpec::new(0.5)?;
                (
                    dexin_records(half, region, -spec.b0)?,
                    "closed-form dexin (scaled, b1 = 0)",
                )
            } else {
                let n_max = (region.re_max.max(0.0) / (-4.0 * spec.b0 * std::f64::consts::PI.powi(2)))
                    .sqrt()
                    .ceil() as usize
                    + 1;
                let recs = de_spectrum(spec, n_max)?
                    .into_iter()
                    .filter(|(z, _)| region.contains(*z))
                    .map(|(z, m)| EigenRecord::exact(z, m, de_delta_tilde(spec, spec.u_of_lambda(z)).norm()))
                    .collect();
                (recs, "closed-form de")
            }
        }
    };
    Ok(SpectrumReport {
        region: RegionRecord::from(*region),
        total_count: eigenvalues.iter().map(|e: &EigenRecord| e.multiplicity as usize).sum(),
        eigenvalues,
        method: method.into(),
        diagnostics: None,
    })
}

/// Dexin eigenvalues multiplied by `scale` that fall in `region`.
fn dexin_records(spec: DexinSpec, region: &ContourRegion, scale: f64) -> Result<Vec<EigenRecord>> {
    if region.re_max < 0.0 {
        return Ok(Vec::new());
    }
    Ok(dexin_spectrum(spec, (region.re_max / scale).max(1.0))?
        .into_iter()
        .map(|(x, m)| (C::new(x * scale, 0.0), x, m))
        .filter(|(z, _, _)| region.contains(*z))
        .map(|(z, x, m)| EigenRecord::exact(z, m, dexin_delta(spec, C::new(x, 0.0)).norm()))
        .collect())
}

/// The spectral gap by closed form or by search, as selected by `method`.
pub fn gap_report(
    problem: &Problem,
    region: Option<&[f64]>,
    method: GapMethod,
    opts: &SearchOptions,
) -> Result<GapReport> {
    let de = DeSpec::from_problem(problem);
    let closed = match method {
        GapMethod::Auto => de.is_some(),
        GapMethod::ClosedForm => true,
        GapMethod::Search => false,
    };
    if closed {
        let spec = de.ok_or_else(|| {
            Error::OracleRoute("closed-form gap needs constant coefficients with atoms at 1/2".into())
        })?;
        return Ok(GapReport {
            gap: de_gap(spec),
            method: "closed-form".into(),
            region: None,
            eigenvalue: None,
        });
    }
    let region = region
        .map(region_from)
        .transpose()?
        .ok_or_else(|| Error::Domain("the search-based gap needs --region".into()))?;
    let (gap, spectrum) = spectral_gap_detailed(problem, &region, opts)?;
    let lowest = spectrum
        .eigenvalues
        .iter()
        .find(|e| e.location.re == gap)
        .map(EigenRecord::from);
    Ok(GapReport {
        gap,
        method: "search".into(),
        region: Some(spectrum.region.into()),
        eigenvalue: lowest,
    })
}
