//! The `thermo` command-line tool.
//!
//! Every command reads a JSON model (see [`config`]) and writes one CSV to
//! `--out` or standard output. Floats are printed with 17 significant
//! digits; infinities as `inf`/`-inf`.
//!
//! | command     | columns                              |
//! |-------------|--------------------------------------|
//! | `pressure`  | `q,pressure,dpressure`               |
//! | `rate`      | `p,I,q_star,status`                  |
//! | `bound`     | `p,I,bound,pass,mode`                |
//! | `constants` | `name,value`                         |
//! | `ldp`       | `n,log_rate,ref,slack,method`        |
//! | `spread`    | `kind,cycle,mean`                    |
//! | `normalize` | `word,value`                         |
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 bound violated,
//! 4 no convergence.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thermo_core::{
    cohomology_spread, constants_for, equilibrium_measure, evaluate_bound, exact_window_mass, normalize_potential,
    sample_paths, shift_nonnegative, theorem1_constants, window_reference, ConstantsMode, Error, Potential,
    RateProblem, TiltedFamily,
};

pub use config::{load_model, ConfigError, Model, ModelConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BOUND: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

/// Environment variable overriding the worker count.
pub const THREADS_VAR: &str = "THERMO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "thermo", version, about = "Pressure, rate functions and explicit large-deviation bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON model file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (standard output if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Paper,
    Measured,
}

impl From<ModeArg> for ConstantsMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => ConstantsMode::Paper,
            ModeArg::Measured => ConstantsMode::Measured,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    /// Exact DP, falling back to sampling when it does not fit in memory.
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pressure of phi + q psi and its derivative over a q grid (phi = normalized f).
    Pressure {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        q_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        q_max: f64,
        #[arg(long)]
        q_step: f64,
    },
    /// Rate function of psi over a p grid `a:b:step`.
    Rate {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        p_grid: String,
    },
    /// Checks the uniform lower bound over a p grid; exits 3 on any violation.
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        delta0: f64,
        #[arg(long, value_enum, default_value = "measured")]
        constants: ModeArg,
        #[arg(long, allow_hyphen_values = true)]
        p_grid: String,
    },
    /// Spectral constants and the quantities behind the lower bound.
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        delta0: f64,
        #[arg(long, value_enum, default_value = "measured")]
        constants: ModeArg,
    },
    /// Log-probabilities of the window `[p - delta, p + delta]` for n in `a:b:step`.
    Ldp {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
    },
    /// Minimum and maximum cycle means of psi.
    Spread {
        #[command(flatten)]
        common: Common,
    },
    /// The normalized potential cohomologous to f.
    Normalize {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bound violated at {count} grid point(s); first: {first}")]
    Violations { count: usize, first: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Config(ConfigError::Io { .. }) => EXIT_IO,
            CliError::Violations { .. } | CliError::Core(Error::BoundViolated { .. }) => EXIT_BOUND,
            CliError::Core(Error::NoConvergence { .. })
            | CliError::Config(ConfigError::Model { source: Error::NoConvergence { .. }, .. }) => EXIT_NO_CONVERGENCE,
            _ => EXIT_INVALID,
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit code. Errors go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("thermo: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        // Fails harmlessly if a pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Pressure { common, q_min, q_max, q_step } => {
            let model = load_model(&common.config)?;
            let grid = float_grid(*q_min, *q_max, *q_step)?;
            let phi = normalize_potential(&model.f)?;
            let curve = TiltedFamily::new(&phi, &model.psi)?.curve(&grid)?;
            let mut out = String::from("q,pressure,dpressure\n");
            for i in 0..grid.len() {
                row(&mut out, &[num(curve.q_grid[i]), num(curve.pressures[i]), num(curve.derivatives[i])]);
            }
            emit(common, &out)
        }
        Command::Rate { common, p_grid } => {
            let model = load_model(&common.config)?;
            let grid = parse_float_grid(p_grid)?;
            let phi = normalize_potential(&model.f)?;
            let problem = RateProblem::new(&phi, &model.psi)?;
            let values = grid.par_iter().map(|&p| problem.rate(p)).collect::<Result<Vec<_>, _>>()?;
            let mut out = String::from("p,I,q_star,status\n");
            for v in values {
                let q = v.q_star.map_or_else(|| "none".to_string(), num);
                row(&mut out, &[num(v.p), num(v.value), q, v.status.as_str().to_string()]);
            }
            emit(common, &out)
        }
        Command::Bound { common, delta0, constants, p_grid } => {
            let model = load_model(&common.config)?;
            let grid = parse_float_grid(p_grid)?;
            let (phi, psi, c) = prepared(&model)?;
            let mode = ConstantsMode::from(*constants);
            let consts = constants_for(mode, &phi, &psi)?;
            let shifted: Vec<f64> = grid.iter().map(|p| p + c).collect();
            let report = evaluate_bound(&phi, &psi, *delta0, &shifted, &consts)?;
            for p in &report.excluded {
                eprintln!("thermo: p = {} lies within delta0 of the mean; skipped", p - c);
            }
            let mut out = String::from("p,I,bound,pass,mode\n");
            for v in &report.verdicts {
                row(
                    &mut out,
                    &[num(v.p - c), num(v.rate.value), num(v.bound), v.pass.to_string(), mode.as_str().into()],
                );
            }
            emit(common, &out)?;
            let failed: Vec<_> = report.verdicts.iter().filter(|v| !v.pass).collect();
            match (failed.first(), report.first_failure()) {
                (Some(v), _) => Err(CliError::Violations {
                    count: failed.len(),
                    first: format!("p = {}: I = {}, bound = {}", v.p - c, v.rate.value, v.bound),
                }),
                (None, Some(what)) => Err(CliError::Violations { count: 0, first: what }),
                (None, None) => Ok(()),
            }
        }
        Command::Constants { common, delta0, constants } => {
            let model = load_model(&common.config)?;
            let (phi, psi, c) = prepared(&model)?;
            let consts = constants_for((*constants).into(), &phi, &psi)?;
            let r = theorem1_constants(&phi, &psi, *delta0, &consts)?;
            let k = &r.constants;
            let n0 = r.n0_exact.map_or_else(|| num(r.n0), |n| n.to_string());
            let rows: Vec<(&str, String)> = vec![
                ("mode", r.mode.as_str().into()),
                ("theta", num(k.params.theta)),
                ("psi_shift", num(c)),
                ("rho", num(k.rho)),
                ("log_rho", num(k.log_rho)),
                ("log_d", num(k.log_d)),
                ("log_h_norm_bound", num(k.log_h_norm_bound)),
                ("log_h_min_bound", num(k.log_h_min_bound)),
                ("c0", num(r.c0)),
                ("psi_mean", num(r.psi_mean - c)),
                ("b_psi", num(r.b_psi)),
                ("b", num(r.b)),
                ("delta0", num(r.delta0)),
                ("alpha", num(r.alpha)),
                ("log_alpha", num(r.log_alpha)),
                ("n0", n0),
                ("q0", num(r.q0)),
                ("log_q0", num(r.log_q0)),
                ("bound", num(r.bound)),
                ("sandwich", r.sandwich_holds().to_string()),
            ];
            let mut out = String::from("name,value\n");
            for (name, value) in rows {
                row(&mut out, &[name.into(), value]);
            }
            emit(common, &out)
        }
        Command::Ldp { common, p, delta, n, seed, trials, method } => {
            let model = load_model(&common.config)?;
            let ns = parse_int_grid(n)?;
            let phi = normalize_potential(&model.f)?;
            let mu = equilibrium_measure(&phi, 1)?;
            let reference = match RateProblem::new(&phi, &model.psi) {
                Ok(problem) => window_reference(&problem, *p, *delta)?,
                Err(Error::CohomologousConstant { .. }) => {
                    let mean = thermo_core::integrate(&mu, &model.psi)?;
                    if (mean - p).abs() <= *delta {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                Err(e) => return Err(e.into()),
            };
            let rows = ns
                .par_iter()
                .map(|&n| match method {
                    MethodArg::Exact => exact_window_mass(&mu, &model.psi, n, *p, *delta),
                    MethodArg::Mc => sample_paths(&mu, &model.psi, n, *trials, *seed, *p, *delta),
                    MethodArg::Auto => match exact_window_mass(&mu, &model.psi, n, *p, *delta) {
                        Err(Error::Infeasible(_)) => sample_paths(&mu, &model.psi, n, *trials, *seed, *p, *delta),
                        other => other,
                    },
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = String::from("n,log_rate,ref,slack,method\n");
            for m in rows {
                row(
                    &mut out,
                    &[m.n.to_string(), num(m.log_rate), num(reference), num(m.slack), m.method.as_str().into()],
                );
            }
            emit(common, &out)
        }
        Command::Spread { common } => {
            let model = load_model(&common.config)?;
            let s = cohomology_spread(&model.psi);
            let mut out = String::from("kind,cycle,mean\n");
            row(&mut out, &["min".into(), s.min_cycle.to_string(), num(s.min_mean)]);
            row(&mut out, &["max".into(), s.max_cycle.to_string(), num(s.max_mean)]);
            emit(common, &out)
        }
        Command::Normalize { common } => {
            let model = load_model(&common.config)?;
            let phi = normalize_potential(&model.f)?;
            let mut out = String::from("word,value\n");
            for (w, v) in phi.words().iter().zip(phi.values()) {
                row(&mut out, &[w.to_string(), num(*v)]);
            }
            emit(common, &out)
        }
    }
}

/// Normalized `f` and `psi` shifted to be nonnegative, with the shift.
fn prepared(model: &Model) -> Result<(Potential, Potential, f64), CliError> {
    let phi = normalize_potential(&model.f)?;
    let (psi, c) = shift_nonnegative(&model.psi)?;
    Ok((phi, psi, c))
}

fn emit(common: &Common, text: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}

fn row(out: &mut String, fields: &[String]) {
    let _ = writeln!(out, "{}", fields.join(","));
}

/// 17 significant digits; `inf`, `-inf`, `nan` for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse =
        |s: &str| s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad number {s:?} in grid {spec:?}")));
    match parts.as_slice() {
        [a] => Ok(vec![parse(a)?]),
        [a, b, step] => float_grid(parse(a)?, parse(b)?, parse(step)?),
        _ => Err(CliError::Usage(format!("grid {spec:?} must be a:b:step or a single value"))),
    }
}

/// `a, a + step, ...` up to `b` inclusive, each rounded to 1e-12 so that
/// decimal grids print as expected.
pub fn float_grid(a: f64, b: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(a.is_finite() && b.is_finite() && step > 0.0 && b >= a) {
        return Err(CliError::Usage(format!("bad grid {a}:{b}:{step}")));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(CliError::Usage(format!("grid {a}:{b}:{step} has too many points")));
    }
    Ok((0..count).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn parse_int_grid(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad integer grid {spec:?} (expected a:b:step or n)"));
    let parts: Result<Vec<usize>, _> = spec.split(':').map(|s| s.trim().parse::<usize>()).collect();
    match parts.map_err(|_| bad())?.as_slice() {
        [n] if *n > 0 => Ok(vec![*n]),
        [a, b, step] if *a > 0 && *step > 0 && b >= a => Ok((*a..=*b).step_by(*step).collect()),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_float_grid("0.05:0.95:0.05").unwrap().len(), 19);
        assert_eq!(parse_float_grid("0.05:0.95:0.05").unwrap()[2], 0.15);
        assert_eq!(float_grid(-2.0, 2.0, 0.1).unwrap().len(), 41);
        assert_eq!(parse_int_grid("8:24:2").unwrap(), vec![8, 10, 12, 14, 16, 18, 20, 22, 24]);
        assert!(parse_int_grid("0:4:1").is_err());
        assert!(parse_float_grid("1:0:0.1").is_err());
    }

    #[test]
    fn number_format() {
        assert_eq!(num(0.5), "5.0000000000000000e-1");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(Error::NoConvergence { iterations: 1, residual: 1.0 }).exit_code(), 4);
        assert_eq!(CliError::Core(Error::BoundViolated { what: String::new() }).exit_code(), 3);
        assert_eq!(CliError::Core(Error::NotAperiodic { bound: 2 }).exit_code(), 2);
        assert_eq!(run(["thermo", "pressure"]), 2);
    }
}
