//! `qtt`: build quantized tensor trains from named functions, recover grid
//! samples from them, print unfolding rank profiles and smoothness-based
//! bounds, and reproduce the numerical experiments.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 i/o
//! or file-format error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtt_cli::experiments::{run_experiment, ExperimentConfig, EXPERIMENT_NAMES};
use qtt_cli::registry::{lookup, FnParams, FUNCTION_NAMES};
use qtt_core::bounds::{interp_error_bound, rank_bound, uniform_rank_bound, SmoothnessSpec};
use qtt_core::cheb::{ChebSystem, LocalInterpSystem};
use qtt_core::construct::{
    construct_basic, construct_decay, construct_multires, construct_multivariate,
    construct_rank_revealing, construct_rank_revealing_sparse, BitOrder, TruncationPolicy,
};
use qtt_core::cores::{DangerTree, DecaySchedule};
use qtt_core::error::Error;
use qtt_core::invert::recover_grid;
use qtt_core::tt::{tt_read_file, tt_write_file, unfolding_eps_rank};

#[derive(Parser)]
#[command(
    name = "qtt",
    version,
    about = "Quantized tensor trains by multiscale Chebyshev interpolation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Basic,
    Rr,
    Sparse,
    Decay,
    Multires,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ordering {
    Interleaved,
    Serial,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundClass {
    Differentiable,
    Analytic,
    Bandlimited,
}

#[derive(Args)]
struct FnArgs {
    /// Registered function name.
    #[arg(long = "fn", value_parser = clap::builder::PossibleValuesParser::new(FUNCTION_NAMES))]
    function: String,
    /// Scale parameter of the peak/gaussian families.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Mode count of the random trigonometric series.
    #[arg(long, default_value_t = 25)]
    modes: usize,
    /// Frequency of the cosine family (periods over the unit interval).
    #[arg(long, default_value_t = 8.0)]
    freq: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Build a QTT for a registered function and write the container file.
    Build {
        #[command(flatten)]
        function: FnArgs,
        /// Interpolation order N.
        #[arg(short = 'N', long = "order")]
        order: usize,
        /// Depth K (number of bits).
        #[arg(short = 'K', long = "depth")]
        depth: usize,
        #[arg(long, value_enum, default_value_t = Mode::Basic)]
        mode: Mode,
        /// Truncation budget for the rank-revealing modes.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Local interpolation half-width M (sparse mode).
        #[arg(short = 'M', long = "local-order", default_value_t = 10)]
        local_order: usize,
        /// Bandlimit for the decay schedule.
        #[arg(long)]
        omega: Option<f64>,
        /// Margin for the decay schedule.
        #[arg(long)]
        delta: Option<f64>,
        /// Bit ordering for multivariate functions.
        #[arg(long, value_enum, default_value_t = Ordering::Serial)]
        ordering: Ordering,
        /// Seed for seeded functions.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Read a QTT container and recover Chebyshev-Lobatto grid samples.
    Invert {
        /// QTT container path.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Interpolation order N of the recovery grid.
        #[arg(short = 'N', long = "order")]
        order: usize,
        /// Stage-1 Lagrange depth.
        #[arg(short = 'q', long, default_value_t = 1)]
        q: usize,
        /// Target level m (defaults to 1, the coarsest pair of grids).
        #[arg(short = 'm', long = "target-level", default_value_t = 1)]
        target_level: usize,
        /// CSV output path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Print the unfolding eps-rank profile of a stored QTT (brute force).
    Ranks {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Rank tolerance in the tensor 2-norm.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Print interpolation-error and rank bounds for a smoothness class.
    Bounds {
        #[arg(long, value_enum)]
        class: BoundClass,
        /// Differentiability order p.
        #[arg(short = 'p', long, default_value_t = 2)]
        p: usize,
        /// Derivative bound C.
        #[arg(long, default_value_t = 1.0)]
        deriv_bound: f64,
        /// Bernstein ellipse parameter rho.
        #[arg(long, default_value_t = 2.0)]
        rho: f64,
        /// Magnitude bound B on the ellipse.
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
        /// Bandlimit Omega.
        #[arg(long, default_value_t = 256.0)]
        omega: f64,
        /// Total variation |mu| of the spectral measure.
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        mu: f64,
        /// Rank tolerance eps.
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        /// Interpolation order N for the error-bound column.
        #[arg(short = 'N', long = "order", default_value_t = 32)]
        order: usize,
        /// Largest level m to print.
        #[arg(long, default_value_t = 16)]
        max_level: usize,
    },
    /// Run a registered experiment and write its CSV.
    Experiment {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENT_NAMES))]
        name: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Random dyadic sample count for error estimates.
        #[arg(long)]
        samples: Option<usize>,
        /// Enumerate the full dyadic grid instead of sampling (K <= 26).
        #[arg(long, default_value_t = false)]
        exhaustive: bool,
        /// Peak-scale constants for peak-sparse.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
        c_values: Vec<f64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(()) => 0,
        // A downstream pipe (`qtt ranks | head`) closing early is not an
        // error; finish quietly like other line-oriented tools.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Contract(_) | Error::DenseCap { .. } => 2,
                Error::Numerical(_) => 3,
                Error::Format(_) | Error::Io(_) => 4,
            }
        }
    });
}

/// Write one line to stdout, propagating i/o failures instead of
/// panicking the way `println!` does.
fn emit(line: std::fmt::Arguments<'_>) -> Result<(), Error> {
    use std::io::Write;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    writeln!(lock, "{line}")?;
    Ok(())
}

macro_rules! emit {
    ($($arg:tt)*) => { emit(format_args!($($arg)*))? };
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Build {
            function,
            order,
            depth,
            mode,
            tol,
            local_order,
            omega,
            delta,
            ordering,
            seed,
            out,
        } => {
            let params = FnParams {
                alpha: function.alpha,
                modes: function.modes,
                seed,
                freq: function.freq,
            };
            let entry = lookup(&function.function, &params)?;
            let sys = ChebSystem::new(order)?;
            if entry.dim > 1 {
                let bit_order = match ordering {
                    Ordering::Interleaved => BitOrder::Interleaved,
                    Ordering::Serial => BitOrder::Serial,
                };
                let policy = match mode {
                    Mode::Basic => TruncationPolicy::absolute(0.0),
                    Mode::Rr | Mode::Sparse => TruncationPolicy::absolute(tol),
                    Mode::Decay | Mode::Multires => {
                        return Err(Error::Contract(
                            "decay and multires modes are univariate".into(),
                        ))
                    }
                };
                let local = match mode {
                    Mode::Sparse => Some(LocalInterpSystem::new(sys.clone(), local_order)?),
                    _ => None,
                };
                let (tt, report) = construct_multivariate(
                    &entry.oracle,
                    &sys,
                    entry.dim,
                    depth,
                    bit_order,
                    &policy,
                    local.as_ref(),
                )?;
                tt_write_file(&tt, &out)?;
                emit!("wrote {} ({} cores)", out.display(), tt.depth());
                emit!("{report}");
                return Ok(());
            }
            let (tt, report) = match mode {
                Mode::Basic => construct_basic(&entry.oracle, &sys, depth)?,
                Mode::Rr => construct_rank_revealing(
                    &entry.oracle,
                    &sys,
                    depth,
                    &TruncationPolicy::absolute(tol),
                )?,
                Mode::Sparse => {
                    let lsys = LocalInterpSystem::new(sys, local_order)?;
                    construct_rank_revealing_sparse(
                        &entry.oracle,
                        &lsys,
                        depth,
                        &TruncationPolicy::absolute(tol),
                    )?
                }
                Mode::Decay => {
                    let omega =
                        omega.ok_or_else(|| Error::Contract("decay mode needs --omega".into()))?;
                    let delta =
                        delta.ok_or_else(|| Error::Contract("decay mode needs --delta".into()))?;
                    let sched = DecaySchedule::new(omega, delta, depth)?;
                    construct_decay(&entry.oracle, &sched)?
                }
                Mode::Multires => {
                    let tree = DangerTree::left_edge(depth)?;
                    construct_multires(&entry.oracle, &sys, depth, &tree)?
                }
            };
            tt_write_file(&tt, &out)?;
            emit!("wrote {} ({} cores)", out.display(), tt.depth());
            emit!("{report}");
            Ok(())
        }
        Command::Invert {
            input,
            order,
            q,
            target_level,
            out,
        } => {
            let tt = tt_read_file(&input)?;
            let sys = ChebSystem::new(order)?;
            let samples = recover_grid(&tt, &sys, q, target_level)?;
            let file = std::fs::File::create(&out)?;
            let mut writer = std::io::BufWriter::new(file);
            samples.write_csv(&sys, &mut writer)?;
            use std::io::Write;
            writer.flush()?;
            emit!(
                "wrote {} (level {}, {} prefixes x {} nodes)",
                out.display(),
                samples.level(),
                1usize << samples.level(),
                samples.order() + 1
            );
            Ok(())
        }
        Command::Ranks { input, tol } => {
            let tt = tt_read_file(&input)?;
            let dense = tt.to_dense()?;
            emit!("m,eps_rank");
            for m in 1..tt.depth() {
                let r = unfolding_eps_rank(&dense, m, tol)?;
                emit!("{m},{r}");
            }
            Ok(())
        }
        Command::Bounds {
            class,
            p,
            deriv_bound,
            rho,
            bound,
            omega,
            mu,
            eps,
            order,
            max_level,
        } => {
            let spec = match class {
                BoundClass::Differentiable => SmoothnessSpec::Differentiable {
                    order: p,
                    deriv_bound,
                },
                BoundClass::Analytic => SmoothnessSpec::Analytic { rho, bound },
                BoundClass::Bandlimited => SmoothnessSpec::Bandlimited {
                    omega,
                    total_variation: mu,
                },
            };
            emit!("m,interp_error_bound,rank_bound");
            for m in 0..=max_level {
                let e = interp_error_bound(&spec, m, order)?;
                let r = rank_bound(&spec, m, eps)?;
                emit!("{m},{e:.16e},{r}");
            }
            if let SmoothnessSpec::Bandlimited { .. } = spec {
                emit!("# uniform_rank_bound={}", uniform_rank_bound(&spec, eps)?);
            }
            Ok(())
        }
        Command::Experiment {
            name,
            seed,
            samples,
            exhaustive,
            c_values,
            out,
        } => {
            let mut cfg = ExperimentConfig::new(name, seed);
            cfg.samples = samples;
            cfg.exhaustive = exhaustive;
            cfg.c_values = c_values;
            let csv = run_experiment(&cfg)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &csv)?;
                    emit!("wrote {}", path.display());
                }
                None => emit!("{}", csv.trim_end()),
            }
            Ok(())
        }
    }
}
