//! Reproduction harness for the numerical experiments: each experiment is
//! deterministic given its seed and emits CSV (one `#` header line with the
//! configuration, one column line, then numeric rows with floats at 17
//! significant digits).

use std::fmt::Write as _;

use qtt_core::cheb::ChebSystem;
use qtt_core::construct::{
    construct_basic, construct_decay, construct_multires, construct_multivariate,
    construct_rank_revealing_sparse, multivariate_index, BitOrder, TruncationPolicy,
};
use qtt_core::cores::{DangerTree, DecaySchedule};
use qtt_core::error::{Error, Result};
use qtt_core::invert::{recover_grid, GridSamples};
use qtt_core::oracle::FunctionOracle;
use qtt_core::tt::TensorTrain;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::registry::{bivariate_function, gaussian_function, oscillatory_series, peak_function};

/// Registered experiment names.
pub const EXPERIMENT_NAMES: &[&str] = &[
    "oscillatory",
    "oscillatory-scaling",
    "peak-sparse",
    "invert-depth",
    "gaussian-multires",
    "bivariate-serial",
];

/// Configuration shared by the registered experiments. Unused fields are
/// ignored by experiments that do not need them.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Random dyadic sample count for the error estimates; each experiment
    /// has a runtime-calibrated default.
    pub samples: Option<usize>,
    /// Enumerate the full dyadic grid instead of sampling (desk scale only).
    pub exhaustive: bool,
    /// Peak-scale constants `C` in `alpha = (C / N)^2` for `peak-sparse`.
    pub c_values: Vec<f64>,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        ExperimentConfig {
            name: name.into(),
            seed,
            samples: None,
            exhaustive: false,
            c_values: vec![1.0, 2.0, 4.0],
        }
    }
}

/// Max |tt - f| over random dyadic points of depth `K`, plus the full
/// level-10 grid when `K >= 10` (or the whole grid when `exhaustive`).
pub fn sampled_inf_error_univariate(
    tt: &TensorTrain,
    f: &FunctionOracle,
    depth: usize,
    samples: usize,
    seed: u64,
    exhaustive: bool,
) -> Result<f64> {
    let size = 1u64 << depth;
    let mut points: Vec<u64> = Vec::new();
    if exhaustive {
        if depth > 26 {
            return Err(Error::Contract(
                "exhaustive enumeration needs K <= 26".into(),
            ));
        }
        points.extend(0..size);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5a17);
        points.extend((0..samples).map(|_| rng.random_range(0..size)));
        if depth >= 10 {
            let stride = 1u64 << (depth - 10);
            points.extend((0..1024u64).map(|i| i * stride));
        }
    }
    let indices: Vec<Vec<usize>> = points
        .iter()
        .map(|&j| {
            (0..depth)
                .map(|k| ((j >> (depth - 1 - k)) & 1) as usize)
                .collect()
        })
        .collect();
    let values = tt.eval_many(&indices)?;
    let scale = 1.0 / size as f64;
    let mut worst = 0.0f64;
    for (&j, v) in points.iter().zip(values.iter()) {
        let truth = f.eval1(j as f64 * scale);
        worst = worst.max((v - truth).abs());
    }
    Ok(worst)
}

/// Sampled max error for a bivariate train in the given bit ordering.
pub fn sampled_inf_error_bivariate(
    tt: &TensorTrain,
    f: &FunctionOracle,
    depth: usize,
    order: BitOrder,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let size = 1u64 << depth;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb17a_41a7);
    let mut worst = 0.0f64;
    let mut indices = Vec::with_capacity(samples);
    let mut coords = Vec::with_capacity(samples);
    for _ in 0..samples {
        let jx = rng.random_range(0..size);
        let jy = rng.random_range(0..size);
        indices.push(multivariate_index(&[jx, jy], depth, order));
        coords.push((jx, jy));
    }
    let values = tt.eval_many(&indices)?;
    let scale = 1.0 / size as f64;
    for (&(jx, jy), v) in coords.iter().zip(values.iter()) {
        let truth = f.eval(&[jx as f64 * scale, jy as f64 * scale]);
        worst = worst.max((v - truth).abs());
    }
    Ok(worst)
}

fn header(cfg: &ExperimentConfig, extra: &str) -> String {
    format!("# experiment={} seed={} {extra}", cfg.name, cfg.seed)
}

/// Run a registered experiment and return its CSV text. Byte-identical for
/// identical configurations.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<String> {
    match cfg.name.as_str() {
        "oscillatory" => oscillatory(cfg),
        "oscillatory-scaling" => oscillatory_scaling(cfg),
        "peak-sparse" => peak_sparse(cfg),
        "invert-depth" => invert_depth(cfg),
        "gaussian-multires" => gaussian_multires(cfg),
        "bivariate-serial" => bivariate_serial(cfg),
        other => Err(Error::Contract(format!(
            "unknown experiment {other:?}; known: {EXPERIMENT_NAMES:?}"
        ))),
    }
}

/// Error of the basic construction for the seeded trigonometric series
/// with `J = 25`, against the number of oracle evaluations, at `K = 20`.
fn oscillatory(cfg: &ExperimentConfig) -> Result<String> {
    let depth = 20;
    let modes = 25;
    let samples = cfg.samples.unwrap_or(20_000);
    let (f, _) = oscillatory_series(modes, cfg.seed);
    let mut out = header(cfg, &format!("J={modes} K={depth} samples={samples}"));
    out.push('\n');
    out.push_str("N,evals,inf_error\n");
    for n in [10usize, 20, 30, 40, 60, 80, 120] {
        let sys = ChebSystem::new(n)?;
        f.reset_calls();
        let (tt, report) = construct_basic(&f, &sys, depth)?;
        let err = sampled_inf_error_univariate(&tt, &f, depth, samples, cfg.seed, cfg.exhaustive)?;
        let _ = writeln!(out, "{n},{},{err:.16e}", report.oracle_evals);
    }
    Ok(out)
}

/// Fixed-accuracy scaling `N = 2J` for growing mode count `J`, `K = 20`.
fn oscillatory_scaling(cfg: &ExperimentConfig) -> Result<String> {
    let depth = 20;
    let samples = cfg.samples.unwrap_or(1_500);
    let mut out = header(cfg, &format!("K={depth} samples={samples}"));
    out.push('\n');
    out.push_str("J,N,evals,inf_error\n");
    for modes in [200usize, 300, 400] {
        let n = 2 * modes;
        let (f, _) = oscillatory_series(modes, cfg.seed);
        let sys = ChebSystem::new(n)?;
        f.reset_calls();
        let (tt, report) = construct_basic(&f, &sys, depth)?;
        let err = sampled_inf_error_univariate(&tt, &f, depth, samples, cfg.seed, cfg.exhaustive)?;
        let _ = writeln!(out, "{modes},{n},{},{err:.16e}", report.oracle_evals);
    }
    Ok(out)
}

/// Sparse rank-revealing construction for the peaked family with the scale
/// tied to the grid, `alpha = (C / N)^2`, at `K = 25`, `M = 10`.
fn peak_sparse(cfg: &ExperimentConfig) -> Result<String> {
    let depth = 25;
    let half_width = 10;
    let samples = cfg.samples.unwrap_or(50_000);
    let policy = TruncationPolicy::absolute(1e-12);
    let mut out = header(
        cfg,
        &format!(
            "K={depth} M={half_width} eps=1e-12 samples={samples} C={:?}",
            cfg.c_values
        ),
    );
    out.push('\n');
    out.push_str("C,N,alpha,max_rank,inf_error,pipeline_ms\n");
    for &c in &cfg.c_values {
        for n in [250usize, 500, 1000, 2000, 3000] {
            let alpha = (c / n as f64).powi(2);
            let f = peak_function(alpha);
            let sys = ChebSystem::new(n)?;
            let lsys = qtt_core::cheb::LocalInterpSystem::new(sys, half_width)?;
            let (tt, report) = construct_rank_revealing_sparse(&f, &lsys, depth, &policy)?;
            let err =
                sampled_inf_error_univariate(&tt, &f, depth, samples, cfg.seed, cfg.exhaustive)?;
            let _ = writeln!(
                out,
                "{c:.16e},{n},{alpha:.16e},{},{err:.16e},{:.3}",
                report.max_rank(),
                report.wall_time.as_secs_f64() * 1e3
            );
        }
    }
    Ok(out)
}

/// Worst-case error of recovering `f(c^beta / 2)` from the train by the
/// two-stage inversion with `q = 1`, against the depth `K`.
fn invert_depth(cfg: &ExperimentConfig) -> Result<String> {
    let n = 300;
    let alpha = 0.1;
    let sys = ChebSystem::new(n)?;
    // The nine builds sample the same left-core points; memoize them away.
    let f = peak_function(alpha).memoized();
    let exact = GridSamples::from_function(
        {
            let f = f.clone();
            move |x| f.eval1(x)
        },
        &sys,
        1,
    )?;
    let mut out = header(cfg, &format!("alpha={alpha} N={n} q=1"));
    out.push('\n');
    out.push_str("K,worst_error\n");
    for depth in 8..=16usize {
        let (tt, _) = construct_basic(&f, &sys, depth)?;
        let got = recover_grid(&tt, &sys, 1, 1)?;
        let err = got.max_abs_diff(&exact);
        let _ = writeln!(out, "{depth},{err:.16e}");
    }
    Ok(out)
}

/// Multiresolution construction of the Gaussian family on the left-edge
/// danger tree: error against the scale `alpha` for several orders `N`.
fn gaussian_multires(cfg: &ExperimentConfig) -> Result<String> {
    let depth = 25;
    let samples = cfg.samples.unwrap_or(20_000);
    let tree = DangerTree::left_edge(depth)?;
    let mut out = header(cfg, &format!("K={depth} tree=left-edge samples={samples}"));
    out.push('\n');
    out.push_str("N,alpha,inf_error\n");
    for n in [10usize, 14, 18] {
        let sys = ChebSystem::new(n)?;
        for exp in 1..=6 {
            let alpha = 10f64.powi(-exp);
            let f = gaussian_function(alpha);
            let (tt, _) = construct_multires(&f, &sys, depth, &tree)?;
            let err =
                sampled_inf_error_univariate(&tt, &f, depth, samples, cfg.seed, cfg.exhaustive)?;
            let _ = writeln!(out, "{n},{alpha:.16e},{err:.16e}");
        }
    }
    Ok(out)
}

/// Serial-ordering bivariate construction at `K = 10`: error against `N`.
fn bivariate_serial(cfg: &ExperimentConfig) -> Result<String> {
    let depth = 10;
    let samples = cfg.samples.unwrap_or(20_000);
    let policy = TruncationPolicy::absolute(1e-10);
    let f = bivariate_function();
    let mut out = header(
        cfg,
        &format!("K={depth} eps=1e-10 ordering=serial samples={samples}"),
    );
    out.push('\n');
    out.push_str("N,max_rank,inf_error\n");
    for n in [8usize, 16, 24] {
        let sys = ChebSystem::new(n)?;
        let (tt, report) =
            construct_multivariate(&f, &sys, 2, depth, BitOrder::Serial, &policy, None)?;
        let err = sampled_inf_error_bivariate(&tt, &f, depth, BitOrder::Serial, samples, cfg.seed)?;
        let _ = writeln!(out, "{n},{},{err:.16e}", report.max_rank());
    }
    Ok(out)
}

/// Decay-schedule demonstration used by the `build` subcommand; not a
/// registered experiment but shares the sampling helpers.
pub fn decay_demo(
    omega: f64,
    delta: f64,
    depth: usize,
    freq: f64,
    seed: u64,
) -> Result<(TensorTrain, f64)> {
    let f = FunctionOracle::univariate(move |x| (2.0 * std::f64::consts::PI * freq * x).cos());
    let sched = DecaySchedule::new(omega, delta, depth)?;
    let (tt, _) = construct_decay(&f, &sched)?;
    let err = sampled_inf_error_univariate(&tt, &f, depth, 4000, seed, false)?;
    Ok((tt, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_experiment_rejected() {
        let cfg = ExperimentConfig::new("nope", 1);
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn csv_is_deterministic() {
        let mut cfg = ExperimentConfig::new("bivariate-serial", 11);
        cfg.samples = Some(500);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b, "identical config must give byte-identical CSV");
        let mut cfg2 = cfg.clone();
        cfg2.seed = 12;
        let c = run_experiment(&cfg2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn header_carries_config() {
        let mut cfg = ExperimentConfig::new("gaussian-multires", 3);
        cfg.samples = Some(100);
        let csv = run_experiment(&cfg).unwrap();
        let first = csv.lines().next().unwrap();
        assert!(first.starts_with("# experiment=gaussian-multires seed=3"));
        assert!(csv.lines().nth(1).unwrap().starts_with("N,alpha,"));
    }
}
