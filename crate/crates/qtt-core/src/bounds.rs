//! Closed-form interpolation-error and rank bounds for three smoothness
//! classes, plus the sampled estimator of the true interpolation error that
//! the soundness tests check them against.
//!
//! Levels follow the multiscale convention: at level `m` the function is
//! interpolated on subintervals of length `2^-m` with an order-`N`
//! Chebyshev-Lobatto grid.

use crate::cheb::ChebSystem;
use crate::error::{Error, Result};
use crate::oracle::FunctionOracle;

/// Quantitative smoothness description of a univariate target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothnessSpec {
    /// `p + 1` times differentiable with `sup |f^(p+1)| <= deriv_bound`.
    Differentiable { order: usize, deriv_bound: f64 },
    /// Analytic on the Bernstein ellipse of parameter `rho` (mapped to
    /// `[0,1]`) with `|f| <= bound` there.
    Analytic { rho: f64, bound: f64 },
    /// Inverse Fourier transform of a measure supported on
    /// `[-omega, omega]` with total variation `total_variation`.
    Bandlimited { omega: f64, total_variation: f64 },
}

impl SmoothnessSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SmoothnessSpec::Differentiable { order, deriv_bound } => {
                if order < 1 {
                    return Err(Error::contract("differentiable class needs p >= 1"));
                }
                if deriv_bound.is_nan() || deriv_bound < 0.0 {
                    return Err(Error::contract("derivative bound must be nonnegative"));
                }
            }
            SmoothnessSpec::Analytic { rho, bound } => {
                if rho.is_nan() || rho <= 1.0 {
                    return Err(Error::contract("analytic class needs rho > 1"));
                }
                if bound.is_nan() || bound < 0.0 {
                    return Err(Error::contract("magnitude bound must be nonnegative"));
                }
            }
            SmoothnessSpec::Bandlimited {
                omega,
                total_variation,
            } => {
                if omega.is_nan() || omega <= 0.0 {
                    return Err(Error::contract("bandlimited class needs omega > 0"));
                }
                if total_variation.is_nan() || total_variation < 0.0 {
                    return Err(Error::contract("total variation must be nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// Effective ellipse parameter at level `m` for the analytic class:
    /// `rho_m = max(rho, 2^m (rho-1)^2 / rho)`.
    pub fn rho_at_level(rho: f64, m: usize) -> f64 {
        let grown = 2f64.powi(m as i32) * (rho - 1.0) * (rho - 1.0) / rho;
        rho.max(grown)
    }
}

fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

/// Upper bound on the level-`m`, order-`n` interpolation error `E_{m,N}[f]`
/// for functions in the class.
pub fn interp_error_bound(spec: &SmoothnessSpec, m: usize, n: usize) -> Result<f64> {
    spec.validate()?;
    let two_m = 2f64.powi(-(m as i32));
    match *spec {
        SmoothnessSpec::Differentiable {
            order: p,
            deriv_bound: c,
        } => {
            if n <= p {
                return Err(Error::contract(format!(
                    "differentiable bound needs N > p (N={n}, p={p})"
                )));
            }
            Ok(4.0 * c / std::f64::consts::PI * two_m
                / (p as f64 * ((n - p) as f64).powi(p as i32)))
        }
        SmoothnessSpec::Analytic { rho, bound: b } => {
            let rho_m = SmoothnessSpec::rho_at_level(rho, m);
            Ok(4.0 * b * rho_m.powi(-(n as i32)) / (rho_m - 1.0))
        }
        SmoothnessSpec::Bandlimited {
            omega,
            total_variation,
        } => {
            Ok(2.0 * total_variation / std::f64::consts::PI
                * (0.5 * (two_m * omega - n as f64)).exp())
        }
    }
}

/// Upper bound on the `(eps, inf)`-rank of the `m`-th unfolding for
/// functions in the class. Callers may additionally intersect with the
/// trivial cap `min(2^m, 2^{K-m})`.
pub fn rank_bound(spec: &SmoothnessSpec, m: usize, eps: f64) -> Result<usize> {
    spec.validate()?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::contract("rank bound needs eps > 0"));
    }
    let two_m = 2f64.powi(-(m as i32));
    match *spec {
        SmoothnessSpec::Differentiable {
            order: p,
            deriv_bound: c,
        } => {
            let inner =
                (4.0 * c / std::f64::consts::PI * two_m / (p as f64 * eps)).powf(1.0 / p as f64);
            Ok(1 + p + inner.ceil() as usize)
        }
        SmoothnessSpec::Analytic { rho, bound: b } => {
            let rho_m = SmoothnessSpec::rho_at_level(rho, m);
            let lg = rho_m.ln();
            let term = ((1.0 / eps).ln() - (rho_m - 1.0).ln() + (4.0 * b).ln()) / lg;
            let inner = term.ceil().max(1.0);
            Ok(1 + inner as usize)
        }
        SmoothnessSpec::Bandlimited {
            omega,
            total_variation,
        } => {
            let term = two_m * omega
                + 2.0 * log_plus(2.0 * total_variation / (std::f64::consts::PI * eps));
            Ok(1 + term.ceil() as usize)
        }
    }
}

/// Differentiable-class refinement: given pointwise bounds `C^(q)` on
/// `|f^(q+1)|` for `q = 1..=p`, the rank bound may take the best order:
/// `1 + ceil(min_q {q + [2 C^(q) 2^-m / (pi q eps)]^(1/q)})`.
pub fn rank_bound_multi(deriv_bounds: &[f64], m: usize, eps: f64) -> Result<usize> {
    if deriv_bounds.is_empty() {
        return Err(Error::contract("need at least one derivative bound"));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::contract("rank bound needs eps > 0"));
    }
    let two_m = 2f64.powi(-(m as i32));
    let mut best = f64::INFINITY;
    for (i, &c) in deriv_bounds.iter().enumerate() {
        let q = (i + 1) as f64;
        if c.is_nan() || c < 0.0 {
            return Err(Error::contract("derivative bounds must be nonnegative"));
        }
        let val = q + (2.0 * c * two_m / (std::f64::consts::PI * q * eps)).powf(1.0 / q);
        best = best.min(val);
    }
    Ok(1 + best.ceil() as usize)
}

/// Uniform rank bound for a bandlimited spec: the max over levels of
/// `min(2^m, rank_bound(m))`, whose leading order is `sqrt(omega)`.
pub fn uniform_rank_bound(spec: &SmoothnessSpec, eps: f64) -> Result<usize> {
    match spec {
        SmoothnessSpec::Bandlimited { .. } => {}
        _ => {
            return Err(Error::contract(
                "uniform rank bound is for the bandlimited class",
            ))
        }
    }
    let mut best = 1usize;
    for m in 1..=64usize {
        let trivial = if m < 63 { 1usize << m } else { usize::MAX };
        let r = rank_bound(spec, m, eps)?;
        best = best.max(trivial.min(r));
        // Past the crossover the bound only decreases.
        if trivial > r && m > 2 {
            break;
        }
    }
    Ok(best)
}

/// Sampled estimate of `E_{m,N}[f]`: max over sampled offsets
/// `u in [0, 1 - 2^-m]` (uniform, endpoints included) and targets
/// `v in [0, 1]` (first-kind Chebyshev points plus the endpoints) of the
/// interpolation residual. A lower bound of the true sup.
pub fn measure_interp_error(
    f: &FunctionOracle,
    m: usize,
    n: usize,
    u_samples: usize,
    v_samples: usize,
) -> Result<f64> {
    if u_samples < 64 || v_samples < 64 {
        return Err(Error::contract(
            "need at least 64 samples in each direction",
        ));
    }
    if f.dim() != 1 {
        return Err(Error::contract(
            "interpolation error estimator is univariate",
        ));
    }
    let sys = ChebSystem::new(n)?;
    let scale = 2f64.powi(-(m as i32));
    let span = 1.0 - scale;
    let us: Vec<f64> = if span > 0.0 {
        (0..u_samples)
            .map(|i| span * i as f64 / (u_samples - 1) as f64)
            .collect()
    } else {
        vec![0.0]
    };
    let mut vs: Vec<f64> = (0..v_samples)
        .map(|j| (((j as f64 + 0.5) * std::f64::consts::PI / v_samples as f64).cos() + 1.0) / 2.0)
        .collect();
    vs.push(0.0);
    vs.push(1.0);

    let mut data = vec![0.0; n + 1];
    let mut worst = 0.0f64;
    for &u in &us {
        for (a, slot) in data.iter_mut().enumerate() {
            *slot = f.eval1(u + scale * sys.node(a));
        }
        for &v in &vs {
            let interp = sys.interpolate(&data, v);
            let truth = f.eval1(u + scale * v);
            worst = worst.max((interp - truth).abs());
        }
    }
    Ok(worst)
}
