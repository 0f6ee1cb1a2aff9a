//! Named target functions for the command line and the experiment harness.

use qtt_core::bounds::SmoothnessSpec;
use qtt_core::error::{Error, Result};
use qtt_core::oracle::FunctionOracle;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Parameters some registry functions depend on.
#[derive(Debug, Clone, Copy)]
pub struct FnParams {
    /// Scale of the peak and Gaussian families.
    pub alpha: f64,
    /// Mode count of the random trigonometric series.
    pub modes: usize,
    /// Seed for the series coefficients.
    pub seed: u64,
    /// Frequency (in periods over `[0,1]`) of the plain cosine family.
    pub freq: f64,
}

impl Default for FnParams {
    fn default() -> Self {
        FnParams {
            alpha: 0.1,
            modes: 25,
            seed: 7,
            freq: 8.0,
        }
    }
}

/// A named target: evaluator over `[0,1]^dim` plus an optional smoothness
/// description feeding the bound formulas.
pub struct RegistryEntry {
    pub name: &'static str,
    pub dim: usize,
    pub describe: &'static str,
    pub oracle: FunctionOracle,
    pub smoothness: Option<SmoothnessSpec>,
}

/// Names accepted by [`lookup`].
pub const FUNCTION_NAMES: &[&str] = &[
    "const1",
    "x",
    "x2",
    "x3",
    "cheb3",
    "sqrt",
    "cos",
    "peak",
    "gaussian",
    "oscil",
    "bivariate",
];

/// Standard-normal coefficients for the random trigonometric series:
/// ChaCha8 stream from the 64-bit seed, Box-Muller transform. Fully
/// deterministic for a given seed.
pub fn normal_coefficients(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        out.push(r * (2.0 * PI * u2).cos());
        if out.len() < count {
            out.push(r * (2.0 * PI * u2).sin());
        }
    }
    out
}

/// Random trigonometric series
/// `f(x) = sum_j a_j cos(2 pi j x) + b_j sin(2 pi j x)` with independent
/// standard-normal coefficients, together with its bandlimit data
/// `(Omega, |mu|)`.
pub fn oscillatory_series(modes: usize, seed: u64) -> (FunctionOracle, SmoothnessSpec) {
    let coeffs = normal_coefficients(seed, 2 * modes);
    let a = coeffs[..modes].to_vec();
    let b = coeffs[modes..].to_vec();
    let total_variation: f64 = 2.0
        * PI
        * a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x * x + y * y).sqrt())
            .sum::<f64>();
    let omega = 2.0 * PI * modes as f64;
    let f = FunctionOracle::univariate(move |x| {
        let mut acc = 0.0;
        for (j, (aj, bj)) in a.iter().zip(b.iter()).enumerate() {
            let t = 2.0 * PI * (j + 1) as f64 * x;
            acc += aj * t.cos() + bj * t.sin();
        }
        acc
    });
    (
        f,
        SmoothnessSpec::Bandlimited {
            omega,
            total_variation,
        },
    )
}

/// Peaked family `f(x) = alpha / sqrt(alpha^2 + (x - 1/2)^2)`.
pub fn peak_function(alpha: f64) -> FunctionOracle {
    FunctionOracle::univariate(move |x| {
        let d = x - 0.5;
        alpha / (alpha * alpha + d * d).sqrt()
    })
}

/// Gaussian family `f(x) = exp(-(x / alpha)^2 / 2)`.
pub fn gaussian_function(alpha: f64) -> FunctionOracle {
    FunctionOracle::univariate(move |x| (-0.5 * (x / alpha) * (x / alpha)).exp())
}

/// Bivariate bump `f(x, y) = 1 / (1 + 100 ((x-1/2)^2 + (y-1/2)^2))`.
pub fn bivariate_function() -> FunctionOracle {
    FunctionOracle::new(2, |p| {
        let dx = p[0] - 0.5;
        let dy = p[1] - 0.5;
        1.0 / (1.0 + 100.0 * (dx * dx + dy * dy))
    })
}

pub fn lookup(name: &str, params: &FnParams) -> Result<RegistryEntry> {
    let entry = match name {
        "const1" => RegistryEntry {
            name: "const1",
            dim: 1,
            describe: "constant 1",
            oracle: FunctionOracle::univariate(|_| 1.0),
            smoothness: Some(SmoothnessSpec::Differentiable {
                order: 1,
                deriv_bound: 0.0,
            }),
        },
        "x" => RegistryEntry {
            name: "x",
            dim: 1,
            describe: "identity",
            oracle: FunctionOracle::univariate(|x| x),
            smoothness: Some(SmoothnessSpec::Differentiable {
                order: 1,
                deriv_bound: 0.0,
            }),
        },
        "x2" => RegistryEntry {
            name: "x2",
            dim: 1,
            describe: "square",
            oracle: FunctionOracle::univariate(|x| x * x),
            smoothness: Some(SmoothnessSpec::Differentiable {
                order: 1,
                deriv_bound: 2.0,
            }),
        },
        "x3" => RegistryEntry {
            name: "x3",
            dim: 1,
            describe: "cube",
            oracle: FunctionOracle::univariate(|x| x * x * x),
            smoothness: Some(SmoothnessSpec::Differentiable {
                order: 2,
                deriv_bound: 6.0,
            }),
        },
        "cheb3" => RegistryEntry {
            name: "cheb3",
            dim: 1,
            describe: "4x^3 - 3x",
            oracle: FunctionOracle::univariate(|x| 4.0 * x * x * x - 3.0 * x),
            smoothness: Some(SmoothnessSpec::Differentiable {
                order: 2,
                deriv_bound: 24.0,
            }),
        },
        "sqrt" => RegistryEntry {
            name: "sqrt",
            dim: 1,
            describe: "square root (cusp at 0)",
            oracle: FunctionOracle::univariate(|x| x.sqrt()),
            smoothness: None,
        },
        "cos" => {
            let freq = params.freq;
            RegistryEntry {
                name: "cos",
                dim: 1,
                describe: "cos(2 pi freq x)",
                oracle: FunctionOracle::univariate(move |x| (2.0 * PI * freq * x).cos()),
                smoothness: Some(SmoothnessSpec::Bandlimited {
                    omega: 2.0 * PI * params.freq,
                    total_variation: 2.0 * PI,
                }),
            }
        }
        "peak" => RegistryEntry {
            name: "peak",
            dim: 1,
            describe: "alpha / sqrt(alpha^2 + (x - 1/2)^2)",
            oracle: peak_function(params.alpha),
            smoothness: None,
        },
        "gaussian" => RegistryEntry {
            name: "gaussian",
            dim: 1,
            describe: "exp(-(x/alpha)^2 / 2)",
            oracle: gaussian_function(params.alpha),
            smoothness: None,
        },
        "oscil" => {
            let (oracle, spec) = oscillatory_series(params.modes, params.seed);
            RegistryEntry {
                name: "oscil",
                dim: 1,
                describe: "seeded random trigonometric series",
                oracle,
                smoothness: Some(spec),
            }
        }
        "bivariate" => RegistryEntry {
            name: "bivariate",
            dim: 2,
            describe: "1 / (1 + 100 |r - (1/2,1/2)|^2)",
            oracle: bivariate_function(),
            smoothness: None,
        },
        other => {
            return Err(Error::Contract(format!(
                "unknown function {other:?}; known: {FUNCTION_NAMES:?}"
            )))
        }
    };
    Ok(entry)
}
