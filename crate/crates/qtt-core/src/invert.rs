//! Recovery of function samples on shifted and scaled Chebyshev-Lobatto
//! grids from a given tensor train.
//!
//! Stage 1 contracts the trailing `q` bit cores with a small equispaced
//! Lagrange tensor, turning dyadic point values into Lobatto samples at
//! level `K - q`. Stage 2 coarsens level `k + 1` samples to level `k`
//! through the inversion core `G`. The driver composes both stages as one
//! right-to-left contraction of the train, so no intermediate sample grid
//! is ever materialized.

use std::io::Write;

use crate::cheb::ChebSystem;
use crate::cores::{build_inverse_core, build_lagrange_tensor};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::tt::{Core3, TensorTrain, DEFAULT_DENSE_CAP};

/// Function samples on the level-`m` family of Chebyshev-Lobatto grids:
/// row `p` (a dyadic prefix) holds the `N + 1` values approximating
/// `f(p 2^-m + 2^-m c^beta)`.
#[derive(Debug, Clone)]
pub struct GridSamples {
    level: usize,
    values: Mat,
}

impl GridSamples {
    pub fn new(level: usize, values: Mat) -> Result<Self> {
        if values.rows() != 1usize << level {
            return Err(Error::contract(format!(
                "expected {} rows for level {level}, got {}",
                1usize << level,
                values.rows()
            )));
        }
        if values.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "grid samples contain non-finite values".into(),
            ));
        }
        Ok(GridSamples { level, values })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Interpolation order `N` of the per-prefix grids.
    pub fn order(&self) -> usize {
        self.values.cols() - 1
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn get(&self, prefix: u64, beta: usize) -> f64 {
        self.values.get(prefix as usize, beta)
    }

    /// The abscissa sampled at `(prefix, beta)`.
    pub fn abscissa(&self, sys: &ChebSystem, prefix: u64, beta: usize) -> f64 {
        let h = 0.5f64.powi(self.level as i32);
        prefix as f64 * h + h * sys.node(beta)
    }

    /// Exact samples straight from a function, for comparisons.
    pub fn from_function(f: impl Fn(f64) -> f64, sys: &ChebSystem, level: usize) -> Result<Self> {
        let rows = 1usize << level;
        let h = 0.5f64.powi(level as i32);
        let values = Mat::from_fn(rows, sys.order() + 1, |p, b| {
            f(p as f64 * h + h * sys.node(b))
        });
        GridSamples::new(level, values)
    }

    /// Max absolute deviation from another sample set of identical shape.
    pub fn max_abs_diff(&self, other: &GridSamples) -> f64 {
        assert_eq!(self.level, other.level);
        assert_eq!(self.values.cols(), other.values.cols());
        self.values
            .data()
            .iter()
            .zip(other.values.data().iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// CSV export: `prefix_bits, beta, x, value` with one row per sample.
    pub fn write_csv(&self, sys: &ChebSystem, sink: &mut impl Write) -> Result<()> {
        writeln!(sink, "prefix_bits,beta,x,value")?;
        for p in 0..self.values.rows() {
            for b in 0..self.values.cols() {
                let bits: String = (0..self.level)
                    .map(|k| {
                        if (p >> (self.level - 1 - k)) & 1 == 1 {
                            '1'
                        } else {
                            '0'
                        }
                    })
                    .collect();
                let bits = if bits.is_empty() {
                    "-".to_string()
                } else {
                    bits
                };
                writeln!(
                    sink,
                    "{bits},{b},{:.17e},{:.17e}",
                    self.abscissa(sys, p as u64, b),
                    self.values.get(p, b)
                )?;
            }
        }
        Ok(())
    }
}

/// Right factor of the stage-1 contraction: `Z[alpha][beta]` sums the last
/// `q` cores against the Lagrange tensor.
fn stage1_right_factor(tt: &TensorTrain, sys: &ChebSystem, q: usize) -> Result<Mat> {
    let depth = tt.depth();
    if q < 1 || q > depth.saturating_sub(1) {
        return Err(Error::contract(format!(
            "stage-1 depth must satisfy 1 <= q <= K - 1, got q={q}, K={depth}"
        )));
    }
    let lagrange = build_lagrange_tensor(sys, q)?;
    let n1 = sys.order() + 1;
    let bond = tt.core(depth - q).left();
    let mut z = Mat::zeros(bond, n1);
    for tail in 0..1usize << q {
        // Multiply the trailing core slices right-to-left for this tail
        // bit pattern.
        let mut vec: Vec<f64> = vec![1.0];
        for (j, core) in tt.cores()[depth - q..].iter().enumerate().rev() {
            let sigma = (tail >> (q - 1 - j)) & 1;
            let mut out = vec![0.0; core.left()];
            for (a, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (b, v) in vec.iter().enumerate() {
                    acc += core.get(sigma, a, b) * v;
                }
                *slot = acc;
            }
            vec = out;
        }
        debug_assert_eq!(vec.len(), bond);
        for beta in 0..n1 {
            let weight = lagrange.get(tail, beta);
            for (a, &v) in vec.iter().enumerate() {
                let cur = z.get(a, beta);
                z.set(a, beta, cur + weight * v);
            }
        }
    }
    Ok(z)
}

/// Materialize level-`m` samples from the left chain and a right factor.
fn materialize(tt: &TensorTrain, z: &Mat, level: usize) -> Result<GridSamples> {
    let rows = 1usize << level;
    let n1 = z.cols();
    if (rows as u64).saturating_mul(n1 as u64) > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCap {
            size: rows as u128 * n1 as u128,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let mut states: Vec<Vec<f64>> = vec![vec![1.0]];
    for core in &tt.cores()[..level] {
        let mut next = Vec::with_capacity(states.len() * 2);
        for state in &states {
            for sigma in 0..core.ext() {
                let mut out = vec![0.0; core.right()];
                for (a, &x) in state.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (b, o) in out.iter_mut().enumerate() {
                        *o += x * core.get(sigma, a, b);
                    }
                }
                next.push(out);
            }
        }
        states = next;
    }
    let values = Mat::from_fn(rows, n1, |p, beta| {
        let state = &states[p];
        let mut acc = 0.0;
        for (a, &x) in state.iter().enumerate() {
            acc += x * z.get(a, beta);
        }
        acc
    });
    GridSamples::new(level, values)
}

/// Stage 1: recover level `K - q` Lobatto samples by contracting the last
/// `q` cores with the dyadic Lagrange tensor. For smooth targets the
/// recovery error scales like `2^{-(q+1)(K-q)}`-type smallness; `q = 1`
/// (linear interpolation, `2^{-2K}` scaling) suffices for most uses.
pub fn stage1_recover(tt: &TensorTrain, sys: &ChebSystem, q: usize) -> Result<GridSamples> {
    let z = stage1_right_factor(tt, sys, q)?;
    materialize(tt, &z, tt.depth() - q)
}

/// Stage 2: coarsen level `k + 1` samples to level `k` by contracting the
/// inversion core. Exact on polynomial data of degree at most `N`.
pub fn stage2_coarsen(samples: &GridSamples, g: &Core3) -> Result<GridSamples> {
    if samples.level() < 1 {
        return Err(Error::contract("cannot coarsen below level 0"));
    }
    let n1 = samples.order() + 1;
    if g.left() != n1 || g.right() != n1 || g.ext() != 2 {
        return Err(Error::contract(format!(
            "inversion core shape (2, {}, {}) does not match order {}",
            g.left(),
            g.right(),
            samples.order(),
        )));
    }
    let level = samples.level() - 1;
    let rows = 1usize << level;
    let values = Mat::from_fn(rows, n1, |p, gamma| {
        let mut acc = 0.0;
        for sigma in 0..2 {
            let child = (p << 1) | sigma;
            for beta in 0..n1 {
                let w = g.get(sigma, beta, gamma);
                if w != 0.0 {
                    acc += samples.values.get(child, beta) * w;
                }
            }
        }
        acc
    });
    GridSamples::new(level, values)
}

/// Recover level-`m` samples: stage 1 followed by `K - q - m` coarsening
/// steps, executed as a single right-to-left factored contraction (the
/// level `K - q` grid is never materialized).
pub fn recover_grid(
    tt: &TensorTrain,
    sys: &ChebSystem,
    q: usize,
    target_level: usize,
) -> Result<GridSamples> {
    let depth = tt.depth();
    if q < 1 || q > depth.saturating_sub(1) {
        return Err(Error::contract(format!(
            "stage-1 depth must satisfy 1 <= q <= K - 1, got q={q}, K={depth}"
        )));
    }
    if target_level < 1 || target_level > depth - q {
        return Err(Error::contract(format!(
            "target level must satisfy 1 <= m <= K - q, got m={target_level}"
        )));
    }
    let mut z = stage1_right_factor(tt, sys, q)?;
    let n1 = sys.order() + 1;
    let g = build_inverse_core(sys);
    // Fold cores K-q-1 .. m (1-based) into the right factor:
    // Z_k[a][gamma] = sum_{sigma, a', beta} core_{k+1}[sigma][a][a'] Z_{k+1}[a'][beta] G[sigma][beta][gamma].
    for k in (target_level..depth - q).rev() {
        let core = tt.core(k);
        if core.right() != z.rows() {
            return Err(Error::contract(
                "bond mismatch while folding inversion cores",
            ));
        }
        let mut znext = Mat::zeros(core.left(), n1);
        for sigma in 0..2 {
            // w = Z * G(sigma): (bond x n1) * (n1 x n1)
            let gs = Mat::from_fn(n1, n1, |b, c| g.get(sigma, b, c));
            let w = z.matmul(&gs);
            // znext += core(sigma) * w
            for a in 0..core.left() {
                for ap in 0..core.right() {
                    let cv = core.get(sigma, a, ap);
                    if cv == 0.0 {
                        continue;
                    }
                    for c in 0..n1 {
                        let cur = znext.get(a, c);
                        znext.set(a, c, cur + cv * w.get(ap, c));
                    }
                }
            }
        }
        z = znext;
    }
    materialize(tt, &z, target_level)
}
