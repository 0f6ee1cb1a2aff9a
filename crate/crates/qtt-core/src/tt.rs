//! Tensor-train container: storage, evaluation, dense materialization at
//! desk scale, norms, rounding, unfolding ranks, and a binary file format.
//!
//! A depth-`K` train holds cores `A_k` with entries `A_k[sigma][alpha][beta]`
//! where `sigma` runs over the external dimension (2 for bit cores),
//! `alpha` over the left bond and `beta` over the right bond. Boundary
//! bonds are 1. The represented tensor is the chain matrix product over
//! the bond indices.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Default cap (in entries) for dense materialization. Brute-force oracles
/// only make sense at desk scale; this guards against accidental blowups.
pub const DEFAULT_DENSE_CAP: u64 = 1 << 26;

/// One 3-index tensor core, stored row-major as `[sigma][alpha][beta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Core3 {
    ext: usize,
    left: usize,
    right: usize,
    data: Vec<f64>,
}

impl Core3 {
    pub fn zeros(ext: usize, left: usize, right: usize) -> Self {
        Core3 {
            ext,
            left,
            right,
            data: vec![0.0; ext * left * right],
        }
    }

    pub fn from_fn(
        ext: usize,
        left: usize,
        right: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(ext * left * right);
        for s in 0..ext {
            for a in 0..left {
                for b in 0..right {
                    data.push(f(s, a, b));
                }
            }
        }
        Core3 {
            ext,
            left,
            right,
            data,
        }
    }

    pub fn ext(&self) -> usize {
        self.ext
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    #[inline]
    pub fn get(&self, sigma: usize, alpha: usize, beta: usize) -> f64 {
        self.data[(sigma * self.left + alpha) * self.right + beta]
    }

    #[inline]
    pub fn set(&mut self, sigma: usize, alpha: usize, beta: usize, v: f64) {
        self.data[(sigma * self.left + alpha) * self.right + beta] = v;
    }

    /// The `left x right` matrix slice at external index `sigma`.
    #[inline]
    pub fn slice(&self, sigma: usize) -> &[f64] {
        &self.data[sigma * self.left * self.right..(sigma + 1) * self.left * self.right]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Reshape to the `(sigma alpha) x beta` unfolding (contiguous copy).
    pub fn unfold_left(&self) -> Mat {
        Mat::from_vec(self.ext * self.left, self.right, self.data.clone())
    }

    /// Inverse of [`Core3::unfold_left`].
    pub fn from_unfold_left(ext: usize, left: usize, mat: &Mat) -> Self {
        assert_eq!(mat.rows(), ext * left);
        Core3 {
            ext,
            left,
            right: mat.cols(),
            data: mat.data().to_vec(),
        }
    }

    /// Reshape to the `alpha x (sigma beta)` unfolding.
    pub fn unfold_right(&self) -> Mat {
        Mat::from_fn(self.left, self.ext * self.right, |a, sb| {
            let s = sb / self.right;
            let b = sb % self.right;
            self.get(s, a, b)
        })
    }

    /// Inverse of [`Core3::unfold_right`].
    pub fn from_unfold_right(ext: usize, right: usize, mat: &Mat) -> Self {
        assert_eq!(mat.cols(), ext * right);
        Core3::from_fn(ext, mat.rows(), right, |s, a, b| mat.get(a, s * right + b))
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A tensor train: an ordered chain of 3-index cores with compatible bonds.
///
/// Cores are reference-counted so that constructions with many identical
/// interior cores (the interpolative chain) stay cheap to store.
#[derive(Debug, Clone)]
pub struct TensorTrain {
    cores: Vec<Arc<Core3>>,
}

impl TensorTrain {
    pub fn new(cores: Vec<Core3>) -> Result<Self> {
        TensorTrain::from_shared(cores.into_iter().map(Arc::new).collect())
    }

    pub fn from_shared(cores: Vec<Arc<Core3>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::contract("tensor train needs at least one core"));
        }
        if cores[0].left != 1 {
            return Err(Error::contract(format!(
                "first core must have left bond 1, got {}",
                cores[0].left
            )));
        }
        if cores[cores.len() - 1].right != 1 {
            return Err(Error::contract(format!(
                "last core must have right bond 1, got {}",
                cores[cores.len() - 1].right
            )));
        }
        for k in 0..cores.len() - 1 {
            if cores[k].right != cores[k + 1].left {
                return Err(Error::contract(format!(
                    "bond mismatch between cores {} and {}: {} vs {}",
                    k,
                    k + 1,
                    cores[k].right,
                    cores[k + 1].left
                )));
            }
        }
        for (k, c) in cores.iter().enumerate() {
            if c.ext == 0 {
                return Err(Error::contract(format!(
                    "core {k} has empty external dimension"
                )));
            }
            if !c.is_finite() {
                return Err(Error::Numerical(format!(
                    "core {k} contains non-finite entries"
                )));
            }
        }
        Ok(TensorTrain { cores })
    }

    /// Number of cores `K`.
    pub fn depth(&self) -> usize {
        self.cores.len()
    }

    pub fn core(&self, k: usize) -> &Core3 {
        &self.cores[k]
    }

    pub fn cores(&self) -> &[Arc<Core3>] {
        &self.cores
    }

    pub fn external_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.ext).collect()
    }

    /// Bond dimensions `r_0..r_K` (length `K + 1`).
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = Vec::with_capacity(self.cores.len() + 1);
        r.push(self.cores[0].left);
        for c in &self.cores {
            r.push(c.right);
        }
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Total number of stored core entries (shared cores counted once).
    pub fn parameter_count(&self) -> usize {
        let mut seen: Vec<*const Core3> = Vec::new();
        let mut total = 0;
        for c in &self.cores {
            let ptr = Arc::as_ptr(c);
            if !seen.contains(&ptr) {
                seen.push(ptr);
                total += c.data.len();
            }
        }
        total
    }

    /// Exact left-to-right chain contraction at one multi-index.
    pub fn eval(&self, index: &[usize]) -> Result<f64> {
        if index.len() != self.cores.len() {
            return Err(Error::contract(format!(
                "index length {} does not match depth {}",
                index.len(),
                self.cores.len()
            )));
        }
        for (k, (&s, c)) in index.iter().zip(self.cores.iter()).enumerate() {
            if s >= c.ext {
                return Err(Error::contract(format!(
                    "index {s} out of range for external dimension {} at core {k}",
                    c.ext
                )));
            }
        }
        let mut v = vec![1.0f64];
        let mut next = Vec::new();
        for (&s, core) in index.iter().zip(self.cores.iter()) {
            chain_step(core, s, &v, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        Ok(v[0])
    }

    /// Evaluate at many indices, sweeping level by level so each core slice
    /// streams through memory once per batch.
    pub fn eval_many(&self, indices: &[Vec<usize>]) -> Result<Vec<f64>> {
        for idx in indices {
            if idx.len() != self.cores.len() {
                return Err(Error::contract("index length mismatch in eval_many"));
            }
        }
        let mut states: Vec<Vec<f64>> = vec![vec![1.0]; indices.len()];
        let mut scratch = Vec::new();
        for (k, core) in self.cores.iter().enumerate() {
            for (state, idx) in states.iter_mut().zip(indices.iter()) {
                let s = idx[k];
                if s >= core.ext {
                    return Err(Error::contract(format!(
                        "index {s} out of range at core {k}"
                    )));
                }
                chain_step(core, s, state, &mut scratch);
                std::mem::swap(state, &mut scratch);
            }
        }
        Ok(states.into_iter().map(|v| v[0]).collect())
    }

    pub fn to_dense(&self) -> Result<DenseQuantizedTensor> {
        self.to_dense_with_cap(DEFAULT_DENSE_CAP)
    }

    /// Breadth-first materialization over prefixes; entry order is
    /// row-major in the multi-index (first core index most significant).
    pub fn to_dense_with_cap(&self, cap: u64) -> Result<DenseQuantizedTensor> {
        let dims = self.external_dims();
        let size = dims.iter().try_fold(1u128, |acc, &d| {
            let next = acc.checked_mul(d as u128)?;
            if next <= cap as u128 {
                Some(next)
            } else {
                None
            }
        });
        let size = match size {
            Some(s) => s as usize,
            None => {
                let total = dims.iter().map(|&d| d as u128).product();
                return Err(Error::DenseCap { size: total, cap });
            }
        };

        let mut states: Vec<Vec<f64>> = vec![vec![1.0]];
        for core in &self.cores {
            let mut next_states = Vec::with_capacity(states.len() * core.ext);
            for state in &states {
                for s in 0..core.ext {
                    let mut out = Vec::new();
                    chain_step(core, s, state, &mut out);
                    next_states.push(out);
                }
            }
            states = next_states;
        }
        debug_assert_eq!(states.len(), size);
        let data: Vec<f64> = states.into_iter().map(|v| v[0]).collect();
        DenseQuantizedTensor::with_cap(dims, data, cap)
    }

    /// Lossless left-to-right QR sweep. Values are unchanged (to rounding)
    /// and bond `k` is clipped structurally to `min(2^k, r_k)`; no
    /// singular-value decisions are made.
    pub fn left_orthogonalize(&self) -> Result<TensorTrain> {
        let k = self.cores.len();
        let mut cores: Vec<Core3> = self.cores.iter().map(|c| (**c).clone()).collect();
        for i in 0..k - 1 {
            let (q, r) = linalg::qr(&cores[i].unfold_left());
            cores[i] = Core3::from_unfold_left(cores[i].ext, cores[i].left, &q);
            cores[i + 1] = absorb_left(&r, &cores[i + 1]);
        }
        TensorTrain::new(cores)
    }

    /// TT rounding: left-to-right QR orthogonalization followed by a
    /// right-to-left truncated SVD sweep. The result satisfies
    /// `|dense(self) - dense(out)|_F <= tol * |dense(self)|_F` and no bond
    /// grows.
    pub fn round(&self, tol: f64) -> Result<TensorTrain> {
        if tol < 0.0 {
            return Err(Error::contract("rounding tolerance must be nonnegative"));
        }
        let k = self.cores.len();
        let mut cores: Vec<Core3> = self.cores.iter().map(|c| (**c).clone()).collect();
        if k == 1 {
            return TensorTrain::new(cores);
        }

        // Left sweep: QR on the (sigma alpha, beta) unfolding.
        for i in 0..k - 1 {
            let (q, r) = linalg::qr(&cores[i].unfold_left());
            cores[i] = Core3::from_unfold_left(cores[i].ext, cores[i].left, &q);
            cores[i + 1] = absorb_left(&r, &cores[i + 1]);
        }
        // Global Frobenius norm now sits in the last core.
        let norm = cores[k - 1].unfold_left().frob_norm();
        let budget = if norm > 0.0 {
            tol * norm / ((k - 1) as f64).sqrt()
        } else {
            0.0
        };

        // Right sweep: truncated SVD on the (alpha, sigma beta) unfolding.
        for i in (1..k).rev() {
            let m = cores[i].unfold_right();
            let svd = linalg::svd(&m)?;
            let rank = svd
                .rank_for_frobenius_budget(budget)
                .min(numerical_rank(&svd.sigma));
            let rank = rank.max(1);
            let vt = Mat::from_fn(rank, m.cols(), |a, b| svd.vt.get(a, b));
            cores[i] = Core3::from_unfold_right(cores[i].ext, cores[i].right, &vt);
            let us = Mat::from_fn(m.rows(), rank, |a, b| svd.u.get(a, b) * svd.sigma[b]);
            cores[i - 1] = absorb_right(&cores[i - 1], &us);
        }
        TensorTrain::new(cores)
    }
}

/// `out[beta] = sum_alpha state[alpha] * core[sigma][alpha][beta]`.
#[inline]
fn chain_step(core: &Core3, sigma: usize, state: &[f64], out: &mut Vec<f64>) {
    let right = core.right;
    out.clear();
    out.resize(right, 0.0);
    let slice = core.slice(sigma);
    for (a, &x) in state.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let row = &slice[a * right..(a + 1) * right];
        for (o, &c) in out.iter_mut().zip(row.iter()) {
            *o += x * c;
        }
    }
}

/// Contract a matrix into the left bond: `out[s][a'][b] = sum_a m[a'][a] c[s][a][b]`.
fn absorb_left(m: &Mat, core: &Core3) -> Core3 {
    let mut out = Core3::zeros(core.ext, m.rows(), core.right);
    for s in 0..core.ext {
        for ap in 0..m.rows() {
            for a in 0..core.left {
                let w = m.get(ap, a);
                if w == 0.0 {
                    continue;
                }
                for b in 0..core.right {
                    let v = out.get(s, ap, b) + w * core.get(s, a, b);
                    out.set(s, ap, b, v);
                }
            }
        }
    }
    out
}

/// Contract a matrix into the right bond: `out[s][a][b'] = sum_b c[s][a][b] m[b][b']`.
fn absorb_right(core: &Core3, m: &Mat) -> Core3 {
    let mut out = Core3::zeros(core.ext, core.left, m.cols());
    for s in 0..core.ext {
        for a in 0..core.left {
            for b in 0..core.right {
                let w = core.get(s, a, b);
                if w == 0.0 {
                    continue;
                }
                for bp in 0..m.cols() {
                    let v = out.get(s, a, bp) + w * m.get(b, bp);
                    out.set(s, a, bp, v);
                }
            }
        }
    }
    out
}

/// Count singular values above the numerical-noise floor.
fn numerical_rank(sigma: &[f64]) -> usize {
    if sigma.is_empty() || sigma[0] == 0.0 {
        return 0;
    }
    let floor = sigma[0] * f64::EPSILON * sigma.len() as f64 * 16.0;
    sigma.iter().take_while(|&&s| s > floor).count()
}

/// Tensor norm selector for [`tensor_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Max absolute entry.
    Inf,
    /// Root mean square: `sqrt(size^{-1} * sum of squares)` -- a Riemann-sum
    /// reading of the `L^2([0,1]^d)` norm.
    Two,
    /// Plain Euclidean norm of the vectorization.
    Frob,
}

/// Dense materialization of a quantized tensor, entry at a multi-index
/// equal to the function value under the dyadic identification.
#[derive(Debug, Clone)]
pub struct DenseQuantizedTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseQuantizedTensor {
    pub fn with_cap(dims: Vec<usize>, data: Vec<f64>, cap: u64) -> Result<Self> {
        let size: u128 = dims.iter().map(|&d| d as u128).product();
        if size > cap as u128 {
            return Err(Error::DenseCap { size, cap });
        }
        if data.len() as u128 != size {
            return Err(Error::contract(format!(
                "data length {} does not match dims product {size}",
                data.len()
            )));
        }
        Ok(DenseQuantizedTensor { dims, data })
    }

    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        DenseQuantizedTensor::with_cap(dims, data, DEFAULT_DENSE_CAP)
    }

    /// Brute-force quantized representation of a univariate function on the
    /// dyadic grid of depth `K`: entry at flat index `j` is `f(j * 2^-K)`.
    pub fn from_univariate(f: impl Fn(f64) -> f64, depth: usize) -> Result<Self> {
        let size = 1usize
            .checked_shl(depth as u32)
            .ok_or_else(|| Error::contract("depth too large"))?;
        if size as u64 > DEFAULT_DENSE_CAP {
            return Err(Error::DenseCap {
                size: size as u128,
                cap: DEFAULT_DENSE_CAP,
            });
        }
        let scale = 1.0 / size as f64;
        let data: Vec<f64> = (0..size).map(|j| f(j as f64 * scale)).collect();
        DenseQuantizedTensor::new(vec![2; depth], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.dims.len());
        let mut flat = 0usize;
        for (&i, &d) in index.iter().zip(self.dims.iter()) {
            debug_assert!(i < d);
            flat = flat * d + i;
        }
        self.data[flat]
    }

    /// The `m`-th unfolding matrix: first `m` indices as rows, rest as
    /// columns, both in row-major multi-index order.
    pub fn unfolding(&self, m: usize) -> Result<Mat> {
        if m == 0 || m >= self.dims.len() {
            return Err(Error::contract(format!(
                "unfolding level {m} out of range 1..{}",
                self.dims.len()
            )));
        }
        let rows: usize = self.dims[..m].iter().product();
        let cols: usize = self.dims[m..].iter().product();
        Ok(Mat::from_vec(rows, cols, self.data.clone()))
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        tensor_norm(self, kind)
    }

    /// Max absolute difference against another tensor of identical shape.
    pub fn max_abs_diff(&self, other: &DenseQuantizedTensor) -> f64 {
        assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Tensor norms: `Inf` is the max entry, `Two` scales the Frobenius norm by
/// the square root of the entry count, `Frob` is unscaled.
pub fn tensor_norm(x: &DenseQuantizedTensor, kind: NormKind) -> f64 {
    match kind {
        NormKind::Inf => x.data.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        NormKind::Frob => x.data.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::Two => {
            let frob2: f64 = x.data.iter().map(|v| v * v).sum();
            (frob2 / x.data.len() as f64).sqrt()
        }
    }
}

/// Smallest rank `r` such that the best rank-`r` approximation of the
/// `m`-th unfolding (truncated SVD) has tensor 2-norm error at most `eps`.
///
/// Singular values at the numerical-noise floor are treated as zero, so
/// `eps = 0` returns the numerical rank. The result is always at least 1.
pub fn unfolding_eps_rank(x: &DenseQuantizedTensor, m: usize, eps: f64) -> Result<usize> {
    if eps < 0.0 {
        return Err(Error::contract("eps must be nonnegative"));
    }
    let unf = x.unfolding(m)?;
    let sigma = linalg::singular_values(&unf)?;
    let nrank = numerical_rank(&sigma);
    let scale = 1.0 / (x.data.len() as f64).sqrt();
    let mut tail = 0.0;
    let mut rank = nrank;
    for r in (1..=nrank).rev() {
        let candidate = tail + sigma[r - 1] * sigma[r - 1];
        if candidate.sqrt() * scale <= eps {
            tail = candidate;
            rank = r - 1;
        } else {
            break;
        }
    }
    Ok(rank.max(1))
}

// --- binary container -----------------------------------------------------

const MAGIC: &[u8; 4] = b"QTT1";
const VERSION: u8 = 1;

/// Write the train to the `QTT1` binary container.
///
/// Layout: magic `QTT1`, version `u8`, `u32` depth, `u32` count of external
/// dims followed by the dims, `u32` ranks `r_0..r_K`, then each core as
/// little-endian `f64` in `[sigma][alpha][beta]` order.
pub fn tt_write(tt: &TensorTrain, sink: &mut impl Write) -> Result<()> {
    sink.write_all(MAGIC)?;
    sink.write_all(&[VERSION])?;
    let k = tt.depth() as u32;
    sink.write_all(&k.to_le_bytes())?;
    let dims = tt.external_dims();
    sink.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in &dims {
        sink.write_all(&(*d as u32).to_le_bytes())?;
    }
    for r in tt.ranks() {
        sink.write_all(&(r as u32).to_le_bytes())?;
    }
    for core in tt.cores() {
        for v in core.data() {
            sink.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn tt_read(source: &mut impl Read) -> Result<TensorTrain> {
    let mut magic = [0u8; 4];
    read_exact(source, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut ver = [0u8; 1];
    read_exact(source, &mut ver, "version")?;
    if ver[0] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", ver[0])));
    }
    let k = read_u32(source, "depth")? as usize;
    if k == 0 {
        return Err(Error::Format("depth must be positive".into()));
    }
    let ndims = read_u32(source, "dim count")? as usize;
    if ndims != k {
        return Err(Error::Format(format!(
            "dim count {ndims} does not match depth {k}"
        )));
    }
    let mut dims = Vec::with_capacity(k);
    for _ in 0..k {
        dims.push(read_u32(source, "dims")? as usize);
    }
    let mut ranks = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        ranks.push(read_u32(source, "ranks")? as usize);
    }
    if ranks[0] != 1 || ranks[k] != 1 {
        return Err(Error::Format(format!(
            "boundary ranks must be 1, got r_0={} r_K={}",
            ranks[0], ranks[k]
        )));
    }
    let mut cores = Vec::with_capacity(k);
    for i in 0..k {
        let count = dims[i]
            .checked_mul(ranks[i])
            .and_then(|v| v.checked_mul(ranks[i + 1]))
            .ok_or_else(|| Error::Format("core size overflow".into()))?;
        let mut data = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            read_exact(source, &mut buf, "core payload")?;
            data.push(f64::from_le_bytes(buf));
        }
        cores.push(Core3 {
            ext: dims[i],
            left: ranks[i],
            right: ranks[i + 1],
            data,
        });
    }
    TensorTrain::new(cores).map_err(|e| match e {
        Error::Contract(msg) | Error::Numerical(msg) => Error::Format(msg),
        other => other,
    })
}

pub fn tt_write_file(tt: &TensorTrain, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    tt_write(tt, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn tt_read_file(path: &std::path::Path) -> Result<TensorTrain> {
    let file = std::fs::File::open(path)?;
    let mut r = std::io::BufReader::new(file);
    tt_read(&mut r)
}

fn read_exact(source: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    source
        .read_exact(buf)
        .map_err(|_| Error::Format(format!("truncated payload while reading {what}")))
}

fn read_u32(source: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(source, &mut buf, what)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_tt(rng: &mut ChaCha8Rng, depth: usize, rank: usize) -> TensorTrain {
        let mut cores = Vec::new();
        for k in 0..depth {
            let left = if k == 0 { 1 } else { rank };
            let right = if k == depth - 1 { 1 } else { rank };
            cores.push(Core3::from_fn(2, left, right, |_, _, _| {
                rng.random_range(-1.0..1.0)
            }));
        }
        TensorTrain::new(cores).unwrap()
    }

    #[test]
    fn rank_one_all_ones_evaluates_to_one() {
        let cores = vec![
            Core3::from_fn(2, 1, 1, |_, _, _| 1.0),
            Core3::from_fn(2, 1, 1, |_, _, _| 1.0),
            Core3::from_fn(2, 1, 1, |_, _, _| 1.0),
        ];
        let tt = TensorTrain::new(cores).unwrap();
        for idx in [[0, 0, 0], [1, 0, 1], [1, 1, 1]] {
            assert_eq!(tt.eval(&idx).unwrap(), 1.0);
        }
    }

    #[test]
    fn eval_rejects_bad_indices() {
        let tt = random_tt(&mut ChaCha8Rng::seed_from_u64(0), 4, 3);
        assert!(tt.eval(&[0, 1]).is_err());
        assert!(tt.eval(&[0, 1, 2, 0]).is_err());
    }

    #[test]
    fn invalid_chains_rejected() {
        let bad = vec![Core3::zeros(2, 1, 3), Core3::zeros(2, 2, 1)];
        assert!(TensorTrain::new(bad).is_err());
        let bad_left = vec![Core3::zeros(2, 2, 1)];
        assert!(TensorTrain::new(bad_left).is_err());
        let mut nan_core = Core3::zeros(2, 1, 1);
        nan_core.set(0, 0, 0, f64::NAN);
        assert!(TensorTrain::new(vec![nan_core]).is_err());
    }

    #[test]
    fn dense_matches_eval_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let tt = random_tt(&mut rng, 3, 2);
        let dense = tt.to_dense().unwrap();
        assert_eq!(dense.len(), 8);
        for j in 0..8usize {
            let idx = [(j >> 2) & 1, (j >> 1) & 1, j & 1];
            let direct = tt.eval(&idx).unwrap();
            assert!((dense.get(&idx) - direct).abs() < 1e-13);
            assert_eq!(dense.values()[j], dense.get(&idx));
        }
    }

    #[test]
    fn eval_many_matches_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tt = random_tt(&mut rng, 10, 4);
        let indices: Vec<Vec<usize>> = (0..100)
            .map(|_| (0..10).map(|_| rng.random_range(0..2usize)).collect())
            .collect();
        let batch = tt.eval_many(&indices).unwrap();
        for (idx, &v) in indices.iter().zip(batch.iter()) {
            let direct = tt.eval(idx).unwrap();
            let scale = direct.abs().max(1.0);
            assert!((direct - v).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tt = random_tt(&mut rng, 6, 2);
        match tt.to_dense_with_cap(16) {
            Err(Error::DenseCap { size, cap }) => {
                assert_eq!(size, 64);
                assert_eq!(cap, 16);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn single_core_dense() {
        let core = Core3::from_fn(2, 1, 1, |s, _, _| if s == 0 { -3.5 } else { 2.0 });
        let tt = TensorTrain::new(vec![core]).unwrap();
        let dense = tt.to_dense().unwrap();
        assert_eq!(dense.values(), &[-3.5, 2.0]);
    }

    #[test]
    fn norms_on_all_ones() {
        let dense = DenseQuantizedTensor::from_univariate(|_| 1.0, 4).unwrap();
        assert!((dense.norm(NormKind::Two) - 1.0).abs() < 1e-15);
        assert!((dense.norm(NormKind::Frob) - 4.0).abs() < 1e-15);
        assert_eq!(dense.norm(NormKind::Inf), 1.0);
    }

    #[test]
    fn inf_norm_single_entry() {
        let mut data = vec![0.0; 8];
        data[5] = -2.75;
        let dense = DenseQuantizedTensor::new(vec![2, 2, 2], data).unwrap();
        assert_eq!(dense.norm(NormKind::Inf), 2.75);
    }

    #[test]
    fn norm_inequality_two_le_inf() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let data: Vec<f64> = (0..32).map(|_| rng.random_range(-3.0..3.0)).collect();
            let dense = DenseQuantizedTensor::new(vec![2; 5], data).unwrap();
            assert!(dense.norm(NormKind::Two) <= dense.norm(NormKind::Inf) + 1e-15);
        }
    }

    #[test]
    fn round_tol_zero_preserves_values_and_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let tt = random_tt(&mut rng, 8, 5);
        let rounded = tt.round(0.0).unwrap();
        let before = tt.to_dense().unwrap();
        let after = rounded.to_dense().unwrap();
        let scale = before.norm(NormKind::Inf).max(1.0);
        assert!(before.max_abs_diff(&after) <= 1e-13 * scale);
        for (r_new, r_old) in rounded.ranks().iter().zip(tt.ranks().iter()) {
            assert!(r_new <= r_old);
        }
    }

    #[test]
    fn round_collapses_padded_ranks() {
        // Rank-2 representation of f(x) = x on 10 bits, padded with zeros
        // to bond 5. Rounding at 1e-12 must collapse back to <= 2.
        let depth = 10usize;
        let pad = 5;
        let mut cores = Vec::new();
        for k in 0..depth {
            let left = if k == 0 { 1 } else { pad };
            let right = if k == depth - 1 { 1 } else { pad };
            let mut c = Core3::zeros(2, left, right);
            let w = 0.5f64.powi(k as i32 + 1);
            if k == 0 {
                // [x_part, 1]
                for s in 0..2 {
                    c.set(s, 0, 0, s as f64 * w);
                    c.set(s, 0, 1, 1.0);
                }
            } else if k == depth - 1 {
                for s in 0..2 {
                    c.set(s, 0, 0, 1.0);
                    c.set(s, 1, 0, s as f64 * w);
                }
            } else {
                for s in 0..2 {
                    c.set(s, 0, 0, 1.0);
                    c.set(s, 1, 0, s as f64 * w);
                    c.set(s, 1, 1, 1.0);
                }
            }
            cores.push(c);
        }
        let tt = TensorTrain::new(cores).unwrap();
        let dense = tt.to_dense().unwrap();
        for j in 0..1usize << depth {
            let x = j as f64 / (1u64 << depth) as f64;
            assert!((dense.values()[j] - x).abs() < 1e-13);
        }
        let rounded = tt.round(1e-12).unwrap();
        assert!(rounded.max_rank() <= 2, "ranks {:?}", rounded.ranks());
        let after = rounded.to_dense().unwrap();
        assert!(dense.max_abs_diff(&after) <= 1e-12);
    }

    #[test]
    fn round_respects_relative_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let tt = random_tt(&mut rng, 10, 6);
        let before = tt.to_dense().unwrap();
        let tol = 1e-3;
        let rounded = tt.round(tol).unwrap();
        let after = rounded.to_dense().unwrap();
        let mut diff2 = 0.0;
        for (a, b) in before.values().iter().zip(after.values().iter()) {
            diff2 += (a - b) * (a - b);
        }
        let rel = diff2.sqrt() / before.norm(NormKind::Frob);
        assert!(rel <= tol, "relative error {rel}");
    }

    #[test]
    fn unfolding_rank_constant_is_one() {
        let dense = DenseQuantizedTensor::from_univariate(|_| 2.5, 8).unwrap();
        for m in 1..8 {
            assert_eq!(unfolding_eps_rank(&dense, m, 0.0).unwrap(), 1);
        }
    }

    #[test]
    fn unfolding_rank_linear_is_two() {
        let dense = DenseQuantizedTensor::from_univariate(|x| x, 12).unwrap();
        assert_eq!(unfolding_eps_rank(&dense, 6, 1e-12).unwrap(), 2);
    }

    #[test]
    fn unfolding_rank_monotone_and_bounded() {
        let dense =
            DenseQuantizedTensor::from_univariate(|x| (20.0 * x).sin() + x * x, 10).unwrap();
        for m in 1..10 {
            let cap = (1usize << m).min(1 << (10 - m));
            let mut prev = usize::MAX;
            for eps in [0.0, 1e-10, 1e-6, 1e-2, 1.0] {
                let r = unfolding_eps_rank(&dense, m, eps).unwrap();
                assert!(r >= 1 && r <= cap);
                assert!(r <= prev, "rank must be nonincreasing in eps");
                prev = r;
            }
        }
        assert!(unfolding_eps_rank(&dense, 0, 0.0).is_err());
        assert!(unfolding_eps_rank(&dense, 10, 0.0).is_err());
    }

    #[test]
    fn io_round_trip_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let tt = random_tt(&mut rng, 6, 4);
        let mut buf = Vec::new();
        tt_write(&tt, &mut buf).unwrap();
        let back = tt_read(&mut buf.as_slice()).unwrap();
        assert_eq!(tt.depth(), back.depth());
        for k in 0..tt.depth() {
            assert_eq!(
                tt.core(k).data(),
                back.core(k).data(),
                "core {k} must be bit-identical"
            );
        }
    }

    #[test]
    fn io_rejects_corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let tt = random_tt(&mut rng, 4, 2);
        let mut buf = Vec::new();
        tt_write(&tt, &mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            tt_read(&mut bad_magic.as_slice()),
            Err(Error::Format(_))
        ));

        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(
            tt_read(&mut &truncated[..]),
            Err(Error::Format(_))
        ));

        // Corrupt the final rank (r_K lives right before the core payload).
        // Header: 4 magic + 1 version + 4 depth + 4 ndims + 4*4 dims; ranks
        // occupy the next 5 u32s.
        let mut bad_rank = buf.clone();
        let rank_offset = 4 + 1 + 4 + 4 + 16;
        bad_rank[rank_offset + 16] = 9;
        assert!(matches!(
            tt_read(&mut bad_rank.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
