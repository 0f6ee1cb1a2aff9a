//! Builders for the tensor cores of the interpolative constructions:
//! dense and sparse interpolating cores, decaying-grid cores, the inversion
//! core, the stage-1 Lagrange tensor, multiresolution block cores, and
//! Kronecker-structured directional cores for multivariate functions.

use crate::cheb::{ChebSystem, LocalInterpSystem};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::oracle::FunctionOracle;
use crate::tt::Core3;

/// Interior core in dense or sparse storage.
#[derive(Debug, Clone)]
pub enum Interior {
    Dense(Core3),
    Sparse(SparseCore),
}

/// The three cores of the basic univariate construction.
#[derive(Debug, Clone)]
pub struct CoreSet {
    pub left: Core3,
    pub interior: Interior,
    pub right: Core3,
}

impl CoreSet {
    /// Dense core set for `f` on the given node system.
    pub fn build(f: &FunctionOracle, sys: &ChebSystem) -> Result<CoreSet> {
        Ok(CoreSet {
            left: build_left_core(f, sys)?,
            interior: Interior::Dense(build_interp_core(sys)),
            right: build_right_core(sys),
        })
    }

    /// Sparse-interior core set.
    pub fn build_sparse(f: &FunctionOracle, lsys: &LocalInterpSystem) -> Result<CoreSet> {
        Ok(CoreSet {
            left: build_left_core(f, lsys.base())?,
            interior: Interior::Sparse(build_sparse_core(lsys)),
            right: build_right_core(lsys.base()),
        })
    }
}

/// Left core: `A_L[sigma][0][beta] = f((sigma + c^beta) / 2)`.
/// Consumes exactly `2 (N + 1)` oracle evaluations.
pub fn build_left_core(f: &FunctionOracle, sys: &ChebSystem) -> Result<Core3> {
    if f.dim() != 1 {
        return Err(Error::contract(
            "left core builder needs a univariate oracle",
        ));
    }
    let n = sys.order();
    let mut core = Core3::zeros(2, 1, n + 1);
    for sigma in 0..2 {
        for b in 0..=n {
            let x = (sigma as f64 + sys.node(b)) / 2.0;
            core.set(sigma, 0, b, f.eval_checked(&[x])?);
        }
    }
    Ok(core)
}

/// Interior interpolating core: `A[sigma][alpha][beta] = P^alpha((sigma + c^beta) / 2)`.
/// Independent of the target function.
pub fn build_interp_core(sys: &ChebSystem) -> Core3 {
    let n = sys.order();
    let mut core = Core3::zeros(2, n + 1, n + 1);
    let mut col = vec![0.0; n + 1];
    for sigma in 0..2 {
        for b in 0..=n {
            let x = (sigma as f64 + sys.node(b)) / 2.0;
            sys.cardinals_into(x, &mut col);
            for (a, &v) in col.iter().enumerate() {
                core.set(sigma, a, b, v);
            }
        }
    }
    core
}

/// Right cap: `A_R[sigma][alpha][0] = P^alpha(sigma / 2)`.
pub fn build_right_core(sys: &ChebSystem) -> Core3 {
    let n = sys.order();
    let mut core = Core3::zeros(2, n + 1, 1);
    let mut col = vec![0.0; n + 1];
    for sigma in 0..2 {
        sys.cardinals_into(sigma as f64 / 2.0, &mut col);
        for (a, &v) in col.iter().enumerate() {
            core.set(sigma, a, 0, v);
        }
    }
    core
}

// --- sparse interior --------------------------------------------------------

/// Sparse interpolating core in compressed-column layout: for each
/// `(sigma, beta)` the list of `(alpha, value)` pairs of the local
/// interpolation window. Each column has at most `2M + 2` entries.
#[derive(Debug, Clone)]
pub struct SparseCore {
    order: usize,
    half_width: usize,
    cols: Vec<Vec<Vec<(usize, f64)>>>,
}

impl SparseCore {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn col(&self, sigma: usize, beta: usize) -> &[(usize, f64)] {
        &self.cols[sigma][beta]
    }

    pub fn max_col_nnz(&self) -> usize {
        self.cols
            .iter()
            .flat_map(|s| s.iter())
            .map(|c| c.iter().filter(|(_, v)| *v != 0.0).count())
            .max()
            .unwrap_or(0)
    }

    /// Dense materialization (tests and comparisons only).
    pub fn to_dense(&self) -> Core3 {
        let n = self.order;
        let mut core = Core3::zeros(2, n + 1, n + 1);
        for sigma in 0..2 {
            for b in 0..=n {
                for &(a, v) in self.col(sigma, b) {
                    core.set(sigma, a, b, v);
                }
            }
        }
        core
    }

    /// `out[sigma] = r * A(sigma)` without densifying: cost `O(N r M)`.
    /// `rt` must be the transpose of the `r x (N+1)` factor, so each
    /// accumulation streams a contiguous row.
    pub fn contract_rows(&self, rt: &Mat) -> Core3 {
        let n = self.order;
        let rank = rt.cols();
        debug_assert_eq!(rt.rows(), n + 1);
        let mut out = Core3::zeros(2, rank, n + 1);
        let mut tmp = vec![0.0; rank];
        for sigma in 0..2 {
            for b in 0..=n {
                tmp.fill(0.0);
                for &(a, v) in self.col(sigma, b) {
                    let row = rt.row(a);
                    for (t, &x) in tmp.iter_mut().zip(row.iter()) {
                        *t += v * x;
                    }
                }
                for (i, &t) in tmp.iter().enumerate() {
                    out.set(sigma, i, b, t);
                }
            }
        }
        out
    }
}

/// Sparse counterpart of [`build_interp_core`]:
/// `A~[sigma][alpha][beta] = I P^alpha((sigma + c^beta) / 2)` with the
/// local interpolation operator of the given system.
pub fn build_sparse_core(lsys: &LocalInterpSystem) -> SparseCore {
    let n = lsys.base().order();
    let mut cols = vec![vec![Vec::new(); n + 1], vec![Vec::new(); n + 1]];
    for (sigma, level) in cols.iter_mut().enumerate() {
        for (b, slot) in level.iter_mut().enumerate() {
            let x = (sigma as f64 + lsys.base().node(b)) / 2.0;
            *slot = lsys.local_weights(x);
        }
    }
    SparseCore {
        order: n,
        half_width: lsys.half_width(),
        cols,
    }
}

// --- decaying-grid cores -----------------------------------------------------

/// Grid-size schedule for the a-priori decaying-rank construction:
/// `N_k = ceil(2^-k Omega + Delta)`, `k = 1..K`.
#[derive(Debug, Clone)]
pub struct DecaySchedule {
    omega: f64,
    delta: f64,
    depth: usize,
    orders: Vec<usize>,
}

impl DecaySchedule {
    pub fn new(omega: f64, delta: f64, depth: usize) -> Result<Self> {
        if omega.is_nan() || delta.is_nan() || omega <= 0.0 || delta <= 0.0 {
            return Err(Error::contract(
                "decay schedule needs omega > 0 and delta > 0",
            ));
        }
        if depth < 2 {
            return Err(Error::contract("decay schedule needs depth >= 2"));
        }
        let orders = (1..=depth)
            .map(|k| (omega * 0.5f64.powi(k as i32) + delta).ceil() as usize)
            .collect();
        Ok(DecaySchedule {
            omega,
            delta,
            depth,
            orders,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `N_k` for `k = 1..=K`.
    pub fn order(&self, k: usize) -> usize {
        self.orders[k - 1]
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }
}

/// Interior cores `A_2..A_{K-1}` plus the right cap for the decaying
/// schedule. Core `k` has shape `2 x (N_{k-1}+1) x (N_k+1)` with entries
/// `P_{N_{k-1}}^alpha((sigma + c_{N_k}^beta) / 2)`; the cap evaluates the
/// level-(K-1) cardinals at `sigma / 2` (the node-0 column of the would-be
/// `A_K`).
pub fn build_decay_cores(sched: &DecaySchedule) -> Result<Vec<Core3>> {
    let depth = sched.depth();
    let mut cores = Vec::with_capacity(depth - 1);
    for k in 2..depth {
        let sys_out = ChebSystem::new(sched.order(k))?;
        let sys_in = ChebSystem::new(sched.order(k - 1))?;
        let (n_in, n_out) = (sys_in.order(), sys_out.order());
        let mut core = Core3::zeros(2, n_in + 1, n_out + 1);
        let mut col = vec![0.0; n_in + 1];
        for sigma in 0..2 {
            for b in 0..=n_out {
                let x = (sigma as f64 + sys_out.node(b)) / 2.0;
                sys_in.cardinals_into(x, &mut col);
                for (a, &v) in col.iter().enumerate() {
                    core.set(sigma, a, b, v);
                }
            }
        }
        cores.push(core);
    }
    let sys_last = ChebSystem::new(sched.order(depth - 1))?;
    cores.push(build_right_core(&sys_last));
    Ok(cores)
}

// --- inversion ----------------------------------------------------------------

/// Two-branch generalized inverse of the interpolating core: nodes with
/// `c^beta <= 1/2` load the `sigma = 0` branch at `2 c^beta`, the rest load
/// the `sigma = 1` branch at `2 c^beta - 1`. Satisfies
/// `sum_{sigma, beta} A[sigma][alpha][beta] G[sigma][beta][gamma] = delta(alpha, gamma)`
/// with all entries bounded by 1.
pub fn build_inverse_core(sys: &ChebSystem) -> Core3 {
    let n = sys.order();
    let mut core = Core3::zeros(2, n + 1, n + 1);
    let mut col = vec![0.0; n + 1];
    // The right bond carries the coarse node: G[sigma][alpha][beta] is the
    // cardinal P^alpha evaluated at the rescaled node 2 c^beta - sigma, on
    // the branch selected by c^beta.
    for b in 0..=n {
        let c = sys.node(b);
        let (sigma, x) = if c <= 0.5 {
            (0, 2.0 * c)
        } else {
            (1, 2.0 * c - 1.0)
        };
        sys.cardinals_into(x, &mut col);
        for (a, &v) in col.iter().enumerate() {
            core.set(sigma, a, b, v);
        }
    }
    core
}

// --- stage-1 Lagrange tensor ----------------------------------------------

/// Maximum small depth admitted by [`build_lagrange_tensor`]; equispaced
/// Lagrange interpolation beyond a handful of dyadic nodes is unstable.
pub const MAX_LAGRANGE_DEPTH: usize = 4;

/// Lagrange interpolation tensor `L` of shape `2^q x (N+1)`:
/// `L[sigma_{1:q}][beta]` is the Lagrange weight of the dyadic node
/// `sum_k 2^-k sigma_k` for the target `c^beta`, over the `2^q` equispaced
/// dyadic nodes of depth `q`.
pub fn build_lagrange_tensor(sys: &ChebSystem, q: usize) -> Result<Mat> {
    if !(1..=MAX_LAGRANGE_DEPTH).contains(&q) {
        return Err(Error::contract(format!(
            "lagrange depth must satisfy 1 <= q <= {MAX_LAGRANGE_DEPTH}, got {q}"
        )));
    }
    let count = 1usize << q;
    let scale = 1.0 / count as f64;
    let nodes: Vec<f64> = (0..count).map(|j| j as f64 * scale).collect();
    let n = sys.order();
    let mut l = Mat::zeros(count, n + 1);
    for (s, &xs) in nodes.iter().enumerate() {
        for b in 0..=n {
            let target = sys.node(b);
            let mut w = 1.0;
            for (t, &xt) in nodes.iter().enumerate() {
                if t != s {
                    w *= (target - xt) / (xs - xt);
                }
            }
            l.set(s, b, w);
        }
    }
    Ok(l)
}

// --- multiresolution block cores ---------------------------------------------

/// Per-level sets of dangerous dyadic prefixes. Level `k` prefixes are
/// stored as `k`-bit integers with the first bit most significant; the
/// nesting invariant (each dangerous prefix extends a dangerous prefix one
/// level up) is enforced at construction.
#[derive(Debug, Clone)]
pub struct DangerTree {
    depth: usize,
    /// `levels[k-1]` is `S_k`, for `k = 1..=depth-1`; `S_depth` is empty.
    levels: Vec<Vec<u64>>,
}

impl DangerTree {
    pub fn new(depth: usize, levels: Vec<Vec<u64>>) -> Result<Self> {
        if depth < 2 {
            return Err(Error::contract("danger tree needs depth >= 2"));
        }
        if levels.len() + 1 != depth {
            return Err(Error::contract(format!(
                "danger tree expects {} levels for depth {depth}, got {}",
                depth - 1,
                levels.len()
            )));
        }
        for (i, level) in levels.iter().enumerate() {
            let k = i + 1;
            let cap = 1u64 << k;
            for &p in level {
                if p >= cap {
                    return Err(Error::contract(format!(
                        "prefix {p} does not fit in {k} bits"
                    )));
                }
            }
            let mut sorted = level.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != level.len() {
                return Err(Error::contract(format!("duplicate prefixes at level {k}")));
            }
            if i > 0 {
                for &p in level {
                    if !levels[i - 1].contains(&(p >> 1)) {
                        return Err(Error::contract(format!(
                            "prefix {p} at level {k} does not extend a dangerous prefix"
                        )));
                    }
                }
            }
        }
        Ok(DangerTree { depth, levels })
    }

    /// No dangerous intervals: the construction degenerates to the basic one.
    pub fn empty(depth: usize) -> Result<Self> {
        DangerTree::new(depth, vec![Vec::new(); depth - 1])
    }

    /// The all-zeros chain `S_k = {0...0}`, suited to a sharp feature at
    /// the left endpoint (square root, narrow Gaussian, ...).
    pub fn left_edge(depth: usize) -> Result<Self> {
        DangerTree::new(depth, vec![vec![0]; depth - 1])
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `S_k` (empty for `k = depth`).
    pub fn prefixes(&self, k: usize) -> &[u64] {
        if k == self.depth {
            &[]
        } else {
            &self.levels[k - 1]
        }
    }

    /// `q_k = |S_k|`.
    pub fn count(&self, k: usize) -> usize {
        self.prefixes(k).len()
    }

    /// Dyadic point of a level-`k` prefix.
    pub fn x_value(k: usize, prefix: u64) -> f64 {
        prefix as f64 * 0.5f64.powi(k as i32)
    }

    /// Exact number of oracle evaluations the multiresolution builder
    /// spends: `N + 1` per safe child of a dangerous prefix (counting the
    /// root as dangerous) plus 2 per deepest dangerous prefix.
    pub fn expected_evals(&self, order: usize) -> u64 {
        let n1 = (order + 1) as u64;
        let mut safe_children = 0u64;
        for sigma in 0..2u64 {
            if !self.prefixes(1).contains(&sigma) {
                safe_children += 1;
            }
        }
        for k in 2..self.depth {
            for &p in self.prefixes(k - 1) {
                for sigma in 0..2u64 {
                    if !self.prefixes(k).contains(&((p << 1) | sigma)) {
                        safe_children += 1;
                    }
                }
            }
        }
        n1 * safe_children + 2 * self.count(self.depth - 1) as u64
    }
}

/// Block cores `A_1..A_K` of the multiresolution construction. Safe
/// prefixes carry interpolation data; dangerous ones defer evaluation to
/// finer levels through indicator blocks, bottoming out in exact function
/// values at depth `K`.
pub fn build_multires_cores(
    f: &FunctionOracle,
    sys: &ChebSystem,
    depth: usize,
    danger: &DangerTree,
) -> Result<Vec<Core3>> {
    if depth < 2 {
        return Err(Error::contract("multiresolution construction needs K >= 2"));
    }
    if danger.depth() != depth {
        return Err(Error::contract(format!(
            "danger tree depth {} does not match K = {depth}",
            danger.depth()
        )));
    }
    if f.dim() != 1 {
        return Err(Error::contract(
            "multiresolution builder needs a univariate oracle",
        ));
    }
    let n = sys.order();
    let interp = build_interp_core(sys);
    let right = build_right_core(sys);
    let mut cores = Vec::with_capacity(depth);

    // A_1 = T_{<=1}: function rows for safe level-1 prefixes, an indicator
    // column per dangerous one.
    let q1 = danger.count(1);
    let mut first = Core3::zeros(2, 1, n + 1 + q1);
    for sigma in 0..2u64 {
        if !danger.prefixes(1).contains(&sigma) {
            for b in 0..=n {
                let x = (sigma as f64 + sys.node(b)) / 2.0;
                first.set(sigma as usize, 0, b, f.eval_checked(&[x])?);
            }
        }
        for (i, &p) in danger.prefixes(1).iter().enumerate() {
            if p == sigma {
                first.set(sigma as usize, 0, n + 1 + i, 1.0);
            }
        }
    }
    cores.push(first);

    for k in 2..depth {
        let q_in = danger.count(k - 1);
        let q_out = danger.count(k);
        let mut core = Core3::zeros(2, n + 1 + q_in, n + 1 + q_out);
        for sigma in 0..2usize {
            for a in 0..=n {
                for b in 0..=n {
                    core.set(sigma, a, b, interp.get(sigma, a, b));
                }
            }
            for (i, &p) in danger.prefixes(k - 1).iter().enumerate() {
                let child = (p << 1) | sigma as u64;
                if danger.prefixes(k).contains(&child) {
                    for (j, &pk) in danger.prefixes(k).iter().enumerate() {
                        if pk == child {
                            core.set(sigma, n + 1 + i, n + 1 + j, 1.0);
                        }
                    }
                } else {
                    let x0 = DangerTree::x_value(k, child);
                    let h = 0.5f64.powi(k as i32);
                    for b in 0..=n {
                        core.set(
                            sigma,
                            n + 1 + i,
                            b,
                            f.eval_checked(&[x0 + h * sys.node(b)])?,
                        );
                    }
                }
            }
        }
        cores.push(core);
    }

    // Final core: right cap stacked over exact evaluations for the deepest
    // dangerous prefixes.
    let q_last = danger.count(depth - 1);
    let mut last = Core3::zeros(2, n + 1 + q_last, 1);
    for sigma in 0..2usize {
        for a in 0..=n {
            last.set(sigma, a, 0, right.get(sigma, a, 0));
        }
        for (i, &p) in danger.prefixes(depth - 1).iter().enumerate() {
            let x = DangerTree::x_value(depth - 1, p) + 0.5f64.powi(depth as i32) * sigma as f64;
            last.set(sigma, n + 1 + i, 0, f.eval_checked(&[x])?);
        }
    }
    cores.push(last);
    Ok(cores)
}

// --- multivariate Kronecker cores ----------------------------------------------

/// Left core on the product grid: shape `2 x 1 x (N+1)^d` with
/// `A_L[sigma][0][(b_1..b_d)] = f((sigma + c^{b_1})/2, c^{b_2}, ..., c^{b_d})`.
/// Consumes `2 (N+1)^d` oracle evaluations.
pub fn build_multivariate_left_core(
    f: &FunctionOracle,
    sys: &ChebSystem,
    dim: usize,
) -> Result<Core3> {
    if dim == 0 || f.dim() != dim {
        return Err(Error::contract(format!(
            "oracle dimension {} does not match requested dimension {dim}",
            f.dim()
        )));
    }
    let n = sys.order();
    let width = (n + 1)
        .checked_pow(dim as u32)
        .ok_or_else(|| Error::contract("product grid too large"))?;
    let mut core = Core3::zeros(2, 1, width);
    let mut point = vec![0.0; dim];
    let mut beta = vec![0usize; dim];
    for sigma in 0..2 {
        for flat in 0..width {
            let mut rem = flat;
            for j in (0..dim).rev() {
                beta[j] = rem % (n + 1);
                rem /= n + 1;
            }
            point[0] = (sigma as f64 + sys.node(beta[0])) / 2.0;
            for j in 1..dim {
                point[j] = sys.node(beta[j]);
            }
            core.set(sigma, 0, flat, f.eval_checked(&point)?);
        }
    }
    Ok(core)
}

/// Apply a directional Kronecker core `I ⊗ .. ⊗ A(sigma) ⊗ .. ⊗ I` to the
/// rows of `r` without materializing it: contracts mode `mode` of the
/// row-major mode structure `dims` with the `n_in x n_out` slice of `a`.
/// Cost is `O(rows * prod(dims) * n_out)`, i.e. `O(r N^{d+1})` for the
/// interpolating core.
pub fn apply_mode_dense(r: &Mat, dims: &[usize], mode: usize, a: &Core3, sigma: usize) -> Mat {
    let n_in = a.left();
    let n_out = a.right();
    assert_eq!(dims[mode], n_in, "mode size must match core");
    let d_pre: usize = dims[..mode].iter().product();
    let d_post: usize = dims[mode + 1..].iter().product();
    assert_eq!(r.cols(), d_pre * n_in * d_post);
    let slice = a.slice(sigma);
    let mut out = Mat::zeros(r.rows(), d_pre * n_out * d_post);
    for i in 0..r.rows() {
        let src = r.row(i);
        let dst = out.row_mut(i);
        for pre in 0..d_pre {
            let src_block = &src[pre * n_in * d_post..(pre + 1) * n_in * d_post];
            let dst_block = &mut dst[pre * n_out * d_post..(pre + 1) * n_out * d_post];
            for alpha in 0..n_in {
                let src_vec = &src_block[alpha * d_post..(alpha + 1) * d_post];
                let arow = &slice[alpha * n_out..(alpha + 1) * n_out];
                for (b, &w) in arow.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let dst_vec = &mut dst_block[b * d_post..(b + 1) * d_post];
                    for (o, &s) in dst_vec.iter_mut().zip(src_vec.iter()) {
                        *o += w * s;
                    }
                }
            }
        }
    }
    out
}

/// Sparse counterpart of [`apply_mode_dense`]: cost `O(r N^d M)`.
pub fn apply_mode_sparse(
    r: &Mat,
    dims: &[usize],
    mode: usize,
    a: &SparseCore,
    sigma: usize,
) -> Mat {
    let n = a.order();
    let n_in = n + 1;
    let n_out = n + 1;
    assert_eq!(dims[mode], n_in, "mode size must match core");
    let d_pre: usize = dims[..mode].iter().product();
    let d_post: usize = dims[mode + 1..].iter().product();
    assert_eq!(r.cols(), d_pre * n_in * d_post);
    let mut out = Mat::zeros(r.rows(), d_pre * n_out * d_post);
    for i in 0..r.rows() {
        let src = r.row(i);
        let dst = out.row_mut(i);
        for pre in 0..d_pre {
            let src_block = &src[pre * n_in * d_post..(pre + 1) * n_in * d_post];
            let dst_block = &mut dst[pre * n_out * d_post..(pre + 1) * n_out * d_post];
            for b in 0..n_out {
                let dst_vec = &mut dst_block[b * d_post..(b + 1) * d_post];
                for &(alpha, w) in a.col(sigma, b) {
                    let src_vec = &src_block[alpha * d_post..(alpha + 1) * d_post];
                    for (o, &s) in dst_vec.iter_mut().zip(src_vec.iter()) {
                        *o += w * s;
                    }
                }
            }
        }
    }
    out
}
