//! Construction pipelines turning a function oracle into a tensor train:
//! the basic interpolative chain, its rank-revealing variant (dense or
//! sparse interior), the a-priori decaying-grid construction, the
//! multiresolution block construction, and the multivariate constructions
//! in interleaved and serial bit orderings.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::cheb::{ChebSystem, LocalInterpSystem};
use crate::cores::{
    apply_mode_dense, apply_mode_sparse, build_decay_cores, build_interp_core, build_left_core,
    build_multires_cores, build_multivariate_left_core, build_right_core, build_sparse_core,
    DangerTree, DecaySchedule, SparseCore,
};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::oracle::FunctionOracle;
use crate::tt::{Core3, TensorTrain};

/// How the rank-revealing pipeline chooses each truncation rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyMode {
    /// Keep the smallest rank whose discarded Frobenius mass stays within
    /// `epsilon * sqrt(2^k)` at level `k`.
    AbsoluteBudget,
    /// Ignore the budget; keep every numerically nonzero direction up to
    /// the rank cap.
    RankCap,
}

/// Truncation policy of the rank-revealing construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub epsilon: f64,
    pub max_rank: Option<usize>,
    pub mode: PolicyMode,
}

impl TruncationPolicy {
    /// Frobenius budget `epsilon * sqrt(2^k)` at each level.
    pub fn absolute(epsilon: f64) -> Self {
        TruncationPolicy {
            epsilon,
            max_rank: None,
            mode: PolicyMode::AbsoluteBudget,
        }
    }

    /// Fixed rank cap, no mass-based truncation.
    pub fn rank_cap(rank: usize) -> Self {
        TruncationPolicy {
            epsilon: 0.0,
            max_rank: Some(rank),
            mode: PolicyMode::RankCap,
        }
    }

    pub fn with_max_rank(mut self, rank: usize) -> Self {
        self.max_rank = Some(rank);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::contract("truncation budget must be nonnegative"));
        }
        if self.max_rank == Some(0) {
            return Err(Error::contract("rank cap must be positive"));
        }
        if self.mode == PolicyMode::RankCap && self.max_rank.is_none() {
            return Err(Error::contract("rank-cap mode needs a rank cap"));
        }
        Ok(())
    }

    /// Truncation rank for the SVD at (1-based) level `k`.
    fn pick_rank(&self, svd: &linalg::Svd, level: usize) -> usize {
        let budget = match self.mode {
            PolicyMode::AbsoluteBudget => self.epsilon * 2f64.powi(level as i32).sqrt(),
            PolicyMode::RankCap => 0.0,
        };
        let mut rank = svd.rank_for_frobenius_budget(budget);
        // Directions at the numerical noise floor carry no information.
        let floor = svd.sigma[0] * f64::EPSILON * (svd.sigma.len() as f64) * 16.0;
        let nrank = svd.sigma.iter().take_while(|&&s| s > floor).count().max(1);
        rank = rank.min(nrank);
        if let Some(cap) = self.max_rank {
            rank = rank.min(cap);
        }
        rank.max(1)
    }
}

/// What a construction did: final bonds, oracle usage, discarded mass per
/// truncation level, and wall time.
#[derive(Debug, Clone)]
pub struct BuildReport {
    pub ranks: Vec<usize>,
    pub oracle_evals: u64,
    pub discarded: Vec<f64>,
    pub wall_time: Duration,
}

impl BuildReport {
    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(1)
    }
}

impl std::fmt::Display for BuildReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ranks={:?} max_rank={} oracle_evals={} wall_ms={:.3}",
            self.ranks,
            self.max_rank(),
            self.oracle_evals,
            self.wall_time.as_secs_f64() * 1e3
        )?;
        if !self.discarded.is_empty() {
            let total: f64 = self.discarded.iter().map(|d| d * d).sum::<f64>().sqrt();
            write!(f, " discarded_mass={total:.3e}")?;
        }
        Ok(())
    }
}

/// Basic interpolative chain `A_L A^{K-2} A_R`: all interior bonds are
/// `N + 1`, the interior core is shared, and only `2 (N + 1)` oracle
/// evaluations are spent. Exact for polynomials of degree at most `N`.
pub fn construct_basic(
    f: &FunctionOracle,
    sys: &ChebSystem,
    depth: usize,
) -> Result<(TensorTrain, BuildReport)> {
    if depth < 2 {
        return Err(Error::contract("basic construction needs K >= 2"));
    }
    let start = Instant::now();
    let calls_before = f.calls();
    let left = Arc::new(build_left_core(f, sys)?);
    let interior = Arc::new(build_interp_core(sys));
    let right = Arc::new(build_right_core(sys));
    let mut cores: Vec<Arc<Core3>> = Vec::with_capacity(depth);
    cores.push(left);
    for _ in 0..depth - 2 {
        cores.push(interior.clone());
    }
    cores.push(right);
    let tt = TensorTrain::from_shared(cores)?;
    let report = BuildReport {
        ranks: tt.ranks(),
        oracle_evals: f.calls() - calls_before,
        discarded: Vec::new(),
        wall_time: start.elapsed(),
    };
    Ok((tt, report))
}

enum InteriorKernel<'a> {
    Dense(&'a Core3),
    Sparse(&'a SparseCore),
}

impl InteriorKernel<'_> {
    /// `B[sigma] = r * A(sigma)` as a core of shape `2 x rows x (N+1)`.
    fn contract(&self, r: &Mat) -> Core3 {
        match self {
            InteriorKernel::Dense(a) => {
                let n1 = a.right();
                let mut out = Core3::zeros(2, r.rows(), n1);
                for sigma in 0..2 {
                    let slice = a.slice(sigma);
                    for i in 0..r.rows() {
                        let rrow = r.row(i);
                        for (alpha, &w) in rrow.iter().enumerate() {
                            if w == 0.0 {
                                continue;
                            }
                            let arow = &slice[alpha * n1..(alpha + 1) * n1];
                            for (b, &av) in arow.iter().enumerate() {
                                let v = out.get(sigma, i, b) + w * av;
                                out.set(sigma, i, b, v);
                            }
                        }
                    }
                }
                out
            }
            InteriorKernel::Sparse(a) => a.contract_rows(&r.transpose()),
        }
    }
}

fn rank_revealing_chain(
    left: Core3,
    interior: InteriorKernel<'_>,
    right: &Core3,
    depth: usize,
    policy: &TruncationPolicy,
) -> Result<(Vec<Core3>, Vec<f64>)> {
    let mut cores = Vec::with_capacity(depth);
    let mut discarded = Vec::with_capacity(depth - 1);

    // Level 1: truncated SVD of A_L itself (rank-1 detection for constants).
    let svd = linalg::svd(&left.unfold_left())
        .map_err(|e| Error::Numerical(format!("svd failed at level 1: {e}")))?;
    let rank = policy.pick_rank(&svd, 1);
    discarded.push(svd.discarded_mass(rank));
    cores.push(Core3::from_unfold_left(2, 1, &svd.u_truncated(rank)));
    let mut r_mat = svd.sv_truncated(rank);

    for level in 2..depth {
        let b = interior.contract(&r_mat);
        let svd = linalg::svd(&b.unfold_left())
            .map_err(|e| Error::Numerical(format!("svd failed at level {level}: {e}")))?;
        let rank = policy.pick_rank(&svd, level);
        discarded.push(svd.discarded_mass(rank));
        cores.push(Core3::from_unfold_left(2, b.left(), &svd.u_truncated(rank)));
        r_mat = svd.sv_truncated(rank);
    }

    // Final level: merge R with the right cap, no truncation.
    let mut last = Core3::zeros(2, r_mat.rows(), 1);
    for sigma in 0..2 {
        for i in 0..r_mat.rows() {
            let mut acc = 0.0;
            for alpha in 0..right.left() {
                acc += r_mat.get(i, alpha) * right.get(sigma, alpha, 0);
            }
            last.set(sigma, i, 0, acc);
        }
    }
    cores.push(last);
    Ok((cores, discarded))
}

/// Rank-revealing construction: level-by-level truncated SVDs with
/// Frobenius budget `epsilon * sqrt(2^k)`, dense interior core. The
/// truncation error satisfies the a-posteriori bound
/// `|T - S|_2 <= E_{1,N}[f] + (K - 2) Lambda_N epsilon`.
pub fn construct_rank_revealing(
    f: &FunctionOracle,
    sys: &ChebSystem,
    depth: usize,
    policy: &TruncationPolicy,
) -> Result<(TensorTrain, BuildReport)> {
    policy.validate()?;
    if depth < 2 {
        return Err(Error::contract("rank-revealing construction needs K >= 2"));
    }
    let start = Instant::now();
    let calls_before = f.calls();
    let left = build_left_core(f, sys)?;
    let interior = build_interp_core(sys);
    let right = build_right_core(sys);
    let (cores, discarded) = rank_revealing_chain(
        left,
        InteriorKernel::Dense(&interior),
        &right,
        depth,
        policy,
    )?;
    let tt = TensorTrain::new(cores)?;
    let report = BuildReport {
        ranks: tt.ranks(),
        oracle_evals: f.calls() - calls_before,
        discarded,
        wall_time: start.elapsed(),
    };
    Ok((tt, report))
}

/// Sparse-interior rank-revealing construction: same budgets, but each
/// level contracts the compressed-column core, dropping the level cost
/// from `O(N^2 r)` to `O(N r (M + r))`.
pub fn construct_rank_revealing_sparse(
    f: &FunctionOracle,
    lsys: &LocalInterpSystem,
    depth: usize,
    policy: &TruncationPolicy,
) -> Result<(TensorTrain, BuildReport)> {
    policy.validate()?;
    if depth < 2 {
        return Err(Error::contract("rank-revealing construction needs K >= 2"));
    }
    let start = Instant::now();
    let calls_before = f.calls();
    let left = build_left_core(f, lsys.base())?;
    let interior = build_sparse_core(lsys);
    let right = build_right_core(lsys.base());
    let (cores, discarded) = rank_revealing_chain(
        left,
        InteriorKernel::Sparse(&interior),
        &right,
        depth,
        policy,
    )?;
    let tt = TensorTrain::new(cores)?;
    let report = BuildReport {
        ranks: tt.ranks(),
        oracle_evals: f.calls() - calls_before,
        discarded,
        wall_time: start.elapsed(),
    };
    Ok((tt, report))
}

/// A-priori decaying-rank construction for (presumed) bandlimited targets:
/// interpolation orders follow the schedule `N_k = ceil(2^-k Omega + Delta)`
/// with no SVD truncation; a lossless left QR sweep afterwards clips bond
/// `k` to `min(2^k, N_k + 1)` structurally, without changing any value.
pub fn construct_decay(
    f: &FunctionOracle,
    sched: &DecaySchedule,
) -> Result<(TensorTrain, BuildReport)> {
    let start = Instant::now();
    let calls_before = f.calls();
    let sys1 = ChebSystem::new(sched.order(1))?;
    let mut cores = vec![build_left_core(f, &sys1)?];
    cores.extend(build_decay_cores(sched)?);
    let tt = TensorTrain::new(cores)?.left_orthogonalize()?;
    let report = BuildReport {
        ranks: tt.ranks(),
        oracle_evals: f.calls() - calls_before,
        discarded: Vec::new(),
        wall_time: start.elapsed(),
    };
    Ok((tt, report))
}

/// Multiresolution construction: Chebyshev interpolation on safe dyadic
/// subintervals, deferral through indicator blocks on dangerous ones, and
/// exact evaluation at the deepest level.
pub fn construct_multires(
    f: &FunctionOracle,
    sys: &ChebSystem,
    depth: usize,
    danger: &DangerTree,
) -> Result<(TensorTrain, BuildReport)> {
    let start = Instant::now();
    let calls_before = f.calls();
    let cores = build_multires_cores(f, sys, depth, danger)?;
    let tt = TensorTrain::new(cores)?;
    let report = BuildReport {
        ranks: tt.ranks(),
        oracle_evals: f.calls() - calls_before,
        discarded: Vec::new(),
        wall_time: start.elapsed(),
    };
    Ok((tt, report))
}

/// Bit ordering of a multivariate quantized tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitOrder {
    /// Bits grouped by depth: `(s_11 .. s_1d, s_21 .. s_2d, ...)`.
    Interleaved,
    /// Bits grouped by variable: `(s_11 .. s_K1, s_12 .. s_K2, ...)`.
    Serial,
}

/// Multi-index of the quantized tensor for dyadic coordinates
/// `x_i = coords[i] * 2^-depth` under the given ordering.
pub fn multivariate_index(coords: &[u64], depth: usize, order: BitOrder) -> Vec<usize> {
    let d = coords.len();
    let mut index = Vec::with_capacity(d * depth);
    match order {
        BitOrder::Interleaved => {
            for k in 1..=depth {
                for &c in coords {
                    index.push(((c >> (depth - k)) & 1) as usize);
                }
            }
        }
        BitOrder::Serial => {
            for &c in coords {
                for k in 1..=depth {
                    index.push(((c >> (depth - k)) & 1) as usize);
                }
            }
        }
    }
    index
}

/// Multivariate rank-revealing construction over `[0,1]^d`, `d` in `{2, 3}`.
///
/// Directional cores are applied as Kronecker mode contractions and never
/// materialized, so each level costs `O(N^{d+1} r)` dense or `O(N^d r M)`
/// sparse. Pass `local` to use the sparse interior.
pub fn construct_multivariate(
    f: &FunctionOracle,
    sys: &ChebSystem,
    dim: usize,
    depth: usize,
    order: BitOrder,
    policy: &TruncationPolicy,
    local: Option<&LocalInterpSystem>,
) -> Result<(TensorTrain, BuildReport)> {
    policy.validate()?;
    if !(2..=3).contains(&dim) {
        return Err(Error::contract(format!(
            "multivariate construction needs d in 2..=3, got {dim}"
        )));
    }
    if depth < 2 {
        return Err(Error::contract("multivariate construction needs K >= 2"));
    }
    if f.dim() != dim {
        return Err(Error::contract("oracle dimension does not match d"));
    }
    let start = Instant::now();
    let calls_before = f.calls();
    let n1 = sys.order() + 1;
    let interior = build_interp_core(sys);
    let sparse = local.map(build_sparse_core);
    let cap = build_right_core(sys);

    // Plan the chain after the left core as (mode, is_cap) steps against a
    // mutable mode structure; capped modes shrink to size 1 and are dropped.
    let mut steps: Vec<(usize, bool)> = Vec::with_capacity(dim * depth - 1);
    match order {
        BitOrder::Interleaved => {
            for var in 1..dim {
                steps.push((var, false));
            }
            for _k in 2..depth {
                for var in 0..dim {
                    steps.push((var, false));
                }
            }
            for _var in 0..dim {
                // Caps always target mode 0: earlier caps remove their mode.
                steps.push((0, true));
            }
        }
        BitOrder::Serial => {
            // First variable: A_L consumed its leading bit. After capping a
            // variable, the next one becomes mode 0.
            for _k in 2..depth {
                steps.push((0, false));
            }
            steps.push((0, true));
            for _var in 1..dim {
                for _k in 1..depth {
                    steps.push((0, false));
                }
                steps.push((0, true));
            }
        }
    }
    debug_assert_eq!(steps.len(), dim * depth - 1);

    let left = build_multivariate_left_core(f, sys, dim)?;
    let mut cores: Vec<Core3> = Vec::with_capacity(dim * depth);
    let mut discarded = Vec::new();

    let svd = linalg::svd(&left.unfold_left())
        .map_err(|e| Error::Numerical(format!("svd failed at level 1: {e}")))?;
    let rank = policy.pick_rank(&svd, 1);
    discarded.push(svd.discarded_mass(rank));
    cores.push(Core3::from_unfold_left(2, 1, &svd.u_truncated(rank)));
    let mut r_mat = svd.sv_truncated(rank);
    let mut dims: Vec<usize> = vec![n1; dim];

    for (pos, &(mode, is_cap)) in steps.iter().enumerate() {
        let level = pos + 2;
        let last = pos + 1 == steps.len();
        let applied: [Mat; 2] = if is_cap {
            [
                apply_mode_dense(&r_mat, &dims, mode, &cap, 0),
                apply_mode_dense(&r_mat, &dims, mode, &cap, 1),
            ]
        } else if let Some(sc) = &sparse {
            [
                apply_mode_sparse(&r_mat, &dims, mode, sc, 0),
                apply_mode_sparse(&r_mat, &dims, mode, sc, 1),
            ]
        } else {
            [
                apply_mode_dense(&r_mat, &dims, mode, &interior, 0),
                apply_mode_dense(&r_mat, &dims, mode, &interior, 1),
            ]
        };
        if is_cap {
            dims.remove(mode);
        }
        let width = applied[0].cols();
        let b = Core3::from_fn(2, r_mat.rows(), width, |s, i, j| applied[s].get(i, j));
        if last {
            cores.push(b);
            break;
        }
        let svd = linalg::svd(&b.unfold_left())
            .map_err(|e| Error::Numerical(format!("svd failed at level {level}: {e}")))?;
        let rank = policy.pick_rank(&svd, level);
        discarded.push(svd.discarded_mass(rank));
        cores.push(Core3::from_unfold_left(2, b.left(), &svd.u_truncated(rank)));
        r_mat = svd.sv_truncated(rank);
    }

    let tt = TensorTrain::new(cores)?;
    let report = BuildReport {
        ranks: tt.ranks(),
        oracle_evals: f.calls() - calls_before,
        discarded,
        wall_time: start.elapsed(),
    };
    Ok((tt, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::{tensor_norm, unfolding_eps_rank, DenseQuantizedTensor, NormKind};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dyadic_index(j: u64, depth: usize) -> Vec<usize> {
        (0..depth)
            .map(|k| ((j >> (depth - 1 - k)) & 1) as usize)
            .collect()
    }

    fn brute_force_inf_error(tt: &TensorTrain, f: impl Fn(f64) -> f64, depth: usize) -> f64 {
        let dense = tt.to_dense().unwrap();
        let truth = DenseQuantizedTensor::from_univariate(f, depth).unwrap();
        dense.max_abs_diff(&truth)
    }

    fn sampled_inf_error(
        tt: &TensorTrain,
        f: impl Fn(f64) -> f64,
        depth: usize,
        samples: usize,
        seed: u64,
    ) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = 1u64 << depth;
        let mut indices: Vec<Vec<usize>> = Vec::with_capacity(samples);
        let mut xs = Vec::with_capacity(samples);
        for _ in 0..samples {
            let j = rng.random_range(0..size);
            indices.push(dyadic_index(j, depth));
            xs.push(j as f64 / size as f64);
        }
        let values = tt.eval_many(&indices).unwrap();
        values
            .iter()
            .zip(xs.iter())
            .map(|(v, &x)| (v - f(x)).abs())
            .fold(0.0f64, f64::max)
    }

    #[test]
    fn basic_constant_everywhere() {
        let f = FunctionOracle::univariate(|_| 2.5);
        let sys = ChebSystem::new(3).unwrap();
        let (tt, report) = construct_basic(&f, &sys, 9).unwrap();
        assert_eq!(report.oracle_evals, 8);
        for j in [0u64, 1, 100, 511] {
            let v = tt.eval(&dyadic_index(j, 9)).unwrap();
            assert!((v - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn basic_linear_at_half() {
        // f(x) = x with N = 1 reproduces x exactly; sigma = (1,0,...,0) is 0.5.
        let f = FunctionOracle::univariate(|x| x);
        let sys = ChebSystem::new(1).unwrap();
        let (tt, _) = construct_basic(&f, &sys, 8).unwrap();
        let mut idx = vec![0usize; 8];
        idx[0] = 1;
        assert!((tt.eval(&idx).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn basic_square_at_three_eighths() {
        let f = FunctionOracle::univariate(|x| x * x);
        let sys = ChebSystem::new(3).unwrap();
        let (tt, _) = construct_basic(&f, &sys, 10).unwrap();
        // x = 3/8 = 0.011 in binary.
        let j = 3u64 << (10 - 3);
        let v = tt.eval(&dyadic_index(j, 10)).unwrap();
        assert!((v - 9.0 / 64.0).abs() < 1e-13);
    }

    #[test]
    fn basic_exact_on_cubic() {
        let f = FunctionOracle::univariate(|x| x * x * x);
        let sys = ChebSystem::new(3).unwrap();
        let (tt, _) = construct_basic(&f, &sys, 12).unwrap();
        let err = brute_force_inf_error(&tt, |x| x * x * x, 12);
        assert!(err <= 1e-12, "cubic must be exact, got {err}");
    }

    #[test]
    fn rank_revealing_zero_budget_matches_basic() {
        let f = FunctionOracle::univariate(|x| (3.0 * x).sin() + x);
        let sys = ChebSystem::new(8).unwrap();
        let depth = 10;
        let (basic, _) = construct_basic(&f, &sys, depth).unwrap();
        let (rr, report) =
            construct_rank_revealing(&f, &sys, depth, &TruncationPolicy::absolute(0.0)).unwrap();
        assert!(report.max_rank() <= 9);
        let a = basic.to_dense().unwrap();
        let b = rr.to_dense().unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-12);
    }

    #[test]
    fn rank_revealing_collapses_low_rank() {
        // Degree-2 polynomial: every unfolding has rank <= 3.
        let f = FunctionOracle::univariate(|x| x * x);
        let sys = ChebSystem::new(10).unwrap();
        let (tt, report) =
            construct_rank_revealing(&f, &sys, 14, &TruncationPolicy::absolute(1e-12)).unwrap();
        assert!(report.max_rank() <= 3, "ranks {:?}", report.ranks);
        // SVD oracle agrees: brute-force unfolding ranks are <= 3.
        let dense = DenseQuantizedTensor::from_univariate(|x| x * x, 14).unwrap();
        for m in [3usize, 7, 11] {
            assert!(unfolding_eps_rank(&dense, m, 1e-12).unwrap() <= 3);
        }
        let err = brute_force_inf_error(&tt, |x| x * x, 14);
        assert!(err <= 1e-11, "{err}");
    }

    #[test]
    fn rank_revealing_constant_is_rank_one() {
        let f = FunctionOracle::univariate(|_| 1.0);
        let sys = ChebSystem::new(12).unwrap();
        let (_, report) =
            construct_rank_revealing(&f, &sys, 10, &TruncationPolicy::absolute(1e-13)).unwrap();
        assert!(report.max_rank() <= 1, "ranks {:?}", report.ranks);
    }

    #[test]
    fn rank_revealing_orthogonal_cores() {
        let f = FunctionOracle::univariate(|x| (2.0 * std::f64::consts::PI * 3.0 * x).cos());
        let sys = ChebSystem::new(16).unwrap();
        let (tt, _) =
            construct_rank_revealing(&f, &sys, 9, &TruncationPolicy::absolute(1e-10)).unwrap();
        for k in 0..tt.depth() - 1 {
            let u = tt.core(k).unfold_left();
            let utu = u.transpose().matmul(&u);
            for i in 0..utu.rows() {
                for j in 0..utu.cols() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((utu.get(i, j) - expect).abs() < 1e-12, "core {k}");
                }
            }
        }
    }

    #[test]
    fn rank_revealing_a_posteriori_bound() {
        // |T - S|_2 <= E_{1,N}[f] + (K - 2) Lambda_N eps at full brute force.
        let f = FunctionOracle::univariate(|x| (7.3 * x).sin() + 0.5 * (21.0 * x).cos());
        let depth = 12;
        let n = 14;
        let sys = ChebSystem::new(n).unwrap();
        let truth = DenseQuantizedTensor::from_univariate(
            |x| (7.3 * x).sin() + 0.5 * (21.0 * x).cos(),
            depth,
        )
        .unwrap();
        let e1 = crate::bounds::measure_interp_error(&f, 1, n, 96, 96).unwrap();
        let lambda = sys.lebesgue_constant(10 * (n + 1));
        for eps in [1e-4, 1e-6, 1e-9] {
            let (tt, _) =
                construct_rank_revealing(&f, &sys, depth, &TruncationPolicy::absolute(eps))
                    .unwrap();
            let dense = tt.to_dense().unwrap();
            let mut diff2 = 0.0;
            for (a, b) in dense.values().iter().zip(truth.values().iter()) {
                diff2 += (a - b) * (a - b);
            }
            let err2 = (diff2 / dense.len() as f64).sqrt();
            let bound = e1 + (depth - 2) as f64 * lambda * eps;
            assert!(err2 <= 2.0 * bound, "eps={eps}: {err2} vs {bound}");
        }
    }

    #[test]
    fn rank_revealing_error_monotone_in_eps() {
        let f = FunctionOracle::univariate(|x| (9.0 * x).sin() * (1.0 + x));
        let sys = ChebSystem::new(12).unwrap();
        let depth = 11;
        let truth =
            DenseQuantizedTensor::from_univariate(|x| (9.0 * x).sin() * (1.0 + x), depth).unwrap();
        // Stay above the N = 12 interpolation floor (~2.5e-9); below it the
        // kept mass differs only at rounding scale and the ordering jitters.
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let (tt, _) =
                construct_rank_revealing(&f, &sys, depth, &TruncationPolicy::absolute(eps))
                    .unwrap();
            let dense = tt.to_dense().unwrap();
            let mut diff2 = 0.0;
            for (a, b) in dense.values().iter().zip(truth.values().iter()) {
                diff2 += (a - b) * (a - b);
            }
            let err = (diff2 / dense.len() as f64).sqrt();
            assert!(err <= prev + 1e-13, "eps={eps}: {err} vs {prev}");
            prev = err;
        }
    }

    #[test]
    fn sparse_pipeline_tracks_dense() {
        let f = FunctionOracle::univariate(|x| 0.05 / (0.05f64.powi(2) + (x - 0.5).powi(2)).sqrt());
        let n = 128;
        let depth = 12;
        let sys = ChebSystem::new(n).unwrap();
        let lsys = LocalInterpSystem::new(sys.clone(), 10).unwrap();
        let policy = TruncationPolicy::absolute(1e-10);
        let (dense_tt, _) = construct_rank_revealing(&f, &sys, depth, &policy).unwrap();
        let (sparse_tt, _) = construct_rank_revealing_sparse(&f, &lsys, depth, &policy).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut worst = 0.0f64;
        for _ in 0..400 {
            let j = rng.random_range(0..1u64 << depth);
            let idx = dyadic_index(j, depth);
            let a = dense_tt.eval(&idx).unwrap();
            let b = sparse_tt.eval(&idx).unwrap();
            worst = worst.max((a - b).abs());
        }
        assert!(worst <= 1e-7, "sparse vs dense deviation {worst}");
    }

    #[test]
    fn decay_constant_exact() {
        let f = FunctionOracle::univariate(|_| 1.0);
        let sched = DecaySchedule::new(20.0, 5.0, 8).unwrap();
        let (tt, _) = construct_decay(&f, &sched).unwrap();
        let err = brute_force_inf_error(&tt, |_| 1.0, 8);
        assert!(err <= 1e-13);
    }

    #[test]
    fn decay_rank_profile_clipped() {
        let f = FunctionOracle::univariate(|x| (2.0 * std::f64::consts::PI * 8.0 * x).cos());
        let sched = DecaySchedule::new(64.0, 8.0, 6).unwrap();
        let (tt, report) = construct_decay(&f, &sched).unwrap();
        // min(2^k, N_k + 1) for N_k = 40,24,16,12,10.
        assert_eq!(&report.ranks[1..6], &[2, 4, 8, 13, 11]);
        let err = brute_force_inf_error(&tt, |x| (2.0 * std::f64::consts::PI * 8.0 * x).cos(), 6);
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn decay_bandlimited_error() {
        // cos(2 pi 8 x): Omega = 16 pi, Delta = 30, K = 12; brute force on
        // sampled dyadic points.
        let omega = 16.0 * std::f64::consts::PI;
        let f = FunctionOracle::univariate(|x| (2.0 * std::f64::consts::PI * 8.0 * x).cos());
        let sched = DecaySchedule::new(omega, 30.0, 12).unwrap();
        let (tt, _) = construct_decay(&f, &sched).unwrap();
        let err = sampled_inf_error(
            &tt,
            |x| (2.0 * std::f64::consts::PI * 8.0 * x).cos(),
            12,
            2000,
            5,
        );
        assert!(err <= 1e-5, "decay error {err}");
    }

    #[test]
    fn multires_empty_tree_matches_basic() {
        let f = FunctionOracle::univariate(|x| (x + 0.1).ln());
        let sys = ChebSystem::new(6).unwrap();
        let depth = 8;
        let tree = DangerTree::empty(depth).unwrap();
        let (mr, report) = construct_multires(&f, &sys, depth, &tree).unwrap();
        let (basic, _) = construct_basic(&f, &sys, depth).unwrap();
        let a = mr.to_dense().unwrap();
        let b = basic.to_dense().unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-12);
        assert_eq!(report.oracle_evals, 2 * 7);
    }

    #[test]
    fn multires_sqrt_left_edge() {
        let f = FunctionOracle::univariate(|x| x.sqrt());
        let sys = ChebSystem::new(20).unwrap();
        let depth = 25;
        let tree = DangerTree::left_edge(depth).unwrap();
        let (tt, report) = construct_multires(&f, &sys, depth, &tree).unwrap();
        assert_eq!(report.oracle_evals, tree.expected_evals(20));
        let err = sampled_inf_error(&tt, |x| x.sqrt(), depth, 3000, 7);
        assert!(err <= 1e-12, "sqrt multires error {err}");
        // Fully dangerous chain: sigma = 0...0 evaluates f(0) exactly.
        let idx = vec![0usize; depth];
        assert_eq!(tt.eval(&idx).unwrap(), 0.0);
    }

    #[test]
    fn multires_rejects_mismatched_tree() {
        let f = FunctionOracle::univariate(|x| x);
        let sys = ChebSystem::new(4).unwrap();
        let tree = DangerTree::left_edge(6).unwrap();
        assert!(construct_multires(&f, &sys, 7, &tree).is_err());
    }

    #[test]
    fn multivariate_bilinear_exact() {
        // f(x, y) = x + y is degree 1 in each variable: exact for any N >= 1.
        let f = FunctionOracle::new(2, |p| p[0] + p[1]);
        let sys = ChebSystem::new(3).unwrap();
        let depth = 8;
        let policy = TruncationPolicy::absolute(1e-12);
        let (tt, _) =
            construct_multivariate(&f, &sys, 2, depth, BitOrder::Interleaved, &policy, None)
                .unwrap();
        assert_eq!(tt.depth(), 2 * depth);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let size = 1u64 << depth;
        let mut worst = 0.0f64;
        for _ in 0..500 {
            let jx = rng.random_range(0..size);
            let jy = rng.random_range(0..size);
            let idx = multivariate_index(&[jx, jy], depth, BitOrder::Interleaved);
            let v = tt.eval(&idx).unwrap();
            let truth = (jx as f64 + jy as f64) / size as f64;
            worst = worst.max((v - truth).abs());
        }
        assert!(worst <= 1e-11, "x + y interleaved error {worst}");
    }

    #[test]
    fn multivariate_separable_small_ranks() {
        let f = FunctionOracle::new(2, |p| (1.0 + p[0]).ln() * (2.0 + p[1]).sqrt());
        let sys = ChebSystem::new(8).unwrap();
        let depth = 8;
        let policy = TruncationPolicy::absolute(1e-10);
        let (tt, report) =
            construct_multivariate(&f, &sys, 2, depth, BitOrder::Serial, &policy, None).unwrap();
        // The variable-boundary bond of a separable function is 1; with the
        // budgeted truncation it stays tiny.
        let boundary = report.ranks[depth];
        assert!(
            boundary <= 4,
            "boundary rank {boundary} in {:?}",
            report.ranks
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let size = 1u64 << depth;
        let mut worst = 0.0f64;
        for _ in 0..300 {
            let jx = rng.random_range(0..size);
            let jy = rng.random_range(0..size);
            let idx = multivariate_index(&[jx, jy], depth, BitOrder::Serial);
            let v = tt.eval(&idx).unwrap();
            let truth =
                (1.0 + jx as f64 / size as f64).ln() * (2.0 + jy as f64 / size as f64).sqrt();
            worst = worst.max((v - truth).abs());
        }
        assert!(worst <= 1e-6, "separable serial error {worst}");
    }

    #[test]
    fn multivariate_trivariate_runs() {
        let f = FunctionOracle::new(3, |p| p[0] * p[1] + p[2]);
        let sys = ChebSystem::new(2).unwrap();
        let depth = 4;
        let policy = TruncationPolicy::absolute(1e-12);
        for order in [BitOrder::Interleaved, BitOrder::Serial] {
            let (tt, _) = construct_multivariate(&f, &sys, 3, depth, order, &policy, None).unwrap();
            assert_eq!(tt.depth(), 3 * depth);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let size = 1u64 << depth;
            for _ in 0..100 {
                let c: Vec<u64> = (0..3).map(|_| rng.random_range(0..size)).collect();
                let idx = multivariate_index(&c, depth, order);
                let v = tt.eval(&idx).unwrap();
                let x: Vec<f64> = c.iter().map(|&j| j as f64 / size as f64).collect();
                let truth = x[0] * x[1] + x[2];
                assert!((v - truth).abs() <= 1e-11, "{order:?}");
            }
        }
    }

    #[test]
    fn multivariate_rejects_bad_dims() {
        let f = FunctionOracle::new(2, |p| p[0] + p[1]);
        let sys = ChebSystem::new(2).unwrap();
        let policy = TruncationPolicy::absolute(0.0);
        assert!(construct_multivariate(&f, &sys, 1, 4, BitOrder::Serial, &policy, None).is_err());
        assert!(construct_multivariate(&f, &sys, 4, 4, BitOrder::Serial, &policy, None).is_err());
        let f3 = FunctionOracle::new(3, |p| p[0] + p[1] + p[2]);
        assert!(construct_multivariate(&f3, &sys, 2, 4, BitOrder::Serial, &policy, None).is_err());
    }

    #[test]
    fn norm_inequality_on_built_tensors() {
        let f = FunctionOracle::univariate(|x| (5.0 * x).sin());
        let sys = ChebSystem::new(6).unwrap();
        let (tt, _) = construct_basic(&f, &sys, 8).unwrap();
        let dense = tt.to_dense().unwrap();
        assert!(tensor_norm(&dense, NormKind::Two) <= tensor_norm(&dense, NormKind::Inf) + 1e-15);
    }
}
