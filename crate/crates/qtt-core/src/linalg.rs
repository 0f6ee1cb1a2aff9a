//! Dense matrix helpers: row-major storage, Householder QR, and a one-sided
//! Jacobi SVD.
//!
//! Everything here is deterministic for a fixed input: singular values come
//! out in nonincreasing order, truncation keeps a prefix, and the sign of
//! each left singular vector is fixed so that its first nonzero entry is
//! nonnegative. The Jacobi kernel rotates rows of the (transposed) factor,
//! so its cost is linear in the long dimension of the matrix -- that is what
//! keeps the sparse construction pipeline linear in the grid size.

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match dimensions");
        Mat { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * other`, accumulating along the inner dimension with the
    /// right operand traversed row-wise.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = out.row_mut(i);
                for (o, &b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Thin singular value decomposition `a = u * diag(sigma) * vt`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: Mat,
    /// Nonincreasing, nonnegative.
    pub sigma: Vec<f64>,
    /// `k x cols` with orthonormal rows.
    pub vt: Mat,
}

impl Svd {
    /// Smallest rank whose discarded tail satisfies
    /// `sqrt(sum of discarded sigma^2) <= budget`. Always returns at least 1
    /// so downstream tensor-train chains stay well formed.
    pub fn rank_for_frobenius_budget(&self, budget: f64) -> usize {
        let k = self.sigma.len();
        let mut tail = 0.0;
        let mut rank = k;
        // Walk from the smallest singular value, absorbing while within budget.
        for r in (1..=k).rev() {
            let candidate = tail + self.sigma[r - 1] * self.sigma[r - 1];
            if candidate.sqrt() <= budget {
                tail = candidate;
                rank = r - 1;
            } else {
                break;
            }
        }
        rank.max(1)
    }

    /// Frobenius mass of the tail discarded when truncating to `rank`.
    pub fn discarded_mass(&self, rank: usize) -> f64 {
        self.sigma[rank.min(self.sigma.len())..]
            .iter()
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }

    /// `u[:, :rank]`.
    pub fn u_truncated(&self, rank: usize) -> Mat {
        let r = rank.min(self.sigma.len());
        Mat::from_fn(self.u.rows(), r, |i, j| self.u.get(i, j))
    }

    /// `diag(sigma[:rank]) * vt[:rank, :]`.
    pub fn sv_truncated(&self, rank: usize) -> Mat {
        let r = rank.min(self.sigma.len());
        Mat::from_fn(r, self.vt.cols(), |i, j| self.sigma[i] * self.vt.get(i, j))
    }
}

const JACOBI_TOL: f64 = 1.0e-15;
const JACOBI_MAX_SWEEPS: usize = 64;

/// One-sided Jacobi SVD. Deterministic: cyclic pivot order, singular values
/// sorted nonincreasing (ties kept in pivot order), and each left singular
/// vector scaled so its first nonzero entry is nonnegative.
pub fn svd(a: &Mat) -> Result<Svd> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::Numerical("svd of an empty matrix".into()));
    }
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "svd input contains non-finite entries".into(),
        ));
    }
    if a.rows() >= a.cols() {
        let (w, sigma, vt) = jacobi_tall(a)?;
        Ok(assemble(w, sigma, vt, false))
    } else {
        let at = a.transpose();
        let (w, sigma, vt) = jacobi_tall(&at)?;
        Ok(assemble(w, sigma, vt, true))
    }
}

/// Singular values only (same kernel, no accumulation of `vt`).
pub fn singular_values(a: &Mat) -> Result<Vec<f64>> {
    let svd = svd(a)?;
    Ok(svd.sigma)
}

/// Core kernel for tall `a` (rows >= cols). Returns `(w, sigma, vt)` where
/// the rows of `w` are the scaled left singular vectors (`w = (u * diag)ᵀ`).
fn jacobi_tall(a: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    let n = a.cols();
    // Rows of `b` are the columns of `a`; rotations touch contiguous memory.
    let mut b = a.transpose();
    let mut vt = Mat::identity(n);
    // Columns whose norm falls below the matrix noise floor are flushed to
    // exact zero; a cluster of noise columns would otherwise keep rotating
    // against the pair-relative threshold forever.
    let noise_floor = b.frob_norm() * f64::EPSILON;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            let norm2: f64 = b.row(p).iter().map(|v| v * v).sum();
            if norm2 > 0.0 && norm2.sqrt() <= noise_floor {
                b.row_mut(p).fill(0.0);
            }
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (app, aqq, apq) = {
                    let bp = b.row(p);
                    let bq = b.row(q);
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for (x, y) in bp.iter().zip(bq.iter()) {
                        app += x * x;
                        aqq += y * y;
                        apq += x * y;
                    }
                    (app, aqq, apq)
                };
                if apq == 0.0 || apq.abs() <= JACOBI_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut b, p, q, c, s);
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        if !rotated {
            let (w, sigma, vt) = collect(b, vt);
            return Ok((w, sigma, vt));
        }
    }
    Err(Error::Numerical("jacobi svd failed to converge".into()))
}

fn rotate_rows(m: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols;
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (head, tail) = m.data.split_at_mut(hi * cols);
    let row_lo = &mut head[lo * cols..(lo + 1) * cols];
    let row_hi = &mut tail[..cols];
    let (rp, rq) = if p < q {
        (row_lo, row_hi)
    } else {
        (row_hi, row_lo)
    };
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Sort rows of `b`/`vt` by descending column norm and extract norms.
fn collect(b: Mat, vt: Mat) -> (Mat, Vec<f64>, Mat) {
    let n = b.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|i| b.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let m = b.cols();
    let mut w = Mat::zeros(n, m);
    let mut vts = Mat::zeros(n, vt.cols());
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        w.row_mut(dst).copy_from_slice(b.row(src));
        vts.row_mut(dst).copy_from_slice(vt.row(src));
        sigma.push(norms[src]);
    }
    (w, sigma, vts)
}

fn assemble(w: Mat, sigma: Vec<f64>, vt: Mat, transposed: bool) -> Svd {
    let k = sigma.len();
    let m = w.cols();
    // u: m x k, column j = row j of w normalized.
    let mut u = Mat::zeros(m, k);
    for (j, &sj) in sigma.iter().enumerate() {
        if sj > 0.0 {
            let inv = 1.0 / sj;
            for i in 0..m {
                u.set(i, j, w.get(j, i) * inv);
            }
        } else if j < m {
            u.set(j, j, 1.0);
        }
    }
    let (mut u, mut vt) = if transposed {
        (vt.transpose(), u.transpose())
    } else {
        (u, vt)
    };
    fix_signs(&mut u, &mut vt);
    Svd { u, sigma, vt }
}

/// Flip column/row pairs so the first nonzero entry of each left singular
/// vector is nonnegative.
fn fix_signs(u: &mut Mat, vt: &mut Mat) {
    for j in 0..u.cols() {
        let mut flip = false;
        for i in 0..u.rows() {
            let v = u.get(i, j);
            if v != 0.0 {
                flip = v < 0.0;
                break;
            }
        }
        if flip {
            for i in 0..u.rows() {
                let v = u.get(i, j);
                u.set(i, j, -v);
            }
            for c in 0..vt.cols() {
                let v = vt.get(j, c);
                vt.set(j, c, -v);
            }
        }
    }
}

/// Thin Householder QR: `a = q * r` with `q` of shape `rows x k`,
/// `r` of shape `k x cols`, `k = min(rows, cols)`, and `r` having a
/// nonnegative diagonal.
pub fn qr(a: &Mat) -> (Mat, Mat) {
    let m = a.rows();
    let n = a.cols();
    let k = m.min(n);
    let mut r = a.clone();
    // Householder vectors stored column by column.
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(k);

    for j in 0..k {
        let mut norm = 0.0;
        for i in j..m {
            let v = r.get(i, j);
            norm += v * v;
        }
        let norm = norm.sqrt();
        let mut v = vec![0.0; m - j];
        if norm == 0.0 {
            vs.push(v);
            continue;
        }
        let x0 = r.get(j, j);
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = r.get(j + i, j);
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            // Apply I - 2 v vᵀ / (vᵀ v) to the trailing block.
            for col in j..n {
                let mut dot = 0.0;
                for (i, vi) in v.iter().enumerate() {
                    dot += vi * r.get(j + i, col);
                }
                let factor = 2.0 * dot / vnorm2;
                for (i, vi) in v.iter().enumerate() {
                    let cur = r.get(j + i, col);
                    r.set(j + i, col, cur - factor * vi);
                }
            }
        }
        r.set(j, j, alpha);
        for i in j + 1..m {
            r.set(i, j, 0.0);
        }
        vs.push(v);
    }

    // Form thin q by applying reflectors in reverse to the first k columns
    // of the identity.
    let mut q = Mat::zeros(m, k);
    for j in 0..k {
        q.set(j, j, 1.0);
    }
    for j in (0..k).rev() {
        let v = &vs[j];
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in 0..k {
            let mut dot = 0.0;
            for (i, vi) in v.iter().enumerate() {
                dot += vi * q.get(j + i, col);
            }
            let factor = 2.0 * dot / vnorm2;
            for (i, vi) in v.iter().enumerate() {
                let cur = q.get(j + i, col);
                q.set(j + i, col, cur - factor * vi);
            }
        }
    }

    // Normalize so the diagonal of r is nonnegative.
    let mut rk = Mat::from_fn(k, n, |i, jj| r.get(i, jj));
    for j in 0..k {
        if rk.get(j, j) < 0.0 {
            for c in 0..n {
                let v = rk.get(j, c);
                rk.set(j, c, -v);
            }
            for i in 0..m {
                let v = q.get(i, j);
                q.set(i, j, -v);
            }
        }
    }
    (q, rk)
}
