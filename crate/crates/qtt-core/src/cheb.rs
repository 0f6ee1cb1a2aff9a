//! Chebyshev-Lobatto node systems and cardinal-function evaluation.
//!
//! Nodes are `c^alpha = (cos(pi alpha / N) + 1) / 2`, `alpha = 0..N`, i.e.
//! the extrema grid mapped to `[0,1]` and listed in decreasing order
//! (`c^0 = 1`, `c^N = 0`). Cardinal functions are evaluated with the
//! barycentric formula, which is exact at the nodes, reproduces the
//! polynomial extension for arguments outside `[0,1]`, and sums to one
//! identically.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Arguments closer to a node than this are snapped to it, so cardinal
/// values at (floating-point images of) nodes are exact Kronecker deltas.
pub const NODE_SNAP_TOL: f64 = 1e-14;

/// A Chebyshev-Lobatto interpolation system of order `N` (`N + 1` nodes).
#[derive(Debug, Clone)]
pub struct ChebSystem {
    order: usize,
    nodes: Vec<f64>,
    /// Barycentric weights up to a common factor: `(-1)^a`, halved at the ends.
    weights: Vec<f64>,
}

/// Chebyshev-Lobatto nodes on `[0,1]`, decreasing, length `N + 1`.
pub fn lobatto_nodes(order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::contract("interpolation order must be at least 1"));
    }
    Ok((0..=order)
        .map(|a| ((PI * a as f64 / order as f64).cos() + 1.0) / 2.0)
        .collect())
}

impl ChebSystem {
    pub fn new(order: usize) -> Result<Self> {
        let nodes = lobatto_nodes(order)?;
        let mut weights = Vec::with_capacity(order + 1);
        for a in 0..=order {
            let mut w = if a % 2 == 0 { 1.0 } else { -1.0 };
            if a == 0 || a == order {
                w *= 0.5;
            }
            weights.push(w);
        }
        Ok(ChebSystem {
            order,
            nodes,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Node `c^alpha`.
    pub fn node(&self, alpha: usize) -> f64 {
        self.nodes[alpha]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Angular node `theta^alpha = alpha pi / N`.
    pub fn angular_node(&self, alpha: usize) -> f64 {
        PI * alpha as f64 / self.order as f64
    }

    /// Index of the node within [`NODE_SNAP_TOL`] of `x`, if any.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        // theta(x) pins down the only candidate; avoids an O(N) scan.
        let y = (2.0 * x - 1.0).clamp(-1.0, 1.0);
        let t = y.acos() * self.order as f64 / PI;
        let cand = (t - 0.5).ceil().clamp(0.0, self.order as f64) as usize;
        (cand.saturating_sub(1)..=(cand + 1).min(self.order))
            .find(|&a| (x - self.nodes[a]).abs() < NODE_SNAP_TOL)
    }

    /// Cardinal function `P^alpha` at `x`: the degree-`N` Lagrange
    /// polynomial that is 1 at node `alpha` and 0 at the others. Arguments
    /// outside `[0,1]` evaluate the polynomial extension.
    pub fn cardinal_eval(&self, alpha: usize, x: f64) -> f64 {
        debug_assert!(alpha <= self.order);
        if let Some(b) = self.node_index(x) {
            return if b == alpha { 1.0 } else { 0.0 };
        }
        let y = 2.0 * x - 1.0;
        let mut denom = 0.0;
        let mut num = 0.0;
        for (a, (&n, &w)) in self.nodes.iter().zip(self.weights.iter()).enumerate() {
            let term = w / (y - (2.0 * n - 1.0));
            denom += term;
            if a == alpha {
                num = term;
            }
        }
        num / denom
    }

    /// All cardinal values at `x` in one O(N) pass. `out` must have length
    /// `N + 1`.
    pub fn cardinals_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.order + 1);
        if let Some(b) = self.node_index(x) {
            out.fill(0.0);
            out[b] = 1.0;
            return;
        }
        let y = 2.0 * x - 1.0;
        let mut denom = 0.0;
        for ((&n, &w), o) in self
            .nodes
            .iter()
            .zip(self.weights.iter())
            .zip(out.iter_mut())
        {
            let term = w / (y - (2.0 * n - 1.0));
            denom += term;
            *o = term;
        }
        let inv = 1.0 / denom;
        for o in out.iter_mut() {
            *o *= inv;
        }
    }

    /// Interpolate nodal `data` (value at node `alpha` in slot `alpha`) at `x`.
    pub fn interpolate(&self, data: &[f64], x: f64) -> f64 {
        debug_assert_eq!(data.len(), self.order + 1);
        if let Some(b) = self.node_index(x) {
            return data[b];
        }
        let y = 2.0 * x - 1.0;
        let mut denom = 0.0;
        let mut num = 0.0;
        for ((&n, &w), &v) in self.nodes.iter().zip(self.weights.iter()).zip(data.iter()) {
            let term = w / (y - (2.0 * n - 1.0));
            denom += term;
            num += term * v;
        }
        num / denom
    }

    /// Estimate the Lebesgue constant `sup_x sum_alpha |P^alpha(x)|` by a
    /// dense scan. `resolution` is clamped up to `10 (N + 1)` points; the
    /// estimate is a lower bound of the sup and nondecreasing in the
    /// resolution.
    pub fn lebesgue_constant(&self, resolution: usize) -> f64 {
        let points = resolution.max(10 * (self.order + 1));
        let mut cards = vec![0.0; self.order + 1];
        let mut best = 0.0f64;
        for i in 0..=points {
            let x = i as f64 / points as f64;
            self.cardinals_into(x, &mut cards);
            let lambda: f64 = cards.iter().map(|v| v.abs()).sum();
            best = best.max(lambda);
        }
        best
    }
}

/// Local Lagrange interpolation in the angular coordinate, after Boyd.
///
/// The Chebyshev grid is equispaced in `theta = arccos(2x - 1)`; a function
/// is approximated near `x` by Lagrange interpolation over the `2M + 1`
/// angular nodes centered at the nearest grid angle. The angular grid is
/// extended to indices `-N..2N` by even reflection at both ends.
#[derive(Debug, Clone)]
pub struct LocalInterpSystem {
    sys: ChebSystem,
    half_width: usize,
}

impl LocalInterpSystem {
    pub fn new(sys: ChebSystem, half_width: usize) -> Result<Self> {
        if half_width < 1 || half_width > sys.order() {
            return Err(Error::contract(format!(
                "local half-width must satisfy 1 <= M <= N, got M={half_width} N={}",
                sys.order()
            )));
        }
        Ok(LocalInterpSystem { sys, half_width })
    }

    pub fn base(&self) -> &ChebSystem {
        &self.sys
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Reflection map: the representative in `0..=N` of an extended angular
    /// index (`-gamma ~ gamma`, `N + gamma ~ N - gamma`).
    pub fn reflect(&self, gamma: isize) -> usize {
        let n = self.sys.order() as isize;
        debug_assert!((-n..=2 * n).contains(&gamma));
        if gamma < 0 {
            (-gamma) as usize
        } else if gamma > n {
            (2 * n - gamma) as usize
        } else {
            gamma as usize
        }
    }

    /// Index of the angular grid point nearest to `theta`; ties break
    /// toward the smaller index.
    pub fn nearest_index(&self, theta: f64) -> usize {
        let t = theta * self.sys.order() as f64 / PI;
        (t - 0.5).ceil().clamp(0.0, self.sys.order() as f64) as usize
    }

    /// The sparse interpolation weights at `x`: pairs `(alpha, w)` with
    /// `sum_gamma delta(alpha, reflect(gamma)) L_gamma(theta(x))`
    /// accumulated per node index, sorted by `alpha`. At a grid node this
    /// is exactly `[(node, 1)]`.
    pub fn local_weights(&self, x: f64) -> Vec<(usize, f64)> {
        if let Some(b) = self.sys.node_index(x) {
            return vec![(b, 1.0)];
        }
        let n = self.sys.order() as f64;
        let theta = (2.0 * x - 1.0).clamp(-1.0, 1.0).acos();
        let iota = self.nearest_index(theta) as isize;
        let m = self.half_width as isize;

        let window: Vec<isize> = (iota - m..=iota + m).collect();
        let angles: Vec<f64> = window.iter().map(|&g| PI * g as f64 / n).collect();
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(window.len());
        for (i, &gamma) in window.iter().enumerate() {
            // Lagrange basis over the window's angular nodes.
            let mut l = 1.0;
            for (j, &tj) in angles.iter().enumerate() {
                if j != i {
                    l *= (theta - tj) / (angles[i] - tj);
                }
            }
            let alpha = self.reflect(gamma);
            match out.iter_mut().find(|(a, _)| *a == alpha) {
                Some((_, w)) => *w += l,
                None => out.push((alpha, l)),
            }
        }
        out.sort_by_key(|(a, _)| *a);
        out
    }

    /// Value of the sparse interpolant of the cardinal function `P^alpha`
    /// at `x`; zero outside a window of about `M + 1` node indices around
    /// `theta(x)`.
    pub fn local_cardinal_eval(&self, alpha: usize, x: f64) -> f64 {
        debug_assert!(alpha <= self.sys.order());
        self.local_weights(x)
            .into_iter()
            .find(|(a, _)| *a == alpha)
            .map(|(_, w)| w)
            .unwrap_or(0.0)
    }

    /// Interpolate nodal `data` at `x` through the sparse operator.
    pub fn interpolate(&self, data: &[f64], x: f64) -> f64 {
        debug_assert_eq!(data.len(), self.sys.order() + 1);
        self.local_weights(x)
            .into_iter()
            .map(|(a, w)| w * data[a])
            .sum()
    }
}
