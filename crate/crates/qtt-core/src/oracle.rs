//! Black-box function oracles over `[0,1]^d` with evaluation counting.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A black-box evaluator `f: [0,1]^d -> R`.
///
/// Every evaluation request bumps a shared counter, so construction
/// pipelines can report exactly how many samples they consumed. The oracle
/// is cheap to clone; clones share the counter and the underlying closure.
#[derive(Clone)]
pub struct FunctionOracle {
    f: Arc<EvalFn>,
    dim: usize,
    calls: Arc<AtomicU64>,
}

impl FunctionOracle {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FunctionOracle {
            f: Arc::new(f),
            dim,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Univariate convenience constructor.
    pub fn univariate(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FunctionOracle::new(1, move |x| f(x[0]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.f)(x)
    }

    pub fn eval1(&self, x: f64) -> f64 {
        self.eval(&[x])
    }

    /// Batch evaluation. Points are independent, so callers may swap this
    /// for a concurrent implementation; the sequential order here is part
    /// of no contract.
    pub fn eval_batch(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.iter().map(|p| self.eval(p)).collect()
    }

    /// Number of evaluation requests made so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    /// Evaluate and insist on a finite value.
    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!(
                "oracle returned non-finite value at {x:?}"
            )))
        }
    }

    /// Wrap this oracle in a memo cache keyed by the exact bit patterns of
    /// the evaluation point. Repeated requests for the same point hit the
    /// cache and are not forwarded to the underlying closure (the request
    /// counter of the wrapped oracle still advances).
    pub fn memoized(self) -> FunctionOracle {
        let inner = self.f.clone();
        let dim = self.dim;
        let cache: Mutex<std::collections::HashMap<Vec<u64>, f64>> =
            Mutex::new(std::collections::HashMap::new());
        FunctionOracle::new(dim, move |x: &[f64]| {
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            let mut map = cache.lock().unwrap();
            if let Some(&v) = map.get(&key) {
                return v;
            }
            let v = (inner)(x);
            map.insert(key, v);
            v
        })
    }
}

impl std::fmt::Debug for FunctionOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionOracle")
            .field("dim", &self.dim)
            .field("calls", &self.calls())
            .finish()
    }
}
