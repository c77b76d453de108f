//! Uniform state grid on [0, 1] with piecewise-linear interpolation.

use crate::error::{Error, Result};
use crate::num::{clamp, Real};

/// Default number of state nodes.
pub const DEFAULT_GRID_NODES: usize = 2001;

#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid<T> {
    nodes: Vec<T>,
    step: T,
}

impl<T: Real> StateGrid<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("grid_n", format!("need at least 2 nodes, got {n}")));
        }
        let step = T::one() / T::from_usize_lossy(n - 1);
        let mut nodes: Vec<T> = (0..n).map(|i| T::from_usize_lossy(i) * step).collect();
        nodes[n - 1] = T::one();
        Ok(StateGrid { nodes, step })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn step(&self) -> T {
        self.step
    }

    #[inline]
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, i: usize) -> T {
        self.nodes[i]
    }

    /// Cell index `k <= n - 2` and local coordinate in `[0, 1]` with
    /// `x = x_k + frac * step`. Inputs are clamped into [0, 1].
    #[inline]
    pub fn locate(&self, x: T) -> (usize, T) {
        let n = self.nodes.len();
        let x = clamp(x, T::zero(), T::one());
        let s = x / self.step;
        let k = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let frac = clamp(s - T::from_usize_lossy(k), T::zero(), T::one());
        (k, frac)
    }

    /// Linear interpolation of nodal `values` at `x`.
    #[inline]
    pub fn interpolate(&self, values: &[T], x: T) -> T {
        debug_assert_eq!(values.len(), self.nodes.len());
        let (k, w) = self.locate(x);
        values[k] + w * (values[k + 1] - values[k])
    }

    /// Trapezoid weights: `step / 2` at the ends, `step` inside.
    pub fn trapezoid_weights(&self) -> Vec<T> {
        let n = self.nodes.len();
        let half = self.step / T::lit(2.0);
        (0..n)
            .map(|i| if i == 0 || i == n - 1 { half } else { self.step })
            .collect()
    }

    /// Composite trapezoid integral of nodal values over [0, 1].
    pub fn integrate(&self, values: &[T]) -> T {
        let n = self.nodes.len();
        let inner: T = values[1..n - 1].iter().copied().sum();
        self.step * (inner + (values[0] + values[n - 1]) / T::lit(2.0))
    }

    /// Evaluates `f` at every node.
    pub fn tabulate(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}
