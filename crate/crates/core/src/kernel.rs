//! Innovation law of the drift action and the controlled transition kernel.
//!
//! Under the passive action a state `x` moves to `x + (1 - x) ξ`; the active
//! action resets it to 0. [`Kernel`] discretizes the law of `ξ` on its own
//! grid (exact cell masses from the closed-form CDF, constant density inside
//! each cell) and projects the law of `x + (1 - x) ξ` onto the hat functions
//! of the state grid. The resulting node-to-node transition rows drive both
//! the dynamic programs (expectations of piecewise-linear value functions,
//! which are then exact) and the forward propagation of measures (which then
//! conserves mass and mean exactly).

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::num::{clamp, Real};

/// Default number of nodes of the dedicated ξ grid.
pub const DEFAULT_XI_NODES: usize = 2001;

/// Sources this close to 1 are treated as sitting at 1 (their law is δ₁).
pub const TOP_CLIP: f64 = 1e-9;

/// One passive transition: `x + (1 - x) u`.
pub fn q0_next<T: Real>(x: T, u: T) -> Result<T> {
    check_unit("x", x)?;
    check_unit("u", u)?;
    Ok(x + (T::one() - x) * u)
}

pub(crate) fn check_unit<T: Real>(what: &'static str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: v.as_f64(),
        })
    }
}

/// Distribution of the innovation ξ on [0, 1]. Every family has a density
/// that is positive almost everywhere and a closed-form CDF.
///
/// Serialized as `{"family": "beta", "params": {"a": 2.0, "b": 2.0}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum XiSpec<T> {
    Uniform,
    Beta { a: T, b: T },
    TruncatedExp { rate: T },
}

impl<T: Real> Default for XiSpec<T> {
    fn default() -> Self {
        XiSpec::Uniform
    }
}

impl<T: Real> XiSpec<T> {
    pub fn beta(a: T, b: T) -> Result<Self> {
        let spec = XiSpec::Beta { a, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn truncated_exp(rate: T) -> Result<Self> {
        let spec = XiSpec::TruncatedExp { rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        match *self {
            XiSpec::Uniform => Ok(()),
            XiSpec::Beta { a, b } if positive(a) && positive(b) => Ok(()),
            XiSpec::Beta { a, b } => Err(Error::param(
                "xi.params",
                format!("beta shape parameters must be positive and finite, got a = {a}, b = {b}"),
            )),
            XiSpec::TruncatedExp { rate } if positive(rate) => Ok(()),
            XiSpec::TruncatedExp { rate } => Err(Error::param(
                "xi.params",
                format!("truncated exponential rate must be positive and finite, got {rate}"),
            )),
        }
    }

    /// Density at `u ∈ [0, 1]` (may be infinite at an endpoint for beta shapes below 1).
    pub fn density(&self, u: T) -> T {
        let uf = u.as_f64();
        if !(0.0..=1.0).contains(&uf) {
            return T::zero();
        }
        let v = match *self {
            XiSpec::Uniform => 1.0,
            XiSpec::Beta { a, b } => {
                let (a, b) = (a.as_f64(), b.as_f64());
                let ln_norm = statrs::function::beta::ln_beta(a, b);
                ((a - 1.0) * uf.ln() + (b - 1.0) * (1.0 - uf).ln() - ln_norm).exp()
            }
            XiSpec::TruncatedExp { rate } => {
                let r = rate.as_f64();
                r * (-r * uf).exp() / -(-r).exp_m1()
            }
        };
        T::lit(v)
    }

    /// Distribution function, computed in `f64`.
    pub fn cdf_f64(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        match *self {
            XiSpec::Uniform => u,
            XiSpec::Beta { a, b } => statrs::function::beta::beta_reg(a.as_f64(), b.as_f64(), u),
            XiSpec::TruncatedExp { rate } => {
                let r = rate.as_f64();
                (-r * u).exp_m1() / (-r).exp_m1()
            }
        }
    }

    pub fn cdf(&self, u: T) -> T {
        T::lit(self.cdf_f64(u.as_f64()))
    }

    /// `E ξ` in closed form.
    pub fn mean(&self) -> T {
        let m = match *self {
            XiSpec::Uniform => 0.5,
            XiSpec::Beta { a, b } => a.as_f64() / (a.as_f64() + b.as_f64()),
            XiSpec::TruncatedExp { rate } => {
                let r = rate.as_f64();
                1.0 / r - (-r).exp() / -(-r).exp_m1()
            }
        };
        T::lit(m)
    }

    /// `Var ξ` in closed form.
    pub fn variance(&self) -> T {
        let v = match *self {
            XiSpec::Uniform => 1.0 / 12.0,
            XiSpec::Beta { a, b } => {
                let (a, b) = (a.as_f64(), b.as_f64());
                a * b / ((a + b) * (a + b) * (a + b + 1.0))
            }
            XiSpec::TruncatedExp { rate } => {
                let r = rate.as_f64();
                let z = -(-r).exp_m1();
                let e1 = 1.0 / r - (-r).exp() / z;
                let e2 = (2.0 / (r * r) - (-r).exp() * (1.0 + 2.0 / r + 2.0 / (r * r))) / z;
                e2 - e1 * e1
            }
        };
        T::lit(v)
    }

    pub fn sampler(&self) -> XiSampler {
        match *self {
            XiSpec::Uniform => XiSampler::Uniform,
            XiSpec::Beta { a, b } => XiSampler::Beta(
                Beta::new(a.as_f64(), b.as_f64()).expect("validated beta parameters"),
            ),
            XiSpec::TruncatedExp { rate } => {
                let r = rate.as_f64();
                XiSampler::TruncatedExp {
                    rate: r,
                    tail: -(-r).exp_m1(),
                }
            }
        }
    }
}

/// Prepared sampler for ξ; draws are deterministic given the generator state.
#[derive(Debug, Clone, Copy)]
pub enum XiSampler {
    Uniform,
    Beta(Beta<f64>),
    TruncatedExp { rate: f64, tail: f64 },
}

impl XiSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            XiSampler::Uniform => rng.random::<f64>(),
            XiSampler::Beta(beta) => beta.sample(rng),
            XiSampler::TruncatedExp { rate, tail } => {
                let v: f64 = rng.random();
                (-(-v * tail).ln_1p() / rate).min(1.0)
            }
        }
    }
}

/// Convenience wrapper matching the single-draw operation.
pub fn xi_sample<T: Real, R: Rng + ?Sized>(spec: &XiSpec<T>, rng: &mut R) -> f64 {
    spec.sampler().sample(rng)
}

/// Piecewise-constant-density discretization of ξ with exact cell masses.
#[derive(Debug, Clone)]
struct XiLaw<T> {
    step: T,
    /// `F(u_k)` at the ξ-grid nodes.
    cum_mass: Vec<T>,
    /// `∫_0^{u_k} s dF_h(s)`.
    cum_moment: Vec<T>,
    cell_mass: Vec<T>,
}

impl<T: Real> XiLaw<T> {
    fn new(spec: &XiSpec<T>, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::param("xi_nodes", format!("need at least 2 nodes, got {nodes}")));
        }
        let cells = nodes - 1;
        let step_f = 1.0 / cells as f64;
        let cdf: Vec<f64> = (0..nodes)
            .map(|k| if k == cells { 1.0 } else { spec.cdf_f64(k as f64 * step_f) })
            .collect();
        let mut cell_mass = Vec::with_capacity(cells);
        let mut cum_mass = Vec::with_capacity(nodes);
        let mut cum_moment = Vec::with_capacity(nodes);
        let (mut m_acc, mut mom_acc) = (0.0f64, 0.0f64);
        cum_mass.push(T::zero());
        cum_moment.push(T::zero());
        for k in 0..cells {
            let p = (cdf[k + 1] - cdf[k]).max(0.0);
            m_acc += p;
            mom_acc += p * (k as f64 + 0.5) * step_f;
            cell_mass.push(T::lit(p));
            cum_mass.push(T::lit(m_acc));
            cum_moment.push(T::lit(mom_acc));
        }
        if (m_acc - 1.0).abs() > 1e-10 {
            return Err(Error::MassDefect {
                input: 1.0,
                output: m_acc,
            });
        }
        Ok(XiLaw {
            step: T::lit(step_f),
            cum_mass,
            cum_moment,
            cell_mass,
        })
    }

    /// `(F_h(u), ∫_0^u s dF_h(s))` for `u ∈ [0, 1]`.
    #[inline]
    fn partial(&self, u: T) -> (T, T) {
        let cells = self.cell_mass.len();
        if u >= T::one() {
            return (self.cum_mass[cells], self.cum_moment[cells]);
        }
        if u <= T::zero() {
            return (T::zero(), T::zero());
        }
        let s = u / self.step;
        let k = s.floor().to_usize().unwrap_or(0).min(cells - 1);
        let uk = T::from_usize_lossy(k) * self.step;
        let frac = clamp((u - uk) / self.step, T::zero(), T::one());
        let p = self.cell_mass[k];
        (
            self.cum_mass[k] + p * frac,
            self.cum_moment[k] + p * frac * (u + uk) / T::lit(2.0),
        )
    }
}

/// Transition probabilities from one grid node, nonzero only at nodes `>= start`.
#[derive(Debug, Clone)]
struct TransferRow<T> {
    start: usize,
    probs: Vec<T>,
}

/// Discretized passive kernel on a state grid.
#[derive(Debug, Clone)]
pub struct Kernel<T> {
    xi: XiSpec<T>,
    grid: StateGrid<T>,
    law: XiLaw<T>,
    rows: Vec<TransferRow<T>>,
}

impl<T: Real> Kernel<T> {
    pub fn new(xi: XiSpec<T>, grid_nodes: usize, xi_nodes: usize) -> Result<Self> {
        xi.validate()?;
        let grid = StateGrid::new(grid_nodes)?;
        let law = XiLaw::new(&xi, xi_nodes)?;
        let mut kernel = Kernel {
            xi,
            grid,
            law,
            rows: Vec::new(),
        };
        let n = kernel.grid.len();
        let mut rows = Vec::with_capacity(n);
        for j in 0..n {
            let mut probs = vec![T::zero(); n - j];
            kernel.project_point_with(kernel.grid.node(j), |k, p| probs[k - j] += p);
            rows.push(TransferRow { start: j, probs });
        }
        kernel.rows = rows;
        Ok(kernel)
    }

    /// Kernel with the default ξ-grid resolution.
    pub fn with_grid(xi: XiSpec<T>, grid_nodes: usize) -> Result<Self> {
        Self::new(xi, grid_nodes, DEFAULT_XI_NODES)
    }

    #[inline]
    pub fn xi(&self) -> &XiSpec<T> {
        &self.xi
    }

    #[inline]
    pub fn grid(&self) -> &StateGrid<T> {
        &self.grid
    }

    /// Calls `sink(node, probability)` for the projection of the law of
    /// `x + (1 - x) ξ` onto the hat functions of the state grid. The
    /// probabilities are nonnegative, sum to one, and reproduce the exact
    /// mean `x + (1 - x) E ξ_h`.
    pub fn project_point_with(&self, x: T, mut sink: impl FnMut(usize, T)) {
        let n = self.grid.len();
        let x = clamp(x, T::zero(), T::one());
        let scale = T::one() - x;
        if scale <= T::lit(TOP_CLIP) {
            sink(n - 1, T::one());
            return;
        }
        let nodes = self.grid.nodes();
        let (k0, _) = self.grid.locate(x);
        let (mut prev_f, mut prev_m) = (T::zero(), T::zero());
        for k in k0..n - 1 {
            let (y_lo, y_hi) = (nodes[k], nodes[k + 1]);
            let u_hi = if k == n - 2 {
                T::one()
            } else {
                clamp((y_hi - x) / scale, T::zero(), T::one())
            };
            let (f_hi, m_hi) = self.law.partial(u_hi);
            let p = f_hi - prev_f;
            if p > T::zero() {
                // ∫ y dLaw over the cell, with y = x + (1 - x) u
                let first = x * p + scale * (m_hi - prev_m);
                let width = y_hi - y_lo;
                let to_hi = clamp((first - y_lo * p) / width, T::zero(), p);
                sink(k, p - to_hi);
                sink(k + 1, to_hi);
            }
            prev_f = f_hi;
            prev_m = m_hi;
        }
    }

    /// `E[h(x + (1 - x) ξ)]` with `h` given by nodal values and interpolated
    /// linearly between nodes.
    pub fn expectation(&self, x: T, values: &[T]) -> T {
        let mut acc = T::zero();
        self.project_point_with(x, |k, p| acc += p * values[k]);
        acc
    }

    /// Expectation at every grid node: `G(x_j) = Σ_k P[j, k] h(x_k)`.
    pub fn expectation_on_grid(&self, values: &[T]) -> Vec<T> {
        debug_assert_eq!(values.len(), self.grid.len());
        self.rows
            .iter()
            .map(|row| {
                row.probs
                    .iter()
                    .zip(&values[row.start..])
                    .map(|(&p, &v)| p * v)
                    .sum()
            })
            .collect()
    }

    /// Adds `mass · P[j, ·]` into `out` for grid node `j`.
    #[inline]
    pub(crate) fn scatter_node(&self, j: usize, mass: T, out: &mut [T]) {
        let row = &self.rows[j];
        for (o, &p) in out[row.start..].iter_mut().zip(&row.probs) {
            *o += mass * p;
        }
    }

    /// Diagonal entry `P[j, j]` (probability of staying in the hat of node `j`).
    #[inline]
    pub(crate) fn self_weight(&self, j: usize) -> T {
        self.rows[j].probs[0]
    }

    /// `Σ_{k > j} P[j, k] v_k`.
    #[inline]
    pub(crate) fn upper_expectation(&self, j: usize, values: &[T]) -> T {
        let row = &self.rows[j];
        row.probs[1..]
            .iter()
            .zip(&values[row.start + 1..])
            .map(|(&p, &v)| p * v)
            .sum()
    }

    /// Total mass of the discretized ξ law (one up to rounding).
    pub fn xi_total_mass(&self) -> T {
        self.law.cell_mass.iter().copied().sum()
    }
}

/// Free-function form of [`Kernel::expectation`].
pub fn q0_expectation<T: Real>(kernel: &Kernel<T>, x: T, values: &[T]) -> Result<T> {
    check_unit("x", x)?;
    if values.len() != kernel.grid().len() {
        return Err(Error::param(
            "h",
            format!("expected {} nodal values, got {}", kernel.grid().len(), values.len()),
        ));
    }
    Ok(kernel.expectation(x, values))
}

/// Closed-form density of ξ.
pub fn xi_density<T: Real>(spec: &XiSpec<T>, u: T) -> Result<T> {
    check_unit("u", u)?;
    Ok(spec.density(u))
}
