//! Finite-horizon dynamic program for a fixed mean-field path.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measures::{push_a0, push_reset_all, push_threshold, GridMeasure};
use crate::model::ModelParams;
use crate::num::{clamp, Real};
use crate::report::{num, Table};
use crate::roots::bisect;

/// Bisection tolerance for the switching point.
pub const THRESHOLD_TOL: f64 = 1e-10;

/// Tolerance under which the two sides of a classification test count as equal.
pub const TIE_TOL: f64 = 1e-12;

/// Shape of an optimal feedback policy `x ↦ a1 iff x >= θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdDescriptor<T> {
    /// θ = 0: reset everywhere.
    AlwaysA1,
    /// θ strictly inside (0, 1).
    Interior(T),
    /// θ = 1: reset only at the top state.
    Boundary,
    /// Never reset (formally θ = 1⁺).
    AlwaysA0,
}

impl<T: Real> ThresholdDescriptor<T> {
    /// Numeric threshold, `None` for 1⁺.
    pub fn theta(&self) -> Option<T> {
        match *self {
            ThresholdDescriptor::AlwaysA1 => Some(T::zero()),
            ThresholdDescriptor::Interior(t) => Some(t),
            ThresholdDescriptor::Boundary => Some(T::one()),
            ThresholdDescriptor::AlwaysA0 => None,
        }
    }

    /// Total order key: 0, θ, 1, and 2 for 1⁺.
    pub fn rank(&self) -> T {
        self.theta().unwrap_or_else(|| T::lit(2.0))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ThresholdDescriptor::AlwaysA1 => "always_a1",
            ThresholdDescriptor::Interior(_) => "interior",
            ThresholdDescriptor::Boundary => "boundary",
            ThresholdDescriptor::AlwaysA0 => "always_a0",
        }
    }

    /// Whether the reset action is taken at `x`.
    pub fn resets_at(&self, x: T) -> bool {
        match *self {
            ThresholdDescriptor::AlwaysA1 => true,
            ThresholdDescriptor::Interior(t) => x >= t,
            ThresholdDescriptor::Boundary => x >= T::one(),
            ThresholdDescriptor::AlwaysA0 => false,
        }
    }

    pub fn is_interior(&self) -> bool {
        matches!(self, ThresholdDescriptor::Interior(_))
    }

    /// `theta_value` CSV column; empty for 1⁺.
    pub fn value_field(&self) -> String {
        self.theta().map(num).unwrap_or_default()
    }
}

impl<T: Real> PartialOrd for ThresholdDescriptor<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.rank().partial_cmp(&other.rank())
    }
}

impl<T: Real> fmt::Display for ThresholdDescriptor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.theta() {
            Some(t) if self.is_interior() => write!(f, "interior({t})"),
            Some(t) => write!(f, "{}({t})", self.kind()),
            None => write!(f, "always_a0(1+)"),
        }
    }
}

/// Applies the switching rule to a continuation function `G` (strictly
/// increasing, evaluated off-grid by `g_at`) against the reset level
/// `ρ V(0) + γ`:
/// reset everywhere if `ρ V(0) + γ <= ρ G(0)`, never if `ρ V(0) + γ > ρ G(1)`,
/// θ = 1 on equality at the top, otherwise θ solves `ρ G(θ) = ρ V(0) + γ`.
pub fn classify_switch<T: Real>(
    rho: T,
    reset_level: T,
    g0: T,
    g1: T,
    mut g_at: impl FnMut(T) -> T,
) -> Result<ThresholdDescriptor<T>> {
    let tie = T::lit(TIE_TOL) * T::one().max(reset_level.abs());
    if reset_level <= rho * g0 + tie {
        return Ok(ThresholdDescriptor::AlwaysA1);
    }
    let top = reset_level - rho * g1;
    if top.abs() <= tie {
        return Ok(ThresholdDescriptor::Boundary);
    }
    if top > T::zero() {
        return Ok(ThresholdDescriptor::AlwaysA0);
    }
    let bracket = bisect(
        |x| rho * g_at(x) - reset_level,
        T::zero(),
        T::one(),
        T::lit(THRESHOLD_TOL),
    )?;
    let eps = T::resolution();
    let theta = clamp(bracket.midpoint(), eps, T::one() - eps);
    Ok(ThresholdDescriptor::Interior(theta))
}

/// Per-time threshold descriptors; entry `T` is the terminal passive action.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySchedule<T> {
    decisions: Vec<ThresholdDescriptor<T>>,
}

impl<T: Real> PolicySchedule<T> {
    /// Builds a schedule from the decisions for `t = 0..T-1`.
    pub fn new(mut decisions: Vec<ThresholdDescriptor<T>>) -> Self {
        decisions.push(ThresholdDescriptor::AlwaysA0);
        PolicySchedule { decisions }
    }

    /// The same decision at every non-terminal time.
    pub fn constant(horizon: usize, d: ThresholdDescriptor<T>) -> Self {
        Self::new(vec![d; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.decisions.len() - 1
    }

    pub fn at(&self, t: usize) -> ThresholdDescriptor<T> {
        self.decisions[t]
    }

    pub fn decisions(&self) -> &[ThresholdDescriptor<T>] {
        &self.decisions
    }

    /// Smallest threshold over `t < T` (2 stands for "never resets").
    pub fn min_threshold(&self) -> T {
        self.decisions[..self.horizon()]
            .iter()
            .map(ThresholdDescriptor::rank)
            .fold(T::lit(2.0), T::min)
    }

    /// Times `t < T` whose threshold falls below `c`, i.e. where the uniformly
    /// positive threshold condition fails at level `c`.
    pub fn positive_threshold_violations(&self, c: T) -> Vec<usize> {
        (0..self.horizon())
            .filter(|&t| self.decisions[t].rank() < c)
            .collect()
    }

    /// CSV columns (t, theta_kind, theta_value).
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "theta_kind", "theta_value"]);
        for (i, d) in self.decisions.iter().enumerate() {
            t.push(vec![i.to_string(), d.kind().into(), d.value_field()]);
        }
        t
    }
}

/// `V(t, ·)` and `G_t` on the grid for `t = 0..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable<T> {
    pub values: Vec<Vec<T>>,
    pub g_values: Vec<Vec<T>>,
}

impl<T: Real> ValueTable<T> {
    /// CSV columns (t, x, V).
    pub fn to_table(&self, nodes: &[T]) -> Table {
        let mut tab = Table::new(["t", "x", "V"]);
        for (t, row) in self.values.iter().enumerate() {
            for (&x, &v) in nodes.iter().zip(row) {
                tab.push(vec![t.to_string(), num(x), num(v)]);
            }
        }
        tab
    }
}

/// `G(x_j) = ∫ V(y) Q0(dy | x_j)` at every node.
pub fn g_function<T: Real>(kernel: &Kernel<T>, v_next: &[T]) -> Vec<T> {
    kernel.expectation_on_grid(v_next)
}

/// One backward step: `V_t = min(ρ G + R(·, z_t), ρ V_{t+1}(0) + R(·, z_t) + γ)`
/// and the switching rule for time `t`.
pub fn backstep<T: Real>(
    kernel: &Kernel<T>,
    v_next: &[T],
    z_t: T,
    params: &ModelParams<T>,
) -> Result<(Vec<T>, ThresholdDescriptor<T>)> {
    let g = g_function(kernel, v_next);
    backstep_with_g(kernel, v_next, &g, z_t, params)
}

fn backstep_with_g<T: Real>(
    kernel: &Kernel<T>,
    v_next: &[T],
    g: &[T],
    z_t: T,
    params: &ModelParams<T>,
) -> Result<(Vec<T>, ThresholdDescriptor<T>)> {
    let rho = params.rho;
    let reset_level = rho * v_next[0] + params.gamma;
    let nodes = kernel.grid().nodes();
    let v: Vec<T> = nodes
        .iter()
        .zip(g)
        .map(|(&x, &gx)| {
            let r = params.cost.eval(x, z_t);
            (rho * gx + r).min(reset_level + r)
        })
        .collect();
    let n = g.len();
    let desc = classify_switch(rho, reset_level, g[0], g[n - 1], |x| kernel.expectation(x, v_next))?;
    Ok((v, desc))
}

fn check_path<T: Real>(z_path: &[T], horizon: usize) -> Result<()> {
    if z_path.len() != horizon + 1 {
        return Err(Error::param(
            "z_path",
            format!("expected {} entries, got {}", horizon + 1, z_path.len()),
        ));
    }
    if let Some(&z) = z_path.iter().find(|&&z| !(z >= T::zero() && z <= T::one())) {
        return Err(Error::Domain {
            what: "z_t",
            value: z.as_f64(),
        });
    }
    Ok(())
}

/// Backward recursion `t = T-1, ..., 0` from `V(T, ·) = R(·, z_T)`.
pub fn solve_dp<T: Real>(
    kernel: &Kernel<T>,
    z_path: &[T],
    params: &ModelParams<T>,
) -> Result<(ValueTable<T>, PolicySchedule<T>)> {
    let horizon = params.horizon;
    check_path(z_path, horizon)?;
    let nodes = kernel.grid().nodes();
    let mut values = vec![Vec::new(); horizon + 1];
    let mut g_values = vec![Vec::new(); horizon + 1];
    let mut decisions = vec![ThresholdDescriptor::AlwaysA0; horizon];
    values[horizon] = params.cost.slice(nodes, z_path[horizon]);
    g_values[horizon] = g_function(kernel, &values[horizon]);
    for t in (0..horizon).rev() {
        let (v, d) = backstep_with_g(kernel, &values[t + 1], &g_values[t + 1], z_path[t], params)?;
        g_values[t] = g_function(kernel, &v);
        values[t] = v;
        decisions[t] = d;
    }
    Ok((ValueTable { values, g_values }, PolicySchedule::new(decisions)))
}

/// One forward step of the state law under a descriptor.
pub fn propagate<T: Real>(
    kernel: &Kernel<T>,
    mu: &GridMeasure<T>,
    d: ThresholdDescriptor<T>,
) -> Result<GridMeasure<T>> {
    match d {
        ThresholdDescriptor::AlwaysA1 => Ok(push_reset_all(kernel.grid(), mu)),
        ThresholdDescriptor::Interior(r) => push_threshold(kernel, mu, r),
        // {x = 1} carries no mass under a density innovation
        ThresholdDescriptor::Boundary | ThresholdDescriptor::AlwaysA0 => push_a0(kernel, mu),
    }
}

/// Mass that takes the reset action under `d`.
pub fn reset_mass<T: Real>(kernel: &Kernel<T>, mu: &GridMeasure<T>, d: ThresholdDescriptor<T>) -> T {
    match d {
        ThresholdDescriptor::AlwaysA1 => mu.mass(kernel.grid()),
        ThresholdDescriptor::Interior(r) => mu.tail_mass(kernel.grid(), r),
        ThresholdDescriptor::Boundary | ThresholdDescriptor::AlwaysA0 => T::zero(),
    }
}

/// `∫ R(x, z) μ(dx)`.
pub fn expected_cost<T: Real>(kernel: &Kernel<T>, mu: &GridMeasure<T>, params: &ModelParams<T>, z: T) -> T {
    let grid = kernel.grid();
    let integrand: Vec<T> = grid
        .nodes()
        .iter()
        .zip(&mu.density)
        .map(|(&x, &g)| params.cost.eval(x, z) * g)
        .collect();
    mu.atom0 * params.cost.eval(T::zero(), z) + grid.integrate(&integrand)
}

/// Expected discounted cost of `schedule` against `z_path` from `μ0`.
pub fn evaluate_policy_cost<T: Real>(
    kernel: &Kernel<T>,
    schedule: &PolicySchedule<T>,
    z_path: &[T],
    mu0: &GridMeasure<T>,
    params: &ModelParams<T>,
) -> Result<T> {
    let horizon = schedule.horizon();
    check_path(z_path, horizon)?;
    let mut mu = mu0.clone();
    let mut total = T::zero();
    let mut discount = T::one();
    for t in 0..=horizon {
        let d = schedule.at(t);
        total += discount * (expected_cost(kernel, &mu, params, z_path[t]) + params.gamma * reset_mass(kernel, &mu, d));
        if t < horizon {
            mu = propagate(kernel, &mu, d)?;
        }
        discount *= params.rho;
    }
    Ok(total)
}
