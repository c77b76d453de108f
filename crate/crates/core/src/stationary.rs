//! Stationary mean-field equilibrium: the discounted value operator, the
//! threshold rule θ(z), invariant laws π_θ, the map z(θ) and the equilibrium
//! root of `h(z) = z(θ(z)) - z`.

use std::cell::{Cell, RefCell};

use rayon::prelude::*;

use crate::dp::{classify_switch, ThresholdDescriptor};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measures::{push_point, push_threshold, tv_distance, GridMeasure};
use crate::model::{Cost, ModelParams};
use crate::num::{clamp, sup_distance, Real};
use crate::report::{num, Table};
use crate::roots::{bisect, illinois};

/// How the stationary value function is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueMethod {
    /// Exact solve of the discretized Bellman equation: back-substitution
    /// for a given `V(0)` plus a scalar root for `V(0)` itself.
    #[default]
    Anchor,
    /// Plain value iteration `g ← L g` from `g = 0`.
    Iteration,
}

/// Tolerances and caps for the stationary solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions<T> {
    pub method: ValueMethod,
    /// Value iteration stops when `‖g_{k+1} - g_k‖∞ <= value_tol (1 - ρ)`.
    pub value_tol: T,
    pub max_value_iter: usize,
    /// Power iteration stops when successive laws are within this TV distance.
    pub dist_tol: T,
    pub max_dist_iter: usize,
    /// Width of the final bracket around the equilibrium mean.
    pub root_tol: T,
    /// Points in the scan used for non-monotone costs and the uniqueness probe.
    pub n_scan: usize,
}

impl<T: Real> Default for StationaryOptions<T> {
    fn default() -> Self {
        StationaryOptions {
            method: ValueMethod::Anchor,
            value_tol: T::lit(1e-12),
            max_value_iter: 100_000,
            dist_tol: T::lit(1e-14),
            max_dist_iter: 100_000,
            root_tol: T::lit(1e-10),
            n_scan: 101,
        }
    }
}

/// `(L g)(x) = min(ρ ∫ g dQ0(·|x) + c(x), ρ g(0) + c(x) + γ)` on the grid,
/// for nodal running costs `costs`.
pub fn lop<T: Real>(kernel: &Kernel<T>, rho: T, gamma: T, costs: &[T], g: &[T]) -> Vec<T> {
    let eg = kernel.expectation_on_grid(g);
    let reset = rho * g[0] + gamma;
    eg.iter()
        .zip(costs)
        .map(|(&e, &c)| (rho * e + c).min(reset + c))
        .collect()
}

/// Value iteration from `warm` (or zero). Returns the iterate and the number
/// of sweeps.
pub fn value_iteration<T: Real>(
    kernel: &Kernel<T>,
    rho: T,
    gamma: T,
    costs: &[T],
    tol: T,
    max_iter: usize,
    warm: Option<&[T]>,
) -> Result<(Vec<T>, usize)> {
    let mut g = warm.map_or_else(|| vec![T::zero(); costs.len()], <[T]>::to_vec);
    let stop = tol * (T::one() - rho);
    let mut change = T::infinity();
    for k in 1..=max_iter {
        let next = lop(kernel, rho, gamma, costs, &g);
        change = sup_distance(&next, &g);
        g = next;
        if change <= stop {
            return Ok((g, k));
        }
    }
    Err(Error::NotConverged {
        what: "value iteration",
        iterations: max_iter,
        last_change: change.as_f64(),
    })
}

/// Given the anchor `c = V(0)`, solves `V_i = min(ρ Σ_k P_ik V_k + c_i, ρ c + c_i + γ)`
/// from the top node down (the transfer rows are upper triangular).
fn back_substitute<T: Real>(kernel: &Kernel<T>, rho: T, gamma: T, costs: &[T], anchor: T, v: &mut [T]) {
    let reset = rho * anchor + gamma;
    for i in (0..costs.len()).rev() {
        let cont = (costs[i] + rho * kernel.upper_expectation(i, v)) / (T::one() - rho * kernel.self_weight(i));
        v[i] = cont.min(reset + costs[i]);
    }
}

/// Exact fixed point of [`lop`]. The map `c ↦ c - V_0(c)` has slope at least
/// `1 - ρ`, so its root is unique and bracketed by the prior bounds.
pub fn anchor_value<T: Real>(kernel: &Kernel<T>, rho: T, gamma: T, costs: &[T]) -> Result<Vec<T>> {
    let n = costs.len();
    let c_min = costs.iter().copied().fold(T::infinity(), T::min);
    let c_max = costs.iter().copied().fold(T::neg_infinity(), T::max);
    let scale = T::one().max(c_max.abs() / (T::one() - rho)).max(gamma.abs());
    let slack = T::lit(1e-6) * scale;
    let lo = c_min / (T::one() - rho) - slack;
    let hi = (c_max / (T::one() - rho)).min(costs[0] + (gamma + rho * costs[0]) / (T::one() - rho)) + slack;
    let mut v = vec![T::zero(); n];
    let tol = T::epsilon() * T::lit(16.0) * scale;
    let (anchor, _) = illinois(
        |c| {
            back_substitute(kernel, rho, gamma, costs, c, &mut v);
            v[0] - c
        },
        lo,
        hi,
        tol,
        500,
    )?;
    back_substitute(kernel, rho, gamma, costs, anchor, &mut v);
    // one sweep of L removes the residual of the scalar root
    Ok(lop(kernel, rho, gamma, costs, &v))
}

/// Stationary value for nodal costs with the method chosen in `opts`.
pub fn solve_value<T: Real>(
    kernel: &Kernel<T>,
    rho: T,
    gamma: T,
    costs: &[T],
    opts: &StationaryOptions<T>,
) -> Result<Vec<T>> {
    match opts.method {
        ValueMethod::Anchor => anchor_value(kernel, rho, gamma, costs),
        ValueMethod::Iteration => {
            value_iteration(kernel, rho, gamma, costs, opts.value_tol, opts.max_value_iter, None).map(|r| r.0)
        }
    }
}

/// `V` solving the stationary Bellman equation for a frozen mean `z`.
pub fn solve_stationary_value<T: Real>(
    kernel: &Kernel<T>,
    params: &ModelParams<T>,
    z: T,
    opts: &StationaryOptions<T>,
) -> Result<Vec<T>> {
    check_z(z)?;
    let costs = params.cost.slice(kernel.grid().nodes(), z);
    solve_value(kernel, params.rho, params.gamma, &costs, opts)
}

/// Switching rule applied to a stationary value function.
pub fn threshold_from_values<T: Real>(
    kernel: &Kernel<T>,
    rho: T,
    gamma: T,
    v: &[T],
) -> Result<ThresholdDescriptor<T>> {
    let n = v.len();
    let g0 = kernel.expectation(T::zero(), v);
    classify_switch(rho, rho * v[0] + gamma, g0, v[n - 1], |x| kernel.expectation(x, v))
}

/// θ(z) together with the value function it was read from.
pub fn threshold_of_z<T: Real>(
    kernel: &Kernel<T>,
    params: &ModelParams<T>,
    z: T,
    opts: &StationaryOptions<T>,
) -> Result<(ThresholdDescriptor<T>, Vec<T>)> {
    let v = solve_stationary_value(kernel, params, z, opts)?;
    Ok((threshold_from_values(kernel, params.rho, params.gamma, &v)?, v))
}

/// Descriptor for a numeric threshold in `[0, 1]`.
pub fn descriptor_of<T: Real>(theta: T) -> Result<ThresholdDescriptor<T>> {
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(Error::Domain {
            what: "theta",
            value: theta.as_f64(),
        });
    }
    Ok(if theta == T::zero() {
        ThresholdDescriptor::AlwaysA1
    } else if theta == T::one() {
        ThresholdDescriptor::Boundary
    } else {
        ThresholdDescriptor::Interior(theta)
    })
}

/// Invariant law of the threshold chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryLaw<T> {
    pub measure: GridMeasure<T>,
    pub iterations: usize,
    pub last_change: T,
    pub converged: bool,
}

/// Round-off floor of a TV distance summed over `n` nodes; successive power
/// iterates cannot be resolved below it.
pub fn dist_floor<T: Real>(n: usize) -> T {
    T::epsilon() * T::lit(8.0) * T::from_usize_lossy(n)
}

/// Unit mass at `x = 1`, held by the top node.
pub fn unit_atom_at_one<T: Real>(kernel: &Kernel<T>) -> GridMeasure<T> {
    let grid = kernel.grid();
    let n = grid.len();
    let mut density = vec![T::zero(); n];
    density[n - 1] = T::one() / grid.trapezoid_weights()[n - 1];
    GridMeasure { atom0: T::zero(), density }
}

/// π_θ: power iteration of the threshold push from the atom at 0 for an
/// interior θ; the unit atom at 0 for θ = 0; the unit atom at 1 otherwise.
pub fn stationary_distribution<T: Real>(
    kernel: &Kernel<T>,
    theta: ThresholdDescriptor<T>,
    tol: T,
    max_iter: usize,
) -> Result<StationaryLaw<T>> {
    let n = kernel.grid().len();
    let exact = |measure| StationaryLaw {
        measure,
        iterations: 0,
        last_change: T::zero(),
        converged: true,
    };
    let r = match theta {
        ThresholdDescriptor::AlwaysA1 => return Ok(exact(GridMeasure::unit_atom(n))),
        ThresholdDescriptor::Boundary | ThresholdDescriptor::AlwaysA0 => return Ok(exact(unit_atom_at_one(kernel))),
        ThresholdDescriptor::Interior(r) => r,
    };
    let tol = tol.max(dist_floor::<T>(n));
    let grid = kernel.grid();
    let mut mu = GridMeasure::unit_atom(n);
    let mut change = T::infinity();
    for k in 1..=max_iter {
        let next = push_threshold(kernel, &mu, r)?;
        change = tv_distance(grid, &next, &mu);
        mu = next;
        if change <= tol {
            return Ok(StationaryLaw {
                measure: mu,
                iterations: k,
                last_change: change,
                converged: true,
            });
        }
    }
    Ok(StationaryLaw {
        measure: mu,
        iterations: max_iter,
        last_change: change,
        converged: false,
    })
}

fn converged_law<T: Real>(
    kernel: &Kernel<T>,
    theta: ThresholdDescriptor<T>,
    opts: &StationaryOptions<T>,
) -> Result<StationaryLaw<T>> {
    let law = stationary_distribution(kernel, theta, opts.dist_tol, opts.max_dist_iter)?;
    if !law.converged {
        return Err(Error::NotConverged {
            what: "stationary distribution",
            iterations: law.iterations,
            last_change: law.last_change.as_f64(),
        });
    }
    Ok(law)
}

/// `z(θ) = ∫ x π_θ(dx)`.
pub fn z_of_theta<T: Real>(
    kernel: &Kernel<T>,
    theta: ThresholdDescriptor<T>,
    opts: &StationaryOptions<T>,
) -> Result<T> {
    let law = converged_law(kernel, theta, opts)?;
    Ok(clamp(law.measure.mean(kernel.grid()), T::zero(), T::one()))
}

/// `z(θ)` over a list of numeric thresholds in `[0, 1]` (evaluated in parallel).
pub fn theta_sweep<T: Real>(kernel: &Kernel<T>, thetas: &[T], opts: &StationaryOptions<T>) -> Result<Vec<T>> {
    thetas
        .par_iter()
        .map(|&t| z_of_theta(kernel, descriptor_of(t)?, opts))
        .collect()
}

/// CSV columns (theta, z_of_theta).
pub fn theta_sweep_table<T: Real>(thetas: &[T], zs: &[T]) -> Table {
    let mut tab = Table::new(["theta", "z_of_theta"]);
    for (&t, &z) in thetas.iter().zip(zs) {
        tab.push(vec![num(t), num(z)]);
    }
    tab
}

fn check_z<T: Real>(z: T) -> Result<()> {
    if !(z >= T::zero() && z <= T::one()) {
        return Err(Error::Domain {
            what: "z",
            value: z.as_f64(),
        });
    }
    Ok(())
}

/// One evaluation of `h(z) = z(θ(z)) - z` with its by-products.
#[derive(Debug, Clone)]
pub struct HEvaluation<T> {
    pub z: T,
    pub theta: ThresholdDescriptor<T>,
    pub values: Vec<T>,
    pub law: GridMeasure<T>,
    pub h: T,
}

pub fn h_evaluate<T: Real>(
    kernel: &Kernel<T>,
    params: &ModelParams<T>,
    z: T,
    opts: &StationaryOptions<T>,
) -> Result<HEvaluation<T>> {
    let (theta, values) = threshold_of_z(kernel, params, z, opts)?;
    let law = converged_law(kernel, theta, opts)?.measure;
    let mean = clamp(law.mean(kernel.grid()), T::zero(), T::one());
    Ok(HEvaluation {
        z,
        theta,
        values,
        law,
        h: mean - z,
    })
}

/// Stationary equilibrium triple `(ẑ, θ̂, π̂)`.
#[derive(Debug, Clone)]
pub struct StationarySolution<T> {
    pub z_hat: T,
    pub theta_hat: ThresholdDescriptor<T>,
    pub pi_hat: GridMeasure<T>,
    pub values: Vec<T>,
    /// `|z(θ(ẑ)) - ẑ|`.
    pub residual: T,
    /// Evaluations of `h` spent on the root.
    pub evaluations: usize,
}

impl<T: Real> StationarySolution<T> {
    fn from_eval(e: HEvaluation<T>, evaluations: usize) -> Self {
        StationarySolution {
            z_hat: e.z,
            theta_hat: e.theta,
            pi_hat: e.law,
            values: e.values,
            residual: e.h.abs(),
            evaluations,
        }
    }
}

/// Root of `h` inside `[lo, hi]`, which must satisfy `h(lo) >= 0 >= h(hi)`.
pub fn solve_stationary_in<T: Real>(
    kernel: &Kernel<T>,
    params: &ModelParams<T>,
    lo: T,
    hi: T,
    opts: &StationaryOptions<T>,
) -> Result<StationarySolution<T>> {
    check_z(lo)?;
    check_z(hi)?;
    let failure = RefCell::new(None);
    let evaluations = Cell::new(0);
    let h = |z: T| {
        evaluations.set(evaluations.get() + 1);
        match h_evaluate(kernel, params, z, opts) {
            Ok(e) => e.h,
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                T::nan()
            }
        }
    };
    let (h_lo, h_hi) = (h(lo), h(hi));
    if let Some(err) = failure.take() {
        return Err(err);
    }
    if h_lo < T::zero() || h_hi > T::zero() {
        return Err(Error::NoStationarySolution {
            h0: h_lo.as_f64(),
            h1: h_hi.as_f64(),
        });
    }
    let bracket = bisect(h, lo, hi, opts.root_tol);
    if let Some(err) = failure.take() {
        return Err(err);
    }
    let bracket = bracket?;
    let a = h_evaluate(kernel, params, bracket.lo, opts)?;
    let b = h_evaluate(kernel, params, bracket.hi, opts)?;
    let best = if b.h.abs() < a.h.abs() { b } else { a };
    Ok(StationarySolution::from_eval(best, evaluations.get() + 2))
}

/// Stationary equilibrium on `[0, 1]`.
///
/// A cost that does not depend on `z` needs one evaluation. Product costs are
/// solved by bisection (h is nonincreasing when R2 increases); other costs
/// are scanned first and the first sign change is refined.
pub fn solve_stationary_equilibrium<T: Real>(
    kernel: &Kernel<T>,
    params: &ModelParams<T>,
    opts: &StationaryOptions<T>,
) -> Result<StationarySolution<T>> {
    params.validate()?;
    if params.cost.is_decoupled() {
        let e = h_evaluate(kernel, params, T::zero(), opts)?;
        let z = e.h;
        let law_mean = clamp(e.law.mean(kernel.grid()), T::zero(), T::one());
        let theta = e.theta;
        let values = e.values;
        let pi = e.law;
        return Ok(StationarySolution {
            z_hat: z,
            theta_hat: theta,
            pi_hat: pi,
            values,
            residual: (law_mean - z).abs(),
            evaluations: 1,
        });
    }
    match &params.cost {
        Cost::Product { .. } => solve_stationary_in(kernel, params, T::zero(), T::one(), opts),
        _ => {
            let probe = uniqueness_probe(kernel, params, opts)?;
            let (lo, hi) = probe.first_bracket().unwrap_or((T::zero(), T::one()));
            solve_stationary_in(kernel, params, lo, hi, opts)
        }
    }
}

/// Scan of `h` over an even grid of `z`.
#[derive(Debug, Clone)]
pub struct UniquenessReport<T> {
    pub z: Vec<T>,
    pub h: Vec<T>,
    pub thetas: Vec<ThresholdDescriptor<T>>,
    /// Changes between strictly positive and strictly negative `h`
    /// (values within the zero tolerance are skipped).
    pub sign_changes: usize,
    /// Scan points with `|h|` within the zero tolerance, and midpoints of
    /// brackets where the sign flips.
    pub near_roots: Vec<T>,
    /// Whether the cost is in product form with strictly increasing R2.
    pub assumption_holds: bool,
}

/// Scan values below this magnitude count as zero.
pub const H_ZERO_TOL: f64 = 1e-12;

impl<T: Real> UniquenessReport<T> {
    /// First scan cell where `h` goes from `>= 0` to `<= 0` through a sign change.
    pub fn first_bracket(&self) -> Option<(T, T)> {
        let tol = T::lit(H_ZERO_TOL);
        let mut last: Option<usize> = None;
        for (i, &h) in self.h.iter().enumerate() {
            if h.abs() <= tol {
                return Some((self.z[i], self.z[i]));
            }
            if let Some(j) = last {
                if self.h[j] > T::zero() && h < T::zero() {
                    return Some((self.z[j], self.z[i]));
                }
            }
            last = Some(i);
        }
        None
    }

    /// CSV columns (z, theta_kind, theta_value, h).
    pub fn to_table(&self) -> Table {
        let mut tab = Table::new(["z", "theta_kind", "theta_value", "h"]);
        for ((&z, &h), d) in self.z.iter().zip(&self.h).zip(&self.thetas) {
            tab.push(vec![num(z), d.kind().into(), d.value_field(), num(h)]);
        }
        tab
    }
}

/// Evaluates `h` on `opts.n_scan` points. More than one sign change under
/// product cost with strictly increasing R2 contradicts uniqueness and is an
/// error; otherwise the report only flags the assumption.
pub fn uniqueness_probe<T: Real>(
    kernel: &Kernel<T>,
    params: &ModelParams<T>,
    opts: &StationaryOptions<T>,
) -> Result<UniquenessReport<T>> {
    let m = opts.n_scan.max(2);
    let zs: Vec<T> = (0..m)
        .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(m - 1))
        .collect();
    let evals: Vec<HEvaluation<T>> = zs
        .par_iter()
        .map(|&z| h_evaluate(kernel, params, z, opts))
        .collect::<Result<_>>()?;
    let tol = T::lit(H_ZERO_TOL);
    let hs: Vec<T> = evals.iter().map(|e| e.h).collect();
    let mut sign_changes = 0;
    let mut near_roots = Vec::new();
    let mut last: Option<usize> = None;
    for (i, &h) in hs.iter().enumerate() {
        if h.abs() <= tol {
            near_roots.push(zs[i]);
            continue;
        }
        if let Some(j) = last {
            if (hs[j] > T::zero()) != (h > T::zero()) {
                sign_changes += 1;
                if j + 1 == i {
                    near_roots.push((zs[j] + zs[i]) / T::lit(2.0));
                }
            }
        }
        last = Some(i);
    }
    let assumption_holds = match &params.cost {
        Cost::Product { r2, .. } => r2.is_strictly_increasing(),
        _ => false,
    };
    if assumption_holds && sign_changes > 1 {
        return Err(Error::MultipleEquilibria { sign_changes });
    }
    Ok(UniquenessReport {
        z: zs,
        h: hs,
        thetas: evals.iter().map(|e| e.theta).collect(),
        sign_changes,
        near_roots,
        assumption_holds,
    })
}

/// Least-squares fit `log TV ≈ log K + t log r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFit {
    pub k: f64,
    pub r: f64,
    pub points: usize,
    /// False when fewer than three usable points remain or `r >= 1`.
    pub ok: bool,
}

/// TV series below this floor are excluded from the fit (discretization noise).
pub const FIT_FLOOR: f64 = 1e-12;

/// Fits over `t >= burn_in` while the series stays above [`FIT_FLOOR`] and
/// three decades above its own minimum, which cuts off the plateau where the
/// distance only measures the accuracy of π_θ itself.
pub fn fit_geometric(series: &[f64], burn_in: usize) -> GeometricFit {
    let plateau = series.iter().skip(burn_in).copied().fold(f64::INFINITY, f64::min);
    let cutoff = FIT_FLOOR.max(1e3 * plateau);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .skip(burn_in)
        .take_while(|(_, &v)| v > cutoff)
        .map(|(t, &v)| (t as f64, v.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return GeometricFit { k: f64::NAN, r: f64::NAN, points: n, ok: false };
    }
    let nf = n as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / nf, b + y / nf));
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let r = slope.exp();
    GeometricFit {
        k: (my - slope * mx).exp(),
        r,
        points: n,
        ok: r.is_finite() && r < 1.0,
    }
}

/// Decay of `‖P^t(x, ·) - π_θ‖_TV` from a set of initial states.
#[derive(Debug, Clone)]
pub struct ErgodicityReport<T> {
    pub theta: T,
    pub initials: Vec<T>,
    /// `tv_series[i][t]` for initial state `initials[i]`, `t = 0..=horizon`.
    pub tv_series: Vec<Vec<T>>,
    /// Fit on the worst case over the initial states.
    pub fit: GeometricFit,
    /// Per-initial fits.
    pub fits: Vec<GeometricFit>,
}

/// Steps discarded before the geometric fit.
pub const ERGODICITY_BURN_IN: usize = 2;

impl<T: Real> ErgodicityReport<T> {
    /// First time every series is below `eps`.
    pub fn first_time_below(&self, eps: T) -> Option<usize> {
        let horizon = self.tv_series.first()?.len();
        (0..horizon).find(|&t| self.tv_series.iter().all(|s| s[t] < eps))
    }

    /// CSV columns (t, initial_x, tv).
    pub fn to_table(&self) -> Table {
        let mut tab = Table::new(["t", "initial_x", "tv"]);
        for (x, series) in self.initials.iter().zip(&self.tv_series) {
            for (t, &tv) in series.iter().enumerate() {
                tab.push(vec![t.to_string(), num(*x), num(tv)]);
            }
        }
        tab
    }
}

/// Propagates point masses under the threshold chain and records the total
/// variation distance to π_θ.
pub fn ergodicity_report<T: Real>(
    kernel: &Kernel<T>,
    theta: T,
    horizon: usize,
    initials: &[T],
    opts: &StationaryOptions<T>,
) -> Result<ErgodicityReport<T>> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(Error::param("theta", "ergodicity report needs an interior threshold"));
    }
    let grid = kernel.grid();
    let n = grid.len();
    let pi = converged_law(kernel, ThresholdDescriptor::Interior(theta), opts)?.measure;
    let tv_series: Vec<Vec<T>> = initials
        .par_iter()
        .map(|&x| -> Result<Vec<T>> {
            if !(x >= T::zero() && x <= T::one()) {
                return Err(Error::Domain { what: "initial_x", value: x.as_f64() });
            }
            let mut series = Vec::with_capacity(horizon + 1);
            // a point mass away from 0 is singular to π_θ
            series.push(if x == T::zero() { T::one() - pi.atom0 } else { T::one() });
            if horizon == 0 {
                return Ok(series);
            }
            let mut mu = if x >= theta { GridMeasure::unit_atom(n) } else { push_point(kernel, x)? };
            series.push(tv_distance(grid, &mu, &pi));
            for _ in 1..horizon {
                mu = push_threshold(kernel, &mu, theta)?;
                series.push(tv_distance(grid, &mu, &pi));
            }
            Ok(series)
        })
        .collect::<Result<_>>()?;
    let as_f64 = |s: &Vec<T>| s.iter().map(|v| v.as_f64()).collect::<Vec<_>>();
    let worst: Vec<f64> = (0..=horizon)
        .map(|t| tv_series.iter().map(|s| s[t].as_f64()).fold(0.0, f64::max))
        .collect();
    Ok(ErgodicityReport {
        theta,
        initials: initials.to_vec(),
        fits: tv_series.iter().map(|s| fit_geometric(&as_f64(s), ERGODICITY_BURN_IN)).collect(),
        fit: fit_geometric(&worst, ERGODICITY_BURN_IN),
        tv_series,
    })
}
