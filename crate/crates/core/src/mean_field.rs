//! Finite-horizon mean-field consistency: the map Φ and its fixed point.

use crate::dp::{propagate, solve_dp, PolicySchedule, ValueTable};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measures::GridMeasure;
use crate::model::ModelParams;
use crate::num::{clamp, sup_distance, Real};
use crate::report::{num, Table};

/// Tolerance on `∫ x dμ0 = m0`.
pub const INITIAL_MEAN_TOL: f64 = 1e-6;

/// A mean trajectory `z_0, ..., z_T` with `z_0 = m0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldPath<T> {
    pub z: Vec<T>,
}

impl<T: Real> MeanFieldPath<T> {
    pub fn new(z: Vec<T>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::param("z", "path must contain z_0"));
        }
        if let Some(&bad) = z.iter().find(|&&v| !(v >= T::zero() && v <= T::one())) {
            return Err(Error::Domain {
                what: "z_t",
                value: bad.as_f64(),
            });
        }
        Ok(MeanFieldPath { z })
    }

    pub fn constant(m0: T, horizon: usize) -> Self {
        MeanFieldPath { z: vec![m0; horizon + 1] }
    }

    pub fn horizon(&self) -> usize {
        self.z.len() - 1
    }

    pub fn as_slice(&self) -> &[T] {
        &self.z
    }
}

/// Everything produced by one evaluation of Φ.
#[derive(Debug, Clone)]
pub struct PhiEvaluation<T> {
    pub output: MeanFieldPath<T>,
    pub values: ValueTable<T>,
    pub schedule: PolicySchedule<T>,
    pub mu_path: Vec<GridMeasure<T>>,
}

/// Checks that `μ0` is a probability measure with mean `m0`.
pub fn check_initial<T: Real>(kernel: &Kernel<T>, mu0: &GridMeasure<T>, m0: T) -> Result<()> {
    mu0.validate(kernel.grid())?;
    let mean = mu0.mean(kernel.grid());
    if (mean - m0).abs() > T::lit(INITIAL_MEAN_TOL) {
        return Err(Error::InitialMean {
            mean: mean.as_f64(),
            m0: m0.as_f64(),
        });
    }
    Ok(())
}

/// Best response to `z_path`, then the means of the induced state laws.
pub fn phi_evaluate<T: Real>(
    kernel: &Kernel<T>,
    z_path: &MeanFieldPath<T>,
    mu0: &GridMeasure<T>,
    params: &ModelParams<T>,
) -> Result<PhiEvaluation<T>> {
    let (values, schedule) = solve_dp(kernel, z_path.as_slice(), params)?;
    let grid = kernel.grid();
    let mut mu_path = Vec::with_capacity(params.horizon + 1);
    let mut w = Vec::with_capacity(params.horizon + 1);
    mu_path.push(mu0.clone());
    w.push(params.m0);
    for t in 0..params.horizon {
        let next = propagate(kernel, &mu_path[t], schedule.at(t))?;
        w.push(clamp(next.mean(grid), T::zero(), T::one()));
        mu_path.push(next);
    }
    Ok(PhiEvaluation {
        output: MeanFieldPath { z: w },
        values,
        schedule,
        mu_path,
    })
}

/// `Φ(z)`: the mean path generated by the best response to `z`.
pub fn phi_map<T: Real>(
    kernel: &Kernel<T>,
    z_path: &MeanFieldPath<T>,
    mu0: &GridMeasure<T>,
    params: &ModelParams<T>,
) -> Result<MeanFieldPath<T>> {
    Ok(phi_evaluate(kernel, z_path, mu0, params)?.output)
}

/// Smallest damping reached by the backoff.
pub const MIN_DAMPING: f64 = 1.0 / 64.0;

/// Controls for the damped Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions<T> {
    /// Initial damping λ in (0, 1].
    pub damping: T,
    pub tol: T,
    pub max_iter: usize,
    /// Halve λ (down to [`MIN_DAMPING`]) whenever the residual grows. A
    /// steep decreasing Φ can make a fixed λ oscillate forever.
    pub backoff: bool,
}

impl<T: Real> Default for FixedPointOptions<T> {
    fn default() -> Self {
        FixedPointOptions {
            damping: T::lit(0.5),
            tol: T::lit(1e-6),
            max_iter: 200,
            backoff: true,
        }
    }
}

impl<T: Real> FixedPointOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::param("damping", "must lie in (0, 1]"));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::param("tol", "must be positive"));
        }
        Ok(())
    }
}

/// Result of the fixed-point search; `converged == false` marks the best
/// iterate found before the iteration cap.
#[derive(Debug, Clone)]
pub struct MeanFieldSolution<T> {
    pub z_hat: MeanFieldPath<T>,
    pub schedule: PolicySchedule<T>,
    pub values: ValueTable<T>,
    pub mu_path: Vec<GridMeasure<T>>,
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<T>,
    /// Damping in force at the last update.
    pub final_damping: T,
}

impl<T: Real> MeanFieldSolution<T> {
    /// CSV columns (t, z_hat, theta_kind, theta_value, mean_mu).
    pub fn to_table(&self, kernel: &Kernel<T>) -> Table {
        let mut tab = Table::new(["t", "z_hat", "theta_kind", "theta_value", "mean_mu"]);
        for (t, (&z, mu)) in self.z_hat.z.iter().zip(&self.mu_path).enumerate() {
            let d = self.schedule.at(t);
            tab.push(vec![
                t.to_string(),
                num(z),
                d.kind().into(),
                d.value_field(),
                num(mu.mean(kernel.grid())),
            ]);
        }
        tab
    }

    /// CSV columns (iter, residual).
    pub fn residual_table(&self) -> Table {
        let mut tab = Table::new(["iter", "residual"]);
        for (k, &r) in self.residual_history.iter().enumerate() {
            tab.push(vec![k.to_string(), num(r)]);
        }
        tab
    }
}

/// Damped Picard iteration `z ← (1-λ) z + λ Φ(z)` from `z ≡ m0`.
pub fn solve_fixed_point<T: Real>(
    kernel: &Kernel<T>,
    mu0: &GridMeasure<T>,
    params: &ModelParams<T>,
    opts: &FixedPointOptions<T>,
) -> Result<MeanFieldSolution<T>> {
    params.validate()?;
    opts.validate()?;
    check_initial(kernel, mu0, params.m0)?;
    // Φ is constant when the cost ignores z, so one undamped step is exact
    let mut lambda = if params.cost.is_decoupled() { T::one() } else { opts.damping };
    let min_damping = T::lit(MIN_DAMPING).min(opts.damping);
    let mut z = MeanFieldPath::constant(params.m0, params.horizon);
    let mut history = Vec::new();
    let mut best: Option<(usize, MeanFieldPath<T>, PhiEvaluation<T>, T)> = None;
    for k in 0..=opts.max_iter {
        let eval = phi_evaluate(kernel, &z, mu0, params)?;
        let res = sup_distance(&eval.output.z, &z.z);
        if opts.backoff && history.last().is_some_and(|&prev| res > prev) {
            lambda = (lambda / T::lit(2.0)).max(min_damping);
        }
        history.push(res);
        let next: Vec<T> = z
            .z
            .iter()
            .zip(&eval.output.z)
            .map(|(&a, &b)| clamp((T::one() - lambda) * a + lambda * b, T::zero(), T::one()))
            .collect();
        if best.as_ref().is_none_or(|b| res < b.3) {
            best = Some((k, z.clone(), eval, res));
        }
        if res <= opts.tol {
            break;
        }
        z = MeanFieldPath { z: next };
        z.z[0] = params.m0;
    }
    let (k, z_hat, eval, residual) = best.expect("at least one evaluation");
    let converged = residual <= opts.tol;
    Ok(MeanFieldSolution {
        z_hat,
        schedule: eval.schedule,
        values: eval.values,
        mu_path: eval.mu_path,
        residual,
        iterations: if converged { history.len() - 1 } else { k },
        converged,
        residual_history: history,
        final_damping: lambda,
    })
}
