//! Auxiliary single-agent problem with running cost `R1(x)` and effort cost
//! `r`: how the optimal threshold θ(r) moves with `r`.

use rayon::prelude::*;

use crate::dp::ThresholdDescriptor;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::model::Curve;
use crate::num::Real;
use crate::report::{num, Table};
use crate::roots::bisect;
use crate::stationary::{solve_value, threshold_from_values, StationaryOptions};

/// Bisection tolerance for the two critical effort costs.
pub const R_TOL: f64 = 1e-12;

/// The auxiliary problem: discount `rho` and running cost `r1`.
#[derive(Debug, Clone)]
pub struct AuxProblem<'a, T> {
    pub kernel: &'a Kernel<T>,
    pub r1: &'a Curve<T>,
    pub rho: T,
    pub opts: StationaryOptions<T>,
}

/// Critical effort costs: θ(r) = 0 below `r_low`, 1⁺ above `r_high`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RBounds<T> {
    pub r_low: T,
    pub r_high: T,
    /// `∫ R1 dQ0(·|0) - R1(0)`.
    pub c_r1: T,
}

impl<T: Real> RBounds<T> {
    /// Lower bound on `r_low`: `ρ (1 - ρ) C_R1`.
    pub fn low_floor(&self, rho: T) -> T {
        rho * (T::one() - rho) * self.c_r1
    }

    /// CSV columns (r_low, r_high, c_r1).
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["r_low", "r_high", "c_r1"]);
        t.push(vec![num(self.r_low), num(self.r_high), num(self.c_r1)]);
        t
    }
}

impl<'a, T: Real> AuxProblem<'a, T> {
    pub fn new(kernel: &'a Kernel<T>, r1: &'a Curve<T>, rho: T) -> Result<Self> {
        r1.validate("r1")?;
        if !(rho > T::zero() && rho < T::one()) {
            return Err(Error::param("rho", "must lie in (0, 1)"));
        }
        Ok(AuxProblem {
            kernel,
            r1,
            rho,
            opts: StationaryOptions::default(),
        })
    }

    fn costs(&self) -> Vec<T> {
        self.kernel.grid().tabulate(|x| self.r1.eval(x))
    }

    /// `v_r` on the grid.
    pub fn value(&self, r: T) -> Result<Vec<T>> {
        if !(r >= T::zero()) {
            return Err(Error::Domain { what: "r", value: r.as_f64() });
        }
        solve_value(self.kernel, self.rho, r, &self.costs(), &self.opts)
    }

    /// θ(r).
    pub fn theta_of_r(&self, r: T) -> Result<ThresholdDescriptor<T>> {
        let v = self.value(r)?;
        threshold_from_values(self.kernel, self.rho, r, &v)
    }

    /// θ(r) over a list of effort costs (evaluated in parallel).
    pub fn sweep(&self, rs: &[T]) -> Result<Vec<ThresholdDescriptor<T>>> {
        rs.par_iter().map(|&r| self.theta_of_r(r)).collect()
    }

    /// `C_R1 = ∫ R1 dQ0(·|0) - R1(0)`, with the same quadrature as the solver.
    pub fn c_r1(&self) -> T {
        self.kernel.expectation(T::zero(), &self.costs()) - self.r1.eval(T::zero())
    }

    /// `ρ R1(1) / (1 - ρ)`: above it the reset never pays.
    pub fn high_ceiling(&self) -> T {
        self.rho * self.r1.eval(T::one()) / (T::one() - self.rho)
    }

    /// Bisects the switching residuals at `x = 0` (for `r_low`) and `x = 1`
    /// (for `r_high`).
    pub fn r_bounds(&self) -> Result<RBounds<T>> {
        if !self.r1.is_strictly_increasing() {
            return Err(Error::Monotonicity("r1 must be strictly increasing".into()));
        }
        let rho = self.rho;
        let kernel = self.kernel;
        let ceiling = self.high_ceiling();
        let hi = ceiling * (T::one() + T::lit(1e-9)) + T::lit(1e-12);
        let tol = T::lit(R_TOL) * T::one().max(ceiling);
        let mut failure = None;
        let mut residual = |r: T, at_top: bool| -> T {
            match self.value(r) {
                Ok(v) => {
                    let n = v.len();
                    if at_top {
                        rho * v[n - 1] - rho * v[0] - r
                    } else {
                        rho * kernel.expectation(T::zero(), &v) - rho * v[0] - r
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    T::nan()
                }
            }
        };
        let low = bisect(|r| residual(r, false), T::zero(), hi, tol);
        let high = bisect(|r| residual(r, true), T::zero(), hi, tol);
        if let Some(e) = failure {
            return Err(e);
        }
        let (low, high) = (low?, high?);
        Ok(RBounds {
            r_low: low.midpoint(),
            r_high: high.midpoint(),
            c_r1: self.c_r1(),
        })
    }
}

/// CSV columns (r, theta_kind, theta_value).
pub fn r_sweep_table<T: Real>(rs: &[T], thetas: &[ThresholdDescriptor<T>]) -> Table {
    let mut t = Table::new(["r", "theta_kind", "theta_value"]);
    for (&r, d) in rs.iter().zip(thetas) {
        t.push(vec![num(r), d.kind().into(), d.value_field()]);
    }
    t
}
