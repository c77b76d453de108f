//! Model parameters and the risk cost `R(x, z)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Probe resolution used to check monotonicity of non-tabulated costs.
const PROBE_POINTS: usize = 101;

/// A scalar function on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve<T> {
    /// `intercept + slope * x`
    Affine { intercept: T, slope: T },
    /// `offset + scale * x^exponent`
    Power { offset: T, scale: T, exponent: T },
    /// `offset + scale * (exp(rate * x) - 1)`
    Exponential { offset: T, scale: T, rate: T },
    /// Piecewise-linear interpolation through `(x[i], y[i])`, `x` strictly
    /// increasing and spanning [0, 1].
    Table { x: Vec<T>, y: Vec<T> },
    /// `value` everywhere.
    Constant { value: T },
}

impl<T: Real> Curve<T> {
    pub fn affine(intercept: T, slope: T) -> Self {
        Curve::Affine { intercept, slope }
    }

    pub fn constant(value: T) -> Self {
        Curve::Constant { value }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            Curve::Affine { intercept, slope } => *intercept + *slope * x,
            Curve::Power {
                offset,
                scale,
                exponent,
            } => *offset + *scale * x.max(T::zero()).powf(*exponent),
            Curve::Exponential {
                offset,
                scale,
                rate,
            } => *offset + *scale * (*rate * x).exp_m1(),
            Curve::Table { x: xs, y: ys } => interpolate_table(xs, ys, x),
            Curve::Constant { value } => *value,
        }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if let Curve::Table { x, y } = self {
            validate_axis(name, x)?;
            if y.len() != x.len() {
                return Err(Error::param(name, "table x and y lengths differ"));
            }
        }
        Ok(())
    }

    /// Strict increase: adjacent differences of table values, or of the curve
    /// probed on a uniform grid, are all positive.
    pub fn is_strictly_increasing(&self) -> bool {
        match self {
            Curve::Table { y, .. } => y.windows(2).all(|w| w[1] > w[0]),
            Curve::Constant { .. } => false,
            _ => probe(PROBE_POINTS)
                .windows(2)
                .all(|w| self.eval(w[1]) > self.eval(w[0])),
        }
    }

    pub fn min_on_unit(&self) -> T {
        match self {
            Curve::Table { y, .. } => y.iter().copied().fold(T::infinity(), T::min),
            _ => probe(PROBE_POINTS)
                .into_iter()
                .map(|x| self.eval(x))
                .fold(T::infinity(), T::min),
        }
    }
}

fn probe<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
        .collect()
}

fn validate_axis<T: Real>(name: &'static str, axis: &[T]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::param(name, "table axis needs at least two points"));
    }
    if !axis.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::param(name, "table axis must be strictly increasing"));
    }
    if axis[0] > T::zero() || axis[axis.len() - 1] < T::one() {
        return Err(Error::param(name, "table axis must span [0, 1]"));
    }
    Ok(())
}

fn bracket<T: Real>(axis: &[T], x: T) -> (usize, T) {
    let k = match axis.iter().position(|&a| a > x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => axis.len() - 2,
    }
    .min(axis.len() - 2);
    let w = ((x - axis[k]) / (axis[k + 1] - axis[k])).max(T::zero()).min(T::one());
    (k, w)
}

fn interpolate_table<T: Real>(xs: &[T], ys: &[T], x: T) -> T {
    let (k, w) = bracket(xs, x);
    ys[k] + w * (ys[k + 1] - ys[k])
}

/// `R(x, z)` tabulated on a rectangular grid, bilinear in between.
/// `values[i][j] = R(x[i], z[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable<T> {
    pub x: Vec<T>,
    pub z: Vec<T>,
    pub values: Vec<Vec<T>>,
}

impl<T: Real> CostTable<T> {
    pub fn eval(&self, x: T, z: T) -> T {
        let (i, wx) = bracket(&self.x, x);
        let (j, wz) = bracket(&self.z, z);
        let v = &self.values;
        let lo = v[i][j] + wz * (v[i][j + 1] - v[i][j]);
        let hi = v[i + 1][j] + wz * (v[i + 1][j + 1] - v[i + 1][j]);
        lo + wx * (hi - lo)
    }

    fn validate(&self) -> Result<()> {
        validate_axis("cost.x", &self.x)?;
        validate_axis("cost.z", &self.z)?;
        if self.values.len() != self.x.len() || self.values.iter().any(|r| r.len() != self.z.len()) {
            return Err(Error::param("cost.values", "shape must be len(x) rows of len(z)"));
        }
        Ok(())
    }
}

/// User-supplied `R(x, z)`.
pub type CostFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// The risk cost `R(x, z)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Cost<T> {
    /// `R(x, z) = R1(x) R2(z)`.
    Product { r1: Curve<T>, r2: Curve<T> },
    Table(CostTable<T>),
    #[serde(skip)]
    Custom(CostFn<T>),
}

impl<T: fmt::Debug> fmt::Debug for Cost<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Product { r1, r2 } => f.debug_struct("Product").field("r1", r1).field("r2", r2).finish(),
            Cost::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Cost::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl<T: Real> Cost<T> {
    pub fn product(r1: Curve<T>, r2: Curve<T>) -> Self {
        Cost::Product { r1, r2 }
    }

    pub fn custom(f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        Cost::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: T, z: T) -> T {
        match self {
            Cost::Product { r1, r2 } => r1.eval(x) * r2.eval(z),
            Cost::Table(t) => t.eval(x, z),
            Cost::Custom(f) => f(x, z),
        }
    }

    /// `(R1, R2)` for product-form costs.
    pub fn factors(&self) -> Option<(&Curve<T>, &Curve<T>)> {
        match self {
            Cost::Product { r1, r2 } => Some((r1, r2)),
            _ => None,
        }
    }

    /// Nodal values of `R(·, z)` on `nodes`.
    pub fn slice(&self, nodes: &[T], z: T) -> Vec<T> {
        nodes.iter().map(|&x| self.eval(x, z)).collect()
    }

    /// Structural checks plus strict increase of `R(·, z)` for every `z`
    /// (adjacent differences of tables, probe grid otherwise) and `R >= 0`.
    pub fn validate(&self) -> Result<()> {
        match self {
            Cost::Product { r1, r2 } => {
                r1.validate("cost.r1")?;
                r2.validate("cost.r2")?;
                if !r1.is_strictly_increasing() {
                    return Err(Error::Monotonicity("R1 must be strictly increasing on [0, 1]".into()));
                }
                if r1.min_on_unit() < T::zero() {
                    return Err(Error::Monotonicity("R1 must be nonnegative".into()));
                }
                if r2.min_on_unit() <= T::zero() {
                    return Err(Error::Monotonicity("R2 must be positive on [0, 1]".into()));
                }
                Ok(())
            }
            Cost::Table(t) => {
                t.validate()?;
                for j in 0..t.z.len() {
                    for i in 1..t.x.len() {
                        if t.values[i][j] <= t.values[i - 1][j] {
                            return Err(Error::Monotonicity(format!(
                                "R(., z) not strictly increasing in x at z = {}, x = {}",
                                t.z[j], t.x[i]
                            )));
                        }
                    }
                }
                if t.values.iter().flatten().any(|&v| v < T::zero()) {
                    return Err(Error::Monotonicity("R must be nonnegative".into()));
                }
                Ok(())
            }
            Cost::Custom(f) => {
                let xs = probe::<T>(PROBE_POINTS);
                for z in probe::<T>(11) {
                    if !xs.windows(2).all(|w| f(w[1], z) > f(w[0], z)) {
                        return Err(Error::Monotonicity(format!(
                            "R(., z) not strictly increasing at z = {z}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Product form with a strictly increasing `R2` (positive externalities).
    pub fn has_positive_externality(&self) -> bool {
        matches!(self, Cost::Product { r2, .. } if r2.is_strictly_increasing())
    }

    /// `R` does not depend on `z`.
    pub fn is_decoupled(&self) -> bool {
        match self {
            Cost::Product { r2, .. } => matches!(r2, Curve::Constant { .. }),
            _ => false,
        }
    }

    /// `max_{x, z} R(x, z)` over a probe grid (exact for monotone-in-x costs
    /// evaluated at x = 1).
    pub fn max_value(&self) -> T {
        probe::<T>(PROBE_POINTS)
            .into_iter()
            .map(|z| self.eval(T::one(), z))
            .fold(T::neg_infinity(), T::max)
    }
}

/// Parameters of the finite-horizon and stationary problems.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Discount factor in (0, 1).
    pub rho: T,
    /// Effort cost of the reset action.
    pub gamma: T,
    /// Finite horizon `T`.
    pub horizon: usize,
    /// Mean of the initial law.
    pub m0: T,
    pub cost: Cost<T>,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_xi_n")]
    pub xi_n: usize,
}

fn default_grid_n() -> usize {
    crate::grid::DEFAULT_GRID_NODES
}

fn default_xi_n() -> usize {
    crate::kernel::DEFAULT_XI_NODES
}

impl<T: Real> ModelParams<T> {
    pub fn new(rho: T, gamma: T, horizon: usize, m0: T, cost: Cost<T>) -> Self {
        ModelParams {
            rho,
            gamma,
            horizon,
            m0,
            cost,
            grid_n: default_grid_n(),
            xi_n: default_xi_n(),
        }
    }

    pub fn with_grid(mut self, grid_n: usize) -> Self {
        self.grid_n = grid_n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero() && self.rho < T::one()) {
            return Err(Error::param("rho", format!("discount factor must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.gamma > T::zero() && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("effort cost must be positive, got {}", self.gamma)));
        }
        if !(self.m0 >= T::zero() && self.m0 <= T::one()) {
            return Err(Error::param("m0", format!("initial mean must lie in [0, 1], got {}", self.m0)));
        }
        if self.grid_n < 2 || self.xi_n < 2 {
            return Err(Error::param("grid_n", "grids need at least two nodes"));
        }
        self.cost.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_cost() -> Cost<f64> {
        Cost::product(Curve::affine(0.0, 1.0), Curve::affine(0.5, 1.0))
    }

    #[test]
    fn curves_evaluate() {
        assert_eq!(Curve::affine(1.0, 2.0).eval(0.25), 1.5);
        let p = Curve::Power { offset: 0.1, scale: 2.0, exponent: 2.0 };
        assert!((p.eval(0.5f64) - 0.6).abs() < 1e-15);
        let t = Curve::Table { x: vec![0.0, 0.5, 1.0], y: vec![0.0, 1.0, 3.0] };
        assert!((t.eval(0.75f64) - 2.0).abs() < 1e-15);
        assert!(t.is_strictly_increasing());
        assert!(!Curve::constant(1.0).is_strictly_increasing());
    }

    #[test]
    fn product_cost_and_validation() {
        let c = demo_cost();
        assert!((c.eval(0.4, 0.5) - 0.4).abs() < 1e-15);
        assert!(c.validate().is_ok());
        assert!(c.has_positive_externality());
        let bad = Cost::product(Curve::affine(1.0, -1.0), Curve::constant(1.0));
        assert!(matches!(bad.validate(), Err(Error::Monotonicity(_))));
        let zero_r2 = Cost::product(Curve::affine(0.0, 1.0), Curve::affine(0.0, 1.0));
        assert!(zero_r2.validate().is_err());
    }

    #[test]
    fn table_cost_checks_adjacent_differences() {
        let good = Cost::Table(CostTable {
            x: vec![0.0, 0.5, 1.0],
            z: vec![0.0, 1.0],
            values: vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 4.0]],
        });
        assert!(good.validate().is_ok());
        assert!((good.eval(0.25f64, 0.5) - 0.75).abs() < 1e-15);
        let flat = Cost::Table(CostTable {
            x: vec![0.0, 0.5, 1.0],
            z: vec![0.0, 1.0],
            values: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 4.0]],
        });
        assert!(matches!(flat.validate(), Err(Error::Monotonicity(_))));
    }

    #[test]
    fn params_validation_names_the_bound() {
        let p = ModelParams::new(1.2, 1.0, 5, 0.0, demo_cost());
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("rho"), "{msg}");
        let p = ModelParams::new(0.9, 0.0, 5, 0.0, demo_cost());
        assert!(p.validate().unwrap_err().to_string().contains("gamma"));
        assert!(ModelParams::new(0.9, 1.0, 5, 0.0, demo_cost()).validate().is_ok());
    }

    #[test]
    fn cost_serialization_round_trip() {
        let c = demo_cost();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.starts_with(r#"{"form":"product""#), "{s}");
        let back: Cost<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back.eval(0.3, 0.7), c.eval(0.3, 0.7));
    }
}
