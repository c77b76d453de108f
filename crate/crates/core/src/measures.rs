//! State laws made of an atom at the reset point plus a density on (0, 1].
//!
//! The density is stored by its nodal values and read as the piecewise-linear
//! interpolant, so its mass is the trapezoid integral. Pushes move each node's
//! trapezoid mass through the transfer rows of [`Kernel`]; the threshold push
//! splits the cell containing the threshold exactly, which keeps the output
//! continuous in the threshold.

use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::kernel::{check_unit, Kernel};
use crate::num::{clamp, Real};
use crate::report::{num, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure<T> {
    /// Mass at state 0.
    pub atom0: T,
    /// Nodal density values on the state grid.
    pub density: Vec<T>,
}

fn mass_tolerance<T: Real>() -> T {
    T::lit(1e-8).max(T::epsilon() * T::lit(1e3))
}

impl<T: Real> GridMeasure<T> {
    /// Unit mass at 0.
    pub fn unit_atom(n: usize) -> Self {
        GridMeasure {
            atom0: T::one(),
            density: vec![T::zero(); n],
        }
    }

    /// Uniform law on [0, 1].
    pub fn uniform(n: usize) -> Self {
        GridMeasure {
            atom0: T::zero(),
            density: vec![T::one(); n],
        }
    }

    /// `atom0 δ₀ + f(x) dx`, with `f` tabulated on the grid and rescaled so
    /// that the total mass is one.
    pub fn from_density(grid: &StateGrid<T>, atom0: T, f: impl Fn(T) -> T) -> Result<Self> {
        if !(atom0 >= T::zero() && atom0 <= T::one()) {
            return Err(Error::param("atom0", format!("must lie in [0, 1], got {atom0}")));
        }
        let mut density = grid.tabulate(f);
        if density.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(Error::param("density", "values must be finite and nonnegative"));
        }
        let mass = grid.integrate(&density);
        let target = T::one() - atom0;
        if mass <= T::zero() {
            if target > mass_tolerance() {
                return Err(Error::param("density", "zero density with atom below one"));
            }
        } else {
            let s = target / mass;
            density.iter_mut().for_each(|v| *v *= s);
        }
        Ok(GridMeasure { atom0, density })
    }

    pub fn mass(&self, grid: &StateGrid<T>) -> T {
        self.atom0 + grid.integrate(&self.density)
    }

    /// `∫ x μ(dx)`.
    pub fn mean(&self, grid: &StateGrid<T>) -> T {
        let n = grid.len();
        let nodes = grid.nodes();
        let inner: T = (1..n - 1).map(|i| nodes[i] * self.density[i]).sum();
        grid.step() * (inner + self.density[n - 1] / T::lit(2.0))
    }

    /// Checks nonnegativity and unit mass.
    pub fn validate(&self, grid: &StateGrid<T>) -> Result<()> {
        if self.density.len() != grid.len() {
            return Err(Error::param("density", "length differs from the grid"));
        }
        if !(self.atom0 >= T::zero()) || self.density.iter().any(|&v| !(v >= T::zero())) {
            return Err(Error::param("density", "negative mass"));
        }
        let m = self.mass(grid);
        if (m - T::one()).abs() > mass_tolerance() {
            return Err(Error::MassDefect {
                input: 1.0,
                output: m.as_f64(),
            });
        }
        Ok(())
    }

    /// Mass in `[r, 1]` of the density part (the atom sits at 0 < r).
    pub fn tail_mass(&self, grid: &StateGrid<T>, r: T) -> T {
        let mut reset = T::zero();
        self.split_at(grid, r, |_, _| {}, |_, _| {}, |m| reset += m);
        reset
    }

    /// Walks the cells and routes the density part below `r` to `keep_node`
    /// (node index, mass) or `keep_point` (position, mass), and the part at
    /// or above `r` to `reset`.
    fn split_at(
        &self,
        grid: &StateGrid<T>,
        r: T,
        mut keep_node: impl FnMut(usize, T),
        mut keep_point: impl FnMut(T, T),
        mut reset: impl FnMut(T),
    ) {
        let nodes = grid.nodes();
        let g = &self.density;
        let half = T::lit(0.5);
        for c in 0..nodes.len() - 1 {
            let width = nodes[c + 1] - nodes[c];
            let kept = clamp(r - nodes[c], T::zero(), width);
            if kept >= width {
                keep_node(c, half * width * g[c]);
                keep_node(c + 1, half * width * g[c + 1]);
            } else if kept > T::zero() {
                let g_r = g[c] + (g[c + 1] - g[c]) * (kept / width);
                keep_node(c, half * kept * g[c]);
                keep_point(nodes[c] + kept, half * kept * g_r);
                reset(half * (width - kept) * (g_r + g[c + 1]));
            } else {
                reset(half * width * (g[c] + g[c + 1]));
            }
        }
    }

    /// CSV dump with columns (x, density, atom0); the atom is reported on row 0.
    pub fn to_table(&self, grid: &StateGrid<T>) -> Table {
        let mut t = Table::new(["x", "density", "atom0"]);
        for (i, (&x, &g)) in grid.nodes().iter().zip(&self.density).enumerate() {
            let atom = if i == 0 { num(self.atom0) } else { String::new() };
            t.push(vec![num(x), num(g), atom]);
        }
        t
    }
}

/// Converts accumulated node masses into nodal density values.
fn densify<T: Real>(grid: &StateGrid<T>, mut masses: Vec<T>) -> Vec<T> {
    let w = grid.trapezoid_weights();
    masses.iter_mut().zip(&w).for_each(|(m, &wi)| *m /= wi);
    masses
}

fn check_mass<T: Real>(grid: &StateGrid<T>, input: T, out: &GridMeasure<T>) -> Result<()> {
    let m = out.mass(grid);
    if (m - input).abs() > mass_tolerance() {
        return Err(Error::MassDefect {
            input: input.as_f64(),
            output: m.as_f64(),
        });
    }
    Ok(())
}

/// Law of `x + (1 - x) ξ` for `x ~ μ`. The output has no atom at 0.
pub fn push_a0<T: Real>(kernel: &Kernel<T>, mu: &GridMeasure<T>) -> Result<GridMeasure<T>> {
    let grid = kernel.grid();
    let n = grid.len();
    let w = grid.trapezoid_weights();
    let mut out = vec![T::zero(); n];
    kernel.scatter_node(0, mu.atom0, &mut out);
    for j in 0..n {
        let m = w[j] * mu.density[j];
        if m != T::zero() {
            kernel.scatter_node(j, m, &mut out);
        }
    }
    let pushed = GridMeasure {
        atom0: T::zero(),
        density: densify(grid, out),
    };
    check_mass(grid, mu.mass(grid), &pushed)?;
    Ok(pushed)
}

/// One step under the threshold policy with parameter `r ∈ (0, 1)`: states
/// at or above `r` reset to 0, the rest drift.
pub fn push_threshold<T: Real>(
    kernel: &Kernel<T>,
    mu: &GridMeasure<T>,
    r: T,
) -> Result<GridMeasure<T>> {
    if !(r > T::zero() && r < T::one()) {
        return Err(Error::param("r", format!("threshold must lie in (0, 1), got {r}")));
    }
    let grid = kernel.grid();
    let n = grid.len();
    let mut sources = vec![T::zero(); n];
    sources[0] += mu.atom0;
    let mut point = None;
    let mut reset = T::zero();
    mu.split_at(
        grid,
        r,
        |j, m| sources[j] += m,
        |x, m| point = Some((x, m)),
        |m| reset += m,
    );
    let mut out = vec![T::zero(); n];
    for (j, &m) in sources.iter().enumerate() {
        if m != T::zero() {
            kernel.scatter_node(j, m, &mut out);
        }
    }
    if let Some((x, m)) = point {
        kernel.project_point_with(x, |k, p| out[k] += m * p);
    }
    let pushed = GridMeasure {
        atom0: reset,
        density: densify(grid, out),
    };
    check_mass(grid, mu.mass(grid), &pushed)?;
    Ok(pushed)
}

/// Every state resets: the whole mass moves to the atom at 0.
pub fn push_reset_all<T: Real>(grid: &StateGrid<T>, mu: &GridMeasure<T>) -> GridMeasure<T> {
    GridMeasure {
        atom0: mu.mass(grid),
        density: vec![T::zero(); grid.len()],
    }
}

/// Law after one passive step from the point mass at `x`.
pub fn push_point<T: Real>(kernel: &Kernel<T>, x: T) -> Result<GridMeasure<T>> {
    check_unit("x", x)?;
    let grid = kernel.grid();
    let mut out = vec![T::zero(); grid.len()];
    kernel.project_point_with(x, |k, p| out[k] += p);
    Ok(GridMeasure {
        atom0: T::zero(),
        density: densify(grid, out),
    })
}

/// `∫ x μ(dx)`.
pub fn mean<T: Real>(grid: &StateGrid<T>, mu: &GridMeasure<T>) -> T {
    mu.mean(grid)
}

/// Total variation distance `½ (|Δ atom| + ∫ |Δ density|)`.
pub fn tv_distance<T: Real>(grid: &StateGrid<T>, a: &GridMeasure<T>, b: &GridMeasure<T>) -> T {
    let diff: Vec<T> = a
        .density
        .iter()
        .zip(&b.density)
        .map(|(&x, &y)| (x - y).abs())
        .collect();
    ((a.atom0 - b.atom0).abs() + grid.integrate(&diff)) / T::lit(2.0)
}
