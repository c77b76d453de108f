//! Experiment configuration: one JSON document, every field defaulted.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use mfg_core::kernel::{Kernel, XiSpec};
use mfg_core::mean_field::FixedPointOptions;
use mfg_core::measures::GridMeasure;
use mfg_core::model::{Cost, Curve, ModelParams};
use mfg_core::stationary::{StationaryOptions, ValueMethod};
use mfg_core::Error;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance on `|mean(μ0) - m0|` checked before any run.
const MEAN_TOL: f64 = 1e-6;

/// Initial law μ0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialLaw {
    AtomAtZero,
    Uniform,
    Beta { a: f64, b: f64 },
    /// `atom δ₀ + (1 - atom) U[0, 1]`.
    AtomPlusUniform { atom: f64 },
}

impl InitialLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::AtomAtZero => 0.0,
            InitialLaw::Uniform => 0.5,
            InitialLaw::Beta { a, b } => a / (a + b),
            InitialLaw::AtomPlusUniform { atom } => 0.5 * (1.0 - atom),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match *self {
            InitialLaw::Beta { a, b } if !(a >= 1.0 && b >= 1.0 && a.is_finite() && b.is_finite()) => {
                Err(invalid("mu0", "beta parameters must be finite and at least 1"))
            }
            InitialLaw::AtomPlusUniform { atom } if !(0.0..=1.0).contains(&atom) => {
                Err(invalid("mu0", "atom must lie in [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn measure(&self, kernel: &Kernel<f64>) -> mfg_core::Result<GridMeasure<f64>> {
        let n = kernel.grid().len();
        match *self {
            InitialLaw::AtomAtZero => Ok(GridMeasure::unit_atom(n)),
            InitialLaw::Uniform => Ok(GridMeasure::uniform(n)),
            InitialLaw::Beta { a, b } => {
                GridMeasure::from_density(kernel.grid(), 0.0, |x| x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0))
            }
            InitialLaw::AtomPlusUniform { atom } => GridMeasure::from_density(kernel.grid(), atom, |_| 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSolver {
    Anchor,
    Iteration,
}

/// Tolerances and caps of the grid solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub backoff: bool,
    pub value_method: ValueSolver,
    pub value_tol: f64,
    pub max_value_iter: usize,
    pub dist_tol: f64,
    pub max_dist_iter: usize,
    pub root_tol: f64,
    pub n_scan: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let fp = FixedPointOptions::<f64>::default();
        let st = StationaryOptions::<f64>::default();
        SolverConfig {
            damping: fp.damping,
            tol: fp.tol,
            max_iter: fp.max_iter,
            backoff: fp.backoff,
            value_method: ValueSolver::Anchor,
            value_tol: st.value_tol,
            max_value_iter: st.max_value_iter,
            dist_tol: st.dist_tol,
            max_dist_iter: st.max_dist_iter,
            root_tol: st.root_tol,
            n_scan: st.n_scan,
        }
    }
}

impl SolverConfig {
    pub fn fixed_point(&self) -> FixedPointOptions<f64> {
        FixedPointOptions {
            damping: self.damping,
            tol: self.tol,
            max_iter: self.max_iter,
            backoff: self.backoff,
        }
    }

    pub fn stationary(&self) -> StationaryOptions<f64> {
        StationaryOptions {
            method: match self.value_method {
                ValueSolver::Anchor => ValueMethod::Anchor,
                ValueSolver::Iteration => ValueMethod::Iteration,
            },
            value_tol: self.value_tol,
            max_value_iter: self.max_value_iter,
            dist_tol: self.dist_tol,
            max_dist_iter: self.max_dist_iter,
            root_tol: self.root_tol,
            n_scan: self.n_scan,
        }
    }
}

/// Sample sizes of the Monte Carlo experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    /// Regeneration cycles per θ.
    pub n_cycles: usize,
    /// Length of the single long path per θ.
    pub path_horizon: usize,
    /// Replications per population size.
    pub replications: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            n_cycles: 100_000,
            path_horizon: 1_000_000,
            replications: 200,
        }
    }
}

/// Grids of the sweep commands; `r_values` empty means "straddle the
/// computed critical costs".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub thetas: Vec<f64>,
    pub oracle_thetas: Vec<f64>,
    pub r_values: Vec<f64>,
    pub n_list: Vec<usize>,
    pub ergodicity_thetas: Vec<f64>,
    pub initials: Vec<f64>,
    pub ergodicity_horizon: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            thetas: (1..=19).map(|i| i as f64 / 20.0).collect(),
            oracle_thetas: vec![0.2, 0.5, 0.8],
            r_values: Vec::new(),
            n_list: vec![50, 200, 800],
            ergodicity_thetas: vec![0.2, 0.5, 0.8],
            initials: vec![0.0, 0.5, 1.0],
            ergodicity_horizon: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelParams<f64>,
    pub xi: XiSpec<f64>,
    pub mu0: InitialLaw,
    pub solver: SolverConfig,
    pub monte_carlo: MonteCarloConfig,
    pub sweeps: SweepConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    /// The demo: ρ = 0.9, γ = 1, T = 20, R(x, z) = x (0.5 + z), uniform ξ
    /// and uniform μ0.
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            model: ModelParams::new(0.9, 1.0, 20, 0.5, Cost::product(Curve::affine(0.0, 1.0), Curve::affine(0.5, 1.0))),
            xi: XiSpec::Uniform,
            mu0: InitialLaw::Uniform,
            solver: SolverConfig::default(),
            monte_carlo: MonteCarloConfig::default(),
            sweeps: SweepConfig::default(),
            seed: 20240611,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn check_unit(name: &'static str, values: &[f64]) -> Result<(), Error> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(invalid(name, format!("{v} lies outside [0, 1]"))),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Every check that can fail before a solver runs, including strict
    /// increase of the cost in `x` (adjacent differences of tables).
    pub fn validate(&self) -> Result<(), Error> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        self.model.validate()?;
        self.xi.validate()?;
        self.mu0.validate()?;
        let mean = self.mu0.mean();
        if (mean - self.model.m0).abs() > MEAN_TOL {
            return Err(Error::InitialMean {
                mean,
                m0: self.model.m0,
            });
        }
        self.solver.fixed_point().validate()?;
        let s = &self.solver;
        if !(s.value_tol > 0.0 && s.dist_tol > 0.0 && s.root_tol > 0.0) {
            return Err(invalid("solver", "tolerances must be positive"));
        }
        if s.n_scan < 2 {
            return Err(invalid("n_scan", "the scan needs at least two points"));
        }
        let sw = &self.sweeps;
        check_unit("thetas", &sw.thetas)?;
        check_unit("oracle_thetas", &sw.oracle_thetas)?;
        check_unit("initials", &sw.initials)?;
        if sw.ergodicity_thetas.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(invalid("ergodicity_thetas", "thresholds must lie in (0, 1)"));
        }
        if let Some(r) = sw.r_values.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(invalid("r_values", format!("{r} is not a nonnegative number")));
        }
        if sw.n_list.contains(&0) {
            return Err(invalid("n_list", "population sizes must be positive"));
        }
        if self.monte_carlo.replications == 0 {
            return Err(invalid("replications", "must be positive"));
        }
        Ok(())
    }

    pub fn kernel(&self) -> mfg_core::Result<Kernel<f64>> {
        Kernel::new(self.xi, self.model.grid_n, self.model.xi_n)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"schema_version": 1, "seed": 7}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.sweeps.thetas.len(), 19);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sed": 7}"#).is_err());
    }

    #[test]
    fn initial_laws_have_the_stated_mean() {
        let k = Kernel::new(XiSpec::Uniform, 401, 401).unwrap();
        for law in [
            InitialLaw::AtomAtZero,
            InitialLaw::Uniform,
            InitialLaw::Beta { a: 2.0, b: 3.0 },
            InitialLaw::AtomPlusUniform { atom: 0.3 },
        ] {
            let mu = law.measure(&k).unwrap();
            assert!((mu.mean(k.grid()) - law.mean()).abs() < 1e-5, "{law:?}");
        }
    }

    #[test]
    fn rejects_bad_discount_and_mean_mismatch() {
        let mut c = ExperimentConfig::default();
        c.model.rho = 1.2;
        assert!(c.validate().unwrap_err().to_string().contains("rho"));
        let c = ExperimentConfig {
            mu0: InitialLaw::AtomAtZero,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::InitialMean { .. })));
    }
}
