//! One function per subcommand. Each writes its CSVs into the output
//! directory and reports the outcome as an [`Outcome`].

use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use mfg_core::aux_mdp::{r_sweep_table, AuxProblem};
use mfg_core::kernel::Kernel;
use mfg_core::mean_field::{solve_fixed_point, MeanFieldSolution};
use mfg_core::nplayer::{epsilon_nash_gap, EpsilonGap};
use mfg_core::regen::{long_run_mean_by_path, regen_estimate};
use mfg_core::report::{num, Table};
use mfg_core::stationary::{
    ergodicity_report, solve_stationary_equilibrium, theta_sweep, theta_sweep_table, uniqueness_probe,
    ERGODICITY_BURN_IN,
};
use mfg_core::Error;

use crate::config::ExperimentConfig;

/// TV level reported as the mixing time in the ergodicity summary.
const MIXING_EPS: f64 = 1e-6;

/// Points in the default r grid.
const R_POINTS: usize = 41;

/// How a command ended; maps onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Invalid,
    NotConverged,
    Disagreement,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Invalid => 1,
            Outcome::NotConverged => 2,
            Outcome::Disagreement => 3,
        }
    }

    /// Input errors exit with 1, everything a solver reports with 2.
    pub fn of_error(err: &anyhow::Error) -> Self {
        match err.downcast_ref::<Error>() {
            Some(
                Error::InvalidParameter { .. }
                | Error::Domain { .. }
                | Error::Monotonicity(_)
                | Error::InitialMean { .. }
                | Error::Io(_),
            )
            | None => Outcome::Invalid,
            Some(_) => Outcome::NotConverged,
        }
    }
}

/// Output directory plus the resolved configuration.
pub struct Run {
    pub config: ExperimentConfig,
    pub out: PathBuf,
}

impl Run {
    /// Creates the output directory and writes the resolved configuration.
    pub fn prepare(config: ExperimentConfig) -> anyhow::Result<Self> {
        let out = config.output_dir.clone();
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        config.save(&out.join("config.resolved.json"))?;
        Ok(Run { config, out })
    }

    fn save(&self, name: &str, table: &Table) -> anyhow::Result<()> {
        let path = self.out.join(name);
        table.save(&path).with_context(|| format!("writing {}", path.display()))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn kernel(run: &Run) -> anyhow::Result<Kernel<f64>> {
    Ok(run.config.kernel()?)
}

fn mean_field(run: &Run, k: &Kernel<f64>) -> anyhow::Result<MeanFieldSolution<f64>> {
    let c = &run.config;
    let mu0 = c.mu0.measure(k)?;
    Ok(solve_fixed_point(k, &mu0, &c.model, &c.solver.fixed_point())?)
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

pub fn finite(run: &Run) -> anyhow::Result<Outcome> {
    let k = kernel(run)?;
    let sol = mean_field(run, &k)?;
    run.save("z_path.csv", &sol.to_table(&k))?;
    run.save("policy.csv", &sol.schedule.to_table())?;
    run.save("residuals.csv", &sol.residual_table())?;
    run.save("values.csv", &sol.values.to_table(k.grid().nodes()))?;
    println!(
        "fixed point: residual {:.3e} after {} iterations (damping {}), converged: {}",
        sol.residual, sol.iterations, sol.final_damping, sol.converged
    );
    print_written(&[run.path("z_path.csv"), run.path("policy.csv"), run.path("residuals.csv")]);
    Ok(if sol.converged {
        Outcome::Success
    } else {
        Outcome::NotConverged
    })
}

pub fn stationary(run: &Run) -> anyhow::Result<Outcome> {
    let c = &run.config;
    let k = kernel(run)?;
    let opts = c.solver.stationary();
    let probe = uniqueness_probe(&k, &c.model, &opts)?;
    run.save("h_scan.csv", &probe.to_table())?;
    let sol = solve_stationary_equilibrium(&k, &c.model, &opts)?;
    let mut tab = Table::new(["z_hat", "theta_kind", "theta_value", "residual", "evaluations", "sign_changes"]);
    tab.push(vec![
        num(sol.z_hat),
        sol.theta_hat.kind().into(),
        sol.theta_hat.value_field(),
        num(sol.residual),
        sol.evaluations.to_string(),
        probe.sign_changes.to_string(),
    ]);
    run.save("stationary.csv", &tab)?;
    run.save("pi_hat.csv", &sol.pi_hat.to_table(k.grid()))?;
    println!(
        "stationary equilibrium: z = {:.8}, theta = {}, residual {:.3e}, h sign changes {}",
        sol.z_hat, sol.theta_hat, sol.residual, probe.sign_changes
    );
    print_written(&[run.path("stationary.csv"), run.path("pi_hat.csv"), run.path("h_scan.csv")]);
    Ok(Outcome::Success)
}

pub fn theta_sweep_cmd(run: &Run) -> anyhow::Result<Outcome> {
    let c = &run.config;
    let k = kernel(run)?;
    let thetas = &c.sweeps.thetas;
    let zs = theta_sweep(&k, thetas, &c.solver.stationary())?;
    run.save("theta_sweep.csv", &theta_sweep_table(thetas, &zs))?;
    print_written(&[run.path("theta_sweep.csv")]);
    Ok(Outcome::Success)
}

pub fn r_sweep(run: &Run) -> anyhow::Result<Outcome> {
    let c = &run.config;
    let k = kernel(run)?;
    let (r1, _) = c
        .model
        .cost
        .factors()
        .ok_or_else(|| Error::InvalidParameter {
            name: "cost",
            reason: "the r sweep needs a product-form cost".into(),
        })?;
    let mut aux = AuxProblem::new(&k, r1, c.model.rho)?;
    aux.opts = c.solver.stationary();
    let bounds = aux.r_bounds()?;
    let rs: Vec<f64> = if c.sweeps.r_values.is_empty() {
        // straddle [r_low, r_high] with a margin on both sides
        let (lo, hi) = (0.5 * bounds.r_low, 1.5 * bounds.r_high);
        (0..R_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / (R_POINTS - 1) as f64)
            .collect()
    } else {
        c.sweeps.r_values.clone()
    };
    let thetas = aux.sweep(&rs)?;
    run.save("r_bounds.csv", &bounds.to_table())?;
    run.save("r_sweep.csv", &r_sweep_table(&rs, &thetas))?;
    println!("critical costs: r_low = {:.10}, r_high = {:.10}", bounds.r_low, bounds.r_high);
    print_written(&[run.path("r_bounds.csv"), run.path("r_sweep.csv")]);
    Ok(Outcome::Success)
}

pub fn nplayer(run: &Run) -> anyhow::Result<Outcome> {
    let c = &run.config;
    let k = kernel(run)?;
    let sol = mean_field(run, &k)?;
    if !sol.converged {
        eprintln!("mean-field fixed point did not converge (residual {:.3e})", sol.residual);
        return Ok(Outcome::NotConverged);
    }
    let mu0 = c.mu0.measure(&k)?;
    let mut rows = EpsilonGap::rows_header();
    let mut summary = EpsilonGap::summary_header();
    for (i, &n) in c.sweeps.n_list.iter().enumerate() {
        let seed = c.seed.wrapping_add(1000 * i as u64);
        let gap = epsilon_nash_gap(n, &sol, &k, &mu0, &c.xi, &c.model, seed, c.monte_carlo.replications)?;
        println!(
            "N = {n}: eps = {:.4e} ± {:.1e}, mean max_t |x̄ - ẑ| = {:.4e}",
            gap.eps, gap.se, gap.mean_max_deviation
        );
        gap.push_rows(&mut rows);
        gap.push_summary(&mut summary);
    }
    run.save("nplayer_gaps.csv", &rows)?;
    run.save("nplayer_summary.csv", &summary)?;
    print_written(&[run.path("nplayer_gaps.csv"), run.path("nplayer_summary.csv")]);
    Ok(Outcome::Success)
}

/// `max(3 SE, 1e-3)`.
fn agreement_tol(se: f64) -> f64 {
    (3.0 * se).max(1e-3)
}

pub fn oracle_compare(run: &Run) -> anyhow::Result<Outcome> {
    let c = &run.config;
    let k = kernel(run)?;
    let thetas = &c.sweeps.oracle_thetas;
    let zs = theta_sweep(&k, thetas, &c.solver.stationary())?;
    let mut tab = Table::new([
        "theta",
        "z_power",
        "z_regen",
        "z_path_avg",
        "max_abs_diff",
        "se_regen",
        "se_path",
        "agree",
    ]);
    let mut all_agree = true;
    for (i, (&theta, &zp)) in thetas.iter().zip(&zs).enumerate() {
        let seed = c.seed.wrapping_add(10 * i as u64);
        let reg = regen_estimate(&c.xi, theta, c.monte_carlo.n_cycles, seed)?;
        let path = long_run_mean_by_path(&c.xi, theta, c.monte_carlo.path_horizon, 0.0, seed.wrapping_add(1))?;
        let pairs = [
            ((reg.z_est - zp).abs(), agreement_tol(reg.se_z)),
            ((path.mean - zp).abs(), agreement_tol(path.se)),
            ((reg.z_est - path.mean).abs(), agreement_tol(reg.se_z.hypot(path.se))),
        ];
        let max_diff = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
        let agree = pairs.iter().all(|(d, tol)| d <= tol);
        all_agree &= agree;
        tab.push(vec![
            num(theta),
            num(zp),
            num(reg.z_est),
            num(path.mean),
            num(max_diff),
            num(reg.se_z),
            num(path.se),
            agree.to_string(),
        ]);
        println!(
            "theta = {theta}: power {zp:.6}, regen {:.6}, path {:.6}, {}",
            reg.z_est,
            path.mean,
            if agree { "agree" } else { "DISAGREE" }
        );
    }
    run.save("oracle_compare.csv", &tab)?;
    print_written(&[run.path("oracle_compare.csv")]);
    Ok(if all_agree {
        Outcome::Success
    } else {
        Outcome::Disagreement
    })
}

pub fn ergodicity(run: &Run) -> anyhow::Result<Outcome> {
    let c = &run.config;
    let k = kernel(run)?;
    let opts = c.solver.stationary();
    let mut series = Table::new(["theta", "t", "initial_x", "tv"]);
    let mut fits = Table::new(["theta", "initial_x", "K", "r", "fit_points", "first_t_below_1e-6"]);
    for &theta in &c.sweeps.ergodicity_thetas {
        let rep = ergodicity_report(&k, theta, c.sweeps.ergodicity_horizon, &c.sweeps.initials, &opts)?;
        for row in rep.to_table().rows {
            series.push([vec![num(theta)], row].concat());
        }
        for ((&x, fit), tv) in rep.initials.iter().zip(&rep.fits).zip(&rep.tv_series) {
            let hit = tv.iter().position(|&v| v < MIXING_EPS);
            fits.push(vec![
                num(theta),
                num(x),
                num(fit.k),
                num(fit.r),
                fit.points.to_string(),
                hit.map_or_else(String::new, |t| t.to_string()),
            ]);
        }
        println!(
            "theta = {theta}: worst-case fit K = {:.3e}, r = {:.4} (burn-in {ERGODICITY_BURN_IN}), TV < {MIXING_EPS:e} from t = {}",
            rep.fit.k,
            rep.fit.r,
            rep.first_time_below(MIXING_EPS).map_or("never".into(), |t| t.to_string())
        );
    }
    run.save("ergodicity_tv.csv", &series)?;
    run.save("ergodicity_fit.csv", &fits)?;
    print_written(&[run.path("ergodicity_tv.csv"), run.path("ergodicity_fit.csv")]);
    Ok(Outcome::Success)
}

/// Parses `"0.1,0.2"` into numbers.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| anyhow!("cannot parse list entry `{p}`")))
        .collect()
}
