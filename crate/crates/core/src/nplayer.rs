//! Finite-population simulation of the game and an empirical ε-Nash gap.

use rand::Rng;
use rayon::prelude::*;

use crate::dp::{solve_dp, PolicySchedule};
use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::kernel::{Kernel, XiSampler, XiSpec};
use crate::mean_field::MeanFieldSolution;
use crate::measures::GridMeasure;
use crate::model::ModelParams;
use crate::regen::batch_rng;
use crate::report::{num, Table};

/// Exact sampler for a grid law: atom at 0 plus a piecewise-linear density.
#[derive(Debug, Clone)]
pub struct InitialSampler {
    atom: f64,
    nodes: Vec<f64>,
    density: Vec<f64>,
    /// Cumulative mass at the right end of each cell, atom included.
    cum: Vec<f64>,
}

impl InitialSampler {
    pub fn new(grid: &StateGrid<f64>, mu: &GridMeasure<f64>) -> Result<Self> {
        mu.validate(grid)?;
        let nodes = grid.nodes().to_vec();
        let g = &mu.density;
        let mut cum = Vec::with_capacity(nodes.len() - 1);
        let mut acc = mu.atom0;
        for c in 0..nodes.len() - 1 {
            acc += 0.5 * (nodes[c + 1] - nodes[c]) * (g[c] + g[c + 1]);
            cum.push(acc);
        }
        Ok(InitialSampler {
            atom: mu.atom0,
            nodes,
            density: g.clone(),
            cum,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cum.last().unwrap_or(&self.atom);
        let u = rng.random::<f64>() * total;
        if u < self.atom {
            return 0.0;
        }
        let c = self.cum.partition_point(|&m| m <= u).min(self.cum.len() - 1);
        let start = if c == 0 { self.atom } else { self.cum[c - 1] };
        let (x0, x1) = (self.nodes[c], self.nodes[c + 1]);
        let (g0, g1) = (self.density[c], self.density[c + 1]);
        let h = x1 - x0;
        let m = u - start;
        // invert ∫_0^s (g0 + (g1 - g0) v / h) dv = m
        let slope = (g1 - g0) / h;
        let s = if slope.abs() < 1e-12 * (g0.abs() + g1.abs() + 1.0) {
            if g0 > 0.0 { m / g0 } else { 0.5 * h }
        } else {
            let disc = (g0 * g0 + 2.0 * slope * m).max(0.0);
            2.0 * m / (g0 + disc.sqrt())
        };
        (x0 + s.clamp(0.0, h)).clamp(0.0, 1.0)
    }
}

/// Random inputs of one replication: initial states and innovations.
struct Draws {
    x0: Vec<f64>,
    /// `xi[t][i]`.
    xi: Vec<Vec<f64>>,
}

fn draw(n: usize, horizon: usize, init: &InitialSampler, xi: &XiSampler, seed: u64, rep: usize) -> Draws {
    let mut rng = batch_rng(seed, rep);
    let x0 = (0..n).map(|_| init.sample(&mut rng)).collect();
    let xi = (0..horizon).map(|_| (0..n).map(|_| xi.sample(&mut rng)).collect()).collect();
    Draws { x0, xi }
}

/// Paths `x[i][t]`, empirical means per `t` and discounted costs per player.
struct Outcome {
    paths: Vec<Vec<f64>>,
    mean: Vec<f64>,
    costs: Vec<f64>,
}

fn play<'a>(draws: &Draws, params: &ModelParams<f64>, policy: impl Fn(usize) -> &'a PolicySchedule<f64>) -> Outcome {
    let n = draws.x0.len();
    let horizon = params.horizon;
    let mut x = draws.x0.clone();
    let mut paths = vec![Vec::with_capacity(horizon + 1); n];
    let mut mean = Vec::with_capacity(horizon + 1);
    let mut costs = vec![0.0; n];
    let mut discount = 1.0;
    for t in 0..=horizon {
        let m = x.iter().sum::<f64>() / n as f64;
        mean.push(m);
        for i in 0..n {
            paths[i].push(x[i]);
            let reset = policy(i).at(t).resets_at(x[i]);
            costs[i] += discount * (params.cost.eval(x[i], m) + if reset { params.gamma } else { 0.0 });
            if t < horizon {
                x[i] = if reset { 0.0 } else { x[i] + (1.0 - x[i]) * draws.xi[t][i] };
            }
        }
        discount *= params.rho;
    }
    Outcome { paths, mean, costs }
}

fn check_inputs(n: usize, replications: usize, schedule: &PolicySchedule<f64>, params: &ModelParams<f64>) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "at least one player is required"));
    }
    if replications == 0 {
        return Err(Error::param("replications", "must be positive"));
    }
    if schedule.horizon() != params.horizon {
        return Err(Error::param("schedule", "horizon differs from the model"));
    }
    Ok(())
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let m = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

/// Simulated plays of an `n`-player game where everyone follows `schedule`.
#[derive(Debug, Clone)]
pub struct NPlayerRun {
    pub n: usize,
    pub seed: u64,
    pub replications: usize,
    /// `paths[i][t]` of the first replication.
    pub paths: Vec<Vec<f64>>,
    /// `empirical_mean[rep][t]`.
    pub empirical_mean: Vec<Vec<f64>>,
    /// `realized_costs[rep][i]`.
    pub realized_costs: Vec<Vec<f64>>,
    /// Population-average cost, averaged over replications.
    pub mean_cost: f64,
    pub se_cost: f64,
}

impl NPlayerRun {
    /// Average over replications of `max_t |x̄_t - z_t|`.
    pub fn max_deviation(&self, z: &[f64]) -> (f64, f64) {
        let devs: Vec<f64> = self
            .empirical_mean
            .iter()
            .map(|m| m.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .collect();
        mean_se(&devs)
    }

    /// CSV columns (replication, t, empirical_mean).
    pub fn to_table(&self) -> Table {
        let mut tab = Table::new(["replication", "t", "empirical_mean"]);
        for (r, m) in self.empirical_mean.iter().enumerate() {
            for (t, &v) in m.iter().enumerate() {
                tab.push(vec![r.to_string(), t.to_string(), num(v)]);
            }
        }
        tab
    }
}

/// Plays the game `replications` times with independent seeds per replication.
#[allow(clippy::too_many_arguments)]
pub fn simulate_game(
    n: usize,
    schedule: &PolicySchedule<f64>,
    mu0: &GridMeasure<f64>,
    grid: &StateGrid<f64>,
    xi: &XiSpec<f64>,
    params: &ModelParams<f64>,
    seed: u64,
    replications: usize,
) -> Result<NPlayerRun> {
    check_inputs(n, replications, schedule, params)?;
    let init = InitialSampler::new(grid, mu0)?;
    let sampler = xi.sampler();
    let outcomes: Vec<Outcome> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let d = draw(n, params.horizon, &init, &sampler, seed, r);
            play(&d, params, |_| schedule)
        })
        .collect();
    let avg: Vec<f64> = outcomes.iter().map(|o| o.costs.iter().sum::<f64>() / n as f64).collect();
    let (mean_cost, se_cost) = mean_se(&avg);
    let mut it = outcomes.into_iter();
    let first = it.next().expect("at least one replication");
    let mut empirical_mean = vec![first.mean];
    let mut realized_costs = vec![first.costs];
    for o in it {
        empirical_mean.push(o.mean);
        realized_costs.push(o.costs);
    }
    Ok(NPlayerRun {
        n,
        seed,
        replications,
        paths: first.paths,
        empirical_mean,
        realized_costs,
        mean_cost,
        se_cost,
    })
}

/// One replication of the deviation experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub replication: usize,
    pub j_equilibrium: f64,
    pub j_deviation: f64,
    pub gap: f64,
    /// `max_t |x̄_t - ẑ_t|` under the equilibrium play.
    pub max_deviation: f64,
}

/// Empirical ε-Nash gap for one population size.
#[derive(Debug, Clone)]
pub struct EpsilonGap {
    pub n: usize,
    pub eps: f64,
    pub se: f64,
    pub mean_max_deviation: f64,
    pub se_max_deviation: f64,
    pub samples: Vec<GapSample>,
}

impl EpsilonGap {
    /// CSV columns (N, replication, J_equilibrium, J_deviation, gap).
    pub fn push_rows(&self, tab: &mut Table) {
        for s in &self.samples {
            tab.push(vec![
                self.n.to_string(),
                s.replication.to_string(),
                num(s.j_equilibrium),
                num(s.j_deviation),
                num(s.gap),
            ]);
        }
    }

    pub fn rows_header() -> Table {
        Table::new(["N", "replication", "J_equilibrium", "J_deviation", "gap"])
    }

    /// Summary columns (N, eps, se, max_dev, se_max_dev).
    pub fn push_summary(&self, tab: &mut Table) {
        tab.push(vec![
            self.n.to_string(),
            num(self.eps),
            num(self.se),
            num(self.mean_max_deviation),
            num(self.se_max_deviation),
        ]);
    }

    pub fn summary_header() -> Table {
        Table::new(["N", "eps", "se", "max_dev", "se_max_dev"])
    }
}

/// Player 1's cost under the equilibrium schedule minus the cost of the best
/// response (by backward recursion on `kernel`) to the realized mean path of
/// the other players, with common random numbers. For `n = 1` the deviator
/// responds to its own path.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_nash_gap(
    n: usize,
    solution: &MeanFieldSolution<f64>,
    kernel: &Kernel<f64>,
    mu0: &GridMeasure<f64>,
    xi: &XiSpec<f64>,
    params: &ModelParams<f64>,
    seed: u64,
    replications: usize,
) -> Result<EpsilonGap> {
    check_inputs(n, replications, &solution.schedule, params)?;
    if !solution.converged {
        return Err(Error::param("solution", "the mean-field fixed point did not converge"));
    }
    let init = InitialSampler::new(kernel.grid(), mu0)?;
    let sampler = xi.sampler();
    let eq = &solution.schedule;
    let z_hat = &solution.z_hat.z;
    let samples: Vec<GapSample> = (0..replications)
        .into_par_iter()
        .map(|r| -> Result<GapSample> {
            let d = draw(n, params.horizon, &init, &sampler, seed, r);
            let base = play(&d, params, |_| eq);
            let others: Vec<f64> = (0..=params.horizon)
                .map(|t| {
                    if n == 1 {
                        base.paths[0][t]
                    } else {
                        (base.mean[t] * n as f64 - base.paths[0][t]) / (n - 1) as f64
                    }
                })
                .map(|v: f64| v.clamp(0.0, 1.0))
                .collect();
            let (_, dev) = solve_dp(kernel, &others, params)?;
            let alt = play(&d, params, |i| if i == 0 { &dev } else { eq });
            let max_deviation = base.mean.iter().zip(z_hat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(GapSample {
                replication: r,
                j_equilibrium: base.costs[0],
                j_deviation: alt.costs[0],
                gap: base.costs[0] - alt.costs[0],
                max_deviation,
            })
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = samples.iter().map(|s| s.gap).collect();
    let devs: Vec<f64> = samples.iter().map(|s| s.max_deviation).collect();
    let (eps, se) = mean_se(&gaps);
    let (mean_max_deviation, se_max_deviation) = mean_se(&devs);
    Ok(EpsilonGap {
        n,
        eps,
        se,
        mean_max_deviation,
        se_max_deviation,
        samples,
    })
}
