//! Monte Carlo estimates of the long-run mean state under a threshold policy,
//! independent of the grid solvers: a regenerative cycle estimator and a
//! plain long-path time average.
//!
//! With `Y = 1 - x`, a cycle starts at `Y_0 = 1` right after a reset and runs
//! `Y_t = (1 - ξ_t) Y_{t-1}` until `Y_τ <= λ = 1 - θ`. The renewal-reward
//! identity gives `z(θ) = 1 - E S_τ / (1 + E τ)` with `S_τ = Σ_{t=0}^{τ} Y_t`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{XiSampler, XiSpec};
use crate::report::{num, Table};

/// Number of batches behind every batch-means standard error.
pub const BATCHES: usize = 100;

/// Steps after which a single cycle is declared broken.
pub const CYCLE_CAP: usize = 10_000_000;

/// Smallest accepted number of cycles.
pub const MIN_CYCLES: usize = 1_000;

/// Random stream for batch `b` of a run seeded with `seed`.
pub fn batch_rng(seed: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegenEstimate {
    pub theta: f64,
    pub lambda: f64,
    pub n_cycles: usize,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub mean_s: f64,
    pub se_s: f64,
    /// `1 - mean_s / (1 + mean_tau)`.
    pub z_est: f64,
    /// Batch-means standard error of `z_est`.
    pub se_z: f64,
    /// Delta-method standard error of `z_est` over i.i.d. cycles.
    pub se_z_delta: f64,
    /// Sample mean of `1 - ξ` over every draw.
    pub alpha: f64,
    pub se_alpha: f64,
}

impl RegenEstimate {
    /// `E S_τ / (1 + E τ)`, the long-run mean of `Y = 1 - x`.
    pub fn ratio(&self) -> f64 {
        1.0 - self.z_est
    }

    pub fn table_header() -> Table {
        Table::new(["theta", "n_cycles", "mean_tau", "mean_s", "z_est", "se_z"])
    }

    /// Adds a row (theta, n_cycles, mean_tau, mean_s, z_est, se_z).
    pub fn push_row(&self, table: &mut Table) {
        table.push(vec![
            num(self.theta),
            self.n_cycles.to_string(),
            num(self.mean_tau),
            num(self.mean_s),
            num(self.z_est),
            num(self.se_z),
        ]);
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BatchSums {
    cycles: f64,
    tau: f64,
    tau2: f64,
    s: f64,
    s2: f64,
    s_tau: f64,
    draws: f64,
    alpha: f64,
    alpha2: f64,
}

impl BatchSums {
    fn add(&mut self, o: &BatchSums) {
        self.cycles += o.cycles;
        self.tau += o.tau;
        self.tau2 += o.tau2;
        self.s += o.s;
        self.s2 += o.s2;
        self.s_tau += o.s_tau;
        self.draws += o.draws;
        self.alpha += o.alpha;
        self.alpha2 += o.alpha2;
    }
}

fn run_batch(sampler: &XiSampler, lambda: f64, cycles: usize, mut rng: ChaCha8Rng, cap: usize) -> Result<BatchSums> {
    let mut b = BatchSums::default();
    for _ in 0..cycles {
        let mut y = 1.0f64;
        let mut s = 1.0f64;
        let mut tau = 0usize;
        loop {
            let keep = 1.0 - sampler.sample(&mut rng);
            b.alpha += keep;
            b.alpha2 += keep * keep;
            y *= keep;
            s += y;
            tau += 1;
            if y <= lambda {
                break;
            }
            if tau >= cap {
                return Err(Error::CycleCap(cap));
            }
        }
        let t = tau as f64;
        b.cycles += 1.0;
        b.tau += t;
        b.tau2 += t * t;
        b.s += s;
        b.s2 += s * s;
        b.s_tau += s * t;
        b.draws += t;
    }
    Ok(b)
}

fn batch_se(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let m = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", format!("needs an interior threshold, got {theta}")));
    }
    Ok(())
}

/// Regenerative estimate of `z(θ)` from `n_cycles` i.i.d. cycles.
pub fn regen_estimate(xi: &XiSpec<f64>, theta: f64, n_cycles: usize, seed: u64) -> Result<RegenEstimate> {
    regen_estimate_capped(xi, theta, n_cycles, seed, CYCLE_CAP)
}

/// [`regen_estimate`] with an explicit per-cycle step cap.
pub fn regen_estimate_capped(
    xi: &XiSpec<f64>,
    theta: f64,
    n_cycles: usize,
    seed: u64,
    cap: usize,
) -> Result<RegenEstimate> {
    check_theta(theta)?;
    xi.validate()?;
    if n_cycles < MIN_CYCLES {
        return Err(Error::param("n_cycles", format!("at least {MIN_CYCLES} cycles are required")));
    }
    let lambda = 1.0 - theta;
    let sampler = xi.sampler();
    let batches: Vec<BatchSums> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let cycles = n_cycles / BATCHES + usize::from(b < n_cycles % BATCHES);
            run_batch(&sampler, lambda, cycles, batch_rng(seed, b), cap)
        })
        .collect::<Result<_>>()?;
    let mut tot = BatchSums::default();
    batches.iter().for_each(|b| tot.add(b));
    let n = tot.cycles;
    let mean_tau = tot.tau / n;
    let mean_s = tot.s / n;
    let z_est = (1.0 - mean_s / (1.0 + mean_tau)).clamp(0.0, 1.0);

    // delta method: z = 1 - a / b with a = E S, b = 1 + E τ
    let var_s = (tot.s2 / n - mean_s * mean_s) * n / (n - 1.0);
    let var_tau = (tot.tau2 / n - mean_tau * mean_tau) * n / (n - 1.0);
    let cov = (tot.s_tau / n - mean_s * mean_tau) * n / (n - 1.0);
    let b = 1.0 + mean_tau;
    let q = mean_s / b;
    let var_z = (var_s - 2.0 * q * cov + q * q * var_tau) / (b * b);
    let se_z_delta = (var_z.max(0.0) / n).sqrt();

    let per_batch = |f: &dyn Fn(&BatchSums) -> f64| batches.iter().map(f).collect::<Vec<_>>();
    let se_z = batch_se(&per_batch(&|b| 1.0 - (b.s / b.cycles) / (1.0 + b.tau / b.cycles)));
    let se_tau = batch_se(&per_batch(&|b| b.tau / b.cycles));
    let se_s = batch_se(&per_batch(&|b| b.s / b.cycles));

    let alpha = tot.alpha / tot.draws;
    let var_alpha = (tot.alpha2 / tot.draws - alpha * alpha).max(0.0);
    Ok(RegenEstimate {
        theta,
        lambda,
        n_cycles,
        mean_tau,
        se_tau,
        mean_s,
        se_s,
        z_est,
        se_z,
        se_z_delta,
        alpha,
        se_alpha: (var_alpha / tot.draws).sqrt(),
    })
}

/// Time average of one long controlled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAverage {
    pub mean: f64,
    /// Batch-means standard error over contiguous blocks.
    pub se: f64,
    pub horizon: usize,
}

/// Simulates `x_{t+1} = 0` if `x_t >= θ`, else `x_t + (1 - x_t) ξ_t`, from
/// `x0`, and averages `x_t` over `t = 0..horizon`.
pub fn long_run_mean_by_path(xi: &XiSpec<f64>, theta: f64, horizon: usize, x0: f64, seed: u64) -> Result<PathAverage> {
    check_theta(theta)?;
    xi.validate()?;
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::Domain { what: "x0", value: x0 });
    }
    if horizon < BATCHES * 2 {
        return Err(Error::param("horizon", format!("at least {} steps are required", BATCHES * 2)));
    }
    let sampler = xi.sampler();
    let mut rng = batch_rng(seed, BATCHES);
    let block = horizon / BATCHES;
    let mut block_means = Vec::with_capacity(BATCHES);
    let mut x = x0;
    let mut total = 0.0;
    let mut acc = 0.0;
    for t in 0..horizon {
        acc += x;
        x = if x >= theta { 0.0 } else { x + (1.0 - x) * sampler.sample(&mut rng) };
        if (t + 1) % block == 0 && block_means.len() < BATCHES {
            block_means.push(acc / block as f64);
            total += acc;
            acc = 0.0;
        }
    }
    total += acc;
    Ok(PathAverage {
        mean: total / horizon as f64,
        se: batch_se(&block_means),
        horizon,
    })
}
