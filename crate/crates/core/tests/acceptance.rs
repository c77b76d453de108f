//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines are always shown.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mfg_core::aux_mdp::AuxProblem;
use mfg_core::dp::{g_function, solve_dp, ThresholdDescriptor};
use mfg_core::kernel::{Kernel, XiSpec};
use mfg_core::mean_field::{solve_fixed_point, FixedPointOptions, MeanFieldSolution};
use mfg_core::measures::GridMeasure;
use mfg_core::model::{Cost, Curve, ModelParams};
use mfg_core::nplayer::epsilon_nash_gap;
use mfg_core::num::sup_distance;
use mfg_core::regen::{long_run_mean_by_path, regen_estimate};
use mfg_core::stationary::{
    ergodicity_report, lop, solve_stationary_equilibrium, solve_stationary_in, theta_sweep, uniqueness_probe,
    StationaryOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID: usize = 2001;
const SEED: u64 = 20240611;

fn demo(horizon: usize) -> ModelParams<f64> {
    ModelParams::new(0.9, 1.0, horizon, 0.5, Cost::product(Curve::affine(0.0, 1.0), Curve::affine(0.5, 1.0)))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn contraction() -> Outcome {
    let k = Kernel::new(XiSpec::Uniform, GRID, 2001).unwrap();
    let costs = demo(1).cost.slice(k.grid().nodes(), 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let scale = rng.random_range(0.1..20.0);
        let a: Vec<f64> = (0..GRID).map(|_| rng.random_range(-scale..scale)).collect();
        let b: Vec<f64> = (0..GRID).map(|_| rng.random_range(-scale..scale)).collect();
        let lhs = sup_distance(&lop(&k, 0.9, 1.0, &costs, &a), &lop(&k, 0.9, 1.0, &costs, &b));
        worst = worst.max(lhs - 0.9 * sup_distance(&a, &b));
    }
    outcome(worst <= 1e-12, format!("max(‖Lg2-Lg1‖ - ρ‖g2-g1‖) = {worst:.3e} over 20 pairs"))
}

/// Hand-written transition matrix for uniform ξ on an `n`-node grid.
fn uniform_transitions(n: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|j| {
            let mut row = vec![0.0; n];
            if j == n - 1 {
                row[j] = 1.0;
                return row;
            }
            let len = 1.0 - j as f64 * h;
            for (k, p) in row.iter_mut().enumerate().skip(j) {
                *p = if k == j || k == n - 1 { h / 2.0 } else { h } / len;
            }
            row
        })
        .collect()
}

/// Minimal cost from every node at time `t0` over all Markov policies.
fn enumerate(p: &[Vec<f64>], cost: &dyn Fn(f64, f64) -> f64, z: &[f64], rho: f64, gamma: f64, t0: usize) -> Vec<f64> {
    let n = p.len();
    let horizon = z.len() - 1;
    let x = |i: usize| i as f64 / (n - 1) as f64;
    let steps = horizon - t0;
    let mut best = vec![f64::INFINITY; n];
    for code in 0u64..(1u64 << (n * steps)) {
        let mut v: Vec<f64> = (0..n).map(|i| cost(x(i), z[horizon])).collect();
        for t in (t0..horizon).rev() {
            let s = t - t0;
            v = (0..n)
                .map(|i| {
                    let r = cost(x(i), z[t]);
                    if code >> (s * n + i) & 1 == 1 {
                        r + gamma + rho * v[0]
                    } else {
                        r + rho * (0..n).map(|k| p[i][k] * v[k]).sum::<f64>()
                    }
                })
                .collect();
        }
        for (b, vi) in best.iter_mut().zip(v) {
            *b = b.min(vi);
        }
    }
    best
}

fn dp_brute_force() -> Outcome {
    let cases: [(usize, Vec<f64>, f64, f64, Curve<f64>, Curve<f64>); 4] = [
        (5, vec![0.3, 0.5, 0.6, 0.4], 0.9, 0.3, Curve::affine(0.1, 1.0), Curve::affine(0.5, 1.0)),
        (3, vec![0.2, 0.7, 0.1], 0.8, 0.15, Curve::affine(0.0, 2.0), Curve::affine(1.0, 0.5)),
        (4, vec![0.5, 0.2, 0.9, 0.3], 0.95, 0.1, Curve::Power { offset: 0.05, scale: 1.0, exponent: 2.0 }, Curve::affine(0.2, 1.0)),
        (5, vec![0.1, 0.9], 0.7, 0.05, Curve::affine(0.1, 1.0), Curve::constant(1.0)),
    ];
    let mut worst = 0.0f64;
    for (n, z, rho, gamma, r1, r2) in cases {
        let horizon = z.len() - 1;
        let params = ModelParams::new(rho, gamma, horizon, 0.0, Cost::product(r1.clone(), r2.clone()));
        let kernel = Kernel::new(XiSpec::Uniform, n, 2001).unwrap();
        let (table, _) = solve_dp(&kernel, &z, &params).unwrap();
        let p = uniform_transitions(n);
        let cost = |x: f64, zz: f64| r1.eval(x) * r2.eval(zz);
        for t in 0..=horizon {
            let bf = enumerate(&p, &cost, &z, rho, gamma, t);
            worst = worst.max(sup_distance(&table.values[t], &bf));
        }
    }
    outcome(worst <= 1e-9, format!("max |V_dp - V_enum| = {worst:.3e} over 4 configs, all nodes and times"))
}

fn monotone(fixed: &MeanFieldSolution<f64>, kernel: &Kernel<f64>) -> Outcome {
    let v_ok = fixed.values.values.iter().all(|row| row.windows(2).all(|w| w[1] >= w[0]));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut g_ok = true;
    for _ in 0..10 {
        let mut acc = 0.0;
        let v: Vec<f64> = (0..GRID)
            .map(|_| {
                acc += rng.random_range(1e-6..1e-2);
                acc
            })
            .collect();
        g_ok &= g_function(kernel, &v).windows(2).all(|w| w[1] > w[0]);
    }
    let thetas: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
    let mut worst_drop = 0.0f64;
    for xi in [XiSpec::Uniform, XiSpec::beta(2.0, 2.0).unwrap()] {
        let k = Kernel::new(xi, GRID, 2001).unwrap();
        let zs = theta_sweep(&k, &thetas, &StationaryOptions::default()).unwrap();
        worst_drop = worst_drop.max(zs.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max));
    }
    outcome(
        v_ok && g_ok && worst_drop <= 1e-6,
        format!("V(t,·) nondecreasing: {v_ok}; G strictly increasing: {g_ok}; max z(θ) drop = {worst_drop:.3e}"),
    )
}

fn triple_oracle() -> (Outcome, Outcome) {
    let mut worst = f64::NEG_INFINITY;
    let mut tau_worst = f64::NEG_INFINITY;
    let mut lines = Vec::new();
    for (name, xi) in [("uniform", XiSpec::Uniform), ("beta(2,2)", XiSpec::beta(2.0, 2.0).unwrap())] {
        let k = Kernel::new(xi, GRID, 2001).unwrap();
        let thetas = [0.2, 0.5, 0.8];
        let zs = theta_sweep(&k, &thetas, &StationaryOptions::default()).unwrap();
        for (i, (&theta, &zp)) in thetas.iter().zip(&zs).enumerate() {
            let seed = SEED + 10 * i as u64;
            let reg = regen_estimate(&xi, theta, 100_000, seed).unwrap();
            let path = long_run_mean_by_path(&xi, theta, 1_000_000, 0.0, seed + 1).unwrap();
            let pairs = [
                ((reg.z_est - zp).abs(), (3.0 * reg.se_z).max(1e-3)),
                ((path.mean - zp).abs(), (3.0 * path.se).max(1e-3)),
                ((reg.z_est - path.mean).abs(), (3.0 * (reg.se_z.powi(2) + path.se.powi(2)).sqrt()).max(1e-3)),
            ];
            for (d, tol) in pairs {
                worst = worst.max(d / tol);
            }
            lines.push(format!("{name} θ={theta}: {zp:.5}/{:.5}/{:.5}", reg.z_est, path.mean));
            if name == "uniform" {
                let exact = 1.0 - (1.0 - theta).ln();
                tau_worst = tau_worst.max((reg.mean_tau - exact).abs() / reg.se_tau);
            }
        }
    }
    (
        outcome(worst <= 1.0, format!("worst |diff| / max(3 SE, 1e-3) = {worst:.3}; {}", lines.join("; "))),
        outcome(tau_worst <= 3.0, format!("worst |mean_tau - (1 - ln(1-θ))| / SE = {tau_worst:.3}")),
    )
}

fn ergodicity() -> Outcome {
    let k = Kernel::new(XiSpec::Uniform, GRID, 2001).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for theta in [0.2, 0.5, 0.8] {
        let rep = ergodicity_report(&k, theta, 200, &[0.0, 0.5, 1.0], &StationaryOptions::default()).unwrap();
        let hit = rep.first_time_below(1e-6);
        ok &= hit.is_some() && rep.fit.ok && rep.fit.r < 1.0;
        parts.push(format!("θ={theta}: below 1e-6 at t={hit:?}, r={:.4}, K={:.3}", rep.fit.r, rep.fit.k));
    }
    outcome(ok, parts.join("; "))
}

fn aux_structure() -> Outcome {
    let k = Kernel::new(XiSpec::Uniform, GRID, 2001).unwrap();
    let r1: Curve<f64> = Curve::affine(0.0, 1.0);
    let aux = AuxProblem::new(&k, &r1, 0.9).unwrap();
    let b = aux.r_bounds().unwrap();
    let floor = b.low_floor(0.9);
    let ceiling = aux.high_ceiling();
    let order = 0.0 < b.r_low && b.r_low < b.r_high && b.r_high.is_finite();
    let bounds = b.r_low >= floor - 1e-8 && b.r_high <= ceiling + 1e-8;
    let below = aux.sweep(&[b.r_low * 0.1, b.r_low * 0.5, b.r_low * 0.99]).unwrap();
    let below_ok = below.iter().all(|d| *d == ThresholdDescriptor::AlwaysA1);
    let above = aux.sweep(&[b.r_high * 1.01, b.r_high * 2.0, ceiling * 1.5]).unwrap();
    let above_ok = above.iter().all(|d| *d == ThresholdDescriptor::AlwaysA0);
    let rs: Vec<f64> = (0..=60).map(|i| b.r_low + (b.r_high - b.r_low) * i as f64 / 60.0).collect();
    let mid = aux.sweep(&rs).unwrap();
    let increasing = mid.windows(2).all(|w| w[1].rank() > w[0].rank());
    outcome(
        order && bounds && below_ok && above_ok && increasing,
        format!(
            "r_low={:.6} (floor {floor:.6}), r_high={:.6} (ceiling {ceiling:.6}); 0-region {below_ok}, \
             strictly increasing on [r_low, r_high] {increasing}, 1⁺-region {above_ok}",
            b.r_low, b.r_high
        ),
    )
}

fn finite_fixed_point(fixed: &MeanFieldSolution<f64>) -> Outcome {
    let p = demo(20);
    let coarse_k = Kernel::new(XiSpec::Uniform, 1001, 2001).unwrap();
    let coarse = solve_fixed_point(&coarse_k, &GridMeasure::uniform(1001), &p, &FixedPointOptions::default()).unwrap();
    let shift = sup_distance(&coarse.z_hat.z, &fixed.z_hat.z);
    outcome(
        fixed.converged && fixed.residual <= 1e-6 && fixed.iterations <= 200 && coarse.converged && shift <= 1e-3,
        format!(
            "residual {:.3e} after {} iterations (initial λ=0.5, final λ={}); 1001→2001 max |Δẑ_t| = {shift:.3e}",
            fixed.residual, fixed.iterations, fixed.final_damping
        ),
    )
}

fn uniqueness() -> Outcome {
    let k = Kernel::new(XiSpec::Uniform, GRID, 2001).unwrap();
    let p = demo(1);
    let opts = StationaryOptions::default();
    let probe = uniqueness_probe(&k, &p, &opts).unwrap();
    let sol = solve_stationary_equilibrium(&k, &p, &opts).unwrap();
    let z = sol.z_hat;
    let brackets = [(0.0, 1.0), (0.1, 0.9), (0.0, 0.6), (z - 0.2, z + 0.05), (z - 0.01, 0.95)];
    let roots: Vec<f64> = brackets
        .iter()
        .map(|&(lo, hi)| solve_stationary_in(&k, &p, lo, hi, &opts).unwrap().z_hat)
        .collect();
    let spread = roots.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - roots.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    outcome(
        probe.sign_changes == 1 && spread <= 1e-4 && sol.residual <= 1e-6,
        format!(
            "{} sign change(s) over 101 points; ẑ={z:.8} (θ̂={}, residual {:.2e}); spread over 5 brackets {spread:.2e}",
            probe.sign_changes, sol.theta_hat, sol.residual
        ),
    )
}

fn epsilon_nash(fixed: &MeanFieldSolution<f64>, kernel: &Kernel<f64>) -> Outcome {
    let p = demo(20);
    let mu0 = GridMeasure::uniform(GRID);
    let gaps: Vec<_> = [50usize, 200, 800]
        .iter()
        .map(|&n| epsilon_nash_gap(n, fixed, kernel, &mu0, &XiSpec::Uniform, &p, SEED + n as u64, 200).unwrap())
        .collect();
    let gap_ok = gaps
        .windows(2)
        .all(|w| w[1].eps <= w[0].eps + 3.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt());
    let dev_ok = gaps.windows(2).all(|w| w[1].mean_max_deviation < w[0].mean_max_deviation);
    let parts: Vec<String> = gaps
        .iter()
        .map(|g| format!("N={}: ε={:.3e}±{:.1e}, max dev {:.4}", g.n, g.eps, g.se, g.mean_max_deviation))
        .collect();
    outcome(gap_ok && dev_ok, parts.join("; "))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, o: Outcome, elapsed: Duration, budget: Option<Duration>| {
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = o.pass && in_time;
        if !pass {
            failures += 1;
        }
        let budget_note = budget.map_or(String::new(), |b| format!(", budget {}s", b.as_secs()));
        println!(
            "criterion {id:2} [{}] {name}: {} ({:.1}s{budget_note})",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    };

    let t = Instant::now();
    let o = contraction();
    report(1, "contraction", o, t.elapsed(), Some(Duration::from_secs(60)));

    let t = Instant::now();
    let o = dp_brute_force();
    report(2, "dp vs brute force", o, t.elapsed(), None);

    let kernel = Kernel::new(XiSpec::Uniform, GRID, 2001).unwrap();
    let fixed = solve_fixed_point(&kernel, &GridMeasure::uniform(GRID), &demo(20), &FixedPointOptions::default()).unwrap();

    let t = Instant::now();
    let o = monotone(&fixed, &kernel);
    report(3, "monotone structures", o, t.elapsed(), None);

    let t = Instant::now();
    let (triple, renewal) = triple_oracle();
    let elapsed = t.elapsed();
    report(4, "triple-oracle z(θ)", triple, elapsed, Some(Duration::from_secs(300)));
    report(5, "renewal closed form", renewal, elapsed, None);

    let t = Instant::now();
    let o = ergodicity();
    report(6, "ergodicity", o, t.elapsed(), None);

    let t = Instant::now();
    let o = aux_structure();
    report(7, "effort-cost threshold structure", o, t.elapsed(), None);

    let t = Instant::now();
    let o = finite_fixed_point(&fixed);
    report(8, "finite-horizon fixed point", o, t.elapsed(), None);

    let t = Instant::now();
    let o = uniqueness();
    report(9, "stationary uniqueness", o, t.elapsed(), None);

    let t = Instant::now();
    let o = epsilon_nash(&fixed, &kernel);
    report(10, "epsilon-Nash trend", o, t.elapsed(), Some(Duration::from_secs(600)));

    if failures == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criterion line(s) failed");
        ExitCode::FAILURE
    }
}
