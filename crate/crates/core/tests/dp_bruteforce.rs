//! Exhaustive policy enumeration on tiny grids against the backward recursion.

use mfg_core::dp::solve_dp;
use mfg_core::kernel::{Kernel, XiSpec};
use mfg_core::model::{Cost, Curve, ModelParams};

/// Transition matrix for uniform ξ written down by hand: from node x_j the next
/// state is uniform on [x_j, 1], projected on hat functions.
fn uniform_transitions(n: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|j| {
            let mut row = vec![0.0; n];
            if j == n - 1 {
                row[n - 1] = 1.0;
                return row;
            }
            let len = 1.0 - j as f64 * h;
            for (k, p) in row.iter_mut().enumerate().skip(j) {
                let area = if k == j || k == n - 1 { h / 2.0 } else { h };
                *p = area / len;
            }
            row
        })
        .collect()
}

fn policy_values(
    actions: &[Vec<bool>],
    p: &[Vec<f64>],
    cost: &dyn Fn(f64, f64) -> f64,
    z: &[f64],
    rho: f64,
    gamma: f64,
) -> Vec<f64> {
    let n = p.len();
    let x = |i: usize| i as f64 / (n - 1) as f64;
    let horizon = z.len() - 1;
    let mut v: Vec<f64> = (0..n).map(|i| cost(x(i), z[horizon])).collect();
    for t in (0..horizon).rev() {
        v = (0..n)
            .map(|i| {
                let r = cost(x(i), z[t]);
                if actions[t][i] {
                    r + gamma + rho * v[0]
                } else {
                    r + rho * (0..n).map(|k| p[i][k] * v[k]).sum::<f64>()
                }
            })
            .collect();
    }
    v
}

fn check(n: usize, z: &[f64], rho: f64, gamma: f64, r1: Curve<f64>, r2: Curve<f64>) {
    let horizon = z.len() - 1;
    let params = ModelParams::new(rho, gamma, horizon, 0.0, Cost::product(r1.clone(), r2.clone()));
    let kernel = Kernel::new(XiSpec::Uniform, n, 2001).unwrap();
    let (table, schedule) = solve_dp(&kernel, z, &params).unwrap();

    let p = uniform_transitions(n);
    let cost = move |x: f64, zz: f64| r1.eval(x) * r2.eval(zz);
    let bits = n * horizon;
    let mut best = vec![f64::INFINITY; n];
    for code in 0u64..(1u64 << bits) {
        let actions: Vec<Vec<bool>> = (0..horizon)
            .map(|t| (0..n).map(|i| code >> (t * n + i) & 1 == 1).collect())
            .collect();
        let v = policy_values(&actions, &p, &cost, z, rho, gamma);
        for (b, vi) in best.iter_mut().zip(v) {
            *b = b.min(vi);
        }
    }
    for (i, (&dp, &bf)) in table.values[0].iter().zip(&best).enumerate() {
        assert!((dp - bf).abs() <= 1e-9, "node {i}: dp {dp} vs enumeration {bf}");
    }

    // the threshold agrees with the strict branch comparison at every node
    let xs = kernel.grid().nodes();
    for t in 0..horizon {
        let next = &table.values[t + 1];
        for (i, &x) in xs.iter().enumerate() {
            let cont = rho * (0..n).map(|k| p[i][k] * next[k]).sum::<f64>();
            let reset = rho * next[0] + gamma;
            if (cont - reset).abs() > 1e-9 {
                assert_eq!(schedule.at(t).resets_at(x), reset < cont, "t={t} x={x}");
            }
        }
    }
}

#[test]
fn enumeration_matches_recursion_interior_regime() {
    check(5, &[0.3, 0.5, 0.6, 0.4], 0.9, 0.3, Curve::affine(0.1, 1.0), Curve::affine(0.5, 1.0));
}

#[test]
fn enumeration_matches_recursion_three_nodes() {
    check(3, &[0.2, 0.7, 0.1], 0.8, 0.15, Curve::affine(0.0, 2.0), Curve::affine(1.0, 0.5));
}

#[test]
fn enumeration_matches_recursion_convex_cost() {
    let r1 = Curve::Power { offset: 0.05, scale: 1.0, exponent: 2.0 };
    check(4, &[0.5, 0.2, 0.9, 0.3], 0.95, 0.1, r1, Curve::affine(0.2, 1.0));
}

#[test]
fn enumeration_matches_recursion_costly_effort() {
    check(5, &[0.5, 0.5, 0.5, 0.5], 0.9, 50.0, Curve::affine(0.1, 1.0), Curve::affine(0.5, 1.0));
}

#[test]
fn enumeration_matches_recursion_free_effort() {
    check(5, &[0.1, 0.2, 0.3, 0.4], 0.7, 0.0, Curve::affine(0.1, 1.0), Curve::constant(1.0));
}
