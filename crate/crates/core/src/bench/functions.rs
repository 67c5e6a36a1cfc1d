//! Test functions of the periodic and Neumann benchmarks.

use std::f64::consts::{PI, TAU};

/// `f_1(x) = prod_j (x_j - 1/2)^2 sin(2 pi x_j - pi)`.
pub fn f1(x: &[f64]) -> f64 {
    x.iter()
        .map(|&v| (v - 0.5).powi(2) * (TAU * v - PI).sin())
        .product()
}

fn bump(x: f64) -> f64 {
    (x * (1.0 - x)).powi(2)
}

fn factor(gamma: f64, x: f64) -> f64 {
    1.0 / 630.0 + gamma * (bump(x) - 1.0 / 630.0)
}

/// `u(x) = prod_j (1/630 + gamma_j (x_j^2 (1 - x_j)^2 - 1/630))`.
pub fn pde_exact(gamma: &[f64], x: &[f64]) -> f64 {
    gamma.iter().zip(x).map(|(&g, &v)| factor(g, v)).product()
}

/// `Laplace(u)` for [`pde_exact`].
pub fn pde_source(gamma: &[f64], x: &[f64]) -> f64 {
    (0..x.len())
        .map(|j| {
            let second = gamma[j] * (12.0 * x[j] * x[j] - 12.0 * x[j] + 2.0);
            let rest: f64 = (0..x.len())
                .filter(|&i| i != j)
                .map(|i| factor(gamma[i], x[i]))
                .product();
            second * rest
        })
        .sum()
}

/// Mean of [`pde_exact`] over the unit cube.
pub fn pde_mean(gamma: &[f64]) -> f64 {
    gamma.iter().map(|&g| (1.0 + 20.0 * g) / 630.0).product()
}
