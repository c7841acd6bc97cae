#![allow(dead_code)]

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wbary::transport::solve_transport;
use wbary::{DiscreteDistribution, Solution};

/// Weights `c_i / sum(c)` with small positive integer numerators.
pub fn rational_weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..=9, len).prop_map(|c| {
        let s: u32 = c.iter().sum();
        c.into_iter().map(|x| x as f64 / s as f64).collect()
    })
}

pub fn distribution(max_len: usize, d: usize) -> impl Strategy<Value = DiscreteDistribution> {
    (1..=max_len).prop_flat_map(move |len| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), len),
            rational_weights(len),
        )
            .prop_map(|(atoms, w)| DiscreteDistribution::new(atoms, w).unwrap())
    })
}

pub fn distributions(k: usize, max_len: usize, d: usize) -> impl Strategy<Value = Vec<DiscreteDistribution>> {
    prop::collection::vec(distribution(max_len, d), k)
}

pub fn random_distribution(rng: &mut ChaCha8Rng, len: usize, d: usize) -> DiscreteDistribution {
    let atoms: Vec<Vec<f64>> = (0..len).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(1..=9) as f64).collect();
    let s: f64 = w.iter().sum();
    DiscreteDistribution::new(atoms, w.into_iter().map(|x| x / s).collect()).unwrap()
}

/// A valid solution: each plan is a vertex of the transport polytope
/// between `mu_i` and `b` under a random cost.
pub fn random_solution(mus: &[DiscreteDistribution], n: usize, seed: u64) -> Solution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1..=5) as f64).collect();
    let s: f64 = raw.iter().sum();
    let b: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let plans = mus
        .iter()
        .map(|mu| {
            let cost = Array2::from_shape_fn((mu.len(), n), |_| rng.random::<f64>());
            solve_transport(mu.weights().as_slice().unwrap(), &b, cost.view()).unwrap().flow
        })
        .collect();
    Solution::new(plans, b)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
