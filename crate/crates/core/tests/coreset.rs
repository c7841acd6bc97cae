mod common;

use proptest::prelude::*;
use wbary::coreset::{build_coreset, coreset_size_bound, distribution_costs, evaluate_coreset, sample_coreset, sensitivity_upper_bounds, SensitivityScores};
use wbary::instances::gen_coreset_synthetic;
use wbary::{solve_barycenter, DiscreteDistribution, SolverOptions};

fn line_instance() -> Vec<DiscreteDistribution> {
    [vec![0.0, 1.0], vec![2.0], vec![-1.0, 3.0, 4.0], vec![10.0], vec![0.5, 0.6]]
        .into_iter()
        .map(|xs| DiscreteDistribution::uniform(ndarray::Array2::from_shape_vec((xs.len(), 1), xs).unwrap()).unwrap())
        .collect()
}

#[test]
fn sensitivity_bounds_dominate_grid_sensitivities() {
    // For a single-atom barycenter with p = 2 the solver is exact, so alpha = 1.
    let mus = line_instance();
    for p in [1.0, 2.0] {
        let anchor = solve_barycenter(&mus, &SolverOptions::new(1, p)).unwrap();
        let alpha = if p == 2.0 { 1.0 } else { 1.0 + 1e-6 };
        let scores = sensitivity_upper_bounds(&mus, &anchor.nu, alpha, p).unwrap();
        let k = mus.len() as f64;
        for g in -200..=300 {
            let q = DiscreteDistribution::dirac(&[g as f64 * 0.1]).unwrap();
            let costs = distribution_costs(&mus, &q, p).unwrap();
            let avg: f64 = costs.iter().sum::<f64>() / k;
            for (i, c) in costs.iter().enumerate() {
                assert!(c / avg <= scores.s[i] + 1e-9, "p={p} query {g} dist {i}: {} > {}", c / avg, scores.s[i]);
            }
        }
    }
}

#[test]
fn importance_weights_make_the_estimate_unbiased() {
    let mus = line_instance();
    let anchor = solve_barycenter(&mus, &SolverOptions::new(1, 2.0)).unwrap();
    let scores = sensitivity_upper_bounds(&mus, &anchor.nu, 1.0, 2.0).unwrap();
    let q = DiscreteDistribution::dirac(&[7.0]).unwrap();
    let trials = 20_000;
    let mut sum = 0.0;
    let mut orig = 0.0;
    for s in 0..trials {
        let core = build_coreset(&scores, 3, s).unwrap();
        let ev = evaluate_coreset(&core, &mus, &q, 2.0).unwrap();
        sum += ev.cost_core;
        orig = ev.cost_orig;
    }
    assert!((sum / trials as f64 / orig - 1.0).abs() < 0.02);
}

#[test]
fn size_bound_matches_formula() {
    let b = coreset_size_bound(4, 3, 0.5, 0.1, 2.0, 2.0, 1.0, 6.0, 2.0).unwrap();
    let theory = 2.0 * 4.0 * 4f64.powi(8) * 3f64.powi(4) * (12.0f64 / 0.1).ln() / 0.25;
    let practical = 6.0 * (2.0 * 6f64.ln() + 10f64.ln()) / 0.25;
    assert!((b.theoretical - theory).abs() < 1e-9 * theory);
    assert!((b.practical - practical).abs() < 1e-9 * practical);
}

#[test]
fn outlier_scores_by_hand() {
    let mus = gen_coreset_synthetic(100).unwrap();
    let anchor = solve_barycenter(&mus, &SolverOptions::new(1, 2.0)).unwrap();
    let scores = sensitivity_upper_bounds(&mus, &anchor.nu, 1.0, 2.0).unwrap();
    // Mean at 1: the 99 atoms at 0 pay 1, the outlier at 100 pays 99^2.
    let avg = (99.0 + 99.0f64.powi(2)) / 100.0;
    let s_in = 2.0 / avg + 8.0;
    let s_out = 2.0 * 99.0f64.powi(2) / avg + 8.0;
    assert!((scores.s[0] - s_in).abs() < 1e-9);
    assert!((scores.s[99] - s_out).abs() < 1e-9);
    assert!((scores.q[99] - s_out / (99.0 * s_in + s_out)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn scores_form_a_distribution(costs in prop::collection::vec(0.0f64..100.0, 1..30), alpha in 1.0f64..4.0, p in 1.0f64..3.0) {
        let s = SensitivityScores::from_costs(&costs, alpha, p).unwrap();
        prop_assert!((s.q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(s.s.iter().all(|&v| v >= alpha * 4f64.powf(p - 1.0)));
        prop_assert!((s.s_bar - s.s.iter().sum::<f64>() / costs.len() as f64).abs() < 1e-9 * s.s_bar);
    }

    #[test]
    fn sampled_weights_are_inverse_probabilities(q in common::rational_weights(6), size in 1usize..20, seed in any::<u64>()) {
        let core = sample_coreset(&q, size, seed).unwrap();
        prop_assert_eq!(core.size(), size);
        for &(i, w) in &core.members {
            prop_assert!((w - 1.0 / (6.0 * size as f64 * q[i])).abs() < 1e-12);
        }
    }
}
