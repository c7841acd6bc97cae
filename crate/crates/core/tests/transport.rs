mod common;

use common::{distribution, rel_close};
use ndarray::Array2;
use proptest::prelude::*;
use wbary::transport::{barycenter_objective, cost_matrix, solve_ot, solve_ot_oracle, solve_transport, wasserstein_p};
use wbary::{DiscreteDistribution, Error};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_matches_vertex_enumeration(mu in distribution(4, 2), nu in distribution(4, 2), p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        let fast = solve_ot(&mu, &nu, p).unwrap();
        let slow = solve_ot_oracle(&mu, &nu, p).unwrap();
        prop_assert!(rel_close(fast.cost, slow.cost, 1e-9), "{} vs {}", fast.cost, slow.cost);
    }

    #[test]
    fn plan_is_feasible_and_basic(mu in distribution(6, 3), nu in distribution(6, 3)) {
        let plan = solve_ot(&mu, &nu, 2.0).unwrap();
        for (t, row) in plan.flow.rows().into_iter().enumerate() {
            prop_assert!((row.sum() - mu.weight(t)).abs() < 1e-9);
        }
        for (j, col) in plan.flow.columns().into_iter().enumerate() {
            prop_assert!((col.sum() - nu.weight(j)).abs() < 1e-9);
        }
        prop_assert!(plan.flow.iter().all(|&f| f >= 0.0));
        prop_assert!(plan.support_len() <= mu.len() + nu.len() - 1);
        let c = cost_matrix(&mu, &nu, 2.0).unwrap();
        let direct: f64 = plan.flow.iter().zip(c.iter()).map(|(f, c)| f * c).sum();
        prop_assert!(rel_close(direct, plan.cost, 1e-12));
    }

    #[test]
    fn wasserstein_is_a_metric(a in distribution(4, 2), b in distribution(4, 2), c in distribution(4, 2), p in prop::sample::select(vec![1.0, 2.0, 3.0])) {
        let ab = wasserstein_p(&a, &b, p).unwrap();
        let ba = wasserstein_p(&b, &a, p).unwrap();
        let bc = wasserstein_p(&b, &c, p).unwrap();
        let ac = wasserstein_p(&a, &c, p).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(wasserstein_p(&a, &a, p).unwrap() < 1e-7);
    }

    #[test]
    fn translation_and_scaling(mu in distribution(5, 2), nu in distribution(5, 2), s in 0.1f64..4.0, shift in -3.0f64..3.0) {
        let base = solve_ot(&mu, &nu, 2.0).unwrap().cost;
        let moved = |d: &DiscreteDistribution, f: &dyn Fn(f64) -> f64| d.with_atoms(d.atoms().mapv(f)).unwrap();
        let scaled = solve_ot(&moved(&mu, &|x| s * x), &moved(&nu, &|x| s * x), 2.0).unwrap().cost;
        prop_assert!(rel_close(scaled, s * s * base, 1e-9));
        let shifted = solve_ot(&moved(&mu, &|x| x + shift), &moved(&nu, &|x| x + shift), 2.0).unwrap().cost;
        prop_assert!(rel_close(shifted, base, 1e-9));
    }
}

#[test]
fn one_dimensional_costs_follow_sorted_matching() {
    // In one dimension with p >= 1 the monotone coupling is optimal.
    let xs = [3.0, -1.0, 0.5, 7.0, 2.0];
    let ys = [1.0, 4.0, -2.0, 0.0, 6.0];
    let u = |v: &[f64]| DiscreteDistribution::uniform(Array2::from_shape_vec((v.len(), 1), v.to_vec()).unwrap()).unwrap();
    let (mut a, mut b) = (xs.to_vec(), ys.to_vec());
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    for p in [1.0, 2.0, 3.0] {
        let expected: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>() / 5.0;
        let got = solve_ot(&u(&xs), &u(&ys), p).unwrap().cost;
        assert!(rel_close(got, expected, 1e-12), "p={p}: {got} vs {expected}");
    }
}

#[test]
fn large_assignment_is_a_permutation() {
    let n = 60;
    let cost = Array2::from_shape_fn((n, n), |(i, j)| ((i * 31 + j * 17) % 23) as f64 + ((i as f64) - (j as f64)).abs() * 0.01);
    let w = vec![1.0 / n as f64; n];
    let plan = solve_transport(&w, &w, cost.view()).unwrap();
    assert!(plan.flow.iter().all(|&f| f < 1e-12 || (f * n as f64 - 1.0).abs() < 1e-9));
}

#[test]
fn objective_rejects_bad_lambdas() {
    let mu = DiscreteDistribution::dirac(&[0.0]).unwrap();
    let nu = DiscreteDistribution::dirac(&[1.0]).unwrap();
    let mus = [mu.clone(), nu.clone()];
    assert!((barycenter_objective(&nu, &mus, 2.0, Some(&[0.25, 0.75])).unwrap() - 0.25).abs() < 1e-12);
    assert!(matches!(barycenter_objective(&nu, &mus, 2.0, Some(&[0.5])), Err(Error::BadLambdas(_))));
    assert!(matches!(barycenter_objective(&nu, &mus, 2.0, Some(&[0.5, 0.6])), Err(Error::BadLambdas(_))));
    assert!(matches!(barycenter_objective(&nu, &mus, 0.5, None), Err(Error::BadExponent(_))));
}
