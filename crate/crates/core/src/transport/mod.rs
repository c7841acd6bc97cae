//! Exact discrete optimal transport and the barycenter objective.

mod oracle;
mod simplex;

pub use oracle::solve_ot_oracle;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::distribution::{pow_from_sq, sq_dist, DiscreteDistribution, MARGINAL_TOL};
use crate::error::{Error, Result};
use simplex::TransportSimplex;

/// Atoms lighter than this are removed before solving and come back as zero rows/columns.
pub const NEGLIGIBLE_MASS: f64 = 1e-15;

/// A coupling between two distributions together with its cost `sum flow * C`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub flow: Array2<f64>,
    pub cost: f64,
}

impl TransportPlan {
    /// Number of strictly positive entries.
    pub fn support_len(&self) -> usize {
        self.flow.iter().filter(|&&f| f > 0.0).count()
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::BadExponent(p))
    }
}

/// `C[s][t] = ||x_s - y_t||_2^p`.
pub fn cost_matrix(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: f64) -> Result<Array2<f64>> {
    check_exponent(p)?;
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    Ok(pairwise_cost(mu.atoms(), nu.atoms(), p))
}

pub(crate) fn pairwise_cost(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, p: f64) -> Array2<f64> {
    let mut c = Array2::zeros((a.nrows(), b.nrows()));
    for (s, x) in a.rows().into_iter().enumerate() {
        for (t, y) in b.rows().into_iter().enumerate() {
            c[[s, t]] = pow_from_sq(sq_dist(x, y), p);
        }
    }
    c
}

/// `sum_{s,t} flow[s][t] * C[s][t]`.
pub fn cost_of_plan(flow: &Array2<f64>, cost: &Array2<f64>) -> Result<f64> {
    if flow.dim() != cost.dim() {
        return Err(Error::ShapeMismatch {
            expected: cost.dim(),
            found: flow.dim(),
        });
    }
    Ok(flow.iter().zip(cost.iter()).map(|(f, c)| f * c).sum())
}

/// Solves the transportation LP `min <flow, C>` subject to row sums `supply`
/// and column sums `demand`.
///
/// Both marginals must be nonnegative with equal totals (to within
/// [`MARGINAL_TOL`]); the demand is rescaled to the supply total before
/// solving. The result is a basic optimal solution.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: ArrayView2<'_, f64>) -> Result<TransportPlan> {
    let (m, n) = (supply.len(), demand.len());
    if cost.dim() != (m, n) {
        return Err(Error::ShapeMismatch {
            expected: (m, n),
            found: cost.dim(),
        });
    }
    if supply.iter().chain(demand).any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::BadWeights("marginals must be nonnegative".into()));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NumericalFailure("cost matrix has non-finite entries".into()));
    }
    let total_a: f64 = supply.iter().sum();
    let total_b: f64 = demand.iter().sum();
    if (total_a - total_b).abs() > MARGINAL_TOL * total_a.max(1.0) {
        return Err(Error::BadWeights(format!(
            "marginal totals differ: {total_a} vs {total_b}"
        )));
    }
    let rows: Vec<usize> = (0..m).filter(|&i| supply[i] >= NEGLIGIBLE_MASS).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| demand[j] >= NEGLIGIBLE_MASS).collect();
    let mut flow = Array2::zeros((m, n));
    if rows.is_empty() || cols.is_empty() {
        return Ok(TransportPlan { flow, cost: 0.0 });
    }
    let a: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let active_a: f64 = a.iter().sum();
    let active_b: f64 = cols.iter().map(|&j| demand[j]).sum();
    let scale = active_a / active_b;
    let b: Vec<f64> = cols.iter().map(|&j| demand[j] * scale).collect();

    let compact = if rows.len() == m && cols.len() == n {
        TransportSimplex::new(&a, &b, cost).solve()?
    } else {
        let sub = Array2::from_shape_fn((rows.len(), cols.len()), |(r, c)| cost[[rows[r], cols[c]]]);
        TransportSimplex::new(&a, &b, sub.view()).solve()?
    };
    let mut total = 0.0;
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            let f = compact[[r, c]];
            flow[[i, j]] = f;
            total += f * cost[[i, j]];
        }
    }
    Ok(TransportPlan { flow, cost: total })
}

/// Optimal coupling between `mu` and `nu` for the cost `||x - y||^p`; the
/// plan's cost is `W_p(mu, nu)^p`.
pub fn solve_ot(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: f64) -> Result<TransportPlan> {
    let c = cost_matrix(mu, nu, p)?;
    solve_transport(
        mu.weights().as_slice().expect("contiguous weights"),
        nu.weights().as_slice().expect("contiguous weights"),
        c.view(),
    )
}

/// `W_p(mu, nu)`, the p-th root of the optimal transport cost.
pub fn wasserstein_p(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: f64) -> Result<f64> {
    Ok(solve_ot(mu, nu, p)?.cost.max(0.0).powf(1.0 / p))
}

/// `sum_i lambda_i W_p(mu_i, nu)^p`, with `lambda_i = 1/k` when `lambdas` is `None`.
///
/// The `k` transport problems are solved in parallel; the sum is taken in
/// input order so the result does not depend on scheduling.
pub fn barycenter_objective(
    nu: &DiscreteDistribution,
    mus: &[DiscreteDistribution],
    p: f64,
    lambdas: Option<&[f64]>,
) -> Result<f64> {
    check_exponent(p)?;
    if mus.is_empty() {
        return Err(Error::Empty("no distributions given"));
    }
    let k = mus.len();
    let uniform;
    let lambdas = match lambdas {
        Some(l) => {
            if l.len() != k {
                return Err(Error::BadLambdas(format!("{} lambdas for {k} distributions", l.len())));
            }
            if l.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::BadLambdas("lambdas must be nonnegative".into()));
            }
            let s: f64 = l.iter().sum();
            if (s - 1.0).abs() > MARGINAL_TOL {
                return Err(Error::BadLambdas(format!("lambdas sum to {s}")));
            }
            l
        }
        None => {
            uniform = vec![1.0 / k as f64; k];
            &uniform[..]
        }
    };
    let terms: Vec<f64> = mus
        .par_iter()
        .map(|mu| solve_ot(mu, nu, p).map(|plan| plan.cost))
        .collect::<Result<_>>()?;
    Ok(terms.iter().zip(lambdas).map(|(t, l)| t * l).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn dist1(points: &[f64], weights: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(points.iter().map(|&x| vec![x]).collect(), weights.to_vec()).unwrap()
    }

    #[test]
    fn cost_matrix_examples() {
        let mu = DiscreteDistribution::dirac(&[0.0, 0.0]).unwrap();
        let nu = DiscreteDistribution::dirac(&[3.0, 4.0]).unwrap();
        assert_eq!(cost_matrix(&mu, &nu, 2.0).unwrap(), array![[25.0]]);

        let z = dist1(&[0.0], &[1.0]);
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert_eq!(cost_matrix(&z, &z, p).unwrap(), array![[0.0]]);
        }

        let mu = dist1(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = dist1(&[0.0, 2.0], &[0.5, 0.5]);
        assert_eq!(cost_matrix(&mu, &nu, 1.0).unwrap(), array![[0.0, 2.0], [1.0, 1.0]]);
    }

    #[test]
    fn cost_matrix_rejects_bad_input() {
        let a = dist1(&[0.0], &[1.0]);
        let b = DiscreteDistribution::dirac(&[0.0, 0.0]).unwrap();
        assert!(matches!(cost_matrix(&a, &b, 2.0), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(cost_matrix(&a, &a, 0.5), Err(Error::BadExponent(_))));
    }

    #[test]
    fn single_coupling() {
        let mu = DiscreteDistribution::dirac(&[0.0, 0.0]).unwrap();
        let nu = DiscreteDistribution::dirac(&[3.0, 4.0]).unwrap();
        let plan = solve_ot(&mu, &nu, 1.0).unwrap();
        assert_eq!(plan.cost, 5.0);
        assert_eq!(plan.flow, array![[1.0]]);
    }

    #[test]
    fn identical_distributions_cost_nothing() {
        let mu = dist1(&[0.0, 1.0], &[0.5, 0.5]);
        let plan = solve_ot(&mu, &mu, 2.0).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert_eq!(plan.flow, array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn two_by_two_matches_vertex_enumeration() {
        let mu = dist1(&[0.0, 1.0], &[0.7, 0.3]);
        let nu = dist1(&[0.0, 2.0], &[0.4, 0.6]);
        // One free variable f = flow(0 -> 0); feasibility gives f in [0.1, 0.4].
        let c = cost_matrix(&mu, &nu, 1.0).unwrap();
        let brute = [0.1, 0.4]
            .iter()
            .map(|&f| {
                let flow = array![[f, 0.7 - f], [0.4 - f, f - 0.1]];
                cost_of_plan(&flow, &c).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((brute - 0.9).abs() < 1e-12);
        let plan = solve_ot(&mu, &nu, 1.0).unwrap();
        assert!((plan.cost - brute).abs() < 1e-12, "cost {}", plan.cost);
        assert!((wasserstein_p(&mu, &nu, 1.0).unwrap() - 0.9).abs() < 1e-12);
        assert!(plan.support_len() <= 3);
    }

    #[test]
    fn zero_weight_atoms_are_reinserted() {
        let mu = dist1(&[0.0, 5.0, 1.0], &[0.5, 0.0, 0.5]);
        let nu = dist1(&[0.0, 1.0], &[0.5, 0.5]);
        let plan = solve_ot(&mu, &nu, 2.0).unwrap();
        assert_eq!(plan.flow.row(1).sum(), 0.0);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn wasserstein_of_diracs_is_distance() {
        let x = DiscreteDistribution::dirac(&[1.0, 2.0, 3.0]).unwrap();
        let y = DiscreteDistribution::dirac(&[4.0, 6.0, 3.0]).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert!((wasserstein_p(&x, &y, p).unwrap() - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_examples() {
        let mus = vec![dist1(&[0.0], &[1.0]), dist1(&[2.0], &[1.0])];
        let nu = dist1(&[1.0], &[1.0]);
        assert!((barycenter_objective(&nu, &mus, 2.0, None).unwrap() - 1.0).abs() < 1e-12);

        let mu = dist1(&[0.0, 3.0], &[0.25, 0.75]);
        let same = vec![mu.clone(), mu.clone(), mu.clone()];
        assert_eq!(barycenter_objective(&mu, &same, 2.0, None).unwrap(), 0.0);

        let mu = dist1(&[0.0, 1.0], &[0.7, 0.3]);
        let nu = dist1(&[0.0, 2.0], &[0.4, 0.6]);
        let v = barycenter_objective(&nu, &[mu.clone(), mu], 1.0, None).unwrap();
        assert!((v - 0.9).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_bad_lambdas() {
        let mus = vec![dist1(&[0.0], &[1.0]), dist1(&[2.0], &[1.0])];
        let nu = dist1(&[1.0], &[1.0]);
        assert!(matches!(
            barycenter_objective(&nu, &mus, 2.0, Some(&[0.5, 0.6])),
            Err(Error::BadLambdas(_))
        ));
        assert!(matches!(
            barycenter_objective(&nu, &mus, 2.0, Some(&[1.0])),
            Err(Error::BadLambdas(_))
        ));
        let v = barycenter_objective(&nu, &mus, 2.0, Some(&[1.0, 0.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cost_of_plan_examples() {
        let c = array![[3.0]];
        assert_eq!(cost_of_plan(&array![[1.0]], &c).unwrap(), 3.0);
        assert_eq!(cost_of_plan(&array![[0.0]], &c).unwrap(), 0.0);
        let c = array![[0.0, 2.0], [1.0, 1.0]];
        let f = array![[0.4, 0.3], [0.0, 0.3]];
        assert!((cost_of_plan(&f, &c).unwrap() - 0.9).abs() < 1e-12);
        assert!(matches!(
            cost_of_plan(&array![[1.0, 0.0]], &c),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn rejects_mismatched_totals() {
        let c = array![[1.0]];
        assert!(matches!(
            solve_transport(&[1.0], &[0.5], c.view()),
            Err(Error::BadWeights(_))
        ));
    }
}
