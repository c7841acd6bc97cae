//! The `p = 2` cost of a solution written as a rank-constrained
//! Frobenius problem.
//!
//! When every plan entry is a multiple of `1/N`, duplicating each atom
//! `N w` times gives a matrix `B` whose rows are grouped into clusters by
//! the barycenter atom they feed. With `X` the normalized cluster indicator
//! (entries `1/sqrt(|C_l|)`), `(1/N) ||B - X X^T B||_F^2` equals `k` times
//! the solution cost.

use ndarray::Array2;

use crate::barycenter::solution_cost;
use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::solution::Solution;

/// Relative tolerance for the two sides to count as equal.
const MATCH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowRankCheck {
    pub frobenius_cost: f64,
    /// `k` times the solution cost.
    pub barycenter_cost: f64,
    /// `|frobenius - barycenter|` over the larger of the two, floored at the
    /// rounding level of `||B||_F^2 / N` so that zero costs compare cleanly.
    pub relative_gap: f64,
    pub matches: bool,
}

pub fn verify_low_rank_equivalence(mus: &[DiscreteDistribution], sol: &Solution, denominator: usize) -> Result<LowRankCheck> {
    if denominator == 0 {
        return Err(Error::BadParams("denominator must be at least 1".into()));
    }
    let report = solution_cost(sol, mus, 2.0)?;
    let nf = denominator as f64;
    let d = mus[0].dim();
    let n = sol.support_size();

    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (i, (plan, mu)) in sol.plans.iter().zip(mus).enumerate() {
        for ((t, j), &w) in plan.indexed_iter() {
            let copies = (w * nf).round();
            if (w * nf - copies).abs() > 1e-9 {
                return Err(Error::NotMultipleOfN {
                    dist: i,
                    atom: t,
                    col: j,
                    value: w,
                    denominator,
                });
            }
            for _ in 0..copies as usize {
                rows.extend(mu.atom(t).iter());
                labels.push(j);
            }
        }
    }
    let b = Array2::from_shape_vec((labels.len(), d), rows).map_err(|e| Error::BadParams(e.to_string()))?;

    let mut sizes = vec![0usize; n];
    for &l in &labels {
        sizes[l] += 1;
    }
    let mut x = Array2::<f64>::zeros((labels.len(), n));
    for (r, &l) in labels.iter().enumerate() {
        x[[r, l]] = 1.0 / (sizes[l] as f64).sqrt();
    }
    let residual = &b - &x.dot(&x.t().dot(&b));
    let frobenius_cost = residual.iter().map(|v| v * v).sum::<f64>() / nf;
    let barycenter_cost = mus.len() as f64 * report.total_cost;
    let floor = f64::EPSILON * b.iter().map(|v| v * v).sum::<f64>() / nf;
    let scale = frobenius_cost.abs().max(barycenter_cost.abs()).max(floor);
    let diff = (frobenius_cost - barycenter_cost).abs();
    let relative_gap = if diff == 0.0 { 0.0 } else { diff / scale };
    Ok(LowRankCheck {
        frobenius_cost,
        barycenter_cost,
        relative_gap,
        matches: relative_gap <= MATCH_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_points_one_cluster() {
        let mus = [
            DiscreteDistribution::dirac(&[0.0, 1.0]).unwrap(),
            DiscreteDistribution::dirac(&[2.0, 3.0]).unwrap(),
        ];
        let sol = Solution::new(vec![array![[1.0]], array![[1.0]]], vec![1.0]);
        let check = verify_low_rank_equivalence(&mus, &sol, 1).unwrap();
        assert!((check.frobenius_cost - 4.0).abs() < 1e-12);
        assert!(check.matches);
    }

    #[test]
    fn identity_plan_is_zero() {
        let mu = DiscreteDistribution::new(vec![vec![0.0], vec![5.0]], vec![0.5, 0.5]).unwrap();
        let sol = Solution::new(vec![array![[0.5, 0.0], [0.0, 0.5]]], vec![0.5, 0.5]);
        let check = verify_low_rank_equivalence(&[mu], &sol, 2).unwrap();
        assert_eq!(check.frobenius_cost, 0.0);
        assert!(check.matches);
    }

    #[test]
    fn zero_cost_with_rounding_noise() {
        let mu = DiscreteDistribution::new(vec![vec![0.1, 0.7], vec![-2.3, 1.9], vec![0.3, 0.3]], vec![0.25, 0.5, 0.25]).unwrap();
        let sol = Solution::new(vec![array![[0.25, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.25]]], vec![0.25, 0.5, 0.25]);
        let check = verify_low_rank_equivalence(&[mu], &sol, 4).unwrap();
        assert!(check.barycenter_cost.abs() < 1e-15);
        assert!(check.matches, "{check:?}");
    }

    #[test]
    fn non_multiple_rejected() {
        let mu = DiscreteDistribution::new(vec![vec![0.0], vec![5.0]], vec![0.3, 0.7]).unwrap();
        let sol = Solution::new(vec![array![[0.3], [0.7]]], vec![1.0]);
        assert!(matches!(
            verify_low_rank_equivalence(&[mu], &sol, 4),
            Err(Error::NotMultipleOfN { denominator: 4, .. })
        ));
    }
}
