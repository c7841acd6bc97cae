//! Brute-force optimal transport for tiny instances.
//!
//! Every vertex of the transportation polytope is the unique flow on some
//! spanning tree of the complete bipartite graph. Enumerating all
//! `(m + n - 1)`-subsets of cells, keeping the spanning trees, and solving
//! each tree by leaf elimination visits every vertex, so the cheapest
//! feasible one is a global optimum. Only used to cross-check the simplex.

use itertools::Itertools;
use ndarray::Array2;

use super::{cost_matrix, TransportPlan};
use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};

pub const ORACLE_MAX_CELLS: usize = 16;

pub fn solve_ot_oracle(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: f64) -> Result<TransportPlan> {
    let (m, n) = (mu.len(), nu.len());
    if m * n > ORACLE_MAX_CELLS {
        return Err(Error::TooLarge(m * n));
    }
    let c = cost_matrix(mu, nu, p)?;
    let a = mu.weights().to_vec();
    let b: Vec<f64> = {
        let s: f64 = nu.weights().sum();
        let ta: f64 = a.iter().sum();
        nu.weights().iter().map(|w| w * ta / s).collect()
    };
    let mut best: Option<TransportPlan> = None;
    for cells in (0..m * n).combinations(m + n - 1) {
        let Some(flow) = tree_flow(&cells, m, n, &a, &b) else {
            continue;
        };
        let cost: f64 = flow.iter().zip(c.iter()).map(|(f, c)| f * c).sum();
        if best.as_ref().is_none_or(|bp| cost < bp.cost) {
            best = Some(TransportPlan { flow, cost });
        }
    }
    best.ok_or_else(|| Error::NumericalFailure("no feasible vertex found".into()))
}

/// Flow on the spanning tree formed by `cells`, or `None` if the cells do
/// not form a spanning tree or the tree flow is infeasible.
fn tree_flow(cells: &[usize], m: usize, n: usize, a: &[f64], b: &[f64]) -> Option<Array2<f64>> {
    let nodes = m + n;
    let mut uf: Vec<usize> = (0..nodes).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for &cell in cells {
        let (r, col) = (cell / n, m + cell % n);
        let (x, y) = (find(&mut uf, r), find(&mut uf, col));
        if x == y {
            return None;
        }
        uf[x] = y;
    }

    let mut residual: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let mut degree = vec![0usize; nodes];
    for &cell in cells {
        degree[cell / n] += 1;
        degree[m + cell % n] += 1;
    }
    let mut used = vec![false; cells.len()];
    let mut flow = Array2::zeros((m, n));
    for _ in 0..cells.len() {
        let (k, leaf) = cells.iter().enumerate().find_map(|(k, &cell)| {
            if used[k] {
                return None;
            }
            let (r, col) = (cell / n, m + cell % n);
            if degree[r] == 1 {
                Some((k, r))
            } else if degree[col] == 1 {
                Some((k, col))
            } else {
                None
            }
        })?;
        let cell = cells[k];
        let (r, col) = (cell / n, m + cell % n);
        let other = if leaf == r { col } else { r };
        let f = residual[leaf];
        if f < -1e-12 {
            return None;
        }
        let f = f.max(0.0);
        flow[[r, cell % n]] = f;
        residual[leaf] = 0.0;
        residual[other] -= f;
        degree[r] -= 1;
        degree[col] -= 1;
        used[k] = true;
    }
    Some(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn dist1(points: &[f64], weights: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(points.iter().map(|&x| vec![x]).collect(), weights.to_vec()).unwrap()
    }

    #[test]
    fn one_by_one_is_the_unique_coupling() {
        let mu = dist1(&[0.0], &[1.0]);
        let nu = dist1(&[7.0], &[1.0]);
        let plan = solve_ot_oracle(&mu, &nu, 2.0).unwrap();
        assert_eq!(plan.flow, array![[1.0]]);
        assert_eq!(plan.cost, 49.0);
    }

    #[test]
    fn two_by_two_instance() {
        let mu = dist1(&[0.0, 1.0], &[0.7, 0.3]);
        let nu = dist1(&[0.0, 2.0], &[0.4, 0.6]);
        let plan = solve_ot_oracle(&mu, &nu, 1.0).unwrap();
        assert!((plan.cost - 0.9).abs() < 1e-12);
    }

    #[test]
    fn equal_distributions() {
        let mu = dist1(&[0.0, 4.0], &[0.3, 0.7]);
        assert_eq!(solve_ot_oracle(&mu, &mu, 2.0).unwrap().cost, 0.0);
    }

    #[test]
    fn refuses_large_instances() {
        let mu = dist1(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.2; 5]);
        assert!(matches!(solve_ot_oracle(&mu, &mu, 1.0), Err(Error::TooLarge(25))));
    }
}
