//! Flow-based description of a barycenter candidate.
//!
//! A [`Solution`] stores, for each input distribution `mu_i`, a `T_i x n`
//! matrix whose entry `(t, j)` is the mass of atom `x_{i,t}` sent to
//! barycenter atom `j`. Column `j` across all plans is the weighted set
//! `S_j` with weight function `w_j`. The barycenter itself can be rebuilt
//! from this data alone, which is what makes plans reusable across
//! dimensions.

use ndarray::Array2;
use serde::Serialize;

use crate::distribution::{DiscreteDistribution, MARGINAL_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub plans: Vec<Array2<f64>>,
    pub barycenter_weights: Vec<f64>,
}

impl Solution {
    pub fn new(plans: Vec<Array2<f64>>, barycenter_weights: Vec<f64>) -> Self {
        Self {
            plans,
            barycenter_weights,
        }
    }

    /// Number of input distributions `k`.
    pub fn num_distributions(&self) -> usize {
        self.plans.len()
    }

    /// Barycenter support size `n`.
    pub fn support_size(&self) -> usize {
        self.barycenter_weights.len()
    }

    /// Total mass `sum_{x in S_j} w_j(x)` received by atom `j`; equals `k b_j` for valid solutions.
    pub fn column_mass(&self, j: usize) -> f64 {
        self.plans.iter().map(|g| g.column(j).sum()).sum()
    }
}

/// Result of [`validate_solution`]: empty `violations` means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolutionCheck {
    pub violations: Vec<String>,
}

impl SolutionCheck {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks nonnegativity and both marginals of every plan at [`MARGINAL_TOL`].
pub fn validate_solution(sol: &Solution, distributions: &[DiscreteDistribution]) -> SolutionCheck {
    let mut violations = Vec::new();
    let n = sol.support_size();
    if sol.plans.len() != distributions.len() {
        violations.push(format!(
            "{} plans for {} distributions",
            sol.plans.len(),
            distributions.len()
        ));
        return SolutionCheck { violations };
    }
    if n == 0 {
        violations.push("barycenter has no atoms".into());
        return SolutionCheck { violations };
    }
    for (j, &b) in sol.barycenter_weights.iter().enumerate() {
        if !(b.is_finite() && b >= -MARGINAL_TOL) {
            violations.push(format!("b[{j}] = {b} is negative"));
        }
    }
    let b_total: f64 = sol.barycenter_weights.iter().sum();
    if (b_total - 1.0).abs() > MARGINAL_TOL {
        violations.push(format!("barycenter weights sum to {b_total}"));
    }
    for (i, (plan, mu)) in sol.plans.iter().zip(distributions).enumerate() {
        if plan.dim() != (mu.len(), n) {
            violations.push(format!(
                "plan {i} has shape {:?}, expected ({}, {n})",
                plan.dim(),
                mu.len()
            ));
            continue;
        }
        if let Some(((t, j), v)) = plan
            .indexed_iter()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            violations.push(format!("plan {i} entry ({t}, {j}) = {v} is negative"));
        }
        for (t, row) in plan.rows().into_iter().enumerate() {
            let s = row.sum();
            if (s - mu.weight(t)).abs() > MARGINAL_TOL {
                violations.push(format!(
                    "plan {i} row {t} sums to {s}, atom weight is {}",
                    mu.weight(t)
                ));
            }
        }
        for (j, col) in plan.columns().into_iter().enumerate() {
            let s = col.sum();
            let b = sol.barycenter_weights[j];
            if (s - b).abs() > MARGINAL_TOL {
                violations.push(format!("plan {i} column {j} sums to {s}, b[{j}] = {b}"));
            }
        }
    }
    SolutionCheck { violations }
}

/// Objective value of a solution together with solver bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub total_cost: f64,
    pub per_atom_costs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl CostReport {
    pub(crate) fn from_atom_costs(per_atom_costs: Vec<f64>, iterations: usize, converged: bool) -> Self {
        Self {
            total_cost: per_atom_costs.iter().sum(),
            per_atom_costs,
            iterations,
            converged,
        }
    }
}
