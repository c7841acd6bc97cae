//! Free-support barycenter solver with a fixed number of atoms.
//!
//! The solver alternates two exact half-steps: with the atoms fixed it
//! solves one transport problem per input distribution, and with the
//! plans fixed it moves every atom to the minimizer of
//! `sum_{x in S_j} w_j(x) ||x - nu^j||^p`. Neither step can raise the
//! objective, so the recorded trace is non-increasing.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::index::sample_weighted;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{dist_pow, pooled_atoms, sq_dist, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::seed::mix_seed;
use crate::solution::{validate_solution, CostReport, Solution};
use crate::transport::{check_exponent, pairwise_cost, solve_transport};

/// How the initial support is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Weighted sampling of pooled atoms without replacement.
    #[default]
    WeightedSample,
    /// One weighted draw, then repeatedly the pooled atom farthest from the chosen set.
    FarthestPoint,
}

/// How the barycenter weights `b_j` evolve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `b_j = 1/n` throughout.
    #[default]
    Uniform,
    /// After each atom update, propose `b_j` = average mass of the atoms
    /// whose nearest support point is `j`; accepted only if it lowers the objective.
    Reestimate,
}

/// Tolerances for the per-atom support update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    pub support_size: usize,
    pub p: f64,
    pub max_outer_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub inner: InnerOptions,
    pub restarts: usize,
    pub init: Init,
    pub weights: WeightMode,
}

impl SolverOptions {
    pub fn new(support_size: usize, p: f64) -> Self {
        Self {
            support_size,
            p,
            max_outer_iters: 200,
            rel_tol: 1e-7,
            seed: 0,
            inner: InnerOptions::default(),
            restarts: 1,
            init: Init::default(),
            weights: WeightMode::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        if self.support_size == 0 {
            return Err(Error::BadParams("support size must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.inner.tol > 0.0) {
            return Err(Error::BadParams("tolerances must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::BadParams("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// `sum_i w_i ||x_i - center||^p`.
pub fn support_objective(points: ArrayView2<'_, f64>, weights: &[f64], center: ArrayView1<'_, f64>, p: f64) -> f64 {
    points
        .rows()
        .into_iter()
        .zip(weights)
        .map(|(x, w)| w * dist_pow(x, center, p))
        .sum()
}

fn weighted_mean(points: ArrayView2<'_, f64>, weights: &[f64], total: f64) -> Array1<f64> {
    let mut mean = Array1::zeros(points.ncols());
    for (x, &w) in points.rows().into_iter().zip(weights) {
        mean.scaled_add(w, &x);
    }
    mean / total
}

/// Minimizer of `sum_i w_i ||x_i - y||^p` over `y`.
///
/// `p = 2` returns the weighted mean. `p = 1` runs Weiszfeld's iteration;
/// other exponents use gradient descent with backtracking. For `p != 2`
/// the pooled point nearest to the iterate is also evaluated, which
/// catches minimizers sitting on a data point.
pub fn update_support_atom(points: ArrayView2<'_, f64>, weights: &[f64], p: f64, inner: InnerOptions) -> Result<Array1<f64>> {
    check_exponent(p)?;
    if points.nrows() != weights.len() {
        return Err(Error::ShapeMismatch {
            expected: (weights.len(), points.ncols()),
            found: points.dim(),
        });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let mean = weighted_mean(points, weights, total);
    if p == 2.0 {
        return Ok(mean);
    }
    let y = if p == 1.0 {
        weiszfeld(points, weights, mean, inner)
    } else {
        gradient_descent(points, weights, p, mean, inner)
    };
    let f_y = support_objective(points, weights, y.view(), p);
    let nearest = points
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, x)| (i, sq_dist(x, y.view())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .expect("at least one point");
    let candidate = points.row(nearest);
    if support_objective(points, weights, candidate, p) < f_y {
        Ok(candidate.to_owned())
    } else {
        Ok(y)
    }
}

fn weiszfeld(points: ArrayView2<'_, f64>, weights: &[f64], start: Array1<f64>, inner: InnerOptions) -> Array1<f64> {
    let mut y = start;
    let mut f = support_objective(points, weights, y.view(), 1.0);
    for _ in 0..inner.max_iters {
        let mut num = Array1::<f64>::zeros(y.len());
        let mut den = 0.0;
        let mut hit = false;
        for (x, &w) in points.rows().into_iter().zip(weights) {
            if w <= 0.0 {
                continue;
            }
            let dist = sq_dist(x, y.view()).sqrt();
            if dist <= 1e-14 * (1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                hit = true;
                continue;
            }
            num.scaled_add(w / dist, &x);
            den += w / dist;
        }
        if den == 0.0 {
            break;
        }
        let next = num / den;
        let f_next = support_objective(points, weights, next.view(), 1.0);
        if f_next > f {
            // Only possible when the iterate sits on a data point; that point is the answer.
            if hit {
                break;
            }
        }
        let step = sq_dist(next.view(), y.view()).sqrt();
        let done = step <= inner.tol * (1.0 + next.iter().map(|v| v.abs()).fold(0.0, f64::max))
            || (f - f_next).abs() <= inner.tol * f.max(f64::MIN_POSITIVE);
        if f_next <= f {
            y = next;
            f = f_next;
        }
        if done {
            break;
        }
    }
    y
}

fn gradient_descent(points: ArrayView2<'_, f64>, weights: &[f64], p: f64, start: Array1<f64>, inner: InnerOptions) -> Array1<f64> {
    let mut y = start;
    let mut f = support_objective(points, weights, y.view(), p);
    let mut step = 1.0;
    for _ in 0..inner.max_iters {
        let mut grad = Array1::<f64>::zeros(y.len());
        for (x, &w) in points.rows().into_iter().zip(weights) {
            let sq = sq_dist(x, y.view());
            if sq == 0.0 {
                continue;
            }
            let diff = &y - &x;
            grad.scaled_add(w * p * sq.powf(p / 2.0 - 1.0), &diff);
        }
        let g2 = grad.dot(&grad);
        if g2 == 0.0 {
            break;
        }
        step *= 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &y - &(&grad * step);
            let f_trial = support_objective(points, weights, trial.view(), p);
            if f_trial <= f - 0.5 * step * g2 {
                accepted = Some((trial, f_trial));
                break;
            }
            step *= 0.5;
        }
        let Some((next, f_next)) = accepted else { break };
        let decrease = f - f_next;
        y = next;
        f = f_next;
        if decrease <= inner.tol * f.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    y
}

/// Barycenter rebuilt from a solution, with a flag per atom whose column is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub nu: DiscreteDistribution,
    pub degenerate: Vec<bool>,
}

/// Gathers column `j` of every plan as a weighted point set.
fn column_points(sol: &Solution, mus: &[DiscreteDistribution], j: usize) -> (Array2<f64>, Vec<f64>) {
    let d = mus[0].dim();
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (plan, mu) in sol.plans.iter().zip(mus) {
        for (t, &w) in plan.column(j).iter().enumerate() {
            if w > 0.0 {
                coords.extend(mu.atom(t).iter());
                weights.push(w);
            }
        }
    }
    let n = weights.len();
    (Array2::from_shape_vec((n, d), coords).expect("consistent shape"), weights)
}

fn ensure_valid(sol: &Solution, mus: &[DiscreteDistribution]) -> Result<()> {
    if mus.is_empty() {
        return Err(Error::Empty("no distributions given"));
    }
    crate::distribution::common_dim(mus)?;
    let check = validate_solution(sol, mus);
    if check.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidSolution(check.violations))
    }
}

fn reconstruct_atoms(sol: &Solution, mus: &[DiscreteDistribution], p: f64, inner: InnerOptions) -> Result<(Array2<f64>, Vec<bool>)> {
    let d = mus[0].dim();
    let n = sol.support_size();
    let columns: Vec<Result<Option<Array1<f64>>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (pts, w) = column_points(sol, mus, j);
            if w.iter().sum::<f64>() <= 0.0 {
                Ok(None)
            } else {
                update_support_atom(pts.view(), &w, p, inner).map(Some)
            }
        })
        .collect();
    let mut atoms = Array2::zeros((n, d));
    let mut degenerate = vec![false; n];
    for (j, col) in columns.into_iter().enumerate() {
        match col? {
            Some(a) => atoms.row_mut(j).assign(&a),
            None => degenerate[j] = true,
        }
    }
    Ok((atoms, degenerate))
}

/// Rebuilds the barycenter atom by atom from the solution's columns; each
/// atom keeps weight `b_j`. Empty columns give a zero-weight atom at the origin.
pub fn reconstruct_barycenter(sol: &Solution, mus: &[DiscreteDistribution], p: f64) -> Result<Reconstruction> {
    reconstruct_with(sol, mus, p, InnerOptions::default())
}

pub fn reconstruct_with(sol: &Solution, mus: &[DiscreteDistribution], p: f64, inner: InnerOptions) -> Result<Reconstruction> {
    check_exponent(p)?;
    ensure_valid(sol, mus)?;
    let (atoms, degenerate) = reconstruct_atoms(sol, mus, p, inner)?;
    let weights = Array1::from(sol.barycenter_weights.iter().map(|b| b.max(0.0)).collect::<Vec<_>>());
    let total = weights.sum();
    Ok(Reconstruction {
        nu: DiscreteDistribution::from_parts_unchecked(atoms, weights / total),
        degenerate,
    })
}

/// `(1/k) sum_j sum_{x in S_j} w_j(x) ||x - a_j||^p` per atom, for fixed atoms `a_j`.
fn per_atom_costs(sol: &Solution, mus: &[DiscreteDistribution], atoms: ArrayView2<'_, f64>, p: f64) -> Vec<f64> {
    let k = mus.len() as f64;
    let mut costs = vec![0.0; sol.support_size()];
    for (plan, mu) in sol.plans.iter().zip(mus) {
        for ((t, j), &w) in plan.indexed_iter() {
            if w > 0.0 {
                costs[j] += w * dist_pow(mu.atom(t), atoms.row(j), p);
            }
        }
    }
    costs.iter().map(|c| c / k).collect()
}

/// Cost of a solution: the barycenter objective after moving every atom
/// to the optimum of its column.
pub fn solution_cost(sol: &Solution, mus: &[DiscreteDistribution], p: f64) -> Result<CostReport> {
    solution_cost_with(sol, mus, p, InnerOptions::default())
}

pub fn solution_cost_with(sol: &Solution, mus: &[DiscreteDistribution], p: f64, inner: InnerOptions) -> Result<CostReport> {
    let rec = reconstruct_with(sol, mus, p, inner)?;
    Ok(CostReport::from_atom_costs(per_atom_costs(sol, mus, rec.nu.atoms(), p), 0, true))
}

/// The `p = 2` cost written through pairwise distances inside each `S_j`:
/// `(1/k) sum_j 1/(2 k b_j) sum_{x,y in S_j} w_j(x) w_j(y) ||x - y||^2`.
///
/// `k b_j` is taken as the measured column mass of the solution.
pub fn pairwise_cost_p2(sol: &Solution, mus: &[DiscreteDistribution]) -> Result<f64> {
    ensure_valid(sol, mus)?;
    let k = mus.len() as f64;
    let mut total = 0.0;
    for j in 0..sol.support_size() {
        let (pts, w) = column_points(sol, mus, j);
        let mass: f64 = w.iter().sum();
        if sol.barycenter_weights[j] <= 0.0 || mass <= 0.0 {
            return Err(Error::ZeroAtomWeight(j));
        }
        let mut pair = 0.0;
        for a in 0..w.len() {
            for b in 0..w.len() {
                pair += w[a] * w[b] * sq_dist(pts.row(a), pts.row(b));
            }
        }
        total += pair / (2.0 * mass);
    }
    Ok(total / k)
}

/// Output of [`solve_barycenter`].
#[derive(Clone, Debug)]
pub struct BarycenterResult {
    pub nu: DiscreteDistribution,
    pub solution: Solution,
    pub report: CostReport,
    /// Objective after every transport step of the winning restart.
    pub trace: Vec<f64>,
}

/// Solves the `k` transport problems from every `mu_i` to the support
/// `(atoms, b)`. Returns the plans and the objective `(1/k) sum_i W_p^p`.
fn transport_all(mus: &[DiscreteDistribution], atoms: ArrayView2<'_, f64>, b: &[f64], p: f64) -> Result<(Vec<Array2<f64>>, f64)> {
    let results: Vec<(Array2<f64>, f64)> = mus
        .par_iter()
        .map(|mu| {
            let c = pairwise_cost(mu.atoms(), atoms, p);
            let plan = solve_transport(mu.weights().as_slice().expect("contiguous"), b, c.view())?;
            Ok((plan.flow, plan.cost))
        })
        .collect::<Result<_>>()?;
    let k = mus.len() as f64;
    let objective = results.iter().map(|(_, c)| c).sum::<f64>() / k;
    Ok((results.into_iter().map(|(f, _)| f).collect(), objective))
}

fn initial_support(mus: &[DiscreteDistribution], n: usize, init: Init, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let pool = pooled_atoms(mus)?;
    let total = pool.len();
    let positive: Vec<usize> = (0..total).filter(|&i| pool.weights[i] > 0.0).collect();
    let pick = |i: usize| positive[i];
    let chosen: Vec<usize> = match init {
        Init::WeightedSample => {
            let take = n.min(positive.len());
            let idx = sample_weighted(rng, positive.len(), |i| pool.weights[pick(i)], take)
                .map_err(|e| Error::BadParams(e.to_string()))?;
            let mut v: Vec<usize> = idx.into_iter().map(pick).collect();
            v.sort_unstable();
            v
        }
        Init::FarthestPoint => {
            let first = sample_weighted(rng, positive.len(), |i| pool.weights[pick(i)], 1)
                .map_err(|e| Error::BadParams(e.to_string()))?
                .index(0);
            let mut v = vec![pick(first)];
            let mut nearest: Vec<f64> = positive
                .iter()
                .map(|&i| sq_dist(pool.points.row(i), pool.points.row(v[0])))
                .collect();
            while v.len() < n.min(positive.len()) {
                let (far, _) = nearest
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                    .expect("nonempty");
                let idx = pick(far);
                v.push(idx);
                for (slot, &i) in nearest.iter_mut().zip(&positive) {
                    *slot = slot.min(sq_dist(pool.points.row(i), pool.points.row(idx)));
                }
            }
            v
        }
    };
    // More atoms than distinct pooled points: cycle through duplicates.
    let d = pool.points.ncols();
    let mut atoms = Array2::zeros((n, d));
    for j in 0..n {
        atoms.row_mut(j).assign(&pool.points.row(chosen[j % chosen.len()]));
    }
    Ok(atoms)
}

/// Voronoi masses: for every pooled atom, its weight goes to the nearest support point.
fn voronoi_weights(mus: &[DiscreteDistribution], atoms: ArrayView2<'_, f64>) -> Vec<f64> {
    let k = mus.len() as f64;
    let mut mass = vec![0.0; atoms.nrows()];
    for mu in mus {
        for (x, &w) in mu.atoms().rows().into_iter().zip(mu.weights()) {
            let j = atoms
                .rows()
                .into_iter()
                .enumerate()
                .map(|(j, a)| (j, sq_dist(x, a)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(j, _)| j)
                .expect("support is nonempty");
            mass[j] += w;
        }
    }
    mass.iter().map(|m| m / k).collect()
}

/// Pooled atom with the largest single transport cost under the given plans.
fn costliest_pooled_atom(mus: &[DiscreteDistribution], plans: &[Array2<f64>], atoms: ArrayView2<'_, f64>, p: f64) -> Array1<f64> {
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (i, (plan, mu)) in plans.iter().zip(mus).enumerate() {
        for ((t, j), &w) in plan.indexed_iter() {
            if w > 0.0 {
                let c = w * dist_pow(mu.atom(t), atoms.row(j), p);
                if c > best.0 {
                    best = (c, i, t);
                }
            }
        }
    }
    mus[best.1].atom(best.2).to_owned()
}

struct RunOutcome {
    b: Vec<f64>,
    plans: Vec<Array2<f64>>,
    trace: Vec<f64>,
    converged: bool,
}

fn run_once(mus: &[DiscreteDistribution], opts: &SolverOptions, seed: u64) -> Result<RunOutcome> {
    let n = opts.support_size;
    let p = opts.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = initial_support(mus, n, opts.init, &mut rng)?;
    let mut b = vec![1.0 / n as f64; n];
    let (mut plans, mut objective) = transport_all(mus, atoms.view(), &b, p)?;
    let mut trace = vec![objective];
    let mut converged = false;

    for _ in 0..opts.max_outer_iters {
        // Atom update with plans fixed; an atom only moves if its own term drops.
        let sol = Solution::new(plans.clone(), b.clone());
        let updates: Vec<Result<Option<Array1<f64>>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let (pts, w) = column_points(&sol, mus, j);
                if w.iter().sum::<f64>() <= 0.0 {
                    return Ok(None);
                }
                let proposal = update_support_atom(pts.view(), &w, p, opts.inner)?;
                let old = support_objective(pts.view(), &w, atoms.row(j), p);
                let new = support_objective(pts.view(), &w, proposal.view(), p);
                Ok((new < old).then_some(proposal))
            })
            .collect();
        let mut new_atoms = atoms.clone();
        for (j, u) in updates.into_iter().enumerate() {
            if let Some(a) = u? {
                new_atoms.row_mut(j).assign(&a);
            }
        }

        let (mut next_plans, mut next_objective) = transport_all(mus, new_atoms.view(), &b, p)?;
        let mut next_b = b.clone();
        if opts.weights == WeightMode::Reestimate {
            let mut proposal = voronoi_weights(mus, new_atoms.view());
            let mut reseeded = new_atoms.clone();
            for j in 0..n {
                if proposal[j] <= 0.0 {
                    let target = costliest_pooled_atom(mus, &next_plans, new_atoms.view(), p);
                    reseeded.row_mut(j).assign(&target);
                    proposal[j] = 0.0;
                }
            }
            let s: f64 = proposal.iter().sum();
            proposal.iter_mut().for_each(|x| *x /= s);
            let (alt_plans, alt_objective) = transport_all(mus, reseeded.view(), &proposal, p)?;
            if alt_objective < next_objective {
                next_plans = alt_plans;
                next_objective = alt_objective;
                next_b = proposal;
                new_atoms = reseeded;
            }
        }

        if opts.weights == WeightMode::Uniform {
            assert!(
                next_objective <= objective + 1e-9 * (1.0 + objective),
                "alternation increased the objective: {objective} -> {next_objective}"
            );
        }
        if next_objective > objective {
            converged = true;
            break;
        }
        let decrease = objective - next_objective;
        atoms = new_atoms;
        b = next_b;
        plans = next_plans;
        objective = next_objective;
        trace.push(objective);
        if decrease <= opts.rel_tol * objective.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(RunOutcome {
        b,
        plans,
        trace,
        converged,
    })
}

/// Alternating-minimization barycenter with `opts.support_size` atoms.
///
/// Runs `opts.restarts` independent initializations (seeded from
/// `opts.seed`) and keeps the lowest objective. The returned barycenter is
/// rebuilt from the winning plans, and `report` holds the cost of that
/// solution.
pub fn solve_barycenter(mus: &[DiscreteDistribution], opts: &SolverOptions) -> Result<BarycenterResult> {
    opts.validate()?;
    if mus.is_empty() {
        return Err(Error::Empty("no distributions given"));
    }
    crate::distribution::common_dim(mus)?;
    let mut best: Option<RunOutcome> = None;
    for r in 0..opts.restarts {
        let seed = if r == 0 { opts.seed } else { mix_seed(&[opts.seed, r as u64]) };
        let run = run_once(mus, opts, seed)?;
        let better = match &best {
            None => true,
            Some(b) => run.trace.last() < b.trace.last(),
        };
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    let solution = Solution::new(run.plans, run.b);
    let rec = reconstruct_with(&solution, mus, opts.p, opts.inner)?;
    let costs = per_atom_costs(&solution, mus, rec.nu.atoms(), opts.p);
    let report = CostReport::from_atom_costs(costs, run.trace.len() - 1, run.converged);
    debug_assert!(report.total_cost <= run.trace.last().copied().unwrap_or(f64::INFINITY) + 1e-9 * (1.0 + report.total_cost));
    Ok(BarycenterResult {
        nu: rec.nu,
        solution,
        report,
        trace: run.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(points: &[f64], weights: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(points.iter().map(|&x| vec![x]).collect(), weights.to_vec()).unwrap()
    }

    #[test]
    fn weighted_mean_for_p2() {
        let pts = array![[0.0], [1.0]];
        let y = update_support_atom(pts.view(), &[0.25, 0.75], 2.0, InnerOptions::default()).unwrap();
        assert!((y[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn median_for_p1() {
        let pts = array![[0.0], [1.0], [10.0]];
        let w = [1.0, 1.0, 1.0];
        let y = update_support_atom(pts.view(), &w, 1.0, InnerOptions::default()).unwrap();
        let f = support_objective(pts.view(), &w, y.view(), 1.0);
        assert!((f - 10.0).abs() < 1e-8, "objective {f} at {y}");
    }

    #[test]
    fn geometric_median_in_the_plane() {
        // Equilateral triangle: the Fermat point is the centroid.
        let h = 3f64.sqrt() / 2.0;
        let pts = array![[0.0, 0.0], [1.0, 0.0], [0.5, h]];
        let y = update_support_atom(pts.view(), &[1.0; 3], 1.0, InnerOptions::default()).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-6 && (y[1] - h / 3.0).abs() < 1e-6);
    }

    #[test]
    fn general_exponent_beats_mean_and_points() {
        let pts = array![[0.0], [1.0], [5.0]];
        let w = [1.0, 2.0, 1.0];
        let y = update_support_atom(pts.view(), &w, 1.5, InnerOptions::default()).unwrap();
        let f = support_objective(pts.view(), &w, y.view(), 1.5);
        for probe in [-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 5.0] {
            let q = array![probe];
            assert!(f <= support_objective(pts.view(), &w, q.view(), 1.5) + 1e-9);
        }
    }

    #[test]
    fn zero_total_weight_rejected() {
        let pts = array![[0.0]];
        assert!(matches!(
            update_support_atom(pts.view(), &[0.0], 2.0, InnerOptions::default()),
            Err(Error::ZeroWeight)
        ));
    }

    #[test]
    fn two_diracs_meet_in_the_middle() {
        let mus = [line(&[0.0], &[1.0]), line(&[2.0], &[1.0])];
        let res = solve_barycenter(&mus, &SolverOptions::new(1, 2.0)).unwrap();
        assert!((res.nu.atom(0)[0] - 1.0).abs() < 1e-12);
        assert!((res.report.total_cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p1_two_diracs() {
        let mus = [line(&[0.0], &[1.0]), line(&[3.0], &[1.0])];
        let res = solve_barycenter(&mus, &SolverOptions::new(1, 1.0)).unwrap();
        assert!((res.report.total_cost - 1.5).abs() < 1e-9);
    }

    #[test]
    fn reconstruction_and_cost_of_a_given_solution() {
        let mus = [line(&[0.0], &[1.0]), line(&[2.0], &[1.0])];
        let sol = Solution::new(vec![array![[1.0]], array![[1.0]]], vec![1.0]);
        let rec = reconstruct_barycenter(&sol, &mus, 2.0).unwrap();
        assert_eq!(rec.nu.atom(0)[0], 1.0);
        assert!(!rec.degenerate[0]);
        let cost = solution_cost(&sol, &mus, 2.0).unwrap();
        assert!((cost.total_cost - 1.0).abs() < 1e-12);
        assert!((pairwise_cost_p2(&sol, &mus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_solution_rejected() {
        let mus = [line(&[0.0], &[1.0])];
        let sol = Solution::new(vec![array![[0.5]]], vec![1.0]);
        assert!(matches!(solution_cost(&sol, &mus, 2.0), Err(Error::InvalidSolution(_))));
    }

    #[test]
    fn trace_is_monotone_and_solution_valid() {
        let mus: Vec<_> = (0..4)
            .map(|i| line(&[i as f64, 5.0 + i as f64, 11.0 - i as f64], &[0.2, 0.5, 0.3]))
            .collect();
        for init in [Init::WeightedSample, Init::FarthestPoint] {
            let mut opts = SolverOptions::new(3, 2.0).with_restarts(2);
            opts.init = init;
            let res = solve_barycenter(&mus, &opts).unwrap();
            assert!(validate_solution(&res.solution, &mus).is_valid());
            for w in res.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
            assert!(res.report.total_cost <= res.trace.last().unwrap() + 1e-9);
        }
    }

    #[test]
    fn more_atoms_than_points_still_valid() {
        let mus = [line(&[0.0], &[1.0])];
        let res = solve_barycenter(&mus, &SolverOptions::new(3, 2.0)).unwrap();
        assert!(validate_solution(&res.solution, &mus).is_valid());
        assert!(res.report.total_cost.abs() < 1e-12);
    }

    #[test]
    fn reestimated_weights_do_not_hurt() {
        let mus: Vec<_> = (0..3)
            .map(|i| line(&[0.0 + i as f64 * 0.1, 0.2, 9.0, 9.5], &[0.1, 0.1, 0.4, 0.4]))
            .collect();
        let uni = solve_barycenter(&mus, &SolverOptions::new(2, 2.0)).unwrap();
        let mut opts = SolverOptions::new(2, 2.0);
        opts.weights = WeightMode::Reestimate;
        let re = solve_barycenter(&mus, &opts).unwrap();
        assert!(validate_solution(&re.solution, &mus).is_valid());
        assert!(re.report.total_cost <= uni.report.total_cost + 1e-9);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mus: Vec<_> = (0..3).map(|i| line(&[i as f64, 4.0, 7.0 + i as f64], &[0.3, 0.3, 0.4])).collect();
        let opts = SolverOptions::new(2, 2.0).with_seed(42);
        let a = solve_barycenter(&mus, &opts).unwrap();
        let b = solve_barycenter(&mus, &opts).unwrap();
        assert_eq!(a.report.total_cost, b.report.total_cost);
        assert_eq!(a.solution, b.solution);
    }
}
