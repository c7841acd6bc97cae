//! Random linear maps to lower dimension and the project, solve,
//! reconstruct pipeline built on them.

use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::barycenter::{reconstruct_with, solution_cost_with, solve_barycenter, SolverOptions};
use crate::distribution::{common_dim, sq_dist, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::seed::mix_seed;
use crate::solution::{CostReport, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Gaussian,
    Srht,
    Identity,
}

impl std::fmt::Display for MapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MapKind::Gaussian => "gaussian",
            MapKind::Srht => "srht",
            MapKind::Identity => "identity",
        })
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Identity,
    /// `m x d` matrix with N(0, 1/m) entries, generated on first use.
    Gaussian(OnceLock<Array2<f64>>),
    Srht {
        signs: Vec<f64>,
        indices: Vec<usize>,
        d_pad: usize,
        scale: f64,
    },
}

/// A seeded linear map `R^d -> R^m`.
#[derive(Clone, Debug)]
pub struct ProjectionMap {
    d: usize,
    m: usize,
    seed: u64,
    repr: Repr,
}

impl ProjectionMap {
    pub fn identity(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::BadParams("dimension must be at least 1".into()));
        }
        Ok(Self {
            d,
            m: d,
            seed: 0,
            repr: Repr::Identity,
        })
    }

    /// Dense map with i.i.d. `N(0, 1/m)` entries.
    pub fn gaussian(d: usize, m: usize, seed: u64) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::BadParams("dimensions must be at least 1".into()));
        }
        Ok(Self {
            d,
            m,
            seed,
            repr: Repr::Gaussian(OnceLock::new()),
        })
    }

    /// Random signs, normalized Walsh-Hadamard transform on the input
    /// zero-padded to a power of two, then `m` distinct coordinates kept
    /// and scaled by `sqrt(d_pad / m)`.
    pub fn srht(d: usize, m: usize, seed: u64) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::BadParams("dimensions must be at least 1".into()));
        }
        let d_pad = d.next_power_of_two();
        if m > d_pad {
            return Err(Error::BadParams(format!(
                "SRHT output dimension {m} exceeds padded input dimension {d_pad}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signs = (0..d_pad)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut indices = sample(&mut rng, d_pad, m).into_vec();
        indices.sort_unstable();
        Ok(Self {
            d,
            m,
            seed,
            repr: Repr::Srht {
                signs,
                indices,
                d_pad,
                scale: (d_pad as f64 / m as f64).sqrt(),
            },
        })
    }

    pub fn new(kind: MapKind, d: usize, m: usize, seed: u64) -> Result<Self> {
        match kind {
            MapKind::Gaussian => Self::gaussian(d, m, seed),
            MapKind::Srht => Self::srht(d, m, seed),
            MapKind::Identity if m == d => Self::identity(d),
            MapKind::Identity => Err(Error::BadParams(format!("identity map needs m = d, got m = {m}, d = {d}"))),
        }
    }

    pub fn kind(&self) -> MapKind {
        match self.repr {
            Repr::Identity => MapKind::Identity,
            Repr::Gaussian(_) => MapKind::Gaussian,
            Repr::Srht { .. } => MapKind::Srht,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn output_dim(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The Gaussian matrix, generated row by row from the seed on first call.
    pub fn gaussian_matrix(&self) -> Option<&Array2<f64>> {
        match &self.repr {
            Repr::Gaussian(cell) => Some(cell.get_or_init(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let sd = 1.0 / (self.m as f64).sqrt();
                Array2::from_shape_simple_fn((self.m, self.d), || sd * rng.sample::<f64, _>(StandardNormal))
            })),
            _ => None,
        }
    }

    /// Sampled SRHT coordinates, sorted.
    pub fn srht_indices(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::Srht { indices, .. } => Some(indices),
            _ => None,
        }
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        match &self.repr {
            Repr::Identity => x.to_owned(),
            Repr::Gaussian(_) => self.gaussian_matrix().expect("gaussian").dot(&x),
            Repr::Srht {
                signs,
                indices,
                d_pad,
                scale,
            } => {
                let mut buf = vec![0.0; *d_pad];
                for (i, v) in x.iter().enumerate() {
                    buf[i] = v * signs[i];
                }
                fwht_normalized(&mut buf);
                indices.iter().map(|&i| scale * buf[i]).collect()
            }
        }
    }

    /// Maps every row of `points`.
    pub fn apply_rows(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if points.ncols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: points.ncols(),
            });
        }
        Ok(match &self.repr {
            Repr::Identity => points.to_owned(),
            Repr::Gaussian(_) => points.dot(&self.gaussian_matrix().expect("gaussian").t()),
            Repr::Srht { .. } => {
                let rows: Vec<Array1<f64>> = (0..points.nrows())
                    .into_par_iter()
                    .map(|r| self.apply_unchecked(points.row(r)))
                    .collect();
                let mut out = Array2::zeros((points.nrows(), self.m));
                for (mut dst, src) in out.axis_iter_mut(Axis(0)).zip(rows) {
                    dst.assign(&src);
                }
                out
            }
        })
    }
}

/// In-place Walsh-Hadamard transform scaled by `1/sqrt(len)`, so it is orthogonal.
///
/// # Panics
/// If `buf.len()` is not a power of two.
pub fn fwht_normalized(buf: &mut [f64]) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in buf.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
}

/// Which target-dimension formula to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionPolicy {
    /// `ln(nk/delta) / eps^2`, for `p = 2`.
    P2,
    /// `p^2 ln(nk/delta) / eps^2`, via a Lipschitz extension argument.
    Kirszbraun,
    /// `p^4 ln(n/(eps delta)) / eps^2`, independent of `k`.
    Optimal,
}

impl std::str::FromStr for DimensionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p2" => Ok(Self::P2),
            "kirszbraun" => Ok(Self::Kirszbraun),
            "optimal" => Ok(Self::Optimal),
            other => Err(Error::BadParams(format!("unknown dimension policy '{other}'"))),
        }
    }
}

/// Target dimension `ceil(c_jl * f)` for the chosen policy.
pub fn jl_dimension(n: usize, eps: f64, delta: f64, p: f64, policy: DimensionPolicy, k: Option<usize>, c_jl: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadParams(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadParams(format!("delta must lie in (0, 1), got {delta}")));
    }
    if n < 2 {
        return Err(Error::BadParams("support size must be at least 2".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    if !(c_jl > 0.0 && c_jl.is_finite()) {
        return Err(Error::BadParams(format!("constant must be positive, got {c_jl}")));
    }
    let n = n as f64;
    let with_k = || {
        k.filter(|&k| k >= 1)
            .map(|k| (n * k as f64 / delta).ln())
            .ok_or_else(|| Error::BadParams("this policy needs the number of distributions".into()))
    };
    let f = match policy {
        DimensionPolicy::P2 => with_k()? / (eps * eps),
        DimensionPolicy::Kirszbraun => p * p * with_k()? / (eps * eps),
        DimensionPolicy::Optimal => p.powi(4) * (n / (eps * delta)).ln() / (eps * eps),
    };
    Ok((c_jl * f).ceil() as usize)
}

/// Maps the atoms of every distribution; weights are untouched.
pub fn project_instance(mus: &[DiscreteDistribution], map: &ProjectionMap) -> Result<Vec<DiscreteDistribution>> {
    mus.par_iter()
        .map(|mu| {
            let atoms = map.apply_rows(mu.atoms())?;
            Ok(DiscreteDistribution::from_parts_unchecked(atoms, mu.weights().clone()))
        })
        .collect()
}

/// Smallest and largest ratio `||pi x - pi y|| / ||x - y||` over distinct row pairs.
pub fn pairwise_distortion(points: ArrayView2<'_, f64>, map: &ProjectionMap) -> Result<(f64, f64)> {
    let img = map.apply_rows(points)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for a in 0..points.nrows() {
        for b in a + 1..points.nrows() {
            let orig = sq_dist(points.row(a), points.row(b));
            if orig == 0.0 {
                continue;
            }
            let r = (sq_dist(img.row(a), img.row(b)) / orig).sqrt();
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok((lo, hi))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub projection_secs: f64,
    pub solve_secs: f64,
    pub reconstruction_secs: f64,
}

#[derive(Clone, Debug)]
pub struct ReduceOutcome {
    /// Barycenter rebuilt in the original dimension from the low-dimensional plans.
    pub nu_high: DiscreteDistribution,
    pub nu_low: DiscreteDistribution,
    pub solution: Solution,
    /// Cost of the solution evaluated on the projected atoms.
    pub cost_low: CostReport,
    /// Cost of the same solution evaluated on the original atoms.
    pub cost_high: CostReport,
    pub timings: Timings,
}

/// Projects, solves in the low dimension, then reuses the plans to rebuild
/// the barycenter and evaluate its cost in the original dimension.
pub fn reduce_solve_reconstruct(mus: &[DiscreteDistribution], map: &ProjectionMap, opts: &SolverOptions) -> Result<ReduceOutcome> {
    let d = common_dim(mus)?;
    if d != map.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.input_dim(),
            found: d,
        });
    }
    let t0 = Instant::now();
    let low = project_instance(mus, map)?;
    let t1 = Instant::now();
    let solved = solve_barycenter(&low, opts)?;
    let t2 = Instant::now();
    let rec = reconstruct_with(&solved.solution, mus, opts.p, opts.inner)?;
    let mut cost_high = solution_cost_with(&solved.solution, mus, opts.p, opts.inner)?;
    cost_high.iterations = solved.report.iterations;
    cost_high.converged = solved.report.converged;
    let t3 = Instant::now();
    Ok(ReduceOutcome {
        nu_high: rec.nu,
        nu_low: solved.nu,
        solution: solved.solution,
        cost_low: solved.report,
        cost_high,
        timings: Timings {
            projection_secs: (t1 - t0).as_secs_f64(),
            solve_secs: (t2 - t1).as_secs_f64(),
            reconstruction_secs: (t3 - t2).as_secs_f64(),
        },
    })
}

/// One row of a cost-ratio sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub ratios: Vec<f64>,
    /// Mean seconds for project + solve + reconstruct.
    pub low_secs: f64,
    /// Mean seconds for the reference solve in the original dimension.
    pub high_secs: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub trials: usize,
    pub seed: u64,
    pub kind: MapKind,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

/// Solver seed for trial `trial`; the full-dimension reference and all
/// reduced runs of that trial share it.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    mix_seed(&[seed, trial as u64])
}

/// Map seed for cell `(m, trial)`.
pub fn cell_seed(seed: u64, m: usize, trial: usize) -> u64 {
    mix_seed(&[seed, m as u64, trial as u64])
}

/// For every `m` and trial: draw a fresh map, run the reduced pipeline and
/// divide its original-dimension cost by that of the solver run directly
/// in the original dimension.
pub fn cost_ratio_sweep(mus: &[DiscreteDistribution], opts: &SolverOptions, m_values: &[usize], cfg: SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.trials == 0 {
        return Err(Error::BadParams("trials must be at least 1".into()));
    }
    let d = common_dim(mus)?;
    let run = || -> Result<Vec<SweepRow>> {
        let full: Vec<(f64, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let start = Instant::now();
                let o = opts.clone().with_seed(trial_seed(cfg.seed, t));
                let res = solve_barycenter(mus, &o)?;
                Ok((res.report.total_cost, start.elapsed().as_secs_f64()))
            })
            .collect::<Result<_>>()?;
        let cells: Vec<(usize, usize)> = m_values
            .iter()
            .flat_map(|&m| (0..cfg.trials).map(move |t| (m, t)))
            .collect();
        let outcomes: Vec<(f64, f64)> = cells
            .par_iter()
            .map(|&(m, t)| {
                let map = ProjectionMap::new(cfg.kind, d, m, cell_seed(cfg.seed, m, t))?;
                let o = opts.clone().with_seed(trial_seed(cfg.seed, t));
                let out = reduce_solve_reconstruct(mus, &map, &o)?;
                let secs = out.timings.projection_secs + out.timings.solve_secs + out.timings.reconstruction_secs;
                let reference = full[t].0;
                let ratio = if reference > 0.0 {
                    out.cost_high.total_cost / reference
                } else if out.cost_high.total_cost == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                };
                Ok((ratio, secs))
            })
            .collect::<Result<_>>()?;
        let high_secs = full.iter().map(|f| f.1).sum::<f64>() / cfg.trials as f64;
        Ok(m_values
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let chunk = &outcomes[i * cfg.trials..(i + 1) * cfg.trials];
                let ratios: Vec<f64> = chunk.iter().map(|c| c.0).collect();
                let (mean, std) = mean_std(&ratios);
                SweepRow {
                    m,
                    mean_ratio: mean,
                    std_ratio: std,
                    ratios,
                    low_secs: chunk.iter().map(|c| c.1).sum::<f64>() / cfg.trials as f64,
                    high_secs,
                }
            })
            .collect())
    };
    match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::BadParams(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn jl_dimension_optimal_example() {
        assert_eq!(jl_dimension(16, 0.5, 0.1, 2.0, DimensionPolicy::Optimal, None, 1.0).unwrap(), 370);
    }

    #[test]
    fn jl_dimension_scaling_and_errors() {
        let a = jl_dimension(10, 0.4, 0.1, 2.0, DimensionPolicy::P2, Some(5), 1.0).unwrap();
        let b = jl_dimension(10, 0.2, 0.1, 2.0, DimensionPolicy::P2, Some(5), 1.0).unwrap();
        let exact = (50f64 / 0.1).ln() / 0.16;
        assert_eq!(a, exact.ceil() as usize);
        assert_eq!(b, (4.0 * exact).ceil() as usize);
        assert!(jl_dimension(10, 0.4, 0.1, 2.0, DimensionPolicy::Kirszbraun, None, 1.0).is_err());
        assert!(jl_dimension(10, 1.0, 0.1, 2.0, DimensionPolicy::Optimal, None, 1.0).is_err());
        assert!(jl_dimension(1, 0.5, 0.1, 2.0, DimensionPolicy::Optimal, None, 1.0).is_err());
        let opt = jl_dimension(8, 0.3, 0.1, 1.0, DimensionPolicy::Optimal, None, 1.0).unwrap();
        let kir = jl_dimension(8, 0.3, 0.1, 1.0, DimensionPolicy::Kirszbraun, Some(8), 1.0).unwrap();
        assert!(opt <= kir);
    }

    #[test]
    fn hadamard_of_first_basis_vector() {
        let mut v = vec![1.0, 0.0];
        fwht_normalized(&mut v);
        let s = 1.0 / 2f64.sqrt();
        assert!((v[0] - s).abs() < 1e-15 && (v[1] - s).abs() < 1e-15);
    }

    #[test]
    fn hadamard_is_orthogonal_and_involutive() {
        let x: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let mut y = x.clone();
        fwht_normalized(&mut y);
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let ny: f64 = y.iter().map(|v| v * v).sum();
        assert!((nx - ny).abs() < 1e-9);
        fwht_normalized(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn maps_are_deterministic_and_linear() {
        for kind in [MapKind::Gaussian, MapKind::Srht] {
            let a = ProjectionMap::new(kind, 5, 4, 9).unwrap();
            let b = ProjectionMap::new(kind, 5, 4, 9).unwrap();
            let x = array![1.0, -2.0, 0.5, 3.0, 0.0];
            let y = array![0.0, 1.0, 1.0, -1.0, 2.0];
            assert_eq!(a.apply(x.view()).unwrap(), b.apply(x.view()).unwrap());
            let lhs = a.apply((&x * 2.0 - &y * 3.0).view()).unwrap();
            let rhs = a.apply(x.view()).unwrap() * 2.0 - a.apply(y.view()).unwrap() * 3.0;
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - r).abs() < 1e-9);
            }
            assert!(a.apply(Array1::zeros(5).view()).unwrap().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn srht_index_set_and_bounds() {
        let map = ProjectionMap::srht(5, 8, 1).unwrap();
        let idx = map.srht_indices().unwrap();
        assert_eq!(idx.len(), 8);
        assert!(idx.windows(2).all(|w| w[0] < w[1]) && idx.iter().all(|&i| i < 8));
        assert!(ProjectionMap::srht(5, 9, 1).is_err());
        assert!(ProjectionMap::new(MapKind::Identity, 3, 2, 0).is_err());
    }

    #[test]
    fn rows_agree_with_single_application() {
        for kind in [MapKind::Gaussian, MapKind::Srht] {
            let map = ProjectionMap::new(kind, 3, 2, 4).unwrap();
            let pts = array![[1.0, 2.0, 3.0], [-1.0, 0.0, 0.5]];
            let rows = map.apply_rows(pts.view()).unwrap();
            for r in 0..2 {
                let single = map.apply(pts.row(r)).unwrap();
                for (a, b) in rows.row(r).iter().zip(&single) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_pipeline_matches_direct_solve() {
        let mus: Vec<_> = (0..3)
            .map(|i| {
                DiscreteDistribution::new(
                    vec![vec![i as f64, 1.0], vec![4.0, i as f64 * 0.5], vec![-1.0, 2.0]],
                    vec![0.2, 0.3, 0.5],
                )
                .unwrap()
            })
            .collect();
        let opts = SolverOptions::new(2, 2.0).with_seed(3);
        let out = reduce_solve_reconstruct(&mus, &ProjectionMap::identity(2).unwrap(), &opts).unwrap();
        let direct = solve_barycenter(&mus, &opts).unwrap();
        assert_eq!(out.nu_high, direct.nu);
        assert!((out.cost_low.total_cost - out.cost_high.total_cost).abs() < 1e-9);
    }

    #[test]
    fn single_atom_pipeline_cost_is_projection_free() {
        let mus = [DiscreteDistribution::dirac(&[0.0]).unwrap(), DiscreteDistribution::dirac(&[2.0]).unwrap()];
        let map = ProjectionMap::gaussian(1, 3, 5).unwrap();
        let out = reduce_solve_reconstruct(&mus, &map, &SolverOptions::new(1, 2.0)).unwrap();
        assert!((out.cost_high.total_cost - 1.0).abs() < 1e-12);
        assert_eq!(out.nu_high.weights(), out.nu_low.weights());
    }
}
