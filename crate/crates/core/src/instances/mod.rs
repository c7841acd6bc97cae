//! Hard and synthetic instances, dataset loaders, and the matrix form of
//! the `p = 2` barycenter cost.

mod csvio;
mod idx;
mod lowrank;

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::distribution::{pow_from_sq, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::projection::ProjectionMap;
use crate::transport::{check_exponent, solve_transport};

pub use csvio::{load_csv_distributions, read_csv_distributions, write_csv_distributions};
pub use idx::{
    load_idx_dataset, load_idx_images, load_idx_labels, parse_idx_images, parse_idx_labels, write_idx_images, write_idx_labels, IdxImages, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use lowrank::{verify_low_rank_equivalence, LowRankCheck};

/// `2t` points in `R^t` where every distribution misses exactly one point.
#[derive(Clone, Debug)]
pub struct LowerBoundInstance {
    /// Rows `0..t` are `p_i = N e_i`, rows `t..2t` are `q_i = (N+1) e_i`,
    /// except `q_t = (N + 1 - C eps) e_t`.
    pub points: Array2<f64>,
    /// Distribution `i` is uniform over every point except row `i`.
    pub distributions: Vec<DiscreteDistribution>,
    /// `(1 - C eps)^p`, the cost of keeping every point but `q_t` as a center.
    pub expected_opt_cost: f64,
    /// Barycenter support size `2t - 1`.
    pub support_size: usize,
}

pub fn gen_lb_barycenter(t: usize, big_n: f64, c: f64, eps: f64, p: f64) -> Result<LowerBoundInstance> {
    check_exponent(p)?;
    if t < 2 {
        return Err(Error::BadParams("t must be at least 2".into()));
    }
    if !(big_n >= 2.0 && big_n.is_finite()) {
        return Err(Error::BadParams(format!("N must be at least 2, got {big_n}")));
    }
    let ce = c * eps;
    if !(ce > 0.0 && ce < 1.0) {
        return Err(Error::BadParams(format!("C * eps must lie in (0, 1), got {ce}")));
    }
    let mut points = Array2::zeros((2 * t, t));
    for i in 0..t {
        points[[i, i]] = big_n;
        points[[t + i, i]] = big_n + 1.0;
    }
    points[[2 * t - 1, t - 1]] = big_n + 1.0 - ce;
    let w = 1.0 / (2 * t - 1) as f64;
    let distributions = (0..2 * t)
        .map(|skip| {
            let rows: Vec<usize> = (0..2 * t).filter(|&r| r != skip).collect();
            DiscreteDistribution::from_arrays(points.select(ndarray::Axis(0), &rows), Array1::from_elem(2 * t - 1, w))
        })
        .collect::<Result<_>>()?;
    Ok(LowerBoundInstance {
        points,
        distributions,
        expected_opt_cost: (1.0 - ce).powf(p),
        support_size: 2 * t - 1,
    })
}

/// `sum_x weight(x) min_c ||x - c||^p` over the given center rows.
pub fn center_cost(points: ArrayView2<'_, f64>, weights: &[f64], centers: ArrayView2<'_, f64>, p: f64) -> f64 {
    points
        .rows()
        .into_iter()
        .zip(weights)
        .map(|(x, w)| {
            let best = centers
                .rows()
                .into_iter()
                .map(|c| crate::distribution::sq_dist(x, c))
                .fold(f64::INFINITY, f64::min);
            w * pow_from_sq(best, p)
        })
        .sum()
}

/// Result of solving the lower-bound instance in the projected space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedOptimum {
    /// Row that is not used as a center.
    pub dropped: usize,
    pub projected_cost: f64,
    /// Same centers evaluated in the original space.
    pub pullback_cost: f64,
}

/// Best choice of `2t - 1` of the `2t` points as centers after projection,
/// and its cost back in the original space. Every point carries pooled
/// weight one, so the cost is the `p`-th power distance from the dropped
/// point to its nearest remaining neighbor.
pub fn lb_projected_optimum(inst: &LowerBoundInstance, map: &ProjectionMap, p: f64) -> Result<ProjectedOptimum> {
    let low = map.apply_rows(inst.points.view())?;
    let n = inst.points.nrows();
    let ones = vec![1.0; n];
    let mut best: Option<ProjectedOptimum> = None;
    for drop in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&r| r != drop).collect();
        let projected_cost = center_cost(low.view(), &ones, low.select(ndarray::Axis(0), &keep).view(), p);
        if best.is_none_or(|b| projected_cost < b.projected_cost) {
            let pullback_cost = center_cost(inst.points.view(), &ones, inst.points.select(ndarray::Axis(0), &keep).view(), p);
            best = Some(ProjectedOptimum {
                dropped: drop,
                projected_cost,
                pullback_cost,
            });
        }
    }
    Ok(best.expect("at least two points"))
}

/// Two equal-size point sets to be matched.
#[derive(Clone, Debug)]
pub struct MatchingInstance {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    /// Optimal matching cost in the original space (or its order of growth).
    pub reference_cost: f64,
}

/// `{e_i} ∪ {e_i / 2}` split so that each `e_i` and its half lie in different
/// sets; `e_i` is in `A` for odd (1-based) `i`. The optimal matching pairs
/// every `e_i` with `e_i / 2` at total cost `d / 2`.
pub fn gen_ot_pair(d: usize) -> Result<MatchingInstance> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::BadParams(format!("d must be even and at least 2, got {d}")));
    }
    let mut a = Array2::zeros((d, d));
    let mut b = Array2::zeros((d, d));
    for i in 0..d {
        // Row i holds the point on axis i in both sets.
        if i % 2 == 0 {
            a[[i, i]] = 1.0;
            b[[i, i]] = 0.5;
        } else {
            a[[i, i]] = 0.5;
            b[[i, i]] = 1.0;
        }
    }
    Ok(MatchingInstance {
        a,
        b,
        reference_cost: d as f64 / 2.0,
    })
}

/// Points `e_i l / C` for `l = 1..=C` on every axis, alternating between the
/// sets along each axis. Odd (1-based) axes start in `A`, even ones in `B`,
/// so half of the unit vectors `e_i` land in `A`. The reference cost is the
/// sum over axes of matching neighbors one level apart, `d / 2`.
pub fn gen_pullback(d: usize, c: usize) -> Result<MatchingInstance> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::BadParams(format!("d must be even and at least 2, got {d}")));
    }
    if c < 2 || !c.is_multiple_of(2) {
        return Err(Error::BadParams(format!("C must be even and at least 2, got {c}")));
    }
    let half = d * c / 2;
    let mut a = Array2::zeros((half, d));
    let mut b = Array2::zeros((half, d));
    let (mut ra, mut rb) = (0, 0);
    for axis in 0..d {
        for level in 1..=c {
            let to_a = (level % 2 == 1) == (axis % 2 == 0);
            let v = level as f64 / c as f64;
            if to_a {
                a[[ra, axis]] = v;
                ra += 1;
            } else {
                b[[rb, axis]] = v;
                rb += 1;
            }
        }
    }
    Ok(MatchingInstance {
        a,
        b,
        reference_cost: d as f64 / 2.0,
    })
}

/// `k - 1` copies of `delta_0` and a single `delta_k` on the line.
pub fn gen_coreset_synthetic(k: usize) -> Result<Vec<DiscreteDistribution>> {
    if k < 2 {
        return Err(Error::BadParams("k must be at least 2".into()));
    }
    let mut out = vec![DiscreteDistribution::dirac(&[0.0])?; k - 1];
    out.push(DiscreteDistribution::dirac(&[k as f64])?);
    Ok(out)
}

/// Matching costs before and after projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchingDistortion {
    /// Optimal matching cost among the projected points.
    pub low: f64,
    /// That matching evaluated on the original points.
    pub pullback: f64,
    /// Optimal matching cost among the original points.
    pub high: f64,
}

/// Nonzero entries of each row, for distances between sparse points.
fn sparse_rows(x: ArrayView2<'_, f64>) -> Vec<Vec<(usize, f64)>> {
    x.rows()
        .into_iter()
        .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect())
        .collect()
}

fn sparse_sq_dist(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        let ia = a.get(i).map_or(usize::MAX, |e| e.0);
        let jb = b.get(j).map_or(usize::MAX, |e| e.0);
        let diff = if ia == jb {
            i += 1;
            j += 1;
            a[i - 1].1 - b[j - 1].1
        } else if ia < jb {
            i += 1;
            a[i - 1].1
        } else {
            j += 1;
            -b[j - 1].1
        };
        s += diff * diff;
    }
    s
}

/// `|A| x |B|` matrix of `||a - b||^p`, exploiting sparsity when the points have few nonzeros.
pub fn matching_cost_matrix(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, p: f64) -> Array2<f64> {
    let (sa, sb) = (sparse_rows(a), sparse_rows(b));
    let n = b.nrows();
    let flat: Vec<f64> = sa
        .par_iter()
        .flat_map_iter(|ra| sb.iter().map(move |rb| pow_from_sq(sparse_sq_dist(ra, rb), p)))
        .collect();
    Array2::from_shape_vec((a.nrows(), n), flat).expect("consistent shape")
}

/// Minimum-cost perfect matching between equal-size sets, solved as
/// transport between uniform distributions. Returns the assignment
/// `B`-index for each `A`-row and the matching cost.
pub fn optimal_matching(cost: &Array2<f64>) -> Result<(Vec<usize>, f64)> {
    let (n, n2) = cost.dim();
    if n != n2 || n == 0 {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            found: (n, n2),
        });
    }
    let w = vec![1.0 / n as f64; n];
    let plan = solve_transport(&w, &w, cost.view())?;
    let mut assignment = Vec::with_capacity(n);
    for row in plan.flow.rows() {
        let (j, v) = row
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty row");
        // Vertices of the assignment polytope are permutation matrices.
        if (v * n as f64 - 1.0).abs() > 1e-9 {
            return Err(Error::NumericalFailure(format!("transport plan is not a matching (entry {v})")));
        }
        assignment.push(j);
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum();
    Ok((assignment, total))
}

/// Projects both sets, matches them optimally in the low dimension and
/// compares with the original space. `high` may be passed in when already known.
pub fn empirical_matching_distortion(inst: &MatchingInstance, map: &ProjectionMap, p: f64, high: Option<f64>) -> Result<MatchingDistortion> {
    check_exponent(p)?;
    if inst.a.nrows() != inst.b.nrows() {
        return Err(Error::CountMismatch(inst.a.nrows(), inst.b.nrows()));
    }
    let la = map.apply_rows(inst.a.view())?;
    let lb = map.apply_rows(inst.b.view())?;
    let (assignment, low) = optimal_matching(&matching_cost_matrix(la.view(), lb.view(), p))?;
    let (sa, sb) = (sparse_rows(inst.a.view()), sparse_rows(inst.b.view()));
    let pullback = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| pow_from_sq(sparse_sq_dist(&sa[i], &sb[j]), p))
        .sum();
    let high = match high {
        Some(h) => h,
        None => optimal_matching(&matching_cost_matrix(inst.a.view(), inst.b.view(), p))?.1,
    };
    Ok(MatchingDistortion { low, pullback, high })
}

/// Handwriting-like grayscale images: every class has a few prototype
/// "styles" made of Gaussian strokes, and each image is a randomly shifted,
/// rescaled and noisy copy of one of its class's styles. Pixels are
/// multiples of `1/255`, so the images survive an IDX round trip.
pub fn gen_digit_like(classes: usize, per_class: usize, side: usize, styles: usize, seed: u64) -> Result<(IdxImages, Vec<u8>)> {
    if classes == 0 || classes > 256 || per_class == 0 || styles == 0 || side < 8 {
        return Err(Error::BadParams(format!(
            "need 1..=256 classes, positive counts and side >= 8 (got {classes}, {per_class}, {styles}, {side})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).expect("valid deviation");
    let s = side as f64;
    let prototypes: Vec<Vec<Array2<f64>>> = (0..classes)
        .map(|_| {
            (0..styles)
                .map(|_| {
                    let strokes = rng.random_range(3..=5);
                    let blobs: Vec<(f64, f64, f64)> = (0..strokes)
                        .map(|_| (rng.random_range(0.25 * s..0.75 * s), rng.random_range(0.25 * s..0.75 * s), rng.random_range(1.2..2.5)))
                        .collect();
                    Array2::from_shape_fn((side, side), |(r, c)| {
                        let v: f64 = blobs
                            .iter()
                            .map(|&(br, bc, w)| (-((r as f64 - br).powi(2) + (c as f64 - bc).powi(2)) / (2.0 * w * w)).exp())
                            .sum();
                        v.min(1.0)
                    })
                })
                .collect()
        })
        .collect();
    let dim = side * side;
    let mut points = Array2::zeros((classes * per_class, dim));
    let mut labels = Vec::with_capacity(classes * per_class);
    for (c, protos) in prototypes.iter().enumerate() {
        for i in 0..per_class {
            let proto = &protos[rng.random_range(0..styles)];
            let (dr, dc) = (rng.random_range(-2i64..=2), rng.random_range(-2i64..=2));
            let gain = rng.random_range(0.8..1.2);
            let mut row = points.row_mut(c * per_class + i);
            for r in 0..side {
                for col in 0..side {
                    let (sr, sc) = (r as i64 - dr, col as i64 - dc);
                    let base = if (0..side as i64).contains(&sr) && (0..side as i64).contains(&sc) {
                        proto[[sr as usize, sc as usize]]
                    } else {
                        0.0
                    };
                    let v: f64 = (gain * base + noise.sample(&mut rng)).clamp(0.0, 1.0);
                    row[r * side + col] = (v * 255.0).round() / 255.0;
                }
            }
            labels.push(c as u8);
        }
    }
    Ok((IdxImages { rows: side, cols: side, points }, labels))
}

/// One uniform distribution per distinct label, in increasing label order.
/// Classes larger than `subsample` are reduced to a seeded random subset.
pub fn group_by_label(points: ArrayView2<'_, f64>, labels: &[u8], subsample: Option<usize>, seed: u64) -> Result<Vec<DiscreteDistribution>> {
    if points.nrows() != labels.len() {
        return Err(Error::CountMismatch(points.nrows(), labels.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut distinct: Vec<u8> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    distinct
        .into_iter()
        .map(|label| {
            let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
            if let Some(s) = subsample {
                if s == 0 {
                    return Err(Error::BadParams("subsample size must be at least 1".into()));
                }
                if rows.len() > s {
                    let mut pick = sample(&mut rng, rows.len(), s).into_vec();
                    pick.sort_unstable();
                    rows = pick.into_iter().map(|k| rows[k]).collect();
                }
            }
            DiscreteDistribution::uniform(points.select(ndarray::Axis(0), &rows))
        })
        .collect()
}
