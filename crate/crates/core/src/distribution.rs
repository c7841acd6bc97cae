//! Weighted finite point sets in `R^d`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Absolute tolerance applied to every marginal and weight-sum check.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Weights handed to constructors may deviate from 1 by this much before
/// they are renormalized; anything further is rejected.
pub const INPUT_TOL: f64 = 1e-6;

/// A discrete probability distribution `sum_t a_t delta_{x_t}`.
///
/// Atoms are stored dense and row-major (`T x d`). Weights are nonnegative
/// and sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    atoms: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteDistribution {
    /// Validates and builds a distribution from a list of atoms and weights.
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("distribution has no atoms"));
        }
        let dim = atoms[0].len();
        for a in &atoms {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
        }
        let flat: Vec<f64> = atoms.into_iter().flatten().collect();
        let n = weights.len();
        let atoms = Array2::from_shape_vec((flat.len() / dim.max(1), dim), flat)
            .map_err(|e| Error::BadParams(e.to_string()))?;
        if atoms.nrows() != n {
            return Err(Error::BadWeights(format!(
                "{} atoms but {} weights",
                atoms.nrows(),
                n
            )));
        }
        Self::from_arrays(atoms, Array1::from(weights))
    }

    /// Same as [`DiscreteDistribution::new`] for data already laid out as a `T x d` array.
    pub fn from_arrays(atoms: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        if atoms.nrows() == 0 {
            return Err(Error::Empty("distribution has no atoms"));
        }
        if atoms.ncols() == 0 {
            return Err(Error::BadParams("atoms must have dimension >= 1".into()));
        }
        if atoms.nrows() != weights.len() {
            return Err(Error::BadWeights(format!(
                "{} atoms but {} weights",
                atoms.nrows(),
                weights.len()
            )));
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadParams("atom coordinates must be finite".into()));
        }
        let weights = normalize_weights(weights)?;
        Ok(Self { atoms, weights })
    }

    /// Uniform weights `1/T` over the given rows.
    pub fn uniform(atoms: Array2<f64>) -> Result<Self> {
        let t = atoms.nrows();
        if t == 0 {
            return Err(Error::Empty("distribution has no atoms"));
        }
        Self::from_arrays(atoms, Array1::from_elem(t, 1.0 / t as f64))
    }

    /// Unit point mass at `point`.
    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::new(vec![point.to_vec()], vec![1.0])
    }

    /// Builds without normalizing. Callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(atoms: Array2<f64>, weights: Array1<f64>) -> Self {
        debug_assert_eq!(atoms.nrows(), weights.len());
        Self { atoms, weights }
    }

    pub fn dim(&self) -> usize {
        self.atoms.ncols()
    }

    /// Number of atoms `T`.
    pub fn len(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn atoms(&self) -> ArrayView2<'_, f64> {
        self.atoms.view()
    }

    pub fn atom(&self, t: usize) -> ArrayView1<'_, f64> {
        self.atoms.row(t)
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn weight(&self, t: usize) -> f64 {
        self.weights[t]
    }

    /// Returns a copy with the atoms replaced, keeping the weights.
    pub fn with_atoms(&self, atoms: Array2<f64>) -> Result<Self> {
        if atoms.nrows() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: (self.len(), atoms.ncols()),
                found: atoms.dim(),
            });
        }
        Ok(Self {
            atoms,
            weights: self.weights.clone(),
        })
    }
}

fn normalize_weights(mut weights: Array1<f64>) -> Result<Array1<f64>> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::BadWeights(format!("weight {w} is negative or not finite")));
    }
    let total: f64 = weights.sum();
    if (total - 1.0).abs() > INPUT_TOL {
        return Err(Error::BadWeights(format!("weights sum to {total}, expected 1")));
    }
    weights /= total;
    Ok(weights)
}

/// Checks that every distribution has the dimension of the first one and returns it.
pub fn common_dim(distributions: &[DiscreteDistribution]) -> Result<usize> {
    let first = distributions
        .first()
        .ok_or(Error::Empty("no distributions given"))?;
    let d = first.dim();
    for mu in distributions {
        if mu.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: mu.dim(),
            });
        }
    }
    Ok(d)
}

/// The union of all atoms, each tagged with the distribution it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledAtoms {
    pub points: Array2<f64>,
    pub weights: Vec<f64>,
    pub origins: Vec<usize>,
}

impl PooledAtoms {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Concatenates the atoms of all distributions in order. Weights are kept
/// as-is, so the pooled total equals the number of distributions.
pub fn pooled_atoms(distributions: &[DiscreteDistribution]) -> Result<PooledAtoms> {
    let d = common_dim(distributions)?;
    let views: Vec<_> = distributions.iter().map(|m| m.atoms()).collect();
    let points = if views.is_empty() {
        Array2::zeros((0, d))
    } else {
        ndarray::concatenate(Axis(0), &views).map_err(|e| Error::BadParams(e.to_string()))?
    };
    let mut weights = Vec::with_capacity(points.nrows());
    let mut origins = Vec::with_capacity(points.nrows());
    for (i, mu) in distributions.iter().enumerate() {
        weights.extend(mu.weights().iter().copied());
        origins.extend(std::iter::repeat_n(i, mu.len()));
    }
    Ok(PooledAtoms {
        points,
        weights,
        origins,
    })
}

/// Squared Euclidean distance between two equal-length vectors.
#[inline]
pub fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `||a - b||^p` computed from the squared distance.
#[inline]
pub fn dist_pow(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, p: f64) -> f64 {
    pow_from_sq(sq_dist(a, b), p)
}

#[inline]
pub(crate) fn pow_from_sq(sq: f64, p: f64) -> f64 {
    if p == 2.0 {
        sq
    } else if p == 1.0 {
        sq.sqrt()
    } else {
        sq.powf(p / 2.0)
    }
}
