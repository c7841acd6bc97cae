//! Importance-sampling coresets over a collection of input distributions.
//!
//! Each distribution gets an upper bound `s(mu)` on how much of the
//! barycenter objective it can account for. Sampling with probability
//! proportional to `s` and weighting each draw by `1/(|M| |K| q(mu))`
//! gives an unbiased estimate of `(1/|M|) sum_mu W_p(mu, nu)^p` for every `nu`.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{common_dim, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::transport::{check_exponent, wasserstein_p};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityScores {
    /// Upper bound per distribution.
    pub s: Vec<f64>,
    /// Mean of `s`.
    pub s_bar: f64,
    /// Sampling probabilities `s / sum(s)`.
    pub q: Vec<f64>,
    pub alpha: f64,
    pub p: f64,
}

impl SensitivityScores {
    /// Scores from precomputed `W_p(mu, nu')^p` values.
    ///
    /// `s(mu) = alpha 2^{p-1} W(mu)/avg(W) + alpha 4^{p-1} + 4^{p-1}`; when
    /// every distance is zero the ratio term is taken as zero.
    pub fn from_costs(costs: &[f64], alpha: f64, p: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::BadParams(format!("approximation factor must be at least 1, got {alpha}")));
        }
        if costs.is_empty() {
            return Err(Error::Empty("no distributions given"));
        }
        if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::BadParams(format!("invalid transport cost {c}")));
        }
        let avg = costs.iter().sum::<f64>() / costs.len() as f64;
        let floor = alpha * 4f64.powf(p - 1.0) + 4f64.powf(p - 1.0);
        let lead = alpha * 2f64.powf(p - 1.0);
        let s: Vec<f64> = costs
            .iter()
            .map(|&c| if avg > 0.0 { lead * c / avg + floor } else { floor })
            .collect();
        let total: f64 = s.iter().sum();
        Ok(Self {
            s_bar: total / s.len() as f64,
            q: s.iter().map(|v| v / total).collect(),
            s,
            alpha,
            p,
        })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// `W_p(mu, nu)^p` for every input distribution, in input order.
pub fn distribution_costs(mus: &[DiscreteDistribution], nu: &DiscreteDistribution, p: f64) -> Result<Vec<f64>> {
    check_exponent(p)?;
    let d = common_dim(mus)?;
    if nu.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: nu.dim(),
        });
    }
    mus.par_iter()
        .map(|mu| Ok(wasserstein_p(mu, nu, p)?.powf(p)))
        .collect()
}

/// Sensitivity upper bounds relative to an `alpha`-approximate barycenter `nu_prime`.
pub fn sensitivity_upper_bounds(mus: &[DiscreteDistribution], nu_prime: &DiscreteDistribution, alpha: f64, p: f64) -> Result<SensitivityScores> {
    SensitivityScores::from_costs(&distribution_costs(mus, nu_prime, p)?, alpha, p)
}

/// A weighted multiset of distribution indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedCoreset {
    /// `(distribution index, weight)`; an index may appear more than once.
    pub members: Vec<(usize, f64)>,
}

impl WeightedCoreset {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// `size` i.i.d. draws from `q`, each weighted `1/(|M| size q(mu))`.
pub fn sample_coreset(q: &[f64], size: usize, seed: u64) -> Result<WeightedCoreset> {
    if size == 0 {
        return Err(Error::BadParams("coreset size must be at least 1".into()));
    }
    let alias = WeightedAliasIndex::new(q.to_vec()).map_err(|e| Error::BadWeights(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (q.len() as f64 * size as f64);
    let members = (0..size)
        .map(|_| {
            let i = alias.sample(&mut rng);
            (i, scale / q[i])
        })
        .collect();
    Ok(WeightedCoreset { members })
}

/// Sensitivity-sampled coreset of the given size.
pub fn build_coreset(scores: &SensitivityScores, size: usize, seed: u64) -> Result<WeightedCoreset> {
    sample_coreset(&scores.q, size, seed)
}

/// Uniformly sampled coreset over `count` distributions; every member has weight `1/size`.
pub fn uniform_coreset(count: usize, size: usize, seed: u64) -> Result<WeightedCoreset> {
    if count == 0 {
        return Err(Error::Empty("no distributions given"));
    }
    sample_coreset(&vec![1.0 / count as f64; count], size, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SizeBound {
    /// `c alpha 4^{p-1} n^8 d^4 ln(nd/delta) / eps^2`.
    pub theoretical: f64,
    /// `c s_bar (d' ln s_bar + ln(1/delta)) / eps^2`.
    pub practical: f64,
}

/// Coreset sizes from the worst-case bound and from the observed mean sensitivity.
///
/// `pseudo_dim` stands in for the pseudo-dimension of the cost functions,
/// whose worst-case value is far too large to size real runs with.
#[allow(clippy::too_many_arguments)]
pub fn coreset_size_bound(n: usize, d: usize, eps: f64, delta: f64, alpha: f64, p: f64, c_cs: f64, s_bar: f64, pseudo_dim: f64) -> Result<SizeBound> {
    check_exponent(p)?;
    if n == 0 || d == 0 {
        return Err(Error::BadParams("support size and dimension must be positive".into()));
    }
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::BadParams("eps and delta must lie in (0, 1)".into()));
    }
    if !(alpha >= 1.0 && c_cs > 0.0 && s_bar >= 1.0 && pseudo_dim >= 0.0) {
        return Err(Error::BadParams("alpha and s_bar must be at least 1, constants positive".into()));
    }
    let (nf, df) = (n as f64, d as f64);
    let theoretical = c_cs * alpha * 4f64.powf(p - 1.0) * nf.powi(8) * df.powi(4) * (nf * df / delta).ln() / (eps * eps);
    let practical = c_cs * s_bar * (pseudo_dim * s_bar.ln() + (1.0 / delta).ln()) / (eps * eps);
    Ok(SizeBound { theoretical, practical })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoresetEvaluation {
    pub cost_core: f64,
    pub cost_orig: f64,
    /// `|core - orig| / orig`; zero when both vanish, `None` when only `orig` does.
    pub rel_error: Option<f64>,
}

/// Compares the coreset estimate with the full objective given per-distribution costs.
pub fn evaluate_with_costs(coreset: &WeightedCoreset, costs: &[f64]) -> Result<CoresetEvaluation> {
    if costs.is_empty() {
        return Err(Error::Empty("no distributions given"));
    }
    if let Some(&(i, _)) = coreset.members.iter().find(|(i, _)| *i >= costs.len()) {
        return Err(Error::BadParams(format!("coreset member {i} out of range")));
    }
    let cost_core: f64 = coreset.members.iter().map(|&(i, w)| w * costs[i]).sum();
    let cost_orig = costs.iter().sum::<f64>() / costs.len() as f64;
    let rel_error = if cost_orig != 0.0 {
        Some((cost_core - cost_orig).abs() / cost_orig.abs())
    } else if cost_core == 0.0 {
        Some(0.0)
    } else {
        None
    };
    Ok(CoresetEvaluation {
        cost_core,
        cost_orig,
        rel_error,
    })
}

/// Coreset estimate versus the full objective at the query `nu`.
pub fn evaluate_coreset(coreset: &WeightedCoreset, mus: &[DiscreteDistribution], nu: &DiscreteDistribution, p: f64) -> Result<CoresetEvaluation> {
    evaluate_with_costs(coreset, &distribution_costs(mus, nu, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(x: f64) -> DiscreteDistribution {
        DiscreteDistribution::dirac(&[x]).unwrap()
    }

    #[test]
    fn all_at_anchor_gives_floor_and_uniform_q() {
        let mus = vec![dirac(1.0); 3];
        let sc = sensitivity_upper_bounds(&mus, &dirac(1.0), 1.0, 2.0).unwrap();
        assert_eq!(sc.s, vec![8.0; 3]);
        for q in &sc.q {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn outlier_instance_closed_form() {
        let k = 50_000usize;
        let mut costs = vec![0.0; k];
        costs[k - 1] = (k as f64).powi(2);
        let sc = SensitivityScores::from_costs(&costs, 1.0, 2.0).unwrap();
        assert!((sc.s[k - 1] - (2.0 * k as f64 + 8.0)).abs() < 1e-6);
        assert_eq!(sc.s[0], 8.0);
        assert!((sc.q[k - 1] - 0.2).abs() < 1e-4);
        assert!((sc.q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn p1_formula() {
        let sc = SensitivityScores::from_costs(&[1.0, 3.0], 1.0, 1.0).unwrap();
        assert!((sc.s[0] - 2.5).abs() < 1e-15 && (sc.s[1] - 3.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_weights() {
        let cs = uniform_coreset(4, 2, 0).unwrap();
        assert!(cs.members.iter().all(|&(_, w)| (w - 0.5).abs() < 1e-15));
        let cs = sample_coreset(&[1.0, 0.0, 0.0], 1, 3).unwrap();
        assert_eq!(cs.members.len(), 1);
        assert_eq!(cs.members[0].0, 0);
        assert!((cs.members[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(sample_coreset(&[1.0], 0, 0).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let q = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(sample_coreset(&q, 20, 7).unwrap(), sample_coreset(&q, 20, 7).unwrap());
    }

    #[test]
    fn exhaustive_coreset_is_exact() {
        let costs = [1.0, 4.0, 9.0];
        let cs = WeightedCoreset {
            members: (0..3).map(|i| (i, 1.0 / 3.0)).collect(),
        };
        let ev = evaluate_with_costs(&cs, &costs).unwrap();
        assert!(ev.rel_error.unwrap() < 1e-15);
    }

    #[test]
    fn missing_outlier_is_total_loss() {
        let k = 1000;
        let mut mus = vec![dirac(0.0); k - 1];
        mus.push(dirac(k as f64));
        let cs = WeightedCoreset {
            members: vec![(0, 1.0)],
        };
        let ev = evaluate_coreset(&cs, &mus, &dirac(0.0), 2.0).unwrap();
        assert!((ev.cost_orig - k as f64).abs() < 1e-9);
        assert_eq!(ev.cost_core, 0.0);
        assert_eq!(ev.rel_error, Some(1.0));
    }

    #[test]
    fn zero_original_cost() {
        let cs = WeightedCoreset { members: vec![(0, 1.0)] };
        assert_eq!(evaluate_with_costs(&cs, &[0.0, 0.0]).unwrap().rel_error, Some(0.0));
    }

    #[test]
    fn size_bound_scaling() {
        let a = coreset_size_bound(2, 2, 0.5, 0.1, 1.0, 1.0, 1.0, 3.0, 2.0).unwrap();
        let b = coreset_size_bound(2, 2, 0.25, 0.1, 1.0, 1.0, 1.0, 3.0, 2.0).unwrap();
        let expected = 256.0 * 16.0 * 40f64.ln() / 0.25;
        assert!((a.theoretical - expected).abs() < 1e-6 * expected);
        assert!((b.theoretical / a.theoretical - 4.0).abs() < 1e-12);
        assert!((b.practical / a.practical - 4.0).abs() < 1e-12);
        let p2 = coreset_size_bound(2, 2, 0.5, 0.1, 1.0, 2.0, 1.0, 3.0, 2.0).unwrap();
        assert!((p2.theoretical / a.theoretical - 4.0).abs() < 1e-12);
    }
}
