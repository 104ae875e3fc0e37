//! Mallows and Mallows-mixture models under the Kendall distance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::permkit::{kendall_unchecked, Permutation, RankSpace};
use crate::{seed, Error, Result};

/// Location `sigma` and concentration `c > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MallowsParams {
    pub sigma: Permutation,
    pub c: f64,
}

impl MallowsParams {
    pub fn new(sigma: Permutation, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("concentration must be positive, got {c}")));
        }
        Ok(MallowsParams { sigma, c })
    }
}

/// A mixture of `K >= 1` Mallows components with positive weights summing
/// to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    components: Vec<MallowsParams>,
    weights: Vec<f64>,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl MixtureParams {
    pub fn new(components: Vec<MallowsParams>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("mixture needs at least one component".into()));
        }
        if components.len() != weights.len() {
            return Err(Error::Dimension {
                expected: components.len(),
                got: weights.len(),
            });
        }
        let r = components[0].sigma.len();
        if let Some(bad) = components.iter().find(|m| m.sigma.len() != r) {
            return Err(Error::Dimension {
                expected: r,
                got: bad.sigma.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Domain(format!("mixture weights must be positive: {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Domain(format!("mixture weights sum to {total}")));
        }
        Ok(MixtureParams { components, weights })
    }

    pub fn single(sigma: Permutation, c: f64) -> Result<Self> {
        Self::new(vec![MallowsParams::new(sigma, c)?], vec![1.0])
    }

    pub fn components(&self) -> &[MallowsParams] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn r(&self) -> usize {
        self.components[0].sigma.len()
    }
}

/// `log Z(c)` for `r` items via `Z(c) = prod_{j=1..r} (1 - e^{-jc}) / (1 - e^{-c})`.
/// At `c = 0` this is `log r!`.
pub fn log_normalizer(c: f64, r: usize) -> Result<f64> {
    if !(c >= 0.0) || c.is_infinite() {
        return Err(Error::Domain(format!("concentration must be >= 0, got {c}")));
    }
    if c == 0.0 {
        return Ok((1..=r).map(|j| (j as f64).ln()).sum());
    }
    let base = (-(-c).exp_m1()).ln();
    Ok((1..=r)
        .map(|j| (-(-(j as f64) * c).exp_m1()).ln() - base)
        .sum())
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Log-probability of `pi` under the mixture.
pub fn log_complete_pmf(pi: &Permutation, theta: &MixtureParams) -> Result<f64> {
    if pi.len() != theta.r() {
        return Err(Error::Dimension {
            expected: theta.r(),
            got: pi.len(),
        });
    }
    let r = theta.r();
    let terms: Vec<f64> = theta
        .components
        .iter()
        .zip(&theta.weights)
        .map(|(m, &w)| {
            let d = kendall_unchecked(pi, &m.sigma) as f64;
            Ok(w.ln() - m.c * d - log_normalizer(m.c, r)?)
        })
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(terms.into_iter()))
}

/// `sum_k w_k exp(-c_k d(pi, sigma_k)) / Z(c_k)`.
pub fn complete_pmf(pi: &Permutation, theta: &MixtureParams) -> Result<f64> {
    Ok(log_complete_pmf(pi, theta)?.exp())
}

/// Per-component log-probabilities `log w_k + log P_k(π)` over every vertex,
/// laid out `[k][v]`.
pub fn joint_log_table(space: &RankSpace, theta: &MixtureParams) -> Result<Vec<Vec<f64>>> {
    if theta.r() != space.r() {
        return Err(Error::Dimension {
            expected: space.r(),
            got: theta.r(),
        });
    }
    theta
        .components
        .iter()
        .zip(&theta.weights)
        .map(|(m, &w)| {
            let s = space.index_of(&m.sigma)?;
            let shift = w.ln() - log_normalizer(m.c, space.r())?;
            Ok((0..space.num_vertices())
                .map(|v| shift - m.c * space.distance(v, s) as f64)
                .collect())
        })
        .collect()
}

/// Mixture pmf over every vertex.
pub fn pmf_table(space: &RankSpace, theta: &MixtureParams) -> Result<Vec<f64>> {
    let table = joint_log_table(space, theta)?;
    Ok((0..space.num_vertices())
        .map(|v| log_sum_exp(table.iter().map(|row| row[v])).exp())
        .collect())
}

/// Exact sampler: categorical cluster draw, then inverse CDF over the
/// enumerated component pmf.
#[derive(Debug, Clone)]
pub struct MixtureSampler {
    weight_cdf: Vec<f64>,
    component_cdfs: Vec<Vec<f64>>,
}

impl MixtureSampler {
    pub fn new(space: &RankSpace, theta: &MixtureParams) -> Result<Self> {
        let table = joint_log_table(space, theta)?;
        let component_cdfs = table
            .iter()
            .zip(&theta.weights)
            .map(|(row, &w)| cdf(row.iter().map(|&l| (l - w.ln()).exp())))
            .collect();
        Ok(MixtureSampler {
            weight_cdf: cdf(theta.weights.iter().copied()),
            component_cdfs,
        })
    }

    /// Draws `(vertex index, cluster)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let k = pick(&self.weight_cdf, rng.random());
        let v = pick(&self.component_cdfs[k], rng.random());
        (v, k)
    }
}

fn cdf(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    let total = acc;
    for x in &mut out {
        *x /= total;
    }
    out
}

pub(crate) fn pick(cdf: &[f64], u: f64) -> usize {
    let i = cdf.partition_point(|&c| c <= u);
    if i < cdf.len() {
        return i;
    }
    // rounding left u above the last cumulative value: take the last
    // entry that carries mass
    let mut j = cdf.len() - 1;
    while j > 0 && cdf[j] == cdf[j - 1] {
        j -= 1;
    }
    j
}

/// `n` i.i.d. draws of `(complete ranking, cluster id)`.
pub fn sample_complete(
    space: &RankSpace,
    theta: &MixtureParams,
    n: usize,
    rng_seed: u64,
) -> Result<Vec<(Permutation, usize)>> {
    let sampler = MixtureSampler::new(space, theta)?;
    let mut rng = seed::rng(rng_seed, 0);
    Ok((0..n)
        .map(|_| {
            let (v, k) = sampler.draw(&mut rng);
            (space.vertex(v).clone(), k)
        })
        .collect())
}

/// Serialized form of one component: `sigma` is `>`-joined 1-based items.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComponentRecord {
    pub sigma: String,
    pub c: f64,
    pub w: f64,
}

impl MixtureParams {
    pub fn to_records(&self) -> Vec<ComponentRecord> {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(m, &w)| ComponentRecord {
                sigma: m.sigma.to_string(),
                c: m.c,
                w,
            })
            .collect()
    }

    pub fn from_records(records: &[ComponentRecord]) -> Result<Self> {
        let components = records
            .iter()
            .map(|rec| MallowsParams::new(rec.sigma.parse()?, rec.c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components, records.iter().map(|rec| rec.w).collect())
    }
}
