//! The missing model `P(t | π)` and the simulation mechanisms built on it.
//!
//! Lengths are `t = 1..=r-1`; `t = r - 1` is a fully observed ranking. Row
//! vectors are stored with position `t - 1` holding `P(t | π)`.

mod dataset;

pub use dataset::{read_dataset, write_dataset, Dataset, HiddenTruth};

use crate::mallows::{joint_log_table, log_normalizer, MixtureParams, MixtureSampler};
use crate::permkit::{Permutation, RankSpace, TopTRanking};
use crate::{seed, Error, Result};

const ROW_SUM_TOL: f64 = 1e-10;

/// Anything that yields `P(t | π, cluster)`.
pub trait MissingLaw {
    /// Probability of observing length `t` for vertex `v` drawn from
    /// cluster `k`.
    fn length_prob(&self, v: usize, k: usize, t: usize) -> f64;
}

/// Per-vertex length distributions; `r!` rows of `r - 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingTable {
    r: usize,
    probs: Vec<f64>,
}

impl MissingTable {
    /// Every row uniform over lengths.
    pub fn uniform(space: &RankSpace) -> Self {
        let m = space.num_lengths();
        MissingTable {
            r: space.r(),
            probs: vec![1.0 / m as f64; space.num_vertices() * m],
        }
    }

    /// The same row for every vertex.
    pub fn homogeneous(space: &RankSpace, row: &[f64]) -> Result<Self> {
        let rows = vec![row.to_vec(); space.num_vertices()];
        Self::from_rows(space, rows)
    }

    pub fn from_rows(space: &RankSpace, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != space.num_vertices() {
            return Err(Error::Dimension {
                expected: space.num_vertices(),
                got: rows.len(),
            });
        }
        let m = space.num_lengths();
        let mut probs = Vec::with_capacity(rows.len() * m);
        for row in rows {
            check_simplex_row(&row, m)?;
            probs.extend(row);
        }
        Ok(MissingTable { r: space.r(), probs })
    }

    /// Wraps a flat row-major buffer; rows must already be on the simplex.
    pub fn from_flat(space: &RankSpace, probs: Vec<f64>) -> Result<Self> {
        let m = space.num_lengths();
        if probs.len() != space.num_vertices() * m {
            return Err(Error::Dimension {
                expected: space.num_vertices() * m,
                got: probs.len(),
            });
        }
        for row in probs.chunks(m) {
            check_simplex_row(row, m)?;
        }
        Ok(MissingTable { r: space.r(), probs })
    }

    pub(crate) fn from_flat_unchecked(r: usize, probs: Vec<f64>) -> Self {
        MissingTable { r, probs }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn num_lengths(&self) -> usize {
        self.r - 1
    }

    pub fn num_rows(&self) -> usize {
        self.probs.len() / self.num_lengths()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        let m = self.num_lengths();
        &self.probs[v * m..(v + 1) * m]
    }

    /// `P(t | vertex v)`.
    pub fn get(&self, v: usize, t: usize) -> f64 {
        self.probs[v * self.num_lengths() + t - 1]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.num_lengths())
    }

    /// Largest entrywise gap between any two rows.
    pub fn max_row_spread(&self) -> f64 {
        let m = self.num_lengths();
        (0..m)
            .map(|t| {
                let col = self.probs.iter().skip(t).step_by(m);
                let hi = col.clone().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let lo = col.fold(f64::INFINITY, |a, &b| a.min(b));
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

impl MissingLaw for MissingTable {
    fn length_prob(&self, v: usize, _k: usize, t: usize) -> f64 {
        self.get(v, t)
    }
}

fn check_simplex_row(row: &[f64], m: usize) -> Result<()> {
    if row.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: row.len(),
        });
    }
    if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Domain(format!("length probabilities outside [0, 1]: {row:?}")));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::Domain(format!("length probabilities sum to {s}")));
    }
    Ok(())
}

/// Length distributions that depend only on the latent cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMissingSpec {
    rows: Vec<Vec<f64>>,
}

impl ClusterMissingSpec {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || m == 0 {
            return Err(Error::Domain("cluster missing spec needs at least one row".into()));
        }
        for row in &rows {
            check_simplex_row(row, m)?;
        }
        Ok(ClusterMissingSpec { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn num_lengths(&self) -> usize {
        self.rows[0].len()
    }
}

impl MissingLaw for ClusterMissingSpec {
    fn length_prob(&self, _v: usize, k: usize, t: usize) -> f64 {
        self.rows[k][t - 1]
    }
}

/// A data-generating missing mechanism.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    PerVertex(MissingTable),
    PerCluster(ClusterMissingSpec),
}

impl MissingLaw for Mechanism {
    fn length_prob(&self, v: usize, k: usize, t: usize) -> f64 {
        match self {
            Mechanism::PerVertex(m) => m.length_prob(v, k, t),
            Mechanism::PerCluster(m) => m.length_prob(v, k, t),
        }
    }
}

impl From<MissingTable> for Mechanism {
    fn from(m: MissingTable) -> Self {
        Mechanism::PerVertex(m)
    }
}

impl From<ClusterMissingSpec> for Mechanism {
    fn from(m: ClusterMissingSpec) -> Self {
        Mechanism::PerCluster(m)
    }
}

/// `(1 - C, 0, ..., 0, C)`: all mass at `t = 1` or `t = r - 1`.
fn binary_row(m: usize, c: f64) -> Vec<f64> {
    let mut row = vec![0.0; m];
    row[0] += 1.0 - c;
    row[m - 1] += c;
    row
}

/// `P(τ)` for one top-t ranking: the sum over compatible rankings of
/// `P(t | π) P(π)`.
pub fn partial_pmf<L: MissingLaw>(
    space: &RankSpace,
    tau: &TopTRanking,
    theta: &MixtureParams,
    phi: &L,
) -> Result<f64> {
    let idx = space.partial_index(tau)?;
    let table = joint_log_table(space, theta)?;
    let t = tau.t();
    Ok(space
        .compatible_vertices(idx)
        .iter()
        .map(|&v| {
            let v = v as usize;
            table
                .iter()
                .enumerate()
                .map(|(k, row)| phi.length_prob(v, k, t) * row[v].exp())
                .sum::<f64>()
        })
        .sum())
}

/// The full observable distribution over `S̄_r`, indexed by
/// [`RankSpace::partial_index`].
pub fn partial_distribution<L: MissingLaw>(
    space: &RankSpace,
    theta: &MixtureParams,
    phi: &L,
) -> Result<Vec<f64>> {
    let table = joint_log_table(space, theta)?;
    let mut dist = vec![0.0; space.num_partials()];
    for v in 0..space.num_vertices() {
        for (k, row) in table.iter().enumerate() {
            let p = row[v].exp();
            for t in 1..space.r() {
                dist[space.prefix_index(v, t)] += phi.length_prob(v, k, t) * p;
            }
        }
    }
    Ok(dist)
}

/// Binary mechanism whose `t = r - 1` marginal is Mallows with
/// concentration `c_star` when the cap at one is not binding:
/// `C_π = min(1, Z(c)/Z(c*) R exp(-(c* - c) d(π, σ0)))`.
pub fn tilt_concentration_mechanism(
    space: &RankSpace,
    c: f64,
    c_star: f64,
    ratio: f64,
    sigma0: &Permutation,
) -> Result<MissingTable> {
    if !(c > 0.0) || !(c_star > 0.0) {
        return Err(Error::Domain(format!("concentrations must be positive: c={c}, c_star={c_star}")));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Domain(format!("R must lie in [0, 1], got {ratio}")));
    }
    let s = space.index_of(sigma0)?;
    let r = space.r();
    let log_scale = log_normalizer(c, r)? - log_normalizer(c_star, r)?;
    let m = space.num_lengths();
    let mut probs = Vec::with_capacity(space.num_vertices() * m);
    for v in 0..space.num_vertices() {
        let d = space.distance(v, s) as f64;
        let cv = (ratio * (log_scale - (c_star - c) * d).exp()).min(1.0);
        probs.extend(binary_row(m, cv));
    }
    Ok(MissingTable::from_flat_unchecked(r, probs))
}

/// Binary per-cluster mechanism with `C_k = (w*_k / w_k) R`.
pub fn tilt_mixture_mechanism(
    w: &[f64],
    w_star: &[f64],
    ratio: f64,
    r: usize,
) -> Result<ClusterMissingSpec> {
    if w.len() != w_star.len() {
        return Err(Error::Dimension {
            expected: w.len(),
            got: w_star.len(),
        });
    }
    for v in [w, w_star] {
        let s: f64 = v.iter().sum();
        if v.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("{v:?} is not on the simplex")));
        }
    }
    if w.contains(&0.0) {
        return Err(Error::Domain("mixture weights must be positive".into()));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Domain(format!("R must lie in [0, 1], got {ratio}")));
    }
    if r < 2 {
        return Err(Error::Domain(format!("need at least 2 items, got {r}")));
    }
    let rows = w
        .iter()
        .zip(w_star)
        .enumerate()
        .map(|(k, (&wk, &wsk))| {
            let ck = wsk / wk * ratio;
            if ck > 1.0 {
                return Err(Error::Domain(format!("C_{} = {ck} exceeds 1", k + 1)));
            }
            Ok(binary_row(r - 1, ck))
        })
        .collect::<Result<Vec<_>>>()?;
    ClusterMissingSpec::new(rows)
}

/// Simulates `n` top-t observations with their hidden truth.
pub fn generate_dataset(
    space: &RankSpace,
    theta: &MixtureParams,
    mech: &Mechanism,
    n: usize,
    rng_seed: u64,
) -> Result<Dataset> {
    let m = space.num_lengths();
    match mech {
        Mechanism::PerVertex(tab) => {
            if tab.r() != space.r() {
                return Err(Error::Dimension {
                    expected: space.r(),
                    got: tab.r(),
                });
            }
        }
        Mechanism::PerCluster(spec) => {
            if spec.k() != theta.k() {
                return Err(Error::Dimension {
                    expected: theta.k(),
                    got: spec.k(),
                });
            }
            if spec.num_lengths() != m {
                return Err(Error::Dimension {
                    expected: m,
                    got: spec.num_lengths(),
                });
            }
        }
    }
    let sampler = MixtureSampler::new(space, theta)?;
    let mut rng = seed::rng(rng_seed, 0);
    let mut observations = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut row = vec![0.0; m];
    for _ in 0..n {
        let (v, k) = sampler.draw(&mut rng);
        let mut acc = 0.0;
        for (t, slot) in row.iter_mut().enumerate() {
            acc += mech.length_prob(v, k, t + 1);
            *slot = acc;
        }
        let t = crate::mallows::pick(&row, rand::Rng::random::<f64>(&mut rng) * acc) + 1;
        let perm = space.vertex(v);
        observations.push(perm.truncate(t)?);
        truth.push(HiddenTruth {
            perm: perm.clone(),
            cluster: k,
        });
    }
    Dataset::with_truth(space.r(), observations, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mallows::{pmf_table, MallowsParams};
    use crate::permkit::{compatible_set, index_of};

    fn space(r: usize) -> RankSpace {
        RankSpace::new(r).unwrap()
    }

    #[test]
    fn homogeneous_factorization() {
        let s = space(4);
        let theta = MixtureParams::single("2>3>1>4".parse().unwrap(), 0.8).unwrap();
        let g = [0.2, 0.5, 0.3];
        let phi = MissingTable::homogeneous(&s, &g).unwrap();
        let pmf = pmf_table(&s, &theta).unwrap();
        let tau = TopTRanking::parse("3>1", 4).unwrap();
        let mass: f64 = compatible_set(&tau).iter().map(|p| pmf[index_of(p)]).sum();
        let got = partial_pmf(&s, &tau, &theta, &phi).unwrap();
        assert!((got - g[1] * mass).abs() < 1e-15);
    }

    #[test]
    fn total_probability_s4() {
        let s = space(4);
        let theta = MixtureParams::new(
            vec![
                MallowsParams::new("1>2>3>4".parse().unwrap(), 0.5).unwrap(),
                MallowsParams::new("4>1>3>2".parse().unwrap(), 2.0).unwrap(),
            ],
            vec![0.3, 0.7],
        )
        .unwrap();
        let phi = tilt_concentration_mechanism(&s, 1.0, 1.3, 0.6, &Permutation::identity(4)).unwrap();
        let total: f64 = (0..s.num_partials())
            .map(|i| partial_pmf(&s, &s.partial(i), &theta, &phi).unwrap())
            .sum();
        assert_eq!(s.num_partials(), 40);
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_limit_r3() {
        let s = space(3);
        let theta = MixtureParams::single(Permutation::identity(3), 1e-9).unwrap();
        let phi = MissingTable::uniform(&s);
        for item in 1..=3 {
            let tau = TopTRanking::parse(&item.to_string(), 3).unwrap();
            let p = partial_pmf(&s, &tau, &theta, &phi).unwrap();
            assert!((p - 0.5 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tilt_concentration_mar_case() {
        let s = space(4);
        let tab = tilt_concentration_mechanism(&s, 1.0, 1.0, 0.7, &Permutation::identity(4)).unwrap();
        for row in tab.rows() {
            assert!((row[2] - 0.7).abs() < 1e-15);
            assert!((row[0] - 0.3).abs() < 1e-15);
            assert_eq!(row[1], 0.0);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn tilt_concentration_paper_settings_valid() {
        let s = space(5);
        for c_star in [0.8, 1.0, 1.2] {
            let tab = tilt_concentration_mechanism(&s, 1.0, c_star, 0.7, &Permutation::identity(5)).unwrap();
            MissingTable::from_flat(&s, tab.as_flat().to_vec()).unwrap();
        }
        assert!(tilt_concentration_mechanism(&s, 1.0, 1.0, 1.5, &Permutation::identity(5)).is_err());
        assert!(tilt_concentration_mechanism(&s, 0.0, 1.0, 0.5, &Permutation::identity(5)).is_err());
    }

    #[test]
    fn tilt_concentration_at_mode_r3() {
        let s = space(3);
        let sigma0 = Permutation::identity(3);
        let tab = tilt_concentration_mechanism(&s, 1.0, 1.2, 0.7, &sigma0).unwrap();
        // brute-force normalizers over the six rankings: distances 0,1,1,2,2,3
        let z = |c: f64| [0., 1., 1., 2., 2., 3.].iter().map(|d: &f64| (-c * d).exp()).sum::<f64>();
        let expected = z(1.0) / z(1.2) * 0.7;
        assert!((tab.get(index_of(&sigma0), 2) - expected).abs() < 1e-14);
    }

    #[test]
    fn tilt_mixture_values() {
        let spec = tilt_mixture_mechanism(&[0.5, 0.5], &[0.6, 0.4], 0.7, 5).unwrap();
        assert!((spec.rows()[0][3] - 0.84).abs() < 1e-15);
        assert!((spec.rows()[1][3] - 0.56).abs() < 1e-15);
        let mar = tilt_mixture_mechanism(&[0.5, 0.5], &[0.5, 0.5], 0.7, 5).unwrap();
        assert!(mar.rows().iter().all(|row| (row[3] - 0.7).abs() < 1e-15));
        for w1 in [0.5, 0.6, 0.7] {
            tilt_mixture_mechanism(&[0.5, 0.5], &[w1, 1.0 - w1], 0.7, 5).unwrap();
        }
        assert!(tilt_mixture_mechanism(&[0.5, 0.5], &[0.9, 0.1], 0.7, 5).is_err());
    }

    #[test]
    fn generate_edge_cases() {
        let s = space(4);
        let theta = MixtureParams::single(Permutation::identity(4), 1.0).unwrap();
        let full = MissingTable::homogeneous(&s, &[0.0, 0.0, 1.0]).unwrap();
        let empty = generate_dataset(&s, &theta, &full.clone().into(), 0, 1).unwrap();
        assert!(empty.is_empty());
        let data = generate_dataset(&s, &theta, &full.into(), 200, 1).unwrap();
        assert!(data.observations().iter().all(|o| o.t() == 3 && compatible_set(o).len() == 1));
        let spec = ClusterMissingSpec::new(vec![vec![1.0, 0.0]]).unwrap();
        assert!(generate_dataset(&s, &theta, &spec.into(), 5, 1).is_err());
    }
}
