//! Total-variation losses, clustering error, cross-validation over `λ` and
//! the replicate experiment harness.

mod cv;
mod experiment;

pub use cv::{cross_validate, fold_split, CvOutcome, CvScore};
pub use experiment::{
    quartiles, run_experiment, summarize, write_report_csv, ExperimentSpec, Generator, LossReport, Method,
    MethodSummary, Quartiles,
};

use itertools::Itertools;

use crate::mallows::{pmf_table, MixtureParams};
use crate::missing::{partial_distribution, Dataset, MissingLaw};
use crate::permkit::RankSpace;
use crate::{exec, Error, Result};

fn tv(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    exec::sum(&diffs)
}

fn check_r(space: &RankSpace, theta: &MixtureParams) -> Result<()> {
    if theta.r() != space.r() {
        return Err(Error::Dimension {
            expected: space.r(),
            got: theta.r(),
        });
    }
    Ok(())
}

/// `Σ_{τ ∈ S̄_r} |P(τ; θ, φ) - P(τ; θ̂, φ̂)|`, enumerated exactly.
pub fn l_par<A: MissingLaw, B: MissingLaw>(
    space: &RankSpace,
    theta: &MixtureParams,
    phi: &A,
    theta_hat: &MixtureParams,
    phi_hat: &B,
) -> Result<f64> {
    check_r(space, theta)?;
    check_r(space, theta_hat)?;
    let p = partial_distribution(space, theta, phi)?;
    let q = partial_distribution(space, theta_hat, phi_hat)?;
    Ok(tv(&p, &q))
}

/// Empirical frequencies of a dataset over `S̄_r`.
pub fn empirical_distribution(space: &RankSpace, data: &Dataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Domain("empirical distribution of an empty dataset".into()));
    }
    if data.r() != space.r() {
        return Err(Error::Dimension {
            expected: space.r(),
            got: data.r(),
        });
    }
    let mut freq = vec![0.0; space.num_partials()];
    for tau in data.observations() {
        freq[space.partial_index(tau)?] += 1.0;
    }
    let n = data.len() as f64;
    freq.iter_mut().for_each(|f| *f /= n);
    Ok(freq)
}

/// [`l_par`] with the first distribution replaced by the empirical
/// distribution of `test`.
pub fn l_par_empirical<B: MissingLaw>(
    space: &RankSpace,
    test: &Dataset,
    theta_hat: &MixtureParams,
    phi_hat: &B,
) -> Result<f64> {
    check_r(space, theta_hat)?;
    let emp = empirical_distribution(space, test)?;
    let q = partial_distribution(space, theta_hat, phi_hat)?;
    Ok(tv(&emp, &q))
}

/// `Σ_{π ∈ S_r} |P(π; θ) - P(π; θ̂)|`.
pub fn l_comp(space: &RankSpace, theta: &MixtureParams, theta_hat: &MixtureParams) -> Result<f64> {
    check_r(space, theta)?;
    check_r(space, theta_hat)?;
    Ok(tv(&pmf_table(space, theta)?, &pmf_table(space, theta_hat)?))
}

/// Index of the largest entry; ties go to the smallest index.
pub fn hard_assignment(posterior: &[f64]) -> usize {
    posterior
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
        .0
}

/// Mismatch rate of argmax assignments against `truth` (0-based ids),
/// minimized over relabelings of the predicted clusters.
pub fn classification_error(truth: &[usize], posteriors: &[Vec<f64>]) -> Result<f64> {
    if truth.len() != posteriors.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: posteriors.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Domain("classification error of zero observations".into()));
    }
    let k = posteriors[0].len();
    if k == 0 || posteriors.iter().any(|p| p.len() != k) {
        return Err(Error::Domain("posterior rows must share a positive cluster count".into()));
    }
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let labels = k.max(kt);
    let mut confusion = vec![vec![0usize; labels]; labels];
    for (&t, p) in truth.iter().zip(posteriors) {
        confusion[hard_assignment(p)][t] += 1;
    }
    let best_hits = (0..labels)
        .permutations(labels)
        .map(|perm| perm.iter().enumerate().map(|(pred, &t)| confusion[pred][t]).sum::<usize>())
        .max()
        .unwrap_or(0);
    Ok(1.0 - best_hits as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mallows::MallowsParams;
    use crate::missing::MissingTable;
    use crate::permkit::{Permutation, TopTRanking};

    #[test]
    fn identical_models_have_zero_loss() {
        let s = RankSpace::new(4).unwrap();
        let theta = MixtureParams::single("2>1>4>3".parse().unwrap(), 0.8).unwrap();
        let phi = MissingTable::uniform(&s);
        assert_eq!(l_par(&s, &theta, &phi, &theta, &phi).unwrap(), 0.0);
        assert_eq!(l_comp(&s, &theta, &theta).unwrap(), 0.0);
    }

    #[test]
    fn r3_par_by_enumeration() {
        let s = RankSpace::new(3).unwrap();
        let flat = MixtureParams::single(Permutation::identity(3), 1e-12).unwrap();
        let peaked = MixtureParams::single(Permutation::identity(3), 1.0).unwrap();
        let phi = MissingTable::uniform(&s);
        // hand enumeration: perms listed as (order, distance from identity)
        let perms: [([usize; 3], i32); 6] =
            [([1, 2, 3], 0), ([1, 3, 2], 1), ([2, 1, 3], 1), ([2, 3, 1], 2), ([3, 1, 2], 2), ([3, 2, 1], 3)];
        let z: f64 = perms.iter().map(|p| (-(p.1 as f64)).exp()).sum();
        let pm = |o: &[usize]| perms.iter().find(|p| p.0 == o).map(|p| (-(p.1 as f64)).exp() / z).unwrap();
        let mut expected = 0.0;
        for first in 1..=3 {
            let mass: f64 = perms.iter().filter(|p| p.0[0] == first).map(|p| pm(&p.0)).sum();
            expected += 0.5 * (mass - 1.0 / 3.0).abs();
        }
        for p in &perms {
            expected += 0.5 * (pm(&p.0) - 1.0 / 6.0).abs();
        }
        let got = l_par(&s, &flat, &phi, &peaked, &phi).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn comp_r3_brute_force() {
        let s = RankSpace::new(3).unwrap();
        let a = MixtureParams::single(Permutation::identity(3), 1.0).unwrap();
        let b = MixtureParams::single(Permutation::identity(3), 2.0).unwrap();
        let counts = [1.0, 2.0, 2.0, 1.0]; // distances 0..3
        let za: f64 = counts.iter().enumerate().map(|(d, n)| n * (-(d as f64)).exp()).sum();
        let zb: f64 = counts.iter().enumerate().map(|(d, n)| n * (-2.0 * d as f64).exp()).sum();
        let expected: f64 = counts
            .iter()
            .enumerate()
            .map(|(d, n)| n * ((-(d as f64)).exp() / za - (-2.0 * d as f64).exp() / zb).abs())
            .sum();
        assert!((l_comp(&s, &a, &b).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn disjoint_point_masses() {
        let s = RankSpace::new(4).unwrap();
        let a = MixtureParams::single(Permutation::identity(4), 200.0).unwrap();
        let b = MixtureParams::single(Permutation::reversal(4), 200.0).unwrap();
        assert!((l_comp(&s, &a, &b).unwrap() - 2.0).abs() < 1e-12);

        let full = MissingTable::homogeneous(&s, &[0.0, 0.0, 1.0]).unwrap();
        let test = Dataset::new(4, vec![TopTRanking::parse("4>3>2", 4).unwrap(); 5]).unwrap();
        assert!((l_par_empirical(&s, &test, &a, &full).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_arithmetic() {
        let s = RankSpace::new(3).unwrap();
        let uniform = MixtureParams::single(Permutation::identity(3), 1e-12).unwrap();
        // uniform over the 9 partial rankings: each top-1 gets 1/2 · 1/3,
        // each top-2 gets 1/2 · 1/6, which is not 1/9 each; use a table that
        // makes it so
        let phi = MissingTable::homogeneous(&s, &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let dist = partial_distribution(&s, &uniform, &phi).unwrap();
        assert!(dist.iter().all(|p| (p - 1.0 / 9.0).abs() < 1e-9));
        let a = TopTRanking::parse("2", 3).unwrap();
        let b = TopTRanking::parse("1>3", 3).unwrap();
        let test = Dataset::new(3, vec![a.clone(), a, b]).unwrap();
        let expected = (2.0 / 3.0 - 1.0 / 9.0) + (1.0 / 3.0 - 1.0 / 9.0) + 7.0 / 9.0;
        assert!((l_par_empirical(&s, &test, &uniform, &phi).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn classification_examples() {
        let truth = [0, 0, 1, 1];
        let hot = |k: usize| if k == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
        let exact: Vec<_> = truth.iter().map(|&k| hot(k)).collect();
        assert_eq!(classification_error(&truth, &exact).unwrap(), 0.0);
        let swapped: Vec<_> = truth.iter().map(|&k| hot(1 - k)).collect();
        assert_eq!(classification_error(&truth, &swapped).unwrap(), 0.0);
        let pred: Vec<_> = [0, 1, 1, 1].iter().map(|&k| hot(k)).collect();
        assert_eq!(classification_error(&truth, &pred).unwrap(), 0.25);
        assert!(classification_error(&truth, &pred[..3]).is_err());
    }

    #[test]
    fn mixture_losses_bounded() {
        let s = RankSpace::new(4).unwrap();
        let a = MixtureParams::new(
            vec![
                MallowsParams::new(Permutation::identity(4), 1.0).unwrap(),
                MallowsParams::new(Permutation::reversal(4), 0.3).unwrap(),
            ],
            vec![0.3, 0.7],
        )
        .unwrap();
        let b = MixtureParams::single("3>4>1>2".parse().unwrap(), 3.0).unwrap();
        let pa = MissingTable::homogeneous(&s, &[0.2, 0.3, 0.5]).unwrap();
        let pb = MissingTable::uniform(&s);
        let lp = l_par(&s, &a, &pa, &b, &pb).unwrap();
        let lc = l_comp(&s, &a, &b).unwrap();
        assert!((0.0..=2.0).contains(&lp) && (0.0..=2.0).contains(&lc));
    }
}
