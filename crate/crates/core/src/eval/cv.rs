use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::l_par_empirical;
use crate::emcore::{fit, FitConfig, FitResult};
use crate::missing::Dataset;
use crate::permkit::RankSpace;
use crate::{exec, seed, Error, Result};

// rng stream reserved for the fold shuffle
const FOLD_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub lambda: f64,
    /// Held-out empirical `L_par` per fold.
    pub folds: [f64; 2],
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub lambda: f64,
    /// One entry per distinct grid value, ascending.
    pub scores: Vec<CvScore>,
    /// Refit on the full dataset at the selected `λ`.
    pub fit: FitResult,
}

/// Seeded 50/50 split of `0..n`.
pub fn fold_split(n: usize, seed_value: u64) -> [Vec<usize>; 2] {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed_value, FOLD_STREAM));
    let second = idx.split_off(n / 2);
    [idx, second]
}

/// Two-fold cross-validation of `λ` scored by held-out empirical `L_par`.
/// Ties go to the smaller `λ`.
pub fn cross_validate(space: &RankSpace, data: &Dataset, grid: &[f64], config: &FitConfig) -> Result<CvOutcome> {
    if data.len() < 2 {
        return Err(Error::Domain(format!("cross-validation needs at least 2 observations, got {}", data.len())));
    }
    let mut grid: Vec<f64> = grid.to_vec();
    if let Some(bad) = grid.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::Domain(format!("lambda grid contains {bad}")));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::Domain("lambda grid is empty".into()));
    }
    let folds = fold_split(data.len(), config.seed);
    let parts = [data.subset(&folds[0]), data.subset(&folds[1])];

    let cells = exec::map_range(config.execution, grid.len() * 2, |cell| {
        let (g, f) = (cell / 2, cell % 2);
        let cfg = FitConfig {
            lambda: grid[g],
            ..config.clone()
        };
        let fitted = fit(space, &parts[f], &cfg)?;
        l_par_empirical(space, &parts[1 - f], &fitted.theta, &fitted.phi)
    });
    let cells = cells.into_iter().collect::<Result<Vec<f64>>>()?;
    let scores: Vec<CvScore> = grid
        .iter()
        .enumerate()
        .map(|(g, &lambda)| {
            let folds = [cells[2 * g], cells[2 * g + 1]];
            CvScore {
                lambda,
                folds,
                mean: 0.5 * (folds[0] + folds[1]),
            }
        })
        .collect();
    let best = scores
        .iter()
        .fold(None::<&CvScore>, |b, s| match b {
            Some(b) if b.mean <= s.mean => Some(b),
            _ => Some(s),
        })
        .expect("grid is nonempty");
    let lambda = best.lambda;
    let fit = fit(space, data, &FitConfig { lambda, ..config.clone() })?;
    Ok(CvOutcome { lambda, scores, fit })
}
