//! EM over latent complete rankings.
//!
//! The E-step spreads each observation over its compatible complete rankings
//! (and clusters) in proportion to `w_k P_k(π) φ[π][t]`. The M-step refits
//! the Mallows mixture exactly (exhaustive location search, 1-D convex search
//! for the concentration) and refits the missing table, either by the graph
//! regularized ADMM solver (`λ > 0`), by the closed form (`λ = 0`), or not at
//! all for the MAR baseline, which keeps the empirical length histogram.
//!
//! Observations with the same top-t ranking have identical posteriors, so
//! all work is done per distinct partial ranking weighted by its count.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::admm::{self, graph_penalty, phi_objective, AdmmOptions};
use crate::exec::{self, Execution};
use crate::mallows::{joint_log_table, log_normalizer, ComponentRecord, MallowsParams, MixtureParams};
use crate::missing::{Dataset, MissingTable};
use crate::permkit::RankSpace;
use crate::{seed, Error, Result};

/// Lower end of the concentration search interval.
pub const C_MIN: f64 = 1e-4;
/// Upper end; a sample concentrated on a single ranking lands here.
pub const C_MAX: f64 = 20.0;
const GOLDEN_TOL: f64 = 1e-8;
// relative slack when comparing location objectives
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Number of mixture components.
    pub k: usize,
    pub lambda: f64,
    pub rho: f64,
    /// Stop when the penalized objective moves by less than this.
    pub em_tol: f64,
    pub admm_primal_tol: f64,
    pub admm_dual_tol: f64,
    pub admm_max_iter: usize,
    pub em_max_iter: usize,
    pub restarts: usize,
    /// EM iterations during which locations may jump to a neighbor.
    pub transition_iters: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            k: 1,
            lambda: 10.0,
            rho: admm::DEFAULT_RHO,
            em_tol: 1.0,
            admm_primal_tol: 1.0,
            admm_dual_tol: 1.0,
            admm_max_iter: 100,
            em_max_iter: 100,
            restarts: 10,
            transition_iters: 5,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("em_tol", self.em_tol),
            ("admm_primal_tol", self.admm_primal_tol),
            ("admm_dual_tol", self.admm_dual_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let counts = [
            ("k", self.k),
            ("admm_max_iter", self.admm_max_iter),
            ("em_max_iter", self.em_max_iter),
            ("restarts", self.restarts),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Domain(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    fn admm_options(&self) -> AdmmOptions {
        AdmmOptions {
            lambda: self.lambda,
            rho: self.rho,
            primal_tol: self.admm_primal_tol,
            dual_tol: self.admm_dual_tol,
            max_iter: self.admm_max_iter,
            execution: self.execution,
            record_trace: false,
        }
    }
}

/// Observations collapsed by distinct top-t ranking.
#[derive(Debug, Clone)]
pub struct GroupedData {
    n: usize,
    groups: Vec<Group>,
    obs_group: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Group {
    partial: usize,
    t: usize,
    count: f64,
    first_obs: usize,
}

impl GroupedData {
    pub fn new(space: &RankSpace, data: &Dataset) -> Result<Self> {
        if data.r() != space.r() {
            return Err(Error::Dimension {
                expected: space.r(),
                got: data.r(),
            });
        }
        let mut slot = vec![usize::MAX; space.num_partials()];
        let mut groups: Vec<Group> = Vec::new();
        let mut obs_group = Vec::with_capacity(data.len());
        for (i, tau) in data.observations().iter().enumerate() {
            let p = space.partial_index(tau)?;
            if slot[p] == usize::MAX {
                slot[p] = groups.len();
                groups.push(Group {
                    partial: p,
                    t: tau.t(),
                    count: 0.0,
                    first_obs: i,
                });
            }
            groups[slot[p]].count += 1.0;
            obs_group.push(slot[p]);
        }
        Ok(GroupedData {
            n: data.len(),
            groups,
            obs_group,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_distinct(&self) -> usize {
        self.groups.len()
    }
}

/// Posterior weights from one E-step.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    k: usize,
    m: usize,
    // per group: weights laid out [k * |compat| + j]
    posteriors: Vec<Vec<f64>>,
    compat: Vec<Vec<u32>>,
    obs_group: Vec<usize>,
    q_table: Vec<f64>,
    cluster_mass: Vec<Vec<f64>>,
    neg_log_lik: f64,
}

impl Responsibilities {
    /// Aggregated `q[π][t]`, `r!` rows of `r - 1`.
    pub fn q_table(&self) -> &[f64] {
        &self.q_table
    }

    /// `Σ_i Σ_π q_{i,k,π}` resolved per vertex: `[k][v]`.
    pub fn cluster_mass(&self) -> &[Vec<f64>] {
        &self.cluster_mass
    }

    /// Observed-data negative log-likelihood at the parameters of this E-step.
    pub fn neg_log_likelihood(&self) -> f64 {
        self.neg_log_lik
    }

    pub fn num_observations(&self) -> usize {
        self.obs_group.len()
    }

    /// Nonzero `(vertex, cluster, q)` for observation `i`.
    pub fn observation(&self, i: usize) -> Vec<(usize, usize, f64)> {
        let g = self.obs_group[i];
        let compat = &self.compat[g];
        let post = &self.posteriors[g];
        (0..self.k)
            .flat_map(|k| compat.iter().enumerate().map(move |(j, &v)| (v as usize, k, post[k * compat.len() + j])))
            .filter(|&(_, _, q)| q > 0.0)
            .collect()
    }

    /// Per-observation cluster posteriors.
    pub fn cluster_posteriors(&self) -> Vec<Vec<f64>> {
        let per_group: Vec<Vec<f64>> = self
            .posteriors
            .iter()
            .zip(&self.compat)
            .map(|(post, compat)| (0..self.k).map(|k| post[k * compat.len()..(k + 1) * compat.len()].iter().sum()).collect())
            .collect();
        self.obs_group.iter().map(|&g| per_group[g].clone()).collect()
    }

    /// `Σ_{π,t} q[π][t]`, equal to the number of observations.
    pub fn total_mass(&self) -> f64 {
        self.q_table.iter().sum()
    }

    pub fn num_lengths(&self) -> usize {
        self.m
    }
}

/// E-step at `(θ, φ)`.
pub fn e_step(space: &RankSpace, theta: &MixtureParams, phi: &MissingTable, data: &Dataset) -> Result<Responsibilities> {
    let grouped = GroupedData::new(space, data)?;
    e_step_grouped(space, theta, phi, &grouped)
}

fn check_phi(space: &RankSpace, phi: &MissingTable) -> Result<()> {
    if phi.r() != space.r() || phi.num_rows() != space.num_vertices() {
        return Err(Error::Dimension {
            expected: space.num_vertices() * space.num_lengths(),
            got: phi.as_flat().len(),
        });
    }
    Ok(())
}

pub fn e_step_grouped(
    space: &RankSpace,
    theta: &MixtureParams,
    phi: &MissingTable,
    data: &GroupedData,
) -> Result<Responsibilities> {
    check_phi(space, phi)?;
    let table = joint_log_table(space, theta)?;
    let k = theta.k();
    let m = space.num_lengths();
    let nv = space.num_vertices();
    let mut posteriors = Vec::with_capacity(data.groups.len());
    let mut compat_lists = Vec::with_capacity(data.groups.len());
    let mut q_table = vec![0.0; nv * m];
    let mut cluster_mass = vec![vec![0.0; nv]; k];
    let mut nll = 0.0;
    for g in &data.groups {
        let compat = space.compatible_vertices(g.partial);
        let len = compat.len();
        let mut w = vec![f64::NEG_INFINITY; k * len];
        for (kk, row) in table.iter().enumerate() {
            for (j, &v) in compat.iter().enumerate() {
                let p = phi.get(v as usize, g.t);
                if p > 0.0 {
                    w[kk * len + j] = row[v as usize] + p.ln();
                }
            }
        }
        let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(Error::DegenerateLikelihood { observation: g.first_obs });
        }
        let mut total = 0.0;
        for x in &mut w {
            *x = (*x - top).exp();
            total += *x;
        }
        for x in &mut w {
            *x /= total;
        }
        nll -= g.count * (top + total.ln());
        for kk in 0..k {
            for (j, &v) in compat.iter().enumerate() {
                let mass = g.count * w[kk * len + j];
                q_table[v as usize * m + g.t - 1] += mass;
                cluster_mass[kk][v as usize] += mass;
            }
        }
        posteriors.push(w);
        compat_lists.push(compat.to_vec());
    }
    Ok(Responsibilities {
        k,
        m,
        posteriors,
        compat: compat_lists,
        obs_group: data.obs_group.clone(),
        q_table,
        cluster_mass,
        neg_log_lik: nll,
    })
}

/// Negative log-likelihood of the observed data.
pub fn neg_log_likelihood(space: &RankSpace, data: &Dataset, theta: &MixtureParams, phi: &MissingTable) -> Result<f64> {
    Ok(e_step(space, theta, phi, data)?.neg_log_likelihood())
}

/// Negative log-likelihood plus `λ Σ_E ‖φ_π - φ_π'‖²`.
pub fn penalized_objective(
    space: &RankSpace,
    data: &Dataset,
    theta: &MixtureParams,
    phi: &MissingTable,
    lambda: f64,
) -> Result<f64> {
    let pen = graph_penalty(phi.as_flat(), space.graph(), space.num_lengths());
    Ok(neg_log_likelihood(space, data, theta, phi)? + lambda * pen)
}

/// Vertex minimizing `Σ_v mass[v] d(v, s)`; ties go to the smallest index.
pub fn location_argmin(space: &RankSpace, mass: &[f64], exec: Execution) -> usize {
    let support: Vec<(usize, f64)> = mass.iter().copied().enumerate().filter(|&(_, w)| w > 0.0).collect();
    let cost = exec::map_range(exec, space.num_vertices(), |s| {
        support.iter().map(|&(v, w)| w * space.distance(v, s) as f64).sum::<f64>()
    });
    let best = cost.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = TIE_TOL * best.abs().max(1.0);
    cost.iter().position(|&c| c <= best + slack).expect("nonempty")
}

/// `c ↦ c·mean_distance + log Z(c)`, the per-observation concentration
/// objective.
pub fn concentration_objective(c: f64, mean_distance: f64, r: usize) -> f64 {
    c * mean_distance + log_normalizer(c, r).expect("c > 0")
}

/// Minimizes [`concentration_objective`] on `[C_MIN, C_MAX]` by golden
/// section; the objective is convex in `c`.
pub fn fit_concentration(mean_distance: f64, r: usize) -> f64 {
    let f = |c: f64| concentration_objective(c, mean_distance, r);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (C_MIN, C_MAX);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > GOLDEN_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (a + b);
    [(mid, f(mid)), (C_MIN, f(C_MIN)), (C_MAX, f(C_MAX))]
        .into_iter()
        .fold((mid, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
        .0
}

/// Exact mixture refit from aggregated responsibilities.
pub fn m_step_theta(space: &RankSpace, resp: &Responsibilities, exec: Execution) -> Result<MixtureParams> {
    let n: f64 = resp.cluster_mass.iter().map(|row| row.iter().sum::<f64>()).sum();
    let mut components = Vec::with_capacity(resp.k);
    let mut weights = Vec::with_capacity(resp.k);
    for (k, mass) in resp.cluster_mass.iter().enumerate() {
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateCluster { cluster: k });
        }
        let s = location_argmin(space, mass, exec);
        let mean_d = mass
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w > 0.0)
            .map(|(v, &w)| w * space.distance(v, s) as f64)
            .sum::<f64>()
            / total;
        let c = fit_concentration(mean_d, space.r());
        components.push(MallowsParams::new(space.vertex(s).clone(), c)?);
        weights.push(total / n);
    }
    // exact renormalization so the weights pass the simplex check
    let wsum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= wsum);
    MixtureParams::new(components, weights)
}

/// Row-wise `q[π][t] / Σ_t' q[π][t']`, uniform where a row has no mass.
pub fn closed_form_phi(space: &RankSpace, q: &[f64]) -> MissingTable {
    let m = space.num_lengths();
    let mut probs = Vec::with_capacity(q.len());
    for row in q.chunks(m) {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            probs.extend(row.iter().map(|&x| x / s));
        } else {
            probs.extend(std::iter::repeat_n(1.0 / m as f64, m));
        }
    }
    MissingTable::from_flat_unchecked(space.r(), probs)
}

/// Which estimator a fit represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    /// Graph-regularized (`λ > 0`) or unregularized (`λ = 0`) non-ignorable model.
    NonIgnorable,
    /// Homogeneous missing probabilities (MAR).
    MissingAtRandom,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub estimator: Estimator,
    pub theta: MixtureParams,
    pub phi: MissingTable,
    /// Final penalized objective.
    pub objective: f64,
    pub neg_log_likelihood: f64,
    /// Objective per EM iteration once location transitions are over.
    pub trace: Vec<f64>,
    /// Objective per iteration during the transition phase.
    pub transition_trace: Vec<f64>,
    pub restart: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Per-observation cluster posteriors at the returned parameters.
    pub posteriors: Vec<Vec<f64>>,
    pub config: FitConfig,
}

enum PhiStep<'a> {
    Admm(AdmmOptions),
    ClosedForm,
    Fixed(&'a MissingTable),
}

/// The proposed estimator: `λ > 0` runs the ADMM φ-step, `λ = 0` the
/// unregularized closed form.
pub fn fit(space: &RankSpace, data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let step = if config.lambda > 0.0 {
        PhiStep::Admm(config.admm_options())
    } else {
        PhiStep::ClosedForm
    };
    run(space, data, config, step, Estimator::NonIgnorable)
}

/// MAR baseline: the missing table is the empirical length histogram copied
/// to every row; θ maximizes the marginal likelihood of the observed prefixes.
pub fn fit_me(space: &RankSpace, data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if data.r() != space.r() {
        return Err(Error::Dimension {
            expected: space.r(),
            got: data.r(),
        });
    }
    let phi = MissingTable::from_flat_unchecked(
        space.r(),
        std::iter::repeat_n(data.length_histogram(), space.num_vertices()).flatten().collect(),
    );
    let cfg = FitConfig {
        lambda: 0.0,
        ..config.clone()
    };
    run(space, data, &cfg, PhiStep::Fixed(&phi), Estimator::MissingAtRandom)
}

struct RestartOutcome {
    theta: MixtureParams,
    phi: MissingTable,
    resp: Responsibilities,
    objectives: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn run(space: &RankSpace, data: &Dataset, config: &FitConfig, step: PhiStep<'_>, estimator: Estimator) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::Domain("cannot fit an empty dataset".into()));
    }
    let grouped = GroupedData::new(space, data)?;
    let starts = initial_locations(space, config);
    let outcomes = exec::map_range(config.execution, config.restarts, |j| {
        run_restart(space, &grouped, config, &step, &starts[j], j)
    });

    let mut best: Option<(usize, RestartOutcome)> = None;
    let mut first_err = None;
    for (j, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(o) => {
                let better = match &best {
                    None => true,
                    Some((_, b)) => last(&o.objectives) < last(&b.objectives),
                };
                if better {
                    best = Some((j, o));
                }
            }
            Err(e) => {
                log::warn!("restart {j} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let (restart, o) = match best {
        Some(b) => b,
        None => return Err(first_err.expect("at least one restart ran")),
    };
    let split = config.transition_iters.min(o.objectives.len() - 1);
    let lambda = if matches!(step, PhiStep::Admm(_)) { config.lambda } else { 0.0 };
    Ok(FitResult {
        estimator,
        objective: last(&o.objectives),
        neg_log_likelihood: o.resp.neg_log_likelihood(),
        trace: o.objectives[split..].to_vec(),
        transition_trace: o.objectives[..split].to_vec(),
        restart,
        iterations: o.iterations,
        converged: o.converged,
        posteriors: o.resp.cluster_posteriors(),
        theta: o.theta,
        phi: o.phi,
        config: FitConfig {
            lambda,
            ..config.clone()
        },
    })
}

fn last(v: &[f64]) -> f64 {
    *v.last().expect("objective history is never empty")
}

/// `K` distinct starting locations per restart, distinct across restarts
/// while `S_r` has room.
fn initial_locations(space: &RankSpace, config: &FitConfig) -> Vec<Vec<usize>> {
    let nv = space.num_vertices();
    let mut rng = seed::rng(config.seed, u64::MAX);
    let need = config.restarts * config.k;
    if need <= nv {
        let picks = sample(&mut rng, nv, need).into_vec();
        picks.chunks(config.k).map(<[usize]>::to_vec).collect()
    } else {
        (0..config.restarts)
            .map(|_| {
                if config.k <= nv {
                    sample(&mut rng, nv, config.k).into_vec()
                } else {
                    (0..config.k).map(|_| rng.random_range(0..nv)).collect()
                }
            })
            .collect()
    }
}

fn run_restart(
    space: &RankSpace,
    data: &GroupedData,
    config: &FitConfig,
    step: &PhiStep<'_>,
    start: &[usize],
    restart: usize,
) -> Result<RestartOutcome> {
    let mut rng = seed::rng(config.seed, restart as u64);
    let k = config.k;
    let components = start
        .iter()
        .map(|&v| MallowsParams::new(space.vertex(v).clone(), 1.0))
        .collect::<Result<Vec<_>>>()?;
    let mut theta = MixtureParams::new(components, vec![1.0 / k as f64; k])?;
    let mut phi = match step {
        PhiStep::Fixed(p) => (*p).clone(),
        _ => MissingTable::uniform(space),
    };
    let lambda = match step {
        PhiStep::Admm(o) => o.lambda,
        _ => 0.0,
    };
    let graph = space.graph();
    let m = space.num_lengths();
    let objective = |resp: &Responsibilities, phi: &MissingTable| {
        resp.neg_log_likelihood() + lambda * graph_penalty(phi.as_flat(), graph, m)
    };

    let mut resp = e_step_grouped(space, &theta, &phi, data)?;
    let mut objectives = vec![objective(&resp, &phi)];
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=config.em_max_iter {
        iterations = iter;
        theta = m_step_theta(space, &resp, config.execution)?;
        if iter <= config.transition_iters {
            theta = transit_locations(space, theta, &mut rng)?;
        }
        let q = resp.q_table();
        phi = match step {
            PhiStep::Fixed(_) => phi,
            PhiStep::ClosedForm => closed_form_phi(space, q),
            PhiStep::Admm(opts) => {
                let out = admm::solve_phi(q, graph, &phi, opts)?;
                // generalized EM: keep the previous table unless the inexact
                // solve actually improved the φ-step objective
                if phi_objective(q, out.phi.as_flat(), graph, lambda) <= phi_objective(q, phi.as_flat(), graph, lambda) {
                    out.phi
                } else {
                    phi
                }
            }
        };
        resp = e_step_grouped(space, &theta, &phi, data)?;
        let prev = last(&objectives);
        let cur = objective(&resp, &phi);
        objectives.push(cur);
        if iter > config.transition_iters && (prev - cur).abs() < config.em_tol {
            converged = true;
            break;
        }
    }
    Ok(RestartOutcome {
        theta,
        phi,
        resp,
        objectives,
        iterations,
        converged,
    })
}

/// Each location moves to a uniformly chosen Kendall neighbor with
/// probability one half.
fn transit_locations<R: Rng>(space: &RankSpace, theta: MixtureParams, rng: &mut R) -> Result<MixtureParams> {
    let components = theta
        .components()
        .iter()
        .map(|comp| {
            let jump: bool = rng.random_bool(0.5);
            let v = space.index_of(&comp.sigma)?;
            let nbrs = space.graph().neighbors(v);
            let pick = rng.random_range(0..nbrs.len());
            let sigma = if jump {
                space.vertex(nbrs[pick].0 as usize).clone()
            } else {
                comp.sigma.clone()
            };
            MallowsParams::new(sigma, comp.c)
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureParams::new(components, theta.weights().to_vec())
}

/// JSON form of a [`FitResult`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitRecord {
    pub estimator: Estimator,
    pub r: usize,
    pub theta: Vec<ComponentRecord>,
    /// Row `v` is the length distribution of the vertex with index `v`.
    pub phi: Vec<Vec<f64>>,
    pub objective: f64,
    pub neg_log_likelihood: f64,
    pub trace: Vec<f64>,
    pub transition_trace: Vec<f64>,
    pub restart: usize,
    pub iterations: usize,
    pub converged: bool,
    pub posteriors: Vec<Vec<f64>>,
    pub config: FitConfig,
}

impl FitResult {
    pub fn to_record(&self) -> FitRecord {
        FitRecord {
            estimator: self.estimator,
            r: self.phi.r(),
            theta: self.theta.to_records(),
            phi: self.phi.rows().map(<[f64]>::to_vec).collect(),
            objective: self.objective,
            neg_log_likelihood: self.neg_log_likelihood,
            trace: self.trace.clone(),
            transition_trace: self.transition_trace.clone(),
            restart: self.restart,
            iterations: self.iterations,
            converged: self.converged,
            posteriors: self.posteriors.clone(),
            config: self.config.clone(),
        }
    }

    pub fn from_record(space: &RankSpace, rec: &FitRecord) -> Result<Self> {
        if rec.r != space.r() {
            return Err(Error::Dimension {
                expected: space.r(),
                got: rec.r,
            });
        }
        Ok(FitResult {
            estimator: rec.estimator,
            theta: MixtureParams::from_records(&rec.theta)?,
            phi: MissingTable::from_rows(space, rec.phi.clone())?,
            objective: rec.objective,
            neg_log_likelihood: rec.neg_log_likelihood,
            trace: rec.trace.clone(),
            transition_trace: rec.transition_trace.clone(),
            restart: rec.restart,
            iterations: rec.iterations,
            converged: rec.converged,
            posteriors: rec.posteriors.clone(),
            config: rec.config.clone(),
        })
    }
}
