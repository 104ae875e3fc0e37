//! Graph-regularized M-step for the missing table.
//!
//! Minimizes
//!
//! ```text
//! -Σ_π Σ_t q[π][t] log φ[π][t] + λ Σ_{π~π'} ‖φ_π - φ_π'‖²
//! ```
//!
//! over rows on the probability simplex, by ADMM with one copy of `φ_π` per
//! incident edge slot. Each iteration is three sweeps separated by barriers:
//! vertex updates (closed form up to a scalar multiplier found by bisection),
//! edge updates (closed form), and the dual update.
//!
//! Slot layout: edge `e = (a, b)` owns slots `2e` (the copy held at `a`) and
//! `2e + 1` (the copy held at `b`), each `r - 1` wide.

use std::io::Write;

use crate::exec::{self, Execution};
use crate::missing::MissingTable;
use crate::permkit::CayleyGraph;
use crate::{Error, Result};

/// Penalty constant used when none is configured.
pub const DEFAULT_RHO: f64 = 1.0;

const BISECTION_MAX_STEPS: usize = 400;
const ROOT_TOL: f64 = 1e-14;
const ROOT_ACCEPT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    pub lambda: f64,
    pub rho: f64,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub max_iter: usize,
    pub execution: Execution,
    /// Keep one [`TraceRow`] per iteration.
    pub record_trace: bool,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        AdmmOptions {
            lambda: 10.0,
            rho: DEFAULT_RHO,
            primal_tol: 1.0,
            dual_tol: 1.0,
            max_iter: 100,
            execution: Execution::default(),
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub res_p: f64,
    pub res_d: f64,
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub phi: MissingTable,
    pub iterations: usize,
    pub converged: bool,
    pub res_p: f64,
    pub res_d: f64,
    pub trace: Vec<TraceRow>,
}

/// Value of the φ-step objective. Entries with `q = 0` contribute nothing
/// even at `φ = 0`; `q > 0` at `φ = 0` gives `+inf`.
pub fn phi_objective(q: &[f64], phi: &[f64], graph: &CayleyGraph, lambda: f64) -> f64 {
    let m = graph.r() - 1;
    let data: f64 = q
        .iter()
        .zip(phi)
        .map(|(&qt, &p)| if qt == 0.0 { 0.0 } else { -qt * p.ln() })
        .sum();
    data + lambda * graph_penalty(phi, graph, m)
}

/// `Σ_{π~π'} ‖φ_π - φ_π'‖²`
pub fn graph_penalty(phi: &[f64], graph: &CayleyGraph, m: usize) -> f64 {
    graph
        .edges()
        .iter()
        .map(|&(a, b)| sq_dist(&phi[a as usize * m..][..m], &phi[b as usize * m..][..m]))
        .sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mixing weight of the edge update: `(1 + ρ / (4λ + ρ)) / 2`.
pub fn edge_alpha(lambda: f64, rho: f64) -> f64 {
    0.5 * (1.0 + rho / (4.0 * lambda + rho))
}

/// Exact minimizer of `λ‖x - y‖² + (ρ/2)(‖a - x‖² + ‖b - y‖²)`.
pub fn edge_update(a: &[f64], b: &[f64], lambda: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let alpha = edge_alpha(lambda, rho);
    let x = a.iter().zip(b).map(|(&p, &q)| alpha * p + (1.0 - alpha) * q).collect();
    let y = a.iter().zip(b).map(|(&p, &q)| alpha * q + (1.0 - alpha) * p).collect();
    (x, y)
}

/// Minimizer over the simplex of
/// `-Σ_t q_t log φ_t + (ρ/2) Σ_{neighbors} ‖φ - ϕ + u‖²`, given
/// `y = ρ Σ_{neighbors} (u - ϕ)` and the vertex degree.
pub fn vertex_update(q: &[f64], y: &[f64], rho: f64, degree: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; q.len()];
    vertex_update_into(q, y, rho, degree, &mut out)?;
    Ok(out)
}

/// `φ_t(ν)` from the stationarity condition
/// `ρ d φ² + (y + ν) φ - q = 0`, positive root.
#[inline]
fn coordinate(q: f64, x: f64, rho_d: f64) -> f64 {
    if q == 0.0 {
        (-x).max(0.0) / rho_d
    } else if x <= 0.0 {
        ((x * x + 4.0 * rho_d * q).sqrt() - x) / (2.0 * rho_d)
    } else {
        // rationalized to avoid cancellation for large positive x
        2.0 * q / ((x * x + 4.0 * rho_d * q).sqrt() + x)
    }
}

/// `s(ν) = Σ_t φ_t(ν) - 1`, strictly decreasing in `ν`.
fn excess(q: &[f64], y: &[f64], nu: f64, rho_d: f64) -> f64 {
    q.iter().zip(y).map(|(&qt, &yt)| coordinate(qt, yt + nu, rho_d)).sum::<f64>() - 1.0
}

pub(crate) fn vertex_update_into(
    q: &[f64],
    y: &[f64],
    rho: f64,
    degree: usize,
    out: &mut [f64],
) -> Result<()> {
    if !(rho > 0.0) || degree == 0 {
        return Err(Error::Domain(format!("need rho > 0 and degree > 0, got {rho}, {degree}")));
    }
    let rho_d = rho * degree as f64;
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let q_sum: f64 = q.iter().sum();

    let mut lo = -y_max - rho_d;
    let mut hi = q_sum - y_min;
    let mut width = (hi - lo).abs().max(1.0);
    while excess(q, y, lo, rho_d) < 0.0 {
        lo -= width;
        width *= 2.0;
    }
    while excess(q, y, hi, rho_d) > 0.0 {
        hi += width;
        width *= 2.0;
    }
    debug_assert!(excess(q, y, lo, rho_d) >= 0.0 && excess(q, y, hi, rho_d) <= 0.0);

    let mut nu = 0.5 * (lo + hi);
    let mut s = excess(q, y, nu, rho_d);
    for _ in 0..BISECTION_MAX_STEPS {
        if s.abs() <= ROOT_TOL {
            break;
        }
        if s > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        nu = mid;
        s = excess(q, y, nu, rho_d);
    }
    if !(s.abs() <= ROOT_ACCEPT) {
        return Err(Error::Numeric(format!(
            "multiplier bisection stalled with residual {s:e}"
        )));
    }
    for ((o, &qt), &yt) in out.iter_mut().zip(q).zip(y) {
        *o = coordinate(qt, yt + nu, rho_d);
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|o| *o /= total);
    Ok(())
}

/// Primal, copy and dual variables of one φ-step.
#[derive(Debug, Clone)]
pub struct AdmmState {
    m: usize,
    phi: Vec<f64>,
    copies: Vec<f64>,
    duals: Vec<f64>,
    pub iteration: usize,
    pub res_p: f64,
    pub res_d: f64,
}

impl AdmmState {
    /// Copies start at the endpoint rows of `phi0`, duals at zero.
    pub fn new(graph: &CayleyGraph, phi0: &MissingTable) -> Result<Self> {
        let m = graph.r() - 1;
        if phi0.r() != graph.r() || phi0.num_rows() != graph.num_vertices() {
            return Err(Error::Dimension {
                expected: graph.num_vertices() * m,
                got: phi0.as_flat().len(),
            });
        }
        let phi = phi0.as_flat().to_vec();
        let mut copies = Vec::with_capacity(2 * graph.num_edges() * m);
        for &(a, b) in graph.edges() {
            copies.extend_from_slice(phi0.row(a as usize));
            copies.extend_from_slice(phi0.row(b as usize));
        }
        let duals = vec![0.0; copies.len()];
        Ok(AdmmState {
            m,
            phi,
            copies,
            duals,
            iteration: 0,
            res_p: f64::INFINITY,
            res_d: f64::INFINITY,
        })
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn copies(&self) -> &[f64] {
        &self.copies
    }

    pub fn duals(&self) -> &[f64] {
        &self.duals
    }

    pub fn num_slots(&self) -> usize {
        self.copies.len() / self.m
    }

    fn slot_of(graph: &CayleyGraph, v: usize, edge: u32) -> usize {
        let (a, _) = graph.edges()[edge as usize];
        2 * edge as usize + usize::from(a as usize != v)
    }

    /// Exact minimization over φ with copies and duals fixed.
    pub fn vertex_sweep(&mut self, graph: &CayleyGraph, q: &[f64], rho: f64, exec: Execution) -> Result<()> {
        let m = self.m;
        let copies = &self.copies;
        let duals = &self.duals;
        let results = exec::map_chunks_mut(exec, &mut self.phi, m, |v, row| {
            let mut y = vec![0.0; m];
            for &(_, e) in graph.neighbors(v) {
                let s = Self::slot_of(graph, v, e) * m;
                for t in 0..m {
                    y[t] += duals[s + t] - copies[s + t];
                }
            }
            y.iter_mut().for_each(|yt| *yt *= rho);
            vertex_update_into(&q[v * m..(v + 1) * m], &y, rho, graph.degree(v), row)
        });
        results.into_iter().collect()
    }

    /// Exact minimization over the copies; returns `‖ϕ_new - ϕ_old‖`.
    pub fn edge_sweep(&mut self, graph: &CayleyGraph, lambda: f64, rho: f64, exec: Execution) -> f64 {
        let m = self.m;
        let phi = &self.phi;
        let duals = &self.duals;
        let alpha = edge_alpha(lambda, rho);
        let partial = exec::map_chunks_mut(exec, &mut self.copies, 2 * m, |e, pair| {
            let (a, b) = graph.edges()[e];
            let (pa, pb) = (&phi[a as usize * m..][..m], &phi[b as usize * m..][..m]);
            let (ua, ub) = (&duals[2 * e * m..][..m], &duals[(2 * e + 1) * m..][..m]);
            let mut moved = 0.0;
            for t in 0..m {
                let sa = pa[t] + ua[t];
                let sb = pb[t] + ub[t];
                let na = alpha * sa + (1.0 - alpha) * sb;
                let nb = alpha * sb + (1.0 - alpha) * sa;
                moved += (na - pair[t]).powi(2) + (nb - pair[m + t]).powi(2);
                pair[t] = na;
                pair[m + t] = nb;
            }
            moved
        });
        exec::sum(&partial).sqrt()
    }

    /// `u += φ - ϕ`; returns the primal residual `‖φ - ϕ‖` over all slots.
    pub fn dual_update(&mut self, graph: &CayleyGraph, exec: Execution) -> f64 {
        let m = self.m;
        let phi = &self.phi;
        let copies = &self.copies;
        let partial = exec::map_chunks_mut(exec, &mut self.duals, 2 * m, |e, pair| {
            let (a, b) = graph.edges()[e];
            let mut gap = 0.0;
            for (side, v) in [a, b].into_iter().enumerate() {
                let row = &phi[v as usize * m..][..m];
                let copy = &copies[(2 * e + side) * m..][..m];
                for t in 0..m {
                    let d = row[t] - copy[t];
                    pair[side * m + t] += d;
                    gap += d * d;
                }
            }
            gap
        });
        exec::sum(&partial).sqrt()
    }

    /// The augmented Lagrangian at the current `(φ, ϕ, u)`.
    pub fn augmented_lagrangian(&self, graph: &CayleyGraph, q: &[f64], lambda: f64, rho: f64) -> f64 {
        let m = self.m;
        let data: f64 = q
            .iter()
            .zip(&self.phi)
            .map(|(&qt, &p)| if qt == 0.0 { 0.0 } else { -qt * p.ln() })
            .sum();
        let mut coupling = 0.0;
        for (e, &(a, b)) in graph.edges().iter().enumerate() {
            let ca = &self.copies[2 * e * m..][..m];
            let cb = &self.copies[(2 * e + 1) * m..][..m];
            let ua = &self.duals[2 * e * m..][..m];
            let ub = &self.duals[(2 * e + 1) * m..][..m];
            let pa = &self.phi[a as usize * m..][..m];
            let pb = &self.phi[b as usize * m..][..m];
            coupling += lambda * sq_dist(ca, cb);
            for t in 0..m {
                coupling -= 0.5 * rho * (ua[t] * ua[t] + ub[t] * ub[t]);
                coupling += 0.5 * rho * ((pa[t] - ca[t] + ua[t]).powi(2) + (pb[t] - cb[t] + ub[t]).powi(2));
            }
        }
        data + coupling
    }

    /// One full iteration; updates the residual fields.
    pub fn step(&mut self, graph: &CayleyGraph, q: &[f64], lambda: f64, rho: f64, exec: Execution) -> Result<()> {
        self.vertex_sweep(graph, q, rho, exec)?;
        self.res_d = self.edge_sweep(graph, lambda, rho, exec);
        self.res_p = self.dual_update(graph, exec);
        self.iteration += 1;
        Ok(())
    }
}

/// Runs ADMM from `phi0` until both residuals drop below their tolerances or
/// `max_iter` iterations have run. `q` is the aggregated responsibility
/// table, `r!` rows of `r - 1`.
pub fn solve_phi(q: &[f64], graph: &CayleyGraph, phi0: &MissingTable, opts: &AdmmOptions) -> Result<AdmmOutcome> {
    let m = graph.r() - 1;
    if q.len() != graph.num_vertices() * m {
        return Err(Error::Dimension {
            expected: graph.num_vertices() * m,
            got: q.len(),
        });
    }
    if !(opts.lambda >= 0.0) || !(opts.rho > 0.0) {
        return Err(Error::Domain(format!(
            "need lambda >= 0 and rho > 0, got {} and {}",
            opts.lambda, opts.rho
        )));
    }
    if q.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain("responsibility table must be finite and nonnegative".into()));
    }
    let mut state = AdmmState::new(graph, phi0)?;
    let mut trace = Vec::new();
    let mut converged = false;
    while state.iteration < opts.max_iter {
        state.step(graph, q, opts.lambda, opts.rho, opts.execution)?;
        if opts.record_trace {
            trace.push(TraceRow {
                iter: state.iteration,
                objective: phi_objective(q, &state.phi, graph, opts.lambda),
                res_p: state.res_p,
                res_d: state.res_d,
            });
        }
        if state.res_p < opts.primal_tol && state.res_d < opts.dual_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!(
            "ADMM stopped at {} iterations (res_p={:e}, res_d={:e})",
            state.iteration,
            state.res_p,
            state.res_d
        );
    }
    Ok(AdmmOutcome {
        phi: MissingTable::from_flat_unchecked(graph.r(), state.phi),
        iterations: state.iteration,
        converged,
        res_p: state.res_p,
        res_d: state.res_d,
        trace,
    })
}

/// Writes `iter,objective,res_p,res_d`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut out: W) -> std::io::Result<()> {
    out.write_all(b"iter,objective,res_p,res_d\n")?;
    for row in trace {
        writeln!(out, "{},{},{},{}", row.iter, row.objective, row.res_p, row.res_d)?;
    }
    out.flush()
}
