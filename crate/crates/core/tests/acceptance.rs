//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 1 4`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toprank::admm::{phi_objective, solve_phi, AdmmOptions};
use toprank::emcore::{fit, FitConfig};
use toprank::eval::{run_experiment, summarize, write_report_csv, ExperimentSpec, Generator, LossReport, Method};
use toprank::mallows::{log_normalizer, pmf_table, MallowsParams, MixtureParams};
use toprank::missing::{generate_dataset, partial_distribution, tilt_concentration_mechanism, MissingTable};
use toprank::permkit::{CayleyGraph, Permutation, RankSpace};
use toprank::Execution;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_q(rng: &mut ChaCha8Rng, rows: usize, m: usize, zero_rows: bool) -> Vec<f64> {
    let mut q = vec![0.0; rows * m];
    for row in q.chunks_mut(m) {
        if zero_rows && rng.random_bool(0.25) {
            continue;
        }
        for x in row.iter_mut() {
            *x = rng.random_range(0.0..20.0);
        }
    }
    q
}

fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Spectral projected gradient with a nonmonotone line search on the φ-step
/// objective, stopped when the unit-step projected gradient falls below `tol`.
fn projected_gradient_oracle(q: &[f64], graph: &CayleyGraph, m: usize, lambda: f64, tol: f64) -> f64 {
    let n = graph.num_vertices();
    let mut phi = vec![1.0 / m as f64; n * m];
    let f = |p: &[f64]| phi_objective(q, p, graph, lambda);
    let grad = |p: &[f64]| {
        let mut g: Vec<f64> = q.iter().zip(p).map(|(&qi, &pi)| if qi > 0.0 { -qi / pi } else { 0.0 }).collect();
        for &(a, b) in graph.edges() {
            for t in 0..m {
                let d = 2.0 * lambda * (p[a as usize * m + t] - p[b as usize * m + t]);
                g[a as usize * m + t] += d;
                g[b as usize * m + t] -= d;
            }
        }
        g
    };
    let step_to = |p: &[f64], g: &[f64], s: f64| {
        let mut out = Vec::with_capacity(p.len());
        for v in 0..n {
            let row: Vec<f64> = (0..m).map(|t| p[v * m + t] - s * g[v * m + t]).collect();
            out.extend(project_simplex(&row));
        }
        out
    };
    let mut step = 1.0;
    let mut history: Vec<f64> = vec![f(&phi)];
    let mut g = grad(&phi);
    for _ in 0..1_000_000 {
        let unit = step_to(&phi, &g, 1.0);
        let mapping = unit.iter().zip(&phi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if mapping < tol {
            break;
        }
        let reference = history.iter().rev().take(10).copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = 1e-13 * reference.abs().max(1.0);
        let mut s = step;
        let (cand, fc) = loop {
            let cand = step_to(&phi, &g, s);
            let lin: f64 = g.iter().zip(cand.iter().zip(&phi)).map(|(gi, (c, p))| gi * (c - p)).sum();
            let fc = f(&cand);
            if fc.is_finite() && fc <= reference + 1e-4 * lin + slack {
                break (cand, fc);
            }
            s *= 0.5;
            if s < 1e-20 {
                return f(&phi);
            }
        };
        let g_new = grad(&cand);
        let ds: Vec<f64> = cand.iter().zip(&phi).map(|(a, b)| a - b).collect();
        let sy: f64 = ds.iter().zip(g_new.iter().zip(&g)).map(|(d, (a, b))| d * (a - b)).sum();
        let ss: f64 = ds.iter().map(|d| d * d).sum();
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e3 };
        phi = cand;
        g = g_new;
        history.push(fc);
    }
    f(&phi)
}

fn tight_admm(lambda: f64) -> AdmmOptions {
    AdmmOptions {
        lambda,
        rho: 1.0,
        primal_tol: 1e-10,
        dual_tol: 1e-10,
        max_iter: 200_000,
        execution: Execution::Sequential,
        record_trace: false,
    }
}

fn criterion_1() -> Outcome {
    let space = RankSpace::new(3).unwrap();
    let graph = space.graph();
    let m = space.num_lengths();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let q = random_q(&mut rng, 6, m, false);
        for lambda in [0.0, 1.0, 10.0] {
            let out = solve_phi(&q, graph, &MissingTable::uniform(&space), &tight_admm(lambda)).unwrap();
            let admm = phi_objective(&q, out.phi.as_flat(), graph, lambda);
            let oracle = projected_gradient_oracle(&q, graph, m, lambda, 1e-10);
            worst = worst.max(admm - oracle);
        }
    }
    outcome(worst <= 1e-4, format!("max(admm - oracle) = {worst:.3e}"))
}

fn criterion_2() -> Outcome {
    let space = RankSpace::new(4).unwrap();
    let m = space.num_lengths();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let q = random_q(&mut rng, 24, m, true);
        let out = solve_phi(&q, space.graph(), &MissingTable::uniform(&space), &tight_admm(0.0)).unwrap();
        for (v, row) in q.chunks(m).enumerate() {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                for (t, &q) in row.iter().enumerate().take(m) {
                    worst = worst.max((out.phi.row(v)[t] - q / s).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-6, format!("max |φ - q/Σq| = {worst:.3e}"))
}

fn criterion_3() -> Outcome {
    let space = RankSpace::new(4).unwrap();
    let theta = MixtureParams::single(Permutation::identity(4), 1.0).unwrap();
    let mech = tilt_concentration_mechanism(&space, 1.0, 1.2, 0.7, &Permutation::identity(4)).unwrap();
    let mut worst_rise = f64::NEG_INFINITY;
    let mut failures = 0;
    for s in 0..100u64 {
        let data = generate_dataset(&space, &theta, &mech.clone().into(), 200, 1000 + s).unwrap();
        let cfg = FitConfig {
            k: 1,
            lambda: 10.0,
            seed: s,
            ..FitConfig::default()
        };
        let res = fit(&space, &data, &cfg).unwrap();
        let rise = res.trace.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        if rise > 1e-8 {
            failures += 1;
        }
        worst_rise = worst_rise.max(rise);
    }
    let shown = if worst_rise == f64::NEG_INFINITY { 0.0 } else { worst_rise };
    outcome(failures == 0, format!("{failures}/100 traces rise; largest step {shown:.3e}"))
}

fn criterion_4() -> Outcome {
    let space = RankSpace::new(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let k = rng.random_range(1..=3);
        let comps = (0..k)
            .map(|_| {
                let v = rng.random_range(0..120);
                MallowsParams::new(space.vertex(v).clone(), rng.random_range(0.05..3.0)).unwrap()
            })
            .collect();
        let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let theta = MixtureParams::new(comps, w).unwrap();
        let rows = (0..120)
            .map(|_| {
                let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|x| x / s).collect()
            })
            .collect();
        let phi = MissingTable::from_rows(&space, rows).unwrap();
        let dist = partial_distribution(&space, &theta, &phi).unwrap();
        assert_eq!(dist.len(), 205);
        worst = worst.max((dist.iter().sum::<f64>() - 1.0).abs());
    }
    let g = space.graph();
    let degrees_ok = (0..g.num_vertices()).all(|v| g.degree(v) == 4);
    let pass = worst <= 1e-10 && space.num_partials() == 205 && g.num_vertices() == 120 && g.num_edges() == 240 && degrees_ok;
    outcome(
        pass,
        format!(
            "|S̄_5| = {}, max |Σ - 1| = {worst:.1e}, graph {} vertices / {} edges, all degree 4: {degrees_ok}",
            space.num_partials(),
            g.num_vertices(),
            g.num_edges()
        ),
    )
}

fn inversions(order: &[usize]) -> usize {
    (0..order.len()).map(|i| (i + 1..order.len()).filter(|&j| order[i] > order[j]).count()).sum()
}

fn all_orders(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_orders(r - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, r - 1);
            out.push(q);
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in 1..=7 {
        let dist: Vec<usize> = all_orders(r).iter().map(|o| inversions(o)).collect();
        for c in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let brute: f64 = dist.iter().map(|&d| (-c * d as f64).exp()).sum::<f64>().ln();
            worst = worst.max((log_normalizer(c, r).unwrap() - brute).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |log Z - brute force| = {worst:.3e}"))
}

fn criterion_6() -> Outcome {
    let space = RankSpace::new(4).unwrap();
    let sigma0 = Permutation::identity(4);
    let phi = tilt_concentration_mechanism(&space, 1.0, 1.2, 0.5, &sigma0).unwrap();
    let binding = phi.rows().filter(|row| row[2] >= 1.0).count();
    let base = pmf_table(&space, &MixtureParams::single(sigma0.clone(), 1.0).unwrap()).unwrap();
    let target = pmf_table(&space, &MixtureParams::single(sigma0, 1.2).unwrap()).unwrap();
    let joint: Vec<f64> = base.iter().enumerate().map(|(v, p)| p * phi.get(v, 3)).collect();
    let total: f64 = joint.iter().sum();
    let worst = joint.iter().zip(&target).map(|(j, t)| (j / total - t).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 1e-10 && binding == 0,
        format!("max deviation {worst:.3e}, binding rows {binding}"),
    )
}

fn concentration_spec(c_star: f64, execution: Execution) -> ExperimentSpec {
    ExperimentSpec {
        r: 5,
        n: 1000,
        replicates: 20,
        generator: Generator::TiltConcentration {
            c: 1.0,
            c_star,
            ratio: 0.7,
            sigma0: None,
        },
        methods: vec![Method::R { lambda: 10.0 }, Method::ME],
        fit: FitConfig::default(),
        seed: 7,
        execution,
    }
}

fn median_of(reports: &[LossReport], method: &str, class_err: bool) -> f64 {
    let summary = summarize(reports);
    let s = summary.iter().find(|s| s.method == method).expect("method present");
    if class_err {
        s.class_err.expect("classification error recorded").median
    } else {
        s.l_par.median
    }
}

fn criterion_7(space: &RankSpace, cache: &mut Option<Vec<LossReport>>) -> Outcome {
    let tilted = run_experiment(space, &concentration_spec(1.2, Execution::Parallel)).unwrap();
    let mar = run_experiment(space, &concentration_spec(1.0, Execution::Parallel)).unwrap();
    let (r_t, me_t) = (median_of(&tilted, "R10", false), median_of(&tilted, "ME", false));
    let (r_m, me_m) = (median_of(&mar, "R10", false), median_of(&mar, "ME", false));
    let pass = r_t < me_t && me_m <= r_m * 1.1;
    let mut all = tilted;
    all.extend(mar);
    *cache = Some(all);
    outcome(
        pass,
        format!("c*=1.2: median L_par R10 {r_t:.4} vs ME {me_t:.4}; c*=1.0: ME {me_m:.4} vs 1.1·R10 {:.4}", 1.1 * r_m),
    )
}

fn criterion_8(space: &RankSpace) -> Outcome {
    let spec = ExperimentSpec {
        r: 5,
        n: 1000,
        replicates: 20,
        generator: Generator::TiltMixture {
            sigmas: vec!["1>2>3>4>5".into(), "3>2>5>4>1".into()],
            c: vec![1.0, 1.0],
            w: vec![0.5, 0.5],
            w_star: vec![0.7, 0.3],
            ratio: 0.7,
        },
        methods: vec![Method::R { lambda: 10.0 }, Method::ME],
        fit: FitConfig::default(),
        seed: 8,
        execution: Execution::Parallel,
    };
    let reports = run_experiment(space, &spec).unwrap();
    let (r, me) = (median_of(&reports, "R10", true), median_of(&reports, "ME", true));
    outcome(r < me, format!("median classification error R10 {r:.4} vs ME {me:.4}"))
}

fn report_bytes(reports: &[LossReport]) -> (Vec<u8>, Vec<u8>) {
    let stripped: Vec<LossReport> = reports.iter().map(|r| LossReport { runtime_ms: 0, ..r.clone() }).collect();
    let mut csv = Vec::new();
    write_report_csv(&mut csv, &stripped).unwrap();
    let json = serde_json::to_vec_pretty(&summarize(reports)).unwrap();
    (csv, json)
}

fn criterion_9(space: &RankSpace, first: Option<Vec<LossReport>>) -> Outcome {
    let first = first.unwrap_or_else(|| {
        let mut v = run_experiment(space, &concentration_spec(1.2, Execution::Parallel)).unwrap();
        v.extend(run_experiment(space, &concentration_spec(1.0, Execution::Parallel)).unwrap());
        v
    });
    let mut parallel = run_experiment(space, &concentration_spec(1.2, Execution::Parallel)).unwrap();
    parallel.extend(run_experiment(space, &concentration_spec(1.0, Execution::Parallel)).unwrap());
    let mut sequential = run_experiment(space, &concentration_spec(1.2, Execution::Sequential)).unwrap();
    sequential.extend(run_experiment(space, &concentration_spec(1.0, Execution::Sequential)).unwrap());
    let a = report_bytes(&first);
    let same_parallel = a == report_bytes(&parallel);
    let same_sequential = a == report_bytes(&sequential);
    outcome(
        same_parallel && same_sequential,
        format!(
            "{} report bytes; rerun identical: {same_parallel}; sequential identical: {same_sequential}",
            a.0.len()
        ),
    )
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |i: usize| selected.is_empty() || selected.contains(&i);
    let space5 = RankSpace::new(5).unwrap();
    let mut cache = None;
    let mut failed = 0;
    for id in 1..=9 {
        if !wanted(id) {
            continue;
        }
        let start = Instant::now();
        let out = match id {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(&space5, &mut cache),
            8 => criterion_8(&space5),
            _ => criterion_9(&space5, cache.take()),
        };
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!("criterion {id}: {verdict} ({:.1} s) {}", start.elapsed().as_secs_f64(), out.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
