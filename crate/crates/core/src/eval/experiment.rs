use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{classification_error, cross_validate, l_comp, l_par};
use crate::emcore::{fit, fit_me, FitConfig, FitResult};
use crate::mallows::{MallowsParams, MixtureParams};
use crate::missing::{generate_dataset, tilt_concentration_mechanism, tilt_mixture_mechanism, Dataset, Mechanism};
use crate::permkit::{Permutation, RankSpace};
use crate::{exec, seed, Error, Execution, Result};

/// Simulation model: a Mallows (mixture) plus a tilting missing mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// Single Mallows(σ0, c) whose fully observed part looks like
    /// Mallows(σ0, c_star).
    TiltConcentration {
        c: f64,
        c_star: f64,
        ratio: f64,
        /// Defaults to the identity ranking.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma0: Option<String>,
    },
    /// Mallows mixture whose fully observed part has mixture weights `w_star`.
    TiltMixture {
        sigmas: Vec<String>,
        c: Vec<f64>,
        w: Vec<f64>,
        w_star: Vec<f64>,
        ratio: f64,
    },
}

impl Generator {
    pub fn truth(&self, space: &RankSpace) -> Result<(MixtureParams, Mechanism)> {
        let r = space.r();
        match self {
            Generator::TiltConcentration {
                c,
                c_star,
                ratio,
                sigma0,
            } => {
                let sigma = match sigma0 {
                    Some(s) => parse_full(s, r)?,
                    None => Permutation::identity(r),
                };
                let phi = tilt_concentration_mechanism(space, *c, *c_star, *ratio, &sigma)?;
                Ok((MixtureParams::single(sigma, *c)?, phi.into()))
            }
            Generator::TiltMixture {
                sigmas,
                c,
                w,
                w_star,
                ratio,
            } => {
                if sigmas.len() != c.len() || sigmas.len() != w.len() {
                    return Err(Error::Dimension {
                        expected: sigmas.len(),
                        got: if c.len() != sigmas.len() { c.len() } else { w.len() },
                    });
                }
                let components = sigmas
                    .iter()
                    .zip(c)
                    .map(|(s, &ck)| MallowsParams::new(parse_full(s, r)?, ck))
                    .collect::<Result<Vec<_>>>()?;
                let theta = MixtureParams::new(components, w.clone())?;
                let spec = tilt_mixture_mechanism(w, w_star, *ratio, r)?;
                Ok((theta, spec.into()))
            }
        }
    }

    /// Number of mixture components of the generating model.
    pub fn k(&self) -> usize {
        match self {
            Generator::TiltConcentration { .. } => 1,
            Generator::TiltMixture { sigmas, .. } => sigmas.len(),
        }
    }

    /// Short label of the varied parameter, e.g. `c_star=1.2`.
    pub fn param_label(&self) -> String {
        match self {
            Generator::TiltConcentration { c_star, .. } => format!("c_star={c_star}"),
            Generator::TiltMixture { w_star, .. } => format!("w_star1={}", w_star.first().copied().unwrap_or(f64::NAN)),
        }
    }
}

fn parse_full(s: &str, r: usize) -> Result<Permutation> {
    let p: Permutation = s.parse()?;
    if p.len() != r {
        return Err(Error::Dimension { expected: r, got: p.len() });
    }
    Ok(p)
}

/// Estimator compared in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Method {
    /// Graph-regularized fit at a fixed `λ`.
    R { lambda: f64 },
    /// `λ` chosen by two-fold cross-validation.
    RCV { grid: Vec<f64> },
    /// Unregularized non-ignorable fit (`λ = 0`).
    NR,
    /// Homogeneous (MAR) missing model.
    ME,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::R { lambda } => format!("R{lambda}"),
            Method::RCV { .. } => "RCV".into(),
            Method::NR => "NR".into(),
            Method::ME => "ME".into(),
        }
    }

    pub fn fit(&self, space: &RankSpace, data: &Dataset, config: &FitConfig) -> Result<FitResult> {
        match self {
            Method::R { lambda } => fit(space, data, &FitConfig { lambda: *lambda, ..config.clone() }),
            Method::NR => fit(space, data, &FitConfig { lambda: 0.0, ..config.clone() }),
            Method::ME => fit_me(space, data, config),
            Method::RCV { grid } => Ok(cross_validate(space, data, grid, config)?.fit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub r: usize,
    pub n: usize,
    pub replicates: usize,
    pub generator: Generator,
    pub methods: Vec<Method>,
    /// Base fit settings; `k` is taken from the generator and `seed` is
    /// derived per replicate.
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub seed: u64,
    /// How replicates are scheduled.
    #[serde(default)]
    pub execution: Execution,
}

impl ExperimentSpec {
    /// Dataset seed of replicate `j` (0-based).
    pub fn data_seed(&self, j: usize) -> u64 {
        seed::derive(self.seed, 2 * j as u64)
    }

    /// Fit seed of replicate `j` (0-based).
    pub fn fit_seed(&self, j: usize) -> u64 {
        seed::derive(self.seed, 2 * j as u64 + 1)
    }

    pub fn dataset(&self, space: &RankSpace, j: usize) -> Result<Dataset> {
        let (theta, mech) = self.generator.truth(space)?;
        generate_dataset(space, &theta, &mech, self.n, self.data_seed(j))
    }
}

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub method: String,
    /// 1-based replicate id.
    pub replicate: usize,
    pub param: String,
    pub l_par: f64,
    /// Absent when the true complete-ranking model is unknown.
    pub l_comp: Option<f64>,
    pub class_err: Option<f64>,
    /// Wall-clock fit time; the only nondeterministic field.
    pub runtime_ms: u64,
}

/// Runs every method on every replicate. Reports are ordered by replicate,
/// then by method.
pub fn run_experiment(space: &RankSpace, spec: &ExperimentSpec) -> Result<Vec<LossReport>> {
    if spec.r != space.r() {
        return Err(Error::Dimension {
            expected: space.r(),
            got: spec.r,
        });
    }
    if spec.methods.is_empty() {
        return Err(Error::Domain("no methods to compare".into()));
    }
    let (theta, mech) = spec.generator.truth(space)?;
    let k = spec.generator.k();
    let param = spec.generator.param_label();
    let per_rep = exec::map_range(spec.execution, spec.replicates, |j| -> Result<Vec<LossReport>> {
        let data = generate_dataset(space, &theta, &mech, spec.n, spec.data_seed(j))?;
        let cfg = FitConfig {
            k,
            seed: spec.fit_seed(j),
            ..spec.fit.clone()
        };
        let truth = data.true_clusters();
        spec.methods
            .iter()
            .map(|method| {
                let start = Instant::now();
                let fitted = method.fit(space, &data, &cfg)?;
                let runtime_ms = start.elapsed().as_millis() as u64;
                let class_err = match (&truth, k > 1) {
                    (Some(t), true) => Some(classification_error(t, &fitted.posteriors)?),
                    _ => None,
                };
                log::debug!("replicate {} {} done in {runtime_ms} ms", j + 1, method.label());
                Ok(LossReport {
                    method: method.label(),
                    replicate: j + 1,
                    param: param.clone(),
                    l_par: l_par(space, &theta, &mech, &fitted.theta, &fitted.phi)?,
                    l_comp: Some(l_comp(space, &theta, &fitted.theta)?),
                    class_err,
                    runtime_ms,
                })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(spec.replicates * spec.methods.len());
    for rep in per_rep {
        out.extend(rep?);
    }
    Ok(out)
}

/// Writes `method,replicate,param,l_par,l_comp,class_err,runtime_ms`.
pub fn write_report_csv<W: Write>(out: W, reports: &[LossReport]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["method", "replicate", "param", "l_par", "l_comp", "class_err", "runtime_ms"])?;
    for rep in reports {
        w.write_record([
            rep.method.clone(),
            rep.replicate.to_string(),
            rep.param.clone(),
            rep.l_par.to_string(),
            rep.l_comp.map(|e| e.to_string()).unwrap_or_default(),
            rep.class_err.map(|e| e.to_string()).unwrap_or_default(),
            rep.runtime_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Some(Quartiles {
        min: v[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub param: String,
    pub method: String,
    pub count: usize,
    pub l_par: Quartiles,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_comp: Option<Quartiles>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_err: Option<Quartiles>,
}

/// Quartiles per `(param, method)`, in order of first appearance.
pub fn summarize(reports: &[LossReport]) -> Vec<MethodSummary> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in reports {
        let key = (r.param.as_str(), r.method.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(param, method)| {
            let rows: Vec<&LossReport> = reports.iter().filter(|r| r.param == param && r.method == method).collect();
                        let comps: Vec<f64> = rows.iter().filter_map(|r| r.l_comp).collect();
            let errs: Vec<f64> = rows.iter().filter_map(|r| r.class_err).collect();
            MethodSummary {
                param: param.to_string(),
                method: method.to_string(),
                count: rows.len(),
                l_par: quartiles(&rows.iter().map(|r| r.l_par).collect::<Vec<_>>()).expect("group is nonempty"),
                l_comp: quartiles(&comps),
                class_err: quartiles(&errs),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartile_interpolation() {
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 1.75, 2.5, 3.25, 4.0));
        assert_eq!(quartiles(&[7.0]).unwrap().median, 7.0);
        assert!(quartiles(&[]).is_none());
    }

    #[test]
    fn labels() {
        assert_eq!(Method::R { lambda: 10.0 }.label(), "R10");
        assert_eq!(Method::R { lambda: 0.5 }.label(), "R0.5");
        assert_eq!(Method::ME.label(), "ME");
        let g = Generator::TiltConcentration {
            c: 1.0,
            c_star: 1.2,
            ratio: 0.7,
            sigma0: None,
        };
        assert_eq!(g.param_label(), "c_star=1.2");
    }

    #[test]
    fn spec_json_shape() {
        let json = r#"{
            "r": 4, "n": 60, "replicates": 2, "seed": 9,
            "generator": {"kind": "tilt-mixture", "sigmas": ["1>2>3>4", "3>2>4>1"],
                          "c": [1, 1], "w": [0.5, 0.5], "w_star": [0.7, 0.3], "ratio": 0.7},
            "methods": [{"kind": "R", "lambda": 10}, {"kind": "ME"}, {"kind": "RCV", "grid": [1, 10]}],
            "fit": {"restarts": 2, "em_max_iter": 10}
        }"#;
        let spec: ExperimentSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.generator.k(), 2);
        assert_eq!(spec.methods[2], Method::RCV { grid: vec![1.0, 10.0] });
        assert_eq!(spec.fit.lambda, FitConfig::default().lambda);
    }

    #[test]
    fn small_experiment_is_deterministic() {
        let space = RankSpace::new(4).unwrap();
        let spec = ExperimentSpec {
            r: 4,
            n: 80,
            replicates: 3,
            generator: Generator::TiltMixture {
                sigmas: vec!["1>2>3>4".into(), "4>3>2>1".into()],
                c: vec![1.0, 1.0],
                w: vec![0.5, 0.5],
                w_star: vec![0.7, 0.3],
                ratio: 0.7,
            },
            methods: vec![Method::R { lambda: 10.0 }, Method::ME],
            fit: FitConfig {
                restarts: 2,
                em_max_iter: 15,
                ..FitConfig::default()
            },
            seed: 4,
            execution: Execution::Parallel,
        };
        let a = run_experiment(&space, &spec).unwrap();
        let b = run_experiment(&space, &sequential(&spec)).unwrap();
        assert_eq!(a.len(), 6);
        let strip = |v: &[LossReport]| v.iter().map(|r| LossReport { runtime_ms: 0, ..r.clone() }).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert!(a.iter().all(|r| r.class_err.is_some()));
        let summary = summarize(&a);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].method, "R10");
        assert_eq!(summary[0].count, 3);
    }

    fn sequential(spec: &ExperimentSpec) -> ExperimentSpec {
        ExperimentSpec {
            execution: Execution::Sequential,
            fit: FitConfig {
                execution: Execution::Sequential,
                ..spec.fit.clone()
            },
            ..spec.clone()
        }
    }
}
