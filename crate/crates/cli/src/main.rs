mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use toprank::emcore::{FitRecord, FitResult};
use toprank::eval::{
    classification_error, cross_validate, l_comp, l_par, l_par_empirical, run_experiment, summarize,
    write_report_csv, CvScore, ExperimentSpec, LossReport, Method,
};
use toprank::missing::{read_dataset, Dataset};
use toprank::permkit::RankSpace;
use toprank::{exec, seed, Execution};

use config::{Command, RunConfig, SplitSpec};
use error::CliError;

/// Ranking-distribution estimation from top-t partial rankings.
#[derive(Debug, Parser)]
#[command(name = "toprank", version)]
struct Cli {
    /// Command to run; defaults to the `command` field of the config.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config item count.
    #[arg(long)]
    r: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

/// FitResult JSON: the estimator record plus the method label.
#[derive(Debug, Serialize, Deserialize)]
struct FitOutput {
    method: String,
    #[serde(flatten)]
    record: FitRecord,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code().1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(out) = cli.out {
        cfg.output = Some(out);
    }
    if let Some(r) = cli.r {
        cfg.r = Some(r);
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    let command = cli
        .command
        .or(cfg.command)
        .ok_or_else(|| CliError::Config("no command given on the command line or in the config".into()))?;
    cfg.validate_paths()?;
    let jobs = cfg.jobs.unwrap_or(0);
    if jobs == 1 {
        cfg.fit.execution = Execution::Sequential;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| dispatch(command, &cfg))
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Simulate => simulate(cfg),
        Command::Fit => fit(cfg),
        Command::Eval => eval(cfg),
        Command::Cv => cv(cfg),
        Command::Experiment => experiment(cfg),
        Command::Graph => graph(cfg),
        Command::Split => split(cfg),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w).map_err(|e| CliError::io(path, e))
    })
}

fn write_data(path: &Path, data: &Dataset) -> Result<(), CliError> {
    write_atomic(path, |w| Ok(data.write_csv(w)?))
}

fn load_data(cfg: &RunConfig, space: &RankSpace) -> Result<Dataset, CliError> {
    let path = cfg.data_path()?;
    let data = read_dataset(path, space.r()).map_err(|e| match e {
        toprank::Error::Io(io) => CliError::io(path, io),
        other => CliError::Core(other),
    })?;
    log::info!("read {} observations from {}", data.len(), path.display());
    Ok(data)
}

fn space_of(cfg: &RunConfig) -> Result<RankSpace, CliError> {
    Ok(RankSpace::new(cfg.r()?)?)
}

fn experiment_spec(cfg: &RunConfig, methods: Vec<Method>) -> Result<ExperimentSpec, CliError> {
    Ok(ExperimentSpec {
        r: cfg.r()?,
        n: *cfg.require(&cfg.n, "n")?,
        replicates: cfg.replicates.unwrap_or(1),
        generator: cfg.model()?.clone(),
        methods,
        fit: cfg.fit.clone(),
        seed: cfg.seed(),
        execution: if cfg.jobs == Some(1) {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    })
}

fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let space = space_of(cfg)?;
    let spec = experiment_spec(cfg, Vec::new())?;
    let out = cfg.output()?;
    let written = exec::map_range(spec.execution, spec.replicates, |j| -> Result<PathBuf, CliError> {
        let data = spec.dataset(&space, j)?;
        let path = out.join(format!("replicate_{:03}.csv", j + 1));
        write_data(&path, &data)?;
        Ok(path)
    });
    for w in written {
        log::info!("wrote {}", w?.display());
    }
    Ok(())
}

fn default_method(cfg: &RunConfig) -> Method {
    cfg.method.clone().unwrap_or(if cfg.fit.lambda > 0.0 {
        Method::R { lambda: cfg.fit.lambda }
    } else {
        Method::NR
    })
}

fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let space = space_of(cfg)?;
    let data = load_data(cfg, &space)?;
    let method = default_method(cfg);
    let result = method.fit(&space, &data, &cfg.fit_config())?;
    write_fit(cfg.output()?, &method.label(), &result)
}

fn write_fit(path: &Path, method: &str, result: &FitResult) -> Result<(), CliError> {
    write_json(
        path,
        &FitOutput {
            method: method.to_string(),
            record: result.to_record(),
        },
    )
}

fn read_fit(path: &Path, space: &RankSpace) -> Result<(String, FitResult), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let out: FitOutput =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: not a fit result: {e}", path.display())))?;
    Ok((out.method, FitResult::from_record(space, &out.record)?))
}

fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let space = space_of(cfg)?;
    let (method, fitted) = read_fit(cfg.require(&cfg.fit_result, "fit_result")?, &space)?;
    let (l_par_value, l_comp_value, param) = match &cfg.generator {
        Some(config::Source::Model(g)) => {
            let (theta, mech) = g.truth(&space)?;
            (
                l_par(&space, &theta, &mech, &fitted.theta, &fitted.phi)?,
                Some(l_comp(&space, &theta, &fitted.theta)?),
                g.param_label(),
            )
        }
        _ => {
            let test_path = cfg.require(&cfg.test, "test (or a simulation generator)")?;
            let test = read_dataset(test_path, space.r())?;
            (l_par_empirical(&space, &test, &fitted.theta, &fitted.phi)?, None, "empirical".to_string())
        }
    };
    let class_err = match &cfg.input {
        Some(path) if fitted.theta.k() > 1 => {
            let data = read_dataset(path, space.r())?;
            match data.true_clusters() {
                Some(truth) => Some(classification_error(&truth, &fitted.posteriors)?),
                None => None,
            }
        }
        _ => None,
    };
    let report = LossReport {
        method,
        replicate: 1,
        param,
        l_par: l_par_value,
        l_comp: l_comp_value,
        class_err,
        runtime_ms: 0,
    };
    write_atomic(cfg.output()?, |w| Ok(write_report_csv(w, &[report])?))
}

fn cv(cfg: &RunConfig) -> Result<(), CliError> {
    let space = space_of(cfg)?;
    let data = load_data(cfg, &space)?;
    let grid = match (&cfg.grid, &cfg.method) {
        (Some(g), _) => g.clone(),
        (None, Some(Method::RCV { grid })) => grid.clone(),
        _ => return Err(CliError::Config("missing field `grid`".into())),
    };
    let outcome = cross_validate(&space, &data, &grid, &cfg.fit_config())?;
    log::info!("selected lambda = {}", outcome.lambda);
    let out = cfg.output()?;
    write_atomic(&out.join("cv_scores.csv"), |w| write_scores(w, &outcome.scores))?;
    write_fit(&out.join("fit.json"), &format!("RCV(lambda={})", outcome.lambda), &outcome.fit)
}

fn write_scores(w: &mut dyn Write, scores: &[CvScore]) -> Result<(), CliError> {
    let io = |e| CliError::io(Path::new("cv_scores.csv"), e);
    writeln!(w, "lambda,fold1,fold2,mean").map_err(io)?;
    for s in scores {
        writeln!(w, "{},{},{},{}", s.lambda, s.folds[0], s.folds[1], s.mean).map_err(io)?;
    }
    Ok(())
}

fn experiment(cfg: &RunConfig) -> Result<(), CliError> {
    let space = space_of(cfg)?;
    let methods = match (&cfg.methods, &cfg.method) {
        (Some(m), _) => m.clone(),
        (None, Some(m)) => vec![m.clone()],
        (None, None) => return Err(CliError::Config("missing field `methods`".into())),
    };
    let spec = experiment_spec(cfg, methods)?;
    let reports = run_experiment(&space, &spec)?;
    let out = cfg.output()?;
    write_atomic(&out.join("report.csv"), |w| Ok(write_report_csv(w, &reports)?))?;
    write_json(&out.join("summary.json"), &summarize(&reports))
}

fn graph(cfg: &RunConfig) -> Result<(), CliError> {
    let g = toprank::permkit::build_cayley_graph(cfg.r()?)?;
    let out = cfg.output()?;
    write_atomic(out, |w| g.write_edge_csv(w).map_err(|e| CliError::io(out, e)))
}

fn split(cfg: &RunConfig) -> Result<(), CliError> {
    let space = space_of(cfg)?;
    let data = load_data(cfg, &space)?;
    let scheme = cfg.split.clone().unwrap_or_default();
    let largest = scheme.train_sizes.iter().copied().max().unwrap_or(0);
    if scheme.test_size + largest > data.len() {
        return Err(CliError::Core(toprank::Error::Domain(format!(
            "need {} observations for test {} + train {largest}, dataset has {}",
            scheme.test_size + largest,
            scheme.test_size,
            data.len()
        ))));
    }
    let out = cfg.output()?;
    let written = exec::map_range(Execution::Parallel, scheme.resamples, |j| resample(&data, &scheme, out, cfg.seed(), j));
    written.into_iter().collect()
}

/// Test set first, then nested training sets drawn from the remainder.
fn resample(data: &Dataset, scheme: &SplitSpec, out: &Path, base_seed: u64, j: usize) -> Result<(), CliError> {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut seed::rng(seed::derive(base_seed, j as u64), 0));
    let dir = out.join(format!("resample_{:02}", j + 1));
    let (test, rest) = idx.split_at(scheme.test_size);
    write_data(&dir.join("test.csv"), &data.subset(test))?;
    for &n in &scheme.train_sizes {
        write_data(&dir.join(format!("train_{n}.csv")), &data.subset(&rest[..n]))?;
    }
    Ok(())
}
