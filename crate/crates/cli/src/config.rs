use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toprank::emcore::FitConfig;
use toprank::eval::{Generator, Method};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Fit,
    Eval,
    Cv,
    Experiment,
    Graph,
    Split,
}

/// Data source: a simulation model or an existing dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    File(FileSource),
    Model(Generator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub kind: FileKind,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    File,
}

/// Resampling scheme for an external dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub test_size: usize,
    pub train_sizes: Vec<usize>,
    pub resamples: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_size: 3000,
            train_sizes: vec![100, 500, 1000, 5000, 10000],
            resamples: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub r: Option<usize>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub generator: Option<Source>,
    pub method: Option<Method>,
    pub methods: Option<Vec<Method>>,
    pub grid: Option<Vec<f64>>,
    pub fit: FitConfig,
    pub input: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub fit_result: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub split: Option<SplitSpec>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn require<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing field `{name}`")))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn output(&self) -> Result<&Path, CliError> {
        self.require(&self.output, "output").map(PathBuf::as_path)
    }

    pub fn r(&self) -> Result<usize, CliError> {
        self.require(&self.r, "r").copied()
    }

    /// Fit settings with the top-level `k` and `seed` applied.
    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            k: self.k.unwrap_or(self.fit.k),
            seed: self.seed.unwrap_or(self.fit.seed),
            ..self.fit.clone()
        }
    }

    /// Referenced paths must be pairwise distinct.
    pub fn validate_paths(&self) -> Result<(), CliError> {
        let mut seen: Vec<(&str, &Path)> = Vec::new();
        let file_source = match &self.generator {
            Some(Source::File(f)) => Some(f.path.as_path()),
            _ => None,
        };
        let named = [
            ("input", self.input.as_deref()),
            ("test", self.test.as_deref()),
            ("fit_result", self.fit_result.as_deref()),
            ("output", self.output.as_deref()),
            ("generator.path", file_source),
        ];
        for (name, path) in named {
            let Some(path) = path else { continue };
            if let Some((other, _)) = seen.iter().find(|(_, p)| *p == path) {
                return Err(CliError::Config(format!("`{name}` and `{other}` both point to {}", path.display())));
            }
            seen.push((name, path));
        }
        Ok(())
    }

    /// The dataset to read: `input`, or a file-kind generator.
    pub fn data_path(&self) -> Result<&Path, CliError> {
        match (&self.input, &self.generator) {
            (Some(p), _) => Ok(p),
            (None, Some(Source::File(f))) => Ok(&f.path),
            _ => Err(CliError::Config("missing field `input` (or a generator of kind `file`)".into())),
        }
    }

    pub fn model(&self) -> Result<&Generator, CliError> {
        match &self.generator {
            Some(Source::Model(g)) => Ok(g),
            Some(Source::File(_)) => Err(CliError::Config("this command needs a simulation generator, not a file".into())),
            None => Err(CliError::Config("missing field `generator`".into())),
        }
    }
}
