use std::io::{Read, Write};
use std::path::Path;

use crate::permkit::{Permutation, TopTRanking};
use crate::{Error, Result};

/// Latent values kept alongside simulated observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenTruth {
    pub perm: Permutation,
    /// 0-based cluster id.
    pub cluster: usize,
}

/// Observed top-t rankings over a common item count, with optional truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    r: usize,
    observations: Vec<TopTRanking>,
    truth: Option<Vec<HiddenTruth>>,
}

impl Dataset {
    pub fn new(r: usize, observations: Vec<TopTRanking>) -> Result<Self> {
        if let Some(bad) = observations.iter().find(|o| o.r() != r) {
            return Err(Error::Dimension {
                expected: r,
                got: bad.r(),
            });
        }
        Ok(Dataset {
            r,
            observations,
            truth: None,
        })
    }

    pub fn with_truth(r: usize, observations: Vec<TopTRanking>, truth: Vec<HiddenTruth>) -> Result<Self> {
        if truth.len() != observations.len() {
            return Err(Error::Dimension {
                expected: observations.len(),
                got: truth.len(),
            });
        }
        let mut d = Self::new(r, observations)?;
        d.truth = Some(truth);
        Ok(d)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[TopTRanking] {
        &self.observations
    }

    pub fn truth(&self) -> Option<&[HiddenTruth]> {
        self.truth.as_deref()
    }

    /// Cluster ids from the hidden truth, if present.
    pub fn true_clusters(&self) -> Option<Vec<usize>> {
        self.truth.as_ref().map(|t| t.iter().map(|h| h.cluster).collect())
    }

    /// Records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            r: self.r,
            observations: indices.iter().map(|&i| self.observations[i].clone()).collect(),
            truth: self
                .truth
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i].clone()).collect()),
        }
    }

    /// Fraction of observations at each length `t = 1..r-1`.
    pub fn length_histogram(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.r - 1];
        for o in &self.observations {
            h[o.t() - 1] += 1.0;
        }
        let n = self.len().max(1) as f64;
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        match &self.truth {
            None => {
                w.write_record(["t", "items"])?;
                for o in &self.observations {
                    w.write_record([o.t().to_string(), o.to_string()])?;
                }
            }
            Some(truth) => {
                w.write_record(["t", "items", "true_perm", "true_cluster"])?;
                for (o, h) in self.observations.iter().zip(truth) {
                    w.write_record([
                        o.t().to_string(),
                        o.to_string(),
                        h.perm.to_string(),
                        (h.cluster + 1).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the dataset CSV for `r` items. Rejects malformed rows with the
    /// offending line number.
    pub fn read_csv<R: Read>(input: R, r: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
        let mut records = rdr.records();
        let header = match records.next() {
            None => {
                log::warn!("dataset is empty");
                return Dataset::new(r, Vec::new());
            }
            Some(h) => h?,
        };
        let cols: Vec<&str> = header.iter().collect();
        let with_truth = match cols.as_slice() {
            ["t", "items"] => false,
            ["t", "items", "true_perm", "true_cluster"] => true,
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unexpected header {cols:?}"),
                })
            }
        };
        let mut observations = Vec::new();
        let mut truth = Vec::new();
        for rec in records {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let bad = |message: String| Error::Parse { line, message };
            if rec.len() != cols.len() {
                return Err(bad(format!("expected {} fields, found {}", cols.len(), rec.len())));
            }
            let t: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad length {:?}", &rec[0])))?;
            let tau = TopTRanking::parse(&rec[1], r).map_err(|e| bad(e.to_string()))?;
            if tau.t() != t {
                return Err(bad(format!("length column says {t} but {} items listed", tau.t())));
            }
            if with_truth {
                let perm: Permutation = rec[2].parse().map_err(|e: Error| bad(e.to_string()))?;
                if perm.len() != r {
                    return Err(bad(format!("true_perm has {} items, expected {r}", perm.len())));
                }
                if !tau.is_prefix_of(&perm) {
                    return Err(bad("observation is not a prefix of true_perm".into()));
                }
                let cluster: usize = rec[3]
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&c| c >= 1)
                    .ok_or_else(|| bad(format!("bad cluster id {:?}", &rec[3])))?;
                truth.push(HiddenTruth {
                    perm,
                    cluster: cluster - 1,
                });
            }
            observations.push(tau);
        }
        if with_truth {
            Dataset::with_truth(r, observations, truth)
        } else {
            Dataset::new(r, observations)
        }
    }
}

pub fn read_dataset(path: impl AsRef<Path>, r: usize) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    Dataset::read_csv(std::io::BufReader::new(file), r)
}

pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    data.write_csv(std::io::BufWriter::new(file))
}
