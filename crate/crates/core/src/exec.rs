//! Execution policy for the data-parallel loops.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on the
//! rayon pool; without it every policy runs sequentially. Helpers always
//! return per-item results in index order, so any reduction the caller does
//! afterwards is independent of scheduling.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this policy will actually use worker threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f(i, chunk_i)` to consecutive `chunk`-sized pieces of `data`.
pub fn map_chunks_mut<T, R, F>(exec: Execution, data: &mut [T], chunk: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return data
            .par_chunks_mut(chunk)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect();
    }
    let _ = exec;
    data.chunks_mut(chunk).enumerate().map(|(i, c)| f(i, c)).collect()
}

/// Like [`map_chunks_mut`] over two equally chunked buffers in lockstep.
pub fn map_chunks2_mut<T, R, F>(
    exec: Execution,
    a: &mut [T],
    b: &mut [T],
    chunk: usize,
    f: F,
) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T], &mut [T]) -> R + Sync + Send,
{
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return a
            .par_chunks_mut(chunk)
            .zip(b.par_chunks_mut(chunk))
            .enumerate()
            .map(|(i, (x, y))| f(i, x, y))
            .collect();
    }
    let _ = exec;
    a.chunks_mut(chunk)
        .zip(b.chunks_mut(chunk))
        .enumerate()
        .map(|(i, (x, y))| f(i, x, y))
        .collect()
}

/// Order-fixed sum of per-item partials (Neumaier compensation).
pub fn sum(values: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for &v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let seq = map_range(Execution::Sequential, 100, |i| (i * i) as f64);
        let par = map_range(Execution::Parallel, 100, |i| (i * i) as f64);
        assert_eq!(seq, par);

        let mut a = vec![1.0; 12];
        let mut b = vec![2.0; 12];
        let s = map_chunks2_mut(Execution::Parallel, &mut a, &mut b, 3, |i, x, y| {
            x[0] = i as f64;
            y[0] += x[0];
            y[0]
        });
        assert_eq!(s, vec![2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn compensated_sum() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(&v), 2.0);
    }
}
