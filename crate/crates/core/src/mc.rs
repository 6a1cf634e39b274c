//! Chunked, reproducible Monte Carlo driver.
//!
//! Work of `n` samples is cut into fixed chunks of [`CHUNK_SIZE`]. Chunk `c`
//! draws from substream `c` of a stream forked off the caller's stream, chunks
//! run on the rayon pool, and partial results are merged in chunk order. The
//! output is therefore independent of the number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::sampling::RandomStream;
use crate::stats::{pairwise_merge, RunningStats};

/// Samples per chunk.
pub const CHUNK_SIZE: usize = 4096;

/// Monte Carlo mean with standard errors for the real and imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub mean_im: f64,
    pub std_error: f64,
    pub std_error_im: f64,
    pub n: usize,
}

impl McEstimate {
    /// Exact value with zero error.
    pub fn exact(value: f64, n: usize) -> Self {
        McEstimate { mean: value, mean_im: 0.0, std_error: 0.0, std_error_im: 0.0, n }
    }

    pub fn complex_mean(&self) -> Complex64 {
        Complex64::new(self.mean, self.mean_im)
    }

    /// `|Re(mean) - target| <= k * std_error`.
    pub fn agrees_with(&self, target: f64, k_sigma: f64) -> bool {
        (self.mean - target).abs() <= k_sigma * self.std_error
    }

    fn from_stats(re: RunningStats, im: RunningStats) -> Self {
        McEstimate { mean: re.mean, mean_im: im.mean, std_error: re.std_error(), std_error_im: im.std_error(), n: re.n as usize }
    }
}

fn chunk_lengths(n: usize) -> Vec<usize> {
    let full = n / CHUNK_SIZE;
    let mut lens = vec![CHUNK_SIZE; full];
    if !n.is_multiple_of(CHUNK_SIZE) {
        lens.push(n % CHUNK_SIZE);
    }
    lens
}

/// Runs `chunk(len, stream)` for every chunk and returns the results in chunk order.
pub fn run_chunks<T, F>(n: usize, rs: &mut RandomStream, chunk: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut RandomStream) -> Result<T> + Sync,
{
    let root = rs.fork();
    chunk_lengths(n)
        .into_par_iter()
        .enumerate()
        .map(|(c, len)| {
            let mut sub = root.substream(c as u64);
            chunk(len, &mut sub)
        })
        .collect()
}

/// Collects `n` samples of `draw` in a thread-count independent order.
pub fn collect_samples<T, F>(n: usize, rs: &mut RandomStream, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RandomStream) -> Result<T> + Sync,
{
    let chunks = run_chunks(n, rs, |len, sub| (0..len).map(|_| draw(sub)).collect::<Result<Vec<T>>>())?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Mean of a complex-valued sample function.
pub fn mc_mean_complex<F>(n: usize, rs: &mut RandomStream, draw: F) -> Result<McEstimate>
where
    F: Fn(&mut RandomStream) -> Result<Complex64> + Sync,
{
    let parts = run_chunks(n, rs, |len, sub| {
        let (mut re, mut im) = (RunningStats::default(), RunningStats::default());
        for _ in 0..len {
            let z = draw(sub)?;
            re.push(z.re);
            im.push(z.im);
        }
        Ok((re, im))
    })?;
    let (re, im): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(McEstimate::from_stats(pairwise_merge(&re), pairwise_merge(&im)))
}

/// Mean of a real-valued sample function.
pub fn mc_mean<F>(n: usize, rs: &mut RandomStream, draw: F) -> Result<McEstimate>
where
    F: Fn(&mut RandomStream) -> Result<f64> + Sync,
{
    mc_mean_complex(n, rs, |sub| draw(sub).map(|x| Complex64::new(x, 0.0)))
}

/// Estimate from an explicit sample list, merged in the same chunked order as
/// the streaming estimators.
pub fn estimate_from_samples(samples: &[f64]) -> McEstimate {
    let parts: Vec<RunningStats> = samples
        .chunks(CHUNK_SIZE)
        .map(|c| {
            let mut s = RunningStats::default();
            c.iter().for_each(|&x| s.push(x));
            s
        })
        .collect();
    McEstimate::from_stats(pairwise_merge(&parts), RunningStats::default())
}
