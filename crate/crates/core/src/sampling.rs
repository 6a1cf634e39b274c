//! Random sources: a reproducible splittable stream and the samplers built on
//! it (Gaussian matrices, Haar orthogonal matrices, uniform Stiefel frames and
//! uniform sphere points).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, polar_frame, OrthogonalMatrix, RealMatrix, StiefelFrame};

/// Internal resampling budget for (probability-zero) degenerate Gaussian draws.
const MAX_RETRIES: usize = 3;

/// Deterministic random stream backed by ChaCha8.
///
/// A stream is identified by its 64-bit seed and a 64-bit stream id. Substreams
/// select a different ChaCha nonce for the same key, so `substream(i)` and
/// `substream(j)` produce disjoint keystreams rather than reseeded copies.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Independent child stream with index `i`. Depends only on this stream's
    /// identity (seed, stream id), never on how much of it was consumed.
    pub fn substream(&self, i: u64) -> RandomStream {
        let id =
            if self.stream == 0 { i.wrapping_add(1) } else { splitmix64(self.stream ^ splitmix64(i.wrapping_add(0x5851_f42d_4c95_7f2d))) };
        Self::with_stream(self.seed, id)
    }

    /// Draws a fresh key from this stream and returns a new root stream on it.
    /// Consecutive Monte Carlo runs fork once each, so their chunk substreams
    /// never overlap.
    pub fn fork(&mut self) -> RandomStream {
        let key = self.rng.next_u64();
        RandomStream::new(key)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Fair sign, `+1` or `-1`.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Gamma(shape, 1) variate.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        Gamma::new(shape, 1.0).expect("gamma shape must be positive").sample(&mut self.rng)
    }

    /// Symmetric Beta(a, a) variate through the Gamma ratio. No rejection loop
    /// depends on `a`, so small shapes such as `a = 1/2` are safe.
    pub fn symmetric_beta(&mut self, a: f64) -> f64 {
        let g = Gamma::new(a, 1.0).expect("beta shape must be positive");
        loop {
            let x = g.sample(&mut self.rng);
            let y = g.sample(&mut self.rng);
            let s = x + y;
            if s > 0.0 {
                return x / s;
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Which construction [`sample_stiefel_uniform`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StiefelMethod {
    /// Angular part of the polar decomposition of a Gaussian matrix.
    #[default]
    Polar,
    /// First `m` columns of a Haar orthogonal matrix.
    Corner,
}

/// `p x m` matrix of i.i.d. standard normals.
pub fn sample_gaussian_matrix(p: usize, m: usize, rs: &mut RandomStream) -> RealMatrix {
    let data = (0..p * m).map(|_| rs.standard_normal()).collect();
    RealMatrix::new(p, m, data).expect("gaussian entries are finite")
}

/// QR of a Gaussian matrix *without* the sign correction. Not Haar
/// distributed; kept to demonstrate why the correction is required.
pub fn sample_orthogonal_uncorrected(p: usize, rs: &mut RandomStream) -> Result<OrthogonalMatrix> {
    let g = sample_gaussian_matrix(p, p, rs);
    let (q, _) = householder_qr(&g)?;
    Ok(OrthogonalMatrix::from_unchecked(q))
}

/// Haar-distributed orthogonal `p x p` matrix: Householder QR of a Gaussian
/// matrix, with column `j` of `Q` multiplied by the sign of `R[j][j]`.
pub fn sample_haar_orthogonal(p: usize, rs: &mut RandomStream) -> Result<OrthogonalMatrix> {
    if p == 0 {
        return Err(Error::Shape("orthogonal dimension must be positive".into()));
    }
    if p == 1 {
        let o = RealMatrix::new(1, 1, vec![rs.sign()])?;
        return Ok(OrthogonalMatrix::from_unchecked(o));
    }
    let mut last_err = None;
    for _ in 0..=MAX_RETRIES {
        let g = sample_gaussian_matrix(p, p, rs);
        match householder_qr(&g) {
            Ok((q, r)) => {
                let signs: Vec<f64> = (0..p).map(|j| if r.get(j, j) < 0.0 { -1.0 } else { 1.0 }).collect();
                if (0..p).any(|j| r.get(j, j).abs() < 1e-300) {
                    last_err = Some(Error::Degenerate("rank-deficient gaussian draw".into()));
                    continue;
                }
                return Ok(OrthogonalMatrix::from_unchecked(q.scale_columns(&signs)));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Degenerate("haar sampling failed".into())))
}

/// Uniform frame on the Stiefel manifold of `p x m` orthonormal frames.
/// For `p == m` this always delegates to [`sample_haar_orthogonal`].
pub fn sample_stiefel_uniform(p: usize, m: usize, method: StiefelMethod, rs: &mut RandomStream) -> Result<StiefelFrame> {
    if m == 0 || p < m {
        return Err(Error::Shape(format!("Stiefel frame needs p >= m >= 1, got p={p}, m={m}")));
    }
    if p == m || method == StiefelMethod::Corner {
        let o = sample_haar_orthogonal(p, rs)?;
        return StiefelFrame::new(o.into_matrix().leading_columns(m));
    }
    let mut last_err = None;
    for _ in 0..=MAX_RETRIES {
        let g = sample_gaussian_matrix(p, m, rs);
        match polar_frame(&g) {
            Ok(z) => return Ok(z),
            Err(e @ Error::Degenerate(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Degenerate("stiefel sampling failed".into())))
}

/// Uniform point on the unit sphere in `R^p`, as a `p x 1` matrix.
pub fn sample_sphere_uniform(p: usize, rs: &mut RandomStream) -> RealMatrix {
    assert!(p >= 1, "sphere dimension must be positive");
    loop {
        let g: Vec<f64> = (0..p).map(|_| rs.standard_normal()).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let v = g.iter().map(|x| x / norm).collect();
            return RealMatrix::new(p, 1, v).expect("finite");
        }
    }
}
