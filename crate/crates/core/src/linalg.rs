//! Small dense real matrices and the handful of factorizations the samplers
//! and hypergeometric routines need: symmetric eigendecomposition (cyclic
//! Jacobi), PSD square roots, the polar decomposition of tall matrices,
//! Householder QR and the spectral norm.
//!
//! Everything here is sized for desk-scale problems (dimensions up to ~16).

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Maximum number of Jacobi sweeps before giving up.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative tolerance used to accept slightly negative eigenvalues as zero.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Relative tolerance for treating a Gram matrix as invertible.
pub const INVERTIBILITY_REL_TOL: f64 = 1e-12;

/// Orthonormality tolerance for [`OrthogonalMatrix`] and [`StiefelFrame`].
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// Dense row-major real matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("expected {} entries for a {rows}x{cols} matrix, got {}", rows * cols, data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// `I_m` stacked over a `(p - m) x m` zero block.
    pub fn stacked_identity(p: usize, m: usize) -> Self {
        assert!(p >= m, "stacked identity needs p >= m");
        let mut e = Self::zeros(p, m);
        for i in 0..m {
            e.data[i * m + i] = 1.0;
        }
        e
    }

    /// Column vector from a slice.
    pub fn column_vector(v: &[f64]) -> Result<Self> {
        Self::new(v.len(), 1, v.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// Matrix product. Panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch: {}x{} * {}x{}", self.rows, self.cols, rhs.rows, rhs.cols);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · rhs` without forming the transpose.
    pub fn tr_matmul(&self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.rows, rhs.rows, "tr_matmul dimension mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &RealMatrix) -> RealMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &RealMatrix) -> RealMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &RealMatrix, f: impl Fn(f64, f64) -> f64) -> RealMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        RealMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn scale(&self, s: f64) -> RealMatrix {
        RealMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `selfᵀ self`, symmetric by construction.
    pub fn gram(&self) -> SymmetricMatrix {
        SymmetricMatrix::mirror_upper(self.tr_matmul(self))
    }

    /// Upper-left `k x k` block.
    pub fn top_left(&self, k: usize) -> RealMatrix {
        assert!(k <= self.rows && k <= self.cols, "block larger than matrix");
        let mut out = Self::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                out.data[i * k + j] = self.get(i, j);
            }
        }
        out
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> RealMatrix {
        assert!(k >= 1 && k <= self.cols, "column count out of range");
        let mut out = Self::zeros(self.rows, k);
        for i in 0..self.rows {
            for j in 0..k {
                out.data[i * k + j] = self.get(i, j);
            }
        }
        out
    }

    /// Multiply column `j` by `s[j]`.
    pub fn scale_columns(&self, s: &[f64]) -> RealMatrix {
        assert_eq!(s.len(), self.cols);
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, &sj) in s.iter().enumerate() {
                out.data[i * self.cols + j] *= sj;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Parses rows separated by `;` and entries by `,`, e.g. `"1,0.2;0.2,0.5"`.
impl FromStr for RealMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = s
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|e| e.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad matrix entry {:?}", e.trim()))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse(format!("rows of {s:?} have different lengths")));
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        RealMatrix::from_rows(&refs)
    }
}

impl fmt::Debug for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RealMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:>12.6e}", self.get(i, j))).collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Real symmetric matrix. The lower triangle is an exact mirror of the upper one.
#[derive(Clone, PartialEq, Debug)]
pub struct SymmetricMatrix(RealMatrix);

impl SymmetricMatrix {
    /// Accepts a square matrix whose asymmetry is at most `1e-12 (1 + max|S|)`
    /// and mirrors its upper triangle.
    pub fn new(m: RealMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("symmetric matrix must be square, got {}x{}", m.rows, m.cols)));
        }
        let tol = 1e-12 * (1.0 + m.max_abs());
        for i in 0..m.rows {
            for j in (i + 1)..m.cols {
                if (m.get(i, j) - m.get(j, i)).abs() > tol {
                    return Err(Error::Domain(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self::mirror_upper(m))
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrize(m: &RealMatrix) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let n = m.rows;
        let mut out = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        SymmetricMatrix(out)
    }

    pub(crate) fn mirror_upper(mut m: RealMatrix) -> Self {
        debug_assert!(m.is_square());
        let n = m.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = m.get(i, j);
                m.set(j, i, v);
            }
        }
        SymmetricMatrix(m)
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        SymmetricMatrix(RealMatrix::from_diag(diag))
    }

    pub fn identity(n: usize) -> Self {
        SymmetricMatrix(RealMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix(RealMatrix::zeros(n, n))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn as_matrix(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> RealMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> SymmetricMatrix {
        SymmetricMatrix(self.0.scale(s))
    }

    /// `Q S Qᵀ` for a square `Q` of matching size.
    pub fn conjugate(&self, q: &RealMatrix) -> SymmetricMatrix {
        SymmetricMatrix::symmetrize(&q.matmul(&self.0).matmul(&q.transpose()))
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        sym_eigen(self)
    }
}

impl Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Positive semi-definite symmetric matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct PsdMatrix(SymmetricMatrix);

impl PsdMatrix {
    /// Validates positivity. Eigenvalues in `[-eps_psd, 0)` are clamped to zero,
    /// with `eps_psd = 1e-10 max(1, max |λ|)`.
    pub fn new(s: SymmetricMatrix) -> Result<Self> {
        let eig = sym_eigen(&s)?;
        let scale = eig.eigenvalues.iter().fold(1.0_f64, |acc, l| acc.max(l.abs()));
        let eps = PSD_REL_TOL * scale;
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -eps {
            return Err(Error::Domain(format!("matrix is not positive semi-definite (eigenvalue {min:e})")));
        }
        if min < 0.0 {
            let clamped: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
            return Ok(PsdMatrix(eig.recompose_with(&clamped)));
        }
        Ok(PsdMatrix(s))
    }

    /// Diagonal PSD matrix; negative entries are rejected.
    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        if let Some(d) = diag.iter().find(|d| **d < 0.0 || !d.is_finite()) {
            return Err(Error::Domain(format!("diagonal entry {d} is not a valid PSD eigenvalue")));
        }
        Ok(PsdMatrix(SymmetricMatrix::from_diag(diag)))
    }

    pub fn identity(n: usize) -> Self {
        PsdMatrix(SymmetricMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        PsdMatrix(SymmetricMatrix::zeros(n))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::from_diag(&[x])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn as_symmetric(&self) -> &SymmetricMatrix {
        &self.0
    }

    #[inline]
    pub fn as_matrix(&self) -> &RealMatrix {
        self.0.as_matrix()
    }

    /// `Q P Qᵀ`, still PSD for orthogonal `Q`.
    pub fn conjugate(&self, q: &OrthogonalMatrix) -> PsdMatrix {
        PsdMatrix(self.0.conjugate(q.as_matrix()))
    }
}

impl Index<(usize, usize)> for PsdMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Square matrix with orthonormal columns.
#[derive(Clone, PartialEq, Debug)]
pub struct OrthogonalMatrix(RealMatrix);

impl OrthogonalMatrix {
    pub fn new(m: RealMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape("orthogonal matrix must be square".into()));
        }
        let err = orthonormality_error(&m);
        if err > ORTHONORMAL_TOL {
            return Err(Error::Domain(format!("columns are not orthonormal (error {err:e})")));
        }
        Ok(OrthogonalMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        OrthogonalMatrix(RealMatrix::identity(n))
    }

    /// Planar rotation by `theta`.
    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        OrthogonalMatrix(RealMatrix { rows: 2, cols: 2, data: vec![c, -s, s, c] })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn as_matrix(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> RealMatrix {
        self.0
    }

    pub(crate) fn from_unchecked(m: RealMatrix) -> Self {
        debug_assert!(orthonormality_error(&m) <= 1e-10);
        OrthogonalMatrix(m)
    }
}

impl Index<(usize, usize)> for OrthogonalMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Tall `p x m` matrix with orthonormal columns (a point of the Stiefel manifold).
#[derive(Clone, PartialEq, Debug)]
pub struct StiefelFrame(RealMatrix);

impl StiefelFrame {
    pub fn new(m: RealMatrix) -> Result<Self> {
        if m.rows < m.cols {
            return Err(Error::Shape(format!("frame needs rows >= cols, got {}x{}", m.rows, m.cols)));
        }
        let err = orthonormality_error(&m);
        if err > ORTHONORMAL_TOL {
            return Err(Error::Domain(format!("columns are not orthonormal (error {err:e})")));
        }
        Ok(StiefelFrame(m))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.0.cols
    }

    #[inline]
    pub fn as_matrix(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> RealMatrix {
        self.0
    }
}

impl From<OrthogonalMatrix> for StiefelFrame {
    fn from(o: OrthogonalMatrix) -> Self {
        StiefelFrame(o.0)
    }
}

impl Index<(usize, usize)> for StiefelFrame {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// `max |MᵀM - I|`.
pub fn orthonormality_error(m: &RealMatrix) -> f64 {
    let g = m.tr_matmul(m);
    g.max_abs_diff(&RealMatrix::identity(m.cols))
}

/// Eigenvalues sorted in nonincreasing order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: OrthogonalMatrix,
}

impl EigenDecomposition {
    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.recompose_with(&self.eigenvalues)
    }

    /// `Q diag(values) Qᵀ` with the stored eigenvectors.
    pub fn recompose_with(&self, values: &[f64]) -> SymmetricMatrix {
        let q = self.eigenvectors.as_matrix();
        let n = q.rows();
        let mut out = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|k| q.get(i, k) * values[k] * q.get(j, k)).sum();
                out.set(i, j, v);
            }
        }
        SymmetricMatrix::mirror_upper(out)
    }
}

/// Symmetric eigendecomposition by the cyclic Jacobi method.
pub fn sym_eigen(s: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = s.dim();
    let mut a = s.as_matrix().as_slice().to_vec();
    let mut v = RealMatrix::identity(n).data;

    if n > 1 {
        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| a[i * n + j] * a[i * n + j]).sum();
            let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
            if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 || off < f64::MIN_POSITIVE {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - sn * akq;
                        a[k * n + q] = sn * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - sn * aqk;
                        a[q * n + k] = sn * apk + c * aqk;
                    }
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - sn * vkq;
                        v[k * n + q] = sn * vkp + c * vkq;
                    }
                }
            }
        }
        if !converged {
            return Err(Error::Numeric(format!("Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let mut q = RealMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            q.set(r, col, v[r * n + src]);
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors: OrthogonalMatrix(q) })
}

/// Eigenvalues only, nonincreasing.
pub fn sym_eigenvalues(s: &SymmetricMatrix) -> Result<Vec<f64>> {
    Ok(sym_eigen(s)?.eigenvalues)
}

/// Principal square root of a PSD matrix.
pub fn psd_sqrt(s: &PsdMatrix) -> Result<PsdMatrix> {
    let eig = sym_eigen(s.as_symmetric())?;
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(PsdMatrix(eig.recompose_with(&roots)))
}

/// Square root of a symmetric matrix that should be PSD up to rounding,
/// applying the clamping policy of [`PsdMatrix::new`].
pub fn sqrt_of_symmetric(s: &SymmetricMatrix) -> Result<PsdMatrix> {
    let eig = sym_eigen(s)?;
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |acc, l| acc.max(l.abs()));
    let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -PSD_REL_TOL * scale {
        return Err(Error::Domain(format!("matrix is not positive semi-definite (eigenvalue {min:e})")));
    }
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(PsdMatrix(eig.recompose_with(&roots)))
}

/// Radial part `H = (NᵀN)^{1/2}` of the polar decomposition `N = Z H`.
pub fn polar_radial(n: &RealMatrix) -> Result<PsdMatrix> {
    if n.rows() < n.cols() {
        return Err(Error::Shape(format!("polar decomposition needs rows >= cols, got {}x{}", n.rows(), n.cols())));
    }
    sqrt_of_symmetric(&n.gram())
}

/// Angular part `Z = N H^{-1}` of the polar decomposition.
pub fn polar_frame(n: &RealMatrix) -> Result<StiefelFrame> {
    Ok(polar_decompose(n)?.0)
}

/// Both factors of `N = Z H`.
pub fn polar_decompose(n: &RealMatrix) -> Result<(StiefelFrame, PsdMatrix)> {
    let (p, m) = (n.rows(), n.cols());
    if p < m {
        return Err(Error::Shape(format!("polar decomposition needs rows >= cols, got {p}x{m}")));
    }
    let gram = n.gram();
    let eig = sym_eigen(&gram)?;
    let trace = gram.as_matrix().trace();
    let smallest = eig.eigenvalues[m - 1];
    if smallest.is_nan() || smallest <= INVERTIBILITY_REL_TOL * trace / m as f64 {
        return Err(Error::Degenerate(format!("NᵀN is numerically singular (smallest eigenvalue {smallest:e}, trace {trace:e})")));
    }
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|l| l.sqrt()).collect();
    let inv_roots: Vec<f64> = roots.iter().map(|r| 1.0 / r).collect();
    let h = PsdMatrix(eig.recompose_with(&roots));
    let h_inv = eig.recompose_with(&inv_roots);
    let z = n.matmul(h_inv.as_matrix());
    Ok((StiefelFrame(z), h))
}

/// Largest singular value.
pub fn operator_norm(a: &RealMatrix) -> f64 {
    let gram = if a.rows() >= a.cols() { a.gram() } else { a.transpose().gram() };
    match sym_eigen(&gram) {
        Ok(eig) => eig.eigenvalues[0].max(0.0).sqrt(),
        // Jacobi on a Gram matrix of finite entries does not fail in practice;
        // fall back to the Frobenius bound if it ever does.
        Err(_) => a.frobenius_norm(),
    }
}

/// Householder QR of a tall matrix: returns the thin `Q` (`rows x cols`) and
/// the upper-triangular `R` (`cols x cols`). The diagonal of `R` carries the
/// usual Householder sign convention and may be negative.
pub fn householder_qr(a: &RealMatrix) -> Result<(RealMatrix, RealMatrix)> {
    let (p, m) = (a.rows(), a.cols());
    if p < m {
        return Err(Error::Shape(format!("QR needs rows >= cols, got {p}x{m}")));
    }
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let mut v: Vec<f64> = (k..p).map(|i| r.get(i, k)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate(format!("column {k} is numerically zero")));
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..m {
                let dot: f64 = (k..p).map(|i| v[i - k] * r.get(i, j)).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..p {
                    let val = r.get(i, j) - f * v[i - k];
                    r.set(i, j, val);
                }
            }
        }
        reflectors.push(v);
    }
    let mut q = RealMatrix::stacked_identity(p, m);
    for k in (0..m).rev() {
        let v = &reflectors[k];
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..m {
            let dot: f64 = (k..p).map(|i| v[i - k] * q.get(i, j)).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..p {
                let val = q.get(i, j) - f * v[i - k];
                q.set(i, j, val);
            }
        }
    }
    let mut rr = RealMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            rr.set(i, j, r.get(i, j));
        }
    }
    Ok((q, rr))
}
