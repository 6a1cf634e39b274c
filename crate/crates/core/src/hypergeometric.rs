//! Bessel-type hypergeometric function `₀F₁` of one and two real symmetric
//! matrix arguments.
//!
//! One argument: `₀F₁(a; S) = Σ_k Σ_{κ⊢k} C_κ(S) / ((a)_κ k!)`, a function
//! of the eigenvalues of `S`. For `a = p/2` and `p ≥ m` it is also the
//! characteristic function of the uniform law on the Stiefel manifold,
//!
//! `E[exp(2i tr(H Cᵀ s))] = ₀F₁(p/2; -H CᵀC H)`,  `s ~ σ_{p,m}`,
//!
//! which gives the Monte Carlo route. Two arguments:
//! `₀F₁(a; A, B) = ∫_{O(m)} ₀F₁(a; O A Oᵀ B) dO`, estimated by averaging over
//! Haar draws, with the series `Σ C_κ(A) C_κ(B) / (C_κ(I) (a)_κ k!)` as an
//! independent cross-check.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, psd_sqrt, sym_eigenvalues, PsdMatrix, RealMatrix, SymmetricMatrix};
use crate::mc::{mc_mean, mc_mean_complex, McEstimate};
use crate::sampling::{sample_haar_orthogonal, sample_stiefel_uniform, RandomStream, StiefelMethod};
use crate::zonal::{gen_pochhammer, ZonalTable, MAX_TABLE_WEIGHT};

/// Default truncation degree of the series.
pub const DEFAULT_K_MAX: usize = 40;

/// Above this operator norm of the argument the series is not trusted and the
/// Monte Carlo route is preferred.
pub const SERIES_NORM_LIMIT: f64 = 4.0;

/// A layer `Σ_{κ⊢k} |term|` below this fraction of the partial sum counts as
/// negligible; two consecutive negligible layers stop the summation.
const LAYER_REL_TOL: f64 = 1e-14;

/// Remaining layer size above which a truncation warning is raised.
const TRUNCATION_WARN: f64 = 1e-10;

/// Series value with truncation metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Highest degree `k` included.
    pub degree: usize,
    /// `Σ_{κ⊢k} |term|` of the last included layer.
    pub last_layer: f64,
    pub warnings: Vec<String>,
}

/// How a one-argument value is evaluated inside composite estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Zonal series (deterministic).
    Series,
    /// One Stiefel draw per outer sample (unbiased, noisy).
    Mc,
}

fn check_a(a: f64, m: usize) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::Domain("parameter a must be finite".into()));
    }
    // (a)_κ vanishes for some κ with at most m parts exactly when
    // a - (i-1)/2 is a nonpositive integer for some row i ≤ m
    for i in 0..m {
        let b = a - 0.5 * i as f64;
        if b <= 0.0 && b.fract() == 0.0 {
            return Err(Error::Domain(format!("₀F₁ is undefined for a = {a} with {m} eigenvalues")));
        }
    }
    Ok(())
}

/// Initial truncation degree from the size of the eigenvalues.
fn initial_degree(eigenvalues: &[f64], k_max: usize) -> usize {
    let r: f64 = eigenvalues.iter().map(|x| x.abs()).sum();
    ((2.0 * r).ceil() as usize + 12).min(k_max)
}

/// Sums the series layers from `terms` (indexed like the table), stopping
/// after two consecutive negligible layers.
fn sum_layers(table: &ZonalTable, terms: &[f64], k_limit: usize) -> (f64, usize, f64, bool) {
    let mut sum = 0.0;
    let mut small_run = 0;
    let mut last = 0.0;
    for k in 0..=k_limit {
        let layer: Vec<f64> = table.layer(k).map(|i| terms[i]).collect();
        let abs: f64 = layer.iter().map(|t| t.abs()).sum();
        sum += layer.iter().sum::<f64>();
        last = abs;
        if k > 0 && abs < LAYER_REL_TOL * sum.abs() {
            small_run += 1;
            if small_run == 2 {
                return (sum, k, last, true);
            }
        } else {
            small_run = 0;
        }
    }
    (sum, k_limit, last, false)
}

fn validate_k_max(k_max: usize) -> Result<()> {
    if k_max > MAX_TABLE_WEIGHT {
        return Err(Error::Domain(format!("k_max must be at most {MAX_TABLE_WEIGHT}, got {k_max}")));
    }
    Ok(())
}

/// `₀F₁(a; S)` from the eigenvalues of `S`.
pub fn hyper0f1_series_eigen(a: f64, eigenvalues: &[f64], k_max: usize) -> Result<SeriesValue> {
    let m = eigenvalues.len();
    if m == 0 {
        return Err(Error::Shape("argument must be at least 1x1".into()));
    }
    check_a(a, m)?;
    validate_k_max(k_max)?;
    let mut warnings = Vec::new();
    let norm = eigenvalues.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if norm > SERIES_NORM_LIMIT {
        warnings.push(format!("argument norm {norm:.3e} exceeds {SERIES_NORM_LIMIT}; the Stiefel Monte Carlo route is authoritative here"));
    }
    let mut k = initial_degree(eigenvalues, k_max);
    loop {
        let table = ZonalTable::cached(m, k);
        let jack = table.jack_values(eigenvalues);
        // C_κ / ((a)_κ k!) = (2^k / j_κ) J_κ / (a)_κ
        let terms: Vec<f64> = table
            .partitions()
            .iter()
            .enumerate()
            .map(|(i, kappa)| {
                let w = kappa.weight() as usize;
                table.c_factor(i) * jack[i] / (gen_pochhammer(a, kappa) * factorial(w))
            })
            .collect();
        let (value, degree, last, converged) = sum_layers(&table, &terms, k);
        if converged || k == k_max {
            if !converged && last > TRUNCATION_WARN * value.abs() {
                warnings.push(format!("series truncated at degree {k}: last layer {last:.3e} against value {value:.3e}"));
            }
            if !value.is_finite() {
                return Err(Error::Numeric("series overflowed".into()));
            }
            return Ok(SeriesValue { value, degree, last_layer: last, warnings });
        }
        k = (2 * k).min(k_max);
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `₀F₁(a; S)` by the zonal series truncated at degree at most `k_max`.
pub fn hyper0f1_series(a: f64, s: &SymmetricMatrix, k_max: usize) -> Result<SeriesValue> {
    let eig = sym_eigenvalues(s)?;
    hyper0f1_series_eigen(a, &eig, k_max)
}

/// `₀F₁(a; X, Y)` by the two-argument zonal series, from the eigenvalues of
/// both arguments (same length).
pub fn hyper0f1_two_arg_series(a: f64, x: &[f64], y: &[f64], k_max: usize) -> Result<SeriesValue> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Shape("two-argument series needs eigenvalue lists of equal positive length".into()));
    }
    let m = x.len();
    check_a(a, m)?;
    validate_k_max(k_max)?;
    let ones = vec![1.0; m];
    let mut warnings = Vec::new();
    // |C_κ(X) C_κ(Y) / C_κ(I)| <= C_κ(|X|) ‖Y‖^k
    let y_norm = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scaled: Vec<f64> = x.iter().map(|v| v * y_norm).collect();
    let mut k = initial_degree(&scaled, k_max);
    loop {
        let table = ZonalTable::cached(m, k);
        let jx = table.jack_values(x);
        let jy = table.jack_values(y);
        let ji = table.jack_values(&ones);
        // C_κ(X) C_κ(Y) / (C_κ(I) (a)_κ k!) = c_κ J_κ(X) J_κ(Y) / (J_κ(I) (a)_κ k!)
        let terms: Vec<f64> = table
            .partitions()
            .iter()
            .enumerate()
            .map(|(i, kappa)| {
                let w = kappa.weight() as usize;
                table.c_factor(i) * jx[i] * jy[i] / (ji[i] * gen_pochhammer(a, kappa) * factorial(w))
            })
            .collect();
        let (value, degree, last, converged) = sum_layers(&table, &terms, k);
        if converged || k == k_max {
            if !converged && last > TRUNCATION_WARN * value.abs() {
                warnings.push(format!("series truncated at degree {k}: last layer {last:.3e} against value {value:.3e}"));
            }
            return Ok(SeriesValue { value, degree, last_layer: last, warnings });
        }
        k = (2 * k).min(k_max);
    }
}

/// The argument `-H CᵀC H` of the one-argument function.
pub fn bessel_argument(h: &RealMatrix, c: &RealMatrix) -> Result<SymmetricMatrix> {
    let m = h.rows();
    if h.cols() != m || c.cols() != m {
        return Err(Error::Shape(format!("H must be m x m and C p x m, got H {}x{}, C {}x{}", h.rows(), h.cols(), c.rows(), c.cols())));
    }
    let ch = c.matmul(h);
    Ok(ch.gram().scale(-1.0))
}

fn check_stiefel_shape(p: usize, m: usize, c: &RealMatrix) -> Result<()> {
    if p < m {
        return Err(Error::Shape(format!("need p >= m, got p={p}, m={m}")));
    }
    if c.rows() != p || c.cols() != m {
        return Err(Error::Shape(format!("C must be {p}x{m}, got {}x{}", c.rows(), c.cols())));
    }
    Ok(())
}

/// `exp(2i tr(H Cᵀ s))` for one Stiefel draw `s`.
fn stiefel_phase(ch: &RealMatrix, s: &RealMatrix) -> Complex64 {
    // tr(H Cᵀ s) = Σ_ij (CH)_ij s_ij
    let t: f64 = ch.as_slice().iter().zip(s.as_slice()).map(|(a, b)| a * b).sum();
    Complex64::from_polar(1.0, 2.0 * t)
}

/// Monte Carlo estimate of `₀F₁(p/2; -H CᵀC H)` as the average of
/// `exp(2i tr(H Cᵀ s))` over `n` uniform Stiefel frames `s`.
pub fn hyper0f1_stiefel_mc(p: usize, h: &PsdMatrix, c: &RealMatrix, n: usize, rs: &mut RandomStream) -> Result<McEstimate> {
    let m = h.dim();
    check_stiefel_shape(p, m, c)?;
    let ch = c.matmul(h.as_matrix());
    mc_mean_complex(n, rs, |sub| {
        let s = sample_stiefel_uniform(p, m, StiefelMethod::Polar, sub)?;
        Ok(stiefel_phase(&ch, s.as_matrix()))
    })
}

/// One-argument value at `-X CᵀC X`: the series value, or a single-draw
/// unbiased estimate `cos(2 tr(X Cᵀ s))`.
pub(crate) fn one_arg_sample(p: usize, x: &RealMatrix, c: &RealMatrix, route: Route, k_max: usize, rs: &mut RandomStream) -> Result<f64> {
    match route {
        Route::Series => {
            let arg = bessel_argument(x, c)?;
            Ok(hyper0f1_series(0.5 * p as f64, &arg, k_max)?.value)
        }
        Route::Mc => {
            let s = sample_stiefel_uniform(p, x.rows(), StiefelMethod::Polar, rs)?;
            Ok(stiefel_phase(&c.matmul(x), s.as_matrix()).re)
        }
    }
}

/// `₀F₁(p/2; A, -CᵀC)` as the average over `n_haar` Haar draws `O ∈ O(m)` of
/// the one-argument function at `-O√A Oᵀ (CᵀC) O√A Oᵀ`.
pub fn hyper0f1_two_arg(p: usize, a: &PsdMatrix, c: &RealMatrix, n_haar: usize, route: Route, rs: &mut RandomStream) -> Result<McEstimate> {
    let m = a.dim();
    check_stiefel_shape(p, m, c)?;
    let root = psd_sqrt(a)?;
    if c.max_abs() == 0.0 {
        return Ok(McEstimate::exact(1.0, n_haar));
    }
    mc_mean(n_haar, rs, |sub| {
        let o = sample_haar_orthogonal(m, sub)?;
        let x = root.conjugate(&o);
        one_arg_sample(p, x.as_matrix(), c, route, DEFAULT_K_MAX, sub)
    })
}

/// Chooses the series when the argument norm is within [`SERIES_NORM_LIMIT`],
/// otherwise the Stiefel Monte Carlo estimate with `n` draws.
pub fn hyper0f1_auto(p: usize, h: &PsdMatrix, c: &RealMatrix, n: usize, rs: &mut RandomStream) -> Result<(McEstimate, Vec<String>)> {
    let arg = bessel_argument(h.as_matrix(), c)?;
    if operator_norm(arg.as_matrix()) <= SERIES_NORM_LIMIT {
        let v = hyper0f1_series(0.5 * p as f64, &arg, DEFAULT_K_MAX)?;
        Ok((McEstimate::exact(v.value, 0), v.warnings))
    } else {
        Ok((hyper0f1_stiefel_mc(p, h, c, n, rs)?, Vec::new()))
    }
}
