//! The representative law of `H₃` given `(H₁, H₂)`: the radial part of
//! `Z₁H₁ + Z₂H₂` for independent uniform Stiefel frames, its description
//! through the corner of a Haar orthogonal matrix, the corner density, the
//! averaged bi-invariance property, the singular case `p = m`, and the
//! eigenvalue kernel estimator.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    operator_norm, psd_sqrt, sqrt_of_symmetric, sym_eigenvalues, OrthogonalMatrix, PsdMatrix, RealMatrix, SymmetricMatrix,
};
use crate::mc::{collect_samples, run_chunks};
use crate::quadrature::GaussLegendre;
use crate::report::{VerificationReport, TEST_LEVEL};
use crate::sampling::{sample_haar_orthogonal, sample_stiefel_uniform, RandomStream, StiefelMethod};
use crate::stats::{chi_square_critical_value, chi_square_gof, ks_critical_value, ks_two_sample};

/// Slack on the corner norm bound.
const CORNER_NORM_SLACK: f64 = 1e-12;

/// Eigenvalues closer than this are flagged as ties.
pub const TIE_TOL: f64 = 1e-12;

/// Minimum expected count per chi-square cell after pooling.
const MIN_EXPECTED: f64 = 5.0;

/// Allowed deviation of the correlation dimension from `dim O(m)`.
pub const DIMENSION_TOL: f64 = 0.3;

/// Tolerance on the atom frequencies of the scalar singular case.
const ATOM_FREQ_TOL: f64 = 0.01;

/// Upper-left `m x m` block of a `p x p` orthogonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerMatrix {
    matrix: RealMatrix,
    p: usize,
}

impl CornerMatrix {
    pub fn new(matrix: RealMatrix, p: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() > p || matrix.rows() == 0 {
            return Err(Error::Shape(format!("corner must be m x m with 1 <= m <= p={p}")));
        }
        let norm = operator_norm(&matrix);
        if norm > 1.0 + CORNER_NORM_SLACK {
            return Err(Error::Domain(format!("corner has operator norm {norm} > 1")));
        }
        Ok(CornerMatrix { matrix, p })
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.matrix.rows()
    }
}

fn check_pair(h1: &PsdMatrix, h2: &PsdMatrix, p: usize) -> Result<usize> {
    let m = h1.dim();
    if h2.dim() != m {
        return Err(Error::Shape(format!("H1 is {m}x{m} but H2 is {0}x{0}", h2.dim())));
    }
    if p < m {
        return Err(Error::Shape(format!("need p >= m, got p={p}, m={m}")));
    }
    Ok(m)
}

/// `sqrt(H₁² + H₂² + H₁ M H₂ + H₂ Mᵀ H₁)`.
fn h3_from_coupling(h1: &RealMatrix, h2: &RealMatrix, coupling: &RealMatrix) -> Result<PsdMatrix> {
    let cross = h1.matmul(coupling).matmul(h2);
    let sum = h1.matmul(h1).add(&h2.matmul(h2)).add(&cross).add(&cross.transpose());
    sqrt_of_symmetric(&SymmetricMatrix::symmetrize(&sum))
}

/// Draws `H₃` as the radial part of `Z₁H₁ + Z₂H₂` with `Z₁, Z₂` independent
/// uniform on the Stiefel manifold of `p x m` frames.
pub fn sample_h3(h1: &PsdMatrix, h2: &PsdMatrix, p: usize, rs: &mut RandomStream) -> Result<PsdMatrix> {
    let m = check_pair(h1, h2, p)?;
    let z1 = sample_stiefel_uniform(p, m, StiefelMethod::Polar, rs)?;
    let z2 = sample_stiefel_uniform(p, m, StiefelMethod::Polar, rs)?;
    let coupling = z1.as_matrix().tr_matmul(z2.as_matrix());
    h3_from_coupling(h1.as_matrix(), h2.as_matrix(), &coupling)
}

/// Draws `H₃` through the corner `e_{p,m}ᵀ O e_{p,m}` of one Haar `O ∈ O(p)`.
pub fn sample_h3_corner(h1: &PsdMatrix, h2: &PsdMatrix, p: usize, rs: &mut RandomStream) -> Result<PsdMatrix> {
    let m = check_pair(h1, h2, p)?;
    let corner = sample_corner(p, m, rs)?;
    h3_from_coupling(h1.as_matrix(), h2.as_matrix(), corner.matrix())
}

/// Upper-left `m x m` block of a Haar orthogonal `p x p` matrix.
pub fn sample_corner(p: usize, m: usize, rs: &mut RandomStream) -> Result<CornerMatrix> {
    if m == 0 || p < m {
        return Err(Error::Shape(format!("corner needs p >= m >= 1, got p={p}, m={m}")));
    }
    let o = sample_haar_orthogonal(p, rs)?;
    Ok(CornerMatrix { matrix: o.as_matrix().top_left(m), p })
}

fn check_density_regime(p: usize, m: usize) -> Result<()> {
    if m == 0 || p < 2 * m {
        return Err(Error::Domain(format!("corner density needs p >= 2m, got p={p}, m={m}")));
    }
    Ok(())
}

/// Unnormalized corner density `det(I - AAᵀ)^{(p-2m-1)/2}` on `‖A‖ < 1`.
pub fn corner_density(p: usize, m: usize, a: &RealMatrix) -> Result<f64> {
    check_density_regime(p, m)?;
    if a.rows() != m || a.cols() != m {
        return Err(Error::Shape(format!("corner argument must be {m}x{m}")));
    }
    if operator_norm(a) >= 1.0 {
        return Ok(0.0);
    }
    // det(I - AAᵀ) = Π (1 - σ_i²)
    let det: f64 = sym_eigenvalues(&a.transpose().gram())?.iter().map(|l| 1.0 - l).product();
    if det <= 0.0 {
        return Ok(0.0);
    }
    Ok(det.powf(0.5 * (p as f64 - 2.0 * m as f64 - 1.0)))
}

/// `∫ det(I - AAᵀ)^{(p-2m-1)/2} dA` over `‖A‖ < 1`, for `m ∈ {1, 2}`.
///
/// For `m = 1` the substitution `a = -cos θ` gives `∫_0^π sin^{p-2} θ dθ`.
/// For `m = 2` singular value coordinates `A = U diag(s₁, s₂) Vᵀ` give
/// `dA = 2π² |s₁² - s₂²| ds dU dV` (Haar probability measures on `O(2)`; the
/// constant follows from the Gaussian integral), and `s_i = sin θ_i` turns the
/// integral into a smooth one over `[0, π/2]²`.
pub fn corner_normalizing_constant(p: usize, m: usize) -> Result<f64> {
    check_density_regime(p, m)?;
    let rule = GaussLegendre::cached(64);
    match m {
        1 => Ok(rule.integrate(0.0, PI, |t| t.sin().powi(p as i32 - 2))),
        2 => {
            let e = p as i32 - 4;
            // symmetric in (θ₁, θ₂): integrate over θ₂ < θ₁ and double
            let inner = |t1: f64| {
                let s1 = t1.sin().powi(2);
                rule.integrate(0.0, t1, |t2| (s1 - t2.sin().powi(2)) * (t1.cos() * t2.cos()).powi(e))
            };
            Ok(2.0 * PI * PI * 2.0 * rule.integrate(0.0, FRAC_PI_2, inner))
        }
        _ => Err(Error::Domain("normalizing constant is implemented for m = 1 and m = 2".into())),
    }
}

/// Normalized corner density (probability density on `m x m` matrices).
pub fn corner_density_normalized(p: usize, m: usize, a: &RealMatrix) -> Result<f64> {
    Ok(corner_density(p, m, a)? / corner_normalizing_constant(p, m)?)
}

/// Number of reference draws used for the `m = 2` cell probabilities.
fn reference_draws(n: usize) -> usize {
    (50 * n).clamp(1_000_000, 20_000_000)
}

fn bin_index(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    (((x - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Cell probabilities of the `m = 1` corner entry on `bins` equal cells of `[-1, 1]`.
fn corner_cells_m1(p: usize, bins: usize) -> Result<Vec<f64>> {
    let total = corner_normalizing_constant(p, 1)?;
    let rule = GaussLegendre::cached(32);
    Ok((0..bins)
        .map(|i| {
            let a0 = -1.0 + 2.0 * i as f64 / bins as f64;
            let a1 = -1.0 + 2.0 * (i + 1) as f64 / bins as f64;
            let (t0, t1) = ((-a0).clamp(-1.0, 1.0).acos(), (-a1).clamp(-1.0, 1.0).acos());
            rule.integrate(t0, t1, |t| t.sin().powi(p as i32 - 2)) / total
        })
        .collect())
}

/// Cell probabilities of `(A₀₀, A₁₁)` for the `m = 2` corner on a
/// `bins x bins` grid of `[-1, 1]²`, by weighted draws in singular value
/// coordinates.
fn corner_cells_m2(p: usize, bins: usize, draws: usize, rs: &mut RandomStream) -> Result<Vec<f64>> {
    let e = p as i32 - 4;
    let parts = run_chunks(draws, rs, |len, sub| {
        let mut acc = vec![0.0; bins * bins];
        for _ in 0..len {
            let t1 = FRAC_PI_2 * sub.uniform();
            let t2 = FRAC_PI_2 * sub.uniform();
            let (s1, c1) = t1.sin_cos();
            let (s2, c2) = t2.sin_cos();
            let w = (s1 * s1 - s2 * s2).abs() * (c1 * c2).powi(e);
            let u = sample_haar_orthogonal(2, sub)?;
            let v = sample_haar_orthogonal(2, sub)?;
            let a = u.as_matrix().scale_columns(&[s1, s2]).matmul(&v.as_matrix().transpose());
            let cell = bin_index(a.get(0, 0), -1.0, 1.0, bins) * bins + bin_index(a.get(1, 1), -1.0, 1.0, bins);
            acc[cell] += w;
        }
        Ok(acc)
    })?;
    let mut total = vec![0.0; bins * bins];
    for part in &parts {
        for (t, x) in total.iter_mut().zip(part) {
            *t += x;
        }
    }
    let sum: f64 = total.iter().sum();
    Ok(total.into_iter().map(|x| x / sum).collect())
}

/// Chi-square goodness of fit of `n` corner draws against the corner density.
/// `m = 1` uses `bins` cells on `[-1, 1]`; `m = 2` uses a `bins x bins` grid
/// for the pair `(A₀₀, A₁₁)`. The report carries the statistic as `lhs` and
/// the critical value at level 0.01 as `tolerance`.
pub fn corner_gof(p: usize, m: usize, n: usize, bins: usize, rs: &mut RandomStream) -> Result<VerificationReport> {
    check_density_regime(p, m)?;
    if bins < 2 || n == 0 {
        return Err(Error::Domain("corner GoF needs bins >= 2 and n >= 1".into()));
    }
    let mut report = VerificationReport::new("corner-gof", rs.seed()).param("p", p).param("m", m).param("bins", bins);
    let (observed, probabilities) = match m {
        1 => {
            let xs = collect_samples(n, rs, |sub| Ok(sample_corner(p, 1, sub)?.matrix().get(0, 0)))?;
            let mut counts = vec![0u64; bins];
            xs.iter().for_each(|&x| counts[bin_index(x, -1.0, 1.0, bins)] += 1);
            (counts, corner_cells_m1(p, bins)?)
        }
        2 => {
            let xs = collect_samples(n, rs, |sub| {
                let c = sample_corner(p, 2, sub)?;
                Ok((c.matrix().get(0, 0), c.matrix().get(1, 1)))
            })?;
            let mut counts = vec![0u64; bins * bins];
            xs.iter().for_each(|&(a, b)| counts[bin_index(a, -1.0, 1.0, bins) * bins + bin_index(b, -1.0, 1.0, bins)] += 1);
            let draws = reference_draws(n);
            report.detail("reference_draws", draws);
            (counts, corner_cells_m2(p, bins, draws, rs)?)
        }
        _ => return Err(Error::Domain("corner GoF is implemented for m = 1 and m = 2".into())),
    };
    let chi = chi_square_gof(&observed, &probabilities, MIN_EXPECTED)?;
    let critical = chi_square_critical_value(chi.dof, TEST_LEVEL)?;
    report.detail("statistic", chi.statistic);
    report.detail("dof", chi.dof);
    report.detail("p_value", chi.p_value);
    report.detail("cells", chi.cells);
    report.detail("level", TEST_LEVEL);
    Ok(report.finish(chi.statistic, 0.0, None, critical, Some(n)))
}

/// Statistic used by the distributional comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum H3Statistic {
    Trace,
    TopEigenvalue,
    Entry00,
}

impl H3Statistic {
    pub fn eval(self, h: &PsdMatrix) -> Result<f64> {
        Ok(match self {
            H3Statistic::Trace => h.as_matrix().trace(),
            H3Statistic::TopEigenvalue => sym_eigenvalues(h.as_symmetric())?[0],
            H3Statistic::Entry00 => h[(0, 0)],
        })
    }
}

/// Outcome of one two-sample KS comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsComparison {
    pub statistic: H3Statistic,
    pub d: f64,
    pub p_value: f64,
    pub critical: f64,
}

/// Two-sample KS comparisons of `a` and `b` on each statistic.
pub fn compare_samples(a: &[PsdMatrix], b: &[PsdMatrix], stats: &[H3Statistic]) -> Result<Vec<KsComparison>> {
    stats
        .iter()
        .map(|&s| {
            let xs = a.iter().map(|h| s.eval(h)).collect::<Result<Vec<_>>>()?;
            let ys = b.iter().map(|h| s.eval(h)).collect::<Result<Vec<_>>>()?;
            let ks = ks_two_sample(&xs, &ys)?;
            Ok(KsComparison { statistic: s, d: ks.statistic, p_value: ks.p_value, critical: ks_critical_value(ks.n_eff, TEST_LEVEL) })
        })
        .collect()
}

/// Report over several KS comparisons: `lhs` is the largest ratio of
/// statistic to critical value, the tolerance is 1, so the check passes
/// exactly when every p-value is at least 0.01.
fn ks_report(mut report: VerificationReport, comparisons: &[KsComparison], n: usize) -> VerificationReport {
    let worst = comparisons.iter().map(|c| c.d / c.critical).fold(0.0, f64::max);
    report.detail("tests", comparisons);
    report.detail("level", TEST_LEVEL);
    report.finish(worst, 0.0, None, 1.0, Some(n))
}

/// Two-sample comparison of [`sample_h3`] and [`sample_h3_corner`] on trace
/// and top eigenvalue.
pub fn sampler_equivalence_check(h1: &PsdMatrix, h2: &PsdMatrix, p: usize, n: usize, rs: &mut RandomStream) -> Result<VerificationReport> {
    let m = check_pair(h1, h2, p)?;
    let report = VerificationReport::new("sampler-equivalence", rs.seed()).param("p", p).param("m", m);
    let a = collect_samples(n, rs, |sub| sample_h3(h1, h2, p, sub))?;
    let b = collect_samples(n, rs, |sub| sample_h3_corner(h1, h2, p, sub))?;
    let cmp = compare_samples(&a, &b, &[H3Statistic::Trace, H3Statistic::TopEigenvalue])?;
    Ok(ks_report(report, &cmp, n))
}

/// Checks the averaged bi-invariance property: `H₃` drawn from Haar-conjugated
/// `(O₁H₁O₁ᵀ, O₂H₂O₂ᵀ)` has the same law as its conjugate by a fixed `O₃`.
/// Trace and top eigenvalue are conjugation invariant; the `(0,0)` entry is
/// the substantive comparison.
pub fn bi_invariance_check(
    h1: &PsdMatrix,
    h2: &PsdMatrix,
    p: usize,
    o3: &OrthogonalMatrix,
    n: usize,
    rs: &mut RandomStream,
) -> Result<VerificationReport> {
    let m = check_pair(h1, h2, p)?;
    if p < m + 1 {
        return Err(Error::Domain(format!("bi-invariance is asserted for p >= m + 1, got p={p}, m={m}")));
    }
    if o3.dim() != m {
        return Err(Error::Shape(format!("O3 must be {m}x{m}")));
    }
    let report = VerificationReport::new("bi-invariance", rs.seed()).param("p", p).param("m", m).param("o3", o3.as_matrix().as_slice());
    let draw = |sub: &mut RandomStream| -> Result<PsdMatrix> {
        let o1 = sample_haar_orthogonal(m, sub)?;
        let o2 = sample_haar_orthogonal(m, sub)?;
        sample_h3(&h1.conjugate(&o1), &h2.conjugate(&o2), p, sub)
    };
    let a = collect_samples(n, rs, draw)?;
    let b = collect_samples(n, rs, |sub| Ok(draw(sub)?.conjugate(o3)))?;
    let cmp = compare_samples(&a, &b, &[H3Statistic::Trace, H3Statistic::TopEigenvalue, H3Statistic::Entry00])?;
    Ok(ks_report(report, &cmp, n))
}

/// Coordinates of a symmetric matrix in `R^{m(m+1)/2}`, isometric for the
/// Frobenius norm (off-diagonal entries scaled by `√2`).
pub fn symmetric_coordinates(h: &RealMatrix) -> Vec<f64> {
    let m = h.rows();
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        out.push(h.get(i, i));
        for j in (i + 1)..m {
            out.push(std::f64::consts::SQRT_2 * h.get(i, j));
        }
    }
    out
}

/// Grassberger–Procaccia correlation dimension estimate.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationDimension {
    pub estimate: f64,
    /// Radii bracketing the fit window.
    pub r_low: f64,
    pub r_high: f64,
    /// Number of radii used in the least-squares fit.
    pub fit_points: usize,
}

/// Fraction of pairs of the correlation integral between which the log-log
/// slope is fitted.
const CORR_LOW: f64 = 1e-4;
const CORR_HIGH: f64 = 1e-2;
/// Log-spaced radius grid.
const CORR_DECADES: f64 = 12.0;
const CORR_BINS: usize = 1200;

/// Slope of `log C(r)` against `log r`, where `C(r)` is the fraction of point
/// pairs closer than `r`, fitted where `C(r) ∈ [1e-4, 1e-2]`. Returns `None`
/// when all points coincide.
pub fn correlation_dimension(points: &[Vec<f64>]) -> Result<Option<CorrelationDimension>> {
    let n = points.len();
    if n < 100 {
        return Err(Error::Domain("correlation dimension needs at least 100 points".into()));
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let diameter = points.iter().map(|q| dist(q, &points[0])).fold(0.0, f64::max) * 2.0;
    if diameter == 0.0 {
        return Ok(None);
    }
    let log_top = diameter.log10();
    let log_bottom = log_top - CORR_DECADES;
    let hist = (0..n)
        .into_par_iter()
        .fold(
            || vec![0u64; CORR_BINS + 1],
            |mut h, i| {
                for j in (i + 1)..n {
                    let d = dist(&points[i], &points[j]);
                    let slot = if d <= 0.0 {
                        0
                    } else {
                        let x = (d.log10() - log_bottom) / CORR_DECADES * CORR_BINS as f64;
                        if x < 0.0 {
                            0
                        } else {
                            (x.floor() as usize + 1).min(CORR_BINS)
                        }
                    };
                    h[slot] += 1;
                }
                h
            },
        )
        .reduce(|| vec![0u64; CORR_BINS + 1], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let pairs = (n * (n - 1) / 2) as f64;
    // C at the upper edge of slot k (slot 0 collects everything below the grid)
    let mut cum = 0u64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &c) in hist.iter().enumerate() {
        cum += c;
        let frac = cum as f64 / pairs;
        if (CORR_LOW..=CORR_HIGH).contains(&frac) && k > 0 {
            let log_r = log_bottom + k as f64 / CORR_BINS as f64 * CORR_DECADES;
            xs.push(log_r);
            ys.push(frac.log10());
        }
    }
    if xs.len() < 3 {
        return Err(Error::Numeric("too few radii in the correlation fit window".into()));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(Some(CorrelationDimension {
        estimate: sxy / sxx,
        r_low: 10f64.powf(xs[0]),
        r_high: 10f64.powf(xs[xs.len() - 1]),
        fit_points: xs.len(),
    }))
}

/// `n` draws of `H₃` in symmetric coordinates.
pub fn h3_cloud(h1: &PsdMatrix, h2: &PsdMatrix, p: usize, n: usize, rs: &mut RandomStream) -> Result<Vec<Vec<f64>>> {
    collect_samples(n, rs, |sub| Ok(symmetric_coordinates(sample_h3(h1, h2, p, sub)?.as_matrix())))
}

/// The singular case `p = m`. For `m = 1` the law of `H₃` is the two-point
/// law on `{|x - z|, x + z}`; the report compares the frequency of the lower
/// atom with 1/2. For `m ≥ 2` the correlation dimension of the sample cloud
/// in `R^{m(m+1)/2}` is compared with `dim O(m) = m(m-1)/2`.
pub fn h3_singularity_probe(h1: &PsdMatrix, h2: &PsdMatrix, rs: &mut RandomStream, n: usize) -> Result<VerificationReport> {
    let m = check_pair(h1, h2, h1.dim())?;
    let p = m;
    let mut report = VerificationReport::new("singularity-probe", rs.seed()).param("p", p).param("m", m);
    if m == 1 {
        let (x, z) = (h1[(0, 0)], h2[(0, 0)]);
        let (lo, hi) = ((x - z).abs(), x + z);
        let tol = 1e-12 * hi.max(1.0);
        let xs = collect_samples(n, rs, |sub| Ok(sample_h3(h1, h2, p, sub)?[(0, 0)]))?;
        let at_lo = xs.iter().filter(|&&u| (u - lo).abs() <= tol).count();
        let at_hi = xs.iter().filter(|&&u| (u - hi).abs() <= tol).count();
        let off = xs.iter().filter(|&&u| (u - lo).abs() > tol && (u - hi).abs() > tol).count();
        report.detail("support", [lo, hi]);
        report.detail("count_low", at_lo);
        report.detail("count_high", at_hi);
        report.detail("off_support", off);
        if off > 0 {
            report.warn(format!("{off} draws off the two-point support"));
            return Ok(report.finish(f64::NAN, 0.5, None, ATOM_FREQ_TOL, Some(n)));
        }
        if hi - lo <= tol {
            // a single atom: frequencies are not defined, support is all that can be checked
            return Ok(report.finish(0.5, 0.5, None, ATOM_FREQ_TOL, Some(n)));
        }
        let freq = at_lo as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        return Ok(report.finish(freq, 0.5, Some(se), ATOM_FREQ_TOL, Some(n)));
    }
    let cloud = h3_cloud(h1, h2, p, n, rs)?;
    let expected = (m * (m - 1) / 2) as f64;
    report.detail("ambient_dimension", m * (m + 1) / 2);
    match correlation_dimension(&cloud)? {
        Some(cd) => {
            report.detail("correlation", &cd);
            Ok(report.finish(cd.estimate, expected, None, DIMENSION_TOL, Some(n)))
        }
        None => {
            report.warn("all draws coincide; the law is a point mass");
            Ok(report.finish(0.0, 0.0, None, DIMENSION_TOL, Some(n)))
        }
    }
}

/// Normalized histogram of the descending eigenvalue vector of `H₃` on the
/// cube `[0, L]^m`; all mass lies in the chamber `λ₁ ≥ … ≥ λ_m ≥ 0`.
#[derive(Clone, Debug, Serialize)]
pub struct WeylHistogram {
    pub m: usize,
    pub bins: usize,
    /// Upper end `L` of every coordinate range.
    pub upper: f64,
    /// Counts per cell, keyed by the bin index of each coordinate.
    pub counts: BTreeMap<Vec<usize>, u64>,
    pub n: usize,
    /// Draws with two eigenvalues closer than [`TIE_TOL`] (counted, flagged).
    pub ties: usize,
    /// Draws outside the cube (should be zero; counted in the nearest cell).
    pub outside: usize,
}

impl WeylHistogram {
    pub fn bin_width(&self) -> f64 {
        self.upper / self.bins as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.bin_width().powi(self.m as i32)
    }

    /// Density value of a cell.
    pub fn density(&self, cell: &[usize]) -> f64 {
        let c = self.counts.get(cell).copied().unwrap_or(0);
        c as f64 / (self.n as f64 * self.cell_volume())
    }

    /// `Σ density · volume` over all cells.
    pub fn total_mass(&self) -> f64 {
        self.counts.keys().map(|c| self.density(c) * self.cell_volume()).sum()
    }

    /// Probability of each bin for `m = 1`.
    pub fn probabilities_1d(&self) -> Vec<f64> {
        (0..self.bins).map(|i| self.counts.get(&vec![i]).copied().unwrap_or(0) as f64 / self.n as f64).collect()
    }

    /// `L¹` distance to a reference law given by cell probabilities (`m = 1`).
    pub fn l1_distance_1d(&self, reference: &[f64]) -> f64 {
        self.probabilities_1d().iter().zip(reference).map(|(a, b)| (a - b).abs()).sum()
    }

    /// CSV with columns `bin_low_k, bin_high_k` for each coordinate and the
    /// density, one row per cell with nonincreasing bin indices (the cells
    /// meeting the chamber).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.m).flat_map(|k| [format!("bin_low_{k}"), format!("bin_high_{k}")]).collect();
        out.push_str(&header.join(","));
        out.push_str(",density\n");
        let w = self.bin_width();
        let mut cell = vec![0usize; self.m];
        loop {
            if cell.windows(2).all(|p| p[0] >= p[1]) {
                for &i in &cell {
                    let _ = write!(out, "{:.16e},{:.16e},", i as f64 * w, (i + 1) as f64 * w);
                }
                let _ = writeln!(out, "{:.16e}", self.density(&cell));
            }
            // odometer over the cube, last coordinate fastest
            let mut k = self.m;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                cell[k] += 1;
                if cell[k] < self.bins {
                    break;
                }
                cell[k] = 0;
            }
        }
    }
}

/// Histogram of the eigenvalues of `H₃ ~ μ(O₁√A O₁ᵀ, O₂√B O₂ᵀ)` with
/// `O₁, O₂` Haar on `O(m)`: the normalized kernel of the two-argument
/// product formula.
pub fn estimate_kernel(a: &PsdMatrix, b: &PsdMatrix, p: usize, n: usize, bins: usize, rs: &mut RandomStream) -> Result<WeylHistogram> {
    let m = check_pair(a, b, p)?;
    if p < m + 1 {
        return Err(Error::Domain(format!("kernel is defined for p >= m + 1, got p={p}, m={m}")));
    }
    if bins == 0 || n == 0 {
        return Err(Error::Domain("kernel histogram needs bins >= 1 and n >= 1".into()));
    }
    let ra = psd_sqrt(a)?;
    let rb = psd_sqrt(b)?;
    let upper = operator_norm(ra.as_matrix()) + operator_norm(rb.as_matrix());
    if upper.is_nan() || upper <= 0.0 {
        return Err(Error::Degenerate("A and B are both zero; the kernel is a point mass at 0".into()));
    }
    let slack = upper * 1e-10;
    let parts = run_chunks(n, rs, |len, sub| {
        let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        let (mut ties, mut outside) = (0usize, 0usize);
        for _ in 0..len {
            let o1 = sample_haar_orthogonal(m, sub)?;
            let o2 = sample_haar_orthogonal(m, sub)?;
            let h3 = sample_h3(&ra.conjugate(&o1), &rb.conjugate(&o2), p, sub)?;
            let eig = sym_eigenvalues(h3.as_symmetric())?;
            if eig.windows(2).any(|w| w[0] - w[1] <= TIE_TOL) {
                ties += 1;
            }
            if eig.iter().any(|&l| l > upper + slack || l < -slack) {
                outside += 1;
            }
            let cell: Vec<usize> = eig.iter().map(|&l| bin_index(l.clamp(0.0, upper), 0.0, upper, bins)).collect();
            *counts.entry(cell).or_insert(0) += 1;
        }
        Ok((counts, ties, outside))
    })?;
    let mut counts = BTreeMap::new();
    let (mut ties, mut outside) = (0, 0);
    for (c, t, o) in parts {
        for (k, v) in c {
            *counts.entry(k).or_insert(0) += v;
        }
        ties += t;
        outside += o;
    }
    Ok(WeylHistogram { m, bins, upper, counts, n, ties, outside })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn corner_density_examples() {
        let a = RealMatrix::from_rows(&[&[0.6]]).unwrap();
        assert_abs_diff_eq!(corner_density(4, 1, &a).unwrap(), 0.8, epsilon = 1e-15);
        assert_eq!(corner_density(4, 1, &RealMatrix::from_rows(&[&[1.0]]).unwrap()).unwrap(), 0.0);
        assert_eq!(corner_density(4, 2, &RealMatrix::zeros(2, 2)).unwrap(), 1.0);
        assert_eq!(corner_density(2, 1, &RealMatrix::zeros(1, 1)).unwrap(), 1.0);
        assert!(matches!(corner_density(3, 2, &RealMatrix::zeros(2, 2)), Err(Error::Domain(_))));
    }

    #[test]
    fn normalizing_constants_m1() {
        assert_abs_diff_eq!(corner_normalizing_constant(2, 1).unwrap(), PI, epsilon = 1e-13);
        assert_abs_diff_eq!(corner_normalizing_constant(3, 1).unwrap(), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(corner_normalizing_constant(4, 1).unwrap(), FRAC_PI_2, epsilon = 1e-13);
    }

    #[test]
    fn normalizing_constant_m2_matches_box_monte_carlo() {
        // p = 5: the density is the indicator of the unit operator-norm ball
        let mut rs = RandomStream::new(31);
        let n = 400_000;
        let hits = collect_samples(n, &mut rs, |s| {
            let a = RealMatrix::new(2, 2, (0..4).map(|_| 2.0 * s.uniform() - 1.0).collect())?;
            corner_density(5, 2, &a)
        })
        .unwrap();
        let mean = hits.iter().sum::<f64>() / n as f64;
        let se = (mean * (1.0 - mean) / n as f64).sqrt();
        let z = corner_normalizing_constant(5, 2).unwrap();
        assert!((16.0 * mean - z).abs() < 4.0 * 16.0 * se, "box {} vs {z}", 16.0 * mean);
    }

    #[test]
    fn corner_norm_bound() {
        let mut rs = RandomStream::new(2);
        for _ in 0..200 {
            let c = sample_corner(5, 2, &mut rs).unwrap();
            assert!(operator_norm(c.matrix()) <= 1.0 + CORNER_NORM_SLACK);
        }
        let c = sample_corner(3, 3, &mut rs).unwrap();
        assert_abs_diff_eq!(operator_norm(c.matrix()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn h3_with_zero_second_radius_is_first() {
        let mut rs = RandomStream::new(4);
        let h1 = PsdMatrix::new(SymmetricMatrix::new(RealMatrix::from_rows(&[&[1.0, 0.3], &[0.3, 0.5]]).unwrap()).unwrap()).unwrap();
        let h2 = PsdMatrix::zeros(2);
        let a = sample_h3_corner(&h1, &h2, 3, &mut rs).unwrap();
        let b = sample_h3(&h1, &h2, 3, &mut rs).unwrap();
        assert!(a.as_matrix().max_abs_diff(h1.as_matrix()) < 1e-12);
        assert!(b.as_matrix().max_abs_diff(h1.as_matrix()) < 1e-12);
    }

    #[test]
    fn h3_norm_bound() {
        let mut rs = RandomStream::new(8);
        let h1 = PsdMatrix::from_diag(&[1.0, 0.5]).unwrap();
        let h2 = PsdMatrix::from_diag(&[2.0, 0.1]).unwrap();
        for _ in 0..500 {
            let h = sample_h3(&h1, &h2, 3, &mut rs).unwrap();
            assert!(operator_norm(h.as_matrix()) <= 3.0 + 1e-10);
        }
    }

    #[test]
    fn scalar_singular_case_has_two_atoms() {
        let mut rs = RandomStream::new(10);
        let r = h3_singularity_probe(&PsdMatrix::scalar(1.0).unwrap(), &PsdMatrix::scalar(2.0).unwrap(), &mut rs, 40_000).unwrap();
        assert!(r.pass, "{}", r.to_json());
        assert_eq!(r.details["off_support"], 0);
    }

    #[test]
    fn zero_radii_give_point_mass() {
        let mut rs = RandomStream::new(10);
        let r = h3_singularity_probe(&PsdMatrix::zeros(2), &PsdMatrix::zeros(2), &mut rs, 500).unwrap();
        assert!(r.pass);
        assert_eq!(r.lhs, 0.0);
    }

    #[test]
    fn correlation_dimension_of_known_sets() {
        let mut rs = RandomStream::new(12);
        let line: Vec<Vec<f64>> = (0..3000)
            .map(|_| {
                let t = rs.uniform();
                vec![t, 2.0 * t, -t]
            })
            .collect();
        let d = correlation_dimension(&line).unwrap().unwrap();
        assert!((d.estimate - 1.0).abs() < 0.1, "{d:?}");
        let cube: Vec<Vec<f64>> = (0..3000).map(|_| vec![rs.uniform(), rs.uniform(), rs.uniform()]).collect();
        let d = correlation_dimension(&cube).unwrap().unwrap();
        assert!((d.estimate - 3.0).abs() < 0.3, "{d:?}");
    }

    #[test]
    fn kernel_histogram_mass_and_csv() {
        let mut rs = RandomStream::new(13);
        let a = PsdMatrix::from_diag(&[1.0, 0.25]).unwrap();
        let b = PsdMatrix::identity(2);
        let h = estimate_kernel(&a, &b, 3, 5000, 10, &mut rs).unwrap();
        assert_abs_diff_eq!(h.total_mass(), 1.0, epsilon = 1e-12);
        assert_eq!(h.outside, 0);
        assert!(h.counts.keys().all(|c| c[0] >= c[1]));
        let csv = h.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "bin_low_0,bin_high_0,bin_low_1,bin_high_1,density");
        assert_eq!(lines.count(), 55);
    }

    #[test]
    fn gof_rejects_out_of_regime() {
        let mut rs = RandomStream::new(1);
        assert!(matches!(corner_gof(3, 2, 100, 5, &mut rs), Err(Error::Domain(_))));
    }
}
