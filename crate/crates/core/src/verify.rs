//! End-to-end checks of the product formulas of one and two matrix arguments.

use crate::conditional::sample_h3;
use crate::error::{Error, Result};
use crate::hypergeometric::{
    hyper0f1_auto, hyper0f1_two_arg, hyper0f1_two_arg_series, one_arg_sample, Route, DEFAULT_K_MAX, SERIES_NORM_LIMIT,
};
use crate::linalg::{operator_norm, psd_sqrt, sym_eigenvalues, PsdMatrix, RealMatrix};
use crate::mc::mc_mean;
use crate::report::VerificationReport;
use crate::sampling::{sample_haar_orthogonal, RandomStream};

/// Route for `₀F₁(p/2; -ξ CᵀC ξ)` when every `ξ` has `‖ξ‖ <= bound`:
/// the series if the argument norm stays within [`SERIES_NORM_LIMIT`].
fn route_for(bound: f64, c: &RealMatrix) -> Route {
    let ctc = operator_norm(c).powi(2);
    if bound * bound * ctc <= SERIES_NORM_LIMIT {
        Route::Series
    } else {
        Route::Mc
    }
}

/// Checks `₀F₁(p/2; -H₁CᵀCH₁) ₀F₁(p/2; -H₂CᵀCH₂) = E ₀F₁(p/2; -H₃CᵀCH₃)`
/// with `H₃` drawn by [`sample_h3`].
#[allow(clippy::too_many_arguments)]
pub fn run_verify_matrix_one(
    p: usize,
    h1: &PsdMatrix,
    h2: &PsdMatrix,
    c: &RealMatrix,
    n: usize,
    tolerance: f64,
    rs: &mut RandomStream,
) -> Result<VerificationReport> {
    let m = h1.dim();
    if h2.dim() != m || c.cols() != m || c.rows() != p {
        return Err(Error::Shape(format!("need H1, H2 of size {m}x{m} and C of size {p}x{m}")));
    }
    if p < m {
        return Err(Error::Shape(format!("need p >= m, got p={p}, m={m}")));
    }
    let mut report = VerificationReport::new("verify-matrix-one", rs.seed())
        .param("p", p)
        .param("m", m)
        .param("h1", h1.as_matrix().as_slice())
        .param("h2", h2.as_matrix().as_slice())
        .param("c", c.as_matrix_slice());

    let (f1, w1) = hyper0f1_auto(p, h1, c, n, rs)?;
    let (f2, w2) = hyper0f1_auto(p, h2, c, n, rs)?;
    w1.into_iter().chain(w2).for_each(|w| report.warn(w));
    let lhs = f1.mean * f2.mean;
    let se_lhs = ((f2.mean * f1.std_error).powi(2) + (f1.mean * f2.std_error).powi(2)).sqrt();

    let bound = operator_norm(h1.as_matrix()) + operator_norm(h2.as_matrix());
    let route = route_for(bound, c);
    report.detail("rhs_route", route);
    let rhs = mc_mean(n, rs, |sub| {
        let h3 = sample_h3(h1, h2, p, sub)?;
        one_arg_sample(p, h3.as_matrix(), c, route, DEFAULT_K_MAX, sub)
    })?;
    report.detail("lhs_std_error", se_lhs);
    report.detail("rhs_std_error", rhs.std_error);
    let se = (se_lhs.powi(2) + rhs.std_error.powi(2)).sqrt();
    Ok(report.finish(lhs, rhs.mean, Some(se), tolerance, Some(n)))
}

/// Checks `₀F₁(p/2; A, -CᵀC) ₀F₁(p/2; B, -CᵀC) = E ₀F₁(p/2; -H₃CᵀCH₃)` with
/// `H₃ ~ μ(O₁√A O₁ᵀ, O₂√B O₂ᵀ)`, `O₁, O₂` Haar on `O(m)`. Each side uses
/// `n_haar` Haar draws; the right side averages `n_inner` draws of `H₃` per
/// Haar pair, and its standard error is taken over the pair means.
#[allow(clippy::too_many_arguments)]
pub fn run_verify_matrix_two(
    p: usize,
    a: &PsdMatrix,
    b: &PsdMatrix,
    c: &RealMatrix,
    n_haar: usize,
    n_inner: usize,
    tolerance: f64,
    rs: &mut RandomStream,
) -> Result<VerificationReport> {
    let m = a.dim();
    if b.dim() != m || c.cols() != m || c.rows() != p {
        return Err(Error::Shape(format!("need A, B of size {m}x{m} and C of size {p}x{m}")));
    }
    if p < m + 1 {
        return Err(Error::Domain(format!("the two-argument formula is asserted for p >= m + 1, got p={p}, m={m}")));
    }
    if n_haar < 2 || n_inner < 1 {
        return Err(Error::Domain("need n_haar >= 2 and n_inner >= 1".into()));
    }
    let mut report = VerificationReport::new("verify-matrix-two", rs.seed())
        .param("p", p)
        .param("m", m)
        .param("a", a.as_matrix().as_slice())
        .param("b", b.as_matrix().as_slice())
        .param("c", c.as_matrix_slice())
        .param("n_haar", n_haar)
        .param("n_inner", n_inner);

    let ra = psd_sqrt(a)?;
    let rb = psd_sqrt(b)?;
    let na = operator_norm(ra.as_matrix());
    let nb = operator_norm(rb.as_matrix());

    let fa = hyper0f1_two_arg(p, a, c, n_haar, route_for(na, c), rs)?;
    let fb = hyper0f1_two_arg(p, b, c, n_haar, route_for(nb, c), rs)?;
    let lhs = fa.mean * fb.mean;
    let se_lhs = ((fb.mean * fa.std_error).powi(2) + (fa.mean * fb.std_error).powi(2)).sqrt();

    // independent value of the left side from the two-argument series
    let ctc = c.gram().scale(-1.0);
    let ctc_eig = sym_eigenvalues(&ctc)?;
    if operator_norm(ctc.as_matrix()) * na.max(nb).powi(2) <= SERIES_NORM_LIMIT {
        let sa = hyper0f1_two_arg_series(0.5 * p as f64, &sym_eigenvalues(a.as_symmetric())?, &ctc_eig, DEFAULT_K_MAX)?;
        let sb = hyper0f1_two_arg_series(0.5 * p as f64, &sym_eigenvalues(b.as_symmetric())?, &ctc_eig, DEFAULT_K_MAX)?;
        report.detail("lhs_series", sa.value * sb.value);
    }

    let route = route_for(na + nb, c);
    report.detail("rhs_route", route);
    let rhs = mc_mean(n_haar, rs, |sub| {
        let o1 = sample_haar_orthogonal(m, sub)?;
        let o2 = sample_haar_orthogonal(m, sub)?;
        let h1 = ra.conjugate(&o1);
        let h2 = rb.conjugate(&o2);
        let inner = mc_mean(n_inner, sub, |s| {
            let h3 = sample_h3(&h1, &h2, p, s)?;
            one_arg_sample(p, h3.as_matrix(), c, route, DEFAULT_K_MAX, s)
        })?;
        Ok(inner.mean)
    })?;
    report.detail("lhs_std_error", se_lhs);
    report.detail("rhs_std_error", rhs.std_error);
    let se = (se_lhs.powi(2) + rhs.std_error.powi(2)).sqrt();
    Ok(report.finish(lhs, rhs.mean, Some(se), tolerance, Some(n_haar * n_inner)))
}

trait MatrixSlice {
    fn as_matrix_slice(&self) -> Vec<Vec<f64>>;
}

impl MatrixSlice for RealMatrix {
    fn as_matrix_slice(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.get(i, j)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_c_is_exact() {
        let mut rs = RandomStream::new(1);
        let h1 = PsdMatrix::from_diag(&[1.0, 0.5]).unwrap();
        let h2 = PsdMatrix::identity(2);
        let r = run_verify_matrix_one(4, &h1, &h2, &RealMatrix::zeros(4, 2), 1000, 1e-2, &mut rs).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
        assert!(r.pass);
        let r = run_verify_matrix_two(3, &h1, &h2, &RealMatrix::zeros(3, 2), 4, 10, 2e-2, &mut rs).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
        assert!(r.pass);
    }

    #[test]
    fn two_argument_needs_extra_dimension() {
        let mut rs = RandomStream::new(1);
        let a = PsdMatrix::identity(2);
        assert!(matches!(run_verify_matrix_two(2, &a, &a, &RealMatrix::zeros(2, 2), 4, 4, 1e-2, &mut rs), Err(Error::Domain(_))));
    }
}
