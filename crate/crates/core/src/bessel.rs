//! Normalized spherical Bessel functions `j_ν(z) = Σ (-1)^l (z/2)^{2l} / ((ν+1)_l l!)`,
//! the radial law `τ_{x,z}` of the scalar product formula, and the scalar
//! verifiers built on them.
//!
//! For an integer dimension `p` the geometric index is `ν = p/2 - 1`. The law
//! `τ_{x,z}` is that of `sqrt(x² + z² + 2xzξ)` where `ξ` is the cosine of the
//! angle between two independent uniform points of `S^{p-1}`; for `p >= 2`
//! `ξ` has density `Γ(p/2)/(Γ(1/2)Γ((p-1)/2)) (1-ξ²)^{(p-3)/2}` on `(-1, 1)`,
//! and the change of variables `u = sqrt(x² + z² + 2xzξ)`, `dξ = u/(xz) du`
//! gives the density of `τ_{x,z}` on `(|x - z|, x + z)`.

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::mc::{mc_mean, mc_mean_complex, McEstimate};
use crate::quadrature::{integrate_with_doubling, GaussLegendre, DEFAULT_NODES};
use crate::report::VerificationReport;
use crate::sampling::{sample_sphere_uniform, RandomStream};

/// Above this |z|, half-integer orders switch to the trigonometric closed forms.
pub const Z_SWITCH: f64 = 30.0;

/// Series iteration cap.
const MAX_SERIES_TERMS: usize = 4000;

/// Doubling-check tolerance for the product-formula quadrature.
const DOUBLING_TOL: f64 = 1e-12;

mod dd {
    //! Minimal double-double arithmetic (about 32 significant digits), enough
    //! to keep the alternating Bessel series accurate for moderate |z|.

    #[derive(Clone, Copy, Debug)]
    pub(super) struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    #[inline]
    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    impl Dd {
        pub fn new(x: f64) -> Self {
            Dd { hi: x, lo: 0.0 }
        }

        pub fn from_prod(a: f64, b: f64) -> Self {
            let (hi, lo) = two_prod(a, b);
            Dd { hi, lo }
        }

        pub fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let (t, f) = two_sum(self.lo, o.lo);
            let (s, e) = quick_two_sum(s, e + t);
            let (hi, lo) = quick_two_sum(s, e + f);
            Dd { hi, lo }
        }

        pub fn mul(self, o: Dd) -> Dd {
            let (p, e) = two_prod(self.hi, o.hi);
            let e = e + (self.hi * o.lo + self.lo * o.hi);
            let (hi, lo) = quick_two_sum(p, e);
            Dd { hi, lo }
        }

        pub fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r = self.add(o.mul(Dd::new(q1)).neg());
            let q2 = r.hi / o.hi;
            let r = r.add(o.mul(Dd::new(q2)).neg());
            let q3 = r.hi / o.hi;
            let (hi, lo) = quick_two_sum(q1, q2);
            Dd { hi, lo }.add(Dd::new(q3))
        }

        pub fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }
    }
}

/// Value of `j_ν(z)` with evaluation metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesselValue {
    pub value: f64,
    /// Number of series terms used (0 for closed forms).
    pub terms: usize,
    pub warning: Option<String>,
}

/// Normalized spherical Bessel function `j_ν(z)`, `ν > -1`.
pub fn spherical_bessel(nu: f64, z: f64) -> Result<BesselValue> {
    if !nu.is_finite() || nu <= -1.0 {
        return Err(Error::Domain(format!("Bessel order must satisfy ν > -1, got {nu}")));
    }
    if !z.is_finite() {
        return Err(Error::Domain("Bessel argument must be finite".into()));
    }
    let z = z.abs();
    if z == 0.0 {
        return Ok(BesselValue { value: 1.0, terms: 1, warning: None });
    }
    if z > Z_SWITCH {
        if let Some(k) = half_integer_order(nu) {
            if let Some(v) = half_integer_closed_form(k, z) {
                return Ok(BesselValue { value: v, terms: 0, warning: None });
            }
        }
    }
    Ok(series(nu, z))
}

/// `j_ν(z)`, returning NaN on invalid input. Intended for inner loops where
/// the order has already been validated.
#[inline]
pub fn sph_j(nu: f64, z: f64) -> f64 {
    spherical_bessel(nu, z).map_or(f64::NAN, |b| b.value)
}

/// `Some(k)` when `ν = k - 1/2` for an integer `k >= 0`.
fn half_integer_order(nu: f64) -> Option<i64> {
    let k = nu + 0.5;
    (k >= 0.0 && k.fract() == 0.0).then_some(k as i64)
}

/// `j_{k-1/2}(z)` from the trigonometric forms. With `s_n` the classical
/// spherical Bessel function, `j_{n+1/2}(z) = (2n+1)!! s_n(z) / z^n`.
/// Upward recurrence is only stable for `n < z`, so larger orders return `None`.
fn half_integer_closed_form(k: i64, z: f64) -> Option<f64> {
    if k == 0 {
        return Some(z.cos());
    }
    let n = k - 1;
    if n as f64 >= 0.5 * z {
        return None;
    }
    let (s, c) = z.sin_cos();
    let mut prev = c / z; // s_{-1}
    let mut cur = s / z; // s_0
    for i in 0..n {
        let next = (2 * i + 1) as f64 / z * cur - prev;
        prev = cur;
        cur = next;
    }
    let mut scale = 1.0;
    for i in 0..n {
        scale *= (2 * i + 3) as f64 / z;
    }
    Some(cur * scale)
}

fn series(nu: f64, z: f64) -> BesselValue {
    use dd::Dd;
    let half = 0.5 * z;
    let q = Dd::from_prod(half, half);
    let mut sum = Dd::new(1.0);
    let mut term = Dd::new(1.0);
    let mut max_term: f64 = 1.0;
    let mut converged = false;
    let mut terms = 1;
    for l in 0..MAX_SERIES_TERMS {
        let denom = Dd::from_prod(nu + 1.0 + l as f64, (l + 1) as f64);
        term = term.mul(q).div(denom).neg();
        sum = sum.add(term);
        terms += 1;
        max_term = max_term.max(term.hi.abs());
        if term.hi.abs() < 1e-16 * sum.hi.abs() && (l as f64 + 1.0) > half {
            converged = true;
            break;
        }
        if term.hi == 0.0 {
            converged = true;
            break;
        }
    }
    let value = sum.to_f64();
    let warning = if !converged {
        Some(format!("series did not converge within {MAX_SERIES_TERMS} terms"))
    } else if max_term * 1e-30 > 1e-12 * value.abs().max(1e-300) {
        Some(format!("series cancellation: largest term {max_term:e} against value {value:e}"))
    } else {
        None
    };
    BesselValue { value, terms, warning }
}

/// Density of `ξ = <Θ₁, Θ₂>` for independent uniform points on `S^{p-1}`.
pub fn cos_angle_density(p: u32, xi: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::Domain(format!("cosine density needs p >= 2, got {p}")));
    }
    if !(xi > -1.0 && xi < 1.0) {
        return Ok(0.0);
    }
    Ok(cos_angle_density_gaps(p, 1.0 + xi, 1.0 - xi))
}

/// Density in terms of `1 + ξ` and `1 - ξ`.
fn cos_angle_density_gaps(p: u32, one_plus: f64, one_minus: f64) -> f64 {
    let base = one_plus * one_minus;
    match p {
        3 => cos_angle_norm(p),
        _ => cos_angle_norm(p) * base.powf(0.5 * (p as f64 - 3.0)),
    }
}

/// `Γ(p/2) / (Γ(1/2) Γ((p-1)/2))`, via `c_{p+2} = c_p p/(p-1)` from
/// `c_2 = 1/π`, `c_3 = 1/2` for moderate `p`.
fn cos_angle_norm(p: u32) -> f64 {
    if p > 200 {
        let pf = p as f64;
        return (ln_gamma(0.5 * pf) - ln_gamma(0.5) - ln_gamma(0.5 * (pf - 1.0))).exp();
    }
    let (mut c, mut q) = if p.is_multiple_of(2) { (std::f64::consts::FRAC_1_PI, 2) } else { (0.5, 3) };
    while q < p {
        c *= q as f64 / (q as f64 - 1.0);
        q += 2;
    }
    c
}

/// The law `τ_{x,z}` for dimension `p` (index `ν = p/2 - 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauDistribution {
    p: u32,
    x: f64,
    z: f64,
}

impl TauDistribution {
    pub fn new(p: u32, x: f64, z: f64) -> Result<Self> {
        if p < 1 {
            return Err(Error::Domain("dimension p must be at least 1".into()));
        }
        if !(x > 0.0 && z > 0.0 && x.is_finite() && z.is_finite()) {
            return Err(Error::Domain(format!("radii must be positive and finite, got x={x}, z={z}")));
        }
        Ok(TauDistribution { p, x, z })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn nu(&self) -> f64 {
        0.5 * self.p as f64 - 1.0
    }

    /// `[|x - z|, x + z]`.
    pub fn support(&self) -> (f64, f64) {
        ((self.x - self.z).abs(), self.x + self.z)
    }

    /// Density at `u` given the distances `u - lo` and `hi - u` to the ends
    /// of the support. `1 ± ξ` are formed as products of these distances to
    /// avoid cancellation next to the endpoints.
    fn density_from_gaps(&self, u: f64, d_lo: f64, d_hi: f64) -> f64 {
        if !(d_lo > 0.0 && d_hi > 0.0) {
            return 0.0;
        }
        let (lo, hi) = self.support();
        let two_xz = 2.0 * (self.x * self.z);
        let one_plus = d_lo * (d_lo + 2.0 * lo) / two_xz;
        let one_minus = d_hi * (2.0 * hi - d_hi) / two_xz;
        cos_angle_density_gaps(self.p, one_plus, one_minus) * u / (self.x * self.z)
    }

    fn u_of(&self, xi: f64) -> f64 {
        (self.x * self.x + self.z * self.z + 2.0 * self.x * self.z * xi).max(0.0).sqrt()
    }
}

/// Density of `τ_{x,z}` at `u` (requires `p >= 2`).
pub fn tau_density(t: &TauDistribution, u: f64) -> Result<f64> {
    if u < 0.0 {
        return Err(Error::Domain(format!("radius must be nonnegative, got {u}")));
    }
    if t.p < 2 {
        return Err(Error::Domain("τ has no density for p = 1".into()));
    }
    let (lo, hi) = t.support();
    if !(u > lo && u < hi) {
        return Ok(0.0);
    }
    Ok(t.density_from_gaps(u, u - lo, hi - u))
}

/// CDF of `τ_{x,z}` at `u`. For `p >= 2` this integrates [`tau_density`] by
/// endpoint-weighted Gauss–Legendre quadrature, always from the nearer end of
/// the support so that only one endpoint singularity is involved.
pub fn tau_cdf(t: &TauDistribution, u: f64) -> f64 {
    let (lo, hi) = t.support();
    if u <= lo {
        return if t.p == 1 && u == lo { 0.5 } else { 0.0 };
    }
    if u >= hi {
        return 1.0;
    }
    if t.p == 1 {
        return 0.5;
    }
    let rule = GaussLegendre::cached(DEFAULT_NODES);
    let mid = 0.5 * (lo + hi);
    if u <= mid {
        let f = |v: f64, d: f64, _: f64| t.density_from_gaps(v, d, hi - v);
        rule.integrate_endpoint_gaps(lo, u, f).clamp(0.0, 1.0)
    } else {
        let f = |v: f64, _: f64, d: f64| t.density_from_gaps(v, v - lo, d);
        (1.0 - rule.integrate_endpoint_gaps(u, hi, f)).clamp(0.0, 1.0)
    }
}

/// CDF values at every point of an ascending sample, by cumulative quadrature
/// in the endpoint-regularized variable `s ∈ [0, π]` where
/// `u = lo + (hi - lo)(1 - cos s)/2`. Each gap between consecutive points gets
/// its own 8-node rule, so the cost is linear in the sample size.
pub fn tau_cdf_sorted(t: &TauDistribution, sorted: &[f64]) -> Result<Vec<f64>> {
    if t.p < 2 {
        return Ok(sorted.iter().map(|&u| tau_cdf(t, u)).collect());
    }
    let (lo, hi) = t.support();
    let width = hi - lo;
    let rule = GaussLegendre::cached(8);
    let integrand = |s: f64| {
        let (sn, cs) = (0.5 * s).sin_cos();
        let (d_lo, d_hi) = (width * sn * sn, width * cs * cs);
        let u = if d_lo <= d_hi { lo + d_lo } else { hi - d_hi };
        t.density_from_gaps(u, d_lo, d_hi) * 0.5 * width * s.sin()
    };
    let to_s = |u: f64| {
        let c = 1.0 - 2.0 * (u - lo) / width;
        c.clamp(-1.0, 1.0).acos()
    };
    let mut out = Vec::with_capacity(sorted.len());
    let mut acc = 0.0;
    let mut s_prev = 0.0;
    for w in sorted.windows(2) {
        if w[1] < w[0] {
            return Err(Error::Domain("sample must be sorted ascending".into()));
        }
    }
    for &u in sorted {
        let s = to_s(u.clamp(lo, hi));
        if s > s_prev {
            acc += rule.integrate(s_prev, s, integrand);
            s_prev = s;
        }
        out.push(acc.clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Draws from `τ_{x,z}`: `ξ = 2B - 1` with `B ~ Beta((p-1)/2, (p-1)/2)`, or
/// `ξ = ±1` for `p = 1`, mapped through `u = sqrt(x² + z² + 2xzξ)`.
pub fn sample_tau(t: &TauDistribution, rs: &mut RandomStream) -> f64 {
    let xi = if t.p == 1 { rs.sign() } else { 2.0 * rs.symmetric_beta(0.5 * (t.p as f64 - 1.0)) - 1.0 };
    let (lo, hi) = t.support();
    t.u_of(xi).clamp(lo, hi)
}

/// Monte Carlo average of `exp(i<v, s>)` over uniform `s ∈ S^{p-1}`; estimates
/// `j_{p/2-1}(|v|)` with a vanishing imaginary part.
pub fn poisson_check(p: usize, v: &RealMatrix, n: usize, rs: &mut RandomStream) -> Result<McEstimate> {
    if p < 1 || n < 1 {
        return Err(Error::Domain("poisson check needs p >= 1 and n >= 1".into()));
    }
    if v.rows() != p || v.cols() != 1 {
        return Err(Error::Shape(format!("v must be a {p}x1 vector")));
    }
    let v = v.as_slice().to_vec();
    mc_mean_complex(n, rs, |sub| {
        let s = sample_sphere_uniform(p, sub);
        let dot: f64 = s.as_slice().iter().zip(&v).map(|(a, b)| a * b).sum();
        Ok(Complex64::new(dot.cos(), dot.sin()))
    })
}

/// How the right-hand side of the scalar product formula is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMethod {
    /// Gauss–Legendre quadrature against the density (p >= 2).
    Quadrature,
    /// Average over draws of [`sample_tau`].
    Mc,
    /// Enumeration of the two-point law (p = 1).
    Exact,
}

/// Checks `j_ν(xy) j_ν(zy) = ∫ j_ν(ξy) τ_{x,z}(dξ)` for `ν = p/2 - 1`.
#[allow(clippy::too_many_arguments)]
pub fn verify_scalar_product(
    p: u32,
    x: f64,
    z: f64,
    y: f64,
    method: ScalarMethod,
    n: usize,
    tolerance: f64,
    rs: &mut RandomStream,
) -> Result<VerificationReport> {
    let t = TauDistribution::new(p, x, z)?;
    let nu = t.nu();
    let mut report =
        VerificationReport::new("verify-scalar", rs.seed()).param("p", p).param("x", x).param("z", z).param("y", y).param("method", method);

    let jx = spherical_bessel(nu, x * y)?;
    let jz = spherical_bessel(nu, z * y)?;
    for w in [&jx.warning, &jz.warning].into_iter().flatten() {
        report.warn(w.clone());
    }
    let lhs = jx.value * jz.value;
    let (lo, hi) = t.support();

    let report = match method {
        ScalarMethod::Quadrature => {
            if p < 2 {
                return Err(Error::Domain("quadrature needs p >= 2; use the exact method for p = 1".into()));
            }
            let q = integrate_with_doubling(lo, hi, DEFAULT_NODES, |u, d_lo, d_hi| sph_j(nu, u * y) * t.density_from_gaps(u, d_lo, d_hi));
            report.detail("doubling_delta", q.doubling_delta);
            if q.doubling_delta > DOUBLING_TOL {
                report.warn(format!("node doubling changed the integral by {:e}", q.doubling_delta));
            }
            report.finish(lhs, q.value, None, tolerance, None)
        }
        ScalarMethod::Exact => {
            if p != 1 {
                return Err(Error::Domain("exact enumeration is only available for p = 1".into()));
            }
            let rhs = 0.5 * (sph_j(nu, lo * y) + sph_j(nu, hi * y));
            report.finish(lhs, rhs, None, tolerance, None)
        }
        ScalarMethod::Mc => {
            let est = mc_mean(n, rs, |sub| Ok(sph_j(nu, sample_tau(&t, sub) * y)))?;
            report.finish(lhs, est.mean, Some(est.std_error), tolerance, Some(n))
        }
    };
    Ok(report)
}
