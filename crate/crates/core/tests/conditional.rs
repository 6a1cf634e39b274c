use prodform::bessel::{sample_tau, sph_j, tau_cdf, verify_scalar_product, ScalarMethod, TauDistribution};
use prodform::conditional::{
    bi_invariance_check, estimate_kernel, h3_singularity_probe, sample_corner, sample_h3, sample_h3_corner, sampler_equivalence_check,
};
use prodform::hypergeometric::{bessel_argument, hyper0f1_series, hyper0f1_stiefel_mc, hyper0f1_two_arg, Route, DEFAULT_K_MAX};
use prodform::linalg::{operator_norm, psd_sqrt};
use prodform::mc::collect_samples;
use prodform::stats::{ks_one_sample, ks_two_sample};
use prodform::verify::{run_verify_matrix_one, run_verify_matrix_two};
use prodform::{OrthogonalMatrix, PsdMatrix, RandomStream, RealMatrix};

const LEVEL: f64 = 0.01;
const N: usize = 100_000;

fn psd(rows: &[&[f64]]) -> PsdMatrix {
    PsdMatrix::new(prodform::SymmetricMatrix::new(RealMatrix::from_rows(rows).unwrap()).unwrap()).unwrap()
}

#[test]
fn scalar_h3_has_tau_law() {
    let mut rs = RandomStream::new(31);
    for p in [2usize, 3, 5] {
        let t = TauDistribution::new(p as u32, 1.0, 0.6).unwrap();
        let h1 = PsdMatrix::scalar(1.0).unwrap();
        let h2 = PsdMatrix::scalar(0.6).unwrap();
        let gauss = collect_samples(N, &mut rs, |s| Ok(sample_h3(&h1, &h2, p, s)?[(0, 0)])).unwrap();
        let corner = collect_samples(N, &mut rs, |s| Ok(sample_h3_corner(&h1, &h2, p, s)?[(0, 0)])).unwrap();
        let tau = collect_samples(N, &mut rs, |s| Ok(sample_tau(&t, s))).unwrap();
        for xs in [&gauss, &corner] {
            let one = ks_one_sample(xs, |u| tau_cdf(&t, u)).unwrap();
            let two = ks_two_sample(xs, &tau).unwrap();
            assert!(one.p_value >= LEVEL && two.p_value >= LEVEL, "p={p}: {} {}", one.p_value, two.p_value);
        }
    }
}

#[test]
fn two_samplers_agree_in_three_dimensions() {
    let mut rs = RandomStream::new(32);
    let h1 = psd(&[&[1.0, 0.2, 0.0], &[0.2, 0.8, 0.1], &[0.0, 0.1, 0.5]]);
    let h2 = PsdMatrix::from_diag(&[0.7, 0.4, 0.9]).unwrap();
    let r = sampler_equivalence_check(&h1, &h2, 5, N, &mut rs).unwrap();
    assert!(r.pass, "{}", r.to_json());
}

#[test]
fn h3_is_symmetric_in_its_arguments() {
    let mut rs = RandomStream::new(33);
    let h1 = PsdMatrix::from_diag(&[1.0, 2.0]).unwrap();
    let h2 = psd(&[&[0.6, 0.2], &[0.2, 0.9]]);
    let a = collect_samples(N, &mut rs, |s| Ok(sample_h3(&h1, &h2, 3, s)?.as_matrix().trace())).unwrap();
    let b = collect_samples(N, &mut rs, |s| Ok(sample_h3(&h2, &h1, 3, s)?.as_matrix().trace())).unwrap();
    assert!(ks_two_sample(&a, &b).unwrap().p_value >= LEVEL);
}

#[test]
fn scalar_corner_in_three_dimensions_is_uniform() {
    let mut rs = RandomStream::new(34);
    let xs = collect_samples(N, &mut rs, |s| Ok(sample_corner(3, 1, s)?.matrix().get(0, 0))).unwrap();
    let ks = ks_one_sample(&xs, |t| ((t + 1.0) / 2.0).clamp(0.0, 1.0)).unwrap();
    assert!(ks.p_value >= LEVEL, "{}", ks.p_value);
}

#[test]
fn full_corner_is_orthogonal() {
    let mut rs = RandomStream::new(35);
    let corners = collect_samples(2000, &mut rs, |s| sample_corner(3, 3, s)).unwrap();
    assert!(corners.iter().all(|c| (operator_norm(c.matrix()) - 1.0).abs() < 1e-12));
}

#[test]
fn scalar_kernel_histogram_approximates_tau() {
    let mut rs = RandomStream::new(36);
    let (x, z) = (1.0, 0.7);
    let hist = estimate_kernel(&PsdMatrix::scalar(x * x).unwrap(), &PsdMatrix::scalar(z * z).unwrap(), 4, 1_000_000, 200, &mut rs).unwrap();
    let t = TauDistribution::new(4, x, z).unwrap();
    let w = hist.bin_width();
    let reference: Vec<f64> = (0..200).map(|i| tau_cdf(&t, (i + 1) as f64 * w) - tau_cdf(&t, i as f64 * w)).collect();
    let l1 = hist.l1_distance_1d(&reference);
    assert!(l1 < 0.05, "L1 = {l1}");
    assert!((hist.total_mass() - 1.0).abs() < 1e-12);
    assert_eq!(hist.outside, 0);
}

#[test]
fn matrix_kernel_stays_in_norm_ball() {
    let mut rs = RandomStream::new(37);
    let a = psd(&[&[1.0, 0.3], &[0.3, 0.5]]);
    let b = PsdMatrix::from_diag(&[0.4, 0.2]).unwrap();
    let hist = estimate_kernel(&a, &b, 3, 50_000, 20, &mut rs).unwrap();
    assert_eq!(hist.outside, 0);
    assert!((hist.total_mass() - 1.0).abs() < 1e-12);
    let bound = operator_norm(psd_sqrt(&a).unwrap().as_matrix()) + operator_norm(psd_sqrt(&b).unwrap().as_matrix());
    assert!((hist.upper - bound).abs() < 1e-12);
    // every occupied cell lies in the chamber λ₁ >= λ₂
    assert!(hist.counts.keys().all(|cell| cell[0] >= cell[1]));
}

#[test]
fn stiefel_mc_reduces_to_bessel_for_one_column() {
    let mut rs = RandomStream::new(38);
    for (p, h, c) in [(3usize, 0.8, &[0.5, -0.3, 0.4][..]), (5, 1.3, &[0.2, 0.1, 0.0, 0.0, 0.0]), (2, 0.5, &[1.0, 0.5])] {
        let col = RealMatrix::column_vector(c).unwrap();
        let norm = col.frobenius_norm();
        let e = hyper0f1_stiefel_mc(p, &PsdMatrix::scalar(h).unwrap(), &col, N, &mut rs).unwrap();
        let exact = sph_j(0.5 * p as f64 - 1.0, 2.0 * norm * h);
        assert!((e.mean - exact).abs() <= 4.0 * e.std_error, "p={p}: {e:?} vs {exact}");
        assert!(e.mean_im.abs() <= 4.0 * e.std_error_im);
    }
}

#[test]
fn stiefel_mc_matches_series_on_small_arguments() {
    let mut rs = RandomStream::new(39);
    type Rows<'a> = &'a [&'a [f64]];
    let cases: [(usize, Rows, Rows); 4] = [
        (4, &[&[0.6, 0.1], &[0.1, 0.4]], &[&[0.5, 0.0], &[0.2, 0.7], &[0.0, 0.3], &[0.1, 0.1]]),
        (3, &[&[1.0, 0.0], &[0.0, 0.5]], &[&[0.4, 0.1], &[0.0, 0.6], &[0.3, 0.0]]),
        (2, &[&[0.9, 0.2], &[0.2, 0.3]], &[&[0.8, 0.0], &[0.1, 0.5]]),
        (
            5,
            &[&[0.5, 0.0, 0.1], &[0.0, 0.7, 0.0], &[0.1, 0.0, 0.4]],
            &[&[0.6, 0.0, 0.0], &[0.0, 0.5, 0.2], &[0.1, 0.0, 0.7], &[0.0, 0.3, 0.0], &[0.2, 0.0, 0.1]],
        ),
    ];
    for (p, h, c) in cases {
        let h = psd(h);
        let c = RealMatrix::from_rows(c).unwrap();
        let series = hyper0f1_series(0.5 * p as f64, &bessel_argument(h.as_matrix(), &c).unwrap(), DEFAULT_K_MAX).unwrap();
        assert!(series.warnings.is_empty());
        let e = hyper0f1_stiefel_mc(p, &h, &c, N, &mut rs).unwrap();
        assert!((e.mean - series.value).abs() <= (4.0 * e.std_error).max(1e-3), "p={p}: {e:?} vs {}", series.value);
        assert!(e.mean_im.abs() <= 4.0 * e.std_error_im);
    }
}

#[test]
fn two_argument_routes_agree() {
    let mut rs = RandomStream::new(40);
    let a = PsdMatrix::from_diag(&[1.0, 0.3]).unwrap();
    let c = RealMatrix::from_rows(&[&[0.5, 0.1], &[0.0, 0.6], &[0.2, 0.0]]).unwrap();
    let series = hyper0f1_two_arg(3, &a, &c, 2000, Route::Series, &mut rs).unwrap();
    let mc = hyper0f1_two_arg(3, &a, &c, 200_000, Route::Mc, &mut rs).unwrap();
    let se = (series.std_error.powi(2) + mc.std_error.powi(2)).sqrt();
    assert!((series.mean - mc.mean).abs() <= 4.0 * se, "{series:?} vs {mc:?}");
}

#[test]
fn matrix_one_collapses_to_scalar_formula() {
    let mut rs = RandomStream::new(41);
    let (p, x, z) = (3usize, 1.0, 2.0);
    let c = RealMatrix::column_vector(&[0.75, 0.0, 0.0]).unwrap();
    let r = run_verify_matrix_one(p, &PsdMatrix::scalar(x).unwrap(), &PsdMatrix::scalar(z).unwrap(), &c, N, 1e-2, &mut rs).unwrap();
    // j(2|C|x) j(2|C|z) is the scalar left side at y = 1.5
    let s = verify_scalar_product(p as u32, x, z, 1.5, ScalarMethod::Quadrature, 0, 1e-8, &mut rs).unwrap();
    assert!((r.lhs - s.lhs).abs() < 1e-12, "{} vs {}", r.lhs, s.lhs);
    assert!((r.rhs - s.rhs).abs() <= 4.0 * r.std_error.unwrap(), "{}", r.to_json());
}

#[test]
fn matrix_two_collapses_to_scalar_formula() {
    let mut rs = RandomStream::new(42);
    let c = RealMatrix::column_vector(&[0.5, 0.5, 0.0, 0.0]).unwrap();
    let r =
        run_verify_matrix_two(4, &PsdMatrix::scalar(1.0).unwrap(), &PsdMatrix::scalar(0.25).unwrap(), &c, 8, 5000, 2e-2, &mut rs).unwrap();
    let y = 2.0 * c.frobenius_norm();
    let s = verify_scalar_product(4, 1.0, 0.5, y, ScalarMethod::Quadrature, 0, 1e-8, &mut rs).unwrap();
    assert!((r.lhs - s.lhs).abs() < 1e-12);
    assert!(r.pass, "{}", r.to_json());
    assert!((r.rhs - s.rhs).abs() <= 4.0 * r.std_error.unwrap());
}

#[test]
fn bi_invariance_trivial_cases() {
    let mut rs = RandomStream::new(43);
    let h1 = PsdMatrix::from_diag(&[1.0, 2.0]).unwrap();
    let h2 = PsdMatrix::identity(2);
    let r = bi_invariance_check(&h1, &h2, 3, &OrthogonalMatrix::identity(2), 50_000, &mut rs).unwrap();
    assert!(r.pass, "{}", r.to_json());
    let r = bi_invariance_check(
        &PsdMatrix::scalar(1.0).unwrap(),
        &PsdMatrix::scalar(0.5).unwrap(),
        2,
        &OrthogonalMatrix::identity(1),
        50_000,
        &mut rs,
    )
    .unwrap();
    assert!(r.pass, "{}", r.to_json());
}

#[test]
fn bi_invariance_needs_extra_dimension() {
    let mut rs = RandomStream::new(44);
    let h = PsdMatrix::identity(2);
    assert!(bi_invariance_check(&h, &h, 2, &OrthogonalMatrix::identity(2), 100, &mut rs).is_err());
}

#[test]
fn singularity_probe_of_point_mass() {
    let mut rs = RandomStream::new(45);
    let zero = PsdMatrix::zeros(2);
    let r = h3_singularity_probe(&zero, &zero, &mut rs, 500).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert!(!r.warnings.is_empty());
}
