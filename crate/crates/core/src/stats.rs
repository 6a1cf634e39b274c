//! Goodness-of-fit tests and running moments.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Result of a Kolmogorov–Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the asymptotic distribution.
    pub n_eff: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // P(K <= λ) = √(2π)/λ Σ exp(-(2j-1)² π² / (8λ²))
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            let term = (-(k * k) * pi2 / (8.0 * lambda * lambda)).exp();
            cdf += term;
            if term < 1e-17 * cdf {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * cdf;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        // P(K > λ) = 2 Σ (-1)^{j-1} exp(-2 j² λ²)
        let mut sf = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            sf += if j % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// KS statistic at which the asymptotic p-value equals `level`.
pub fn ks_critical_value(n_eff: f64, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = n_eff.sqrt();
    hi / (s + 0.12 + 0.11 / s)
}

/// Upper `level` quantile of the chi-square distribution with `dof` degrees
/// of freedom.
pub fn chi_square_critical_value(dof: usize, level: f64) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(dist.inverse_cdf(1.0 - level))
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample KS test of `xs` against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if xs.is_empty() {
        return Err(Error::Domain("KS test needs at least one observation".into()));
    }
    let v = sorted(xs)?;
    let values: Vec<f64> = v.iter().map(|&x| cdf(x)).collect();
    ks_from_sorted_cdf(&values)
}

/// One-sample KS test from the CDF evaluated at the sorted observations.
pub fn ks_from_sorted_cdf(cdf_values: &[f64]) -> Result<KsResult> {
    if cdf_values.is_empty() {
        return Err(Error::Domain("KS test needs at least one observation".into()));
    }
    let n = cdf_values.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &f) in cdf_values.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n), n_eff: n })
}

/// Two-sample KS test.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Domain("KS test needs non-empty samples".into()));
    }
    let a = sorted(xs)?;
    let b = sorted(ys)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n_eff), n_eff })
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells after merging sparse expected counts.
    pub cells: usize,
}

/// Pearson chi-square test of observed counts against cell probabilities.
/// Adjacent cells are pooled until every pooled expected count is at least
/// `min_expected`.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64], min_expected: f64) -> Result<ChiSquareResult> {
    if observed.len() != probabilities.len() || observed.is_empty() {
        return Err(Error::Shape("observed and expected cell counts differ".into()));
    }
    let n: u64 = observed.iter().sum();
    let total_p: f64 = probabilities.iter().sum();
    if n == 0 || total_p.is_nan() || total_p <= 0.0 {
        return Err(Error::Domain("empty sample or zero total probability".into()));
    }
    let nf = n as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        o_acc += o as f64;
        e_acc += nf * p / total_p;
        if e_acc >= min_expected {
            pooled.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => pooled.push((o_acc, e_acc)),
        }
    }
    if pooled.len() < 2 {
        return Err(Error::Domain("too few cells for a chi-square test".into()));
    }
    let statistic: f64 = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(ChiSquareResult { statistic, dof, p_value: dist.sf(statistic), cells: pooled.len() })
}

/// Welford running mean and variance, mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        let mean = self.mean + delta * other.n as f64 / nf;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / nf;
        RunningStats { n, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Merge a list of partial statistics by a balanced pairwise tree, so the
/// result depends only on the list order.
pub fn pairwise_merge(parts: &[RunningStats]) -> RunningStats {
    match parts.len() {
        0 => RunningStats::default(),
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            pairwise_merge(l).merge(&pairwise_merge(r))
        }
    }
}

/// Pairwise summation over a slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}
