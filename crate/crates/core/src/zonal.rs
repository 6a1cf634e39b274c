//! Zonal polynomials `C_κ` (Jack polynomials at `α = 2`) and the generalized
//! Pochhammer symbol of the real case.
//!
//! Values come from the branching rule for Jack polynomials in the `J`
//! normalization,
//!
//! `J_κ(x_1..x_n) = Σ_μ J_μ(x_1..x_{n-1}) x_n^{|κ|-|μ|} β_{κμ}`,
//!
//! summed over partitions `μ ⊆ κ` such that `κ/μ` is a horizontal strip, with
//! `β_{κμ} = Π_{s∈κ} B^κ(s) / Π_{s∈μ} B^μ(s)`. For a cell `s = (i, j)` of a
//! partition `ν`, `B^ν(s)` is the upper hook `ν'_j - i + α(ν_i - j + 1)` when
//! `κ'_j = μ'_j` and the lower hook `ν'_j - i + 1 + α(ν_i - j)` otherwise.
//! The zonal normalization is `C_κ = α^k k! / j_κ · J_κ`, where `j_κ` is the
//! product of upper and lower hooks over the cells of `κ`; with it
//! `Σ_{κ⊢k} C_κ(X) = (tr X)^k`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::partition::{enumerate_partitions, Partition};

/// Jack parameter of the real (zonal) case.
pub const ALPHA: f64 = 2.0;

/// Largest weight a table may be built for. Beyond it the `J` values leave
/// the range of `f64` for moderate arguments.
pub const MAX_TABLE_WEIGHT: usize = 80;

type TableCache = HashMap<(usize, usize), Arc<ZonalTable>>;

#[derive(Clone, Copy, Debug)]
struct Strip {
    mu: usize,
    mu_len: usize,
    removed: usize,
    beta: f64,
}

/// All partitions with at most `m` parts and weight at most `k_max`, with the
/// branching coefficients between them. Immutable once built; shared through
/// [`ZonalTable::cached`].
#[derive(Debug)]
pub struct ZonalTable {
    m: usize,
    k_max: usize,
    partitions: Vec<Partition>,
    /// `layer[k]..layer[k+1]` indexes the partitions of weight `k`.
    layer: Vec<usize>,
    strips: Vec<Vec<Strip>>,
    /// `α^k k! / j_κ`, the factor taking `J_κ` to `C_κ`.
    c_factor: Vec<f64>,
}

fn upper_hook(nu: &Partition, nu_conj: &Partition, i: usize, j: usize) -> f64 {
    nu_conj.part(j) as f64 - (i + 1) as f64 + ALPHA * (nu.part(i) as f64 - j as f64)
}

fn lower_hook(nu: &Partition, nu_conj: &Partition, i: usize, j: usize) -> f64 {
    nu_conj.part(j) as f64 - i as f64 + ALPHA * (nu.part(i) as f64 - (j + 1) as f64)
}

fn beta(kappa: &Partition, mu: &Partition) -> f64 {
    let kc = kappa.conjugate();
    let mc = mu.conjugate();
    let mut num = 1.0;
    for i in 0..kappa.len() {
        for j in 0..kappa.part(i) as usize {
            num *= if kc.part(j) == mc.part(j) { upper_hook(kappa, &kc, i, j) } else { lower_hook(kappa, &kc, i, j) };
        }
    }
    let mut den = 1.0;
    for i in 0..mu.len() {
        for j in 0..mu.part(i) as usize {
            den *= if kc.part(j) == mc.part(j) { upper_hook(mu, &mc, i, j) } else { lower_hook(mu, &mc, i, j) };
        }
    }
    num / den
}

/// `j_κ = Π_{s∈κ} h^*(s) h_*(s)`.
fn hook_product(kappa: &Partition) -> f64 {
    let kc = kappa.conjugate();
    let mut prod = 1.0;
    for i in 0..kappa.len() {
        for j in 0..kappa.part(i) as usize {
            prod *= upper_hook(kappa, &kc, i, j) * lower_hook(kappa, &kc, i, j);
        }
    }
    prod
}

/// Partitions `μ` with `κ_{i+1} ≤ μ_i ≤ κ_i`.
fn horizontal_strips(kappa: &Partition) -> Vec<Partition> {
    let n = kappa.len();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(kappa: &Partition, i: usize, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if i == cur.len() {
            let parts: Vec<u32> = cur.iter().copied().filter(|&p| p > 0).collect();
            out.push(Partition::new(parts).expect("strip of a partition is a partition"));
            return;
        }
        for v in kappa.part(i + 1)..=kappa.part(i) {
            cur[i] = v;
            rec(kappa, i + 1, cur, out);
        }
    }
    rec(kappa, 0, &mut cur, &mut out);
    out
}

impl ZonalTable {
    pub fn new(m: usize, k_max: usize) -> Self {
        assert!(k_max <= MAX_TABLE_WEIGHT, "zonal table weight {k_max} exceeds {MAX_TABLE_WEIGHT}");
        let mut partitions = Vec::new();
        let mut layer = vec![0];
        for k in 0..=k_max {
            partitions.extend(enumerate_partitions(k as u32, m));
            layer.push(partitions.len());
        }
        let index: HashMap<&Partition, usize> = partitions.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mut strips = Vec::with_capacity(partitions.len());
        let mut c_factor = Vec::with_capacity(partitions.len());
        let mut fact = 1.0;
        for k in 0..=k_max {
            if k > 0 {
                fact *= (k as f64) * ALPHA;
            }
            for kappa in &partitions[layer[k]..layer[k + 1]] {
                let list = horizontal_strips(kappa)
                    .into_iter()
                    .map(|mu| Strip { mu: index[&mu], mu_len: mu.len(), removed: k - mu.weight() as usize, beta: beta(kappa, &mu) })
                    .collect();
                strips.push(list);
                c_factor.push(fact / hook_product(kappa));
            }
        }
        ZonalTable { m, k_max, partitions, layer, strips, c_factor }
    }

    /// Shared table for `(m, k_max)`.
    pub fn cached(m: usize, k_max: usize) -> Arc<ZonalTable> {
        static CACHE: OnceLock<Mutex<TableCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("zonal cache poisoned").get(&(m, k_max)) {
            return t.clone();
        }
        let table = Arc::new(ZonalTable::new(m, k_max));
        cache.lock().expect("zonal cache poisoned").entry((m, k_max)).or_insert(table).clone()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// Index range of the partitions of weight `k`.
    pub fn layer(&self, k: usize) -> std::ops::Range<usize> {
        self.layer[k]..self.layer[k + 1]
    }

    pub fn index_of(&self, kappa: &Partition) -> Option<usize> {
        let k = kappa.weight() as usize;
        if k > self.k_max {
            return None;
        }
        self.layer(k).find(|&i| &self.partitions[i] == kappa)
    }

    /// `J_κ(x)` for every partition of the table. `x` must have length `m`.
    pub fn jack_values(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.m, "expected {} eigenvalues", self.m);
        let total = self.partitions.len();
        let mut prev = vec![0.0; total];
        prev[0] = 1.0;
        let mut cur = vec![0.0; total];
        let mut powers = vec![1.0; self.k_max + 1];
        for (n, &xn) in x.iter().enumerate() {
            for r in 1..=self.k_max {
                powers[r] = powers[r - 1] * xn;
            }
            for (idx, kappa) in self.partitions.iter().enumerate() {
                if kappa.len() > n + 1 {
                    cur[idx] = 0.0;
                    continue;
                }
                cur[idx] = self.strips[idx].iter().filter(|s| s.mu_len <= n).map(|s| prev[s.mu] * powers[s.removed] * s.beta).sum();
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        prev
    }

    /// `C_κ(x)` for every partition of the table.
    pub fn zonal_values(&self, x: &[f64]) -> Vec<f64> {
        self.jack_values(x).iter().zip(&self.c_factor).map(|(j, c)| j * c).collect()
    }

    /// `α^k k! / j_κ` for partition index `idx`.
    pub fn c_factor(&self, idx: usize) -> f64 {
        self.c_factor[idx]
    }
}

/// Zonal polynomial `C_κ` at the eigenvalues `x`. Zero when `κ` has more
/// parts than there are eigenvalues.
pub fn zonal_polynomial(kappa: &Partition, eigenvalues: &[f64]) -> f64 {
    let m = eigenvalues.len();
    if kappa.len() > m {
        return 0.0;
    }
    let table = ZonalTable::cached(m, kappa.weight() as usize);
    let idx = table.index_of(kappa).expect("partition is in its own table");
    table.zonal_values(eigenvalues)[idx]
}

/// Generalized Pochhammer symbol `(a)_κ = Π_i (a - (i-1)/2)_{κ_i}`.
pub fn gen_pochhammer(a: f64, kappa: &Partition) -> f64 {
    let mut prod = 1.0;
    for (i, &part) in kappa.parts().iter().enumerate() {
        let base = a - 0.5 * i as f64;
        for r in 0..part {
            prod *= base + r as f64;
        }
    }
    prod
}
