//! Integer partitions indexing the zonal polynomial series.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Integer partition `κ₁ ≥ κ₂ ≥ … ≥ 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::Domain("partition parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Domain(format!("partition parts must be nonincreasing, got {parts:?}")));
        }
        Ok(Partition { parts })
    }

    pub fn empty() -> Self {
        Partition::default()
    }

    #[inline]
    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Number of nonzero parts.
    #[inline]
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `|κ| = Σ κ_i`.
    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// Part `i` (0-based), zero beyond the length.
    #[inline]
    pub fn part(&self, i: usize) -> u32 {
        self.parts.get(i).copied().unwrap_or(0)
    }

    /// Conjugate partition `κ'`, with `κ'_j = #{i : κ_i ≥ j}`.
    pub fn conjugate(&self) -> Partition {
        let first = self.part(0);
        let parts = (1..=first).map(|j| self.parts.iter().filter(|&&p| p >= j).count() as u32).collect();
        Partition { parts }
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// All partitions of `k` with at most `max_parts` parts, in reverse
/// lexicographic order: `(3), (2,1), (1,1,1)`.
pub fn enumerate_partitions(k: u32, max_parts: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill(k, k, max_parts, &mut current, &mut out);
    out
}

fn fill(remaining: u32, bound: u32, slots: usize, current: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if remaining == 0 {
        out.push(Partition { parts: current.clone() });
        return;
    }
    if slots == 0 {
        return;
    }
    for first in (1..=remaining.min(bound)).rev() {
        current.push(first);
        fill(remaining - first, first, slots - 1, current, out);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(enumerate_partitions(0, 3), vec![Partition::empty()]);
        assert_eq!(enumerate_partitions(0, 0), vec![Partition::empty()]);
        assert_eq!(enumerate_partitions(3, 2), vec![p(&[3]), p(&[2, 1])]);
        assert_eq!(enumerate_partitions(3, 3), vec![p(&[3]), p(&[2, 1]), p(&[1, 1, 1])]);
        assert_eq!(enumerate_partitions(6, 3).len(), 7);
        assert!(enumerate_partitions(2, 0).is_empty());
    }

    #[test]
    fn partition_counts_match_brute_force() {
        // count multisets of positive parts summing to k, of size at most m
        fn brute(k: u32, m: usize, max: u32) -> usize {
            if k == 0 {
                return 1;
            }
            if m == 0 {
                return 0;
            }
            (1..=k.min(max)).map(|f| brute(k - f, m - 1, f)).sum()
        }
        for k in 0..=12 {
            for m in 0..=5 {
                assert_eq!(enumerate_partitions(k, m).len(), brute(k, m, k), "k={k} m={m}");
            }
        }
    }

    #[test]
    fn order_is_reverse_lexicographic() {
        let ps = enumerate_partitions(7, 4);
        for w in ps.windows(2) {
            assert!(w[0].parts() > w[1].parts());
        }
    }

    #[test]
    fn conjugates() {
        assert_eq!(p(&[3, 1]).conjugate(), p(&[2, 1, 1]));
        assert_eq!(p(&[2, 2]).conjugate(), p(&[2, 2]));
        assert_eq!(Partition::empty().conjugate(), Partition::empty());
        for k in 0..8 {
            for q in enumerate_partitions(k, 8) {
                assert_eq!(q.conjugate().conjugate(), q);
            }
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(Partition::new(vec![1, 2]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
    }
}
