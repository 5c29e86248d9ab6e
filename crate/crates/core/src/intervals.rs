//! Finite unions of closed intervals on the real line.

use serde::{Deserialize, Serialize};

/// Sorted, pairwise disjoint closed intervals.
///
/// Intervals that touch or overlap are merged on construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    parts: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_intervals(mut parts: Vec<(f64, f64)>) -> Self {
        parts.retain(|&(lo, hi)| lo <= hi);
        parts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (lo, hi) in parts {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Self { parts: merged }
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.parts.len()
    }

    pub fn measure(&self) -> f64 {
        self.parts.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.parts.partition_point(|&(_, hi)| hi < x);
        i < self.parts.len() && self.parts[i].0 <= x
    }

    /// Distance from `x` to the set; infinite for the empty set.
    pub fn distance_to(&self, x: f64) -> f64 {
        let i = self.parts.partition_point(|&(_, hi)| hi < x);
        let mut d = f64::INFINITY;
        if i < self.parts.len() {
            d = (self.parts[i].0 - x).max(0.0);
        }
        if i > 0 {
            d = d.min(x - self.parts[i - 1].1);
        }
        d
    }

    pub fn translate(&self, c: f64) -> Self {
        Self {
            parts: self.parts.iter().map(|&(lo, hi)| (lo + c, hi + c)).collect(),
        }
    }

    /// Each interval widened by `r` on both sides, then merged.
    pub fn inflate(&self, r: f64) -> Self {
        Self::from_intervals(self.parts.iter().map(|&(lo, hi)| (lo - r, hi + r)).collect())
    }

    pub fn intersect(&self, other: &IntervalSet) -> Self {
        let (a, b) = (&self.parts, &other.parts);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { parts: out }
    }

    /// Gaps between consecutive components, as open intervals.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.parts.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }

    /// Hausdorff distance between two non-empty sets.
    ///
    /// The farthest point of `A` from `B` lies at an endpoint of `A` or at
    /// the midpoint of a gap of `B` clipped to `A`, so checking those
    /// candidates is exact.
    pub fn hausdorff(&self, other: &IntervalSet) -> f64 {
        if self.is_empty() || other.is_empty() {
            return if self.is_empty() && other.is_empty() {
                0.0
            } else {
                f64::INFINITY
            };
        }
        one_sided(self, other).max(one_sided(other, self))
    }
}

fn one_sided(a: &IntervalSet, b: &IntervalSet) -> f64 {
    let mut worst = 0.0f64;
    for &(lo, hi) in a.parts() {
        worst = worst.max(b.distance_to(lo)).max(b.distance_to(hi));
    }
    for (glo, ghi) in b.gaps() {
        let mid = 0.5 * (glo + ghi);
        if a.contains(mid) {
            worst = worst.max(b.distance_to(mid));
        }
    }
    worst
}
