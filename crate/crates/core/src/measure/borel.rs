use serde::{Deserialize, Serialize};

/// A closed interval `[lo, hi]`; also used as the half-open `[lo, hi)` pieces of a [`BorelSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (hi > lo).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// A finite union of disjoint half-open intervals `[a, b)`, kept sorted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct BorelSet {
    intervals: Vec<Interval>,
}

impl From<Vec<Interval>> for BorelSet {
    fn from(v: Vec<Interval>) -> Self {
        BorelSet::new(v)
    }
}

impl From<BorelSet> for Vec<Interval> {
    fn from(s: BorelSet) -> Self {
        s.intervals
    }
}

impl BorelSet {
    /// Normalizes arbitrary intervals: drops empty ones, sorts, merges overlaps.
    pub fn new(mut intervals: Vec<Interval>) -> Self {
        intervals.retain(|i| i.hi > i.lo);
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        BorelSet { intervals: merged }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![Interval::new(lo, hi)])
    }

    pub fn empty() -> Self {
        BorelSet::default()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let j = self.intervals.partition_point(|i| i.lo <= x);
        j > 0 && x < self.intervals[j - 1].hi
    }

    /// Lebesgue length of the intersection with `[lo, hi]`.
    pub fn overlap_len(&self, lo: f64, hi: f64) -> f64 {
        self.intervals
            .iter()
            .map(|i| (i.hi.min(hi) - i.lo.max(lo)).max(0.0))
            .sum()
    }

    /// `[lo, hi]` lies inside one piece of the set (endpoints may touch).
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.intervals.iter().any(|i| i.lo <= lo && hi <= i.hi)
    }

    /// `[lo, hi]` meets the set in at most a null set.
    pub fn misses(&self, lo: f64, hi: f64) -> bool {
        self.intervals.iter().all(|i| i.hi <= lo || i.lo >= hi)
    }

    /// Pieces of the set intersected with `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> Vec<Interval> {
        let window = Interval::new(lo, hi);
        self.intervals
            .iter()
            .filter_map(|i| i.intersect(&window))
            .collect()
    }

    /// `[lo, hi) \ self`.
    pub fn complement_within(&self, lo: f64, hi: f64) -> BorelSet {
        let mut out = Vec::new();
        let mut cursor = lo;
        for i in &self.intervals {
            if i.hi <= cursor {
                continue;
            }
            if i.lo >= hi {
                break;
            }
            if i.lo > cursor {
                out.push(Interval::new(cursor, i.lo));
            }
            cursor = cursor.max(i.hi);
        }
        if cursor < hi {
            out.push(Interval::new(cursor, hi));
        }
        BorelSet::new(out)
    }

    /// Cell `index` of the `2^depth` equal cells of `[lo, hi)`.
    pub fn dyadic_cell(lo: f64, hi: f64, depth: u32, index: u64) -> BorelSet {
        let n = 1u64 << depth;
        let w = (hi - lo) / n as f64;
        let a = lo + w * index as f64;
        let b = if index + 1 == n { hi } else { lo + w * (index + 1) as f64 };
        BorelSet::interval(a, b)
    }
}
