//! Exact k-nearest-neighbor search.
//!
//! Neighbors are ordered by `(distance, dataset index)`: among equidistant
//! points the lower index is closer. Every search path in this module
//! returns exactly the prefix of that total order; the indexed paths
//! ([`PivotIndex`], [`LineIndex`]) only skip work, never change results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    /// Position of the point in the searched dataset (0-based).
    pub index: usize,
    pub distance: f64,
}

impl Neighbor {
    /// Total order used for all neighbor rankings.
    pub fn cmp_rank(&self, other: &Neighbor) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

// Max-heap adapter: the worst retained neighbor sits on top.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Ranked(Neighbor);

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_rank(&other.0)
    }
}

/// The k closest dataset points to a query, closest first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborList {
    entries: Vec<Neighbor>,
}

impl NeighborList {
    fn from_sorted(entries: Vec<Neighbor>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].cmp_rank(&w[1]).is_lt()));
        NeighborList { entries }
    }

    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|n| n.index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first(&self) -> Neighbor {
        self.entries[0]
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Empty("dataset"));
    }
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    Ok(())
}

/// Brute-force search: ranks every dataset point.
pub fn k_nearest(
    space: &MetricSpace,
    dataset: &[Point],
    query: &Point,
    k: usize,
) -> Result<NeighborList> {
    check_k(k, dataset.len())?;
    let mut all = dataset
        .iter()
        .enumerate()
        .map(|(index, p)| {
            Ok(Neighbor {
                index,
                distance: space.distance(query, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, Neighbor::cmp_rank);
        all.truncate(k);
    }
    all.sort_unstable_by(Neighbor::cmp_rank);
    Ok(NeighborList::from_sorted(all))
}

/// Nearest point only; the `k = 1` case without allocation.
pub fn nearest(space: &MetricSpace, dataset: &[Point], query: &Point) -> Result<Neighbor> {
    check_k(1, dataset.len())?;
    let mut best = Neighbor {
        index: 0,
        distance: space.distance(query, &dataset[0])?,
    };
    for (index, p) in dataset.iter().enumerate().skip(1) {
        let distance = space.distance(query, p)?;
        // strict: equal distance keeps the lower index
        if distance < best.distance {
            best = Neighbor { index, distance };
        }
    }
    Ok(best)
}

struct TopK {
    k: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    fn offer(&mut self, n: Neighbor) {
        if self.heap.len() < self.k {
            self.heap.push(Ranked(n));
        } else if let Some(top) = self.heap.peek() {
            if n.cmp_rank(&top.0).is_lt() {
                self.heap.pop();
                self.heap.push(Ranked(n));
            }
        }
    }

    /// Current k-th distance, or infinity while fewer than k are held.
    fn radius(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |r| r.0.distance)
        }
    }

    fn into_list(self) -> NeighborList {
        let mut v: Vec<Neighbor> = self.heap.into_iter().map(|r| r.0).collect();
        v.sort_unstable_by(Neighbor::cmp_rank);
        NeighborList::from_sorted(v)
    }
}

/// Triangle-inequality pruned search over a fixed pivot set.
///
/// `ceil(sqrt(n))` pivots are chosen by a greedy farthest-point sweep
/// starting at index 0. Each pivot keeps its distances to every point in
/// sorted order. A query measures its distance to all pivots, then scans the
/// nearest pivot's sorted list outward from the query's own distance and
/// stops once the lower bound `|d(q,p) - d(p,i)|` exceeds the current k-th
/// distance.
#[derive(Clone, Debug)]
pub struct PivotIndex {
    space: MetricSpace,
    points: Vec<Point>,
    pivots: Vec<usize>,
    is_pivot: Vec<bool>,
    rings: Vec<Vec<(f64, usize)>>,
}

impl PivotIndex {
    pub fn build(space: &MetricSpace, points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Empty("dataset"));
        }
        let count = (n as f64).sqrt().ceil() as usize;
        let mut pivots = Vec::with_capacity(count);
        let mut is_pivot = vec![false; n];
        let mut rings = Vec::with_capacity(count);
        let mut gap = vec![f64::INFINITY; n];
        let mut next = 0;
        for _ in 0..count {
            pivots.push(next);
            is_pivot[next] = true;
            let mut ring = Vec::with_capacity(n);
            for (i, p) in points.iter().enumerate() {
                let d = space.distance(&points[next], p)?;
                ring.push((d, i));
                gap[i] = gap[i].min(d);
            }
            ring.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            rings.push(ring);
            // farthest non-pivot from the pivot set, lowest index on ties
            let mut best: Option<usize> = None;
            for i in 0..n {
                if !is_pivot[i] && best.is_none_or(|b| gap[i] > gap[b]) {
                    best = Some(i);
                }
            }
            match best {
                Some(b) => next = b,
                None => break,
            }
        }
        Ok(PivotIndex {
            space: space.clone(),
            points,
            pivots,
            is_pivot,
            rings,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn k_nearest(&self, query: &Point, k: usize) -> Result<NeighborList> {
        check_k(k, self.points.len())?;
        let mut top = TopK::new(k);
        let mut primary = 0;
        let mut primary_d = f64::INFINITY;
        for (slot, &p) in self.pivots.iter().enumerate() {
            let d = self.space.distance(query, &self.points[p])?;
            top.offer(Neighbor {
                index: p,
                distance: d,
            });
            if d < primary_d {
                primary_d = d;
                primary = slot;
            }
        }
        let ring = &self.rings[primary];
        let start = ring.partition_point(|e| e.0 < primary_d);
        let (mut lo, mut hi) = (start, start);
        loop {
            let below = (lo > 0).then(|| primary_d - ring[lo - 1].0);
            let above = (hi < ring.len()).then(|| ring[hi].0 - primary_d);
            let (bound, entry) = match (below, above) {
                (Some(b), Some(a)) if b <= a => {
                    lo -= 1;
                    (b, ring[lo])
                }
                (_, Some(a)) => {
                    hi += 1;
                    (a, ring[hi - 1])
                }
                (Some(b), None) => {
                    lo -= 1;
                    (b, ring[lo])
                }
                (None, None) => break,
            };
            // rounding slack keeps pruning exact w.r.t. computed distances
            let slack = 1e-9 * (primary_d + entry.0);
            if bound - slack > top.radius() {
                break;
            }
            let i = entry.1;
            if self.is_pivot[i] {
                continue;
            }
            let distance = self.space.distance(query, &self.points[i])?;
            top.offer(Neighbor { index: i, distance });
        }
        Ok(top.into_list())
    }
}

/// Result of a one-dimensional selection, in sorted-position coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSelection {
    /// Sorted positions strictly closer than the k-th distance (contiguous).
    pub inner: Range<usize>,
    /// Sorted positions exactly at the k-th distance that made the cut.
    pub boundary: Vec<usize>,
}

/// Exact search over one-dimensional points under a line metric
/// (Euclidean or `l_1`), using binary search over the sorted coordinates.
#[derive(Clone, Debug)]
pub struct LineIndex {
    space: MetricSpace,
    /// `(coordinate, dataset index)` sorted by coordinate then index.
    sorted: Vec<(f64, usize)>,
}

impl LineIndex {
    /// Returns `None` when the metric or the points are not one-dimensional.
    pub fn build(space: &MetricSpace, points: &[Point]) -> Option<Self> {
        if !space.is_line_metric() || points.is_empty() {
            return None;
        }
        let mut sorted = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            match p.as_vector() {
                Some([x]) if x.is_finite() => sorted.push((*x, i)),
                _ => return None,
            }
        }
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Some(LineIndex {
            space: space.clone(),
            sorted,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Dataset index of the point at a sorted position.
    pub fn original(&self, position: usize) -> usize {
        self.sorted[position].1
    }

    fn coordinate(query: &Point) -> Result<f64> {
        match query.as_vector() {
            Some([x]) => Ok(*x),
            Some(v) => Err(Error::DimensionMismatch {
                left: v.len(),
                right: 1,
            }),
            None => Err(Error::UniverseMismatch {
                metric: "line".into(),
                point: "non-vector".into(),
            }),
        }
    }

    /// Selects the k nearest sorted positions to `q`.
    pub fn select(&self, q: f64, k: usize) -> Result<LineSelection> {
        let n = self.sorted.len();
        check_k(k, n)?;
        let pos = self.sorted.partition_point(|e| e.0 < q);
        let (left, right) = (pos, n - pos);
        // j-th nearest on each side; both sequences are non-decreasing in j
        let dl = |j: usize| self.space.distance_1d(q, self.sorted[pos - 1 - j].0);
        let dr = |j: usize| self.space.distance_1d(q, self.sorted[pos + j].0);

        // i = how many of the k come from the left side
        let lo = k.saturating_sub(right);
        let hi = k.min(left);
        let take_left = lo
            + partition_point(hi - lo, |t| {
                let i = lo + t;
                i < hi && k > i && dl(i) < dr(k - i - 1)
            });
        let mut radius = f64::NEG_INFINITY;
        if take_left > 0 {
            radius = radius.max(dl(take_left - 1));
        }
        if k > take_left {
            radius = radius.max(dr(k - take_left - 1));
        }

        let left_lt = partition_point(left, |j| dl(j) < radius);
        let left_le = partition_point(left, |j| dl(j) <= radius);
        let right_lt = partition_point(right, |j| dr(j) < radius);
        let right_le = partition_point(right, |j| dr(j) <= radius);
        let need = k - left_lt - right_lt;
        let mut boundary: Vec<usize> = (left_lt..left_le)
            .map(|j| pos - 1 - j)
            .chain((right_lt..right_le).map(|j| pos + j))
            .collect();
        if boundary.len() > need {
            boundary.sort_unstable_by_key(|&s| self.sorted[s].1);
            boundary.truncate(need);
        }
        Ok(LineSelection {
            inner: pos - left_lt..pos + right_lt,
            boundary,
        })
    }

    pub fn k_nearest(&self, query: &Point, k: usize) -> Result<NeighborList> {
        let q = Self::coordinate(query)?;
        let sel = self.select(q, k)?;
        let mut entries: Vec<Neighbor> = sel
            .inner
            .clone()
            .chain(sel.boundary.iter().copied())
            .map(|s| Neighbor {
                index: self.sorted[s].1,
                distance: self.space.distance_1d(q, self.sorted[s].0),
            })
            .collect();
        entries.sort_unstable_by(Neighbor::cmp_rank);
        Ok(NeighborList::from_sorted(entries))
    }
}

/// First `t` in `0..len` where `pred` is false; `pred` must be true on a prefix.
fn partition_point(len: usize, mut pred: impl FnMut(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A search structure chosen by [`NeighborIndex::build`]; all variants are exact.
#[derive(Clone, Debug)]
pub enum NeighborIndex {
    Brute { space: MetricSpace, points: Vec<Point> },
    Pivot(PivotIndex),
    Line { line: LineIndex, points: Vec<Point> },
}

impl NeighborIndex {
    const PIVOT_MIN: usize = 64;
    // pivot rings cost n^1.5 memory
    const PIVOT_MAX: usize = 1 << 15;

    /// Picks the line index for 1-d line metrics, pivots for mid-sized
    /// datasets, brute force otherwise.
    pub fn build(space: &MetricSpace, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if let Some(line) = LineIndex::build(space, &points) {
            return Ok(NeighborIndex::Line { line, points });
        }
        if (Self::PIVOT_MIN..=Self::PIVOT_MAX).contains(&points.len()) {
            return Ok(NeighborIndex::Pivot(PivotIndex::build(space, points)?));
        }
        Ok(NeighborIndex::brute(space, points))
    }

    pub fn brute(space: &MetricSpace, points: Vec<Point>) -> Self {
        NeighborIndex::Brute {
            space: space.clone(),
            points,
        }
    }

    pub fn points(&self) -> &[Point] {
        match self {
            NeighborIndex::Brute { points, .. } | NeighborIndex::Line { points, .. } => points,
            NeighborIndex::Pivot(p) => p.points(),
        }
    }

    pub fn len(&self) -> usize {
        self.points().len()
    }

    pub fn is_empty(&self) -> bool {
        self.points().is_empty()
    }

    pub fn line(&self) -> Option<&LineIndex> {
        match self {
            NeighborIndex::Line { line, .. } => Some(line),
            _ => None,
        }
    }

    pub fn k_nearest(&self, query: &Point, k: usize) -> Result<NeighborList> {
        match self {
            NeighborIndex::Brute { space, points } => k_nearest(space, points, query, k),
            NeighborIndex::Pivot(p) => p.k_nearest(query, k),
            NeighborIndex::Line { line, .. } => line.k_nearest(query, k),
        }
    }

    pub fn nearest(&self, query: &Point) -> Result<Neighbor> {
        match self {
            NeighborIndex::Brute { space, points } => nearest(space, points, query),
            _ => Ok(self.k_nearest(query, 1)?.first()),
        }
    }
}

/// Pruned search entry point: identical output to [`k_nearest`].
pub fn k_nearest_pruned(index: &PivotIndex, query: &Point, k: usize) -> Result<NeighborList> {
    index.k_nearest(query, k)
}
