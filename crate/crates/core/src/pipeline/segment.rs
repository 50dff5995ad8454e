//! Temporal segmentation of feature streams into snippets.
//!
//! A stream of 16-frame units is partitioned into snippets whose lengths lie
//! in `[min_units, max_units]`. The partition minimizes the total
//! within-segment squared deviation from each segment's mean plus a fixed
//! penalty per segment, found by exact dynamic programming over cut
//! positions. A final segment shorter than `min_units` is produced only when
//! no legal partition of the stream exists, and is flagged.

use crate::data::FeatureStream;
use crate::error::{Result, RraeError};

/// 48 frames at 16 frames per unit.
pub const DEFAULT_MIN_UNITS: usize = 3;
/// 96 frames at 16 frames per unit.
pub const DEFAULT_MAX_UNITS: usize = 6;

/// Half-open unit range `[start, end)` forming one snippet. `short` marks a
/// forced remainder below the minimum length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnippetRange {
    pub start: usize,
    pub end: usize,
    pub short: bool,
}

impl SnippetRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Ordered snippet ranges partitioning one video's units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoSegmentation {
    pub ranges: Vec<SnippetRange>,
}

/// One `VideoSegmentation` per video, aligned to a dataset's streams.
pub type Segmentation = Vec<VideoSegmentation>;

impl VideoSegmentation {
    pub fn n_snippets(&self) -> usize {
        self.ranges.len()
    }

    /// Verifies the ranges are sorted, disjoint, and cover `[0, n_units)`.
    pub fn check_partitions(&self, n_units: usize) -> Result<()> {
        let mut cursor = 0usize;
        for r in &self.ranges {
            if r.start != cursor || r.end <= r.start {
                return Err(RraeError::MalformedData {
                    path: "segmentation".into(),
                    detail: format!(
                        "range [{}, {}) does not continue partition at {cursor}",
                        r.start, r.end
                    ),
                });
            }
            cursor = r.end;
        }
        if cursor != n_units {
            return Err(RraeError::MalformedData {
                path: "segmentation".into(),
                detail: format!("ranges cover [0, {cursor}) but stream has {n_units} units"),
            });
        }
        Ok(())
    }
}

/// Within-segment cost of `[start, end)`: summed squared deviation of each
/// unit from the segment mean, over all dimensions.
pub fn segment_cost(stream: &FeatureStream, start: usize, end: usize) -> f64 {
    let len = (end - start) as f64;
    let dim = stream.dim;
    let mut cost = 0.0;
    for d in 0..dim {
        let mut sum = 0.0;
        for unit in &stream.units[start..end] {
            sum += unit.get(d);
        }
        let mean = sum / len;
        let mut dev = 0.0;
        for unit in &stream.units[start..end] {
            let diff = unit.get(d) - mean;
            dev += diff * diff;
        }
        cost += dev;
    }
    cost
}

/// Candidate cost ordered first by the number of short remainder segments,
/// then by numeric cost. Short remainders are feasibility escapes, never
/// preferred over a legal partition.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DpCost {
    shorts: u32,
    cost: f64,
}

impl DpCost {
    const INFEASIBLE: DpCost = DpCost {
        shorts: u32::MAX,
        cost: f64::INFINITY,
    };

    fn better_than(&self, other: &DpCost) -> bool {
        self.shorts < other.shorts || (self.shorts == other.shorts && self.cost < other.cost)
    }

    fn equals(&self, other: &DpCost) -> bool {
        self.shorts == other.shorts && self.cost == other.cost
    }
}

/// Exact DP segmentation of one stream.
///
/// Ties between equal-cost partitions are broken toward the partition whose
/// earlier segments are longer.
pub fn segment(
    stream: &FeatureStream,
    min_units: usize,
    max_units: usize,
    penalty: f64,
) -> Result<VideoSegmentation> {
    if min_units < 1 || max_units < min_units {
        return Err(RraeError::config(format!(
            "segment length bounds [{min_units}, {max_units}] invalid"
        )));
    }
    if !(penalty >= 0.0) {
        return Err(RraeError::config(format!(
            "segment penalty must be non-negative, got {penalty}"
        )));
    }
    let n = stream.n_units();
    if n < min_units {
        return Ok(VideoSegmentation {
            ranges: vec![SnippetRange {
                start: 0,
                end: n,
                short: true,
            }],
        });
    }

    // best[i] = cheapest completion of the suffix starting at unit i.
    let mut best = vec![DpCost::INFEASIBLE; n + 1];
    let mut choice = vec![0usize; n + 1];
    best[n] = DpCost {
        shorts: 0,
        cost: 0.0,
    };
    for i in (0..n).rev() {
        let remaining = n - i;
        let mut best_here = DpCost::INFEASIBLE;
        let mut best_len = 0usize;
        for len in min_units..=max_units.min(remaining) {
            let tail = best[i + len];
            if tail.shorts == u32::MAX {
                continue;
            }
            let cand = DpCost {
                shorts: tail.shorts,
                cost: segment_cost(stream, i, i + len) + (penalty + tail.cost),
            };
            if cand.better_than(&best_here) || (cand.equals(&best_here) && len > best_len) {
                best_here = cand;
                best_len = len;
            }
        }
        if remaining < min_units {
            // Forced short remainder closing the stream.
            let cand = DpCost {
                shorts: 1,
                cost: segment_cost(stream, i, n) + (penalty + 0.0),
            };
            if cand.better_than(&best_here) || (cand.equals(&best_here) && remaining > best_len) {
                best_here = cand;
                best_len = remaining;
            }
        }
        best[i] = best_here;
        choice[i] = best_len;
    }

    let mut ranges = Vec::new();
    let mut cursor = 0usize;
    while cursor < n {
        let len = choice[cursor];
        debug_assert!(len > 0, "DP left position {cursor} without a choice");
        ranges.push(SnippetRange {
            start: cursor,
            end: cursor + len,
            short: len < min_units,
        });
        cursor += len;
    }
    Ok(VideoSegmentation { ranges })
}

/// Segments every stream of a dataset with shared parameters.
pub fn segment_all(
    streams: &[FeatureStream],
    min_units: usize,
    max_units: usize,
    penalty: f64,
) -> Result<Segmentation> {
    streams
        .iter()
        .map(|s| segment(s, min_units, max_units, penalty))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{Rng, Vector};
    use proptest::prelude::*;

    fn stream_of(values: &[f64]) -> FeatureStream {
        let units = values
            .iter()
            .map(|&v| Vector::from_slice(&[v]))
            .collect::<Vec<_>>();
        FeatureStream::new("t", 1, units).unwrap()
    }

    /// Exhaustive oracle: enumerates every partition whose segments lie in
    /// [min, max] except an optionally short final remainder, scores each
    /// with the same right-fold arithmetic the DP uses, and picks the
    /// winner with the same tie-break (fewer shorts, lower cost, earlier
    /// segments longer).
    pub(crate) fn exhaustive_segment(
        stream: &FeatureStream,
        min: usize,
        max: usize,
        penalty: f64,
    ) -> Vec<usize> {
        fn go(
            stream: &FeatureStream,
            pos: usize,
            n: usize,
            min: usize,
            max: usize,
            penalty: f64,
            current: &mut Vec<usize>,
            best: &mut Option<(u32, f64, Vec<usize>)>,
        ) {
            if pos == n {
                let mut shorts = 0u32;
                let mut cost = 0.0;
                let mut p = n;
                for &len in current.iter().rev() {
                    let start = p - len;
                    cost = segment_cost(stream, start, p) + (penalty + cost);
                    if len < min {
                        shorts += 1;
                    }
                    p = start;
                }
                let replace = match best {
                    None => true,
                    Some((bs, bc, blens)) => {
                        (shorts, cost) < (*bs, *bc)
                            || ((shorts, cost) == (*bs, *bc) && current > blens)
                    }
                };
                if replace {
                    *best = Some((shorts, cost, current.clone()));
                }
                return;
            }
            let remaining = n - pos;
            for len in min..=max.min(remaining) {
                current.push(len);
                go(stream, pos + len, n, min, max, penalty, current, best);
                current.pop();
            }
            if remaining < min {
                current.push(remaining);
                go(stream, n, n, min, max, penalty, current, best);
                current.pop();
            }
        }

        let n = stream.n_units();
        if n < min {
            return vec![n];
        }
        let mut best = None;
        go(stream, 0, n, min, max, penalty, &mut Vec::new(), &mut best);
        best.expect("at least one partition exists").2
    }

    fn lens(seg: &VideoSegmentation) -> Vec<usize> {
        seg.ranges.iter().map(|r| r.len()).collect()
    }

    #[test]
    fn constant_stream_prefers_fewest_then_longest_first() {
        let stream = stream_of(&[1.0; 10]);
        let seg = segment(&stream, 3, 6, 100.0).unwrap();
        assert_eq!(lens(&seg), vec![6, 4]);
        assert_eq!(seg.ranges[0].start, 0);
        assert_eq!(seg.ranges[0].end, 6);
        assert_eq!(seg.ranges[1].end, 10);
        assert_eq!(
            lens(&seg),
            exhaustive_segment(&stream, 3, 6, 100.0),
            "DP must agree with the exhaustive oracle"
        );
    }

    #[test]
    fn jump_boundary_is_found() {
        let mut vals = vec![0.0; 5];
        vals.extend(vec![50.0; 5]);
        let stream = stream_of(&vals);
        let seg = segment(&stream, 3, 6, 0.5).unwrap();
        assert!(
            seg.ranges.iter().any(|r| r.end == 5),
            "expected a cut at the jump, got {:?}",
            seg.ranges
        );
        assert_eq!(lens(&seg), exhaustive_segment(&stream, 3, 6, 0.5));
    }

    #[test]
    fn minimum_length_stream_is_single_segment() {
        let stream = stream_of(&[1.0, 2.0, 3.0]);
        let seg = segment(&stream, 3, 6, 1.0).unwrap();
        assert_eq!(seg.ranges.len(), 1);
        assert_eq!((seg.ranges[0].start, seg.ranges[0].end), (0, 3));
        assert!(!seg.ranges[0].short);
    }

    #[test]
    fn too_short_stream_is_flagged() {
        let stream = stream_of(&[1.0, 2.0]);
        let seg = segment(&stream, 3, 6, 1.0).unwrap();
        assert_eq!(seg.ranges.len(), 1);
        assert!(seg.ranges[0].short);
        seg.check_partitions(2).unwrap();
    }

    #[test]
    fn short_remainder_only_when_forced() {
        // min 5, max 6 cannot tile 8 units: expect one legal + one short.
        let stream = stream_of(&[0.0, 0.0, 0.1, 0.0, 0.0, 0.2, 0.1, 0.0]);
        let seg = segment(&stream, 5, 6, 1.0).unwrap();
        assert_eq!(
            seg.ranges.iter().filter(|r| r.short).count(),
            1,
            "{:?}",
            seg.ranges
        );
        assert_eq!(lens(&seg), exhaustive_segment(&stream, 5, 6, 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn dp_matches_exhaustive(
            seed in 0u64..10_000,
            n in 1usize..=12,
            min in 1usize..=4,
            span in 0usize..=3,
            penalty in 0.0f64..4.0,
        ) {
            let max = min + span;
            let mut rng = Rng::new(seed);
            // Mix of plateaus and noise so ties and jumps both occur.
            let mut vals = Vec::with_capacity(n);
            let mut level = 0.0;
            for _ in 0..n {
                if rng.next_f64() < 0.25 {
                    level = rng.uniform(-4.0, 4.0);
                }
                vals.push(level + rng.normal(0.0, 0.05));
            }
            let stream = stream_of(&vals);
            let seg = segment(&stream, min, max, penalty).unwrap();
            seg.check_partitions(n).unwrap();
            prop_assert_eq!(lens(&seg), exhaustive_segment(&stream, min, max, penalty));
        }
    }
}
