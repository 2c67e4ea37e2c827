//! Range partitioning: per-stream boundaries from min/max spans, boundary
//! amalgamation across streams, element assignment, and re-partitioning of
//! oversized partitions.

use crate::error::{Error, Result};
use crate::model::{Boundary, Element, Partition, Stream};

/// A boundary together with the non-empty partitions it induced on one
/// stream. After re-partitioning the partitions may be finer than the
/// boundary; they stay ordered by interval start and jointly hold every
/// input element exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPlan {
    pub boundary: Boundary,
    pub partitions: Vec<Partition>,
}

impl PartitionPlan {
    pub fn element_count(&self) -> usize {
        self.partitions.iter().map(Partition::len).sum()
    }
}

/// Width of each of the `p` partitions spanning `[min, max]`.
pub fn span(min: f64, max: f64, p: usize) -> Result<f64> {
    assert!(p >= 1, "partition count must be >= 1");
    assert!(min <= max, "min must not exceed max");
    if min == max {
        return Err(Error::DegenerateRange(min));
    }
    Ok((max - min) / p as f64)
}

/// Cut points `{min + k * span | k = 0..p}` over the stream's value range.
/// The last cut is forced to exactly the stream max so float drift cannot
/// strand the maximal element; a constant stream collapses to the degenerate
/// single-value boundary.
pub fn boundary_of(s: &Stream, p: usize) -> Result<Boundary> {
    let (min, max) = s.extremes().ok_or(Error::EmptyStream)?;
    let sp = match span(min, max, p) {
        Ok(sp) => sp,
        Err(Error::DegenerateRange(_)) => return Ok(Boundary::new(vec![min])),
        Err(e) => return Err(e),
    };
    let mut cuts = Vec::with_capacity(p + 1);
    for k in 0..p {
        let c = min + k as f64 * sp;
        if c < max {
            cuts.push(c);
        }
    }
    cuts.push(max);
    Ok(Boundary::new(cuts))
}

/// Union of both cut sets, sorted, with exact-equality duplicates removed.
pub fn amalgamate(a: &Boundary, b: &Boundary) -> Boundary {
    let mut cuts = Vec::with_capacity(a.cuts().len() + b.cuts().len());
    cuts.extend_from_slice(a.cuts());
    cuts.extend_from_slice(b.cuts());
    cuts.sort_by(f64::total_cmp);
    Boundary::new(cuts)
}

/// Buckets elements onto the boundary's intervals by binary search, dropping
/// empty buckets. Element order within a bucket follows input order.
fn bucket_elements(
    elements: &[Element],
    boundary: &Boundary,
    stream_name: &str,
) -> Result<Vec<Partition>> {
    let intervals = boundary.intervals();
    let mut buckets: Vec<Vec<Element>> = vec![Vec::new(); intervals.len()];
    for &e in elements {
        buckets[boundary.locate(e.value)?].push(e);
    }
    Ok(intervals
        .into_iter()
        .zip(buckets)
        .filter(|(_, bucket)| !bucket.is_empty())
        .map(|(interval, bucket)| Partition::new(interval, bucket, stream_name))
        .collect())
}

/// Partitions a stream on the given boundary. Every element must lie within
/// `[boundary.first(), boundary.last()]`.
pub fn assign(s: &Stream, boundary: &Boundary) -> Result<PartitionPlan> {
    let partitions = bucket_elements(&s.elements, boundary, &s.name)?;
    Ok(PartitionPlan {
        boundary: boundary.clone(),
        partitions,
    })
}

/// How the width of re-partitioned sub-intervals is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubSpanRounding {
    /// Exact real-valued division of the partition width.
    #[default]
    Exact,
    /// Integer ceiling of the divided width. Only sensible for integer-valued
    /// data; for a fractional width the ceiling can swallow the whole
    /// partition and leave it unsplit.
    Ceil,
}

/// Splits every partition larger than the average size `w / partition-count`
/// into `ceil(size / average)` equal-width sub-partitions, re-bucketing its
/// elements and dropping empty sub-partitions. Applied once, not to fixpoint.
/// A partition whose elements are all one value cannot be split and is kept
/// whole.
pub fn repartition_oversized(plan: PartitionPlan, w: usize) -> PartitionPlan {
    repartition_oversized_with(plan, w, SubSpanRounding::Exact)
}

pub fn repartition_oversized_with(
    plan: PartitionPlan,
    w: usize,
    rounding: SubSpanRounding,
) -> PartitionPlan {
    let count = plan.partitions.len();
    if count == 0 {
        return plan;
    }
    let average = w as f64 / count as f64;

    let mut partitions = Vec::with_capacity(count);
    for part in plan.partitions {
        if (part.len() as f64) <= average {
            partitions.push(part);
            continue;
        }
        let splits = (part.len() as f64 / average).ceil() as usize;
        let (lo, hi) = (part.min_value(), part.max_value());
        if lo == hi {
            // Duplicates of a single value cannot be separated by range cuts.
            partitions.push(part);
            continue;
        }
        let sub_span = match rounding {
            SubSpanRounding::Exact => (hi - lo) / splits as f64,
            SubSpanRounding::Ceil => ((hi - lo) / splits as f64).ceil(),
        };
        let mut cuts = Vec::with_capacity(splits + 1);
        for k in 0..splits {
            let c = lo + k as f64 * sub_span;
            if c < hi {
                cuts.push(c);
            }
        }
        cuts.push(hi);
        let sub_boundary = Boundary::new(cuts);
        // Elements span exactly [lo, hi], so bucketing cannot fail.
        let subs = bucket_elements(&part.elements, &sub_boundary, &part.stream_name)
            .expect("sub-boundary covers the partition's own extremes");
        partitions.extend(subs);
    }

    PartitionPlan {
        boundary: plan.boundary,
        partitions,
    }
}

/// Partitions a stream on its own boundary alone, with no cross-stream
/// information.
pub fn isolated_plan(s: &Stream, p: usize) -> Result<PartitionPlan> {
    let boundary = boundary_of(s, p)?;
    assign(s, &boundary)
}
