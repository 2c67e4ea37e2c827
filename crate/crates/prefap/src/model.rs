//! Domain types shared by every stage of the join pipeline.
//!
//! Everything here is immutable after construction and safe to share
//! read-only across workers.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Inequality operator of a theta-join predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaOp {
    Gt,
    Ge,
    Lt,
    Le,
}

impl ThetaOp {
    pub const ALL: [ThetaOp; 4] = [ThetaOp::Gt, ThetaOp::Ge, ThetaOp::Lt, ThetaOp::Le];

    /// Evaluates `a θ b`.
    #[inline]
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            ThetaOp::Gt => a > b,
            ThetaOp::Ge => a >= b,
            ThetaOp::Lt => a < b,
            ThetaOp::Le => a <= b,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ThetaOp::Gt => "gt",
            ThetaOp::Ge => "ge",
            ThetaOp::Lt => "lt",
            ThetaOp::Le => "le",
        }
    }
}

impl fmt::Display for ThetaOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThetaOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gt" | ">" => Ok(ThetaOp::Gt),
            "ge" | ">=" => Ok(ThetaOp::Ge),
            "lt" | "<" => Ok(ThetaOp::Lt),
            "le" | "<=" => Ok(ThetaOp::Le),
            other => Err(Error::InvalidConfig(format!(
                "unknown theta operator '{other}' (expected gt, ge, lt or le)"
            ))),
        }
    }
}

/// One record of a stream window: a finite join-attribute value plus the
/// source row index it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub value: f64,
    pub payload_id: u64,
}

impl Element {
    pub fn new(value: f64, payload_id: u64) -> Self {
        assert!(value.is_finite(), "join attribute must be finite");
        Element { value, payload_id }
    }
}

/// An ordered sequence of elements in arrival order. No sortedness is assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub name: String,
    pub elements: Vec<Element>,
}

impl Stream {
    pub fn new(name: impl Into<String>, elements: Vec<Element>) -> Self {
        Stream {
            name: name.into(),
            elements,
        }
    }

    /// Builds a stream from raw values; payload ids are the value indices.
    /// Panics on non-finite values (ingestion is expected to reject those).
    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Self {
        let elements = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Element::new(v, i as u64))
            .collect();
        Stream::new(name, elements)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Exact min and max of the element values in one pass, or `None` for an
    /// empty stream.
    pub fn extremes(&self) -> Option<(f64, f64)> {
        let mut iter = self.elements.iter();
        let first = iter.next()?.value;
        let (mut lo, mut hi) = (first, first);
        for e in iter {
            if e.value < lo {
                lo = e.value;
            }
            if e.value > hi {
                hi = e.value;
            }
        }
        Some((lo, hi))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// A half-open value range `[lo, hi)`, or `[lo, hi]` when `closed_hi` is set.
/// The final interval of a boundary is always closed so the maximum element
/// has a home; `lo == hi` is legal only for that closed degenerate case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, closed_hi: bool) -> Self {
        debug_assert!(lo < hi || (lo == hi && closed_hi), "invalid interval");
        Interval { lo, hi, closed_hi }
    }

    #[inline]
    pub fn contains(&self, value: f64) -> bool {
        value >= self.lo && (value < self.hi || (self.closed_hi && value == self.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.closed_hi { ']' } else { ')' };
        write!(f, "[{}, {}{}", self.lo, self.hi, close)
    }
}

/// Sorted cut points inducing a tiling of `[first, last]` into half-open
/// intervals, the last of which is closed.
///
/// The cut sequence is strictly increasing with length >= 2, except for the
/// degenerate single-value boundary which is stored as `[v, v]` and induces
/// one closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    cuts: Vec<f64>,
}

impl Boundary {
    /// Wraps a cut sequence, deduplicating exact-equal neighbours. A single
    /// distinct cut yields the degenerate `[v, v]` boundary.
    pub fn new(mut cuts: Vec<f64>) -> Self {
        assert!(!cuts.is_empty(), "boundary needs at least one cut");
        debug_assert!(
            cuts.windows(2).all(|w| w[0] <= w[1]),
            "cuts must be non-decreasing"
        );
        cuts.dedup();
        if cuts.len() == 1 {
            let v = cuts[0];
            cuts.push(v);
        }
        Boundary { cuts }
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// True when the boundary covers a single value.
    pub fn is_degenerate(&self) -> bool {
        self.cuts.len() == 2 && self.cuts[0] == self.cuts[1]
    }

    pub fn first(&self) -> f64 {
        self.cuts[0]
    }

    pub fn last(&self) -> f64 {
        *self.cuts.last().unwrap()
    }

    pub fn interval_count(&self) -> usize {
        if self.is_degenerate() {
            1
        } else {
            self.cuts.len() - 1
        }
    }

    /// The intervals tiling this boundary, in ascending order.
    pub fn intervals(&self) -> Vec<Interval> {
        if self.is_degenerate() {
            return vec![Interval::new(self.cuts[0], self.cuts[1], true)];
        }
        let n = self.cuts.len() - 1;
        (0..n)
            .map(|i| Interval::new(self.cuts[i], self.cuts[i + 1], i == n - 1))
            .collect()
    }

    /// Index of the interval containing `value` under the half-open rule
    /// (a value equal to an interior cut belongs to the interval starting
    /// there; the last cut belongs to the final closed interval).
    pub fn locate(&self, value: f64) -> Result<usize> {
        if value < self.first() || value > self.last() {
            return Err(Error::OutOfBounds {
                value,
                lo: self.first(),
                hi: self.last(),
            });
        }
        if self.is_degenerate() {
            return Ok(0);
        }
        // Count interior cuts <= value; the last interval absorbs value == last.
        let interior = &self.cuts[1..self.cuts.len() - 1];
        Ok(interior.partition_point(|&c| c <= value))
    }
}

/// An interval plus the elements assigned to it, with cached element extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub interval: Interval,
    pub elements: Vec<Element>,
    pub stream_name: String,
    min_value: f64,
    max_value: f64,
}

impl Partition {
    /// Builds a partition, caching the element extremes. All elements must
    /// lie inside `interval`; empty partitions are allowed only for the
    /// baselines that preserve them (the pipeline drops empties).
    pub fn new(interval: Interval, elements: Vec<Element>, stream_name: impl Into<String>) -> Self {
        let mut min_value = f64::INFINITY;
        let mut max_value = f64::NEG_INFINITY;
        for e in &elements {
            debug_assert!(interval.contains(e.value), "element outside partition");
            if e.value < min_value {
                min_value = e.value;
            }
            if e.value > max_value {
                max_value = e.value;
            }
        }
        Partition {
            interval,
            elements,
            stream_name: stream_name.into(),
            min_value,
            max_value,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Smallest element value; meaningless for empty partitions.
    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    /// Largest element value; meaningless for empty partitions.
    pub fn max_value(&self) -> f64 {
        self.max_value
    }
}

/// A retained partition pair scheduled onto a worker lane.
#[derive(Debug, Clone)]
pub struct JoinTask {
    pub left: Arc<Partition>,
    pub right: Arc<Partition>,
    /// Position of `left`/`right` in their plans, used for deterministic
    /// tie-breaking when scheduling.
    pub left_index: usize,
    pub right_index: usize,
    pub worker: usize,
}

impl JoinTask {
    /// Number of element pairs this task evaluates.
    pub fn pair_count(&self) -> u64 {
        self.left.len() as u64 * self.right.len() as u64
    }
}

/// One output tuple: `(payload_id, value)` per joined stream, left to right.
/// Inline storage covers up to three-way joins without allocating.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinResult {
    pub entries: SmallVec<[(u64, f64); 3]>,
}

impl JoinResult {
    pub fn pair(left: (u64, f64), right: (u64, f64)) -> Self {
        JoinResult {
            entries: SmallVec::from_slice(&[left, right]),
        }
    }

    /// The payload-id tuple, used for multiset comparisons against the oracle.
    pub fn ids(&self) -> SmallVec<[u64; 3]> {
        self.entries.iter().map(|&(id, _)| id).collect()
    }

    /// The value tuple.
    pub fn values(&self) -> SmallVec<[f64; 3]> {
        self.entries.iter().map(|&(_, v)| v).collect()
    }
}

/// Per-run counters: pair evaluations, results, elapsed time and the
/// per-worker load split they derive from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Element-pair predicate evaluations performed in the execute stage.
    pub cartesian_count: u64,
    /// Output tuples produced.
    pub result_count: u64,
    pub elapsed_ms: f64,
    /// Pair evaluations handled by each worker lane.
    pub per_worker_in: Vec<u64>,
    /// Results produced by each worker lane.
    pub per_worker_out: Vec<u64>,
    /// max(per_worker_in) / mean(per_worker_in); 1.0 when there is no work.
    pub lb_in: f64,
    /// max(per_worker_out) / mean(per_worker_out); 1.0 when there are no results.
    pub lb_out: f64,
}

fn load_ratio(loads: &[u64]) -> f64 {
    let total: u64 = loads.iter().sum();
    if total == 0 || loads.is_empty() {
        return 1.0;
    }
    let max = *loads.iter().max().unwrap() as f64;
    let mean = total as f64 / loads.len() as f64;
    max / mean
}

impl RunMetrics {
    /// Derives the counters and balance ratios from per-worker loads.
    pub fn from_loads(per_worker_in: Vec<u64>, per_worker_out: Vec<u64>, elapsed_ms: f64) -> Self {
        let cartesian_count = per_worker_in.iter().sum();
        let result_count = per_worker_out.iter().sum();
        let lb_in = load_ratio(&per_worker_in);
        let lb_out = load_ratio(&per_worker_out);
        RunMetrics {
            cartesian_count,
            result_count,
            elapsed_ms,
            per_worker_in,
            per_worker_out,
            lb_in,
            lb_out,
        }
    }

    /// Zero-work metrics for `workers` lanes (balance ratios are 1.0 by
    /// convention).
    pub fn empty(workers: usize) -> Self {
        RunMetrics::from_loads(vec![0; workers], vec![0; workers], 0.0)
    }

    /// Sums counters and per-worker loads across cascade stages, recomputing
    /// the balance ratios from the summed loads.
    pub fn combine(stages: &[RunMetrics]) -> Self {
        let workers = stages.iter().map(|m| m.per_worker_in.len()).max().unwrap_or(0);
        let mut per_in = vec![0u64; workers];
        let mut per_out = vec![0u64; workers];
        let mut elapsed = 0.0;
        for stage in stages {
            for (acc, &x) in per_in.iter_mut().zip(&stage.per_worker_in) {
                *acc += x;
            }
            for (acc, &x) in per_out.iter_mut().zip(&stage.per_worker_out) {
                *acc += x;
            }
            elapsed += stage.elapsed_ms;
        }
        RunMetrics::from_loads(per_in, per_out, elapsed)
    }
}

/// Join algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Sorted sampled-range partitioning, no filtering.
    Rbm,
    /// Sorted equal-count chunks with random worker placement, no filtering.
    Obt,
    /// Isolated range partitioning with stream-level cross filtering.
    Cfs,
    /// Isolated range partitioning, re-partitioning and partition-level
    /// filtering.
    Ftj,
    /// Pre-filtering plus amalgamated partitioning on top of the partition
    /// pipeline.
    Prefap,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Rbm,
        Algorithm::Obt,
        Algorithm::Cfs,
        Algorithm::Ftj,
        Algorithm::Prefap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Rbm => "rbm",
            Algorithm::Obt => "obt",
            Algorithm::Cfs => "cfs",
            Algorithm::Ftj => "ftj",
            Algorithm::Prefap => "prefap",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rbm" => Ok(Algorithm::Rbm),
            "obt" => Ok(Algorithm::Obt),
            "cfs" => Ok(Algorithm::Cfs),
            "ftj" => Ok(Algorithm::Ftj),
            "prefap" => Ok(Algorithm::Prefap),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected rbm, obt, cfs, ftj or prefap)"
            ))),
        }
    }
}

/// Stage toggles for the pipeline. Only meaningful with [`Algorithm::Prefap`];
/// with all three set the pipeline degenerates to FTJ without re-partitioning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Ablation {
    pub disable_prefilter: bool,
    pub disable_amalgamation: bool,
    pub disable_repartition: bool,
}

impl Ablation {
    pub const NONE: Ablation = Ablation {
        disable_prefilter: false,
        disable_amalgamation: false,
        disable_repartition: false,
    };

    pub fn any(self) -> bool {
        self.disable_prefilter || self.disable_amalgamation || self.disable_repartition
    }
}

/// Run configuration shared by every algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Theta chain: one operator for a 2-way join, n-1 for an n-way cascade.
    pub thetas: Vec<ThetaOp>,
    /// Number of partitions per stream boundary.
    pub partitions: usize,
    /// Window size, also the re-partitioning size budget.
    pub window: usize,
    /// Worker lanes for the execute stage.
    pub workers: usize,
    /// Seed for randomized placement (OBT) and data generation.
    pub seed: u64,
    pub algorithm: Algorithm,
    pub ablation: Ablation,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            thetas: vec![ThetaOp::Le],
            partitions: 10,
            window: 1000,
            workers: 4,
            seed: 0,
            algorithm: Algorithm::Prefap,
            ablation: Ablation::NONE,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(Error::InvalidConfig("at least one theta operator".into()));
        }
        if self.partitions < 1 {
            return Err(Error::InvalidConfig("partitions must be >= 1".into()));
        }
        if self.window < 1 {
            return Err(Error::InvalidConfig("window must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        if self.ablation.any() && self.algorithm != Algorithm::Prefap {
            return Err(Error::InvalidConfig(
                "ablation flags are only valid with the prefap algorithm".into(),
            ));
        }
        Ok(())
    }

    /// The operator of a plain two-way join.
    pub fn theta(&self) -> ThetaOp {
        self.thetas[0]
    }
}
