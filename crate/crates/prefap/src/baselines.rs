//! Reference join algorithms benchmarked against the pipeline: sampled-range
//! partitioning (RBM), equal-count chunking with random placement (OBT),
//! stream-level cross filtering (CFS) and partition-level filtering with
//! re-partitioning (FTJ).

use std::time::Instant;

use crate::error::Result;
use crate::join::{
    all_pairs, execute, extremes_may_join, run_partition_pipeline, schedule, schedule_random,
    JoinOutcome,
};
use crate::model::{Config, Element, Interval, Partition, Stream, ThetaOp};
use crate::partition::isolated_plan;

fn sorted_by_value(s: &Stream) -> Vec<Element> {
    let mut elements = s.elements.clone();
    elements.sort_by(|a, b| a.value.total_cmp(&b.value));
    elements
}

/// Cut values sampled from a sorted stream at 1-indexed positions
/// `round(k * n / p)` for `k = 1..p-1`.
///
/// Heavily duplicated data can sample the same value repeatedly; a cut that
/// does not exceed the previous one is advanced to the next strictly greater
/// value (if any), so `[1,1,1,1,1,1,2,2,3]` with `p = 3` still yields the
/// cuts `{1, 2}` and preserves the documented empty `(-inf, 1)` range.
pub fn rbm_cuts(sorted_values: &[f64], p: usize) -> Vec<f64> {
    let n = sorted_values.len();
    let mut cuts: Vec<f64> = Vec::with_capacity(p.saturating_sub(1));
    for k in 1..p {
        let pos = ((k as f64 * n as f64) / p as f64).round() as usize;
        let mut idx = pos.clamp(1, n) - 1;
        if let Some(&last) = cuts.last() {
            while idx < n && sorted_values[idx] <= last {
                idx += 1;
            }
            if idx == n {
                break;
            }
        }
        cuts.push(sorted_values[idx]);
    }
    cuts
}

/// Sorts the stream and partitions it by the sampled ranges
/// `(-inf, c1), [c1, c2), ..., [c_last, +inf)`. Empty ranges are preserved:
/// the skew pathology is part of the algorithm's observable behaviour.
pub fn rbm_partitions(s: &Stream, p: usize) -> Vec<Partition> {
    let sorted = sorted_by_value(s);
    let values: Vec<f64> = sorted.iter().map(|e| e.value).collect();
    let cuts = rbm_cuts(&values, p);

    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(f64::NEG_INFINITY);
    bounds.extend_from_slice(&cuts);
    bounds.push(f64::INFINITY);
    let intervals: Vec<Interval> = bounds
        .windows(2)
        .map(|w| Interval::new(w[0], w[1], false))
        .collect();

    let mut buckets: Vec<Vec<Element>> = vec![Vec::new(); intervals.len()];
    for e in sorted {
        let idx = cuts.partition_point(|&c| c <= e.value);
        buckets[idx].push(e);
    }
    intervals
        .into_iter()
        .zip(buckets)
        .map(|(interval, bucket)| Partition::new(interval, bucket, &s.name))
        .collect()
}

/// Sampled-range partitioning with no filtering: every partition pair is
/// scheduled, so exactly `|r| * |s|` element pairs are evaluated.
pub fn rbm_join(op: ThetaOp, r: &Stream, s: &Stream, cfg: &Config) -> Result<JoinOutcome> {
    let start = Instant::now();
    if r.is_empty() || s.is_empty() {
        return Ok(JoinOutcome::empty(cfg.workers));
    }
    let pairs = all_pairs(
        rbm_partitions(r, cfg.partitions),
        rbm_partitions(s, cfg.partitions),
    );
    let sched = schedule(pairs, cfg.workers);
    let (results, mut metrics) = execute(&sched, op);
    metrics.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(JoinOutcome {
        results,
        metrics,
        stage_metrics: Vec::new(),
    })
}

/// Sorts the stream and splits it into `p` equal-count chunks, the remainder
/// spread one element per leading chunk. Chunks that would be empty
/// (`n < p`) are omitted.
pub fn obt_chunks(s: &Stream, p: usize) -> Vec<Partition> {
    let sorted = sorted_by_value(s);
    let n = sorted.len();
    let base = n / p;
    let remainder = n % p;
    let mut chunks = Vec::with_capacity(p);
    let mut offset = 0;
    for k in 0..p {
        let size = base + usize::from(k < remainder);
        if size == 0 {
            continue;
        }
        let chunk = sorted[offset..offset + size].to_vec();
        offset += size;
        let interval = Interval::new(chunk[0].value, chunk[size - 1].value, true);
        chunks.push(Partition::new(interval, chunk, &s.name));
    }
    chunks
}

/// Equal-count chunking with no filtering; chunk pairs are placed on workers
/// uniformly at random, driven by the config seed. Like RBM it evaluates
/// exactly `|r| * |s|` element pairs.
pub fn obt_join(op: ThetaOp, r: &Stream, s: &Stream, cfg: &Config) -> Result<JoinOutcome> {
    let start = Instant::now();
    if r.is_empty() || s.is_empty() {
        return Ok(JoinOutcome::empty(cfg.workers));
    }
    let pairs = all_pairs(obt_chunks(r, cfg.partitions), obt_chunks(s, cfg.partitions));
    let sched = schedule_random(pairs, cfg.workers, cfg.seed);
    let (results, mut metrics) = execute(&sched, op);
    metrics.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(JoinOutcome {
        results,
        metrics,
        stage_metrics: Vec::new(),
    })
}

/// Stream-level cross filtering: each stream is range-partitioned in
/// isolation, and a partition is dropped only when it cannot join with the
/// entire opposite stream. The surviving elements then undergo the full
/// cross product with no pairwise partition filtering; the surviving
/// partition pairs are kept as the distribution units.
pub fn cfs_join(op: ThetaOp, r: &Stream, s: &Stream, cfg: &Config) -> Result<JoinOutcome> {
    let start = Instant::now();
    if r.is_empty() || s.is_empty() {
        return Ok(JoinOutcome::empty(cfg.workers));
    }
    let (r_min, r_max) = r.extremes().unwrap();
    let (s_min, s_max) = s.extremes().unwrap();

    let keep_r = |part: &Partition| {
        extremes_may_join(op, part.min_value(), part.max_value(), s_min, s_max)
    };
    let keep_s = |part: &Partition| {
        extremes_may_join(op, r_min, r_max, part.min_value(), part.max_value())
    };

    let surviving_r: Vec<Partition> = isolated_plan(r, cfg.partitions)?
        .partitions
        .into_iter()
        .filter(keep_r)
        .collect();
    let surviving_s: Vec<Partition> = isolated_plan(s, cfg.partitions)?
        .partitions
        .into_iter()
        .filter(keep_s)
        .collect();

    let pairs = all_pairs(surviving_r, surviving_s);
    let sched = schedule(pairs, cfg.workers);
    let (results, mut metrics) = execute(&sched, op);
    metrics.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(JoinOutcome {
        results,
        metrics,
        stage_metrics: Vec::new(),
    })
}

/// Isolated range partitioning, oversized re-partitioning and
/// partition-level filtering: the pipeline with pre-filtering and
/// amalgamation switched off.
pub fn ftj_join(op: ThetaOp, r: &Stream, s: &Stream, cfg: &Config) -> Result<JoinOutcome> {
    run_partition_pipeline(op, r, s, cfg, false, false, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ThetaOp::*;
    use crate::model::{Ablation, Algorithm};
    use crate::oracle::oracle_join;

    fn ids_sorted(outcome: &JoinOutcome) -> Vec<Vec<u64>> {
        let mut ids: Vec<Vec<u64>> = outcome.results.iter().map(|t| t.ids().to_vec()).collect();
        ids.sort();
        ids
    }

    #[test]
    fn rbm_cuts_distinct_values() {
        let values: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(rbm_cuts(&values, 3), vec![3.0, 6.0]);
    }

    #[test]
    fn rbm_cuts_skewed_duplicates() {
        let values = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 3.0];
        assert_eq!(rbm_cuts(&values, 3), vec![1.0, 2.0]);
    }

    #[test]
    fn rbm_skew_preserves_empty_first_range() {
        let s = Stream::from_values("s", &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 3.0]);
        let parts = rbm_partitions(&s, 3);
        assert_eq!(parts.len(), 3);
        assert!(parts[0].is_empty());
        assert_eq!(parts[0].interval.hi, 1.0);
        assert_eq!(parts[1].interval.lo, 1.0);
        assert_eq!(parts[1].interval.hi, 2.0);
        assert_eq!(parts[1].len(), 6);
        assert_eq!(parts[2].interval.lo, 2.0);
        assert_eq!(parts[2].len(), 3);
    }

    #[test]
    fn rbm_evaluates_the_full_product() {
        let r = Stream::from_values("r", &[3.0, 1.0, 4.0, 1.0, 5.0]);
        let s = Stream::from_values("s", &[9.0, 2.0, 6.0]);
        let cfg = Config {
            algorithm: Algorithm::Rbm,
            partitions: 3,
            ..Config::default()
        };
        let outcome = rbm_join(Gt, &r, &s, &cfg).unwrap();
        assert_eq!(outcome.metrics.cartesian_count, 15);
        let (want, _) = oracle_join(Gt, &r, &s);
        assert_eq!(outcome.results.len(), want.len());
    }

    #[test]
    fn obt_chunk_boundaries() {
        let s = Stream::from_values("s", &[9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        let chunks = obt_chunks(&s, 3);
        let sizes: Vec<usize> = chunks.iter().map(Partition::len).collect();
        assert_eq!(sizes, vec![3, 3, 3]);
        let firsts: Vec<f64> = chunks.iter().map(|c| c.elements[0].value).collect();
        assert_eq!(firsts, vec![1.0, 4.0, 7.0]);

        let s = Stream::from_values("s", &(0..10).map(f64::from).collect::<Vec<_>>());
        let sizes: Vec<usize> = obt_chunks(&s, 3).iter().map(Partition::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
    }

    #[test]
    fn obt_chunk_sizes_differ_by_at_most_one() {
        for n in [1usize, 2, 5, 9, 10, 23] {
            let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let s = Stream::from_values("s", &values);
            let sizes: Vec<usize> = obt_chunks(&s, 4).iter().map(Partition::len).collect();
            let max = *sizes.iter().max().unwrap();
            let min = *sizes.iter().min().unwrap();
            assert!(max - min <= 1, "n={n} sizes {sizes:?}");
            assert_eq!(sizes.iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn obt_placement_is_seeded_and_full_product() {
        let r = Stream::from_values("r", &[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]);
        let s = Stream::from_values("s", &[2.0, 6.0, 5.0, 3.0]);
        let cfg = Config {
            algorithm: Algorithm::Obt,
            partitions: 3,
            seed: 42,
            ..Config::default()
        };
        let a = obt_join(Le, &r, &s, &cfg).unwrap();
        let b = obt_join(Le, &r, &s, &cfg).unwrap();
        assert_eq!(a.metrics.per_worker_in, b.metrics.per_worker_in);
        assert_eq!(a.metrics.cartesian_count, 24);
        assert_eq!(ids_sorted(&a), ids_sorted(&b));
    }

    #[test]
    fn cfs_drops_partition_beyond_stream_max() {
        // r tops out at 9; the s-partition starting at 9 cannot join under gt.
        let r = Stream::from_values("r", &[1.0, 3.0, 5.0, 9.0]);
        let s = Stream::from_values("s", &[0.0, 3.0, 5.0, 9.0, 12.0]);
        let cfg = Config {
            algorithm: Algorithm::Cfs,
            partitions: 3,
            ..Config::default()
        };
        let outcome = cfs_join(Gt, &r, &s, &cfg).unwrap();
        // s spans [0, 12], p = 3 -> cuts {0, 4, 8, 12}; partition [8, 12]
        // holds {9, 12} with min 9 >= r.max, so it is eliminated. No r
        // partition is droppable, so the three surviving s elements cross
        // all four r elements.
        assert_eq!(outcome.metrics.cartesian_count, 4 * 3);
        let (want, _) = oracle_join(Gt, &r, &s);
        assert_eq!(outcome.results.len(), want.len());
    }

    #[test]
    fn cfs_keeps_wasteful_cross_products() {
        // The surviving r-partition [0, 3) joins only with small s values,
        // but stream-level filtering still crosses it with every surviving
        // s element.
        let r = Stream::from_values("r", &[0.0, 1.0, 5.0, 8.0, 9.0]);
        let s = Stream::from_values("s", &[0.0, 4.0, 7.0]);
        let cfg = Config {
            algorithm: Algorithm::Cfs,
            partitions: 3,
            ..Config::default()
        };
        let outcome = cfs_join(Gt, &r, &s, &cfg).unwrap();
        // No partition of either side is droppable here.
        assert_eq!(outcome.metrics.cartesian_count, 15);
        let (want, _) = oracle_join(Gt, &r, &s);
        assert_eq!(outcome.results.len(), want.len());
    }

    #[test]
    fn ftj_equals_pipeline_with_both_ablations() {
        let r = Stream::from_values("r", &[0.4, 9.1, 3.3, 5.0, 5.0, 7.7, 2.2]);
        let s = Stream::from_values("s", &[1.0, 8.0, 0.5, 6.6, 6.6]);
        for op in ThetaOp::ALL {
            let cfg = Config {
                algorithm: Algorithm::Ftj,
                partitions: 4,
                ..Config::default()
            };
            let ftj = ftj_join(op, &r, &s, &cfg).unwrap();
            let cfg_ablate = Config {
                thetas: vec![op],
                algorithm: Algorithm::Prefap,
                partitions: 4,
                ablation: Ablation {
                    disable_prefilter: true,
                    disable_amalgamation: true,
                    disable_repartition: false,
                },
                ..Config::default()
            };
            let ablated = crate::join::prefap_join(&r, &s, &cfg_ablate).unwrap();
            assert_eq!(ftj.metrics.cartesian_count, ablated.metrics.cartesian_count);
            assert_eq!(ids_sorted(&ftj), ids_sorted(&ablated));
        }
    }

    #[test]
    fn ftj_retains_wasteful_corner_of_straddling_pair() {
        // r partitions into {0,1}, {5}, {8,9} over [0, 9]; s partitions into
        // {0}, {4,7}, {11} over [0, 11]. The box {5} x {4,7} survives because
        // 5 > 4, dragging the non-satisfying (5, 7) corner into the product.
        let r = Stream::from_values("r", &[0.0, 1.0, 5.0, 8.0, 9.0]);
        let s = Stream::from_values("s", &[0.0, 4.0, 7.0, 11.0]);
        let cfg = Config {
            algorithm: Algorithm::Ftj,
            partitions: 3,
            ..Config::default()
        };
        let outcome = ftj_join(Gt, &r, &s, &cfg).unwrap();
        // Retained boxes: {0,1}x{0}=2, {5}x{0}=1, {5}x{4,7}=2, {8,9}x{0}=2,
        // {8,9}x{4,7}=4 -> 11 evaluations for 9 results.
        assert_eq!(outcome.metrics.cartesian_count, 11);
        let (want, _) = oracle_join(Gt, &r, &s);
        assert_eq!(want.len(), 9);
        assert_eq!(outcome.results.len(), want.len());
    }
}
