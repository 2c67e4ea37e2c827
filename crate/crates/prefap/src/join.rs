//! Partition-level filtering, task scheduling, parallel Cartesian evaluation,
//! the end-to-end pipeline and the multi-way cascade driver.

use std::borrow::Cow;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    Algorithm, Config, Element, JoinResult, JoinTask, Partition, RunMetrics, Stream, ThetaOp,
};
use crate::partition::{amalgamate, assign, boundary_of, isolated_plan, repartition_oversized};
use crate::prefilter::prefilter_pair;

/// All tasks of one run, each pinned to a worker lane.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub tasks: Vec<JoinTask>,
    pub workers: usize,
}

/// Results plus metrics of one join run. `stage_metrics` is populated by the
/// multi-way cascade (one entry per stage) and empty for plain 2-way runs.
#[derive(Debug, Clone)]
pub struct JoinOutcome {
    pub results: Vec<JoinResult>,
    pub metrics: RunMetrics,
    pub stage_metrics: Vec<RunMetrics>,
}

impl JoinOutcome {
    pub fn empty(workers: usize) -> Self {
        JoinOutcome {
            results: Vec::new(),
            metrics: RunMetrics::empty(workers),
            stage_metrics: Vec::new(),
        }
    }
}

/// A retained partition pair that has not been placed on a worker yet.
#[derive(Debug, Clone)]
pub struct PartitionPair {
    pub left: Arc<Partition>,
    pub right: Arc<Partition>,
    pub left_index: usize,
    pub right_index: usize,
}

impl PartitionPair {
    pub fn pair_count(&self) -> u64 {
        self.left.len() as u64 * self.right.len() as u64
    }

    fn into_task(self, worker: usize) -> JoinTask {
        JoinTask {
            left: self.left,
            right: self.right,
            left_index: self.left_index,
            right_index: self.right_index,
            worker,
        }
    }
}

/// Can any element pair drawn from these extremes satisfy `left θ right`?
#[inline]
pub(crate) fn extremes_may_join(
    op: ThetaOp,
    left_min: f64,
    left_max: f64,
    right_min: f64,
    right_max: f64,
) -> bool {
    match op {
        ThetaOp::Gt => left_max > right_min,
        ThetaOp::Ge => left_max >= right_min,
        ThetaOp::Lt => left_min < right_max,
        ThetaOp::Le => left_min <= right_max,
    }
}

/// Keep decision for a partition pair, judged on cached element extremes
/// alone. Performs no per-element work.
pub fn partition_filter(op: ThetaOp, left: &Partition, right: &Partition) -> bool {
    extremes_may_join(
        op,
        left.min_value(),
        left.max_value(),
        right.min_value(),
        right.max_value(),
    )
}

fn arc_partitions(parts: Vec<Partition>) -> Vec<Arc<Partition>> {
    parts.into_iter().map(Arc::new).collect()
}

/// All non-empty partition pairs that survive partition-level filtering,
/// in (left, right) index order.
pub fn filtered_pairs(
    op: ThetaOp,
    left: Vec<Partition>,
    right: Vec<Partition>,
) -> Vec<PartitionPair> {
    pairs_inner(left, right, Some(op))
}

/// All non-empty partition pairs, unfiltered.
pub fn all_pairs(left: Vec<Partition>, right: Vec<Partition>) -> Vec<PartitionPair> {
    pairs_inner(left, right, None)
}

fn pairs_inner(
    left: Vec<Partition>,
    right: Vec<Partition>,
    filter: Option<ThetaOp>,
) -> Vec<PartitionPair> {
    let left = arc_partitions(left);
    let right = arc_partitions(right);
    let mut pairs = Vec::new();
    for (i, l) in left.iter().enumerate() {
        if l.is_empty() {
            continue;
        }
        for (j, r) in right.iter().enumerate() {
            if r.is_empty() {
                continue;
            }
            if let Some(op) = filter {
                if !partition_filter(op, l, r) {
                    continue;
                }
            }
            pairs.push(PartitionPair {
                left: Arc::clone(l),
                right: Arc::clone(r),
                left_index: i,
                right_index: j,
            });
        }
    }
    pairs
}

/// Deterministic greedy placement: tasks sorted by pair count descending
/// (ties by partition indices), each assigned to the worker with the lowest
/// accumulated pair count (ties to the lowest worker index).
pub fn schedule(pairs: Vec<PartitionPair>, workers: usize) -> Schedule {
    assert!(workers >= 1, "need at least one worker");
    let mut pairs = pairs;
    pairs.sort_by(|a, b| {
        b.pair_count()
            .cmp(&a.pair_count())
            .then(a.left_index.cmp(&b.left_index))
            .then(a.right_index.cmp(&b.right_index))
    });
    let mut loads = vec![0u64; workers];
    let tasks = pairs
        .into_iter()
        .map(|pair| {
            let worker = loads
                .iter()
                .enumerate()
                .min_by_key(|&(w, &load)| (load, w))
                .map(|(w, _)| w)
                .unwrap();
            loads[worker] += pair.pair_count();
            pair.into_task(worker)
        })
        .collect();
    Schedule { tasks, workers }
}

/// Uniform-random placement driven by `seed`; task order is preserved.
pub fn schedule_random(pairs: Vec<PartitionPair>, workers: usize, seed: u64) -> Schedule {
    assert!(workers >= 1, "need at least one worker");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks = pairs
        .into_iter()
        .map(|pair| {
            let worker = rng.gen_range(0..workers);
            pair.into_task(worker)
        })
        .collect();
    Schedule { tasks, workers }
}

/// Evaluates every task's full element cross product on its assigned worker
/// lane, keeping pairs that satisfy `op`.
///
/// Each lane runs on its own thread over shared immutable partitions and
/// writes into its own output slots; after the barrier the slots are merged
/// in (task-index, left-index, right-index) order, so the output is
/// deterministic regardless of thread interleaving. The returned elapsed time
/// covers only this stage; pipeline entry points overwrite it with the
/// end-to-end figure.
pub fn execute(schedule: &Schedule, op: ThetaOp) -> (Vec<JoinResult>, RunMetrics) {
    let start = Instant::now();
    let workers = schedule.workers;
    let mut per_in = vec![0u64; workers];
    let mut lanes: Vec<Vec<usize>> = vec![Vec::new(); workers];
    for (idx, task) in schedule.tasks.iter().enumerate() {
        per_in[task.worker] += task.pair_count();
        lanes[task.worker].push(idx);
    }

    if schedule.tasks.is_empty() {
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        return (Vec::new(), RunMetrics::from_loads(per_in, vec![0; workers], elapsed));
    }

    // (worker, [(task index, task results)])
    type LaneOutput = (usize, Vec<(usize, Vec<JoinResult>)>);
    let tasks = &schedule.tasks;
    let lane_outputs: Vec<LaneOutput> = thread::scope(|scope| {
        let handles: Vec<_> = lanes
            .iter()
            .enumerate()
            .filter(|(_, idxs)| !idxs.is_empty())
            .map(|(worker, idxs)| {
                scope.spawn(move || {
                    let outputs = idxs
                        .iter()
                        .map(|&idx| (idx, run_task(&tasks[idx], op)))
                        .collect();
                    (worker, outputs)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut per_out = vec![0u64; workers];
    let mut slots: Vec<Vec<JoinResult>> = vec![Vec::new(); schedule.tasks.len()];
    for (worker, outputs) in lane_outputs {
        for (idx, results) in outputs {
            per_out[worker] += results.len() as u64;
            slots[idx] = results;
        }
    }
    let mut results = Vec::new();
    for slot in slots {
        results.extend(slot);
    }

    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    (results, RunMetrics::from_loads(per_in, per_out, elapsed))
}

fn run_task(task: &JoinTask, op: ThetaOp) -> Vec<JoinResult> {
    let mut results = Vec::new();
    for x in &task.left.elements {
        for y in &task.right.elements {
            if op.holds(x.value, y.value) {
                results.push(JoinResult::pair(
                    (x.payload_id, x.value),
                    (y.payload_id, y.value),
                ));
            }
        }
    }
    results
}

/// The shared partition-filter-execute pipeline behind both the full
/// algorithm and FTJ. Stage toggles select pre-filtering, boundary
/// amalgamation and oversized re-partitioning.
pub(crate) fn run_partition_pipeline(
    op: ThetaOp,
    r: &Stream,
    s: &Stream,
    cfg: &Config,
    use_prefilter: bool,
    use_amalgamation: bool,
    use_repartition: bool,
) -> Result<JoinOutcome> {
    let start = Instant::now();

    let (r, s): (Cow<Stream>, Cow<Stream>) = if use_prefilter {
        let (fr, fs) = prefilter_pair(op, r, s);
        (Cow::Owned(fr), Cow::Owned(fs))
    } else {
        (Cow::Borrowed(r), Cow::Borrowed(s))
    };
    if r.is_empty() || s.is_empty() {
        return Ok(JoinOutcome::empty(cfg.workers));
    }

    let (plan_r, plan_s) = if use_amalgamation {
        let apb = amalgamate(&boundary_of(&r, cfg.partitions)?, &boundary_of(&s, cfg.partitions)?);
        (assign(&r, &apb)?, assign(&s, &apb)?)
    } else {
        (isolated_plan(&r, cfg.partitions)?, isolated_plan(&s, cfg.partitions)?)
    };

    let (plan_r, plan_s) = if use_repartition {
        (
            repartition_oversized(plan_r, cfg.window),
            repartition_oversized(plan_s, cfg.window),
        )
    } else {
        (plan_r, plan_s)
    };

    let pairs = filtered_pairs(op, plan_r.partitions, plan_s.partitions);
    let sched = schedule(pairs, cfg.workers);
    let (results, mut metrics) = execute(&sched, op);
    metrics.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(JoinOutcome {
        results,
        metrics,
        stage_metrics: Vec::new(),
    })
}

/// Full pipeline: pre-filter, amalgamated partitioning, oversized
/// re-partitioning, partition-level filtering, greedy scheduling, execution.
/// The config's ablation flags switch individual stages off.
pub fn prefap_join(r: &Stream, s: &Stream, cfg: &Config) -> Result<JoinOutcome> {
    let ab = cfg.ablation;
    run_partition_pipeline(
        cfg.theta(),
        r,
        s,
        cfg,
        !ab.disable_prefilter,
        !ab.disable_amalgamation,
        !ab.disable_repartition,
    )
}

/// Runs one 2-way join under the configured algorithm.
pub fn join_pair(op: ThetaOp, r: &Stream, s: &Stream, cfg: &Config) -> Result<JoinOutcome> {
    match cfg.algorithm {
        Algorithm::Rbm => crate::baselines::rbm_join(op, r, s, cfg),
        Algorithm::Obt => crate::baselines::obt_join(op, r, s, cfg),
        Algorithm::Cfs => crate::baselines::cfs_join(op, r, s, cfg),
        Algorithm::Ftj => crate::baselines::ftj_join(op, r, s, cfg),
        Algorithm::Prefap => {
            let ab = cfg.ablation;
            run_partition_pipeline(
                op,
                r,
                s,
                cfg,
                !ab.disable_prefilter,
                !ab.disable_amalgamation,
                !ab.disable_repartition,
            )
        }
    }
}

/// Left-to-right cascade over three or more streams: each intermediate result
/// set is projected onto its rightmost attribute, joined against the next
/// stream under the next operator, and expanded back into full tuples.
/// The full configured algorithm (including pre-filtering for the pipeline)
/// runs at every stage. Counters and worker loads are summed across stages;
/// per-stage metrics are reported alongside.
pub fn multiway_join(streams: &[Stream], cfg: &Config) -> Result<JoinOutcome> {
    if streams.len() < 2 || cfg.thetas.len() != streams.len() - 1 {
        return Err(Error::ArityMismatch {
            streams: streams.len(),
            thetas: cfg.thetas.len(),
        });
    }
    let start = Instant::now();

    let first = join_pair(cfg.thetas[0], &streams[0], &streams[1], cfg)?;
    let mut results = first.results;
    let mut stage_metrics = vec![first.metrics];

    for (stage, next) in streams[2..].iter().enumerate() {
        let op = cfg.thetas[stage + 1];
        // One derived element per intermediate tuple, carrying its rightmost
        // attribute; the payload id indexes back into `results`.
        let derived = Stream::new(
            "intermediate",
            results
                .iter()
                .enumerate()
                .map(|(idx, tuple)| Element::new(tuple.entries.last().unwrap().1, idx as u64))
                .collect(),
        );
        let outcome = join_pair(op, &derived, next, cfg)?;
        results = outcome
            .results
            .iter()
            .map(|pair| {
                let tuple_idx = pair.entries[0].0 as usize;
                let mut entries = results[tuple_idx].entries.clone();
                entries.push(pair.entries[1]);
                JoinResult { entries }
            })
            .collect();
        stage_metrics.push(outcome.metrics);
    }

    let mut metrics = RunMetrics::combine(&stage_metrics);
    metrics.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(JoinOutcome {
        results,
        metrics,
        stage_metrics,
    })
}

/// Dispatches on arity: a plain 2-way join for two streams, the cascade for
/// more.
pub fn join_streams(streams: &[Stream], cfg: &Config) -> Result<JoinOutcome> {
    cfg.validate()?;
    match streams.len() {
        2 => {
            if cfg.thetas.len() != 1 {
                return Err(Error::ArityMismatch {
                    streams: 2,
                    thetas: cfg.thetas.len(),
                });
            }
            join_pair(cfg.theta(), &streams[0], &streams[1], cfg)
        }
        _ => multiway_join(streams, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Ablation, Interval};
    use crate::model::ThetaOp::*;
    use crate::oracle::{oracle_join, oracle_multiway};

    fn part(lo: f64, hi: f64, closed: bool, values: &[f64]) -> Partition {
        let elements = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Element::new(v, i as u64))
            .collect();
        Partition::new(Interval::new(lo, hi, closed), elements, "t")
    }

    #[test]
    fn filter_rejects_disjoint_gt_pair() {
        let pr = part(1.0, 2.67, false, &[1.0, 2.0]);
        let ps = part(3.67, 5.33, false, &[4.0, 5.0]);
        assert!(!partition_filter(Gt, &pr, &ps));
        assert!(partition_filter(Lt, &pr, &ps));
    }

    #[test]
    fn filter_strictness_edges() {
        let pr = part(0.0, 5.0, true, &[2.0, 5.0]);
        let ps = part(5.0, 9.0, true, &[5.0, 8.0]);
        assert!(partition_filter(Ge, &pr, &ps)); // pr.max == ps.min
        assert!(!partition_filter(Gt, &pr, &ps));

        let pr = part(3.0, 6.0, true, &[3.0, 4.0]);
        let ps = part(0.0, 3.0, true, &[1.0, 3.0]);
        assert!(partition_filter(Le, &pr, &ps)); // pr.min == ps.max
        assert!(!partition_filter(Lt, &pr, &ps));
    }

    fn pair_of_sizes(sizes: &[(usize, u64)]) -> Vec<PartitionPair> {
        // Builds one pair per entry with the requested pair count (n x 1).
        sizes
            .iter()
            .map(|&(idx, n)| {
                let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
                PartitionPair {
                    left: Arc::new(part(0.0, n as f64, true, &values)),
                    right: Arc::new(part(0.0, 1.0, true, &[0.5])),
                    left_index: idx,
                    right_index: 0,
                }
            })
            .collect()
    }

    #[test]
    fn greedy_schedule_balances_known_case() {
        let pairs = pair_of_sizes(&[(0, 8), (1, 5), (2, 5), (3, 2)]);
        let sched = schedule(pairs, 2);
        let mut loads = [0u64; 2];
        for t in &sched.tasks {
            loads[t.worker] += t.pair_count();
        }
        assert_eq!(loads, [10, 10]);
    }

    #[test]
    fn single_task_goes_to_worker_zero() {
        let pairs = pair_of_sizes(&[(0, 3)]);
        let sched = schedule(pairs, 4);
        assert_eq!(sched.tasks[0].worker, 0);
    }

    #[test]
    fn empty_schedule_zero_work() {
        let sched = schedule(Vec::new(), 3);
        let (results, metrics) = execute(&sched, Gt);
        assert!(results.is_empty());
        assert_eq!(metrics.cartesian_count, 0);
        assert_eq!(metrics.lb_in, 1.0);
        assert_eq!(metrics.lb_out, 1.0);
    }

    #[test]
    fn execute_nested_loop_golden() {
        let left = Arc::new(part(0.0, 10.0, true, &[5.0, 9.0]));
        let right = Arc::new(part(0.0, 10.0, true, &[4.0, 9.0]));
        let sched = Schedule {
            tasks: vec![JoinTask {
                left,
                right,
                left_index: 0,
                right_index: 0,
                worker: 0,
            }],
            workers: 2,
        };
        let (results, metrics) = execute(&sched, Gt);
        assert_eq!(metrics.cartesian_count, 4);
        assert_eq!(metrics.result_count, 2);
        let values: Vec<_> = results.iter().map(|t| t.values().to_vec()).collect();
        assert_eq!(values, vec![vec![5.0, 4.0], vec![9.0, 4.0]]);
        assert!(metrics.cartesian_count >= metrics.result_count);
    }

    #[test]
    fn pipeline_worked_example_avoids_disjoint_boxes() {
        // Post-filter ranges [1, 9] and [0, 8] with p = 3 produce the 7-interval
        // amalgamated boundary; the box pair r:[1, 2.67) x s:[3.67, 5.33) must
        // be filtered out under gt.
        let r = Stream::from_values("r", &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let s = Stream::from_values("s", &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let cfg = Config {
            thetas: vec![Gt],
            partitions: 3,
            ..Config::default()
        };
        let outcome = prefap_join(&r, &s, &cfg).unwrap();
        let (expected, _) = oracle_join(Gt, &r, &s);
        let mut got: Vec<_> = outcome.results.iter().map(|t| t.ids()).collect();
        let mut want: Vec<_> = expected.iter().map(|t| t.ids()).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);

        // No scheduled task pairs the r-box starting at 1 with the s-box
        // starting at 1 + 8/3.
        let lo_r = 1.0;
        let lo_s = 1.0 + 8.0 / 3.0;
        assert!(outcome.metrics.cartesian_count >= outcome.metrics.result_count);
        let cfg_probe = Config {
            thetas: vec![Gt],
            partitions: 3,
            ..Config::default()
        };
        let (fr, fs) = prefilter_pair(Gt, &r, &s);
        let apb = amalgamate(
            &boundary_of(&fr, cfg_probe.partitions).unwrap(),
            &boundary_of(&fs, cfg_probe.partitions).unwrap(),
        );
        assert_eq!(apb.interval_count(), 7);
        let plan_r = assign(&fr, &apb).unwrap();
        let plan_s = assign(&fs, &apb).unwrap();
        let pairs = filtered_pairs(Gt, plan_r.partitions, plan_s.partitions);
        assert!(pairs
            .iter()
            .all(|p| !(p.left.interval.lo == lo_r && p.right.interval.lo == lo_s)));
    }

    #[test]
    fn pipeline_empty_inputs() {
        let r = Stream::from_values("r", &[]);
        let s = Stream::from_values("s", &[1.0]);
        let cfg = Config::default();
        let outcome = prefap_join(&r, &s, &cfg).unwrap();
        assert!(outcome.results.is_empty());
        assert_eq!(outcome.metrics.cartesian_count, 0);
        assert_eq!(outcome.metrics.lb_in, 1.0);
    }

    #[test]
    fn cascade_matches_triple_oracle() {
        let streams = vec![
            Stream::from_values("r", &[1.0, 2.0]),
            Stream::from_values("s", &[1.0, 2.0]),
            Stream::from_values("t", &[1.0, 2.0]),
        ];
        let cfg = Config {
            thetas: vec![Lt, Le],
            partitions: 2,
            ..Config::default()
        };
        let outcome = multiway_join(&streams, &cfg).unwrap();
        assert_eq!(outcome.results.len(), 1);
        assert_eq!(outcome.results[0].values().as_slice(), &[1.0, 2.0, 2.0]);
        let (want, _) = oracle_multiway(&streams, &cfg.thetas).unwrap();
        assert_eq!(outcome.results.len(), want.len());
        assert_eq!(outcome.stage_metrics.len(), 2);
    }

    #[test]
    fn cascade_with_empty_middle_stage() {
        let streams = vec![
            Stream::from_values("r", &[5.0]),
            Stream::from_values("s", &[1.0]),
            Stream::from_values("t", &[9.0]),
        ];
        // 5 < 1 never holds, so stage one is empty and stage two sees nothing.
        let cfg = Config {
            thetas: vec![Lt, Lt],
            ..Config::default()
        };
        let outcome = multiway_join(&streams, &cfg).unwrap();
        assert!(outcome.results.is_empty());
        assert_eq!(outcome.stage_metrics.len(), 2);
        assert_eq!(outcome.stage_metrics[1].cartesian_count, 0);
    }

    #[test]
    fn ablations_only_differ_in_pruning_never_results() {
        let r = Stream::from_values("r", &[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]);
        let s = Stream::from_values("s", &[2.0, 7.0, 1.0, 8.0, 2.0, 8.0]);
        let (want_raw, _) = oracle_join(Le, &r, &s);
        let mut want: Vec<_> = want_raw.iter().map(|t| t.ids()).collect();
        want.sort();
        for disable_prefilter in [false, true] {
            for disable_amalgamation in [false, true] {
                for disable_repartition in [false, true] {
                    let cfg = Config {
                        thetas: vec![Le],
                        partitions: 3,
                        ablation: Ablation {
                            disable_prefilter,
                            disable_amalgamation,
                            disable_repartition,
                        },
                        ..Config::default()
                    };
                    let outcome = prefap_join(&r, &s, &cfg).unwrap();
                    let mut got: Vec<_> = outcome.results.iter().map(|t| t.ids()).collect();
                    got.sort();
                    assert_eq!(got, want);
                }
            }
        }
    }
}
