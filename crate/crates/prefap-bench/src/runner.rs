//! Orchestration: stream materialization, windowed runs, ablation sweeps,
//! significance testing and oracle verification.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use prefap::datasource::{generate, load_csv, windows, DistKind, DistSpec};
use prefap::join::join_streams;
use prefap::model::{Ablation, Algorithm, Config, Stream};
use prefap::oracle::{oracle_join, oracle_multiway};
use prefap::{Error, JoinOutcome, Result};

use crate::report::{
    AblationRecord, AlgoAggregate, BenchReport, RunRecord, SignificanceRecord,
};
use crate::stats::welch_t_test;

/// Where one stream's data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Dist(DistKind),
    Csv { path: PathBuf, column: String },
}

/// How `--repeat` multiplies runs: fresh seeds per repetition, or one long
/// generated stream cut into `repeat` windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepeatMode {
    #[default]
    Seeds,
    Windows,
}

/// A fully resolved benchmark request.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub cfg: Config,
    pub sources: Vec<SourceSpec>,
    /// Elements generated per stream (per repetition in seeds mode).
    pub count: usize,
    pub repeat: usize,
    pub repeat_mode: RepeatMode,
}

fn stream_name(idx: usize) -> String {
    match idx {
        0 => "R".to_string(),
        1 => "S".to_string(),
        2 => "T".to_string(),
        n => format!("D{n}"),
    }
}

/// Distinct streams of one repetition get seeds offset from the repetition
/// seed so equal distribution specs still produce distinct data.
fn stream_seed(rep_seed: u64, idx: usize) -> u64 {
    rep_seed.wrapping_add(idx as u64 * 7919)
}

fn materialize(spec: &RunSpec, rep_seed: u64, count: usize) -> Result<Vec<Stream>> {
    spec.sources
        .iter()
        .enumerate()
        .map(|(idx, source)| {
            let stream = match source {
                SourceSpec::Dist(kind) => generate(&DistSpec {
                    kind: *kind,
                    seed: stream_seed(rep_seed, idx),
                    count,
                })?,
                SourceSpec::Csv { path, column } => load_csv(path, column)?,
            };
            Ok(stream.with_name(stream_name(idx)))
        })
        .collect()
}

fn theta_label(cfg: &Config) -> String {
    cfg.thetas
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// Runs `cfg` over every aligned window set of every repetition, emitting a
/// row per run and handing each outcome to the hook.
fn collect_runs<F>(spec: &RunSpec, cfg: &Config, label: &str, mut hook: F) -> Result<Vec<RunRecord>>
where
    F: FnMut(u64, usize, &[Stream], &JoinOutcome) -> Result<()>,
{
    let theta = theta_label(cfg);
    let mut rows = Vec::new();

    let mut run_rep = |rep_seed: u64, streams: &[Stream]| -> Result<()> {
        let per_stream: Vec<Vec<Stream>> = streams.iter().map(|s| windows(s, cfg.window)).collect();
        let aligned = per_stream.iter().map(Vec::len).min().unwrap_or(0);
        for wi in 0..aligned {
            let window_set: Vec<Stream> =
                per_stream.iter().map(|ws| ws[wi].clone()).collect();
            let run_cfg = Config {
                seed: rep_seed,
                ..cfg.clone()
            };
            let outcome = join_streams(&window_set, &run_cfg)?;
            rows.push(RunRecord::new(label, &theta, rep_seed, wi, &outcome.metrics));
            hook(rep_seed, wi, &window_set, &outcome)?;
        }
        Ok(())
    };

    match spec.repeat_mode {
        RepeatMode::Seeds => {
            for rep in 0..spec.repeat {
                let rep_seed = spec.cfg.seed.wrapping_add(rep as u64);
                let streams = materialize(spec, rep_seed, spec.count)?;
                run_rep(rep_seed, &streams)?;
            }
        }
        RepeatMode::Windows => {
            let streams = materialize(spec, spec.cfg.seed, spec.count * spec.repeat)?;
            run_rep(spec.cfg.seed, &streams)?;
        }
    }
    Ok(rows)
}

fn no_hook(_: u64, _: usize, _: &[Stream], _: &JoinOutcome) -> Result<()> {
    Ok(())
}

/// Streams satisfying tuples to CSV as they are produced.
struct ResultDumper {
    writer: BufWriter<File>,
    wrote_header: bool,
}

impl ResultDumper {
    fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(ResultDumper {
            writer: BufWriter::new(file),
            wrote_header: false,
        })
    }

    fn dump(&mut self, seed: u64, window_index: usize, outcome: &JoinOutcome) -> Result<()> {
        let io_err = |source| Error::Io {
            path: PathBuf::from("<dump>"),
            source,
        };
        for tuple in &outcome.results {
            if !self.wrote_header {
                let mut header = String::from("seed,window_index");
                for i in 0..tuple.entries.len() {
                    header.push_str(&format!(",id_{i},value_{i}"));
                }
                writeln!(self.writer, "{header}").map_err(io_err)?;
                self.wrote_header = true;
            }
            let mut line = format!("{seed},{window_index}");
            for (id, value) in &tuple.entries {
                line.push_str(&format!(",{id},{value}"));
            }
            writeln!(self.writer, "{line}").map_err(io_err)?;
        }
        Ok(())
    }
}

/// Runs the configured algorithm; with `significance` also runs the pipeline
/// and FTJ on identical inputs and t-tests all four metrics (alternative:
/// pipeline metric < FTJ metric). `dump_results` streams satisfying tuples
/// to CSV.
pub fn run_join(
    spec: &RunSpec,
    significance: bool,
    dump_results: Option<&Path>,
) -> Result<BenchReport> {
    let mut dumper = dump_results.map(ResultDumper::create).transpose()?;
    let label = spec.cfg.algorithm.as_str().to_string();
    let mut runs = collect_runs(spec, &spec.cfg, &label, |seed, wi, _, outcome| {
        if let Some(d) = dumper.as_mut() {
            d.dump(seed, wi, outcome)?;
        }
        Ok(())
    })?;

    let mut significance_rows = Vec::new();
    if significance {
        let rows_for = |algorithm: Algorithm| -> Result<Vec<RunRecord>> {
            if spec.cfg.algorithm == algorithm {
                return Ok(runs.iter().filter(|r| r.algo == algorithm.as_str()).cloned().collect());
            }
            let cfg = Config {
                algorithm,
                ablation: Ablation::NONE,
                ..spec.cfg.clone()
            };
            collect_runs(spec, &cfg, algorithm.as_str(), no_hook)
        };
        let prefap_rows = rows_for(Algorithm::Prefap)?;
        let ftj_rows = rows_for(Algorithm::Ftj)?;
        significance_rows = significance_records(&prefap_rows, &ftj_rows);
        for extra in [prefap_rows, ftj_rows] {
            if extra.first().map(|r| r.algo.clone()) != runs.first().map(|r| r.algo.clone()) {
                runs.extend(extra);
            }
        }
    }

    Ok(BenchReport {
        runs,
        aggregates: Vec::new(),
        significance: significance_rows,
        ablation: Vec::new(),
    }
    .aggregate())
}

/// One t-test per metric between two run-row sets.
pub fn significance_records(a: &[RunRecord], b: &[RunRecord]) -> Vec<SignificanceRecord> {
    type Pick = fn(&RunRecord) -> f64;
    let metrics: [(&str, Pick); 4] = [
        ("cartesian_count", |r| r.cartesian_count as f64),
        ("elapsed_ms", |r| r.elapsed_ms),
        ("lb_in", |r| r.lb_in),
        ("lb_out", |r| r.lb_out),
    ];
    let (algo_a, algo_b) = (
        a.first().map_or("a".to_string(), |r| r.algo.clone()),
        b.first().map_or("b".to_string(), |r| r.algo.clone()),
    );
    metrics
        .into_iter()
        .map(|(name, pick)| {
            let xs: Vec<f64> = a.iter().map(pick).collect();
            let ys: Vec<f64> = b.iter().map(pick).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            match welch_t_test(&xs, &ys) {
                Ok(tt) => SignificanceRecord {
                    metric: name.to_string(),
                    algo_a: algo_a.clone(),
                    algo_b: algo_b.clone(),
                    mean_a: mean(&xs),
                    mean_b: mean(&ys),
                    t: Some(tt.t),
                    df: Some(tt.df),
                    p_value: Some(tt.p),
                    neg_log10_p: Some(tt.neg_log10_p),
                },
                Err(_) => SignificanceRecord {
                    metric: name.to_string(),
                    algo_a: algo_a.clone(),
                    algo_b: algo_b.clone(),
                    mean_a: mean(&xs),
                    mean_b: mean(&ys),
                    t: None,
                    df: None,
                    p_value: None,
                    neg_log10_p: None,
                },
            }
        })
        .collect()
}

/// The pipeline ablation sweep: full, minus pre-filtering, minus
/// amalgamation, minus both, on identical inputs and seeds.
pub fn ablation_variants() -> [(&'static str, Ablation); 4] {
    [
        ("prefap", Ablation::NONE),
        (
            "prefap-no-prefilter",
            Ablation {
                disable_prefilter: true,
                ..Ablation::NONE
            },
        ),
        (
            "prefap-no-amalgamation",
            Ablation {
                disable_amalgamation: true,
                ..Ablation::NONE
            },
        ),
        (
            "prefap-no-prefilter-no-amalgamation",
            Ablation {
                disable_prefilter: true,
                disable_amalgamation: true,
                ..Ablation::NONE
            },
        ),
    ]
}

/// Runs all four pipeline variants and reports per-variant means plus
/// percentage deltas against the full version.
pub fn run_ablation(spec: &RunSpec) -> Result<BenchReport> {
    let mut runs = Vec::new();
    for (label, ablation) in ablation_variants() {
        let cfg = Config {
            algorithm: Algorithm::Prefap,
            ablation,
            ..spec.cfg.clone()
        };
        runs.extend(collect_runs(spec, &cfg, label, no_hook)?);
    }
    let report = BenchReport {
        runs,
        ..Default::default()
    }
    .aggregate();

    let full = AlgoAggregate::of("prefap", &report.runs);
    let delta = |value: f64, base: f64| {
        if base == 0.0 {
            0.0
        } else {
            (value - base) / base * 100.0
        }
    };
    let ablation = ablation_variants()
        .iter()
        .map(|(label, _)| {
            let agg = AlgoAggregate::of(label, &report.runs);
            AblationRecord {
                variant: label.to_string(),
                mean_cartesian_count: agg.cartesian_count.mean,
                mean_result_count: agg.result_count.mean,
                mean_elapsed_ms: agg.elapsed_ms.mean,
                cartesian_delta_pct: delta(agg.cartesian_count.mean, full.cartesian_count.mean),
                elapsed_delta_pct: delta(agg.elapsed_ms.mean, full.elapsed_ms.mean),
            }
        })
        .collect();

    Ok(BenchReport { ablation, ..report })
}

/// Per-window verdicts of an oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub lines: Vec<String>,
    pub mismatches: usize,
}

fn sorted_ids(results: &[prefap::JoinResult]) -> Vec<Vec<u64>> {
    let mut ids: Vec<Vec<u64>> = results.iter().map(|t| t.ids().to_vec()).collect();
    ids.sort();
    ids
}

/// Re-runs every window through the brute-force oracle and compares result
/// multisets.
pub fn run_verify(spec: &RunSpec) -> Result<VerifySummary> {
    let mut lines = Vec::new();
    let mut mismatches = 0usize;
    let label = spec.cfg.algorithm.as_str().to_string();
    collect_runs(spec, &spec.cfg, &label, |seed, wi, window_set, outcome| {
        let want = if window_set.len() == 2 {
            oracle_join(spec.cfg.thetas[0], &window_set[0], &window_set[1]).0
        } else {
            oracle_multiway(window_set, &spec.cfg.thetas)?.0
        };
        let ok = sorted_ids(&outcome.results) == sorted_ids(&want)
            && outcome.metrics.cartesian_count >= outcome.metrics.result_count;
        if ok {
            lines.push(format!(
                "seed {seed} window {wi}: OK ({} results, {} pairs evaluated)",
                outcome.results.len(),
                outcome.metrics.cartesian_count
            ));
        } else {
            mismatches += 1;
            lines.push(format!(
                "seed {seed} window {wi}: MISMATCH (engine {} vs oracle {})",
                outcome.results.len(),
                want.len()
            ));
        }
        Ok(())
    })?;
    Ok(VerifySummary { lines, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist_spec(algorithm: Algorithm, seed: u64, repeat: usize) -> RunSpec {
        RunSpec {
            cfg: Config {
                algorithm,
                seed,
                window: 50,
                partitions: 5,
                workers: 2,
                ..Config::default()
            },
            sources: vec![
                SourceSpec::Dist(DistKind::Uniform { lo: 20.0, hi: 50.0 }),
                SourceSpec::Dist(DistKind::Uniform { lo: 10.0, hi: 40.0 }),
            ],
            count: 50,
            repeat,
            repeat_mode: RepeatMode::Seeds,
        }
    }

    #[test]
    fn run_join_produces_rows_and_aggregates() {
        let report = run_join(&dist_spec(Algorithm::Prefap, 7, 3), false, None).unwrap();
        assert_eq!(report.runs.len(), 3);
        assert_eq!(report.aggregates.len(), 1);
        assert_eq!(report.aggregates[0].runs, 3);
        assert!(report.runs.iter().all(|r| r.algo == "prefap"));
        let seeds: Vec<u64> = report.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![7, 8, 9]);
    }

    #[test]
    fn windows_mode_cuts_one_long_stream() {
        let spec = RunSpec {
            repeat_mode: RepeatMode::Windows,
            ..dist_spec(Algorithm::Ftj, 3, 4)
        };
        let report = run_join(&spec, false, None).unwrap();
        assert_eq!(report.runs.len(), 4);
        let indices: Vec<usize> = report.runs.iter().map(|r| r.window_index).collect();
        assert_eq!(indices, vec![0, 1, 2, 3]);
        assert!(report.runs.iter().all(|r| r.seed == 3));
    }

    #[test]
    fn significance_compares_pipeline_to_ftj() {
        let report = run_join(&dist_spec(Algorithm::Prefap, 11, 8), true, None).unwrap();
        assert_eq!(report.significance.len(), 4);
        let metrics: Vec<&str> = report
            .significance
            .iter()
            .map(|s| s.metric.as_str())
            .collect();
        assert_eq!(metrics, vec!["cartesian_count", "elapsed_ms", "lb_in", "lb_out"]);
        for s in &report.significance {
            assert_eq!(s.algo_a, "prefap");
            assert_eq!(s.algo_b, "ftj");
        }
        // FTJ rows were added to the report for aggregation.
        assert!(report.aggregates.iter().any(|a| a.algo == "ftj"));
    }

    #[test]
    fn ablation_reports_all_variants_with_deltas() {
        let report = run_ablation(&dist_spec(Algorithm::Prefap, 5, 4)).unwrap();
        assert_eq!(report.ablation.len(), 4);
        assert_eq!(report.ablation[0].variant, "prefap");
        assert_eq!(report.ablation[0].cartesian_delta_pct, 0.0);
        assert_eq!(report.runs.len(), 16);
        // The double ablation can never beat the full pipeline on pruning.
        assert!(
            report.ablation[3].mean_cartesian_count >= report.ablation[0].mean_cartesian_count
        );
    }

    #[test]
    fn verify_agrees_with_oracle() {
        for algorithm in Algorithm::ALL {
            let summary = run_verify(&dist_spec(algorithm, 2, 2)).unwrap();
            assert_eq!(summary.mismatches, 0, "{algorithm}");
            assert_eq!(summary.lines.len(), 2);
        }
    }

    #[test]
    fn csv_source_roundtrip() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "value").unwrap();
        for i in 0..30 {
            writeln!(f, "{}", (i % 7) as f64).unwrap();
        }
        let spec = RunSpec {
            cfg: Config {
                window: 10,
                partitions: 3,
                workers: 2,
                ..Config::default()
            },
            sources: vec![
                SourceSpec::Csv {
                    path: f.path().to_path_buf(),
                    column: "value".into(),
                },
                SourceSpec::Dist(DistKind::Uniform { lo: 0.0, hi: 7.0 }),
            ],
            count: 30,
            repeat: 1,
            repeat_mode: RepeatMode::Seeds,
        };
        let report = run_join(&spec, false, None).unwrap();
        assert_eq!(report.runs.len(), 3); // 30 rows / window 10
        let summary = run_verify(&spec).unwrap();
        assert_eq!(summary.mismatches, 0);
    }
}
