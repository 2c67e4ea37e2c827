//! Report records and their JSON-lines / CSV emission.
//!
//! JSON output is one line per run followed by single-line documents for the
//! aggregate and any significance or ablation sections. Identical flags and
//! seed reproduce the output byte for byte, elapsed-time fields excepted.

use std::io::{self, Write};

use prefap::RunMetrics;
use serde::Serialize;

/// One window run of one algorithm.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunRecord {
    pub algo: String,
    pub theta: String,
    pub seed: u64,
    pub window_index: usize,
    pub cartesian_count: u64,
    pub result_count: u64,
    pub elapsed_ms: f64,
    pub lb_in: f64,
    pub lb_out: f64,
}

impl RunRecord {
    pub fn new(
        algo: impl Into<String>,
        theta: impl Into<String>,
        seed: u64,
        window_index: usize,
        metrics: &RunMetrics,
    ) -> Self {
        RunRecord {
            algo: algo.into(),
            theta: theta.into(),
            seed,
            window_index,
            cartesian_count: metrics.cartesian_count,
            result_count: metrics.result_count,
            elapsed_ms: metrics.elapsed_ms,
            lb_in: metrics.lb_in,
            lb_out: metrics.lb_out,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct MetricAggregate {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub stddev: f64,
}

impl MetricAggregate {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "aggregate of no runs");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let stddev = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MetricAggregate {
            mean,
            min,
            max,
            stddev,
        }
    }
}

/// Per-algorithm aggregate over all of its run rows.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AlgoAggregate {
    pub algo: String,
    pub runs: usize,
    pub cartesian_count: MetricAggregate,
    pub result_count: MetricAggregate,
    pub elapsed_ms: MetricAggregate,
    pub lb_in: MetricAggregate,
    pub lb_out: MetricAggregate,
}

impl AlgoAggregate {
    /// Aggregates the rows carrying this algo label; rows for other algos
    /// are ignored.
    pub fn of(algo: &str, rows: &[RunRecord]) -> Self {
        let mine: Vec<&RunRecord> = rows.iter().filter(|r| r.algo == algo).collect();
        let pick = |f: fn(&RunRecord) -> f64| -> Vec<f64> { mine.iter().map(|r| f(r)).collect() };
        AlgoAggregate {
            algo: algo.to_string(),
            runs: mine.len(),
            cartesian_count: MetricAggregate::of(&pick(|r| r.cartesian_count as f64)),
            result_count: MetricAggregate::of(&pick(|r| r.result_count as f64)),
            elapsed_ms: MetricAggregate::of(&pick(|r| r.elapsed_ms)),
            lb_in: MetricAggregate::of(&pick(|r| r.lb_in)),
            lb_out: MetricAggregate::of(&pick(|r| r.lb_out)),
        }
    }
}

/// One t-test row of the significance section.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SignificanceRecord {
    pub metric: String,
    pub algo_a: String,
    pub algo_b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
    pub neg_log10_p: Option<f64>,
}

/// One variant row of the ablation section; deltas are against the full
/// pipeline, `(variant - full) / full`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AblationRecord {
    pub variant: String,
    pub mean_cartesian_count: f64,
    pub mean_result_count: f64,
    pub mean_elapsed_ms: f64,
    pub cartesian_delta_pct: f64,
    pub elapsed_delta_pct: f64,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct BenchReport {
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<AlgoAggregate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub significance: Vec<SignificanceRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ablation: Vec<AblationRecord>,
}

impl BenchReport {
    /// Builds the per-algo aggregates from the run rows, in first-appearance
    /// order.
    pub fn aggregate(mut self) -> Self {
        let mut order: Vec<String> = Vec::new();
        for row in &self.runs {
            if !order.contains(&row.algo) {
                order.push(row.algo.clone());
            }
        }
        self.aggregates = order
            .iter()
            .map(|algo| AlgoAggregate::of(algo, &self.runs))
            .collect();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// JSON lines: one object per run, then one `{"aggregate": ...}` document,
/// then optional `{"significance": ...}` and `{"ablation": ...}` documents.
pub fn write_json(report: &BenchReport, out: &mut dyn Write) -> io::Result<()> {
    #[derive(Serialize)]
    struct AggregateDoc<'a> {
        aggregate: &'a [AlgoAggregate],
    }
    #[derive(Serialize)]
    struct SignificanceDoc<'a> {
        significance: &'a [SignificanceRecord],
    }
    #[derive(Serialize)]
    struct AblationDoc<'a> {
        ablation: &'a [AblationRecord],
    }

    for row in &report.runs {
        serde_json::to_writer(&mut *out, row)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(
        &mut *out,
        &AggregateDoc {
            aggregate: &report.aggregates,
        },
    )?;
    out.write_all(b"\n")?;
    if !report.significance.is_empty() {
        serde_json::to_writer(
            &mut *out,
            &SignificanceDoc {
                significance: &report.significance,
            },
        )?;
        out.write_all(b"\n")?;
    }
    if !report.ablation.is_empty() {
        serde_json::to_writer(
            &mut *out,
            &AblationDoc {
                ablation: &report.ablation,
            },
        )?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// CSV mirror of the JSON output: a run section, then `# aggregate`,
/// `# significance` and `# ablation` sections with their own headers.
pub fn write_csv(report: &BenchReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(
        out,
        "algo,theta,seed,window_index,cartesian_count,result_count,elapsed_ms,lb_in,lb_out"
    )?;
    for r in &report.runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.algo,
            r.theta,
            r.seed,
            r.window_index,
            r.cartesian_count,
            r.result_count,
            r.elapsed_ms,
            r.lb_in,
            r.lb_out
        )?;
    }

    writeln!(out, "# aggregate")?;
    writeln!(out, "algo,runs,metric,mean,min,max,stddev")?;
    for a in &report.aggregates {
        let metrics: [(&str, &MetricAggregate); 5] = [
            ("cartesian_count", &a.cartesian_count),
            ("result_count", &a.result_count),
            ("elapsed_ms", &a.elapsed_ms),
            ("lb_in", &a.lb_in),
            ("lb_out", &a.lb_out),
        ];
        for (name, m) in metrics {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                a.algo, a.runs, name, m.mean, m.min, m.max, m.stddev
            )?;
        }
    }

    if !report.significance.is_empty() {
        writeln!(out, "# significance")?;
        writeln!(
            out,
            "metric,algo_a,algo_b,mean_a,mean_b,t,df,p_value,neg_log10_p"
        )?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for s in &report.significance {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.metric,
                s.algo_a,
                s.algo_b,
                s.mean_a,
                s.mean_b,
                opt(s.t),
                opt(s.df),
                opt(s.p_value),
                opt(s.neg_log10_p)
            )?;
        }
    }

    if !report.ablation.is_empty() {
        writeln!(out, "# ablation")?;
        writeln!(
            out,
            "variant,mean_cartesian_count,mean_result_count,mean_elapsed_ms,cartesian_delta_pct,elapsed_delta_pct"
        )?;
        for a in &report.ablation {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                a.variant,
                a.mean_cartesian_count,
                a.mean_result_count,
                a.mean_elapsed_ms,
                a.cartesian_delta_pct,
                a.elapsed_delta_pct
            )?;
        }
    }
    Ok(())
}
