//! Benchmark harness for the theta-join engine: stream materialization,
//! windowed runs, metric reports (JSON lines / CSV), ablation sweeps, Welch
//! t-tests and oracle verification, all behind the `prefap-bench` binary.

pub mod cli;
pub mod report;
pub mod runner;
pub mod stats;
