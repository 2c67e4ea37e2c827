//! A windowed-stream theta-join engine built around Cartesian-product
//! pruning: stream-level pre-filtering, amalgamated range partitioning,
//! oversized-partition re-partitioning and partition-level filtering, with a
//! parallel worker pool standing in for distributed processes.
//!
//! Alongside the main pipeline the crate ships four reference baselines
//! (RBM, OBT, CFS, FTJ) behind the same interface, a brute-force oracle used
//! as ground truth, seeded synthetic data generators and CSV ingestion.
//!
//! ```
//! use prefap::{join_streams, Config, Stream, ThetaOp};
//!
//! let r = Stream::from_values("r", &[3.0, 9.0, 5.0]);
//! let s = Stream::from_values("s", &[4.0, 9.0]);
//! let cfg = Config { thetas: vec![ThetaOp::Gt], ..Config::default() };
//! let outcome = join_streams(&[r, s], &cfg).unwrap();
//! assert_eq!(outcome.results.len(), 2); // 9 > 4 and 5 > 4
//! assert!(outcome.metrics.cartesian_count >= 2);
//! ```

pub mod baselines;
pub mod datasource;
pub mod error;
pub mod join;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod prefilter;

pub use error::{Error, Result};
pub use join::{join_streams, multiway_join, prefap_join, JoinOutcome};
pub use model::{
    Ablation, Algorithm, Boundary, Config, Element, Interval, JoinResult, JoinTask, Partition,
    RunMetrics, Stream, ThetaOp,
};
