//! Performance metrics, the throughput model and the sensing/access tradeoffs.

pub mod metrics;
pub mod power;
pub mod roc;
pub mod throughput;
pub mod tradeoff;

pub use metrics::{any_band_of, bod, boe, edge_metrics, mb_aggregate, mean_of, weighted_of, Aggregate, EdgeMetrics};
pub use power::{check_constraints, waterfill, ConstraintReport, PowerConstraintSet, WaterfillMode};
pub use roc::{roc_analytic, roc_from_statistics, roc_monte_carlo, RocCurve, RocPoint, RocSource};
pub use throughput::{avg_throughput, band_throughput, bandwidth_sweep, frame_throughput, AccessMode, BandRates, ThroughputModel};
pub use tradeoff::{optimize_tau, optimize_tau_fused, optimize_tau_k, SensingTradeoff, TauOptimum};
