//! Evaluation: per-vertex error statistics, region breakdowns, temporal
//! stability and a throughput harness. Values are meters internally;
//! reports convert to millimeters at the edge.

pub mod bench;
pub mod stats;

pub use bench::{throughput_bench, BenchConfig, BenchReport, BenchRow, MachineInfo};
pub use stats::{
    closest_point_distances, closest_point_error, percentile, region_breakdown, rotation_stability,
    temporal_stability, vertex_distances, vertex_error_stats, ErrorStats, RegionBreakdown, Stability,
};
