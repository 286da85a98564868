//! Scenario files, closed-loop runs, variant comparison and export.

pub mod compare;
pub mod export;
pub mod scenario;
pub mod sim;

pub use compare::{compare_pair, compare_variants, reduction_pct, Comparison, ComparisonRow};
pub use export::{export_csv, export_svg, format_number, ExportError};
pub use scenario::{parse_scenario, BENCHMARK_SCENARIO, NoiseConfig, ObserverTuning, Scenario, ScenarioError};
pub use sim::{run_scenario, ErrorMetrics, RunError, RunResult};
