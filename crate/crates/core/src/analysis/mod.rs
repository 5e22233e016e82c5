//! Scheme comparisons, sweeps, partition studies and the random scenario generator.

pub mod compare;
pub mod generator;
pub mod partition;
pub mod sweep;
pub mod timing;

pub use compare::{compare_schemes, md_variance, mrp_md_variance, population_variance, ComparisonReport};
pub use generator::{generate_mrp_scenario, generate_scenario, GeneratorBounds, Interval};
pub use partition::{make_equal_partition, partition_study, write_partition_csv, PartitionPlan, PartitionRow};
pub use sweep::{
    estimate_beta, summarize_sweep_n, sweep_a, sweep_heterogeneity, sweep_n, write_heterogeneity_csv, write_sweep_a_csv,
    write_sweep_n_csv, HeterogeneityRow, SweepARow, SweepNRow, SweepNSummary,
};
pub use timing::{timing_benchmark, write_timing_csv, TimingRow};
