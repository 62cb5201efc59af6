//! Batch experiments: heuristic-versus-exact cost gap, architecture
//! comparison over farm sizes, and farm utilization versus load.
//!
//! Runs are independent and execute in parallel; results are ordered by
//! their sweep position before being written, so output does not depend on
//! scheduling.

mod arch;
mod config;
mod cost_gap;
mod output;
mod utilization;

pub use arch::{
    architectures, place_at_load, run_arch_compare, supported_load, workload_farm,
    ArchCompareResult, ArchProcedureRecord, ArchRecord, BitmapRecord, SupportedLoad,
};
pub use config::{
    ArchCompareConfig, CostGapConfig, UtilizationConfig, NON_HOMOGENEOUS_HEADROOM,
};
pub use cost_gap::{cost_gap_instance, cost_gap_run, run_cost_gap, CostGapCell, CostGapRecord, CostGapResult, MmStatus};
pub use utilization::{run_utilization, UtilizationRecord, UtilizationResult};
