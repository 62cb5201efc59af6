//! Scenario generators: random procedure graphs, server farms, the
//! mobile-core workload and its aggregated architectures.

mod farm;
mod fivegc;
mod random;

pub use farm::{
    gen_farm, gen_farm_sized, server_count, small_server_count, FarmConfig, FarmDemand,
    Homogeneity,
};
pub use fivegc::{
    aggregate, gen_5gc_workload, u_max, Architecture, ArchitectureModel, NfGroup, NfGrouping,
    FIVEGC_PROCEDURES,
};
pub use random::{gen_random_procedure, RandomGraphConfig};
