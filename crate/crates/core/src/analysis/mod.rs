//! Error-rate estimation: distance tables and the union-bound triple,
//! Monte Carlo sequence averaging, error counting and the reporting metrics.

mod bounds;
mod metrics;

pub use bounds::{
    distance_table, pe_for_sequence, pe_semianalytic, pk_bounds, q_function, random_sequences,
    BoundTriple, Convergence, DistanceTable, SemiAnalytic,
};
pub use metrics::{
    count_errors, evm_q_estimate, mean_power_per_symbol, pb_from_pe, q_factor_from_pb,
    rate_efficiency, wilson_interval, ErrorReport, EvmEstimate, PbRule,
};
