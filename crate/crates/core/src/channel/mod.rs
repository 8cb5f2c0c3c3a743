//! Physical channel: unit normalization, split-step propagation with
//! distributed ASE noise, the additive-noise ansatz and the linear and
//! nonlinear compensation baselines.

mod link;
mod ssfm;

pub use link::{db_per_km_to_neper_per_m, FiberLink, Normalization, PLANCK};
pub use ssfm::{awgn_channel, converter_filter, dbp, dispersion, edc, ssfm_propagate, NoiseModel};
