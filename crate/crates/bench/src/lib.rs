//! Shared fixtures for the benchmarks.

use nfdm_core::channel::FiberLink;
use nfdm_core::modem::{Burst, Constellation, Modem, ModemConfig, PulseShape};
use nfdm_core::rng::{stream, Purpose};

/// 16QAM modem over 2000 km at `ps_dbm`, eight samples per symbol.
pub fn modem(n_b: usize, n_z: usize, ps_dbm: f64) -> Modem {
    let link = FiberLink { length: 2e6, ..FiberLink::default() };
    let pulse = PulseShape::gaussian(12.5, 20e-12).expect("valid pulse");
    let cfg = ModemConfig::new(Constellation::qam(16).expect("valid order"), pulse, n_b, n_z, 8, &link)
        .expect("valid modem");
    Modem::with_power(cfg, 1e-3 * 10f64.powf(ps_dbm / 10.0)).expect("reachable power")
}

pub fn burst(modem: &Modem, seed: u64) -> Burst {
    let c = &modem.config;
    Burst::random(&c.constellation, c.n_b, c.n_z, &mut stream(seed, 0, Purpose::Symbols))
}
