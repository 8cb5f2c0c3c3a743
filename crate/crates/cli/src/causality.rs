//! Two transmitted waveforms that share a symbol prefix.

use std::io::{self, Write};

use nfdm_core::modem::{Burst, Modem};
use nfdm_core::rng::{stream, Purpose};
use nfdm_core::signal::{rel_l2, ComplexEnvelope};

use crate::config::ExperimentConfig;
use crate::sweep::dbm_to_watt;

/// Relative deviation below which the prefix property counts as holding.
pub const PREFIX_TOLERANCE: f64 = 1e-4;
/// Relative deviation above which the tails count as different.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct CausalityDemo {
    pub prefix_len: usize,
    /// `t_k = (k − ½)T_s`, normalized.
    pub t_k: f64,
    pub full: ComplexEnvelope,
    pub prefix: ComplexEnvelope,
    /// Relative L2 deviation on `t < t_k`; the sample at `t_k` already
    /// carries the left edge of pulse `k + 1`.
    pub deviation_before: f64,
    /// Relative L2 deviation on `t ≥ t_k`.
    pub deviation_after: f64,
}

impl CausalityDemo {
    pub fn holds(&self) -> bool {
        self.deviation_before <= PREFIX_TOLERANCE && (self.deviation_after > DIVERGENCE_THRESHOLD || self.full.peak_abs() == 0.0)
    }
}

/// Unprecompensated BNFT outputs for `burst` and for its first `k` symbols.
pub fn causality_pair(modem: &Modem, burst: &Burst, k: usize) -> nfdm_core::Result<CausalityDemo> {
    if k == 0 || k >= burst.n_b() {
        return Err(nfdm_core::Error::InvalidParameter(format!("prefix {k} of a {}-symbol burst", burst.n_b())));
    }
    let mut modem = modem.clone();
    modem.config.precomp_length = 0.0;
    let short = Burst { symbols: burst.symbols[..k].to_vec(), n_z: burst.n_z + burst.n_b() - k };
    let full = modem.transmit(burst)?.q;
    let prefix = modem.transmit(&short)?.q;
    let t_k = modem.config.t_k(k);
    let split = full.index_at_or_after(t_k - 1e-9 * full.dt);
    Ok(CausalityDemo {
        prefix_len: k,
        t_k,
        deviation_before: rel_l2(&prefix.samples[..split], &full.samples[..split]),
        deviation_after: rel_l2(&prefix.samples[split..], &full.samples[split..]),
        full,
        prefix,
    })
}

/// Runs the demonstration at the first configured power.
pub fn demo_causality(cfg: &ExperimentConfig) -> nfdm_core::Result<(Modem, CausalityDemo)> {
    let modem = Modem::with_power(cfg.modem_config()?, dbm_to_watt(cfg.powers_dbm[0]))?;
    let c = &modem.config;
    let burst = Burst::random(&c.constellation, c.n_b, c.n_z, &mut stream(cfg.seed, 0, Purpose::Symbols));
    let demo = causality_pair(&modem, &burst, cfg.causality_prefix)?;
    Ok((modem, demo))
}

/// Waveforms in physical units: `t_ps,full_re,full_im,prefix_re,prefix_im` (√W).
pub fn write_waveforms<W: Write>(mut out: W, modem: &Modem, demo: &CausalityDemo) -> io::Result<()> {
    let norm = &modem.config.norm;
    let to_phys = |s: &ComplexEnvelope| norm.denormalize(s).map_err(io::Error::other);
    let (full, prefix) = (to_phys(&demo.full)?, to_phys(&demo.prefix)?);
    writeln!(out, "t_ps,full_re,full_im,prefix_re,prefix_im")?;
    for (i, (a, b)) in full.samples.iter().zip(&prefix.samples).enumerate() {
        writeln!(out, "{},{},{},{},{}", full.time(i) * 1e12, a.re, a.im, b.re, b.im)?;
    }
    Ok(())
}
