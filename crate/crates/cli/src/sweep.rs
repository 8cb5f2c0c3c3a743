//! Monte Carlo sweep over launch powers and detectors.

use std::collections::BTreeMap;
use std::time::Instant;

use log::{debug, info};
use num_complex::Complex64;
use rayon::prelude::*;

use nfdm_core::analysis::{
    count_errors, evm_q_estimate, pe_semianalytic, q_factor_from_pb, random_sequences, rate_efficiency,
    BoundTriple, Convergence, ErrorReport,
};
use nfdm_core::channel::{awgn_channel, converter_filter, dbp, edc, ssfm_propagate, NoiseModel};
use nfdm_core::detection::{
    adc_front_end, df_bnft_detect, fnft_detect, genie_df_detect, optimum_sequence_detect,
    phase_offset_compensate, DecisionTrace, FnftOptions, ReceivedWindows,
};
use nfdm_core::modem::{Burst, Modem};
use nfdm_core::rng::{stream, Purpose, SimRng};
use nfdm_core::signal::{ComplexEnvelope, UnitMode};

use crate::config::{ChannelKind, DetectorKind, ExperimentConfig};
use crate::report::ResultRow;

type C = Complex64;

/// Bursts simulated between two stopping checks. Fixed so that the stopping
/// point does not depend on the number of workers.
pub const BATCH: usize = 16;

pub fn dbm_to_watt(p: f64) -> f64 {
    1e-3 * 10f64.powf(p / 10.0)
}

/// Everything needed to simulate bursts at one launch power.
#[derive(Debug, Clone)]
pub struct OperatingPoint<'a> {
    pub cfg: &'a ExperimentConfig,
    pub power_index: usize,
    pub ps_dbm: f64,
    pub modem: Modem,
    /// Normalized noise density `N0/(P0·T0)`.
    pub n0: f64,
    /// Noise standard deviation per complex sample, `√(N0·ν/T_s)`.
    pub sigma: f64,
}

impl<'a> OperatingPoint<'a> {
    pub fn new(cfg: &'a ExperimentConfig, power_index: usize) -> nfdm_core::Result<Self> {
        let ps_dbm = cfg.powers_dbm[power_index];
        let modem = Modem::with_power(cfg.modem_config()?, dbm_to_watt(ps_dbm))?;
        let n0 = modem.config.norm.psd(cfg.fiber.ase_psd());
        let sigma = (n0 / modem.config.dt()).sqrt();
        Ok(Self { cfg, power_index, ps_dbm, modem, n0, sigma })
    }

    fn stream_index(&self, burst: usize) -> u64 {
        ((self.power_index as u64) << 32) | burst as u64
    }

    pub fn burst(&self, index: usize) -> Burst {
        let c = &self.modem.config;
        Burst::random(&c.constellation, c.n_b, c.n_z, &mut stream(self.cfg.seed, self.stream_index(index), Purpose::Symbols))
    }

    /// Noiseless `r(t)` over the whole frame grid.
    pub fn noiseless_frame(&self, burst: &Burst) -> nfdm_core::Result<ComplexEnvelope> {
        let c = &self.modem.config;
        let grid = c.frame_grid();
        let lead = c.burst_offset();
        let extra = (grid.len - lead).div_ceil(c.nu).saturating_sub(burst.n_b());
        let r = self.modem.noiseless_received(burst, extra)?;
        let mut samples = vec![C::new(0.0, 0.0); lead];
        samples.extend_from_slice(&r.samples[..grid.len - lead]);
        ComplexEnvelope::new(samples, grid.start, grid.step, UnitMode::Normalized)
    }

    /// Received NFDM field (normalized, frame grid) for burst `index`.
    pub fn received(&self, burst: &Burst, index: usize) -> nfdm_core::Result<ComplexEnvelope> {
        let mut rng = stream(self.cfg.seed, self.stream_index(index), Purpose::Noise);
        match self.cfg.channel.kind {
            ChannelKind::Awgn => awgn_channel(&self.noiseless_frame(burst)?, self.n0, &mut rng),
            ChannelKind::Fiber => {
                let tx = self.modem.transmit(burst)?;
                self.through_fiber(&tx.q, &mut rng, None)
            }
        }
    }

    /// DAC, split-step propagation and optional receiver compensation.
    fn through_fiber(
        &self,
        q: &ComplexEnvelope,
        rng: &mut SimRng,
        compensation: Option<DetectorKind>,
    ) -> nfdm_core::Result<ComplexEnvelope> {
        let norm = &self.modem.config.norm;
        let mut a = norm.denormalize(q)?;
        if let Some(bw) = self.cfg.channel.dac_bandwidth {
            a = converter_filter(&a, bw);
        }
        let mut out = ssfm_propagate(&a, &self.cfg.fiber, self.cfg.channel.dz, NoiseModel::Distributed, rng)?;
        match compensation {
            Some(DetectorKind::Edc) => out = edc(&out, &self.cfg.fiber)?,
            Some(DetectorKind::Dbp) => {
                out = dbp(&out, &self.cfg.fiber, self.cfg.channel.dbp_span, self.cfg.channel.dbp_steps_per_span)?
            }
            _ => {}
        }
        norm.normalize(&out)
    }

    fn windows(&self, sig: &ComplexEnvelope) -> nfdm_core::Result<ReceivedWindows> {
        let c = &self.modem.config;
        adc_front_end(sig, c.nu, c.t_s(), c.n_b)
    }

    /// Runs one NFDM detector on a received frame.
    pub fn detect(&self, kind: DetectorKind, rx: &ComplexEnvelope, burst: &Burst) -> nfdm_core::Result<DecisionTrace> {
        let mut rx = rx.clone();
        let mut phase = None;
        if self.cfg.detector.phase_comp {
            let reference = self.windows(&self.noiseless_frame(burst)?)?;
            let (_, alpha) = phase_offset_compensate(&self.windows(&rx)?, &reference)?;
            let rot = C::from_polar(1.0, -alpha);
            rx.samples.iter_mut().for_each(|z| *z *= rot);
            phase = Some(alpha);
        }
        let mut trace = match kind {
            DetectorKind::Fnft => {
                let opts = FnftOptions { oversampling: self.cfg.detector.fnft_oversampling, residual_length: 0.0 };
                fnft_detect(&rx, &self.modem, &opts)?
            }
            DetectorKind::DfBnft => df_bnft_detect(&self.windows(&rx)?, &self.modem)?,
            DetectorKind::GenieDf => genie_df_detect(&self.windows(&rx)?, &self.modem, burst)?,
            DetectorKind::Optimum => {
                let decided = optimum_sequence_detect(&self.windows(&rx)?, &self.modem)?;
                DecisionTrace { decided: decided.symbols, distances: Vec::new(), phase_offset: None }
            }
            DetectorKind::Edc | DetectorKind::Dbp => {
                return Err(nfdm_core::Error::InvalidParameter("conventional receivers do not take NFDM frames".into()))
            }
        };
        trace.phase_offset = phase;
        Ok(trace)
    }

    /// Linear QAM amplitude with the same mean launched power as the NFDM modem.
    pub fn conventional_amplitude(&self) -> f64 {
        let c = &self.modem.config;
        let eg: f64 = self.modem.slot().iter().map(|g| g * g).sum::<f64>() * c.dt();
        (c.target_energy(dbm_to_watt(self.ps_dbm)) / (c.n_b as f64 * eg)).sqrt()
    }

    /// Conventional burst through the fiber with EDC or DBP; returns the
    /// matched-filter outputs per symbol.
    pub fn conventional(&self, kind: DetectorKind, burst: &Burst, index: usize) -> nfdm_core::Result<Vec<C>> {
        let c = &self.modem.config;
        let a = self.conventional_amplitude();
        let tx = Modem::new(c.clone(), a)?.frame_signal(burst)?;
        let mut rng = stream(self.cfg.seed, self.stream_index(index), Purpose::Noise);
        let rx = self.through_fiber(&tx, &mut rng, Some(kind))?;
        let g = self.modem.slot();
        let eg: f64 = g.iter().map(|v| v * v).sum();
        let off = c.burst_offset();
        Ok((0..c.n_b)
            .map(|k| {
                let w = &rx.samples[off + k * c.nu..off + (k + 1) * c.nu];
                w.iter().zip(g).map(|(z, &gv)| z * gv).sum::<C>() / (a * eg)
            })
            .collect())
    }

    /// Semianalytic triple with the configured convergence rule.
    pub fn semianalytic(&self) -> nfdm_core::Result<nfdm_core::analysis::SemiAnalytic> {
        let mc = &self.cfg.monte_carlo;
        let conv = Convergence { rel_tol: mc.convergence_tol, window: mc.convergence_window, max_sequences: mc.max_sequences };
        let seed = self.cfg.seed ^ (self.power_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        pe_semianalytic(&self.modem, self.sigma / std::f64::consts::SQRT_2, random_sequences(&self.modem, seed), &conv)
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    bursts: usize,
    symbol_errors: usize,
    bit_errors: usize,
    rx_symbols: Vec<C>,
    tx_symbols: Vec<C>,
}

enum Outcome {
    Decisions(usize, usize),
    Symbols { rx: Vec<C>, tx: Vec<C>, errors: (usize, usize) },
}

fn run_burst(point: &OperatingPoint, kinds: &[DetectorKind], index: usize) -> nfdm_core::Result<Vec<Outcome>> {
    let burst = point.burst(index);
    let c = &point.modem.config;
    let needs_nfdm = kinds.iter().any(|k| !k.is_conventional());
    let rx = if needs_nfdm { Some(point.received(&burst, index)?) } else { None };
    kinds
        .iter()
        .map(|&k| {
            if k.is_conventional() {
                let y = point.conventional(k, &burst, index)?;
                let decided: Vec<usize> = y.iter().map(|z| c.constellation.nearest(*z)).collect();
                let trace = DecisionTrace { decided, distances: Vec::new(), phase_offset: None };
                let errors = count_errors(&trace, &burst, &c.constellation)?;
                Ok(Outcome::Symbols { rx: y, tx: burst.points(&c.constellation), errors })
            } else {
                let trace = point.detect(k, rx.as_ref().expect("NFDM frame simulated"), &burst)?;
                let (s, b) = count_errors(&trace, &burst, &c.constellation)?;
                Ok(Outcome::Decisions(s, b))
            }
        })
        .collect()
}

fn done(cfg: &ExperimentConfig, t: &Tally) -> bool {
    let mc = &cfg.monte_carlo;
    t.bursts >= mc.max_bursts || (t.bursts >= mc.min_bursts && t.symbol_errors >= mc.target_symbol_errors)
}

/// Simulates every `(power, detector)` pair and returns one row per pair,
/// ordered by power then by detector as configured.
pub fn run_sweep(cfg: &ExperimentConfig, record_time: bool) -> nfdm_core::Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let m = cfg.modem.m;
    for p in 0..cfg.powers_dbm.len() {
        let start = Instant::now();
        let point = OperatingPoint::new(cfg, p)?;
        info!("P_s = {} dBm: amplitude {:.4e}, σ = {:.4e}", point.ps_dbm, point.modem.amplitude, point.sigma);
        let mut tallies: BTreeMap<DetectorKind, Tally> = cfg.detector.kinds.iter().map(|&k| (k, Tally::default())).collect();
        let mut next = 0;
        loop {
            let active: Vec<DetectorKind> = cfg.detector.kinds.iter().copied().filter(|k| !done(cfg, &tallies[k])).collect();
            if active.is_empty() {
                break;
            }
            let batch: Vec<Vec<Outcome>> =
                (next..next + BATCH).into_par_iter().map(|i| run_burst(&point, &active, i)).collect::<Result<_, _>>()?;
            for outcomes in batch {
                for (k, o) in active.iter().zip(outcomes) {
                    let t = tallies.get_mut(k).expect("tally per detector");
                    if done(cfg, t) {
                        continue;
                    }
                    t.bursts += 1;
                    match o {
                        Outcome::Decisions(s, b) => {
                            t.symbol_errors += s;
                            t.bit_errors += b;
                        }
                        Outcome::Symbols { rx, tx, errors } => {
                            t.symbol_errors += errors.0;
                            t.bit_errors += errors.1;
                            t.rx_symbols.extend(rx);
                            t.tx_symbols.extend(tx);
                        }
                    }
                }
            }
            next += BATCH;
            debug!("P_s = {} dBm: {next} bursts simulated", point.ps_dbm);
        }
        let bounds: Option<BoundTriple> = if cfg.monte_carlo.bounds
            && cfg.detector.kinds.iter().any(|k| matches!(k, DetectorKind::DfBnft | DetectorKind::GenieDf))
        {
            Some(point.semianalytic()?.estimate)
        } else {
            None
        };
        let elapsed = start.elapsed().as_secs_f64();
        for &k in &cfg.detector.kinds {
            let t = &tallies[&k];
            let bits = point.modem.config.constellation.bits_per_symbol();
            let report = ErrorReport::from_counts(t.bursts, cfg.modem.n_b, bits, (t.symbol_errors, t.bit_errors), point.sigma);
            let mut row = ResultRow {
                detector: k.name().into(),
                channel_kind: cfg.channel.kind.name().into(),
                n_b: cfg.modem.n_b,
                n_z: cfg.modem.n_z,
                eta: rate_efficiency(cfg.modem.n_b, cfg.modem.n_z),
                ps_dbm: point.ps_dbm,
                n_bursts: t.bursts,
                n_symbol_errors: t.symbol_errors,
                n_bit_errors: t.bit_errors,
                pe: report.pe_mc,
                pb: report.pb_mc,
                q_db: q_factor_from_pb(report.pb_mc).ok(),
                pe_upper: None,
                pe_approx: None,
                pe_lower: None,
                q_upper_db: None,
                q_approx_db: None,
                q_lower_db: None,
                q_evm_db: None,
                seed: cfg.seed,
                wall_time_s: record_time.then_some(elapsed),
            };
            if let (Some(b), DetectorKind::DfBnft | DetectorKind::GenieDf) = (bounds, k) {
                let r = report.with_bounds(b);
                row.set_bounds(r.pe_upper.unwrap_or(1.0), r.pe_approx.unwrap_or(1.0), r.pe_lower.unwrap_or(1.0), m, cfg.monte_carlo.pb_rule);
            }
            if k.is_conventional() && !t.tx_symbols.is_empty() {
                row.q_evm_db = Some(evm_q_estimate(&t.rx_symbols, &t.tx_symbols, m)?.q_db);
            }
            rows.push(row);
        }
    }
    Ok(rows)
}
