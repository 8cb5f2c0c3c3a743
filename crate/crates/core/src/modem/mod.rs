//! NIS transmitter and the candidate-waveform generator shared with the
//! receiver.
//!
//! The transmitter works in normalized units throughout: the QAM signal `s(t)`
//! is built with `T0 = T_s/2`, so one symbol lasts 2 normalized time units.
//! Its Fourier transform is reindexed into `ρ(λ) = −S(−λ/π)`, precompensated,
//! inverted by the GLME and time-reversed.
//!
//! Without precompensation the GLME kernel of this chain is `F(−2t) = −s(t)/2`
//! exactly on the sampling grid, so the receiver-side waveform `r(t)` can be
//! streamed symbol by symbol with a [`GlmeRecursion`] and no transforms.

mod burst;
mod constellation;

pub use burst::{build_qam_signal, Burst, PulseKind, PulseShape};
pub use constellation::Constellation;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::channel::{FiberLink, Normalization};
use crate::error::{Error, Result};
use crate::nft::{
    backward_nft_with, spectral_rotation, GlmeOptions, GlmeRecursion, NonlinearSpectrum,
    RotationDirection, Sigma,
};
use crate::rng::{stream, Purpose};
use crate::signal::{forward_ft, time_reverse, ComplexEnvelope, FrequencyEnvelope, UniformGrid, UnitMode};

type C = Complex64;

/// `ρ(λ) = −S(−λ/π)`: negation plus reindexing onto an ascending λ grid.
pub fn nis_map(spec: &FrequencyEnvelope, sigma: Sigma) -> Result<NonlinearSpectrum> {
    let n = spec.len();
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    let rho = spec.values.iter().rev().map(|v| -v).collect();
    NonlinearSpectrum::new(rho, -PI * spec.freq(n - 1), PI * spec.df, sigma)
}

/// Inverse of [`nis_map`]; `t0` is the start of the originating time grid.
pub fn nis_unmap(spec: &NonlinearSpectrum, t0: f64, unit_mode: UnitMode) -> FrequencyEnvelope {
    let n = spec.len();
    FrequencyEnvelope {
        values: spec.rho.iter().rev().map(|v| -v).collect(),
        f0: -spec.lambda(n - 1) / PI,
        df: spec.dlambda / PI,
        t0,
        unit_mode,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModemConfig {
    pub constellation: Constellation,
    /// Pulse in physical time units.
    pub pulse: PulseShape,
    pub n_b: usize,
    pub n_z: usize,
    /// Samples per symbol `ν`.
    pub nu: usize,
    /// Guard symbols placed before the burst in the transmitted frame, taken
    /// out of `n_z`. Precompensation spreads the signal in both directions.
    pub lead_guard: usize,
    pub sigma: Sigma,
    pub norm: Normalization,
    /// Normalized precompensation length `L/Z0`.
    pub precomp_length: f64,
    /// Backward-NFT settings of the transmitter.
    pub glme: GlmeOptions,
}

impl ModemConfig {
    /// Precompensates for the whole `link`, splits the guard evenly.
    pub fn new(
        constellation: Constellation,
        pulse: PulseShape,
        n_b: usize,
        n_z: usize,
        nu: usize,
        link: &FiberLink,
    ) -> Result<Self> {
        link.validate()?;
        let norm = Normalization::for_symbol_time(link, pulse.t_s)?;
        let cfg = Self {
            constellation,
            pulse,
            n_b,
            n_z,
            nu,
            lead_guard: n_z / 2,
            sigma: if link.beta2 < 0.0 { Sigma::Focusing } else { Sigma::Defocusing },
            norm,
            precomp_length: norm.length(link.length),
            glme: GlmeOptions { refinement: 2, ..GlmeOptions::default() },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        if self.nu < 2 {
            return Err(Error::InvalidParameter(format!("ν = {} < 2", self.nu)));
        }
        if self.n_b == 0 {
            return Err(Error::InvalidParameter("N_b must be at least 1".into()));
        }
        if self.lead_guard > self.n_z {
            return Err(Error::InvalidParameter("lead guard exceeds N_z".into()));
        }
        if !(self.precomp_length >= 0.0) {
            return Err(Error::InvalidParameter("precompensation length must be ≥ 0".into()));
        }
        Ok(())
    }

    /// Symbol time in normalized units.
    pub fn t_s(&self) -> f64 {
        self.pulse.t_s / self.norm.t0
    }

    /// Sample spacing in normalized units.
    pub fn dt(&self) -> f64 {
        self.t_s() / self.nu as f64
    }

    pub fn pulse_normalized(&self) -> PulseShape {
        self.pulse.rescaled(self.norm.t0)
    }

    /// Window edge `t_k = (k − ½)T_s`, normalized.
    pub fn t_k(&self, k: usize) -> f64 {
        (k as f64 - 0.5) * self.t_s()
    }

    /// Samples in the transmitted frame: `(N_b + N_z)ν` rounded up to a power of two.
    pub fn frame_len(&self) -> usize {
        ((self.n_b + self.n_z) * self.nu).next_power_of_two()
    }

    pub fn frame_grid(&self) -> UniformGrid {
        let start = -0.5 * self.t_s() - self.lead_guard as f64 * self.t_s();
        UniformGrid { start, step: self.dt(), len: self.frame_len() }
    }

    /// Index of the sample at `t = −T_s/2` in the frame.
    pub fn burst_offset(&self) -> usize {
        self.lead_guard * self.nu
    }

    /// Normalized signal energy that corresponds to mean power `ps` (W) per symbol.
    pub fn target_energy(&self, ps: f64) -> f64 {
        ps * self.n_b as f64 * self.pulse.t_s / (self.norm.p0 * self.norm.t0)
    }
}

/// Transmitter output in normalized units on the frame grid.
#[derive(Debug, Clone)]
pub struct Transmission {
    /// Launched field `q(t)`.
    pub q: ComplexEnvelope,
    /// Unscaled QAM signal times the modem amplitude, `s(t)`.
    pub s: ComplexEnvelope,
    /// Nonlinear spectrum before precompensation.
    pub rho: NonlinearSpectrum,
    pub residual: f64,
}

/// Transmitter and receiver-side waveform generator for one power level.
#[derive(Debug, Clone)]
pub struct Modem {
    pub config: ModemConfig,
    /// Scale of the normalized QAM signal: `s(t) = a·Σx_k g(t − (k−1)T_s)`.
    pub amplitude: f64,
    slot: Arc<Vec<f64>>,
}

const CALIBRATION_SEED: u64 = 0x6e69_735f_6361_6c69;
const CALIBRATION_BURSTS: u64 = 8;

impl Modem {
    pub fn new(config: ModemConfig, amplitude: f64) -> Result<Self> {
        config.validate()?;
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!("amplitude {amplitude}")));
        }
        let slot = Arc::new(config.pulse_normalized().slot_samples(config.nu));
        Ok(Self { config, amplitude, slot })
    }

    /// Chooses the amplitude so that the mean launched power per information
    /// symbol is `ps` watts, averaged over a fixed set of random bursts.
    ///
    /// The energy of each burst follows from its nonlinear spectrum,
    /// `(1/π)∫σ ln(1 + σ|ρ|²)dλ`, which is invariant under precompensation.
    pub fn with_power(config: ModemConfig, ps: f64) -> Result<Self> {
        if !(ps >= 0.0 && ps.is_finite()) {
            return Err(Error::InvalidParameter(format!("power {ps} W")));
        }
        let unit = Self::new(config, 1.0)?;
        let target = unit.config.target_energy(ps);
        if target == 0.0 {
            return Self::new(unit.config, 0.0);
        }
        let s = unit.config.sigma.value();
        let mut spectra = Vec::new();
        for b in 0..CALIBRATION_BURSTS {
            let mut rng = stream(CALIBRATION_SEED, b, Purpose::Calibration);
            let burst = Burst::random(&unit.config.constellation, unit.config.n_b, unit.config.n_z, &mut rng);
            let rho = unit.spectrum(&burst)?;
            spectra.push((rho.rho.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>(), rho.dlambda));
        }
        let peak = spectra.iter().flat_map(|(r, _)| r.iter()).fold(0.0f64, |m, &v| m.max(v));
        let energy = |a: f64| -> f64 {
            spectra
                .iter()
                .map(|(r2, dl)| r2.iter().map(|&v| s * (s * a * a * v).ln_1p()).sum::<f64>() * dl / PI)
                .sum::<f64>()
                / spectra.len() as f64
        };
        let a_max = if s < 0.0 { 1.0 / peak.sqrt() } else { f64::INFINITY };
        let mut lo = 0.0;
        let mut hi = (target / energy(1.0)).sqrt().min(0.5 * a_max);
        while energy(hi) < target {
            lo = hi;
            hi = if a_max.is_finite() { 0.5 * (hi + a_max) } else { 2.0 * hi };
            if a_max.is_finite() && a_max - hi < 1e-12 * a_max {
                return Err(Error::InvalidParameter(format!(
                    "power {ps} W not reachable in the defocusing regime"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if energy(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Self::new(unit.config, 0.5 * (lo + hi))
    }

    /// Normalized QAM signal of `burst` on the frame grid.
    pub fn frame_signal(&self, burst: &Burst) -> Result<ComplexEnvelope> {
        let cfg = &self.config;
        let burst = Burst::new(burst.symbols.clone(), burst.n_z, &cfg.constellation)?;
        if burst.n_b() + burst.n_z > cfg.n_b + cfg.n_z {
            return Err(Error::InvalidParameter(format!(
                "burst of {} symbols does not fit a frame of {}",
                burst.n_b() + burst.n_z,
                cfg.n_b + cfg.n_z
            )));
        }
        let grid = cfg.frame_grid();
        let amps: Vec<C> = burst.points(&cfg.constellation).iter().map(|x| x * self.amplitude).collect();
        let mut samples = vec![C::new(0.0, 0.0); grid.len];
        let off = cfg.burst_offset();
        for (j, v) in burst::slot_train(&amps, &self.slot).into_iter().enumerate() {
            samples[off + j] = v;
        }
        ComplexEnvelope::new(samples, grid.start, grid.step, UnitMode::Normalized)
    }

    /// Nonlinear spectrum `−S(−λ/π)` of the burst, before precompensation.
    pub fn spectrum(&self, burst: &Burst) -> Result<NonlinearSpectrum> {
        let s = self.frame_signal(burst)?;
        nis_map(&forward_ft(&s)?, self.config.sigma)
    }

    /// `q = time_reverse(BNFT(e^{j4λ²L}·nis_map(FT(s))))` on the frame grid.
    pub fn transmit(&self, burst: &Burst) -> Result<Transmission> {
        self.transmit_with(burst, &self.config.glme)
    }

    pub fn transmit_with(&self, burst: &Burst, opts: &GlmeOptions) -> Result<Transmission> {
        let s = self.frame_signal(burst)?;
        let rho = nis_map(&forward_ft(&s)?, self.config.sigma)?;
        let pre = spectral_rotation(&rho, self.config.precomp_length, RotationDirection::Pre);
        let grid = UniformGrid::of(&s);
        let x_grid = UniformGrid::new(-grid.end(), grid.step, grid.len)?;
        let (q_rev, solve) = backward_nft_with(&pre, x_grid, opts)?;
        let mut q = time_reverse(&q_rev);
        q.t0 = grid.start;
        Ok(Transmission { q, s, rho, residual: solve.residual })
    }

    /// Starts the receiver-side waveform stream at `t = −T_s/2`.
    pub fn stream(&self) -> SymbolStream {
        SymbolStream {
            rec: GlmeRecursion::new(self.config.sigma, self.config.dt()),
            slot: Arc::clone(&self.slot),
            amplitude: self.amplitude,
            symbols: 0,
        }
    }

    /// Noiseless, unprecompensated chain output `r(t)` on `[−T_s/2, (N_b+extra−½)T_s)`.
    ///
    /// This is what the receiver sees after an ideal channel of the
    /// precompensated length.
    pub fn noiseless_received(&self, burst: &Burst, extra_symbols: usize) -> Result<ComplexEnvelope> {
        let cfg = &self.config;
        let burst = Burst::new(burst.symbols.clone(), burst.n_z, &cfg.constellation)?;
        let mut st = self.stream();
        let mut samples = Vec::with_capacity((burst.n_b() + extra_symbols) * cfg.nu);
        for &i in &burst.symbols {
            samples.extend(st.push_symbol(cfg.constellation.point(i))?);
        }
        for _ in 0..extra_symbols {
            samples.extend(st.push_symbol(C::new(0.0, 0.0))?);
        }
        ComplexEnvelope::new(samples, -0.5 * cfg.t_s(), cfg.dt(), UnitMode::Normalized)
    }

    /// The `ν` samples of window `k = prefix.len() + 1` of the waveform built
    /// from `(prefix, candidate, 0, …)` without precompensation.
    pub fn candidate_waveform(&self, prefix: &[usize], candidate: usize) -> Result<Vec<C>> {
        let c = &self.config.constellation;
        if candidate >= c.order() || prefix.iter().any(|&i| i >= c.order()) {
            return Err(Error::NotInConstellation(format!("index {candidate}")));
        }
        let mut st = self.stream();
        for &i in prefix {
            st.push_symbol(c.point(i))?;
        }
        st.push_symbol(c.point(candidate))
    }

    /// Samples of one pulse slot `g(t_j)`, `j = 0 … ν−1`, from `t = −T_s/2`.
    pub fn slot(&self) -> &[f64] {
        &self.slot
    }

    /// Launched energy in joules of a normalized field.
    pub fn physical_energy(&self, q: &ComplexEnvelope) -> f64 {
        self.config.norm.energy(q.energy())
    }
}

/// Incremental generator of `r(t)` one symbol window at a time.
///
/// Cloning snapshots the state, so candidate windows for every constellation
/// point can branch off a shared decided prefix.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    rec: GlmeRecursion,
    slot: Arc<Vec<f64>>,
    amplitude: f64,
    symbols: usize,
}

impl SymbolStream {
    /// Appends one symbol slot and returns the `ν` output samples of its window.
    pub fn push_symbol(&mut self, x: C) -> Result<Vec<C>> {
        let a = self.amplitude * x;
        let mut out = Vec::with_capacity(self.slot.len());
        for &g in self.slot.iter() {
            let k = self.rec.push(-0.5 * a * g)?;
            out.push(-2.0 * k);
        }
        self.symbols += 1;
        Ok(out)
    }

    /// Symbols consumed so far.
    pub fn len(&self) -> usize {
        self.symbols
    }

    pub fn is_empty(&self) -> bool {
        self.symbols == 0
    }
}
