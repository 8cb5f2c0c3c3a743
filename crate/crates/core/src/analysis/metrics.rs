use num_complex::Complex64;
use statrs::function::erf::erfc_inv;

use super::bounds::{q_function, BoundTriple};
use crate::detection::DecisionTrace;
use crate::error::{Error, Result};
use crate::modem::{Burst, Constellation};

/// Symbol and Gray-label bit mismatches between decisions and the truth.
pub fn count_errors(decided: &DecisionTrace, truth: &Burst, constellation: &Constellation) -> Result<(usize, usize)> {
    if decided.decided.len() != truth.n_b() {
        return Err(Error::InvalidParameter(format!(
            "{} decisions for {} symbols",
            decided.decided.len(),
            truth.n_b()
        )));
    }
    let m = constellation.order();
    let mut symbols = 0;
    let mut bits = 0;
    for (&d, &t) in decided.decided.iter().zip(&truth.symbols) {
        if d >= m || t >= m {
            return Err(Error::NotInConstellation(format!("index {}", d.max(t))));
        }
        if d != t {
            symbols += 1;
            bits += (constellation.label(d) ^ constellation.label(t)).count_ones() as usize;
        }
    }
    Ok((symbols, bits))
}

/// `Q²_dB = 20·log₁₀(√2·erfc⁻¹(2P_b))`.
pub fn q_factor_from_pb(pb: f64) -> Result<f64> {
    if !(pb > 0.0 && pb < 0.5) {
        return Err(Error::QFactorUndefined(pb));
    }
    Ok(20.0 * (std::f64::consts::SQRT_2 * erfc_inv(2.0 * pb)).log10())
}

/// How a symbol error probability is turned into a bit error probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PbRule {
    /// `P_b = P_e/M`.
    #[default]
    PerSymbol,
    /// `P_b = P_e/log₂M`, one bit per symbol error under Gray labelling.
    Gray,
}

impl PbRule {
    pub fn apply(self, pe: f64, m: usize) -> f64 {
        match self {
            PbRule::PerSymbol => pe / m as f64,
            PbRule::Gray => pe / (m as f64).log2(),
        }
    }
}

pub fn pb_from_pe(pe: f64, m: usize) -> f64 {
    PbRule::PerSymbol.apply(pe, m)
}

/// `η = N_b/(N_b + N_z)`.
pub fn rate_efficiency(n_b: usize, n_z: usize) -> f64 {
    n_b as f64 / (n_b + n_z) as f64
}

/// `P_s = E_tot/(N_b·T_s)`.
pub fn mean_power_per_symbol(e_tot: f64, n_b: usize, t_s: f64) -> f64 {
    e_tot / (n_b as f64 * t_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvmEstimate {
    /// `mean|rx − tx|² / mean|tx|²`.
    pub evm2: f64,
    pub pb: f64,
    /// `+∞` when the received symbols are exact.
    pub q_db: f64,
}

/// Q-factor estimated from the error vector magnitude of square `M`-QAM,
/// `P_b ≈ 4(1 − 1/√M)/log₂M · Q(√(3/((M − 1)·EVM²)))`.
pub fn evm_q_estimate(rx: &[Complex64], tx: &[Complex64], m: usize) -> Result<EvmEstimate> {
    if rx.len() != tx.len() || rx.is_empty() {
        return Err(Error::InvalidParameter("EVM needs equally long, non-empty symbol lists".into()));
    }
    let side = (m as f64).sqrt().round() as usize;
    if m < 4 || side * side != m {
        return Err(Error::InvalidParameter(format!("{m}-QAM is not square")));
    }
    let p_ref: f64 = tx.iter().map(|z| z.norm_sqr()).sum();
    if p_ref == 0.0 {
        return Err(Error::ReferenceUnavailable("zero reference power".into()));
    }
    let evm2 = rx.iter().zip(tx).map(|(r, t)| (r - t).norm_sqr()).sum::<f64>() / p_ref;
    if evm2 == 0.0 {
        return Ok(EvmEstimate { evm2, pb: 0.0, q_db: f64::INFINITY });
    }
    let mf = m as f64;
    let pb = 4.0 * (1.0 - 1.0 / mf.sqrt()) / mf.log2() * q_function((3.0 / ((mf - 1.0) * evm2)).sqrt());
    let q_db = if pb > 0.0 { q_factor_from_pb(pb.min(0.5 - 1e-12))? } else { f64::INFINITY };
    Ok(EvmEstimate { evm2, pb, q_db })
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Counted and semianalytic error rates for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub n_bursts: usize,
    pub n_symbols: usize,
    pub n_symbol_errors: usize,
    pub n_bit_errors: usize,
    pub pe_mc: f64,
    /// Counted bit errors over transmitted bits.
    pub pb_mc: f64,
    pub pe_upper: Option<f64>,
    pub pe_approx: Option<f64>,
    pub pe_lower: Option<f64>,
    /// Q-factor of `pb_mc`; `None` when no bit error was counted or `pb_mc ≥ ½`.
    pub q_db: Option<f64>,
    /// Noise standard deviation per complex sample.
    pub sigma: f64,
}

impl ErrorReport {
    pub fn from_counts(
        n_bursts: usize,
        n_b: usize,
        bits_per_symbol: u32,
        (n_symbol_errors, n_bit_errors): (usize, usize),
        sigma: f64,
    ) -> Self {
        let n_symbols = n_bursts * n_b;
        let (pe_mc, pb_mc) = if n_symbols == 0 {
            (0.0, 0.0)
        } else {
            (
                n_symbol_errors as f64 / n_symbols as f64,
                n_bit_errors as f64 / (n_symbols as f64 * bits_per_symbol as f64),
            )
        };
        Self {
            n_bursts,
            n_symbols,
            n_symbol_errors,
            n_bit_errors,
            pe_mc,
            pb_mc,
            pe_upper: None,
            pe_approx: None,
            pe_lower: None,
            q_db: q_factor_from_pb(pb_mc).ok(),
            sigma,
        }
    }

    /// Attaches a semianalytic triple, clipping each probability to `[0, 1]`.
    pub fn with_bounds(mut self, t: BoundTriple) -> Self {
        self.pe_upper = Some(t.upper.clamp(0.0, 1.0));
        self.pe_approx = Some(t.approx.clamp(0.0, 1.0));
        self.pe_lower = Some(t.lower.clamp(0.0, 1.0));
        self
    }

    /// Symbol error rate interval at normal quantile `z`.
    pub fn pe_interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.n_symbol_errors, self.n_symbols, z)
    }
}
