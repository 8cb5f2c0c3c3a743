//! Receivers: ADC front end, decision-feedback BNFT detection and its genie
//! variant, conventional FNFT detection, data-aided phase correction and the
//! exhaustive sequence detector.

mod df;
mod fnft;

pub use df::{df_bnft_detect, genie_df_detect, optimum_sequence_detect, MAX_SEQUENCES};
pub use fnft::{fnft_detect, FnftOptions};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{lowpass, ComplexEnvelope};

type C = Complex64;

/// Received samples split into the `N_b` detection windows `[t_{k−1}, t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedWindows {
    pub windows: Vec<Vec<C>>,
    /// Samples after `(N_b − ½)T_s`, not used for detection.
    pub discarded_tail: Vec<C>,
}

impl ReceivedWindows {
    pub fn n_b(&self) -> usize {
        self.windows.len()
    }

    pub fn nu(&self) -> usize {
        self.windows.first().map_or(0, Vec::len)
    }

    pub fn rotated(&self, alpha: f64) -> Self {
        let r = C::from_polar(1.0, -alpha);
        Self {
            windows: self.windows.iter().map(|w| w.iter().map(|z| z * r).collect()).collect(),
            discarded_tail: self.discarded_tail.iter().map(|z| z * r).collect(),
        }
    }

    pub fn flat(&self) -> impl Iterator<Item = &C> {
        self.windows.iter().flatten()
    }
}

/// Outcome of a symbol-by-symbol detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTrace {
    /// Constellation indices `x̂₁ … x̂_{N_b}`.
    pub decided: Vec<usize>,
    /// `distances[k][i]`: squared distance between window `k` and candidate `i`.
    pub distances: Vec<Vec<f64>>,
    pub phase_offset: Option<f64>,
}

/// Index of the smallest entry; ties resolve to the lowest index.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn sq_dist(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Ideal low-pass at `ν/(2T_s)`, sampling at `ν/T_s` and windowing.
///
/// `t_s` is in the time units of `sig`; the first window starts at `t = −T_s/2`.
/// The input grid must be `ν/T_s` or an integer multiple of it.
pub fn adc_front_end(sig: &ComplexEnvelope, nu: usize, t_s: f64, n_b: usize) -> Result<ReceivedWindows> {
    if nu == 0 || n_b == 0 || !(t_s > 0.0) {
        return Err(Error::InvalidParameter("ADC needs ν ≥ 1, N_b ≥ 1, T_s > 0".into()));
    }
    let ratio = t_s / (nu as f64 * sig.dt);
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-6 * ratio {
        return Err(Error::InvalidGrid(format!(
            "signal sampling is {ratio:.4}× the ADC rate; need a positive integer"
        )));
    }
    let factor = factor as usize;
    let filtered = if factor > 1 { lowpass(sig, nu as f64 / (2.0 * t_s)) } else { sig.clone() };
    let start = sig.index_at_or_after(-0.5 * t_s - 1e-9 * sig.dt);
    let samples: Vec<C> = filtered.samples[start.min(filtered.len())..].iter().step_by(factor).copied().collect();
    if samples.len() < nu * n_b {
        return Err(Error::InsufficientSupport(format!(
            "signal covers {} of the {} samples in the detection span",
            samples.len(),
            nu * n_b
        )));
    }
    let windows = samples[..nu * n_b].chunks(nu).map(<[C]>::to_vec).collect();
    Ok(ReceivedWindows { windows, discarded_tail: samples[nu * n_b..].to_vec() })
}

/// Phase scan resolution (rad).
pub const PHASE_STEP: f64 = 1e-3;

/// Estimates a common phase rotation against a reference and removes it.
///
/// `α̂` maximizes `Re{e^{−jα}⟨r̃, r_ref⟩}` over a 1 mrad grid on `[−π, π]`.
pub fn phase_offset_compensate(
    rx: &ReceivedWindows,
    reference: &ReceivedWindows,
) -> Result<(ReceivedWindows, f64)> {
    if reference.n_b() != rx.n_b() || reference.nu() != rx.nu() {
        return Err(Error::ReferenceUnavailable("reference shape differs from the received windows".into()));
    }
    let corr: C = rx.flat().zip(reference.flat()).map(|(a, b)| a * b.conj()).sum();
    if corr.norm() == 0.0 {
        return Err(Error::ReferenceUnavailable("reference is orthogonal to the received signal".into()));
    }
    let steps = (PI / PHASE_STEP).floor() as i64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for s in -steps..=steps {
        let alpha = s as f64 * PHASE_STEP;
        let score = (C::from_polar(1.0, -alpha) * corr).re;
        if score > best.0 {
            best = (score, alpha);
        }
    }
    Ok((rx.rotated(best.1), best.1))
}
