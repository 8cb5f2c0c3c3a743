//! Uniformly sampled complex envelopes and the continuous-time Fourier
//! transform approximated on the sample grid.
//!
//! The transform convention is `S(f) = ∫ s(t) e^{-j2πft} dt`, evaluated as the
//! discrete sum times `dt`. With that scaling Parseval holds literally:
//! `Σ|s|²·dt = Σ|S|²·df`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Unit system a signal is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitMode {
    /// Seconds and sqrt(W).
    Physical,
    /// Dimensionless NLSE units.
    Normalized,
}

/// A complex baseband signal on a uniform time grid `t_n = t0 + n·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEnvelope {
    pub samples: Vec<Complex64>,
    pub t0: f64,
    pub dt: f64,
    pub unit_mode: UnitMode,
}

/// Spectrum on a uniform frequency grid `f_k = f0 + k·df`, in ascending order.
///
/// `t0` is the start time of the partner time grid, needed to undo the
/// time-origin phase on the way back.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyEnvelope {
    pub values: Vec<Complex64>,
    pub f0: f64,
    pub df: f64,
    pub t0: f64,
    pub unit_mode: UnitMode,
}

impl ComplexEnvelope {
    pub fn new(samples: Vec<Complex64>, t0: f64, dt: f64, unit_mode: UnitMode) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidGrid(format!("t0 = {t0}, dt = {dt}")));
        }
        Ok(Self { samples, t0, dt, unit_mode })
    }

    pub fn zeros(len: usize, t0: f64, dt: f64, unit_mode: UnitMode) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], t0, dt, unit_mode)
    }

    /// Samples a function on the grid.
    pub fn from_fn<F: Fn(f64) -> Complex64>(
        len: usize,
        t0: f64,
        dt: f64,
        unit_mode: UnitMode,
        f: F,
    ) -> Result<Self> {
        let samples = (0..len).map(|n| f(t0 + n as f64 * dt)).collect();
        Self::new(samples, t0, dt, unit_mode)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |n| self.time(n))
    }

    /// Index of the first sample at or after `t`, clamped to the grid.
    pub fn index_at_or_after(&self, t: f64) -> usize {
        let x = ((t - self.t0) / self.dt - 1e-9).ceil();
        x.clamp(0.0, self.len() as f64) as usize
    }

    pub fn energy(&self) -> f64 {
        signal_energy(self)
    }

    /// Energy of the samples with `t_a <= t < t_b`.
    pub fn energy_between(&self, t_a: f64, t_b: f64) -> f64 {
        let a = self.index_at_or_after(t_a);
        let b = self.index_at_or_after(t_b);
        self.samples[a..b.max(a)].iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, gain: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|z| *z *= gain);
        out
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len()
            && (self.t0 - other.t0).abs() <= 1e-9 * self.dt
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && self.unit_mode == other.unit_mode
    }

    /// Appends zeros until the length is the next power of two.
    pub fn zero_pad_pow2(&self) -> Self {
        let n = self.len().next_power_of_two();
        let mut out = self.clone();
        out.samples.resize(n, Complex64::new(0.0, 0.0));
        out
    }

    pub fn ensure_mode(&self, expected: UnitMode) -> Result<()> {
        if self.unit_mode != expected {
            return Err(Error::UnitMismatch { expected, found: self.unit_mode });
        }
        Ok(())
    }
}

impl FrequencyEnvelope {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn freq(&self, k: usize) -> f64 {
        self.f0 + k as f64 * self.df
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.df
    }
}

/// A uniform 1-D grid `x_i = start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() {
            return Err(Error::InvalidGrid(format!("start = {start}, step = {step}")));
        }
        Ok(Self { start, step, len })
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn of(sig: &ComplexEnvelope) -> Self {
        Self { start: sig.t0, step: sig.dt, len: sig.len() }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized in-place DFT (`inverse` uses `e^{+j...}`).
pub(crate) fn dft_in_place(buf: &mut [Complex64], inverse: bool) {
    if buf.is_empty() {
        return;
    }
    plan(buf.len(), inverse).process(buf);
}

/// Frequency index offset: bin `k` of the ascending grid is DFT bin `k - half`.
fn half(n: usize) -> usize {
    n / 2
}

pub fn forward_ft(sig: &ComplexEnvelope) -> Result<FrequencyEnvelope> {
    let n = sig.len();
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    let mut buf = sig.samples.clone();
    dft_in_place(&mut buf, false);
    let df = 1.0 / (n as f64 * sig.dt);
    let h = half(n);
    let f0 = -(h as f64) * df;
    let values = (0..n)
        .map(|k| {
            let bin = (k + n - h) % n;
            let f = f0 + k as f64 * df;
            buf[bin] * Complex64::from_polar(sig.dt, -2.0 * PI * f * sig.t0)
        })
        .collect();
    Ok(FrequencyEnvelope { values, f0, df, t0: sig.t0, unit_mode: sig.unit_mode })
}

pub fn inverse_ft(spec: &FrequencyEnvelope) -> Result<ComplexEnvelope> {
    let n = spec.len();
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    if !(spec.df > 0.0) {
        return Err(Error::InvalidGrid(format!("df = {}", spec.df)));
    }
    let h = half(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, v) in spec.values.iter().enumerate() {
        let bin = (k + n - h) % n;
        let f = spec.f0 + k as f64 * spec.df;
        buf[bin] = v * Complex64::from_polar(spec.df, 2.0 * PI * f * spec.t0);
    }
    dft_in_place(&mut buf, true);
    let dt = 1.0 / (n as f64 * spec.df);
    ComplexEnvelope::new(buf, spec.t0, dt, spec.unit_mode)
}

pub fn signal_energy(sig: &ComplexEnvelope) -> f64 {
    sig.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * sig.dt
}

/// Band-limited (periodic sinc) interpolation onto a grid `factor` times finer.
///
/// Sample `n·factor` of the output equals sample `n` of the input.
pub fn upsample(sig: &ComplexEnvelope, factor: usize) -> ComplexEnvelope {
    let n = sig.len();
    if factor <= 1 || n == 0 {
        return sig.clone();
    }
    let mut spec = sig.samples.clone();
    dft_in_place(&mut spec, false);
    let m = n * factor;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let pos = n.div_ceil(2);
    out[..pos].copy_from_slice(&spec[..pos]);
    out[m - (n - pos)..].copy_from_slice(&spec[pos..]);
    if n % 2 == 0 {
        // split the Nyquist bin between ±f_N so real signals stay real
        let nyq = spec[n / 2] * 0.5;
        out[m - n / 2] = nyq;
        out[n / 2] = nyq;
    }
    dft_in_place(&mut out, true);
    let scale = 1.0 / n as f64;
    out.iter_mut().for_each(|z| *z *= scale);
    ComplexEnvelope { samples: out, t0: sig.t0, dt: sig.dt / factor as f64, unit_mode: sig.unit_mode }
}

/// Ideal rectangular low-pass keeping `|f| ≤ cutoff` (same units as `1/dt`).
pub fn lowpass(sig: &ComplexEnvelope, cutoff: f64) -> ComplexEnvelope {
    let n = sig.len();
    let mut buf = sig.samples.clone();
    dft_in_place(&mut buf, false);
    let df = 1.0 / (n as f64 * sig.dt);
    for (k, z) in buf.iter_mut().enumerate() {
        let bin = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        if (bin * df).abs() > cutoff * (1.0 + 1e-12) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    dft_in_place(&mut buf, true);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    ComplexEnvelope { samples: buf, ..sig.clone() }
}

/// `out(t) = in(-t)`.
pub fn time_reverse(sig: &ComplexEnvelope) -> ComplexEnvelope {
    let t_last = sig.time(sig.len().saturating_sub(1));
    ComplexEnvelope {
        samples: sig.samples.iter().rev().copied().collect(),
        t0: -t_last,
        dt: sig.dt,
        unit_mode: sig.unit_mode,
    }
}

/// Relative L2 distance `‖a − b‖ / ‖b‖` over equal-length slices.
pub fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

/// Squared Euclidean norm of a slice.
pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}
