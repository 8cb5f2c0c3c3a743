use num_complex::Complex64;
use rand::Rng;
use statrs::function::erf::erfc;

use super::Constellation;
use crate::error::{Error, Result};
use crate::signal::{ComplexEnvelope, UnitMode};

/// A block of `N_b` information symbols followed by `N_z` zero guard symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Burst {
    /// Constellation indices of `x₁ … x_{N_b}`.
    pub symbols: Vec<usize>,
    pub n_z: usize,
}

impl Burst {
    pub fn new(symbols: Vec<usize>, n_z: usize, constellation: &Constellation) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidParameter("a burst needs at least one symbol".into()));
        }
        if let Some(&bad) = symbols.iter().find(|&&i| i >= constellation.order()) {
            return Err(Error::NotInConstellation(format!("index {bad}")));
        }
        Ok(Self { symbols, n_z })
    }

    pub fn from_points(
        points: &[Complex64],
        n_z: usize,
        constellation: &Constellation,
    ) -> Result<Self> {
        let symbols = points.iter().map(|&p| constellation.index_of(p)).collect::<Result<_>>()?;
        Self::new(symbols, n_z, constellation)
    }

    pub fn random<R: Rng + ?Sized>(
        constellation: &Constellation,
        n_b: usize,
        n_z: usize,
        rng: &mut R,
    ) -> Self {
        let symbols = (0..n_b.max(1)).map(|_| constellation.random_index(rng)).collect();
        Self { symbols, n_z }
    }

    pub fn n_b(&self) -> usize {
        self.symbols.len()
    }

    pub fn points(&self, constellation: &Constellation) -> Vec<Complex64> {
        self.symbols.iter().map(|&i| constellation.point(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PulseKind {
    #[default]
    Gaussian,
}

/// `g(t) = exp(−w·(t/T_s)²)` on `[−T/2, T/2)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub kind: PulseKind,
    pub width_param: f64,
    pub t_s: f64,
    /// Support duration `T ≤ T_s`.
    pub support: f64,
}

impl PulseShape {
    pub fn gaussian(width_param: f64, t_s: f64) -> Result<Self> {
        let p = Self { kind: PulseKind::Gaussian, width_param, t_s, support: t_s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_s > 0.0 && self.width_param > 0.0) {
            return Err(Error::InvalidParameter("pulse needs T_s > 0 and width > 0".into()));
        }
        if !(self.support > 0.0 && self.support <= self.t_s * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "pulse support {} must lie in (0, T_s = {}]",
                self.support, self.t_s
            )));
        }
        if self.energy_outside_support() > 1e-3 {
            return Err(Error::InvalidParameter(format!(
                "pulse leaks {:.3}% of its energy outside its support",
                100.0 * self.energy_outside_support()
            )));
        }
        Ok(())
    }

    /// Fraction of the untruncated pulse energy outside `[−T/2, T/2]`.
    pub fn energy_outside_support(&self) -> f64 {
        erfc((2.0 * self.width_param).sqrt() * 0.5 * self.support / self.t_s)
    }

    /// Fraction of the untruncated pulse energy inside one symbol time.
    pub fn energy_in_symbol_time(&self) -> f64 {
        1.0 - erfc((2.0 * self.width_param).sqrt() * 0.5)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < -0.5 * self.support || t >= 0.5 * self.support {
            0.0
        } else {
            let x = t / self.t_s;
            (-self.width_param * x * x).exp()
        }
    }

    /// `ν` samples of one symbol slot, at `t = −T_s/2 + jT_s/ν`.
    pub fn slot_samples(&self, nu: usize) -> Vec<f64> {
        let dt = self.t_s / nu as f64;
        (0..nu).map(|j| self.eval(-0.5 * self.t_s + j as f64 * dt)).collect()
    }

    /// Same pulse on a time axis measured in units of `unit`.
    pub fn rescaled(&self, unit: f64) -> Self {
        Self { t_s: self.t_s / unit, support: self.support / unit, ..*self }
    }
}

/// Samples of `Σ a_k g(t − (k−1)T_s)` for symbol slots laid end to end.
pub(crate) fn slot_train(amplitudes: &[Complex64], slot: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(amplitudes.len() * slot.len());
    for &a in amplitudes {
        out.extend(slot.iter().map(|&g| a * g));
    }
    out
}

/// QAM burst signal `s(t) = Σ x_k g(t − (k−1)T_s)` on `[−T_s/2, (N_b+N_z−½)T_s)`,
/// `ν` samples per symbol, guard positions zero.
pub fn build_qam_signal(
    burst: &Burst,
    constellation: &Constellation,
    pulse: &PulseShape,
    nu: usize,
) -> Result<ComplexEnvelope> {
    pulse.validate()?;
    if nu < 2 {
        return Err(Error::InvalidParameter(format!("ν = {nu} < 2")));
    }
    let mut amps = Burst::new(burst.symbols.clone(), burst.n_z, constellation)?.points(constellation);
    amps.resize(burst.n_b() + burst.n_z, Complex64::new(0.0, 0.0));
    let samples = slot_train(&amps, &pulse.slot_samples(nu));
    ComplexEnvelope::new(samples, -0.5 * pulse.t_s, pulse.t_s / nu as f64, UnitMode::Physical)
}
