//! Nonlinear Fourier transform: continuous-spectrum forward transform by
//! layer peeling, backward transform through the Gelfand–Levitan–Marchenko
//! equation, and the linear evolution of the spectrum along the fiber.
//!
//! Conventions: the Zakharov–Shabat problem is
//! `v_t = [[-jλ, q], [-σq*, jλ]] v` with `v → (e^{-jλt}, 0)` as `t → -∞`,
//! and `ρ(λ) = b(λ)/a(λ)`. In normalized units the channel is
//! `j q_z = q_tt + 2σ|q|²q`, under which `ρ(λ, z) = ρ(λ, 0)·e^{-4jλ²z}`.

mod born;
mod glme;
mod kernel;
mod layer_peeling;

pub use born::born_signal;
pub use glme::{
    backward_nft, backward_nft_with, dense_glme_diag, solve_glme, GlmeMethod, GlmeOptions,
    GlmeRecursion, GlmeSolve,
};
pub use kernel::{kernel_from_spectrum, GlmeKernel};
pub use layer_peeling::{
    forward_nft, forward_nft_unchecked, forward_nft_with, scattering_coefficients, ForwardOptions,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::UniformGrid;

/// Sign of the Kerr nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sigma {
    /// Anomalous dispersion, `σ = +1`.
    #[default]
    Focusing,
    /// Normal dispersion, `σ = −1`.
    Defocusing,
}

impl Sigma {
    pub fn value(self) -> f64 {
        match self {
            Sigma::Focusing => 1.0,
            Sigma::Defocusing => -1.0,
        }
    }
}

/// Continuous nonlinear spectrum `ρ(λ)` on `λ_l = lambda0 + l·dlambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSpectrum {
    pub rho: Vec<Complex64>,
    pub lambda0: f64,
    pub dlambda: f64,
    pub sigma: Sigma,
}

impl NonlinearSpectrum {
    pub fn new(rho: Vec<Complex64>, lambda0: f64, dlambda: f64, sigma: Sigma) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::EmptySignal);
        }
        if !(dlambda > 0.0 && dlambda.is_finite()) {
            return Err(Error::InvalidGrid(format!("dlambda = {dlambda}")));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite ρ(λ)".into()));
        }
        Ok(Self { rho, lambda0, dlambda, sigma })
    }

    pub fn zeros(grid: UniformGrid, sigma: Sigma) -> Self {
        Self {
            rho: vec![Complex64::new(0.0, 0.0); grid.len],
            lambda0: grid.start,
            dlambda: grid.step,
            sigma,
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn lambda(&self, l: usize) -> f64 {
        self.lambda0 + l as f64 * self.dlambda
    }

    pub fn grid(&self) -> UniformGrid {
        UniformGrid { start: self.lambda0, step: self.dlambda, len: self.rho.len() }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        let mut out = self.clone();
        out.rho.iter_mut().for_each(|z| *z *= gain);
        out
    }

    /// Signal energy implied by the spectrum (no discrete part):
    /// `(1/π)∫ σ·ln(1 + σ|ρ|²) dλ`.
    pub fn energy(&self) -> f64 {
        let s = self.sigma.value();
        self.rho.iter().map(|z| s * (s * z.norm_sqr()).ln_1p()).sum::<f64>() * self.dlambda
            / std::f64::consts::PI
    }
}

/// Which way the dispersive phase is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationDirection {
    /// Transmitter precompensation, `e^{+j4λ²L}`.
    Pre,
    /// Fiber propagation, `e^{-j4λ²L}`.
    Channel,
}

pub fn spectral_rotation(
    spec: &NonlinearSpectrum,
    l_norm: f64,
    direction: RotationDirection,
) -> NonlinearSpectrum {
    let sign = match direction {
        RotationDirection::Pre => 1.0,
        RotationDirection::Channel => -1.0,
    };
    let mut out = spec.clone();
    for (l, z) in out.rho.iter_mut().enumerate() {
        let lam = spec.lambda(l);
        *z *= Complex64::from_polar(1.0, sign * 4.0 * lam * lam * l_norm);
    }
    out
}
