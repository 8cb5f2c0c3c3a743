use std::f64::consts::PI;

use num_complex::Complex64;

use super::DecisionTrace;
use crate::error::{Error, Result};
use crate::modem::{nis_unmap, Modem};
use crate::nft::{forward_nft_with, ForwardOptions, RotationDirection, spectral_rotation};
use crate::signal::{inverse_ft, time_reverse, ComplexEnvelope, UniformGrid, UnitMode};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnftOptions {
    /// Layer-peeling oversampling of the received field.
    pub oversampling: usize,
    /// Normalized fiber length still to be undone in the spectral domain;
    /// zero when the transmitter fully precompensated the link.
    pub residual_length: f64,
}

impl Default for FnftOptions {
    fn default() -> Self {
        Self { oversampling: 4, residual_length: 0.0 }
    }
}

/// Conventional NIS receiver: forward NFT of the time-reversed field, inverse
/// NIS mapping, inverse Fourier transform and a matched filter per symbol.
///
/// `rx` is the normalized received field on a grid with the modem's sample
/// spacing that covers the burst.
pub fn fnft_detect(rx: &ComplexEnvelope, modem: &Modem, opts: &FnftOptions) -> Result<DecisionTrace> {
    rx.ensure_mode(UnitMode::Normalized)?;
    let cfg = &modem.config;
    if (rx.dt - cfg.dt()).abs() > 1e-9 * cfg.dt() {
        return Err(Error::InvalidGrid(format!("received spacing {} differs from the modem's {}", rx.dt, cfg.dt())));
    }
    let n = rx.len();
    let df = 1.0 / (n as f64 * rx.dt);
    let f_last = (n - 1 - n / 2) as f64 * df;
    let lambda_grid = UniformGrid::new(-PI * f_last, PI * df, n)?;
    let fwd = ForwardOptions { oversampling: opts.oversampling.max(1), check_boundary: false };
    let mut rho = forward_nft_with(&time_reverse(rx), lambda_grid, cfg.sigma, &fwd)?;
    if opts.residual_length != 0.0 {
        rho = spectral_rotation(&rho, opts.residual_length, RotationDirection::Pre);
    }
    let s_hat = inverse_ft(&nis_unmap(&rho, rx.t0, UnitMode::Normalized))?;
    let g = modem.slot();
    let eg: f64 = g.iter().map(|v| v * v).sum();
    let a = modem.amplitude;
    if a == 0.0 || eg == 0.0 {
        return Err(Error::InvalidParameter("matched filter needs a nonzero amplitude".into()));
    }
    let start = s_hat.index_at_or_after(-0.5 * cfg.t_s() - 1e-9 * rx.dt);
    if start + cfg.n_b * cfg.nu > s_hat.len() {
        return Err(Error::InsufficientSupport("received field does not cover the burst".into()));
    }
    let c = &cfg.constellation;
    let mut decided = Vec::with_capacity(cfg.n_b);
    let mut distances = Vec::with_capacity(cfg.n_b);
    for k in 0..cfg.n_b {
        let w = &s_hat.samples[start + k * cfg.nu..start + (k + 1) * cfg.nu];
        let y: C = w.iter().zip(g).map(|(z, &gv)| z * gv).sum::<C>() / (a * eg);
        let d: Vec<f64> = c.points().iter().map(|p| (y - p).norm_sqr()).collect();
        decided.push(super::argmin(&d));
        distances.push(d);
    }
    Ok(DecisionTrace { decided, distances, phase_offset: None })
}
