use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::FiberLink;
use crate::error::{Error, Result};
use crate::signal::{dft_in_place, ComplexEnvelope, UnitMode};

type C = Complex64;

/// Noise injected by the channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseModel {
    #[default]
    None,
    /// ASE of ideal distributed amplification, added after every step.
    Distributed,
    /// White noise of PSD `n0` (W/Hz) added once at the output.
    Awgn { n0: f64 },
}

/// Angular frequency of each DFT bin (natural order).
fn omegas(n: usize, dt: f64) -> Vec<f64> {
    let df = 1.0 / (n as f64 * dt);
    (0..n)
        .map(|k| {
            let bin = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * bin * df
        })
        .collect()
}

/// Circular complex Gaussian samples with `E|n|² = variance`.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C {
    let s = (0.5 * variance).sqrt();
    C::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

/// All-pass dispersion `e^{jβ₂ω²z/2}` (physical units).
pub fn dispersion(sig: &ComplexEnvelope, beta2: f64, z: f64) -> Result<ComplexEnvelope> {
    sig.ensure_mode(UnitMode::Physical)?;
    let mut buf = sig.samples.clone();
    dft_in_place(&mut buf, false);
    let inv_n = 1.0 / buf.len() as f64;
    for (x, w) in buf.iter_mut().zip(omegas(sig.len(), sig.dt)) {
        *x *= C::from_polar(inv_n, 0.5 * beta2 * w * w * z);
    }
    dft_in_place(&mut buf, true);
    Ok(ComplexEnvelope { samples: buf, ..sig.clone() })
}

/// Ideal electronic dispersion compensation of the whole link.
pub fn edc(sig: &ComplexEnvelope, link: &FiberLink) -> Result<ComplexEnvelope> {
    dispersion(sig, link.beta2, -link.length)
}

struct Stepper {
    half: Vec<C>,
    full: Vec<C>,
    gamma_dz: f64,
}

impl Stepper {
    fn new(n: usize, dt: f64, beta2: f64, gamma: f64, dz: f64) -> Self {
        let w = omegas(n, dt);
        let inv_n = 1.0 / n as f64;
        // the 1/N of the inverse DFT is folded into the linear operators
        let half = w.iter().map(|w| C::from_polar(inv_n, 0.25 * beta2 * w * w * dz)).collect();
        let full = w.iter().map(|w| C::from_polar(inv_n, 0.5 * beta2 * w * w * dz)).collect();
        Self { half, full, gamma_dz: gamma * dz }
    }
}

/// Symmetric split-step integration of `∂A/∂Z = −jβ₂/2·A_TT + jγ|A|²A`.
///
/// Attenuation is exactly balanced by distributed gain. With
/// [`NoiseModel::Distributed`] every step adds circular white noise of PSD
/// `η_sp·h·f_c·α·dz` over the simulation bandwidth `1/dt`.
pub fn ssfm_propagate<R: Rng>(
    sig: &ComplexEnvelope,
    link: &FiberLink,
    dz: f64,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<ComplexEnvelope> {
    sig.ensure_mode(UnitMode::Physical)?;
    if !(dz > 0.0 && dz.is_finite()) {
        return Err(Error::InvalidParameter(format!("dz = {dz}")));
    }
    let steps = (link.length / dz).round() as usize;
    if steps == 0 || (steps as f64 * dz - link.length).abs() > 1e-9 * link.length {
        return Err(Error::InvalidParameter(format!("dz = {dz} m does not divide L = {} m", link.length)));
    }
    let mut out = split_step(sig, link.beta2, link.gamma, dz, steps, noise, link, Some(rng))?;
    if let NoiseModel::Awgn { n0 } = noise {
        out = awgn_channel(&out, n0, rng)?;
    }
    Ok(out)
}

/// Digital backpropagation: the split-step scheme with `β₂`, `γ` negated,
/// `steps_per_span` steps per `span_length` metres.
pub fn dbp(
    sig: &ComplexEnvelope,
    link: &FiberLink,
    span_length: f64,
    steps_per_span: usize,
) -> Result<ComplexEnvelope> {
    sig.ensure_mode(UnitMode::Physical)?;
    if !(span_length > 0.0) || steps_per_span == 0 {
        return Err(Error::InvalidParameter("DBP needs a positive span and step count".into()));
    }
    let spans = (link.length / span_length).ceil().max(1.0);
    let steps = spans as usize * steps_per_span;
    let dz = link.length / steps as f64;
    split_step(sig, -link.beta2, -link.gamma, dz, steps, NoiseModel::None, link, None)
}

#[allow(clippy::too_many_arguments)]
fn split_step(
    sig: &ComplexEnvelope,
    beta2: f64,
    gamma: f64,
    dz: f64,
    steps: usize,
    noise: NoiseModel,
    link: &FiberLink,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<ComplexEnvelope> {
    let n = sig.len();
    let st = Stepper::new(n, sig.dt, beta2, gamma, dz);
    // white noise of PSD p has per-sample variance p/dt; `spec` holds the
    // DFT scaled by 1/N, whose bins then have variance p/(N·dt)
    let step_var = match noise {
        NoiseModel::Distributed => link.ase_psd_per_meter() * dz / (sig.dt * n as f64),
        _ => 0.0,
    };
    let mut spec = sig.samples.clone();
    dft_in_place(&mut spec, false);
    spec.iter_mut().zip(&st.half).for_each(|(x, h)| *x *= h);
    let mut field = vec![C::new(0.0, 0.0); n];
    for step in 0..steps {
        field.copy_from_slice(&spec);
        dft_in_place(&mut field, true);
        for x in field.iter_mut() {
            *x *= C::from_polar(1.0, st.gamma_dz * x.norm_sqr());
        }
        if !field.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::StepTooLarge { steps: step });
        }
        spec.copy_from_slice(&field);
        dft_in_place(&mut spec, false);
        let last = step + 1 == steps;
        if last {
            spec.iter_mut().zip(&st.half).for_each(|(x, h)| *x *= h);
        } else {
            spec.iter_mut().zip(&st.full).for_each(|(x, h)| *x *= h);
        }
        if let (true, Some(rng)) = (step_var > 0.0, rng.as_deref_mut()) {
            // white circular noise is invariant under the all-pass half step
            spec.iter_mut().for_each(|x| *x += complex_gaussian(rng, step_var));
        }
    }
    dft_in_place(&mut spec, true);
    Ok(ComplexEnvelope { samples: spec, ..sig.clone() })
}

/// Adds circular white noise of PSD `n0` over the grid bandwidth `1/dt`
/// (per-sample variance `n0/dt`). `n0` is in the units of the signal.
pub fn awgn_channel<R: Rng + ?Sized>(
    sig: &ComplexEnvelope,
    n0: f64,
    rng: &mut R,
) -> Result<ComplexEnvelope> {
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(Error::InvalidParameter(format!("N0 = {n0}")));
    }
    if n0 == 0.0 {
        return Ok(sig.clone());
    }
    let var = n0 / sig.dt;
    let samples = sig.samples.iter().map(|x| x + complex_gaussian(rng, var)).collect();
    Ok(ComplexEnvelope { samples, ..sig.clone() })
}

/// Ideal rectangular DAC/ADC filter of one-sided bandwidth `cutoff` (Hz).
pub fn converter_filter(sig: &ComplexEnvelope, cutoff: f64) -> ComplexEnvelope {
    crate::signal::lowpass(sig, cutoff)
}
