use super::{kernel_from_spectrum, NonlinearSpectrum};
use crate::error::Result;
use crate::signal::{ComplexEnvelope, UniformGrid, UnitMode};

/// First-order (Born) inverse: `q(t) ≈ −2σ·F*(2t)`.
///
/// Exact in the limit of vanishing spectrum amplitude; the error of the full
/// inverse against it shrinks as the square of the amplitude.
pub fn born_signal(spec: &NonlinearSpectrum, t_grid: UniformGrid) -> Result<ComplexEnvelope> {
    let y_grid = UniformGrid::new(2.0 * t_grid.start, 2.0 * t_grid.step, t_grid.len)?;
    let kernel = kernel_from_spectrum(spec, y_grid)?;
    let s = spec.sigma.value();
    let samples = kernel.f.iter().map(|f| -2.0 * s * f.conj()).collect();
    ComplexEnvelope::new(samples, t_grid.start, t_grid.step, UnitMode::Normalized)
}
