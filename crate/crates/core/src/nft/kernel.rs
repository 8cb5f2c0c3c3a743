use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::NonlinearSpectrum;
use crate::error::{Error, Result};
use crate::signal::{dft_in_place, UniformGrid};

/// Samples of `F(y) = (1/2π)∫ρ(λ)e^{jλy}dλ` on a uniform `y` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmeKernel {
    pub f: Vec<Complex64>,
    pub y0: f64,
    pub dy: f64,
}

impl GlmeKernel {
    pub fn grid(&self) -> UniformGrid {
        UniformGrid { start: self.y0, step: self.dy, len: self.f.len() }
    }

    pub fn y(&self, m: usize) -> f64 {
        self.y0 + m as f64 * self.dy
    }
}

/// Evaluates `F(y)` on `y_grid` by direct summation over the λ grid.
///
/// When the grids are reciprocal (`dλ·dy·N_λ = 2π`) the sum is a DFT and is
/// evaluated with an FFT; otherwise it is summed directly.
pub fn kernel_from_spectrum(spec: &NonlinearSpectrum, y_grid: UniformGrid) -> Result<GlmeKernel> {
    if y_grid.len == 0 {
        return Err(Error::InvalidGrid("empty y grid".into()));
    }
    let n = spec.len();
    let peak = spec.rho.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = spec.rho[0].norm().max(spec.rho[n - 1].norm());
    if peak > 0.0 && edge > 1e-3 * peak {
        log::warn!("nonlinear spectrum does not decay at the grid edges ({edge:.2e} vs {peak:.2e})");
    }
    let scale = spec.dlambda / (2.0 * PI);
    let reciprocal = ((spec.dlambda * y_grid.step * n as f64) / (2.0 * PI) - 1.0).abs() < 1e-10;

    let f = if reciprocal && y_grid.len <= n {
        let y0 = y_grid.start;
        let mut buf: Vec<Complex64> = spec
            .rho
            .iter()
            .enumerate()
            .map(|(l, r)| r * Complex64::from_polar(1.0, l as f64 * spec.dlambda * y0))
            .collect();
        dft_in_place(&mut buf, true);
        (0..y_grid.len)
            .map(|m| buf[m] * Complex64::from_polar(scale, spec.lambda0 * y_grid.at(m)))
            .collect()
    } else {
        (0..y_grid.len)
            .into_par_iter()
            .map(|m| {
                let y = y_grid.at(m);
                let step = Complex64::from_polar(1.0, spec.dlambda * y);
                let mut phase = Complex64::from_polar(1.0, spec.lambda0 * y);
                let mut acc = Complex64::new(0.0, 0.0);
                for (l, r) in spec.rho.iter().enumerate() {
                    // re-anchor the phase recurrence to bound rounding drift
                    if l % 256 == 0 {
                        phase = Complex64::from_polar(1.0, spec.lambda(l) * y);
                    }
                    acc += r * phase;
                    phase *= step;
                }
                acc * scale
            })
            .collect()
    };
    Ok(GlmeKernel { f, y0: y_grid.start, dy: y_grid.step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nft::Sigma;

    /// Adaptive Simpson quadrature, used only as an independent oracle.
    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    fn band_spectrum(n: usize, dl: f64, band: f64) -> NonlinearSpectrum {
        let lambda0 = -(n as f64 / 2.0) * dl;
        let rho = (0..n)
            .map(|l| {
                let lam = lambda0 + l as f64 * dl;
                let w = if (lam.abs() - band).abs() < 1e-9 {
                    0.5
                } else if lam.abs() < band {
                    1.0
                } else {
                    0.0
                };
                Complex64::new(w, 0.0)
            })
            .collect();
        NonlinearSpectrum::new(rho, lambda0, dl, Sigma::Focusing).unwrap()
    }

    #[test]
    fn zero_spectrum_gives_zero_kernel() {
        let spec = NonlinearSpectrum::zeros(UniformGrid::new(-3.0, 0.1, 61).unwrap(), Sigma::Focusing);
        let k = kernel_from_spectrum(&spec, UniformGrid::new(-2.0, 0.3, 17).unwrap()).unwrap();
        assert!(k.f.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn kernel_is_linear() {
        let spec = band_spectrum(128, 0.05, 1.0);
        let y = UniformGrid::new(-5.0, 0.37, 23).unwrap();
        let k1 = kernel_from_spectrum(&spec, y).unwrap();
        let alpha = Complex64::new(0.3, -1.7);
        let mut scaled = spec.clone();
        scaled.rho.iter_mut().for_each(|z| *z *= alpha);
        let k2 = kernel_from_spectrum(&scaled, y).unwrap();
        for (a, b) in k1.f.iter().zip(&k2.f) {
            assert!((a * alpha - b).norm() < 1e-13);
        }
    }

    #[test]
    fn band_spectrum_matches_quadrature_oracle() {
        let band = 1.5;
        let spec = band_spectrum(4096, 0.0025, band);
        let y = UniformGrid::new(-6.0, 0.25, 49).unwrap();
        let k = kernel_from_spectrum(&spec, y).unwrap();
        for m in 0..y.len {
            let yy = y.at(m);
            let re = adaptive_simpson(&|l: f64| (l * yy).cos(), -band, band, 1e-12) / (2.0 * PI);
            let im = adaptive_simpson(&|l: f64| (l * yy).sin(), -band, band, 1e-12) / (2.0 * PI);
            assert!((k.f[m].re - re).abs() < 2e-5, "y={yy}: {} vs {re}", k.f[m].re);
            assert!((k.f[m].im - im).abs() < 2e-5);
        }
        // sinc-shaped profile peaks at Λ/π
        let mid = k.f[24];
        assert!((mid.re - band / PI).abs() < 1e-5);
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let n = 256;
        let dl = 0.07;
        let rho = (0..n)
            .map(|l| {
                let lam = -(n as f64 / 2.0) * dl + l as f64 * dl;
                Complex64::new((-lam * lam).exp(), 0.2 * lam * (-lam * lam).exp())
            })
            .collect();
        let spec = NonlinearSpectrum::new(rho, -(n as f64 / 2.0) * dl, dl, Sigma::Focusing).unwrap();
        let dy = 2.0 * PI / (dl * n as f64);
        let fast = kernel_from_spectrum(&spec, UniformGrid::new(-40.0 * dy, dy, 100).unwrap()).unwrap();
        // same grid nudged off reciprocity forces the direct path
        let slow = kernel_from_spectrum(
            &spec,
            UniformGrid::new(-40.0 * dy, dy * (1.0 + 1e-7), 100).unwrap(),
        )
        .unwrap();
        for (a, b) in fast.f.iter().zip(&slow.f) {
            assert!((a - b).norm() < 1e-6);
        }
    }
}
