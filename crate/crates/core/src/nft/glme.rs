//! Backward NFT through the Gelfand–Levitan–Marchenko equation
//!
//! `K(x,y) − σF*(x+y) + σ∫∫_x^∞ K(x,r)F(r+s)F*(s+y) dr ds = 0`, `q(t) = −2K(t,t)`.
//!
//! For an output grid `t_i = t0 + i·δ` the equation at `x = t_i` is discretized
//! by the trapezoidal Nyström rule with nodes `x + k·h`, `h = 2δ`, so that every
//! `F(r+s)` lands on the kernel grid `y_m = 2t_m`. `F` is taken to vanish above
//! `2(t_last + δ)`, which bounds the node set to `[x, 2(t_last+δ) − x]`.
//!
//! Two solvers share this discretization:
//!
//! * [`GlmeMethod::Dense`] assembles `(I + σF̄WFW)k = σf̄` for each output time
//!   and solves it by LU, `O(n³)` per time.
//! * [`GlmeMethod::Structured`] writes the same system in the unknowns
//!   `(K(x,·), ∫K(x,r)F(r+·)dr)` with the second block reversed. The matrix is
//!   then block Toeplitz with 2×2 blocks whose symbol does not depend on `x`,
//!   and moving `x` down by `δ` borders it by one block. A Levinson recursion
//!   carries the first and last block columns of the inverse, `K(x,x)` is read
//!   off their corner entries, and the two trapezoid end weights are restored
//!   by a rank-2 Woodbury correction. Each output time costs `O(n)`.
//!
//! The recursion consumes `F(2x)` in order of decreasing `x`, so its state after
//! a prefix of the kernel is independent of the rest. [`GlmeRecursion`] exposes
//! that state for reuse.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{kernel_from_spectrum, GlmeKernel, NonlinearSpectrum, Sigma};
use crate::error::{Error, Result};
use crate::signal::{ComplexEnvelope, UniformGrid, UnitMode};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Row-major 2×2 complex block `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Block {
    a: C,
    b: C,
    c: C,
    d: C,
}

impl Block {
    const IDENTITY: Block = Block { a: ONE, b: ZERO, c: ZERO, d: ONE };
    const ZERO: Block = Block { a: ZERO, b: ZERO, c: ZERO, d: ZERO };

    #[inline]
    fn mul(self, o: Block) -> Block {
        Block {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    #[inline]
    fn add(self, o: Block) -> Block {
        Block { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, d: self.d + o.d }
    }

    #[inline]
    fn neg(self) -> Block {
        Block { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    fn det(self) -> C {
        self.a * self.d - self.b * self.c
    }

    fn inverse(self) -> Option<Block> {
        let det = self.det();
        if det.norm() < 1e-13 {
            return None;
        }
        Some(Block { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det })
    }
}

/// Incremental structured GLME solver.
///
/// Feed it `F(2x)` for `x = x_top, x_top − δ, x_top − 2δ, …` and it returns
/// `K(x,x)` for each. Cloning the recursion snapshots the solver state.
#[derive(Debug, Clone)]
pub struct GlmeRecursion {
    sigma: f64,
    h: f64,
    taps: Vec<C>,
    fwd: Vec<Block>,
    bwd: Vec<Block>,
}

impl GlmeRecursion {
    /// `output_step` is the spacing `δ` of the output times.
    pub fn new(sigma: Sigma, output_step: f64) -> Self {
        Self {
            sigma: sigma.value(),
            h: 2.0 * output_step,
            taps: Vec::new(),
            fwd: vec![Block::IDENTITY],
            bwd: vec![Block::IDENTITY],
        }
    }

    /// Number of kernel samples consumed so far.
    pub fn consumed(&self) -> usize {
        self.taps.len()
    }

    /// Consumes the next kernel sample `F(2x)` and returns `K(x,x)`.
    pub fn push(&mut self, tap: C) -> Result<C> {
        let n = self.fwd.len();
        let h = self.h;
        let sh = self.sigma * h;
        self.taps.push(tap);

        // residual blocks of [F;0] in the new last row and [0;B] in the new first row
        let mut ef_c = ZERO;
        let mut ef_d = ZERO;
        let mut eb_a = ZERO;
        let mut eb_b = ZERO;
        for j in 0..n {
            let t_f = self.taps[n - j - 1];
            ef_c += t_f * self.fwd[j].a;
            ef_d += t_f * self.fwd[j].b;
            let t_b = self.taps[j].conj();
            eb_a += t_b * self.bwd[j].c;
            eb_b += t_b * self.bwd[j].d;
        }
        let ef = Block { a: ZERO, b: ZERO, c: -h * ef_c, d: -h * ef_d };
        let eb = Block { a: sh * eb_a, b: sh * eb_b, c: ZERO, d: ZERO };

        let ill = || Error::IllConditioned { t: f64::NAN };
        let alpha = Block::IDENTITY.add(eb.mul(ef).neg()).inverse().ok_or_else(ill)?;
        let delta = Block::IDENTITY.add(ef.mul(eb).neg()).inverse().ok_or_else(ill)?;
        let beta = ef.mul(alpha).neg();
        let gamma = eb.mul(delta).neg();

        self.fwd.push(Block::ZERO);
        self.bwd.push(Block::ZERO);
        for j in (0..=n).rev() {
            let f = self.fwd[j];
            let b_prev = if j > 0 { self.bwd[j - 1] } else { Block::ZERO };
            self.fwd[j] = f.mul(alpha).add(b_prev.mul(beta));
            self.bwd[j] = f.mul(gamma).add(b_prev.mul(delta));
        }

        // corner entries of the inverse, then the trapezoid end-weight correction
        let a_u0 = self.fwd[0].a;
        let a_vl = self.fwd[n].c;
        let b_u0 = self.bwd[0].b;
        let b_vl = self.bwd[n].d;
        let m = Block {
            a: 0.5 * (ONE + a_u0),
            b: 0.5 * b_u0,
            c: 0.5 * a_vl,
            d: 0.5 * (ONE + b_vl),
        };
        let det = m.det();
        if det.norm() < 1e-13 {
            return Err(ill());
        }
        let g0 = -b_u0;
        let g1 = ONE - b_vl;
        let k = (g0 * m.d - m.b * g1) / det / h;
        if !k.re.is_finite() || !k.im.is_finite() {
            return Err(ill());
        }
        Ok(k)
    }
}

/// Dense trapezoidal Nyström solve of the GLME at one output time.
///
/// `taps[m − 1] = F(2x + 2(n − m)δ)` is the kernel from the top of the grid
/// down to `2x`, i.e. the same sequence [`GlmeRecursion::push`] consumes.
/// Returns `K(x,x)` and the relative residual of the linear system.
pub fn dense_glme_diag(taps: &[C], sigma: Sigma, output_step: f64) -> Result<(C, f64)> {
    let n = taps.len() + 1;
    let s = sigma.value();
    let h = 2.0 * output_step;
    // H[i][j] = F(y_i + y_j) = T_{i+j-(n-1)}, T_{-m} = taps[m-1], T_{≥0} = 0
    let tap = |d: isize| -> C {
        if d >= 0 {
            ZERO
        } else {
            taps[(-d - 1) as usize]
        }
    };
    let w: Vec<f64> = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();
    let hk = DMatrix::from_fn(n, n, |i, j| tap(i as isize + j as isize - (n as isize - 1)));
    let hw = DMatrix::from_fn(n, n, |i, j| hk[(i, j)] * w[j]);
    let hbar_w = DMatrix::from_fn(n, n, |i, j| hk[(i, j)].conj() * w[j]);
    let mut m = &hbar_w * &hw * C::new(s, 0.0);
    for i in 0..n {
        m[(i, i)] += ONE;
    }
    let rhs = nalgebra::DVector::from_fn(n, |i, _| s * tap(i as isize - (n as isize - 1)).conj());
    let sol = m
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::IllConditioned { t: f64::NAN })?;
    let res = (&m * &sol - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let residual = if scale > 0.0 { res / scale } else { res };
    Ok((sol[0], residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GlmeMethod {
    /// Block-Levinson recursion, `O(N²)` for the whole signal.
    #[default]
    Structured,
    /// One dense LU solve per output time, `O(N⁴)`.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmeOptions {
    pub method: GlmeMethod,
    /// Output times re-solved densely to measure the residual of the
    /// structured path (evenly spread, ignored by the dense method).
    pub residual_checks: usize,
    /// Largest acceptable residual.
    pub tolerance: f64,
    /// Solve on a grid this many times finer than the output grid, with the
    /// spectrum zero-padded accordingly, and keep every `refinement`-th sample.
    pub refinement: usize,
}

impl Default for GlmeOptions {
    fn default() -> Self {
        Self { method: GlmeMethod::Structured, residual_checks: 0, tolerance: 1e-8, refinement: 1 }
    }
}

/// Diagonal of the GLME solution on the output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmeSolve {
    pub k_diag: Vec<C>,
    pub t_grid: UniformGrid,
    pub residual: f64,
}

/// Solves the GLME for every `t` of `t_grid` given `F` on `y_m = 2t_m`.
pub fn solve_glme(
    kernel: &GlmeKernel,
    t_grid: UniformGrid,
    sigma: Sigma,
    opts: &GlmeOptions,
) -> Result<GlmeSolve> {
    let n = t_grid.len;
    let aligned = kernel.f.len() == n
        && (kernel.dy - 2.0 * t_grid.step).abs() <= 1e-12 * kernel.dy
        && (kernel.y0 - 2.0 * t_grid.start).abs() <= 1e-9 * kernel.dy;
    if !aligned {
        return Err(Error::InsufficientSupport(format!(
            "kernel grid ({}, {}, {}) does not cover y = 2t for t grid ({}, {}, {})",
            kernel.y0, kernel.dy, kernel.f.len(), t_grid.start, t_grid.step, n
        )));
    }
    // taps in consumption order: F(2t_{n-1}), F(2t_{n-2}), ...
    let taps: Vec<C> = kernel.f.iter().rev().copied().collect();
    let mut k_diag = vec![ZERO; n];
    let mut residual = 0.0f64;

    match opts.method {
        GlmeMethod::Structured => {
            let mut rec = GlmeRecursion::new(sigma, t_grid.step);
            for (m, tap) in taps.iter().enumerate() {
                let i = n - 1 - m;
                k_diag[i] = rec
                    .push(*tap)
                    .map_err(|_| Error::IllConditioned { t: t_grid.at(i) })?;
            }
            if opts.residual_checks > 0 {
                let scale = k_diag.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
                let checks = opts.residual_checks.min(n);
                for c in 0..checks {
                    let i = if checks == 1 { 0 } else { c * (n - 1) / (checks - 1) };
                    let (k, res) = dense_glme_diag(&taps[..n - i], sigma, t_grid.step)?;
                    residual = residual.max(res).max((k - k_diag[i]).norm() / scale);
                }
            }
        }
        GlmeMethod::Dense => {
            for i in 0..n {
                let (k, res) = dense_glme_diag(&taps[..n - i], sigma, t_grid.step)
                    .map_err(|_| Error::IllConditioned { t: t_grid.at(i) })?;
                k_diag[i] = k;
                residual = residual.max(res);
            }
        }
    }
    if !(residual <= opts.tolerance) {
        return Err(Error::IllConditioned { t: t_grid.start });
    }
    Ok(GlmeSolve { k_diag, t_grid, residual })
}

/// Backward NFT `ρ(λ) ↦ q(t) = −2K(t,t)` on `t_grid`, in normalized units.
pub fn backward_nft(spec: &NonlinearSpectrum, t_grid: UniformGrid) -> Result<ComplexEnvelope> {
    backward_nft_with(spec, t_grid, &GlmeOptions::default()).map(|(q, _)| q)
}

pub fn backward_nft_with(
    spec: &NonlinearSpectrum,
    t_grid: UniformGrid,
    opts: &GlmeOptions,
) -> Result<(ComplexEnvelope, GlmeSolve)> {
    let r = opts.refinement.max(1);
    if r > 1 {
        let fine_grid = UniformGrid::new(t_grid.start, t_grid.step / r as f64, t_grid.len * r)?;
        let pad = (fine_grid.len.saturating_sub(spec.len())) / 2;
        let mut rho = vec![ZERO; pad];
        rho.extend_from_slice(&spec.rho);
        rho.resize(fine_grid.len.max(spec.len()), ZERO);
        let wide = NonlinearSpectrum::new(
            rho,
            spec.lambda0 - pad as f64 * spec.dlambda,
            spec.dlambda,
            spec.sigma,
        )?;
        let fine_opts = GlmeOptions { refinement: 1, ..*opts };
        let (q, solve) = backward_nft_with(&wide, fine_grid, &fine_opts)?;
        let samples: Vec<C> = q.samples.iter().step_by(r).copied().collect();
        let k_diag = solve.k_diag.iter().step_by(r).copied().collect();
        let q = ComplexEnvelope::new(samples, t_grid.start, t_grid.step, UnitMode::Normalized)?;
        return Ok((q, GlmeSolve { k_diag, t_grid, residual: solve.residual }));
    }
    let y_grid = UniformGrid::new(2.0 * t_grid.start, 2.0 * t_grid.step, t_grid.len)?;
    let period = 2.0 * std::f64::consts::PI / spec.dlambda;
    if y_grid.len as f64 * y_grid.step > period * (1.0 + 1e-9) {
        return Err(Error::InsufficientSupport(format!(
            "kernel span {:.4} exceeds the λ-grid alias period {period:.4}",
            y_grid.len as f64 * y_grid.step
        )));
    }
    let kernel = kernel_from_spectrum(spec, y_grid)?;
    let solve = solve_glme(&kernel, t_grid, spec.sigma, opts)?;
    let samples = solve.k_diag.iter().map(|k| -2.0 * k).collect();
    let q = ComplexEnvelope::new(samples, t_grid.start, t_grid.step, UnitMode::Normalized)?;
    Ok((q, solve))
}
