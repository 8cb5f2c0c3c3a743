//! Small-scale invariant checks across all modules.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use nfdm_core::analysis::{pk_bounds, q_factor_from_pb, rate_efficiency, DistanceTable};
use nfdm_core::channel::{awgn_channel, dispersion, ssfm_propagate, FiberLink, NoiseModel};
use nfdm_core::detection::{adc_front_end, df_bnft_detect};
use nfdm_core::modem::{Burst, Constellation, Modem, ModemConfig, PulseShape};
use nfdm_core::nft::{
    backward_nft_with, born_signal, forward_nft_with, ForwardOptions, GlmeMethod, GlmeOptions, NonlinearSpectrum, Sigma,
};
use nfdm_core::rng::{stream, Purpose};
use nfdm_core::signal::{rel_l2, ComplexEnvelope, UniformGrid, UnitMode};

use crate::causality::causality_pair;

type C = Complex64;

/// Deliberate corruption used to check that the self-test can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Demands an unreachable GLME residual.
    GlmeTolerance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

const N: usize = 256;
const DT: f64 = 0.04;

fn grids() -> (UniformGrid, UniformGrid) {
    let t = UniformGrid { start: -(N as f64 / 2.0) * DT, step: DT, len: N };
    let dl = PI / (N as f64 * DT);
    (t, UniformGrid { start: -(N as f64 / 2.0) * dl, step: dl, len: N })
}

fn spectrum(amp: f64) -> NonlinearSpectrum {
    let (_, l) = grids();
    let rho = (0..N).map(|i| C::from_polar(amp * (-l.at(i).powi(2) / 8.0).exp(), 0.05 * l.at(i).powi(2))).collect();
    NonlinearSpectrum::new(rho, l.start, l.step, Sigma::Focusing).expect("finite spectrum")
}

fn check(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn glme_round_trip(fault: Option<Fault>) -> Result<String, String> {
    let (t, l) = grids();
    let spec = spectrum(0.6);
    let tolerance = if fault == Some(Fault::GlmeTolerance) { 1e-300 } else { 1e-8 };
    let opts = GlmeOptions { residual_checks: 4, tolerance, ..GlmeOptions::default() };
    let (q, solve) = backward_nft_with(&spec, t, &opts).map_err(|e| format!("GLME solve: {e}"))?;
    let fwd = ForwardOptions { oversampling: 4, ..ForwardOptions::default() };
    let back = forward_nft_with(&q, l, Sigma::Focusing, &fwd).map_err(|e| e.to_string())?;
    let err = rel_l2(&back.rho, &spec.rho);
    check(err < 1e-3, format!("round trip {err:.2e}, residual {:.1e}", solve.residual))
}

fn glme_structured_vs_dense() -> Result<String, String> {
    let (t, _) = grids();
    let t = UniformGrid { len: 96, start: -48.0 * DT, ..t };
    let l = UniformGrid { start: -48.0 * PI / (96.0 * DT), step: PI / (96.0 * DT), len: 96 };
    let rho = (0..96).map(|i| C::new(0.5 * (-l.at(i).powi(2) / 8.0).exp(), 0.0)).collect();
    let spec = NonlinearSpectrum::new(rho, l.start, l.step, Sigma::Defocusing).map_err(|e| e.to_string())?;
    let s = backward_nft_with(&spec, t, &GlmeOptions::default()).map_err(|e| e.to_string())?.0;
    let dense = GlmeOptions { method: GlmeMethod::Dense, tolerance: 1e-6, ..GlmeOptions::default() };
    let d = backward_nft_with(&spec, t, &dense).map_err(|e| e.to_string())?.0;
    let err = rel_l2(&s.samples, &d.samples);
    check(err < 1e-10, format!("structured vs dense {err:.2e}"))
}

fn born_slope() -> Result<String, String> {
    let (t, _) = grids();
    let mut pts = Vec::new();
    for eps in [1e-1, 1e-2] {
        let spec = spectrum(eps);
        let q = backward_nft_with(&spec, t, &GlmeOptions::default()).map_err(|e| e.to_string())?.0;
        let born = born_signal(&spec, t).map_err(|e| e.to_string())?;
        let dev = rel_l2(&q.samples, &born.samples);
        pts.push((eps.ln(), dev.ln()));
    }
    let slope = (pts[1].1 - pts[0].1) / (pts[1].0 - pts[0].0);
    check((slope - 2.0).abs() < 0.2, format!("slope {slope:.3}"))
}

fn small_modem(p_dbm: f64, n_b: usize) -> Result<Modem, String> {
    let link = FiberLink { length: 100e3, ..FiberLink::default() };
    let pulse = PulseShape::gaussian(12.5, 20e-12).map_err(|e| e.to_string())?;
    let cfg = ModemConfig::new(Constellation::qam(16).map_err(|e| e.to_string())?, pulse, n_b, 8, 8, &link)
        .map_err(|e| e.to_string())?;
    Modem::with_power(cfg, 1e-3 * 10f64.powf(p_dbm / 10.0)).map_err(|e| e.to_string())
}

fn causality() -> Result<String, String> {
    let modem = small_modem(7.0, 8)?;
    let c = &modem.config;
    let burst = Burst::random(&c.constellation, 8, c.n_z, &mut stream(3, 0, Purpose::Symbols));
    let demo = causality_pair(&modem, &burst, 6).map_err(|e| e.to_string())?;
    check(
        demo.holds(),
        format!("before t_6 {:.2e}, after {:.2e}", demo.deviation_before, demo.deviation_after),
    )
}

fn dispersion_analytic() -> Result<String, String> {
    let beta2 = -20e-27;
    let (t0, z) = (10e-12, 20e3);
    let sig = ComplexEnvelope::from_fn(2048, -1024.0 * 0.5e-12, 0.5e-12, UnitMode::Physical, |t| {
        C::new((-t * t / (2.0 * t0 * t0)).exp(), 0.0)
    })
    .map_err(|e| e.to_string())?;
    let out = dispersion(&sig, beta2, z).map_err(|e| e.to_string())?;
    let xi = C::new(t0 * t0, -beta2 * z);
    let exact: Vec<C> = out.times().map(|t| (t0 / xi.sqrt()) * (-(t * t) / (2.0 * xi)).exp()).collect();
    let lossless = FiberLink { gamma: 0.0, length: z, beta2, ..FiberLink::default() };
    let ssfm = ssfm_propagate(&sig, &lossless, 1e3, NoiseModel::None, &mut stream(0, 0, Purpose::Noise))
        .map_err(|e| e.to_string())?;
    let e1 = rel_l2(&out.samples, &exact);
    let e2 = rel_l2(&ssfm.samples, &exact);
    check(e1 < 1e-9 && e2 < 1e-9, format!("filter {e1:.1e}, split-step {e2:.1e}"))
}

fn noise_variance() -> Result<String, String> {
    let n = 1 << 16;
    let sig = ComplexEnvelope::zeros(n, 0.0, 0.25, UnitMode::Normalized).map_err(|e| e.to_string())?;
    let n0 = 2e-3;
    let out = awgn_channel(&sig, n0, &mut stream(11, 0, Purpose::Noise)).map_err(|e| e.to_string())?;
    let var = out.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    let expect = n0 * 8.0 / 2.0;
    check((var / expect - 1.0).abs() < 0.01, format!("variance ratio {:.4}", var / expect))
}

fn metrics() -> Result<String, String> {
    let q = q_factor_from_pb(1e-3).map_err(|e| e.to_string())?;
    let eta = rate_efficiency(2048, 2000);
    let table = DistanceTable { d: vec![vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]]] };
    let mut sandwich = true;
    for sigma in [0.1, 0.5, 2.0] {
        for m in 0..3 {
            let b = pk_bounds(&table, sigma, 0, m).map_err(|e| e.to_string())?;
            sandwich &= b.lower <= b.approx && b.approx <= b.upper;
        }
    }
    check(
        (q - 9.80).abs() <= 0.01 && (eta - 0.5059).abs() < 1e-4 && sandwich,
        format!("Q(1e-3) = {q:.3} dB, η = {eta:.4}, sandwich {sandwich}"),
    )
}

fn detection() -> Result<String, String> {
    let modem = small_modem(0.0, 16)?;
    let c = &modem.config;
    let burst = Burst::random(&c.constellation, 16, c.n_z, &mut stream(5, 0, Purpose::Symbols));
    let r = modem.noiseless_received(&burst, 1).map_err(|e| e.to_string())?;
    let rx = adc_front_end(&r, c.nu, c.t_s(), c.n_b).map_err(|e| e.to_string())?;
    let trace = df_bnft_detect(&rx, &modem).map_err(|e| e.to_string())?;
    let errors = trace.decided.iter().zip(&burst.symbols).filter(|(a, b)| a != b).count();
    check(errors == 0, format!("{errors} errors on a noiseless burst"))
}

/// Runs every suite; failures carry the name of the broken invariant.
pub fn run_selftest(fault: Option<Fault>) -> Vec<SuiteResult> {
    let suites: Vec<(&'static str, Box<dyn Fn() -> Result<String, String>>)> = vec![
        ("glme-round-trip", Box::new(move || glme_round_trip(fault))),
        ("glme-structured-vs-dense", Box::new(glme_structured_vs_dense)),
        ("born-limit", Box::new(born_slope)),
        ("causality-prefix", Box::new(causality)),
        ("dispersion-analytic", Box::new(dispersion_analytic)),
        ("noise-variance", Box::new(noise_variance)),
        ("metric-formulas", Box::new(metrics)),
        ("df-bnft-noiseless", Box::new(detection)),
    ];
    suites
        .into_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = match f() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            SuiteResult { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}
