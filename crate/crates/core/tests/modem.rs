use nfdm_core::channel::FiberLink;
use nfdm_core::modem::{nis_map, nis_unmap, Burst, Constellation, Modem, ModemConfig, PulseShape};
use nfdm_core::nft::{forward_nft_with, ForwardOptions, GlmeOptions, Sigma};
use nfdm_core::rng::{stream, Purpose};
use nfdm_core::signal::{rel_l2, time_reverse, FrequencyEnvelope, UnitMode};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn dbm(p: f64) -> f64 {
    1e-3 * 10f64.powf(p / 10.0)
}

fn config(m: usize, n_b: usize, n_z: usize, length: f64) -> ModemConfig {
    let link = FiberLink { length, ..FiberLink::default() };
    let pulse = PulseShape::gaussian(12.5, 20e-12).unwrap();
    ModemConfig::new(Constellation::qam(m).unwrap(), pulse, n_b, n_z, 8, &link).unwrap()
}

fn unprecompensated(mut cfg: ModemConfig) -> ModemConfig {
    cfg.precomp_length = 0.0;
    cfg
}

fn random_burst(cfg: &ModemConfig, seed: u64) -> Burst {
    Burst::random(&cfg.constellation, cfg.n_b, cfg.n_z, &mut stream(seed, 0, Purpose::Symbols))
}

#[test]
fn nis_map_is_negated_reindexing() {
    let spec = FrequencyEnvelope {
        values: (0..8).map(|k| C::new(k as f64, -(k as f64) / 2.0)).collect(),
        f0: -2.0,
        df: 0.5,
        t0: -1.0,
        unit_mode: UnitMode::Normalized,
    };
    let rho = nis_map(&spec, Sigma::Focusing).unwrap();
    for k in 0..8 {
        let f = spec.freq(k);
        let l = ((-std::f64::consts::PI * f - rho.lambda0) / rho.dlambda).round() as usize;
        assert_eq!(rho.rho[l], -spec.values[k]);
    }
    let back = nis_unmap(&rho, spec.t0, spec.unit_mode);
    assert_eq!(back.values, spec.values);
    assert!((back.f0 - spec.f0).abs() < 1e-12 && (back.df - spec.df).abs() < 1e-15);
    let zero = FrequencyEnvelope { values: vec![C::new(0.0, 0.0); 8], ..spec };
    assert!(nis_map(&zero, Sigma::Focusing).unwrap().rho.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn zero_burst_transmits_zero() {
    let cfg = config(16, 8, 8, 1e5);
    let modem = Modem::with_power(cfg.clone(), 0.0).unwrap();
    let tx = modem.transmit(&random_burst(&cfg, 1)).unwrap();
    assert!(tx.q.samples.iter().all(|z| z.norm() == 0.0));
    let modem = Modem::with_power(cfg.clone(), dbm(0.0)).unwrap();
    let zero = Burst { symbols: vec![], n_z: 0 };
    assert!(modem.transmit(&zero).is_err());
}

#[test]
fn transmit_is_deterministic() {
    let cfg = config(16, 8, 24, 1e5);
    let modem = Modem::with_power(cfg.clone(), dbm(3.0)).unwrap();
    let b = random_burst(&cfg, 2);
    assert_eq!(modem.transmit(&b).unwrap().q.samples, modem.transmit(&b).unwrap().q.samples);
}

#[test]
fn streamed_waveform_matches_full_transmitter_without_precompensation() {
    let cfg = unprecompensated(config(16, 8, 8, 1e5));
    let modem = Modem::with_power(cfg.clone(), dbm(7.0)).unwrap();
    let b = random_burst(&cfg, 3);
    let tx = modem.transmit_with(&b, &GlmeOptions::default()).unwrap();
    let streamed = modem.noiseless_received(&b, cfg.n_z - cfg.lead_guard).unwrap();
    let off = cfg.burst_offset();
    let full = &tx.q.samples[off..off + streamed.len()];
    assert!(rel_l2(&streamed.samples, full) < 1e-10, "{:e}", rel_l2(&streamed.samples, full));
    assert!(tx.q.samples[..off].iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn low_power_output_is_conjugate_qam_signal() {
    // Born limit: q(t) ≈ −2σF*(−2t) = σ·s*(t); deviation shrinks as power^{3/2}
    let cfg = unprecompensated(config(16, 8, 8, 1e5));
    let b = random_burst(&cfg, 4);
    let mut rel = Vec::new();
    for p in [-20.0, -30.0] {
        let modem = Modem::with_power(cfg.clone(), dbm(p)).unwrap();
        let tx = modem.transmit(&b).unwrap();
        let born: Vec<C> = tx.s.samples.iter().map(|z| z.conj()).collect();
        rel.push(rel_l2(&tx.q.samples, &born));
    }
    // relative deviation ∝ amplitude², i.e. a factor 10 per 10 dB
    let ratio = rel[0] / rel[1];
    assert!((ratio.log10() - 1.0).abs() < 0.1, "{rel:?}");
    assert!(rel[0] < 1e-2);
}

#[test]
fn causality_through_full_transmitter() {
    // bursts sharing their first 6 symbols, no precompensation, 7 dBm
    let cfg = unprecompensated(config(16, 8, 8, 1e5));
    let modem = Modem::with_power(cfg.clone(), dbm(7.0)).unwrap();
    let a = random_burst(&cfg, 5);
    let mut b = a.clone();
    b.symbols.truncate(6);
    let qa = modem.transmit(&a).unwrap().q;
    let qb = modem.transmit(&b).unwrap().q;
    let off = cfg.burst_offset();
    let n6 = off + 6 * cfg.nu;
    let before = rel_l2(&qb.samples[..n6], &qa.samples[..n6]);
    let after = rel_l2(&qb.samples[n6..], &qa.samples[n6..]);
    assert!(before < 1e-4, "{before:e}");
    assert!(after > 0.1, "{after}");
}

#[test]
fn candidate_window_ignores_later_symbols() {
    let cfg = config(16, 8, 8, 1e5);
    let modem = Modem::with_power(cfg.clone(), dbm(7.0)).unwrap();
    let b = random_burst(&cfg, 6);
    let r = modem.noiseless_received(&b, 0).unwrap();
    for k in 1..=cfg.n_b {
        let w = modem.candidate_waveform(&b.symbols[..k - 1], b.symbols[k - 1]).unwrap();
        let range = (k - 1) * cfg.nu..k * cfg.nu;
        assert!(rel_l2(&w, &r.samples[range]) < 1e-12);
    }
    // k = 1: distinct single-pulse candidates
    let first: Vec<Vec<C>> = (0..16).map(|i| modem.candidate_waveform(&[], i).unwrap()).collect();
    for i in 0..16 {
        for j in 0..i {
            assert!(rel_l2(&first[i], &first[j]) > 1e-3);
        }
    }
}

#[test]
fn calibrated_power_matches_target() {
    let cfg = config(16, 16, 16, 1e5);
    let ps = dbm(5.0);
    let modem = Modem::with_power(cfg.clone(), ps).unwrap();
    let mut e = 0.0;
    let n = 6;
    for seed in 0..n {
        let tx = modem.transmit(&random_burst(&cfg, 100 + seed)).unwrap();
        e += modem.physical_energy(&tx.q);
    }
    let measured = e / n as f64 / (cfg.n_b as f64 * cfg.pulse.t_s);
    assert!((measured / ps - 1.0).abs() < 0.1, "{measured} vs {ps}");
}

#[test]
fn precompensated_burst_round_trips() {
    // 16QAM, N_b = 16, ν = 8, 0 dBm, 100 km of precompensation
    let cfg = config(16, 16, 240, 1e5);
    let modem = Modem::with_power(cfg.clone(), dbm(0.0)).unwrap();
    let b = random_burst(&cfg, 7);
    let tx = modem.transmit(&b).unwrap();
    let opts = ForwardOptions { oversampling: 8, check_boundary: false };
    let back = forward_nft_with(&time_reverse(&tx.q), tx.rho.grid(), Sigma::Focusing, &opts).unwrap();
    let pre = nfdm_core::nft::spectral_rotation(
        &tx.rho,
        cfg.precomp_length,
        nfdm_core::nft::RotationDirection::Pre,
    );
    let err = rel_l2(&back.rho, &pre.rho);
    assert!(err < 1e-3, "{err:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nis_unmap_inverts_nis_map(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..64), df in 0.01f64..10.0) {
        let n = vals.len();
        let spec = FrequencyEnvelope {
            values: vals.iter().map(|&(a, b)| C::new(a, b)).collect(),
            f0: -(n as f64 / 2.0).floor() * df,
            df,
            t0: 0.0,
            unit_mode: UnitMode::Normalized,
        };
        let back = nis_unmap(&nis_map(&spec, Sigma::Focusing).unwrap(), 0.0, UnitMode::Normalized);
        prop_assert_eq!(back.values, spec.values);
    }

    #[test]
    fn shared_prefix_gives_identical_windows(seed in 0u64..1000, k in 1usize..8) {
        let cfg = config(16, 8, 8, 1e5);
        let modem = Modem::with_power(cfg.clone(), dbm(7.0)).unwrap();
        let a = random_burst(&cfg, seed);
        let mut b = random_burst(&cfg, seed + 1);
        b.symbols[..k].copy_from_slice(&a.symbols[..k]);
        let ra = modem.noiseless_received(&a, 0).unwrap();
        let rb = modem.noiseless_received(&b, 0).unwrap();
        let n = k * cfg.nu;
        prop_assert!(rel_l2(&rb.samples[..n], &ra.samples[..n]) < 1e-12);
    }
}

