use std::path::PathBuf;
use std::process::Command;

use nfdm_cli::report::write_rows;
use nfdm_cli::{causality_pair, run_selftest, run_sweep, ExperimentConfig, Fault};
use nfdm_core::modem::{Burst, Modem};

const SMOKE: &str = "\
modem.m = 16
modem.n_b = 32
modem.n_z = 32
channel.kind = awgn
detector.types = df-bnft
sweep.power_dbm = -16, -13, -10
monte_carlo.min_bursts = 48
monte_carlo.max_bursts = 48
seed = 7
";

fn temp_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nfdm-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn csv(cfg: &ExperimentConfig) -> Vec<u8> {
    let mut out = Vec::new();
    write_rows(&mut out, &run_sweep(cfg, false).unwrap()).unwrap();
    out
}

#[test]
fn smoke_sweep_rows_and_determinism() {
    let cfg = ExperimentConfig::parse(SMOKE).unwrap();
    let rows = run_sweep(&cfg, false).unwrap();
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[1].pe < w[0].pe, "{} then {}", w[0].pe, w[1].pe);
    }
    for r in &rows {
        assert_eq!(r.n_bursts, 48);
        assert_eq!(r.detector, "df-bnft");
        assert!((r.pe - r.n_symbol_errors as f64 / (48.0 * 32.0)).abs() < 1e-15);
        if let Some(q) = r.q_db {
            assert!((q - nfdm_core::analysis::q_factor_from_pb(r.pb).unwrap()).abs() < 1e-12);
        }
    }
    let a = csv(&cfg);
    assert_eq!(a, csv(&cfg));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(nfdm_cli::report::HEADER));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn bounds_rows_flip_q_sides() {
    let cfg = ExperimentConfig::parse(
        "modem.m = 4\nmodem.n_b = 8\nmodem.n_z = 8\ndetector.types = genie-df, df-bnft\n\
         sweep.power_dbm = -14\nmonte_carlo.max_bursts = 32\nmonte_carlo.bounds = true\n",
    )
    .unwrap();
    let rows = run_sweep(&cfg, true).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let (u, a, l) = (r.pe_upper.unwrap(), r.pe_approx.unwrap(), r.pe_lower.unwrap());
        assert!(l <= a && a <= u);
        assert!(r.q_upper_db.unwrap() >= r.q_approx_db.unwrap());
        assert!(r.q_approx_db.unwrap() >= r.q_lower_db.unwrap());
        assert!(r.wall_time_s.is_some());
    }
}

#[test]
fn fiber_channel_runs_every_detector() {
    let cfg = ExperimentConfig::parse(
        "modem.m = 4\nmodem.n_b = 3\nmodem.n_z = 16\nfiber.length_km = 20\nchannel.kind = fiber\nchannel.dz_km = 1\n\
         detector.types = fnft, df-bnft, genie-df, optimum, edc, dbp\nchannel.dbp_span_km = 20\nchannel.dbp_steps_per_span = 20\n\
         sweep.power_dbm = -5\nmonte_carlo.min_bursts = 16\nmonte_carlo.max_bursts = 16\n",
    )
    .unwrap();
    let rows = run_sweep(&cfg, false).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.n_bursts, 16);
        assert!(r.pe < 0.05, "{}: {}", r.detector, r.pe);
    }
    assert!(rows[4].q_evm_db.unwrap() > 10.0);
    assert!(rows[5].q_evm_db.unwrap() > 10.0);
}

#[test]
fn causality_demo_properties() {
    let cfg = ExperimentConfig::parse("modem.n_b = 8\nmodem.n_z = 8\nsweep.power_dbm = 7\n").unwrap();
    let (_, demo) = nfdm_cli::demo_causality(&cfg).unwrap();
    assert!(demo.holds(), "{} {}", demo.deviation_before, demo.deviation_after);
    let zero = Modem::new(cfg.modem_config().unwrap(), 0.0).unwrap();
    let b = Burst::new(vec![3; 8], 8, &zero.config.constellation).unwrap();
    let d = causality_pair(&zero, &b, 6).unwrap();
    assert!(d.full.samples.iter().chain(&d.prefix.samples).all(|z| z.norm() == 0.0));
    assert!(d.holds());
    let modem = Modem::with_power(cfg.modem_config().unwrap(), 5e-3).unwrap();
    for k in 1..8 {
        let d = causality_pair(&modem, &Burst::new(vec![k, 9, 2, 14, 7, 0, 5, 11], 8, &modem.config.constellation).unwrap(), k).unwrap();
        assert!(d.holds(), "k = {k}: {} {}", d.deviation_before, d.deviation_after);
    }
}

#[test]
fn selftest_passes_and_fault_is_named() {
    let ok = run_selftest(None);
    assert!(ok.iter().all(|r| r.passed), "{ok:?}");
    assert!(ok.iter().map(|r| r.seconds).sum::<f64>() < 60.0);
    let bad = run_selftest(Some(Fault::GlmeTolerance));
    let failed: Vec<_> = bad.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    assert_eq!(failed, vec!["glme-round-trip"]);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_nfdm");
    let good = temp_file("good.cfg", "modem.m = 4\nmodem.n_b = 4\nmodem.n_z = 8\nsweep.power_dbm = -12\nmonte_carlo.max_bursts = 16\n");
    let out = temp_file("out.csv", "");
    let status = Command::new(exe).args(["simulate", good.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "1"]).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    let run = |workers: &str| {
        let o = Command::new(exe)
            .args(["simulate", good.to_str().unwrap(), "--no-timing", "--workers", workers])
            .output()
            .unwrap();
        assert!(o.status.success());
        o.stdout
    };
    assert_eq!(run("1"), run("3"));

    let bad = temp_file("bad.cfg", "modem.n_b = 10\ndetector.types = optimum\n");
    let o = Command::new(exe).args(["simulate", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = Command::new(exe).args(["simulate", "/nonexistent/config"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(exe).args(["selftest", "--fault", "glme-tolerance"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("glme-round-trip"));
    let short = temp_file("short.cfg", "modem.n_b = 4\ncausality.prefix = 6\n");
    let o = Command::new(exe).args(["demo-causality", short.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
