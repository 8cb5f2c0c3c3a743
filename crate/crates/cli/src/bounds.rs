//! Semianalytic bounds against direct error counting.

use std::io::{self, Write};

use nfdm_core::analysis::{q_factor_from_pb, BoundTriple};

use crate::config::{ChannelKind, DetectorKind, ExperimentConfig};
use crate::sweep::{run_sweep, OperatingPoint};

/// Cost of the two estimates at one power.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub ps_dbm: f64,
    /// Noise standard deviation per complex sample.
    pub sigma: f64,
    /// Sequences until the triple stabilized.
    pub sequences: usize,
    pub estimate: BoundTriple,
    pub q_upper_db: Option<f64>,
    pub q_approx_db: Option<f64>,
    pub q_lower_db: Option<f64>,
    /// Bursts direct counting (genie feedback, AWGN ansatz) needed to reach
    /// the target number of symbol errors, or the burst budget.
    pub counting_bursts: usize,
    pub counting_errors: usize,
    pub counting_pe: f64,
    /// Whether counting reached its error target within the budget.
    pub counting_reached_target: bool,
    /// Running means after each sequence.
    pub history: Vec<BoundTriple>,
}

impl BoundsRow {
    pub fn burst_ratio(&self) -> f64 {
        self.counting_bursts as f64 / self.sequences as f64
    }
}

pub const HEADER: &str = "ps_dbm,sigma,sequences,pe_upper,pe_approx,pe_lower,q_upper_db,q_approx_db,q_lower_db,\
counting_bursts,counting_errors,counting_pe,counting_reached_target,burst_ratio";

pub fn run_bounds(cfg: &ExperimentConfig) -> nfdm_core::Result<Vec<BoundsRow>> {
    let m = cfg.modem.m;
    let rule = cfg.monte_carlo.pb_rule;
    let q = |pe: f64| q_factor_from_pb(rule.apply(pe, m)).ok();
    let mut counting = cfg.clone();
    counting.channel.kind = ChannelKind::Awgn;
    counting.detector.kinds = vec![DetectorKind::GenieDf];
    counting.detector.phase_comp = false;
    counting.monte_carlo.bounds = false;
    let counted = run_sweep(&counting, false)?;
    let mut rows = Vec::new();
    for (p, c) in counted.iter().enumerate() {
        let point = OperatingPoint::new(cfg, p)?;
        let semi = point.semianalytic()?;
        let e = semi.estimate;
        rows.push(BoundsRow {
            ps_dbm: point.ps_dbm,
            sigma: point.sigma,
            sequences: semi.sequences,
            estimate: e,
            q_upper_db: q(e.lower),
            q_approx_db: q(e.approx),
            q_lower_db: q(e.upper),
            counting_bursts: c.n_bursts,
            counting_errors: c.n_symbol_errors,
            counting_pe: c.pe,
            counting_reached_target: c.n_symbol_errors >= cfg.monte_carlo.target_symbol_errors,
            history: semi.history,
        });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn write_bounds<W: Write>(mut out: W, rows: &[BoundsRow]) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.ps_dbm,
            r.sigma,
            r.sequences,
            r.estimate.upper,
            r.estimate.approx,
            r.estimate.lower,
            opt(r.q_upper_db),
            opt(r.q_approx_db),
            opt(r.q_lower_db),
            r.counting_bursts,
            r.counting_errors,
            r.counting_pe,
            r.counting_reached_target,
            r.burst_ratio()
        )?;
    }
    Ok(())
}

/// Running means per sequence: `ps_dbm,sequence,pe_upper,pe_approx,pe_lower`.
pub fn write_history<W: Write>(mut out: W, rows: &[BoundsRow]) -> io::Result<()> {
    writeln!(out, "ps_dbm,sequence,pe_upper,pe_approx,pe_lower")?;
    for r in rows {
        for (i, h) in r.history.iter().enumerate() {
            writeln!(out, "{},{},{},{},{}", r.ps_dbm, i + 1, h.upper, h.approx, h.lower)?;
        }
    }
    Ok(())
}
