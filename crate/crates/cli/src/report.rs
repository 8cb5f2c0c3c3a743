//! CSV rows and their writer.

use std::fmt::Write as _;
use std::io::{self, Write};

use nfdm_core::analysis::{q_factor_from_pb, PbRule};

/// One `(power, detector)` operating point.
///
/// Columns, in order: `detector, channel_kind, n_b, n_z, eta, ps_dbm,
/// n_bursts, n_symbol_errors, n_bit_errors, pe, pb, q_db, pe_upper,
/// pe_approx, pe_lower, q_upper_db, q_approx_db, q_lower_db, q_evm_db, seed,
/// wall_time_s`. Empty cells mean "not computed" (bounds not requested, no
/// counted errors, EVM only for conventional receivers).
///
/// `pb` is counted bit errors over transmitted bits and `q_db` follows from
/// it. Bound Q-factors use the configured `P_e → P_b` rule and swap sides:
/// `q_upper_db` comes from `pe_lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub detector: String,
    pub channel_kind: String,
    pub n_b: usize,
    pub n_z: usize,
    pub eta: f64,
    pub ps_dbm: f64,
    pub n_bursts: usize,
    pub n_symbol_errors: usize,
    pub n_bit_errors: usize,
    pub pe: f64,
    pub pb: f64,
    pub q_db: Option<f64>,
    pub pe_upper: Option<f64>,
    pub pe_approx: Option<f64>,
    pub pe_lower: Option<f64>,
    pub q_upper_db: Option<f64>,
    pub q_approx_db: Option<f64>,
    pub q_lower_db: Option<f64>,
    pub q_evm_db: Option<f64>,
    pub seed: u64,
    pub wall_time_s: Option<f64>,
}

pub const HEADER: &str = "detector,channel_kind,n_b,n_z,eta,ps_dbm,n_bursts,n_symbol_errors,n_bit_errors,\
pe,pb,q_db,pe_upper,pe_approx,pe_lower,q_upper_db,q_approx_db,q_lower_db,q_evm_db,seed,wall_time_s";

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        Some(x) if x > 0.0 => "inf".into(),
        _ => String::new(),
    }
}

impl ResultRow {
    /// Fills the bound columns and their Q-factors.
    pub fn set_bounds(&mut self, upper: f64, approx: f64, lower: f64, m: usize, rule: PbRule) {
        let q = |pe: f64| q_factor_from_pb(rule.apply(pe, m)).ok();
        self.pe_upper = Some(upper);
        self.pe_approx = Some(approx);
        self.pe_lower = Some(lower);
        self.q_upper_db = q(lower);
        self.q_approx_db = q(approx);
        self.q_lower_db = q(upper);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.detector,
            self.channel_kind,
            self.n_b,
            self.n_z,
            self.eta,
            self.ps_dbm,
            self.n_bursts,
            self.n_symbol_errors,
            self.n_bit_errors,
            self.pe,
            self.pb,
            cell(self.q_db),
            cell(self.pe_upper),
            cell(self.pe_approx),
            cell(self.pe_lower),
            cell(self.q_upper_db),
            cell(self.q_approx_db),
            cell(self.q_lower_db),
            cell(self.q_evm_db),
            self.seed,
            self.wall_time_s.map_or(String::new(), |t| format!("{t:.3}")),
        );
        s
    }
}

pub fn write_rows<W: Write>(mut out: W, rows: &[ResultRow]) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    Ok(())
}
