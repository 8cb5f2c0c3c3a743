use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::modem::{Burst, Modem};
use crate::rng::{stream, Purpose};

/// `Q(x) = erfc(x/√2)/2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Window distances `d[k][m][i] = ‖r_k^(m) − r_k^(i)‖` between candidates
/// that share the true prefix `x₁ … x_{k−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    pub d: Vec<Vec<Vec<f64>>>,
}

impl DistanceTable {
    pub fn n_b(&self) -> usize {
        self.d.len()
    }

    pub fn order(&self) -> usize {
        self.d.first().map_or(0, Vec::len)
    }
}

pub fn distance_table(seq: &Burst, modem: &Modem) -> Result<DistanceTable> {
    let c = &modem.config.constellation;
    let seq = Burst::new(seq.symbols.clone(), seq.n_z, c)?;
    let mut state = modem.stream();
    let mut d = Vec::with_capacity(seq.n_b());
    for &x in &seq.symbols {
        let windows: Vec<Vec<_>> = (0..c.order())
            .into_par_iter()
            .map(|i| state.clone().push_symbol(c.point(i)))
            .collect::<Result<_>>()?;
        let mut dk = vec![vec![0.0; c.order()]; c.order()];
        for m in 0..c.order() {
            for i in m + 1..c.order() {
                let v = windows[m]
                    .iter()
                    .zip(&windows[i])
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                dk[m][i] = v;
                dk[i][m] = v;
            }
        }
        d.push(dk);
        state.push_symbol(c.point(x))?;
    }
    Ok(DistanceTable { d })
}

/// Upper bound, approximation and lower bound on an error probability.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundTriple {
    pub upper: f64,
    pub approx: f64,
    pub lower: f64,
}

impl BoundTriple {
    fn add_scaled(&mut self, other: &BoundTriple, w: f64) {
        self.upper += w * other.upper;
        self.approx += w * other.approx;
        self.lower += w * other.lower;
    }

    fn max_rel_diff(&self, other: &BoundTriple) -> f64 {
        [(self.upper, other.upper), (self.approx, other.approx), (self.lower, other.lower)]
            .iter()
            .map(|&(a, b)| {
                let scale = a.abs().max(b.abs());
                if scale == 0.0 { 0.0 } else { (a - b).abs() / scale }
            })
            .fold(0.0, f64::max)
    }
}

/// Union bound, independence approximation and largest-term lower bound on
/// `P_k^(m)`, with pairwise probabilities `Q(d_k^(m,i)/2σ)`.
///
/// `sigma` is the noise standard deviation per real dimension. For circular
/// noise with `E|n|² = σ_c²` pass `σ_c/√2`.
pub fn pk_bounds(table: &DistanceTable, sigma: f64, k: usize, m: usize) -> Result<BoundTriple> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("σ = {sigma}")));
    }
    let row = table
        .d
        .get(k)
        .and_then(|dk| dk.get(m))
        .ok_or_else(|| Error::InvalidParameter(format!("no entry for k = {k}, m = {m}")))?;
    let mut t = BoundTriple::default();
    let mut log_keep = 0.0;
    let mut d_min = f64::INFINITY;
    for (i, &d) in row.iter().enumerate() {
        if i == m {
            continue;
        }
        let p = q_function(d / (2.0 * sigma));
        t.upper += p;
        log_keep += (-p).ln_1p();
        d_min = d_min.min(d);
    }
    t.lower = if d_min.is_finite() { q_function(d_min / (2.0 * sigma)) } else { 0.0 };
    // 1 − ∏(1 − p) without cancellation; the clamp only absorbs rounding
    t.approx = (-log_keep.exp_m1()).clamp(t.lower, t.upper);
    Ok(t)
}

/// `P_e` of one sequence with each `P_k^(m)` replaced by its bound triple.
pub fn pe_for_sequence(table: &DistanceTable, sigma: f64) -> Result<BoundTriple> {
    let (n_b, m) = (table.n_b(), table.order());
    if n_b == 0 || m == 0 {
        return Err(Error::EmptySignal);
    }
    let w = 1.0 / (n_b * m) as f64;
    let mut acc = BoundTriple::default();
    for k in 0..n_b {
        for mm in 0..m {
            acc.add_scaled(&pk_bounds(table, sigma, k, mm)?, w);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Largest relative change of the running means over the window.
    pub rel_tol: f64,
    /// Number of most recent sequences the change is measured over.
    pub window: usize,
    pub max_sequences: usize,
}

impl Default for Convergence {
    fn default() -> Self {
        Self { rel_tol: 0.01, window: 5, max_sequences: 200 }
    }
}

/// Running average of the bound triple over sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiAnalytic {
    pub estimate: BoundTriple,
    pub sequences: usize,
    /// Running mean after each sequence.
    pub history: Vec<BoundTriple>,
}

/// Random bursts of the modem's size drawn from independent streams.
pub fn random_sequences(modem: &Modem, seed: u64) -> impl FnMut(u64) -> Result<Burst> + '_ {
    move |index| {
        let c = &modem.config;
        Ok(Burst::random(&c.constellation, c.n_b, c.n_z, &mut stream(seed, index, Purpose::Sequences)))
    }
}

/// Averages the per-sequence triple over sequences from `source` until the
/// running means of all three change by less than `rel_tol` over the last
/// `window` sequences.
pub fn pe_semianalytic<S>(modem: &Modem, sigma: f64, mut source: S, conv: &Convergence) -> Result<SemiAnalytic>
where
    S: FnMut(u64) -> Result<Burst>,
{
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("σ = {sigma}")));
    }
    if conv.window == 0 || conv.max_sequences == 0 || !(conv.rel_tol > 0.0) {
        return Err(Error::InvalidParameter("convergence needs window, max_sequences and rel_tol > 0".into()));
    }
    let mut sum = BoundTriple::default();
    let mut history: Vec<BoundTriple> = Vec::new();
    for n in 1..=conv.max_sequences {
        let seq = source(n as u64 - 1)?;
        sum.add_scaled(&pe_for_sequence(&distance_table(&seq, modem)?, sigma)?, 1.0);
        let mut mean = BoundTriple::default();
        mean.add_scaled(&sum, 1.0 / n as f64);
        history.push(mean);
        if n > conv.window {
            let recent = &history[n - 1 - conv.window..n - 1];
            if recent.iter().all(|h| mean.max_rel_diff(h) < conv.rel_tol) {
                return Ok(SemiAnalytic { estimate: mean, sequences: n, history });
            }
        }
    }
    Err(Error::NotConverged {
        sequences: conv.max_sequences,
        estimate: history.last().map_or(0.0, |h| h.approx),
    })
}
