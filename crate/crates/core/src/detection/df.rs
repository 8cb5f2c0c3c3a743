use rayon::prelude::*;

use super::{argmin, sq_dist, DecisionTrace, ReceivedWindows};
use crate::error::{Error, Result};
use crate::modem::{Burst, Modem, SymbolStream};

/// Largest sequence space the exhaustive detector accepts.
pub const MAX_SEQUENCES: f64 = 1e5;

fn check_shape(rx: &ReceivedWindows, modem: &Modem) -> Result<()> {
    if rx.nu() != modem.config.nu || rx.n_b() == 0 {
        return Err(Error::InvalidParameter(format!(
            "received windows ({} × {}) do not match the modem (ν = {})",
            rx.n_b(),
            rx.nu(),
            modem.config.nu
        )));
    }
    Ok(())
}

/// Runs the decision-feedback recursion; `feedback(k, decided)` chooses the
/// symbol whose branch continues to window `k + 1`.
fn feedback_detect<F>(rx: &ReceivedWindows, modem: &Modem, feedback: F) -> Result<DecisionTrace>
where
    F: Fn(usize, usize) -> usize,
{
    check_shape(rx, modem)?;
    let c = &modem.config.constellation;
    let mut state = modem.stream();
    let mut decided = Vec::with_capacity(rx.n_b());
    let mut distances = Vec::with_capacity(rx.n_b());
    for (k, window) in rx.windows.iter().enumerate() {
        let branches: Vec<(f64, SymbolStream)> = (0..c.order())
            .into_par_iter()
            .map(|i| {
                let mut st = state.clone();
                let w = st.push_symbol(c.point(i))?;
                Ok((sq_dist(window, &w), st))
            })
            .collect::<Result<_>>()?;
        let d: Vec<f64> = branches.iter().map(|b| b.0).collect();
        let x_hat = argmin(&d);
        let next = feedback(k, x_hat);
        state = branches.into_iter().nth(next).expect("branch index in range").1;
        decided.push(x_hat);
        distances.push(d);
    }
    Ok(DecisionTrace { decided, distances, phase_offset: None })
}

/// Decision-feedback BNFT detection: for each window, the candidate built on
/// the already decided symbols with the smallest squared distance wins.
pub fn df_bnft_detect(rx: &ReceivedWindows, modem: &Modem) -> Result<DecisionTrace> {
    feedback_detect(rx, modem, |_, x_hat| x_hat)
}

/// As [`df_bnft_detect`] but the candidates extend the true prefix.
pub fn genie_df_detect(rx: &ReceivedWindows, modem: &Modem, truth: &Burst) -> Result<DecisionTrace> {
    if truth.n_b() < rx.n_b() {
        return Err(Error::InvalidParameter("genie sequence shorter than the received burst".into()));
    }
    feedback_detect(rx, modem, |k, _| truth.symbols[k])
}

/// Maximum-likelihood sequence detection by exhaustive search of all `M^{N_b}`
/// sequences; the metric is the sum of the per-window squared distances.
pub fn optimum_sequence_detect(rx: &ReceivedWindows, modem: &Modem) -> Result<Burst> {
    check_shape(rx, modem)?;
    let m = modem.config.constellation.order();
    let space = (m as f64).powi(rx.n_b() as i32);
    if space > MAX_SEQUENCES {
        return Err(Error::SequenceSpaceTooLarge(space));
    }
    struct Search<'a> {
        rx: &'a ReceivedWindows,
        modem: &'a Modem,
        path: Vec<usize>,
        best: (f64, Vec<usize>),
    }
    impl Search<'_> {
        fn visit(&mut self, state: &SymbolStream, metric: f64) -> Result<()> {
            let k = self.path.len();
            if k == self.rx.n_b() {
                if metric < self.best.0 {
                    self.best = (metric, self.path.clone());
                }
                return Ok(());
            }
            let c = &self.modem.config.constellation;
            for i in 0..c.order() {
                let mut st = state.clone();
                let w = st.push_symbol(c.point(i))?;
                self.path.push(i);
                self.visit(&st, metric + sq_dist(&self.rx.windows[k], &w))?;
                self.path.pop();
            }
            Ok(())
        }
    }
    let mut search = Search { rx, modem, path: Vec::new(), best: (f64::INFINITY, Vec::new()) };
    search.visit(&modem.stream(), 0.0)?;
    Burst::new(search.best.1, modem.config.n_z, &modem.config.constellation)
}
