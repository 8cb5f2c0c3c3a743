use crate::error::{Error, Result};
use crate::signal::{ComplexEnvelope, UnitMode};

/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Physical fiber parameters, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberLink {
    /// Group-velocity dispersion β₂ (s²/m).
    pub beta2: f64,
    /// Kerr coefficient γ (1/(W·m)).
    pub gamma: f64,
    /// Power attenuation α (1/m).
    pub alpha_att: f64,
    /// Length L (m).
    pub length: f64,
    /// Spontaneous emission factor η_sp.
    pub eta_sp: f64,
    /// Optical carrier (Hz), sets the photon energy.
    pub carrier_freq: f64,
}

impl Default for FiberLink {
    /// Standard single-mode fiber, 2000 km with ideal distributed amplification.
    fn default() -> Self {
        Self {
            beta2: -20.39e-27,
            gamma: 1.22e-3,
            alpha_att: db_per_km_to_neper_per_m(0.2),
            length: 2.0e6,
            eta_sp: 4.0,
            carrier_freq: 193.4e12,
        }
    }
}

pub fn db_per_km_to_neper_per_m(db_per_km: f64) -> f64 {
    db_per_km / (10.0 * std::f64::consts::LOG10_E) / 1e3
}

impl FiberLink {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.beta2.is_finite() && self.beta2 != 0.0) {
            return bad("beta2 must be finite and nonzero");
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad("gamma must be non-negative");
        }
        if !(self.alpha_att.is_finite() && self.alpha_att >= 0.0) {
            return bad("attenuation must be non-negative");
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad("length must be positive");
        }
        if !(self.eta_sp >= 1.0) {
            return bad("eta_sp must be at least 1");
        }
        if !(self.carrier_freq > 0.0) {
            return bad("carrier frequency must be positive");
        }
        Ok(())
    }

    /// ASE power spectral density added per unit length (W/Hz/m), one polarization.
    pub fn ase_psd_per_meter(&self) -> f64 {
        self.eta_sp * PLANCK * self.carrier_freq * self.alpha_att
    }

    /// Accumulated ASE PSD over the whole link, `η_sp·h·f_c·α·L` (W/Hz).
    pub fn ase_psd(&self) -> f64 {
        self.ase_psd_per_meter() * self.length
    }

    pub fn normalization(&self, t0: f64) -> Result<Normalization> {
        Normalization::new(self, t0)
    }
}

/// Scale factors between physical and normalized NLSE units.
///
/// A physical envelope `A(T, Z)` maps to `q(t, z) = conj(A)/√P0` with
/// `t = T/T0`, `z = Z/Z0`, so that `j q_z = q_tt + 2σ|q|²q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub t0: f64,
    pub z0: f64,
    pub p0: f64,
}

impl Normalization {
    pub fn new(link: &FiberLink, t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("T0 = {t0}")));
        }
        if link.gamma <= 0.0 {
            return Err(Error::InvalidParameter("normalization needs gamma > 0".into()));
        }
        let b2 = link.beta2.abs();
        Ok(Self { t0, z0: 2.0 * t0 * t0 / b2, p0: b2 / (link.gamma * t0 * t0) })
    }

    /// Normalization with `T0 = T_s/2`.
    pub fn for_symbol_time(link: &FiberLink, t_s: f64) -> Result<Self> {
        Self::new(link, 0.5 * t_s)
    }

    pub fn length(&self, meters: f64) -> f64 {
        meters / self.z0
    }

    /// Energy (J) of a normalized energy value.
    pub fn energy(&self, normalized: f64) -> f64 {
        normalized * self.p0 * self.t0
    }

    /// Normalized PSD of a physical PSD `N0` (W/Hz).
    pub fn psd(&self, n0: f64) -> f64 {
        n0 / (self.p0 * self.t0)
    }

    pub fn normalize(&self, sig: &ComplexEnvelope) -> Result<ComplexEnvelope> {
        sig.ensure_mode(UnitMode::Physical)?;
        let g = 1.0 / self.p0.sqrt();
        ComplexEnvelope::new(
            sig.samples.iter().map(|a| a.conj() * g).collect(),
            sig.t0 / self.t0,
            sig.dt / self.t0,
            UnitMode::Normalized,
        )
    }

    pub fn denormalize(&self, sig: &ComplexEnvelope) -> Result<ComplexEnvelope> {
        sig.ensure_mode(UnitMode::Normalized)?;
        let g = self.p0.sqrt();
        ComplexEnvelope::new(
            sig.samples.iter().map(|q| q.conj() * g).collect(),
            sig.t0 * self.t0,
            sig.dt * self.t0,
            UnitMode::Physical,
        )
    }
}
