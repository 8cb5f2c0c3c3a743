//! Experiment configuration: flat `section.key = value` text.
//!
//! ```text
//! # 16QAM bursts over the AWGN ansatz
//! modem.m = 16
//! modem.n_b = 32
//! fiber.length_km = 2000
//! channel.kind = awgn
//! detector.types = df-bnft, genie-df
//! sweep.power_dbm = -14, -12, -10
//! ```
//!
//! Lines starting with `#` are comments. Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nfdm_core::analysis::PbRule;
use nfdm_core::channel::{db_per_km_to_neper_per_m, FiberLink};
use nfdm_core::detection::MAX_SEQUENCES;
use nfdm_core::modem::{Constellation, ModemConfig, PulseShape};
use nfdm_core::nft::GlmeOptions;

/// A configuration problem, tied to a line of the source when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Split-step fiber with distributed ASE noise.
    Fiber,
    /// `r̃(t) = r(t) + n(t)` with white noise of the link's ASE density.
    Awgn,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Fiber => "fiber",
            ChannelKind::Awgn => "awgn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Fnft,
    DfBnft,
    GenieDf,
    Optimum,
    /// Conventional QAM with linear dispersion compensation.
    Edc,
    /// Conventional QAM with digital backpropagation.
    Dbp,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Fnft => "fnft",
            DetectorKind::DfBnft => "df-bnft",
            DetectorKind::GenieDf => "genie-df",
            DetectorKind::Optimum => "optimum",
            DetectorKind::Edc => "edc",
            DetectorKind::Dbp => "dbp",
        }
    }

    pub fn is_conventional(self) -> bool {
        matches!(self, DetectorKind::Edc | DetectorKind::Dbp)
    }
}

impl FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "fnft" => DetectorKind::Fnft,
            "df-bnft" => DetectorKind::DfBnft,
            "genie-df" => DetectorKind::GenieDf,
            "optimum" => DetectorKind::Optimum,
            "edc" => DetectorKind::Edc,
            "dbp" => DetectorKind::Dbp,
            other => return Err(format!("unknown detector `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModemParams {
    pub m: usize,
    pub n_b: usize,
    pub n_z: usize,
    /// Symbol rate in Bd.
    pub symbol_rate: f64,
    pub width_param: f64,
    pub nu: usize,
    pub glme_refinement: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub kind: ChannelKind,
    /// Split-step size in metres.
    pub dz: f64,
    /// DAC bandwidth in Hz; `None` disables the filter.
    pub dac_bandwidth: Option<f64>,
    pub dbp_span: f64,
    pub dbp_steps_per_span: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    pub kinds: Vec<DetectorKind>,
    pub phase_comp: bool,
    pub fnft_oversampling: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloParams {
    pub min_bursts: usize,
    pub max_bursts: usize,
    pub target_symbol_errors: usize,
    pub convergence_tol: f64,
    pub convergence_window: usize,
    pub max_sequences: usize,
    /// Attach the semianalytic triple to DF rows.
    pub bounds: bool,
    pub pb_rule: PbRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub modem: ModemParams,
    pub fiber: FiberLink,
    pub channel: ChannelParams,
    pub detector: DetectorParams,
    pub powers_dbm: Vec<f64>,
    pub monte_carlo: MonteCarloParams,
    /// Prefix length of the causality demonstration.
    pub causality_prefix: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            modem: ModemParams {
                m: 16,
                n_b: 32,
                n_z: 32,
                symbol_rate: 50e9,
                width_param: 12.5,
                nu: 8,
                glme_refinement: 2,
            },
            fiber: FiberLink::default(),
            channel: ChannelParams {
                kind: ChannelKind::Awgn,
                dz: 100.0,
                dac_bandwidth: Some(100e9),
                dbp_span: 100e3,
                dbp_steps_per_span: 100,
            },
            detector: DetectorParams { kinds: vec![DetectorKind::DfBnft], phase_comp: false, fnft_oversampling: 4 },
            powers_dbm: vec![-10.0],
            monte_carlo: MonteCarloParams {
                min_bursts: 16,
                max_bursts: 2000,
                target_symbol_errors: 200,
                convergence_tol: 0.01,
                convergence_window: 5,
                max_sequences: 200,
                bounds: false,
                pb_rule: PbRule::PerSymbol,
            },
            causality_prefix: 6,
            seed: 1,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::at(line, format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::at(line, format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|v| parse_value(line, key, v)).collect()
}

impl ExperimentConfig {
    /// Parses and validates configuration text; keys not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut cfg = Self::default();
        let mut line_of: BTreeMap<&'static str, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.split('#').next().unwrap_or("").trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(ConfigError::at(line, format!("`{key}` already set on line {first}")));
            }
            let slot = cfg.apply(line, key, value)?;
            line_of.insert(slot, line);
        }
        cfg.validate_with(|key| line_of.get(key).copied())?;
        Ok(cfg)
    }

    fn apply(&mut self, line: usize, key: &str, value: &str) -> Result<&'static str, ConfigError> {
        macro_rules! set {
            ($field:expr, $name:literal) => {{
                $field = parse_value(line, key, value)?;
                $name
            }};
        }
        let slot = match key {
            "modem.m" => set!(self.modem.m, "modem.m"),
            "modem.n_b" => set!(self.modem.n_b, "modem.n_b"),
            "modem.n_z" => set!(self.modem.n_z, "modem.n_z"),
            "modem.symbol_rate_gbd" => {
                self.modem.symbol_rate = parse_value::<f64>(line, key, value)? * 1e9;
                "modem.symbol_rate_gbd"
            }
            "modem.pulse_width_param" => set!(self.modem.width_param, "modem.pulse_width_param"),
            "modem.samples_per_symbol" => set!(self.modem.nu, "modem.samples_per_symbol"),
            "modem.glme_refinement" => set!(self.modem.glme_refinement, "modem.glme_refinement"),
            "fiber.beta2_ps2_per_km" => {
                self.fiber.beta2 = parse_value::<f64>(line, key, value)? * 1e-27;
                "fiber.beta2_ps2_per_km"
            }
            "fiber.gamma_per_w_km" => {
                self.fiber.gamma = parse_value::<f64>(line, key, value)? * 1e-3;
                "fiber.gamma_per_w_km"
            }
            "fiber.alpha_db_per_km" => {
                self.fiber.alpha_att = db_per_km_to_neper_per_m(parse_value(line, key, value)?);
                "fiber.alpha_db_per_km"
            }
            "fiber.length_km" => {
                self.fiber.length = parse_value::<f64>(line, key, value)? * 1e3;
                "fiber.length_km"
            }
            "fiber.eta_sp" => set!(self.fiber.eta_sp, "fiber.eta_sp"),
            "fiber.carrier_thz" => {
                self.fiber.carrier_freq = parse_value::<f64>(line, key, value)? * 1e12;
                "fiber.carrier_thz"
            }
            "channel.kind" => {
                self.channel.kind = match value {
                    "fiber" => ChannelKind::Fiber,
                    "awgn" => ChannelKind::Awgn,
                    _ => return Err(ConfigError::at(line, format!("`{key}`: expected fiber or awgn, got `{value}`"))),
                };
                "channel.kind"
            }
            "channel.dz_km" => {
                self.channel.dz = parse_value::<f64>(line, key, value)? * 1e3;
                "channel.dz_km"
            }
            "channel.dac_bandwidth_ghz" => {
                let v: f64 = parse_value(line, key, value)?;
                self.channel.dac_bandwidth = (v > 0.0).then_some(v * 1e9);
                "channel.dac_bandwidth_ghz"
            }
            "channel.dbp_span_km" => {
                self.channel.dbp_span = parse_value::<f64>(line, key, value)? * 1e3;
                "channel.dbp_span_km"
            }
            "channel.dbp_steps_per_span" => set!(self.channel.dbp_steps_per_span, "channel.dbp_steps_per_span"),
            "detector.types" | "detector.type" => {
                self.detector.kinds = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|e: String| ConfigError::at(line, e)))
                    .collect::<Result<_, _>>()?;
                "detector.types"
            }
            "detector.phase_comp" => {
                self.detector.phase_comp = parse_bool(line, key, value)?;
                "detector.phase_comp"
            }
            "detector.fnft_oversampling" => set!(self.detector.fnft_oversampling, "detector.fnft_oversampling"),
            "sweep.power_dbm" => {
                self.powers_dbm = parse_list(line, key, value)?;
                "sweep.power_dbm"
            }
            "monte_carlo.min_bursts" => set!(self.monte_carlo.min_bursts, "monte_carlo.min_bursts"),
            "monte_carlo.max_bursts" => set!(self.monte_carlo.max_bursts, "monte_carlo.max_bursts"),
            "monte_carlo.target_symbol_errors" => {
                set!(self.monte_carlo.target_symbol_errors, "monte_carlo.target_symbol_errors")
            }
            "monte_carlo.convergence_tol" => set!(self.monte_carlo.convergence_tol, "monte_carlo.convergence_tol"),
            "monte_carlo.convergence_window" => {
                set!(self.monte_carlo.convergence_window, "monte_carlo.convergence_window")
            }
            "monte_carlo.max_sequences" => set!(self.monte_carlo.max_sequences, "monte_carlo.max_sequences"),
            "monte_carlo.bounds" => {
                self.monte_carlo.bounds = parse_bool(line, key, value)?;
                "monte_carlo.bounds"
            }
            "monte_carlo.pb_rule" => {
                self.monte_carlo.pb_rule = match value {
                    "per-symbol" => PbRule::PerSymbol,
                    "gray" => PbRule::Gray,
                    _ => return Err(ConfigError::at(line, format!("`{key}`: expected per-symbol or gray"))),
                };
                "monte_carlo.pb_rule"
            }
            "causality.prefix" => set!(self.causality_prefix, "causality.prefix"),
            "seed" => set!(self.seed, "seed"),
            _ => return Err(ConfigError::at(line, format!("unknown key `{key}`"))),
        };
        Ok(slot)
    }

    /// Checks ranges and cross-field constraints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with(|_| None)
    }

    fn validate_with(&self, line_of: impl Fn(&'static str) -> Option<usize>) -> Result<(), ConfigError> {
        let fail = |key: &'static str, msg: String| ConfigError { line: line_of(key), message: format!("`{key}`: {msg}") };
        let m = &self.modem;
        if ![4, 16, 64].contains(&m.m) {
            return Err(fail("modem.m", format!("{} is not one of 4, 16, 64", m.m)));
        }
        if m.n_b == 0 {
            return Err(fail("modem.n_b", "must be at least 1".into()));
        }
        if !(m.symbol_rate > 0.0 && m.symbol_rate.is_finite()) {
            return Err(fail("modem.symbol_rate_gbd", "must be positive".into()));
        }
        if !(m.width_param > 0.0) {
            return Err(fail("modem.pulse_width_param", "must be positive".into()));
        }
        if m.nu < 2 {
            return Err(fail("modem.samples_per_symbol", "must be at least 2".into()));
        }
        if m.glme_refinement == 0 {
            return Err(fail("modem.glme_refinement", "must be at least 1".into()));
        }
        let f = &self.fiber;
        if f.beta2 == 0.0 || !f.beta2.is_finite() {
            return Err(fail("fiber.beta2_ps2_per_km", "must be nonzero".into()));
        }
        if !(f.gamma > 0.0) {
            return Err(fail("fiber.gamma_per_w_km", "must be positive".into()));
        }
        if !(f.alpha_att >= 0.0) {
            return Err(fail("fiber.alpha_db_per_km", "must be non-negative".into()));
        }
        if !(f.length >= 0.0) {
            return Err(fail("fiber.length_km", "must be non-negative".into()));
        }
        if !(f.eta_sp >= 1.0) {
            return Err(fail("fiber.eta_sp", "must be at least 1".into()));
        }
        if !(f.carrier_freq > 0.0) {
            return Err(fail("fiber.carrier_thz", "must be positive".into()));
        }
        let c = &self.channel;
        if !(c.dz > 0.0) {
            return Err(fail("channel.dz_km", "must be positive".into()));
        }
        if c.kind == ChannelKind::Fiber && f.length > 0.0 {
            let steps = f.length / c.dz;
            if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
                return Err(fail("channel.dz_km", format!("does not divide the {} km link", f.length / 1e3)));
            }
        }
        if !(c.dbp_span > 0.0) || c.dbp_steps_per_span == 0 {
            return Err(fail("channel.dbp_steps_per_span", "span and steps must be positive".into()));
        }
        let d = &self.detector;
        if d.kinds.is_empty() {
            return Err(fail("detector.types", "no detector given".into()));
        }
        if d.fnft_oversampling == 0 {
            return Err(fail("detector.fnft_oversampling", "must be at least 1".into()));
        }
        if d.kinds.contains(&DetectorKind::Optimum) {
            let space = (m.m as f64).powi(m.n_b as i32);
            if space > MAX_SEQUENCES {
                return Err(fail(
                    "detector.types",
                    format!("optimum detection needs M^N_b ≤ 1e5, got {}^{} = {space:.3e}", m.m, m.n_b),
                ));
            }
        }
        if d.kinds.iter().any(|k| k.is_conventional()) && c.kind != ChannelKind::Fiber {
            return Err(fail("detector.types", "edc and dbp need channel.kind = fiber".into()));
        }
        if self.powers_dbm.is_empty() || self.powers_dbm.iter().any(|p| !p.is_finite()) {
            return Err(fail("sweep.power_dbm", "need at least one finite power".into()));
        }
        let mc = &self.monte_carlo;
        if mc.max_bursts == 0 || mc.min_bursts > mc.max_bursts {
            return Err(fail("monte_carlo.max_bursts", "need 0 < min_bursts ≤ max_bursts".into()));
        }
        if !(mc.convergence_tol > 0.0) {
            return Err(fail("monte_carlo.convergence_tol", "must be positive".into()));
        }
        if mc.convergence_window == 0 || mc.max_sequences == 0 {
            return Err(fail("monte_carlo.convergence_window", "window and max_sequences must be positive".into()));
        }
        if self.causality_prefix == 0 {
            return Err(fail("causality.prefix", "must be at least 1".into()));
        }
        self.modem_config().map_err(|e| ConfigError::global(e.to_string()))?;
        Ok(())
    }

    pub fn symbol_time(&self) -> f64 {
        1.0 / self.modem.symbol_rate
    }

    /// Modem settings for this experiment; precompensation covers the whole link.
    pub fn modem_config(&self) -> nfdm_core::Result<ModemConfig> {
        let m = &self.modem;
        let pulse = PulseShape::gaussian(m.width_param, self.symbol_time())?;
        let mut cfg = ModemConfig::new(Constellation::qam(m.m)?, pulse, m.n_b, m.n_z, m.nu, &self.fiber)?;
        cfg.glme = GlmeOptions { refinement: m.glme_refinement, ..cfg.glme };
        Ok(cfg)
    }
}
