//! Scenario parameters and unit conversions.
//!
//! A scenario is written as a flat `key = value` text file. Angles are given
//! in degrees, powers in dBm, the radar cross section in dBsm and the carrier
//! in GHz; everything is converted to SI and radians at parse time and
//! [`SystemConfig`] only ever holds linear units.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use thiserror::Error;

use crate::format::fmt_g;

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Every key accepted in a scenario file, in canonical order.
pub const CONFIG_KEYS: [&str; 20] = [
    "n_bs_antennas",
    "n_res",
    "n_ses",
    "codebook_size",
    "symbols_per_beam",
    "tx_power_dbm",
    "noise_power_dbm",
    "carrier_freq_ghz",
    "coherence_time_symbols",
    "otas_sense_time_symbols",
    "d_bs_irs_m",
    "d_irs_user_m",
    "d_irs_target_m",
    "theta_bi_deg",
    "vartheta_bi_deg",
    "theta_it_deg",
    "theta_iu_deg",
    "rcs_dbsm",
    "rng_seed",
    "mc_trials",
];

/// Keys that may be omitted. `otas_sense_time_symbols` then tracks the scan
/// time and `vartheta_bi_deg` is 0.
const OPTIONAL_KEYS: [&str; 2] = ["otas_sense_time_symbols", "vartheta_bi_deg"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given more than once")]
    DuplicateKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("invariant violated for `{key}`: {reason}")]
    InvariantViolation { key: String, reason: String },
}

impl ConfigError {
    /// The config key the error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey(k) | ConfigError::DuplicateKey(k) | ConfigError::MissingKey(k) => Some(k),
            ConfigError::InvalidValue { key, .. } | ConfigError::InvariantViolation { key, .. } => Some(key),
        }
    }

    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidValue {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    fn invariant(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::InvariantViolation {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(p_watts: f64) -> f64 {
    10.0 * p_watts.log10() + 30.0
}

pub fn dbsm_to_sqm(k_dbsm: f64) -> f64 {
    10f64.powf(k_dbsm / 10.0)
}

pub fn sqm_to_dbsm(k_sqm: f64) -> f64 {
    10.0 * k_sqm.log10()
}

/// Carrier wavelength in meters for a frequency in hertz.
pub fn wavelength(carrier_freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_freq_hz
}

/// Physical and protocol parameters of one scenario, in SI units and radians.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS antennas (N).
    pub n_bs_antennas: usize,
    /// IRS passive reflecting elements (M).
    pub n_res: usize,
    /// IRS active sensing elements (M_s).
    pub n_ses: usize,
    /// Beams in the scanning codebook (L).
    pub codebook_size: usize,
    /// Symbols transmitted per beam (K).
    pub symbols_per_beam: usize,
    /// Transmit power, W.
    pub tx_power: f64,
    /// Receiver noise power, W.
    pub noise_power: f64,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    /// Channel coherence time, symbols (T).
    pub coherence_time: usize,
    /// Dedicated sensing scan time for OTAS, symbols. `None` means equal to
    /// the scan time.
    pub otas_sense_time: Option<usize>,
    pub d_bs_irs: f64,
    pub d_irs_user: f64,
    pub d_irs_target: f64,
    /// AoA at the IRS from the BS, rad.
    pub theta_bi: f64,
    /// AoD at the BS towards the IRS, rad.
    pub vartheta_bi: f64,
    /// Target direction seen from the IRS, rad.
    pub theta_it: f64,
    /// User direction seen from the IRS, rad.
    pub theta_iu: f64,
    /// Target radar cross section, m².
    pub rcs: f64,
    pub rng_seed: u64,
    pub mc_trials: usize,
}

impl Default for SystemConfig {
    /// The 28 GHz baseline scenario: 64 BS antennas, 64 REs, 8 SEs, a 64-beam
    /// DFT codebook and a 1000-symbol coherence block.
    fn default() -> Self {
        SystemConfig {
            n_bs_antennas: 64,
            n_res: 64,
            n_ses: 8,
            codebook_size: 64,
            symbols_per_beam: 1,
            tx_power: dbm_to_watts(20.0),
            noise_power: dbm_to_watts(-120.0),
            carrier_freq: 28e9,
            coherence_time: 1000,
            otas_sense_time: None,
            d_bs_irs: 30.0,
            d_irs_user: 10.0,
            d_irs_target: 5.0,
            theta_bi: (-30f64).to_radians(),
            vartheta_bi: 0.0,
            theta_it: 40f64.to_radians(),
            theta_iu: 0.0,
            rcs: dbsm_to_sqm(7.0),
            rng_seed: 0,
            mc_trials: 1000,
        }
    }
}

impl SystemConfig {
    /// Beam scanning time τ = K·L in symbols.
    pub fn scan_time(&self) -> usize {
        self.symbols_per_beam * self.codebook_size
    }

    /// Sensing scan time τ_s used by the OTAS baseline.
    pub fn sense_time(&self) -> usize {
        self.otas_sense_time.unwrap_or_else(|| self.scan_time())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_freq)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive_ints = [
            ("n_bs_antennas", self.n_bs_antennas),
            ("n_res", self.n_res),
            ("n_ses", self.n_ses),
            ("codebook_size", self.codebook_size),
            ("symbols_per_beam", self.symbols_per_beam),
            ("coherence_time_symbols", self.coherence_time),
            ("mc_trials", self.mc_trials),
        ];
        for (key, v) in positive_ints {
            if v == 0 {
                return Err(ConfigError::invalid(key, "must be a positive integer"));
            }
        }
        let positive_reals = [
            ("tx_power_dbm", self.tx_power),
            ("noise_power_dbm", self.noise_power),
            ("carrier_freq_ghz", self.carrier_freq),
            ("d_bs_irs_m", self.d_bs_irs),
            ("d_irs_user_m", self.d_irs_user),
            ("d_irs_target_m", self.d_irs_target),
            ("rcs_dbsm", self.rcs),
        ];
        for (key, v) in positive_reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and positive"));
            }
        }
        let angles = [
            ("theta_bi_deg", self.theta_bi),
            ("vartheta_bi_deg", self.vartheta_bi),
            ("theta_it_deg", self.theta_it),
            ("theta_iu_deg", self.theta_iu),
        ];
        for (key, v) in angles {
            if !(v.is_finite() && v.abs() < FRAC_PI_2) {
                return Err(ConfigError::invalid(key, "angle must lie in (-90, 90) degrees"));
            }
        }
        if self.codebook_size < self.n_res {
            return Err(ConfigError::invariant(
                "codebook_size",
                format!(
                    "codebook size {} is smaller than the number of REs {}",
                    self.codebook_size, self.n_res
                ),
            ));
        }
        let tau = self.scan_time();
        if tau >= self.coherence_time {
            return Err(ConfigError::invariant(
                "coherence_time_symbols",
                format!(
                    "scan time {} must be shorter than the coherence time {}",
                    tau, self.coherence_time
                ),
            ));
        }
        if let Some(tau_s) = self.otas_sense_time {
            if tau + tau_s >= self.coherence_time {
                return Err(ConfigError::invariant(
                    "otas_sense_time_symbols",
                    format!(
                        "scan time {} plus sensing time {} must be shorter than the coherence time {}",
                        tau, tau_s, self.coherence_time
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Renders the config in the scenario file format (file units).
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.file_values() {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    /// `(key, value)` pairs in file units and canonical key order.
    pub fn file_values(&self) -> Vec<(&'static str, String)> {
        let mut v = vec![
            ("n_bs_antennas", self.n_bs_antennas.to_string()),
            ("n_res", self.n_res.to_string()),
            ("n_ses", self.n_ses.to_string()),
            ("codebook_size", self.codebook_size.to_string()),
            ("symbols_per_beam", self.symbols_per_beam.to_string()),
            ("tx_power_dbm", fmt_g(watts_to_dbm(self.tx_power))),
            ("noise_power_dbm", fmt_g(watts_to_dbm(self.noise_power))),
            ("carrier_freq_ghz", fmt_g(self.carrier_freq / 1e9)),
            ("coherence_time_symbols", self.coherence_time.to_string()),
        ];
        if let Some(tau_s) = self.otas_sense_time {
            v.push(("otas_sense_time_symbols", tau_s.to_string()));
        }
        v.extend([
            ("d_bs_irs_m", fmt_g(self.d_bs_irs)),
            ("d_irs_user_m", fmt_g(self.d_irs_user)),
            ("d_irs_target_m", fmt_g(self.d_irs_target)),
            ("theta_bi_deg", fmt_g(self.theta_bi.to_degrees())),
            ("vartheta_bi_deg", fmt_g(self.vartheta_bi.to_degrees())),
            ("theta_it_deg", fmt_g(self.theta_it.to_degrees())),
            ("theta_iu_deg", fmt_g(self.theta_iu.to_degrees())),
            ("rcs_dbsm", fmt_g(sqm_to_dbsm(self.rcs))),
            ("rng_seed", self.rng_seed.to_string()),
            ("mc_trials", self.mc_trials.to_string()),
        ]);
        v
    }
}

/// Key-value pairs exactly as written in a scenario file, before unit
/// conversion. Overrides (`--set key=value`) are applied at this level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: content.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    text: content.to_string(),
                });
            }
            if !CONFIG_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::DuplicateKey(key.to_string()));
            }
        }
        Ok(RawConfig { values })
    }

    /// Sets or replaces one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` override string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: assignment.to_string(),
        })?;
        self.set(key.trim(), value)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        match self.get(key) {
            Some(v) if !v.is_empty() => Ok(v),
            Some(_) => Err(ConfigError::invalid(key, "empty value")),
            None => Err(ConfigError::MissingKey(key.to_string())),
        }
    }

    fn real(&self, key: &str) -> Result<f64, ConfigError> {
        parse_real(key, self.required(key)?)
    }

    fn count(&self, key: &str) -> Result<usize, ConfigError> {
        parse_count(key, self.required(key)?)
    }

    /// Converts to a validated [`SystemConfig`].
    pub fn resolve(&self) -> Result<SystemConfig, ConfigError> {
        // Report the first missing key in canonical order.
        for key in CONFIG_KEYS {
            if !OPTIONAL_KEYS.contains(&key) && !self.values.contains_key(key) {
                return Err(ConfigError::MissingKey(key.to_string()));
            }
        }
        let otas_sense_time = match self.get("otas_sense_time_symbols") {
            Some(v) => Some(parse_count("otas_sense_time_symbols", v)?),
            None => None,
        };
        let vartheta_bi = match self.get("vartheta_bi_deg") {
            Some(v) => parse_real("vartheta_bi_deg", v)?.to_radians(),
            None => 0.0,
        };
        let rng_seed = self
            .required("rng_seed")?
            .parse::<u64>()
            .map_err(|_| ConfigError::invalid("rng_seed", "expected an unsigned 64-bit integer"))?;
        let cfg = SystemConfig {
            n_bs_antennas: self.count("n_bs_antennas")?,
            n_res: self.count("n_res")?,
            n_ses: self.count("n_ses")?,
            codebook_size: self.count("codebook_size")?,
            symbols_per_beam: self.count("symbols_per_beam")?,
            tx_power: dbm_to_watts(self.real("tx_power_dbm")?),
            noise_power: dbm_to_watts(self.real("noise_power_dbm")?),
            carrier_freq: self.real("carrier_freq_ghz")? * 1e9,
            coherence_time: self.count("coherence_time_symbols")?,
            otas_sense_time,
            d_bs_irs: self.real("d_bs_irs_m")?,
            d_irs_user: self.real("d_irs_user_m")?,
            d_irs_target: self.real("d_irs_target_m")?,
            theta_bi: self.real("theta_bi_deg")?.to_radians(),
            vartheta_bi,
            theta_it: self.real("theta_it_deg")?.to_radians(),
            theta_iu: self.real("theta_iu_deg")?.to_radians(),
            rcs: dbsm_to_sqm(self.real("rcs_dbsm")?),
            rng_seed,
            mc_trials: self.count("mc_trials")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_real(key: &str, text: &str) -> Result<f64, ConfigError> {
    let v: f64 = text
        .parse()
        .map_err(|_| ConfigError::invalid(key, format!("`{text}` is not a number")))?;
    if !v.is_finite() {
        return Err(ConfigError::invalid(key, "value must be finite"));
    }
    Ok(v)
}

fn parse_count(key: &str, text: &str) -> Result<usize, ConfigError> {
    let v: usize = text
        .parse()
        .map_err(|_| ConfigError::invalid(key, format!("`{text}` is not a non-negative integer")))?;
    Ok(v)
}

/// Parses a scenario file into a validated config.
pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    RawConfig::parse(text)?.resolve()
}
