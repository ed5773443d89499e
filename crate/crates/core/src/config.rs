//! Flat key-value config files: one `key = value` pair per line, `#` starts
//! a comment, keys are the config struct field names verbatim.

use crate::channel::{FadingModel, NetworkConfig};
use crate::{Error, Result};

/// Parses config text into ordered (key, value) pairs.
pub fn parse_kv_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::InvalidConfig(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(Error::InvalidConfig(format!("line {}: empty key", lineno + 1)));
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Parses a single `KEY=VALUE` override argument.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    let Some(eq) = arg.find('=') else {
        return Err(Error::InvalidConfig(format!(
            "override `{arg}` must have the form KEY=VALUE"
        )));
    };
    let key = arg[..eq].trim();
    let value = arg[eq + 1..].trim();
    if key.is_empty() {
        return Err(Error::InvalidConfig(format!("override `{arg}` has an empty key")));
    }
    Ok((key.to_string(), value.to_string()))
}

pub(crate) fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::InvalidConfig(format!("key `{key}`: expected a number, got `{value}`")))
}

pub(crate) fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| {
        Error::InvalidConfig(format!("key `{key}`: expected a nonnegative integer, got `{value}`"))
    })
}

pub(crate) fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse::<u64>().map_err(|_| {
        Error::InvalidConfig(format!("key `{key}`: expected an unsigned integer, got `{value}`"))
    })
}

impl NetworkConfig {
    /// Applies one key-value pair. Returns `Ok(false)` when the key does not
    /// belong to this struct, so callers can route it elsewhere.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "num_pairs" => self.num_pairs = parse_usize(key, value)?,
            "area_side_m" => self.area_side_m = parse_f64(key, value)?,
            "link_dist_min_m" => self.link_dist_min_m = parse_f64(key, value)?,
            "link_dist_max_m" => self.link_dist_max_m = parse_f64(key, value)?,
            "tx_power_dbm" => self.tx_power_dbm = parse_f64(key, value)?,
            "noise_psd_dbm_hz" => self.noise_psd_dbm_hz = parse_f64(key, value)?,
            "noise_figure_db" => self.noise_figure_db = parse_f64(key, value)?,
            "antenna_gain_db" => self.antenna_gain_db = parse_f64(key, value)?,
            "carrier_freq_hz" => self.carrier_freq_hz = parse_f64(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = parse_f64(key, value)?,
            "antenna_height_m" => self.antenna_height_m = parse_f64(key, value)?,
            "fading_model" => {
                self.fading_model = match value {
                    "none" => FadingModel::None,
                    "rayleigh_unit_mean" => FadingModel::RayleighUnitMean,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "key `fading_model`: expected none|rayleigh_unit_mean, got `{other}`"
                        )))
                    }
                }
            }
            "rng_seed" => self.rng_seed = parse_u64(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Loads a config from flat key-value text, rejecting unknown keys.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (key, value) in parse_kv_text(text)? {
            if !cfg.apply_key(&key, &value)? {
                return Err(Error::InvalidConfig(format!("unknown config key `{key}`")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
