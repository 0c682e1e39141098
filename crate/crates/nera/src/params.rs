//! Model parameters, validation, presets, and flat key-value config I/O.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigDoc, ConfigError};

/// The eleven positive model parameters.
///
/// * `beta1` — growth rate of non-users (prey) in the absence of users; also
///   the rate of moving in and out of the non-user category. This is the
///   bifurcation parameter of the sweep tooling.
/// * `beta2..beta4` — rates at which E, R, A users quit.
/// * `r1, r2, r3` — influence (predation) rates of E on N, R on E, A on R.
/// * `alpha1, alpha2` — influence rates of A and R on N.
/// * `gamma1` — influence rate of A on E.
/// * `h` — shared half-saturation of the Holling responses, conventionally
///   fixed to 1/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub gamma1: f64,
    pub h: f64,
}

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Config keys in canonical output order.
pub const PARAM_KEYS: [&str; 11] = [
    "beta1", "beta2", "beta3", "beta4", "r1", "r2", "r3", "alpha1", "alpha2", "gamma1", "h",
];

impl ParameterSet {
    /// Calibrated marijuana-consumption parameters for Colorado
    /// (estimated influence/abandon rates, h fixed to 1/2).
    pub fn colorado() -> Self {
        ParameterSet {
            beta1: 0.042,
            beta2: 0.016,
            beta3: 0.052,
            beta4: 0.047,
            r1: 0.44,
            r2: 0.193,
            r3: 0.029,
            alpha1: 0.103,
            alpha2: 0.043,
            gamma1: 0.031,
            h: 0.5,
        }
    }

    /// Calibrated marijuana-consumption parameters for Washington.
    pub fn washington() -> Self {
        ParameterSet {
            beta1: 0.015,
            beta2: 0.03,
            beta3: 0.066,
            beta4: 0.039,
            r1: 0.38,
            r2: 0.142,
            r3: 0.034,
            alpha1: 0.099,
            alpha2: 0.112,
            gamma1: 0.032,
            h: 0.5,
        }
    }

    /// Look up a bundled preset by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "colorado" => Some(Self::colorado()),
            "washington" => Some(Self::washington()),
            _ => None,
        }
    }

    pub const PRESET_NAMES: [&'static str; 2] = ["colorado", "washington"];

    /// Copy with a different `beta1`; the sweep tooling's parameter axis.
    pub fn with_beta1(mut self, beta1: f64) -> Self {
        self.beta1 = beta1;
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "beta1" => self.beta1,
            "beta2" => self.beta2,
            "beta3" => self.beta3,
            "beta4" => self.beta4,
            "r1" => self.r1,
            "r2" => self.r2,
            "r3" => self.r3,
            "alpha1" => self.alpha1,
            "alpha2" => self.alpha2,
            "gamma1" => self.gamma1,
            "h" => self.h,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match key {
            "beta1" => self.beta1 = value,
            "beta2" => self.beta2 = value,
            "beta3" => self.beta3 = value,
            "beta4" => self.beta4 = value,
            "r1" => self.r1 = value,
            "r2" => self.r2 = value,
            "r3" => self.r3 = value,
            "alpha1" => self.alpha1 = value,
            "alpha2" => self.alpha2 = value,
            "gamma1" => self.gamma1 = value,
            "h" => self.h = value,
            _ => return false,
        }
        true
    }

    /// All eleven parameters strictly positive.
    pub fn validate(&self) -> Result<(), ParamError> {
        for &key in PARAM_KEYS.iter() {
            let value = self.get(key).unwrap();
            if !(value > 0.0) {
                let name = PARAM_KEYS.iter().find(|&&k| k == key).unwrap();
                return Err(ParamError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// Parse from a flat `key = value` config document.
    ///
    /// All eleven keys are required; unknown keys are rejected with their
    /// line number.
    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let doc = ConfigDoc::parse(text)?;
        doc.require_known(&PARAM_KEYS)?;
        let mut p = ParameterSet::colorado();
        for &key in PARAM_KEYS.iter() {
            let value = doc.f64(key)?;
            p.set(key, value);
        }
        if let Err(e) = p.validate() {
            return Err(ConfigError::Invalid { msg: e.to_string() });
        }
        Ok(p)
    }

    /// Serialize to the flat config format accepted by [`Self::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for &key in PARAM_KEYS.iter() {
            out.push_str(&format!("{key} = {}\n", self.get(key).unwrap()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        ParameterSet::colorado().validate().unwrap();
        ParameterSet::washington().validate().unwrap();
        assert!(ParameterSet::preset("colorado").is_some());
        assert!(ParameterSet::preset("oregon").is_none());
    }

    #[test]
    fn config_round_trip() {
        let p = ParameterSet::washington();
        let q = ParameterSet::from_config_str(&p.to_config_string()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn missing_key_is_rejected() {
        let text = "beta1 = 0.1\n";
        let err = ParameterSet::from_config_str(text).unwrap_err();
        assert!(err.to_string().contains("beta2"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let mut text = ParameterSet::colorado().to_config_string();
        text.push_str("betamax = 1\n");
        let err = ParameterSet::from_config_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("betamax") && msg.contains("12"), "{msg}");
    }

    #[test]
    fn nonpositive_parameter_is_rejected() {
        let mut text = String::new();
        for &key in PARAM_KEYS.iter() {
            let v = if key == "r2" { 0.0 } else { 0.1 };
            text.push_str(&format!("{key} = {v}\n"));
        }
        assert!(ParameterSet::from_config_str(&text).is_err());
    }
}
