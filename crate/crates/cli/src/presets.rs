//! Named parameter sets and the bandwidth syntax (`0.1kappa`, `0.1g2k`, or a
//! bare number in the preset's rate unit).

use std::path::Path;

use fredkin_core::cavity::ModeRates;
use fredkin_core::CavityParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Both(f64),
    PerPolarization { h: f64, v: f64 },
}

impl Rate {
    fn h(self) -> f64 {
        match self {
            Rate::Both(x) => x,
            Rate::PerPolarization { h, .. } => h,
        }
    }

    fn v(self) -> f64 {
        match self {
            Rate::Both(x) => x,
            Rate::PerPolarization { v, .. } => v,
        }
    }
}

/// Rates are quoted as `value / 2 pi` in this unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateUnit {
    #[serde(rename = "MHz")]
    MHz,
    #[serde(rename = "THz")]
    THz,
    /// Already dimensionless.
    #[serde(rename = "kappa")]
    Kappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub g: Rate,
    pub kappa: Rate,
    pub gamma: Rate,
    pub unit: RateUnit,
    /// Default bandwidth, in [`Bandwidth`] syntax.
    pub bandwidth_rule: String,
}

impl Preset {
    pub fn atomic() -> Self {
        Preset {
            name: "atomic".into(),
            g: Rate::Both(32.0),
            kappa: Rate::Both(4.2),
            gamma: Rate::Both(2.6),
            unit: RateUnit::MHz,
            bandwidth_rule: "0.1kappa".into(),
        }
    }

    pub fn solid_state() -> Self {
        Preset {
            name: "solid-state".into(),
            g: Rate::Both(0.66),
            kappa: Rate::Both(6.0),
            gamma: Rate::Both(0.001),
            unit: RateUnit::THz,
            bandwidth_rule: "0.1g2k".into(),
        }
    }

    pub fn builtin(name: &str) -> Result<Self, CliError> {
        match name {
            "atomic" => Ok(Self::atomic()),
            "solid-state" | "solid_state" | "solid" => Ok(Self::solid_state()),
            other => Err(CliError::Usage(format!(
                "unknown preset {other:?} (built-ins: atomic, solid-state)"
            ))),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid preset file {}: {e}", path.display())))
    }

    /// Parameters in the preset's own unit.
    pub fn params(&self) -> Result<CavityParams, CliError> {
        let h = ModeRates { g: self.g.h(), kappa: self.kappa.h(), gamma: self.gamma.h() };
        let v = ModeRates { g: self.g.v(), kappa: self.kappa.v(), gamma: self.gamma.v() };
        Ok(CavityParams::new(h, v)?)
    }

    pub fn default_bandwidth(&self) -> Result<Bandwidth, CliError> {
        Bandwidth::parse(&self.bandwidth_rule)
    }
}

/// A pulse bandwidth, possibly relative to the cavity rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// In the same unit as the rates.
    Absolute(f64),
    /// Multiple of `kappa_h`.
    Kappa(f64),
    /// Multiple of `g_h^2 / kappa_h`.
    G2OverKappa(f64),
}

impl Bandwidth {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let t = text.trim();
        let (number, ctor): (&str, fn(f64) -> Bandwidth) = if let Some(n) = t.strip_suffix("g2k") {
            (n, Bandwidth::G2OverKappa)
        } else if let Some(n) = t.strip_suffix("kappa") {
            (n, Bandwidth::Kappa)
        } else {
            (t, Bandwidth::Absolute)
        };
        let value: f64 = number
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("cannot parse bandwidth {text:?}")))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(CliError::Usage(format!("bandwidth must be positive, got {text:?}")));
        }
        Ok(ctor(value))
    }

    /// Absolute bandwidth for `params`.
    pub fn resolve(&self, params: &CavityParams) -> f64 {
        match *self {
            Bandwidth::Absolute(x) => x,
            Bandwidth::Kappa(x) => x * params.kappa_h,
            Bandwidth::G2OverKappa(x) => x * params.g_h * params.g_h / params.kappa_h,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        let a = Preset::atomic();
        let p = a.params().unwrap();
        assert_eq!((p.g_h, p.kappa_h, p.gamma_h), (32.0, 4.2, 2.6));
        assert!((a.default_bandwidth().unwrap().resolve(&p) - 0.42).abs() < 1e-15);
        let s = Preset::solid_state();
        let p = s.params().unwrap();
        let dw = s.default_bandwidth().unwrap().resolve(&p);
        assert!((dw - 0.1 * 0.66 * 0.66 / 6.0).abs() < 1e-15);
        assert!(Preset::builtin("nope").is_err());
    }

    #[test]
    fn bandwidth_syntax() {
        assert_eq!(Bandwidth::parse("0.1kappa").unwrap(), Bandwidth::Kappa(0.1));
        assert_eq!(Bandwidth::parse("1e-4kappa").unwrap(), Bandwidth::Kappa(1e-4));
        assert_eq!(Bandwidth::parse("0.1g2k").unwrap(), Bandwidth::G2OverKappa(0.1));
        assert_eq!(Bandwidth::parse("0.42").unwrap(), Bandwidth::Absolute(0.42));
        assert!(Bandwidth::parse("fast").is_err());
        assert!(Bandwidth::parse("-1kappa").is_err());
        assert!(Bandwidth::parse("0kappa").is_err());
    }

    #[test]
    fn preset_json_schema() {
        let text = r#"{"name":"lab","g":{"h":10,"v":12},"kappa":2,"gamma":0.5,"unit":"MHz","bandwidth_rule":"0.05kappa"}"#;
        let p: Preset = serde_json::from_str(text).unwrap();
        let params = p.params().unwrap();
        assert_eq!((params.g_h, params.g_v), (10.0, 12.0));
        assert_eq!(p.default_bandwidth().unwrap(), Bandwidth::Kappa(0.05));
        let again: Preset = serde_json::from_str(&serde_json::to_string(&Preset::atomic()).unwrap()).unwrap();
        assert_eq!(again, Preset::atomic());
    }
}
