//! Scenario configuration: the TOML file format, flag overrides and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::channel::ArrayGeometry;
use crate::error::{Error, Result};

/// SNR in dB: one operating point or a sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrSetting {
    Single(f64),
    Grid(Vec<f64>),
}

impl SnrSetting {
    /// The operating point for single-realization commands (first grid entry).
    pub fn point(&self) -> f64 {
        match self {
            SnrSetting::Single(v) => *v,
            SnrSetting::Grid(g) => g[0],
        }
    }

    /// The sweep grid, or `fallback` when only one point is configured.
    pub fn grid_or(&self, fallback: &[f64]) -> Vec<f64> {
        match self {
            SnrSetting::Single(_) => fallback.to_vec(),
            SnrSetting::Grid(g) => g.clone(),
        }
    }
}

impl FromStr for SnrSetting {
    type Err = Error;

    /// Accepts `10`, `-10:2:20` (start:step:stop inclusive) or `0,5,10`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains(':') || s.contains(',') {
            parse_grid(s).map(SnrSetting::Grid)
        } else {
            s.parse::<f64>()
                .map(SnrSetting::Single)
                .map_err(|_| Error::config("snr_db", format!("cannot parse `{s}`")))
        }
    }
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::config("grid", format!("cannot parse grid `{s}`"));
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, step, stop] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| start + step * i as f64).collect())
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

/// ADPAR threshold: an absolute value or the per-realization bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSetting {
    Value(f64),
    /// Resolves to λ_max of the realization.
    Max,
    /// Resolves to λ_min of the realization.
    Min,
}

impl GammaSetting {
    pub fn resolve(self, lambda_min: f64, lambda_max: f64) -> f64 {
        match self {
            GammaSetting::Value(v) => v,
            GammaSetting::Max => lambda_max,
            GammaSetting::Min => lambda_min,
        }
    }

    /// Short label used in sweep identifiers.
    pub fn label(self) -> String {
        match self {
            GammaSetting::Value(v) => format!("{v}"),
            GammaSetting::Max => "max".into(),
            GammaSetting::Min => "min".into(),
        }
    }
}

impl fmt::Display for GammaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for GammaSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "max" => Ok(GammaSetting::Max),
            "min" => Ok(GammaSetting::Min),
            other => other.parse::<f64>().map(GammaSetting::Value).map_err(|_| {
                Error::config(
                    "gamma",
                    format!("expected a number, `max` or `min`, got `{other}`"),
                )
            }),
        }
    }
}

impl Serialize for GammaSetting {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GammaSetting::Value(v) => ser.serialize_f64(*v),
            GammaSetting::Max => ser.serialize_str("max"),
            GammaSetting::Min => ser.serialize_str("min"),
        }
    }
}

impl<'de> Deserialize<'de> for GammaSetting {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct GammaVisitor;

        impl Visitor<'_> for GammaVisitor {
            type Value = GammaSetting;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"max\", \"min\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<GammaSetting, E> {
                Ok(GammaSetting::Value(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<GammaSetting, E> {
                Ok(GammaSetting::Value(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<GammaSetting, E> {
                Ok(GammaSetting::Value(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<GammaSetting, E> {
                match v {
                    "max" => Ok(GammaSetting::Max),
                    "min" => Ok(GammaSetting::Min),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }

        de.deserialize_any(GammaVisitor)
    }
}

/// All scenario parameters. Angles are in degrees here and nowhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub n_s: usize,
    /// True transmitter direction.
    pub phi_deg: f64,
    /// Decoy direction.
    pub phi_hat_deg: f64,
    pub kappa_db: f64,
    pub power_watts: f64,
    pub snr_db: SnrSetting,
    pub gamma: GammaSetting,
    pub spacing_wavelengths: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub grid_points: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_t: 16,
            n_r: 8,
            n_s: 4,
            phi_deg: 60.0,
            phi_hat_deg: 90.0,
            kappa_db: 0.0,
            power_watts: 1.0,
            snr_db: SnrSetting::Single(10.0),
            gamma: GammaSetting::Value(5.0),
            spacing_wavelengths: 0.5,
            trials: 500,
            base_seed: 1,
            grid_points: 1801,
        }
    }
}

/// Flag values that override file values when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub n_t: Option<usize>,
    pub n_r: Option<usize>,
    pub n_s: Option<usize>,
    pub phi_deg: Option<f64>,
    pub phi_hat_deg: Option<f64>,
    pub kappa_db: Option<f64>,
    pub power_watts: Option<f64>,
    pub snr_db: Option<SnrSetting>,
    pub gamma: Option<GammaSetting>,
    pub spacing_wavelengths: Option<f64>,
    pub trials: Option<usize>,
    pub base_seed: Option<u64>,
    pub grid_points: Option<usize>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut SystemConfig) {
        macro_rules! set {
            ($($f:ident),*) => {
                $(if let Some(v) = &self.$f { cfg.$f = v.clone(); })*
            };
        }
        set!(
            n_t,
            n_r,
            n_s,
            phi_deg,
            phi_hat_deg,
            kappa_db,
            power_watts,
            snr_db,
            gamma,
            spacing_wavelengths,
            trials,
            base_seed,
            grid_points
        );
    }
}

impl SystemConfig {
    /// Parses TOML text; unknown keys are rejected. The result is validated.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            toml::from_str(text).map_err(|e| Error::config("file", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Reads an optional config file, applies flag overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| Error::config("file", e.message().to_string()))?
            }
            None => SystemConfig::default(),
        };
        overrides.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t < 2 {
            return Err(Error::config(
                "n_t",
                "must be at least 2 (a null space is required)",
            ));
        }
        if self.n_r < 1 {
            return Err(Error::config("n_r", "must be at least 1"));
        }
        let ns_max = (self.n_t - 1).min(self.n_r);
        if self.n_s < 1 || self.n_s > ns_max {
            return Err(Error::config(
                "n_s",
                format!(
                    "must satisfy 1 <= n_s <= min(n_t - 1, n_r) = {ns_max}, got {}",
                    self.n_s
                ),
            ));
        }
        for (name, v) in [("phi_deg", self.phi_deg), ("phi_hat_deg", self.phi_hat_deg)] {
            if !(0.0..=180.0).contains(&v) {
                return Err(Error::config(
                    name,
                    format!("must lie in [0, 180], got {v}"),
                ));
            }
        }
        if self.phi_deg == self.phi_hat_deg {
            return Err(Error::config(
                "phi_hat_deg",
                "decoy direction must differ from phi_deg",
            ));
        }
        if !self.kappa_db.is_finite() {
            return Err(Error::config("kappa_db", "must be finite"));
        }
        if !(self.power_watts > 0.0) || !self.power_watts.is_finite() {
            return Err(Error::config("power_watts", "must be positive"));
        }
        match &self.snr_db {
            SnrSetting::Single(v) if !v.is_finite() => {
                return Err(Error::config("snr_db", "must be finite"))
            }
            SnrSetting::Grid(g) if g.is_empty() || g.iter().any(|v| !v.is_finite()) => {
                return Err(Error::config("snr_db", "grid must be non-empty and finite"))
            }
            _ => {}
        }
        if let GammaSetting::Value(g) = self.gamma {
            if !g.is_finite() {
                return Err(Error::config("gamma", "must be finite"));
            }
        }
        if !(self.spacing_wavelengths > 0.0) || !self.spacing_wavelengths.is_finite() {
            return Err(Error::config("spacing_wavelengths", "must be positive"));
        }
        if self.trials < 1 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.grid_points < 2 {
            return Err(Error::config("grid_points", "must be at least 2"));
        }
        Ok(())
    }

    pub fn phi_rad(&self) -> f64 {
        self.phi_deg.to_radians()
    }

    pub fn phi_hat_rad(&self) -> f64 {
        self.phi_hat_deg.to_radians()
    }

    pub fn kappa_linear(&self) -> f64 {
        10f64.powf(self.kappa_db / 10.0)
    }

    /// Noise power `N₀ = P / SNR` with `|α| = 1`.
    pub fn n0_at(&self, snr_db: f64) -> f64 {
        self.power_watts / 10f64.powf(snr_db / 10.0)
    }

    pub fn tx_geometry(&self) -> ArrayGeometry {
        ArrayGeometry::new(self.n_t, self.spacing_wavelengths).expect("validated config")
    }

    pub fn rx_geometry(&self) -> ArrayGeometry {
        ArrayGeometry::new(self.n_r, self.spacing_wavelengths).expect("validated config")
    }
}
