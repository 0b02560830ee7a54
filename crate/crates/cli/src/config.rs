//! Run configuration: a versioned JSON document describing the map family,
//! the observable, and default command parameters.
//!
//! Coefficients may be written as JSON strings (preferred, keeps the file
//! diff-stable and explicit about decimal intent) or as plain numbers.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::Deserialize;

use orbitdet::map::Harmonic;
use orbitdet::{Observable, TauPoly, TrigMapFamily};

pub const SCHEMA_VERSION: u32 = 1;

/// f64 accepted as either a JSON number or a decimal string.
#[derive(Debug, Clone, Copy)]
pub struct FlexF64(pub f64);

impl<'de> Deserialize<'de> for FlexF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = FlexF64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a decimal string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<FlexF64, E> {
                Ok(FlexF64(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<FlexF64, E> {
                Ok(FlexF64(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<FlexF64, E> {
                Ok(FlexF64(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<FlexF64, E> {
                v.trim()
                    .parse::<f64>()
                    .map(FlexF64)
                    .map_err(|_| E::custom(format!("not a decimal number: {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

fn poly(coeffs: &[FlexF64]) -> TauPoly {
    TauPoly::new(coeffs.iter().map(|c| c.0).collect())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub degree: u32,
    #[serde(default)]
    pub constant: Vec<FlexF64>,
    #[serde(default)]
    pub harmonics: Vec<HarmonicConfig>,
    pub tau_domain: [FlexF64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    pub k: u32,
    #[serde(default)]
    pub sin: Vec<FlexF64>,
    #[serde(default)]
    pub cos: Vec<FlexF64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    #[serde(default)]
    pub constant: Option<FlexF64>,
    #[serde(default)]
    pub harmonics: Vec<ObservableHarmonic>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableHarmonic {
    pub k: u32,
    #[serde(default)]
    pub sin: Option<FlexF64>,
    #[serde(default)]
    pub cos: Option<FlexF64>,
}

/// Overridable run parameters; one source of truth for the defaults table.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefaultParams {
    pub n_max: usize,
    pub tau: f64,
    pub u: f64,
    pub bins: usize,
    pub fd_step: f64,
    pub workers: usize,
    pub grid: usize,
    pub enum_cap: u64,
}

impl Default for DefaultParams {
    fn default() -> Self {
        Self {
            n_max: 12,
            tau: 0.0,
            u: 0.0,
            bins: 1 << 15,
            fd_step: 0.01,
            workers: 0,
            grid: 100_000,
            enum_cap: orbitdet::DEFAULT_ENUM_CAP,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub family: FamilyConfig,
    pub observable: ObservableConfig,
    #[serde(default)]
    pub defaults: DefaultParams,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| format!("config does not parse: {e}"))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                cfg.schema
            ));
        }
        Ok(cfg)
    }

    /// Build and validate the family; the expansion certificate runs here so
    /// invalid configs are rejected with the violated bound in the message.
    pub fn family(&self) -> Result<TrigMapFamily, String> {
        let f = &self.family;
        let kmax = f.harmonics.iter().map(|h| h.k).max().unwrap_or(0) as usize;
        let mut harmonics = vec![
            Harmonic {
                sin: TauPoly::zero(),
                cos: TauPoly::zero(),
            };
            kmax
        ];
        let mut seen = Vec::new();
        for h in &f.harmonics {
            if h.k == 0 {
                return Err("harmonic frequency k must be at least 1".into());
            }
            if seen.contains(&h.k) {
                return Err(format!("harmonic k={} appears twice", h.k));
            }
            seen.push(h.k);
            let slot = &mut harmonics[(h.k - 1) as usize];
            slot.sin = poly(&h.sin);
            slot.cos = poly(&h.cos);
        }
        let family = TrigMapFamily::new(
            f.degree,
            poly(&f.constant),
            harmonics,
            (f.tau_domain[0].0, f.tau_domain[1].0),
        )
        .map_err(|e| e.to_string())?;
        family.expansion_bound().map_err(|e| e.to_string())?;
        Ok(family)
    }

    pub fn observable(&self) -> Result<Observable, String> {
        let o = &self.observable;
        let kmax = o.harmonics.iter().map(|h| h.k).max().unwrap_or(0) as usize;
        let mut sin = vec![0.0; kmax];
        let mut cos = vec![0.0; kmax];
        for h in &o.harmonics {
            if h.k == 0 {
                return Err("observable harmonic k must be at least 1".into());
            }
            let i = (h.k - 1) as usize;
            sin[i] = h.sin.map(|v| v.0).unwrap_or(0.0);
            cos[i] = h.cos.map(|v| v.0).unwrap_or(0.0);
        }
        Ok(Observable::new(
            o.constant.map(|v| v.0).unwrap_or(0.0),
            sin,
            cos,
        ))
    }
}
