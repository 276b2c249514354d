//! Run configuration, parameter resolution and versioned output envelopes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::{compat_exponent, derive, derive_from_ell, Parameters, Regime};
use crate::profile::{build_curve, find_profile, shoot_speed, ProfileConfig, ProfileSolution};
use crate::simulate::TimeConvention;

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative half-width of the shooting bracket around a configured speed.
const SPEED_HINT_WIDTH: f64 = 1e-3;

/// Flat key-value run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub d: u32,
    pub gamma: Option<f64>,
    pub ell: Option<f64>,
    pub p: Option<f64>,
    /// Speed hint; the profile is shot in a narrow bracket around it.
    pub r: Option<f64>,
    pub e: Option<f64>,
    pub mu: f64,
    pub mu_prime: f64,
    pub regime: Regime,

    /// Spectral grid size.
    pub n: usize,
    /// Spectral shift.
    pub a: f64,
    pub threshold: f64,

    pub h: f64,
    /// Outer radius of the simulation; defaults to `20 e^tau0`.
    pub z_out: Option<f64>,
    pub tau0: f64,
    pub tau_span: f64,
    pub cadence: f64,
    pub n_p: f64,
    pub amplitude: f64,
    pub bump_center: f64,
    pub bump_width: f64,
    /// Random bump superposition instead of a single bump.
    pub seed: Option<u64>,
    pub bumps: usize,
    pub stationarity_bound: f64,

    pub t_blowup: f64,
    pub time_convention: TimeConvention,
    pub fixed_x: f64,

    pub portrait_n: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d: 3,
            gamma: None,
            ell: None,
            p: None,
            r: None,
            e: None,
            mu: 0.0,
            mu_prime: 0.0,
            regime: Regime::Euler,
            n: 128,
            a: 0.02,
            threshold: 0.1,
            h: 0.02,
            z_out: None,
            tau0: 0.0,
            tau_span: 1.0,
            cadence: 0.1,
            n_p: 2.0,
            amplitude: 0.0,
            bump_center: 1.0,
            bump_width: 0.5,
            seed: None,
            bumps: 4,
            stationarity_bound: 1e-2,
            t_blowup: 1.0,
            time_convention: TimeConvention::Log,
            fixed_x: 0.5,
            portrait_n: 41,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Config::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn parameters(&self) -> Result<Parameters> {
        let params = match (self.gamma, self.ell) {
            (Some(g), None) => derive(self.d, g, self.mu, self.mu_prime, self.regime)?,
            (None, Some(l)) => derive_from_ell(self.d, l, self.mu, self.mu_prime, self.regime)?,
            (Some(g), Some(l)) => {
                let p = derive(self.d, g, self.mu, self.mu_prime, self.regime)?;
                if (p.ell - l).abs() > 1e-12 * l.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!("gamma = {g} gives ell = {}, config says {l}", p.ell)));
                }
                p
            }
            (None, None) => return Err(Error::InvalidParameter("one of gamma or ell is required".into())),
        };
        if let Some(p) = self.p {
            if (p - params.p).abs() > 1e-12 * p.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!("p = {p} is inconsistent with ell (expected {})", params.p)));
            }
        }
        if !params.admissible {
            return Err(Error::InvalidParameter(format!("(d, ell, regime) = ({}, {}, {:?}) is not admissible", params.d, params.ell, params.regime)));
        }
        Ok(params)
    }

    /// Speed hint from `r`, or from `e` through `r = (2e + ell + 2)/(ell + 1)`.
    pub fn speed_hint(&self, params: &Parameters) -> Result<Option<f64>> {
        let from_e = self.e.map(|e| (2.0 * e + params.ell + 2.0) / (params.ell + 1.0));
        match (self.r, from_e) {
            (Some(r), Some(re)) if (r - re).abs() > 1e-9 * r => Err(Error::InvalidParameter(format!(
                "e = {} is inconsistent with r = {r} (expected {})",
                self.e.unwrap(),
                compat_exponent(params.ell, r)
            ))),
            (Some(r), _) => Ok(Some(r)),
            (None, re) => Ok(re),
        }
    }

    /// Profile for this configuration: the first admissible speed, or the root near the hint.
    pub fn profile(&self, params: &Parameters) -> Result<ProfileSolution> {
        let cfg = ProfileConfig::default();
        match self.speed_hint(params)? {
            None => find_profile(params, &cfg),
            Some(r) => {
                if !(r > 1.0 && r < params.r_eye) {
                    return Err(Error::InvalidParameter(format!("speed {r} outside (1, {})", params.r_eye)));
                }
                let bracket = (r * (1.0 - SPEED_HINT_WIDTH), (r * (1.0 + SPEED_HINT_WIDTH)).min(params.r_eye));
                let root = shoot_speed(params, bracket, &cfg)?;
                let curve = build_curve(params, root.r, Some(root.xi_m), &cfg)?;
                Ok(ProfileSolution { curve, root, rejected: Vec::new() })
            }
        }
    }
}

/// Versioned JSON document.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema: &'a str,
    pub schema_version: u32,
    pub artifact_version: &'a str,
    pub config_hash: String,
    pub data: &'a T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(schema: &'a str, config: &Config, data: &'a T) -> Self {
        Envelope { schema, schema_version: SCHEMA_VERSION, artifact_version: ARTIFACT_VERSION, config_hash: config.hash(), data }
    }
}
