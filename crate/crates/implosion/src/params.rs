//! Parameter algebra: equation of state, limiting speeds, Euler/Navier-Stokes compatibility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from `ell = d` below which the phase portrait is treated as degenerate.
pub const TRIPLE_POINT_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    #[default]
    #[serde(alias = "Euler")]
    Euler,
    #[serde(alias = "NavierStokes", alias = "ns")]
    NavierStokes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub d: u32,
    pub gamma: f64,
    pub ell: f64,
    pub p: f64,
    pub r: Option<f64>,
    pub e: Option<f64>,
    pub r_star: f64,
    pub r_plus: f64,
    pub r_eye: f64,
    pub mu: f64,
    pub mu_prime: f64,
    pub regime: Regime,
    /// `ell != 3` and, for Navier-Stokes, `d = 3` with `ell > sqrt(3)`.
    pub admissible: bool,
}

pub fn r_star(d: f64, ell: f64) -> f64 {
    (d + ell) / (ell + d.sqrt())
}

pub fn r_plus(d: f64, ell: f64) -> f64 {
    1.0 + (d - 1.0) / (1.0 + ell.sqrt()).powi(2)
}

pub fn ell_from_gamma(gamma: f64) -> f64 {
    2.0 / (gamma - 1.0)
}

pub fn gamma_from_ell(ell: f64) -> f64 {
    1.0 + 2.0 / ell
}

pub fn derive(d: u32, gamma: f64, mu: f64, mu_prime: f64, regime: Regime) -> Result<Parameters> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::InvalidStateLaw(gamma));
    }
    build(d, gamma, ell_from_gamma(gamma), mu, mu_prime, regime)
}

/// Same as [`derive`] but parametrized by `ell = 2/(gamma-1)`.
pub fn derive_from_ell(d: u32, ell: f64, mu: f64, mu_prime: f64, regime: Regime) -> Result<Parameters> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::InvalidStateLaw(gamma_from_ell(ell)));
    }
    build(d, gamma_from_ell(ell), ell, mu, mu_prime, regime)
}

fn build(d: u32, gamma: f64, ell: f64, mu: f64, mu_prime: f64, regime: Regime) -> Result<Parameters> {
    if d != 2 && d != 3 {
        return Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {d}")));
    }
    if !(mu + mu_prime >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu + mu' must be >= 0, got {}", mu + mu_prime)));
    }
    let df = d as f64;
    if (ell - df).abs() < TRIPLE_POINT_GAP {
        return Err(Error::DegenerateTriplePoint { d, ell });
    }
    let rs = r_star(df, ell);
    let rp = r_plus(df, ell);
    let r_eye = if ell < df { rs } else { rp };
    let mut admissible = (ell - 3.0).abs() >= TRIPLE_POINT_GAP;
    if regime == Regime::NavierStokes {
        admissible &= d == 3 && ell > 3f64.sqrt();
    }
    Ok(Parameters {
        d,
        gamma,
        ell,
        p: 1.0 + 4.0 / ell,
        r: None,
        e: None,
        r_star: rs,
        r_plus: rp,
        r_eye,
        mu,
        mu_prime,
        regime,
        admissible,
    })
}

impl Parameters {
    pub fn with_speed(&self, r: f64) -> Result<Parameters> {
        if !(r > 1.0) {
            return Err(Error::InvalidParameter(format!("front speed must exceed 1, got {r}")));
        }
        let mut out = self.clone();
        out.r = Some(r);
        out.e = Some(compat_exponent(self.ell, r));
        Ok(out)
    }

    pub fn speed(&self) -> Result<f64> {
        self.r.ok_or_else(|| Error::InvalidParameter("front speed r not set".into()))
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    /// `phi = sqrt(ell)/2`, the constant of the Emden transform.
    pub fn phi(&self) -> f64 {
        self.ell.sqrt() / 2.0
    }

    pub fn viscous(&self) -> bool {
        self.mu + self.mu_prime > 0.0
    }
}

/// `e = (ell(r-1) + r - 2)/2`.
pub fn compat_exponent(ell: f64, r: f64) -> f64 {
    0.5 * (ell * (r - 1.0) + r - 2.0)
}

/// Speed at which `e` changes sign.
pub fn compat_threshold(ell: f64) -> f64 {
    (2.0 + ell) / (1.0 + ell)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllThreshold {
    pub ell0: f64,
    /// True when no positive threshold exists and the Navier-Stokes condition holds for every `ell`.
    pub automatic: bool,
    /// True when the formula is negative in `d = 2`: no Navier-Stokes regime at all.
    pub no_ns_regime: bool,
}

pub fn threshold_ell(d: u32) -> Result<EllThreshold> {
    let df = d as f64;
    let den = df - 1.0 - df.sqrt();
    if d < 2 || den.abs() < 1e-14 {
        return Err(Error::InvalidParameter(format!("threshold undefined for d = {d}")));
    }
    let ell0 = (2.0 * df.sqrt() - df) / den;
    Ok(EllThreshold {
        ell0,
        automatic: d >= 4 && ell0 <= 0.0,
        no_ns_regime: d == 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_two_in_three_d() {
        let p = derive(3, 2.0, 0.0, 0.0, Regime::Euler).unwrap();
        assert_eq!(p.ell, 2.0);
        assert_eq!(p.p, 3.0);
        assert!((p.r_star - 5.0 / (2.0 + 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(p.r_eye, p.r_star);
        assert!(p.admissible);
    }

    #[test]
    fn monoatomic_gas_is_rejected() {
        let err = derive(3, 5.0 / 3.0, 0.0, 0.0, Regime::Euler).unwrap_err();
        assert!(matches!(err, Error::DegenerateTriplePoint { .. }));
        assert!(matches!(derive(3, 1.0, 0.0, 0.0, Regime::Euler), Err(Error::InvalidStateLaw(_))));
    }

    #[test]
    fn limiting_speeds_meet_at_triple_point() {
        let v = 3.0 - 3f64.sqrt();
        assert!((r_star(3.0, 3.0) - v).abs() < 1e-14);
        assert!((r_plus(3.0, 3.0) - v).abs() < 1e-14);
    }

    #[test]
    fn compat_signs() {
        assert!(compat_exponent(2.0, 4.0 / 3.0).abs() < 1e-15);
        assert!(compat_exponent(2.0, r_star(3.0, 2.0)) > 0.0);
        assert!(compat_exponent(1.0, r_star(2.0, 1.0)) < 0.0);
    }

    #[test]
    fn threshold_values() {
        assert!((threshold_ell(3).unwrap().ell0 - 3f64.sqrt()).abs() < 1e-12);
        let t4 = threshold_ell(4).unwrap();
        assert!(t4.ell0 <= 0.0 && t4.automatic);
        assert!(threshold_ell(2).unwrap().no_ns_regime);
    }

    #[test]
    fn navier_stokes_flag() {
        let p = derive_from_ell(3, 1.5, 1.0, 0.0, Regime::NavierStokes).unwrap();
        assert!(!p.admissible);
        let p = derive_from_ell(3, 2.0, 1.0, 0.0, Regime::NavierStokes).unwrap();
        assert!(p.admissible);
        assert!(p.viscous());
    }
}
