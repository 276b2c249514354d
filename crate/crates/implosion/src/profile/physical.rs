//! Physical profile `(rho_P, Psi_P)` and its finite-energy dampening.

use serde::Serialize;

use super::curve::ProfileCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct PhysicalProfile {
    pub r: f64,
    pub ell: f64,
    pub d: f64,
    pub z: Vec<f64>,
    pub rho: Vec<f64>,
    /// `Psi_P' = -Z w / 2`.
    pub dpsi: Vec<f64>,
    pub psi: Vec<f64>,
    /// `Q = rho_P^(p-1) = phi^2 Z^2 sigma^2`.
    pub q: Vec<f64>,
    /// Fitted far-field exponent of `Q`.
    pub q_slope: f64,
    pub c_p: f64,
    pub c_psi: f64,
}

pub fn reconstruct_physical(curve: &ProfileCurve) -> Result<PhysicalProfile> {
    let phi2 = curve.ell / 4.0;
    let r = curve.r;
    if curve.x.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::WrongBranch("sigma <= 0 on the curve".into()));
    }
    let mut out = PhysicalProfile {
        r,
        ell: curve.ell,
        d: curve.d,
        z: vec![0.0],
        rho: vec![1.0],
        dpsi: vec![0.0],
        psi: vec![-1.0 / (r - 2.0)],
        q: vec![phi2 * curve.origin.x[0] * curve.origin.x[0]],
        q_slope: f64::NAN,
        c_p: f64::NAN,
        c_psi: f64::NAN,
    };
    for i in 0..curve.z.len() {
        let (z, w, x) = (curve.z[i], curve.w[i], curve.x[i]);
        let q = phi2 * x * x;
        let dpsi = -z * w / 2.0;
        out.z.push(z);
        out.q.push(q);
        out.rho.push(q.powf(curve.ell / 4.0));
        out.dpsi.push(dpsi);
        out.psi.push(-(dpsi * dpsi + q + z * dpsi) / (r - 2.0));
    }
    let zmax = *out.z.last().unwrap();
    let idx: Vec<usize> = (0..out.z.len()).filter(|&i| out.z[i] >= zmax / 10.0).collect();
    let n = idx.len() as f64;
    let (mx, my) = idx.iter().fold((0.0, 0.0), |a, &i| (a.0 + out.z[i].ln() / n, a.1 + out.q[i].ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &i in &idx {
        sxy += (out.z[i].ln() - mx) * (out.q[i].ln() - my);
        sxx += (out.z[i].ln() - mx).powi(2);
    }
    out.q_slope = sxy / sxx;
    let last = out.z.len() - 1;
    let zl = out.z[last];
    out.c_p = out.rho[last] * zl.powf(curve.ell * (r - 1.0) / 2.0);
    out.c_psi = zl * out.dpsi[last] * zl.powf(r - 2.0);
    Ok(out)
}

impl PhysicalProfile {
    /// Recovers `(w, sigma)` from `(rho_P, Psi_P')`.
    pub fn to_emden(&self, i: usize) -> (f64, f64) {
        let z = self.z[i];
        let phi = self.ell.sqrt() / 2.0;
        (-2.0 * self.dpsi[i] / z, self.rho[i].powf(2.0 / self.ell) / (phi * z))
    }
}

/// Fixed cutoff interval for the dampening.
pub const CUT_LO: f64 = 5.0;
pub const CUT_HI: f64 = 10.0;

/// Quintic step with zero first and second derivatives at both ends.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dampening {
    pub n_p: f64,
    /// Far-field value of the tail correction `K_rho`.
    pub k_inf: f64,
    /// `int_5^10 K(x)/x dx`.
    pub k_int: f64,
}

impl Dampening {
    pub fn new(n_p: f64, r: f64, ell: f64) -> Result<Self> {
        // 2(r-1)/(p-1) with p-1 = 4/ell
        let slow = ell * (r - 1.0) / 2.0;
        if !(n_p > slow) {
            return Err(Error::NonIntegrableEnergy { n_p, min: slow });
        }
        let k_inf = n_p - slow;
        // Gauss-Legendre on [5, 10]
        let (nodes, weights) = gauss_legendre_8();
        let h = 0.5 * (CUT_HI - CUT_LO);
        let k_int = nodes
            .iter()
            .zip(weights.iter())
            .map(|(&t, &wt)| {
                let x = CUT_LO + h * (t + 1.0);
                wt * h * k_inf * smoothstep((x - CUT_LO) / (CUT_HI - CUT_LO)) / x
            })
            .sum();
        Ok(Dampening { n_p, k_inf, k_int })
    }

    pub fn k(&self, x: f64) -> f64 {
        self.k_inf * smoothstep((x - CUT_LO) / (CUT_HI - CUT_LO))
    }

    /// `zeta(x) = exp(-int_0^x K/x')`.
    pub fn zeta(&self, x: f64) -> f64 {
        let x = x.abs();
        if x <= CUT_LO {
            return 1.0;
        }
        if x >= CUT_HI {
            return (-self.k_int - self.k_inf * (x / CUT_HI).ln()).exp();
        }
        let (nodes, weights) = gauss_legendre_8();
        let h = 0.5 * (x - CUT_LO);
        let s: f64 = nodes
            .iter()
            .zip(weights.iter())
            .map(|(&t, &wt)| {
                let xx = CUT_LO + h * (t + 1.0);
                wt * h * self.k(xx) / xx
            })
            .sum();
        (-s).exp()
    }

    /// Velocity cutoff: 1 on `[0,5]`, 0 beyond 10.
    pub fn zeta_u(&self, x: f64) -> f64 {
        1.0 - smoothstep((x.abs() - CUT_LO) / (CUT_HI - CUT_LO))
    }
}

fn gauss_legendre_8() -> ([f64; 8], [f64; 8]) {
    (
        [
            -0.960_289_856_497_536_3,
            -0.796_666_477_413_626_7,
            -0.525_532_409_916_329,
            -0.183_434_642_495_649_8,
            0.183_434_642_495_649_8,
            0.525_532_409_916_329,
            0.796_666_477_413_626_7,
            0.960_289_856_497_536_3,
        ],
        [
            0.101_228_536_290_376_26,
            0.222_381_034_453_374_47,
            0.313_706_645_877_887_3,
            0.362_683_783_378_362,
            0.362_683_783_378_362,
            0.313_706_645_877_887_3,
            0.222_381_034_453_374_47,
            0.101_228_536_290_376_26,
        ],
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct DampenedProfile {
    pub tau: f64,
    pub zstar: f64,
    pub n_p: f64,
    pub cutoff: [f64; 2],
    /// Original variable `x = Z / Z*`.
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Renormalized dampened density `zeta(lambda Z) rho_P(Z)`.
    pub rho_d: Vec<f64>,
    /// Renormalized dampened velocity `zeta_u(lambda Z) U_P(Z)`.
    pub u_d: Vec<f64>,
    pub psi_d: Vec<f64>,
    pub dampening: Dampening,
}

/// Profile values at an arbitrary radius, extended by the power-law tail beyond the curve.
pub fn profile_at(curve: &ProfileCurve, z: f64) -> (f64, f64, f64) {
    let zmax = curve.z_max();
    let (zz, scale_rho, scale_u) = if z > zmax {
        let k = z / zmax;
        (zmax, k.powf(-curve.ell * (curve.r - 1.0) / 2.0), k.powf(1.0 - curve.r))
    } else {
        (z, 1.0, 1.0)
    };
    let loc = curve.local(zz);
    let q = curve.ell / 4.0 * loc.x * loc.x;
    let rho = q.powf(curve.ell / 4.0);
    let u = -zz * loc.w / 2.0;
    let psi = -(u * u + q + zz * u) / (curve.r - 2.0);
    (rho * scale_rho, u * scale_u, psi)
}

/// Dampened renormalized data at time `tau` on the `x` grid `xs`.
pub fn dampen(curve: &ProfileCurve, n_p: f64, tau: f64, xs: &[f64]) -> Result<DampenedProfile> {
    let damp = Dampening::new(n_p, curve.r, curve.ell)?;
    let zstar = tau.exp();
    let lambda = 1.0 / zstar;
    let mut out = DampenedProfile {
        tau,
        zstar,
        n_p,
        cutoff: [CUT_LO, CUT_HI],
        x: xs.to_vec(),
        z: Vec::with_capacity(xs.len()),
        rho_d: Vec::with_capacity(xs.len()),
        u_d: Vec::with_capacity(xs.len()),
        psi_d: Vec::with_capacity(xs.len()),
        dampening: damp,
    };
    for &x in xs {
        let z = x * zstar;
        let (rho, u, _) = profile_at(curve, z);
        out.z.push(z);
        out.rho_d.push(damp.zeta(lambda * z) * rho);
        out.u_d.push(damp.zeta_u(lambda * z) * u);
    }
    // Psi_D = Psi_P inside the cutoff, integrated velocity beyond
    let z_cut = CUT_LO * zstar;
    let psi_cut = profile_at(curve, z_cut).2;
    let u_of = |z: f64| damp.zeta_u(lambda * z) * profile_at(curve, z).1;
    for &z in &out.z {
        let psi = if z <= z_cut {
            profile_at(curve, z).2
        } else {
            psi_cut + simpson(&u_of, z_cut, z, 64)
        };
        out.psi_d.push(psi);
    }
    Ok(out)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Density of the dampened solution in the variables of the density-root system:
/// `(lambda/nu)^(ell/2) zeta(x) rho_P(x/lambda)`.
pub fn rho_hat_dampened(curve: &ProfileCurve, damp: &Dampening, tau: f64, x: f64) -> f64 {
    let lambda = (-tau).exp();
    let ratio = ((curve.r - 1.0) * tau).exp();
    ratio.powf(curve.ell / 2.0) * damp.zeta(x) * profile_at(curve, x / lambda).0
}

/// Renormalized density recovered from [`rho_hat_dampened`].
pub fn renormalized_from_hat(curve: &ProfileCurve, damp: &Dampening, tau: f64, z: f64) -> f64 {
    let lambda = (-tau).exp();
    let ratio = ((curve.r - 1.0) * tau).exp();
    rho_hat_dampened(curve, damp, tau, lambda * z) / ratio.powf(curve.ell / 2.0)
}
