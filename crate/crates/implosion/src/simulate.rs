//! Renormalized Euler / Navier-Stokes flow around the profile, and exact self-similar rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Parameters;
use crate::profile::{profile_at, DampenedProfile, Dampening, ProfileCurve};

/// Cell-centered nodes `Z_i = (i + 1/2) h` on `[0, z_out]`.
pub fn sim_grid(h: f64, z_out: f64) -> Vec<f64> {
    let n = (z_out / h).round() as usize;
    (0..n).map(|i| (i as f64 + 0.5) * h).collect()
}

/// Smooth bump supported in `|Z - center| < width`.
fn bump(z: f64, center: f64, width: f64) -> f64 {
    let s = (z - center) / width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub rho: f64,
    pub psi: f64,
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub bumps: Vec<Bump>,
}

impl Perturbation {
    pub fn none() -> Perturbation {
        Perturbation::default()
    }

    pub fn single(rho: f64, psi: f64, center: f64, width: f64) -> Perturbation {
        Perturbation { bumps: vec![Bump { rho, psi, center, width }] }
    }

    /// `count` bumps with amplitudes in `[-amplitude, amplitude]` centered in `[0, z_max]`.
    pub fn random(seed: u64, count: usize, amplitude: f64, z_max: f64) -> Perturbation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..count)
            .map(|_| Bump {
                rho: amplitude * rng.random_range(-1.0..1.0),
                psi: amplitude * rng.random_range(-1.0..1.0),
                center: rng.random_range(0.0..z_max),
                width: rng.random_range(0.3..1.0),
            })
            .collect();
        Perturbation { bumps }
    }

    pub fn eval(&self, z: f64) -> (f64, f64) {
        self.bumps.iter().fold((0.0, 0.0), |(a, b), k| {
            // even in Z
            let v = bump(z, k.center, k.width) + bump(-z, k.center, k.width);
            (a + k.rho * v, b + k.psi * v)
        })
    }
}

/// Constants of the renormalized equations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowConstants {
    pub d: f64,
    pub ell: f64,
    pub r: f64,
    pub e: f64,
    pub p: f64,
    /// `2^(gamma/(gamma-1)) (mu + mu')`.
    pub viscosity: f64,
}

impl FlowConstants {
    pub fn new(params: &Parameters, r: f64) -> FlowConstants {
        let gamma = params.gamma;
        FlowConstants {
            d: params.d as f64,
            ell: params.ell,
            r,
            e: 0.5 * (params.ell * (r - 1.0) + r - 2.0),
            p: params.p,
            viscosity: 2f64.powf(gamma / (gamma - 1.0)) * (params.mu + params.mu_prime),
        }
    }

    /// `b = e^(-e tau)`.
    pub fn b(&self, tau: f64) -> f64 {
        (-self.e * tau).exp()
    }
}

/// Reference fields the deviation is measured against.
#[derive(Debug, Clone)]
pub struct Reference {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub psi: Vec<f64>,
    /// Tail dampening and its anchor time, when the data was dampened.
    pub dampening: Option<Dampening>,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub tau: f64,
    pub h: f64,
    pub z: Vec<f64>,
    pub rho: Vec<f64>,
    pub psi: Vec<f64>,
    pub k: FlowConstants,
    pub reference: Reference,
}

impl SimState {
    pub fn b(&self) -> f64 {
        self.k.b(self.tau)
    }

    pub fn u(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.z.len()];
        derivatives(&self.psi, self.h, &mut out, None);
        out
    }

    /// Reference density at the current time (the dampened profile moves with `Z* = e^tau`).
    pub fn rho_ref(&self) -> Vec<f64> {
        match &self.reference.dampening {
            Some(d) => {
                let lam = (-self.tau).exp();
                self.z.iter().zip(&self.reference.rho).map(|(z, r)| d.zeta(lam * z) * r).collect()
            }
            None => self.reference.rho.clone(),
        }
    }
}

fn check_positive(rho: &[f64], tau: f64) -> Result<()> {
    if rho.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Vacuum(tau));
    }
    Ok(())
}

/// Undampened profile data on the grid `z`.
pub fn profile_state(curve: &ProfileCurve, params: &Parameters, z: &[f64], pert: &Perturbation) -> Result<SimState> {
    let h = grid_step(z)?;
    let (mut rho, mut u, mut psi) = (Vec::new(), Vec::new(), Vec::new());
    for &zi in z {
        let (a, b, c) = profile_at(curve, zi);
        rho.push(a);
        u.push(b);
        psi.push(c);
    }
    let reference = Reference { rho: rho.clone(), u, psi: psi.clone(), dampening: None };
    perturbed(z, h, rho, psi, 0.0, FlowConstants::new(params, curve.r), reference, pert)
}

/// Dampened data at its anchor time, sampled on a uniform cell-centered grid.
pub fn init(
    dampened: &DampenedProfile,
    curve: &ProfileCurve,
    params: &Parameters,
    pert: &Perturbation,
) -> Result<SimState> {
    let z = dampened.z.clone();
    let h = grid_step(&z)?;
    let (mut rho, mut u, mut psi) = (Vec::new(), Vec::new(), Vec::new());
    for &zi in &z {
        let (a, b, c) = profile_at(curve, zi);
        rho.push(a);
        u.push(b);
        psi.push(c);
    }
    let reference = Reference { rho, u, psi, dampening: Some(dampened.dampening) };
    let k = FlowConstants::new(params, curve.r);
    perturbed(&z, h, dampened.rho_d.clone(), dampened.psi_d.clone(), dampened.tau, k, reference, pert)
}

#[allow(clippy::too_many_arguments)]
fn perturbed(
    z: &[f64],
    h: f64,
    mut rho: Vec<f64>,
    mut psi: Vec<f64>,
    tau: f64,
    k: FlowConstants,
    reference: Reference,
    pert: &Perturbation,
) -> Result<SimState> {
    for (i, &zi) in z.iter().enumerate() {
        let (dr, dp) = pert.eval(zi);
        rho[i] += dr;
        psi[i] += dp;
    }
    check_positive(&rho, tau)?;
    Ok(SimState { tau, h, z: z.to_vec(), rho, psi, k, reference })
}

fn grid_step(z: &[f64]) -> Result<f64> {
    if z.len() < 8 {
        return Err(Error::InvalidParameter("simulation grid needs at least 8 cells".into()));
    }
    let h = 2.0 * z[0];
    let uniform = z.iter().enumerate().all(|(i, &zi)| (zi - (i as f64 + 0.5) * h).abs() <= 1e-9 * zi.max(1.0));
    if !(h > 0.0) || !uniform {
        return Err(Error::InvalidParameter("simulation grid must be cell-centered and uniform".into()));
    }
    Ok(h)
}

/// First and (optionally) second derivatives of an even grid function.
fn derivatives(f: &[f64], h: f64, d1: &mut [f64], mut d2: Option<&mut [f64]>) {
    let n = f.len();
    for i in 0..n - 1 {
        let fm = if i == 0 { f[0] } else { f[i - 1] };
        d1[i] = (f[i + 1] - fm) / (2.0 * h);
        if let Some(d2) = d2.as_deref_mut() {
            d2[i] = (f[i + 1] - 2.0 * f[i] + fm) / (h * h);
        }
    }
    let i = n - 1;
    d1[i] = (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * h);
    if let Some(d2) = d2 {
        d2[i] = (2.0 * f[i] - 5.0 * f[i - 1] + 4.0 * f[i - 2] - f[i - 3]) / (h * h);
    }
}

/// Right-hand side of the renormalized flow.
#[derive(Debug, Clone)]
pub struct Rhs {
    pub rho: Vec<f64>,
    pub psi: Vec<f64>,
    /// `max |2 Psi_Z + Z| + sqrt((p-1) rho^(p-1))`.
    pub speed: f64,
    /// Effective diffusion coefficient of the viscous term.
    pub diffusion: f64,
}

pub fn rhs(state: &SimState) -> Rhs {
    rhs_fields(&state.k, &state.z, state.h, state.tau, &state.rho, &state.psi)
}

fn rhs_fields(k: &FlowConstants, z: &[f64], h: f64, tau: f64, rho: &[f64], psi: &[f64]) -> Rhs {
    let n = z.len();
    let mut pz = vec![0.0; n];
    let mut pzz = vec![0.0; n];
    let mut rz = vec![0.0; n];
    derivatives(psi, h, &mut pz, Some(&mut pzz));
    derivatives(rho, h, &mut rz, None);
    let lap: Vec<f64> = (0..n).map(|i| pzz[i] + (k.d - 1.0) / z[i] * pz[i]).collect();
    let b2 = k.b(tau).powi(2);
    let visc = k.viscosity * b2;
    let mut fvisc = vec![0.0; n];
    let mut diffusion = 0.0;
    if visc > 0.0 {
        // int_0^Z (Laplacian U - (d-1) U / Z^2) / rho^2 = int_0^Z d/dZ(Laplacian Psi) / rho^2
        let mut dlap = vec![0.0; n];
        derivatives(&lap, h, &mut dlap, None);
        let g: Vec<f64> = (0..n).map(|i| dlap[i] / (rho[i] * rho[i])).collect();
        let mut acc = 0.25 * h * g[0];
        fvisc[0] = visc * acc;
        for i in 1..n {
            acc += 0.5 * h * (g[i - 1] + g[i]);
            fvisc[i] = visc * acc;
        }
        diffusion = rho.iter().map(|r| visc / (r * r)).fold(0.0, f64::max);
    }
    let (mut dr, mut dp) = (vec![0.0; n], vec![0.0; n]);
    let mut speed: f64 = 0.0;
    let pm1 = k.p - 1.0;
    for i in 0..n {
        let adv = 2.0 * pz[i] + z[i];
        let q = rho[i].powf(pm1);
        dr[i] = -rho[i] * lap[i] - 0.5 * k.ell * (k.r - 1.0) * rho[i] - adv * rz[i];
        dp[i] = fvisc[i] - (pz[i] * pz[i] + (k.r - 2.0) * psi[i] + z[i] * pz[i] + q);
        speed = speed.max(adv.abs() + (pm1 * q).sqrt());
    }
    Rhs { rho: dr, psi: dp, speed, diffusion }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub cfl: f64,
    /// Diagnostics every `cadence` in tau.
    pub cadence: f64,
    /// Deviation and residual are measured on `Z <= z_hat`; `None` uses `Z2`.
    pub z_hat: Option<f64>,
    /// Weight exponent `sigma` of the energy norms.
    pub sigma: f64,
    pub min_dt: f64,
    /// Snapshot every `snapshot_every` diagnostics samples; `0` keeps only the ends.
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { cfl: 0.4, cadence: 0.1, z_hat: None, sigma: 0.0, min_dt: 1e-12, snapshot_every: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub tau: f64,
    /// `sup |d rho/d tau|, sup |d Psi/d tau|` on `Z <= z_hat`.
    pub residual: [f64; 2],
    /// `sup |rho - rho_ref|, sup |u - u_ref|` on `Z <= z_hat`.
    pub deviation: [f64; 2],
    /// Weighted energy norms for `m = 0, 1, 2`.
    pub energy: [f64; 3],
    pub b: f64,
    pub sup_rho: f64,
    pub sup_u: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub tau: f64,
    pub z: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stop {
    Finished,
    Vacuum,
    Blowup,
    StepUnderflow,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub z_hat: f64,
    pub samples: Vec<Sample>,
}

impl Diagnostics {
    pub fn max_deviation(&self) -> f64 {
        self.samples.iter().map(|s| s.deviation[0].max(s.deviation[1])).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().unwrap()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub stop: Stop,
    pub steps: usize,
    pub diagnostics: Diagnostics,
    pub snapshots: Vec<Snapshot>,
}

/// Deviations, residuals and energy norms of `state`.
pub fn sample(state: &SimState, z_hat: f64, sigma: f64, n_p: f64) -> Sample {
    let f = rhs(state);
    let u = state.u();
    let rho_ref = state.rho_ref();
    let inside = |i: usize| state.z[i] <= z_hat;
    let mut residual = [0.0f64; 2];
    let mut deviation = [0.0f64; 2];
    for i in (0..state.z.len()).filter(|&i| inside(i)) {
        residual[0] = residual[0].max(f.rho[i].abs());
        residual[1] = residual[1].max(f.psi[i].abs());
        deviation[0] = deviation[0].max((state.rho[i] - rho_ref[i]).abs());
        deviation[1] = deviation[1].max((u[i] - state.reference.u[i]).abs());
    }
    let energy = energy_norms(state, &rho_ref, sigma, n_p);
    Sample {
        tau: state.tau,
        residual,
        deviation,
        energy,
        b: state.b(),
        sup_rho: state.rho.iter().cloned().fold(0.0, f64::max),
        sup_u: u.iter().map(|v| v.abs()).fold(0.0, f64::max),
    }
}

/// Weighted norms `sum_{j<=m} int chi_j [(p-1) rho_D^(p-2) rho_T |d^j rho~|^2 + rho_T^2 |d d^j Psi~|^2] Z^(d-1) dZ`.
fn energy_norms(state: &SimState, rho_ref: &[f64], sigma: f64, n_p: f64) -> [f64; 3] {
    let k = &state.k;
    let n = state.z.len();
    let h = state.h;
    let drho: Vec<f64> = (0..n).map(|i| state.rho[i] - rho_ref[i]).collect();
    let lam = (-state.tau).exp();
    let u = state.u();
    let u_ref: Vec<f64> = match &state.reference.dampening {
        Some(d) => (0..n).map(|i| d.zeta_u(lam * state.z[i]) * state.reference.u[i]).collect(),
        None => state.reference.u.clone(),
    };
    let mut p_derivs = vec![(0..n).map(|i| u[i] - u_ref[i]).collect::<Vec<f64>>()];
    let mut r_derivs = vec![drho];
    for j in 0..2 {
        let mut d = vec![0.0; n];
        derivatives(&p_derivs[j], h, &mut d, None);
        p_derivs.push(d);
        let mut d = vec![0.0; n];
        derivatives(&r_derivs[j], h, &mut d, None);
        r_derivs.push(d);
    }
    let s = 2.0 * (k.r - 1.0) * (k.p + 1.0) / (k.p - 1.0);
    let mut terms = [0.0; 3];
    for (j, term) in terms.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..n {
            let z = state.z[i];
            let br = (1.0 + z * z).sqrt();
            let bs = (1.0 + (z * lam).powi(2)).sqrt();
            let chi = br.powf(2.0 * j as f64 - 2.0 * sigma - k.d + s) * bs.powf(2.0 * n_p + 2.0 * sigma - s);
            let a = (k.p - 1.0) * rho_ref[i].powf(k.p - 2.0) * state.rho[i] * r_derivs[j][i].powi(2);
            let b = state.rho[i].powi(2) * p_derivs[j][i].powi(2);
            acc += chi * (a + b) * z.powf(k.d - 1.0) * h;
        }
        *term = acc;
    }
    [terms[0], terms[0] + terms[1], terms[0] + terms[1] + terms[2]]
}

/// SSP-RK3 integration to `tau_end`.
pub fn run(state: &mut SimState, tau_end: f64, cfg: &RunConfig, z2: f64) -> Trajectory {
    let z_hat = cfg.z_hat.unwrap_or(z2);
    let n_p = state.reference.dampening.map(|d| d.n_p).unwrap_or(0.0);
    let mut diag = Diagnostics { z_hat, samples: vec![sample(state, z_hat, cfg.sigma, n_p)] };
    let snap = |s: &SimState| Snapshot { tau: s.tau, z: s.z.clone(), rho: s.rho.clone(), u: s.u() };
    let mut snapshots = vec![snap(state)];
    let mut next = state.tau + cfg.cadence;
    let mut steps = 0;
    let mut stop = Stop::Finished;
    let n = state.z.len();
    while state.tau < tau_end - 1e-14 {
        let f0 = rhs(state);
        let mut dt = cfg.cfl * state.h / f0.speed.max(1e-300);
        if f0.diffusion > 0.0 {
            dt = dt.min(cfg.cfl * state.h * state.h / (2.0 * f0.diffusion));
        }
        dt = dt.min(tau_end - state.tau).min(next - state.tau);
        if !(dt >= cfg.min_dt) && tau_end - state.tau > cfg.min_dt {
            stop = Stop::StepUnderflow;
            break;
        }
        let (r0, p0) = (state.rho.clone(), state.psi.clone());
        let t0 = state.tau;
        // stage 1
        let r1: Vec<f64> = (0..n).map(|i| r0[i] + dt * f0.rho[i]).collect();
        let p1: Vec<f64> = (0..n).map(|i| p0[i] + dt * f0.psi[i]).collect();
        let f1 = rhs_fields(&state.k, &state.z, state.h, t0 + dt, &r1, &p1);
        let r2: Vec<f64> = (0..n).map(|i| 0.75 * r0[i] + 0.25 * (r1[i] + dt * f1.rho[i])).collect();
        let p2: Vec<f64> = (0..n).map(|i| 0.75 * p0[i] + 0.25 * (p1[i] + dt * f1.psi[i])).collect();
        let f2 = rhs_fields(&state.k, &state.z, state.h, t0 + 0.5 * dt, &r2, &p2);
        state.rho = (0..n).map(|i| (r0[i] + 2.0 * (r2[i] + dt * f2.rho[i])) / 3.0).collect();
        state.psi = (0..n).map(|i| (p0[i] + 2.0 * (p2[i] + dt * f2.psi[i])) / 3.0).collect();
        state.tau = t0 + dt;
        steps += 1;
        if state.rho.iter().chain(&state.psi).any(|v| !v.is_finite()) {
            stop = Stop::Blowup;
            break;
        }
        if state.rho.iter().any(|&r| r <= 0.0) {
            stop = Stop::Vacuum;
            break;
        }
        if state.tau >= next - 1e-12 || state.tau >= tau_end - 1e-14 {
            diag.samples.push(sample(state, z_hat, cfg.sigma, n_p));
            next += cfg.cadence;
            if cfg.snapshot_every > 0 && (diag.samples.len() - 1) % cfg.snapshot_every == 0 {
                snapshots.push(snap(state));
            }
        }
    }
    if snapshots.last().map(|s| s.tau) != Some(state.tau) {
        snapshots.push(snap(state));
    }
    Trajectory { stop, steps, diagnostics: diag, snapshots }
}

/// Relation between renormalized and original time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeConvention {
    /// `T - t = e^(-r tau)`; the time scale is `nu = (r/2) e^(-r tau)`.
    #[default]
    Log,
    /// `nu = e^(-r tau)`, hence `T - t = (2/r) e^(-r tau)`.
    Scaling,
}

impl TimeConvention {
    /// `kappa` in `T - t = kappa e^(-r tau)`.
    pub fn kappa(self, r: f64) -> f64 {
        match self {
            TimeConvention::Log => 1.0,
            TimeConvention::Scaling => 2.0 / r,
        }
    }
}

/// The self-similar solution in original variables `(t, x)`.
#[derive(Debug, Clone)]
pub struct SelfSimilar<'a> {
    pub curve: &'a ProfileCurve,
    pub t_blowup: f64,
    pub convention: TimeConvention,
}

impl SelfSimilar<'_> {
    /// `(tau, lambda, nu)` at time `t < T`.
    pub fn scales(&self, t: f64) -> (f64, f64, f64) {
        let r = self.curve.r;
        let kappa = self.convention.kappa(r);
        let tau = -((self.t_blowup - t) / kappa).ln() / r;
        (tau, (-tau).exp(), 0.5 * r * kappa * (-r * tau).exp())
    }

    /// `(rho, u)` at `(t, x)`.
    pub fn fields(&self, t: f64, x: f64) -> (f64, f64) {
        let (_, lambda, nu) = self.scales(t);
        let ell = self.curve.ell;
        let (rp, up, _) = profile_at(self.curve, x / lambda);
        let ratio = lambda / nu;
        let rho_hat = ratio.powf(0.5 * ell) * rp;
        (2f64.powf(-0.5 * ell) * rho_hat * rho_hat, ratio * up)
    }

    /// `(sup rho, sup |u|)` at time `t`.
    pub fn sup_norms(&self, t: f64, sup_rho_p: f64, sup_u_p: f64) -> (f64, f64) {
        let (_, lambda, nu) = self.scales(t);
        let ratio = lambda / nu;
        (2f64.powf(-0.5 * self.curve.ell) * ratio.powf(self.curve.ell) * sup_rho_p * sup_rho_p, ratio * sup_u_p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCurves {
    pub t: Vec<f64>,
    pub sup_rho: Vec<f64>,
    pub sup_u: Vec<f64>,
    /// Fitted exponents of `sup rho` and `sup |u|` against `T - t`.
    pub exponent_rho: f64,
    pub exponent_u: f64,
    pub expected_rho: f64,
    pub expected_u: f64,
    /// `rho(t, x) |x|^(l(r-1))` at fixed `x` for each `t`.
    pub fixed_x: f64,
    pub rho_scaled: Vec<f64>,
    pub u_scaled: Vec<f64>,
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn physical_rates(curve: &ProfileCurve, t_blowup: f64, ts: &[f64], convention: TimeConvention, x_fixed: f64) -> RateCurves {
    let ss = SelfSimilar { curve, t_blowup, convention };
    let sup_rho_p = curve.x.iter().map(|x| (curve.ell / 4.0 * x * x).powf(curve.ell / 4.0)).fold(1.0, f64::max);
    let sup_u_p = curve.z.iter().zip(&curve.w).map(|(z, w)| (z * w / 2.0).abs()).fold(0.0, f64::max);
    let (mut sr, mut su, mut rs, mut us) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (r, ell) = (curve.r, curve.ell);
    for &t in ts {
        let (a, b) = ss.sup_norms(t, sup_rho_p, sup_u_p);
        sr.push(a);
        su.push(b);
        let (rho, u) = ss.fields(t, x_fixed);
        rs.push(rho * x_fixed.powf(ell * (r - 1.0)));
        us.push(u * x_fixed.powf(r - 1.0));
    }
    let lt: Vec<f64> = ts.iter().map(|t| (t_blowup - t).ln()).collect();
    let lr: Vec<f64> = sr.iter().map(|v| v.ln()).collect();
    let lu: Vec<f64> = su.iter().map(|v| v.ln()).collect();
    RateCurves {
        t: ts.to_vec(),
        exponent_rho: slope(&lt, &lr),
        exponent_u: slope(&lt, &lu),
        expected_rho: -ell * (r - 1.0) / r,
        expected_u: -(r - 1.0) / r,
        sup_rho: sr,
        sup_u: su,
        fixed_x: x_fixed,
        rho_scaled: rs,
        u_scaled: us,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    pub t_blowup: f64,
    pub t0: f64,
    pub t1: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub cfl: f64,
    pub convention: TimeConvention,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            t_blowup: 1.0,
            t0: 0.0,
            t1: 0.1,
            x_min: 0.5,
            x_max: 2.5,
            cfl: 0.4,
            convention: TimeConvention::Log,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub cells: usize,
    pub l1: f64,
    pub linf: f64,
    /// Mass change minus the integrated boundary fluxes, relative to the flux integral.
    pub mass_defect: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckTable {
    pub rows: Vec<CheckRow>,
    /// Successive `l1` ratios.
    pub ratios: Vec<f64>,
}

fn gauss3() -> ([f64; 3], [f64; 3]) {
    let a = (0.6f64).sqrt();
    ([-a, 0.0, a], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
}

/// Cell averages (volume weighted) of `(rho, rho u)` of the exact solution.
fn exact_averages(ss: &SelfSimilar, d: f64, t: f64, edges: &[f64]) -> Vec<[f64; 2]> {
    let (nodes, weights) = gauss3();
    edges
        .windows(2)
        .map(|e| {
            let (a, b) = (e[0], e[1]);
            let h = 0.5 * (b - a);
            let mut acc = [0.0; 2];
            let mut vol = 0.0;
            for k in 0..3 {
                let x = a + h * (nodes[k] + 1.0);
                let w = weights[k] * h * x.powf(d - 1.0);
                let (rho, u) = ss.fields(t, x);
                acc[0] += w * rho;
                acc[1] += w * rho * u;
                vol += w;
            }
            [acc[0] / vol, acc[1] / vol]
        })
        .collect()
}

/// First-order Rusanov finite volumes for radial Euler in original variables against the exact
/// self-similar solution, on each grid of `cells`.
pub fn physical_check(curve: &ProfileCurve, params: &Parameters, cfg: &CheckConfig, cells: &[usize]) -> Result<CheckTable> {
    if !(cfg.t1 > cfg.t0 && cfg.t1 < cfg.t_blowup && cfg.x_min > 0.0 && cfg.x_max > cfg.x_min) {
        return Err(Error::InvalidParameter("check horizon or domain".into()));
    }
    let ss = SelfSimilar { curve, t_blowup: cfg.t_blowup, convention: cfg.convention };
    let d = params.d as f64;
    let gamma = params.gamma;
    let kp = (gamma - 1.0) / gamma;
    let pressure = |rho: f64| kp * rho.powf(gamma);
    let flux = |s: [f64; 2]| {
        let u = s[1] / s[0];
        [s[1], s[1] * u + pressure(s[0])]
    };
    let speed = |s: [f64; 2]| (s[1] / s[0]).abs() + (kp * gamma * s[0].powf(gamma - 1.0)).sqrt();
    let mut rows = Vec::new();
    for &n in cells {
        let dx = (cfg.x_max - cfg.x_min) / n as f64;
        let edges: Vec<f64> = (0..=n).map(|i| cfg.x_min + i as f64 * dx).collect();
        let area: Vec<f64> = edges.iter().map(|x| x.powf(d - 1.0)).collect();
        let vol: Vec<f64> = edges.windows(2).map(|e| (e[1].powf(d) - e[0].powf(d)) / d).collect();
        let mut u = exact_averages(&ss, d, cfg.t0, &edges);
        let mass0: f64 = u.iter().zip(&vol).map(|(s, v)| s[0] * v).sum();
        let mut flux_int = 0.0;
        let mut flux_abs = 0.0;
        let mut t = cfg.t0;
        let mut steps = 0;
        let ghost_edges = [cfg.x_min - dx, cfg.x_min, cfg.x_max, cfg.x_max + dx];
        while t < cfg.t1 - 1e-15 {
            let smax = u.iter().map(|s| speed(*s)).fold(0.0, f64::max);
            let dt = (cfg.cfl * dx / smax).min(cfg.t1 - t);
            let gl = exact_averages(&ss, d, t, &ghost_edges[0..2])[0];
            let gr = exact_averages(&ss, d, t, &ghost_edges[2..4])[0];
            let state = |i: isize| -> [f64; 2] {
                if i < 0 {
                    gl
                } else if i as usize >= n {
                    gr
                } else {
                    u[i as usize]
                }
            };
            let mut f = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let (l, r) = (state(k as isize - 1), state(k as isize));
                let (fl, fr) = (flux(l), flux(r));
                let a = speed(l).max(speed(r));
                f.push([0.5 * (fl[0] + fr[0]) - 0.5 * a * (r[0] - l[0]), 0.5 * (fl[1] + fr[1]) - 0.5 * a * (r[1] - l[1])]);
            }
            let bflux = area[n] * f[n][0] - area[0] * f[0][0];
            flux_int += dt * bflux;
            flux_abs += dt * (area[n] * f[n][0]).abs() + dt * (area[0] * f[0][0]).abs();
            let mut next = u.clone();
            for i in 0..n {
                let src = pressure(u[i][0]) * (area[i + 1] - area[i]);
                next[i][0] = u[i][0] - dt / vol[i] * (area[i + 1] * f[i + 1][0] - area[i] * f[i][0]);
                next[i][1] = u[i][1] - dt / vol[i] * (area[i + 1] * f[i + 1][1] - area[i] * f[i][1] - src);
            }
            if next.iter().any(|s| !(s[0] > 0.0) || !s[1].is_finite()) {
                return Err(Error::Blowup(t));
            }
            u = next;
            t += dt;
            steps += 1;
        }
        let mass1: f64 = u.iter().zip(&vol).map(|(s, v)| s[0] * v).sum();
        let exact = exact_averages(&ss, d, cfg.t1, &edges);
        let total: f64 = vol.iter().sum();
        let l1 = u.iter().zip(&exact).zip(&vol).map(|((a, b), v)| (a[0] - b[0]).abs() * v).sum::<f64>() / total;
        let linf = u.iter().zip(&exact).map(|(a, b)| (a[0] - b[0]).abs()).fold(0.0, f64::max);
        rows.push(CheckRow {
            cells: n,
            l1,
            linf,
            mass_defect: ((mass1 - mass0) + flux_int).abs() / flux_abs.max(1e-300),
            steps,
        });
    }
    let ratios = rows.windows(2).map(|w| w[0].l1 / w[1].l1).collect();
    Ok(CheckTable { rows, ratios })
}
