//! Integration from the origin towards the sonic line and the search for smooth speeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::branch::{branch_series, BranchSeries};
use crate::emden::{sonic_tol, Emden};
use crate::error::{Error, Result};
use crate::ode::{Dopri5, Solution, Status};
use crate::params::Parameters;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ProfileConfig {
    /// Launch radius for the origin series.
    pub launch_z: f64,
    /// Truncation order (in Z) of the launch series.
    pub series_order: usize,
    /// Relative tolerance for curve integration.
    pub rtol: f64,
    /// Relative tolerance used while shooting.
    pub shoot_rtol: f64,
    /// Number of terms of the sonic branch series.
    pub branch_terms: usize,
    /// Largest eigenvalue ratio at P2 considered by the scan.
    pub max_ratio: usize,
    /// Samples per resonance interval in the scan.
    pub samples: usize,
    /// Bisection stops once the bracket is shorter than this.
    pub tol_r: f64,
    /// Largest accepted smoothness defect at the matching section.
    pub miss_tol: f64,
    /// Outer radius of the completed curve.
    pub z_max: f64,
    /// Radius beyond which an origin trajectory counts as never meeting the sonic line.
    pub z_cap: f64,
    /// Largest step in y = log Z on stored curves.
    pub h_max: f64,
    /// Samples of the analytic branch stored across the sonic point.
    pub window_samples: usize,
    /// Matching section as a fraction of the branch radius.
    pub match_fraction: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            launch_z: 1e-4,
            series_order: 6,
            rtol: 1e-10,
            shoot_rtol: 1e-12,
            branch_terms: 80,
            max_ratio: 12,
            samples: 12,
            tol_r: 1e-13,
            miss_tol: 1e-6,
            z_max: 1e5,
            z_cap: 1e3,
            h_max: 0.005,
            window_samples: 41,
            match_fraction: 0.5,
        }
    }
}

/// Right side of the regular origin system in `y = log Z` for `(w, X = Z sigma)`.
pub fn origin_rhs(sys: &Emden, y: f64, s: &[f64; 2]) -> [f64; 2] {
    let (w, x) = (s[0], s[1]);
    let z2 = (2.0 * y).exp();
    let den = (w - 1.0) * (w - 1.0) * z2 - x * x;
    let dw = (-w * (w - sys.r) * (w - 1.0) * z2 + sys.d * x * x * (w - sys.w_e)) / den;
    let b = -sys.d * (w - 1.0) * (w - sys.w_e) + w * (w - sys.r);
    let dx = x * z2 / sys.ell * b / den;
    [dw, dx]
}

/// Right side in `y` for `(w, sigma)`.
pub fn plane_rhs(sys: &Emden, s: &[f64; 2]) -> [f64; 2] {
    let dt = sys.delta(s[0], s[1]);
    [-sys.delta1(s[0], s[1]) / dt, -sys.delta2(s[0], s[1]) / dt]
}

/// Right side in `sigma` for `(w, y)`.
pub fn sigma_rhs(sys: &Emden, sigma: f64, s: &[f64; 2]) -> [f64; 2] {
    let w = s[0];
    let d2 = sys.delta2(w, sigma);
    [sys.delta1(w, sigma) / d2, -sys.delta(w, sigma) / d2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SonicClass {
    HitsSonicAboveP2,
    HitsSonicBelowP2,
    ReachesP2,
    NoSonicEncounter,
}

#[derive(Debug, Clone, Serialize)]
pub struct SonicApproach {
    pub r: f64,
    pub class: SonicClass,
    /// Last state `(Z, w, sigma)`.
    pub last: [f64; 3],
    pub max_abs_dw: f64,
    /// Largest raw-system residual along the trajectory.
    pub max_residual: f64,
    pub crashed: bool,
    #[serde(skip)]
    pub z: Vec<f64>,
    #[serde(skip)]
    pub w: Vec<f64>,
    #[serde(skip)]
    pub sigma: Vec<f64>,
}

fn launch(params: &Parameters, r: f64, cfg: &ProfileConfig) -> Result<(Emden, [f64; 2])> {
    let series = super::origin::origin_series(params, r, cfg.series_order)?;
    let sys = Emden::new(params.dim(), params.ell, r);
    Ok((sys, [series.w_at(cfg.launch_z), series.x_at(cfg.launch_z)]))
}

/// Integrates the origin trajectory until it meets the sonic line, comes within `1e-3` of P2,
/// or passes `z_cap`.
pub fn integrate_to_sonic(params: &Parameters, r: f64, cfg: &ProfileConfig) -> Result<SonicApproach> {
    let (sys, y0) = launch(params, r, cfg)?;
    let (w2, s2) = match sys.sonic_roots() {
        Ok((lo, _)) => (lo, 1.0 - lo),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let near = |w: f64, s: f64| (w - w2).hypot(s - s2) < 1e-3;
    let sol = Dopri5::new(cfg.rtol).with_atol(1e-14).with_h_max(0.05).solve(
        |y, s| origin_rhs(&sys, y, s),
        cfg.launch_z.ln(),
        y0,
        cfg.z_cap.ln(),
        |y, s| {
            let z = y.exp();
            let sig = s[1] / z;
            sys.delta(s[0], sig) > -sonic_tol(s[0], sig) || near(s[0], sig)
        },
    );
    let mut out = SonicApproach {
        r,
        class: SonicClass::NoSonicEncounter,
        last: [0.0; 3],
        max_abs_dw: 0.0,
        max_residual: 0.0,
        crashed: matches!(sol.status, Status::StepUnderflow | Status::NonFinite | Status::MaxSteps),
        z: Vec::new(),
        w: Vec::new(),
        sigma: Vec::new(),
    };
    for (i, (&y, s)) in sol.t.iter().zip(sol.y.iter()).enumerate() {
        let z = y.exp();
        let sig = s[1] / z;
        let dw = sol.f[i][0];
        let dsig = (sol.f[i][1] - s[1]) / z;
        let c = sys.coefficients(s[0], sig);
        let res = (c.a1 * dw + c.b1 * dsig + c.d1).abs().max((c.a2 * dw + c.b2 * dsig + c.d2).abs());
        let scale = 1.0 + dw.abs() + dsig.abs() + sig * sig;
        out.max_residual = out.max_residual.max(res / scale);
        out.max_abs_dw = out.max_abs_dw.max(dw.abs());
        out.z.push(z);
        out.w.push(s[0]);
        out.sigma.push(sig);
    }
    let n = out.z.len() - 1;
    out.last = [out.z[n], out.w[n], out.sigma[n]];
    let ended_near_sonic = sol.status != Status::Finished;
    if ended_near_sonic {
        out.class = if near(out.w[n], out.sigma[n]) {
            SonicClass::ReachesP2
        } else if out.w[n] > w2 {
            SonicClass::HitsSonicAboveP2
        } else {
            SonicClass::HitsSonicBelowP2
        };
    }
    Ok(out)
}

/// Outcome of one shot: the origin trajectory compared with the analytic branch at
/// `sigma = sigma_2 + xi_m`.
#[derive(Debug, Clone)]
pub struct Shot {
    pub r: f64,
    pub xi_m: f64,
    pub branch: BranchSeries,
    /// `w_trajectory - W(xi_m)`, or `None` when the trajectory never reached the section.
    pub defect: Option<f64>,
    pub class: SonicClass,
    /// `y` and `w` at the section.
    pub y_m: f64,
    pub w_m: f64,
    pub inner: Option<Solution<2>>,
    pub leg: Option<Solution<2>>,
}

pub fn shoot(params: &Parameters, r: f64, xi_m: Option<f64>, cfg: &ProfileConfig, keep: bool) -> Result<Shot> {
    let (sys, y0) = launch(params, r, cfg)?;
    let branch = branch_series(&sys, cfg.branch_terms)?;
    let xi_m = xi_m.unwrap_or(cfg.match_fraction * branch.radius).min(0.5 * branch.s2);
    let (w2, s2) = (branch.w2, branch.s2);
    let s_stop = s2 + 1.5 * xi_m;
    let rtol = if keep { cfg.rtol.min(cfg.shoot_rtol) } else { cfg.shoot_rtol };
    let mut solver = Dopri5::new(rtol).with_atol(1e-15);
    if keep {
        solver = solver.with_h_max(cfg.h_max);
    }
    let inner = solver.solve(
        |y, s| origin_rhs(&sys, y, s),
        cfg.launch_z.ln(),
        y0,
        cfg.z_cap.ln(),
        |y, s| {
            let sig = s[1] / y.exp();
            sig <= s_stop || sys.delta(s[0], sig) > -sonic_tol(s[0], sig)
        },
    );
    let (y_end, st) = inner.last();
    let sig_end = st[1] / y_end.exp();
    let mut shot = Shot {
        r,
        xi_m,
        branch,
        defect: None,
        class: SonicClass::NoSonicEncounter,
        y_m: f64::NAN,
        w_m: f64::NAN,
        inner: None,
        leg: None,
    };
    if inner.status == Status::Finished {
        if keep {
            shot.inner = Some(inner);
        }
        return Ok(shot);
    }
    if sys.delta(st[0], sig_end) > -sonic_tol(st[0], sig_end) || sig_end > s_stop {
        shot.class = if st[0] > w2 { SonicClass::HitsSonicAboveP2 } else { SonicClass::HitsSonicBelowP2 };
        if keep {
            shot.inner = Some(inner);
        }
        return Ok(shot);
    }
    // final leg with sigma as the independent variable, landing exactly on the section
    let leg = solver.solve(
        |s, v| sigma_rhs(&sys, s, v),
        sig_end,
        [st[0], y_end],
        s2 + xi_m,
        |s, v| sys.delta(v[0], s) > -sonic_tol(v[0], s),
    );
    let (s_fin, v) = leg.last();
    if leg.status != Status::Finished || (s_fin - (s2 + xi_m)).abs() > 1e-14 {
        shot.class = if v[0] > w2 { SonicClass::HitsSonicAboveP2 } else { SonicClass::HitsSonicBelowP2 };
    } else {
        shot.class = SonicClass::ReachesP2;
        shot.defect = Some(v[0] - shot.branch.w(xi_m));
        shot.y_m = v[1];
        shot.w_m = v[0];
    }
    if keep {
        shot.inner = Some(inner);
        shot.leg = Some(leg);
    }
    Ok(shot)
}

/// Speed at which the eigenvalue ratio at P2 equals `target`, searched in `(1, r_hi)`.
pub fn resonance(params: &Parameters, target: f64, r_hi: f64) -> Option<f64> {
    let ratio = |r: f64| -> Option<f64> {
        let sys = Emden::new(params.dim(), params.ell, r);
        sys.sonic_point_p2().ok().and_then(|p| p[0].eigen_ratio())
    };
    let (mut lo, mut hi) = (1.0 + 1e-9, r_hi);
    let (flo, fhi) = (ratio(lo)? - target, ratio(hi)? - target);
    if flo * fhi > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match ratio(mid) {
            Some(m) if (m - target) * flo > 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeedRoot {
    pub r: f64,
    pub xi_m: f64,
    pub miss: f64,
    pub ratio: f64,
    /// Bracket that produced the root.
    pub bracket: (f64, f64),
}

/// Bisection on the sign of the smoothness defect with a fixed matching section.
pub fn shoot_speed(params: &Parameters, bracket: (f64, f64), cfg: &ProfileConfig) -> Result<SpeedRoot> {
    let (mut lo, mut hi) = bracket;
    let no_root = || Error::NoRootInBracket { lo: bracket.0, hi: bracket.1 };
    let probe_lo = shoot(params, lo, None, cfg, false)?;
    let probe_hi = shoot(params, hi, None, cfg, false)?;
    let xi_m = cfg.match_fraction * probe_lo.branch.radius.min(probe_hi.branch.radius);
    let sign = |r: f64| -> Result<Option<f64>> { Ok(shoot(params, r, Some(xi_m), cfg, false)?.defect) };
    let f_lo = sign(lo)?.ok_or_else(no_root)?;
    let f_hi = sign(hi)?.ok_or_else(no_root)?;
    if f_lo * f_hi > 0.0 {
        return Err(no_root());
    }
    while hi - lo > cfg.tol_r {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match sign(mid)? {
            Some(m) if m * f_lo > 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => return Err(no_root()),
        }
    }
    let r = 0.5 * (lo + hi);
    let shot = shoot(params, r, Some(xi_m), cfg, false)?;
    let miss = shot.defect.ok_or_else(no_root)?;
    if miss.abs() > cfg.miss_tol {
        // sign change through a pole of the defect, not a root
        return Err(no_root());
    }
    Ok(SpeedRoot { r, xi_m, miss, ratio: shot.branch.mu, bracket })
}

/// Scans each interval between consecutive integer eigenvalue ratios below `r_eye` and bisects
/// every sign change of the defect.
pub fn scan_speeds(params: &Parameters, cfg: &ProfileConfig) -> Vec<SpeedRoot> {
    let r_top = params.r_star.min(params.r_eye) - 1e-9;
    let mut edges = vec![1.0 + 1e-6];
    for n in 2..=cfg.max_ratio {
        if let Some(r) = resonance(params, n as f64, r_top) {
            edges.push(r);
        }
    }
    let intervals: Vec<(f64, f64)> = edges.windows(2).map(|e| (e[0], e[1])).collect();
    let mut roots: Vec<SpeedRoot> = intervals
        .par_iter()
        .flat_map_iter(|&(a, b)| {
            let k = cfg.samples.max(3);
            let pad = 1e-3 * (b - a);
            let rs: Vec<f64> = (0..k).map(|i| a + pad + (b - a - 2.0 * pad) * i as f64 / (k - 1) as f64).collect();
            let vals: Vec<Option<f64>> = rs.iter().map(|&r| shoot(params, r, None, cfg, false).ok().and_then(|s| s.defect)).collect();
            let mut found = Vec::new();
            for i in 0..k - 1 {
                if let (Some(u), Some(v)) = (vals[i], vals[i + 1]) {
                    if u * v <= 0.0 {
                        if let Ok(root) = shoot_speed(params, (rs[i], rs[i + 1]), cfg) {
                            found.push(root);
                        }
                    }
                }
            }
            found
        })
        .collect();
    roots.sort_by(|a, b| a.r.total_cmp(&b.r));
    roots
}
