//! Completed profile curve: origin segment, analytic crossing of P2, far-field tail.

use serde::Serialize;

use super::branch::BranchSeries;
use super::origin::OriginSeries;
use super::shoot::{plane_rhs, scan_speeds, shoot, ProfileConfig, SonicClass, SpeedRoot};
use crate::emden::{sonic_tol, Emden};
use crate::error::{Error, Result};
use crate::ode::{hermite, Dopri5, Status};
use crate::params::Parameters;
use crate::series;

/// Radius below which local quantities come from the origin series.
const ORIGIN_SWITCH: f64 = 0.25;
const LOCAL_ORDER: usize = 48;
const DENSE_STEP: f64 = 2e-3;

#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub w2: f64,
    pub sigma2: f64,
    pub eigenvalues: [f64; 2],
    pub ratio: f64,
    /// Slope `dw/dsigma` of the smooth (weak) direction.
    pub slope: f64,
    pub xi_m: f64,
    pub y2: f64,
    /// Values of `(Lambda w, Lambda sigma)` at P2 from the branch limit.
    pub lam_w2: f64,
    pub lam_sigma2: f64,
    /// Largest `|Lambda w|` over the stored crossing window.
    pub max_abs_dw: f64,
    #[serde(skip)]
    pub branch: BranchSeries,
}

/// Stored `(w, X)` samples in `y` with derivatives, for Hermite interpolation.
#[derive(Debug, Clone, Default)]
pub struct Segment {
    pub y: Vec<f64>,
    pub s: Vec<[f64; 2]>,
    pub f: Vec<[f64; 2]>,
}

impl Segment {
    fn push(&mut self, y: f64, s: [f64; 2], f: [f64; 2]) {
        if let Some(&last) = self.y.last() {
            if y <= last {
                return;
            }
        }
        self.y.push(y);
        self.s.push(s);
        self.f.push(f);
    }

    fn contains(&self, y: f64) -> bool {
        !self.y.is_empty() && y >= self.y[0] && y <= *self.y.last().unwrap()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileCurve {
    pub d: f64,
    pub ell: f64,
    pub r: f64,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lam_w: Vec<f64>,
    pub lam_sigma: Vec<f64>,
    /// `X = Z sigma`, regular at the origin.
    pub x: Vec<f64>,
    /// `F = sigma + Lambda sigma = dX/dZ`.
    pub f: Vec<f64>,
    /// Index of the first sample with `Z >= Z2`.
    pub i2: usize,
    pub z2: f64,
    pub c_w: f64,
    pub c_sigma: f64,
    pub tail_slope: f64,
    pub tail_slope_sigma: f64,
    pub crossing: Crossing,
    #[serde(skip)]
    pub origin: OriginSeries,
    #[serde(skip)]
    pub inner: Segment,
    #[serde(skip)]
    pub outer: Segment,
}

/// Local values at one radius, including the second-order quantities used by the linearization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Local {
    pub z: f64,
    pub w: f64,
    pub sigma: f64,
    pub x: f64,
    pub lam_w: f64,
    pub lam_sigma: f64,
    /// `Lambda X / X = 1 + Lambda sigma / sigma`.
    pub g: f64,
    pub lam_g: f64,
    /// `Delta rho_P / rho_P`.
    pub h3: f64,
}

fn x_rhs_from_plane(y: f64, w: f64, s: f64, fw: f64, fs: f64) -> ([f64; 2], [f64; 2]) {
    let z = y.exp();
    ([w, z * s], [fw, z * (s + fs)])
}

/// Builds the completed curve for a speed `r` that is (close to) a smooth speed.
pub fn build_curve(params: &Parameters, r: f64, xi_m: Option<f64>, cfg: &ProfileConfig) -> Result<ProfileCurve> {
    let sys = Emden::new(params.dim(), params.ell, r);
    let shot = shoot(params, r, xi_m, cfg, true)?;
    if shot.class != SonicClass::ReachesP2 {
        return Err(Error::CrossingFailed(format!("trajectory at r = {r} does not reach P2 ({:?})", shot.class)));
    }
    let miss = shot.defect.unwrap_or(f64::INFINITY);
    if miss.abs() > cfg.miss_tol {
        return Err(Error::CrossingFailed(format!("smoothness defect {miss:e} exceeds tolerance at r = {r}")));
    }
    let branch = shot.branch.clone();
    let xi_m = shot.xi_m;
    let mut inner = Segment::default();
    let sol = shot.inner.as_ref().unwrap();
    for i in 0..sol.t.len() {
        inner.push(sol.t[i], sol.y[i], sol.f[i]);
    }
    // final leg was integrated in sigma; store it in y
    let leg = shot.leg.as_ref().unwrap();
    for i in 1..leg.t.len() {
        let (s, [w, y]) = (leg.t[i], leg.y[i]);
        let dt = sys.delta(w, s);
        let (fw, fs) = (-sys.delta1(w, s) / dt, -sys.delta2(w, s) / dt);
        let (st, f) = x_rhs_from_plane(y, w, s, fw, fs);
        inner.push(y, st, f);
    }
    let y2 = shot.y_m - branch.y(xi_m);
    let q0 = branch.q[0];
    let crossing = Crossing {
        w2: branch.w2,
        sigma2: branch.s2,
        eigenvalues: match branch.p2.eigenvalues {
            crate::emden::Spectrum2::Real(v) => v,
            _ => [f64::NAN; 2],
        },
        ratio: branch.mu,
        slope: branch.a[1],
        xi_m,
        y2,
        lam_w2: branch.a[1] / q0,
        lam_sigma2: 1.0 / q0,
        max_abs_dw: (0..=200)
            .map(|k| {
                let xi = xi_m * (1.0 - 2.0 * k as f64 / 200.0);
                (branch.dw(xi) / branch.q(xi)).abs()
            })
            .fold(0.0, f64::max),
        branch,
    };
    let branch = &crossing.branch;
    // far field from the other side of the branch
    let xs = -xi_m;
    let start = [branch.w(xs), branch.s2 + xs];
    let y_start = y2 + branch.y(xs);
    let tail = Dopri5::new(cfg.rtol).with_atol(1e-20).with_h_max(cfg.h_max.max(0.02)).solve(
        |_, s| plane_rhs(&sys, s),
        y_start,
        start,
        cfg.z_max.ln(),
        |_, s| sys.delta(s[0], s[1]) < sonic_tol(s[0], s[1]) || s[1] <= 0.0,
    );
    if tail.status != Status::Finished {
        let (_, s) = tail.last();
        return Err(Error::WrongBranch(format!(
            "continuation past P2 at r = {r} stopped at (w, sigma) = ({:.6}, {:.6}) before reaching the far field",
            s[0], s[1]
        )));
    }
    let mut outer = Segment::default();
    for i in 0..tail.t.len() {
        let (st, f) = x_rhs_from_plane(tail.t[i], tail.y[i][0], tail.y[i][1], tail.f[i][0], tail.f[i][1]);
        outer.push(tail.t[i], st, f);
    }
    // tail fit over the last decade
    let y_hi = cfg.z_max.ln();
    let y_lo = y_hi - 10f64.ln();
    let pts: Vec<(f64, f64, f64)> =
        tail.t.iter().zip(tail.y.iter()).filter(|(y, _)| **y >= y_lo).map(|(y, s)| (*y, s[0], s[1])).collect();
    let slope_of = |k: usize| -> f64 {
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + [p.1, p.2][k].abs().ln() / n));
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for p in &pts {
            sxy += (p.0 - mx) * ([p.1, p.2][k].abs().ln() - my);
            sxx += (p.0 - mx) * (p.0 - mx);
        }
        sxy / sxx
    };
    let tail_slope = slope_of(0);
    let tail_slope_sigma = slope_of(1);
    if (tail_slope + r).abs() > 0.05 {
        return Err(Error::WrongBranch(format!("tail slope {tail_slope:.4} does not match -r = {:.4}", -r)));
    }
    let const_of = |k: usize| -> f64 {
        let m = pts.iter().map(|p| [p.1, p.2][k].abs().ln() + r * p.0).sum::<f64>() / pts.len() as f64;
        m.exp() * pts.last().map(|p| [p.1, p.2][k].signum()).unwrap_or(1.0)
    };
    let (c_w, c_sigma) = (const_of(0), const_of(1));

    let mut curve = ProfileCurve {
        d: sys.d,
        ell: sys.ell,
        r,
        z: Vec::new(),
        w: Vec::new(),
        sigma: Vec::new(),
        lam_w: Vec::new(),
        lam_sigma: Vec::new(),
        x: Vec::new(),
        f: Vec::new(),
        i2: 0,
        z2: y2.exp(),
        c_w,
        c_sigma,
        tail_slope,
        tail_slope_sigma,
        crossing: crossing.clone(),
        origin: OriginSeries::solve(sys.d, sys.ell, r, LOCAL_ORDER),
        inner,
        outer,
    };
    let push = |c: &mut ProfileCurve, y: f64, w: f64, x: f64, lw: f64, lx: f64| {
        let z = y.exp();
        if let Some(&last) = c.z.last() {
            if z <= last * (1.0 + 1e-9) {
                return;
            }
        }
        let s = x / z;
        c.z.push(z);
        c.w.push(w);
        c.sigma.push(s);
        c.lam_w.push(lw);
        c.lam_sigma.push((lx - x) / z);
        c.x.push(x);
        c.f.push(lx / z);
    };
    let inner_seg = curve.inner.clone();
    for i in 0..inner_seg.y.len() {
        push(&mut curve, inner_seg.y[i], inner_seg.s[i][0], inner_seg.s[i][1], inner_seg.f[i][0], inner_seg.f[i][1]);
    }
    let nwin = cfg.window_samples.max(3);
    for k in 1..nwin {
        let xi = xi_m * (1.0 - 2.0 * k as f64 / (nwin - 1) as f64);
        let y = y2 + branch.y(xi);
        let z = y.exp();
        let (w, s, q) = (branch.w(xi), branch.s2 + xi, branch.q(xi));
        if xi <= 0.0 && curve.i2 == 0 {
            curve.i2 = curve.z.len();
        }
        push(&mut curve, y, w, z * s, branch.dw(xi) / q, z * (s + 1.0 / q));
    }
    let outer_seg = curve.outer.clone();
    for i in 1..outer_seg.y.len() {
        push(&mut curve, outer_seg.y[i], outer_seg.s[i][0], outer_seg.s[i][1], outer_seg.f[i][0], outer_seg.f[i][1]);
    }
    if curve.sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::WrongBranch("sigma leaves the positive half-plane".into()));
    }
    Ok(curve)
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectedRoot {
    pub root: SpeedRoot,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSolution {
    pub curve: ProfileCurve,
    pub root: SpeedRoot,
    pub rejected: Vec<RejectedRoot>,
}

/// Scans for smooth speeds and returns the first one whose continuation reaches the far field.
pub fn find_profile(params: &Parameters, cfg: &ProfileConfig) -> Result<ProfileSolution> {
    let roots = scan_speeds(params, cfg);
    if roots.is_empty() {
        return Err(Error::NoRootInBracket { lo: 1.0, hi: params.r_eye });
    }
    let mut rejected = Vec::new();
    let mut last_err = None;
    for root in roots {
        match build_curve(params, root.r, Some(root.xi_m), cfg) {
            Ok(curve) => return Ok(ProfileSolution { curve, root, rejected }),
            Err(e) => {
                rejected.push(RejectedRoot { root: root.clone(), reason: e.to_string() });
                last_err = Some(e);
            }
        }
    }
    Err(last_err.unwrap())
}

impl ProfileCurve {
    pub fn y2(&self) -> f64 {
        self.crossing.y2
    }

    /// Local values at radius `z` in `[0, z_max]`.
    pub fn local(&self, z: f64) -> Local {
        let (d, l) = (self.d, self.ell);
        if z < ORIGIN_SWITCH {
            let t = z * z;
            let o = &self.origin;
            let [w, x, lw, lx] = o.state(z);
            let gr = o.g_reduced();
            let (g0, g1) = (series::eval(&gr, t), series::eval_deriv(&gr, t));
            let g = t * g0;
            let lam_g = t * (2.0 * g0 + 2.0 * t * g1);
            let h3 = 0.5 * l * (d * g0 + 2.0 * t * g1) + 0.25 * l * l * t * g0 * g0;
            let sigma = if z > 0.0 { x / z } else { f64::INFINITY };
            let lam_sigma = if z > 0.0 { (lx - x) / z } else { f64::NEG_INFINITY };
            return Local { z, w, sigma, x, lam_w: lw, lam_sigma, g, lam_g, h3 };
        }
        let y = z.ln();
        let b = &self.crossing.branch;
        let dy = y - self.crossing.y2;
        let (ylo, yhi) = (b.y(self.crossing.xi_m), b.y(-self.crossing.xi_m));
        if dy >= ylo && dy <= yhi {
            let xi = b.xi_of_y(dy);
            let (w, s, q, dq) = (b.w(xi), b.s2 + xi, b.q(xi), b.dq(xi));
            let lam_w = b.dw(xi) / q;
            let lam_sigma = 1.0 / q;
            let g = 1.0 + 1.0 / (q * s);
            let lam_g = -(dq * s + q) / (q * q * q * s * s);
            let h3 = (0.5 * l * lam_g + 0.25 * l * l * g * g + (d - 2.0) * 0.5 * l * g) / (z * z);
            return Local { z, w, sigma: s, x: z * s, lam_w, lam_sigma, g, lam_g, h3 };
        }
        let seg = if self.inner.contains(y) { &self.inner } else { &self.outer };
        let [w, x] = self.dense(seg, y);
        self.local_from_state(z, w, x)
    }

    fn flow(&self, y: f64, s: [f64; 2]) -> [f64; 2] {
        let z = y.exp();
        let l = self.local_from_state(z, s[0], s[1]);
        [l.lam_w, l.x + z * l.lam_sigma]
    }

    /// State at `y` by RK4 from the nearest stored node; smooth in `y` to round-off.
    fn dense(&self, seg: &Segment, y: f64) -> [f64; 2] {
        let k = seg.y.partition_point(|&v| v <= y).clamp(1, seg.y.len() - 1);
        let k = if y - seg.y[k - 1] < seg.y[k] - y { k - 1 } else { k };
        let (y0, mut s) = (seg.y[k], seg.s[k]);
        let dy = y - y0;
        if dy == 0.0 {
            return s;
        }
        let n = (dy.abs() / DENSE_STEP).ceil() as usize;
        let h = dy / n as f64;
        let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
        for i in 0..n {
            let t = y0 + i as f64 * h;
            let k1 = self.flow(t, s);
            let k2 = self.flow(t + 0.5 * h, add(s, k1, 0.5 * h));
            let k3 = self.flow(t + 0.5 * h, add(s, k2, 0.5 * h));
            let k4 = self.flow(t + h, add(s, k3, h));
            s = [
                s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
        }
        s
    }

    /// Cubic Hermite state at `y`; cheaper than [`Self::local`] but only fourth-order accurate.
    pub fn interpolated(&self, z: f64) -> [f64; 2] {
        let y = z.ln();
        let seg = if self.inner.contains(y) { &self.inner } else { &self.outer };
        hermite(&seg.y, &seg.s, &seg.f, y)
    }

    /// Local values from the state `(w, X)` through the field formulas.
    pub fn local_from_state(&self, z: f64, w: f64, x: f64) -> Local {
        let sys = Emden::new(self.d, self.ell, self.r);
        let (d, l) = (self.d, self.ell);
        let s = x / z;
        let dt = sys.delta(w, s);
        let (fw, fs) = (-sys.delta1(w, s) / dt, -sys.delta2(w, s) / dt);
        let bq = -d * (w - 1.0) * (w - sys.w_e) + w * (w - sys.r);
        let bqp = -d * (2.0 * w - 1.0 - sys.w_e) + 2.0 * w - sys.r;
        let g = bq / (l * dt);
        let ddt = 2.0 * (w - 1.0) * fw - 2.0 * s * fs;
        let lam_g = (bqp * fw * dt - bq * ddt) / (l * dt * dt);
        let h3 = (0.5 * l * lam_g + 0.25 * l * l * g * g + (d - 2.0) * 0.5 * l * g) / (z * z);
        Local { z, w, sigma: s, x, lam_w: fw, lam_sigma: fs, g, lam_g, h3 }
    }

    pub fn z_max(&self) -> f64 {
        *self.z.last().unwrap()
    }
}
