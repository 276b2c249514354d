//! Repulsivity of the profile inside and outside the sonic cone.

use serde::Serialize;

use crate::params::Parameters;
use crate::profile::{Local, ProfileCurve};

#[derive(Debug, Clone, Serialize)]
pub struct LambdaFields {
    pub z: Vec<f64>,
    pub lam_w: Vec<f64>,
    pub lam_sigma: Vec<f64>,
    pub f: Vec<f64>,
}

/// `(Lambda w, Lambda sigma, F)` on the curve grid. At `Z2` the values are the limits along the
/// smooth eigendirection, stored by the crossing.
pub fn lambda_fields(curve: &ProfileCurve) -> LambdaFields {
    LambdaFields { z: curve.z.clone(), lam_w: curve.lam_w.clone(), lam_sigma: curve.lam_sigma.clone(), f: curve.f.clone() }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Margin {
    pub min: f64,
    pub at: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Margins {
    pub inside_1: Margin,
    pub inside_2: Margin,
    pub outside_1: Margin,
    pub outside: Margin,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdicts {
    pub inside: bool,
    /// `None` when the regime does not assert the outside inequalities.
    pub outside: Option<bool>,
    pub kappa: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepulsivityReport {
    #[serde(skip)]
    pub grid: Vec<f64>,
    #[serde(skip)]
    pub f: Vec<f64>,
    #[serde(skip)]
    pub q_inside_1: Vec<f64>,
    #[serde(skip)]
    pub q_inside_2: Vec<f64>,
    #[serde(skip)]
    pub q_outside: Vec<f64>,
    pub z2: f64,
    pub z_check: f64,
    pub margins: Margins,
    /// Margins recomputed on every other grid point.
    pub margins_half: Margins,
    pub kappa: Kappa,
    /// Largest violation of `(p-1)(Q')^2/Q = 4F^2` on the grid, relative to `max 4F^2`.
    pub identity_error: f64,
    /// Bound on `|1 - q_outside|` beyond the checked range from the fitted tail.
    pub tail_bound: f64,
    pub verdicts: Verdicts,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Kappa {
    /// `-w' - sigma'` at P2.
    pub from_derivatives: f64,
    /// `1 - w - Lambda w - (1-w) F / sigma` at P2.
    pub from_coercivity: f64,
}

pub fn surface_gravity(curve: &ProfileCurve) -> Kappa {
    let c = &curve.crossing;
    let f2 = c.sigma2 + c.lam_sigma2;
    Kappa {
        from_derivatives: -c.lam_w2 - c.lam_sigma2,
        from_coercivity: 1.0 - c.w2 - c.lam_w2 - (1.0 - c.w2) * f2 / c.sigma2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicSpeeds {
    pub z: Vec<f64>,
    pub l: Vec<f64>,
    pub l_bar: Vec<f64>,
    pub sign_changes: usize,
    /// Radius of the (first) sign change of `l`.
    pub root: Option<f64>,
}

pub fn characteristic_speeds(curve: &ProfileCurve) -> CharacteristicSpeeds {
    let l: Vec<f64> = curve.w.iter().zip(&curve.sigma).map(|(w, s)| 1.0 - w - s).collect();
    let l_bar: Vec<f64> = curve.w.iter().zip(&curve.sigma).map(|(w, s)| 1.0 - w + s).collect();
    let mut changes = 0;
    let mut root = None;
    for i in 1..l.len() {
        if (l[i - 1] < 0.0) != (l[i] < 0.0) && l[i] != 0.0 {
            changes += 1;
            if root.is_none() {
                let t = l[i - 1] / (l[i - 1] - l[i]);
                root = Some(curve.z[i - 1] + t * (curve.z[i] - curve.z[i - 1]));
            }
        }
    }
    CharacteristicSpeeds { z: curve.z.clone(), l, l_bar, sign_changes: changes, root }
}

fn q_inside_1(l: &Local) -> f64 {
    let a = 1.0 - l.w - l.lam_w;
    let f = l.sigma + l.lam_sigma;
    a * a - f * f
}

fn q_inside_2(l: &Local) -> f64 {
    1.0 - l.w - l.lam_w - (1.0 - l.w) * (l.sigma + l.lam_sigma) / l.sigma
}

fn q_out(l: &Local) -> f64 {
    1.0 - l.w - l.lam_w
}

/// Grid minimum over `idx`, then refined by golden section on the continuous curve.
fn refined(curve: &ProfileCurve, v: &[f64], idx: &[usize], lo: f64, hi: f64, q: fn(&Local) -> f64) -> Margin {
    let z = &curve.z;
    let Some(k) = (0..idx.len()).min_by(|&a, &b| v[idx[a]].total_cmp(&v[idx[b]])) else {
        return Margin { min: f64::INFINITY, at: f64::NAN };
    };
    let mut best = Margin { min: v[idx[k]], at: z[idx[k]] };
    let a0 = if k > 0 { z[idx[k - 1]] } else { z[idx[k]] };
    let b0 = if k + 1 < idx.len() { z[idx[k + 1]] } else { z[idx[k]] };
    let (mut a, mut b) = (a0.max(lo), b0.min(hi));
    if b <= a {
        return best;
    }
    let f = |t: f64| q(&curve.local(t));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a) < 1e-12 * b.abs().max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    for (t, ft) in [(c, fc), (d, fd), (lo.max(a0), f(lo.max(a0))), (hi.min(b0), f(hi.min(b0)))] {
        if ft < best.min && t >= lo && t <= hi {
            best = Margin { min: ft, at: t };
        }
    }
    best
}

fn minima(curve: &ProfileCurve, q1: &[f64], q2: &[f64], qo: &[f64], z_hi: f64, stride: usize) -> Margins {
    let z = &curve.z;
    let n2 = curve.i2;
    let inside: Vec<usize> = (0..n2).filter(|i| i % stride == 0).collect();
    let outside: Vec<usize> = (n2..z.len()).filter(|&i| z[i] <= z_hi && (i - n2) % stride == 0).collect();
    let z2 = curve.z2;
    let at_z2 = curve.local(z2);
    let with_z2 = |m: Margin, q: fn(&Local) -> f64| {
        let v = q(&at_z2);
        if v < m.min {
            Margin { min: v, at: z2 }
        } else {
            m
        }
    };
    Margins {
        inside_1: with_z2(refined(curve, q1, &inside, 0.0, z2, q_inside_1), q_inside_1),
        inside_2: with_z2(refined(curve, q2, &inside, 0.0, z2, q_inside_2), q_inside_2),
        outside_1: with_z2(refined(curve, q1, &outside, z2, z_hi, q_inside_1), q_inside_1),
        outside: with_z2(refined(curve, qo, &outside, z2, z_hi, q_out), q_out),
    }
}

pub fn margins(curve: &ProfileCurve, params: &Parameters) -> RepulsivityReport {
    let n = curve.z.len();
    let mut q1 = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    let mut qo = Vec::with_capacity(n);
    for i in 0..n {
        let (w, s, lw, f) = (curve.w[i], curve.sigma[i], curve.lam_w[i], curve.f[i]);
        let a = 1.0 - w - lw;
        q1.push(a * a - f * f);
        q2.push(a - (1.0 - w) * f / s);
        qo.push(a);
    }
    let z_check = 1e3 * curve.z2;
    let m = minima(curve, &q1, &q2, &qo, z_check, 1);
    let mh = minima(curve, &q1, &q2, &qo, z_check, 2);
    // (p-1)(dQ/dZ)^2/Q against 4F^2 with a three-point derivative
    let p1 = params.p - 1.0;
    let phi2 = params.ell / 4.0;
    let q: Vec<f64> = curve.x.iter().map(|x| phi2 * x * x).collect();
    let scale = curve.f.iter().map(|f| 4.0 * f * f).fold(0.0, f64::max);
    let mut identity_error: f64 = 0.0;
    for i in 1..n - 1 {
        let (h0, h1) = (curve.z[i] - curve.z[i - 1], curve.z[i + 1] - curve.z[i]);
        let dq = -h1 / (h0 * (h0 + h1)) * q[i - 1] + (h1 - h0) / (h0 * h1) * q[i] + h0 / (h1 * (h0 + h1)) * q[i + 1];
        let lhs = p1 * dq * dq / q[i];
        let rhs = 4.0 * curve.f[i] * curve.f[i];
        identity_error = identity_error.max((lhs - rhs).abs() / scale);
    }
    let kappa = surface_gravity(curve);
    let zm = curve.z_max();
    let tail_bound = (curve.c_w.abs() * (1.0 + curve.r) + 0.0) * zm.powf(-curve.r);
    let asserts_outside = params.d == 3 && params.ell > 3f64.sqrt();
    let verdicts = Verdicts {
        inside: m.inside_1.min > 0.0 && m.inside_2.min > 0.0,
        outside: asserts_outside.then_some(m.outside_1.min > 0.0 && m.outside.min > 0.0),
        kappa: kappa.from_derivatives > 0.0,
    };
    RepulsivityReport {
        grid: curve.z.clone(),
        f: curve.f.clone(),
        q_inside_1: q1,
        q_inside_2: q2,
        q_outside: qo,
        z2: curve.z2,
        z_check,
        margins: m,
        margins_half: mh,
        kappa,
        identity_error,
        tail_bound,
        verdicts,
    }
}

impl RepulsivityReport {
    pub fn passes(&self) -> bool {
        self.verdicts.inside && self.verdicts.kappa && self.verdicts.outside.unwrap_or(true)
    }

    /// Largest change of a reported minimum between the full and the halved grid.
    pub fn halving_drift(&self) -> f64 {
        let a = &self.margins;
        let b = &self.margins_half;
        [
            (a.inside_1.min - b.inside_1.min).abs(),
            (a.inside_2.min - b.inside_2.min).abs(),
            (a.outside_1.min - b.outside_1.min).abs(),
            (a.outside.min - b.outside.min).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}
