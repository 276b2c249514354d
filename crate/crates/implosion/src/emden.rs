//! The autonomous (w, sigma) phase plane in the variable y = log Z.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub w: f64,
    pub sigma: f64,
    pub y: Option<f64>,
}

impl PhasePoint {
    pub fn new(w: f64, sigma: f64) -> Self {
        PhasePoint { w, sigma, y: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub a1: f64,
    pub b1: f64,
    pub d1: f64,
    pub a2: f64,
    pub b2: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Determinants {
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
}

/// Phase-plane system for fixed (d, ell, r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Emden {
    pub d: f64,
    pub ell: f64,
    pub r: f64,
    pub w_e: f64,
}

impl Emden {
    pub fn new(d: f64, ell: f64, r: f64) -> Self {
        Emden { d, ell, r, w_e: ell * (r - 1.0) / d }
    }

    pub fn from_params(params: &Parameters) -> Result<Self> {
        Ok(Emden::new(params.dim(), params.ell, params.speed()?))
    }

    pub fn coefficients(&self, w: f64, s: f64) -> Coefficients {
        let (d, l, r) = (self.d, self.ell, self.r);
        Coefficients {
            a1: w - 1.0,
            b1: l * s,
            d1: w * w - r * w + l * s * s,
            a2: s / l,
            b2: w - 1.0,
            d2: s * ((1.0 + d / l) * w - r),
        }
    }

    pub fn delta(&self, w: f64, s: f64) -> f64 {
        (w - 1.0) * (w - 1.0) - s * s
    }

    pub fn delta1(&self, w: f64, s: f64) -> f64 {
        w * (w - 1.0) * (w - self.r) - self.d * (w - self.w_e) * s * s
    }

    /// Quadratic factor of `delta2`: `delta2 = (sigma/ell) * quad`.
    fn quad2(&self, w: f64, s: f64) -> f64 {
        let (d, l, r) = (self.d, self.ell, self.r);
        (l + d - 1.0) * w * w - w * (l + d + l * r - r) + l * r - l * s * s
    }

    pub fn delta2(&self, w: f64, s: f64) -> f64 {
        s / self.ell * self.quad2(w, s)
    }

    pub fn determinants(&self, w: f64, s: f64) -> Determinants {
        Determinants { delta: self.delta(w, s), delta1: self.delta1(w, s), delta2: self.delta2(w, s) }
    }

    /// `(dw/dy, dsigma/dy)`; fails when `|delta|` is below the sonic tolerance.
    pub fn vector_field(&self, w: f64, s: f64) -> Result<(f64, f64)> {
        let dt = self.delta(w, s);
        if dt.abs() < sonic_tol(w, s) {
            return Err(Error::NotCritical(format!("sonic singularity at w={w}, sigma={s}")));
        }
        Ok((-self.delta1(w, s) / dt, -self.delta2(w, s) / dt))
    }

    /// Field rescaled by `delta`: `(-delta1, -delta2)`.
    pub fn desingularized(&self, w: f64, s: f64) -> (f64, f64) {
        (-self.delta1(w, s), -self.delta2(w, s))
    }

    /// Partial derivatives `[[d1_w, d1_s], [d2_w, d2_s]]` of `(delta1, delta2)`.
    pub fn gradients(&self, w: f64, s: f64) -> [[f64; 2]; 2] {
        let (d, l, r) = (self.d, self.ell, self.r);
        let d1w = 3.0 * w * w - 2.0 * (1.0 + r) * w + r - d * s * s;
        let d1s = -2.0 * d * (w - self.w_e) * s;
        let d2w = s / l * (2.0 * (l + d - 1.0) * w - (l + d + l * r - r));
        let d2s = ((l + d - 1.0) * w * w - w * (l + d + l * r - r) + l * r - 3.0 * l * s * s) / l;
        [[d1w, d1s], [d2w, d2s]]
    }

    /// The two sonic-line roots `w` of `(d-1)w^2 + w(r-d-d*w_e) + d*w_e = 0`, ascending.
    pub fn sonic_roots(&self) -> Result<(f64, f64)> {
        let (d, r, we) = (self.d, self.r, self.w_e);
        let a = d - 1.0;
        let b = r - d - d * we;
        let c = d * we;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Err(Error::NoSonicRoot(r));
        }
        let sq = disc.sqrt();
        // stable form of the quadratic formula
        let q = -0.5 * (b + b.signum() * sq);
        let (x1, x2) = (q / a, c / q);
        Ok(if x1 < x2 { (x1, x2) } else { (x2, x1) })
    }

    pub fn sonic_discriminant(&self) -> f64 {
        let (d, r, we) = (self.d, self.r, self.w_e);
        let b = r - d - d * we;
        b * b - 4.0 * (d - 1.0) * d * we
    }

    /// Both sonic candidates as critical points; the lower root is the one reached from the origin.
    pub fn sonic_point_p2(&self) -> Result<[CriticalPoint; 2]> {
        let (lo, hi) = self.sonic_roots()?;
        let a = self.desingularized_jacobian(lo, 1.0 - lo)?;
        let mut b = self.desingularized_jacobian(hi, 1.0 - hi)?;
        b.kind = CriticalKind::Other;
        Ok([a, b])
    }

    /// Jacobian of `(-delta1, -delta2)` at a critical point, with eigen-data.
    pub fn desingularized_jacobian(&self, w: f64, s: f64) -> Result<CriticalPoint> {
        let dets = self.determinants(w, s);
        let scale = 1.0 + w * w + s * s;
        if dets.delta.abs() > 1e-9 * scale || dets.delta1.abs() > 1e-9 * scale || dets.delta2.abs() > 1e-9 * scale {
            return Err(Error::NotCritical(format!("({w}, {s}) has determinants {dets:?}")));
        }
        let g = self.gradients(w, s);
        let jac = [[-g[0][0], -g[0][1]], [-g[1][0], -g[1][1]]];
        Ok(CriticalPoint::from_jacobian(CriticalKind::P2, w, s, jac))
    }
}

pub fn sonic_tol(w: f64, s: f64) -> f64 {
    1e-9 * (1.0 + w * w + s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriticalKind {
    P2,
    P6,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Spectrum2 {
    Real([f64; 2]),
    Complex { re: f64, im: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub kind: CriticalKind,
    pub w: f64,
    pub sigma: f64,
    /// Rows are `d/dw` and `d/dsigma` components of `(-delta1, -delta2)`.
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: Spectrum2,
    /// Unit eigenvectors as `(w, sigma)` components, ordered like the eigenvalues (weak first).
    pub eigendirections: Option<[[f64; 2]; 2]>,
    pub defective: bool,
}

impl CriticalPoint {
    fn from_jacobian(kind: CriticalKind, w: f64, sigma: f64, jac: [[f64; 2]; 2]) -> Self {
        let tr = jac[0][0] + jac[1][1];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let disc = tr * tr / 4.0 - det;
        let scale = tr.abs().max(det.abs().sqrt()).max(1e-300);
        if disc < 0.0 {
            return CriticalPoint {
                kind,
                w,
                sigma,
                jacobian: jac,
                eigenvalues: Spectrum2::Complex { re: tr / 2.0, im: (-disc).sqrt() },
                eigendirections: None,
                defective: false,
            };
        }
        let sq = disc.sqrt();
        let (l1, l2) = (tr / 2.0 - sq, tr / 2.0 + sq);
        let (weak, strong) = if l1.abs() <= l2.abs() { (l1, l2) } else { (l2, l1) };
        let defective = sq < 1e-10 * scale;
        let vec_for = |lam: f64| -> [f64; 2] {
            // (J - lam) v = 0, take the better-conditioned row
            let r0 = [jac[0][0] - lam, jac[0][1]];
            let r1 = [jac[1][0], jac[1][1] - lam];
            let row = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) { r0 } else { r1 };
            let v = [-row[1], row[0]];
            let n = v[0].hypot(v[1]);
            let mut v = [v[0] / n, v[1] / n];
            // orient with sigma increasing
            if v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0) {
                v = [-v[0], -v[1]];
            }
            v
        };
        CriticalPoint {
            kind,
            w,
            sigma,
            jacobian: jac,
            eigenvalues: Spectrum2::Real([weak, strong]),
            eigendirections: if defective { None } else { Some([vec_for(weak), vec_for(strong)]) },
            defective,
        }
    }

    /// Ratio strong/weak of a real node; `None` for saddles, foci and defective points.
    pub fn eigen_ratio(&self) -> Option<f64> {
        match self.eigenvalues {
            Spectrum2::Real([a, b]) if a * b > 0.0 && !self.defective => Some(b / a),
            _ => None,
        }
    }

    /// Slope `dw/dsigma` of the weak direction.
    pub fn weak_slope(&self) -> Option<f64> {
        self.eigendirections.map(|v| v[0][0] / v[0][1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Locus {
    Field,
    Sonic,
    Delta1,
    Delta2,
}

impl Locus {
    pub fn id(self) -> &'static str {
        match self {
            Locus::Field => "field",
            Locus::Sonic => "delta",
            Locus::Delta1 => "delta1",
            Locus::Delta2 => "delta2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortraitRow {
    pub w: f64,
    pub sigma: f64,
    /// Normalized direction of `(-delta1, -delta2)` for field rows, segment vector for locus rows.
    pub fw: f64,
    pub fsigma: f64,
    pub locus: Locus,
}

#[derive(Debug, Clone, Serialize)]
pub struct Portrait {
    pub rows: Vec<PortraitRow>,
    pub critical: Vec<CriticalPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub w_min: f64,
    pub w_max: f64,
    pub s_min: f64,
    pub s_max: f64,
}

pub fn portrait_sample(sys: &Emden, window: Window, n: usize) -> Result<Portrait> {
    if n < 2 {
        return Err(Error::InvalidParameter("portrait grid needs n >= 2".into()));
    }
    let ws: Vec<f64> = (0..n).map(|i| window.w_min + (window.w_max - window.w_min) * i as f64 / (n - 1) as f64).collect();
    let ss: Vec<f64> = (0..n).map(|j| window.s_min + (window.s_max - window.s_min) * j as f64 / (n - 1) as f64).collect();
    let mut rows: Vec<PortraitRow> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (w, s) = (ws[k / n], ss[k % n]);
            let (fw, fs) = sys.desingularized(w, s);
            let norm = fw.hypot(fs);
            let (fw, fs) = if norm > 0.0 { (fw / norm, fs / norm) } else { (0.0, 0.0) };
            PortraitRow { w, sigma: s, fw, fsigma: fs, locus: Locus::Field }
        })
        .collect();
    for (locus, f) in [
        (Locus::Sonic, &(|w, s| sys.delta(w, s)) as &(dyn Fn(f64, f64) -> f64 + Sync)),
        (Locus::Delta1, &|w, s| sys.delta1(w, s)),
        (Locus::Delta2, &|w, s| sys.delta2(w, s)),
    ] {
        let vals: Vec<f64> = (0..n * n).map(|k| f(ws[k / n], ss[k % n])).collect();
        for [a, b] in contour_segments(&ws, &ss, &vals) {
            rows.push(PortraitRow { w: a[0], sigma: a[1], fw: b[0] - a[0], fsigma: b[1] - a[1], locus });
        }
    }
    let mut critical = Vec::new();
    if let Ok(pts) = sys.sonic_point_p2() {
        critical.extend(pts);
    }
    critical.push(CriticalPoint {
        kind: CriticalKind::P6,
        w: 0.0,
        sigma: 0.0,
        jacobian: [[-sys.r, 0.0], [0.0, -sys.r]],
        eigenvalues: Spectrum2::Real([-sys.r, -sys.r]),
        eigendirections: None,
        defective: true,
    });
    Ok(Portrait { rows, critical })
}

/// Marching squares for the zero set of `vals[i*ny + j] = f(xs[i], ys[j])`.
pub fn contour_segments(xs: &[f64], ys: &[f64], vals: &[f64]) -> Vec<[[f64; 2]; 2]> {
    let ny = ys.len();
    let v = |i: usize, j: usize| vals[i * ny + j];
    let mut segs = Vec::new();
    for i in 0..xs.len() - 1 {
        for j in 0..ny - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let mut cuts: Vec<[f64; 2]> = Vec::with_capacity(4);
            for k in 0..4 {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                let (fa, fb) = (v(a.0, a.1), v(b.0, b.1));
                if (fa < 0.0) != (fb < 0.0) {
                    let t = fa / (fa - fb);
                    cuts.push([
                        xs[a.0] + t * (xs[b.0] - xs[a.0]),
                        ys[a.1] + t * (ys[b.1] - ys[a.1]),
                    ]);
                }
            }
            match cuts.len() {
                2 => segs.push([cuts[0], cuts[1]]),
                4 => {
                    let center = 0.25 * (v(i, j) + v(i + 1, j) + v(i + 1, j + 1) + v(i, j + 1));
                    if (center < 0.0) == (v(i, j) < 0.0) {
                        segs.push([cuts[0], cuts[3]]);
                        segs.push([cuts[1], cuts[2]]);
                    } else {
                        segs.push([cuts[0], cuts[1]]);
                        segs.push([cuts[2], cuts[3]]);
                    }
                }
                _ => {}
            }
        }
    }
    segs
}
