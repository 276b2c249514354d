//! Collocation of the linearized operator inside the shifted sound cone and its unstable spectrum.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{Local, ProfileCurve};

/// Potentials of the linearized flow sampled on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct LinearizedPotentials {
    pub z: Vec<f64>,
    pub h1: Vec<f64>,
    /// `H1` from `-(Laplacian Psi_P + l(r-1)/2)`.
    pub h1_alt: Vec<f64>,
    pub h2: Vec<f64>,
    pub h3: Vec<f64>,
    /// `(p-1) Q`.
    pub pq: Vec<f64>,
    /// `Lambda Q / Q`.
    pub lq: Vec<f64>,
    pub lam_h1: Vec<f64>,
    pub lam_h2: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub a3: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    h1: f64,
    h1_alt: f64,
    h2: f64,
    h3: f64,
    pq: f64,
    lq: f64,
    lam_h1: f64,
    lam_h2: f64,
    a1: f64,
    a2: f64,
    a3: f64,
}

fn point(curve: &ProfileCurve, l: &Local) -> Point {
    let (d, ell, r) = (curve.d, curve.ell, curve.r);
    let h2 = 1.0 - l.w;
    let h1 = 0.5 * ell * h2 * l.g;
    let h1_alt = 0.5 * (d * l.w + l.lam_w) - 0.5 * ell * (r - 1.0);
    let lq = 2.0 * l.g;
    let lam_h2 = -l.lam_w;
    let lam_h1 = 0.5 * ell * (-l.lam_w * l.g + h2 * l.lam_g);
    let pq = l.x * l.x;
    let h3 = l.h3;
    let k = h1 - (r - 2.0);
    Point {
        h1,
        h1_alt,
        h2,
        h3,
        pq,
        lq,
        lam_h1,
        lam_h2,
        a1: h2 * h1 - h2 * lam_h2 + h2 * k + h2 * h2 * lq,
        a2: 2.0 * h1 - (r - 2.0) + h2 * lq,
        a3: -k * h1 + h2 * lam_h1 - h2 * k * lq - pq * h3,
    }
}

pub fn potentials(curve: &ProfileCurve, z: &[f64]) -> LinearizedPotentials {
    let pts: Vec<Point> = z.iter().map(|&z| point(curve, &curve.local(z))).collect();
    let col = |f: fn(&Point) -> f64| pts.iter().map(f).collect::<Vec<_>>();
    LinearizedPotentials {
        z: z.to_vec(),
        h1: col(|p| p.h1),
        h1_alt: col(|p| p.h1_alt),
        h2: col(|p| p.h2),
        h3: col(|p| p.h3),
        pq: col(|p| p.pq),
        lq: col(|p| p.lq),
        lam_h1: col(|p| p.lam_h1),
        lam_h2: col(|p| p.lam_h2),
        a1: col(|p| p.a1),
        a2: col(|p| p.a2),
        a3: col(|p| p.a3),
    }
}

impl LinearizedPotentials {
    /// `A1 + (2a - a^2) H2 Lambda H2 - a A2 H2`.
    pub fn a2_tilde(&self, a: f64) -> Vec<f64> {
        (0..self.z.len())
            .map(|i| self.a1[i] + (2.0 * a - a * a) * self.h2[i] * self.lam_h2[i] - a * self.a2[i] * self.h2[i])
            .collect()
    }
}

/// `D_a = (1-a)^2 (w-1)^2 - sigma^2`.
pub fn shifted_discriminant(curve: &ProfileCurve, a: f64, z: f64) -> f64 {
    let l = curve.local(z);
    (1.0 - a).powi(2) * (l.w - 1.0).powi(2) - l.sigma * l.sigma
}

/// Root of `D_a` next to `Z2`.
pub fn shifted_root(curve: &ProfileCurve, a: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&a) {
        return Err(Error::InvalidParameter(format!("shift a = {a} outside [0, 0.5)")));
    }
    let f = |z: f64| shifted_discriminant(curve, a, z);
    let z2 = curve.z2;
    let lo = z2 * (1.0 - 1e-3);
    if f(lo) >= 0.0 {
        return Err(Error::RootNotBracketed(format!("D_a >= 0 below Z2 for a = {a}")));
    }
    let mut hi = z2 * (1.0 + 1e-3);
    while f(hi) < 0.0 {
        hi = z2 + 2.0 * (hi - z2);
        if hi > curve.z_max() {
            return Err(Error::RootNotBracketed(format!("no sign change of D_a for a = {a}")));
        }
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Chebyshev collocation in `s = Z^2` on `[0, Z_a^2]`.
///
/// Even functions of `Z` are smooth functions of `s`, and `Lambda = 2 s d/ds`,
/// `Laplacian = 4 s d^2/ds^2 + 2 d d/ds` have polynomial coefficients, so the origin is an
/// ordinary collocation node. Nodes are ordered from `Z_a` down to `0`.
#[derive(Debug, Clone)]
pub struct RadialChebyshev {
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub ds: DMatrix<f64>,
    pub dss: DMatrix<f64>,
}

fn cheb(m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let nn = m - 1;
    let x: Vec<f64> = (0..m).map(|j| (std::f64::consts::PI * j as f64 / nn as f64).cos()).collect();
    let c = |j: usize| (if j == 0 || j == nn { 2.0 } else { 1.0 }) * if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..m {
        let s: f64 = (0..m).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

impl RadialChebyshev {
    pub fn new(n: usize, z_a: f64) -> RadialChebyshev {
        let (x, d) = cheb(n);
        let sa = z_a * z_a;
        // s = sa (1 + x) / 2
        let k = 2.0 / sa;
        let s: Vec<f64> = x.iter().map(|x| 0.5 * sa * (1.0 + x)).collect();
        let z = s.iter().map(|s| s.max(0.0).sqrt()).collect();
        let dss = (&d * &d) * (k * k);
        RadialChebyshev { z, s, ds: d * k, dss }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `Lambda = Z d/dZ`.
    pub fn lambda(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| 2.0 * self.s[i] * self.ds[(i, j)])
    }

    /// Radial Laplacian in `d` dimensions.
    pub fn laplacian(&self, d: f64) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| 4.0 * self.s[i] * self.dss[(i, j)] + 2.0 * d * self.ds[(i, j)])
    }

    /// Magnitudes of the Chebyshev coefficients in `s` of nodal values `v`.
    pub fn coefficients(&self, v: &[Complex<f64>]) -> Vec<f64> {
        let m = self.len();
        let nn = m - 1;
        (0..m)
            .map(|k| {
                let mut acc = Complex::new(0.0, 0.0);
                for (j, vj) in v.iter().enumerate().take(m) {
                    let w = if j == 0 || j == nn { 0.5 } else { 1.0 };
                    let t = (std::f64::consts::PI * (k * j) as f64 / nn as f64).cos();
                    acc += vj * (w * t);
                }
                let ck = if k == 0 || k == nn { 1.0 } else { 2.0 };
                (acc * (ck / nn as f64)).norm()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct OperatorAssembly {
    pub a: f64,
    pub z_a: f64,
    pub grid: RadialChebyshev,
    pub potentials: LinearizedPotentials,
    /// Acts on `(Phi, Theta)` stacked at the grid nodes.
    pub matrix: DMatrix<f64>,
}

pub fn assemble(curve: &ProfileCurve, a: f64, n: usize) -> Result<OperatorAssembly> {
    if n < 16 {
        return Err(Error::AssemblyFailed(format!("n = {n} too small")));
    }
    let z_a = shifted_root(curve, a)?;
    let grid = RadialChebyshev::new(n, z_a);
    let pot = potentials(curve, &grid.z);
    let matrix = operator_matrix(&pot, &grid, curve.d, a)?;
    Ok(OperatorAssembly { a, z_a, grid, potentials: pot, matrix })
}

fn operator_matrix(pot: &LinearizedPotentials, grid: &RadialChebyshev, d: f64, a: f64) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let lam = grid.lambda();
    let lam2 = &lam * &lam;
    let lap = grid.laplacian(d);
    let a2t = pot.a2_tilde(a);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (h2, pq) = (pot.h2[i], pot.pq[i]);
        for j in 0..n {
            m[(i, j)] = -a * h2 * lam[(i, j)];
            m[(n + i, j)] = pq * lap[(i, j)] - (1.0 - a).powi(2) * h2 * h2 * lam2[(i, j)] + a2t[i] * lam[(i, j)];
            m[(n + i, n + j)] = -(2.0 - a) * h2 * lam[(i, j)];
        }
        m[(i, n + i)] = 1.0;
        m[(n + i, i)] += pot.a3[i];
        m[(n + i, n + i)] += pot.a2[i];
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::AssemblyFailed("non-finite operator entry".into()));
    }
    Ok(m)
}

/// Pointwise action of the operator on even test functions given with derivatives,
/// `(f, f', f'')` for `Phi` and `(g, g')` for `Theta`.
pub fn apply_pointwise(curve: &ProfileCurve, a: f64, z: f64, phi: [f64; 3], theta: [f64; 2]) -> [f64; 2] {
    let p = point(curve, &curve.local(z));
    let d = curve.d;
    let lphi = z * phi[1];
    let l2phi = z * phi[1] + z * z * phi[2];
    let lap = phi[2] + (d - 1.0) / z * phi[1];
    let a2t = p.a1 + (2.0 * a - a * a) * p.h2 * p.lam_h2 - a * p.a2 * p.h2;
    [
        -a * p.h2 * lphi + theta[0],
        p.pq * lap - (1.0 - a).powi(2) * p.h2 * p.h2 * l2phi + a2t * lphi + p.a3 * phi[0]
            - (2.0 - a) * p.h2 * z * theta[1]
            + p.a2 * theta[0],
    ]
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    /// Ratio of the trailing to the leading Chebyshev coefficients of `Phi`.
    pub tail: f64,
    /// Distance to the nearest eigenvalue of the coarser companion discretization.
    pub drift: Option<f64>,
    pub resolved: bool,
    /// `|lambda|` below the neutral tolerance.
    pub neutral: bool,
}

impl Eigenvalue {
    /// Multiplicity in the real spectrum: complex values stand for a conjugate pair.
    pub fn count(&self) -> usize {
        if self.im.abs() > 1e-9 {
            2
        } else {
            1
        }
    }

    pub fn value(&self) -> Complex<f64> {
        Complex::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub a: f64,
    pub z_a: f64,
    pub n: usize,
    pub threshold: f64,
    /// Eigenvalues with `Re >= -threshold` and `Im >= 0`, largest real part first.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Resolved, non-neutral eigenvalues with `Re >= 0`, conjugate pairs counted twice.
    pub unstable_count: usize,
    pub neutral_count: usize,
    pub converged: bool,
    #[serde(skip)]
    pub all: Vec<Complex<f64>>,
}

impl SpectralReport {
    pub fn unstable(&self) -> impl Iterator<Item = &Eigenvalue> {
        self.eigenvalues.iter().filter(|e| e.resolved && !e.neutral && e.re >= 0.0)
    }

    pub fn lambda_max(&self) -> Option<f64> {
        self.eigenvalues.iter().filter(|e| e.resolved).map(|e| e.re).reduce(f64::max)
    }

    fn recount(&mut self) {
        self.unstable_count = self.unstable().map(|e| e.count()).sum();
        self.neutral_count = self.eigenvalues.iter().filter(|e| e.resolved && e.neutral).map(|e| e.count()).sum();
    }

    /// Distance from `l` to the nearest computed eigenvalue, refined values included.
    pub fn distance(&self, l: Complex<f64>) -> f64 {
        let refined = self.eigenvalues.iter().flat_map(|e| [e.value(), e.value().conj()]);
        refined.chain(self.all.iter().cloned()).map(|c| (c - l).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Marks as unresolved every eigenvalue without a partner in `coarse` within `drift_tol`
    /// (relative to `max(1, |lambda|)`).
    pub fn cross_check(&mut self, coarse: &SpectralReport, drift_tol: f64) {
        for e in &mut self.eigenvalues {
            let l = e.value();
            let d = coarse.distance(l);
            e.drift = Some(d);
            if d > drift_tol * l.norm().max(1.0) {
                e.resolved = false;
            }
        }
        self.recount();
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralConfig {
    pub a: f64,
    pub threshold: f64,
    /// Largest trailing coefficient ratio for a resolved eigenfunction.
    pub resolution_tol: f64,
    pub drift_tol: f64,
    pub neutral_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { a: 0.02, threshold: 0.1, resolution_tol: 1e-8, drift_tol: 1e-3, neutral_tol: 1e-3 }
    }
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let mut b = m.clone();
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut b);
    let schur = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, 10_000)?;
    Some(schur.complex_eigenvalues().iter().cloned().collect())
}

/// Eigenvector for an approximate eigenvalue by inverse iteration.
pub fn eigenvector(m: &DMatrix<f64>, lambda: Complex<f64>) -> Option<DVector<Complex<f64>>> {
    let k = m.nrows();
    let shift = lambda + Complex::new(1e-10 * (1.0 + lambda.norm()), 0.0);
    let mc: DMatrix<Complex<f64>> = DMatrix::from_fn(k, k, |i, j| {
        Complex::new(m[(i, j)], 0.0) - if i == j { shift } else { Complex::new(0.0, 0.0) }
    });
    let lu = mc.lu();
    let mut v = DVector::from_fn(k, |i, _| Complex::new(1.0 + 0.01 * i as f64, 0.3));
    for _ in 0..3 {
        v = lu.solve(&v)?;
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        v /= Complex::new(norm, 0.0);
    }
    Some(v)
}

/// Two-sided Rayleigh quotient from inverse-iteration eigenvectors, with the right eigenvector.
fn refine(
    m: &DMatrix<f64>,
    mt: &DMatrix<f64>,
    mc: &DMatrix<Complex<f64>>,
    l: Complex<f64>,
) -> Option<(Complex<f64>, DVector<Complex<f64>>)> {
    let x = eigenvector(m, l)?;
    let y = eigenvector(mt, l.conj())?;
    let yx = y.dotc(&x);
    if yx.norm() == 0.0 {
        return Some((l, x));
    }
    let q = y.dotc(&(mc * &x)) / yx;
    Some((if q.re.is_finite() && q.im.is_finite() { q } else { l }, x))
}

/// Two-sided Rayleigh refinement of an approximate eigenvalue of `m`.
pub fn rayleigh(m: &DMatrix<f64>, l: Complex<f64>) -> Option<Complex<f64>> {
    refine(m, &m.transpose(), &m.map(|x| Complex::new(x, 0.0)), l).map(|(q, _)| q)
}

/// Eigenvalues with `Re >= -threshold`, with the coefficient-decay test on each eigenfunction.
pub fn unstable_spectrum(asm: &OperatorAssembly, cfg: &SpectralConfig) -> SpectralReport {
    let n = asm.grid.len();
    let (all, converged) = match eigenvalues(&asm.matrix) {
        Some(e) => (e, true),
        None => (Vec::new(), false),
    };
    let mut cand: Vec<Complex<f64>> = all.iter().cloned().filter(|l| l.re >= -cfg.threshold && l.im >= 0.0).collect();
    cand.sort_by(|a, b| b.re.total_cmp(&a.re));
    let mt = asm.matrix.transpose();
    let mc = asm.matrix.map(|x| Complex::new(x, 0.0));
    let eigenvalues = cand
        .into_iter()
        .map(|l0| {
            let (l, tail) = match refine(&asm.matrix, &mt, &mc, l0) {
                Some((l, v)) => {
                    let phi: Vec<Complex<f64>> = v.iter().take(n).cloned().collect();
                    let c = asm.grid.coefficients(&phi);
                    let head = c.iter().cloned().fold(0.0, f64::max);
                    let k0 = c.len() - c.len() / 5;
                    let tail = c[k0..].iter().cloned().fold(0.0, f64::max);
                    (l, if head > 0.0 { tail / head } else { f64::INFINITY })
                }
                None => (l0, f64::INFINITY),
            };
            Eigenvalue {
                re: l.re,
                im: l.im.max(0.0),
                tail,
                drift: None,
                resolved: tail < cfg.resolution_tol,
                neutral: l.norm() < cfg.neutral_tol,
            }
        })
        .collect::<Vec<_>>();
    let mut rep = SpectralReport {
        a: asm.a,
        z_a: asm.z_a,
        n,
        threshold: cfg.threshold,
        eigenvalues,
        unstable_count: 0,
        neutral_count: 0,
        converged,
        all,
    };
    rep.recount();
    rep
}

/// Spectra at `n` and `2n`, each cross-checked against the discretization with half the nodes.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralStudy {
    pub n: usize,
    pub report: SpectralReport,
    pub refined: SpectralReport,
    pub count_n: usize,
    pub count_2n: usize,
    /// Resolved eigenvalues with `Re >= 0`, neutral ones included.
    pub nonnegative_n: usize,
    pub nonnegative_2n: usize,
    pub consistent: bool,
    /// Largest relative drift of the unstable set between `n` and `2n`.
    pub drift: f64,
}

pub fn spectral_study(curve: &ProfileCurve, n: usize, cfg: &SpectralConfig) -> Result<SpectralStudy> {
    let sizes = [n / 2, n, 2 * n];
    let spectra: Vec<Result<SpectralReport>> = {
        use rayon::prelude::*;
        sizes.par_iter().map(|&k| Ok(unstable_spectrum(&assemble(curve, cfg.a, k)?, cfg))).collect()
    };
    let mut it = spectra.into_iter();
    let coarse = it.next().unwrap()?;
    let mut report = it.next().unwrap()?;
    let mut refined = it.next().unwrap()?;
    report.cross_check(&coarse, cfg.drift_tol);
    refined.cross_check(&report, cfg.drift_tol);
    let drift = report
        .unstable()
        .map(|e| {
            let l = e.value();
            refined.distance(l) / l.norm().max(1e-300)
        })
        .fold(0.0, f64::max);
    Ok(SpectralStudy {
        n,
        count_n: report.unstable_count,
        count_2n: refined.unstable_count,
        nonnegative_n: report.unstable_count + report.neutral_count,
        nonnegative_2n: refined.unstable_count + refined.neutral_count,
        consistent: report.unstable_count == refined.unstable_count
            && report.neutral_count == refined.neutral_count,
        drift,
        report,
        refined,
    })
}
