//! Analytic branch through the sonic point along the weak eigendirection.
//!
//! With `xi = sigma - sigma_2` the branch `w = W(xi)` solves `delta2 W' = delta1`;
//! `y = y_2 + Y(xi)` follows from `dy/dxi = -delta/delta2`.

use serde::Serialize;

use crate::emden::{CriticalPoint, Emden, Spectrum2};
use crate::error::{Error, Result};
use crate::series;

#[derive(Debug, Clone, Serialize)]
pub struct BranchSeries {
    pub p2: CriticalPoint,
    pub w2: f64,
    pub s2: f64,
    /// Eigenvalue ratio strong/weak at P2.
    pub mu: f64,
    /// `W` coefficients, `a[0] = w2`.
    pub a: Vec<f64>,
    /// `dy/dxi` coefficients.
    pub q: Vec<f64>,
    /// `Y` coefficients with `Y(0) = 0`.
    pub ycoef: Vec<f64>,
    /// Estimated radius of convergence in `xi`.
    pub radius: f64,
}

fn delta_series(sys: &Emden, w: &[f64], s: &[f64], n: usize) -> [Vec<f64>; 3] {
    let (d, l, r) = (sys.d, sys.ell, sys.r);
    let ww = series::mul(w, w, n);
    let ss = series::mul(s, s, n);
    let mut wm1 = w.to_vec();
    wm1[0] -= 1.0;
    let mut wmr = w.to_vec();
    wmr[0] -= r;
    let mut wme = w.to_vec();
    wme[0] -= sys.w_e;
    let sq = series::mul(&wm1, &wm1, n);
    let delta: Vec<f64> = (0..n).map(|k| sq[k] - ss[k]).collect();
    let cubic = series::mul(&series::mul(w, &wm1, n), &wmr, n);
    let quad = series::mul(&wme, &ss, n);
    let delta1: Vec<f64> = (0..n).map(|k| cubic[k] - d * quad[k]).collect();
    let mut inner: Vec<f64> = (0..n)
        .map(|k| (l + d - 1.0) * ww[k] - (l + d + l * r - r) * w.get(k).copied().unwrap_or(0.0) - l * ss[k])
        .collect();
    inner[0] += l * r;
    let delta2 = series::scale(&series::mul(s, &inner, n), 1.0 / l);
    [delta, delta1, delta2]
}

pub fn branch_series(sys: &Emden, terms: usize) -> Result<BranchSeries> {
    let terms = terms.max(12);
    let [p2, _] = sys.sonic_point_p2()?;
    let (w2, s2) = (p2.w, p2.sigma);
    let a1 = match (p2.eigenvalues, p2.weak_slope()) {
        (Spectrum2::Real(_), Some(sl)) if sl.is_finite() => sl,
        (Spectrum2::Complex { .. }, _) => {
            return Err(Error::CrossingFailed(format!("complex eigenvalues at P2 for r = {}", sys.r)))
        }
        _ => return Err(Error::CrossingFailed(format!("degenerate eigendirection at P2 for r = {}", sys.r))),
    };
    let mu = match p2.eigenvalues {
        Spectrum2::Real([a, b]) => b / a,
        _ => unreachable!(),
    };
    let g = sys.gradients(w2, s2);
    let (d1w, d2w, d2s) = (g[0][0], g[1][0], g[1][1]);
    let mut a = vec![0.0; terms + 1];
    a[0] = w2;
    a[1] = a1;
    let s = [s2, 1.0];
    for n in 2..=terms {
        let m = n + 1;
        let [_, d1, d2] = delta_series(sys, &a[..m], &s, m);
        let wp = series::deriv(&a[..m]);
        let lhs = series::mul(&d2, &wp, m);
        let res = lhs[n] - d1[n];
        let c = n as f64 * (d2s + d2w * a1) + d2w * a1 - d1w;
        if c.abs() < 1e-14 {
            return Err(Error::CrossingFailed(format!("resonant eigenvalue ratio at r = {}", sys.r)));
        }
        a[n] = -res / c;
    }
    let m = terms + 1;
    let [dl, _, d2] = delta_series(sys, &a, &s, m);
    // both vanish at xi = 0, divide out one power
    let q: Vec<f64> = series::div(&dl[1..], &d2[1..], m - 2).into_iter().map(|v| -v).collect();
    let ycoef = series::integral(&q);
    let tail = 10.min(terms / 2);
    let inv: f64 = ((terms + 1 - tail)..=terms).map(|k| a[k].abs().powf(1.0 / k as f64)).sum::<f64>() / tail as f64;
    let radius = if inv > 0.0 { 1.0 / inv } else { f64::INFINITY };
    Ok(BranchSeries { p2, w2, s2, mu, a, q, ycoef, radius })
}

impl BranchSeries {
    pub fn w(&self, xi: f64) -> f64 {
        series::eval(&self.a, xi)
    }

    pub fn dw(&self, xi: f64) -> f64 {
        series::eval_deriv(&self.a, xi)
    }

    pub fn q(&self, xi: f64) -> f64 {
        series::eval(&self.q, xi)
    }

    pub fn dq(&self, xi: f64) -> f64 {
        series::eval_deriv(&self.q, xi)
    }

    pub fn y(&self, xi: f64) -> f64 {
        series::eval(&self.ycoef, xi)
    }

    /// Inverts `Y(xi) = dy` by Newton iteration, starting from the linear guess.
    pub fn xi_of_y(&self, dy: f64) -> f64 {
        let mut xi = dy / self.q[0];
        for _ in 0..50 {
            let step = (self.y(xi) - dy) / self.q(xi);
            xi -= step;
            if step.abs() < 1e-16 * (1.0 + xi.abs()) {
                break;
            }
        }
        xi
    }
}
