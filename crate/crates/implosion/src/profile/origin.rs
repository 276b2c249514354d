//! Even power series of the profile at Z = 0, in the variable t = Z^2.
//!
//! The unknowns are `w` and `X = Z*sigma`, which are both regular at the origin.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::Parameters;
use crate::series;

#[derive(Debug, Clone, Serialize)]
pub struct OriginSeries {
    pub d: f64,
    pub ell: f64,
    pub r: f64,
    /// Coefficients of `w` in powers of `t = Z^2`.
    pub w: Vec<f64>,
    /// Coefficients of `X = Z sigma` in powers of `t`.
    pub x: Vec<f64>,
    /// Truncation order in `Z`.
    pub order: usize,
}

pub fn origin_series(params: &Parameters, r: f64, order: usize) -> Result<OriginSeries> {
    if order < 4 {
        return Err(Error::InvalidParameter(format!("origin series order must be >= 4, got {order}")));
    }
    if !(r > 1.0) {
        return Err(Error::InvalidParameter(format!("front speed must exceed 1, got {r}")));
    }
    if (r - 2.0).abs() < 1e-6 {
        return Err(Error::GaugeSingularity(r));
    }
    Ok(OriginSeries::solve(params.dim(), params.ell, r, order))
}

impl OriginSeries {
    pub fn solve(d: f64, ell: f64, r: f64, order: usize) -> Self {
        let m = order / 2;
        let n = m + 1;
        let w_e = ell * (r - 1.0) / d;
        let x0 = 2.0 / ell.sqrt();
        let mut w = vec![0.0; n];
        let mut x = vec![0.0; n];
        w[0] = w_e;
        x[0] = x0;
        for k in 1..n {
            // X_k from the first equation at order k-1
            let res_a = Self::residual_a(d, ell, r, &w, &x, k)[k - 1];
            x[k] = -res_a / (2.0 * ell * x0 * k as f64);
            // w_k from the second equation at order k
            let res_b = Self::residual_b(d, ell, r, &w, &x, k + 1)[k];
            w[k] = -res_b / (x0 / ell * (2.0 * k as f64 + d));
        }
        OriginSeries { d, ell, r, w, x, order: 2 * m }
    }

    fn t_deriv(a: &[f64]) -> Vec<f64> {
        // coefficients of t*a_t
        a.iter().enumerate().map(|(k, &c)| k as f64 * c).collect()
    }

    /// `2t(w-1)w_t + 2 ell X X_t + w^2 - r w`, truncated to `n` terms.
    fn residual_a(_d: f64, ell: f64, r: f64, w: &[f64], x: &[f64], n: usize) -> Vec<f64> {
        let mut wm1 = w.to_vec();
        wm1[0] -= 1.0;
        let a = series::mul(&wm1, &Self::t_deriv(w), n);
        let b = series::mul(x, &series::deriv(x), n);
        let c = series::mul(w, w, n);
        (0..n)
            .map(|k| 2.0 * a[k] + 2.0 * ell * b[k] + c[k] - r * w.get(k).copied().unwrap_or(0.0))
            .collect()
    }

    /// `2t(X/ell)w_t + 2t(w-1)X_t + (d/ell) X (w - w_e)`, truncated to `n` terms.
    fn residual_b(d: f64, ell: f64, r: f64, w: &[f64], x: &[f64], n: usize) -> Vec<f64> {
        let w_e = ell * (r - 1.0) / d;
        let mut wm1 = w.to_vec();
        wm1[0] -= 1.0;
        let mut wme = w.to_vec();
        wme[0] -= w_e;
        let a = series::mul(x, &Self::t_deriv(w), n);
        let b = series::mul(&wm1, &Self::t_deriv(x), n);
        let c = series::mul(x, &wme, n);
        (0..n).map(|k| 2.0 / ell * a[k] + 2.0 * b[k] + d / ell * c[k]).collect()
    }

    pub fn w_at(&self, z: f64) -> f64 {
        series::eval(&self.w, z * z)
    }

    pub fn x_at(&self, z: f64) -> f64 {
        series::eval(&self.x, z * z)
    }

    /// `(w, X, Lambda w, Lambda X)` with `Lambda = Z d/dZ`.
    pub fn state(&self, z: f64) -> [f64; 4] {
        let t = z * z;
        [
            series::eval(&self.w, t),
            series::eval(&self.x, t),
            2.0 * t * series::eval_deriv(&self.w, t),
            2.0 * t * series::eval_deriv(&self.x, t),
        ]
    }

    /// Coefficients of `rho_P = (phi X)^(ell/2)` in `t`.
    pub fn rho(&self) -> Vec<f64> {
        let phi = self.ell.sqrt() / 2.0;
        series::pow(&series::scale(&self.x, phi), self.ell / 2.0, self.x.len())
    }

    /// Coefficients of `Psi_P` in `t`, from `Psi_P' = -Z w / 2` and `Psi_P(0) = -1/(r-2)`.
    pub fn psi(&self) -> Vec<f64> {
        let mut out = vec![-1.0 / (self.r - 2.0)];
        for (k, &c) in self.w.iter().enumerate() {
            out.push(-c / (4.0 * (k as f64 + 1.0)));
        }
        out
    }

    /// `g/Z^2` where `g = Lambda X / X`, as a series in `t`.
    pub fn g_reduced(&self) -> Vec<f64> {
        let xt = series::scale(&series::deriv(&self.x), 2.0);
        series::div(&xt, &self.x, self.x.len() - 1)
    }

    /// Residuals of both profile equations evaluated with the truncated polynomials at `z`.
    pub fn residual(&self, z: f64) -> f64 {
        let [w, x, lw, lx] = self.state(z);
        let t = z * z;
        // (w-1) Lw t + ell X LX + (w^2 - r w) t, divided by t
        let a = (w - 1.0) * lw + self.ell * x * lx / t + w * w - self.r * w;
        let b = x / self.ell * lw + (w - 1.0) * lx + self.d / self.ell * x * (w - self.ell * (self.r - 1.0) / self.d);
        a.abs().max(b.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, Regime};

    #[test]
    fn leading_values() {
        let p = derive(3, 2.0, 0.0, 0.0, Regime::Euler).unwrap();
        let s = origin_series(&p, 1.2, 6).unwrap();
        assert!((s.w[0] - 2.0 * 0.2 / 3.0).abs() < 1e-15);
        assert!((s.x[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.rho()[0] - 1.0).abs() < 1e-15);
        assert!((s.psi()[0] + 1.0 / (1.2 - 2.0)).abs() < 1e-15);
        assert!(matches!(origin_series(&p, 2.0, 6), Err(Error::GaugeSingularity(_))));
        assert!(origin_series(&p, 1.2, 3).is_err());
    }

    #[test]
    fn residual_scales_with_order() {
        let p = derive(3, 2.0, 0.0, 0.0, Regime::Euler).unwrap();
        for order in [4usize, 6, 8] {
            let s = origin_series(&p, 1.2, order).unwrap();
            let (z1, z2) = (0.1, 0.05);
            let slope = (s.residual(z1) / s.residual(z2)).log2();
            assert!((slope - order as f64).abs() < 0.3, "order {order}: slope {slope}");
        }
    }
}
