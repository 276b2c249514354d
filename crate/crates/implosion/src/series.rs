//! Truncated power series helpers.

pub fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate().take(n) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `a / b` with `b[0] != 0`.
pub fn div(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for k in 0..n {
        let mut s = a.get(k).copied().unwrap_or(0.0);
        for j in 1..=k.min(b.len() - 1) {
            s -= b[j] * out[k - j];
        }
        out[k] = s / b[0];
    }
    out
}

/// `g^alpha` with `g[0] > 0`.
pub fn pow(g: &[f64], alpha: f64, n: usize) -> Vec<f64> {
    let mut f = vec![0.0; n];
    f[0] = g[0].powf(alpha);
    for k in 1..n {
        let mut s = 0.0;
        for j in 1..=k.min(g.len() - 1) {
            s += (alpha * j as f64 - (k - j) as f64) * g[j] * f[k - j];
        }
        f[k] = s / (k as f64 * g[0]);
    }
    f
}

pub fn deriv(a: &[f64]) -> Vec<f64> {
    a.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect()
}

/// Antiderivative vanishing at 0.
pub fn integral(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + 1];
    for (k, &c) in a.iter().enumerate() {
        out[k + 1] = c / (k + 1) as f64;
    }
    out
}

pub fn eval(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn eval_deriv(a: &[f64], x: f64) -> f64 {
    a.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c)
}

pub fn add(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|k| a.get(k).copied().unwrap_or(0.0) + b.get(k).copied().unwrap_or(0.0)).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|v| v * c).collect()
}
