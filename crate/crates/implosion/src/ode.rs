//! Dormand-Prince 5(4) embedded Runge-Kutta pair with step-size control.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Finished,
    Stopped,
    StepUnderflow,
    MaxSteps,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub f: Vec<[f64; N]>,
    pub status: Status,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { rtol: 1e-10, atol: 1e-14, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 1_000_000 }
    }
}

fn step<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k0: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N], [f64; N]) {
    let mut k = [[0.0; N]; 7];
    k[0] = *k0;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for s in 0..7 {
        for i in 0..N {
            y5[i] += h * B[s] * k[s][i];
            err[i] += h * E[s] * k[s][i];
        }
    }
    (y5, err, k[6])
}

impl Dopri5 {
    pub fn new(rtol: f64) -> Self {
        Dopri5 { rtol, ..Default::default() }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    /// Integrates from `t0` to `t_end` (either direction). `stop` is checked after each accepted step.
    pub fn solve<const N: usize, F, S>(&self, mut f: F, t0: f64, y0: [f64; N], t_end: f64, mut stop: S) -> Solution<N>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        S: FnMut(f64, &[f64; N]) -> bool,
    {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let mut t = t0;
        let mut y = y0;
        let mut k0 = f(t, &y);
        let mut sol = Solution { t: vec![t], y: vec![y], f: vec![k0], status: Status::Finished };
        if span == 0.0 {
            return sol;
        }
        let norm0 = k0.iter().zip(y.iter()).map(|(k, v)| (k / (self.atol + self.rtol * v.abs())).powi(2)).sum::<f64>();
        let mut h = if norm0 > 0.0 { 0.01 * (N as f64 / norm0).sqrt() } else { 1e-3 * span };
        h = h.min(self.h_max).min(span).max(self.h_min);
        let mut fac_prev = 1e-4f64;
        for _ in 0..self.max_steps {
            let remaining = (t_end - t) * dir;
            if remaining <= 0.0 {
                return sol;
            }
            let last = h >= remaining;
            let hh = if last { remaining } else { h };
            let (y5, err, k6) = step(&mut f, t, &y, &k0, dir * hh);
            if y5.iter().any(|v| !v.is_finite()) {
                if hh <= self.h_min {
                    sol.status = Status::NonFinite;
                    return sol;
                }
                h = 0.25 * hh;
                continue;
            }
            let mut e2 = 0.0;
            for i in 0..N {
                let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                e2 += (err[i] / sc).powi(2);
            }
            let en = (e2 / N as f64).sqrt();
            if en <= 1.0 {
                t = if last { t_end } else { t + dir * hh };
                y = y5;
                k0 = k6;
                sol.t.push(t);
                sol.y.push(y);
                sol.f.push(k0);
                if stop(t, &y) {
                    sol.status = Status::Stopped;
                    return sol;
                }
                // PI controller
                let fac = 0.9 * en.max(1e-10).powf(-0.7 / 5.0) * fac_prev.powf(0.4 / 5.0);
                fac_prev = en.max(1e-4);
                h = (hh * fac.clamp(0.2, 5.0)).min(self.h_max);
            } else {
                h = hh * (0.9 * en.powf(-0.2)).max(0.2);
                if h < self.h_min {
                    sol.status = Status::StepUnderflow;
                    return sol;
                }
            }
        }
        sol.status = Status::MaxSteps;
        sol
    }

    /// Fixed-step integration with `n` equal steps.
    pub fn fixed<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t_end: f64, n: usize) -> [f64; N]
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let h = (t_end - t0) / n as f64;
        let mut y = y0;
        let mut t = t0;
        for _ in 0..n {
            let k0 = f(t, &y);
            y = step(&mut f, t, &y, &k0, h).0;
            t += h;
        }
        y
    }
}

/// Cubic Hermite interpolation on a stored solution; `t` must lie inside the sampled range.
pub fn hermite<const N: usize>(sol_t: &[f64], sol_y: &[[f64; N]], sol_f: &[[f64; N]], t: f64) -> [f64; N] {
    let n = sol_t.len();
    let inc = sol_t[n - 1] >= sol_t[0];
    let k = if inc {
        sol_t.partition_point(|&s| s <= t)
    } else {
        sol_t.partition_point(|&s| s >= t)
    }
    .clamp(1, n - 1);
    let (t0, t1) = (sol_t[k - 1], sol_t[k]);
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * sol_y[k - 1][i] + h10 * h * sol_f[k - 1][i] + h01 * sol_y[k][i] + h11 * h * sol_f[k][i];
    }
    out
}
