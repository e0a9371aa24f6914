//! Direct time-domain solution of
//! `phi(t) = alpha sin(omega t) (theta(t) + int_0^t phi(s) eta(t - s) ds)`,
//! `theta(t) = 1 + 2i int_0^t phi`, by product integration on a uniform grid.
//!
//! Substituting `theta` turns the equation into a single convolution with
//! kernel `eta + 2i`.

use crate::error::{Error, Result};
use crate::quad::gk15_nodes;
use crate::specfun::{erfc_sqrt_iu, eta_unchecked, ModelParams};
use crate::transseries::TimeSeries;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const CLOSED_FORM_LAGS: usize = 8;
const MIN_ORDER: f64 = 1.2;

#[derive(Debug, Clone)]
pub struct PhiSolution {
    pub params: ModelParams,
    pub dt: f64,
    pub t_max: f64,
    /// `phi(j dt)` for `j = 0..=N`.
    pub phi: Vec<C64>,
    pub order_est: f64,
}

impl PhiSolution {
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// Piecewise-linear interpolant.
    pub fn at(&self, t: f64) -> C64 {
        let x = t / self.dt;
        let j = (x.floor() as usize).min(self.phi.len() - 2);
        let f = x - j as f64;
        self.phi[j] * (1.0 - f) + self.phi[j + 1] * f
    }
}

/// Antiderivatives of `E(u) = erfc(sqrt(iu))` and `u E(u)`.
fn moments(u: f64) -> (C64, C64, C64) {
    let e = erfc_sqrt_iu(u);
    let v = C64::new(0.0, u);
    let sv = v.sqrt();
    let ev = (-v).exp();
    let i0 = -C64::i() * ((v - 0.5) * e - (v / PI).sqrt() * ev);
    let i1 = -((v * v / 2.0 - 0.375) * e - (v * sv + 1.5 * sv) * ev / (2.0 * PI.sqrt()));
    (e, i0, i1)
}

/// Hat-function weights `A_l = int eta (u - a)/dt`, `B_l = int eta (b - u)/dt`
/// over `[a, b] = [l dt, (l + 1) dt]`.
fn weights(dt: f64, lags: usize) -> (Vec<C64>, Vec<C64>) {
    let w: Vec<(C64, C64)> = (0..lags)
        .into_par_iter()
        .map(|l| {
            let a = l as f64 * dt;
            let b = a + dt;
            if l < CLOSED_FORM_LAGS {
                let (ea, i0a, i1a) = moments(a);
                let (eb, i0b, i1b) = moments(b);
                let m0 = -(eb - ea) - C64::i() * (i0b - i0a);
                let m1 = -(b * eb - a * ea) + (i0b - i0a) - C64::i() * (i1b - i1a);
                ((m1 - a * m0) / dt, (b * m0 - m1) / dt)
            } else {
                let mut wa = ZERO;
                let mut wb = ZERO;
                for (x, wk, _) in gk15_nodes(a, b) {
                    let e = eta_unchecked(x) * wk;
                    wa += e * (x - a);
                    wb += e * (b - x);
                }
                (wa / dt, wb / dt)
            }
        })
        .collect();
    let shift = C64::new(0.0, dt);
    w.into_iter().map(|(a, b)| (a + shift, b + shift)).unzip()
}

fn march(params: &ModelParams, t_max: f64, dt: f64) -> Vec<C64> {
    let n = (t_max / dt).round() as usize;
    let mut phi = vec![ZERO; n + 1];
    if params.alpha == 0.0 || n == 0 {
        return phi;
    }
    let (a, b) = weights(dt, n);
    // history weight of phi_j at step n is A_{n-1-j} + B_{n-j}
    let mut w = vec![ZERO; n + 1];
    for l in 1..n {
        w[l] = a[l - 1] + b[l];
    }
    for k in 1..=n {
        let mut s = C64::new(1.0, 0.0);
        for j in 1..k {
            s += phi[j] * w[k - j];
        }
        let c = params.alpha * (params.omega * k as f64 * dt).sin();
        phi[k] = c * s / (1.0 - c * b[0]);
    }
    phi
}

fn check_grid(params: &ModelParams, t_max: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParams(format!("need dt > 0 and t_max > 0, got {dt}, {t_max}")));
    }
    let limit = 2.0 * PI / (40.0 * params.omega);
    if dt > limit {
        return Err(Error::InvalidParams(format!(
            "dt = {dt} does not resolve the drive (limit {limit:.4})"
        )));
    }
    Ok(())
}

/// Observed order from a short run at `dt`, `dt/2`, `dt/4`.
pub fn pilot_order(params: &ModelParams, dt: f64) -> f64 {
    if params.alpha == 0.0 {
        return f64::INFINITY;
    }
    let horizon = (400.0 * dt).min(5.0).max(20.0 * dt);
    let p1 = march(params, horizon, dt);
    let p2 = march(params, horizon, dt / 2.0);
    let p4 = march(params, horizon, dt / 4.0);
    let mut e1: f64 = 0.0;
    let mut e2: f64 = 0.0;
    for j in 0..p1.len() {
        e1 = e1.max((p1[j] - p2[2 * j]).norm());
        e2 = e2.max((p2[2 * j] - p4[4 * j]).norm());
    }
    if e2 == 0.0 {
        return f64::INFINITY;
    }
    (e1 / e2).log2()
}

/// Solves for `phi` on `[0, t_max]` with step `dt`.
pub fn solve_phi(params: &ModelParams, t_max: f64, dt: f64) -> Result<PhiSolution> {
    check_grid(params, t_max, dt)?;
    let order_est = pilot_order(params, dt);
    if order_est < MIN_ORDER {
        return Err(Error::NoConvergence {
            what: "Volterra stepping",
            detail: format!("observed order {order_est:.2} at dt = {dt}"),
        });
    }
    let phi = march(params, t_max, dt);
    Ok(PhiSolution { params: *params, dt, t_max: (phi.len() - 1) as f64 * dt, phi, order_est })
}

/// `theta = 1 + 2i int phi` by cumulative trapezoid; `err` compares with the
/// same rule on every other node.
pub fn theta_from_phi(sol: &PhiSolution) -> TimeSeries {
    let n = sol.phi.len();
    let dt = sol.dt;
    let mut theta = Vec::with_capacity(n);
    let mut err = vec![0.0; n];
    let mut acc = ZERO;
    let mut coarse = ZERO;
    theta.push(C64::new(1.0, 0.0));
    for j in 1..n {
        acc += 0.5 * dt * (sol.phi[j - 1] + sol.phi[j]);
        theta.push(1.0 + 2.0 * C64::i() * acc);
        if j % 2 == 0 {
            coarse += dt * (sol.phi[j - 2] + sol.phi[j]);
            err[j] = 2.0 * (acc - coarse).norm() / 3.0;
        } else {
            err[j] = err[j - 1];
        }
    }
    TimeSeries { t: (0..n).map(|j| sol.t(j)).collect(), theta, err }
}

/// Richardson combination of `theta` from steps `dt` and `dt/2`, on the
/// coarse grid; `err` is the size of the correction.
pub fn theta_richardson(coarse: &PhiSolution, fine: &PhiSolution) -> Result<TimeSeries> {
    if (coarse.dt - 2.0 * fine.dt).abs() > 1e-12 * coarse.dt || fine.phi.len() < 2 * coarse.phi.len() - 1 {
        return Err(Error::InvalidParams("fine grid must halve the coarse one".into()));
    }
    let a = theta_from_phi(coarse);
    let b = theta_from_phi(fine);
    let mut out = TimeSeries { t: a.t.clone(), theta: Vec::new(), err: Vec::new() };
    for j in 0..a.t.len() {
        let (x, y) = (a.theta[j], b.theta[2 * j]);
        out.theta.push((4.0 * y - x) / 3.0);
        out.err.push((y - x).norm() / 3.0);
    }
    Ok(out)
}

/// `theta` on `[0, t_max]` from steps `dt` and `dt/2`.
pub fn theta_volterra(params: &ModelParams, t_max: f64, dt: f64) -> Result<TimeSeries> {
    let c = solve_phi(params, t_max, dt)?;
    let f = solve_phi(params, t_max, dt / 2.0)?;
    theta_richardson(&c, &f)
}

/// `int_0^1 e^{ixv} dv` and `int_0^1 v e^{ixv} dv`.
fn filon(x: f64) -> (C64, C64) {
    if x.abs() < 1.0 {
        let ix = C64::new(0.0, x);
        let mut p = C64::new(1.0, 0.0);
        let mut fact = 1.0;
        let (mut s0, mut s1) = (ZERO, ZERO);
        for n in 0..24 {
            if n > 0 {
                p *= ix;
                fact *= n as f64;
            }
            s0 += p / (fact * (n + 1) as f64);
            s1 += p / (fact * (n + 2) as f64);
        }
        (s0, s1)
    } else {
        let e = C64::new(0.0, x).exp();
        let ix = C64::new(0.0, x);
        let s0 = (e - 1.0) / ix;
        let s1 = e / ix + (e - 1.0) / (x * x);
        (s0, s1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionSample {
    pub value: C64,
    /// `(1 + k^2) dt > 0.5`: the interpolant of `phi` is too coarse.
    pub flagged: bool,
}

/// `Theta(k, t) = sqrt(2/pi) |k| / (1 - i|k|) int_0^t phi(s) e^{i(1+k^2)s} ds`
/// with `phi` linear on each step and the oscillatory factor integrated
/// exactly.
pub fn emission_from_phi(sol: &PhiSolution, k: f64, t: f64) -> Result<EmissionSample> {
    if !(t >= 0.0) || t > sol.t_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("t = {t} outside [0, {}]", sol.t_max)));
    }
    let e = 1.0 + k * k;
    let dt = sol.dt;
    let full = ((t / dt) * (1.0 + 1e-12)).floor() as usize;
    let full = full.min(sol.phi.len() - 1);
    let (s0, s1) = filon(e * dt);
    let step = C64::new(0.0, e * dt).exp();
    let mut acc = ZERO;
    let mut ph = C64::new(1.0, 0.0);
    for j in 0..full {
        let (a, b) = (sol.phi[j], sol.phi[j + 1]);
        acc += ph * (a * s0 + (b - a) * s1);
        ph *= step;
        if j % 256 == 255 {
            ph = C64::new(0.0, e * (j + 1) as f64 * dt).exp();
        }
    }
    acc *= dt;
    let rest = t - full as f64 * dt;
    if rest > 1e-14 * dt && full < sol.phi.len() - 1 {
        let (a, b) = (sol.phi[full], sol.at(t));
        let (r0, r1) = filon(e * rest);
        let ph = C64::new(0.0, e * full as f64 * dt).exp();
        acc += ph * rest * (a * r0 + (b - a) * r1);
    }
    let ka = k.abs();
    let pre = (2.0 / PI).sqrt() * ka / C64::new(1.0, -ka);
    Ok(EmissionSample { value: pre * acc, flagged: e * dt > 0.5 })
}

/// Richardson combination of [`emission_from_phi`] over `dt` and `dt/2`.
pub fn emission_richardson(coarse: &PhiSolution, fine: &PhiSolution, k: f64, t: f64) -> Result<EmissionSample> {
    let a = emission_from_phi(coarse, k, t)?;
    let b = emission_from_phi(fine, k, t)?;
    Ok(EmissionSample { value: (4.0 * b.value - a.value) / 3.0, flagged: a.flagged || b.flagged })
}
