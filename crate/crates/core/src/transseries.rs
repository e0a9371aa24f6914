//! Survival and emission amplitudes from pole residues and branch-cut
//! Laplace integrals.

use crate::error::{Error, Result};
use crate::lattice::{cut_jumps, g_at};
use crate::quad::{fit_slope, geometric_edges, gk15_nodes, integrate, Integral};
use crate::spectral::{pole_data, PoleData};
use crate::specfun::ModelParams;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const X_MIN: f64 = 1e-6;
const X_MAX: f64 = 12.0;
const X_RATIO: f64 = 1.5;
const SHELL_REACH: i64 = 24;
const POLE_HALF_WIDTH: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub theta: Vec<C64>,
    pub err: Vec<f64>,
}

impl TimeSeries {
    /// Four-point Lagrange interpolation of `theta` and the larger nearby `err`;
    /// `None` outside the grid.
    pub fn interpolate(&self, t: f64) -> Option<(C64, f64)> {
        let n = self.t.len();
        if n < 4 || !(t >= self.t[0] && t <= self.t[n - 1]) {
            return None;
        }
        let j = self.t.partition_point(|x| *x <= t).saturating_sub(1);
        let s = j.saturating_sub(1).min(n - 4);
        let mut v = ZERO;
        for a in s..s + 4 {
            let mut l = 1.0;
            for b in s..s + 4 {
                if a != b {
                    l *= (t - self.t[b]) / (self.t[a] - self.t[b]);
                }
            }
            v += l * self.theta[a];
        }
        let e = self.err[s..s + 4].iter().cloned().fold(0.0, f64::max);
        Some((v, e))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Spectrum {
    pub k: Vec<f64>,
    /// `None` for the stationary limit.
    pub t: Option<f64>,
    pub theta: Vec<C64>,
    pub err: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Value {
    pub value: C64,
    pub err: f64,
}

/// Sampled cut jumps `Delta g_n(tau_j)` with quadrature weights in `tau`.
#[derive(Debug, Clone)]
pub struct CutData {
    pub params: ModelParams,
    pub n_lo: i64,
    pub n_hi: i64,
    pub tau: Vec<f64>,
    /// Kronrod and embedded Gauss weights for `d tau`.
    pub w_k: Vec<f64>,
    pub w_g: Vec<f64>,
    /// `jumps[n - n_lo][j]`.
    pub jumps: Vec<Vec<C64>>,
    /// Bound on `int |Delta g_n| / |i beta_n + tau| d tau` summed over dropped shells.
    pub tail_bound: f64,
}

impl CutData {
    pub fn shells(&self) -> impl Iterator<Item = (i64, &[C64])> {
        (self.n_lo..=self.n_hi).zip(self.jumps.iter().map(|v| v.as_slice()))
    }

    fn empty(params: &ModelParams) -> Self {
        Self {
            params: *params,
            n_lo: 0,
            n_hi: -1,
            tau: Vec::new(),
            w_k: Vec::new(),
            w_g: Vec::new(),
            jumps: Vec::new(),
            tail_bound: 0.0,
        }
    }
}

/// Samples the cuts on a graded mesh `tau = x^2` and keeps the shells whose
/// integrated weight is needed for `tol`.
pub fn cut_data(params: &ModelParams, tol: f64) -> Result<CutData> {
    params.require_nonresonant()?;
    if params.alpha == 0.0 {
        return Ok(CutData::empty(params));
    }
    let mut tau = Vec::new();
    let mut w_k = Vec::new();
    let mut w_g = Vec::new();
    let edges = geometric_edges(X_MIN, X_MAX, X_RATIO);
    for e in edges.windows(2) {
        for (x, wk, wg) in gk15_nodes(e[0], e[1]) {
            tau.push(x * x);
            w_k.push(2.0 * x * wk);
            w_g.push(2.0 * x * wg);
        }
    }
    let rows: Vec<Vec<C64>> = tau
        .par_iter()
        .map(|&t| cut_jumps(t, params, -SHELL_REACH, SHELL_REACH))
        .collect::<Result<_>>()?;
    let width = (2 * SHELL_REACH + 1) as usize;
    let weight: Vec<f64> = (0..width)
        .map(|i| {
            let b = params.beta(i as i64 - SHELL_REACH);
            rows.iter()
                .zip(&w_k)
                .zip(&tau)
                .map(|((r, w), t)| w * r[i].norm() / C64::new(*t, b).norm())
                .sum()
        })
        .collect();
    // cubic envelope beyond the sampled shells
    let beyond = (weight[0] + weight[width - 1]) * SHELL_REACH as f64 / 2.0;
    let (mut lo, mut hi) = (0usize, width - 1);
    let mut dropped = beyond;
    loop {
        let next = weight[lo].min(weight[hi]);
        if lo >= hi || dropped + next > tol {
            break;
        }
        dropped += next;
        if weight[lo] <= weight[hi] {
            lo += 1;
        } else {
            hi -= 1;
        }
    }
    let jumps = (lo..=hi).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    Ok(CutData {
        params: *params,
        n_lo: lo as i64 - SHELL_REACH,
        n_hi: hi as i64 - SHELL_REACH,
        tau,
        w_k,
        w_g,
        jumps,
        tail_bound: dropped,
    })
}

/// Pole part of `theta` with `|n| <= n_max`.
pub fn theta_pole_sum(t: f64, poles: &PoleData, n_max: usize) -> C64 {
    let n_max = n_max.min(poles.residues.half_width) as i64;
    (-n_max..=n_max)
        .map(|n| {
            let p = poles.p(n);
            2.0 * C64::i() * poles.r(n) / p * (p * t).exp()
        })
        .sum()
}

fn pole_tail(poles: &PoleData, f: impl Fn(i64) -> f64) -> f64 {
    let n = poles.residues.half_width as i64;
    f(n) + f(-n)
}

/// `theta(t) = 2i sum R_n e^{p_n t}/p_n
///   - (1/pi) sum_n int Delta g_n e^{-(i beta_n + tau) t}/(i beta_n + tau) d tau`.
pub fn theta_series(t: f64, poles: &PoleData, cuts: &CutData) -> Value {
    let pole = theta_pole_sum(t, poles, poles.residues.half_width);
    let tail = pole_tail(poles, |n| (2.0 * poles.r(n) / poles.p(n) * (poles.p(n) * t).exp()).norm());
    let mut cut_k = ZERO;
    let mut cut_g = ZERO;
    let decay: Vec<f64> = cuts.tau.iter().map(|x| (-x * t).exp()).collect();
    for (n, jumps) in cuts.shells() {
        let b = cuts.params.beta(n);
        let (mut sk, mut sg) = (ZERO, ZERO);
        for j in 0..cuts.tau.len() {
            if decay[j] == 0.0 {
                continue;
            }
            let v = jumps[j] * decay[j] / C64::new(cuts.tau[j], b);
            sk += cuts.w_k[j] * v;
            sg += cuts.w_g[j] * v;
        }
        let ph = C64::new(0.0, -b * t).exp();
        cut_k += ph * sk;
        cut_g += ph * sg;
    }
    let value = pole - cut_k / PI;
    Value { value, err: tail + ((cut_k - cut_g).norm() + cuts.tail_bound) / PI }
}

fn emission_prefactor(k: f64) -> C64 {
    let ka = k.abs();
    (2.0 / PI).sqrt() * ka / C64::new(1.0, -ka)
}

/// `Theta(k, infinity) = sqrt(2/pi) |k|/(1 - i|k|) Phi(-i(1 + k^2))`.
pub fn emission_limit(k: f64, params: &ModelParams) -> Result<C64> {
    let e = 1.0 + k * k;
    Ok(emission_prefactor(k) * g_at(C64::new(e, 0.0), params, 1e-14)?)
}

/// Pole and cut parts of the bracket in `Theta(k, t)`, without `Phi`.
fn emission_transient(k: f64, t: f64, poles: &PoleData, cuts: &CutData) -> (C64, f64) {
    let e = 1.0 + k * k;
    let mut pole = ZERO;
    for (n, r) in poles.residues.iter() {
        let d = poles.p(n) + C64::new(0.0, e);
        pole += r * (d * t).exp() / d;
    }
    let tail = pole_tail(poles, |n| {
        let d = poles.p(n) + C64::new(0.0, e);
        (poles.r(n) * (d * t).exp() / d).norm()
    });
    let (mut ck, mut cg) = (ZERO, ZERO);
    let decay: Vec<f64> = cuts.tau.iter().map(|x| (-x * t).exp()).collect();
    for (n, jumps) in cuts.shells() {
        let det = e - cuts.params.beta(n);
        let (mut sk, mut sg) = (ZERO, ZERO);
        for j in 0..cuts.tau.len() {
            if decay[j] == 0.0 {
                continue;
            }
            let v = jumps[j] * decay[j] / C64::new(cuts.tau[j], -det);
            sk += cuts.w_k[j] * v;
            sg += cuts.w_g[j] * v;
        }
        let ph = C64::new(0.0, det * t).exp();
        ck += ph * sk;
        cg += ph * sg;
    }
    let scale = -1.0 / (2.0 * PI * C64::i());
    let err = tail + ((ck - cg).norm() + cuts.tail_bound) / (2.0 * PI);
    (pole + scale * ck, err)
}

/// `Theta(k, t) = C(k) [Phi(-iE) + sum R_n e^{(p_n + iE)t}/(p_n + iE)
///   - (1/2 pi i) sum_n int Delta g_n e^{(i(E - beta_n) - tau)t}/(tau - i(E - beta_n)) d tau]`,
/// `E = 1 + k^2`.
pub fn emission_series(k: f64, t: f64, poles: &PoleData, cuts: &CutData) -> Result<Value> {
    if k == 0.0 {
        return Ok(Value { value: ZERO, err: 0.0 });
    }
    let e = 1.0 + k * k;
    let phi = g_at(C64::new(e, 0.0), &poles.params, 1e-14)?;
    let (rest, err) = emission_transient(k, t, poles, cuts);
    let c = emission_prefactor(k);
    let near = (cuts.n_lo..=cuts.n_hi).any(|n| (e - cuts.params.beta(n)).abs() < 1e-8);
    let err = c.norm() * err + if near { f64::INFINITY } else { 0.0 };
    Ok(Value { value: c * (phi + rest), err })
}

/// `|1 + 2i Phi(0)|`; zero when the bound state is fully ionized.
pub fn theta_limit_zero_check(params: &ModelParams) -> Result<f64> {
    Ok((1.0 + 2.0 * C64::i() * g_at(ZERO, params, 1e-14)?).norm())
}

/// Pole and cut data bundled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Transseries {
    pub params: ModelParams,
    /// `None` at zero coupling.
    pub poles: Option<PoleData>,
    pub cuts: CutData,
}

impl Transseries {
    pub fn new(params: &ModelParams, tol: f64) -> Result<Self> {
        params.require_nonresonant()?;
        if params.alpha == 0.0 {
            return Ok(Self { params: *params, poles: None, cuts: CutData::empty(params) });
        }
        let poles = pole_data(params, POLE_HALF_WIDTH)?;
        let cuts = cut_data(params, tol)?;
        Ok(Self { params: *params, poles: Some(poles), cuts })
    }

    pub fn theta(&self, t: f64) -> Value {
        match &self.poles {
            None => Value { value: C64::new(1.0, 0.0), err: 0.0 },
            Some(p) => theta_series(t, p, &self.cuts),
        }
    }

    pub fn survival(&self, t: &[f64]) -> TimeSeries {
        let v: Vec<Value> = t.par_iter().map(|&x| self.theta(x)).collect();
        TimeSeries {
            t: t.to_vec(),
            theta: v.iter().map(|x| x.value).collect(),
            err: v.iter().map(|x| x.err).collect(),
        }
    }

    /// `Theta(k, t)`; `t = None` gives the stationary limit.
    pub fn emission(&self, k: f64, t: Option<f64>) -> Result<Value> {
        match (&self.poles, t) {
            (None, _) => Ok(Value { value: ZERO, err: 0.0 }),
            (Some(_), None) => Ok(Value { value: emission_limit(k, &self.params)?, err: 0.0 }),
            (Some(p), Some(t)) => emission_series(k, t, p, &self.cuts),
        }
    }

    pub fn spectrum(&self, k: &[f64], t: Option<f64>) -> Result<Spectrum> {
        let v: Vec<Value> = k.par_iter().map(|&x| self.emission(x, t)).collect::<Result<_>>()?;
        Ok(Spectrum {
            k: k.to_vec(),
            t,
            theta: v.iter().map(|x| x.value).collect(),
            err: v.iter().map(|x| x.err).collect(),
        })
    }

    /// `int_R |Theta(k, t)|^2 dk` by adaptive quadrature in `k >= 0`, with
    /// breakpoints at the resonances `k^2 = n omega - 1` and thresholds
    /// `k^2 = n omega`. Beyond `K_EXACT` the cross term between `Phi` and the
    /// transient oscillates like `e^{iEt}` and is dropped; beyond `K_FAR`
    /// the `k^-4` decay is extrapolated.
    pub fn emitted_norm(&self, t: Option<f64>, tol: f64) -> Result<Integral> {
        const K_EXACT: f64 = 4.0;
        const K_FAR: f64 = 40.0;
        let Some(poles) = &self.poles else {
            return Ok(Integral { value: ZERO, err: 0.0, evals: 0 });
        };
        let w = self.params.omega;
        let mut breaks = vec![0.0, K_EXACT, K_FAR];
        let mut n = 1.0;
        while n * w - 1.0 < K_FAR * K_FAR {
            for k2 in [n * w - 1.0, n * w] {
                if k2 > 0.0 && k2 < K_FAR * K_FAR {
                    breaks.push(k2.sqrt());
                }
            }
            n += 1.0;
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let split = breaks.iter().position(|&k| k == K_EXACT).expect("breakpoint present");
        let failure = std::cell::Cell::new(None);
        let abs2 = |k: f64, averaged: bool| -> f64 {
            let parts = g_at(C64::new(1.0 + k * k, 0.0), &self.params, 1e-14).map(|g| {
                let c = emission_prefactor(k);
                match t {
                    None => (c * g, ZERO),
                    Some(t) => (c * g, c * emission_transient(k, t, poles, &self.cuts).0),
                }
            });
            match parts {
                Ok((a, b)) if averaged => a.norm_sqr() + b.norm_sqr(),
                Ok((a, b)) => (a + b).norm_sqr(),
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        let inner = integrate(|k| C64::new(abs2(k, false), 0.0), &breaks[..=split], 0.5 * tol, 100_000);
        let outer = integrate(|k| C64::new(abs2(k, true), 0.0), &breaks[split..], 0.25 * tol, 20_000);
        let far = abs2(K_FAR, true) * K_FAR / 3.0;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(Integral {
            value: 2.0 * (inner.value + outer.value + far),
            err: 2.0 * (inner.err + outer.err + far),
            evals: inner.evals + outer.evals + 1,
        })
    }

    /// `|theta(t)|^2 + int |Theta(k, t)|^2 dk - 1`.
    pub fn unitarity_defect(&self, t: Option<f64>, tol: f64) -> Result<f64> {
        let th = match t {
            None => 0.0,
            Some(t) => self.theta(t).value.norm_sqr(),
        };
        Ok(th + self.emitted_norm(t, tol)?.value.re - 1.0)
    }
}

/// End of the golden-rule window, `0.2 |ln alpha| / |2 Re p0|`.
pub fn golden_rule_horizon(params: &ModelParams, re_p0: f64) -> Result<f64> {
    if !(params.alpha > 0.0 && params.alpha < 1.0) || re_p0 == 0.0 {
        return Err(Error::InvalidParams("golden-rule window needs 0 < alpha < 1 and Re p0 != 0".into()));
    }
    Ok(0.2 * params.alpha.ln().abs() / (2.0 * re_p0.abs()))
}

/// Least-squares slope of `ln |theta|^2` against `ln t`.
pub fn tail_slope(series: &TimeSeries) -> f64 {
    let pts: Vec<(f64, f64)> = series
        .t
        .iter()
        .zip(&series.theta)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, z)| (t.ln(), z.norm_sqr().ln()))
        .collect();
    fit_slope(&pts)
}
