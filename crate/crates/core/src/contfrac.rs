//! Continued fractions for the decaying solutions of the homogeneous
//! recurrence, the pole matching function, and kernel vectors at a pole.
//!
//! `rho(q) = g(q) / g(q - omega)` along the solution decaying as `n -> +inf`,
//! `Omega(q) = g(q - omega) / g(q)` along the one decaying as `n -> -inf`.

use crate::error::{Error, Result};
use crate::specfun::{h_qz, BranchSide, ModelParams};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const MAX_DEPTH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CFValue {
    pub value: C64,
    pub depth: usize,
    pub err_est: f64,
}

#[derive(Debug, Clone)]
pub struct KernelVectors {
    pub sigma0: C64,
    pub half_width: usize,
    /// Right null vector of `I - K0(sigma0)`, components `-N..=N`.
    pub y0: Vec<C64>,
    /// Null vector of the adjoint.
    pub y0star: Vec<C64>,
}

impl KernelVectors {
    pub fn y0(&self, n: i64) -> C64 {
        self.y0[(n + self.half_width as i64) as usize]
    }

    pub fn y0star(&self, n: i64) -> C64 {
        self.y0star[(n + self.half_width as i64) as usize]
    }
}

#[inline]
fn h(q: C64) -> C64 {
    h_qz(q, q - 1.0, BranchSide::FromAbove)
}

/// Depth that reaches levels where `alpha^2 / |q|` is small and covers the
/// multiphoton chain.
pub fn default_depth(q: C64, params: &ModelParams) -> usize {
    let m = (1.0 / params.omega).ceil() as usize;
    let a2 = params.alpha * params.alpha;
    let reach = ((10.0 * a2 + q.norm()) / params.omega).ceil() as usize;
    20usize.max(m + 10).max(reach + 10)
}

fn rho_truncate(q: C64, params: &ModelParams, depth: usize) -> C64 {
    let (a, w) = (params.alpha, params.omega);
    let mut r = ZERO;
    for k in (0..depth).rev() {
        let qq = q + k as f64 * w;
        r = -a * h(qq - w) / (1.0 - a * h(qq + w) * r);
    }
    r
}

fn omega_truncate(q: C64, params: &ModelParams, depth: usize) -> C64 {
    let (a, w) = (params.alpha, params.omega);
    let mut r = ZERO;
    for k in (0..depth).rev() {
        let qq = q - k as f64 * w;
        r = a * h(qq) / (1.0 + a * h(qq - 2.0 * w) * r);
    }
    r
}

fn cf_value(f: impl Fn(usize) -> C64, depth: usize) -> Result<CFValue> {
    if depth == 0 {
        return Err(Error::Domain("continued fraction depth must be at least 1".into()));
    }
    let value = f(depth);
    let prev = if depth > 1 { f(depth - 1) } else { ZERO };
    let err_est = (value - prev).norm();
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::NoConvergence {
            what: "continued fraction",
            detail: format!("non-finite truncate at depth {depth}"),
        });
    }
    Ok(CFValue { value, depth, err_est })
}

/// Depth-`depth` truncate of `rho(q)`.
pub fn rho_cf(q: C64, params: &ModelParams, depth: usize) -> Result<CFValue> {
    cf_value(|d| rho_truncate(q, params, d), depth)
}

/// Depth-`depth` truncate of `Omega(q)`.
pub fn omega_cf(q: C64, params: &ModelParams, depth: usize) -> Result<CFValue> {
    cf_value(|d| omega_truncate(q, params, d), depth)
}

fn adaptive(
    f: impl Fn(usize) -> Result<CFValue>,
    start: usize,
    tol: f64,
) -> Result<CFValue> {
    let mut depth = start;
    loop {
        let v = f(depth)?;
        if v.err_est <= tol * v.value.norm().max(f64::MIN_POSITIVE) || v.err_est == 0.0 {
            return Ok(v);
        }
        if depth * 2 > MAX_DEPTH {
            return Err(Error::NoConvergence {
                what: "continued fraction",
                detail: format!("err_est {:.3e} at depth {depth}", v.err_est),
            });
        }
        depth *= 2;
    }
}

/// `rho(q)` to relative tolerance `tol`, doubling depth as needed.
pub fn rho_auto(q: C64, params: &ModelParams, tol: f64) -> Result<CFValue> {
    adaptive(|d| rho_cf(q, params, d), default_depth(q, params), tol)
}

/// `Omega(q)` to relative tolerance `tol`, doubling depth as needed.
pub fn omega_auto(q: C64, params: &ModelParams, tol: f64) -> Result<CFValue> {
    let reach = default_depth(q, params);
    adaptive(|d| omega_cf(q, params, d), reach, tol)
}

/// `F(sigma) = rho(sigma) Omega(sigma) - 1`; zeros are resolvent poles.
pub fn matching_fn(sigma: C64, params: &ModelParams) -> Result<C64> {
    let r = rho_auto(sigma, params, 1e-15)?;
    let o = omega_auto(sigma, params, 1e-15)?;
    Ok(r.value * o.value - 1.0)
}

/// Null vectors of `I - K0(sigma0)` and of its adjoint, built from ratio
/// sweeps started deep in the decaying tails.
pub fn kernel_vectors(sigma0: C64, params: &ModelParams, half_width: usize) -> Result<KernelVectors> {
    let (a, w) = (params.alpha, params.omega);
    let n = half_width as i64;
    let deep = n + default_depth(sigma0, params) as i64 + 40;
    let hq = |k: i64| h(sigma0 + k as f64 * w);
    let idx = |k: i64| (k + n) as usize;

    // rho(q_k) = y_k / y_{k-1}, k = 1..=N
    let mut rho = vec![ZERO; half_width + 1];
    let mut r = ZERO;
    for k in (1..=deep).rev() {
        r = -a * hq(k - 1) / (1.0 - a * hq(k + 1) * r);
        if k <= n {
            rho[k as usize] = r;
        }
    }
    // Omega(q_k) = y_{k-1} / y_k, k = -N+1..=0
    let mut om = vec![ZERO; half_width + 1];
    let mut r = ZERO;
    for k in -deep..=0 {
        r = a * hq(k) / (1.0 + a * hq(k - 2) * r);
        if k > -n {
            om[(-k) as usize] = r;
        }
    }
    let mut y0 = vec![ZERO; 2 * half_width + 1];
    y0[idx(0)] = C64::new(1.0, 0.0);
    for k in 1..=n {
        y0[idx(k)] = y0[idx(k - 1)] * rho[k as usize];
    }
    for k in (-n + 1..=0).rev() {
        y0[idx(k - 1)] = y0[idx(k)] * om[(-k) as usize];
    }

    // Adjoint: w = conj(y*) solves w_k = alpha h_k (w_{k-1} - w_{k+1}).
    let mut up = vec![ZERO; half_width + 1];
    let mut r = ZERO;
    for k in (1..=deep).rev() {
        let hk = a * hq(k);
        r = hk / (1.0 + hk * r);
        if k <= n {
            up[k as usize] = r;
        }
    }
    let mut down = vec![ZERO; half_width + 1];
    let mut t = ZERO;
    for k in -deep..=0 {
        let hk = a * hq(k - 1);
        t = -hk / (1.0 - hk * t);
        if k > -n {
            down[(-k) as usize] = t;
        }
    }
    let mut wv = vec![ZERO; 2 * half_width + 1];
    wv[idx(0)] = C64::new(1.0, 0.0);
    for k in 1..=n {
        wv[idx(k)] = wv[idx(k - 1)] * up[k as usize];
    }
    for k in (-n + 1..=0).rev() {
        wv[idx(k - 1)] = wv[idx(k)] * down[(-k) as usize];
    }
    let mut y0star: Vec<C64> = wv.iter().map(|z| z.conj()).collect();

    normalize(&mut y0);
    normalize(&mut y0star);
    let kv = KernelVectors { sigma0, half_width, y0, y0star };
    let (r1, r2) = kernel_residuals(&kv, params);
    let worst = r1.max(r2);
    if !(worst <= 1e-8) {
        return Err(Error::Residual(worst));
    }
    Ok(kv)
}

fn normalize(v: &mut [C64]) {
    let big = v
        .iter()
        .copied()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .unwrap_or(ZERO);
    if big != ZERO {
        for z in v.iter_mut() {
            *z /= big;
        }
    }
}

/// Relative residuals of `(I - K0) y0` and `(I - K0^H) y0*` on interior rows.
pub fn kernel_residuals(kv: &KernelVectors, params: &ModelParams) -> (f64, f64) {
    let (a, w) = (params.alpha, params.omega);
    let n = kv.half_width as i64;
    let hq = |k: i64| h(kv.sigma0 + k as f64 * w);
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for k in -n + 1..n {
        let y = |j: i64| kv.y0(j);
        let res = y(k) - a * hq(k + 1) * y(k + 1) + a * hq(k - 1) * y(k - 1);
        r1 = r1.max(res.norm());
        let s = |j: i64| kv.y0star(j);
        let res = s(k) - a * hq(k).conj() * (s(k - 1) - s(k + 1));
        r2 = r2.max(res.norm());
    }
    (r1, r2)
}

/// `|sum h_n^{-1} |u_n|^2 - 2 i alpha Im sum u_{n+1} conj(u_n)|`, relative,
/// with `u_n = h_n y0_n`.
pub fn quadratic_identity_residual(kv: &KernelVectors, params: &ModelParams) -> f64 {
    let n = kv.half_width as i64;
    let u: Vec<C64> = (-n..=n)
        .map(|k| h(kv.sigma0 + k as f64 * params.omega) * kv.y0(k))
        .collect();
    let hs: Vec<C64> = (-n..=n).map(|k| h(kv.sigma0 + k as f64 * params.omega)).collect();
    let mut lhs = ZERO;
    let mut scale = 0.0;
    for (ui, hi) in u.iter().zip(&hs) {
        let term = ui.norm_sqr() / hi;
        lhs += term;
        scale += term.norm();
    }
    let mut s = ZERO;
    for k in 0..u.len() - 1 {
        s += u[k + 1] * u[k].conj();
    }
    (lhs - C64::new(0.0, 2.0 * params.alpha * s.im)).norm() / scale
}
