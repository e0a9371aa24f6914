//! Truncated resolvent lattice `(I - K0(sigma)) g = f`.
//!
//! Component `n` of the lattice vector is `g(sigma + n omega)`. Rows are
//! `g_n - alpha h_{n+1} g_{n+1} + alpha h_{n-1} g_{n-1} = f_n` with zero
//! Dirichlet closure outside `-N..=N`.

use crate::error::{Error, Result};
use crate::specfun::{f_raw, h_qz, BranchSide, ModelParams};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const MAX_HALF_WIDTH: usize = 4096;
const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct LatticeSolution {
    pub sigma: C64,
    /// Reported components are `-half_width..=half_width`.
    pub half_width: usize,
    pub g: Vec<C64>,
    pub side: BranchSide,
    pub err_est: f64,
}

impl LatticeSolution {
    pub fn get(&self, n: i64) -> Option<C64> {
        let i = n + self.half_width as i64;
        if i < 0 {
            return None;
        }
        self.g.get(i as usize).copied()
    }

    /// Max-norm residual of the lattice rows strictly inside the window.
    pub fn residual(&self, params: &ModelParams) -> f64 {
        let n = self.half_width as i64;
        let h = h_values(self.sigma, params, n, self.side, params.m_star());
        let a = params.alpha;
        let mut worst: f64 = 0.0;
        for k in 1..(2 * n) as usize {
            let q = self.sigma + (k as i64 - n) as f64 * params.omega;
            let r = self.g[k] - a * h[k + 1] * self.g[k + 1] + a * h[k - 1] * self.g[k - 1]
                - f_raw(q, params);
            worst = worst.max(r.norm());
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutJumpSample {
    pub n: i64,
    pub tau: f64,
    pub jump: C64,
}

/// `h(sigma + n omega)` for `n in -N..=N`, with `side` applied to component
/// `branch` and `FromAbove` elsewhere.
pub(crate) fn h_values(
    sigma: C64,
    params: &ModelParams,
    half_width: i64,
    side: BranchSide,
    branch: i64,
) -> Vec<C64> {
    let shift = sigma - params.sigma_c();
    let ms = params.m_star();
    (-half_width..=half_width)
        .map(|n| {
            let z = shift + (n - ms) as f64 * params.omega;
            let s = if n == branch { side } else { BranchSide::FromAbove };
            h_qz(sigma + n as f64 * params.omega, z, s)
        })
        .collect()
}

/// Banded system with unit diagonal and off-diagonals `-a h_{n+1}` above,
/// `+a h_{n-1}` below.
pub struct Lattice {
    pub sigma: C64,
    pub half_width: i64,
    pub h: Vec<C64>,
    pub alpha: f64,
}

impl Lattice {
    pub fn new(sigma: C64, params: &ModelParams, half_width: i64, side: BranchSide, branch: i64) -> Self {
        Self {
            sigma,
            half_width,
            h: h_values(sigma, params, half_width, side, branch),
            alpha: params.alpha,
        }
    }

    pub fn source(&self, params: &ModelParams) -> Vec<C64> {
        (-self.half_width..=self.half_width)
            .map(|n| f_raw(self.sigma + n as f64 * params.omega, params))
            .collect()
    }

    /// Solves with row equilibration and partial pivoting.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let n = self.h.len();
        let a = self.alpha;
        let mut dl = vec![ZERO; n];
        let mut d = vec![ZERO; n];
        let mut du = vec![ZERO; n];
        let mut b = rhs.to_vec();
        for i in 0..n {
            let up = if i + 1 < n { -a * self.h[i + 1] } else { ZERO };
            let lo = if i > 0 { a * self.h[i - 1] } else { ZERO };
            let s = 1.0f64.max(up.norm()).max(lo.norm());
            d[i] = C64::new(1.0 / s, 0.0);
            du[i] = up / s;
            if i > 0 {
                dl[i - 1] = lo / s;
            }
            b[i] /= s;
        }
        let (pivots, x) = gtsv(dl, d, du, b)?;
        let min_pivot = pivots.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
        let cond = 3.0 / min_pivot;
        if !(cond < COND_LIMIT) {
            return Err(Error::NearPole { cond });
        }
        Ok(x)
    }

    /// Ratios `D_k / D_{k-1}` of leading principal minors of `I - K0`; their
    /// product is the truncated determinant.
    pub fn continuant(&self) -> Vec<C64> {
        let a2 = self.alpha * self.alpha;
        let mut out = Vec::with_capacity(self.h.len());
        let mut prev = C64::new(1.0, 0.0);
        out.push(prev);
        for k in 1..self.h.len() {
            let r = C64::new(1.0, 0.0) + a2 * self.h[k] * self.h[k - 1] / prev;
            out.push(r);
            prev = r;
        }
        out
    }
}

/// Tridiagonal Gaussian elimination with partial pivoting; returns the
/// pivots and the solution.
fn gtsv(
    mut dl: Vec<C64>,
    mut d: Vec<C64>,
    mut du: Vec<C64>,
    mut b: Vec<C64>,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = d.len();
    for i in 0..n.saturating_sub(1) {
        if d[i].norm() >= dl[i].norm() {
            if d[i] == ZERO {
                return Err(Error::NearPole { cond: f64::INFINITY });
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] = b[i + 1] - fact * b[i];
            dl[i] = ZERO;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = ZERO;
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == ZERO {
        return Err(Error::NearPole { cond: f64::INFINITY });
    }
    let mut x = b;
    x[n - 1] /= d[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / d[i];
    }
    Ok((d, x))
}

fn check_sigma(sigma: C64) -> Result<()> {
    if !(sigma.re.is_finite() && sigma.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite spectral parameter {sigma}")));
    }
    Ok(())
}

/// Fixed-width solve; components `-N..=N`.
pub(crate) fn solve_fixed(
    sigma: C64,
    params: &ModelParams,
    side: BranchSide,
    branch: i64,
    half_width: i64,
) -> Result<Vec<C64>> {
    let lat = Lattice::new(sigma, params, half_width, side, branch);
    let f = lat.source(params);
    lat.solve(&f)
}

/// Doubles the truncation until the window `-w..=w` stops moving by more
/// than `tol`.
pub(crate) fn solve_window(
    sigma: C64,
    params: &ModelParams,
    side: BranchSide,
    tol: f64,
    window: usize,
) -> Result<LatticeSolution> {
    check_sigma(sigma)?;
    let w = window as i64;
    if params.alpha == 0.0 {
        return Ok(LatticeSolution {
            sigma,
            half_width: window,
            g: vec![ZERO; 2 * window + 1],
            side,
            err_est: 0.0,
        });
    }
    let branch = params.m_star();
    let mut n = (2 * w).max(32);
    let mut coarse = solve_fixed(sigma, params, side, branch, n)?;
    loop {
        let fine = solve_fixed(sigma, params, side, branch, 2 * n)?;
        let mut diff: f64 = 0.0;
        for k in -w..=w {
            diff = diff.max((fine[(k + 2 * n) as usize] - coarse[(k + n) as usize]).norm());
        }
        if diff < tol || diff == 0.0 {
            let g = fine[(2 * n - w) as usize..=(2 * n + w) as usize].to_vec();
            return Ok(LatticeSolution { sigma, half_width: window, g, side, err_est: diff });
        }
        if 4 * n as usize > MAX_HALF_WIDTH {
            return Err(Error::NoConvergence {
                what: "lattice truncation",
                detail: format!("change {diff:.3e} at N = {}", 2 * n),
            });
        }
        n *= 2;
        coarse = fine;
    }
}

/// Solves the truncated resolvent equation at `sigma`, reporting components
/// `-16..=16`.
pub fn solve_lattice(
    sigma: C64,
    params: &ModelParams,
    side: BranchSide,
    tol: f64,
) -> Result<LatticeSolution> {
    solve_window(sigma, params, side, tol, 16)
}

/// Radius of the circle used around `q = j omega`, where rows degenerate.
fn degenerate_radius(params: &ModelParams) -> f64 {
    let r = 1.0 / params.omega;
    let gap = params.omega * (r - r.round()).abs();
    let pole_scale = 0.02 * params.alpha * params.alpha / (1.0 + params.omega.sqrt());
    1e-4f64.min(pole_scale).min(0.25 * gap).min(0.1 * params.omega).max(1e-7)
}

fn g_regular(q: C64, params: &ModelParams, tol: f64) -> Result<C64> {
    let n_star = (q.re / params.omega).floor() as i64;
    let sigma = q - n_star as f64 * params.omega;
    let sol = solve_window(sigma, params, BranchSide::FromAbove, tol, n_star.unsigned_abs() as usize + 8)?;
    Ok(sol.get(n_star).expect("window covers n*"))
}

/// Boundary value `g(q)` on the physical sheet.
pub(crate) fn g_at(q: C64, params: &ModelParams, tol: f64) -> Result<C64> {
    check_sigma(q)?;
    if params.alpha == 0.0 {
        return Ok(ZERO);
    }
    let j = (q.re / params.omega).round();
    let center = C64::new(j * params.omega, 0.0);
    let d = degenerate_radius(params);
    if (q - center).norm() >= 0.5 * d {
        return g_regular(q, params, tol);
    }
    // Cauchy integral over a circle around the degenerate lattice point.
    let m = 64;
    let mut acc = ZERO;
    for k in 0..m {
        let e = C64::from_polar(d, 2.0 * PI * (k as f64 + 0.5) / m as f64);
        let z = center + e;
        acc += g_regular(z, params, tol)? * e / (z - q);
    }
    Ok(acc / m as f64)
}

/// Laplace transform `Phi(p) = g(i p)` on the physical sheet.
pub fn phi_at(p: C64, params: &ModelParams, tol: f64) -> Result<C64> {
    g_at(C64::i() * p, params, tol)
}

/// Jumps `g_R - g_L` at `q = beta_n - i tau` for `n in lo..=hi`.
pub(crate) fn cut_jumps(tau: f64, params: &ModelParams, lo: i64, hi: i64) -> Result<Vec<C64>> {
    params.require_nonresonant()?;
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("cut depth must be positive, got {tau}")));
    }
    if params.alpha == 0.0 {
        return Ok(vec![ZERO; (hi - lo + 1) as usize]);
    }
    let ms = params.m_star();
    let reach = (lo + ms).abs().max((hi + ms).abs());
    let n = reach + 48;
    let sigma = C64::new(params.sigma_c(), -tau);
    let right = solve_fixed(sigma, params, BranchSide::RightOfCut, ms, n)?;
    let left = solve_fixed(sigma, params, BranchSide::LeftOfCut, ms, n)?;
    Ok((lo..=hi)
        .map(|k| {
            let i = (k + ms + n) as usize;
            right[i] - left[i]
        })
        .collect())
}

/// Jump of `g` across the cut hanging from `beta_n`, at depth `tau`.
pub fn cut_jump(n: i64, tau: f64, params: &ModelParams) -> Result<CutJumpSample> {
    let jump = cut_jumps(tau, params, n, n)?[0];
    Ok(CutJumpSample { n, tau, jump })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::rho_cf;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(a: f64, w: f64) -> ModelParams {
        ModelParams::new(a, w).unwrap()
    }

    #[test]
    fn zero_coupling_gives_zero() {
        let p = params(0.0, 1.3);
        let sol = solve_lattice(c(0.3, -0.2), &p, BranchSide::FromAbove, 1e-12).unwrap();
        assert!(sol.g.iter().all(|z| *z == ZERO));
        assert_eq!(phi_at(c(0.4, 0.1), &p, 1e-12).unwrap(), ZERO);
        assert_eq!(cut_jump(1, 0.5, &p).unwrap().jump, ZERO);
    }

    #[test]
    fn truncation_stability() {
        let p = params(0.1, 2.0);
        let s = c(0.3, -0.2);
        let a = solve_fixed(s, &p, BranchSide::FromAbove, 0, 100).unwrap();
        let b = solve_fixed(s, &p, BranchSide::FromAbove, 0, 200).unwrap();
        for k in -50i64..=50 {
            assert!((a[(k + 100) as usize] - b[(k + 200) as usize]).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn residual_and_tail() {
        let p = params(0.3, 1.7);
        let s = c(0.8, -0.4);
        let sol = solve_lattice(s, &p, BranchSide::FromAbove, 1e-13).unwrap();
        let gmax = sol.g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(sol.residual(&p) <= 1e-12 * (1.0 + gmax));
        let n = sol.half_width as i64;
        assert!(sol.get(n).unwrap().norm() <= sol.get(n - 5).unwrap().norm());
        assert!(sol.get(-n).unwrap().norm() <= sol.get(-n + 5).unwrap().norm());
    }

    #[test]
    fn doubling_changes_less_than_err_est() {
        let p = params(0.5, 1.5);
        let s = c(0.4, -0.3);
        let sol = solve_lattice(s, &p, BranchSide::FromAbove, 1e-10).unwrap();
        let big = solve_fixed(s, &p, BranchSide::FromAbove, 0, 1024).unwrap();
        for k in -16i64..=16 {
            let d = (sol.get(k).unwrap() - big[(k + 1024) as usize]).norm();
            assert!(d <= sol.err_est.max(1e-15), "k = {k}: {d} vs {}", sol.err_est);
        }
    }

    #[test]
    fn homogeneous_tail_follows_minimal_solution() {
        // Unit source at index n0 - 1; beyond it the solution is the decaying one.
        let p = params(0.2, 1.5);
        let s = c(0.45, -0.1);
        let nw = 200;
        let lat = Lattice::new(s, &p, nw, BranchSide::FromAbove, 0);
        let n0 = 10;
        let mut rhs = vec![ZERO; (2 * nw + 1) as usize];
        rhs[(n0 - 1 + nw) as usize] = c(1.0, 0.0);
        let g = lat.solve(&rhs).unwrap();
        for n in n0..n0 + 20 {
            let ratio = g[(n + nw) as usize] / g[(n - 1 + nw) as usize];
            let q = s + n as f64 * p.omega;
            let cf = rho_cf(q, &p, 60).unwrap().value;
            assert!((ratio - cf).norm() < 1e-8 * cf.norm(), "n = {n}");
        }
        // |g_{n+1}/g_n| ~ alpha / (2 sqrt(n omega))
        let n = 40;
        let ratio = (g[(n + 1 + nw) as usize] / g[(n + nw) as usize]).norm();
        let pred = p.alpha / (2.0 * (n as f64 * p.omega).sqrt());
        assert!((ratio / pred - 1.0).abs() < 0.05, "{ratio} vs {pred}");
    }

    #[test]
    fn phi_at_zero_is_half_i() {
        let p = params(0.5, 1.5);
        let v = phi_at(ZERO, &p, 1e-13).unwrap();
        assert!((v - c(0.0, 0.5)).norm() < 1e-6, "{v}");
    }

    #[test]
    fn phi_bounded_at_large_p() {
        let p = params(0.05, 1.5);
        for &x in &[3.0, 10.0, 30.0, 100.0] {
            let v = phi_at(c(x, 0.0), &p, 1e-13).unwrap();
            assert!((1.0 + x) * (1.0 + x) * v.norm() < 1.0);
        }
    }

    #[test]
    fn continuity_across_strip_edges() {
        let p = params(0.3, 1.3);
        for j in [-2i64, -1, 1, 2, 3] {
            let q0 = j as f64 * p.omega;
            let gap = |d: f64| {
                let a = g_at(c(q0 - d, 0.0), &p, 1e-13).unwrap();
                let b = g_at(c(q0 + d, 0.0), &p, 1e-13).unwrap();
                (a, b)
            };
            let m = g_at(c(q0, 0.0), &p, 1e-13).unwrap();
            // A jump would leave |a - b| finite as d -> 0.
            let (a1, b1) = gap(1.5e-5);
            let (a2, b2) = gap(3e-6);
            let (d1, d2) = ((a1 - b1).norm(), (a2 - b2).norm());
            assert!(d2 < 0.3 * d1 + 1e-9, "j = {j}: {d1} {d2}");
            assert!((0.5 * (a2 + b2) - m).norm() < 1e-8 * (1.0 + m.norm()), "j = {j}");
        }
    }

    #[test]
    fn cut_jump_scales_like_sqrt_tau() {
        let p = params(0.05, 1.5);
        let taus: [f64; 5] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
        let pts: Vec<(f64, f64)> = taus
            .iter()
            .map(|&t| (t.ln(), cut_jump(0, t, &p).unwrap().jump.norm().ln()))
            .collect();
        let slope = crate::quad::fit_slope(&pts);
        assert!((slope - 0.5).abs() < 0.05, "slope {slope}");
        assert!(cut_jump(0, 1e-6, &p).unwrap().jump.norm() < 1e-3);
    }

    #[test]
    fn cut_jump_envelope_constant_turns_over() {
        // c_n = |jump_n| n^3 / alpha^(2n+2) stays bounded and eventually falls.
        let p = params(0.5, 1.5);
        let j = cut_jumps(1.0, &p, 1, 6).unwrap();
        let cn: Vec<f64> = (1..=6)
            .map(|n| j[n - 1].norm() * (n as f64).powi(3) / p.alpha.powi(2 * n as i32 + 2))
            .collect();
        assert!(cn.iter().all(|&v| v < 10.0 * cn[0]), "{cn:?}");
        assert!(cn[5] < cn[3] && cn[4] < cn[3], "{cn:?}");
    }

    #[test]
    fn cut_jump_shell_scaling_in_alpha() {
        // Halving alpha divides shell n by about 2^(n+1).
        let tau = 1.0;
        let big = cut_jumps(tau, &params(0.1, 1.5), 1, 4).unwrap();
        let small = cut_jumps(tau, &params(0.05, 1.5), 1, 4).unwrap();
        for n in 1..=4usize {
            let order = (big[n - 1].norm() / small[n - 1].norm()).log2();
            assert!((order - (n as f64 + 1.0)).abs() < 0.1, "n = {n}: {order}");
        }
    }

    #[test]
    fn cut_jump_shell_ratio() {
        // Successive shells shrink by about alpha / (2 sqrt(n omega)).
        let p = params(0.1, 1.5);
        let j = cut_jumps(1.0, &p, 1, 8).unwrap();
        for n in 4..8usize {
            let r = j[n].norm() / j[n - 1].norm();
            let pred = p.alpha / (2.0 * (n as f64 * p.omega).sqrt());
            assert!(r < 1.5 * pred && r > 0.5 * pred, "n = {n}: {r} vs {pred}");
        }
    }

    #[test]
    fn cut_side_requires_nonresonant() {
        let p = params(0.1, 0.5);
        assert!(matches!(cut_jump(0, 0.1, &p), Err(Error::ResonantOmega(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn residual_small(a in 0.01f64..1.0, w in 0.6f64..3.0, sr in 0.05f64..0.95, si in -2.0f64..-0.01) {
            let p = params(a, w);
            let s = c(sr * w, si);
            let sol = solve_lattice(s, &p, BranchSide::FromAbove, 1e-12).unwrap();
            let gmax = sol.g.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(sol.residual(&p) <= 1e-12 * (1.0 + gmax));
        }

        #[test]
        fn continuous_between_thresholds(a in 0.02f64..0.8, x in 0.0f64..1.0) {
            let p = params(a, 1.5);
            // open interval (beta_0, beta_1) = (1, 2.5)
            let q = 1.0 + 1e-3 + x * (1.5 - 2e-3);
            let g1 = g_at(c(q, 0.0), &p, 1e-13).unwrap();
            let g2 = g_at(c(q + 1e-7, 0.0), &p, 1e-13).unwrap();
            prop_assert!((g1 - g2).norm() < 1e-4 * (1.0 + g1.norm()));
        }
    }
}
