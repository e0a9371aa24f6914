//! Resolvent poles `q0 + n omega`, their residues, and a zero count for the
//! strip determinant.
//!
//! The residue of `Phi` at `p_n = -i (q0 + n omega)` is `R_n = -i Res(g, q_n)`.

use crate::asympt::MultiphotonOrder;
use crate::contfrac::{default_depth, kernel_vectors, matching_fn, KernelVectors};
use crate::error::{Error, Result};
use crate::lattice::{solve_fixed, Lattice};
use crate::specfun::{dh_qz, f_raw, BranchSide, ModelParams};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const F_TOL: f64 = 1e-12;
const MIN_SLOPE: f64 = 1e-8;

/// Residues `R_n` for `n in -N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residues {
    pub half_width: usize,
    pub r: Vec<C64>,
}

impl Residues {
    pub fn get(&self, n: i64) -> Option<C64> {
        let i = n + self.half_width as i64;
        if i < 0 {
            return None;
        }
        self.r.get(i as usize).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let n = self.half_width as i64;
        self.r.iter().enumerate().map(move |(i, z)| (i as i64 - n, *z))
    }
}

#[derive(Debug, Clone)]
pub struct PoleData {
    pub params: ModelParams,
    /// Pole of the resolvent nearest the origin, `Im q0 < 0`.
    pub q0: C64,
    /// Contour residues.
    pub residues: Residues,
    /// Largest relative gap between contour and Laurent residues, `|n| <= 3`.
    pub method_disagreement: f64,
}

impl PoleData {
    pub fn p0(&self) -> C64 {
        -C64::i() * self.q0
    }

    pub fn p(&self, n: i64) -> C64 {
        self.p0() - C64::new(0.0, n as f64 * self.params.omega)
    }

    pub fn r(&self, n: i64) -> C64 {
        self.residues.get(n).unwrap_or(ZERO)
    }
}

/// Small-coupling estimate of `q0`.
pub fn pole_seed(params: &ModelParams) -> Result<C64> {
    let mo = MultiphotonOrder::new(params.omega)?;
    let a2 = params.alpha * params.alpha;
    let mut q = a2 * mo.s0;
    if mo.m > 1 {
        q += C64::new(0.0, 4.0 * mo.xi0 * params.alpha.powi(2 * mo.m as i32));
    }
    Ok(q)
}

fn slope(sigma: C64, params: &ModelParams) -> Result<C64> {
    let a2 = params.alpha * params.alpha;
    let h = 1e-5 * sigma.norm().max(0.1 * a2);
    let fp = matching_fn(sigma + h, params)?;
    let fm = matching_fn(sigma - h, params)?;
    Ok((fp - fm) / (2.0 * h))
}

fn newton(seed: C64, params: &ModelParams) -> Result<C64> {
    let mut s = seed;
    let mut fs = matching_fn(s, params)?;
    for _ in 0..80 {
        if fs.norm() < F_TOL {
            return Ok(s);
        }
        let step = fs / slope(s, params)?;
        let mut lam = 1.0;
        loop {
            let cand = s - lam * step;
            let ok = cand.im < 0.0;
            if ok {
                if let Ok(fc) = matching_fn(cand, params) {
                    if fc.norm() < fs.norm() || lam < 1.0 / 64.0 {
                        s = cand;
                        fs = fc;
                        break;
                    }
                }
            }
            lam *= 0.5;
            if lam < 1e-6 {
                return Err(Error::NoConvergence {
                    what: "pole search",
                    detail: format!("line search stalled at {s} with |F| = {:.3e}", fs.norm()),
                });
            }
        }
    }
    if fs.norm() < F_TOL {
        return Ok(s);
    }
    Err(Error::NoConvergence {
        what: "pole search",
        detail: format!("|F| = {:.3e} at {s}", fs.norm()),
    })
}

fn nearest_image(q: C64, target: C64, omega: f64) -> C64 {
    q - ((q.re - target.re) / omega).round() * omega
}

fn continuation(params: &ModelParams) -> Result<C64> {
    let w = params.omega;
    let at = |a: f64| ModelParams { alpha: a, ..*params };
    let mut a = 0.2f64.min(params.alpha);
    let mut q = newton(pole_seed(&at(a))?, &at(a))?;
    let mut prev: Option<(f64, C64)> = None;
    let mut step = 0.25 * a;
    while a < params.alpha {
        let next = (a + step).min(params.alpha);
        let guess = match prev {
            Some((ap, qp)) => q + (q - qp) * ((next - a) / (a - ap)),
            None => q * (next / a).powi(2),
        };
        let p = at(next);
        let found = newton(guess, &p)
            .or_else(|_| newton(q, &p))
            .and_then(|r| newton(nearest_image(r, guess, w), &p));
        match found {
            Ok(r) if (r - guess).norm() < 0.25 * w => {
                prev = Some((a, q));
                q = r;
                a = next;
                step *= 1.25;
            }
            _ => {
                step *= 0.5;
                if step < 1e-4 * params.alpha {
                    let sc = params.sigma_c();
                    let to_cut = (q.re - sc - ((q.re - sc) / w).round() * w).abs();
                    let detail = if to_cut < 1e-2 {
                        format!("pole reaches the cut at Re = {:.6} near alpha = {a:.6}", q.re)
                    } else {
                        format!("stalled at alpha = {a}")
                    };
                    return Err(Error::NoConvergence { what: "pole continuation", detail });
                }
            }
        }
    }
    Ok(q)
}

/// Locates the strip pole of the resolvent by damped Newton on the matching
/// function, falling back to continuation in `alpha`.
pub fn find_pole(params: &ModelParams, seed: Option<C64>) -> Result<C64> {
    if !(params.alpha > 0.0) {
        return Err(Error::InvalidParams("pole search needs alpha > 0".into()));
    }
    params.require_nonresonant()?;
    let start = match seed {
        Some(s) => s,
        None => pole_seed(params)?,
    };
    let mut q = match newton(start, params) {
        Ok(q) => q,
        Err(_) => continuation(params)?,
    };
    let shifted = nearest_image(q, C64::new(0.0, 0.0), params.omega);
    if shifted != q {
        q = newton(shifted, params)?;
    }
    let d = slope(q, params)?;
    if d.norm() < MIN_SLOPE {
        return Err(Error::MultipleRootSuspicion(d.norm()));
    }
    Ok(q)
}

/// Distance from `sigma` to the nearest lattice singularity: a real point
/// `k omega` or a cut hanging below `sigma_c + k omega`.
pub fn singular_distance(sigma: C64, params: &ModelParams) -> f64 {
    let w = params.omega;
    let sc = params.sigma_c();
    let k = (sigma.re / w).round();
    let mut d = f64::INFINITY;
    for j in [k - 1.0, k, k + 1.0] {
        d = d.min((sigma - C64::new(j * w, 0.0)).norm());
    }
    let kc = ((sigma.re - sc) / w).round();
    for j in [kc - 1.0, kc, kc + 1.0] {
        let x = sc + j * w;
        let dc = if sigma.im <= 0.0 {
            (sigma.re - x).abs()
        } else {
            (sigma - C64::new(x, 0.0)).norm()
        };
        d = d.min(dc);
    }
    d
}

/// `min(omega, |Im q0|, distance to the cut) / 4`.
pub fn default_radius(q0: C64, params: &ModelParams) -> f64 {
    let sc = params.sigma_c();
    let kc = ((q0.re - sc) / params.omega).round();
    let cut = [kc - 1.0, kc, kc + 1.0]
        .iter()
        .map(|j| (q0.re - sc - j * params.omega).abs())
        .fold(f64::INFINITY, f64::min);
    params.omega.min(q0.im.abs()).min(cut) / 4.0
}

fn lattice_half_width(sigma: C64, params: &ModelParams, window: usize) -> i64 {
    (window + default_depth(sigma, params) + 40) as i64
}

/// Residues from the trapezoid rule on a circle of `radius` around `q0`
/// with `m` nodes.
pub fn residues_contour(
    q0: C64,
    params: &ModelParams,
    radius: Option<f64>,
    m: usize,
    half_width: usize,
) -> Result<Residues> {
    let zero = Residues { half_width, r: vec![ZERO; 2 * half_width + 1] };
    if params.alpha == 0.0 {
        return Ok(zero);
    }
    if m < 64 {
        return Err(Error::InvalidParams(format!("contour needs at least 64 nodes, got {m}")));
    }
    let r = radius.unwrap_or_else(|| default_radius(q0, params));
    let dist = singular_distance(q0, params);
    if !(r > 0.0) || r >= dist {
        return Err(Error::ContourCrossesCut { radius: r, dist });
    }
    let n = lattice_half_width(q0, params, half_width);
    let w = half_width as i64;
    let parts: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let e = C64::from_polar(r, 2.0 * PI * k as f64 / m as f64);
            let g = solve_fixed(q0 + e, params, BranchSide::FromAbove, params.m_star(), n)?;
            Ok(g[(n - w) as usize..=(n + w) as usize].iter().map(|z| z * e).collect())
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![ZERO; 2 * half_width + 1];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let scale = -C64::i() / m as f64;
    Ok(Residues { half_width, r: acc.into_iter().map(|z| z * scale).collect() })
}

/// `Res(g, q0) = lambda y0` with `lambda = <f0, y0*> / <S0 y0, y0*>`,
/// returned as residues of `Phi`.
pub fn residues_from_vectors(kv: &KernelVectors, params: &ModelParams) -> Result<Residues> {
    let (a, w) = (params.alpha, params.omega);
    let n = kv.half_width as i64;
    let q0 = kv.sigma0;
    let shift = q0 - params.sigma_c();
    let ms = params.m_star();
    let dh = |k: i64| dh_qz(q0 + k as f64 * w, shift + (k - ms) as f64 * w, BranchSide::FromAbove);
    let mut num = ZERO;
    let mut den = ZERO;
    let mut scale = 0.0;
    for k in -n..=n {
        let ys = kv.y0star(k).conj();
        num += f_raw(q0 + k as f64 * w, params) * ys;
        let mut s = ZERO;
        if k < n {
            s -= a * dh(k + 1) * kv.y0(k + 1);
        }
        if k > -n {
            s += a * dh(k - 1) * kv.y0(k - 1);
        }
        den += s * ys;
        scale += (s * ys).norm();
    }
    if den.norm() <= 1e-13 * scale {
        return Err(Error::SimplicityViolation(den));
    }
    let lam = num / den;
    Ok(Residues {
        half_width: kv.half_width,
        r: kv.y0.iter().map(|y| -C64::i() * lam * y).collect(),
    })
}

/// Residues from the Laurent coefficient built on kernel vectors.
pub fn residues_formula(q0: C64, params: &ModelParams, half_width: usize) -> Result<Residues> {
    if params.alpha == 0.0 {
        return Ok(Residues { half_width, r: vec![ZERO; 2 * half_width + 1] });
    }
    let kv = kernel_vectors(q0, params, half_width.max(8))?;
    let all = residues_from_vectors(&kv, params)?;
    let off = kv.half_width - half_width;
    Ok(Residues { half_width, r: all.r[off..off + 2 * half_width + 1].to_vec() })
}

/// Largest per-component relative gap over `|n| <= 3`.
pub fn disagreement(a: &Residues, b: &Residues) -> f64 {
    (-3..=3)
        .filter_map(|n| Some((a.get(n)?, b.get(n)?)))
        .map(|(x, y)| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Pole, contour residues for `|n| <= half_width`, and the two-method check.
pub fn pole_data(params: &ModelParams, half_width: usize) -> Result<PoleData> {
    let q0 = find_pole(params, None)?;
    let rc = residues_contour(q0, params, None, 128, half_width.max(3))?;
    let rf = residues_formula(q0, params, half_width.max(3))?;
    let method_disagreement = disagreement(&rc, &rf);
    let off = rc.half_width - half_width;
    let residues = Residues { half_width, r: rc.r[off..off + 2 * half_width + 1].to_vec() };
    Ok(PoleData { params: *params, q0, residues, method_disagreement })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCount {
    pub count: i64,
    /// Total phase change of the truncated determinant divided by `2 pi`.
    pub winding: f64,
    pub samples: usize,
}

/// Counts zeros of the truncated determinant of `I - K0` in the strip
/// rectangle `sigma_c < Re < sigma_c + omega`, `-depth < Im < -eps`.
pub fn count_strip_zeros(params: &ModelParams, depth: Option<f64>, eps: Option<f64>) -> Result<ZeroCount> {
    params.require_nonresonant()?;
    if !(params.alpha > 0.0) {
        return Err(Error::InvalidParams("zero count needs alpha > 0".into()));
    }
    let (w, sc, ms) = (params.omega, params.sigma_c(), params.m_star());
    let a2 = params.alpha * params.alpha;
    let q = depth.unwrap_or(2.0 + 4.0 * a2);
    let eps = eps.unwrap_or(1e-3 * pole_seed(params)?.im.abs());
    let corners = [
        C64::new(sc, -eps),
        C64::new(sc, -q),
        C64::new(sc + w, -q),
        C64::new(sc + w, -eps),
    ];
    let n = (2.0 * q / w).ceil() as i64 + ms.abs() + 32;
    // edge 0 runs down the left cut, edge 2 up the right one
    let eval = |edge: usize, z: C64| -> Vec<C64> {
        let (side, branch) = match edge {
            0 => (BranchSide::RightOfCut, ms),
            2 => (BranchSide::LeftOfCut, ms - 1),
            _ => (BranchSide::FromAbove, ms),
        };
        Lattice::new(z, params, n, side, branch).continuant()
    };
    let mut total = 0.0;
    let mut samples = 0;
    for edge in 0..4 {
        let (a, b) = (corners[edge], corners[(edge + 1) % 4]);
        let at = |t: f64| {
            let mut z = a + (b - a) * t;
            if edge % 2 == 0 {
                z.re = a.re;
            }
            z
        };
        // bottom corners sit on a cut: take them from the adjacent vertical edge
        let end_edge = |t: f64| match (edge, t) {
            (1, t) if t == 0.0 => 0,
            (1, t) if t == 1.0 => 2,
            (3, t) if t == 0.0 => 2,
            (3, t) if t == 1.0 => 0,
            _ => edge,
        };
        let phase = |x: &[C64], y: &[C64]| -> (f64, f64) {
            let mut sum = 0.0;
            let mut worst: f64 = 0.0;
            for (u, v) in x.iter().zip(y) {
                let d = (v / u).arg();
                worst = worst.max(d.abs());
                sum += d;
            }
            (sum, worst)
        };
        let m0 = 64;
        let mut stack: Vec<(f64, f64, Vec<C64>, Vec<C64>)> = Vec::new();
        let mut prev = eval(end_edge(0.0), at(0.0));
        for i in 1..=m0 {
            let t = i as f64 / m0 as f64;
            let v = eval(end_edge(t), at(t));
            stack.push(((i - 1) as f64 / m0 as f64, t, prev, v.clone()));
            prev = v;
        }
        stack.reverse();
        samples += m0 + 1;
        // accept a panel once its halves agree with it and no factor turns by
        // more than half a radian
        while let Some((t0, t1, v0, v1)) = stack.pop() {
            let tm = 0.5 * (t0 + t1);
            let vm = eval(end_edge(tm), at(tm));
            samples += 1;
            let (s, _) = phase(&v0, &v1);
            let (s1, w1) = phase(&v0, &vm);
            let (s2, w2) = phase(&vm, &v1);
            let settled = (s1 + s2 - s).abs() < 1e-6 && w1.max(w2) < 0.5;
            if settled || t1 - t0 < 1e-13 {
                total += s1 + s2;
            } else {
                stack.push((tm, t1, vm.clone(), v1));
                stack.push((t0, tm, v0, vm));
            }
        }
    }
    let winding = total / (2.0 * PI);
    Ok(ZeroCount { count: winding.round() as i64, winding, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::h_qz;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(a: f64, w: f64) -> ModelParams {
        ModelParams::new(a, w).unwrap()
    }

    #[test]
    fn pole_at_omega_two() {
        let p = params(0.1, 2.0);
        let q0 = find_pole(&p, None).unwrap();
        assert!(matching_fn(q0, &p).unwrap().norm() < 1e-12);
        assert!(q0.im < 0.0);
        let lead = c(-4.330e-3, -2.5e-3);
        assert!((q0 - lead).norm() < 0.15 * lead.norm(), "{q0}");
    }

    #[test]
    fn pole_over_alpha_squared_tends_to_s0() {
        let w = 2.0;
        let s0 = -c(3f64.sqrt(), 1.0) / 4.0;
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&a| (find_pole(&params(a, w), None).unwrap() / (a * a) - s0).norm())
            .collect();
        assert!(errs[1] < 0.6 * errs[0] && errs[2] < 0.6 * errs[1], "{errs:?}");
        assert!(errs[2] < 0.05 * s0.norm(), "{errs:?}");
    }

    #[test]
    fn golden_rule_rate() {
        let p = params(0.05, 1.5);
        let q0 = find_pole(&p, None).unwrap();
        let re_p0 = q0.im;
        let lead = -0.05f64.powi(2) * 0.5f64.sqrt() / 3.0;
        assert!((re_p0 / lead - 1.0).abs() < 0.2, "{re_p0} vs {lead}");
        assert!(re_p0 < 0.0);
    }

    #[test]
    fn multiphoton_pole_and_large_alpha() {
        for (a, w) in [(0.2, 0.7), (0.3, 0.7), (1.0, 1.5), (1.4, 0.7), (1.9, 0.7)] {
            let p = params(a, w);
            let q0 = find_pole(&p, None).unwrap();
            assert!(q0.im < 0.0, "{a} {w}: {q0}");
            assert!(matching_fn(q0, &p).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn pole_leaves_strip_through_cut_at_large_alpha() {
        let p = params(2.0, 0.7);
        match find_pole(&p, None) {
            Err(Error::NoConvergence { detail, .. }) => assert!(detail.contains("cut"), "{detail}"),
            other => panic!("{other:?}"),
        }
        assert_eq!(count_strip_zeros(&p, None, Some(1e-4)).unwrap().count, 0);
        assert_eq!(count_strip_zeros(&params(1.5, 0.7), None, Some(1e-4)).unwrap().count, 0);
        for a in [1.4, 1.6, 1.9] {
            assert_eq!(count_strip_zeros(&params(a, 0.7), None, Some(1e-4)).unwrap().count, 1, "{a}");
        }
    }

    #[test]
    fn residues_two_methods_agree() {
        let p = params(0.1, 2.0);
        let q0 = find_pole(&p, None).unwrap();
        let rc = residues_contour(q0, &p, None, 128, 6).unwrap();
        let rf = residues_formula(q0, &p, 6).unwrap();
        assert!(disagreement(&rc, &rf) < 1e-6, "{}", disagreement(&rc, &rf));
    }

    #[test]
    fn contour_converges_in_nodes() {
        let p = params(0.1, 2.0);
        let q0 = find_pole(&p, None).unwrap();
        let a = residues_contour(q0, &p, None, 64, 4).unwrap();
        let b = residues_contour(q0, &p, None, 128, 4).unwrap();
        for (x, y) in a.r.iter().zip(&b.r) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn contour_rejects_large_radius() {
        let p = params(0.1, 2.0);
        let q0 = find_pole(&p, None).unwrap();
        let r = residues_contour(q0, &p, Some(0.5), 64, 3);
        assert!(matches!(r, Err(Error::ContourCrossesCut { .. })));
        assert!(residues_contour(q0, &p, None, 16, 3).is_err());
    }

    #[test]
    fn zero_coupling_residues_vanish() {
        let p = params(0.0, 2.0);
        let r = residues_contour(c(-0.01, -0.01), &p, None, 64, 3).unwrap();
        assert!(r.r.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn residue_scale() {
        let p = params(0.1, 2.0);
        let q0 = find_pole(&p, None).unwrap();
        let r0 = residues_contour(q0, &p, None, 128, 3).unwrap().get(0).unwrap();
        let p0 = -C64::i() * q0;
        let ratio = (r0 / p0).norm();
        assert!(ratio > 0.25 && ratio < 1.0, "|R0/p0| = {ratio}");
    }

    #[test]
    fn residues_proportional_to_kernel_vector() {
        let p = params(0.1, 2.0);
        let q0 = find_pole(&p, None).unwrap();
        let rc = residues_contour(q0, &p, None, 128, 3).unwrap();
        let kv = kernel_vectors(q0, &p, 3).unwrap();
        let lam = rc.get(0).unwrap() / kv.y0(0);
        for n in -3..=3 {
            let l = rc.get(n).unwrap() / kv.y0(n);
            assert!((l - lam).norm() < 1e-6 * lam.norm(), "n = {n}");
        }
    }

    #[test]
    fn residues_independent_of_normalisation() {
        let p = params(0.1, 2.0);
        let q0 = find_pole(&p, None).unwrap();
        let kv = kernel_vectors(q0, &p, 6).unwrap();
        let base = residues_from_vectors(&kv, &p).unwrap();
        let mut kv2 = kv.clone();
        kv2.y0.iter_mut().for_each(|z| *z *= 3.0);
        kv2.y0star.iter_mut().for_each(|z| *z *= c(2.0, -1.0));
        let scaled = residues_from_vectors(&kv2, &p).unwrap();
        for (x, y) in base.r.iter().zip(&scaled.r) {
            assert!((x - y).norm() <= 1e-14 * x.norm().max(1e-300));
        }
    }

    #[test]
    fn residues_decay() {
        let p = params(0.2, 1.5);
        let d = pole_data(&p, 8).unwrap();
        for n in 2..8 {
            assert!(d.r(n + 1).norm() < d.r(n).norm(), "n = {n}");
            assert!(d.r(-n - 1).norm() < d.r(-n).norm(), "n = -{n}");
        }
        let ratios: Vec<f64> = (3..8).map(|n| (d.r(n + 1) / d.r(n)).norm()).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
        assert!(d.method_disagreement < 1e-6);
        assert!(d.p0().re < 0.0);
        let dp = d.p(3) - d.p(2);
        assert!((dp - c(0.0, -1.5)).norm() < 1e-15);
    }

    #[test]
    fn leading_vectors_small_coupling() {
        // Components listed as (1, 0, -1).
        let (a, w) = (0.01, 2.0);
        let p = params(a, w);
        let q0 = find_pole(&p, None).unwrap();
        let kv = kernel_vectors(q0, &p, 4).unwrap();
        let (sm, sp) = ((w - 1.0f64).sqrt(), (w + 1.0f64).sqrt());
        let y = |n: i64| kv.y0(n) / kv.y0(-1);
        assert!((y(1) + 1.0).norm() < 5.0 * a);
        let y0 = a * c(-sm, sp) / (2.0 * w);
        assert!((y(0) - y0).norm() < 5.0 * a * y0.norm());
        let ys = |n: i64| kv.y0star(n) / kv.y0star(0);
        let s1 = a * c(sm, -1.0) / (2.0 * w);
        let sm1 = -C64::i() * a * (sp + 1.0) / (2.0 * w);
        assert!((ys(1) - s1).norm() < 5.0 * a * s1.norm(), "{} vs {s1}", ys(1));
        assert!((ys(-1) - sm1).norm() < 5.0 * a * sm1.norm(), "{} vs {sm1}", ys(-1));
    }

    #[test]
    fn derivative_block_leading_entry() {
        let (a, w) = (0.01, 2.0);
        let p = params(a, w);
        let q0 = find_pole(&p, None).unwrap();
        let s10 = a * dh_qz(q0, q0 - 1.0, BranchSide::FromAbove);
        let want = 2.0 * C64::i() * c(-1.0, (w - 1.0f64).sqrt() * (w + 1.0f64).sqrt()) / a.powi(3);
        assert!((s10 / want - 1.0).norm() < 5.0 * a, "{s10} vs {want}");
    }

    #[test]
    fn adjoint_vector_identity() {
        let p = params(0.3, 1.7);
        let q0 = find_pole(&p, None).unwrap();
        let kv = kernel_vectors(q0, &p, 6).unwrap();
        let h = |n: i64| {
            let q = q0 + n as f64 * p.omega;
            h_qz(q, q - 1.0, BranchSide::FromAbove)
        };
        let v = |n: i64| (if n % 2 == 0 { 1.0 } else { -1.0 }) * h(n) * kv.y0(n);
        let k = kv.y0star(0) / v(0).conj();
        for n in -5..=5 {
            let want = k * v(n).conj();
            assert!((kv.y0star(n) - want).norm() < 1e-9 * (1.0 + want.norm()), "n = {n}");
        }
    }

    #[test]
    fn one_zero_per_strip() {
        for &w in &[1.5, 2.5] {
            for &a in &[0.1, 0.5, 1.0] {
                let z = count_strip_zeros(&params(a, w), None, None).unwrap();
                assert_eq!(z.count, 1, "alpha = {a}, omega = {w}: {z:?}");
                assert!((z.winding - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pole_smooth_in_alpha() {
        let w = 1.5;
        let h = 0.02;
        let q: Vec<C64> = (1..=20)
            .map(|i| find_pole(&params(i as f64 * h, w), None).unwrap())
            .collect();
        let second: Vec<f64> = q.windows(3).map(|t| ((t[2] - 2.0 * t[1] + t[0]) / (h * h)).norm()).collect();
        let big = second.iter().cloned().fold(0.0, f64::max);
        assert!(big < 10.0, "{second:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn pole_is_root_with_negative_imaginary_part(a in 0.03f64..0.6, w in 1.1f64..3.0) {
            let p = params(a, w);
            let q0 = find_pole(&p, None).unwrap();
            prop_assert!(q0.im < 0.0);
            prop_assert!(matching_fn(q0, &p).unwrap().norm() < 1e-12);
            prop_assert!(q0.re.abs() <= 0.5 * w);
        }
    }
}
