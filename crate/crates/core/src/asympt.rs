//! Leading-order small-coupling formulas.

use crate::error::{Error, Result};
use crate::specfun::ModelParams;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Multiphoton data: `m` is the least integer with `m omega > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiphotonOrder {
    pub m: u32,
    pub s0: C64,
    pub xi0: f64,
}

impl MultiphotonOrder {
    pub fn new(omega: f64) -> Result<Self> {
        let p = ModelParams::new(0.0, omega)?;
        p.require_nonresonant()?;
        let m = (1.0 / omega).floor() as u32 + 1;
        Ok(Self { m, s0: s0(omega), xi0: xi0(omega, m) })
    }
}

fn s0(omega: f64) -> C64 {
    if omega > 1.0 {
        let a = 0.5 / C64::new(1.0, (omega - 1.0).sqrt());
        a - 0.5 / ((omega + 1.0).sqrt() - 1.0)
    } else {
        C64::new(-((1.0 + omega).sqrt() - (1.0 - omega).sqrt()) / (2.0 * omega), 0.0)
    }
}

fn prod_chain(omega: f64, m: u32) -> f64 {
    (1..m).map(|k| 1.0 - (1.0 - k as f64 * omega).sqrt()).product()
}

fn xi0(omega: f64, m: u32) -> f64 {
    let mw = m as f64 * omega;
    let pr = prod_chain(omega, m);
    -(mw - 1.0).sqrt() / (mw * pr * pr * 2f64.powi(2 * m as i32 + 1))
}

fn check_order(params: &ModelParams, m: u32) -> Result<MultiphotonOrder> {
    let mo = MultiphotonOrder::new(params.omega)?;
    if mo.m != m {
        return Err(Error::InvalidParams(format!(
            "omega = {} has multiphoton order {}, not {m}",
            params.omega, mo.m
        )));
    }
    Ok(mo)
}

/// `p0 = -i alpha^2 s0` for `omega > 1`.
pub fn p0_leading(params: &ModelParams) -> Result<C64> {
    if !(params.omega > 1.0) {
        return Err(Error::InvalidParams(format!(
            "single-photon regime needs omega > 1, got {}",
            params.omega
        )));
    }
    Ok(-C64::i() * params.alpha * params.alpha * s0(params.omega))
}

/// Closed-form `Re p0 = xi0 alpha^{2m}` in the `m`-photon regime and `xi0`.
/// The numerically located pole has four times this real part as
/// `alpha -> 0`.
pub fn re_p0_multiphoton(params: &ModelParams, m: u32) -> Result<(f64, f64)> {
    let mo = check_order(params, m)?;
    Ok((mo.xi0 * params.alpha.powi(2 * m as i32), mo.xi0))
}

/// Leading-order residue `R0`.
pub fn r0_leading(params: &ModelParams, m: u32) -> Result<C64> {
    let mo = check_order(params, m)?;
    let a = params.alpha;
    let p0 = if m == 1 {
        p0_leading(params)?
    } else {
        -C64::i() * a * a * mo.s0 + mo.xi0 * a.powi(2 * m as i32)
    };
    let den = 2f64.powi(m as i32) * prod_chain(params.omega, m);
    Ok(C64::i() * m as f64 * a.powi(m as i32) * p0 / den)
}

/// Leading-order emission amplitude for `omega > 1`.
pub fn theta_small_alpha(k: f64, t: f64, params: &ModelParams) -> Result<C64> {
    if !(params.omega > 1.0) {
        return Err(Error::InvalidParams(format!(
            "single-photon regime needs omega > 1, got {}",
            params.omega
        )));
    }
    let (a, w) = (params.alpha, params.omega);
    let a2 = a * a;
    let (sm, sp) = ((w - 1.0).sqrt(), (w + 1.0).sqrt());
    let detune = k * k - w + 1.0;
    let pre = (2.0 / PI).sqrt() * a * w * k / C64::new(1.0, -k);
    let decay = (-a2 * t * sm / (2.0 * w)).exp();
    let phase = C64::new(0.0, t * (a2 * sp / (2.0 * w) + detune)).exp();
    let den = a2 * C64::new(sm, -sp) - C64::new(0.0, 2.0 * w * detune);
    Ok(pre * (1.0 - decay * phase) / den)
}

/// Stationary limit of [`theta_small_alpha`].
pub fn theta_small_alpha_limit(k: f64, params: &ModelParams) -> Result<C64> {
    if !(params.omega > 1.0) {
        return Err(Error::InvalidParams(format!(
            "single-photon regime needs omega > 1, got {}",
            params.omega
        )));
    }
    let (a, w) = (params.alpha, params.omega);
    let detune = k * k - w + 1.0;
    let pre = (2.0 / PI).sqrt() * a * w * k / C64::new(1.0, -k);
    let den = a * a * C64::new((w - 1.0).sqrt(), -(w + 1.0).sqrt()) - C64::new(0.0, 2.0 * w * detune);
    Ok(pre / den)
}

/// Golden-rule survival probability `exp(-2 |Re p0| t)`.
pub fn fermi_survival(t: f64, params: &ModelParams) -> Result<f64> {
    let re = if params.omega > 1.0 {
        p0_leading(params)?.re
    } else {
        let m = MultiphotonOrder::new(params.omega)?.m;
        re_p0_multiphoton(params, m)?.0
    };
    Ok((-2.0 * re.abs() * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, w: f64) -> ModelParams {
        ModelParams::new(a, w).unwrap()
    }

    #[test]
    fn p0_at_omega_two() {
        let p0 = p0_leading(&params(0.1, 2.0)).unwrap();
        let want = C64::new(-0.25, 0.75f64.sqrt() / 2.0) * 0.01;
        assert!((p0 - want).norm() < 1e-15, "{p0}");
    }

    #[test]
    fn s0_matches_closed_form_above_one() {
        for &w in &[1.2, 1.5, 2.0, 3.7] {
            let want = -C64::new((1.0 + w as f64).sqrt(), (w - 1.0f64).sqrt()) / (2.0 * w);
            assert!((s0(w) - want).norm() < 1e-14, "omega = {w}");
        }
    }

    #[test]
    fn re_p0_golden_rule_scale() {
        let p0 = p0_leading(&params(0.05, 1.5)).unwrap();
        assert!((p0.re + 5.8926e-4).abs() < 1e-7, "{}", p0.re);
    }

    #[test]
    fn multiphoton_order_and_s0_below_one() {
        let mo = MultiphotonOrder::new(0.7).unwrap();
        assert_eq!(mo.m, 2);
        let want = -((1.7f64).sqrt() - (0.3f64).sqrt()) / 1.4;
        assert!((mo.s0 - want).norm() < 1e-15);
        assert_eq!(mo.s0.im, 0.0);
        assert_eq!(MultiphotonOrder::new(0.3).unwrap().m, 4);
        assert_eq!(MultiphotonOrder::new(1.5).unwrap().m, 1);
        assert!(matches!(MultiphotonOrder::new(0.5), Err(Error::ResonantOmega(_))));
    }

    #[test]
    fn multiphoton_closed_form() {
        let p = params(0.2, 0.7);
        let (re, xi) = re_p0_multiphoton(&p, 2).unwrap();
        let want = -(1.0 / 1.4) * 0.4f64.sqrt() / (1.0 - 0.3f64.sqrt()).powi(2) * 0.2f64.powi(4) / 32.0;
        assert!((re - want).abs() < 1e-18);
        assert!((xi * 0.2f64.powi(4) - re).abs() < 1e-18);
        assert!(re_p0_multiphoton(&p, 3).is_err());
    }

    #[test]
    fn r0_single_photon() {
        let r = r0_leading(&params(0.1, 2.0), 1).unwrap();
        assert!((r - C64::new(-2.165e-4, -1.25e-4)).norm() < 1e-7, "{r}");
        assert_eq!(r0_leading(&params(0.0, 2.0), 1).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn theta_small_alpha_edges() {
        let p = params(0.05, 1.5);
        assert_eq!(theta_small_alpha(0.7, 0.0, &p).unwrap().norm(), 0.0);
        for &k in &[0.3, 0.7, 1.1] {
            let late = theta_small_alpha(k, 1e9, &p).unwrap();
            let lim = theta_small_alpha_limit(k, &p).unwrap();
            assert!((late - lim).norm() < 1e-12 * lim.norm());
        }
    }

    #[test]
    fn theta_small_alpha_peak() {
        let p = params(0.05, 1.5);
        let best = (0..4000)
            .map(|i| 0.45 + 0.1 * i as f64 / 4000.0)
            .map(|k2: f64| (k2, theta_small_alpha(k2.sqrt(), 1500.0, &p).unwrap().norm()))
            .fold((0.0, 0.0), |b, x| if x.1 > b.1 { x } else { b });
        assert!((best.0 - 0.5).abs() < 2e-3, "{best:?}");
        assert!(best.1 > 9.0 && best.1 < 12.0, "{best:?}");
    }

    #[test]
    fn fermi_survival_starts_at_one() {
        assert_eq!(fermi_survival(0.0, &params(0.05, 1.5)).unwrap(), 1.0);
        let s = fermi_survival(1000.0, &params(0.05, 1.5)).unwrap();
        assert!((s - (-2.0 * 5.8926e-4f64 * 1000.0).exp()).abs() < 1e-4);
        assert!(fermi_survival(10.0, &params(0.2, 0.7)).unwrap() < 1.0);
    }
}
