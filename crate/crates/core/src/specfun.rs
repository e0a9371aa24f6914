//! Branch-controlled elementary functions, the Faddeeva function and the
//! time-domain kernel.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

const TWO_OVER_SQRT_PI: f64 = 1.128_379_167_095_512_6;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Which boundary value of the square root to take.
///
/// `FromAbove` is the continuation from the upper half plane, with the cut
/// on the negative imaginary axis. `LeftOfCut` and `RightOfCut` are the
/// continuations across that cut from either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSide {
    FromAbove,
    LeftOfCut,
    RightOfCut,
}

/// Coupling and drive frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub omega: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, omega: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParams(format!("omega must be > 0, got {omega}")));
        }
        Ok(Self { alpha, omega })
    }

    /// True when 1/omega is an integer to within 1e-9.
    pub fn resonant_omega(&self) -> bool {
        let r = 1.0 / self.omega;
        (r - r.round()).abs() < 1e-9
    }

    pub fn require_nonresonant(&self) -> Result<()> {
        if self.resonant_omega() {
            Err(Error::ResonantOmega(1.0 / self.omega))
        } else {
            Ok(())
        }
    }

    /// Index of the lattice component whose branch point lies in the strip.
    pub fn m_star(&self) -> i64 {
        (1.0 / self.omega).floor() as i64
    }

    /// Branch point inside the strip, `1 - m* omega`, in `[0, omega)`.
    pub fn sigma_c(&self) -> f64 {
        1.0 - self.m_star() as f64 * self.omega
    }

    /// Threshold `beta_n = 1 + n omega`.
    pub fn beta(&self, n: i64) -> f64 {
        1.0 + n as f64 * self.omega
    }
}

fn principal_sqrt(z: C64) -> C64 {
    if z.im == 0.0 {
        if z.re >= 0.0 {
            C64::new(z.re.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-z.re).sqrt())
        }
    } else {
        z.sqrt()
    }
}

/// Square root on the physical sheet. Never fails for `FromAbove`.
pub(crate) fn sqrt_side(z: C64, side: BranchSide) -> C64 {
    match side {
        BranchSide::FromAbove => {
            let s = principal_sqrt(z);
            if z.im < 0.0 && z.re <= 0.0 {
                -s
            } else {
                s
            }
        }
        BranchSide::RightOfCut => principal_sqrt(z),
        BranchSide::LeftOfCut => -principal_sqrt(z),
    }
}

/// `sqrt(z)` with argument taken in `(-pi/2, 3pi/2)` for `FromAbove`,
/// or the boundary value on the requested side of the cut.
pub fn branch_sqrt(z: C64, side: BranchSide) -> Result<C64> {
    if side != BranchSide::FromAbove && z == C64::new(0.0, 0.0) {
        return Err(Error::Domain("cut-side square root requested at z = 0".into()));
    }
    Ok(sqrt_side(z, side))
}

/// `h(q) = 1 / (2 (sqrt(q - 1) - i))` with the root taken from `z = q - 1`.
/// Near `q = 0` the form `(sqrt(z) + i) / (2 q)` avoids cancellation.
#[inline]
pub(crate) fn h_qz(q: C64, z: C64, side: BranchSide) -> C64 {
    let s = sqrt_side(z, side);
    if (s - C64::i()).norm() < 0.5 {
        (s + C64::i()) / (2.0 * q)
    } else {
        0.5 / (s - C64::i())
    }
}

/// `h'(q) = -h^2 / sqrt(q - 1)`.
#[inline]
pub(crate) fn dh_qz(q: C64, z: C64, side: BranchSide) -> C64 {
    let h = h_qz(q, z, side);
    -h * h / sqrt_side(z, side)
}

pub fn h_eval(q: C64, side: BranchSide) -> Result<C64> {
    let d = branch_sqrt(q - 1.0, side)? - C64::i();
    if d == C64::new(0.0, 0.0) || q == C64::new(0.0, 0.0) {
        return Err(Error::Pole { what: "h", at: q });
    }
    Ok(h_qz(q, q - 1.0, side))
}

#[inline]
pub(crate) fn f_raw(q: C64, p: &ModelParams) -> C64 {
    -p.alpha * p.omega / (q * q - p.omega * p.omega)
}

/// Source term `f(q) = -alpha omega / (q^2 - omega^2)`.
pub fn f_eval(q: C64, params: &ModelParams) -> Result<C64> {
    let d = q * q - params.omega * params.omega;
    if d == C64::new(0.0, 0.0) {
        return Err(Error::Pole { what: "f", at: q });
    }
    Ok(-params.alpha * params.omega / d)
}

/// Faddeeva function `w(z) = exp(-z^2) erfc(-i z)`.
///
/// Poppe and Wijers' algorithm: power series near the origin, Laplace
/// continued fraction far away, and a Taylor/continued-fraction hybrid
/// in between. The lower half plane follows from `w(-z) = 2 exp(-z^2) - w(z)`.
pub fn faddeeva(z: C64) -> C64 {
    let (xi, yi) = (z.re, z.im);
    let xabs = xi.abs();
    let yabs = yi.abs();
    let x = xabs / 6.3;
    let y = yabs / 4.4;
    let mut qrho = x * x + y * y;
    let xquad0 = xabs * xabs - yabs * yabs;
    let yquad = 2.0 * xabs * yabs;

    let (mut u, mut v);
    let (mut u2, mut v2) = (0.0, 0.0);
    let small = qrho < 0.085264;

    if small {
        qrho = (1.0 - 0.85 * y) * qrho.sqrt();
        let n = (6.0 + 72.0 * qrho).round() as i32;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let xaux = (xsum * xquad0 - ysum * yquad) / i as f64;
            ysum = (xsum * yquad + ysum * xquad0) / i as f64;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -TWO_OVER_SQRT_PI * (xsum * yabs + ysum * xabs) + 1.0;
        let v1 = TWO_OVER_SQRT_PI * (xsum * xabs - ysum * yabs);
        let daux = (-xquad0).exp();
        u2 = daux * yquad.cos();
        v2 = -daux * yquad.sin();
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        let (h, kapn, nu);
        if qrho > 1.0 {
            h = 0.0;
            kapn = 0;
            qrho = qrho.sqrt();
            nu = (3.0 + 1442.0 / (26.0 * qrho + 77.0)) as i32;
        } else {
            qrho = (1.0 - y) * (1.0 - qrho).sqrt();
            h = 1.88 * qrho;
            kapn = (7.0 + 34.0 * qrho).round() as i32;
            nu = (16.0 + 26.0 * qrho).round() as i32;
        }
        let h2 = 2.0 * h;
        let taylor = h > 0.0;
        let mut ql = if taylor { h2.powi(kapn) } else { 0.0 };
        let (mut rx, mut ry, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for n in (0..=nu).rev() {
            let np1 = (n + 1) as f64;
            let tx = yabs + h + np1 * rx;
            let ty = xabs - np1 * ry;
            let c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if taylor && n <= kapn {
                let tx = ql + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                ql /= h2;
            }
        }
        if taylor {
            u = TWO_OVER_SQRT_PI * sx;
            v = TWO_OVER_SQRT_PI * sy;
        } else {
            u = TWO_OVER_SQRT_PI * rx;
            v = TWO_OVER_SQRT_PI * ry;
        }
        if yabs == 0.0 {
            u = (-xabs * xabs).exp();
        }
    }

    if yi < 0.0 {
        if small {
            u2 *= 2.0;
            v2 *= 2.0;
        } else {
            let w1 = 2.0 * (-xquad0).exp();
            u2 = w1 * yquad.cos();
            v2 = -w1 * yquad.sin();
        }
        u = u2 - u;
        v = v2 - v;
        if xi > 0.0 {
            v = -v;
        }
    } else if xi < 0.0 {
        v = -v;
    }
    C64::new(u, v)
}

/// `erfc(sqrt(i u))` for `u >= 0`, principal root.
pub(crate) fn erfc_sqrt_iu(u: f64) -> C64 {
    let z = C64::new(0.0, u).sqrt();
    C64::new(0.0, -u).exp() * faddeeva(C64::i() * z)
}

/// Kernel `eta(s) = sqrt(i) e^{-is} / sqrt(pi s) - i erfc(sqrt(i s))`.
pub fn eta_eval(s: f64) -> Result<C64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("eta requires s > 0, got {s}")));
    }
    Ok(eta_unchecked(s))
}

pub(crate) fn eta_unchecked(s: f64) -> C64 {
    let phase = C64::new(0.0, -s).exp();
    let zeta = C64::i() * C64::new(0.0, s).sqrt();
    if s <= 25.0 {
        let sqrt_i = C64::new(0.0, 1.0).sqrt();
        phase * (sqrt_i * INV_SQRT_PI / s.sqrt() - C64::i() * faddeeva(zeta))
    } else {
        // The two leading terms cancel; keep only the continued-fraction tail.
        let mut t = C64::new(0.0, 0.0);
        for k in (2..=60).rev() {
            t = (0.5 * k as f64) / (zeta - t);
        }
        let r = 0.5 / (zeta - t);
        phase * INV_SQRT_PI * r / (zeta * (zeta - r))
    }
}
