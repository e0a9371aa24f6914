//! Gauss–Kronrod rules, graded panels and a small adaptive integrator.

use num_complex::Complex64 as C64;
use std::collections::BinaryHeap;

/// Kronrod nodes on `[0, 1]` half of `[-1, 1]`, centre last.
pub const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

pub const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
pub const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Nodes and (Kronrod, Gauss) weights of the 15-point rule on `[a, b]`.
pub fn gk15_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for i in 0..7 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        out[2 * i] = (c - h * XGK[i], h * WGK[i], h * wg);
        out[2 * i + 1] = (c + h * XGK[i], h * WGK[i], h * wg);
    }
    out[14] = (c, h * WGK[7], h * WG[3]);
    out
}

/// 15-point Kronrod value and `|K15 - G7|`.
pub fn gk15<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64) -> (C64, f64) {
    let mut k = C64::new(0.0, 0.0);
    let mut g = C64::new(0.0, 0.0);
    for (x, wk, wg) in gk15_nodes(a, b) {
        let v = f(x);
        k += wk * v;
        g += wg * v;
    }
    (k, (k - g).norm())
}

/// Geometric panel edges from `lo` to `hi` with ratio `r`, starting at 0.
pub fn geometric_edges(lo: f64, hi: f64, r: f64) -> Vec<f64> {
    let mut e = vec![0.0, lo];
    let mut x = lo;
    while x < hi {
        x = (x * r).min(hi);
        e.push(x);
    }
    e
}

struct Panel {
    a: f64,
    b: f64,
    val: C64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: C64,
    pub err: f64,
    pub evals: usize,
}

/// Globally adaptive GK15 over the given breakpoints; bisects the worst panel
/// until the summed error estimate is below `abs_tol` or `max_panels` is hit.
pub fn integrate<F: FnMut(f64) -> C64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    max_panels: usize,
) -> Integral {
    let mut heap = BinaryHeap::new();
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut evals = 0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        total += v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], val: v, err: e });
    }
    while err > abs_tol && heap.len() < max_panels {
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        evals += 30;
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2 });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let (mut value, mut e) = (C64::new(0.0, 0.0), 0.0);
    for p in heap.iter() {
        value += p.val;
        e += p.err;
    }
    Integral { value, err: e, evals }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
