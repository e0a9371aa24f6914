use crate::output::{emit, sci, Cell, Table};
use crate::{Command, Common, Failure, Fig1Args, Format, Method, PolesArgs, SpectrumArgs, Suite, SurvivalArgs, ValidateArgs};
use dwion::asympt::{p0_leading, re_p0_multiphoton, theta_small_alpha_limit, MultiphotonOrder};
use dwion::spectral::{find_pole, pole_data};
use dwion::transseries::{theta_limit_zero_check, Transseries};
use dwion::volterra::{emission_richardson, solve_phi, theta_richardson};
use dwion::ModelParams;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

pub fn dispatch(cmd: &Command) -> Result<(), Failure> {
    match cmd {
        Command::Poles(a) => poles(a),
        Command::Survival(a) => survival(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Validate(a) => validate(a),
        Command::Fig1(a) => fig1(a),
    }
}

fn model(c: &Common) -> Result<ModelParams, Failure> {
    if !(c.tol >= 1e-14 && c.tol <= 1e-2) {
        return Err(Failure::usage(format!("tol must lie in [1e-14, 1e-2], got {}", c.tol)));
    }
    let p = ModelParams::new(c.alpha, c.omega)?;
    p.require_nonresonant()?;
    Ok(p)
}

fn grid(lo: f64, hi: f64, n: usize, log: bool, what: &str) -> Result<Vec<f64>, Failure> {
    if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() || (log && !(lo > 0.0)) {
        return Err(Failure::usage(format!("{what} grid needs at least 2 points and {what}_max > {what}_min")));
    }
    Ok((0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if log {
                lo * (hi / lo).powf(f)
            } else {
                lo + (hi - lo) * f
            }
        })
        .collect())
}

fn finish(table: &Table, common: &Common, default: Format) -> Result<(), Failure> {
    emit(common, &table.render(common.format.unwrap_or(default)))
}

fn poles(a: &PolesArgs) -> Result<(), Failure> {
    let c = &a.common;
    if !(c.alpha > 0.0) {
        return Err(Failure::usage("alpha must be positive for pole finding"));
    }
    let p = model(c)?;
    let d = pole_data(&p, a.n_max)?;
    let mut t = Table::new("poles", c, vec!["n", "re_p", "im_p", "re_r", "im_r", "abs_r"]);
    t.note("im_p0_sign", if d.p0().im > 0.0 { "positive" } else { "non-positive" });
    for n in -(a.n_max as i64)..=a.n_max as i64 {
        let (pn, rn) = (d.p(n), d.r(n));
        t.rows.push(vec![Cell::Int(n), Cell::Num(pn.re), Cell::Num(pn.im), Cell::Num(rn.re), Cell::Num(rn.im), Cell::Num(rn.norm())]);
    }
    let mo = MultiphotonOrder::new(p.omega)?;
    let p0 = d.p0();
    t.footer.push(("re_q0".into(), Cell::Num(d.q0.re)));
    t.footer.push(("im_q0".into(), Cell::Num(d.q0.im)));
    t.footer.push(("re_p0".into(), Cell::Num(p0.re)));
    t.footer.push(("im_p0".into(), Cell::Num(p0.im)));
    t.footer.push(("ionization_rate".into(), Cell::Num(-2.0 * p0.re)));
    t.footer.push(("method_disagreement".into(), Cell::Num(d.method_disagreement)));
    t.footer.push(("multiphoton_order".into(), Cell::Int(mo.m as i64)));
    if mo.m == 1 {
        let lead = p0_leading(&p)?;
        t.footer.push(("leading_re_p0".into(), Cell::Num(lead.re)));
        t.footer.push(("leading_im_p0".into(), Cell::Num(lead.im)));
    } else {
        let (re, xi0) = re_p0_multiphoton(&p, mo.m)?;
        t.footer.push(("multiphoton_xi0".into(), Cell::Num(xi0)));
        t.footer.push(("multiphoton_re_p0".into(), Cell::Num(re)));
        t.footer.push(("measured_over_multiphoton".into(), Cell::Num(p0.re / re)));
    }
    finish(&t, c, Format::Json)
}

fn golden_rate(p: &ModelParams) -> Result<f64, Failure> {
    if p.alpha == 0.0 {
        return Ok(0.0);
    }
    Ok(-2.0 * find_pole(p, None)?.im)
}

fn survival(a: &SurvivalArgs) -> Result<(), Failure> {
    let c = &a.common;
    let p = model(c)?;
    let times = grid(a.t_min, a.t_max, a.t_points, a.log_t, "t")?;
    if !(a.t_min > 0.0) && a.method != Method::Volterra {
        return Err(Failure::usage("the transseries needs t_min > 0"));
    }
    let ts = match a.method {
        Method::Volterra => None,
        _ => Some(Transseries::new(&p, c.tol)?.survival(&times)),
    };
    let vt = match a.method {
        Method::Transseries => None,
        _ => {
            let coarse = solve_phi(&p, a.t_max, a.dt)?;
            let fine = solve_phi(&p, a.t_max, a.dt / 2.0)?;
            let th = theta_richardson(&coarse, &fine)?;
            let v: Vec<(C64, f64)> = times
                .iter()
                .map(|&t| th.interpolate(t.min(th.t[th.t.len() - 1])).ok_or_else(|| Failure::usage(format!("t = {t} outside the Volterra grid"))))
                .collect::<Result<_, _>>()?;
            Some(v)
        }
    };
    let rate = golden_rate(&p)?;
    let mut cols = vec!["t", "re_theta", "im_theta", "abs2_theta", "err", "method", "golden_rule"];
    if a.method == Method::Both {
        cols.push("delta");
    }
    let label = match a.method {
        Method::Transseries => "transseries",
        Method::Volterra => "volterra",
        Method::Both => "both",
    };
    let mut table = Table::new("survival", c, cols);
    if a.method != Method::Transseries {
        table.note("dt", sci(a.dt));
    }
    let mut max_delta: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let (z, err) = match (&ts, &vt) {
            (Some(s), _) => (s.theta[i], s.err[i]),
            (None, Some(v)) => v[i],
            (None, None) => unreachable!("one method always runs"),
        };
        let mut row = vec![
            Cell::Num(t),
            Cell::Num(z.re),
            Cell::Num(z.im),
            Cell::Num(z.norm_sqr()),
            Cell::Num(err),
            Cell::Text(label.into()),
            Cell::Num((-rate * t).exp()),
        ];
        if let (Some(_), Some(v)) = (&ts, &vt) {
            let d = (z - v[i].0).norm();
            max_delta = max_delta.max(d);
            row.push(Cell::Num(d));
        }
        table.rows.push(row);
    }
    if a.method == Method::Both {
        table.footer.push(("max_delta".into(), Cell::Num(max_delta)));
    }
    finish(&table, c, Format::Csv)
}

fn parse_time(s: &str) -> Result<Option<f64>, Failure> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(Some(t)),
        _ => Err(Failure::usage(format!("--t must be a positive number or inf, got {s:?}"))),
    }
}

/// Labels the grid points nearest each resonance `k^2 = n omega - 1` and
/// threshold `k^2 = n omega` inside the grid.
fn feature_labels(k2: &[f64], omega: f64) -> Vec<String> {
    let mut labels = vec![String::new(); k2.len()];
    let (lo, hi) = (k2[0], k2[k2.len() - 1]);
    let mut n = 1;
    while n as f64 * omega - 1.0 <= hi {
        for (x, name) in [(n as f64 * omega - 1.0, "resonance"), (n as f64 * omega, "threshold")] {
            if x >= lo && x <= hi {
                let i = k2
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
                    .map(|(i, _)| i)
                    .expect("non-empty grid");
                let tag = format!("{name}_{n}");
                labels[i] = if labels[i].is_empty() { tag } else { format!("{}+{tag}", labels[i]) };
            }
        }
        n += 1;
    }
    labels
}

fn spectrum(a: &SpectrumArgs) -> Result<(), Failure> {
    let c = &a.common;
    let p = model(c)?;
    let t = parse_time(&a.t)?;
    if a.k2_min < 0.0 {
        return Err(Failure::usage("k2_min must be non-negative"));
    }
    let k2 = grid(a.k2_min, a.k2_max, a.k_points, false, "k2")?;
    let k: Vec<f64> = k2.iter().map(|x| x.sqrt()).collect();
    let ts = Transseries::new(&p, c.tol)?;
    let s = ts.spectrum(&k, t)?;
    let labels = feature_labels(&k2, p.omega);
    let mut table = Table::new("spectrum", c, vec!["k2", "re_theta", "im_theta", "abs2_theta", "err", "feature"]);
    table.note("t", t.map(sci).unwrap_or_else(|| "inf".into()));
    for i in 0..k.len() {
        let z = s.theta[i];
        table.rows.push(vec![
            Cell::Num(k2[i]),
            Cell::Num(z.re),
            Cell::Num(z.im),
            Cell::Num(z.norm_sqr()),
            Cell::Num(s.err[i]),
            Cell::Text(labels[i].clone()),
        ]);
    }
    if !a.skip_norm {
        let n = ts.emitted_norm(t, 1e-6)?;
        let th = t.map(|t| ts.theta(t).value.norm_sqr()).unwrap_or(0.0);
        table.footer.push(("emitted_norm".into(), Cell::Num(n.value.re)));
        table.footer.push(("emitted_norm_err".into(), Cell::Num(n.err)));
        table.footer.push(("survival_abs2".into(), Cell::Num(th)));
        table.footer.push(("total".into(), Cell::Num(th + n.value.re)));
    }
    finish(&table, c, Format::Csv)
}

fn fig1(a: &Fig1Args) -> Result<(), Failure> {
    let c = &a.common;
    let p = model(c)?;
    if a.k2_min < 0.0 {
        return Err(Failure::usage("k2_min must be non-negative"));
    }
    let k2 = grid(a.k2_min, a.k2_max, a.k_points, false, "k2")?;
    let k: Vec<f64> = k2.iter().map(|x| x.sqrt()).collect();
    let ts = Transseries::new(&p, c.tol)?;
    let s = ts.spectrum(&k, None)?;
    let lead: Vec<f64> = k
        .par_iter()
        .map(|&x| theta_small_alpha_limit(x, &p).map(|z| z.norm_sqr()).unwrap_or(f64::NAN))
        .collect();
    let mut table = Table::new("fig1", c, vec!["k2", "abs2_theta_inf", "abs2_leading_order"]);
    for i in 0..k.len() {
        table.rows.push(vec![Cell::Num(k2[i]), Cell::Num(s.theta[i].norm_sqr()), Cell::Num(lead[i])]);
    }
    finish(&table, c, Format::Csv)
}

struct Check {
    suite: &'static str,
    name: &'static str,
    value: f64,
    tolerance: f64,
    note: String,
}

impl Check {
    fn pass(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

fn suite_unitarity(p: &ModelParams, tol: f64) -> Result<Vec<Check>, Failure> {
    let ts = Transseries::new(p, tol)?;
    let mut out = Vec::new();
    for (name, t) in [("defect_t_inf", None), ("defect_t_50", Some(50.0))] {
        out.push(Check {
            suite: "unitarity",
            name,
            value: ts.unitarity_defect(t, 1e-6)?.abs(),
            tolerance: 1e-4,
            note: String::new(),
        });
    }
    out.push(Check {
        suite: "unitarity",
        name: "complete_ionization",
        value: theta_limit_zero_check(p)?,
        tolerance: 1e-6,
        note: String::new(),
    });
    Ok(out)
}

fn suite_crosscheck(p: &ModelParams, tol: f64, t_max: f64) -> Result<Vec<Check>, Failure> {
    if !(t_max > 1.0) {
        return Err(Failure::usage("cross-check horizon must exceed 1"));
    }
    let ts = Transseries::new(p, tol)?;
    let dt = 0.02f64.min(0.5 * 2.0 * std::f64::consts::PI / (40.0 * p.omega));
    let coarse = solve_phi(p, t_max, dt)?;
    let fine = solve_phi(p, t_max, dt / 2.0)?;
    let v = theta_richardson(&coarse, &fine)?;
    let mut gap: f64 = 0.0;
    for (t, z) in v.t.iter().zip(&v.theta) {
        if *t >= 1.0 {
            gap = gap.max((ts.theta(*t).value - z).norm());
        }
    }
    let t_e = 0.5 * t_max;
    let mut egap: f64 = 0.0;
    for k in [0.5, (p.omega - 1.0).abs().sqrt().max(0.3), 1.2] {
        let a = ts.emission(k, Some(t_e))?.value;
        let b = emission_richardson(&coarse, &fine, k, t_e)?.value;
        egap = egap.max((a - b).norm());
    }
    Ok(vec![
        Check { suite: "crosscheck", name: "theta_sup_gap", value: gap, tolerance: 1e-6, note: format!("t in [1, {t_max}]") },
        Check { suite: "crosscheck", name: "emission_gap", value: egap, tolerance: 1e-4, note: format!("t = {t_e}") },
    ])
}

fn suite_asymptotics(p: &ModelParams) -> Result<Vec<Check>, Failure> {
    if !(p.alpha > 0.0) {
        return Err(Failure::usage("alpha must be positive for pole finding"));
    }
    let q0 = find_pole(p, None)?;
    let p0 = -C64::i() * q0;
    let mo = MultiphotonOrder::new(p.omega)?;
    if mo.m == 1 {
        let lead = p0_leading(p)?;
        Ok(vec![Check {
            suite: "asymptotics",
            name: "p0_vs_leading",
            value: (p0 - lead).norm() / lead.norm(),
            tolerance: 0.2,
            note: "single-photon closed form; the multiphoton prefactor is not used at m = 1".into(),
        }])
    } else {
        let (re, _) = re_p0_multiphoton(p, mo.m)?;
        let ratio = p0.re / re;
        Ok(vec![Check {
            suite: "asymptotics",
            name: "re_p0_over_multiphoton",
            value: (ratio / 4.0 - 1.0).abs(),
            tolerance: 0.2,
            note: format!("measured Re p0 / closed-form multiphoton estimate = {ratio:.4}; expected factor 4"),
        }])
    }
}

fn validate(a: &ValidateArgs) -> Result<(), Failure> {
    let c = &a.common;
    let p = model(c)?;
    let mut checks = Vec::new();
    if matches!(a.suite, Suite::Unitarity | Suite::All) {
        checks.extend(suite_unitarity(&p, c.tol)?);
    }
    if matches!(a.suite, Suite::Crosscheck | Suite::All) {
        checks.extend(suite_crosscheck(&p, c.tol, a.t_max)?);
    }
    if matches!(a.suite, Suite::Asymptotics | Suite::All) {
        checks.extend(suite_asymptotics(&p)?);
    }
    let mut table = Table::new("validate", c, vec!["suite", "check", "value", "tolerance", "pass", "note"]);
    for ch in &checks {
        table.rows.push(vec![
            Cell::Text(ch.suite.into()),
            Cell::Text(ch.name.into()),
            Cell::Num(ch.value),
            Cell::Num(ch.tolerance),
            Cell::Text(if ch.pass() { "pass" } else { "fail" }.into()),
            Cell::Text(ch.note.clone()),
        ]);
    }
    let failed = checks.iter().filter(|c| !c.pass()).count();
    table.footer.push(("failed".into(), Cell::Int(failed as i64)));
    finish(&table, c, Format::Csv)?;
    if failed > 0 {
        return Err(Failure::numerical(format!("{failed} validation checks failed")));
    }
    Ok(())
}
