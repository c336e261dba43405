//! Finite-volume checks of the inequalities, each producing a [`BoundReport`]
//! with the worst margin found.
//!
//! Exact checks pass when the margin is at least `−EXACT_TOL`; statistical
//! checks pass when it is at least `−4·SE` at the reported location.

use serde::{Deserialize, Serialize};

use crate::ed::{chi_partials, zeta_exact, ChatTable, SpectralDecomposition};
use crate::error::{domain, invalid, Result};
use crate::hfunctions::{minus_part, plus_part, w_prime, StepFunction};
use crate::lattice::{lhat, TorusSpec};
use crate::observables::{
    chat_table, mean_flip_density, zeta_estimate, zratio_estimate, bound48, bound_sharp, Measurements,
};
use crate::stats::Estimate;

/// Absolute margin tolerance of exact checks.
pub const EXACT_TOL: f64 = 1e-9;
/// Standard errors allowed by statistical checks.
pub const SE_MULT: f64 = 4.0;
/// Relative slack added to finite-difference tolerances.
pub const DERIVATIVE_REL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub d: usize,
    pub side: usize,
    pub beta: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl Params {
    pub fn new(spec: &TorusSpec, beta: f64, lambda: f64, delta: f64) -> Self {
        Params {
            d: spec.d,
            side: spec.side,
            beta,
            lambda,
            delta,
        }
    }
}

/// One labelled value of a per-point series attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub label: String,
    pub value: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub check: String,
    pub params: Params,
    /// Worst `bound − value`; `None` when every point was excluded.
    pub margin: Option<f64>,
    pub location: String,
    pub pass: bool,
    pub tolerance: f64,
    pub statistical: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesPoint>,
}

impl BoundReport {
    /// Picks the worst of `(margin, se, location)` candidates. Statistical
    /// candidates are ranked by `margin + 4·SE`, exact ones by margin.
    fn from_candidates(
        check: &str,
        params: Params,
        statistical: bool,
        candidates: impl IntoIterator<Item = (f64, f64, String)>,
    ) -> Self {
        let slack = |m: f64, se: f64| if statistical { m + SE_MULT * se } else { m };
        let worst = candidates
            .into_iter()
            .min_by(|a, b| slack(a.0, a.1).total_cmp(&slack(b.0, b.1)));
        let (margin, tolerance, location) = match worst {
            Some((m, se, loc)) => (Some(m), if statistical { SE_MULT * se } else { EXACT_TOL }, loc),
            None => (None, if statistical { 0.0 } else { EXACT_TOL }, "none".to_string()),
        };
        BoundReport {
            check: check.to_string(),
            params,
            margin,
            location,
            pass: margin.is_none_or(|m| m >= -tolerance),
            tolerance,
            statistical,
            excluded: Vec::new(),
            series: Vec::new(),
        }
    }
}

/// Whether every report passed.
pub fn all_pass(reports: &[BoundReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// Where ĉ values come from.
#[derive(Clone, Copy, Debug)]
pub enum ChatSource<'a> {
    Exact(&'a ChatTable),
    Mc(&'a Measurements),
}

struct ChatPoint {
    k: usize,
    j: i64,
    value: Estimate,
}

impl ChatSource<'_> {
    fn spec(&self) -> TorusSpec {
        match self {
            ChatSource::Exact(t) => t.spec,
            ChatSource::Mc(m) => m.spec,
        }
    }

    fn beta(&self) -> f64 {
        match self {
            ChatSource::Exact(t) => t.beta,
            ChatSource::Mc(m) => m.beta,
        }
    }

    fn statistical(&self) -> bool {
        matches!(self, ChatSource::Mc(_))
    }

    fn points(&self) -> Result<Vec<ChatPoint>> {
        let nk = self.spec().n_sites();
        match self {
            ChatSource::Exact(t) => {
                let jm = t.jmax as i64;
                Ok((0..nk)
                    .flat_map(|k| (-jm..=jm).map(move |j| (k, j)))
                    .map(|(k, j)| ChatPoint {
                        k,
                        j,
                        value: Estimate::exact(t.get(k, j)),
                    })
                    .collect())
            }
            ChatSource::Mc(m) => {
                let jm = m.j_max().ok_or_else(|| domain("ĉ was not recorded"))? as i64;
                let table = chat_table(m)?;
                let width = (2 * jm + 1) as usize;
                Ok((0..nk)
                    .flat_map(|k| (-jm..=jm).map(move |j| (k, j)))
                    .map(|(k, j)| ChatPoint {
                        k,
                        j,
                        value: table[k * width + (j + jm) as usize],
                    })
                    .collect())
            }
        }
    }
}

fn frequency(beta: f64, j: i64) -> f64 {
    2.0 * std::f64::consts::PI * j as f64 / beta
}

fn momentum_label(spec: &TorusSpec, k: usize) -> String {
    let c: Vec<String> = spec
        .momentum(k)
        .components()
        .iter()
        .map(|v| format!("{v:.4}"))
        .collect();
    format!("({})", c.join(","))
}

fn chat_location(spec: &TorusSpec, beta: f64, k: usize, j: i64) -> String {
    format!("k={}, j={j}, l={:.6}", momentum_label(spec, k), frequency(beta, j))
}

/// Both infrared bounds at every `(k, l) ≠ (0, 0)`: the loose `48/(…)` bound
/// and the sharper one, reported separately and in that order.
///
/// With `λ = 0` every `l = 0` point has a vanishing denominator; those points
/// are excluded and listed.
pub fn check_infrared(source: &ChatSource, lambda: f64, delta: f64) -> Result<Vec<BoundReport>> {
    if !(lambda >= 0.0 && delta > 0.0) {
        return Err(domain("need lambda >= 0 and delta > 0"));
    }
    let spec = source.spec();
    let beta = source.beta();
    let params = Params::new(&spec, beta, lambda, delta);
    let mut loose = Vec::new();
    let mut sharp = Vec::new();
    let mut excluded = Vec::new();
    for p in source.points()? {
        let lh = lhat(&spec.momentum(p.k));
        let l = frequency(beta, p.j);
        if p.j == 0 && lambda * lh == 0.0 {
            excluded.push(chat_location(&spec, beta, p.k, p.j));
            continue;
        }
        let (b48, bs) = (bound48(lambda, delta, lh, l), bound_sharp(lambda, delta, lh, l));
        let loc = chat_location(&spec, beta, p.k, p.j);
        loose.push((b48 - p.value.mean, p.value.se, loc.clone()));
        sharp.push((bs - p.value.mean, p.value.se, loc));
    }
    let statistical = source.statistical();
    let mut r48 = BoundReport::from_candidates("infrared_48", params, statistical, loose);
    let mut rs = BoundReport::from_candidates("infrared_sharp", params, statistical, sharp);
    // the sharp bound never exceeds the loose one point by point
    assert!(!rs.pass || r48.pass, "sharp infrared bound passed while the 48-bound failed");
    r48.excluded = excluded.clone();
    rs.excluded = excluded;
    Ok(vec![r48, rs])
}

/// `ĉ(k, 0) ≤ 1/(2λL̂(k))` for `k ≠ 0`.
pub fn check_duhamel_bound(source: &ChatSource, lambda: f64, delta: f64) -> Result<BoundReport> {
    if lambda < 0.0 {
        return Err(domain("need lambda >= 0"));
    }
    let spec = source.spec();
    let beta = source.beta();
    let mut excluded = Vec::new();
    let mut cands = Vec::new();
    for p in source.points()?.into_iter().filter(|p| p.j == 0) {
        let lh = lhat(&spec.momentum(p.k));
        let loc = chat_location(&spec, beta, p.k, 0);
        if lambda * lh == 0.0 {
            excluded.push(loc);
            continue;
        }
        cands.push((1.0 / (2.0 * lambda * lh) - p.value.mean, p.value.se, loc));
    }
    let mut r = BoundReport::from_candidates(
        "duhamel",
        Params::new(&spec, beta, lambda, delta),
        source.statistical(),
        cands,
    );
    r.excluded = excluded;
    Ok(r)
}

/// Mean flip count per site against `2βδ`.
pub fn check_flip_domination(m: &Measurements, lambda: f64) -> BoundReport {
    let e = mean_flip_density(m);
    BoundReport::from_candidates(
        "flip_domination",
        Params::new(&m.spec, m.beta, lambda, m.delta),
        true,
        [(2.0 * m.beta * m.delta - e.mean, e.se, "mean flips per site".to_string())],
    )
}

/// The `h′` family a Gaussian-domination check records under `name`:
/// `h′` itself and the derivatives of `h₊` and `h₋`.
pub fn domination_functions(name: &str, hprime: &StepFunction) -> Result<Vec<(String, StepFunction)>> {
    Ok(vec![
        (name.to_string(), hprime.clone()),
        (format!("{name}+"), plus_part(hprime)?),
        (format!("{name}-"), minus_part(hprime)?),
    ])
}

/// Name under which `W′_{r,n}` is recorded.
pub fn white_name(r: f64, n: u32) -> String {
    format!("W_{r}_{n}")
}

/// `W′_{r,n}` for every `n`, named by [`white_name`].
pub fn white_functions(r: f64, ns: &[u32], beta: f64) -> Result<Vec<(String, StepFunction)>> {
    ns.iter()
        .map(|&n| Ok((white_name(r, n), w_prime(r, n, beta)?)))
        .collect()
}

/// Where `Z(h)/Z(0)` and `ζ` come from.
#[derive(Clone, Copy, Debug)]
pub enum ZSource<'a> {
    Exact(&'a SpectralDecomposition),
    Mc(&'a Measurements),
}

impl ZSource<'_> {
    fn params(&self, beta: f64) -> Params {
        match self {
            ZSource::Exact(s) => Params::new(s.spec(), beta, s.lambda, s.delta),
            ZSource::Mc(m) => Params::new(&m.spec, m.beta, f64::NAN, m.delta),
        }
    }

    fn zratio(&self, beta: f64, name: &str, h: &StepFunction) -> Result<Estimate> {
        match self {
            ZSource::Exact(s) => Ok(Estimate::exact(s.zratio_exact(beta, h)?)),
            ZSource::Mc(m) => zratio_estimate(m, name),
        }
    }

    fn zeta(&self, beta: f64, r: f64) -> Result<Estimate> {
        match self {
            ZSource::Exact(s) => Ok(Estimate::exact(zeta_exact(s.spec(), beta, s.lambda, s.delta, r)?)),
            ZSource::Mc(m) => zeta_estimate(m, r),
        }
    }

    /// `a − b` with a paired error bar for Monte Carlo sources.
    fn difference(&self, beta: f64, a: (&str, &StepFunction), b: Diff) -> Result<Estimate> {
        match self {
            ZSource::Exact(_) => {
                let x = self.zratio(beta, a.0, a.1)?.mean;
                let y = match b {
                    Diff::Zratio(n, h) => self.zratio(beta, n, h)?.mean,
                    Diff::Zeta(r) => self.zeta(beta, r)?.mean,
                };
                Ok(Estimate::exact(x - y))
            }
            ZSource::Mc(m) => {
                if a.1.sup_norm() == 0.0 {
                    return Ok(Estimate::exact(0.0));
                }
                match b {
                    Diff::Zratio(n, _) => m.zratio_difference(a.0, n),
                    Diff::Zeta(r) => m.zratio_minus_zeta(a.0, r),
                }
            }
        }
    }

    fn statistical(&self) -> bool {
        matches!(self, ZSource::Mc(_))
    }
}

enum Diff<'a> {
    Zratio(&'a str, &'a StepFunction),
    Zeta(f64),
}

/// `Z(h)/Z(0) ≤ ζ(‖h′‖∞)` and `Z(h) ≤ max(Z(h₊), Z(h₋))` for `h′` recorded
/// under `name` together with its `±` parts (see [`domination_functions`]).
/// `lambda` is only used to label the reports of Monte Carlo sources.
pub fn check_gaussian_domination(
    source: &ZSource,
    name: &str,
    hprime: &StepFunction,
    lambda: f64,
) -> Result<Vec<BoundReport>> {
    let beta = hprime.beta;
    let mut params = source.params(beta);
    if params.lambda.is_nan() {
        params.lambda = lambda;
    }
    let statistical = source.statistical();
    let fams = domination_functions(name, hprime)?;
    let r = hprime.sup_norm();
    let vs_zeta = source.difference(beta, (name, hprime), Diff::Zeta(r))?;
    let mut gd = BoundReport::from_candidates(
        "gaussian_domination",
        params,
        statistical,
        [(-vs_zeta.mean, vs_zeta.se, format!("h={name}, r={r}"))],
    );
    gd.series = vec![
        point(&format!("zratio({name})"), source.zratio(beta, name, hprime)?),
        point(&format!("zeta({r})"), source.zeta(beta, r)?),
    ];

    let (pn, ph) = (&fams[1].0, &fams[1].1);
    let (mn, mh) = (&fams[2].0, &fams[2].1);
    let zp = source.zratio(beta, pn, ph)?;
    let zm = source.zratio(beta, mn, mh)?;
    let (bn, bh) = if zp.mean >= zm.mean { (pn, ph) } else { (mn, mh) };
    let vs_part = source.difference(beta, (bn.as_str(), bh), Diff::Zratio(name, hprime))?;
    let mut pm = BoundReport::from_candidates(
        "vertical_pm",
        params,
        statistical,
        [(vs_part.mean, vs_part.se, format!("h={name}, larger part {bn}"))],
    );
    pm.series = vec![
        point(&format!("zratio({name})"), source.zratio(beta, name, hprime)?),
        point(&format!("zratio({pn})"), zp),
        point(&format!("zratio({mn})"), zm),
    ];
    Ok(vec![gd, pm])
}

fn point(label: &str, e: Estimate) -> SeriesPoint {
    SeriesPoint {
        label: label.to_string(),
        value: e.mean,
        se: e.se,
    }
}

/// Convergence of `Z(W_{r,n})/Z(0)` to `ζ(r)`.
///
/// Monte Carlo: passes when the largest-`n` value is within `4·SE` of ζ; the
/// margin is `−|difference|`. Exact: passes when `|Z(W_{r,n})/Z(0) − ζ(r)|` is
/// nonincreasing along `ns`; the margin is the smallest decrease.
pub fn check_white_limit(source: &ZSource, r: f64, ns: &[u32], beta: f64, lambda: f64) -> Result<BoundReport> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_list", "must be nonempty and strictly ascending"));
    }
    let mut params = source.params(beta);
    if params.lambda.is_nan() {
        params.lambda = lambda;
    }
    let mut series = Vec::new();
    let mut diffs = Vec::new();
    for (name, h) in white_functions(r, ns, beta)? {
        let e = source.difference(beta, (&name, &h), Diff::Zeta(r))?;
        series.push(point(&format!("|zratio({name}) - zeta({r})|"), Estimate { mean: e.mean.abs(), ..e }));
        diffs.push(e);
    }
    let mut rep = if source.statistical() {
        let last = diffs.last().unwrap();
        BoundReport::from_candidates(
            "white_limit",
            params,
            true,
            [(-last.mean.abs(), last.se, format!("r={r}, n={}", ns[ns.len() - 1]))],
        )
    } else {
        let cands: Vec<_> = diffs
            .windows(2)
            .zip(ns.windows(2))
            .map(|(d, n)| (d[0].mean.abs() - d[1].mean.abs(), 0.0, format!("r={r}, n={}->{}", n[0], n[1])))
            .collect();
        BoundReport::from_candidates("white_limit", params, false, cands)
    };
    rep.series = series;
    Ok(rep)
}

/// The four chains of the two differential inequalities, with χ and the
/// bubble diagram exact and derivatives from Richardson-extrapolated
/// central differences.
pub fn check_diff_inequalities(
    spec: &TorusSpec,
    beta: f64,
    lambda: f64,
    delta: f64,
    step: f64,
) -> Result<Vec<BoundReport>> {
    let p = chi_partials(spec, beta, lambda, delta, step)?;
    let b = SpectralDecomposition::new(spec, lambda, delta, 0.0)?.bubble_exact(beta);
    let d = spec.d as f64;
    let chi = p.chi;
    let (dl, el) = (p.dchi_dlambda.value, p.dchi_dlambda.error);
    // −∂χ/∂δ
    let (md, ed) = (-p.dchi_ddelta.value, p.dchi_ddelta.error);
    let params = Params::new(spec, beta, lambda, delta);
    let rel = |v: f64| DERIVATIVE_REL_TOL * v.abs();
    let report = |name: &str, margin: f64, tol: f64, loc: &str| {
        let mut r = BoundReport::from_candidates(name, params, false, [(margin, 0.0, loc.to_string())]);
        r.tolerance = tol;
        r.pass = margin >= -tol;
        r.series = vec![
            point("chi", Estimate::exact(chi)),
            point("bubble", Estimate::exact(b)),
            point("dchi/dlambda", Estimate::exact(dl)),
            point("-dchi/ddelta", Estimate::exact(md)),
        ];
        r
    };
    let lower1 = 4.0 * d * chi * chi - 4.0 * d * b * chi - 2.0 * d * lambda * b * dl - 8.0 * d * delta * b * md;
    let lower2 = 2.0 * chi * chi - 2.0 * b * chi - lambda * b * dl - 4.0 * delta * b * md;
    Ok(vec![
        report("di1_upper", 4.0 * d * chi * chi - dl, el + rel(dl), "4d chi^2 >= dchi/dlambda"),
        report(
            "di1_lower",
            dl - lower1,
            el * (1.0 + 2.0 * d * lambda * b) + ed * 8.0 * d * delta * b + rel(dl),
            "dchi/dlambda >= lower bound",
        ),
        report("di2_upper", 2.0 * chi * chi - md, ed + rel(md), "2 chi^2 >= -dchi/ddelta"),
        report(
            "di2_lower",
            md - lower2,
            el * lambda * b + ed * (1.0 + 4.0 * delta * b) + rel(md),
            "-dchi/ddelta >= lower bound",
        ),
    ])
}

/// `−∂(χ⁻¹)/∂λ ≤ 4d` and `∂(χ⁻¹)/∂δ ≤ 2`.
pub fn check_derivative_bounds(
    spec: &TorusSpec,
    beta: f64,
    lambda: f64,
    delta: f64,
    step: f64,
) -> Result<Vec<BoundReport>> {
    let p = chi_partials(spec, beta, lambda, delta, step)?;
    let params = Params::new(spec, beta, lambda, delta);
    let d = spec.d as f64;
    let mk = |name: &str, bound: f64, v: f64, err: f64, loc: &str| {
        let margin = bound - v;
        let mut r = BoundReport::from_candidates(name, params, false, [(margin, 0.0, loc.to_string())]);
        r.tolerance = err + DERIVATIVE_REL_TOL * v.abs();
        r.pass = margin >= -r.tolerance;
        r.series = vec![point("chi", Estimate::exact(p.chi)), point(loc, Estimate::exact(v))];
        r
    };
    Ok(vec![
        mk("inverse_chi_lambda", 4.0 * d, -p.dinv_dlambda.value, p.dinv_dlambda.error, "-d(1/chi)/dlambda"),
        mk("inverse_chi_delta", 2.0, p.dinv_ddelta.value, p.dinv_ddelta.error, "d(1/chi)/ddelta"),
    ])
}

/// χ along a λ grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scan {
    pub rows: Vec<(f64, Estimate)>,
    pub report: BoundReport,
}

/// χ on a sorted λ grid, checked to be nondecreasing. Each row is either exact
/// or an independent Monte Carlo estimate; consecutive differences get the
/// combined error bar.
pub fn scan_report(spec: &TorusSpec, beta: f64, delta: f64, rows: Vec<(f64, Estimate)>) -> Result<Scan> {
    if rows.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(invalid("lambda grid", "must be strictly ascending"));
    }
    let statistical = rows.iter().any(|(_, e)| e.se > 0.0);
    let cands: Vec<_> = rows
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0].1, &w[1].1);
            (
                b.mean - a.mean,
                (a.se * a.se + b.se * b.se).sqrt(),
                format!("lambda={}->{}", w[0].0, w[1].0),
            )
        })
        .collect();
    let lambda = rows.first().map_or(f64::NAN, |r| r.0);
    let mut report = BoundReport::from_candidates(
        "chi_monotone",
        Params::new(spec, beta, lambda, delta),
        statistical,
        cands,
    );
    report.series = rows
        .iter()
        .map(|(l, e)| point(&format!("chi(lambda={l})"), *e))
        .collect();
    Ok(Scan { rows, report })
}

/// [`scan_report`] with exact χ from dense diagonalization.
pub fn scan_susceptibility(spec: &TorusSpec, beta: f64, delta: f64, lambdas: &[f64]) -> Result<Scan> {
    let rows = lambdas
        .iter()
        .map(|&l| {
            let chi = SpectralDecomposition::new(spec, l, delta, 0.0)?.susceptibility_exact(beta)?;
            Ok((l, Estimate::exact(chi)))
        })
        .collect::<Result<Vec<_>>>()?;
    scan_report(spec, beta, delta, rows)
}
