//! Experiment pipelines: chain driving, exact and Monte Carlo evaluation,
//! checks, and the artifact directory.
//!
//! Every run writes `scalars.json`, `schwinger.csv`, `chat.csv`,
//! `verify.json` and `manifest.json`, plus plot tables for the checks that
//! ran: `bound_curve/k<index>.csv`, `scan.csv` and `zratio_white.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Check, ExperimentConfig, JMaxPolicy};
use crate::ed::sectors::{exact_points, SymmetryTables, MAX_SECTOR_SITES};
use crate::ed::{ChatTable, SpectralDecomposition, MAX_DENSE_SITES};
use crate::error::{domain, invalid, Result};
use crate::hfunctions::StepFunction;
use crate::lattice::{lhat, TorusSpec};
use crate::observables::{
    bound48, bound_sharp, bubble_estimate, chat_table, ir_tail_bound, mean_flip_density, schwinger_estimate,
    susceptibility_estimate, zeta_estimate, zratio_estimate, choose_j_max, Measurements, ObservableConfig,
    Recorder,
};
use crate::sampler::{ChainState, MoveKind, SamplerParams};
use crate::stats::{integrated_autocorr_time, Estimate};
use crate::verify::{
    check_derivative_bounds, check_diff_inequalities, check_duhamel_bound, check_flip_domination,
    check_gaussian_domination, check_infrared, check_white_limit, domination_functions, scan_report,
    scan_susceptibility, white_functions, BoundReport, ChatSource, ZSource,
};

/// Burn-in multiple of the energy autocorrelation time.
pub const BURN_IN_TAUS: f64 = 10.0;
/// Frequency cutoff of the pilot run that picks `J_max`.
pub const PILOT_J: usize = 64;

/// What a run does; each maps to a CLI subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sample,
    Ed,
    VerifyIrb,
    VerifyDi,
    GaussDom,
    Scan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Ed,
    Mc,
}

impl Command {
    pub fn default_source(self) -> Source {
        match self {
            Command::Sample => Source::Mc,
            _ => Source::Ed,
        }
    }

    fn checks(self, cfg: &ExperimentConfig) -> Vec<Check> {
        match self {
            Command::Sample | Command::Ed => cfg.verify.checks.clone(),
            Command::VerifyIrb => vec![Check::Infrared, Check::Duhamel],
            Command::VerifyDi => vec![Check::DiffInequalities, Check::DerivativeBounds],
            Command::GaussDom => vec![Check::GaussianDomination, Check::WhiteLimit],
            Command::Scan => vec![Check::Scan],
        }
    }
}

/// Per-chain bookkeeping reported in `scalars.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSummary {
    pub seed: u64,
    pub stream: u64,
    pub burn_in: u64,
    /// Energy autocorrelation time from the burn-in pilot, in sweeps.
    pub tau_energy: Option<f64>,
    pub samples: u64,
    pub acceptance: BTreeMap<String, f64>,
}

/// Run one chain: burn-in, then `sweeps` sweeps recording every `thinning`-th.
///
/// Without an explicit burn-in a pilot of `clamp(sweeps/10, 200, 20000)`
/// sweeps estimates the energy autocorrelation time `τ`, and
/// `max(pilot, 10τ)` sweeps are discarded.
pub fn run_chain(
    spec: &TorusSpec,
    params: &SamplerParams,
    obs: &ObservableConfig,
    stream: u64,
) -> Result<(Measurements, ChainSummary)> {
    params.validate()?;
    let mut st = ChainState::new(spec, params, stream)?;
    let (burn_in, tau) = match params.burn_in {
        Some(b) => {
            for _ in 0..b {
                st.sweep(params);
            }
            (b, None)
        }
        None => {
            let edges = spec.edges();
            let pilot = (params.sweeps / 10).clamp(200, 20_000);
            let mut energy = Vec::with_capacity(pilot as usize);
            for _ in 0..pilot {
                st.sweep(params);
                energy.push(edges.iter().map(|&(x, y)| st.config.overlap_integral(x, y)).sum::<f64>());
            }
            let tau = integrated_autocorr_time(&energy[energy.len() / 2..]);
            let burn = pilot.max((BURN_IN_TAUS * tau).ceil() as u64);
            for _ in pilot..burn {
                st.sweep(params);
            }
            (burn, Some(tau))
        }
    };
    let mut rec = Recorder::new(spec, params.beta, params.delta, obs.clone(), stream);
    for i in 0..params.sweeps {
        st.sweep(params);
        if (i + 1) % params.thinning == 0 {
            rec.record(&st.config);
        }
    }
    let acceptance = [
        ("flip", MoveKind::LineFlip),
        ("insert", MoveKind::Insert),
        ("delete", MoveKind::Delete),
        ("shift", MoveKind::Shift),
    ]
    .into_iter()
    .map(|(n, k)| (n.to_string(), st.stats.acceptance(k)))
    .collect();
    let m = rec.into_measurements();
    let summary = ChainSummary {
        seed: params.seed,
        stream,
        burn_in,
        tau_energy: tau,
        samples: m.n_samples(),
        acceptance,
    };
    Ok((m, summary))
}

/// Concurrent chains allowed by `TFIM_THREADS`, else the available cores.
pub fn thread_limit() -> Result<usize> {
    match std::env::var("TFIM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(invalid("TFIM_THREADS", format!("must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// One chain per parameter set, stream `i` for entry `i`, at most `threads`
/// at a time. Results come back in input order, so they do not depend on
/// scheduling.
pub fn run_chains(
    spec: &TorusSpec,
    params: &[SamplerParams],
    obs: &ObservableConfig,
    threads: usize,
) -> Result<(Measurements, Vec<ChainSummary>)> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<(Measurements, ChainSummary)>>>> =
        Mutex::new((0..params.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, params.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= params.len() {
                    break;
                }
                let r = run_chain(spec, &params[i], obs, i as u64);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut parts = Vec::new();
    let mut summaries = Vec::new();
    for r in slots.into_inner().unwrap() {
        let (m, s) = r.expect("every chain ran")?;
        parts.push(m);
        summaries.push(s);
    }
    Ok((Measurements::merge_all(parts)?, summaries))
}

/// Exact results at the model point.
pub struct ExactCore {
    /// Present when the torus is small enough for the dense oracle.
    pub dense: Option<SpectralDecomposition>,
    pub table: ChatTable,
    pub bubble: f64,
    pub bubble_err: f64,
    pub method: &'static str,
}

impl ExactCore {
    pub fn compute(cfg: &ExperimentConfig) -> Result<Self> {
        let spec = cfg.spec()?;
        let m = &cfg.model;
        let n = spec.n_sites();
        if n <= MAX_DENSE_SITES {
            let s = SpectralDecomposition::new(&spec, m.lambda, m.delta, 0.0)?;
            let (bubble, bubble_err) = s.bubble_with_error(m.beta);
            let j = resolve_j_exact(cfg, &spec, bubble);
            let table = s.chat_table(m.beta, j)?;
            Ok(ExactCore {
                dense: Some(s),
                table,
                bubble,
                bubble_err,
                method: "dense",
            })
        } else if n <= MAX_SECTOR_SITES {
            let tables = SymmetryTables::new(&spec)?;
            let j = match cfg.observables.j_max {
                JMaxPolicy::Fixed(j) => j,
                JMaxPolicy::Auto => {
                    // the bubble diagram does not depend on the truncation
                    let p = exact_points(&tables, &[(m.lambda, m.delta)], &[m.beta], 1)?;
                    resolve_j_exact(cfg, &spec, p[0].bubble)
                }
            };
            let p = exact_points(&tables, &[(m.lambda, m.delta)], &[m.beta], j)?.remove(0);
            Ok(ExactCore {
                dense: None,
                table: p.table,
                bubble: p.bubble,
                bubble_err: p.bubble_err,
                method: "sectors",
            })
        } else {
            Err(domain(format!(
                "exact diagonalization supports at most {MAX_SECTOR_SITES} sites, the torus has {n}"
            )))
        }
    }

    fn dense(&self) -> Result<&SpectralDecomposition> {
        self.dense
            .as_ref()
            .ok_or_else(|| domain(format!("this check needs the dense oracle (at most {MAX_DENSE_SITES} sites)")))
    }
}

fn resolve_j_exact(cfg: &ExperimentConfig, spec: &TorusSpec, bubble: f64) -> usize {
    let m = &cfg.model;
    let o = &cfg.observables;
    match o.j_max {
        JMaxPolicy::Fixed(j) => j,
        JMaxPolicy::Auto => choose_j_max(spec, m.beta, m.lambda, m.delta, bubble, o.j_max_rel, o.j_max_cap),
    }
}

/// Monte Carlo results at the model point.
pub struct McCore {
    pub measurements: Measurements,
    pub chains: Vec<ChainSummary>,
    pub j_max: Option<usize>,
}

/// Test functions checked for Gaussian domination: the configured ones
/// selected by `verify.gaussian`, or `W′_{1,2}` and an asymmetric
/// three-piece step when none are configured.
pub fn domination_targets(cfg: &ExperimentConfig) -> Result<Vec<(String, StepFunction)>> {
    let all = cfg.hfunctions()?;
    if all.is_empty() {
        let b = cfg.model.beta;
        return Ok(vec![
            ("W_1_2".to_string(), crate::hfunctions::w_prime(1.0, 2, b)?),
            (
                "tri".to_string(),
                StepFunction::new(b, vec![0.0, b / 4.0, b / 2.0], vec![1.0, -1.0, 0.0])?,
            ),
        ]);
    }
    if cfg.verify.gaussian.is_empty() {
        return Ok(all);
    }
    Ok(all
        .into_iter()
        .filter(|(n, _)| cfg.verify.gaussian.contains(n))
        .collect())
}

/// Observables a Monte Carlo run must record for `checks`.
pub fn observable_config(cfg: &ExperimentConfig, checks: &[Check], j_max: Option<usize>) -> Result<ObservableConfig> {
    let mut hf = cfg.hfunctions()?;
    let mut zeta = cfg.observables.zeta_r.clone();
    let add = |list: Vec<(String, StepFunction)>, hf: &mut Vec<(String, StepFunction)>| {
        for (n, h) in list {
            if !hf.iter().any(|(m, _)| *m == n) {
                hf.push((n, h));
            }
        }
    };
    if checks.contains(&Check::GaussianDomination) {
        for (name, h) in domination_targets(cfg)? {
            zeta.push(h.sup_norm());
            add(domination_functions(&name, &h)?, &mut hf);
        }
    }
    if checks.contains(&Check::WhiteLimit) {
        for &r in &cfg.verify.white_r {
            zeta.push(r);
            add(white_functions(r, &cfg.verify.white_n, cfg.model.beta)?, &mut hf);
        }
    }
    zeta.retain(|r| *r != 0.0);
    let mut seen = Vec::new();
    zeta.retain(|r| {
        let fresh = !seen.contains(r);
        seen.push(*r);
        fresh
    });
    Ok(ObservableConfig {
        time_grid: cfg.observables.time_grid,
        j_max,
        zeta_r: zeta,
        hfunctions: hf,
    })
}

impl McCore {
    pub fn compute(cfg: &ExperimentConfig, checks: &[Check], threads: usize) -> Result<Self> {
        let spec = cfg.spec()?;
        let params: Vec<SamplerParams> = (0..cfg.seeds.len()).map(|i| cfg.sampler_params(i)).collect();
        let j_max = match cfg.observables.j_max {
            JMaxPolicy::Fixed(j) => j,
            JMaxPolicy::Auto => pilot_j_max(cfg, &spec, &params[0])?,
        };
        let obs = observable_config(cfg, checks, Some(j_max))?;
        let (measurements, chains) = run_chains(&spec, &params, &obs, threads)?;
        Ok(McCore {
            measurements,
            chains,
            j_max: Some(j_max),
        })
    }

    /// Bubble diagram from two replica halves (even and odd chains).
    fn bubble(&self, lambda: f64) -> Option<crate::observables::BubbleEstimate> {
        let n = self.chains.len() as u64;
        if n < 2 {
            return None;
        }
        let even: Vec<u64> = (0..n).filter(|i| i % 2 == 0).collect();
        let odd: Vec<u64> = (0..n).filter(|i| i % 2 == 1).collect();
        let m = &self.measurements;
        bubble_estimate(&m.select(&even), &m.select(&odd), lambda).ok()
    }
}

/// `J_max` from a pilot chain: the smallest `J` whose tail bound is below
/// `j_max_rel` times the pilot's Fourier-sum bubble diagram.
fn pilot_j_max(cfg: &ExperimentConfig, spec: &TorusSpec, base: &SamplerParams) -> Result<usize> {
    let mut p = base.clone();
    p.sweeps = (base.sweeps / 20).max(500);
    let obs = ObservableConfig {
        time_grid: 0,
        j_max: Some(PILOT_J),
        zeta_r: Vec::new(),
        hfunctions: Vec::new(),
    };
    let (m, _) = run_chain(spec, &p, &obs, u64::MAX)?;
    let b_hat = chat_table(&m)?.iter().map(|e| e.mean * e.mean).sum::<f64>() / (m.beta * spec.n_sites() as f64);
    let o = &cfg.observables;
    Ok(choose_j_max(spec, m.beta, cfg.model.lambda, m.delta, b_hat, o.j_max_rel, o.j_max_cap))
}

enum Core {
    Exact(ExactCore),
    Mc(McCore),
}

/// Outcome of [`run`].
#[derive(Debug)]
pub struct RunOutcome {
    pub reports: Vec<BoundReport>,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        crate::verify::all_pass(&self.reports)
    }
}

/// Run `command` on `cfg` with ĉ, `Z(h)` and χ taken from `source`, and write
/// the artifact directory `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig, command: Command, source: Source) -> Result<RunOutcome> {
    cfg.validate()?;
    let checks = command.checks(cfg);
    if command == Command::Sample && source == Source::Ed {
        return Err(invalid("source", "`sample` draws Monte Carlo samples; use `ed` for exact results"));
    }
    if source == Source::Ed && checks.contains(&Check::FlipDomination) {
        return Err(invalid("verify.checks", "flip_domination needs Monte Carlo samples; use --mc"));
    }
    if source == Source::Mc && command == Command::VerifyDi {
        return Err(invalid("source", "the differential inequalities are checked on exact data only; use --ed"));
    }
    let threads = thread_limit()?;
    let spec = cfg.spec()?;
    let m = cfg.model;
    let core = match source {
        Source::Ed => Core::Exact(ExactCore::compute(cfg)?),
        Source::Mc => Core::Mc(McCore::compute(cfg, &checks, threads)?),
    };

    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)?;
    let mut reports = Vec::new();
    let chat_src = match &core {
        Core::Exact(e) => ChatSource::Exact(&e.table),
        Core::Mc(c) => ChatSource::Mc(&c.measurements),
    };
    for check in &checks {
        match check {
            Check::Infrared => {
                let r = check_infrared(&chat_src, m.lambda, m.delta)?;
                write_bound_curves(&out, &spec, &chat_src, m.lambda, m.delta)?;
                reports.extend(r);
            }
            Check::Duhamel => reports.push(check_duhamel_bound(&chat_src, m.lambda, m.delta)?),
            Check::FlipDomination => {
                if let Core::Mc(c) = &core {
                    reports.push(check_flip_domination(&c.measurements, m.lambda));
                }
            }
            Check::GaussianDomination => {
                let zs = zsource(&core)?;
                for (name, h) in domination_targets(cfg)? {
                    reports.extend(check_gaussian_domination(&zs, &name, &h, m.lambda)?);
                }
            }
            Check::WhiteLimit => {
                let zs = zsource(&core)?;
                let mut rows = Vec::new();
                for &r in &cfg.verify.white_r {
                    reports.push(check_white_limit(&zs, r, &cfg.verify.white_n, m.beta, m.lambda)?);
                    rows.extend(white_rows(&zs, r, &cfg.verify.white_n, m.beta)?);
                }
                write_csv(&out.join("zratio_white.csv"), &rows)?;
            }
            Check::DiffInequalities => {
                reports.extend(check_diff_inequalities(&spec, m.beta, m.lambda, m.delta, cfg.verify.fd_step)?)
            }
            Check::DerivativeBounds => {
                reports.extend(check_derivative_bounds(&spec, m.beta, m.lambda, m.delta, cfg.verify.fd_step)?)
            }
            Check::Scan => {
                let scan = match source {
                    Source::Ed => scan_susceptibility(&spec, m.beta, m.delta, &cfg.verify.scan_lambdas)?,
                    Source::Mc => {
                        let mut rows = Vec::new();
                        for &l in &cfg.verify.scan_lambdas {
                            let mut c = cfg.clone();
                            c.model.lambda = l;
                            let params: Vec<SamplerParams> = (0..c.seeds.len()).map(|i| c.sampler_params(i)).collect();
                            let obs = ObservableConfig {
                                time_grid: 0,
                                ..ObservableConfig::default()
                            };
                            let (mm, _) = run_chains(&spec, &params, &obs, threads)?;
                            rows.push((l, susceptibility_estimate(&mm)));
                        }
                        scan_report(&spec, m.beta, m.delta, rows)?
                    }
                };
                let rows: Vec<ScanRow> = scan
                    .rows
                    .iter()
                    .map(|(l, e)| ScanRow {
                        lambda: *l,
                        chi: e.mean,
                    })
                    .collect();
                write_csv(&out.join("scan.csv"), &rows)?;
                reports.push(scan.report);
            }
        }
    }

    write_scalars(&out, cfg, &core)?;
    write_schwinger(&out, cfg, &core)?;
    write_chat(&out, &spec, &chat_src)?;
    fs::write(out.join("verify.json"), serde_json::to_string_pretty(&reports)? + "\n")?;
    let manifest = json!({
        "tool": "tfim",
        "version": env!("CARGO_PKG_VERSION"),
        "git_hash": env!("TFIM_GIT_HASH"),
        "command": command,
        "source": source,
        "checks": checks,
        "seeds": cfg.seeds,
        "j_max": match &core {
            Core::Exact(e) => Some(e.table.jmax),
            Core::Mc(c) => c.j_max,
        },
        "config": cfg,
    });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunOutcome { reports, out_dir: out })
}

fn zsource(core: &Core) -> Result<ZSource<'_>> {
    match core {
        Core::Exact(e) => Ok(ZSource::Exact(e.dense()?)),
        Core::Mc(c) => Ok(ZSource::Mc(&c.measurements)),
    }
}

#[derive(Serialize)]
struct ScanRow {
    lambda: f64,
    chi: f64,
}

#[derive(Serialize)]
struct WhiteRow {
    r: f64,
    n: u32,
    zratio: f64,
    zratio_se: f64,
    zeta: f64,
    zeta_se: f64,
}

fn white_rows(zs: &ZSource, r: f64, ns: &[u32], beta: f64) -> Result<Vec<WhiteRow>> {
    let funcs = white_functions(r, ns, beta)?;
    let mut rows = Vec::new();
    for (&n, (name, h)) in ns.iter().zip(&funcs) {
        let (z, zeta) = match zs {
            ZSource::Exact(s) => (
                Estimate::exact(s.zratio_exact(beta, h)?),
                Estimate::exact(crate::ed::zeta_exact(s.spec(), beta, s.lambda, s.delta, r)?),
            ),
            ZSource::Mc(m) => (zratio_estimate(m, name)?, zeta_estimate(m, r)?),
        };
        rows.push(WhiteRow {
            r,
            n,
            zratio: z.mean,
            zratio_se: z.se,
            zeta: zeta.mean,
            zeta_se: zeta.se,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct CurveRow {
    l: f64,
    chat: f64,
    bound48: f64,
    bound_sharp: f64,
}

/// One file per momentum with `2·J_max + 1` rows along `l`.
fn write_bound_curves(out: &Path, spec: &TorusSpec, src: &ChatSource, lambda: f64, delta: f64) -> Result<()> {
    let dir = out.join("bound_curve");
    fs::create_dir_all(&dir)?;
    let (beta, jmax, values) = chat_grid(src)?;
    for k in 0..spec.n_sites() {
        let lh = lhat(&spec.momentum(k));
        let rows: Vec<CurveRow> = (-jmax..=jmax)
            .map(|j| {
                let l = 2.0 * std::f64::consts::PI * j as f64 / beta;
                CurveRow {
                    l,
                    chat: values[k][(j + jmax) as usize].mean,
                    bound48: bound48(lambda, delta, lh, l),
                    bound_sharp: bound_sharp(lambda, delta, lh, l),
                }
            })
            .collect();
        write_csv(&dir.join(format!("k{k}.csv")), &rows)?;
    }
    Ok(())
}

/// `(β, J, values[k][j + J])` of a ĉ source.
fn chat_grid(src: &ChatSource) -> Result<(f64, i64, Vec<Vec<Estimate>>)> {
    match src {
        ChatSource::Exact(t) => Ok((
            t.beta,
            t.jmax as i64,
            t.values
                .iter()
                .map(|row| row.iter().map(|&v| Estimate::exact(v)).collect())
                .collect(),
        )),
        ChatSource::Mc(m) => {
            let jm = m.j_max().ok_or_else(|| domain("ĉ was not recorded"))?;
            let width = 2 * jm + 1;
            let t = chat_table(m)?;
            Ok((m.beta, jm as i64, t.chunks(width).map(|c| c.to_vec()).collect()))
        }
    }
}

#[derive(Serialize)]
struct ChatRow {
    k: usize,
    lhat: f64,
    j: i64,
    l: f64,
    chat: f64,
    se: f64,
}

fn write_chat(out: &Path, spec: &TorusSpec, src: &ChatSource) -> Result<()> {
    let (beta, jmax, values) = chat_grid(src)?;
    let mut rows = Vec::new();
    for (k, row) in values.iter().enumerate() {
        let lh = lhat(&spec.momentum(k));
        for j in -jmax..=jmax {
            let e = row[(j + jmax) as usize];
            rows.push(ChatRow {
                k,
                lhat: lh,
                j,
                l: 2.0 * std::f64::consts::PI * j as f64 / beta,
                chat: e.mean,
                se: e.se,
            });
        }
    }
    write_csv(&out.join("chat.csv"), &rows)
}

#[derive(Serialize)]
struct SchwingerRow {
    x: usize,
    t: f64,
    value: f64,
    se: f64,
}

/// `c(x, t)` on the configured time grid. The sector oracle does not
/// produce it, so that case writes the header only.
fn write_schwinger(out: &Path, cfg: &ExperimentConfig, core: &Core) -> Result<()> {
    let nt = cfg.observables.time_grid;
    let beta = cfg.model.beta;
    let n = cfg.spec()?.n_sites();
    let mut rows = Vec::new();
    for x in 0..n {
        for i in 0..nt {
            let t = i as f64 * beta / nt as f64;
            let e = match core {
                Core::Exact(e) => match &e.dense {
                    Some(s) => Estimate::exact(s.schwinger_exact(beta, 0, x, t)?),
                    None => continue,
                },
                Core::Mc(c) => schwinger_estimate(&c.measurements, x, t)?,
            };
            rows.push(SchwingerRow { x, t, value: e.mean, se: e.se });
        }
    }
    if rows.is_empty() {
        fs::write(out.join("schwinger.csv"), "x,t,value,se\n")?;
        return Ok(());
    }
    write_csv(&out.join("schwinger.csv"), &rows)
}

fn write_scalars(out: &Path, cfg: &ExperimentConfig, core: &Core) -> Result<()> {
    let spec = cfg.spec()?;
    let m = &cfg.model;
    let est = |e: Estimate| json!({"mean": e.mean, "se": e.se});
    let v: Value = match core {
        Core::Exact(e) => {
            let mut v = json!({
                "method": e.method,
                "chi": e.table.get(0, 0),
                "bubble": e.bubble,
                "bubble_quadrature_error": e.bubble_err,
                "bubble_fourier": e.table.fourier_bubble(),
                "ir_tail_bound": ir_tail_bound(&spec, m.beta, m.lambda, m.delta, e.table.jmax),
                "j_max": e.table.jmax,
                "chat_max_imaginary": e.table.max_imag,
            });
            if let Some(s) = &e.dense {
                let eq: Vec<f64> = (0..spec.n_sites())
                    .map(|x| s.schwinger_exact(m.beta, 0, x, 0.0))
                    .collect::<Result<_>>()?;
                v["log_partition"] = json!(s.log_partition(m.beta));
                v["equal_time"] = json!(eq);
            }
            v
        }
        Core::Mc(c) => {
            let mm = &c.measurements;
            let mut z = serde_json::Map::new();
            for (name, _) in &mm.config.hfunctions {
                z.insert(name.clone(), est(zratio_estimate(mm, name)?));
            }
            let mut zeta = serde_json::Map::new();
            for &r in &mm.config.zeta_r {
                zeta.insert(r.to_string(), est(zeta_estimate(mm, r)?));
            }
            let eq: Vec<Value> = (0..spec.n_sites())
                .map(|x| mm.equal_time_correlation(x).map(est))
                .collect::<Result<_>>()?;
            let bubble = c.bubble(m.lambda).map(|b| json!({"mean": b.mean, "se": b.se, "tail": b.tail}));
            json!({
                "method": "monte_carlo",
                "samples": mm.n_samples(),
                "chi": est(susceptibility_estimate(mm)),
                "flip_density": est(mean_flip_density(mm)),
                "interaction": est(mm.interaction_estimate()),
                "equal_time": eq,
                "bubble": bubble,
                "zratio": z,
                "zeta": zeta,
                "j_max": c.j_max,
                "chains": c.chains,
            })
        }
    };
    fs::write(out.join("scalars.json"), serde_json::to_string_pretty(&v)? + "\n")?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
