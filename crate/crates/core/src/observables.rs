//! Monte Carlo estimators built from sampled worldline configurations.
//!
//! A [`Recorder`] turns each configuration into a fixed set of per-sample
//! statistics and feeds them to [`Accumulator`]s, one stream per chain.
//! Recorders from different chains merge into one [`Measurements`] value that
//! the estimator functions read.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::hfunctions::{zh_log_weight, StepFunction};
use crate::lattice::{lhat, Momentum, TorusSpec};
use crate::stats::{Accumulator, Estimate};
use crate::worldlines::{product_integral, WorldlineConfig};

/// A space–time Fourier index `(k, l = 2πj/β)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FourierIndex {
    pub k: Momentum,
    pub j: i64,
}

/// Which statistics to record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct ObservableConfig {
    /// Points of the uniform time grid for `c(x,t)`; 0 disables.
    pub time_grid: usize,
    /// Frequency truncation for `ĉ(k,l)`; `None` disables the table.
    pub j_max: Option<usize>,
    pub zeta_r: Vec<f64>,
    /// Named weak derivatives for `Z(h)/Z(0)`.
    pub hfunctions: Vec<(String, StepFunction)>,
}


/// Index of the fixed scalar slots.
const CHI: usize = 0;
const FLIPS: usize = 1;
const ENERGY: usize = 2;
const N_FIXED: usize = 3;

/// Per-chain recorder.
#[derive(Clone, Debug)]
pub struct Recorder {
    spec: TorusSpec,
    beta: f64,
    delta: f64,
    config: ObservableConfig,
    stream: u64,
    /// `e^{2πi r/side}` with exact conjugate symmetry.
    phases: Vec<Complex64>,
    scalars: Accumulator,
    chat: Option<Accumulator>,
    schwinger: Option<Accumulator>,
    edges: Vec<(usize, usize)>,
    /// `add_table[y][x] = y + x`.
    add_table: Vec<Vec<usize>>,
    scratch: Vec<f64>,
}

/// Merged results of one or more recorders.
#[derive(Clone, Debug)]
pub struct Measurements {
    pub spec: TorusSpec,
    pub beta: f64,
    pub delta: f64,
    pub config: ObservableConfig,
    pub scalars: Accumulator,
    pub chat: Option<Accumulator>,
    pub schwinger: Option<Accumulator>,
}

fn phase_table(side: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(1.0, 0.0); side];
    for r in 1..side {
        if 2 * r < side {
            t[r] = Complex64::from_polar(1.0, 2.0 * PI * r as f64 / side as f64);
        } else if 2 * r == side {
            t[r] = Complex64::new(-1.0, 0.0);
        } else {
            t[r] = t[side - r].conj();
        }
    }
    t
}

impl Recorder {
    pub fn new(spec: &TorusSpec, beta: f64, delta: f64, config: ObservableConfig, stream: u64) -> Self {
        let n = spec.n_sites();
        let n_scalar = N_FIXED + config.zeta_r.len() + config.hfunctions.len() + n;
        let chat = config.j_max.map(|j| Accumulator::new(n * (2 * j + 1)));
        let schwinger = (config.time_grid > 0).then(|| Accumulator::new(n * config.time_grid));
        let add_table = (0..n)
            .map(|y| (0..n).map(|x| spec.add(y, x)).collect())
            .collect();
        Recorder {
            spec: *spec,
            beta,
            delta,
            stream,
            phases: phase_table(spec.side),
            scalars: Accumulator::new(n_scalar),
            chat,
            schwinger,
            edges: spec.edges(),
            add_table,
            scratch: vec![0.0; n_scalar],
            config,
        }
    }

    /// Per-site `∫σ(x,t)e^{ilt}dt` for `j = 0..=jmax`, from the flip times.
    fn time_transforms(&self, cfg: &WorldlineConfig, jmax: usize) -> Vec<Vec<Complex64>> {
        let beta = self.beta;
        let w0 = 2.0 * PI / beta;
        cfg.flips
            .iter()
            .enumerate()
            .map(|(x, flips)| {
                let mut out = vec![Complex64::new(0.0, 0.0); jmax + 1];
                let mut s = cfg.base_sign(x);
                let mut a = 0.0;
                let mut t0 = 0.0;
                for &t in flips {
                    t0 += s * (t - a);
                    a = t;
                    s = -s;
                    // jump Δσ = 2·(value after)
                    let jump = 2.0 * s;
                    let step = Complex64::from_polar(1.0, w0 * t);
                    let mut e = step;
                    for o in out.iter_mut().skip(1) {
                        *o += jump * e;
                        e *= step;
                    }
                }
                t0 += s * (beta - a);
                out[0] = Complex64::new(t0, 0.0);
                for (j, o) in out.iter_mut().enumerate().skip(1) {
                    // (i/l) Σ Δσ e^{ilt}
                    *o *= Complex64::new(0.0, 1.0 / (w0 * j as f64));
                }
                out
            })
            .collect()
    }

    pub fn record(&mut self, cfg: &WorldlineConfig) {
        let n = self.spec.n_sites();
        let norm = self.beta * n as f64;
        let jmax = self.config.j_max.unwrap_or(0);
        let tt = self.time_transforms(cfg, jmax);

        // spatial transform for every k and j ≥ 0; j < 0 by conjugation
        let nj = 2 * jmax + 1;
        let mut chat_row = vec![0.0; if self.chat.is_some() { n * nj } else { 0 }];
        let grid = self.spec.momentum_grid();
        let mut chi = 0.0;
        for (ki, k) in grid.iter().enumerate() {
            if self.chat.is_none() && ki > 0 {
                break;
            }
            let ph: Vec<Complex64> = (0..n).map(|x| self.phases[k.phase_units(&self.spec, x)]).collect();
            let jtop = if self.chat.is_some() { jmax } else { 0 };
            for j in 0..=jtop {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..n {
                    acc += ph[x] * tt[x][j];
                }
                let v = acc.norm_sqr() / norm;
                if ki == 0 && j == 0 {
                    chi = v;
                }
                if self.chat.is_some() {
                    chat_row[ki * nj + jmax + j] = v;
                    // ĉ(−k,−l) = ĉ(k,l)
                    let kneg = k.neg().index();
                    chat_row[kneg * nj + jmax - j] = v;
                }
            }
        }

        let s = &mut self.scratch;
        s[CHI] = chi;
        let total_flips = cfg.total_flip_count();
        s[FLIPS] = total_flips as f64 / n as f64;
        s[ENERGY] = self
            .edges
            .iter()
            .map(|&(x, y)| cfg.overlap_integral(x, y))
            .sum::<f64>();
        let mut slot = N_FIXED;
        for &r in &self.config.zeta_r {
            s[slot] = (r / self.delta).cosh().powi(total_flips as i32);
            slot += 1;
        }
        for (_, h) in &self.config.hfunctions {
            s[slot] = zh_log_weight(cfg, h, self.delta).exp();
            slot += 1;
        }
        // equal-time correlation by displacement
        for x in 0..n {
            let mut acc = 0.0;
            for y in 0..n {
                acc += cfg.overlap_integral(y, self.add_table[y][x]);
            }
            s[slot + x] = acc / norm;
        }
        self.scalars.push(self.stream, &self.scratch);

        if let Some(acc) = &mut self.chat {
            acc.push(self.stream, &chat_row);
        }
        if self.schwinger.is_some() {
            let row = self.schwinger_row(cfg);
            self.schwinger.as_mut().unwrap().push(self.stream, &row);
        }
    }

    /// `c(x, t_i)` estimates: `(1/(β|Λ|)) Σ_y ∫ σ(y,s) σ(y+x, s+t_i) ds`.
    fn schwinger_row(&self, cfg: &WorldlineConfig) -> Vec<f64> {
        let n = self.spec.n_sites();
        let nt = self.config.time_grid;
        let norm = self.beta * n as f64;
        let mut row = vec![0.0; n * nt];
        for ti in 0..nt {
            let t = ti as f64 * self.beta / nt as f64;
            let shifted: Vec<(Vec<f64>, f64)> = (0..n).map(|z| cfg.shifted_flips(z, t)).collect();
            for x in 0..n {
                let mut acc = 0.0;
                for y in 0..n {
                    let (fz, sz) = &shifted[self.add_table[y][x]];
                    acc += product_integral(cfg.base_sign(y) * sz, &cfg.flips[y], fz, 0.0, self.beta);
                }
                row[x * nt + ti] = acc / norm;
            }
        }
        row
    }

    pub fn into_measurements(self) -> Measurements {
        Measurements {
            spec: self.spec,
            beta: self.beta,
            delta: self.delta,
            config: self.config,
            scalars: self.scalars,
            chat: self.chat,
            schwinger: self.schwinger,
        }
    }
}

impl Measurements {
    /// Merge measurements from independent chains.
    pub fn merge(&mut self, other: &Measurements) -> Result<()> {
        if self.spec != other.spec || self.config != other.config || self.beta != other.beta {
            return Err(domain("measurements from different setups"));
        }
        self.scalars.merge(&other.scalars)?;
        if let (Some(a), Some(b)) = (&mut self.chat, &other.chat) {
            a.merge(b)?;
        }
        if let (Some(a), Some(b)) = (&mut self.schwinger, &other.schwinger) {
            a.merge(b)?;
        }
        Ok(())
    }

    pub fn merge_all(parts: Vec<Measurements>) -> Result<Measurements> {
        let mut it = parts.into_iter();
        let mut m = it.next().ok_or_else(|| domain("no measurements to merge"))?;
        for p in it {
            m.merge(&p)?;
        }
        Ok(m)
    }

    /// Restriction to a subset of chains.
    pub fn select(&self, streams: &[u64]) -> Measurements {
        Measurements {
            spec: self.spec,
            beta: self.beta,
            delta: self.delta,
            config: self.config.clone(),
            scalars: self.scalars.select(streams),
            chat: self.chat.as_ref().map(|a| a.select(streams)),
            schwinger: self.schwinger.as_ref().map(|a| a.select(streams)),
        }
    }

    pub fn n_samples(&self) -> u64 {
        self.scalars.count()
    }

    fn zeta_slot(&self, r: f64) -> Result<usize> {
        self.config
            .zeta_r
            .iter()
            .position(|&v| v == r)
            .map(|i| N_FIXED + i)
            .ok_or_else(|| domain(format!("zeta({r}) was not recorded")))
    }

    fn hfun_slot(&self, name: &str) -> Result<usize> {
        self.config
            .hfunctions
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| N_FIXED + self.config.zeta_r.len() + i)
            .ok_or_else(|| domain(format!("h-function `{name}` was not recorded")))
    }

    fn corr_slot(&self, x: usize) -> usize {
        N_FIXED + self.config.zeta_r.len() + self.config.hfunctions.len() + x
    }

    /// Estimate of `Σ_i w_i s_i` over scalar slots given as `(slot, weight)`.
    fn scalar_combination(&self, terms: &[(usize, f64)]) -> Estimate {
        let mut w = vec![0.0; self.scalars.dim()];
        for &(i, c) in terms {
            w[i] += c;
        }
        self.scalars.projected(&w)
    }

    /// Mean energy integral `Σ_{x∼y} ∫σσ`.
    pub fn interaction_estimate(&self) -> Estimate {
        self.scalars.estimate(ENERGY)
    }

    /// `zratio(a) − zratio(b)` with a paired error bar.
    pub fn zratio_difference(&self, a: &str, b: &str) -> Result<Estimate> {
        Ok(self.scalar_combination(&[(self.hfun_slot(a)?, 1.0), (self.hfun_slot(b)?, -1.0)]))
    }

    /// `zratio(h) − ζ(r)` with a paired error bar.
    pub fn zratio_minus_zeta(&self, h: &str, r: f64) -> Result<Estimate> {
        Ok(self.scalar_combination(&[(self.hfun_slot(h)?, 1.0), (self.zeta_slot(r)?, -1.0)]))
    }

    /// Equal-time correlation `c(x, 0)` from exact overlap integrals.
    pub fn equal_time_correlation(&self, x: usize) -> Result<Estimate> {
        if x >= self.spec.n_sites() {
            return Err(domain("displacement out of range"));
        }
        Ok(self.scalars.estimate(self.corr_slot(x)))
    }

    /// Frequency index range recorded for `ĉ`.
    pub fn j_max(&self) -> Option<usize> {
        self.config.j_max
    }

    /// Flattened position of `(k, j)` in the `ĉ` table.
    pub fn chat_slot(&self, k: &Momentum, j: i64) -> Result<usize> {
        let jmax = self.config.j_max.ok_or_else(|| domain("ĉ was not recorded"))? as i64;
        if j.abs() > jmax {
            return Err(domain(format!("|j| = {} exceeds J_max = {jmax}", j.abs())));
        }
        Ok(k.index() * (2 * jmax as usize + 1) + (j + jmax) as usize)
    }
}

/// `c(x,t)` at a displacement `x` and a time on the configured grid.
pub fn schwinger_estimate(m: &Measurements, x: usize, t: f64) -> Result<Estimate> {
    let acc = m
        .schwinger
        .as_ref()
        .ok_or_else(|| domain("Schwinger function was not recorded"))?;
    let nt = m.config.time_grid;
    let pos = t * nt as f64 / m.beta;
    let ti = pos.round();
    if (pos - ti).abs() > 1e-9 || ti < 0.0 || ti as usize >= nt {
        return Err(domain(format!("t = {t} is not on the {nt}-point grid")));
    }
    if x >= m.spec.n_sites() {
        return Err(domain("displacement out of range"));
    }
    Ok(acc.estimate(x * nt + ti as usize))
}

/// `ĉ(k,l) = μ[|σ̂(k,l)|²]/(β|Λ|)`.
pub fn chat_estimate(m: &Measurements, idx: &FourierIndex) -> Result<Estimate> {
    if idx.k.is_zero() && idx.j == 0 {
        return Ok(susceptibility_estimate(m));
    }
    let slot = m.chat_slot(&idx.k, idx.j)?;
    Ok(m.chat.as_ref().unwrap().estimate(slot))
}

/// All `ĉ` estimates, indexed like [`Measurements::chat_slot`].
pub fn chat_table(m: &Measurements) -> Result<Vec<Estimate>> {
    Ok(m
        .chat
        .as_ref()
        .ok_or_else(|| domain("ĉ was not recorded"))?
        .estimates())
}

/// `χ = ĉ(0,0)`.
pub fn susceptibility_estimate(m: &Measurements) -> Estimate {
    m.scalars.estimate(CHI)
}

/// Bubble diagram by a replica product of two independent chain sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleEstimate {
    pub mean: f64,
    pub se: f64,
    /// Upper bound on the omitted `|j| > J_max` terms.
    pub tail: f64,
}

/// `B̂ = (1/(β|Λ|)) Σ_{k,|j|≤J} ĉ₁(k,l) ĉ₂(k,l)` with an error bar and tail bound.
pub fn bubble_estimate(a: &Measurements, b: &Measurements, lambda: f64) -> Result<BubbleEstimate> {
    let (ca, cb) = match (&a.chat, &b.chat) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(domain("ĉ was not recorded")),
    };
    if a.spec != b.spec || a.config != b.config {
        return Err(domain("replicas differ in setup"));
    }
    let shared: Vec<u64> = ca
        .stream_ids()
        .into_iter()
        .filter(|s| cb.stream_ids().contains(s))
        .collect();
    if !shared.is_empty() {
        return Err(domain("replica halves share chains; they must be independent"));
    }
    let norm = a.beta * a.spec.n_sites() as f64;
    let (ma, mb) = (ca.means(), cb.means());
    let mean = ma.iter().zip(&mb).map(|(x, y)| x * y).sum::<f64>() / norm;
    let wa: Vec<f64> = mb.iter().map(|v| v / norm).collect();
    let wb: Vec<f64> = ma.iter().map(|v| v / norm).collect();
    let (sa, sb) = (ca.projected(&wa).se, cb.projected(&wb).se);
    let tail = ir_tail_bound(&a.spec, a.beta, lambda, a.delta, a.config.j_max.unwrap());
    Ok(BubbleEstimate {
        mean,
        se: (sa * sa + sb * sb).sqrt(),
        tail,
    })
}

/// `ζ(r) = μ[cosh(r/δ)^{|D|}]`.
pub fn zeta_estimate(m: &Measurements, r: f64) -> Result<Estimate> {
    if r == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    let slot = m.zeta_slot(r).or_else(|_| m.zeta_slot(-r))?;
    Ok(m.scalars.estimate(slot))
}

/// `μ|D|/|Λ|`.
pub fn mean_flip_density(m: &Measurements) -> Estimate {
    m.scalars.estimate(FLIPS)
}

/// `Z(h)/Z(0)` for a recorded h-function.
pub fn zratio_estimate(m: &Measurements, name: &str) -> Result<Estimate> {
    let slot = m.hfun_slot(name)?;
    let (_, h) = &m.config.hfunctions[slot - N_FIXED - m.config.zeta_r.len()];
    if h.sup_norm() == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    Ok(m.scalars.estimate(slot))
}

/// `48 / (2λL̂(k) + l²/(2δ))`.
pub fn bound48(lambda: f64, delta: f64, lh: f64, l: f64) -> f64 {
    48.0 / (2.0 * lambda * lh + l * l / (2.0 * delta))
}

/// `(2λL̂ + 48 l²/(2δ)) / (2λL̂ + l²/(2δ))²`.
pub fn bound_sharp(lambda: f64, delta: f64, lh: f64, l: f64) -> f64 {
    let a = 2.0 * lambda * lh;
    let q = l * l / (2.0 * delta);
    (a + 48.0 * q) / (a + q).powi(2)
}

/// Upper bound on `(1/(β|Λ|)) Σ_k Σ_{|j|>J} bound48(k, 2πj/β)²`.
///
/// Uses `Σ_{j>J} f(j) ≤ ∫_J^∞ f` for the decreasing `f(u) = 48²/(a + c u²)²`
/// with `a = 2λL̂(k)` and `c = (2π/β)²/(2δ)`.
pub fn ir_tail_bound(spec: &TorusSpec, beta: f64, lambda: f64, delta: f64, jmax: usize) -> f64 {
    let c = (2.0 * PI / beta).powi(2) / (2.0 * delta);
    let big_j = jmax.max(1) as f64;
    let mut s = 0.0;
    for k in spec.momentum_grid() {
        let a = 2.0 * lambda * lhat(&k);
        s += 2.0 * 48.0 * 48.0 * tail_integral(a, c, big_j);
    }
    s / (beta * spec.n_sites() as f64)
}

/// `∫_J^∞ du / (a + c u²)²`.
fn tail_integral(a: f64, c: f64, j: f64) -> f64 {
    let cj2 = c * j * j;
    if a <= 1e-6 * cj2 {
        // expansion in a/(c J²)
        let x = a / cj2;
        return (1.0 / (3.0 * c * c * j.powi(3))) * (1.0 - 1.2 * x + 9.0 / 7.0 * x * x);
    }
    let r = (c / a).sqrt();
    let at = (PI / 2.0 - (j * r).atan()) / (2.0 * a * (a * c).sqrt());
    at - j / (2.0 * a * (a + cj2))
}

/// Smallest `J` whose tail bound is below `rel · b_hat`, capped at `j_cap`.
pub fn choose_j_max(spec: &TorusSpec, beta: f64, lambda: f64, delta: f64, b_hat: f64, rel: f64, j_cap: usize) -> usize {
    (1..=j_cap)
        .find(|&j| ir_tail_bound(spec, beta, lambda, delta, j) < rel * b_hat)
        .unwrap_or(j_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hfunctions::w_prime;
    use crate::sampler::{init_free, ChainState, SamplerParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frozen(n: usize, beta: f64) -> WorldlineConfig {
        WorldlineConfig::all_up(n, beta)
    }

    #[test]
    fn fast_time_transform_matches_interval_formula() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rec = Recorder::new(&spec, 1.7, 2.0, ObservableConfig::default(), 0);
        for _ in 0..20 {
            let cfg = init_free(&spec, 1.7, 2.0, &mut rng).unwrap();
            let tt = rec.time_transforms(&cfg, 12);
            for x in 0..4 {
                for j in 0..=12 {
                    let want = cfg.time_transform(x, j as i64);
                    assert!((tt[x][j] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn frozen_ensemble_values() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let beta = 1.5;
        let oc = ObservableConfig {
            time_grid: 8,
            j_max: Some(4),
            zeta_r: vec![0.5],
            hfunctions: vec![("w".into(), w_prime(1.0, 2, beta).unwrap())],
        };
        let mut rec = Recorder::new(&spec, beta, 1.0, oc, 0);
        for _ in 0..100 {
            rec.record(&frozen(4, beta));
        }
        let m = rec.into_measurements();
        assert_eq!(susceptibility_estimate(&m).mean, beta * 4.0);
        assert_eq!(schwinger_estimate(&m, 0, 0.0).unwrap().mean, 1.0);
        assert_eq!(schwinger_estimate(&m, 2, 3.0 * beta / 8.0).unwrap().mean, 1.0);
        assert!(schwinger_estimate(&m, 0, 0.1).is_err());
        assert_eq!(zeta_estimate(&m, 0.5).unwrap().mean, 1.0);
        assert_eq!(zratio_estimate(&m, "w").unwrap().mean, 1.0);
        assert_eq!(mean_flip_density(&m).mean, 0.0);
        // frozen ĉ: only (0,0) is nonzero, and B = β|Λ|
        let mut total = 0.0;
        for k in spec.momentum_grid() {
            for j in -4..=4 {
                let e = chat_estimate(&m, &FourierIndex { k: k.clone(), j }).unwrap();
                total += e.mean * e.mean;
            }
        }
        assert!((total / (beta * 4.0) - beta * 4.0).abs() < 1e-9);
    }

    #[test]
    fn chat_symmetry_and_chi_identity() {
        let spec = TorusSpec::new(2, 4).unwrap();
        let p = SamplerParams::new(0.4, 1.0, 1.0, 3, 10);
        let mut st = ChainState::new(&spec, &p, 0).unwrap();
        let oc = ObservableConfig {
            j_max: Some(5),
            ..Default::default()
        };
        let mut rec = Recorder::new(&spec, 1.0, 1.0, oc, 0);
        for _ in 0..500 {
            st.sweep(&p);
            rec.record(&st.config);
        }
        let m = rec.into_measurements();
        let tab = chat_table(&m).unwrap();
        for k in spec.momentum_grid() {
            for j in -5..=5i64 {
                let a = tab[m.chat_slot(&k, j).unwrap()];
                let b = tab[m.chat_slot(&k.neg(), -j).unwrap()];
                assert_eq!(a.mean.to_bits(), b.mean.to_bits());
                assert!(a.mean >= 0.0);
            }
        }
        let k0 = Momentum::zero(2, 4);
        let c00 = tab[m.chat_slot(&k0, 0).unwrap()];
        let chi = susceptibility_estimate(&m);
        assert_eq!(c00.mean.to_bits(), chi.mean.to_bits());
        assert_eq!(c00.se.to_bits(), chi.se.to_bits());
    }

    #[test]
    fn tail_integral_matches_quadrature() {
        for &(a, c, j) in &[(0.0, 2.0, 3.0), (1e-9, 2.0, 3.0), (0.7, 0.3, 5.0), (4.0, 10.0, 1.0)] {
            let f = |u: f64| 1.0 / (a + c * u * u).powi(2);
            // substitution u = J/s, s ∈ (0,1]
            let n = 200_000;
            let mut q = 0.0;
            for i in 0..n {
                let s = (i as f64 + 0.5) / n as f64;
                let u = j / s;
                q += f(u) * j / (s * s) / n as f64;
            }
            let v = tail_integral(a, c, j);
            assert!((v - q).abs() < 1e-6 * q.abs().max(1e-12), "a={a}: {v} vs {q}");
        }
    }

    #[test]
    fn tail_bound_dominates_sum() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let (beta, lambda, delta) = (1.0, 0.5, 1.0);
        let jmax = 6;
        let mut s = 0.0;
        for k in spec.momentum_grid() {
            for j in (jmax as i64 + 1)..20000 {
                let l = 2.0 * PI * j as f64 / beta;
                s += 2.0 * bound48(lambda, delta, lhat(&k), l).powi(2);
            }
        }
        s /= beta * 4.0;
        let t = ir_tail_bound(&spec, beta, lambda, delta, jmax);
        assert!(s <= t && t < 1.5 * s, "{s} vs {t}");
        assert!(choose_j_max(&spec, beta, lambda, delta, 1.0, 1e-3, 1000) > jmax);
    }

    #[test]
    fn bubble_rejects_shared_chains() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let oc = ObservableConfig {
            j_max: Some(2),
            ..Default::default()
        };
        let mut r = Recorder::new(&spec, 1.0, 1.0, oc, 0);
        for _ in 0..50 {
            r.record(&frozen(4, 1.0));
        }
        let m = r.into_measurements();
        assert!(bubble_estimate(&m, &m, 0.5).is_err());
    }
}
