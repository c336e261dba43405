//! Metropolis–Hastings chain on `(ξ, D)` targeting the space–time Ising
//! measure: base law of independent even-conditioned Poisson(δ) flip sets and
//! uniform bits, tilted by `exp(λ Σ_{x∼y} ∫ σ(x,t)σ(y,t) dt)`.
//!
//! Four moves: a line flip `ξ_x → 1 − ξ_x`, pair insertion and pair deletion
//! (toggling `σ(x,·)` on `[min, max)` of the pair), and a shift of one flip
//! inside its circular gap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::lattice::TorusSpec;
use crate::worldlines::WorldlineConfig;

/// Relative tolerance below which two flip times count as colliding.
pub const COLLISION_TOL: f64 = 1e-12;

/// Probabilities of the four move types.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveMix {
    pub flip: f64,
    pub insert: f64,
    pub delete: f64,
    pub shift: f64,
}

impl Default for MoveMix {
    fn default() -> Self {
        MoveMix {
            flip: 0.1,
            insert: 0.4,
            delete: 0.4,
            shift: 0.1,
        }
    }
}

impl MoveMix {
    pub fn validate(&self) -> Result<()> {
        let p = [self.flip, self.insert, self.delete, self.shift];
        if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid("move_mix", "probabilities must be nonnegative"));
        }
        if (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("move_mix", "probabilities must sum to 1"));
        }
        if self.insert != self.delete {
            return Err(invalid("move_mix", "insert and delete probabilities must be equal"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub lambda: f64,
    pub delta: f64,
    pub beta: f64,
    #[serde(default)]
    pub move_mix: MoveMix,
    pub seed: u64,
    pub sweeps: u64,
    /// `None` selects the automatic burn-in.
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default = "one")]
    pub thinning: u64,
}

fn one() -> u64 {
    1
}

impl SamplerParams {
    pub fn new(lambda: f64, delta: f64, beta: f64, seed: u64, sweeps: u64) -> Self {
        SamplerParams {
            lambda,
            delta,
            beta,
            move_mix: MoveMix::default(),
            seed,
            sweeps,
            burn_in: None,
            thinning: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", "must be finite and >= 0"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", "must be positive"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", "must be positive"));
        }
        if self.sweeps == 0 {
            return Err(invalid("sweeps", "sweeps must be positive"));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning", "thinning must be positive"));
        }
        if self.burn_in == Some(0) {
            return Err(invalid("burn_in", "burn-in must be positive when given"));
        }
        self.move_mix.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    LineFlip = 0,
    Insert = 1,
    Delete = 2,
    Shift = 3,
}

/// Proposal and acceptance counts, indexed by `MoveKind`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: [u64; 4],
    pub accepted: [u64; 4],
}

impl MoveStats {
    pub fn acceptance(&self, kind: MoveKind) -> f64 {
        let i = kind as usize;
        if self.proposed[i] == 0 {
            0.0
        } else {
            self.accepted[i] as f64 / self.proposed[i] as f64
        }
    }

    pub fn total_proposed(&self) -> u64 {
        self.proposed.iter().sum()
    }
}

/// One even-conditioned Poisson(δ) flip set on `[0, β)`, by resampling until even.
pub fn even_poisson<R: Rng>(beta: f64, delta: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v = Vec::new();
        let mut t = 0.0;
        loop {
            t += -(1.0 - rng.gen::<f64>()).ln() / delta;
            if t >= beta {
                break;
            }
            v.push(t);
        }
        if v.len() % 2 == 0 {
            return v;
        }
    }
}

/// Exact draw from the base law `E`: uniform bits, even Poisson flip sets.
pub fn init_free<R: Rng>(spec: &TorusSpec, beta: f64, delta: f64, rng: &mut R) -> Result<WorldlineConfig> {
    if !(delta > 0.0) {
        return Err(domain("delta must be positive"));
    }
    let n = spec.n_sites();
    let mut cfg = WorldlineConfig::all_up(n, beta);
    for x in 0..n {
        cfg.xi[x] = rng.gen::<bool>();
        cfg.flips[x] = even_poisson(beta, delta, rng);
    }
    Ok(cfg)
}

/// A single Markov chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: WorldlineConfig,
    pub steps: u64,
    pub stats: MoveStats,
    pub rng: ChaCha8Rng,
    adjacency: Vec<Vec<usize>>,
}

/// Checkpoint document: the configuration schema plus chain bookkeeping.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    #[serde(flatten)]
    pub config: serde_json::Value,
    pub rng_state: String,
    pub steps: u64,
    pub stats: MoveStats,
}

fn rng_to_hex(rng: &ChaCha8Rng) -> String {
    let mut bytes = Vec::with_capacity(56);
    bytes.extend_from_slice(&rng.get_seed());
    bytes.extend_from_slice(&rng.get_stream().to_le_bytes());
    bytes.extend_from_slice(&rng.get_word_pos().to_le_bytes());
    hex::encode(bytes)
}

fn rng_from_hex(s: &str) -> Result<ChaCha8Rng> {
    let b = hex::decode(s).map_err(|e| domain(format!("bad rng state: {e}")))?;
    if b.len() != 56 {
        return Err(domain("rng state must be 56 bytes"));
    }
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&b[..32]);
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(u64::from_le_bytes(b[32..40].try_into().unwrap()));
    rng.set_word_pos(u128::from_le_bytes(b[40..56].try_into().unwrap()));
    Ok(rng)
}

impl ChainState {
    /// Start from a draw of the base law, using RNG stream `stream` of `seed`.
    pub fn new(spec: &TorusSpec, params: &SamplerParams, stream: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(stream);
        let config = init_free(spec, params.beta, params.delta, &mut rng)?;
        Ok(Self::from_parts(spec, config, rng))
    }

    pub fn from_parts(spec: &TorusSpec, config: WorldlineConfig, rng: ChaCha8Rng) -> Self {
        ChainState {
            config,
            steps: 0,
            stats: MoveStats::default(),
            rng,
            adjacency: spec.adjacency(),
        }
    }

    pub fn checkpoint(&self) -> Result<String> {
        let doc = Checkpoint {
            config: serde_json::to_value(&self.config)?,
            rng_state: rng_to_hex(&self.rng),
            steps: self.steps,
            stats: self.stats,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn restore(spec: &TorusSpec, json: &str) -> Result<Self> {
        let doc: Checkpoint = serde_json::from_str(json)?;
        let config: WorldlineConfig = serde_json::from_value(doc.config)?;
        if config.n_sites() != spec.n_sites() {
            return Err(domain("checkpoint does not match the torus"));
        }
        let mut s = Self::from_parts(spec, config, rng_from_hex(&doc.rng_state)?);
        s.steps = doc.steps;
        s.stats = doc.stats;
        Ok(s)
    }

    /// `Σ_{y∼x} ∫_a^b σ(x,t)σ(y,t) dt`.
    fn local_overlap(&self, x: usize, a: f64, b: f64) -> f64 {
        self.adjacency[x]
            .iter()
            .map(|&y| self.config.overlap_on(x, y, a, b))
            .sum()
    }

    fn accept(&mut self, lambda: f64, delta_s: f64, extra: f64) -> bool {
        let ratio = (lambda * delta_s).exp() * extra;
        ratio >= 1.0 || self.rng.gen::<f64>() < ratio
    }

    fn record(&mut self, kind: MoveKind, ok: bool) -> bool {
        self.stats.proposed[kind as usize] += 1;
        if ok {
            self.stats.accepted[kind as usize] += 1;
        }
        ok
    }

    pub fn move_line_flip(&mut self, p: &SamplerParams) -> bool {
        let n = self.config.n_sites();
        let x = self.rng.gen_range(0..n);
        let ds = -2.0 * self.local_overlap(x, 0.0, p.beta);
        let ok = self.accept(p.lambda, ds, 1.0);
        if ok {
            self.config.xi[x] = !self.config.xi[x];
        }
        self.record(MoveKind::LineFlip, ok)
    }

    fn collides(&self, x: usize, t: f64) -> bool {
        let f = &self.config.flips[x];
        let tol = COLLISION_TOL * self.config.beta;
        let i = f.partition_point(|&s| s < t);
        (i < f.len() && f[i] - t <= tol) || (i > 0 && t - f[i - 1] <= tol)
    }

    pub fn move_pair_insert(&mut self, p: &SamplerParams) -> bool {
        let x = self.rng.gen_range(0..self.config.n_sites());
        let s = self.rng.gen::<f64>() * p.beta;
        let t = self.rng.gen::<f64>() * p.beta;
        if (s - t).abs() <= COLLISION_TOL * p.beta || self.collides(x, s) || self.collides(x, t) {
            return self.record(MoveKind::Insert, false);
        }
        let (a, b) = if s < t { (s, t) } else { (t, s) };
        let n = self.config.flips[x].len() as f64;
        let ds = -2.0 * self.local_overlap(x, a, b);
        let db = p.delta * p.beta;
        let extra = db * db / ((n + 2.0) * (n + 1.0));
        let ok = self.accept(p.lambda, ds, extra);
        if ok {
            let f = &mut self.config.flips[x];
            let i = f.partition_point(|&u| u < a);
            f.insert(i, a);
            let k = f.partition_point(|&u| u < b);
            f.insert(k, b);
        }
        self.record(MoveKind::Insert, ok)
    }

    pub fn move_pair_delete(&mut self, p: &SamplerParams) -> bool {
        let x = self.rng.gen_range(0..self.config.n_sites());
        let n = self.config.flips[x].len();
        if n < 2 {
            return self.record(MoveKind::Delete, false);
        }
        // uniform unordered pair i < k
        let i0 = self.rng.gen_range(0..n);
        let mut k0 = self.rng.gen_range(0..n - 1);
        if k0 >= i0 {
            k0 += 1;
        }
        let (i, k) = (i0.min(k0), i0.max(k0));
        let a = self.config.flips[x][i];
        let b = self.config.flips[x][k];
        let ds = -2.0 * self.local_overlap(x, a, b);
        let db = p.delta * p.beta;
        let nf = n as f64;
        let extra = nf * (nf - 1.0) / (db * db);
        let ok = self.accept(p.lambda, ds, extra);
        if ok {
            let f = &mut self.config.flips[x];
            f.remove(k);
            f.remove(i);
        }
        self.record(MoveKind::Delete, ok)
    }

    pub fn move_shift(&mut self, p: &SamplerParams) -> bool {
        let x = self.rng.gen_range(0..self.config.n_sites());
        let n = self.config.flips[x].len();
        if n == 0 {
            return self.record(MoveKind::Shift, false);
        }
        let beta = p.beta;
        let i = self.rng.gen_range(0..n);
        let f = &self.config.flips[x];
        let prev = f[(i + n - 1) % n];
        let next = f[(i + 1) % n];
        let mut gap = (next - prev).rem_euclid(beta);
        if gap == 0.0 {
            gap = beta;
        }
        let ti = if f[i] > prev { f[i] } else { f[i] + beta };
        let u = prev + self.rng.gen::<f64>() * gap;
        let tol = COLLISION_TOL * beta;
        if u - prev <= tol || prev + gap - u <= tol {
            return self.record(MoveKind::Shift, false);
        }
        let (a, b) = if u < ti { (u, ti) } else { (ti, u) };
        let pieces: Vec<(f64, f64)> = if b <= beta {
            vec![(a, b)]
        } else if a >= beta {
            vec![(a - beta, b - beta)]
        } else {
            vec![(a, beta), (0.0, b - beta)]
        };
        let ds: f64 = pieces
            .iter()
            .map(|&(lo, hi)| -2.0 * self.local_overlap(x, lo, hi))
            .sum();
        let ok = self.accept(p.lambda, ds, 1.0);
        if ok {
            let mut unew = u.rem_euclid(beta);
            if unew >= beta {
                unew = 0.0;
            }
            let f = &mut self.config.flips[x];
            let before = f.partition_point(|&s| s <= prev);
            f.remove(i);
            let j = f.partition_point(|&s| s < unew);
            f.insert(j, unew);
            let after = f.partition_point(|&s| s <= prev);
            if (before + after) % 2 == 1 {
                self.config.xi[x] = !self.config.xi[x];
            }
        }
        self.record(MoveKind::Shift, ok)
    }

    /// One move drawn from the mix.
    pub fn step(&mut self, p: &SamplerParams) -> bool {
        let u = self.rng.gen::<f64>();
        let m = &p.move_mix;
        self.steps += 1;
        if u < m.flip {
            self.move_line_flip(p)
        } else if u < m.flip + m.insert {
            self.move_pair_insert(p)
        } else if u < m.flip + m.insert + m.delete {
            self.move_pair_delete(p)
        } else {
            self.move_shift(p)
        }
    }

    /// `|Λ|` move attempts.
    pub fn sweep(&mut self, p: &SamplerParams) {
        for _ in 0..self.config.n_sites() {
            self.step(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, delta: f64, beta: f64) -> SamplerParams {
        SamplerParams::new(lambda, delta, beta, 7, 100)
    }

    #[test]
    fn line_flip_acceptance_on_all_up_ring() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let p = params(1.0, 1.0, 1.0);
        let mut hits = 0u32;
        let trials = 200_000;
        let mut st = ChainState::from_parts(&spec, WorldlineConfig::all_up(4, 1.0), ChaCha8Rng::seed_from_u64(3));
        for _ in 0..trials {
            st.config = WorldlineConfig::all_up(4, 1.0);
            if st.move_line_flip(&p) {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        let want = (-4.0f64).exp();
        let se = (want * (1.0 - want) / trials as f64).sqrt();
        assert!((rate - want).abs() < 5.0 * se, "rate {rate} want {want}");
    }

    #[test]
    fn zero_coupling_and_isolated_site_always_accept_flips() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let mut st = ChainState::new(&spec, &params(0.0, 1.0, 1.0), 0).unwrap();
        for _ in 0..1000 {
            assert!(st.move_line_flip(&params(0.0, 1.0, 1.0)));
        }
        let single = TorusSpec::single_site();
        let p = params(3.0, 1.0, 1.0);
        let mut st = ChainState::new(&single, &p, 0).unwrap();
        for _ in 0..1000 {
            assert!(st.move_line_flip(&p));
        }
    }

    #[test]
    fn shift_at_zero_coupling_always_accepts_and_keeps_count() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let p = params(0.0, 2.0, 1.0);
        let mut st = ChainState::new(&spec, &p, 1).unwrap();
        for _ in 0..2000 {
            st.sweep(&p);
            let before = st.config.total_flip_count();
            let x_has = st.config.flips.iter().all(|f| !f.is_empty());
            let ok = st.move_shift(&p);
            if x_has {
                assert!(ok);
            }
            assert_eq!(before, st.config.total_flip_count());
            st.config.validate().unwrap();
        }
    }

    #[test]
    fn shift_preserves_trajectory_outside_the_arc() {
        let spec = TorusSpec::single_site();
        let p = params(0.0, 3.0, 1.0);
        let mut st = ChainState::new(&spec, &p, 5).unwrap();
        for _ in 0..5000 {
            st.sweep(&p);
            let old = st.config.clone();
            if old.flips[0].is_empty() {
                continue;
            }
            if st.move_shift(&p) {
                // σ differs from the old trajectory on a single arc only
                let grid: Vec<f64> = (0..512).map(|i| (i as f64 + 0.5) / 512.0).collect();
                let diff: Vec<bool> = grid
                    .iter()
                    .map(|&t| old.spin(0, t) != st.config.spin(0, t))
                    .collect();
                let changes = diff.windows(2).filter(|w| w[0] != w[1]).count()
                    + (diff[0] != diff[diff.len() - 1]) as usize;
                assert!(changes <= 2, "changed on more than one arc");
            }
        }
    }

    #[test]
    fn invariants_hold_over_many_sweeps() {
        let spec = TorusSpec::new(2, 4).unwrap();
        for (i, &(l, d, b)) in [(0.3, 0.7, 1.3), (1.0, 0.5, 2.0), (0.1, 2.0, 0.5)].iter().enumerate() {
            let p = SamplerParams::new(l, d, b, 11 + i as u64, 10);
            let mut st = ChainState::new(&spec, &p, 0).unwrap();
            for _ in 0..10_000 {
                st.sweep(&p);
            }
            st.config.validate().unwrap();
            assert_eq!(st.stats.total_proposed(), 10_000 * 16);
            assert_eq!(st.steps, 10_000 * 16);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let p = params(0.5, 1.0, 1.0);
        let run = || {
            let mut st = ChainState::new(&spec, &p, 2).unwrap();
            (0..5000).map(|_| st.step(&p)).collect::<Vec<bool>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn checkpoint_resumes_bit_exactly() {
        let spec = TorusSpec::new(1, 4).unwrap();
        let p = params(0.5, 1.0, 1.0);
        let mut a = ChainState::new(&spec, &p, 4).unwrap();
        for _ in 0..100 {
            a.sweep(&p);
        }
        let ck = a.checkpoint().unwrap();
        assert!(ck.contains("\"sites\"") && ck.contains("rng_state"));
        let mut b = ChainState::restore(&spec, &ck).unwrap();
        for _ in 0..100 {
            a.sweep(&p);
            b.sweep(&p);
        }
        assert_eq!(a.config, b.config);
        assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn params_validation() {
        let mut p = params(0.5, 1.0, 1.0);
        p.sweeps = 0;
        let e = p.validate().unwrap_err().to_string();
        assert!(e.contains("sweeps must be positive"), "{e}");
        let mut p = params(0.5, 1.0, 1.0);
        p.move_mix = MoveMix {
            flip: 0.2,
            insert: 0.5,
            delete: 0.3,
            shift: 0.0,
        };
        assert!(p.validate().is_err());
        let mut p = params(0.5, 1.0, 1.0);
        p.delta = 0.0;
        assert!(p.validate().is_err());
    }

    /// Exact even-Poisson masses `(δβ)^{2k} / ((2k)! cosh δβ)`.
    fn even_mass(db: f64, k: usize) -> f64 {
        let mut v = 1.0;
        for i in 1..=2 * k {
            v *= db / i as f64;
        }
        v / db.cosh()
    }

    #[test]
    fn init_free_matches_even_poisson_law() {
        let db: f64 = 1.0;
        assert!((even_mass(db, 0) - 0.6481).abs() < 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let mut counts = [0usize; 6];
        for _ in 0..n {
            let f = even_poisson(1.0, db, &mut rng);
            assert!(f.len() % 2 == 0);
            counts[(f.len() / 2).min(5)] += 1;
        }
        for k in 0..3 {
            let p = even_mass(db, k);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[k] as f64 / n as f64 - p).abs() < 5.0 * se);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let empty = (0..1000).filter(|_| even_poisson(1e-6, 1.0, &mut rng).is_empty()).count();
        assert!(empty >= 999);
    }

    #[test]
    fn reversibility_on_single_site() {
        // |D| bucket transitions: N(i→j) ≈ N(j→i) at stationarity
        let spec = TorusSpec::single_site();
        let p = params(0.0, 1.5, 1.0);
        let mut st = ChainState::new(&spec, &p, 3).unwrap();
        for _ in 0..1000 {
            st.step(&p);
        }
        let mut n = [[0f64; 4]; 4];
        let bucket = |c: &WorldlineConfig| (c.flips[0].len() / 2).min(3);
        let mut cur = bucket(&st.config);
        for _ in 0..2_000_000 {
            st.step(&p);
            let nb = bucket(&st.config);
            n[cur][nb] += 1.0;
            cur = nb;
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let (a, b) = (n[i][j], n[j][i]);
                if a + b > 0.0 {
                    assert!((a - b).abs() <= 5.0 * (a + b).sqrt() + 5.0, "{i}->{j}: {a} vs {b}");
                }
            }
        }
    }
}
