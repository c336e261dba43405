//! TOML experiment configuration for the runner.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hfunctions::{w_prime, StepFunction};
use crate::lattice::TorusSpec;
use crate::sampler::{MoveMix, SamplerParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub observables: ObservablesConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub side: usize,
    pub beta: f64,
    pub lambda: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Recorded sweeps per chain.
    #[serde(default = "default_sweeps")]
    pub sweeps: u64,
    /// Discarded sweeps per chain; `None` selects the automatic burn-in.
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default = "default_thinning")]
    pub thinning: u64,
    #[serde(default)]
    pub move_mix: MoveMix,
}

/// Frequency truncation of the ĉ table: a fixed `J` or `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JMaxPolicy {
    Fixed(usize),
    Auto,
}

impl Serialize for JMaxPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            JMaxPolicy::Fixed(j) => s.serialize_u64(*j as u64),
            JMaxPolicy::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for JMaxPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(JMaxPolicy::Fixed(n as usize)),
            Raw::S(s) if s == "auto" => Ok(JMaxPolicy::Auto),
            Raw::S(s) => Err(serde::de::Error::custom(format!(
                "j_max must be an integer or \"auto\", got \"{s}\""
            ))),
        }
    }
}

/// A named test function given by its weak derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: HKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HKind {
    /// `W′_{r,n}`.
    White { r: f64, n: u32 },
    /// Explicit pieces on `[0, β)`.
    Steps { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl HSpec {
    pub fn build(&self, beta: f64) -> Result<StepFunction> {
        match &self.kind {
            HKind::White { r, n } => w_prime(*r, *n, beta),
            HKind::Steps { breakpoints, values } => {
                let f = StepFunction::new(beta, breakpoints.clone(), values.clone())?;
                f.check_zero_integral()?;
                Ok(f)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    /// Points of the `c(x,t)` time grid; 0 disables.
    #[serde(default = "default_time_grid")]
    pub time_grid: usize,
    #[serde(default = "default_j_max")]
    pub j_max: JMaxPolicy,
    /// Target ratio of the tail bound to the bubble diagram for `"auto"`.
    #[serde(default = "default_j_rel")]
    pub j_max_rel: f64,
    #[serde(default = "default_j_cap")]
    pub j_max_cap: usize,
    #[serde(default)]
    pub zeta_r: Vec<f64>,
    #[serde(default)]
    pub hfunctions: Vec<HSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Infrared,
    Duhamel,
    FlipDomination,
    GaussianDomination,
    WhiteLimit,
    DiffInequalities,
    DerivativeBounds,
    Scan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Checks run by `sample` and `ed`; the other subcommands fix their own.
    #[serde(default = "default_checks")]
    pub checks: Vec<Check>,
    /// Names of `hfunctions` entries tested for Gaussian domination; empty
    /// means all of them.
    #[serde(default)]
    pub gaussian: Vec<String>,
    #[serde(default = "default_white_r")]
    pub white_r: Vec<f64>,
    #[serde(default = "default_white_n")]
    pub white_n: Vec<u32>,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_scan")]
    pub scan_lambdas: Vec<f64>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("tfim-out")
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4]
}
fn default_sweeps() -> u64 {
    20_000
}
fn default_thinning() -> u64 {
    1
}
fn default_time_grid() -> usize {
    16
}
fn default_j_max() -> JMaxPolicy {
    JMaxPolicy::Fixed(16)
}
fn default_j_rel() -> f64 {
    1e-3
}
fn default_j_cap() -> usize {
    256
}
fn default_checks() -> Vec<Check> {
    vec![Check::Infrared, Check::Duhamel]
}
fn default_white_r() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_white_n() -> Vec<u32> {
    vec![1, 2, 3, 4, 5]
}
fn default_fd_step() -> f64 {
    1e-3
}
fn default_scan() -> Vec<f64> {
    (0..7).map(|i| 0.25 * i as f64).collect()
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            sweeps: default_sweeps(),
            burn_in: None,
            thinning: default_thinning(),
            move_mix: MoveMix::default(),
        }
    }
}

impl Default for ObservablesConfig {
    fn default() -> Self {
        ObservablesConfig {
            time_grid: default_time_grid(),
            j_max: default_j_max(),
            j_max_rel: default_j_rel(),
            j_max_cap: default_j_cap(),
            zeta_r: Vec::new(),
            hfunctions: Vec::new(),
        }
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            checks: default_checks(),
            gaussian: Vec::new(),
            white_r: default_white_r(),
            white_n: default_white_n(),
            fd_step: default_fd_step(),
            scan_lambdas: default_scan(),
        }
    }
}

impl Default for ExperimentConfig {
    /// The side-4 chain at `β = λ = δ = 1`.
    fn default() -> Self {
        ExperimentConfig {
            model: ModelConfig {
                d: 1,
                side: 4,
                beta: 1.0,
                lambda: 1.0,
                delta: 1.0,
            },
            sampler: SamplerConfig::default(),
            observables: ObservablesConfig::default(),
            verify: VerifyConfig::default(),
            output_dir: default_output_dir(),
            seeds: default_seeds(),
        }
    }
}

fn ascending<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    /// Parse and validate.
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn spec(&self) -> Result<TorusSpec> {
        TorusSpec::new(self.model.d, self.model.side)
    }

    /// Sampler parameters of chain `i`.
    pub fn sampler_params(&self, i: usize) -> SamplerParams {
        let m = &self.model;
        let s = &self.sampler;
        SamplerParams {
            lambda: m.lambda,
            delta: m.delta,
            beta: m.beta,
            move_mix: s.move_mix,
            seed: self.seeds[i],
            sweeps: s.sweeps,
            burn_in: s.burn_in,
            thinning: s.thinning,
        }
    }

    /// The configured test functions, built at the model's β.
    pub fn hfunctions(&self) -> Result<Vec<(String, StepFunction)>> {
        self.observables
            .hfunctions
            .iter()
            .map(|h| Ok((h.name.clone(), h.build(self.model.beta)?)))
            .collect()
    }

    /// Replace the seed list by `seed, seed+1, …` of the same length.
    pub fn override_seed(&mut self, seed: u64) {
        let n = self.seeds.len().max(1);
        self.seeds = (0..n as u64).map(|i| seed.wrapping_add(i)).collect();
    }

    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        let m = &self.model;
        if !(m.beta > 0.0 && m.beta.is_finite()) {
            return Err(invalid("model.beta", "must be positive"));
        }
        if !(m.delta > 0.0 && m.delta.is_finite()) {
            return Err(invalid("model.delta", "must be positive"));
        }
        if !(m.lambda >= 0.0 && m.lambda.is_finite()) {
            return Err(invalid("model.lambda", "must be finite and >= 0"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "need at least one seed"));
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return Err(invalid("seeds", "seeds must be distinct"));
        }
        self.sampler_params(0).validate()?;
        let o = &self.observables;
        if o.j_max == JMaxPolicy::Fixed(0) {
            return Err(invalid("observables.j_max", "must be positive"));
        }
        if !(o.j_max_rel > 0.0) || o.j_max_cap == 0 {
            return Err(invalid("observables.j_max_rel", "rel must be positive and cap nonzero"));
        }
        if o.zeta_r.iter().any(|r| !r.is_finite()) {
            return Err(invalid("observables.zeta_r", "must be finite"));
        }
        let mut names: Vec<&str> = o.hfunctions.iter().map(|h| h.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("observables.hfunctions", "names must be distinct"));
        }
        for h in &o.hfunctions {
            h.build(m.beta)
                .map_err(|e| invalid(&format!("observables.hfunctions.{}", h.name), e.to_string()))?;
        }
        let v = &self.verify;
        for g in &v.gaussian {
            if !names.contains(&g.as_str()) {
                return Err(invalid("verify.gaussian", format!("no h-function named `{g}`")));
            }
        }
        if v.white_n.is_empty() || !ascending(&v.white_n) || v.white_n[0] == 0 {
            return Err(invalid("verify.white_n", "must be nonempty, positive and ascending"));
        }
        if !(v.fd_step > 0.0 && v.fd_step < m.delta) {
            return Err(invalid("verify.fd_step", "must be positive and below delta"));
        }
        if v.scan_lambdas.is_empty() || !ascending(&v.scan_lambdas) || v.scan_lambdas[0] < 0.0 {
            return Err(invalid("verify.scan_lambdas", "must be nonempty, nonnegative and ascending"));
        }
        Ok(())
    }
}
