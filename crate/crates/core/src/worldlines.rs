//! Space–time spin configurations on `Λ × [0, β)`.
//!
//! Site `x` carries a bit `ξ_x` and a sorted flip list `D_x`; the trajectory is
//! `σ(x,t) = (−1)^{ξ_x + #{s ∈ D_x : s ≤ t}}`. Flip lists have even length so
//! that each trajectory is periodic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lattice::{Momentum, TorusSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigDoc", into = "ConfigDoc")]
pub struct WorldlineConfig {
    pub beta: f64,
    pub xi: Vec<bool>,
    pub flips: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SiteDoc {
    xi: u8,
    flips: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigDoc {
    beta: f64,
    sites: Vec<SiteDoc>,
}

impl TryFrom<ConfigDoc> for WorldlineConfig {
    type Error = crate::error::Error;
    fn try_from(doc: ConfigDoc) -> Result<Self> {
        let cfg = WorldlineConfig {
            beta: doc.beta,
            xi: doc.sites.iter().map(|s| s.xi != 0).collect(),
            flips: doc.sites.into_iter().map(|s| s.flips).collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<WorldlineConfig> for ConfigDoc {
    fn from(cfg: WorldlineConfig) -> Self {
        ConfigDoc {
            beta: cfg.beta,
            sites: cfg
                .xi
                .into_iter()
                .zip(cfg.flips)
                .map(|(xi, flips)| SiteDoc { xi: xi as u8, flips })
                .collect(),
        }
    }
}

/// `(−1)^bit` as a float.
#[inline]
pub(crate) fn sign_of(bit: bool) -> f64 {
    if bit {
        -1.0
    } else {
        1.0
    }
}

impl WorldlineConfig {
    /// Every site up, no flips.
    pub fn all_up(n_sites: usize, beta: f64) -> Self {
        WorldlineConfig {
            beta,
            xi: vec![false; n_sites],
            flips: vec![Vec::new(); n_sites],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.xi.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(domain(format!("beta must be positive, got {}", self.beta)));
        }
        if self.flips.len() != self.xi.len() {
            return Err(domain("xi and flips have different lengths"));
        }
        for (x, f) in self.flips.iter().enumerate() {
            if f.len() % 2 != 0 {
                return Err(domain(format!("site {x} has an odd number of flips")));
            }
            if f.iter().any(|&t| !(0.0..self.beta).contains(&t)) {
                return Err(domain(format!("site {x} has a flip outside [0, beta)")));
            }
            if f.windows(2).any(|w| w[0] >= w[1]) {
                return Err(domain(format!("site {x} flips are not strictly increasing")));
            }
        }
        Ok(())
    }

    /// `(−1)^{ξ_x}`, the value before any flip in `[0, β)` has acted.
    #[inline]
    pub fn base_sign(&self, x: usize) -> f64 {
        sign_of(self.xi[x])
    }

    pub fn spin_at(&self, x: usize, t: f64) -> Result<i8> {
        if !(0.0..self.beta).contains(&t) {
            return Err(domain(format!("time {t} outside [0, {})", self.beta)));
        }
        if x >= self.n_sites() {
            return Err(domain(format!("site {x} out of range")));
        }
        Ok(self.spin(x, t) as i8)
    }

    /// Unchecked `σ(x,t)` as ±1.0.
    #[inline]
    pub fn spin(&self, x: usize, t: f64) -> f64 {
        let n = self.flips[x].partition_point(|&s| s <= t);
        self.base_sign(x) * if n % 2 == 0 { 1.0 } else { -1.0 }
    }

    /// `∫₀^β σ(x,t)σ(y,t) dt`.
    pub fn overlap_integral(&self, x: usize, y: usize) -> f64 {
        product_integral(
            self.base_sign(x) * self.base_sign(y),
            &self.flips[x],
            &self.flips[y],
            0.0,
            self.beta,
        )
    }

    /// `∫_a^b σ(x,t)σ(y,t) dt` for `0 ≤ a ≤ b ≤ β`.
    pub fn overlap_on(&self, x: usize, y: usize, a: f64, b: f64) -> f64 {
        product_integral(
            self.base_sign(x) * self.base_sign(y),
            &self.flips[x],
            &self.flips[y],
            a,
            b,
        )
    }

    /// `∫₀^β σ(x,s)σ(y,s+t) ds` with `s+t` taken mod β.
    pub fn shifted_overlap(&self, x: usize, y: usize, t: f64) -> f64 {
        if t == 0.0 {
            return self.overlap_integral(x, y);
        }
        let (fy, sy) = self.shifted_flips(y, t);
        product_integral(self.base_sign(x) * sy, &self.flips[x], &fy, 0.0, self.beta)
    }

    /// Flip list and base sign of `s ↦ σ(y, s+t)`.
    pub(crate) fn shifted_flips(&self, y: usize, t: f64) -> (Vec<f64>, f64) {
        let f = &self.flips[y];
        let split = f.partition_point(|&s| s < t);
        let mut out = Vec::with_capacity(f.len());
        out.extend(f[split..].iter().map(|&s| s - t));
        out.extend(f[..split].iter().map(|&s| s + self.beta - t));
        // value just before time t
        let sign = self.base_sign(y) * if split % 2 == 0 { 1.0 } else { -1.0 };
        (out, sign)
    }

    /// `λ Σ_{x∼y} ∫σσ`, over unordered edges.
    pub fn interaction_action(&self, spec: &TorusSpec, lambda: f64) -> Result<f64> {
        if spec.n_sites() != self.n_sites() {
            return Err(domain(format!(
                "configuration has {} sites, torus has {}",
                self.n_sites(),
                spec.n_sites()
            )));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let s: f64 = spec
            .edges()
            .iter()
            .map(|&(x, y)| self.overlap_integral(x, y))
            .sum();
        Ok(lambda * s)
    }

    pub fn total_flip_count(&self) -> usize {
        self.flips.iter().map(Vec::len).sum()
    }

    /// Negate every trajectory.
    pub fn global_flip(&self) -> Self {
        let mut c = self.clone();
        for b in &mut c.xi {
            *b = !*b;
        }
        c
    }

    /// `∫₀^β σ(x,t) e^{ilt} dt` with `l = 2πj/β`, interval by interval.
    pub fn time_transform(&self, x: usize, j: i64) -> Complex64 {
        let f = &self.flips[x];
        let mut s = self.base_sign(x);
        let mut a = 0.0;
        let mut acc = Complex64::new(0.0, 0.0);
        let l = 2.0 * std::f64::consts::PI * j as f64 / self.beta;
        let mut piece = |a: f64, b: f64, s: f64| {
            if j == 0 {
                acc += s * (b - a);
            } else {
                let e = Complex64::from_polar(1.0, l * b) - Complex64::from_polar(1.0, l * a);
                acc += s * e / Complex64::new(0.0, l);
            }
        };
        for &t in f {
            piece(a, t, s);
            a = t;
            s = -s;
        }
        piece(a, self.beta, s);
        acc
    }

    /// `σ̂(k,l) = Σ_x e^{ik·x} ∫₀^β σ(x,t) e^{ilt} dt`, `l = 2πj/β`.
    pub fn fourier_transform_sigma(&self, spec: &TorusSpec, k: &Momentum, j: i64) -> Result<Complex64> {
        if spec.n_sites() != self.n_sites() {
            return Err(domain("site count mismatch"));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for x in 0..self.n_sites() {
            acc += Complex64::from_polar(1.0, k.dot(spec, x)) * self.time_transform(x, j);
        }
        Ok(acc)
    }

    /// Fourier transform at a frequency `l` given directly; must lie on the grid.
    pub fn fourier_transform_sigma_at(&self, spec: &TorusSpec, k: &Momentum, l: f64) -> Result<Complex64> {
        let jf = l * self.beta / (2.0 * std::f64::consts::PI);
        let j = jf.round();
        if (jf - j).abs() > 1e-9 {
            return Err(domain(format!("frequency {l} is not a multiple of 2π/β")));
        }
        self.fourier_transform_sigma(spec, k, j as i64)
    }
}

/// `∫_a^b s_A(t) s_B(t) dt` where each trajectory starts from the product sign
/// `s0` (the value before any flip) and toggles at its flip times.
pub(crate) fn product_integral(s0: f64, fa: &[f64], fb: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut i = fa.partition_point(|&s| s <= a);
    let mut k = fb.partition_point(|&s| s <= a);
    let mut prod = if (i + k) % 2 == 0 { s0 } else { -s0 };
    let mut cur = a;
    let mut acc = 0.0;
    loop {
        let ta = fa.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = fb.get(k).copied().unwrap_or(f64::INFINITY);
        let t = ta.min(tb);
        if t >= b {
            break;
        }
        acc += prod * (t - cur);
        cur = t;
        if ta <= tb {
            i += 1;
            prod = -prod;
        }
        if tb <= ta {
            k += 1;
            prod = -prod;
        }
    }
    acc + prod * (b - cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_site(xi: bool, flips: Vec<f64>, beta: f64) -> WorldlineConfig {
        WorldlineConfig {
            beta,
            xi: vec![xi],
            flips: vec![flips],
        }
    }

    #[test]
    fn spin_examples() {
        let c = WorldlineConfig::all_up(1, 1.0);
        assert_eq!(c.spin_at(0, 0.3).unwrap(), 1);
        let c = one_site(false, vec![0.25, 0.75], 1.0);
        assert_eq!(c.spin_at(0, 0.5).unwrap(), -1);
        assert_eq!(c.spin_at(0, 0.25).unwrap(), -1);
        assert_eq!(c.spin_at(0, 0.25 - 1e-12).unwrap(), 1);
        let c = one_site(true, vec![0.25, 0.75], 1.0);
        assert_eq!(c.spin_at(0, 0.9).unwrap(), -1);
        assert!(c.spin_at(0, 1.0).is_err());
        assert!(c.spin_at(0, -0.1).is_err());
    }

    #[test]
    fn overlap_examples() {
        let beta = 2.0;
        let c = WorldlineConfig {
            beta,
            xi: vec![false, false],
            flips: vec![vec![], vec![0.25 * beta, 0.75 * beta]],
        };
        assert!(c.overlap_integral(0, 1).abs() < 1e-15);
        assert_eq!(c.overlap_integral(1, 1), beta);
        let c2 = WorldlineConfig {
            beta,
            xi: vec![false, true],
            flips: vec![vec![0.3, 1.1], vec![0.3, 1.1]],
        };
        assert_eq!(c2.overlap_integral(0, 1), -beta);
    }

    #[test]
    fn action_examples() {
        let t = TorusSpec::new(1, 4).unwrap();
        let c = WorldlineConfig::all_up(4, 1.0);
        assert_eq!(c.interaction_action(&t, 1.0).unwrap(), 4.0);
        assert_eq!(c.interaction_action(&t, 0.0).unwrap(), 0.0);
        assert!(c.interaction_action(&TorusSpec::new(1, 6).unwrap(), 1.0).is_err());
    }

    #[test]
    fn flip_counts() {
        assert_eq!(WorldlineConfig::all_up(3, 1.0).total_flip_count(), 0);
        let c = WorldlineConfig {
            beta: 1.0,
            xi: vec![false, true],
            flips: vec![vec![0.1, 0.2], vec![0.1, 0.2, 0.3, 0.4]],
        };
        assert_eq!(c.total_flip_count(), 6);
    }

    #[test]
    fn fourier_examples() {
        let t = TorusSpec::new(1, 4).unwrap();
        let c = WorldlineConfig::all_up(4, 1.5);
        let k0 = Momentum::zero(1, 4);
        let v = c.fourier_transform_sigma(&t, &k0, 0).unwrap();
        assert!((v.re - 6.0).abs() < 1e-14 && v.im.abs() < 1e-14);
        let v = c.fourier_transform_sigma(&t, &k0, 1).unwrap();
        assert!(v.norm() < 1e-14);
        let s = TorusSpec::single_site();
        let c = one_site(false, vec![0.25, 0.75], 1.0);
        let v = c.fourier_transform_sigma(&s, &Momentum::zero(0, 2), 0).unwrap();
        assert!(v.norm() < 1e-15);
        assert!(c
            .fourier_transform_sigma_at(&s, &Momentum::zero(0, 2), 1.0)
            .is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let c = WorldlineConfig {
            beta: 0.7,
            xi: vec![true, false],
            flips: vec![vec![0.1 + 0.2, 0.6999999999999999], vec![]],
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"sites\""));
        let back: WorldlineConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"beta":1.0,"sites":[{"xi":0,"flips":[0.5]}]}"#;
        assert!(serde_json::from_str::<WorldlineConfig>(bad).is_err());
    }

    fn arb_config(n: usize) -> impl Strategy<Value = WorldlineConfig> {
        let site = (any::<bool>(), proptest::collection::vec(0.0f64..1.0, 0..4));
        (0.2f64..3.0, proptest::collection::vec(site, n)).prop_map(|(beta, sites)| {
            let mut xi = Vec::new();
            let mut flips = Vec::new();
            for (b, mut f) in sites {
                let mut v: Vec<f64> = f.drain(..).map(|u| u * beta).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v.dedup();
                if v.len() % 2 == 1 {
                    v.pop();
                }
                xi.push(b);
                flips.push(v);
            }
            WorldlineConfig { beta, xi, flips }
        })
    }

    /// Midpoint-rule reference on the merged partition (exact for step functions).
    fn brute_overlap(c: &WorldlineConfig, x: usize, y: usize, shift: f64) -> f64 {
        let mut pts: Vec<f64> = vec![0.0, c.beta];
        pts.extend(&c.flips[x]);
        for &s in &c.flips[y] {
            pts.push((s - shift).rem_euclid(c.beta));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut acc = 0.0;
        for w in pts.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            let ty = (m + shift).rem_euclid(c.beta);
            acc += (w[1] - w[0]) * c.spin(x, m) * c.spin(y, ty);
        }
        acc
    }

    proptest! {
        #[test]
        fn overlap_symmetric_and_bounded(c in arb_config(3)) {
            for x in 0..3 {
                for y in 0..3 {
                    let o = c.overlap_integral(x, y);
                    prop_assert!((o - c.overlap_integral(y, x)).abs() < 1e-12);
                    prop_assert!(o.abs() <= c.beta + 1e-12);
                    prop_assert!((o - brute_overlap(&c, x, y, 0.0)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn shifted_overlap_matches_brute_force(c in arb_config(2), u in 0.0f64..1.0) {
            let t = u * c.beta;
            let v = c.shifted_overlap(0, 1, t);
            prop_assert!((v - brute_overlap(&c, 0, 1, t)).abs() < 1e-10);
        }

        #[test]
        fn spin_changes_sign_only_at_flips(c in arb_config(1)) {
            let eps = 1e-9;
            for &t in &c.flips[0] {
                if t > eps {
                    prop_assert_eq!(c.spin(0, t), -c.spin(0, t - eps));
                }
            }
            // evenness: the value just before β is the value before the first flip
            let last = c.flips[0].last().copied().unwrap_or(0.0);
            let t_end = 0.5 * (last + c.beta);
            prop_assert_eq!(c.spin(0, t_end), c.base_sign(0));
        }

        #[test]
        fn global_flip_preserves_action(c in arb_config(4), lam in 0.0f64..2.0) {
            let t = TorusSpec::new(1, 4).unwrap();
            let a = c.interaction_action(&t, lam).unwrap();
            let b = c.global_flip().interaction_action(&t, lam).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn parseval_sanity(c in arb_config(4)) {
            let t = TorusSpec::new(1, 4).unwrap();
            let jmax = 40;
            let mut s = 0.0;
            for k in t.momentum_grid() {
                for j in -jmax..=jmax {
                    s += c.fourier_transform_sigma(&t, &k, j).unwrap().norm_sqr();
                }
            }
            let n = 4.0;
            // Σ_{k,all l} |σ̂|² = β|Λ|·Σ_x∫σ² = (β|Λ|)²
            prop_assert!(s / (c.beta * n) <= c.beta * n * (1.0 + 1e-9));
        }
    }

    #[test]
    fn spin_at_end_equals_spin_at_start() {
        let c = one_site(true, vec![0.1, 0.2, 0.5, 0.9], 1.0);
        assert_eq!(c.spin(0, 0.95), c.spin(0, 0.0));
        assert!(c.validate().is_ok());
    }
}
