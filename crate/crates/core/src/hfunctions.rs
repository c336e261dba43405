//! Periodic test functions `h` on the circle `[0, β)`, represented by their
//! weak derivative `h′` (a step function) and the convention `h(0) = 0`.
//!
//! Includes the dyadic family `W_{r,n}`, the reflection `θ(t) = β − t`, the
//! `±` constructions and symmetrization, the level-`n` snippet predicate, and
//! the per-configuration weight whose mean is `Z(h)/Z(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::worldlines::{sign_of, WorldlineConfig};

/// Grid used by the symmetry and snippet predicates.
pub const CHECK_GRID: usize = 1 << 14;
/// Absolute tolerance used by the predicates.
pub const CHECK_TOL: f64 = 1e-9;

/// A β-periodic, right-continuous piecewise-constant function.
///
/// `values[i]` holds on `[breakpoints[i], breakpoints[i+1])`; the last piece
/// wraps around through `β ≡ 0` up to `breakpoints[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepDoc")]
pub struct StepFunction {
    pub beta: f64,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Deserialize)]
struct StepDoc {
    beta: f64,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepDoc> for StepFunction {
    type Error = crate::error::Error;
    fn try_from(d: StepDoc) -> Result<Self> {
        StepFunction::new(d.beta, d.breakpoints, d.values)
    }
}

/// Which of the two reflected halves to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl StepFunction {
    pub fn new(beta: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(domain(format!("beta must be positive, got {beta}")));
        }
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(domain("need one value per breakpoint and at least one piece"));
        }
        if breakpoints.iter().any(|&b| !(0.0..beta).contains(&b)) {
            return Err(domain("breakpoints must lie in [0, beta)"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("values must be finite"));
        }
        Ok(StepFunction {
            beta,
            breakpoints,
            values,
        })
    }

    pub fn constant(beta: f64, v: f64) -> Self {
        StepFunction {
            beta,
            breakpoints: vec![0.0],
            values: vec![v],
        }
    }

    /// Build from cut points in `[0, β)` by sampling `f` at piece midpoints.
    pub fn sample(beta: f64, cuts: &[f64], f: impl Fn(f64) -> f64) -> Self {
        let mut b: Vec<f64> = cuts
            .iter()
            .map(|&c| wrap(c, beta))
            .chain(std::iter::once(0.0))
            .collect();
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * beta);
        let values = (0..b.len())
            .map(|i| {
                let hi = if i + 1 < b.len() { b[i + 1] } else { beta };
                f(0.5 * (b[i] + hi))
            })
            .collect();
        StepFunction {
            beta,
            breakpoints: b,
            values,
        }
        .simplified()
    }

    /// Merge adjacent pieces with equal values.
    pub fn simplified(mut self) -> Self {
        let mut b = Vec::with_capacity(self.breakpoints.len());
        let mut v: Vec<f64> = Vec::with_capacity(self.values.len());
        for (&bi, &vi) in self.breakpoints.iter().zip(&self.values) {
            if v.last() == Some(&vi) {
                continue;
            }
            b.push(bi);
            v.push(vi);
        }
        if v.len() > 1 && v.first() == v.last() && b[0] > 0.0 {
            // the wrapping piece and the first piece coincide
            b.remove(0);
            v.remove(0);
        }
        self.breakpoints = b;
        self.values = v;
        self
    }

    fn piece(&self, t: f64) -> usize {
        let i = self.breakpoints.partition_point(|&b| b <= t);
        if i == 0 {
            self.values.len() - 1
        } else {
            i - 1
        }
    }

    /// Value at `t` (reduced mod β).
    pub fn eval(&self, t: f64) -> f64 {
        self.values[self.piece(wrap(t, self.beta))]
    }

    /// Piece lengths, aligned with `values`.
    fn lengths(&self) -> Vec<f64> {
        let n = self.breakpoints.len();
        (0..n)
            .map(|i| {
                if i + 1 < n {
                    self.breakpoints[i + 1] - self.breakpoints[i]
                } else {
                    self.beta - self.breakpoints[i] + self.breakpoints[0]
                }
            })
            .collect()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.lengths()).map(|(v, l)| v * l).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h(t) = ∫₀^t h′` for `t ∈ [0, β]`, treating `self` as `h′`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut a = 0.0;
        let mut v = self.eval(0.0);
        for (i, &b) in self.breakpoints.iter().enumerate() {
            if b <= 0.0 {
                v = self.values[i];
                continue;
            }
            if b >= t {
                break;
            }
            acc += v * (b - a);
            a = b;
            v = self.values[i];
        }
        acc + v * (t - a)
    }

    /// `t ↦ f(t + s)`.
    pub fn shifted(&self, s: f64) -> Self {
        let cuts: Vec<f64> = self.breakpoints.iter().map(|&b| b - s).collect();
        StepFunction::sample(self.beta, &cuts, |t| self.eval(t + s))
    }

    /// `∫h′ = 0`, required for `h` to be periodic.
    pub fn check_zero_integral(&self) -> Result<()> {
        let scale = self.sup_norm() * self.beta;
        if self.integral().abs() > 1e-10 * scale.max(1.0) {
            return Err(domain(format!(
                "derivative integrates to {} instead of 0",
                self.integral()
            )));
        }
        Ok(())
    }
}

fn wrap(t: f64, beta: f64) -> f64 {
    let r = t.rem_euclid(beta);
    if r >= beta {
        0.0
    } else {
        r
    }
}

/// `W′_{r,n}(t) = r(−1)^{⌊2ⁿt/β⌋}`.
pub fn w_prime(r: f64, n: u32, beta: f64) -> Result<StepFunction> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    let m = 1usize << n;
    let breakpoints = (0..m).map(|k| k as f64 * beta / m as f64).collect();
    let values = (0..m).map(|k| if k % 2 == 0 { r } else { -r }).collect();
    StepFunction::new(beta, breakpoints, values)
}

/// `t ↦ f((β − t) mod β)`, right-continuous representative.
pub fn reflect_theta(f: &StepFunction) -> StepFunction {
    let cuts: Vec<f64> = f.breakpoints.iter().map(|&b| f.beta - b).collect();
    // midpoints avoid the measure-zero ambiguity at the cuts
    StepFunction::sample(f.beta, &cuts, |t| f.eval(f.beta - t))
}

fn half_split(hprime: &StepFunction, branch: Branch) -> Result<StepFunction> {
    hprime.check_zero_integral()?;
    let beta = hprime.beta;
    let mut cuts: Vec<f64> = hprime.breakpoints.clone();
    cuts.extend(hprime.breakpoints.iter().map(|&b| beta - b));
    cuts.push(beta / 2.0);
    let first_half = |t: f64| t < beta / 2.0;
    Ok(StepFunction::sample(beta, &cuts, |t| {
        let keep = match branch {
            Branch::Plus => first_half(t),
            Branch::Minus => !first_half(t),
        };
        if keep {
            hprime.eval(t)
        } else {
            -hprime.eval(beta - t)
        }
    }))
}

/// Weak derivative of `h₊`: `h′` on `(0, β/2)`, `−h′(θt)` on `(β/2, β)`.
pub fn plus_part(hprime: &StepFunction) -> Result<StepFunction> {
    half_split(hprime, Branch::Plus)
}

/// Weak derivative of `h₋`: `−h′(θt)` on `(0, β/2)`, `h′` on `(β/2, β)`.
pub fn minus_part(hprime: &StepFunction) -> Result<StepFunction> {
    half_split(hprime, Branch::Minus)
}

/// Symmetrization of `h` at `t0` with an explicit branch.
pub fn symmetrize(hprime: &StepFunction, t0: f64, branch: Branch) -> Result<StepFunction> {
    if !(0.0..hprime.beta / 2.0).contains(&t0) {
        return Err(domain(format!("t0 = {t0} outside [0, beta/2)")));
    }
    let shifted = hprime.shifted(t0);
    let part = half_split(&shifted, branch)?;
    Ok(part.shifted(-t0))
}

/// Symmetrization at `t0` keeping the branch with the larger score, ties to `+`.
pub fn symmetrize_by(
    hprime: &StepFunction,
    t0: f64,
    mut score: impl FnMut(&StepFunction) -> f64,
) -> Result<(StepFunction, Branch)> {
    let p = symmetrize(hprime, t0, Branch::Plus)?;
    let m = symmetrize(hprime, t0, Branch::Minus)?;
    if score(&p) >= score(&m) {
        Ok((p, Branch::Plus))
    } else {
        Ok((m, Branch::Minus))
    }
}

fn grid_values(hprime: &StepFunction) -> impl Fn(f64) -> f64 + '_ {
    move |t: f64| hprime.antiderivative(wrap(t, hprime.beta))
}

/// `g(t0 + s) = g(t0 − s)` on a grid of `CHECK_GRID` points.
pub fn is_symmetric_about(hprime: &StepFunction, t0: f64) -> bool {
    let g = grid_values(hprime);
    let beta = hprime.beta;
    (0..CHECK_GRID).all(|i| {
        let s = (i as f64 + 0.5) * beta / CHECK_GRID as f64;
        (g(t0 + s) - g(t0 - s)).abs() <= CHECK_TOL
    })
}

/// Whether `g` is a level-`n` snippet of `f` (both given by derivatives).
///
/// Functions are compared up to an additive constant, since only `h′` is
/// stored and `Z(h)` is blind to constants.
pub fn is_snippet(g: &StepFunction, f: &StepFunction, n: u32) -> bool {
    let beta = g.beta;
    let cells = 1usize << n;
    let w = beta / cells as f64;
    let per_cell = (CHECK_GRID / cells).max(64);
    let ts: Vec<f64> = (0..per_cell)
        .map(|i| (i as f64 + 0.5) * w / per_cell as f64)
        .collect();
    let gv = grid_values(g);
    let fv = grid_values(f);

    let mirror = (0..cells).all(|m| {
        let c = m as f64 * w;
        ts.iter().all(|&t| (gv(c + t) - gv(c - t)).abs() <= CHECK_TOL)
    });
    if !mirror {
        return false;
    }
    (0..cells).any(|k| {
        [1.0, -1.0].iter().any(|&sgn| {
            let diffs: Vec<f64> = ts
                .iter()
                .map(|&t| gv(t) - fv(k as f64 * w + sgn * t))
                .collect();
            let lo = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo <= CHECK_TOL
        })
    })
}

/// Exponent `−(1/δ) Σ_x Σ_j h′(t_j)(−1)^{ξ_x + j}` of the weight, `j` counted from 1.
pub fn zh_log_weight(cfg: &WorldlineConfig, hprime: &StepFunction, delta: f64) -> f64 {
    let mut acc = 0.0;
    for (x, flips) in cfg.flips.iter().enumerate() {
        let mut s = sign_of(cfg.xi[x]);
        for &t in flips {
            s = -s;
            acc += hprime.eval(t) * s;
        }
    }
    -acc / delta
}

/// Per-configuration weight whose `μ`-mean is `Z(h)/Z(0)`.
pub fn zh_weight(cfg: &WorldlineConfig, hprime: &StepFunction, delta: f64) -> f64 {
    zh_log_weight(cfg, hprime, delta).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(beta: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.37) * beta / n as f64).collect()
    }

    fn close_on_grid(a: &StepFunction, b: &StepFunction) -> bool {
        grid(a.beta, 4096)
            .iter()
            .all(|&t| (a.eval(t) - b.eval(t)).abs() < 1e-12)
    }

    /// A zero-mean derivative from arbitrary cut points and values.
    fn arb_hprime() -> impl Strategy<Value = StepFunction> {
        (
            0.3f64..3.0,
            proptest::collection::vec((0.0f64..1.0, -2.0f64..2.0), 1..6),
        )
            .prop_map(|(beta, pieces)| {
                let mut cuts: Vec<f64> = pieces.iter().map(|p| p.0 * beta).collect();
                cuts.push(0.0);
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                cuts.dedup();
                let vals: Vec<f64> = (0..cuts.len())
                    .map(|i| pieces.get(i).map(|p| p.1).unwrap_or(0.5))
                    .collect();
                let f = StepFunction::new(beta, cuts, vals).unwrap();
                let mean = f.integral() / beta;
                StepFunction::new(
                    beta,
                    f.breakpoints.clone(),
                    f.values.iter().map(|v| v - mean).collect(),
                )
                .unwrap()
            })
    }

    #[test]
    fn w_prime_shape() {
        let w = w_prime(0.7, 1, 2.0).unwrap();
        assert_eq!(w.eval(0.3), 0.7);
        assert_eq!(w.eval(1.3), -0.7);
        for n in 1..6 {
            let w = w_prime(1.3, n, 1.0).unwrap();
            assert_eq!(w.values.len(), 1 << n);
            assert_eq!(w.sup_norm(), 1.3);
            assert!(w.integral().abs() < 1e-14);
            let m = 1 << n;
            for k in 0..m {
                let mid = (k as f64 + 0.5) / m as f64;
                assert_eq!(w.eval(mid), if k % 2 == 0 { 1.3 } else { -1.3 });
            }
        }
        assert!(w_prime(1.0, 0, 1.0).is_err());
    }

    #[test]
    fn reflect_examples() {
        let c = StepFunction::constant(1.0, 2.5);
        assert!(close_on_grid(&reflect_theta(&c), &c));
        let ind = StepFunction::new(1.0, vec![0.0, 0.25], vec![1.0, 0.0]).unwrap();
        let r = reflect_theta(&ind);
        for &t in &grid(1.0, 1000) {
            let want = if t > 0.75 { 1.0 } else { 0.0 };
            assert_eq!(r.eval(t), want);
        }
        assert_eq!(r.eval(0.75), 1.0);
    }

    #[test]
    fn plus_minus_examples() {
        let w = w_prime(0.8, 1, 1.0).unwrap();
        assert!(close_on_grid(&plus_part(&w).unwrap(), &w));
        let z = StepFunction::constant(1.0, 0.0);
        assert!(close_on_grid(&plus_part(&z).unwrap(), &z));
        assert!(close_on_grid(&minus_part(&z).unwrap(), &z));
        let bad = StepFunction::constant(1.0, 1.0);
        assert!(plus_part(&bad).is_err());
        assert!(minus_part(&bad).is_err());
    }

    #[test]
    fn zh_weight_examples() {
        let cfg = WorldlineConfig {
            beta: 1.0,
            xi: vec![false],
            flips: vec![vec![0.2, 0.7]],
        };
        let zero = StepFunction::constant(1.0, 0.0);
        assert_eq!(zh_weight(&cfg, &zero, 0.5), 1.0);
        let w = w_prime(1.0, 1, 1.0).unwrap();
        let empty = WorldlineConfig::all_up(3, 1.0);
        assert_eq!(zh_weight(&empty, &w, 0.5), 1.0);
        let delta = 0.5;
        let want = (-(1.0 / delta) * (-w.eval(0.2) + w.eval(0.7))).exp();
        assert!((zh_weight(&cfg, &w, delta) - want).abs() < 1e-14);
    }

    #[test]
    fn snippet_examples() {
        let beta = 1.0;
        // an asymmetric zero-mean derivative
        let h = StepFunction::new(beta, vec![0.0, 0.25, 0.75, 0.875], vec![1.0, -0.5, 0.5, -0.5]).unwrap();
        let hp = plus_part(&h).unwrap();
        let hm = minus_part(&h).unwrap();
        assert!(is_snippet(&hp, &h, 1));
        assert!(is_snippet(&hm, &h, 1));
        // level 0 requires θ-symmetry of g itself
        assert!(is_snippet(&hp, &hp, 0));
        assert!(!is_snippet(&h, &h, 0));
        let w1 = w_prime(0.5, 1, beta).unwrap();
        for n in 1..5 {
            let wn = w_prime(0.5, n, beta).unwrap();
            assert!(is_snippet(&wn, &w1, n));
        }
        assert!(!is_snippet(&w_prime(0.5, 1, beta).unwrap(), &w_prime(0.5, 2, beta).unwrap(), 1));
    }

    #[test]
    fn symmetrize_at_zero_is_plus_part() {
        let h = StepFunction::new(2.0, vec![0.0, 0.3, 1.1], vec![1.0, -1.0, 0.25]).unwrap();
        let h = StepFunction::new(
            2.0,
            h.breakpoints.clone(),
            h.values.iter().map(|v| v - h.integral() / 2.0).collect(),
        )
        .unwrap();
        let s = symmetrize(&h, 0.0, Branch::Plus).unwrap();
        assert!(close_on_grid(&s, &plus_part(&h).unwrap()));
        assert!(symmetrize(&h, 1.0, Branch::Plus).is_err());
        let (g, b) = symmetrize_by(&h, 0.0, |_| 1.0).unwrap();
        assert_eq!(b, Branch::Plus);
        assert!(close_on_grid(&g, &s));
    }

    #[test]
    fn json_schema() {
        let w = w_prime(1.0, 2, 1.0).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.contains("breakpoints") && s.contains("values"));
        let back: StepFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<StepFunction>(r#"{"beta":1,"breakpoints":[0.5,0.1],"values":[1,2]}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn theta_is_involution(f in arb_hprime()) {
            prop_assert!(close_on_grid(&reflect_theta(&reflect_theta(&f)), &f));
        }

        #[test]
        fn plus_minus_are_theta_symmetric(h in arb_hprime()) {
            for part in [plus_part(&h).unwrap(), minus_part(&h).unwrap()] {
                prop_assert!(part.integral().abs() < 1e-10);
                prop_assert!(is_symmetric_about(&part, 0.0));
                prop_assert!(is_symmetric_about(&part, h.beta / 2.0));
            }
        }

        #[test]
        fn symmetrize_is_symmetric_and_idempotent(h in arb_hprime(), u in 0.0f64..0.5, plus in any::<bool>()) {
            let t0 = u * h.beta;
            let br = if plus { Branch::Plus } else { Branch::Minus };
            let g = symmetrize(&h, t0, br).unwrap();
            prop_assert!(is_symmetric_about(&g, t0));
            prop_assert!(is_symmetric_about(&g, t0 + h.beta / 2.0));
            let gg = symmetrize(&g, t0, br).unwrap();
            let ok = grid(h.beta, 2000).iter().all(|&t| (g.eval(t) - gg.eval(t)).abs() < 1e-9);
            prop_assert!(ok);
        }

        #[test]
        fn weight_times_flipped_weight_is_one(h in arb_hprime(), flips in proptest::collection::vec(0.0f64..1.0, 0..8), xi in any::<bool>()) {
            let mut f: Vec<f64> = flips.iter().map(|u| u * h.beta).collect();
            f.sort_by(|a, b| a.partial_cmp(b).unwrap());
            f.dedup();
            if f.len() % 2 == 1 { f.pop(); }
            let cfg = WorldlineConfig { beta: h.beta, xi: vec![xi, !xi], flips: vec![f.clone(), f] };
            let a = zh_weight(&cfg, &h, 0.7);
            let b = zh_weight(&cfg.global_flip(), &h, 0.7);
            prop_assert!((a * b - 1.0).abs() < 1e-12);
        }
    }
}
