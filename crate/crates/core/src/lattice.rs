//! The torus `(Z/side)^d`, its adjacency, graph Laplacian and momentum grid.
//!
//! Sites are encoded as mixed-radix integers in row-major order (the first
//! coordinate is the most significant digit). Momenta use the same encoding
//! on their integer labels `m`, with `k_j = 2π m_j / side`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

/// A hypercubic torus of even side length.
///
/// `d = 0` is accepted as the single-site system (one site, no edges).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusSpec {
    pub d: usize,
    pub side: usize,
}

impl TorusSpec {
    pub fn new(d: usize, side: usize) -> Result<Self> {
        if side < 2 || !side.is_multiple_of(2) {
            return Err(invalid("side", format!("must be even and >= 2, got {side}")));
        }
        let spec = TorusSpec { d, side };
        if (side as f64).powi(d as i32) > (1u64 << 40) as f64 {
            return Err(invalid("d", "torus too large"));
        }
        Ok(spec)
    }

    /// One isolated site.
    pub fn single_site() -> Self {
        TorusSpec { d: 0, side: 2 }
    }

    pub fn n_sites(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    /// Non-fatal remarks about the geometry.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.side == 2 && self.d > 0 {
            w.push(
                "side-2 torus: the +1 and -1 neighbours coincide and each bond is counted once; \
                 Laplacian row sums are nonzero"
                    .to_string(),
            );
        }
        w
    }

    fn check_site(&self, x: usize) -> Result<()> {
        if x >= self.n_sites() {
            return Err(domain(format!("site {x} out of range for {} sites", self.n_sites())));
        }
        Ok(())
    }

    pub fn coords(&self, mut x: usize) -> Vec<usize> {
        let mut c = vec![0; self.d];
        for j in (0..self.d).rev() {
            c[j] = x % self.side;
            x /= self.side;
        }
        c
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.side + c % self.side)
    }

    /// `x + a` componentwise mod side.
    pub fn add(&self, x: usize, a: usize) -> usize {
        let (cx, ca) = (self.coords(x), self.coords(a));
        let c: Vec<usize> = cx.iter().zip(&ca).map(|(p, q)| (p + q) % self.side).collect();
        self.site(&c)
    }

    /// `-x` componentwise mod side.
    pub fn neg(&self, x: usize) -> usize {
        let c: Vec<usize> = self
            .coords(x)
            .iter()
            .map(|&p| (self.side - p) % self.side)
            .collect();
        self.site(&c)
    }

    /// `y - x` componentwise mod side.
    pub fn displacement(&self, x: usize, y: usize) -> usize {
        self.add(y, self.neg(x))
    }

    /// Sites adjacent to `x`, in axis order, `+1` before `-1`.
    pub fn neighbors(&self, x: usize) -> Result<Vec<usize>> {
        self.check_site(x)?;
        let c = self.coords(x);
        let mut out = Vec::with_capacity(2 * self.d);
        for j in 0..self.d {
            for step in [1, self.side - 1] {
                let mut cy = c.clone();
                cy[j] = (cy[j] + step) % self.side;
                let y = self.site(&cy);
                if !out.contains(&y) {
                    out.push(y);
                }
            }
        }
        Ok(out)
    }

    pub fn is_adjacent(&self, x: usize, y: usize) -> bool {
        let (cx, cy) = (self.coords(x), self.coords(y));
        let mut diff = 0;
        for (a, b) in cx.iter().zip(&cy) {
            let delta = (a + self.side - b) % self.side;
            if delta == 0 {
                continue;
            }
            if delta != 1 && delta != self.side - 1 {
                return false;
            }
            diff += 1;
        }
        diff == 1
    }

    /// Every unordered nearest-neighbour pair exactly once, as `(x, y)` with `x < y`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for x in 0..self.n_sites() {
            for y in self.neighbors(x).expect("valid site") {
                if x < y {
                    e.push((x, y));
                }
            }
        }
        e
    }

    /// Adjacency lists for all sites.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n_sites())
            .map(|x| self.neighbors(x).expect("valid site"))
            .collect()
    }

    /// `L(x,y) = d·1{x=y} − ½·1{x∼y}`.
    pub fn laplacian_entry(&self, x: usize, y: usize) -> Result<f64> {
        self.check_site(x)?;
        self.check_site(y)?;
        if x == y {
            Ok(self.d as f64)
        } else if self.is_adjacent(x, y) {
            Ok(-0.5)
        } else {
            Ok(0.0)
        }
    }

    /// `½ Σ_{x∼y} (u(x) − u(y))²` over unordered edges.
    pub fn laplacian_quadratic_form(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.n_sites() {
            return Err(domain(format!(
                "vector has {} entries, torus has {} sites",
                u.len(),
                self.n_sites()
            )));
        }
        Ok(0.5
            * self
                .edges()
                .iter()
                .map(|&(x, y)| (u[x] - u[y]).powi(2))
                .sum::<f64>())
    }

    /// All `side^d` momenta, ordered by mixed-radix label.
    pub fn momentum_grid(&self) -> Vec<Momentum> {
        (0..self.n_sites())
            .map(|i| Momentum {
                m: self.coords(i),
                side: self.side,
            })
            .collect()
    }

    pub fn momentum(&self, index: usize) -> Momentum {
        Momentum {
            m: self.coords(index),
            side: self.side,
        }
    }

    /// The hyperoctahedral group of axis permutations and reflections.
    pub fn point_group(&self) -> Vec<AxisMap> {
        let mut perms = Vec::new();
        permutations(&mut (0..self.d).collect::<Vec<_>>(), 0, &mut perms);
        let mut out = Vec::new();
        for p in perms {
            for mask in 0..(1usize << self.d) {
                out.push(AxisMap {
                    perm: p.clone(),
                    flip: (0..self.d).map(|j| mask >> j & 1 == 1).collect(),
                });
            }
        }
        out
    }
}

fn permutations(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, out);
        v.swap(k, i);
    }
}

/// A signed axis permutation: `(Rx)_j = ±x_{perm[j]}`, minus when `flip[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisMap {
    pub perm: Vec<usize>,
    pub flip: Vec<bool>,
}

impl AxisMap {
    /// Apply to a mixed-radix label (site or momentum, same encoding).
    pub fn apply(&self, spec: &TorusSpec, x: usize) -> usize {
        let c = spec.coords(x);
        let out: Vec<usize> = (0..spec.d)
            .map(|j| {
                let v = c[self.perm[j]];
                if self.flip[j] {
                    (spec.side - v) % spec.side
                } else {
                    v
                }
            })
            .collect();
        spec.site(&out)
    }
}

/// A lattice momentum `k = 2π m / side`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Momentum {
    /// Integer labels in `[0, side)`.
    pub m: Vec<usize>,
    pub side: usize,
}

impl Momentum {
    pub fn zero(d: usize, side: usize) -> Self {
        Momentum { m: vec![0; d], side }
    }

    /// Components in the fundamental domain `(−π, π]`.
    pub fn components(&self) -> Vec<f64> {
        self.m
            .iter()
            .map(|&m| {
                let m = if 2 * m > self.side {
                    m as f64 - self.side as f64
                } else {
                    m as f64
                };
                2.0 * PI * m / self.side as f64
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|&m| m == 0)
    }

    /// Mixed-radix label, matching `TorusSpec::momentum_grid` order.
    pub fn index(&self) -> usize {
        self.m.iter().fold(0, |acc, &c| acc * self.side + c)
    }

    pub fn neg(&self) -> Momentum {
        Momentum {
            m: self.m.iter().map(|&m| (self.side - m) % self.side).collect(),
            side: self.side,
        }
    }

    /// `side·(k·x)/2π mod side`, so that `e^{ik·x} = e^{2πi·r/side}`.
    pub fn phase_units(&self, spec: &TorusSpec, x: usize) -> usize {
        spec.coords(x)
            .iter()
            .zip(&self.m)
            .map(|(a, b)| a * b)
            .sum::<usize>()
            % self.side
    }

    /// `k·x` in radians.
    pub fn dot(&self, spec: &TorusSpec, x: usize) -> f64 {
        2.0 * PI * self.phase_units(spec, x) as f64 / self.side as f64
    }
}

/// `L̂(k) = Σ_j (1 − cos k_j)`.
pub fn lhat(k: &Momentum) -> f64 {
    k.components().iter().map(|c| 1.0 - c.cos()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ring_and_square_neighbors() {
        let ring = TorusSpec::new(1, 4).unwrap();
        assert_eq!(ring.neighbors(0).unwrap(), vec![1, 3]);
        let sq = TorusSpec::new(2, 4).unwrap();
        let mut n = sq.neighbors(0).unwrap();
        n.sort();
        let mut want = vec![
            sq.site(&[1, 0]),
            sq.site(&[3, 0]),
            sq.site(&[0, 1]),
            sq.site(&[0, 3]),
        ];
        want.sort();
        assert_eq!(n, want);
        assert!(ring.neighbors(4).is_err());
    }

    #[test]
    fn side_two_has_single_bond() {
        let t = TorusSpec::new(1, 2).unwrap();
        assert_eq!(t.neighbors(0).unwrap(), vec![1]);
        // brute-force the adjacency predicate over all pairs
        let mut pairs = Vec::new();
        for x in 0..2 {
            for y in (x + 1)..2 {
                if t.is_adjacent(x, y) {
                    pairs.push((x, y));
                }
            }
        }
        assert_eq!(pairs, t.edges());
        assert_eq!(t.edges().len(), 1);
        assert!(!t.warnings().is_empty());
    }

    #[test]
    fn odd_side_rejected() {
        assert!(TorusSpec::new(1, 3).is_err());
        assert!(TorusSpec::new(2, 0).is_err());
    }

    #[test]
    fn laplacian_entries() {
        let t1 = TorusSpec::new(1, 4).unwrap();
        assert_eq!(t1.laplacian_entry(2, 2).unwrap(), 1.0);
        assert_eq!(t1.laplacian_entry(0, 1).unwrap(), -0.5);
        assert_eq!(t1.laplacian_entry(0, 2).unwrap(), 0.0);
        let t3 = TorusSpec::new(3, 4).unwrap();
        assert_eq!(t3.laplacian_entry(5, 5).unwrap(), 3.0);
    }

    #[test]
    fn quadratic_form_examples() {
        let t = TorusSpec::new(1, 4).unwrap();
        assert_eq!(t.laplacian_quadratic_form(&[2.0; 4]).unwrap(), 0.0);
        assert_eq!(t.laplacian_quadratic_form(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(t.laplacian_quadratic_form(&[1.0; 3]).is_err());
    }

    #[test]
    fn row_sums_vanish_for_side_four_and_up() {
        for (d, side) in [(1, 4), (2, 4), (1, 6), (3, 4)] {
            let t = TorusSpec::new(d, side).unwrap();
            for x in 0..t.n_sites() {
                let s: f64 = (0..t.n_sites()).map(|y| t.laplacian_entry(x, y).unwrap()).sum();
                assert!(s.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lhat_examples() {
        let t = TorusSpec::new(2, 4).unwrap();
        assert_eq!(lhat(&Momentum::zero(2, 4)), 0.0);
        let k = Momentum { m: vec![1, 2], side: 4 };
        assert!((lhat(&k) - 3.0).abs() < 1e-14);
        let k1 = Momentum { m: vec![1], side: 2 };
        assert!((lhat(&k1) - 2.0).abs() < 1e-14);
        for k in t.momentum_grid() {
            let v = lhat(&k);
            assert!((0.0..=4.0 + 1e-14).contains(&v));
            assert_eq!(v < 1e-14, k.is_zero());
        }
    }

    #[test]
    fn momentum_grids() {
        let t = TorusSpec::new(1, 2).unwrap();
        let c: Vec<f64> = t.momentum_grid().iter().map(|k| k.components()[0]).collect();
        assert_eq!(c, vec![0.0, PI]);
        let t = TorusSpec::new(1, 4).unwrap();
        let c: Vec<f64> = t.momentum_grid().iter().map(|k| k.components()[0]).collect();
        let want = [0.0, PI / 2.0, PI, -PI / 2.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = TorusSpec::new(2, 4).unwrap();
        let g = t.momentum_grid();
        assert_eq!(g.len(), 16);
        let mut idx: Vec<usize> = g.iter().map(|k| k.index()).collect();
        idx.dedup();
        assert_eq!(idx.len(), 16);
    }

    #[test]
    fn single_site_geometry() {
        let t = TorusSpec::single_site();
        assert_eq!(t.n_sites(), 1);
        assert!(t.edges().is_empty());
        assert!(t.neighbors(0).unwrap().is_empty());
        assert_eq!(t.momentum_grid().len(), 1);
    }

    #[test]
    fn point_group_preserves_adjacency() {
        let t = TorusSpec::new(2, 4).unwrap();
        let g = t.point_group();
        assert_eq!(g.len(), 8);
        for r in &g {
            for (x, y) in t.edges() {
                assert!(t.is_adjacent(r.apply(&t, x), r.apply(&t, y)));
            }
        }
    }

    proptest! {
        #[test]
        fn quadratic_form_matches_matrix(u in proptest::collection::vec(-5.0f64..5.0, 16)) {
            let t = TorusSpec::new(2, 4).unwrap();
            let q = t.laplacian_quadratic_form(&u).unwrap();
            let mut m = 0.0;
            for x in 0..16 {
                for y in 0..16 {
                    m += t.laplacian_entry(x, y).unwrap() * u[x] * u[y];
                }
            }
            prop_assert!((q - m).abs() <= 1e-10 * (1.0 + m.abs()));
            prop_assert!(q >= 0.0);
        }
    }
}
