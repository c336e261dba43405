//! Sector-resolved exact diagonalization for tori beyond the dense cap.
//!
//! The Hamiltonian commutes with lattice translations `T_a` and the global
//! spin flip `F`, so it is block diagonal in sectors `(q, p)` of total
//! momentum `q` and flip parity `p = ±1`. Within a sector the antiunitary
//! `PK` (site inversion composed with complex conjugation) fixes the sector
//! and commutes with `H`, which gives a basis where every block is real.
//!
//! `S_{−k} = Σ_x e^{−ik·x} σ³_x` maps sector `(q, p)` to `(q + k, −p)`, so
//! each unordered pair of opposite-parity sectors carries the spectral
//! weight of ĉ at two opposite momenta. Pairs related by a lattice point
//! symmetry carry identical weight and are computed once.
//!
//! Energies are computed for `δ = 1`; `H(λ, δ) = δ·H(λ/δ, 1)` maps them to
//! any other `δ` with `β → δβ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::kernels::{resolvent_sums, time_profile};
use super::linalg::{dgemm, syevd, syevd_values};
use super::{diagonal_energy, spin, ChatTable, IMAG_TOL};
use crate::error::{domain, Result};
use crate::lattice::TorusSpec;
use crate::quad::NodeSet;

/// Largest torus handled here (symmetry tables have `2^|Λ|` entries).
pub const MAX_SECTOR_SITES: usize = 20;

const NONE: u32 = u32::MAX;

/// Orbits of basis states under translations and the global flip.
#[derive(Debug)]
pub struct SymmetryTables {
    spec: TorusSpec,
    n_sites: usize,
    /// Orbit representative index of each basis state.
    rep_of: Vec<u32>,
    /// `(a, f)` with `state = T_a F^f · rep`.
    elem: Vec<(u16, bool)>,
    /// Representative states, ascending.
    reps: Vec<u32>,
    stabilizers: Vec<Vec<(u16, bool)>>,
    /// Basis state label of `P·rep` (site inversion).
    inverted: Vec<u32>,
}

impl SymmetryTables {
    pub fn new(spec: &TorusSpec) -> Result<Self> {
        let n = spec.n_sites();
        if n > MAX_SECTOR_SITES {
            return Err(domain(format!("sector diagonalization is capped at {MAX_SECTOR_SITES} sites")));
        }
        let dim = 1usize << n;
        let full = (dim - 1) as u32;
        let shift: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|x| spec.add(x, a)).collect()).collect();
        let translate = |a: usize, s: u32| -> u32 {
            let mut out = 0u32;
            for (x, &y) in shift[a].iter().enumerate() {
                out |= (s >> x & 1) << y;
            }
            out
        };
        let mut rep_of = vec![NONE; dim];
        let mut elem = vec![(0u16, false); dim];
        let mut reps = Vec::new();
        let mut stabilizers = Vec::new();
        for s in 0..dim as u32 {
            if rep_of[s as usize] != NONE {
                continue;
            }
            let idx = reps.len() as u32;
            reps.push(s);
            let mut stab = Vec::new();
            for a in 0..n {
                let ts = translate(a, s);
                for f in [false, true] {
                    let g = if f { ts ^ full } else { ts };
                    if rep_of[g as usize] == NONE {
                        rep_of[g as usize] = idx;
                        elem[g as usize] = (a as u16, f);
                    }
                    if g == s {
                        stab.push((a as u16, f));
                    }
                }
            }
            stabilizers.push(stab);
        }
        let inv: Vec<usize> = (0..n).map(|x| spec.neg(x)).collect();
        let inverted = reps
            .iter()
            .map(|&s| {
                let mut out = 0u32;
                for (x, &y) in inv.iter().enumerate() {
                    out |= (s >> x & 1) << y;
                }
                out
            })
            .collect();
        Ok(SymmetryTables {
            spec: *spec,
            n_sites: n,
            rep_of,
            elem,
            reps,
            stabilizers,
            inverted,
        })
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn n_orbits(&self) -> usize {
        self.reps.len()
    }

    /// `χ_{q,p}(T_a F^f) = e^{iq·a} p^f`, as a multiple of `π/side`.
    fn char_units(&self, q: usize, parity: i8, a: u16, f: bool) -> usize {
        let side = self.spec.side;
        let k = self.spec.momentum(q);
        let mut u = 2 * k.phase_units(&self.spec, a as usize);
        if f && parity < 0 {
            u += side;
        }
        u % (2 * side)
    }

    fn character(&self, q: usize, parity: i8, a: u16, f: bool) -> Complex64 {
        let u = self.char_units(q, parity, a, f);
        Complex64::from_polar(1.0, PI * u as f64 / self.spec.side as f64)
    }

    fn compatible(&self, r: usize, q: usize, parity: i8) -> bool {
        self.stabilizers[r].iter().all(|&(a, f)| self.char_units(q, parity, a, f) == 0)
    }
}

/// Real (PK-invariant) basis of one sector.
#[derive(Clone, Debug)]
struct SectorBasis {
    /// Orbit indices of the sector's representatives.
    reps: Vec<u32>,
    /// Position of each orbit in `reps`, or `NONE`.
    pos: Vec<u32>,
    /// Basis vectors as combinations of `|r̄⟩`.
    vectors: Vec<Vec<(u32, Complex64)>>,
    /// `|r̄⟩` as combinations of basis vectors, by position.
    expand: Vec<Vec<(u32, Complex64)>>,
}

impl SectorBasis {
    fn new(t: &SymmetryTables, q: usize, parity: i8) -> Self {
        let reps: Vec<u32> = (0..t.n_orbits())
            .filter(|&r| t.compatible(r, q, parity))
            .map(|r| r as u32)
            .collect();
        let mut pos = vec![NONE; t.n_orbits()];
        for (i, &r) in reps.iter().enumerate() {
            pos[r as usize] = i as u32;
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let i1 = Complex64::new(0.0, 1.0);
        let mut vectors = Vec::with_capacity(reps.len());
        let mut expand = vec![Vec::new(); reps.len()];
        for (i, &r) in reps.iter().enumerate() {
            let pr = t.inverted[r as usize] as usize;
            let partner = t.rep_of[pr];
            let (a, f) = t.elem[pr];
            let phi = t.character(q, parity, a, f);
            let j = pos[partner as usize];
            debug_assert_ne!(j, NONE);
            if partner == r {
                let c = Complex64::from_polar(1.0, phi.arg() / 2.0);
                expand[i].push((vectors.len() as u32, c.conj()));
                vectors.push(vec![(i as u32, c)]);
            } else if partner > r {
                let b = vectors.len() as u32;
                vectors.push(vec![(i as u32, Complex64::new(s, 0.0)), (j, phi * s)]);
                vectors.push(vec![(i as u32, i1 * s), (j, -i1 * phi * s)]);
                expand[i].extend([(b, Complex64::new(s, 0.0)), (b + 1, -i1 * s)]);
                expand[j as usize].extend([(b, phi.conj() * s), (b + 1, i1 * phi.conj() * s)]);
            }
        }
        SectorBasis {
            reps,
            pos,
            vectors,
            expand,
        }
    }

    fn conj(&self) -> Self {
        let c = |v: &Vec<Vec<(u32, Complex64)>>| -> Vec<Vec<(u32, Complex64)>> {
            v.iter().map(|l| l.iter().map(|&(i, z)| (i, z.conj())).collect()).collect()
        };
        SectorBasis {
            reps: self.reps.clone(),
            pos: self.pos.clone(),
            vectors: c(&self.vectors),
            expand: c(&self.expand),
        }
    }

    fn dim(&self) -> usize {
        self.reps.len()
    }
}

/// Real symmetric block of `H(ρ, 1)` in a sector basis.
fn sector_hamiltonian(t: &SymmetryTables, b: &SectorBasis, q: usize, parity: i8, rho: f64) -> Result<Vec<f64>> {
    let n = b.dim();
    let edges = t.spec.edges();
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for (c, u) in b.vectors.iter().enumerate() {
        col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for &(p, coef) in u {
            let r = b.reps[p as usize] as usize;
            let s = t.reps[r] as usize;
            col[p as usize] += coef * diagonal_energy(&edges, t.n_sites, rho, 0.0, s);
            let norm_r = t.stabilizers[r].len() as f64;
            for x in 0..t.n_sites {
                let s2 = s ^ (1 << x);
                let r2 = t.rep_of[s2] as usize;
                let p2 = b.pos[r2];
                if p2 == NONE {
                    continue;
                }
                let (a, f) = t.elem[s2];
                let amp = -t.character(q, parity, a, f) * (t.stabilizers[r2].len() as f64 / norm_r).sqrt();
                col[p2 as usize] += coef * amp;
            }
        }
        for (p, &v) in col.iter().enumerate() {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(a, e) in &b.expand[p] {
                h[c * n + a as usize] += e * v;
            }
        }
    }
    let worst = h.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if worst > 1e-10 {
        return Err(domain(format!("sector block is not real (residue {worst})")));
    }
    Ok(h.iter().map(|z| z.re).collect())
}

#[derive(Debug)]
struct Eigen {
    energies: Vec<f64>,
    vectors: Vec<f64>,
}

#[derive(Debug)]
struct Sector {
    q: usize,
    parity: i8,
    basis: SectorBasis,
    /// Index of the sector whose eigenpairs are shared (itself or `−q`).
    eigen_from: usize,
}

fn sector_index(q: usize, parity: i8) -> usize {
    2 * q + usize::from(parity < 0)
}

/// Per-β output of [`SectorSpectrum::analyze`], in units where `δ = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct UnitResult {
    pub beta: f64,
    /// `chat[k][j]` for `j = 0..=J`.
    pub chat: Vec<Vec<f64>>,
    pub max_imag: f64,
    pub bubble: f64,
    pub bubble_err: f64,
}

/// All sector spectra of `H(ρ, 1)` on one torus.
#[derive(Debug)]
pub struct SectorSpectrum<'a> {
    tables: &'a SymmetryTables,
    pub rho: f64,
    sectors: Vec<Sector>,
    eigen: Vec<Option<Eigen>>,
    /// Unordered sector pairs to evaluate, each with its symmetry images.
    pairs: Vec<((usize, usize), Vec<(usize, usize)>)>,
    e_min: f64,
    e_max: f64,
}

impl<'a> SectorSpectrum<'a> {
    /// Diagonalize every sector needed for ĉ; `point_group` enables the
    /// reduction of sector pairs by lattice point symmetries.
    pub fn new(tables: &'a SymmetryTables, rho: f64, point_group: bool) -> Result<Self> {
        let spec = &tables.spec;
        let nq = spec.n_sites();
        let pairs = pair_orbits(spec, point_group);
        let mut needed = vec![false; 2 * nq];
        for ((qp, qm), _) in &pairs {
            needed[sector_index(*qp, 1)] = true;
            needed[sector_index(*qm, -1)] = true;
        }
        let mut sectors: Vec<Sector> = Vec::with_capacity(2 * nq);
        let mut eigen: Vec<Option<Eigen>> = (0..2 * nq).map(|_| None).collect();
        for q in 0..nq {
            for parity in [1i8, -1] {
                let idx = sector_index(q, parity);
                let mq = spec.momentum(q).neg().index();
                let partner = sector_index(mq, parity);
                let (basis, eigen_from) = if partner < idx {
                    (sectors[partner].basis.conj(), partner)
                } else {
                    (SectorBasis::new(tables, q, parity), idx)
                };
                sectors.push(Sector {
                    q,
                    parity,
                    basis,
                    eigen_from,
                });
            }
        }
        // eigenvectors where ĉ needs them, eigenvalues alone elsewhere
        let mut want_vectors = vec![false; 2 * nq];
        for idx in 0..2 * nq {
            if needed[idx] {
                want_vectors[sectors[idx].eigen_from] = true;
            }
        }
        let mut e_min = f64::INFINITY;
        let mut e_max = f64::NEG_INFINITY;
        for idx in 0..2 * nq {
            if sectors[idx].eigen_from != idx {
                continue;
            }
            let s = &sectors[idx];
            let mut h = sector_hamiltonian(tables, &s.basis, s.q, s.parity, rho)?;
            let energies = if want_vectors[idx] {
                syevd(s.basis.dim(), &mut h)?
            } else {
                let e = syevd_values(s.basis.dim(), &mut h)?;
                h = Vec::new();
                e
            };
            if let (Some(a), Some(b)) = (energies.first(), energies.last()) {
                e_min = e_min.min(*a);
                e_max = e_max.max(*b);
            }
            eigen[idx] = Some(Eigen { energies, vectors: h });
        }
        Ok(SectorSpectrum {
            tables,
            rho,
            sectors,
            eigen,
            pairs,
            e_min,
            e_max,
        })
    }

    fn eigen_of(&self, idx: usize) -> &Eigen {
        self.eigen[self.sectors[idx].eigen_from].as_ref().unwrap()
    }

    /// All energies, unsorted.
    pub fn energies(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for idx in 0..self.sectors.len() {
            out.extend_from_slice(&self.eigen_of(idx).energies);
        }
        out
    }

    /// `|⟨n|S_{−k}|m⟩|²` between source sector `a` and target sector `b`.
    fn weights(&self, a: usize, b: usize) -> Vec<f64> {
        let t = self.tables;
        let spec = &t.spec;
        let (sa, sb) = (&self.sectors[a], &self.sectors[b]);
        let k = spec.momentum(momentum_difference(spec, sa.q, sb.q));
        let phases: Vec<Complex64> = (0..t.n_sites)
            .map(|x| Complex64::from_polar(1.0, -k.dot(spec, x)))
            .collect();
        let (na, nb) = (sa.basis.dim(), sb.basis.dim());
        // sparse real matrix of S_{−k} from basis a to basis b
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut acc: BTreeMap<u32, Complex64> = BTreeMap::new();
        for (col, u) in sa.basis.vectors.iter().enumerate() {
            acc.clear();
            for &(p, c) in u {
                let r = sa.basis.reps[p as usize] as usize;
                let pb = sb.basis.pos[r];
                if pb == NONE {
                    continue;
                }
                let s = t.reps[r] as usize;
                let sk: Complex64 = phases.iter().enumerate().map(|(x, ph)| ph * spin(s, x)).sum();
                for &(row, e) in &sb.basis.expand[pb as usize] {
                    *acc.entry(row).or_insert(Complex64::new(0.0, 0.0)) += c * sk * e;
                }
            }
            for (&row, v) in &acc {
                debug_assert!(v.im.abs() < 1e-9);
                if v.re != 0.0 {
                    triplets.push((row as usize, col, v.re));
                }
            }
        }
        let (ea, eb) = (self.eigen_of(a), self.eigen_of(b));
        // Y = S·V_a, then M = V_bᵀ Y
        let mut y = vec![0.0; nb * na];
        for m in 0..na {
            let va = &ea.vectors[m * na..(m + 1) * na];
            let ym = &mut y[m * nb..(m + 1) * nb];
            for &(row, col, v) in &triplets {
                ym[row] += v * va[col];
            }
        }
        let mut mat = vec![0.0; nb * na];
        dgemm(b'T', b'N', nb, na, nb, &eb.vectors, &y, &mut mat);
        mat.iter_mut().for_each(|v| *v *= *v);
        mat
    }

    /// ĉ on `j = 0..=jmax` and the directly integrated bubble diagram for each β.
    pub fn analyze(&self, betas: &[f64], jmax: usize) -> Vec<UnitResult> {
        let spec = &self.tables.spec;
        let nk = spec.n_sites();
        let shift = |e: &[f64]| -> Vec<f64> { e.iter().map(|v| v - self.e_min).collect() };
        let all = shift(&self.energies());
        let width = self.e_max - self.e_min;
        struct Acc {
            re: Vec<Vec<f64>>,
            im: Vec<Vec<f64>>,
            prof: Vec<Vec<f64>>,
            nodes: NodeSet,
            ls: Vec<f64>,
        }
        let mut accs: Vec<Acc> = betas
            .iter()
            .map(|&beta| {
                let nodes = NodeSet::for_spectrum(beta, width);
                Acc {
                    re: vec![vec![0.0; jmax + 1]; nk],
                    im: vec![vec![0.0; jmax + 1]; nk],
                    prof: vec![vec![0.0; nodes.len()]; nk],
                    ls: (0..=jmax).map(|j| 2.0 * PI * j as f64 / beta).collect(),
                    nodes,
                }
            })
            .collect();
        for ((qp, qm), members) in &self.pairs {
            let a = sector_index(*qp, 1);
            let b = sector_index(*qm, -1);
            let w = self.weights(a, b);
            let ea = shift(&self.eigen_of(a).energies);
            let eb = shift(&self.eigen_of(b).energies);
            for (acc, &beta) in accs.iter_mut().zip(betas) {
                let (re, im) = resolvent_sums(&ea, &eb, &w, beta, &acc.ls);
                let prof = time_profile(&ea, &eb, &w, beta, &acc.nodes.t);
                for &(mp, mm) in members {
                    let k = momentum_difference(spec, mp, mm);
                    let kneg = spec.momentum(k).neg().index();
                    for j in 0..=jmax {
                        acc.re[k][j] += re[j];
                        acc.im[k][j] += im[j];
                        acc.re[kneg][j] += re[j];
                        acc.im[kneg][j] -= im[j];
                    }
                    let nt = prof.len();
                    for i in 0..nt {
                        acc.prof[k][i] += prof[i];
                        acc.prof[kneg][i] += prof[nt - 1 - i];
                    }
                }
            }
        }
        accs.into_iter()
            .zip(betas)
            .map(|(acc, &beta)| {
                let z: f64 = all.iter().map(|e| (-beta * e).exp()).sum();
                let norm = z * nk as f64;
                let mut max_imag: f64 = 0.0;
                let chat: Vec<Vec<f64>> = acc
                    .re
                    .iter()
                    .zip(&acc.im)
                    .map(|(r, i)| {
                        max_imag = i.iter().fold(max_imag, |m, v| m.max((v / norm).abs()));
                        r.iter().map(|v| v / norm).collect()
                    })
                    .collect();
                let mut bubble = 0.0;
                let mut bubble_err = 0.0;
                for p in &acc.prof {
                    let sq: Vec<f64> = p.iter().map(|v| (v / norm).powi(2)).collect();
                    let (v, e) = acc.nodes.integrate(&sq);
                    bubble += v;
                    bubble_err += e;
                }
                UnitResult {
                    beta,
                    chat,
                    max_imag,
                    bubble: bubble / nk as f64,
                    bubble_err: bubble_err / nk as f64,
                }
            })
            .collect()
    }
}

/// Label of `q₋ − q₊`.
fn momentum_difference(spec: &TorusSpec, qp: usize, qm: usize) -> usize {
    let (a, b) = (spec.momentum(qp), spec.momentum(qm));
    let m: Vec<usize> = a.m.iter().zip(&b.m).map(|(x, y)| (y + spec.side - x) % spec.side).collect();
    crate::lattice::Momentum { m, side: spec.side }.index()
}

/// Unordered pairs `{(q₊, +), (q₋, −)}` grouped into point-symmetry orbits;
/// each entry is the orbit representative with all distinct members.
fn pair_orbits(spec: &TorusSpec, point_group: bool) -> Vec<((usize, usize), Vec<(usize, usize)>)> {
    let nq = spec.n_sites();
    let group = if point_group && spec.d > 0 {
        spec.point_group()
    } else {
        Vec::new()
    };
    let mut seen = vec![false; nq * nq];
    let mut out = Vec::new();
    for qp in 0..nq {
        for qm in 0..nq {
            if seen[qp * nq + qm] {
                continue;
            }
            let mut members = vec![(qp, qm)];
            for g in &group {
                let img = (g.apply(spec, qp), g.apply(spec, qm));
                if !members.contains(&img) {
                    members.push(img);
                }
            }
            for &(a, b) in &members {
                seen[a * nq + b] = true;
            }
            out.push(((qp, qm), members));
        }
    }
    out
}

/// Exact ĉ table and bubble diagram at one physical parameter point.
#[derive(Clone, Debug, Serialize)]
pub struct ExactPoint {
    pub lambda: f64,
    pub delta: f64,
    pub beta: f64,
    pub table: ChatTable,
    /// `Σ_x ∫ c² dt` by quadrature.
    pub bubble: f64,
    pub bubble_err: f64,
}

/// ĉ tables and bubble diagrams on a parameter grid; points sharing `λ/δ`
/// reuse one set of sector spectra.
pub fn exact_points(
    tables: &SymmetryTables,
    couplings: &[(f64, f64)],
    betas: &[f64],
    jmax: usize,
) -> Result<Vec<ExactPoint>> {
    for &(l, d) in couplings {
        if d <= 0.0 || l < 0.0 {
            return Err(domain("need λ ≥ 0 and δ > 0"));
        }
    }
    let mut classes: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for &(l, d) in couplings {
        classes.entry((l / d).to_bits()).or_default().push((l, d));
    }
    let mut out = Vec::new();
    for (rho_bits, members) in classes {
        let spectrum = SectorSpectrum::new(tables, f64::from_bits(rho_bits), true)?;
        let mut unit_betas: Vec<f64> = Vec::new();
        for &(_, d) in &members {
            for &b in betas {
                let ub = d * b;
                if !unit_betas.iter().any(|v| (v - ub).abs() <= 1e-14 * ub) {
                    unit_betas.push(ub);
                }
            }
        }
        let results = spectrum.analyze(&unit_betas, jmax);
        for &(l, d) in &members {
            for &b in betas {
                let r = results
                    .iter()
                    .find(|r| (r.beta - d * b).abs() <= 1e-14 * d * b)
                    .unwrap();
                if r.max_imag / d > IMAG_TOL {
                    return Err(domain(format!("ĉ imaginary residue {} exceeds tolerance", r.max_imag / d)));
                }
                let values = r
                    .chat
                    .iter()
                    .map(|row| {
                        (-(jmax as i64)..=jmax as i64)
                            .map(|j| row[j.unsigned_abs() as usize] / d)
                            .collect()
                    })
                    .collect();
                out.push(ExactPoint {
                    lambda: l,
                    delta: d,
                    beta: b,
                    table: ChatTable {
                        spec: tables.spec,
                        beta: b,
                        jmax,
                        values,
                        max_imag: r.max_imag / d,
                    },
                    bubble: r.bubble / d,
                    bubble_err: r.bubble_err / d,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        (a.lambda, a.delta, a.beta)
            .partial_cmp(&(b.lambda, b.delta, b.beta))
            .unwrap()
    });
    Ok(out)
}
