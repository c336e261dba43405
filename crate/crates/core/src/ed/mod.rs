//! Exact diagonalization: thermal expectations, Schwinger and Duhamel
//! functions, ĉ(k,l), χ, the bubble diagram and parameter derivatives of χ.
//!
//! Basis states are bit strings; bit `x` set means `σ³_x = −1`. The dense
//! path holds the full `2^|Λ|` space and is capped at [`MAX_DENSE_SITES`];
//! [`sectors`] handles larger tori through translation and spin-flip
//! symmetry.

pub mod kernels;
pub mod linalg;
pub mod sectors;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{domain, invalid, Result};
use crate::hfunctions::StepFunction;
use crate::lattice::{Momentum, TorusSpec};
use crate::quad::NodeSet;
use kernels::{resolvent_sums, time_profile, zero_frequency};
use linalg::{dgemm, syevd};

pub const MAX_DENSE_SITES: usize = 12;
/// Largest tolerated imaginary part of an exact ĉ(k,l).
pub const IMAG_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn spin(b: usize, x: usize) -> f64 {
    if b >> x & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Diagonal of `−λ Σ_{x∼y} σ³σ³ − ν Σ σ³` on basis state `b`.
pub(crate) fn diagonal_energy(edges: &[(usize, usize)], n_sites: usize, lambda: f64, nu: f64, b: usize) -> f64 {
    let bond: f64 = edges.iter().map(|&(x, y)| spin(b, x) * spin(b, y)).sum();
    let mag: f64 = (0..n_sites).map(|x| spin(b, x)).sum();
    -lambda * bond - nu * mag
}

/// A dense real operator, column-major.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseOperator {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.dim + row]
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        DenseOperator { dim, data }
    }

    /// Diagonal operator `Σ_x f(x) σ³_x`-style from a per-state function.
    pub fn diagonal(dim: usize, f: impl Fn(usize) -> f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for b in 0..dim {
            data[b * dim + b] = f(b);
        }
        DenseOperator { dim, data }
    }

    /// `σ¹_x` in the product basis.
    pub fn sigma1(n_sites: usize, x: usize) -> Self {
        let dim = 1usize << n_sites;
        let mut data = vec![0.0; dim * dim];
        for b in 0..dim {
            data[b * dim + (b ^ (1 << x))] = 1.0;
        }
        DenseOperator { dim, data }
    }

    pub fn sigma3(n_sites: usize, x: usize) -> Self {
        Self::diagonal(1 << n_sites, |b| spin(b, x))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// `H^ν = −λ Σ_{x∼y} σ³_xσ³_y − δ Σ_x σ¹_x − ν Σ_x σ³_x`.
pub fn build_hamiltonian(spec: &TorusSpec, lambda: f64, delta: f64, nu: f64) -> Result<DenseOperator> {
    let n = spec.n_sites();
    if n > MAX_DENSE_SITES {
        return Err(domain(format!(
            "dense diagonalization is capped at {MAX_DENSE_SITES} sites, got {n}"
        )));
    }
    let dim = 1usize << n;
    let edges = spec.edges();
    let mut data = vec![0.0; dim * dim];
    for b in 0..dim {
        data[b * dim + b] = diagonal_energy(&edges, n, lambda, nu, b);
        for x in 0..n {
            data[b * dim + (b ^ (1 << x))] = -delta;
        }
    }
    Ok(DenseOperator { dim, data })
}

/// Eigenpairs of `H^ν` with lazily rotated spin operators.
#[derive(Debug)]
pub struct SpectralDecomposition {
    spec: TorusSpec,
    pub lambda: f64,
    pub delta: f64,
    pub nu: f64,
    energies: Vec<f64>,
    /// Eigenvectors as columns.
    vectors: Vec<f64>,
    sigma: Vec<OnceLock<Vec<f64>>>,
}

impl SpectralDecomposition {
    pub fn new(spec: &TorusSpec, lambda: f64, delta: f64, nu: f64) -> Result<Self> {
        let h = build_hamiltonian(spec, lambda, delta, nu)?;
        let mut vectors = h.data;
        let energies = syevd(h.dim, &mut vectors)?;
        Ok(SpectralDecomposition {
            spec: *spec,
            lambda,
            delta,
            nu,
            energies,
            vectors,
            sigma: (0..spec.n_sites()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Ascending eigenvalues.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    /// `max |V diag(E) Vᵀ − H|`.
    pub fn reconstruction_error(&self) -> Result<f64> {
        let h = build_hamiltonian(&self.spec, self.lambda, self.delta, self.nu)?;
        let n = self.dim();
        let mut ve = self.vectors.clone();
        for m in 0..n {
            for r in 0..n {
                ve[m * n + r] *= self.energies[m];
            }
        }
        let mut rec = vec![0.0; n * n];
        dgemm(b'N', b'T', n, n, n, &ve, &self.vectors, &mut rec);
        Ok(rec.iter().zip(&h.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        let mut g = vec![0.0; n * n];
        dgemm(b'T', b'N', n, n, n, &self.vectors, &self.vectors, &mut g);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[j * n + i] - want).abs());
            }
        }
        worst
    }

    fn e0(&self) -> f64 {
        self.energies[0]
    }

    /// Shifted energies `E − E_min`.
    fn shifted(&self) -> Vec<f64> {
        let e0 = self.e0();
        self.energies.iter().map(|e| e - e0).collect()
    }

    /// `Σ_m e^{−β(E_m − E_min)}`.
    fn z_shifted(&self, beta: f64) -> f64 {
        self.shifted().iter().map(|e| (-beta * e).exp()).sum()
    }

    /// `ln tr e^{−βH}`.
    pub fn log_partition(&self, beta: f64) -> f64 {
        -beta * self.e0() + self.z_shifted(beta).ln()
    }

    /// `tr(e^{−βH} Q) / tr(e^{−βH})` for a symmetric `Q` in the product basis.
    pub fn thermal_expectation(&self, beta: f64, q: &DenseOperator) -> Result<f64> {
        let n = self.dim();
        if q.dim != n {
            return Err(domain(format!("observable has dimension {}, expected {n}", q.dim)));
        }
        let mut qv = vec![0.0; n * n];
        dgemm(b'N', b'N', n, n, n, &q.data, &self.vectors, &mut qv);
        let sh = self.shifted();
        let mut num = 0.0;
        let mut z = 0.0;
        for m in 0..n {
            let w = (-beta * sh[m]).exp();
            let v = &self.vectors[m * n..(m + 1) * n];
            let qvm = &qv[m * n..(m + 1) * n];
            num += w * v.iter().zip(qvm).map(|(a, b)| a * b).sum::<f64>();
            z += w;
        }
        Ok(num / z)
    }

    /// `⟨m|σ³_x|n⟩`, column-major.
    pub fn sigma3(&self, x: usize) -> &[f64] {
        self.sigma[x].get_or_init(|| self.rotate_diagonal(|b| spin(b, x)))
    }

    /// `Vᵀ diag(f) V`.
    fn rotate_diagonal(&self, f: impl Fn(usize) -> f64) -> Vec<f64> {
        let n = self.dim();
        let d: Vec<f64> = (0..n).map(f).collect();
        let mut dv = self.vectors.clone();
        for m in 0..n {
            for b in 0..n {
                dv[m * n + b] *= d[b];
            }
        }
        let mut out = vec![0.0; n * n];
        dgemm(b'T', b'N', n, n, n, &self.vectors, &dv, &mut out);
        out
    }

    /// `tr(e^{−(β−t)H} σ³_y e^{−tH} σ³_x) / tr e^{−βH}`.
    pub fn schwinger_exact(&self, beta: f64, x: usize, y: usize, t: f64) -> Result<f64> {
        if !(0.0..beta).contains(&t) {
            return Err(domain(format!("time {t} outside [0, {beta})")));
        }
        self.check_site(x)?;
        self.check_site(y)?;
        let n = self.dim();
        let (ax, ay) = (self.sigma3(x), self.sigma3(y));
        let sh = self.shifted();
        let left: Vec<f64> = sh.iter().map(|e| (-(beta - t) * e).exp()).collect();
        let right: Vec<f64> = sh.iter().map(|e| (-t * e).exp()).collect();
        let mut s = 0.0;
        for m in 0..n {
            for k in 0..n {
                // ⟨m|σ_y|k⟩⟨k|σ_x|m⟩ with symmetric real matrices
                s += left[m] * right[k] * ay[k * n + m] * ax[m * n + k];
            }
        }
        Ok(s / self.z_shifted(beta))
    }

    fn check_site(&self, x: usize) -> Result<()> {
        if x >= self.spec.n_sites() {
            return Err(domain(format!("site {x} out of range")));
        }
        Ok(())
    }

    /// `b(x) = ∫₀^β c((0,0),(x,t)) dt`.
    pub fn duhamel_exact(&self, beta: f64, x: usize) -> Result<f64> {
        self.check_site(x)?;
        let n = self.dim();
        let (a0, ax) = (self.sigma3(0), self.sigma3(x));
        let sh = self.shifted();
        let mut s = 0.0;
        for m in 0..n {
            for k in 0..n {
                let w = ax[k * n + m] * a0[m * n + k];
                if w != 0.0 {
                    s += w * zero_frequency(sh[m], sh[k], beta);
                }
            }
        }
        Ok(s / self.z_shifted(beta))
    }

    /// `χ = Σ_x b(x)`.
    pub fn susceptibility_exact(&self, beta: f64) -> Result<f64> {
        let mut s = 0.0;
        for x in 0..self.spec.n_sites() {
            s += self.duhamel_exact(beta, x)?;
        }
        Ok(s)
    }

    /// `|⟨n|S_k†|m⟩|²` with `S_k = Σ_x e^{ik·x} σ³_x`.
    pub fn structure_weights(&self, k: &Momentum) -> Vec<f64> {
        let spec = &self.spec;
        let phases: Vec<f64> = (0..spec.n_sites()).map(|x| k.dot(spec, x)).collect();
        let re = self.rotate_diagonal(|b| {
            phases.iter().enumerate().map(|(x, p)| p.cos() * spin(b, x)).sum()
        });
        let im = self.rotate_diagonal(|b| {
            phases.iter().enumerate().map(|(x, p)| p.sin() * spin(b, x)).sum()
        });
        re.iter().zip(&im).map(|(a, b)| a * a + b * b).collect()
    }

    /// ĉ(k, 2πj/β) for every `j` in `js`, as (real, imaginary) parts.
    pub fn chat_components(&self, beta: f64, k: &Momentum, js: &[i64]) -> (Vec<f64>, Vec<f64>) {
        let w = self.structure_weights(k);
        let sh = self.shifted();
        let ls: Vec<f64> = js.iter().map(|&j| 2.0 * PI * j as f64 / beta).collect();
        let (re, im) = resolvent_sums(&sh, &sh, &w, beta, &ls);
        let norm = self.z_shifted(beta) * self.spec.n_sites() as f64;
        (
            re.iter().map(|v| v / norm).collect(),
            im.iter().map(|v| v / norm).collect(),
        )
    }

    /// Exact ĉ(k, 2πj/β); errors if the imaginary residue exceeds [`IMAG_TOL`].
    pub fn chat_exact(&self, beta: f64, k: &Momentum, j: i64) -> Result<f64> {
        if k.side != self.spec.side || k.m.len() != self.spec.d {
            return Err(domain("momentum does not belong to this torus"));
        }
        let (re, im) = self.chat_components(beta, k, &[j]);
        if im[0].abs() > IMAG_TOL {
            return Err(domain(format!("ĉ has imaginary residue {}", im[0])));
        }
        Ok(re[0])
    }

    /// Rows indexed by momentum label, columns by `j = −J..=J`.
    pub fn chat_table(&self, beta: f64, jmax: usize) -> Result<ChatTable> {
        let js: Vec<i64> = (-(jmax as i64)..=jmax as i64).collect();
        let mut values = Vec::new();
        let mut imag: f64 = 0.0;
        for k in self.spec.momentum_grid() {
            let (re, im) = self.chat_components(beta, &k, &js);
            imag = imag.max(im.iter().fold(0.0, |a, b| a.max(b.abs())));
            values.push(re);
        }
        Ok(ChatTable {
            spec: self.spec,
            beta,
            jmax,
            values,
            max_imag: imag,
        })
    }

    /// `C_k(t) = Σ_x e^{ik·x} c((0,0),(x,t))` at quadrature nodes.
    fn structure_profile(&self, beta: f64, k: &Momentum, nodes: &NodeSet) -> Vec<f64> {
        let w = self.structure_weights(k);
        let sh = self.shifted();
        let norm = self.z_shifted(beta) * self.spec.n_sites() as f64;
        time_profile(&sh, &sh, &w, beta, &nodes.t)
            .into_iter()
            .map(|v| v / norm)
            .collect()
    }

    /// `B = Σ_x ∫₀^β c((0,0),(x,t))² dt` with a quadrature error estimate.
    pub fn bubble_with_error(&self, beta: f64) -> (f64, f64) {
        let width = self.energies.last().unwrap() - self.e0();
        let nodes = NodeSet::for_spectrum(beta, width);
        let mut total = 0.0;
        let mut err = 0.0;
        for k in self.spec.momentum_grid() {
            let c = self.structure_profile(beta, &k, &nodes);
            let sq: Vec<f64> = c.iter().map(|v| v * v).collect();
            let (v, e) = nodes.integrate(&sq);
            total += v;
            err += e;
        }
        let n = self.spec.n_sites() as f64;
        (total / n, err / n)
    }

    pub fn bubble_exact(&self, beta: f64) -> f64 {
        self.bubble_with_error(beta).0
    }

    /// `Z(h)/Z(0)` for spatially constant `h` with weak derivative `hprime`.
    ///
    /// On a piece of constant slope `v` the path-integral generator is
    /// `e^{−aM}(−H)e^{aM}` with `M = Σσ³` and `a = v/(2δ)`, so the ratio is a
    /// trace of a time-ordered product of conjugated propagators.
    pub fn zratio_exact(&self, beta: f64, hprime: &StepFunction) -> Result<f64> {
        if (hprime.beta - beta).abs() > 1e-12 * beta {
            return Err(domain("h′ period differs from β"));
        }
        if self.nu != 0.0 {
            return Err(domain("Z(h) is defined at ν = 0"));
        }
        let n = self.dim();
        let ns = self.spec.n_sites();
        let mag: Vec<f64> = (0..n).map(|b| (0..ns).map(|x| spin(b, x)).sum()).collect();
        let sh = self.shifted();
        let mut u = DenseOperator::identity(n).data;
        for (t0, t1, v) in pieces(hprime) {
            let dt = t1 - t0;
            let a = v / (2.0 * self.delta);
            // V e^{−dt E} Vᵀ
            let mut ve = self.vectors.clone();
            for m in 0..n {
                let f = (-dt * sh[m]).exp();
                ve[m * n..(m + 1) * n].iter_mut().for_each(|x| *x *= f);
            }
            let mut prop = vec![0.0; n * n];
            dgemm(b'N', b'T', n, n, n, &ve, &self.vectors, &mut prop);
            for c in 0..n {
                for r in 0..n {
                    prop[c * n + r] *= (a * (mag[c] - mag[r])).exp();
                }
            }
            let mut next = vec![0.0; n * n];
            dgemm(b'N', b'N', n, n, n, &prop, &u, &mut next);
            u = next;
        }
        let tr: f64 = (0..n).map(|i| u[i * n + i]).sum();
        Ok(tr / self.z_shifted(beta))
    }
}

/// Consecutive constant pieces `(start, end, value)` covering `[0, β)` in time order.
fn pieces(f: &StepFunction) -> Vec<(f64, f64, f64)> {
    let nb = f.breakpoints.len();
    let mut out = Vec::new();
    if nb == 0 {
        return vec![(0.0, f.beta, 0.0)];
    }
    if f.breakpoints[0] > 0.0 {
        out.push((0.0, f.breakpoints[0], f.values[nb - 1]));
    }
    for i in 0..nb {
        let end = if i + 1 < nb { f.breakpoints[i + 1] } else { f.beta };
        out.push((f.breakpoints[i], end, f.values[i]));
    }
    out
}

/// Exact ĉ values on the full `(k, j)` grid.
#[derive(Clone, Debug, Serialize)]
pub struct ChatTable {
    pub spec: TorusSpec,
    pub beta: f64,
    pub jmax: usize,
    /// `values[k][j + J]`.
    pub values: Vec<Vec<f64>>,
    /// Largest discarded imaginary part.
    pub max_imag: f64,
}

impl ChatTable {
    pub fn get(&self, k: usize, j: i64) -> f64 {
        self.values[k][(j + self.jmax as i64) as usize]
    }

    /// `(1/(β|Λ|)) Σ_{k,|j|≤J} ĉ(k,l)²`.
    pub fn fourier_bubble(&self) -> f64 {
        let s: f64 = self.values.iter().flatten().map(|v| v * v).sum();
        s / (self.beta * self.spec.n_sites() as f64)
    }
}

/// `ζ(r) = tr e^{−βH(λ, δ cosh(r/δ))} / tr e^{−βH(λ, δ)}`.
pub fn zeta_exact(spec: &TorusSpec, beta: f64, lambda: f64, delta: f64, r: f64) -> Result<f64> {
    let a = SpectralDecomposition::new(spec, lambda, delta * (r / delta).cosh(), 0.0)?;
    let b = SpectralDecomposition::new(spec, lambda, delta, 0.0)?;
    Ok((a.log_partition(beta) - b.log_partition(beta)).exp())
}

/// `d⟨σ³_0⟩/dν` at `ν = 0` by a central difference; equals χ.
pub fn susceptibility_via_field(spec: &TorusSpec, beta: f64, lambda: f64, delta: f64, eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(invalid("eps", "must be positive"));
    }
    let n = spec.n_sites();
    if n > MAX_DENSE_SITES {
        return Err(domain(format!("dense diagonalization is capped at {MAX_DENSE_SITES} sites")));
    }
    let mag = DenseOperator::diagonal(1 << n, |b| {
        (0..n).map(|x| spin(b, x)).sum::<f64>() / n as f64
    });
    let m = |nu: f64| -> Result<f64> {
        SpectralDecomposition::new(spec, lambda, delta, nu)?.thermal_expectation(beta, &mag)
    };
    Ok((m(eps)? - m(-eps)?) / (2.0 * eps))
}

/// A Richardson-extrapolated central difference with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derivative {
    pub value: f64,
    /// `|extrapolated − raw|`.
    pub error: f64,
}

fn richardson(fp: f64, fm: f64, fp2: f64, fm2: f64, h: f64) -> Derivative {
    let raw = (fp - fm) / (2.0 * h);
    let half = (fp2 - fm2) / h;
    let value = (4.0 * half - raw) / 3.0;
    Derivative {
        value,
        error: (value - raw).abs(),
    }
}

/// χ, χ⁻¹ and their partial derivatives in λ and δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiPartials {
    pub chi: f64,
    pub dchi_dlambda: Derivative,
    pub dchi_ddelta: Derivative,
    pub dinv_dlambda: Derivative,
    pub dinv_ddelta: Derivative,
}

/// Central differences of χ with one Richardson halving.
///
/// The λ stencil may step below zero: `H` is defined for any real λ and χ is
/// smooth there, which keeps `λ = 0` usable.
pub fn chi_partials(spec: &TorusSpec, beta: f64, lambda: f64, delta: f64, step: f64) -> Result<ChiPartials> {
    if step <= 0.0 {
        return Err(invalid("step", "must be positive"));
    }
    if lambda < 0.0 {
        return Err(invalid("lambda", "must be nonnegative"));
    }
    if delta - step <= 0.0 {
        return Err(invalid("delta", "stencil steps to a non-positive transverse field"));
    }
    let chi = |l: f64, d: f64| -> Result<f64> { SpectralDecomposition::new(spec, l, d, 0.0)?.susceptibility_exact(beta) };
    let c0 = chi(lambda, delta)?;
    let lv = [
        chi(lambda + step, delta)?,
        chi(lambda - step, delta)?,
        chi(lambda + step / 2.0, delta)?,
        chi(lambda - step / 2.0, delta)?,
    ];
    let dv = [
        chi(lambda, delta + step)?,
        chi(lambda, delta - step)?,
        chi(lambda, delta + step / 2.0)?,
        chi(lambda, delta - step / 2.0)?,
    ];
    let inv = |v: [f64; 4]| v.map(|x| 1.0 / x);
    let (li, di) = (inv(lv), inv(dv));
    Ok(ChiPartials {
        chi: c0,
        dchi_dlambda: richardson(lv[0], lv[1], lv[2], lv[3], step),
        dchi_ddelta: richardson(dv[0], dv[1], dv[2], dv[3], step),
        dinv_dlambda: richardson(li[0], li[1], li[2], li[3], step),
        dinv_ddelta: richardson(di[0], di[1], di[2], di[3], step),
    })
}

#[cfg(test)]
mod tests;
