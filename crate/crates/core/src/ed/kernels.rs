//! Spectral double sums shared by the dense and sector-resolved oracles.
//!
//! A weight matrix `w` (column-major, `nb × na`) holds `|⟨n|O|m⟩|²` for
//! source eigenstates `m` with shifted energies `ea` and target eigenstates
//! `n` with shifted energies `eb`.

use super::linalg::dgemm;

/// Below this gap the `l = 0` kernel switches to its degenerate limit.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Below this `|βω|` the `l = 0` sum uses [`zero_frequency`].
const SMALL_GAP: f64 = 1e-2;

/// `Σ_{m,n} w_{nm} I(m,n,l)` for each `l`, where
/// `I = ∫₀^β e^{−(β−t)E_m − tE_n + ilt} dt = (e^{−βE_n} − e^{−βE_m})/(E_m − E_n + il)`.
/// Returns real and imaginary parts.
pub fn resolvent_sums(ea: &[f64], eb: &[f64], w: &[f64], beta: f64, ls: &[f64]) -> (Vec<f64>, Vec<f64>) {
    const LANES: usize = 8;
    let nb = eb.len();
    let nl = ls.len();
    let xb: Vec<f64> = eb.iter().map(|e| (-beta * e).exp()).collect();
    let mut re = vec![0.0; nl];
    let mut im = vec![0.0; nl];
    // per-source buffers of ω², d·ω and d, padded to whole lanes with zero weight
    let padded = nb.div_ceil(LANES) * LANES;
    let mut o2 = vec![1.0; padded];
    let mut dw = vec![0.0; padded];
    let mut dd = vec![0.0; padded];
    let mut static_part = 0.0;
    for (m, &em) in ea.iter().enumerate() {
        let xa = (-beta * em).exp();
        let col = &w[m * nb..(m + 1) * nb];
        for n in 0..nb {
            let omega = em - eb[n];
            let d = col[n] * (xb[n] - xa);
            o2[n] = omega * omega;
            dw[n] = d * omega;
            dd[n] = d;
            // the difference quotient loses digits only for small βω
            if (beta * omega).abs() > SMALL_GAP {
                static_part += d / omega;
            } else if col[n] != 0.0 {
                static_part += col[n] * zero_frequency(em, eb[n], beta);
            }
        }
        for (j, &l) in ls.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let l2 = l * l;
            let mut sr = [0.0; LANES];
            let mut si = [0.0; LANES];
            for ((a, b), c) in o2
                .chunks_exact(LANES)
                .zip(dw.chunks_exact(LANES))
                .zip(dd.chunks_exact(LANES))
            {
                for i in 0..LANES {
                    let inv = 1.0 / (a[i] + l2);
                    sr[i] += b[i] * inv;
                    si[i] += c[i] * inv;
                }
            }
            re[j] += sr.iter().sum::<f64>();
            im[j] -= l * si.iter().sum::<f64>();
        }
    }
    for (j, &l) in ls.iter().enumerate() {
        if l == 0.0 {
            re[j] = static_part;
        }
    }
    (re, im)
}

/// `∫₀^β e^{−(β−t)a − tb} dt`, evaluated without cancellation.
pub fn zero_frequency(a: f64, b: f64, beta: f64) -> f64 {
    let gap = (a - b).abs();
    let lo = a.min(b);
    if gap < DEGENERATE_TOL {
        beta * (-beta * a).exp()
    } else {
        (-beta * lo).exp() * -(-beta * gap).exp_m1() / gap
    }
}

/// `f(t_i) = Σ_{m,n} e^{−(β−t_i)E_m} w_{nm} e^{−t_i E_n}` at every node.
pub fn time_profile(ea: &[f64], eb: &[f64], w: &[f64], beta: f64, ts: &[f64]) -> Vec<f64> {
    let (na, nb, nt) = (ea.len(), eb.len(), ts.len());
    let mut p = vec![0.0; na * nt];
    for (i, &t) in ts.iter().enumerate() {
        for m in 0..na {
            p[i * na + m] = (-(beta - t) * ea[m]).exp();
        }
    }
    let mut q = vec![0.0; nb * nt];
    dgemm(b'N', b'N', nb, nt, na, w, &p, &mut q);
    ts.iter()
        .enumerate()
        .map(|(i, &t)| {
            let col = &q[i * nb..(i + 1) * nb];
            eb.iter().zip(col).map(|(e, v)| (-t * e).exp() * v).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolvent_matches_quadrature() {
        let ea = [0.0, 0.7, 2.3];
        let eb = [0.1, 0.7, 1.9];
        let w = [0.3, 1.1, 0.2, 0.5, 0.9, 0.4, 1.3, 0.6, 0.8];
        let beta = 1.3;
        let ls = [0.0, 2.0 * std::f64::consts::PI / beta, -4.0 * std::f64::consts::PI / beta];
        let (re, im) = resolvent_sums(&ea, &eb, &w, beta, &ls);
        // midpoint rule with Richardson
        let brute = |l: f64, n: usize| {
            let h = beta / n as f64;
            let mut s = (0.0, 0.0);
            for i in 0..n {
                let t = (i as f64 + 0.5) * h;
                for m in 0..3 {
                    for k in 0..3 {
                        let v = w[m * 3 + k] * (-(beta - t) * ea[m] - t * eb[k]).exp() * h;
                        s.0 += v * (l * t).cos();
                        s.1 += v * (l * t).sin();
                    }
                }
            }
            s
        };
        for (j, &l) in ls.iter().enumerate() {
            let (a, b) = (brute(l, 4000), brute(l, 8000));
            let want = ((4.0 * b.0 - a.0) / 3.0, (4.0 * b.1 - a.1) / 3.0);
            assert!((re[j] - want.0).abs() < 1e-9, "{} {}", re[j], want.0);
            assert!((im[j] - want.1).abs() < 1e-9, "{} {}", im[j], want.1);
        }
        let ts = [0.0, 0.4, 1.3];
        let prof = time_profile(&ea, &eb, &w, beta, &ts);
        for (i, &t) in ts.iter().enumerate() {
            let mut want = 0.0;
            for m in 0..3 {
                for k in 0..3 {
                    want += w[m * 3 + k] * (-(beta - t) * ea[m] - t * eb[k]).exp();
                }
            }
            assert!((prof[i] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn degenerate_branch_is_continuous() {
        let b = 2.0;
        let at = zero_frequency(0.5, 0.5, b);
        let near = zero_frequency(0.5, 0.5 + 1e-9, b);
        assert!((at - near).abs() < 1e-8);
        assert!((at - b * (-b * 0.5f64).exp()).abs() < 1e-15);
    }
}
