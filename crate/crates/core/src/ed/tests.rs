use super::*;
use crate::hfunctions::w_prime;
use crate::observables::ir_tail_bound;

fn single(delta: f64) -> SpectralDecomposition {
    SpectralDecomposition::new(&TorusSpec::single_site(), 0.0, delta, 0.0).unwrap()
}

fn chain4(lambda: f64, delta: f64) -> SpectralDecomposition {
    SpectralDecomposition::new(&TorusSpec::new(1, 4).unwrap(), lambda, delta, 0.0).unwrap()
}

fn single_c(beta: f64, delta: f64, t: f64) -> f64 {
    (delta * (beta - 2.0 * t)).cosh() / (delta * beta).cosh()
}

#[test]
fn small_spectra() {
    let e = single(0.7);
    assert!((e.energies()[0] + 0.7).abs() < 1e-14 && (e.energies()[1] - 0.7).abs() < 1e-14);
    let pair = SpectralDecomposition::new(&TorusSpec::new(1, 2).unwrap(), 1.0, 0.0, 0.0).unwrap();
    let want = [-1.0, -1.0, 1.0, 1.0];
    for (a, b) in pair.energies().iter().zip(want) {
        assert!((a - b).abs() < 1e-14);
    }
    let h = build_hamiltonian(&TorusSpec::new(2, 2).unwrap(), 0.3, 0.9, 0.1).unwrap();
    assert_eq!(h.asymmetry(), 0.0);
    assert!(build_hamiltonian(&TorusSpec::new(2, 4).unwrap(), 1.0, 1.0, 0.0).is_err());
}

#[test]
fn decomposition_is_accurate() {
    let e = SpectralDecomposition::new(&TorusSpec::new(1, 6).unwrap(), 0.8, 0.6, 0.05).unwrap();
    assert!(e.reconstruction_error().unwrap() < 1e-9);
    assert!(e.orthonormality_error() < 1e-10);
}

#[test]
fn thermal_expectations() {
    let (beta, delta) = (1.3, 0.8);
    let e = single(delta);
    let id = DenseOperator::identity(2);
    assert!((e.thermal_expectation(beta, &id).unwrap() - 1.0).abs() < 1e-14);
    let s1 = DenseOperator::sigma1(1, 0);
    assert!((e.thermal_expectation(beta, &s1).unwrap() - (beta * delta).tanh()).abs() < 1e-14);
    let c = chain4(0.5, 1.0);
    let s3 = DenseOperator::sigma3(4, 2);
    assert!(c.thermal_expectation(2.0, &s3).unwrap().abs() < 1e-12);
    assert!(c.thermal_expectation(2.0, &DenseOperator::identity(8)).is_err());
}

#[test]
fn single_site_schwinger_closed_form() {
    let (beta, delta) = (1.7, 0.9);
    let e = single(delta);
    for i in 0..20 {
        let t = beta * i as f64 / 20.0;
        let v = e.schwinger_exact(beta, 0, 0, t).unwrap();
        assert!((v - single_c(beta, delta, t)).abs() < 1e-12);
    }
    assert!(e.schwinger_exact(beta, 0, 0, beta).is_err());
}

#[test]
fn schwinger_symmetries() {
    let beta = 1.4;
    let e = chain4(0.7, 0.6);
    let spec = *e.spec();
    assert!((e.schwinger_exact(beta, 2, 2, 0.0).unwrap() - 1.0).abs() < 1e-12);
    for x in 0..4 {
        for &t in &[0.1, 0.5, 0.93] {
            let c = e.schwinger_exact(beta, 0, x, t).unwrap();
            assert!((c - e.schwinger_exact(beta, 0, x, beta - t).unwrap()).abs() < 1e-10);
            assert!((c - e.schwinger_exact(beta, 0, spec.neg(x), t).unwrap()).abs() < 1e-10);
            // translation invariance
            assert!((c - e.schwinger_exact(beta, 1, spec.add(1, x), t).unwrap()).abs() < 1e-10);
        }
    }
}

#[test]
fn single_site_susceptibility_and_bubble() {
    for &(beta, delta) in &[(1.0, 1.0), (2.5, 0.4), (0.3, 3.0)] {
        let e = single(delta);
        let chi = (delta * beta).tanh() / delta;
        assert!((e.susceptibility_exact(beta).unwrap() - chi).abs() < 1e-10);
        assert!((e.duhamel_exact(beta, 0).unwrap() - chi).abs() < 1e-10);
        let k = Momentum::zero(0, 2);
        assert!((e.chat_exact(beta, &k, 0).unwrap() - chi).abs() < 1e-10);
        let b = (beta / 2.0 + (2.0 * delta * beta).sinh() / (4.0 * delta)) / (delta * beta).cosh().powi(2);
        let (v, err) = e.bubble_with_error(beta);
        assert!((v - b).abs() < 1e-10, "{v} {b}");
        assert!(err < 1e-8);
        assert!(v <= chi);
    }
    // Duhamel value decays as δ grows
    assert!(single(10.0).duhamel_exact(1.0, 0).unwrap() < single(1.0).duhamel_exact(1.0, 0).unwrap());
}

#[test]
fn chat_agrees_with_integrated_schwinger() {
    let beta = 1.1;
    let e = chain4(0.6, 0.9);
    let spec = *e.spec();
    let n = 600;
    let h = beta / n as f64;
    // Simpson on the closed-form Schwinger function
    let mut c = vec![vec![0.0; n + 1]; 4];
    for (x, row) in c.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let t = (i as f64 * h).min(beta * (1.0 - 1e-15));
            *v = e.schwinger_exact(beta, 0, x, t).unwrap();
        }
    }
    for k in spec.momentum_grid() {
        for j in [-3i64, 0, 1, 5] {
            let l = 2.0 * PI * j as f64 / beta;
            let mut s = 0.0;
            for (x, row) in c.iter().enumerate() {
                let ph = k.dot(&spec, x);
                for (i, v) in row.iter().enumerate() {
                    let w = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    s += w * v * (ph + l * i as f64 * h).cos();
                }
            }
            s *= h / 3.0;
            let got = e.chat_exact(beta, &k, j).unwrap();
            assert!((got - s).abs() < 1e-8, "k={:?} j={j}: {got} vs {s}", k.m);
        }
    }
}

#[test]
fn chat_table_properties() {
    let beta = 1.0;
    let e = chain4(1.0, 1.0);
    let t = e.chat_table(beta, 16).unwrap();
    assert!(t.max_imag < IMAG_TOL);
    let chi = e.susceptibility_exact(beta).unwrap();
    assert!((t.get(0, 0) - chi).abs() < 1e-9);
    let b: f64 = (0..4).map(|x| e.duhamel_exact(beta, x).unwrap()).sum();
    assert!((b - chi).abs() < 1e-9);
    for k in 0..4 {
        for j in -16..=16 {
            assert!(t.get(k, j) >= -1e-10);
            assert!((t.get(k, j) - t.get(k, -j)).abs() < 1e-12);
        }
    }
}

#[test]
fn plancherel_within_tail_bound() {
    let spec = TorusSpec::new(1, 4).unwrap();
    for &(lambda, delta, beta) in &[(1.0, 1.0, 1.0), (0.25, 0.5, 2.0), (0.5, 1.0, 0.5)] {
        let e = SpectralDecomposition::new(&spec, lambda, delta, 0.0).unwrap();
        let (direct, qerr) = e.bubble_with_error(beta);
        assert!(qerr < 1e-9);
        for jmax in [2usize, 8, 32] {
            let f = e.chat_table(beta, jmax).unwrap().fourier_bubble();
            let tail = ir_tail_bound(&spec, beta, lambda, delta, jmax);
            assert!(direct - f >= -1e-10 && direct - f <= tail + 1e-8, "{direct} {f} {tail}");
        }
        assert!(direct <= e.susceptibility_exact(beta).unwrap());
    }
}

#[test]
fn field_derivative_is_susceptibility() {
    let (beta, delta): (f64, f64) = (1.2, 0.8);
    let one = TorusSpec::single_site();
    let want = (delta * beta).tanh() / delta;
    assert!((susceptibility_via_field(&one, beta, 0.0, delta, 1e-4).unwrap() - want).abs() < 1e-6);
    // two independent sites: ⟨σ_0⟩ responds exactly as a single site does
    let two = TorusSpec::new(1, 2).unwrap();
    assert!((susceptibility_via_field(&two, beta, 0.0, delta, 1e-4).unwrap() - want).abs() < 1e-6);
    let chain = TorusSpec::new(1, 4).unwrap();
    let e = SpectralDecomposition::new(&chain, 0.5, 1.0, 0.0).unwrap();
    let v = susceptibility_via_field(&chain, 1.0, 0.5, 1.0, 1e-4).unwrap();
    assert!((v - e.susceptibility_exact(1.0).unwrap()).abs() < 1e-6);
}

#[test]
fn chi_partial_signs() {
    let spec = TorusSpec::new(1, 4).unwrap();
    for &(l, d) in &[(0.25, 0.5), (1.0, 1.0), (0.0, 0.7)] {
        let p = chi_partials(&spec, 1.0, l, d, 1e-3).unwrap();
        assert!(p.dchi_dlambda.value >= -1e-8);
        assert!(p.dchi_ddelta.value <= 1e-8);
        assert!(p.dchi_dlambda.error < 1e-5 && p.dchi_ddelta.error < 1e-5, "{p:?}");
        // χ⁻¹ derivatives follow by the chain rule
        let want = -p.dchi_dlambda.value / (p.chi * p.chi);
        assert!((p.dinv_dlambda.value - want).abs() < 1e-6);
    }
    assert!(chi_partials(&spec, 1.0, 0.5, 1e-4, 1e-3).is_err());
}

/// `E[weight]` on one free site by summing over flip counts `m ≤ mmax`:
/// flips are uniform order statistics, so for piecewise-constant `h′` the
/// ordered-simplex integral reduces to placing `c_p` flips in each piece.
fn series_zratio(beta: f64, delta: f64, hp: &StepFunction, mmax: usize) -> f64 {
    let mut cuts: Vec<f64> = hp.breakpoints.clone();
    if cuts.first() != Some(&0.0) {
        cuts.insert(0, 0.0);
    }
    cuts.push(beta);
    let mut total = 0.0;
    for xi in 0..2 {
        let mut dp = vec![0.0; mmax + 1];
        dp[0] = 1.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let v = hp.eval(0.5 * (a + b));
            let len = b - a;
            let mut next = vec![0.0; mmax + 1];
            for j in 0..=mmax {
                if dp[j] == 0.0 {
                    continue;
                }
                let mut f = dp[j];
                next[j] += f;
                for c in 1..=(mmax - j) {
                    let i = j + c;
                    let s = if (xi + i) % 2 == 0 { 1.0 } else { -1.0 };
                    f *= len / c as f64 * (-(v / delta) * s).exp();
                    next[i] += f;
                }
            }
            dp = next;
        }
        for m in (0..=mmax).step_by(2) {
            total += 0.5 * delta.powi(m as i32) * dp[m];
        }
    }
    total / (delta * beta).cosh()
}

#[test]
fn zratio_matches_series_oracle() {
    let (beta, delta) = (1.0, 1.0);
    let e = single(delta);
    let asym = StepFunction::new(beta, vec![0.0, 0.2, 0.35, 0.8], vec![0.9, -0.4, 0.3, -0.55]).unwrap();
    let asym = StepFunction::new(
        beta,
        asym.breakpoints.clone(),
        asym.values.iter().map(|v| v - asym.integral() / beta).collect(),
    )
    .unwrap();
    for h in [w_prime(0.5, 1, beta).unwrap(), w_prime(1.0, 3, beta).unwrap(), asym] {
        let got = e.zratio_exact(beta, &h).unwrap();
        let want = series_zratio(beta, delta, &h, 40);
        assert!((got - want).abs() < 1e-12, "{got} {want}");
    }
    assert!((e.zratio_exact(beta, &StepFunction::constant(beta, 0.0)).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn zeta_and_white_limit() {
    let (beta, delta, r) = (1.0, 1.0, 0.5);
    let one = TorusSpec::single_site();
    let z = zeta_exact(&one, beta, 0.0, delta, r).unwrap();
    let want = (delta * beta * (r / delta).cosh()).cosh() / (delta * beta).cosh();
    assert!((z - want).abs() < 1e-13);
    let e = single(delta);
    let gaps: Vec<f64> = (1..=7)
        .map(|n| (e.zratio_exact(beta, &w_prime(r, n, beta).unwrap()).unwrap() - z).abs())
        .collect();
    for w in gaps.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(gaps[6] < 1e-3);
}
