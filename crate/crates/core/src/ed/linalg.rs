//! Thin wrappers over the LAPACK and BLAS routines used by the oracle.
//! All matrices are dense and column-major.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigen-decomposition of a real symmetric matrix (lower triangle read).
/// On return `a` holds the orthonormal eigenvectors as columns.
pub fn syevd(n: usize, a: &mut [f64]) -> Result<Vec<f64>> {
    dsyevd_job(b'V', n, a)
}

/// Eigenvalues only; `a` is destroyed.
pub fn syevd_values(n: usize, a: &mut [f64]) -> Result<Vec<f64>> {
    dsyevd_job(b'N', n, a)
}

fn dsyevd_job(jobz: u8, n: usize, a: &mut [f64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut w = vec![0.0; n];
    if n == 0 {
        return Ok(w);
    }
    let ni = n as i32;
    let mut info = 0;
    let mut work = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::dsyevd(jobz, b'L', ni, a, ni, &mut w, &mut work, -1, &mut iwork, -1, &mut info);
    }
    check(info, "dsyevd workspace query")?;
    let lwork = work[0] as usize;
    let liwork = iwork[0] as usize;
    work = vec![0.0; lwork];
    iwork = vec![0; liwork];
    unsafe {
        lapack::dsyevd(
            jobz,
            b'L',
            ni,
            a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    check(info, "dsyevd")?;
    Ok(w)
}

/// Eigen-decomposition of a complex Hermitian matrix (lower triangle read).
pub fn heevd(n: usize, a: &mut [Complex64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut w = vec![0.0; n];
    if n == 0 {
        return Ok(w);
    }
    let ni = n as i32;
    let mut info = 0;
    let mut work = vec![Complex64::new(0.0, 0.0); 1];
    let mut rwork = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::zheevd(
            b'V', b'L', ni, a, ni, &mut w, &mut work, -1, &mut rwork, -1, &mut iwork, -1, &mut info,
        );
    }
    check(info, "zheevd workspace query")?;
    let (lwork, lrwork, liwork) = (work[0].re as usize, rwork[0] as usize, iwork[0] as usize);
    work = vec![Complex64::new(0.0, 0.0); lwork];
    rwork = vec![0.0; lrwork];
    iwork = vec![0; liwork];
    unsafe {
        lapack::zheevd(
            b'V',
            b'L',
            ni,
            a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut rwork,
            lrwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    check(info, "zheevd")?;
    Ok(w)
}

fn check(info: i32, what: &str) -> Result<()> {
    if info != 0 {
        return Err(Error::Linalg(format!("{what} returned info = {info}")));
    }
    Ok(())
}

/// `C = op(A)·op(B)` for real matrices; `op` is `b'N'` or `b'T'`.
/// `op(A)` is `m×k`, `op(B)` is `k×n`.
#[allow(clippy::too_many_arguments)]
pub fn dgemm(ta: u8, tb: u8, m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let lda = if ta == b'N' { m } else { k };
    let ldb = if tb == b'N' { k } else { n };
    unsafe {
        blas::dgemm(
            ta, tb, m as i32, n as i32, k as i32, 1.0, a, lda as i32, b, ldb as i32, 0.0, c, m as i32,
        );
    }
}

/// `C = op(A)·op(B)` for complex matrices; `op` is `b'N'`, `b'T'` or `b'C'`.
#[allow(clippy::too_many_arguments)]
pub fn zgemm(
    ta: u8,
    tb: u8,
    m: usize,
    n: usize,
    k: usize,
    a: &[Complex64],
    b: &[Complex64],
    c: &mut [Complex64],
) {
    let zero = Complex64::new(0.0, 0.0);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v = zero);
        return;
    }
    let lda = if ta == b'N' { m } else { k };
    let ldb = if tb == b'N' { k } else { n };
    unsafe {
        blas::zgemm(
            ta,
            tb,
            m as i32,
            n as i32,
            k as i32,
            Complex64::new(1.0, 0.0),
            a,
            lda as i32,
            b,
            ldb as i32,
            zero,
            c,
            m as i32,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_eigenpairs() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let mut a = vec![2.0, 1.0, 1.0, 2.0];
        let w = syevd(2, &mut a).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 3.0).abs() < 1e-14);
        let mut c = vec![0.0; 4];
        dgemm(b'T', b'N', 2, 2, 2, &a, &a, &mut c);
        assert!((c[0] - 1.0).abs() < 1e-14 && c[1].abs() < 1e-14);
    }

    #[test]
    fn hermitian_eigenpairs() {
        // σ² has eigenvalues ±1
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        let mut a = vec![z, i, -i, z];
        let w = heevd(2, &mut a).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        let mut c = vec![z; 4];
        zgemm(b'C', b'N', 2, 2, 2, &a, &a, &mut c);
        assert!((c[0].re - 1.0).abs() < 1e-14 && c[2].norm() < 1e-14);
    }
}
