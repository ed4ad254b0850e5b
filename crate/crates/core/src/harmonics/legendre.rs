//! Associated Legendre functions, Gauss–Legendre quadrature and spherical
//! harmonic evaluation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Index of `(l, m)`, `0 <= m <= l`, in a lower-triangular table.
#[inline]
pub(crate) fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Orthonormalized associated Legendre functions `Pbar_l^m(cos theta)` for
/// all `0 <= m <= l <= lmax`, without the Condon–Shortley phase, such that
/// `Pbar_l^m(cos theta) e^{i m phi}` is orthonormal on the unit sphere.
///
/// `sin_theta` may be negative: the result is then the trigonometric
/// polynomial continuation `sin^m(theta) * poly(cos theta)`.
pub fn normalized_legendre_table(lmax: usize, cos_theta: f64, sin_theta: f64) -> Vec<f64> {
    let mut out = vec![0.0; tri_index(lmax, lmax) + 1];
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta;
        }
        out[tri_index(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mf = m as f64;
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * mf + 3.0).sqrt() * cos_theta * pmm;
        out[tri_index(m + 1, m)] = p_cur;
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let p_next = a * (cos_theta * p_cur - b * p_prev);
            out[tri_index(l, m)] = p_next;
            p_prev = p_cur;
            p_cur = p_next;
        }
    }
    out
}

/// Theta-derivatives of the table produced by [`normalized_legendre_table`].
/// Requires `sin_theta != 0`.
pub fn normalized_legendre_dtheta(lmax: usize, cos_theta: f64, sin_theta: f64, table: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; table.len()];
    for l in 0..=lmax {
        let lf = l as f64;
        for m in 0..=l {
            let mf = m as f64;
            let lower = if l > m {
                ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt() * table[tri_index(l - 1, m)]
            } else {
                0.0
            };
            out[tri_index(l, m)] = (lf * cos_theta * table[tri_index(l, m)] - lower) / sin_theta;
        }
    }
    out
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes in decreasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

/// Complex spherical harmonic `Y_l^m` with the Condon–Shortley phase carried
/// by `P_l^m` as in the Rodrigues formula.
pub fn complex_sph_harm(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(Error::Domain(format!("|m| = {am} exceeds l = {l}")));
    }
    let table = normalized_legendre_table(l, theta.cos(), theta.sin());
    let cs = if am.is_multiple_of(2) { 1.0 } else { -1.0 };
    let positive = Complex64::from_polar(cs * table[tri_index(l, am)], am as f64 * phi);
    if m >= 0 {
        Ok(positive)
    } else {
        // Y_l^{-m} = (-1)^m conj(Y_l^m)
        Ok(positive.conj() * cs)
    }
}

/// Real spherical harmonic `Y_{l,m}` built from the complex harmonics:
/// `m < 0` gives the `sin(|m| phi)` member, `m > 0` the `cos(m phi)` member.
pub fn real_sph_harm(l: usize, m: i64, theta: f64, phi: f64) -> Result<f64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(Error::Domain(format!("|m| = {am} exceeds l = {l}")));
    }
    let sign = if am.is_multiple_of(2) { 1.0 } else { -1.0 };
    let value = match m.cmp(&0) {
        std::cmp::Ordering::Equal => complex_sph_harm(l, 0, theta, phi)?,
        std::cmp::Ordering::Less => {
            let a = complex_sph_harm(l, m, theta, phi)?;
            let b = complex_sph_harm(l, -m, theta, phi)?;
            Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2) * (a - b * sign)
        }
        std::cmp::Ordering::Greater => {
            let a = complex_sph_harm(l, -m, theta, phi)?;
            let b = complex_sph_harm(l, m, theta, phi)?;
            (a + b * sign) * std::f64::consts::FRAC_1_SQRT_2
        }
    };
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for deg in 0..=13 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn low_order_legendre_closed_forms() {
        let theta: f64 = 0.7;
        let (c, s) = (theta.cos(), theta.sin());
        let t = normalized_legendre_table(3, c, s);
        let n00 = (1.0 / (4.0 * PI)).sqrt();
        assert!((t[tri_index(0, 0)] - n00).abs() < 1e-15);
        assert!((t[tri_index(1, 0)] - (3.0 / (4.0 * PI)).sqrt() * c).abs() < 1e-15);
        assert!((t[tri_index(1, 1)] - (3.0 / (8.0 * PI)).sqrt() * s).abs() < 1e-15);
        let p20 = (5.0 / (4.0 * PI)).sqrt() * 0.5 * (3.0 * c * c - 1.0);
        assert!((t[tri_index(2, 0)] - p20).abs() < 1e-15);
        let p33 = (35.0 / (64.0 * PI)).sqrt() * s * s * s;
        assert!((t[tri_index(3, 3)] - p33).abs() < 1e-14);
    }

    #[test]
    fn dtheta_matches_finite_difference() {
        let lmax = 8;
        let theta: f64 = 1.1;
        let h = 1e-6;
        let t = normalized_legendre_table(lmax, theta.cos(), theta.sin());
        let d = normalized_legendre_dtheta(lmax, theta.cos(), theta.sin(), &t);
        let tp = normalized_legendre_table(lmax, (theta + h).cos(), (theta + h).sin());
        let tm = normalized_legendre_table(lmax, (theta - h).cos(), (theta - h).sin());
        for i in 0..t.len() {
            let fd = (tp[i] - tm[i]) / (2.0 * h);
            assert!((fd - d[i]).abs() < 1e-7, "entry {i}: {fd} vs {}", d[i]);
        }
    }

    #[test]
    fn real_harmonics_closed_forms() {
        let (theta, phi) = (0.9_f64, 2.3_f64);
        let y00 = real_sph_harm(0, 0, theta, phi).unwrap();
        assert!((y00 - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let y10 = real_sph_harm(1, 0, theta, phi).unwrap();
        assert!((y10 - (3.0 / (4.0 * PI)).sqrt() * theta.cos()).abs() < 1e-15);
        let y11 = real_sph_harm(1, 1, theta, phi).unwrap();
        assert!((y11 - (3.0 / (4.0 * PI)).sqrt() * theta.sin() * phi.cos()).abs() < 1e-15);
        let y1m1 = real_sph_harm(1, -1, theta, phi).unwrap();
        assert!((y1m1 - (3.0 / (4.0 * PI)).sqrt() * theta.sin() * phi.sin()).abs() < 1e-15);
        assert!(matches!(real_sph_harm(2, 3, theta, phi), Err(Error::Domain(_))));
    }
}
