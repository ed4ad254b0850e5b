//! Spectral angular algebra on the circle and the sphere.
//!
//! Fields are stored in real bases with a prefix-stable layout, so that a
//! field of bandlimit `K` is a prefix of the same field viewed at any larger
//! bandlimit:
//!
//! * circle: `[1, cos θ, sin θ, cos 2θ, sin 2θ, ...]` (unnormalized);
//! * sphere: orthonormal real harmonics `Y_{l,m}` at index `l² + l + m`,
//!   where `m < 0` selects the `sin(|m|φ)` member.

mod grid;
pub mod legendre;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use grid::{AngularGrid, Derivative};
pub use legendre::{complex_sph_harm, real_sph_harm};

use crate::error::{Error, Result};

/// The boundary manifold: `S¹` for planar domains, `S²` for solids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    #[serde(alias = "2d", alias = "disk")]
    Circle,
    #[serde(alias = "3d", alias = "ball")]
    Sphere,
}

impl Dimension {
    /// Spatial dimension of the domain (2 or 3).
    pub fn ambient(self) -> usize {
        match self {
            Dimension::Circle => 2,
            Dimension::Sphere => 3,
        }
    }

    /// Number of real coefficients of a field with the given bandlimit.
    pub fn coeff_len(self, bandlimit: usize) -> usize {
        match self {
            Dimension::Circle => 2 * bandlimit + 1,
            Dimension::Sphere => (bandlimit + 1) * (bandlimit + 1),
        }
    }

    /// Inverse of [`Dimension::coeff_len`].
    pub fn bandlimit_for_len(self, len: usize) -> Option<usize> {
        match self {
            Dimension::Circle => (len % 2 == 1).then(|| (len - 1) / 2),
            Dimension::Sphere => {
                let l = (len as f64).sqrt().round() as usize;
                (l >= 1 && l * l == len).then(|| l - 1)
            }
        }
    }

    /// Frequency `|k|` (circle) or degree `l` (sphere) of a coefficient index.
    pub fn degree(self, index: usize) -> usize {
        match self {
            Dimension::Circle => index.div_ceil(2),
            Dimension::Sphere => (index as f64).sqrt().floor() as usize,
        }
    }

    /// Eigenvalue of `-Δ_S` on the given degree: `k²` or `l(l+1)`.
    pub fn laplace_eigenvalue(self, degree: usize) -> f64 {
        let d = degree as f64;
        match self {
            Dimension::Circle => d * d,
            Dimension::Sphere => d * (d + 1.0),
        }
    }

    /// Coefficient index of the circle mode `k` (`k < 0` selects `sin |k|θ`).
    pub fn circle_index(k: i64) -> usize {
        match k.cmp(&0) {
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Greater => 2 * k as usize - 1,
            std::cmp::Ordering::Less => 2 * k.unsigned_abs() as usize,
        }
    }

    /// Coefficient index of the real harmonic `Y_{l,m}`.
    pub fn sphere_index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    /// Area of the unit circle/sphere.
    pub fn surface_measure(self) -> f64 {
        match self {
            Dimension::Circle => 2.0 * PI,
            Dimension::Sphere => 4.0 * PI,
        }
    }

    /// Coefficient of the constant mode representing the function `1`.
    pub fn unit_constant(self) -> f64 {
        match self {
            Dimension::Circle => 1.0,
            Dimension::Sphere => (4.0 * PI).sqrt(),
        }
    }

    /// Squared `L²` norm of the basis function at `index`.
    pub fn basis_norm_sq(self, index: usize) -> f64 {
        match (self, index) {
            (Dimension::Circle, 0) => 2.0 * PI,
            (Dimension::Circle, _) => PI,
            (Dimension::Sphere, _) => 1.0,
        }
    }
}

/// A band-limited function on `S¹` or `S²` in spectral form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularField {
    dim: Dimension,
    bandlimit: usize,
    coeffs: Vec<f64>,
}

impl AngularField {
    pub fn zeros(dim: Dimension, bandlimit: usize) -> Self {
        Self { dim, bandlimit, coeffs: vec![0.0; dim.coeff_len(bandlimit)] }
    }

    pub fn from_coeffs(dim: Dimension, bandlimit: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dim.coeff_len(bandlimit) {
            return Err(Error::Sizing(format!(
                "expected {} coefficients for bandlimit {bandlimit}, got {}",
                dim.coeff_len(bandlimit),
                coeffs.len()
            )));
        }
        Ok(Self { dim, bandlimit, coeffs })
    }

    /// The constant function with the given value.
    pub fn constant(dim: Dimension, value: f64) -> Self {
        let mut f = Self::zeros(dim, 0);
        f.coeffs[0] = value * dim.unit_constant();
        f
    }

    /// A single basis function at coefficient index `index`.
    pub fn basis(dim: Dimension, bandlimit: usize, index: usize) -> Self {
        let mut f = Self::zeros(dim, bandlimit);
        f.coeffs[index] = 1.0;
        f
    }

    /// Circle field from `(k, amplitude)` pairs, `k < 0` meaning `sin |k|θ`.
    pub fn circle_modes(modes: &[(i64, f64)]) -> Self {
        let bl = modes.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut f = Self::zeros(Dimension::Circle, bl);
        for &(k, a) in modes {
            f.coeffs[Dimension::circle_index(k)] += a;
        }
        f
    }

    /// Sphere field from `(l, m, amplitude)` triples.
    pub fn sphere_modes(modes: &[(usize, i64, f64)]) -> Result<Self> {
        let bl = modes.iter().map(|(l, _, _)| *l).max().unwrap_or(0);
        let mut f = Self::zeros(Dimension::Sphere, bl);
        for &(l, m, a) in modes {
            if m.unsigned_abs() as usize > l {
                return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
            }
            f.coeffs[Dimension::sphere_index(l, m)] += a;
        }
        Ok(f)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Smallest bandlimit holding every coefficient above `tol` in magnitude.
    pub fn effective_bandlimit(&self, tol: f64) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.abs() > tol)
            .map(|i| self.dim.degree(i))
            .unwrap_or(0)
    }

    /// The same function viewed at another bandlimit (zero padded or truncated).
    pub fn resized(&self, bandlimit: usize) -> Self {
        let mut coeffs = vec![0.0; self.dim.coeff_len(bandlimit)];
        let n = coeffs.len().min(self.coeffs.len());
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Self { dim: self.dim, bandlimit, coeffs }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { dim: self.dim, bandlimit: self.bandlimit, coeffs: self.coeffs.iter().map(|c| a * c).collect() }
    }

    /// `self + a * other` at the larger of the two bandlimits.
    pub fn add_scaled(&self, a: f64, other: &AngularField) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.resized(self.bandlimit.max(other.bandlimit));
        for (o, c) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += a * c;
        }
        out
    }

    /// Coefficientwise maximum deviation, padding the shorter field with zeros.
    pub fn max_abs_diff(&self, other: &AngularField) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0.0);
                let b = other.coeffs.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Apply the surface Laplacian `Δ_S` (diagonal in both bases).
    pub fn surface_laplacian(&self) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= -self.dim.laplace_eigenvalue(self.dim.degree(i));
        }
        out
    }

    /// Integral of the field over the circle/sphere.
    pub fn mean_integral(&self) -> f64 {
        match self.dim {
            Dimension::Circle => 2.0 * PI * self.coeffs[0],
            Dimension::Sphere => (4.0 * PI).sqrt() * self.coeffs[0],
        }
    }

    /// Spectral Sobolev norm `(Σ w(k)^s |f̂(k)|²)^{1/2}` with weight
    /// `w = 1 + k²` (circle) or `1 + l(l+1)` (sphere), measured against the
    /// `L²` normalization of each basis function.
    pub fn sobolev_norm(&self, s: u32) -> f64 {
        self.sobolev_norm_with(s as f64)
    }

    /// Sobolev norm with the half-integer shift `s + 1/2` used for boundary traces.
    pub fn sobolev_norm_fractional(&self, s: u32) -> f64 {
        self.sobolev_norm_with(s as f64 + 0.5)
    }

    fn sobolev_norm_with(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w = 1.0 + self.dim.laplace_eigenvalue(self.dim.degree(i));
                w.powf(s) * self.dim.basis_norm_sq(i) * c * c
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Coefficients with respect to the `L²`-orthonormal version of the basis.
    pub fn orthonormal_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().enumerate().map(|(i, c)| c * self.dim.basis_norm_sq(i).sqrt()).collect()
    }

    /// Pointwise value at `(θ, φ)` (`φ` ignored on the circle).
    pub fn evaluate(&self, theta: f64, phi: f64) -> f64 {
        match self.dim {
            Dimension::Circle => {
                let mut v = self.coeffs[0];
                for k in 1..=self.bandlimit {
                    let (s, c) = (k as f64 * theta).sin_cos();
                    v += self.coeffs[2 * k - 1] * c + self.coeffs[2 * k] * s;
                }
                v
            }
            Dimension::Sphere => {
                let table = legendre::normalized_legendre_table(self.bandlimit, theta.cos(), theta.sin());
                let mut v = 0.0;
                for l in 0..=self.bandlimit {
                    v += table[legendre::tri_index(l, 0)] * self.coeffs[Dimension::sphere_index(l, 0)];
                    for m in 1..=l {
                        let (s, c) = (m as f64 * phi).sin_cos();
                        let p = std::f64::consts::SQRT_2 * table[legendre::tri_index(l, m)];
                        v += p * (self.coeffs[Dimension::sphere_index(l, m as i64)] * c
                            + self.coeffs[Dimension::sphere_index(l, -(m as i64))] * s);
                    }
                }
                v
            }
        }
    }

    /// Rotation about the polar axis: `f(θ) -> f(θ + alpha)` on the circle,
    /// `f(θ, φ) -> f(θ, φ + alpha)` on the sphere.
    pub fn rotated(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        match self.dim {
            Dimension::Circle => {
                for k in 1..=self.bandlimit {
                    let (a, b) = (self.coeffs[2 * k - 1], self.coeffs[2 * k]);
                    let (s, c) = (k as f64 * alpha).sin_cos();
                    // a cos k(θ+α) + b sin k(θ+α)
                    out.coeffs[2 * k - 1] = a * c + b * s;
                    out.coeffs[2 * k] = -a * s + b * c;
                }
            }
            Dimension::Sphere => {
                for l in 1..=self.bandlimit {
                    for m in 1..=l as i64 {
                        let ic = Dimension::sphere_index(l, m);
                        let is = Dimension::sphere_index(l, -m);
                        let (a, b) = (self.coeffs[ic], self.coeffs[is]);
                        let (s, c) = (m as f64 * alpha).sin_cos();
                        out.coeffs[ic] = a * c + b * s;
                        out.coeffs[is] = -a * s + b * c;
                    }
                }
            }
        }
        out
    }
}

/// Sample `f` at the nodes of `g`.
pub fn synthesize(f: &AngularField, g: &AngularGrid) -> Result<Vec<f64>> {
    g.synthesize(f)
}

/// Recover the coefficients of a band-limited function from its samples on `g`.
pub fn analyze(samples: &[f64], g: &AngularGrid, bandlimit: usize) -> Result<AngularField> {
    g.analyze(samples, bandlimit)
}

/// Samples of a first derivative of `f` on the nodes of `g`.
pub fn differentiate(f: &AngularField, g: &AngularGrid, var: Derivative) -> Result<Vec<f64>> {
    g.synthesize_derivative(f, var)
}

/// Pointwise product, exact: the result carries the sum of both bandlimits.
pub fn multiply(f: &AngularField, g: &AngularField) -> Result<AngularField> {
    let out = f.bandlimit + g.bandlimit;
    multiply_truncated(f, g, out)
}

/// Pointwise product truncated to `bandlimit`, evaluated on a grid obeying
/// the 3/2 dealiasing rule for the input bandlimits.
pub fn multiply_truncated(f: &AngularField, g: &AngularField, bandlimit: usize) -> Result<AngularField> {
    if f.dim != g.dim {
        return Err(Error::Sizing("cannot multiply circle and sphere fields".into()));
    }
    let degree = f.bandlimit + g.bandlimit;
    let grid = AngularGrid::for_degree(f.dim, degree.max(bandlimit), degree, bandlimit);
    let a = grid.synthesize(f)?;
    let b = grid.synthesize(g)?;
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    grid.analyze(&prod, bandlimit)
}

/// Sobolev norm, see [`AngularField::sobolev_norm`].
pub fn sobolev_norm(f: &AngularField, s: u32) -> f64 {
    f.sobolev_norm(s)
}

/// Highest derivative order supported by [`holder_norm`].
pub const MAX_HOLDER_ORDER: u32 = 6;

/// Hölder-type norm `max_{j <= m} sup |D^j f|`, the supremum taken over an
/// 8x oversampled grid. On the sphere `D^j` ranges over all mixed
/// `∂_θ^a ∂_φ^b`, `a + b = j`. Being a grid maximum, this is a lower bound
/// accurate to the sampling resolution.
pub fn holder_norm(f: &AngularField, m: u32) -> Result<f64> {
    if m > MAX_HOLDER_ORDER {
        return Err(Error::Domain(format!("Hölder order {m} exceeds supported maximum {MAX_HOLDER_ORDER}")));
    }
    match f.dim {
        Dimension::Circle => Ok(circle_holder(f, m)),
        Dimension::Sphere => Ok(sphere_holder(f, m)),
    }
}

fn circle_holder(f: &AngularField, m: u32) -> f64 {
    let k_max = f.bandlimit;
    let n = 8 * (2 * k_max + 1);
    let mut best: f64 = 0.0;
    for j in 0..=m {
        // j-th derivative of a cos kθ + b sin kθ in closed form
        let mut sup: f64 = 0.0;
        for p in 0..n {
            let theta = 2.0 * PI * p as f64 / n as f64;
            let mut v = if j == 0 { f.coeffs[0] } else { 0.0 };
            for k in 1..=k_max {
                let (a, b) = (f.coeffs[2 * k - 1], f.coeffs[2 * k]);
                let kt = k as f64 * theta + j as f64 * PI / 2.0;
                v += (k as f64).powi(j as i32) * (a * kt.cos() + b * kt.sin());
            }
            sup = sup.max(v.abs());
        }
        best = best.max(sup);
    }
    best
}

fn sphere_holder(f: &AngularField, order: u32) -> f64 {
    let lmax = f.bandlimit;
    // Along each meridian circle, the m-component is a trigonometric
    // polynomial of degree <= lmax in θ; its θ-derivatives are taken exactly
    // in Fourier space.
    let n_fourier = 2 * lmax + 2;
    let fourier_theta: Vec<f64> = (0..n_fourier).map(|p| 2.0 * PI * p as f64 / n_fourier as f64).collect();
    let tables: Vec<Vec<f64>> =
        fourier_theta.iter().map(|t| legendre::normalized_legendre_table(lmax, t.cos(), t.sin())).collect();
    // For each m and part (cos/sin): trig coefficients (c_k, s_k) in θ.
    let n_theta = 8 * (lmax + 1);
    let n_phi = 8 * (2 * lmax + 1);
    let thetas: Vec<f64> = (0..n_theta).map(|i| PI * (i as f64 + 0.5) / n_theta as f64).collect();
    let phis: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
    // component[m][part] -> coefficients (a_k cos kθ + b_k sin kθ), k = 0..=lmax
    let mut comps: Vec<[(Vec<f64>, Vec<f64>); 2]> = Vec::with_capacity(lmax + 1);
    for m in 0..=lmax {
        let norm = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
        let mut parts: [(Vec<f64>, Vec<f64>); 2] = Default::default();
        for (part, sign) in [(0usize, 1i64), (1usize, -1i64)] {
            if m == 0 && part == 1 {
                parts[part] = (vec![0.0; lmax + 1], vec![0.0; lmax + 1]);
                continue;
            }
            let samples: Vec<f64> = tables
                .iter()
                .map(|t| {
                    (m..=lmax)
                        .map(|l| {
                            norm * t[legendre::tri_index(l, m)]
                                * f.coeffs[Dimension::sphere_index(l, sign * m as i64)]
                        })
                        .sum()
                })
                .collect();
            let mut a = vec![0.0; lmax + 1];
            let mut b = vec![0.0; lmax + 1];
            for k in 0..=lmax {
                let scale = if k == 0 { 1.0 } else { 2.0 } / n_fourier as f64;
                for (p, s) in samples.iter().enumerate() {
                    let kt = k as f64 * fourier_theta[p];
                    a[k] += scale * s * kt.cos();
                    b[k] += scale * s * kt.sin();
                }
            }
            parts[part] = (a, b);
        }
        comps.push(parts);
    }
    let mut best: f64 = 0.0;
    for j in 0..=order {
        for a_ord in 0..=j {
            let b_ord = j - a_ord;
            // θ-derivative of order a_ord for each (m, part) evaluated at thetas
            let mut sup: f64 = 0.0;
            let theta_vals: Vec<Vec<[f64; 2]>> = thetas
                .iter()
                .map(|&t| {
                    (0..=lmax)
                        .map(|m| {
                            let mut out = [0.0; 2];
                            for (part, o) in out.iter_mut().enumerate() {
                                let (ca, cb) = &comps[m][part];
                                let mut v = 0.0;
                                for k in 0..=lmax {
                                    let kt = k as f64 * t + a_ord as f64 * PI / 2.0;
                                    let w = (k as f64).powi(a_ord as i32);
                                    if k == 0 && a_ord > 0 {
                                        continue;
                                    }
                                    v += w * (ca[k] * kt.cos() + cb[k] * kt.sin());
                                }
                                *o = v;
                            }
                            out
                        })
                        .collect()
                })
                .collect();
            for tv in &theta_vals {
                for &phi in &phis {
                    let mut v = 0.0;
                    for (m, parts) in tv.iter().enumerate() {
                        if m == 0 {
                            if b_ord == 0 {
                                v += parts[0];
                            }
                            continue;
                        }
                        let w = (m as f64).powi(b_ord as i32);
                        let mp = m as f64 * phi + b_ord as f64 * PI / 2.0;
                        v += w * (parts[0] * mp.cos() + parts[1] * mp.sin());
                    }
                    sup = sup.max(v.abs());
                }
            }
            best = best.max(sup);
        }
    }
    best
}
