//! Quadrature grids and batched spectral transforms.
//!
//! Batched transforms act on matrices whose rows are independent channels
//! (typically radial nodes): coefficients are `channels × ncoef`, samples
//! `channels × npoints`. On the sphere the transform is separable, a
//! Legendre stage per order `m` followed by a trigonometric stage per
//! colatitude, both as dense matrix products.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::legendre::{gauss_legendre, normalized_legendre_dtheta, normalized_legendre_table, tri_index};
use super::{AngularField, Dimension};
use crate::error::{Error, Result};

/// Which first derivative to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivative {
    Value,
    /// `∂_θ` (the circle angle, or the sphere colatitude).
    DTheta,
    /// `∂_φ` (sphere only).
    DPhi,
    /// `∂_φ f / sin θ` (sphere only), evaluated without division at the nodes.
    DPhiOverSin,
}

/// Quadrature grid on `S¹` (uniform) or `S²` (Gauss–Legendre in `cos θ`
/// times uniform in `φ`), with precomputed transform tables up to a fixed
/// bandlimit.
#[derive(Clone, Debug)]
pub struct AngularGrid {
    dim: Dimension,
    bandlimit: usize,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    weights: Vec<f64>,
    tables: Tables,
}

#[derive(Clone, Debug)]
enum Tables {
    Circle {
        /// `ncoef × n`: basis values, for synthesis.
        value: DMatrix<f64>,
        /// `ncoef × n`: basis θ-derivatives.
        dtheta: DMatrix<f64>,
        /// `n × ncoef`: analysis weights.
        analysis: DMatrix<f64>,
    },
    Sphere {
        /// Per order `m`: `(L - m + 1) × nθ` tables of `Pbar_l^m`, its θ-derivative,
        /// and `Pbar_l^m / sin θ`, each scaled by the real-basis factor.
        legendre: Vec<[DMatrix<f64>; 3]>,
        /// Per order `m`: `nθ × (L - m + 1)` analysis tables (quadrature folded in).
        legendre_analysis: Vec<DMatrix<f64>>,
        /// `(2L + 1) × nφ`: `[1, cos φ, sin φ, cos 2φ, ...]` and its φ-derivative.
        trig: DMatrix<f64>,
        trig_dphi: DMatrix<f64>,
        /// `nφ × (2L + 1)`: trigonometric analysis weights.
        trig_analysis: DMatrix<f64>,
    },
}

impl AngularGrid {
    /// Default dealiased grid for fields of bandlimit `bandlimit`:
    /// `2(2K+1)` nodes on `S¹`; on `S²`, `⌈3L/2⌉+1` colatitudes and `2(2L+1)` longitudes.
    pub fn new(dim: Dimension, bandlimit: usize) -> Self {
        match dim {
            Dimension::Circle => Self::circle(bandlimit, 2 * (2 * bandlimit + 1)),
            Dimension::Sphere => Self::sphere(bandlimit, (3 * bandlimit).div_ceil(2) + 1, 2 * (2 * bandlimit + 1)),
        }
    }

    /// Smallest grid on which functions up to bandlimit `bandlimit` can be
    /// synthesized and on which products of total degree `degree` are
    /// analyzed exactly up to bandlimit `out`.
    pub fn for_degree(dim: Dimension, bandlimit: usize, degree: usize, out: usize) -> Self {
        let cap = bandlimit.max(out);
        let exact = degree.max(out) + out + 1;
        match dim {
            Dimension::Circle => Self::circle(cap, exact.max(2 * cap + 1)),
            Dimension::Sphere => Self::sphere(cap, exact.div_ceil(2).max(1), exact.max(2 * cap + 1)),
        }
    }

    fn circle(bandlimit: usize, n: usize) -> Self {
        let theta: Vec<f64> = (0..n).map(|p| 2.0 * PI * p as f64 / n as f64).collect();
        let nc = Dimension::Circle.coeff_len(bandlimit);
        let mut value = DMatrix::zeros(nc, n);
        let mut dtheta = DMatrix::zeros(nc, n);
        let mut analysis = DMatrix::zeros(n, nc);
        for (p, &t) in theta.iter().enumerate() {
            value[(0, p)] = 1.0;
            analysis[(p, 0)] = 1.0 / n as f64;
            for k in 1..=bandlimit {
                let (s, c) = (k as f64 * t).sin_cos();
                let kf = k as f64;
                value[(2 * k - 1, p)] = c;
                value[(2 * k, p)] = s;
                dtheta[(2 * k - 1, p)] = -kf * s;
                dtheta[(2 * k, p)] = kf * c;
                analysis[(p, 2 * k - 1)] = 2.0 * c / n as f64;
                analysis[(p, 2 * k)] = 2.0 * s / n as f64;
            }
        }
        Self {
            dim: Dimension::Circle,
            bandlimit,
            n_theta: n,
            n_phi: 1,
            theta,
            weights: vec![2.0 * PI / n as f64; n],
            tables: Tables::Circle { value, dtheta, analysis },
        }
    }

    fn sphere(bandlimit: usize, n_theta: usize, n_phi: usize) -> Self {
        let l_max = bandlimit;
        let (x, w) = gauss_legendre(n_theta);
        let theta: Vec<f64> = x.iter().map(|c| c.acos()).collect();
        let sines: Vec<f64> = x.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let p_tab: Vec<Vec<f64>> = x.iter().zip(&sines).map(|(&c, &s)| normalized_legendre_table(l_max, c, s)).collect();
        let dp_tab: Vec<Vec<f64>> = x
            .iter()
            .zip(&sines)
            .zip(&p_tab)
            .map(|((&c, &s), t)| normalized_legendre_dtheta(l_max, c, s, t))
            .collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let mut legendre = Vec::with_capacity(l_max + 1);
        let mut legendre_analysis = Vec::with_capacity(l_max + 1);
        for m in 0..=l_max {
            let norm = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
            let rows = l_max - m + 1;
            let mut val = DMatrix::zeros(rows, n_theta);
            let mut der = DMatrix::zeros(rows, n_theta);
            let mut over_sin = DMatrix::zeros(rows, n_theta);
            let mut ana = DMatrix::zeros(n_theta, rows);
            for i in 0..n_theta {
                for l in m..=l_max {
                    let p = norm * p_tab[i][tri_index(l, m)];
                    val[(l - m, i)] = p;
                    der[(l - m, i)] = norm * dp_tab[i][tri_index(l, m)];
                    over_sin[(l - m, i)] = p / sines[i];
                    ana[(i, l - m)] = w[i] * dphi * p;
                }
            }
            legendre.push([val, der, over_sin]);
            legendre_analysis.push(ana);
        }
        let nq = 2 * l_max + 1;
        let mut trig = DMatrix::zeros(nq, n_phi);
        let mut trig_dphi = DMatrix::zeros(nq, n_phi);
        let mut trig_analysis = DMatrix::zeros(n_phi, nq);
        for j in 0..n_phi {
            let phi = dphi * j as f64;
            trig[(0, j)] = 1.0;
            trig_analysis[(j, 0)] = 1.0;
            for m in 1..=l_max {
                let (s, c) = (m as f64 * phi).sin_cos();
                let mf = m as f64;
                trig[(2 * m - 1, j)] = c;
                trig[(2 * m, j)] = s;
                trig_dphi[(2 * m - 1, j)] = -mf * s;
                trig_dphi[(2 * m, j)] = mf * c;
                trig_analysis[(j, 2 * m - 1)] = c;
                trig_analysis[(j, 2 * m)] = s;
            }
        }
        let weights = (0..n_theta * n_phi).map(|p| w[p / n_phi] * dphi).collect();
        Self {
            dim: Dimension::Sphere,
            bandlimit,
            n_theta,
            n_phi,
            theta,
            weights,
            tables: Tables::Sphere { legendre, legendre_analysis, trig, trig_dphi, trig_analysis },
        }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    /// Largest bandlimit the precomputed tables support.
    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of colatitude (sphere) or angle (circle) nodes.
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Number of longitude nodes (1 on the circle).
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Node coordinates `(θ, φ)`, `φ = 0` on the circle. Sphere nodes are
    /// ordered colatitude-major.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let dphi = 2.0 * PI / self.n_phi as f64;
        (0..self.len()).map(|p| (self.theta[p / self.n_phi], dphi * (p % self.n_phi) as f64)).collect()
    }

    /// Quadrature weights for the surface measure (`dθ` or `sin θ dθ dφ`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature of samples taken on this grid.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        samples.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    fn check_bandlimit(&self, bandlimit: usize) -> Result<()> {
        if bandlimit > self.bandlimit {
            return Err(Error::Sizing(format!(
                "bandlimit {bandlimit} exceeds grid capacity {}",
                self.bandlimit
            )));
        }
        Ok(())
    }

    pub fn synthesize(&self, f: &AngularField) -> Result<Vec<f64>> {
        self.synthesize_derivative(f, Derivative::Value)
    }

    pub fn synthesize_derivative(&self, f: &AngularField, kind: Derivative) -> Result<Vec<f64>> {
        if f.dim() != self.dim {
            return Err(Error::Sizing("field and grid dimensions differ".into()));
        }
        let coeffs = DMatrix::from_row_slice(1, f.coeffs().len(), f.coeffs());
        Ok(self.synthesize_batch(&coeffs, kind)?.as_slice().to_vec())
    }

    pub fn analyze(&self, samples: &[f64], bandlimit: usize) -> Result<AngularField> {
        if samples.len() != self.len() {
            return Err(Error::Sizing(format!("expected {} samples, got {}", self.len(), samples.len())));
        }
        let s = DMatrix::from_row_slice(1, samples.len(), samples);
        let c = self.analyze_batch(&s, bandlimit)?;
        AngularField::from_coeffs(self.dim, bandlimit, c.as_slice().to_vec())
    }

    /// Synthesize every row of `coeffs` (`channels × ncoef`) to a row of
    /// samples (`channels × npoints`).
    pub fn synthesize_batch(&self, coeffs: &DMatrix<f64>, kind: Derivative) -> Result<DMatrix<f64>> {
        let nc = coeffs.ncols();
        let bl = self
            .dim
            .bandlimit_for_len(nc)
            .ok_or_else(|| Error::Sizing(format!("{nc} is not a valid coefficient count")))?;
        self.check_bandlimit(bl)?;
        let ch = coeffs.nrows();
        match &self.tables {
            Tables::Circle { value, dtheta, .. } => {
                let table = match kind {
                    Derivative::Value => value,
                    Derivative::DTheta => dtheta,
                    _ => return Err(Error::Domain("φ-derivatives do not exist on the circle".into())),
                };
                let mut out = DMatrix::zeros(ch, self.len());
                out.gemm(1.0, coeffs, &table.rows(0, nc), 0.0);
                Ok(out)
            }
            Tables::Sphere { legendre, trig, trig_dphi, .. } => {
                let nq = 2 * bl + 1;
                let nt = self.n_theta;
                // Legendre stage: stage[:, i*nq + q] for colatitude i and trig slot q.
                let mut stage = DMatrix::zeros(ch, nt * nq);
                let table_idx = match kind {
                    Derivative::Value | Derivative::DPhi => 0,
                    Derivative::DTheta => 1,
                    Derivative::DPhiOverSin => 2,
                };
                let mut gathered = DMatrix::zeros(ch, bl + 1);
                let mut part_out = DMatrix::zeros(ch, nt);
                for m in 0..=bl {
                    let rows = bl - m + 1;
                    let table = legendre[m][table_idx].view((0, 0), (rows, nt));
                    let parts: &[(i64, usize)] = if m == 0 { &[(1, 0)] } else { &[(1, 2 * m - 1), (-1, 2 * m)] };
                    for &(sign, q) in parts {
                        let mut g = gathered.columns_mut(0, rows);
                        for l in m..=bl {
                            let idx = Dimension::sphere_index(l, sign * m as i64);
                            g.column_mut(l - m).copy_from(&coeffs.column(idx));
                        }
                        let mut po = part_out.columns_mut(0, nt);
                        po.gemm(1.0, &gathered.columns(0, rows), &table, 0.0);
                        for i in 0..nt {
                            stage.column_mut(i * nq + q).copy_from(&part_out.column(i));
                        }
                    }
                }
                let phi_table = match kind {
                    Derivative::DPhi | Derivative::DPhiOverSin => trig_dphi,
                    _ => trig,
                };
                let np = self.n_phi;
                let mut out = DMatrix::zeros(ch, nt * np);
                for i in 0..nt {
                    let mut block = out.columns_mut(i * np, np);
                    block.gemm(1.0, &stage.columns(i * nq, nq), &phi_table.rows(0, nq), 0.0);
                }
                Ok(out)
            }
        }
    }

    /// Analyze every row of `samples` (`channels × npoints`) to coefficients
    /// of bandlimit `bandlimit` (`channels × ncoef`).
    pub fn analyze_batch(&self, samples: &DMatrix<f64>, bandlimit: usize) -> Result<DMatrix<f64>> {
        self.check_bandlimit(bandlimit)?;
        if samples.ncols() != self.len() {
            return Err(Error::Sizing(format!("expected {} sample columns, got {}", self.len(), samples.ncols())));
        }
        let ch = samples.nrows();
        let nc = self.dim.coeff_len(bandlimit);
        match &self.tables {
            Tables::Circle { analysis, .. } => {
                let mut out = DMatrix::zeros(ch, nc);
                out.gemm(1.0, samples, &analysis.columns(0, nc), 0.0);
                Ok(out)
            }
            Tables::Sphere { legendre_analysis, trig_analysis, .. } => {
                let nq = 2 * bandlimit + 1;
                let nt = self.n_theta;
                let np = self.n_phi;
                let mut stage = DMatrix::zeros(ch, nt * nq);
                for i in 0..nt {
                    let mut block = stage.columns_mut(i * nq, nq);
                    block.gemm(1.0, &samples.columns(i * np, np), &trig_analysis.columns(0, nq), 0.0);
                }
                let mut out = DMatrix::zeros(ch, nc);
                let mut gathered = DMatrix::zeros(ch, nt);
                let mut part_out = DMatrix::zeros(ch, bandlimit + 1);
                for m in 0..=bandlimit {
                    let rows = bandlimit - m + 1;
                    let table = legendre_analysis[m].view((0, 0), (nt, rows));
                    let parts: &[(i64, usize)] = if m == 0 { &[(1, 0)] } else { &[(1, 2 * m - 1), (-1, 2 * m)] };
                    for &(sign, q) in parts {
                        for i in 0..nt {
                            gathered.column_mut(i).copy_from(&stage.column(i * nq + q));
                        }
                        let mut po = part_out.columns_mut(0, rows);
                        po.gemm(1.0, &gathered, &table, 0.0);
                        for l in m..=bandlimit {
                            let idx = Dimension::sphere_index(l, sign * m as i64);
                            out.column_mut(idx).copy_from(&part_out.column(l - m));
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}
