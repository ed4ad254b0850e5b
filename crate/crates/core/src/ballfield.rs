//! Functions on the unit disk/ball as per-mode radial profiles, and the
//! mode-wise spectral Poisson solver.
//!
//! Radial profiles are sampled at the Chebyshev–Gauss–Lobatto nodes of
//! `[0, 1]` with the origin removed, so `R` nodes carry a polynomial of
//! degree `R - 1` and the last node is the boundary `r = 1`. The mode-`λ`
//! Laplacian is collocated in Euler form `r² w'' + (d-1) r w' - λ w = r² F`,
//! which is diagonal on monomials and kills only `r^k`; together with the
//! boundary row this makes every mode matrix nonsingular and selects the
//! solution that is regular at the origin.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::harmonics::legendre::gauss_legendre;
use crate::harmonics::{AngularField, AngularGrid, Dimension};

/// Default radial resolution.
pub const DEFAULT_RADIAL_NODES: usize = 32;

/// Radial resolution adequate for a series of order `n` at working bandlimit
/// `k_work`: at least 32, at least `24 + 2n`, and above the largest radial
/// polynomial degree `k_work`.
pub fn radial_nodes_for(order: usize, k_work: usize) -> usize {
    DEFAULT_RADIAL_NODES.max(24 + 2 * order).max(k_work + 2)
}

/// Radial collocation nodes with differentiation and quadrature tables.
#[derive(Debug)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    bary: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    /// Interpolation onto Gauss–Legendre nodes of `[0, 1]`.
    quad_interp: DMatrix<f64>,
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if n < 2 {
            return Err(Error::Sizing(format!("radial resolution {n} is below 2")));
        }
        // Lobatto nodes of [0,1] in increasing order, r = 0 dropped.
        let nodes: Vec<f64> = (1..=n).map(|j| 0.5 * (1.0 - (PI * j as f64 / n as f64).cos())).collect();
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let prod: f64 = (0..n).filter(|&k| k != j).map(|k| 4.0 * (nodes[j] - nodes[k])).product();
                1.0 / prod
            })
            .collect();
        let mut d1 = DMatrix::zeros(n, n);
        let mut d2 = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    d1[(i, j)] = v;
                    diag -= v;
                }
            }
            d1[(i, i)] = diag;
        }
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = 2.0 * d1[(i, j)] * (d1[(i, i)] - 1.0 / (nodes[i] - nodes[j]));
                    d2[(i, j)] = v;
                    diag -= v;
                }
            }
            d2[(i, i)] = diag;
        }
        let (x, w) = gauss_legendre(n + 2);
        let quad_nodes: Vec<f64> = x.iter().map(|t| 0.5 * (1.0 + t)).collect();
        let quad_weights: Vec<f64> = w.iter().map(|t| 0.5 * t).collect();
        let mut quad_interp = DMatrix::zeros(quad_nodes.len(), n);
        for (q, &r) in quad_nodes.iter().enumerate() {
            quad_interp.row_mut(q).copy_from(&interpolation_row(&nodes, &bary, r).transpose());
        }
        Ok(Arc::new(Self { nodes, bary, d1, d2, quad_interp, quad_nodes, quad_weights }))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Collocation radii in increasing order; the last is `1`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// First-derivative matrix.
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    /// Second-derivative matrix.
    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    /// Row vector mapping nodal values to the interpolant at radius `r`.
    pub fn interpolation_weights(&self, r: f64) -> DVector<f64> {
        interpolation_row(&self.nodes, &self.bary, r)
    }

    /// `∫₀¹ g(r) dr` for nodal data `g` of a polynomial of degree `< 2R + 3`
    /// given at the Gauss nodes returned by [`RadialGrid::quadrature`].
    pub fn quadrature(&self) -> (&[f64], &[f64], &DMatrix<f64>) {
        (&self.quad_nodes, &self.quad_weights, &self.quad_interp)
    }

    /// Clenshaw–Curtis weights of `[0, 1]` at the collocation nodes. The
    /// dropped origin carries weight `1/(R²−1)` (even `R`) or `1/R²` (odd
    /// `R`), so the sum is exact for polynomials of degree `≤ R` vanishing
    /// at `r = 0`.
    pub fn nodal_weights(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let nf = n as f64;
        (1..=n)
            .map(|j| {
                let theta = PI * j as f64 / nf;
                if j == n {
                    return 0.5 / if n.is_multiple_of(2) { nf * nf - 1.0 } else { nf * nf };
                }
                let mut v = 1.0;
                for k in 1..=(n - 1) / 2 {
                    let kf = k as f64;
                    v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
                }
                if n.is_multiple_of(2) {
                    v -= (nf * theta).cos() / (nf * nf - 1.0);
                }
                v / nf
            })
            .collect()
    }
}

fn interpolation_row(nodes: &[f64], bary: &[f64], r: f64) -> DVector<f64> {
    let n = nodes.len();
    let mut row = DVector::zeros(n);
    if let Some(j) = nodes.iter().position(|&x| x == r) {
        row[j] = 1.0;
        return row;
    }
    let mut denom = 0.0;
    for j in 0..n {
        let t = bary[j] / (r - nodes[j]);
        row[j] = t;
        denom += t;
    }
    row / denom
}

/// A function on the unit disk/ball: column `c` holds the radial profile of
/// angular mode `c` at the radial nodes.
#[derive(Clone, Debug)]
pub struct BallField {
    dim: Dimension,
    bandlimit: usize,
    grid: Arc<RadialGrid>,
    values: DMatrix<f64>,
}

impl BallField {
    pub fn zeros(dim: Dimension, bandlimit: usize, grid: Arc<RadialGrid>) -> Self {
        let values = DMatrix::zeros(grid.len(), dim.coeff_len(bandlimit));
        Self { dim, bandlimit, grid, values }
    }

    pub fn from_values(dim: Dimension, bandlimit: usize, grid: Arc<RadialGrid>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != grid.len() || values.ncols() != dim.coeff_len(bandlimit) {
            return Err(Error::Sizing(format!(
                "values are {}x{}, expected {}x{}",
                values.nrows(),
                values.ncols(),
                grid.len(),
                dim.coeff_len(bandlimit)
            )));
        }
        Ok(Self { dim, bandlimit, grid, values })
    }

    /// Sample a function given pointwise in `(r, θ, φ)` and analyze each
    /// radial shell to bandlimit `bandlimit`.
    pub fn from_fn(
        dim: Dimension,
        bandlimit: usize,
        grid: Arc<RadialGrid>,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Self> {
        let ag = AngularGrid::new(dim, bandlimit);
        let pts = ag.nodes();
        let samples = DMatrix::from_fn(grid.len(), pts.len(), |i, p| f(grid.nodes()[i], pts[p].0, pts[p].1));
        let values = ag.analyze_batch(&samples, bandlimit)?;
        Self::from_values(dim, bandlimit, grid, values)
    }

    /// Separable field `profile(r) · g`.
    pub fn separable(g: &AngularField, grid: Arc<RadialGrid>, profile: impl Fn(f64) -> f64) -> Self {
        let prof: Vec<f64> = grid.nodes().iter().map(|&r| profile(r)).collect();
        let values = DMatrix::from_fn(grid.len(), g.coeffs().len(), |i, c| prof[i] * g.coeffs()[c]);
        Self { dim: g.dim(), bandlimit: g.bandlimit(), grid, values }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn radial_grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Radial profile of one angular mode.
    pub fn mode(&self, index: usize) -> Vec<f64> {
        self.values.column(index).iter().copied().collect()
    }

    /// The same field at another angular bandlimit (zero padded or truncated).
    pub fn resized(&self, bandlimit: usize) -> Self {
        let nc = self.dim.coeff_len(bandlimit);
        let keep = nc.min(self.values.ncols());
        let mut values = DMatrix::zeros(self.grid.len(), nc);
        values.columns_mut(0, keep).copy_from(&self.values.columns(0, keep));
        Self { dim: self.dim, bandlimit, grid: self.grid.clone(), values }
    }

    /// `self + a * other` at the larger bandlimit.
    pub fn add_scaled(&self, a: f64, other: &BallField) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.resized(self.bandlimit.max(other.bandlimit));
        let n = other.values.ncols();
        let mut cols = out.values.columns_mut(0, n);
        cols += &other.values * a;
        out
    }

    /// Largest absolute nodal value.
    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }

    /// Value at a point `(r, θ, φ)` of the closed ball (`φ` ignored in 2D).
    pub fn evaluate(&self, r: f64, theta: f64, phi: f64) -> f64 {
        let w = self.grid.interpolation_weights(r);
        let radial: Vec<f64> = self.values.tr_mul(&w).iter().copied().collect();
        AngularField::from_coeffs(self.dim, self.bandlimit, radial).expect("layout").evaluate(theta, phi)
    }
}

/// Factorized mode matrices for every degree up to a bandlimit.
#[derive(Debug)]
pub struct RadialOperatorCache {
    dim: Dimension,
    bandlimit: usize,
    grid: Arc<RadialGrid>,
    factors: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl RadialOperatorCache {
    pub fn new(dim: Dimension, bandlimit: usize, grid: Arc<RadialGrid>) -> Result<Self> {
        let n = grid.len();
        let d = dim.ambient() as f64;
        let mut factors = Vec::with_capacity(bandlimit + 1);
        for degree in 0..=bandlimit {
            let lambda = dim.laplace_eigenvalue(degree);
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n - 1 {
                let r = grid.nodes[i];
                for j in 0..n {
                    a[(i, j)] = r * r * grid.d2[(i, j)] + (d - 1.0) * r * grid.d1[(i, j)];
                }
                a[(i, i)] -= lambda;
            }
            a[(n - 1, n - 1)] = 1.0;
            let lu = a.lu();
            if !lu.is_invertible() {
                return Err(Error::Solver(format!("mode matrix for degree {degree} is singular")));
            }
            factors.push(lu);
        }
        Ok(Self { dim, bandlimit, grid, factors })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn radial_grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Solve `Δw = F`, `w(1) = ξ` for raw values: `f` is `R × ncoef`, `xi`
    /// has `ncoef` entries.
    pub fn solve_values(&self, f: &DMatrix<f64>, xi: &[f64]) -> Result<DMatrix<f64>> {
        self.solve_wide(f, xi, 1)
    }

    /// Batched solve: column `c·B + b` of `f` (`R × ncoef·B`) is the radial
    /// right-hand side of mode `c` for member `b`, with boundary value
    /// `xi[c·B + b]`.
    pub fn solve_wide(&self, f: &DMatrix<f64>, xi: &[f64], batch: usize) -> Result<DMatrix<f64>> {
        let n = self.grid.len();
        let nc = f.ncols() / batch.max(1);
        let bl = self.dim.bandlimit_for_len(nc).ok_or_else(|| Error::Sizing(format!("{nc} modes")))?;
        if bl > self.bandlimit || f.nrows() != n || f.ncols() != nc * batch || xi.len() != f.ncols() {
            return Err(Error::Sizing(format!(
                "right-hand side of bandlimit {bl} and {} rows does not fit the solver (bandlimit {}, {n} nodes)",
                f.nrows(),
                self.bandlimit
            )));
        }
        let mut out = DMatrix::zeros(n, nc * batch);
        let mut by_degree: Vec<Vec<usize>> = vec![Vec::new(); bl + 1];
        for c in 0..nc {
            by_degree[self.dim.degree(c)].push(c);
        }
        let r2: Vec<f64> = self.grid.nodes.iter().map(|r| r * r).collect();
        for (degree, modes) in by_degree.iter().enumerate() {
            let mut rhs = DMatrix::zeros(n, modes.len() * batch);
            for (q, &c) in modes.iter().enumerate() {
                for b in 0..batch {
                    let (src, dst) = (c * batch + b, q * batch + b);
                    for i in 0..n - 1 {
                        rhs[(i, dst)] = r2[i] * f[(i, src)];
                    }
                    rhs[(n - 1, dst)] = xi[src];
                }
            }
            if !self.factors[degree].solve_mut(&mut rhs) {
                return Err(Error::Solver(format!("mode solve failed for degree {degree}")));
            }
            for (q, &c) in modes.iter().enumerate() {
                out.columns_mut(c * batch, batch).copy_from(&rhs.columns(q * batch, batch));
            }
        }
        Ok(out)
    }
}

/// Mode-wise Laplacian `w'' + (d-1) w'/r - λ w/r²` at every radial node.
pub fn apply_laplacian(u: &BallField) -> BallField {
    let g = &u.grid;
    let d = u.dim.ambient() as f64;
    let mut out = &g.d2 * &u.values;
    let first = &g.d1 * &u.values;
    for c in 0..u.values.ncols() {
        let lambda = u.dim.laplace_eigenvalue(u.dim.degree(c));
        for i in 0..g.len() {
            let r = g.nodes[i];
            out[(i, c)] += (d - 1.0) * first[(i, c)] / r - lambda * u.values[(i, c)] / (r * r);
        }
    }
    BallField { dim: u.dim, bandlimit: u.bandlimit, grid: u.grid.clone(), values: out }
}

/// Solve `Δw = F` in the disk/ball with `w = ξ` on the boundary.
pub fn poisson_solve(cache: &RadialOperatorCache, f: &BallField, xi: &AngularField) -> Result<BallField> {
    if f.dim != cache.dim || xi.dim() != cache.dim {
        return Err(Error::Sizing("dimension mismatch between solver and data".into()));
    }
    if !Arc::ptr_eq(&f.grid, &cache.grid) && f.grid.len() != cache.grid.len() {
        return Err(Error::Sizing("radial grids differ".into()));
    }
    let bl = f.bandlimit.max(xi.bandlimit());
    let rhs = f.resized(bl);
    let xi = xi.resized(bl);
    let values = cache.solve_values(&rhs.values, xi.coeffs())?;
    Ok(BallField { dim: f.dim, bandlimit: bl, grid: cache.grid.clone(), values })
}

/// Boundary values `u(1, ·)`.
pub fn trace(u: &BallField) -> AngularField {
    let last = u.grid.len() - 1;
    let coeffs = u.values.row(last).iter().copied().collect();
    AngularField::from_coeffs(u.dim, u.bandlimit, coeffs).expect("layout")
}

/// Boundary normal derivative `∂_r u(1, ·)`.
pub fn normal_trace(u: &BallField) -> AngularField {
    let last = u.grid.len() - 1;
    let coeffs = (u.grid.d1.row(last) * &u.values).iter().copied().collect();
    AngularField::from_coeffs(u.dim, u.bandlimit, coeffs).expect("layout")
}

/// Discrete `H^s` volume norm:
/// `Σ_modes Σ_{j ≤ s} (1 + λ)^{s-j} ∫₀¹ |∂_r^j w|² r^{d-1} dr`, each mode
/// weighted by the `L²` norm of its angular basis function. The radial
/// integrals are exact for polynomial profiles.
pub fn field_norm(u: &BallField, s: u32) -> f64 {
    let g = &u.grid;
    let d = u.dim.ambient() as i32;
    let (qn, qw, interp) = g.quadrature();
    let measure: Vec<f64> = qn.iter().zip(qw).map(|(r, w)| w * r.powi(d - 1)).collect();
    let mut deriv = u.values.clone();
    let mut total = 0.0;
    for j in 0..=s {
        if j > 0 {
            deriv = &g.d1 * &deriv;
        }
        let at_quad = interp * &deriv;
        for c in 0..at_quad.ncols() {
            let lambda = u.dim.laplace_eigenvalue(u.dim.degree(c));
            let integral: f64 = at_quad.column(c).iter().zip(&measure).map(|(v, m)| v * v * m).sum();
            total += (1.0 + lambda).powi((s - j) as i32) * u.dim.basis_norm_sq(c) * integral;
        }
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<RadialGrid> {
        RadialGrid::new(n).unwrap()
    }

    #[test]
    fn differentiation_is_exact_on_polynomials() {
        let g = grid(12);
        let f: DVector<f64> = DVector::from_iterator(12, g.nodes().iter().map(|r| r.powi(7) - 2.0 * r * r));
        let df = g.d1() * &f;
        let d2f = g.d2() * &f;
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((df[i] - (7.0 * r.powi(6) - 4.0 * r)).abs() < 1e-11);
            assert!((d2f[i] - (42.0 * r.powi(5) - 4.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn laplacian_examples() {
        let g = grid(16);
        let u = BallField::separable(&AngularField::circle_modes(&[(1, 1.0)]), g.clone(), |r| r);
        assert!(apply_laplacian(&u).max_abs() < 1e-11);
        let u = BallField::separable(&AngularField::constant(Dimension::Circle, 1.0), g.clone(), |r| r * r);
        let lap = apply_laplacian(&u);
        assert!(lap.values().column(0).iter().all(|v| (v - 4.0).abs() < 1e-10));
        let y10 = AngularField::sphere_modes(&[(1, 0, 1.0)]).unwrap();
        let u = BallField::separable(&y10, g, |r| r * r);
        let lap = apply_laplacian(&u);
        assert!(lap.values().column(2).iter().all(|v| (v - 4.0).abs() < 1e-10));
    }

    #[test]
    fn poisson_examples() {
        let g = grid(20);
        let cache = RadialOperatorCache::new(Dimension::Circle, 5, g.clone()).unwrap();
        let xi = AngularField::circle_modes(&[(4, 1.0)]);
        let w = poisson_solve(&cache, &BallField::zeros(Dimension::Circle, 4, g.clone()), &xi).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((w.values()[(i, 7)] - r.powi(4)).abs() < 1e-12);
        }
        let one = BallField::separable(&AngularField::constant(Dimension::Circle, 1.0), g.clone(), |_| 1.0);
        let w = poisson_solve(&cache, &one, &AngularField::zeros(Dimension::Circle, 0)).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((w.values()[(i, 0)] - (r * r - 1.0) / 4.0).abs() < 1e-13);
        }
        assert!(trace(&w).coeffs()[0].abs() < 1e-15);
        assert!((normal_trace(&w).coeffs()[0] - 0.5).abs() < 1e-12);

        let cache3 = RadialOperatorCache::new(Dimension::Sphere, 3, g.clone()).unwrap();
        let y21 = AngularField::sphere_modes(&[(2, 1, 1.0)]).unwrap();
        let w = poisson_solve(&cache3, &BallField::zeros(Dimension::Sphere, 2, g.clone()), &y21).unwrap();
        let idx = Dimension::sphere_index(2, 1);
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((w.values()[(i, idx)] - r * r).abs() < 1e-12);
        }
        assert!((normal_trace(&w).coeffs()[idx] - 2.0).abs() < 1e-11);
    }

    #[test]
    fn nodal_weights_integrate_monomials() {
        for n in [7, 16, 33] {
            let g = grid(n);
            let w = g.nodal_weights();
            assert!(w.iter().all(|v| *v > 0.0));
            for p in 1..=n {
                let sum: f64 = w.iter().zip(g.nodes()).map(|(w, r)| w * r.powi(p as i32)).sum();
                assert!((sum - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn traces_of_monomials() {
        let g = grid(16);
        let u = BallField::separable(&AngularField::circle_modes(&[(3, 1.0)]), g, |r| r.powi(3));
        assert!((trace(&u).coeffs()[5] - 1.0).abs() < 1e-15);
        assert!((normal_trace(&u).coeffs()[5] - 3.0).abs() < 1e-11);
    }

    #[test]
    fn norm_examples() {
        let g = grid(16);
        let one2 = BallField::separable(&AngularField::constant(Dimension::Circle, 1.0), g.clone(), |_| 1.0);
        assert!((field_norm(&one2, 0) - PI.sqrt()).abs() < 1e-13);
        let one3 = BallField::separable(&AngularField::constant(Dimension::Sphere, 1.0), g.clone(), |_| 1.0);
        assert!((field_norm(&one3, 0) - (4.0 * PI / 3.0).sqrt()).abs() < 1e-13);
        let rc = BallField::separable(&AngularField::circle_modes(&[(1, 1.0)]), g, |r| r);
        assert!((field_norm(&rc, 0) - (PI / 4.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn evaluate_matches_definition() {
        let g = grid(16);
        let f = BallField::from_fn(Dimension::Sphere, 3, g, |r, t, p| r * r * t.sin() * t.cos() * p.cos()).unwrap();
        let (r, t, p) = (0.37, 1.1, 2.5);
        assert!((f.evaluate(r, t, p) - r * r * t.sin() * t.cos() * p.cos()).abs() < 1e-12);
    }
}
