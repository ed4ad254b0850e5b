//! The Dirichlet–Neumann operator of `Ω_ε` as a power series in `ε`.
//!
//! With `a = 1 + ερ`, the DNO factors as `G = M·Ĝ` where
//! `M = (a² + ε²|∇ρ|²)^{-1/2}` normalizes the outward normal and
//! `Ĝξ = (1 + ε²|∇ρ|²/a²) u_r − (ε/a) ∇ρ·∇u` at `r = 1`. Multiplying by
//! `a²` and collecting powers of `ε` gives
//!
//! ```text
//! Ĝₙ = ∂_r uₙ + 2ρ ∂_r u_{n-1} + (ρ² + |∇ρ|²) ∂_r u_{n-2}
//!      − ∇ρ·∇u_{n-1} − ρ ∇ρ·∇u_{n-2} − 2ρ Ĝ_{n-1} − ρ² Ĝ_{n-2}
//! ```
//!
//! where the tangential terms only involve `u₀`, the other terms having
//! zero trace. Every quantity is a polynomial in the boundary samples, so
//! the recursion and the Cauchy product `Gₙ = Σ M_j Ĝ_{n-j}` run pointwise on
//! a grid that is exact for the final degree.

use nalgebra::{DMatrix, Dyn};
use rayon::prelude::*;

use crate::ballfield::{RadialGrid, RadialOperatorCache};
use crate::error::{Error, Result};
use crate::expansion::{radial_derivative, transformed_operators, Operand, SeriesEngine, ShapeSamples};
use crate::harmonics::{AngularField, AngularGrid, Derivative, Dimension};

/// Taylor coefficients `M₀, …, M_N` of the normal normalization factor.
#[derive(Clone, Debug)]
pub struct MetricSeries {
    pub rho: AngularField,
    pub order: usize,
    pub terms: Vec<AngularField>,
}

/// `M_0..=M_N` sampled on `grid`:
/// `(n+1) M_{n+1} = −(2n+1) ρ Mₙ − n q M_{n−1}`, `q = ρ² + |∇ρ|²`.
fn metric_samples(shape: &ShapeSamples, order: usize) -> Vec<Vec<f64>> {
    let npts = shape.rho.len();
    let mut m = vec![vec![1.0; npts]];
    if order >= 1 {
        m.push(shape.rho.iter().map(|r| -r).collect());
    }
    for n in 1..order {
        let nf = n as f64;
        let next = (0..npts)
            .map(|p| {
                let q = shape.rho[p] * shape.rho[p] + shape.grad_sq[p];
                (-(2.0 * nf + 1.0) * shape.rho[p] * m[n][p] - nf * q * m[n - 1][p]) / (nf + 1.0)
            })
            .collect();
        m.push(next);
    }
    m
}

/// Taylor coefficients of `(1 + 2ερ + ε²(ρ² + |∇ρ|²))^{-1/2}`; term `n` has
/// bandlimit `n·bandlimit(ρ)`.
pub fn metric_series(rho: &AngularField, order: usize) -> Result<MetricSeries> {
    let bp = rho.bandlimit();
    let top = order * bp;
    let grid = AngularGrid::for_degree(rho.dim(), top.max(bp), top, top);
    let shape = ShapeSamples::new(rho, &grid)?;
    let samples = metric_samples(&shape, order);
    let terms = samples.iter().enumerate().map(|(n, s)| grid.analyze(s, n * bp)).collect::<Result<Vec<_>>>()?;
    Ok(MetricSeries { rho: rho.clone(), order, terms })
}

/// Truncated DNO series: `Gₙ` and `Ĝₙ` restricted to the basis of
/// bandlimit `K` (column `c` is the image of basis function `c`).
#[derive(Clone, Debug)]
pub struct OperatorSeries {
    pub dim: Dimension,
    pub bandlimit: usize,
    pub order: usize,
    pub g: Vec<DMatrix<f64>>,
    pub g_hat: Vec<DMatrix<f64>>,
}

impl OperatorSeries {
    /// Size of the truncated basis.
    pub fn size(&self) -> usize {
        self.dim.coeff_len(self.bandlimit)
    }

    /// `Σ_{n ≤ N} εⁿ Gₙ`.
    pub fn matrix_at(&self, eps: f64) -> DMatrix<f64> {
        let mut acc = self.g[0].clone();
        let mut power = 1.0;
        for g in &self.g[1..] {
            power *= eps;
            acc += g * power;
        }
        acc
    }

    /// The same series truncated to a lower order.
    pub fn truncated(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            dim: self.dim,
            bandlimit: self.bandlimit,
            order,
            g: self.g[..=order].to_vec(),
            g_hat: self.g_hat[..=order].to_vec(),
        }
    }
}

/// Tuning knobs shared by the series builders.
#[derive(Clone, Copy, Debug, Default)]
pub struct SeriesOptions {
    /// Angular working bandlimit of the interior terms; defaults to the exact
    /// `K + N·bandlimit(ρ)`.
    pub k_work: Option<usize>,
    /// Radial resolution; defaults to [`crate::ballfield::radial_nodes_for`].
    pub radial_nodes: Option<usize>,
}

/// Number of boundary data pushed through the recursion together.
const BATCH: usize = 16;

/// Boundary grid with shape and metric samples.
struct Boundary {
    grid: AngularGrid,
    shape: ShapeSamples,
    metric: Vec<Vec<f64>>,
}

impl Boundary {
    fn new(engine: &SeriesEngine, out: usize) -> Result<Self> {
        let rho = engine.rho();
        let degree = engine.xi_bandlimit() + engine.order() * rho.bandlimit();
        let cap = engine.working_bandlimit().max(rho.bandlimit());
        let grid = AngularGrid::for_degree(engine.dim(), cap, degree, out);
        let shape = ShapeSamples::new(rho, &grid)?;
        let metric = metric_samples(&shape, engine.order());
        Ok(Self { grid, shape, metric })
    }

    /// Samples of `Ĝₙξ` and `Gₙξ`, `n = 0..=N`, for a stack of data
    /// (`B × npts` each).
    fn series_samples(&self, engine: &SeriesEngine, xi: &DMatrix<f64>) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
        let stack = engine.run_stack(xi)?;
        let batch = xi.nrows();
        let radial = engine.radial_grid();
        let n_r = radial.len();
        let last = radial.d1().row(n_r - 1).into_owned();
        let g = &self.grid;
        let npts = g.len();
        let dr: Vec<DMatrix<f64>> = stack
            .terms
            .iter()
            .map(|t| {
                let nc = t.ncols();
                let wide = t.clone().reshape_generic(Dyn(n_r), Dyn(nc * batch));
                let row = (&last * wide).reshape_generic(Dyn(batch), Dyn(nc));
                g.synthesize_batch(&row, Derivative::Value)
            })
            .collect::<Result<_>>()?;
        let xt = g.synthesize_batch(xi, Derivative::DTheta)?;
        let xp = match engine.dim() {
            Dimension::Sphere => Some(g.synthesize_batch(xi, Derivative::DPhiOverSin)?),
            Dimension::Circle => None,
        };
        let s = &self.shape;
        let mut tangential = DMatrix::zeros(batch, npts);
        for p in 0..npts {
            for b in 0..batch {
                let fp = xp.as_ref().map_or(0.0, |m| m[(b, p)]);
                tangential[(b, p)] = s.grad_dot(p, xt[(b, p)], fp);
            }
        }
        let order = engine.order();
        let mut hat: Vec<DMatrix<f64>> = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let mut h = dr[n].clone();
            for p in 0..npts {
                let (rho, q) = (s.rho[p], s.rho[p] * s.rho[p] + s.grad_sq[p]);
                for b in 0..batch {
                    let mut v = h[(b, p)];
                    if n >= 1 {
                        v += 2.0 * rho * dr[n - 1][(b, p)] - 2.0 * rho * hat[n - 1][(b, p)];
                    }
                    if n >= 2 {
                        v += q * dr[n - 2][(b, p)] - rho * rho * hat[n - 2][(b, p)];
                    }
                    if n == 1 {
                        v -= tangential[(b, p)];
                    } else if n == 2 {
                        v -= rho * tangential[(b, p)];
                    }
                    h[(b, p)] = v;
                }
            }
            hat.push(h);
        }
        let mut full = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let mut acc = DMatrix::zeros(batch, npts);
            for j in 0..=n {
                let m = &self.metric[j];
                let h = &hat[n - j];
                for p in 0..npts {
                    for b in 0..batch {
                        acc[(b, p)] += m[p] * h[(b, p)];
                    }
                }
            }
            full.push(acc);
        }
        Ok((hat, full))
    }
}

fn check_dims(rho: &AngularField, xi: &AngularField) -> Result<()> {
    if rho.dim() != xi.dim() {
        return Err(Error::Sizing("ρ and ξ live in different dimensions".into()));
    }
    Ok(())
}

/// `Ĝ₀ξ, …, Ĝ_Nξ`, each at its exact bandlimit `bandlimit(ξ) + n·bandlimit(ρ)`
/// (capped by the working bandlimit).
pub fn dno_hat_series(rho: &AngularField, xi: &AngularField, order: usize, opts: SeriesOptions) -> Result<Vec<AngularField>> {
    check_dims(rho, xi)?;
    let engine = SeriesEngine::new(rho, xi.bandlimit(), order, opts.k_work, opts.radial_nodes)?;
    let out = engine.term_bandlimit(order);
    let boundary = Boundary::new(&engine, out)?;
    let row = DMatrix::from_row_slice(1, xi.coeffs().len(), xi.coeffs());
    let (hat, _) = boundary.series_samples(&engine, &row)?;
    hat.iter()
        .enumerate()
        .map(|(n, h)| boundary.grid.analyze(h.as_slice(), engine.term_bandlimit(n)))
        .collect()
}

/// Assemble `G₀…G_N` and `Ĝ₀…Ĝ_N` on the basis of bandlimit `k`.
pub fn dno_series_matrices(rho: &AngularField, k: usize, order: usize, opts: SeriesOptions) -> Result<OperatorSeries> {
    let dim = rho.dim();
    if k < rho.bandlimit() {
        return Err(Error::Sizing(format!("basis bandlimit {k} is below the bandlimit {} of ρ", rho.bandlimit())));
    }
    let engine = SeriesEngine::new(rho, k, order, opts.k_work, opts.radial_nodes)?;
    let boundary = Boundary::new(&engine, k)?;
    let size = dim.coeff_len(k);
    let chunks: Vec<(usize, usize)> = (0..size).step_by(BATCH).map(|s| (s, BATCH.min(size - s))).collect();
    let results: Vec<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> = chunks
        .par_iter()
        .map(|&(start, len)| {
            let mut xi = DMatrix::zeros(len, size);
            for b in 0..len {
                xi[(b, start + b)] = 1.0;
            }
            let (hat, full) = boundary.series_samples(&engine, &xi)?;
            let hat = hat.iter().map(|h| boundary.grid.analyze_batch(h, k)).collect::<Result<Vec<_>>>()?;
            let full = full.iter().map(|h| boundary.grid.analyze_batch(h, k)).collect::<Result<Vec<_>>>()?;
            Ok((hat, full))
        })
        .collect::<Result<_>>()?;
    let mut g = vec![DMatrix::zeros(size, size); order + 1];
    let mut g_hat = vec![DMatrix::zeros(size, size); order + 1];
    for (&(start, len), (hat, full)) in chunks.iter().zip(&results) {
        for n in 0..=order {
            g[n].columns_mut(start, len).copy_from(&full[n].transpose());
            g_hat[n].columns_mut(start, len).copy_from(&hat[n].transpose());
        }
    }
    Ok(OperatorSeries { dim, bandlimit: k, order, g, g_hat })
}

/// `(Σ_{n ≤ N} εⁿ Gₙ) ξ` on the truncated basis.
pub fn dno_apply(series: &OperatorSeries, eps: f64, xi: &AngularField) -> Result<AngularField> {
    if xi.dim() != series.dim {
        return Err(Error::Sizing("ξ and the operator live in different dimensions".into()));
    }
    if xi.bandlimit() > series.bandlimit {
        return Err(Error::Sizing(format!(
            "ξ has bandlimit {} above the operator basis {}",
            xi.bandlimit(),
            series.bandlimit
        )));
    }
    let x = nalgebra::DVector::from_column_slice(xi.resized(series.bandlimit).coeffs());
    let y = series.matrix_at(eps) * x;
    AngularField::from_coeffs(series.dim, series.bandlimit, y.iter().copied().collect())
}

/// Settings of the fixed-`ε` oracle.
#[derive(Clone, Copy, Debug)]
pub struct DirectOptions {
    /// Angular bandlimit of the interior solve; defaults to
    /// `bandlimit(ξ) + 12·bandlimit(ρ)`, at least `bandlimit(ξ) + 8`.
    pub bandlimit: Option<usize>,
    /// Radial resolution; defaults to the angular bandlimit plus 2 (at least 32).
    pub radial_nodes: Option<usize>,
    /// Bandlimit of the returned field; defaults to that of `ξ`.
    pub output_bandlimit: Option<usize>,
    pub max_iterations: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self { bandlimit: None, radial_nodes: None, output_bandlimit: None, max_iterations: 200 }
    }
}

/// Oracle for `G(ε)ξ`: solve the transformed problem `Δu = εL₁u + ε²L₂u`,
/// `u = ξ` on the sphere, by fixed-point iteration on the Poisson solve,
/// then evaluate the full normal derivative on the boundary. Independent of
/// the series recursion.
pub fn dno_direct(rho: &AngularField, eps: f64, xi: &AngularField, tol: f64, opts: DirectOptions) -> Result<AngularField> {
    check_dims(rho, xi)?;
    let dim = rho.dim();
    let bx = xi.bandlimit();
    let bp = rho.bandlimit();
    let kd = opts.bandlimit.unwrap_or((bx + 12 * bp).max(bx + 8));
    let out = opts.output_bandlimit.unwrap_or(bx);
    let n_r = opts.radial_nodes.unwrap_or((kd + 2).max(32));
    let radial = RadialGrid::new(n_r)?;
    let solver = RadialOperatorCache::new(dim, kd, radial.clone())?;
    let grid = AngularGrid::for_degree(dim, kd.max(bp), kd + 2 * bp, kd);
    let shape = ShapeSamples::new(rho, &grid)?;

    let nc = dim.coeff_len(kd);
    let boundary = xi.resized(kd);
    let mut u = solver.solve_values(&DMatrix::zeros(n_r, nc), boundary.coeffs())?;
    let mut lap = DMatrix::zeros(n_r, nc);
    let mut converged = eps == 0.0 || rho.coeffs().iter().all(|c| *c == 0.0);
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;
    while !converged {
        if iterations >= opts.max_iterations {
            return Err(Error::RadiusExceeded { iterations, last_update });
        }
        iterations += 1;
        let u1 = &u * eps;
        let l1 = &lap * eps;
        let u2 = &u * (eps * eps);
        let l2 = &lap * (eps * eps);
        let f = transformed_operators(
            &grid,
            &shape,
            &radial,
            Some(Operand { values: &u1, laplacian: &l1 }),
            Some(Operand { values: &u2, laplacian: &l2 }),
            kd,
        )?;
        let next = solver.solve_values(&f, boundary.coeffs())?;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::RadiusExceeded { iterations, last_update });
        }
        last_update = (&next - &u).amax();
        let scale = next.amax().max(1.0);
        u = next;
        lap = f;
        if last_update <= tol * scale {
            converged = true;
        }
    }

    // Full boundary operator at r = 1.
    let fine = AngularGrid::for_degree(dim, kd.max(bp), 2 * kd + 2 * bp, out.max(kd));
    let fshape = ShapeSamples::new(rho, &fine)?;
    let dr = radial_derivative(&radial, &u);
    let ur: Vec<f64> = dr.row(n_r - 1).iter().copied().collect();
    let ur = fine.synthesize(&AngularField::from_coeffs(dim, kd, ur)?)?;
    let xt = fine.synthesize_derivative(&boundary, Derivative::DTheta)?;
    let xp = match dim {
        Dimension::Sphere => fine.synthesize_derivative(&boundary, Derivative::DPhiOverSin)?,
        Dimension::Circle => vec![0.0; fine.len()],
    };
    let samples: Vec<f64> = (0..fine.len())
        .map(|p| {
            let a = 1.0 + eps * fshape.rho[p];
            let gs = fshape.grad_sq[p];
            let m = (a * a + eps * eps * gs).powf(-0.5);
            m * ((1.0 + eps * eps * gs / (a * a)) * ur[p] - eps / a * fshape.grad_dot(p, xt[p], xp[p]))
        })
        .collect();
    fine.analyze(&samples, out)
}

/// Oracle matrix of `G(ε)` on the basis of bandlimit `k`, one
/// [`dno_direct`] solve per column.
pub fn dno_direct_matrix(rho: &AngularField, eps: f64, k: usize, tol: f64, opts: DirectOptions) -> Result<DMatrix<f64>> {
    let dim = rho.dim();
    let n = dim.coeff_len(k);
    let opts = DirectOptions { output_bandlimit: Some(k), ..opts };
    let cols = (0..n)
        .into_par_iter()
        .map(|c| dno_direct(rho, eps, &AngularField::basis(dim, k, c), tol, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| cols[j].coeffs()[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_series_examples() {
        let one = AngularField::constant(Dimension::Circle, 1.0);
        let m = metric_series(&one, 6).unwrap();
        for (n, t) in m.terms.iter().enumerate() {
            let expected = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((t.coeffs()[0] - expected).abs() < 1e-12);
        }
        let rho = AngularField::circle_modes(&[(1, 1.0), (-2, 0.3)]);
        let m = metric_series(&rho, 2).unwrap();
        assert!(m.terms[1].max_abs_diff(&rho.scaled(-1.0)) < 1e-14);
        // M₂ against a finite-difference ε-Taylor coefficient at a few angles.
        let h = 1e-3;
        for t in [0.2, 1.7, 4.0] {
            let r = rho.evaluate(t, 0.0);
            let rp = 1.0 * -t.sin() + 0.3 * 2.0 * (2.0 * t).cos();
            let f = |e: f64| (1.0 + 2.0 * e * r + e * e * (r * r + rp * rp)).powf(-0.5);
            let fd = (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (24.0 * h * h);
            assert!((m.terms[2].evaluate(t, 0.0) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn unperturbed_and_scaled_operators() {
        for dim in [Dimension::Circle, Dimension::Sphere] {
            let zero = AngularField::zeros(dim, 0);
            let s = dno_series_matrices(&zero, 4, 2, SeriesOptions::default()).unwrap();
            for c in 0..s.size() {
                assert!((s.g[0][(c, c)] - dim.degree(c) as f64).abs() < 1e-10);
            }
            assert!(s.g[1].amax() < 1e-12 && s.g[2].amax() < 1e-12);
            let one = AngularField::constant(dim, 1.0);
            let s = dno_series_matrices(&one, 4, 3, SeriesOptions::default()).unwrap();
            for n in 0..=3 {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((&s.g[n] - &s.g[0] * sign).amax() < 1e-10, "{dim:?} n={n}");
                if n > 0 {
                    assert!(s.g_hat[n].amax() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn direct_oracle_on_scaled_domains() {
        let one = AngularField::constant(Dimension::Circle, 1.0);
        let xi = AngularField::circle_modes(&[(2, 1.0), (-3, 0.5)]);
        for eps in [0.0, 0.1, 0.3] {
            let g = dno_direct(&one, eps, &xi, 1e-14, DirectOptions::default()).unwrap();
            assert!((g.coeffs()[3] - 2.0 / (1.0 + eps)).abs() < 1e-10);
            assert!((g.coeffs()[6] - 1.5 / (1.0 + eps)).abs() < 1e-10);
        }
    }

    #[test]
    fn series_agrees_with_oracle() {
        let rho = AngularField::circle_modes(&[(1, 0.5), (-2, 0.3), (3, 0.2)]);
        let s = dno_series_matrices(&rho, 8, 6, SeriesOptions::default()).unwrap();
        let xi = AngularField::circle_modes(&[(1, 1.0), (-2, 0.5)]).resized(8);
        let eps = 0.01;
        let a = dno_apply(&s, eps, &xi).unwrap();
        let d = dno_direct(&rho, eps, &xi, 1e-15, DirectOptions::default()).unwrap();
        let rel = a.max_abs_diff(&d) / d.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        assert!(rel < 1e-10, "{rel:e}");
    }

    #[test]
    fn ball_series_agrees_with_oracle_matrix() {
        let rho = AngularField::sphere_modes(&[(1, 0, 0.4), (2, -1, 0.3), (2, 2, 0.2)]).unwrap();
        let s = dno_series_matrices(&rho, 3, 6, SeriesOptions::default()).unwrap();
        let eps = 0.01;
        let d = dno_direct_matrix(&rho, eps, 3, 1e-15, DirectOptions::default()).unwrap();
        let rel = (s.matrix_at(eps) - &d).amax() / d.amax();
        assert!(rel < 1e-10, "{rel:e}");
    }

    #[test]
    fn hat_series_matches_matrix_columns() {
        let rho = AngularField::circle_modes(&[(2, 0.5)]);
        let xi = AngularField::circle_modes(&[(1, 1.0)]);
        let hat = dno_hat_series(&rho, &xi, 3, SeriesOptions::default()).unwrap();
        assert!(hat[0].max_abs_diff(&xi) < 1e-12);
        let s = dno_series_matrices(&rho, 7, 3, SeriesOptions::default()).unwrap();
        for n in 0..=3 {
            let col: Vec<f64> = s.g_hat[n].column(1).iter().copied().collect();
            let from_matrix = AngularField::from_coeffs(Dimension::Circle, 7, col).unwrap();
            assert!(from_matrix.max_abs_diff(&hat[n].resized(7)) < 1e-11, "n={n}");
        }
    }

    #[test]
    fn apply_rejects_oversized_data() {
        let s = dno_series_matrices(&AngularField::zeros(Dimension::Circle, 0), 2, 1, SeriesOptions::default()).unwrap();
        let xi = AngularField::circle_modes(&[(3, 1.0)]);
        assert!(matches!(dno_apply(&s, 0.1, &xi), Err(Error::Sizing(_))));
    }
}
