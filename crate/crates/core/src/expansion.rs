//! Transformed-field expansion of the harmonic extension.
//!
//! Pulling `Ω_ε = {r < 1 + ερ}` back to the unit ball turns the Laplace
//! problem into `Δu = εL₁u + ε²L₂u`, with (`∇`, `Δ_S` on the unit sphere)
//!
//! ```text
//! L₁u = -2ρΔu + (2∇ρ·∇u_r + (Δ_Sρ) u_r) / r
//! L₂u = -ρ²Δu + ρ(2∇ρ·∇u_r + (Δ_Sρ) u_r) / r - |∇ρ|² (2u_r/r + u_rr)
//! ```
//!
//! in both two and three dimensions. The series `u = Σ εⁿ uₙ` solves
//! `Δuₙ = L₁u_{n-1} + L₂u_{n-2}`, `uₙ = 0` on the sphere for `n ≥ 1`.
//!
//! Several right-hand sides can be carried through the recursion at once:
//! a *stack* is a matrix of shape `(R·B) × ncoef` whose row `b·R + i` holds
//! radial node `i` of member `b`. Its memory coincides with the `R × (ncoef·B)`
//! matrix whose column `c·B + b` is the radial profile of mode `c` of member
//! `b`, so radial operators act on the whole stack as one product.

use std::sync::Arc;

use nalgebra::{DMatrix, Dyn};

use crate::ballfield::{
    apply_laplacian, field_norm, radial_nodes_for, trace, BallField, RadialGrid, RadialOperatorCache,
};
use crate::error::{Error, Result};
use crate::harmonics::{AngularField, AngularGrid, Derivative, Dimension};

/// Sobolev order of the volume norms recorded for each series term.
pub const SERIES_NORM_ORDER: u32 = 2;

/// Samples of `ρ` and the derived geometric quantities on one angular grid.
#[derive(Clone, Debug)]
pub(crate) struct ShapeSamples {
    pub rho: Vec<f64>,
    pub rho_theta: Vec<f64>,
    /// `ρ_φ / sin θ`; empty on the circle.
    pub rho_phi: Vec<f64>,
    pub lap_s: Vec<f64>,
    /// `|∇ρ|²`.
    pub grad_sq: Vec<f64>,
}

impl ShapeSamples {
    pub fn new(rho: &AngularField, grid: &AngularGrid) -> Result<Self> {
        let values = grid.synthesize(rho)?;
        let rho_theta = grid.synthesize_derivative(rho, Derivative::DTheta)?;
        let rho_phi = match rho.dim() {
            Dimension::Circle => Vec::new(),
            Dimension::Sphere => grid.synthesize_derivative(rho, Derivative::DPhiOverSin)?,
        };
        let lap_s = grid.synthesize(&rho.surface_laplacian())?;
        let grad_sq = (0..values.len())
            .map(|p| rho_theta[p].powi(2) + rho_phi.get(p).map_or(0.0, |v| v * v))
            .collect();
        Ok(Self { rho: values, rho_theta, rho_phi, lap_s, grad_sq })
    }

    /// `∇ρ·∇f` from samples of `f_θ` and `f_φ / sin θ`.
    #[inline]
    pub fn grad_dot(&self, p: usize, f_theta: f64, f_phi: f64) -> f64 {
        let mut v = self.rho_theta[p] * f_theta;
        if !self.rho_phi.is_empty() {
            v += self.rho_phi[p] * f_phi;
        }
        v
    }
}

/// One argument of the transformed operators: a stack and its Laplacian.
pub(crate) struct Operand<'a> {
    pub values: &'a DMatrix<f64>,
    pub laplacian: &'a DMatrix<f64>,
}

/// Radial derivative of every profile in a stack.
pub(crate) fn radial_derivative(radial: &RadialGrid, stack: &DMatrix<f64>) -> DMatrix<f64> {
    let n = radial.len();
    let (rows, cols) = stack.shape();
    let view = stack.clone().reshape_generic(Dyn(n), Dyn(rows / n * cols));
    (radial.d1() * view).reshape_generic(Dyn(rows), Dyn(cols))
}

/// Evaluate `L₁u₁ + L₂u₂` for stacks `u₁`, `u₂` on `grid` and analyze to
/// bandlimit `out`.
pub(crate) fn transformed_operators(
    grid: &AngularGrid,
    shape: &ShapeSamples,
    radial: &RadialGrid,
    u1: Option<Operand<'_>>,
    u2: Option<Operand<'_>>,
    out: usize,
) -> Result<DMatrix<f64>> {
    let sphere = grid.dim() == Dimension::Sphere;
    let channels = match (&u1, &u2) {
        (Some(a), _) => a.values.nrows(),
        (None, Some(b)) => b.values.nrows(),
        (None, None) => return Ok(DMatrix::zeros(0, grid.dim().coeff_len(out))),
    };
    let n_r = radial.len();
    let inv_r: Vec<f64> = (0..channels).map(|row| 1.0 / radial.nodes()[row % n_r]).collect();
    let npts = grid.len();
    let mut acc = DMatrix::zeros(channels, npts);

    if let Some(op) = u1 {
        let b = radial_derivative(radial, op.values);
        let bv = grid.synthesize_batch(&b, Derivative::Value)?;
        let bt = grid.synthesize_batch(&b, Derivative::DTheta)?;
        let bp = if sphere { Some(grid.synthesize_batch(&b, Derivative::DPhiOverSin)?) } else { None };
        let lap = grid.synthesize_batch(op.laplacian, Derivative::Value)?;
        for p in 0..npts {
            let (rho, ls) = (shape.rho[p], shape.lap_s[p]);
            for ch in 0..channels {
                let fp = bp.as_ref().map_or(0.0, |m| m[(ch, p)]);
                let g = 2.0 * shape.grad_dot(p, bt[(ch, p)], fp) + ls * bv[(ch, p)];
                acc[(ch, p)] += g * inv_r[ch] - 2.0 * rho * lap[(ch, p)];
            }
        }
    }

    if let Some(op) = u2 {
        let c = radial_derivative(radial, op.values);
        let cr = radial_derivative(radial, &c);
        let cv = grid.synthesize_batch(&c, Derivative::Value)?;
        let ct = grid.synthesize_batch(&c, Derivative::DTheta)?;
        let cp = if sphere { Some(grid.synthesize_batch(&c, Derivative::DPhiOverSin)?) } else { None };
        let crv = grid.synthesize_batch(&cr, Derivative::Value)?;
        let lap = grid.synthesize_batch(op.laplacian, Derivative::Value)?;
        for p in 0..npts {
            let (rho, ls, gs) = (shape.rho[p], shape.lap_s[p], shape.grad_sq[p]);
            for ch in 0..channels {
                let fp = cp.as_ref().map_or(0.0, |m| m[(ch, p)]);
                let g = 2.0 * shape.grad_dot(p, ct[(ch, p)], fp) + ls * cv[(ch, p)];
                let ir = inv_r[ch];
                acc[(ch, p)] += rho * g * ir - gs * (2.0 * cv[(ch, p)] * ir + crv[(ch, p)]) - rho * rho * lap[(ch, p)];
            }
        }
    }

    grid.analyze_batch(&acc, out)
}

fn operator_grid(dim: Dimension, rho: &AngularField, u_bl: usize, rho_power: usize, out: usize) -> Result<(AngularGrid, ShapeSamples)> {
    let degree = u_bl + rho_power * rho.bandlimit();
    let grid = AngularGrid::for_degree(dim, u_bl.max(rho.bandlimit()), degree, out);
    let shape = ShapeSamples::new(rho, &grid)?;
    Ok((grid, shape))
}

fn check_pair(rho: &AngularField, u: &BallField) -> Result<()> {
    if rho.dim() != u.dim() {
        return Err(Error::Sizing("ρ and u live in different dimensions".into()));
    }
    Ok(())
}

/// `L₁u`, at bandlimit `bandlimit(u) + bandlimit(ρ)` unless `out` truncates it.
pub fn apply_l1(rho: &AngularField, u: &BallField, out: Option<usize>) -> Result<BallField> {
    check_pair(rho, u)?;
    let full = u.bandlimit() + rho.bandlimit();
    let out = out.unwrap_or(full);
    let (grid, shape) = operator_grid(u.dim(), rho, u.bandlimit(), 1, out)?;
    let lap = apply_laplacian(u);
    let op = Operand { values: u.values(), laplacian: lap.values() };
    let values = transformed_operators(&grid, &shape, u.radial_grid(), Some(op), None, out)?;
    BallField::from_values(u.dim(), out, u.radial_grid().clone(), values)
}

/// `L₂u`, at bandlimit `bandlimit(u) + 2·bandlimit(ρ)` unless `out` truncates it.
pub fn apply_l2(rho: &AngularField, u: &BallField, out: Option<usize>) -> Result<BallField> {
    check_pair(rho, u)?;
    let full = u.bandlimit() + 2 * rho.bandlimit();
    let out = out.unwrap_or(full);
    let (grid, shape) = operator_grid(u.dim(), rho, u.bandlimit(), 2, out)?;
    let lap = apply_laplacian(u);
    let op = Operand { values: u.values(), laplacian: lap.values() };
    let values = transformed_operators(&grid, &shape, u.radial_grid(), None, Some(op), out)?;
    BallField::from_values(u.dim(), out, u.radial_grid().clone(), values)
}

/// Precomputed solver, grids and shape samples for running the recursion
/// on many boundary data of a common bandlimit.
#[derive(Debug)]
pub struct SeriesEngine {
    dim: Dimension,
    rho: AngularField,
    xi_bandlimit: usize,
    order: usize,
    k_work: usize,
    solver: RadialOperatorCache,
    /// Grid and shape samples for step `n` at index `n - 1`.
    steps: Vec<(AngularGrid, ShapeSamples)>,
}

/// The recursion output for a stack of boundary data.
#[derive(Clone, Debug)]
pub struct StackSeries {
    pub batch: usize,
    /// Term `n` as a stack at bandlimit [`SeriesEngine::term_bandlimit`].
    pub terms: Vec<DMatrix<f64>>,
    /// Right-hand side `L₁u_{n-1} + L₂u_{n-2}` of term `n` (zero for `n = 0`).
    pub rhs: Vec<DMatrix<f64>>,
}

impl SeriesEngine {
    /// `k_work` defaults to `bandlimit(ξ) + N·bandlimit(ρ)`, at which the
    /// angular computation is exact; the radial resolution defaults to
    /// [`radial_nodes_for`].
    pub fn new(
        rho: &AngularField,
        xi_bandlimit: usize,
        order: usize,
        k_work: Option<usize>,
        radial_nodes: Option<usize>,
    ) -> Result<Self> {
        let dim = rho.dim();
        let k_work = k_work.unwrap_or(xi_bandlimit + order * rho.bandlimit());
        if k_work < xi_bandlimit {
            return Err(Error::Sizing(format!("working bandlimit {k_work} is below the data bandlimit {xi_bandlimit}")));
        }
        let n_r = radial_nodes.unwrap_or_else(|| radial_nodes_for(order, k_work));
        let radial = RadialGrid::new(n_r)?;
        let solver = RadialOperatorCache::new(dim, k_work, radial)?;
        let mut engine = Self { dim, rho: rho.clone(), xi_bandlimit, order, k_work, solver, steps: Vec::new() };
        for n in 1..=order {
            let b1 = engine.term_bandlimit(n - 1);
            let b2 = if n >= 2 { engine.term_bandlimit(n - 2) } else { 0 };
            let bp = rho.bandlimit();
            let degree = if n >= 2 { (b1 + bp).max(b2 + 2 * bp) } else { b1 + bp };
            let out = engine.term_bandlimit(n);
            let grid = AngularGrid::for_degree(dim, b1.max(b2).max(bp), degree, out);
            let shape = ShapeSamples::new(rho, &grid)?;
            engine.steps.push((grid, shape));
        }
        Ok(engine)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn rho(&self) -> &AngularField {
        &self.rho
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn working_bandlimit(&self) -> usize {
        self.k_work
    }

    pub fn xi_bandlimit(&self) -> usize {
        self.xi_bandlimit
    }

    pub fn radial_grid(&self) -> &Arc<RadialGrid> {
        self.solver.radial_grid()
    }

    pub fn solver(&self) -> &RadialOperatorCache {
        &self.solver
    }

    /// Angular bandlimit of term `n`.
    pub fn term_bandlimit(&self, n: usize) -> usize {
        (self.xi_bandlimit + n * self.rho.bandlimit()).min(self.k_work)
    }

    /// Run the recursion for a batch of boundary data, one per row of `xi`
    /// (`B × ncoef(bandlimit(ξ))`).
    pub fn run_stack(&self, xi: &DMatrix<f64>) -> Result<StackSeries> {
        let batch = xi.nrows();
        let nc = self.dim.coeff_len(self.xi_bandlimit);
        if xi.ncols() != nc {
            return Err(Error::Sizing(format!("expected {nc} boundary coefficients, got {}", xi.ncols())));
        }
        let n_r = self.radial_grid().len();
        // u₀: harmonic extension, computed per member.
        let mut u0 = DMatrix::zeros(n_r * batch, nc);
        let zero = DMatrix::zeros(n_r, nc);
        for b in 0..batch {
            let coeffs: Vec<f64> = xi.row(b).iter().copied().collect();
            let w = self.solver.solve_values(&zero, &coeffs)?;
            for c in 0..nc {
                u0.view_mut((b * n_r, c), (n_r, 1)).copy_from(&w.column(c));
            }
        }
        let mut terms = vec![u0];
        let mut rhs = vec![DMatrix::zeros(n_r * batch, nc)];
        for n in 1..=self.order {
            let (grid, shape) = &self.steps[n - 1];
            let out = self.term_bandlimit(n);
            let op1 = Operand { values: &terms[n - 1], laplacian: &rhs[n - 1] };
            let op2 = (n >= 2).then(|| Operand { values: &terms[n - 2], laplacian: &rhs[n - 2] });
            let f = transformed_operators(grid, shape, self.radial_grid(), Some(op1), op2, out)?;
            let u = self.solve_stack(&f, batch)?;
            terms.push(u);
            rhs.push(f);
        }
        Ok(StackSeries { batch, terms, rhs })
    }

    /// Homogeneous-boundary solve of every member of a stack.
    fn solve_stack(&self, f: &DMatrix<f64>, batch: usize) -> Result<DMatrix<f64>> {
        let n_r = self.radial_grid().len();
        let nc = f.ncols();
        let wide = f.clone().reshape_generic(Dyn(n_r), Dyn(nc * batch));
        let zeros = vec![0.0; nc * batch];
        let sol = self.solver.solve_wide(&wide, &zeros, batch)?;
        Ok(sol.reshape_generic(Dyn(n_r * batch), Dyn(nc)))
    }

    /// Extract member `b` of a stack as a [`BallField`] of bandlimit `bandlimit`.
    pub fn member(&self, stack: &DMatrix<f64>, b: usize, bandlimit: usize) -> BallField {
        let n_r = self.radial_grid().len();
        let values = stack.view((b * n_r, 0), (n_r, stack.ncols())).into_owned();
        BallField::from_values(self.dim, bandlimit, self.radial_grid().clone(), values).expect("stack layout")
    }
}

/// The series `u₀, …, u_N` for one boundary datum.
#[derive(Clone, Debug)]
pub struct ExtensionSeries {
    pub rho: AngularField,
    pub xi: AngularField,
    pub order: usize,
    pub terms: Vec<BallField>,
    /// `L₁u_{n-1} + L₂u_{n-2}` for each term (zero for `n = 0`).
    pub rhs: Vec<BallField>,
    /// `‖uₙ‖` in the discrete volume norm of order [`SERIES_NORM_ORDER`].
    pub norms: Vec<f64>,
}

/// Build `u₀, …, u_N` for boundary data `ξ`. `k_work` and `radial_nodes`
/// default as in [`SeriesEngine::new`].
pub fn extension_series(
    rho: &AngularField,
    xi: &AngularField,
    order: usize,
    k_work: Option<usize>,
    radial_nodes: Option<usize>,
) -> Result<ExtensionSeries> {
    if rho.dim() != xi.dim() {
        return Err(Error::Sizing("ρ and ξ live in different dimensions".into()));
    }
    let engine = SeriesEngine::new(rho, xi.bandlimit(), order, k_work, radial_nodes)?;
    let row = DMatrix::from_row_slice(1, xi.coeffs().len(), xi.coeffs());
    let stack = engine.run_stack(&row)?;
    let terms: Vec<BallField> =
        stack.terms.iter().enumerate().map(|(n, t)| engine.member(t, 0, engine.term_bandlimit(n))).collect();
    let rhs: Vec<BallField> =
        stack.rhs.iter().enumerate().map(|(n, t)| engine.member(t, 0, engine.term_bandlimit(n))).collect();
    let norms = terms.iter().map(|t| field_norm(t, SERIES_NORM_ORDER)).collect();
    Ok(ExtensionSeries { rho: rho.clone(), xi: xi.clone(), order, terms, rhs, norms })
}

impl ExtensionSeries {
    /// Largest relative recursion residual
    /// `max_n ‖Δuₙ − (L₁u_{n−1} + L₂u_{n−2})‖ / max(1, ‖uₙ‖)` in the discrete
    /// `L²` volume norm, the residual taken at the nodes with `r < 1`. The
    /// Laplacian is applied by spectral differentiation and the operators are
    /// re-evaluated independently of the recursion.
    pub fn recursion_residual(&self) -> Result<f64> {
        let diffs = self.recursion_defects()?;
        Ok(self
            .terms
            .iter()
            .zip(&diffs)
            .map(|(u, d)| nodal_l2(d, true) / nodal_l2(u, false).max(1.0))
            .fold(0.0, f64::max))
    }

    /// The same residual in the nodal max norm. Differentiation roundoff
    /// grows like `R⁴ε_mach·λ/r²` toward the origin, so this figure is
    /// dominated by the innermost node.
    pub fn recursion_residual_nodal(&self) -> Result<f64> {
        let diffs = self.recursion_defects()?;
        Ok(self
            .terms
            .iter()
            .zip(&diffs)
            .map(|(u, d)| d.values().rows(0, d.values().nrows() - 1).amax() / u.max_abs().max(1.0))
            .fold(0.0, f64::max))
    }

    /// `Δuₙ − (L₁u_{n−1} + L₂u_{n−2})` for every term.
    fn recursion_defects(&self) -> Result<Vec<BallField>> {
        let mut out = Vec::with_capacity(self.terms.len());
        for n in 0..self.terms.len() {
            let u = &self.terms[n];
            let mut target = BallField::zeros(u.dim(), u.bandlimit(), u.radial_grid().clone());
            if n >= 1 {
                target = target.add_scaled(1.0, &apply_l1(&self.rho, &self.terms[n - 1], Some(u.bandlimit()))?);
            }
            if n >= 2 {
                target = target.add_scaled(1.0, &apply_l2(&self.rho, &self.terms[n - 2], Some(u.bandlimit()))?);
            }
            out.push(apply_laplacian(u).add_scaled(-1.0, &target.resized(u.bandlimit())));
        }
        Ok(out)
    }

    /// Largest boundary-condition violation: `|trace(u₀) − ξ|` and `|trace(uₙ)|`.
    pub fn trace_error(&self) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(n, u)| {
                let t = trace(u);
                if n == 0 {
                    t.max_abs_diff(&self.xi)
                } else {
                    t.coeffs().iter().fold(0.0, |m: f64, c| m.max(c.abs()))
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Discrete `L²` volume norm from nodal values: Clenshaw–Curtis in `r`
/// with weight `r^{d−1}`, Parseval in angle. `interior` drops the boundary
/// node.
fn nodal_l2(u: &BallField, interior: bool) -> f64 {
    let g = u.radial_grid();
    let dim = u.dim();
    let pow = dim.ambient() as i32 - 1;
    let weights = g.nodal_weights();
    let rows = if interior { g.len() - 1 } else { g.len() };
    let v = u.values();
    let mut total = 0.0;
    for i in 0..rows {
        let w = weights[i] * g.nodes()[i].powi(pow);
        for c in 0..v.ncols() {
            total += w * dim.basis_norm_sq(c) * v[(i, c)] * v[(i, c)];
        }
    }
    total.sqrt()
}

/// Partial sum `Σ_{n ≤ N} εⁿ uₙ`.
pub fn evaluate_extension(series: &ExtensionSeries, eps: f64) -> BallField {
    let mut acc = series.terms[0].clone();
    let mut power = 1.0;
    for u in &series.terms[1..] {
        power *= eps;
        acc = acc.add_scaled(power, u);
    }
    acc
}

/// Geometric growth rate of a sequence of norms: the largest ratio
/// `xₙ / x_{n-1}` over the last half of the sequence. Entries below
/// `1e-14·max` count as zero; a zero predecessor is bridged by the root of
/// the ratio to the last nonzero entry.
pub fn empirical_ratio(norms: &[f64]) -> Result<f64> {
    let max = norms.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 || !max.is_finite() {
        return Err(Error::UndefinedRate);
    }
    let x: Vec<f64> = norms.iter().map(|v| if v.abs() <= 1e-14 * max { 0.0 } else { v.abs() }).collect();
    let start = (x.len() / 2).max(1);
    let mut rate: f64 = 0.0;
    for i in start..x.len() {
        if x[i] == 0.0 {
            continue;
        }
        if let Some(j) = (0..i).rev().find(|&j| x[j] != 0.0) {
            rate = rate.max((x[i] / x[j]).powf(1.0 / (i - j) as f64));
        }
    }
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radial() -> Arc<RadialGrid> {
        RadialGrid::new(24).unwrap()
    }

    #[test]
    fn operators_vanish_for_constant_rho_on_harmonics() {
        let one = AngularField::constant(Dimension::Circle, 1.0);
        let u = BallField::separable(&AngularField::circle_modes(&[(3, 1.0)]), radial(), |r| r.powi(3));
        assert!(apply_l1(&one, &u, None).unwrap().max_abs() < 1e-9);
        assert!(apply_l2(&one, &u, None).unwrap().max_abs() < 1e-9);
        let one = AngularField::constant(Dimension::Sphere, 1.0);
        let y = AngularField::sphere_modes(&[(2, -1, 1.0)]).unwrap();
        let u = BallField::separable(&y, radial(), |r| r * r);
        assert!(apply_l1(&one, &u, None).unwrap().max_abs() < 1e-9);
        let y10 = AngularField::sphere_modes(&[(1, 0, 1.0)]).unwrap();
        let u = BallField::separable(&y10, radial(), |r| r);
        assert!(apply_l2(&one, &u, None).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn l1_of_r_cos_with_rho_cos() {
        // ρ = cos θ, u = r cos θ: L₁u = (2ρ'·∂_θu_r + ρ''u_r)/r
        //   = (2 sin²θ − cos²θ)/r = (1/2 − (3/2) cos 2θ)/r.
        let rho = AngularField::circle_modes(&[(1, 1.0)]);
        let g = radial();
        let u = BallField::separable(&rho, g.clone(), |r| r);
        let l1 = apply_l1(&rho, &u, None).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((l1.values()[(i, 0)] - 0.5 / r).abs() < 1e-10);
            assert!((l1.values()[(i, 3)] + 1.5 / r).abs() < 1e-10);
            assert!(l1.values()[(i, 1)].abs() < 1e-10);
        }
    }

    #[test]
    fn l2_of_r_cos_with_rho_cos_pointwise() {
        // ρ = cos θ, u = r cos θ: u_r = cos θ, u_rr = 0, Δu = 0, so
        // L₂u = ρ(2ρ'∂_θu_r + ρ''u_r)/r − ρ'²(2u_r/r)
        //     = cos θ(2 sin²θ − cos²θ)/r − 2 sin²θ cos θ / r = −cos³θ / r.
        let rho = AngularField::circle_modes(&[(1, 1.0)]);
        let u = BallField::separable(&rho, radial(), |r| r);
        let l2 = apply_l2(&rho, &u, None).unwrap();
        // Values carry a 1/r factor, so compare at the radial nodes themselves.
        let nodes = l2.radial_grid().nodes().to_vec();
        for (i, t) in [(0usize, 0.3f64), (5, 2.0), (11, 4.4), (17, 5.9), (23, 1.1)] {
            let r = nodes[i];
            let exact = -t.cos().powi(3) / r;
            assert!((l2.evaluate(r, t, 0.0) - exact).abs() < 1e-9 * exact.abs().max(1.0), "r={r}");
        }
    }

    #[test]
    fn scaling_family_has_trivial_series() {
        for dim in [Dimension::Circle, Dimension::Sphere] {
            let one = AngularField::constant(dim, 1.0);
            let xi = match dim {
                Dimension::Circle => AngularField::circle_modes(&[(0, 0.2), (2, 1.0), (-3, 0.5)]),
                Dimension::Sphere => AngularField::sphere_modes(&[(1, 1, 1.0), (3, -2, 0.4)]).unwrap(),
            };
            let s = extension_series(&one, &xi, 4, None, None).unwrap();
            for u in &s.terms[1..] {
                assert!(u.max_abs() < 1e-10, "{dim:?}: {}", u.max_abs());
            }
        }
    }

    #[test]
    fn zero_rho_gives_exact_zero_terms() {
        let zero = AngularField::zeros(Dimension::Circle, 2);
        let xi = AngularField::circle_modes(&[(1, 1.0)]);
        let s = extension_series(&zero, &xi, 3, None, None).unwrap();
        assert!(s.terms[1..].iter().all(|u| u.max_abs() == 0.0));
    }

    #[test]
    fn order_zero_is_harmonic_extension() {
        let rho = AngularField::circle_modes(&[(2, 1.0)]);
        let xi = AngularField::circle_modes(&[(3, 1.0)]);
        let s = extension_series(&rho, &xi, 0, None, None).unwrap();
        assert_eq!(s.terms.len(), 1);
        let g = s.terms[0].radial_grid().clone();
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((s.terms[0].values()[(i, 5)] - r.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn recursion_residual_and_traces() {
        let rho = AngularField::circle_modes(&[(2, 1.0), (-1, 0.3)]);
        let xi = AngularField::circle_modes(&[(1, 1.0)]);
        let s = extension_series(&rho, &xi, 5, None, None).unwrap();
        assert!(s.recursion_residual().unwrap() < 1e-8);
        assert!(s.trace_error() < 1e-12);
        let rho = AngularField::sphere_modes(&[(2, 0, 0.5), (1, -1, 0.2)]).unwrap();
        let xi = AngularField::sphere_modes(&[(1, 0, 1.0)]).unwrap();
        let s = extension_series(&rho, &xi, 3, None, None).unwrap();
        assert!(s.recursion_residual().unwrap() < 1e-8);
        assert!(s.recursion_residual_nodal().unwrap() < 1e-8);
        assert!(s.trace_error() < 1e-12);
        // The nodal norm agrees with the exact quadrature on polynomial profiles.
        for u in &s.terms {
            let exact = field_norm(u, 0);
            assert!((nodal_l2(u, false) - exact).abs() < 1e-12 * exact.max(1.0));
        }
        // A perturbed term is detected.
        let mut bad = s.clone();
        bad.terms[2] = bad.terms[2].add_scaled(1e-3, &bad.terms[2]);
        assert!(bad.recursion_residual().unwrap() > 1e-6);
    }

    #[test]
    fn stacks_match_single_runs() {
        let rho = AngularField::circle_modes(&[(1, 0.4), (3, -0.2)]);
        let engine = SeriesEngine::new(&rho, 2, 3, None, None).unwrap();
        let xi = DMatrix::from_row_slice(2, 5, &[1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0]);
        let stack = engine.run_stack(&xi).unwrap();
        for b in 0..2 {
            let f = AngularField::from_coeffs(Dimension::Circle, 2, xi.row(b).iter().copied().collect()).unwrap();
            let single = extension_series(&rho, &f, 3, None, None).unwrap();
            for n in 0..=3 {
                let m = engine.member(&stack.terms[n], b, engine.term_bandlimit(n));
                assert!((m.values() - single.terms[n].values()).amax() < 1e-13);
            }
        }
    }

    #[test]
    fn empirical_ratio_examples() {
        assert_eq!(empirical_ratio(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        let b: f64 = 0.7;
        assert!((empirical_ratio(&[1.0, b, b * b, b * b * b]).unwrap() - b).abs() < 1e-15);
        assert!(matches!(empirical_ratio(&[0.0, 0.0, 0.0]), Err(Error::UndefinedRate)));
    }
}
