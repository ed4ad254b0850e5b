//! Steklov spectra of the truncated DNO series.

use faer::Mat;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dno::OperatorSeries;
use crate::error::{Error, Result};

/// Largest imaginary part accepted before a spectrum is declared invalid.
pub const REALNESS_TOL: f64 = 1e-8;

/// Relative distance under which eigenvalues share one real invariant basis.
const CLUSTER_TOL: f64 = 1e-7;

/// Distance under which first-order coefficients are treated as degenerate.
pub const SPLIT_TOL: f64 = 1e-9;

/// Overlap below which a branch assignment is reported as ambiguous.
pub const AMBIGUOUS_OVERLAP: f64 = 0.5;

/// Residual above which a fitted branch is flagged as non-smooth.
pub const SUSPECT_RESIDUAL: f64 = 1e-4;

/// Real eigendecomposition of a real matrix with real spectrum.
///
/// Columns of `right` have unit norm and `left` is `right⁻¹ᵀ`, so
/// `left.column(i)ᵀ right.column(j) = δᵢⱼ`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub values: Vec<f64>,
    pub imag: Vec<f64>,
    pub right: DMatrix<f64>,
    pub left: DMatrix<f64>,
}

impl Decomposition {
    /// Eigendecomposition sorted ascending by real part.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Sizing(format!("matrix is {}x{}", n, a.ncols())));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen("matrix has non-finite entries".into()));
        }
        let m = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
        let evd = m.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let lambda: Vec<(f64, f64)> = (0..n).map(|i| (s[i].re, s[i].im)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| lambda[i].0.total_cmp(&lambda[j].0).then(lambda[i].1.total_cmp(&lambda[j].1)));

        let mut right = DMatrix::zeros(n, n);
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n {
                let (prev, cur) = (lambda[order[end - 1]].0, lambda[order[end]].0);
                if (cur - prev).abs() > CLUSTER_TOL * prev.abs().max(1.0) {
                    break;
                }
                end += 1;
            }
            // Real basis of the cluster's invariant subspace.
            let cluster = &order[start..end];
            let mut parts = DMatrix::zeros(n, 2 * cluster.len());
            for (c, &j) in cluster.iter().enumerate() {
                for i in 0..n {
                    parts[(i, 2 * c)] = u[(i, j)].re;
                    parts[(i, 2 * c + 1)] = u[(i, j)].im;
                }
            }
            let svd = parts.svd(true, false);
            let basis = svd.u.ok_or_else(|| Error::Eigen("svd failed".into()))?;
            let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
            idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            for (c, &k) in idx.iter().take(cluster.len()).enumerate() {
                let mut v = basis.column(k).into_owned();
                orient(&mut v);
                right.set_column(start + c, &v);
            }
            start = end;
        }
        let left = right
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Eigen("eigenvector basis is singular".into()))?
            .transpose();
        if left.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen("eigenvector basis is singular".into()));
        }
        Ok(Self {
            values: order.iter().map(|&i| lambda[i].0).collect(),
            imag: order.iter().map(|&i| lambda[i].1.abs()).collect(),
            right,
            left,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fails if any of the first `count` eigenvalues is not real.
    pub fn check_real(&self, count: usize) -> Result<()> {
        let max_imag = self.imag[..count].iter().fold(0.0f64, |m, &v| m.max(v));
        if max_imag >= REALNESS_TOL {
            return Err(Error::SpectralValidity { max_imag, tolerance: REALNESS_TOL });
        }
        Ok(())
    }
}

/// Largest entry positive.
fn orient(v: &mut DVector<f64>) {
    let norm = v.norm();
    if norm > 0.0 {
        *v /= norm;
    }
    let pivot = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() + 1e-12 { x } else { best });
    if pivot < 0.0 {
        v.neg_mut();
    }
}

/// Lowest eigenvalues of the truncated operator at a fixed `ε`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eps: f64,
    pub values: Vec<f64>,
    /// `|Im σ|` before the imaginary parts were discarded.
    pub im_residual: Vec<f64>,
    /// Unit right eigenvectors as columns.
    pub vectors: DMatrix<f64>,
    /// Left eigenvectors with `wᵢᵀvⱼ = δᵢⱼ`.
    pub left: DMatrix<f64>,
}

/// Eigenvalues of `Σ_{n≤N} εⁿGₙ`, lowest `count` first.
pub fn steklov_spectrum(series: &OperatorSeries, eps: f64, count: usize) -> Result<Spectrum> {
    let n = series.size();
    if count > n {
        return Err(Error::Sizing(format!("requested {count} eigenvalues from a {n}x{n} operator")));
    }
    if !eps.is_finite() {
        return Err(Error::Domain(format!("epsilon {eps} is not finite")));
    }
    let dec = Decomposition::new(&series.matrix_at(eps))?;
    dec.check_real(count)?;
    Ok(Spectrum {
        eps,
        values: dec.values[..count].to_vec(),
        im_residual: dec.imag[..count].to_vec(),
        vectors: dec.right.columns(0, count).into_owned(),
        left: dec.left.columns(0, count).into_owned(),
    })
}

/// One eigenvalue branch followed along an `ε` grid.
#[derive(Clone, Debug)]
pub struct EigenCurve {
    pub branch: usize,
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    pub im_residual: Vec<f64>,
    /// Matched unit eigenvector at each sample.
    pub vectors: Vec<DVector<f64>>,
    /// Fitted coefficients of `σ(ε) ≈ Σ cₙ εⁿ`.
    pub coeffs: Vec<f64>,
    /// Largest absolute deviation of the fit at the samples.
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Follows the lowest `count` eigenvalues across an increasing `ε` grid
/// starting at zero and fits a polynomial of degree `min(N, samples-1)`.
pub fn eigen_curve(series: &OperatorSeries, eps_grid: &[f64], count: usize) -> Result<Vec<EigenCurve>> {
    if eps_grid.first() != Some(&0.0) {
        return Err(Error::Domain("epsilon grid must start at 0".into()));
    }
    if eps_grid.windows(2).any(|w| !(w[1] > w[0])) || eps_grid.iter().any(|e| !e.is_finite()) {
        return Err(Error::Domain("epsilon grid must be finite and strictly increasing".into()));
    }
    let n = series.size();
    if count > n {
        return Err(Error::Sizing(format!("requested {count} branches from a {n}x{n} operator")));
    }
    let decs = eps_grid
        .par_iter()
        .map(|&e| Decomposition::new(&series.matrix_at(e)))
        .collect::<Result<Vec<_>>>()?;

    // Current eigen-index of every branch.
    let mut current: Vec<usize> = (0..count).collect();
    let mut track = vec![current.clone()];
    let mut warnings = vec![Vec::new(); count];
    for t in 1..decs.len() {
        let (prev, next) = (&decs[t - 1], &decs[t]);
        let (assign, overlap) = match_branches(prev, next, &current);
        for b in 0..count {
            if overlap[b] < AMBIGUOUS_OVERLAP {
                warnings[b].push(format!(
                    "ambiguous match between eps={} and eps={} (overlap {:.3}); possible branch crossing",
                    eps_grid[t - 1], eps_grid[t], overlap[b]
                ));
            }
        }
        current = assign;
        track.push(current.clone());
    }

    let degree = series.order.min(eps_grid.len() - 1);
    let mut curves = Vec::with_capacity(count);
    for b in 0..count {
        let idx: Vec<usize> = track.iter().map(|c| c[b]).collect();
        let sigma: Vec<f64> = idx.iter().zip(&decs).map(|(&i, d)| d.values[i]).collect();
        let im_residual: Vec<f64> = idx.iter().zip(&decs).map(|(&i, d)| d.imag[i]).collect();
        let max_imag = im_residual.iter().fold(0.0f64, |m, &v| m.max(v));
        if max_imag >= REALNESS_TOL {
            return Err(Error::SpectralValidity { max_imag, tolerance: REALNESS_TOL });
        }
        let vectors = idx.iter().zip(&decs).map(|(&i, d)| d.right.column(i).into_owned()).collect();
        let (coeffs, residual) = polyfit(eps_grid, &sigma, degree)?;
        curves.push(EigenCurve {
            branch: b,
            eps: eps_grid.to_vec(),
            sigma,
            im_residual,
            vectors,
            coeffs,
            residual,
            warnings: std::mem::take(&mut warnings[b]),
        });
    }
    Ok(curves)
}

/// Greedy overlap assignment of branches from one sample to the next.
///
/// Branches whose eigenvalues coincide form one unit scored by the norm of
/// the projection onto their common eigenspace, since their individual
/// vectors are arbitrary inside it.
fn match_branches(prev: &Decomposition, next: &Decomposition, current: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let n = next.len();
    let mut by_value: Vec<usize> = (0..current.len()).collect();
    by_value.sort_by(|&a, &b| prev.values[current[a]].total_cmp(&prev.values[current[b]]).then(a.cmp(&b)));
    let mut units: Vec<Vec<usize>> = Vec::new();
    for &b in &by_value {
        let v = prev.values[current[b]];
        match units.last_mut() {
            Some(u) if (prev.values[current[u[u.len() - 1]]] - v).abs() <= CLUSTER_TOL * v.abs().max(1.0) => u.push(b),
            _ => units.push(vec![b]),
        }
    }

    let mut scores = Vec::new();
    for (ui, unit) in units.iter().enumerate() {
        let cols: Vec<usize> = unit.iter().map(|&b| current[b]).collect();
        let span = DMatrix::from_columns(&cols.iter().map(|&i| prev.right.column(i).into_owned()).collect::<Vec<_>>());
        let q = if cols.len() == 1 { span } else { span.qr().q() };
        for j in 0..n {
            let s = (q.transpose() * next.right.column(j)).norm();
            scores.push((s, ui, j));
        }
    }
    scores.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut taken = vec![false; n];
    let mut chosen: Vec<Vec<(usize, f64)>> = vec![Vec::new(); units.len()];
    for (s, ui, j) in scores {
        if taken[j] || chosen[ui].len() == units[ui].len() {
            continue;
        }
        taken[j] = true;
        chosen[ui].push((j, s));
    }

    let mut assign = vec![0; current.len()];
    let mut overlap = vec![0.0; current.len()];
    for (unit, mut picks) in units.into_iter().zip(chosen) {
        picks.sort_by(|a, b| next.values[a.0].total_cmp(&next.values[b.0]).then(a.0.cmp(&b.0)));
        let mut members = unit;
        members.sort();
        for (b, (j, s)) in members.into_iter().zip(picks) {
            assign[b] = j;
            overlap[b] = s;
        }
    }
    (assign, overlap)
}

/// Least-squares polynomial fit in `ε`, solved in the scaled variable
/// `ε/ε_max`. Returns the coefficients in powers of `ε` and the largest
/// absolute residual.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    if x.len() != y.len() || x.len() <= degree {
        return Err(Error::Sizing(format!("{} samples cannot fit degree {degree}", x.len())));
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| (x[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(y);
    let c = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Eigen(format!("polynomial fit failed: {e}")))?;
    let residual = (&a * &c - &b).amax();
    let coeffs = c.iter().enumerate().map(|(j, v)| v / scale.powi(j as i32)).collect();
    Ok((coeffs, residual))
}

/// Smoothness diagnostics of one branch.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticityReport {
    pub residual: f64,
    /// Ratio-test radius of the fitted coefficients; infinite when every
    /// nonconstant coefficient vanishes.
    pub radius: f64,
    /// Residual above [`SUSPECT_RESIDUAL`]: crossing or singularity.
    pub suspect: bool,
}

/// Fit residual and ratio-test radius of a branch (at least 8 samples).
///
/// Coefficients whose contribution on the sampled interval falls below
/// `1e-9·max|σ|` are treated as zero. The radius is the median of
/// `|cₙ₋₁/cₙ|` over the upper half of the remaining consecutive pairs.
pub fn analyticity_check(curve: &EigenCurve) -> Result<AnalyticityReport> {
    if curve.eps.len() < 8 {
        return Err(Error::Domain(format!("analyticity check needs at least 8 samples, got {}", curve.eps.len())));
    }
    let emax = curve.eps.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = curve.sigma.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-9 * scale;
    let visible = |n: usize| (curve.coeffs[n] * emax.powi(n as i32)).abs() > floor;
    let ratios: Vec<f64> = (2..curve.coeffs.len())
        .filter(|&n| visible(n) && visible(n - 1))
        .map(|n| (curve.coeffs[n - 1] / curve.coeffs[n]).abs())
        .collect();
    let radius = if ratios.is_empty() {
        match (1..curve.coeffs.len()).filter(|&n| visible(n)).count() {
            0 => f64::INFINITY,
            _ => f64::NAN,
        }
    } else {
        let mut upper = ratios[ratios.len() / 2..].to_vec();
        upper.sort_by(f64::total_cmp);
        let m = upper.len();
        if m % 2 == 1 {
            upper[m / 2]
        } else {
            0.5 * (upper[m / 2 - 1] + upper[m / 2])
        }
    };
    Ok(AnalyticityReport { residual: curve.residual, radius, suspect: curve.residual > SUSPECT_RESIDUAL })
}

/// Low-order coefficients of one branch emanating from an unperturbed
/// eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchCoeffs {
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// Degenerate Rayleigh–Schrödinger coefficients for the eigenvalue group
/// `λ₀` of the diagonal `G₀`.
///
/// First order diagonalizes `G₁` on the `λ₀` eigenspace `P`. Second order
/// diagonalizes `G₂ + G₁RG₁` (reduced resolvent `R` on the complement)
/// inside each first-order eigenspace, which reduces to the rank-one formula
/// for simple splits.
pub fn perturbation_coeffs(series: &OperatorSeries, lambda0: f64) -> Result<Vec<BranchCoeffs>> {
    if series.order < 2 {
        return Err(Error::Sizing(format!("second-order coefficients need N >= 2, got {}", series.order)));
    }
    let g0 = &series.g[0];
    let n = series.size();
    let (p, q): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| (g0[(i, i)] - lambda0).abs() < SPLIT_TOL);
    if p.is_empty() {
        return Err(Error::Domain(format!("{lambda0} is not an eigenvalue of the unperturbed operator")));
    }
    let (g1, g2) = (&series.g[1], &series.g[2]);
    let block = |m: &DMatrix<f64>, rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);

    let b = block(g1, &p, &p);
    let resolvent = DVector::from_iterator(q.len(), q.iter().map(|&i| 1.0 / (lambda0 - g0[(i, i)])));
    let mut g1_qp = block(g1, &q, &p);
    for (r, s) in resolvent.iter().enumerate() {
        g1_qp.row_mut(r).scale_mut(*s);
    }
    let t = block(g2, &p, &p) + block(g1, &p, &q) * g1_qp;

    let first = Decomposition::new(&b)?;
    first.check_real(first.len())?;
    let mut out = Vec::with_capacity(p.len());
    let mut start = 0;
    while start < first.len() {
        let mut end = start + 1;
        while end < first.len() && (first.values[end] - first.values[end - 1]).abs() < SPLIT_TOL {
            end += 1;
        }
        let v = first.right.columns(start, end - start);
        let w = first.left.columns(start, end - start);
        let effective = w.transpose() * &t * v;
        let second = Decomposition::new(&effective)?;
        second.check_real(second.len())?;
        let sigma1 = first.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        for &s2 in &second.values {
            out.push(BranchCoeffs { sigma0: lambda0, sigma1, sigma2: s2 });
        }
        start = end;
    }
    Ok(out)
}

/// Indices of the eigenvalues within `gap` of eigenvalue `k` (chained).
pub fn degenerate_group(values: &[f64], k: usize, gap: f64) -> std::ops::Range<usize> {
    let mut lo = k;
    while lo > 0 && (values[lo] - values[lo - 1]).abs() < gap {
        lo -= 1;
    }
    let mut hi = k + 1;
    while hi < values.len() && (values[hi] - values[hi - 1]).abs() < gap {
        hi += 1;
    }
    lo..hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dno::{dno_series_matrices, SeriesOptions};
    use crate::harmonics::{AngularField, Dimension};

    fn series(rho: &AngularField, k: usize, order: usize) -> OperatorSeries {
        dno_series_matrices(rho, k, order, SeriesOptions::default()).unwrap()
    }

    #[test]
    fn disk_and_ball_spectra() {
        let s = series(&AngularField::zeros(Dimension::Circle, 0), 8, 2);
        let sp = steklov_spectrum(&s, 0.0, 17).unwrap();
        let expected: Vec<f64> = (0..17usize).map(|i| i.div_ceil(2) as f64).collect();
        for (a, b) in sp.values.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = series(&AngularField::zeros(Dimension::Sphere, 0), 4, 2);
        let sp = steklov_spectrum(&s, 0.0, 25).unwrap();
        let mut expected = Vec::new();
        for l in 0..5usize {
            expected.extend(std::iter::repeat_n(l as f64, 2 * l + 1));
        }
        for (a, b) in sp.values.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_disk_spectrum_and_coefficients() {
        let s = series(&AngularField::constant(Dimension::Circle, 1.0), 6, 8);
        let sp = steklov_spectrum(&s, 0.1, 13).unwrap();
        for (i, v) in sp.values.iter().enumerate() {
            let k = i.div_ceil(2) as f64;
            assert!((v - k * (1.0 + 0.1f64.powi(9)) / 1.1).abs() < 1e-10 * k.max(1.0));
        }
        for k in 1..=6 {
            let c = perturbation_coeffs(&s, k as f64).unwrap();
            assert_eq!(c.len(), 2);
            for b in c {
                assert!((b.sigma1 + k as f64).abs() < 1e-10);
                assert!((b.sigma2 - k as f64).abs() < 1e-10);
            }
        }
        assert!(matches!(perturbation_coeffs(&s, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn left_vectors_are_biorthogonal() {
        let rho = AngularField::circle_modes(&[(2, 0.7), (-3, 0.2)]);
        let s = series(&rho, 6, 4);
        let sp = steklov_spectrum(&s, 0.05, 13).unwrap();
        let g = s.matrix_at(0.05);
        let wv = sp.left.transpose() * &sp.vectors;
        assert!((wv - DMatrix::identity(13, 13)).amax() < 1e-10);
        for i in 0..13 {
            let r = &g * sp.vectors.column(i) - sp.vectors.column(i) * sp.values[i];
            assert!(r.amax() < 1e-10);
        }
    }

    #[test]
    fn complex_spectrum_is_rejected() {
        let s = series(&AngularField::zeros(Dimension::Circle, 0), 1, 1);
        let mut bad = s.clone();
        bad.g[0] = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        assert!(matches!(steklov_spectrum(&bad, 0.0, 2), Err(Error::SpectralValidity { .. })));
        assert!(matches!(steklov_spectrum(&s, 0.0, 4), Err(Error::Sizing(_))));
    }

    #[test]
    fn scaling_family_curves_are_geometric() {
        let s = series(&AngularField::constant(Dimension::Circle, 1.0), 4, 8);
        let grid: Vec<f64> = (0..=20).map(|i| 0.01 * i as f64).collect();
        let curves = eigen_curve(&s, &grid, 9).unwrap();
        for c in &curves {
            let k = c.branch.div_ceil(2) as f64;
            assert!(c.residual < 1e-8);
            assert!(c.warnings.is_empty());
            for (e, v) in c.eps.iter().zip(&c.sigma) {
                assert!((v - k / (1.0 + e)).abs() < 1e-5 * k.max(1.0));
            }
            let report = analyticity_check(c).unwrap();
            if k == 0.0 {
                assert_eq!(report.radius, f64::INFINITY);
            } else {
                assert!((report.radius - 1.0).abs() < 1e-4, "{}", report.radius);
            }
        }
    }

    #[test]
    fn unperturbed_curves_are_constant() {
        let s = series(&AngularField::zeros(Dimension::Circle, 0), 4, 4);
        let grid: Vec<f64> = (0..10).map(|i| 0.02 * i as f64).collect();
        for c in eigen_curve(&s, &grid, 9).unwrap() {
            assert!(c.coeffs.iter().enumerate().skip(1).all(|(n, v)| (v * 0.18f64.powi(n as i32)).abs() < 1e-12));
            let r = analyticity_check(&c).unwrap();
            assert!(r.residual < 1e-12 && r.radius.is_infinite() && !r.suspect);
        }
    }

    #[test]
    fn reflection_symmetric_split_is_antisymmetric() {
        let rho = AngularField::circle_modes(&[(2, 1.0)]);
        let s = series(&rho, 10, 8);
        let c = perturbation_coeffs(&s, 1.0).unwrap();
        assert_eq!(c.len(), 2);
        assert!((c[0].sigma1 + c[1].sigma1).abs() < 1e-9);
        assert!(c[1].sigma1 > 0.1);

        let grid: Vec<f64> = (0..=20).map(|i| 0.005 * i as f64).collect();
        let curves = eigen_curve(&s, &grid, 3).unwrap();
        let fit1 = [curves[1].coeffs[1], curves[2].coeffs[1]];
        assert!((fit1[0] - c[0].sigma1).abs() < 1e-6);
        assert!((fit1[1] - c[1].sigma1).abs() < 1e-6);
    }

    #[test]
    fn polyfit_recovers_polynomials() {
        let x: Vec<f64> = (0..12).map(|i| 0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 - 2.0 * t + 0.5 * t * t * t).collect();
        let (c, r) = polyfit(&x, &y, 4).unwrap();
        assert!(r < 1e-12);
        for (a, b) in c.iter().zip([1.0, -2.0, 0.0, 0.5, 0.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn groups_chain_through_gaps() {
        let v = [0.0, 1.0, 1.0 + 1e-8, 1.0 + 2e-8, 2.0];
        assert_eq!(degenerate_group(&v, 2, 1e-6), 1..4);
        assert_eq!(degenerate_group(&v, 4, 1e-6), 4..5);
    }
}
