//! Shape calculus for the Steklov eigenvalues: volume, eigenvalue gradients
//! with respect to the coefficients of `ρ`, and volume-constrained ascent.

use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dno::{dno_series_matrices, SeriesOptions};
use crate::eigen::{degenerate_group, Decomposition};
use crate::error::{Error, Result};
use crate::harmonics::{multiply, AngularField, Dimension};
use crate::shape::min_radius;

/// Eigenvalues closer than this are treated as one degenerate group.
pub const GAP_TOL: f64 = 1e-6;

/// Central-difference step for derivatives of the assembled matrix.
pub const MATRIX_FD_STEP: f64 = 1e-5;

/// Projected-gradient norm at which the optimizer stops.
pub const GRADIENT_TOL: f64 = 1e-6;

/// Step halvings tried before the optimizer gives up on an iteration.
const MAX_HALVINGS: usize = 40;

/// Truncation used to assemble `Σ εⁿGₙ` during shape calculus.
#[derive(Clone, Copy, Debug)]
pub struct SeriesConfig {
    pub bandlimit: usize,
    pub order: usize,
    pub options: SeriesOptions,
}

impl SeriesConfig {
    pub fn new(bandlimit: usize, order: usize) -> Self {
        Self { bandlimit, order, options: SeriesOptions::default() }
    }

    /// The truncated operator at `ε` for the perturbation `ρ`.
    pub fn matrix(&self, rho: &AngularField, eps: f64) -> Result<DMatrix<f64>> {
        Ok(dno_series_matrices(rho, self.bandlimit, self.order, self.options)?.matrix_at(eps))
    }
}

/// `1 + ερ` as a band-limited field.
fn radius_field(rho: &AngularField, eps: f64) -> AngularField {
    AngularField::constant(rho.dim(), 1.0).add_scaled(eps, rho)
}

fn check_domain(rho: &AngularField, eps: f64) -> Result<()> {
    let min = min_radius(rho, eps)?;
    if min <= 0.0 {
        return Err(Error::DegenerateDomain { min_radius: min });
    }
    Ok(())
}

/// Volume (area in 2D) of `{r < 1 + ερ}`, exact for band-limited `ρ`.
pub fn volume(rho: &AngularField, eps: f64) -> Result<f64> {
    check_domain(rho, eps)?;
    let a = radius_field(rho, eps);
    let a2 = multiply(&a, &a)?;
    Ok(match rho.dim() {
        Dimension::Circle => 0.5 * a2.mean_integral(),
        Dimension::Sphere => multiply(&a2, &a)?.mean_integral() / 3.0,
    })
}

/// Volume of the unit disk or ball.
pub fn unit_volume(dim: Dimension) -> f64 {
    match dim {
        Dimension::Circle => std::f64::consts::PI,
        Dimension::Sphere => 4.0 * std::f64::consts::PI / 3.0,
    }
}

/// `∂V/∂A_c` for every coefficient of `ρ`.
pub fn volume_gradient(rho: &AngularField, eps: f64) -> Result<Vec<f64>> {
    let dim = rho.dim();
    let a = radius_field(rho, eps);
    let w = match dim {
        Dimension::Circle => a,
        Dimension::Sphere => multiply(&a, &a)?,
    };
    Ok((0..rho.coeffs().len())
        .map(|c| eps * w.coeffs().get(c).copied().unwrap_or(0.0) * dim.basis_norm_sq(c))
        .collect())
}

/// Rescales `1 + ερ` so the domain has the volume `target`.
pub fn project_volume(rho: &AngularField, eps: f64, target: f64) -> Result<AngularField> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("volume projection needs eps > 0, got {eps}")));
    }
    let v = volume(rho, eps)?;
    let s = (target / v).powf(1.0 / rho.dim().ambient() as f64);
    let mut out = rho.scaled(s);
    out.coeffs_mut()[0] += (s - 1.0) / eps * rho.dim().unit_constant();
    Ok(out)
}

/// Eigenvalue (or group mean) with its gradient over the coefficients of `ρ`.
#[derive(Clone, Debug, Serialize)]
pub struct EigenGradient {
    pub value: f64,
    /// Sorted eigenvalue indices averaged into `value`.
    pub group: Range<usize>,
    pub gradient: Vec<f64>,
}

/// Hellmann–Feynman gradient `wᵀ(∂G/∂A_c)v` of eigenvalue `k`, with
/// `∂G/∂A_c` from central differences of the assembled matrix.
///
/// A degenerate `σ_k` is an error unless `group_mean` is set, in which case
/// the mean of its degenerate group is differentiated.
pub fn eigen_gradient(rho: &AngularField, eps: f64, k: usize, cfg: &SeriesConfig, group_mean: bool) -> Result<EigenGradient> {
    let dec = Decomposition::new(&cfg.matrix(rho, eps)?)?;
    if k >= dec.len() {
        return Err(Error::Sizing(format!("eigenvalue index {k} exceeds operator size {}", dec.len())));
    }
    let group = degenerate_group(&dec.values, k, GAP_TOL);
    if group.len() > 1 && !group_mean {
        let gap = group.clone().skip(1).map(|i| (dec.values[i] - dec.values[i - 1]).abs()).fold(f64::INFINITY, f64::min);
        return Err(Error::Degeneracy { index: k, gap });
    }
    group_gradient(rho, eps, cfg, &dec, group)
}

/// Gradient of the mean over a fixed index range of the sorted spectrum.
fn group_gradient(rho: &AngularField, eps: f64, cfg: &SeriesConfig, dec: &Decomposition, group: Range<usize>) -> Result<EigenGradient> {
    dec.check_real(group.end)?;
    let m = group.len() as f64;
    let value = dec.values[group.clone()].iter().sum::<f64>() / m;
    let v = dec.right.columns(group.start, group.len());
    let w = dec.left.columns(group.start, group.len());
    let h = MATRIX_FD_STEP;
    let gradient = (0..rho.coeffs().len())
        .into_par_iter()
        .map(|c| {
            let mut plus = rho.clone();
            plus.coeffs_mut()[c] += h;
            let mut minus = rho.clone();
            minus.coeffs_mut()[c] -= h;
            let dg = (cfg.matrix(&plus, eps)? - cfg.matrix(&minus, eps)?) / (2.0 * h);
            Ok((w.transpose() * dg * v).trace() / m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenGradient { value, group, gradient })
}

/// Mean of a fixed index range of the sorted spectrum.
pub fn group_objective(rho: &AngularField, eps: f64, group: Range<usize>, cfg: &SeriesConfig) -> Result<f64> {
    check_domain(rho, eps)?;
    let dec = Decomposition::new(&cfg.matrix(rho, eps)?)?;
    if group.end > dec.len() {
        return Err(Error::Sizing(format!("group {group:?} exceeds operator size {}", dec.len())));
    }
    dec.check_real(group.end)?;
    Ok(dec.values[group.clone()].iter().sum::<f64>() / group.len() as f64)
}

/// One optimizer attempt.
#[derive(Clone, Debug, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    /// Objective at the (trial) point.
    pub objective: f64,
    /// Norm of the volume-tangent gradient at the current point.
    pub gradient_norm: f64,
    pub volume: f64,
    pub step: f64,
    pub accepted: bool,
}

/// State of a volume-constrained ascent on one eigenvalue group.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeState {
    pub rho: AngularField,
    pub eps: f64,
    pub target: usize,
    /// Indices of the sorted spectrum whose mean is maximized.
    pub group: Range<usize>,
    /// Current step length.
    pub trust_radius: f64,
    pub objective: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub history: Vec<HistoryEntry>,
}

/// Ascent on the mean of the eigenvalue group that emanates from the
/// unperturbed eigenvalue of index `k`, at fixed `ε`.
///
/// Iterates `A ← Π_vol(A + η·g)` where `g` is the gradient projected onto the
/// tangent of the volume constraint and `Π_vol` restores the volume of the
/// unit ball. A trial that lowers the objective (or leaves the trusted
/// region) halves `η`; accepted steps let `η` grow back up to its initial
/// value. The optimized index set is fixed at the starting point.
pub fn optimize_sigma(initial: &AngularField, eps: f64, k: usize, steps: usize, step_size: f64, cfg: &SeriesConfig) -> Result<ShapeState> {
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::Domain(format!("step size {step_size} must be positive")));
    }
    let dim = initial.dim();
    let target_volume = unit_volume(dim);
    let mut rho = project_volume(initial, eps, target_volume)?;
    let dec = Decomposition::new(&cfg.matrix(&rho, eps)?)?;
    if k >= dec.len() {
        return Err(Error::Sizing(format!("eigenvalue index {k} exceeds operator size {}", dec.len())));
    }
    let group = unperturbed_group(dim, cfg.bandlimit, k);
    let mut grad = group_gradient(&rho, eps, cfg, &dec, group.clone())?;
    let mut tangent = tangent_gradient(&rho, eps, &grad.gradient)?;
    let mut state = ShapeState {
        eps,
        target: k,
        group: group.clone(),
        trust_radius: step_size,
        objective: grad.value,
        gradient_norm: norm(&tangent),
        converged: false,
        history: vec![HistoryEntry {
            iteration: 0,
            objective: grad.value,
            gradient_norm: norm(&tangent),
            volume: volume(&rho, eps)?,
            step: 0.0,
            accepted: true,
        }],
        rho: rho.clone(),
    };

    for iteration in 1..=steps {
        if state.gradient_norm < GRADIENT_TOL {
            state.converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let eta = state.trust_radius;
            let mut trial = rho.clone();
            for (c, g) in trial.coeffs_mut().iter_mut().zip(&tangent) {
                *c += eta * g;
            }
            let outcome = project_volume(&trial, eps, target_volume)
                .and_then(|t| group_objective(&t, eps, group.clone(), cfg).map(|obj| (t, obj)));
            match outcome {
                Ok((t, obj)) if obj >= state.objective => {
                    state.history.push(HistoryEntry {
                        iteration,
                        objective: obj,
                        gradient_norm: state.gradient_norm,
                        volume: volume(&t, eps)?,
                        step: eta,
                        accepted: true,
                    });
                    rho = t;
                    accepted = true;
                    break;
                }
                Ok((t, obj)) => {
                    state.history.push(HistoryEntry {
                        iteration,
                        objective: obj,
                        gradient_norm: state.gradient_norm,
                        volume: volume(&t, eps)?,
                        step: eta,
                        accepted: false,
                    });
                }
                Err(Error::DegenerateDomain { .. } | Error::SpectralValidity { .. }) => {
                    state.history.push(HistoryEntry {
                        iteration,
                        objective: f64::NAN,
                        gradient_norm: state.gradient_norm,
                        volume: f64::NAN,
                        step: eta,
                        accepted: false,
                    });
                }
                Err(e) => return Err(e),
            }
            state.trust_radius *= 0.5;
        }
        if !accepted {
            break;
        }
        state.trust_radius = (2.0 * state.trust_radius).min(step_size);
        let dec = Decomposition::new(&cfg.matrix(&rho, eps)?)?;
        grad = group_gradient(&rho, eps, cfg, &dec, group.clone())?;
        tangent = tangent_gradient(&rho, eps, &grad.gradient)?;
        state.objective = grad.value;
        state.gradient_norm = norm(&tangent);
        state.rho = rho.clone();
    }
    if state.gradient_norm < GRADIENT_TOL {
        state.converged = true;
    }
    Ok(state)
}

/// Indices of the sorted unperturbed spectrum sharing the eigenvalue of
/// index `k`. A generic `ρ` splits these at first order in `ε`.
pub fn unperturbed_group(dim: Dimension, bandlimit: usize, k: usize) -> Range<usize> {
    let mut degrees: Vec<f64> = (0..dim.coeff_len(bandlimit)).map(|i| dim.degree(i) as f64).collect();
    degrees.sort_by(f64::total_cmp);
    degenerate_group(&degrees, k, 0.5)
}

/// Removes the component along the volume gradient.
fn tangent_gradient(rho: &AngularField, eps: f64, g: &[f64]) -> Result<Vec<f64>> {
    let n = volume_gradient(rho, eps)?;
    let nn: f64 = n.iter().map(|x| x * x).sum();
    if nn == 0.0 {
        return Ok(g.to_vec());
    }
    let t = g.iter().zip(&n).map(|(a, b)| a * b).sum::<f64>() / nn;
    Ok(g.iter().zip(&n).map(|(a, b)| a - t * b).collect())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
