//! Domain perturbations `Ω_ε = {r < 1 + ερ(θ̂)}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harmonics::{holder_norm, AngularField, Dimension};

/// Hölder order used to normalize random perturbations.
pub const RANDOM_HOLDER_ORDER: u32 = 4;

/// Seeded random perturbation of the given bandlimit with
/// `|ρ|_{C^order} = target`.
///
/// Coefficients are uniform on `[-1, 1]` and damped by `(1 + d²)^{-2}` in
/// the degree `d`, the constant mode sharing the weight of degree 1, then
/// the field is rescaled to the requested Hölder norm.
pub fn random_perturbation(dim: Dimension, bandlimit: usize, seed: u64, order: u32, target: f64) -> Result<AngularField> {
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::Domain(format!("Hölder target {target} must be finite and nonnegative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = AngularField::zeros(dim, bandlimit);
    for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
        let d = dim.degree(i).max(1) as f64;
        *c = rng.random_range(-1.0..=1.0) * (1.0 + d * d).powi(-2);
    }
    let h = holder_norm(&f, order)?;
    if h == 0.0 {
        return Ok(f);
    }
    Ok(f.scaled(target / h))
}

/// Smallest value of `1 + ερ` on an 8x oversampled grid.
pub fn min_radius(rho: &AngularField, eps: f64) -> Result<f64> {
    let grid = crate::harmonics::AngularGrid::new(rho.dim(), 8 * rho.bandlimit().max(1));
    let samples = grid.synthesize(&rho.resized(grid.bandlimit()))?;
    Ok(samples.iter().fold(f64::INFINITY, |m, v| m.min(1.0 + eps * v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_perturbation_is_seeded_and_normalized() {
        for dim in [Dimension::Circle, Dimension::Sphere] {
            let a = random_perturbation(dim, 3, 7, 4, 1.0).unwrap();
            let b = random_perturbation(dim, 3, 7, 4, 1.0).unwrap();
            let c = random_perturbation(dim, 3, 8, 4, 1.0).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
            assert!((holder_norm(&a, 4).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn min_radius_of_cosine() {
        let rho = AngularField::circle_modes(&[(1, 1.0)]);
        assert!((min_radius(&rho, 0.25).unwrap() - 0.75).abs() < 1e-12);
    }
}
