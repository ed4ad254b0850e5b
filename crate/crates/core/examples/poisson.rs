//! Mode-wise spectral Poisson solve on the disk and ball.

use steklov::ballfield::{apply_laplacian, normal_trace, poisson_solve, trace, BallField, RadialGrid, RadialOperatorCache};
use steklov::harmonics::{AngularField, Dimension};

fn main() -> steklov::Result<()> {
    let grid = RadialGrid::new(24)?;
    for dim in [Dimension::Circle, Dimension::Sphere] {
        let bl = 4;
        let cache = RadialOperatorCache::new(dim, bl, grid.clone())?;
        // Manufactured solution w = r³ cos θ + r² sin 2θ cos φ.
        let exact = BallField::from_fn(dim, bl, grid.clone(), |r, t, p| r.powi(3) * t.cos() + r * r * (2.0 * t).sin() * p.cos())?;
        let f = apply_laplacian(&exact);
        let w = poisson_solve(&cache, &f, &trace(&exact))?;
        let err = (w.values() - exact.values()).amax();
        println!("{dim:?}: solution error {err:.1e}, normal trace |∂_r w| {:.4}", normal_trace(&w).sobolev_norm(0));
    }
    let xi = AngularField::circle_modes(&[(3, 1.0)]);
    let cache = RadialOperatorCache::new(Dimension::Circle, 3, grid.clone())?;
    let u = poisson_solve(&cache, &BallField::zeros(Dimension::Circle, 3, grid), &xi)?;
    println!("harmonic extension of cos 3θ has ∂_r u = {:.12} cos 3θ", normal_trace(&u).coeffs()[5]);
    Ok(())
}
