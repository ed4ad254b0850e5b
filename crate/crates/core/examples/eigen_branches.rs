//! Eigenvalue branches over ε, their polynomial fits, and the degenerate
//! perturbation coefficients they should match.

use steklov::dno::{dno_series_matrices, SeriesOptions};
use steklov::eigen::{analyticity_check, eigen_curve, perturbation_coeffs};
use steklov::harmonics::AngularField;

fn main() -> steklov::Result<()> {
    let rho = AngularField::circle_modes(&[(2, 1.0)]);
    let s = dno_series_matrices(&rho, 16, 8, SeriesOptions::default())?;
    let grid: Vec<f64> = (0..21).map(|i| 0.005 * i as f64).collect();
    for c in eigen_curve(&s, &grid, 5)? {
        let r = analyticity_check(&c)?;
        println!(
            "branch {}: σ ≈ {:.6} + {:.6} ε + {:.6} ε², fit residual {:.1e}, radius {:.3}",
            c.branch, c.coeffs[0], c.coeffs[1], c.coeffs[2], r.residual, r.radius
        );
    }
    for l in [1.0, 2.0] {
        for b in perturbation_coeffs(&s, l)? {
            println!("lambda0 {l}: ({:.6}, {:.6}, {:.6})", b.sigma0, b.sigma1, b.sigma2);
        }
    }
    Ok(())
}
