//! Terms of the interior expansion `u = Σ εⁿ uₙ` and their growth rate.

use steklov::expansion::{empirical_ratio, extension_series};
use steklov::harmonics::AngularField;

fn main() -> steklov::Result<()> {
    let rho = AngularField::circle_modes(&[(2, 1.0)]);
    let xi = AngularField::circle_modes(&[(1, 1.0)]);
    for scale in [1.0, 0.5] {
        let s = extension_series(&rho.scaled(scale), &xi, 8, None, None)?;
        println!("rho scaled by {scale}:");
        for (n, norm) in s.norms.iter().enumerate() {
            println!("  n={n} |u_n| = {norm:.4e}");
        }
        println!(
            "  growth rate {:.4}, recursion residual {:.1e}, trace error {:.1e}",
            empirical_ratio(&s.norms)?,
            s.recursion_residual()?,
            s.trace_error()
        );
    }
    Ok(())
}
