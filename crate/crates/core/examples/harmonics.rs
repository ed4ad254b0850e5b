//! Angular fields: transforms, dealiased products, rotations, Hölder norms.

use steklov::harmonics::{holder_norm, multiply, AngularField, AngularGrid, Dimension};

fn main() -> steklov::Result<()> {
    // cos θ · cos 2θ = (cos θ + cos 3θ) / 2.
    let a = AngularField::circle_modes(&[(1, 1.0)]);
    let b = AngularField::circle_modes(&[(2, 1.0)]);
    let ab = multiply(&a, &b)?;
    let expected = AngularField::circle_modes(&[(1, 0.5), (3, 0.5)]);
    println!("circle product error {:.1e}", ab.max_abs_diff(&expected));

    // Round trip through the Gauss–Legendre × uniform sphere grid.
    let f = AngularField::sphere_modes(&[(2, 1, 0.7), (3, -2, 0.4), (0, 0, 1.0)])?;
    let grid = AngularGrid::new(Dimension::Sphere, f.bandlimit());
    let back = grid.analyze(&grid.synthesize(&f)?, f.bandlimit())?;
    println!("sphere round trip error {:.1e} on {} nodes", back.max_abs_diff(&f), grid.len());

    // Rotation about the polar axis shifts φ.
    let r = f.rotated(0.3);
    println!("rotated value {:.6} = {:.6}", r.evaluate(1.0, 0.5), f.evaluate(1.0, 0.8));

    println!("|f|_C4 = {:.4}, H^2 norm {:.4}", holder_norm(&f, 4)?, f.sobolev_norm(2));
    Ok(())
}
