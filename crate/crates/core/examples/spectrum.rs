//! Steklov spectra of a perturbed disk and ball.

use steklov::dno::{dno_series_matrices, SeriesOptions};
use steklov::eigen::steklov_spectrum;
use steklov::harmonics::AngularField;

fn main() -> steklov::Result<()> {
    let disk = AngularField::circle_modes(&[(3, 1.0)]);
    let s = dno_series_matrices(&disk, 12, 6, SeriesOptions::default())?;
    for eps in [0.0, 0.05, 0.1] {
        let sp = steklov_spectrum(&s, eps, 9)?;
        println!("disk + eps cos 3θ, eps {eps}: {:.6?}", sp.values);
    }
    let ball = AngularField::sphere_modes(&[(2, 0, 1.0)])?;
    let s = dno_series_matrices(&ball, 5, 4, SeriesOptions::default())?;
    let sp = steklov_spectrum(&s, 0.05, 9)?;
    println!("ball + 0.05 Y20: {:.6?}", sp.values);
    Ok(())
}
