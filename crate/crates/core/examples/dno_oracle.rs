//! Truncated DNO series against the fixed-ε direct solve.

use steklov::cli::relative_error;
use steklov::dno::{dno_apply, dno_direct, dno_series_matrices, DirectOptions, SeriesOptions};
use steklov::harmonics::Dimension;
use steklov::shape::{random_perturbation, RANDOM_HOLDER_ORDER};

fn main() -> steklov::Result<()> {
    let k = 10;
    let rho = random_perturbation(Dimension::Circle, 3, 42, RANDOM_HOLDER_ORDER, 1.0)?;
    let xi = random_perturbation(Dimension::Circle, k, 7, RANDOM_HOLDER_ORDER, 1.0)?;
    let series = dno_series_matrices(&rho, k, 4, SeriesOptions::default())?;
    let direct = DirectOptions { output_bandlimit: Some(k), ..Default::default() };
    for eps in [0.01, 0.02, 0.04, 0.08] {
        let exact = dno_direct(&rho, eps, &xi, 1e-14, direct)?;
        let errs: Vec<String> = (1..=4)
            .map(|n| Ok(format!("N={n}: {:.2e}", relative_error(&dno_apply(&series.truncated(n), eps, &xi)?, &exact))))
            .collect::<steklov::Result<_>>()?;
        println!("eps {eps}: {}", errs.join("  "));
    }
    Ok(())
}
