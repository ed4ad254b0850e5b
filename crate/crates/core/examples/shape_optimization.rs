//! Volume-constrained ascent on the first nonzero eigenvalue pair of a disk.

use steklov::harmonics::Dimension;
use steklov::sensitivity::{optimize_sigma, SeriesConfig};
use steklov::shape::{random_perturbation, RANDOM_HOLDER_ORDER};

fn main() -> steklov::Result<()> {
    let cfg = SeriesConfig::new(8, 4);
    let rho = random_perturbation(Dimension::Circle, 3, 3, RANDOM_HOLDER_ORDER, 0.2)?;
    let state = optimize_sigma(&rho, 0.05, 1, 20, 1.0, &cfg)?;
    for h in state.history.iter().filter(|h| h.accepted) {
        println!(
            "iteration {:2}: mean of σ{}..σ{} = {:.10}, |tangent gradient| {:.2e}, area {:.12}",
            h.iteration,
            state.group.start,
            state.group.end - 1,
            h.objective,
            h.gradient_norm,
            h.volume
        );
    }
    println!("converged: {}", state.converged);
    Ok(())
}
