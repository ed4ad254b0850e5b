//! The summed series, mapped back to the perturbed domain, is harmonic.

use steklov::expansion::{evaluate_extension, extension_series};
use steklov::harmonics::AngularField;

/// Cartesian Laplacian of `v` by fourth-order central differences.
fn fd_laplacian(v: &dyn Fn([f64; 3]) -> f64, x: [f64; 3], dims: usize, h: f64) -> f64 {
    let mut total = 0.0;
    for a in 0..dims {
        let shifted = |s: f64| {
            let mut y = x;
            y[a] += s;
            v(y)
        };
        total += (-shifted(2.0 * h) + 16.0 * shifted(h) - 30.0 * v(x) + 16.0 * shifted(-h) - shifted(-2.0 * h))
            / (12.0 * h * h);
    }
    total
}

fn check(rho: AngularField, xi: AngularField, dims: usize) {
    let eps = 0.05;
    let series = extension_series(&rho, &xi, 6, None, None).unwrap();
    let u = evaluate_extension(&series, eps);
    let v = |x: [f64; 3]| {
        let big_r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let (theta, phi) = if dims == 2 {
            (x[1].atan2(x[0]), 0.0)
        } else {
            ((x[2] / big_r).acos(), x[1].atan2(x[0]))
        };
        let a = 1.0 + eps * rho.evaluate(theta, phi);
        u.evaluate(big_r / a, theta, phi)
    };
    let points = [[0.3, 0.2, 0.4], [-0.5, 0.1, -0.2], [0.1, -0.6, 0.3], [0.45, 0.45, -0.1]];
    for p in points {
        let mut p = p;
        if dims == 2 {
            p[2] = 0.0;
        }
        let lap = fd_laplacian(&v, p, dims, 1e-3);
        assert!(lap.abs() < 1e-5, "Δv = {lap:e} at {p:?}");
    }
}

#[test]
fn disk_series_is_harmonic_in_perturbed_domain() {
    check(
        AngularField::circle_modes(&[(2, 1.0), (-1, 0.5), (3, 0.25)]),
        AngularField::circle_modes(&[(1, 1.0), (-2, 0.3)]),
        2,
    );
}

#[test]
fn ball_series_is_harmonic_in_perturbed_domain() {
    check(
        AngularField::sphere_modes(&[(2, 0, 0.8), (1, 1, 0.4), (2, -2, 0.5)]).unwrap(),
        AngularField::sphere_modes(&[(1, 0, 1.0), (2, 1, 0.5)]).unwrap(),
        3,
    );
}
