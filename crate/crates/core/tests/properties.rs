//! Invariants checked on random inputs.

use proptest::prelude::*;
use steklov::ballfield::{apply_laplacian, poisson_solve, trace, BallField, RadialGrid, RadialOperatorCache};
use steklov::dno::{dno_series_matrices, SeriesOptions};
use steklov::eigen::steklov_spectrum;
use steklov::harmonics::{multiply, AngularField, AngularGrid, Dimension};
use steklov::sensitivity::{project_volume, unit_volume, volume};

fn dims() -> impl Strategy<Value = Dimension> {
    prop_oneof![Just(Dimension::Circle), Just(Dimension::Sphere)]
}

/// Random field of the given dimension with bandlimit in `1..=max_bl`.
fn field(dim: Dimension, max_bl: usize, amp: f64) -> impl Strategy<Value = AngularField> {
    (1..=max_bl).prop_flat_map(move |bl| {
        prop::collection::vec(-amp..amp, dim.coeff_len(bl))
            .prop_map(move |c| AngularField::from_coeffs(dim, bl, c).unwrap())
    })
}

fn any_field(max_bl: usize, amp: f64) -> impl Strategy<Value = AngularField> {
    dims().prop_flat_map(move |d| field(d, max_bl, amp))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesis_round_trip(f in any_field(8, 1.0)) {
        let g = AngularGrid::new(f.dim(), f.bandlimit());
        let back = g.analyze(&g.synthesize(&f).unwrap(), f.bandlimit()).unwrap();
        prop_assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn parseval(f in any_field(8, 1.0)) {
        let g = AngularGrid::new(f.dim(), f.bandlimit());
        let s = g.synthesize(&f).unwrap();
        let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
        let energy: f64 = f.orthonormal_coeffs().iter().map(|c| c * c).sum();
        prop_assert!((g.integrate(&sq) - energy).abs() < 1e-11 * energy.max(1.0));
    }

    #[test]
    fn products_commute_and_match_pointwise(
        (f, g) in dims().prop_flat_map(|d| (field(d, 5, 1.0), field(d, 5, 1.0))),
        theta in 0.1f64..3.0,
        phi in 0.0f64..6.2,
    ) {
        let fg = multiply(&f, &g).unwrap();
        prop_assert!(fg.max_abs_diff(&multiply(&g, &f).unwrap()) < 1e-13);
        let expected = f.evaluate(theta, phi) * g.evaluate(theta, phi);
        prop_assert!((fg.evaluate(theta, phi) - expected).abs() < 1e-11);
    }

    #[test]
    fn rotation_shifts_the_azimuth(f in any_field(6, 1.0), alpha in -3.0f64..3.0, theta in 0.1f64..3.0, phi in 0.0f64..6.2) {
        let r = f.rotated(alpha);
        let (rt, rp, st, sp) = match f.dim() {
            Dimension::Circle => (theta, 0.0, theta + alpha, 0.0),
            Dimension::Sphere => (theta, phi, theta, phi + alpha),
        };
        prop_assert!((r.evaluate(rt, rp) - f.evaluate(st, sp)).abs() < 1e-12);
    }

    #[test]
    fn surface_laplacian_is_diagonal(f in any_field(6, 1.0)) {
        let lap = f.surface_laplacian();
        for (i, (a, b)) in lap.coeffs().iter().zip(f.coeffs()).enumerate() {
            let lambda = f.dim().laplace_eigenvalue(f.dim().degree(i));
            prop_assert!((a + lambda * b).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn poisson_solve_is_linear(
        (xi1, xi2) in dims().prop_flat_map(|d| (field(d, 4, 1.0), field(d, 4, 1.0))),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let dim = xi1.dim();
        let bl = 4;
        let grid = RadialGrid::new(20).unwrap();
        let cache = RadialOperatorCache::new(dim, bl, grid.clone()).unwrap();
        let f1 = BallField::from_fn(dim, bl, grid.clone(), |r, t, p| r * r * (t + p).cos()).unwrap();
        let f2 = BallField::from_fn(dim, bl, grid.clone(), |r, t, _| r.powi(3) * (2.0 * t).sin()).unwrap();
        let u1 = poisson_solve(&cache, &f1, &xi1).unwrap();
        let u2 = poisson_solve(&cache, &f2, &xi2).unwrap();
        let f = f1.add_scaled(a - 1.0, &f1).add_scaled(b, &f2);
        let xi = xi1.scaled(a).add_scaled(b, &xi2);
        let u = poisson_solve(&cache, &f, &xi).unwrap();
        let combo = u1.add_scaled(a - 1.0, &u1).add_scaled(b, &u2);
        let diff = u.values() - combo.values();
        prop_assert!(diff.amax() < 1e-10);
        // The solution reproduces its data.
        prop_assert!(trace(&u).max_abs_diff(&xi.resized(bl)) < 1e-12);
        let lap = apply_laplacian(&u);
        let interior = lap.values().rows(1, grid.len() - 2).into_owned() - f.values().rows(1, grid.len() - 2);
        prop_assert!(interior.amax() < 1e-7);
    }

    #[test]
    fn volume_projection_is_exact(rho in any_field(4, 0.5), eps in 0.01f64..0.3) {
        let p = project_volume(&rho, eps, unit_volume(rho.dim())).unwrap();
        prop_assert!((volume(&p, eps).unwrap() - unit_volume(rho.dim())).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn constants_are_in_the_kernel(rho in any_field(3, 0.5)) {
        let s = dno_series_matrices(&rho, 4, 4, SeriesOptions::default()).unwrap();
        for g in &s.g {
            prop_assert!(g.column(0).amax() < 1e-10);
        }
    }

    #[test]
    fn terms_are_homogeneous_in_rho(rho in field(Dimension::Circle, 3, 0.5), t in 0.3f64..2.0) {
        let s = dno_series_matrices(&rho, 6, 4, SeriesOptions::default()).unwrap();
        let st = dno_series_matrices(&rho.scaled(t), 6, 4, SeriesOptions::default()).unwrap();
        for n in 0..=4 {
            let diff = (&st.g[n] - &s.g[n] * t.powi(n as i32)).amax();
            prop_assert!(diff < 1e-9 * s.g[n].amax().max(1.0), "n={} diff={:e}", n, diff);
        }
    }

    #[test]
    fn spectra_are_rotation_invariant(rho in any_field(2, 0.5), alpha in -3.0f64..3.0) {
        let bl = if rho.dim() == Dimension::Circle { 8 } else { 4 };
        let a = dno_series_matrices(&rho, bl, 4, SeriesOptions::default()).unwrap();
        let b = dno_series_matrices(&rho.rotated(alpha), bl, 4, SeriesOptions::default()).unwrap();
        // Modes near the truncation edge are not resolved.
        let n = a.size() / 2;
        let sa = steklov_spectrum(&a, 0.05, n).unwrap();
        let sb = steklov_spectrum(&b, 0.05, n).unwrap();
        for (x, y) in sa.values.iter().zip(&sb.values) {
            prop_assert!((x - y).abs() < 1e-9, "{} {}", x, y);
        }
        prop_assert!(sa.values[0].abs() < 1e-9);
        prop_assert!(sa.values.iter().all(|v| *v >= -1e-8));
    }
}
