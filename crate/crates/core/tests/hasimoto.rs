use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use vmkdv::diffpoly::{GridFunction, SpectralGrid};
use vmkdv::hasimoto::*;
use vmkdv::rng::{eval_fourier, fourier_coefficients, seeded};
use vmkdv::Error;

fn grid(n: usize) -> SpectralGrid {
    SpectralGrid::new(n, 2.0 * PI).unwrap()
}

fn frenet(g: &SpectralGrid, f: impl Fn(usize, f64) -> f64, dims: usize) -> FrenetCurvatures {
    FrenetCurvatures(GridFunction::from_fn(g.clone(), dims, f))
}

/// Smooth random Frenet data with `ū⁽¹⁾` bounded away from zero.
fn random_frenet(n: usize, seed: u64) -> FrenetCurvatures {
    let mut rng = seeded(seed);
    let coeffs: Vec<_> = (0..n - 1)
        .map(|_| fourier_coefficients(&mut rng, &[1, 2, 3], 0.15))
        .collect();
    let offsets = [1.0, 0.4, 0.3, 0.25, 0.2];
    frenet(&grid(256), |c, x| offsets[c] + eval_fourier(&coeffs[c], x), n - 1)
}

#[test]
fn constant_curvature_and_torsion_give_helix_data() {
    let (kappa, tau) = (1.3, 2.5);
    let g = grid(128);
    let f = frenet(&g, |c, _| if c == 0 { kappa } else { tau }, 2);
    let (u, theta) = natural_from_frenet(&f, None).unwrap();
    let mut err = 0.0_f64;
    for (m, x) in g.xs().into_iter().enumerate() {
        err = err
            .max((u.0.component(0)[m] - kappa * (tau * x).cos()).abs())
            .max((u.0.component(1)[m] - kappa * (tau * x).sin()).abs())
            .max((theta.get(2, 3)[m] - tau * x).abs());
    }
    assert!(err < 1e-8, "{err}");
    assert!(gauge_residual(&f, &u, &theta).unwrap() < 1e-8);
}

#[test]
fn vanishing_higher_curvatures_leave_angles_at_zero() {
    for n in 3..7 {
        let g = grid(64);
        let f = frenet(&g, |c, x| if c == 0 { 1.0 + 0.3 * x.sin() } else { 0.0 }, n - 1);
        let (u, theta) = natural_from_frenet(&f, None).unwrap();
        assert!(theta.as_grid_function().sup_norm() == 0.0);
        assert_eq!(u.0.component(0), f.0.component(0));
        for c in 1..n - 1 {
            assert!(u.0.component(c).iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn zero_curvatures_have_zero_residual() {
    let g = grid(32);
    let zero = NaturalCurvatures(GridFunction::zeros(g.clone(), 3));
    let fz = FrenetCurvatures(GridFunction::zeros(g.clone(), 3));
    assert_eq!(gauge_residual(&fz, &zero, &AngleField::zeros(4, g)).unwrap(), 0.0);
}

#[test]
fn constant_n4_data_satisfies_gauge() {
    let g = grid(256);
    let vals = [1.0, 0.3, 0.2];
    let f = frenet(&g, |c, _| vals[c], 3);
    let (u, theta) = natural_from_frenet(&f, None).unwrap();
    let res = gauge_residual(&f, &u, &theta).unwrap();
    assert!(res < 1e-6, "{res}");
}

#[test]
fn random_frenet_data_satisfies_gauge() {
    for n in [4, 5] {
        for seed in 0..3 {
            let f = random_frenet(n, seed);
            let (u, theta) = natural_from_frenet(&f, None).unwrap();
            let res = gauge_residual(&f, &u, &theta).unwrap();
            assert!(res < 1e-6, "n={n} seed={seed}: {res}");
            assert!(theta.integration_error < 1e-6, "{}", theta.integration_error);
            // the Euler transformation preserves the norm
            let norm = u.0.pointwise_norm();
            for (a, b) in norm.iter().zip(f.0.component(0)) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn nonzero_initial_angles_are_a_constant_gauge() {
    let f = random_frenet(4, 9);
    let init = [0.2, -0.1, 0.3];
    let (u, theta) = natural_from_frenet(&f, Some(&init)).unwrap();
    assert_eq!(theta.at(0), init.to_vec());
    assert!(gauge_residual(&f, &u, &theta).unwrap() < 1e-6);
}

#[test]
fn chain_quantities_follow_the_recursion() {
    let n = 5;
    let f = random_frenet(n, 4);
    let (_, theta) = natural_from_frenet(&f, None).unwrap();
    let chain = chain_quantities(&f, &theta);
    assert!(chain.a[0].iter().all(|v| *v == 0.0));
    assert_eq!(chain.a[n - 2], f.0.component(n - 2).to_vec());
    let dx = theta.grid().dx();
    for i in 2..n {
        let d = fd_derivative(theta.get(i, i + 1), dx);
        for m in 0..d.len() {
            let prev = if i >= 3 { theta.get(i - 1, i + 1)[m].sin() * chain.a[i - 2][m] } else { 0.0 };
            assert!((chain.a[i - 1][m] - d[m] - prev).abs() < 1e-6);
        }
    }
}

#[test]
fn n3_rotation_is_the_classical_frame_change() {
    let th = 0.7;
    let r = rotation_matrix(3, &[th]);
    let (c, s) = (th.cos(), th.sin());
    let expect = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c]);
    assert!((r - expect).amax() < 1e-15);
    assert_eq!(rotation_matrix(5, &[0.0; 6]), DMatrix::identity(5, 5));
}

fn angle_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.4..1.4_f64, (n - 1) * (n - 2) / 2)
}

proptest! {
    #[test]
    fn rotations_are_orthogonal(th in angle_vec(6)) {
        let r = rotation_matrix(6, &th);
        let id = DMatrix::<f64>::identity(6, 6);
        prop_assert!((r.transpose() * &r - &id).amax() < 1e-10);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-10);
        prop_assert_eq!(r[(0, 0)], 1.0);
    }

    #[test]
    fn first_row_of_t_is_the_euler_row(th in angle_vec(5), u1 in 0.1..3.0_f64) {
        let n = 5;
        let g = grid(16);
        let comps = th.iter().map(|t| vec![*t; 16]).collect();
        let field = AngleField::new(n, GridFunction::new(g.clone(), comps).unwrap()).unwrap();
        let f = frenet(&g, |c, _| if c == 0 { u1 } else { 0.0 }, n - 1);
        // the Euler transformation is evaluated inside the integrator; with
        // zero higher curvatures the angles stay at their initial values
        let (u, _) = natural_from_frenet(&f, Some(&th)).unwrap();
        let t = rotation_field(&field).t(0);
        for k in 0..n - 1 {
            prop_assert!((u.0.component(k)[0] - u1 * t[(0, k)]).abs() < 1e-12);
        }
    }

    #[test]
    fn t_factors_through_b_matrices(th in angle_vec(5)) {
        let n = 5;
        let g = grid(16);
        let comps = th.iter().map(|t| vec![*t; 16]).collect();
        let field = AngleField::new(n, GridFunction::new(g, comps).unwrap()).unwrap();
        let rot = rotation_field(&field);
        let mut t = DMatrix::<f64>::identity(n - 1, n - 1);
        for i in (3..=n).rev() {
            t *= rot.b(i, 0);
        }
        prop_assert!((t - rot.t(0)).amax() < 1e-14);
        for i in 3..=n {
            let b = rot.b(i, 0);
            prop_assert!((b[(0, i - 2)] - field.get(2, i)[0].sin()).abs() < 1e-14);
            for j in i - 1..n - 1 {
                prop_assert_eq!(b[(j, j)], 1.0);
            }
        }
    }
}

#[test]
fn orthogonality_along_a_solution() {
    let f = random_frenet(5, 2);
    let (_, theta) = natural_from_frenet(&f, None).unwrap();
    assert!(rotation_field(&theta).orthogonality_defect() < 1e-10);
}

#[test]
fn helix_data_recovers_curvature_and_torsion() {
    let c = 3.0;
    let g = grid(128);
    let u = NaturalCurvatures(GridFunction::from_fn(g, 2, |k, x| {
        if k == 0 {
            (c * x).cos()
        } else {
            (c * x).sin()
        }
    }));
    let (theta, f) = angles_from_natural(&u).unwrap();
    assert!(f.0.component(0).iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(f.0.component(1).iter().all(|v| (v - c).abs() < 1e-10));
    assert!(gauge_residual(&f, &u, &theta).unwrap() < 1e-8);
}

#[test]
fn straight_natural_data_has_zero_angles() {
    let u = NaturalCurvatures(GridFunction::from_fn(grid(32), 3, |k, _| if k == 0 { 2.0 } else { 0.0 }));
    let (theta, f) = angles_from_natural(&u).unwrap();
    assert_eq!(theta.as_grid_function().sup_norm(), 0.0);
    assert!(f.0.component(0).iter().all(|v| *v == 2.0));
    assert_eq!(f.0.component(1).iter().chain(f.0.component(2)).fold(0.0_f64, |m, v| m.max(v.abs())), 0.0);
}

fn winding_natural(n: usize) -> NaturalCurvatures {
    let g = grid(256);
    NaturalCurvatures(GridFunction::from_fn(g, n - 1, |k, x| {
        let r = 1.0 + 0.06 * x.sin();
        let phase = x + 0.09 * x.sin();
        match k {
            0 => r * phase.cos(),
            1 => r * phase.sin(),
            2 => 0.8 + 0.03 * (2.0 * x).cos(),
            _ => 0.4 + 0.015 * (3.0 * x).sin(),
        }
    }))
}

#[test]
fn round_trip_natural_frenet_natural() {
    for n in [3, 4, 5] {
        let u = winding_natural(n);
        let (theta, f) = angles_from_natural(&u).unwrap();
        let inverse_res = gauge_residual(&f, &u, &theta).unwrap();
        assert!(inverse_res < 1e-6, "n={n}: {inverse_res}");
        let (back, theta2) = natural_from_frenet(&f, Some(&theta.at(0))).unwrap();
        let err = back.0.max_abs_diff(&u.0);
        assert!(err < 1e-6, "n={n}: {err}");
        assert!(theta2.as_grid_function().max_abs_diff(theta.as_grid_function()) < 1e-6);
    }
}

#[test]
fn hasimoto_n3_formula() {
    let g = grid(64);
    let ones = frenet(&g, |c, _| if c == 0 { 1.0 } else { 0.0 }, 2);
    assert!(hasimoto_n3(&ones).unwrap().iter().all(|z| (z.re - 1.0).abs() < 1e-15 && z.im.abs() < 1e-15));

    let c = 2.0;
    let helix = frenet(&g, |k, _| if k == 0 { 1.0 } else { c }, 2);
    let phi = hasimoto_n3(&helix).unwrap();
    for (z, x) in phi.iter().zip(g.xs()) {
        assert!((z.re - (c * x).cos()).abs() < 1e-12 && (z.im - (c * x).sin()).abs() < 1e-12);
    }

    let f = random_frenet(3, 11);
    let phi = hasimoto_n3(&f).unwrap();
    let (u, _) = natural_from_frenet(&f, None).unwrap();
    for (m, z) in phi.iter().enumerate() {
        assert!((z.re - u.0.component(0)[m]).abs() < 1e-8);
        assert!((z.im - u.0.component(1)[m]).abs() < 1e-8);
    }
}

#[test]
fn domain_errors() {
    let g = grid(32);
    let bad = frenet(&g, |c, x| if c == 0 { x.sin() } else { 0.1 }, 2);
    assert!(matches!(natural_from_frenet(&bad, None), Err(Error::PositivityLoss { .. })));

    // θ₂₄ starting at π/2 puts the chart on its boundary
    let f = frenet(&g, |c, _| [1.0, 0.3, 0.2][c], 3);
    let init = [0.0, PI / 2.0, 0.0];
    assert!(matches!(
        natural_from_frenet(&f, Some(&init)),
        Err(Error::GimbalLock { i: 2, j: 4, .. })
    ));

    let zero = NaturalCurvatures(GridFunction::zeros(g, 2));
    assert!(matches!(angles_from_natural(&zero), Err(Error::PositivityLoss { .. })));
}

#[test]
fn report_counts_constraints() {
    let f = random_frenet(5, 1);
    let (u, theta) = natural_from_frenet(&f, None).unwrap();
    let rep = gauge_report(&f, &u, &theta).unwrap();
    assert_eq!(rep.constraints, 3);
    assert!(rep.gauge_residual < 1e-6);
}
