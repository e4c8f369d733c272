use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use vmkdv::curveflow::*;
use vmkdv::diffpoly::{GridFunction, SpectralGrid};
use vmkdv::hasimoto::{angles_from_natural, fd_derivative, NaturalCurvatures};
use vmkdv::Error;

fn grid(n: usize) -> SpectralGrid {
    SpectralGrid::new(n, 2.0 * PI).unwrap()
}

fn sample_u(n: usize) -> GridFunction {
    GridFunction::from_fn(grid(n), 2, |c, x| {
        if c == 0 {
            0.8 * x.cos() + 0.3 * (2.0 * x).sin()
        } else {
            0.6 * x.sin() - 0.2 * (3.0 * x).cos()
        }
    })
}

fn quiet(save_every: usize) -> EvolveOptions {
    EvolveOptions {
        save_every,
        ..Default::default()
    }
}

#[test]
fn zero_data_stays_zero() {
    let u0 = GridFunction::zeros(grid(64), 3);
    let traj = evolve_vmkdv(&u0, 0.2, 0.01, 0.0).unwrap();
    assert_eq!(traj.len(), 21);
    assert!(traj.snapshots.iter().all(|s| s.sup_norm() == 0.0));
    assert!(conserved_report(&traj).iter().all(|r| r.norm == 0.0 && r.energy == 0.0));
}

#[test]
fn scalar_profile_conserves_norm() {
    // a localized bump, periodized; the scalar case is the mKdV equation
    let u0 = GridFunction::from_fn(grid(256), 1, |_, x| 1.2 / (2.0 * (x - PI)).cosh());
    let traj = evolve_vmkdv_with(&u0, 1.0, 1e-3, 0.0, &quiet(100)).unwrap();
    assert!(max_norm_drift(&traj) < 1e-8, "{}", max_norm_drift(&traj));
    // the profile has actually moved
    assert!(traj.last().max_abs_diff(&u0) > 0.1);
}

#[test]
fn vector_flow_conserves_norm_and_energy() {
    let traj = evolve_vmkdv_with(&sample_u(256), 1.0, 1e-3, 0.0, &quiet(50)).unwrap();
    let rep = conserved_report(&traj);
    let last = rep.last().unwrap();
    assert!(last.norm_drift < 1e-8 && last.energy_drift < 1e-8, "{last:?}");
    assert!(traj.diagnostics.iter().all(|d| d.metric_defect < 1e-10));
}

#[test]
fn solver_is_fourth_order_in_time() {
    let u0 = sample_u(128);
    let run = |dt: f64| evolve_vmkdv_with(&u0, 0.5, dt, 0.0, &quiet(usize::MAX)).unwrap().last().clone();
    let reference = run(0.5 / 6400.0);
    let e1 = run(0.5 / 400.0).max_abs_diff(&reference);
    let e2 = run(0.5 / 800.0).max_abs_diff(&reference);
    let order = (e1 / e2).log2();
    assert!((3.5..4.5).contains(&order), "order {order}: {e1:e} {e2:e}");
}

#[test]
fn curvature_constant_is_a_translation() {
    let u0 = sample_u(128);
    let c = 0.7;
    let a = evolve_vmkdv_with(&u0, 0.5, 2e-3, c, &quiet(50)).unwrap();
    let b = evolve_vmkdv_with(&u0, 0.5, 2e-3, 0.0, &quiet(50)).unwrap();
    for ((t, ua), ub) in a.times.iter().zip(&a.snapshots).zip(&b.snapshots) {
        let d = ua.max_abs_diff(&shift(ub, c * t));
        assert!(d < 1e-6, "t = {t}: {d}");
    }
}

#[test]
fn time_steps_are_guarded() {
    let u0 = sample_u(256);
    let bound = stability_bound(&u0);
    assert!(matches!(
        evolve_vmkdv(&u0, 1.0, 2.0 * bound, 0.0),
        Err(Error::StabilityViolation { .. })
    ));
    let loose = EvolveOptions {
        save_every: 1,
        enforce_stability: false,
        ..Default::default()
    };
    assert!(matches!(
        evolve_vmkdv_with(&u0, 5.0, 20.0 * bound, 0.0, &loose),
        Err(Error::BlowUp { .. })
    ));
    assert!(matches!(evolve_vmkdv(&u0, 1.0, 0.0, 0.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn step_lands_on_final_time() {
    let traj = evolve_vmkdv(&sample_u(64), 0.1, 0.003, 0.0).unwrap();
    assert!((traj.times.last().unwrap() - 0.1).abs() < 1e-14);
    let steps: Vec<f64> = traj.times.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|s| (s - traj.dt).abs() < 1e-14));
}

#[test]
fn trajectory_files_round_trip() {
    let traj = evolve_vmkdv_with(&sample_u(64), 0.05, 0.005, 0.0, &quiet(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    traj.write_dir(dir.path()).unwrap();
    let back = FlowTrajectory::read_dir(dir.path()).unwrap();
    assert_eq!(back.times, traj.times);
    for (a, b) in back.snapshots.iter().zip(&traj.snapshots) {
        assert!(a.max_abs_diff(b) < 1e-15);
    }
}

#[test]
fn zero_curvature_gives_a_straight_line() {
    let u = GridFunction::zeros(grid(32), 2);
    let st = standard_frame(&u).unwrap();
    for (m, g) in st.gamma.iter().enumerate() {
        assert!((g - DVector::from_vec(vec![st.grid().x(m), 0.0, 0.0])).amax() < 1e-13);
    }
    assert!(st.frames.iter().all(|e| (e - DMatrix::identity(3, 3)).amax() == 0.0));
}

#[test]
fn constant_rotation_gives_a_helix() {
    let c = 2.0;
    let u = GridFunction::from_fn(grid(256), 2, |k, x| if k == 0 { (c * x).cos() } else { (c * x).sin() });
    let st = standard_frame(&u).unwrap();
    assert!(st.orthonormality_defect() < 1e-8);
    assert!(st.tangent_defect() < 1e-8);
    let dx = st.grid().dx();
    let g1 = fd_derivative(&st.gamma, dx);
    let g2 = fd_derivative(&g1, dx);
    let g3 = fd_derivative(&g2, dx);
    for m in 20..236 {
        let v = |d: &DVector<f64>| Vector3::new(d[0], d[1], d[2]);
        let kappa = g2[m].norm();
        let det = Matrix3::from_columns(&[v(&g1[m]), v(&g2[m]), v(&g3[m])]).determinant();
        assert!((kappa - 1.0).abs() < 1e-6);
        assert!((det / (kappa * kappa) - c).abs() < 1e-5);
    }
    // the same Frenet data through the gauge
    let (_, f) = angles_from_natural(&NaturalCurvatures(u)).unwrap();
    assert!(f.0.component(1).iter().all(|t| (t - c).abs() < 1e-9));
}

#[test]
fn closure_defect_is_reported() {
    let st = standard_frame(&sample_u(128)).unwrap();
    let (gap, frame_gap) = st.closure_defect();
    assert!(gap.is_finite() && frame_gap.is_finite());
}

#[test]
fn evolved_curve_matches_flow() {
    let u0 = sample_u(256);
    let traj = evolve_vmkdv(&u0, 0.1, 2.5e-3, 0.0).unwrap();
    let ev = evolve_curve(&traj, &standard_frame(&u0).unwrap()).unwrap();
    assert!(ev.curvature_drift.last().unwrap() < &1e-4);
    assert!(ev.arc_length_defect.iter().all(|d| *d < 1e-6));
    for st in &ev.states {
        assert!(st.orthonormality_defect() < 1e-8);
    }
}

#[test]
fn stationary_curve_for_zero_data() {
    let u0 = GridFunction::zeros(grid(32), 2);
    let traj = evolve_vmkdv(&u0, 0.05, 0.01, 0.0).unwrap();
    let ev = evolve_curve(&traj, &standard_frame(&u0).unwrap()).unwrap();
    for c in &ev.curves {
        for (a, b) in c.iter().zip(&ev.curves[0]) {
            assert!((a - b).amax() == 0.0);
        }
    }
}

#[test]
fn curve_needs_flat_flow() {
    let u0 = sample_u(64);
    let traj = evolve_vmkdv(&u0, 0.02, 0.01, 0.5).unwrap();
    assert!(matches!(
        evolve_curve(&traj, &standard_frame(&u0).unwrap()),
        Err(Error::InvalidArgument(_))
    ));
}
