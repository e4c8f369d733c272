use std::f64::consts::PI;

use proptest::prelude::*;
use vmkdv::curveflow::{evolve_vmkdv_with, EvolveOptions};
use vmkdv::diffpoly::{evaluate_on_grid, rat, Family, FieldData, GridFunction, SpectralGrid};
use vmkdv::laxpair::*;
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

fn opts(save_every: usize) -> EvolveOptions {
    EvolveOptions {
        save_every,
        ..Default::default()
    }
}

#[test]
fn lambda_identities_hold_exactly() {
    for n in 3..=6 {
        for (nu, kc) in [(rat(0, 1), rat(0, 1)), (rat(3, 2), rat(-1, 1)), (rat(-2, 3), rat(5, 7))] {
            for c in lambda_identities(n, &nu, &kc) {
                assert!(c.pass, "n = {n}, {}: {:?}", c.order, c.residual);
            }
        }
    }
}

#[test]
fn m2_at_a_sample_point() {
    // u = (cos x, sin x) at x = 0 by hand:
    // [L¹⁰, Dx L⁰¹] = E₀₃ − E₃₀, β = 1/2
    let p = build_m_numeric(&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], 0.0);
    let m2 = &p.m.coefficients[2];
    let mut expected = SoMatrix::<f64>::zeros(4);
    expected.set(0, 3, -1.0);
    expected.set(3, 0, 1.0);
    expected.set(0, 1, 0.5);
    expected.set(1, 0, -0.5);
    assert!(m2.sub(&expected).amax() < 1e-15, "{m2:?}");
    // M₃ = Dx²L⁰¹ + βL⁰¹ − [L⁰¹, Dx L⁰¹]
    let m3 = &p.m.coefficients[3];
    assert_eq!(*m3.get(1, 2), -1.0 + 0.5);
    // [L⁰¹, Dx L⁰¹] = E₃₂ − E₂₃ with u = e₁, u₁ = e₂
    assert_eq!(*m3.get(2, 3), 1.0);
    assert_eq!(*m3.get(3, 2), -1.0);
}

#[test]
fn numeric_and_symbolic_m_agree() {
    let g = grid(32);
    let u = GridFunction::from_fn(g.clone(), 3, |c, x| ((c + 1) as f64 * x).sin() + 0.3 * c as f64);
    let (u1, u2) = (u.derivative(1), u.derivative(2));
    let sym = build_m(4, &rat(2, 5));
    let data = FieldData::new(g.clone()).with(Family::U, u.clone());
    for (k, coeff) in sym.m.coefficients.iter().enumerate() {
        let vals: Vec<Vec<f64>> = coeff
            .entries()
            .iter()
            .map(|e| evaluate_on_grid(e, &data).unwrap())
            .collect();
        for m in (0..32).step_by(5) {
            let at = |f: &GridFunction| (0..3).map(|c| f.component(c)[m]).collect::<Vec<_>>();
            let p = build_m_numeric(&at(&u), &at(&u1), &at(&u2), 0.4);
            for (idx, v) in p.m.coefficients[k].entries().iter().enumerate() {
                assert!((v - vals[idx][m]).abs() < 1e-9, "M{k} entry {idx}");
            }
        }
    }
}

#[test]
fn killing_form_normalization() {
    for n in 3..=7 {
        assert!(killing_check(n), "n = {n}");
    }
    assert!(!killing_check(2));
    // n = 3, u = (1, 0): tr(L⁰¹L⁰¹) = −2
    let l = l01(&[1.0, 0.0]);
    assert_eq!(killing_form(3, &l, &l), -2.0);
}

#[test]
fn ad_trace_form_is_a_multiple_of_the_trace() {
    // on so(d) the ad-trace form is (d − 2) tr(XY)
    for n in 2..=6 {
        let d = n + 1;
        let x = SoMatrix::from_fn(d, |r, c| if r < c { (r * 3 + c) as f64 * 0.1 } else if r > c { -((c * 3 + r) as f64) * 0.1 } else { 0.0 });
        let y = SoMatrix::from_fn(d, |r, c| if r < c { ((r + 2 * c) % 5) as f64 - 2.0 } else if r > c { -(((c + 2 * r) % 5) as f64 - 2.0) } else { 0.0 });
        let lhs = ad_trace_form(&x, &y);
        let rhs = (d as f64 - 2.0) * x.matmul(&y).trace();
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "n = {n}: {lhs} vs {rhs}");
    }
}

fn skew(d: usize, vals: &[f64]) -> SoMatrix<f64> {
    let mut m = SoMatrix::zeros(d);
    let mut k = 0;
    for r in 0..d {
        for c in r + 1..d {
            m.set(r, c, vals[k]);
            m.set(c, r, -vals[k]);
            k += 1;
        }
    }
    m
}

proptest! {
    #[test]
    fn ad_l10_squared_is_minus_one_on_degree_01(
        n in 3usize..7,
        vals in prop::collection::vec(-2.0f64..2.0, 21),
    ) {
        let d = n + 1;
        let x = skew(d, &vals).graded_part((0, 1));
        let e = l10::<f64>(n);
        let twice = ad(&e, &ad(&e, &x));
        prop_assert!(twice.add(&x).amax() < 1e-12);
    }

    #[test]
    fn brackets_respect_the_gradings(
        n in 3usize..7,
        a in prop::collection::vec(-2.0f64..2.0, 21),
        b in prop::collection::vec(-2.0f64..2.0, 21),
        ga in (0u8..2, 0u8..2),
        gb in (0u8..2, 0u8..2),
    ) {
        let d = n + 1;
        let x = skew(d, &a).graded_part(ga);
        let y = skew(d, &b).graded_part(gb);
        let z = x.bracket(&y);
        prop_assert!(z.is_skew() || z.add(&z.transpose()).amax() < 1e-12);
        let expect = ((ga.0 + gb.0) % 2, (ga.1 + gb.1) % 2);
        for g in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            if g != expect {
                prop_assert!(z.graded_part(g).amax() < 1e-12, "{ga:?} {gb:?} leak into {g:?}");
            }
        }
    }

    #[test]
    fn killing_form_is_invariant(
        n in 3usize..6,
        a in prop::collection::vec(-1.0f64..1.0, 15),
        b in prop::collection::vec(-1.0f64..1.0, 15),
        c in prop::collection::vec(-1.0f64..1.0, 15),
    ) {
        let d = n + 1;
        let (x, y, z) = (skew(d, &a), skew(d, &b), skew(d, &c));
        let lhs = killing_form(n, &ad(&x, &y), &z);
        let rhs = -killing_form(n, &y, &ad(&x, &z));
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn lax_pieces_have_the_expected_degrees() {
    let sym = build_m(4, &rat(0, 1));
    assert_eq!(sym.l10.degrees(), vec![(1, 0)]);
    assert_eq!(sym.l01.degrees(), vec![(0, 1)]);
    assert_eq!(sym.m.coefficients[2].degrees(), vec![(1, 0), (1, 1)]);
    assert_eq!(sym.m.coefficients[3].degrees(), vec![(0, 0), (0, 1)]);
}

#[test]
fn residual_vanishes_along_the_flow() {
    // snapshots must resolve the k³ dispersion in time
    let traj = evolve_vmkdv_with(&sample_u(64), 0.02, 5e-4, 0.0, &opts(1)).unwrap();
    let rows = zero_curvature_residual(&traj, &DEFAULT_LAMBDAS, 0.0, 0.0).unwrap();
    assert_eq!(rows.len(), 3 * (traj.len() - 4));
    let r = max_residual(&rows);
    assert!(r < 1e-5, "{r:e}");
}

#[test]
fn residual_converges_at_fourth_order() {
    let run = |dt: f64| {
        let traj = evolve_vmkdv_with(&sample_u(64), 0.02, dt, 0.0, &opts(1)).unwrap();
        max_residual(&zero_curvature_residual(&traj, &DEFAULT_LAMBDAS, 0.0, 0.0).unwrap())
    };
    let (coarse, fine) = (run(1e-3), run(5e-4));
    let ratio = coarse / fine;
    assert!((12.0..20.0).contains(&ratio), "{coarse:e} {fine:e}");
}

#[test]
fn curved_ambient_space() {
    let kc = 0.6;
    let traj = evolve_vmkdv_with(&sample_u(64), 0.02, 2.5e-4, kc, &opts(1)).unwrap();
    let good = max_residual(&zero_curvature_residual(&traj, &DEFAULT_LAMBDAS, 0.0, kc).unwrap());
    assert!(good < 1e-5, "{good:e}");
    // the same trajectory read as a flat-space flow with ν = −κ_c
    let shifted = max_residual(&zero_curvature_residual(&traj, &DEFAULT_LAMBDAS, -kc, 0.0).unwrap());
    assert!(shifted < 1e-5, "{shifted:e}");
    let wrong = max_residual(&zero_curvature_residual(&traj, &DEFAULT_LAMBDAS, 0.0, 0.0).unwrap());
    assert!(wrong > 1e-2, "{wrong:e}");
}

#[test]
fn wrong_nonlinearity_is_detected() {
    let bad = EvolveOptions {
        save_every: 1,
        nonlinearity: -1.5,
        ..Default::default()
    };
    let traj = evolve_vmkdv_with(&sample_u(64), 0.02, 5e-4, 0.0, &bad).unwrap();
    let r = max_residual(&zero_curvature_residual(&traj, &DEFAULT_LAMBDAS, 0.0, 0.0).unwrap());
    assert!(r > 0.1, "{r:e}");
}

#[test]
fn too_few_snapshots() {
    let traj = evolve_vmkdv_with(&sample_u(32), 0.03, 0.01, 0.0, &opts(1)).unwrap();
    assert!(matches!(
        zero_curvature_residual(&traj, &[1.0], 0.0, 0.0),
        Err(Error::InsufficientSnapshots(4))
    ));
}

#[test]
fn zero_data_has_zero_residual() {
    let u0 = GridFunction::zeros(grid(32), 3);
    let traj = evolve_vmkdv_with(&u0, 0.01, 1e-3, 0.0, &opts(1)).unwrap();
    let rows = zero_curvature_residual(&traj, &DEFAULT_LAMBDAS, 0.0, 0.0).unwrap();
    assert!(rows.iter().all(|r| r.residual == 0.0 && r.n == 4));
}
