//! The so(n+1) Lax pair: symbolic λ-order identities, the invariant form,
//! and the zero-curvature residual along a computed trajectory.

use std::f64::consts::PI;

use vmkdv::curveflow::{evolve_vmkdv_with, EvolveOptions};
use vmkdv::diffpoly::{rat, GridFunction, SpectralGrid};
use vmkdv::laxpair::*;

fn main() -> vmkdv::Result<()> {
    let lax = build_m(3, &rat(0, 1));
    println!("L01 =\n{}", lax.l01);
    println!("M2 =\n{}", lax.m.coefficients[2]);

    for c in lambda_identities(4, &rat(1, 2), &rat(-1, 1)) {
        println!("{:<16} {}", c.order, if c.pass { "ok" } else { "FAILED" });
    }
    println!("K(L01, L01) = -2(n-2)|u|^2 for n = 3..6: {}", (3..=6).all(killing_check));

    let g = SpectralGrid::new(64, 2.0 * PI)?;
    let u0 = GridFunction::from_fn(g, 2, |c, x| if c == 0 { 0.8 * x.cos() } else { 0.6 * x.sin() });
    for (label, nonlinearity) in [("vmKdV", 1.5), ("wrong sign", -1.5)] {
        for dt in [5e-4, 2.5e-4] {
            let opts = EvolveOptions {
                nonlinearity,
                ..Default::default()
            };
            let traj = evolve_vmkdv_with(&u0, 0.02, dt, 0.0, &opts)?;
            let rows = zero_curvature_residual(&traj, &DEFAULT_LAMBDAS, 0.0, 0.0)?;
            println!("{label:<10} dt = {dt:.1e}: max residual {:.2e}", max_residual(&rows));
        }
    }
    Ok(())
}
