//! Frenet ↔ natural curvatures through the rotation gauge, for a helix and
//! for a wobbling curve in four dimensions.

use std::f64::consts::PI;

use vmkdv::diffpoly::{GridFunction, SpectralGrid};
use vmkdv::hasimoto::*;

fn main() -> vmkdv::Result<()> {
    let g = SpectralGrid::new(128, 2.0 * PI)?;

    // helix: constant curvature and torsion
    let helix = FrenetCurvatures(GridFunction::from_fn(g.clone(), 2, |c, _| if c == 0 { 1.0 } else { 2.0 }));
    let (u, theta) = natural_from_frenet(&helix, None)?;
    println!("helix u(π/4) = ({:.6}, {:.6})", u.0.component(0)[16], u.0.component(1)[16]);
    println!("classical transform agrees: {}", hasimoto_n3(&helix)?[16]);
    println!("theta23(π/4) = {:.6}", theta.get(2, 3)[16]);

    // n = 4
    let f = FrenetCurvatures(GridFunction::from_fn(g.clone(), 3, |c, x| match c {
        0 => 1.0 + 0.2 * x.sin(),
        1 => 0.4 + 0.1 * (2.0 * x).cos(),
        _ => 0.3 + 0.05 * x.cos(),
    }));
    let (u, theta) = natural_from_frenet(&f, None)?;
    let report = gauge_report(&f, &u, &theta)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    // the gauge has holonomy: periodic Frenet data gives non-periodic u
    println!("u(0) = {:.3?}, u(2π⁻) = {:.3?}", u.0.components().iter().map(|c| c[0]).collect::<Vec<_>>(),
        u.0.components().iter().map(|c| c[127]).collect::<Vec<_>>());

    // the inverse needs periodic natural data: start there and go round
    let nat = NaturalCurvatures(GridFunction::from_fn(g, 3, |c, x| match c {
        0 => x.cos(),
        1 => x.sin(),
        _ => 0.8 + 0.03 * (2.0 * x).cos(),
    }));
    let (theta, f) = angles_from_natural(&nat)?;
    let (back, _) = natural_from_frenet(&f, Some(&theta.at(0)))?;
    println!("recovered ū = {:.4?} at x = 0", f.0.components().iter().map(|c| c[0]).collect::<Vec<_>>());
    println!("round trip: {:.2e}", back.0.max_abs_diff(&nat.0));
    println!("rotation orthogonality: {:.2e}", rotation_field(&theta).orthogonality_defect());
    Ok(())
}
