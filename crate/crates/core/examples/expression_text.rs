//! Parsing, canonical form and calculus on differential polynomials.

use vmkdv::diffpoly::*;

fn main() -> vmkdv::Result<()> {
    let n = 3;
    // <u,u> sugar expands to components; terms are collected canonically
    let e = parse("u[1]'3 + 3/2*<u,u>*u[1]'1 + u[1]'1*u[2]^2 - u[2]^2*u[1]'1", n)?;
    println!("e        = {}", print(&e));

    let d = total_derivative(&e)?;
    println!("Dx e     = {}", print(&d));
    println!("E(Dx e)  = {:?}", euler_operator(&d, n)?.0.iter().map(print).collect::<Vec<_>>());

    // the homotopy formula recovers an antiderivative up to a constant
    let f = formal_integrate(&d).expect("a divergence integrates");
    println!("∫ Dx e   = {}", print(&f));

    // nonlocal atoms: Dx⁻¹ of a non-divergence stays symbolic
    let a = dxi(&parse("u[1]*u[2]", n)?)?;
    println!("Dxi(u1 u2) = {}", print(&a));
    println!("Dx of it   = {}", print(&total_derivative(&a)?));

    // equality modulo total derivatives
    let p = parse("u[1]*u[1]'2", n)?;
    let q = parse("-u[1]'1^2", n)?;
    println!("u u'' ~ -u'^2 : {}", equivalent_mod_divergence(&p, &q)?);

    // evaluation on a periodic grid
    let g = SpectralGrid::new(16, 2.0 * std::f64::consts::PI)?;
    let u = GridFunction::from_fn(g.clone(), 2, |c, x| if c == 0 { x.cos() } else { x.sin() });
    let vals = evaluate_on_grid(&parse("<u,u>", n)?, &FieldData::new(g).with(Family::U, u))?;
    println!("<u,u> on the grid: {:.3?}", &vals[..4]);
    Ok(())
}
