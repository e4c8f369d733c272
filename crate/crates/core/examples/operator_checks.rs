//! The symplectic, cosymplectic and recursion operators, and numeric checks
//! of their structural properties on seeded random data.

use vmkdv::operators::checks::*;
use vmkdv::operators::{composed_form, cosymplectic_h, recursion_r, symplectic_i};

fn main() -> vmkdv::Result<()> {
    let n = 3;
    println!("I = {}", symplectic_i(n));
    println!("H = {}", cosymplectic_h(n));
    println!("R = {}", recursion_r(n));
    println!("H∘I == R : {}", composed_form(n)?.same_as(&recursion_r(n)));

    println!("{}", serde_json::to_string(&check_symplectic(n)?).unwrap());
    for control in [false, true] {
        let v = check_hereditary(4, 128, 1e-5, 7, control)?;
        println!("{}", serde_json::to_string(&v).unwrap());
    }
    let (good, bad) = check_jacobi(n, 64, 1, &nondegenerate_densities(n))?;
    println!("Jacobi: H {:.2e}, I∘I control {:.2e}", good.relative(), bad.relative());
    println!("skew-adjoint defect of H: {:.2e}", skew_adjoint_defect(&cosymplectic_h(n), 128, 3)?);
    println!("NLS square identity: {}", nls_square_identity()?);
    Ok(())
}
