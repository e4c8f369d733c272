//! The symplectic, cosymplectic and recursion operators of the vector mKdV
//! hierarchy, the hierarchy itself, and their verification suites.

pub mod checks;
mod wno;

pub use checks::*;
pub use wno::{MeanPolicy, Tail, WeaklyNonlocalOperator};

use crate::diffpoly::{rat, Expression, Rational, VectorExpression};
use crate::error::{Error, Result};

fn check_n(n: usize) {
    assert!(n >= 2, "ambient dimension must be at least 2");
}

/// `⟨u, u⟩`.
pub fn norm_squared(n: usize) -> Expression {
    let u = VectorExpression::u(n - 1, 0);
    u.dot(&u)
}

/// The vectors `J_kl v = v_l e_k − v_k e_l`, `k < l`, over all generators of
/// so(n−1). Summing `J v ⊗ J w` over them is the antisymmetrized form used
/// for the nonlocal tails.
pub fn rotation_images(v: &VectorExpression) -> Vec<VectorExpression> {
    let m = v.len();
    let mut out = Vec::new();
    for k in 0..m {
        for l in k + 1..m {
            let mut w = VectorExpression::zeros(m);
            w.0[k] = v.0[l].clone();
            w.0[l] = -&v.0[k];
            out.push(w);
        }
    }
    out
}

/// `𝕀 = Dx + u Dx⁻¹ uᵀ`.
pub fn symplectic_i(n: usize) -> WeaklyNonlocalOperator {
    check_n(n);
    let mut op = WeaklyNonlocalOperator::diagonal(n, 1, &Expression::one());
    let u = VectorExpression::u(n - 1, 0);
    op.add_tail(u.clone(), u, 1);
    op
}

/// `ℌ = Dx + Σ_{k<l} J_kl u Dx⁻¹ (J_kl u)ᵀ`, i.e.
/// `(ℌP)_k = P_k' + Σ_l u_l Dx⁻¹(u_l P_k − u_k P_l)`.
pub fn cosymplectic_h(n: usize) -> WeaklyNonlocalOperator {
    check_n(n);
    let mut op = WeaklyNonlocalOperator::diagonal(n, 1, &Expression::one());
    for w in rotation_images(&VectorExpression::u(n - 1, 0)) {
        op.add_tail(w.clone(), w, 1);
    }
    op
}

/// `ℜ = Dx² + ⟨u,u⟩ + u₁ Dx⁻¹ uᵀ − Σ_{k<l} J_kl u Dx⁻¹ (J_kl u₁)ᵀ`.
pub fn recursion_r(n: usize) -> WeaklyNonlocalOperator {
    recursion_r_with(n, true)
}

/// `ℜ` with or without its `⟨u,u⟩` multiplication term (the latter is the
/// negative control of the hereditary check).
pub fn recursion_r_with(n: usize, with_norm: bool) -> WeaklyNonlocalOperator {
    check_n(n);
    let mut op = WeaklyNonlocalOperator::diagonal(n, 2, &Expression::one());
    if with_norm {
        op = op.add(&WeaklyNonlocalOperator::diagonal(n, 0, &norm_squared(n)));
    }
    let u = VectorExpression::u(n - 1, 0);
    let u1 = VectorExpression::u(n - 1, 1);
    op.add_tail(u1, u.clone(), 1);
    for (wu, wu1) in rotation_images(&u).into_iter().zip(rotation_images(&VectorExpression::u(n - 1, 1))) {
        op.add_tail(wu, wu1, -1);
    }
    op
}

/// `ℌ ∘ 𝕀` composed exactly.
pub fn composed_form(n: usize) -> Result<WeaklyNonlocalOperator> {
    cosymplectic_h(n).compose(&symplectic_i(n))
}

/// A result of applying an operator, with its locality flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Applied {
    pub value: VectorExpression,
    pub local: bool,
}

pub fn apply(op: &WeaklyNonlocalOperator, v: &VectorExpression) -> Result<Applied> {
    let value = op.apply(v)?;
    let local = value.is_local();
    Ok(Applied { value, local })
}

/// `S₀ = u₁`, `S_{k+1} = ℜ S_k`.
pub fn hierarchy(n: usize, steps: usize) -> Result<Vec<VectorExpression>> {
    check_n(n);
    let r = recursion_r(n);
    let mut out = vec![VectorExpression::u(n - 1, 1)];
    for k in 0..steps {
        let next = r.apply(&out[k])?;
        if !next.is_local() {
            return Err(Error::NonlocalHierarchyMember(k + 1));
        }
        out.push(next);
    }
    Ok(out)
}

/// `u₃ + 3/2⟨u,u⟩u₁`.
pub fn vmkdv_rhs(n: usize) -> VectorExpression {
    let nn = norm_squared(n).scale(&rat(3, 2));
    VectorExpression::u(n - 1, 3).add(&VectorExpression::u(n - 1, 1).scale(&nn))
}

/// Right-hand side of a flow `u_t = ℜh − κ_c h`.
pub fn flow_rhs(n: usize, h: &VectorExpression, kappa_c: &Rational) -> Result<VectorExpression> {
    let rh = recursion_r(n).apply(h)?;
    Ok(rh.sub(&h.scale(&Expression::constant(kappa_c.clone()))))
}

/// The tangential speed `h₁ = Dx⁻¹⟨u, h⟩` of an arc-length preserving flow.
pub fn tangential_speed(h: &VectorExpression) -> Result<Expression> {
    let u = VectorExpression::u(h.len(), 0);
    crate::diffpoly::dxi_ext(&u.dot(h))
}
