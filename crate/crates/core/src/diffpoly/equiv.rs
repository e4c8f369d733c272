use std::collections::BTreeMap;

use num::{One, Zero};

use super::calculus::{divergence_normal_form, dxi, formal_integrate};
use super::expr::{rat, Atom, Expression, Monomial, Rational};
use crate::error::{Error, Result};

/// Decide `e1 ≡ e2` modulo total x-derivatives.
///
/// Terms linear in one atom are moved into the canonical shape
/// `m·Dx⁻¹(m')` with `m < m'` by the integration-by-parts rule
/// `f·Dx⁻¹(g) ≡ −Dx⁻¹(f)·g`; the local remainder is then tested with the
/// Euler operator. Anything that survives without cancelling is reported
/// as [`Error::Undecided`].
pub fn equivalent_mod_divergence(e1: &Expression, e2: &Expression) -> Result<bool> {
    let diff = e1 - e2;
    let mut local = Expression::zero();
    let mut cofactors: BTreeMap<Atom, Expression> = BTreeMap::new();
    let mut stuck = Expression::zero();
    for (m, c) in diff.terms() {
        match m.atom_degree() {
            0 => local.add_term(m.clone(), c.clone()),
            1 => {
                let (loc, at) = m.split_local();
                let atom = at.atoms()[0].0.clone();
                cofactors.entry(atom).or_default().add_term(loc, c.clone());
            }
            _ => stuck.add_term(m.clone(), c.clone()),
        }
    }

    // pairs[(x, y)] = coefficient of x·Dx⁻¹(y), x < y
    let mut pairs: BTreeMap<(Monomial, Monomial), Rational> = BTreeMap::new();
    for (atom, cof) in cofactors {
        let a = atom_monomial(&atom);
        let (g, r) = divergence_normal_form(&cof)?;
        // cof·A(a) = Dx(G·A(a)) − G·a + r·A(a)
        local -= &(&g * atom.argument());
        for (m, c) in r.terms() {
            match m.cmp(&a) {
                std::cmp::Ordering::Equal => {}
                std::cmp::Ordering::Less => add_pair(&mut pairs, m.clone(), a.clone(), c.clone()),
                std::cmp::Ordering::Greater => {
                    add_pair(&mut pairs, a.clone(), m.clone(), -c.clone())
                }
            }
        }
    }

    let mut residual = stuck;
    for ((x, y), c) in pairs {
        let atom = dxi(&Expression::term(Rational::one(), y))?;
        residual += &(&Expression::term(c, x) * &atom);
    }
    if !residual.is_zero() {
        return Err(Error::Undecided {
            residual: residual.to_string(),
        });
    }
    Ok(formal_integrate(&local).is_some())
}

fn add_pair(pairs: &mut BTreeMap<(Monomial, Monomial), Rational>, x: Monomial, y: Monomial, c: Rational) {
    let slot = pairs.entry((x, y)).or_insert_with(Rational::zero);
    *slot += c;
}

fn atom_monomial(a: &Atom) -> Monomial {
    let (m, c) = a
        .argument()
        .terms()
        .next()
        .expect("atom arguments are nonzero");
    debug_assert!(c == &rat(1, 1) && a.argument().len() == 1);
    m.clone()
}
