//! Derivations on the differential polynomial ring: total derivative,
//! linearization, Euler operator, formal integration and the `Dx^{-1}`
//! normal form.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Zero};

use super::expr::{rat, Atom, Expression, Family, Jet, Monomial, Rational, VectorExpression};
use crate::error::{Error, Result};

/// Default bound on jet orders produced by [`total_derivative`].
pub const DEFAULT_MAX_ORDER: u8 = 12;

/// `Dx e` with the default order bound.
pub fn total_derivative(e: &Expression) -> Result<Expression> {
    total_derivative_bounded(e, DEFAULT_MAX_ORDER)
}

pub fn total_derivative_bounded(e: &Expression, max_order: u8) -> Result<Expression> {
    if let Some(o) = e.max_order() {
        if o >= max_order {
            return Err(Error::MaxOrderExceeded {
                order: o as u32 + 1,
                max: max_order,
            });
        }
    }
    Ok(dx(e))
}

/// Unbounded total derivative, for internal use.
pub(crate) fn dx(e: &Expression) -> Expression {
    let mut out = Expression::zero();
    for (m, c) in e.terms() {
        dx_monomial_into(m, c, &mut out);
    }
    out
}

fn dx_monomial_into(m: &Monomial, c: &Rational, out: &mut Expression) {
    for (jet, _) in m.jets() {
        let (e, rest) = m.without_jet(jet).unwrap();
        let mono = rest.mul(&Monomial::from_jet(jet.raised()));
        out.add_term(mono, c * rat(e as i64, 1));
    }
    for idx in 0..m.atoms().len() {
        let (e, rest) = m.without_atom_at(idx);
        let arg = m.atoms()[idx].0.argument();
        let k = c * rat(e as i64, 1);
        for (am, ac) in arg.terms() {
            out.add_term(rest.mul(am), &k * ac);
        }
    }
}

/// `Dx^k e`.
pub fn dx_pow(e: &Expression, k: usize) -> Expression {
    let mut out = e.clone();
    for _ in 0..k {
        out = dx(&out);
    }
    out
}

/// `(-Dx)^k e`.
pub(crate) fn neg_dx_pow(e: &Expression, k: usize) -> Expression {
    let out = dx_pow(e, k);
    if k % 2 == 1 {
        -out
    } else {
        out
    }
}

/// Partial derivative with respect to one jet variable; atoms are treated as
/// independent symbols.
pub fn partial(e: &Expression, jet: &Jet) -> Expression {
    let mut out = Expression::zero();
    for (m, c) in e.terms() {
        if let Some((k, rest)) = m.without_jet(jet) {
            out.add_term(rest, c * rat(k as i64, 1));
        }
    }
    out
}

/// Replace every occurrence of a `from`-family jet by the corresponding
/// `to`-family jet, summed over occurrences; nonlocal atoms are linearized
/// through their arguments.
pub fn linearize(e: &Expression, from: Family, to: Family) -> Result<Expression> {
    let mut out = Expression::zero();
    for (m, c) in e.terms() {
        for (jet, _) in m.jets() {
            if jet.family != from {
                continue;
            }
            let (k, rest) = m.without_jet(jet).unwrap();
            let target = Jet {
                family: to,
                ..*jet
            };
            out.add_term(rest.mul(&Monomial::from_jet(target)), c * rat(k as i64, 1));
        }
        for idx in 0..m.atoms().len() {
            let (k, rest) = m.without_atom_at(idx);
            let arg = m.atoms()[idx].0.argument();
            let inner = linearize(arg, from, to)?;
            if inner.is_zero() {
                continue;
            }
            let img = dxi(&inner)?;
            let coeff = Expression::term(c * rat(k as i64, 1), rest);
            out += &(&coeff * &img);
        }
    }
    Ok(out)
}

/// Fréchet derivative of `e` (a function of `u`) in the direction of the
/// formal field `direction`.
pub fn frechet_derivative(e: &Expression, direction: Family) -> Result<Expression> {
    if direction == Family::U {
        return Err(Error::InvalidArgument(
            "Fréchet direction must be a formal field, not u".into(),
        ));
    }
    if e.families().iter().any(|f| *f == direction) {
        return Err(Error::InvalidArgument(format!(
            "expression already depends on the direction field {}",
            direction.symbol()
        )));
    }
    linearize(e, Family::U, direction)
}

/// Variational derivative with respect to one field component.
pub fn variational_derivative(e: &Expression, family: Family, component: usize) -> Result<Expression> {
    if !e.is_local() {
        return Err(Error::NonlocalArgument(e.to_string()));
    }
    let top = e
        .jets()
        .iter()
        .filter(|j| j.family == family && j.component as usize == component)
        .map(|j| j.order)
        .max();
    let mut out = Expression::zero();
    if let Some(top) = top {
        for k in 0..=top as usize {
            let d = partial(e, &Jet::new(family, component, k));
            if !d.is_zero() {
                out += &neg_dx_pow(&d, k);
            }
        }
    }
    Ok(out)
}

/// Euler operator with respect to `u`, returning the `n - 1` components.
pub fn euler_operator(e: &Expression, n: usize) -> Result<VectorExpression> {
    let comps = (1..n)
        .map(|k| variational_derivative(e, Family::U, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(VectorExpression(comps))
}

/// True when the local expression `e` lies in the image of `Dx`.
pub fn is_total_derivative(e: &Expression) -> Result<bool> {
    if !e.is_local() {
        return Err(Error::NonlocalArgument(e.to_string()));
    }
    if !e.constant_term().is_zero() {
        return Ok(false);
    }
    let fields: std::collections::BTreeSet<(Family, u8)> =
        e.jets().iter().map(|j| (j.family, j.component)).collect();
    for (f, c) in fields {
        if !variational_derivative(e, f, c as usize)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Antiderivative of a local expression via the homotopy formula, with zero
/// integration constant. `None` when `e` is not a total derivative.
pub fn formal_integrate(e: &Expression) -> Option<Expression> {
    if !e.is_local() || !is_total_derivative(e).ok()? {
        return None;
    }
    let mut by_degree: BTreeMap<u32, Expression> = BTreeMap::new();
    for (m, c) in e.terms() {
        by_degree
            .entry(m.jet_degree())
            .or_default()
            .add_term(m.clone(), c.clone());
    }
    let mut out = Expression::zero();
    for (d, f) in by_degree {
        let mut acc = Expression::zero();
        for jet in f.jets() {
            let i = jet.order as usize;
            if i == 0 {
                continue;
            }
            let df = partial(&f, &jet);
            for j in 0..i {
                let low = Expression::jet(Jet { order: j as u8, ..jet });
                acc += &(&low * &neg_dx_pow(&df, i - 1 - j));
            }
        }
        out += &acc.scale(&rat(1, d as i64));
    }
    debug_assert_eq!(dx(&out), *e);
    (dx(&out) == *e).then_some(out)
}

// ---------------------------------------------------------------------------
// Dx^{-1} normal form
// ---------------------------------------------------------------------------

/// Homogeneity class preserved by `Dx`: the multiset of fields and the
/// total derivative weight.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Block {
    fields: Vec<(Family, u8)>,
    weight: u32,
}

fn block_of(m: &Monomial) -> Block {
    let mut fields = Vec::new();
    for (j, e) in m.jets() {
        for _ in 0..*e {
            fields.push((j.family, j.component));
        }
    }
    Block {
        fields,
        weight: m.weight(),
    }
}

/// All monomials with the given field multiset and weight.
fn monomials_of(fields: &[(Family, u8)], weight: u32) -> Vec<Monomial> {
    let mut groups: Vec<((Family, u8), u32)> = Vec::new();
    for f in fields {
        match groups.last_mut() {
            Some((g, m)) if g == f => *m += 1,
            _ => groups.push((*f, 1)),
        }
    }
    let mut out = Vec::new();
    let mut cur = Monomial::one();
    fill_groups(&groups, 0, weight, &mut cur, &mut out);
    out
}

fn fill_groups(
    groups: &[((Family, u8), u32)],
    g: usize,
    remaining: u32,
    cur: &mut Monomial,
    out: &mut Vec<Monomial>,
) {
    if g == groups.len() {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let ((family, comp), mult) = groups[g];
    let mut seq = Vec::new();
    partitions_into(mult, remaining, remaining, &mut seq, &mut |orders: &[u32]| {
        let used: u32 = orders.iter().sum();
        let mut next = cur.clone();
        for &o in orders {
            next = next.mul(&Monomial::from_jet(Jet::new(family, comp as usize, o as usize)));
        }
        fill_groups(groups, g + 1, remaining - used, &mut next, out);
    });
}

/// Non-increasing sequences of `len` non-negative integers, each `<= cap`,
/// with sum `<= budget`.
fn partitions_into(
    len: u32,
    budget: u32,
    cap: u32,
    seq: &mut Vec<u32>,
    f: &mut dyn FnMut(&[u32]),
) {
    if len == 0 {
        f(seq);
        return;
    }
    for v in 0..=cap.min(budget) {
        seq.push(v);
        partitions_into(len - 1, budget - v, v, seq, f);
        seq.pop();
    }
}

struct EchelonRow {
    row: Expression,
    preimage: Expression,
}

/// Reduce `g` (homogeneous in `block`) modulo `Dx` of lower-weight
/// monomials. Returns `(F, r)` with `g = Dx F + r`, `r` free of pivots.
fn reduce_block(block: &Block, g: &Expression) -> (Expression, Expression) {
    if block.weight == 0 || block.fields.is_empty() {
        return (Expression::zero(), g.clone());
    }
    let mut rows: BTreeMap<Monomial, EchelonRow> = BTreeMap::new();
    for cand in monomials_of(&block.fields, block.weight - 1) {
        let mut row = dx(&Expression::term(Rational::one(), cand.clone()));
        let mut pre = Expression::term(Rational::one(), cand);
        loop {
            let Some((lead, lc)) = row.leading().map(|(m, c)| (m.clone(), c.clone())) else {
                break;
            };
            match rows.get(&lead) {
                Some(r) => {
                    row -= &r.row.scale(&lc);
                    pre -= &r.preimage.scale(&lc);
                }
                None => {
                    let inv = lc.recip();
                    rows.insert(
                        lead,
                        EchelonRow {
                            row: row.scale(&inv),
                            preimage: pre.scale(&inv),
                        },
                    );
                    break;
                }
            }
        }
    }
    let mut rem = g.clone();
    let mut prim = Expression::zero();
    let mut done = Expression::zero();
    while let Some((lead, lc)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
        match rows.get(&lead) {
            Some(r) => {
                rem -= &r.row.scale(&lc);
                prim += &r.preimage.scale(&lc);
            }
            None => {
                rem.terms.remove(&lead);
                done.add_term(lead, lc);
            }
        }
    }
    (prim, done)
}

/// Split a local expression as `Dx F + r`, where `r` is the canonical
/// remainder (no monomial of `r` is a leading term of any total derivative
/// in its homogeneity class).
pub fn divergence_normal_form(g: &Expression) -> Result<(Expression, Expression)> {
    if !g.is_local() {
        return Err(Error::NestingDepth(g.to_string()));
    }
    let mut blocks: BTreeMap<Block, Expression> = BTreeMap::new();
    for (m, c) in g.terms() {
        blocks
            .entry(block_of(m))
            .or_default()
            .add_term(m.clone(), c.clone());
    }
    let mut f = Expression::zero();
    let mut r = Expression::zero();
    for (b, part) in blocks {
        let (pf, pr) = reduce_block(&b, &part);
        f += pf;
        r += pr;
    }
    Ok((f, r))
}

/// `Dx^{-1} g`: the integrable part is integrated exactly, the remainder is
/// kept as formal atoms over single canonical monomials.
pub fn dxi(g: &Expression) -> Result<Expression> {
    let (mut f, r) = divergence_normal_form(g)?;
    for (m, c) in r.terms() {
        let atom = Atom(Arc::new(Expression::term(Rational::one(), m.clone())));
        f += &Expression::from_atom(atom).scale(c);
    }
    Ok(f)
}

/// `Dx^{-1}` of an expression that may be linear in atoms.
///
/// Uses `Dx⁻¹(C'·A(a)) = C·A(a) − Dx⁻¹(C·a)` and `Dx⁻¹(a·A(a)) = ½A(a)²`;
/// any other nonlocal term would need a second level of nesting.
pub fn dxi_ext(g: &Expression) -> Result<Expression> {
    if g.is_local() {
        return dxi(g);
    }
    let mut local = Expression::zero();
    let mut cofactors: BTreeMap<Atom, Expression> = BTreeMap::new();
    for (m, c) in g.terms() {
        match m.atom_degree() {
            0 => local.add_term(m.clone(), c.clone()),
            1 => {
                let (loc, at) = m.split_local();
                cofactors
                    .entry(at.atoms()[0].0.clone())
                    .or_default()
                    .add_term(loc, c.clone());
            }
            _ => return Err(Error::NestingDepth(g.to_string())),
        }
    }
    let mut out = dxi(&local)?;
    for (atom, cof) in cofactors {
        let (cint, r) = divergence_normal_form(&cof)?;
        let a_expr = Expression::from_atom(atom.clone());
        out += &(&cint * &a_expr);
        out -= &dxi(&(&cint * atom.argument()))?;
        for (m, c) in r.terms() {
            if Expression::term(Rational::one(), m.clone()) == *atom.argument() {
                out += &(&a_expr * &a_expr).scale(&(c * rat(1, 2)));
            } else {
                return Err(Error::NestingDepth(format!(
                    "Dxi({} * Dxi({}))",
                    Expression::term(c.clone(), m.clone()),
                    atom.argument()
                )));
            }
        }
    }
    Ok(out)
}

/// Replace the jets of `family` by derivatives of the components of `v`.
pub fn substitute(e: &Expression, family: Family, v: &VectorExpression) -> Result<Expression> {
    let mut cache: BTreeMap<Jet, Expression> = BTreeMap::new();
    let mut image = |j: &Jet| -> Expression {
        cache
            .entry(*j)
            .or_insert_with(|| dx_pow(&v.0[j.component as usize - 1], j.order as usize))
            .clone()
    };
    let mut out = Expression::zero();
    for (m, c) in e.terms() {
        let mut term = Expression::constant(c.clone());
        let mut rest = Monomial::one();
        for (j, k) in m.jets() {
            if j.family == family {
                term = &term * &image(j).pow(*k);
            } else {
                rest = rest.mul(&Monomial {
                    jets: vec![(*j, *k)],
                    atoms: Vec::new(),
                });
            }
        }
        for (a, k) in m.atoms() {
            if a.argument().families().contains(&family) {
                let arg = substitute(a.argument(), family, v)?;
                term = &term * &dxi_ext(&arg)?.pow(*k);
            } else {
                rest = rest.mul(&Monomial {
                    jets: Vec::new(),
                    atoms: vec![(a.clone(), *k)],
                });
            }
        }
        out += &(&term * &Expression::term(Rational::one(), rest));
    }
    Ok(out)
}

/// `Dx^{-1}` applied componentwise to a vector.
pub fn dxi_vec(v: &VectorExpression) -> Result<VectorExpression> {
    v.try_map(dxi)
}
