use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num::{BigInt, BigRational, One, Zero};

pub type Rational = BigRational;

/// Build a rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Which field a jet variable belongs to: the curvature vector `u` or one of
/// the formal direction fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    U,
    P,
    Q,
    H,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::U, Family::P, Family::Q, Family::H];

    pub fn symbol(self) -> char {
        match self {
            Family::U => 'u',
            Family::P => 'P',
            Family::Q => 'Q',
            Family::H => 'h',
        }
    }

    pub fn from_symbol(c: char) -> Option<Family> {
        match c {
            'u' => Some(Family::U),
            'P' => Some(Family::P),
            'Q' => Some(Family::Q),
            'h' => Some(Family::H),
            _ => None,
        }
    }
}

/// The `order`-th x-derivative of component `component` (1-based) of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Jet {
    pub family: Family,
    pub component: u8,
    pub order: u8,
}

impl Jet {
    pub fn new(family: Family, component: usize, order: usize) -> Jet {
        assert!(component >= 1 && component < 256 && order < 256);
        Jet {
            family,
            component: component as u8,
            order: order as u8,
        }
    }

    pub fn u(component: usize, order: usize) -> Jet {
        Jet::new(Family::U, component, order)
    }

    pub fn raised(self) -> Jet {
        Jet {
            order: self.order.checked_add(1).expect("jet order overflow"),
            ..self
        }
    }
}

/// `Dx^{-1}` applied to a canonical local expression.
///
/// Atoms are only built through [`crate::diffpoly::dxi`], which strips the
/// integrable part of the argument and splits the rest into single reduced
/// monomials, so the argument of an atom is one monomial with coefficient 1
/// and equal atoms have equal arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(pub(crate) Arc<Expression>);

impl Atom {
    pub fn argument(&self) -> &Expression {
        &self.0
    }
}

/// Product of jet powers and atom powers, both kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub(crate) jets: Vec<(Jet, u32)>,
    pub(crate) atoms: Vec<(Atom, u32)>,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn from_jet(jet: Jet) -> Monomial {
        Monomial {
            jets: vec![(jet, 1)],
            atoms: Vec::new(),
        }
    }

    pub fn from_atom(atom: Atom) -> Monomial {
        Monomial {
            jets: Vec::new(),
            atoms: vec![(atom, 1)],
        }
    }

    pub fn jets(&self) -> &[(Jet, u32)] {
        &self.jets
    }

    pub fn atoms(&self) -> &[(Atom, u32)] {
        &self.atoms
    }

    pub fn is_one(&self) -> bool {
        self.jets.is_empty() && self.atoms.is_empty()
    }

    pub fn jet_degree(&self) -> u32 {
        self.jets.iter().map(|(_, e)| e).sum()
    }

    pub fn atom_degree(&self) -> u32 {
        self.atoms.iter().map(|(_, e)| e).sum()
    }

    pub fn degree(&self) -> u32 {
        self.jet_degree() + self.atom_degree()
    }

    /// Sum of derivative orders over all jet factors.
    pub fn weight(&self) -> u32 {
        self.jets.iter().map(|(j, e)| j.order as u32 * e).sum()
    }

    pub fn max_order(&self) -> Option<u8> {
        self.jets.iter().map(|(j, _)| j.order).max()
    }

    pub fn exponent(&self, jet: &Jet) -> u32 {
        self.jets
            .binary_search_by(|(j, _)| j.cmp(jet))
            .map(|i| self.jets[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            jets: merge_powers(&self.jets, &other.jets),
            atoms: merge_powers(&self.atoms, &other.atoms),
        }
    }

    /// Remove one power of `jet`; returns the exponent it had.
    pub(crate) fn without_jet(&self, jet: &Jet) -> Option<(u32, Monomial)> {
        let idx = self.jets.binary_search_by(|(j, _)| j.cmp(jet)).ok()?;
        let e = self.jets[idx].1;
        let mut out = self.clone();
        if e == 1 {
            out.jets.remove(idx);
        } else {
            out.jets[idx].1 -= 1;
        }
        Some((e, out))
    }

    pub(crate) fn without_atom_at(&self, idx: usize) -> (u32, Monomial) {
        let e = self.atoms[idx].1;
        let mut out = self.clone();
        if e == 1 {
            out.atoms.remove(idx);
        } else {
            out.atoms[idx].1 -= 1;
        }
        (e, out)
    }

    /// Split into (local part, atom part).
    pub fn split_local(&self) -> (Monomial, Monomial) {
        (
            Monomial {
                jets: self.jets.clone(),
                atoms: Vec::new(),
            },
            Monomial {
                jets: Vec::new(),
                atoms: self.atoms.clone(),
            },
        )
    }

    pub(crate) fn map_jets(&self, f: &impl Fn(Jet) -> Jet) -> Monomial {
        let mut jets: Vec<(Jet, u32)> = Vec::with_capacity(self.jets.len());
        for (j, e) in &self.jets {
            jets = merge_powers(&jets, &[(f(*j), *e)]);
        }
        Monomial {
            jets,
            atoms: self.atoms.clone(),
        }
    }
}

fn merge_powers<K: Ord + Clone>(a: &[(K, u32)], b: &[(K, u32)]) -> Vec<(K, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

// Graded lexicographic: total degree first, then jets, then atoms.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.jets.cmp(&other.jets))
            .then_with(|| self.atoms.cmp(&other.atoms))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A differential polynomial with exact rational coefficients, possibly
/// containing `Dx^{-1}` atoms of nesting depth one.
///
/// Terms live in a sorted map, so structural equality is canonical equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expression {
    pub(crate) terms: BTreeMap<Monomial, Rational>,
}

impl Expression {
    pub fn zero() -> Expression {
        Expression::default()
    }

    pub fn one() -> Expression {
        Expression::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Expression {
        Expression::term(c, Monomial::one())
    }

    pub fn int(c: i64) -> Expression {
        Expression::constant(rat(c, 1))
    }

    pub fn term(c: Rational, m: Monomial) -> Expression {
        let mut e = Expression::zero();
        e.add_term(m, c);
        e
    }

    pub fn jet(jet: Jet) -> Expression {
        Expression::term(Rational::one(), Monomial::from_jet(jet))
    }

    /// `u^{(component)}` differentiated `order` times.
    pub fn u(component: usize, order: usize) -> Expression {
        Expression::jet(Jet::u(component, order))
    }

    pub fn field(family: Family, component: usize, order: usize) -> Expression {
        Expression::jet(Jet::new(family, component, order))
    }

    pub(crate) fn from_atom(atom: Atom) -> Expression {
        Expression::term(Rational::one(), Monomial::from_atom(atom))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Expression {
        if c.is_zero() {
            return Expression::zero();
        }
        Expression {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn scale_int(&self, c: i64) -> Expression {
        self.scale(&rat(c, 1))
    }

    /// Constant term (coefficient of the empty monomial).
    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_local(&self) -> bool {
        self.terms.keys().all(|m| m.atoms.is_empty())
    }

    pub fn max_atom_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.atom_degree()).max().unwrap_or(0)
    }

    pub fn max_order(&self) -> Option<u8> {
        self.terms.keys().filter_map(|m| m.max_order()).max()
    }

    /// Leading (largest) monomial and its coefficient.
    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    /// Every jet occurring, including inside atom arguments.
    pub fn jets(&self) -> std::collections::BTreeSet<Jet> {
        let mut out = std::collections::BTreeSet::new();
        for m in self.terms.keys() {
            for (j, _) in &m.jets {
                out.insert(*j);
            }
            for (a, _) in &m.atoms {
                out.extend(a.argument().jets());
            }
        }
        out
    }

    pub fn families(&self) -> std::collections::BTreeSet<Family> {
        self.jets().into_iter().map(|j| j.family).collect()
    }

    /// Every distinct atom occurring.
    pub fn atoms(&self) -> std::collections::BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.atoms.iter().map(|(a, _)| a.clone()))
            .collect()
    }

    /// Rename jets; atom arguments are renamed too and rebuilt canonically.
    pub fn map_jets(&self, f: &impl Fn(Jet) -> Jet) -> Expression {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            let mut base = Expression::term(
                c.clone(),
                Monomial {
                    jets: Vec::new(),
                    atoms: Vec::new(),
                }
                .mul(&m.map_jets(f).split_local().0),
            );
            for (a, e) in &m.atoms {
                let arg = a.argument().map_jets(f);
                let img = crate::diffpoly::calculus::dxi(&arg)
                    .expect("renaming preserves locality of atom arguments");
                for _ in 0..*e {
                    base = &base * &img;
                }
            }
            out += &base;
        }
        out
    }

    /// Swap formal families, e.g. for cyclic permutations of directions.
    pub fn rename_families(&self, map: &[(Family, Family)]) -> Expression {
        self.map_jets(&|j: Jet| {
            let family = map
                .iter()
                .find(|(from, _)| *from == j.family)
                .map(|(_, to)| *to)
                .unwrap_or(j.family);
            Jet { family, ..j }
        })
    }

    pub fn pow(&self, k: u32) -> Expression {
        let mut out = Expression::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::diffpoly::text::print(self))
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.family.symbol(), self.component)?;
        if self.order > 0 {
            write!(f, "'{}", self.order)?;
        }
        Ok(())
    }
}

impl<'a> Add<&'a Expression> for &'a Expression {
    type Output = Expression;
    fn add(self, rhs: &'a Expression) -> Expression {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Expression {
    type Output = Expression;
    fn add(mut self, rhs: Expression) -> Expression {
        self += &rhs;
        self
    }
}

impl AddAssign<&Expression> for Expression {
    fn add_assign(&mut self, rhs: &Expression) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl AddAssign for Expression {
    fn add_assign(&mut self, rhs: Expression) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl SubAssign<&Expression> for Expression {
    fn sub_assign(&mut self, rhs: &Expression) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl<'a> Sub<&'a Expression> for &'a Expression {
    type Output = Expression;
    fn sub(self, rhs: &'a Expression) -> Expression {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Expression {
    type Output = Expression;
    fn sub(mut self, rhs: Expression) -> Expression {
        self -= &rhs;
        self
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -&self
    }
}

impl<'a> Mul<&'a Expression> for &'a Expression {
    type Output = Expression;
    fn mul(self, rhs: &'a Expression) -> Expression {
        let mut out = Expression::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        &self * &rhs
    }
}

/// A column vector of `n - 1` expressions.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VectorExpression(pub Vec<Expression>);

impl VectorExpression {
    pub fn zeros(len: usize) -> VectorExpression {
        VectorExpression(vec![Expression::zero(); len])
    }

    /// The field vector `(f^{(1)}_k, ..., f^{(m)}_k)` of family `f` at order `k`.
    pub fn field(family: Family, len: usize, order: usize) -> VectorExpression {
        VectorExpression(
            (1..=len)
                .map(|c| Expression::field(family, c, order))
                .collect(),
        )
    }

    /// Curvature vector derivative `u_k` with `len = n - 1` components.
    pub fn u(len: usize, order: usize) -> VectorExpression {
        VectorExpression::field(Family::U, len, order)
    }

    pub fn unit(len: usize, k: usize, value: Expression) -> VectorExpression {
        let mut v = VectorExpression::zeros(len);
        v.0[k] = value;
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Expression::is_zero)
    }

    pub fn is_local(&self) -> bool {
        self.0.iter().all(Expression::is_local)
    }

    pub fn dot(&self, other: &VectorExpression) -> Expression {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        let mut out = Expression::zero();
        for (a, b) in self.0.iter().zip(&other.0) {
            out += &(a * b);
        }
        out
    }

    pub fn scale(&self, s: &Expression) -> VectorExpression {
        VectorExpression(self.0.iter().map(|c| s * c).collect())
    }

    pub fn add(&self, other: &VectorExpression) -> VectorExpression {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        VectorExpression(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &VectorExpression) -> VectorExpression {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        VectorExpression(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> VectorExpression {
        VectorExpression(self.0.iter().map(|a| -a).collect())
    }

    pub fn map(&self, f: impl Fn(&Expression) -> Expression) -> VectorExpression {
        VectorExpression(self.0.iter().map(f).collect())
    }

    pub fn try_map(
        &self,
        f: impl Fn(&Expression) -> crate::Result<Expression>,
    ) -> crate::Result<VectorExpression> {
        Ok(VectorExpression(
            self.0.iter().map(f).collect::<crate::Result<_>>()?,
        ))
    }
}

impl std::ops::Index<usize> for VectorExpression {
    type Output = Expression;
    fn index(&self, i: usize) -> &Expression {
        &self.0[i]
    }
}

impl fmt::Display for VectorExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "[{}] {}", k + 1, c)?;
        }
        Ok(())
    }
}
