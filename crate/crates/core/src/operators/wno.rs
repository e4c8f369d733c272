use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, One, Zero};

use crate::diffpoly::calculus::{dx, dx_pow, dxi_ext, formal_integrate, linearize};
use crate::diffpoly::{
    rat, Evaluator, Expression, Family, FieldData, GridFunction, Monomial, Rational,
    VectorExpression,
};
use crate::error::{Error, Result};

/// `sign · left · Dx⁻¹ · ⟨right, ·⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tail {
    pub left: VectorExpression,
    pub right: VectorExpression,
    pub sign: i8,
}

/// How the numeric backend treats `Dx⁻¹` of data with nonzero mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanPolicy {
    /// Fail with `NonzeroMean`.
    Strict,
    /// Drop the mean before integrating.
    Project,
}

/// Matrix differential operator plus finitely many `a Dx⁻¹ bᵀ` tails.
///
/// `local[k][l][j]` is the coefficient of `Dx^j` in entry `(k, l)`. All
/// coefficients are local expressions in `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeaklyNonlocalOperator {
    n: usize,
    local: Vec<Vec<Vec<Expression>>>,
    tails: Vec<Tail>,
}

fn binom(n: usize, k: usize) -> Rational {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rational::from_integer(r)
}

/// Scalar differential operator `Σ c_j Dx^j`, as a coefficient list.
type Local = Vec<Expression>;

fn local_add(a: &mut Local, j: usize, c: &Expression) {
    if c.is_zero() {
        return;
    }
    if a.len() <= j {
        a.resize(j + 1, Expression::zero());
    }
    a[j] += c;
}

fn trim(a: &mut Local) {
    while a.last().is_some_and(Expression::is_zero) {
        a.pop();
    }
}

/// `(Σ a_i Dx^i) ∘ (Σ b_j Dx^j)` by Leibniz.
fn local_compose(a: &Local, b: &Local) -> Local {
    let mut out = Local::new();
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            let mut d = bj.clone();
            for m in 0..=i {
                if m > 0 {
                    d = dx(&d);
                }
                if d.is_zero() {
                    break;
                }
                local_add(&mut out, i - m + j, &(ai * &d).scale(&binom(i, m)));
            }
        }
    }
    trim(&mut out);
    out
}

/// `Σ a_i Dx^i` applied to a function `f`.
fn local_apply(a: &Local, f: &Expression) -> Expression {
    let mut out = Expression::zero();
    let mut d = f.clone();
    for (i, ai) in a.iter().enumerate() {
        if i > 0 {
            d = dx(&d);
        }
        if !ai.is_zero() {
            out += &(ai * &d);
        }
    }
    out
}

/// Formal adjoint `Σ (−Dx)^j ∘ a_j` applied to `f`.
fn local_adjoint_apply(a: &Local, f: &Expression) -> Expression {
    let mut out = Expression::zero();
    for (j, aj) in a.iter().enumerate() {
        if aj.is_zero() {
            continue;
        }
        let t = dx_pow(&(aj * f), j);
        if j % 2 == 1 {
            out -= &t;
        } else {
            out += &t;
        }
    }
    out
}

impl WeaklyNonlocalOperator {
    /// Zero operator acting on `(n−1)`-vectors.
    pub fn zero(n: usize) -> WeaklyNonlocalOperator {
        assert!(n >= 2, "ambient dimension must be at least 2");
        let m = n - 1;
        WeaklyNonlocalOperator {
            n,
            local: vec![vec![Local::new(); m]; m],
            tails: Vec::new(),
        }
    }

    /// `c · Dx^j · Id`.
    pub fn diagonal(n: usize, j: usize, c: &Expression) -> WeaklyNonlocalOperator {
        let mut op = WeaklyNonlocalOperator::zero(n);
        for k in 0..n - 1 {
            op.add_local(k, k, j, c);
        }
        op
    }

    /// Constant matrix (no derivatives).
    pub fn matrix(n: usize, m: &[Vec<Rational>]) -> WeaklyNonlocalOperator {
        let mut op = WeaklyNonlocalOperator::zero(n);
        for (k, row) in m.iter().enumerate() {
            for (l, c) in row.iter().enumerate() {
                op.add_local(k, l, 0, &Expression::constant(c.clone()));
            }
        }
        op
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.n - 1
    }

    pub fn tails(&self) -> &[Tail] {
        &self.tails
    }

    pub fn local_entry(&self, k: usize, l: usize) -> &[Expression] {
        &self.local[k][l]
    }

    /// Highest derivative order in the local part.
    pub fn order(&self) -> usize {
        self.local
            .iter()
            .flatten()
            .map(|e| e.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    pub fn add_local(&mut self, k: usize, l: usize, j: usize, c: &Expression) {
        assert!(c.is_local(), "operator coefficients must be local");
        local_add(&mut self.local[k][l], j, c);
        trim(&mut self.local[k][l]);
    }

    pub fn add_tail(&mut self, left: VectorExpression, right: VectorExpression, sign: i8) {
        assert_eq!(left.len(), self.dims(), "tail length");
        assert_eq!(right.len(), self.dims(), "tail length");
        assert!(sign == 1 || sign == -1);
        assert!(left.is_local() && right.is_local(), "tail vectors must be local");
        if left.is_zero() || right.is_zero() {
            return;
        }
        self.tails.push(Tail { left, right, sign });
    }

    pub fn add(&self, other: &WeaklyNonlocalOperator) -> WeaklyNonlocalOperator {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for k in 0..self.dims() {
            for l in 0..self.dims() {
                for (j, c) in other.local[k][l].iter().enumerate() {
                    local_add(&mut out.local[k][l], j, c);
                }
                trim(&mut out.local[k][l]);
            }
        }
        out.tails.extend(other.tails.iter().cloned());
        out
    }

    pub fn scale(&self, c: &Rational) -> WeaklyNonlocalOperator {
        let mut out = self.clone();
        for e in out.local.iter_mut().flatten().flatten() {
            *e = e.scale(c);
        }
        for t in &mut out.tails {
            t.left = t.left.map(|e| e.scale(c));
        }
        if c.is_zero() {
            return WeaklyNonlocalOperator::zero(self.n);
        }
        out
    }

    pub fn neg(&self) -> WeaklyNonlocalOperator {
        self.scale(&rat(-1, 1))
    }

    /// Apply to a vector. Tail arguments are integrated exactly where
    /// possible and kept as atoms otherwise.
    pub fn apply(&self, v: &VectorExpression) -> Result<VectorExpression> {
        if v.len() != self.dims() {
            return Err(Error::Dimension(format!(
                "operator acts on {}-vectors, got {}",
                self.dims(),
                v.len()
            )));
        }
        let mut out = VectorExpression::zeros(self.dims());
        for k in 0..self.dims() {
            for l in 0..self.dims() {
                out.0[k] += local_apply(&self.local[k][l], &v.0[l]);
            }
        }
        for t in &self.tails {
            let arg = t.right.dot(v);
            if arg.is_zero() {
                continue;
            }
            let s = dxi_ext(&arg)?;
            let s = if t.sign < 0 { -s } else { s };
            out = out.add(&t.left.scale(&s));
        }
        Ok(out)
    }

    /// Exact composition `self ∘ other`.
    ///
    /// Fails with `NestingDepth` when a tail-tail product `a Dx⁻¹ s Dx⁻¹ dᵀ`
    /// has a scalar `s` that is neither zero nor a total derivative.
    pub fn compose(&self, other: &WeaklyNonlocalOperator) -> Result<WeaklyNonlocalOperator> {
        assert_eq!(self.n, other.n, "composition of operators of different size");
        let m = self.dims();
        let mut out = WeaklyNonlocalOperator::zero(self.n);

        // local ∘ local
        for k in 0..m {
            for l in 0..m {
                let mut acc = Local::new();
                for p in 0..m {
                    let c = local_compose(&self.local[k][p], &other.local[p][l]);
                    for (j, e) in c.iter().enumerate() {
                        local_add(&mut acc, j, e);
                    }
                }
                trim(&mut acc);
                out.local[k][l] = acc;
            }
        }

        // local ∘ (b Dx⁻¹ cᵀ): Σ_i a_i Dx^i b = Σ_{q<i} C(i,q) a_i b^{(q)} Dx^{i−1−q} + a_i b^{(i)} Dx⁻¹
        for t in &other.tails {
            let mut new_left = VectorExpression::zeros(m);
            for k in 0..m {
                for p in 0..m {
                    let a = &self.local[k][p];
                    if a.is_empty() || t.left.0[p].is_zero() {
                        continue;
                    }
                    new_left.0[k] += local_apply(a, &t.left.0[p]);
                    // local remainder: (Σ_{q<i} C(i,q) a_i b_p^{(q)} Dx^{i−1−q}) ∘ c_l
                    let mut pre = Local::new();
                    let mut bq = t.left.0[p].clone();
                    let mut derivs = vec![bq.clone()];
                    for _ in 1..a.len() {
                        bq = dx(&bq);
                        derivs.push(bq.clone());
                    }
                    for (i, ai) in a.iter().enumerate() {
                        for q in 0..i {
                            local_add(&mut pre, i - 1 - q, &(ai * &derivs[q]).scale(&binom(i, q)));
                        }
                    }
                    trim(&mut pre);
                    if pre.is_empty() {
                        continue;
                    }
                    for l in 0..m {
                        if t.right.0[l].is_zero() {
                            continue;
                        }
                        let mult = vec![t.right.0[l].clone()];
                        let c = local_compose(&pre, &mult);
                        for (j, e) in c.iter().enumerate() {
                            let e = if t.sign < 0 { -e } else { e.clone() };
                            local_add(&mut out.local[k][l], j, &e);
                        }
                        trim(&mut out.local[k][l]);
                    }
                }
            }
            out.add_tail(new_left, t.right.clone(), t.sign);
        }

        // (b Dx⁻¹ cᵀ) ∘ local:
        //   Dx⁻¹ f Dx^j = Σ_{q<j} (−1)^q f^{(q)} Dx^{j−1−q} + (−1)^j Dx⁻¹ f^{(j)}
        for t in &self.tails {
            let mut new_right = VectorExpression::zeros(m);
            for l in 0..m {
                for p in 0..m {
                    let b = &other.local[p][l];
                    if b.is_empty() || t.right.0[p].is_zero() {
                        continue;
                    }
                    new_right.0[l] += local_adjoint_apply(b, &t.right.0[p]);
                    let mut pre = Local::new();
                    for (j, bj) in b.iter().enumerate() {
                        if bj.is_zero() {
                            continue;
                        }
                        let mut f = &t.right.0[p] * bj;
                        for q in 0..j {
                            if q > 0 {
                                f = dx(&f);
                            }
                            let c = if q % 2 == 1 { -&f } else { f.clone() };
                            local_add(&mut pre, j - 1 - q, &c);
                        }
                    }
                    trim(&mut pre);
                    for k in 0..m {
                        if t.left.0[k].is_zero() {
                            continue;
                        }
                        for (j, e) in pre.iter().enumerate() {
                            let e = &t.left.0[k] * e;
                            let e = if t.sign < 0 { -e } else { e };
                            local_add(&mut out.local[k][l], j, &e);
                        }
                        trim(&mut out.local[k][l]);
                    }
                }
            }
            out.add_tail(t.left.clone(), new_right, t.sign);
        }

        // (a Dx⁻¹ bᵀ) ∘ (c Dx⁻¹ dᵀ) = a Dx⁻¹ s Dx⁻¹ dᵀ, s = ⟨b, c⟩;
        // with s = S': a S Dx⁻¹ dᵀ − a Dx⁻¹ (S d)ᵀ
        for t1 in &self.tails {
            for t2 in &other.tails {
                let s = t1.right.dot(&t2.left);
                if s.is_zero() {
                    continue;
                }
                let big_s = formal_integrate(&s).ok_or_else(|| {
                    Error::NestingDepth(format!("Dxi({s}) * Dxi in a tail-tail product"))
                })?;
                let sign = t1.sign * t2.sign;
                out.add_tail(t1.left.scale(&big_s), t2.right.clone(), sign);
                out.add_tail(t1.left.clone(), t2.right.scale(&big_s), -sign);
            }
        }
        Ok(out)
    }

    /// Canonical form of the nonlocal part: `Σ sign·left ⊗ right` expanded
    /// into monomial pairs per matrix entry.
    pub fn tail_tensor(&self) -> BTreeMap<(usize, usize, Monomial, Monomial), Rational> {
        let mut out: BTreeMap<(usize, usize, Monomial, Monomial), Rational> = BTreeMap::new();
        for t in &self.tails {
            let s = rat(t.sign as i64, 1);
            for (k, a) in t.left.0.iter().enumerate() {
                for (l, b) in t.right.0.iter().enumerate() {
                    for (ma, ca) in a.terms() {
                        for (mb, cb) in b.terms() {
                            let slot = out
                                .entry((k, l, ma.clone(), mb.clone()))
                                .or_insert_with(Rational::zero);
                            *slot += ca * cb * &s;
                        }
                    }
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// Operator equality: identical local parts and identical tail tensors.
    pub fn same_as(&self, other: &WeaklyNonlocalOperator) -> bool {
        self.n == other.n && self.local == other.local && self.tail_tensor() == other.tail_tensor()
    }

    /// Coefficientwise linearization in `u` along the formal field `dir`,
    /// i.e. the operator `Q ↦ d/dε A(u + ε·dir) Q`.
    pub fn linearized(&self, dir: Family) -> Result<WeaklyNonlocalOperator> {
        let mut out = WeaklyNonlocalOperator::zero(self.n);
        for k in 0..self.dims() {
            for l in 0..self.dims() {
                for (j, c) in self.local[k][l].iter().enumerate() {
                    out.add_local(k, l, j, &linearize(c, Family::U, dir)?);
                }
            }
        }
        for t in &self.tails {
            let dl = t.left.try_map(|e| linearize(e, Family::U, dir))?;
            let dr = t.right.try_map(|e| linearize(e, Family::U, dir))?;
            out.add_tail(dl, t.right.clone(), t.sign);
            out.add_tail(t.left.clone(), dr, t.sign);
        }
        Ok(out)
    }

    /// Numeric application on grid data: coefficients are evaluated from the
    /// `u` field of `data`, derivatives are spectral, `Dx⁻¹` is the zero-mean
    /// spectral antiderivative.
    pub fn apply_grid(
        &self,
        data: &FieldData,
        p: &GridFunction,
        policy: MeanPolicy,
    ) -> Result<GridFunction> {
        let m = self.dims();
        if p.dims() != m {
            return Err(Error::Dimension(format!(
                "operator acts on {}-vectors, got {}",
                m,
                p.dims()
            )));
        }
        let grid = data.grid();
        let npts = grid.n();
        let mut ev = Evaluator::new(data);
        let order = self.order();
        let derivs: Vec<Vec<Vec<f64>>> = (0..m)
            .map(|l| (0..=order).map(|j| grid.derivative(p.component(l), j)).collect())
            .collect();
        let mut out = vec![vec![0.0; npts]; m];
        for k in 0..m {
            for l in 0..m {
                for (j, c) in self.local[k][l].iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let cv = ev.eval(c)?;
                    for i in 0..npts {
                        out[k][i] += cv[i] * derivs[l][j][i];
                    }
                }
            }
        }
        for t in &self.tails {
            let mut arg = vec![0.0; npts];
            for l in 0..m {
                if t.right.0[l].is_zero() {
                    continue;
                }
                let r = ev.eval(&t.right.0[l])?;
                for i in 0..npts {
                    arg[i] += r[i] * p.component(l)[i];
                }
            }
            let integral = match policy {
                MeanPolicy::Strict => {
                    let scale = crate::diffpoly::grid::sup_norm(&arg);
                    let mean = grid.mean(&arg);
                    let tol = crate::diffpoly::grid::DEFAULT_MEAN_TOLERANCE * scale;
                    if mean.abs() > tol && mean != 0.0 {
                        return Err(Error::NonzeroMean {
                            atom: format!("Dxi(<{}, P>)", t.right),
                            mean,
                            tolerance: tol,
                        });
                    }
                    grid.antiderivative_unchecked(&arg)
                }
                MeanPolicy::Project => grid.antiderivative_unchecked(&arg),
            };
            let s = t.sign as f64;
            for k in 0..m {
                if t.left.0[k].is_zero() {
                    continue;
                }
                let lv = ev.eval(&t.left.0[k])?;
                for i in 0..npts {
                    out[k][i] += s * lv[i] * integral[i];
                }
            }
        }
        GridFunction::new(grid.clone(), out)
    }
}

impl fmt::Display for WeaklyNonlocalOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.dims() {
            for l in 0..self.dims() {
                let parts: Vec<String> = self.local[k][l]
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(j, c)| match j {
                        0 => format!("({c})"),
                        _ => format!("({c})*Dx^{j}"),
                    })
                    .collect();
                if !parts.is_empty() {
                    writeln!(f, "[{},{}] {}", k + 1, l + 1, parts.join(" + "))?;
                }
            }
        }
        for t in &self.tails {
            let l: Vec<String> = t.left.0.iter().map(|e| e.to_string()).collect();
            let r: Vec<String> = t.right.0.iter().map(|e| e.to_string()).collect();
            writeln!(
                f,
                "{} ({}) Dxi ({})^T",
                if t.sign < 0 { "-" } else { "+" },
                l.join(", "),
                r.join(", ")
            )?;
        }
        Ok(())
    }
}
