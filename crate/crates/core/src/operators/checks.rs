//! Symbolic and numeric verification of the operator properties.
//!
//! Numeric checks draw each field from a fixed residue class of Fourier
//! modes, so every `Dx⁻¹` argument that appears has exactly zero mean and
//! the nonlocal terms are unambiguous on the periodic grid.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{cosymplectic_h, recursion_r, recursion_r_with, symplectic_i, MeanPolicy, WeaklyNonlocalOperator};
use crate::diffpoly::calculus::linearize;
use crate::diffpoly::{
    equivalent_mod_divergence, euler_operator, rat, Evaluator, Expression, Family, FieldData,
    GridFunction, Rational, SpectralGrid, VectorExpression,
};
use crate::error::Result;
use crate::report::Verdict;
use crate::rng::{eval_fourier, fourier_coefficients, seeded, SeededRng};

/// Random smooth field whose Fourier support is `modes`.
pub fn random_field(rng: &mut SeededRng, grid: &SpectralGrid, dims: usize, modes: &[u32], amp: f64) -> GridFunction {
    let scale = 2.0 * PI / grid.length();
    let comps: Vec<Vec<f64>> = (0..dims)
        .map(|_| {
            let c = fourier_coefficients(rng, modes, amp);
            grid.xs().iter().map(|&x| eval_fourier(&c, scale * x)).collect()
        })
        .collect();
    GridFunction::new(grid.clone(), comps).expect("finite samples")
}

// ---------------------------------------------------------------------------
// symplectic
// ---------------------------------------------------------------------------

fn cycle(e: &Expression) -> Expression {
    e.rename_families(&[(Family::P, Family::Q), (Family::Q, Family::H), (Family::H, Family::P)])
}

/// `⟨𝕀'[h₁]h₂, h₃⟩ + cyclic`, with `h₁, h₂, h₃` the formal fields `P, Q, h`.
pub fn symplectic_cyclic_sum(n: usize) -> Result<Expression> {
    let op = symplectic_i(n);
    let q = VectorExpression::field(Family::Q, n - 1, 0);
    let h = VectorExpression::field(Family::H, n - 1, 0);
    let iq = op.apply(&q)?;
    let lin = iq.try_map(|e| linearize(e, Family::U, Family::P))?;
    let t = lin.dot(&h);
    let t2 = cycle(&t);
    let t3 = cycle(&t2);
    Ok(&(&t + &t2) + &t3)
}

/// Symbolic closedness test of the 2-form defined by `𝕀`.
pub fn check_symplectic(n: usize) -> Result<Verdict> {
    let sum = symplectic_cyclic_sum(n)?;
    let ok = equivalent_mod_divergence(&sum, &Expression::zero())?;
    Ok(Verdict::new("symplectic", n, None, 0.0, ok).detail("terms", sum.len()))
}

/// Grid integral of the cyclic sum for seeded data; returns
/// `(|∫ Σ_cyc|, ∫ |Σ_cyc|)`.
pub fn symplectic_grid_integral(n: usize, npts: usize, seed: u64) -> Result<(f64, f64)> {
    let grid = SpectralGrid::new(npts, 2.0 * PI)?;
    let mut rng = seeded(seed);
    let m = n - 1;
    let data = FieldData::new(grid.clone())
        .with(Family::U, random_field(&mut rng, &grid, m, &[7, 14], 1.0))
        .with(Family::P, random_field(&mut rng, &grid, m, &[1, 6, 8], 1.0))
        .with(Family::Q, random_field(&mut rng, &grid, m, &[2, 5, 9], 1.0))
        .with(Family::H, random_field(&mut rng, &grid, m, &[3, 4, 10], 1.0));
    let sum = symplectic_cyclic_sum(n)?;
    let v = Evaluator::new(&data).eval(&sum)?;
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    Ok((grid.integral(&v).abs(), grid.integral(&abs)))
}

// ---------------------------------------------------------------------------
// skew-adjointness
// ---------------------------------------------------------------------------

/// `|∫⟨P, AQ⟩ + ⟨Q, AP⟩| / ∫(|⟨P,AQ⟩| + |⟨Q,AP⟩|)` for seeded data.
pub fn skew_adjoint_defect(op: &WeaklyNonlocalOperator, npts: usize, seed: u64) -> Result<f64> {
    let grid = SpectralGrid::new(npts, 2.0 * PI)?;
    let mut rng = seeded(seed);
    let m = op.dims();
    // P and Q share a residue class so that ⟨P, AQ⟩ has a genuine mean
    let u = random_field(&mut rng, &grid, m, &[5, 10], 1.0);
    let p = random_field(&mut rng, &grid, m, &[1, 4, 6], 1.0);
    let q = random_field(&mut rng, &grid, m, &[1, 6, 9, 11], 1.0);
    let data = FieldData::new(grid.clone()).with(Family::U, u);
    let aq = op.apply_grid(&data, &q, MeanPolicy::Strict)?;
    let ap = op.apply_grid(&data, &p, MeanPolicy::Strict)?;
    let a = pairing(&p, &aq);
    let b = pairing(&q, &ap);
    let s: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let scale: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.abs() + y.abs()).collect();
    Ok(grid.integral(&s).abs() / grid.integral(&scale).max(f64::MIN_POSITIVE))
}

/// Pointwise `⟨a, b⟩`.
pub fn pairing(a: &GridFunction, b: &GridFunction) -> Vec<f64> {
    let npts = a.grid().n();
    (0..npts)
        .map(|i| (0..a.dims()).map(|c| a.component(c)[i] * b.component(c)[i]).sum())
        .collect()
}

// ---------------------------------------------------------------------------
// hereditary
// ---------------------------------------------------------------------------

fn axpy(a: f64, x: &GridFunction, y: &GridFunction) -> GridFunction {
    let comps = x
        .components()
        .iter()
        .zip(y.components())
        .map(|(xc, yc)| xc.iter().zip(yc).map(|(p, q)| a * p + q).collect())
        .collect();
    GridFunction::new(x.grid().clone(), comps).expect("finite")
}

fn apply_at(op: &WeaklyNonlocalOperator, u: &GridFunction, p: &GridFunction, policy: MeanPolicy) -> Result<GridFunction> {
    let data = FieldData::new(u.grid().clone()).with(Family::U, u.clone());
    op.apply_grid(&data, p, policy)
}

/// `d/dε A(u + εP) Q` by central differences.
fn op_derivative(
    op: &WeaklyNonlocalOperator,
    u: &GridFunction,
    p: &GridFunction,
    q: &GridFunction,
    eps: f64,
    policy: MeanPolicy,
) -> Result<GridFunction> {
    let plus = apply_at(op, &axpy(eps, p, u), q, policy)?;
    let minus = apply_at(op, &axpy(-eps, p, u), q, policy)?;
    Ok(axpy(-1.0, &minus, &plus).scaled(0.5 / eps))
}

/// Outcome of the hereditary test on one data set.
#[derive(Clone, Copy, Debug)]
pub struct HereditaryDefect {
    pub defect: f64,
    pub scale: f64,
}

impl HereditaryDefect {
    pub fn relative(&self) -> f64 {
        self.defect / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// `‖N(P,Q) − N(Q,P)‖∞` with `N(P,Q) = A·A'[P]Q − A'[AP]Q`, `A'` by central
/// differences with step `eps·‖u‖∞`.
pub fn hereditary_defect(
    op: &WeaklyNonlocalOperator,
    npts: usize,
    eps: f64,
    seed: u64,
) -> Result<HereditaryDefect> {
    let grid = SpectralGrid::new(npts, 2.0 * PI)?;
    let mut rng = seeded(seed);
    let m = op.dims();
    let u = random_field(&mut rng, &grid, m, &[5, 10], 1.0);
    let p = random_field(&mut rng, &grid, m, &[1, 4, 6], 1.0);
    let q = random_field(&mut rng, &grid, m, &[2, 3, 7], 1.0);
    hereditary_defect_on(op, &u, &p, &q, eps)
}

pub fn hereditary_defect_on(
    op: &WeaklyNonlocalOperator,
    u: &GridFunction,
    p: &GridFunction,
    q: &GridFunction,
    eps: f64,
) -> Result<HereditaryDefect> {
    let h = eps * u.sup_norm().max(1.0);
    let strict = MeanPolicy::Strict;
    let n_of = |a: &GridFunction, b: &GridFunction| -> Result<GridFunction> {
        let d = op_derivative(op, u, a, b, h, strict)?;
        let first = apply_at(op, u, &d, strict)?;
        let ra = apply_at(op, u, a, strict)?;
        let second = op_derivative(op, u, &ra, b, h, strict)?;
        Ok(axpy(-1.0, &second, &first))
    };
    let npq = n_of(p, q)?;
    let nqp = n_of(q, p)?;
    Ok(HereditaryDefect {
        defect: npq.max_abs_diff(&nqp),
        scale: npq.sup_norm().max(nqp.sup_norm()),
    })
}

/// Hereditary test of `ℜ`, or of the control operator without its
/// `⟨u,u⟩` term.
pub fn check_hereditary(n: usize, npts: usize, eps: f64, seed: u64, control: bool) -> Result<Verdict> {
    let op = recursion_r_with(n, !control);
    let d = hereditary_defect(&op, npts, eps, seed)?;
    let rel = d.relative();
    let pass = if control { rel > 1e-2 } else { rel < 1e-6 };
    Ok(Verdict::new(
        if control { "hereditary-control" } else { "hereditary" },
        n,
        Some(npts),
        rel,
        pass,
    )
    .detail("seed", seed)
    .detail("eps", eps))
}

// ---------------------------------------------------------------------------
// Jacobi identity
// ---------------------------------------------------------------------------

/// How a Poisson operator acts on grid covectors at a given `u`.
pub enum PoissonAction<'a> {
    Operator(&'a WeaklyNonlocalOperator),
    /// `A ∘ A` applied sequentially (used as a non-Hamiltonian control).
    Squared(&'a WeaklyNonlocalOperator),
}

impl PoissonAction<'_> {
    fn apply(&self, u: &GridFunction, p: &GridFunction) -> Result<GridFunction> {
        let proj = MeanPolicy::Project;
        match self {
            PoissonAction::Operator(op) => apply_at(op, u, p, proj),
            PoissonAction::Squared(op) => {
                let once = apply_at(op, u, p, proj)?;
                apply_at(op, u, &once, proj)
            }
        }
    }
}

/// A functional given either by a local density or by numeric values.
struct Density {
    euler: VectorExpression,
}

impl Density {
    fn new(e: &Expression, n: usize) -> Result<Density> {
        Ok(Density {
            euler: euler_operator(e, n)?,
        })
    }

    fn gradient(&self, u: &GridFunction) -> Result<GridFunction> {
        let data = FieldData::new(u.grid().clone()).with(Family::U, u.clone());
        Evaluator::new(&data).eval_vec(&self.euler)
    }
}

fn bracket_grad(a: &GridFunction, b: &GridFunction, u: &GridFunction, op: &PoissonAction) -> Result<(f64, f64)> {
    let hb = op.apply(u, b)?;
    let v = pairing(a, &hb);
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    Ok((u.grid().integral(&v), u.grid().integral(&abs)))
}

/// Gradient of a scalar functional of `u` by fourth-order central differences
/// along the real Fourier basis up to wavenumber `kmax`.
fn numeric_gradient(
    u: &GridFunction,
    kmax: usize,
    eps: f64,
    f: &(dyn Fn(&GridFunction) -> Result<f64> + Sync),
) -> Result<GridFunction> {
    let grid = u.grid().clone();
    let len = grid.length();
    let xs = grid.xs();
    let mut basis: Vec<(Vec<f64>, f64)> = vec![(vec![1.0; grid.n()], len)];
    for k in 1..=kmax {
        let w = 2.0 * PI * k as f64 / len;
        basis.push((xs.iter().map(|x| (w * x).cos()).collect(), len / 2.0));
        basis.push((xs.iter().map(|x| (w * x).sin()).collect(), len / 2.0));
    }
    let dims = u.dims();
    let jobs: Vec<(usize, usize)> = (0..dims).flat_map(|c| (0..basis.len()).map(move |b| (c, b))).collect();
    let derivs: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, b)| -> Result<f64> {
            let at = |s: f64| -> Result<f64> {
                let mut v = u.clone();
                for (x, phi) in v.component_mut(c).iter_mut().zip(&basis[b].0) {
                    *x += s * phi;
                }
                f(&v)
            };
            let (p1, m1, p2, m2) = (at(eps)?, at(-eps)?, at(2.0 * eps)?, at(-2.0 * eps)?);
            Ok((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * eps))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = GridFunction::zeros(grid, dims);
    for (&(c, b), d) in jobs.iter().zip(&derivs) {
        let (phi, norm) = &basis[b];
        for (o, p) in out.component_mut(c).iter_mut().zip(phi) {
            *o += d * p / norm;
        }
    }
    Ok(out)
}

/// Result of a Jacobi test: `|Σ_cyc {F,{G,H}}|` against `Σ_cyc ∫|integrand|`.
#[derive(Clone, Copy, Debug)]
pub struct JacobiResidual {
    pub residual: f64,
    pub scale: f64,
}

impl JacobiResidual {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Numeric Jacobi identity `{F,{G,H}} + {G,{H,F}} + {H,{F,G}}` for the
/// bracket `{F,G} = ∫⟨δF, A δG⟩`.
pub fn jacobi_residual(
    op: &PoissonAction,
    densities: [&Expression; 3],
    u: &GridFunction,
    kmax: usize,
    eps: f64,
) -> Result<JacobiResidual> {
    let n = u.dims() + 1;
    let d: Vec<Density> = densities.iter().map(|e| Density::new(e, n)).collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut scale = 0.0;
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let inner = |v: &GridFunction| -> Result<f64> {
            let gj = d[j].gradient(v)?;
            let gk = d[k].gradient(v)?;
            Ok(bracket_grad(&gj, &gk, v, op)?.0)
        };
        let grad_inner = numeric_gradient(u, kmax, eps, &inner)?;
        let gi = d[i].gradient(u)?;
        let (val, abs) = bracket_grad(&gi, &grad_inner, u, op)?;
        total += val;
        scale += abs;
    }
    Ok(JacobiResidual {
        residual: total.abs(),
        scale,
    })
}

/// The densities `½⟨u,u⟩, ½⟨u₁,u₁⟩, ¼⟨u,u⟩²`.
pub fn standard_densities(n: usize) -> [Expression; 3] {
    let u = VectorExpression::u(n - 1, 0);
    let u1 = VectorExpression::u(n - 1, 1);
    let uu = u.dot(&u);
    [
        uu.scale(&rat(1, 2)),
        u1.dot(&u1).scale(&rat(1, 2)),
        (&uu * &uu).scale(&rat(1, 4)),
    ]
}

/// `½⟨u₁,u₁⟩, ¼⟨u,u⟩², ½⟨u₂,u₂⟩`: no member is a Casimir, so every
/// bracket in the cyclic sum is nonzero.
pub fn nondegenerate_densities(n: usize) -> [Expression; 3] {
    let u = VectorExpression::u(n - 1, 0);
    let u1 = VectorExpression::u(n - 1, 1);
    let u2 = VectorExpression::u(n - 1, 2);
    let uu = u.dot(&u);
    [
        u1.dot(&u1).scale(&rat(1, 2)),
        (&uu * &uu).scale(&rat(1, 4)),
        u2.dot(&u2).scale(&rat(1, 2)),
    ]
}

/// Smooth low-mode data for the Jacobi test.
pub fn jacobi_data(n: usize, npts: usize, seed: u64) -> Result<GridFunction> {
    let grid = SpectralGrid::new(npts, 2.0 * PI)?;
    let mut rng = seeded(seed);
    Ok(random_field(&mut rng, &grid, n - 1, &[1, 2, 3], 0.6))
}

pub const JACOBI_KMAX_DIVISOR: usize = 8;
pub const JACOBI_EPS: f64 = 1e-3;

/// Jacobi verdicts for `ℌ` and for the control `𝕀∘𝕀` on the same data.
pub fn check_jacobi(n: usize, npts: usize, seed: u64, densities: &[Expression; 3]) -> Result<(JacobiResidual, JacobiResidual)> {
    let u = jacobi_data(n, npts, seed)?;
    let kmax = npts / JACOBI_KMAX_DIVISOR;
    let refs = [&densities[0], &densities[1], &densities[2]];
    let h = cosymplectic_h(n);
    let i = symplectic_i(n);
    let good = jacobi_residual(&PoissonAction::Operator(&h), refs, &u, kmax, JACOBI_EPS)?;
    let bad = jacobi_residual(&PoissonAction::Squared(&i), refs, &u, kmax, JACOBI_EPS)?;
    Ok((good, bad))
}

/// Antisymmetry smoke test `{F,F} = 0`.
pub fn self_bracket(n: usize, npts: usize, seed: u64, density: &Expression) -> Result<f64> {
    let u = jacobi_data(n, npts, seed)?;
    let g = Density::new(density, n)?.gradient(&u)?;
    let h = cosymplectic_h(n);
    Ok(bracket_grad(&g, &g, &u, &PoissonAction::Operator(&h))?.0)
}

// ---------------------------------------------------------------------------
// NLS square
// ---------------------------------------------------------------------------

/// The rotation generator `J₁₂` on R².
pub fn j12() -> Vec<Vec<Rational>> {
    vec![vec![rat(0, 1), rat(-1, 1)], vec![rat(1, 1), rat(0, 1)]]
}

/// `−(J₁₂(Dx + u Dx⁻¹ uᵀ))²` composed exactly, for a two-component `u`.
pub fn nls_square() -> Result<WeaklyNonlocalOperator> {
    let n = 3;
    let ji = WeaklyNonlocalOperator::matrix(n, &j12()).compose(&symplectic_i(n))?;
    Ok(ji.compose(&ji)?.neg())
}

/// `ℜ = −(J₁₂ 𝕀)²` as exact operator identity.
pub fn nls_square_identity() -> Result<bool> {
    Ok(nls_square()?.same_as(&recursion_r(3)))
}
