//! Generalized Hasimoto transformation: the Euler-angle gauge between the
//! Frenet frame (tridiagonal Cartan matrix with curvatures `ū⁽ⁱ⁾`) and the
//! natural frame (Cartan matrix supported on the first row and column, with
//! curvatures `u⁽ⁱ⁾`).
//!
//! Indices follow the matrix rows: angles `θ_ij` carry `2 ≤ i < j ≤ n`, the
//! chain quantities `a_i` carry `1 ≤ i ≤ n−1`.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::diffpoly::{GridFunction, SpectralGrid};
use crate::error::{Error, Result};

/// Threshold on `|cos θ_ij|` below which the chart is abandoned.
pub const GIMBAL_THRESHOLD: f64 = 1e-8;

/// RK4 substeps per grid interval.
pub const SUBSTEPS: usize = 4;

const REFINE: usize = 2 * SUBSTEPS;

/// Frenet curvatures `ū⁽¹⁾ … ū⁽ⁿ⁻¹⁾`; component `c` holds `ū⁽ᶜ⁺¹⁾`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrenetCurvatures(pub GridFunction);

/// Natural-frame curvatures `u⁽¹⁾ … u⁽ⁿ⁻¹⁾`.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalCurvatures(pub GridFunction);

impl FrenetCurvatures {
    pub fn n(&self) -> usize {
        self.0.dims() + 1
    }
}

impl NaturalCurvatures {
    pub fn n(&self) -> usize {
        self.0.dims() + 1
    }
}

/// All pairs `(i, j)`, `2 ≤ i < j ≤ n`, in storage order.
pub fn angle_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 2..=n {
        for j in i + 1..=n {
            out.push((i, j));
        }
    }
    out
}

/// Number of angles constrained by the off-diagonal ODEs, `(n−2)(n−3)/2`.
pub fn constraint_count(n: usize) -> usize {
    angle_pairs(n).iter().filter(|(i, j)| *j >= i + 2).count()
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(2 <= i && i < j && j <= n);
    // pairs with first index < i come first
    let before: usize = (2..i).map(|k| n - k).sum();
    before + (j - i - 1)
}

/// The rotation angles `θ_ij` sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleField {
    n: usize,
    values: GridFunction,
    /// Step-halving estimate of the integration error (0 when the angles
    /// were obtained algebraically).
    pub integration_error: f64,
}

impl AngleField {
    pub fn new(n: usize, values: GridFunction) -> Result<AngleField> {
        if n < 3 || values.dims() != angle_pairs(n).len() {
            return Err(Error::Dimension(format!(
                "{} angle components for n = {n}",
                values.dims()
            )));
        }
        Ok(AngleField {
            n,
            values,
            integration_error: 0.0,
        })
    }

    pub fn zeros(n: usize, grid: SpectralGrid) -> AngleField {
        let dims = angle_pairs(n).len();
        AngleField {
            n,
            values: GridFunction::zeros(grid, dims.max(1)),
            integration_error: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.values.grid()
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        self.values.component(pair_index(self.n, i, j))
    }

    /// The angles at grid point `m`, in storage order.
    pub fn at(&self, m: usize) -> Vec<f64> {
        self.values.components().iter().map(|c| c[m]).collect()
    }

    pub fn as_grid_function(&self) -> &GridFunction {
        &self.values
    }
}

/// `a_i`, `i = 1..n−1`, with `a₁ = 0`; entry `k` holds `a_{k+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainQuantities {
    pub a: Vec<Vec<f64>>,
}

/// Pointwise view of one angle vector.
struct Angles<'a> {
    n: usize,
    th: &'a [f64],
}

impl Angles<'_> {
    fn theta(&self, i: usize, j: usize) -> f64 {
        self.th[pair_index(self.n, i, j)]
    }
    fn c(&self, i: usize, j: usize) -> f64 {
        self.theta(i, j).cos()
    }
    fn s(&self, i: usize, j: usize) -> f64 {
        self.theta(i, j).sin()
    }

    /// First row of `T` times `ū⁽¹⁾`: the natural curvatures.
    fn euler(&self, u1: f64) -> Vec<f64> {
        let n = self.n;
        (1..n)
            .map(|k| {
                let mut v = u1;
                if k == 1 {
                    v *= self.c(2, 3);
                } else {
                    v *= self.s(2, k + 1);
                }
                for l in (k + 2).max(4)..=n {
                    v *= self.c(2, l);
                }
                v
            })
            .collect()
    }

    fn check_cosines(&self, x: f64) -> Result<()> {
        for (i, j) in angle_pairs(self.n) {
            if (i, j) != (2, 3) && self.c(i, j).abs() < GIMBAL_THRESHOLD {
                return Err(Error::GimbalLock { i, j, x });
            }
        }
        Ok(())
    }

    /// `a_i = ū⁽ⁱ⁾ Π_{j=i+2..n} cosθ_{i+1,j}/cosθ_{i,j}`; `a[k]` is `a_{k+1}`.
    fn chain(&self, ubar: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n - 1];
        for i in 2..n {
            let mut p = ubar[i - 1];
            for j in i + 2..=n {
                p *= self.c(i + 1, j) / self.c(i, j);
            }
            a[i - 1] = p;
        }
        a
    }

    /// `Dx θ` from the chain recursion and the off-diagonal constraints.
    fn rhs(&self, ubar: &[f64], x: f64) -> Result<Vec<f64>> {
        self.check_cosines(x)?;
        let n = self.n;
        let a = self.chain(ubar);
        let a_at = |i: usize| a[i - 1];
        let mut d = vec![0.0; self.th.len()];
        for i in 2..n {
            let prev = if i >= 3 { self.s(i - 1, i + 1) * a_at(i - 1) } else { 0.0 };
            d[pair_index(n, i, i + 1)] = a_at(i) - prev;
        }
        for j in 4..=n {
            for i in 2..=j - 2 {
                let mut p1 = self.s(i + 1, j) * a_at(i);
                for l in i + 2..=j {
                    p1 *= self.c(i, l) / self.c(i + 1, l);
                }
                let mut p2 = 0.0;
                if i >= 3 {
                    p2 = self.s(i - 1, j) * a_at(i - 1);
                    for l in i + 1..j {
                        p2 *= self.c(i - 1, l) / self.c(i, l);
                    }
                }
                d[pair_index(n, i, j)] = p1 - p2;
            }
        }
        Ok(d)
    }
}

fn rk4_path(
    n: usize,
    fine: &[Vec<f64>],
    theta0: &[f64],
    npts: usize,
    substeps: usize,
    h_fine: f64,
) -> Result<Vec<Vec<f64>>> {
    let stride = REFINE / substeps;
    let h = h_fine * stride as f64;
    let sample = |k: usize| -> Vec<f64> { fine.iter().map(|c| c[k]).collect() };
    let f = |th: &[f64], k: usize| -> Result<Vec<f64>> {
        Angles { n, th }.rhs(&sample(k), k as f64 * h_fine)
    };
    let axpy = |y: &[f64], s: f64, d: &[f64]| -> Vec<f64> {
        y.iter().zip(d).map(|(a, b)| a + s * b).collect()
    };
    let mut out = Vec::with_capacity(npts);
    let mut y = theta0.to_vec();
    out.push(y.clone());
    for m in 0..npts - 1 {
        for s in 0..substeps {
            let k = (m * substeps + s) * stride;
            let k1 = f(&y, k)?;
            let k2 = f(&axpy(&y, h / 2.0, &k1), k + stride / 2)?;
            let k3 = f(&axpy(&y, h / 2.0, &k2), k + stride / 2)?;
            let k4 = f(&axpy(&y, h, &k3), k + stride)?;
            for (idx, v) in y.iter_mut().enumerate() {
                *v += h / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx]);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Integrate the angle ODEs from `x = 0` with initial values `theta_init`
/// (storage order, default all zero) and return the natural curvatures.
pub fn natural_from_frenet(
    frenet: &FrenetCurvatures,
    theta_init: Option<&[f64]>,
) -> Result<(NaturalCurvatures, AngleField)> {
    let n = frenet.n();
    if n < 3 {
        return Err(Error::Dimension("the Hasimoto gauge needs n >= 3".into()));
    }
    let grid = frenet.0.grid().clone();
    let ub1 = frenet.0.component(0);
    if let Some(m) = ub1.iter().position(|v| *v <= 0.0) {
        return Err(Error::PositivityLoss { x: grid.x(m) });
    }
    let npairs = angle_pairs(n).len();
    let theta0 = match theta_init {
        Some(t) if t.len() != npairs => {
            return Err(Error::Dimension(format!("{} initial angles, need {npairs}", t.len())))
        }
        Some(t) => t.to_vec(),
        None => vec![0.0; npairs],
    };
    let fine: Vec<Vec<f64>> = frenet
        .0
        .components()
        .iter()
        .map(|c| grid.refine(c, REFINE))
        .collect();
    let h_fine = grid.dx() / REFINE as f64;
    let npts = grid.n();
    let path = rk4_path(n, &fine, &theta0, npts, SUBSTEPS, h_fine)?;
    let coarse = rk4_path(n, &fine, &theta0, npts, SUBSTEPS / 2, h_fine)?;
    let err = path
        .iter()
        .zip(&coarse)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0_f64, f64::max)
        / 15.0;

    let mut angles = vec![vec![0.0; npts]; npairs];
    let mut u = vec![vec![0.0; npts]; n - 1];
    for (m, th) in path.iter().enumerate() {
        for (k, v) in th.iter().enumerate() {
            angles[k][m] = *v;
        }
        let e = Angles { n, th }.euler(ub1[m]);
        for (k, v) in e.into_iter().enumerate() {
            u[k][m] = v;
        }
    }
    let mut field = AngleField::new(n, GridFunction::new(grid.clone(), angles)?)?;
    field.integration_error = err;
    Ok((NaturalCurvatures(GridFunction::new(grid, u)?), field))
}

/// Chain quantities `a_i` along an angle field and Frenet data.
pub fn chain_quantities(frenet: &FrenetCurvatures, theta: &AngleField) -> ChainQuantities {
    let n = frenet.n();
    let npts = frenet.0.grid().n();
    let mut a = vec![vec![0.0; npts]; n - 1];
    for m in 0..npts {
        let th = theta.at(m);
        let ub: Vec<f64> = frenet.0.components().iter().map(|c| c[m]).collect();
        for (k, v) in (Angles { n, th: &th }).chain(&ub).into_iter().enumerate() {
            a[k][m] = v;
        }
    }
    ChainQuantities { a }
}

fn unwrap(raw: &[f64], grid: &SpectralGrid) -> Result<Vec<f64>> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (m, v) in raw.iter().enumerate() {
        if m > 0 {
            let prev = raw[m - 1];
            let mut d = v - prev;
            while d > PI {
                d -= 2.0 * PI;
                offset -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
                offset += 2.0 * PI;
            }
            if d.abs() > PI / 2.0 {
                return Err(Error::BranchJump { x: grid.x(m), jump: d });
            }
        }
        out.push(v + offset);
    }
    Ok(out)
}

fn check_continuous(v: &[f64], grid: &SpectralGrid) -> Result<()> {
    for m in 1..v.len() {
        let d = v[m] - v[m - 1];
        if d.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::BranchJump { x: grid.x(m), jump: d });
        }
    }
    Ok(())
}

/// Recover `ū⁽¹⁾ = |u|` and the first-tier angles by inverting the Euler
/// transformation; the higher tiers follow algebraically from the
/// off-diagonal constraints, one tier at a time, and the Frenet curvatures
/// from the chain recursion.
pub fn angles_from_natural(u: &NaturalCurvatures) -> Result<(AngleField, FrenetCurvatures)> {
    let n = u.n();
    if n < 3 {
        return Err(Error::Dimension("the Hasimoto gauge needs n >= 3".into()));
    }
    let grid = u.0.grid().clone();
    let npts = grid.n();
    let uc = u.0.components();
    let du = u.0.derivative(1);
    let duc = du.components();
    let norm = u.0.pointwise_norm();
    if let Some(m) = norm.iter().position(|v| *v < GIMBAL_THRESHOLD) {
        return Err(Error::PositivityLoss { x: grid.x(m) });
    }
    let npairs = angle_pairs(n).len();
    let mut th = vec![vec![0.0; npts]; npairs];
    let mut dth = vec![vec![0.0; npts]; npairs];

    // first tier
    let raw: Vec<f64> = (0..npts).map(|m| uc[1][m].atan2(uc[0][m])).collect();
    th[pair_index(n, 2, 3)] = unwrap(&raw, &grid)?;
    dth[pair_index(n, 2, 3)] = (0..npts)
        .map(|m| {
            let (a, b) = (uc[0][m], uc[1][m]);
            (a * duc[1][m] - b * duc[0][m]) / (a * a + b * b)
        })
        .collect();
    for j in 4..=n {
        let k = pair_index(n, 2, j);
        for m in 0..npts {
            let rho2: f64 = (0..j - 2).map(|c| uc[c][m] * uc[c][m]).sum();
            let rho = rho2.sqrt();
            if rho / norm[m] < GIMBAL_THRESHOLD {
                return Err(Error::GimbalLock { i: 2, j, x: grid.x(m) });
            }
            let drho = (0..j - 2).map(|c| uc[c][m] * duc[c][m]).sum::<f64>() / rho;
            let v = uc[j - 2][m];
            th[k][m] = v.atan2(rho);
            dth[k][m] = (rho * duc[j - 2][m] - v * drho) / (rho2 + v * v);
        }
    }

    let mut a = vec![vec![0.0; npts]; n - 1];
    a[1] = dth[pair_index(n, 2, 3)].clone();
    for i in 2..=n - 2 {
        for j in i + 2..=n {
            let k = pair_index(n, i + 1, j);
            for m in 0..npts {
                let ang = |p: usize, q: usize| th[pair_index(n, p, q)][m];
                let mut d = dth[pair_index(n, i, j)][m];
                if i >= 3 {
                    let mut p2 = ang(i - 1, j).sin() * a[i - 2][m];
                    for l in i + 1..j {
                        p2 *= ang(i - 1, l).cos() / ang(i, l).cos();
                    }
                    d += p2;
                }
                let mut den = a[i - 1][m] * ang(i, j).cos();
                for l in i + 2..j {
                    den *= ang(i, l).cos() / ang(i + 1, l).cos();
                }
                if den.abs() < GIMBAL_THRESHOLD && d.abs() < GIMBAL_THRESHOLD {
                    // no torsion to transport: keep the trivial branch
                    th[k][m] = 0.0;
                    continue;
                }
                if den.abs() < GIMBAL_THRESHOLD {
                    return Err(Error::DegenerateFrenet {
                        x: grid.x(m),
                        reason: format!("a_{i} cos theta_{i}{j} vanishes"),
                    });
                }
                th[k][m] = (d / den).atan();
                if th[k][m].cos() < GIMBAL_THRESHOLD {
                    return Err(Error::GimbalLock { i: i + 1, j, x: grid.x(m) });
                }
            }
            check_continuous(&th[k], &grid)?;
            dth[k] = grid.derivative(&th[k], 1);
        }
        for m in 0..npts {
            a[i][m] = dth[pair_index(n, i + 1, i + 2)][m]
                + th[pair_index(n, i, i + 2)][m].sin() * a[i - 1][m];
        }
    }

    let mut ubar = vec![norm.clone()];
    for i in 2..n {
        ubar.push(
            (0..npts)
                .map(|m| {
                    let mut v = a[i - 1][m];
                    for j in i + 2..=n {
                        v *= th[pair_index(n, i, j)][m].cos() / th[pair_index(n, i + 1, j)][m].cos();
                    }
                    v
                })
                .collect(),
        );
    }
    let field = AngleField::new(n, GridFunction::new(grid.clone(), th)?)?;
    Ok((field, FrenetCurvatures(GridFunction::new(grid, ubar)?)))
}

/// `R_ij`: identity except the `(i, j)` rotation block, 1-based indices.
pub fn givens(n: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut r = DMatrix::identity(n, n);
    let (c, s) = (theta.cos(), theta.sin());
    r[(i - 1, i - 1)] = c;
    r[(i - 1, j - 1)] = s;
    r[(j - 1, i - 1)] = -s;
    r[(j - 1, j - 1)] = c;
    r
}

/// `R⁽ⁱ⁾ = R_{i−1,i} ··· R_{3i} R_{2i}` at one point.
pub fn factor_matrix(n: usize, th: &[f64], i: usize) -> DMatrix<f64> {
    let mut r = DMatrix::identity(n, n);
    for k in (2..i).rev() {
        r *= givens(n, k, i, th[pair_index(n, k, i)]);
    }
    r
}

/// `R = R⁽ⁿ⁾ ··· R⁽³⁾` at one point.
pub fn rotation_matrix(n: usize, th: &[f64]) -> DMatrix<f64> {
    let mut r = DMatrix::identity(n, n);
    for i in (3..=n).rev() {
        r *= factor_matrix(n, th, i);
    }
    r
}

/// Pointwise rotation matrices `R(x) = 1 ⊕ T(x)`.
#[derive(Clone, Debug)]
pub struct RotationField {
    n: usize,
    grid: SpectralGrid,
    angles: Vec<Vec<f64>>,
    matrices: Vec<DMatrix<f64>>,
}

impl RotationField {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn r(&self, m: usize) -> &DMatrix<f64> {
        &self.matrices[m]
    }

    /// `T(x_m)`, the lower-right `(n−1)×(n−1)` block.
    pub fn t(&self, m: usize) -> DMatrix<f64> {
        self.matrices[m].view((1, 1), (self.n - 1, self.n - 1)).into_owned()
    }

    /// `B⁽ⁱ⁾(x_m)`, the lower-right block of `R⁽ⁱ⁾`; `T = B⁽ⁿ⁾ ··· B⁽³⁾`.
    pub fn b(&self, i: usize, m: usize) -> DMatrix<f64> {
        factor_matrix(self.n, &self.angles[m], i)
            .view((1, 1), (self.n - 1, self.n - 1))
            .into_owned()
    }

    /// `max_x ‖RᵀR − I‖∞`.
    pub fn orthogonality_defect(&self) -> f64 {
        let id = DMatrix::<f64>::identity(self.n, self.n);
        self.matrices
            .iter()
            .map(|r| (r.transpose() * r - &id).amax())
            .fold(0.0, f64::max)
    }
}

pub fn rotation_field(theta: &AngleField) -> RotationField {
    let n = theta.n();
    let angles: Vec<Vec<f64>> = (0..theta.grid().n()).map(|m| theta.at(m)).collect();
    let matrices = angles.iter().map(|th| rotation_matrix(n, th)).collect();
    RotationField {
        n,
        grid: theta.grid().clone(),
        angles,
        matrices,
    }
}

/// Tridiagonal Frenet Cartan matrix.
pub fn frenet_cartan(ubar: &[f64]) -> DMatrix<f64> {
    let n = ubar.len() + 1;
    let mut w = DMatrix::zeros(n, n);
    for (k, v) in ubar.iter().enumerate() {
        w[(k, k + 1)] = *v;
        w[(k + 1, k)] = -*v;
    }
    w
}

/// Natural Cartan matrix: first row `uᵀ`, first column `−u`.
pub fn natural_cartan(u: &[f64]) -> DMatrix<f64> {
    let n = u.len() + 1;
    let mut w = DMatrix::zeros(n, n);
    for (k, v) in u.iter().enumerate() {
        w[(0, k + 1)] = *v;
        w[(k + 1, 0)] = -*v;
    }
    w
}

/// Derivative weights at `x0` for the Lagrange interpolant through `xs`.
fn lagrange_derivative_weights(xs: &[f64], x0: f64) -> Vec<f64> {
    let p = xs.len();
    (0..p)
        .map(|k| {
            let mut w = 0.0;
            for m in 0..p {
                if m == k {
                    continue;
                }
                let mut t = 1.0 / (xs[k] - xs[m]);
                for l in 0..p {
                    if l != k && l != m {
                        t *= (x0 - xs[l]) / (xs[k] - xs[l]);
                    }
                }
                w += t;
            }
            w
        })
        .collect()
}

/// Points in the finite-difference stencil of [`fd_derivative`].
pub const FD_STENCIL: usize = 11;

/// Tenth-order finite-difference derivative of a non-periodic sampled
/// sequence (central in the interior, shifted stencils at the ends).
/// Constant sequences differentiate to exactly zero.
pub fn fd_derivative<T>(values: &[T], dx: f64) -> Vec<T>
where
    T: Clone + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let len = values.len();
    let p = FD_STENCIL;
    assert!(len >= p, "need at least {p} samples");
    (0..len)
        .map(|m| {
            let start = m.saturating_sub(p / 2).min(len - p);
            let xs: Vec<f64> = (start..start + p).map(|k| k as f64).collect();
            let w = lagrange_derivative_weights(&xs, m as f64);
            let base = values[m].clone();
            let mut acc = (values[start].clone() - base.clone()) * (w[0] / dx);
            for (q, wq) in w.iter().enumerate().skip(1) {
                acc = acc + (values[start + q].clone() - base.clone()) * (wq / dx);
            }
            acc
        })
        .collect()
}

/// `max_x ‖ω_F R − Dx R − R ω_N‖∞`. The angle fields are generally not
/// periodic (the first-tier angle winds), so `Dx R` is taken by
/// finite differences.
pub fn gauge_residual(
    frenet: &FrenetCurvatures,
    natural: &NaturalCurvatures,
    theta: &AngleField,
) -> Result<f64> {
    let n = frenet.n();
    if natural.n() != n || theta.n() != n {
        return Err(Error::Dimension("inconsistent dimensions".into()));
    }
    if frenet.0.grid() != natural.0.grid() || frenet.0.grid() != theta.grid() {
        return Err(Error::InvalidGrid("inconsistent grids".into()));
    }
    let rot = rotation_field(theta);
    let dr = fd_derivative(&rot.matrices, frenet.0.grid().dx());
    let mut worst = 0.0_f64;
    for m in 0..rot.len() {
        let ub: Vec<f64> = frenet.0.components().iter().map(|c| c[m]).collect();
        let u: Vec<f64> = natural.0.components().iter().map(|c| c[m]).collect();
        let r = rot.r(m);
        let res = frenet_cartan(&ub) * r - &dr[m] - r * natural_cartan(&u);
        worst = worst.max(res.amax());
    }
    Ok(worst)
}

/// Report of a gauge computation, serialized by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct GaugeReport {
    pub n: usize,
    pub grid: usize,
    pub gauge_residual: f64,
    pub orthogonality_defect: f64,
    pub integration_error: f64,
    pub constraints: usize,
}

pub fn gauge_report(
    frenet: &FrenetCurvatures,
    natural: &NaturalCurvatures,
    theta: &AngleField,
) -> Result<GaugeReport> {
    Ok(GaugeReport {
        n: frenet.n(),
        grid: frenet.0.grid().n(),
        gauge_residual: gauge_residual(frenet, natural, theta)?,
        orthogonality_defect: rotation_field(theta).orthogonality_defect(),
        integration_error: theta.integration_error,
        constraints: constraint_count(frenet.n()),
    })
}

/// `∫₀ˣ f`, exact for the mean part and spectral for the rest.
pub fn integral_from_origin(grid: &SpectralGrid, f: &[f64]) -> Vec<f64> {
    let mean = grid.mean(f);
    let anti = grid.antiderivative_unchecked(f);
    let a0 = anti[0];
    grid.xs()
        .iter()
        .zip(&anti)
        .map(|(x, a)| mean * x + a - a0)
        .collect()
}

/// The classical transformation `φ = κ exp(i ∫₀ˣ τ)`.
pub fn hasimoto_n3(frenet: &FrenetCurvatures) -> Result<Vec<Complex64>> {
    if frenet.n() != 3 {
        return Err(Error::Dimension("hasimoto_n3 needs curvature and torsion".into()));
    }
    let grid = frenet.0.grid();
    let phase = integral_from_origin(grid, frenet.0.component(1));
    Ok(frenet
        .0
        .component(0)
        .iter()
        .zip(&phase)
        .map(|(k, p)| Complex64::from_polar(*k, *p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_indexing() {
        for n in 3..8 {
            for (k, (i, j)) in angle_pairs(n).into_iter().enumerate() {
                assert_eq!(pair_index(n, i, j), k);
            }
            assert_eq!(angle_pairs(n).len(), (n - 1) * (n - 2) / 2);
            assert_eq!(constraint_count(n), (n - 2) * (n - 3) / 2);
        }
    }

    #[test]
    fn refine_is_exact_for_trig_polynomials() {
        let g = SpectralGrid::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let f: Vec<f64> = g.xs().iter().map(|x| (3.0 * x).sin() + 0.5 * (16.0 * x).cos()).collect();
        let fine = g.refine(&f, 4);
        for (k, v) in fine.iter().enumerate() {
            let x = k as f64 * g.dx() / 4.0;
            assert!((v - (3.0 * x).sin() - 0.5 * (16.0 * x).cos()).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn fd_on_polynomial_is_exact() {
        let xs: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let f: Vec<f64> = xs.iter().map(|x| x.powi(6) - 2.0 * x.powi(3)).collect();
        let d = fd_derivative(&f, 0.1);
        for (x, v) in xs.iter().zip(d) {
            assert!((v - 6.0 * x.powi(5) + 6.0 * x * x).abs() < 1e-8);
        }
    }
}
