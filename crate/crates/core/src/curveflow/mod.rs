//! Pseudospectral evolution of the curvature vector under the vector mKdV
//! flow, reconstruction of the curve and its natural frame in flat space,
//! and the geometric diagnostics of the flow.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffpoly::{GridFunction, SpectralGrid};
use crate::error::{Error, Result};
use crate::hasimoto::fd_derivative;
use crate::report::write_json;

/// `‖u‖∞` may grow by at most this factor before the run is abandoned.
pub const BLOWUP_FACTOR: f64 = 1e3;

/// Largest `|z|` on the imaginary axis inside the RK4 stability region,
/// with a small margin.
pub const RK4_IMAGINARY_BOUND: f64 = 2.8;

/// Default tolerance on curvatures recomputed from an evolved curve.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-4;

/// Per-snapshot diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `∫⟨u,u⟩ dx`.
    pub norm: f64,
    /// `∫(⟨u₁,u₁⟩ − ¼⟨u,u⟩²) dx`.
    pub energy: f64,
    /// `max |Dx h₁ − ⟨u, u₁⟩|` with `h₁ = ½⟨u,u⟩`, the rate at which the
    /// flow would stretch arc length.
    pub metric_defect: f64,
}

impl Diagnostics {
    pub fn of(u: &GridFunction) -> Diagnostics {
        let grid = u.grid();
        let n2 = norm_squared(u);
        let ux = u.derivative(1);
        let ux2 = norm_squared(&ux);
        let dens: Vec<f64> = ux2.iter().zip(&n2).map(|(a, b)| a - 0.25 * b * b).collect();
        let h1: Vec<f64> = n2.iter().map(|v| 0.5 * v).collect();
        let dh1 = grid.derivative(&h1, 1);
        let dot = pointwise_dot(u, &ux);
        let metric_defect = dh1.iter().zip(&dot).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Diagnostics {
            norm: grid.integral(&n2),
            energy: grid.integral(&dens),
            metric_defect,
        }
    }
}

fn norm_squared(u: &GridFunction) -> Vec<f64> {
    pointwise_dot(u, u)
}

fn pointwise_dot(a: &GridFunction, b: &GridFunction) -> Vec<f64> {
    let mut out = vec![0.0; a.grid().n()];
    for (ca, cb) in a.components().iter().zip(b.components()) {
        for (o, (x, y)) in out.iter_mut().zip(ca.iter().zip(cb)) {
            *o += x * y;
        }
    }
    out
}

/// Uniformly spaced snapshots of a flow.
#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub dt: f64,
    pub kappa_c: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    pub diagnostics: Vec<Diagnostics>,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryIndex {
    dt: f64,
    kappa_c: f64,
    grid: usize,
    length: f64,
    dims: usize,
    times: Vec<f64>,
    files: Vec<String>,
    diagnostics: Vec<Diagnostics>,
}

impl FlowTrajectory {
    pub fn grid(&self) -> &SpectralGrid {
        self.snapshots[0].grid()
    }

    pub fn dims(&self) -> usize {
        self.snapshots[0].dims()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    /// Snapshot spacing in time.
    pub fn snapshot_dt(&self) -> f64 {
        if self.times.len() < 2 {
            self.dt
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Write one CSV per snapshot plus `trajectory.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir)?;
        let files: Vec<String> = (0..self.len()).map(|k| format!("u_{k:05}.csv")).collect();
        for (f, s) in files.iter().zip(&self.snapshots) {
            s.write_csv(&dir.join(f))?;
        }
        let index = TrajectoryIndex {
            dt: self.dt,
            kappa_c: self.kappa_c,
            grid: self.grid().n(),
            length: self.grid().length(),
            dims: self.dims(),
            times: self.times.clone(),
            files: files.clone(),
            diagnostics: self.diagnostics.clone(),
        };
        write_json(&dir.join("trajectory.json"), &index)?;
        Ok(files)
    }

    pub fn read_dir(dir: &Path) -> Result<FlowTrajectory> {
        let text = std::fs::read_to_string(dir.join("trajectory.json"))?;
        let index: TrajectoryIndex = serde_json::from_str(&text)?;
        let grid = SpectralGrid::new(index.grid, index.length)?;
        let mut snapshots = Vec::with_capacity(index.files.len());
        for f in &index.files {
            let g = GridFunction::read_csv(&dir.join(f))?;
            if g.dims() != index.dims || g.grid().n() != index.grid {
                return Err(Error::Dimension(format!("snapshot {f} does not match the index")));
            }
            // rebuild on the recorded period to avoid rounding in the x column
            snapshots.push(GridFunction::new(grid.clone(), g.into_components())?);
        }
        if snapshots.is_empty() {
            return Err(Error::InsufficientSnapshots(0));
        }
        Ok(FlowTrajectory {
            dt: index.dt,
            kappa_c: index.kappa_c,
            times: index.times,
            snapshots,
            diagnostics: index.diagnostics,
        })
    }
}

/// Largest time step for which the explicit treatment of the nonlinear term
/// is stable: the linearization of `3/2⟨u,u⟩u₁` has imaginary eigenvalues up
/// to `3/2 ‖u‖∞² k_max`, and the dispersive part is integrated exactly.
pub fn stability_bound(u: &GridFunction) -> f64 {
    let grid = u.grid();
    let kmax = dealias_cutoff(grid) as f64 * 2.0 * std::f64::consts::PI / grid.length();
    let umax = u.pointwise_norm().into_iter().fold(0.0, f64::max);
    if umax == 0.0 {
        f64::INFINITY
    } else {
        RK4_IMAGINARY_BOUND / (1.5 * umax * umax * kmax)
    }
}

/// Modes with `|k| ≥ N/3` are removed from the nonlinear term.
fn dealias_cutoff(grid: &SpectralGrid) -> i64 {
    (grid.n() / 3) as i64
}

/// Spectral state of the pseudospectral integrator.
struct Spectral {
    grid: SpectralGrid,
    kappa_c: f64,
    nonlinearity: f64,
    keep: Vec<bool>,
}

impl Spectral {
    fn new(grid: &SpectralGrid, kappa_c: f64, nonlinearity: f64) -> Spectral {
        let cut = dealias_cutoff(grid);
        let keep = (0..grid.n())
            .map(|j| grid.mode(j).abs() < cut && !grid.is_nyquist(j))
            .collect();
        Spectral {
            grid: grid.clone(),
            kappa_c,
            nonlinearity,
            keep,
        }
    }

    /// `exp(Λ t)` with `Λ = −ik³ − iκ_c k`.
    fn propagator(&self, t: f64) -> Vec<Complex64> {
        (0..self.grid.n())
            .map(|j| {
                let k = self.grid.wavenumber(j);
                Complex64::from_polar(1.0, -(k * k * k + self.kappa_c * k) * t)
            })
            .collect()
    }

    /// Dealiased transform of `3/2⟨u,u⟩u₁`.
    fn nonlinear(&self, hat: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let u: Vec<Vec<f64>> = hat.iter().map(|h| self.grid.inverse(h.clone())).collect();
        let ux: Vec<Vec<f64>> = hat
            .iter()
            .map(|h| {
                let d = h
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * Complex64::new(0.0, self.grid.wavenumber(j)))
                    .collect();
                self.grid.inverse(d)
            })
            .collect();
        let npts = self.grid.n();
        let mut n2 = vec![0.0; npts];
        for c in &u {
            for (o, v) in n2.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        ux.iter()
            .map(|d| {
                let prod: Vec<f64> = d.iter().zip(&n2).map(|(a, b)| self.nonlinearity * a * b).collect();
                self.project(self.grid.forward(&prod))
            })
            .collect()
    }

    fn project(&self, mut hat: Vec<Complex64>) -> Vec<Complex64> {
        for (h, k) in hat.iter_mut().zip(&self.keep) {
            if !k {
                *h = Complex64::new(0.0, 0.0);
            }
        }
        hat
    }

    /// One integrating-factor RK4 step.
    fn step(&self, hat: &[Vec<Complex64>], dt: f64, e: &[Complex64], eh: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mul = |a: &[Vec<Complex64>], p: &[Complex64]| -> Vec<Vec<Complex64>> {
            a.iter().map(|c| c.iter().zip(p).map(|(x, y)| x * y).collect()).collect()
        };
        let axpy = |a: &[Vec<Complex64>], s: f64, b: &[Vec<Complex64>]| -> Vec<Vec<Complex64>> {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q * s).collect())
                .collect()
        };
        let k1 = self.nonlinear(hat);
        let k2 = self.nonlinear(&mul(&axpy(hat, dt / 2.0, &k1), eh));
        let uh = mul(hat, eh);
        let k3 = self.nonlinear(&axpy(&uh, dt / 2.0, &k2));
        let k4 = self.nonlinear(&axpy(&mul(hat, e), dt, &mul(&k3, eh)));
        let ue = mul(hat, e);
        let k1e = mul(&k1, e);
        let mid = mul(&axpy(&k2, 1.0, &k3), eh);
        (0..hat.len())
            .map(|c| {
                (0..hat[c].len())
                    .map(|j| ue[c][j] + (k1e[c][j] + mid[c][j] * 2.0 + k4[c][j]) * (dt / 6.0))
                    .collect()
            })
            .collect()
    }
}

/// Options for [`evolve_vmkdv_with`].
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Record every `save_every`-th step.
    pub save_every: usize,
    /// Refuse time steps above [`stability_bound`].
    pub enforce_stability: bool,
    /// Coefficient of `⟨u,u⟩u₁`; the integrable flow has 3/2.
    pub nonlinearity: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            save_every: 1,
            enforce_stability: true,
            nonlinearity: 1.5,
        }
    }
}

/// Integrate `u_t = u₃ + 3/2⟨u,u⟩u₁ − κ_c u₁` up to `t_final`. The step is
/// shrunk so that an integer number of steps lands on `t_final`.
pub fn evolve_vmkdv(u0: &GridFunction, t_final: f64, dt: f64, kappa_c: f64) -> Result<FlowTrajectory> {
    evolve_vmkdv_with(u0, t_final, dt, kappa_c, &EvolveOptions::default())
}

pub fn evolve_vmkdv_with(
    u0: &GridFunction,
    t_final: f64,
    dt: f64,
    kappa_c: f64,
    opts: &EvolveOptions,
) -> Result<FlowTrajectory> {
    if !(t_final >= 0.0 && dt > 0.0 && t_final.is_finite() && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("need T >= 0 and dt > 0, got T = {t_final}, dt = {dt}")));
    }
    if opts.save_every == 0 {
        return Err(Error::InvalidArgument("save_every must be positive".into()));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { dt } else { t_final / steps as f64 };
    let bound = stability_bound(u0);
    if opts.enforce_stability && dt > bound {
        return Err(Error::StabilityViolation { dt, bound });
    }
    let grid = u0.grid().clone();
    let sp = Spectral::new(&grid, kappa_c, opts.nonlinearity);
    let e = sp.propagator(dt);
    let eh = sp.propagator(dt / 2.0);
    let mut hat: Vec<Vec<Complex64>> = u0.components().iter().map(|c| grid.forward(c)).collect();
    let initial_max = u0.sup_norm();

    let mut traj = FlowTrajectory {
        dt,
        kappa_c,
        times: vec![0.0],
        snapshots: vec![u0.clone()],
        diagnostics: vec![Diagnostics::of(u0)],
    };
    for s in 1..=steps {
        hat = sp.step(&hat, dt, &e, &eh);
        if s % opts.save_every == 0 || s == steps {
            let comps: Vec<Vec<f64>> = hat.iter().map(|h| grid.inverse(h.clone())).collect();
            let t = s as f64 * dt;
            let max = comps.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !max.is_finite() || (initial_max > 0.0 && max > BLOWUP_FACTOR * initial_max) {
                return Err(Error::BlowUp { t, max });
            }
            let u = GridFunction::new(grid.clone(), comps)?;
            traj.diagnostics.push(Diagnostics::of(&u));
            traj.snapshots.push(u);
            traj.times.push(t);
        }
    }
    Ok(traj)
}

/// `u(x − s)` by a spectral shift.
pub fn shift(u: &GridFunction, s: f64) -> GridFunction {
    let grid = u.grid();
    let comps = u
        .components()
        .iter()
        .map(|c| {
            let hat = grid
                .forward(c)
                .into_iter()
                .enumerate()
                .map(|(j, h)| {
                    if grid.is_nyquist(j) {
                        h * (grid.wavenumber(j) * s).cos()
                    } else {
                        h * Complex64::from_polar(1.0, -grid.wavenumber(j) * s)
                    }
                })
                .collect();
            grid.inverse(hat)
        })
        .collect();
    GridFunction::new(grid.clone(), comps).expect("shift preserves the grid")
}

/// Relative drift of the conserved densities at one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservedRow {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub norm_drift: f64,
    pub energy_drift: f64,
}

fn relative(v: f64, v0: f64) -> f64 {
    if v0 == 0.0 {
        v.abs()
    } else {
        ((v - v0) / v0).abs()
    }
}

pub fn conserved_report(traj: &FlowTrajectory) -> Vec<ConservedRow> {
    let d0 = &traj.diagnostics[0];
    traj.times
        .iter()
        .zip(&traj.diagnostics)
        .map(|(t, d)| ConservedRow {
            t: *t,
            norm: d.norm,
            energy: d.energy,
            norm_drift: relative(d.norm, d0.norm),
            energy_drift: relative(d.energy, d0.energy),
        })
        .collect()
}

/// Largest relative drift of `∫⟨u,u⟩` along a trajectory.
pub fn max_norm_drift(traj: &FlowTrajectory) -> f64 {
    conserved_report(traj).iter().map(|r| r.norm_drift).fold(0.0, f64::max)
}

/// A curve with its natural frame: `frames[m]` has the frame vectors
/// `e₁ … e_n` at `x_m` as rows, `e₁ = γ_x`.
#[derive(Clone, Debug)]
pub struct FrameState {
    pub u: GridFunction,
    pub gamma: Vec<DVector<f64>>,
    pub frames: Vec<DMatrix<f64>>,
    /// `γ` and the frame continued to `x = L`, for the closure defect.
    pub gamma_end: DVector<f64>,
    pub frame_end: DMatrix<f64>,
}

impl FrameState {
    pub fn n(&self) -> usize {
        self.u.dims() + 1
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.u.grid()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let id = DMatrix::<f64>::identity(self.n(), self.n());
        self.frames
            .iter()
            .map(|e| (e * e.transpose() - &id).amax())
            .fold(0.0, f64::max)
    }

    /// `|γ(L) − γ(0)|` and `‖e(L) − e(0)‖∞`: zero only for closed curves.
    pub fn closure_defect(&self) -> (f64, f64) {
        (
            (&self.gamma_end - &self.gamma[0]).norm(),
            (&self.frame_end - &self.frames[0]).amax(),
        )
    }

    /// `max |γ_x − e₁|` with `γ_x` by finite differences.
    pub fn tangent_defect(&self) -> f64 {
        let dg = fd_derivative(&self.gamma, self.grid().dx());
        dg.iter()
            .zip(&self.frames)
            .map(|(d, e)| (d - e.row(0).transpose()).amax())
            .fold(0.0, f64::max)
    }
}

/// Nearest orthogonal matrix (polar factor).
pub fn nearest_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    u * vt
}

/// The natural Cartan matrix `W` with `e_x = W e`.
fn cartan(u: &[f64]) -> DMatrix<f64> {
    crate::hasimoto::natural_cartan(u)
}

/// Integrate `e_x = W e`, `γ_x = e₁` across the period from `γ0`, `e0`.
pub fn reconstruct_frame(u: &GridFunction, gamma0: &DVector<f64>, e0: &DMatrix<f64>) -> Result<FrameState> {
    let n = u.dims() + 1;
    if gamma0.len() != n || e0.nrows() != n || e0.ncols() != n {
        return Err(Error::Dimension(format!("frame data must be {n}-dimensional")));
    }
    let id = DMatrix::<f64>::identity(n, n);
    if (e0 * e0.transpose() - &id).amax() > 1e-10 {
        return Err(Error::InvalidArgument("initial frame is not orthonormal".into()));
    }
    const SUB: usize = 4;
    let grid = u.grid();
    let npts = grid.n();
    let fine: Vec<Vec<f64>> = u.components().iter().map(|c| grid.refine(c, 2 * SUB)).collect();
    let big = fine[0].len();
    let w_at = |k: usize| -> DMatrix<f64> {
        let v: Vec<f64> = fine.iter().map(|c| c[k % big]).collect();
        cartan(&v)
    };
    let h = grid.dx() / SUB as f64;
    let mut gamma = Vec::with_capacity(npts);
    let mut frames = Vec::with_capacity(npts);
    let mut g = gamma0.clone();
    let mut e = e0.clone();
    gamma.push(g.clone());
    frames.push(e.clone());
    for m in 0..npts {
        for s in 0..SUB {
            let k = (m * SUB + s) * 2;
            let (w0, w1, w2) = (w_at(k), w_at(k + 1), w_at(k + 2));
            let k1 = &w0 * &e;
            let e2 = &e + &k1 * (h / 2.0);
            let k2 = &w1 * &e2;
            let e3 = &e + &k2 * (h / 2.0);
            let k3 = &w1 * &e3;
            let e4 = &e + &k3 * h;
            let k4 = &w2 * &e4;
            let tangent = (e.row(0) + e2.row(0) * 2.0 + e3.row(0) * 2.0 + e4.row(0)).transpose();
            g += tangent * (h / 6.0);
            e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            e = nearest_orthogonal(&e);
        }
        if m + 1 < npts {
            gamma.push(g.clone());
            frames.push(e.clone());
        }
    }
    Ok(FrameState {
        u: u.clone(),
        gamma,
        frames,
        gamma_end: g,
        frame_end: e,
    })
}

/// `e_t(0) = V e(0)` for the flat vmKdV flow, with
/// `V₀ₐ = u₂ₐ + ½⟨u,u⟩uₐ` and `V_ab = u₁ₐu_b − uₐu₁_b`.
fn base_generator(u: &[f64], u1: &[f64], u2: &[f64]) -> DMatrix<f64> {
    let m = u.len();
    let n2: f64 = u.iter().map(|v| v * v).sum();
    let mut v = DMatrix::zeros(m + 1, m + 1);
    for a in 0..m {
        let t = u2[a] + 0.5 * n2 * u[a];
        v[(0, a + 1)] = t;
        v[(a + 1, 0)] = -t;
        for b in 0..m {
            v[(a + 1, b + 1)] = u1[a] * u[b] - u[a] * u1[b];
        }
    }
    v
}

/// Cubic Lagrange interpolation of samples at integer nodes, evaluated at
/// `k + 1/2` (clamped to the available nodes at the ends).
fn midpoint<T>(vals: &[T], k: usize) -> T
where
    T: Clone + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let len = vals.len();
    if len < 4 {
        return (vals[k].clone() + vals[(k + 1).min(len - 1)].clone()) * 0.5;
    }
    let start = k.saturating_sub(1).min(len - 4);
    let xs: Vec<f64> = (start..start + 4).map(|i| i as f64).collect();
    let x = k as f64 + 0.5;
    let mut acc: Option<T> = None;
    for (q, xq) in xs.iter().enumerate() {
        let mut w = 1.0;
        for (r, xr) in xs.iter().enumerate() {
            if r != q {
                w *= (x - xr) / (xq - xr);
            }
        }
        let term = vals[start + q].clone() * w;
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    acc.expect("four nodes")
}

/// Integral of the cubic interpolant over `[k, k+1]`, in units of the node
/// spacing (the fourth-order Adams–Moulton-type weights, clamped at ends).
fn step_integral<T>(vals: &[T], k: usize) -> T
where
    T: Clone + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let len = vals.len();
    if len < 4 {
        return (vals[k].clone() + vals[k + 1].clone()) * 0.5;
    }
    let start = k.saturating_sub(1).min(len - 4);
    let weights: [f64; 4] = match k - start {
        0 => [9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0],
        1 => [-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0],
        _ => [1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 9.0 / 24.0],
    };
    let mut acc = vals[start].clone() * weights[0];
    for q in 1..4 {
        acc = acc + vals[start + q].clone() * weights[q];
    }
    acc
}

/// Output of [`evolve_curve`].
#[derive(Clone, Debug)]
pub struct CurveEvolution {
    pub times: Vec<f64>,
    /// Frames re-derived from each curvature snapshot.
    pub states: Vec<FrameState>,
    /// The curve advanced by its own velocity field.
    pub curves: Vec<Vec<DVector<f64>>>,
    /// `max | |γ_x| − 1 |` of the advanced curve per snapshot.
    pub arc_length_defect: Vec<f64>,
    /// Sup-difference between curvatures recomputed from the advanced curve
    /// and the flow snapshot.
    pub curvature_drift: Vec<f64>,
}

/// The velocity `½⟨u,u⟩ e₁ + Σ u₁ₐ e_{a+1}` along a frame state.
fn velocity(state: &FrameState) -> Vec<DVector<f64>> {
    let ux = state.u.derivative(1);
    let n2 = norm_squared(&state.u);
    state
        .frames
        .iter()
        .enumerate()
        .map(|(m, e)| {
            let mut v = e.row(0).transpose() * (0.5 * n2[m]);
            for a in 0..state.u.dims() {
                v += e.row(a + 1).transpose() * ux.component(a)[m];
            }
            v
        })
        .collect()
}

/// Natural curvatures of a sampled curve: the tangent by finite
/// differences, the normals carried along by double reflection from `normals0`
/// (rows, orthogonal to the tangent at `x = 0`).
pub fn curvatures_from_curve(
    grid: &SpectralGrid,
    gamma: &[DVector<f64>],
    normals0: &DMatrix<f64>,
) -> Result<GridFunction> {
    let dx = grid.dx();
    let dg = fd_derivative(gamma, dx);
    let tangents: Vec<DVector<f64>> = dg.iter().map(|v| v.normalize()).collect();
    let dt = fd_derivative(&tangents, dx);
    let m = normals0.nrows();
    let mut normals: Vec<DVector<f64>> = (0..m).map(|a| normals0.row(a).transpose()).collect();
    let mut comps = vec![vec![0.0; gamma.len()]; m];
    for k in 0..gamma.len() {
        if k > 0 {
            let v1 = &gamma[k] - &gamma[k - 1];
            let c1 = v1.dot(&v1);
            let t_l: DVector<f64> = &tangents[k - 1] - &v1 * (2.0 / c1 * v1.dot(&tangents[k - 1]));
            let v2 = &tangents[k] - &t_l;
            let c2 = v2.dot(&v2);
            for nrm in normals.iter_mut() {
                let r_l = &*nrm - &v1 * (2.0 / c1 * v1.dot(nrm));
                *nrm = if c2 > 0.0 { &r_l - &v2 * (2.0 / c2 * v2.dot(&r_l)) } else { r_l };
            }
        }
        for (a, nrm) in normals.iter().enumerate() {
            comps[a][k] = dt[k].dot(nrm);
        }
    }
    GridFunction::new(grid.clone(), comps)
}

/// Advance a curve under the flat vmKdV flow recorded in `traj`: the base
/// point and frame at `x = 0` follow their own ODE, the frames are re-derived
/// from each snapshot, and every curve point is advanced by the velocity
/// field (fourth order in the snapshot spacing).
pub fn evolve_curve(traj: &FlowTrajectory, initial: &FrameState) -> Result<CurveEvolution> {
    evolve_curve_with(traj, initial, CONSISTENCY_TOLERANCE)
}

pub fn evolve_curve_with(traj: &FlowTrajectory, initial: &FrameState, tolerance: f64) -> Result<CurveEvolution> {
    if traj.kappa_c != 0.0 {
        return Err(Error::InvalidArgument("curve reconstruction needs a flat (kappa_c = 0) flow".into()));
    }
    if initial.u.max_abs_diff(&traj.snapshots[0]) > 1e-12 {
        return Err(Error::InvalidArgument("initial frame state does not match the first snapshot".into()));
    }
    let tau = traj.snapshot_dt();
    let gens: Vec<DMatrix<f64>> = traj
        .snapshots
        .iter()
        .map(|u| {
            let u1 = u.derivative(1);
            let u2 = u.derivative(2);
            let at0 = |g: &GridFunction| -> Vec<f64> { g.components().iter().map(|c| c[0]).collect() };
            base_generator(&at0(u), &at0(&u1), &at0(&u2))
        })
        .collect();

    // base frame at x = 0
    let mut bases = vec![initial.frames[0].clone()];
    for k in 0..traj.len() - 1 {
        let e = &bases[k];
        let vm = midpoint(&gens, k);
        let k1 = &gens[k] * e;
        let k2 = &vm * (e + &k1 * (tau / 2.0));
        let k3 = &vm * (e + &k2 * (tau / 2.0));
        let k4 = &gens[k + 1] * (e + &k3 * tau);
        let next = e + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (tau / 6.0);
        bases.push(nearest_orthogonal(&next));
    }

    let mut states = Vec::with_capacity(traj.len());
    let mut vels = Vec::with_capacity(traj.len());
    for (u, e0) in traj.snapshots.iter().zip(&bases) {
        // the base point is fixed up after the velocities are known
        let st = reconstruct_frame(u, &initial.gamma[0], e0)?;
        vels.push(velocity(&st));
        states.push(st);
    }

    let npts = traj.grid().n();
    let mut curves = vec![initial.gamma.clone()];
    for k in 0..traj.len() - 1 {
        let prev = &curves[k];
        let next: Vec<DVector<f64>> = (0..npts)
            .map(|m| {
                let column: Vec<DVector<f64>> = vels.iter().map(|v| v[m].clone()).collect();
                &prev[m] + step_integral(&column, k) * tau
            })
            .collect();
        curves.push(next);
    }

    let mut arc = Vec::with_capacity(traj.len());
    let mut drift = Vec::with_capacity(traj.len());
    for (k, curve) in curves.iter().enumerate() {
        let dg = fd_derivative(curve, traj.grid().dx());
        arc.push(dg.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max));
        let normals = bases[k].rows(1, initial.n() - 1).into_owned();
        let recomputed = curvatures_from_curve(traj.grid(), curve, &normals)?;
        let d = recomputed.max_abs_diff(&traj.snapshots[k]);
        if d > tolerance {
            return Err(Error::ConsistencyDrift { drift: d, tolerance });
        }
        drift.push(d);
        let shift = &curve[0] - &states[k].gamma[0];
        let st = &mut states[k];
        for g in st.gamma.iter_mut() {
            *g += &shift;
        }
        st.gamma_end += &shift;
    }
    Ok(CurveEvolution {
        times: traj.times.clone(),
        states,
        curves,
        arc_length_defect: arc,
        curvature_drift: drift,
    })
}

/// Standard initial frame: `γ(0) = 0`, `e(0) = I`.
pub fn standard_frame(u: &GridFunction) -> Result<FrameState> {
    let n = u.dims() + 1;
    reconstruct_frame(u, &DVector::zeros(n), &DMatrix::identity(n, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_weights_integrate_cubics() {
        let f = |t: f64| 1.0 + t - 2.0 * t * t + 0.5 * t * t * t;
        let big_f = |t: f64| t + t * t / 2.0 - 2.0 * t * t * t / 3.0 + t.powi(4) / 8.0;
        let vals: Vec<f64> = (0..6).map(|k| f(k as f64)).collect();
        for k in 0..5 {
            let exact = big_f(k as f64 + 1.0) - big_f(k as f64);
            assert!((step_integral(&vals, k) - exact).abs() < 1e-12, "{k}");
            let mid = f(k as f64 + 0.5);
            assert!((midpoint(&vals, k) - mid).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_factor_is_orthogonal() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, -0.05, 1.02, 0.2, 0.0, -0.2, 0.99]);
        let q = nearest_orthogonal(&m);
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).amax() < 1e-14);
    }
}
