use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance on the mean of data handed to the antiderivative.
pub const DEFAULT_MEAN_TOLERANCE: f64 = 1e-10;

/// Uniform periodic grid on `[0, length)` with FFT plans.
#[derive(Clone)]
pub struct SpectralGrid {
    n: usize,
    length: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl SpectralGrid {
    pub fn new(n: usize, length: f64) -> Result<SpectralGrid> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "grid size {n} must be a power of two >= 16"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("period length {length} must be positive")));
        }
        let mut planner = FftPlanner::new();
        Ok(SpectralGrid {
            n,
            length,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Signed integer wavenumber of FFT slot `j`.
    pub fn mode(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Angular wavenumber `2π k / L` of slot `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode(j) as f64 / self.length
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.n, "sample count does not match grid");
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    pub fn forward_complex(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform, normalized, real part.
    pub fn inverse(&self, mut hat: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut hat);
        let s = 1.0 / self.n as f64;
        hat.iter().map(|c| c.re * s).collect()
    }

    pub fn inverse_complex(&self, mut hat: Vec<Complex64>) -> Vec<Complex64> {
        self.inv.process(&mut hat);
        let s = 1.0 / self.n as f64;
        hat.iter().map(|c| c * s).collect()
    }

    /// Spectral derivative of order `k`.
    pub fn derivative(&self, f: &[f64], k: usize) -> Vec<f64> {
        if k == 0 {
            return f.to_vec();
        }
        let mut hat = self.forward(f);
        for (j, h) in hat.iter_mut().enumerate() {
            if k % 2 == 1 && self.is_nyquist(j) {
                *h = Complex64::new(0.0, 0.0);
                continue;
            }
            *h *= Complex64::new(0.0, self.wavenumber(j)).powu(k as u32);
        }
        self.inverse(hat)
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / f.len() as f64
    }

    /// Trapezoidal (spectrally accurate) integral over one period.
    pub fn integral(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dx()
    }

    /// Zero-mean antiderivative. Fails when `|mean| > tol·max|f|`.
    pub fn antiderivative(&self, f: &[f64], tol: f64) -> Result<Vec<f64>> {
        let mean = self.mean(f);
        let scale = sup_norm(f);
        if mean.abs() > tol * scale.max(f64::MIN_POSITIVE) && mean.abs() > 0.0 {
            return Err(Error::NonzeroMean {
                atom: String::from("<grid data>"),
                mean,
                tolerance: tol * scale,
            });
        }
        Ok(self.antiderivative_unchecked(f))
    }

    /// Zero-mean antiderivative of the mean-free part of `f`.
    pub fn antiderivative_unchecked(&self, f: &[f64]) -> Vec<f64> {
        let mut hat = self.forward(f);
        for (j, h) in hat.iter_mut().enumerate() {
            if j == 0 || self.is_nyquist(j) {
                *h = Complex64::new(0.0, 0.0);
            } else {
                *h /= Complex64::new(0.0, self.wavenumber(j));
            }
        }
        self.inverse(hat)
    }

    /// Trigonometric interpolation of `f` onto a grid `factor` times finer
    /// (the Nyquist mode is split evenly between `±N/2`).
    pub fn refine(&self, f: &[f64], factor: usize) -> Vec<f64> {
        let n = self.n;
        let big = n * factor;
        let hat = self.forward(f);
        let mut padded = vec![Complex64::new(0.0, 0.0); big];
        for (j, h) in hat.iter().enumerate() {
            if self.is_nyquist(j) {
                padded[j] += h * 0.5;
                padded[big - j] += h * 0.5;
            } else if j < n / 2 {
                padded[j] = *h;
            } else {
                padded[big - (n - j)] = *h;
            }
        }
        FftPlanner::new().plan_fft_inverse(big).process(&mut padded);
        padded.iter().map(|c| c.re / n as f64).collect()
    }

    /// Evaluate the trigonometric interpolant of `f` at arbitrary `x`.
    pub fn interpolate(&self, hat: &[Complex64], x: f64) -> f64 {
        let mut s = 0.0;
        for (j, h) in hat.iter().enumerate() {
            let w = if self.is_nyquist(j) { 0.5 } else { 1.0 };
            let ph = self.wavenumber(j) * x;
            s += w * (h.re * ph.cos() - h.im * ph.sin());
            if self.is_nyquist(j) {
                // the +N/2 partner of the Nyquist slot
                let ph = -ph;
                s += w * (h.re * ph.cos() - h.im * ph.sin());
            }
        }
        s / self.n as f64
    }
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Sampled periodic vector field: `components[c][i]` is component `c+1` at
/// grid point `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: SpectralGrid,
    components: Vec<Vec<f64>>,
}

impl GridFunction {
    pub fn new(grid: SpectralGrid, components: Vec<Vec<f64>>) -> Result<GridFunction> {
        if components.is_empty() {
            return Err(Error::Dimension("grid function needs at least one component".into()));
        }
        for c in &components {
            if c.len() != grid.n() {
                return Err(Error::Dimension(format!(
                    "component has {} samples, grid has {}",
                    c.len(),
                    grid.n()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGrid("non-finite sample".into()));
            }
        }
        Ok(GridFunction { grid, components })
    }

    pub fn zeros(grid: SpectralGrid, dims: usize) -> GridFunction {
        let n = grid.n();
        GridFunction {
            grid,
            components: vec![vec![0.0; n]; dims],
        }
    }

    /// Sample `f(x)` for each component.
    pub fn from_fn(grid: SpectralGrid, dims: usize, f: impl Fn(usize, f64) -> f64) -> GridFunction {
        let components = (0..dims)
            .map(|c| grid.xs().into_iter().map(|x| f(c, x)).collect())
            .collect();
        GridFunction { grid, components }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.components[c]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    pub fn derivative(&self, k: usize) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| self.grid.derivative(c, k))
                .collect(),
        }
    }

    pub fn antiderivative(&self, tol: f64) -> Result<GridFunction> {
        let components = self
            .components
            .iter()
            .map(|c| self.grid.antiderivative(c, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            components,
        })
    }

    pub fn scaled(&self, a: f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| a * v).collect())
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.components.iter().map(|c| sup_norm(c)).fold(0.0, f64::max)
    }

    /// Pointwise Euclidean norm `|f(x_i)|`.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        (0..self.grid.n())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c[i] * c[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["x".to_string()];
        header.extend((1..=self.dims()).map(|c| format!("comp{c}")));
        w.write_record(&header)?;
        for i in 0..self.grid.n() {
            let mut row = vec![format!("{:.17e}", self.grid.x(i))];
            row.extend(self.components.iter().map(|c| format!("{:.17e}", c[i])));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        crate::report::write_atomic(path, &bytes)
    }

    /// Read the `x,comp1,...` CSV layout. The period is inferred from the
    /// uniform spacing of the `x` column.
    pub fn read_csv(path: &Path) -> Result<GridFunction> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("x") || headers.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "{}: header must be x,comp1,...",
                path.display()
            )));
        }
        let dims = headers.len() - 1;
        let mut xs = Vec::new();
        let mut comps = vec![Vec::new(); dims];
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidGrid(format!("bad number {s:?}: {e}")))
            };
            xs.push(parse(&rec[0])?);
            for c in 0..dims {
                comps[c].push(parse(&rec[c + 1])?);
            }
        }
        if xs.len() < 2 {
            return Err(Error::InvalidGrid("too few rows".into()));
        }
        let h = xs[1] - xs[0];
        let length = h * xs.len() as f64;
        for (i, x) in xs.iter().enumerate() {
            if (x - xs[0] - i as f64 * h).abs() > 1e-9 * length {
                return Err(Error::InvalidGrid("x column is not uniformly spaced".into()));
            }
        }
        let grid = SpectralGrid::new(xs.len(), length)?;
        GridFunction::new(grid, comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_sine() {
        let g = SpectralGrid::new(64, 2.0 * PI).unwrap();
        let f: Vec<f64> = g.xs().iter().map(|x| (3.0 * x).sin()).collect();
        let d = g.derivative(&f, 1);
        for (x, v) in g.xs().iter().zip(&d) {
            assert!((v - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
        }
        let c = g.derivative(&vec![2.5; 64], 2);
        assert!(sup_norm(&c) < 1e-13);
    }

    #[test]
    fn antiderivative_requires_zero_mean() {
        let g = SpectralGrid::new(32, 4.0).unwrap();
        let f: Vec<f64> = g.xs().iter().map(|x| 1.0 + (PI * x / 2.0).cos()).collect();
        assert!(matches!(
            g.antiderivative(&f, DEFAULT_MEAN_TOLERANCE),
            Err(Error::NonzeroMean { .. })
        ));
        let f0: Vec<f64> = f.iter().map(|v| v - 1.0).collect();
        let a = g.antiderivative(&f0, DEFAULT_MEAN_TOLERANCE).unwrap();
        let back = g.derivative(&a, 1);
        for (p, q) in back.iter().zip(&f0) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(SpectralGrid::new(8, 1.0).is_err());
        assert!(SpectralGrid::new(48, 1.0).is_err());
        assert!(SpectralGrid::new(64, 0.0).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes_and_between() {
        let g = SpectralGrid::new(32, 2.0 * PI).unwrap();
        let f: Vec<f64> = g.xs().iter().map(|x| (2.0 * x).cos() + 0.3 * x.sin()).collect();
        let hat = g.forward(&f);
        for x in [0.0_f64, 0.1, 1.234, 5.9] {
            let exact = (2.0 * x).cos() + 0.3 * x.sin();
            assert!((g.interpolate(&hat, x) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let g = SpectralGrid::new(16, 2.0 * PI).unwrap();
        let f = GridFunction::from_fn(g, 2, |c, x| (c as f64 + 1.0) * x.sin());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        f.write_csv(&p).unwrap();
        let back = GridFunction::read_csv(&p).unwrap();
        assert_eq!(back.grid().n(), 16);
        assert!((back.grid().length() - 2.0 * PI).abs() < 1e-12);
        assert!(f.max_abs_diff(&back) < 1e-15);
    }
}
