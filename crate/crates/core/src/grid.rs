//! Uniform cell-centred grids, midpoint quadrature and derivative stencils.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft::{fft_nd, signed_index, Direction};
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Truncated,
}

/// Derivative discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// Second-order central differences, one-sided at truncated edges.
    #[default]
    Central,
    /// Exact differentiation of the trigonometric interpolant; periodic
    /// grids only.
    Spectral,
}

/// Axis `a` covers `[lo_a, hi_a)` with `points_a` cells; nodes sit at cell
/// centres `lo + (i + 1/2) h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    points: Vec<usize>,
    boundary: Boundary,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, points: Vec<usize>, boundary: Boundary) -> Result<Self> {
        let d = points.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "grid dimension must be 1..={MAX_DIM}, got {d}"
            )));
        }
        if lo.len() != d || hi.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: lo.len().min(hi.len()),
            });
        }
        for a in 0..d {
            if points[a] == 0 {
                return Err(Error::InvalidArgument(format!("axis {a} has no points")));
            }
            if !(lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]) {
                return Err(Error::InvalidArgument(format!(
                    "axis {a} extent [{}, {}) is empty",
                    lo[a], hi[a]
                )));
            }
        }
        Ok(Self {
            lo,
            hi,
            points,
            boundary,
        })
    }

    /// The same `[lo, hi)` and point count on every axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, points: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![points; dim], boundary)
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self {
            boundary,
            ..self.clone()
        }
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length(axis) / self.points[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.length(a)).product()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + (i as f64 + 0.5) * self.spacing(axis)
    }

    pub fn unravel(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        for a in (0..self.dim()).rev() {
            out[a] = idx % self.points[a];
            idx /= self.points[a];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.points)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Coordinates of cell `idx` (only the first `dim` entries are used).
    pub fn position(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.unravel(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            x[a] = self.coordinate(a, m[a]);
        }
        x
    }

    /// Evaluate `f` at every cell centre.
    pub fn sample<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let d = self.dim();
        (0..self.len())
            .into_par_iter()
            .map(|i| f(&self.position(i)[..d]))
            .collect()
    }

    /// Midpoint rule `Π h · Σ values`, summed in a fixed tree order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_volume() * pairwise_sum(values)
    }

    pub fn check_field(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        Ok(())
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for a {}-dimensional grid",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Angular wavenumber `2π s / L` of bin `m` along `axis`.
    pub fn wavenumber(&self, axis: usize, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * signed_index(m, self.points[axis]) as f64 / self.length(axis)
    }
}

/// `∂f/∂x^axis` by central differences.
pub fn gradient(grid: &GridSpec, values: &[f64], axis: usize) -> Result<Vec<f64>> {
    grid.check_field(values)?;
    grid.check_axis(axis)?;
    let n = grid.points[axis];
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} needs at least 3 points for a gradient, has {n}"
        )));
    }
    let s = grid.stride(axis);
    let h = grid.spacing(axis);
    let periodic = grid.boundary == Boundary::Periodic;
    Ok((0..values.len())
        .into_par_iter()
        .map(|idx| {
            let i = (idx / s) % n;
            if i > 0 && i + 1 < n {
                (values[idx + s] - values[idx - s]) / (2.0 * h)
            } else if periodic {
                let (up, down) = if i == 0 {
                    (idx + s, idx + (n - 1) * s)
                } else {
                    (idx - (n - 1) * s, idx - s)
                };
                (values[up] - values[down]) / (2.0 * h)
            } else if i == 0 {
                (values[idx + s] - values[idx]) / h
            } else {
                (values[idx] - values[idx - s]) / h
            }
        })
        .collect())
}

/// Spectral derivatives along every axis. The Nyquist bin is kept, so the
/// results are complex in general; their squared moduli satisfy Parseval
/// against the momentum-space weights.
pub fn spectral_gradients(grid: &GridSpec, values: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    grid.check_field(values)?;
    if grid.boundary != Boundary::Periodic {
        return Err(Error::InvalidArgument(
            "spectral derivatives need a periodic grid".into(),
        ));
    }
    let d = grid.dim();
    let shape = grid.points.clone();
    let mut spec: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut spec, &shape, &vec![Direction::Forward; d]);
    let norm = 1.0 / grid.len() as f64;
    (0..d)
        .into_par_iter()
        .map(|axis| {
            let s = grid.stride(axis);
            let n = grid.points[axis];
            let mut buf: Vec<Complex64> = spec
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    let k = grid.wavenumber(axis, (idx / s) % n);
                    v * Complex64::new(0.0, k * norm)
                })
                .collect();
            fft_nd(&mut buf, &shape, &vec![Direction::Inverse; d]);
            Ok(buf)
        })
        .collect()
}

/// `|∂_a f|²` per cell for each axis `a`.
pub fn squared_gradients(
    grid: &GridSpec,
    values: &[f64],
    stencil: Stencil,
) -> Result<Vec<Vec<f64>>> {
    match stencil {
        Stencil::Central => (0..grid.dim())
            .map(|a| {
                Ok(gradient(grid, values, a)?
                    .into_iter()
                    .map(|g| g * g)
                    .collect())
            })
            .collect(),
        Stencil::Spectral => Ok(spectral_gradients(grid, values)?
            .into_iter()
            .map(|g| g.into_iter().map(|z| z.norm_sqr()).collect())
            .collect()),
    }
}

/// Estimated convergence order from errors at spacing `h` and `h/2`.
pub fn observed_order(coarse_error: f64, fine_error: f64) -> f64 {
    (coarse_error.abs() / fine_error.abs()).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spacing_and_volume() {
        let g = GridSpec::new(
            vec![0.0, -1.0],
            vec![2.0, 1.0],
            vec![4, 8],
            Boundary::Periodic,
        )
        .unwrap();
        assert_eq!(g.spacing(0), 0.5);
        assert_eq!(g.spacing(1), 0.25);
        assert_eq!(g.cell_volume(), 0.125);
        assert_eq!(g.len(), 32);
        assert_eq!(g.coordinate(0, 0), 0.25);
        assert_eq!(g.ravel(&g.unravel(13)[..2]), 13);
        assert!(GridSpec::cube(5, 0.0, 1.0, 4, Boundary::Periodic).is_err());
        assert!(GridSpec::cube(1, 1.0, 1.0, 4, Boundary::Periodic).is_err());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        for b in [Boundary::Periodic, Boundary::Truncated] {
            let g = GridSpec::cube(2, 0.0, 1.0, 8, b).unwrap();
            let f = vec![3.0; g.len()];
            for a in 0..2 {
                assert!(gradient(&g, &f, a).unwrap().iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn gradient_of_linear_is_exact_inside() {
        let g = GridSpec::cube(1, -1.0, 1.0, 50, Boundary::Truncated).unwrap();
        let f = g.sample(|x| x[0]);
        let d = gradient(&g, &f, 0).unwrap();
        for v in &d {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_sine() {
        let g = GridSpec::cube(1, 0.0, 2.0 * PI, 256, Boundary::Periodic).unwrap();
        let f = g.sample(|x| x[0].sin());
        let d = gradient(&g, &f, 0).unwrap();
        let err = (0..g.len())
            .map(|i| (d[i] - g.coordinate(0, i).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3);
        // refinement oracle: the error scales like h²
        let g2 = GridSpec::cube(1, 0.0, 2.0 * PI, 512, Boundary::Periodic).unwrap();
        let f2 = g2.sample(|x| x[0].sin());
        let d2 = gradient(&g2, &f2, 0).unwrap();
        let err2 = (0..g2.len())
            .map(|i| (d2[i] - g2.coordinate(0, i).cos()).abs())
            .fold(0.0, f64::max);
        assert!((observed_order(err, err2) - 2.0).abs() < 0.05);
    }

    #[test]
    fn gradient_errors() {
        let g = GridSpec::cube(1, 0.0, 1.0, 2, Boundary::Periodic).unwrap();
        assert!(gradient(&g, &[0.0, 1.0], 0).is_err());
        let g = GridSpec::cube(1, 0.0, 1.0, 4, Boundary::Periodic).unwrap();
        assert!(gradient(&g, &[0.0; 4], 1).is_err());
        let t = g.with_boundary(Boundary::Truncated);
        assert!(spectral_gradients(&t, &[0.0; 4]).is_err());
    }

    #[test]
    fn spectral_derivative_of_mode_is_exact() {
        let g = GridSpec::new(
            vec![0.0, 0.0],
            vec![2.0 * PI, 1.0],
            vec![16, 8],
            Boundary::Periodic,
        )
        .unwrap();
        let f = g.sample(|x| (3.0 * x[0]).sin() * (2.0 * PI * x[1]).cos());
        let d = spectral_gradients(&g, &f).unwrap();
        for (i, (g0, g1)) in d[0].iter().zip(&d[1]).enumerate() {
            let x = g.position(i);
            let d0 = 3.0 * (3.0 * x[0]).cos() * (2.0 * PI * x[1]).cos();
            let d1 = -2.0 * PI * (3.0 * x[0]).sin() * (2.0 * PI * x[1]).sin();
            assert!((g0 - d0).norm() < 1e-12);
            assert!((g1 - d1).norm() < 1e-12);
        }
    }

    #[test]
    fn midpoint_integration() {
        let g = GridSpec::cube(1, 0.0, 1.0, 1000, Boundary::Truncated).unwrap();
        let v = g.sample(|x| x[0] * x[0]);
        assert!((g.integrate(&v) - 1.0 / 3.0).abs() < 1e-6);
    }
}
