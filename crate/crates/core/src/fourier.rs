//! Momentum-space view of amplitude fields: the scaled DFT, Parseval, the
//! spectral capacity, mass-squared and the Fourier information `K_F`.
//!
//! Axis 0 is time. Its momentum is `℘⁰ = E/c` and it enters the phase with
//! `+`, the spatial axes with `−`. On a grid of extent `L_a` the momenta are
//! `℘_a = 2πħ s / L_a` for signed bin index `s`, and the transform carries
//! the factor `(2πħ)^{-d/2} Π h_a`, which makes the discrete Parseval
//! identity exact. Phases are measured from the first cell centre.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft::{bin_of, fft_nd, signed_index, Direction};
use crate::error::{Error, Result};
use crate::grid::{spectral_gradients, Boundary, GridSpec};
use crate::kinematic::{AmplitudeField, NORM_TOL};
use crate::report::MatrixData;
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0, c: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, c: f64) -> Result<Self> {
        let k = Self { hbar, c };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite() && self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "physical constants must be positive, got hbar={} c={}",
                self.hbar, self.c
            )));
        }
        Ok(())
    }
}

/// `N` complex spectra `q̃_n` on the grid conjugate to `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumField {
    grid: GridSpec,
    constants: PhysicalConstants,
    components: Vec<Vec<Complex64>>,
    /// Notes on approximations made by the transform.
    pub warnings: Vec<String>,
    /// Fraction of `Σ∫q²` sitting in boundary cells of a truncated grid.
    pub edge_mass: f64,
}

fn directions(d: usize, forward: bool) -> Vec<Direction> {
    (0..d)
        .map(|a| match (a == 0, forward) {
            (true, true) | (false, false) => Direction::Inverse,
            _ => Direction::Forward,
        })
        .collect()
}

impl MomentumField {
    pub fn new(
        grid: GridSpec,
        constants: PhysicalConstants,
        components: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        constants.validate()?;
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "field needs at least one component".into(),
            ));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    found: c.len(),
                });
            }
        }
        Ok(Self {
            grid,
            constants,
            components,
            warnings: Vec::new(),
            edge_mass: 0.0,
        })
    }

    /// A single occupied bin at signed indices `bins`, holding spectral mass
    /// `mass = |q̃|² Δ℘^d`.
    pub fn single_mode(
        grid: GridSpec,
        constants: PhysicalConstants,
        bins: &[i64],
        mass: f64,
    ) -> Result<Self> {
        if bins.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: bins.len(),
            });
        }
        let mut multi = Vec::with_capacity(bins.len());
        for (a, &s) in bins.iter().enumerate() {
            let n = grid.points()[a];
            if signed_index(bin_of(s, n), n) != s {
                return Err(Error::InvalidArgument(format!(
                    "mode {s} is not resolved by {n} points on axis {a}"
                )));
            }
            multi.push(bin_of(s, n));
        }
        let zeros = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut f = Self::new(grid, constants, vec![zeros])?;
        let idx = f.grid.ravel(&multi);
        f.components[0][idx] = Complex64::new((mass / f.measure()).sqrt(), 0.0);
        Ok(f)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn channel_count(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, n: usize) -> &[Complex64] {
        &self.components[n]
    }

    /// Momentum spacing `2πħ / L_a`.
    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.constants.hbar / self.grid.length(axis)
    }

    /// `Π_a Δ℘_a`.
    pub fn measure(&self) -> f64 {
        (0..self.grid.dim()).map(|a| self.spacing(a)).product()
    }

    /// Momentum of bin `m` along `axis` (`℘⁰ = E/c` on axis 0).
    pub fn momentum(&self, axis: usize, m: usize) -> f64 {
        self.spacing(axis) * signed_index(m, self.grid.points()[axis]) as f64
    }

    pub fn momenta(&self, idx: usize) -> Vec<f64> {
        let m = self.grid.unravel(idx);
        (0..self.grid.dim())
            .map(|a| self.momentum(a, m[a]))
            .collect()
    }

    /// `E = c ℘⁰` of bin `idx`.
    pub fn energy(&self, idx: usize) -> f64 {
        self.constants.c * self.momenta(idx)[0]
    }

    /// `E²/c² − |℘⃗|²`.
    pub fn minkowski_weight(&self, idx: usize) -> f64 {
        let p = self.momenta(idx);
        p[0] * p[0] - p[1..].iter().map(|v| v * v).sum::<f64>()
    }

    /// `E²/c² + |℘⃗|²`.
    pub fn euclidean_weight(&self, idx: usize) -> f64 {
        self.momenta(idx).iter().map(|v| v * v).sum()
    }

    fn weighted_sum<W: Fn(usize) -> f64 + Sync>(&self, w: W) -> f64 {
        let per: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let terms: Vec<f64> = (0..c.len())
                    .into_par_iter()
                    .map(|i| c[i].norm_sqr() * w(i))
                    .collect();
                self.measure() * pairwise_sum(&terms)
            })
            .collect();
        per.iter().sum()
    }

    /// `Σ_n ∫ |q̃_n|²`.
    pub fn total_mass(&self) -> f64 {
        self.weighted_sum(|_| 1.0)
    }

    /// `(1/N) Σ_n ∫ |q̃_n|²`.
    pub fn norm(&self) -> f64 {
        self.total_mass() / self.channel_count() as f64
    }

    /// `Σ_n ∫ |q̃_n|² (E²/c² − |℘⃗|²)`.
    pub fn spectral_sum(&self) -> f64 {
        self.weighted_sum(|i| self.minkowski_weight(i))
    }

    /// The all-plus counterpart of [`spectral_sum`](Self::spectral_sum).
    pub fn euclidean_spectral_sum(&self) -> f64 {
        self.weighted_sum(|i| self.euclidean_weight(i))
    }

    /// `max |q̃(−℘) − conj q̃(℘)|`.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let g = &self.grid;
        let d = g.dim();
        self.components
            .iter()
            .map(|c| {
                (0..c.len())
                    .map(|i| {
                        let m = g.unravel(i);
                        let neg: Vec<usize> = (0..d)
                            .map(|a| {
                                let n = g.points()[a];
                                (n - m[a]) % n
                            })
                            .collect();
                        (c[g.ravel(&neg)] - c[i].conj()).norm()
                    })
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max)
    }
}

fn edge_fraction(f: &AmplitudeField) -> f64 {
    let g = f.grid();
    let d = g.dim();
    let mut edge = 0.0;
    let mut total = 0.0;
    for c in f.components() {
        for (i, v) in c.iter().enumerate() {
            let m = g.unravel(i);
            let w = v * v;
            total += w;
            if (0..d).any(|a| m[a] == 0 || m[a] + 1 == g.points()[a]) {
                edge += w;
            }
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// `q̃_n(℘) = (2πħ)^{-d/2} Σ_x h^d q_n(x) e^{i(x⁰℘₀ − Σ x^l ℘^l)/ħ}`.
pub fn forward_transform(
    f: &AmplitudeField,
    constants: PhysicalConstants,
) -> Result<MomentumField> {
    constants.validate()?;
    let grid = f.grid().clone();
    let d = grid.dim();
    let scale =
        (2.0 * std::f64::consts::PI * constants.hbar).powf(-(d as f64) / 2.0) * grid.cell_volume();
    let dirs = directions(d, true);
    let components: Vec<Vec<Complex64>> = f
        .components()
        .par_iter()
        .map(|c| {
            let mut buf: Vec<Complex64> =
                c.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect();
            fft_nd(&mut buf, grid.points(), &dirs);
            buf
        })
        .collect();
    let mut out = MomentumField::new(grid, constants, components)?;
    if f.grid().boundary() == Boundary::Truncated {
        out.edge_mass = edge_fraction(f);
        out.warnings.push(format!(
            "truncated grid transformed as periodic; boundary cells hold mass fraction {:.3e}",
            out.edge_mass
        ));
    }
    Ok(out)
}

/// Inverse of [`forward_transform`], returning complex amplitudes.
pub fn inverse_transform(field: &MomentumField) -> Vec<Vec<Complex64>> {
    let grid = &field.grid;
    let d = grid.dim();
    let scale = (2.0 * std::f64::consts::PI * field.constants.hbar).powf(-(d as f64) / 2.0)
        * field.measure();
    let dirs = directions(d, false);
    field
        .components
        .par_iter()
        .map(|c| {
            let mut buf: Vec<Complex64> = c.iter().map(|v| v * scale).collect();
            fft_nd(&mut buf, grid.points(), &dirs);
            buf
        })
        .collect()
}

/// Real part of the inverse transform and the largest discarded imaginary
/// part.
pub fn inverse_real(field: &MomentumField) -> Result<(AmplitudeField, f64)> {
    let comps = inverse_transform(field);
    let imag = comps
        .iter()
        .flat_map(|c| c.iter().map(|z| z.im.abs()))
        .fold(0.0f64, f64::max);
    let real = comps
        .into_iter()
        .map(|c| c.into_iter().map(|z| z.re).collect())
        .collect();
    Ok((AmplitudeField::new(field.grid.clone(), real)?, imag))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsevalReport {
    /// `Σ_n ∫ q_n²`.
    pub lhs: f64,
    /// `Σ_n ∫ |q̃_n|²`.
    pub rhs: f64,
    pub diff: f64,
    /// `∫ q_n q_m` over the grid.
    pub position_inner: MatrixData,
    /// `Re ∫ q̃_n* q̃_m` over the momentum grid.
    pub momentum_inner: MatrixData,
    pub max_pair_diff: f64,
    /// `max |q − inverse(forward(q))|`.
    pub round_trip: f64,
}

pub fn parseval_check(f: &AmplitudeField, field: &MomentumField) -> Result<ParsevalReport> {
    if field.channel_count() != f.channel_count() || field.grid() != f.grid() {
        return Err(Error::InvalidArgument(
            "momentum field does not belong to this amplitude field".into(),
        ));
    }
    let n = f.channel_count();
    let g = f.grid();
    let mut px = nalgebra::DMatrix::zeros(n, n);
    let mut pp = nalgebra::DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let x: Vec<f64> = f
                .component(a)
                .iter()
                .zip(f.component(b))
                .map(|(u, v)| u * v)
                .collect();
            let p: Vec<f64> = field.components[a]
                .iter()
                .zip(&field.components[b])
                .map(|(u, v)| (u.conj() * v).re)
                .collect();
            px[(a, b)] = g.integrate(&x);
            px[(b, a)] = px[(a, b)];
            pp[(a, b)] = field.measure() * pairwise_sum(&p);
            pp[(b, a)] = pp[(a, b)];
        }
    }
    let lhs = px.trace();
    let rhs = field.total_mass();
    let back = inverse_transform(field);
    let round_trip = back
        .iter()
        .zip(f.components())
        .flat_map(|(z, q)| {
            z.iter()
                .zip(q)
                .map(|(z, q)| (z - Complex64::new(*q, 0.0)).norm())
        })
        .fold(0.0f64, f64::max);
    Ok(ParsevalReport {
        lhs,
        rhs,
        diff: (lhs - rhs).abs(),
        max_pair_diff: (&px - &pp).amax(),
        position_inner: MatrixData::from(&px),
        momentum_inner: MatrixData::from(&pp),
        round_trip,
    })
}

/// `I = (4/ħ²) Σ_n ∫ |q̃_n|² (E²/c² − |℘⃗|²)`.
pub fn momentum_capacity(field: &MomentumField) -> f64 {
    4.0 / field.constants.hbar.powi(2) * field.spectral_sum()
}

/// `m² = (1/(N c²)) Σ_n ∫ |q̃_n|² (E²/c² − |℘⃗|²)`; needs a normalized field.
pub fn mass_squared(field: &MomentumField) -> Result<f64> {
    let measured = field.norm();
    if (measured - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { measured });
    }
    Ok(field.spectral_sum() / (field.channel_count() as f64 * field.constants.c.powi(2)))
}

/// `I = 4N (mc/ħ)²`.
pub fn free_particle_capacity(m: f64, n: usize, constants: PhysicalConstants) -> Result<f64> {
    constants.validate()?;
    if m < 0.0 || m.is_nan() {
        return Err(Error::NegativeMass(m));
    }
    Ok(4.0 * n as f64 * (m * constants.c / constants.hbar).powi(2))
}

/// Where the mass in `k_F` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MassSource {
    /// `m²` from [`mass_squared`] of the same field.
    SelfConsistent,
    /// An imposed `m`.
    External { mass: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierInformation {
    /// `K_F = ∫ k_F`.
    pub k_f: f64,
    #[serde(skip)]
    pub density: Vec<f64>,
    /// `m²` used in `k_F`.
    pub mass_squared: f64,
    /// `m²` of the field itself.
    pub field_mass_squared: f64,
    pub position_capacity: f64,
    pub momentum_capacity: f64,
    /// `4N (m_field² − m²) c²/ħ²`.
    pub predicted: f64,
}

/// `k_F = 4 Σ_n [Σ_ν η^{νν} |∂_ν q_n|² − (mc/ħ)² q_n²]` with spectral
/// derivatives, on a periodic grid.
pub fn fourier_information(
    f: &AmplitudeField,
    constants: PhysicalConstants,
    mass: MassSource,
) -> Result<FourierInformation> {
    let field = forward_transform(f, constants)?;
    let field_m2 = mass_squared(&field)?;
    let m2 = match mass {
        MassSource::SelfConsistent => field_m2,
        MassSource::External { mass } => mass * mass,
    };
    let g = f.grid();
    let d = g.dim();
    let k2 = m2 * (constants.c / constants.hbar).powi(2);
    let mut kinetic = vec![0.0; g.len()];
    let mut weight = vec![0.0; g.len()];
    for c in f.components() {
        let grads = spectral_gradients(g, c)?;
        kinetic.par_iter_mut().enumerate().for_each(|(i, out)| {
            *out += 4.0
                * (0..d)
                    .map(|a| if a == 0 { 1.0 } else { -1.0 } * grads[a][i].norm_sqr())
                    .sum::<f64>();
        });
        for (w, v) in weight.iter_mut().zip(c) {
            *w += 4.0 * v * v;
        }
    }
    let density: Vec<f64> = kinetic
        .iter()
        .zip(&weight)
        .map(|(k, w)| k - k2 * w)
        .collect();
    let n = f.channel_count() as f64;
    let position_capacity = g.integrate(&kinetic);
    Ok(FourierInformation {
        k_f: g.integrate(&density),
        density,
        mass_squared: m2,
        field_mass_squared: field_m2,
        position_capacity,
        momentum_capacity: momentum_capacity(&field),
        predicted: 4.0 * n * (field_m2 - m2) * (constants.c / constants.hbar).powi(2),
    })
}

/// `max |□q + (mc/ħ)² q| / max |q|` with `□ = Σ_ν η^{νν} ∂_ν²`, spectral.
pub fn klein_gordon_residual(
    f: &AmplitudeField,
    constants: PhysicalConstants,
    mass: f64,
) -> Result<f64> {
    let g = f.grid();
    if g.boundary() != Boundary::Periodic {
        return Err(Error::InvalidArgument(
            "spectral derivatives need a periodic grid".into(),
        ));
    }
    let d = g.dim();
    let k2 = (mass * constants.c / constants.hbar).powi(2);
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for c in f.components() {
        let mut spec: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut spec, g.points(), &vec![Direction::Forward; d]);
        for (idx, v) in spec.iter_mut().enumerate() {
            let m = g.unravel(idx);
            let box_sym: f64 = (0..d)
                .map(|a| {
                    let k = g.wavenumber(a, m[a]);
                    if a == 0 {
                        -k * k
                    } else {
                        k * k
                    }
                })
                .sum();
            *v *= (box_sym + k2) / g.len() as f64;
        }
        fft_nd(&mut spec, g.points(), &vec![Direction::Inverse; d]);
        worst = spec.iter().fold(worst, |w, z| w.max(z.norm()));
        peak = c.iter().fold(peak, |p, v| p.max(v.abs()));
    }
    Ok(if peak > 0.0 { worst / peak } else { worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TachyonReport {
    pub mass_squared: f64,
    pub capacity: f64,
    /// `m² < 0`.
    pub tachyon: bool,
    /// `m² ≥ 0 ⇔ I ≥ 0`.
    pub equivalence_holds: bool,
    pub pass: bool,
}

pub fn tachyon_check(field: &MomentumField) -> Result<TachyonReport> {
    let m2 = mass_squared(field)?;
    let capacity = momentum_capacity(field);
    Ok(TachyonReport {
        mass_squared: m2,
        capacity,
        tachyon: m2 < 0.0,
        equivalence_holds: (m2 >= 0.0) == (capacity >= 0.0),
        pass: m2 >= 0.0,
    })
}
