//! Amplitude and probability fields on grids, the kinematic forms of the
//! channel capacity, Lorentz boosts of scalar amplitudes and the gauge-field
//! capacity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::channel_capacity;
use crate::grid::{gradient, squared_gradients, Boundary, GridSpec, Stencil, MAX_DIM};
use crate::metric::{BoostParameters, MetricKind, MetricSignature};
use crate::report::Inequality;
use crate::statmodel::{ExpectationMethod, ParameterVector, ParametricModel};

/// Tolerance of the normalization `(1/N) Σ_n ∫ q_n² = 1`.
pub const NORM_TOL: f64 = 1e-6;
/// Cells with `p < P_FLOOR · max p` are skipped by the `1/p` form.
pub const P_FLOOR: f64 = 1e-12;
/// Probabilities below `-NEGATIVE_P_TOL` are rejected.
pub const NEGATIVE_P_TOL: f64 = 1e-12;
/// Minimum density mass a grid must cover.
pub const MIN_COVERAGE: f64 = 1.0 - 1e-6;
/// Largest mass fraction a boost may push off the grid.
pub const MAX_BOOST_LOSS: f64 = 1e-3;

/// One-dimensional factor of a separable amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisProfile {
    /// `(2πσ²)^{-1/4} exp(-(x-c)²/4σ²)`, whose square is a unit Gaussian.
    Gaussian { center: f64, sigma: f64 },
    /// `1/√L`, constant along the axis.
    Uniform,
}

/// Analytic amplitude constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentSpec {
    /// Product of per-axis profiles.
    Gaussian {
        axes: Vec<AxisProfile>,
    },
    /// `√(2/V) cos(Σ k_a x_a + phase)` with `k_a = 2π m_a / L_a`.
    PlaneWave {
        modes: Vec<i64>,
        #[serde(default)]
        phase: f64,
    },
    Constant {
        value: f64,
    },
}

impl ComponentSpec {
    fn check(&self, grid: &GridSpec) -> Result<()> {
        let d = grid.dim();
        let len = match self {
            ComponentSpec::Gaussian { axes } => {
                for p in axes {
                    if let AxisProfile::Gaussian { sigma, .. } = p {
                        if sigma.is_nan() || *sigma <= 0.0 {
                            return Err(Error::InvalidArgument(format!(
                                "Gaussian sigma must be positive, got {sigma}"
                            )));
                        }
                    }
                }
                axes.len()
            }
            ComponentSpec::PlaneWave { modes, .. } => modes.len(),
            ComponentSpec::Constant { .. } => d,
        };
        if len != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: len,
            });
        }
        Ok(())
    }

    pub fn eval(&self, grid: &GridSpec, x: &[f64]) -> f64 {
        match self {
            ComponentSpec::Gaussian { axes } => axes
                .iter()
                .enumerate()
                .map(|(a, p)| match *p {
                    AxisProfile::Gaussian { center, sigma } => {
                        (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25)
                            * (-(x[a] - center).powi(2) / (4.0 * sigma * sigma)).exp()
                    }
                    AxisProfile::Uniform => grid.length(a).powf(-0.5),
                })
                .product(),
            ComponentSpec::PlaneWave { modes, phase } => {
                let arg: f64 = modes
                    .iter()
                    .enumerate()
                    .map(|(a, &m)| 2.0 * std::f64::consts::PI * m as f64 / grid.length(a) * x[a])
                    .sum();
                let scale = if modes.iter().all(|&m| m == 0) {
                    1.0
                } else {
                    2.0
                };
                (scale / grid.volume()).sqrt() * (arg + phase).cos()
            }
            ComponentSpec::Constant { value } => *value,
        }
    }
}

/// Relative mismatch of `f` across the periodic faces of `grid`.
fn wrap_jump<F: Fn(&[f64]) -> f64 + Sync>(grid: &GridSpec, f: F, scale: f64) -> f64 {
    let d = grid.dim();
    let mut worst = 0.0f64;
    for a in 0..d {
        let s = grid.stride(a);
        let n = grid.points()[a];
        let jump = (0..grid.len())
            .into_par_iter()
            .filter(|idx| (idx / s).is_multiple_of(n))
            .map(|idx| {
                let mut lo = grid.position(idx);
                let mut hi = lo;
                lo[a] = grid.lo()[a];
                hi[a] = grid.hi()[a];
                (f(&lo[..d]) - f(&hi[..d])).abs()
            })
            .reduce(|| 0.0, f64::max);
        worst = worst.max(jump);
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// `N` real amplitudes `q_n` on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeField {
    grid: GridSpec,
    components: Vec<Vec<f64>>,
    /// Parameter shifts `θ_n` the amplitudes were generated for, if any.
    #[serde(default)]
    pub shifts: Vec<Vec<f64>>,
    /// Largest relative jump across periodic faces, when known analytically.
    #[serde(default)]
    pub wrap_jump: Option<f64>,
}

impl AmplitudeField {
    /// A raw field; normalization is not enforced.
    pub fn new(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "field needs at least one component".into(),
            ));
        }
        for c in &components {
            grid.check_field(c)?;
        }
        Ok(Self {
            grid,
            components,
            shifts: Vec::new(),
            wrap_jump: None,
        })
    }

    /// A field that must satisfy the normalization within [`NORM_TOL`].
    pub fn normalized(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self> {
        let f = Self::new(grid, components)?;
        f.check_normalized()?;
        Ok(f)
    }

    pub fn from_specs(grid: GridSpec, specs: &[ComponentSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidArgument(
                "field needs at least one component".into(),
            ));
        }
        let mut components = Vec::with_capacity(specs.len());
        let mut jump = 0.0f64;
        for spec in specs {
            spec.check(&grid)?;
            let values = grid.sample(|x| spec.eval(&grid, x));
            if grid.boundary() == Boundary::Periodic {
                let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                jump = jump.max(wrap_jump(&grid, |x| spec.eval(&grid, x), scale));
            }
            components.push(values);
        }
        let mut f = Self::new(grid, components)?;
        if f.grid.boundary() == Boundary::Periodic {
            f.wrap_jump = Some(jump);
        }
        Ok(f)
    }

    pub fn with_shifts(mut self, shifts: Vec<Vec<f64>>) -> Self {
        self.shifts = shifts;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn channel_count(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, n: usize) -> &[f64] {
        &self.components[n]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// `(1/N) Σ_n ∫ q_n²`.
    pub fn norm(&self) -> f64 {
        let total: f64 = self
            .components
            .iter()
            .map(|c| {
                self.grid
                    .integrate(&c.iter().map(|v| v * v).collect::<Vec<_>>())
            })
            .sum();
        total / self.channel_count() as f64
    }

    pub fn check_normalized(&self) -> Result<()> {
        let measured = self.norm();
        if (measured - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { measured });
        }
        Ok(())
    }

    /// Rescale all components by one factor so that the discrete norm is 1.
    pub fn unit_normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::NotNormalized { measured: norm });
        }
        let s = norm.sqrt().recip();
        for c in &mut self.components {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
        Ok(self)
    }

    /// `p_n = q_n²`.
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.components
            .iter()
            .map(|c| c.iter().map(|v| v * v).collect())
            .collect()
    }

    /// Cyclic shift by whole cells along each axis.
    pub fn roll(&self, cells: &[i64]) -> Result<Self> {
        if cells.len() != self.grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dim(),
                found: cells.len(),
            });
        }
        let g = &self.grid;
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut out = vec![0.0; c.len()];
                for (idx, v) in c.iter().enumerate() {
                    let mut m = g.unravel(idx);
                    for a in 0..g.dim() {
                        m[a] = (m[a] as i64 + cells[a]).rem_euclid(g.points()[a] as i64) as usize;
                    }
                    out[g.ravel(&m[..g.dim()])] = *v;
                }
                out
            })
            .collect();
        Ok(Self {
            components,
            ..self.clone()
        })
    }
}

fn check_metric(grid: &GridSpec, metric: &MetricSignature) -> Result<()> {
    if metric.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: metric.dim(),
        });
    }
    Ok(())
}

fn contracted_gradient_integral(
    grid: &GridSpec,
    values: &[f64],
    metric: &MetricSignature,
    stencil: Stencil,
) -> Result<f64> {
    let sq = squared_gradients(grid, values, stencil)?;
    Ok(sq
        .iter()
        .enumerate()
        .map(|(a, s)| metric.sign(a) * grid.integrate(s))
        .sum())
}

/// `4 ∫ Σ_ν η^{νν} (∂_ν q_n)²` for each channel.
pub fn channel_capacities_from_amplitudes(
    f: &AmplitudeField,
    metric: &MetricSignature,
    stencil: Stencil,
) -> Result<Vec<f64>> {
    check_metric(f.grid(), metric)?;
    f.components()
        .par_iter()
        .map(|c| Ok(4.0 * contracted_gradient_integral(f.grid(), c, metric, stencil)?))
        .collect()
}

/// `I = 4 Σ_n ∫ Σ_ν η^{νν} (∂_ν q_n)²`.
pub fn capacity_from_amplitudes(
    f: &AmplitudeField,
    metric: &MetricSignature,
    stencil: Stencil,
) -> Result<f64> {
    Ok(channel_capacities_from_amplitudes(f, metric, stencil)?
        .iter()
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityCapacity {
    pub value: f64,
    pub per_channel: Vec<f64>,
    /// Cells skipped by the floor, summed over channels.
    pub skipped_cells: usize,
    /// `skipped_cells / (N · cells)`.
    pub skipped_fraction: f64,
    /// `Σ_n ∫_skipped p_n`.
    pub skipped_mass: f64,
}

/// `I = Σ_n ∫ (1/p_n) Σ_ν η^{νν} (∂_ν p_n)²`, skipping cells below the floor.
pub fn capacity_from_probabilities(
    grid: &GridSpec,
    probabilities: &[Vec<f64>],
    metric: &MetricSignature,
    stencil: Stencil,
) -> Result<ProbabilityCapacity> {
    check_metric(grid, metric)?;
    let mut per_channel = Vec::with_capacity(probabilities.len());
    let mut skipped_cells = 0;
    let mut skipped_mass = 0.0;
    for p in probabilities {
        grid.check_field(p)?;
        if let Some((cell, &value)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| **v < -NEGATIVE_P_TOL || v.is_nan())
        {
            return Err(Error::NegativeProbability { value, cell });
        }
        let floor = P_FLOOR * p.iter().fold(0.0f64, |m, v| m.max(*v));
        let sq = squared_gradients(grid, p, stencil)?;
        let density: Vec<f64> = (0..p.len())
            .into_par_iter()
            .map(|i| {
                if p[i] < floor || p[i] <= 0.0 {
                    0.0
                } else {
                    sq.iter()
                        .enumerate()
                        .map(|(a, s)| metric.sign(a) * s[i])
                        .sum::<f64>()
                        / p[i]
                }
            })
            .collect();
        let skipped: Vec<f64> = p
            .iter()
            .copied()
            .filter(|v| *v < floor || *v <= 0.0)
            .collect();
        skipped_cells += skipped.len();
        skipped_mass += grid.integrate(&skipped);
        per_channel.push(grid.integrate(&density));
    }
    let total_cells = grid.len() * probabilities.len().max(1);
    Ok(ProbabilityCapacity {
        value: per_channel.iter().sum(),
        per_channel,
        skipped_cells,
        skipped_fraction: skipped_cells as f64 / total_cells as f64,
        skipped_mass,
    })
}

/// `p(x) = (1/N) Σ_n q_n²(x)`.
pub fn mixture_density(f: &AmplitudeField) -> Vec<f64> {
    let n = f.channel_count() as f64;
    (0..f.grid().len())
        .into_par_iter()
        .map(|i| f.components().iter().map(|c| c[i] * c[i]).sum::<f64>() / n)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `Σ_n I_Fn` from the likelihood.
    pub statistical: f64,
    /// The probability form on the displacement grid.
    pub kinematic: f64,
    /// The amplitude form on the same grid.
    pub amplitude: f64,
    pub agreement: Inequality,
    /// Grid mass of each `p_n`.
    pub coverage: Vec<f64>,
    pub skipped_mass: f64,
    pub stencil: Stencil,
    pub points: Vec<usize>,
}

/// Densities of `x_n = y_n − θ_n` sampled on `grid`.
pub fn displacement_densities(
    model: &ParametricModel,
    theta: &ParameterVector,
    grid: &GridSpec,
) -> Result<Vec<Vec<f64>>> {
    model.check_shape(theta)?;
    if grid.dim() != model.obs_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.obs_dim(),
            found: grid.dim(),
        });
    }
    let k = model.obs_dim();
    (0..model.channel_count())
        .map(|n| {
            let ch = model.channel(n);
            let tn = theta.channel(n);
            Ok(grid.sample(|x| {
                let mut y = [0.0; MAX_DIM];
                for a in 0..k {
                    y[a] = tn[a] + x[a];
                }
                if ch.support().contains(&y[..k]) {
                    ch.log_density(&y[..k], tn).exp()
                } else {
                    0.0
                }
            }))
        })
        .collect()
}

/// Compare the likelihood-side capacity with the grid forms after the
/// shift `x = y − θ`.
#[allow(clippy::too_many_arguments)]
pub fn statistical_kinematic_consistency(
    model: &ParametricModel,
    theta: &ParameterVector,
    grid: &GridSpec,
    metric: &MetricSignature,
    method: &ExpectationMethod,
    stencil: Stencil,
    tolerance: f64,
) -> Result<ConsistencyReport> {
    check_metric(grid, metric)?;
    let probs = displacement_densities(model, theta, grid)?;
    let coverage: Vec<f64> = probs.iter().map(|p| grid.integrate(p)).collect();
    if let Some(&covered) = coverage.iter().find(|c| **c < MIN_COVERAGE) {
        return Err(Error::TruncationTooAggressive {
            covered,
            required: MIN_COVERAGE,
        });
    }
    let statistical = channel_capacity(model, theta, metric, method)?.total;
    let pc = capacity_from_probabilities(grid, &probs, metric, stencil)?;
    let amps = AmplitudeField::new(
        grid.clone(),
        probs
            .iter()
            .map(|p| p.iter().map(|v| v.max(0.0).sqrt()).collect())
            .collect(),
    )?
    .with_shifts(theta.channels().map(<[f64]>::to_vec).collect());
    let amplitude = capacity_from_amplitudes(&amps, metric, stencil)?;
    Ok(ConsistencyReport {
        statistical,
        kinematic: pc.value,
        amplitude,
        agreement: Inequality::eq(pc.value, statistical, tolerance),
        coverage,
        skipped_mass: pc.skipped_mass,
        stencil,
        points: grid.points().to_vec(),
    })
}

fn require_minkowski_axis(grid: &GridSpec, b: &BoostParameters) -> Result<MetricSignature> {
    if grid.dim() < 2 {
        return Err(Error::InvalidArgument(
            "boosts need a grid of dimension >= 2".into(),
        ));
    }
    if b.axis() >= grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "boost axis {} out of range for a {}-dimensional grid",
            b.axis(),
            grid.dim()
        )));
    }
    MetricSignature::minkowski(grid.dim())
}

/// Multilinear interpolation of cell-centred `values`; zero off the grid.
pub fn interpolate(grid: &GridSpec, values: &[f64], x: &[f64]) -> f64 {
    let d = grid.dim();
    let mut base = [0i64; MAX_DIM];
    let mut frac = [0.0; MAX_DIM];
    for a in 0..d {
        let u = (x[a] - grid.lo()[a]) / grid.spacing(a) - 0.5;
        let f = u.floor();
        base[a] = f as i64;
        frac[a] = u - f;
    }
    let mut acc = 0.0;
    'corner: for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut m = [0usize; MAX_DIM];
        for a in 0..d {
            let up = (corner >> a) & 1;
            let i = base[a] + up as i64;
            if i < 0 || i >= grid.points()[a] as i64 {
                continue 'corner;
            }
            m[a] = i as usize;
            w *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        acc += w * values[grid.ravel(&m[..d])];
    }
    acc
}

fn apply(matrix: &nalgebra::DMatrix<f64>, x: &[f64]) -> [f64; MAX_DIM] {
    let d = x.len();
    let mut out = [0.0; MAX_DIM];
    for r in 0..d {
        out[r] = (0..d).map(|c| matrix[(r, c)] * x[c]).sum();
    }
    out
}

/// Scalar rule `q'(x) = q(Λ⁻¹ x)` with axis 0 as time, resampled onto the
/// same grid.
pub fn boost_field(f: &AmplitudeField, b: &BoostParameters) -> Result<AmplitudeField> {
    let grid = f.grid();
    let metric = require_minkowski_axis(grid, b)?;
    let lam = metric.boost_matrix(b)?;
    let inv = metric.boost_matrix(&b.inverse())?;
    let d = grid.dim();
    // Mass of the source whose boosted position falls outside the box.
    let inside = |x: &[f64]| (0..d).all(|a| x[a] >= grid.lo()[a] && x[a] < grid.hi()[a]);
    let mut total = 0.0;
    let mut outside = 0.0;
    for c in f.components() {
        for (i, v) in c.iter().enumerate() {
            let x = grid.position(i);
            total += v * v;
            if !inside(&apply(&lam, &x[..d])[..d]) {
                outside += v * v;
            }
        }
    }
    let lost = if total > 0.0 { outside / total } else { 0.0 };
    if lost > MAX_BOOST_LOSS {
        return Err(Error::BoostLeavesGrid { lost });
    }
    let components: Vec<Vec<f64>> = f
        .components()
        .iter()
        .map(|c| grid.sample(|x| interpolate(grid, c, &apply(&inv, x)[..d])))
        .collect();
    Ok(AmplitudeField {
        grid: grid.clone(),
        components,
        shifts: f.shifts.clone(),
        wrap_jump: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostReport {
    pub beta: f64,
    pub axis: usize,
    pub before: f64,
    pub after: f64,
    pub relative_change: f64,
    /// Largest relative mismatch of `η(∇q, ∇q)` between frames at sampled
    /// interior points.
    pub gradient_mismatch: f64,
}

/// Minkowski capacity before and after a boost, plus a pointwise check of
/// the contracted gradient.
pub fn boost_invariance(
    f: &AmplitudeField,
    b: &BoostParameters,
    stencil: Stencil,
) -> Result<BoostReport> {
    let grid = f.grid();
    let metric = require_minkowski_axis(grid, b)?;
    let g = boost_field(f, b)?;
    let before = capacity_from_amplitudes(f, &metric, stencil)?;
    let after = capacity_from_amplitudes(&g, &metric, stencil)?;
    let inv = metric.boost_matrix(&b.inverse())?;
    let d = grid.dim();
    let mut mismatch = 0.0f64;
    for (c, cb) in f.components().iter().zip(g.components()) {
        let grads: Vec<Vec<f64>> = (0..d)
            .map(|a| gradient(grid, c, a))
            .collect::<Result<_>>()?;
        let gradsb: Vec<Vec<f64>> = (0..d)
            .map(|a| gradient(grid, cb, a))
            .collect::<Result<_>>()?;
        let peak = cb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = (0..grid.len())
            .map(|i| (0..d).map(|a| gradsb[a][i].powi(2)).sum::<f64>())
            .fold(0.0f64, f64::max);
        let worst = (0..grid.len())
            .into_par_iter()
            .filter(|&i| cb[i].abs() > 0.1 * peak)
            .map(|i| {
                let x = grid.position(i);
                let xb = apply(&inv, &x[..d]);
                let here: f64 = (0..d).map(|a| metric.sign(a) * gradsb[a][i].powi(2)).sum();
                let there: f64 = (0..d)
                    .map(|a| metric.sign(a) * interpolate(grid, &grads[a], &xb[..d]).powi(2))
                    .sum();
                (here - there).abs() / scale
            })
            .reduce(|| 0.0, f64::max);
        mismatch = mismatch.max(worst);
    }
    Ok(BoostReport {
        beta: b.beta(),
        axis: b.axis(),
        before,
        after,
        relative_change: (after - before).abs() / before.abs(),
        gradient_mismatch: mismatch,
    })
}

/// Four components `A_ν` on a 4-dimensional grid with `q_ν = a A_ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeField {
    grid: GridSpec,
    components: Vec<Vec<f64>>,
    a: f64,
}

impl GaugeField {
    pub fn new(grid: GridSpec, components: Vec<Vec<f64>>, a: f64) -> Result<Self> {
        if grid.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: grid.dim(),
            });
        }
        if components.len() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: components.len(),
            });
        }
        for c in &components {
            grid.check_field(c)?;
        }
        if !(a.is_finite() && a != 0.0) {
            return Err(Error::InvalidArgument(format!("gauge constant a = {a}")));
        }
        Ok(Self {
            grid,
            components,
            a,
        })
    }

    /// `A_ν = ε_ν cos(Σ_a k_a x^a)` with `k_a = 2π m_a / L_a`.
    pub fn plane_wave(
        grid: GridSpec,
        polarization: [f64; 4],
        modes: [i64; 4],
        a: f64,
    ) -> Result<Self> {
        let k = Self::wavevector(&grid, modes)?;
        let wave = grid.sample(|x| (0..4).map(|i| k[i] * x[i]).sum::<f64>().cos());
        let components = polarization
            .iter()
            .map(|e| wave.iter().map(|w| e * w).collect())
            .collect();
        Self::new(grid, components, a)
    }

    /// `A_ν = w_ν · profile`.
    pub fn from_profile(
        grid: GridSpec,
        profile: &[f64],
        weights: [f64; 4],
        a: f64,
    ) -> Result<Self> {
        grid.check_field(profile)?;
        let components = weights
            .iter()
            .map(|w| profile.iter().map(|p| w * p).collect())
            .collect();
        Self::new(grid, components, a)
    }

    pub fn wavevector(grid: &GridSpec, modes: [i64; 4]) -> Result<[f64; 4]> {
        if grid.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: grid.dim(),
            });
        }
        let mut k = [0.0; 4];
        for i in 0..4 {
            k[i] = 2.0 * std::f64::consts::PI * modes[i] as f64 / grid.length(i);
        }
        Ok(k)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn component(&self, nu: usize) -> &[f64] {
        &self.components[nu]
    }

    /// Dual components `A^μ = η^{μμ} A_μ`.
    pub fn dual(&self) -> Vec<Vec<f64>> {
        let eta = MetricSignature::minkowski(4).expect("dimension 4 is valid");
        self.components
            .iter()
            .enumerate()
            .map(|(mu, c)| c.iter().map(|v| eta.sign(mu) * v).collect())
            .collect()
    }

    /// The amplitude field `q_ν = a A_ν`.
    pub fn amplitudes(&self) -> AmplitudeField {
        AmplitudeField {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| self.a * v).collect())
                .collect(),
            shifts: Vec::new(),
            wrap_jump: None,
        }
    }
}

/// Gradients along every axis. Spectral derivatives are reduced to their
/// real part, which drops only the Nyquist-bin component.
fn gradients(grid: &GridSpec, values: &[f64], stencil: Stencil) -> Result<Vec<Vec<f64>>> {
    match stencil {
        Stencil::Central => (0..grid.dim()).map(|a| gradient(grid, values, a)).collect(),
        Stencil::Spectral => Ok(crate::grid::spectral_gradients(grid, values)?
            .into_iter()
            .map(|g| g.into_iter().map(|z| z.re).collect())
            .collect()),
    }
}

/// `I = 4a² Σ_μ ∫ Σ_ν (∂_ν A_μ)(∂^ν A^μ)`: the outer sum runs over dual
/// components, the inner contraction over gradients.
pub fn maxwell_capacity(g: &GaugeField, stencil: Stencil) -> Result<f64> {
    let eta = MetricSignature::minkowski(4)?;
    let dual = g.dual();
    let mut total = 0.0;
    for (comp, dual_comp) in g.components.iter().zip(&dual) {
        let lower = gradients(&g.grid, comp, stencil)?;
        let upper = gradients(&g.grid, dual_comp, stencil)?;
        for nu in 0..4 {
            let prod: Vec<f64> = lower[nu]
                .iter()
                .zip(&upper[nu])
                .map(|(l, u)| l * u)
                .collect();
            total += eta.sign(nu) * g.grid.integrate(&prod);
        }
    }
    Ok(4.0 * g.a * g.a * total)
}

/// `Σ_μ η^{μμ} · capacity_from_amplitudes(a A_μ)`.
pub fn maxwell_capacity_dual(g: &GaugeField, stencil: Stencil) -> Result<f64> {
    let eta = MetricSignature::minkowski(4)?;
    let q = g.amplitudes();
    let per = channel_capacities_from_amplitudes(&q, &eta, stencil)?;
    Ok(per.iter().enumerate().map(|(mu, v)| eta.sign(mu) * v).sum())
}

/// Closed form `4a² (ε·ε)(k·k) V/2` of a plane gauge mode.
pub fn plane_wave_capacity(polarization: [f64; 4], k: [f64; 4], a: f64, volume: f64) -> f64 {
    let dot = |u: &[f64; 4], v: &[f64; 4]| u[0] * v[0] - u[1] * v[1] - u[2] * v[2] - u[3] * v[3];
    4.0 * a * a * dot(&polarization, &polarization) * dot(&k, &k) * volume / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzResidual {
    #[serde(skip)]
    pub residual: Vec<f64>,
    pub l2: f64,
    pub max_abs: f64,
}

/// `r = Σ_ν η^{νν} ∂_ν A_ν` by central differences.
pub fn lorentz_condition_residual(g: &GaugeField) -> Result<LorentzResidual> {
    let eta = MetricSignature::minkowski(4)?;
    let mut residual = vec![0.0; g.grid.len()];
    for nu in 0..4 {
        if g.components[nu].iter().all(|v| *v == 0.0) {
            continue;
        }
        let d = gradient(&g.grid, &g.components[nu], nu)?;
        for (r, v) in residual.iter_mut().zip(d) {
            *r += eta.sign(nu) * v;
        }
    }
    let sq: Vec<f64> = residual.iter().map(|r| r * r).collect();
    Ok(LorentzResidual {
        l2: g.grid.integrate(&sq).sqrt(),
        max_abs: residual.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeNormalization {
    pub a: f64,
    /// `Σ_ν ∫ A_ν²`.
    pub gauge_integral: f64,
    /// `(1/4) Σ_ν ∫ q_ν²`.
    pub amplitude_integral: f64,
    pub gauge_normalized: bool,
    pub amplitude_normalized: bool,
    /// Both integrals coincide, which happens exactly when `a = 2`.
    pub equivalent: bool,
    pub pass: bool,
}

pub fn gauge_normalization_check(g: &GaugeField) -> GaugeNormalization {
    let gauge_integral: f64 = g
        .components
        .iter()
        .map(|c| {
            g.grid
                .integrate(&c.iter().map(|v| v * v).collect::<Vec<_>>())
        })
        .sum();
    let q = g.amplitudes();
    let amplitude_integral: f64 = 0.25
        * q.components()
            .iter()
            .map(|c| {
                g.grid
                    .integrate(&c.iter().map(|v| v * v).collect::<Vec<_>>())
            })
            .sum::<f64>();
    let gauge_normalized = (gauge_integral - 1.0).abs() <= NORM_TOL;
    let amplitude_normalized = (amplitude_integral - 1.0).abs() <= NORM_TOL;
    GaugeNormalization {
        a: g.a,
        gauge_integral,
        amplitude_integral,
        gauge_normalized,
        amplitude_normalized,
        equivalent: gauge_integral == amplitude_integral,
        pass: gauge_normalized && amplitude_normalized,
    }
}

/// Minkowski signature matching a grid, with axis 0 as time.
pub fn minkowski_for(grid: &GridSpec) -> Result<MetricSignature> {
    MetricSignature::new(MetricKind::Minkowski, grid.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statmodel::GaussianLocation;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn gaussian_1d(points: usize, boundary: Boundary) -> AmplitudeField {
        let g = GridSpec::cube(1, -10.0, 10.0, points, boundary).unwrap();
        AmplitudeField::from_specs(
            g,
            &[ComponentSpec::Gaussian {
                axes: vec![AxisProfile::Gaussian {
                    center: 0.0,
                    sigma: 1.0,
                }],
            }],
        )
        .unwrap()
    }

    fn e1() -> MetricSignature {
        MetricSignature::euclidean(1).unwrap()
    }

    #[test]
    fn gaussian_amplitude_capacity() {
        let f = gaussian_1d(512, Boundary::Truncated);
        f.check_normalized().unwrap();
        let i = capacity_from_amplitudes(&f, &e1(), Stencil::Central).unwrap();
        assert!((i - 1.0).abs() < 2e-3, "{i}");
        let p = capacity_from_probabilities(f.grid(), &f.probabilities(), &e1(), Stencil::Central)
            .unwrap();
        assert!((p.value - 1.0).abs() < 2e-3);
    }

    #[test]
    fn amplitude_and_probability_forms_agree_spectrally() {
        let f = gaussian_1d(512, Boundary::Periodic);
        assert!(f.wrap_jump.unwrap() < 1e-6);
        let a = capacity_from_amplitudes(&f, &e1(), Stencil::Spectral).unwrap();
        let p = capacity_from_probabilities(f.grid(), &f.probabilities(), &e1(), Stencil::Spectral)
            .unwrap();
        assert!((a - p.value).abs() < 1e-9, "{a} vs {}", p.value);
        assert!(p.skipped_mass < 1e-9);
        assert!((a - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_field_has_zero_capacity() {
        let g = GridSpec::cube(2, 0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let f = AmplitudeField::new(g.clone(), vec![vec![3.0; g.len()]]).unwrap();
        assert!(f.check_normalized().is_err());
        let m = MetricSignature::minkowski(2).unwrap();
        assert_eq!(
            capacity_from_amplitudes(&f, &m, Stencil::Central).unwrap(),
            0.0
        );
        let p =
            capacity_from_probabilities(&g, &[vec![1.0; g.len()]], &m, Stencil::Spectral).unwrap();
        assert!(p.value.abs() < 1e-20);
    }

    #[test]
    fn minkowski_time_box() {
        let g = GridSpec::new(
            vec![0.0, -10.0],
            vec![1.0, 10.0],
            vec![4, 512],
            Boundary::Truncated,
        )
        .unwrap();
        let f = AmplitudeField::from_specs(
            g,
            &[ComponentSpec::Gaussian {
                axes: vec![
                    AxisProfile::Uniform,
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.0,
                    },
                ],
            }],
        )
        .unwrap();
        let m = MetricSignature::minkowski(2).unwrap();
        let one_d = capacity_from_amplitudes(
            &gaussian_1d(512, Boundary::Truncated),
            &e1(),
            Stencil::Central,
        )
        .unwrap();
        let i = capacity_from_amplitudes(&f, &m, Stencil::Central).unwrap();
        assert_abs_diff_eq!(i, -one_d, epsilon = 1e-12);
        assert!((i + 1.0).abs() < 2e-3);
        assert!(capacity_from_amplitudes(&f, &e1(), Stencil::Central).is_err());
    }

    #[test]
    fn probability_form_errors_and_additivity() {
        let f = gaussian_1d(256, Boundary::Truncated);
        let mut bad = f.probabilities();
        bad[0][10] = -1e-6;
        assert!(matches!(
            capacity_from_probabilities(f.grid(), &bad, &e1(), Stencil::Central),
            Err(Error::NegativeProbability { cell: 10, .. })
        ));
        let two = AmplitudeField::new(
            f.grid().clone(),
            vec![
                f.component(0).to_vec(),
                f.component(0).iter().map(|v| v * 0.5).collect(),
            ],
        )
        .unwrap();
        let per =
            capacity_from_probabilities(two.grid(), &two.probabilities(), &e1(), Stencil::Central)
                .unwrap();
        assert_abs_diff_eq!(
            per.value,
            per.per_channel[0] + per.per_channel[1],
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            per.per_channel[1],
            0.25 * per.per_channel[0],
            epsilon = 1e-12
        );
    }

    #[test]
    fn euclidean_capacity_is_nonnegative() {
        let g = GridSpec::cube(2, 0.0, 1.0, 16, Boundary::Truncated).unwrap();
        let vals: Vec<f64> = (0..g.len())
            .map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5)
            .collect();
        let f = AmplitudeField::new(g, vec![vals]).unwrap();
        let e = MetricSignature::euclidean(2).unwrap();
        assert!(capacity_from_amplitudes(&f, &e, Stencil::Central).unwrap() >= 0.0);
    }

    #[test]
    fn second_order_convergence() {
        let err = |n: usize| {
            let f = gaussian_1d(n, Boundary::Periodic);
            capacity_from_amplitudes(&f, &e1(), Stencil::Central).unwrap() - 1.0
        };
        let order = crate::grid::observed_order(err(128), err(256));
        assert!((1.8..=2.2).contains(&order), "{order}");
    }

    #[test]
    fn translation_invariance() {
        let f = gaussian_1d(256, Boundary::Periodic);
        let r = f.roll(&[17]).unwrap();
        for s in [Stencil::Central, Stencil::Spectral] {
            let a = capacity_from_amplitudes(&f, &e1(), s).unwrap();
            let b = capacity_from_amplitudes(&r, &e1(), s).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn mixture_examples() {
        let f = gaussian_1d(512, Boundary::Truncated);
        let single = mixture_density(&f);
        assert_eq!(single, f.probabilities()[0]);
        let twin = AmplitudeField::new(
            f.grid().clone(),
            vec![f.component(0).to_vec(), f.component(0).to_vec()],
        )
        .unwrap();
        let p = mixture_density(&twin);
        assert_eq!(p, single);
        assert!((f.grid().integrate(&p) - 1.0).abs() < 1e-10);

        let g = f.grid().clone();
        let bimodal = AmplitudeField::from_specs(
            g.clone(),
            &[
                ComponentSpec::Gaussian {
                    axes: vec![AxisProfile::Gaussian {
                        center: -5.0,
                        sigma: 0.5,
                    }],
                },
                ComponentSpec::Gaussian {
                    axes: vec![AxisProfile::Gaussian {
                        center: 5.0,
                        sigma: 0.5,
                    }],
                },
            ],
        )
        .unwrap();
        let p = mixture_density(&bimodal);
        assert!((g.integrate(&p) - 1.0).abs() < 1e-10);
        let mid = g.len() / 2;
        assert!(p[mid] < 1e-20);
        let peak = |lo: usize, hi: usize| p[lo..hi].iter().cloned().fold(0.0, f64::max);
        assert!(peak(0, mid) > 0.3 && peak(mid, g.len()) > 0.3);
    }

    #[test]
    fn consistency_one_dimensional() {
        let m = ParametricModel::gaussian(1, nalgebra::DMatrix::identity(1, 1)).unwrap();
        let t = ParameterVector::from_flat(1, vec![2.5]).unwrap();
        let g = GridSpec::cube(1, -8.0, 8.0, 512, Boundary::Truncated).unwrap();
        let r = statistical_kinematic_consistency(
            &m,
            &t,
            &g,
            &e1(),
            &ExpectationMethod::quadrature(),
            Stencil::Central,
            5e-3,
        )
        .unwrap();
        assert!(r.agreement.pass, "{r:?}");
        assert!((r.statistical - 1.0).abs() < 1e-12);

        // the kinematic value ignores θ
        let t2 = ParameterVector::from_flat(1, vec![-40.0]).unwrap();
        let r2 = statistical_kinematic_consistency(
            &m,
            &t2,
            &g,
            &e1(),
            &ExpectationMethod::quadrature(),
            Stencil::Central,
            5e-3,
        )
        .unwrap();
        assert_abs_diff_eq!(r.kinematic, r2.kinematic, epsilon = 1e-12);

        let narrow = GridSpec::cube(1, -2.0, 2.0, 64, Boundary::Truncated).unwrap();
        assert!(matches!(
            statistical_kinematic_consistency(
                &m,
                &t,
                &narrow,
                &e1(),
                &ExpectationMethod::quadrature(),
                Stencil::Central,
                5e-3
            ),
            Err(Error::TruncationTooAggressive { .. })
        ));
    }

    #[test]
    fn consistency_two_dimensional_correlated() {
        let cov = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.8]);
        let m = ParametricModel::new(vec![Arc::new(GaussianLocation::new(cov).unwrap())]).unwrap();
        let t = ParameterVector::from_flat(2, vec![0.3, -0.7]).unwrap();
        let g = GridSpec::cube(2, -9.0, 9.0, 48, Boundary::Periodic).unwrap();
        for metric in [
            MetricSignature::euclidean(2).unwrap(),
            MetricSignature::minkowski(2).unwrap(),
        ] {
            let r = statistical_kinematic_consistency(
                &m,
                &t,
                &g,
                &metric,
                &ExpectationMethod::quadrature(),
                Stencil::Spectral,
                1e-6,
            )
            .unwrap();
            assert!(r.agreement.pass, "{r:?}");
        }
    }

    fn bump(points: usize) -> AmplitudeField {
        let g = GridSpec::cube(2, -16.0, 16.0, points, Boundary::Truncated).unwrap();
        AmplitudeField::from_specs(
            g,
            &[ComponentSpec::Gaussian {
                axes: vec![
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.0,
                    },
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 2.0,
                    },
                ],
            }],
        )
        .unwrap()
    }

    #[test]
    fn identity_boost() {
        let f = bump(64);
        let b = BoostParameters::new(0.0, 1).unwrap();
        let g = boost_field(&f, &b).unwrap();
        for (x, y) in f.component(0).iter().zip(g.component(0)) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn boost_preserves_capacity() {
        let b = BoostParameters::new(0.3, 1).unwrap();
        let coarse = boost_invariance(&bump(128), &b, Stencil::Central).unwrap();
        let fine = boost_invariance(&bump(256), &b, Stencil::Central).unwrap();
        // 1/σ_t² − 1/σ_x² for the unboosted bump
        assert!((fine.before - 0.75).abs() < 5e-3);
        assert!(fine.relative_change < 0.01, "{fine:?}");
        assert!(fine.relative_change < coarse.relative_change);
        assert!(fine.gradient_mismatch < 1e-2, "{fine:?}");
    }

    #[test]
    fn boost_errors() {
        let f = gaussian_1d(64, Boundary::Truncated);
        assert!(boost_field(&f, &BoostParameters::new(0.3, 1).unwrap()).is_err());
        let g = GridSpec::cube(2, -3.0, 3.0, 64, Boundary::Truncated).unwrap();
        let wide = AmplitudeField::from_specs(
            g,
            &[ComponentSpec::Gaussian {
                axes: vec![
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.0,
                    },
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.0,
                    },
                ],
            }],
        )
        .unwrap();
        assert!(matches!(
            boost_field(&wide, &BoostParameters::new(0.9, 1).unwrap()),
            Err(Error::BoostLeavesGrid { .. })
        ));
    }

    fn periodic4(points: [usize; 4]) -> GridSpec {
        GridSpec::new(
            vec![0.0; 4],
            vec![2.0 * PI; 4],
            points.to_vec(),
            Boundary::Periodic,
        )
        .unwrap()
    }

    #[test]
    fn plane_gauge_mode_capacity() {
        let g = periodic4([4, 128, 4, 4]);
        let eps = [0.0, 0.0, 1.0, 0.0];
        let modes = [0, 1, 0, 0];
        let field = GaugeField::plane_wave(g.clone(), eps, modes, 2.0).unwrap();
        let k = GaugeField::wavevector(&g, modes).unwrap();
        let exact = plane_wave_capacity(eps, k, 2.0, g.volume());
        let central = maxwell_capacity(&field, Stencil::Central).unwrap();
        let spectral = maxwell_capacity(&field, Stencil::Spectral).unwrap();
        assert!(((central - exact) / exact).abs() < 1e-3);
        assert!(((spectral - exact) / exact).abs() < 1e-12);
        let dual = maxwell_capacity_dual(&field, Stencil::Central).unwrap();
        assert!((dual - central).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn maxwell_sign_bookkeeping() {
        let g = GridSpec::new(
            vec![0.0, -8.0, -8.0, -8.0],
            vec![1.0, 8.0, 8.0, 8.0],
            vec![3, 24, 24, 24],
            Boundary::Truncated,
        )
        .unwrap();
        let profile = AmplitudeField::from_specs(
            g.clone(),
            &[ComponentSpec::Gaussian {
                axes: vec![
                    AxisProfile::Uniform,
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.5,
                    },
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.5,
                    },
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.5,
                    },
                ],
            }],
        )
        .unwrap();
        let eta = MetricSignature::minkowski(4).unwrap();
        let scalar = capacity_from_amplitudes(&profile, &eta, Stencil::Central).unwrap();
        let a = 2.0;
        let single =
            GaugeField::from_profile(g.clone(), profile.component(0), [0.0, 1.0, 0.0, 0.0], a)
                .unwrap();
        let v = maxwell_capacity(&single, Stencil::Central).unwrap();
        assert_abs_diff_eq!(v, -a * a * scalar, epsilon = 1e-12 * scalar.abs());
        assert_abs_diff_eq!(
            maxwell_capacity_dual(&single, Stencil::Central).unwrap(),
            v,
            epsilon = 1e-12 * scalar.abs()
        );
        let spatial =
            GaugeField::from_profile(g.clone(), profile.component(0), [0.0, 1.0, 1.0, 1.0], a)
                .unwrap();
        assert_abs_diff_eq!(
            maxwell_capacity(&spatial, Stencil::Central).unwrap(),
            -3.0 * a * a * scalar,
            epsilon = 1e-12 * scalar.abs()
        );
        let all =
            GaugeField::from_profile(g, profile.component(0), [1.0, 1.0, 1.0, 1.0], a).unwrap();
        assert_abs_diff_eq!(
            maxwell_capacity(&all, Stencil::Central).unwrap(),
            -2.0 * a * a * scalar,
            epsilon = 1e-12 * scalar.abs()
        );
    }

    #[test]
    fn constant_gauge_field() {
        let g = periodic4([4, 4, 4, 4]);
        let f = GaugeField::new(g.clone(), vec![vec![0.5; g.len()]; 4], 2.0).unwrap();
        assert_eq!(maxwell_capacity(&f, Stencil::Central).unwrap(), 0.0);
        let r = lorentz_condition_residual(&f).unwrap();
        assert!(r.residual.iter().all(|v| *v == 0.0));
        let bad = GridSpec::cube(3, 0.0, 1.0, 4, Boundary::Periodic).unwrap();
        assert!(GaugeField::new(bad.clone(), vec![vec![0.0; bad.len()]; 4], 2.0).is_err());
    }

    #[test]
    fn lorentz_residuals() {
        let g = periodic4([128, 128, 4, 4]);
        let transverse =
            GaugeField::plane_wave(g.clone(), [0.0, 0.0, 1.0, 0.0], [1, 1, 0, 0], 2.0).unwrap();
        assert!(lorentz_condition_residual(&transverse).unwrap().l2 < 1e-6);
        let longitudinal =
            GaugeField::plane_wave(g.clone(), [1.0, 0.0, 0.0, 0.0], [1, 1, 0, 0], 2.0).unwrap();
        let r = lorentz_condition_residual(&longitudinal).unwrap();
        let omega = 1.0;
        let exact = omega * (g.volume() / 2.0).sqrt();
        assert!(((r.l2 - exact) / exact).abs() < 1e-3, "{} vs {exact}", r.l2);
    }

    #[test]
    fn gauge_normalization() {
        let g = GridSpec::new(
            vec![0.0, -8.0, -8.0, -8.0],
            vec![1.0, 8.0, 8.0, 8.0],
            vec![2, 32, 32, 32],
            Boundary::Truncated,
        )
        .unwrap();
        let profile = AmplitudeField::from_specs(
            g.clone(),
            &[ComponentSpec::Gaussian {
                axes: vec![
                    AxisProfile::Uniform,
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.0,
                    },
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.0,
                    },
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.0,
                    },
                ],
            }],
        )
        .unwrap();
        let f = GaugeField::from_profile(g.clone(), profile.component(0), [0.5; 4], 2.0).unwrap();
        let r = gauge_normalization_check(&f);
        assert!(r.pass && r.equivalent, "{r:?}");
        assert_eq!(r.gauge_integral, r.amplitude_integral);

        let loud =
            GaugeField::from_profile(g.clone(), profile.component(0), [1.0; 4], 2.0).unwrap();
        let r = gauge_normalization_check(&loud);
        assert!(!r.pass);
        assert!((r.gauge_integral - 4.0).abs() < 1e-8);

        let other = GaugeField::from_profile(g, profile.component(0), [0.5; 4], 3.0).unwrap();
        let r = gauge_normalization_check(&other);
        assert!(r.gauge_normalized && !r.amplitude_normalized && !r.equivalent);
    }
}
