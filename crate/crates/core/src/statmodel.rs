//! N-channel product likelihoods over vector-valued observations.
//!
//! A [`ParametricModel`] holds one [`PointModel`] per channel. The joint
//! log-likelihood is the sum of the per-channel log-densities, and the score
//! for channel `n` only ever looks at the data of channel `n`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussianCubature;
use crate::stats::mean_se;

/// Default Gauss–Hermite order per axis.
pub const DEFAULT_GH_ORDER: usize = 12;

/// Flattened `Θ = (θ_1, ..., θ_N)` with `d = k × N` entries, `i = n·k + ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    k: usize,
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self> {
        let k = channels.first().map(Vec::len).unwrap_or(0);
        if k == 0 {
            return Err(Error::InvalidArgument(
                "parameter vector needs at least one channel of positive dimension".into(),
            ));
        }
        if let Some(bad) = channels.iter().find(|c| c.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: bad.len(),
            });
        }
        Ok(Self {
            k,
            values: channels.into_iter().flatten().collect(),
        })
    }

    pub fn from_flat(k: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || values.is_empty() || !values.len().is_multiple_of(k) {
            return Err(Error::InvalidArgument(format!(
                "{} values cannot be split into channels of dimension {k}",
                values.len()
            )));
        }
        Ok(Self { k, values })
    }

    pub fn obs_dim(&self) -> usize {
        self.k
    }

    pub fn channel_count(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn channel(&self, n: usize) -> &[f64] {
        &self.values[n * self.k..(n + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn flat_index(&self, n: usize, nu: usize) -> usize {
        n * self.k + nu
    }

    pub fn split_index(&self, i: usize) -> (usize, usize) {
        (i / self.k, i % self.k)
    }

    pub fn channels(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.k)
    }
}

/// Where a point density is supported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    Unbounded,
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Support {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Support::Unbounded => true,
            Support::Box { lo, hi } => y
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| v >= l && v <= h),
        }
    }
}

/// A point distribution `p_n(y_n | θ_n)` for one channel.
pub trait PointModel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn obs_dim(&self) -> usize;

    /// `ln p(y|θ)`; `-∞` outside the support.
    fn log_density(&self, y: &[f64], theta: &[f64]) -> f64;

    fn sample(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64>;

    fn support(&self) -> Support {
        Support::Unbounded
    }

    /// Whether `θ = E(Y)` for this model.
    fn mean_parameterized(&self) -> bool {
        false
    }

    /// Analytic `∂ ln p / ∂θ`, when known.
    fn analytic_score(&self, _y: &[f64], _theta: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Analytic `-∂² ln p / ∂θ∂θ`, when known.
    fn analytic_neg_hessian(&self, _y: &[f64], _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Closed-form expected Fisher information, when known.
    fn analytic_fisher(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Gaussian reference `(mean, covariance)` making Gauss–Hermite applicable.
    fn gaussian_reference(&self, _theta: &[f64]) -> Option<(Vec<f64>, DMatrix<f64>)> {
        None
    }
}

fn fd_step(x: f64) -> f64 {
    (1e-4 * x.abs()).max(1e-4)
}

/// Central finite-difference score of one channel.
pub fn fd_score(model: &dyn PointModel, y: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|j| {
            let h = fd_step(theta[j]);
            t[j] = theta[j] + h;
            let fp = model.log_density(y, &t);
            t[j] = theta[j] - h;
            let fm = model.log_density(y, &t);
            t[j] = theta[j];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central finite-difference negative Hessian of one channel.
pub fn fd_neg_hessian(model: &dyn PointModel, y: &[f64], theta: &[f64]) -> DMatrix<f64> {
    let k = theta.len();
    let mut t = theta.to_vec();
    let f0 = model.log_density(y, theta);
    let eval = |t: &mut Vec<f64>, a: usize, da: f64, b: usize, db: f64| {
        t[a] += da;
        t[b] += db;
        let v = model.log_density(y, t);
        t[a] -= da;
        t[b] -= db;
        v
    };
    let mut h = DMatrix::zeros(k, k);
    for a in 0..k {
        let ha = fd_step(theta[a]);
        let fp = eval(&mut t, a, ha, a, 0.0);
        let fm = eval(&mut t, a, -ha, a, 0.0);
        h[(a, a)] = -(fp - 2.0 * f0 + fm) / (ha * ha);
        for b in 0..a {
            let hb = fd_step(theta[b]);
            let fpp = eval(&mut t, a, ha, b, hb);
            let fpm = eval(&mut t, a, ha, b, -hb);
            let fmp = eval(&mut t, a, -ha, b, hb);
            let fmm = eval(&mut t, a, -ha, b, -hb);
            let v = -(fpp - fpm - fmp + fmm) / (4.0 * ha * hb);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    h
}

/// Multivariate Gaussian location family with fixed covariance.
#[derive(Debug, Clone)]
pub struct GaussianLocation {
    cov: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianLocation {
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        let k = cov.nrows();
        if k == 0 || cov.ncols() != k {
            return Err(Error::InvalidArgument(
                "covariance must be square and non-empty".into(),
            ));
        }
        if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::InvalidArgument(
                "covariance must be symmetric".into(),
            ));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
        let chol_l = chol.l();
        let log_det: f64 = 2.0 * chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let precision = chol.inverse();
        let log_norm = -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        let model = Self {
            cov,
            chol_l,
            precision,
            log_norm,
        };
        check_normalization_gaussian(&model)?;
        Ok(model)
    }

    pub fn isotropic(k: usize, variance: f64) -> Result<Self> {
        Self::new(DMatrix::identity(k, k) * variance)
    }

    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(
            variances,
        )))
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    fn residual(&self, y: &[f64], theta: &[f64]) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(y.len(), y.iter().zip(theta).map(|(a, b)| a - b))
    }
}

/// The density must integrate to one. In whitened coordinates `y = θ + L z`
/// the integrand `p(θ + L z)|L| / φ(z)` is constant, so a low-order rule
/// against the standard normal reference is exact.
fn check_normalization_gaussian(model: &GaussianLocation) -> Result<()> {
    let k = model.obs_dim();
    let cub = GaussianCubature::new(&vec![0.0; k], &DMatrix::identity(k, k), 3)?;
    let det_l: f64 = model.chol_l.diagonal().iter().product();
    let theta = vec![0.0; k];
    let log_phi_norm = -0.5 * k as f64 * (2.0 * std::f64::consts::PI).ln();
    let integral = cub.expect(|z| {
        let y: Vec<f64> = (0..k)
            .map(|r| (0..=r).map(|c| model.chol_l[(r, c)] * z[c]).sum())
            .collect();
        let log_phi = log_phi_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>();
        (model.log_density(&y, &theta) - log_phi).exp() * det_l
    });
    if (integral - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { measured: integral });
    }
    Ok(())
}

impl PointModel for GaussianLocation {
    fn name(&self) -> String {
        format!("gaussian_location(k={})", self.obs_dim())
    }

    fn obs_dim(&self) -> usize {
        self.cov.nrows()
    }

    fn log_density(&self, y: &[f64], theta: &[f64]) -> f64 {
        let r = self.residual(y, theta);
        self.log_norm - 0.5 * (r.transpose() * &self.precision * &r)[(0, 0)]
    }

    fn sample(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let k = theta.len();
        let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        (0..k)
            .map(|r| theta[r] + (0..=r).map(|c| self.chol_l[(r, c)] * z[c]).sum::<f64>())
            .collect()
    }

    fn mean_parameterized(&self) -> bool {
        true
    }

    fn analytic_score(&self, y: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
        let r = self.residual(y, theta);
        Some((&self.precision * r).iter().copied().collect())
    }

    fn analytic_neg_hessian(&self, _y: &[f64], _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.precision.clone())
    }

    fn analytic_fisher(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.precision.clone())
    }

    fn gaussian_reference(&self, theta: &[f64]) -> Option<(Vec<f64>, DMatrix<f64>)> {
        Some((theta.to_vec(), self.cov.clone()))
    }
}

/// Exponential density parameterized by its rate `λ` (mean `1/λ`).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialRate;

impl ExponentialRate {
    pub fn new() -> Result<Self> {
        let model = ExponentialRate;
        // composite Simpson on [0, 60] at λ = 1
        let n = 6000;
        let h = 60.0 / n as f64;
        let f = |x: f64| model.log_density(&[x], &[1.0]).exp();
        let mut s = f(0.0) + f(60.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let integral = s * h / 3.0;
        if (integral - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized { measured: integral });
        }
        Ok(model)
    }
}

impl PointModel for ExponentialRate {
    fn name(&self) -> String {
        "exponential_rate".into()
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn log_density(&self, y: &[f64], theta: &[f64]) -> f64 {
        if y[0] < 0.0 || theta[0] <= 0.0 {
            return f64::NEG_INFINITY;
        }
        theta[0].ln() - theta[0] * y[0]
    }

    fn sample(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let e: f64 = Exp1.sample(rng);
        vec![e / theta[0]]
    }

    fn support(&self) -> Support {
        Support::Box {
            lo: vec![0.0],
            hi: vec![f64::INFINITY],
        }
    }

    fn analytic_score(&self, y: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
        Some(vec![1.0 / theta[0] - y[0]])
    }

    fn analytic_neg_hessian(&self, _y: &[f64], theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, 1.0 / (theta[0] * theta[0])))
    }

    fn analytic_fisher(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, 1.0 / (theta[0] * theta[0])))
    }
}

/// Degenerate distribution concentrated at `θ`.
#[derive(Debug, Clone, Copy)]
pub struct PointMass {
    k: usize,
}

impl PointMass {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "point mass dimension must be positive".into(),
            ));
        }
        Ok(Self { k })
    }
}

impl PointModel for PointMass {
    fn name(&self) -> String {
        format!("point_mass(k={})", self.k)
    }

    fn obs_dim(&self) -> usize {
        self.k
    }

    fn log_density(&self, y: &[f64], theta: &[f64]) -> f64 {
        if y == theta {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample(&self, theta: &[f64], _rng: &mut ChaCha8Rng) -> Vec<f64> {
        theta.to_vec()
    }

    fn mean_parameterized(&self) -> bool {
        true
    }
}

/// Wraps a model and multiplies its density by `factor · exp(slope · Σθ)`.
///
/// At `θ = 0` the density is off by `factor`; the `θ`-dependent part is what
/// breaks the zero-mean score and information-equality identities, since a
/// constant factor cancels out of both.
#[derive(Debug, Clone)]
pub struct MisNormalized {
    inner: Arc<dyn PointModel>,
    log_factor: f64,
    slope: f64,
}

impl MisNormalized {
    pub fn new(inner: Arc<dyn PointModel>, factor: f64, slope: f64) -> Result<Self> {
        if factor.is_nan() || factor <= 0.0 {
            return Err(Error::InvalidArgument(
                "scale factor must be positive".into(),
            ));
        }
        Ok(Self {
            inner,
            log_factor: factor.ln(),
            slope,
        })
    }

    fn log_scale(&self, theta: &[f64]) -> f64 {
        self.log_factor + self.slope * theta.iter().sum::<f64>()
    }
}

impl PointModel for MisNormalized {
    fn name(&self) -> String {
        format!("misnormalized({})", self.inner.name())
    }

    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    fn log_density(&self, y: &[f64], theta: &[f64]) -> f64 {
        self.inner.log_density(y, theta) + self.log_scale(theta)
    }

    fn sample(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.inner.sample(theta, rng)
    }

    fn support(&self) -> Support {
        self.inner.support()
    }

    fn mean_parameterized(&self) -> bool {
        self.inner.mean_parameterized()
    }

    fn analytic_score(&self, y: &[f64], theta: &[f64]) -> Option<Vec<f64>> {
        self.inner
            .analytic_score(y, theta)
            .map(|s| s.into_iter().map(|v| v + self.slope).collect())
    }

    fn analytic_neg_hessian(&self, y: &[f64], theta: &[f64]) -> Option<DMatrix<f64>> {
        self.inner.analytic_neg_hessian(y, theta)
    }

    fn gaussian_reference(&self, theta: &[f64]) -> Option<(Vec<f64>, DMatrix<f64>)> {
        self.inner.gaussian_reference(theta)
    }
}

type LogDensityFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type SamplerFn = dyn Fn(&[f64], &mut ChaCha8Rng) -> Vec<f64> + Send + Sync;
type ReferenceFn = dyn Fn(&[f64]) -> (Vec<f64>, DMatrix<f64>) + Send + Sync;

/// A user-supplied point model. Derivatives come from central differences.
#[derive(Clone)]
pub struct CustomModel {
    name: String,
    k: usize,
    log_density: Arc<LogDensityFn>,
    sampler: Arc<SamplerFn>,
    reference: Option<Arc<ReferenceFn>>,
    mean_parameterized: bool,
    support: Support,
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel")
            .field("name", &self.name)
            .field("k", &self.k)
            .finish_non_exhaustive()
    }
}

impl CustomModel {
    pub fn new(
        name: impl Into<String>,
        k: usize,
        log_density: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        sampler: impl Fn(&[f64], &mut ChaCha8Rng) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            k,
            log_density: Arc::new(log_density),
            sampler: Arc::new(sampler),
            reference: None,
            mean_parameterized: false,
            support: Support::Unbounded,
        }
    }

    pub fn with_gaussian_reference(
        mut self,
        reference: impl Fn(&[f64]) -> (Vec<f64>, DMatrix<f64>) + Send + Sync + 'static,
    ) -> Self {
        self.reference = Some(Arc::new(reference));
        self
    }

    pub fn mean_parameterized(mut self, flag: bool) -> Self {
        self.mean_parameterized = flag;
        self
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }
}

impl PointModel for CustomModel {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn obs_dim(&self) -> usize {
        self.k
    }

    fn log_density(&self, y: &[f64], theta: &[f64]) -> f64 {
        if !self.support.contains(y) {
            return f64::NEG_INFINITY;
        }
        (self.log_density)(y, theta)
    }

    fn sample(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        (self.sampler)(theta, rng)
    }

    fn support(&self) -> Support {
        self.support.clone()
    }

    fn mean_parameterized(&self) -> bool {
        self.mean_parameterized
    }

    fn gaussian_reference(&self, theta: &[f64]) -> Option<(Vec<f64>, DMatrix<f64>)> {
        self.reference.as_ref().map(|r| r(theta))
    }
}

/// Joint log-likelihood with the channels that fell outside their support.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub out_of_support: Vec<usize>,
}

impl LogLikelihood {
    pub fn is_flagged(&self) -> bool {
        !self.out_of_support.is_empty()
    }
}

/// Product likelihood `P(y|Θ) = Π_n p_n(y_n|θ_n)`.
#[derive(Debug, Clone)]
pub struct ParametricModel {
    id: String,
    k: usize,
    channels: Vec<Arc<dyn PointModel>>,
}

impl ParametricModel {
    pub fn new(channels: Vec<Arc<dyn PointModel>>) -> Result<Self> {
        let k = channels
            .first()
            .map(|c| c.obs_dim())
            .ok_or_else(|| Error::InvalidArgument("model needs at least one channel".into()))?;
        if let Some(bad) = channels.iter().find(|c| c.obs_dim() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: bad.obs_dim(),
            });
        }
        let id = channels
            .iter()
            .map(|c| c.name())
            .collect::<Vec<_>>()
            .join("+");
        Ok(Self { id, k, channels })
    }

    /// `n` identical channels sharing one point model.
    pub fn replicated(point: Arc<dyn PointModel>, n: usize) -> Result<Self> {
        Self::new(vec![point; n])
    }

    pub fn gaussian(n: usize, cov: DMatrix<f64>) -> Result<Self> {
        Self::replicated(Arc::new(GaussianLocation::new(cov)?), n)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.k
    }

    pub fn param_dim(&self) -> usize {
        self.k * self.channels.len()
    }

    pub fn channel(&self, n: usize) -> &dyn PointModel {
        self.channels[n].as_ref()
    }

    pub fn mean_parameterized(&self) -> bool {
        self.channels.iter().all(|c| c.mean_parameterized())
    }

    pub fn check_shape(&self, theta: &ParameterVector) -> Result<()> {
        if theta.obs_dim() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: theta.obs_dim(),
            });
        }
        if theta.channel_count() != self.channel_count() {
            return Err(Error::DimensionMismatch {
                expected: self.channel_count(),
                found: theta.channel_count(),
            });
        }
        Ok(())
    }

    fn check_data(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                found: y.len(),
            });
        }
        Ok(())
    }

    /// `ln P(y|Θ) = Σ_n ln p_n(y_n|θ_n)`, with `y` flattened `N × k`.
    pub fn log_likelihood(&self, theta: &ParameterVector, y: &[f64]) -> Result<LogLikelihood> {
        self.check_shape(theta)?;
        self.check_data(y)?;
        let mut value = 0.0;
        let mut out_of_support = Vec::new();
        for (n, (ch, (yn, tn))) in self
            .channels
            .iter()
            .zip(y.chunks(self.k).zip(theta.channels()))
            .enumerate()
        {
            if !ch.support().contains(yn) {
                out_of_support.push(n);
            }
            value += ch.log_density(yn, tn);
        }
        if !out_of_support.is_empty() {
            value = f64::NEG_INFINITY;
        }
        Ok(LogLikelihood {
            value,
            out_of_support,
        })
    }

    /// Score of a single channel: `∂ ln p_n(y_n|θ_n) / ∂θ_n`.
    pub fn channel_score(&self, n: usize, y_n: &[f64], theta_n: &[f64]) -> Result<Vec<f64>> {
        let ch = self.channels[n].as_ref();
        let s = ch
            .analytic_score(y_n, theta_n)
            .unwrap_or_else(|| fd_score(ch, y_n, theta_n));
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDerivative { channel: n });
        }
        Ok(s)
    }

    /// The full `d`-vector score `∂ ln P / ∂Θ`.
    pub fn score(&self, theta: &ParameterVector, y: &[f64]) -> Result<Vec<f64>> {
        self.check_shape(theta)?;
        self.check_data(y)?;
        let mut out = Vec::with_capacity(self.param_dim());
        for (n, (yn, tn)) in y.chunks(self.k).zip(theta.channels()).enumerate() {
            out.extend(self.channel_score(n, yn, tn)?);
        }
        Ok(out)
    }

    /// `-∂² ln p_n / ∂θ_n ∂θ_n` for one channel.
    pub fn channel_neg_hessian(
        &self,
        n: usize,
        y_n: &[f64],
        theta_n: &[f64],
    ) -> Result<DMatrix<f64>> {
        let ch = self.channels[n].as_ref();
        let h = ch
            .analytic_neg_hessian(y_n, theta_n)
            .unwrap_or_else(|| fd_neg_hessian(ch, y_n, theta_n));
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDerivative { channel: n });
        }
        Ok(h)
    }

    /// Gauss–Hermite rule for channel `n`, if the channel admits one.
    pub fn channel_cubature(
        &self,
        n: usize,
        theta_n: &[f64],
        order: usize,
    ) -> Result<(GaussianCubature, Vec<f64>, DMatrix<f64>)> {
        let ch = self.channels[n].as_ref();
        let (mean, cov) = ch.gaussian_reference(theta_n).ok_or_else(|| {
            Error::QuadratureUnavailable(format!(
                "channel {n} ({}) has no Gaussian reference weight",
                ch.name()
            ))
        })?;
        Ok((GaussianCubature::new(&mean, &cov, order)?, mean, cov))
    }

    /// `E_{p_n}[f(y_n)]` by Gauss–Hermite, reweighting by `p_n / φ_ref`.
    pub fn channel_expectation<F>(
        &self,
        n: usize,
        theta_n: &[f64],
        order: usize,
        mut f: F,
    ) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let (cub, mean, cov) = self.channel_cubature(n, theta_n, order)?;
        let reference = GaussianLocation::new(cov)?;
        let ch = self.channels[n].as_ref();
        let mut acc: Option<Vec<f64>> = None;
        for (y, w) in cub.iter() {
            let ratio = (ch.log_density(y, theta_n) - reference.log_density(y, &mean)).exp();
            let v = f(y)?;
            let a = acc.get_or_insert_with(|| vec![0.0; v.len()]);
            for (ai, vi) in a.iter_mut().zip(&v) {
                *ai += w * ratio * vi;
            }
        }
        Ok(acc.unwrap_or_default())
    }

    /// `M` independent draws. Each `(draw, channel)` pair owns its own
    /// ChaCha stream, so parallel and sequential generation agree exactly.
    pub fn sample(&self, theta: &ParameterVector, seed: u64, m: usize) -> Result<SampleBatch> {
        self.check_shape(theta)?;
        if m == 0 {
            return Err(Error::InvalidArgument(
                "sample size M must be at least 1".into(),
            ));
        }
        let n_ch = self.channel_count();
        let k = self.k;
        let base = ChaCha8Rng::seed_from_u64(seed);
        let mut draws = vec![0.0; m * n_ch * k];
        draws
            .par_chunks_mut(n_ch * k)
            .enumerate()
            .for_each(|(i, row)| {
                for (n, slot) in row.chunks_mut(k).enumerate() {
                    let mut rng = base.clone();
                    rng.set_stream((i * n_ch + n) as u64);
                    let y = self.channels[n].sample(theta.channel(n), &mut rng);
                    slot.copy_from_slice(&y);
                }
            });
        Ok(SampleBatch {
            model_id: self.id.clone(),
            seed,
            channels: n_ch,
            obs_dim: k,
            draws,
        })
    }

    /// Monte-Carlo mean of each channel against `θ_n` at 4 standard errors.
    pub fn expected_parameter_check(
        &self,
        theta: &ParameterVector,
        batch: &SampleBatch,
    ) -> Result<ExpectedParameterReport> {
        if !self.mean_parameterized() {
            return Err(Error::NotMeanParameterized);
        }
        self.check_shape(theta)?;
        batch.check_shape(self.channel_count(), self.k)?;
        let mut channels = Vec::with_capacity(self.channel_count());
        for n in 0..self.channel_count() {
            let mut mean = Vec::with_capacity(self.k);
            let mut se = Vec::with_capacity(self.k);
            let mut pass = true;
            for nu in 0..self.k {
                let xs: Vec<f64> = batch.iter().map(|d| d[n * self.k + nu]).collect();
                let (mu, s) = mean_se(&xs);
                let target = theta.channel(n)[nu];
                pass &= if s == 0.0 {
                    mu == target
                } else {
                    (mu - target).abs() <= 4.0 * s
                };
                mean.push(mu);
                se.push(s);
            }
            channels.push(ChannelMeanReport {
                channel: n,
                theta: theta.channel(n).to_vec(),
                mean,
                standard_error: se,
                pass,
            });
        }
        Ok(ExpectedParameterReport { channels })
    }

    /// Residuals `E[∂^i ln P]`, which vanish for a regular, normalized model.
    pub fn score_mean_check(
        &self,
        theta: &ParameterVector,
        method: &ExpectationMethod,
    ) -> Result<ScoreMeanReport> {
        self.check_shape(theta)?;
        let d = self.param_dim();
        let (residuals, tolerances) = match *method {
            ExpectationMethod::Quadrature { order } => {
                let mut res = Vec::with_capacity(d);
                for n in 0..self.channel_count() {
                    let tn = theta.channel(n);
                    res.extend(
                        self.channel_expectation(n, tn, order, |y| self.channel_score(n, y, tn))?,
                    );
                }
                (res, vec![1e-8; d])
            }
            ExpectationMethod::MonteCarlo { draws, seed } => {
                let batch = self.sample(theta, seed, draws)?;
                let mut res = Vec::with_capacity(d);
                let mut tol = Vec::with_capacity(d);
                let scores: Vec<Vec<f64>> = batch
                    .iter()
                    .map(|y| self.score(theta, y))
                    .collect::<Result<_>>()?;
                for i in 0..d {
                    let xs: Vec<f64> = scores.iter().map(|s| s[i]).collect();
                    let (m, se) = mean_se(&xs);
                    res.push(m);
                    tol.push(4.0 * se);
                }
                (res, tol)
            }
            ExpectationMethod::Analytic => {
                return Err(Error::InvalidArgument(
                    "score mean check needs quadrature or Monte Carlo".into(),
                ))
            }
        };
        let pass = residuals
            .iter()
            .zip(&tolerances)
            .all(|(r, t)| r.abs() <= *t);
        Ok(ScoreMeanReport {
            residuals,
            tolerances,
            pass,
        })
    }
}

/// How an expectation over the data distribution is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpectationMethod {
    Analytic,
    Quadrature { order: usize },
    MonteCarlo { draws: usize, seed: u64 },
}

impl ExpectationMethod {
    pub fn quadrature() -> Self {
        ExpectationMethod::Quadrature {
            order: DEFAULT_GH_ORDER,
        }
    }
}

/// `M` realizations of the `N × k` sample, row-major per draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub model_id: String,
    pub seed: u64,
    pub channels: usize,
    pub obs_dim: usize,
    draws: Vec<f64>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.draws.len() / (self.channels * self.obs_dim)
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        let w = self.channels * self.obs_dim;
        &self.draws[i * w..(i + 1) * w]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks(self.channels * self.obs_dim)
    }

    fn check_shape(&self, channels: usize, k: usize) -> Result<()> {
        if self.channels != channels || self.obs_dim != k {
            return Err(Error::InvalidArgument(format!(
                "batch shape {}x{} does not match model {}x{}",
                self.channels, self.obs_dim, channels, k
            )));
        }
        Ok(())
    }

    /// One CSV row per draw with columns `y_{n}_{ν}`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let header: Vec<String> = (0..self.channels)
            .flat_map(|n| (0..self.obs_dim).map(move |nu| format!("y_{n}_{nu}")))
            .collect();
        wtr.write_record(&header)?;
        for d in self.iter() {
            wtr.write_record(d.iter().map(|v| format!("{v:e}")))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeanReport {
    pub channel: usize,
    pub theta: Vec<f64>,
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedParameterReport {
    pub channels: Vec<ChannelMeanReport>,
}

impl ExpectedParameterReport {
    pub fn pass(&self) -> bool {
        self.channels.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeanReport {
    pub residuals: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_gaussian(n: usize) -> ParametricModel {
        ParametricModel::gaussian(n, DMatrix::identity(1, 1)).unwrap()
    }

    fn theta1(vals: &[f64]) -> ParameterVector {
        ParameterVector::from_flat(1, vals.to_vec()).unwrap()
    }

    #[test]
    fn parameter_vector_index_map() {
        let t = ParameterVector::new(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t.channel_count() * t.obs_dim(), t.len());
        for i in 0..t.len() {
            let (n, nu) = t.split_index(i);
            assert_eq!(t.flat_index(n, nu), i);
            assert_eq!(t.channel(n)[nu], t.as_slice()[i]);
        }
        assert!(ParameterVector::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn log_likelihood_examples() {
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let m2 = unit_gaussian(2);
        let ll = m2
            .log_likelihood(&theta1(&[0.0, 0.0]), &[0.0, 0.0])
            .unwrap();
        assert_abs_diff_eq!(ll.value, -1.8378770664093453, epsilon = 1e-12);
        assert_abs_diff_eq!(ll.value, -2.0 * half_ln_2pi, epsilon = 1e-14);

        let m1 = unit_gaussian(1);
        let ll = m1.log_likelihood(&theta1(&[0.0]), &[2.0]).unwrap();
        assert_abs_diff_eq!(ll.value, -half_ln_2pi - 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ll.value, -2.918938533204673, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_is_sum_of_channels() {
        let m = unit_gaussian(3);
        let t = theta1(&[0.5, -1.0, 2.0]);
        let y = [0.1, 0.2, 0.3];
        let total = m.log_likelihood(&t, &y).unwrap().value;
        let parts: f64 = (0..3)
            .map(|n| m.channel(n).log_density(&y[n..n + 1], t.channel(n)))
            .sum();
        assert_abs_diff_eq!(total, parts, epsilon = 1e-14);
    }

    #[test]
    fn out_of_support_is_flagged() {
        let m = ParametricModel::replicated(Arc::new(ExponentialRate::new().unwrap()), 2).unwrap();
        let ll = m
            .log_likelihood(&theta1(&[1.0, 2.0]), &[0.5, -1.0])
            .unwrap();
        assert_eq!(ll.value, f64::NEG_INFINITY);
        assert_eq!(ll.out_of_support, vec![1]);
        assert!(ll.is_flagged());
    }

    #[test]
    fn score_examples() {
        let m = unit_gaussian(1);
        assert_abs_diff_eq!(
            m.score(&theta1(&[0.0]), &[1.5]).unwrap()[0],
            1.5,
            epsilon = 1e-15
        );
        assert_eq!(m.score(&theta1(&[0.7]), &[0.7]).unwrap()[0], 0.0);
    }

    #[test]
    fn finite_difference_score_matches_analytic() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        let g = GaussianLocation::new(cov).unwrap();
        for (y, t) in [
            ([0.3, -1.2, 2.0], [0.0, 0.0, 0.0]),
            ([5.0, 1.0, -3.0], [4.0, -2.0, 1.0]),
            ([100.0, 0.0, 0.0], [99.0, 0.5, -0.5]),
        ] {
            let a = g.analytic_score(&y, &t).unwrap();
            let f = fd_score(&g, &y, &t);
            for (x, z) in a.iter().zip(&f) {
                assert!((x - z).abs() < 1e-6, "{a:?} vs {f:?}");
            }
        }
    }

    #[test]
    fn custom_model_uses_finite_differences() {
        let custom = CustomModel::new(
            "laplace",
            1,
            |y, t| -(y[0] - t[0]).abs() - std::f64::consts::LN_2,
            |t, rng| {
                let e: f64 = Exp1.sample(rng);
                let s: f64 = StandardNormal.sample(rng);
                vec![t[0] + e * s.signum()]
            },
        );
        let m = ParametricModel::replicated(Arc::new(custom), 1).unwrap();
        let s = m.score(&theta1(&[0.0]), &[2.0]).unwrap();
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn non_finite_score_reports_channel() {
        let m = ParametricModel::replicated(Arc::new(PointMass::new(1).unwrap()), 2).unwrap();
        let err = m.score(&theta1(&[0.0, 0.0]), &[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteDerivative { channel: 0 }));
    }

    #[test]
    fn channel_independence_of_score() {
        let m = ParametricModel::gaussian(3, DMatrix::identity(2, 2) * 0.5).unwrap();
        let t = ParameterVector::from_flat(2, vec![0.0; 6]).unwrap();
        let y = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let base = m.score(&t, &y).unwrap();
        let mut y2 = y.clone();
        y2[2] = 10.0;
        y2[3] = -4.0;
        let moved = m.score(&t, &y2).unwrap();
        assert_eq!(base[0..2], moved[0..2]);
        assert_eq!(base[4..6], moved[4..6]);
        assert_ne!(base[2..4], moved[2..4]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = unit_gaussian(2);
        let t = theta1(&[0.0, 1.0]);
        let a = m.sample(&t, 7, 100).unwrap();
        let b = m.sample(&t, 7, 100).unwrap();
        assert_eq!(a, b);
        let c = m.sample(&t, 8, 100).unwrap();
        assert_ne!(a, c);
        assert!(m.sample(&t, 7, 0).is_err());
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let m = unit_gaussian(1);
        let big_m = 100_000;
        let batch = m.sample(&theta1(&[3.0]), 11, big_m).unwrap();
        let xs: Vec<f64> = batch.iter().map(|d| d[0]).collect();
        let (mean, _) = mean_se(&xs);
        assert!((mean - 3.0).abs() < 4.0 / (big_m as f64).sqrt());
    }

    #[test]
    fn expected_parameter_checks() {
        let m = ParametricModel::gaussian(2, DMatrix::identity(2, 2)).unwrap();
        let t = ParameterVector::from_flat(2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let batch = m.sample(&t, 3, 20_000).unwrap();
        assert!(m.expected_parameter_check(&t, &batch).unwrap().pass());

        let pm = ParametricModel::replicated(Arc::new(PointMass::new(2).unwrap()), 1).unwrap();
        let tp = ParameterVector::from_flat(2, vec![1.25, -7.5]).unwrap();
        let batch = pm.sample(&tp, 3, 10).unwrap();
        let rep = pm.expected_parameter_check(&tp, &batch).unwrap();
        assert!(rep.pass());
        assert_eq!(rep.channels[0].mean, vec![1.25, -7.5]);

        let em = ParametricModel::replicated(Arc::new(ExponentialRate::new().unwrap()), 1).unwrap();
        let te = theta1(&[2.0]);
        let batch = em.sample(&te, 3, 10).unwrap();
        assert!(matches!(
            em.expected_parameter_check(&te, &batch),
            Err(Error::NotMeanParameterized)
        ));
    }

    #[test]
    fn score_mean_quadrature_unit_gaussian() {
        let m = unit_gaussian(1);
        let rep = m
            .score_mean_check(&theta1(&[0.3]), &ExpectationMethod::quadrature())
            .unwrap();
        assert!(rep.residuals[0].abs() < 1e-10);
        assert!(rep.pass);
    }

    #[test]
    fn score_mean_monte_carlo_builtins() {
        let m = ParametricModel::gaussian(2, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]))
            .unwrap();
        let t = ParameterVector::from_flat(2, vec![0.0, 1.0, -1.0, 2.0]).unwrap();
        let mc = ExpectationMethod::MonteCarlo {
            draws: 100_000,
            seed: 5,
        };
        assert!(m.score_mean_check(&t, &mc).unwrap().pass);

        let e = ParametricModel::replicated(Arc::new(ExponentialRate::new().unwrap()), 1).unwrap();
        assert!(e.score_mean_check(&theta1(&[1.5]), &mc).unwrap().pass);
    }

    #[test]
    fn score_mean_quadrature_requires_gaussian_weight() {
        let e = ParametricModel::replicated(Arc::new(ExponentialRate::new().unwrap()), 1).unwrap();
        assert!(matches!(
            e.score_mean_check(&theta1(&[1.0]), &ExpectationMethod::quadrature()),
            Err(Error::QuadratureUnavailable(_))
        ));
    }

    #[test]
    fn misnormalized_density_fails_score_mean() {
        let g: Arc<dyn PointModel> = Arc::new(GaussianLocation::isotropic(1, 1.0).unwrap());
        let bad = MisNormalized::new(g, 1.1, 0.1).unwrap();
        let m = ParametricModel::replicated(Arc::new(bad), 1).unwrap();
        let rep = m
            .score_mean_check(&theta1(&[0.0]), &ExpectationMethod::quadrature())
            .unwrap();
        assert!(!rep.pass);
        assert_abs_diff_eq!(rep.residuals[0], 0.11, epsilon = 1e-12);
    }

    #[test]
    fn builtin_densities_are_normalized() {
        // Independent check: trapezoid over a wide box for a 2D correlated Gaussian.
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let g = GaussianLocation::new(cov).unwrap();
        let (n, lo, hi) = (400, -12.0, 12.0);
        let h = (hi - lo) / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let y = [lo + i as f64 * h, lo + j as f64 * h];
                let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += wi * wj * g.log_density(&y, &[0.0, 0.0]).exp();
            }
        }
        assert!((s * h * h - 1.0).abs() < 1e-6);
        assert!(ExponentialRate::new().is_ok());
    }

    #[test]
    fn batch_csv_layout() {
        let m = ParametricModel::gaussian(2, DMatrix::identity(2, 2)).unwrap();
        let t = ParameterVector::from_flat(2, vec![0.0; 4]).unwrap();
        let batch = m.sample(&t, 1, 3).unwrap();
        let mut buf = Vec::new();
        batch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "y_0_0,y_0_1,y_1_0,y_1_1");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 4);
    }
}
