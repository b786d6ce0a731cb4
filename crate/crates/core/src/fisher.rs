//! Fisher information matrices, Cramér–Rao checks, Stam's information and
//! the channel information capacity `I = Σ_n I_Fn`.
//!
//! Two variances appear here and they are kept apart on purpose:
//!
//! * the per-coordinate variance of `θ̂_i`, which enters the scalar
//!   Cramér–Rao chain `σ²_i ≥ [I_F⁻¹]_ii ≥ 1/[I_F]_ii`;
//! * the metric-contracted variance `σ²(θ̂_n) = E[η_{νμ} δ^ν δ^μ]`, which
//!   enters Stam's information and may be negative for a Minkowski metric.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSignature;
use crate::report::{Inequality, MatrixData};
use crate::statmodel::{ExpectationMethod, ParameterVector, ParametricModel, SampleBatch};
use crate::stats::{jackknife_se, mean_se};

/// Largest condition number accepted before a Fisher matrix counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Monte-Carlo checks pass within this many standard errors.
pub const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FisherKind {
    Observed,
    Expected,
}

/// A `d × d` Fisher information matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub matrix: DMatrix<f64>,
    pub kind: FisherKind,
    /// `None` for observed matrices, which are evaluated at fixed data.
    pub method: Option<ExpectationMethod>,
    pub theta: ParameterVector,
    /// Entrywise Monte-Carlo standard errors, when estimated by sampling.
    pub standard_errors: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FisherMatrixReport {
    pub kind: FisherKind,
    pub method: Option<ExpectationMethod>,
    pub theta: Vec<f64>,
    pub matrix: MatrixData,
    pub standard_errors: Option<MatrixData>,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn report(&self) -> FisherMatrixReport {
        FisherMatrixReport {
            kind: self.kind,
            method: self.method,
            theta: self.theta.as_slice().to_vec(),
            matrix: MatrixData::from(&self.matrix),
            standard_errors: self.standard_errors.as_ref().map(MatrixData::from),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.transpose()).amax() <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// The `k × k` block of channel `n`.
    pub fn channel_block(&self, n: usize) -> DMatrix<f64> {
        let k = self.theta.obs_dim();
        self.matrix.view((n * k, n * k), (k, k)).into_owned()
    }

    /// Inverse through the symmetric eigendecomposition.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        symmetric_inverse(&self.matrix)
    }
}

/// Inverse of a symmetric matrix, refusing condition numbers above
/// [`MAX_CONDITION`].
pub fn symmetric_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v.abs()), hi.max(v.abs()))
        });
    if lo == 0.0 || !lo.is_finite() || hi / lo > MAX_CONDITION {
        return Err(Error::SingularFisher(format!(
            "condition number {:.3e} exceeds {:.0e}",
            hi / lo,
            MAX_CONDITION
        )));
    }
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
    let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `iF(Θ) = -∂∂ ln P(y|Θ)`, block-diagonal across channels.
pub fn observed_fisher(
    model: &ParametricModel,
    theta: &ParameterVector,
    y: &[f64],
) -> Result<FisherMatrix> {
    model.check_shape(theta)?;
    let d = model.param_dim();
    if y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: y.len(),
        });
    }
    let k = model.obs_dim();
    let mut matrix = DMatrix::zeros(d, d);
    for n in 0..model.channel_count() {
        let block = model.channel_neg_hessian(n, &y[n * k..(n + 1) * k], theta.channel(n))?;
        matrix.view_mut((n * k, n * k), (k, k)).copy_from(&block);
    }
    Ok(FisherMatrix {
        matrix,
        kind: FisherKind::Observed,
        method: None,
        theta: theta.clone(),
        standard_errors: None,
    })
}

fn analytic_blocks(model: &ParametricModel, theta: &ParameterVector) -> Result<DMatrix<f64>> {
    let k = model.obs_dim();
    let d = model.param_dim();
    let mut matrix = DMatrix::zeros(d, d);
    for n in 0..model.channel_count() {
        let block = model
            .channel(n)
            .analytic_fisher(theta.channel(n))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "channel {n} ({}) has no closed-form Fisher information",
                    model.channel(n).name()
                ))
            })?;
        matrix.view_mut((n * k, n * k), (k, k)).copy_from(&block);
    }
    Ok(matrix)
}

fn to_matrix(k: usize, flat: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(k, k, flat)
}

fn mc_matrix(
    samples: impl Iterator<Item = Result<DMatrix<f64>>>,
    d: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mats: Vec<DMatrix<f64>> = samples.collect::<Result<_>>()?;
    let mut mean = DMatrix::zeros(d, d);
    let mut se = DMatrix::zeros(d, d);
    let mut xs = vec![0.0; mats.len()];
    for r in 0..d {
        for c in 0..d {
            for (x, m) in xs.iter_mut().zip(&mats) {
                *x = m[(r, c)];
            }
            let (mu, s) = mean_se(&xs);
            mean[(r, c)] = mu;
            se[(r, c)] = s;
        }
    }
    Ok((mean, se))
}

/// `I_F(Θ) = E_Θ[iF(Θ)]`.
pub fn expected_fisher(
    model: &ParametricModel,
    theta: &ParameterVector,
    method: &ExpectationMethod,
) -> Result<FisherMatrix> {
    model.check_shape(theta)?;
    let k = model.obs_dim();
    let d = model.param_dim();
    let mut standard_errors = None;
    let matrix = match *method {
        ExpectationMethod::Analytic => analytic_blocks(model, theta)?,
        ExpectationMethod::Quadrature { order } => {
            let mut m = DMatrix::zeros(d, d);
            for n in 0..model.channel_count() {
                let tn = theta.channel(n);
                let flat = model.channel_expectation(n, tn, order, |y| {
                    Ok(model
                        .channel_neg_hessian(n, y, tn)?
                        .transpose()
                        .as_slice()
                        .to_vec())
                })?;
                m.view_mut((n * k, n * k), (k, k))
                    .copy_from(&to_matrix(k, &flat));
            }
            m
        }
        ExpectationMethod::MonteCarlo { draws, seed } => {
            let batch = model.sample(theta, seed, draws)?;
            let (mean, se) = mc_matrix(
                batch
                    .iter()
                    .map(|y| observed_fisher(model, theta, y).map(|f| f.matrix)),
                d,
            )?;
            standard_errors = Some(se);
            mean
        }
    };
    Ok(FisherMatrix {
        matrix: symmetrize(matrix),
        kind: FisherKind::Expected,
        method: Some(*method),
        theta: theta.clone(),
        standard_errors,
    })
}

/// `I_F(Θ) = E_Θ[∂ ln P ⊗ ∂ ln P]`.
///
/// Cross-channel blocks are products of per-channel score means under
/// quadrature, since the channels are independent.
pub fn outer_form_fisher(
    model: &ParametricModel,
    theta: &ParameterVector,
    method: &ExpectationMethod,
) -> Result<FisherMatrix> {
    model.check_shape(theta)?;
    let k = model.obs_dim();
    let d = model.param_dim();
    let n_ch = model.channel_count();
    let mut standard_errors = None;
    let matrix = match *method {
        ExpectationMethod::Analytic => analytic_blocks(model, theta)?,
        ExpectationMethod::Quadrature { order } => {
            let mut m = DMatrix::zeros(d, d);
            let mut means = Vec::with_capacity(n_ch);
            for n in 0..n_ch {
                let tn = theta.channel(n);
                let moments = model.channel_expectation(n, tn, order, |y| {
                    let s = model.channel_score(n, y, tn)?;
                    let mut v = s.clone();
                    for a in 0..k {
                        for b in 0..k {
                            v.push(s[a] * s[b]);
                        }
                    }
                    Ok(v)
                })?;
                means.push(moments[..k].to_vec());
                m.view_mut((n * k, n * k), (k, k))
                    .copy_from(&to_matrix(k, &moments[k..]));
            }
            for n in 0..n_ch {
                for p in 0..n_ch {
                    if n == p {
                        continue;
                    }
                    for a in 0..k {
                        for b in 0..k {
                            m[(n * k + a, p * k + b)] = means[n][a] * means[p][b];
                        }
                    }
                }
            }
            m
        }
        ExpectationMethod::MonteCarlo { draws, seed } => {
            let batch = model.sample(theta, seed, draws)?;
            let (mean, se) = mc_matrix(
                batch.iter().map(|y| {
                    let s = nalgebra::DVector::from_vec(model.score(theta, y)?);
                    Ok(&s * s.transpose())
                }),
                d,
            )?;
            standard_errors = Some(se);
            mean
        }
    };
    Ok(FisherMatrix {
        matrix: symmetrize(matrix),
        kind: FisherKind::Expected,
        method: Some(*method),
        theta: theta.clone(),
        standard_errors,
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Which indices of a channel enter a contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AxisSelection {
    #[default]
    All,
    /// Drop index 0 and contract the rest with `+1` signs.
    SpatialOnly,
}

/// Per-index contraction weights for a channel of dimension `k`.
pub fn contraction_weights(
    metric: &MetricSignature,
    selection: AxisSelection,
    k: usize,
) -> Result<Vec<f64>> {
    if metric.dim() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: metric.dim(),
        });
    }
    Ok(match selection {
        AxisSelection::All => metric.diagonal().to_vec(),
        AxisSelection::SpatialOnly => {
            if k < 2 {
                return Err(Error::InvalidArgument(
                    "spatial-only contraction needs k >= 2".into(),
                ));
            }
            (0..k).map(|i| if i == 0 { 0.0 } else { 1.0 }).collect()
        }
    })
}

/// `I_Fn = Σ η^{νμ} E[∂_ν ln P ∂_μ ln P]` for channel `n`.
pub fn channel_fisher(
    model: &ParametricModel,
    theta: &ParameterVector,
    n: usize,
    metric: &MetricSignature,
    method: &ExpectationMethod,
) -> Result<f64> {
    let fim = outer_form_fisher(model, theta, method)?;
    channel_fisher_from(&fim, n, metric, AxisSelection::All)
}

/// Contract the channel-`n` block of an already computed matrix.
pub fn channel_fisher_from(
    fim: &FisherMatrix,
    n: usize,
    metric: &MetricSignature,
    selection: AxisSelection,
) -> Result<f64> {
    let k = fim.theta.obs_dim();
    if n >= fim.theta.channel_count() {
        return Err(Error::InvalidArgument(format!("channel {n} out of range")));
    }
    let w = contraction_weights(metric, selection, k)?;
    let block = fim.channel_block(n);
    Ok((0..k).map(|i| w[i] * block[(i, i)]).sum())
}

/// An estimator `y ↦ Θ̂(y)` returning the flattened `N × k` estimate.
pub trait Estimator: Sync {
    fn name(&self) -> String;

    /// `draw_index` lets randomized estimators seed per draw.
    fn estimate(&self, draw_index: usize, y: &[f64]) -> Vec<f64>;
}

/// `θ̂_n = y_n`, the single-observation sample mean.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleMeanEstimator;

impl Estimator for SampleMeanEstimator {
    fn name(&self) -> String {
        "sample_mean".into()
    }

    fn estimate(&self, _draw_index: usize, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
}

/// Always returns the given value (with the true `Θ` this is the oracle).
#[derive(Debug, Clone)]
pub struct ConstantEstimator {
    pub value: Vec<f64>,
}

impl Estimator for ConstantEstimator {
    fn name(&self) -> String {
        "constant".into()
    }

    fn estimate(&self, _draw_index: usize, _y: &[f64]) -> Vec<f64> {
        self.value.clone()
    }
}

/// `θ̂ = y + ε` with independent `ε ~ N(0, noise_sd²)` per coordinate.
#[derive(Debug, Clone, Copy)]
pub struct NoisyEstimator {
    pub noise_sd: f64,
    pub seed: u64,
}

impl Estimator for NoisyEstimator {
    fn name(&self) -> String {
        format!("noisy(sd={})", self.noise_sd)
    }

    fn estimate(&self, draw_index: usize, y: &[f64]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw_index as u64);
        y.iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + self.noise_sd * z
            })
            .collect()
    }
}

fn estimates(
    estimator: &dyn Estimator,
    model: &ParametricModel,
    batch: &SampleBatch,
) -> Result<Vec<Vec<f64>>> {
    let d = model.param_dim();
    if batch.channels != model.channel_count() || batch.obs_dim != model.obs_dim() {
        return Err(Error::InvalidArgument(
            "batch shape does not match model".into(),
        ));
    }
    batch
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let e = estimator.estimate(i, y);
            if e.len() != d {
                return Err(Error::EstimatorShape(format!(
                    "{} returned {} values, expected {d}",
                    estimator.name(),
                    e.len()
                )));
            }
            Ok(e)
        })
        .collect()
}

/// Monte-Carlo estimate of the contracted variance for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVariance {
    pub channel: usize,
    /// `E[Σ η_{νμ}(θ̂^ν − θ^ν)(θ̂^μ − θ^μ)]`.
    pub variance: f64,
    pub standard_error: f64,
    /// Per-coordinate mean of `θ̂ − θ`.
    pub bias: Vec<f64>,
    pub bias_standard_error: Vec<f64>,
    /// `σ² ≥ 0`.
    pub causal: bool,
    /// Per-draw contracted squared deviations, kept for jackknife errors.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Contracted second moment of `θ̂_n` about the true `θ_n`, per channel.
pub fn estimator_variance(
    estimator: &dyn Estimator,
    model: &ParametricModel,
    theta: &ParameterVector,
    metric: &MetricSignature,
    selection: AxisSelection,
    batch: &SampleBatch,
) -> Result<Vec<ChannelVariance>> {
    model.check_shape(theta)?;
    let k = model.obs_dim();
    let w = contraction_weights(metric, selection, k)?;
    let est = estimates(estimator, model, batch)?;
    let mut out = Vec::with_capacity(model.channel_count());
    for n in 0..model.channel_count() {
        let tn = theta.channel(n);
        let zs: Vec<f64> = est
            .iter()
            .map(|e| {
                (0..k)
                    .map(|nu| {
                        let dv = e[n * k + nu] - tn[nu];
                        w[nu] * dv * dv
                    })
                    .sum()
            })
            .collect();
        let (variance, standard_error) = mean_se(&zs);
        let mut bias = Vec::with_capacity(k);
        let mut bias_se = Vec::with_capacity(k);
        for nu in 0..k {
            let ds: Vec<f64> = est.iter().map(|e| e[n * k + nu] - tn[nu]).collect();
            let (b, s) = mean_se(&ds);
            bias.push(b);
            bias_se.push(s);
        }
        out.push(ChannelVariance {
            channel: n,
            variance,
            standard_error,
            bias,
            bias_standard_error: bias_se,
            causal: variance >= 0.0,
            samples: zs,
        });
    }
    Ok(out)
}

/// `I_S = Σ_n 1/σ²(θ̂_n)`.
pub fn stam_information(variances: &[f64]) -> Result<f64> {
    let bad: Vec<usize> = variances
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_nan() || **v <= 0.0)
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::StamUndefined { channels: bad });
    }
    Ok(variances.iter().map(|v| 1.0 / v).sum())
}

/// The scalar Cramér–Rao chain for flat index `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbReport {
    pub index: usize,
    /// Plain coordinate variance `E[(θ̂_i − θ_i)²]`.
    pub variance: f64,
    pub variance_standard_error: f64,
    /// `[I_F⁻¹]_ii`, the CRLB.
    pub crlb: f64,
    /// `1/[I_F]_ii`.
    pub inverse_diagonal: f64,
    pub bias: f64,
    pub bias_standard_error: f64,
    /// `false` when the estimator is detectably biased.
    pub applicable: bool,
    /// `[I_F⁻¹]_ii ≤ σ²_i`.
    pub variance_bound: Inequality,
    /// `1/[I_F]_ii ≤ [I_F⁻¹]_ii`.
    pub crlb_bound: Inequality,
    pub pass: bool,
}

fn significantly_nonzero(mean: f64, se: f64) -> bool {
    if se == 0.0 {
        mean != 0.0
    } else {
        mean.abs() > MC_SIGMAS * se
    }
}

/// `σ²(θ̂_i) ≥ I_F^i ≥ 1/I_{F i}` for a single coordinate.
pub fn crlb_check(
    fim: &FisherMatrix,
    estimator: &dyn Estimator,
    model: &ParametricModel,
    i: usize,
    batch: &SampleBatch,
) -> Result<CrlbReport> {
    let theta = &fim.theta;
    model.check_shape(theta)?;
    if i >= fim.dim() {
        return Err(Error::InvalidArgument(format!(
            "flat index {i} out of range"
        )));
    }
    let inv = fim.inverse()?;
    let est = estimates(estimator, model, batch)?;
    let ti = theta.as_slice()[i];
    let dev: Vec<f64> = est.iter().map(|e| e[i] - ti).collect();
    let sq: Vec<f64> = dev.iter().map(|v| v * v).collect();
    let (variance, variance_se) = mean_se(&sq);
    let (bias, bias_se) = mean_se(&dev);
    let crlb = inv[(i, i)];
    let inverse_diagonal = 1.0 / fim.matrix[(i, i)];
    let applicable = !significantly_nonzero(bias, bias_se);
    let variance_bound = Inequality::le(crlb, variance, MC_SIGMAS * variance_se);
    let crlb_bound = Inequality::le(inverse_diagonal, crlb, 1e-12 * crlb.abs().max(1.0));
    let pass = applicable && variance_bound.pass && crlb_bound.pass;
    Ok(CrlbReport {
        index: i,
        variance,
        variance_standard_error: variance_se,
        crlb,
        inverse_diagonal,
        bias,
        bias_standard_error: bias_se,
        applicable,
        variance_bound,
        crlb_bound,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimation {
    pub channel: usize,
    pub variance: f64,
    pub variance_standard_error: f64,
    pub causal: bool,
    /// `1/σ²`, absent when `σ² ≤ 0`.
    pub stam: Option<f64>,
    pub stam_standard_error: Option<f64>,
    pub fisher: f64,
    /// `[I_F⁻¹]_ii` for each coordinate of the channel.
    pub crlb: Vec<f64>,
    /// `1/[I_F]_ii` for each coordinate of the channel.
    pub inverse_diagonal: Vec<f64>,
}

/// Per-channel variances, Stam terms and Fisher terms with their totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub metric: MetricSignature,
    pub selection: AxisSelection,
    pub estimator: String,
    pub channels: Vec<ChannelEstimation>,
    /// `Σ_n I_S n`, absent when any channel is non-causal.
    pub stam: Option<f64>,
    pub stam_standard_error: Option<f64>,
    /// `I = Σ_n I_Fn`.
    pub capacity: f64,
    pub non_causal_channels: Vec<usize>,
}

pub fn estimation_report(
    fim: &FisherMatrix,
    estimator: &dyn Estimator,
    model: &ParametricModel,
    metric: &MetricSignature,
    selection: AxisSelection,
    batch: &SampleBatch,
) -> Result<EstimationReport> {
    let theta = &fim.theta;
    let k = theta.obs_dim();
    let vars = estimator_variance(estimator, model, theta, metric, selection, batch)?;
    let inv = fim.inverse().ok();
    let mut channels = Vec::with_capacity(vars.len());
    for v in &vars {
        let n = v.channel;
        let fisher = channel_fisher_from(fim, n, metric, selection)?;
        let (stam, stam_se) = if v.variance > 0.0 {
            (
                Some(1.0 / v.variance),
                Some(jackknife_se(&v.samples, |x| 1.0 / x)),
            )
        } else {
            (None, None)
        };
        let idx: Vec<usize> = (0..k).map(|nu| n * k + nu).collect();
        channels.push(ChannelEstimation {
            channel: n,
            variance: v.variance,
            variance_standard_error: v.standard_error,
            causal: v.causal,
            stam,
            stam_standard_error: stam_se,
            fisher,
            crlb: idx
                .iter()
                .map(|&i| inv.as_ref().map_or(f64::NAN, |m| m[(i, i)]))
                .collect(),
            inverse_diagonal: idx.iter().map(|&i| 1.0 / fim.matrix[(i, i)]).collect(),
        });
    }
    let variances: Vec<f64> = vars.iter().map(|v| v.variance).collect();
    let (stam, stam_se) = match stam_information(&variances) {
        Ok(s) => {
            let se2: f64 = channels
                .iter()
                .map(|c| c.stam_standard_error.unwrap_or(0.0).powi(2))
                .sum();
            (Some(s), Some(se2.sqrt()))
        }
        Err(_) => (None, None),
    };
    Ok(EstimationReport {
        metric: metric.clone(),
        selection,
        estimator: estimator.name(),
        capacity: channels.iter().map(|c| c.fisher).sum(),
        non_causal_channels: vars
            .iter()
            .filter(|v| !v.causal)
            .map(|v| v.channel)
            .collect(),
        channels,
        stam,
        stam_standard_error: stam_se,
    })
}

/// `0 ≤ I_S ≤ I` with the MC tolerance applied to the upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StamCapacityCheck {
    pub lower: Inequality,
    pub upper: Inequality,
    /// `|I_S − I|` within tolerance: the Cramér–Rao bound is attained.
    pub efficient: Inequality,
    pub pass: bool,
}

pub fn stam_capacity_check(report: &EstimationReport) -> Result<StamCapacityCheck> {
    let stam = report.stam.ok_or_else(|| Error::StamUndefined {
        channels: report.non_causal_channels.clone(),
    })?;
    let tol = MC_SIGMAS * report.stam_standard_error.unwrap_or(0.0);
    let lower = Inequality::le(0.0, stam, 0.0);
    let upper = Inequality::le(stam, report.capacity, tol);
    let efficient = Inequality::eq(stam, report.capacity, tol);
    Ok(StamCapacityCheck {
        pass: lower.pass && upper.pass,
        lower,
        upper,
        efficient,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub metric: MetricSignature,
    pub method: ExpectationMethod,
    pub per_channel: Vec<f64>,
    pub total: f64,
}

/// `I = Σ_n I_Fn`.
pub fn channel_capacity(
    model: &ParametricModel,
    theta: &ParameterVector,
    metric: &MetricSignature,
    method: &ExpectationMethod,
) -> Result<CapacityReport> {
    let fim = outer_form_fisher(model, theta, method)?;
    let per_channel = (0..model.channel_count())
        .map(|n| channel_fisher_from(&fim, n, metric, AxisSelection::All))
        .collect::<Result<Vec<_>>>()?;
    Ok(CapacityReport {
        metric: metric.clone(),
        method: *method,
        total: per_channel.iter().sum(),
        per_channel,
    })
}

/// `i(y) = P(y|Θ) Σ_n Σ_ν η^{νν} iF_{(nν)(nν)}(y)`, which integrates to `I`.
#[derive(Debug, Clone)]
pub struct CapacityDensity<'a> {
    model: &'a ParametricModel,
    theta: ParameterVector,
    weights: Vec<f64>,
}

impl<'a> CapacityDensity<'a> {
    pub fn new(
        model: &'a ParametricModel,
        theta: &ParameterVector,
        metric: &MetricSignature,
    ) -> Result<Self> {
        model.check_shape(theta)?;
        let weights = contraction_weights(metric, AxisSelection::All, model.obs_dim())?;
        Ok(Self {
            model,
            theta: theta.clone(),
            weights,
        })
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        let ll = self.model.log_likelihood(&self.theta, y)?;
        if ll.is_flagged() {
            return Ok(0.0);
        }
        let ifm = observed_fisher(self.model, &self.theta, y)?;
        let k = self.model.obs_dim();
        let trace: f64 = (0..self.model.param_dim())
            .map(|i| self.weights[i % k] * ifm.matrix[(i, i)])
            .sum();
        Ok(ll.value.exp() * trace)
    }
}

/// One row of the capacity-versus-`N` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub channels: usize,
    pub capacity: f64,
    pub per_channel: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Holds,
    Violated {
        at: usize,
    },
    /// Some channel has `I_Fn < 0`, so no monotone trend is implied.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub monotonicity: Monotonicity,
}

/// Tabulate `I(N)` for `N = 1..=n_max`; `build(N)` supplies the model.
pub fn capacity_sweep<F>(
    n_max: usize,
    metric: &MetricSignature,
    method: &ExpectationMethod,
    mut build: F,
) -> Result<SweepTable>
where
    F: FnMut(usize) -> Result<(ParametricModel, ParameterVector)>,
{
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let (model, theta) = build(n)?;
        let cap = channel_capacity(&model, &theta, metric, method)?;
        rows.push(SweepRow {
            channels: n,
            capacity: cap.total,
            per_channel: cap.per_channel,
        });
    }
    let nonneg = rows.iter().all(|r| r.per_channel.iter().all(|v| *v >= 0.0));
    let monotonicity = if !nonneg {
        Monotonicity::NotApplicable
    } else {
        match rows
            .windows(2)
            .find(|w| w[1].capacity < w[0].capacity - 1e-12 * w[0].capacity.abs())
        {
            Some(w) => Monotonicity::Violated { at: w[1].channels },
            None => Monotonicity::Holds,
        }
    };
    Ok(SweepTable { rows, monotonicity })
}
