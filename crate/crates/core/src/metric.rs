//! Diagonal metric tensors of Euclidean and Minkowski signature.
//!
//! Index 0 is the temporal axis for Minkowski metrics, so the diagonal is
//! `(+1, -1, -1, ...)`. A diagonal of `±1` entries is its own dual, which
//! means `η_{νμ}` and `η^{νμ}` share the same storage.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Minkowski,
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(MetricKind::Euclidean),
            "minkowski" => Ok(MetricKind::Minkowski),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric kind `{other}`"
            ))),
        }
    }
}

/// A diagonal metric with `±1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSignature {
    kind: MetricKind,
    diagonal: Vec<f64>,
}

impl MetricSignature {
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(MetricKind::Euclidean, dim)
    }

    pub fn minkowski(dim: usize) -> Result<Self> {
        Self::new(MetricKind::Minkowski, dim)
    }

    pub fn new(kind: MetricKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "metric dimension must be positive".into(),
            ));
        }
        let diagonal = (0..dim)
            .map(|i| match kind {
                MetricKind::Euclidean => 1.0,
                MetricKind::Minkowski if i == 0 => 1.0,
                MetricKind::Minkowski => -1.0,
            })
            .collect();
        Ok(Self { kind, diagonal })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// The diagonal entries `η_{νν}` (equal to `η^{νν}`).
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn sign(&self, axis: usize) -> f64 {
        self.diagonal[axis]
    }

    /// The metric restricted to the spatial axes `1..dim` with all-plus signs.
    pub fn spatial_euclidean(&self) -> Result<Self> {
        if self.dim() < 2 {
            return Err(Error::InvalidArgument(
                "spatial restriction needs at least two axes".into(),
            ));
        }
        Self::euclidean(self.dim() - 1)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// `Σ_ν η^{νν} u_ν v_ν`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        Ok(self
            .diagonal
            .iter()
            .zip(u.iter().zip(v))
            .map(|(s, (a, b))| s * a * b)
            .sum())
    }

    /// `θ_ν = Σ_μ η_{νμ} θ^μ`.
    pub fn lower_index(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        Ok(self.diagonal.iter().zip(v).map(|(s, x)| s * x).collect())
    }

    /// `θ^ν = Σ_μ η^{νμ} θ_μ`. Identical to [`lower_index`](Self::lower_index)
    /// for `±1` diagonals.
    pub fn raise_index(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.lower_index(v)
    }

    /// Contract a symmetric `dim × dim` block with `η^{νμ}`.
    pub fn contract_block(&self, block: &DMatrix<f64>) -> Result<f64> {
        self.check_len(block.nrows())?;
        self.check_len(block.ncols())?;
        Ok((0..self.dim())
            .map(|i| self.diagonal[i] * block[(i, i)])
            .sum())
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diagonal.clone()))
    }

    /// Standard single-axis boost `Λ` with `Λᵀ η Λ = η`.
    pub fn boost_matrix(&self, boost: &BoostParameters) -> Result<DMatrix<f64>> {
        if self.kind != MetricKind::Minkowski {
            return Err(Error::InvalidArgument(
                "boosts are only defined for a Minkowski metric".into(),
            ));
        }
        if self.dim() < 2 {
            return Err(Error::InvalidArgument("boosts need dimension >= 2".into()));
        }
        if boost.axis == 0 || boost.axis >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "boost axis {} must be a spatial index in 1..{}",
                boost.axis,
                self.dim()
            )));
        }
        let gamma = boost.gamma();
        let mut lambda = DMatrix::identity(self.dim(), self.dim());
        lambda[(0, 0)] = gamma;
        lambda[(boost.axis, boost.axis)] = gamma;
        lambda[(0, boost.axis)] = -gamma * boost.beta;
        lambda[(boost.axis, 0)] = -gamma * boost.beta;
        Ok(lambda)
    }
}

/// Velocity fraction and spatial axis of a standard boost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParameters {
    beta: f64,
    axis: usize,
}

impl BoostParameters {
    pub fn new(beta: f64, axis: usize) -> Result<Self> {
        if !beta.is_finite() || beta.abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "boost velocity fraction must lie in (-1, 1), got {beta}"
            )));
        }
        if axis == 0 {
            return Err(Error::InvalidArgument(
                "boost axis must be spatial (>= 1)".into(),
            ));
        }
        Ok(Self { beta, axis })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 - self.beta * self.beta).sqrt()
    }

    pub fn inverse(&self) -> Self {
        Self {
            beta: -self.beta,
            axis: self.axis,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn contract_examples() {
        let e3 = MetricSignature::euclidean(3).unwrap();
        assert_eq!(e3.contract(&[1.0; 3], &[1.0; 3]).unwrap(), 3.0);
        let m4 = MetricSignature::minkowski(4).unwrap();
        assert_eq!(m4.contract(&[1.0; 4], &[1.0; 4]).unwrap(), -2.0);
        assert_eq!(
            m4.contract(&[2.0, 0.0, 0.0, 0.0], &[0.0, 3.0, 0.0, 0.0])
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn contract_rejects_mismatch() {
        let m4 = MetricSignature::minkowski(4).unwrap();
        assert!(matches!(
            m4.contract(&[1.0; 3], &[1.0; 4]),
            Err(Error::DimensionMismatch {
                expected: 4,
                found: 3
            })
        ));
        assert!(m4.lower_index(&[1.0; 5]).is_err());
    }

    #[test]
    fn lowering() {
        let m4 = MetricSignature::minkowski(4).unwrap();
        assert_eq!(
            m4.lower_index(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![1.0, -2.0, -3.0, -4.0]
        );
        let e3 = MetricSignature::euclidean(3).unwrap();
        assert_eq!(
            e3.lower_index(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn dual_metric_is_kronecker() {
        let m = MetricSignature::minkowski(4).unwrap().as_matrix();
        assert_eq!(&m * &m, DMatrix::identity(4, 4));
    }

    #[test]
    fn boost_examples() {
        let m2 = MetricSignature::minkowski(2).unwrap();
        let id = m2
            .boost_matrix(&BoostParameters::new(0.0, 1).unwrap())
            .unwrap();
        assert_eq!(id, DMatrix::identity(2, 2));

        let l = m2
            .boost_matrix(&BoostParameters::new(0.6, 1).unwrap())
            .unwrap();
        assert_abs_diff_eq!(l[(0, 0)], 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 1)], 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(0, 1)], -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 0)], -0.75, epsilon = 1e-15);
    }

    #[test]
    fn boost_errors() {
        let e = MetricSignature::euclidean(2).unwrap();
        assert!(e
            .boost_matrix(&BoostParameters::new(0.2, 1).unwrap())
            .is_err());
        assert!(BoostParameters::new(1.0, 1).is_err());
        assert!(BoostParameters::new(0.5, 0).is_err());
        let m2 = MetricSignature::minkowski(2).unwrap();
        assert!(m2
            .boost_matrix(&BoostParameters::new(0.5, 2).unwrap())
            .is_err());
    }

    fn vec4() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0..10.0f64, 4)
    }

    proptest! {
        #[test]
        fn contract_symmetric_bilinear(u in vec4(), v in vec4(), w in vec4(), a in -3.0..3.0f64) {
            let m = MetricSignature::minkowski(4).unwrap();
            let uv = m.contract(&u, &v).unwrap();
            prop_assert!((uv - m.contract(&v, &u).unwrap()).abs() < 1e-12);
            let au_w: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + y).collect();
            let lhs = m.contract(&au_w, &v).unwrap();
            let rhs = a * uv + m.contract(&w, &v).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn raise_lower_identity(v in vec4()) {
            let m = MetricSignature::minkowski(4).unwrap();
            let back = m.raise_index(&m.lower_index(&v).unwrap()).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn boost_preserves_contraction(u in vec4(), v in vec4(), beta in -0.9..0.9f64, axis in 1usize..4) {
            let m = MetricSignature::minkowski(4).unwrap();
            let l = m.boost_matrix(&BoostParameters::new(beta, axis).unwrap()).unwrap();
            let iso = l.transpose() * m.as_matrix() * &l - m.as_matrix();
            prop_assert!(iso.amax() < 1e-12);
            let lu = &l * nalgebra::DVector::from_vec(u.clone());
            let lv = &l * nalgebra::DVector::from_vec(v.clone());
            let before = m.contract(&u, &v).unwrap();
            let after = m.contract(lu.as_slice(), lv.as_slice()).unwrap();
            prop_assert!((before - after).abs() < 1e-10 * (1.0 + before.abs()));
        }
    }
}
