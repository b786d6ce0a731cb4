//! Gauss–Hermite quadrature for expectations over multivariate Gaussians.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights for `∫ e^{-x²} f(x) dx` (physicists' convention).
#[derive(Debug, Clone)]
pub struct GaussHermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermiteRule {
    /// Golub–Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
    /// weights are `√π` times the squared first eigenvector components.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "Gauss-Hermite order must be positive".into(),
            ));
        }
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64 / 2.0).sqrt();
            jacobi[(i, i - 1)] = b;
            jacobi[(i - 1, i)] = b;
        }
        let eig = SymmetricEigen::new(jacobi);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let v0 = eig.eigenvectors[(0, j)];
                (eig.eigenvalues[j], sqrt_pi * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize against eigen-solver roundoff
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }
}

/// Tensor-product rule for `E[f(Y)]`, `Y ~ N(mean, cov)`.
#[derive(Debug, Clone)]
pub struct GaussianCubature {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl GaussianCubature {
    pub fn new(mean: &[f64], cov: &DMatrix<f64>, order: usize) -> Result<Self> {
        let k = mean.len();
        if cov.nrows() != k || cov.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: cov.nrows(),
            });
        }
        let chol = cov.clone().cholesky().ok_or_else(|| {
            Error::QuadratureUnavailable("reference covariance is not positive definite".into())
        })?;
        let l = chol.l();
        let rule = GaussHermiteRule::new(order)?;
        let norm = std::f64::consts::PI.powf(-(k as f64) / 2.0);
        let total = order.pow(k as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; k];
        let mut z = vec![0.0; k];
        for _ in 0..total {
            let mut w = norm;
            for (a, &i) in idx.iter().enumerate() {
                z[a] = std::f64::consts::SQRT_2 * rule.nodes[i];
                w *= rule.weights[i];
            }
            let y: Vec<f64> = (0..k)
                .map(|r| mean[r] + (0..=r).map(|c| l[(r, c)] * z[c]).sum::<f64>())
                .collect();
            points.push(y);
            weights.push(w);
            for a in (0..k).rev() {
                idx[a] += 1;
                if idx[a] < order {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points
            .iter()
            .map(Vec::as_slice)
            .zip(self.weights.iter().copied())
    }

    pub fn expect<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(y, w)| w * f(y)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let rule = GaussHermiteRule::new(10).unwrap();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let m0: f64 = rule.weights.iter().sum();
        let m2: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x * x)
            .sum();
        let m4: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(4))
            .sum();
        assert!((m0 - sqrt_pi).abs() < 1e-13);
        assert!((m2 - sqrt_pi / 2.0).abs() < 1e-13);
        assert!((m4 - 3.0 * sqrt_pi / 4.0).abs() < 1e-13);
    }

    #[test]
    fn known_three_point_rule() {
        let rule = GaussHermiteRule::new(3).unwrap();
        assert!((rule.nodes[2] - (1.5f64).sqrt()).abs() < 1e-14);
        assert_eq!(rule.nodes[1], 0.0);
        assert!((rule.weights[1] - 2.0 * std::f64::consts::PI.sqrt() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn correlated_gaussian_moments() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let cub = GaussianCubature::new(&[1.0, -1.0], &cov, 8).unwrap();
        assert!((cub.expect(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!((cub.expect(|y| y[0]) - 1.0).abs() < 1e-13);
        let cxy = cub.expect(|y| (y[0] - 1.0) * (y[1] + 1.0));
        assert!((cxy - 0.6).abs() < 1e-13);
        assert!((cub.expect(|y| (y[0] - 1.0).powi(2)) - 2.0).abs() < 1e-13);
    }
}
