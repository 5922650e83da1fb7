use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Principal axes of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `D x D'` matrix whose columns are the retained principal axes.
    pub components: Array2<f64>,
    /// Variance along each retained axis (sample covariance, `n - 1` normalization), non-increasing.
    pub explained_variance: Vec<f64>,
    /// Eigenvalues of every axis, retained or not, non-increasing.
    pub all_variances: Vec<f64>,
}

impl PcaModel {
    pub fn transform(&self, data: &Array2<f64>) -> Array2<f64> {
        (data - &self.mean).dot(&self.components)
    }

    pub fn inverse_transform(&self, projected: &Array2<f64>) -> Array2<f64> {
        projected.dot(&self.components.t()) + &self.mean
    }

    pub fn discarded_variance(&self) -> f64 {
        self.all_variances[self.explained_variance.len()..].iter().sum()
    }
}

pub fn pca_fit_transform(data: &Array2<f64>, target_dim: usize) -> Result<(PcaModel, Array2<f64>)> {
    let (n, d) = data.dim();
    if target_dim == 0 || target_dim > n.min(d) {
        return Err(Error::invalid(format!(
            "PCA target dimension {target_dim} outside [1, {}]",
            n.min(d)
        )));
    }
    let mean = data.mean_axis(Axis(0)).expect("non-empty data");
    let centered = data - &mean;
    let denom = (n.saturating_sub(1)).max(1) as f64;
    let cov = centered.t().dot(&centered) / denom;

    let cov_na = DMatrix::from_fn(d, d, |i, j| 0.5 * (cov[[i, j]] + cov[[j, i]]));
    let eig = SymmetricEigen::new(cov_na);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });

    let all_variances: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let mut components = Array2::zeros((d, target_dim));
    for (out, &k) in order.iter().take(target_dim).enumerate() {
        let v = eig.eigenvectors.column(k);
        // Sign convention: the largest-magnitude entry is positive (first one on ties).
        let mut pivot = 0;
        for i in 1..d {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            components[[i, out]] = sign * v[i];
        }
    }

    let projected = centered.dot(&components);
    let model = PcaModel {
        mean,
        components,
        explained_variance: all_variances[..target_dim].to_vec(),
        all_variances,
    };
    Ok((model, projected))
}
