//! Exact t-SNE: dense Gaussian affinities calibrated per row by bisection,
//! Student-t output kernel, momentum gradient descent with adaptive gains.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TsneConfig {
    pub dim: usize,
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            dim: 2,
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            seed: 0,
        }
    }
}

impl TsneConfig {
    /// Perplexity actually used for `n` points.
    pub fn effective_perplexity(&self, n: usize) -> f64 {
        self.perplexity.min((n as f64 - 1.0) / 3.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dim == 2 || self.dim == 3) {
            return Err(Error::invalid(format!(
                "t-SNE output dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.perplexity) || !positive(self.learning_rate) || !positive(self.early_exaggeration) {
            return Err(Error::invalid(
                "t-SNE perplexity, learning rate and exaggeration must be positive",
            ));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("t-SNE needs at least one iteration"));
        }
        Ok(())
    }
}

/// Input-space affinities.
#[derive(Debug, Clone)]
pub struct Affinities {
    /// Row-stochastic conditional distributions `p(j | i)`.
    pub conditional: Array2<f64>,
    /// Symmetrized joint distribution, sums to one.
    pub joint: Array2<f64>,
    pub perplexity: f64,
}

#[derive(Debug, Clone)]
pub struct TsneOutput {
    pub embedding: Array2<f64>,
    pub initial_kl: f64,
    pub final_kl: f64,
    pub perplexity: f64,
}

const ENTROPY_TOL: f64 = 1e-10;
const MAX_BISECTION_STEPS: usize = 200;

fn squared_distances(data: &Array2<f64>) -> Array2<f64> {
    let n = data.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = data
                .row(i)
                .iter()
                .zip(data.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Gaussian conditional row with precision `beta`; returns the row and its entropy in nats.
fn conditional_row(dist: &[f64], i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let shift = dist
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, d) in dist.iter().enumerate() {
        if j == i {
            row[j] = 0.0;
            continue;
        }
        let e = (-(d - shift) * beta).exp();
        row[j] = e;
        sum += e;
        weighted += (d - shift) * e;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
    sum.ln() + beta * weighted / sum
}

pub fn affinities(data: &Array2<f64>, perplexity: f64) -> Result<Affinities> {
    let n = data.nrows();
    if n < 2 {
        return Err(Error::DegenerateInput("affinities need at least two points".into()));
    }
    let dist = squared_distances(data);
    if dist.iter().all(|&d| d == 0.0) {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let target = perplexity.ln();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d = dist.row(i).to_vec();
            let mut row = vec![0.0; n];
            let (mut beta, mut lo, mut hi) = (1.0, f64::NEG_INFINITY, f64::INFINITY);
            for _ in 0..MAX_BISECTION_STEPS {
                let h = conditional_row(&d, i, beta, &mut row);
                let diff = h - target;
                if diff.abs() < ENTROPY_TOL {
                    break;
                }
                if diff > 0.0 {
                    lo = beta;
                    beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
                } else {
                    hi = beta;
                    beta = if lo.is_finite() { 0.5 * (beta + lo) } else { beta * 0.5 };
                }
            }
            row
        })
        .collect();

    let mut conditional = Array2::zeros((n, n));
    for (i, r) in rows.iter().enumerate() {
        conditional.row_mut(i).assign(&Array1::from(r.clone()));
    }
    let joint = (&conditional + &conditional.t()) / (2.0 * n as f64);
    Ok(Affinities {
        conditional,
        joint,
        perplexity,
    })
}

/// Perplexity `exp(H)` of a probability row.
pub fn row_perplexity(row: &[f64]) -> f64 {
    let h: f64 = row.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    h.exp()
}

/// Student-t kernel values `1 / (1 + |y_i - y_j|^2)` and their off-diagonal sum.
fn student_kernel(y: &Array2<f64>) -> (Array2<f64>, f64) {
    let n = y.nrows();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            let mut sum = 0.0;
            for (j, slot) in row.iter_mut().enumerate() {
                if j == i {
                    continue;
                }
                let d2: f64 = y
                    .row(i)
                    .iter()
                    .zip(y.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let v = 1.0 / (1.0 + d2);
                *slot = v;
                sum += v;
            }
            (row, sum)
        })
        .collect();
    let mut num = Array2::zeros((n, n));
    let mut total = 0.0;
    for (i, (r, s)) in rows.into_iter().enumerate() {
        num.row_mut(i).assign(&Array1::from(r));
        total += s;
    }
    (num, total)
}

pub fn kl_divergence(joint: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let (num, z) = student_kernel(y);
    let mut kl = 0.0;
    for ((i, j), &p) in joint.indexed_iter() {
        if i == j || p <= 0.0 {
            continue;
        }
        let q = (num[[i, j]] / z).max(f64::MIN_POSITIVE);
        kl += p * (p / q).ln();
    }
    kl
}

pub fn tsne_transform(data: &Array2<f64>, cfg: &TsneConfig) -> Result<TsneOutput> {
    cfg.validate()?;
    let n = data.nrows();
    if n < 4 {
        return Err(Error::DegenerateInput(format!(
            "t-SNE needs at least 4 points, got {n}"
        )));
    }
    let perplexity = cfg.effective_perplexity(n);
    let aff = affinities(data, perplexity)?;
    let p = aff.joint;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let y = Array2::from_shape_fn((n, cfg.dim), |_| normal.sample(&mut rng));
    let initial_kl = kl_divergence(&p, &y);

    let dim = cfg.dim;
    let pf: Vec<f64> = p.iter().copied().collect();
    let mut yf: Vec<f64> = y.iter().copied().collect();
    let mut update = vec![0.0f64; n * dim];
    let mut gains = vec![1.0f64; n * dim];

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iterations {
            cfg.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < 250 { 0.5 } else { 0.8 };

        // With q_ij = w_ij / Z and w_ij = 1 / (1 + |y_i - y_j|^2), the gradient is
        // 4 Σ_j (e·p_ij − w_ij / Z) w_ij (y_i − y_j): an attractive and a repulsive sum,
        // the latter scaled by 1/Z once every row is done.
        let rows: Vec<(Vec<f64>, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let yi = &yf[i * dim..(i + 1) * dim];
                let mut acc = vec![0.0; 2 * dim];
                let mut z_row = 0.0;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let yj = &yf[j * dim..(j + 1) * dim];
                    let d2: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                    let w = 1.0 / (1.0 + d2);
                    z_row += w;
                    let attract = exaggeration * pf[i * n + j] * w;
                    let repel = w * w;
                    for k in 0..dim {
                        let diff = yi[k] - yj[k];
                        acc[k] += attract * diff;
                        acc[dim + k] += repel * diff;
                    }
                }
                (acc, z_row)
            })
            .collect();
        let z: f64 = rows.iter().map(|r| r.1).sum();

        for (i, (acc, _)) in rows.iter().enumerate() {
            for k in 0..dim {
                let idx = i * dim + k;
                let g = 4.0 * (acc[k] - acc[dim + k] / z);
                let gain = &mut gains[idx];
                *gain = if (g > 0.0) != (update[idx] > 0.0) {
                    *gain + 0.2
                } else {
                    *gain * 0.8
                };
                *gain = gain.max(0.01);
                update[idx] = momentum * update[idx] - cfg.learning_rate * *gain * g;
                yf[idx] += update[idx];
            }
        }
        for k in 0..dim {
            let mean = (0..n).map(|i| yf[i * dim + k]).sum::<f64>() / n as f64;
            for i in 0..n {
                yf[i * dim + k] -= mean;
            }
        }
    }
    let y = Array2::from_shape_vec((n, dim), yf).expect("shape preserved");

    let final_kl = kl_divergence(&p, &y);
    Ok(TsneOutput {
        embedding: y,
        initial_kl,
        final_kl,
        perplexity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_points_rejected() {
        let data = Array2::from_elem((6, 3), 1.5);
        let err = tsne_transform(&data, &TsneConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
    }

    #[test]
    fn too_few_points() {
        let data = array![[0.0], [1.0], [2.0]];
        assert!(tsne_transform(&data, &TsneConfig::default()).is_err());
    }

    #[test]
    fn invalid_dim() {
        let data = array![[0.0], [1.0], [2.0], [4.0]];
        let cfg = TsneConfig {
            dim: 5,
            ..TsneConfig::default()
        };
        assert!(tsne_transform(&data, &cfg).is_err());
    }

    #[test]
    fn joint_is_a_symmetric_distribution() {
        let data = array![[0.0, 0.0], [1.0, 0.2], [3.0, 1.0], [0.5, 4.0], [2.0, 2.0]];
        let aff = affinities(&data, 1.3).unwrap();
        assert!((aff.joint.sum() - 1.0).abs() < 1e-12);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(aff.joint[[i, j]], aff.joint[[j, i]]);
                assert!(aff.joint[[i, j]] >= 0.0);
            }
        }
    }
}
