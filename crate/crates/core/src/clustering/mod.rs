//! Coarse-to-fine contextual clustering.
//!
//! BIRCH leaf subclusters become atoms; atoms are merged agglomeratively until
//! the number of clusters given by [`cluster_count`] remains.

mod agglomerative;
mod birch;

use serde::{Deserialize, Serialize};

pub use agglomerative::{agglomerative_fine, agglomerative_fine_traced, Merge};
pub use birch::{birch_coarse, default_threshold, ThresholdRule};

use crate::error::{Error, Result};

/// Sigmoidal law mapping the target summary length to a cluster count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterCountLaw {
    pub max_clusters: usize,
    pub modulation: f64,
    pub target_frames: usize,
}

/// `K = clamp(round(K̂ · tanh(Z·L′/2)), 1, K̂)`, the rising branch `2K̂/(1 + e^{−Z·L′}) − K̂`.
pub fn cluster_count(law: &ClusterCountLaw) -> usize {
    let raw = law.max_clusters as f64 * (law.modulation * law.target_frames as f64 / 2.0).tanh();
    let k = raw.round();
    if k.is_nan() || k < 1.0 {
        return 1;
    }
    (k as usize).clamp(1, law.max_clusters.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
    /// `1 − cos(a, b)`; a zero vector is at distance 1 from everything.
    Cosine,
}

impl Distance {
    pub fn between(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Distance::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 || nb == 0.0 {
                    return 1.0;
                }
                (1.0 - dot / (na.sqrt() * nb.sqrt())).max(0.0)
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Distance::Euclidean => "Euclidean",
            Distance::Cosine => "Cosine",
        }
    }
}

impl std::str::FromStr for Distance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Distance::Euclidean),
            "cosine" => Ok(Distance::Cosine),
            other => Err(Error::invalid(format!("unknown distance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::invalid(format!("unknown linkage {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkageRule {
    pub linkage: Linkage,
    pub distance: Distance,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(l: usize) -> ClusterCountLaw {
        ClusterCountLaw {
            max_clusters: 60,
            modulation: 1e-3,
            target_frames: l,
        }
    }

    #[test]
    fn origin_clamps_to_one() {
        assert_eq!(cluster_count(&law(0)), 1);
    }

    #[test]
    fn asymptote() {
        assert_eq!(cluster_count(&law(1_000_000)), 60);
    }

    #[test]
    fn closed_form_value() {
        // 60 · tanh(1.44) = 53.63…
        assert_eq!(cluster_count(&law(2880)), 54);
    }

    #[test]
    fn monotone() {
        let mut prev = 0;
        for l in (0..20_000).step_by(37) {
            let k = cluster_count(&law(l));
            assert!(k >= prev && (1..=60).contains(&k));
            prev = k;
        }
    }

    #[test]
    fn cosine_distance() {
        assert!((Distance::Cosine.between(&[1.0, 0.0], &[0.0, 2.0]) - 1.0).abs() < 1e-15);
        assert!(Distance::Cosine.between(&[1.0, 1.0], &[2.0, 2.0]).abs() < 1e-15);
        assert_eq!(Distance::Cosine.between(&[0.0, 0.0], &[1.0, 0.0]), 1.0);
    }
}
