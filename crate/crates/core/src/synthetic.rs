//! Synthetic videos: temporally blocked Gaussian blobs with planted user summaries.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::ManifestVideo;
use crate::sampling::plan_sampling;
use crate::types::{EmbeddingSet, VideoMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlobSpec {
    pub video_id: String,
    /// Length of every block in samples.
    pub blocks: Vec<usize>,
    pub dim: usize,
    /// Distance between block centres in units of the noise deviation.
    pub separation: f64,
    pub sigma: f64,
    pub input_fps: f64,
    pub target_fps: f64,
    /// Shortest and longest manifest segment in frames; lengths are drawn uniformly.
    pub segment_frames: [usize; 2],
    /// Where users anchor their selections.
    pub anchors: Anchors,
    pub users: usize,
    /// Half-width, in frames, of the window every user keeps around each block's middle.
    pub user_half_width: usize,
    /// Largest random shift of a user's windows, in frames.
    pub user_jitter: usize,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            video_id: "synthetic".into(),
            blocks: vec![80; 5],
            dim: 16,
            separation: 10.0,
            sigma: 1.0,
            input_fps: 30.0,
            target_fps: 4.0,
            segment_frames: [45, 150],
            anchors: Anchors::Middles,
            users: 5,
            user_half_width: 45,
            user_jitter: 15,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchors {
    /// The middle frame of every block.
    Middles,
    /// Block middles plus every transition between blocks.
    MiddlesAndTransitions,
}

/// A synthetic video: sampled embeddings, manifest entry and true block starts.
#[derive(Debug, Clone)]
pub struct BlobVideo {
    pub embeddings: EmbeddingSet,
    pub manifest: ManifestVideo,
    /// 1-based sample index where each block after the first begins.
    pub boundaries: Vec<usize>,
}

pub fn blocked_blobs(spec: &BlobSpec) -> Result<BlobVideo> {
    if spec.blocks.is_empty() || spec.blocks.contains(&0) {
        return Err(Error::invalid("every block needs at least one sample"));
    }
    if spec.dim < spec.blocks.len() {
        return Err(Error::invalid("dimension must be at least the number of blocks"));
    }
    let [seg_min, seg_max] = spec.segment_frames;
    if seg_min == 0 || seg_min > seg_max {
        return Err(Error::invalid("segment lengths need 1 <= min <= max"));
    }
    let samples: usize = spec.blocks.iter().sum();
    let probe = plan_sampling(1, spec.input_fps, spec.target_fps)?;
    let snippet = probe.snippet_len;
    let total = samples * snippet;
    let plan = plan_sampling(total, spec.input_fps, spec.target_fps)?;
    debug_assert_eq!(plan.count, samples);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::invalid(e.to_string()))?;
    // Orthogonal centres at pairwise distance `separation · sigma`.
    let radius = spec.separation * spec.sigma / std::f64::consts::SQRT_2;
    let mut matrix = Array2::zeros((samples, spec.dim));
    let mut row = 0;
    let mut boundaries = Vec::new();
    let mut anchors = Vec::new();
    for (b, &len) in spec.blocks.iter().enumerate() {
        if b > 0 {
            boundaries.push(row + 1);
            if spec.anchors == Anchors::MiddlesAndTransitions {
                anchors.push(plan.indexes()[row]);
            }
        }
        anchors.push(plan.indexes()[row + len / 2]);
        for _ in 0..len {
            for d in 0..spec.dim {
                let centre = if d == b { radius } else { 0.0 };
                matrix[[row, d]] = centre + noise.sample(&mut rng);
            }
            row += 1;
        }
    }

    let mut segments = Vec::new();
    let mut start = 1;
    while start <= total {
        let end = (start + rng.random_range(seg_min..=seg_max) - 1).min(total);
        segments.push([start, end]);
        start = end + 1;
    }
    let user_summaries = (0..spec.users)
        .map(|_| {
            let mut frames = Vec::new();
            for &m in &anchors {
                let shift = rng.random_range(0..=2 * spec.user_jitter) as i64 - spec.user_jitter as i64;
                let centre = (m as i64 + shift).clamp(1, total as i64) as usize;
                let lo = centre.saturating_sub(spec.user_half_width).max(1);
                let hi = (centre + spec.user_half_width).min(total);
                frames.extend(lo..=hi);
            }
            frames.sort_unstable();
            frames.dedup();
            frames
        })
        .collect();

    let meta = VideoMeta::new(spec.video_id.clone(), total, spec.input_fps);
    Ok(BlobVideo {
        embeddings: EmbeddingSet::new(meta, plan.indexes(), plan.achieved_fps(), matrix)?,
        manifest: ManifestVideo {
            id: spec.video_id.clone(),
            total_frames: total,
            fps: spec.input_fps,
            segments,
            user_summaries,
        },
        boundaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape() {
        let v = blocked_blobs(&BlobSpec::default()).unwrap();
        assert_eq!(v.embeddings.len(), 400);
        assert_eq!(v.embeddings.dim(), 16);
        assert_eq!(v.manifest.total_frames, 3200);
        assert_eq!(v.boundaries, vec![81, 161, 241, 321]);
        v.manifest.validate().unwrap();
    }
}
