//! Frame subsampling to a target rate by taking the middle frame of fixed-length snippets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub total_frames: usize,
    pub input_fps: f64,
    pub target_fps: f64,
    pub snippet_len: usize,
    pub first_index: usize,
    pub count: usize,
}

impl SamplingPlan {
    /// 1-based original frame index of every sample.
    pub fn indexes(&self) -> Vec<usize> {
        (0..self.count)
            .map(|i| self.first_index + self.snippet_len * i)
            .collect()
    }

    pub fn achieved_fps(&self) -> f64 {
        self.input_fps / self.snippet_len as f64
    }
}

/// Integer snippet length whose rate `input_fps / len` is closest to `target_fps`.
///
/// The error `|r/len - R|` falls for `len < r/R` and rises after, so the optimum is
/// the floor or the ceiling of `r/R`; equal errors go to the shorter snippet.
pub fn snippet_length(input_fps: f64, target_fps: f64) -> usize {
    let ratio = input_fps / target_fps;
    let lo = (ratio.floor() as usize).max(1);
    let hi = (ratio.ceil() as usize).max(1);
    let err = |len: usize| (input_fps / len as f64 - target_fps).abs();
    if err(hi) < err(lo) {
        hi
    } else {
        lo
    }
}

pub fn plan_sampling(total_frames: usize, input_fps: f64, target_fps: f64) -> Result<SamplingPlan> {
    if total_frames == 0 {
        return Err(Error::invalid("total frame count must be at least 1"));
    }
    if !(input_fps.is_finite() && input_fps > 0.0 && target_fps.is_finite() && target_fps > 0.0) {
        return Err(Error::invalid(format!(
            "frame rates must be positive (input {input_fps}, target {target_fps})"
        )));
    }
    let snippet_len = snippet_length(input_fps, target_fps);
    // One sample per complete snippet; a video shorter than a snippet keeps its own middle frame.
    let (first_index, count) = if total_frames < snippet_len {
        (total_frames.div_ceil(2), 1)
    } else {
        (snippet_len.div_ceil(2), total_frames / snippet_len)
    };
    Ok(SamplingPlan {
        total_frames,
        input_fps,
        target_fps,
        snippet_len,
        first_index,
        count,
    })
}

/// Picks `source[t_i]` for every planned sample.
pub fn apply_plan<T: Clone>(plan: &SamplingPlan, source: &[T]) -> Result<Vec<T>> {
    if source.len() != plan.total_frames {
        return Err(Error::LengthMismatch {
            expected: plan.total_frames,
            got: source.len(),
            context: "sampling source".into(),
        });
    }
    Ok(plan.indexes().into_iter().map(|t| source[t - 1].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_to_two_fps() {
        let p = plan_sampling(18, 6.0, 2.0).unwrap();
        assert_eq!((p.snippet_len, p.first_index, p.count), (3, 2, 6));
        assert_eq!(p.indexes(), vec![2, 5, 8, 11, 14, 17]);
    }

    #[test]
    fn identity_rate() {
        let p = plan_sampling(10, 4.0, 4.0).unwrap();
        assert_eq!(p.indexes(), (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn thirty_to_four_fps() {
        let p = plan_sampling(300, 30.0, 4.0).unwrap();
        assert_eq!((p.snippet_len, p.first_index, p.count), (8, 4, 37));
        assert_eq!(*p.indexes().last().unwrap(), 292);
    }

    #[test]
    fn shorter_than_one_snippet() {
        let p = plan_sampling(1, 30.0, 4.0).unwrap();
        assert_eq!(p.indexes(), vec![1]);
        let p = plan_sampling(5, 30.0, 4.0).unwrap();
        assert_eq!(p.indexes(), vec![3]);
    }

    #[test]
    fn apply() {
        let p = SamplingPlan {
            total_frames: 5,
            input_fps: 3.0,
            target_fps: 1.0,
            snippet_len: 3,
            first_index: 2,
            count: 2,
        };
        assert_eq!(apply_plan(&p, &['a', 'b', 'c', 'd', 'e']).unwrap(), vec!['b', 'e']);
        assert!(apply_plan(&p, &['a']).is_err());
        let id = plan_sampling(4, 2.0, 2.0).unwrap();
        assert_eq!(apply_plan(&id, &[1, 2, 3, 4]).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn snippet_length_prefers_best_rate() {
        // 29.88 / 4 = 7.47: rounding would give 7, but 8 lands closer to 4 fps.
        assert_eq!(snippet_length(29.88, 4.0), 8);
        assert_eq!(snippet_length(29.97, 4.0), 8);
        assert_eq!(snippet_length(1.0, 4.0), 1);
    }
}
