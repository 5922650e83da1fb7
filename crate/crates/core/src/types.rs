//! Domain types shared by every pipeline stage.
//!
//! All frame and sample indexes are 1-based. Conversion to 0-based offsets
//! happens only where a slice is indexed.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub total_frames: usize,
    pub input_fps: f64,
    pub frame_width: u32,
    pub frame_height: u32,
    pub channels: u32,
}

impl VideoMeta {
    /// Metadata with placeholder frame geometry, for sources that only know length and rate.
    pub fn new(video_id: impl Into<String>, total_frames: usize, input_fps: f64) -> Self {
        VideoMeta {
            video_id: video_id.into(),
            total_frames,
            input_fps,
            frame_width: 1,
            frame_height: 1,
            channels: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_frames == 0 {
            return Err(Error::invalid("total_frames must be at least 1"));
        }
        if !(self.input_fps.is_finite() && self.input_fps > 0.0) {
            return Err(Error::invalid(format!(
                "input fps must be positive, got {}",
                self.input_fps
            )));
        }
        if self.frame_width == 0 || self.frame_height == 0 || self.channels == 0 {
            return Err(Error::invalid("frame geometry must be positive"));
        }
        Ok(())
    }
}

/// Embeddings of the sampled frames of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    meta: VideoMeta,
    sample_indexes: Vec<usize>,
    sample_fps: f64,
    matrix: Array2<f64>,
}

impl EmbeddingSet {
    pub fn new(meta: VideoMeta, sample_indexes: Vec<usize>, sample_fps: f64, matrix: Array2<f64>) -> Result<Self> {
        meta.validate()?;
        if sample_indexes.is_empty() {
            return Err(Error::invalid("an embedding set needs at least one sample"));
        }
        if matrix.nrows() != sample_indexes.len() {
            return Err(Error::LengthMismatch {
                expected: sample_indexes.len(),
                got: matrix.nrows(),
                context: "embedding rows vs sample indexes".into(),
            });
        }
        if matrix.ncols() == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if !(sample_fps.is_finite() && sample_fps > 0.0) {
            return Err(Error::invalid(format!("sample fps must be positive, got {sample_fps}")));
        }
        check_indexes(&sample_indexes, meta.total_frames)?;
        check_finite(&matrix)?;
        Ok(EmbeddingSet {
            meta,
            sample_indexes,
            sample_fps,
            matrix,
        })
    }

    pub fn meta(&self) -> &VideoMeta {
        &self.meta
    }

    pub fn sample_indexes(&self) -> &[usize] {
        &self.sample_indexes
    }

    pub fn sample_fps(&self) -> f64 {
        self.sample_fps
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.sample_indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_indexes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Same samples and metadata, different embedding matrix.
    pub fn with_matrix(&self, matrix: Array2<f64>) -> Result<Self> {
        EmbeddingSet::new(self.meta.clone(), self.sample_indexes.clone(), self.sample_fps, matrix)
    }

    pub fn with_video_id(mut self, video_id: impl Into<String>) -> Self {
        self.meta.video_id = video_id.into();
        self
    }
}

pub(crate) fn check_indexes(indexes: &[usize], total_frames: usize) -> Result<()> {
    for (pos, w) in indexes.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::NonIncreasingIndex {
                position: pos + 1,
                prev: w[0] as u64,
                next: w[1] as u64,
            });
        }
    }
    for &i in indexes {
        if i == 0 || i > total_frames {
            return Err(Error::IndexOutOfRange {
                index: i as u64,
                max: total_frames as u64,
                context: "sample index".into(),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_finite(matrix: &Array2<f64>) -> Result<()> {
    for ((row, col), v) in matrix.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// One step of a dimension-reduction chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", content = "dim", rename_all = "lowercase")]
pub enum ReductionStep {
    Pca(usize),
    Tsne(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedEmbeddingSet {
    pub embeddings: EmbeddingSet,
    /// Input dimension followed by the output dimension of every step applied.
    pub provenance: Vec<ReductionStep>,
    pub input_dim: usize,
}

impl ReducedEmbeddingSet {
    pub fn intermediate_dim(&self) -> Option<usize> {
        match self.provenance.as_slice() {
            [ReductionStep::Pca(d), ReductionStep::Tsne(_)] => Some(*d),
            _ => None,
        }
    }
}

/// Per-sample cluster labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSequence(pub Vec<usize>);

impl LabelSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Relabels to `0..K` in order of first appearance.
    pub fn canonicalize(&self) -> LabelSequence {
        let mut map = std::collections::HashMap::new();
        let labels = self
            .0
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        LabelSequence(labels)
    }

    pub fn cluster_count(&self) -> usize {
        let mut seen: Vec<usize> = self.0.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// A contiguous run of samples `[start, start + len)`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub start: usize,
    pub len: usize,
}

impl Section {
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn contains(&self, sample: usize) -> bool {
        sample >= self.start && sample <= self.end()
    }

    pub fn samples(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end()
    }
}

/// Ordered sections that exactly cover samples `1..=T̂`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct PartitionSet {
    sections: Vec<Section>,
}

impl PartitionSet {
    pub fn new(sections: Vec<Section>) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::invalid("a partition set needs at least one section"));
        }
        let mut next = 1;
        for (i, s) in sections.iter().enumerate() {
            if s.len == 0 {
                return Err(Error::invalid(format!("section {} has zero length", i + 1)));
            }
            if s.start != next {
                return Err(Error::invalid(format!(
                    "section {} starts at {} but {} was expected",
                    i + 1,
                    s.start,
                    next
                )));
            }
            next = s.start + s.len;
        }
        Ok(PartitionSet { sections })
    }

    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        let mut start = 1;
        let sections = lengths
            .iter()
            .map(|&len| {
                let s = Section { start, len };
                start += len;
                s
            })
            .collect();
        PartitionSet::new(sections)
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.sections.iter().map(|s| s.len).collect()
    }

    /// Total number of samples covered.
    pub fn total(&self) -> usize {
        self.sections.last().map(|s| s.end()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    /// 1-based sample index where each section after the first begins.
    pub fn boundaries(&self) -> Vec<usize> {
        self.sections.iter().skip(1).map(|s| s.start).collect()
    }
}

impl TryFrom<Vec<(usize, usize)>> for PartitionSet {
    type Error = Error;

    fn try_from(v: Vec<(usize, usize)>) -> Result<Self> {
        PartitionSet::new(v.into_iter().map(|(start, len)| Section { start, len }).collect())
    }
}

impl From<PartitionSet> for Vec<(usize, usize)> {
    fn from(p: PartitionSet) -> Self {
        p.sections.into_iter().map(|s| (s.start, s.len)).collect()
    }
}

/// Keyframes (sample indexes) per partition plus their sorted union.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyframeSet {
    pub per_partition: Vec<Vec<usize>>,
    pub all: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceCurve {
    pub flat: Vec<f64>,
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_frame: Option<Vec<f64>>,
}

/// Selected original frames as both a sorted index set and a length-T bit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummarySelection {
    pub frames: Vec<usize>,
    pub bits: Vec<bool>,
    pub budget_frames: usize,
}

impl SummarySelection {
    pub fn from_bits(bits: Vec<bool>, budget_frames: usize) -> Self {
        let frames = bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| i + 1)
            .collect();
        SummarySelection {
            frames,
            bits,
            budget_frames,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Run-length encoding of the bit vector as `(value, run)` pairs.
    pub fn run_lengths(&self) -> Vec<(u8, usize)> {
        let mut out: Vec<(u8, usize)> = Vec::new();
        for &b in &self.bits {
            let v = b as u8;
            match out.last_mut() {
                Some((last, n)) if *last == v => *n += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn canonicalize_by_first_appearance() {
        let l = LabelSequence(vec![7, 7, 3, 9, 3]);
        assert_eq!(l.canonicalize().0, vec![0, 0, 1, 2, 1]);
        assert_eq!(l.cluster_count(), 3);
    }

    #[test]
    fn partition_set_rejects_gaps() {
        let bad = PartitionSet::new(vec![Section { start: 1, len: 2 }, Section { start: 4, len: 1 }]);
        assert!(bad.is_err());
        let ok = PartitionSet::from_lengths(&[2, 3, 1]).unwrap();
        assert_eq!(ok.total(), 6);
        assert_eq!(ok.boundaries(), vec![3, 6]);
    }

    #[test]
    fn embedding_set_rejects_nan() {
        let meta = VideoMeta::new("v", 10, 30.0);
        let err = EmbeddingSet::new(meta, vec![1, 2], 4.0, array![[0.0, 1.0], [f64::NAN, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn run_lengths() {
        let s = SummarySelection::from_bits(vec![false, true, true, false], 4);
        assert_eq!(s.frames, vec![2, 3]);
        assert_eq!(s.run_lengths(), vec![(0, 1), (1, 2), (0, 1)]);
    }
}
