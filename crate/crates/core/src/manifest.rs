//! Dataset manifest: per-video frame count, rate, shot segments and user summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::VideoMeta;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub videos: Vec<ManifestVideo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestVideo {
    pub id: String,
    pub total_frames: usize,
    pub fps: f64,
    /// Inclusive 1-based `[start, end]` frame ranges.
    pub segments: Vec<[usize; 2]>,
    #[serde(default)]
    pub user_summaries: Vec<Vec<usize>>,
}

impl ManifestVideo {
    pub fn meta(&self) -> VideoMeta {
        VideoMeta::new(self.id.clone(), self.total_frames, self.fps)
    }

    pub fn segment_lengths(&self) -> Vec<usize> {
        self.segments.iter().map(|[s, e]| e - s + 1).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.total_frames;
        if t == 0 {
            return Err(Error::InvalidManifest(format!("video {}: total_frames is 0", self.id)));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidManifest(format!(
                "video {}: fps must be positive",
                self.id
            )));
        }
        validate_segments(&self.segments, t).map_err(|m| Error::InvalidManifest(format!("video {}: {m}", self.id)))?;
        for (j, summary) in self.user_summaries.iter().enumerate() {
            if let Some(&bad) = summary.iter().find(|&&f| f == 0 || f > t) {
                return Err(Error::IndexOutOfRange {
                    index: bad as u64,
                    max: t as u64,
                    context: format!("video {} user summary {}", self.id, j + 1),
                });
            }
        }
        Ok(())
    }
}

/// Checks that `segments` is an ordered, disjoint, gap-free cover of `[1, total]`.
pub fn validate_segments(segments: &[[usize; 2]], total: usize) -> std::result::Result<(), String> {
    if segments.is_empty() {
        return Err("no segments".into());
    }
    let mut expected = 1;
    for (i, &[s, e]) in segments.iter().enumerate() {
        if s > e {
            return Err(format!("segment {} has start {s} after end {e}", i + 1));
        }
        if s < expected {
            return Err(format!("segment {} [{s}, {e}] overlaps the previous segment", i + 1));
        }
        if s > expected {
            return Err(format!(
                "gap before segment {}: frames {expected}..{} uncovered",
                i + 1,
                s - 1
            ));
        }
        expected = e + 1;
    }
    if expected != total + 1 {
        return Err(format!(
            "segments end at frame {} but the video has {total}",
            expected - 1
        ));
    }
    Ok(())
}

pub fn load_manifest(text: &str) -> Result<DatasetManifest> {
    let manifest: DatasetManifest = serde_json::from_str(text)?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(Error::InvalidManifest(format!(
            "unsupported schema_version {}",
            manifest.schema_version
        )));
    }
    for v in &manifest.videos {
        v.validate()?;
    }
    Ok(manifest)
}

impl DatasetManifest {
    pub fn video(&self, id: &str) -> Option<&ManifestVideo> {
        self.videos.iter().find(|v| v.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(segments: &str, summaries: &str) -> String {
        format!(
            r#"{{"schema_version":1,"videos":[{{"id":"v","total_frames":10,"fps":30,
            "segments":{segments},"user_summaries":{summaries}}}]}}"#
        )
    }

    #[test]
    fn minimal_manifest() {
        let m = load_manifest(&doc("[[1,5],[6,10]]", "[[2,3]]")).unwrap();
        assert_eq!(m.videos[0].segment_lengths(), vec![5, 5]);
    }

    #[test]
    fn overlap_rejected() {
        let err = load_manifest(&doc("[[1,5],[5,10]]", "[]")).unwrap_err();
        assert!(err.to_string().contains("overlaps"), "{err}");
    }

    #[test]
    fn summary_out_of_range() {
        let err = load_manifest(&doc("[[1,10]]", "[[2,11]]")).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 11, max: 10, .. }));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"schema_version":1,"videos":[],"extra":1}"#;
        assert!(load_manifest(text).is_err());
    }

    // Brute-force oracle: mark each covered frame and require exactly one hit per frame,
    // with segments listed in temporal order.
    fn brute_cover(segments: &[[usize; 2]], total: usize) -> bool {
        if segments.is_empty() || segments.iter().any(|[s, e]| s > e || *s == 0 || *e > total) {
            return false;
        }
        let mut hits = vec![0usize; total + 1];
        for [s, e] in segments {
            for h in &mut hits[*s..=*e] {
                *h += 1;
            }
        }
        let ordered = segments.windows(2).all(|w| w[0][1] < w[1][0]);
        ordered && hits[1..].iter().all(|&h| h == 1)
    }

    proptest! {
        #[test]
        fn validation_matches_brute_force(
            raw in prop::collection::vec((1usize..14, 0usize..4), 1..6),
            total in 1usize..16,
        ) {
            let segments: Vec<[usize; 2]> = raw.iter().map(|&(s, l)| [s, s + l]).collect();
            prop_assert_eq!(validate_segments(&segments, total).is_ok(), brute_cover(&segments, total));
        }
    }
}
