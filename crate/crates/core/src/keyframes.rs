//! Keyframe selection and per-sample importance scores.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::clustering::Distance;
use crate::error::{Error, Result};
use crate::types::{KeyframeSet, PartitionSet};

/// Which keyframe rules are active; written `middle+ends` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct KeyframeRules {
    pub mean: bool,
    pub middle: bool,
    pub ends: bool,
}

impl Default for KeyframeRules {
    fn default() -> Self {
        KeyframeRules {
            mean: false,
            middle: true,
            ends: true,
        }
    }
}

impl KeyframeRules {
    pub fn is_empty(&self) -> bool {
        !(self.mean || self.middle || self.ends)
    }

    /// Keyframe biasing is defined for every rule set except `Mean` alone.
    pub fn supports_biasing(&self) -> bool {
        self.middle || self.ends
    }
}

impl FromStr for KeyframeRules {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut r = KeyframeRules {
            mean: false,
            middle: false,
            ends: false,
        };
        for part in s.split('+') {
            match part.trim().to_ascii_lowercase().as_str() {
                "mean" => r.mean = true,
                "middle" => r.middle = true,
                "ends" | "end" => r.ends = true,
                other => return Err(Error::invalid(format!("unknown keyframe rule {other:?}"))),
            }
        }
        Ok(r)
    }
}

impl fmt::Display for KeyframeRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.mean {
            parts.push("mean");
        }
        if self.middle {
            parts.push("middle");
        }
        if self.ends {
            parts.push("ends");
        }
        f.write_str(&parts.join("+"))
    }
}

impl TryFrom<String> for KeyframeRules {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KeyframeRules> for String {
    fn from(r: KeyframeRules) -> String {
        r.to_string()
    }
}

/// Keyframes per partition. `embeddings` (row `j - 1` for sample `j`) is required by `Mean`.
pub fn select_keyframes(
    partitions: &PartitionSet,
    embeddings: Option<&Array2<f64>>,
    rules: KeyframeRules,
    distance: Distance,
) -> Result<KeyframeSet> {
    if rules.is_empty() {
        return Err(Error::invalid("no keyframe rule selected"));
    }
    if rules.mean && embeddings.is_none() {
        return Err(Error::invalid("the mean keyframe rule needs embeddings"));
    }
    let mut per_partition = Vec::with_capacity(partitions.len());
    for s in partitions.sections() {
        let mut ks = Vec::new();
        if rules.mean {
            let e = embeddings.expect("checked above");
            let rows = e.slice(ndarray::s![s.start - 1..s.end(), ..]);
            let centroid = rows.mean_axis(Axis(0)).expect("non-empty section").to_vec();
            let mut best = (s.start, f64::INFINITY);
            for (off, row) in rows.rows().into_iter().enumerate() {
                let d = distance.between(&row.to_vec(), &centroid);
                if d < best.1 {
                    best = (s.start + off, d);
                }
            }
            ks.push(best.0);
        }
        if rules.middle {
            ks.push(s.start + s.len / 2);
        }
        if rules.ends {
            ks.push(s.start);
            ks.push(s.end());
        }
        ks.sort_unstable();
        ks.dedup();
        per_partition.push(ks);
    }
    let mut all: Vec<usize> = per_partition.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    Ok(KeyframeSet { per_partition, all })
}

/// Each sample scores the length of its section.
pub fn flat_scores(partitions: &PartitionSet) -> Vec<f64> {
    partitions
        .sections()
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.len as f64, s.len))
        .collect()
}

/// High and low keypoints (sample indexes) of one partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keypoints {
    pub high: Vec<usize>,
    pub low: Vec<usize>,
}

pub fn keypoints(partitions: &PartitionSet, keyframes: &KeyframeSet) -> Result<Vec<Keypoints>> {
    if keyframes.per_partition.len() != partitions.len() {
        return Err(Error::LengthMismatch {
            expected: partitions.len(),
            got: keyframes.per_partition.len(),
            context: "keyframe groups vs partitions".into(),
        });
    }
    partitions
        .sections()
        .iter()
        .zip(&keyframes.per_partition)
        .enumerate()
        .map(|(i, (s, ks))| {
            if ks.is_empty() {
                return Err(Error::invalid(format!("partition {} has no keyframe", i + 1)));
            }
            if let Some(k) = ks.iter().find(|k| !s.contains(**k)) {
                return Err(Error::invalid(format!("keyframe {k} lies outside partition {}", i + 1)));
            }
            let gap = |j: usize| ks.iter().map(|&k| j.abs_diff(k)).min().expect("non-empty");
            let far = s.samples().map(gap).max().expect("non-empty section");
            let low = s.samples().filter(|&j| gap(j) == far).collect();
            Ok(Keypoints { high: ks.clone(), low })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasScheme {
    /// Keyframes scaled by `1 + B`; low keypoints keep the flat score.
    #[default]
    Increase,
    /// Keyframes keep the flat score; low keypoints scaled by `1 − B`.
    Decrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Cosine,
    Linear,
}

fn interpolate(kind: Interpolation, i: usize, j: usize, k: usize, vj: f64, vk: f64) -> f64 {
    let t = (i - j) as f64 / (k - j) as f64;
    match kind {
        Interpolation::Cosine => (vj - vk) / 2.0 * (std::f64::consts::PI * t).cos() + (vj + vk) / 2.0,
        Interpolation::Linear => vj + (vk - vj) * t,
    }
}

/// Pins keypoint scores per `scheme` and interpolates between consecutive keypoints
/// inside each partition. Where a sample is both a high and a low keypoint, the high
/// value applies.
pub fn bias_and_interpolate(
    flat: &[f64],
    partitions: &PartitionSet,
    keypoints: &[Keypoints],
    scheme: BiasScheme,
    bias: f64,
    interp: Interpolation,
) -> Result<Vec<f64>> {
    let ok = match scheme {
        BiasScheme::Increase => bias.is_finite() && bias >= 0.0,
        BiasScheme::Decrease => (0.0..=1.0).contains(&bias),
    };
    if !ok {
        return Err(Error::invalid(format!("bias {bias} out of range for {scheme:?}")));
    }
    if flat.len() != partitions.total() {
        return Err(Error::LengthMismatch {
            expected: partitions.total(),
            got: flat.len(),
            context: "flat scores vs partitions".into(),
        });
    }
    if keypoints.len() != partitions.len() {
        return Err(Error::LengthMismatch {
            expected: partitions.len(),
            got: keypoints.len(),
            context: "keypoints vs partitions".into(),
        });
    }
    let (high_scale, low_scale) = match scheme {
        BiasScheme::Increase => (1.0 + bias, 1.0),
        BiasScheme::Decrease => (1.0, 1.0 - bias),
    };

    let mut out = flat.to_vec();
    for (s, kp) in partitions.sections().iter().zip(keypoints) {
        let mut pins: Vec<(usize, f64)> = kp
            .high
            .iter()
            .map(|&j| (j, flat[j - 1] * high_scale))
            .chain(
                kp.low
                    .iter()
                    .filter(|j| !kp.high.contains(j))
                    .map(|&j| (j, flat[j - 1] * low_scale)),
            )
            .collect();
        pins.sort_by_key(|p| p.0);
        let (first, last) = (pins[0], pins[pins.len() - 1]);
        for i in s.samples() {
            out[i - 1] = if i <= first.0 {
                first.1
            } else if i >= last.0 {
                last.1
            } else {
                let w = pins.partition_point(|p| p.0 <= i);
                let (j, vj) = pins[w - 1];
                let (k, vk) = pins[w];
                if i == j {
                    vj
                } else {
                    interpolate(interp, i, j, k, vj, vk)
                }
            };
        }
    }
    Ok(out)
}
