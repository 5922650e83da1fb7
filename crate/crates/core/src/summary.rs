//! Final summaries: keyframe windows for viewing, knapsack selections for evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::SummarySelection;

/// `max(1, ⌊min(T·rate, max_seconds·out_fps)⌋)` frames.
pub fn target_length(total_frames: usize, rate: f64, max_seconds: f64, out_fps: f64) -> usize {
    let l = (total_frames as f64 * rate).min(max_seconds * out_fps).floor();
    if l >= 1.0 {
        l as usize
    } else {
        1
    }
}

/// Viewing summary around keyframes.
///
/// `keyframes` are sample indexes (1-based), `importance` is indexed by sample and
/// `sample_indexes` maps samples to original frames.
pub fn usable_summary(
    keyframes: &[usize],
    importance: &[f64],
    sample_indexes: &[usize],
    total_frames: usize,
    target: usize,
) -> Result<SummarySelection> {
    if keyframes.is_empty() {
        return Err(Error::invalid("usable summary needs at least one keyframe"));
    }
    if importance.len() != sample_indexes.len() {
        return Err(Error::LengthMismatch {
            expected: sample_indexes.len(),
            got: importance.len(),
            context: "importance scores vs sample indexes".into(),
        });
    }
    if let Some(&k) = keyframes.iter().find(|&&k| k == 0 || k > sample_indexes.len()) {
        return Err(Error::IndexOutOfRange {
            index: k as u64,
            max: sample_indexes.len() as u64,
            context: "keyframe sample".into(),
        });
    }
    if let Some(&f) = sample_indexes.iter().find(|&&f| f == 0 || f > total_frames) {
        return Err(Error::IndexOutOfRange {
            index: f as u64,
            max: total_frames as u64,
            context: "sample frame".into(),
        });
    }

    let mut bits = vec![false; total_frames];
    if target <= keyframes.len() {
        let mut ranked = keyframes.to_vec();
        ranked.sort_by(|&a, &b| importance[b - 1].total_cmp(&importance[a - 1]).then(a.cmp(&b)));
        for &k in &ranked[..target] {
            bits[sample_indexes[k - 1] - 1] = true;
        }
    } else {
        let per = target / keyframes.len();
        let half = (per - 1) / 2;
        for &k in keyframes {
            let centre = sample_indexes[k - 1];
            let lo = centre.saturating_sub(half).max(1);
            let hi = (centre + half).min(total_frames);
            for b in &mut bits[lo - 1..hi] {
                *b = true;
            }
        }
    }
    Ok(SummarySelection::from_bits(bits, target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extrapolation {
    #[default]
    Linear,
    Nearest,
}

/// Per-frame importance for frames `1..=total_frames` from per-sample scores.
pub fn extrapolate(
    scores: &[f64],
    sample_indexes: &[usize],
    total_frames: usize,
    mode: Extrapolation,
) -> Result<Vec<f64>> {
    if scores.is_empty() || scores.len() != sample_indexes.len() {
        return Err(Error::LengthMismatch {
            expected: sample_indexes.len(),
            got: scores.len(),
            context: "scores vs sample indexes".into(),
        });
    }
    crate::types::check_indexes(sample_indexes, total_frames)?;
    let t = sample_indexes;
    let (first, last) = (t[0], t[t.len() - 1]);
    let mut out = Vec::with_capacity(total_frames);
    let mut j = 0;
    for i in 1..=total_frames {
        let v = if i <= first {
            scores[0]
        } else if i >= last {
            scores[scores.len() - 1]
        } else {
            while t[j + 1] <= i {
                j += 1;
            }
            let (a, b) = (t[j], t[j + 1]);
            let (va, vb) = (scores[j], scores[j + 1]);
            if i == a {
                va
            } else {
                match mode {
                    Extrapolation::Linear => ((b - i) as f64 * va + (i - a) as f64 * vb) / (b - a) as f64,
                    Extrapolation::Nearest => {
                        if i - a <= b - i {
                            va
                        } else {
                            vb
                        }
                    }
                }
            }
        };
        out.push(v);
    }
    Ok(out)
}

/// Exact 0/1 knapsack over integer weights.
///
/// Returns the chosen items and the optimal value. Among optimal subsets the one that
/// takes earlier items is preferred: the DP runs from the last item backwards and the
/// reconstruction takes an item whenever taking it is still optimal.
pub fn knapsack(weights: &[usize], values: &[f64], capacity: usize) -> Result<(Vec<bool>, f64)> {
    if weights.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            got: values.len(),
            context: "knapsack weights vs values".into(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let n = weights.len();
    let width = capacity + 1;
    // best[c]: optimum over items i.. with capacity c, for the current i.
    let mut best = vec![0.0f64; width];
    let mut take = vec![false; n * width];
    for i in (0..n).rev() {
        let (w, v) = (weights[i], values[i]);
        for c in (0..width).rev() {
            if w <= c {
                let with = v + best[c - w];
                if with >= best[c] {
                    take[i * width + c] = true;
                    best[c] = with;
                }
            }
        }
    }
    let mut chosen = vec![false; n];
    let mut c = capacity;
    for i in 0..n {
        if take[i * width + c] {
            chosen[i] = true;
            c -= weights[i];
        }
    }
    Ok((chosen, best[capacity]))
}

/// Evaluation summary chosen by knapsack over segment importance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSummary {
    pub selection: SummarySelection,
    pub segments: Vec<bool>,
    pub segment_values: Vec<f64>,
    pub value: f64,
}

/// Selects whole segments (1-based inclusive `[start, end]`) under a frame budget.
pub fn knapsack_summary(per_frame: &[f64], segments: &[[usize; 2]], budget: usize) -> Result<KnapsackSummary> {
    crate::manifest::validate_segments(segments, per_frame.len()).map_err(Error::InvalidArgument)?;
    let weights: Vec<usize> = segments.iter().map(|s| s[1] - s[0] + 1).collect();
    let values: Vec<f64> = segments
        .iter()
        .map(|s| per_frame[s[0] - 1..s[1]].iter().sum())
        .collect();
    let (chosen, value) = knapsack(&weights, &values, budget)?;
    let mut bits = vec![false; per_frame.len()];
    for (s, _) in segments.iter().zip(&chosen).filter(|(_, c)| **c) {
        for b in &mut bits[s[0] - 1..s[1]] {
            *b = true;
        }
    }
    Ok(KnapsackSummary {
        selection: SummarySelection::from_bits(bits, budget),
        segments: chosen,
        segment_values: values,
        value,
    })
}

/// `⌊fraction · T⌋`.
pub fn budget_frames(total_frames: usize, fraction: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!(
            "budget fraction must lie in [0, 1], got {fraction}"
        )));
    }
    Ok((total_frames as f64 * fraction).floor() as usize)
}

/// Summary output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryDocument {
    pub video_id: String,
    pub total_frames: usize,
    pub selected_frames: Vec<usize>,
    /// `(bit, run)` pairs covering all frames.
    pub selection_bits: Vec<(u8, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importances: Option<Vec<f64>>,
}

impl SummaryDocument {
    pub fn new(video_id: impl Into<String>, selection: &SummarySelection, importances: Option<Vec<f64>>) -> Self {
        SummaryDocument {
            video_id: video_id.into(),
            total_frames: selection.bits.len(),
            selected_frames: selection.frames.clone(),
            selection_bits: selection.run_lengths(),
            importances,
        }
    }

    /// Expands the run-length bits, checking them against `selected_frames`.
    pub fn bits(&self) -> Result<Vec<bool>> {
        let mut bits = Vec::with_capacity(self.total_frames);
        for &(b, n) in &self.selection_bits {
            if b > 1 {
                return Err(Error::invalid(format!("selection bit must be 0 or 1, got {b}")));
            }
            bits.extend(std::iter::repeat_n(b == 1, n));
        }
        if bits.len() != self.total_frames {
            return Err(Error::LengthMismatch {
                expected: self.total_frames,
                got: bits.len(),
                context: "selection bits vs total frames".into(),
            });
        }
        let frames: Vec<usize> = (1..=bits.len()).filter(|i| bits[i - 1]).collect();
        if frames != self.selected_frames {
            return Err(Error::invalid("selected_frames disagrees with selection_bits"));
        }
        Ok(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_length_examples() {
        assert_eq!(target_length(100, 0.2, 120.0, 24.0), 20);
        assert_eq!(target_length(100_000, 0.2, 120.0, 24.0), 2880);
        assert_eq!(target_length(1, 0.2, 120.0, 24.0), 1);
    }

    #[test]
    fn usable_top_keyframes() {
        let s = usable_summary(&[1, 2, 3], &[5.0, 9.0, 7.0], &[10, 20, 30], 40, 2).unwrap();
        assert_eq!(s.frames, vec![20, 30]);
    }

    #[test]
    fn usable_windows_merge() {
        // Two keyframes, L′=10 gives ℓ=5 and ℓ_H=2.
        let s = usable_summary(&[1, 2], &[1.0, 1.0], &[10, 12], 40, 10).unwrap();
        assert_eq!(s.frames, (8..=14).collect::<Vec<_>>());
    }

    #[test]
    fn usable_window_count() {
        let t = [10, 30, 50, 70];
        let s = usable_summary(&[1, 2, 3, 4], &[1.0; 4], &t, 80, 20).unwrap();
        assert_eq!(s.len(), 20);
        assert!(usable_summary(&[], &[1.0; 4], &t, 80, 20).is_err());
    }

    #[test]
    fn extrapolation_examples() {
        let lin = extrapolate(&[4.0, 10.0], &[2, 5], 6, Extrapolation::Linear).unwrap();
        assert_eq!(lin, vec![4.0, 4.0, 6.0, 8.0, 10.0, 10.0]);
        let near = extrapolate(&[4.0, 10.0], &[2, 5], 6, Extrapolation::Nearest).unwrap();
        assert_eq!(near[3], 10.0);
        assert_eq!(near[2], 4.0);
    }

    #[test]
    fn knapsack_example() {
        let (y, v) = knapsack(&[3, 4, 2], &[6.0, 9.0, 5.0], 5).unwrap();
        assert_eq!(y, vec![true, false, true]);
        assert_eq!(v, 11.0);
        let (y, _) = knapsack(&[3, 4, 2], &[6.0, 9.0, 5.0], 100).unwrap();
        assert_eq!(y, vec![true; 3]);
        let (y, v) = knapsack(&[3, 4, 2], &[6.0, 9.0, 5.0], 0).unwrap();
        assert_eq!((y, v), (vec![false; 3], 0.0));
    }

    #[test]
    fn knapsack_prefers_earlier_on_ties() {
        let (y, _) = knapsack(&[2, 2], &[1.0, 1.0], 2).unwrap();
        assert_eq!(y, vec![true, false]);
    }

    #[test]
    fn knapsack_summary_frames() {
        let f = [1.0, 1.0, 1.0, 3.0, 3.0, 0.0];
        let k = knapsack_summary(&f, &[[1, 3], [4, 5], [6, 6]], 3).unwrap();
        assert_eq!(k.selection.frames, vec![4, 5, 6]);
        assert_eq!(k.value, 6.0);
        assert!(knapsack_summary(&f, &[[1, 3], [5, 6]], 3).is_err());
    }

    #[test]
    fn document_round_trip() {
        let sel = SummarySelection::from_bits(vec![false, true, true, false], 2);
        let doc = SummaryDocument::new("v", &sel, None);
        let back: SummaryDocument = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(back.bits().unwrap(), sel.bits);
    }
}
