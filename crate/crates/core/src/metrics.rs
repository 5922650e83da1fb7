//! Frame-level f-measure and its aggregation over users, videos and splits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::ManifestVideo;
use crate::summary::{budget_frames, knapsack_summary};

fn frame_mask(frames: &[usize], total: usize, what: &str) -> Result<Vec<bool>> {
    let mut mask = vec![false; total];
    for &f in frames {
        if f == 0 || f > total {
            return Err(Error::IndexOutOfRange {
                index: f as u64,
                max: total as u64,
                context: what.into(),
            });
        }
        mask[f - 1] = true;
    }
    Ok(mask)
}

/// Harmonic mean of precision and recall between frame sets; 0 when nothing overlaps.
pub fn f_measure(summary: &[usize], user: &[usize], total_frames: usize) -> Result<f64> {
    let s = frame_mask(summary, total_frames, "summary frame")?;
    let u = frame_mask(user, total_frames, "user summary frame")?;
    Ok(f_measure_masks(&s, &u))
}

pub(crate) fn f_measure_masks(s: &[bool], u: &[bool]) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&a, &b) in s.iter().zip(u) {
        match (a, b) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fneg) as f64;
    2.0 * p * r / (p + r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserAggregate {
    #[default]
    Avg,
    Max,
}

/// f-measure of one summary against every user summary, reduced by `mode`.
pub fn video_score(summary: &[usize], users: &[Vec<usize>], total_frames: usize, mode: UserAggregate) -> Result<f64> {
    let fs = user_f_measures(summary, users, total_frames)?;
    Ok(aggregate_users(&fs, mode))
}

pub fn user_f_measures(summary: &[usize], users: &[Vec<usize>], total_frames: usize) -> Result<Vec<f64>> {
    if users.is_empty() {
        return Err(Error::invalid("no user summaries to score against"));
    }
    let s = frame_mask(summary, total_frames, "summary frame")?;
    users
        .iter()
        .map(|u| Ok(f_measure_masks(&s, &frame_mask(u, total_frames, "user summary frame")?)))
        .collect()
}

fn aggregate_users(fs: &[f64], mode: UserAggregate) -> f64 {
    match mode {
        UserAggregate::Avg => fs.iter().sum::<f64>() / fs.len() as f64,
        UserAggregate::Max => fs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetAggregate {
    Avg,
    Max,
    Top5,
}

pub fn dataset_score(scores: &[f64], mode: DatasetAggregate) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("no video scores to aggregate"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(match mode {
        DatasetAggregate::Avg => mean(scores),
        DatasetAggregate::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        DatasetAggregate::Top5 => {
            let mut sorted = scores.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            mean(&sorted[..sorted.len().min(5)])
        }
    })
}

/// Train/test video indexes (0-based into the manifest order), each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `count` independent seeded shuffles, each holding out `round(n·fraction)` videos.
pub fn make_splits(videos: usize, count: usize, test_fraction: f64, seed: u64) -> Result<Vec<Split>> {
    if count == 0 {
        return Err(Error::invalid("split count must be at least 1"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let test_len = (videos as f64 * test_fraction).round() as usize;
    if test_len == 0 {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} of {videos} videos leaves an empty test set"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let mut order: Vec<usize> = (0..videos).collect();
            order.shuffle(&mut rng);
            let mut test = order[..test_len].to_vec();
            let mut train = order[test_len..].to_vec();
            test.sort_unstable();
            train.sort_unstable();
            Split { train, test }
        })
        .collect())
}

/// Mean test-set score of every split, and those means reduced by `across`.
pub fn split_scores(scores: &[f64], splits: &[Split], across: UserAggregate) -> Result<(Vec<f64>, f64)> {
    if splits.is_empty() {
        return Err(Error::invalid("no splits"));
    }
    let per: Vec<f64> = splits
        .iter()
        .map(|s| {
            if let Some(&bad) = s.test.iter().find(|&&i| i >= scores.len()) {
                return Err(Error::IndexOutOfRange {
                    index: bad as u64,
                    max: scores.len().saturating_sub(1) as u64,
                    context: "split test video".into(),
                });
            }
            let test: Vec<f64> = s.test.iter().map(|&i| scores[i]).collect();
            dataset_score(&test, DatasetAggregate::Avg)
        })
        .collect::<Result<_>>()?;
    let combined = aggregate_users(&per, across);
    Ok((per, combined))
}

/// Mean f-measures of the random summarizer on one video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineScore {
    pub avg_f: f64,
    pub max_f: f64,
    pub repeats: usize,
    pub seed: u64,
}

/// Uniform random frame scores, knapsack under `⌊budget·T⌋`, averaged over `repeats`.
///
/// Repeat `r` draws from stream `r` of a ChaCha8 generator seeded with `seed`, so the
/// result does not depend on the number of threads.
pub fn random_baseline(video: &ManifestVideo, repeats: usize, seed: u64, budget: f64) -> Result<BaselineScore> {
    if repeats == 0 {
        return Err(Error::invalid("baseline repeats must be at least 1"));
    }
    video.validate()?;
    if video.user_summaries.is_empty() {
        return Err(Error::invalid(format!("video {} has no user summaries", video.id)));
    }
    let t = video.total_frames;
    let cap = budget_frames(t, budget)?;
    let per_repeat: Vec<(f64, f64)> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let scores: Vec<f64> = (0..t).map(|_| rng.random::<f64>()).collect();
            let pick = knapsack_summary(&scores, &video.segments, cap)?;
            let fs = user_f_measures(&pick.selection.frames, &video.user_summaries, t)?;
            Ok((
                aggregate_users(&fs, UserAggregate::Avg),
                aggregate_users(&fs, UserAggregate::Max),
            ))
        })
        .collect::<Result<_>>()?;
    let n = repeats as f64;
    Ok(BaselineScore {
        avg_f: per_repeat.iter().map(|p| p.0).sum::<f64>() / n,
        max_f: per_repeat.iter().map(|p| p.1).sum::<f64>() / n,
        repeats,
        seed,
    })
}

/// Per-video row of the metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    pub video_id: String,
    pub avg_f: f64,
    pub max_f: f64,
    pub summary_frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineScore>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub avg: f64,
    pub max: f64,
    pub top5: f64,
}

impl AggregateRow {
    pub fn of(scores: &[f64]) -> Result<Self> {
        Ok(AggregateRow {
            avg: dataset_score(scores, DatasetAggregate::Avg)?,
            max: dataset_score(scores, DatasetAggregate::Max)?,
            top5: dataset_score(scores, DatasetAggregate::Top5)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub split: usize,
    pub test_videos: Vec<String>,
    pub avg_f: f64,
    pub max_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSettings {
    pub count: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

/// Evaluation report for one pipeline setting over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub setting: String,
    pub videos: Vec<VideoMetrics>,
    /// Dataset aggregates of the per-video avg-f.
    pub avg_f: AggregateRow,
    /// Dataset aggregates of the per-video max-f.
    pub max_f: AggregateRow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<SplitReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<AggregateBaseline>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub settings: SplitSettings,
    pub rows: Vec<SplitRow>,
    /// Mean over splits of the per-split avg-f.
    pub mean_avg_f: f64,
    /// Best split avg-f.
    pub best_avg_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateBaseline {
    pub avg_f: f64,
    pub max_f: f64,
    pub repeats: usize,
    pub seed: u64,
}

impl MetricsReport {
    /// Aggregates per-video rows. Splits are skipped when `split` is `None`.
    pub fn build(setting: impl Into<String>, videos: Vec<VideoMetrics>, split: Option<SplitSettings>) -> Result<Self> {
        let avg: Vec<f64> = videos.iter().map(|v| v.avg_f).collect();
        let max: Vec<f64> = videos.iter().map(|v| v.max_f).collect();
        let splits = match split {
            None => None,
            Some(settings) => {
                let parts = make_splits(videos.len(), settings.count, settings.test_fraction, settings.seed)?;
                let (per_avg, mean_avg_f) = split_scores(&avg, &parts, UserAggregate::Avg)?;
                let (_, best_avg_f) = split_scores(&avg, &parts, UserAggregate::Max)?;
                let (per_max, _) = split_scores(&max, &parts, UserAggregate::Avg)?;
                let rows = parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| SplitRow {
                        split: i + 1,
                        test_videos: p.test.iter().map(|&j| videos[j].video_id.clone()).collect(),
                        avg_f: per_avg[i],
                        max_f: per_max[i],
                    })
                    .collect();
                Some(SplitReport {
                    settings,
                    rows,
                    mean_avg_f,
                    best_avg_f,
                })
            }
        };
        let baselines: Vec<BaselineScore> = videos.iter().filter_map(|v| v.baseline).collect();
        let baseline = (!baselines.is_empty() && baselines.len() == videos.len()).then(|| {
            let n = baselines.len() as f64;
            AggregateBaseline {
                avg_f: baselines.iter().map(|b| b.avg_f).sum::<f64>() / n,
                max_f: baselines.iter().map(|b| b.max_f).sum::<f64>() / n,
                repeats: baselines[0].repeats,
                seed: baselines[0].seed,
            }
        });
        Ok(MetricsReport {
            setting: setting.into(),
            avg_f: AggregateRow::of(&avg)?,
            max_f: AggregateRow::of(&max)?,
            videos,
            splits,
            baseline,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_measure_examples() {
        assert_eq!(f_measure(&[1, 2], &[1, 2], 5).unwrap(), 1.0);
        assert_eq!(f_measure(&[1, 2], &[3, 4], 5).unwrap(), 0.0);
        assert_eq!(f_measure(&[1, 2, 3, 4], &[3, 4, 5, 6], 6).unwrap(), 0.5);
        assert_eq!(f_measure(&[], &[], 6).unwrap(), 0.0);
        assert!(f_measure(&[7], &[1], 6).is_err());
    }

    #[test]
    fn video_modes() {
        let users = vec![vec![1, 2, 3, 4, 5], vec![1, 2]];
        // f against the first user: P=1, R=0.4 -> 4/7; against the second: 1.
        let avg = video_score(&[1, 2], &users, 10, UserAggregate::Avg).unwrap();
        assert!((avg - (4.0 / 7.0 + 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(video_score(&[1, 2], &users, 10, UserAggregate::Max).unwrap(), 1.0);
        assert!(video_score(&[1], &[], 10, UserAggregate::Avg).is_err());
    }

    #[test]
    fn dataset_modes() {
        let s = [0.7, 0.6, 0.5, 0.4, 0.3, 0.2];
        assert!((dataset_score(&s, DatasetAggregate::Top5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(dataset_score(&s, DatasetAggregate::Max).unwrap(), 0.7);
        let three = [0.3, 0.6, 0.9];
        assert!((dataset_score(&three, DatasetAggregate::Top5).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn splits() {
        let s = make_splits(25, 5, 0.2, 7).unwrap();
        assert_eq!(s.len(), 5);
        for p in &s {
            assert_eq!(p.test.len(), 5);
            assert_eq!(p.train.len(), 20);
            assert!(p.test.iter().all(|t| !p.train.contains(t)));
        }
        assert_eq!(s, make_splits(25, 5, 0.2, 7).unwrap());
        assert!(make_splits(5, 1, 1.0, 0).is_err());
        assert!(make_splits(2, 1, 0.1, 0).is_err());
    }

    #[test]
    fn whole_dataset_split() {
        let scores = [0.2, 0.4, 0.9];
        let split = Split {
            train: vec![],
            test: vec![0, 1, 2],
        };
        let (per, _) = split_scores(&scores, &[split], UserAggregate::Avg).unwrap();
        assert!((per[0] - dataset_score(&scores, DatasetAggregate::Avg).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn baseline_is_deterministic_and_within_budget() {
        let video = ManifestVideo {
            id: "v".into(),
            total_frames: 300,
            fps: 30.0,
            segments: (0..30).map(|i| [i * 10 + 1, i * 10 + 10]).collect(),
            user_summaries: vec![(1..=45).collect()],
        };
        let a = random_baseline(&video, 10, 3, 0.15).unwrap();
        assert_eq!(a, random_baseline(&video, 10, 3, 0.15).unwrap());
        assert!((0.0..=1.0).contains(&a.avg_f));
    }
}
