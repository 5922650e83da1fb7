//! End-to-end summarization of one video and evaluation over a dataset.
//!
//! Every stage takes and returns a serializable document, so running the stages one by
//! one through files gives the same result as [`run_video`].

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    agglomerative_fine, birch_coarse, cluster_count, default_threshold, ClusterCountLaw, Distance, Linkage,
    LinkageRule, ThresholdRule,
};
use crate::error::{Error, Result};
use crate::keyframes::{
    bias_and_interpolate, flat_scores, keypoints, select_keyframes, BiasScheme, Interpolation, KeyframeRules, Keypoints,
};
use crate::manifest::{DatasetManifest, ManifestVideo};
use crate::metrics::{random_baseline, user_f_measures, MetricsReport, SplitSettings, VideoMetrics};
use crate::partitioning::{init_partitions, refine_partitions, smooth_labels};
use crate::reduction::{reduce_chain, ReducerChain, TsneConfig};
use crate::sampling::{apply_plan, plan_sampling, SamplingPlan};
use crate::summary::{
    budget_frames, extrapolate, knapsack_summary, target_length, usable_summary, Extrapolation, SummaryDocument,
};
use crate::types::{
    EmbeddingSet, ImportanceCurve, KeyframeSet, LabelSequence, PartitionSet, ReductionStep, SummarySelection,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub target_fps: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { target_fps: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionConfig {
    pub reducer: ReducerChain,
    /// t-SNE settings; the output dimension comes from `reducer`.
    pub tsne: TsneConfig,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            reducer: "pca:34+tsne:2".parse().expect("valid chain"),
            tsne: TsneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    pub max_clusters: usize,
    pub modulation: f64,
    pub threshold: ThresholdRule,
    pub branching: usize,
    pub linkage: Linkage,
    pub distance: Distance,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            max_clusters: 60,
            modulation: 1e-3,
            threshold: ThresholdRule::default(),
            branching: 50,
            linkage: Linkage::default(),
            distance: Distance::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitioningConfig {
    pub window: usize,
    pub min_length: usize,
}

impl Default for PartitioningConfig {
    fn default() -> Self {
        PartitioningConfig {
            window: 5,
            min_length: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImportanceConfig {
    pub keyframes: KeyframeRules,
    pub bias: BiasScheme,
    pub bias_strength: f64,
    pub interpolation: Interpolation,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig {
            keyframes: KeyframeRules::default(),
            bias: BiasScheme::Increase,
            bias_strength: 0.5,
            interpolation: Interpolation::Cosine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummaryConfig {
    pub rate: f64,
    pub max_seconds: f64,
    /// Output frame rate; the input rate when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_fps: Option<f64>,
    pub extrapolation: Extrapolation,
    /// Knapsack budget as a fraction of the video length.
    pub budget: f64,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig {
            rate: 0.2,
            max_seconds: 120.0,
            output_fps: None,
            extrapolation: Extrapolation::Linear,
            budget: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub baseline: bool,
    pub baseline_repeats: usize,
    pub baseline_seed: u64,
    pub splits: usize,
    pub test_fraction: f64,
    pub split_seed: u64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            baseline: true,
            baseline_repeats: 100,
            baseline_seed: 0,
            splits: 5,
            test_fraction: 0.2,
            split_seed: 0,
        }
    }
}

/// Every knob of the pipeline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub sampling: SamplingConfig,
    pub reduction: ReductionConfig,
    pub clustering: ClusteringConfig,
    pub partitioning: PartitioningConfig,
    pub importance: ImportanceConfig,
    pub summary: SummaryConfig,
    pub evaluation: EvaluationConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.sampling.target_fps, "sampling.target_fps")?;
        if self.clustering.max_clusters == 0 {
            return Err(Error::invalid("clustering.max_clusters must be at least 1"));
        }
        positive(self.clustering.modulation, "clustering.modulation")?;
        if self.clustering.branching < 2 {
            return Err(Error::invalid("clustering.branching must be at least 2"));
        }
        if self.partitioning.window.is_multiple_of(2) {
            return Err(Error::invalid("partitioning.window must be odd"));
        }
        if self.partitioning.min_length == 0 {
            return Err(Error::invalid("partitioning.min_length must be at least 1"));
        }
        if self.importance.keyframes.is_empty() {
            return Err(Error::invalid("importance.keyframes selects no rule"));
        }
        match self.importance.bias {
            BiasScheme::Increase if self.importance.bias_strength < 0.0 => {
                return Err(Error::invalid("importance.bias_strength must be non-negative"))
            }
            BiasScheme::Decrease if !(0.0..=1.0).contains(&self.importance.bias_strength) => {
                return Err(Error::invalid(
                    "importance.bias_strength must lie in [0, 1] for decrease",
                ))
            }
            _ => {}
        }
        if !(self.summary.rate > 0.0 && self.summary.rate <= 1.0) {
            return Err(Error::invalid("summary.rate must lie in (0, 1]"));
        }
        positive(self.summary.max_seconds, "summary.max_seconds")?;
        if let Some(fps) = self.summary.output_fps {
            positive(fps, "summary.output_fps")?;
        }
        if !(0.0..=1.0).contains(&self.summary.budget) {
            return Err(Error::invalid("summary.budget must lie in [0, 1]"));
        }
        if self.evaluation.baseline_repeats == 0 {
            return Err(Error::invalid("evaluation.baseline_repeats must be at least 1"));
        }
        if !(self.evaluation.test_fraction > 0.0 && self.evaluation.test_fraction < 1.0) {
            return Err(Error::invalid("evaluation.test_fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Report header such as `Euclidean PCA (34) + t-SNE (2)`.
    pub fn setting_name(&self) -> String {
        format!(
            "{} {}",
            self.clustering.distance.label(),
            self.reduction.reducer.label()
        )
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Per-video facts every stage document carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoContext {
    pub video_id: String,
    pub total_frames: usize,
    pub input_fps: f64,
    pub sample_fps: f64,
    pub sample_indexes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedDoc {
    pub context: VideoContext,
    /// Chain actually applied after clamping to the data.
    pub reducer: ReducerChain,
    pub input_dim: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl ReducedDoc {
    pub fn array(&self) -> Result<Array2<f64>> {
        let n = self.matrix.len();
        let d = self.matrix.first().map_or(0, Vec::len);
        if n != self.context.sample_indexes.len() {
            return Err(Error::LengthMismatch {
                expected: self.context.sample_indexes.len(),
                got: n,
                context: "reduced rows vs samples".into(),
            });
        }
        let flat: Vec<f64> = self.matrix.iter().flatten().copied().collect();
        Array2::from_shape_vec((n, d), flat).map_err(|_| Error::invalid("reduced matrix rows differ in length"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterDoc {
    pub context: VideoContext,
    pub target_length: usize,
    pub threshold: f64,
    pub coarse: LabelSequence,
    pub target_clusters: usize,
    pub fine: LabelSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionDoc {
    pub context: VideoContext,
    pub target_length: usize,
    pub smoothed: LabelSequence,
    pub initial: PartitionSet,
    pub partitions: PartitionSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreDoc {
    pub context: VideoContext,
    pub target_length: usize,
    pub partitions: PartitionSet,
    pub keyframes: KeyframeSet,
    pub keypoints: Vec<Keypoints>,
    pub importance: ImportanceCurve,
}

/// Both summaries of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryOutput {
    pub video_id: String,
    pub target_length: usize,
    pub usable: SummaryDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<SummaryDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_frames: Option<usize>,
}

/// Resamples `set` to the configured rate when it holds every frame of its video.
pub fn sample_stage(set: &EmbeddingSet, cfg: &PipelineConfig) -> Result<(SamplingPlan, EmbeddingSet)> {
    let meta = set.meta();
    let plan = plan_sampling(meta.total_frames, meta.input_fps, cfg.sampling.target_fps)?;
    let dense = set.len() == meta.total_frames;
    if !dense || plan.count == set.len() {
        return Ok((plan, set.clone()));
    }
    let rows: Vec<usize> = (0..set.len()).collect();
    let picked = apply_plan(&plan, &rows)?;
    let matrix = set.matrix().select(ndarray::Axis(0), &picked);
    let sampled = EmbeddingSet::new(meta.clone(), plan.indexes(), plan.achieved_fps(), matrix)?;
    Ok((plan, sampled))
}

/// Clamps PCA to the data dimension and drops t-SNE below four samples.
pub fn effective_chain(chain: &ReducerChain, samples: usize, dim: usize) -> ReducerChain {
    let steps = chain
        .steps()
        .iter()
        .filter_map(|s| match *s {
            ReductionStep::Pca(d) => Some(ReductionStep::Pca(d.min(dim))),
            ReductionStep::Tsne(_) if samples < 4 => None,
            other => Some(other),
        })
        .collect();
    ReducerChain::new(steps).expect("clamping keeps a chain valid")
}

pub fn reduce_stage(set: &EmbeddingSet, cfg: &PipelineConfig) -> Result<ReducedDoc> {
    let meta = set.meta();
    let context = VideoContext {
        video_id: meta.video_id.clone(),
        total_frames: meta.total_frames,
        input_fps: meta.input_fps,
        sample_fps: set.sample_fps(),
        sample_indexes: set.sample_indexes().to_vec(),
    };
    let mut chain = effective_chain(&cfg.reduction.reducer, set.len(), set.dim());
    let reduced = match reduce_chain(set, &chain, &cfg.reduction.tsne) {
        // Identical rows leave t-SNE nothing to separate; keep the rest of the chain.
        Err(Error::DegenerateInput(_)) => {
            let kept = chain
                .steps()
                .iter()
                .copied()
                .filter(|s| !matches!(s, ReductionStep::Tsne(_)))
                .collect();
            chain = ReducerChain::new(kept)?;
            reduce_chain(set, &chain, &cfg.reduction.tsne)?
        }
        other => other?,
    };
    let matrix = reduced
        .embeddings
        .matrix()
        .rows()
        .into_iter()
        .map(|r| r.to_vec())
        .collect();
    Ok(ReducedDoc {
        context,
        reducer: chain,
        input_dim: set.dim(),
        matrix,
    })
}

fn output_fps(ctx: &VideoContext, cfg: &PipelineConfig) -> f64 {
    cfg.summary.output_fps.unwrap_or(ctx.input_fps)
}

pub fn cluster_stage(reduced: &ReducedDoc, cfg: &PipelineConfig) -> Result<ClusterDoc> {
    let ctx = &reduced.context;
    let data = reduced.array()?;
    let l = target_length(
        ctx.total_frames,
        cfg.summary.rate,
        cfg.summary.max_seconds,
        output_fps(ctx, cfg),
    );
    let threshold = default_threshold(&data, cfg.clustering.threshold);
    let coarse = birch_coarse(&data, threshold, cfg.clustering.branching)?;
    let k = cluster_count(&ClusterCountLaw {
        max_clusters: cfg.clustering.max_clusters,
        modulation: cfg.clustering.modulation,
        target_frames: l,
    });
    let rule = LinkageRule {
        linkage: cfg.clustering.linkage,
        distance: cfg.clustering.distance,
    };
    let fine = agglomerative_fine(&data, &coarse, k, rule)?;
    Ok(ClusterDoc {
        context: ctx.clone(),
        target_length: l,
        threshold,
        coarse,
        target_clusters: k,
        fine,
    })
}

pub fn partition_stage(clusters: &ClusterDoc, cfg: &PipelineConfig) -> Result<PartitionDoc> {
    let smoothed = smooth_labels(&clusters.fine, cfg.partitioning.window)?;
    let initial = init_partitions(&smoothed)?;
    let partitions = refine_partitions(&initial, cfg.partitioning.min_length);
    Ok(PartitionDoc {
        context: clusters.context.clone(),
        target_length: clusters.target_length,
        smoothed,
        initial,
        partitions,
    })
}

/// Keyframes and importance. `reduced` is needed only by the `mean` keyframe rule.
pub fn score_stage(parts: &PartitionDoc, reduced: Option<&ReducedDoc>, cfg: &PipelineConfig) -> Result<ScoreDoc> {
    let rules = cfg.importance.keyframes;
    let embeddings = reduced.map(ReducedDoc::array).transpose()?;
    let keyframes = select_keyframes(&parts.partitions, embeddings.as_ref(), rules, cfg.clustering.distance)?;
    let kp = keypoints(&parts.partitions, &keyframes)?;
    let flat = flat_scores(&parts.partitions);
    let scores = if rules.supports_biasing() {
        bias_and_interpolate(
            &flat,
            &parts.partitions,
            &kp,
            cfg.importance.bias,
            cfg.importance.bias_strength,
            cfg.importance.interpolation,
        )?
    } else {
        flat.clone()
    };
    Ok(ScoreDoc {
        context: parts.context.clone(),
        target_length: parts.target_length,
        partitions: parts.partitions.clone(),
        keyframes,
        keypoints: kp,
        importance: ImportanceCurve {
            flat,
            scores,
            per_frame: None,
        },
    })
}

/// Usable summary, plus the knapsack summary when the video's segments are known.
pub fn summarize_stage(score: &ScoreDoc, video: Option<&ManifestVideo>, cfg: &PipelineConfig) -> Result<SummaryOutput> {
    let ctx = &score.context;
    let usable = usable_summary(
        &score.keyframes.all,
        &score.importance.scores,
        &ctx.sample_indexes,
        ctx.total_frames,
        score.target_length,
    )?;
    let (evaluation, budget) = match video {
        None => (None, None),
        Some(v) => {
            if v.total_frames != ctx.total_frames {
                return Err(Error::LengthMismatch {
                    expected: v.total_frames,
                    got: ctx.total_frames,
                    context: format!("manifest frames vs embeddings of {}", v.id),
                });
            }
            let per_frame = extrapolate(
                &score.importance.scores,
                &ctx.sample_indexes,
                ctx.total_frames,
                cfg.summary.extrapolation,
            )?;
            let budget = budget_frames(ctx.total_frames, cfg.summary.budget)?;
            let pick = knapsack_summary(&per_frame, &v.segments, budget)?;
            (
                Some(SummaryDocument::new(&ctx.video_id, &pick.selection, Some(per_frame))),
                Some(budget),
            )
        }
    };
    Ok(SummaryOutput {
        video_id: ctx.video_id.clone(),
        target_length: score.target_length,
        usable: SummaryDocument::new(&ctx.video_id, &usable, None),
        evaluation,
        budget_frames: budget,
    })
}

/// All stage documents of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRun {
    pub plan: SamplingPlan,
    pub reduced: ReducedDoc,
    pub clusters: ClusterDoc,
    pub partitions: PartitionDoc,
    pub scores: ScoreDoc,
    pub summary: SummaryOutput,
}

pub fn run_video(set: &EmbeddingSet, video: Option<&ManifestVideo>, cfg: &PipelineConfig) -> Result<VideoRun> {
    cfg.validate()?;
    let (plan, sampled) = sample_stage(set, cfg)?;
    let reduced = reduce_stage(&sampled, cfg)?;
    let clusters = cluster_stage(&reduced, cfg)?;
    let partitions = partition_stage(&clusters, cfg)?;
    let scores = score_stage(&partitions, Some(&reduced), cfg)?;
    let summary = summarize_stage(&scores, video, cfg)?;
    Ok(VideoRun {
        plan,
        reduced,
        clusters,
        partitions,
        scores,
        summary,
    })
}

/// Scores evaluation summaries against the manifest's user summaries.
///
/// Summaries are matched to videos by id and reported in manifest order; every manifest
/// video needs one.
pub fn evaluate(
    summaries: &[SummaryOutput],
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    setting: &str,
) -> Result<MetricsReport> {
    cfg.validate()?;
    if manifest.videos.is_empty() {
        return Err(Error::InvalidManifest("no videos to evaluate".into()));
    }
    let ev = &cfg.evaluation;
    let rows: Vec<VideoMetrics> = manifest
        .videos
        .par_iter()
        .map(|v| {
            let s = summaries
                .iter()
                .find(|s| s.video_id == v.id)
                .ok_or_else(|| Error::invalid(format!("no summary for video {}", v.id)))?;
            let doc = s
                .evaluation
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("summary of {} has no evaluation selection", v.id)))?;
            doc.bits()?;
            if doc.total_frames != v.total_frames {
                return Err(Error::LengthMismatch {
                    expected: v.total_frames,
                    got: doc.total_frames,
                    context: format!("summary frames of {}", v.id),
                });
            }
            let fs = user_f_measures(&doc.selected_frames, &v.user_summaries, v.total_frames)?;
            let baseline = if ev.baseline {
                Some(random_baseline(
                    v,
                    ev.baseline_repeats,
                    ev.baseline_seed,
                    cfg.summary.budget,
                )?)
            } else {
                None
            };
            Ok(VideoMetrics {
                video_id: v.id.clone(),
                avg_f: fs.iter().sum::<f64>() / fs.len() as f64,
                max_f: fs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                summary_frames: doc.selected_frames.len(),
                baseline,
            })
        })
        .collect::<Result<_>>()?;
    let n = manifest.videos.len();
    let split = ((n as f64 * ev.test_fraction).round() >= 1.0).then_some(SplitSettings {
        count: ev.splits,
        test_fraction: ev.test_fraction,
        seed: ev.split_seed,
    });
    MetricsReport::build(setting, rows, split.filter(|s| s.count > 0))
}

/// Resolved configuration and seeds of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub setting: String,
    pub config: PipelineConfig,
    pub seeds: RunSeeds,
    pub videos: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub tsne: u64,
    pub baseline: u64,
    pub splits: u64,
}

impl RunManifest {
    pub fn new(cfg: &PipelineConfig, videos: Vec<String>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            setting: cfg.setting_name(),
            config: cfg.clone(),
            seeds: RunSeeds {
                tsne: cfg.reduction.tsne.seed,
                baseline: cfg.evaluation.baseline_seed,
                splits: cfg.evaluation.split_seed,
            },
            videos,
        }
    }
}

/// Runs every video in parallel and evaluates when all of them have user summaries.
pub fn run_dataset(
    inputs: &[(EmbeddingSet, Option<ManifestVideo>)],
    manifest: Option<&DatasetManifest>,
    cfg: &PipelineConfig,
) -> Result<(Vec<VideoRun>, Option<MetricsReport>)> {
    cfg.validate()?;
    let runs: Vec<VideoRun> = inputs
        .par_iter()
        .map(|(set, video)| run_video(set, video.as_ref(), cfg))
        .collect::<Result<_>>()?;
    let report = match manifest {
        Some(m) if m.videos.iter().all(|v| !v.user_summaries.is_empty()) => {
            let summaries: Vec<SummaryOutput> = runs.iter().map(|r| r.summary.clone()).collect();
            Some(evaluate(&summaries, m, cfg, &cfg.setting_name())?)
        }
        _ => None,
    };
    Ok((runs, report))
}

impl SummaryOutput {
    pub fn evaluation_selection(&self) -> Result<Option<SummarySelection>> {
        self.evaluation
            .as_ref()
            .map(|d| Ok(SummarySelection::from_bits(d.bits()?, 0)))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PipelineConfig::from_toml("[partitioning]\nwindoww = 5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("windoww") && msg.contains("min_length"), "{msg}");
    }

    #[test]
    fn setting_name() {
        assert_eq!(
            PipelineConfig::default().setting_name(),
            "Euclidean PCA (34) + t-SNE (2)"
        );
    }

    #[test]
    fn chain_clamping() {
        let chain: ReducerChain = "pca:34+tsne:2".parse().unwrap();
        assert_eq!(effective_chain(&chain, 100, 16).to_string(), "pca:16+tsne:2");
        assert_eq!(effective_chain(&chain, 3, 16).to_string(), "pca:16");
    }
}
