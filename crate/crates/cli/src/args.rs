use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ctxsum_core::clustering::{Distance, Linkage};
use ctxsum_core::keyframes::{BiasScheme, Interpolation, KeyframeRules};
use ctxsum_core::pipeline::PipelineConfig;
use ctxsum_core::reduction::ReducerChain;
use ctxsum_core::summary::Extrapolation;
use serde::de::DeserializeOwned;

#[derive(Debug, Parser)]
#[command(
    name = "ctxsum",
    version,
    about = "Context-aware video summarization from frame embeddings"
)]
pub struct Cli {
    /// Worker threads for per-video work (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the frame sampling plan of a video.
    SamplePlan(SamplePlanArgs),
    /// Sample and reduce a VEMB file.
    Reduce(StageArgs),
    /// Coarse and fine clustering of a reduced document.
    Cluster(StageArgs),
    /// Smooth labels and cut semantic partitions.
    Partition(StageArgs),
    /// Keyframes and importance scores.
    Score(ScoreArgs),
    /// Usable summary, plus the evaluation summary when a manifest is given.
    Summarize(SummarizeArgs),
    /// Score summary documents against a manifest.
    Evaluate(EvaluateArgs),
    /// Random summarizer baseline.
    Baseline(BaselineArgs),
    /// Full pipeline and evaluation over a directory of VEMB files.
    Run(RunArgs),
    /// Write synthetic blob videos and their manifest.
    Synth(SynthArgs),
    /// Run the survey service.
    Serve(ServeArgs),
    /// Score a survey answer log offline.
    SurveyScore(SurveyScoreArgs),
}

#[derive(Debug, Args)]
pub struct SamplePlanArgs {
    #[arg(long)]
    pub frames: usize,
    /// Input frame rate.
    #[arg(long)]
    pub fps: f64,
    #[arg(long, default_value_t = 4.0)]
    pub target_fps: f64,
    #[arg(long)]
    pub json: bool,
}

fn serde_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase())).map_err(|e| e.to_string())
}

/// Pipeline settings: a TOML file, then individual overrides.
#[derive(Debug, Clone, Args, Default)]
pub struct ConfigArgs {
    /// TOML configuration; unknown keys are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reducer chain such as `pca:34+tsne:2`, `pca:10`, `tsne:2` or `none`.
    #[arg(long)]
    pub reducer: Option<ReducerChain>,
    /// Distance for clustering: euclidean or cosine.
    #[arg(long)]
    pub distance: Option<Distance>,
    /// Linkage for fine clustering: single, complete or average.
    #[arg(long)]
    pub linkage: Option<Linkage>,
    /// Target sampling rate in frames per second.
    #[arg(long)]
    pub target_fps: Option<f64>,
    /// Upper bound on the number of fine clusters.
    #[arg(long)]
    pub max_clusters: Option<usize>,
    /// Odd window of the label mode filter.
    #[arg(long)]
    pub window: Option<usize>,
    /// Shortest partition, in samples, kept by refinement.
    #[arg(long)]
    pub min_length: Option<usize>,
    /// Keyframe rules joined by `+`: mean, middle, ends.
    #[arg(long)]
    pub keyframes: Option<KeyframeRules>,
    /// Keyframe bias: increase or decrease.
    #[arg(long, value_parser = serde_value::<BiasScheme>)]
    pub bias: Option<BiasScheme>,
    /// Bias strength.
    #[arg(long)]
    pub bias_strength: Option<f64>,
    /// Importance between keypoints: cosine or linear.
    #[arg(long, value_parser = serde_value::<Interpolation>)]
    pub interpolation: Option<Interpolation>,
    /// Summary length as a fraction of the video.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Summary length cap in seconds.
    #[arg(long)]
    pub max_seconds: Option<f64>,
    /// Frame importance from sample scores: linear or nearest.
    #[arg(long, value_parser = serde_value::<Extrapolation>)]
    pub extrapolation: Option<Extrapolation>,
    /// Evaluation budget as a fraction of the video.
    #[arg(long)]
    pub budget: Option<f64>,
    /// t-SNE seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random summaries per video for the baseline.
    #[arg(long)]
    pub baseline_repeats: Option<usize>,
    /// Skip the random baseline.
    #[arg(long)]
    pub no_baseline: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| anyhow::Error::new(e).context(format!("reading {}", path.display())))?;
                PipelineConfig::from_toml(&text)?
            }
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.reduction.reducer, self.reducer);
        set!(cfg.clustering.distance, self.distance);
        set!(cfg.clustering.linkage, self.linkage);
        set!(cfg.sampling.target_fps, self.target_fps);
        set!(cfg.clustering.max_clusters, self.max_clusters);
        set!(cfg.partitioning.window, self.window);
        set!(cfg.partitioning.min_length, self.min_length);
        set!(cfg.importance.keyframes, self.keyframes);
        set!(cfg.importance.bias, self.bias);
        set!(cfg.importance.bias_strength, self.bias_strength);
        set!(cfg.importance.interpolation, self.interpolation);
        set!(cfg.summary.rate, self.rate);
        set!(cfg.summary.max_seconds, self.max_seconds);
        set!(cfg.summary.extrapolation, self.extrapolation);
        set!(cfg.summary.budget, self.budget);
        set!(cfg.reduction.tsne.seed, self.seed);
        set!(cfg.evaluation.baseline_repeats, self.baseline_repeats);
        if self.no_baseline {
            cfg.evaluation.baseline = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct StageArgs {
    /// Output of the previous stage (a VEMB file for `reduce`).
    pub input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Video id for VEMB input; the file stem when absent.
    #[arg(long)]
    pub video_id: Option<String>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Partition document.
    pub input: PathBuf,
    /// Reduced document, needed by the mean keyframe rule.
    #[arg(long)]
    pub reduced: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Score document.
    pub input: PathBuf,
    /// Dataset manifest with the video's shot segments.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Summary documents, one per manifest video.
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Structured report file.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.15)]
    pub budget: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Directory of `<video id>.vemb` files.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Dataset manifest; enables evaluation when it lists user summaries.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory for summaries, the report and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every intermediate stage document.
    #[arg(long)]
    pub keep_stages: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub videos: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Samples per block, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![80, 80, 80, 80, 80])]
    pub blocks: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service TOML; `CTXSUM_SURVEY_*` variables override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub bind: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub media: Option<PathBuf>,
    #[arg(long)]
    pub max_sets: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SurveyScoreArgs {
    /// Answer log, one JSON record per line.
    pub log: PathBuf,
    /// Question bank; `question_bank.json` next to the log when absent.
    #[arg(long)]
    pub bank: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}
