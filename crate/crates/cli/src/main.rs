mod args;
mod io;
mod table;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;
use ctxsum_core::corpus::QuestionBank;
use ctxsum_core::human_eval::{parse_answer_log, score_corpus};
use ctxsum_core::manifest::MANIFEST_SCHEMA_VERSION;
use ctxsum_core::metrics::random_baseline;
use ctxsum_core::pipeline::{
    cluster_stage, evaluate, partition_stage, reduce_stage, run_dataset, sample_stage, score_stage, summarize_stage,
    ClusterDoc, PartitionDoc, ReducedDoc, RunManifest, ScoreDoc, SummaryOutput,
};
use ctxsum_core::sampling::plan_sampling;
use ctxsum_core::synthetic::{blocked_blobs, BlobSpec};
use ctxsum_core::vemb::write_embeddings;
use ctxsum_survey::{ServiceConfig, SurveyError};
use serde::Serialize;

use args::*;

/// Bad input that is not tied to a library error.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ctxsum_core::Error>() {
            return if e.is_io() { EXIT_IO } else { EXIT_VALIDATION };
        }
        if let Some(e) = cause.downcast_ref::<SurveyError>() {
            return match e {
                SurveyError::Log(_) => EXIT_IO,
                SurveyError::Core(c) if c.is_io() => EXIT_IO,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
        if cause.is::<Invalid>() || cause.is::<serde_json::Error>() {
            return EXIT_VALIDATION;
        }
    }
    EXIT_INTERNAL
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    io::write_json(value, out)
}

fn sample_plan(a: SamplePlanArgs) -> anyhow::Result<()> {
    let plan = plan_sampling(a.frames, a.fps, a.target_fps)?;
    if a.json {
        emit(&plan, None)
    } else {
        print!("{}", table::sample_plan(&plan));
        Ok(())
    }
}

fn reduce(a: StageArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve()?;
    let set = io::read_vemb(&a.input, a.video_id.as_deref())?;
    let (_, sampled) = sample_stage(&set, &cfg)?;
    emit(&reduce_stage(&sampled, &cfg)?, a.out.as_deref())
}

fn cluster(a: StageArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve()?;
    let doc: ReducedDoc = io::read_json(&a.input)?;
    emit(&cluster_stage(&doc, &cfg)?, a.out.as_deref())
}

fn partition(a: StageArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve()?;
    let doc: ClusterDoc = io::read_json(&a.input)?;
    emit(&partition_stage(&doc, &cfg)?, a.out.as_deref())
}

fn score(a: ScoreArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve()?;
    let doc: PartitionDoc = io::read_json(&a.input)?;
    let reduced: Option<ReducedDoc> = a.reduced.as_deref().map(io::read_json).transpose()?;
    if cfg.importance.keyframes.mean && reduced.is_none() {
        bail!(invalid("the mean keyframe rule needs --reduced"));
    }
    emit(&score_stage(&doc, reduced.as_ref(), &cfg)?, a.out.as_deref())
}

fn summarize(a: SummarizeArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve()?;
    let doc: ScoreDoc = io::read_json(&a.input)?;
    let manifest = a.manifest.as_deref().map(io::read_manifest).transpose()?;
    let video = match &manifest {
        None => None,
        Some(m) => Some(
            m.video(&doc.context.video_id)
                .ok_or_else(|| invalid(format!("video {:?} is not in the manifest", doc.context.video_id)))?,
        ),
    };
    emit(&summarize_stage(&doc, video, &cfg)?, a.out.as_deref())
}

fn evaluate_cmd(a: EvaluateArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve()?;
    let manifest = io::read_manifest(&a.manifest)?;
    let summaries: Vec<SummaryOutput> = a
        .summaries
        .iter()
        .map(|p| io::read_json(p))
        .collect::<anyhow::Result<_>>()?;
    let report = evaluate(&summaries, &manifest, &cfg, &cfg.setting_name())?;
    print!("{}", table::metrics(&report));
    if let Some(out) = &a.out {
        emit(&report, Some(out))?;
    }
    Ok(())
}

fn baseline(a: BaselineArgs) -> anyhow::Result<()> {
    use rayon::prelude::*;
    let manifest = io::read_manifest(&a.manifest)?;
    let rows: Vec<(String, _)> = manifest
        .videos
        .par_iter()
        .map(|v| Ok((v.id.clone(), random_baseline(v, a.repeats, a.seed, a.budget)?)))
        .collect::<ctxsum_core::Result<_>>()?;
    print!("{}", table::baseline(&rows));
    if let Some(out) = &a.out {
        let doc: Vec<_> = rows
            .iter()
            .map(|(id, b)| serde_json::json!({ "video_id": id, "baseline": b, "budget": a.budget }))
            .collect();
        emit(&doc, Some(out))?;
    }
    Ok(())
}

fn run(a: RunArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve()?;
    let mut files: Vec<_> = std::fs::read_dir(&a.embeddings)
        .with_context(|| format!("listing {}", a.embeddings.display()))?
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("listing {}", a.embeddings.display()))?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "vemb"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!(invalid(format!("no .vemb files in {}", a.embeddings.display())));
    }
    let manifest = a.manifest.as_deref().map(io::read_manifest).transpose()?;
    let inputs = files
        .iter()
        .map(|p| {
            let set = io::read_vemb(p, None)?;
            let video = manifest.as_ref().and_then(|m| m.video(&set.meta().video_id).cloned());
            Ok((set, video))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let (runs, report) = run_dataset(&inputs, manifest.as_ref(), &cfg)?;

    let ids: Vec<String> = runs.iter().map(|r| r.summary.video_id.clone()).collect();
    for r in &runs {
        let id = &r.summary.video_id;
        emit(&r.summary, Some(&a.out.join("summaries").join(format!("{id}.json"))))?;
        if a.keep_stages {
            let dir = a.out.join("stages").join(id);
            emit(&r.reduced, Some(&dir.join("reduced.json")))?;
            emit(&r.clusters, Some(&dir.join("clusters.json")))?;
            emit(&r.partitions, Some(&dir.join("partitions.json")))?;
            emit(&r.scores, Some(&dir.join("scores.json")))?;
        }
    }
    emit(&RunManifest::new(&cfg, ids), Some(&a.out.join("run_manifest.json")))?;
    match report {
        Some(report) => {
            let text = table::metrics(&report);
            io::write_text(&a.out.join("report.txt"), &text)?;
            emit(&report, Some(&a.out.join("report.json")))?;
            print!("{text}");
        }
        None => println!(
            "{} videos summarized into {}; no manifest with user summaries, so no evaluation",
            runs.len(),
            a.out.display()
        ),
    }
    Ok(())
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let mut videos = Vec::new();
    for i in 0..a.videos {
        let id = format!("synthetic-{i:02}");
        let v = blocked_blobs(&BlobSpec {
            video_id: id.clone(),
            blocks: a.blocks.clone(),
            dim: a.dim,
            input_fps: a.fps,
            seed: a.seed + i as u64,
            ..BlobSpec::default()
        })?;
        let path = a.out.join(format!("{id}.vemb"));
        std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
        let mut bytes = Vec::new();
        write_embeddings(&v.embeddings, &mut bytes)?;
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        videos.push(v.manifest);
    }
    let manifest = ctxsum_core::manifest::DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        videos,
    };
    io::write_text(&a.out.join("manifest.json"), &(manifest.to_json() + "\n"))?;
    println!("wrote {} videos and manifest.json to {}", a.videos, a.out.display());
    Ok(())
}

fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let mut cfg = ServiceConfig::load(a.config.as_deref())?;
    if let Some(v) = a.bind {
        cfg.bind = v;
    }
    if let Some(v) = a.corpus {
        cfg.corpus = v;
    }
    if let Some(v) = a.log {
        cfg.log = v;
    }
    if let Some(v) = a.media {
        cfg.media = v;
    }
    if let Some(v) = a.max_sets {
        cfg.max_sets = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = Some(v);
    }
    let runtime = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    runtime.block_on(ctxsum_survey::serve(cfg))?;
    Ok(())
}

fn survey_score(a: SurveyScoreArgs) -> anyhow::Result<()> {
    let bank_path = match a.bank {
        Some(p) => p,
        None => a.log.parent().unwrap_or(Path::new(".")).join("question_bank.json"),
    };
    let bank = QuestionBank::from_json(&io::read_text(&bank_path)?)
        .with_context(|| format!("loading {}", bank_path.display()))?;
    let records = parse_answer_log(&io::read_text(&a.log)?)?;
    let report = score_corpus(&bank, &records)?;
    print!("{}", table::survey(&report));
    if let Some(out) = &a.out {
        emit(&report, Some(out))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!(invalid("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::SamplePlan(a) => sample_plan(a),
        Command::Reduce(a) => reduce(a),
        Command::Cluster(a) => cluster(a),
        Command::Partition(a) => partition(a),
        Command::Score(a) => score(a),
        Command::Summarize(a) => summarize(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Baseline(a) => baseline(a),
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a),
        Command::SurveyScore(a) => survey_score(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
