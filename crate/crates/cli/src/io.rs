use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use ctxsum_core::manifest::{load_manifest, DatasetManifest};
use ctxsum_core::vemb::read_embeddings;
use ctxsum_core::EmbeddingSet;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(ctxsum_core::Error::from)
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("documents serialize");
    match out {
        Some(p) => write_text(p, &(text + "\n")),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").context("writing standard output")
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))
}

/// Reads a VEMB file and names the video after `id` or the file stem.
pub fn read_vemb(path: &Path, id: Option<&str>) -> anyhow::Result<EmbeddingSet> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let set = read_embeddings(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(set.with_video_id(id.map(str::to_string).unwrap_or(stem)))
}

pub fn read_manifest(path: &Path) -> anyhow::Result<DatasetManifest> {
    let text = read_text(path)?;
    load_manifest(&text).with_context(|| format!("loading manifest {}", path.display()))
}
