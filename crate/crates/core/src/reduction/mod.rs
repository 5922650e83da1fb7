//! Dimension reduction of contextual embeddings: PCA, t-SNE, or PCA followed by t-SNE.

mod pca;
mod tsne;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use pca::{pca_fit_transform, PcaModel};
pub use tsne::{affinities, kl_divergence, row_perplexity, tsne_transform, Affinities, TsneConfig, TsneOutput};

use crate::error::{Error, Result};
use crate::types::{EmbeddingSet, ReducedEmbeddingSet, ReductionStep};

/// A validated reducer chain, written `pca:34+tsne:2` on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ReducerChain(Vec<ReductionStep>);

impl ReducerChain {
    pub fn new(steps: Vec<ReductionStep>) -> Result<Self> {
        let tsne_dim_ok = |d: usize| d == 2 || d == 3;
        match steps.as_slice() {
            [] => {}
            [ReductionStep::Pca(d)] if *d >= 1 => {}
            [ReductionStep::Tsne(d)] if tsne_dim_ok(*d) => {}
            [ReductionStep::Pca(p), ReductionStep::Tsne(d)] if *p >= 1 && tsne_dim_ok(*d) => {}
            _ => {
                return Err(Error::InvalidChain(format!(
                    "{:?}: expected pca:D, tsne:2|3 or pca:D+tsne:2|3",
                    steps
                )))
            }
        }
        Ok(ReducerChain(steps))
    }

    pub fn steps(&self) -> &[ReductionStep] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Human-readable setting name such as `PCA (34) + t-SNE (2)`.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "Raw".into();
        }
        self.0
            .iter()
            .map(|s| match s {
                ReductionStep::Pca(d) => format!("PCA ({d})"),
                ReductionStep::Tsne(d) => format!("t-SNE ({d})"),
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl FromStr for ReducerChain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return ReducerChain::new(vec![]);
        }
        let steps = s
            .split('+')
            .map(|part| {
                let (name, dim) = part
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidChain(format!("{part:?} lacks a :dim suffix")))?;
                let dim: usize = dim
                    .parse()
                    .map_err(|_| Error::InvalidChain(format!("bad dimension in {part:?}")))?;
                match name.to_ascii_lowercase().as_str() {
                    "pca" => Ok(ReductionStep::Pca(dim)),
                    "tsne" | "t-sne" => Ok(ReductionStep::Tsne(dim)),
                    other => Err(Error::InvalidChain(format!("unknown reducer {other:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ReducerChain::new(steps)
    }
}

impl fmt::Display for ReducerChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("none");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|s| match s {
                ReductionStep::Pca(d) => format!("pca:{d}"),
                ReductionStep::Tsne(d) => format!("tsne:{d}"),
            })
            .collect();
        f.write_str(&parts.join("+"))
    }
}

impl TryFrom<String> for ReducerChain {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ReducerChain> for String {
    fn from(c: ReducerChain) -> String {
        c.to_string()
    }
}

/// Applies the chain left to right. `tsne` supplies every t-SNE knob except the output dimension.
pub fn reduce_chain(set: &EmbeddingSet, chain: &ReducerChain, tsne: &TsneConfig) -> Result<ReducedEmbeddingSet> {
    let mut matrix = set.matrix().clone();
    for step in chain.steps() {
        matrix = match *step {
            ReductionStep::Pca(d) => pca_fit_transform(&matrix, d)?.1,
            ReductionStep::Tsne(d) => {
                let cfg = TsneConfig { dim: d, ..tsne.clone() };
                tsne_transform(&matrix, &cfg)?.embedding
            }
        };
    }
    Ok(ReducedEmbeddingSet {
        embeddings: set.with_matrix(matrix)?,
        provenance: chain.steps().to_vec(),
        input_dim: set.dim(),
    })
}
