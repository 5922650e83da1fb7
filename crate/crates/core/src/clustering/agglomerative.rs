use ndarray::Array2;

use super::{Linkage, LinkageRule};
use crate::error::{Error, Result};
use crate::types::LabelSequence;

/// One merge step: cluster `absorbed` joins `kept` at linkage affinity `affinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub kept: usize,
    pub absorbed: usize,
    pub affinity: f64,
}

/// Pairwise statistics between atoms, accumulated over member points.
struct PairStats {
    k: usize,
    min: Vec<f64>,
    max: Vec<f64>,
    sum: Vec<f64>,
}

impl PairStats {
    fn idx(&self, a: usize, b: usize) -> usize {
        a * self.k + b
    }

    fn affinity(&self, linkage: Linkage, a: usize, b: usize, sizes: &[usize]) -> f64 {
        let i = self.idx(a, b);
        match linkage {
            Linkage::Single => self.min[i],
            Linkage::Complete => self.max[i],
            Linkage::Average => self.sum[i] / (sizes[a] * sizes[b]) as f64,
        }
    }

    /// Folds cluster `b` into cluster `a`.
    #[allow(clippy::needless_range_loop)]
    fn merge(&mut self, a: usize, b: usize, alive: &[bool]) {
        for c in 0..self.k {
            if !alive[c] || c == a || c == b {
                continue;
            }
            let (ac, bc) = (self.idx(a, c), self.idx(b, c));
            let min = self.min[ac].min(self.min[bc]);
            let max = self.max[ac].max(self.max[bc]);
            let sum = self.sum[ac] + self.sum[bc];
            for (x, y) in [(a, c), (c, a)] {
                let i = self.idx(x, y);
                self.min[i] = min;
                self.max[i] = max;
                self.sum[i] = sum;
            }
        }
    }
}

/// Merges coarse clusters (atoms) until `max(1, min(target, K′))` remain.
pub fn agglomerative_fine(
    data: &Array2<f64>,
    coarse: &LabelSequence,
    target: usize,
    rule: LinkageRule,
) -> Result<LabelSequence> {
    agglomerative_fine_traced(data, coarse, target, rule).map(|(l, _)| l)
}

/// As [`agglomerative_fine`], also returning the merge sequence.
#[allow(clippy::needless_range_loop)]
pub fn agglomerative_fine_traced(
    data: &Array2<f64>,
    coarse: &LabelSequence,
    target: usize,
    rule: LinkageRule,
) -> Result<(LabelSequence, Vec<Merge>)> {
    let n = data.nrows();
    if coarse.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: coarse.len(),
            context: "coarse labels vs embedding rows".into(),
        });
    }
    if target == 0 {
        return Err(Error::invalid("target cluster count must be at least 1"));
    }
    let atoms = coarse.canonicalize();
    let k = atoms.cluster_count();
    let mut sizes = vec![0usize; k];
    for &a in atoms.as_slice() {
        sizes[a] += 1;
    }

    let mut stats = PairStats {
        k,
        min: vec![f64::INFINITY; k * k],
        max: vec![f64::NEG_INFINITY; k * k],
        sum: vec![0.0; k * k],
    };
    let rows: Vec<Vec<f64>> = data.rows().into_iter().map(|r| r.to_vec()).collect();
    let labels = atoms.as_slice();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (labels[i], labels[j]);
            if a == b {
                continue;
            }
            let d = rule.distance.between(&rows[i], &rows[j]);
            for (x, y) in [(a, b), (b, a)] {
                let idx = stats.idx(x, y);
                stats.min[idx] = stats.min[idx].min(d);
                stats.max[idx] = stats.max[idx].max(d);
                stats.sum[idx] += d;
            }
        }
    }

    let goal = target.min(k).max(1);
    let mut alive = vec![true; k];
    let mut parent: Vec<usize> = (0..k).collect();
    let mut merges = Vec::new();
    let mut remaining = k;
    while remaining > goal {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..k {
            if !alive[a] {
                continue;
            }
            for b in (a + 1)..k {
                if !alive[b] {
                    continue;
                }
                let aff = stats.affinity(rule.linkage, a, b, &sizes);
                if best.is_none_or(|(_, _, v)| aff < v) {
                    best = Some((a, b, aff));
                }
            }
        }
        let (a, b, affinity) = best.expect("at least two live clusters");
        stats.merge(a, b, &alive);
        alive[b] = false;
        sizes[a] += sizes[b];
        for p in parent.iter_mut() {
            if *p == b {
                *p = a;
            }
        }
        merges.push(Merge {
            kept: a,
            absorbed: b,
            affinity,
        });
        remaining -= 1;
    }

    let fine = LabelSequence(labels.iter().map(|&a| parent[a]).collect()).canonicalize();
    Ok((fine, merges))
}
