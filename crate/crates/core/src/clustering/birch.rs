//! BIRCH clustering-feature tree. Leaf subclusters are returned as coarse clusters,
//! without a global clustering pass.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::LabelSequence;

/// How the subcluster radius threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum ThresholdRule {
    /// Fixed radius.
    Absolute(f64),
    /// Factor times the median pairwise distance of up to 256 evenly spaced points.
    MedianPairwise(f64),
    /// Factor times the median nearest-neighbour distance of up to 256 evenly spaced points.
    MedianNeighbor(f64),
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::MedianNeighbor(1.0)
    }
}

const SUBSAMPLE: usize = 256;

fn euclid(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn default_threshold(data: &Array2<f64>, rule: ThresholdRule) -> f64 {
    let n = data.nrows();
    let picks: Vec<usize> = if n <= SUBSAMPLE {
        (0..n).collect()
    } else {
        (0..SUBSAMPLE).map(|i| i * n / SUBSAMPLE).collect()
    };
    match rule {
        ThresholdRule::Absolute(t) => t,
        ThresholdRule::MedianPairwise(f) => {
            let mut d = Vec::new();
            for (a, &i) in picks.iter().enumerate() {
                for &j in &picks[a + 1..] {
                    d.push(euclid(data.row(i), data.row(j)));
                }
            }
            f * median(d)
        }
        ThresholdRule::MedianNeighbor(f) => {
            let d = picks
                .iter()
                .filter_map(|&i| {
                    (0..n)
                        .filter(|&j| j != i)
                        .map(|j| euclid(data.row(i), data.row(j)))
                        .min_by(|a, b| a.partial_cmp(b).expect("finite distances"))
                })
                .collect();
            f * median(d)
        }
    }
}

#[derive(Debug, Clone)]
struct Cf {
    n: usize,
    linear: Vec<f64>,
    squared: f64,
}

impl Cf {
    fn point(x: &[f64]) -> Cf {
        Cf {
            n: 1,
            linear: x.to_vec(),
            squared: x.iter().map(|v| v * v).sum(),
        }
    }

    fn absorb(&mut self, other: &Cf) {
        self.n += other.n;
        for (a, b) in self.linear.iter_mut().zip(&other.linear) {
            *a += b;
        }
        self.squared += other.squared;
    }

    fn centroid_dist2(&self, x: &[f64]) -> f64 {
        let n = self.n as f64;
        self.linear
            .iter()
            .zip(x)
            .map(|(s, v)| {
                let d = s / n - v;
                d * d
            })
            .sum()
    }

    fn centroid_dist2_cf(&self, other: &Cf) -> f64 {
        let (n, m) = (self.n as f64, other.n as f64);
        self.linear
            .iter()
            .zip(&other.linear)
            .map(|(a, b)| {
                let d = a / n - b / m;
                d * d
            })
            .sum()
    }

    /// Radius of this feature after absorbing `x`.
    fn radius_with(&self, x: &[f64]) -> f64 {
        let n = (self.n + 1) as f64;
        let sq = self.squared + x.iter().map(|v| v * v).sum::<f64>();
        let c2: f64 = self
            .linear
            .iter()
            .zip(x)
            .map(|(s, v)| {
                let c = (s + v) / n;
                c * c
            })
            .sum();
        (sq / n - c2).max(0.0).sqrt()
    }
}

#[derive(Debug)]
struct Entry {
    cf: Cf,
    child: Option<usize>,
    members: Vec<usize>,
}

#[derive(Debug)]
struct Node {
    leaf: bool,
    entries: Vec<Entry>,
}

struct Tree {
    nodes: Vec<Node>,
    root: usize,
    threshold: f64,
    branching: usize,
}

fn closest(entries: &[Entry], x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        let d = e.cf.centroid_dist2(x);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

impl Tree {
    fn insert(&mut self, x: &[f64], idx: usize) {
        if let Some((a, b)) = self.insert_at(self.root, x, idx) {
            let root = self.nodes.len();
            self.nodes.push(Node {
                leaf: false,
                entries: vec![a, b],
            });
            self.root = root;
        }
    }

    /// Inserts into the subtree at `node`; returns two replacement entries if it split.
    fn insert_at(&mut self, node: usize, x: &[f64], idx: usize) -> Option<(Entry, Entry)> {
        if self.nodes[node].leaf {
            let entries = &mut self.nodes[node].entries;
            if let Some(i) = closest(entries, x) {
                if entries[i].cf.radius_with(x) <= self.threshold {
                    entries[i].cf.absorb(&Cf::point(x));
                    entries[i].members.push(idx);
                    return None;
                }
            }
            entries.push(Entry {
                cf: Cf::point(x),
                child: None,
                members: vec![idx],
            });
        } else {
            let i = closest(&self.nodes[node].entries, x).expect("inner nodes are never empty");
            let child = self.nodes[node].entries[i].child.expect("inner entry has a child");
            match self.insert_at(child, x, idx) {
                None => self.nodes[node].entries[i].cf.absorb(&Cf::point(x)),
                Some((a, b)) => {
                    let entries = &mut self.nodes[node].entries;
                    entries[i] = a;
                    entries.insert(i + 1, b);
                }
            }
        }
        if self.nodes[node].entries.len() > self.branching {
            Some(self.split(node))
        } else {
            None
        }
    }

    fn split(&mut self, node: usize) -> (Entry, Entry) {
        let leaf = self.nodes[node].leaf;
        let entries = std::mem::take(&mut self.nodes[node].entries);
        // Seeds: the farthest pair of entry centroids (first such pair on ties).
        let (mut s1, mut s2, mut far) = (0, 1, -1.0);
        for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                let d = entries[i].cf.centroid_dist2_cf(&entries[j].cf);
                if d > far {
                    (s1, s2, far) = (i, j, d);
                }
            }
        }
        let (c1, c2) = (entries[s1].cf.clone(), entries[s2].cf.clone());
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, e) in entries.into_iter().enumerate() {
            let to_left = if i == s1 {
                true
            } else if i == s2 {
                false
            } else {
                e.cf.centroid_dist2_cf(&c1) <= e.cf.centroid_dist2_cf(&c2)
            };
            if to_left {
                left.push(e);
            } else {
                right.push(e);
            }
        }
        let summary = |es: &[Entry]| {
            let mut cf = es[0].cf.clone();
            for e in &es[1..] {
                cf.absorb(&e.cf);
            }
            cf
        };
        let (cf_l, cf_r) = (summary(&left), summary(&right));
        self.nodes[node].entries = left;
        let sibling = self.nodes.len();
        self.nodes.push(Node { leaf, entries: right });
        (
            Entry {
                cf: cf_l,
                child: Some(node),
                members: vec![],
            },
            Entry {
                cf: cf_r,
                child: Some(sibling),
                members: vec![],
            },
        )
    }

    fn leaf_members(&self, node: usize, out: &mut Vec<Vec<usize>>) {
        let n = &self.nodes[node];
        for e in &n.entries {
            match e.child {
                Some(c) => self.leaf_members(c, out),
                None => out.push(e.members.clone()),
            }
        }
    }
}

/// Coarse clusters from a CF tree with the given radius threshold and branching factor.
/// Labels are canonical (`0..K′` by first appearance).
pub fn birch_coarse(data: &Array2<f64>, threshold: f64, branching: usize) -> Result<LabelSequence> {
    let n = data.nrows();
    if n == 0 {
        return Err(Error::invalid("BIRCH needs at least one point"));
    }
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::invalid(format!(
            "BIRCH threshold must be non-negative, got {threshold}"
        )));
    }
    if branching < 2 {
        return Err(Error::invalid("BIRCH branching factor must be at least 2"));
    }
    crate::types::check_finite(data)?;

    let mut tree = Tree {
        nodes: vec![Node {
            leaf: true,
            entries: vec![],
        }],
        root: 0,
        threshold,
        branching,
    };
    for (i, row) in data.rows().into_iter().enumerate() {
        let x = row.to_vec();
        tree.insert(&x, i);
    }
    let mut groups = Vec::new();
    tree.leaf_members(tree.root, &mut groups);
    let mut labels = vec![0; n];
    for (g, members) in groups.iter().enumerate() {
        for &m in members {
            labels[m] = g;
        }
    }
    Ok(LabelSequence(labels).canonicalize())
}
