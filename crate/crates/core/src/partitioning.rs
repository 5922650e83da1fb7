//! Semantic partitioning of the sample axis from cluster labels.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{LabelSequence, PartitionSet, Section};

/// Majority filter over a centred window of odd width `window`, shrunk at the edges.
///
/// Ties go to the sample's own label when it is among the modes, otherwise to the
/// smallest tied label.
pub fn smooth_labels(labels: &LabelSequence, window: usize) -> Result<LabelSequence> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::invalid(format!("smoothing window must be odd, got {window}")));
    }
    let c = labels.as_slice();
    let n = c.len();
    let half = (window - 1) / 2;
    let mut counts: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        counts.clear();
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        for &l in &c[lo..=hi] {
            *counts.entry(l).or_default() += 1;
        }
        let top = *counts.values().max().expect("window is non-empty");
        let own = c[i];
        let label = if counts[&own] == top {
            own
        } else {
            *counts
                .iter()
                .filter(|(_, &v)| v == top)
                .map(|(l, _)| l)
                .min()
                .expect("some label attains the max")
        };
        out.push(label);
    }
    Ok(LabelSequence(out))
}

/// Maximal runs of equal labels.
pub fn init_partitions(labels: &LabelSequence) -> Result<PartitionSet> {
    let c = labels.as_slice();
    if c.is_empty() {
        return Err(Error::invalid("cannot partition an empty label sequence"));
    }
    let mut sections = Vec::new();
    let mut start = 0;
    for i in 1..=c.len() {
        if i == c.len() || c[i] != c[start] {
            sections.push(Section {
                start: start + 1,
                len: i - start,
            });
            start = i;
        }
    }
    PartitionSet::new(sections)
}

/// Absorbs sections shorter than `min_len` into their neighbours.
///
/// The shortest section (leftmost on ties) goes first. A first section joins its
/// successor and a last section its predecessor; an interior section is split with the
/// left neighbour taking `⌈N/2⌉` samples and the right neighbour `⌊N/2⌋`. Stops once every
/// section reaches `min_len` or one section remains.
pub fn refine_partitions(partitions: &PartitionSet, min_len: usize) -> PartitionSet {
    let mut lens = partitions.lengths();
    while lens.len() > 1 {
        let (shortest, &len) = lens
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| a.cmp(b).then(i.cmp(j)))
            .expect("non-empty");
        if len >= min_len {
            break;
        }
        let last = lens.len() - 1;
        if shortest == 0 {
            lens[1] += len;
        } else if shortest == last {
            lens[last - 1] += len;
        } else {
            lens[shortest - 1] += len.div_ceil(2);
            lens[shortest + 1] += len / 2;
        }
        lens.remove(shortest);
    }
    PartitionSet::from_lengths(&lens).expect("refinement preserves the cover")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth(c: &[usize], w: usize) -> Vec<usize> {
        smooth_labels(&LabelSequence(c.to_vec()), w).unwrap().0
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth(&[1, 1, 2, 1, 1], 5), vec![1, 1, 1, 1, 1]);
        assert_eq!(smooth(&[3, 3, 3], 5), vec![3, 3, 3]);
        assert_eq!(smooth(&[1, 2, 1, 2, 1], 3), vec![1, 1, 2, 1, 1]);
        assert!(smooth_labels(&LabelSequence(vec![1]), 4).is_err());
    }

    #[test]
    fn smallest_label_wins_foreign_tie() {
        // Centre 9 appears once; 4 and 5 tie with two votes each.
        assert_eq!(smooth(&[5, 4, 9, 4, 5], 5)[2], 4);
    }

    #[test]
    fn init_examples() {
        let p = init_partitions(&LabelSequence(vec![1, 1, 2, 2, 2, 3])).unwrap();
        assert_eq!(Vec::<(usize, usize)>::from(p), vec![(1, 2), (3, 3), (6, 1)]);
        let p = init_partitions(&LabelSequence(vec![4; 7])).unwrap();
        assert_eq!(p.lengths(), vec![7]);
        let p = init_partitions(&LabelSequence(vec![0, 1, 0, 1, 0, 1])).unwrap();
        assert_eq!(p.lengths(), vec![1; 6]);
    }

    #[test]
    fn refine_examples() {
        let r = |l: &[usize], e| refine_partitions(&PartitionSet::from_lengths(l).unwrap(), e).lengths();
        assert_eq!(r(&[2, 3, 1], 2), vec![2, 4]);
        assert_eq!(r(&[3, 1, 3], 2), vec![4, 3]);
        assert_eq!(r(&[4, 5, 6], 4), vec![4, 5, 6]);
        assert_eq!(r(&[1, 1, 1], 8), vec![3]);
    }
}
