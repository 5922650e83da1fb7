//! Independent reference implementations used by the oracle and acceptance tests.
#![allow(dead_code)]

use ndarray::Array2;

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix: (eigenvalues, eigenvectors as columns),
/// sorted by descending eigenvalue.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * m[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[[k, p]], m[[k, q]]);
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[[p, k]], m[[q, k]]);
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let values = order.iter().map(|&i| m[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    (values, vectors)
}

/// Sample covariance with `n − 1` normalization.
pub fn covariance(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
    let c = x - &mean;
    c.t().dot(&c) / (n - 1.0)
}

/// Exhaustive 0/1 knapsack. Among optimal subsets returns the one that prefers earlier
/// items (lexicographically greatest bit vector with item 0 as the most significant).
pub fn brute_knapsack(weights: &[usize], values: &[f64], capacity: usize) -> (Vec<bool>, f64) {
    let n = weights.len();
    let mut best: Option<(Vec<bool>, f64)> = None;
    for mask in 0u32..(1 << n) {
        let pick: Vec<bool> = (0..n).map(|i| mask & (1 << (n - 1 - i)) != 0).collect();
        let w: usize = (0..n).filter(|&i| pick[i]).map(|i| weights[i]).sum();
        if w > capacity {
            continue;
        }
        let v: f64 = (0..n).filter(|&i| pick[i]).map(|i| values[i]).sum();
        // Masks run from lexicographically smallest to greatest, so `>=` keeps the greatest.
        if best.as_ref().is_none_or(|(_, b)| v >= *b) {
            best = Some((pick, v));
        }
    }
    best.unwrap()
}

/// Step-by-step interpreter of the partition refinement pseudocode on explicit
/// `[start, end)` intervals, re-indexing after every merge.
pub fn refine_literal(lengths: &[usize], eps: usize) -> Vec<usize> {
    let total: usize = lengths.iter().sum();
    let mut parts: Vec<(usize, usize)> = Vec::new();
    let mut p = 1;
    for &n in lengths {
        parts.push((p, p + n));
        p += n;
    }
    let len = |x: &(usize, usize)| x.1 - x.0;
    loop {
        let count = parts.len();
        let min = parts.iter().map(len).min().unwrap();
        if !(eps > min) || count == 1 {
            break;
        }
        let mut hat = 0;
        for i in 0..count {
            if len(&parts[i]) < len(&parts[hat]) {
                hat = i;
            }
        }
        if hat == 0 {
            parts[1] = (1, parts[1].1);
        } else if hat == count - 1 {
            parts[count - 2] = (parts[count - 2].0, total + 1);
        } else {
            let n_hat = len(&parts[hat]);
            let cut = parts[hat].0 + n_hat.div_ceil(2);
            parts[hat - 1] = (parts[hat - 1].0, cut);
            parts[hat + 1] = (cut, parts[hat + 1].1);
        }
        parts.remove(hat);
    }
    parts.iter().map(len).collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Every way to split `0..n` into exactly `k` non-empty groups (restricted growth strings).
pub fn set_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, k: usize, cur: &mut Vec<usize>, used: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            if used == k {
                out.push(cur.clone());
            }
            return;
        }
        if k - used > n - i {
            return;
        }
        for g in 0..=used.min(k - 1) {
            cur.push(g);
            rec(i + 1, n, k, cur, used.max(g + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), 0, &mut out);
    out
}

/// Single-linkage clustering of atoms into `k` groups by exhaustive search: the split
/// maximizing the smallest distance between points of different groups.
/// `atoms[a]` lists the rows of atom `a`. Returns a group id per atom.
pub fn single_linkage_oracle(data: &Array2<f64>, atoms: &[Vec<usize>], k: usize) -> Vec<usize> {
    let rows: Vec<Vec<f64>> = data.rows().into_iter().map(|r| r.to_vec()).collect();
    let m = atoms.len();
    let mut d = vec![vec![f64::INFINITY; m]; m];
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            for &i in &atoms[a] {
                for &j in &atoms[b] {
                    d[a][b] = d[a][b].min(euclid(&rows[i], &rows[j]));
                }
            }
        }
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for part in set_partitions(m, k) {
        let mut sep = f64::INFINITY;
        for a in 0..m {
            for b in 0..m {
                if part[a] != part[b] {
                    sep = sep.min(d[a][b]);
                }
            }
        }
        if best.as_ref().is_none_or(|(_, s)| sep > *s) {
            best = Some((part, sep));
        }
    }
    best.unwrap().0
}

/// True when two labelings induce the same grouping.
pub fn same_grouping(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Lloyd's 2-means seeded with the farthest pair of points.
pub fn two_means(data: &Array2<f64>) -> Vec<usize> {
    let rows: Vec<Vec<f64>> = data.rows().into_iter().map(|r| r.to_vec()).collect();
    let n = rows.len();
    let (mut s0, mut s1, mut far) = (0, 1, -1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclid(&rows[i], &rows[j]);
            if d > far {
                (s0, s1, far) = (i, j, d);
            }
        }
    }
    let mut c = [rows[s0].clone(), rows[s1].clone()];
    let mut labels = vec![0; n];
    for _ in 0..100 {
        let next: Vec<usize> = rows
            .iter()
            .map(|r| usize::from(euclid(r, &c[1]) < euclid(r, &c[0])))
            .collect();
        for (g, centre) in c.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(&next)
                .filter(|(_, l)| **l == g)
                .map(|(r, _)| r)
                .collect();
            if members.is_empty() {
                continue;
            }
            for (k, x) in centre.iter_mut().enumerate() {
                *x = members.iter().map(|m| m[k]).sum::<f64>() / members.len() as f64;
            }
        }
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

/// Mislabels between a clustering and planted labels, minimized over the two label swaps.
pub fn mislabels_two(found: &[usize], truth: &[usize]) -> usize {
    let direct = found.iter().zip(truth).filter(|(a, b)| a != b).count();
    direct.min(found.len() - direct)
}
