use nalgebra::DMatrix;
use rand::Rng;

use crate::{streams, FitError};

const MAX_LLOYD: usize = 500;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Lloyd's algorithm from k-means++ seeds.
///
/// Rows are processed in lexicographic order, so the partition does not
/// depend on the order of the input rows, and clusters are numbered by
/// their first member in that order.
pub fn kmeans_partition(data: &DMatrix<f64>, g: usize, seed: u64) -> Result<Vec<usize>, FitError> {
    let n = data.nrows();
    if g == 0 || g > n {
        return Err(FitError::InvalidConfig(format!("cannot form {g} clusters from {n} rows")));
    }
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| data.row(i).iter().copied().collect()).collect();
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(FitError::InvalidData("non-finite value in clustering data".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        rows[a]
            .iter()
            .zip(&rows[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows = order.iter().map(|&i| rows[i].clone()).collect();
    let distinct = 1 + rows.windows(2).filter(|w| w[0] != w[1]).count();
    if distinct < g {
        return Err(FitError::TooFewDistinctPoints { g, distinct });
    }

    let mut rng = streams::stream(seed, &[0x6b6d]);
    let mut centers: Vec<Vec<f64>> = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < g {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        if d2[pick] == 0.0 {
            pick = d2.iter().rposition(|&d| d > 0.0).expect("enough distinct points");
        }
        centers.push(rows[pick].clone());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &centers[centers.len() - 1]));
        }
    }

    let dim = data.ncols();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD {
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for (i, r) in rows.iter().enumerate() {
            let (k, d) = nearest(r, &centers);
            dist[i] = d;
            if labels[i] != k {
                labels[i] = k;
                changed = true;
            }
        }
        let mut counts = vec![0usize; g];
        for &l in &labels {
            counts[l] += 1;
        }
        // refill empty clusters from the point farthest from its center
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("a cluster with two members exists");
            counts[labels[far]] -= 1;
            labels[far] = empty;
            counts[empty] = 1;
            dist[far] = 0.0;
            changed = true;
        }
        for (k, c) in centers.iter_mut().enumerate() {
            c.iter_mut().for_each(|v| *v = 0.0);
            for (i, r) in rows.iter().enumerate() {
                if labels[i] == k {
                    for j in 0..dim {
                        c[j] += r[j];
                    }
                }
            }
            c.iter_mut().for_each(|v| *v /= counts[k] as f64);
        }
        if !changed {
            break;
        }
    }

    let mut rename = vec![usize::MAX; g];
    let mut next = 0;
    for l in labels.iter_mut() {
        if rename[*l] == usize::MAX {
            rename[*l] = next;
            next += 1;
        }
        *l = rename[*l];
    }
    let mut out = vec![0; n];
    for (pos, &orig) in order.iter().enumerate() {
        out[orig] = labels[pos];
    }
    Ok(out)
}
