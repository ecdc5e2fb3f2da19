//! Seeded K-means with k-means++ initialization on row vectors.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_LLOYD_ITERS: usize = 300;

fn sq_dist(points: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    center.iter().enumerate().map(|(c, v)| (points[(i, c)] - v).powi(2)).sum()
}

fn plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let row = |i: usize| points.row(i).iter().copied().collect::<Vec<f64>>();
    let mut centers = vec![row(rng.random_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &DMatrix<f64>, mut centers: Vec<Vec<f64>>) -> (Vec<usize>, f64) {
    let (n, dim) = points.shape();
    let k = centers.len();
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for i in 0..n {
            let (mut best, mut arg) = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(points, i, center);
                if d < best {
                    best = d;
                    arg = c;
                }
            }
            dists[i] = best;
            if labels[i] != arg {
                labels[i] = arg;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for c in 0..dim {
                sums[labels[i]][c] += points[(i, c)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // move an empty center onto the worst-fit point
                let far = (0..n).max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a))).unwrap_or(0);
                centers[c] = points.row(far).iter().copied().collect();
                dists[far] = 0.0;
            }
        }
    }
    let inertia = dists.iter().sum();
    (labels, inertia)
}

/// Clusters the rows of `points` into at most `k` groups, keeping the best
/// of `restarts` seeded runs. Labels are dense in order of first appearance.
pub(crate) fn cluster_rows(points: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Vec<usize> {
    let n = points.nrows();
    if n == 0 {
        return Vec::new();
    }
    let k = k.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts.max(1) {
        let centers = plus_plus(points, k, &mut rng);
        let (labels, inertia) = lloyd(points, centers);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    densify(&best.expect("at least one restart").0)
}

pub(crate) fn densify(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_obvious_groups() {
        let pts = DMatrix::from_row_slice(6, 2, &[0., 0., 0.1, 0., 0., 0.1, 5., 5., 5.1, 5., 5., 5.1]);
        let l = cluster_rows(&pts, 2, 3, 5);
        assert_eq!(l, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn deterministic_for_seed() {
        let pts = DMatrix::from_fn(40, 3, |i, j| ((i * 31 + j * 17) % 13) as f64);
        assert_eq!(cluster_rows(&pts, 4, 9, 3), cluster_rows(&pts, 4, 9, 3));
    }

    #[test]
    fn duplicates_do_not_panic() {
        let pts = DMatrix::from_element(5, 2, 1.0);
        let l = cluster_rows(&pts, 3, 0, 2);
        assert_eq!(l.len(), 5);
    }
}
