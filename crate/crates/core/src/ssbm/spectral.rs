//! Spectral clustering of the binarized adjacency matrix.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{BlockAssignment, SignedNetwork};

const KMEANS_RESTARTS: usize = 25;
const KMEANS_MAX_ITER: usize = 300;

fn adjacency_times(net: &SignedNetwork, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|col| {
            (0..net.n_nodes())
                .map(|i| net.neighbors(i).iter().map(|&(j, _)| col[j]).sum())
                .collect()
        })
        .collect()
}

fn orthonormalize(cols: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for c in 0..cols.len() {
        for _ in 0..3 {
            for prev in 0..c {
                let (head, tail) = cols.split_at_mut(c);
                let d: f64 = head[prev].iter().zip(&tail[0]).map(|(a, b)| a * b).sum();
                for (x, p) in tail[0].iter_mut().zip(&head[prev]) {
                    *x -= d * p;
                }
            }
            let norm = cols[c].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-10 {
                cols[c].iter_mut().for_each(|x| *x /= norm);
                break;
            }
            // column collapsed into the span of the others; restart it randomly
            cols[c].iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        }
    }
}

/// The `k` eigenpairs of largest absolute eigenvalue of the binarized
/// adjacency, by block subspace iteration with a Rayleigh-Ritz finish.
/// Eigenvectors are returned as columns of length `N`.
pub fn leading_eigenvectors(net: &SignedNetwork, k: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = net.n_nodes();
    let m = (k + 8).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
    orthonormalize(&mut q, &mut rng);
    let mut prev_vals: Vec<f64> = Vec::new();
    let mut ritz = (Vec::new(), Matrix::zeros(m, m));
    for iter in 0..1000 {
        let mut aq = adjacency_times(net, &q);
        if iter % 10 == 9 || iter == 999 {
            let h = Matrix::from_fn(m, m, |a, b| q[a].iter().zip(&aq[b]).map(|(x, y)| x * y).sum::<f64>());
            let mut h = h;
            h.symmetrize();
            let (vals, vecs) = h.symmetric_eigen();
            let mut sorted: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let top = sorted.first().copied().unwrap_or(0.0).max(1e-300);
            let done = prev_vals.len() == sorted.len()
                && sorted.iter().zip(&prev_vals).take(k).all(|(a, b)| (a - b).abs() <= 1e-10 * top);
            prev_vals = sorted;
            ritz = (vals, vecs);
            if done || iter == 999 {
                break;
            }
        }
        orthonormalize(&mut aq, &mut rng);
        q = aq;
    }
    let (vals, vecs) = ritz;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| vals[b].abs().partial_cmp(&vals[a].abs()).unwrap().then(a.cmp(&b)));
    order.truncate(k);
    let values = order.iter().map(|&c| vals[c]).collect();
    let vectors = order
        .iter()
        .map(|&c| (0..n).map(|i| (0..m).map(|a| q[a][i] * vecs[(a, c)]).sum()).collect())
        .collect();
    (values, vectors)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iterations from a k-means++ seeding; returns labels and the
/// within-cluster sum of squares.
fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, centers.last().unwrap()));
        }
    }
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| squared_distance(p, &centers[a]).partial_cmp(&squared_distance(p, &centers[b])).unwrap())
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // move an empty center onto the point farthest from its own center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        squared_distance(&points[a], &centers[labels[a]])
                            .partial_cmp(&squared_distance(&points[b], &centers[labels[b]]))
                            .unwrap()
                    })
                    .unwrap();
                centers[c] = points[far].clone();
                labels[far] = c;
            }
        }
    }
    let wcss = points.iter().zip(&labels).map(|(p, &l)| squared_distance(p, &centers[l])).sum();
    (labels, wcss)
}

/// Clusters the rows of the `K` leading eigenvectors of the unsigned adjacency
/// with k-means (25 restarts, best within-cluster sum of squares).
pub fn spectral_baseline(net: &SignedNetwork, k: usize, seed: u64) -> Result<BlockAssignment> {
    let n = net.n_nodes();
    if k < 2 {
        return Err(Error::invalid("spectral clustering needs K >= 2"));
    }
    if k > n {
        return Err(Error::invalid(format!("K = {k} exceeds the number of nodes {n}")));
    }
    let (values, vectors) = leading_eigenvectors(net, k, seed);
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let informative = values.iter().filter(|v| v.abs() > 1e-8 * top.max(1.0)).count();
    if informative < k {
        warn!("only {informative} informative eigenvectors for K = {k}; spectral clustering is best effort");
    }
    let points: Vec<Vec<f64>> = (0..n).map(|i| vectors.iter().map(|v| v[i]).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (labels, wcss) = kmeans_once(&points, k, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| wcss < *b) {
            best = Some((labels, wcss));
        }
    }
    BlockAssignment::new(best.unwrap().0, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::yules_phi;
    use crate::network::Sign;

    fn cliques(sizes: &[usize]) -> (SignedNetwork, BlockAssignment) {
        let mut labels = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(b, s));
        }
        let n = labels.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if labels[i] == labels[j] {
                    edges.push((i, j, Sign::Pos));
                }
            }
        }
        (SignedNetwork::from_edges(n, edges).unwrap(), BlockAssignment::new(labels, sizes.len()).unwrap())
    }

    #[test]
    fn disconnected_cliques_recovered() {
        let (y, truth) = cliques(&[25, 25]);
        let z = spectral_baseline(&y, 2, 0).unwrap();
        assert_eq!(yules_phi(&truth, &z).unwrap(), 1.0);
        let (y, truth) = cliques(&[10, 12, 15]);
        assert_eq!(yules_phi(&truth, &spectral_baseline(&y, 3, 4).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn eigenvalues_of_complete_graph() {
        let n = 12;
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, Sign::Neg)));
        let y = SignedNetwork::from_edges(n, edges).unwrap();
        let (vals, _) = leading_eigenvectors(&y, 2, 1);
        assert!((vals[0] - 11.0).abs() < 1e-8);
        assert!((vals[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (y, _) = cliques(&[8, 8, 8]);
        assert_eq!(spectral_baseline(&y, 3, 9).unwrap(), spectral_baseline(&y, 3, 9).unwrap());
    }

    #[test]
    fn rejects_bad_k() {
        let (y, _) = cliques(&[3, 3]);
        assert!(spectral_baseline(&y, 1, 0).is_err());
        assert!(spectral_baseline(&y, 7, 0).is_err());
    }
}
