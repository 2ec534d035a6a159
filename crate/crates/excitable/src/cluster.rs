//! Lloyd k-means with k-means++ seeding, plus the Davies-Bouldin index used
//! to pick the cluster count when aggregating fixed-point candidates.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_LLOYD_ITERS: usize = 100;
const RESTARTS: u64 = 4;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<DVector<f64>>,
    pub inertia: f64,
}

/// Lloyd iterations from a k-means++ seeding; the best of a few restarts by
/// inertia is returned. Deterministic given `seed`.
pub fn kmeans(points: &[DVector<f64>], k: usize, seed: u64) -> KMeansResult {
    assert!(k >= 1 && k <= points.len(), "k = {k} for {} points", points.len());
    let mut best: Option<KMeansResult> = None;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart));
        let run = lloyd(points, k, &mut rng);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

fn lloyd(points: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let mut centroids = plus_plus_init(points, k, rng);
    let mut assignments = vec![0usize; points.len()];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let nearest = nearest_centroid(p, &centroids);
            if assignments[i] != nearest {
                assignments[i] = nearest;
                changed = true;
            }
        }
        // Means, with empty clusters reseeded on the farthest point.
        let dim = points[0].len();
        let mut sums = vec![DVector::<f64>::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            sums[assignments[i]] += p;
            counts[assignments[i]] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        let da = (*a - &centroids[nearest_centroid(a, &centroids)]).norm();
                        let db = (*b - &centroids[nearest_centroid(b, &centroids)]).norm();
                        da.partial_cmp(&db).unwrap()
                    })
                    .map(|(i, _)| i)
                    .unwrap();
                centroids[c] = points[far].clone();
                changed = true;
            } else {
                centroids[c] = &sums[c] / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| (p - &centroids[a]).norm_squared())
        .sum();
    KMeansResult { assignments, centroids, inertia }
}

fn nearest_centroid(p: &DVector<f64>, centroids: &[DVector<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = (p - centroid).norm_squared();
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn plus_plus_init(points: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].clone());
    while centroids.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| (p - &centroids[nearest_centroid(p, &centroids)]).norm_squared())
            .collect();
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // All points coincide with existing centroids.
            rng.random_range(0..points.len())
        };
        centroids.push(points[idx].clone());
    }
    centroids
}

/// Davies-Bouldin index: mean over clusters of the worst (S_i + S_j) /
/// d(c_i, c_j) ratio. Defined for two or more non-degenerate clusters;
/// coinciding centroids push the index to infinity.
pub fn davies_bouldin(points: &[DVector<f64>], result: &KMeansResult) -> f64 {
    let k = result.centroids.len();
    assert!(k >= 2, "Davies-Bouldin needs at least two clusters");
    let mut scatter = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(&result.assignments) {
        scatter[a] += (p - &result.centroids[a]).norm();
        counts[a] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            scatter[c] /= counts[c] as f64;
        }
    }
    let mut sum = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = (&result.centroids[i] - &result.centroids[j]).norm();
            let ratio = if sep > 0.0 { (scatter[i] + scatter[j]) / sep } else { f64::INFINITY };
            worst = worst.max(ratio);
        }
        sum += worst;
    }
    sum / k as f64
}

/// Runs k-means for every k in `2..=k_max` and keeps the run with the
/// smallest Davies-Bouldin index (ties to the smaller k). With `k_max < 2`
/// everything lands in a single cluster.
pub fn select_k_davies_bouldin(points: &[DVector<f64>], k_max: usize, seed: u64) -> KMeansResult {
    let k_max = k_max.min(points.len());
    if k_max < 2 {
        return kmeans(points, 1, seed);
    }
    let mut best: Option<(f64, KMeansResult)> = None;
    for k in 2..=k_max {
        let run = kmeans(points, k, seed.wrapping_add(1000 * k as u64));
        let db = davies_bouldin(points, &run);
        if best.as_ref().map_or(true, |(b, _)| db < *b) {
            best = Some((db, run));
        }
    }
    best.expect("k_max >= 2").1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: &[f64], n: usize, spread: f64, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                DVector::from_iterator(
                    center.len(),
                    center.iter().map(|&c| c + spread * (rng.random::<f64>() - 0.5)),
                )
            })
            .collect()
    }

    #[test]
    fn three_separated_clusters_selected() {
        // Separation far exceeds spread, so the index bottoms out at k = 3.
        let mut pts = blob(&[0.0, 0.0], 30, 0.01, 1);
        pts.extend(blob(&[10.0, 0.0], 25, 0.01, 2));
        pts.extend(blob(&[0.0, 10.0], 20, 0.01, 3));
        let run = select_k_davies_bouldin(&pts, 8, 7);
        assert_eq!(run.centroids.len(), 3);
        // Members of each blob share an assignment.
        let a0 = run.assignments[0];
        assert!(run.assignments[..30].iter().all(|&a| a == a0));
        let a1 = run.assignments[30];
        assert!(run.assignments[30..55].iter().all(|&a| a == a1));
        let a2 = run.assignments[55];
        assert!(run.assignments[55..].iter().all(|&a| a == a2));
        assert!(a0 != a1 && a1 != a2 && a0 != a2);
    }

    #[test]
    fn db_prefers_true_k_over_neighbours() {
        let mut pts = blob(&[0.0, 0.0], 40, 0.05, 4);
        pts.extend(blob(&[5.0, 5.0], 40, 0.05, 5));
        pts.extend(blob(&[-5.0, 5.0], 40, 0.05, 6));
        let mut dbs = Vec::new();
        for k in 2..=6 {
            let run = kmeans(&pts, k, 11);
            dbs.push((k, davies_bouldin(&pts, &run)));
        }
        let best = dbs.iter().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap().0;
        assert_eq!(best, 3, "indices {dbs:?}");
    }

    #[test]
    fn single_point_single_cluster() {
        let pts = vec![DVector::from_vec(vec![1.0, 2.0])];
        let run = select_k_davies_bouldin(&pts, 10, 0);
        assert_eq!(run.centroids.len(), 1);
        assert_eq!(run.assignments, vec![0]);
    }

    #[test]
    fn identical_points_do_not_panic() {
        let pts = vec![DVector::from_vec(vec![0.5, 0.5]); 20];
        let run = select_k_davies_bouldin(&pts, 5, 3);
        // Any outcome is fine as long as representatives coincide.
        for c in &run.centroids {
            assert!((c - &pts[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn kmeans_deterministic() {
        let pts = blob(&[0.0, 0.0], 50, 1.0, 9);
        let a = kmeans(&pts, 4, 42);
        let b = kmeans(&pts, 4, 42);
        assert_eq!(a.assignments, b.assignments);
    }
}
