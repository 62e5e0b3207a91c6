use ndarray::{Array2, ArrayView1};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::mmgen::seeded_rng;

const MAX_ITERS: usize = 300;

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: ArrayView1<'_, f64>, centers: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centers.rows().into_iter().enumerate() {
        let d = sq_dist(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centers(x: &Array2<f64>, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    centers.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = x.rows().into_iter().map(|r| sq_dist(r, centers.row(0))).collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            Err(_) => rng.random_range(0..n),
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, r) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centers.row(c)));
        }
    }
    centers
}

fn lloyd(x: &Array2<f64>, k: usize, seed: u64, stream: u64) -> (Vec<usize>, f64) {
    let mut rng = seeded_rng(seed, stream);
    let mut centers = seed_centers(x, k, &mut rng);
    let n = x.nrows();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..MAX_ITERS {
        let next: Vec<(usize, f64)> = x.rows().into_iter().map(|r| nearest(r, &centers)).collect();
        let changed = next.iter().zip(&assign).any(|(a, &b)| a.0 != b);
        for (a, nx) in assign.iter_mut().zip(&next) {
            *a = nx.0;
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros(centers.raw_dim());
        let mut counts = vec![0usize; k];
        for (i, &a) in assign.iter().enumerate() {
            sums.row_mut(a).scaled_add(1.0, &x.row(i));
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            } else {
                // Re-seed an empty cluster at the worst-served point.
                let far = (0..n)
                    .max_by(|&a, &b| next[a].1.total_cmp(&next[b].1).then(b.cmp(&a)))
                    .unwrap_or(0);
                centers.row_mut(c).assign(&x.row(far));
            }
        }
    }
    let inertia = x
        .rows()
        .into_iter()
        .zip(&assign)
        .map(|(r, &a)| sq_dist(r, centers.row(a)))
        .sum();
    (assign, inertia)
}

/// k-means++ with `restarts` independent runs, keeping the lowest inertia
/// (earliest run on ties). Returns raw cluster ids in `0..k`.
pub fn kmeans(x: &Array2<f64>, k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > x.nrows() {
        return invalid(format!("cannot form {k} clusters from {} points", x.nrows()));
    }
    if restarts == 0 {
        return invalid("k-means needs at least one restart");
    }
    let runs: Vec<(Vec<usize>, f64)> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| lloyd(x, k, seed, 1000 + r))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(runs.into_iter().nth(best).map(|r| r.0).unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalmetrics::ari;
    use ndarray::array;

    #[test]
    fn separated_blobs() {
        let x = array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]];
        let a = kmeans(&x, 2, 5, 3).unwrap();
        assert_eq!(ari(&a, &[0, 0, 0, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn deterministic_and_checked() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        assert_eq!(kmeans(&x, 4, 6, 9).unwrap(), kmeans(&x, 4, 6, 9).unwrap());
        assert!(kmeans(&x, 41, 1, 0).is_err());
        assert!(kmeans(&x, 2, 0, 0).is_err());
    }

    #[test]
    fn duplicate_points() {
        let x = Array2::from_elem((5, 2), 1.0);
        let a = kmeans(&x, 3, 2, 0).unwrap();
        assert_eq!(a.len(), 5);
    }
}
