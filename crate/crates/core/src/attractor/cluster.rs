//! Modular attractors as clusters of tail states.
//!
//! k is chosen by mean silhouette over `2..=k_max`; when no split reaches
//! [`SILHOUETTE_FLOOR`] the tail is treated as a single attractor. Clustering
//! and silhouettes run on an evenly thinned sample of at most `max_points`
//! states, then every tail state is assigned to its nearest centroid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::state::{euclidean, squared_euclidean, State};
use crate::stats::thin_indices;

pub const SILHOUETTE_FLOOR: f64 = 0.25;
pub const DEFAULT_K_MAX: usize = 8;

const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSet {
    pub k: usize,
    pub centroids: Vec<State>,
    /// Indices into the tail states, one list per attractor.
    pub member_indices: Vec<Vec<usize>>,
    /// Mean distance of members to their centroid.
    pub dispersion: Vec<f64>,
    /// Mean silhouette for each candidate `k = 2..=k_max` (`None` where the
    /// sample could not support `k` distinct centroids).
    pub silhouette_by_k: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub k_max: usize,
    pub seed: u64,
    pub max_points: usize,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            k_max: DEFAULT_K_MAX,
            seed: 0,
            max_points: 2000,
        }
    }
}

pub fn find_attractors(tail_states: &[State], k_max: usize, seed: u64) -> Result<AttractorSet> {
    find_attractors_with(
        tail_states,
        &ClusterOptions {
            k_max,
            seed,
            ..Default::default()
        },
    )
}

pub fn find_attractors_with(tail_states: &[State], opts: &ClusterOptions) -> Result<AttractorSet> {
    if tail_states.is_empty() {
        return Err(Error::Empty("tail states"));
    }
    if opts.k_max < 1 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    if tail_states.len() < 2 * opts.k_max {
        return Err(Error::InsufficientData(format!(
            "{} tail states < 2 * k_max = {}",
            tail_states.len(),
            2 * opts.k_max
        )));
    }
    let dim = tail_states[0].dim();
    if let Some(bad) = tail_states.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }

    let sample: Vec<&[f64]> = thin_indices(tail_states.len(), opts.max_points.max(2 * opts.k_max))
        .into_iter()
        .map(|i| tail_states[i].as_slice())
        .collect();

    let mut rng = rng_from_seed(opts.seed);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut silhouette_by_k = Vec::new();
    for k in 2..=opts.k_max {
        let Some((centroids, labels)) = kmeans(&sample, k, &mut rng) else {
            silhouette_by_k.push(None);
            continue;
        };
        let s = silhouette(&sample, &labels, k);
        silhouette_by_k.push(Some(s));
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, centroids));
        }
    }
    let centroids = match best {
        Some((s, c)) if s >= SILHOUETTE_FLOOR => c,
        _ => vec![mean_of(tail_states.iter().map(|s| s.as_slice()), dim)],
    };

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); centroids.len()];
    for (i, s) in tail_states.iter().enumerate() {
        members[nearest(&centroids, s.as_slice())].push(i);
    }
    members.retain(|m| !m.is_empty());
    let mut clusters: Vec<(State, Vec<usize>, f64)> = members
        .into_iter()
        .map(|idx| {
            let c = mean_of(idx.iter().map(|&i| tail_states[i].as_slice()), dim);
            let disp = idx.iter().map(|&i| euclidean(tail_states[i].as_slice(), &c)).sum::<f64>()
                / idx.len() as f64;
            (State::from_vec_unchecked(c), idx, disp)
        })
        .collect();
    clusters.sort_by(|a, b| {
        a.0.as_slice()
            .iter()
            .zip(b.0.as_slice())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut out = AttractorSet {
        k: clusters.len(),
        centroids: Vec::with_capacity(clusters.len()),
        member_indices: Vec::with_capacity(clusters.len()),
        dispersion: Vec::with_capacity(clusters.len()),
        silhouette_by_k,
    };
    for (c, m, d) in clusters {
        out.centroids.push(c);
        out.member_indices.push(m);
        out.dispersion.push(d);
    }
    Ok(out)
}

fn mean_of<'a>(points: impl Iterator<Item = &'a [f64]>, dim: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for p in points {
        sum.iter_mut().zip(p).for_each(|(s, x)| *s += x);
        n += 1;
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    sum
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_euclidean(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// k-means++ seeding followed by Lloyd iterations. Returns `None` when the
/// points do not contain `k` distinct locations.
fn kmeans(points: &[&[f64]], k: usize, rng: &mut SimRng) -> Option<(Vec<Vec<f64>>, Vec<usize>)> {
    let dim = points[0].len();
    let mut centroids: Vec<Vec<f64>> = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_euclidean(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, w) in d2.iter().enumerate() {
            if target < *w {
                pick = i;
                break;
            }
            target -= w;
        }
        let c = points[pick].to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_euclidean(p, &c));
        }
        centroids.push(c);
    }

    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for (l, p) in labels.iter_mut().zip(points) {
            let j = nearest(&centroids, p);
            if *l != j {
                *l = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (l, p) in labels.iter().zip(points) {
            counts[*l] += 1;
            sums[*l].iter_mut().zip(*p).for_each(|(s, x)| *s += x);
        }
        for j in 0..k {
            if counts[j] == 0 {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        squared_euclidean(points[a], &centroids[labels[a]])
                            .total_cmp(&squared_euclidean(points[b], &centroids[labels[b]]))
                    })
                    .unwrap_or(0);
                centroids[j] = points[far].to_vec();
            } else {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|l| counts[*l] += 1);
    if counts.contains(&0) {
        return None;
    }
    Some((centroids, labels))
}

/// Mean silhouette; members of singleton clusters score 0.
fn silhouette(points: &[&[f64]], labels: &[usize], k: usize) -> f64 {
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|l| counts[*l] += 1);
    let n = points.len();
    let total: f64 = (0..n)
        .map(|i| {
            let own = labels[i];
            if counts[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += euclidean(points[i], points[j]);
                }
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && counts[c] > 0)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .sum();
    total / n as f64
}

/// Smallest Euclidean distance from `state` to any member.
pub fn dist_to_attractor(state: &State, attractor_members: &[State]) -> Result<f64> {
    if attractor_members.is_empty() {
        return Err(Error::Empty("attractor members"));
    }
    let mut best = f64::INFINITY;
    for m in attractor_members {
        if m.dim() != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: state.dim(),
                found: m.dim(),
            });
        }
        best = best.min(squared_euclidean(state.as_slice(), m.as_slice()));
    }
    Ok(best.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[f64]]) -> Vec<State> {
        v.iter().map(|p| State::new(p.to_vec()).unwrap()).collect()
    }

    #[test]
    fn two_identical_points_single_attractor() {
        let s = pts(&[&[1.5, 2.0], &[1.5, 2.0]]);
        let a = find_attractors(&s, 1, 0).unwrap();
        assert_eq!(a.k, 1);
        assert_eq!(a.centroids[0], s[0]);
        assert_eq!(a.member_indices, vec![vec![0, 1]]);
        assert_eq!(a.dispersion, vec![0.0]);
    }

    #[test]
    fn separated_blobs() {
        let mut v = Vec::new();
        for i in 0..30 {
            let e = (i as f64 * 0.37).sin() * 0.1;
            v.push(vec![-5.0 + e, e]);
            v.push(vec![5.0 - e, 1.0 + e]);
            v.push(vec![0.0 + e, 9.0]);
        }
        let s: Vec<State> = v.into_iter().map(|p| State::new(p).unwrap()).collect();
        let a = find_attractors(&s, 5, 3).unwrap();
        assert_eq!(a.k, 3);
        assert!((a.centroids[0][0] + 5.0).abs() < 0.1);
        assert_eq!(a.member_indices.iter().map(Vec::len).sum::<usize>(), 90);
    }

    #[test]
    fn identical_points_fall_back_to_one() {
        let s = pts(&[&[1.0][..]; 10]);
        let a = find_attractors(&s, 3, 0).unwrap();
        assert_eq!(a.k, 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(find_attractors(&[], 2, 0), Err(Error::Empty(_))));
        let s = pts(&[&[1.0][..]; 3]);
        assert!(find_attractors(&s, 0, 0).is_err());
        assert!(find_attractors(&s, 2, 0).is_err());
    }

    #[test]
    fn distance_examples() {
        let members = pts(&[&[4.0]]);
        assert_eq!(dist_to_attractor(&pts(&[&[3.5]])[0], &members).unwrap(), 0.5);
        assert_eq!(dist_to_attractor(&members[0], &members).unwrap(), 0.0);
        assert!(dist_to_attractor(&members[0], &[]).is_err());
        assert!(dist_to_attractor(&pts(&[&[1.0, 2.0]])[0], &members).is_err());
    }
}
