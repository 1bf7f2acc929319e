//! Stationarity between an early and a late window of a trajectory, via the
//! energy distance and a seeded permutation test.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::state::{euclidean, Trajectory};
use crate::stats::thin_indices;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistConvergenceReport {
    /// Energy distance between the two windows.
    pub statistic: f64,
    pub p_value: f64,
    /// `p_value > alpha`: equality of the window distributions not rejected.
    pub converged: bool,
    pub window: usize,
    pub alpha: f64,
    pub permutations: usize,
    /// States actually compared from each window after thinning.
    pub points_per_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTest {
    pub burn_in: usize,
    pub window: usize,
    pub alpha: f64,
    pub permutations: usize,
    pub seed: u64,
    /// Each window is thinned to at most this many evenly spaced states.
    /// Thinning keeps the pairwise-distance matrix small and weakens the
    /// serial correlation that would otherwise break exchangeability.
    pub max_points: usize,
}

impl ConvergenceTest {
    pub fn new(burn_in: usize, window: usize) -> Self {
        ConvergenceTest {
            burn_in,
            window,
            alpha: 0.05,
            permutations: 500,
            seed: 0,
            max_points: 500,
        }
    }
}

pub const MIN_WINDOW: usize = 10;

/// Compares `[burn_in, burn_in + window)` with the last `window` states.
pub fn convergence_test(trajectory: &Trajectory, test: &ConvergenceTest) -> Result<DistConvergenceReport> {
    let states = trajectory.states();
    if test.window < MIN_WINDOW {
        return Err(Error::param(
            "window",
            format!("{} < {MIN_WINDOW}; the statistic is unreliable", test.window),
        ));
    }
    if test.burn_in + 2 * test.window > states.len() {
        return Err(Error::param(
            "window",
            format!(
                "windows overlap: burn_in {} + 2 * window {} > {} states",
                test.burn_in,
                test.window,
                states.len()
            ),
        ));
    }
    if !(test.alpha > 0.0 && test.alpha < 1.0) {
        return Err(Error::param("alpha", format!("{} not in (0, 1)", test.alpha)));
    }
    if test.permutations == 0 {
        return Err(Error::param("permutations", "must be at least 1"));
    }
    if test.max_points < 2 {
        return Err(Error::param("max_points", "must be at least 2"));
    }

    let early = &states[test.burn_in..test.burn_in + test.window];
    let late = &states[states.len() - test.window..];
    let keep = thin_indices(test.window, test.max_points);
    let pooled: Vec<&[f64]> = keep
        .iter()
        .map(|&i| early[i].as_slice())
        .chain(keep.iter().map(|&i| late[i].as_slice()))
        .collect();
    let m = keep.len();
    let dist = DistanceMatrix::new(&pooled);

    let mut labels = vec![0.0; 2 * m];
    labels[m..].iter_mut().for_each(|l| *l = 1.0);
    let statistic = dist.energy(&labels, m);

    let tol = 1e-12 * dist.mean.max(f64::MIN_POSITIVE);
    let exceed = (0..test.permutations)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = rng_from_seed(derive_seed(test.seed, i as u64));
            let mut perm = labels.clone();
            perm.shuffle(&mut rng);
            dist.energy(&perm, m) >= statistic - tol
        })
        .count();
    let p_value = (1 + exceed) as f64 / (1 + test.permutations) as f64;

    Ok(DistConvergenceReport {
        statistic,
        p_value,
        converged: p_value > test.alpha,
        window: test.window,
        alpha: test.alpha,
        permutations: test.permutations,
        points_per_window: m,
    })
}

/// Energy distance `2 E|X-Y| - E|X-X'| - E|Y-Y'|` (V-statistic form).
pub fn energy_distance(x: &[&[f64]], y: &[&[f64]]) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let mean_pair = |a: &[&[f64]], b: &[&[f64]]| {
        a.iter()
            .map(|p| b.iter().map(|q| euclidean(p, q)).sum::<f64>())
            .sum::<f64>()
            / (a.len() * b.len()) as f64
    };
    2.0 * mean_pair(x, y) - mean_pair(x, x) - mean_pair(y, y)
}

struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    row_sums: Vec<f64>,
    total: f64,
    mean: f64,
}

impl DistanceMatrix {
    fn new(points: &[&[f64]]) -> Self {
        let n = points.len();
        let data: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|k| euclidean(points[k / n], points[k % n]))
            .collect();
        let row_sums: Vec<f64> = data.chunks_exact(n.max(1)).map(|r| r.iter().sum()).collect();
        let total: f64 = row_sums.iter().sum();
        DistanceMatrix {
            n,
            data,
            row_sums,
            total,
            mean: total / (n * n) as f64,
        }
    }

    /// Energy distance between the points with `mask == 0` and the `m`
    /// points with `mask == 1`.
    fn energy(&self, mask: &[f64], m: usize) -> f64 {
        let mut yy = 0.0;
        let mut y_rows = 0.0;
        for (i, &w) in mask.iter().enumerate() {
            if w != 0.0 {
                yy += dot(&self.data[i * self.n..(i + 1) * self.n], mask);
                y_rows += self.row_sums[i];
            }
        }
        let xy = y_rows - yy;
        let xx = self.total - 2.0 * xy - yy;
        let nx = (self.n - m) as f64;
        let ny = m as f64;
        2.0 * xy / (nx * ny) - xx / (nx * nx) - yy / (ny * ny)
    }
}

/// Dot product with eight independent accumulators so it vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}
