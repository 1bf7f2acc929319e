//! Epistemic tension `xi_n = ||A_{n+1} - A_n||_2` and its moment and
//! persistence diagnostics.

use serde::{Deserialize, Serialize};

use crate::dynamics::{MapFamily, MapSpec, NoiseSpec};
use crate::error::{Error, Result};
use crate::state::{euclidean, Trajectory};
use crate::stats;

/// The tension series of a trajectory, one value per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensionTrace {
    pub values: Vec<f64>,
    pub dim: usize,
    /// Leading entries excluded from summaries.
    pub burn_in: usize,
}

/// Default burn-in: the first tenth of the series.
pub fn default_burn_in(len: usize) -> usize {
    len / 10
}

/// Computes `xi_k = ||states[k + 1] - states[k]||` for every step.
///
/// The burn-in is set to [`default_burn_in`]; use
/// [`TensionTrace::with_burn_in`] to override it.
pub fn tension_series(trajectory: &Trajectory) -> Result<TensionTrace> {
    let states = trajectory.states();
    if states.len() < 2 {
        return Err(Error::InsufficientData(
            "tension needs at least two states".into(),
        ));
    }
    let values: Vec<f64> = states
        .windows(2)
        .map(|w| euclidean(w[1].as_slice(), w[0].as_slice()))
        .collect();
    let burn_in = default_burn_in(values.len());
    Ok(TensionTrace {
        values,
        dim: trajectory.dim(),
        burn_in,
    })
}

impl TensionTrace {
    pub fn with_burn_in(mut self, burn_in: usize) -> Result<Self> {
        if burn_in >= self.values.len() {
            return Err(Error::param(
                "burn_in",
                format!("{burn_in} leaves no entries of {}", self.values.len()),
            ));
        }
        self.burn_in = burn_in;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries after the burn-in.
    pub fn tail(&self) -> &[f64] {
        &self.values[self.burn_in.min(self.values.len())..]
    }

    pub fn summary(&self) -> TensionSummary {
        let tail = self.tail();
        let sq: Vec<f64> = tail.iter().map(|x| x * x).collect();
        TensionSummary {
            len: self.values.len(),
            burn_in: self.burn_in,
            mean: stats::mean(tail),
            std: stats::variance(tail).sqrt(),
            min: tail.iter().copied().fold(f64::INFINITY, f64::min),
            max: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_sq: stats::mean(&sq),
        }
    }
}

/// Post-burn-in summary statistics of a tension trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensionSummary {
    pub len: usize,
    pub burn_in: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub mean_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBoundReport {
    /// Mean of `xi^2` over the checked window.
    pub window_mean_sq: f64,
    /// The caller's `eps + eta`.
    pub bound: f64,
    pub satisfied: bool,
    pub window: usize,
}

/// Checks the windowed second moment of the tension against `bound`.
///
/// The window is the last `window` entries; it must fit after the burn-in.
/// A satisfied bound says nothing about convergence on its own: a random
/// walk has bounded tension while drifting away from every fixed set.
pub fn moment_bound_check(trace: &TensionTrace, bound: f64, window: usize) -> Result<MomentBoundReport> {
    if trace.is_empty() {
        return Err(Error::Empty("tension trace"));
    }
    let available = trace.len().saturating_sub(trace.burn_in);
    if window == 0 || window > available {
        return Err(Error::param(
            "window",
            format!("{window} not in [1, {available}] (entries after burn-in)"),
        ));
    }
    if bound.is_nan() {
        return Err(Error::param("bound", "is NaN"));
    }
    let tail = &trace.values[trace.len() - window..];
    let window_mean_sq = tail.iter().map(|x| x * x).sum::<f64>() / window as f64;
    Ok(MomentBoundReport {
        window_mean_sq,
        bound,
        satisfied: window_mean_sq <= bound,
        window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub persistent: bool,
    pub threshold: f64,
    pub min_run: usize,
    /// Start index of the longest run strictly above the threshold.
    pub longest_start: usize,
    pub longest_len: usize,
}

/// Looks for a run of at least `min_run` consecutive entries strictly above
/// `epsilon_threshold`.
pub fn persistence_check(
    trace: &TensionTrace,
    epsilon_threshold: f64,
    min_run: usize,
) -> Result<PersistenceReport> {
    if trace.is_empty() {
        return Err(Error::Empty("tension trace"));
    }
    if min_run == 0 {
        return Err(Error::param("min_run", "must be positive"));
    }
    let (mut best_start, mut best_len) = (0, 0);
    let mut run_start = 0;
    let mut run_len = 0;
    for (i, &x) in trace.values.iter().enumerate() {
        if x > epsilon_threshold {
            if run_len == 0 {
                run_start = i;
            }
            run_len += 1;
            if run_len > best_len {
                best_start = run_start;
                best_len = run_len;
            }
        } else {
            run_len = 0;
        }
    }
    Ok(PersistenceReport {
        persistent: best_len >= min_run,
        threshold: epsilon_threshold,
        min_run,
        longest_start: best_start,
        longest_len: best_len,
    })
}

/// Stationary `E[xi^2] = 2 d sigma^2 / (1 + L)` for input-free affine maps
/// (and the contracting phase of delayed maps) with `L < 1`.
pub fn stationary_mean_sq(spec: &MapSpec, noise: &NoiseSpec) -> Option<f64> {
    let lipschitz = match &spec.family {
        MapFamily::Affine {
            lipschitz,
            input_offsets,
            ..
        } if input_offsets.is_empty() => *lipschitz,
        MapFamily::DelayedContraction { lipschitz, .. } => *lipschitz,
        _ => return None,
    };
    if lipschitz >= 1.0 {
        return None;
    }
    Some(2.0 * spec.dim as f64 * noise.variance() / (1.0 + lipschitz))
}

/// Default `eps + eta`: twice the closed-form stationary value when one
/// exists and is positive, otherwise the 90th percentile of the observed
/// post-burn-in `xi^2`.
pub fn default_bound(trace: &TensionTrace, spec: Option<&MapSpec>, noise: Option<&NoiseSpec>) -> f64 {
    if let (Some(spec), Some(noise)) = (spec, noise) {
        if let Some(v) = stationary_mean_sq(spec, noise).filter(|v| *v > 0.0) {
            return 2.0 * v;
        }
    }
    let sq: Vec<f64> = trace.tail().iter().map(|x| x * x).collect();
    stats::quantile(&sq, 0.9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{State, SymbolicInput};

    fn traj(points: &[&[f64]]) -> Trajectory {
        let states = points.iter().map(|p| State::new(p.to_vec()).unwrap()).collect();
        let inputs = (1..points.len()).map(|_| SymbolicInput::new(0)).collect();
        Trajectory::new(states, inputs).unwrap()
    }

    fn trace(values: &[f64]) -> TensionTrace {
        TensionTrace {
            values: values.to_vec(),
            dim: 1,
            burn_in: 0,
        }
    }

    #[test]
    fn three_four_five() {
        let t = tension_series(&traj(&[&[0.0, 0.0], &[3.0, 4.0]])).unwrap();
        assert_eq!(t.values, vec![5.0]);
    }

    #[test]
    fn constant_trajectory_has_zero_tension() {
        let t = tension_series(&traj(&[&[1.5, -2.0][..]; 6])).unwrap();
        assert!(t.values.iter().all(|x| *x == 0.0));
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn single_state_rejected() {
        assert!(tension_series(&traj(&[&[1.0]])).is_err());
    }

    #[test]
    fn moment_bound_on_zero_trace() {
        let r = moment_bound_check(&trace(&[0.0; 20]), 0.1, 10).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.window_mean_sq, 0.0);
    }

    #[test]
    fn moment_bound_uses_last_window() {
        let r = moment_bound_check(&trace(&[10.0, 1.0, 3.0]), 5.0, 2).unwrap();
        assert_eq!(r.window_mean_sq, 5.0);
        assert!(r.satisfied);
        let r = moment_bound_check(&trace(&[10.0, 1.0, 3.0]), 4.999, 2).unwrap();
        assert!(!r.satisfied);
    }

    #[test]
    fn moment_bound_window_errors() {
        let mut t = trace(&[1.0; 10]);
        t.burn_in = 5;
        assert!(moment_bound_check(&t, 1.0, 6).is_err());
        assert!(moment_bound_check(&t, 1.0, 5).is_ok());
        assert!(moment_bound_check(&trace(&[]), 1.0, 1).is_err());
    }

    #[test]
    fn persistence_examples() {
        let r = persistence_check(&trace(&[0.0; 30]), 0.01, 5).unwrap();
        assert!(!r.persistent);
        assert_eq!(r.longest_len, 0);

        let r = persistence_check(&trace(&[0.2, 0.2, 0.2, 0.0]), 0.1, 3).unwrap();
        assert!(r.persistent);
        assert_eq!((r.longest_start, r.longest_len), (0, 3));

        let r = persistence_check(&trace(&[0.2, 0.0, 0.3, 0.3, 0.0, 0.5]), 0.1, 3).unwrap();
        assert!(!r.persistent);
        assert_eq!((r.longest_start, r.longest_len), (2, 2));
    }

    #[test]
    fn closed_form_values() {
        let v = stationary_mean_sq(&MapSpec::affine(2, 0.5, 0.0), &NoiseSpec::gaussian(0.1)).unwrap();
        assert!((v - 0.04 / 1.5).abs() < 1e-15);
        assert!(stationary_mean_sq(&MapSpec::affine(2, 1.0, 0.0), &NoiseSpec::gaussian(0.1)).is_none());
        assert!(stationary_mean_sq(&MapSpec::rotation_contraction(2, 0.5, 0.1, 1.0), &NoiseSpec::gaussian(0.1)).is_none());
    }

    #[test]
    fn default_bound_falls_back_to_percentile() {
        let t = trace(&(1..=10).map(|x| (x as f64).sqrt()).collect::<Vec<_>>());
        assert!((default_bound(&t, None, None) - 9.1).abs() < 1e-12);
        let spec = MapSpec::affine(1, 0.5, 0.0);
        let b = default_bound(&t, Some(&spec), Some(&NoiseSpec::gaussian(0.3)));
        assert!((b - 2.0 * 2.0 * 0.09 / 1.5).abs() < 1e-12);
        // zero noise has no useful closed form
        assert!((default_bound(&t, Some(&spec), Some(&NoiseSpec::none())) - 9.1).abs() < 1e-12);
    }
}
