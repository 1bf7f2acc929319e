//! Empirical contraction rate of the update map.
//!
//! Each probe runs a base trajectory and a companion started a small
//! distance away. Both see the same noise draws, and the ratio is taken on
//! the difference of the `f`-images, so the noise cancels exactly. After
//! every step the companion is pulled back to the probe distance along the
//! current difference direction (Benettin renormalization); without it the
//! difference would underflow in contracting phases or lose all precision
//! against a large state in expanding ones.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{initial_state, make_map, InputSchedule, MapSpec, NoiseSpec, RecursiveMap};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::state::{norm, SymbolicInput};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// Median over probes of the geometric-mean tail ratio.
    pub l_hat: f64,
    /// First step from which every moving window of pooled log-ratios is
    /// contracting. `None` when contraction never settles in.
    pub onset_estimate: Option<u64>,
    /// Probes that contributed.
    pub probes: usize,
    pub discarded: usize,
    pub per_probe_ratios: Vec<f64>,
}

/// Parameters for [`estimate_lipschitz`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzProbe {
    pub steps: usize,
    pub probes: usize,
    /// Probe distance relative to `max(1, ||A_n||)`.
    pub perturbation: f64,
    pub seed: u64,
    /// Length of the moving window used for the onset estimate.
    pub onset_window: usize,
}

impl Default for LipschitzProbe {
    fn default() -> Self {
        LipschitzProbe {
            steps: 1000,
            probes: 32,
            perturbation: 1e-6,
            seed: 0,
            onset_window: 16,
        }
    }
}

/// Floor applied to ratios before taking logs when pooling.
const LOG_FLOOR: f64 = 1e-300;

pub fn estimate_lipschitz(
    map_spec: &MapSpec,
    noise: &NoiseSpec,
    inputs: &InputSchedule,
    probe: &LipschitzProbe,
) -> Result<LipschitzEstimate> {
    let map = make_map(map_spec)?;
    noise.validate()?;
    if probe.probes == 0 {
        return Err(Error::param("probes", "must be at least 1"));
    }
    if probe.steps < 2 {
        return Err(Error::param("steps", "must be at least 2"));
    }
    if !(probe.perturbation.is_finite() && probe.perturbation > 0.0) {
        return Err(Error::param("perturbation", "must be positive and finite"));
    }
    if probe.onset_window == 0 {
        return Err(Error::param("onset_window", "must be positive"));
    }
    let inputs = inputs.take(probe.steps)?;

    let runs: Vec<Option<Vec<f64>>> = (0..probe.probes)
        .into_par_iter()
        .map(|p| run_probe(&map, noise, &inputs, probe, derive_seed(probe.seed, p as u64)))
        .collect::<Result<_>>()?;
    let kept: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::AllProbesDiscarded(probe.probes));
    }

    let tail_start = probe.steps / 2;
    let per_probe_ratios: Vec<f64> = kept
        .iter()
        .map(|ratios| geometric_mean(&ratios[tail_start..]))
        .collect();
    let l_hat = stats::median(&per_probe_ratios);

    let pooled: Vec<f64> = (0..probe.steps)
        .map(|n| kept.iter().map(|r| r[n].max(LOG_FLOOR).ln()).sum::<f64>() / kept.len() as f64)
        .collect();
    let onset_estimate = contraction_onset(&pooled, probe.onset_window.min(probe.steps));

    Ok(LipschitzEstimate {
        l_hat,
        onset_estimate,
        probes: kept.len(),
        discarded: probe.probes - kept.len(),
        per_probe_ratios,
    })
}

fn geometric_mean(ratios: &[f64]) -> f64 {
    if ratios.contains(&0.0) {
        return 0.0;
    }
    (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
}

/// Smallest `m` such that every window of `log_ratios` starting at or after
/// `m` has negative mean.
pub(crate) fn contraction_onset(log_ratios: &[f64], window: usize) -> Option<u64> {
    let last_start = log_ratios.len() - window;
    let mut sum: f64 = log_ratios[last_start..].iter().sum();
    let mut onset = None;
    for start in (0..=last_start).rev() {
        if start < last_start {
            sum += log_ratios[start] - log_ratios[start + window];
        }
        if sum >= 0.0 {
            break;
        }
        onset = Some(start as u64);
    }
    onset
}

/// Returns the per-step ratios, or `None` if the probe was discarded.
fn run_probe(
    map: &RecursiveMap,
    noise: &NoiseSpec,
    inputs: &[SymbolicInput],
    probe: &LipschitzProbe,
    seed: u64,
) -> Result<Option<Vec<f64>>> {
    let dim = map.dim();
    let mut rng = rng_from_seed(seed);
    let mut base = initial_state(&mut rng, dim).into_vec();
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let dn = norm(&dir);
    if dn == 0.0 {
        dir[0] = 1.0;
    } else {
        dir.iter_mut().for_each(|x| *x /= dn);
    }

    let scale = |state: &[f64]| probe.perturbation * norm(state).max(1.0);
    let place = |base: &[f64], dir: &[f64], comp: &mut Vec<f64>| -> Option<f64> {
        let h = scale(base);
        for ((c, b), u) in comp.iter_mut().zip(base).zip(dir) {
            *c = b + h * u;
        }
        let actual: f64 = comp
            .iter()
            .zip(base)
            .map(|(c, b)| (c - b) * (c - b))
            .sum::<f64>()
            .sqrt();
        (actual.is_normal()).then_some(actual)
    };

    let mut comp = vec![0.0; dim];
    let Some(mut delta_norm) = place(&base, &dir, &mut comp) else {
        return Ok(None);
    };

    let mut f_base = vec![0.0; dim];
    let mut f_comp = vec![0.0; dim];
    let mut eps = vec![0.0; dim];
    let mut ratios = Vec::with_capacity(inputs.len());
    for (n, input) in inputs.iter().enumerate() {
        map.apply_into(&base, input, n as u64, &mut f_base);
        map.apply_into(&comp, input, n as u64, &mut f_comp);
        let diff: Vec<f64> = f_comp.iter().zip(&f_base).map(|(c, b)| c - b).collect();
        let diff_norm = norm(&diff);
        if !diff_norm.is_finite() {
            return Err(Error::Diverged { step: n as u64 });
        }
        ratios.push(diff_norm / delta_norm);
        if diff_norm > 0.0 {
            dir.iter_mut().zip(&diff).for_each(|(u, d)| *u = d / diff_norm);
        }
        noise.draw_into(&mut rng, &mut eps);
        for ((b, f), e) in base.iter_mut().zip(&f_base).zip(&eps) {
            *b = f + e;
        }
        if base.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { step: n as u64 });
        }
        match place(&base, &dir, &mut comp) {
            Some(d) => delta_norm = d,
            None => return Ok(None),
        }
    }
    Ok(Some(ratios))
}
