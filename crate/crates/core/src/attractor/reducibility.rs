//! How much of the next state is explained by the current symbol alone.
//!
//! The best memoryless predictor `phi(s)` under squared error is the mean
//! next state among steps that consumed `s`. Its in-sample R^2 is 1 when
//! states are a lookup of the input and near 0 when they ignore it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{squared_euclidean, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducibilityReport {
    pub r2: f64,
    pub sse: f64,
    pub sst: f64,
    pub n_symbols: usize,
    pub samples: usize,
}

pub const MIN_STATES: usize = 10;

pub fn symbolic_reducibility(trajectory: &Trajectory) -> Result<ReducibilityReport> {
    let states = trajectory.states();
    if states.len() < MIN_STATES {
        return Err(Error::InsufficientData(format!(
            "{} states < {MIN_STATES}",
            states.len()
        )));
    }
    let dim = trajectory.dim();
    let targets = &states[1..];
    let inputs = trajectory.inputs();

    let mut groups: BTreeMap<u64, (Vec<f64>, usize)> = BTreeMap::new();
    let mut overall = vec![0.0; dim];
    for (s, a) in inputs.iter().zip(targets) {
        let g = groups.entry(s.id).or_insert_with(|| (vec![0.0; dim], 0));
        g.0.iter_mut().zip(a.as_slice()).for_each(|(m, x)| *m += x);
        g.1 += 1;
        overall.iter_mut().zip(a.as_slice()).for_each(|(m, x)| *m += x);
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two distinct input ids".into(),
        ));
    }
    for (sum, count) in groups.values_mut() {
        sum.iter_mut().for_each(|m| *m /= *count as f64);
    }
    let n = targets.len();
    overall.iter_mut().for_each(|m| *m /= n as f64);

    let mut sse = 0.0;
    let mut sst = 0.0;
    for (s, a) in inputs.iter().zip(targets) {
        sse += squared_euclidean(a.as_slice(), &groups[&s.id].0);
        sst += squared_euclidean(a.as_slice(), &overall);
    }
    if sst <= 0.0 {
        return Err(Error::ZeroVariance("next states (constant trajectory)"));
    }
    Ok(ReducibilityReport {
        r2: (1.0 - sse / sst).clamp(0.0, 1.0),
        sse,
        sst,
        n_symbols: groups.len(),
        samples: n,
    })
}
